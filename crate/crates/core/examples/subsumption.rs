//! Subsumption checks and pruning of redundant rewritten rules.

use magistral::optimizer::{prune_redundant, subsumes_exact, subsumes_greedy, PruneMode};
use magistral::parser::{format_program, parse_program, parse_program_with, ParseOptions};
use magistral::rewriter::dms;

fn main() -> magistral::Result<()> {
    let rules = parse_program_with("p(X) :- q(X,Y), r(Y).\np(a) :- q(a,b), r(b), s(a).", ParseOptions::unchecked())?
        .program
        .rules;
    let witness = subsumes_greedy(&rules[0], &rules[1]);
    println!("greedy witness: {:?}", witness.map(|w| w.theta));
    println!("exact: {}", subsumes_exact(&rules[0], &rules[1])?);

    let src = parse_program(include_str!("../data/psc.dl"))?;
    let rewritten = dms(&src.query.expect("query").atoms[0], &src.program)?.program();
    let pruned = prune_redundant(&rewritten, PruneMode::Greedy)?;
    println!("{} rules before, {} after", rewritten.rules.len(), pruned.rules.len());
    print!("{}", format_program(&pruned));
    Ok(())
}
