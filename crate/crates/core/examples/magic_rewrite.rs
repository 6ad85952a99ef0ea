//! The magic-set rewriting of the strategic companies program for `sc(c)`.

use magistral::parser::{format_program, parse_program};
use magistral::rewriter::dms;

fn main() -> magistral::Result<()> {
    let src = parse_program(include_str!("../data/psc.dl"))?;
    let goal = &src.query.expect("query in file").atoms[0];
    let out = dms(goal, &src.program)?;
    for (name, ap) in out.magic_predicates() {
        println!("% {name} for {ap}");
    }
    print!("{}", format_program(&out.program()));
    Ok(())
}
