//! Unfounded sets, killed atoms and the magic variant of a stable model.

use std::collections::BTreeSet;

use magistral::oracle::{herbrand_base, is_unfounded_set, OracleLimits, PartialInterpretation};
use magistral::parser::{format_interpretation, parse_interpretation, parse_program};
use magistral::rewriter::{killed_set, magic_variant_stages};

fn main() -> magistral::Result<()> {
    let src = parse_program(include_str!("../data/psc.dl"))?;
    let p = src.program;
    let goal = &src.query.expect("query").atoms[0];
    let m = parse_interpretation("produced_by(p,c,c1) sc(c)")?;
    let pi = PartialInterpretation::new(m.clone(), herbrand_base(&p, OracleLimits::default())?)?;
    for x in ["sc(c1)", "sc(c) sc(c1)"] {
        let x: BTreeSet<_> = parse_interpretation(x)?;
        println!("{} unfounded: {}", format_interpretation(&x), is_unfounded_set(&x, &pi, &p)?);
    }

    let stages = magic_variant_stages(&m, goal, &p)?;
    for (k, s) in stages.iter().enumerate() {
        println!("stage {k}: {}", format_interpretation(s));
    }
    let variant = stages.last().expect("at least one stage");
    let killed = killed_set(variant, variant, goal, &p)?;
    let sc: BTreeSet<_> = killed.iter().filter(|a| a.predicate.as_str() == "sc").cloned().collect();
    println!("killed sc atoms: {}", format_interpretation(&sc));
    Ok(())
}
