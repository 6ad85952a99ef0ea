//! Stable models from the search engine, checked against brute-force enumeration.

use magistral::oracle::enumerate_stable_models;
use magistral::parser::{format_interpretation, parse_program};
use magistral::solver::{enumerate_models, intelligent_ground};

fn main() -> magistral::Result<()> {
    let p = parse_program(include_str!("../data/nsc.dl"))?.program;
    let db = intelligent_ground(&p)?;
    let (models, stats) = enumerate_models(&db, None)?;
    for m in &models {
        println!("{}", format_interpretation(m));
    }
    println!("{} models, {} choices, {} ground rules", models.len(), stats.choices, stats.ground_rules);
    assert_eq!(models, enumerate_stable_models(&p)?);
    Ok(())
}
