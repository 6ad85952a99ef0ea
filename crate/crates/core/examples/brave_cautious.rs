//! Brave and cautious answers to a nonground query, with and without the rewriting.

use magistral::parser::{parse_program, parse_query};
use magistral::query::Mode;
use magistral::solver::{answer, MagicMode};

fn main() -> magistral::Result<()> {
    let p = parse_program(include_str!("../data/nsc.dl"))?.program;
    let q = parse_query("nsc(X)?")?;
    for mode in [Mode::Brave, Mode::Cautious] {
        for magic in [MagicMode::Off, MagicMode::On] {
            let s = answer(&q, &p, mode, magic)?;
            let shown: Vec<String> = s.answers.instances(&q.atoms[0]).iter().map(ToString::to_string).collect();
            println!("{mode:>8} {magic:>4}: [{}] ({} ground rules)", shown.join(", "), s.stats.ground_rules);
        }
    }
    Ok(())
}
