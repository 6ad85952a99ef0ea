//! Consistent answers over a source that violates a key.

use magistral::integration::{build_repair_program, identity_mapping, parse_schema, read_csv_facts};
use magistral::parser::{format_program, parse_query};
use magistral::query::Mode;
use magistral::solver::{answer, MagicMode};

fn main() -> magistral::Result<()> {
    let schema = parse_schema(include_str!("../data/repair/schema.txt"))?;
    let mapping = identity_mapping(&schema, |r| format!("{r}_src"));
    let sources = read_csv_facts("r_src", include_str!("../data/repair/r.csv").as_bytes())?;
    let q = parse_query("r(X,V)?")?;
    let program = build_repair_program(&schema, &mapping, &sources, &q)?;
    print!("{}", format_program(&program));
    for mode in [Mode::Cautious, Mode::Brave] {
        let s = answer(&q, &program, mode, MagicMode::On)?;
        let shown: Vec<String> = s.answers.instances(&q.atoms[0]).iter().map(ToString::to_string).collect();
        println!("{mode}: {}", shown.join(" "));
    }
    Ok(())
}
