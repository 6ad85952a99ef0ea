//! Parsing, printing, and the safety and stratification gates.

use magistral::parser::{format_source, parse_program};

fn main() {
    let src = parse_program(include_str!("../data/nsc.dl")).expect("valid program");
    print!("{}", format_source(&src));

    for bad in ["p :- not p.", "p(X) :- q(Y).\nq(a).", "p(X :- q(X)."] {
        match parse_program(bad) {
            Ok(_) => println!("accepted: {bad}"),
            Err(e) => println!("rejected at {}: {e}", e.span().map_or("?".into(), |s| s.to_string())),
        }
    }
}
