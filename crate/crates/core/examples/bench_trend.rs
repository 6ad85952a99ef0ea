//! Runs one benchmark family over a range of sizes with and without the rewriting.
//!
//! cargo run --release --example bench_trend -- conformant 1 10 30

use std::time::Duration;

use magistral::bench::{run_suite, Family};
use magistral::solver::MagicMode;

fn main() -> magistral::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family: Family = args.first().map_or("conformant", String::as_str).parse()?;
    let lo: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let hi: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let secs: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let configs = [MagicMode::Off, MagicMode::On, MagicMode::OnSubsume];
    run_suite(&[(family, (lo..=hi).collect())], &configs, 1, Duration::from_secs(secs), std::io::stdout())?;
    Ok(())
}
