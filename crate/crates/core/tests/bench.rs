use std::time::Duration;

use magistral::bench::{run_case, run_suite, Family};
use magistral::solver::{ground_query, MagicMode, SolveOptions};
use proptest::prelude::*;

const LONG: Duration = Duration::from_secs(60);

fn ground_rules(family: Family, size: usize, config: MagicMode) -> usize {
    let case = family.generate(size, 0);
    ground_query(&case.query, &case.program, config, SolveOptions::default(), None).unwrap().db.ground_rules()
}

#[test]
fn dms_grounds_less_on_larger_grids() {
    for family in [Family::SimplePath, Family::Related] {
        let mut prev_ratio = f64::INFINITY;
        for n in [8, 16] {
            let off = ground_rules(family, n, MagicMode::Off);
            let dms = ground_rules(family, n, MagicMode::On);
            assert!(dms < off, "{family} n={n}: dms {dms} vs off {off}");
            let ratio = dms as f64 / off as f64;
            assert!(ratio < prev_ratio, "{family} n={n}: ratio {ratio} not below {prev_ratio}");
            prev_ratio = ratio;
        }
    }
}

#[test]
fn pruning_never_grounds_more() {
    for (family, size) in [(Family::SimplePath, 6), (Family::Related, 6), (Family::Strategic, 8), (Family::Conformant, 5)] {
        let on = ground_rules(family, size, MagicMode::On);
        let pruned = ground_rules(family, size, MagicMode::OnSubsume);
        assert!(pruned <= on, "{family} {size}: {pruned} > {on}");
    }
}

#[test]
fn timeout_skips_larger_sizes() {
    let mut buf = Vec::new();
    let plan = [(Family::Conformant, vec![7, 5, 6])];
    let rows = run_suite(&plan, &[MagicMode::Off], 0, Duration::from_millis(200), &mut buf).unwrap();
    assert_eq!(rows.iter().map(|r| r.size).collect::<Vec<_>>(), [5, 6, 7]);
    assert!(rows[0].timeout && rows[0].answer.is_none());
    assert!(rows[1..].iter().all(|r| r.timeout && r.grounded && r.answer.is_none() && r.stats.ground_rules > 0));
    let csv = String::from_utf8(buf).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn conformant_answer_is_true_for_every_config() {
    for depth in 1..=4 {
        for config in [MagicMode::Off, MagicMode::On, MagicMode::OnSubsume] {
            let row = run_case(&Family::Conformant.generate(depth, 0), config, LONG).unwrap();
            assert_eq!(row.answer.as_deref(), Some("true"), "depth {depth} {config}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strategic_configs_agree(seed in any::<u64>(), size in 2usize..7) {
        let rows = run_suite(&[(Family::Strategic, vec![size])], &[MagicMode::Off, MagicMode::On, MagicMode::OnSubsume], seed, LONG, std::io::sink()).unwrap();
        prop_assert_eq!(rows.len(), 3);
        prop_assert!(rows.iter().all(|r| r.answer.is_some()));
    }
}
