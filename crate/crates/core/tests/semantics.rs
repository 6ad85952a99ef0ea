mod common;

use std::collections::BTreeSet;

use common::{generate, GenConfig};
use magistral::oracle::{
    answer_query, full_ground, is_model, is_unfounded_set_ground, reduct, stable_models_of, OracleLimits,
    PartialInterpretation,
};
use magistral::query::Mode;
use magistral::{Atom, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stable_models_are_incomparable_models(seed in any::<u64>()) {
        let g = generate(seed, GenConfig::disjunctive());
        let ground = full_ground(&g.program).unwrap();
        let models = match stable_models_of(&ground, OracleLimits::default()) {
            Err(Error::CapacityExceeded { .. }) => return Ok(()),
            r => r.unwrap(),
        };
        prop_assert!(!models.is_empty());
        for m in &models {
            prop_assert!(is_model(m, &ground));
            prop_assert!(reduct(&ground, m).rules.iter().all(|r| r.neg.is_empty()));
            for o in &models {
                prop_assert!(m == o || !m.is_subset(o));
            }
        }
    }

    #[test]
    fn normal_programs_have_one_model(seed in any::<u64>()) {
        let g = generate(seed, GenConfig::normal());
        let ground = full_ground(&g.program).unwrap();
        match stable_models_of(&ground, OracleLimits::default()) {
            Err(Error::CapacityExceeded { .. }) => {}
            r => prop_assert_eq!(r.unwrap().len(), 1),
        }
    }

    #[test]
    fn brave_contains_cautious(seed in any::<u64>()) {
        let g = generate(seed, GenConfig::disjunctive());
        let (Ok(b), Ok(c)) = (answer_query(&g.query, &g.program, Mode::Brave), answer_query(&g.query, &g.program, Mode::Cautious)) else {
            return Ok(());
        };
        prop_assert!(c.substitutions.is_subset(&b.substitutions));
    }

    #[test]
    fn unfounded_atoms_are_false_in_stable_models(seed in any::<u64>()) {
        let g = generate(seed, GenConfig::disjunctive());
        let ground = full_ground(&g.program).unwrap();
        let Ok(models) = stable_models_of(&ground, OracleLimits::default()) else { return Ok(()) };
        let atoms: Vec<Atom> = ground.atoms().into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in &models {
            let t: BTreeSet<Atom> = m.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            let n: BTreeSet<Atom> = atoms.iter().filter(|a| m.contains(*a) || rng.gen_bool(0.5)).cloned().collect();
            let pi = PartialInterpretation::new(t, n).unwrap();
            for _ in 0..20 {
                let x: BTreeSet<Atom> = atoms.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
                if is_unfounded_set_ground(&x, &pi, &ground) {
                    prop_assert!(m.is_disjoint(&x));
                }
            }
        }
    }
}

#[test]
fn reduct_of_rewritten_strategic_companies() {
    use magistral::oracle::{ground_relevant_with, GroundRule, GroundProgram};
    use magistral::parser::{parse_interpretation, parse_program, parse_query};
    use magistral::rewriter::dms;

    let p = parse_program(
        "sc(C1) v sc(C2) :- produced_by(P,C1,C2).\n\
         sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n\
         produced_by(p,c,c1).",
    )
    .unwrap()
    .program;
    let q = parse_query("sc(c)").unwrap().atoms.remove(0);
    let rewritten = dms(&q, &p).unwrap().program();
    let m = parse_interpretation("produced_by(p,c,c1) sc(c) magic__sc__b(c) magic__sc__b(c1)").unwrap();
    let ground = ground_relevant_with(&rewritten, OracleLimits::default()).unwrap();
    let edb = parse_interpretation("produced_by(p,c,c1)").unwrap();
    // Without the EDB fact, true EDB body atoms and the mirrored disjunctive instance.
    let listed: BTreeSet<GroundRule> = reduct(&ground, &m)
        .rules
        .into_iter()
        .filter(|r| !(r.pos.is_empty() && r.head.iter().all(|a| edb.contains(a))))
        .map(|r| GroundRule::new(r.head, r.pos.into_iter().filter(|a| !edb.contains(a)).collect(), r.neg))
        .collect();
    let atom = |s: &str| parse_query(s).unwrap().atoms.remove(0);
    let expected = BTreeSet::from([
        GroundRule::new(vec![atom("magic__sc__b(c)")], vec![], vec![]),
        GroundRule::new(vec![atom("magic__sc__b(c1)")], vec![atom("magic__sc__b(c)")], vec![]),
        GroundRule::new(vec![atom("magic__sc__b(c)")], vec![atom("magic__sc__b(c1)")], vec![]),
        GroundRule::new(vec![atom("sc(c)"), atom("sc(c1)")], vec![atom("magic__sc__b(c)"), atom("magic__sc__b(c1)")], vec![]),
    ]);
    assert_eq!(listed, expected);
    assert!(is_model(&m, &GroundProgram::from_rules(expected)));
}
