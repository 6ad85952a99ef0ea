//! Grounding, model search and end-to-end query answering.

pub mod ground;
mod minimal;
pub mod search;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use ground::{intelligent_ground, intelligent_ground_with, AtomId, DbRule, GroundLimits, GroundRuleDB, Truth};
pub use search::{enumerate_models, find_model, SearchStats};

use crate::analysis::validate;
use crate::error::{Error, Result};
use crate::optimizer::{prune_redundant, PruneMode};
use crate::oracle::universe;
use crate::query::{self, AnswerSet, Mode};
use crate::rewriter::{dms, is_magic_predicate};
use crate::syntax::{Atom, Constant, Interpretation, Program, Query, Substitution, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MagicMode {
    Off,
    On,
    OnSubsume,
}

impl fmt::Display for MagicMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MagicMode::Off => "off",
            MagicMode::On => "dms",
            MagicMode::OnSubsume => "dms_subsume",
        })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub timeout: Option<Duration>,
    pub limits: GroundLimits,
    /// Compute a witness model for ground queries.
    pub witness: bool,
    /// The program is known to have exactly one stable model.
    pub unique_model: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub answers: AnswerSet,
    pub stats: SearchStats,
    /// A model deciding a ground query, with magic predicates removed.
    pub witness: Option<Interpretation>,
}

/// Brave or cautious answers of `goal` over the stable models of `db`.
pub fn solve(
    db: &GroundRuleDB,
    goal: &Atom,
    vars: &[Symbol],
    mode: Mode,
    universe: &[Constant],
    opts: SolveOptions,
    deadline: Option<Instant>,
) -> Result<(AnswerSet, Option<Interpretation>, SearchStats)> {
    let mut stats = SearchStats { ground_rules: db.ground_rules(), ..SearchStats::default() };
    let answer = |subs: BTreeSet<Substitution>| AnswerSet { mode, vars: vars.to_vec(), substitutions: subs };
    let vacuous = || query::combine(goal, vars, mode, std::iter::empty(), universe);

    if opts.unique_model || goal.is_ground() {
        let assumption = if opts.unique_model {
            None
        } else {
            match db.id_of(goal).map(|id| (id, db.truth(id))) {
                Some((id, Truth::Undefined)) => Some((id, if mode == Mode::Brave { Truth::True } else { Truth::False })),
                _ => None,
            }
        };
        let model = find_model(db, assumption.as_slice(), deadline, &mut stats)?;
        let Some(model) = model else {
            return match assumption {
                // No counter-model: cautiously true unless there is no model at all.
                Some(_) if mode == Mode::Cautious => match find_model(db, &[], deadline, &mut stats)? {
                    Some(m) => Ok((answer(BTreeSet::from([Substitution::new()])), Some(m), stats)),
                    None => Ok((vacuous(), None, stats)),
                },
                Some(_) => Ok((answer(BTreeSet::new()), None, stats)),
                None => Ok((vacuous(), None, stats)),
            };
        };
        let subs = query::matches_in(goal, vars, &model);
        return Ok((answer(subs), Some(model), stats));
    }

    let Some(first) = find_model(db, &[], deadline, &mut stats)? else {
        return Ok((vacuous(), None, stats));
    };
    let mut acc = query::matches_in(goal, vars, &first);
    match mode {
        Mode::Brave => {
            for id in db.matching(goal) {
                let atom = db.atom(id);
                let mut theta = Substitution::new();
                goal.match_ground(atom, &mut theta);
                if acc.contains(&theta.restrict(vars)) || db.truth(id) != Truth::Undefined {
                    continue;
                }
                if let Some(m) = find_model(db, &[(id, Truth::True)], deadline, &mut stats)? {
                    acc.extend(query::matches_in(goal, vars, &m));
                }
            }
        }
        Mode::Cautious => {
            let candidates: Vec<Substitution> = acc.iter().cloned().collect();
            for s in candidates {
                if !acc.contains(&s) {
                    continue;
                }
                let Some(id) = db.id_of(&goal.apply(&s)) else { continue };
                if db.truth(id) != Truth::Undefined {
                    continue;
                }
                if let Some(m) = find_model(db, &[(id, Truth::False)], deadline, &mut stats)? {
                    let here = query::matches_in(goal, vars, &m);
                    acc.retain(|x| here.contains(x));
                }
            }
        }
    }
    Ok((answer(acc), None, stats))
}

impl FromStr for MagicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(MagicMode::Off),
            "dms" | "on" => Ok(MagicMode::On),
            "dms_subsume" | "on_subsume" => Ok(MagicMode::OnSubsume),
            _ => Err(Error::PreconditionFailed(format!("unknown configuration `{s}`"))),
        }
    }
}

/// Removes magic atoms from a model for display.
pub fn strip_magic(m: &Interpretation) -> Interpretation {
    m.iter().filter(|a| !is_magic_predicate(&a.predicate)).cloned().collect()
}

/// The program actually grounded for `goal` under `magic`.
pub fn program_for(goal: &Atom, p: &Program, magic: MagicMode) -> Result<Program> {
    Ok(match magic {
        MagicMode::Off => p.clone(),
        MagicMode::On => dms(goal, p)?.program(),
        MagicMode::OnSubsume => prune_redundant(&dms(goal, p)?.program(), PruneMode::Greedy)?,
    })
}

/// A query compiled down to a ground program, ready for search.
#[derive(Clone, Debug)]
pub struct Grounded {
    pub goal: Atom,
    pub vars: Vec<Symbol>,
    pub universe: Vec<Constant>,
    pub db: GroundRuleDB,
    pub time_ground: Duration,
    pub unique_model: bool,
}

/// Validation, query preparation, optional rewriting, and grounding.
pub fn ground_query(q: &Query, p: &Program, magic: MagicMode, opts: SolveOptions, deadline: Option<Instant>) -> Result<Grounded> {
    validate(p)?;
    let prep = query::prepare(q, p)?;
    let t0 = Instant::now();
    let program = program_for(&prep.goal, &prep.program, magic)?;
    let db = intelligent_ground_with(&program, opts.limits, deadline)?;
    Ok(Grounded {
        universe: universe(&prep.program),
        goal: prep.goal,
        vars: prep.vars,
        db,
        time_ground: t0.elapsed(),
        unique_model: opts.unique_model || p.is_disjunction_free(),
    })
}

/// Searches a grounded query.
pub fn solve_grounded(g: &Grounded, mode: Mode, opts: SolveOptions, deadline: Option<Instant>) -> Result<Solution> {
    let opts = SolveOptions { unique_model: g.unique_model, ..opts };
    let (answers, witness, mut stats) = solve(&g.db, &g.goal, &g.vars, mode, &g.universe, opts, deadline)?;
    stats.time_ground = g.time_ground;
    let witness = if g.goal.is_ground() && opts.witness { witness.map(|w| strip_magic(&w)) } else { None };
    Ok(Solution { answers, stats, witness })
}

/// Answers `q` over `p`: validation, optional rewriting, grounding and search.
pub fn answer(q: &Query, p: &Program, mode: Mode, magic: MagicMode) -> Result<Solution> {
    answer_with(q, p, mode, magic, SolveOptions::default())
}

pub fn answer_with(q: &Query, p: &Program, mode: Mode, magic: MagicMode, opts: SolveOptions) -> Result<Solution> {
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let g = ground_query(q, p, magic, opts, deadline)?;
    solve_grounded(&g, mode, opts, deadline)
}

/// Grounds and searches an already prepared, possibly rewritten, program.
pub fn answer_program(
    goal: &Atom,
    vars: &[Symbol],
    program: &Program,
    universe: &[Constant],
    mode: Mode,
    opts: SolveOptions,
) -> Result<Solution> {
    let deadline = opts.timeout.map(|t| Instant::now() + t);
    let t0 = Instant::now();
    let db = intelligent_ground_with(program, opts.limits, deadline)?;
    let g = Grounded {
        goal: goal.clone(),
        vars: vars.to_vec(),
        universe: universe.to_vec(),
        db,
        time_ground: t0.elapsed(),
        unique_model: opts.unique_model,
    };
    solve_grounded(&g, mode, opts, deadline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, stable_models_of, OracleLimits};
    use crate::parser::{parse_interpretation, parse_program, parse_query};

    const PSC: &str = "sc(C1) v sc(C2) :- produced_by(P,C1,C2).\n\
                       sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n\
                       produced_by(p,c,c1).\n";

    fn all_modes() -> [MagicMode; 3] {
        [MagicMode::Off, MagicMode::On, MagicMode::OnSubsume]
    }

    #[test]
    fn strategic_companies_models() {
        let p = parse_program(PSC).unwrap().program;
        let db = intelligent_ground(&p).unwrap();
        let (models, stats) = enumerate_models(&db, None).unwrap();
        assert_eq!(models.len(), 2);
        assert_eq!(models, oracle::enumerate_stable_models(&p).unwrap());
        assert_eq!(stats.models, 2);
    }

    #[test]
    fn brave_witness_without_magic_atoms() {
        let p = parse_program(PSC).unwrap().program;
        let q = parse_query("sc(c)?").unwrap();
        let opts = SolveOptions { witness: true, ..SolveOptions::default() };
        let s = answer_with(&q, &p, Mode::Brave, MagicMode::On, opts).unwrap();
        assert!(s.answers.is_true());
        assert_eq!(s.witness, Some(parse_interpretation("{produced_by(p,c,c1), sc(c)}").unwrap()));
        let c = answer(&q, &p, Mode::Cautious, MagicMode::On).unwrap();
        assert!(!c.answers.is_true());
    }

    #[test]
    fn nonground_queries_match_the_oracle() {
        let p = parse_program(
            "a(X) v b(X) :- e(X).\nc(X) :- a(X), not d(X).\nd(X) :- f(X).\ne(1). e(2). e(3). f(2).",
        )
        .unwrap()
        .program;
        for text in ["a(X)?", "c(X)?", "b(X), e(X)?", "e(X)?", "d(X)?"] {
            let q = parse_query(text).unwrap();
            for mode in [Mode::Brave, Mode::Cautious] {
                let expected = oracle::answer_query(&q, &p, mode).unwrap();
                for magic in all_modes() {
                    assert_eq!(answer(&q, &p, mode, magic).unwrap().answers, expected, "{text} {mode} {magic}");
                }
            }
        }
    }

    #[test]
    fn unstratified_rewriting_search() {
        let p = parse_program(
            "s(X) :- p(X), q(X).\np(X) :- e(X), not q(X).\nq(X) :- r(X), s2(X).\nr(X) :- e(X).\ns2(X) :- e(X), not f(X).\ne(1). e(2). f(1).",
        )
        .unwrap()
        .program;
        for text in ["s(1)?", "p(1)?", "p(2)?", "q(X)?"] {
            let q = parse_query(text).unwrap();
            for mode in [Mode::Brave, Mode::Cautious] {
                let expected = oracle::answer_query(&q, &p, mode).unwrap();
                for magic in all_modes() {
                    assert_eq!(answer(&q, &p, mode, magic).unwrap().answers, expected, "{text} {mode} {magic}");
                }
            }
        }
    }

    #[test]
    fn single_model_shortcut() {
        let p = parse_program("t(X,Y) :- e(X,Y).\nt(X,Y) :- e(X,Z), t(Z,Y).\nn(X) :- e(X,Y), not t(Y,X).\ne(1,2). e(2,3). e(3,1). e(3,4).")
            .unwrap()
            .program;
        let q = parse_query("n(3)?").unwrap();
        let s = answer(&q, &p, Mode::Brave, MagicMode::On).unwrap();
        assert!(s.answers.is_true());
        assert!(s.stats.models <= 1);
        assert_eq!(s.answers, oracle::answer_query(&q, &p, Mode::Brave).unwrap());
    }

    #[test]
    fn solver_models_are_stable() {
        let p = parse_program("a v b :- e.\nb v c :- e.\nd :- a, not f.\nf :- c, e.\ng :- d, b.\ne.").unwrap().program;
        let db = intelligent_ground(&p).unwrap();
        let (models, _) = enumerate_models(&db, None).unwrap();
        let g = oracle::full_ground(&p).unwrap();
        for m in &models {
            assert!(oracle::is_stable_model(m, &g, OracleLimits::default()).unwrap());
        }
        assert_eq!(models, stable_models_of(&g, OracleLimits::default()).unwrap());
    }

    #[test]
    fn timeout_interrupts() {
        let mut text = String::new();
        for i in 0..40 {
            text.push_str(&format!("a{i} v b{i}.\n"));
        }
        text.push_str("g :- a0, b1.\n");
        let p = parse_program(&text).unwrap().program;
        let db = intelligent_ground(&p).unwrap();
        let r = enumerate_models(&db, Some(Instant::now() + Duration::from_millis(50)));
        assert!(matches!(r, Err(crate::Error::Interrupted)));
    }
}
