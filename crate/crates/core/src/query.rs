//! Query preparation and answer extraction shared by the oracle and the solver.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::syntax::{Atom, Constant, Interpretation, Literal, Program, Query, Rule, Substitution, Symbol, Term};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Mode {
    Brave,
    Cautious,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Brave => "brave",
            Mode::Cautious => "cautious",
        })
    }
}

/// Answers to a query: substitutions over the query variables.
/// A ground query is true iff the set holds the empty substitution.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AnswerSet {
    pub mode: Mode,
    pub vars: Vec<Symbol>,
    pub substitutions: BTreeSet<Substitution>,
}

impl AnswerSet {
    pub fn is_true(&self) -> bool {
        !self.substitutions.is_empty()
    }

    /// Instances of `query` for each answer, one atom per substitution.
    pub fn instances(&self, query: &Atom) -> Vec<Atom> {
        self.substitutions.iter().map(|s| query.apply(s)).collect()
    }
}

/// A query reduced to a single goal atom over a possibly extended program.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedQuery {
    pub program: Program,
    pub goal: Atom,
    pub vars: Vec<Symbol>,
}

pub const AUX_PREFIX: &str = "query__";

/// Folds a conjunctive query into an auxiliary rule and adds a fact over a fresh
/// predicate holding query constants that do not occur in the program.
pub fn prepare(q: &Query, p: &Program) -> Result<PreparedQuery> {
    if q.atoms.is_empty() {
        return Err(Error::PreconditionFailed("empty query".into()));
    }
    let mut program = p.clone();
    let used = p.predicates();
    let fresh = |stem: &str| {
        let mut k = 0usize;
        loop {
            let name = if k == 0 { format!("{AUX_PREFIX}{stem}") } else { format!("{AUX_PREFIX}{stem}{k}") };
            if !used.contains_key(&Symbol::new(&name)) {
                return name;
            }
            k += 1;
        }
    };
    for a in &q.atoms {
        if let Some(&expected) = used.get(&a.predicate) {
            if expected != a.arity() {
                return Err(Error::ArityMismatch {
                    predicate: a.predicate.clone(),
                    expected,
                    found: a.arity(),
                    span: None,
                });
            }
        }
    }
    let goal = if q.atoms.len() == 1 {
        q.atoms[0].clone()
    } else {
        let mut args: Vec<Term> = Vec::new();
        for t in q.atoms.iter().flat_map(|a| a.args.iter()) {
            if !args.contains(t) {
                args.push(t.clone());
            }
        }
        let head = Atom::new(&fresh("goal"), args);
        program.push_rule(Rule::new(vec![head.clone()], q.atoms.iter().cloned().map(Literal::Pos).collect()));
        head
    };
    let known = p.constants();
    let missing: Vec<Term> = q
        .constants()
        .into_iter()
        .filter(|c| !known.contains(c))
        .map(Term::Const)
        .collect();
    if !missing.is_empty() {
        program.push_fact(Atom::new(&fresh("dom"), missing));
    }
    Ok(PreparedQuery { program, goal, vars: q.vars() })
}

/// Substitutions over `vars` that make `goal` true in `model`.
pub fn matches_in(goal: &Atom, vars: &[Symbol], model: &Interpretation) -> BTreeSet<Substitution> {
    let lo = Atom { predicate: goal.predicate.clone(), args: Vec::new() };
    model
        .range(lo..)
        .take_while(|a| a.predicate == goal.predicate)
        .filter_map(|a| {
            let mut theta = Substitution::new();
            goal.match_ground(a, &mut theta).then(|| theta.restrict(vars))
        })
        .collect()
}

/// Combines per-model answers. With no models, cautious reasoning is vacuously true
/// for every substitution over `universe`.
pub fn combine<'a>(
    goal: &Atom,
    vars: &[Symbol],
    mode: Mode,
    models: impl IntoIterator<Item = &'a Interpretation>,
    universe: &[Constant],
) -> AnswerSet {
    let mut acc: Option<BTreeSet<Substitution>> = None;
    for m in models {
        let here = matches_in(goal, vars, m);
        acc = Some(match (acc, mode) {
            (None, _) => here,
            (Some(prev), Mode::Brave) => prev.union(&here).cloned().collect(),
            (Some(prev), Mode::Cautious) => prev.intersection(&here).cloned().collect(),
        });
    }
    let substitutions = match (acc, mode) {
        (Some(s), _) => s,
        (None, Mode::Brave) => BTreeSet::new(),
        (None, Mode::Cautious) => all_instances(goal, vars, universe),
    };
    AnswerSet { mode, vars: vars.to_vec(), substitutions }
}

fn all_instances(goal: &Atom, vars: &[Symbol], universe: &[Constant]) -> BTreeSet<Substitution> {
    let mut out = BTreeSet::from([Substitution::new()]);
    for v in vars {
        if !goal.vars().contains(v) {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|s| {
                universe.iter().map(move |c| {
                    let mut s2 = s.clone();
                    s2.insert(v.clone(), c.clone());
                    s2
                })
            })
            .collect();
    }
    out
}
