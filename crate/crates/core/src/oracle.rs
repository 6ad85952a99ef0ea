//! Reference semantics computed by exhaustive enumeration. Slow by design and meant
//! for small programs only.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::query::{self, AnswerSet, Mode};
use crate::syntax::{Atom, Constant, Interpretation, Literal, Program, Query, Rule, Substitution};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Maximum number of undecided ground atoms for subset enumeration.
    pub max_atoms: usize,
    pub max_ground_rules: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_atoms: 24, max_ground_rules: 50_000 }
    }
}

/// A ground rule with builtins evaluated away. Head and body parts are sorted sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroundRule {
    pub head: Vec<Atom>,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

impl GroundRule {
    pub fn new(mut head: Vec<Atom>, mut pos: Vec<Atom>, mut neg: Vec<Atom>) -> Self {
        for v in [&mut head, &mut pos, &mut neg] {
            v.sort();
            v.dedup();
        }
        GroundRule { head, pos, neg }
    }

    /// Converts a ground rule, returning `None` when a builtin is false.
    pub fn from_rule(r: &Rule) -> Result<Option<GroundRule>> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for l in &r.body {
            match l {
                Literal::Pos(a) => pos.push(a.clone()),
                Literal::Neg(a) => neg.push(a.clone()),
                Literal::Cmp(c) => match c.eval() {
                    Some(Ok(true)) => {}
                    Some(Ok(false)) => return Ok(None),
                    Some(Err(e)) => return Err(e),
                    None => return Err(Error::PreconditionFailed(format!("rule `{r}` is not ground"))),
                },
            }
        }
        Ok(Some(GroundRule::new(r.head.clone(), pos, neg)))
    }

    pub fn body_true(&self, i: &Interpretation) -> bool {
        self.pos.iter().all(|a| i.contains(a)) && !self.neg.iter().any(|a| i.contains(a))
    }

    pub fn satisfied_by(&self, i: &Interpretation) -> bool {
        !self.body_true(i) || self.head.iter().any(|a| i.contains(a))
    }
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<Literal> = self
            .pos
            .iter()
            .cloned()
            .map(Literal::Pos)
            .chain(self.neg.iter().cloned().map(Literal::Neg))
            .collect();
        Rule { head: self.head.clone(), body }.fmt(f)
    }
}

/// A set of ground rules in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundProgram {
    pub rules: Vec<GroundRule>,
}

impl GroundProgram {
    pub fn from_rules(rules: impl IntoIterator<Item = GroundRule>) -> Self {
        let mut seen = HashSet::new();
        let rules = rules.into_iter().filter(|r| seen.insert(r.clone())).collect();
        GroundProgram { rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn contains(&self, r: &GroundRule) -> bool {
        self.rules.contains(r)
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.rules
            .iter()
            .flat_map(|r| r.head.iter().chain(&r.pos).chain(&r.neg))
            .cloned()
            .collect()
    }
}

/// Constants of the program, or the single artificial constant `u0` when there are none.
pub fn universe(p: &Program) -> Vec<Constant> {
    let u: Vec<Constant> = p.constants().into_iter().collect();
    if u.is_empty() {
        vec![Constant::sym("u0")]
    } else {
        u
    }
}

/// All ground atoms over the predicates of `p` and its universe.
pub fn herbrand_base(p: &Program, limits: OracleLimits) -> Result<Interpretation> {
    let u = universe(p);
    let mut out = Interpretation::new();
    for (pred, arity) in p.predicates() {
        let count = (u.len() as u128).saturating_pow(arity as u32);
        if count + out.len() as u128 > limits.max_ground_rules as u128 {
            return Err(Error::CapacityExceeded { what: "herbrand base", limit: limits.max_ground_rules });
        }
        for args in tuples(&u, arity) {
            out.insert(Atom { predicate: pred.clone(), args: args.into_iter().map(crate::Term::Const).collect() });
        }
    }
    Ok(out)
}

fn tuples(u: &[Constant], n: usize) -> Vec<Vec<Constant>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                u.iter().map(move |c| {
                    let mut t2 = t.clone();
                    t2.push(c.clone());
                    t2
                })
            })
            .collect();
    }
    out
}

pub fn full_ground(p: &Program) -> Result<GroundProgram> {
    full_ground_with(p, OracleLimits::default())
}

/// Every instance of every rule over the universe, plus the facts.
pub fn full_ground_with(p: &Program, limits: OracleLimits) -> Result<GroundProgram> {
    let mut rules: Vec<GroundRule> =
        p.facts.iter().map(|f| GroundRule::new(vec![f.clone()], Vec::new(), Vec::new())).collect();
    rules.extend(instantiate(&p.rules, &universe(p), limits)?);
    Ok(GroundProgram::from_rules(rules))
}

/// All instances of `rules` over the constants `u`, builtins evaluated away.
pub fn instantiate(rules: &[Rule], u: &[Constant], limits: OracleLimits) -> Result<Vec<GroundRule>> {
    let mut out = Vec::new();
    let mut budget = limits.max_ground_rules as u128;
    for r in rules {
        let vars = r.vars();
        let count = (u.len() as u128).saturating_pow(vars.len() as u32);
        if count > budget {
            return Err(Error::CapacityExceeded { what: "ground rule instances", limit: limits.max_ground_rules });
        }
        budget -= count;
        for t in tuples(u, vars.len()) {
            let theta: Substitution = vars.iter().cloned().zip(t).collect();
            if let Some(g) = GroundRule::from_rule(&r.apply(&theta))? {
                out.push(g);
            }
        }
    }
    Ok(out)
}

/// `Ground(p)` without the instances whose positive body holds an EDB atom that is
/// not a fact. Such instances can never fire, so the stable models are unchanged.
pub fn ground_relevant_with(p: &Program, limits: OracleLimits) -> Result<GroundProgram> {
    let g = full_ground_with(p, limits)?;
    let kinds = crate::analysis::classify_lenient(p);
    let bodiless = p.rules.iter().filter(|r| r.body.is_empty() && !r.is_disjunctive()).map(|r| &r.head[0]);
    let facts: HashSet<&Atom> = p.facts.iter().chain(bodiless).collect();
    let is_edb = |a: &Atom| kinds.get(&a.predicate) == Some(&crate::analysis::PredicateKind::Edb);
    Ok(GroundProgram {
        rules: g
            .rules
            .into_iter()
            .filter(|r| r.pos.iter().all(|a| !is_edb(a) || facts.contains(a)))
            .collect(),
    })
}

/// Deletes rules whose negative body intersects `i` and strips the remaining negative literals.
pub fn reduct(g: &GroundProgram, i: &Interpretation) -> GroundProgram {
    GroundProgram::from_rules(
        g.rules
            .iter()
            .filter(|r| !r.neg.iter().any(|a| i.contains(a)))
            .map(|r| GroundRule { head: r.head.clone(), pos: r.pos.clone(), neg: Vec::new() }),
    )
}

pub fn is_model(i: &Interpretation, g: &GroundProgram) -> bool {
    g.rules.iter().all(|r| r.satisfied_by(i))
}

pub fn enumerate_stable_models(p: &Program) -> Result<Vec<Interpretation>> {
    enumerate_stable_models_with(p, OracleLimits::default())
}

pub fn enumerate_stable_models_with(p: &Program, limits: OracleLimits) -> Result<Vec<Interpretation>> {
    let g = full_ground_with(p, limits)?;
    stable_models_of(&g, limits)
}

struct Compiled {
    head: u64,
    pos: u64,
    neg: u64,
}

/// Candidate atoms and the program compiled to bitmasks over them.
struct Enumeration {
    fixed: Interpretation,
    candidates: Vec<Atom>,
    rules: Vec<Compiled>,
}

fn compile(g: &GroundProgram, limits: OracleLimits) -> Result<Enumeration> {
    let fixed: Interpretation = g
        .rules
        .iter()
        .filter(|r| r.head.len() == 1 && r.pos.is_empty() && r.neg.is_empty())
        .map(|r| r.head[0].clone())
        .collect();
    // Every stable model lies inside this positive over-approximation.
    let mut reach = fixed.clone();
    loop {
        let before = reach.len();
        for r in &g.rules {
            if r.pos.iter().all(|a| reach.contains(a)) {
                reach.extend(r.head.iter().cloned());
            }
        }
        if reach.len() == before {
            break;
        }
    }
    let candidates: Vec<Atom> = reach.difference(&fixed).cloned().collect();
    if candidates.len() > limits.max_atoms.min(63) {
        return Err(Error::CapacityExceeded { what: "undecided ground atoms", limit: limits.max_atoms });
    }
    let index: HashMap<&Atom, usize> = candidates.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let mask = |atoms: &[Atom]| atoms.iter().filter_map(|a| index.get(a)).fold(0u64, |m, &i| m | (1 << i));
    let mut rules = Vec::new();
    for r in &g.rules {
        if !r.pos.iter().all(|a| reach.contains(a))
            || r.head.iter().any(|a| fixed.contains(a))
            || r.neg.iter().any(|a| fixed.contains(a))
        {
            continue;
        }
        rules.push(Compiled { head: mask(&r.head), pos: mask(&r.pos), neg: mask(&r.neg) });
    }
    Ok(Enumeration { fixed, candidates, rules })
}

fn is_model_mask(rules: &[&Compiled], m: u64) -> bool {
    rules.iter().all(|r| (r.pos & !m) != 0 || (r.neg & m) != 0 || (r.head & m) != 0)
}

fn is_minimal_mask(rules: &[Compiled], m: u64) -> bool {
    let reduct: Vec<&Compiled> = rules.iter().filter(|r| r.neg & m == 0).collect();
    let positive = |n: u64| reduct.iter().all(|r| (r.pos & !n) != 0 || (r.head & n) != 0);
    if m == 0 {
        return true;
    }
    let mut sub = (m - 1) & m;
    loop {
        if positive(sub) {
            return false;
        }
        if sub == 0 {
            return true;
        }
        sub = (sub - 1) & m;
    }
}

/// Stable models of a ground program by subset enumeration, sorted.
pub fn stable_models_of(g: &GroundProgram, limits: OracleLimits) -> Result<Vec<Interpretation>> {
    let e = compile(g, limits)?;
    let all: Vec<&Compiled> = e.rules.iter().collect();
    let mut out = Vec::new();
    for m in 0u64..(1u64 << e.candidates.len()) {
        if is_model_mask(&all, m) && is_minimal_mask(&e.rules, m) {
            let mut model = e.fixed.clone();
            for (i, a) in e.candidates.iter().enumerate() {
                if m & (1 << i) != 0 {
                    model.insert(a.clone());
                }
            }
            out.push(model);
        }
    }
    out.sort();
    Ok(out)
}

/// Checks that `m` is a minimal model of the reduct of `g` with respect to `m`.
pub fn is_stable_model(m: &Interpretation, g: &GroundProgram, limits: OracleLimits) -> Result<bool> {
    let r = reduct(g, m);
    if !is_model(m, &r) {
        return Ok(false);
    }
    let relevant = GroundProgram::from_rules(r.rules.into_iter().filter(|rule| rule.pos.iter().all(|a| m.contains(a))));
    let restricted: Vec<GroundRule> = relevant
        .rules
        .iter()
        .map(|rule| GroundRule {
            head: rule.head.iter().filter(|a| m.contains(*a)).cloned().collect(),
            pos: rule.pos.clone(),
            neg: Vec::new(),
        })
        .collect();
    let models = stable_models_of(&GroundProgram { rules: restricted }, limits)?;
    Ok(models.len() == 1 && models[0] == *m)
}

/// Brave or cautious answers of `q` over all stable models of `p`.
pub fn answer_query(q: &Query, p: &Program, mode: Mode) -> Result<AnswerSet> {
    answer_query_with(q, p, mode, OracleLimits::default())
}

pub fn answer_query_with(q: &Query, p: &Program, mode: Mode, limits: OracleLimits) -> Result<AnswerSet> {
    let prep = query::prepare(q, p)?;
    let models = enumerate_stable_models_with(&prep.program, limits)?;
    Ok(query::combine(&prep.goal, &prep.vars, mode, &models, &universe(&prep.program)))
}

/// A pair ⟨T, N⟩ of true and not-false atoms with T ⊆ N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialInterpretation {
    t: Interpretation,
    n: Interpretation,
}

impl PartialInterpretation {
    pub fn new(t: Interpretation, n: Interpretation) -> Result<Self> {
        if !t.is_subset(&n) {
            return Err(Error::PreconditionFailed("partial interpretation needs T ⊆ N".into()));
        }
        Ok(PartialInterpretation { t, n })
    }

    pub fn true_atoms(&self) -> &Interpretation {
        &self.t
    }

    pub fn not_false_atoms(&self) -> &Interpretation {
        &self.n
    }
}

/// Unfounded-set test over the instances of `Ground(p)` that agree with the EDB
/// (see [`ground_relevant_with`]).
pub fn is_unfounded_set(x: &BTreeSet<Atom>, pi: &PartialInterpretation, p: &Program) -> Result<bool> {
    Ok(is_unfounded_set_ground(x, pi, &ground_relevant_with(p, OracleLimits::default())?))
}

/// `x` is unfounded if every rule with a head atom in `x` has a positive body atom
/// outside N or inside `x`, a negative body atom in T, or a head atom in T \ x.
pub fn is_unfounded_set_ground(x: &BTreeSet<Atom>, pi: &PartialInterpretation, g: &GroundProgram) -> bool {
    g.rules.iter().filter(|r| r.head.iter().any(|a| x.contains(a))).all(|r| {
        r.pos.iter().any(|a| !pi.n.contains(a))
            || r.neg.iter().any(|a| pi.t.contains(a))
            || r.pos.iter().any(|a| x.contains(a))
            || r.head.iter().any(|a| pi.t.contains(a) && !x.contains(a))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_interpretation, parse_program, parse_query};

    const PSC: &str = "sc(C1) v sc(C2) :- produced_by(P,C1,C2).\n\
                       sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n\
                       produced_by(p,c,c1).\n";

    fn psc() -> Program {
        parse_program(PSC).unwrap().program
    }

    fn interp(s: &str) -> Interpretation {
        parse_interpretation(s).unwrap()
    }

    #[test]
    fn ground_contains_disjunctive_instance() {
        let g = full_ground(&psc()).unwrap();
        let r = GroundRule::from_rule(&parse_program("sc(c) v sc(c1) :- produced_by(p,c,c1).").unwrap().program.rules[0])
            .unwrap()
            .unwrap();
        assert!(g.contains(&r));
        // the fact, 27 instances of r3 and 81 of r4
        assert_eq!(g.len(), 1 + 27 + 81);
    }

    #[test]
    fn ground_enumeration_simple() {
        let p = parse_program("p(X) :- e(X). e(a). e(b).").unwrap().program;
        let g = full_ground(&p).unwrap();
        let shown: Vec<String> = g.rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(shown, ["e(a).", "e(b).", "p(a) :- e(a).", "p(b) :- e(b)."]);
    }

    #[test]
    fn no_constants_uses_artificial_one() {
        let p = parse_program("a v b.").unwrap().program;
        assert_eq!(universe(&p), vec![Constant::sym("u0")]);
        let models = enumerate_stable_models(&p).unwrap();
        assert_eq!(models, vec![interp("a"), interp("b")]);
    }

    #[test]
    fn strategic_companies_models() {
        let models = enumerate_stable_models(&psc()).unwrap();
        assert_eq!(
            models,
            vec![interp("produced_by(p,c,c1) sc(c)"), interp("produced_by(p,c,c1) sc(c1)")]
        );
        let g = full_ground(&psc()).unwrap();
        assert!(is_model(&interp("produced_by(p,c,c1) sc(c)"), &g));
        assert!(!is_model(&Interpretation::new(), &g));
        let base = herbrand_base(&psc(), OracleLimits::default()).unwrap();
        assert_eq!(base.len(), 3 + 27 + 81);
        assert!(is_model(&base, &g));
        for m in &models {
            assert!(is_stable_model(m, &g, OracleLimits::default()).unwrap());
        }
        assert!(!is_stable_model(&interp("produced_by(p,c,c1) sc(c) sc(c1)"), &g, OracleLimits::default()).unwrap());
    }

    #[test]
    fn brave_and_cautious() {
        let q = parse_query("sc(c)").unwrap();
        assert!(answer_query(&q, &psc(), Mode::Brave).unwrap().is_true());
        assert!(!answer_query(&q, &psc(), Mode::Cautious).unwrap().is_true());
    }

    #[test]
    fn path_example() {
        let p = parse_program(
            "path(X,Y) :- edge(X,Y). path(X,Y) :- edge(X,Z), path(Z,Y). edge(1,3). edge(2,4). edge(3,5).",
        )
        .unwrap()
        .program;
        let q = parse_query("path(1,5)").unwrap();
        for mode in [Mode::Brave, Mode::Cautious] {
            let a = answer_query(&q, &p, mode).unwrap();
            assert_eq!(a.substitutions, BTreeSet::from([Substitution::new()]));
        }
        assert_eq!(enumerate_stable_models(&p).unwrap().len(), 1);
    }

    #[test]
    fn reduct_strips_negation() {
        let p = parse_program("a :- e, not b. b :- e, not a. e.").unwrap_err();
        assert!(matches!(p, Error::Unstratified { .. }));
        let p = crate::parser::parse_program_with("a :- e, not b. c :- e, not a. e.", crate::parser::ParseOptions::unchecked())
            .unwrap()
            .program;
        let g = full_ground(&p).unwrap();
        let r = reduct(&g, &interp("e a"));
        assert!(r.rules.iter().all(|r| r.neg.is_empty()));
        assert_eq!(r.len(), 2);
        assert_eq!(reduct(&g, &Interpretation::new()).len(), 3);
        let models = enumerate_stable_models(&p).unwrap();
        assert_eq!(models, vec![interp("a e")]);
    }

    #[test]
    fn unfounded_sets_of_strategic_companies() {
        let p = psc();
        let base = herbrand_base(&p, OracleLimits::default()).unwrap();
        let pi = PartialInterpretation::new(interp("produced_by(p,c,c1) sc(c)"), base).unwrap();
        assert!(is_unfounded_set(&interp("sc(c1)"), &pi, &p).unwrap());
        assert!(!is_unfounded_set(&interp("sc(c) sc(c1)"), &pi, &p).unwrap());
        assert!(is_unfounded_set(&BTreeSet::new(), &pi, &p).unwrap());
        // Over the literal grounding, sc(c1) :- controlled_by(c1,c,c,c), sc(c), sc(c), sc(c)
        // violates every condition.
        let literal = full_ground(&p).unwrap();
        assert!(!is_unfounded_set_ground(&interp("sc(c1)"), &pi, &literal));
    }

    #[test]
    fn capacity_is_enforced() {
        let p = parse_program("p(X,Y,Z,W) :- e(X), e(Y), e(Z), e(W). e(1). e(2). e(3). e(4). e(5). e(6).").unwrap().program;
        let limits = OracleLimits { max_atoms: 24, max_ground_rules: 100 };
        assert!(matches!(full_ground_with(&p, limits), Err(Error::CapacityExceeded { .. })));
        let p = parse_program("p(X) v q(X) :- e(X). e(1). e(2). e(3). e(4). e(5). e(6). e(7). e(8). e(9). e(10). e(11). e(12). e(13).")
            .unwrap()
            .program;
        assert!(matches!(enumerate_stable_models(&p), Err(Error::CapacityExceeded { .. })));
    }
}
