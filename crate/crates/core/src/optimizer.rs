//! Removal of rules subsumed by other rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::syntax::{Atom, Comparison, Literal, Program, Rule, Symbol, Term};

/// A substitution from the variables of the subsuming rule to terms of the subsumed one.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SubsumptionWitness {
    pub theta: BTreeMap<Symbol, Term>,
}

impl SubsumptionWitness {
    fn apply_term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.theta.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
        }
    }

    fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| self.apply_term(t)).collect() }
    }

    fn apply_literal(&self, l: &Literal) -> Literal {
        match l {
            Literal::Pos(a) => Literal::Pos(self.apply_atom(a)),
            Literal::Neg(a) => Literal::Neg(self.apply_atom(a)),
            Literal::Cmp(c) => Literal::Cmp(Comparison::new(c.op, self.apply_term(&c.left), self.apply_term(&c.right))),
        }
    }

    /// Checks `H(r')θ ⊆ H(r)` and `B(r')θ ⊆ B(r)`, reading `=` and `<>` symmetrically.
    pub fn is_valid(&self, r_prime: &Rule, r: &Rule) -> bool {
        if r_prime.vars().iter().any(|v| !self.theta.contains_key(v)) {
            return false;
        }
        let heads_ok = r_prime.head.iter().all(|h| r.head.contains(&self.apply_atom(h)));
        let body_ok = r_prime.body.iter().all(|l| {
            let image = self.apply_literal(l);
            r.body.contains(&image)
                || matches!(&image, Literal::Cmp(c) if c.op.is_symmetric()
                    && r.body.contains(&Literal::Cmp(Comparison::new(c.op, c.right.clone(), c.left.clone()))))
        });
        heads_ok && body_ok
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Part {
    Head,
    Pos,
    Neg,
    Cmp,
}

struct Item<'a> {
    part: Part,
    terms: Vec<&'a Term>,
    predicate: Option<&'a Symbol>,
    symmetric: bool,
    op: Option<crate::syntax::CmpOp>,
}

fn items(r: &Rule) -> Vec<Item<'_>> {
    let mut out = Vec::new();
    for h in &r.head {
        out.push(Item { part: Part::Head, terms: h.args.iter().collect(), predicate: Some(&h.predicate), symmetric: false, op: None });
    }
    for l in &r.body {
        out.push(match l {
            Literal::Pos(a) => Item { part: Part::Pos, terms: a.args.iter().collect(), predicate: Some(&a.predicate), symmetric: false, op: None },
            Literal::Neg(a) => Item { part: Part::Neg, terms: a.args.iter().collect(), predicate: Some(&a.predicate), symmetric: false, op: None },
            Literal::Cmp(c) => Item {
                part: Part::Cmp,
                terms: vec![&c.left, &c.right],
                predicate: None,
                symmetric: c.op.is_symmetric(),
                op: Some(c.op),
            },
        });
    }
    out
}

fn compatible(src: &Item, dst: &Item) -> bool {
    src.part == dst.part && src.predicate == dst.predicate && src.op == dst.op && src.terms.len() == dst.terms.len()
}

/// Extends `theta` so that `src` maps term-wise onto `dst`; returns the variables added.
fn extend(theta: &mut BTreeMap<Symbol, Term>, src: &[&Term], dst: &[&Term]) -> Option<Vec<Symbol>> {
    let mut added = Vec::new();
    for (s, d) in src.iter().zip(dst) {
        let ok = match s {
            Term::Const(_) => *s == *d,
            Term::Var(v) => match theta.get(v) {
                Some(t) => t == *d,
                None => {
                    theta.insert(v.clone(), (*d).clone());
                    added.push(v.clone());
                    true
                }
            },
        };
        if !ok {
            for v in added {
                theta.remove(&v);
            }
            return None;
        }
    }
    Some(added)
}

/// Candidate term orders of `dst` for matching: both orientations for `=` and `<>`.
fn orientations<'a>(dst: &Item<'a>) -> Vec<Vec<&'a Term>> {
    let mut v = vec![dst.terms.clone()];
    if dst.symmetric {
        v.push(vec![dst.terms[1], dst.terms[0]]);
    }
    v
}

/// Greedy check: items of `r_prime` are matched one at a time, the one with the most
/// unmatched variables first, each to the first target that fits. No backtracking,
/// so `None` means only that no witness was found.
pub fn subsumes_greedy(r_prime: &Rule, r: &Rule) -> Option<SubsumptionWitness> {
    let src = items(r_prime);
    let dst = items(r);
    let mut theta: BTreeMap<Symbol, Term> = BTreeMap::new();
    let mut done = vec![false; src.len()];
    for _ in 0..src.len() {
        let unmatched = |it: &Item| {
            it.terms
                .iter()
                .filter_map(|t| t.as_var())
                .filter(|v| !theta.contains_key(*v))
                .collect::<BTreeSet<_>>()
                .len()
        };
        let (k, _) = src
            .iter()
            .enumerate()
            .filter(|(i, _)| !done[*i])
            .max_by(|(i, a), (j, b)| unmatched(a).cmp(&unmatched(b)).then(j.cmp(i)))?;
        done[k] = true;
        let found = dst
            .iter()
            .filter(|d| compatible(&src[k], d))
            .flat_map(orientations)
            .any(|terms| extend(&mut theta, &src[k].terms, &terms).is_some());
        if !found {
            return None;
        }
    }
    let w = SubsumptionWitness { theta };
    debug_assert!(w.is_valid(r_prime, r));
    w.is_valid(r_prime, r).then_some(w)
}

pub const DEFAULT_EXACT_VARIABLE_BOUND: usize = 12;

/// Complete check by backtracking over all matchings.
pub fn subsumes_exact(r_prime: &Rule, r: &Rule) -> Result<bool> {
    subsumes_exact_bounded(r_prime, r, DEFAULT_EXACT_VARIABLE_BOUND)
}

pub fn subsumes_exact_bounded(r_prime: &Rule, r: &Rule, bound: usize) -> Result<bool> {
    let vars: BTreeSet<Symbol> = r_prime.vars().into_iter().chain(r.vars()).collect();
    if vars.len() > bound {
        return Err(Error::CapacityExceeded { what: "variables for exact subsumption", limit: bound });
    }
    let src = items(r_prime);
    let dst = items(r);
    let mut theta = BTreeMap::new();
    Ok(search(&src, &dst, 0, &mut theta))
}

fn search(src: &[Item], dst: &[Item], k: usize, theta: &mut BTreeMap<Symbol, Term>) -> bool {
    if k == src.len() {
        return true;
    }
    for d in dst.iter().filter(|d| compatible(&src[k], d)) {
        for terms in orientations(d) {
            if let Some(added) = extend(theta, &src[k].terms, &terms) {
                if search(src, dst, k + 1, theta) {
                    return true;
                }
                for v in added {
                    theta.remove(&v);
                }
            }
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PruneMode {
    Greedy,
    Exact,
}

/// Removes, in one pass, every rule subsumed by another retained rule. Of two rules
/// that subsume each other the earlier one is kept. Facts are untouched.
pub fn prune_redundant(p: &Program, mode: PruneMode) -> Result<Program> {
    let check = |a: &Rule, b: &Rule| -> Result<bool> {
        match mode {
            PruneMode::Greedy => Ok(subsumes_greedy(a, b).is_some()),
            PruneMode::Exact => subsumes_exact(a, b),
        }
    };
    let n = p.rules.len();
    let mut removed = vec![false; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || removed[j] {
                continue;
            }
            if check(&p.rules[j], &p.rules[i])? && (j < i || !check(&p.rules[i], &p.rules[j])?) {
                removed[i] = true;
                break;
            }
        }
    }
    let rules = p.rules.iter().zip(&removed).filter(|(_, r)| !**r).map(|(r, _)| r.clone()).collect();
    Ok(Program { rules, facts: p.facts.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program_with, ParseOptions};

    fn rules(text: &str) -> Vec<Rule> {
        parse_program_with(text, ParseOptions::unchecked()).unwrap().program.rules
    }

    #[test]
    fn variants_subsume_each_other() {
        let rs = rules(
            "sc(C1) v sc(C2) :- magic__sc__b(C1), magic__sc__b(C2), produced_by(P,C1,C2).\n\
             sc(C2) v sc(C1) :- magic__sc__b(C2), magic__sc__b(C1), produced_by(P,C1,C2).",
        );
        let w = subsumes_greedy(&rs[0], &rs[1]).unwrap();
        assert!(w.is_valid(&rs[0], &rs[1]));
        assert!(subsumes_greedy(&rs[1], &rs[0]).is_some());
        assert!(subsumes_exact(&rs[0], &rs[1]).unwrap());
    }

    #[test]
    fn identity_and_specialisation() {
        let rs = rules("p(X) :- e(X,Y).\np(X) :- e(X,X).");
        let w = subsumes_greedy(&rs[0], &rs[0]).unwrap();
        assert_eq!(w.theta.get(&Symbol::new("X")), Some(&Term::var("X")));
        let w = subsumes_greedy(&rs[0], &rs[1]).unwrap();
        assert_eq!(w.theta.get(&Symbol::new("Y")), Some(&Term::var("X")));
        assert!(subsumes_exact(&rs[0], &rs[1]).unwrap());
        assert!(!subsumes_exact(&rs[1], &rs[0]).unwrap());
    }

    #[test]
    fn non_subsumptions() {
        let rs = rules("p(a) :- e(a).\np(b) :- e(a).\nq :- a, b.\nq :- a.");
        assert!(!subsumes_exact(&rs[0], &rs[1]).unwrap());
        assert!(subsumes_greedy(&rs[0], &rs[1]).is_none());
        assert!(!subsumes_exact(&rs[2], &rs[3]).unwrap());
        assert!(subsumes_exact(&rs[3], &rs[2]).unwrap());
    }

    #[test]
    fn symmetric_builtins() {
        let rs = rules("p(X) :- e(X,Y), X <> Y.\np(X) :- e(X,Y), Y <> X.\np(X) :- e(X,Y), Y < X.\np(X) :- e(X,Y), X < Y.");
        assert!(subsumes_exact(&rs[0], &rs[1]).unwrap());
        assert!(subsumes_greedy(&rs[0], &rs[1]).is_some());
        assert!(!subsumes_exact(&rs[2], &rs[3]).unwrap());
    }

    #[test]
    fn greedy_may_miss() {
        // e(X,Y) has most unmatched variables and is matched first to e(a,b); f(Y) then fails.
        let rs = rules("p :- e(X,Y), f(Y).\np :- e(a,b), e(a,c), f(c).");
        assert!(subsumes_greedy(&rs[0], &rs[1]).is_none());
        assert!(subsumes_exact(&rs[0], &rs[1]).unwrap());
    }

    #[test]
    fn exact_bound() {
        let rs = rules("p(A,B,C,D,E,F,G) :- e(A,B,C,D,E,F,G).\nq(H,I,J,K,L,M) :- e(H,I,J,K,L,M,M).");
        assert!(matches!(subsumes_exact(&rs[0], &rs[1]), Err(Error::CapacityExceeded { .. })));
    }

    #[test]
    fn prune_keeps_first_variant() {
        let p = parse_program_with(
            "a(X) v a(Y) :- e(X,Y).\na(Y) v a(X) :- e(X,Y).\nb(X) :- e(X,Y).\nb(X) :- e(X,X).\ne(1,2).",
            ParseOptions::unchecked(),
        )
        .unwrap()
        .program;
        for mode in [PruneMode::Greedy, PruneMode::Exact] {
            let q = prune_redundant(&p, mode).unwrap();
            let shown: Vec<String> = q.rules.iter().map(Rule::to_string).collect();
            assert_eq!(shown, ["a(X) v a(Y) :- e(X,Y).", "b(X) :- e(X,Y)."]);
            assert_eq!(q.facts, p.facts);
        }
        let untouched = parse_program_with("p(X) :- e(X).\nq(X) :- e(X).", ParseOptions::unchecked()).unwrap().program;
        assert_eq!(prune_redundant(&untouched, PruneMode::Greedy).unwrap(), untouched);
    }

    #[test]
    fn prune_rewritten_strategic_companies() {
        let p = crate::parser::parse_program(
            "sc(C1) v sc(C2) :- produced_by(P,C1,C2).\n\
             sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n",
        )
        .unwrap()
        .program;
        let q = crate::syntax::Atom::new("sc", vec![Term::sym("c")]);
        let out = crate::rewriter::dms(&q, &p).unwrap().program();
        let pruned = prune_redundant(&out, PruneMode::Greedy).unwrap();
        assert_eq!(pruned.rules.len() + 1, out.rules.len());
        let dropped = "sc(C2) v sc(C1) :- magic__sc__b(C2), magic__sc__b(C1), produced_by(P,C1,C2).";
        assert!(out.rules.iter().any(|r| r.to_string() == dropped));
        assert!(pruned.rules.iter().all(|r| r.to_string() != dropped));
        assert_eq!(prune_redundant(&out, PruneMode::Exact).unwrap(), pruned);
    }
}
