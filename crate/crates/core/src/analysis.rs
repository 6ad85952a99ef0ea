//! Predicate classification, safety and stratification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::syntax::{Literal, Program, Rule, Symbol};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum PredicateKind {
    Edb,
    Idb,
}

/// IDB predicates head a rule with a nonempty body or a disjunctive rule.
pub fn idb_predicates(p: &Program) -> BTreeSet<Symbol> {
    p.rules
        .iter()
        .filter(|r| !r.body.is_empty() || r.is_disjunctive())
        .flat_map(|r| r.head.iter().map(|a| a.predicate.clone()))
        .collect()
}

/// Classifies every predicate of `p`. A predicate that is IDB and also has facts
/// (in `p.facts` or as bodiless single-head rules) is rejected.
pub fn classify_predicates(p: &Program) -> Result<BTreeMap<Symbol, PredicateKind>> {
    let idb = idb_predicates(p);
    for f in &p.facts {
        if idb.contains(&f.predicate) {
            return Err(Error::MixedClassification { predicate: f.predicate.clone() });
        }
    }
    for r in &p.rules {
        if r.body.is_empty() && !r.is_disjunctive() && idb.contains(&r.head[0].predicate) {
            return Err(Error::MixedClassification { predicate: r.head[0].predicate.clone() });
        }
    }
    Ok(classify_lenient(p))
}

/// Classification without the mixed-use check; bodiless rules over IDB predicates stay IDB.
pub fn classify_lenient(p: &Program) -> BTreeMap<Symbol, PredicateKind> {
    let idb = idb_predicates(p);
    p.predicates()
        .into_keys()
        .map(|pred| {
            let kind = if idb.contains(&pred) { PredicateKind::Idb } else { PredicateKind::Edb };
            (pred, kind)
        })
        .collect()
}

/// Returns the first variable (in order of occurrence) that has no occurrence in a
/// positive, non-builtin body atom.
pub fn check_safety(r: &Rule) -> Option<Symbol> {
    let safe: BTreeSet<Symbol> = r.positive_atoms().flat_map(|a| a.vars()).collect();
    r.vars().into_iter().find(|v| !safe.contains(v))
}

/// Returns a witness cycle `[p, q, ..., p]` through a negative dependency, if one exists.
/// An edge `p -> q` means some rule with `p` in the head has `q` in its body.
pub fn check_stratification(p: &Program) -> Option<Vec<Symbol>> {
    let deps = dependency_edges(p);
    let mut adjacency: BTreeMap<&Symbol, Vec<&Symbol>> = BTreeMap::new();
    for (from, to, _) in &deps {
        adjacency.entry(from).or_default().push(to);
    }
    for (from, to, negative) in &deps {
        if !negative {
            continue;
        }
        if let Some(path) = find_path(&adjacency, to, from) {
            let mut cycle = vec![from.clone()];
            cycle.extend(path.into_iter().cloned());
            return Some(cycle);
        }
    }
    None
}

/// Dependency edges in rule order: (head predicate, body predicate, through negation).
/// Head atoms of the same rule also depend on each other positively.
pub fn dependency_edges(p: &Program) -> Vec<(Symbol, Symbol, bool)> {
    let mut edges = Vec::new();
    for r in &p.rules {
        for h in &r.head {
            for l in &r.body {
                match l {
                    Literal::Pos(a) => edges.push((h.predicate.clone(), a.predicate.clone(), false)),
                    Literal::Neg(a) => edges.push((h.predicate.clone(), a.predicate.clone(), true)),
                    Literal::Cmp(_) => {}
                }
            }
            for h2 in &r.head {
                if h2 != h {
                    edges.push((h.predicate.clone(), h2.predicate.clone(), false));
                }
            }
        }
    }
    edges
}

fn find_path<'a>(
    adjacency: &BTreeMap<&'a Symbol, Vec<&'a Symbol>>,
    start: &'a Symbol,
    goal: &'a Symbol,
) -> Option<Vec<&'a Symbol>> {
    let mut parent: BTreeMap<&Symbol, &Symbol> = BTreeMap::new();
    let mut seen: BTreeSet<&Symbol> = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            let mut path = vec![node];
            let mut cur = node;
            while cur != start {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &next in adjacency.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            if seen.insert(next) {
                parent.insert(next, node);
                queue.push_back(next);
            }
        }
    }
    None
}

/// Checks arities, safety, classification and stratification of a program.
pub fn validate(p: &Program) -> Result<()> {
    check_arities(p)?;
    for r in &p.rules {
        if let Some(v) = check_safety(r) {
            return Err(Error::UnsafeRule { rule: r.to_string(), variable: v, span: None });
        }
    }
    classify_predicates(p)?;
    if let Some(cycle) = check_stratification(p) {
        return Err(Error::Unstratified { cycle, span: None });
    }
    Ok(())
}

pub fn check_arities(p: &Program) -> Result<()> {
    let mut arity: BTreeMap<Symbol, usize> = BTreeMap::new();
    let atoms = p
        .rules
        .iter()
        .flat_map(|r| r.head.iter().chain(r.body.iter().filter_map(Literal::atom)))
        .chain(p.facts.iter());
    for a in atoms {
        let expected = *arity.entry(a.predicate.clone()).or_insert(a.arity());
        if expected != a.arity() {
            return Err(Error::ArityMismatch {
                predicate: a.predicate.clone(),
                expected,
                found: a.arity(),
                span: None,
            });
        }
    }
    Ok(())
}
