//! Sideways information passing: which atoms of a rule pass bindings to which.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::syntax::{Atom, Literal, Rule, Symbol, Term};

/// Binding pattern over {b, f}, one letter per argument.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Adornment(String);

impl Adornment {
    pub fn parse(letters: &str) -> Result<Self> {
        if letters.chars().all(|c| c == 'b' || c == 'f') {
            Ok(Adornment(letters.to_string()))
        } else {
            Err(Error::PreconditionFailed(format!("invalid adornment `{letters}`")))
        }
    }

    pub fn from_bound(bound: impl IntoIterator<Item = bool>) -> Self {
        Adornment(bound.into_iter().map(|b| if b { 'b' } else { 'f' }).collect())
    }

    /// Adornment of `atom` when exactly the variables in `bound` are bound.
    pub fn of(atom: &Atom, bound: &BTreeSet<Symbol>) -> Self {
        Adornment::from_bound(atom.args.iter().map(|t| match t {
            Term::Const(_) => true,
            Term::Var(v) => bound.contains(v),
        }))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_bound(&self, i: usize) -> bool {
        self.0.as_bytes()[i] == b'b'
    }

    pub fn bound_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.bytes().enumerate().filter(|(_, c)| *c == b'b').map(|(i, _)| i)
    }

    /// Arguments at bound positions.
    pub fn bound_args<'a>(&'a self, atom: &'a Atom) -> impl Iterator<Item = &'a Term> + 'a {
        self.bound_positions().map(move |i| &atom.args[i])
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An atom occurrence in a rule: index into the head or into the body.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Occurrence {
    Head(usize),
    Body(usize),
}

/// A strict partial order over the rule's atom occurrences plus the variables each
/// occurrence binds, for one head atom and adornment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sips {
    rule: Rule,
    head: usize,
    adornment: Adornment,
    before: BTreeSet<(Occurrence, Occurrence)>,
    binds: BTreeMap<Occurrence, BTreeSet<Symbol>>,
    chain: Vec<usize>,
}

impl Sips {
    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn adornment(&self) -> &Adornment {
        &self.adornment
    }

    /// True iff `a` strictly precedes `b`.
    pub fn precedes(&self, a: Occurrence, b: Occurrence) -> bool {
        self.before.contains(&(a, b))
    }

    pub fn binds(&self, occ: Occurrence) -> BTreeSet<Symbol> {
        self.binds.get(&occ).cloned().unwrap_or_default()
    }

    /// Positive body atoms in the order they were placed in the chain.
    pub fn chain(&self) -> &[usize] {
        &self.chain
    }

    /// Variables bound by the head adornment.
    pub fn head_bound(&self) -> BTreeSet<Symbol> {
        self.binds(Occurrence::Head(self.head))
    }

    /// The part of `binds(occ)` not already bound when `occ` is reached in the chain.
    pub fn new_bindings(&self, occ: Occurrence) -> BTreeSet<Symbol> {
        let mut known = self.head_bound();
        if let Occurrence::Body(i) = occ {
            for &j in &self.chain {
                if j == i {
                    break;
                }
                known.extend(self.binds(Occurrence::Body(j)));
            }
        }
        self.binds(occ).difference(&known).cloned().collect()
    }

    /// Positive body occurrences that precede `occ`, in body order.
    pub fn preceding_body_atoms(&self, occ: Occurrence) -> Vec<usize> {
        (0..self.rule.body.len())
            .filter(|&j| matches!(self.rule.body[j], Literal::Pos(_)) && self.precedes(Occurrence::Body(j), occ))
            .collect()
    }

    fn occurrences(&self) -> Vec<Occurrence> {
        let heads = (0..self.rule.head.len()).map(Occurrence::Head);
        let body = (0..self.rule.body.len())
            .filter(|&i| !matches!(self.rule.body[i], Literal::Cmp(_)))
            .map(Occurrence::Body);
        heads.chain(body).collect()
    }

    fn atom(&self, occ: Occurrence) -> Option<&Atom> {
        match occ {
            Occurrence::Head(i) => self.rule.head.get(i),
            Occurrence::Body(i) => self.rule.body.get(i).and_then(Literal::atom),
        }
    }

    /// Checks the structural requirements: the propagating head precedes every other
    /// occurrence, other head atoms and negative atoms precede nothing, the order is
    /// irreflexive and transitive, and binds stay within each atom's variables.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::PreconditionFailed(m));
        let occs = self.occurrences();
        let h = Occurrence::Head(self.head);
        for &o in &occs {
            if o != h && !self.precedes(h, o) {
                return fail(format!("head does not precede {o:?}"));
            }
        }
        for &(a, b) in &self.before {
            if a == b {
                return fail(format!("{a:?} precedes itself"));
            }
            let passive = match a {
                Occurrence::Head(i) => i != self.head,
                Occurrence::Body(i) => matches!(self.rule.body[i], Literal::Neg(_)),
            };
            if passive {
                return fail(format!("{a:?} may not precede {b:?}"));
            }
            for &(c, d) in &self.before {
                if c == b && !self.precedes(a, d) {
                    return fail(format!("order is not transitive at {a:?}, {b:?}, {d:?}"));
                }
            }
        }
        for (o, vars) in &self.binds {
            let Some(atom) = self.atom(*o) else { return fail(format!("binds on a non-atom {o:?}")) };
            let own: BTreeSet<Symbol> = atom.vars().into_iter().collect();
            if !vars.is_subset(&own) {
                return fail(format!("binds of {o:?} exceed its variables"));
            }
        }
        Ok(())
    }
}

/// The default strategy. Positive non-builtin body atoms form a chain. The next atom
/// is the one with most bound argument positions, ties going to body order. A chain
/// atom with at least one bound argument binds all its variables.
///
/// Precedence is kept as sparse as the chain allows: a chain atom precedes a later
/// occurrence only when it binds one of that occurrence's variables not already
/// bound by the head. Adornments are the same as with a total chain order.
pub fn default_sips(r: &Rule, head: usize, a: &Adornment) -> Sips {
    assert!(head < r.head.len(), "head index out of range");
    assert_eq!(a.len(), r.head[head].arity(), "adornment length must equal the head arity");
    let head_atom = &r.head[head];
    let head_bound: BTreeSet<Symbol> =
        a.bound_positions().filter_map(|i| head_atom.args[i].as_var().cloned()).collect();

    let mut bound = head_bound.clone();
    let mut remaining: Vec<usize> =
        (0..r.body.len()).filter(|&i| matches!(r.body[i], Literal::Pos(_))).collect();
    let mut chain = Vec::new();
    let mut binds: BTreeMap<Occurrence, BTreeSet<Symbol>> = BTreeMap::new();
    binds.insert(Occurrence::Head(head), head_bound.clone());
    while !remaining.is_empty() {
        let count = |i: usize| {
            let atom = r.body[i].atom().unwrap();
            atom.args
                .iter()
                .filter(|t| match t {
                    Term::Const(_) => true,
                    Term::Var(v) => bound.contains(v),
                })
                .count()
        };
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &x), (_, &y)| count(x).cmp(&count(y)).then(y.cmp(&x)))
            .unwrap();
        let vars: BTreeSet<Symbol> = if count(best) > 0 {
            r.body[best].atom().unwrap().vars().into_iter().collect()
        } else {
            BTreeSet::new()
        };
        bound.extend(vars.iter().cloned());
        binds.insert(Occurrence::Body(best), vars);
        chain.push(best);
        remaining.remove(pos);
    }

    let h = Occurrence::Head(head);
    let mut sips = Sips {
        rule: r.clone(),
        head,
        adornment: a.clone(),
        before: BTreeSet::new(),
        binds,
        chain: chain.clone(),
    };
    let occs = sips.occurrences();
    let mut edges: BTreeSet<(Occurrence, Occurrence)> = BTreeSet::new();
    for &o in &occs {
        if o != h {
            edges.insert((h, o));
        }
    }
    let vars_of = |o: Occurrence| -> BTreeSet<Symbol> {
        sips.atom(o).map(|a| a.vars().into_iter().collect()).unwrap_or_default()
    };
    let rank = |o: Occurrence| match o {
        Occurrence::Body(i) => chain.iter().position(|&j| j == i).unwrap_or(usize::MAX),
        Occurrence::Head(_) => usize::MAX,
    };
    for (k, &qi) in chain.iter().enumerate() {
        let q = Occurrence::Body(qi);
        let qb = sips.binds(q);
        if qb.is_empty() {
            continue;
        }
        for &t in &occs {
            if t == h || t == q || rank(t) <= k {
                continue;
            }
            let fresh: BTreeSet<Symbol> = vars_of(t).difference(&head_bound).cloned().collect();
            if !qb.is_disjoint(&fresh) {
                edges.insert((q, t));
            }
        }
    }
    // Transitive closure; the relation is acyclic because edges follow chain order.
    loop {
        let mut added = Vec::new();
        for &(a, b) in &edges {
            for &(c, d) in edges.range((b, Occurrence::Head(0))..) {
                if c != b {
                    break;
                }
                if !edges.contains(&(a, d)) {
                    added.push((a, d));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        edges.extend(added);
    }
    sips.before = edges;
    debug_assert!(sips.validate().is_ok());
    sips
}

/// Adornment of the atom at `target`: an argument is bound if it is a constant, a
/// variable bound by the head adornment, or a variable bound by a preceding positive
/// body atom. Builtins have no adornment.
pub fn compute_adornment(target: Occurrence, s: &Sips) -> Option<Adornment> {
    let atom = s.atom(target)?;
    let mut bound = s.head_bound();
    for j in s.preceding_body_atoms(target) {
        bound.extend(s.binds(Occurrence::Body(j)));
    }
    Some(Adornment::of(atom, &bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program_with, ParseOptions};

    fn rule(text: &str) -> Rule {
        parse_program_with(text, ParseOptions::unchecked()).unwrap().program.rules.remove(0)
    }

    fn syms(names: &[&str]) -> BTreeSet<Symbol> {
        names.iter().map(|n| Symbol::new(n)).collect()
    }

    fn b() -> Adornment {
        Adornment::parse("b").unwrap()
    }

    #[test]
    fn controlled_by_precedes_body_companies() {
        let r4 = rule("sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).");
        let s = default_sips(&r4, 0, &b());
        s.validate().unwrap();
        assert_eq!(s.chain(), &[0, 1, 2, 3]);
        assert_eq!(s.new_bindings(Occurrence::Body(0)), syms(&["C1", "C2", "C3"]));
        assert_eq!(s.binds(Occurrence::Body(0)), syms(&["C", "C1", "C2", "C3"]));
        for i in 1..=3 {
            assert!(s.precedes(Occurrence::Body(0), Occurrence::Body(i)));
            assert_eq!(compute_adornment(Occurrence::Body(i), &s).unwrap().as_str(), "b");
            assert_eq!(s.preceding_body_atoms(Occurrence::Body(i)), vec![0]);
        }
    }

    #[test]
    fn produced_by_passes_to_other_head() {
        let r3 = rule("sc(C1) v sc(C2) :- produced_by(P,C1,C2).");
        let s = default_sips(&r3, 0, &b());
        assert_eq!(s.new_bindings(Occurrence::Body(0)), syms(&["P", "C2"]));
        assert!(s.precedes(Occurrence::Body(0), Occurrence::Head(1)));
        assert!(!s.precedes(Occurrence::Head(1), Occurrence::Body(0)));
        assert_eq!(compute_adornment(Occurrence::Head(1), &s).unwrap().as_str(), "b");
        assert_eq!(compute_adornment(Occurrence::Head(0), &s).unwrap().as_str(), "b");
    }

    #[test]
    fn negative_atom_gets_head_binding_only() {
        let r = rule("nsc(C) :- company(C), not sc(C).");
        let s = default_sips(&r, 0, &b());
        assert_eq!(compute_adornment(Occurrence::Body(1), &s).unwrap().as_str(), "b");
        assert!(s.preceding_body_atoms(Occurrence::Body(1)).is_empty());
    }

    #[test]
    fn empty_body_and_constants() {
        let r = rule("p(X,a) v q(b).");
        let s = default_sips(&r, 0, &Adornment::parse("fb").unwrap());
        s.validate().unwrap();
        assert!(s.chain().is_empty());
        assert_eq!(compute_adornment(Occurrence::Head(1), &s).unwrap().as_str(), "b");
        assert!(s.binds(Occurrence::Head(0)).is_empty());
    }

    #[test]
    fn greedy_choice_and_ties() {
        let r = rule("p(X,Y) :- e(Z,W), f(W,Y), g(X,Z).");
        let s = default_sips(&r, 0, &Adornment::parse("bf").unwrap());
        // g has one bound argument (X); ties are impossible at the first step
        assert_eq!(s.chain(), &[2, 0, 1]);
        let r = rule("p(X) :- e(X,Y), f(X,Z).");
        let s = default_sips(&r, 0, &b());
        assert_eq!(s.chain(), &[0, 1]);
        assert!(!s.precedes(Occurrence::Body(0), Occurrence::Body(1)));
    }

    #[test]
    fn unbound_atoms_bind_nothing() {
        let r = rule("p(X) :- e(Y), f(Y,X).");
        let s = default_sips(&r, 0, &Adornment::parse("f").unwrap());
        assert_eq!(s.chain(), &[0, 1]);
        assert!(s.binds(Occurrence::Body(0)).is_empty());
        assert!(s.binds(Occurrence::Body(1)).is_empty());
        assert_eq!(compute_adornment(Occurrence::Body(1), &s).unwrap().as_str(), "ff");
    }

    #[test]
    fn builtins_are_outside_the_order() {
        let r = rule("p(X) :- e(X,Y), Y <> X, q(Y).");
        let s = default_sips(&r, 0, &b());
        assert!(compute_adornment(Occurrence::Body(1), &s).is_none());
        assert!(!s.precedes(Occurrence::Head(0), Occurrence::Body(1)));
        assert_eq!(compute_adornment(Occurrence::Body(2), &s).unwrap().as_str(), "b");
    }
}
