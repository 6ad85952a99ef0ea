//! Abstract syntax of disjunctive Datalog with stratified negation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Interned-by-refcount string used for predicate, constant and variable names.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Constant {
    Int(u64),
    Sym(Symbol),
}

impl Constant {
    pub fn sym(s: &str) -> Self {
        Constant::Sym(Symbol::new(s))
    }
}

pub(crate) fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(n) => write!(f, "{n}"),
            Constant::Sym(s) if is_plain_identifier(s.as_str()) && s.as_str() != "not" => {
                f.write_str(s.as_str())
            }
            Constant::Sym(s) => {
                f.write_str("\"")?;
                for c in s.as_str().chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Const(Constant),
    Var(Symbol),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Symbol::new(name))
    }

    pub fn sym(name: &str) -> Self {
        Term::Const(Constant::sym(name))
    }

    pub fn int(n: u64) -> Self {
        Term::Const(Constant::Int(n))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Constant> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn apply(&self, theta: &Substitution) -> Term {
        match self {
            Term::Var(v) => match theta.get(v) {
                Some(c) => Term::Const(c.clone()),
                None => self.clone(),
            },
            Term::Const(_) => self.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => c.fmt(f),
            Term::Var(v) => v.fmt(f),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom { predicate: Symbol::new(predicate), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for t in &self.args {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn apply(&self, theta: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| t.apply(theta)).collect(),
        }
    }

    /// Extends `theta` so that `self` instantiates to the ground atom `ground`.
    pub fn match_ground(&self, ground: &Atom, theta: &mut Substitution) -> bool {
        if self.predicate != ground.predicate || self.args.len() != ground.args.len() {
            return false;
        }
        let mut added: Vec<Symbol> = Vec::new();
        for (t, g) in self.args.iter().zip(&ground.args) {
            let Term::Const(gc) = g else { return false };
            let ok = match t {
                Term::Const(c) => c == gc,
                Term::Var(v) => match theta.get(v) {
                    Some(bound) => bound == gc,
                    None => {
                        theta.insert(v.clone(), gc.clone());
                        added.push(v.clone());
                        true
                    }
                },
            };
            if !ok {
                for v in added {
                    theta.remove(&v);
                }
                return false;
            }
        }
        true
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.as_str())?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                t.fmt(f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CmpOp {
    Eq,
    Neq,
    Lt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Neq => "<>",
            CmpOp::Lt => "<",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Neq)
    }
}

/// Builtin comparison between two terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Comparison {
    pub op: CmpOp,
    pub left: Term,
    pub right: Term,
}

impl Comparison {
    pub fn new(op: CmpOp, left: Term, right: Term) -> Self {
        Comparison { op, left, right }
    }

    pub fn vars(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        for t in [&self.left, &self.right] {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn apply(&self, theta: &Substitution) -> Comparison {
        Comparison {
            op: self.op,
            left: self.left.apply(theta),
            right: self.right.apply(theta),
        }
    }

    /// Evaluates the comparison once both sides are ground. Returns `None` while a side is a variable.
    pub fn eval(&self) -> Option<crate::Result<bool>> {
        let (Term::Const(l), Term::Const(r)) = (&self.left, &self.right) else {
            return None;
        };
        Some(compare_constants(self.op, l, r))
    }
}

/// Integers compare numerically and symbols lexicographically. Ordering across kinds is an error.
pub fn compare_constants(op: CmpOp, l: &Constant, r: &Constant) -> crate::Result<bool> {
    match op {
        CmpOp::Eq => Ok(l == r),
        CmpOp::Neq => Ok(l != r),
        CmpOp::Lt => match (l, r) {
            (Constant::Int(a), Constant::Int(b)) => Ok(a < b),
            (Constant::Sym(a), Constant::Sym(b)) => Ok(a.as_str() < b.as_str()),
            _ => Err(crate::Error::IncomparableConstants(format!("{l} < {r}"))),
        },
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.left, self.op.symbol(), self.right)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Comparison),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp(_) => None,
        }
    }

    pub fn vars(&self) -> Vec<Symbol> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.vars(),
            Literal::Cmp(c) => c.vars(),
        }
    }

    pub fn apply(&self, theta: &Substitution) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Pos(a.apply(theta)),
            Literal::Neg(a) => Literal::Neg(a.apply(theta)),
            Literal::Cmp(c) => Literal::Cmp(c.apply(theta)),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => a.fmt(f),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp(c) => c.fmt(f),
        }
    }
}

/// A rule `h1 v ... v hn :- b1, ..., bm.` Head atoms and body literals keep their
/// written order; exact duplicates are dropped on construction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Rule {
    pub head: Vec<Atom>,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Vec<Atom>, body: Vec<Literal>) -> Self {
        let mut h: Vec<Atom> = Vec::with_capacity(head.len());
        for a in head {
            if !h.contains(&a) {
                h.push(a);
            }
        }
        let mut b: Vec<Literal> = Vec::with_capacity(body.len());
        for l in body {
            if !b.contains(&l) {
                b.push(l);
            }
        }
        Rule { head: h, body: b }
    }

    pub fn fact(atom: Atom) -> Self {
        Rule { head: vec![atom], body: Vec::new() }
    }

    pub fn is_disjunctive(&self) -> bool {
        self.head.len() > 1
    }

    pub fn positive_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
    }

    pub fn negative_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            Literal::Neg(a) => Some(a),
            _ => None,
        })
    }

    pub fn comparisons(&self) -> impl Iterator<Item = &Comparison> {
        self.body.iter().filter_map(|l| match l {
            Literal::Cmp(c) => Some(c),
            _ => None,
        })
    }

    /// All variables, in order of first occurrence (head first).
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        let mut push = |vs: Vec<Symbol>| {
            for v in vs {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        for a in &self.head {
            push(a.vars());
        }
        for l in &self.body {
            push(l.vars());
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.vars().is_empty()
    }

    pub fn apply(&self, theta: &Substitution) -> Rule {
        Rule::new(
            self.head.iter().map(|a| a.apply(theta)).collect(),
            self.body.iter().map(|l| l.apply(theta)).collect(),
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" v ")?;
            }
            a.fmt(f)?;
        }
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                l.fmt(f)?;
            }
        }
        f.write_str(".")
    }
}

/// Rules plus ground EDB facts.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
}

impl Program {
    pub fn new(rules: Vec<Rule>, facts: Vec<Atom>) -> Self {
        let mut p = Program::default();
        for r in rules {
            p.push_rule(r);
        }
        for f in facts {
            p.push_fact(f);
        }
        p
    }

    pub fn push_rule(&mut self, rule: Rule) -> bool {
        if self.rules.contains(&rule) {
            return false;
        }
        self.rules.push(rule);
        true
    }

    pub fn push_fact(&mut self, fact: Atom) -> bool {
        debug_assert!(fact.is_ground());
        if self.facts.contains(&fact) {
            return false;
        }
        self.facts.push(fact);
        true
    }

    /// Predicate symbols with their arities, in first-occurrence order by name.
    pub fn predicates(&self) -> BTreeMap<Symbol, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rules {
            for a in r.head.iter().chain(r.body.iter().filter_map(Literal::atom)) {
                out.entry(a.predicate.clone()).or_insert(a.arity());
            }
        }
        for f in &self.facts {
            out.entry(f.predicate.clone()).or_insert(f.arity());
        }
        out
    }

    /// Constants occurring anywhere in the program (the Herbrand universe).
    pub fn constants(&self) -> BTreeSet<Constant> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        };
        for r in &self.rules {
            for a in &r.head {
                a.args.iter().for_each(&mut add);
            }
            for l in &r.body {
                match l {
                    Literal::Pos(a) | Literal::Neg(a) => a.args.iter().for_each(&mut add),
                    Literal::Cmp(c) => {
                        add(&c.left);
                        add(&c.right);
                    }
                }
            }
        }
        for f in &self.facts {
            f.args.iter().for_each(&mut add);
        }
        out
    }

    pub fn is_disjunction_free(&self) -> bool {
        self.rules.iter().all(|r| !r.is_disjunctive())
    }
}

/// A query `g1, ..., gn ?`. Multi-atom queries are folded into an auxiliary rule before evaluation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Query {
    pub atoms: Vec<Atom>,
}

impl Query {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Query { atoms }
    }

    pub fn atom(atom: Atom) -> Self {
        Query { atoms: vec![atom] }
    }

    pub fn vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for a in &self.atoms {
            for v in a.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn is_ground(&self) -> bool {
        self.atoms.iter().all(Atom::is_ground)
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        self.atoms
            .iter()
            .flat_map(|a| a.args.iter().filter_map(Term::as_const).cloned())
            .collect()
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            a.fmt(f)?;
        }
        f.write_str("?")
    }
}

/// Mapping from variables to constants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Substitution(BTreeMap<Symbol, Constant>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn get(&self, v: &Symbol) -> Option<&Constant> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: Symbol, c: Constant) -> Option<Constant> {
        self.0.insert(v, c)
    }

    pub fn remove(&mut self, v: &Symbol) -> Option<Constant> {
        self.0.remove(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Constant)> {
        self.0.iter()
    }

    /// Keeps only the listed variables.
    pub fn restrict(&self, vars: &[Symbol]) -> Substitution {
        Substitution(
            self.0
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

impl FromIterator<(Symbol, Constant)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Symbol, Constant)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// A set of ground atoms taken as true.
pub type Interpretation = BTreeSet<Atom>;
