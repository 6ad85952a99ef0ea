//! The dynamic magic-set rewriting, plus the killed-atom and magic-variant
//! constructions used to check it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::analysis::{check_arities, check_safety, classify_lenient, PredicateKind};
use crate::error::{Error, Result};
use crate::oracle::{self, GroundProgram, OracleLimits};
use crate::query::{self, PreparedQuery};
use crate::sips::{compute_adornment, default_sips, Adornment, Occurrence, Sips};
use crate::syntax::{Atom, Interpretation, Literal, Program, Query, Rule, Symbol, Term};

pub const MAGIC_PREFIX: &str = "magic__";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AdornedPredicate {
    pub predicate: Symbol,
    pub adornment: Adornment,
}

impl AdornedPredicate {
    pub fn new(predicate: Symbol, adornment: Adornment) -> Self {
        AdornedPredicate { predicate, adornment }
    }

    /// `p__bf`, or `p` for the empty adornment.
    pub fn adorned_name(&self) -> String {
        if self.adornment.is_empty() {
            self.predicate.to_string()
        } else {
            format!("{}__{}", self.predicate, self.adornment)
        }
    }

    /// `magic__p__bf`, or `magic__p` for the empty adornment.
    pub fn magic_name(&self) -> String {
        format!("{MAGIC_PREFIX}{}", self.adorned_name())
    }

    /// The magic atom for an instance of this predicate: bound arguments only.
    pub fn magic_atom(&self, atom: &Atom) -> Atom {
        MagicAtom::of(self, atom).to_atom()
    }
}

impl fmt::Display for AdornedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.predicate, self.adornment)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MagicAtom {
    pub base: AdornedPredicate,
    pub bound_args: Vec<Term>,
}

impl MagicAtom {
    pub fn of(base: &AdornedPredicate, atom: &Atom) -> Self {
        MagicAtom {
            base: base.clone(),
            bound_args: base.adornment.bound_args(atom).cloned().collect(),
        }
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(&self.base.magic_name(), self.bound_args.clone())
    }
}

/// A rule with an adornment for each IDB atom occurrence. The propagating head atom is
/// moved to the front of the head.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdornedRule {
    pub rule: Rule,
    pub head_adornments: Vec<Adornment>,
    pub body_adornments: Vec<Option<Adornment>>,
    pub sips: Sips,
}

impl AdornedRule {
    pub fn propagating(&self) -> AdornedPredicate {
        AdornedPredicate::new(self.rule.head[0].predicate.clone(), self.head_adornments[0].clone())
    }

    /// Adorned occurrences other than the propagating head, with their adorned predicates.
    pub fn adorned_occurrences(&self) -> Vec<(Occurrence, AdornedPredicate)> {
        let heads = self.head_adornments.iter().enumerate().skip(1).map(|(i, a)| {
            (Occurrence::Head(i), AdornedPredicate::new(self.rule.head[i].predicate.clone(), a.clone()))
        });
        let body = self.body_adornments.iter().enumerate().filter_map(|(i, a)| {
            let a = a.as_ref()?;
            let atom = self.rule.body[i].atom()?;
            Some((Occurrence::Body(i), AdornedPredicate::new(atom.predicate.clone(), a.clone())))
        });
        heads.chain(body).collect()
    }

    fn atom(&self, occ: Occurrence) -> &Atom {
        match occ {
            Occurrence::Head(i) => &self.rule.head[i],
            Occurrence::Body(i) => self.rule.body[i].atom().expect("adorned occurrence is an atom"),
        }
    }

    /// The rule written with adorned predicate names (`sc__b(C1) v sc__b(C2) :- ...`).
    pub fn to_rule(&self) -> Rule {
        let adorn = |a: &Atom, ad: &Adornment| Atom {
            predicate: Symbol::new(&AdornedPredicate::new(a.predicate.clone(), ad.clone()).adorned_name()),
            args: a.args.clone(),
        };
        let head = self.rule.head.iter().zip(&self.head_adornments).map(|(a, ad)| adorn(a, ad)).collect();
        let body = self
            .rule
            .body
            .iter()
            .zip(&self.body_adornments)
            .map(|(l, ad)| match (l, ad) {
                (Literal::Pos(a), Some(ad)) => Literal::Pos(adorn(a, ad)),
                (Literal::Neg(a), Some(ad)) => Literal::Neg(adorn(a, ad)),
                (l, _) => l.clone(),
            })
            .collect();
        Rule { head, body }
    }
}

/// Output of the rewriting. Together with the EDB facts it forms the rewritten program.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RewriteOutput {
    pub query: Atom,
    pub seed: Rule,
    pub magic_rules: Vec<Rule>,
    pub modified_rules: Vec<Rule>,
    pub edb: Vec<Atom>,
    /// Adorned predicates in processing order.
    pub adorned: Vec<AdornedPredicate>,
}

impl RewriteOutput {
    /// Seed, magic rules, modified rules, then the EDB facts. The seed becomes a fact
    /// when no rule with a body derives its predicate.
    pub fn program(&self) -> Program {
        let mut rules = vec![self.seed.clone()];
        rules.extend(self.magic_rules.iter().cloned());
        rules.extend(self.modified_rules.iter().cloned());
        let mut p = Program::new(rules, self.edb.clone());
        let seed_pred = &self.seed.head[0].predicate;
        let derived = p.rules.iter().any(|r| !r.body.is_empty() && r.head.iter().any(|h| h.predicate == *seed_pred));
        if !derived {
            let seed = p.rules.remove(0);
            p.facts.insert(0, seed.head[0].clone());
        }
        p
    }

    /// Maps each magic predicate name back to its adorned predicate.
    pub fn magic_predicates(&self) -> BTreeMap<Symbol, AdornedPredicate> {
        self.adorned.iter().map(|ap| (Symbol::new(&ap.magic_name()), ap.clone())).collect()
    }
}

/// True for predicate names produced by the rewriting.
pub fn is_magic_predicate(p: &Symbol) -> bool {
    p.as_str().starts_with(MAGIC_PREFIX)
}

/// Seed fact over the query constants and the adorned query predicate (b per constant).
pub fn build_query_seed(q: &Atom) -> (Rule, AdornedPredicate) {
    let adornment = Adornment::from_bound(q.args.iter().map(|t| !t.is_var()));
    let ap = AdornedPredicate::new(q.predicate.clone(), adornment);
    (Rule::fact(ap.magic_atom(q)), ap)
}

/// Adorns `r` for the head occurrence `head` under `ap`. Newly met adorned predicates
/// not in `done` are appended to `pending`.
pub fn adorn_rule(
    r: &Rule,
    head: usize,
    ap: &AdornedPredicate,
    idb: &BTreeSet<Symbol>,
    pending: &mut VecDeque<AdornedPredicate>,
    done: &BTreeSet<AdornedPredicate>,
) -> AdornedRule {
    assert_eq!(r.head[head].predicate, ap.predicate, "head occurrence must match the adorned predicate");
    let mut order: Vec<usize> = vec![head];
    order.extend((0..r.head.len()).filter(|&i| i != head));
    let rule = Rule { head: order.iter().map(|&i| r.head[i].clone()).collect(), body: r.body.clone() };
    let sips = default_sips(&rule, 0, &ap.adornment);
    let mut head_adornments = vec![ap.adornment.clone()];
    for i in 1..rule.head.len() {
        head_adornments.push(compute_adornment(Occurrence::Head(i), &sips).expect("head atom"));
    }
    let body_adornments = rule
        .body
        .iter()
        .enumerate()
        .map(|(i, l)| match l.atom() {
            Some(a) if idb.contains(&a.predicate) => compute_adornment(Occurrence::Body(i), &sips),
            _ => None,
        })
        .collect();
    let ra = AdornedRule { rule, head_adornments, body_adornments, sips };
    for (_, adorned) in ra.adorned_occurrences() {
        if !done.contains(&adorned) && !pending.contains(&adorned) {
            pending.push_back(adorned);
        }
    }
    ra
}

/// One magic rule per adorned occurrence other than the propagating head. The body is
/// the head's magic atom followed by the positive body atoms preceding the occurrence.
pub fn generate_magic_rules(ra: &AdornedRule) -> Vec<Rule> {
    let head_magic = ra.propagating().magic_atom(&ra.rule.head[0]);
    let mut out = Vec::new();
    for (occ, adorned) in ra.adorned_occurrences() {
        let mut body = vec![Literal::Pos(head_magic.clone())];
        for j in ra.sips.preceding_body_atoms(occ) {
            body.push(ra.rule.body[j].clone());
        }
        let rule = Rule::new(vec![adorned.magic_atom(ra.atom(occ))], body);
        debug_assert_eq!(rule.negative_atoms().count(), 0);
        if !out.contains(&rule) {
            out.push(rule);
        }
    }
    out
}

/// The rule with a magic atom for every head atom prepended to its body.
pub fn modify_rule(ra: &AdornedRule) -> Rule {
    let mut body: Vec<Literal> = ra
        .rule
        .head
        .iter()
        .zip(&ra.head_adornments)
        .map(|(a, ad)| Literal::Pos(AdornedPredicate::new(a.predicate.clone(), ad.clone()).magic_atom(a)))
        .collect();
    body.extend(ra.rule.body.iter().cloned());
    Rule::new(ra.rule.head.clone(), body)
}

/// Rewrites `p` for the single-atom query `q`.
pub fn dms(q: &Atom, p: &Program) -> Result<RewriteOutput> {
    check_arities(p)?;
    for r in &p.rules {
        if let Some(v) = check_safety(r) {
            return Err(Error::UnsafeRule { rule: r.to_string(), variable: v, span: None });
        }
    }
    let idb: BTreeSet<Symbol> = classify_lenient(p)
        .into_iter()
        .filter(|(_, k)| *k == PredicateKind::Idb)
        .map(|(s, _)| s)
        .collect();
    let (seed, first) = build_query_seed(q);
    let mut pending = VecDeque::from([first]);
    let mut done: BTreeSet<AdornedPredicate> = BTreeSet::new();
    let mut adorned = Vec::new();
    let mut magic_rules: Vec<Rule> = Vec::new();
    let mut modified_rules: Vec<Rule> = Vec::new();
    while let Some(ap) = pending.pop_front() {
        done.insert(ap.clone());
        adorned.push(ap.clone());
        for r in &p.rules {
            for (i, h) in r.head.iter().enumerate() {
                if h.predicate != ap.predicate {
                    continue;
                }
                let ra = adorn_rule(r, i, &ap, &idb, &mut pending, &done);
                for m in generate_magic_rules(&ra) {
                    if !magic_rules.contains(&m) {
                        magic_rules.push(m);
                    }
                }
                let modified = modify_rule(&ra);
                if !modified_rules.contains(&modified) {
                    modified_rules.push(modified);
                }
            }
        }
    }
    // Bodiless single-head rules over EDB predicates are facts too.
    let mut edb = p.facts.clone();
    for r in p.rules.iter().filter(|r| r.body.is_empty() && !r.is_disjunctive()) {
        if !idb.contains(&r.head[0].predicate) && !edb.contains(&r.head[0]) {
            edb.push(r.head[0].clone());
        }
    }
    Ok(RewriteOutput { query: q.clone(), seed, magic_rules, modified_rules, edb, adorned })
}

/// Prepares `q` (folding and constant repair) and rewrites the prepared program.
pub fn rewrite(q: &Query, p: &Program) -> Result<(PreparedQuery, RewriteOutput)> {
    let prep = query::prepare(q, p)?;
    let out = dms(&prep.goal, &prep.program)?;
    Ok((prep, out))
}

/// Magic atoms of `set`, decoded as (adorned predicate, bound arguments).
fn magic_index(set: &Interpretation, names: &BTreeMap<Symbol, AdornedPredicate>) -> BTreeSet<(Symbol, Vec<Term>)> {
    set.iter()
        .filter(|a| names.contains_key(&a.predicate))
        .map(|a| (a.predicate.clone(), a.args.clone()))
        .collect()
}

/// Some magic counterpart of `atom` occurs in `index`.
fn has_magic(atom: &Atom, adorned: &[AdornedPredicate], index: &BTreeSet<(Symbol, Vec<Term>)>) -> bool {
    adorned.iter().filter(|ap| ap.predicate == atom.predicate).any(|ap| {
        let m = ap.magic_atom(atom);
        index.contains(&(m.predicate, m.args))
    })
}

/// The sequence V0 ⊆ V1 ⊆ ... up to its fixpoint (the last element). `q` must be a
/// single atom over `p` (see [`query::prepare`]).
pub fn magic_variant_stages(i: &Interpretation, q: &Atom, p: &Program) -> Result<Vec<Interpretation>> {
    let out = dms(q, p)?;
    let dms_program = out.program();
    let magic_rules: Vec<Rule> = std::iter::once(&out.seed).chain(&out.magic_rules).cloned().collect();
    let u = oracle::universe(&dms_program);
    let ground = oracle::instantiate(&magic_rules, &u, OracleLimits::default())?;
    let names = out.magic_predicates();
    let mut v: Interpretation = out.edb.iter().cloned().collect();
    let mut stages = vec![v.clone()];
    loop {
        let index = magic_index(&v, &names);
        let mut next = v.clone();
        for a in i {
            if has_magic(a, &out.adorned, &index) {
                next.insert(a.clone());
            }
        }
        for g in &ground {
            if g.pos.iter().all(|a| v.contains(a)) {
                next.extend(g.head.iter().filter(|h| is_magic_predicate(&h.predicate)).cloned());
            }
        }
        if next == v {
            break;
        }
        v = next;
        stages.push(v.clone());
    }
    Ok(stages)
}

pub fn magic_variant(i: &Interpretation, q: &Atom, p: &Program) -> Result<Interpretation> {
    Ok(magic_variant_stages(i, q, p)?.pop().expect("at least one stage"))
}

/// Atoms of `B_P` outside `n_prime` that are EDB or have a magic counterpart in `n_prime`.
pub fn killed_set(m_prime: &Interpretation, n_prime: &Interpretation, q: &Atom, p: &Program) -> Result<BTreeSet<Atom>> {
    let out = dms(q, p)?;
    let g: GroundProgram = oracle::full_ground(&out.program())?;
    if !oracle::is_model(m_prime, &g) {
        return Err(Error::PreconditionFailed("M' is not a model of the rewritten program".into()));
    }
    if !n_prime.is_subset(m_prime) || !oracle::is_model(n_prime, &oracle::reduct(&g, m_prime)) {
        return Err(Error::PreconditionFailed("N' is not a model of the reduct below M'".into()));
    }
    let base = oracle::herbrand_base(p, OracleLimits::default())?;
    let kinds = classify_lenient(p);
    let index = magic_index(n_prime, &out.magic_predicates());
    Ok(base
        .into_iter()
        .filter(|k| !n_prime.contains(k))
        .filter(|k| kinds.get(&k.predicate) == Some(&PredicateKind::Edb) || has_magic(k, &out.adorned, &index))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{format_program, parse_interpretation, parse_program, parse_program_with, parse_query, ParseOptions};

    const PSC: &str = "sc(C1) v sc(C2) :- produced_by(P,C1,C2).\n\
                       sc(C) :- controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n";

    fn atom(text: &str) -> Atom {
        parse_query(text).unwrap().atoms.remove(0)
    }

    fn rules(text: &str) -> Vec<String> {
        parse_program_with(text, ParseOptions::unchecked())
            .unwrap()
            .program
            .rules
            .iter()
            .map(Rule::to_string)
            .collect()
    }

    #[test]
    fn seeds() {
        let (seed, ap) = build_query_seed(&atom("sc(c)"));
        assert_eq!(seed.to_string(), "magic__sc__b(c).");
        assert_eq!(ap.adornment.as_str(), "b");
        assert_eq!(build_query_seed(&atom("path(1,5)")).0.to_string(), "magic__path__bb(1,5).");
        assert_eq!(build_query_seed(&atom("g(X)")).0.to_string(), "magic__g__f.");
        assert_eq!(build_query_seed(&atom("g")).0.to_string(), "magic__g.");
    }

    #[test]
    fn adorned_rules_of_strategic_companies() {
        let p = parse_program(PSC).unwrap().program;
        let idb = BTreeSet::from([Symbol::new("sc")]);
        let ap = AdornedPredicate::new(Symbol::new("sc"), Adornment::parse("b").unwrap());
        let mut pending = VecDeque::new();
        let done = BTreeSet::from([ap.clone()]);
        let ra = adorn_rule(&p.rules[0], 0, &ap, &idb, &mut pending, &done);
        assert_eq!(ra.to_rule().to_string(), "sc__b(C1) v sc__b(C2) :- produced_by(P,C1,C2).");
        let ra2 = adorn_rule(&p.rules[0], 1, &ap, &idb, &mut pending, &done);
        assert_eq!(ra2.to_rule().to_string(), "sc__b(C2) v sc__b(C1) :- produced_by(P,C1,C2).");
        let ra4 = adorn_rule(&p.rules[1], 0, &ap, &idb, &mut pending, &done);
        assert_eq!(
            ra4.to_rule().to_string(),
            "sc__b(C) :- controlled_by(C,C1,C2,C3), sc__b(C1), sc__b(C2), sc__b(C3)."
        );
        assert!(pending.is_empty());
        assert_eq!(
            generate_magic_rules(&ra).iter().map(Rule::to_string).collect::<Vec<_>>(),
            ["magic__sc__b(C2) :- magic__sc__b(C1), produced_by(P,C1,C2)."]
        );
        assert_eq!(
            modify_rule(&ra).to_string(),
            "sc(C1) v sc(C2) :- magic__sc__b(C1), magic__sc__b(C2), produced_by(P,C1,C2)."
        );
        assert_eq!(
            modify_rule(&ra4).to_string(),
            "sc(C) :- magic__sc__b(C), controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3)."
        );
    }

    #[test]
    fn negated_atom_is_queued() {
        let p = parse_program("nsc(C) :- company(C), not sc(C).\nsc(C1) v sc(C2) :- produced_by(P,C1,C2).").unwrap().program;
        let idb = BTreeSet::from([Symbol::new("sc"), Symbol::new("nsc")]);
        let ap = AdornedPredicate::new(Symbol::new("nsc"), Adornment::parse("b").unwrap());
        let mut pending = VecDeque::new();
        let ra = adorn_rule(&p.rules[0], 0, &ap, &idb, &mut pending, &BTreeSet::from([ap.clone()]));
        assert_eq!(ra.to_rule().to_string(), "nsc__b(C) :- company(C), not sc__b(C).");
        assert_eq!(pending.len(), 1);
        assert_eq!(pending[0].to_string(), "sc^b");
        assert_eq!(
            generate_magic_rules(&ra).iter().map(Rule::to_string).collect::<Vec<_>>(),
            ["magic__sc__b(C) :- magic__nsc__b(C)."]
        );
    }

    #[test]
    fn strategic_companies_rewriting() {
        let p = parse_program(PSC).unwrap().program;
        let out = dms(&atom("sc(c)"), &p).unwrap();
        let expected = rules(
            "magic__sc__b(c).\n\
             magic__sc__b(C2) :- magic__sc__b(C1), produced_by(P,C1,C2).\n\
             magic__sc__b(C1) :- magic__sc__b(C2), produced_by(P,C1,C2).\n\
             magic__sc__b(C1) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).\n\
             magic__sc__b(C2) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).\n\
             magic__sc__b(C3) :- magic__sc__b(C), controlled_by(C,C1,C2,C3).\n\
             sc(C1) v sc(C2) :- magic__sc__b(C1), magic__sc__b(C2), produced_by(P,C1,C2).\n\
             sc(C2) v sc(C1) :- magic__sc__b(C2), magic__sc__b(C1), produced_by(P,C1,C2).\n\
             sc(C) :- magic__sc__b(C), controlled_by(C,C1,C2,C3), sc(C1), sc(C2), sc(C3).\n",
        );
        let got: Vec<String> = out.program().rules.iter().map(Rule::to_string).collect();
        assert_eq!(got, expected);
        let text = format_program(&out.program());
        let back = parse_program_with(&text, ParseOptions::rewritten()).unwrap().program;
        assert_eq!(back, out.program());
    }

    #[test]
    fn path_rewriting() {
        let p = parse_program("path(X,Y) :- edge(X,Y).\npath(X,Y) :- edge(X,Z), path(Z,Y).\nedge(1,3). edge(2,4). edge(3,5).")
            .unwrap()
            .program;
        let out = dms(&atom("path(1,5)"), &p).unwrap();
        let got: Vec<String> = out.program().rules.iter().map(Rule::to_string).collect();
        assert_eq!(
            got,
            [
                "magic__path__bb(1,5).",
                "magic__path__bb(Z,Y) :- magic__path__bb(X,Y), edge(X,Z).",
                "path(X,Y) :- magic__path__bb(X,Y), edge(X,Y).",
                "path(X,Y) :- magic__path__bb(X,Y), edge(X,Z), path(Z,Y).",
            ]
        );
        assert_eq!(out.program().facts.len(), 3);
    }

    #[test]
    fn bodiless_edb_rules_are_carried_over() {
        let rule = parse_program("q(X) :- e(X).").unwrap().program.rules.remove(0);
        let p = Program::new(vec![rule, Rule::fact(atom("e(a)"))], Vec::new());
        let out = dms(&atom("q(a)"), &p).unwrap();
        assert_eq!(out.edb, [atom("e(a)")]);
        let m = oracle::enumerate_stable_models(&out.program()).unwrap();
        assert!(m[0].contains(&atom("q(a)")));
    }

    #[test]
    fn magic_variant_stages_of_strategic_companies() {
        let p = parse_program(&format!("{PSC}produced_by(p,c,c1).")).unwrap().program;
        let m = parse_interpretation("produced_by(p,c,c1) sc(c)").unwrap();
        let stages = magic_variant_stages(&m, &atom("sc(c)"), &p).unwrap();
        let expected = [
            "produced_by(p,c,c1)",
            "produced_by(p,c,c1) magic__sc__b(c)",
            "produced_by(p,c,c1) magic__sc__b(c) sc(c) magic__sc__b(c1)",
        ];
        let expected: Vec<Interpretation> = expected.iter().map(|s| parse_interpretation(s).unwrap()).collect();
        assert_eq!(stages, expected);
    }

    #[test]
    fn killed_atoms_of_strategic_companies() {
        let p = parse_program(&format!("{PSC}produced_by(p,c,c1).")).unwrap().program;
        let m = parse_interpretation("produced_by(p,c,c1) sc(c) magic__sc__b(c) magic__sc__b(c1)").unwrap();
        let killed = killed_set(&m, &m, &atom("sc(c)"), &p).unwrap();
        assert!(killed.contains(&atom("sc(c1)")));
        assert!(killed.contains(&atom("produced_by(p,c1,c)")));
        assert!(killed.contains(&atom("controlled_by(c,c,c,c)")));
        assert!(!killed.contains(&atom("sc(p)")));
        assert!(killed.is_disjoint(&m));
        let not_model = parse_interpretation("produced_by(p,c,c1)").unwrap();
        assert!(matches!(killed_set(&not_model, &not_model, &atom("sc(c)"), &p), Err(Error::PreconditionFailed(_))));
    }
}
