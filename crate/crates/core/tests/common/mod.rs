//! Random safe stratified programs for property and acceptance tests.
#![allow(dead_code)]

use magistral::analysis::validate;
use magistral::{Atom, CmpOp, Comparison, Literal, Program, Query, Rule, Term};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CONSTANTS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_idb: usize,
    pub max_rules: usize,
    pub max_head: usize,
    pub max_arity: usize,
    pub negation: bool,
    /// Upper bound on the sum over IDB predicates of |constants|^arity.
    pub max_idb_atoms: usize,
}

impl GenConfig {
    pub fn disjunctive() -> Self {
        GenConfig { max_idb: 4, max_rules: 7, max_head: 2, max_arity: 2, negation: true, max_idb_atoms: 18 }
    }

    pub fn normal() -> Self {
        GenConfig { max_head: 1, ..Self::disjunctive() }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub program: Program,
    pub query: Query,
}

struct Pred {
    name: String,
    arity: usize,
}

fn term(rng: &mut ChaCha8Rng, vars: &[&str], consts: &[&str], p_const: f64) -> Term {
    if vars.is_empty() || rng.gen_bool(p_const) {
        Term::sym(consts.choose(rng).unwrap())
    } else {
        Term::var(vars.choose(rng).unwrap())
    }
}

fn atom(rng: &mut ChaCha8Rng, p: &Pred, vars: &[&str], consts: &[&str], p_const: f64) -> Atom {
    Atom::new(&p.name, (0..p.arity).map(|_| term(rng, vars, consts, p_const)).collect())
}

fn try_generate(rng: &mut ChaCha8Rng, cfg: GenConfig) -> Option<Generated> {
    let n_consts = rng.gen_range(1..=CONSTANTS.len());
    let consts = &CONSTANTS[..n_consts];
    let edb = [Pred { name: "e".into(), arity: 1 }, Pred { name: "f".into(), arity: 2 }];
    let n_idb = rng.gen_range(1..=cfg.max_idb);
    let idb: Vec<Pred> = (0..n_idb).map(|i| Pred { name: format!("p{i}"), arity: rng.gen_range(0..=cfg.max_arity) }).collect();
    let atoms: usize = idb.iter().map(|p| n_consts.pow(p.arity as u32)).sum();
    if atoms > cfg.max_idb_atoms {
        return None;
    }

    let mut facts = Vec::new();
    for p in &edb {
        for _ in 0..rng.gen_range(0..=4) {
            facts.push(atom(rng, p, &[], consts, 1.0));
        }
    }

    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=cfg.max_rules) {
        let head_len = rng.gen_range(1..=cfg.max_head);
        let head_preds: Vec<usize> = (0..head_len).map(|_| rng.gen_range(0..n_idb)).collect();
        let lowest = *head_preds.iter().min().unwrap();
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            let p = if rng.gen_bool(0.5) { edb.choose(rng).unwrap() } else { &idb[rng.gen_range(0..n_idb)] };
            let a = atom(rng, p, &VARS, consts, 0.2);
            for v in a.vars() {
                let v = VARS.iter().find(|x| **x == v.as_str()).unwrap();
                if !bound.contains(v) {
                    bound.push(v);
                }
            }
            body.push(Literal::Pos(a));
        }
        if cfg.negation && rng.gen_bool(0.4) {
            // Negated predicates sit strictly below every head predicate.
            let p = if lowest == 0 || rng.gen_bool(0.4) { edb.choose(rng).unwrap() } else { &idb[rng.gen_range(0..lowest)] };
            body.push(Literal::Neg(atom(rng, p, &bound, consts, 0.3)));
        }
        if bound.len() >= 2 && rng.gen_bool(0.2) {
            let op = if rng.gen_bool(0.5) { CmpOp::Neq } else { CmpOp::Eq };
            body.push(Literal::Cmp(Comparison::new(op, Term::var(bound[0]), Term::var(bound[1]))));
        }
        let head: Vec<Atom> = head_preds.iter().map(|&i| atom(rng, &idb[i], &bound, consts, 0.3)).collect();
        let rule = Rule::new(head, body);
        if rule.body.is_empty() && !rule.is_disjunctive() {
            continue;
        }
        rules.push(rule);
    }
    if rules.is_empty() {
        return None;
    }
    let program = Program::new(rules, facts);
    validate(&program).ok()?;

    let heads: Vec<&Atom> = program.rules.iter().flat_map(|r| r.head.iter()).collect();
    let target = heads.choose(rng).unwrap();
    let arity = target.arity();
    let qvars = ["V", "W"];
    let args = (0..arity)
        .map(|k| if rng.gen_bool(0.5) { Term::sym(consts.choose(rng).unwrap()) } else { Term::var(qvars[k]) })
        .collect();
    let query = Query::atom(Atom::new(target.predicate.as_str(), args));
    Some(Generated { program, query })
}

/// A valid program and a single-atom query over one of its IDB predicates.
pub fn generate(seed: u64, cfg: GenConfig) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(g) = try_generate(&mut rng, cfg) {
            return g;
        }
    }
}

/// Substitution sets of brave and cautious oracle answers, for comparison.
pub fn shown(a: &magistral::query::AnswerSet) -> Vec<String> {
    a.substitutions.iter().map(ToString::to_string).collect()
}

pub enum Outcome {
    Pass,
    /// The oracle hit its capacity limits.
    Skip,
    Fail(String),
}

macro_rules! oracle_try {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(magistral::Error::CapacityExceeded { .. }) => return Outcome::Skip,
            Err(e) => return Outcome::Fail(format!("{}: {e}", stringify!($e))),
        }
    };
}

fn describe(g: &Generated) -> String {
    format!("{}{}", magistral::parser::format_program(&g.program), g.query)
}

/// Oracle answers on P and on DMS(Q,P), and solver answers in every magic mode, coincide.
pub fn check_query_equivalence(g: &Generated) -> Outcome {
    use magistral::oracle::answer_query;
    use magistral::query::Mode;
    use magistral::rewriter::rewrite;
    use magistral::solver::{answer, MagicMode};

    let (prep, out) = oracle_try!(rewrite(&g.query, &g.program));
    let rewritten = out.program();
    let goal_query = Query::atom(prep.goal.clone());
    for mode in [Mode::Brave, Mode::Cautious] {
        let expected = oracle_try!(answer_query(&g.query, &g.program, mode)).substitutions;
        let on_dms = oracle_try!(answer_query(&goal_query, &rewritten, mode)).substitutions;
        if on_dms != expected {
            return Outcome::Fail(format!("{mode}: oracle on DMS differs\n{}", describe(g)));
        }
        for magic in [MagicMode::Off, MagicMode::On, MagicMode::OnSubsume] {
            let got = oracle_try!(answer(&g.query, &g.program, mode, magic)).answers.substitutions;
            if got != expected {
                return Outcome::Fail(format!("{mode} {magic}: solver {got:?} vs oracle {expected:?}\n{}", describe(g)));
            }
        }
    }
    Outcome::Pass
}

/// A disjunction-free program rewrites to a program with exactly one stable model.
pub fn check_unique_model(g: &Generated) -> Outcome {
    use magistral::oracle::enumerate_stable_models;
    use magistral::rewriter::rewrite;

    let (_, out) = oracle_try!(rewrite(&g.query, &g.program));
    let models = oracle_try!(enumerate_stable_models(&out.program()));
    if models.len() == 1 {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("{} stable models\n{}", models.len(), describe(g)))
    }
}

/// The magic variant of every stable model of P is a stable model of DMS(Q,P) with the
/// same query answers.
pub fn check_magic_variant(g: &Generated) -> Outcome {
    use magistral::oracle::{enumerate_stable_models, full_ground, is_stable_model, OracleLimits};
    use magistral::query::matches_in;
    use magistral::rewriter::{magic_variant, rewrite};

    let (prep, out) = oracle_try!(rewrite(&g.query, &g.program));
    let dms_ground = oracle_try!(full_ground(&out.program()));
    for m in oracle_try!(enumerate_stable_models(&prep.program)) {
        let v = oracle_try!(magic_variant(&m, &prep.goal, &prep.program));
        if !oracle_try!(is_stable_model(&v, &dms_ground, OracleLimits::default())) {
            return Outcome::Fail(format!("variant {v:?} is not stable\n{}", describe(g)));
        }
        if matches_in(&prep.goal, &prep.vars, &m) != matches_in(&prep.goal, &prep.vars, &v) {
            return Outcome::Fail(format!("variant disagrees on the query\n{}", describe(g)));
        }
    }
    Outcome::Pass
}

/// Killed atoms of each stable model of DMS(Q,P) form an unfounded set for P.
pub fn check_killed_unfounded(g: &Generated) -> Outcome {
    use magistral::oracle::{enumerate_stable_models, herbrand_base, is_unfounded_set, OracleLimits, PartialInterpretation};
    use magistral::rewriter::{is_magic_predicate, killed_set, rewrite};

    let (prep, out) = oracle_try!(rewrite(&g.query, &g.program));
    let base = oracle_try!(herbrand_base(&prep.program, OracleLimits::default()));
    for m in oracle_try!(enumerate_stable_models(&out.program())) {
        let killed = oracle_try!(killed_set(&m, &m, &prep.goal, &prep.program));
        let t = m.iter().filter(|a| !is_magic_predicate(&a.predicate)).cloned().collect();
        let pi = PartialInterpretation::new(t, base.clone()).unwrap();
        if !oracle_try!(is_unfounded_set(&killed, &pi, &prep.program)) {
            return Outcome::Fail(format!("killed set {killed:?} is not unfounded\n{}", describe(g)));
        }
    }
    Outcome::Pass
}

/// Dropping magic atoms from ground modified rules gives exactly the ground instances of
/// the processed rules of P.
pub fn check_modified_shape(g: &Generated) -> Outcome {
    use std::collections::BTreeSet;

    use magistral::oracle::{instantiate, universe, GroundRule, OracleLimits};
    use magistral::rewriter::{is_magic_predicate, rewrite};

    let (prep, out) = oracle_try!(rewrite(&g.query, &g.program));
    let rewritten = out.program();
    let magic = |a: &Atom| is_magic_predicate(&a.predicate);
    let modified: Vec<Rule> = rewritten.rules.iter().filter(|r| !r.head.iter().any(magic)).cloned().collect();
    for r in rewritten.rules.iter().filter(|r| r.head.iter().any(magic)) {
        if r.negative_atoms().next().is_some() {
            return Outcome::Fail(format!("magic rule with negation: {r}"));
        }
    }
    let strip = |r: &Rule| Rule::new(r.head.clone(), r.body.iter().filter(|l| !l.atom().is_some_and(magic)).cloned().collect());
    let key = |r: &Rule| {
        let h: BTreeSet<String> = r.head.iter().map(ToString::to_string).collect();
        let b: BTreeSet<String> = r.body.iter().map(ToString::to_string).collect();
        (h, b)
    };
    let stripped: Vec<Rule> = modified.iter().map(strip).collect();
    let processed: Vec<Rule> =
        prep.program.rules.iter().filter(|r| stripped.iter().any(|s| key(s) == key(r))).cloned().collect();
    if stripped.iter().any(|s| !processed.iter().any(|r| key(r) == key(s))) {
        return Outcome::Fail(format!("modified rule without an original\n{}", describe(g)));
    }
    let u = universe(&rewritten);
    let limits = OracleLimits::default();
    let from_modified: BTreeSet<GroundRule> = oracle_try!(instantiate(&modified, &u, limits))
        .into_iter()
        .map(|r| GroundRule::new(r.head, r.pos.into_iter().filter(|a| !magic(a)).collect(), r.neg))
        .collect();
    let original: BTreeSet<GroundRule> = oracle_try!(instantiate(&processed, &u, limits)).into_iter().collect();
    if from_modified != original {
        return Outcome::Fail(format!("ground instances differ\n{}", describe(g)));
    }
    Outcome::Pass
}

/// A random pair (r′, r). About half the time r is an instance of r′ with extra literals.
pub fn random_rule_pair(seed: u64) -> (Rule, Rule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let preds = [Pred { name: "p".into(), arity: 1 }, Pred { name: "q".into(), arity: 2 }, Pred { name: "s".into(), arity: 2 }];
    let vars = ["X", "Y", "Z", "W"];
    let consts = ["a", "b"];
    let literal = |rng: &mut ChaCha8Rng, vars: &[&str]| -> Literal {
        match rng.gen_range(0..10) {
            0 => {
                let op = if rng.gen_bool(0.5) { CmpOp::Neq } else { CmpOp::Eq };
                Literal::Cmp(Comparison::new(op, term(rng, vars, &consts, 0.2), term(rng, vars, &consts, 0.2)))
            }
            1..=2 => Literal::Neg(any_atom(rng, &preds, vars, &consts, 0.2)),
            _ => Literal::Pos(any_atom(rng, &preds, vars, &consts, 0.2)),
        }
    };
    let head: Vec<Atom> = (0..rng.gen_range(1..=2)).map(|_| any_atom(&mut rng, &preds, &vars, &consts, 0.2)).collect();
    let body: Vec<Literal> = (0..rng.gen_range(1..=3)).map(|_| literal(&mut rng, &vars)).collect();
    let r_prime = Rule::new(head, body);
    let r = if rng.gen_bool(0.5) {
        let targets = ["A", "B", "C"];
        let mut mapped = r_prime.clone();
        for v in r_prime.vars() {
            let t = term(&mut rng, &targets, &consts, 0.25);
            mapped = rename(&mapped, v.as_str(), &t);
        }
        let mut body = mapped.body.clone();
        for _ in 0..rng.gen_range(0..=2) {
            body.push(literal(&mut rng, &targets));
        }
        body.shuffle(&mut rng);
        let mut head = mapped.head.clone();
        if rng.gen_bool(0.3) {
            head.push(any_atom(&mut rng, &preds, &targets, &consts, 0.2));
        }
        Rule::new(head, body)
    } else {
        let head = (0..rng.gen_range(1..=3)).map(|_| any_atom(&mut rng, &preds, &vars, &consts, 0.2)).collect();
        let body = (0..rng.gen_range(1..=4)).map(|_| literal(&mut rng, &vars)).collect();
        Rule::new(head, body)
    };
    (r_prime, r)
}

fn any_atom(rng: &mut ChaCha8Rng, preds: &[Pred], vars: &[&str], consts: &[&str], p_const: f64) -> Atom {
    let i = rng.gen_range(0..preds.len());
    atom(rng, &preds[i], vars, consts, p_const)
}

/// Replaces variable `v` by `t` throughout `r`.
fn rename(r: &Rule, v: &str, t: &Term) -> Rule {
    let sub = |x: &Term| if x.as_var().is_some_and(|s| s.as_str() == v) { t.clone() } else { x.clone() };
    let atom = |a: &Atom| Atom::new(a.predicate.as_str(), a.args.iter().map(sub).collect());
    let head = r.head.iter().map(atom).collect();
    let body = r
        .body
        .iter()
        .map(|l| match l {
            Literal::Pos(a) => Literal::Pos(atom(a)),
            Literal::Neg(a) => Literal::Neg(atom(a)),
            Literal::Cmp(c) => Literal::Cmp(Comparison::new(c.op, sub(&c.left), sub(&c.right))),
        })
        .collect();
    Rule::new(head, body)
}
