//! Repair programs for consistent query answering over a global schema with key and
//! exclusion dependencies and GAV mappings.

use std::collections::BTreeMap;
use std::io::Read;

use crate::analysis::check_stratification;
use crate::error::{Error, Result};
use crate::syntax::{Atom, CmpOp, Comparison, Constant, Literal, Program, Query, Rule, Symbol, Term};

pub const RETRIEVED_SUFFIX: &str = "_D";
pub const OUT_SUFFIX: &str = "_out";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exclusion {
    pub r: Symbol,
    pub x: Vec<usize>,
    pub s: Symbol,
    pub w: Vec<usize>,
}

/// Relations with arities, keys and exclusions. Positions are 1-based.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalSchema {
    pub relations: BTreeMap<Symbol, usize>,
    pub keys: Vec<(Symbol, Vec<usize>)>,
    pub exclusions: Vec<Exclusion>,
}

/// GAV mapping rules from source predicates to `r_D` predicates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mapping {
    pub rules: Vec<Rule>,
}

fn retrieved(r: &str) -> String {
    format!("{r}{RETRIEVED_SUFFIX}")
}

fn out(r: &str) -> String {
    format!("{r}{OUT_SUFFIX}")
}

fn var(stem: char, pos: usize) -> Term {
    Term::var(&format!("{stem}{pos}"))
}

fn check_positions(rel: &str, positions: &[usize], arity: usize) -> Result<()> {
    if positions.is_empty() {
        return Err(Error::Schema(format!("empty position list for `{rel}`")));
    }
    if let Some(p) = positions.iter().find(|&&p| p == 0 || p > arity) {
        return Err(Error::Schema(format!("position {p} outside `{rel}/{arity}`")));
    }
    Ok(())
}

/// One rule per non-key position m:
/// `r_out(x̄,ȳ) v r_out(x̄,z̄) :- r_D(x̄,ȳ), r_D(x̄,z̄), Ym <> Zm.`
pub fn encode_key_dependency(rel: &str, key_positions: &[usize], arity: usize) -> Result<Vec<Rule>> {
    check_positions(rel, key_positions, arity)?;
    let args = |stem: char| -> Vec<Term> {
        (1..=arity).map(|p| if key_positions.contains(&p) { var('X', p) } else { var(stem, p) }).collect()
    };
    let (ys, zs) = (args('Y'), args('Z'));
    let rules = (1..=arity)
        .filter(|p| !key_positions.contains(p))
        .map(|m| {
            Rule::new(
                vec![Atom::new(&out(rel), ys.clone()), Atom::new(&out(rel), zs.clone())],
                vec![
                    Literal::Pos(Atom::new(&retrieved(rel), ys.clone())),
                    Literal::Pos(Atom::new(&retrieved(rel), zs.clone())),
                    Literal::Cmp(Comparison::new(CmpOp::Neq, var('Y', m), var('Z', m))),
                ],
            )
        })
        .collect();
    Ok(rules)
}

/// `r_out(x̄,ȳ) v s_out(x̄,z̄) :- r_D(x̄,ȳ), s_D(x̄,z̄).` with the projected positions shared.
pub fn encode_exclusion_dependency(
    r: &str,
    r_arity: usize,
    x: &[usize],
    s: &str,
    s_arity: usize,
    w: &[usize],
) -> Result<Rule> {
    check_positions(r, x, r_arity)?;
    check_positions(s, w, s_arity)?;
    if x.len() != w.len() {
        return Err(Error::Schema(format!("exclusion between `{r}` and `{s}` projects different widths")));
    }
    let side = |arity: usize, positions: &[usize], stem: char| -> Vec<Term> {
        (1..=arity)
            .map(|p| match positions.iter().position(|&q| q == p) {
                Some(k) => var('X', k + 1),
                None => var(stem, p),
            })
            .collect()
    };
    let (ra, sa) = (side(r_arity, x, 'Y'), side(s_arity, w, 'Z'));
    Ok(Rule::new(
        vec![Atom::new(&out(r), ra.clone()), Atom::new(&out(s), sa.clone())],
        vec![Literal::Pos(Atom::new(&retrieved(r), ra)), Literal::Pos(Atom::new(&retrieved(s), sa))],
    ))
}

/// `r(w̄) :- r_D(w̄), not r_out(w̄).`
pub fn encode_collection(rel: &str, arity: usize) -> Rule {
    let args: Vec<Term> = (1..=arity).map(|p| var('W', p)).collect();
    Rule::new(
        vec![Atom::new(rel, args.clone())],
        vec![Literal::Pos(Atom::new(&retrieved(rel), args.clone())), Literal::Neg(Atom::new(&out(rel), args))],
    )
}

impl GlobalSchema {
    fn arity(&self, r: &Symbol) -> Result<usize> {
        self.relations.get(r).copied().ok_or_else(|| Error::Schema(format!("unknown relation `{r}`")))
    }

    pub fn validate(&self) -> Result<()> {
        for (r, key) in &self.keys {
            check_positions(r.as_str(), key, self.arity(r)?)?;
        }
        for e in &self.exclusions {
            encode_exclusion_dependency(e.r.as_str(), self.arity(&e.r)?, &e.x, e.s.as_str(), self.arity(&e.s)?, &e.w)?;
        }
        Ok(())
    }

    /// Key rules, with several keys of one relation contributing their union.
    pub fn key_rules(&self) -> Result<Vec<Rule>> {
        let mut out = Vec::new();
        for (r, key) in &self.keys {
            out.extend(encode_key_dependency(r.as_str(), key, self.arity(r)?)?);
        }
        Ok(out)
    }

    pub fn exclusion_rules(&self) -> Result<Vec<Rule>> {
        self.exclusions
            .iter()
            .map(|e| encode_exclusion_dependency(e.r.as_str(), self.arity(&e.r)?, &e.x, e.s.as_str(), self.arity(&e.s)?, &e.w))
            .collect()
    }
}

impl Mapping {
    /// Checks that every rule is positive, single-headed and defines some `r_D`.
    pub fn validate(&self, g: &GlobalSchema) -> Result<()> {
        for rule in &self.rules {
            let bad = |why: &str| Err(Error::Schema(format!("mapping rule `{rule}` {why}")));
            if rule.head.len() != 1 {
                return bad("must have a single head atom");
            }
            if rule.body.iter().any(|l| matches!(l, Literal::Neg(_))) {
                return bad("must be positive");
            }
            let h = &rule.head[0];
            let Some(base) = h.predicate.as_str().strip_suffix(RETRIEVED_SUFFIX) else {
                return bad("must define a predicate ending in _D");
            };
            match g.relations.get(&Symbol::new(base)) {
                Some(&a) if a == h.arity() => {}
                Some(_) => return bad("has the wrong arity"),
                None => return bad("defines an undeclared relation"),
            }
        }
        Ok(())
    }
}

/// The repair program: key and exclusion rules, mapping rules, collection rules, and
/// the source facts.
pub fn build_repair_program(g: &GlobalSchema, m: &Mapping, sources: &[Atom], q: &Query) -> Result<Program> {
    g.validate()?;
    m.validate(g)?;
    for a in &q.atoms {
        match g.relations.get(&a.predicate) {
            Some(&n) if n == a.arity() => {}
            _ => return Err(Error::Schema(format!("query atom `{a}` is not over a global relation"))),
        }
    }
    let mut p = Program::default();
    for r in g.key_rules()?.into_iter().chain(g.exclusion_rules()?).chain(m.rules.iter().cloned()) {
        p.push_rule(r);
    }
    for (r, &arity) in &g.relations {
        p.push_rule(encode_collection(r.as_str(), arity));
    }
    for f in sources {
        p.push_fact(f.clone());
    }
    if let Some(cycle) = check_stratification(&p) {
        return Err(Error::Unstratified { cycle, span: None });
    }
    Ok(p)
}

/// The identity mapping `r_D(w̄) :- src(w̄).` for each relation, with `src` named by `source_of`.
pub fn identity_mapping(g: &GlobalSchema, source_of: impl Fn(&str) -> String) -> Mapping {
    let rules = g
        .relations
        .iter()
        .map(|(r, &arity)| {
            let args: Vec<Term> = (1..=arity).map(|p| var('W', p)).collect();
            Rule::new(
                vec![Atom::new(&retrieved(r.as_str()), args.clone())],
                vec![Literal::Pos(Atom::new(&source_of(r.as_str()), args))],
            )
        })
        .collect();
    Mapping { rules }
}

fn parse_positions(s: &str, line: usize) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Schema(format!("line {line}: bad position `{t}`"))))
        .collect()
}

/// `r[1,2]` into a relation name and positions.
fn parse_projection(s: &str, line: usize) -> Result<(Symbol, Vec<usize>)> {
    let (name, rest) = s
        .split_once('[')
        .ok_or_else(|| Error::Schema(format!("line {line}: expected `rel[positions]`, found `{s}`")))?;
    let inner = rest
        .strip_suffix(']')
        .ok_or_else(|| Error::Schema(format!("line {line}: missing `]` in `{s}`")))?;
    Ok((Symbol::new(name.trim()), parse_positions(inner, line)?))
}

/// Parses `relation r/3 key 1,2.` and `exclude r[1] s[1].` statements; `%` starts a comment.
pub fn parse_schema(text: &str) -> Result<GlobalSchema> {
    let mut g = GlobalSchema::default();
    let mut pending: Vec<(usize, Exclusion)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('%').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let stmt = content
            .strip_suffix('.')
            .ok_or_else(|| Error::Schema(format!("line {line}: statement must end with `.`")))?;
        let words: Vec<&str> = stmt.split_whitespace().collect();
        match words.as_slice() {
            ["relation", decl, rest @ ..] => {
                let (name, arity) = decl
                    .split_once('/')
                    .ok_or_else(|| Error::Schema(format!("line {line}: expected `name/arity`")))?;
                let arity: usize =
                    arity.parse().map_err(|_| Error::Schema(format!("line {line}: bad arity `{arity}`")))?;
                let name = Symbol::new(name);
                if g.relations.insert(name.clone(), arity).is_some() {
                    return Err(Error::Schema(format!("line {line}: relation `{name}` declared twice")));
                }
                let mut rest = rest;
                while let ["key", positions, tail @ ..] = rest {
                    let key = parse_positions(positions, line)?;
                    check_positions(name.as_str(), &key, arity)?;
                    g.keys.push((name.clone(), key));
                    rest = tail;
                }
                if !rest.is_empty() {
                    return Err(Error::Schema(format!("line {line}: unexpected `{}`", rest.join(" "))));
                }
            }
            ["exclude", a, b] => {
                let (r, x) = parse_projection(a, line)?;
                let (s, w) = parse_projection(b, line)?;
                pending.push((line, Exclusion { r, x, s, w }));
            }
            _ => return Err(Error::Schema(format!("line {line}: unrecognised statement `{content}`"))),
        }
    }
    for (line, e) in pending {
        for rel in [&e.r, &e.s] {
            if !g.relations.contains_key(rel) {
                return Err(Error::Schema(format!("line {line}: unknown relation `{rel}`")));
            }
        }
        g.exclusions.push(e);
    }
    g.validate()?;
    Ok(g)
}

fn csv_constant(field: &str) -> Constant {
    let f = field.trim();
    match f.parse::<u64>() {
        Ok(n) if !f.starts_with('+') => Constant::Int(n),
        _ => Constant::sym(f),
    }
}

/// Facts of `predicate` from headerless CSV, one positional column per argument.
pub fn read_csv_facts(predicate: &str, input: impl Read) -> Result<Vec<Atom>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        out.push(Atom::new(predicate, record.iter().map(|f| Term::Const(csv_constant(f))).collect()));
    }
    Ok(out)
}
