//! Text syntax for programs, queries and interpretations.
//!
//! ```text
//! sc(C1) v sc(C2) :- produced_by(P,C1,C2).
//! nsc(C) :- company(C), not sc(C).
//! produced_by(p,c,c1).
//! sc(c)?
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{check_safety, check_stratification, classify_predicates, idb_predicates};
use crate::error::{Error, Result, SourceSpan};
use crate::syntax::{
    Atom, CmpOp, Comparison, Constant, Interpretation, Literal, Program, Query, Rule, Symbol, Term,
};

/// A parsed file: the program and its optional query.
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub program: Program,
    pub query: Option<Query>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept predicate names containing `__` (adorned and magic predicates).
    pub allow_reserved: bool,
    pub check_safety: bool,
    pub check_stratification: bool,
    /// Reject predicates that have both facts and defining rules. When false, such
    /// facts are kept as bodiless rules in statement order.
    pub strict_classification: bool,
}

impl ParseOptions {
    pub fn strict() -> Self {
        ParseOptions {
            allow_reserved: false,
            check_safety: true,
            check_stratification: true,
            strict_classification: true,
        }
    }

    /// For rewritten programs, which may use reserved names and need not be stratified.
    pub fn rewritten() -> Self {
        ParseOptions {
            allow_reserved: true,
            check_safety: true,
            check_stratification: false,
            strict_classification: false,
        }
    }

    /// Syntax and arity checks only.
    pub fn unchecked() -> Self {
        ParseOptions {
            allow_reserved: true,
            check_safety: false,
            check_stratification: false,
            strict_classification: false,
        }
    }
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self::strict()
    }
}

pub fn parse_program(text: &str) -> Result<Source> {
    parse_program_with(text, ParseOptions::strict())
}

pub fn parse_program_with(text: &str, opts: ParseOptions) -> Result<Source> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, anon: 0 };
    let mut statements = Vec::new();
    let mut query: Option<(Query, Vec<SourceSpan>)> = None;
    while !parser.at_eof() {
        match parser.statement()? {
            Statement::Rule(r) => statements.push(r),
            Statement::Query(q, spans, span) => {
                if query.is_some() {
                    return Err(Error::Parse { span, message: "at most one query per file".into() });
                }
                query = Some((q, spans));
            }
        }
    }
    assemble(statements, query, opts)
}

/// Parses a standalone query such as `sp(a,b)?` (the trailing `?` is optional).
pub fn parse_query(text: &str) -> Result<Query> {
    let trimmed = text.trim();
    let with_mark = if trimmed.ends_with('?') { trimmed.to_string() } else { format!("{trimmed}?") };
    let source = parse_program_with(&with_mark, ParseOptions::unchecked())?;
    source.query.ok_or_else(|| Error::Parse {
        span: SourceSpan::new(1, 1, text.len()),
        message: "expected a query".into(),
    })
}

/// Parses a set of ground atoms, written as `{a, p(b)}` or as plain atoms separated by
/// commas, dots or whitespace.
pub fn parse_interpretation(text: &str) -> Result<Interpretation> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0, anon: 0 };
    let mut out = Interpretation::new();
    parser.eat(&Tok::LBrace);
    loop {
        match &parser.peek().tok {
            Tok::Eof => break,
            Tok::RBrace => {
                parser.bump();
            }
            Tok::Comma | Tok::Dot => {
                parser.bump();
            }
            _ => {
                let (atom, span) = parser.atom()?;
                if !atom.is_ground() {
                    return Err(Error::Parse { span, message: "interpretations contain ground atoms only".into() });
                }
                out.insert(atom);
            }
        }
    }
    Ok(out)
}

/// One statement per line: rules in stored order, then facts.
pub fn format_program(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.rules {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    for f in &p.facts {
        out.push_str(&f.to_string());
        out.push_str(".\n");
    }
    out
}

pub fn format_source(s: &Source) -> String {
    let mut out = format_program(&s.program);
    if let Some(q) = &s.query {
        out.push_str(&q.to_string());
        out.push('\n');
    }
    out
}

pub fn format_interpretation(i: &Interpretation) -> String {
    let atoms: Vec<String> = i.iter().map(Atom::to_string).collect();
    format!("{{{}}}", atoms.join(", "))
}

// ---------------------------------------------------------------------------
// Assembly and validation

struct ParsedRule {
    rule: Rule,
    span: SourceSpan,
    atom_spans: Vec<(Atom, SourceSpan)>,
    var_spans: Vec<(Symbol, SourceSpan)>,
    neg_spans: Vec<(Symbol, SourceSpan)>,
}

enum Statement {
    Rule(ParsedRule),
    Query(Query, Vec<SourceSpan>, SourceSpan),
}

fn assemble(statements: Vec<ParsedRule>, query: Option<(Query, Vec<SourceSpan>)>, opts: ParseOptions) -> Result<Source> {
    let mut arity: BTreeMap<Symbol, usize> = BTreeMap::new();
    let query_atoms = query
        .iter()
        .flat_map(|(q, spans)| q.atoms.iter().cloned().zip(spans.iter().copied()));
    let all_atoms = statements.iter().flat_map(|s| s.atom_spans.iter().cloned()).chain(query_atoms);
    for (atom, span) in all_atoms {
        if !opts.allow_reserved && atom.predicate.as_str().contains("__") {
            return Err(Error::ReservedPredicate { predicate: atom.predicate.clone(), span: Some(span) });
        }
        let expected = *arity.entry(atom.predicate.clone()).or_insert(atom.arity());
        if expected != atom.arity() {
            return Err(Error::ArityMismatch {
                predicate: atom.predicate.clone(),
                expected,
                found: atom.arity(),
                span: Some(span),
            });
        }
    }

    let rules_only = Program {
        rules: statements.iter().map(|s| s.rule.clone()).collect(),
        facts: Vec::new(),
    };
    let idb = idb_predicates(&rules_only);
    let mut program = Program::default();
    for s in &statements {
        let r = &s.rule;
        let is_fact = r.body.is_empty() && r.head.len() == 1 && r.head[0].is_ground();
        if is_fact && !idb.contains(&r.head[0].predicate) {
            program.push_fact(r.head[0].clone());
        } else {
            if is_fact && opts.strict_classification {
                return Err(Error::MixedClassification { predicate: r.head[0].predicate.clone() });
            }
            program.push_rule(r.clone());
        }
    }

    if opts.check_safety {
        for s in &statements {
            if let Some(v) = check_safety(&s.rule) {
                let span = s.var_spans.iter().find(|(name, _)| *name == v).map(|(_, sp)| *sp).unwrap_or(s.span);
                return Err(Error::UnsafeRule { rule: s.rule.to_string(), variable: v, span: Some(span) });
            }
        }
    }
    if opts.strict_classification {
        classify_predicates(&program)?;
    }
    if opts.check_stratification {
        if let Some(cycle) = check_stratification(&program) {
            let head = &cycle[0];
            let target = &cycle[1];
            let span = statements
                .iter()
                .filter(|s| s.rule.head.iter().any(|h| h.predicate == *head))
                .flat_map(|s| s.neg_spans.iter())
                .find(|(pred, _)| pred == target)
                .map(|(_, sp)| *sp);
            return Err(Error::Unstratified { cycle, span });
        }
    }
    Ok(Source { program, query: query.map(|(q, _)| q) })
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(u64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    If,
    Question,
    Bar,
    Neq,
    Lt,
    Eq,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let start_col = col;
        let simple = |t: Tok, len: usize| (t, len);
        let (tok, len) = match c {
            '(' => simple(Tok::LParen, 1),
            ')' => simple(Tok::RParen, 1),
            '{' => simple(Tok::LBrace, 1),
            '}' => simple(Tok::RBrace, 1),
            ',' => simple(Tok::Comma, 1),
            '.' => simple(Tok::Dot, 1),
            '?' => simple(Tok::Question, 1),
            '|' => simple(Tok::Bar, 1),
            '=' => simple(Tok::Eq, 1),
            ':' if chars.get(i + 1) == Some(&'-') => simple(Tok::If, 2),
            '<' if chars.get(i + 1) == Some(&'>') => simple(Tok::Neq, 2),
            '<' => simple(Tok::Lt, 1),
            '!' if chars.get(i + 1) == Some(&'=') => simple(Tok::Neq, 2),
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(Error::Parse {
                                span: SourceSpan::new(line, start_col, j - start),
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(j + 1) {
                                Some('n') => s.push('\n'),
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => {
                                    return Err(Error::Parse {
                                        span: SourceSpan::new(line, col + (j - start), 2),
                                        message: "invalid escape".into(),
                                    })
                                }
                            }
                            j += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                (Tok::Str(s), j + 1 - start)
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i..j].iter().collect();
                let n = digits.parse::<u64>().map_err(|_| Error::Parse {
                    span: SourceSpan::new(line, start_col, j - i),
                    message: "integer out of range".into(),
                })?;
                (Tok::Int(n), j - i)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = if c.is_ascii_lowercase() { Tok::Ident(word) } else { Tok::Var(word) };
                (tok, j - i)
            }
            _ => {
                return Err(Error::Parse {
                    span: SourceSpan::new(line, start_col, 1),
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        tokens.push(Token { tok, span: SourceSpan::new(line, start_col, len) });
        i = start + len;
        col += len;
    }
    tokens.push(Token { tok: Tok::Eof, span: SourceSpan::new(line, col, 0) });
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    anon: usize,
}

const ANON_PREFIX: &str = "_\u{0}";

#[derive(PartialEq)]
enum Sep {
    None,
    Or,
    And,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { span: self.peek().span, message: message.into() })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn statement(&mut self) -> Result<Statement> {
        let start = self.peek().span;
        if self.peek().tok == Tok::If {
            return self.error("rules without a head are not supported");
        }
        let mut atoms: Vec<(Atom, SourceSpan)> = vec![self.head_atom()?];
        let mut sep = Sep::None;
        loop {
            let this = match &self.peek().tok {
                Tok::Ident(w) if w == "v" => Sep::Or,
                Tok::Bar => Sep::Or,
                Tok::Comma => Sep::And,
                _ => break,
            };
            if sep != Sep::None && sep != this {
                return self.error("cannot mix disjunction and conjunction here");
            }
            sep = this;
            self.bump();
            atoms.push(self.head_atom()?);
        }
        let mut body_spans = Vec::new();
        let mut neg_spans = Vec::new();
        let body = match self.peek().tok {
            Tok::Question => {
                if sep == Sep::Or {
                    return self.error("queries are conjunctions of atoms");
                }
                self.bump();
                let spans = atoms.iter().map(|(_, s)| *s).collect();
                let query = Query::new(atoms.into_iter().map(|(a, _)| a).collect());
                let query = self.name_anonymous_query(query);
                return Ok(Statement::Query(query, spans, start));
            }
            _ if sep == Sep::And => return self.error("expected `?` after a conjunctive query"),
            Tok::Dot => {
                self.bump();
                Vec::new()
            }
            Tok::If => {
                self.bump();
                let mut body = Vec::new();
                loop {
                    let (lit, spans, neg) = self.literal()?;
                    body.push(lit);
                    body_spans.extend(spans);
                    if let Some(n) = neg {
                        neg_spans.push(n);
                    }
                    if self.eat(&Tok::Comma) {
                        continue;
                    }
                    self.expect(Tok::Dot, "`,` or `.`")?;
                    break;
                }
                body
            }
            _ => return self.error("expected `v`, `:-`, `.` or `?`"),
        };
        let mut atom_spans: Vec<(Atom, SourceSpan)> = atoms.clone();
        for (lit, s) in body.iter().zip(&body_spans) {
            if let Some(a) = lit.atom() {
                atom_spans.push((a.clone(), *s));
            }
        }
        let mut rule = Rule::new(atoms.into_iter().map(|(a, _)| a).collect(), body);
        let mut var_spans = Vec::new();
        for t in &self.tokens[..self.pos] {
            if t.span < start {
                continue;
            }
            if let Tok::Var(name) = &t.tok {
                var_spans.push((Symbol::new(name), t.span));
            }
        }
        let renamed = self.name_anonymous(&mut rule);
        for (old, new) in renamed {
            for (v, _) in var_spans.iter_mut() {
                if *v == old {
                    *v = new.clone();
                }
            }
        }
        Ok(Statement::Rule(ParsedRule { rule, span: start, atom_spans, var_spans, neg_spans }))
    }

    fn head_atom(&mut self) -> Result<(Atom, SourceSpan)> {
        match &self.peek().tok {
            Tok::Ident(_) => self.atom(),
            _ => self.error("expected an atom"),
        }
    }

    fn atom(&mut self) -> Result<(Atom, SourceSpan)> {
        let tok = self.bump();
        let Tok::Ident(name) = tok.tok else {
            return Err(Error::Parse { span: tok.span, message: "expected a predicate name".into() });
        };
        if name == "not" {
            return Err(Error::Parse { span: tok.span, message: "`not` is a keyword".into() });
        }
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(Tok::RParen, "`,` or `)`")?;
                break;
            }
        }
        Ok((Atom::new(&name, args), tok.span))
    }

    fn term(&mut self) -> Result<Term> {
        let tok = self.bump();
        Ok(match tok.tok {
            Tok::Var(name) if name == "_" => {
                self.anon += 1;
                Term::Var(Symbol::new(&format!("{ANON_PREFIX}{}", self.anon)))
            }
            Tok::Var(name) => Term::Var(Symbol::new(&name)),
            Tok::Ident(name) => Term::Const(Constant::sym(&name)),
            Tok::Int(n) => Term::Const(Constant::Int(n)),
            Tok::Str(s) => Term::Const(Constant::sym(&s)),
            _ => return Err(Error::Parse { span: tok.span, message: "expected a term".into() }),
        })
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek().tok {
            Tok::Neq => CmpOp::Neq,
            Tok::Lt => CmpOp::Lt,
            Tok::Eq => CmpOp::Eq,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    #[allow(clippy::type_complexity)]
    fn literal(&mut self) -> Result<(Literal, Option<SourceSpan>, Option<(Symbol, SourceSpan)>)> {
        let first = self.peek().clone();
        match &first.tok {
            Tok::Ident(w) if w == "not" && matches!(self.peek_at(1).tok, Tok::Ident(_)) => {
                self.bump();
                if matches!(&self.peek().tok, Tok::Ident(w) if w == "not") {
                    return self.error("nested negation is not supported");
                }
                let (atom, span) = self.atom()?;
                let pred = atom.predicate.clone();
                Ok((Literal::Neg(atom), Some(span), Some((pred, span))))
            }
            Tok::Ident(_) if !matches!(self.peek_at(1).tok, Tok::Neq | Tok::Lt | Tok::Eq) => {
                let (atom, span) = self.atom()?;
                Ok((Literal::Pos(atom), Some(span), None))
            }
            Tok::Ident(_) | Tok::Var(_) | Tok::Int(_) | Tok::Str(_) => {
                let left = self.term()?;
                let Some(op) = self.cmp_op() else {
                    return self.error("expected a comparison operator");
                };
                let right = self.term()?;
                Ok((Literal::Cmp(Comparison::new(op, left, right)), None, None))
            }
            _ => self.error("expected a literal"),
        }
    }

    /// Replaces placeholder names of `_` occurrences with fresh `_N` names not used in the rule.
    fn name_anonymous(&mut self, rule: &mut Rule) -> Vec<(Symbol, Symbol)> {
        let vars = rule.vars();
        let used: BTreeSet<&str> = vars.iter().map(Symbol::as_str).collect();
        let mut map = BTreeMap::new();
        let mut k = 0usize;
        for v in vars.iter().filter(|v| v.as_str().starts_with(ANON_PREFIX)) {
            loop {
                k += 1;
                let candidate = format!("_{k}");
                if !used.contains(candidate.as_str()) {
                    map.insert(v.clone(), Symbol::new(&candidate));
                    break;
                }
            }
        }
        if map.is_empty() {
            return Vec::new();
        }
        let f = |v: &Symbol| map.get(v).cloned().unwrap_or_else(|| v.clone());
        *rule = Rule::new(
            rule.head.iter().map(|a| rename_atom(a, &f)).collect(),
            rule.body
                .iter()
                .map(|l| match l {
                    Literal::Pos(a) => Literal::Pos(rename_atom(a, &f)),
                    Literal::Neg(a) => Literal::Neg(rename_atom(a, &f)),
                    Literal::Cmp(c) => Literal::Cmp(Comparison::new(c.op, rename_term(&c.left, &f), rename_term(&c.right, &f))),
                })
                .collect(),
        );
        map.into_iter().collect()
    }

    fn name_anonymous_query(&mut self, q: Query) -> Query {
        let mut rule = Rule { head: q.atoms, body: Vec::new() };
        self.name_anonymous(&mut rule);
        Query::new(rule.head)
    }
}

fn rename_term(t: &Term, f: &dyn Fn(&Symbol) -> Symbol) -> Term {
    match t {
        Term::Var(v) => Term::Var(f(v)),
        Term::Const(_) => t.clone(),
    }
}

fn rename_atom(a: &Atom, f: &dyn Fn(&Symbol) -> Symbol) -> Atom {
    Atom { predicate: a.predicate.clone(), args: a.args.iter().map(|t| rename_term(t, f)).collect() }
}
