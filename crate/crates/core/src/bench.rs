//! Benchmark families and a suite runner that compares magic-set configurations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::parser::parse_program;
use crate::query::{AnswerSet, Mode};
use crate::solver::{ground_query, solve_grounded, MagicMode, SearchStats, SolveOptions};
use crate::syntax::{Atom, Program, Query, Term};

pub const SIMPLE_PATH: &str = include_str!("../data/encodings/simple_path.dl");
pub const RELATED: &str = include_str!("../data/encodings/related.dl");
pub const STRATEGIC: &str = include_str!("../data/encodings/strategic.dl");
pub const CONFORMANT: &str = include_str!("../data/encodings/conformant.dl");

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Desk-scale sizes for each family.
pub fn default_sizes(f: Family) -> Vec<usize> {
    match f {
        Family::SimplePath | Family::Related => vec![4, 8, 16],
        Family::Strategic => vec![4, 8, 12, 16, 20],
        Family::Conformant => (4..=10).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    SimplePath,
    Related,
    Strategic,
    Conformant,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::SimplePath, Family::Related, Family::Strategic, Family::Conformant];

    pub fn name(self) -> &'static str {
        match self {
            Family::SimplePath => "simple_path",
            Family::Related => "related",
            Family::Strategic => "strategic",
            Family::Conformant => "conformant",
        }
    }

    pub fn encoding(self) -> &'static str {
        match self {
            Family::SimplePath => SIMPLE_PATH,
            Family::Related => RELATED,
            Family::Strategic => STRATEGIC,
            Family::Conformant => CONFORMANT,
        }
    }

    /// Instance for a size parameter: grid side, company count, or tree depth.
    pub fn generate(self, size: usize, seed: u64) -> BenchCase {
        match self {
            Family::SimplePath => gen_simple_path(size),
            Family::Related => gen_related(size),
            Family::Strategic => gen_strategic(size, size.div_ceil(2).max(1), seed),
            Family::Conformant => gen_conformant(size),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::PreconditionFailed(format!("unknown benchmark family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchCase {
    pub family: Family,
    pub size: usize,
    pub seed: u64,
    pub program: Program,
    pub query: Query,
    pub mode: Mode,
}

fn encoding(text: &str) -> Program {
    parse_program(text).expect("benchmark encodings parse").program
}

fn sym(s: &str) -> Term {
    Term::sym(s)
}

fn grid_node(r: usize, c: usize) -> String {
    format!("n{r}_{c}")
}

/// Arcs of an n×n grid to the right and downward neighbours.
pub fn grid_arcs(n: usize) -> Vec<(String, String)> {
    let mut arcs = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                arcs.push((grid_node(r, c), grid_node(r, c + 1)));
            }
            if r + 1 < n {
                arcs.push((grid_node(r, c), grid_node(r + 1, c)));
            }
        }
    }
    arcs
}

fn grid_case(family: Family, n: usize, edge: &str, goal: &str) -> BenchCase {
    assert!(n >= 2, "grid side must be at least 2");
    let mut program = encoding(family.encoding());
    for (a, b) in grid_arcs(n) {
        program.push_fact(Atom::new(edge, vec![sym(&a), sym(&b)]));
    }
    let query = Query::new(vec![Atom::new(goal, vec![sym(&grid_node(0, 0)), sym(&grid_node(n - 1, n - 1))])]);
    BenchCase { family, size: n, seed: 0, program, query, mode: Mode::Brave }
}

pub fn gen_simple_path(n_side: usize) -> BenchCase {
    grid_case(Family::SimplePath, n_side, "edge", "sp")
}

pub fn gen_related(n_side: usize) -> BenchCase {
    grid_case(Family::Related, n_side, "related", "ancestor")
}

fn company(i: usize) -> Term {
    sym(&format!("c{i}"))
}

/// Pads a list of one to four companies to four slots by repeating its members.
fn pad4(mut v: Vec<usize>) -> Vec<usize> {
    let k = v.len();
    for i in k..4 {
        v.push(v[i % k]);
    }
    v
}

pub fn gen_strategic(n_companies: usize, n_products: usize, seed: u64) -> BenchCase {
    assert!(n_companies >= 2, "at least two companies");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut program = encoding(STRATEGIC);
    let all: Vec<usize> = (1..=n_companies).collect();
    for p in 1..=n_products {
        let k = rng.gen_range(1..=4.min(n_companies));
        let producers = pad4(all.choose_multiple(&mut rng, k).copied().collect());
        let mut args = vec![sym(&format!("g{p}"))];
        args.extend(producers.into_iter().map(company));
        program.push_fact(Atom::new("produced_by", args));
    }
    for &c in &all {
        if rng.gen_bool(0.5) {
            continue;
        }
        let others: Vec<usize> = all.iter().copied().filter(|&o| o != c).collect();
        let k = rng.gen_range(1..=4.min(others.len()));
        let owners = pad4(others.choose_multiple(&mut rng, k).copied().collect());
        let mut args = vec![company(c)];
        args.extend(owners.into_iter().map(company));
        program.push_fact(Atom::new("controlled_by", args));
    }
    let query = Query::new(vec![Atom::new("st", vec![company(1)]), Atom::new("st", vec![company(2)])]);
    BenchCase { family: Family::Strategic, size: n_companies, seed, program, query, mode: Mode::Brave }
}

/// Tree state for breadth-first index `k`; state 1 is reserved for the goal.
fn state(k: usize) -> Term {
    Term::int(if k == 0 { 0 } else { k as u64 + 1 })
}

pub fn gen_conformant(depth: usize) -> BenchCase {
    assert!(depth >= 1, "depth must be at least 1");
    let mut program = encoding(CONFORMANT);
    let internal = (1usize << depth) - 1;
    let nodes = (1usize << (depth + 1)) - 1;
    for k in 0..nodes {
        let args = if k < internal {
            vec![state(k), state(2 * k + 1), state(2 * k + 2)]
        } else {
            vec![state(k), Term::int(1), Term::int(1)]
        };
        program.push_fact(Atom::new("ptrans", args));
    }
    let query = Query::new(vec![Atom::new("reach", vec![Term::int(0), Term::int(1)])]);
    BenchCase { family: Family::Conformant, size: depth, seed: 0, program, query, mode: Mode::Cautious }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub family: Family,
    pub size: usize,
    pub seed: u64,
    pub config: MagicMode,
    /// `None` when the run timed out or was skipped.
    pub answer: Option<String>,
    pub stats: SearchStats,
    /// Grounding finished, so `stats.ground_rules` and `stats.time_ground` are meaningful.
    pub grounded: bool,
    pub timeout: bool,
}

pub fn format_answer(a: &AnswerSet, q: &Query) -> String {
    if q.is_ground() {
        return a.is_true().to_string();
    }
    let parts: Vec<String> = a.substitutions.iter().map(|s| s.to_string()).collect();
    parts.join(" ")
}

/// Runs one case under one configuration. A search timeout keeps the grounding figures.
pub fn run_case(case: &BenchCase, config: MagicMode, timeout: Duration) -> Result<BenchRow> {
    run_case_with(case, config, timeout, true)
}

/// Grounds a case without searching; the row is reported as a timeout.
pub fn ground_case(case: &BenchCase, config: MagicMode, timeout: Duration) -> Result<BenchRow> {
    run_case_with(case, config, timeout, false)
}

fn run_case_with(case: &BenchCase, config: MagicMode, timeout: Duration, search: bool) -> Result<BenchRow> {
    let opts = SolveOptions { timeout: Some(timeout), ..SolveOptions::default() };
    let deadline = Some(Instant::now() + timeout);
    let row = |answer, stats, grounded, timeout| BenchRow {
        family: case.family,
        size: case.size,
        seed: case.seed,
        config,
        answer,
        stats,
        grounded,
        timeout,
    };
    let g = match ground_query(&case.query, &case.program, config, opts, deadline) {
        Ok(g) => g,
        Err(Error::Interrupted) => return Ok(row(None, SearchStats::default(), false, true)),
        Err(e) => return Err(e),
    };
    let partial = SearchStats { ground_rules: g.db.ground_rules(), time_ground: g.time_ground, ..SearchStats::default() };
    if !search {
        return Ok(row(None, partial, true, true));
    }
    match solve_grounded(&g, case.mode, opts, deadline) {
        Ok(s) => Ok(row(Some(format_answer(&s.answers, &case.query)), s.stats, true, false)),
        Err(Error::Interrupted) => Ok(row(None, partial, true, true)),
        Err(e) => Err(e),
    }
}

pub const CSV_HEADER: [&str; 10] =
    ["family", "size", "seed", "config", "answer", "choices", "ground_rules", "time_ground_ms", "time_search_ms", "timeout"];

/// Runs every family over its sizes (ascending) and every configuration, writing CSV rows
/// as they complete. After a timeout, larger sizes of that family are only grounded for
/// that configuration and recorded as timeouts.
pub fn run_suite(
    plan: &[(Family, Vec<usize>)],
    configs: &[MagicMode],
    seed: u64,
    timeout: Duration,
    out: impl Write,
) -> Result<Vec<BenchRow>> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let mut rows = Vec::new();
    for (family, sizes) in plan {
        let mut sizes = sizes.clone();
        sizes.sort_unstable();
        let mut timed_out: BTreeMap<MagicMode, bool> = BTreeMap::new();
        for size in sizes {
            let case = family.generate(size, seed);
            let mut answers: Vec<(MagicMode, String)> = Vec::new();
            for &config in configs {
                let row = if timed_out.get(&config).copied().unwrap_or(false) {
                    ground_case(&case, config, timeout)?
                } else {
                    run_case(&case, config, timeout)?
                };
                if row.timeout {
                    timed_out.insert(config, true);
                }
                if let Some(a) = &row.answer {
                    if let Some((other, b)) = answers.iter().find(|(_, b)| b != a) {
                        return Err(Error::PreconditionFailed(format!(
                            "{family} size {size}: {config} answered `{a}` but {other} answered `{b}`"
                        )));
                    }
                    answers.push((config, a.clone()));
                }
                w.write_record(csv_row(&row)).map_err(csv_err)?;
                w.flush()?;
                rows.push(row);
            }
        }
    }
    w.flush()?;
    Ok(rows)
}

fn csv_row(r: &BenchRow) -> Vec<String> {
    let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1000.0);
    let done = !r.timeout;
    let g = r.grounded;
    vec![
        r.family.to_string(),
        r.size.to_string(),
        r.seed.to_string(),
        r.config.to_string(),
        r.answer.clone().unwrap_or_default(),
        if done { r.stats.choices.to_string() } else { String::new() },
        if g { r.stats.ground_rules.to_string() } else { String::new() },
        if g { ms(r.stats.time_ground) } else { String::new() },
        if done { ms(r.stats.time_search) } else { String::new() },
        r.timeout.to_string(),
    ]
}
