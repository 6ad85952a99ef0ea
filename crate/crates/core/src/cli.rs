//! Command-line front end.
//!
//! ```text
//! magistral [query] [-FB|-FC] [-ODMS|-ODMS-|-ODMS+] [--print-model] FILE...
//! magistral rewrite-only [-ODMS+] FILE...
//! magistral repair --schema FILE [--source PRED=CSV]... [-FB|-FC] FILE...
//! magistral bench [--family NAME]... [--sizes 4,8] [--configs off,dms] [--out FILE]
//! ```
//!
//! Exit codes: 0 ran, 10 query true or nonempty, 20 query false or empty, 64 usage
//! error, 70 engine error.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::analysis::validate;
use crate::bench::{self, Family};
use crate::error::{Error, Result};
use crate::integration::{build_repair_program, identity_mapping, parse_schema, read_csv_facts, Mapping};
use crate::oracle::universe;
use crate::parser::{format_interpretation, format_program, parse_program_with, parse_query, ParseOptions, Source};
use crate::query::{AnswerSet, Mode, AUX_PREFIX};
use crate::optimizer::{prune_redundant, PruneMode};
use crate::rewriter::rewrite;
use crate::solver::{self, enumerate_models, intelligent_ground_with, GroundLimits, MagicMode, SolveOptions};
use crate::syntax::{Interpretation, Program, Query};

pub const EXIT_RAN: i32 = 0;
pub const EXIT_TRUE: i32 = 10;
pub const EXIT_FALSE: i32 = 20;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_ENGINE: i32 = 70;

pub const TIMEOUT_ENV: &str = "MAGISTRAL_TIMEOUT_SECS";

/// Source predicate name used by the default repair mapping `r_D(w̄) :- r_src(w̄).`
pub const DEFAULT_SOURCE_SUFFIX: &str = "_src";

pub const USAGE: &str = "\
usage: magistral [query] [OPTIONS] FILE...
       magistral rewrite-only [OPTIONS] FILE...
       magistral repair --schema FILE [--source PRED=CSV]... [OPTIONS] FILE...
       magistral bench [--family NAME]... [--sizes N,..] [--configs C,..] [--seed N] [--out FILE]

options:
  -FB, --brave          brave reasoning
  -FC, --cautious       cautious reasoning
  --models              print every stable model (the default without a query)
  -ODMS                 apply the magic-set rewriting
  -ODMS-                do not rewrite
  -ODMS+                rewrite, then drop subsumed rules
  --magic MODE          auto, on, off or on_subsume (auto rewrites iff the query has a constant)
  --query TEXT          query, overriding any query in the files
  --print-model         print a witness model for ground queries
  --rewritten           input is already rewritten; skip validation and rewriting
  --timeout SECS        time limit (default from MAGISTRAL_TIMEOUT_SECS, else none)
  --max-atoms N         grounding cap on atoms
  --max-rules N         grounding cap on rules
  --stats               print search statistics to standard error
  --emit                repair: print the repair program and stop
  -h, --help            this text
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Subcommand {
    #[default]
    Query,
    Bench,
    Repair,
    RewriteOnly,
}

impl FromStr for Subcommand {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "query" => Ok(Subcommand::Query),
            "bench" => Ok(Subcommand::Bench),
            "repair" => Ok(Subcommand::Repair),
            "rewrite-only" => Ok(Subcommand::RewriteOnly),
            _ => Err(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reasoning {
    Brave,
    Cautious,
    Enumerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MagicSetting {
    #[default]
    Auto,
    Fixed(MagicMode),
}

impl FromStr for MagicSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MagicSetting::Auto),
            other => other.parse().map(MagicSetting::Fixed),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliConfig {
    pub subcommand: Subcommand,
    pub files: Vec<PathBuf>,
    pub reasoning: Option<Reasoning>,
    pub magic: MagicSetting,
    pub query: Option<String>,
    pub print_model: bool,
    pub rewritten: bool,
    pub timeout: Option<Duration>,
    pub limits: GroundLimits,
    pub stats: bool,
    pub help: bool,
    pub schema: Option<PathBuf>,
    pub sources: Vec<(String, PathBuf)>,
    pub emit: bool,
    pub families: Vec<Family>,
    pub sizes: Option<Vec<usize>>,
    pub configs: Option<Vec<MagicMode>>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn parse_value<T: FromStr>(flag: &str, v: &str) -> std::result::Result<T, Failure> {
    v.parse().or_else(|_| usage(format!("invalid value `{v}` for {flag}")))
}

fn parse_list<T: FromStr>(flag: &str, v: &str) -> std::result::Result<Vec<T>, Failure> {
    v.split(',').map(|x| parse_value(flag, x.trim())).collect()
}

/// Parses argv (without the program name). `env_timeout` is the value of
/// `MAGISTRAL_TIMEOUT_SECS`, used when `--timeout` is absent.
pub fn parse_args(args: &[String], env_timeout: Option<&str>) -> std::result::Result<CliConfig, String> {
    parse_args_inner(args, env_timeout).map_err(|f| match f {
        Failure::Usage(m) => m,
        Failure::Engine(e) => e.to_string(),
    })
}

fn parse_args_inner(args: &[String], env_timeout: Option<&str>) -> std::result::Result<CliConfig, Failure> {
    let mut c = CliConfig::default();
    let mut subcommand_seen = false;
    let mut it = args.iter().peekable();
    let set_reasoning = |c: &mut CliConfig, r: Reasoning| {
        if c.reasoning.is_some_and(|old| old != r) {
            return usage("choose exactly one of -FB, -FC and --models");
        }
        c.reasoning = Some(r);
        Ok(())
    };
    while let Some(arg) = it.next() {
        let (flag, inline) = match arg.split_once('=') {
            Some((f, v)) if f.starts_with("--") => (f, Some(v.to_string())),
            _ => (arg.as_str(), None),
        };
        let mut value = |name: &str| -> std::result::Result<String, Failure> {
            match inline.clone().or_else(|| it.next().cloned()) {
                Some(v) => Ok(v),
                None => usage(format!("{name} needs a value")),
            }
        };
        match flag {
            "-FB" | "--brave" => set_reasoning(&mut c, Reasoning::Brave)?,
            "-FC" | "--cautious" => set_reasoning(&mut c, Reasoning::Cautious)?,
            "--models" => set_reasoning(&mut c, Reasoning::Enumerate)?,
            "-ODMS" => c.magic = MagicSetting::Fixed(MagicMode::On),
            "-ODMS-" => c.magic = MagicSetting::Fixed(MagicMode::Off),
            "-ODMS+" => c.magic = MagicSetting::Fixed(MagicMode::OnSubsume),
            "--magic" => c.magic = value(flag)?.parse().map_err(|_| Failure::Usage("--magic expects auto, on, off or on_subsume".into()))?,
            "--query" => c.query = Some(value(flag)?),
            "--print-model" => c.print_model = true,
            "--rewritten" => c.rewritten = true,
            "--timeout" => c.timeout = Some(Duration::from_secs_f64(parse_value(flag, &value(flag)?)?)),
            "--max-atoms" => c.limits.max_atoms = parse_value(flag, &value(flag)?)?,
            "--max-rules" => c.limits.max_rules = parse_value(flag, &value(flag)?)?,
            "--stats" => c.stats = true,
            "--emit" => c.emit = true,
            "--schema" => c.schema = Some(PathBuf::from(value(flag)?)),
            "--source" => {
                let v = value(flag)?;
                let Some((pred, path)) = v.split_once('=') else {
                    return usage("--source expects PRED=FILE");
                };
                c.sources.push((pred.to_string(), PathBuf::from(path)));
            }
            "--family" => c.families.push(parse_value(flag, &value(flag)?)?),
            "--sizes" => c.sizes = Some(parse_list(flag, &value(flag)?)?),
            "--configs" => c.configs = Some(parse_list(flag, &value(flag)?)?),
            "--seed" => c.seed = parse_value(flag, &value(flag)?)?,
            "--out" => c.out = Some(PathBuf::from(value(flag)?)),
            "-h" | "--help" => c.help = true,
            f if f.starts_with('-') && f != "-" => return usage(format!("unknown option `{f}`")),
            positional => match positional.parse::<Subcommand>() {
                Ok(s) if !subcommand_seen && c.files.is_empty() => {
                    c.subcommand = s;
                    subcommand_seen = true;
                }
                _ => c.files.push(PathBuf::from(positional)),
            },
        }
    }
    if c.timeout.is_none() {
        if let Some(v) = env_timeout {
            c.timeout = Some(Duration::from_secs_f64(parse_value(TIMEOUT_ENV, v)?));
        }
    }
    if c.help {
        return Ok(c);
    }
    match c.subcommand {
        Subcommand::Bench => {
            if !c.files.is_empty() {
                return usage("bench takes no input files");
            }
        }
        Subcommand::Repair => {
            if c.schema.is_none() {
                return usage("repair needs --schema");
            }
        }
        Subcommand::Query | Subcommand::RewriteOnly => {
            if c.files.is_empty() {
                return usage("no input files");
            }
        }
    }
    Ok(c)
}

/// Runs the command line and returns the exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let env = std::env::var(TIMEOUT_ENV).ok();
    let config = match parse_args_inner(args, env.as_deref()) {
        Ok(c) => c,
        Err(f) => return report(f, err),
    };
    if config.help {
        let _ = out.write_all(USAGE.as_bytes());
        return EXIT_RAN;
    }
    match execute(&config, out, err) {
        Ok(code) => code,
        Err(f) => report(f, err),
    }
}

fn report(f: Failure, err: &mut dyn Write) -> i32 {
    match f {
        Failure::Usage(m) => {
            let _ = writeln!(err, "magistral: {m}\n\n{USAGE}");
            EXIT_USAGE
        }
        Failure::Engine(e) => {
            let _ = match e.span() {
                Some(span) if !matches!(e, Error::Parse { .. }) => writeln!(err, "magistral: {span}: {e}"),
                _ => writeln!(err, "magistral: {e}"),
            };
            EXIT_ENGINE
        }
    }
}

fn read_inputs(files: &[PathBuf]) -> Result<String> {
    let mut text = String::new();
    for f in files {
        if f.as_os_str() == "-" {
            io::stdin().read_to_string(&mut text)?;
        } else {
            text.push_str(&std::fs::read_to_string(f).map_err(|e| Error::Io(format!("{}: {e}", f.display())))?);
        }
        text.push('\n');
    }
    Ok(text)
}

fn load(c: &CliConfig, opts: ParseOptions) -> std::result::Result<Source, Failure> {
    let mut source = parse_program_with(&read_inputs(&c.files)?, opts)?;
    if let Some(q) = &c.query {
        source.query = Some(parse_query(q)?);
    }
    Ok(source)
}

fn magic_for(c: &CliConfig, q: &Query) -> MagicMode {
    match c.magic {
        MagicSetting::Fixed(m) => m,
        MagicSetting::Auto if q.constants().is_empty() => MagicMode::Off,
        MagicSetting::Auto => MagicMode::On,
    }
}

fn solve_options(c: &CliConfig) -> SolveOptions {
    SolveOptions { timeout: c.timeout, limits: c.limits, witness: c.print_model, unique_model: false }
}

fn execute(c: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<i32, Failure> {
    match c.subcommand {
        Subcommand::Query => {
            let opts = if c.rewritten { ParseOptions::rewritten() } else { ParseOptions::strict() };
            let source = load(c, opts)?;
            run_query(c, &source.program, source.query.as_ref(), c.reasoning, out, err)
        }
        Subcommand::RewriteOnly => rewrite_only(c, out),
        Subcommand::Repair => repair(c, out, err),
        Subcommand::Bench => run_bench(c, out),
    }
}

fn run_query(
    c: &CliConfig,
    program: &Program,
    query: Option<&Query>,
    default: Option<Reasoning>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    let reasoning = match (query, c.reasoning.or(default)) {
        (None, None | Some(Reasoning::Enumerate)) | (Some(_), Some(Reasoning::Enumerate)) => Reasoning::Enumerate,
        (None, Some(_)) => return usage("-FB and -FC need a query"),
        (Some(_), None) => return usage("a query needs -FB or -FC"),
        (Some(_), Some(r)) => r,
    };
    if reasoning == Reasoning::Enumerate {
        return enumerate(c, program, out, err);
    }
    let q = query.expect("query present");
    let mode = if reasoning == Reasoning::Brave { Mode::Brave } else { Mode::Cautious };
    let opts = solve_options(c);
    let solution = if c.rewritten {
        let (goal, vars) = match q.atoms.as_slice() {
            [a] => (a.clone(), q.vars()),
            _ => return usage("--rewritten needs a single-atom query"),
        };
        solver::answer_program(&goal, &vars, program, &universe(program), mode, opts)?
    } else {
        solver::answer_with(q, program, mode, magic_for(c, q), opts)?
    };
    if c.stats {
        write_stats(err, &solution.stats)?;
    }
    print_answers(out, q, &solution.answers)?;
    if c.print_model {
        if let Some(w) = &solution.witness {
            writeln!(out, "{}", format_interpretation(&strip_aux(w))).map_err(Error::from)?;
        }
    }
    Ok(exit_code(&solution.answers))
}

fn strip_aux(m: &Interpretation) -> Interpretation {
    m.iter().filter(|a| !a.predicate.as_str().starts_with(AUX_PREFIX)).cloned().collect()
}

fn print_answers(out: &mut dyn Write, q: &Query, a: &AnswerSet) -> Result<()> {
    if q.is_ground() {
        writeln!(out, "{}", a.is_true())?;
        return Ok(());
    }
    for s in &a.substitutions {
        let atoms: Vec<String> = q.atoms.iter().map(|g| g.apply(s).to_string()).collect();
        writeln!(out, "{}", atoms.join(", "))?;
    }
    Ok(())
}

fn write_stats(err: &mut dyn Write, s: &solver::SearchStats) -> Result<()> {
    writeln!(
        err,
        "ground_rules={} choices={} models={} stability_checks={} time_ground_ms={:.3} time_search_ms={:.3}",
        s.ground_rules,
        s.choices,
        s.models,
        s.stability_checks,
        s.time_ground.as_secs_f64() * 1000.0,
        s.time_search.as_secs_f64() * 1000.0,
    )?;
    Ok(())
}

fn enumerate(c: &CliConfig, program: &Program, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<i32, Failure> {
    if !c.rewritten {
        validate(program)?;
    }
    let deadline = c.timeout.map(|t| Instant::now() + t);
    let t0 = Instant::now();
    let db = intelligent_ground_with(program, c.limits, deadline)?;
    let time_ground = t0.elapsed();
    let (models, mut stats) = enumerate_models(&db, deadline)?;
    stats.time_ground = time_ground;
    if c.stats {
        write_stats(err, &stats)?;
    }
    for m in &models {
        writeln!(out, "{}", format_interpretation(m)).map_err(Error::from)?;
    }
    Ok(EXIT_RAN)
}

fn rewrite_only(c: &CliConfig, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let source = load(c, ParseOptions::strict())?;
    let Some(q) = source.query else {
        return usage("rewrite-only needs a query");
    };
    validate(&source.program)?;
    let (prep, rewritten) = rewrite(&q, &source.program)?;
    let program = match c.magic {
        MagicSetting::Fixed(MagicMode::OnSubsume) => prune_redundant(&rewritten.program(), PruneMode::Greedy)?,
        _ => rewritten.program(),
    };
    let goal = Query::atom(prep.goal.clone());
    write!(out, "{}{goal}\n", format_program(&program)).map_err(Error::from)?;
    Ok(EXIT_RAN)
}

fn repair(c: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let schema_path = c.schema.as_ref().expect("checked by parse_args");
    let schema_text =
        std::fs::read_to_string(schema_path).map_err(|e| Error::Io(format!("{}: {e}", schema_path.display())))?;
    let schema = parse_schema(&schema_text)?;
    let source = load(c, ParseOptions::unchecked())?;
    let mapping = if source.program.rules.is_empty() {
        identity_mapping(&schema, |r| format!("{r}{DEFAULT_SOURCE_SUFFIX}"))
    } else {
        Mapping { rules: source.program.rules.clone() }
    };
    let mut facts = source.program.facts.clone();
    for (pred, path) in &c.sources {
        let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        facts.extend(read_csv_facts(pred, file)?);
    }
    let Some(q) = source.query else {
        return usage("repair needs a query");
    };
    let program = build_repair_program(&schema, &mapping, &facts, &q)?;
    if c.emit {
        write!(out, "{}{q}\n", format_program(&program)).map_err(Error::from)?;
        return Ok(EXIT_RAN);
    }
    run_query(c, &program, Some(&q), Some(Reasoning::Cautious), out, err)
}

fn run_bench(c: &CliConfig, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let families = if c.families.is_empty() { Family::ALL.to_vec() } else { c.families.clone() };
    let plan: Vec<(Family, Vec<usize>)> = families
        .into_iter()
        .map(|f| (f, c.sizes.clone().unwrap_or_else(|| bench::default_sizes(f))))
        .collect();
    let configs = c.configs.clone().unwrap_or_else(|| vec![MagicMode::Off, MagicMode::On, MagicMode::OnSubsume]);
    let timeout = c.timeout.unwrap_or(bench::DEFAULT_TIMEOUT);
    match &c.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            bench::run_suite(&plan, &configs, c.seed, timeout, file)?;
        }
        None => {
            bench::run_suite(&plan, &configs, c.seed, timeout, out)?;
        }
    }
    Ok(EXIT_RAN)
}

pub fn exit_code(answers: &AnswerSet) -> i32 {
    if answers.is_true() {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}
