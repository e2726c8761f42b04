//! Batch runs: a problem text in, a line-oriented report and exit code out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::engine::{Config, Mode, Outcome, Witness, DEFAULT_STEP_LIMIT};
use crate::kb::{parse_problem, validate};
use crate::oracle::Interpretation;
use crate::query::{decide_query, emit_reduction, logic_of, Emit, OracleNote, QueryConfig, QueryResult};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_UNSAT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub mode: Mode,
    pub step_limit: u64,
    pub oracle: Option<usize>,
    pub emit: Option<Emit>,
    pub stats: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Trace,
            step_limit: DEFAULT_STEP_LIMIT,
            oracle: None,
            emit: None,
            stats: false,
            out: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit: i32,
    /// Text of the requested `--emit` artifact.
    pub artifact: Option<String>,
}

fn input_error(msg: String) -> RunOutput {
    RunOutput {
        stderr: msg,
        exit: EXIT_INPUT,
        ..Default::default()
    }
}

/// The report text of a query result.
pub fn format_report(r: &QueryResult, stats: bool, logic: &str) -> String {
    let mut out = String::new();
    match &r.verdict.outcome {
        Outcome::Sat(_) => out.push_str("SAT\n"),
        Outcome::Unsat => out.push_str("UNSAT\n"),
        Outcome::Unknown(why) => writeln!(out, "UNKNOWN {why}").unwrap(),
    }
    if let Some(a) = r.answer {
        writeln!(out, "answer={a}").unwrap();
    }
    if let Some(cl) = &r.classes {
        for class in &cl.equivalent {
            writeln!(out, "{}", class.join(" == ")).unwrap();
        }
        for (a, b) in &cl.edges {
            writeln!(out, "{a} -> {b}").unwrap();
        }
    }
    match &r.verdict.outcome {
        Outcome::Sat(Some(Witness::Model(m))) => {
            write!(out, "{m}").unwrap();
            if r.witness_checked == Some(false) {
                out.push_str("witness=rejected\n");
            }
        }
        Outcome::Sat(Some(Witness::Tree(t))) => {
            out.push_str("witness=tree\n");
            out.push_str(t);
            if !t.ends_with('\n') {
                out.push('\n');
            }
        }
        _ => {}
    }
    match &r.oracle {
        Some(OracleNote::Model(n)) => writeln!(out, "oracle=model:{n}").unwrap(),
        Some(OracleNote::None(n)) => writeln!(out, "oracle=none:{n}").unwrap(),
        Some(OracleNote::Skipped(why)) => writeln!(out, "oracle=skipped:{why}").unwrap(),
        None => {}
    }
    if stats {
        let mut entries = r.verdict.stats.entries();
        entries.push(("logic".into(), logic.to_string()));
        entries.sort();
        for (k, v) in entries {
            writeln!(out, "{k}={v}").unwrap();
        }
    }
    out
}

/// Parses, validates and decides a problem text.
pub fn run_source(text: &str, cfg: &RunConfig) -> RunOutput {
    let p = match parse_problem(text) {
        Ok(p) => p,
        Err(e) => return input_error(format!("error: {e}\n")),
    };
    if let Err(ds) = validate(&p) {
        let mut msg = String::new();
        for d in ds {
            writeln!(msg, "error: {d}").unwrap();
        }
        return input_error(msg);
    }
    let qc = QueryConfig {
        engine: Config {
            mode: cfg.mode,
            step_limit: cfg.step_limit,
            dump: cfg.emit == Some(Emit::Tree),
        },
        oracle: cfg.oracle,
    };
    let artifact = match cfg.emit {
        None | Some(Emit::Tree) => None,
        Some(e) => match emit_reduction(&p, e) {
            Ok(t) => Some(t),
            Err(e) => return input_error(format!("error: {e}\n")),
        },
    };
    let r = decide_query(&p, &qc);
    let artifact = match cfg.emit {
        Some(Emit::Tree) => Some(r.verdict.dump.clone().unwrap_or_default()),
        _ => artifact,
    };
    RunOutput {
        stdout: format_report(&r, cfg.stats, &logic_of(&p).to_string()),
        stderr: String::new(),
        exit: match r.verdict.outcome {
            Outcome::Sat(_) => EXIT_SAT,
            Outcome::Unsat => EXIT_UNSAT,
            Outcome::Unknown(_) => EXIT_UNKNOWN,
        },
        artifact,
    }
}

/// Runs a problem file. An artifact goes to `cfg.out` when given and is
/// appended to the report otherwise.
pub fn run_file(path: &Path, cfg: &RunConfig) -> RunOutput {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return input_error(format!("error: {}: {e}\n", path.display())),
    };
    let mut out = run_source(&text, cfg);
    if let Some(a) = &out.artifact {
        match &cfg.out {
            Some(dst) => {
                if let Err(e) = std::fs::write(dst, a) {
                    return input_error(format!("error: {}: {e}\n", dst.display()));
                }
            }
            None => out.stdout.push_str(a),
        }
    }
    out
}

/// Reads back the first model block of a report.
pub fn parse_model(report: &str) -> Result<Interpretation, String> {
    let mut lines = report.lines().skip_while(|l| !l.starts_with("domain="));
    let head = lines.next().ok_or("no model block")?;
    let n: usize = head["domain=".len()..].parse().map_err(|_| format!("bad line '{head}'"))?;
    let mut i = Interpretation::new(n);
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("bad element '{s}'"));
    for line in lines {
        let Some((lhs, rhs)) = line.split_once(" = ") else { break };
        let mut words = lhs.split_whitespace();
        let (Some(kind), Some(name), None) = (words.next(), words.next(), words.next()) else { break };
        let body = rhs.trim().trim_start_matches('{').trim_end_matches('}');
        match kind {
            "concept" => {
                let ext = i.concepts.entry(name.to_string()).or_default();
                for e in body.split(',').filter(|s| !s.is_empty()) {
                    ext.insert(num(e)?);
                }
            }
            "role" => {
                let ext = i.roles.entry(name.to_string()).or_default();
                for pair in body.split(")").filter(|s| !s.trim_start_matches(',').is_empty()) {
                    let pair = pair.trim_start_matches(',').trim_start_matches('(');
                    let (a, b) = pair.split_once(',').ok_or(format!("bad pair '{pair}'"))?;
                    ext.insert((num(a)?, num(b)?));
                }
            }
            "individual" => {
                i.individuals.insert(name.to_string(), num(rhs)?);
            }
            _ => break,
        }
    }
    Ok(i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::parse_problem;
    use crate::oracle::check;

    #[test]
    fn verdict_first() {
        let o = run_source("(logic alcq) (query sat (and (>= 3 R A) (<= 1 R B) (<= 1 R (not B))))", &RunConfig::default());
        assert_eq!(o.stdout, "UNSAT\n");
        assert_eq!(o.exit, EXIT_UNSAT);
    }

    #[test]
    fn model_block_round_trip() {
        let cfg = RunConfig {
            mode: Mode::Model,
            ..Default::default()
        };
        let o = run_source("(logic alc) (query sat top)", &cfg);
        assert_eq!(o.stdout, "SAT\ndomain=1\n");
        let src = "(instance a (some R (and A (some (inv R) B))))";
        let o = run_source(&format!("(logic alcqib) {src}"), &cfg);
        assert_eq!(o.exit, EXIT_SAT);
        let m = parse_model(&o.stdout).unwrap();
        assert!(check(&m, &parse_problem(src).unwrap()), "{}", o.stdout);
    }

    #[test]
    fn stats_are_sorted() {
        let cfg = RunConfig {
            stats: true,
            ..Default::default()
        };
        let o = run_source("(query sat (and A (some R B)))", &cfg);
        let keys: Vec<&str> = o.stdout.lines().skip(1).map(|l| l.split('=').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(o.stdout.contains("logic=alc\n"));
    }

    #[test]
    fn input_errors() {
        assert_eq!(run_source("(query sat", &RunConfig::default()).exit, EXIT_INPUT);
        let o = run_source("(logic alc) (query sat (>= 2 R A))", &RunConfig::default());
        assert_eq!(o.exit, EXIT_INPUT);
        assert!(o.stderr.contains("number restriction"));
    }

    #[test]
    fn step_limit_is_unknown() {
        let cfg = RunConfig {
            step_limit: 3,
            ..Default::default()
        };
        let o = run_source("(query sat (and (some R A) (some R B) (some R C)))", &cfg);
        assert_eq!(o.stdout, "UNKNOWN step-limit\n");
        assert_eq!(o.exit, EXIT_UNKNOWN);
    }
}
