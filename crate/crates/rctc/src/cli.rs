//! Command-line front end. `run` returns the exit code and both output
//! streams so the binary stays a one-liner and tests can call it directly.

use std::ffi::OsString;
use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::equiv::{check_with, replay_evidence, validate_witness, CheckOptions, Flavor, Strength, Verdict};
use crate::laws::{run_law_suite, select, GenConfig};
use crate::lts::{explore_scoped, export, Bounds, ExportFormat, Scope};
use crate::sos::{forward_steps, reverse_steps, Direction, SosConfig, Transition};
use crate::syntax::{parse, parse_defs, render_labels};
use crate::term::{is_fully_executed, is_standard, max_key, sort, Definitions, Process};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BOUNDED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rctc", version, about = "Reversible truly concurrent process calculus workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// File of constant definitions `A := P`, one per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub defs: Option<String>,
    #[arg(long, global = true, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, global = true, default_value_t = 3)]
    pub width: usize,
    #[arg(long, global = true, default_value_t = 20000)]
    pub states: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Fr,
    F,
    R,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Scope {
        match s {
            ScopeArg::Fr => Scope::ForwardReverse,
            ScopeArg::F => Scope::Forward,
            ScopeArg::R => Scope::Reverse,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a term and print its canonical form and static properties.
    Parse { term: String },
    /// List the transitions of a term and the reverse transitions of its successors.
    Trace { term: String },
    /// Explore the keyed transition system of a term.
    Explore {
        term: String,
        #[arg(long, value_enum, default_value_t = ScopeArg::Fr)]
        scope: ScopeArg,
    },
    /// Decide whether two terms are bisimilar.
    Check {
        left: String,
        right: String,
        /// step, pomset, hp or hhp
        #[arg(long, default_value_t = Flavor::Step)]
        flavor: Flavor,
        /// strong or weak
        #[arg(long, default_value_t = Strength::Strong)]
        strength: Strength,
        #[arg(long, value_enum, default_value_t = ScopeArg::Fr)]
        scope: ScopeArg,
    },
    /// Run the sampled law suite.
    Laws {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Only laws whose id starts with this prefix (repeatable).
        #[arg(long = "only", value_name = "PREFIX")]
        only: Vec<String>,
        #[arg(long, default_value_t = 3)]
        gen_depth: usize,
        #[arg(long, default_value_t = 2)]
        gen_width: usize,
    },
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Output {
        Output { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn error(e: impl std::fmt::Display) -> Output {
        Output { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {e}\n") }
    }
}

/// A term argument: literal text, or `@path` to read it from a file.
fn term_arg(arg: &str) -> Result<Process, String> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
        None => arg.to_string(),
    };
    parse(text.trim()).map_err(|e| e.to_string())
}

fn load_defs(c: &Common) -> Result<Definitions, String> {
    let Some(path) = &c.defs else { return Ok(Definitions::new()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let defs = parse_defs(&text).map_err(|e| format!("{path}: {e}"))?;
    defs.validate().map_err(|e| format!("{path}: {e}"))?;
    Ok(defs)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK { Output::ok(text) } else { Output { code, stdout: String::new(), stderr: text } };
        }
    };
    let bounds = match Bounds::new(cli.common.depth, cli.common.width, cli.common.states) {
        Ok(b) => b,
        Err(e) => return Output::error(e),
    };
    let defs = match load_defs(&cli.common) {
        Ok(d) => d,
        Err(e) => return Output::error(e),
    };
    let fmt = cli.common.format;
    let res = match cli.command {
        Command::Parse { term } => term_arg(&term).and_then(|p| cmd_parse(&p, &defs, fmt)),
        Command::Trace { term } => term_arg(&term).and_then(|p| cmd_trace(&p, &defs, &bounds, fmt)),
        Command::Explore { term, scope } => term_arg(&term).and_then(|p| cmd_explore(&p, &defs, &bounds, scope.into(), fmt)),
        Command::Check { left, right, flavor, strength, scope } => term_arg(&left).and_then(|p| {
            let q = term_arg(&right)?;
            let opts = CheckOptions::new(flavor, strength, bounds).scope(scope.into());
            cmd_check(&p, &q, &defs, &opts, fmt)
        }),
        Command::Laws { seed, samples, only, gen_depth, gen_width } => {
            let cfg = GenConfig { seed, max_depth: gen_depth, max_par: gen_width, ..GenConfig::default() };
            let prefixes: Vec<&str> = only.iter().map(String::as_str).collect();
            let laws = select(&prefixes);
            if laws.is_empty() {
                Err(format!("no law matches {only:?}"))
            } else {
                let report = run_law_suite(&cfg, &laws, &bounds, samples);
                let text = match fmt {
                    Format::Text => report.render_text(),
                    Format::Machine => json(&report),
                };
                Ok(Output { code: if report.ok() { EXIT_OK } else { EXIT_FAIL }, stdout: text, stderr: String::new() })
            }
        }
    };
    res.unwrap_or_else(Output::error)
}

#[derive(Serialize)]
struct ParseInfo {
    term: String,
    standard: bool,
    fully_executed: bool,
    max_key: u64,
    sort: Vec<String>,
    sort_complete: bool,
}

fn cmd_parse(p: &Process, defs: &Definitions, fmt: Format) -> Result<Output, String> {
    let s = sort(p, defs, 64).map_err(|e| e.to_string())?;
    let info = ParseInfo {
        term: p.to_string(),
        standard: is_standard(p),
        fully_executed: is_fully_executed(p),
        max_key: max_key(p) as u64,
        sort: s.labels.iter().map(|l| l.to_string()).collect(),
        sort_complete: !s.lower_bound,
    };
    Ok(Output::ok(match fmt {
        Format::Machine => json(&info),
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "term: {}", info.term);
            let _ = writeln!(out, "standard: {}", info.standard);
            let _ = writeln!(out, "fully executed: {}", info.fully_executed);
            let _ = writeln!(out, "max key: {}", info.max_key);
            let _ = writeln!(out, "sort: {}{}", render_labels(&s.labels), if s.lower_bound { " (lower bound)" } else { "" });
            out
        }
    }))
}

#[derive(Serialize)]
struct TraceEdge {
    source: String,
    direction: Direction,
    label: String,
    target: String,
}

impl From<&Transition> for TraceEdge {
    fn from(t: &Transition) -> TraceEdge {
        TraceEdge { source: t.source.to_string(), direction: t.direction, label: t.label.render(t.direction), target: t.target.to_string() }
    }
}

fn cmd_trace(p: &Process, defs: &Definitions, bounds: &Bounds, fmt: Format) -> Result<Output, String> {
    let e = |e: Error| e.to_string();
    let mut edges: Vec<Transition> = Vec::new();
    let fwd = forward_steps(p, defs, bounds.max_width).map_err(e)?;
    edges.extend(reverse_steps(p, defs, bounds.max_width).map_err(e)?);
    for t in &fwd {
        edges.push(t.clone());
        edges.extend(reverse_steps(&t.target, defs, bounds.max_width).map_err(e)?);
    }
    let rows: Vec<TraceEdge> = edges.iter().map(TraceEdge::from).collect();
    Ok(Output::ok(match fmt {
        Format::Machine => json(&rows),
        Format::Text => rows
            .iter()
            .map(|r| {
                let arrow = if r.direction == Direction::Forward { "-->" } else { "~~>" };
                format!("{}  {arrow} {}  {}\n", r.source, r.label, r.target)
            })
            .collect(),
    }))
}

fn cmd_explore(p: &Process, defs: &Definitions, bounds: &Bounds, scope: Scope, fmt: Format) -> Result<Output, String> {
    let lts = explore_scoped(p, defs, bounds, scope, &SosConfig::width(bounds.max_width)).map_err(|e| e.to_string())?;
    let text = export(
        &lts,
        match fmt {
            Format::Text => ExportFormat::Text,
            Format::Machine => ExportFormat::Machine,
        },
    );
    let code = if lts.truncated() { EXIT_BOUNDED } else { EXIT_OK };
    Ok(Output { code, stdout: text, stderr: String::new() })
}

#[derive(Serialize)]
struct CheckReport<'a> {
    left: String,
    right: String,
    flavor: Flavor,
    strength: Strength,
    related: bool,
    bounded: bool,
    witness_size: usize,
    witness_valid: Option<bool>,
    evidence: Option<&'a crate::equiv::Evidence>,
    evidence_replays: Option<bool>,
}

fn verdict_code(v: &Verdict) -> i32 {
    match (v.bounded, v.related) {
        (true, _) => EXIT_BOUNDED,
        (false, true) => EXIT_OK,
        (false, false) => EXIT_FAIL,
    }
}

fn cmd_check(p: &Process, q: &Process, defs: &Definitions, opts: &CheckOptions, fmt: Format) -> Result<Output, String> {
    let v = check_with(p, q, defs, opts).map_err(|e| e.to_string())?;
    let report = CheckReport {
        left: p.to_string(),
        right: q.to_string(),
        flavor: opts.flavor,
        strength: opts.strength,
        related: v.related,
        bounded: v.bounded,
        witness_size: v.witness.as_ref().map_or(0, |w| w.len()),
        witness_valid: v.related.then(|| validate_witness(&v)),
        evidence: v.evidence.as_ref(),
        evidence_replays: v.evidence.as_ref().map(|_| replay_evidence(&v)),
    };
    let text = match fmt {
        Format::Machine => json(&report),
        Format::Text => {
            let mut out = String::new();
            let rel = if v.related { "related" } else { "not related" };
            let _ = writeln!(
                out,
                "{} {} {}: {rel}{}",
                opts.strength,
                opts.flavor,
                scope_text(opts.scope),
                if v.bounded { " (up to bounds)" } else { "" }
            );
            if v.related {
                let _ = writeln!(out, "witness: {} entries", report.witness_size);
            }
            if let Some(e) = &v.evidence {
                out.push_str("evidence:\n");
                for line in e.render().lines() {
                    let _ = writeln!(out, "  {line}");
                }
                out.push_str("states:\n");
                let mut seen = std::collections::BTreeSet::new();
                for s in &e.steps {
                    for (side, id) in [(0, s.from.0), (1, s.from.1)] {
                        if seen.insert((side, id)) {
                            let lts = if side == 0 { &v.left } else { &v.right };
                            let name = if side == 0 { "left" } else { "right" };
                            let _ = writeln!(out, "  {name} {id}: {}", lts.states[id].term);
                        }
                    }
                }
            }
            out
        }
    };
    Ok(Output { code: verdict_code(&v), stdout: text, stderr: String::new() })
}

fn scope_text(s: Scope) -> &'static str {
    match s {
        Scope::ForwardReverse => "forward-reverse",
        Scope::Forward => "forward",
        Scope::Reverse => "reverse",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rctc(args: &[&str]) -> Output {
        run(std::iter::once("rctc").chain(args.iter().copied()))
    }

    #[test]
    fn milner_pair_is_not_step_bisimilar() {
        let o = rctc(&["check", "--flavor", "step", "--strength", "strong", "a.nil | b.nil", "a.b.nil + b.a.nil"]);
        assert_eq!(o.code, EXIT_FAIL);
        assert!(o.stdout.contains("{a, b}"), "{}", o.stdout);
    }

    #[test]
    fn trace_shows_forward_then_reverse() {
        let o = rctc(&["trace", "a.nil"]);
        assert_eq!(o.code, EXIT_OK);
        let lines: Vec<&str> = o.stdout.lines().collect();
        assert_eq!(lines, ["a.nil  --> {a}  a[1].nil", "a[1].nil  ~~> {a[1]}  a.nil"]);
    }

    #[test]
    fn bad_input_exits_two() {
        assert_eq!(rctc(&["parse", "a.("]).code, EXIT_USAGE);
        assert_eq!(rctc(&["check", "a.nil"]).code, EXIT_USAGE);
        assert_eq!(rctc(&["--depth", "0", "parse", "nil"]).code, EXIT_USAGE);
        assert_eq!(rctc(&["laws", "--only", "nope"]).code, EXIT_USAGE);
    }

    #[test]
    fn truncated_check_exits_three() {
        let defs = std::env::temp_dir().join(format!("rctc-defs-{}.txt", std::process::id()));
        std::fs::write(&defs, "X := a.X\n").unwrap();
        let o = rctc(&["--defs", defs.to_str().unwrap(), "--depth", "3", "check", "X", "a.X"]);
        let _ = std::fs::remove_file(&defs);
        assert_eq!(o.code, EXIT_BOUNDED, "{o:?}");
    }

    #[test]
    fn output_is_deterministic() {
        let args = ["--format", "machine", "check", "--flavor", "hp", "a.nil | b.nil", "a.b.nil + b.a.nil"];
        assert_eq!(rctc(&args), rctc(&args));
    }
}
