//! `distnet`: analyses of 1-safe labelled Petri nets from the command line.
//!
//! Exit codes: 0 success (or equivalent), 1 inequivalent, 2 unreadable
//! or malformed input, 3 state bound exceeded or interrupted, 4 invalid
//! net or failed invariant.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use distnet::classify::{classify, structural_async, AsyncOutcome, ClassReport};
use distnet::corpus::{random_corpus, CorpusParams};
use distnet::distribution::{canonical_distributions, Distribution, Requirement};
use distnet::dot::{to_dot, Generated};
use distnet::oracles::{verify, VerifyEntry};
use distnet::semantics::{bounded_equivalent, hide_action, readiness_equivalent, ready_semantics, Equivalence, Side};
use distnet::transform::{async_implementation, tcc_implementation};
use distnet::{emit_net, parse_net, validate, CancelToken, Error, LabelledNet, Limits, ParseError, Verdict};

#[derive(Parser)]
#[command(name = "distnet", version, about = "Asynchrony and distributability of 1-safe labelled Petri nets")]
struct Cli {
    /// Maximum number of markings any single exploration may visit.
    #[arg(long, global = true, default_value_t = distnet::limits::DEFAULT_STATE_BOUND)]
    bound: usize,
    /// Compact single-line JSON instead of indented JSON.
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Human-readable text instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check nonempty presets and contact-freeness.
    Validate { net: PathBuf },
    /// Decide every net class predicate.
    Classify { net: PathBuf },
    /// Print the step ready semantics as an annotated automaton.
    Semantics { net: PathBuf },
    /// Decide step readiness equivalence; exit 0 if equivalent, 1 if not.
    Equiv {
        left: PathBuf,
        right: PathBuf,
        /// Compare ready pairs with traces up to this length only. Unsound:
        /// "equivalent" then means "no difference found up to L".
        #[arg(long, value_name = "L")]
        bounded: Option<usize>,
    },
    /// Build an implementation and print it in the text format.
    #[command(subcommand)]
    Transform(Transform),
    /// Run the proof oracles.
    Verify {
        nets: Vec<PathBuf>,
        /// Check this many random nets instead of files.
        #[arg(long, value_name = "N", conflicts_with = "nets")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Graphviz rendering; generated elements are dashed when a provenance
    /// sidecar is given.
    Dot {
        net: PathBuf,
        #[arg(long, value_name = "FILE")]
        provenance: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Transform {
    /// Asynchronous implementation for a distribution.
    Async {
        net: PathBuf,
        /// Use a distribution meeting this requirement (fd, sd or ad),
        /// preferring one without a distributed conflict.
        #[arg(long, value_name = "REQ", conflicts_with = "dist", required_unless_present = "dist")]
        req: Option<String>,
        /// Distribution as JSON `{element: location}`.
        #[arg(long, value_name = "FILE")]
        dist: Option<PathBuf>,
        #[command(flatten)]
        out: TransformOut,
    },
    /// Transition-controlled-choice implementation.
    Tcc {
        net: PathBuf,
        #[command(flatten)]
        out: TransformOut,
    },
    /// Relabel an action as silent.
    Hide {
        net: PathBuf,
        action: String,
        #[command(flatten)]
        out: TransformOut,
    },
}

#[derive(Args)]
struct TransformOut {
    /// Write the provenance sidecar JSON here.
    #[arg(long, value_name = "FILE")]
    provenance: Option<PathBuf>,
}

/// Bad invocation or input beyond what the argument parser catches.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some()
        || e.downcast_ref::<ParseError>().is_some()
        || e.downcast_ref::<std::io::Error>().is_some()
        || e.downcast_ref::<serde_json::Error>().is_some()
    {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_inconclusive() => 3,
        Some(Error::UnknownElement(_) | Error::DistributionMismatch { .. }) => 2,
        _ => 4,
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path) -> Result<LabelledNet> {
    let text = read_text(path)?;
    parse_net(&text).map_err(|e| anyhow::Error::new(e).context(format!("{}", path.display())))
}

struct Ctx {
    limits: Limits,
    json: bool,
    pretty: bool,
}

impl Ctx {
    fn print(&self, v: &Value) {
        if self.json {
            println!("{v}");
        } else {
            println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let token = CancelToken::new();
    {
        let token = token.clone();
        // A second interrupt exits without waiting for the analysis.
        let _ = ctrlc::set_handler(move || {
            if token.is_cancelled() {
                std::process::exit(130);
            }
            token.cancel();
        });
    }
    let ctx = Ctx {
        limits: Limits::with_state_bound(cli.bound).with_cancel(token),
        json: cli.json,
        pretty: cli.pretty,
    };
    match run(&ctx, cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            if code != 1 {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(ctx: &Ctx, command: Command) -> Result<u8> {
    match command {
        Command::Validate { net } => cmd_validate(ctx, &load(&net)?),
        Command::Classify { net } => cmd_classify(ctx, &load(&net)?),
        Command::Semantics { net } => cmd_semantics(ctx, &load(&net)?),
        Command::Equiv { left, right, bounded } => cmd_equiv(ctx, &load(&left)?, &load(&right)?, bounded),
        Command::Transform(t) => cmd_transform(ctx, t),
        Command::Verify { nets, random, seed } => cmd_verify(ctx, &nets, random, seed),
        Command::Dot { net, provenance } => {
            let net = load(&net)?;
            let generated = match provenance {
                Some(p) => {
                    let v: Value = serde_json::from_str(&read_text(&p)?).context("provenance is not JSON")?;
                    Generated::from_provenance(&net, &v)
                }
                None => Generated::none(&net),
            };
            print!("{}", to_dot(&net, &generated));
            Ok(0)
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Yes => 0,
        Verdict::No => 4,
        Verdict::Unknown => 3,
    }
}

fn cmd_validate(ctx: &Ctx, net: &LabelledNet) -> Result<u8> {
    let report = validate(net, &ctx.limits)?;
    if ctx.pretty {
        println!("valid: {} ({} markings explored)", report.verdict, report.states);
        for v in &report.violations {
            println!("  {}", serde_json::to_string(v)?);
        }
        if let Some(why) = &report.incomplete {
            println!("  incomplete: {why}");
        }
    } else {
        ctx.print(&serde_json::to_value(&report)?);
    }
    Ok(verdict_code(report.verdict))
}

fn print_report(ctx: &Ctx, report: &ClassReport) -> Result<()> {
    if ctx.pretty {
        let rows = report.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            println!("{k:width$}  {v}");
        }
        for n in &report.notes {
            println!("note: {n}");
        }
    } else {
        ctx.print(&serde_json::to_value(report)?);
    }
    Ok(())
}

fn cmd_classify(ctx: &Ctx, net: &LabelledNet) -> Result<u8> {
    let report = classify(net, &ctx.limits)?;
    print_report(ctx, &report)?;
    // Asynchrony and distributability are unknown by design for labelled
    // nets, and true synchrony is only ever confirmed, never refuted.
    let mut decided = vec![report.distributed.verdict];
    if net.is_plain() {
        for r in Requirement::ASYNC {
            let e = report.asynchrony(r);
            decided.extend([e.structural, e.behavioural]);
        }
        decided.push(report.plain_distributable.verdict);
    }
    Ok(if decided.contains(&Verdict::Unknown) { 3 } else { 0 })
}

fn cmd_semantics(ctx: &Ctx, net: &LabelledNet) -> Result<u8> {
    let sem = ready_semantics(net, &ctx.limits)?;
    if ctx.pretty {
        for s in 0..sem.state_count() {
            let trace = sem.trace_to(s);
            let trace = if trace.is_empty() { "ε".to_string() } else { trace.join(" ") };
            for menu in sem.menus(s) {
                let entries: Vec<String> = menu.iter().map(ToString::to_string).collect();
                println!("<{trace}, {{{}}}>", entries.join(", "));
            }
            for (a, to) in sem.edges(s) {
                println!("  state {s} --{a}--> state {to}");
            }
        }
    } else {
        ctx.print(&sem.to_json());
    }
    Ok(0)
}

fn cmd_equiv(ctx: &Ctx, a: &LabelledNet, b: &LabelledNet, bounded: Option<usize>) -> Result<u8> {
    let eq = match bounded {
        Some(l) => bounded_equivalent(a, b, l, &ctx.limits)?,
        None => readiness_equivalent(a, b, &ctx.limits)?,
    };
    if ctx.pretty {
        let scope = bounded.map(|l| format!(" (traces up to length {l} only, unsound)")).unwrap_or_default();
        match &eq {
            Equivalence::Equivalent => println!("equivalent{scope}"),
            Equivalence::Inequivalent(w) => {
                let trace = if w.trace.is_empty() { "ε".to_string() } else { w.trace.join(" ") };
                let menu: Vec<String> = w.menu.iter().map(ToString::to_string).collect();
                let side = match w.side {
                    Side::Left => "left",
                    Side::Right => "right",
                };
                println!("inequivalent{scope}: <{trace}, {{{}}}> is a ready pair of the {side} net only", menu.join(", "));
            }
        }
    } else {
        let mut v = json!({ "equivalent": eq.is_equivalent() });
        if let Some(w) = eq.witness() {
            v["witness"] = serde_json::to_value(w)?;
        }
        if let Some(l) = bounded {
            v["bounded"] = json!(l);
            v["sound"] = json!(false);
        }
        ctx.print(&v);
    }
    Ok(if eq.is_equivalent() { 0 } else { 1 })
}

fn write_sidecar(path: &Option<PathBuf>, v: &Value) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(())
}

/// A distribution in the requirement's class without a distributed
/// conflict, or else the first canonical one.
fn pick_distribution(net: &LabelledNet, r: Requirement, limits: &Limits) -> Result<Distribution> {
    if let AsyncOutcome::Yes(d) = structural_async(net, r, limits)? {
        return Ok(d);
    }
    canonical_distributions(net, r, limits)?
        .next()
        .ok_or_else(|| anyhow!("no {r} distribution exists"))
}

fn cmd_transform(ctx: &Ctx, t: Transform) -> Result<u8> {
    match t {
        Transform::Async { net, req, dist, out } => {
            let net = load(&net)?;
            let d = match (req, dist) {
                (Some(r), _) => {
                    let r = Requirement::parse(&r)
                        .filter(|r| Requirement::ASYNC.contains(r))
                        .ok_or_else(|| Usage(format!("--req expects fd, sd or ad, not {r:?}")))?;
                    pick_distribution(&net, r, &ctx.limits)?
                }
                (None, Some(path)) => {
                    let v: Value = serde_json::from_str(&read_text(&path)?).context("distribution is not JSON")?;
                    Distribution::from_json(&net, &v)?
                }
                (None, None) => bail!(Usage("give --req or --dist".into())),
            };
            let imp = async_implementation(&net, &d)?;
            let mut prov = imp.provenance_json(&net);
            prov["distribution"] = d.to_json(&net);
            write_sidecar(&out.provenance, &prov)?;
            print!("{}", emit_net(&imp.net));
        }
        Transform::Tcc { net, out } => {
            let net = load(&net)?;
            let tcc = tcc_implementation(&net, &ctx.limits)?;
            write_sidecar(&out.provenance, &tcc.provenance_json(&net))?;
            print!("{}", emit_net(&tcc.net));
        }
        Transform::Hide { net, action, out } => {
            let net = load(&net)?;
            let hidden = hide_action(&net, &action);
            let trans: serde_json::Map<String, Value> = net
                .transitions()
                .filter(|&t| net.label(t).action() == Some(action.as_str()))
                .map(|t| (net.trans_name(t).to_string(), json!({"kind": "hidden", "action": action})))
                .collect();
            write_sidecar(&out.provenance, &json!({ "transitions": trans }))?;
            print!("{}", emit_net(&hidden));
        }
    }
    Ok(0)
}

fn worst(entries: &[VerifyEntry]) -> Verdict {
    if entries.iter().any(|e| e.verdict == Verdict::No) {
        Verdict::No
    } else if entries.iter().any(|e| e.verdict == Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Yes
    }
}

fn cmd_verify(ctx: &Ctx, paths: &[PathBuf], random: Option<usize>, seed: u64) -> Result<u8> {
    let nets: Vec<(String, LabelledNet)> = match random {
        Some(n) => random_corpus(seed, n, &CorpusParams::default())
            .into_iter()
            .map(|(s, net)| (format!("seed {s}"), net))
            .collect(),
        None if paths.is_empty() => bail!(Usage("give net files or --random N".into())),
        None => paths
            .iter()
            .map(|p| Ok((p.display().to_string(), load(p)?)))
            .collect::<Result<_>>()?,
    };
    let mut results = Vec::new();
    let mut overall = Vec::new();
    for (name, net) in &nets {
        let entries = match verify(net, &ctx.limits) {
            Ok(e) => e,
            Err(e) if e.is_inconclusive() => vec![],
            Err(e) => return Err(e.into()),
        };
        let v = if entries.is_empty() { Verdict::Unknown } else { worst(&entries) };
        overall.push(v);
        if ctx.pretty {
            println!("{name}: {v}");
            for e in &entries {
                let mut line = format!("  {:<34} {:<7} ({} checked)", e.check, e.verdict.to_string(), e.checked);
                if let Some(f) = &e.failure {
                    line += &format!(" {} at {{{}}}: {}", f.clause, f.marking.join(", "), f.detail);
                }
                if let Some(n) = &e.note {
                    line += &format!(" [{n}]");
                }
                println!("{line}");
            }
        }
        results.push(json!({ "net": name, "verdict": v, "checks": entries }));
    }
    if !ctx.pretty {
        ctx.print(&json!({ "results": results }));
    }
    let summary = if overall.contains(&Verdict::No) {
        Verdict::No
    } else if overall.contains(&Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Yes
    };
    Ok(verdict_code(summary))
}
