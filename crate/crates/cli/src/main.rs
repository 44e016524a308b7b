use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use porosity::estimate::{Protocol, Side};
use porosity::intset::IntegerSet;
use porosity::porosity0::profile;
use porosity::porosity_inf::{build_m, classify_inf, porosity_interval_inf, upper_porosity_inf};
use porosity::pretangent::{
    limit_set, max_avoided_interval, omega_card_probe, snapshot, NormalizingSequence, SnapshotOptions,
    DEFAULT_EPS,
};
use porosity::report::{profile_csv, render_compact, snapshot_csv, ssp_json};
use porosity::scaling::ScalingFunction;
use porosity::setkit::{SetHandle, DEFAULT_BUDGET};
use porosity::spec::{IntSpec, MuSpec, SetSpec};
use porosity::structure::{classify_csp, classify_ssp, f_criterion, half_law_checks};
use porosity::verify::{run_plan, RunOptions, VerifyPlan};
use porosity::{Error, Exact, Log2, Magnitude};

#[derive(Parser)]
#[command(name = "porosity", version, about = "Porosity of point sets at 0 and at infinity")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Deepest dyadic window (command-specific default).
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Trailing windows used for estimates.
    #[arg(long, global = true, default_value_t = 8)]
    windows: u32,
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Maximum number of enumerated points per set.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Exact rational arithmetic (default).
    #[arg(long, global = true, conflicts_with = "log_domain")]
    exact: bool,
    /// Base-2 logarithmic magnitudes, for sets too deep for rationals.
    #[arg(long, global = true)]
    log_domain: bool,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List points of a set, or build the integer set `M` from a set and a scaling function.
    Build {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long, requires = "n")]
        mu: Option<String>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Porosity at 0: window extrema of `Φ` and the porosity interval.
    Porosity {
        #[arg(long)]
        spec: String,
        /// Write the window profile as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Porosity at infinity of an integer set under a scaling function.
    Infinity {
        #[arg(long)]
        set: String,
        #[arg(long)]
        mu: String,
    },
    /// Rescaled snapshots, limit-set clusters and cardinality probes.
    Pretangent {
        #[arg(long)]
        spec: String,
        /// `geometric:q` or `set` (points of the set itself).
        #[arg(long, default_value = "geometric:1/2")]
        r: String,
        #[arg(long, default_value_t = 24)]
        len: usize,
        #[arg(long, default_value_t = 8)]
        tail: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Gap-structure classification near 0.
    Classify {
        #[arg(long)]
        spec: String,
    },
    /// Run a verification plan (the bundled plan when none is given).
    Verify {
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Include wall-clock runtimes in the report.
        #[arg(long)]
        timings: bool,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExhausted { .. } => 3,
        Error::Malformed(_)
        | Error::UnknownKind(_)
        | Error::OutOfRange(_)
        | Error::ModeMismatch
        | Error::Unrepresentable(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = cli.global.clone();
    let res = if g.log_domain { dispatch::<Log2>(&cli.cmd, &g) } else { dispatch::<Exact>(&cli.cmd, &g) };
    match res.and_then(|(text, code)| emit(&g, &text).map(|_| code)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn emit(g: &Global, text: &str) -> Result<(), Error> {
    match &g.out {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(Error::from),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::from(e)),
            _ => Ok(()),
        },
    }
}

fn write_file(p: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(p, text).map_err(Error::from)
}

/// Inline JSON, or a path to a JSON file.
fn read_spec(arg: &str) -> Result<SetSpec, Error> {
    let t = arg.trim();
    if t.starts_with('{') {
        return SetSpec::from_json(t);
    }
    let text = std::fs::read_to_string(t).map_err(|e| Error::Io(format!("{t}: {e}")))?;
    SetSpec::from_json(&text)
}

fn set_handle<M: Magnitude>(arg: &str, g: &Global) -> Result<SetHandle<M>, Error> {
    Ok(SetHandle::from_spec(&read_spec(arg)?)?.with_budget(g.budget))
}

fn proto(g: &Global, default_depth: u32) -> Protocol {
    Protocol::new(g.depth.unwrap_or(default_depth)).windows(g.windows).tol(g.tol)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn dispatch<M: Magnitude>(cmd: &Cmd, g: &Global) -> Result<(String, u8), Error> {
    let v = match cmd {
        Cmd::Build { spec, points, mu, n } => build::<M>(spec, *points, mu.as_deref(), *n, g)?,
        Cmd::Porosity { spec, csv } => porosity::<M>(spec, csv.as_deref(), g)?,
        Cmd::Infinity { set, mu } => infinity::<M>(set, mu, g)?,
        Cmd::Pretangent { spec, r, len, tail, csv } => pretangent::<M>(spec, r, *len, *tail, csv.as_deref(), g)?,
        Cmd::Classify { spec } => classify::<M>(spec, g)?,
        Cmd::Verify { plan, timings } => {
            let plan = match plan {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                    VerifyPlan::from_json(&text)?
                }
                None => VerifyPlan::bundled(),
            };
            let report = run_plan(&plan, &RunOptions { seed: g.seed, timings: *timings });
            let text = report.to_json();
            if let Some(p) = &plan.out {
                write_file(Path::new(p), &format!("{text}\n"))?;
            }
            return Ok((text, report.exit_status as u8));
        }
    };
    Ok((pretty(&v), 0))
}

fn build<M: Magnitude>(spec: &str, points: usize, mu: Option<&str>, n: Option<u64>, g: &Global) -> Result<Value, Error> {
    let e = set_handle::<M>(spec, g)?;
    if let (Some(mu), Some(n)) = (mu, n) {
        let mu = ScalingFunction::<M>::from_spec(&MuSpec::parse(mu)?)?;
        let built = build_m(&e, &mu, n)?;
        return Ok(json!({
            "members": built.set.elements_in(1, n)?,
            "horizon": built.horizon,
            "budget_hit": built.budget_hit,
        }));
    }
    let mut out = Vec::new();
    for i in 0..points {
        match e.point(i)? {
            Some(x) => out.push(x.render()),
            None => break,
        }
    }
    Ok(json!({ "spec": e.spec(), "mode": M::MODE, "points": out }))
}

fn porosity<M: Magnitude>(spec: &str, csv: Option<&Path>, g: &Global) -> Result<Value, Error> {
    let e = set_handle::<M>(spec, g)?;
    let p = proto(g, 40);
    let prof = profile(&e, &p)?;
    if prof.windows.is_empty() {
        return Err(Error::BudgetExhausted { budget: e.budget() });
    }
    if let Some(path) = csv {
        write_file(path, &profile_csv(&prof))?;
    }
    let lo = prof.bracket(Side::Lower);
    let hi = prof.bracket(Side::Upper);
    let windows: Vec<Value> = prof
        .windows
        .iter()
        .map(|(j, w)| json!({"j": j, "sup": w.sup.render(), "inf": w.inf.render()}))
        .collect();
    Ok(json!({
        "spec": e.spec(),
        "mode": M::MODE,
        "depth": p.depth,
        "windows": windows,
        "upper": hi.estimate.render(),
        "lower": lo.estimate.render(),
        "interval": [lo.estimate.render(), hi.estimate.render()],
        "converged": lo.converged && hi.converged,
        "budget_hit": !prof.skipped.is_empty(),
        "skipped_windows": prof.skipped,
    }))
}

fn infinity<M: Magnitude>(set: &str, mu: &str, g: &Global) -> Result<Value, Error> {
    let e = IntegerSet::from_spec(&IntSpec::parse(set)?)?;
    let mu = ScalingFunction::<M>::from_spec(&MuSpec::parse(mu)?)?;
    // Keep every window argument inside the range the scaling function can evaluate.
    let cap = mu.max_argument().map_or(12, |n| 63 - n.leading_zeros());
    let p = proto(g, cap.min(12));
    let class = classify_inf(&e, &mu, &p)?;
    let upper = upper_porosity_inf(&e, &mu, &p)?;
    let (lo, _) = porosity_interval_inf(&e, &mu, &p)?;
    Ok(json!({
        "set": e.spec(),
        "mu": mu.spec(),
        "mode": M::MODE,
        "depth": p.depth,
        "class": class.class,
        "upper": render_compact(&upper.estimate),
        "upper_from_ratios": class.upper,
        "lower": render_compact(&lo.estimate),
        "converged": upper.converged && lo.converged,
    }))
}

fn sequence<M: Magnitude>(e: &SetHandle<M>, r: &str, len: usize) -> Result<NormalizingSequence<M>, Error> {
    if r == "set" {
        return NormalizingSequence::from_set_points(e, &(0..len).collect::<Vec<_>>());
    }
    match r.split_once(':') {
        Some(("geometric", q)) => {
            let q = M::from_rational(&porosity::scalar::parse_rational(q)?)?;
            NormalizingSequence::geometric(&q, 1, len)
        }
        _ => Err(Error::UnknownKind(r.to_string())),
    }
}

fn pretangent<M: Magnitude>(
    spec: &str,
    r: &str,
    len: usize,
    tail: usize,
    csv: Option<&Path>,
    g: &Global,
) -> Result<Value, Error> {
    let e = set_handle::<M>(spec, g)?;
    let seq = sequence(&e, r, len)?;
    let opts = SnapshotOptions::new(M::one());
    if let Some(path) = csv {
        let mut snaps = Vec::with_capacity(seq.len());
        for t in &seq.terms {
            snaps.push(snapshot(&e, t, &opts)?);
        }
        write_file(path, &snapshot_csv(&snaps))?;
    }
    let ls = limit_set(&e, &seq, &opts, tail, DEFAULT_EPS)?;
    let card = omega_card_probe(&e, &seq, tail, DEFAULT_EPS)?;
    let avoided = max_avoided_interval(&e, &seq, tail, DEFAULT_EPS, None, &M::zero())?;
    let clusters: Vec<Value> = ls
        .stable()
        .map(|c| json!({"lo": c.lo, "hi": c.hi, "hits": c.hits}))
        .collect();
    Ok(json!({
        "spec": e.spec(),
        "sequence": seq.label,
        "terms": seq.len(),
        "tail": tail,
        "eps": DEFAULT_EPS,
        "clusters": clusters,
        "card_probe": {"lower": card.lower, "upper": card.upper},
        "max_avoided_interval": avoided.map(|(a, b)| [a.render(), b.render()]),
    }))
}

fn classify<M: Magnitude>(spec: &str, g: &Global) -> Result<Value, Error> {
    let e = set_handle::<M>(spec, g)?;
    let p = proto(g, 40);
    let ssp = classify_ssp(&e, &p)?;
    let csp = classify_csp(&e, &p)?;
    let f = f_criterion(&e, &p)?;
    let half = half_law_checks(&e, &p, ssp.verdict)?;
    Ok(json!({
        "spec": e.spec(),
        "mode": M::MODE,
        "depth": p.depth,
        "ssp": ssp_json(&ssp),
        "csp": {
            "verdict": csp.verdict,
            "chain_m": csp.m.map(|m| m.estimate.render()),
            "upper_porosity": csp.upper_porosity,
        },
        "f_criterion": {
            "verdict": f.verdict,
            "profile": f.profile.iter().map(|(j, v)| json!({"j": j, "value": v.to_f64()})).collect::<Vec<_>>(),
        },
        "half_laws": half,
    }))
}
