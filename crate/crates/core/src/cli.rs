//! The `fnlab` command line.
//!
//! Exit codes: 0 everything consistent with the positivity claims, 1 anomaly
//! (a claim contradicted or two methods disagreeing), 2 results left
//! indeterminate at the highest precision tried, 64 usage error, 74 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rug::Float;

use crate::analysis::{
    self, default_feldheim_ys, default_grid, feldheim_discriminator, grid, hunt_negativity,
    integral_rep_discriminator, positivity_scan, precision_ladder, root_test_sequence, scaled_tol,
    scan_with, sign_frontier, sn_check, validated_weight, ConsensusOracle, FrontierStatus, SignOracle,
    Spacing, Verdict,
};
use crate::error::Error;
use crate::feval::{
    f_alpha_closed, f_bernoulli_series, f_consensus, f_eulerian_closed, f_hermite_integral,
    f_laguerre_series, EvalResult, KernelWeight, Method, Sign, BERNOULLI_SERIES_MAX_X,
    HERMITE_ORDER_CAP, LAGUERRE_CONSENSUS_TERMS, LAGUERRE_TERM_CAP,
};
use crate::polygamma::{gmm_laplace, gmm_leibniz};
use crate::precision::{format_real, format_short, parse_real, PrecisionContext};
use crate::report::{Cell, Format, Report, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANOMALY: i32 = 1;
pub const EXIT_INDETERMINATE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

/// Overrides the default target precision when `--prec-bits` is absent.
pub const PREC_ENV: &str = "FNLAB_PREC_BITS";
pub const DEFAULT_PREC_BITS: u32 = 128;

#[derive(Parser, Debug)]
#[command(name = "fnlab", version, about = "Numerical experiments on f_n(x) = d^n/dx^n (x^n / (1 - e^-x))")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate f_n(x) by every method and report the consensus sign.
    Eval(Opts),
    /// Positivity scan over n <= n-max and an x grid.
    Scan(Opts),
    /// Bracket the sign change of f_n inside [x-min, x-max].
    Frontier(Opts),
    /// Search for negative cells for n in [n, n-max] under an evaluation budget.
    Hunt(Opts),
    /// Check S_n > n!/2 by two routes.
    Sn(Opts),
    /// Root-test sequence of the power-series coefficients.
    Roottest(Opts),
    /// Decide the normalisation of the Feldheim integral.
    Feldheim(Opts),
    /// Compare both sides of the Laplace relation for G_m^(m).
    Gmm(Opts),
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Order n (m for gmm).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    /// Point x (y for feldheim). Accepts `log2`, `log2+d`, `log2-d`.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long = "x-min", allow_hyphen_values = true)]
    x_min: Option<String>,
    #[arg(long = "x-max", allow_hyphen_values = true)]
    x_max: Option<String>,
    /// Number of grid points in (x-min, x-max].
    #[arg(long)]
    grid: Option<usize>,
    /// Evaluate d^n/dx^n (x^(n+alpha) / (1 - e^-x)) instead.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Target precision in bits (default 128, or $FNLAB_PREC_BITS).
    #[arg(long = "prec-bits")]
    prec_bits: Option<u32>,
    /// Tolerance: relative to max(1, n!) for series, bracket width for
    /// frontier, relative agreement for gmm and feldheim.
    #[arg(long)]
    tol: Option<f64>,
    /// Restrict to one method (bernoulli-series, laguerre-series,
    /// eulerian-closed, hermite-integral, alpha-closed).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    /// Evaluation budget for hunt.
    #[arg(long)]
    budget: Option<usize>,
    /// Last index of the root-test sequence.
    #[arg(long = "j-max")]
    j_max: Option<usize>,
    /// Record wall-clock duration in the manifest.
    #[arg(long)]
    timed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    Indeterminate,
    Anomaly,
}

impl Status {
    fn code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::Anomaly => EXIT_ANOMALY,
            Status::Indeterminate => EXIT_INDETERMINATE,
        }
    }
}

struct Outcome {
    report: Report,
    lines: Vec<String>,
    status: Status,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse(_) => Failure::Usage(e.to_string()),
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

type CmdResult = std::result::Result<Outcome, Failure>;

/// Parse `argv` (including the program name), run, print, and return the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let started = Instant::now();
    let (name, opts) = match &cli.command {
        Command::Eval(o) => ("eval", o),
        Command::Scan(o) => ("scan", o),
        Command::Frontier(o) => ("frontier", o),
        Command::Hunt(o) => ("hunt", o),
        Command::Sn(o) => ("sn", o),
        Command::Roottest(o) => ("roottest", o),
        Command::Feldheim(o) => ("feldheim", o),
        Command::Gmm(o) => ("gmm", o),
    };
    let result = setup(name, opts).and_then(|env| match &cli.command {
        Command::Eval(_) => cmd_eval(&env),
        Command::Scan(_) => cmd_scan(&env),
        Command::Frontier(_) => cmd_frontier(&env),
        Command::Hunt(_) => cmd_hunt(&env),
        Command::Sn(_) => cmd_sn(&env),
        Command::Roottest(_) => cmd_roottest(&env),
        Command::Feldheim(_) => cmd_feldheim(&env),
        Command::Gmm(_) => cmd_gmm(&env),
    });
    let mut outcome = match result {
        Ok(o) => o,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "fnlab: usage error: {m}");
            return EXIT_USAGE;
        }
        Err(Failure::Io(m)) => {
            let _ = writeln!(err, "fnlab: I/O error: {m}");
            return EXIT_IO;
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "fnlab: {e}");
            return match e {
                Error::Consistency(_) => EXIT_ANOMALY,
                _ => EXIT_INDETERMINATE,
            };
        }
    };
    if opts.timed {
        outcome.report.manifest.wall_clock_seconds = Some(format!("{:.3}", started.elapsed().as_secs_f64()));
    }
    for (path, format) in [(&opts.json, Format::Json), (&opts.csv, Format::Csv)] {
        if let Some(p) = path {
            if let Err(e) = outcome.report.write(p, format) {
                let _ = writeln!(err, "fnlab: I/O error writing {}: {e}", p.display());
                return EXIT_IO;
            }
        }
    }
    if !opts.quiet {
        for l in &outcome.lines {
            let _ = writeln!(out, "{l}");
        }
    }
    outcome.status.code()
}

// ---------------------------------------------------------------------------
// Shared setup

struct Env {
    opts: Opts,
    ctx: PrecisionContext,
    manifest: RunManifest,
}

impl Env {
    fn prec(&self) -> u32 {
        self.ctx.working_bits()
    }

    fn real(&self, key: &str, raw: Option<&String>, default: &str) -> std::result::Result<Float, Failure> {
        let s = raw.map(String::as_str).unwrap_or(default);
        parse_token(s, self.prec()).map_err(|e| Failure::Usage(format!("--{key}: {e}")))
    }

    fn rel_tol(&self, default: f64) -> f64 {
        self.opts.tol.unwrap_or(default)
    }

    fn finish(&self, cells: Vec<Cell>, lines: Vec<String>, status: Status) -> CmdResult {
        let mut report = Report::new(self.manifest.clone());
        report.cells = cells;
        Ok(Outcome { report, lines, status })
    }
}

fn setup(name: &str, opts: &Opts) -> std::result::Result<Env, Failure> {
    let bits = match opts.prec_bits {
        Some(b) => b,
        None => match std::env::var(PREC_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{PREC_ENV}={v:?} is not a bit count")))?,
            Err(_) => DEFAULT_PREC_BITS,
        },
    };
    let ctx = PrecisionContext::new(bits).map_err(Failure::from)?;
    if let Some(t) = opts.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let mut m = RunManifest::new(name, bits)
        .truncation("guard_bits", ctx.guard_bits())
        .truncation("ladder_top_bits", analysis::LADDER_TOP_BITS)
        .truncation("bernoulli_series_max_x", BERNOULLI_SERIES_MAX_X)
        .truncation("laguerre_term_cap", LAGUERRE_TERM_CAP)
        .truncation("laguerre_consensus_terms", LAGUERRE_CONSENSUS_TERMS)
        .truncation("hermite_order_cap", HERMITE_ORDER_CAP);
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            m.parameters.insert(k.into(), v);
        }
    };
    put("n", opts.n.map(|v| v.to_string()));
    put("n_max", opts.n_max.map(|v| v.to_string()));
    put("x", opts.x.clone());
    put("x_min", opts.x_min.clone());
    put("x_max", opts.x_max.clone());
    put("grid", opts.grid.map(|v| v.to_string()));
    put("alpha", opts.alpha.clone());
    put("tol", opts.tol.map(|v| format!("{v:e}")));
    put("method", opts.method.clone());
    put("budget", opts.budget.map(|v| v.to_string()));
    put("j_max", opts.j_max.map(|v| v.to_string()));
    Ok(Env {
        opts: opts.clone(),
        ctx,
        manifest: m,
    })
}

/// A decimal literal, `log2`, or `log2±literal`, at `prec` bits.
fn parse_alpha(a: &str, prec: u32) -> std::result::Result<Float, Failure> {
    let alpha = parse_token(a, prec).map_err(|e| Failure::Usage(format!("--alpha: {e}")))?;
    if alpha.cmp0() != Some(std::cmp::Ordering::Greater) {
        return Err(Failure::Usage(format!("--alpha must be > 0, got {a}")));
    }
    Ok(alpha)
}

pub fn parse_token(s: &str, prec: u32) -> crate::Result<Float> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("log2") {
        let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(ln2);
        }
        let (sign, lit) = match rest.split_at(1) {
            ("+", l) => (1, l),
            ("-", l) => (-1, l),
            _ => return Err(Error::Parse(format!("cannot read {s:?}"))),
        };
        let off = parse_real(lit, prec)?;
        return Ok(if sign > 0 { ln2 + off } else { ln2 - off });
    }
    parse_real(t, prec)
}

fn short(v: &Float) -> String {
    format_short(v, 20)
}

fn named_cell(n: u32, x: &Float, value: &Float, bound: &Float, method: &str) -> Cell {
    Cell {
        n,
        x: format_real(x),
        value: format_real(value),
        error_bound: format_real(bound),
        sign: crate::feval::classify(value, bound),
        method: method.into(),
    }
}

fn ln2_cut(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Log2) + analysis::THEOREM_MARGIN
}

/// Verdict on a single signed cell, using the same rule as the scans.
fn cell_status(r: &EvalResult) -> Status {
    let above = r.x > ln2_cut(r.x.prec().max(64));
    match r.sign {
        Sign::Positive => Status::Ok,
        Sign::Negative if above || r.n <= analysis::SMALL_N_CLAIM => Status::Anomaly,
        Sign::Negative => Status::Ok,
        Sign::Indeterminate if above => Status::Anomaly,
        Sign::Indeterminate => Status::Indeterminate,
    }
}

/// Kernel weight chosen by a small discriminator run.
fn quick_weight(ctx: &PrecisionContext) -> crate::Result<Option<KernelWeight>> {
    let c = PrecisionContext::new(ctx.target_bits().min(128))?;
    let ys = default_feldheim_ys(c.working_bits());
    let fl = feldheim_discriminator(&[0, 2, 3], &ys, &c, 1e-6)?;
    let xs = [Float::with_val(c.working_bits(), 1), Float::with_val(c.working_bits(), 2)];
    let ir = integral_rep_discriminator(&[0, 2], &xs, &c, 1e-6)?;
    Ok(validated_weight(&fl, &ir))
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_eval(env: &Env) -> CmdResult {
    let n = env.opts.n.unwrap_or(1);
    let x = env.real("x", env.opts.x.as_ref(), "1")?;
    if x <= 0 {
        return Err(Failure::Usage("--x must be > 0".into()));
    }
    let rel = env.rel_tol(analysis::DEFAULT_REL_TOL);
    let tol = scaled_tol(n, rel);
    let only = match &env.opts.method {
        Some(m) => Some(Method::from_name(m).ok_or_else(|| Failure::Usage(format!("unknown method {m:?}")))?),
        None => None,
    };
    let wants = |m: Method| only.is_none_or(|o| o == m);
    let ctx = &env.ctx;
    let mut manifest_weight = None;
    let mut results: Vec<(String, crate::Result<EvalResult>)> = Vec::new();

    if let Some(a) = &env.opts.alpha {
        let alpha = parse_alpha(a, env.prec())?;
        results.push(("alpha-closed".into(), f_alpha_closed(n, &alpha, &x, ctx)));
    } else {
        if wants(Method::BernoulliSeries) && (x <= BERNOULLI_SERIES_MAX_X || only.is_some()) {
            results.push(("bernoulli-series".into(), f_bernoulli_series(n, &x, ctx, tol)));
        }
        if wants(Method::LaguerreSeries) {
            results.push(("laguerre-series".into(), f_laguerre_series(n, &x, ctx, tol)));
        }
        if wants(Method::EulerianClosed) {
            results.push(("eulerian-closed".into(), f_eulerian_closed(n, &x, ctx)));
        }
        if wants(Method::HermiteIntegral) {
            let weight = quick_weight(ctx)?;
            manifest_weight = Some(weight);
            let w = weight.unwrap_or(KernelWeight::GaussianCorrected);
            let htol = scaled_tol(n, rel.max(1e-15));
            results.push((
                format!("hermite-integral ({})", w.name()),
                f_hermite_integral(n, &x, ctx, 0, w, htol),
            ));
        }
    }
    let mut manifest = env.manifest.clone();
    if let Some(w) = manifest_weight {
        manifest.validated_feldheim_weight = w.into();
    }
    let env = Env {
        manifest,
        opts: env.opts.clone(),
        ctx: env.ctx.clone(),
    };

    let mut lines = vec![format!("f_{n}({})", short(&x))];
    let mut cells = Vec::new();
    let mut status = Status::Ok;
    for (label, r) in &results {
        match r {
            Ok(r) => {
                lines.push(format!(
                    "  {label:<38} {}  ± {}",
                    short(&r.value),
                    format_short(&r.error_bound, 3)
                ));
                cells.push(Cell::from_eval(r));
            }
            Err(e) => {
                lines.push(format!("  {label:<38} unavailable: {e}"));
                if only.is_some() {
                    return Err(Failure::Run(clone_err(e)));
                }
            }
        }
    }

    if env.opts.alpha.is_none() && only.is_none() {
        // consensus, escalating precision on an indeterminate sign
        let mut last = None;
        for c in precision_ladder(ctx) {
            match f_consensus(n, &x, &c, tol) {
                Ok(cons) => {
                    let done = cons.result.sign != Sign::Indeterminate;
                    last = Some((c.target_bits(), cons.result));
                    if done {
                        break;
                    }
                }
                Err(Error::Consistency(a)) => {
                    lines.push(format!("  consensus alarm: {a}"));
                    return env.finish(cells, lines, Status::Anomaly);
                }
                Err(e) => return Err(e.into()),
            }
        }
        let (bits, cons) = last.expect("ladder is never empty");
        lines.push(format!("  consensus sign: {} ({bits} bits)", cons.sign.name()));
        status = cell_status(&cons);
        let mut cell = Cell::from_eval(&cons);
        cell.method = "consensus".into();
        cells.push(cell);
    } else if let Some(Ok(r)) = results.last().map(|(_, r)| r.as_ref()) {
        lines.push(format!("  sign: {}", r.sign.name()));
        status = cell_status(r);
    }
    env.finish(cells, lines, status)
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Domain(s) => Error::Domain(s.clone()),
        Error::Parse(s) => Error::Parse(s.clone()),
        Error::Convergence(s) => Error::Convergence(s.clone()),
        Error::Truncation { terms, tol, best_bound } => Error::Truncation {
            terms: *terms,
            tol: *tol,
            best_bound: best_bound.clone(),
        },
        other => Error::Convergence(other.to_string()),
    }
}

fn scan_grid(env: &Env) -> std::result::Result<Vec<Float>, Failure> {
    let prec = env.prec();
    if env.opts.x_min.is_none() && env.opts.x_max.is_none() && env.opts.grid.is_none() {
        if let Some(x) = &env.opts.x {
            return Ok(vec![env.real("x", Some(x), "1")?]);
        }
        return Ok(default_grid(prec));
    }
    let lo = env.real("x-min", env.opts.x_min.as_ref(), "1e-3")?;
    let hi = env.real("x-max", env.opts.x_max.as_ref(), "10")?;
    let count = env.opts.grid.unwrap_or(200);
    let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
    let spacing = if hi <= ln2 { Spacing::Geometric } else { Spacing::Uniform };
    Ok(grid(&lo, &hi, count, spacing, prec)?)
}

fn cmd_scan(env: &Env) -> CmdResult {
    let (n_min, n_max) = match (env.opts.n, env.opts.n_max) {
        (Some(n), None) => (n, n),
        (n, m) => (n.unwrap_or(0), m.unwrap_or(40)),
    };
    let xs = scan_grid(env)?;
    let rel = env.rel_tol(analysis::DEFAULT_REL_TOL);
    let method = match &env.opts.method {
        Some(m) => Some(Method::from_name(m).ok_or_else(|| Failure::Usage(format!("unknown method {m:?}")))?),
        None => None,
    };
    let alpha = match &env.opts.alpha {
        Some(a) => Some(parse_alpha(a, env.prec())?),
        None => None,
    };
    let single = |n: u32, x: &Float, c: &PrecisionContext| -> crate::Result<EvalResult> {
        let tol = scaled_tol(n, rel);
        if let Some(a) = &alpha {
            return f_alpha_closed(n, a, x, c);
        }
        match method {
            Some(Method::BernoulliSeries) => f_bernoulli_series(n, x, c, tol),
            Some(Method::LaguerreSeries) => f_laguerre_series(n, x, c, tol),
            Some(Method::HermiteIntegral) => {
                f_hermite_integral(n, x, c, 0, KernelWeight::GaussianCorrected, scaled_tol(n, rel.max(1e-15)))
            }
            _ => f_eulerian_closed(n, x, c),
        }
    };
    let report = if method.is_none() && alpha.is_none() {
        if n_min == 0 {
            positivity_scan(n_max, &xs, &env.ctx, rel)?
        } else {
            scan_with(&ConsensusOracle { rel_tol: rel }, n_min, n_max, &xs, &env.ctx, rel)?
        }
    } else {
        scan_with(&single, n_min, n_max, &xs, &env.ctx, rel)?
    };
    let anomalies = report.anomalies();
    let mut lines = vec![format!(
        "scan n = {n_min}..={n_max}, {} points in [{}, {}], {}..{} bits",
        xs.len(),
        xs.first().map(short).unwrap_or_default(),
        xs.last().map(short).unwrap_or_default(),
        report.base_bits,
        report.max_bits
    )];
    lines.push(format!(
        "  positive {}  negative {}  indeterminate {}  anomalies {}",
        report.count(Sign::Positive),
        report.count(Sign::Negative),
        report.count(Sign::Indeterminate),
        anomalies.len()
    ));
    for a in anomalies.iter().take(20) {
        lines.push(format!(
            "  anomaly n={} x={} value={} ± {}{}",
            a.result.n,
            short(&a.result.x),
            short(&a.result.value),
            format_short(&a.result.error_bound, 3),
            a.alarm.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()
        ));
    }
    let status = if !anomalies.is_empty() {
        Status::Anomaly
    } else if report.count(Sign::Indeterminate) > 0 {
        Status::Indeterminate
    } else {
        Status::Ok
    };
    let cells = report.cells.iter().map(|c| Cell::from_eval(&c.result)).collect();
    let mut env2 = Env {
        opts: env.opts.clone(),
        ctx: env.ctx.clone(),
        manifest: env.manifest.clone(),
    };
    env2.manifest = env2
        .manifest
        .param("rel_tol", format!("{rel:e}"))
        .param("grid_points", xs.len());
    env2.finish(cells, lines, status)
}

fn frontier_lines(rep: &analysis::FrontierReport, lines: &mut Vec<String>, cells: &mut Vec<Cell>) {
    match &rep.bracket {
        Some((lo, hi)) => {
            lines.push(format!(
                "  n={} {} bracket [{}, {}] width {}",
                rep.n,
                rep.status.name(),
                short(&lo.x),
                short(&hi.x),
                format_short(&rep.width().expect("bracket"), 3)
            ));
            cells.push(Cell::from_eval(lo));
            cells.push(Cell::from_eval(hi));
        }
        None => lines.push(format!("  n={} {}", rep.n, rep.status.name())),
    }
}

fn cmd_frontier(env: &Env) -> CmdResult {
    let n = env.opts.n.unwrap_or(60);
    let lo = env.real("x-min", env.opts.x_min.as_ref(), "0.01")?;
    let hi = env.real("x-max", env.opts.x_max.as_ref(), "log2")?;
    let width = env.opts.tol.unwrap_or(1e-12);
    let oracle = ConsensusOracle::default();
    let rep = sign_frontier(&oracle as &dyn SignOracle, n, (&lo, &hi), &env.ctx, width)?;
    let mut lines = vec![format!("frontier n={n} window [{}, {}]", short(&lo), short(&hi))];
    let mut cells = Vec::new();
    frontier_lines(&rep, &mut lines, &mut cells);
    let status = match rep.status {
        FrontierStatus::PrecisionLimited => Status::Indeterminate,
        _ if n <= analysis::SMALL_N_CLAIM && rep.witnesses.iter().any(|w| w.sign == Sign::Negative) => Status::Anomaly,
        _ => Status::Ok,
    };
    env.finish(cells, lines, status)
}

fn cmd_hunt(env: &Env) -> CmdResult {
    let first = env.opts.n.unwrap_or(17);
    let last = env.opts.n_max.unwrap_or(first.max(40));
    if first > last {
        return Err(Failure::Usage(format!("empty n range {first}..={last}")));
    }
    let ns: Vec<u32> = (first..=last).collect();
    let lo = env.real("x-min", env.opts.x_min.as_ref(), "0.005")?;
    let hi = env.real("x-max", env.opts.x_max.as_ref(), "0.69")?;
    let budget = env.opts.budget.unwrap_or(20_000);
    let rep = hunt_negativity(&ConsensusOracle::default(), &ns, (&lo, &hi), &env.ctx, budget)?;
    let mut lines = vec![format!(
        "hunt n = {first}..={last} in [{}, {}], {} evaluations{}",
        short(&lo),
        short(&hi),
        rep.evaluations,
        if rep.exhausted { ", budget exhausted (partial)" } else { "" }
    )];
    let mut cells = Vec::new();
    for f in &rep.frontiers {
        frontier_lines(f, &mut lines, &mut cells);
    }
    for neg in &rep.negatives {
        lines.push(format!(
            "  negative n={} x={} value={} ± {}",
            neg.n,
            short(&neg.x),
            short(&neg.value),
            format_short(&neg.error_bound, 3)
        ));
        cells.push(Cell::from_eval(neg));
    }
    let status = if rep.negatives.iter().any(|r| r.n <= analysis::SMALL_N_CLAIM) {
        Status::Anomaly
    } else if rep.exhausted {
        Status::Indeterminate
    } else {
        Status::Ok
    };
    env.finish(cells, lines, status)
}

fn cmd_sn(env: &Env) -> CmdResult {
    let n_max = env.opts.n_max.or(env.opts.n).unwrap_or(20);
    let rows = sn_check(n_max, &env.ctx, env.rel_tol(analysis::DEFAULT_REL_TOL))?;
    let one = Float::with_val(env.prec(), 1);
    let mut lines = vec![format!("{:>3}  {:<26} {:<26} {}", "n", "S_n", "n!/2", "agree")];
    let mut cells = Vec::new();
    let mut status = Status::Ok;
    for r in &rows {
        lines.push(format!(
            "{:>3}  {:<26} {:<26} {}",
            r.n,
            short(&r.direct),
            short(&r.half_factorial),
            if r.agree { "yes" } else { "NO" }
        ));
        if !r.agree || r.margin <= 0 {
            status = Status::Anomaly;
        }
        cells.push(named_cell(r.n, &one, &r.direct, &r.direct_bound, "sn-direct"));
        cells.push(named_cell(r.n, &one, &r.via_f, &r.via_f_bound, "sn-via-f"));
    }
    env.finish(cells, lines, status)
}

fn cmd_roottest(env: &Env) -> CmdResult {
    let n = env.opts.n.unwrap_or(1);
    let j_max = env.opts.j_max.unwrap_or(100);
    let seq = root_test_sequence(n, j_max, &env.ctx)?;
    let prec = env.prec();
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    let zero = Float::with_val(prec, 0);
    let mut cells = Vec::new();
    for (i, r) in seq.iter().enumerate() {
        let j = Float::with_val(prec, i as u64 + 1);
        cells.push(named_cell(n, &j, r, &zero, "root-test"));
    }
    let last = seq.last().expect("j_max >= 1");
    let dev = Float::with_val(prec, last * &two_pi) - 1u32;
    let lines = vec![
        format!("root test n={n}: r_{j_max} = {}", short(last)),
        format!("  r_{j_max}·2π - 1 = {}  (limit 1/(2π) = {})", format_short(&dev, 6), short(&two_pi.recip())),
    ];
    env.finish(cells, lines, Status::Ok)
}

fn cmd_feldheim(env: &Env) -> CmdResult {
    let n_max = env.opts.n_max.or(env.opts.n).unwrap_or(6);
    let ns: Vec<u32> = (0..=n_max).collect();
    let prec = env.prec();
    let ys = match &env.opts.x {
        Some(y) => vec![env.real("x", Some(y), "1")?],
        None => default_feldheim_ys(prec),
    };
    let tol = env.rel_tol(1e-6);
    let fl = feldheim_discriminator(&ns, &ys, &env.ctx, tol)?;
    let xs: Vec<Float> = [1u32, 2, 3].iter().map(|&v| Float::with_val(prec, v)).collect();
    let ir = integral_rep_discriminator(&ns, &xs, &env.ctx, tol)?;
    let mut lines = vec!["Feldheim integral (deviation relative to √π 2^(n-1) n!)".to_string()];
    let mut cells = Vec::new();
    let zero = Float::with_val(prec, 0);
    let dev = |d: Option<f64>| d.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
    for c in &fl.cells {
        lines.push(format!(
            "  n={} y={:<12} as-printed {:<9} corrected {:<9} {}",
            c.n,
            format_short(&c.arg, 8),
            dev(c.dev_as_printed),
            dev(c.dev_corrected),
            c.verdict.name()
        ));
        if let Some(m) = &c.measured {
            cells.push(named_cell(c.n, &c.arg, m, &zero, "feldheim-quadrature"));
        }
    }
    lines.push("integral representation vs closed form (relative deviation)".into());
    for c in &ir.cells {
        lines.push(format!(
            "  n={} x={:<12} as-printed {:<9} corrected {:<9} {}",
            c.n,
            format_short(&c.arg, 8),
            dev(c.dev_as_printed),
            dev(c.dev_corrected),
            c.verdict.name()
        ));
        cells.push(named_cell(c.n, &c.arg, &c.as_printed, &zero, "hermite-integral-as-printed"));
        cells.push(named_cell(c.n, &c.arg, &c.corrected, &zero, "hermite-integral-gaussian-corrected"));
    }
    let a = fl.unanimous();
    let b = ir.unanimous();
    let weight = validated_weight(&fl, &ir);
    lines.push(format!(
        "verdict: feldheim {}, integral representation {}, validated weight {}",
        a.map(|v| v.name()).unwrap_or("split"),
        b.map(|v| v.name()).unwrap_or("split"),
        weight.map(|w| w.name()).unwrap_or("not-yet-determined")
    ));
    let decisive = |r: &analysis::DiscriminatorReport| r.cells.iter().any(|c| c.verdict != Verdict::Inconclusive);
    let split = |r: &analysis::DiscriminatorReport| decisive(r) && r.unanimous().is_none();
    let status = if split(&fl) || split(&ir) || (a.is_some() && b.is_some() && a != b) {
        Status::Anomaly
    } else if weight.is_none() {
        Status::Indeterminate
    } else {
        Status::Ok
    };
    let mut manifest = env.manifest.clone();
    manifest.validated_feldheim_weight = weight.into();
    let env = Env {
        manifest,
        opts: env.opts.clone(),
        ctx: env.ctx.clone(),
    };
    env.finish(cells, lines, status)
}

fn cmd_gmm(env: &Env) -> CmdResult {
    let m_first = env.opts.n.unwrap_or(1);
    let m_last = env.opts.n_max.unwrap_or(if env.opts.n.is_some() { m_first } else { 5 });
    if m_first == 0 || m_first > m_last {
        return Err(Failure::Usage(format!("gmm needs 1 <= n <= n-max, got {m_first}..={m_last}")));
    }
    let prec = env.prec();
    let xs: Vec<Float> = match (&env.opts.x, env.opts.x_min.is_some() || env.opts.grid.is_some()) {
        (Some(x), _) => vec![env.real("x", Some(x), "1")?],
        (None, true) => scan_grid(env)?,
        (None, false) => [0.5, 1.0, 2.0, 4.0].iter().map(|&v| Float::with_val(prec, v)).collect(),
    };
    let rel = env.rel_tol(1e-10);
    let mut lines = vec![format!("{:>2}  {:<14} {:<26} {:<26} rel.diff", "m", "x", "Leibniz", "Laplace")];
    let mut cells = Vec::new();
    let mut status = Status::Ok;
    for m in m_first..=m_last {
        for x in &xs {
            let a = gmm_leibniz(m, x, &env.ctx)?;
            let tol = (rel * a.value.to_f64().abs()).max(f64::MIN_POSITIVE);
            let b = gmm_laplace(m, x, &env.ctx, tol)?;
            let diff = Float::with_val(prec, &a.value - &b.value).abs();
            let rd = Float::with_val(prec, &diff / &a.value).abs();
            let ok = diff <= Float::with_val(prec, &a.error_bound + &b.error_bound) && a.value > 0;
            if !ok {
                status = Status::Anomaly;
            }
            lines.push(format!(
                "{m:>2}  {:<14} {:<26} {:<26} {}{}",
                format_short(x, 8),
                short(&a.value),
                short(&b.value),
                format_short(&rd, 3),
                if ok { "" } else { "  MISMATCH" }
            ));
            cells.push(named_cell(m, x, &a.value, &a.error_bound, "gmm-leibniz"));
            cells.push(named_cell(m, x, &b.value, &b.error_bound, "gmm-laplace"));
        }
    }
    env.finish(cells, lines, status)
}
