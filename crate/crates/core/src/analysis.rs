//! Experiments over the evaluators.
//!
//! Scans classify `f_n(x)` by consensus sign and climb a precision ladder
//! (target, 2·target, ... up to at least 512 bits) only for cells that stay
//! indeterminate. Tolerances handed to the series are relative to `max(1, n!)`
//! since `f_n` itself lives on that scale.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::arith::{bernoulli, bernoulli_float, factorial, EXACT_BERNOULLI_MAX};
use crate::error::{Error, Result};
use crate::feval::{
    f_consensus, f_eulerian_closed, f_hermite_integral, EvalResult, KernelWeight, Method, Sign,
};
use crate::orthopoly::{gauss_hermite_rule, hermite_at, laguerre_at};
use crate::precision::{format_short, PrecisionContext};

/// Highest rung every ladder reaches.
pub const LADDER_TOP_BITS: u32 = 512;
/// Cells above `log 2 + THEOREM_MARGIN` must come out positive.
pub const THEOREM_MARGIN: f64 = 1e-6;
/// Positivity on all of (0, ∞) is claimed up to this n.
pub const SMALL_N_CLAIM: u32 = 16;
/// Default relative tolerance for series members of a consensus.
pub const DEFAULT_REL_TOL: f64 = 1e-25;

/// Precision rungs starting at `ctx`, doubling up to `max(512, target)`.
pub fn precision_ladder(ctx: &PrecisionContext) -> Vec<PrecisionContext> {
    let top = LADDER_TOP_BITS.max(ctx.target_bits());
    let mut out = vec![ctx.clone()];
    let mut bits = ctx.target_bits();
    while bits < top {
        bits = (bits * 2).min(top);
        out.push(PrecisionContext::with_guard(bits, ctx.guard_bits()).expect("wider than the base"));
    }
    out
}

/// Absolute tolerance corresponding to `rel_tol` at order n.
pub fn scaled_tol(n: u32, rel_tol: f64) -> f64 {
    let nf = Float::with_val(64, Float::factorial(n)).to_f64();
    rel_tol * nf.max(1.0)
}

// ---------------------------------------------------------------------------
// Grids

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Uniform,
    Geometric,
}

/// `count` points in the half-open interval `(lo, hi]`.
pub fn grid(lo: &Float, hi: &Float, count: usize, spacing: Spacing, prec: u32) -> Result<Vec<Float>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if *lo >= *hi || (spacing == Spacing::Geometric && *lo <= 0) || *lo < 0 {
        return Err(Error::Domain(format!(
            "grid needs 0 <= lo < hi (lo > 0 if geometric), got ({}, {}]",
            format_short(lo, 12),
            format_short(hi, 12)
        )));
    }
    let lo = Float::with_val(prec, lo);
    let hi = Float::with_val(prec, hi);
    let pts = (1..=count)
        .map(|i| {
            if i == count {
                return hi.clone();
            }
            let frac = Float::with_val(prec, i as u64) / count as u64;
            match spacing {
                Spacing::Uniform => Float::with_val(prec, &hi - &lo) * frac + &lo,
                Spacing::Geometric => {
                    let ratio = Float::with_val(prec, &hi / &lo);
                    Float::with_val(prec, ratio.pow(&frac)) * &lo
                }
            }
        })
        .collect();
    Ok(pts)
}

/// 200 geometric points on `(10^-3, log 2]` followed by 200 uniform points
/// on `(log 2, 10]`.
pub fn default_grid(prec: u32) -> Vec<Float> {
    let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
    let lo = Float::with_val(prec, 1e-3);
    let ten = Float::with_val(prec, 10);
    let mut g = grid(&lo, &ln2, 200, Spacing::Geometric, prec).expect("valid interval");
    g.extend(grid(&ln2, &ten, 200, Spacing::Uniform, prec).expect("valid interval"));
    g
}

// ---------------------------------------------------------------------------
// Sign oracles

/// Supplies a signed, bounded value of some function of (n, x). The scans and
/// the frontier search only see this trait, so synthetic functions can be
/// planted in tests.
pub trait SignOracle: Sync {
    fn evaluate(&self, n: u32, x: &Float, ctx: &PrecisionContext) -> Result<EvalResult>;
}

/// Consensus of the rigorous evaluators of `f_n`.
#[derive(Clone, Copy, Debug)]
pub struct ConsensusOracle {
    pub rel_tol: f64,
}

impl Default for ConsensusOracle {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

impl SignOracle for ConsensusOracle {
    fn evaluate(&self, n: u32, x: &Float, ctx: &PrecisionContext) -> Result<EvalResult> {
        Ok(f_consensus(n, x, ctx, scaled_tol(n, self.rel_tol))?.result)
    }
}

impl<F> SignOracle for F
where
    F: Fn(u32, &Float, &PrecisionContext) -> Result<EvalResult> + Sync,
{
    fn evaluate(&self, n: u32, x: &Float, ctx: &PrecisionContext) -> Result<EvalResult> {
        self(n, x, ctx)
    }
}

/// One classified cell. `alarm` carries a cross-method disagreement or an
/// evaluator failure; such cells are reported as indeterminate.
#[derive(Clone, Debug)]
pub struct SignCell {
    pub result: EvalResult,
    pub precision_bits: u32,
    pub alarm: Option<String>,
}

impl SignCell {
    pub fn sign(&self) -> Sign {
        self.result.sign
    }
}

/// Evaluate on each rung of the ladder until the sign is decided.
pub fn classify_cell(oracle: &dyn SignOracle, n: u32, x: &Float, ladder: &[PrecisionContext]) -> SignCell {
    let mut last = None;
    for ctx in ladder {
        match oracle.evaluate(n, x, ctx) {
            Ok(r) => {
                let decided = r.sign != Sign::Indeterminate;
                last = Some(SignCell {
                    result: r,
                    precision_bits: ctx.target_bits(),
                    alarm: None,
                });
                if decided {
                    break;
                }
            }
            Err(e) => {
                let bits = ctx.target_bits();
                let prec = ctx.working_bits();
                let mut r = EvalResult::new(
                    Method::EulerianClosed,
                    n,
                    x,
                    Float::with_val(prec, 0),
                    Float::with_val(prec, f64::INFINITY),
                    0,
                );
                r.sign = Sign::Indeterminate;
                return SignCell {
                    result: r,
                    precision_bits: bits,
                    alarm: Some(e.to_string()),
                };
            }
        }
    }
    last.expect("ladder is never empty")
}

// ---------------------------------------------------------------------------
// Positivity scan

#[derive(Clone, Debug)]
pub struct SignReport {
    pub n_min: u32,
    pub n_max: u32,
    pub x_grid: Vec<Float>,
    /// Row-major: all x for n_min, then all x for n_min + 1, ...
    pub cells: Vec<SignCell>,
    pub base_bits: u32,
    pub max_bits: u32,
    pub rel_tol: f64,
}

impl SignReport {
    pub fn cell(&self, n: u32, i: usize) -> &SignCell {
        &self.cells[(n - self.n_min) as usize * self.x_grid.len() + i]
    }

    /// Cells contradicting a positivity claim, or carrying an alarm: anything
    /// not positive above `log 2 + 10^-6`, and anything negative for n ≤ 16.
    pub fn anomalies(&self) -> Vec<&SignCell> {
        let cut = Float::with_val(64, rug::float::Constant::Log2) + THEOREM_MARGIN;
        self.cells
            .iter()
            .filter(|c| {
                c.alarm.is_some()
                    || (c.result.x > cut && c.sign() != Sign::Positive)
                    || (c.result.n <= SMALL_N_CLAIM && c.sign() == Sign::Negative)
            })
            .collect()
    }

    pub fn count(&self, sign: Sign) -> usize {
        self.cells.iter().filter(|c| c.sign() == sign).count()
    }

    pub fn all_positive(&self) -> bool {
        self.count(Sign::Positive) == self.cells.len()
    }
}

pub fn positivity_scan(n_max: u32, x_grid: &[Float], ctx: &PrecisionContext, rel_tol: f64) -> Result<SignReport> {
    scan_with(&ConsensusOracle { rel_tol }, 0, n_max, x_grid, ctx, rel_tol)
}

pub fn scan_with(
    oracle: &dyn SignOracle,
    n_min: u32,
    n_max: u32,
    x_grid: &[Float],
    ctx: &PrecisionContext,
    rel_tol: f64,
) -> Result<SignReport> {
    if let Some(bad) = x_grid.iter().find(|x| **x <= 0) {
        return Err(Error::Domain(format!("grid point {} is not > 0", format_short(bad, 12))));
    }
    if n_min > n_max {
        return Err(Error::Domain(format!("empty n range {n_min}..={n_max}")));
    }
    let ladder = precision_ladder(ctx);
    let width = x_grid.len();
    let total = (n_max - n_min + 1) as usize * width;
    let cells = (0..total)
        .into_par_iter()
        .map(|k| {
            let n = n_min + (k / width) as u32;
            classify_cell(oracle, n, &x_grid[k % width], &ladder)
        })
        .collect();
    Ok(SignReport {
        n_min,
        n_max,
        x_grid: x_grid.to_vec(),
        cells,
        base_bits: ctx.target_bits(),
        max_bits: ladder.last().map(|c| c.target_bits()).unwrap_or(ctx.target_bits()),
        rel_tol,
    })
}

// ---------------------------------------------------------------------------
// Sign frontier

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrontierStatus {
    Located,
    NoSignChangeFound,
    PrecisionLimited,
}

impl FrontierStatus {
    pub fn name(&self) -> &'static str {
        match self {
            FrontierStatus::Located => "located",
            FrontierStatus::NoSignChangeFound => "no-sign-change-found",
            FrontierStatus::PrecisionLimited => "precision-limited",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrontierReport {
    pub n: u32,
    /// Lower end is negative or indeterminate, upper end positive.
    pub bracket: Option<(EvalResult, EvalResult)>,
    pub status: FrontierStatus,
    /// Non-positive sample cells met while sampling.
    pub witnesses: Vec<EvalResult>,
    pub evaluations: usize,
}

impl FrontierReport {
    pub fn width(&self) -> Option<Float> {
        self.bracket
            .as_ref()
            .map(|(lo, hi)| Float::with_val(hi.x.prec(), &hi.x - &lo.x))
    }

    /// The stored-sign contract, checkable without re-evaluating.
    pub fn bracket_is_valid(&self) -> bool {
        match &self.bracket {
            None => true,
            Some((lo, hi)) => {
                lo.x < hi.x
                    && lo.sign != Sign::Positive
                    && hi.sign == Sign::Positive
                    && lo.sign == crate::feval::classify(&lo.value, &lo.error_bound)
                    && hi.sign == crate::feval::classify(&hi.value, &hi.error_bound)
            }
        }
    }
}

/// Number of samples `sign_frontier` takes across the window before bisecting.
pub const FRONTIER_SAMPLES: usize = 48;

/// Sample the window, then bisect between the highest non-positive sample and
/// its positive neighbour above.
pub fn sign_frontier(
    oracle: &dyn SignOracle,
    n: u32,
    window: (&Float, &Float),
    ctx: &PrecisionContext,
    width_tol: f64,
) -> Result<FrontierReport> {
    frontier_from_samples(oracle, n, window, ctx, width_tol, FRONTIER_SAMPLES)
}

fn frontier_from_samples(
    oracle: &dyn SignOracle,
    n: u32,
    window: (&Float, &Float),
    ctx: &PrecisionContext,
    width_tol: f64,
    samples: usize,
) -> Result<FrontierReport> {
    let (lo, hi) = window;
    if *lo <= 0 {
        return Err(Error::Domain("frontier window must lie in (0, ∞)".into()));
    }
    let ladder = precision_ladder(ctx);
    let prec = ladder.last().expect("non-empty").working_bits();
    let mut xs = vec![Float::with_val(prec, lo)];
    xs.extend(grid(lo, hi, samples, Spacing::Geometric, prec)?);
    let cells: Vec<SignCell> = xs.par_iter().map(|x| classify_cell(oracle, n, x, &ladder)).collect();
    let mut evaluations = cells.len();
    let witnesses: Vec<EvalResult> = cells
        .iter()
        .filter(|c| c.sign() != Sign::Positive)
        .map(|c| c.result.clone())
        .collect();
    if let Some(c) = cells.iter().find(|c| c.alarm.is_some()) {
        return Err(Error::Convergence(format!(
            "frontier sample at x={} failed: {}",
            format_short(&c.result.x, 12),
            c.alarm.as_deref().unwrap_or_default()
        )));
    }
    let Some(top_bad) = cells.iter().rposition(|c| c.sign() != Sign::Positive) else {
        return Ok(FrontierReport {
            n,
            bracket: None,
            status: FrontierStatus::NoSignChangeFound,
            witnesses,
            evaluations,
        });
    };
    if top_bad + 1 == cells.len() {
        // nothing positive above the last bad sample
        let status = if cells[top_bad].sign() == Sign::Indeterminate {
            FrontierStatus::PrecisionLimited
        } else {
            FrontierStatus::NoSignChangeFound
        };
        return Ok(FrontierReport {
            n,
            bracket: None,
            status,
            witnesses,
            evaluations,
        });
    }
    let mut low = cells[top_bad].result.clone();
    let mut high = cells[top_bad + 1].result.clone();
    let status = loop {
        let width = Float::with_val(prec, &high.x - &low.x);
        if width <= width_tol {
            break FrontierStatus::Located;
        }
        let mid = Float::with_val(prec, &high.x + &low.x) / 2u32;
        if mid <= low.x || mid >= high.x {
            break FrontierStatus::PrecisionLimited;
        }
        let cell = classify_cell(oracle, n, &mid, &ladder);
        evaluations += 1;
        if let Some(a) = cell.alarm {
            return Err(Error::Convergence(format!("frontier bisection failed: {a}")));
        }
        match cell.sign() {
            Sign::Positive => high = cell.result,
            Sign::Negative => low = cell.result,
            Sign::Indeterminate => {
                low = cell.result;
                break FrontierStatus::PrecisionLimited;
            }
        }
    };
    Ok(FrontierReport {
        n,
        bracket: Some((low, high)),
        status,
        witnesses,
        evaluations,
    })
}

#[derive(Clone, Debug)]
pub struct HuntReport {
    pub frontiers: Vec<FrontierReport>,
    /// Certified negative cells, each with its margin in the stored result.
    pub negatives: Vec<EvalResult>,
    pub evaluations: usize,
    /// The budget ran out before every n was searched at full density.
    pub exhausted: bool,
}

/// Densify sampling (16, 32, 64, ... points per n) within an evaluation
/// budget; any n with a negative cell gets a frontier bisection.
pub fn hunt_negativity(
    oracle: &dyn SignOracle,
    n_list: &[u32],
    window: (&Float, &Float),
    ctx: &PrecisionContext,
    budget: usize,
) -> Result<HuntReport> {
    let used = AtomicUsize::new(0);
    let mut frontiers = Vec::new();
    let mut negatives = Vec::new();
    let mut exhausted = false;
    let width_tol = Float::with_val(64, window.1 - window.0).to_f64() * 1e-6;
    for &n in n_list {
        let mut samples = 16usize;
        let mut found = None;
        loop {
            if used.load(Ordering::Relaxed) + samples + 1 > budget {
                exhausted = true;
                break;
            }
            let rep = frontier_from_samples(oracle, n, window, ctx, width_tol, samples)?;
            used.fetch_add(rep.evaluations, Ordering::Relaxed);
            let neg: Vec<EvalResult> = rep.witnesses.iter().filter(|w| w.sign == Sign::Negative).cloned().collect();
            if !neg.is_empty() || samples >= 256 {
                negatives.extend(neg);
                found = Some(rep);
                break;
            }
            samples *= 2;
        }
        if let Some(rep) = found {
            frontiers.push(rep);
        }
        if exhausted {
            break;
        }
    }
    Ok(HuntReport {
        frontiers,
        negatives,
        evaluations: used.into_inner(),
        exhausted,
    })
}

// ---------------------------------------------------------------------------
// S_n inequality

#[derive(Clone, Debug)]
pub struct SnRow {
    pub n: u32,
    /// Route (a): `n! + Σ_j (2j+n-1)!/(2j-1)! · B_2j/(2j)!`.
    pub direct: Float,
    pub direct_bound: Float,
    /// Route (b): consensus `f_n(1) + n!/2`.
    pub via_f: Float,
    pub via_f_bound: Float,
    pub half_factorial: Float,
    /// `S_n - n!/2` from route (a), minus its bound.
    pub margin: Float,
    pub agree: bool,
}

/// Route (a) with exact rational partial sums. With `ζ(2j) < 2`,
/// `|B_2j|/(2j)! < 4/(2π)^{2j}`, and the majorant's term ratio
/// `(2j+n)(2j+n+1)/((2j)(2j+1)(2π)^2)` decreases in j, so the tail after the
/// cut is bounded by a geometric series.
fn sn_direct(n: u32, prec: u32, tol: f64) -> Result<(Float, Float)> {
    let nn = n as u64;
    let four_pi2 = Float::with_val(prec, rug::float::Constant::Pi).square() * 4u32;
    let mut sum = Rational::from(factorial(n));
    let mut j = 1u64;
    loop {
        let coef = crate::arith::rising(2 * j, n);
        let b = bernoulli(2 * j as usize);
        let fact = factorial(2 * j as u32);
        sum += Rational::from((coef, fact)) * b.as_rational();
        // majorant of the next term and its ratio
        let jn = j + 1;
        let ratio = Float::with_val(prec, (2 * jn + nn) * (2 * jn + nn + 1)) / ((2 * jn) * (2 * jn + 1)) / &four_pi2;
        if ratio < 1 {
            let next = Float::with_val(prec, crate::arith::rising(2 * jn, n)) * 4u32
                / Float::with_val(prec, four_pi2.clone().pow(jn as u32));
            let one = Float::with_val(prec, 1);
            let tail = next / (one - &ratio);
            if tail < tol {
                let value = Float::with_val(prec, &sum);
                let bound = tail + Float::with_val(prec, value.abs_ref()) >> (prec - 2);
                return Ok((value, bound));
            }
        }
        j += 1;
        if 2 * j as usize > EXACT_BERNOULLI_MAX {
            return Err(Error::Truncation {
                terms: j as usize,
                tol,
                best_bound: "n/a".into(),
            });
        }
    }
}

pub fn sn_check(n_max: u32, ctx: &PrecisionContext, rel_tol: f64) -> Result<Vec<SnRow>> {
    if n_max == 0 {
        return Err(Error::Domain("sn_check needs n_max >= 1".into()));
    }
    let prec = ctx.working_bits();
    let one = Float::with_val(prec, 1);
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let tol = scaled_tol(n, rel_tol);
            let (direct, direct_bound) = sn_direct(n, prec, tol)?;
            let half = Float::with_val(prec, factorial(n)) / 2u32;
            let cons = f_consensus(n, &one, ctx, tol)?.result;
            let via_f = Float::with_val(prec, &cons.value + &half);
            let via_f_bound = cons.error_bound.clone();
            let diff = Float::with_val(prec, &direct - &via_f).abs();
            let agree = diff <= Float::with_val(prec, &direct_bound + &via_f_bound);
            let margin = Float::with_val(prec, &direct - &half) - &direct_bound;
            Ok(SnRow {
                n,
                direct,
                direct_bound,
                via_f,
                via_f_bound,
                half_factorial: half,
                margin,
                agree,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Root test

/// `r_j = ((2j+n-1)!/(2j-1)! · |B_2j|/(2j)!)^{1/(2j)}` for j = 1..=j_max;
/// exact Bernoulli numbers up to index 512, the zeta formula beyond.
pub fn root_test_sequence(n: u32, j_max: usize, ctx: &PrecisionContext) -> Result<Vec<Float>> {
    if j_max == 0 {
        return Err(Error::Domain("root test needs j_max >= 1".into()));
    }
    let prec = ctx.working_bits();
    (1..=j_max)
        .into_par_iter()
        .map(|j| {
            let coef = crate::arith::rising(2 * j as u64, n);
            let scaled = if 2 * j <= EXACT_BERNOULLI_MAX {
                let b = bernoulli(2 * j).abs();
                Float::with_val(prec, b.as_rational() / Rational::from(factorial(2 * j as u32)))
            } else {
                let b = bernoulli_float(2 * j, ctx)?.value.abs();
                b / Float::with_val(prec, Float::factorial(2 * j as u32))
            };
            let base = Float::with_val(prec, coef) * scaled;
            let e = Float::with_val(prec, 2 * j as u64).recip();
            Ok(base.pow(e))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Discriminators

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    AsPrinted,
    GaussianCorrected,
    Inconclusive,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::AsPrinted => "as-printed",
            Verdict::GaussianCorrected => "gaussian-corrected",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn weight(&self) -> Option<KernelWeight> {
        match self {
            Verdict::AsPrinted => Some(KernelWeight::AsPrinted),
            Verdict::GaussianCorrected => Some(KernelWeight::GaussianCorrected),
            Verdict::Inconclusive => None,
        }
    }
}

/// One (n, y) or (n, x) cell. Deviations are relative to the stated scale.
#[derive(Clone, Debug)]
pub struct DiscriminatorCell {
    pub n: u32,
    pub arg: Float,
    pub measured: Option<Float>,
    pub as_printed: Float,
    pub corrected: Float,
    pub dev_as_printed: Option<f64>,
    pub dev_corrected: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct DiscriminatorReport {
    pub cells: Vec<DiscriminatorCell>,
    pub tol: f64,
}

impl DiscriminatorReport {
    /// The common verdict of all decisive cells, if there is at least one and
    /// they agree.
    pub fn unanimous(&self) -> Option<Verdict> {
        let mut it = self.cells.iter().map(|c| c.verdict).filter(|v| *v != Verdict::Inconclusive);
        let first = it.next()?;
        it.all(|v| v == first).then_some(first)
    }
}

/// Decide between two candidates: one within `tol`, the other not, and the
/// candidates themselves at least `100·tol` apart.
fn decide(measured: &Float, a: &Float, g: &Float, scale: &Float, tol: f64) -> (f64, f64, Verdict) {
    let prec = measured.prec();
    let rel = |v: &Float| (Float::with_val(prec, measured - v).abs() / scale).to_f64();
    let (da, dg) = (rel(a), rel(g));
    let sep = (Float::with_val(prec, a - g).abs() / scale).to_f64();
    let verdict = if sep <= 100.0 * tol {
        Verdict::Inconclusive
    } else if dg <= tol && da > tol {
        Verdict::GaussianCorrected
    } else if da <= tol && dg > tol {
        Verdict::AsPrinted
    } else {
        Verdict::Inconclusive
    };
    (da, dg, verdict)
}

/// `∫_0^∞ e^{-t²} H_n(t)² cos(√2 y t) dt` by Gauss–Hermite, doubling the order
/// until successive values agree to `tol·scale`.
fn feldheim_left(n: u32, y: &Float, ctx: &PrecisionContext, scale: &Float, tol: f64) -> Result<Float> {
    let prec = ctx.working_bits();
    let omega = Float::with_val(prec, y * Float::with_val(prec, 2u32).sqrt());
    let integrate = |m: usize| -> Result<Float> {
        let rule = gauss_hermite_rule(m, ctx)?;
        let s = rule.apply(|t| {
            let h = hermite_at(n as usize, t, prec);
            let c = Float::with_val(prec, &omega * t).cos();
            h.square() * c
        });
        Ok(s / 2u32)
    };
    let mut m = 4 * (n as usize + 8);
    let mut prev = integrate(m)?;
    let target = Float::with_val(prec, scale * (tol / 100.0));
    while m < crate::feval::HERMITE_ORDER_CAP {
        m *= 2;
        let cur = integrate(m)?;
        if Float::with_val(prec, &cur - &prev).abs() < target {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!("Feldheim quadrature n={n} did not settle")))
}

/// Left side of the Feldheim integral against `√π 2^{n-1} n! L_n(y²)` with and
/// without `e^{-y²/2}`. Deviations are scaled by `√π 2^{n-1} n!`.
pub fn feldheim_discriminator(
    n_list: &[u32],
    y_list: &[Float],
    ctx: &PrecisionContext,
    tol: f64,
) -> Result<DiscriminatorReport> {
    if let Some(y) = y_list.iter().find(|y| **y <= 0) {
        return Err(Error::Domain(format!("Feldheim y must be > 0, got {}", format_short(y, 12))));
    }
    let prec = ctx.working_bits();
    let pairs: Vec<(u32, &Float)> = n_list.iter().flat_map(|&n| y_list.iter().map(move |y| (n, y))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(n, y)| {
            let sqrt_pi = Float::with_val(prec, rug::float::Constant::Pi).sqrt();
            let scale = Float::with_val(prec, factorial(n)) * (sqrt_pi << n) / 2u32;
            let y2 = Float::with_val(prec, y.square_ref());
            let a = Float::with_val(prec, &scale * laguerre_at(n as usize, &y2, prec));
            let g = Float::with_val(prec, &a * Float::with_val(prec, -y2 / 2u32).exp());
            match feldheim_left(n, y, ctx, &scale, tol) {
                Ok(left) => {
                    let (da, dg, verdict) = decide(&left, &a, &g, &scale, tol);
                    DiscriminatorCell {
                        n,
                        arg: y.clone(),
                        measured: Some(left),
                        as_printed: a,
                        corrected: g,
                        dev_as_printed: Some(da),
                        dev_corrected: Some(dg),
                        verdict,
                    }
                }
                Err(_) => DiscriminatorCell {
                    n,
                    arg: y.clone(),
                    measured: None,
                    as_printed: a,
                    corrected: g,
                    dev_as_printed: None,
                    dev_corrected: None,
                    verdict: Verdict::Inconclusive,
                },
            }
        })
        .collect();
    Ok(DiscriminatorReport { cells, tol })
}

/// `f_hermite_integral` under both kernel weights against the closed form.
/// Here `measured` is the closed form, the two candidates are the integrals,
/// and deviations are relative to `|f_n(x)|`.
pub fn integral_rep_discriminator(
    n_list: &[u32],
    x_list: &[Float],
    ctx: &PrecisionContext,
    tol: f64,
) -> Result<DiscriminatorReport> {
    if let Some(x) = x_list.iter().find(|x| **x <= 0) {
        return Err(Error::Domain(format!("x must be > 0, got {}", format_short(x, 12))));
    }
    let pairs: Vec<(u32, &Float)> = n_list.iter().flat_map(|&n| x_list.iter().map(move |x| (n, x))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(n, x)| -> Result<DiscriminatorCell> {
            let oracle = f_eulerian_closed(n, x, ctx)?;
            let scale = Float::with_val(oracle.value.prec(), oracle.value.abs_ref());
            let quad_tol = tol * scale.to_f64() / 100.0;
            let a = f_hermite_integral(n, x, ctx, 0, KernelWeight::AsPrinted, quad_tol);
            let g = f_hermite_integral(n, x, ctx, 0, KernelWeight::GaussianCorrected, quad_tol);
            Ok(match (a, g) {
                (Ok(a), Ok(g)) => {
                    let (da, dg, verdict) = decide(&oracle.value, &a.value, &g.value, &scale, tol);
                    DiscriminatorCell {
                        n,
                        arg: x.clone(),
                        measured: Some(oracle.value),
                        as_printed: a.value,
                        corrected: g.value,
                        dev_as_printed: Some(da),
                        dev_corrected: Some(dg),
                        verdict,
                    }
                }
                (a, g) => {
                    let nan = || Float::with_val(64, rug::float::Special::Nan);
                    DiscriminatorCell {
                        n,
                        arg: x.clone(),
                        measured: Some(oracle.value),
                        as_printed: a.map(|r| r.value).unwrap_or_else(|_| nan()),
                        corrected: g.map(|r| r.value).unwrap_or_else(|_| nan()),
                        dev_as_printed: None,
                        dev_corrected: None,
                        verdict: Verdict::Inconclusive,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscriminatorReport { cells, tol })
}

/// Validated kernel weight: both discriminators unanimous and in agreement.
pub fn validated_weight(feldheim: &DiscriminatorReport, integral: &DiscriminatorReport) -> Option<KernelWeight> {
    let a = feldheim.unanimous()?;
    let b = integral.unanimous()?;
    (a == b).then(|| a.weight()).flatten()
}

/// Values used by the default Feldheim run: `{1/2, 1, √2, 2}`.
pub fn default_feldheim_ys(prec: u32) -> Vec<Float> {
    vec![
        Float::with_val(prec, 0.5),
        Float::with_val(prec, 1),
        Float::with_val(prec, 2u32).sqrt(),
        Float::with_val(prec, 2),
    ]
}
