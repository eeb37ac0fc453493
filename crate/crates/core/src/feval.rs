//! Independent evaluators of `f_n(x) = d^n/dx^n ( x^n / (1 - e^{-x}) )`.
//!
//! | method            | representation                                      | bound      |
//! |-------------------|-----------------------------------------------------|------------|
//! | `BernoulliSeries` | `n!/2 + Σ_{j≥2} (j+n-1)!/(j-1)! · B_j/j! · x^{j-1}` | rigorous   |
//! | `LaguerreSeries`  | `n! Σ_{j≥0} L_n(jx) e^{-jx}`                        | rigorous   |
//! | `EulerianClosed`  | Leibniz rule with exact Eulerian coefficients       | rounding   |
//! | `HermiteIntegral` | Gauss–Hermite quadrature of `H_n(t)^2 K(x,t)`       | heuristic  |
//!
//! `EulerianClosed` has no truncation and is the reference the others are
//! checked against.

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::arith::{eulerian_row, factorial, scaled_bernoulli_table};
use crate::error::{ConsistencyAlarm, Error, Result};
use crate::orthopoly::{gauss_hermite_rule, hermite_at, laguerre_at};
use crate::precision::{format_short, PrecisionContext};

/// Largest x accepted by the Bernoulli power series (radius of convergence is 2π).
pub const BERNOULLI_SERIES_MAX_X: f64 = 5.0;
/// Highest Bernoulli index the power series may consume.
pub const BERNOULLI_TERM_CAP: usize = 4096;
/// Hard cap on Laguerre series terms.
pub const LAGUERRE_TERM_CAP: usize = 200_000;
/// Consensus only runs the Laguerre series when it needs at most this many terms.
pub const LAGUERRE_CONSENSUS_TERMS: usize = 6_000;
/// Largest Gauss–Hermite order tried by the integral representation.
pub const HERMITE_ORDER_CAP: usize = 1 << 13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BernoulliSeries,
    LaguerreSeries,
    EulerianClosed,
    HermiteIntegral,
    /// `d^n/dx^n ( x^{n+α} / (1 - e^{-x}) )`, closed form.
    AlphaClosed,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::BernoulliSeries => "bernoulli-series",
            Method::LaguerreSeries => "laguerre-series",
            Method::EulerianClosed => "eulerian-closed",
            Method::HermiteIntegral => "hermite-integral",
            Method::AlphaClosed => "alpha-closed",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        [
            Method::BernoulliSeries,
            Method::LaguerreSeries,
            Method::EulerianClosed,
            Method::HermiteIntegral,
            Method::AlphaClosed,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Indeterminate,
}

impl Sign {
    pub fn name(&self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Indeterminate => "indeterminate",
        }
    }

    pub fn from_name(s: &str) -> Option<Sign> {
        match s {
            "positive" => Some(Sign::Positive),
            "negative" => Some(Sign::Negative),
            "indeterminate" => Some(Sign::Indeterminate),
            _ => None,
        }
    }
}

/// Positive iff `value - bound > 0`, Negative iff `value + bound < 0`.
pub fn classify(value: &Float, bound: &Float) -> Sign {
    let prec = value.prec().max(bound.prec());
    if Float::with_val(prec, value - bound) > 0 {
        Sign::Positive
    } else if Float::with_val(prec, value + bound) < 0 {
        Sign::Negative
    } else {
        Sign::Indeterminate
    }
}

#[derive(Clone, Debug)]
pub struct EvalResult {
    pub method: Method,
    pub n: u32,
    pub x: Float,
    pub value: Float,
    pub error_bound: Float,
    pub sign: Sign,
    pub terms_used: usize,
    /// The bound is an estimate rather than a proof (quadrature).
    pub heuristic: bool,
}

impl EvalResult {
    pub fn new(
        method: Method,
        n: u32,
        x: &Float,
        value: Float,
        error_bound: Float,
        terms_used: usize,
    ) -> Self {
        let sign = classify(&value, &error_bound);
        Self {
            method,
            n,
            x: x.clone(),
            value,
            error_bound,
            sign,
            terms_used,
            heuristic: false,
        }
    }

    fn heuristic(mut self) -> Self {
        self.heuristic = true;
        self
    }

    /// `|value - other.value| <= error_bound + other.error_bound`.
    pub fn agrees_with(&self, other: &EvalResult) -> bool {
        let prec = self.value.prec().max(other.value.prec());
        let diff = Float::with_val(prec, &self.value - &other.value).abs();
        diff <= Float::with_val(prec, &self.error_bound + &other.error_bound)
    }
}

fn check_positive(x: &Float, what: &str) -> Result<()> {
    if *x > 0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be > 0, got {}", format_short(x, 12))))
    }
}

fn round_up_64(bits: u32) -> u32 {
    bits.div_ceil(64) * 64
}

// ---------------------------------------------------------------------------
// Bernoulli power series

/// Rigorous upper bound for ζ(s), s ≥ 2: `1 + 2^-s + 2^{1-s}/(s-1)`.
fn zeta_upper(s: usize) -> Float {
    let p = 64;
    let two_s = Float::with_val(p, 1) >> s as u32;
    let tail = Float::with_val(p, &two_s * 2u32) / (s as u64 - 1);
    Float::with_val(p, 1) + two_s + tail
}

/// `f_n(x)` from the power series of `x^n/(1 - e^{-x})` about 0, valid for
/// `0 < x ≤ 5`.
///
/// Only even Bernoulli indices contribute past j = 1. With
/// `|B_2k|/(2k)! = 2 ζ(2k)/(2π)^{2k}` the remaining terms are dominated by a
/// geometric series once the ratio `(j+n)(j+n+1)/(j(j+1)) · (x/2π)^2` drops
/// below 1; that ratio only decreases with j, so the bound is certified from
/// the first index where it holds.
pub fn f_bernoulli_series(n: u32, x: &Float, ctx: &PrecisionContext, tol: f64) -> Result<EvalResult> {
    check_positive(x, "x")?;
    if *x > BERNOULLI_SERIES_MAX_X {
        return Err(Error::Domain(format!(
            "Bernoulli series is only validated for x <= {BERNOULLI_SERIES_MAX_X}; use the Laguerre series or the closed form for x = {}",
            format_short(x, 12)
        )));
    }
    let prec = round_up_64(ctx.working_bits() + 2 * n + 64);
    let mut table = scaled_bernoulli_table(256, prec);
    let xs = Float::with_val(prec, x);
    let nn = n as u64;

    // j = 0 and j = 1 terms
    let mut sum = if n == 0 {
        Float::with_val(prec, xs.recip_ref()) + 0.5f64
    } else {
        Float::with_val(prec, Float::factorial(n)) / 2u32
    };
    let mut abs_sum = Float::with_val(prec, sum.abs_ref());

    // P(j) = j(j+1)...(j+n-1), starting at j = 2
    let mut p = Float::with_val(prec, crate::arith::rising(2, n));
    let mut xpow = xs.clone(); // x^{j-1}
    let x2 = Float::with_val(prec, xs.square_ref());
    let lo = Float::with_val(64, x);
    let two_pi = Float::with_val(64, rug::float::Constant::Pi) * 2u32;
    let ratio_base = Float::with_val(64, &lo / &two_pi).square();
    let tol_trunc = Float::with_val(64, tol) / 2u32;

    let mut j = 2usize;
    let mut best = Float::with_val(64, f64::INFINITY);
    loop {
        if j >= table.len() {
            table = scaled_bernoulli_table((2 * j).min(BERNOULLI_TERM_CAP + 2), prec);
        }
        let term = Float::with_val(prec, &table[j] * &p) * &xpow;
        abs_sum += Float::with_val(prec, term.abs_ref());
        sum += &term;

        // bound on Σ_{j' ≥ j+2}
        let next = j + 2;
        let jn = next as u64;
        let ratio = Float::with_val(64, (jn + nn) * (jn + nn + 1)) / (jn * (jn + 1)) * &ratio_base;
        if ratio < 1 {
            let mut head = Float::with_val(64, crate::arith::rising(jn, n));
            head *= zeta_upper(next) * 2u32;
            head *= Float::with_val(64, (&lo).pow(next as u32 - 1));
            head /= Float::with_val(64, (&two_pi).pow(next as u32));
            let tail = head / (Float::with_val(64, 1) - &ratio) * 1.0001f64;
            if tail < best {
                best = tail.clone();
            }
            if tail <= tol_trunc {
                let rounding = Float::with_val(64, &abs_sum) * (4 * (j as u64 + nn) + 32) >> prec;
                let bound = tail + rounding;
                if bound > tol {
                    return Err(Error::Truncation {
                        terms: j / 2 + 1,
                        tol,
                        best_bound: format_short(&bound, 6),
                    });
                }
                return Ok(EvalResult::new(Method::BernoulliSeries, n, x, sum, bound, j / 2 + 1));
            }
        }
        if next > BERNOULLI_TERM_CAP {
            return Err(Error::Truncation {
                terms: j / 2 + 1,
                tol,
                best_bound: format_short(&best, 6),
            });
        }
        // advance j -> j+2
        let jj = j as u64;
        p *= (jj + nn) * (jj + nn + 1);
        p /= jj * (jj + 1);
        xpow *= &x2;
        j = next;
    }
}

// ---------------------------------------------------------------------------
// Laguerre series

/// Terms the Laguerre series needs for an absolute tolerance `tol`.
pub fn laguerre_terms_needed(n: u32, x: f64, tol: f64) -> usize {
    if x <= 0.0 {
        return usize::MAX;
    }
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let denom = -(-x / 2.0).exp_m1();
    let need = 2.0 * (ln_fact + std::f64::consts::LN_2 - tol.ln() - denom.ln()) / x;
    need.max(1.0).ceil() as usize
}

/// `n! Σ_{j=0}^{J} L_n(jx) e^{-jx}` with the tail bounded through
/// `|L_n(y) e^{-y/2}| ≤ 1`: `n! e^{-(J+1)x/2} / (1 - e^{-x/2})`.
pub fn f_laguerre_series(n: u32, x: &Float, ctx: &PrecisionContext, tol: f64) -> Result<EvalResult> {
    check_positive(x, "x")?;
    let prec = ctx.working_bits() + n + 32;
    let xs = Float::with_val(prec, x);
    let w = Float::with_val(prec, (-xs.clone()).exp());
    let lo = Float::with_val(64, x);
    let half = Float::with_val(64, &lo / 2u32);
    let geo = Float::with_val(64, -(-half.clone()).exp_m1()); // 1 - e^{-x/2}
    let fact = Float::with_val(prec, Float::factorial(n));
    let fact_lo = Float::with_val(64, &fact);
    let tol_trunc = Float::with_val(64, tol) / 2u32;

    let mut sum = Float::with_val(prec, 1); // j = 0
    let mut mag = Float::with_val(prec, 1);
    let mut wj = Float::with_val(prec, 1);
    let mut j = 0usize;
    loop {
        // tail over j' > j
        let tail = (-Float::with_val(64, &half * (j as u64 + 1))).exp() * &fact_lo / &geo * 1.0001f64;
        if tail <= tol_trunc {
            let rounding = Float::with_val(64, &mag) * &fact_lo * (4 * n as u64 + 16) >> (prec - 4);
            let bound = tail + rounding;
            if bound > tol {
                return Err(Error::Truncation {
                    terms: j + 1,
                    tol,
                    best_bound: format_short(&bound, 6),
                });
            }
            return Ok(EvalResult::new(Method::LaguerreSeries, n, x, sum * &fact, bound, j + 1));
        }
        if j + 1 >= LAGUERRE_TERM_CAP {
            return Err(Error::Truncation {
                terms: j + 1,
                tol,
                best_bound: format_short(&tail, 6),
            });
        }
        j += 1;
        wj *= &w;
        let y = Float::with_val(prec, &xs * j as u64);
        let l = laguerre_at(n as usize, &y, prec);
        // L_n(-y) = Σ C(n,k) y^k/k! bounds the size of every intermediate
        let l_abs = laguerre_at(n as usize, &Float::with_val(prec, -&y), prec);
        sum += Float::with_val(prec, &l * &wj);
        mag += l_abs * &wj;
    }
}

// ---------------------------------------------------------------------------
// Eulerian closed form

/// `d^k/dx^k (1 - e^{-x})^{-1}` for k = 0..=n, together with `|·|` of each.
///
/// `Σ_j (-j)^k e^{-jx} = (-1)^k w A_k(w) / (1-w)^{k+1}`, `w = e^{-x}`.
fn geometric_derivatives(n: u32, x: &Float, prec: u32) -> Vec<Float> {
    let xs = Float::with_val(prec, x);
    let w = Float::with_val(prec, (-xs.clone()).exp());
    let one_minus_w = Float::with_val(prec, -(-xs).exp_m1());
    let u = Float::with_val(prec, one_minus_w.recip_ref());
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(u.clone());
    let mut upow = Float::with_val(prec, &u * &u);
    for k in 1..=n as usize {
        let a = eulerian_row(k).eval(&w);
        let mut d = a * &w * &upow;
        if k % 2 == 1 {
            d = -d;
        }
        out.push(d);
        upow *= &u;
    }
    out
}

/// Leibniz sum `Σ_k c_k x^{k+α} D_k` with `c_k` exact integers or reals.
fn leibniz_sum(coeffs: &[Float], x: &Float, alpha: Option<&Float>, prec: u32) -> (Float, Float) {
    let n = coeffs.len() as u32 - 1;
    let d = geometric_derivatives(n, x, prec);
    let xs = Float::with_val(prec, x);
    let mut xp = match alpha {
        Some(a) => Float::with_val(prec, (&xs).pow(Float::with_val(prec, a))),
        None => Float::with_val(prec, 1),
    };
    let mut sum = Float::with_val(prec, 0);
    let mut abs_sum = Float::with_val(prec, 0);
    for (k, c) in coeffs.iter().enumerate() {
        let term = Float::with_val(prec, c * &xp) * &d[k];
        abs_sum += Float::with_val(prec, term.abs_ref());
        sum += term;
        xp *= &xs;
    }
    (sum, abs_sum)
}

fn eulerian_coeffs(n: u32, prec: u32) -> Vec<Float> {
    // C(n,k) n!/k!
    let nf = factorial(n);
    (0..=n)
        .map(|k| {
            let c = Integer::from(Integer::binomial_u(n, k)) * Integer::from(&nf / factorial(k));
            Float::with_val(prec, c)
        })
        .collect()
}

fn alpha_coeffs(n: u32, alpha: &Float, prec: u32) -> Vec<Float> {
    // C(n,k) Γ(n+α+1)/Γ(k+α+1) = C(n,k) Π_{i=k+1}^{n} (i+α)
    let a = Float::with_val(prec, alpha);
    (0..=n)
        .map(|k| {
            let mut g = Float::with_val(prec, Integer::from(Integer::binomial_u(n, k)));
            for i in k + 1..=n {
                g *= Float::with_val(prec, &a + i);
            }
            g
        })
        .collect()
}

/// Evaluate at two guard levels, escalate until they agree to target bits.
fn self_verified(
    n: u32,
    ctx: &PrecisionContext,
    eval: impl Fn(u32) -> (Float, Float),
) -> (Float, Float, u32) {
    let target = ctx.target_bits();
    let mut guard = 2 * n + ctx.guard_bits();
    let mut prev = eval(target + guard);
    for _ in 0..6 {
        guard *= 2;
        let prec = target + guard;
        let cur = eval(prec);
        let diff = Float::with_val(prec, &cur.0 - &prev.0).abs();
        let scale = Float::with_val(prec, cur.0.abs_ref()) >> target;
        if diff <= scale {
            let rounding = Float::with_val(prec, &cur.1) * (8 * n as u64 + 32) >> prec;
            return (cur.0, diff + rounding, prec);
        }
        prev = cur;
    }
    let prec = target + guard;
    let rounding = Float::with_val(prec, &prev.1) * (8 * n as u64 + 32) >> prec;
    (prev.0, rounding, prec)
}

/// Exact-coefficient closed form: with `w = e^{-x}`,
/// `f_n(x) = Σ_k C(n,k) (n!/k!) x^k (-1)^k w A_k(w)/(1-w)^{k+1}`
/// (k = 0 term `1/(1-w)`).
///
/// Computed at `target + 2n + guard` bits and again with doubled guard bits;
/// the bound is their difference plus a rounding allowance.
pub fn f_eulerian_closed(n: u32, x: &Float, ctx: &PrecisionContext) -> Result<EvalResult> {
    check_positive(x, "x")?;
    let (value, bound, prec) = self_verified(n, ctx, |prec| {
        let c = eulerian_coeffs(n, prec);
        leibniz_sum(&c, x, None, prec)
    });
    let mut r = EvalResult::new(Method::EulerianClosed, n, x, value, bound, n as usize + 1);
    r.x.set_prec(prec.max(r.x.prec()));
    Ok(r)
}

/// `d^n/dx^n ( x^{n+α} / (1 - e^{-x}) )` for α > 0, using
/// `(x^{n+α})^{(n-k)} = Γ(n+α+1)/Γ(k+α+1) x^{k+α}`.
pub fn f_alpha_closed(n: u32, alpha: &Float, x: &Float, ctx: &PrecisionContext) -> Result<EvalResult> {
    check_positive(alpha, "alpha")?;
    check_positive(x, "x")?;
    let (value, bound, _) = self_verified(n, ctx, |prec| {
        let c = alpha_coeffs(n, alpha, prec);
        leibniz_sum(&c, x, Some(alpha), prec)
    });
    Ok(EvalResult::new(Method::AlphaClosed, n, x, value, bound, n as usize + 1))
}

// ---------------------------------------------------------------------------
// Kernel and integral representation

/// Weight of the j-th cosine in `K(x,t) = Σ_j e^{-jxs} cos(√(2jx) t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelWeight {
    /// `e^{-jx}` (s = 1).
    AsPrinted,
    /// `e^{-jx/2}` (s = 1/2), the weight carried by the classical Feldheim
    /// normalisation `... = √π 2^{n-1} n! e^{-y²/2} L_n(y²)`.
    GaussianCorrected,
}

impl KernelWeight {
    pub fn name(&self) -> &'static str {
        match self {
            KernelWeight::AsPrinted => "as-printed",
            KernelWeight::GaussianCorrected => "gaussian-corrected",
        }
    }

    pub fn from_name(s: &str) -> Option<KernelWeight> {
        match s {
            "as-printed" => Some(KernelWeight::AsPrinted),
            "gaussian-corrected" => Some(KernelWeight::GaussianCorrected),
            _ => None,
        }
    }

    fn rate(&self, x: &Float) -> Float {
        match self {
            KernelWeight::AsPrinted => x.clone(),
            KernelWeight::GaussianCorrected => Float::with_val(x.prec(), x / 2u32),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KernelValue {
    pub x: Float,
    pub t: Float,
    pub value: Float,
    pub tail_bound: Float,
    pub weight: KernelWeight,
    pub terms: usize,
}

/// Truncated `K(x, ·)` with precomputed weights and frequencies.
struct KernelSeries {
    weights: Vec<Float>,
    freqs: Vec<Float>,
    tail_bound: Float,
}

impl KernelSeries {
    fn new(x: &Float, weight: KernelWeight, tol: f64, prec: u32) -> Result<Self> {
        check_positive(x, "x")?;
        let xs = Float::with_val(prec, x);
        let rate = weight.rate(&xs);
        let rate_lo = Float::with_val(64, &rate);
        let geo = Float::with_val(64, -(-rate_lo.clone()).exp_m1());
        let q = Float::with_val(prec, (-rate).exp());
        let mut weights = vec![Float::with_val(prec, 1)];
        let mut freqs = vec![Float::with_val(prec, 0)];
        let mut j = 0u64;
        loop {
            let tail = (-Float::with_val(64, &rate_lo * (j + 1))).exp() / &geo * 1.0001f64;
            if tail <= tol {
                return Ok(Self {
                    weights,
                    freqs,
                    tail_bound: tail,
                });
            }
            if j as usize >= LAGUERRE_TERM_CAP {
                return Err(Error::Truncation {
                    terms: j as usize + 1,
                    tol,
                    best_bound: format_short(&tail, 6),
                });
            }
            j += 1;
            let wj = Float::with_val(prec, weights.last().unwrap() * &q);
            weights.push(wj);
            freqs.push(Float::with_val(prec, &xs * (2 * j)).sqrt());
        }
    }

    fn eval(&self, t: &Float) -> Float {
        let prec = self.weights[0].prec();
        let mut acc = Float::with_val(prec, 0);
        for (w, b) in self.weights.iter().zip(&self.freqs) {
            acc += Float::with_val(prec, b * t).cos() * w;
        }
        acc
    }
}

/// `K(x,t) = Σ_j e^{-jxs} cos(√(2jx) t)` with geometric tail `Σ_{j>J} e^{-jxs}`.
pub fn kernel_k(
    x: &Float,
    t: &Float,
    ctx: &PrecisionContext,
    tol: f64,
    weight: KernelWeight,
) -> Result<KernelValue> {
    let prec = ctx.working_bits();
    let series = KernelSeries::new(x, weight, tol, prec)?;
    let value = series.eval(&Float::with_val(prec, t));
    Ok(KernelValue {
        x: x.clone(),
        t: t.clone(),
        value,
        tail_bound: series.tail_bound,
        weight,
        terms: series.weights.len(),
    })
}

/// `g(x) = 1 - 1/(e^x - 1)`, the lower bound of the as-printed kernel.
pub fn lower_bound_g(x: &Float) -> Float {
    let em1 = Float::with_val(x.prec(), x.exp_m1_ref());
    Float::with_val(x.prec(), 1) - em1.recip()
}

/// `f_n(x) ≈ (1/(√π 2^{n-1})) ∫_0^∞ e^{-t^2} H_n(t)^2 K(x,t) dt`, by
/// Gauss–Hermite quadrature over ℝ halved by evenness.
///
/// Order starts at `start_order` (0 selects `4(n+8)`) and doubles until two
/// successive values differ by less than `tol`; that difference is reported
/// as a heuristic bound.
pub fn f_hermite_integral(
    n: u32,
    x: &Float,
    ctx: &PrecisionContext,
    start_order: usize,
    weight: KernelWeight,
    tol: f64,
) -> Result<EvalResult> {
    check_positive(x, "x")?;
    let prec = ctx.working_bits();
    let norm = {
        let sqrt_pi = Float::with_val(prec, ctx.pi().sqrt());
        // √π 2^{n-1}
        let mut v = sqrt_pi << n;
        v >>= 1;
        v
    };
    let kernel_tol = tol / (8.0 * 2f64.powi(n as i32) * (1..=n).map(f64::from).product::<f64>().max(1.0));
    let kernel = KernelSeries::new(x, weight, kernel_tol.max(f64::MIN_POSITIVE), prec)?;
    let integrate = |m: usize| -> Result<Float> {
        let rule = gauss_hermite_rule(m, ctx)?;
        let mut acc = Float::with_val(prec, 0);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            if t.is_sign_negative() && !t.is_zero() {
                continue;
            }
            let h = hermite_at(n as usize, t, prec);
            let mut v = Float::with_val(prec, h.square_ref()) * w * kernel.eval(t);
            if t.is_zero() {
                v /= 2u32;
            }
            acc += v;
        }
        Ok(acc / &norm)
    };
    let mut m = if start_order == 0 { 4 * (n as usize + 8) } else { start_order };
    let mut prev = integrate(m)?;
    loop {
        if 2 * m > HERMITE_ORDER_CAP {
            return Err(Error::Convergence(format!(
                "Gauss-Hermite integral for n={n}, x={} did not settle to {tol:e} by order {m}",
                format_short(x, 10)
            )));
        }
        m *= 2;
        let cur = integrate(m)?;
        let diff = Float::with_val(prec, &cur - &prev).abs();
        if diff < tol {
            let bound = diff + &kernel.tail_bound * Float::with_val(64, kernel_tol.recip() * tol);
            return Ok(EvalResult::new(Method::HermiteIntegral, n, x, cur, bound, m).heuristic());
        }
        prev = cur;
    }
}

// ---------------------------------------------------------------------------
// Consensus

#[derive(Clone, Debug)]
pub struct Consensus {
    /// The closed-form value with the combined bound.
    pub result: EvalResult,
    pub members: Vec<EvalResult>,
}

/// Run the closed form plus every rigorous method whose domain covers (n, x),
/// cross-check them pairwise, and classify the sign from the combined bound.
pub fn f_consensus(n: u32, x: &Float, ctx: &PrecisionContext, tol: f64) -> Result<Consensus> {
    check_positive(x, "x")?;
    let closed = f_eulerian_closed(n, x, ctx)?;
    let mut members = vec![closed.clone()];
    if *x <= BERNOULLI_SERIES_MAX_X {
        if let Ok(r) = f_bernoulli_series(n, x, ctx, tol) {
            members.push(r);
        }
    }
    if laguerre_terms_needed(n, x.to_f64(), tol) <= LAGUERRE_CONSENSUS_TERMS {
        if let Ok(r) = f_laguerre_series(n, x, ctx, tol) {
            members.push(r);
        }
    }

    let prec = closed.value.prec();
    let mut max_disc = Float::with_val(prec, 0);
    let mut bounds = Float::with_val(prec, 0);
    for (i, a) in members.iter().enumerate() {
        bounds += &a.error_bound;
        for b in &members[i + 1..] {
            if !a.agrees_with(b) {
                return Err(Error::Consistency(Box::new(ConsistencyAlarm {
                    context: format!(
                        "{} and {} disagree beyond combined bounds at n={n}, x={}",
                        a.method.name(),
                        b.method.name(),
                        format_short(x, 20)
                    ),
                    members,
                })));
            }
            let d = Float::with_val(prec, &a.value - &b.value).abs();
            if d > max_disc {
                max_disc = d;
            }
        }
    }
    let result = EvalResult::new(
        Method::EulerianClosed,
        n,
        x,
        closed.value.clone(),
        max_disc + bounds,
        members.iter().map(|m| m.terms_used).sum(),
    );
    Ok(Consensus { result, members })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn fx(v: f64) -> Float {
        Float::with_val(192, v)
    }

    fn close(v: &Float, expect: f64, tol: f64) -> bool {
        (v.to_f64() - expect).abs() <= tol
    }

    // u - x e^{-x} u^2 with u = 1/(1 - e^{-x}): hand derivative of x/(1 - e^{-x})
    fn f1_symbolic(x: f64) -> f64 {
        let u = 1.0 / (1.0 - (-x).exp());
        u - x * (-x).exp() * u * u
    }

    #[test]
    fn classify_branches() {
        let b = fx(0.5);
        assert_eq!(classify(&fx(1.0), &b), Sign::Positive);
        assert_eq!(classify(&fx(-1.0), &b), Sign::Negative);
        assert_eq!(classify(&fx(0.25), &b), Sign::Indeterminate);
        assert_eq!(classify(&fx(0.5), &b), Sign::Indeterminate);
        assert_eq!(classify(&fx(0.0), &fx(0.0)), Sign::Indeterminate);
    }

    #[test]
    fn eulerian_closed_examples() {
        let c = ctx();
        let f0 = f_eulerian_closed(0, &fx(1.0), &c).unwrap();
        assert!(close(&f0.value, 1.0 / (1.0 - (-1f64).exp()), 1e-15));
        let f1 = f_eulerian_closed(1, &fx(1.0), &c).unwrap();
        assert!(close(&f1.value, f1_symbolic(1.0), 1e-14));
        assert!(close(&f1.value, 0.661303, 1e-6));
        let ln2 = c.ln2();
        let f1 = f_eulerian_closed(1, &ln2, &c).unwrap();
        // 2 - 2 log 2
        let expect = Float::with_val(c.working_bits(), 2) - Float::with_val(c.working_bits(), &ln2 * 2u32);
        assert!(Float::with_val(c.working_bits(), &f1.value - expect).abs() < c.target_ulp());
        assert_eq!(f1.sign, Sign::Positive);
        assert!(f1.error_bound < c.target_ulp());
    }

    #[test]
    fn domain_errors() {
        let c = ctx();
        assert!(matches!(f_eulerian_closed(1, &fx(0.0), &c), Err(Error::Domain(_))));
        assert!(matches!(f_laguerre_series(1, &fx(-1.0), &c, 1e-20), Err(Error::Domain(_))));
        assert!(matches!(f_bernoulli_series(1, &fx(5.5), &c, 1e-20), Err(Error::Domain(_))));
        assert!(matches!(f_alpha_closed(1, &fx(0.0), &fx(1.0), &c), Err(Error::Domain(_))));
        assert!(matches!(f_alpha_closed(1, &fx(-1.0), &fx(1.0), &c), Err(Error::Domain(_))));
    }

    #[test]
    fn bernoulli_series_examples() {
        let c = ctx();
        let r = f_bernoulli_series(1, &fx(1.0), &c, 1e-25).unwrap();
        assert!(close(&r.value, f1_symbolic(1.0), 1e-14));
        assert!(r.error_bound <= 1e-25);
        // near zero the constant term n!/2 dominates
        let r = f_bernoulli_series(1, &fx(1e-9), &c, 1e-25).unwrap();
        assert!(close(&r.value, 0.5, 1e-9));
        let a = f_bernoulli_series(2, &fx(1.0), &c, 1e-25).unwrap();
        let b = f_eulerian_closed(2, &fx(1.0), &c).unwrap();
        assert!(a.agrees_with(&b));
    }

    #[test]
    fn bernoulli_series_zero_order() {
        let c = ctx();
        let r = f_bernoulli_series(0, &fx(1.0), &c, 1e-25).unwrap();
        assert!(close(&r.value, 1.581976706869326, 1e-14));
    }

    #[test]
    fn bernoulli_series_truncation_error() {
        let c = ctx();
        // tolerance far below what the working precision can support
        match f_bernoulli_series(3, &fx(0.5), &c, 1e-300) {
            Err(Error::Truncation { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn laguerre_series_examples() {
        let c = ctx();
        let r = f_laguerre_series(0, &fx(1.0), &c, 1e-25).unwrap();
        assert!(close(&r.value, 1.0 / (1.0 - (-1f64).exp()), 1e-15));
        let r = f_laguerre_series(1, &fx(1.0), &c, 1e-25).unwrap();
        assert!(close(&r.value, 0.661303112661534, 1e-14));
        let a = f_laguerre_series(5, &fx(2.0), &c, 1e-25).unwrap();
        let b = f_eulerian_closed(5, &fx(2.0), &c).unwrap();
        assert!(a.agrees_with(&b), "{a:?} vs {b:?}");
    }

    #[test]
    fn alpha_closed_examples() {
        let c = ctx();
        let r = f_alpha_closed(0, &fx(1.0), &fx(1.0), &c).unwrap();
        assert!(close(&r.value, 1.0 / (1.0 - (-1f64).exp()), 1e-15));
        // d/dx (x^2 u) = 2xu - x^2 e^{-x} u^2 at x = 1
        let u = 1.0 / (1.0 - (-1f64).exp());
        let expect = 2.0 * u - (-1f64).exp() * u * u;
        let r = f_alpha_closed(1, &fx(1.0), &fx(1.0), &c).unwrap();
        assert!(close(&r.value, expect, 1e-14), "{}", r.value);
        assert!(close(&r.value, 2.243280, 1e-6));
        let tiny = f_alpha_closed(1, &fx(1e-8), &fx(1.0), &c).unwrap();
        let base = f_eulerian_closed(1, &fx(1.0), &c).unwrap();
        assert!((tiny.value.to_f64() - base.value.to_f64()).abs() < 1e-6);
    }

    #[test]
    fn kernel_examples() {
        let c = ctx();
        let k = kernel_k(&fx(1.0), &fx(0.0), &c, 1e-30, KernelWeight::AsPrinted).unwrap();
        assert!(close(&k.value, 1.0 / (1.0 - (-1f64).exp()), 1e-15));
        assert!(k.tail_bound <= 1e-30);
        let k = kernel_k(&c.ln2(), &fx(0.0), &c, 1e-30, KernelWeight::AsPrinted).unwrap();
        assert!(close(&k.value, 2.0, 1e-15));
        let k = kernel_k(&fx(1.0), &fx(5.0), &c, 1e-30, KernelWeight::AsPrinted).unwrap();
        let envelope = 1.0 / (1f64.exp() - 1.0);
        assert!((k.value.to_f64() - 1.0).abs() <= envelope + 1e-15);
    }

    #[test]
    fn kernel_tail_shrinks_with_tolerance() {
        let c = ctx();
        let a = kernel_k(&fx(0.8), &fx(1.0), &c, 1e-10, KernelWeight::GaussianCorrected).unwrap();
        let b = kernel_k(&fx(0.8), &fx(1.0), &c, 1e-20, KernelWeight::GaussianCorrected).unwrap();
        assert!(b.terms > a.terms);
        assert!(b.tail_bound < a.tail_bound);
    }

    #[test]
    fn lower_bound_examples() {
        let c = ctx();
        let g = lower_bound_g(&c.ln2());
        assert!(Float::with_val(64, g.abs_ref()) < c.target_ulp());
        assert!(close(&lower_bound_g(&fx(1.0)), 1.0 - 1.0 / (1f64.exp() - 1.0), 1e-15));
        assert!(close(&lower_bound_g(&fx(60.0)), 1.0, 1e-20));
    }

    #[test]
    fn hermite_integral_matches_closed_form() {
        let c = PrecisionContext::new(64).unwrap();
        for (n, x) in [(0u32, 1.0), (1, 1.0), (3, 2.0)] {
            let h = f_hermite_integral(n, &fx(x), &c, 0, KernelWeight::GaussianCorrected, 1e-12).unwrap();
            let e = f_eulerian_closed(n, &fx(x), &c).unwrap();
            let rel = ((h.value.to_f64() - e.value.to_f64()) / e.value.to_f64()).abs();
            assert!(rel < 1e-8, "n={n} x={x} rel={rel}");
            assert!(h.heuristic);
        }
    }

    #[test]
    fn consensus_examples() {
        let c = ctx();
        let r = f_consensus(1, &fx(1.0), &c, 1e-25).unwrap();
        assert_eq!(r.result.sign, Sign::Positive);
        assert_eq!(r.members.len(), 3);
        assert!(close(&r.result.value, 0.661303, 1e-6));
        let r = f_consensus(4, &fx(0.75), &c, 1e-25).unwrap();
        assert_eq!(r.result.sign, Sign::Positive);
        let r = f_consensus(0, &fx(1.0), &c, 1e-25).unwrap();
        assert!(close(&r.result.value, 1.581977, 1e-6));
    }

    #[test]
    fn method_names_roundtrip() {
        for m in [
            Method::BernoulliSeries,
            Method::LaguerreSeries,
            Method::EulerianClosed,
            Method::HermiteIntegral,
            Method::AlphaClosed,
        ] {
            assert_eq!(Method::from_name(m.name()), Some(m));
        }
    }
}
