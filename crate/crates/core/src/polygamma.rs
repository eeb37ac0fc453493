//! Polygamma functions and the Laplace relation linking `G_m^{(m)}` to `f_m`.
//!
//! `G_m(x) = -x^m ψ^{(m)}(x)` here. This is the form under which
//! `G_m^{(m)}(x) = ∫_0^∞ e^{-xt} t^m f_m(t) dt` holds; with plain `ψ` in place
//! of `ψ^{(m)}` the two sides already differ at m = 1.

use rug::ops::Pow;
use rug::{Float, Integer};

use crate::arith::{factorial, scaled_bernoulli_table};
use crate::error::{Error, Result};
use crate::feval::f_eulerian_closed;
use crate::orthopoly::gauss_legendre_rule;
use crate::precision::{format_short, PrecisionContext};

/// Gauss–Legendre order used on every Laplace-quadrature panel.
pub const PANEL_ORDER: usize = 32;
const PANEL_DOUBLING_CAP: usize = 1 << 12;

/// A value with an absolute error bound.
#[derive(Clone, Debug)]
pub struct Bounded {
    pub value: Float,
    pub error_bound: Float,
}

#[derive(Clone, Debug)]
pub struct PolygammaValue {
    pub order: u32,
    pub x: Float,
    pub value: Float,
    pub error_bound: Float,
}

/// ψ^{(order)}(x) for x > 0.
///
/// Shifts x upward with `ψ^{(n)}(x+1) = ψ^{(n)}(x) + (-1)^n n!/x^{n+1}` until
/// it clears `max(10, order, ~prec·ln2/2π)`, then sums the Bernoulli
/// asymptotic expansion. The expansion's remainder is bounded by the first
/// omitted term.
pub fn polygamma_eval(order: u32, x: &Float, ctx: &PrecisionContext) -> Result<PolygammaValue> {
    if *x <= 0 {
        return Err(Error::Domain(format!(
            "polygamma needs x > 0, got {}",
            format_short(x, 12)
        )));
    }
    let prec = ctx.working_bits() + 32;
    let n = order as u64;
    let mut threshold = 10f64
        .max(order as f64)
        .max(prec as f64 * std::f64::consts::LN_2 / (2.0 * std::f64::consts::PI) + order as f64 / 2.0);
    loop {
        if let Some(v) = polygamma_shifted(order, x, threshold, prec) {
            return Ok(v);
        }
        threshold *= 2.0;
        if threshold > 1e7 {
            return Err(Error::Convergence(format!(
                "polygamma asymptotic series for order {n} did not reach {prec} bits"
            )));
        }
    }
}

fn polygamma_shifted(order: u32, x: &Float, threshold: f64, prec: u32) -> Option<PolygammaValue> {
    let n = order as u64;
    let xs = Float::with_val(prec, x);
    let shift = (threshold - xs.to_f64()).ceil().max(0.0) as u64;
    let z = Float::with_val(prec, &xs + shift);
    let eps = Float::with_val(prec, 1) >> prec;

    // asymptotic expansion at z
    let zinv = Float::with_val(prec, z.recip_ref());
    let zinv2 = Float::with_val(prec, zinv.square_ref());
    let mut zpow = Float::with_val(prec, (&zinv).pow(order + 2)); // z^{-(2k+n)} at k = 1
    let mut asym = if order == 0 {
        Float::with_val(prec, z.ln_ref()) - Float::with_val(prec, &zinv / 2u32)
    } else {
        // (n-1)!/z^n + n!/(2 z^{n+1})
        let a = Float::with_val(prec, Float::factorial(order - 1)) * Float::with_val(prec, (&zinv).pow(order));
        let b = Float::with_val(prec, Float::factorial(order)) * Float::with_val(prec, (&zinv).pow(order + 1)) / 2u32;
        a + b
    };
    let table = scaled_bernoulli_table(512, prec);
    // (2k+n-1)! at k = 1
    let mut fact = Float::with_val(prec, Float::factorial(order + 1));
    let mut last = Float::with_val(prec, f64::INFINITY);
    let mut k = 1u64;
    let omitted = loop {
        if 2 * k as usize >= table.len() {
            return None;
        }
        let mut term = Float::with_val(prec, &table[2 * k as usize] * &fact) * &zpow;
        if order == 0 {
            // B_2k/(2k) z^{-2k}, with the sign flipped in the digamma expansion
            term = -term;
        }
        let mag = Float::with_val(prec, term.abs_ref());
        if mag >= last {
            return None;
        }
        if mag <= Float::with_val(prec, &asym * &eps).abs() {
            break mag;
        }
        asym += &term;
        last = mag;
        fact *= (2 * k + n) * (2 * k + n + 1);
        zpow *= &zinv2;
        k += 1;
    };
    if order >= 1 && order % 2 == 0 {
        // (-1)^{n+1}
        asym = -asym;
    }

    // undo the shift: ψ^{(n)}(x) = ψ^{(n)}(x+N) - (-1)^n n! Σ (x+i)^{-(n+1)}
    let mut head = Float::with_val(prec, 0);
    for i in 0..shift {
        let xi = Float::with_val(prec, &xs + i);
        head += Float::with_val(prec, (&xi).pow(-(order as i32 + 1)));
    }
    head *= Float::with_val(prec, Float::factorial(order));
    if order % 2 == 1 {
        head = -head;
    }
    let value = asym - &head;
    let mag = Float::with_val(prec, head.abs_ref()) + Float::with_val(prec, value.abs_ref());
    let rounding = mag * (shift + 4 * k + 16) >> (prec - 2);
    Some(PolygammaValue {
        order,
        x: x.clone(),
        value,
        error_bound: omitted + rounding,
    })
}

/// `G_m^{(m)}(x) = -Σ_{k=0}^{m} C(m,k) (m!/k!) x^k ψ^{(m+k)}(x)`.
pub fn gmm_leibniz(m: u32, x: &Float, ctx: &PrecisionContext) -> Result<Bounded> {
    if m == 0 {
        return Err(Error::Domain("gmm needs m >= 1".into()));
    }
    let inner = ctx.widened(2 * m + 16);
    let prec = inner.working_bits();
    let xs = Float::with_val(prec, x);
    let mf = factorial(m);
    let mut value = Float::with_val(prec, 0);
    let mut bound = Float::with_val(prec, 0);
    let mut xp = Float::with_val(prec, 1);
    for k in 0..=m {
        let c = Integer::from(Integer::binomial_u(m, k)) * Integer::from(&mf / factorial(k));
        let coef = Float::with_val(prec, c) * &xp;
        let psi = polygamma_eval(m + k, &xs, &inner)?;
        value -= Float::with_val(prec, &coef * &psi.value);
        bound += Float::with_val(prec, coef.abs_ref()) * &psi.error_bound;
        bound += Float::with_val(prec, &coef * &psi.value).abs() >> (prec - 4);
        xp *= &xs;
    }
    Ok(Bounded {
        value,
        error_bound: bound,
    })
}

/// Upper incomplete gamma `Γ(p+1, z) = p! e^{-z} Σ_{k≤p} z^k/k!` for integer p.
fn upper_gamma_int(p: u32, z: &Float) -> Float {
    let prec = z.prec();
    let mut term = Float::with_val(prec, 1);
    let mut sum = Float::with_val(prec, 1);
    for k in 1..=p {
        term *= z;
        term /= k;
        sum += &term;
    }
    sum * Float::with_val(prec, Float::factorial(p)) * Float::with_val(prec, (-z.clone()).exp())
}

/// `∫_0^∞ t^p e^{-xt} g(t) dt` by panel Gauss–Legendre on `[0, T]` plus the
/// analytic tail `C Γ(p+1, xT)/x^{p+1}`, where `|g| ≤ C` on `[40, ∞)`.
///
/// `T` starts at `max(40/x, 40)` and doubles until the tail is under `tol/4`;
/// panels double until two successive sums differ by less than `tol/2`.
pub fn laplace_quadrature(
    x: &Float,
    power: u32,
    envelope: &Float,
    prec: u32,
    tol: f64,
    g: impl Fn(&Float) -> Result<Float>,
) -> Result<Bounded> {
    if *x <= 0 {
        return Err(Error::Domain("Laplace transform needs x > 0".into()));
    }
    let xs = Float::with_val(prec, x);
    let xf = xs.to_f64();
    let mut cutoff = (40.0 / xf).max(40.0);
    let tail = loop {
        let t = Float::with_val(prec, cutoff);
        let z = Float::with_val(prec, &xs * &t);
        let tail = upper_gamma_int(power, &z) * envelope / Float::with_val(prec, (&xs).pow(power + 1));
        if tail <= tol / 4.0 {
            break tail;
        }
        cutoff *= 2.0;
        if cutoff > 1e9 {
            return Err(Error::Truncation {
                terms: 0,
                tol,
                best_bound: format_short(&tail, 6),
            });
        }
    };
    let rule = gauss_legendre_rule(PANEL_ORDER, prec)?;
    let upper = Float::with_val(prec, cutoff);
    let integrate = |panels: usize| -> Result<Float> {
        let width = Float::with_val(prec, &upper / panels as u64);
        let half = Float::with_val(prec, &width / 2u32);
        let mut acc = Float::with_val(prec, 0);
        for p in 0..panels {
            let mid = Float::with_val(prec, &width * p as u64) + &half;
            let mut panel = Float::with_val(prec, 0);
            for (s, w) in rule.nodes.iter().zip(&rule.weights) {
                let t = Float::with_val(prec, &half * s) + &mid;
                let et = Float::with_val(prec, -Float::with_val(prec, &xs * &t)).exp();
                let h = Float::with_val(prec, (&t).pow(power)) * et * g(&t)?;
                panel += h * w;
            }
            acc += panel * &half;
        }
        Ok(acc)
    };
    let mut panels = 8usize;
    let mut prev = integrate(panels)?;
    loop {
        panels *= 2;
        let cur = integrate(panels)?;
        let diff = Float::with_val(prec, &cur - &prev).abs();
        if diff < tol / 2.0 {
            return Ok(Bounded {
                value: cur,
                error_bound: diff + tail,
            });
        }
        if panels >= PANEL_DOUBLING_CAP {
            return Err(Error::Convergence(format!(
                "Laplace quadrature did not settle to {tol:e} with {panels} panels"
            )));
        }
        prev = cur;
    }
}

/// `∫_0^∞ e^{-xt} t^m f_m(t) dt` with `f_m` from the closed form.
///
/// For t ≥ 40, `0 < f_m(t) ≤ m! (1 + Σ_{j≥1} e^{-jt/2}) < 2 m!`.
pub fn gmm_laplace(m: u32, x: &Float, ctx: &PrecisionContext, tol: f64) -> Result<Bounded> {
    if m == 0 {
        return Err(Error::Domain("gmm needs m >= 1".into()));
    }
    let prec = ctx.working_bits();
    let envelope = Float::with_val(prec, Float::factorial(m)) * 2u32;
    laplace_quadrature(x, m, &envelope, prec, tol, |t| {
        Ok(f_eulerian_closed(m, t, ctx)?.value)
    })
}

/// `(-1)^{n+1} ψ^{(n)}(x)` as `∫_0^∞ t^n e^{-xt} / (1 - e^{-t}) dt`, n ≥ 1.
pub fn polygamma_laplace(n: u32, x: &Float, ctx: &PrecisionContext, tol: f64) -> Result<Bounded> {
    if n == 0 {
        return Err(Error::Domain("the Laplace form needs n >= 1".into()));
    }
    let prec = ctx.working_bits();
    let envelope = Float::with_val(prec, 2);
    laplace_quadrature(x, n, &envelope, prec, tol, |t| {
        let om = Float::with_val(prec, -Float::with_val(prec, -t.clone()).exp_m1());
        Ok(om.recip())
    })
}
