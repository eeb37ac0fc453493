//! Laguerre and Hermite polynomials by three-term recurrence, and Gauss rule
//! construction (Hermite for `e^{-t^2}` integrals over ℝ, Legendre for the
//! finite panels of the Laplace-transform quadrature).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::Float;

use crate::error::{Error, Result};
use crate::precision::PrecisionContext;

/// L_n(y) from `(k+1) L_{k+1} = (2k+1-y) L_k - k L_{k-1}`.
pub fn laguerre_eval(n: usize, y: &Float, ctx: &PrecisionContext) -> Float {
    laguerre_at(n, y, ctx.working_bits())
}

pub(crate) fn laguerre_at(n: usize, y: &Float, prec: u32) -> Float {
    let mut prev = Float::with_val(prec, 1);
    if n == 0 {
        return prev;
    }
    let mut cur = Float::with_val(prec, 1 - Float::with_val(prec, y));
    for k in 1..n {
        let coef = Float::with_val(prec, (2 * k + 1) as u64) - y;
        let next = (coef * &cur - Float::with_val(prec, &prev * k as u64)) / (k as u64 + 1);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `max |L_n(y)| e^{-y/2}` over `n ≤ n_max` and the given y ≥ 0; the Szegő
/// inequality says this never exceeds 1.
pub fn szego_max(n_max: usize, ys: &[Float], ctx: &PrecisionContext) -> Float {
    let prec = ctx.working_bits();
    let mut worst = Float::with_val(prec, 0);
    for y in ys {
        let damp = Float::with_val(prec, -Float::with_val(prec, y / 2u32)).exp();
        let mut prev = Float::with_val(prec, 1);
        let mut cur = Float::with_val(prec, 1 - Float::with_val(prec, y));
        worst.max_mut(&damp);
        for k in 1..=n_max {
            if k > 1 {
                let coef = Float::with_val(prec, (2 * k - 1) as u64) - y;
                let next = (coef * &cur - Float::with_val(prec, &prev * (k - 1) as u64)) / k as u64;
                prev = std::mem::replace(&mut cur, next);
            }
            let v = Float::with_val(prec, cur.abs_ref()) * &damp;
            worst.max_mut(&v);
        }
    }
    worst
}

/// H_n(t) (physicists') from `H_{k+1} = 2t H_k - 2k H_{k-1}`.
pub fn hermite_eval(n: usize, t: &Float, ctx: &PrecisionContext) -> Float {
    hermite_at(n, t, ctx.working_bits())
}

pub(crate) fn hermite_at(n: usize, t: &Float, prec: u32) -> Float {
    let mut prev = Float::with_val(prec, 1);
    if n == 0 {
        return prev;
    }
    let two_t = Float::with_val(prec, t * 2u32);
    let mut cur = two_t.clone();
    for k in 1..n {
        let next = Float::with_val(prec, &two_t * &cur) - Float::with_val(prec, &prev * (2 * k) as u64);
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Nodes (ascending) and positive weights of an m-point Gauss rule.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

impl QuadratureRule {
    /// Σ w_i f(t_i).
    pub fn apply(&self, mut f: impl FnMut(&Float) -> Float) -> Float {
        let prec = self.nodes.first().map_or(64, Float::prec);
        let mut acc = Float::with_val(prec, 0);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(t) * w;
        }
        acc
    }

    pub fn precision(&self) -> u32 {
        self.nodes.first().map_or(0, Float::prec)
    }
}

type RuleCache = Mutex<HashMap<(usize, u32), Arc<QuadratureRule>>>;
static HERMITE_RULES: OnceLock<RuleCache> = OnceLock::new();
static LEGENDRE_RULES: OnceLock<RuleCache> = OnceLock::new();

const NEWTON_CAP: usize = 200;

/// m-point Gauss–Hermite rule for `∫_ℝ e^{-t^2} f(t) dt`, exact for
/// polynomials of degree ≤ 2m-1.
///
/// Newton iteration on the orthonormal Hermite recurrence, started from the
/// usual asymptotic guesses extrapolated from the previously found roots;
/// weights from `w = 2 / p_m'(t)^2`.
pub fn gauss_hermite_rule(m: usize, ctx: &PrecisionContext) -> Result<Arc<QuadratureRule>> {
    if m == 0 {
        return Err(Error::Domain("quadrature order must be >= 1".into()));
    }
    let prec = ctx.working_bits();
    let cache = HERMITE_RULES.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&(m, prec)) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(build_hermite(m, prec)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert((m, prec), Arc::clone(&rule));
    Ok(rule)
}

struct OrthonormalHermite {
    prec: u32,
    p0: Float,
    a: Vec<Float>, // sqrt(2/j)
    b: Vec<Float>, // sqrt((j-1)/j)
    deriv: Float,  // sqrt(2m)
}

impl OrthonormalHermite {
    fn new(m: usize, prec: u32) -> Self {
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        let p0 = Float::with_val(prec, pi.sqrt().sqrt().recip());
        let mut a = vec![Float::new(prec); m + 1];
        let mut b = vec![Float::new(prec); m + 1];
        for j in 1..=m {
            a[j] = Float::with_val(prec, Float::with_val(prec, 2) / j as u64).sqrt();
            b[j] = Float::with_val(prec, Float::with_val(prec, j as u64 - 1) / j as u64).sqrt();
        }
        let deriv = Float::with_val(prec, 2 * m as u64).sqrt();
        Self {
            prec,
            p0,
            a,
            b,
            deriv,
        }
    }

    /// (p_m(z), p_m'(z)).
    fn eval(&self, z: &Float) -> (Float, Float) {
        let m = self.a.len() - 1;
        let mut p1 = self.p0.clone();
        let mut p2 = Float::with_val(self.prec, 0);
        for j in 1..=m {
            let p3 = std::mem::replace(&mut p2, p1);
            p1 = Float::with_val(self.prec, z * &self.a[j]) * &p2 - Float::with_val(self.prec, &self.b[j] * &p3);
        }
        let dp = Float::with_val(self.prec, &self.deriv * &p2);
        (p1, dp)
    }
}

fn newton_root(
    poly: &OrthonormalHermite,
    mut z: Float,
    stop_bits: u32,
    index: usize,
) -> Result<(Float, Float)> {
    let prec = poly.prec;
    z.set_prec(prec);
    for _ in 0..NEWTON_CAP {
        let (p, dp) = poly.eval(&z);
        let dz = p / &dp;
        z -= &dz;
        let scale = Float::with_val(prec, z.abs_ref()).max(&Float::with_val(prec, 1));
        if Float::with_val(prec, dz.abs_ref()) <= scale >> stop_bits {
            let (_, dp) = poly.eval(&z);
            return Ok((z, dp));
        }
    }
    Err(Error::Convergence(format!(
        "Gauss-Hermite Newton iteration for root {index} of order {} did not converge in {NEWTON_CAP} steps at {prec} bits",
        poly.a.len() - 1
    )))
}

fn build_hermite(m: usize, prec: u32) -> Result<QuadratureRule> {
    let coarse = OrthonormalHermite::new(m, 64);
    let fine = OrthonormalHermite::new(m, prec);
    let half = m.div_ceil(2);
    let mut pos: Vec<Float> = Vec::with_capacity(half); // descending roots
    let mut dps: Vec<Float> = Vec::with_capacity(half);
    let mf = m as f64;
    let mut z = 0.0f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-0.16667),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * pos[0].to_f64(),
            3 => 1.91 * z - 0.91 * pos[1].to_f64(),
            _ => 2.0 * z - pos[i - 2].to_f64(),
        };
        if m % 2 == 1 && i == half - 1 {
            // central root of an odd-order rule
            z = 0.0;
        }
        let (zc, _) = newton_root(&coarse, Float::with_val(64, z), 50, i)?;
        let (zf, dp) = newton_root(&fine, zc, prec.saturating_sub(6), i)?;
        z = zf.to_f64();
        if let Some(prev) = pos.last() {
            if zf >= *prev {
                return Err(Error::Convergence(format!(
                    "Gauss-Hermite order {m}: root {i} ({z}) did not separate from root {} ({})",
                    i - 1,
                    prev.to_f64()
                )));
            }
        }
        pos.push(zf);
        dps.push(dp);
    }
    if m % 2 == 1 {
        pos[half - 1] = Float::with_val(prec, 0);
        let (_, dp) = fine.eval(&pos[half - 1]);
        dps[half - 1] = dp;
    }

    let mut nodes = vec![Float::new(prec); m];
    let mut weights = vec![Float::new(prec); m];
    for (i, (z, dp)) in pos.into_iter().zip(dps).enumerate() {
        let w = Float::with_val(prec, 2) / Float::with_val(prec, dp.square_ref());
        nodes[m - 1 - i] = z.clone();
        nodes[i] = -z;
        weights[m - 1 - i] = w.clone();
        weights[i] = w;
    }
    Ok(QuadratureRule {
        order: m,
        nodes,
        weights,
    })
}

/// m-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre_rule(m: usize, prec: u32) -> Result<Arc<QuadratureRule>> {
    if m == 0 {
        return Err(Error::Domain("quadrature order must be >= 1".into()));
    }
    let cache = LEGENDRE_RULES.get_or_init(Default::default);
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&(m, prec)) {
        return Ok(Arc::clone(rule));
    }
    let mut nodes = vec![Float::new(prec); m];
    let mut weights = vec![Float::new(prec); m];
    let legendre = |z: &Float| -> (Float, Float) {
        let mut p1 = Float::with_val(prec, 1);
        let mut p2 = Float::with_val(prec, 0);
        for j in 1..=m as u64 {
            let p3 = std::mem::replace(&mut p2, p1);
            p1 = (Float::with_val(prec, z * &p2) * (2 * j - 1) - Float::with_val(prec, &p3 * (j - 1))) / j;
        }
        // P_m' = m (z P_m - P_{m-1}) / (z^2 - 1)
        let zz = Float::with_val(prec, z.square_ref()) - 1u32;
        let dp = (Float::with_val(prec, z * &p1) - &p2) * m as u64 / zz;
        (p1, dp)
    };
    let pi = std::f64::consts::PI;
    for i in 0..m.div_ceil(2) {
        let mut z = Float::with_val(prec, (pi * (i as f64 + 0.75) / (m as f64 + 0.5)).cos());
        let mut converged = false;
        for _ in 0..NEWTON_CAP {
            let (p, dp) = legendre(&z);
            let dz = p / dp;
            z -= &dz;
            if Float::with_val(prec, dz.abs_ref()) <= Float::with_val(prec, 1) >> (prec - 6) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence(format!(
                "Gauss-Legendre root {i} of order {m} did not converge"
            )));
        }
        if m % 2 == 1 && i == m / 2 {
            z = Float::with_val(prec, 0);
        }
        let (_, dp) = legendre(&z);
        let w = Float::with_val(prec, 2)
            / ((Float::with_val(prec, 1) - Float::with_val(prec, z.square_ref())) * Float::with_val(prec, dp.square_ref()));
        nodes[m - 1 - i] = z.clone();
        nodes[i] = -z;
        weights[m - 1 - i] = w.clone();
        weights[i] = w;
    }
    let rule = Arc::new(QuadratureRule {
        order: m,
        nodes,
        weights,
    });
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert((m, prec), Arc::clone(&rule));
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn f(v: f64) -> Float {
        Float::with_val(192, v)
    }

    #[test]
    fn szego_sweep() {
        let c = ctx();
        let ys: Vec<Float> = (0..=400).map(|i| f(i as f64 * 0.25)).collect();
        let m = szego_max(60, &ys, &c);
        assert!(m <= 1);
        // attained at y = 0
        assert_eq!(m, 1);
        // the sweep's recurrence matches laguerre_eval
        let v = Float::with_val(192, laguerre_eval(7, &f(3.5), &c).abs()) * f(-1.75).exp();
        assert!(szego_max(7, &[f(3.5)], &c) >= v);
    }

    #[test]
    fn laguerre_examples() {
        let c = ctx();
        assert_eq!(laguerre_eval(0, &f(7.3), &c), 1);
        assert_eq!(laguerre_eval(1, &f(2.0), &c), -1);
        // explicit L_2(y) = 1 - 2y + y^2/2
        for y in [0.0, 0.5, 2.0, 3.75, 11.0] {
            let explicit = 1.0 - 2.0 * y + y * y / 2.0;
            assert!((laguerre_eval(2, &f(y), &c).to_f64() - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_examples() {
        let c = ctx();
        assert_eq!(hermite_eval(0, &f(1.5), &c), 1);
        assert_eq!(hermite_eval(1, &f(1.5), &c), 3);
        assert_eq!(hermite_eval(2, &f(1.0), &c), 2);
        // explicit H_3(t) = 8t^3 - 12t
        for t in [-2.0, -0.3, 0.0, 1.7] {
            let explicit = 8.0 * t * t * t - 12.0 * t;
            assert!((hermite_eval(3, &f(t), &c).to_f64() - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_hermite_small_orders() {
        let c = ctx();
        let sqrt_pi = c.pi().sqrt();
        let r1 = gauss_hermite_rule(1, &c).unwrap();
        assert!(r1.nodes[0].is_zero());
        assert!(Float::with_val(c.working_bits(), &r1.weights[0] - &sqrt_pi).abs() < c.target_ulp());

        let r2 = gauss_hermite_rule(2, &c).unwrap();
        let node = Float::with_val(c.working_bits(), 0.5).sqrt();
        let half_sqrt_pi = Float::with_val(c.working_bits(), &sqrt_pi / 2u32);
        for i in 0..2 {
            let expect = if i == 0 { -node.clone() } else { node.clone() };
            assert!(Float::with_val(c.working_bits(), &r2.nodes[i] - &expect).abs() < c.target_ulp());
            assert!(Float::with_val(c.working_bits(), &r2.weights[i] - &half_sqrt_pi).abs() < c.target_ulp());
        }
    }

    #[test]
    fn gauss_hermite_fourth_moment() {
        let c = ctx();
        let r = gauss_hermite_rule(8, &c).unwrap();
        let q = r.apply(|t| Float::with_val(c.working_bits(), t.pow(4)));
        let expect = c.pi().sqrt() * 3u32 / 4u32;
        let rel = Float::with_val(c.working_bits(), &q - &expect).abs() / expect;
        assert!(rel < c.target_ulp());
    }

    #[test]
    fn gauss_hermite_rule_shape() {
        let c = ctx();
        for m in [3usize, 10, 33, 64] {
            let r = gauss_hermite_rule(m, &c).unwrap();
            assert_eq!(r.nodes.len(), m);
            for i in 1..m {
                assert!(r.nodes[i] > r.nodes[i - 1]);
            }
            for i in 0..m {
                assert_eq!(r.nodes[i], -r.nodes[m - 1 - i].clone());
                assert!(r.weights[i] > 0);
                assert_eq!(r.weights[i], r.weights[m - 1 - i]);
            }
            let total = r.weights.iter().fold(Float::with_val(c.working_bits(), 0), |a, w| a + w);
            let rel = (total - c.pi().sqrt()).abs();
            assert!(rel < c.target_ulp(), "m={m}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let prec = 200;
        let r = gauss_legendre_rule(12, prec).unwrap();
        // ∫_{-1}^{1} t^22 dt = 2/23
        let q = r.apply(|t| Float::with_val(prec, t.pow(22)));
        let expect = Float::with_val(prec, 2) / 23u32;
        assert!(Float::with_val(prec, q - expect).abs() < 1e-55);
        let total = r.weights.iter().fold(Float::with_val(prec, 0), |a, w| a + w);
        assert!(Float::with_val(prec, total - 2u32).abs() < 1e-55);
    }

    #[test]
    fn zero_order_rejected() {
        assert!(gauss_hermite_rule(0, &ctx()).is_err());
        assert!(gauss_legendre_rule(0, 64).is_err());
    }
}
