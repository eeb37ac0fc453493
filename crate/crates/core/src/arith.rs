//! Exact combinatorial arithmetic: rationals, binomials, Bernoulli and
//! Eulerian numbers.
//!
//! Bernoulli numbers follow the `x/(e^x - 1)` convention, so **B_1 = -1/2**.
//! The other common convention (B_1 = +1/2) silently changes one term of the
//! power series of `x^n/(1 - e^-x)`; every consumer in this crate expects -1/2.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::precision::PrecisionContext;

/// Largest Bernoulli index served from exact rationals. Past this the zeta
/// formula in [`bernoulli_float`] takes over.
pub const EXACT_BERNOULLI_MAX: usize = 512;

/// Signed rational in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactRational(Rational);

impl ExactRational {
    pub fn new(numerator: impl Into<Integer>, denominator: impl Into<Integer>) -> Result<Self> {
        let den: Integer = denominator.into();
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Self(Rational::from((numerator.into(), den))))
    }

    pub fn from_integer(v: impl Into<Integer>) -> Self {
        Self(Rational::from(v.into()))
    }

    pub fn zero() -> Self {
        Self(Rational::new())
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn numerator(&self) -> &Integer {
        self.0.numer()
    }

    pub fn denominator(&self) -> &Integer {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.cmp0().is_eq()
    }

    pub fn is_integer(&self) -> bool {
        *self.0.denom() == 1
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        self.0.cmp0() as i32
    }

    pub fn abs(&self) -> Self {
        Self(self.0.clone().abs())
    }

    /// Correctly rounded to `prec` bits.
    pub fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, &self.0)
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }
}

impl From<Rational> for ExactRational {
    fn from(r: Rational) -> Self {
        Self(r)
    }
}

impl From<i64> for ExactRational {
    fn from(v: i64) -> Self {
        Self::from_integer(v)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactRational({})", self.0)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&ExactRational> for &ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &ExactRational) -> ExactRational {
                ExactRational(Rational::from((&self.0).$method(&rhs.0)))
            }
        }
        impl $trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div<&ExactRational> for &ExactRational {
    type Output = ExactRational;
    /// Panics on division by zero, like the primitive integer types.
    fn div(self, rhs: &ExactRational) -> ExactRational {
        assert!(!rhs.is_zero(), "division of ExactRational by zero");
        ExactRational(Rational::from(&self.0 / &rhs.0))
    }
}

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

/// C(n, k) as an integer-valued rational.
pub fn binomial(n: u32, k: u32) -> Result<ExactRational> {
    if k > n {
        return Err(Error::Domain(format!("binomial({n}, {k}) needs k <= n")));
    }
    Ok(ExactRational::from_integer(Integer::from(Integer::binomial_u(n, k))))
}

pub fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// n(n+1)...(n+len-1); the empty product is 1.
pub fn rising(n: u64, len: u32) -> Integer {
    let mut acc = Integer::from(1);
    for i in 0..len as u64 {
        acc *= n + i;
    }
    acc
}

// ---------------------------------------------------------------------------
// Bernoulli numbers

static BERNOULLI: RwLock<Vec<ExactRational>> = RwLock::new(Vec::new());

/// Exact B_0..=B_max via tangent numbers (integer-only, O(max^2)).
fn compute_bernoulli(max: usize) -> Vec<ExactRational> {
    let half = max / 2;
    // tangent numbers T_1..T_half, in place
    let mut t: Vec<Integer> = vec![Integer::new(); half + 1];
    if half >= 1 {
        t[1] = Integer::from(1);
        for k in 2..=half {
            t[k] = Integer::from(&t[k - 1] * (k as u64 - 1));
        }
        for k in 2..=half {
            for j in k..=half {
                let prev = Integer::from(&t[j - 1] * (j - k) as u64);
                t[j] *= (j - k + 2) as u64;
                t[j] += prev;
            }
        }
    }

    let mut out = Vec::with_capacity(max + 1);
    out.push(ExactRational::one());
    if max >= 1 {
        out.push(ExactRational::new(-1, 2).expect("nonzero"));
    }
    for j in 2..=max {
        if j % 2 == 1 {
            out.push(ExactRational::zero());
            continue;
        }
        let k = j / 2;
        // B_2k = (-1)^(k-1) 2k T_k / (4^k (4^k - 1))
        let four_k = Integer::from(1) << (2 * k as u32);
        let den = Integer::from(&four_k - 1u32) * four_k;
        let mut num = Integer::from(&t[k] * (2 * k) as u64);
        if k % 2 == 0 {
            num = -num;
        }
        out.push(ExactRational::new(num, den).expect("nonzero"));
    }
    out
}

/// Exact B_0..=B_n.
pub fn bernoulli_list(n: usize) -> Vec<ExactRational> {
    ensure_bernoulli(n);
    BERNOULLI.read().expect("bernoulli cache poisoned")[..=n].to_vec()
}

/// Exact B_j.
pub fn bernoulli(j: usize) -> ExactRational {
    ensure_bernoulli(j);
    BERNOULLI.read().expect("bernoulli cache poisoned")[j].clone()
}

fn ensure_bernoulli(n: usize) {
    if BERNOULLI.read().expect("bernoulli cache poisoned").len() > n {
        return;
    }
    let mut guard = BERNOULLI.write().expect("bernoulli cache poisoned");
    if guard.len() > n {
        return;
    }
    let target = n.max(2 * guard.len()).max(64);
    *guard = compute_bernoulli(target);
}

/// A real value with a relative error bound.
#[derive(Clone, Debug)]
pub struct RelBounded {
    pub value: Float,
    pub rel_error: Float,
}

/// ζ(s) for integer s ≥ 2: direct partial sum plus an Euler–Maclaurin tail.
/// The remainder is bounded by the first omitted correction term.
pub(crate) fn zeta_int(s: u32, prec: u32) -> RelBounded {
    assert!(s >= 2);
    let eps = Float::with_val(prec, 1) >> prec;
    let mut n_head: u32 = 16;
    loop {
        let mut sum = Float::with_val(prec, 0);
        for k in 1..n_head {
            let kf = Float::with_val(prec, k);
            sum += kf.pow(-(s as i32));
        }
        let nf = Float::with_val(prec, n_head);
        // N^(1-s)/(s-1) + N^(-s)/2
        let n_pow = Float::with_val(prec, (&nf).pow(-(s as i32)));
        sum += Float::with_val(prec, &n_pow * &nf) / (s - 1);
        sum += Float::with_val(prec, &n_pow / 2u32);

        // correction i: B_2i/(2i)! * s(s+1)...(s+2i-2) * N^(-s-2i+1)
        let mut rising_s = Float::with_val(prec, s); // s(s+1)...(s+2i-2)
        let mut n_pow_i = Float::with_val(prec, &n_pow / &nf); // N^(-s-1)
        let inv_n2 = Float::with_val(prec, nf.square_ref()).recip();
        let mut fact = Float::with_val(prec, 2u32); // (2i)!
        let mut last = Float::with_val(prec, f64::INFINITY);
        let mut i = 1usize;
        let remainder = loop {
            let b = bernoulli(2 * i).to_float(prec);
            let term = Float::with_val(prec, &b * &rising_s) * &n_pow_i / &fact;
            let mag = Float::with_val(prec, term.abs_ref());
            if mag >= last {
                break None; // asymptotic series turned; need a larger head
            }
            if mag <= Float::with_val(prec, &sum * &eps) {
                break Some(mag);
            }
            sum += &term;
            last = mag;
            rising_s *= (s as u64 + 2 * i as u64 - 1) * (s as u64 + 2 * i as u64);
            n_pow_i *= &inv_n2;
            fact *= ((2 * i + 1) * (2 * i + 2)) as u64;
            i += 1;
        };
        if let Some(rem) = remainder {
            let rounding = Float::with_val(prec, &eps * (n_head as u64 + 4 * i as u64 + 16));
            let rel_error = rem / &sum + rounding;
            return RelBounded {
                value: sum,
                rel_error,
            };
        }
        n_head *= 2;
    }
}

/// B_j for even j ≥ 2 from `B_2m = (-1)^(m+1) 2 (2m)! ζ(2m) / (2π)^(2m)`.
///
/// Independent of the exact rational table for the leading behaviour; used
/// for indices past [`EXACT_BERNOULLI_MAX`].
pub fn bernoulli_float(j: usize, ctx: &PrecisionContext) -> Result<RelBounded> {
    if j < 2 || j % 2 == 1 {
        return Err(Error::Domain(format!(
            "bernoulli_float needs an even index >= 2, got {j}"
        )));
    }
    let prec = ctx.working_bits();
    let zeta = zeta_int(j as u32, prec);
    let two_pi = Float::with_val(prec, ctx.pi() * 2u32);
    let denom = two_pi.pow(j as u32);
    let fact = Float::with_val(prec, Float::factorial(j as u32));
    let mut value = Float::with_val(prec, &zeta.value * fact) * 2u32 / denom;
    if (j / 2) % 2 == 0 {
        value = -value;
    }
    let rounding = ctx.working_ulp() * 8u32;
    Ok(RelBounded {
        value,
        rel_error: zeta.rel_error + rounding,
    })
}

/// B_j rounded to `prec` bits, exact table below the cutoff.
pub fn bernoulli_real(j: usize, prec: u32) -> Float {
    if j <= EXACT_BERNOULLI_MAX || j % 2 == 1 {
        return bernoulli(j).to_float(prec);
    }
    let ctx = PrecisionContext::with_guard(prec.max(24), 16).expect("valid precision");
    let b = bernoulli_float(j, &ctx).expect("even index");
    Float::with_val(prec, b.value)
}

type ScaledTable = Arc<Vec<Float>>;
static SCALED: OnceLock<Mutex<Vec<(u32, ScaledTable)>>> = OnceLock::new();

/// `B_j / j!` for j = 0..=max at `prec` bits, cached per precision.
pub fn scaled_bernoulli_table(max: usize, prec: u32) -> ScaledTable {
    let cache = SCALED.get_or_init(|| Mutex::new(Vec::new()));
    {
        let guard = cache.lock().expect("bernoulli table cache poisoned");
        if let Some((_, t)) = guard.iter().find(|(p, t)| *p == prec && t.len() > max) {
            return Arc::clone(t);
        }
    }
    let len = (max + 1).max(128).next_power_of_two();
    let mut table = Vec::with_capacity(len);
    let mut fact = Float::with_val(prec + 32, 1);
    for j in 0..len {
        if j > 0 {
            fact *= j as u32;
        }
        let b = bernoulli_real(j, prec + 32);
        table.push(Float::with_val(prec, b / &fact));
    }
    let table = Arc::new(table);
    let mut guard = cache.lock().expect("bernoulli table cache poisoned");
    guard.retain(|(p, _)| *p != prec);
    guard.push((prec, Arc::clone(&table)));
    table
}

// ---------------------------------------------------------------------------
// Eulerian numbers

/// Row k of the Eulerian triangle: coefficients of A_k(w) with
/// `Σ_j j^k w^j = w A_k(w) / (1-w)^(k+1)`. Row 0 is stored as `[1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerianRow {
    pub k: usize,
    pub entries: Vec<Integer>,
}

impl EulerianRow {
    /// A_k(w) evaluated at `w`.
    pub fn eval(&self, w: &Float) -> Float {
        let mut acc = Float::with_val(w.prec(), 0);
        for c in self.entries.iter().rev() {
            acc *= w;
            acc += c;
        }
        acc
    }

    /// `Σ_i A(k,i) |w|^i`, the magnitude used for rounding bounds.
    pub fn eval_abs(&self, w: &Float) -> Float {
        self.eval(&Float::with_val(w.prec(), w.abs_ref()))
    }
}

static EULERIAN: RwLock<Vec<Arc<EulerianRow>>> = RwLock::new(Vec::new());

pub fn eulerian_row(k: usize) -> Arc<EulerianRow> {
    if let Some(row) = EULERIAN.read().expect("eulerian cache poisoned").get(k) {
        return Arc::clone(row);
    }
    let mut rows = EULERIAN.write().expect("eulerian cache poisoned");
    if rows.is_empty() {
        rows.push(Arc::new(EulerianRow {
            k: 0,
            entries: vec![Integer::from(1)],
        }));
    }
    while rows.len() <= k {
        let kk = rows.len();
        let prev = &rows[kk - 1].entries;
        let entries = if kk == 1 {
            vec![Integer::from(1)]
        } else {
            (0..kk)
                .map(|i| {
                    // A(k,i) = (i+1) A(k-1,i) + (k-i) A(k-1,i-1)
                    let mut v = Integer::new();
                    if let Some(a) = prev.get(i) {
                        v += Integer::from(a * (i as u64 + 1));
                    }
                    if i >= 1 {
                        v += Integer::from(&prev[i - 1] * (kk - i) as u64);
                    }
                    v
                })
                .collect()
        };
        rows.push(Arc::new(EulerianRow { k: kk, entries }));
    }
    Arc::clone(&rows[k])
}
