//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with its own harness so that every line reaches the test log; the
//! process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use fnlab::analysis::{
    feldheim_discriminator, grid, integral_rep_discriminator, root_test_sequence, sn_check,
    validated_weight, Spacing, Verdict, DEFAULT_REL_TOL,
};
use fnlab::arith::{bernoulli, binomial, eulerian_row, factorial};
use fnlab::feval::{
    f_alpha_closed, f_bernoulli_series, f_eulerian_closed, f_hermite_integral, f_laguerre_series, kernel_k,
    lower_bound_g, KernelWeight, Sign,
};
use fnlab::orthopoly::{gauss_hermite_rule, gauss_legendre_rule, szego_max};
use fnlab::polygamma::{gmm_laplace, gmm_leibniz, polygamma_eval, polygamma_laplace};
use fnlab::precision::{parse_real, PrecisionContext};
use fnlab::report::{Cell, FeldheimWeight, Format, Report, RunManifest, TOOL_VERSION};

type Outcome = Result<String, String>;

fn ctx(bits: u32) -> PrecisionContext {
    PrecisionContext::new(bits).unwrap()
}

fn real(v: f64, prec: u32) -> Float {
    Float::with_val(prec, v)
}

fn rel_dev(a: &Float, b: &Float) -> f64 {
    let p = a.prec().max(b.prec());
    (Float::with_val(p, a - b) / b).abs().to_f64()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Run the CLI in-process; returns (exit code, parsed JSON report).
fn cli_json(args: &[&str]) -> Result<(i32, Report), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("out.json");
    let mut argv: Vec<String> = vec!["fnlab".into()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--json".into());
    argv.push(path.display().to_string());
    argv.push("--quiet".into());
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = fnlab::cli::run(argv, &mut out, &mut err);
    let rep = Report::read(&path, Format::Json).map_err(|e| format!("{e}; stderr: {}", String::from_utf8_lossy(&err)))?;
    Ok((code, rep))
}

/// Every cell positive, and the stored margin `value - error_bound` positive.
fn certified_positive(rep: &Report) -> Result<(), String> {
    for c in &rep.cells {
        let v = parse_real(&c.value, 1024).map_err(|e| e.to_string())?;
        let b = parse_real(&c.error_bound, 1024).map_err(|e| e.to_string())?;
        ensure(c.sign == Sign::Positive && v - b > 0, || {
            format!("n={} x={} is {:?}", c.n, c.x, c.sign)
        })?;
    }
    Ok(())
}

fn c1_cross_method() -> Outcome {
    let c = ctx(256);
    let prec = c.working_bits();
    let xs = grid(&real(0.25, prec), &real(5.0, prec), 19, Spacing::Uniform, prec).unwrap();
    let xs: Vec<Float> = std::iter::once(real(0.25, prec)).chain(xs).collect();
    let tol = 1e-25;
    let mut pairs = 0;
    let mut worst = 0f64;
    for n in 0..=10u32 {
        for x in &xs {
            let rs = [
                f_bernoulli_series(n, x, &c, tol).map_err(|e| e.to_string())?,
                f_laguerre_series(n, x, &c, tol).map_err(|e| e.to_string())?,
                f_eulerian_closed(n, x, &c).map_err(|e| e.to_string())?,
            ];
            for i in 0..3 {
                for j in i + 1..3 {
                    ensure(rs[i].agrees_with(&rs[j]), || {
                        format!("{} vs {} at n={n} x={}", rs[i].method.name(), rs[j].method.name(), x.to_f64())
                    })?;
                    let d = Float::with_val(prec, &rs[i].value - &rs[j].value).abs().to_f64();
                    worst = worst.max(d);
                    pairs += 1;
                }
            }
        }
    }
    Ok(format!("{pairs} pairs over n<=10 x 20 points agree within summed bounds; max |diff| {worst:.1e}"))
}

fn c2_theorem() -> Outcome {
    let (code, rep) = cli_json(&["scan", "--n-max", "40", "--x-min", "log2+1e-3", "--x-max", "10", "--grid", "200"])?;
    ensure(rep.cells.len() == 41 * 200, || format!("{} cells", rep.cells.len()))?;
    certified_positive(&rep)?;
    ensure(code == 0, || format!("exit code {code}"))?;
    Ok(format!("{} cells positive with certified margins, exit 0", rep.cells.len()))
}

fn c3_small_n() -> Outcome {
    let (code, rep) = cli_json(&["scan", "--n-max", "16", "--x-min", "1e-3", "--x-max", "log2", "--grid", "100"])?;
    ensure(rep.cells.len() == 17 * 100, || format!("{} cells", rep.cells.len()))?;
    certified_positive(&rep)?;
    ensure(code == 0, || format!("exit code {code}"))?;
    Ok(format!("{} cells in (1e-3, log 2] positive", rep.cells.len()))
}

fn c4_example_identities() -> Outcome {
    let c = ctx(128);
    let rows = sn_check(20, &c, DEFAULT_REL_TOL).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(r.margin > 0, || format!("S_{} margin not positive", r.n))?;
        ensure(r.agree, || format!("routes disagree at n={}", r.n))?;
    }
    let min_ratio = rows
        .iter()
        .map(|r| Float::with_val(64, &r.direct / &r.half_factorial).to_f64())
        .fold(f64::INFINITY, f64::min);
    let r = root_test_sequence(1, 100, &c).map_err(|e| e.to_string())?;
    let dev = (r[99].to_f64() * 2.0 * std::f64::consts::PI - 1.0).abs();
    ensure(dev <= 0.05, || format!("|r_100 2π - 1| = {dev}"))?;
    Ok(format!(
        "S_n > n!/2 for n<=20 (min ratio {min_ratio:.4}), routes agree; |r_100·2π - 1| = {dev:.4}"
    ))
}

fn c5_feldheim() -> Outcome {
    let c = ctx(128);
    let prec = c.working_bits();
    let ns: Vec<u32> = (0..=6).collect();
    let ys = vec![real(0.5, prec), real(1.0, prec), Float::with_val(prec, 2u32).sqrt(), real(2.0, prec)];
    let tol = 1e-6;
    let fl = feldheim_discriminator(&ns, &ys, &c, tol).map_err(|e| e.to_string())?;
    let verdict = fl.unanimous().ok_or("Feldheim verdicts split or all inconclusive")?;
    let mut degenerate = 0;
    for cell in &fl.cells {
        if cell.verdict == Verdict::Inconclusive {
            // only allowed where the two candidates coincide
            let sep = Float::with_val(prec, &cell.as_printed - &cell.corrected).abs().to_f64();
            ensure(sep < 1e-20, || format!("inconclusive non-degenerate cell n={} y={}", cell.n, cell.arg.to_f64()))?;
            degenerate += 1;
        }
    }
    let xs: Vec<Float> = [1.0, 2.0, 3.0].iter().map(|&v| real(v, prec)).collect();
    let ir = integral_rep_discriminator(&ns, &xs, &c, tol).map_err(|e| e.to_string())?;
    let weight = validated_weight(&fl, &ir).ok_or("integral representation verdict differs")?;
    let mut worst = 0f64;
    for n in 0..=6u32 {
        for x in &xs {
            let oracle = f_eulerian_closed(n, x, &c).map_err(|e| e.to_string())?;
            let h = f_hermite_integral(n, x, &c, 0, weight, 1e-12 * oracle.value.to_f64())
                .map_err(|e| e.to_string())?;
            let d = rel_dev(&h.value, &oracle.value);
            ensure(d <= 1e-8, || format!("hermite n={n} x={} rel dev {d:e}", x.to_f64()))?;
            worst = worst.max(d);
        }
    }
    Ok(format!(
        "unanimous {} over {} cells ({degenerate} degenerate); integral form agrees; hermite max rel dev {worst:.1e}",
        verdict.name(),
        fl.cells.len()
    ))
}

fn c6_laplace() -> Outcome {
    let c = ctx(128);
    let prec = c.working_bits();
    let mut worst = 0f64;
    for m in 1..=5u32 {
        for x in [0.5, 1.0, 2.0, 4.0] {
            let x = real(x, prec);
            let a = gmm_leibniz(m, &x, &c).map_err(|e| e.to_string())?;
            let b = gmm_laplace(m, &x, &c, 1e-12 * a.value.to_f64()).map_err(|e| e.to_string())?;
            let d = rel_dev(&b.value, &a.value);
            ensure(d <= 1e-8, || format!("G_{m}^({m}) at x={} rel dev {d:e}", x.to_f64()))?;
            worst = worst.max(d);
        }
    }
    let mut worst_psi = 0f64;
    for n in 1..=4u32 {
        for x in [1.0, 2.0, 5.0] {
            let x = real(x, prec);
            let p = polygamma_eval(n, &x, &c).map_err(|e| e.to_string())?;
            let lhs = if n % 2 == 1 { p.value.clone() } else { -p.value.clone() };
            let q = polygamma_laplace(n, &x, &c, 1e-12 * lhs.to_f64()).map_err(|e| e.to_string())?;
            let d = rel_dev(&q.value, &lhs);
            ensure(d <= 1e-8, || format!("psi^({n}) at x={} rel dev {d:e}", x.to_f64()))?;
            worst_psi = worst_psi.max(d);
        }
    }
    Ok(format!("G_m^(m) sides max rel dev {worst:.1e}; polygamma Laplace max rel dev {worst_psi:.1e}"))
}

fn c7_limits() -> Outcome {
    let c = ctx(128);
    let prec = c.working_bits();
    let small = real(1e-6, prec);
    let mut worst_small = 0f64;
    for n in 1..=8u32 {
        let v = f_eulerian_closed(n, &small, &c).map_err(|e| e.to_string())?;
        let half = Float::with_val(prec, factorial(n)) / 2u32;
        let d = rel_dev(&v.value, &half);
        ensure(d <= 1e-4, || format!("f_{n}(1e-6) rel dev {d:e}"))?;
        worst_small = worst_small.max(d);
    }
    let big = real(40.0, prec);
    let mut worst_big = 0f64;
    for n in 0..=8u32 {
        let v = f_eulerian_closed(n, &big, &c).map_err(|e| e.to_string())?;
        let nf = Float::with_val(prec, factorial(n));
        let d = rel_dev(&v.value, &nf);
        ensure(d <= 1e-10, || format!("f_{n}(40) rel dev {d:e}"))?;
        worst_big = worst_big.max(d);
    }
    Ok(format!(
        "f_n(1e-6) vs n!/2 max rel dev {worst_small:.1e}; f_n(40) vs n! max rel dev {worst_big:.1e}"
    ))
}

fn c8_alpha() -> Outcome {
    let c = ctx(128);
    let prec = c.working_bits();
    let lo = Float::with_val(prec, rug::float::Constant::Log2) + 1e-3;
    let xs = grid(&lo, &real(10.0, prec), 50, Spacing::Uniform, prec).unwrap();
    let mut cells = 0;
    for alpha in [0.25, 1.0, 2.5] {
        let a = real(alpha, prec);
        for n in 0..=10u32 {
            for x in &xs {
                let r = f_alpha_closed(n, &a, x, &c).map_err(|e| e.to_string())?;
                ensure(r.sign == Sign::Positive, || format!("alpha={alpha} n={n} x={} {:?}", x.to_f64(), r.sign))?;
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} alpha cells positive"))
}

fn c9_kernel() -> Outcome {
    let c = ctx(128);
    let prec = c.working_bits();
    let ln2 = Float::with_val(prec, rug::float::Constant::Log2);
    let g0 = lower_bound_g(&ln2);
    ensure(g0.clone().abs() <= c.working_ulp() * 4u32, || format!("g(log 2) = {}", g0.to_f64()))?;
    let ts = grid(&real(0.0, prec), &real(10.0, prec), 200, Spacing::Uniform, prec).unwrap();
    let ts: Vec<Float> = std::iter::once(real(0.0, prec)).chain(ts).collect();
    let mut min_slack = f64::INFINITY;
    for x in [0.8, 1.0, 2.0] {
        let x = real(x, prec);
        let g = lower_bound_g(&x);
        for t in &ts {
            let k = kernel_k(&x, t, &c, 1e-30, KernelWeight::AsPrinted).map_err(|e| e.to_string())?;
            let slack = Float::with_val(prec, &k.value - &g) + &k.tail_bound;
            ensure(slack >= 0, || format!("K({}, {}) < g - tail", x.to_f64(), t.to_f64()))?;
            min_slack = min_slack.min(slack.to_f64());
        }
    }
    Ok(format!("|g(log 2)| = {:.1e}; K >= g - tail on 3 x 201 points (min slack {min_slack:.2e})", g0.to_f64().abs()))
}

fn c10_infrastructure() -> Outcome {
    // Bernoulli recurrence: Σ_{k<=m} C(m+1,k) B_k = 0 for m >= 1
    for m in 1..=200u32 {
        let mut s = Rational::new();
        for k in 0..=m {
            let c = binomial(m + 1, k).map_err(|e| e.to_string())?;
            s += Rational::from(c.as_rational() * bernoulli(k as usize).as_rational());
        }
        ensure(s == 0, || format!("recurrence fails at m={m}"))?;
    }
    // Eulerian row sums
    for k in 0..=60usize {
        let row = eulerian_row(k);
        let sum: Integer = row.entries.iter().sum();
        ensure(sum == factorial(k as u32), || format!("row {k} sums to {sum}"))?;
    }
    // Szegő
    let c = ctx(128);
    let prec = c.working_bits();
    let ys: Vec<Float> = (0..=800).map(|i| real(i as f64 * 0.125, prec)).collect();
    let sz = szego_max(80, &ys, &c);
    ensure(sz <= 1, || format!("Szegő max {}", sz.to_f64()))?;
    // Gauss–Hermite: ∫ t^{2k} e^{-t²} = Γ(k+1/2) exactly for 2k <= 2m-1
    for m in [4usize, 10, 24] {
        let rule = gauss_hermite_rule(m, &c).map_err(|e| e.to_string())?;
        for k in 0..m as u32 {
            let q = rule.apply(|t| Float::with_val(prec, t.pow(2 * k)));
            let exact = Float::with_val(prec, Float::with_val(prec, k) + 0.5).gamma();
            let d = rel_dev(&q, &exact);
            ensure(d < 1e-30, || format!("GH m={m} moment {} off by {d:e}", 2 * k))?;
        }
    }
    // Gauss–Legendre: ∫_{-1}^{1} t^{2k} = 2/(2k+1) for 2k <= 2m-1
    for m in [8usize, 32] {
        let rule = gauss_legendre_rule(m, prec).map_err(|e| e.to_string())?;
        for k in 0..m as u32 {
            let q = rule.apply(|t| Float::with_val(prec, t.pow(2 * k)));
            let exact = Float::with_val(prec, 2) / (2 * k + 1);
            ensure(rel_dev(&q, &exact) < 1e-30, || format!("GL m={m} moment {}", 2 * k))?;
        }
    }
    // report round trip on 1000 generated reports
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&arb_report(), |rep| {
            for f in [Format::Json, Format::Csv] {
                let back = Report::parse(&rep.render(f).unwrap(), f).unwrap();
                prop_assert_eq!(&back, &rep);
            }
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;
    Ok(format!(
        "recurrence to 200, row sums to 60, Szegő max {:.3} (n<=80), GH/GL exact, 1000 reports round-trip",
        sz.to_f64()
    ))
}

fn arb_real() -> impl Strategy<Value = String> {
    (24u32..600, any::<i64>(), -400i32..400).prop_map(|(prec, m, e)| {
        let v = Float::with_val(prec, Float::with_val(prec, m) * Float::with_val(prec, 2).pow(e));
        fnlab::precision::format_real(&v)
    })
}

fn arb_cell() -> impl Strategy<Value = Cell> {
    (
        0u32..500,
        arb_real(),
        arb_real(),
        arb_real(),
        prop_oneof![Just(Sign::Positive), Just(Sign::Negative), Just(Sign::Indeterminate)],
        "[a-z][a-z-]{0,24}",
    )
        .prop_map(|(n, x, value, error_bound, sign, method)| Cell {
            n,
            x,
            value,
            error_bound,
            sign,
            method,
        })
}

fn arb_report() -> impl Strategy<Value = Report> {
    (
        "[a-z]{1,10}",
        prop::collection::btree_map("[a-z_]{1,10}", "\\PC{0,16}", 0..8),
        prop::collection::btree_map("[a-z_]{1,10}", "[0-9e.+-]{1,12}", 0..4),
        24u32..8192,
        prop_oneof![
            Just(FeldheimWeight::AsPrinted),
            Just(FeldheimWeight::GaussianCorrected),
            Just(FeldheimWeight::NotYetDetermined)
        ],
        proptest::option::of("[0-9]{1,5}\\.[0-9]{3}"),
        prop::collection::vec(arb_cell(), 0..12),
    )
        .prop_map(|(command, parameters, truncation, bits, weight, secs, cells)| {
            let mut m = RunManifest::new(&command, bits);
            m.parameters = parameters;
            m.truncation = truncation;
            m.validated_feldheim_weight = weight;
            m.tool_version = TOOL_VERSION.into();
            m.wall_clock_seconds = secs;
            Report { manifest: m, cells }
        })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("cross-method agreement", c1_cross_method),
        ("positivity above log 2", c2_theorem),
        ("positivity for n <= 16 below log 2", c3_small_n),
        ("S_n identity and root test", c4_example_identities),
        ("Feldheim discriminator", c5_feldheim),
        ("Laplace relations", c6_laplace),
        ("limits at 0 and infinity", c7_limits),
        ("alpha generalisation", c8_alpha),
        ("kernel lower bound", c9_kernel),
        ("infrastructure invariants", c10_infrastructure),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|s| s == &id.to_string() || name.contains(s.as_str())) {
            continue;
        }
        let t = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS criterion {id:>2} ({name}) [{secs:.1}s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}) [{secs:.1}s]: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
