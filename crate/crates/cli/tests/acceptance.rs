//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Criterion 9 runs the reduced grid at 1 and 8 workers by default. Set
//! `FACTEST_ACCEPTANCE_FULL=1` to also run the full desk-scale grid twice,
//! which takes a long time on a single core.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use factest_cli::report;
use factest_core::distfn::{normal_cdf, normal_quantile};
use factest_core::permute::{kruskal_wallis_exact, permutation_pvalue, PermutationPlan};
use factest_core::procedures::{self, anova_type, kruskal_wallis, rank_wts, van_der_waerden, wts, MomentSummary};
use factest_core::ranks::{midranks, pseudo_effects};
use factest_core::simulate::{
    build_scenario, registry, replicate_pvalues, run_cell, run_grid, tally, write_csv, GridCell, GridConfig,
    GridRow, Layout, RateEstimate,
};
use factest_core::{Dataset, HypothesisScale, Matrix, Method, RefDistribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn p2() -> Matrix {
    Matrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cell = GridCell {
        scenario: build_scenario(Layout::OneWay, 1, 1).unwrap(),
        m: 5,
        alpha: 0.05,
        method: Method::AnovaF,
        n_sim: 2_000,
        n_perm: 0,
    };
    let est = run_cell(&cell, 20_240_601).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        (est.rate - 0.05).abs() <= 0.0146 && elapsed < Duration::from_secs(5),
        format!("F rate {} (bound 0.05 +- 0.0146) in {:.2?}", est.rate, elapsed),
    )
}

/// Every homoscedastic scenario (same law in each cell), m = 0.
fn criterion_2() -> Outcome {
    let scenarios: Vec<_> = Layout::ALL
        .into_iter()
        .flat_map(registry)
        .filter(|s| s.h0f_holds())
        .collect();
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut smoke_time = Duration::ZERO;
    let start = Instant::now();
    for (k, s) in scenarios.iter().enumerate() {
        let methods: Vec<Method> = [Method::Wtps, Method::RankWtps, Method::KruskalWallisExact]
            .into_iter()
            .filter(|m| m.applies_to(s.layout == Layout::OneWay))
            .collect();
        let ps = replicate_pvalues(s, 0, &methods, 2_000, 1_999, 7).map_err(|e| e.to_string())?;
        for (method, p) in methods.iter().zip(&ps) {
            for alpha in [0.05, 0.005] {
                let est = tally(p, alpha);
                checks += 1;
                if !est.within(alpha, 3.0) {
                    failures.push(format!("{} s{}#{} {method} alpha {alpha}: {}", s.layout, s.setting, s.index, est.rate));
                }
            }
        }
        if k == 3 {
            smoke_time = start.elapsed();
        }
    }
    check(
        failures.is_empty() && smoke_time < Duration::from_secs(600),
        format!(
            "{} scenarios, {checks} rate checks, {} outside 3 SE{}; 4-scenario smoke subset {:.1?}, all {:.1?}",
            scenarios.len(),
            failures.len(),
            if failures.is_empty() { String::new() } else { format!(" [{}]", failures.join("; ")) },
            smoke_time,
            start.elapsed()
        ),
    )
}

fn criterion_3() -> Outcome {
    let s = build_scenario(Layout::OneWay, 1, 1).unwrap();
    let ps = replicate_pvalues(&s, 0, &[Method::Wts, Method::Wtps], 2_000, 1_999, 11).map_err(|e| e.to_string())?;
    let (w, p) = (tally(&ps[0], 0.05), tally(&ps[1], 0.05));
    let se = (0.05f64 * 0.95 / 2_000.0).sqrt();
    check(
        w.rate > 0.05 + 3.0 * se && w.rate > p.rate,
        format!("WTS rate {} vs 0.05 + 3 SE = {:.4}, WTPS rate {}", w.rate, 0.05 + 3.0 * se, p.rate),
    )
}

fn criterion_4() -> Outcome {
    let s = build_scenario(Layout::OneWay, 2, 1).unwrap();
    let ps = replicate_pvalues(&s, 0, &[Method::Ats], 2_000, 1, 13).map_err(|e| e.to_string())?;
    let a = tally(&ps[0], 0.05);
    let se = (0.05f64 * 0.95 / 2_000.0).sqrt();
    check(
        a.rate < 0.05 - 3.0 * se,
        format!("ATS rate {} vs 0.05 - 3 SE = {:.4}", a.rate, 0.05 - 3.0 * se),
    )
}

fn welch_t_squared(x: &[f64], y: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let t = (mean(x) - mean(y)) / (var(x) / x.len() as f64 + var(y) / y.len() as f64).sqrt();
    t * t
}

/// Direct integration of the unweighted mean of normalized edfs.
fn effects_direct(cells: &[Vec<f64>]) -> Vec<f64> {
    let d = cells.len() as f64;
    let edf = |c: &[f64], x: f64| {
        let below = c.iter().filter(|&&v| v < x).count() as f64;
        let at = c.iter().filter(|&&v| v == x).count() as f64;
        (below + 0.5 * at) / c.len() as f64
    };
    cells
        .iter()
        .map(|ci| ci.iter().map(|&x| cells.iter().map(|cj| edf(cj, x)).sum::<f64>() / d).sum::<f64>() / ci.len() as f64)
        .collect()
}

/// Pairwise comparisons `P(X_j < X_i) + P(X_j = X_i) / 2`, averaged over j.
fn effects_pairwise(cells: &[Vec<f64>]) -> Vec<f64> {
    let d = cells.len() as f64;
    cells
        .iter()
        .map(|ci| {
            cells
                .iter()
                .map(|cj| {
                    let mut s = 0.0;
                    for &a in ci {
                        for &b in cj {
                            s += if b < a { 1.0 } else if b == a { 0.5 } else { 0.0 };
                        }
                    }
                    s / (ci.len() * cj.len()) as f64
                })
                .sum::<f64>()
                / d
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut notes = Vec::new();
    let mut ok = true;

    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let (n1, n2) = (rng.random_range(2..12), rng.random_range(2..12));
        let x: Vec<f64> = (0..n1).map(|_| rng.random::<f64>() * 4.0).collect();
        let y: Vec<f64> = (0..n2).map(|_| rng.random::<f64>() * 9.0 - 2.0).collect();
        let t2 = welch_t_squared(&x, &y);
        let data = Dataset::one_way(vec![x, y]).unwrap();
        let q = wts(&data, &p2()).map_err(|e| e.to_string())?.statistic;
        worst = worst.max((q - t2).abs() / t2.max(1.0));
    }
    ok &= worst <= 1e-10;
    notes.push(format!("(a) WTS vs Welch t^2 max rel diff {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = rng.random_range(2..6);
        let cells: Vec<Vec<f64>> = (0..d).map(|_| (0..rng.random_range(2..8)).map(|_| rng.random::<f64>()).collect()).collect();
        let n: usize = cells.iter().map(Vec::len).sum();
        let pooled: Vec<f64> = cells.concat();
        let ranks = midranks(&pooled);
        let mut start = 0;
        let mut sum = 0.0;
        for c in &cells {
            let r: f64 = ranks[start..start + c.len()].iter().sum();
            sum += r * r / c.len() as f64;
            start += c.len();
        }
        let classical = 12.0 / (n as f64 * (n as f64 + 1.0)) * sum - 3.0 * (n as f64 + 1.0);
        let k = kruskal_wallis(&Dataset::one_way(cells).unwrap()).map_err(|e| e.to_string())?.statistic;
        worst = worst.max((k - classical).abs());
    }
    ok &= worst <= 1e-10;
    notes.push(format!("(b) KW dual formula max diff {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let d = rng.random_range(2..5);
        let cells: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..rng.random_range(2..7)).map(|_| rng.random_range(0..5) as f64).collect())
            .collect();
        let lib = pseudo_effects(&Dataset::one_way(cells.clone()).unwrap()).map_err(|e| e.to_string())?;
        let (pw, direct) = (effects_pairwise(&cells), effects_direct(&cells));
        for i in 0..cells.len() {
            worst = worst.max((pw[i] - direct[i]).abs()).max((lib[i] - direct[i]).abs());
        }
    }
    ok &= worst <= 1e-12;
    notes.push(format!("(c) pseudo-effects pairwise/direct/library max diff {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (r, c) = (rng.random_range(1..6), rng.random_range(1..6));
        let a = Matrix::new(r, c, (0..r * c).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap();
        let p = a.moore_penrose(0.0).map_err(|e| e.to_string())?;
        let ap = &a * &p;
        let pa = &p * &a;
        worst = worst
            .max((&ap * &a).max_abs_diff(&a))
            .max((&pa * &p).max_abs_diff(&p))
            .max(ap.transpose().max_abs_diff(&ap))
            .max(pa.transpose().max_abs_diff(&pa));
    }
    ok &= worst < 1e-10;
    notes.push(format!("(d) Penrose residuals max {worst:.1e}"));

    let g1 = Dataset::one_way(vec![vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]]).unwrap();
    let g2 = Dataset::one_way(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let q = wts(&g1, &p2()).map_err(|e| e.to_string())?.statistic;
    let ms = MomentSummary::compute(&g1).map_err(|e| e.to_string())?;
    let ats = anova_type(&ms.means, &ms.s_n, &ms.lambda, &p2(), 6).map_err(|e| e.to_string())?;
    let k = kruskal_wallis(&g2).map_err(|e| e.to_string())?.statistic;
    let t = van_der_waerden(&g2).map_err(|e| e.to_string())?.statistic;
    let r = rank_wts(&g2, &p2()).map_err(|e| e.to_string())?.statistic;
    let p = pseudo_effects(&g2).map_err(|e| e.to_string())?;
    let worked = (q - 1.5).abs() < 1e-10
        && (ats.statistic - 1.5).abs() < 1e-10
        && (ats.df1 - 1.0).abs() < 1e-10
        && (ats.df2 - 4.0).abs() < 1e-10
        && (k - 2.4).abs() < 1e-10
        && (t - 2.3280).abs() < 1e-3
        && (r - 8.0).abs() < 1e-10
        && (p[0] - 0.25).abs() < 1e-12
        && (p[1] - 0.75).abs() < 1e-12;
    ok &= worked;
    notes.push(format!(
        "(e) Q={q} ATS=({}, {}, {}) K={k} T={t:.4} rWTS={r} p=({}, {})",
        ats.statistic, ats.df1, ats.df2, p[0], p[1]
    ));
    check(ok, notes.join("; "))
}

fn criterion_6() -> Outcome {
    let data = Dataset::one_way(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let exact = kruskal_wallis_exact(&data, &PermutationPlan::full_enumeration()).map_err(|e| e.to_string())?;
    let kw = |d: &Dataset| procedures::kruskal_wallis(d).map(|r| r.statistic);
    let mc = permutation_pvalue(kw, &data, &PermutationPlan::monte_carlo(10_000, 6)).map_err(|e| e.to_string())?;
    let p: f64 = 1.0 / 3.0;
    let bound = 3.0 * (p * (1.0 - p) / 10_000.0).sqrt();
    check(
        exact.p_value == p && (mc.p_value - p).abs() <= bound,
        format!("exact p = {}, Monte Carlo p = {} (bound {:.4})", exact.p_value, mc.p_value, bound),
    )
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn ln_gamma_oracle(x: f64) -> f64 {
    // Stirling series after shifting the argument above 20.
    let mut shift = 0.0;
    let mut z = x;
    while z < 20.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2)
        + 1.0 / (1260.0 * z2 * z2 * z)
        - 1.0 / (1680.0 * z2 * z2 * z2 * z)
}

/// Brute-force upper tail of a density on `[x, upper]`, split at powers of two.
fn tail(density: &dyn Fn(f64) -> f64, x: f64, upper: f64) -> f64 {
    let mut total = 0.0;
    let mut a = x;
    while a < upper {
        let b = (a * 2.0).max(a + 0.5).min(upper);
        total += simpson(density, a, b, 4_000);
        a = b;
    }
    total
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut worst = 0.0f64;
    for k in 0..50 {
        let x = -6.0 + 12.0 * k as f64 / 49.0;
        let oracle = if x <= 0.0 { tail(&phi, -x, 40.0) } else { 1.0 - tail(&phi, x, 40.0) };
        worst = worst.max((normal_cdf(x) - oracle).abs());
    }
    ok &= worst <= 1e-12;
    notes.push(format!("normal cdf {worst:.1e}"));

    let mut worst = 0.0f64;
    for k in 0..50 {
        let p = 0.001 + 0.998 * k as f64 / 49.0;
        let x = normal_quantile(p).map_err(|e| e.to_string())?;
        worst = worst.max((normal_cdf(x) - p).abs());
    }
    ok &= worst <= 1e-10;
    notes.push(format!("normal quantile {worst:.1e}"));

    let mut worst = 0.0f64;
    for df in [1.0, 4.0, 10.0] {
        let c = -(0.5 * df) * 2f64.ln() - ln_gamma_oracle(0.5 * df);
        let dens = move |t: f64| if t <= 0.0 { 0.0 } else { (c + (0.5 * df - 1.0) * t.ln() - 0.5 * t).exp() };
        let dist = RefDistribution::chi_square(df).unwrap();
        for k in 0..50 {
            let x = 0.2 + 30.0 * k as f64 / 49.0;
            let got = dist.survival(x).map_err(|e| e.to_string())?;
            worst = worst.max((got - tail(&dens, x, 400.0)).abs());
        }
    }
    ok &= worst <= 1e-10;
    notes.push(format!("chi-square tail {worst:.1e}"));

    let mut worst = 0.0f64;
    for (d1, d2) in [(2.0, 10.0), (4.0, 20.0), (3.0, 30.0)] {
        let c = ln_gamma_oracle(0.5 * (d1 + d2)) - ln_gamma_oracle(0.5 * d1) - ln_gamma_oracle(0.5 * d2)
            + 0.5 * d1 * (d1 / d2).ln();
        let dens = move |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                (c + (0.5 * d1 - 1.0) * t.ln() - 0.5 * (d1 + d2) * (1.0 + d1 * t / d2).ln()).exp()
            }
        };
        let dist = RefDistribution::f(d1, d2).unwrap();
        for k in 0..50 {
            let x = 0.2 + 8.0 * k as f64 / 49.0;
            let got = dist.survival(x).map_err(|e| e.to_string())?;
            // Tail beyond 2e6 is below 1e-12 for these degrees of freedom.
            worst = worst.max((got - tail(&dens, x, 2e6)).abs());
        }
    }
    ok &= worst <= 1e-10;
    notes.push(format!("F tail {worst:.1e}"));
    check(ok, format!("max abs errors on 50-point grids: {}", notes.join(", ")))
}

fn criterion_8() -> Outcome {
    let golden = include_str!("../../core/tests/data/scenarios.golden");
    let expected: Vec<&str> = golden.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).collect();
    let join = |v: Vec<String>| v.join(" ");
    let actual: Vec<String> = Layout::ALL
        .into_iter()
        .flat_map(registry)
        .map(|s| {
            format!(
                "{}|{}|{}|{}|{}|{}|{}|{}|{}",
                s.layout,
                s.setting,
                s.index,
                s.law,
                join(s.base_sizes.iter().map(|x| x.to_string()).collect()),
                join(s.scales.iter().map(|x| x.to_string()).collect()),
                s.label,
                s.h0f_holds(),
                s.color_class()
            )
        })
        .collect();
    let mismatched = actual.iter().zip(&expected).filter(|(a, e)| a != e).count();
    check(
        actual.len() == 53 && expected.len() == 53 && mismatched == 0,
        format!("{} registry rows, {} golden rows, {mismatched} mismatches", actual.len(), expected.len()),
    )
}

fn grid_bytes(config: &GridConfig) -> Result<(Vec<u8>, usize, Duration), String> {
    let start = Instant::now();
    let rows = run_grid(config).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| e.to_string())?;
    Ok((buf, rows.len(), start.elapsed()))
}

fn criterion_9() -> Outcome {
    let reduced = GridConfig {
        layouts: Layout::ALL.to_vec(),
        n_sim: 500,
        n_perm: 499,
        workers: 1,
        ..GridConfig::default()
    };
    let (a, rows, t1) = grid_bytes(&reduced)?;
    let (b, _, t8) = grid_bytes(&GridConfig { workers: 8, ..reduced.clone() })?;
    let mut ok = a == b && t1 < Duration::from_secs(900);
    let mut detail = format!(
        "reduced grid: {rows} rows, 1 worker {t1:.1?}, 8 workers {t8:.1?}, byte-identical: {}",
        a == b
    );
    if std::env::var_os("FACTEST_ACCEPTANCE_FULL").is_some() {
        let desk = GridConfig { workers: 1, ..GridConfig::default() };
        let (a, rows, t1) = grid_bytes(&desk)?;
        let (b, _, t8) = grid_bytes(&GridConfig { workers: 8, ..desk })?;
        ok &= a == b && rows == 29 * 2 * 11;
        detail.push_str(&format!(
            "; desk grid: {rows} rows, 1 worker {t1:.1?}, 8 workers {t8:.1?}, byte-identical: {}",
            a == b
        ));
    } else {
        detail.push_str("; full desk-scale double run skipped (set FACTEST_ACCEPTANCE_FULL=1)");
    }
    check(ok, detail)
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    let cases: Vec<(Layout, u8, usize, Vec<Method>)> = vec![
        (Layout::OneWay, 1, 1, vec![Method::AnovaF, Method::Wtps, Method::RankWtps, Method::KruskalWallisExact]),
        (Layout::OneWay, 1, 2, vec![Method::AnovaF, Method::Wtps, Method::RankWtps, Method::KruskalWallisExact]),
        (Layout::OneWay, 2, 1, vec![Method::Wtps, Method::RankWtps, Method::KruskalWallisExact]),
        (Layout::TwoWay, 1, 1, vec![Method::AnovaF, Method::Wtps, Method::RankWtps]),
    ];
    for (layout, setting, index, methods) in cases {
        let s = build_scenario(layout, setting, index).unwrap();
        let ps = replicate_pvalues(&s, 0, &methods, 5_000, 1_999, 10).map_err(|e| e.to_string())?;
        for (m, p) in methods.iter().zip(&ps) {
            let est = tally(p, 0.005);
            notes.push(format!("{layout} s{setting}#{index} {m} {}", est.rate));
            if !est.within(0.005, 3.0) {
                failures.push(format!("{layout} s{setting}#{index} {m}"));
            }
        }
    }

    let fixture = |alpha: f64, rejections: u64| GridRow {
        layout: Layout::OneWay,
        setting: 1,
        scenario_index: 1,
        label: "balanced-homoscedastic".into(),
        m: 0,
        alpha,
        method: Method::Wts,
        hypothesis_scale: HypothesisScale::Mean,
        h0f_holds: true,
        n_sim: 2_000,
        n_perm: 0,
        estimate: RateEstimate::new(rejections, 2_000, alpha),
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = report::deviation(&[fixture(0.05, 130), fixture(0.005, 7)], dir.path()).map_err(|e| e.to_string())?;
    let csv = std::fs::read_to_string(&files[0]).map_err(|e| e.to_string())?;
    let row = csv.lines().nth(1).unwrap_or("").to_string();
    let report_ok = row.ends_with(",1.5,-0.15");
    check(
        failures.is_empty() && report_ok,
        format!(
            "rates at 0.005 with n_sim 5000: {}; outside 3 SE: {:?}; deviation row '{row}'",
            notes.join(", "),
            failures
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exact-level calibration of F", criterion_1),
        ("permutation exactness under exchangeability", criterion_2),
        ("WTS liberality at n_i = 5", criterion_3),
        ("ATS conservatism under exp(1)", criterion_4),
        ("oracle equivalences", criterion_5),
        ("exact Kruskal-Wallis enumeration", criterion_6),
        ("special-function accuracy", criterion_7),
        ("registry fidelity", criterion_8),
        ("reproducibility and parallel determinism", criterion_9),
        ("small-alpha behaviour and deviation report", criterion_10),
    ];
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", k + 1);
        if filter.as_ref().is_some_and(|p| !id.contains(p.as_str()) && !name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>12}: {name} ({:.1?}) {detail}", start.elapsed());
    }
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
