//! End-to-end acceptance checks, one per criterion. Runs without the
//! libtest harness so every verdict is printed as a `PASS`/`FAIL` line;
//! the process exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use zn_harness::oracle_check;
use zn_harness::plot::sharpening_times;
use zn_harness::table::ObservableRow;
use zn_harness::{run_sweep, ExperimentConfig, Format, SweepOutcome};
use zn_sharpening::observables::{fit_scaling, Censoring, ScalingModel, ScalingPoint};
use zn_sharpening::oracle::{
    apply_channel, conjugate_logical_state, decohered_logical_state, relative_entropy,
};
use zn_sharpening::{ClockChannel, TorusLattice};

/// Significance used when reading the sign of a difference between curves.
const SIGNIFICANCE: f64 = 2.0;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: &str) -> Verdict {
    Verdict {
        passed,
        detail: detail.to_string(),
    }
}

fn sweep_in(dir: &tempfile::TempDir, name: &str, toml: &str) -> SweepOutcome {
    let mut config = ExperimentConfig::parse(toml, Format::Toml).expect("valid config");
    config.output_dir = dir.path().join(name);
    let outcome = run_sweep(&config).expect("sweep runs");
    assert!(
        outcome.failed().is_empty(),
        "{name}: failed tasks {:?}",
        outcome.failed()
    );
    outcome
}

fn sweep(toml: &str) -> Vec<ObservableRow> {
    let dir = tempfile::tempdir().unwrap();
    sweep_in(&dir, "run", toml).rows
}

/// `(T, value, stderr)` sorted by temperature.
fn curve(rows: &[ObservableRow], observable: &str, l: usize, t: usize) -> Vec<(f64, f64, f64)> {
    let mut c: Vec<_> = rows
        .iter()
        .filter(|r| r.observable == observable && r.l == l && r.t == t)
        .map(|r| (r.temperature, r.value, r.stderr))
        .collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

fn value(rows: &[ObservableRow], observable: &str, l: usize, t: usize, temp: f64) -> (f64, f64) {
    let r = rows
        .iter()
        .find(|r| r.observable == observable && r.l == l && r.t == t && r.temperature == temp)
        .unwrap_or_else(|| panic!("no {observable} row at L={l} t={t} T={temp}"));
    (r.value, r.stderr)
}

/// Temperatures where `b − a` changes sign, by linear interpolation.
fn crossings(a: &[(f64, f64, f64)], b: &[(f64, f64, f64)]) -> Vec<f64> {
    let d: Vec<(f64, f64)> = a.iter().zip(b).map(|(x, y)| (x.0, y.1 - x.1)).collect();
    d.windows(2)
        .filter(|w| w[0].1 * w[1].1 < 0.0 || w[1].1 == 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1 / (w[0].1 - w[1].1))
        .collect()
}

/// Signs of `b − a` at the temperatures where the difference exceeds
/// `SIGNIFICANCE` combined standard errors.
fn significant_signs(a: &[(f64, f64, f64)], b: &[(f64, f64, f64)]) -> Vec<(f64, i8)> {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| {
            let diff = y.1 - x.1;
            let sigma = (x.2 * x.2 + y.2 * y.2).sqrt();
            (diff.abs() > SIGNIFICANCE * sigma).then_some((x.0, diff.signum() as i8))
        })
        .collect()
}

/// True when the significant signs read `+ … + − … −` with both present:
/// the larger system is more ordered below one crossing and less above it.
fn single_oriented_crossing(signs: &[(f64, i8)]) -> bool {
    let s: Vec<i8> = signs.iter().map(|x| x.1).collect();
    let first_minus = s.iter().position(|x| *x < 0);
    match first_minus {
        Some(i) => i > 0 && s[i..].iter().all(|x| *x < 0),
        None => false,
    }
}

fn order_curve_pairs_ok(rows: &[ObservableRow], sizes: &[usize]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            let a = curve(rows, "order_parameter", sizes[i], sizes[i]);
            let b = curve(rows, "order_parameter", sizes[j], sizes[j]);
            let signs = significant_signs(&a, &b);
            let good = single_oriented_crossing(&signs);
            ok &= good;
            let pattern: String = signs
                .iter()
                .map(|(t, s)| format!("{t}{}", if *s > 0 { '+' } else { '-' }))
                .collect::<Vec<_>>()
                .join(" ");
            notes.push(format!("L{}vs{} [{pattern}]", sizes[i], sizes[j]));
        }
    }
    (ok, notes.join(", "))
}

fn criterion_1_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for n in [2, 3] {
        let toml = format!(
            r#"
mode = "oracle_check"
n = {n}
seed = 101
realizations = 10
temperatures = [0.5, 1.0, 2.0]
l_equals_t = [2, 3]
schedule = {{ burn_in = 200, measurements = 100000, thin = 5 }}
oracle = {{ tolerance = 0.01, sigmas = 3.0, correlator = false }}
"#
        );
        let mut config = ExperimentConfig::parse(&toml, Format::Toml).unwrap();
        config.output_dir = dir.path().join(format!("n{n}"));
        let outcome = run_sweep(&config).unwrap();
        let report = oracle_check::check(&config, &outcome).unwrap();
        passed &= report.passed;
        let worst = report
            .worst
            .as_ref()
            .map(|w| format!("{:.4} of {:.4}", (w.estimate - w.exact).abs(), w.allowed))
            .unwrap_or_default();
        detail.push(format!(
            "N={n}: {} comparisons, {} failures, worst {worst}",
            report.comparisons,
            report.failures.len()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 300.0;
    verdict(passed, &format!("{}; {secs:.0}s", detail.join("; ")))
}

fn criterion_2_analytic_limits() -> Verdict {
    let start = Instant::now();
    let mut passed = true;
    let mut detail = Vec::new();
    for n in [2usize, 4, 8] {
        let common = format!("n = {n}\nseed = 202\nrealizations = 50\ntemperatures = [0.1, 100.0]\nl_equals_t = [8]\n");
        let op_rows = sweep(&format!("mode = \"sharpening\"\n{common}"));
        let ci_rows = sweep(&format!("mode = \"coherent_info\"\n{common}"));
        let ln_n = (n as f64).ln();
        let (op_hot, _) = value(&op_rows, "order_parameter", 8, 8, 100.0);
        let (op_cold, _) = value(&op_rows, "order_parameter", 8, 8, 0.1);
        let (ci_hot, _) = value(&ci_rows, "coherent_information", 8, 8, 100.0);
        let (ci_cold, _) = value(&ci_rows, "coherent_information", 8, 8, 0.1);
        let ok = op_hot < 0.05 && ci_hot > 0.95 * ln_n && op_cold > 0.95 && ci_cold < 0.05 * ln_n;
        passed &= ok;
        detail.push(format!(
            "N={n}: T=100 OP {op_hot:.4} CI/lnN {:.4}; T=0.1 OP {op_cold:.4} CI/lnN {:.4}",
            ci_hot / ln_n,
            ci_cold / ln_n
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    passed &= secs < 600.0;
    verdict(passed, &format!("{}; {secs:.0}s", detail.join("; ")))
}

fn criterion_3_z2_transition_location() -> Verdict {
    let rows = sweep(
        r#"
mode = "coherent_info"
n = 2
seed = 303
realizations = 300
temperatures = [0.7, 0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.3]
l_equals_t = [8, 12, 16]
"#,
    );
    let sizes = [8, 12, 16];
    let mut all = Vec::new();
    let mut passed = true;
    let mut detail = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let a = curve(&rows, "coherent_information_normalized", sizes[i], sizes[i]);
            let b = curve(&rows, "coherent_information_normalized", sizes[j], sizes[j]);
            let c = crossings(&a, &b);
            passed &= !c.is_empty() && c.iter().all(|t| (0.80..=1.10).contains(t));
            detail.push(format!(
                "L{}/L{} at {:?}",
                sizes[i],
                sizes[j],
                c.iter()
                    .map(|t| (t * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>()
            ));
            all.extend(c);
        }
    }
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    passed &= hi - lo <= 0.3;
    verdict(
        passed,
        &format!("{}; window [{lo:.3}, {hi:.3}]", detail.join(", ")),
    )
}

fn criterion_4_order_parameter_structure() -> Verdict {
    let sizes = [8usize, 12, 16];
    let dir = tempfile::tempdir().unwrap();

    let z2 = sweep_in(
        &dir,
        "z2",
        r#"
mode = "sharpening"
n = 2
seed = 404
realizations = 200
temperatures = [0.7, 0.85, 1.0, 1.15, 1.3]
l_equals_t = [8, 12, 16]
"#,
    )
    .rows;
    let (z2_ok, z2_note) = order_curve_pairs_ok(&z2, &sizes);

    // The plug-in order parameter carries a positive bias of order 1/ESS,
    // larger for the slower large-L chains; on the disordered side the
    // chains are four times longer so the finite-size decrease is resolved.
    let mut z4 = sweep_in(
        &dir,
        "z4_low",
        r#"
mode = "sharpening"
n = 4
seed = 405
realizations = 200
temperatures = [0.4, 0.45, 0.5]
l_equals_t = [8, 12, 16]
"#,
    )
    .rows;
    z4.extend(
        sweep_in(
            &dir,
            "z4_high",
            r#"
mode = "sharpening"
n = 4
seed = 406
realizations = 300
temperatures = [0.62, 0.7]
l_equals_t = [8, 12, 16]
schedule = { burn_in = 200, measurements = 2000, thin = 4 }
"#,
        )
        .rows,
    );
    let (z4_ok, z4_note) = order_curve_pairs_ok(&z4, &sizes);

    let z8 = sweep_in(
        &dir,
        "z8",
        r#"
mode = "sharpening"
n = 8
seed = 407
realizations = 200
temperatures = [0.4, 0.45, 0.5, 0.55, 0.6]
l_equals_t = [8, 12, 16]
"#,
    )
    .rows;
    let mut collapse = Vec::new();
    for (temp, _, _) in curve(&z8, "order_parameter", 8, 8) {
        let v: Vec<f64> = sizes
            .iter()
            .map(|l| value(&z8, "order_parameter", *l, *l, temp).0)
            .collect();
        let gap = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min);
        if gap < 0.05 && v.iter().all(|x| *x > 0.1 && *x < 0.9) {
            collapse.push((temp, gap));
        }
    }
    let passed = z2_ok && z4_ok && !collapse.is_empty();
    verdict(
        passed,
        &format!(
            "N=2 {z2_note}; N=4 {z4_note}; N=8 collapse (T, gap) {collapse:.3?} over L=t {sizes:?}"
        ),
    )
}

fn criterion_5a_ordered_ln_ratio_linear_in_t() -> Verdict {
    let rows = sweep(
        r#"
mode = "scaling"
n = 2
seed = 505
realizations = 10
temperatures = [0.3]
sizes = [[8, 4], [8, 8], [8, 12], [8, 16]]
estimator = "transfer"
"#,
    );
    let points: Vec<ScalingPoint> = [4, 8, 12, 16]
        .iter()
        .map(|t| ScalingPoint {
            l: 8.0,
            t: *t as f64,
            y: value(&rows, "ln_ratio", 8, *t, 0.3).0,
        })
        .collect();
    let fit = fit_scaling(&points, ScalingModel::ExpT).unwrap();
    let passed = fit.r_squared > 0.9 && fit.coefficients[1] > 0.0;
    let ys: Vec<String> = points.iter().map(|p| format!("{:.2}", p.y)).collect();
    verdict(
        passed,
        &format!(
            "ln-ratio {ys:?} at t=4..16, slope {:.3}, R² {:.4}",
            fit.coefficients[1], fit.r_squared
        ),
    )
}

fn criterion_5b_disordered_deviation_decays_in_l() -> Verdict {
    let rows = sweep(
        r#"
mode = "scaling"
n = 2
seed = 506
realizations = 20
temperatures = [3.0]
l_equals_t = [6, 8, 10, 12]
estimator = "transfer"
"#,
    );
    let points: Vec<ScalingPoint> = [6, 8, 10, 12]
        .iter()
        .map(|l| ScalingPoint {
            l: *l as f64,
            t: *l as f64,
            y: value(&rows, "sector_deviation", *l, *l, 3.0).0,
        })
        .collect();
    let fit = fit_scaling(&points, ScalingModel::ExpL).unwrap();
    let decreasing = points.windows(2).all(|w| w[1].y < w[0].y);
    let passed = fit.r_squared > 0.85 && fit.coefficients[1] < 0.0 && decreasing;
    let ys: Vec<String> = points.iter().map(|p| format!("{:.2e}", p.y)).collect();
    verdict(
        passed,
        &format!(
            "deviation {ys:?} at L=6..12, rate {:.3}, log-linear R² {:.4}",
            fit.coefficients[1], fit.r_squared
        ),
    )
}

fn criterion_5c_qlro_ln_ratio_scales_with_t_over_l() -> Verdict {
    let temp = 0.5;
    let rows = sweep(
        r#"
mode = "scaling"
n = 8
seed = 507
realizations = 200
temperatures = [0.5]
sizes = [[8, 8], [8, 12], [8, 16], [12, 8], [12, 12], [12, 16], [16, 8], [16, 12], [16, 16]]
"#,
    );
    let diag: Vec<f64> = [8, 12, 16]
        .iter()
        .map(|l| value(&rows, "order_parameter", *l, *l, temp).0)
        .collect();
    let gap = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let in_window = gap < 0.05 && diag.iter().all(|x| *x > 0.1 && *x < 0.9);
    let points: Vec<ScalingPoint> = rows
        .iter()
        .filter(|r| r.observable == "ln_ratio")
        .map(|r| ScalingPoint {
            l: r.l as f64,
            t: r.t as f64,
            y: r.value,
        })
        .collect();
    let linear = fit_scaling(&points, ScalingModel::LinearTOverL).unwrap();
    let exp_t = fit_scaling(&points, ScalingModel::ExpT).unwrap();
    let passed =
        in_window && points.len() == 9 && linear.r_squared > 0.9 && linear.rss() < exp_t.rss();
    verdict(passed,
        &format!(
            "T={temp} (L=t order parameter {diag:.3?}, gap {gap:.3}); linear_t_over_L R² {:.4} RSS {:.4}; exp_t R² {:.4} RSS {:.4}",
            linear.r_squared,
            linear.rss(),
            exp_t.r_squared,
            exp_t.rss()
        ),
    )
}

fn criterion_6_sharpening_time_phenomenology() -> Verdict {
    let sizes = [8usize, 12, 16];
    let sharp = sweep(
        r#"
mode = "sharpening"
n = 2
seed = 606
realizations = 30
temperatures = [0.3]
sizes = [[8, 2], [8, 4], [8, 8], [12, 2], [12, 4], [12, 8], [16, 2], [16, 4], [16, 8]]
"#,
    );
    let sharp_t = sharpening_times(&sharp, 0.5).unwrap();
    let sharp_ok = sharp_t.len() == 3
        && sharp_t
            .iter()
            .all(|s| s.t_sharp <= 4.0 && s.censoring != Censoring::NeverCrossed);

    let qlro_sizes: Vec<String> = sizes
        .iter()
        .flat_map(|l| [l / 2, *l, 3 * l / 2, 2 * l, 3 * l].map(|t| format!("[{l}, {t}]")))
        .collect();
    let qlro = sweep(&format!(
        r#"
mode = "sharpening"
n = 8
seed = 607
realizations = 100
temperatures = [0.5]
sizes = [{}]
"#,
        qlro_sizes.join(", ")
    ));
    let qlro_t = sharpening_times(&qlro, 0.5).unwrap();
    let crossed = qlro_t.len() == 3 && qlro_t.iter().all(|s| s.censoring == Censoring::Crossed);
    let growing = qlro_t.windows(2).all(|w| w[1].t_sharp > w[0].t_sharp);
    let per_l: Vec<f64> = qlro_t.iter().map(|s| s.t_sharp / s.l as f64).collect();
    let spread = per_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        / per_l.iter().cloned().fold(f64::INFINITY, f64::min);
    let qlro_ok = crossed && growing && spread <= 1.5;

    let fuzzy_sizes: Vec<String> = sizes
        .iter()
        .flat_map(|l| [*l, 2 * l, 4 * l].map(|t| format!("[{l}, {t}]")))
        .collect();
    let fuzzy = sweep(&format!(
        r#"
mode = "sharpening"
n = 2
seed = 608
realizations = 20
temperatures = [3.0]
sizes = [{}]
"#,
        fuzzy_sizes.join(", ")
    ));
    let fuzzy_t = sharpening_times(&fuzzy, 0.5).unwrap();
    let fuzzy_ok = fuzzy_t.len() == 3
        && fuzzy_t
            .iter()
            .all(|s| s.censoring == Censoring::NeverCrossed && s.t_sharp == 4.0 * s.l as f64);

    let fmt = |v: &[zn_harness::plot::SharpeningRow]| {
        v.iter()
            .map(|s| format!("L{}:{:.1}({:?})", s.l, s.t_sharp, s.censoring))
            .collect::<Vec<_>>()
            .join(" ")
    };
    verdict(
        sharp_ok && qlro_ok && fuzzy_ok,
        &format!(
            "sharp N=2 T=0.3 [{}]; QLRO N=8 T=0.5 [{}] t#/L {per_l:.2?}; fuzzy N=2 T=3 [{}]",
            fmt(&sharp_t),
            fmt(&qlro_t),
            fmt(&fuzzy_t)
        ),
    )
}

fn criterion_7_dense_state_checks() -> Verdict {
    let lattice = TorusLattice::new(2, 2).unwrap();
    let mut passed = true;
    let mut detail = Vec::new();
    for temp in [0.5, 1.0, 2.0] {
        let channel = ClockChannel::from_temperature(2, temp).unwrap();
        // Sector states: supports stay orthogonal, so D stays infinite.
        let mut a = decohered_logical_state(&lattice, &channel, 0).unwrap();
        let mut b = decohered_logical_state(&lattice, &channel, 1).unwrap();
        let mut sector_ok = true;
        let mut last = relative_entropy(&a, &b).unwrap();
        for _ in 0..3 {
            a = apply_channel(&a, &channel).unwrap();
            b = apply_channel(&b, &channel).unwrap();
            let next = relative_entropy(&a, &b).unwrap();
            // Non-increasing with +∞ above every finite value.
            sector_ok &= last.infinite || (!next.infinite && next.value <= last.value + 1e-10);
            last = next;
        }
        // Conjugate states: finite divergence that must not increase.
        let mut c0 = conjugate_logical_state(&lattice, &channel, 0).unwrap();
        let mut c1 = conjugate_logical_state(&lattice, &channel, 1).unwrap();
        let mut values = vec![relative_entropy(&c0, &c1).unwrap().value];
        for _ in 0..4 {
            c0 = apply_channel(&c0, &channel).unwrap();
            c1 = apply_channel(&c1, &channel).unwrap();
            values.push(relative_entropy(&c0, &c1).unwrap().value);
        }
        let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-10);
        let self_d = relative_entropy(&a, &a).unwrap();
        let self_ok = !self_d.infinite && self_d.value.abs() < 1e-10;
        passed &= sector_ok && monotone && self_ok;
        detail.push(format!(
            "T={temp}: sector D {} then {}, conjugate D {values:.4?}, D(ρ‖ρ) {:.1e}",
            if relative_entropy(
                &decohered_logical_state(&lattice, &channel, 0).unwrap(),
                &decohered_logical_state(&lattice, &channel, 1).unwrap()
            )
            .unwrap()
            .infinite
            {
                "inf"
            } else {
                "finite"
            },
            if last.infinite { "inf" } else { "finite" },
            self_d.value
        ));
    }
    let purities: Vec<f64> = [4.0, 2.0, 1.0, 0.5, 0.25]
        .iter()
        .map(|t| {
            decohered_logical_state(&lattice, &ClockChannel::from_temperature(2, *t).unwrap(), 0)
                .unwrap()
                .purity()
        })
        .collect();
    let purity_ok = purities.windows(2).all(|w| w[1] < w[0]);
    verdict(
        passed && purity_ok,
        &format!("{}; purity at T=4..0.25 {purities:.4?}", detail.join("; ")),
    )
}

fn criterion_8_cross_estimator_consistency() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::parse(
        r#"
mode = "oracle_check"
n = 2
seed = 808
realizations = 5
temperatures = [0.5, 1.0, 2.0]
l_equals_t = [3]
schedule = { burn_in = 100, measurements = 2000 }
oracle = { tolerance = 0.0, sigmas = 3.0, correlator = true }
local = { separation = 1, row = 1, schedule = { burn_in = 500, measurements = 40000 } }
"#,
        Format::Toml,
    )
    .unwrap();
    config.output_dir = dir.path().join("oracle");
    let outcome = run_sweep(&config).unwrap();
    // A chain that never leaves its state reports zero error; it cannot
    // resolve deviations below one part in its number of measurements.
    let resolution = 1.0 / config.local.schedule.measurements as f64;
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let mut within = true;
    for r in outcome.results.iter().filter_map(|r| r.record.as_ref()) {
        let c = r.correlator.as_ref().unwrap();
        let exact = c.exact.unwrap();
        compared += 1;
        let allowed = (3.0 * c.stderr).max(resolution);
        worst = worst.max((c.value - exact).abs() / allowed);
        within &= (c.value - exact).abs() <= allowed;
    }

    let local = |temp: f64, seed: u64| {
        sweep(&format!(
            r#"
mode = "local"
n = 2
seed = {seed}
realizations = 20
temperatures = [{temp}]
l_equals_t = [12]
local = {{ separation = 6 }}
"#
        ))
    };
    let (cold, cold_err) = value(&local(0.3, 809), "local_sharpening", 12, 12, 0.3);
    let (hot, hot_err) = value(&local(3.0, 810), "local_sharpening", 12, 12, 3.0);
    let passed = within && compared == 15 && cold > 0.5 && hot < 0.05;
    verdict(passed,
        &format!(
            "{compared} correlators, worst deviation {worst:.2} of max(3σ, 1/M); L=12 separation 6: T=0.3 {cold:.3}±{cold_err:.3}, T=3 {hot:.4}±{hot_err:.4}"
        ),
    )
}

fn criterion_9_reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let toml = |workers: usize| {
        format!(
            r#"
mode = "coherent_info"
n = 3
seed = 909
realizations = 12
temperatures = [0.8, 1.5]
sizes = [[4, 4], [6, 4]]
workers = {workers}
"#
        )
    };
    let csv = |name: &str, workers: usize| {
        let out = sweep_in(&dir, name, &toml(workers));
        std::fs::read(out.output_dir.join("observables.csv")).unwrap()
    };
    let a = csv("first", 1);
    let b = csv("second", 1);
    let c = csv("threads", 3);
    let passed = !a.is_empty() && a == b && a == c;
    verdict(
        passed,
        &format!(
            "{} CSV bytes; rerun identical {}, 3 workers identical {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

const CRITERIA: [(&str, fn() -> Verdict); 11] = [
    ("1 oracle equivalence", criterion_1_oracle_equivalence),
    ("2 analytic limits", criterion_2_analytic_limits),
    (
        "3 Z2 transition location",
        criterion_3_z2_transition_location,
    ),
    ("4 order-parameter structure", criterion_4_order_parameter_structure),
    (
        "5a ordered ln-ratio linear in t",
        criterion_5a_ordered_ln_ratio_linear_in_t,
    ),
    (
        "5b disordered deviation exponential in L",
        criterion_5b_disordered_deviation_decays_in_l,
    ),
    (
        "5c QLRO ln-ratio proportional to t/L",
        criterion_5c_qlro_ln_ratio_scales_with_t_over_l,
    ),
    (
        "6 sharpening-time phenomenology",
        criterion_6_sharpening_time_phenomenology,
    ),
    ("7 dense-state checks", criterion_7_dense_state_checks),
    (
        "8 Metropolis against oracle, local sharpening",
        criterion_8_cross_estimator_consistency,
    ),
    ("9 reproducibility", criterion_9_reproducibility),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in CRITERIA {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, &format!("panicked: {msg}"))
        });
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {name}: {} [{:.0}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
