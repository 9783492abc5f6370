//! Acceptance criteria. Every test prints one `[PASS]`/`[FAIL]` line; run with
//! `cargo test -p i2bias-cli --test acceptance -- --nocapture --test-threads 1`
//! to see them in order.

use std::process::Command;
use std::thread;

use i2bias_core::bias::{bias_point, expectation_closed_form, expectation_quadrature, BiasQuery};
use i2bias_core::ci::i2_confidence_interval;
use i2bias_core::meta::noncentrality_equal_sigma;
use i2bias_core::sim::{simulate, simulate_ci_coverage, SimConfig, SimMode};
use i2bias_core::specfun::{chisq_cdf, ln_gamma, upper_incomplete_gamma, ChiSquareParams};

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {id}: {name} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {name}: {detail}");
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    lo <= v && v <= hi
}

#[test]
fn criterion_01_headline_bias() {
    let e = expectation_closed_form(6).unwrap();
    verdict(
        1,
        "E(Î₀²) at K=7, I²=0 in [0.1240, 0.1250]",
        in_range(e, 0.1240, 0.1250),
        &format!("{e:.6}"),
    );
}

#[test]
fn criterion_02_figure1_anchors() {
    let cases = [
        (4u32, 0.1345, 0.1355),
        (9, 0.1115, 0.1125),
        (49, 0.055, 0.065),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (df, lo, hi) in cases {
        let e = expectation_closed_form(df).unwrap();
        ok &= in_range(e, lo, hi);
        detail.push(format!("df={df}: {e:.6} in [{lo}, {hi}]"));
    }
    verdict(
        2,
        "closed-form anchors at K=5, 10, 50",
        ok,
        &detail.join("; "),
    );
}

#[test]
fn criterion_03_closed_form_equals_quadrature() {
    let mut worst = (0u32, 0.0f64);
    for df in 3..=200u32 {
        let d =
            (expectation_closed_form(df).unwrap() - expectation_quadrature(df, 0.0).unwrap()).abs();
        if d > worst.1 {
            worst = (df, d);
        }
    }
    verdict(
        3,
        "max |closed form − quadrature| over df 3..=200 < 1e-8",
        worst.1 < 1e-8,
        &format!("max {:.3e} at df={}", worst.1, worst.0),
    );
}

/// E₁(x) by its convergent power series.
fn exponential_integral_e1(x: f64) -> f64 {
    let euler = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..200 {
        term *= -x / n as f64;
        sum += term / n as f64;
    }
    -euler - x.ln() - sum
}

#[test]
fn criterion_04_df2_quadrature() {
    let oracle = (-1.0f64).exp() - exponential_integral_e1(1.0);
    let e = expectation_quadrature(2, 0.0).unwrap();
    let pass = in_range(e, 0.14845, 0.14855) && (e - oracle).abs() < 1e-9;
    verdict(
        4,
        "E(Î₀²) at df=2 in [0.14845, 0.14855]",
        pass,
        &format!("{e:.8}, e^-1 − E1(1) = {oracle:.8}"),
    );
}

#[test]
fn criterion_05_monte_carlo_agreement() {
    let ks = [3u32, 5, 7, 10, 25];
    let i2s = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9];
    let mut failures = Vec::new();
    let mut worst_z = 0.0f64;
    for (ci, &k) in ks.iter().enumerate() {
        for (cj, &i2) in i2s.iter().enumerate() {
            let seed = 5_000 + (ci * i2s.len() + cj) as u64;
            let cfg = SimConfig::new(k, i2, SimMode::FixedEffectsCalibrated, 200_000, seed);
            let sim = simulate(&cfg).unwrap();
            let lambda = noncentrality_equal_sigma(k, i2).unwrap();
            let exact = expectation_quadrature(k - 1, lambda).unwrap();
            let z = (sim.mean_i2_hat - exact) / sim.std_error_of_mean;
            worst_z = worst_z.max(z.abs());
            if z.abs() >= 3.0 {
                failures.push(format!(
                    "K={k} I²={i2}: sim {:.5} vs {exact:.5} (z={z:.2})",
                    sim.mean_i2_hat
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("45 cells, max |z| = {worst_z:.2}")
    } else {
        failures.join("; ")
    };
    verdict(
        5,
        "fixed-mode simulation within 3 SE of quadrature",
        failures.is_empty(),
        &detail,
    );
}

#[test]
fn criterion_06_figure3_sign_pattern() {
    let bias = |i2: f64| bias_point(&BiasQuery::new(10, i2).unwrap()).unwrap().bias;
    let mut ok = true;
    let mut detail = Vec::new();
    for i2 in [0.0, 0.05, 0.1] {
        let b = bias(i2);
        ok &= b > 0.01;
        detail.push(format!("{i2}:{b:+.4}"));
    }
    let b = bias(0.2);
    ok &= b.abs() < 0.03;
    detail.push(format!("0.2:{b:+.4}"));
    for i2 in [0.3, 0.4, 0.5] {
        let b = bias(i2);
        ok &= b < -0.01;
        detail.push(format!("{i2}:{b:+.4}"));
    }
    let b = bias(0.8);
    ok &= b.abs() < 0.02;
    detail.push(format!("0.8:{b:+.4}"));
    verdict(6, "bias sign pattern at K=10", ok, &detail.join(" "));
}

#[test]
fn criterion_07_zero_rounding_probability() {
    let mut failures = Vec::new();
    let mut min_p = 1.0f64;
    for k in 3..=50u32 {
        let cfg = SimConfig::new(
            k,
            0.0,
            SimMode::FixedEffectsCalibrated,
            100_000,
            700 + u64::from(k),
        );
        let sim = simulate(&cfg).unwrap();
        let se = sim.prob_zero_std_error();
        let df = f64::from(k - 1);
        let exact = chisq_cdf(df, &ChiSquareParams::central(df).unwrap()).unwrap();
        min_p = min_p.min(sim.prob_zero);
        let ok = sim.prob_zero > 0.5 - 3.0 * se && exact > 0.5;
        if !ok {
            failures.push(format!(
                "K={k}: sim {:.4} ± {se:.4}, exact {exact:.4}",
                sim.prob_zero
            ));
        }
    }
    let detail = if failures.is_empty() {
        format!("K = 3..=50, smallest simulated P = {min_p:.4}")
    } else {
        failures.join("; ")
    };
    verdict(
        7,
        "P(Î₀² = 0) > 0.5 at I² = 0",
        failures.is_empty(),
        &detail,
    );
}

#[test]
fn criterion_08_interval_behaviour() {
    let mut ok = true;
    let mut detail = Vec::new();
    for df in [2u32, 4, 9, 19, 49] {
        let ci = i2_confidence_interval(f64::from(df), df).unwrap();
        if ci.lower != 0.0 {
            ok = false;
            detail.push(format!("Q=df={df}: lower {}", ci.lower));
        }
    }
    for (ci_k, &k) in [5u32, 10, 20].iter().enumerate() {
        for (ci_i, &i2) in [0.0, 0.3, 0.6].iter().enumerate() {
            let seed = 9_000 + (ci_k * 3 + ci_i) as u64;
            let cfg = SimConfig::new(k, i2, SimMode::FixedEffectsCalibrated, 20_000, seed);
            let cov = simulate_ci_coverage(&cfg).unwrap();
            let cell_ok = in_range(cov.coverage, 0.93, 0.97);
            ok &= cell_ok;
            detail.push(format!(
                "K={k} I²={i2}: {:.4}{}",
                cov.coverage,
                if cell_ok { "" } else { " OUT" }
            ));
        }
    }
    verdict(
        8,
        "lower bound 0 at Q=df; coverage in [0.93, 0.97]",
        ok,
        &detail.join("; "),
    );
}

#[test]
fn criterion_09_special_function_identities() {
    let mut worst_boundary = 0.0f64;
    for i in 1..=100 {
        let a = 0.25 * i as f64;
        let full = ln_gamma(a).unwrap().exp();
        let r = ((upper_incomplete_gamma(a, 0.0).unwrap() - full) / full).abs();
        worst_boundary = worst_boundary.max(r);
    }
    let mut worst_recurrence = 0.0f64;
    for i in 1..=50 {
        let a = 0.5 * i as f64;
        for x in [0.1, 1.0, 10.0] {
            let lhs = upper_incomplete_gamma(a + 1.0, x).unwrap();
            let rhs = a * upper_incomplete_gamma(a, x).unwrap() + x.powf(a) * (-x).exp();
            worst_recurrence = worst_recurrence.max(((lhs - rhs) / rhs).abs());
        }
    }
    let pass = worst_boundary < 1e-10 && worst_recurrence < 1e-9;
    verdict(
        9,
        "Γ(a,0)=Γ(a) to 1e-10 and Γ(a+1,x)=aΓ(a,x)+x^a e^-x to 1e-9",
        pass,
        &format!("boundary {worst_boundary:.2e}, recurrence {worst_recurrence:.2e}"),
    );
}

fn run_simulate(threads: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_i2bias"));
    cmd.args([
        "simulate", "--k", "7", "--i2", "0.3", "--reps", "50000", "--seed", "42",
    ]);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    let out = cmd.output().expect("run i2bias");
    assert!(out.status.success());
    out.stdout
}

#[test]
fn criterion_10_determinism() {
    let reference = run_simulate(None);
    let mut outputs = vec![
        run_simulate(None),
        run_simulate(Some("1")),
        run_simulate(Some("4")),
    ];
    let handles: Vec<_> = ["1", "2", "3", "8"]
        .into_iter()
        .map(|t| thread::spawn(move || run_simulate(Some(t))))
        .collect();
    outputs.extend(handles.into_iter().map(|h| h.join().unwrap()));
    let identical = outputs.iter().all(|o| *o == reference);
    verdict(
        10,
        "repeated and concurrent `simulate` runs are byte-identical",
        identical && !reference.is_empty(),
        &format!("{} runs compared", outputs.len() + 1),
    );
}
