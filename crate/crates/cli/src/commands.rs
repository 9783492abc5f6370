//! Subcommand implementations. Each returns the text destined for stdout.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use i2bias_core::bias::{bias_curve, bias_point, BiasQuery, Method};
use i2bias_core::ci::{i2_confidence_interval, IntervalEstimate};
use i2bias_core::meta::{analyze, HeterogeneityReport, MetaAnalysis};
use i2bias_core::sim::{simulate, SimConfig, SimMode};

use crate::error::{CliError, CliResult};
use crate::figure::{
    fmt_sig, grid_to_csv, render_svg, render_svg_grid, series_to_csv, FigureSeries,
};
use crate::input::read_studies_file;

pub const MAX_K: u32 = 500;

#[derive(Debug, Serialize)]
struct AnalyzeOutput {
    k: usize,
    #[serde(flatten)]
    report: HeterogeneityReport,
    ci: Option<IntervalEstimate>,
}

pub fn cmd_analyze(path: &Path, json: bool) -> CliResult<String> {
    let studies = read_studies_file(path)?;
    let meta = MetaAnalysis::new(studies)?;
    let report = analyze(&meta)?;
    let ci = if report.df >= 2 {
        Some(i2_confidence_interval(report.q_stat, report.df)?)
    } else {
        None
    };

    if json {
        let out = AnalyzeOutput {
            k: meta.k(),
            report,
            ci,
        };
        let mut s = serde_json::to_string(&out)
            .map_err(|e| CliError::Numeric(format!("cannot serialise report: {e}")))?;
        s.push('\n');
        return Ok(s);
    }

    let mut s = String::new();
    let _ = writeln!(s, "studies          {}", meta.k());
    let _ = writeln!(s, "pooled effect    {}", fmt_sig(report.pooled_effect));
    let _ = writeln!(s, "Q                {}", fmt_sig(report.q_stat));
    let _ = writeln!(s, "df               {}", report.df);
    let _ = writeln!(s, "p-value          {}", fmt_sig(report.p_value));
    match report.i2_raw {
        Some(raw) => {
            let _ = writeln!(s, "I² raw           {}", fmt_sig(raw));
        }
        None => {
            let _ = writeln!(s, "I² raw           undefined (Q = 0)");
        }
    }
    let _ = writeln!(s, "I²               {}", fmt_sig(report.i2));
    match ci {
        Some(ci) => {
            let _ = write!(
                s,
                "95% CI for I²    [{}, {}]",
                fmt_sig(ci.lower),
                fmt_sig(ci.upper)
            );
            if ci.degenerate {
                s.push_str("  degenerate (Q = 0)");
            }
            s.push('\n');
        }
        None => {
            let _ = writeln!(s, "95% CI for I²    unavailable (needs K >= 3)");
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureFormat {
    Csv,
    Svg,
}

/// Which true-I² values to plot.
#[derive(Debug, Clone, PartialEq)]
pub enum I2Selection {
    Single(f64),
    Grid(Vec<f64>),
}

/// Parses `start:stop:step` into the inclusive list of values.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::invalid(format!(
            "grid must be start:stop:step, got `{spec}`"
        )));
    }
    let num = |t: &str| -> CliResult<f64> {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::invalid(format!("bad grid number `{t}`")))
    };
    let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || stop < start {
        return Err(CliError::invalid(format!(
            "grid `{spec}` is empty or has a non-positive step"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000 {
        return Err(CliError::invalid(format!(
            "grid `{spec}` has too many points"
        )));
    }
    // Snap to 12 decimals so 0.1 + 2·0.1 reads as 0.3.
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn check_i2(i2: f64) -> CliResult<()> {
    if !(0.0..1.0).contains(&i2) {
        return Err(CliError::invalid(format!(
            "I² must lie in [0, 1), got {i2}"
        )));
    }
    Ok(())
}

pub fn build_series(i2: f64, k_min: u32, k_max: u32) -> CliResult<FigureSeries> {
    check_i2(i2)?;
    if k_min < 2 || k_min > k_max || k_max > MAX_K {
        return Err(CliError::invalid(format!(
            "need 2 <= k-min <= k-max <= {MAX_K}, got {k_min}..{k_max}"
        )));
    }
    let points = bias_curve(i2, k_min, k_max)?;
    FigureSeries::from_points(i2, &points)
}

pub fn cmd_bias_curve(
    selection: &I2Selection,
    k_min: u32,
    k_max: u32,
    out: &Path,
    format: FigureFormat,
) -> CliResult<String> {
    let (body, n_series) = match selection {
        I2Selection::Single(i2) => {
            let s = build_series(*i2, k_min, k_max)?;
            let body = match format {
                FigureFormat::Csv => series_to_csv(&s),
                FigureFormat::Svg => render_svg(&s),
            };
            (body, 1)
        }
        I2Selection::Grid(values) => {
            let series = values
                .iter()
                .map(|&i2| build_series(i2, k_min, k_max))
                .collect::<CliResult<Vec<_>>>()?;
            let body = match format {
                FigureFormat::Csv => grid_to_csv(&series),
                FigureFormat::Svg => render_svg_grid(&series),
            };
            (body, series.len())
        }
    };
    std::fs::write(out, body)
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", out.display())))?;
    Ok(format!(
        "wrote {n_series} series x {} points to {}\n",
        k_max - k_min + 1,
        out.display()
    ))
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    config: SimConfig,
    mean_i2_hat: f64,
    std_error_of_mean: f64,
    prob_zero: f64,
    mean_i2_raw: f64,
    analytic_expectation: f64,
    analytic_method: Method,
    difference: f64,
    agree: bool,
}

pub fn cmd_simulate(
    k: u32,
    i2: f64,
    reps: u64,
    seed: u64,
    mode: SimMode,
    json: bool,
) -> CliResult<String> {
    let cfg = SimConfig::new(k, i2, mode, reps, seed);
    cfg.validate()
        .map_err(|e| CliError::invalid(e.to_string()))?;
    let sim = simulate(&cfg)?;
    let analytic = bias_point(&BiasQuery::new(k, i2)?)?;
    let diff = sim.mean_i2_hat - analytic.expectation;
    let agree = diff.abs() < 3.0 * sim.std_error_of_mean;

    if json {
        let out = SimulateOutput {
            config: cfg,
            mean_i2_hat: sim.mean_i2_hat,
            std_error_of_mean: sim.std_error_of_mean,
            prob_zero: sim.prob_zero,
            mean_i2_raw: sim.mean_i2_raw,
            analytic_expectation: analytic.expectation,
            analytic_method: analytic.method,
            difference: diff,
            agree,
        };
        let mut s = serde_json::to_string(&out)
            .map_err(|e| CliError::Numeric(format!("cannot serialise result: {e}")))?;
        s.push('\n');
        return Ok(s);
    }

    let mode_name = match mode {
        SimMode::FixedEffectsCalibrated => "fixed",
        SimMode::RandomEffects => "random",
    };
    let method = match analytic.method {
        Method::ClosedForm => "closed form",
        Method::Quadrature => "quadrature",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "K = {k}, I² = {i2}, mode = {mode_name}, reps = {reps}, seed = {seed}"
    );
    let _ = writeln!(s, "mean I²          {}", fmt_sig(sim.mean_i2_hat));
    let _ = writeln!(s, "Monte Carlo SE   {}", fmt_sig(sim.std_error_of_mean));
    let _ = writeln!(s, "P(I² = 0)        {}", fmt_sig(sim.prob_zero));
    let _ = writeln!(s, "mean raw I²      {}", fmt_sig(sim.mean_i2_raw));
    let _ = writeln!(
        s,
        "analytic E(I²)   {} ({method})",
        fmt_sig(analytic.expectation)
    );
    let _ = writeln!(s, "difference       {}", fmt_sig(diff));
    let _ = writeln!(
        s,
        "verdict          {} (|difference| {} 3 SE)",
        if agree { "AGREE" } else { "DISAGREE" },
        if agree { "<" } else { ">=" }
    );
    Ok(s)
}

pub fn cmd_ci(q: f64, df: u32) -> CliResult<String> {
    let ci = i2_confidence_interval(q, df).map_err(|e| CliError::invalid(e.to_string()))?;
    let mut s = String::new();
    let _ = writeln!(s, "I²               {}", fmt_sig(ci.point));
    let _ = write!(
        s,
        "95% CI           [{}, {}]",
        fmt_sig(ci.lower),
        fmt_sig(ci.upper)
    );
    if ci.degenerate {
        s.push_str("  degenerate (Q = 0)");
    }
    s.push('\n');
    Ok(s)
}
