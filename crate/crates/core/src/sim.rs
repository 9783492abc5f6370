//! Seeded Monte Carlo simulation of equal-σ meta-analyses.
//!
//! Replications are grouped into fixed-size blocks. Block `b` draws from a
//! ChaCha8 stream keyed by the seed with stream id `b`, so every replication
//! owns a fixed slice of one keystream regardless of how blocks are
//! scheduled. Block summaries are reduced in block order, which makes the
//! result bit-identical across thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::ci::i2_confidence_interval;
use crate::meta::{check_i2, cochran_q_equal_se, i2_hat};
use crate::{Error, Result};

/// Replications per RNG stream.
pub const BLOCK_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// True effects fixed once with Σ(β − β̄)² = Kτ², so Q is exactly
    /// noncentral χ²(K − 1, Kτ²/σ²).
    FixedEffectsCalibrated,
    /// True effects redrawn from N(β̄, τ²) every replication, so Q is
    /// (1/(1 − I²))·χ²_{K−1}.
    RandomEffects,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub k: u32,
    pub i2_true: f64,
    pub sigma: f64,
    pub mode: SimMode,
    pub reps: u64,
    pub seed: u64,
}

impl SimConfig {
    /// σ = 1, which loses nothing since Q is scale-free.
    pub fn new(k: u32, i2_true: f64, mode: SimMode, reps: u64, seed: u64) -> Self {
        Self {
            k,
            i2_true,
            sigma: 1.0,
            mode,
            reps,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InsufficientData(format!(
                "K must be >= 2, got {}",
                self.k
            )));
        }
        check_i2(self.i2_true)?;
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.reps == 0 {
            return Err(Error::domain("reps must be >= 1"));
        }
        Ok(())
    }

    /// τ² = σ²·I²/(1 − I²).
    pub fn tau2(&self) -> f64 {
        self.sigma * self.sigma * self.i2_true / (1.0 - self.i2_true)
    }

    pub fn df(&self) -> u32 {
        self.k - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub mean_i2_hat: f64,
    /// Mean of 1 − df/Q over replications with Q > 0.
    pub mean_i2_raw: f64,
    /// Fraction of replications with Q <= df, i.e. Î₀² = 0.
    pub prob_zero: f64,
    /// Sample standard deviation of Î₀² over √reps.
    pub std_error_of_mean: f64,
    pub reps_used: u64,
}

impl SimResult {
    /// Binomial standard error of `prob_zero`.
    pub fn prob_zero_std_error(&self) -> f64 {
        (self.prob_zero * (1.0 - self.prob_zero) / self.reps_used as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageResult {
    pub coverage: f64,
    /// Binomial standard error of `coverage`.
    pub std_error: f64,
    pub reps_used: u64,
}

/// True effects with simple mean `mean` and Σ(β − mean)² = K·τ².
///
/// Even K: half at mean − τ, half at mean + τ. Odd K: (K−1)/2 at each of
/// mean ± a and one at the mean, with a = τ·√(K/(K−1)).
pub fn calibrated_true_effects(k: u32, mean: f64, tau2: f64) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InsufficientData(format!("K must be >= 2, got {k}")));
    }
    if !(tau2 >= 0.0) || !tau2.is_finite() {
        return Err(Error::domain(format!(
            "tau² must be finite and >= 0, got {tau2}"
        )));
    }
    let k = k as usize;
    let half = k / 2;
    let spread = if k.is_multiple_of(2) {
        tau2.sqrt()
    } else {
        (k as f64 * tau2 / (k - 1) as f64).sqrt()
    };
    let mut effects = Vec::with_capacity(k);
    effects.extend(std::iter::repeat_n(mean - spread, half));
    if k % 2 == 1 {
        effects.push(mean);
    }
    effects.extend(std::iter::repeat_n(mean + spread, half));
    Ok(effects)
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockSummary {
    n: u64,
    sum_i2: f64,
    sum_i2_sq: f64,
    n_raw: u64,
    sum_raw: f64,
    n_zero: u64,
    n_covered: u64,
}

impl BlockSummary {
    fn merge(mut self, other: &BlockSummary) -> Self {
        self.n += other.n;
        self.sum_i2 += other.sum_i2;
        self.sum_i2_sq += other.sum_i2_sq;
        self.n_raw += other.n_raw;
        self.sum_raw += other.sum_raw;
        self.n_zero += other.n_zero;
        self.n_covered += other.n_covered;
        self
    }
}

fn run_block(
    cfg: &SimConfig,
    fixed_effects: &[f64],
    block: u64,
    with_ci: bool,
) -> Result<BlockSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(block);

    let start = block * BLOCK_SIZE;
    let end = (start + BLOCK_SIZE).min(cfg.reps);
    let df = cfg.df();
    let tau = cfg.tau2().sqrt();
    let mut observed = vec![0.0; cfg.k as usize];
    let mut out = BlockSummary::default();

    for _ in start..end {
        match cfg.mode {
            SimMode::FixedEffectsCalibrated => {
                for (y, beta) in observed.iter_mut().zip(fixed_effects) {
                    let z: f64 = rng.sample(StandardNormal);
                    *y = beta + cfg.sigma * z;
                }
            }
            SimMode::RandomEffects => {
                for y in observed.iter_mut() {
                    let zb: f64 = rng.sample(StandardNormal);
                    let ze: f64 = rng.sample(StandardNormal);
                    let beta = tau * zb;
                    *y = beta + cfg.sigma * ze;
                }
            }
        }
        let q = cochran_q_equal_se(&observed, cfg.sigma)?;
        let est = i2_hat(q, df)?;
        out.n += 1;
        out.sum_i2 += est.truncated;
        out.sum_i2_sq += est.truncated * est.truncated;
        if let Some(raw) = est.raw {
            out.n_raw += 1;
            out.sum_raw += raw;
        }
        if q <= f64::from(df) {
            out.n_zero += 1;
        }
        if with_ci && i2_confidence_interval(q, df)?.contains(cfg.i2_true) {
            out.n_covered += 1;
        }
    }
    Ok(out)
}

fn run(cfg: &SimConfig, with_ci: bool) -> Result<BlockSummary> {
    cfg.validate()?;
    // β̄ = 0; Q does not depend on location.
    let fixed = match cfg.mode {
        SimMode::FixedEffectsCalibrated => calibrated_true_effects(cfg.k, 0.0, cfg.tau2())?,
        SimMode::RandomEffects => Vec::new(),
    };
    let blocks = cfg.reps.div_ceil(BLOCK_SIZE);
    let summaries = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(cfg, &fixed, b, with_ci))
        .collect::<Result<Vec<_>>>()?;
    Ok(summaries
        .iter()
        .fold(BlockSummary::default(), BlockSummary::merge))
}

/// Runs `cfg.reps` replications and summarises Î₀².
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    let s = run(cfg, false)?;
    let n = s.n as f64;
    let mean = s.sum_i2 / n;
    let var = if s.n > 1 {
        ((s.sum_i2_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimResult {
        mean_i2_hat: mean,
        mean_i2_raw: if s.n_raw > 0 {
            s.sum_raw / s.n_raw as f64
        } else {
            f64::NAN
        },
        prob_zero: s.n_zero as f64 / n,
        std_error_of_mean: (var / n).sqrt(),
        reps_used: s.n,
    })
}

/// Fraction of replications whose 95% interval contains the true I².
/// Requires K >= 3.
pub fn simulate_ci_coverage(cfg: &SimConfig) -> Result<CoverageResult> {
    if cfg.k < 3 {
        return Err(Error::domain("interval coverage needs K >= 3"));
    }
    let s = run(cfg, true)?;
    let p = s.n_covered as f64 / s.n as f64;
    Ok(CoverageResult {
        coverage: p,
        std_error: (p * (1.0 - p) / s.n as f64).sqrt(),
        reps_used: s.n,
    })
}
