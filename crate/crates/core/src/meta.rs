//! Study data and the heterogeneity estimator pipeline.

use serde::{Deserialize, Serialize};

use crate::specfun::{chisq_sf, ChiSquareParams};
use crate::{Error, Result};

/// One observed study: an estimated effect and its estimated standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub id: String,
    pub effect: f64,
    pub std_err: f64,
}

impl Study {
    pub fn new(id: impl Into<String>, effect: f64, std_err: f64) -> Result<Self> {
        if !effect.is_finite() {
            return Err(Error::domain(format!(
                "effect must be finite, got {effect}"
            )));
        }
        if !(std_err > 0.0) || !std_err.is_finite() {
            return Err(Error::domain(format!(
                "std_err must be positive and finite, got {std_err}"
            )));
        }
        Ok(Self {
            id: id.into(),
            effect,
            std_err,
        })
    }

    /// Inverse-variance weight.
    pub fn weight(&self) -> f64 {
        1.0 / (self.std_err * self.std_err)
    }
}

/// A meta-analysis of at least two studies.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaAnalysis {
    studies: Vec<Study>,
}

impl MetaAnalysis {
    pub fn new(studies: Vec<Study>) -> Result<Self> {
        if studies.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a meta-analysis needs at least 2 studies, got {}",
                studies.len()
            )));
        }
        Ok(Self { studies })
    }

    /// Builds studies labelled `1..=K` from parallel effect / std_err slices.
    pub fn from_slices(effects: &[f64], std_errs: &[f64]) -> Result<Self> {
        if effects.len() != std_errs.len() {
            return Err(Error::domain(format!(
                "{} effects but {} standard errors",
                effects.len(),
                std_errs.len()
            )));
        }
        let studies = effects
            .iter()
            .zip(std_errs)
            .enumerate()
            .map(|(i, (&e, &s))| Study::new((i + 1).to_string(), e, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(studies)
    }

    pub fn studies(&self) -> &[Study] {
        &self.studies
    }

    pub fn k(&self) -> usize {
        self.studies.len()
    }

    pub fn df(&self) -> u32 {
        (self.studies.len() - 1) as u32
    }
}

/// Precision-weighted average of the study effects.
pub fn pooled_effect(studies: &[Study]) -> Result<f64> {
    if studies.is_empty() {
        return Err(Error::InsufficientData(
            "pooled effect of zero studies".into(),
        ));
    }
    // Weighted mean of offsets from the first effect; identical effects
    // then pool to exactly that effect.
    let origin = studies[0].effect;
    let (num, den) = studies.iter().fold((0.0, 0.0), |(n, d), s| {
        let w = s.weight();
        (n + w * (s.effect - origin), d + w)
    });
    Ok(origin + num / den)
}

/// Cochran's Q: weighted squared deviations from the pooled effect.
pub fn cochran_q(studies: &[Study]) -> Result<f64> {
    if studies.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "Cochran's Q needs at least 2 studies, got {}",
            studies.len()
        )));
    }
    let pooled = pooled_effect(studies)?;
    Ok(studies
        .iter()
        .map(|s| {
            let d = s.effect - pooled;
            d * d * s.weight()
        })
        .sum())
}

/// Cochran's Q for a common known standard error, without building
/// [`Study`] values. With equal weights the pooled effect is the simple
/// mean, so Q reduces to Σ(y − ȳ)²/σ². Used by the simulator's inner loop.
pub fn cochran_q_equal_se(effects: &[f64], std_err: f64) -> Result<f64> {
    if effects.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "Cochran's Q needs at least 2 studies, got {}",
            effects.len()
        )));
    }
    check_sigma(std_err)?;
    let origin = effects[0];
    let mean = origin + effects.iter().map(|y| y - origin).sum::<f64>() / effects.len() as f64;
    let ss: f64 = effects.iter().map(|y| (y - mean) * (y - mean)).sum();
    Ok(ss / (std_err * std_err))
}

/// The raw estimator `1 − df/Q` and its zero-truncated form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct I2Estimate {
    /// `None` when Q = 0, where the raw estimator is undefined.
    pub raw: Option<f64>,
    pub truncated: f64,
}

pub fn i2_hat(q: f64, df: u32) -> Result<I2Estimate> {
    if df < 1 {
        return Err(Error::domain("df must be at least 1"));
    }
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("Q must be finite and >= 0, got {q}")));
    }
    if q == 0.0 {
        return Ok(I2Estimate {
            raw: None,
            truncated: 0.0,
        });
    }
    let raw = 1.0 - f64::from(df) / q;
    Ok(I2Estimate {
        raw: Some(raw),
        truncated: raw.max(0.0),
    })
}

/// Noncentrality of Q for arbitrary true effects and standard errors.
///
/// The centre is the simple mean of the true effects.
pub fn noncentrality_general(true_effects: &[f64], sigmas: &[f64]) -> Result<f64> {
    if true_effects.len() != sigmas.len() {
        return Err(Error::domain(format!(
            "{} true effects but {} sigmas",
            true_effects.len(),
            sigmas.len()
        )));
    }
    if true_effects.len() < 2 {
        return Err(Error::InsufficientData("noncentrality needs K >= 2".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::domain(format!("sigma must be positive, got {s}")));
    }
    let mean = true_effects.iter().sum::<f64>() / true_effects.len() as f64;
    Ok(true_effects
        .iter()
        .zip(sigmas)
        .map(|(b, s)| {
            let d = b - mean;
            d * d / (s * s)
        })
        .sum())
}

/// Noncentrality with a common σ: `K·I²/(1 − I²)`.
pub fn noncentrality_equal_sigma(k: u32, i2: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InsufficientData(format!("K must be >= 2, got {k}")));
    }
    check_i2(i2)?;
    Ok(f64::from(k) * i2 / (1.0 - i2))
}

pub(crate) fn check_i2(i2: f64) -> Result<()> {
    if !(0.0..1.0).contains(&i2) {
        return Err(Error::domain(format!("I² must lie in [0, 1), got {i2}")));
    }
    Ok(())
}

/// True-parameter view of an equal-σ population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruePopulation {
    mean_effect: f64,
    tau2: f64,
    sigma: f64,
    i2_true: f64,
}

impl TruePopulation {
    pub fn from_tau2(mean_effect: f64, tau2: f64, sigma: f64) -> Result<Self> {
        if !(tau2 >= 0.0) || !tau2.is_finite() {
            return Err(Error::domain(format!(
                "tau² must be finite and >= 0, got {tau2}"
            )));
        }
        check_sigma(sigma)?;
        let s2 = sigma * sigma;
        Ok(Self {
            mean_effect,
            tau2,
            sigma,
            i2_true: tau2 / (tau2 + s2),
        })
    }

    pub fn from_i2(mean_effect: f64, i2: f64, sigma: f64) -> Result<Self> {
        check_i2(i2)?;
        check_sigma(sigma)?;
        let tau2 = sigma * sigma * i2 / (1.0 - i2);
        Ok(Self {
            mean_effect,
            tau2,
            sigma,
            i2_true: i2,
        })
    }

    /// Recovers σ from τ² and I² (requires I² > 0).
    pub fn from_tau2_i2(mean_effect: f64, tau2: f64, i2: f64) -> Result<Self> {
        check_i2(i2)?;
        if !(i2 > 0.0) {
            return Err(Error::domain("σ is not identified from τ² when I² = 0"));
        }
        let sigma = (tau2 * (1.0 - i2) / i2).sqrt();
        check_sigma(sigma)?;
        Ok(Self {
            mean_effect,
            tau2,
            sigma,
            i2_true: i2,
        })
    }

    pub fn mean_effect(&self) -> f64 {
        self.mean_effect
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn i2_true(&self) -> f64 {
        self.i2_true
    }

    /// Variance of a single study's estimate, τ² + σ².
    pub fn estimate_variance(&self) -> f64 {
        self.tau2 + self.sigma * self.sigma
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::domain(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    Ok(())
}

/// Everything reported for one meta-analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeterogeneityReport {
    pub pooled_effect: f64,
    pub q_stat: f64,
    pub df: u32,
    /// `None` when Q = 0.
    pub i2_raw: Option<f64>,
    pub i2: f64,
    /// Homogeneity test p-value, P(χ²_df > Q).
    pub p_value: f64,
}

pub fn analyze(m: &MetaAnalysis) -> Result<HeterogeneityReport> {
    let studies = m.studies();
    let pooled = pooled_effect(studies)?;
    let q = cochran_q(studies)?;
    let df = m.df();
    let est = i2_hat(q, df)?;
    let p_value = chisq_sf(q, &ChiSquareParams::central(f64::from(df))?)?;
    Ok(HeterogeneityReport {
        pooled_effect: pooled,
        q_stat: q,
        df,
        i2_raw: est.raw,
        i2: est.truncated,
        p_value,
    })
}
