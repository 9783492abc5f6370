//! Expectation and bias of the truncated estimator Î₀² = max(0, 1 − df/Q).
//!
//! Under homogeneity Q is central χ²_df and the expectation has a closed
//! form in the upper incomplete gamma function. Under heterogeneity Q is
//! noncentral χ²(df, λ) with λ = K·I²/(1 − I²), and the expectation
//!
//! ```text
//! E(Î₀²) = ∫_df^∞ (1 − df/q) f(q; df, λ) dq
//! ```
//!
//! is evaluated by adaptive quadrature. Values of Q below df contribute
//! nothing since Î₀² is zero there.

use rayon::prelude::*;
use serde::Serialize;

use crate::meta::{check_i2, noncentrality_equal_sigma};
use crate::quad::{integrate_to_infinity, QuadOptions};
use crate::specfun::{chisq_pdf, ln_gamma, regularized_gamma_q, ChiSquareParams};
use crate::{Error, Result};

/// Absolute accuracy targeted by the quadrature path.
pub const QUADRATURE_ABS_TOL: f64 = 1e-11;

/// An (K, I²) configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasQuery {
    pub k: u32,
    pub i2_true: f64,
}

impl BiasQuery {
    pub fn new(k: u32, i2_true: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InsufficientData(format!("K must be >= 2, got {k}")));
        }
        check_i2(i2_true)?;
        let q = Self { k, i2_true };
        if !q.lambda().is_finite() {
            return Err(Error::domain(format!(
                "noncentrality overflows for I² = {i2_true}"
            )));
        }
        Ok(q)
    }

    pub fn df(&self) -> u32 {
        self.k - 1
    }

    pub fn lambda(&self) -> f64 {
        f64::from(self.k) * self.i2_true / (1.0 - self.i2_true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasPoint {
    pub query: BiasQuery,
    pub expectation: f64,
    /// `expectation − i2_true`.
    pub bias: f64,
    pub method: Method,
}

/// E(Î₀²) under homogeneity, for df ≥ 3:
///
/// ```text
/// (df/(df−2)) · [ (df/(2e))^{df/2} − Γ(df/2, df/2) ] / Γ(df/2 + 1)
/// ```
///
/// With a = df/2, Γ(a, a)/Γ(a + 1) = Q(a, a)/a, and the power term is
/// taken as exp(a·ln a − a − ln Γ(a + 1)), so nothing overflows.
pub fn expectation_closed_form(df: u32) -> Result<f64> {
    if df < 3 {
        return Err(Error::domain(format!(
            "closed form requires df >= 3 (got {df}); use the quadrature path"
        )));
    }
    let df = f64::from(df);
    let a = 0.5 * df;
    let power_term = (a * a.ln() - a - ln_gamma(a + 1.0)?).exp();
    let gamma_term = regularized_gamma_q(a, a)? / a;
    Ok(df / (df - 2.0) * (power_term - gamma_term))
}

/// E(Î₀²) when Q ~ χ²(df, λ), by quadrature over [df, ∞).
pub fn expectation_quadrature(df: u32, lambda: f64) -> Result<f64> {
    expectation_quadrature_with(df, lambda, &default_quad_options())
}

fn default_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: QUADRATURE_ABS_TOL,
        rel_tol: 0.0,
        max_subdivisions: 4_000,
    }
}

pub fn expectation_quadrature_with(df: u32, lambda: f64, opts: &QuadOptions) -> Result<f64> {
    if df < 1 {
        return Err(Error::domain("df must be >= 1"));
    }
    let params = ChiSquareParams::new(f64::from(df), lambda)?;
    let lower = f64::from(df);
    // Scale the map by the mean of Q so the bulk sits mid-interval.
    let scale = lower + lambda;
    let result = integrate_to_infinity(
        |q, excess| {
            let density = chisq_pdf(q, &params)?;
            Ok(if density == 0.0 {
                0.0
            } else {
                excess / q * density
            })
        },
        lower,
        scale,
        opts,
    )?;
    Ok(result.value)
}

/// Expectation and bias for one configuration.
///
/// The closed form is used when I² = 0 and df ≥ 3; everything else
/// (including df ∈ {1, 2} under homogeneity) goes through quadrature.
pub fn bias_point(query: &BiasQuery) -> Result<BiasPoint> {
    let query = BiasQuery::new(query.k, query.i2_true)?;
    let df = query.df();
    let (expectation, method) = if query.i2_true == 0.0 && df >= 3 {
        (expectation_closed_form(df)?, Method::ClosedForm)
    } else {
        let lambda = noncentrality_equal_sigma(query.k, query.i2_true)?;
        (expectation_quadrature(df, lambda)?, Method::Quadrature)
    };
    Ok(BiasPoint {
        query,
        expectation,
        bias: expectation - query.i2_true,
        method,
    })
}

/// One point per K in `k_min..=k_max`, in increasing K.
pub fn bias_curve(i2_true: f64, k_min: u32, k_max: u32) -> Result<Vec<BiasPoint>> {
    if k_min < 2 || k_min > k_max {
        return Err(Error::domain(format!(
            "invalid K range {k_min}..={k_max}; need 2 <= k_min <= k_max"
        )));
    }
    check_i2(i2_true)?;
    (k_min..=k_max)
        .into_par_iter()
        .map(|k| bias_point(&BiasQuery::new(k, i2_true)?))
        .collect()
}
