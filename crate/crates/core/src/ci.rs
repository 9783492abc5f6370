//! Test-based 95% confidence interval for I².
//!
//! The interval is built for ln H, where H² = Q/df, and each endpoint is
//! mapped back through I² = (H² − 1)/H². Its standard error has two
//! branches, split at Q > K:
//!
//! ```text
//! Q > K:   SE = ½(ln Q − ln df) / (√(2Q) − √(2K − 3))
//! Q <= K:  SE = √( 1/(2(K − 2)) · (1 − 1/(3(K − 2)²)) )
//! ```

use serde::Serialize;

use crate::meta::i2_hat;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Q substituted for an exactly zero Q so ln H stays finite.
pub const Q_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalEstimate {
    /// Î₀² = max(0, 1 − df/Q).
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Set when Q = 0 and the bounds were computed at `Q_FLOOR`.
    pub degenerate: bool,
}

impl IntervalEstimate {
    pub fn contains(&self, i2: f64) -> bool {
        self.lower <= i2 && i2 <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn h_to_i2(h: f64) -> f64 {
    let h2 = h * h;
    ((h2 - 1.0) / h2).clamp(0.0, 1.0)
}

/// Standard error of ln H for the given Q and df.
pub fn se_ln_h(q: f64, df: u32) -> f64 {
    let d = f64::from(df);
    let k = d + 1.0;
    if q > k {
        0.5 * (q.ln() - d.ln()) / ((2.0 * q).sqrt() - (2.0 * k - 3.0).sqrt())
    } else {
        let m = k - 2.0;
        ((1.0 / (2.0 * m)) * (1.0 - 1.0 / (3.0 * m * m))).sqrt()
    }
}

pub fn i2_confidence_interval(q: f64, df: u32) -> Result<IntervalEstimate> {
    if df < 2 {
        return Err(Error::domain(format!(
            "the I² interval needs df >= 2 (K >= 3), got df = {df}"
        )));
    }
    if !(q >= 0.0) || !q.is_finite() {
        return Err(Error::domain(format!("Q must be finite and >= 0, got {q}")));
    }
    let point = i2_hat(q, df)?.truncated;
    let degenerate = q == 0.0;
    let q_eff = if degenerate { Q_FLOOR } else { q };

    let ln_h = 0.5 * (q_eff.ln() - f64::from(df).ln());
    let se = se_ln_h(q_eff, df);
    let lower = h_to_i2((ln_h - Z_95 * se).exp());
    let upper = h_to_i2((ln_h + Z_95 * se).exp());

    Ok(IntervalEstimate {
        point,
        lower: if degenerate { 0.0 } else { lower },
        upper,
        level: 0.95,
        degenerate,
    })
}
