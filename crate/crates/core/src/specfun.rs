//! Gamma-family special functions and the (noncentral) chi-square law.
//!
//! Everything that can underflow is carried in log-space, so degrees of
//! freedom into the hundreds and noncentralities into the thousands stay
//! representable.

use crate::{Error, Result};

/// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Stopping rule for the incomplete gamma series and continued fraction.
const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

/// Relative weight below which Poisson mixture terms are dropped.
const MIXTURE_EPS: f64 = 1e-13;
const MIXTURE_MAX_TERMS: usize = 1_000_000;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Lanczos is tuned for x >= 0.5; shift up by one.
        return ln_gamma_unchecked(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "incomplete gamma requires a > 0, got {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "incomplete gamma requires x >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Lower regularized series P(a, x); used for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            let ln_pref = a * x.ln() - x - ln_gamma_unchecked(a);
            return Ok(sum * ln_pref.exp());
        }
    }
    Err(Error::Convergence(format!(
        "gamma series did not converge for a={a}, x={x}"
    )))
}

/// ln Γ(a, x) by the modified Lentz continued fraction; used for x >= a + 1.
fn ln_upper_gamma_cf(a: f64, x: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            return Ok(a * x.ln() - x + h.ln());
        }
    }
    Err(Error::Convergence(format!(
        "gamma continued fraction did not converge for a={a}, x={x}"
    )))
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x.is_infinite() {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        Ok(-ln_regularized_gamma_q_unchecked(a, x)?.exp_m1())
    }
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    Ok(ln_regularized_gamma_q(a, x)?.exp())
}

/// ln Q(a, x), accurate even where Q itself underflows.
pub fn ln_regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    ln_regularized_gamma_q_unchecked(a, x)
}

fn ln_regularized_gamma_q_unchecked(a: f64, x: f64) -> Result<f64> {
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x < a + 1.0 {
        Ok((-gamma_p_series(a, x)?).ln_1p())
    } else {
        Ok(ln_upper_gamma_cf(a, x)? - ln_gamma_unchecked(a))
    }
}

/// Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ t^{a−1} e^{−t} dt (not regularized).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(ln_upper_incomplete_gamma(a, x)?.exp())
}

/// ln Γ(a, x).
pub fn ln_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    if x < a + 1.0 {
        Ok((-gamma_p_series(a, x)?).ln_1p() + ln_gamma_unchecked(a))
    } else {
        ln_upper_gamma_cf(a, x)
    }
}

/// Parameters of a (possibly noncentral) chi-square distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareParams {
    df: f64,
    lambda: f64,
}

impl ChiSquareParams {
    pub fn new(df: f64, lambda: f64) -> Result<Self> {
        if !(df > 0.0) || !df.is_finite() {
            return Err(Error::domain(format!(
                "chi-square df must be > 0, got {df}"
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!(
                "chi-square noncentrality must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { df, lambda })
    }

    pub fn central(df: f64) -> Result<Self> {
        Self::new(df, 0.0)
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_central(&self) -> bool {
        self.lambda == 0.0
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(q >= 0.0) {
        return Err(Error::domain(format!(
            "chi-square argument must be >= 0, got {q}"
        )));
    }
    Ok(())
}

fn ln_central_pdf(q: f64, df: f64) -> f64 {
    let half = 0.5 * df;
    if q == 0.0 {
        return match df.partial_cmp(&2.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 0.5_f64.ln(),
            _ => f64::NEG_INFINITY,
        };
    }
    if q.is_infinite() {
        return f64::NEG_INFINITY;
    }
    (half - 1.0) * q.ln() - 0.5 * q - half * std::f64::consts::LN_2 - ln_gamma_unchecked(half)
}

/// Running log-sum-exp: the represented total is `exp(max) * scaled`.
#[derive(Debug, Clone, Copy)]
struct LogAccumulator {
    max: f64,
    scaled: f64,
}

impl LogAccumulator {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term > self.max {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        } else {
            self.scaled += (ln_term - self.max).exp();
        }
    }

    /// Size of `ln_term` relative to the current total.
    fn relative(&self, ln_term: f64) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return if ln_term == f64::NEG_INFINITY {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (ln_term - self.max).exp() / self.scaled
    }

    fn ln_total(&self) -> f64 {
        self.max + self.scaled.ln()
    }
}

/// ln Σ_j Poisson(j; λ/2) · exp(component(df + 2j)).
///
/// Starts at the Poisson mode and walks outward in both directions. A
/// direction stops once its terms have peaked and fallen below
/// `MIXTURE_EPS` of the running total. The component terms of every mixture
/// used here are unimodal in j, so the dropped tail is bounded.
fn ln_poisson_mixture<F>(df: f64, lambda: f64, mut component: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let half_lambda = 0.5 * lambda;
    let ln_half_lambda = half_lambda.ln();
    let ln_weight = |j: f64| -half_lambda + j * ln_half_lambda - ln_gamma_unchecked(j + 1.0);
    let mode = half_lambda.floor();

    let mut acc = LogAccumulator::new();
    let mut terms = 0usize;

    let mut prev = f64::NEG_INFINITY;
    let mut j = mode;
    loop {
        let t = ln_weight(j) + component(df + 2.0 * j)?;
        acc.add(t);
        terms += 1;
        if t <= prev && acc.relative(t) < MIXTURE_EPS {
            break;
        }
        if terms > MIXTURE_MAX_TERMS {
            return Err(Error::Convergence(format!(
                "poisson mixture did not converge for df={df}, lambda={lambda}"
            )));
        }
        prev = t;
        j += 1.0;
    }

    let mut prev = f64::NEG_INFINITY;
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let t = ln_weight(j) + component(df + 2.0 * j)?;
        acc.add(t);
        terms += 1;
        if t <= prev && acc.relative(t) < MIXTURE_EPS {
            break;
        }
        if terms > MIXTURE_MAX_TERMS {
            return Err(Error::Convergence(format!(
                "poisson mixture did not converge for df={df}, lambda={lambda}"
            )));
        }
        prev = t;
        j -= 1.0;
    }

    Ok(acc.ln_total())
}

/// ln of the chi-square density at `q`.
pub fn ln_chisq_pdf(q: f64, p: &ChiSquareParams) -> Result<f64> {
    check_q(q)?;
    if p.is_central() {
        return Ok(ln_central_pdf(q, p.df));
    }
    if q == 0.0 {
        // Only the j = 0 component can be nonzero at the origin.
        return Ok(-0.5 * p.lambda + ln_central_pdf(0.0, p.df));
    }
    ln_noncentral_pdf(q, p.df, p.lambda)
}

/// Noncentral density by the Poisson mixture, stepping between adjacent
/// terms with their exact ratio
///
/// ```text
/// t(j+1)/t(j) = (λ/2)/(j+1) · q/(df+2j)
/// ```
///
/// so only the starting term needs gamma functions. Terms are summed
/// relative to the starting term and rescaled if they grow too large.
fn ln_noncentral_pdf(q: f64, df: f64, lambda: f64) -> Result<f64> {
    const RESCALE: f64 = 1e150;
    let half_lambda = 0.5 * lambda;
    let mode = half_lambda.floor();
    let ln_start = -half_lambda + mode * half_lambda.ln() - ln_gamma_unchecked(mode + 1.0)
        + ln_central_pdf(q, df + 2.0 * mode);

    let mut sum = 1.0_f64;
    let mut ln_offset = 0.0_f64;
    let mut steps = 0usize;

    let mut term = 1.0_f64;
    let mut j = mode;
    loop {
        let ratio = half_lambda / (j + 1.0) * q / (df + 2.0 * j);
        term *= ratio;
        sum += term;
        if ratio < 1.0 && term < MIXTURE_EPS * sum {
            break;
        }
        if term > RESCALE {
            term /= RESCALE;
            sum /= RESCALE;
            ln_offset += RESCALE.ln();
        }
        j += 1.0;
        steps += 1;
        if steps > MIXTURE_MAX_TERMS {
            return Err(Error::Convergence(format!(
                "noncentral density did not converge for df={df}, lambda={lambda}, q={q}"
            )));
        }
    }

    // Downward terms are relative to the same start; bring them onto the
    // current scale.
    let mut term = (-ln_offset).exp();
    let mut j = mode;
    while j >= 1.0 {
        let ratio = j / half_lambda * (df + 2.0 * j - 2.0) / q;
        term *= ratio;
        sum += term;
        if ratio < 1.0 && term < MIXTURE_EPS * sum {
            break;
        }
        if term > RESCALE {
            term /= RESCALE;
            sum /= RESCALE;
            ln_offset += RESCALE.ln();
        }
        j -= 1.0;
        steps += 1;
        if steps > MIXTURE_MAX_TERMS {
            return Err(Error::Convergence(format!(
                "noncentral density did not converge for df={df}, lambda={lambda}, q={q}"
            )));
        }
    }

    Ok(ln_start + ln_offset + sum.ln())
}

/// Chi-square density; the Poisson mixture of central densities when λ > 0.
pub fn chisq_pdf(q: f64, p: &ChiSquareParams) -> Result<f64> {
    Ok(ln_chisq_pdf(q, p)?.exp())
}

/// ln P(X > q).
pub fn ln_chisq_sf(q: f64, p: &ChiSquareParams) -> Result<f64> {
    check_q(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    if p.is_central() {
        return ln_regularized_gamma_q_unchecked(0.5 * p.df, 0.5 * q);
    }
    let x = 0.5 * q;
    let ln_sf = ln_poisson_mixture(p.df, p.lambda, |df| {
        ln_regularized_gamma_q_unchecked(0.5 * df, x)
    })?;
    Ok(ln_sf.min(0.0))
}

/// Survival function P(X > q).
pub fn chisq_sf(q: f64, p: &ChiSquareParams) -> Result<f64> {
    Ok(ln_chisq_sf(q, p)?.exp())
}

/// Distribution function P(X <= q).
///
/// Computed from the lower regularized gamma directly rather than as
/// `1 - sf`, so small left-tail probabilities keep their relative accuracy.
pub fn chisq_cdf(q: f64, p: &ChiSquareParams) -> Result<f64> {
    check_q(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let x = 0.5 * q;
    if p.is_central() {
        return regularized_gamma_p(0.5 * p.df, x);
    }
    let ln_cdf = ln_poisson_mixture(p.df, p.lambda, |df| {
        let v = regularized_gamma_p(0.5 * df, x)?;
        Ok(v.ln())
    })?;
    Ok(ln_cdf.exp().min(1.0))
}
