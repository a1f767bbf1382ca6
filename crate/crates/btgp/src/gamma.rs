//! Gamma-distribution primitives and process shape functions.
//!
//! Everything downstream (marginal and increment densities, survival
//! functions, likelihoods, policy objectives) reduces to the regularized
//! incomplete gamma function, its inverse, and gamma sampling, so the
//! accuracy target here (~1e-12 relative) deliberately exceeds every
//! downstream tolerance.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
const EPS: f64 = 1e-15;
const FPMIN: f64 = 1e-300;

/// Shape/scale parameter pair of a gamma distribution.
///
/// Both parameters are validated at construction; the numerical routines
/// below assume they hold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma shape must be a positive finite real, got {shape}"
            )));
        }
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma scale must be a positive finite real, got {scale}"
            )));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection for the (unused in practice) left half-line.
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().abs().ln()
            - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Series expansion of P(a, x), valid (and efficient) for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let ln_pref = a * x.ln() - x - ln_gamma(a);
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 1.0;
    // Convergence slows near x ~ a for large shapes; the cap scales with sqrt(a).
    let max_iter = 10_000 + (8.0 * a.sqrt()) as usize;
    for _ in 0..max_iter {
        term *= x / (a + n);
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
        n += 1.0;
    }
    (ln_pref.exp() * sum).clamp(0.0, 1.0)
}

/// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
fn upper_cf(a: f64, x: f64) -> f64 {
    let ln_pref = a * x.ln() - x - ln_gamma(a);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    let max_iter = 10_000 + (8.0 * a.sqrt()) as usize;
    for i in 1..=max_iter {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (ln_pref.exp() * h).clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma function P(a, x) — the CDF of a
/// standard (scale 1) gamma distribution with shape `a`.
///
/// `a = 0` is treated as the degenerate point mass at zero: P = 1 for
/// x > 0 and P = 0 at x = 0, the limit of vanishing-length increments.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a >= 0.0 && x.is_finite() || x.is_infinite());
    if a == 0.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_cf(a, x)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn reg_upper_gamma(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_cf(a, x)
    }
}

/// Log density of a gamma distribution on the standard (scale 1) scale.
///
/// Returns -inf for x < 0 and the appropriate limit at x = 0.
pub(crate) fn ln_gamma_pdf_std(x: f64, shape: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 0.0,
            _ => f64::NEG_INFINITY,
        };
    }
    (shape - 1.0) * x.ln() - x - ln_gamma(shape)
}

/// Gamma probability density x^(shape-1) e^(-x/scale) / (scale^shape Γ(shape)).
///
/// The density at x = 0 is 0 for shape > 1, 1/scale for shape = 1, and
/// +inf for shape < 1.
pub fn gamma_pdf(x: f64, p: &GammaParams) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let z = x / p.scale;
    let ln_pdf = ln_gamma_pdf_std(z, p.shape) - p.scale.ln();
    if ln_pdf == f64::INFINITY {
        f64::INFINITY
    } else {
        ln_pdf.exp()
    }
}

/// Gamma cumulative distribution function P(shape, x/scale).
pub fn gamma_cdf(x: f64, p: &GammaParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    reg_lower_gamma(p.shape, x / p.scale)
}

/// Quantile on the standard (scale 1) scale via bracketed, pdf-safeguarded
/// Newton iteration on P(a, x) - q.
pub(crate) fn std_gamma_quantile(q: f64, a: f64) -> f64 {
    // Moment-based initial bracket, expanded until it straddles q.
    let sd = a.sqrt();
    let mut lo = (a - 8.0 * sd).max(FPMIN);
    let mut hi = a + 8.0 * sd + 10.0;
    while reg_lower_gamma(a, lo) > q {
        lo *= 0.125;
        if lo <= FPMIN {
            lo = FPMIN;
            if reg_lower_gamma(a, lo) > q {
                // The quantile underflows f64; only reachable for
                // extremely small shapes far outside practical use.
                return lo;
            }
            break;
        }
    }
    while reg_lower_gamma(a, hi) < q {
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    let mut x = (0.5 * (lo + hi)).clamp(lo, hi);
    for _ in 0..200 {
        let f = reg_lower_gamma(a, x) - q;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if f.abs() < 1e-13 {
            break;
        }
        let ln_pdf = ln_gamma_pdf_std(x, a);
        let mut next = if ln_pdf.is_finite() {
            x - f / ln_pdf.exp()
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) < 1e-15 * x.abs() + FPMIN {
            break;
        }
        x = next;
    }
    x
}

/// Quantile function: the x with gamma_cdf(x) = q, solved to |CDF - q| < 1e-13
/// (comfortably inside the 1e-10 contract).
pub fn gamma_quantile(q: f64, p: &GammaParams) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!(
            "quantile level must lie in (0, 1), got {q}"
        )));
    }
    Ok(std_gamma_quantile(q, p.shape) * p.scale)
}

/// One gamma draw. Marsaglia–Tsang rejection for shape >= 1 with the
/// U^(1/shape) boost for sub-unit shapes (as provided by `rand_distr`).
///
/// Shape 0 is the degenerate zero-length-increment case and returns 0.
pub fn sample_gamma<R: Rng + ?Sized>(p: &GammaParams, rng: &mut R) -> f64 {
    sample_gamma_raw(p.shape, p.scale, rng)
}

pub(crate) fn sample_gamma_raw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    if shape == 0.0 {
        return 0.0;
    }
    GammaDist::new(shape, scale)
        .expect("validated gamma parameters")
        .sample(rng)
}

/// Time-varying shape functions used by the deterioration processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeFunction {
    /// rate * t — the stationary-process clock.
    Linear { rate: f64 },
    /// (x_lim / beta) * (1 - exp(-(t/theta3)^theta2)) — bounded Weibull-type
    /// growth converging to x_lim / beta.
    WeibullBounded {
        x_lim: f64,
        beta: f64,
        theta2: f64,
        theta3: f64,
    },
    /// (t / theta1)^theta2 — power-law aging.
    PowerLaw { theta1: f64, theta2: f64 },
}

impl ShapeFunction {
    fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                Err(Error::InvalidParameter(format!(
                    "shape function parameter {name} must be a positive finite real, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            ShapeFunction::Linear { rate } => check("rate", rate),
            ShapeFunction::WeibullBounded {
                x_lim,
                beta,
                theta2,
                theta3,
            } => {
                check("x_lim", x_lim)?;
                check("beta", beta)?;
                check("theta2", theta2)?;
                check("theta3", theta3)
            }
            ShapeFunction::PowerLaw { theta1, theta2 } => {
                check("theta1", theta1)?;
                check("theta2", theta2)
            }
        }
    }

    pub fn new_linear(rate: f64) -> Result<Self> {
        let f = ShapeFunction::Linear { rate };
        f.validate()?;
        Ok(f)
    }

    pub fn new_weibull_bounded(x_lim: f64, beta: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let f = ShapeFunction::WeibullBounded {
            x_lim,
            beta,
            theta2,
            theta3,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn new_power_law(theta1: f64, theta2: f64) -> Result<Self> {
        let f = ShapeFunction::PowerLaw { theta1, theta2 };
        f.validate()?;
        Ok(f)
    }

    /// Evaluates the shape function; always 0 at t = 0 and nondecreasing.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() && !(t == f64::INFINITY) || t < 0.0 {
            return Err(Error::Domain(format!(
                "shape functions are defined for t >= 0, got {t}"
            )));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match *self {
            ShapeFunction::Linear { rate } => rate * t,
            ShapeFunction::WeibullBounded {
                x_lim,
                beta,
                theta2,
                theta3,
            } => {
                if t == 0.0 {
                    0.0
                } else {
                    x_lim / beta * (-(-(t / theta3).powf(theta2)).exp_m1())
                }
            }
            ShapeFunction::PowerLaw { theta1, theta2 } => {
                if t == 0.0 {
                    0.0
                } else {
                    (t / theta1).powf(theta2)
                }
            }
        }
    }
}
