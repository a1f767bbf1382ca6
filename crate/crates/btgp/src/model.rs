//! The eight candidate deterioration processes behind one interface.
//!
//! All internal math lives on the increasing-degradation scale D(t); a
//! decreasing condition index C relates to it by C = x_lim - D, and the
//! conversion happens only at the declared orientation boundaries
//! (`transform`, `simulate_paths`, and the IO layer). Every model is
//! driven by a gamma kernel with independent increments:
//!
//! * BNGP — the observable process itself is a nonstationary gamma
//!   process with a bounded Weibull-type shape function and scale θ₁.
//! * BTGP — a standard stationary gamma kernel (shape θ₁·t, scale 1)
//!   pushed through a bounded Weibull-type transform.
//! * BTGP1–BTGP6 — power-law kernels (shape (t/θ₁)^θ₂, scale 1) pushed
//!   through exponential, odds, arctangent, and their outer-power
//!   transforms.
//!
//! Mapping a degradation level into the standard-scale kernel coordinate
//! (`standard_kernel_level`) makes survival, remaining life, and the
//! replacement-policy recursions uniform across all eight variants.

use crate::error::{Error, Result};
use crate::gamma::{ln_gamma_pdf_std, reg_lower_gamma, sample_gamma_raw, GammaParams};
use crate::quad::gl256_unit;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// The eight candidate model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "BNGP")]
    Bngp,
    #[serde(rename = "BTGP")]
    Btgp,
    #[serde(rename = "BTGP1")]
    Btgp1,
    #[serde(rename = "BTGP2")]
    Btgp2,
    #[serde(rename = "BTGP3")]
    Btgp3,
    #[serde(rename = "BTGP4")]
    Btgp4,
    #[serde(rename = "BTGP5")]
    Btgp5,
    #[serde(rename = "BTGP6")]
    Btgp6,
}

impl Variant {
    /// Fixed candidate order used for tie-breaking and reporting.
    pub const ALL: [Variant; 8] = [
        Variant::Bngp,
        Variant::Btgp,
        Variant::Btgp1,
        Variant::Btgp2,
        Variant::Btgp3,
        Variant::Btgp4,
        Variant::Btgp5,
        Variant::Btgp6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Bngp => "BNGP",
            Variant::Btgp => "BTGP",
            Variant::Btgp1 => "BTGP1",
            Variant::Btgp2 => "BTGP2",
            Variant::Btgp3 => "BTGP3",
            Variant::Btgp4 => "BTGP4",
            Variant::Btgp5 => "BTGP5",
            Variant::Btgp6 => "BTGP6",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model variant '{s}'")))
    }

    /// True for every variant driven through a state transform (all but BNGP).
    pub fn is_transformed(&self) -> bool {
        !matches!(self, Variant::Bngp)
    }

    /// Variants with the extra outer exponent θ₄.
    pub fn has_theta4(&self) -> bool {
        matches!(self, Variant::Btgp4 | Variant::Btgp5 | Variant::Btgp6)
    }

    /// Number of free parameters (x_lim is fixed, never estimated).
    pub fn n_params(&self) -> usize {
        if self.has_theta4() {
            4
        } else {
            3
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Model parameters θ₁..θ₄ (θ₄ only for BTGP4–6).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta4: Option<f64>,
}

impl Theta {
    pub fn new3(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Theta {
            theta1,
            theta2,
            theta3,
            theta4: None,
        }
    }

    pub fn new4(theta1: f64, theta2: f64, theta3: f64, theta4: f64) -> Self {
        Theta {
            theta1,
            theta2,
            theta3,
            theta4: Some(theta4),
        }
    }

    pub(crate) fn from_slice(vals: &[f64]) -> Self {
        match vals {
            [a, b, c] => Theta::new3(*a, *b, *c),
            [a, b, c, d] => Theta::new4(*a, *b, *c, *d),
            _ => unreachable!("theta has 3 or 4 entries"),
        }
    }
}

/// Whether the observable quantity grows (degradation) or declines
/// (condition index such as a BCI on [0, 100]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "increasing")]
    IncreasingDegradation,
    #[serde(rename = "decreasing")]
    DecreasingCondition,
}

impl Orientation {
    pub fn parse(s: &str) -> Result<Orientation> {
        match s.to_ascii_lowercase().as_str() {
            "increasing" | "degradation" => Ok(Orientation::IncreasingDegradation),
            "decreasing" | "condition" => Ok(Orientation::DecreasingCondition),
            other => Err(Error::InvalidParameter(format!(
                "unknown orientation '{other}' (expected 'increasing' or 'decreasing')"
            ))),
        }
    }

    /// Maps an observed value onto the internal degradation scale.
    pub fn to_degradation(&self, value: f64, x_lim: f64) -> f64 {
        match self {
            Orientation::IncreasingDegradation => value,
            Orientation::DecreasingCondition => x_lim - value,
        }
    }

    /// Maps an internal degradation level back to the observed scale.
    pub fn from_degradation(&self, level: f64, x_lim: f64) -> f64 {
        // The conversion is an involution.
        self.to_degradation(level, x_lim)
    }
}

/// One fully specified deterioration model: variant, parameters, fixed
/// upper limit, and orientation of the observable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    variant: Variant,
    theta: Theta,
    x_lim: f64,
    orientation: Orientation,
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            variant: Variant,
            theta: Theta,
            x_lim: f64,
            orientation: Orientation,
        }
        let raw = Raw::deserialize(d)?;
        ModelSpec::new(raw.variant, raw.theta, raw.x_lim, raw.orientation)
            .map_err(serde::de::Error::custom)
    }
}

impl ModelSpec {
    pub fn new(variant: Variant, theta: Theta, x_lim: f64, orientation: Orientation) -> Result<Self> {
        let check = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite real, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        check("theta1", theta.theta1)?;
        check("theta2", theta.theta2)?;
        check("theta3", theta.theta3)?;
        match (variant.has_theta4(), theta.theta4) {
            (true, Some(t4)) => check("theta4", t4)?,
            (true, None) => {
                return Err(Error::InvalidParameter(format!(
                    "{variant} requires theta4"
                )))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidParameter(format!(
                    "{variant} does not take theta4"
                )))
            }
            (false, None) => {}
        }
        check("x_lim", x_lim)?;
        Ok(ModelSpec {
            variant,
            theta,
            x_lim,
            orientation,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn x_lim(&self) -> f64 {
        self.x_lim
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Same model with different parameter values.
    pub fn with_theta(&self, theta: Theta) -> Result<ModelSpec> {
        ModelSpec::new(self.variant, theta, self.x_lim, self.orientation)
    }

    /// Kernel shape function α(t): θ₁·t for BTGP, (t/θ₁)^θ₂ for BTGP1–6,
    /// and the bounded Weibull-type clock for BNGP.
    pub fn kernel_shape(&self, t: f64) -> f64 {
        let th = &self.theta;
        match self.variant {
            Variant::Bngp => {
                if t == 0.0 {
                    0.0
                } else {
                    self.x_lim / th.theta1 * (-(-(t / th.theta3).powf(th.theta2)).exp_m1())
                }
            }
            Variant::Btgp => th.theta1 * t,
            _ => {
                if t == 0.0 {
                    0.0
                } else {
                    (t / th.theta1).powf(th.theta2)
                }
            }
        }
    }

    /// Scale of the underlying gamma process (θ₁ for BNGP, 1 otherwise).
    pub fn kernel_scale(&self) -> f64 {
        match self.variant {
            Variant::Bngp => self.theta.theta1,
            _ => 1.0,
        }
    }

    /// Maps a degradation level onto the standard (scale 1) kernel
    /// coordinate: the inverse transform for BTGP variants, x/θ₁ for BNGP.
    ///
    /// Expressed this way, survival, remaining life, and the inspection
    /// recursions share one formula across all variants.
    pub fn standard_kernel_level(&self, x: f64) -> Result<f64> {
        match self.variant {
            Variant::Bngp => {
                if x < 0.0 {
                    Err(Error::Domain(format!("degradation level must be >= 0, got {x}")))
                } else {
                    Ok(x / self.theta.theta1)
                }
            }
            _ => self.inverse_transform(x),
        }
    }

    fn require_transformed(&self, op: &str) -> Result<()> {
        if self.variant.is_transformed() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{op} is not defined for the BNGP (no state transform)"
            )))
        }
    }

    /// Forward transform on the increasing-degradation scale (no
    /// orientation applied). `g` must be >= 0.
    pub(crate) fn fwd(&self, g: f64) -> f64 {
        let th = &self.theta;
        let u = g / th.theta3;
        match self.variant {
            Variant::Bngp => unreachable!("BNGP has no transform"),
            Variant::Btgp => self.x_lim * (-(-u.powf(th.theta2)).exp_m1()),
            Variant::Btgp1 => self.x_lim * (-(-u).exp_m1()),
            Variant::Btgp2 => self.x_lim * (u / (1.0 + u)),
            Variant::Btgp3 => self.x_lim * (std::f64::consts::FRAC_2_PI * u.atan()),
            Variant::Btgp4 => self.x_lim * (-(-u).exp_m1()).powf(th.theta4.unwrap()),
            Variant::Btgp5 => {
                let w = u.powf(th.theta4.unwrap());
                self.x_lim * (w / (1.0 + w))
            }
            Variant::Btgp6 => {
                self.x_lim * (std::f64::consts::FRAC_2_PI * u.atan()).powf(th.theta4.unwrap())
            }
        }
    }

    /// Inverse transform 𝒢 on the increasing-degradation scale.
    /// ln(x_lim/(x_lim-x)) is evaluated through log1p to stay accurate
    /// as x approaches the bound.
    fn inv(&self, x: f64) -> f64 {
        let th = &self.theta;
        let r = x / self.x_lim;
        let l = -(-r).ln_1p();
        match self.variant {
            Variant::Bngp => unreachable!("BNGP has no transform"),
            Variant::Btgp => th.theta3 * l.powf(1.0 / th.theta2),
            Variant::Btgp1 => th.theta3 * l,
            Variant::Btgp2 => th.theta3 * (x / (self.x_lim - x)),
            Variant::Btgp3 => th.theta3 * (std::f64::consts::FRAC_PI_2 * r).tan(),
            Variant::Btgp4 => {
                -th.theta3 * (-r.powf(1.0 / th.theta4.unwrap())).ln_1p()
            }
            Variant::Btgp5 => th.theta3 * (x / (self.x_lim - x)).powf(1.0 / th.theta4.unwrap()),
            Variant::Btgp6 => {
                th.theta3
                    * (std::f64::consts::FRAC_PI_2 * r.powf(1.0 / th.theta4.unwrap())).tan()
            }
        }
    }

    /// ln |𝒢'(x)| — the log Jacobian of the inverse transform.
    fn ln_inv_deriv(&self, x: f64) -> f64 {
        let th = &self.theta;
        let xl = self.x_lim;
        let r = x / xl;
        let l = -(-r).ln_1p();
        match self.variant {
            Variant::Bngp => unreachable!("BNGP has no transform"),
            Variant::Btgp => {
                th.theta3.ln() - th.theta2.ln() + (1.0 / th.theta2 - 1.0) * l.ln()
                    - (xl - x).ln()
            }
            Variant::Btgp1 => th.theta3.ln() - (xl - x).ln(),
            Variant::Btgp2 => th.theta3.ln() + xl.ln() - 2.0 * (xl - x).ln(),
            Variant::Btgp3 => {
                th.theta3.ln() + (std::f64::consts::FRAC_PI_2 / xl).ln()
                    - 2.0 * (std::f64::consts::FRAC_PI_2 * r).cos().ln()
            }
            Variant::Btgp4 => {
                let t4 = th.theta4.unwrap();
                let s = r.powf(1.0 / t4);
                th.theta3.ln() - t4.ln() + (1.0 / t4 - 1.0) * r.ln() - xl.ln()
                    - (-s).ln_1p()
            }
            Variant::Btgp5 => {
                let t4 = th.theta4.unwrap();
                th.theta3.ln() - t4.ln() + (1.0 / t4 - 1.0) * r.ln()
                    - (1.0 / t4 + 1.0) * (-r).ln_1p()
                    - xl.ln()
            }
            Variant::Btgp6 => {
                let t4 = th.theta4.unwrap();
                let s = r.powf(1.0 / t4);
                th.theta3.ln() + (std::f64::consts::FRAC_PI_2).ln() - t4.ln()
                    + (1.0 / t4 - 1.0) * r.ln()
                    - xl.ln()
                    - 2.0 * (std::f64::consts::FRAC_PI_2 * s).cos().ln()
            }
        }
    }

    /// Deterministic state transform 𝒯 applied to a kernel value, in the
    /// model's declared orientation (decreasing variants return
    /// x_lim - 𝒯(g)). Not defined for the BNGP.
    pub fn transform(&self, g: f64) -> Result<f64> {
        self.require_transformed("transform")?;
        if !g.is_finite() || g < 0.0 {
            return Err(Error::Domain(format!(
                "transform argument must be a finite value >= 0, got {g}"
            )));
        }
        let x = self.fwd(g);
        Ok(self.orientation.from_degradation(x, self.x_lim))
    }

    /// Inverse transform 𝒢 of an increasing-orientation degradation level
    /// 0 <= x < x_lim; saturated levels (x >= x_lim) carry no kernel value.
    pub fn inverse_transform(&self, x: f64) -> Result<f64> {
        self.require_transformed("inverse_transform")?;
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Domain(format!(
                "degradation level must be finite and >= 0, got {x}"
            )));
        }
        if x >= self.x_lim {
            return Err(Error::Domain(format!(
                "degradation level {x} is at or beyond the bound x_lim = {} where the transform saturates",
                self.x_lim
            )));
        }
        Ok(self.inv(x))
    }

    /// Marginal density of the degradation level X(t).
    pub fn marginal_pdf(&self, t: f64, x: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("marginal density requires t > 0, got {t}")));
        }
        let alpha = self.kernel_shape(t);
        match self.variant {
            Variant::Bngp => {
                if x < 0.0 {
                    return Err(Error::Domain(format!("BNGP level must be >= 0, got {x}")));
                }
                let p = GammaParams::new(alpha, self.theta.theta1)?;
                Ok(crate::gamma::gamma_pdf(x, &p))
            }
            _ => {
                if !(0.0..=self.x_lim).contains(&x) {
                    return Err(Error::Domain(format!(
                        "level must lie in [0, x_lim], got {x}"
                    )));
                }
                if x == self.x_lim {
                    return Ok(0.0);
                }
                let x_eval = if x == 0.0 {
                    // Density at the origin: the local power of the density is
                    // x^(nu-1); below nu = 1 it diverges, above it vanishes.
                    let nu = self.origin_exponent(alpha);
                    if nu < 1.0 {
                        return Ok(f64::INFINITY);
                    } else if nu > 1.0 {
                        return Ok(0.0);
                    }
                    self.x_lim * 1e-14
                } else {
                    x
                };
                let ln_pdf = self.ln_inv_deriv(x_eval) + ln_gamma_pdf_std(self.inv(x_eval), alpha);
                Ok(ln_pdf.exp())
            }
        }
    }

    /// Local power nu of the marginal density near x = 0 (density ~ x^(nu-1)).
    fn origin_exponent(&self, alpha: f64) -> f64 {
        match self.variant {
            Variant::Bngp => alpha,
            Variant::Btgp => alpha / self.theta.theta2,
            Variant::Btgp1 | Variant::Btgp2 | Variant::Btgp3 => alpha,
            Variant::Btgp4 | Variant::Btgp5 | Variant::Btgp6 => {
                alpha / self.theta.theta4.unwrap()
            }
        }
    }

    /// Conditional density of the increment ΔX over (t, t+dt] given
    /// X(t) = x_t, all on the increasing-degradation scale.
    ///
    /// For the BTGP the kernel increment shape θ₁·dt depends on neither t
    /// nor x_t (age-independent, state-dependent); for the BNGP the density
    /// does not depend on x_t at all (independent increments).
    pub fn increment_pdf(&self, t: f64, dt: f64, x_t: f64, dx: f64) -> Result<f64> {
        if !(dt > 0.0) || t < 0.0 {
            return Err(Error::Domain(format!(
                "increments require t >= 0 and dt > 0, got t={t}, dt={dt}"
            )));
        }
        match self.variant {
            Variant::Bngp => {
                if !(dx > 0.0) {
                    return Err(Error::Domain(format!("BNGP increment must be > 0, got {dx}")));
                }
            }
            _ => {
                if !(dx > 0.0) || dx >= self.x_lim - x_t {
                    return Err(Error::Domain(format!(
                        "increment must satisfy 0 < dx < x_lim - x_t, got dx={dx} with x_t={x_t}"
                    )));
                }
                if x_t < 0.0 || x_t >= self.x_lim {
                    return Err(Error::Domain(format!(
                        "state must lie in [0, x_lim), got {x_t}"
                    )));
                }
            }
        }
        let v = self.ln_increment_pdf_unchecked(t, dt, x_t, dx);
        Ok(if v == f64::NEG_INFINITY { 0.0 } else { v.exp() })
    }

    /// Fast log-density of an increment; returns -inf instead of erroring
    /// so the likelihood can reject invalid parameter regions smoothly.
    pub(crate) fn ln_increment_pdf_unchecked(&self, t: f64, dt: f64, x_t: f64, dx: f64) -> f64 {
        let d_alpha = self.kernel_shape(t + dt) - self.kernel_shape(t);
        if !(d_alpha > 0.0) {
            return f64::NEG_INFINITY;
        }
        match self.variant {
            Variant::Bngp => {
                let scale = self.theta.theta1;
                ln_gamma_pdf_std(dx / scale, d_alpha) - scale.ln()
            }
            _ => {
                let x_new = x_t + dx;
                if x_new >= self.x_lim {
                    return f64::NEG_INFINITY;
                }
                let dg = self.inv(x_new) - self.inv(x_t);
                if !(dg > 0.0) {
                    return f64::NEG_INFINITY;
                }
                self.ln_inv_deriv(x_new) + ln_gamma_pdf_std(dg, d_alpha)
            }
        }
    }

    /// Mean and variance of X(t) on the increasing-degradation scale.
    ///
    /// Closed form for the BNGP; 256-node Gauss–Legendre over the
    /// probability-integral substitution for the transformed variants.
    pub fn mean_variance(&self, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
        }
        match self.variant {
            Variant::Bngp => {
                let a = self.kernel_shape(t);
                let b = self.theta.theta1;
                Ok((b * a, b * b * a))
            }
            _ => Ok(self.moments_at_tau(self.kernel_shape(t))),
        }
    }

    /// Mean/variance of the transformed process as a function of the kernel
    /// time τ = α(t) — the scale on which they are θ₁-invariant.
    pub(crate) fn moments_at_tau(&self, tau: f64) -> (f64, f64) {
        debug_assert!(self.variant.is_transformed());
        if tau == 0.0 {
            return (0.0, 0.0);
        }
        let (nodes, weights) = gl256_unit();
        let mut m = 0.0;
        let mut m2 = 0.0;
        for (&u, &w) in nodes.iter().zip(weights) {
            let g = crate::gamma::gamma_quantile(u, &GammaParams::new(tau, 1.0).expect("tau > 0"))
                .expect("u in (0,1)");
            let v = self.fwd(g);
            m += w * v;
            m2 += w * v * v;
        }
        (m, (m2 - m * m).max(0.0))
    }

    /// Survival function of the first-passage time over the failure
    /// threshold `xi` (increasing-degradation units): S(t) = Pr(X(t) < xi).
    pub fn survival(&self, xi: f64, t: f64) -> Result<f64> {
        if !(xi > 0.0 && xi < self.x_lim) {
            return Err(Error::Domain(format!(
                "failure threshold must lie in (0, x_lim), got {xi}"
            )));
        }
        if t < 0.0 {
            return Err(Error::Domain(format!("time must be >= 0, got {t}")));
        }
        let g = self.standard_kernel_level(xi)?;
        Ok(reg_lower_gamma(self.kernel_shape(t), g))
    }

    /// Distribution of the remaining life from state (t0, x0) with failure
    /// threshold `xi`, all in increasing-degradation units.
    ///
    /// Transformed variants condition exactly on the kernel state 𝒢(x0)
    /// (the transform is a bijection), giving the increment shape
    /// α(t0+s) − α(t0). The BNGP treats the residual margin ξ − x0 as the
    /// failure threshold of a fresh process (restarted shape clock) — the
    /// two readings coincide for the stationary-kernel BTGP.
    pub fn remaining_life(&self, t0: f64, x0: f64, xi: f64) -> Result<RemainingLife> {
        if t0 < 0.0 {
            return Err(Error::Domain(format!("t0 must be >= 0, got {t0}")));
        }
        if !(xi > 0.0 && xi < self.x_lim) {
            return Err(Error::Domain(format!(
                "failure threshold must lie in (0, x_lim), got {xi}"
            )));
        }
        if x0 < 0.0 {
            return Err(Error::Domain(format!("state must be >= 0, got {x0}")));
        }
        if x0 >= xi {
            return Ok(RemainingLife {
                spec: self.clone(),
                t0,
                margin_std: 0.0,
                degenerate: true,
                mean: 0.0,
                variance: 0.0,
                horizon: 0.0,
            });
        }
        let margin_std = match self.variant {
            Variant::Bngp => (xi - x0) / self.theta.theta1,
            _ => self.standard_kernel_level(xi)? - self.standard_kernel_level(x0)?,
        };
        let mut rl = RemainingLife {
            spec: self.clone(),
            t0,
            margin_std,
            degenerate: false,
            mean: 0.0,
            variance: 0.0,
            horizon: 0.0,
        };
        rl.integrate_moments();
        Ok(rl)
    }

    /// Simulates `n` sample paths on an ascending time grid that starts
    /// at 0. Values are reported in the model's orientation, so decreasing
    /// variants start at x_lim. Transformed paths are exact on the grid:
    /// kernel increments are drawn and the cumulative kernel is transformed.
    pub fn simulate_paths<R: Rng + ?Sized>(
        &self,
        grid: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        if grid.is_empty() || grid[0] != 0.0 {
            return Err(Error::Data("time grid must start at 0".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Data("time grid must be finite and strictly ascending".into()));
        }
        if n == 0 {
            return Err(Error::Data("at least one path is required".into()));
        }
        let alphas: Vec<f64> = grid.iter().map(|&t| self.kernel_shape(t)).collect();
        let d_alphas: Vec<f64> = alphas.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        let scale = self.kernel_scale();
        let mut paths = Vec::with_capacity(n);
        for _ in 0..n {
            let mut path = Vec::with_capacity(grid.len());
            match self.variant {
                Variant::Bngp => {
                    let mut x = 0.0;
                    path.push(self.orientation.from_degradation(0.0, self.x_lim));
                    for &da in &d_alphas {
                        x += sample_gamma_raw(da, scale, rng);
                        path.push(self.orientation.from_degradation(x, self.x_lim));
                    }
                }
                _ => {
                    let mut g = 0.0;
                    path.push(self.orientation.from_degradation(0.0, self.x_lim));
                    for &da in &d_alphas {
                        g += sample_gamma_raw(da, 1.0, rng);
                        path.push(self.orientation.from_degradation(self.fwd(g), self.x_lim));
                    }
                }
            }
            paths.push(path);
        }
        Ok(paths)
    }
}

/// Remaining-life distribution handle: survival curve plus integrated
/// mean and variance.
#[derive(Debug, Clone)]
pub struct RemainingLife {
    spec: ModelSpec,
    t0: f64,
    margin_std: f64,
    degenerate: bool,
    mean: f64,
    variance: f64,
    horizon: f64,
}

impl RemainingLife {
    /// Pr(RL > s).
    pub fn survival(&self, s: f64) -> f64 {
        if self.degenerate {
            return 0.0;
        }
        if s <= 0.0 {
            return 1.0;
        }
        let shape = match self.spec.variant {
            Variant::Bngp => self.spec.kernel_shape(s),
            _ => self.spec.kernel_shape(self.t0 + s) - self.spec.kernel_shape(self.t0),
        };
        reg_lower_gamma(shape.max(0.0), self.margin_std)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Upper limit used for the moment integrals; survival mass that never
    /// crosses the threshold (possible for the BNGP's saturating clock) is
    /// truncated here.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    fn integrate_moments(&mut self) {
        // Expand the horizon until the survival curve is exhausted or
        // demonstrably flat (mass that will never cross the threshold).
        let mut h = 8.0;
        let mut prev = self.survival(h);
        loop {
            let s = self.survival(2.0 * h);
            h *= 2.0;
            if s < 1e-9 || h >= 1e6 {
                break;
            }
            if s < 1e-4 && s > 0.99 * prev {
                break;
            }
            prev = s;
        }
        self.horizon = h;
        let mean = crate::quad::adaptive_simpson(|s| self.survival(s), 0.0, h, 1e-9);
        let ex2 = crate::quad::adaptive_simpson(|s| 2.0 * s * self.survival(s), 0.0, h, 1e-9);
        self.mean = mean;
        self.variance = (ex2 - mean * mean).max(0.0);
    }
}
