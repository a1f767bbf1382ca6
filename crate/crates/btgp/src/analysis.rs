//! Derived analytics: the mean at maximum variance (MUMV), its parameter
//! sensitivity grid, predictive bands, and the mean-matched bounded
//! nonstationary comparison model.
//!
//! A transformed variant's mean and variance depend on time only through
//! the kernel clock τ = α(t), so the variance peak is located on the τ
//! axis (where it is θ₁-invariant) and mapped back to calendar time at
//! the end.

use crate::error::{Error, Result};
use crate::gamma::std_gamma_quantile;
use crate::model::{ModelSpec, Theta, Variant};
use crate::optim::{golden_section_min, latin_hypercube, nelder_mead};
use rand::SeedableRng;
use serde::Serialize;

/// Location and value of the variance peak of a transformed variant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MumvResult {
    /// Kernel time of the variance maximum (θ₁-invariant).
    pub tau_star: f64,
    /// Calendar time of the maximum for this model's clock.
    pub t_star: f64,
    pub max_variance: f64,
    /// Mean at the variance maximum, reported in the model's orientation.
    pub mumv: f64,
}

const MUMV_SCAN_POINTS: usize = 200;
const MUMV_TAU_LO: f64 = 1e-3;
const MUMV_TAU_HI: f64 = 1e3;

/// Locates the mean at maximum variance by a log-spaced coarse scan over
/// kernel time followed by golden-section refinement. The default scan
/// window [1e-3, 1e3] widens automatically (up to [1e-9, 1e9]) if the
/// peak sits on its edge.
pub fn mumv(m: &ModelSpec) -> Result<MumvResult> {
    if !m.variant().is_transformed() {
        return Err(Error::Unsupported(
            "the BNGP variance is monotone; the MUMV is defined for transformed variants only"
                .into(),
        ));
    }
    let var_at = |tau: f64| m.moments_at_tau(tau).1;

    let mut lo = MUMV_TAU_LO;
    let mut hi = MUMV_TAU_HI;
    let (taus, peak_idx) = loop {
        let taus: Vec<f64> = (0..MUMV_SCAN_POINTS)
            .map(|i| {
                let f = i as f64 / (MUMV_SCAN_POINTS - 1) as f64;
                (lo.ln() + f * (hi.ln() - lo.ln())).exp()
            })
            .collect();
        let vars: Vec<f64> = taus.iter().map(|&t| var_at(t)).collect();
        let mut peak = 0;
        for (i, &v) in vars.iter().enumerate() {
            if v > vars[peak] {
                peak = i;
            }
        }
        if peak > 0 && peak < MUMV_SCAN_POINTS - 1 {
            break (taus, peak);
        }
        let widened = if peak == 0 && lo > 1e-9 {
            lo = (lo * 1e-3).max(1e-9);
            true
        } else if peak == MUMV_SCAN_POINTS - 1 && hi < 1e9 {
            hi = (hi * 1e3).min(1e9);
            true
        } else {
            false
        };
        if !widened {
            return Err(Error::NoInteriorMaximum(format!(
                "variance of {} is numerically monotone over tau in [{lo:.1e}, {hi:.1e}]",
                m.variant()
            )));
        }
    };

    let (ln_tau_star, neg_var) = golden_section_min(
        |l| -var_at(l.exp()),
        taus[peak_idx - 1].ln(),
        taus[peak_idx + 1].ln(),
        1e-10,
    );
    let tau_star = ln_tau_star.exp();
    let (mean, max_variance) = {
        let (mu, v) = m.moments_at_tau(tau_star);
        (mu, v.max(-neg_var))
    };

    let th = m.theta();
    let t_star = match m.variant() {
        Variant::Btgp => tau_star / th.theta1,
        // Power-law clock (t/θ₁)^θ₂ = τ*.
        _ => th.theta1 * tau_star.powf(1.0 / th.theta2),
    };

    Ok(MumvResult {
        tau_star,
        t_star,
        max_variance,
        mumv: m.orientation().from_degradation(mean, m.x_lim()),
    })
}

/// Contour-ready MUMV matrix over (θ₂, θ₃); rows follow θ₂, columns θ₃.
#[derive(Debug, Clone, Serialize)]
pub struct MumvGrid {
    pub theta2: Vec<f64>,
    pub theta3: Vec<f64>,
    /// values[i][j] = MUMV at (theta2[i], theta3[j]); NaN for failed cells.
    pub values: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize, String)>,
}

/// Evaluates the MUMV over a (θ₂, θ₃) grid at the base model's θ₁ and
/// orientation. Per-cell failures are flagged, not fatal.
pub fn mumv_grid(
    base: &ModelSpec,
    theta2_range: (f64, f64),
    theta3_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<MumvGrid> {
    if !base.variant().is_transformed() {
        return Err(Error::Unsupported("MUMV grids require a transformed variant".into()));
    }
    let (n2, n3) = resolution;
    if n2 < 2 || n3 < 2 {
        return Err(Error::InvalidParameter(
            "grid resolution must be at least 2 per axis".into(),
        ));
    }
    let axis = |range: (f64, f64), n: usize| -> Result<Vec<f64>> {
        if !(range.0 > 0.0 && range.1 > range.0) {
            return Err(Error::InvalidParameter(format!(
                "grid range must be positive and increasing, got {range:?}"
            )));
        }
        Ok((0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect())
    };
    let theta2 = axis(theta2_range, n2)?;
    let theta3 = axis(theta3_range, n3)?;
    let th = base.theta();
    let mut values = vec![vec![f64::NAN; n3]; n2];
    let mut failures = Vec::new();
    for (i, &t2) in theta2.iter().enumerate() {
        for (j, &t3) in theta3.iter().enumerate() {
            let theta = if base.variant().has_theta4() {
                Theta::new4(th.theta1, t2, t3, th.theta4.unwrap())
            } else {
                Theta::new3(th.theta1, t2, t3)
            };
            match base.with_theta(theta).and_then(|m| mumv(&m)) {
                Ok(r) => values[i][j] = r.mumv,
                Err(e) => failures.push((i, j, e.to_string())),
            }
        }
    }
    Ok(MumvGrid {
        theta2,
        theta3,
        values,
        failures,
    })
}

/// One predictive-band row, in the model's orientation (lower <= upper).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BandPoint {
    pub t: f64,
    pub lower: f64,
    pub mean: f64,
    pub upper: f64,
}

/// Pointwise predictive band: quantiles of the marginal distribution of
/// X(t). For transformed variants the band endpoints are the transform of
/// kernel quantiles (quantiles commute with monotone maps); the BNGP uses
/// gamma quantiles directly.
pub fn predictive_band(
    m: &ModelSpec,
    grid: &[f64],
    levels: (f64, f64),
) -> Result<Vec<BandPoint>> {
    let (lo, hi) = levels;
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::Domain(format!(
            "quantile levels must satisfy 0 < lower < upper < 1, got {levels:?}"
        )));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain("band grid must be finite and nonnegative".into()));
    }
    let xl = m.x_lim();
    let orient = m.orientation();
    grid.iter()
        .map(|&t| {
            let alpha = m.kernel_shape(t);
            let (mean_d, _) = m.mean_variance(t)?;
            let (lo_d, hi_d) = if alpha == 0.0 {
                (0.0, 0.0)
            } else {
                match m.variant() {
                    Variant::Bngp => {
                        let scale = m.theta().theta1;
                        (
                            std_gamma_quantile(lo, alpha) * scale,
                            std_gamma_quantile(hi, alpha) * scale,
                        )
                    }
                    _ => (
                        m.fwd(std_gamma_quantile(lo, alpha)),
                        m.fwd(std_gamma_quantile(hi, alpha)),
                    ),
                }
            };
            let a = orient.from_degradation(lo_d, xl);
            let b = orient.from_degradation(hi_d, xl);
            Ok(BandPoint {
                t,
                lower: a.min(b),
                mean: orient.from_degradation(mean_d, xl),
                upper: a.max(b),
            })
        })
        .collect()
}

/// A BNGP whose mean curve is least-squares matched to a reference BTGP.
#[derive(Debug, Clone, Serialize)]
pub struct MatchedBngp {
    pub spec: ModelSpec,
    /// Sum of squared mean-curve differences over the match grid.
    pub mean_residual: f64,
    /// Time grid the match was performed on.
    pub grid: Vec<f64>,
}

/// Determines BNGP parameters so its mean curve matches a proposed-BTGP
/// reference in least squares over a fixed grid spanning the reference's
/// rise to 95% of the bound.
///
/// The BNGP mean x_lim·(1 − exp(−(t/θ₃)^θ₂)) does not involve θ₁, so the
/// mean match fixes (θ₂, θ₃) and θ₁ is then chosen by a least-squares
/// match of the variance curves over the same grid (a linear problem,
/// since the BNGP variance is θ₁ times its mean curve).
pub fn matched_mean_bngp(reference: &ModelSpec) -> Result<MatchedBngp> {
    if reference.variant() != Variant::Btgp {
        return Err(Error::Unsupported(
            "mean matching is defined against the proposed BTGP reference".into(),
        ));
    }
    let xl = reference.x_lim();

    // Horizon: first doubling time where the reference mean passes 95%.
    let mut t_end = 1.0;
    while reference.mean_variance(t_end)?.0 < 0.95 * xl {
        t_end *= 2.0;
        if t_end > 1e6 {
            return Err(Error::Optimization(
                "reference mean never approaches the bound on a practical horizon".into(),
            ));
        }
    }
    let n = 60usize;
    let grid: Vec<f64> = (1..=n).map(|i| t_end * i as f64 / n as f64).collect();
    let mut ref_mean = Vec::with_capacity(n);
    let mut ref_var = Vec::with_capacity(n);
    for &t in &grid {
        let (mu, v) = reference.mean_variance(t)?;
        ref_mean.push(mu);
        ref_var.push(v);
    }

    let bngp_mean = |t: f64, th2: f64, th3: f64| xl * (-(-(t / th3).powf(th2)).exp_m1());
    let sse = |p: &[f64]| -> f64 {
        let (th2, th3) = (p[0].exp(), p[1].exp());
        grid.iter()
            .zip(&ref_mean)
            .map(|(&t, &m)| {
                let d = bngp_mean(t, th2, th3) - m;
                d * d
            })
            .sum()
    };

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0);
    let starts = latin_hypercube(
        &[(0.2f64.ln(), 5f64.ln()), ((0.05 * t_end).ln(), (2.0 * t_end).ln())],
        4,
        &mut rng,
    );
    let mut best: Option<crate::optim::NelderMeadResult> = None;
    let mut trace = Vec::new();
    for s in &starts {
        let r = nelder_mead(sse, s, 0.5, 1e-10, 4000);
        trace.push(r.fval);
        if best.as_ref().map_or(true, |b| r.fval < b.fval) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if !best.fval.is_finite() {
        return Err(Error::Optimization(format!(
            "mean matching failed; residuals per start: {trace:?}"
        )));
    }
    let (th2, th3) = (best.x[0].exp(), best.x[1].exp());

    // Least-squares θ₁ from Var_BNGP(t) = θ₁ · mean_BNGP(t).
    let mut num = 0.0;
    let mut den = 0.0;
    for (&t, &v) in grid.iter().zip(&ref_var) {
        let mcurve = bngp_mean(t, th2, th3);
        num += mcurve * v;
        den += mcurve * mcurve;
    }
    let theta1 = num / den;
    let spec = ModelSpec::new(
        Variant::Bngp,
        Theta::new3(theta1, th2, th3),
        xl,
        reference.orientation(),
    )?;
    Ok(MatchedBngp {
        spec,
        mean_residual: best.fval,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Orientation;

    fn btgp(theta1: f64, theta2: f64, theta3: f64) -> ModelSpec {
        ModelSpec::new(
            Variant::Btgp,
            Theta::new3(theta1, theta2, theta3),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap()
    }

    #[test]
    fn mumv_is_theta1_invariant() {
        let a = mumv(&btgp(0.38, 3.22, 21.18)).unwrap();
        let b = mumv(&btgp(0.76, 3.22, 21.18)).unwrap();
        assert!((a.mumv - b.mumv).abs() < 1e-3, "{} vs {}", a.mumv, b.mumv);
        assert!((a.tau_star - b.tau_star).abs() < 1e-4 * a.tau_star);
        // Calendar time scales inversely with the clock rate.
        assert!((a.t_star / b.t_star - 2.0).abs() < 1e-3);
    }

    #[test]
    fn mumv_reports_in_model_orientation() {
        let dec = mumv(&btgp(0.38, 3.22, 21.18)).unwrap();
        let inc = mumv(
            &ModelSpec::new(
                Variant::Btgp,
                Theta::new3(0.38, 3.22, 21.18),
                100.0,
                Orientation::IncreasingDegradation,
            )
            .unwrap(),
        )
        .unwrap();
        assert!((dec.mumv - (100.0 - inc.mumv)).abs() < 1e-9);
        assert!((dec.max_variance - inc.max_variance).abs() < 1e-9);
    }

    #[test]
    fn mumv_rejects_bngp() {
        let m = ModelSpec::new(
            Variant::Bngp,
            Theta::new3(0.82, 0.83, 76.51),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        assert!(matches!(mumv(&m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mumv_grid_corners_match_individual_calls() {
        let base = btgp(0.38, 3.22, 21.18);
        let g = mumv_grid(&base, (1.0, 2.0), (10.0, 20.0), (2, 2)).unwrap();
        assert!(g.failures.is_empty());
        for (i, &t2) in g.theta2.iter().enumerate() {
            for (j, &t3) in g.theta3.iter().enumerate() {
                let single = mumv(&btgp(0.38, t2, t3)).unwrap();
                assert_eq!(g.values[i][j], single.mumv, "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn band_collapses_at_time_zero() {
        let b = predictive_band(&btgp(1.66, 0.84, 136.12), &[0.0], (0.025, 0.975)).unwrap();
        assert_eq!((b[0].lower, b[0].mean, b[0].upper), (100.0, 100.0, 100.0));
    }

    #[test]
    fn btgp_band_width_rises_then_falls() {
        let m = btgp(1.66, 0.84, 136.12);
        let b = predictive_band(&m, &[5.0, 30.0, 100.0], (0.025, 0.975)).unwrap();
        let width: Vec<f64> = b.iter().map(|p| p.upper - p.lower).collect();
        assert!(width[1] > width[0], "width(30) {} <= width(5) {}", width[1], width[0]);
        assert!(width[1] > width[2], "width(30) {} <= width(100) {}", width[1], width[2]);
    }

    #[test]
    fn band_rejects_bad_levels() {
        let m = btgp(1.66, 0.84, 136.12);
        assert!(predictive_band(&m, &[1.0], (0.975, 0.025)).is_err());
        assert!(predictive_band(&m, &[1.0], (0.0, 0.975)).is_err());
    }

    #[test]
    fn jensen_gap_is_strict() {
        // Mean of the transform differs from the transform of the mean.
        let m = btgp(0.38, 3.22, 21.18);
        let t = 20.0;
        let (mean, _) = m.mean_variance(t).unwrap();
        let tau = m.kernel_shape(t);
        let transform_of_mean = m.fwd(tau); // kernel mean is tau
        assert!(
            (mean - transform_of_mean).abs() > 0.5,
            "Jensen gap unexpectedly small: {mean} vs {transform_of_mean}"
        );
    }

    #[test]
    fn matched_bngp_mean_curve_is_close_and_variance_bounded() {
        let reference = btgp(1.66, 0.84, 136.12);
        let matched = matched_mean_bngp(&reference).unwrap();
        // Sup-norm agreement of the mean curves over the match grid.
        let mut sup = 0.0f64;
        for &t in &matched.grid {
            let a = matched.spec.mean_variance(t).unwrap().0;
            let b = reference.mean_variance(t).unwrap().0;
            sup = sup.max((a - b).abs());
        }
        assert!(sup < 2.0, "mean curves differ by {sup} condition units");
        // The matched BNGP's limiting variance sits below the BTGP peak.
        let limit_var = matched.spec.theta().theta1 * 100.0;
        let peak = mumv(&reference).unwrap().max_variance;
        assert!(limit_var < peak, "{limit_var} !< {peak}");
    }

    #[test]
    fn matched_bngp_is_locally_optimal() {
        let reference = btgp(1.66, 0.84, 136.12);
        let matched = matched_mean_bngp(&reference).unwrap();
        let th = matched.spec.theta();
        let sse_of = |th2: f64, th3: f64| -> f64 {
            matched
                .grid
                .iter()
                .map(|&t| {
                    let m = 100.0 * (-(-(t / th3).powf(th2)).exp_m1());
                    let r = reference.mean_variance(t).unwrap().0;
                    (m - r) * (m - r)
                })
                .sum()
        };
        let at_opt = sse_of(th.theta2, th.theta3);
        assert!((at_opt - matched.mean_residual).abs() < 1e-9);
        for (d2, d3) in [(1.05, 1.0), (0.95, 1.0), (1.0, 1.05), (1.0, 0.95)] {
            assert!(
                sse_of(th.theta2 * d2, th.theta3 * d3) >= at_opt,
                "perturbed candidate beat the fit"
            );
        }
    }

    #[test]
    fn matched_bngp_requires_proposed_btgp() {
        let m = ModelSpec::new(
            Variant::Btgp2,
            Theta::new3(1.0, 1.0, 5.0),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        assert!(matches!(matched_mean_bngp(&m), Err(Error::Unsupported(_))));
    }
}
