//! Property and oracle suites beyond the acceptance gate: distributional
//! identities against simulation, independent re-derivations of the
//! policy recursion, and statistical consistency checks.

mod common;

use btgp::analysis::{matched_mean_bngp, mumv, predictive_band};
use btgp::gamma::{gamma_cdf, gamma_pdf, reg_lower_gamma, sample_gamma, GammaParams};
use btgp::inference::{fit_mle, log_likelihood, FitOptions};
use btgp::model::{ModelSpec, Orientation, Theta, Variant};
use btgp::policy::{
    abr_rate, cbr_probabilities, cbr_rate, optimize_cbr, simulate_policy, CbrOptions, CostConfig,
    GridRange, Policy, PolicyDecision, SweepSpec,
};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const XLIM: f64 = 100.0;

fn btgp_baseline() -> ModelSpec {
    ModelSpec::new(
        Variant::Btgp,
        Theta::new3(1.66, 0.84, 136.12),
        XLIM,
        Orientation::DecreasingCondition,
    )
    .unwrap()
}

fn bngp_baseline() -> ModelSpec {
    ModelSpec::new(
        Variant::Bngp,
        Theta::new3(0.82, 0.83, 76.51),
        XLIM,
        Orientation::DecreasingCondition,
    )
    .unwrap()
}

#[test]
fn gamma_cdf_matches_trapezoid_of_pdf() {
    let p = GammaParams::new(2.5, 1.3).unwrap();
    let x = 3.2;
    let n = 200_000;
    let h = x / n as f64;
    let mut acc = 0.5 * (gamma_pdf(0.0, &p) + gamma_pdf(x, &p));
    for k in 1..n {
        acc += gamma_pdf(k as f64 * h, &p);
    }
    let trapezoid = acc * h;
    assert!(
        (gamma_cdf(x, &p) - trapezoid).abs() < 1e-6,
        "cdf {} vs trapezoid {trapezoid}",
        gamma_cdf(x, &p)
    );
}

#[test]
fn gamma_infinite_divisibility_ks() {
    // Sum of independent Gamma(a1), Gamma(a2) draws is Gamma(a1+a2):
    // one-sample KS at the 1% level must not reject.
    let (a1, a2) = (0.7, 1.9);
    let p1 = GammaParams::new(a1, 1.0).unwrap();
    let p2 = GammaParams::new(a2, 1.0).unwrap();
    let sum_params = GammaParams::new(a1 + a2, 1.0).unwrap();
    let n = 100_000;
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let mut samples: Vec<f64> = (0..n)
        .map(|_| sample_gamma(&p1, &mut rng) + sample_gamma(&p2, &mut rng))
        .collect();
    let d = ks_statistic(&mut samples, |x| gamma_cdf(x, &sum_params));
    assert!(d < ks_crit_1pct(n), "KS statistic {d} rejects at 1%");
}

#[test]
fn marginal_distribution_matches_simulation_ks() {
    // Empirical X(t) of a transformed variant against its analytic CDF
    // P(alpha(t), G(x)).
    let m = ModelSpec::new(
        Variant::Btgp2,
        Theta::new3(8.0, 1.4, 20.0),
        XLIM,
        Orientation::IncreasingDegradation,
    )
    .unwrap();
    let t = 15.0;
    let alpha = m.kernel_shape(t);
    let kernel = GammaParams::new(alpha, 1.0).unwrap();
    let n = 100_000;
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let mut samples: Vec<f64> = (0..n)
        .map(|_| m.transform(sample_gamma(&kernel, &mut rng)).unwrap())
        .collect();
    let d = ks_statistic(&mut samples, |x| {
        if x >= XLIM {
            1.0
        } else {
            reg_lower_gamma(alpha, m.standard_kernel_level(x).unwrap())
        }
    });
    assert!(d < ks_crit_1pct(n), "KS statistic {d} rejects at 1%");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // inverse(transform(g)) = g wherever the transform has not saturated
    // in f64, for every transformed variant under random parameters.
    #[test]
    fn transform_round_trip_randomized(
        variant_idx in 1usize..8,
        theta1 in 0.1f64..10.0,
        theta2 in 0.3f64..3.0,
        theta3 in 0.5f64..300.0,
        theta4 in 0.3f64..3.0,
        log_g in -6.0f64..3.0,
    ) {
        let variant = Variant::ALL[variant_idx];
        let theta = if variant.has_theta4() {
            Theta::new4(theta1, theta2, theta3, theta4)
        } else {
            Theta::new3(theta1, theta2, theta3)
        };
        let m = ModelSpec::new(variant, theta, XLIM, Orientation::IncreasingDegradation).unwrap();
        let g = 10f64.powf(log_g);
        let x = m.transform(g).unwrap();
        // Levels within 1e-5 of the bound cannot carry 1e-9 round-trip
        // precision in f64 (the level no longer resolves 1 - x/x_lim).
        prop_assume!(x < XLIM * (1.0 - 1e-5));
        let back = m.inverse_transform(x).unwrap();
        prop_assert!((back - g).abs() <= 1e-9 * g.max(1.0), "{} -> {} -> {}", g, x, back);
    }

    // Monotone transforms commute with quantiles, so the analytic band
    // endpoints are true marginal quantiles.
    #[test]
    fn band_endpoints_are_monotone_in_level(q in 0.05f64..0.5) {
        let m = btgp_baseline();
        let band_lo = predictive_band(&m, &[20.0], (q, 0.5 + q / 2.0)).unwrap();
        let band_hi = predictive_band(&m, &[20.0], (q / 2.0, 0.5 + q / 4.0)).unwrap();
        prop_assert!(band_hi[0].lower <= band_lo[0].lower + 1e-12);
    }
}

#[test]
fn btgp_variance_rises_then_falls_battery() {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..8 {
        let th2 = 0.8 + 2.7 * rand::Rng::random::<f64>(&mut rng);
        let th3 = 5.0 * (40.0f64).powf(rand::Rng::random::<f64>(&mut rng));
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.0, th2, th3),
            XLIM,
            Orientation::IncreasingDegradation,
        )
        .unwrap();
        let peak = mumv(&m).unwrap();
        let var_at = |tau: f64| {
            m.with_theta(Theta::new3(1.0, th2, th3))
                .unwrap()
                .mean_variance(tau)
                .unwrap()
                .1
        };
        let late = var_at(40.0 * peak.tau_star);
        let huge = var_at(2000.0 * peak.tau_star);
        assert!(
            late < peak.max_variance,
            "variance failed to decline after its peak (θ₂={th2}, θ₃={th3})"
        );
        assert!(
            huge < 1e-3 * peak.max_variance,
            "variance failed to vanish (θ₂={th2}, θ₃={th3}): {huge} vs peak {}",
            peak.max_variance
        );
    }
}

#[test]
fn bngp_variance_is_nondecreasing_and_bounded() {
    let m = bngp_baseline();
    let bound = 0.82 * XLIM;
    let mut prev = -1.0;
    for i in 0..=300 {
        let t = i as f64;
        let (_, v) = m.mean_variance(t).unwrap();
        assert!(v >= prev - 1e-12, "variance decreased at t={t}");
        assert!(v <= bound + 1e-9, "variance exceeded θ₁·x_lim at t={t}");
        prev = v;
    }
}

#[test]
fn matched_bngp_paths_can_escape_the_bound() {
    // The mean-matched BNGP has unbounded sample paths: on the condition
    // scale some must eventually drop below zero.
    let matched = matched_mean_bngp(&btgp_baseline()).unwrap();
    let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 5.0).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let paths = matched.spec.simulate_paths(&grid, 2000, &mut rng).unwrap();
    let escaped = paths
        .iter()
        .filter(|p| p.iter().any(|&c| c < 0.0))
        .count();
    assert!(
        escaped > 20,
        "only {escaped}/2000 matched-BNGP paths crossed below zero"
    );
}

#[test]
fn quantile_transform_identity_against_empirical_quantiles() {
    // The q-quantile of X(t) is the transform of the kernel q-quantile:
    // the empirical CDF evaluated there must sit within ±1% of q.
    let m = btgp_baseline();
    let t = 25.0;
    let band = predictive_band(&m, &[t], (0.025, 0.975)).unwrap()[0];
    let n = 100_000;
    let grid = vec![0.0, t];
    let mut rng = ChaCha12Rng::seed_from_u64(19);
    let paths = m.simulate_paths(&grid, n, &mut rng).unwrap();
    let below_upper = paths.iter().filter(|p| p[1] <= band.upper).count() as f64 / n as f64;
    let below_lower = paths.iter().filter(|p| p[1] < band.lower).count() as f64 / n as f64;
    //

    // Decreasing orientation: the numeric upper band is the 0.975 kernel
    // quantile mapped through x_lim - T, i.e. the 0.025 tail.
    assert!(
        (below_upper - 0.975).abs() <= 0.01,
        "upper endpoint covers {below_upper}"
    );
    assert!(
        (below_lower - 0.025).abs() <= 0.01,
        "lower endpoint covers {below_lower}"
    );
}

#[test]
fn predictive_band_coverage_is_nominal() {
    let m = btgp_baseline();
    let times = [10.0, 30.0, 80.0];
    let mut grid = vec![0.0];
    grid.extend_from_slice(&times);
    let band = predictive_band(&m, &grid, (0.025, 0.975)).unwrap();
    let n = 10_000;
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    let paths = m.simulate_paths(&grid, n, &mut rng).unwrap();
    for (k, _) in times.iter().enumerate() {
        let bp = &band[k + 1];
        let covered = paths
            .iter()
            .filter(|p| p[k + 1] >= bp.lower && p[k + 1] <= bp.upper)
            .count() as f64
            / n as f64;
        assert!(
            (covered - 0.95).abs() <= 0.01,
            "coverage {covered} at t={}",
            bp.t
        );
    }
}

/// Mean of the inspection-grid-discretized remaining life: analytic side.
fn discretized_rl_mean(survival: impl Fn(f64) -> f64, step: f64) -> f64 {
    let mut acc = 0.0;
    let mut j = 0usize;
    loop {
        let s = survival(j as f64 * step);
        acc += step * s;
        if s < 1e-10 || j > 400_000 {
            break;
        }
        j += 1;
    }
    acc
}

#[test]
fn remaining_life_matches_monte_carlo() {
    // Exact epoch sampling on a step grid: the expected discretized
    // lifetime equals step * sum of survival values, so analytic and MC
    // estimates of the same quantity are compared at 3 s.e. with no
    // discretization slack.
    let step = 0.5;
    let n = 100_000usize;

    // Transformed variant: exact conditioning on the kernel state.
    let m = btgp_baseline();
    let (t0, x0) = (15.0, XLIM - 79.68);
    let rl = m.remaining_life(t0, x0, 60.0).unwrap();
    let analytic = discretized_rl_mean(|s| rl.survival(s), step);
    let g0 = m.standard_kernel_level(x0).unwrap();
    let g_fail = m.standard_kernel_level(60.0).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(29);
    let mut lifetimes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g = g0;
        let mut k = 0usize;
        while g < g_fail {
            k += 1;
            let da = m.kernel_shape(t0 + k as f64 * step) - m.kernel_shape(t0 + (k - 1) as f64 * step);
            g += sample_gamma(&GammaParams::new(da, 1.0).unwrap(), &mut rng);
        }
        lifetimes.push(k as f64 * step);
    }
    let mc = mean(&lifetimes);
    let se = (variance(&lifetimes) / n as f64).sqrt();
    assert!(
        (analytic - mc).abs() <= 3.0 * se,
        "BTGP RL: analytic {analytic} vs MC {mc} ± {se}"
    );
    // The integrated handle agrees with its own discretization to one step.
    assert!((rl.mean() - analytic).abs() <= step);

    // BNGP: the remaining margin crosses under a restarted clock.
    let m = bngp_baseline();
    let rl = m.remaining_life(t0, x0, 60.0).unwrap();
    let analytic = discretized_rl_mean(|s| rl.survival(s), step);
    let margin_std = (60.0 - x0) / 0.82;
    let mut lifetimes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut g = 0.0;
        let mut k = 0usize;
        while g < margin_std {
            k += 1;
            let da = m.kernel_shape(k as f64 * step) - m.kernel_shape((k - 1) as f64 * step);
            if da <= 0.0 {
                break;
            }
            g += sample_gamma(&GammaParams::new(da, 1.0).unwrap(), &mut rng);
        }
        lifetimes.push(k as f64 * step);
    }
    let mc = mean(&lifetimes);
    let se = (variance(&lifetimes) / n as f64).sqrt();
    assert!(
        (analytic - mc).abs() <= 3.0 * se,
        "BNGP RL: analytic {analytic} vs MC {mc} ± {se}"
    );
}

/// Independent re-derivation of the CBR recursion: plain barrier
/// convolution of gamma increments on the same lattice, written from the
/// definition rather than the production code path.
fn cbr_by_direct_convolution(
    m: &ModelSpec,
    xi: f64,
    xi_r: f64,
    t_i: f64,
    lattice: usize,
    tol: f64,
) -> (Vec<f64>, Vec<f64>) {
    let g_f = m.standard_kernel_level(xi).unwrap();
    let g_r = m.standard_kernel_level(xi_r).unwrap();
    let h = g_f / lattice as f64;
    let j_r = ((g_r / h).round() as usize).clamp(1, lattice);
    let mut mass = vec![0.0f64; j_r];
    mass[0] = 1.0;
    let mut p_r = Vec::new();
    let mut p_f = Vec::new();
    for n in 1.. {
        let da = m.kernel_shape(n as f64 * t_i) - m.kernel_shape((n - 1) as f64 * t_i);
        let cdf_at = |k_edge: i64| -> f64 {
            if k_edge < 0 {
                0.0
            } else {
                reg_lower_gamma(da, (k_edge as f64 + 0.5) * h)
            }
        };
        let mut pr = 0.0;
        let mut pf = 0.0;
        let mut next = vec![0.0f64; j_r];
        for (j, &mj) in mass.iter().enumerate() {
            pf += mj * (1.0 - cdf_at(lattice as i64 - j as i64 - 1));
            pr += mj
                * (cdf_at(lattice as i64 - j as i64 - 1) - cdf_at(j_r as i64 - j as i64 - 1));
            for (i, slot) in next.iter_mut().enumerate().skip(j) {
                let k = (i - j) as i64;
                *slot += mj * (cdf_at(k) - cdf_at(k - 1));
            }
        }
        p_r.push(pr);
        p_f.push(pf);
        mass = next;
        if mass.iter().sum::<f64>() < tol || n > 10_000 {
            break;
        }
    }
    (p_r, p_f)
}

#[test]
fn cbr_recursion_matches_direct_convolution() {
    // BNGP case (state-independent increments): the production recursion
    // and the from-definition convolution must agree to fp noise.
    let m = bngp_baseline();
    let (xi, xi_r, t_i) = (60.0, 53.0, 6.3);
    let opts = CbrOptions::default();
    let probs = cbr_probabilities(&m, xi, xi_r, t_i, &opts).unwrap();
    let (p_r, p_f) = cbr_by_direct_convolution(&m, xi, xi_r, t_i, opts.lattice_points, opts.residual_tol);
    assert_eq!(probs.p_r.len(), p_r.len());
    for i in 0..p_r.len() {
        assert!(
            (probs.p_r[i] - p_r[i]).abs() < 1e-9 && (probs.p_f[i] - p_f[i]).abs() < 1e-9,
            "epoch {}: ({}, {}) vs ({}, {})",
            i + 1,
            probs.p_r[i],
            probs.p_f[i],
            p_r[i],
            p_f[i]
        );
    }
}

#[test]
fn cbr_small_n_probabilities_match_exact_integrals() {
    // p_R(1), p_f(1) have closed forms; p_R(2), p_f(2) are single
    // integrals. The fine-lattice recursion must land within the
    // half-bin discretization bound.
    let m = bngp_baseline();
    let (xi, xi_r, t_i) = (60.0, 45.0, 9.0);
    let opts = CbrOptions {
        lattice_points: 4000,
        ..CbrOptions::default()
    };
    let probs = cbr_probabilities(&m, xi, xi_r, t_i, &opts).unwrap();
    let g_f = m.standard_kernel_level(xi).unwrap();
    let g_r = m.standard_kernel_level(xi_r).unwrap();
    let a1 = m.kernel_shape(t_i);
    let a2 = m.kernel_shape(2.0 * t_i) - a1;

    let pf1 = 1.0 - reg_lower_gamma(a1, g_f);
    let pr1 = reg_lower_gamma(a1, g_f) - reg_lower_gamma(a1, g_r);
    let pdf1 = |u: f64| {
        if u <= 0.0 {
            0.0
        } else {
            ((a1 - 1.0) * u.ln() - u - btgp::gamma::ln_gamma(a1)).exp()
        }
    };
    let pf2 = composite_simpson(|u| pdf1(u) * (1.0 - reg_lower_gamma(a2, g_f - u)), 0.0, g_r, 20_000);
    let pr2 = composite_simpson(
        |u| pdf1(u) * (reg_lower_gamma(a2, g_f - u) - reg_lower_gamma(a2, g_r - u)),
        0.0,
        g_r,
        20_000,
    );
    let tol = 2e-3;
    assert!((probs.p_f[0] - pf1).abs() < tol, "p_f(1): {} vs {pf1}", probs.p_f[0]);
    assert!((probs.p_r[0] - pr1).abs() < tol, "p_R(1): {} vs {pr1}", probs.p_r[0]);
    assert!((probs.p_f[1] - pf2).abs() < tol, "p_f(2): {} vs {pf2}", probs.p_f[1]);
    assert!((probs.p_r[1] - pr2).abs() < tol, "p_R(2): {} vs {pr2}", probs.p_r[1]);
}

#[test]
fn cbr_failure_only_limit_approaches_first_passage_rate() {
    // With an empty preventive window and free inspections, shrinking the
    // interval recovers the run-to-failure renewal rate C_F / E[T].
    let m = btgp_baseline();
    let xi = 60.0;
    let costs = CostConfig::new(0.0, 100.0, 500.0).unwrap();
    let opts = CbrOptions {
        lattice_points: 1600,
        ..CbrOptions::default()
    };
    let rate = cbr_rate(&m, xi, xi, 0.1, &costs, &opts).unwrap();
    let g = m.standard_kernel_level(xi).unwrap();
    let mut horizon = 64.0;
    while reg_lower_gamma(m.kernel_shape(horizon), g) > 1e-10 {
        horizon *= 2.0;
    }
    let e_t = composite_simpson(|t| reg_lower_gamma(m.kernel_shape(t), g), 0.0, horizon, 100_000);
    let limit = 500.0 / e_t;
    assert!(
        rel_err(rate, limit) < 0.02,
        "CBR t_I→0 limit: {rate} vs first-passage rate {limit}"
    );
}

#[test]
fn policy_oracle_agreement_battery() {
    // Analytic rates vs renewal-reward simulation across a mixed battery
    // of models, policies, and costs.
    let b2 = ModelSpec::new(
        Variant::Btgp2,
        Theta::new3(8.0, 1.4, 20.0),
        XLIM,
        Orientation::DecreasingCondition,
    )
    .unwrap();
    let cases: Vec<(ModelSpec, Policy, CostConfig, u64)> = vec![
        (
            bngp_baseline(),
            Policy::Abr { t_r: 44.8 },
            CostConfig::new(0.0, 100.0, 500.0).unwrap(),
            51,
        ),
        (
            bngp_baseline(),
            Policy::Cbr { t_i: 6.3, xi_r: 53.0 },
            CostConfig::new(1.0, 100.0, 500.0).unwrap(),
            52,
        ),
        (
            btgp_baseline(),
            Policy::Abr { t_r: 30.0 },
            CostConfig::new(0.0, 80.0, 200.0).unwrap(),
            53,
        ),
        (
            b2.clone(),
            Policy::Cbr { t_i: 4.0, xi_r: 50.0 },
            CostConfig::new(2.0, 120.0, 900.0).unwrap(),
            54,
        ),
    ];
    let opts = CbrOptions {
        lattice_points: 2000,
        ..CbrOptions::default()
    };
    for (m, policy, costs, seed) in cases {
        let analytic = match policy {
            Policy::Abr { t_r } => abr_rate(&m, 60.0, &costs, t_r).unwrap(),
            Policy::Cbr { t_i, xi_r } => cbr_rate(&m, 60.0, xi_r, t_i, &costs, &opts).unwrap(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let sim = simulate_policy(&m, &policy, 60.0, &costs, 100_000, &mut rng).unwrap();
        assert!(
            (analytic - sim.rate).abs() <= 3.0 * sim.std_error,
            "{:?} on {}: analytic {analytic} vs MC {} ± {}",
            policy,
            m.variant(),
            sim.rate,
            sim.std_error
        );
    }
}

#[test]
fn abr_threshold_sweep_matches_qualitative_shape() {
    // Tighter failure thresholds (higher condition floor) mean earlier
    // replacement for both models, with the BNGP consistently costlier.
    let costs = CostConfig::new(1.0, 100.0, 500.0).unwrap();
    let grid = GridRange::new(5.0, 120.0, 0.1).unwrap();
    let xis = [50.0, 55.0, 60.0, 65.0, 70.0];
    let bngp = btgp::policy::threshold_sweep(
        &bngp_baseline(),
        &costs,
        &xis,
        &SweepSpec::Abr { grid },
    )
    .unwrap();
    let btgp = btgp::policy::threshold_sweep(
        &btgp_baseline(),
        &costs,
        &xis,
        &SweepSpec::Abr { grid },
    )
    .unwrap();
    for (rn, rt) in bngp.iter().zip(&btgp) {
        assert!(
            rn.rate >= rt.rate,
            "BNGP rate {} fell below BTGP rate {} at ξ={}",
            rn.rate,
            rt.rate,
            rn.xi
        );
    }
    for rows in [&bngp, &btgp] {
        for w in rows.windows(2) {
            let (PolicyDecision::Abr { t_r: a }, PolicyDecision::Abr { t_r: b }) =
                (w[0].decision, w[1].decision)
            else {
                panic!("expected ABR rows")
            };
            assert!(
                b > a,
                "optimal age should grow with the degradation margin: {a} then {b}"
            );
        }
    }
}

#[test]
fn cbr_sweep_tight_threshold_separates_models() {
    // At a failure threshold below condition 40 the BTGP tolerates
    // inspection intervals beyond 10 years while the BNGP stays at 4-6.
    let costs = CostConfig::new(1.0, 100.0, 500.0).unwrap();
    let t_i_grid = GridRange::new(2.0, 16.0, 0.25).unwrap();
    let xi = 65.0; // condition 35
    let xi_r: Vec<f64> = (45..65).map(|k| k as f64).collect();
    let opts = CbrOptions::default();
    let bngp = optimize_cbr(&bngp_baseline(), xi, &costs, &t_i_grid, &xi_r, &opts).unwrap();
    let btgp = optimize_cbr(&btgp_baseline(), xi, &costs, &t_i_grid, &xi_r, &opts).unwrap();
    let PolicyDecision::Cbr { t_i: ti_n, .. } = bngp.decision else {
        panic!()
    };
    let PolicyDecision::Cbr { t_i: ti_t, .. } = btgp.decision else {
        panic!()
    };
    assert!(ti_t > 10.0, "BTGP t_I = {ti_t}, expected > 10");
    assert!((4.0..=6.0).contains(&ti_n), "BNGP t_I = {ti_n}, expected within [4, 6]");
}

#[test]
fn loglik_at_truth_beats_perturbed_parameters() {
    let truth = btgp_baseline();
    let perturbed = truth
        .with_theta(Theta::new3(1.66 * 1.5, 0.84 * 1.5, 136.12 * 1.5))
        .unwrap();
    let ages: Vec<f64> = (1..=8).map(|i| i as f64 * 2.5).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(37);
    let mut wins = 0;
    let reps = 100;
    for _ in 0..reps {
        let h = simulate_histories(&truth, 20, &ages, &mut rng, "p-");
        let lt = log_likelihood(&truth, &h).unwrap();
        let lp = log_likelihood(&perturbed, &h).unwrap();
        if lt > lp {
            wins += 1;
        }
    }
    assert!(wins >= 95, "truth beat the perturbation only {wins}/{reps} times");
}

#[test]
fn model_selection_prefers_generating_family_on_pooled_data() {
    // Fitting both candidates to BTGP-generated data: the BTGP fit's AIC
    // wins in the majority of replications.
    let truth = btgp_baseline();
    let ages: Vec<f64> = (1..=8).map(|i| i as f64 * 2.5).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    let opts = FitOptions::default();
    let mut btgp_wins = 0;
    let reps = 5;
    for _ in 0..reps {
        let h = simulate_histories(&truth, 200, &ages, &mut rng, "sel-");
        let fb = fit_mle(Variant::Btgp, &h, XLIM, &opts).unwrap();
        let fn_ = fit_mle(Variant::Bngp, &h, XLIM, &opts).unwrap();
        if fb.aic < fn_.aic {
            btgp_wins += 1;
        }
    }
    assert!(btgp_wins > reps / 2, "BTGP won only {btgp_wins}/{reps}");
}

#[test]
fn mle_errors_shrink_with_more_assets() {
    // Median relative error over replications for each θ decreases from
    // 50 to 800 simulated assets.
    let truth = btgp_baseline();
    let ages: Vec<f64> = (1..=8).map(|i| i as f64 * 2.5).collect();
    let opts = FitOptions::default();
    let reps = 5;
    let mut medians: Vec<[f64; 3]> = Vec::new();
    for (si, &size) in [50usize, 200, 800].iter().enumerate() {
        let mut errs: Vec<[f64; 3]> = Vec::new();
        for rep in 0..reps {
            let mut rng = ChaCha12Rng::seed_from_u64(1000 + (si * reps + rep) as u64);
            let h = simulate_histories(&truth, size, &ages, &mut rng, "c-");
            let fit = fit_mle(Variant::Btgp, &h, XLIM, &opts).unwrap();
            let th = fit.spec.theta();
            errs.push([
                rel_err(th.theta1, 1.66),
                rel_err(th.theta2, 0.84),
                rel_err(th.theta3, 136.12),
            ]);
        }
        let mut med = [0.0f64; 3];
        for k in 0..3 {
            let mut col: Vec<f64> = errs.iter().map(|e| e[k]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            med[k] = col[reps / 2];
        }
        medians.push(med);
    }
    for k in 0..3 {
        assert!(
            medians[2][k] < medians[0][k],
            "θ{} median error did not shrink: {:?}",
            k + 1,
            medians.iter().map(|m| m[k]).collect::<Vec<_>>()
        );
    }
}

#[test]
fn fit_reports_plausible_standard_errors() {
    let truth = btgp_baseline();
    let ages: Vec<f64> = (1..=8).map(|i| i as f64 * 2.5).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(53);
    let h = simulate_histories(&truth, 200, &ages, &mut rng, "se-");
    let fit = fit_mle(Variant::Btgp, &h, XLIM, &FitOptions::default()).unwrap();
    let ses = fit.std_errors.expect("healthy fit should report SEs");
    assert_eq!(ses.len(), 3);
    for (se, val) in ses.iter().zip([1.66, 0.84, 136.12]) {
        assert!(*se > 0.0 && se.is_finite());
        assert!(*se < val, "SE {se} implausibly large for {val}");
    }
}
