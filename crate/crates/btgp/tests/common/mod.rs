//! Shared oracles for the integration suites. Everything here is kept
//! independent of the library's own quadrature/optimization paths so the
//! checks remain two-sided.
#![allow(dead_code)] // each suite uses its own subset

use btgp::inference::{AssetHistory, InspectionRecord};
use btgp::model::ModelSpec;
use rand::Rng;

/// Composite Simpson rule with a fixed (even) panel count.
pub fn composite_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// ∫_0^hi of a gamma density, handling the integrable x^(a-1) singularity
/// for a < 1 by the substitution x = t^(1/a) (which flattens it exactly:
/// the substituted integrand tends to the finite constant k·pdf(x)·x^(1-a)
/// as t → 0).
pub fn gamma_pdf_mass<F: Fn(f64) -> f64>(pdf: F, shape: f64, hi: f64, n: usize) -> f64 {
    if shape >= 1.0 {
        composite_simpson(pdf, 0.0, hi, n)
    } else {
        let k = 1.0 / shape;
        let x0 = 1e-100;
        let limit0 = k * pdf(x0) * x0.powf(1.0 - shape);
        composite_simpson(
            |t| {
                if t == 0.0 {
                    limit0
                } else {
                    let x = t.powf(k);
                    pdf(x) * k * t.powf(k - 1.0)
                }
            },
            0.0,
            hi.powf(shape),
            n,
        )
    }
}

/// One-sample Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((fx - lo).abs()).max((hi - fx).abs());
    }
    d
}

/// KS critical value at the 1% level (asymptotic).
pub fn ks_crit_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Simulates inspection histories from a model: one path per asset,
/// sampled at the given ages (age 0 is the anchor and is not recorded).
pub fn simulate_histories<R: Rng + ?Sized>(
    m: &ModelSpec,
    n_assets: usize,
    ages: &[f64],
    rng: &mut R,
    id_prefix: &str,
) -> Vec<AssetHistory> {
    let mut grid = vec![0.0];
    grid.extend_from_slice(ages);
    let paths = m.simulate_paths(&grid, n_assets, rng).expect("valid grid");
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let records: Vec<InspectionRecord> = ages
                .iter()
                .zip(p.iter().skip(1))
                .map(|(&age, &condition)| InspectionRecord { age, condition })
                .collect();
            AssetHistory::new(format!("{id_prefix}{i:04}"), records, m.x_lim()).expect("valid records")
        })
        .collect()
}

/// Relative error helper.
pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}
