//! Data cleansing, maximum-likelihood fitting, AIC model selection, and
//! the per-asset best-model census.
//!
//! The likelihood is a product of conditional increment densities over
//! all assets and inspections, with every asset anchored at degradation 0
//! at time 0. Assets are treated as statistically independent; the
//! log-likelihood is a plain sum, so it is invariant under reordering and
//! splitting.

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Orientation, Theta, Variant};
use crate::optim::{latin_hypercube, nelder_mead, solve_dense};
use rand::SeedableRng;
use serde::Serialize;

/// One inspection record on the data's own scale (condition index or
/// degradation, per the run's orientation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InspectionRecord {
    pub age: f64,
    pub condition: f64,
}

/// One asset's ordered inspection history.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssetHistory {
    pub asset_id: String,
    pub records: Vec<InspectionRecord>,
    pub x_lim: f64,
}

impl AssetHistory {
    /// Validates ordering (ages strictly increasing, first age >= 0) and
    /// range (all condition values within [0, x_lim]).
    pub fn new(asset_id: impl Into<String>, records: Vec<InspectionRecord>, x_lim: f64) -> Result<Self> {
        let asset_id = asset_id.into();
        if !(x_lim > 0.0) || !x_lim.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "x_lim must be a positive finite real, got {x_lim}"
            )));
        }
        if let Some(first) = records.first() {
            if first.age < 0.0 {
                return Err(Error::Data(format!(
                    "asset {asset_id}: first age {} is negative",
                    first.age
                )));
            }
        }
        for (i, w) in records.windows(2).enumerate() {
            if !(w[1].age > w[0].age) {
                return Err(Error::Data(format!(
                    "asset {asset_id}: ages must be strictly increasing (records {i} and {})",
                    i + 1
                )));
            }
        }
        for (i, r) in records.iter().enumerate() {
            if !r.age.is_finite() || !r.condition.is_finite() {
                return Err(Error::Data(format!(
                    "asset {asset_id}: record {i} is not finite"
                )));
            }
            if r.condition < 0.0 || r.condition > x_lim {
                return Err(Error::Data(format!(
                    "asset {asset_id}: record {i} condition {} outside [0, {x_lim}]",
                    r.condition
                )));
            }
        }
        Ok(AssetHistory {
            asset_id,
            records,
            x_lim,
        })
    }
}

/// What the cleansing pass did to a history.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CleanseReport {
    /// (earlier age, later age, value): equal consecutive readings merged,
    /// keeping the later timestamp.
    pub merged: Vec<(f64, f64, f64)>,
    /// Records dropped because they broke the monotone prefix.
    pub dropped: Vec<InspectionRecord>,
    /// False when fewer than 2 records survived.
    pub eligible: bool,
}

/// Retains the longest strictly monotone prefix of a history, merging
/// strictly-equal consecutive condition readings (later timestamp kept)
/// and dropping everything after the first trend reversal.
pub fn cleanse(history: &AssetHistory, orientation: Orientation) -> (AssetHistory, CleanseReport) {
    let mut kept: Vec<InspectionRecord> = Vec::with_capacity(history.records.len());
    let mut report = CleanseReport::default();
    let mut stopped = false;
    for r in &history.records {
        if stopped {
            report.dropped.push(*r);
            continue;
        }
        match kept.last() {
            None => kept.push(*r),
            Some(last) => {
                let ok = match orientation {
                    Orientation::DecreasingCondition => r.condition < last.condition,
                    Orientation::IncreasingDegradation => r.condition > last.condition,
                };
                if ok {
                    kept.push(*r);
                } else if r.condition == last.condition {
                    report.merged.push((last.age, r.age, r.condition));
                    kept.last_mut().unwrap().age = r.age;
                } else {
                    stopped = true;
                    report.dropped.push(*r);
                }
            }
        }
    }
    report.eligible = kept.len() >= 2;
    let cleaned = AssetHistory {
        asset_id: history.asset_id.clone(),
        records: kept,
        x_lim: history.x_lim,
    };
    (cleaned, report)
}

/// One ready-to-evaluate likelihood increment in degradation units.
#[derive(Debug, Clone, Copy)]
struct Increment {
    t_prev: f64,
    t_curr: f64,
    x_prev: f64,
    x_curr: f64,
}

/// Converts histories into anchored degradation increments, validating
/// strict positivity. Each asset is anchored at (t = 0, degradation 0);
/// leading records still at degradation 0 shift the anchor to their
/// timestamp (the zero-increment merge policy applied to the anchor).
fn prepare_increments(
    histories: &[AssetHistory],
    x_lim: f64,
    orientation: Orientation,
) -> Result<Vec<Increment>> {
    let mut out = Vec::new();
    for h in histories {
        if (h.x_lim - x_lim).abs() > 1e-12 {
            return Err(Error::Data(format!(
                "asset {}: history x_lim {} does not match model x_lim {}",
                h.asset_id, h.x_lim, x_lim
            )));
        }
        let mut t_prev = 0.0;
        let mut x_prev = 0.0;
        for (i, r) in h.records.iter().enumerate() {
            let x = orientation.to_degradation(r.condition, x_lim);
            if x >= x_lim {
                return Err(Error::Data(format!(
                    "asset {}: record {i} (age {}) is saturated at the bound x_lim and carries no density information",
                    h.asset_id, r.age
                )));
            }
            let dx = x - x_prev;
            if dx < 0.0 {
                return Err(Error::Data(format!(
                    "asset {}: record {i} (age {}) decreases the degradation; cleanse the history first",
                    h.asset_id, r.age
                )));
            }
            if dx == 0.0 {
                if x == 0.0 {
                    // Still pristine: move the anchor forward.
                    t_prev = r.age;
                    continue;
                }
                return Err(Error::Data(format!(
                    "asset {}: record {i} (age {}) repeats the previous condition; cleanse the history first",
                    h.asset_id, r.age
                )));
            }
            out.push(Increment {
                t_prev,
                t_curr: r.age,
                x_prev,
                x_curr: x,
            });
            t_prev = r.age;
            x_prev = x;
        }
    }
    Ok(out)
}

fn ln_likelihood_of(m: &ModelSpec, increments: &[Increment]) -> f64 {
    let mut sum = 0.0;
    for inc in increments {
        let term = m.ln_increment_pdf_unchecked(
            inc.t_prev,
            inc.t_curr - inc.t_prev,
            inc.x_prev,
            inc.x_curr - inc.x_prev,
        );
        if !term.is_finite() {
            return f64::NEG_INFINITY;
        }
        sum += term;
    }
    sum
}

/// Log-likelihood of a model given inspection histories (Jacobian-correct
/// increment densities, anchored at zero). Returns -inf when the
/// parameters place any observed increment outside their support.
pub fn log_likelihood(m: &ModelSpec, histories: &[AssetHistory]) -> Result<f64> {
    let increments = prepare_increments(histories, m.x_lim(), m.orientation())?;
    if increments.is_empty() {
        return Err(Error::Data("no usable increments in the supplied histories".into()));
    }
    Ok(ln_likelihood_of(m, &increments))
}

/// Options for maximum-likelihood fitting.
#[derive(Debug, Clone, Serialize)]
pub struct FitOptions {
    pub orientation: Orientation,
    /// Seed for the Latin-hypercube starting points.
    pub seed: u64,
    pub n_starts: usize,
    pub max_iterations: usize,
    /// Simplex diameter tolerance in log-parameter space.
    pub simplex_tol: f64,
}

impl FitOptions {
    pub fn new(orientation: Orientation) -> Self {
        FitOptions {
            orientation,
            seed: 0,
            n_starts: 8,
            max_iterations: 2000,
            simplex_tol: 1e-8,
        }
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions::new(Orientation::DecreasingCondition)
    }
}

/// A fitted model with its likelihood, AIC, and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub loglik: f64,
    pub aic: f64,
    pub n_params: usize,
    pub converged: bool,
    pub n_increments: usize,
    /// Approximate standard errors of θ from the numerical Hessian of the
    /// log-likelihood at the optimum (central differences in log space).
    pub std_errors: Option<Vec<f64>>,
}

// Log-space Latin-hypercube start ranges (generous; Nelder–Mead may walk
// outside them, and exp keeps every probe positive).
fn start_ranges(variant: Variant) -> Vec<(f64, f64)> {
    let t1 = (0.01f64.ln(), 100f64.ln());
    let t2 = (0.1f64.ln(), 8f64.ln());
    let t3 = (0.1f64.ln(), 1000f64.ln());
    let t4 = (0.2f64.ln(), 5f64.ln());
    let mut v = vec![t1, t2, t3];
    if variant.has_theta4() {
        v.push(t4);
    }
    v
}

/// Maximum-likelihood fit of one variant by multi-start Nelder–Mead over
/// log-parameters. x_lim is given, never estimated. Deterministic for a
/// fixed seed and options.
pub fn fit_mle(
    variant: Variant,
    histories: &[AssetHistory],
    x_lim: f64,
    options: &FitOptions,
) -> Result<FittedModel> {
    let increments = prepare_increments(histories, x_lim, options.orientation)?;
    if increments.is_empty() {
        return Err(Error::Data("no usable increments in the supplied histories".into()));
    }
    let template = ModelSpec::new(
        variant,
        if variant.has_theta4() {
            Theta::new4(1.0, 1.0, 1.0, 1.0)
        } else {
            Theta::new3(1.0, 1.0, 1.0)
        },
        x_lim,
        options.orientation,
    )?;

    let objective = |log_theta: &[f64]| -> f64 {
        let theta: Vec<f64> = log_theta.iter().map(|v| v.exp()).collect();
        match template.with_theta(Theta::from_slice(&theta)) {
            Ok(m) => -ln_likelihood_of(&m, &increments),
            Err(_) => f64::INFINITY,
        }
    };

    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(options.seed);
    let starts = latin_hypercube(&start_ranges(variant), options.n_starts, &mut rng);

    let mut runs = Vec::with_capacity(starts.len());
    for start in &starts {
        let r = nelder_mead(
            objective,
            start,
            0.5,
            options.simplex_tol,
            options.max_iterations,
        );
        runs.push(r);
    }
    runs.sort_by(|a, b| a.fval.partial_cmp(&b.fval).unwrap_or(std::cmp::Ordering::Equal));
    let best = &runs[0];
    if !best.fval.is_finite() {
        return Err(Error::Fit(format!(
            "{variant}: non-finite likelihood from every start ({} starts, {} increments)",
            options.n_starts,
            increments.len()
        )));
    }

    // Converged: the best run met the simplex criterion and, when another
    // start finished with a finite value, the runner-up corroborates it
    // (close objective or close parameters).
    let corroborated = match runs.iter().skip(1).find(|r| r.fval.is_finite()) {
        None => true,
        Some(second) => {
            (second.fval - best.fval).abs() <= 1e-3
                || best
                    .x
                    .iter()
                    .zip(&second.x)
                    .all(|(a, b)| (a - b).abs() <= 1e-3)
        }
    };
    let converged = best.converged && corroborated;

    let theta_hat: Vec<f64> = best.x.iter().map(|v| v.exp()).collect();
    let spec = template.with_theta(Theta::from_slice(&theta_hat))?;
    let loglik = -best.fval;
    let n_params = variant.n_params();
    let aic = 2.0 * n_params as f64 - 2.0 * loglik;
    let std_errors = hessian_std_errors(&objective, &best.x, &theta_hat);

    Ok(FittedModel {
        spec,
        loglik,
        aic,
        n_params,
        converged,
        n_increments: increments.len(),
        std_errors,
    })
}

/// Approximate θ-scale standard errors from the observed information in
/// log space (central differences, step 1e-4).
fn hessian_std_errors<F: Fn(&[f64]) -> f64>(
    neg_loglik: &F,
    log_theta: &[f64],
    theta: &[f64],
) -> Option<Vec<f64>> {
    let n = log_theta.len();
    let h = 1e-4;
    let mut info = vec![vec![0.0; n]; n];
    let probe = |deltas: &[(usize, f64)]| -> f64 {
        let mut x = log_theta.to_vec();
        for &(i, d) in deltas {
            x[i] += d;
        }
        neg_loglik(&x)
    };
    let f0 = probe(&[]);
    if !f0.is_finite() {
        return None;
    }
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                (probe(&[(i, h)]) - 2.0 * f0 + probe(&[(i, -h)])) / (h * h)
            } else {
                (probe(&[(i, h), (j, h)]) - probe(&[(i, h), (j, -h)])
                    - probe(&[(i, -h), (j, h)])
                    + probe(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            };
            if !v.is_finite() {
                return None;
            }
            info[i][j] = v;
            info[j][i] = v;
        }
    }
    // Covariance = inverse observed information; solve one column at a time.
    let mut ses = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let col = solve_dense(&info, &e)?;
        if col[i] <= 0.0 {
            return None;
        }
        // Delta method back to the θ scale.
        ses.push(col[i].sqrt() * theta[i]);
    }
    Some(ses)
}

/// One row of a model-selection comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateFit {
    pub variant: Variant,
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub converged: bool,
    pub n_params: usize,
    pub error: Option<String>,
}

/// Result of per-asset model selection.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSelection {
    pub best: FittedModel,
    pub table: Vec<CandidateFit>,
}

/// Fits every candidate variant to one history and picks the minimum-AIC
/// model. Ties break toward fewer parameters, then the fixed candidate
/// order. Failed candidates stay in the table but are excluded from the
/// argmin.
pub fn select_best_model(
    history: &AssetHistory,
    candidates: &[Variant],
    options: &FitOptions,
) -> Result<ModelSelection> {
    if candidates.is_empty() {
        return Err(Error::Selection("no candidate variants supplied".into()));
    }
    let mut table = Vec::with_capacity(candidates.len());
    let mut fits: Vec<(usize, FittedModel)> = Vec::new();
    for (idx, &v) in candidates.iter().enumerate() {
        match fit_mle(v, std::slice::from_ref(history), history.x_lim, options) {
            Ok(f) => {
                table.push(CandidateFit {
                    variant: v,
                    loglik: Some(f.loglik),
                    aic: Some(f.aic),
                    converged: f.converged,
                    n_params: f.n_params,
                    error: None,
                });
                fits.push((idx, f));
            }
            Err(e) => table.push(CandidateFit {
                variant: v,
                loglik: None,
                aic: None,
                converged: false,
                n_params: v.n_params(),
                error: Some(e.to_string()),
            }),
        }
    }
    let best = fits
        .into_iter()
        .min_by(|(ia, a), (ib, b)| {
            let aic_cmp = if (a.aic - b.aic).abs() <= 1e-9 {
                std::cmp::Ordering::Equal
            } else {
                a.aic.partial_cmp(&b.aic).unwrap()
            };
            aic_cmp
                .then(a.n_params.cmp(&b.n_params))
                .then(ia.cmp(ib))
        })
        .map(|(_, f)| f)
        .ok_or_else(|| {
            Error::Selection(format!(
                "all {} candidates failed to fit asset {}",
                candidates.len(),
                history.asset_id
            ))
        })?;
    Ok(ModelSelection { best, table })
}

/// Census row: how often a candidate won.
#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub variant: Variant,
    pub wins: usize,
    pub percent: f64,
}

/// Best-model census over a set of histories.
#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub total_histories: usize,
    pub eligible: usize,
    pub selected: usize,
    pub rows: Vec<CensusRow>,
    /// Histories whose selection failed outright, with the error.
    pub failures: Vec<(String, String)>,
}

/// Minimum record count for a history to enter the census.
pub const CENSUS_MIN_RECORDS: usize = 6;

/// Cleanses every history, keeps those with at least
/// [`CENSUS_MIN_RECORDS`] surviving records, selects the best model for
/// each, and tabulates win percentages. Histories are processed in
/// asset-id order so the reduction is deterministic.
pub fn census(
    histories: &[AssetHistory],
    candidates: &[Variant],
    options: &FitOptions,
) -> Result<Census> {
    let mut cleaned: Vec<AssetHistory> = histories
        .iter()
        .map(|h| cleanse(h, options.orientation).0)
        .filter(|h| h.records.len() >= CENSUS_MIN_RECORDS)
        .collect();
    cleaned.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    if cleaned.is_empty() {
        return Err(Error::Data(format!(
            "census: no history has {CENSUS_MIN_RECORDS} or more records after cleansing"
        )));
    }
    let mut wins: std::collections::HashMap<Variant, usize> = std::collections::HashMap::new();
    let mut failures = Vec::new();
    let mut selected = 0usize;
    for h in &cleaned {
        match select_best_model(h, candidates, options) {
            Ok(sel) => {
                *wins.entry(sel.best.spec.variant()).or_insert(0) += 1;
                selected += 1;
            }
            Err(e) => failures.push((h.asset_id.clone(), e.to_string())),
        }
    }
    if selected == 0 {
        return Err(Error::Selection("census: every selection failed".into()));
    }
    let rows = candidates
        .iter()
        .map(|&v| {
            let w = wins.get(&v).copied().unwrap_or(0);
            CensusRow {
                variant: v,
                wins: w,
                percent: 100.0 * w as f64 / selected as f64,
            }
        })
        .collect();
    Ok(Census {
        total_histories: histories.len(),
        eligible: cleaned.len(),
        selected,
        rows,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::ln_gamma_pdf_std;

    fn rec(age: f64, condition: f64) -> InspectionRecord {
        InspectionRecord { age, condition }
    }

    fn hist(values: &[(f64, f64)]) -> AssetHistory {
        AssetHistory::new(
            "a1",
            values.iter().map(|&(a, c)| rec(a, c)).collect(),
            100.0,
        )
        .unwrap()
    }

    #[test]
    fn history_validation_catches_disorder_and_range() {
        assert!(AssetHistory::new("x", vec![rec(5.0, 90.0), rec(3.0, 80.0)], 100.0).is_err());
        assert!(AssetHistory::new("x", vec![rec(-1.0, 90.0)], 100.0).is_err());
        assert!(AssetHistory::new("x", vec![rec(1.0, 105.0)], 100.0).is_err());
        assert!(AssetHistory::new("x", vec![rec(1.0, 90.0), rec(2.0, 80.0)], 100.0).is_ok());
    }

    #[test]
    fn cleanse_keeps_monotone_history_unchanged() {
        let h = hist(&[(2.0, 100.0), (5.0, 92.0), (9.0, 85.0)]);
        let (c, rep) = cleanse(&h, Orientation::DecreasingCondition);
        assert_eq!(c.records, h.records);
        assert!(rep.eligible && rep.merged.is_empty() && rep.dropped.is_empty());
    }

    #[test]
    fn cleanse_retains_monotone_prefix_and_reports_rest() {
        let h = hist(&[(1.0, 100.0), (4.0, 92.0), (6.0, 95.0), (8.0, 90.0)]);
        let (c, rep) = cleanse(&h, Orientation::DecreasingCondition);
        let kept: Vec<f64> = c.records.iter().map(|r| r.condition).collect();
        assert_eq!(kept, vec![100.0, 92.0]);
        assert_eq!(rep.dropped.len(), 2);
        assert!(rep.eligible);
    }

    #[test]
    fn cleanse_merges_ties_keeping_later_timestamp() {
        let h = hist(&[(1.0, 100.0), (5.0, 92.0), (7.0, 92.0), (9.0, 88.0)]);
        let (c, rep) = cleanse(&h, Orientation::DecreasingCondition);
        let ages: Vec<f64> = c.records.iter().map(|r| r.age).collect();
        assert_eq!(ages, vec![1.0, 7.0, 9.0]);
        assert_eq!(rep.merged, vec![(5.0, 7.0, 92.0)]);
    }

    #[test]
    fn cleanse_flags_short_histories_ineligible() {
        let h = hist(&[(1.0, 90.0), (2.0, 95.0), (3.0, 99.0)]);
        let (c, rep) = cleanse(&h, Orientation::DecreasingCondition);
        assert_eq!(c.records.len(), 1);
        assert!(!rep.eligible);
    }

    #[test]
    fn single_increment_bngp_likelihood_is_hand_checkable() {
        let m = ModelSpec::new(
            Variant::Bngp,
            Theta::new3(0.82, 0.83, 76.51),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let h = hist(&[(10.0, 88.0)]); // one increment: degradation 0 -> 12 over (0, 10]
        let ll = log_likelihood(&m, std::slice::from_ref(&h)).unwrap();
        let d_alpha = m.kernel_shape(10.0);
        let expected = ln_gamma_pdf_std(12.0 / 0.82, d_alpha) - 0.82f64.ln();
        assert!((ll - expected).abs() < 1e-12, "{ll} vs {expected}");
    }

    #[test]
    fn likelihood_change_of_variables_is_consistent_across_variants() {
        // BTGP with θ₂ = 1 and BTGP1 with a reciprocal clock rate are the
        // same process, so the Jacobian bookkeeping must agree exactly.
        let histories = vec![hist(&[(5.0, 91.0), (10.0, 83.0), (15.0, 70.0)])];
        let a = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(0.5, 1.0, 40.0),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let b = ModelSpec::new(
            Variant::Btgp1,
            Theta::new3(2.0, 1.0, 40.0),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let la = log_likelihood(&a, &histories).unwrap();
        let lb = log_likelihood(&b, &histories).unwrap();
        assert!((la - lb).abs() < 1e-9, "{la} vs {lb}");
    }

    #[test]
    fn likelihood_is_invariant_under_asset_reordering_and_splitting() {
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.66, 0.84, 136.12),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let h1 = hist(&[(3.0, 96.0), (8.0, 90.0)]);
        let mut h2 = hist(&[(4.0, 93.0), (9.0, 81.0), (12.0, 77.0)]);
        h2.asset_id = "a2".into();
        let fwd = log_likelihood(&m, &[h1.clone(), h2.clone()]).unwrap();
        let rev = log_likelihood(&m, &[h2.clone(), h1.clone()]).unwrap();
        let split = log_likelihood(&m, std::slice::from_ref(&h1)).unwrap()
            + log_likelihood(&m, std::slice::from_ref(&h2)).unwrap();
        // The sum is reordered, so agreement is to rounding, not bitwise.
        assert!((fwd - rev).abs() < 1e-12);
        assert!((fwd - split).abs() < 1e-12);
    }

    #[test]
    fn btgp_likelihood_has_tau_scaling_invariance() {
        let h = hist(&[(3.0, 96.0), (8.0, 90.0), (11.0, 84.0)]);
        let k = 3.0;
        let scaled = AssetHistory::new(
            "a1",
            h.records
                .iter()
                .map(|r| rec(r.age * k, r.condition))
                .collect(),
            100.0,
        )
        .unwrap();
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.66, 0.84, 136.12),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let m_scaled = m.with_theta(Theta::new3(1.66 / k, 0.84, 136.12)).unwrap();
        let a = log_likelihood(&m, std::slice::from_ref(&h)).unwrap();
        let b = log_likelihood(&m_scaled, std::slice::from_ref(&scaled)).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn zero_and_negative_increments_are_named_data_errors() {
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.0, 1.0, 100.0),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        let repeated = hist(&[(3.0, 92.0), (5.0, 92.0)]);
        let err = log_likelihood(&m, std::slice::from_ref(&repeated)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        assert!(err.to_string().contains("age 5"), "{err}");

        let rising = hist(&[(3.0, 92.0), (5.0, 95.0)]);
        assert!(log_likelihood(&m, std::slice::from_ref(&rising)).is_err());
    }

    #[test]
    fn saturated_readings_are_rejected() {
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.0, 1.0, 100.0),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        // Condition 0 on a decreasing index means degradation = x_lim.
        let h = hist(&[(3.0, 92.0), (5.0, 0.0)]);
        let err = log_likelihood(&m, std::slice::from_ref(&h)).unwrap_err();
        assert!(err.to_string().contains("saturated"), "{err}");
    }

    #[test]
    fn pristine_leading_records_shift_the_anchor() {
        let m = ModelSpec::new(
            Variant::Btgp,
            Theta::new3(1.66, 0.84, 136.12),
            100.0,
            Orientation::DecreasingCondition,
        )
        .unwrap();
        // A BCI of 100 at age 3 is degradation 0: the anchor moves to t=3.
        let with_pristine = hist(&[(3.0, 100.0), (8.0, 90.0)]);
        let ll = log_likelihood(&m, std::slice::from_ref(&with_pristine)).unwrap();
        // Stationary kernel: only the elapsed time matters.
        let equivalent = hist(&[(5.0, 90.0)]);
        let ll2 = log_likelihood(&m, std::slice::from_ref(&equivalent)).unwrap();
        assert!((ll - ll2).abs() < 1e-12);
    }

    #[test]
    fn aic_identity_holds() {
        let h = hist(&[(2.0, 97.0), (6.0, 91.0), (10.0, 87.0), (14.0, 80.0)]);
        let f = fit_mle(
            Variant::Btgp,
            std::slice::from_ref(&h),
            100.0,
            &FitOptions::default(),
        )
        .unwrap();
        assert!((f.aic - (2.0 * f.n_params as f64 - 2.0 * f.loglik)).abs() < 1e-12);
        assert_eq!(f.n_params, 3);
    }

    #[test]
    fn refitting_with_same_seed_is_bit_identical() {
        let h = hist(&[(2.0, 97.0), (6.0, 91.0), (10.0, 87.0), (14.0, 80.0)]);
        let opts = FitOptions::default();
        let a = fit_mle(Variant::Btgp, std::slice::from_ref(&h), 100.0, &opts).unwrap();
        let b = fit_mle(Variant::Btgp, std::slice::from_ref(&h), 100.0, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn select_with_single_candidate_returns_it() {
        let h = hist(&[(2.0, 97.0), (6.0, 91.0), (10.0, 87.0), (14.0, 80.0)]);
        let sel = select_best_model(&h, &[Variant::Btgp], &FitOptions::default()).unwrap();
        assert_eq!(sel.best.spec.variant(), Variant::Btgp);
        assert_eq!(sel.table.len(), 1);
    }

    #[test]
    fn census_of_identical_histories_has_single_winner() {
        let mk = |id: &str| {
            let mut h = hist(&[
                (2.0, 96.0),
                (5.0, 92.0),
                (8.0, 86.0),
                (11.0, 83.0),
                (14.0, 78.0),
                (17.0, 74.0),
            ]);
            h.asset_id = id.into();
            h
        };
        let histories = vec![mk("b1"), mk("b2"), mk("b3")];
        let c = census(
            &histories,
            &[Variant::Bngp, Variant::Btgp],
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(c.eligible, 3);
        let total_pct: f64 = c.rows.iter().map(|r| r.percent).sum();
        assert!((total_pct - 100.0).abs() < 1e-9);
        assert!(c.rows.iter().any(|r| r.wins == 3));
    }

    #[test]
    fn census_requires_six_records() {
        let h = hist(&[(2.0, 96.0), (5.0, 92.0), (8.0, 86.0)]);
        let err = census(&[h], &[Variant::Btgp], &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }
}
