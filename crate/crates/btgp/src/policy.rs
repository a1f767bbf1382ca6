//! Age-based (ABR) and condition-based (CBR) replacement optimization by
//! renewal theory, with a renewal-reward Monte Carlo simulator as the
//! independent cross-check.
//!
//! Thresholds are expressed in increasing-degradation units throughout
//! (the IO layer converts condition-index thresholds once).
//!
//! The CBR inspection recursion runs on the standard-scale kernel
//! coordinate, where every variant has independent gamma increments: the
//! surviving-and-unreplaced probability mass is propagated one inspection
//! interval at a time over a uniform lattice whose upper edge sits exactly
//! at the failure level, and the preventive/corrective absorption masses
//! are accumulated from exact increment CDF differences. Failures inside
//! an interval are found and replaced at the next inspection epoch, so a
//! cycle ending at inspection n has length n·t_I and the failure branch
//! carries (n-1) inspection costs.

use crate::error::{Error, Result};
use crate::gamma::{reg_lower_gamma, sample_gamma_raw};
use crate::model::{ModelSpec, Variant};
use crate::optim::golden_section_min;
use crate::quad::adaptive_simpson;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::Serialize;

/// Inspection, preventive-replacement, and failure-replacement costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostConfig {
    pub c_inspect: f64,
    pub c_preventive: f64,
    pub c_failure: f64,
}

impl CostConfig {
    pub fn new(c_inspect: f64, c_preventive: f64, c_failure: f64) -> Result<Self> {
        for (name, v) in [
            ("inspection cost", c_inspect),
            ("preventive replacement cost", c_preventive),
            ("failure replacement cost", c_failure),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a finite value >= 0, got {v}"
                )));
            }
        }
        Ok(CostConfig {
            c_inspect,
            c_preventive,
            c_failure,
        })
    }

    /// Non-fatal sanity warnings (failure replacement is normally the
    /// costlier event).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.c_failure < self.c_preventive {
            w.push(format!(
                "failure cost {} is below the preventive cost {}; run-to-failure will dominate",
                self.c_failure, self.c_preventive
            ));
        }
        w
    }

    fn scaled_for_sim(&self) -> (f64, f64, f64) {
        (self.c_inspect, self.c_preventive, self.c_failure)
    }
}

/// An inclusive 1-D search grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridRange {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min > 0.0 && max > min && step > 0.0)
            || !min.is_finite()
            || !max.is_finite()
            || !step.is_finite()
        {
            return Err(Error::InvalidParameter(format!(
                "grid must satisfy 0 < min < max with step > 0, got [{min}, {max}] step {step}"
            )));
        }
        Ok(GridRange { min, max, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

/// Default ABR search grid: ages 1..150 years in 0.1-year steps.
pub fn default_abr_grid() -> GridRange {
    GridRange {
        min: 1.0,
        max: 150.0,
        step: 0.1,
    }
}

/// Default CBR inspection-interval grid: 0.5..20 years in 0.1-year steps.
pub fn default_t_i_grid() -> GridRange {
    GridRange {
        min: 0.5,
        max: 20.0,
        step: 0.1,
    }
}

/// Optimized decision variables of a replacement policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PolicyDecision {
    Abr { t_r: f64 },
    Cbr { t_i: f64, xi_r: f64 },
}

/// One evaluated point of a policy search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    /// Replacement age (ABR) or inspection interval (CBR).
    pub t: f64,
    /// Preventive threshold in degradation units (CBR only).
    pub xi_r: Option<f64>,
    pub rate: f64,
}

/// Result of a policy optimization: the decision variables, the minimized
/// mean lifecycle cost rate, and the full evaluated search trace.
#[derive(Debug, Clone, Serialize)]
pub struct PolicyOptimum {
    pub decision: PolicyDecision,
    pub rate: f64,
    pub trace: Vec<TracePoint>,
}

fn validate_threshold(m: &ModelSpec, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < m.x_lim()) {
        return Err(Error::Domain(format!(
            "failure threshold must lie in (0, x_lim) in degradation units, got {xi}"
        )));
    }
    m.standard_kernel_level(xi)
}

fn abr_rate_inner(m: &ModelSpec, g_fail: f64, costs: &CostConfig, t_r: f64) -> Result<f64> {
    let surv = |t: f64| reg_lower_gamma(m.kernel_shape(t), g_fail);
    let denom = adaptive_simpson(surv, 0.0, t_r, 1e-8);
    if denom < 1e-12 {
        return Err(Error::DegeneratePolicy(format!(
            "expected cycle length below 1e-12 at t_R = {t_r}"
        )));
    }
    let s = surv(t_r);
    Ok((costs.c_preventive * s + costs.c_failure * (1.0 - s)) / denom)
}

/// Mean lifecycle cost rate of age-based replacement at age `t_r`:
/// [C_R·S(t_R) + C_F·(1 − S(t_R))] / ∫₀^{t_R} S(t) dt.
pub fn abr_rate(m: &ModelSpec, xi: f64, costs: &CostConfig, t_r: f64) -> Result<f64> {
    if !(t_r > 0.0) || !t_r.is_finite() {
        return Err(Error::Domain(format!("replacement age must be > 0, got {t_r}")));
    }
    let g = validate_threshold(m, xi)?;
    abr_rate_inner(m, g, costs, t_r)
}

/// Minimizes the ABR rate by a grid scan with cumulative survival
/// integration, then golden-section refinement around the grid argmin.
pub fn optimize_abr(
    m: &ModelSpec,
    xi: f64,
    costs: &CostConfig,
    grid: &GridRange,
) -> Result<PolicyOptimum> {
    let g = validate_threshold(m, xi)?;
    let surv = |t: f64| reg_lower_gamma(m.kernel_shape(t), g);
    let ages = grid.values();
    let mut trace = Vec::with_capacity(ages.len());
    let mut cum = adaptive_simpson(surv, 0.0, ages[0], 1e-10);
    let mut best: Option<(f64, f64)> = None; // (rate, t_r)
    let mut prev_t = ages[0];
    for (k, &t) in ages.iter().enumerate() {
        if k > 0 {
            cum += adaptive_simpson(surv, prev_t, t, 1e-10);
            prev_t = t;
        }
        if cum < 1e-12 {
            continue;
        }
        let s = surv(t);
        let rate = (costs.c_preventive * s + costs.c_failure * (1.0 - s)) / cum;
        trace.push(TracePoint {
            t,
            xi_r: None,
            rate,
        });
        if rate.is_finite() && best.map_or(true, |(r, _)| rate < r) {
            best = Some((rate, t));
        }
    }
    let (_, t_best) = best.ok_or_else(|| {
        Error::Optimization("ABR objective was non-finite over the whole grid".into())
    })?;
    let lo = (t_best - grid.step).max(grid.min);
    let hi = (t_best + grid.step).min(grid.max);
    let (t_star, rate_star) = golden_section_min(
        |t| abr_rate_inner(m, g, costs, t).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-6,
    );
    Ok(PolicyOptimum {
        decision: PolicyDecision::Abr { t_r: t_star },
        rate: rate_star,
        trace,
    })
}

/// Numerical options for the CBR inspection recursion.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CbrOptions {
    /// Lattice resolution between kernel level 0 and the failure level.
    pub lattice_points: usize,
    /// Stop once the unabsorbed survivor mass falls below this.
    pub residual_tol: f64,
    /// Hard cap on inspection epochs (a truncation error results if the
    /// residual is still above tolerance).
    pub max_epochs: usize,
}

impl Default for CbrOptions {
    fn default() -> Self {
        CbrOptions {
            lattice_points: 400,
            residual_tol: 1e-6,
            max_epochs: 20_000,
        }
    }
}

/// Per-epoch preventive and failure replacement probabilities.
#[derive(Debug, Clone, Serialize)]
pub struct CbrProbabilities {
    /// p_R(n): preventive replacement found at inspection n (1-based).
    pub p_r: Vec<f64>,
    /// p_f(n): failure during interval n, found at inspection n.
    pub p_f: Vec<f64>,
    /// Unabsorbed probability mass at the stop epoch.
    pub residual: f64,
}

impl CbrProbabilities {
    pub fn n_epochs(&self) -> usize {
        self.p_r.len()
    }
}

/// Forward recursion of the inspection process.
///
/// The preventive window is `xi_r <= X < xi` at an inspection (degradation
/// units); failure absorbs when the monotone path has crossed `xi` by the
/// inspection epoch. Probabilities stop accumulating once the survivor
/// mass drops below `residual_tol`; if the model's kernel clock saturates
/// before that (possible for the BNGP with a high preventive threshold),
/// a truncation error reports the unreachable mass.
pub fn cbr_probabilities(
    m: &ModelSpec,
    xi: f64,
    xi_r: f64,
    t_i: f64,
    opts: &CbrOptions,
) -> Result<CbrProbabilities> {
    if !(t_i > 0.0) || !t_i.is_finite() {
        return Err(Error::Domain(format!("inspection interval must be > 0, got {t_i}")));
    }
    if !(xi_r > 0.0 && xi_r <= xi) {
        return Err(Error::Domain(format!(
            "preventive threshold must satisfy 0 < xi_r <= xi in degradation units, got xi_r={xi_r}, xi={xi}"
        )));
    }
    if opts.lattice_points < 16 {
        return Err(Error::InvalidParameter(
            "the state lattice needs at least 16 points".into(),
        ));
    }
    let g_fail = validate_threshold(m, xi)?;
    let g_prev = m.standard_kernel_level(xi_r)?;
    let mp = opts.lattice_points;
    let h = g_fail / mp as f64;
    // Thresholds snap to lattice edges; the failure edge is exact by
    // construction and the preventive edge rounds to the nearest.
    let j_r = ((g_prev / h).round() as usize).clamp(1, mp);

    let stationary = m.variant() == Variant::Btgp;
    let mut cum: Vec<f64> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    let build_tables = |d_alpha: f64, cum: &mut Vec<f64>, w: &mut Vec<f64>| {
        cum.clear();
        cum.extend((0..=mp).map(|k| reg_lower_gamma(d_alpha, (k as f64 + 0.5) * h)));
        w.clear();
        w.push(cum[0]);
        // Only increments that keep the state below the preventive edge
        // matter for propagation.
        for k in 1..j_r {
            w.push(cum[k] - cum[k - 1]);
        }
    };

    let mut rho = vec![0.0f64; j_r];
    rho[0] = 1.0;
    let mut new_rho = vec![0.0f64; j_r];
    let mut p_r = Vec::new();
    let mut p_f = Vec::new();
    let mut residual = 1.0f64;
    let mut tables_ready = false;

    for n in 1..=opts.max_epochs {
        let d_alpha =
            m.kernel_shape(n as f64 * t_i) - m.kernel_shape((n - 1) as f64 * t_i);
        if d_alpha <= 0.0 {
            // The kernel clock has saturated; nothing will ever move again.
            break;
        }
        if !stationary || !tables_ready {
            build_tables(d_alpha, &mut cum, &mut w);
            tables_ready = true;
        }

        let mut pf_n = 0.0;
        let mut pr_n = 0.0;
        for (j, &mass) in rho.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let to_fail = 1.0 - cum[mp - j - 1];
            let to_prev = cum[mp - j - 1] - cum[j_r - j - 1];
            pf_n += mass * to_fail;
            pr_n += mass * to_prev;
        }
        for (i, out) in new_rho.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += rho[j] * w[i - j];
            }
            *out = acc;
        }
        std::mem::swap(&mut rho, &mut new_rho);

        p_f.push(pf_n);
        p_r.push(pr_n);
        residual -= pf_n + pr_n;
        if residual < opts.residual_tol {
            return Ok(CbrProbabilities {
                p_r,
                p_f,
                residual: residual.max(0.0),
            });
        }
    }
    Err(Error::Truncation(format!(
        "survivor mass {residual:.3e} still unabsorbed after {} epochs (t_I = {t_i}); \
         the process may never reach the preventive threshold",
        p_r.len()
    )))
}

fn cbr_rate_from_probs(probs: &CbrProbabilities, t_i: f64, costs: &CostConfig) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (idx, (&pr, &pf)) in probs.p_r.iter().zip(&probs.p_f).enumerate() {
        let n = (idx + 1) as f64;
        num += (costs.c_preventive + n * costs.c_inspect) * pr
            + (costs.c_failure + (n - 1.0) * costs.c_inspect) * pf;
        den += n * t_i * (pr + pf);
    }
    if den < 1e-12 {
        return Err(Error::DegeneratePolicy(
            "expected renewal-cycle length below 1e-12".into(),
        ));
    }
    Ok(num / den)
}

/// Mean lifecycle cost rate of condition-based replacement with interval
/// `t_i` and preventive threshold `xi_r`:
/// Σ_n [(C_R + nC_I)p_R(n) + (C_F + (n−1)C_I)p_f(n)] over the expected
/// cycle length Σ_n n·t_I·[p_R(n) + p_f(n)].
pub fn cbr_rate(
    m: &ModelSpec,
    xi: f64,
    xi_r: f64,
    t_i: f64,
    costs: &CostConfig,
    opts: &CbrOptions,
) -> Result<f64> {
    let probs = cbr_probabilities(m, xi, xi_r, t_i, opts)?;
    cbr_rate_from_probs(&probs, t_i, costs)
}

/// Exhaustive 2-D grid evaluation over (t_I, ξ_R) with golden-section
/// refinement of t_I around the grid argmin. Ties break toward the
/// smaller interval, then the larger safety margin (smaller degradation
/// threshold). The trace holds every evaluated cell, contour-ready.
pub fn optimize_cbr(
    m: &ModelSpec,
    xi: f64,
    costs: &CostConfig,
    t_i_grid: &GridRange,
    xi_r_values: &[f64],
    opts: &CbrOptions,
) -> Result<PolicyOptimum> {
    if xi_r_values.is_empty() {
        return Err(Error::InvalidParameter("empty preventive-threshold grid".into()));
    }
    let mut thresholds: Vec<f64> = xi_r_values.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let intervals = t_i_grid.values();
    let mut trace = Vec::with_capacity(intervals.len() * thresholds.len());
    let mut best: Option<(f64, f64, f64)> = None; // (rate, t_i, xi_r)
    for &t_i in &intervals {
        for &xi_r in &thresholds {
            let rate = cbr_rate(m, xi, xi_r, t_i, costs, opts)?;
            trace.push(TracePoint {
                t: t_i,
                xi_r: Some(xi_r),
                rate,
            });
            if rate.is_finite() && best.map_or(true, |(r, _, _)| rate < r) {
                best = Some((rate, t_i, xi_r));
            }
        }
    }
    let (_, t_best, xi_r_best) = best.ok_or_else(|| {
        Error::Optimization("CBR objective was non-finite over the whole grid".into())
    })?;
    let lo = (t_best - t_i_grid.step).max(t_i_grid.min);
    let hi = (t_best + t_i_grid.step).min(t_i_grid.max);
    let (t_star, rate_star) = golden_section_min(
        |t| cbr_rate(m, xi, xi_r_best, t, costs, opts).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-3,
    );
    Ok(PolicyOptimum {
        decision: PolicyDecision::Cbr {
            t_i: t_star,
            xi_r: xi_r_best,
        },
        rate: rate_star,
        trace,
    })
}

/// A concrete replacement policy for the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Policy {
    Abr { t_r: f64 },
    Cbr { t_i: f64, xi_r: f64 },
}

/// Renewal-reward Monte Carlo estimate of a policy's cost rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimulatedRate {
    pub rate: f64,
    /// Delta-method standard error of the ratio estimator.
    pub std_error: f64,
    pub n_cycles: usize,
    pub mean_cycle_length: f64,
    pub mean_cycle_cost: f64,
}

/// Simulates renewal cycles under the given policy and returns the
/// empirical cost rate with its standard error.
///
/// ABR cycles end at the exact (bridge-refined) first-passage time or the
/// replacement age; CBR cycles advance the kernel from inspection to
/// inspection, which is exact in distribution.
pub fn simulate_policy<R: Rng + ?Sized>(
    m: &ModelSpec,
    policy: &Policy,
    xi: f64,
    costs: &CostConfig,
    n_cycles: usize,
    rng: &mut R,
) -> Result<SimulatedRate> {
    if n_cycles == 0 {
        return Err(Error::InvalidParameter("at least one cycle is required".into()));
    }
    let g_fail = validate_threshold(m, xi)?;
    let (c_i, c_r, c_f) = costs.scaled_for_sim();
    let mut lengths = Vec::with_capacity(n_cycles);
    let mut costs_v = Vec::with_capacity(n_cycles);
    match *policy {
        Policy::Abr { t_r } => {
            if !(t_r > 0.0) {
                return Err(Error::Domain(format!("replacement age must be > 0, got {t_r}")));
            }
            let coarse = (t_r / 64.0).max(1e-3);
            for _ in 0..n_cycles {
                let (len, cost) = simulate_abr_cycle(m, g_fail, t_r, coarse, c_r, c_f, rng);
                lengths.push(len);
                costs_v.push(cost);
            }
        }
        Policy::Cbr { t_i, xi_r } => {
            if !(t_i > 0.0) {
                return Err(Error::Domain(format!("inspection interval must be > 0, got {t_i}")));
            }
            if !(xi_r > 0.0 && xi_r <= xi) {
                return Err(Error::Domain(format!(
                    "preventive threshold must satisfy 0 < xi_r <= xi, got {xi_r}"
                )));
            }
            let g_prev = m.standard_kernel_level(xi_r)?;
            for _ in 0..n_cycles {
                let mut g = 0.0f64;
                let mut n = 0usize;
                loop {
                    n += 1;
                    if n > 5_000_000 {
                        return Err(Error::Truncation(
                            "a simulated CBR cycle exceeded 5e6 inspections".into(),
                        ));
                    }
                    let d_alpha = m.kernel_shape(n as f64 * t_i)
                        - m.kernel_shape((n - 1) as f64 * t_i);
                    g += sample_gamma_raw(d_alpha.max(0.0), 1.0, rng);
                    if g >= g_fail {
                        lengths.push(n as f64 * t_i);
                        costs_v.push(c_f + (n - 1) as f64 * c_i);
                        break;
                    }
                    if g >= g_prev {
                        lengths.push(n as f64 * t_i);
                        costs_v.push(c_r + n as f64 * c_i);
                        break;
                    }
                }
            }
        }
    }
    let total_len: f64 = lengths.iter().sum();
    let total_cost: f64 = costs_v.iter().sum();
    let rate = total_cost / total_len;
    let nf = n_cycles as f64;
    let mean_len = total_len / nf;
    let s2 = lengths
        .iter()
        .zip(&costs_v)
        .map(|(&l, &c)| {
            let d = c - rate * l;
            d * d
        })
        .sum::<f64>()
        / (nf - 1.0).max(1.0);
    let std_error = s2.sqrt() / (mean_len * nf.sqrt());
    Ok(SimulatedRate {
        rate,
        std_error,
        n_cycles,
        mean_cycle_length: mean_len,
        mean_cycle_cost: total_cost / nf,
    })
}

/// One ABR cycle: walk the kernel on a coarse grid, then refine the
/// crossing time by conditional beta bridges (exact in distribution) until
/// the bracket is tight.
fn simulate_abr_cycle<R: Rng + ?Sized>(
    m: &ModelSpec,
    g_fail: f64,
    t_r: f64,
    coarse: f64,
    c_r: f64,
    c_f: f64,
    rng: &mut R,
) -> (f64, f64) {
    let mut t_lo = 0.0f64;
    let mut g_lo = 0.0f64;
    let mut a_lo = 0.0f64;
    loop {
        let t_hi = (t_lo + coarse).min(t_r);
        let a_hi = m.kernel_shape(t_hi);
        let g_hi = g_lo + sample_gamma_raw((a_hi - a_lo).max(0.0), 1.0, rng);
        if g_hi >= g_fail {
            // Bisect the crossing interval with beta bridges.
            let (mut tl, mut gl, mut al) = (t_lo, g_lo, a_lo);
            let (mut th, mut gh, mut ah) = (t_hi, g_hi, a_hi);
            for _ in 0..24 {
                if th - tl < 1e-6 {
                    break;
                }
                let tm = 0.5 * (tl + th);
                let am = m.kernel_shape(tm);
                let (da1, da2) = ((am - al).max(0.0), (ah - am).max(0.0));
                let gm = if da1 <= 0.0 {
                    gl
                } else if da2 <= 0.0 {
                    gh
                } else {
                    gl + (gh - gl) * Beta::new(da1, da2).expect("positive shapes").sample(rng)
                };
                if gm >= g_fail {
                    th = tm;
                    gh = gm;
                    ah = am;
                } else {
                    tl = tm;
                    gl = gm;
                    al = am;
                }
            }
            let t_cross = 0.5 * (tl + th);
            return (t_cross, c_f);
        }
        if t_hi >= t_r {
            return (t_r, c_r);
        }
        t_lo = t_hi;
        g_lo = g_hi;
        a_lo = a_hi;
    }
}

/// Which policy a threshold sweep optimizes, with its search grids.
#[derive(Debug, Clone)]
pub enum SweepSpec {
    Abr {
        grid: GridRange,
    },
    Cbr {
        t_i_grid: GridRange,
        /// Spacing of the preventive-threshold grid in degradation units
        /// (thresholds run from one step above 0 to just below xi).
        xi_r_step: f64,
        opts: CbrOptions,
    },
}

/// One sweep row: the optimum for a given failure threshold.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub xi: f64,
    pub decision: PolicyDecision,
    pub rate: f64,
}

/// Optimizes the chosen policy for each failure threshold in turn.
pub fn threshold_sweep(
    m: &ModelSpec,
    costs: &CostConfig,
    xis: &[f64],
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(xis.len());
    for &xi in xis {
        let opt = match spec {
            SweepSpec::Abr { grid } => optimize_abr(m, xi, costs, grid)?,
            SweepSpec::Cbr {
                t_i_grid,
                xi_r_step,
                opts,
            } => {
                let mut xi_r = Vec::new();
                let mut v = *xi_r_step;
                while v < xi - 1e-9 {
                    xi_r.push(v);
                    v += xi_r_step;
                }
                xi_r.push(xi);
                optimize_cbr(m, xi, costs, t_i_grid, &xi_r, opts)?
            }
        };
        rows.push(SweepRow {
            xi,
            decision: opt.decision,
            rate: opt.rate,
        });
    }
    Ok(rows)
}
