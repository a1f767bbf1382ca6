//! Derivative-free optimizers shared by inference, analysis, and policy.

use rand::Rng;

/// Result of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fval: f64,
    pub iterations: usize,
    /// True when the simplex diameter dropped below tolerance before the
    /// iteration cap.
    pub converged: bool,
}

/// Nelder–Mead simplex minimization.
///
/// Convergence is declared when the simplex diameter (max infinity-norm
/// distance from the best vertex) falls below `tol`. Non-finite objective
/// values are treated as +inf, so the simplex walks away from invalid
/// regions by itself.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    initial_step: f64,
    tol: f64,
    max_iter: usize,
) -> NelderMeadResult {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut eval = |x: &[f64]| -> f64 {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += initial_step;
        simplex.push(v);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // Order vertices by objective.
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap_or(std::cmp::Ordering::Equal));
        let order: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let forder: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = order;
        fvals = forder;

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let worst = fvals[n];
        let second_worst = fvals[n - 1];
        let best = fvals[0];

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[n])
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let f_reflect = eval(&reflect);

        if f_reflect < best {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let f_expand = eval(&expand);
            if f_expand < f_reflect {
                simplex[n] = expand;
                fvals[n] = f_expand;
            } else {
                simplex[n] = reflect;
                fvals[n] = f_reflect;
            }
        } else if f_reflect < second_worst {
            simplex[n] = reflect;
            fvals[n] = f_reflect;
        } else {
            let (contract, f_contract) = if f_reflect < worst {
                let c: Vec<f64> = centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + rho * (r - c))
                    .collect();
                let fc = eval(&c);
                (c, fc)
            } else {
                let c: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(c, w)| c + rho * (w - c))
                    .collect();
                let fc = eval(&c);
                (c, fc)
            };
            if f_contract < worst.min(f_reflect) {
                simplex[n] = contract;
                fvals[n] = f_contract;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=n {
                    let shrunk: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    fvals[i] = eval(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..=n {
        if fvals[i] < fvals[best_i] {
            best_i = i;
        }
    }
    NelderMeadResult {
        x: simplex[best_i].clone(),
        fval: fvals[best_i],
        iterations,
        converged,
    }
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fc < fx && fc < fd {
        (c, fc)
    } else if fd < fx {
        (d, fd)
    } else {
        (x, fx)
    }
}

/// Latin-hypercube sample of `n` points over the given per-dimension ranges.
pub fn latin_hypercube<R: Rng + ?Sized>(
    ranges: &[(f64, f64)],
    n: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let d = ranges.len();
    let mut strata: Vec<Vec<usize>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher–Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        strata.push(perm);
    }
    (0..n)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let (lo, hi) = ranges[k];
                    let u = (strata[k][i] as f64 + rng.random::<f64>()) / n as f64;
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Solves the symmetric system A x = b by Gaussian elimination with
/// partial pivoting; used for the (tiny) observed-information systems.
pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = rhs[row];
        for c in row + 1..n {
            s -= m[row][c] * x[c];
        }
        x[row] = s / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn nelder_mead_minimizes_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], 0.5, 1e-10, 5000);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_walks_out_of_invalid_region() {
        // Objective undefined (NaN) left of x = 0.5; minimum at x = 2.
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::NAN
            } else {
                (x[0] - 2.0).powi(2)
            }
        };
        let r = nelder_mead(f, &[0.6, 0.0], 0.3, 1e-10, 2000);
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        // Comparison-based minimization bottoms out near sqrt(eps) in x.
        let (x, fx) = golden_section_min(|x| (x - 3.25).powi(2) + 1.0, 0.0, 10.0, 1e-10);
        assert!((x - 3.25).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn latin_hypercube_stratifies_each_dimension() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let pts = latin_hypercube(&[(0.0, 8.0), (-1.0, 1.0)], 8, &mut rng);
        assert_eq!(pts.len(), 8);
        // Exactly one point per unit stratum in dimension 0.
        let mut seen = [false; 8];
        for p in &pts {
            let k = (p[0].floor() as usize).min(7);
            assert!(!seen[k], "stratum {k} hit twice");
            seen[k] = true;
        }
    }

    #[test]
    fn solve_dense_inverts_small_system() {
        let a = vec![vec![4.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }
}
