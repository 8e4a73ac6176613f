//! Lawson–Hanson nonnegative least squares, in two forms: a primal
//! active-set loop over an explicit (short, wide) matrix, and the same
//! loop driven by a precomputed Gram system for tall problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NnlsOutcome {
    pub x: DVector<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
}

/// Minimizes `||a x - b||` over `x >= 0` with at most `max_support`
/// active columns. Ties in the column selection break toward the
/// smallest index.
pub fn nnls_primal(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    max_support: usize,
    max_iter: usize,
) -> NnlsOutcome {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let mut residual = b.clone();
    let scale = a.tr_mul(b).amax().max(1.0);
    let grad_tol = 1e-13 * scale;
    let mut iterations = 0usize;

    while iterations < max_iter {
        iterations += 1;
        let support = passive.iter().filter(|&&p| p).count();
        if support >= max_support.min(a.nrows()).min(n) {
            break;
        }
        let w = a.tr_mul(&residual);
        let mut best = grad_tol;
        let mut best_j = None;
        for j in 0..n {
            if !passive[j] && w[j] > best {
                best = w[j];
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else { break };
        passive[j] = true;

        let mut inner = 0usize;
        loop {
            inner += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s = solve_passive(a, b, &idx);
            if s.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (pos, &k) in idx.iter().enumerate() {
                    x[k] = s[pos];
                }
                break;
            }
            // Move toward the passive solution until a coordinate hits zero.
            let mut alpha = f64::INFINITY;
            for (pos, &k) in idx.iter().enumerate() {
                if s[pos] <= 0.0 {
                    let denom = x[k] - s[pos];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            let mut removed = false;
            for (pos, &k) in idx.iter().enumerate() {
                x[k] += alpha * (s[pos] - x[k]);
                if s[pos] <= 0.0 && x[k] <= 1e-300 {
                    x[k] = 0.0;
                    passive[k] = false;
                    removed = true;
                }
            }
            if !removed {
                // Force progress on numerically stuck steps.
                if let Some((pos, &k)) = idx
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| s[*p] <= 0.0)
                    .min_by(|(p1, _), (p2, _)| s[*p1].total_cmp(&s[*p2]))
                {
                    let _ = pos;
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            if inner > 3 * max_support + 10 {
                break;
            }
        }
        residual = b - a * &x;
    }

    NnlsOutcome {
        residual_inf: residual.amax(),
        x,
        iterations,
    }
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> Vec<f64> {
    let sub = a.select_columns(idx.iter());
    if let Some(sol) = sub.clone().col_piv_qr().solve(b) {
        if sol.iter().all(|v| v.is_finite()) {
            return sol.iter().copied().collect();
        }
    }
    let svd = sub.svd(true, true);
    match svd.solve(b, 1e-12) {
        Ok(sol) => sol.iter().copied().collect(),
        Err(_) => vec![0.0; idx.len()],
    }
}

/// Lawson–Hanson on the normal equations: minimizes `||A x - b||` given
/// only `G = A' A` and `c = A' b`. Used where the design matrix is tall.
pub fn nnls_gram(g: &DMatrix<f64>, c: &DVector<f64>, max_iter: usize) -> DVector<f64> {
    let n = c.len();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = c.amax().max(1.0);
    let grad_tol = 1e-13 * scale;
    let mut grad = c.clone();

    for _ in 0..max_iter {
        let mut best = grad_tol;
        let mut best_j = None;
        for j in 0..n {
            if !passive[j] && grad[j] > best {
                best = grad[j];
                best_j = Some(j);
            }
        }
        let Some(j) = best_j else { break };
        passive[j] = true;

        let mut inner = 0usize;
        loop {
            inner += 1;
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s = solve_gram_passive(g, c, &idx);
            if s.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (pos, &k) in idx.iter().enumerate() {
                    x[k] = s[pos];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (pos, &k) in idx.iter().enumerate() {
                if s[pos] <= 0.0 {
                    let denom = x[k] - s[pos];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            let mut removed = false;
            for (pos, &k) in idx.iter().enumerate() {
                x[k] += alpha * (s[pos] - x[k]);
                if s[pos] <= 0.0 && x[k] <= 1e-300 {
                    x[k] = 0.0;
                    passive[k] = false;
                    removed = true;
                }
            }
            if !removed {
                if let Some(&k) = idx
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| s[*p] <= 0.0)
                    .min_by(|(p1, _), (p2, _)| s[*p1].total_cmp(&s[*p2]))
                    .map(|(_, k)| k)
                {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
            if inner > 3 * n + 10 {
                break;
            }
        }
        grad = c - g * &x;
    }
    x
}

fn solve_gram_passive(g: &DMatrix<f64>, c: &DVector<f64>, idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    let mut gp = DMatrix::zeros(k, k);
    let mut cp = DVector::zeros(k);
    for (i, &a) in idx.iter().enumerate() {
        cp[i] = c[a];
        for (j, &b) in idx.iter().enumerate() {
            gp[(i, j)] = g[(a, b)];
        }
    }
    if let Some(chol) = gp.clone().cholesky() {
        let sol = chol.solve(&cp);
        if sol.iter().all(|v| v.is_finite()) {
            return sol.iter().copied().collect();
        }
    }
    // Near-singular passive set: regularize proportionally to the trace.
    let ridge = 1e-12 * gp.trace().max(1e-300) / k as f64;
    let mut gr = gp.clone();
    for i in 0..k {
        gr[(i, i)] += ridge;
    }
    if let Some(chol) = gr.cholesky() {
        let sol = chol.solve(&cp);
        if sol.iter().all(|v| v.is_finite()) {
            return sol.iter().copied().collect();
        }
    }
    let svd = gp.svd(true, true);
    match svd.solve(&cp, 1e-12) {
        Ok(sol) => sol.iter().copied().collect(),
        Err(_) => vec![0.0; k],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn primal_recovers_feasible_solution() {
        // b lies in the cone of the columns; residual must vanish.
        let a = DMatrix::from_row_slice(3, 4, &[
            1.0, 1.0, 1.0, 1.0, //
            -1.0, 0.0, 1.0, 0.5, //
            1.0, 0.0, 1.0, 0.25,
        ]);
        let truth = DVector::from_vec(vec![0.3, 0.2, 0.5, 0.0]);
        let b = &a * &truth;
        let out = nnls_primal(&a, &b, 4, 100);
        assert!(out.residual_inf < 1e-12, "{}", out.residual_inf);
        for v in out.x.iter() {
            assert!(*v >= 0.0);
        }
    }

    #[test]
    fn gram_matches_primal_on_small_problem() {
        let a = DMatrix::from_row_slice(4, 3, &[
            1.0, 0.5, 0.0, //
            0.0, 1.0, 0.5, //
            0.2, 0.1, 1.0, //
            1.0, 1.0, 1.0,
        ]);
        let b = DVector::from_vec(vec![1.0, 0.5, 0.8, 2.0]);
        let primal = nnls_primal(&a, &b, 3, 100);
        let g = a.tr_mul(&a);
        let c = a.tr_mul(&b);
        let gram = nnls_gram(&g, &c, 100);
        for j in 0..3 {
            assert_abs_diff_eq!(primal.x[j], gram[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn negative_rhs_gives_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![-1.0, -2.0]);
        let out = nnls_primal(&a, &b, 2, 50);
        assert_eq!(out.x, DVector::from_vec(vec![0.0, 0.0]));
    }
}
