//! Carathéodory–Tchakaloff subsampling of a 2-D discrete measure: a
//! nonnegative reweighting supported on a subset of the original atoms
//! that matches every monomial moment up to a total degree.
//!
//! The working basis is the total-degree monomial family in standardized
//! coordinates. The primary solver is nonnegative least squares with
//! active-set column selection; if it stalls, an exact Carathéodory
//! null-space elimination pass over batches of atoms is run instead.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::measure::{compensated_sum_by, DiscreteMeasure2};

use super::nnls::nnls_primal;
use super::{AffineMap, Construction, QuadratureRule2, MOMENT_TOL};

/// Total-degree monomial exponents `(a, b)` with `a + b <= degree`,
/// ordered by degree then by descending x-exponent.
fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for total in 0..=degree as u32 {
        for a in (0..=total).rev() {
            out.push((a, total - a));
        }
    }
    out
}

fn eval_basis(exponents: &[(u32, u32)], t: (f64, f64), out: &mut [f64]) {
    for (i, &(a, b)) in exponents.iter().enumerate() {
        out[i] = t.0.powi(a as i32) * t.1.powi(b as i32);
    }
}

/// Number of basis monomials up to total degree `j`: `(j+1)(j+2)/2`.
pub fn basis_size(j: usize) -> usize {
    (j + 1) * (j + 2) / 2
}

pub fn tchakaloff_compress(measure: &DiscreteMeasure2, j: usize) -> Result<QuadratureRule2> {
    tchakaloff_compress_mode(measure, j, false)
}

pub fn tchakaloff_compress_mode(
    measure: &DiscreteMeasure2,
    j: usize,
    _deterministic: bool,
) -> Result<QuadratureRule2> {
    let n = measure.len();
    let m = basis_size(j);
    let exponents = monomial_exponents(j);

    let (x_lo, x_hi) = measure.bounds_x();
    let (t_lo, t_hi) = measure.bounds_tau();
    let map_x = AffineMap::from_bounds(x_lo, x_hi);
    let map_t = AffineMap::from_bounds(t_lo, t_hi);
    let std_atoms: Vec<(f64, f64)> = measure
        .atoms()
        .iter()
        .map(|&(x, t)| (map_x.forward(x), map_t.forward(t)))
        .collect();

    // Target moments of the source measure.
    let weights = measure.weights();
    let mut phi = vec![0.0; m];
    let mut target = DVector::zeros(m);
    for i in 0..m {
        let (a, b) = exponents[i];
        target[i] = compensated_sum_by(n, |k| {
            weights[k] * std_atoms[k].0.powi(a as i32) * std_atoms[k].1.powi(b as i32)
        });
    }

    if n <= m {
        // Nothing to compress; the measure is its own rule.
        return finish(measure.clone(), measure, &exponents, &std_atoms, &target, j, true);
    }

    // Primary path: Lawson-Hanson NNLS over the atom columns.
    let mut design = DMatrix::zeros(m, n);
    for k in 0..n {
        eval_basis(&exponents, std_atoms[k], &mut phi);
        for i in 0..m {
            design[(i, k)] = phi[i];
        }
    }
    let out = nnls_primal(&design, &target, m, 10 * m + 50);
    if out.residual_inf <= MOMENT_TOL * 0.1 {
        let mut atoms = Vec::new();
        let mut w = Vec::new();
        for k in 0..n {
            if out.x[k] > 0.0 {
                atoms.push(measure.atoms()[k]);
                w.push(out.x[k]);
            }
        }
        let compressed =
            DiscreteMeasure2::new(atoms, w)?.with_sample_size(measure.sample_size());
        return finish(compressed, measure, &exponents, &std_atoms, &target, j, false);
    }
    log::warn!(
        "tchakaloff nnls stalled at residual {:.3e}; running null-space elimination",
        out.residual_inf
    );

    // Fallback: exact Caratheodory elimination over batches.
    let compressed = eliminate(measure, &exponents, &std_atoms, m)?;
    finish(compressed, measure, &exponents, &std_atoms, &target, j, false)
}

fn finish(
    compressed: DiscreteMeasure2,
    source: &DiscreteMeasure2,
    exponents: &[(u32, u32)],
    std_atoms: &[(f64, f64)],
    target: &DVector<f64>,
    order: usize,
    identity: bool,
) -> Result<QuadratureRule2> {
    // Residuals recomputed by direct summation over the final atoms.
    let pos: std::collections::HashMap<u64, usize> = source
        .atoms()
        .iter()
        .enumerate()
        .map(|(k, a)| (atom_key(a), k))
        .collect();
    let m = exponents.len();
    let mut residuals = vec![0.0; m];
    for i in 0..m {
        let (a, b) = exponents[i];
        let got = compensated_sum_by(compressed.len(), |k| {
            let idx = pos[&atom_key(&compressed.atoms()[k])];
            compressed.weights()[k] * std_atoms[idx].0.powi(a as i32) * std_atoms[idx].1.powi(b as i32)
        });
        residuals[i] = (got - target[i]).abs();
    }
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > MOMENT_TOL {
        return Err(Error::MomentMatchFailed {
            best_residual: worst,
            target: MOMENT_TOL,
        });
    }
    Ok(QuadratureRule2 {
        measure: compressed,
        order,
        moment_residuals: residuals,
        construction: if identity {
            Construction::Identity
        } else {
            Construction::Tchakaloff
        },
    })
}

fn atom_key(a: &(f64, f64)) -> u64 {
    // Atoms are finite and deduplicated, so bit-level hashing is exact.
    a.0.to_bits() ^ a.1.to_bits().rotate_left(32)
}

/// Streams atoms through a working set of at most `m` points, removing
/// one point per null-space step while preserving every moment exactly.
fn eliminate(
    measure: &DiscreteMeasure2,
    exponents: &[(u32, u32)],
    std_atoms: &[(f64, f64)],
    m: usize,
) -> Result<DiscreteMeasure2> {
    let n = measure.len();
    let weights = measure.weights();
    let mut state: Vec<(usize, f64)> = Vec::with_capacity(2 * m);
    let mut next = 0usize;

    while next < n || state.len() > m {
        while state.len() < 2 * m && next < n {
            state.push((next, weights[next]));
            next += 1;
        }
        if state.len() <= m {
            break;
        }
        let k = state.len();
        let mut design = DMatrix::zeros(exponents.len(), k);
        let mut col = vec![0.0; exponents.len()];
        for (c, &(idx, _)) in state.iter().enumerate() {
            eval_basis(exponents, std_atoms[idx], &mut col);
            for r in 0..exponents.len() {
                design[(r, c)] = col[r];
            }
        }
        let Some(z) = null_vector(&design) else {
            return Err(Error::MomentMatchFailed {
                best_residual: f64::INFINITY,
                target: MOMENT_TOL,
            });
        };
        // Walk along +-z until the first weight hits zero.
        let direction: Vec<f64> = if z.iter().any(|&v| v > 0.0) {
            z
        } else {
            z.iter().map(|v| -v).collect()
        };
        let mut t = f64::INFINITY;
        let mut hit = usize::MAX;
        for (c, &(_, w)) in state.iter().enumerate() {
            if direction[c] > 0.0 {
                let step = w / direction[c];
                if step < t {
                    t = step;
                    hit = c;
                }
            }
        }
        if hit == usize::MAX {
            return Err(Error::MomentMatchFailed {
                best_residual: f64::INFINITY,
                target: MOMENT_TOL,
            });
        }
        for (c, entry) in state.iter_mut().enumerate() {
            entry.1 -= t * direction[c];
            if entry.1 < 0.0 {
                entry.1 = 0.0;
            }
        }
        state[hit].1 = 0.0;
        state.retain(|&(_, w)| w > 0.0);
    }

    let atoms: Vec<(f64, f64)> = state.iter().map(|&(idx, _)| measure.atoms()[idx]).collect();
    let w: Vec<f64> = state.iter().map(|&(_, w)| w).collect();
    Ok(DiscreteMeasure2::new(atoms, w)?.with_sample_size(measure.sample_size()))
}

/// A unit vector in the null space of `a` (more columns than rank),
/// found by projecting coordinate vectors out of the column span of
/// `a'` via its thin QR factor.
fn null_vector(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let k = a.ncols();
    let at = a.transpose();
    let qr = at.qr();
    let q = qr.q();
    for j in 0..k {
        let mut v = DVector::zeros(k);
        v[j] = 1.0;
        let proj = &q * (q.tr_mul(&v));
        let z = v - proj;
        let norm = z.norm();
        if norm > 1e-8 {
            return Some(z.iter().map(|x| x / norm).collect());
        }
    }
    None
}
