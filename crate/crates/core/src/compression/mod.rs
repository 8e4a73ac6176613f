//! Measure compression: exact counting compression for integer data,
//! Gaussian quadrature of the empirical measure (Stieltjes recurrence +
//! Golub–Welsch), and Carathéodory–Tchakaloff subsampling in 2-D.
//!
//! All moment arithmetic happens after an affine standardization of the
//! atoms to [-1, 1]; quadrature is affine-equivariant so nothing is lost,
//! and the moment systems stay well conditioned up to the supported
//! orders.

mod nnls;
mod stieltjes;
mod tchakaloff;
mod tridiag;

pub use stieltjes::{recurrence_coefficients, recurrence_coefficients_mode, RecurrenceCoefficients};
pub use tchakaloff::{tchakaloff_compress, tchakaloff_compress_mode};

pub(crate) use nnls::{nnls_gram, nnls_primal};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{compensated_sum, AtomPoint, DiscreteMeasure, DiscreteMeasure2};

/// Default quadrature order for the compression pipeline.
pub const DEFAULT_ORDER: usize = 25;
/// Orders beyond this are clamped; the discrete Stieltjes/Golub–Welsch
/// chain loses accuracy well before the moment residual check would.
pub const MAX_ORDER: usize = 40;
/// Standardized moment residual accepted as "matching".
pub const MOMENT_TOL: f64 = 1e-8;

/// How a rule was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    GolubWelsch,
    Counting,
    Tchakaloff,
    Identity,
}

/// A compressed measure together with its order and the standardized
/// moment residuals against the source measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule<A: AtomPoint = f64> {
    pub measure: DiscreteMeasure<A>,
    pub order: usize,
    pub moment_residuals: Vec<f64>,
    pub construction: Construction,
}

pub type QuadratureRule2 = QuadratureRule<(f64, f64)>;

impl<A: AtomPoint> QuadratureRule<A> {
    pub fn max_residual(&self) -> f64 {
        self.moment_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Affine map sending an interval onto [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub center: f64,
    pub halfwidth: f64,
}

impl AffineMap {
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        let center = 0.5 * (lo + hi);
        let halfwidth = 0.5 * (hi - lo);
        Self {
            center,
            // A point mass has no scale; any positive choice works.
            halfwidth: if halfwidth > 0.0 { halfwidth } else { 1.0 },
        }
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.center) / self.halfwidth
    }

    #[inline]
    pub fn inverse(&self, t: f64) -> f64 {
        self.center + self.halfwidth * t
    }
}

/// The empirical measure of the observations: uniform weights with
/// duplicates merged.
pub fn empirical_measure(data: &[f64]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::from_data(data)
}

pub fn empirical_measure_2d(data: &[(f64, f64)]) -> Result<DiscreteMeasure2> {
    DiscreteMeasure2::from_data(data)
}

fn is_counting_value(x: f64) -> bool {
    x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 2f64.powi(53)
}

/// Returns true when every observation is a nonnegative integer, so the
/// empirical measure can be reproduced exactly by value counts.
pub fn is_counting_data(data: &[f64]) -> bool {
    !data.is_empty() && data.iter().all(|&x| is_counting_value(x))
}

/// Exact compression of integer-valued data: atoms are the observed
/// values with weights `N_k / n`. Reproduces the empirical measure, so
/// every moment residual is zero.
pub fn counting_compress(data: &[f64]) -> Result<QuadratureRule> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if let Some(&bad) = data.iter().find(|&&x| !is_counting_value(x)) {
        return Err(Error::NonIntegerData(bad));
    }
    let measure = DiscreteMeasure::from_data(data)?;
    let order = measure.len();
    Ok(QuadratureRule {
        moment_residuals: vec![0.0; 2 * order],
        order,
        measure,
        construction: Construction::Counting,
    })
}

/// Raw moments `m_0 .. m_k` of a one-dimensional measure, accumulated
/// with compensated summation.
pub fn raw_moments(measure: &DiscreteMeasure, k_max: usize) -> Vec<f64> {
    moments_in(measure.atoms(), measure.weights(), None, k_max, true)
}

/// Moments of the standardized atoms `t_i = map(x_i)`.
pub(crate) fn standardized_moments(
    atoms: &[f64],
    weights: &[f64],
    map: &AffineMap,
    k_max: usize,
    deterministic: bool,
) -> Vec<f64> {
    moments_in(atoms, weights, Some(map), k_max, deterministic)
}

fn moments_in(
    atoms: &[f64],
    weights: &[f64],
    map: Option<&AffineMap>,
    k_max: usize,
    deterministic: bool,
) -> Vec<f64> {
    let accumulate = |range: std::ops::Range<usize>| -> Vec<f64> {
        let mut sums = vec![0.0; k_max + 1];
        let mut comps = vec![0.0; k_max + 1];
        for i in range {
            let t = match map {
                Some(m) => m.forward(atoms[i]),
                None => atoms[i],
            };
            let w = weights[i];
            let mut pw = w;
            for k in 0..=k_max {
                let v = pw;
                let s = sums[k];
                let tot = s + v;
                if s.abs() >= v.abs() {
                    comps[k] += (s - tot) + v;
                } else {
                    comps[k] += (v - tot) + s;
                }
                sums[k] = tot;
                pw *= t;
            }
        }
        for k in 0..=k_max {
            sums[k] += comps[k];
        }
        sums
    };

    if deterministic || atoms.len() < 8192 {
        accumulate(0..atoms.len())
    } else {
        // Fixed-size chunks with an ordered final reduction keep the
        // result independent of scheduling.
        use rayon::prelude::*;
        const CHUNK: usize = 8192;
        let ranges: Vec<std::ops::Range<usize>> = (0..atoms.len())
            .step_by(CHUNK)
            .map(|s| s..(s + CHUNK).min(atoms.len()))
            .collect();
        let partials: Vec<Vec<f64>> = ranges.into_par_iter().map(accumulate).collect();
        let mut out = vec![0.0; k_max + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            let col: Vec<f64> = partials.iter().map(|p| p[k]).collect();
            *slot = compensated_sum(&col);
        }
        out
    }
}

/// Order-`j` Gaussian quadrature rule for a discrete measure via the
/// Golub–Welsch algorithm. When `j` is at least the number of distinct
/// atoms the measure is already exact, and it is returned unchanged.
pub fn gauss_quadrature(measure: &DiscreteMeasure, j: usize) -> Result<QuadratureRule> {
    gauss_quadrature_mode(measure, j, false)
}

pub fn gauss_quadrature_mode(
    measure: &DiscreteMeasure,
    j: usize,
    deterministic: bool,
) -> Result<QuadratureRule> {
    if j == 0 {
        return Err(Error::InvalidParameter("quadrature order must be >= 1".into()));
    }
    let j = if j > MAX_ORDER {
        log::warn!("quadrature order {j} clamped to {MAX_ORDER}");
        MAX_ORDER
    } else {
        j
    };
    let d = measure.len();
    if j >= d {
        return Ok(QuadratureRule {
            measure: measure.clone(),
            order: j,
            moment_residuals: vec![0.0; 2 * j],
            construction: Construction::Identity,
        });
    }

    let rc = recurrence_coefficients_mode(measure, j, deterministic)?;
    let order = rc.len();
    let mut diag: Vec<f64> = rc.alpha().to_vec();
    let mut offdiag: Vec<f64> = (1..order).map(|k| rc.beta()[k].sqrt()).collect();
    offdiag.push(0.0);
    let mut first_row = vec![0.0; order];
    first_row[0] = 1.0;
    tridiag::ql_implicit_first_row(&mut diag, &mut offdiag, &mut first_row)?;

    let (lo, hi) = measure.bounds();
    let map = rc.map();
    let mut nodes = Vec::with_capacity(order);
    let mut weights = Vec::with_capacity(order);
    for k in 0..order {
        // Szego's theorem puts the nodes strictly inside the data hull;
        // clamp the last-bit excursions so the invariant holds exactly.
        let x = map.inverse(diag[k]).clamp(lo, hi);
        nodes.push(x);
        weights.push(rc.beta()[0] * first_row[k] * first_row[k]);
    }

    let compressed = DiscreteMeasure::new(nodes, weights)?.with_sample_size(measure.sample_size());
    let residuals = moment_residuals(measure, &compressed, map, 2 * order - 1, deterministic);
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if worst > MOMENT_TOL {
        return Err(Error::MomentMatchFailed {
            best_residual: worst,
            target: MOMENT_TOL,
        });
    }
    Ok(QuadratureRule {
        measure: compressed,
        order,
        moment_residuals: residuals,
        construction: Construction::GolubWelsch,
    })
}

fn moment_residuals(
    source: &DiscreteMeasure,
    rule: &DiscreteMeasure,
    map: &AffineMap,
    k_max: usize,
    deterministic: bool,
) -> Vec<f64> {
    let ms = standardized_moments(source.atoms(), source.weights(), map, k_max, deterministic);
    let mr = standardized_moments(rule.atoms(), rule.weights(), map, k_max, deterministic);
    ms.iter().zip(mr.iter()).map(|(a, b)| (a - b).abs()).collect()
}
