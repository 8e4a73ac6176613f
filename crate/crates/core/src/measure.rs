//! Weighted discrete measures on the line and on the (x, tau) plane.
//!
//! One type holds the empirical measure, counting-compressed measures,
//! and quadrature rules alike; the atom type is generic so that the
//! heteroscedastic 2-D measure reuses the merging and validation logic.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Absolute slack allowed on the total mass before construction fails.
pub const MASS_TOL: f64 = 1e-8;

/// Atom locations that can be sorted and compared exactly for merging.
pub trait AtomPoint: Copy + PartialEq + std::fmt::Debug {
    fn order(&self, other: &Self) -> Ordering;
    fn is_finite_point(&self) -> bool;
}

impl AtomPoint for f64 {
    fn order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
    fn is_finite_point(&self) -> bool {
        self.is_finite()
    }
}

impl AtomPoint for (f64, f64) {
    fn order(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
    fn is_finite_point(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

/// A probability measure with finitely many distinct atoms.
///
/// Invariants enforced at construction: atoms are sorted and pairwise
/// distinct (duplicates merged by adding weights), weights are positive
/// and sum to one. `sample_size` records the number of raw observations
/// the measure stands for, so total log-likelihoods keep their units
/// after compression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure<A: AtomPoint = f64> {
    atoms: Vec<A>,
    weights: Vec<f64>,
    /// Integer multiplicities, present when built from raw observations.
    counts: Option<Vec<f64>>,
    sample_size: usize,
}

pub type DiscreteMeasure2 = DiscreteMeasure<(f64, f64)>;

impl<A: AtomPoint> DiscreteMeasure<A> {
    /// Builds a measure from explicit atoms and weights.
    ///
    /// Duplicate atoms are merged by weight addition, zero weights are
    /// dropped, and the total mass must be within [`MASS_TOL`] of one
    /// (it is then renormalized exactly).
    pub fn new(atoms: Vec<A>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidWeights(format!(
                "{} atoms vs {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::EmptyData);
        }
        for a in &atoms {
            if !a.is_finite_point() {
                return Err(Error::NonFinite("atom location"));
            }
        }
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeights(format!("weight {w}")));
            }
        }
        let n = atoms.len();
        let mut m = Self::merge(atoms, weights, None)?;
        m.sample_size = n;
        Ok(m)
    }

    /// Empirical measure of raw observations: uniform weights, duplicates
    /// merged, integer multiplicities retained.
    pub fn from_data(data: &[A]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        for a in data {
            if !a.is_finite_point() {
                return Err(Error::NonFinite("observation"));
            }
        }
        let n = data.len();
        let w = 1.0 / n as f64;
        let mut m = Self::merge(data.to_vec(), vec![w; n], Some(vec![1.0; n]))?;
        m.sample_size = n;
        Ok(m)
    }

    fn merge(atoms: Vec<A>, weights: Vec<f64>, counts: Option<Vec<f64>>) -> Result<Self> {
        let mut idx: Vec<usize> = (0..atoms.len()).collect();
        idx.sort_by(|&i, &j| atoms[i].order(&atoms[j]));

        let mut out_atoms: Vec<A> = Vec::with_capacity(atoms.len());
        let mut out_weights: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut out_counts: Option<Vec<f64>> = counts.as_ref().map(|_| Vec::new());
        for &i in &idx {
            let is_dup = out_atoms.last().is_some_and(|last| atoms[i] == *last);
            if is_dup {
                *out_weights.last_mut().unwrap() += weights[i];
                if let (Some(oc), Some(c)) = (out_counts.as_mut(), counts.as_ref()) {
                    *oc.last_mut().unwrap() += c[i];
                }
            } else {
                out_atoms.push(atoms[i]);
                out_weights.push(weights[i]);
                if let (Some(oc), Some(c)) = (out_counts.as_mut(), counts.as_ref()) {
                    oc.push(c[i]);
                }
            }
        }

        // Drop exact zeros so downstream solvers never see massless atoms.
        if out_weights.iter().any(|&w| w == 0.0) {
            let keep: Vec<usize> = (0..out_weights.len())
                .filter(|&k| out_weights[k] > 0.0)
                .collect();
            out_atoms = keep.iter().map(|&k| out_atoms[k]).collect();
            if let Some(oc) = out_counts.as_mut() {
                *oc = keep.iter().map(|&k| oc[k]).collect();
            }
            out_weights = keep.iter().map(|&k| out_weights[k]).collect();
        }
        if out_atoms.is_empty() {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }

        let mass: f64 = compensated_sum(&out_weights);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidWeights(format!(
                "total mass {mass} not within {MASS_TOL} of 1"
            )));
        }
        if (mass - 1.0).abs() > 0.0 {
            for w in &mut out_weights {
                *w /= mass;
            }
        }

        Ok(Self {
            sample_size: out_atoms.len(),
            atoms: out_atoms,
            weights: out_weights,
            counts: out_counts,
        })
    }

    pub fn with_sample_size(mut self, n: usize) -> Self {
        self.sample_size = n;
        self
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[A] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integer multiplicities when the measure came from raw data.
    pub fn counts(&self) -> Option<&[f64]> {
        self.counts.as_deref()
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, f64)> + '_ {
        self.atoms.iter().zip(self.weights.iter().copied())
    }
}

impl DiscreteMeasure<f64> {
    /// Smallest and largest atom.
    pub fn bounds(&self) -> (f64, f64) {
        (self.atoms[0], *self.atoms.last().unwrap())
    }

    pub fn abs_max(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }
}

impl DiscreteMeasure2 {
    pub fn bounds_x(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.0);
            hi = hi.max(a.0);
        }
        (lo, hi)
    }

    pub fn bounds_tau(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.1);
            hi = hi.max(a.1);
        }
        (lo, hi)
    }
}

/// Neumaier compensated summation.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Compensated sum of `f(i)` over `0..n`; serial, fixed order.
pub fn compensated_sum_by(n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..n {
        let v = f(i);
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empirical_merges_duplicates() {
        let m = DiscreteMeasure::from_data(&[0.0, 1.0, 1.0, 3.0]).unwrap();
        assert_eq!(m.atoms(), &[0.0, 1.0, 3.0]);
        assert_eq!(m.weights(), &[0.25, 0.5, 0.25]);
        assert_eq!(m.counts(), Some(&[1.0, 2.0, 1.0][..]));
        assert_eq!(m.sample_size(), 4);
    }

    #[test]
    fn single_observation() {
        let m = DiscreteMeasure::from_data(&[5.0]).unwrap();
        assert_eq!(m.atoms(), &[5.0]);
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn distinct_values_keep_uniform_weights() {
        let data: Vec<f64> = (0..17).map(|i| i as f64 * 0.5 - 3.0).collect();
        let m = DiscreteMeasure::from_data(&data).unwrap();
        assert_eq!(m.len(), 17);
        for &w in m.weights() {
            assert_abs_diff_eq!(w, 1.0 / 17.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_data_rejected() {
        assert!(matches!(
            DiscreteMeasure::<f64>::from_data(&[]),
            Err(Error::EmptyData)
        ));
    }

    #[test]
    fn new_merges_and_normalizes() {
        let m = DiscreteMeasure::new(vec![2.0, -1.0, 2.0], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(m.atoms(), &[-1.0, 2.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn zero_weight_atoms_dropped() {
        let m = DiscreteMeasure::new(vec![0.0, 1.0, 2.0], vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(m.atoms(), &[0.0, 2.0]);
    }

    #[test]
    fn bad_mass_rejected() {
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn two_dimensional_merge() {
        let m = DiscreteMeasure2::from_data(&[(0.0, 1.0), (0.0, 1.0), (0.0, 2.0), (1.0, 1.0)])
            .unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.weights()[0], 0.5);
        assert_eq!(m.bounds_x(), (0.0, 1.0));
        assert_eq!(m.bounds_tau(), (1.0, 2.0));
    }
}
