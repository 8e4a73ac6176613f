//! Exponential family mixture components.
//!
//! Each model is the tilt family `p_theta(x) = exp(theta*x - kappa(theta)) p0(x)`
//! of a fixed base density `p0`, with the cumulant function `kappa` in
//! closed form. Mixing parameters are restricted to `[-M, M]` inside the
//! canonical domain.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::MixingDistribution;

pub const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Standard normal base; `kappa(theta) = theta^2 / 2`.
    GaussianLocation,
    /// Gamma base with shape `nu/2` and rate `nu/(2 sigma2)`;
    /// `kappa(theta) = -(nu/2) ln(1 - 2 sigma2 theta / nu)`.
    ScaledChiSquare { nu: u32, sigma2: f64 },
    /// Unit-rate Poisson base on the counting measure;
    /// `kappa(theta) = e^theta - 1`.
    PoissonUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Lebesgue,
    Counting,
}

/// An exponential family with known cumulant function and support radius
/// `M` for the mixing distribution. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyModel {
    kind: ModelKind,
    support_radius: f64,
}

impl ExpFamilyModel {
    pub fn new(kind: ModelKind, support_radius: f64) -> Result<Self> {
        if support_radius.is_nan() || support_radius <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "support radius M must be positive, got {support_radius}"
            )));
        }
        match kind {
            ModelKind::GaussianLocation | ModelKind::PoissonUnit => {}
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                if nu < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "scaled chi-square needs nu >= 2, got {nu}"
                    )));
                }
                if !sigma2.is_finite() || sigma2 <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "scaled chi-square needs sigma2 > 0, got {sigma2}"
                    )));
                }
                let rate = nu as f64 / (2.0 * sigma2);
                if support_radius >= rate {
                    return Err(Error::InvalidParameter(format!(
                        "M = {support_radius} must be below nu/(2 sigma2) = {rate}"
                    )));
                }
            }
        }
        Ok(Self {
            kind,
            support_radius,
        })
    }

    pub fn gaussian_location() -> Self {
        Self {
            kind: ModelKind::GaussianLocation,
            support_radius: f64::INFINITY,
        }
    }

    pub fn scaled_chi_square(nu: u32, sigma2: f64, support_radius: f64) -> Result<Self> {
        Self::new(ModelKind::ScaledChiSquare { nu, sigma2 }, support_radius)
    }

    pub fn poisson_unit() -> Self {
        Self {
            kind: ModelKind::PoissonUnit,
            support_radius: f64::INFINITY,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        match self.kind {
            ModelKind::PoissonUnit => ReferenceKind::Counting,
            _ => ReferenceKind::Lebesgue,
        }
    }

    /// Polynomial tail exponents `(alpha1, alpha2)` of the cumulant
    /// function, present only when the unbounded-support scenario applies.
    pub fn tail_exponents(&self) -> Option<(f64, f64)> {
        match self.kind {
            ModelKind::GaussianLocation => Some((1.0, 1.0)),
            _ => None,
        }
    }

    /// Canonical domain as an interval; the upper endpoint is open for
    /// the scaled chi-square family.
    pub fn canonical_domain(&self) -> (f64, f64) {
        match self.kind {
            ModelKind::GaussianLocation | ModelKind::PoissonUnit => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                (f64::NEG_INFINITY, nu as f64 / (2.0 * sigma2))
            }
        }
    }

    pub fn theta_in_domain(&self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        let (lo, hi) = self.canonical_domain();
        theta > lo && theta < hi
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if self.theta_in_domain(theta) {
            Ok(())
        } else {
            let (lo, hi) = self.canonical_domain();
            Err(Error::ThetaOutsideDomain {
                theta,
                domain: format!("({lo}, {hi})"),
            })
        }
    }

    pub fn kappa(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match self.kind {
            ModelKind::GaussianLocation => 0.5 * theta * theta,
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                let a = nu as f64 / 2.0;
                let rate = nu as f64 / (2.0 * sigma2);
                -a * (-theta / rate).ln_1p()
            }
            ModelKind::PoissonUnit => theta.exp_m1(),
        })
    }

    pub fn kappa_prime(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match self.kind {
            ModelKind::GaussianLocation => theta,
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                let a = nu as f64 / 2.0;
                let rate = nu as f64 / (2.0 * sigma2);
                a / (rate - theta)
            }
            ModelKind::PoissonUnit => theta.exp(),
        })
    }

    pub fn kappa_double_prime(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(match self.kind {
            ModelKind::GaussianLocation => 1.0,
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                let a = nu as f64 / 2.0;
                let rate = nu as f64 / (2.0 * sigma2);
                a / ((rate - theta) * (rate - theta))
            }
            ModelKind::PoissonUnit => theta.exp(),
        })
    }

    /// `log l_theta(x) = theta x - kappa(theta)`, the log likelihood ratio
    /// against the base density.
    pub fn log_likelihood_ratio(&self, theta: f64, x: f64) -> Result<f64> {
        Ok(theta * x - self.kappa(theta)?)
    }

    /// `sup_{|t| <= m} |kappa(t)|`; by convexity and `kappa(0) = 0` the
    /// supremum sits at an endpoint.
    pub fn kappa_sup(&self, m: f64) -> Result<f64> {
        if m < 0.0 || m.is_nan() {
            return Err(Error::InvalidParameter(format!("radius {m}")));
        }
        if m == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            ModelKind::GaussianLocation => Ok(0.5 * m * m),
            ModelKind::PoissonUnit => Ok(m.exp_m1()),
            ModelKind::ScaledChiSquare { .. } => {
                let hi = self.kappa(m)?;
                let lo = self.kappa(-m)?;
                Ok(hi.abs().max(lo.abs()))
            }
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self.kind {
            ModelKind::GaussianLocation => x.is_finite(),
            ModelKind::ScaledChiSquare { .. } => x.is_finite() && x > 0.0,
            ModelKind::PoissonUnit => x.is_finite() && x >= 0.0 && x.fract() == 0.0,
        }
    }

    /// Log of the base density `p0` with respect to the reference measure.
    pub fn log_base_density(&self, x: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(Error::OutsideSupport { x });
        }
        Ok(match self.kind {
            ModelKind::GaussianLocation => -0.5 * x * x - 0.5 * LN_2PI,
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                let a = nu as f64 / 2.0;
                let rate = nu as f64 / (2.0 * sigma2);
                a * rate.ln() - libm::lgamma(a) + (a - 1.0) * x.ln() - rate * x
            }
            ModelKind::PoissonUnit => -1.0 - libm::lgamma(x + 1.0),
        })
    }

    /// Draws `n` observations from the mixture `f_g0`, keeping the latent
    /// parameters for scoring. Deterministic given the seed.
    pub fn sample(&self, prior: &Prior, n: usize, seed: u64) -> Result<Sample> {
        if n == 0 {
            return Err(Error::EmptyData);
        }
        prior.validate(self)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut observations = Vec::with_capacity(n);
        let mut latents = Vec::with_capacity(n);
        for _ in 0..n {
            let theta = prior.draw(&mut rng);
            let x = self.sample_one(theta, &mut rng)?;
            observations.push(x);
            latents.push(theta);
        }
        Ok(Sample {
            observations,
            latents,
        })
    }

    fn sample_one(&self, theta: f64, rng: &mut ChaCha12Rng) -> Result<f64> {
        match self.kind {
            ModelKind::GaussianLocation => {
                let z: f64 = StandardNormal.sample(rng);
                Ok(theta + z)
            }
            ModelKind::ScaledChiSquare { nu, sigma2 } => {
                // Tilting a Gamma(a, rate) base by theta keeps the shape and
                // shifts the rate to rate - theta.
                let a = nu as f64 / 2.0;
                let rate = nu as f64 / (2.0 * sigma2) - theta;
                let gamma = Gamma::new(a, 1.0 / rate)
                    .map_err(|e| Error::InvalidParameter(format!("gamma sampler: {e}")))?;
                Ok(gamma.sample(rng))
            }
            ModelKind::PoissonUnit => {
                let lambda = theta.exp();
                let pois = Poisson::new(lambda)
                    .map_err(|e| Error::InvalidParameter(format!("poisson sampler: {e}")))?;
                let x: f64 = pois.sample(rng);
                Ok(x)
            }
        }
    }
}

/// Priors supported by the simulation harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "prior", rename_all = "snake_case")]
pub enum Prior {
    PointMass { at: f64 },
    Uniform { lo: f64, hi: f64 },
    Discrete { mixing: MixingDistribution },
}

impl Prior {
    fn validate(&self, model: &ExpFamilyModel) -> Result<()> {
        let m = model.support_radius();
        let inside = |theta: f64| model.theta_in_domain(theta) && theta.abs() <= m;
        let ok = match self {
            Prior::PointMass { at } => inside(*at),
            Prior::Uniform { lo, hi } => lo <= hi && inside(*lo) && inside(*hi),
            Prior::Discrete { mixing } => mixing.grid().iter().all(|&t| inside(t)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "prior support not inside [-M, M] within the canonical domain: {self:?}"
            )))
        }
    }

    fn draw(&self, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            Prior::PointMass { at } => *at,
            Prior::Uniform { lo, hi } => rng.random_range(*lo..=*hi),
            Prior::Discrete { mixing } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let weights = mixing.weights();
                for (k, &w) in weights.iter().enumerate() {
                    acc += w;
                    if u <= acc {
                        return mixing.grid()[k];
                    }
                }
                *mixing.grid().last().unwrap()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observations: Vec<f64>,
    pub latents: Vec<f64>,
}

impl Sample {
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.observations
            .iter()
            .copied()
            .zip(self.latents.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sc21(m: f64) -> ExpFamilyModel {
        ExpFamilyModel::scaled_chi_square(2, 1.0, m).unwrap()
    }

    #[test]
    fn gaussian_kappa_closed_form() {
        let gl = ExpFamilyModel::gaussian_location();
        assert_abs_diff_eq!(gl.kappa(1.0).unwrap(), 0.5);
        assert_abs_diff_eq!(gl.kappa_prime(1.7).unwrap(), 1.7);
        assert_abs_diff_eq!(gl.kappa_double_prime(-3.0).unwrap(), 1.0);
        assert_eq!(gl.tail_exponents(), Some((1.0, 1.0)));
    }

    #[test]
    fn scaled_chi_square_matches_numeric_mgf() {
        // Oracle: kappa(theta) = log of \int e^{theta x} p0(x) dx, evaluated
        // by Simpson quadrature over the Gamma(1, 1) base.
        let model = sc21(0.3);
        let theta = 0.25;
        let n = 400_000;
        let hi = 60.0;
        let h = hi / n as f64;
        let f = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                (theta * x).exp() * (-x).exp()
            }
        };
        let mut s = f(0.0) + f(hi);
        for i in 1..n {
            let x = i as f64 * h;
            s += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let z = s * h / 3.0;
        assert_relative_eq!(model.kappa(theta).unwrap(), z.ln(), max_relative = 1e-8);
        assert_abs_diff_eq!(
            model.kappa(theta).unwrap(),
            (4.0f64 / 3.0).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn scaled_chi_square_domain_enforced() {
        assert!(ExpFamilyModel::scaled_chi_square(2, 1.0, 1.5).is_err());
        assert!(ExpFamilyModel::scaled_chi_square(2, 1.0, 1.0).is_err());
        assert!(ExpFamilyModel::scaled_chi_square(1, 1.0, 0.3).is_err());
        assert!(ExpFamilyModel::scaled_chi_square(2, -1.0, 0.3).is_err());
        let m = sc21(0.3);
        assert!(m.kappa(1.0).is_err());
        assert!(m.kappa(0.999).is_ok());
    }

    #[test]
    fn log_likelihood_ratio_values() {
        let gl = ExpFamilyModel::gaussian_location();
        assert_abs_diff_eq!(gl.log_likelihood_ratio(0.0, 7.3).unwrap(), 0.0);
        assert_abs_diff_eq!(gl.log_likelihood_ratio(1.0, 2.0).unwrap(), 1.5);
        let sc = sc21(0.3);
        assert_abs_diff_eq!(
            sc.log_likelihood_ratio(0.25, 1.0).unwrap(),
            0.25 - (4.0f64 / 3.0).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn kappa_prime_examples() {
        assert_abs_diff_eq!(sc21(0.3).kappa_prime(0.5).unwrap(), 2.0, epsilon = 1e-14);
        let pois = ExpFamilyModel::poisson_unit();
        assert_abs_diff_eq!(pois.kappa_double_prime(0.0).unwrap(), 1.0);
    }

    #[test]
    fn finite_differences_match_kappa_prime() {
        let models = [
            ExpFamilyModel::gaussian_location(),
            sc21(0.3),
            ExpFamilyModel::poisson_unit(),
        ];
        for model in &models {
            let (lo, hi) = model.canonical_domain();
            for i in 0..21 {
                let theta = -2.0 + 0.2 * i as f64;
                if theta <= lo + 0.05 || theta >= hi - 0.05 {
                    continue;
                }
                let h = 1e-5 * theta.abs().max(1.0);
                let fd = (model.kappa(theta + h).unwrap() - model.kappa(theta - h).unwrap())
                    / (2.0 * h);
                let exact = model.kappa_prime(theta).unwrap();
                assert_relative_eq!(fd, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn kappa_is_convex_on_grid() {
        for model in [
            ExpFamilyModel::gaussian_location(),
            sc21(0.3),
            ExpFamilyModel::poisson_unit(),
        ] {
            assert_abs_diff_eq!(model.kappa(0.0).unwrap(), 0.0);
            for i in 0..40 {
                let theta = -3.0 + 0.15 * i as f64;
                if !model.theta_in_domain(theta) {
                    continue;
                }
                assert!(model.kappa_double_prime(theta).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn poisson_pmf_normalizes() {
        let pois = ExpFamilyModel::poisson_unit();
        for theta in [-1.0, 0.0, 1.0] {
            let kappa = pois.kappa(theta).unwrap();
            let mut total = 0.0;
            for x in 0..200 {
                let xf = x as f64;
                let logp = theta * xf - kappa + pois.log_base_density(xf).unwrap();
                total += logp.exp();
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_prior_sampling() {
        let gl = ExpFamilyModel::gaussian_location();
        let s = gl.sample(&Prior::PointMass { at: 0.0 }, 3, 42).unwrap();
        assert_eq!(s.latents, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.observations.len(), 3);
        let s2 = gl.sample(&Prior::PointMass { at: 0.0 }, 3, 42).unwrap();
        assert_eq!(s.observations, s2.observations);
    }

    #[test]
    fn uniform_prior_moments() {
        // Law of total variance: Var X = 1 + Var(theta) = 1 + 4/3.
        let gl = ExpFamilyModel::gaussian_location();
        let n = 100_000;
        let s = gl
            .sample(&Prior::Uniform { lo: -2.0, hi: 2.0 }, n, 12345)
            .unwrap();
        let mean = s.observations.iter().sum::<f64>() / n as f64;
        let var = s
            .observations
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / n as f64;
        // mu4 = E theta^4 + 6 E theta^2 + 3 = 16/5 + 8 + 3; 3 SE windows.
        let se_mean = (7.0f64 / 3.0 / n as f64).sqrt();
        let se_var = ((14.2f64 - (7.0f64 / 3.0).powi(2)) / n as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se_mean, "mean {mean}");
        assert!((var - 7.0 / 3.0).abs() <= 3.0 * se_var, "var {var}");
    }

    #[test]
    fn tilted_chi_square_sampling_mean() {
        // Tilt by theta = 0.25 gives Gamma(1, rate 0.75), mean 4/3.
        let sc = sc21(0.3);
        let n = 10_000;
        let s = sc.sample(&Prior::PointMass { at: 0.25 }, n, 9).unwrap();
        let mean = s.observations.iter().sum::<f64>() / n as f64;
        let se = (16.0f64 / 9.0 / n as f64).sqrt();
        assert!((mean - 4.0 / 3.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn prior_outside_support_rejected() {
        let sc = sc21(0.3);
        assert!(sc.sample(&Prior::PointMass { at: 0.5 }, 5, 1).is_err());
        let gl = ExpFamilyModel::new(ModelKind::GaussianLocation, 1.0).unwrap();
        assert!(gl
            .sample(&Prior::Uniform { lo: -2.0, hi: 2.0 }, 5, 1)
            .is_err());
    }
}
