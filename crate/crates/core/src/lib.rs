//! Nonparametric maximum likelihood estimation (NPMLE) for exponential
//! family mixtures, built around a moment-compression preprocessing step.
//!
//! The expensive part of computing an NPMLE is that the mixture
//! log-likelihood must be evaluated against all `n` observations on every
//! solver iteration. This crate replaces the empirical measure by a small
//! Gaussian quadrature rule that matches its leading moments, fits the
//! mixing distribution against the compressed measure, and certifies the
//! resulting likelihood gap with a computable dual bound.
//!
//! The main pieces:
//!
//! - [`models`]: exponential family components (Gaussian location, scaled
//!   chi-square, unit-base Poisson) with closed-form cumulant functions
//!   and seeded mixture sampling.
//! - [`compression`]: empirical measures, exact counting compression for
//!   integer data, Golub–Welsch quadrature built from Stieltjes recurrence
//!   coefficients, and Carathéodory–Tchakaloff subsampling for 2-D data.
//! - [`solver`]: grid-discretized NPMLE fits with an EM workhorse,
//!   vertex-exchange steps, and a dual-gap optimality certificate.
//! - [`estimators`]: mixture densities, log-likelihoods, empirical Bayes
//!   posterior means, and squared Hellinger distances.
//! - [`theory`]: closed-form order selection, support bounds, and
//!   Chebyshev/Bernstein decay diagnostics.
//! - [`hetero`]: the heteroscedastic Gaussian sequence model, sharing the
//!   solver core through a 2-D compressed measure.

pub mod compression;
pub mod error;
pub mod estimators;
pub mod hetero;
pub mod integrate;
pub mod measure;
pub mod models;
pub mod solver;
pub mod theory;

pub use compression::{
    counting_compress, empirical_measure, empirical_measure_2d, gauss_quadrature, raw_moments,
    tchakaloff_compress, Construction, QuadratureRule, QuadratureRule2,
};
pub use error::{Error, ErrorKind, Result};
pub use measure::{DiscreteMeasure, DiscreteMeasure2};
pub use models::{ExpFamilyModel, ModelKind, Prior, ReferenceKind, Sample};
pub use solver::{
    build_grid, dual_gap_certificate, fit_compressed, fit_npmle, likelihood_matrix,
    CompressionOrder, FitOptions, FitReport, GridMode, GridSpec, LikelihoodMatrix,
    MixingDistribution, PipelineFit,
};
