//! Max-min block estimation for multiple isotonic regression on `[0,1]^d`.
//!
//! The crate provides:
//!
//! * lattice and random designs with seeded dataset generation ([`design`]),
//! * exact rectangle sums over datasets, with d-dimensional summed-area
//!   tables for lattices ([`blocks`]),
//! * the tuning-free max-min block estimator, whole-grid fitting, and the
//!   univariate pool-adjacent-violators reference ([`estimator`]),
//! * the local rate calculus: critical Taylor index sets, effective
//!   dimension and sample size, the local rate exponent, and the leading
//!   constant of the pointwise limit ([`rates`]),
//! * Monte Carlo samplers for the sup-inf limit statistics driven by
//!   Brownian sheets, plus the univariate greatest-convex-minorant slope
//!   sampler they must agree with ([`limit`]),
//! * two-point minimax lower-bound certificates built from isotone local
//!   perturbations ([`minimax`]),
//! * a reproducible experiment harness emitting CSV tables for empirical
//!   CDF, QQ, and rate-fit studies ([`experiments`]).
//!
//! Every stochastic operation takes an explicit seed and is bit-reproducible.

pub mod blocks;
pub mod csvio;
pub mod design;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod grid;
pub mod limit;
pub mod minimax;
pub mod rates;
pub mod rng;
pub mod testfn;

pub use error::{Error, Result};
