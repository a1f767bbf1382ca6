//! Bounded gamma-process deterioration modelling.
//!
//! This crate fits stochastic deterioration models to inspection records
//! of infrastructure assets (bridge condition indices and similar bounded
//! performance measures), selects among eight candidate process families
//! by AIC, predicts future condition and remaining life, and optimizes
//! age-based and condition-based replacement policies by renewal theory.
//! Every analytic result has a Monte Carlo cross-check built from the
//! same primitives but an independent sampling route.
//!
//! Modules:
//!
//! * [`gamma`] — gamma density/CDF/quantile/sampling and shape functions;
//! * [`model`] — the eight process variants behind one interface;
//! * [`inference`] — data cleansing, maximum likelihood, AIC selection;
//! * [`analysis`] — moment curves, mean-at-maximum-variance, predictive
//!   bands, mean-matched model comparison;
//! * [`policy`] — age- and condition-based replacement optimization with
//!   a renewal-reward simulator.

pub mod analysis;
pub mod error;
pub mod gamma;
pub mod inference;
pub mod model;
pub mod optim;
pub mod policy;
pub mod quad;

pub use error::{Error, Result};
pub use model::{ModelSpec, Orientation, Theta, Variant};
