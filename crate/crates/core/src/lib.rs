//! Robustness scoring for probabilistic classifiers.
//!
//! The core idea: a prediction is robust if the model's probability measure
//! can be perturbed a lot — in the constant-odds-ratio sense — before the
//! predicted class changes. For a conditional distribution `p(.|x)` that
//! amount has a closed form in the top-two class probabilities, which makes
//! the score applicable to any model that exposes `predict_proba`, whatever
//! its architecture or feature types.
//!
//! What the crate provides:
//!
//! * [`metrics`] — the closed-form scores `r_cor` and `r_star` plus the
//!   monotone conversions between them.
//! * [`oracle`] — a finite-space brute-force checker: explicit joint pmfs,
//!   the witness perturbation that attains the flip boundary, and a
//!   randomized search for cheaper prediction-flipping perturbations
//!   (there are none, and the oracle confirms it numerically).
//! * [`arc`] — accuracy-rejection curves and cross-split averaging.
//! * [`selection`] — dynamic selection between two models routed by the
//!   robustness ratio (the RS-D and RS-I strategies) and the single-best
//!   baseline.
//! * [`models`] — small built-in probabilistic learners (Gaussian naive
//!   Bayes, k-NN, random forest), grid-search CV, and ingestion of
//!   externally produced prediction tables.
//! * [`data`] — CSV dataset loading, seeded train/validation/test splits,
//!   and uniform label corruption.
//! * [`experiment`] — the multi-split experiment harness tying it all
//!   together, fully reproducible from one base seed.

pub mod arc;
pub mod data;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod selection;

mod error;

pub use error::{Error, Result};
