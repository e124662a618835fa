//! Ridge regression with per-point personalized differential privacy.
//!
//! Each data point carries its own privacy budget `eps_i`. The fit
//! pipeline weights point `i` by `eps_i / sum_j eps_j` in the ridge
//! objective, solves the weighted problem in closed form, and releases
//! the solution plus noise whose rate is calibrated so that point `i` is
//! protected at exactly `eps_i`. Two reference baselines (uniform-budget
//! output perturbation and threshold subsampling), an a-priori accuracy
//! bound, data tooling and a reproducible experiment harness round out
//! the crate.
//!
//! Entry points:
//!
//! * [`pdpop::fit`] — personalized private fit.
//! * [`baselines::fit_non_personalized`], [`baselines::fit_jorgensen`] —
//!   the comparison methods.
//! * [`bounds::accuracy_bound`] — high-probability error bound.
//! * [`data`] — synthetic generation, privacy profiles, CSV pipelines.
//! * [`bench::run_experiment`] — seeded parameter sweeps with reports.

pub mod baselines;
pub mod bench;
pub mod bounds;
pub mod data;
pub mod error;
pub mod noise;
pub mod pdpop;
pub mod ridge;

pub use error::{Error, Result};
pub use pdpop::{PrivacyProfile, PrivateModel};
pub use ridge::{Dataset, RidgeConfig, WeightVector};
