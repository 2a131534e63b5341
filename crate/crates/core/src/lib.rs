//! Outlier-robust Bayesian optimization.
//!
//! Three surrogate models share one stationary kernel layer:
//!
//! * [`GaussianGp`]: exact GP regression with Gaussian likelihood.
//! * [`LaplaceGp`]: GP with a Student-t observation likelihood, posterior
//!   approximated by the Laplace method around the latent mode.
//! * [`TProcess`]: Student-t process obtained by an inverse-gamma prior on
//!   the kernel scale, with additive noise inside the scaled kernel.
//!
//! [`outliers`] classifies observations against the robust model, and
//! [`engine`] composes everything into the BO loop with scheduled
//! filtering. Everything here is `no_std` + `alloc`; file formats and the
//! experiment runner live in the `robust-bo` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod acquisition;
pub mod dataset;
pub mod design;
pub mod engine;
mod error;
pub mod gp_gaussian;
pub mod kernels;
pub mod laplace;
pub mod linalg;
pub mod objective;
pub mod optimize;
pub mod outliers;
pub mod predictive;
pub mod rng;
pub mod special;
pub mod surrogate;
pub mod t_process;

pub use acquisition::{ei_gaussian, ei_student_t, expected_improvement, maximize_acquisition, AcquisitionConfig};
pub use dataset::Dataset;
pub use design::initial_design;
pub use engine::{run_bo, BoConfig, BoMode, Evaluation, Objective, RunLog, RunRecord};
pub use error::{Error, Result};
pub use gp_gaussian::{GaussianGp, GpHypers};
pub use kernels::{KernelFamily, KernelParams};
pub use laplace::{GaussianLik, LaplaceGp, LaplaceState, ObservationLikelihood, StudentTGp, StudentTLik};
pub use linalg::Matrix;
pub use objective::{corrupt, OutlierModel, SyntheticObjective};
pub use optimize::{Bounds, HyperSearch};
pub use outliers::{classify_outliers, schedule_says_filter, ClassificationReport, FilterConfig};
pub use predictive::{Predictive, PredictiveFamily};
pub use surrogate::{Surrogate, SurrogateModel};
pub use t_process::{TProcess, TProcessParams};
