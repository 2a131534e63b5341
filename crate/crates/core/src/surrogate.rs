//! Common interface for the acquisition layer.

use crate::gp_gaussian::GaussianGp;
use crate::laplace::{LaplaceGp, ObservationLikelihood};
use crate::predictive::Predictive;
use crate::t_process::TProcess;

/// A fitted model that scores candidate points.
pub trait Surrogate {
    /// Predictive used by expected improvement at `x`.
    fn predict(&self, x: &[f64]) -> Predictive;
}

impl Surrogate for GaussianGp {
    fn predict(&self, x: &[f64]) -> Predictive {
        GaussianGp::predict(self, x, false)
    }
}

impl<L: ObservationLikelihood> Surrogate for LaplaceGp<L> {
    fn predict(&self, x: &[f64]) -> Predictive {
        self.predict_latent(x)
    }
}

impl Surrogate for TProcess {
    fn predict(&self, x: &[f64]) -> Predictive {
        TProcess::predict(self, x)
    }
}

impl<F: Fn(&[f64]) -> Predictive> Surrogate for F {
    fn predict(&self, x: &[f64]) -> Predictive {
        self(x)
    }
}

/// One of the three fitted surrogate kinds.
#[derive(Debug, Clone)]
pub enum SurrogateModel {
    Gaussian(GaussianGp),
    StudentT(crate::laplace::StudentTGp),
    TProcess(TProcess),
}

impl Surrogate for SurrogateModel {
    fn predict(&self, x: &[f64]) -> Predictive {
        match self {
            SurrogateModel::Gaussian(m) => Surrogate::predict(m, x),
            SurrogateModel::StudentT(m) => Surrogate::predict(m, x),
            SurrogateModel::TProcess(m) => Surrogate::predict(m, x),
        }
    }
}
