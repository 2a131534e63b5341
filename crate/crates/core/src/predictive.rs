use crate::special;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictiveFamily {
    Gaussian,
    StudentT { dof: f64 },
}

/// Predictive distribution at one query point.
///
/// `scale` is the standard deviation for the Gaussian family and the scale
/// parameter for the Student-t family, whose variance is
/// `scale² ν / (ν - 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predictive {
    pub mean: f64,
    pub scale: f64,
    pub family: PredictiveFamily,
    /// Whether the spread includes observation noise.
    pub includes_noise: bool,
}

impl Predictive {
    pub fn gaussian(mean: f64, variance: f64, includes_noise: bool) -> Self {
        Predictive {
            mean,
            scale: libm::sqrt(variance.max(0.0)),
            family: PredictiveFamily::Gaussian,
            includes_noise,
        }
    }

    pub fn student_t(location: f64, scale: f64, dof: f64, includes_noise: bool) -> Self {
        Predictive { mean: location, scale: scale.max(0.0), family: PredictiveFamily::StudentT { dof }, includes_noise }
    }

    /// Infinite for Student-t with `ν <= 2`.
    pub fn variance(&self) -> f64 {
        let s2 = self.scale * self.scale;
        match self.family {
            PredictiveFamily::Gaussian => s2,
            PredictiveFamily::StudentT { dof } if dof > 2.0 => s2 * dof / (dof - 2.0),
            PredictiveFamily::StudentT { .. } => f64::INFINITY,
        }
    }

    pub fn dof(&self) -> Option<f64> {
        match self.family {
            PredictiveFamily::Gaussian => None,
            PredictiveFamily::StudentT { dof } => Some(dof),
        }
    }

    pub fn ln_pdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.scale;
        let base = match self.family {
            PredictiveFamily::Gaussian => special::normal_ln_pdf(z),
            PredictiveFamily::StudentT { dof } => special::student_t_ln_pdf(z, dof),
        };
        base - libm::log(self.scale)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let z = (y - self.mean) / self.scale;
        match self.family {
            PredictiveFamily::Gaussian => special::normal_cdf(z),
            PredictiveFamily::StudentT { dof } => special::student_t_cdf(z, dof),
        }
    }
}
