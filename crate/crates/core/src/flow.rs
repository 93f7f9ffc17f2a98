//! Optimal-transport conditional flow matching: interpolant, regression
//! target, loss, timestep schedule and source noise.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major array with an explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::LengthMismatch { what: "tensor data vs shape", left: data.len(), right: expected });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(self.shape.clone(), other.shape.clone()));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| f(x, y)).collect();
        Ok(Tensor { shape: self.shape.clone(), data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Residual noise scale `sigma` in `[0, 1)`.
    pub sigma: f64,
    /// Precision of the Gaussian source; its variance is `1 / tau`.
    pub tau: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { sigma: 0.05, tau: 1.0 }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(Error::Config(format!("sigma must lie in [0, 1), got {}", self.sigma)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// Point on the straight path at time `t`: `(1 - (1 - sigma) t) x0 + t x1`.
pub fn ot_interpolant(x0: &Tensor, x1: &Tensor, t: f64, cfg: &FlowConfig) -> Result<Tensor> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Precondition(format!("t must lie in [0, 1], got {t}")));
    }
    let c0 = 1.0 - (1.0 - cfg.sigma) * t;
    x0.zip_with(x1, |a, b| c0 * a + t * b)
}

/// Time-independent velocity of the path: `x1 - (1 - sigma) x0`.
pub fn ot_target_field(x0: &Tensor, x1: &Tensor, cfg: &FlowConfig) -> Result<Tensor> {
    let c = 1.0 - cfg.sigma;
    x0.zip_with(x1, |a, b| b - c * a)
}

/// Mean (over elements) squared error between the target field and a prediction.
pub fn cfm_loss(predicted: &Tensor, x0: &Tensor, x1: &Tensor, cfg: &FlowConfig) -> Result<f64> {
    let target = ot_target_field(x0, x1, cfg)?;
    target.same_shape(predicted)?;
    if target.is_empty() {
        return Err(Error::Precondition("empty tensor".into()));
    }
    let sq: f64 = target.data.iter().zip(&predicted.data).map(|(w, v)| (w - v) * (w - v)).sum();
    Ok(sq / target.len() as f64)
}

/// Monte-Carlo average of [`cfm_loss`] over `(predicted, x0, x1)` draws.
pub fn cfm_loss_batch(draws: &[(Tensor, Tensor, Tensor)], cfg: &FlowConfig) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Precondition("no draws".into()));
    }
    let mut total = 0.0;
    for (v, x0, x1) in draws {
        total += cfm_loss(v, x0, x1, cfg)?;
    }
    Ok(total / draws.len() as f64)
}

/// Cosine reparameterization of a uniform time: `1 - cos(u pi / 2)`.
pub fn cosine_timestep(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Precondition(format!("u must lie in [0, 1], got {u}")));
    }
    if u == 1.0 {
        return Ok(1.0);
    }
    Ok(1.0 - (u * FRAC_PI_2).cos())
}

/// I.i.d. `N(0, 1/tau)` entries, reproducible per seed.
pub fn sample_source(shape: Vec<usize>, tau: f64, seed: u64) -> Result<Tensor> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let normal = Normal::new(0.0, tau.sqrt().recip()).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| normal.sample(&mut rng)).collect();
    Ok(Tensor { shape, data })
}
