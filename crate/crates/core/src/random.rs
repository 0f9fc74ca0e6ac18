//! Seeded random smooth initial data.
//!
//! Scalars get `|f̂(k)| ∝ e^{-|k|²/k_p²}` with uniform random phases; the
//! velocity comes from a stream function with that spectrum, so
//! `|û(k)| ∝ |k| e^{-|k|²/k_p²}`. Both are rescaled to a target L² norm.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimState;
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralScalar, SpectralVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    #[serde(default = "default_k_peak")]
    pub k_peak: f64,
    pub u_l2: f64,
    pub theta_l2: f64,
}

fn default_k_peak() -> f64 {
    3.0
}

impl RandomSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_peak.is_finite() && self.k_peak > 0.0) {
            return Err(Error::InvalidInput(format!("k_peak must be > 0, got {}", self.k_peak)));
        }
        for (name, v) in [("u_l2", self.u_l2), ("theta_l2", self.theta_l2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn gaussian_field(grid: &Arc<Grid>, k_peak: f64, rng: &mut ChaCha8Rng) -> SpectralScalar {
    let kp2 = k_peak * k_peak;
    let coeffs = (0..grid.len())
        .map(|i| {
            let amp = (-(grid.ksq(i) as f64) / kp2).exp();
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(amp, phase)
        })
        .collect();
    SpectralScalar::from_coeffs(grid, coeffs).expect("lattice-sized coefficients")
}

/// Smooth mean-free scalar with `‖f‖ = target_l2`.
pub fn random_scalar(grid: &Arc<Grid>, k_peak: f64, target_l2: f64, rng: &mut ChaCha8Rng) -> SpectralScalar {
    let f = gaussian_field(grid, k_peak, rng);
    let n = f.norm_l2();
    if n == 0.0 {
        f
    } else {
        f.scale(target_l2 / n)
    }
}

/// Smooth solenoidal velocity with `‖u‖ = target_l2`.
pub fn random_velocity(grid: &Arc<Grid>, k_peak: f64, target_l2: f64, rng: &mut ChaCha8Rng) -> SpectralVector {
    let u = SpectralVector::from_stream_function(&gaussian_field(grid, k_peak, rng));
    let n = u.norm_l2();
    if n == 0.0 {
        u
    } else {
        u.scale(target_l2 / n)
    }
}

/// `(u₀, θ₀)` at `t = 0`; the velocity is drawn first, then θ, from one stream.
pub fn random_state(grid: &Arc<Grid>, spec: &RandomSpec) -> Result<SimState> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = random_velocity(grid, spec.k_peak, spec.u_l2, &mut rng);
    let theta = random_scalar(grid, spec.k_peak, spec.theta_l2, &mut rng);
    SimState::new(u, theta, 0.0)
}
