#![allow(dead_code)]

use std::sync::Arc;

use boussinesq_core::{Axis, Grid, SpectralScalar, SpectralVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

pub fn random_scalar(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralScalar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)))
        .collect();
    SpectralScalar::from_coeffs(grid, coeffs).unwrap()
}

pub fn random_velocity(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralVector {
    SpectralVector::from_stream_function(&random_scalar(grid, seed, amp))
}

pub fn random_vector(grid: &Arc<Grid>, seed: u64, amp: f64) -> SpectralVector {
    SpectralVector::new(
        random_scalar(grid, seed, amp),
        random_scalar(grid, seed.wrapping_add(17), amp),
    )
    .unwrap()
}

/// Direct sum `Σ_{p+q=k} f̂_p ĥ_q` truncated to the retained modes.
pub fn convolve(f: &SpectralScalar, h: &SpectralScalar) -> Vec<Complex64> {
    let g = f.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for (p, fp) in f.coeffs().iter().enumerate() {
        if fp.norm() == 0.0 {
            continue;
        }
        let (p1, p2) = g.wavenumber(p);
        for (q, hq) in h.coeffs().iter().enumerate() {
            let (q1, q2) = g.wavenumber(q);
            if let Some(k) = g.index_of(p1 + q1, p2 + q2) {
                if g.is_retained(k) {
                    out[k] += fp * hq;
                }
            }
        }
    }
    out
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `Σ_i (u_i ∂_i) f` through the convolution oracle.
pub fn advection_oracle(u: &SpectralVector, f: &SpectralScalar) -> Vec<Complex64> {
    let a = convolve(&u.u1, &f.derivative(Axis::X1));
    let b = convolve(&u.u2, &f.derivative(Axis::X2));
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}
