//! Periodic Fourier discretization of the box `[0, L)²`.
//!
//! Fields are stored on the full `n × n` complex lattice. Integer wavenumbers
//! run over `[-n/2, n/2 - 1]` on each axis; flat index `i1 * n + i2` holds the
//! mode `(k1, k2)` whose indices map to `i1`, `i2` modulo `n`. Physical arrays
//! use the same row-major layout: `values[i1 * n + i2] = f(i1·Δx, i2·Δx)`.
//!
//! The normalization is `f(x) = Σ f̂(k) exp(iκ₀k·x)`, so L² norms carry the
//! box area `|Ω| = L²` through Parseval: `‖f‖² = |Ω| Σ |f̂(k)|²`.
//!
//! Every field keeps three invariants: a zero mean mode, Hermitian symmetry
//! `f̂(-k) = conj f̂(k)`, and zero coefficients outside the dealiased square
//! `max(|k1|, |k2|) ≤ cut`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance on the spatial mean accepted by [`SpectralScalar::from_physical`].
pub const MEAN_TOL: f64 = 1e-12;
/// Relative divergence tolerance for velocities entering the nonlinear terms.
pub const SOLENOIDAL_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Physical constants of the system.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysParams {
    /// Kinematic viscosity ν.
    pub nu: f64,
    /// Magnitude of the (upward) gravity vector.
    pub g: f64,
    /// Box side L.
    pub box_len: f64,
}

impl PhysParams {
    pub fn new(nu: f64, g: f64, box_len: f64) -> Result<Self> {
        let p = Self { nu, g, box_len };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParams(format!("nu must be > 0, got {}", self.nu)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParams(format!("g must be ≥ 0, got {}", self.g)));
        }
        if !(self.box_len.is_finite() && self.box_len > 0.0) {
            return Err(Error::InvalidParams(format!(
                "box_len must be > 0, got {}",
                self.box_len
            )));
        }
        Ok(())
    }

    /// Fundamental wavenumber κ₀ = 2π/L.
    pub fn kappa0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_len
    }
}

/// Resolution, box size, wavenumber lattice and FFT plans.
///
/// Immutable after construction; share it through `Arc`.
pub struct Grid {
    n: usize,
    box_len: f64,
    kappa0: f64,
    dealias_cut: usize,
    kx: Vec<i64>,
    ky: Vec<i64>,
    retained: Vec<bool>,
    conj_index: Vec<usize>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("box_len", &self.box_len)
            .field("kappa0", &self.kappa0)
            .field("dealias_cut", &self.dealias_cut)
            .finish()
    }
}

impl Grid {
    /// Builds an `n × n` grid on a box of side `box_len`.
    ///
    /// `n` must be even and at least 6. The dealiasing cut is the largest `K`
    /// with `3K < n`, which keeps every quadratic product alias-free on the
    /// retained modes.
    pub fn new(n: usize, box_len: f64) -> Result<Arc<Self>> {
        if n < 6 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid("n must be even and ≥ 6".into()));
        }
        if !(box_len.is_finite() && box_len > 0.0) {
            return Err(Error::InvalidGrid(format!("box_len must be > 0, got {box_len}")));
        }
        let dealias_cut = (n - 1) / 3;
        let len = n * n;
        let mut kx = Vec::with_capacity(len);
        let mut ky = Vec::with_capacity(len);
        let mut retained = Vec::with_capacity(len);
        let mut conj_index = Vec::with_capacity(len);
        for i1 in 0..n {
            for i2 in 0..n {
                let k1 = signed_index(i1, n);
                let k2 = signed_index(i2, n);
                kx.push(k1);
                ky.push(k2);
                let cut = dealias_cut as i64;
                retained.push((k1, k2) != (0, 0) && k1.abs() <= cut && k2.abs() <= cut);
                conj_index.push(((n - i1) % n) * n + (n - i2) % n);
            }
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            n,
            box_len,
            kappa0: 2.0 * std::f64::consts::PI / box_len,
            dealias_cut,
            kx,
            ky,
            retained,
            conj_index,
            forward,
            inverse,
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn dealias_cut(&self) -> usize {
        self.dealias_cut
    }

    /// Number of lattice points, `n²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.box_len / self.n as f64
    }

    /// Box area |Ω| = L².
    pub fn area(&self) -> f64 {
        self.box_len * self.box_len
    }

    /// Integer wavenumber pair stored at flat index `idx`.
    pub fn wavenumber(&self, idx: usize) -> (i64, i64) {
        (self.kx[idx], self.ky[idx])
    }

    /// `|k|²` in integer units at flat index `idx`.
    pub fn ksq(&self, idx: usize) -> i64 {
        self.kx[idx] * self.kx[idx] + self.ky[idx] * self.ky[idx]
    }

    /// Flat index of `(k1, k2)`, or `None` outside `[-n/2, n/2 - 1]²`.
    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k1 < -half || k1 >= half || k2 < -half || k2 >= half {
            return None;
        }
        let n = self.n as i64;
        Some((k1.rem_euclid(n) * n + k2.rem_euclid(n)) as usize)
    }

    /// Whether the mode at `idx` survives dealiasing (the zero mode never does).
    pub fn is_retained(&self, idx: usize) -> bool {
        self.retained[idx]
    }

    /// Flat index of `-k`.
    pub fn conj_index(&self, idx: usize) -> usize {
        self.conj_index[idx]
    }

    /// Physical coordinate of grid index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Samples `f(x1, x2)` on the grid in the physical layout.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i1 in 0..self.n {
            let x1 = self.coord(i1);
            for i2 in 0..self.n {
                out.push(f(x1, self.coord(i2)));
            }
        }
        out
    }

    pub(crate) fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.box_len == other.box_len)
    }

    /// Unnormalized 2D DFT in place (forward or inverse).
    fn fft2(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, self.n);
    }

    /// Normalized forward transform of a real array, no masking.
    pub(crate) fn forward_raw(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, false);
        let scale = 1.0 / self.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    fn inverse_real(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft2(&mut buf, true);
        buf.into_iter().map(|c| c.re).collect()
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Mean-free real periodic scalar field in Fourier space.
#[derive(Clone)]
pub struct SpectralScalar {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for SpectralScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let active = self.coeffs.iter().filter(|c| **c != ZERO).count();
        f.debug_struct("SpectralScalar")
            .field("n", &self.grid.n)
            .field("nonzero_modes", &active)
            .finish()
    }
}

impl PartialEq for SpectralScalar {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.coeffs == other.coeffs
    }
}

impl SpectralScalar {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    /// Discrete Fourier transform of a real physical array. Errors if the
    /// spatial mean is not below [`MEAN_TOL`].
    pub fn from_physical(values: &[f64], grid: &Arc<Grid>) -> Result<Self> {
        let (field, mean) = Self::from_physical_with_mean(values, grid)?;
        if mean.abs() >= MEAN_TOL {
            return Err(Error::NonZeroMean { mean });
        }
        Ok(field)
    }

    /// Like [`Self::from_physical`] but strips and returns the mean instead of
    /// rejecting it.
    pub fn from_physical_with_mean(values: &[f64], grid: &Arc<Grid>) -> Result<(Self, f64)> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let coeffs = grid.forward_raw(values);
        let mean = coeffs[0].re;
        let mut field = Self {
            grid: Arc::clone(grid),
            coeffs,
        };
        field.enforce_invariants();
        Ok((field, mean))
    }

    /// Samples a function on the grid and transforms it.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        Self::from_physical(&grid.sample(f), grid)
    }

    /// Wraps raw coefficients, then re-imposes the field invariants.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        let mut field = Self {
            grid: Arc::clone(grid),
            coeffs,
        };
        field.enforce_invariants();
        Ok(field)
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        Self {
            grid: Arc::clone(grid),
            coeffs,
        }
    }

    /// Sets `f̂(k) = c` and `f̂(-k) = conj c`. Errors if `k` is not retained.
    pub fn set_mode(&mut self, k1: i64, k2: i64, c: Complex64) -> Result<()> {
        let cut = self.grid.dealias_cut;
        let idx = self
            .grid
            .index_of(k1, k2)
            .filter(|&i| self.grid.is_retained(i))
            .ok_or(Error::Unresolvable {
                index: k1.abs().max(k2.abs()),
                cut,
            })?;
        self.coeffs[idx] = c;
        self.coeffs[self.grid.conj_index(idx)] = c.conj();
        Ok(())
    }

    /// Coefficient of mode `(k1, k2)`; zero outside the lattice.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid.index_of(k1, k2).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.inverse_real(&self.coeffs)
    }

    /// Zero mean, dealias mask, exact Hermitian symmetry.
    pub fn enforce_invariants(&mut self) {
        let grid = &self.grid;
        for idx in 0..self.coeffs.len() {
            if !grid.retained[idx] {
                self.coeffs[idx] = ZERO;
                continue;
            }
            let j = grid.conj_index[idx];
            if idx < j {
                let s = (self.coeffs[idx] + self.coeffs[j].conj()) * 0.5;
                self.coeffs[idx] = s;
                self.coeffs[j] = s.conj();
            }
        }
    }

    /// Zero-mode coefficient; the spatial mean of the field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Largest `|f̂(-k) - conj f̂(k)|` over the lattice.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.conj_index[i]] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude outside the dealiased square.
    pub fn mask_defect(&self) -> f64 {
        (1..self.coeffs.len())
            .filter(|&i| !self.grid.retained[i])
            .map(|i| self.coeffs[i].norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies a per-mode multiplier `m(k1, k2)` to the retained modes.
    fn map_modes(&self, m: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let grid = &self.grid;
        let coeffs = (0..self.coeffs.len())
            .map(|i| {
                if grid.retained[i] {
                    m(grid.kx[i], grid.ky[i], self.coeffs[i])
                } else {
                    ZERO
                }
            })
            .collect();
        Self::from_coeffs_unchecked(&self.grid, coeffs)
    }

    /// Partial derivative: multiplies `f̂(k)` by `iκ₀k_axis`.
    pub fn derivative(&self, axis: Axis) -> Self {
        let kappa0 = self.grid.kappa0;
        self.map_modes(|k1, k2, c| {
            let a = kappa0 * match axis {
                Axis::X1 => k1,
                Axis::X2 => k2,
            } as f64;
            times_i(c, a)
        })
    }

    /// Periodic Laplacian, symbol `-κ₀²|k|²`.
    pub fn laplacian(&self) -> Self {
        let k2 = self.grid.kappa0 * self.grid.kappa0;
        self.map_modes(|a, b, c| c * (-k2 * (a * a + b * b) as f64))
    }

    /// Mean-free inverse Laplacian, symbol `-1/(κ₀²|k|²)` on `k ≠ 0`.
    pub fn inverse_laplacian(&self) -> Self {
        let k2 = self.grid.kappa0 * self.grid.kappa0;
        self.map_modes(|a, b, c| c / (-k2 * (a * a + b * b) as f64))
    }

    /// Riesz transform `R_i`, symbol `ik_i/|k|`.
    pub fn riesz(&self, axis: Axis) -> Self {
        self.map_modes(|k1, k2, c| {
            let kmag = ((k1 * k1 + k2 * k2) as f64).sqrt();
            let ki = match axis {
                Axis::X1 => k1,
                Axis::X2 => k2,
            } as f64;
            times_i(c, ki / kmag)
        })
    }

    pub fn scale(&self, a: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * a).collect();
        Self::from_coeffs_unchecked(&self.grid, coeffs)
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        debug_assert!(self.grid.same_as(&other.grid));
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// `L²` inner product `|Ω| Σ Re(f̂ conj ĥ)`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert!(self.grid.same_as(&other.grid));
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.area()
    }

    /// `Σ |k|^(2p) |f̂(k)|²` with integer `|k|²` weights (no κ₀, no area).
    pub(crate) fn moment(&self, p: u32) -> f64 {
        let g = &self.grid;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (g.ksq(i) as f64).powi(p as i32) * c.norm_sqr())
            .sum()
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.moment(0) * self.grid.area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    /// Homogeneous `ℍ¹` seminorm squared, `|Ω| Σ κ₀²|k|² |f̂|²`.
    pub fn norm_h1_sq(&self) -> f64 {
        let k2 = self.grid.kappa0 * self.grid.kappa0;
        k2 * self.moment(1) * self.grid.area()
    }

    pub fn norm_h1(&self) -> f64 {
        self.norm_h1_sq().sqrt()
    }

    /// `ℍˢ` norm with weights `(κ₀²|k|²)^s`.
    pub fn norm_hs(&self, s: f64) -> f64 {
        let g = &self.grid;
        let k2 = g.kappa0 * g.kappa0;
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .map(|(i, c)| (k2 * g.ksq(i) as f64).powf(s) * c.norm_sqr())
            .sum();
        (sum * g.area()).sqrt()
    }
}

#[inline]
fn times_i(c: Complex64, a: f64) -> Complex64 {
    Complex64::new(-a * c.im, a * c.re)
}

impl Add for &SpectralScalar {
    type Output = SpectralScalar;
    fn add(self, rhs: Self) -> SpectralScalar {
        let mut out = self.clone();
        out.add_scaled(1.0, rhs);
        out
    }
}

impl Sub for &SpectralScalar {
    type Output = SpectralScalar;
    fn sub(self, rhs: Self) -> SpectralScalar {
        let mut out = self.clone();
        out.add_scaled(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SpectralScalar {
    type Output = SpectralScalar;
    fn mul(self, rhs: f64) -> SpectralScalar {
        self.scale(rhs)
    }
}

impl Neg for &SpectralScalar {
    type Output = SpectralScalar;
    fn neg(self) -> SpectralScalar {
        self.scale(-1.0)
    }
}

/// Two-component field; velocities are expected to be solenoidal.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    pub u1: SpectralScalar,
    pub u2: SpectralScalar,
}

impl SpectralVector {
    pub fn new(u1: SpectralScalar, u2: SpectralScalar) -> Result<Self> {
        if !u1.grid.same_as(&u2.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            u1: SpectralScalar::zeros(grid),
            u2: SpectralScalar::zeros(grid),
        }
    }

    /// Velocity `(∂₂ψ, -∂₁ψ)` of a stream function; solenoidal by construction.
    pub fn from_stream_function(psi: &SpectralScalar) -> Self {
        Self {
            u1: psi.derivative(Axis::X2),
            u2: -&psi.derivative(Axis::X1),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.u1.grid
    }

    pub fn component(&self, axis: Axis) -> &SpectralScalar {
        match axis {
            Axis::X1 => &self.u1,
            Axis::X2 => &self.u2,
        }
    }

    /// `max |k·v̂(k)| / max |k||v̂(k)|`; zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let g = self.grid();
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for i in 0..g.len() {
            let (k1, k2) = g.wavenumber(i);
            let (a, b) = (self.u1.coeffs[i], self.u2.coeffs[i]);
            let div = a * k1 as f64 + b * k2 as f64;
            num = num.max(div.norm());
            den = den.max((g.ksq(i) as f64).sqrt() * (a.norm_sqr() + b.norm_sqr()).sqrt());
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn is_solenoidal(&self, tol: f64) -> bool {
        self.divergence_residual() <= tol
    }

    pub fn enforce_invariants(&mut self) {
        self.u1.enforce_invariants();
        self.u2.enforce_invariants();
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            u1: self.u1.scale(a),
            u2: self.u2.scale(a),
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        self.u1.add_scaled(a, &other.u1);
        self.u2.add_scaled(a, &other.u2);
    }

    /// Stokes operator `A = -Δ` (equal to `-P_σΔ` on periodic solenoidal fields).
    pub fn stokes(&self) -> Self {
        Self {
            u1: -&self.u1.laplacian(),
            u2: -&self.u2.laplacian(),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.u1.inner(&other.u1) + self.u2.inner(&other.u2)
    }

    pub(crate) fn moment(&self, p: u32) -> f64 {
        self.u1.moment(p) + self.u2.moment(p)
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.moment(0) * self.grid().area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().sqrt()
    }

    pub fn norm_h1_sq(&self) -> f64 {
        let k0 = self.grid().kappa0;
        k0 * k0 * self.moment(1) * self.grid().area()
    }

    pub fn norm_h1(&self) -> f64 {
        self.norm_h1_sq().sqrt()
    }

    pub fn norm_hs(&self, s: f64) -> f64 {
        (self.u1.norm_hs(s).powi(2) + self.u2.norm_hs(s).powi(2)).sqrt()
    }

    /// `‖Au‖²`, the palinstrophy.
    pub fn palinstrophy(&self) -> f64 {
        let k0 = self.grid().kappa0;
        k0.powi(4) * self.moment(2) * self.grid().area()
    }

    /// `λ = ‖u‖²_ℍ¹ / ‖u‖²`, computed so that `λ ≥ κ₀²` holds in floating
    /// point (integer weights `|k|² ≥ 1` on every non-zero mode).
    pub fn dirichlet_quotient(&self) -> Option<f64> {
        let m0 = self.moment(0);
        if m0 == 0.0 {
            return None;
        }
        let ratio = self.moment(1) / m0;
        let k0 = self.grid().kappa0;
        Some(k0 * k0 * ratio)
    }
}

impl Add for &SpectralVector {
    type Output = SpectralVector;
    fn add(self, rhs: Self) -> SpectralVector {
        SpectralVector {
            u1: &self.u1 + &rhs.u1,
            u2: &self.u2 + &rhs.u2,
        }
    }
}

impl Sub for &SpectralVector {
    type Output = SpectralVector;
    fn sub(self, rhs: Self) -> SpectralVector {
        SpectralVector {
            u1: &self.u1 - &rhs.u1,
            u2: &self.u2 - &rhs.u2,
        }
    }
}

impl Mul<f64> for &SpectralVector {
    type Output = SpectralVector;
    fn mul(self, rhs: f64) -> SpectralVector {
        self.scale(rhs)
    }
}

/// Leray–Helmholtz projection `v̂ - (k·v̂)k/|k|²`.
pub fn leray_project(v: &SpectralVector) -> SpectralVector {
    let g = v.grid();
    let len = g.len();
    let mut a = vec![ZERO; len];
    let mut b = vec![ZERO; len];
    for i in 0..len {
        if !g.retained[i] {
            continue;
        }
        // Integer symbols keep one-dimensional fields exactly solenoidal.
        let (k1, k2) = (g.kx[i], g.ky[i]);
        let ksq = (k1 * k1 + k2 * k2) as f64;
        let (p11, p12, p22) = ((k2 * k2) as f64, (-k1 * k2) as f64, (k1 * k1) as f64);
        let (x, y) = (v.u1.coeffs[i], v.u2.coeffs[i]);
        a[i] = (x * p11 + y * p12) / ksq;
        b[i] = (x * p12 + y * p22) / ksq;
    }
    SpectralVector {
        u1: SpectralScalar::from_coeffs_unchecked(g, a),
        u2: SpectralScalar::from_coeffs_unchecked(g, b),
    }
}

/// Solenoidal part of the buoyancy force `(0, gθ)`, evaluated mode by mode
/// as `(-g∂₁∂₂Δ⁻¹θ, -g∂₁²Δ⁻¹θ)`.
pub fn buoyancy_projection(theta: &SpectralScalar, params: &PhysParams) -> SpectralVector {
    let g = theta.grid();
    let len = g.len();
    let mut a = vec![ZERO; len];
    let mut b = vec![ZERO; len];
    for i in 0..len {
        if !g.retained[i] {
            continue;
        }
        let (k1, k2) = (g.kx[i], g.ky[i]);
        let c = theta.coeffs[i] * (params.g / (k1 * k1 + k2 * k2) as f64);
        a[i] = c * (-k1 * k2) as f64;
        b[i] = c * (k1 * k1) as f64;
    }
    SpectralVector {
        u1: SpectralScalar::from_coeffs_unchecked(g, a),
        u2: SpectralScalar::from_coeffs_unchecked(g, b),
    }
}

/// Pseudospectral product `f·h`: returns the dealiased mean-free part and the
/// mean it carried.
pub fn dealiased_product(f: &SpectralScalar, h: &SpectralScalar) -> Result<(SpectralScalar, f64)> {
    if !f.grid.same_as(&h.grid) {
        return Err(Error::GridMismatch);
    }
    let a = f.to_physical();
    let b = h.to_physical();
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    SpectralScalar::from_physical_with_mean(&prod, &f.grid)
}

/// Computes `u·∇f` for each field in `fields`, sharing the velocity transforms.
/// The velocity is not checked for solenoidality here.
pub(crate) fn transport_terms(u: &SpectralVector, fields: &[&SpectralScalar]) -> Vec<SpectralScalar> {
    let g = u.grid();
    let u1 = u.u1.to_physical();
    let u2 = u.u2.to_physical();
    fields
        .iter()
        .map(|f| {
            let d1 = f.derivative(Axis::X1).to_physical();
            let d2 = f.derivative(Axis::X2).to_physical();
            let prod: Vec<f64> = (0..g.len()).map(|i| u1[i] * d1[i] + u2[i] * d2[i]).collect();
            let mut coeffs = g.forward_raw(&prod);
            coeffs[0] = ZERO;
            let mut out = SpectralScalar::from_coeffs_unchecked(g, coeffs);
            out.enforce_invariants();
            out
        })
        .collect()
}

pub(crate) fn check_solenoidal(u: &SpectralVector) -> Result<()> {
    let residual = u.divergence_residual();
    if residual > SOLENOIDAL_TOL {
        return Err(Error::NotSolenoidal { residual });
    }
    Ok(())
}

/// Scalar transport term `u·∇f` (no projection). Requires solenoidal `u`.
pub fn advection(u: &SpectralVector, f: &SpectralScalar) -> Result<SpectralScalar> {
    if !u.grid().same_as(&f.grid) {
        return Err(Error::GridMismatch);
    }
    check_solenoidal(u)?;
    Ok(transport_terms(u, &[f]).pop().expect("one field in, one out"))
}

/// Bilinear term `B(u, u) = P_σ((u·∇)u)`.
pub fn advection_vec(u: &SpectralVector) -> Result<SpectralVector> {
    check_solenoidal(u)?;
    let mut t = transport_terms(u, &[&u.u1, &u.u2]);
    let b = t.pop().expect("two terms");
    let a = t.pop().expect("two terms");
    Ok(leray_project(&SpectralVector { u1: a, u2: b }))
}
