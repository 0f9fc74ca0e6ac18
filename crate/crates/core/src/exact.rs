//! Closed-form solution families: vertical and horizontal shears with frozen
//! temperature, diagonal plane waves, and the eigenfunction steady states.
//!
//! Everything is evaluated mode by mode, so the results are accurate to
//! round-off for any `t`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, PhysParams, SpectralScalar, SpectralVector};

/// Coordinate a one-dimensional profile depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileAxis {
    X1,
    X2,
    /// The plane-wave phase `z = k·x`.
    Z,
}

impl ProfileAxis {
    pub fn label(self) -> &'static str {
        match self {
            ProfileAxis::X1 => "x1",
            ProfileAxis::X2 => "x2",
            ProfileAxis::Z => "z",
        }
    }
}

impl fmt::Display for ProfileAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean-free real periodic function of one variable,
/// `f(s) = Σ_{m≥1} 2 Re(ĉ_m e^{iκ₀ms})`.
///
/// `modes[j]` holds `ĉ_{j+1}`; the negative modes are implied by symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile1D {
    pub axis: ProfileAxis,
    pub modes: Vec<Complex64>,
}

impl Profile1D {
    pub fn new(axis: ProfileAxis, modes: Vec<Complex64>) -> Self {
        Self { axis, modes }
    }

    pub fn zero(axis: ProfileAxis) -> Self {
        Self::new(axis, Vec::new())
    }

    /// `amp · cos(mκ₀s)`.
    pub fn cos(axis: ProfileAxis, m: usize, amp: f64) -> Self {
        Self::zero(axis).plus_mode(m, Complex64::new(amp / 2.0, 0.0))
    }

    /// `amp · sin(mκ₀s)`.
    pub fn sin(axis: ProfileAxis, m: usize, amp: f64) -> Self {
        Self::zero(axis).plus_mode(m, Complex64::new(0.0, -amp / 2.0))
    }

    /// Adds `c` to `ĉ_m`. `m = 0` is ignored (profiles are mean-free).
    pub fn plus_mode(mut self, m: usize, c: Complex64) -> Self {
        if m == 0 {
            return self;
        }
        if self.modes.len() < m {
            self.modes.resize(m, Complex64::new(0.0, 0.0));
        }
        self.modes[m - 1] += c;
        self
    }

    pub fn coeff(&self, m: usize) -> Complex64 {
        if m == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.modes.get(m - 1).copied().unwrap_or_default()
    }

    /// Highest mode with a non-zero coefficient, or 0.
    pub fn max_mode(&self) -> usize {
        self.modes.iter().rposition(|c| c.norm() != 0.0).map_or(0, |j| j + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.max_mode() == 0
    }

    /// Point value at `s` for a box of side `box_len`.
    pub fn eval(&self, s: f64, box_len: f64) -> f64 {
        let k0 = 2.0 * std::f64::consts::PI / box_len;
        self.modes
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let ph = k0 * (j + 1) as f64 * s;
                2.0 * (c.re * ph.cos() - c.im * ph.sin())
            })
            .sum()
    }

    /// Applies `c_m ↦ w(m, c_m)` to every mode.
    pub fn map(&self, w: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let modes = self.modes.iter().enumerate().map(|(j, &c)| w(j + 1, c)).collect();
        Self::new(self.axis, modes)
    }

    /// Second derivative in `s` for a box of side `box_len`.
    pub fn second_derivative(&self, box_len: f64) -> Self {
        let k0 = 2.0 * std::f64::consts::PI / box_len;
        self.map(|m, c| c * -(k0 * m as f64).powi(2))
    }

    fn expect_axis(&self, axis: ProfileAxis) -> Result<()> {
        if self.axis != axis {
            return Err(Error::AxisMismatch {
                expected: axis.label(),
                found: self.axis.label(),
            });
        }
        Ok(())
    }

    /// Lays the profile along the lattice direction `dir`: mode `m` lands on
    /// wavenumber `m·dir`.
    pub fn embed(&self, grid: &Arc<Grid>, dir: (i64, i64)) -> Result<SpectralScalar> {
        let mut out = SpectralScalar::zeros(grid);
        for (j, &c) in self.modes.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let m = (j + 1) as i64;
            out.set_mode(m * dir.0, m * dir.1, c)
                .map_err(|_| Error::Unresolvable {
                    index: m * dir.0.abs().max(dir.1.abs()),
                    cut: grid.dealias_cut(),
                })?;
        }
        Ok(out)
    }
}

/// Lattice direction `k` of a plane wave; requires `k₁ + k₂ = 0`, `k ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct WaveVector {
    k1: i64,
    k2: i64,
}

impl WaveVector {
    pub fn new(k1: i64, k2: i64) -> Result<Self> {
        if k1 + k2 != 0 || (k1, k2) == (0, 0) {
            return Err(Error::InvalidWaveVector { k1, k2 });
        }
        Ok(Self { k1, k2 })
    }

    pub fn k1(&self) -> i64 {
        self.k1
    }

    pub fn k2(&self) -> i64 {
        self.k2
    }

    /// `|k|²`.
    pub fn norm_sq(&self) -> i64 {
        self.k1 * self.k1 + self.k2 * self.k2
    }
}

impl TryFrom<(i64, i64)> for WaveVector {
    type Error = Error;

    fn try_from((k1, k2): (i64, i64)) -> Result<Self> {
        Self::new(k1, k2)
    }
}

impl From<WaveVector> for (i64, i64) {
    fn from(k: WaveVector) -> Self {
        (k.k1, k.k2)
    }
}

fn check_box(grid: &Grid, params: &PhysParams) -> Result<()> {
    params.validate()?;
    if (grid.box_len() - params.box_len).abs() > 1e-12 * grid.box_len() {
        return Err(Error::InvalidParams(format!(
            "box_len {} differs from the grid's {}",
            params.box_len,
            grid.box_len()
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!("t must be ≥ 0, got {t}")));
    }
    Ok(())
}

/// Forced heat equation per mode: `e^{-rt} a + (1 - e^{-rt}) s`, with `rate(m)`
/// and steady coefficient `s_m` supplied by the caller.
fn relax(a: &Profile1D, steady: &Profile1D, rate: impl Fn(usize) -> f64, t: f64) -> Profile1D {
    let len = a.modes.len().max(steady.modes.len());
    let modes = (1..=len)
        .map(|m| {
            let e = (-rate(m) * t).exp();
            a.coeff(m) * e + steady.coeff(m) * (1.0 - e)
        })
        .collect();
    Profile1D::new(a.axis, modes)
}

/// Vertical shear `u = (a(x₂, t), 0)` over a frozen `θ = θ^V(x₂)`; returns
/// `(u, θ, p)` with hydrostatic `∂₂p = gθ`.
pub fn vertical_solution(
    grid: &Arc<Grid>,
    a_v: &Profile1D,
    theta_v: &Profile1D,
    params: &PhysParams,
    t: f64,
) -> Result<(SpectralVector, SpectralScalar, SpectralScalar)> {
    a_v.expect_axis(ProfileAxis::X2)?;
    theta_v.expect_axis(ProfileAxis::X2)?;
    check_box(grid, params)?;
    check_time(t)?;
    let k0 = grid.kappa0();
    let a = if t == 0.0 {
        a_v.clone()
    } else {
        a_v.map(|m, c| c * (-params.nu * (k0 * m as f64).powi(2) * t).exp())
    };
    let u1 = a.embed(grid, (0, 1))?;
    let theta = theta_v.embed(grid, (0, 1))?;
    let p = theta_v
        .map(|m, c| c * params.g / Complex64::new(0.0, k0 * m as f64))
        .embed(grid, (0, 1))?;
    Ok((SpectralVector::new(u1, SpectralScalar::zeros(grid))?, theta, p))
}

/// Horizontal shear `u = (0, a(x₁, t))` driven by a frozen `θ = θ^H(x₁)`;
/// returns `(u, θ, p)` with `p = 0`.
pub fn horizontal_solution(
    grid: &Arc<Grid>,
    a_h: &Profile1D,
    theta_h: &Profile1D,
    params: &PhysParams,
    t: f64,
) -> Result<(SpectralVector, SpectralScalar, SpectralScalar)> {
    a_h.expect_axis(ProfileAxis::X1)?;
    theta_h.expect_axis(ProfileAxis::X1)?;
    check_box(grid, params)?;
    check_time(t)?;
    let k0 = grid.kappa0();
    let a = if t == 0.0 {
        a_h.clone()
    } else {
        let steady = horizontal_steady_profile(theta_h, params, k0);
        relax(a_h, &steady, |m| params.nu * (k0 * m as f64).powi(2), t)
    };
    let u2 = a.embed(grid, (1, 0))?;
    let theta = theta_h.embed(grid, (1, 0))?;
    Ok((
        SpectralVector::new(SpectralScalar::zeros(grid), u2)?,
        theta,
        SpectralScalar::zeros(grid),
    ))
}

fn horizontal_steady_profile(theta_h: &Profile1D, params: &PhysParams, k0: f64) -> Profile1D {
    theta_h.map(|m, c| c * (params.g / (params.nu * (k0 * m as f64).powi(2))))
}

/// Mean-free solution of `νu₂'' = -gθ^H` as the velocity `(0, u₂(x₁))`.
pub fn horizontal_steady(
    grid: &Arc<Grid>,
    theta_h: &Profile1D,
    params: &PhysParams,
) -> Result<SpectralVector> {
    theta_h.expect_axis(ProfileAxis::X1)?;
    check_box(grid, params)?;
    let u2 = horizontal_steady_profile(theta_h, params, grid.kappa0()).embed(grid, (1, 0))?;
    SpectralVector::new(SpectralScalar::zeros(grid), u2)
}

/// Steady plane-wave profile: `f_zz = -(g/(2ν|k|²)) h`.
pub fn plane_wave_steady(h: &Profile1D, k: WaveVector, params: &PhysParams) -> Result<Profile1D> {
    h.expect_axis(ProfileAxis::Z)?;
    params.validate()?;
    let k0 = params.kappa0();
    let ksq = k.norm_sq() as f64;
    Ok(h.map(|m, c| c * (params.g / (2.0 * params.nu * ksq * (k0 * m as f64).powi(2)))))
}

/// Plane wave `u = (f(k·x, t), f(k·x, t))`, `θ = h(k·x)`, with `f` solving
/// `f_t = ν|k|² f_zz + gh/2` from `f0`; returns `(u, θ, p)` where
/// `p = -(g/(2k₁)) H(k·x)` and `H' = h`.
pub fn plane_wave_solution(
    grid: &Arc<Grid>,
    h: &Profile1D,
    k: WaveVector,
    f0: &Profile1D,
    params: &PhysParams,
    t: f64,
) -> Result<(SpectralVector, SpectralScalar, SpectralScalar)> {
    h.expect_axis(ProfileAxis::Z)?;
    f0.expect_axis(ProfileAxis::Z)?;
    check_box(grid, params)?;
    check_time(t)?;
    let k0 = grid.kappa0();
    let ksq = k.norm_sq() as f64;
    let f = if t == 0.0 {
        f0.clone()
    } else {
        let steady = plane_wave_steady(h, k, params)?;
        relax(f0, &steady, |m| params.nu * ksq * (k0 * m as f64).powi(2), t)
    };
    let dir = (k.k1(), k.k2());
    let fu = f.embed(grid, dir)?;
    let theta = h.embed(grid, dir)?;
    let scale = -params.g / (2.0 * k.k1() as f64);
    let p = h
        .map(|m, c| c * scale / Complex64::new(0.0, k0 * m as f64))
        .embed(grid, dir)?;
    Ok((SpectralVector::new(fu.clone(), fu)?, theta, p))
}

/// Steady state `u = (0, a cos(nκ₀x₁))`, `θ = ν(nκ₀)²/g · u₂`.
pub fn eigen_steady_state(
    grid: &Arc<Grid>,
    n_mode: usize,
    amplitude: f64,
    params: &PhysParams,
) -> Result<(SpectralVector, SpectralScalar)> {
    check_box(grid, params)?;
    if n_mode == 0 {
        return Err(Error::InvalidInput("n_mode must be ≥ 1".into()));
    }
    if params.g == 0.0 {
        return Err(Error::InvalidParams(
            "g must be non-zero for an eigenfunction steady state".into(),
        ));
    }
    if n_mode > grid.dealias_cut() {
        return Err(Error::Unresolvable {
            index: n_mode as i64,
            cut: grid.dealias_cut(),
        });
    }
    let u2 = Profile1D::cos(ProfileAxis::X1, n_mode, amplitude);
    let ratio = params.nu * (grid.kappa0() * n_mode as f64).powi(2) / params.g;
    let theta = u2.map(|_, c| c * ratio);
    Ok((
        SpectralVector::new(SpectralScalar::zeros(grid), u2.embed(grid, (1, 0))?)?,
        theta.embed(grid, (1, 0))?,
    ))
}

/// Which closed-form family to instantiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Vertical,
    Horizontal,
    PlaneWave,
    EigenSteady,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Vertical,
        Family::Horizontal,
        Family::PlaneWave,
        Family::EigenSteady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Vertical => "vertical",
            Family::Horizontal => "horizontal",
            Family::PlaneWave => "plane_wave",
            Family::EigenSteady => "eigen_steady",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family {s:?}")))
    }
}

/// Single-mode member of a family: velocity profile `a·sin(m κ₀ s)` and
/// temperature profile `b·cos(m_θ κ₀ s)` along the family's coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: Family,
    #[serde(default = "one_usize")]
    pub velocity_mode: usize,
    #[serde(default = "one_f64")]
    pub velocity_amplitude: f64,
    #[serde(default = "one_usize")]
    pub theta_mode: usize,
    #[serde(default = "one_f64")]
    pub theta_amplitude: f64,
    #[serde(default = "default_wave_vector")]
    pub wave_vector: WaveVector,
    /// Start from the family's steady state instead of the velocity profile.
    #[serde(default)]
    pub steady: bool,
}

fn one_usize() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_wave_vector() -> WaveVector {
    WaveVector { k1: 1, k2: -1 }
}

impl FamilySpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            velocity_mode: 1,
            velocity_amplitude: 1.0,
            theta_mode: 1,
            theta_amplitude: 1.0,
            wave_vector: default_wave_vector(),
            steady: false,
        }
    }

    fn profiles(&self, axis: ProfileAxis) -> (Profile1D, Profile1D) {
        (
            Profile1D::sin(axis, self.velocity_mode, self.velocity_amplitude),
            Profile1D::cos(axis, self.theta_mode, self.theta_amplitude),
        )
    }

    /// Closed-form `(u, θ)` at time `t`, as a state stamped with `t`.
    pub fn state_at(&self, grid: &Arc<Grid>, params: &PhysParams, t: f64) -> Result<crate::dynamics::SimState> {
        let (u, theta) = match self.family {
            Family::Vertical => {
                let (a, th) = self.profiles(ProfileAxis::X2);
                let a = if self.steady { Profile1D::zero(ProfileAxis::X2) } else { a };
                let (u, theta, _) = vertical_solution(grid, &a, &th, params, t)?;
                (u, theta)
            }
            Family::Horizontal => {
                let (a, th) = self.profiles(ProfileAxis::X1);
                let a = if self.steady {
                    horizontal_steady_profile(&th, params, grid.kappa0())
                } else {
                    a
                };
                let (u, theta, _) = horizontal_solution(grid, &a, &th, params, t)?;
                (u, theta)
            }
            Family::PlaneWave => {
                let (f0, h) = self.profiles(ProfileAxis::Z);
                let f0 = if self.steady { plane_wave_steady(&h, self.wave_vector, params)? } else { f0 };
                let (u, theta, _) = plane_wave_solution(grid, &h, self.wave_vector, &f0, params, t)?;
                (u, theta)
            }
            Family::EigenSteady => eigen_steady_state(grid, self.velocity_mode, self.velocity_amplitude, params)?,
        };
        crate::dynamics::SimState::new(u, theta, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{full_velocity_tendency, recover_pressure, rhs_theta, SimState};
    use crate::spectral::Axis;
    use std::f64::consts::PI;

    fn setup() -> (Arc<Grid>, PhysParams) {
        (Grid::new(32, 2.0 * PI).unwrap(), PhysParams::new(0.2, 1.5, 2.0 * PI).unwrap())
    }

    fn state(u: SpectralVector, theta: SpectralScalar) -> SimState {
        SimState::new(u, theta, 0.0).unwrap()
    }

    #[test]
    fn profile_values() {
        let c = Profile1D::cos(ProfileAxis::X1, 2, 3.0);
        let s = Profile1D::sin(ProfileAxis::X1, 1, 1.0);
        for &x in &[0.0, 0.3, 1.7] {
            assert!((c.eval(x, 2.0 * PI) - 3.0 * (2.0 * x).cos()).abs() < 1e-14);
            assert!((s.eval(x, 2.0 * PI) - x.sin()).abs() < 1e-14);
        }
        assert_eq!(c.max_mode(), 2);
        assert!(Profile1D::zero(ProfileAxis::Z).is_zero());
    }

    #[test]
    fn wave_vector_validation() {
        assert!(WaveVector::new(1, -1).is_ok());
        assert!(matches!(WaveVector::new(1, 1), Err(Error::InvalidWaveVector { .. })));
        assert!(matches!(WaveVector::new(0, 0), Err(Error::InvalidWaveVector { .. })));
        assert_eq!(WaveVector::new(-2, 2).unwrap().norm_sq(), 8);
    }

    #[test]
    fn vertical_family() {
        let (g, p) = setup();
        let a = Profile1D::sin(ProfileAxis::X2, 1, 1.0);
        let th = Profile1D::cos(ProfileAxis::X2, 2, 0.5);
        let (u0, t0, _) = vertical_solution(&g, &a, &th, &p, 0.0).unwrap();
        let a_phys = SpectralScalar::from_fn(&g, |_, x2| x2.sin()).unwrap();
        assert!((&u0.u1 - &a_phys).norm_l2() < 1e-14);
        assert_eq!(u0.u2.norm_l2(), 0.0);
        let (u, theta, pr) = vertical_solution(&g, &a, &th, &p, 1.3).unwrap();
        let expect = a_phys.scale((-0.2 * 1.3_f64).exp());
        assert!((&u.u1 - &expect).norm_l2() < 1e-14);
        assert_eq!(theta, t0);
        assert!((&pr.derivative(Axis::X2) - &theta.scale(1.5)).norm_l2() < 1e-13);
        let (late, _, _) = vertical_solution(&g, &a, &th, &p, 1e3).unwrap();
        assert!(late.norm_l2() < 1e-12);
        let wrong = Profile1D::sin(ProfileAxis::X1, 1, 1.0);
        assert!(matches!(
            vertical_solution(&g, &wrong, &th, &p, 0.0),
            Err(Error::AxisMismatch { .. })
        ));
    }

    #[test]
    fn vertical_residual_matches_decay() {
        let (g, p) = setup();
        let a = Profile1D::sin(ProfileAxis::X2, 1, 1.0).plus_mode(3, Complex64::new(0.1, 0.2));
        let th = Profile1D::cos(ProfileAxis::X2, 2, 0.5);
        let (u, theta, pr) = vertical_solution(&g, &a, &th, &p, 0.4).unwrap();
        let s = state(u.clone(), theta);
        let tend = full_velocity_tendency(&s, &p).unwrap();
        let expect = u.stokes().scale(-p.nu);
        assert!((&tend - &expect).norm_l2() < 1e-10);
        assert!(rhs_theta(&s).unwrap().norm_l2() < 1e-14);
        let rec = recover_pressure(&s, &p).unwrap();
        assert!((&rec - &pr).norm_l2() < 1e-12);
    }

    #[test]
    fn horizontal_family() {
        let (g, p) = setup();
        let th = Profile1D::cos(ProfileAxis::X1, 1, 1.0);
        let zero = Profile1D::zero(ProfileAxis::X1);
        let steady = horizontal_steady(&g, &th, &p).unwrap();
        let expect = SpectralScalar::from_fn(&g, |x1, _| 1.5 / 0.2 * x1.cos()).unwrap();
        assert!((&steady.u2 - &expect).norm_l2() < 1e-12);
        let (late, _, _) = horizontal_solution(&g, &zero, &th, &p, 500.0).unwrap();
        assert!((&late - &steady).norm_l2() < 1e-12);
        let a = Profile1D::sin(ProfileAxis::X1, 2, 0.7);
        let (u0, _, p0) = horizontal_solution(&g, &a, &th, &p, 0.0).unwrap();
        assert_eq!(u0.u2, a.embed(&g, (1, 0)).unwrap());
        assert_eq!(p0.norm_l2(), 0.0);
        assert!(horizontal_steady(&g, &zero, &p).unwrap().norm_l2() == 0.0);

        let s = state(steady, th.embed(&g, (1, 0)).unwrap());
        assert!(full_velocity_tendency(&s, &p).unwrap().norm_l2() < 1e-10);
        assert!(recover_pressure(&s, &p).unwrap().norm_l2() < 1e-12);
    }

    #[test]
    fn horizontal_pure_decay() {
        let (g, p) = setup();
        let a = Profile1D::sin(ProfileAxis::X1, 2, 0.7);
        let zero = Profile1D::zero(ProfileAxis::X1);
        let (u, _, _) = horizontal_solution(&g, &a, &zero, &p, 0.5).unwrap();
        let expect = a.embed(&g, (1, 0)).unwrap().scale((-0.2 * 4.0 * 0.5_f64).exp());
        assert!((&u.u2 - &expect).norm_l2() < 1e-14);
    }

    #[test]
    fn plane_wave_steady_profile() {
        let p = PhysParams::new(0.3, 2.0, 2.0 * PI).unwrap();
        let h = Profile1D::cos(ProfileAxis::Z, 1, 1.0);
        let k = WaveVector::new(1, -1).unwrap();
        let f = plane_wave_steady(&h, k, &p).unwrap();
        assert!((f.coeff(1).re - 2.0 / (4.0 * 0.3) * 0.5).abs() < 1e-15);
        let lhs = f.second_derivative(2.0 * PI);
        let rhs = h.map(|_, c| c * -(2.0 / (2.0 * 0.3 * 2.0)));
        assert!((lhs.coeff(1) - rhs.coeff(1)).norm() < 1e-12);
        assert!(plane_wave_steady(&Profile1D::zero(ProfileAxis::Z), k, &p).unwrap().is_zero());
    }

    #[test]
    fn plane_wave_family() {
        let (g, p) = setup();
        let k = WaveVector::new(2, -2).unwrap();
        let h = Profile1D::cos(ProfileAxis::Z, 1, 1.0).plus_mode(2, Complex64::new(0.1, -0.3));
        let fs = plane_wave_steady(&h, k, &p).unwrap();
        let (a, _, _) = plane_wave_solution(&g, &h, k, &fs, &p, 0.0).unwrap();
        let (b, _, _) = plane_wave_solution(&g, &h, k, &fs, &p, 1.0).unwrap();
        assert!((&a - &b).norm_l2() < 1e-13);

        let f0 = Profile1D::sin(ProfileAxis::Z, 1, 1.0);
        let (u, theta, pr) = plane_wave_solution(&g, &h, k, &f0, &p, 0.3).unwrap();
        assert!(u.divergence_residual() == 0.0);
        let s = state(u.clone(), theta.clone());
        let tend = full_velocity_tendency(&s, &p).unwrap();
        // f_t = -8ν κ₀² m² (f̂ - f̂_steady) per mode, identical in both components.
        let fz = plane_wave_solution(&g, &h, k, &fs, &p, 0.0).unwrap().0;
        let expect = (&u - &fz).stokes().scale(-p.nu);
        assert!((&tend - &expect).norm_l2() < 1e-10);
        let rec = recover_pressure(&s, &p).unwrap();
        assert!((&rec - &pr).norm_l2() < 1e-10);
        let half = theta.scale(p.g / 2.0);
        assert!((&pr.derivative(Axis::X1) + &half).norm_l2() < 1e-10);
        assert!((&pr.derivative(Axis::X2) - &half).norm_l2() < 1e-10);
    }

    #[test]
    fn plane_wave_unforced_decay() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.2, 0.0, 2.0 * PI).unwrap();
        let k = WaveVector::new(1, -1).unwrap();
        let f0 = Profile1D::sin(ProfileAxis::Z, 1, 1.0);
        let h = Profile1D::zero(ProfileAxis::Z);
        let (u0, _, _) = plane_wave_solution(&g, &h, k, &f0, &p, 0.0).unwrap();
        let (u, _, _) = plane_wave_solution(&g, &h, k, &f0, &p, 2.0).unwrap();
        let ratio = u.norm_l2() / u0.norm_l2();
        assert!((ratio - (-0.2 * 2.0 * 2.0_f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn unresolvable_modes() {
        let (g, p) = setup();
        let cut = g.dealias_cut();
        assert!(matches!(
            eigen_steady_state(&g, cut + 1, 1.0, &p),
            Err(Error::Unresolvable { .. })
        ));
        let h = Profile1D::cos(ProfileAxis::Z, 6, 1.0);
        let k = WaveVector::new(2, -2).unwrap();
        assert!(matches!(
            plane_wave_solution(&g, &h, k, &h, &p, 0.0),
            Err(Error::Unresolvable { index: 12, .. })
        ));
    }

    #[test]
    fn eigen_state() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let p = PhysParams::new(1.0, 1.0, 2.0 * PI).unwrap();
        let (u, theta) = eigen_steady_state(&g, 1, 1.0, &p).unwrap();
        let expect = SpectralScalar::from_fn(&g, |x1, _| x1.cos()).unwrap();
        assert!((&theta - &expect).norm_l2() < 1e-14);
        let s = state(u.clone(), theta.clone());
        assert!(full_velocity_tendency(&s, &p).unwrap().norm_l2() < 1e-12);

        let p2 = PhysParams::new(0.1, 3.0, 2.0 * PI).unwrap();
        let (u, theta) = eigen_steady_state(&g, 3, 0.4, &p2).unwrap();
        let chi = u.norm_h1_sq() / u.norm_l2();
        let parabola = p2.g * theta.norm_l2() / p2.nu;
        assert!((chi - parabola).abs() < 1e-10 * parabola);
        let no_g = PhysParams::new(0.1, 0.0, 2.0 * PI).unwrap();
        assert!(matches!(eigen_steady_state(&g, 1, 1.0, &no_g), Err(Error::InvalidParams(_))));
    }
}
