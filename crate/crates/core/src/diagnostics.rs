//! Norms, Grashof numbers, transport invariants, energy–enstrophy quotients,
//! spectra and the pair functionals used in the backward-uniqueness check.

use serde::{Deserialize, Serialize};

use crate::dynamics::{SimState, Sink, StepInfo};
use crate::error::{Error, Result};
use crate::spectral::{
    buoyancy_projection, transport_terms, PhysParams, SpectralScalar, SpectralVector,
};

/// Velocities below this L² norm have no meaningful χ or λ.
pub const ZERO_VELOCITY: f64 = 1e-14;

/// Pair separations with `‖ũ‖² + g²‖θ̃‖²` below this count as coincident.
pub const IDENTICAL_STATES: f64 = 1e-28;

/// `G = g‖θ₀‖/(ν²κ₀²)`.
pub fn grashof(theta0_l2: f64, params: &PhysParams) -> f64 {
    let k0 = params.kappa0();
    params.g * theta0_l2 / (params.nu * params.nu * k0 * k0)
}

/// `G_σ = ‖P_σ(gθ)‖/(ν²κ₀²)`.
pub fn grashof_sigma(state: &SimState, params: &PhysParams) -> f64 {
    let k0 = state.grid().kappa0();
    buoyancy_projection(&state.theta, params).norm_l2() / (params.nu * params.nu * k0 * k0)
}

/// Tail-max estimate of `limsup G_σ`, with the window it was taken over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveGrashof {
    pub value: f64,
    pub window_start: f64,
    pub window_end: f64,
}

/// Max of `G_σ` over samples with `t ≥ t_last - tail_fraction·(t_last - t_first)`.
pub fn effective_grashof(series: &[(f64, f64)], tail_fraction: f64) -> Result<EffectiveGrashof> {
    let (first, last) = match (series.first(), series.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::EmptySeries),
    };
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "tail_fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let start = last - tail_fraction * (last - first);
    let value = series
        .iter()
        .filter(|(t, _)| *t >= start)
        .map(|&(_, g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(EffectiveGrashof {
        value,
        window_start: start,
        window_end: last,
    })
}

/// Empirical distribution function of grid values.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFunction {
    pub thresholds: Vec<f64>,
    pub cdf: Vec<f64>,
    sorted: Vec<f64>,
}

impl DistributionFunction {
    /// CDF of `values` tabulated at `n_thresholds` equally spaced levels
    /// spanning `[min, max]`.
    pub fn from_values(values: &[f64], n_thresholds: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample value".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        let thresholds: Vec<f64> = match n_thresholds {
            0 => Vec::new(),
            1 => vec![hi],
            m => (0..m)
                .map(|i| if i + 1 == m { hi } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 })
                .collect(),
        };
        let mut out = Self {
            thresholds,
            cdf: Vec::new(),
            sorted,
        };
        out.cdf = out.thresholds.iter().map(|&r| out.eval(r)).collect();
        Ok(out)
    }

    /// `F(ρ)`: fraction of samples `≤ ρ`.
    pub fn eval(&self, rho: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= rho) as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Kolmogorov–Smirnov distance `sup_ρ |F(ρ) - G(ρ)|`, exact over the
    /// union of both sample sets.
    pub fn ks_distance(&self, other: &DistributionFunction) -> f64 {
        self.sorted
            .iter()
            .chain(&other.sorted)
            .map(|&r| (self.eval(r) - other.eval(r)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn distribution_function(theta: &SpectralScalar, n_thresholds: usize) -> Result<DistributionFunction> {
    DistributionFunction::from_values(&theta.to_physical(), n_thresholds)
}

/// `(dx² Σ|f|^p)^{1/p}` on grid values, with `p = ∞` the grid max of `|f|`.
pub fn lp_norm_values(values: &[f64], cell_area: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let s: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (s * cell_area).powf(1.0 / p)
}

/// `‖θ‖_{L^p}` for each requested `p ∈ [1, ∞]`.
pub fn lp_norms(theta: &SpectralScalar, ps: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(&bad) = ps.iter().find(|&&p| !(p >= 1.0)) {
        return Err(Error::InvalidInput(format!("p must lie in [1, ∞], got {bad}")));
    }
    let values = theta.to_physical();
    let dx = theta.grid().dx();
    Ok(ps.iter().map(|&p| (p, lp_norm_values(&values, dx * dx, p))).collect())
}

/// `‖θ‖_{L^p}` for `p = 1, 2, 4, ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpNorms {
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    pub linf: f64,
}

impl LpNorms {
    pub fn of(theta: &SpectralScalar) -> Self {
        let values = theta.to_physical();
        let da = theta.grid().dx() * theta.grid().dx();
        Self {
            l1: lp_norm_values(&values, da, 1.0),
            l2: lp_norm_values(&values, da, 2.0),
            l4: lp_norm_values(&values, da, 4.0),
            linf: lp_norm_values(&values, da, f64::INFINITY),
        }
    }
}

/// `χ = ‖u‖²_ℍ¹/‖u‖` and `λ = ‖u‖²_ℍ¹/‖u‖²`; `None` when `‖u‖ ≤ 1e-14`.
pub fn chi_lambda(u: &SpectralVector) -> Option<(f64, f64)> {
    let norm = u.norm_l2();
    if norm <= ZERO_VELOCITY {
        return None;
    }
    let lambda = u.dirichlet_quotient()?;
    Some((u.norm_h1_sq() / norm, lambda))
}

/// Membership of `u` in `{κ₀²‖u‖² ≤ ‖u‖²_ℍ¹ ≤ (g‖θ₀‖/ν)‖u‖}`; the parabola
/// side is allowed a relative slack `tol`.
pub fn lambda_region_check(u: &SpectralVector, theta0_l2: f64, params: &PhysParams, tol: f64) -> bool {
    let norm = u.norm_l2();
    if norm == 0.0 {
        return true;
    }
    let poincare = u.dirichlet_quotient().is_some_and(|l| l >= u.grid().kappa0().powi(2));
    let bound = params.g * theta0_l2 / params.nu * norm;
    poincare && u.norm_h1_sq() <= bound * (1.0 + tol)
}

/// Dyadic shell energies `e_{κ,2κ}` and the enstrophy-dissipation scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySpectrum {
    /// Lower shell edges `κ₀·2^j`; shell `j` covers `[κ_j, 2κ_j)`.
    pub shell_edges: Vec<f64>,
    pub shell_energy: Vec<f64>,
    /// `η = 2ν‖Au‖²/|Ω|`.
    pub eta: f64,
    /// `(η/ν³)^{1/6}`.
    pub kappa_eta: f64,
}

impl EnergySpectrum {
    /// Least-squares slope of `log e` against `log κ` over shells `range`,
    /// skipping empty shells.
    pub fn log_slope(&self, range: std::ops::Range<usize>) -> Option<f64> {
        let (x, y): (Vec<f64>, Vec<f64>) = range
            .filter(|&j| j < self.shell_energy.len() && self.shell_energy[j] > 0.0)
            .map(|j| (self.shell_edges[j].ln(), self.shell_energy[j].ln()))
            .unzip();
        least_squares_slope(&x, &y)
    }
}

pub fn energy_spectrum(state: &SimState, params: &PhysParams) -> EnergySpectrum {
    let u = &state.u;
    let g = u.grid();
    let area = g.area();
    let cut = g.dealias_cut() as i64;
    let max_ksq = 2 * cut * cut;
    let mut shells = 0usize;
    while 4i64.pow(shells as u32) <= max_ksq {
        shells += 1;
    }
    let mut energy = vec![0.0; shells];
    for i in 0..g.len() {
        if !g.is_retained(i) {
            continue;
        }
        let ksq = g.ksq(i);
        // shell j holds 4^j ≤ |k|² < 4^{j+1}
        let j = (63 - ksq.leading_zeros() as usize) / 2;
        energy[j] += (u.u1.coeffs()[i].norm_sqr() + u.u2.coeffs()[i].norm_sqr()) * area;
    }
    let k0 = g.kappa0();
    let eta = 2.0 * params.nu * u.palinstrophy() / area;
    EnergySpectrum {
        shell_edges: (0..shells).map(|j| k0 * 2f64.powi(j as i32)).collect(),
        shell_energy: energy,
        eta,
        kappa_eta: (eta / params.nu.powi(3)).powf(1.0 / 6.0),
    }
}

/// Ordinary least-squares slope; `None` with fewer than two distinct `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Absolute spatial means of `u₁`, `u₂`, `θ`.
pub fn mean_check(state: &SimState) -> (f64, f64, f64) {
    (
        state.u.u1.mean().abs(),
        state.u.u2.mean().abs(),
        state.theta.mean().abs(),
    )
}

/// Quantities entering the logarithmic separation estimate for a pair
/// `A`, `B`, with `ũ = u_A - u_B`, `θ̃ = θ_A - θ_B`, `D = ‖ũ‖² + g²‖θ̃‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerms {
    /// `-½ log D`.
    pub l: f64,
    /// `‖ũ‖²_ℍ¹ / D`.
    pub i: f64,
    /// `⟨(ũ·∇)u_B, ũ⟩ / D`.
    pub ii: f64,
    /// `g²⟨(ũ·∇)θ_B, θ̃⟩ / D`.
    pub iii: f64,
    /// `g⟨θ̃, ũ₂⟩ / D`, bounded by ½ in magnitude.
    pub buoyancy: f64,
    pub separation: f64,
}

impl PairTerms {
    /// Exact `dL/dt = νI + II - buoyancy + III`.
    pub fn dl_dt(&self, nu: f64) -> f64 {
        nu * self.i + self.ii - self.buoyancy + self.iii
    }
}

fn pair_difference(a: &SimState, b: &SimState) -> Result<(SpectralVector, SpectralScalar)> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok((&a.u - &b.u, &a.theta - &b.theta))
}

fn separation(du: &SpectralVector, dth: &SpectralScalar, params: &PhysParams) -> Result<f64> {
    let d = du.norm_l2_sq() + params.g * params.g * dth.norm_l2_sq();
    if !(d >= IDENTICAL_STATES) {
        return Err(Error::IdenticalStates { separation: d });
    }
    Ok(d)
}

/// `(L, I)` for the pair.
pub fn pair_functionals(a: &SimState, b: &SimState, params: &PhysParams) -> Result<(f64, f64)> {
    let (du, dth) = pair_difference(a, b)?;
    let d = separation(&du, &dth, params)?;
    Ok((-0.5 * d.ln(), du.norm_h1_sq() / d))
}

pub fn pair_terms(a: &SimState, b: &SimState, params: &PhysParams) -> Result<PairTerms> {
    let (du, dth) = pair_difference(a, b)?;
    let d = separation(&du, &dth, params)?;
    let mut t = transport_terms(&du, &[&b.u.u1, &b.u.u2, &b.theta]);
    let adv_th = t.pop().expect("three terms");
    let a2 = t.pop().expect("three terms");
    let a1 = t.pop().expect("three terms");
    let g = params.g;
    Ok(PairTerms {
        l: -0.5 * d.ln(),
        i: du.norm_h1_sq() / d,
        ii: (a1.inner(&du.u1) + a2.inner(&du.u2)) / d,
        iii: g * g * adv_th.inner(&dth) / d,
        buoyancy: g * dth.inner(&du.u2) / d,
        separation: d,
    })
}

/// `K = ‖Au_B‖²/ν + g‖θ_B‖_ℍ³/2`, the growth rate in the bound on `I`.
pub fn growth_rate_k(b: &SimState, params: &PhysParams) -> f64 {
    b.u.palinstrophy() / params.nu + params.g * b.theta.norm_hs(3.0) / 2.0
}

/// One row of diagnostic output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub theta_l2: f64,
    pub theta_lp: LpNorms,
    pub g_sigma: f64,
    pub chi: Option<f64>,
    pub lambda: Option<f64>,
    pub mean_u1: f64,
    pub mean_u2: f64,
    pub mean_theta: f64,
    pub in_lambda_region: bool,
    pub cfl: f64,
}

impl DiagRecord {
    pub fn from_state(state: &SimState, params: &PhysParams, theta0_l2: f64, cfl: f64, tol: f64) -> Self {
        let cl = chi_lambda(&state.u);
        let (m1, m2, mt) = mean_check(state);
        Self {
            t: state.t,
            energy: state.u.norm_l2_sq(),
            enstrophy: state.u.norm_h1_sq(),
            theta_l2: state.theta.norm_l2(),
            theta_lp: LpNorms::of(&state.theta),
            g_sigma: grashof_sigma(state, params),
            chi: cl.map(|c| c.0),
            lambda: cl.map(|c| c.1),
            mean_u1: m1,
            mean_u2: m2,
            mean_theta: mt,
            in_lambda_region: lambda_region_check(&state.u, theta0_l2, params, tol),
            cfl,
        }
    }
}

/// Sink that accumulates a [`DiagRecord`] per sample. `‖θ₀‖` is taken from
/// the first sample unless given.
#[derive(Clone, Debug, Default)]
pub struct DiagRecorder {
    pub theta0_l2: Option<f64>,
    pub region_tol: f64,
    pub records: Vec<DiagRecord>,
}

impl DiagRecorder {
    pub fn new(region_tol: f64) -> Self {
        Self {
            theta0_l2: None,
            region_tol,
            records: Vec::new(),
        }
    }
}

impl Sink for DiagRecorder {
    fn record(&mut self, state: &SimState, params: &PhysParams, info: &StepInfo) -> Result<()> {
        let th0 = *self.theta0_l2.get_or_insert_with(|| state.theta.norm_l2());
        self.records.push(DiagRecord::from_state(state, params, th0, info.cfl, self.region_tol));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::eigen_steady_state;
    use crate::spectral::Grid;
    use rustfft::num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    fn rest_with(g: &Arc<Grid>, theta: SpectralScalar) -> SimState {
        SimState::new(SpectralVector::zeros(g), theta, 0.0).unwrap()
    }

    #[test]
    fn grashof_formula() {
        let p = PhysParams::new(1.0, 1.0, 2.0 * PI).unwrap();
        assert!((grashof(1.0, &p) - 1.0).abs() < 1e-15);
        assert_eq!(grashof(0.0, &p), 0.0);
        let p2 = PhysParams::new(2.0, 1.0, 2.0 * PI).unwrap();
        assert!((grashof(1.0, &p2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn grashof_sigma_cases() {
        let g = grid(16);
        let p = PhysParams::new(0.5, 2.0, 2.0 * PI).unwrap();
        let vert = rest_with(&g, SpectralScalar::from_fn(&g, |_, y| y.sin()).unwrap());
        assert!(grashof_sigma(&vert, &p) < 1e-15);
        let horiz = rest_with(&g, SpectralScalar::from_fn(&g, |x, _| x.cos()).unwrap());
        let full = grashof(horiz.theta.norm_l2(), &p);
        assert!((grashof_sigma(&horiz, &p) - full).abs() < 1e-12 * full);
        let mixed = rest_with(&g, SpectralScalar::from_fn(&g, |x, y| x.sin() * y.sin()).unwrap());
        let full = grashof(mixed.theta.norm_l2(), &p);
        assert!((grashof_sigma(&mixed, &p) - full / 2f64.sqrt()).abs() < 1e-12 * full);
    }

    #[test]
    fn effective_grashof_windows() {
        assert!(matches!(effective_grashof(&[], 0.25), Err(Error::EmptySeries)));
        let flat: Vec<_> = (0..10).map(|i| (i as f64, 3.0)).collect();
        assert_eq!(effective_grashof(&flat, 0.25).unwrap().value, 3.0);
        let decay: Vec<_> = (0..=100).map(|i| (i as f64 * 0.1, (-(i as f64) * 0.1).exp())).collect();
        let e = effective_grashof(&decay, 0.25).unwrap();
        assert!((e.window_start - 7.5).abs() < 1e-12);
        assert!((e.value - (-7.5f64).exp()).abs() < 1e-12);
        assert_eq!(e.window_end, 10.0);
    }

    #[test]
    fn two_valued_distribution() {
        let v: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let f = DistributionFunction::from_values(&v, 5).unwrap();
        assert_eq!(f.eval(-1.5), 0.0);
        assert_eq!(f.eval(-1.0), 0.5);
        assert_eq!(f.eval(0.99), 0.5);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.thresholds, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(f.cdf, vec![0.5, 0.5, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn distribution_is_translation_invariant() {
        let g = grid(16);
        let th = SpectralScalar::from_fn(&g, |x, y| x.sin() + 0.5 * (2.0 * y + x).cos()).unwrap();
        let vals = th.to_physical();
        let n = g.n();
        let rolled: Vec<f64> = (0..vals.len()).map(|i| vals[(i + 3 * n + 5) % vals.len()]).collect();
        let a = DistributionFunction::from_values(&vals, 20).unwrap();
        let b = DistributionFunction::from_values(&rolled, 20).unwrap();
        assert_eq!(a.ks_distance(&b), 0.0);
        assert_eq!(a, b);
        let c = distribution_function(&th, 20).unwrap();
        assert!(c.cdf.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*c.cdf.last().unwrap(), 1.0);
    }

    #[test]
    fn lp_norm_single_mode() {
        let g = grid(16);
        let th = SpectralScalar::from_fn(&g, |x, _| x.sin()).unwrap();
        let n = lp_norms(&th, &[2.0, f64::INFINITY]).unwrap();
        assert!((n[0].1.powi(2) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((n[1].1 - 1.0).abs() < 1e-14);
        let s = LpNorms::of(&th.scale(-3.0));
        let base = LpNorms::of(&th);
        assert!((s.l4 - 3.0 * base.l4).abs() < 1e-12);
        assert!((s.l1 - 3.0 * base.l1).abs() < 1e-12);
        assert!(lp_norms(&th, &[0.5]).is_err());
    }

    #[test]
    fn chi_lambda_cases() {
        let g = grid(16);
        assert!(chi_lambda(&SpectralVector::zeros(&g)).is_none());
        let mut psi = SpectralScalar::zeros(&g);
        psi.set_mode(3, 0, Complex64::new(0.2, 0.1)).unwrap();
        let u = SpectralVector::from_stream_function(&psi);
        let (_, lam) = chi_lambda(&u).unwrap();
        assert!((lam - 9.0).abs() < 1e-13);

        let p = PhysParams::new(0.2, 3.0, 2.0 * PI).unwrap();
        let (u, th) = eigen_steady_state(&g, 2, 0.7, &p).unwrap();
        let (chi, _) = chi_lambda(&u).unwrap();
        let target = p.g * th.norm_l2() / p.nu;
        assert!((chi - target).abs() < 1e-10 * target);
        assert!(lambda_region_check(&u, th.norm_l2(), &p, 1e-10));
    }

    #[test]
    fn lambda_region_violation() {
        let g = grid(16);
        let p = PhysParams::new(0.5, 1.0, 2.0 * PI).unwrap();
        assert!(lambda_region_check(&SpectralVector::zeros(&g), 1.0, &p, 0.0));
        let u = SpectralVector::new(SpectralScalar::zeros(&g), SpectralScalar::from_fn(&g, |x, _| x.cos()).unwrap()).unwrap();
        // choose θ₀ so that ‖u‖²_ℍ¹ = 2(g‖θ₀‖/ν)‖u‖
        let th0 = u.norm_h1_sq() * p.nu / (2.0 * p.g * u.norm_l2());
        assert!(!lambda_region_check(&u, th0, &p, 1e-6));
        assert!(lambda_region_check(&u, 2.0 * th0, &p, 1e-12));
    }

    #[test]
    fn spectrum_partitions_energy() {
        let g = grid(32);
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let mut psi = SpectralScalar::zeros(&g);
        psi.set_mode(1, 0, Complex64::new(1.0, 0.0)).unwrap();
        let s = SimState::new(SpectralVector::from_stream_function(&psi), SpectralScalar::zeros(&g), 0.0).unwrap();
        let e = energy_spectrum(&s, &p);
        assert!((e.shell_energy[0] - s.u.norm_l2_sq()).abs() < 1e-12 * s.u.norm_l2_sq());
        assert!(e.shell_energy[1..].iter().all(|&x| x == 0.0));
        assert!((e.eta - 2.0 * 0.1 * s.u.palinstrophy() / g.area()).abs() < 1e-14);

        let psi = SpectralScalar::from_fn(&g, |x, y| x.sin() * (3.0 * y).cos() + 0.1 * (7.0 * x - 4.0 * y).sin()).unwrap();
        let s = SimState::new(SpectralVector::from_stream_function(&psi), SpectralScalar::zeros(&g), 0.0).unwrap();
        let e = energy_spectrum(&s, &p);
        let total: f64 = e.shell_energy.iter().sum();
        assert!((total - s.u.norm_l2_sq()).abs() < 1e-10 * total);
        assert!((e.kappa_eta - (e.eta / 1e-3).powf(1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn mean_check_reports_injected_mean() {
        let g = grid(8);
        let mut s = SimState::rest(&g);
        assert_eq!(mean_check(&s), (0.0, 0.0, 0.0));
        let mut coeffs = s.theta.coeffs().to_vec();
        coeffs[0] = Complex64::new(0.25, 0.0);
        s.theta = SpectralScalar::from_coeffs_unchecked(&g, coeffs);
        assert_eq!(mean_check(&s), (0.0, 0.0, 0.25));
    }

    #[test]
    fn pair_functional_cases() {
        let g = grid(16);
        let p = PhysParams::new(0.3, 2.0, 2.0 * PI).unwrap();
        let base = SimState::rest(&g);
        let th = SpectralScalar::from_fn(&g, |x, y| (x + y).sin()).unwrap();
        let a = rest_with(&g, th);
        let (l, i) = pair_functionals(&a, &base, &p).unwrap();
        assert_eq!(i, 0.0);
        assert!((l + 0.5 * (4.0 * a.theta.norm_l2_sq()).ln()).abs() < 1e-12);

        let mut psi = SpectralScalar::zeros(&g);
        psi.set_mode(2, 1, Complex64::new(0.3, 0.0)).unwrap();
        let b = SimState::new(SpectralVector::from_stream_function(&psi), SpectralScalar::zeros(&g), 0.0).unwrap();
        let (_, i) = pair_functionals(&b, &base, &p).unwrap();
        assert!((i - 5.0).abs() < 1e-12);
        assert!(matches!(pair_functionals(&b, &b, &p), Err(Error::IdenticalStates { .. })));
        let terms = pair_terms(&a, &b, &p).unwrap();
        assert!(terms.buoyancy.abs() <= 0.5 + 1e-15);
    }
}
