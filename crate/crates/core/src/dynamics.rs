//! Right-hand sides, time stepping and pressure recovery for
//! `du/dt + νAu + B(u,u) = P_σ(θg)`, `∂tθ + u·∇θ = 0`.
//!
//! The viscous term is integrated exactly with a per-mode integrating factor;
//! the advective and buoyancy terms go through the three-stage strong
//! stability preserving Runge–Kutta scheme of Shu and Osher. `θ` has no
//! linear term and sees the same stages without a factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    buoyancy_projection, check_solenoidal, dealiased_product, leray_project, transport_terms,
    Axis, Grid, PhysParams, SpectralScalar, SpectralVector, SOLENOIDAL_TOL,
};
use std::sync::Arc;

/// Velocity, temperature and time.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub u: SpectralVector,
    pub theta: SpectralScalar,
    pub t: f64,
}

impl SimState {
    pub fn new(u: SpectralVector, theta: SpectralScalar, t: f64) -> Result<Self> {
        if !u.grid().same_as(theta.grid()) {
            return Err(Error::GridMismatch);
        }
        check_solenoidal(&u)?;
        Ok(Self { u, theta, t })
    }

    /// `u = 0`, `θ = 0` at `t = 0`.
    pub fn rest(grid: &Arc<Grid>) -> Self {
        Self {
            u: SpectralVector::zeros(grid),
            theta: SpectralScalar::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    /// L² distance `‖u_a - u_b‖² + ‖θ_a - θ_b‖²`, square-rooted.
    pub fn distance(&self, other: &SimState) -> f64 {
        ((&self.u - &other.u).norm_l2_sq() + (&self.theta - &other.theta).norm_l2_sq()).sqrt()
    }
}

/// Optional exponential low-pass filter `exp(-α (max|k_i| / cut)^p)` on θ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialFilter {
    pub strength: f64,
    pub order: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    /// Base time step.
    pub dt: f64,
    pub cfl_safety: f64,
    pub adaptive: bool,
    pub t_end: f64,
    pub sample_every: usize,
    /// Largest fraction of `‖θ‖²` allowed in the outermost retained shell.
    pub resolution_limit: f64,
    pub filter: Option<ExponentialFilter>,
}

fn default_cfl_safety() -> f64 {
    0.5
}

fn default_sample_every() -> usize {
    10
}

fn default_resolution_limit() -> f64 {
    0.01
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            cfl_safety: default_cfl_safety(),
            adaptive: false,
            t_end: 1.0,
            sample_every: default_sample_every(),
            resolution_limit: default_resolution_limit(),
            filter: None,
        }
    }
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidStepper(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidStepper(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidStepper("t_end must be finite".into()));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidStepper("sample_every must be ≥ 1".into()));
        }
        if !(self.resolution_limit > 0.0 && self.resolution_limit <= 1.0) {
            return Err(Error::InvalidStepper(format!(
                "resolution_limit must lie in (0, 1], got {}",
                self.resolution_limit
            )));
        }
        Ok(())
    }
}

fn rhs_pair(
    u: &SpectralVector,
    theta: &SpectralScalar,
    params: &PhysParams,
) -> Result<(SpectralVector, SpectralScalar)> {
    check_solenoidal(u)?;
    let mut terms = transport_terms(u, &[&u.u1, &u.u2, theta]);
    let adv_theta = terms.pop().expect("three terms");
    let a2 = terms.pop().expect("three terms");
    let a1 = terms.pop().expect("three terms");
    let b = leray_project(&SpectralVector { u1: a1, u2: a2 });
    let mut du = buoyancy_projection(theta, params);
    du.add_scaled(-1.0, &b);
    Ok((du, adv_theta.scale(-1.0)))
}

/// `-B(u,u) + P_σ(θg)`; the viscous term is left to the integrating factor.
pub fn rhs_velocity(state: &SimState, params: &PhysParams) -> Result<SpectralVector> {
    check_solenoidal(&state.u)?;
    let mut terms = transport_terms(&state.u, &[&state.u.u1, &state.u.u2]);
    let a2 = terms.pop().expect("two terms");
    let a1 = terms.pop().expect("two terms");
    let b = leray_project(&SpectralVector { u1: a1, u2: a2 });
    let mut du = buoyancy_projection(&state.theta, params);
    du.add_scaled(-1.0, &b);
    Ok(du)
}

/// `-u·∇θ`.
pub fn rhs_theta(state: &SimState) -> Result<SpectralScalar> {
    check_solenoidal(&state.u)?;
    let adv = transport_terms(&state.u, &[&state.theta]).pop().expect("one term");
    Ok(adv.scale(-1.0))
}

/// Full velocity tendency `-νAu - B(u,u) + P_σ(θg)`.
pub fn full_velocity_tendency(state: &SimState, params: &PhysParams) -> Result<SpectralVector> {
    let mut du = rhs_velocity(state, params)?;
    du.add_scaled(-params.nu, &state.u.stokes());
    Ok(du)
}

/// Pressure `-Σ R_ij(u_i u_j) + gΔ⁻¹∂₂θ` with `R_ij = Δ⁻¹∂_i∂_j`.
pub fn recover_pressure(state: &SimState, params: &PhysParams) -> Result<SpectralScalar> {
    let u = &state.u;
    let (p11, _) = dealiased_product(&u.u1, &u.u1)?;
    let (p12, _) = dealiased_product(&u.u1, &u.u2)?;
    let (p22, _) = dealiased_product(&u.u2, &u.u2)?;
    let mut div_div = p11.derivative(Axis::X1).derivative(Axis::X1);
    div_div.add_scaled(2.0, &p12.derivative(Axis::X1).derivative(Axis::X2));
    div_div.add_scaled(1.0, &p22.derivative(Axis::X2).derivative(Axis::X2));
    let mut p = div_div.inverse_laplacian().scale(-1.0);
    p.add_scaled(params.g, &state.theta.derivative(Axis::X2).inverse_laplacian());
    Ok(p)
}

/// Velocity scale entering the CFL bound:
/// `max(‖u‖_∞, νκ₀, g‖θ‖/(νκ₀²)·κ₀)`.
pub fn velocity_scale(state: &SimState, params: &PhysParams) -> f64 {
    let k0 = state.grid().kappa0();
    let p1 = state.u.u1.to_physical();
    let p2 = state.u.u2.to_physical();
    let umax = p1
        .iter()
        .zip(&p2)
        .map(|(a, b)| (a * a + b * b).sqrt())
        .fold(0.0, f64::max);
    let buoy = params.g * state.theta.norm_l2() / (params.nu * k0 * k0) * k0;
    umax.max(params.nu * k0).max(buoy)
}

/// CFL number `dt · velocity_scale / Δx`.
pub fn cfl_number(state: &SimState, params: &PhysParams, dt: f64) -> f64 {
    dt * velocity_scale(state, params) / state.grid().dx()
}

/// Fraction of `‖θ‖²` held by the outermost retained square shell.
pub fn outer_shell_fraction(theta: &SpectralScalar) -> f64 {
    let g = theta.grid();
    let cut = g.dealias_cut() as i64;
    let mut outer = 0.0;
    let mut total = 0.0;
    for (i, c) in theta.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let (k1, k2) = g.wavenumber(i);
        if k1.abs().max(k2.abs()) == cut {
            outer += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// Per-step bookkeeping handed to sinks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    pub dt: f64,
    pub cfl: f64,
}

struct Factors {
    h: f64,
    full: Vec<f64>,
    half: Vec<f64>,
    half_inv: Vec<f64>,
}

impl Factors {
    fn new(grid: &Grid, nu: f64, h: f64) -> Self {
        let k0sq = grid.kappa0() * grid.kappa0();
        let rate = |i: usize| nu * k0sq * grid.ksq(i) as f64;
        let len = grid.len();
        Self {
            h,
            full: (0..len).map(|i| (-rate(i) * h).exp()).collect(),
            half: (0..len).map(|i| (-rate(i) * h * 0.5).exp()).collect(),
            half_inv: (0..len).map(|i| (rate(i) * h * 0.5).exp()).collect(),
        }
    }
}

fn apply(f: &[f64], v: &SpectralVector) -> SpectralVector {
    let scale = |s: &SpectralScalar| {
        let coeffs = s.coeffs().iter().zip(f).map(|(c, w)| c * w).collect();
        SpectralScalar::from_coeffs_unchecked(s.grid(), coeffs)
    };
    SpectralVector {
        u1: scale(&v.u1),
        u2: scale(&v.u2),
    }
}

fn lin2(a: f64, x: &SpectralVector, b: f64, y: &SpectralVector) -> SpectralVector {
    let mut out = x.scale(a);
    out.add_scaled(b, y);
    out
}

fn lin2s(a: f64, x: &SpectralScalar, b: f64, y: &SpectralScalar) -> SpectralScalar {
    let mut out = x.scale(a);
    out.add_scaled(b, y);
    out
}

/// Integrating-factor SSP-RK3 stepper with optional CFL adaptivity.
pub struct Stepper {
    params: PhysParams,
    cfg: StepperConfig,
    dt: f64,
    factors: Option<Factors>,
}

impl Stepper {
    pub fn new(params: PhysParams, cfg: StepperConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        Ok(Self {
            params,
            dt: cfg.dt,
            cfg,
            factors: None,
        })
    }

    /// Current (possibly reduced) step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn choose_dt(&mut self, state: &SimState) -> Result<f64> {
        let speed = velocity_scale(state, &self.params);
        let dx = state.grid().dx();
        let cfl = |dt: f64| dt * speed / dx;
        if !self.cfg.adaptive {
            let c = cfl(self.dt);
            if c > 1.0 {
                return Err(Error::CflViolation { cfl: c, t: state.t });
            }
            return Ok(c);
        }
        while cfl(self.dt) > self.cfg.cfl_safety {
            self.dt *= 0.5;
            if self.dt < self.cfg.dt * 1e-12 {
                return Err(Error::CflViolation {
                    cfl: cfl(self.dt),
                    t: state.t,
                });
            }
        }
        if self.dt < self.cfg.dt && cfl(2.0 * self.dt) <= self.cfg.cfl_safety {
            self.dt = (2.0 * self.dt).min(self.cfg.dt);
        }
        Ok(cfl(self.dt))
    }

    /// Advances by one step of at most `max_dt`.
    pub fn advance(&mut self, state: &SimState, max_dt: f64) -> Result<(SimState, StepInfo)> {
        let cfl = self.choose_dt(state)?;
        let h = self.dt.min(max_dt);
        self.advance_unchecked(state, h, cfl)
    }

    /// Advances by exactly `h`, ignoring the adaptive controller. Errors if
    /// the CFL number for `h` exceeds 1.
    pub fn advance_with(&mut self, state: &SimState, h: f64) -> Result<(SimState, StepInfo)> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidStepper(format!("step must be > 0, got {h}")));
        }
        let cfl = cfl_number(state, &self.params, h);
        if cfl > 1.0 {
            return Err(Error::CflViolation { cfl, t: state.t });
        }
        self.advance_unchecked(state, h, cfl)
    }

    fn advance_unchecked(&mut self, state: &SimState, h: f64, cfl: f64) -> Result<(SimState, StepInfo)> {
        if self.factors.as_ref().is_none_or(|f| f.h != h) {
            self.factors = Some(Factors::new(state.grid(), self.params.nu, h));
        }
        let fac = self.factors.as_ref().expect("factors initialised");
        let p = &self.params;
        let (u0, th0) = (&state.u, &state.theta);

        let (nu0, nt0) = rhs_pair(u0, th0, p)?;
        let u1 = apply(&fac.full, &lin2(1.0, u0, h, &nu0));
        let th1 = lin2s(1.0, th0, h, &nt0);

        let (nu1, nt1) = rhs_pair(&u1, &th1, p)?;
        let mut u2 = apply(&fac.half, u0).scale(0.75);
        u2.add_scaled(0.25, &apply(&fac.half_inv, &lin2(1.0, &u1, h, &nu1)));
        let th2 = lin2s(0.75, th0, 0.25, &lin2s(1.0, &th1, h, &nt1));

        let (nu2, nt2) = rhs_pair(&u2, &th2, p)?;
        let mut u3 = apply(&fac.full, u0).scale(1.0 / 3.0);
        u3.add_scaled(2.0 / 3.0, &apply(&fac.half, &lin2(1.0, &u2, h, &nu2)));
        let mut th3 = lin2s(1.0 / 3.0, th0, 2.0 / 3.0, &lin2s(1.0, &th2, h, &nt2));

        let t_new = state.t + h;
        if let Some(filter) = self.cfg.filter {
            th3 = apply_filter(&th3, filter);
        }
        let mut u3 = leray_project(&u3);
        u3.enforce_invariants();
        th3.enforce_invariants();
        if !(u3.is_finite() && th3.is_finite()) {
            return Err(Error::NonFinite { t: t_new });
        }
        let fraction = outer_shell_fraction(&th3);
        if fraction > self.cfg.resolution_limit {
            return Err(Error::ResolutionLost { fraction, t: t_new });
        }
        debug_assert!(u3.is_solenoidal(SOLENOIDAL_TOL));
        Ok((
            SimState {
                u: u3,
                theta: th3,
                t: t_new,
            },
            StepInfo { step: 0, dt: h, cfl },
        ))
    }
}

fn apply_filter(theta: &SpectralScalar, filter: ExponentialFilter) -> SpectralScalar {
    let g = theta.grid();
    let cut = g.dealias_cut() as f64;
    let coeffs = theta
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (k1, k2) = g.wavenumber(i);
            let r = k1.abs().max(k2.abs()) as f64 / cut;
            c * (-filter.strength * r.powi(filter.order as i32)).exp()
        })
        .collect();
    SpectralScalar::from_coeffs_unchecked(g, coeffs)
}

/// Advances `state` by a single step of `cfg.dt` (shrunk if adaptive).
pub fn step(state: &SimState, params: &PhysParams, cfg: &StepperConfig) -> Result<SimState> {
    let mut stepper = Stepper::new(*params, cfg.clone())?;
    stepper.advance(state, f64::INFINITY).map(|(s, _)| s)
}

/// Receives samples during [`run`].
pub trait Sink {
    fn record(&mut self, state: &SimState, params: &PhysParams, info: &StepInfo) -> Result<()>;

    /// Called once when the run ends, including on error.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }

    /// Checked after every sample; `true` ends the run early.
    fn should_stop(&self) -> bool {
        false
    }
}

impl<F> Sink for F
where
    F: FnMut(&SimState, &PhysParams, &StepInfo) -> Result<()>,
{
    fn record(&mut self, state: &SimState, params: &PhysParams, info: &StepInfo) -> Result<()> {
        self(state, params, info)
    }
}

/// Integrates from `initial` to `cfg.t_end`, feeding sinks at step 0, every
/// `sample_every` steps and at the final time.
pub fn run(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    sinks: &mut [&mut dyn Sink],
) -> Result<SimState> {
    let result = run_inner(initial, params, cfg, sinks);
    let mut flush = Ok(());
    for sink in sinks.iter_mut() {
        if let Err(e) = sink.finish() {
            if flush.is_ok() {
                flush = Err(e);
            }
        }
    }
    let state = result?;
    flush?;
    Ok(state)
}

fn run_inner(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    sinks: &mut [&mut dyn Sink],
) -> Result<SimState> {
    if cfg.t_end < initial.t {
        return Err(Error::InvalidStepper(format!(
            "t_end {} precedes the initial time {}",
            cfg.t_end, initial.t
        )));
    }
    check_solenoidal(&initial.u)?;
    let mut stepper = Stepper::new(*params, cfg.clone())?;
    let emit = |sinks: &mut [&mut dyn Sink], state: &SimState, info: &StepInfo| -> Result<()> {
        for sink in sinks.iter_mut() {
            sink.record(state, params, info)?;
        }
        Ok(())
    };
    let mut state = initial.clone();
    let cfl0 = cfl_number(&state, params, stepper.dt());
    emit(sinks, &state, &StepInfo { step: 0, dt: stepper.dt(), cfl: cfl0 })?;
    if sinks.iter().any(|s| s.should_stop()) {
        return Ok(state);
    }

    let t0 = initial.t;
    let mut steps = 0usize;
    let mut last_sampled = 0usize;
    loop {
        let remaining = cfg.t_end - state.t;
        if remaining <= 1e-9 * stepper.dt() {
            break;
        }
        let (mut next, mut info) = stepper.advance(&state, remaining)?;
        steps += 1;
        info.step = steps;
        let finished = info.dt >= remaining;
        if finished {
            next.t = cfg.t_end;
        } else if !cfg.adaptive {
            next.t = t0 + steps as f64 * cfg.dt;
        }
        state = next;
        if steps.is_multiple_of(cfg.sample_every) || finished {
            emit(sinks, &state, &info)?;
            last_sampled = steps;
            if sinks.iter().any(|s| s.should_stop()) {
                break;
            }
        }
        if finished {
            break;
        }
    }
    if last_sampled != steps {
        let info = StepInfo {
            step: steps,
            dt: stepper.dt(),
            cfl: cfl_number(&state, params, stepper.dt()),
        };
        emit(sinks, &state, &info)?;
    }
    Ok(state)
}
