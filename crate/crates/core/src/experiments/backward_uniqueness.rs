use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{cumulative_trapezoid, out_path, write_series, ExperimentReport};
use crate::diagnostics::{growth_rate_k, pair_terms, PairTerms};
use crate::dynamics::{cfl_number, SimState, Stepper, StepperConfig};
use crate::error::{Error, Result};
use crate::random::{random_scalar, random_velocity};
use crate::spectral::PhysParams;

/// Peak wavenumber of the random perturbation.
const PERTURBATION_K_PEAK: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSettings {
    /// `‖ũ(0)‖` and `‖θ̃(0)‖`.
    pub perturbation_scale: f64,
    pub seed: u64,
    /// Relative quadrature slack on the integrated bounds.
    pub slack: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            perturbation_scale: 1e-6,
            seed: 0,
            slack: 0.05,
        }
    }
}

struct PairSample {
    t: f64,
    terms: PairTerms,
    k: f64,
}

fn sample(a: &SimState, b: &SimState, params: &PhysParams) -> Result<PairSample> {
    Ok(PairSample {
        t: b.t,
        terms: pair_terms(a, b, params)?,
        k: growth_rate_k(b, params),
    })
}

/// `I₀e^{c∫K} + (c/ν)∫e^{c∫_τ^t K}dτ` at every sample.
fn gronwall_bound(t: &[f64], i0: f64, cum_k: &[f64], c: f64, nu: f64) -> Vec<f64> {
    (0..t.len())
        .map(|j| {
            let w: Vec<f64> = (0..=j).map(|s| (c * (cum_k[j] - cum_k[s])).exp()).collect();
            let integral = cumulative_trapezoid(&t[..=j], &w)[j];
            i0 * (c * cum_k[j]).exp() + c / nu * integral
        })
        .collect()
}

/// Runs the base state `B` and `A = B + perturbation` in lockstep and checks
/// the separation bounds: `D > 0` throughout, `I(t)` below its Grönwall
/// envelope, and `L(t) - L(0)` between `∓∫(νI + |II| + ½ + |III|)`.
pub fn backward_uniqueness_probe(
    base: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    settings: &ProbeSettings,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    if !(settings.perturbation_scale >= 0.0) {
        return Err(Error::InvalidInput("perturbation_scale must be ≥ 0".into()));
    }
    if cfg.t_end < base.t {
        return Err(Error::InvalidStepper(format!(
            "t_end = {} precedes the start time {}",
            cfg.t_end, base.t
        )));
    }
    let grid = base.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let du = random_velocity(grid, PERTURBATION_K_PEAK, settings.perturbation_scale, &mut rng);
    let dth = random_scalar(grid, PERTURBATION_K_PEAK, settings.perturbation_scale, &mut rng);
    let mut a = SimState::new(&base.u + &du, &base.theta + &dth, base.t)?;
    let mut b = base.clone();
    let mut stepper_a = Stepper::new(*params, cfg.clone())?;
    let mut stepper_b = Stepper::new(*params, cfg.clone())?;

    let mut samples = vec![sample(&a, &b, params)?];
    let mut steps = 0usize;
    loop {
        let remaining = cfg.t_end - b.t;
        if remaining <= 1e-9 * cfg.dt {
            break;
        }
        let mut h = cfg.dt;
        if cfg.adaptive {
            while cfl_number(&a, params, h).max(cfl_number(&b, params, h)) > cfg.cfl_safety {
                h *= 0.5;
            }
        }
        let last = remaining <= h;
        h = h.min(remaining);
        a = stepper_a.advance_with(&a, h)?.0;
        b = stepper_b.advance_with(&b, h)?.0;
        if last {
            a.t = cfg.t_end;
            b.t = cfg.t_end;
        }
        steps += 1;
        if last || steps.is_multiple_of(cfg.sample_every) {
            samples.push(sample(&a, &b, params)?);
        }
    }

    let nu = params.nu;
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let i: Vec<f64> = samples.iter().map(|s| s.terms.i).collect();
    let l: Vec<f64> = samples.iter().map(|s| s.terms.l).collect();
    let k: Vec<f64> = samples.iter().map(|s| s.k).collect();
    let cum_k = cumulative_trapezoid(&t, &k);
    let bound = gronwall_bound(&t, i[0], &cum_k, 2.0, nu);
    let bound_unit = gronwall_bound(&t, i[0], &cum_k, 1.0, nu);

    let signed: Vec<f64> = samples
        .iter()
        .map(|s| nu * s.terms.i + s.terms.ii + 0.5 + s.terms.iii)
        .collect();
    let absolute: Vec<f64> = samples
        .iter()
        .map(|s| nu * s.terms.i + s.terms.ii.abs() + 0.5 + s.terms.iii.abs())
        .collect();
    let exact_rate: Vec<f64> = samples.iter().map(|s| s.terms.dl_dt(nu)).collect();
    let int_signed = cumulative_trapezoid(&t, &signed);
    let int_abs = cumulative_trapezoid(&t, &absolute);
    let int_rate = cumulative_trapezoid(&t, &exact_rate);

    let slack = settings.slack;
    let ratio = |x: f64, y: f64| if y > 0.0 { x / y } else if x > 0.0 { f64::INFINITY } else { 0.0 };
    let mut gronwall_ratio = 0.0f64;
    let mut gronwall_unit_ratio = 0.0f64;
    let mut upper_ok = true;
    let mut lower_ok = true;
    let mut identity_residual = 0.0f64;
    for j in 0..t.len() {
        gronwall_ratio = gronwall_ratio.max(ratio(i[j], bound[j]));
        gronwall_unit_ratio = gronwall_unit_ratio.max(ratio(i[j], bound_unit[j]));
        let change = l[j] - l[0];
        upper_ok &= change <= int_signed[j] + slack * int_abs[j];
        lower_ok &= change >= -(1.0 + slack) * int_abs[j];
        if j > 0 {
            identity_residual = identity_residual.max((change - int_rate[j]).abs() / int_abs[j]);
        }
    }
    let finite = l.iter().chain(&i).all(|x| x.is_finite());
    let min_separation = samples.iter().map(|s| s.terms.separation).fold(f64::INFINITY, f64::min);
    let gronwall_ok = gronwall_ratio <= 1.0 + slack;

    let mut report = ExperimentReport::new(
        "backward_uniqueness",
        json!({ "perturbation_scale": settings.perturbation_scale, "slack": slack }),
    );
    report.seed = Some(settings.seed);
    report.set("min_separation", min_separation);
    report.set("initial_i", i[0]);
    report.set("final_l", *l.last().expect("samples"));
    report.set("max_l_change", l.iter().map(|x| (x - l[0]).abs()).fold(0.0, f64::max));
    report.set("gronwall_ratio", gronwall_ratio);
    report.set("gronwall_ratio_single_rate", gronwall_unit_ratio);
    report.set("l_identity_residual", identity_residual);
    report.set("max_buoyancy_quotient", samples.iter().map(|s| s.terms.buoyancy.abs()).fold(0.0, f64::max));
    report.set("steps", steps as f64);
    report.flag("l_finite", finite);
    report.flag("gronwall_holds", gronwall_ok);
    report.flag("l_upper_bound_holds", upper_ok);
    report.flag("l_lower_bound_holds", lower_ok);
    report.pass = finite && min_separation > 0.0 && gronwall_ok && upper_ok && lower_ok;

    if let Some(path) = out_path(out_dir, "pair.csv")? {
        let rows: Vec<Vec<f64>> = samples
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let p = &s.terms;
                vec![s.t, p.l, p.i, p.ii, p.iii, p.buoyancy, s.k, p.separation, bound[j], bound_unit[j]]
            })
            .collect();
        write_series(&path, "t,l,i,ii,iii,buoyancy,k,separation,i_bound,i_bound_single_rate", &rows)?;
        report.series_paths.push(path);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{Family, FamilySpec};
    use crate::spectral::{Grid, SpectralScalar, SpectralVector};
    use std::f64::consts::PI;

    fn setup() -> (SimState, PhysParams) {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let s = FamilySpec::new(Family::Vertical).state_at(&grid, &p, 0.0).unwrap();
        (s, p)
    }

    #[test]
    fn vertical_base_stays_separated() {
        let (s, p) = setup();
        let cfg = StepperConfig { sample_every: 1, ..StepperConfig::new(0.005, 1.0) };
        let r = backward_uniqueness_probe(&s, &p, &cfg, &ProbeSettings::default(), None).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.metric("l_identity_residual").unwrap() < 1e-2);
        assert!(r.metric("max_buoyancy_quotient").unwrap() <= 0.5);
    }

    #[test]
    fn zero_perturbation_is_identical() {
        let (s, p) = setup();
        let cfg = StepperConfig::new(0.01, 0.1);
        let settings = ProbeSettings { perturbation_scale: 0.0, ..ProbeSettings::default() };
        assert!(matches!(
            backward_uniqueness_probe(&s, &p, &cfg, &settings, None),
            Err(Error::IdenticalStates { .. })
        ));
    }

    #[test]
    fn single_mode_quotient() {
        let (s, p) = setup();
        let g = s.grid();
        let m = 3.0;
        let du = SpectralVector::new(
            SpectralScalar::from_fn(g, |_, y| 1e-6 * (m * y).sin()).unwrap(),
            SpectralScalar::zeros(g),
        )
        .unwrap();
        let a = SimState::new(&s.u + &du, s.theta.clone(), 0.0).unwrap();
        let t = pair_terms(&a, &s, &p).unwrap();
        let k0 = g.kappa0();
        assert!((t.i - k0 * k0 * m * m).abs() < 1e-6, "{}", t.i);
    }
}
