//! Preset models, grids and initial states, with the checks each preset is
//! expected to pass.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characteristics::{
    integrate_extended, integrate_ordinary, transport_quadrature, ExtendedHamiltonian, ExtendedState,
};
use crate::error::{Error, Result};
use crate::expr::{parse, HamiltonianModel, Params, Variable};
use crate::grid::{make_grid, AxisLabel, AxisSpec, Field, PhaseGrid};
use crate::observables::{
    entropy_over_points, expectation_of_h, l2_distance, l2_norm_squared, mean, olavo_density, olavo_energy,
    probability_over_points, total_integral, DomainSpec,
};
use crate::propagator::{
    evolve, gaussian_state, olavo_gaussian, oscillator_eigenfunction, wigner_from_wavefunction, EvolutionMode,
    GaussianSpec, SnapshotSink,
};

/// Default Ω width of extended initial states.
pub const DEFAULT_OMEGA_WIDTH: f64 = 0.5;

/// Step used by trajectory oracles inside checks.
const ORACLE_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Product Gaussian. `sigma_p` defaults to the minimum-uncertainty value
    /// `ħ/(2σ_x)`; on extended grids Ω is centered at `H(x0, p0, t0)` unless
    /// `omega_center` is given.
    Gaussian {
        x0: f64,
        p0: f64,
        sigma_x: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_p: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_center: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega_width: Option<f64>,
    },
    /// Wigner function of oscillator eigenstate `n`.
    Eigenstate { n: usize, mass: f64, omega: f64 },
    /// Real and imaginary parts as expressions in `x`, `p` (and `E` for the
    /// Ω coordinate). Normalized after sampling.
    Expressions {
        re: String,
        im: String,
        #[serde(default)]
        params: Params,
    },
}

impl InitialState {
    pub fn gaussian(x0: f64, p0: f64, sigma_x: f64) -> InitialState {
        InitialState::Gaussian { x0, p0, sigma_x, sigma_p: None, omega_center: None, omega_width: None }
    }

    fn gaussian_spec(&self, model: &HamiltonianModel, grid: &PhaseGrid, t0: f64) -> Result<Option<GaussianSpec>> {
        let InitialState::Gaussian { x0, p0, sigma_x, sigma_p, omega_center, omega_width } = *self else {
            return Ok(None);
        };
        let omega = if grid.has_axis(AxisLabel::Omega) {
            let c = match omega_center {
                Some(c) => c,
                None => model.energy(x0, p0, t0)?,
            };
            Some((c, omega_width.unwrap_or(DEFAULT_OMEGA_WIDTH)))
        } else {
            None
        };
        Ok(Some(GaussianSpec { x0, p0, sigma_x, sigma_p: sigma_p.unwrap_or(grid.hbar() / (2.0 * sigma_x)), omega }))
    }

    /// Samples the state for `mode` on `grid`.
    pub fn build(
        &self,
        mode: EvolutionMode,
        model: &HamiltonianModel,
        grid: &Arc<PhaseGrid>,
        t0: f64,
    ) -> Result<Field> {
        mode.check_grid(grid)?;
        if let Some(spec) = self.gaussian_spec(model, grid, t0)? {
            return if mode == EvolutionMode::Olavo {
                olavo_gaussian(grid, &spec)
            } else {
                gaussian_state(grid, &spec)
            };
        }
        match self {
            InitialState::Eigenstate { n, mass, omega } => {
                if mode.is_extended() || mode == EvolutionMode::Olavo {
                    return Err(Error::State(format!(
                        "eigenstate initial conditions are not available in {mode} mode"
                    )));
                }
                let psi = oscillator_eigenfunction(grid, *n, *mass, *omega)?;
                wigner_from_wavefunction(&psi, grid)
            }
            InitialState::Expressions { re, im, params } => {
                let (re, im) = (parse(re)?.compile(params)?, parse(im)?.compile(params)?);
                let labels = grid.labels();
                let slot = |l: AxisLabel| match l {
                    AxisLabel::X => Variable::X.slot(),
                    AxisLabel::P => Variable::P.slot(),
                    AxisLabel::Omega => Variable::E.slot(),
                };
                let field = Field::from_fn(grid, |z| {
                    let mut vars = [0.0; 4];
                    vars[Variable::T.slot()] = t0;
                    for (v, l) in z.iter().zip(&labels) {
                        vars[slot(*l)] = *v;
                    }
                    Complex64::new(re.eval(&vars), im.eval(&vars))
                });
                let norm =
                    if mode == EvolutionMode::Olavo { l2_norm_squared(&field).sqrt() } else { total_integral(&field)? };
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(Error::State(format!("initial expressions cannot be normalized (norm {norm})")));
                }
                Ok(field.map(|c| c / norm))
            }
            InitialState::Gaussian { .. } => unreachable!("handled above"),
        }
    }
}

/// Named assertion evaluated after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// Change of `∫ f` (or `∫|Ψ|²`) between start and end.
    Normalization { tolerance: f64 },
    /// Relative change of `∫ |f|²`.
    L2Norm { tolerance: f64 },
    /// Largest imaginary part of the final density.
    Reality { tolerance: f64 },
    /// Final means against a fixed phase-space point.
    Center { x: f64, p: f64, tolerance: f64 },
    /// L2 distance between final and initial fields.
    ReturnToInitial { tolerance: f64 },
    /// Final state against `W₀(x − ∂_pT(p)·t, p)` for a Gaussian `W₀` (U = 0).
    FreeTranslation { tolerance: f64 },
    /// Final means against the RK4 trajectory started at the initial means.
    OracleMeans { tolerance: f64 },
    /// Change of `⟨H⟩` between start and end (stationary models).
    EnergyDrift { tolerance: f64 },
    /// Olavo energy at start and end against an expected value.
    OlavoEnergy { expected: f64, tolerance: f64 },
    /// Smallest sample of the final field below `threshold`.
    Negativity { threshold: f64 },
    /// `P_G` and `S_G` over a disc transported by the characteristics.
    DomainConservation { center: (f64, f64), radius: f64, p_tolerance: f64, s_tolerance: f64 },
    /// `mẋ²/2 + U = e^{−γt} H` decreases along the RK4 trajectory from the
    /// initial means over `[t0, t0 + horizon]`.
    MechanicalEnergyDecay { damping: f64, horizon: f64 },
    /// `H − E` is invariant along the extended RK4 trajectory from the
    /// initial means over `[t0, t0 + horizon]`.
    ExtendedInvariant { horizon: f64, tolerance: f64 },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Normalization { .. } => "normalization",
            Check::L2Norm { .. } => "l2_norm",
            Check::Reality { .. } => "reality",
            Check::Center { .. } => "center",
            Check::ReturnToInitial { .. } => "return_to_initial",
            Check::FreeTranslation { .. } => "free_translation",
            Check::OracleMeans { .. } => "oracle_means",
            Check::EnergyDrift { .. } => "energy_drift",
            Check::OlavoEnergy { .. } => "olavo_energy",
            Check::Negativity { .. } => "negativity",
            Check::DomainConservation { .. } => "domain_conservation",
            Check::MechanicalEnergyDecay { .. } => "mechanical_energy_decay",
            Check::ExtendedInvariant { .. } => "extended_invariant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Measured quantity (an error, a drift or a minimum).
    pub value: f64,
    /// Bound the value is compared against.
    pub bound: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn below(name: &str, value: f64, bound: f64) -> CheckOutcome {
        CheckOutcome { name: name.into(), value, bound, passed: value.is_finite() && value <= bound }
    }
}

/// Everything a check may consult about a finished run.
pub struct RunRecord<'a> {
    pub mode: EvolutionMode,
    pub model: &'a HamiltonianModel,
    pub initial_state: &'a InitialState,
    pub initial: &'a Field,
    pub last: &'a Field,
    pub t0: f64,
    pub t1: f64,
}

impl RunRecord<'_> {
    fn density(&self, f: &Field) -> Field {
        if self.mode.evolves_density() {
            f.clone()
        } else {
            olavo_density(f)
        }
    }

    fn means(&self, f: &Field) -> Result<(f64, f64)> {
        let d = self.density(f);
        Ok((mean(&d, AxisLabel::X)?, mean(&d, AxisLabel::P)?))
    }

    fn slice_xp(&self, f: &Field) -> Result<Field> {
        if f.grid().has_axis(AxisLabel::Omega) {
            crate::observables::reduce_axis(&self.density(f), AxisLabel::Omega)
        } else {
            Ok(self.density(f))
        }
    }
}

pub fn evaluate_check(check: &Check, run: &RunRecord) -> Result<CheckOutcome> {
    let name = check.name();
    Ok(match *check {
        Check::Normalization { tolerance } => {
            let a = total_integral(&run.density(run.initial))?;
            let b = total_integral(&run.density(run.last))?;
            CheckOutcome::below(name, (b - a).abs(), tolerance)
        }
        Check::L2Norm { tolerance } => {
            let a = l2_norm_squared(run.initial);
            let b = l2_norm_squared(run.last);
            CheckOutcome::below(name, (b / a - 1.0).abs(), tolerance)
        }
        Check::Reality { tolerance } => {
            let v = if run.mode.evolves_density() { run.last.max_imag() } else { 0.0 };
            CheckOutcome::below(name, v, tolerance)
        }
        Check::Center { x, p, tolerance } => {
            let (mx, mp) = run.means(run.last)?;
            CheckOutcome::below(name, (mx - x).abs().max((mp - p).abs()), tolerance)
        }
        Check::ReturnToInitial { tolerance } => {
            CheckOutcome::below(name, l2_distance(run.last, run.initial)?, tolerance)
        }
        Check::FreeTranslation { tolerance } => {
            let InitialState::Gaussian { .. } = run.initial_state else {
                return Err(Error::State("free_translation needs a Gaussian initial state".into()));
            };
            if !run.model.potential().is_zero() {
                return Err(Error::State("free_translation needs U = 0".into()));
            }
            let spec = run
                .initial_state
                .gaussian_spec(run.model, run.initial.grid(), run.t0)?
                .expect("Gaussian initial state");
            let exact = translated_gaussian(run.model, run.initial, &spec, run.t1 - run.t0)?;
            CheckOutcome::below(name, l2_distance(run.last, &exact)?, tolerance)
        }
        Check::OracleMeans { tolerance } => {
            let (x0, p0) = run.means(run.initial)?;
            let path = integrate_ordinary(run.model, x0, p0, run.t0, run.t1, ORACLE_STEP)?;
            let end = path.last().expect("non-empty trajectory");
            let (mx, mp) = run.means(run.last)?;
            CheckOutcome::below(name, (mx - end.x).abs().max((mp - end.p).abs()), tolerance)
        }
        Check::EnergyDrift { tolerance } => {
            let a = expectation_of_h(&run.density(run.initial), run.model, run.t0)?;
            let b = expectation_of_h(&run.density(run.last), run.model, run.t1)?;
            CheckOutcome::below(name, (b - a).abs(), tolerance)
        }
        Check::OlavoEnergy { expected, tolerance } => {
            if run.mode != EvolutionMode::Olavo {
                return Err(Error::State("olavo_energy applies to olavo runs".into()));
            }
            let a = olavo_energy(run.initial, run.model, run.t0)?;
            let b = olavo_energy(run.last, run.model, run.t1)?;
            CheckOutcome::below(name, (a - expected).abs().max((b - expected).abs()), tolerance)
        }
        Check::Negativity { threshold } => {
            let min = run.last.data().iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
            CheckOutcome { name: name.into(), value: min, bound: threshold, passed: min < threshold }
        }
        Check::DomainConservation { center, radius, p_tolerance, s_tolerance } => {
            let rule = DomainSpec::disc("G", center, radius).quadrature(24, 64);
            let moved = transport_quadrature(run.model, &rule, run.t0, run.t1, ORACLE_STEP)?;
            let (f0, f1) = (run.slice_xp(run.initial)?, run.slice_xp(run.last)?);
            let dp = (probability_over_points(&f1, &moved)? - probability_over_points(&f0, &rule)?).abs();
            let ds = (entropy_over_points(&f1, &moved)? - entropy_over_points(&f0, &rule)?).abs();
            let passed = dp <= p_tolerance && ds <= s_tolerance;
            CheckOutcome { name: name.into(), value: (dp / p_tolerance).max(ds / s_tolerance), bound: 1.0, passed }
        }
        Check::MechanicalEnergyDecay { damping, horizon } => {
            let (x0, p0) = run.means(run.initial)?;
            let path = integrate_ordinary(run.model, x0, p0, run.t0, run.t0 + horizon, ORACLE_STEP)?;
            let fns = run.model.functions()?;
            let energy: Vec<f64> = path.iter().map(|s| (-damping * s.t).exp() * fns.h(s.x, s.p, s.t)).collect();
            let worst_rise = energy.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            let decayed = energy.last().copied().unwrap_or(0.0) < energy[0];
            CheckOutcome { name: name.into(), value: worst_rise, bound: 0.0, passed: worst_rise <= 1e-12 && decayed }
        }
        Check::ExtendedInvariant { horizon, tolerance } => {
            let (x0, p0) = run.means(run.initial)?;
            let ht = ExtendedHamiltonian::new(run.model)?;
            let e0 = run.model.energy(x0, p0, run.t0)?;
            let start = ExtendedState::new(x0, p0, e0, run.t0)?;
            let path = integrate_extended(run.model, start, 0.0, horizon, ORACLE_STEP)?;
            let drift = path.iter().map(|(_, s)| (ht.value(s) - ht.value(&start)).abs()).fold(0.0, f64::max);
            CheckOutcome::below(name, drift, tolerance)
        }
    })
}

/// `W₀(x − ∂_pT(p)·t, p)` for an analytic Gaussian `W₀`, scaled like the
/// sampled initial field.
fn translated_gaussian(model: &HamiltonianModel, initial: &Field, spec: &GaussianSpec, t: f64) -> Result<Field> {
    let fns = model.functions()?;
    let grid = initial.grid();
    let ix = grid.axis_index(AxisLabel::X)?;
    let ip = grid.axis_index(AxisLabel::P)?;
    let profile = |x: f64, p: f64| {
        (-0.5 * (((x - spec.x0) / spec.sigma_x).powi(2) + ((p - spec.p0) / spec.sigma_p).powi(2))).exp()
    };
    let raw: f64 = {
        let unshifted = Field::from_real_fn(grid, |z| profile(z[ix], z[ip]));
        unshifted.data().iter().map(|c| c.re).sum()
    };
    let scale = initial.data().iter().map(|c| c.re).sum::<f64>() / raw;
    Ok(Field::from_real_fn(grid, |z| scale * profile(z[ix] - fns.dh_dp(z[ip], 0.0) * t, z[ip])))
}

/// A fully resolved preset.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub mode: EvolutionMode,
    pub model: HamiltonianModel,
    pub axes: Vec<AxisSpec>,
    pub hbar: f64,
    pub initial: InitialState,
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub checks: Vec<Check>,
}

/// Outcome of [`Scenario::run`].
pub struct ScenarioRun {
    pub initial: Field,
    pub last: Field,
    pub checks: Vec<CheckOutcome>,
}

impl Scenario {
    pub fn grid(&self) -> Result<Arc<PhaseGrid>> {
        make_grid(&self.axes, self.hbar)
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.dt * self.n_steps as f64
    }

    pub fn initial_field(&self) -> Result<Field> {
        self.initial.build(self.mode, &self.model, &self.grid()?, self.t0)
    }

    pub fn run(&self, snapshot_every: usize, sink: &mut dyn SnapshotSink) -> Result<ScenarioRun> {
        let initial = self.initial_field()?;
        let last = evolve(&initial, self.mode, &self.model, self.t0, self.dt, self.n_steps, snapshot_every, sink)?;
        let record = RunRecord {
            mode: self.mode,
            model: &self.model,
            initial_state: &self.initial,
            initial: &initial,
            last: &last,
            t0: self.t0,
            t1: self.t_end(),
        };
        let checks = self.checks.iter().map(|c| evaluate_check(c, &record)).collect::<Result<Vec<_>>>()?;
        Ok(ScenarioRun { initial, last, checks })
    }
}

const NAMES: [&str; 8] = [
    "harmonic-coherent",
    "free-particle",
    "quartic",
    "harmonic-classical",
    "ck-damped",
    "ck-quantum",
    "olavo-ground",
    "excited-wigner",
];

pub fn list_scenarios() -> Vec<&'static str> {
    NAMES.to_vec()
}

fn xp(n: usize, half: f64) -> Vec<AxisSpec> {
    vec![AxisSpec::new(AxisLabel::X, n, -half, half), AxisSpec::new(AxisLabel::P, n, -half, half)]
}

fn xpw(n: usize, half: f64, omega: (f64, f64)) -> Vec<AxisSpec> {
    let mut a = xp(n, half);
    a.push(AxisSpec::new(AxisLabel::Omega, n, omega.0, omega.1));
    a
}

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn conservation() -> Vec<Check> {
    vec![
        Check::Normalization { tolerance: 1e-10 },
        Check::L2Norm { tolerance: 1e-10 },
        Check::Reality { tolerance: 1e-10 },
    ]
}

pub fn load_scenario(name: &str) -> Result<Scenario> {
    let oscillator = || HamiltonianModel::parse("p^2/(2*m)", "m*w^2*x^2/2", params(&[("m", 1.0), ("w", 1.0)]));
    let caldirola_kanai = || {
        HamiltonianModel::parse(
            "exp(-a*t)*p^2/(2*m)",
            "exp(a*t)*m*w^2*x^2/2",
            params(&[("a", 0.1), ("m", 1.0), ("w", 1.0)]),
        )
    };
    let min_width = 0.5f64.sqrt();
    let scenario = match name {
        "harmonic-coherent" => Scenario {
            name: NAMES[0],
            description: "Coherent state of the harmonic oscillator, Moyal evolution over a quarter period",
            mode: EvolutionMode::Moyal,
            model: oscillator()?,
            axes: xp(256, 6.0),
            hbar: 1.0,
            initial: InitialState::gaussian(1.0, 0.0, min_width),
            t0: 0.0,
            dt: PI / 2000.0,
            n_steps: 1000,
            checks: [conservation(), vec![Check::Center { x: 0.0, p: -1.0, tolerance: 1e-4 }]].concat(),
        },
        "free-particle" => Scenario {
            name: NAMES[1],
            description: "Free Gaussian packet translating without wrap-around",
            mode: EvolutionMode::Moyal,
            model: HamiltonianModel::parse("p^2/(2*m)", "0", params(&[("m", 1.0)]))?,
            axes: xp(256, 10.0),
            hbar: 1.0,
            initial: InitialState::gaussian(-3.0, 1.0, 1.0),
            t0: 0.0,
            dt: 0.002,
            n_steps: 1000,
            checks: [conservation(), vec![Check::FreeTranslation { tolerance: 1e-6 }]].concat(),
        },
        "quartic" => Scenario {
            name: NAMES[2],
            description: "Anharmonic quartic well, Moyal evolution",
            mode: EvolutionMode::Moyal,
            model: HamiltonianModel::parse("p^2/(2*m)", "k*x^4", params(&[("m", 1.0), ("k", 0.25)]))?,
            axes: xp(256, 12.0),
            hbar: 1.0,
            initial: InitialState::gaussian(1.0, 0.0, min_width),
            t0: 0.0,
            dt: 0.005,
            n_steps: 1000,
            checks: [conservation(), vec![Check::EnergyDrift { tolerance: 1e-3 }]].concat(),
        },
        "harmonic-classical" => Scenario {
            name: NAMES[3],
            description: "Classical Liouville transport of a Gaussian over one harmonic period",
            mode: EvolutionMode::Liouville,
            model: oscillator()?,
            axes: xp(256, 6.0),
            hbar: 1.0,
            initial: InitialState::gaussian(1.0, 0.0, min_width),
            t0: 0.0,
            dt: 2.0 * PI / 1000.0,
            n_steps: 1000,
            checks: [
                conservation(),
                vec![
                    Check::ReturnToInitial { tolerance: 1e-4 },
                    Check::OracleMeans { tolerance: 1e-3 },
                    Check::DomainConservation { center: (1.0, 0.0), radius: 1.0, p_tolerance: 1e-4, s_tolerance: 1e-3 },
                ],
            ]
            .concat(),
        },
        "ck-damped" => Scenario {
            name: NAMES[4],
            description: "Caldirola-Kanai damped oscillator in the extended classical picture",
            mode: EvolutionMode::ExtendedClassical,
            model: caldirola_kanai()?,
            axes: xpw(64, 4.0, (-3.0, 4.0)),
            hbar: 1.0,
            initial: InitialState::Gaussian {
                x0: 1.0,
                p0: 0.0,
                sigma_x: 0.25,
                sigma_p: Some(0.25),
                omega_center: None,
                omega_width: None,
            },
            t0: 0.0,
            dt: 0.005,
            n_steps: 1000,
            checks: [
                conservation(),
                vec![
                    Check::OracleMeans { tolerance: 1e-2 },
                    Check::MechanicalEnergyDecay { damping: 0.1, horizon: 20.0 },
                    Check::ExtendedInvariant { horizon: 20.0, tolerance: 1e-8 },
                ],
            ]
            .concat(),
        },
        "ck-quantum" => Scenario {
            name: NAMES[5],
            description: "Caldirola-Kanai damped oscillator in the extended quantum picture",
            mode: EvolutionMode::ExtendedQuantum,
            model: caldirola_kanai()?,
            axes: xpw(64, 6.0, (-3.0, 4.0)),
            hbar: 1.0,
            initial: InitialState::gaussian(1.0, 0.0, min_width),
            t0: 0.0,
            dt: 0.005,
            n_steps: 1000,
            checks: [conservation(), vec![Check::OracleMeans { tolerance: 1e-2 }]].concat(),
        },
        "olavo-ground" => Scenario {
            name: NAMES[6],
            description: "Minimum-uncertainty phase-space amplitude of the oscillator over one period",
            mode: EvolutionMode::Olavo,
            model: oscillator()?,
            axes: xp(256, 8.0),
            hbar: 1.0,
            initial: InitialState::gaussian(0.0, 0.0, min_width),
            t0: 0.0,
            dt: 2.0 * PI / 1000.0,
            n_steps: 1000,
            checks: vec![
                Check::Normalization { tolerance: 1e-10 },
                Check::L2Norm { tolerance: 1e-10 },
                Check::OlavoEnergy { expected: 0.5, tolerance: 1e-6 },
            ],
        },
        "excited-wigner" => Scenario {
            name: NAMES[7],
            description: "Wigner function of the first excited oscillator state, showing negativity",
            mode: EvolutionMode::Moyal,
            model: oscillator()?,
            axes: xp(256, 8.0),
            hbar: 1.0,
            initial: InitialState::Eigenstate { n: 1, mass: 1.0, omega: 1.0 },
            t0: 0.0,
            dt: PI / 2000.0,
            n_steps: 1000,
            checks: [
                conservation(),
                vec![Check::EnergyDrift { tolerance: 1e-8 }, Check::Negativity { threshold: -0.3 }],
            ]
            .concat(),
        },
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_resolves() {
        for name in list_scenarios() {
            let s = load_scenario(name).unwrap();
            assert_eq!(s.name, name);
            s.mode.check_grid(&s.grid().unwrap()).unwrap();
            assert!(!s.checks.is_empty());
        }
        assert!(matches!(load_scenario("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn catalog_examples() {
        let s = load_scenario("harmonic-coherent").unwrap();
        assert_eq!(s.mode, EvolutionMode::Moyal);
        assert_eq!(s.hbar, 1.0);
        let ck = load_scenario("ck-damped").unwrap();
        assert_eq!(ck.mode, EvolutionMode::ExtendedClassical);
        assert_eq!(ck.model.params()["a"], 0.1);
        assert!(ck.checks.iter().any(|c| matches!(c, Check::MechanicalEnergyDecay { .. })));
        assert!(ck.checks.iter().any(|c| matches!(c, Check::ExtendedInvariant { .. })));
        let ol = load_scenario("olavo-ground").unwrap();
        assert_eq!(ol.mode, EvolutionMode::Olavo);
        assert!(ol.checks.iter().any(|c| matches!(c, Check::OlavoEnergy { expected, .. } if *expected == 0.5)));
    }

    #[test]
    fn extended_gaussian_is_centered_on_the_energy_shell() {
        let ck = load_scenario("ck-damped").unwrap();
        let f = ck.initial_field().unwrap();
        let m = mean(&f, AxisLabel::Omega).unwrap();
        let h0 = ck.model.energy(1.0, 0.0, 0.0).unwrap();
        assert!((m - h0).abs() < 1e-6, "{m} vs {h0}");
    }

    #[test]
    fn check_serialization_round_trip() {
        let checks = load_scenario("harmonic-classical").unwrap().checks;
        let text = serde_json::to_string(&checks).unwrap();
        let back: Vec<Check> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, checks);
    }
}
