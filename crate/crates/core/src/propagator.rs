//! Strang-split spectral propagation.
//!
//! One step applies a half potential kick, a full kinetic kick and another
//! half potential kick. A kick transforms the axes on which its kernel is
//! conjugate, multiplies by `exp(dt·K)` and transforms back. All kernels of
//! a step are frozen at the step midpoint.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{HamiltonianModel, ModelFunctions};
use crate::grid::{fft_axis, AxisLabel, Field, PhaseGrid, Rep};
use crate::kernels::{kernel_phase_rates, KernelKind, KernelSpec, KernelTerm};
use crate::observables::{summarize, ObservableSummary};

/// Splitting order recorded in run metadata.
pub const SPLITTING_ORDER: &str = "potential-kinetic-potential";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    Moyal,
    Liouville,
    ExtendedQuantum,
    ExtendedClassical,
    Olavo,
}

impl EvolutionMode {
    pub const ALL: [EvolutionMode; 5] = [
        EvolutionMode::Moyal,
        EvolutionMode::Liouville,
        EvolutionMode::ExtendedQuantum,
        EvolutionMode::ExtendedClassical,
        EvolutionMode::Olavo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvolutionMode::Moyal => "moyal",
            EvolutionMode::Liouville => "liouville",
            EvolutionMode::ExtendedQuantum => "extended_quantum",
            EvolutionMode::ExtendedClassical => "extended_classical",
            EvolutionMode::Olavo => "olavo",
        }
    }

    pub fn parse(s: &str) -> Option<EvolutionMode> {
        EvolutionMode::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn is_extended(self) -> bool {
        matches!(self, EvolutionMode::ExtendedQuantum | EvolutionMode::ExtendedClassical)
    }

    /// True when the evolved field is a quasi-probability or probability
    /// density rather than an amplitude.
    pub fn evolves_density(self) -> bool {
        self != EvolutionMode::Olavo
    }

    pub fn kernel_kind(self) -> KernelKind {
        match self {
            EvolutionMode::Moyal | EvolutionMode::ExtendedQuantum => KernelKind::Quantum,
            EvolutionMode::Liouville | EvolutionMode::ExtendedClassical => KernelKind::Classical,
            EvolutionMode::Olavo => KernelKind::Amplitude,
        }
    }

    /// Checks that the grid carries exactly the axes this mode evolves.
    pub fn check_grid(self, grid: &PhaseGrid) -> Result<()> {
        let labels = grid.labels();
        let has = |l| labels.contains(&l);
        let ok = if self.is_extended() {
            labels.len() == 3 && has(AxisLabel::X) && has(AxisLabel::P) && has(AxisLabel::Omega)
        } else {
            labels.len() == 2 && has(AxisLabel::X) && has(AxisLabel::P)
        };
        if ok {
            Ok(())
        } else if self.is_extended() {
            Err(Error::Grid(format!("mode {self} needs x, p and omega axes")))
        } else {
            Err(Error::Grid(format!("mode {self} needs exactly an x and a p axis")))
        }
    }
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Strang,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub dt: f64,
    pub scheme: Scheme,
}

impl StepPlan {
    pub fn new(dt: f64) -> Result<StepPlan> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::State(format!("time step must be positive and finite, got {dt}")));
        }
        Ok(StepPlan { dt, scheme: Scheme::Strang })
    }
}

/// Ready-to-apply factor tables for one step.
struct Tables {
    key: (u64, u64),
    potential_half: Vec<Complex64>,
    kinetic_full: Vec<Complex64>,
}

/// Stepper bound to one mode, model and grid, caching factor tables.
///
/// Stationary models build their tables once per `dt`; non-stationary
/// models rebuild them whenever the step midpoint changes.
pub struct Propagator {
    mode: EvolutionMode,
    model: HamiltonianModel,
    fns: ModelFunctions,
    grid: Arc<PhaseGrid>,
    potential_axes: Vec<usize>,
    kinetic_axes: Vec<usize>,
    cache: Option<Tables>,
}

impl Propagator {
    pub fn new(mode: EvolutionMode, model: &HamiltonianModel, grid: &Arc<PhaseGrid>) -> Result<Propagator> {
        mode.check_grid(grid)?;
        let fns = model.functions()?;
        let spec = |term| KernelSpec { kind: mode.kernel_kind(), term, extended: mode.is_extended(), time: 0.0 };
        let conj_axes = |s: KernelSpec| -> Vec<usize> {
            s.reps(grid).iter().enumerate().filter(|(_, r)| **r == Rep::Conjugate).map(|(k, _)| k).collect()
        };
        Ok(Propagator {
            mode,
            model: model.clone(),
            potential_axes: conj_axes(spec(KernelTerm::Potential)),
            kinetic_axes: conj_axes(spec(KernelTerm::Kinetic)),
            fns,
            grid: Arc::clone(grid),
            cache: None,
        })
    }

    pub fn mode(&self) -> EvolutionMode {
        self.mode
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    fn tables(&mut self, t: f64, dt: f64) -> Result<&Tables> {
        let mid = if self.fns.is_stationary() { 0.0 } else { t + 0.5 * dt };
        let key = (mid.to_bits(), dt.to_bits());
        if self.cache.as_ref().map(|c| c.key) != Some(key) {
            let build = |term, axes: &[usize], scale: f64| -> Result<Vec<Complex64>> {
                let spec =
                    KernelSpec { kind: self.mode.kernel_kind(), term, extended: self.mode.is_extended(), time: mid };
                let rates = kernel_phase_rates(&self.fns, &self.grid, &spec)?;
                let norm = 1.0 / axes.iter().map(|&k| self.grid.axes()[k].n() as f64).product::<f64>();
                Ok(rates.par_iter().map(|r| Complex64::from_polar(norm, r * scale)).collect())
            };
            let potential_half = build(KernelTerm::Potential, &self.potential_axes, 0.5 * dt)?;
            let kinetic_full = build(KernelTerm::Kinetic, &self.kinetic_axes, dt)?;
            self.cache = Some(Tables { key, potential_half, kinetic_full });
        }
        Ok(self.cache.as_ref().expect("tables were just built"))
    }

    /// Advances `field` from `t` to `t + dt` in place.
    pub fn step_in_place(&mut self, field: &mut Field, t: f64, dt: f64) -> Result<()> {
        if !dt.is_finite() {
            return Err(Error::State(format!("time step must be finite, got {dt}")));
        }
        field.require_all_direct("a propagation step")?;
        if **field.grid() != *self.grid {
            return Err(Error::Grid("field grid differs from the propagator grid".into()));
        }
        if dt == 0.0 {
            return Ok(());
        }
        let shape = self.grid.shape();
        let (pa, ka) = (self.potential_axes.clone(), self.kinetic_axes.clone());
        let tables = self.tables(t, dt)?;
        let data = field.data_mut();
        kick(data, &shape, &pa, &tables.potential_half);
        kick(data, &shape, &ka, &tables.kinetic_full);
        kick(data, &shape, &pa, &tables.potential_half);
        Ok(())
    }

    pub fn step(&mut self, field: &Field, t: f64, dt: f64) -> Result<Field> {
        let mut out = field.clone();
        self.step_in_place(&mut out, t, dt)?;
        Ok(out)
    }
}

fn kick(data: &mut [Complex64], shape: &[usize], axes: &[usize], table: &[Complex64]) {
    for &a in axes {
        fft_axis(data, shape, a, FftDirection::Forward);
    }
    data.par_iter_mut().zip(table.par_iter()).for_each(|(d, f)| *d *= f);
    for &a in axes {
        fft_axis(data, shape, a, FftDirection::Inverse);
    }
}

fn check_finite(field: &Field, step: usize, t: f64) -> Result<()> {
    if field.data().par_iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite values in the field at step {step} (t = {t}); the kernels likely overflowed"
        )));
    }
    Ok(())
}

/// One Strang step of `field` from `t` to `t + dt`.
pub fn step(field: &Field, mode: EvolutionMode, model: &HamiltonianModel, t: f64, dt: f64) -> Result<Field> {
    let mut prop = Propagator::new(mode, model, field.grid())?;
    let out = prop.step(field, t, dt)?;
    check_finite(&out, 1, t + dt)?;
    Ok(out)
}

/// One Strang step of a phase-space Schrödinger amplitude.
pub fn step_olavo(psi: &Field, model: &HamiltonianModel, t: f64, dt: f64) -> Result<Field> {
    step(psi, EvolutionMode::Olavo, model, t, dt)
}

/// Receiver of periodic snapshots during [`evolve`].
pub trait SnapshotSink {
    fn snapshot(
        &mut self,
        step: usize,
        time: f64,
        field: &Field,
        summary: &ObservableSummary,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>>;
}

impl<F> SnapshotSink for F
where
    F: FnMut(
        usize,
        f64,
        &Field,
        &ObservableSummary,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>>,
{
    fn snapshot(
        &mut self,
        step: usize,
        time: f64,
        field: &Field,
        summary: &ObservableSummary,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
        self(step, time, field, summary)
    }
}

/// Sink that discards every snapshot.
pub struct NoSnapshots;

impl SnapshotSink for NoSnapshots {
    fn snapshot(
        &mut self,
        _: usize,
        _: f64,
        _: &Field,
        _: &ObservableSummary,
    ) -> std::result::Result<(), Box<dyn std::error::Error + Send + Sync>> {
        Ok(())
    }
}

/// Runs `n_steps` Strang steps from `t0`.
///
/// The sink sees step 0 and every `snapshot_every`-th step (never when
/// `snapshot_every` is 0). Finiteness is checked at those steps and at the
/// end.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    field: &Field,
    mode: EvolutionMode,
    model: &HamiltonianModel,
    t0: f64,
    dt: f64,
    n_steps: usize,
    snapshot_every: usize,
    sink: &mut dyn SnapshotSink,
) -> Result<Field> {
    let mut state = field.clone();
    if n_steps == 0 && snapshot_every == 0 {
        return Ok(state);
    }
    let plan = StepPlan::new(dt)?;
    let mut prop = Propagator::new(mode, model, field.grid())?;
    let emit = |sink: &mut dyn SnapshotSink, step: usize, t: f64, f: &Field| -> Result<()> {
        check_finite(f, step, t)?;
        let summary = summarize(f, mode, model, t)?;
        sink.snapshot(step, t, f, &summary).map_err(|source| Error::Sink { step, source })
    };
    if snapshot_every > 0 {
        emit(sink, 0, t0, &state)?;
    }
    for k in 0..n_steps {
        let t = t0 + k as f64 * plan.dt;
        prop.step_in_place(&mut state, t, plan.dt)?;
        let done = k + 1;
        if snapshot_every > 0 && done % snapshot_every == 0 {
            emit(sink, done, t0 + done as f64 * plan.dt, &state)?;
        }
    }
    check_finite(&state, n_steps, t0 + n_steps as f64 * plan.dt)?;
    Ok(state)
}

/// Product Gaussian over `(x, p[, Ω])`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    /// Center and width along Ω for extended grids.
    pub omega: Option<(f64, f64)>,
}

impl GaussianSpec {
    /// Minimum-uncertainty state: `σ_p = ħ / (2σ_x)`.
    pub fn minimum_uncertainty(x0: f64, p0: f64, sigma_x: f64, hbar: f64) -> GaussianSpec {
        GaussianSpec { x0, p0, sigma_x, sigma_p: hbar / (2.0 * sigma_x), omega: None }
    }

    fn centers(&self, grid: &PhaseGrid) -> Result<Vec<(f64, f64)>> {
        grid.labels()
            .into_iter()
            .map(|l| match l {
                AxisLabel::X => Ok((self.x0, self.sigma_x)),
                AxisLabel::P => Ok((self.p0, self.sigma_p)),
                AxisLabel::Omega => self
                    .omega
                    .ok_or_else(|| Error::State("the grid has an omega axis but no omega profile was given".into())),
            })
            .collect()
    }
}

/// Checks the distance from each center to the boundary, in widths.
fn check_margins(grid: &PhaseGrid, centers: &[(f64, f64)]) -> Result<()> {
    for (axis, &(c, s)) in grid.axes().iter().zip(centers) {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::State(format!("width along {} must be positive, got {s}", axis.label())));
        }
        let margin = (c - axis.min()).min(axis.max() - c) / s;
        if margin < 2.0 {
            return Err(Error::State(format!(
                "state centered at {c} along {} is only {margin:.2} widths from the boundary (need at least 2)",
                axis.label()
            )));
        }
        if margin < 4.0 {
            log::warn!(
                "state centered at {c} along {} is {margin:.2} widths from the boundary; results may wrap",
                axis.label()
            );
        }
    }
    Ok(())
}

fn gaussian_density(grid: &Arc<PhaseGrid>, centers: &[(f64, f64)]) -> Field {
    let mut f = Field::from_real_fn(grid, |z| {
        let q: f64 = z.iter().zip(centers).map(|(v, (c, s))| ((v - c) / s).powi(2)).sum();
        (-0.5 * q).exp()
    });
    let total: f64 = f.data().iter().map(|c| c.re).sum::<f64>() * grid.cell_volume();
    let scale = 1.0 / total;
    f.data_mut().par_iter_mut().for_each(|c| *c *= scale);
    f
}

/// Normalized product Gaussian described by `spec`.
pub fn gaussian_state(grid: &Arc<PhaseGrid>, spec: &GaussianSpec) -> Result<Field> {
    let centers = spec.centers(grid)?;
    check_margins(grid, &centers)?;
    Ok(gaussian_density(grid, &centers))
}

/// Normalized minimum-uncertainty Gaussian on an `(x, p)` grid.
pub fn initial_gaussian(grid: &Arc<PhaseGrid>, x0: f64, p0: f64, sigma_x: f64) -> Result<Field> {
    gaussian_state(grid, &GaussianSpec::minimum_uncertainty(x0, p0, sigma_x, grid.hbar()))
}

/// Amplitude `Ψ = sqrt(ρ)` of a normalized Gaussian density, so that the
/// Olavo function `|Ψ|²` is that density.
pub fn olavo_gaussian(grid: &Arc<PhaseGrid>, spec: &GaussianSpec) -> Result<Field> {
    let rho = gaussian_state(grid, spec)?;
    Ok(rho.map(|c| Complex64::new(c.re.max(0.0).sqrt(), 0.0)))
}

/// Normalized energy eigenfunction `n` of `p²/2m + mω²x²/2`, sampled on
/// the grid's x axis.
pub fn oscillator_eigenfunction(grid: &PhaseGrid, n: usize, mass: f64, omega: f64) -> Result<Vec<Complex64>> {
    let axis = grid.axis(AxisLabel::X)?;
    let scale = (mass * omega / grid.hbar()).sqrt();
    let values: Vec<f64> = axis
        .samples()
        .iter()
        .map(|&x| {
            let y = scale * x;
            // Normalized Hermite functions by upward recursion.
            let mut prev = 0.0;
            let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * y * y).exp();
            for k in 0..n {
                let next = (2.0f64 / (k + 1) as f64).sqrt() * y * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
                prev = cur;
                cur = next;
            }
            cur
        })
        .collect();
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>() * axis.spacing();
    let s = 1.0 / norm.sqrt();
    Ok(values.into_iter().map(|v| Complex64::new(v * s, 0.0)).collect())
}

/// Weyl transform of a wavefunction sampled on the x axis:
/// `W(x,p) = (1/πħ) Σ_m ψ*(x + mΔx) ψ(x − mΔx) e^{2ipmΔx/ħ} Δx`.
///
/// The correlation is zero-padded rather than wrapped, and conjugate lag
/// pairs are summed together so the result is real by construction.
pub fn wigner_from_wavefunction(psi: &[Complex64], grid: &Arc<PhaseGrid>) -> Result<Field> {
    EvolutionMode::Moyal.check_grid(grid)?;
    let ix = grid.axis_index(AxisLabel::X)?;
    let x_axis = grid.axes()[ix].clone();
    let p_axis = grid.axis(AxisLabel::P)?.clone();
    let nx = x_axis.n();
    if psi.len() != nx {
        return Err(Error::State(format!("wavefunction has {} samples, the x axis has {nx}", psi.len())));
    }
    let dx = x_axis.spacing();
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::State(format!("wavefunction is not normalized (norm {norm})")));
    }
    let hbar = grid.hbar();
    let ps = p_axis.samples();
    let rows: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|j| {
            let lags = j.min(nx - 1 - j);
            let corr: Vec<Complex64> = (0..=lags).map(|m| psi[j + m].conj() * psi[j - m]).collect();
            ps.iter()
                .map(|&p| {
                    let w = 2.0 * p * dx / hbar;
                    let mut acc = corr[0].re;
                    for (m, c) in corr.iter().enumerate().skip(1) {
                        acc += 2.0 * (c * Complex64::from_polar(1.0, w * m as f64)).re;
                    }
                    acc * dx / (std::f64::consts::PI * hbar)
                })
                .collect()
        })
        .collect();
    let np = p_axis.n();
    let data: Vec<Complex64> = (0..grid.len())
        .map(|flat| {
            let (j, k) = if ix == 0 { (flat / np, flat % np) } else { (flat % nx, flat / nx) };
            Complex64::new(rows[j][k], 0.0)
        })
        .collect();
    Field::from_data(grid, vec![Rep::Direct; 2], data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::grid::{make_grid, AxisSpec};
    use crate::observables::{l2_norm_squared, marginal, moment, total_integral};

    fn grid(n: usize, half: f64, hbar: f64) -> Arc<PhaseGrid> {
        make_grid(&[AxisSpec::new(AxisLabel::X, n, -half, half), AxisSpec::new(AxisLabel::P, n, -half, half)], hbar)
            .unwrap()
    }

    fn model(t: &str, u: &str) -> HamiltonianModel {
        HamiltonianModel::parse(t, u, Params::new()).unwrap()
    }

    #[test]
    fn gaussian_normalization_and_moments() {
        let g = grid(128, 8.0, 1.0);
        let s = 0.5f64.sqrt();
        let w = initial_gaussian(&g, 0.0, 0.0, s).unwrap();
        assert!((total_integral(&w).unwrap() - 1.0).abs() < 1e-10);
        assert!((moment(&w, &[2, 0]).unwrap() - 0.5).abs() < 1e-8);
        assert!((moment(&w, &[0, 2]).unwrap() - 0.5).abs() < 1e-8);
        let w = initial_gaussian(&g, 1.0, -0.5, 0.6).unwrap();
        assert!((moment(&w, &[0, 2]).unwrap() - 0.25 - 1.0 / (4.0 * 0.36)).abs() < 1e-8);
    }

    #[test]
    fn gaussian_too_close_to_boundary_fails() {
        let g = grid(64, 4.0, 1.0);
        assert!(initial_gaussian(&g, 4.0 - 1.5 * 0.5, 0.0, 0.5).is_err());
        assert!(initial_gaussian(&g, 4.0 - 3.0 * 0.5, 0.0, 0.5).is_ok());
    }

    #[test]
    fn zero_step_is_identity() {
        let g = grid(32, 6.0, 1.0);
        let w = initial_gaussian(&g, 0.5, 0.0, 0.7).unwrap();
        let m = model("p^2/2", "x^4");
        for mode in [EvolutionMode::Moyal, EvolutionMode::Liouville, EvolutionMode::Olavo] {
            let out = step(&w, mode, &m, 0.0, 0.0).unwrap();
            assert_eq!(out.data(), w.data());
        }
        let out = evolve(&w, EvolutionMode::Moyal, &m, 0.0, 0.1, 0, 0, &mut NoSnapshots).unwrap();
        assert_eq!(out.data(), w.data());
    }

    #[test]
    fn mode_grid_compatibility() {
        let g = grid(16, 4.0, 1.0);
        let m = model("p^2/2", "x^2/2");
        assert!(Propagator::new(EvolutionMode::ExtendedClassical, &m, &g).is_err());
        assert!(Propagator::new(EvolutionMode::Moyal, &m, &g).is_ok());
        let g3 = make_grid(
            &[
                AxisSpec::new(AxisLabel::X, 16, -4.0, 4.0),
                AxisSpec::new(AxisLabel::P, 16, -4.0, 4.0),
                AxisSpec::new(AxisLabel::Omega, 16, -4.0, 4.0),
            ],
            1.0,
        )
        .unwrap();
        assert!(Propagator::new(EvolutionMode::Moyal, &m, &g3).is_err());
        assert!(Propagator::new(EvolutionMode::ExtendedQuantum, &m, &g3).is_ok());
    }

    #[test]
    fn free_particle_translation() {
        let g = grid(128, 8.0, 1.0);
        let (x0, sx, sp) = (-2.0, 0.6, 0.5);
        let spec = GaussianSpec { x0, p0: 1.0, sigma_x: sx, sigma_p: sp, omega: None };
        let w0 = gaussian_state(&g, &spec).unwrap();
        let m = model("p^2/2", "0");
        let (dt, n) = (0.01, 200);
        let w = evolve(&w0, EvolutionMode::Moyal, &m, 0.0, dt, n, 0, &mut NoSnapshots).unwrap();
        let t = dt * n as f64;
        let exact = Field::from_real_fn(&g, |z| {
            let xs = z[0] - z[1] * t;
            (-0.5 * (((xs - x0) / sx).powi(2) + ((z[1] - 1.0) / sp).powi(2))).exp()
        });
        let scale = w0.data().iter().map(|c| c.re).sum::<f64>()
            / Field::from_real_fn(&g, |z| (-0.5 * (((z[0] - x0) / sx).powi(2) + ((z[1] - 1.0) / sp).powi(2))).exp())
                .data()
                .iter()
                .map(|c| c.re)
                .sum::<f64>();
        let err: f64 = w.data().iter().zip(exact.data()).map(|(a, b)| (a - b * scale).norm_sqr()).sum::<f64>();
        let err = (err * g.cell_volume()).sqrt();
        assert!(err < 1e-6, "L2 error {err}");
    }

    #[test]
    fn olavo_free_density_moves_at_half_the_momentum() {
        let g = grid(128, 10.0, 1.0);
        let spec = GaussianSpec { x0: -3.0, p0: 2.0, sigma_x: 0.8, sigma_p: 0.5, omega: None };
        let psi = olavo_gaussian(&g, &spec).unwrap();
        let m = HamiltonianModel::parse("p^2/(2*m)", "0", [("m".to_string(), 1.0)].into()).unwrap();
        let (dt, n) = (0.01, 150);
        let out = evolve(&psi, EvolutionMode::Olavo, &m, 0.0, dt, n, 0, &mut NoSnapshots).unwrap();
        let density = crate::observables::olavo_density(&out);
        let t = dt * n as f64;
        let mean_x = moment(&density, &[1, 0]).unwrap();
        let mean_p = moment(&density, &[0, 1]).unwrap();
        assert!((mean_p - 2.0).abs() < 1e-10);
        assert!((mean_x - (-3.0 + 2.0 * t / 2.0)).abs() < 1e-9, "{mean_x}");
    }

    #[test]
    fn conservation_and_reality_quartic() {
        let g = grid(64, 6.0, 1.0);
        let w0 = initial_gaussian(&g, 1.0, 0.0, 0.7).unwrap();
        let m = model("p^2/2", "x^4/4 - x^2/2");
        for mode in [EvolutionMode::Moyal, EvolutionMode::Liouville] {
            let w = evolve(&w0, mode, &m, 0.0, 0.005, 200, 0, &mut NoSnapshots).unwrap();
            assert!((total_integral(&w).unwrap() - 1.0).abs() < 1e-12);
            let l2 = l2_norm_squared(&w);
            assert!((l2 / l2_norm_squared(&w0) - 1.0).abs() < 1e-12);
            assert!(w.max_imag() < 1e-12, "{mode}: {}", w.max_imag());
        }
    }

    #[test]
    fn snapshot_counting() {
        let g = grid(32, 6.0, 1.0);
        let w0 = initial_gaussian(&g, 0.0, 0.0, 0.8).unwrap();
        let m = model("p^2/2", "x^2/2");
        let mut steps = Vec::new();
        let mut sink = |s: usize, _t: f64, _f: &Field, _o: &ObservableSummary| {
            steps.push(s);
            Ok(())
        };
        evolve(&w0, EvolutionMode::Liouville, &m, 0.0, 0.01, 50, 10, &mut sink).unwrap();
        assert_eq!(steps, vec![0, 10, 20, 30, 40, 50]);
    }

    #[test]
    fn sink_failure_aborts_with_step() {
        let g = grid(16, 6.0, 1.0);
        let w0 = initial_gaussian(&g, 0.0, 0.0, 0.8).unwrap();
        let m = model("p^2/2", "x^2/2");
        let mut sink = |s: usize, _t: f64, _f: &Field, _o: &ObservableSummary| {
            if s == 4 {
                Err("disk full".into())
            } else {
                Ok(())
            }
        };
        let err = evolve(&w0, EvolutionMode::Liouville, &m, 0.0, 0.01, 10, 2, &mut sink).unwrap_err();
        assert!(matches!(err, Error::Sink { step: 4, .. }), "{err}");
    }

    #[test]
    fn overflowing_kernel_is_reported() {
        let g = grid(16, 6.0, 1.0);
        let w0 = initial_gaussian(&g, 0.0, 0.0, 0.8).unwrap();
        let m = model("p^2/2", "exp(exp(t))*x^2");
        assert!(matches!(step(&w0, EvolutionMode::Liouville, &m, 10.0, 0.1), Err(Error::Numeric(_))));
    }

    #[test]
    fn wigner_of_ground_state_is_the_minimum_uncertainty_gaussian() {
        let g = grid(128, 8.0, 1.0);
        let psi = oscillator_eigenfunction(&g, 0, 1.0, 1.0).unwrap();
        let w = wigner_from_wavefunction(&psi, &g).unwrap();
        let reference = initial_gaussian(&g, 0.0, 0.0, 0.5f64.sqrt()).unwrap();
        let diff = w.data().iter().zip(reference.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        assert!(w.data().iter().all(|c| c.re >= -1e-10));
        let mx = marginal(&w, AxisLabel::X).unwrap();
        for (m, c) in mx.iter().zip(&psi) {
            assert!((m - c.norm_sqr()).abs() < 1e-8);
        }
    }

    #[test]
    fn first_excited_state_is_negative_at_origin() {
        let g = grid(128, 8.0, 1.0);
        let psi = oscillator_eigenfunction(&g, 1, 1.0, 1.0).unwrap();
        let w = wigner_from_wavefunction(&psi, &g).unwrap();
        let min = w.data().iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        assert!((min + 1.0 / std::f64::consts::PI).abs() < 1e-3, "{min}");
        let bad: Vec<Complex64> = psi.iter().map(|c| c * 1.1).collect();
        assert!(wigner_from_wavefunction(&bad, &g).is_err());
    }
}
