//! Multiplicative propagation kernels sampled over mixed representations.
//!
//! A kinetic kernel lives on `(λ, p[, τ])`, a potential kernel on
//! `(x, θ[, τ])`. For real `T` and `U` every kernel is purely imaginary,
//! so the crate stores only the imaginary part (the *phase rate*) and
//! exposes the complex field through the public builders.
//!
//! The quantum kernels are the symmetric ħ-shifted differences of `T` and
//! `U`, evaluated at real shifted arguments; the classical kernels replace
//! those differences by first derivatives.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{HamiltonianModel, ModelFunctions};
use crate::grid::{AxisLabel, Field, PhaseGrid, Rep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// ħ-shifted symmetric difference (Moyal and its extension).
    Quantum,
    /// First-order limit of the quantum kernel (Liouville and its extension).
    Classical,
    /// Single shifted evaluation `-(1/ħ) T(p + ħλ/2)` / `-(1/ħ) U(x - ħθ/2)`
    /// of the phase-space Schrödinger equation.
    Amplitude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelTerm {
    Kinetic,
    Potential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub term: KernelTerm,
    /// Include the τ (Ω-conjugate) dependence.
    pub extended: bool,
    /// Time at which the non-stationary model is frozen.
    pub time: f64,
}

impl KernelSpec {
    /// Representation of each grid axis the kernel is sampled in.
    pub fn reps(&self, grid: &PhaseGrid) -> Vec<Rep> {
        grid.labels()
            .into_iter()
            .map(|l| match (l, self.term) {
                (AxisLabel::X, KernelTerm::Kinetic) | (AxisLabel::P, KernelTerm::Potential) => Rep::Conjugate,
                (AxisLabel::Omega, _) if self.extended => Rep::Conjugate,
                _ => Rep::Direct,
            })
            .collect()
    }

    fn validate(&self, grid: &PhaseGrid) -> Result<()> {
        if !grid.has_axis(AxisLabel::X) || !grid.has_axis(AxisLabel::P) {
            return Err(Error::Grid("kernels need both an x and a p axis".into()));
        }
        if self.extended && !grid.has_axis(AxisLabel::Omega) {
            return Err(Error::Grid("extended kernels need an omega axis".into()));
        }
        if self.extended && self.kind == KernelKind::Amplitude {
            return Err(Error::Grid("the phase-space amplitude kernel has no extended form".into()));
        }
        Ok(())
    }
}

/// Imaginary part of the kernel at every grid point, in storage order of the
/// kernel's mixed representation. The unpaired Nyquist frequency of each
/// conjugate axis is treated as zero.
pub fn kernel_phase_rates(fns: &ModelFunctions, grid: &PhaseGrid, spec: &KernelSpec) -> Result<Vec<f64>> {
    spec.validate(grid)?;
    let hbar = grid.hbar();
    let t = spec.time;
    let ix = grid.axis_index(AxisLabel::X)?;
    let ip = grid.axis_index(AxisLabel::P)?;
    let iw = grid.axis_index(AxisLabel::Omega).ok().filter(|_| spec.extended);
    let x_axis = &grid.axes()[ix];
    let p_axis = &grid.axes()[ip];
    let (main_axis, main_index) = match spec.term {
        KernelTerm::Kinetic => (p_axis, ip),
        KernelTerm::Potential => (x_axis, ix),
    };
    let (freq_axis, freq_index) = match spec.term {
        KernelTerm::Kinetic => (x_axis.conjugate(), ix),
        KernelTerm::Potential => (p_axis.conjugate(), ip),
    };
    let tau_axis = iw.map(|i| grid.axes()[i].conjugate());

    // Classical kernels factor into per-sample derivatives times frequencies.
    let (d_main, d_time): (Vec<f64>, Vec<f64>) = if spec.kind == KernelKind::Classical {
        (0..main_axis.n())
            .map(|j| {
                let u = main_axis.sample(j);
                match spec.term {
                    KernelTerm::Kinetic => {
                        (fns.dkinetic_dp.eval(&[0.0, u, t, 0.0]), fns.dkinetic_dt.eval(&[0.0, u, t, 0.0]))
                    }
                    KernelTerm::Potential => {
                        (fns.dpotential_dx.eval(&[u, 0.0, t, 0.0]), fns.dpotential_dt.eval(&[u, 0.0, t, 0.0]))
                    }
                }
            })
            .unzip()
    } else {
        (Vec::new(), Vec::new())
    };

    let ndim = grid.ndim();
    let rates: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; ndim],
            |idx, flat| {
                grid.unravel(flat, idx);
                let jm = idx[main_index];
                let u = main_axis.sample(jm);
                let kappa = freq_axis.effective_frequency(idx[freq_index]);
                let tau = match (iw, &tau_axis) {
                    (Some(i), Some(ax)) => ax.effective_frequency(idx[i]),
                    _ => 0.0,
                };
                match (spec.kind, spec.term) {
                    (KernelKind::Quantum, KernelTerm::Kinetic) => {
                        let plus = fns.t(u + 0.5 * hbar * kappa, t + 0.5 * hbar * tau);
                        let minus = fns.t(u - 0.5 * hbar * kappa, t - 0.5 * hbar * tau);
                        -(plus - minus) / hbar
                    }
                    (KernelKind::Quantum, KernelTerm::Potential) => {
                        let a = fns.u(u - 0.5 * hbar * kappa, t + 0.5 * hbar * tau);
                        let b = fns.u(u + 0.5 * hbar * kappa, t - 0.5 * hbar * tau);
                        -(a - b) / hbar
                    }
                    (KernelKind::Classical, KernelTerm::Kinetic) => -(kappa * d_main[jm] + tau * d_time[jm]),
                    (KernelKind::Classical, KernelTerm::Potential) => kappa * d_main[jm] - tau * d_time[jm],
                    (KernelKind::Amplitude, KernelTerm::Kinetic) => -fns.t(u + 0.5 * hbar * kappa, t) / hbar,
                    (KernelKind::Amplitude, KernelTerm::Potential) => -fns.u(u - 0.5 * hbar * kappa, t) / hbar,
                }
            },
        )
        .collect();
    if let Some(bad) = rates.iter().position(|r| !r.is_finite()) {
        let mut coords = vec![0.0; ndim];
        grid.point(bad, &mut coords);
        return Err(Error::Numeric(format!(
            "kernel is not finite at grid point {bad} (t = {t}); the model overflows or leaves its domain"
        )));
    }
    Ok(rates)
}

/// Builds the complex kernel field for `spec`.
pub fn build_kernel(model: &HamiltonianModel, grid: &Arc<PhaseGrid>, spec: &KernelSpec) -> Result<Field> {
    let fns = model.functions()?;
    let rates = kernel_phase_rates(&fns, grid, spec)?;
    let data = rates.into_iter().map(|r| Complex64::new(0.0, r)).collect();
    Field::from_data(grid, spec.reps(grid), data)
}

fn differential(kind: KernelKind, term: KernelTerm, t: f64, extended: bool) -> KernelSpec {
    KernelSpec { kind, term, extended, time: t }
}

/// `K_T = (1/iħ)[T(p + ħλ/2, t + ħτ/2) − T(p − ħλ/2, t − ħτ/2)]` on `(λ, p[, τ])`.
pub fn quantum_kinetic_kernel(
    model: &HamiltonianModel,
    grid: &Arc<PhaseGrid>,
    t: f64,
    extended: bool,
) -> Result<Field> {
    build_kernel(model, grid, &differential(KernelKind::Quantum, KernelTerm::Kinetic, t, extended))
}

/// `K_U = (1/iħ)[U(x − ħθ/2, t + ħτ/2) − U(x + ħθ/2, t − ħτ/2)]` on `(x, θ[, τ])`.
pub fn quantum_potential_kernel(
    model: &HamiltonianModel,
    grid: &Arc<PhaseGrid>,
    t: f64,
    extended: bool,
) -> Result<Field> {
    build_kernel(model, grid, &differential(KernelKind::Quantum, KernelTerm::Potential, t, extended))
}

/// `K_T = −i(λ ∂_p T + τ ∂_t T)`.
pub fn classical_kinetic_kernel(
    model: &HamiltonianModel,
    grid: &Arc<PhaseGrid>,
    t: f64,
    extended: bool,
) -> Result<Field> {
    build_kernel(model, grid, &differential(KernelKind::Classical, KernelTerm::Kinetic, t, extended))
}

/// `K_U = i(θ ∂_x U − τ ∂_t U)`.
pub fn classical_potential_kernel(
    model: &HamiltonianModel,
    grid: &Arc<PhaseGrid>,
    t: f64,
    extended: bool,
) -> Result<Field> {
    build_kernel(model, grid, &differential(KernelKind::Classical, KernelTerm::Potential, t, extended))
}
