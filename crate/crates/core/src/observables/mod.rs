//! Functionals of fields: integrals, marginals, moments, domain
//! probabilities and entropies, brackets, Gibbs states and residuals.
//!
//! Quadratures use the midpoint rule on the grid, which for band-limited
//! periodic samples is exact. Reductions run sequentially so that repeated
//! runs report bit-identical values.

mod brackets;
mod domain;
mod gibbs;

pub use brackets::{extended_poisson_bracket, moyal_bracket, poisson_bracket, symbolic_moyal_bracket, Operand};
pub use domain::{
    entropy_over_domain, entropy_over_points, probability_over_domain, probability_over_points, DomainSpec,
    QuadraturePoint, Region, SpectralInterpolator, ENTROPY_FLOOR, NEGATIVITY_TOLERANCE,
};
pub use gibbs::{extended_liouville_residual, gibbs_state, liouville_residual_report, GibbsSpec, ResidualReport};

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::HamiltonianModel;
use crate::grid::{AxisLabel, Field, PhaseGrid, Rep};
use crate::propagator::EvolutionMode;

/// `∫ f` over the grid (real part).
pub fn total_integral(field: &Field) -> Result<f64> {
    field.require_all_direct("an integral")?;
    Ok(field.data().iter().map(|c| c.re).sum::<f64>() * field.grid().cell_volume())
}

/// `∫ |f|²` over the grid.
pub fn l2_norm_squared(field: &Field) -> f64 {
    field.data().iter().map(|c| c.norm_sqr()).sum::<f64>() * field.grid().cell_volume()
}

/// `(∫ |a − b|²)^{1/2}` for two fields on the same grid and representation.
pub fn l2_distance(a: &Field, b: &Field) -> Result<f64> {
    a.require_same_grid(b)?;
    if a.reps() != b.reps() {
        return Err(Error::Representation("fields are in different representations".into()));
    }
    let s: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm_sqr()).sum();
    Ok((s * a.grid().cell_volume()).sqrt())
}

/// Integrates out one axis, returning a field on the reduced grid.
pub fn reduce_axis(field: &Field, drop: AxisLabel) -> Result<Field> {
    field.require_all_direct("a marginal")?;
    let grid = field.grid();
    let k = grid.axis_index(drop)?;
    let reduced = Arc::new(grid.without_axis(drop)?);
    let shape = grid.shape();
    let n = shape[k];
    let inner: usize = shape[k + 1..].iter().product();
    let outer: usize = shape[..k].iter().product();
    let h = grid.axes()[k].spacing();
    let mut data = vec![Complex64::new(0.0, 0.0); outer * inner];
    data.par_chunks_mut(inner).enumerate().for_each(|(o, out)| {
        let block = &field.data()[o * n * inner..(o + 1) * n * inner];
        for row in block.chunks(inner) {
            for (acc, v) in out.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for acc in out.iter_mut() {
            *acc *= h;
        }
    });
    Field::from_data(&reduced, vec![Rep::Direct; reduced.ndim()], data)
}

/// Marginal density along `keep`, integrating over every other axis.
pub fn marginal(field: &Field, keep: AxisLabel) -> Result<Vec<f64>> {
    field.grid().axis_index(keep)?;
    let mut f = field.clone();
    for label in field.grid().labels() {
        if label != keep {
            f = reduce_axis(&f, label)?;
        }
    }
    Ok(f.real_parts())
}

/// `∫ Π z_k^{n_k} f`, with exponents given per axis in grid order.
pub fn moment(field: &Field, powers: &[u32]) -> Result<f64> {
    field.require_all_direct("a moment")?;
    let grid = field.grid();
    if powers.len() != grid.ndim() {
        return Err(Error::Grid(format!("{} exponents for a {}-axis grid", powers.len(), grid.ndim())));
    }
    let ndim = grid.ndim();
    let mut z = vec![0.0; ndim];
    let sum: f64 = field
        .data()
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            grid.point(flat, &mut z);
            z.iter().zip(powers).map(|(v, &n)| v.powi(n as i32)).product::<f64>() * c.re
        })
        .sum();
    Ok(sum * grid.cell_volume())
}

/// `∫ z f / ∫ f` along one axis.
pub fn mean(field: &Field, label: AxisLabel) -> Result<f64> {
    let k = field.grid().axis_index(label)?;
    let mut powers = vec![0; field.grid().ndim()];
    powers[k] = 1;
    Ok(moment(field, &powers)? / total_integral(field)?)
}

/// Density `|Ψ|²` of a phase-space amplitude.
pub fn olavo_density(psi: &Field) -> Field {
    psi.map(|c| Complex64::new(c.norm_sqr(), 0.0))
}

/// `∫ (T(p,t) + U(x,t)) |Ψ|²` for a normalized amplitude.
pub fn olavo_energy(psi: &Field, model: &HamiltonianModel, t: f64) -> Result<f64> {
    psi.require_all_direct("the Olavo energy")?;
    let norm = l2_norm_squared(psi);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::State(format!("amplitude is not normalized (∫|Ψ|² = {norm})")));
    }
    expectation_of_h(&olavo_density(psi), model, t)
}

/// `∫ H(x,p,t) f`.
pub fn expectation_of_h(field: &Field, model: &HamiltonianModel, t: f64) -> Result<f64> {
    field.require_all_direct("an expectation value")?;
    let grid = field.grid();
    let fns = model.functions()?;
    let ix = grid.axis_index(AxisLabel::X)?;
    let ip = grid.axis_index(AxisLabel::P)?;
    let ndim = grid.ndim();
    let mut z = vec![0.0; ndim];
    let sum: f64 = field
        .data()
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            grid.point(flat, &mut z);
            fns.h(z[ix], z[ip], t) * c.re
        })
        .sum();
    Ok(sum * grid.cell_volume())
}

/// Per-snapshot observables reported by the propagator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSummary {
    pub time: f64,
    /// `∫ f`, or `∫ |Ψ|²` for amplitudes.
    pub total_integral: f64,
    pub l2_norm: f64,
    pub max_imag: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_omega: Option<f64>,
    /// `⟨H(x,p,t)⟩` with respect to the density.
    pub energy: f64,
}

pub fn summarize(field: &Field, mode: EvolutionMode, model: &HamiltonianModel, t: f64) -> Result<ObservableSummary> {
    let density = if mode.evolves_density() { field.clone() } else { olavo_density(field) };
    let grid: &PhaseGrid = field.grid();
    let total = total_integral(&density)?;
    Ok(ObservableSummary {
        time: t,
        total_integral: total,
        l2_norm: l2_norm_squared(field).sqrt(),
        max_imag: if mode.evolves_density() { field.max_imag() } else { 0.0 },
        mean_x: mean(&density, AxisLabel::X)?,
        mean_p: mean(&density, AxisLabel::P)?,
        mean_omega: if grid.has_axis(AxisLabel::Omega) { Some(mean(&density, AxisLabel::Omega)?) } else { None },
        energy: expectation_of_h(&density, model, t)? / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::grid::{make_grid, AxisSpec};
    use crate::propagator::{initial_gaussian, olavo_gaussian, GaussianSpec};

    fn grid(n: usize) -> Arc<PhaseGrid> {
        make_grid(&[AxisSpec::new(AxisLabel::X, n, -8.0, 8.0), AxisSpec::new(AxisLabel::P, n, -8.0, 8.0)], 1.0).unwrap()
    }

    fn ho() -> HamiltonianModel {
        HamiltonianModel::parse("p^2/2", "x^2/2", Params::new()).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let g = grid(128);
        let sx = 0.5f64.sqrt();
        let w = initial_gaussian(&g, 0.0, 0.0, sx).unwrap();
        assert!((total_integral(&w).unwrap() - 1.0).abs() < 1e-10);
        assert!((moment(&w, &[2, 0]).unwrap() - sx * sx).abs() < 1e-8);
        let w = initial_gaussian(&g, 1.0, -2.0, 0.6).unwrap();
        assert!((mean(&w, AxisLabel::X).unwrap() - 1.0).abs() < 1e-10);
        assert!((mean(&w, AxisLabel::P).unwrap() + 2.0).abs() < 1e-10);
    }

    #[test]
    fn marginals_integrate_to_one() {
        let g = grid(64);
        let w = initial_gaussian(&g, 0.5, 0.0, 0.8).unwrap();
        let mx = marginal(&w, AxisLabel::X).unwrap();
        let dx = g.axis(AxisLabel::X).unwrap().spacing();
        assert!((mx.iter().sum::<f64>() * dx - 1.0).abs() < 1e-12);
        let reduced = reduce_axis(&w, AxisLabel::P).unwrap();
        assert_eq!(reduced.grid().labels(), vec![AxisLabel::X]);
        for (a, b) in reduced.real_parts().iter().zip(&mx) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn olavo_ground_energy() {
        let g = grid(128);
        let psi = olavo_gaussian(&g, &GaussianSpec::minimum_uncertainty(0.0, 0.0, 0.5f64.sqrt(), 1.0)).unwrap();
        assert!((olavo_energy(&psi, &ho(), 0.0).unwrap() - 0.5).abs() < 1e-6);
        let rotated = psi.map(|c| c * Complex64::from_polar(1.0, 0.7));
        assert!((olavo_energy(&rotated, &ho(), 0.0).unwrap() - 0.5).abs() < 1e-6);
        let doubled = psi.map(|c| c * 2.0);
        assert!(olavo_energy(&doubled, &ho(), 0.0).is_err());
    }

    #[test]
    fn olavo_free_energy() {
        let g = grid(128);
        let free = HamiltonianModel::parse("p^2/2", "0", Params::new()).unwrap();
        let (p0, sp) = (1.5, 0.4);
        let psi = olavo_gaussian(&g, &GaussianSpec { x0: 0.0, p0, sigma_x: 1.0, sigma_p: sp, omega: None }).unwrap();
        let e = olavo_energy(&psi, &free, 0.0).unwrap();
        assert!((e - (p0 * p0 + sp * sp) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn summary_fields() {
        let g = grid(64);
        let w = initial_gaussian(&g, 1.0, 0.5, 0.8).unwrap();
        let s = summarize(&w, EvolutionMode::Liouville, &ho(), 0.0).unwrap();
        assert!((s.total_integral - 1.0).abs() < 1e-12);
        assert!((s.mean_x - 1.0).abs() < 1e-10);
        assert!(s.mean_omega.is_none());
        let sp = 1.0 / 1.6;
        assert!((s.energy - (1.0 + 0.64 + 0.25 + sp * sp) / 2.0).abs() < 1e-8);
    }
}
