use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::HamiltonianModel;
use crate::grid::{AxisLabel, Field, PhaseGrid, Rep};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub beta: f64,
    /// Normalization over the grid, filled in by [`gibbs_state`].
    pub z: Option<f64>,
}

impl GibbsSpec {
    pub fn new(beta: f64) -> Result<GibbsSpec> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::State(format!("inverse temperature must be positive, got {beta}")));
        }
        Ok(GibbsSpec { beta, z: None })
    }
}

const MAX_EXPONENT: f64 = 700.0;

fn omega_grid_indices(grid: &PhaseGrid) -> Result<(usize, usize, usize)> {
    if grid.ndim() != 3 {
        return Err(Error::Grid("an (x, p, omega) grid is required".into()));
    }
    Ok((grid.axis_index(AxisLabel::X)?, grid.axis_index(AxisLabel::P)?, grid.axis_index(AxisLabel::Omega)?))
}

/// Canonical extended state `Z⁻¹ exp(−β(H(x,p,t) − Ω))` normalized on the
/// grid. Returns the state and the spec with `z` filled in.
pub fn gibbs_state(
    model: &HamiltonianModel,
    grid: &Arc<PhaseGrid>,
    spec: &GibbsSpec,
    t: f64,
) -> Result<(Field, GibbsSpec)> {
    let spec = GibbsSpec::new(spec.beta)?;
    let (ix, ip, iw) = omega_grid_indices(grid)?;
    let fns = model.functions()?;
    let ndim = grid.ndim();
    let exponents: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; ndim],
            |z, flat| {
                grid.point(flat, z);
                -spec.beta * (fns.h(z[ix], z[ip], t) - z[iw])
            },
        )
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() || top > MAX_EXPONENT {
        return Err(Error::Numeric(format!("Gibbs exponent reaches {top:.1}; lower beta or shrink the omega range")));
    }
    let mut data: Vec<Complex64> = exponents.par_iter().map(|e| Complex64::new(e.exp(), 0.0)).collect();
    let z = data.iter().map(|c| c.re).sum::<f64>() * grid.cell_volume();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Numeric(format!("Gibbs normalization is {z}")));
    }
    data.par_iter_mut().for_each(|c| *c /= z);
    let field = Field::from_data(grid, vec![Rep::Direct; 3], data)?;
    Ok((field, GibbsSpec { beta: spec.beta, z: Some(z) }))
}

/// Details of an extended Liouville residual evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualReport {
    /// `max |R|` over Ω-interior points.
    pub max_abs: f64,
    /// Largest summed magnitude of the individual terms of `R`.
    pub scale: f64,
    /// `max_abs / scale`, or 0 when every term vanishes.
    pub normalized: f64,
}

/// First-derivative stencil of eighth order.
const STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Residual `R = ∂_t f + {f, H} + ∂_t H · ∂_Ω f` of the extended Liouville
/// equation, evaluated on an `(x, p, Ω)` grid.
///
/// `∂_x` and `∂_p` are spectral; `∂_Ω` uses an eighth-order central
/// difference because canonical states are not periodic in Ω, so only
/// points at least four samples from either Ω edge are scored. `dt_f`
/// supplies the explicit time derivative of `f` (zero when `None`).
pub fn liouville_residual_report(
    f: &Field,
    model: &HamiltonianModel,
    t: f64,
    dt_f: Option<&Field>,
) -> Result<ResidualReport> {
    f.require_all_direct("the Liouville residual")?;
    let grid = f.grid();
    let (ix, ip, iw) = omega_grid_indices(grid)?;
    if let Some(d) = dt_f {
        d.require_same_grid(f)?;
        d.require_all_direct("the Liouville residual")?;
    }
    let nw = grid.shape()[iw];
    if nw < 2 * STENCIL.len() + 1 {
        return Err(Error::Grid("omega axis is too short for the residual stencil".into()));
    }
    let fns = model.functions()?;
    let fx = f.derivative(AxisLabel::X)?.real_parts();
    let fp = f.derivative(AxisLabel::P)?.real_parts();
    let stride = grid.strides()[iw];
    let h = grid.axes()[iw].spacing();
    let values = f.real_parts();
    let ndim = grid.ndim();
    let (max_abs, scale) = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0usize; ndim], vec![0.0; ndim]),
            |(idx, z), flat| {
                grid.unravel(flat, idx);
                let j = idx[iw];
                if j < STENCIL.len() || j + STENCIL.len() >= nw {
                    return (0.0, 0.0);
                }
                grid.point(flat, z);
                let mut fw = 0.0;
                for (k, c) in STENCIL.iter().enumerate() {
                    let off = (k + 1) * stride;
                    fw += c * (values[flat + off] - values[flat - off]);
                }
                fw /= h;
                let (x, p) = (z[ix], z[ip]);
                let terms = [
                    dt_f.map_or(0.0, |d| d.data()[flat].re),
                    fx[flat] * fns.dh_dp(p, t),
                    -fp[flat] * fns.dh_dx(x, t),
                    fns.dh_dt(x, p, t) * fw,
                ];
                let r: f64 = terms.iter().sum();
                let s: f64 = terms.iter().map(|v| v.abs()).sum();
                (r.abs(), s)
            },
        )
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let normalized = if scale > 0.0 { max_abs / scale } else { 0.0 };
    Ok(ResidualReport { max_abs, scale, normalized })
}

/// Normalized max-norm of the extended Liouville residual; see
/// [`liouville_residual_report`].
pub fn extended_liouville_residual(f: &Field, model: &HamiltonianModel, t: f64, dt_f: Option<&Field>) -> Result<f64> {
    Ok(liouville_residual_report(f, model, t, dt_f)?.normalized)
}
