//! Poisson, extended Poisson and Moyal brackets.
//!
//! Operands are either sampled fields, differentiated spectrally, or
//! symbolic expressions, differentiated exactly and evaluated on the grid.
//! Coordinate functions such as `x` are not periodic, so they must be
//! passed symbolically.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::expr::{add, mul, sub, CompiledExpr, Expr, Params, Variable};
use crate::grid::{fft_axis, AxisLabel, Field, PhaseGrid};

#[derive(Clone, Copy, Debug)]
pub enum Operand<'a> {
    /// Grid samples. `dt` holds `∂_t` samples for fields that depend on time
    /// explicitly; `None` means no explicit time dependence.
    Sampled { field: &'a Field, dt: Option<&'a Field> },
    /// Function of `x`, `p`, `t` and `E`, with `E` read off the Ω axis.
    Symbol { expr: &'a Expr, params: &'a Params },
}

impl<'a> Operand<'a> {
    pub fn field(field: &'a Field) -> Operand<'a> {
        Operand::Sampled { field, dt: None }
    }

    pub fn symbol(expr: &'a Expr, params: &'a Params) -> Operand<'a> {
        Operand::Symbol { expr, params }
    }

    fn check_grid(&self, grid: &PhaseGrid) -> Result<()> {
        match self {
            Operand::Sampled { field, dt } => {
                field.require_all_direct("a bracket")?;
                if **field.grid() != *grid {
                    return Err(Error::Grid("bracket operands live on different grids".into()));
                }
                if let Some(d) = dt {
                    d.require_same_grid(field)?;
                }
                Ok(())
            }
            Operand::Symbol { .. } => Ok(()),
        }
    }

    /// `∂_var` sampled on the grid, in storage order.
    fn partial(&self, var: Variable, grid: &Arc<PhaseGrid>, t: f64) -> Result<Vec<Complex64>> {
        match *self {
            Operand::Sampled { field, dt } => {
                let zero = || vec![Complex64::new(0.0, 0.0); grid.len()];
                match var {
                    Variable::X => Ok(field.derivative(AxisLabel::X)?.into_data()),
                    Variable::P => Ok(field.derivative(AxisLabel::P)?.into_data()),
                    Variable::E if grid.has_axis(AxisLabel::Omega) => {
                        Ok(field.derivative(AxisLabel::Omega)?.into_data())
                    }
                    Variable::E => Ok(zero()),
                    Variable::T => Ok(dt.map(|d| d.data().to_vec()).unwrap_or_else(zero)),
                }
            }
            Operand::Symbol { expr, params } => sample_symbol(&expr.diff(var), params, grid, t),
        }
    }
}

/// Evaluates an expression at every grid point with `E` taken from the Ω
/// axis (or 0 when the grid has none).
fn sample_symbol(expr: &Expr, params: &Params, grid: &Arc<PhaseGrid>, t: f64) -> Result<Vec<Complex64>> {
    let c = expr.compile(params)?;
    let slots: Vec<Option<usize>> = grid
        .labels()
        .into_iter()
        .map(|l| match l {
            AxisLabel::X => Some(Variable::X.slot()),
            AxisLabel::P => Some(Variable::P.slot()),
            AxisLabel::Omega => Some(Variable::E.slot()),
        })
        .collect();
    let ndim = grid.ndim();
    let out: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; ndim],
            |z, flat| {
                grid.point(flat, z);
                let mut vars = [0.0; 4];
                vars[Variable::T.slot()] = t;
                for (v, s) in z.iter().zip(&slots) {
                    if let Some(s) = s {
                        vars[*s] = *v;
                    }
                }
                Complex64::new(c.eval(&vars), 0.0)
            },
        )
        .collect();
    if out.iter().any(|v| !v.re.is_finite()) {
        return Err(Error::Numeric(format!("`{expr}` is not finite somewhere on the grid")));
    }
    Ok(out)
}

fn grid_of(a: &Operand, b: &Operand, grid: &Arc<PhaseGrid>) -> Result<()> {
    a.check_grid(grid)?;
    b.check_grid(grid)
}

fn combine(grid: &Arc<PhaseGrid>, terms: &[(&[Complex64], &[Complex64], f64)]) -> Result<Field> {
    let data = (0..grid.len()).into_par_iter().map(|i| terms.iter().map(|(u, v, s)| u[i] * v[i] * *s).sum()).collect();
    Field::from_data(grid, vec![crate::grid::Rep::Direct; grid.ndim()], data)
}

/// `{A,B} = ∂_x A ∂_p B − ∂_p A ∂_x B`.
pub fn poisson_bracket(a: &Operand, b: &Operand, grid: &Arc<PhaseGrid>, t: f64) -> Result<Field> {
    grid_of(a, b, grid)?;
    let (ax, ap) = (a.partial(Variable::X, grid, t)?, a.partial(Variable::P, grid, t)?);
    let (bx, bp) = (b.partial(Variable::X, grid, t)?, b.partial(Variable::P, grid, t)?);
    combine(grid, &[(&ax, &bp, 1.0), (&ap, &bx, -1.0)])
}

/// `{A,B}* = {A,B} + ∂_E A ∂_t B − ∂_t A ∂_E B`.
pub fn extended_poisson_bracket(a: &Operand, b: &Operand, grid: &Arc<PhaseGrid>, t: f64) -> Result<Field> {
    grid_of(a, b, grid)?;
    let p = |o: &Operand, v| o.partial(v, grid, t);
    let (ax, ap, ae, at) = (p(a, Variable::X)?, p(a, Variable::P)?, p(a, Variable::E)?, p(a, Variable::T)?);
    let (bx, bp, be, bt) = (p(b, Variable::X)?, p(b, Variable::P)?, p(b, Variable::E)?, p(b, Variable::T)?);
    combine(grid, &[(&ax, &bp, 1.0), (&ap, &bx, -1.0), (&ae, &bt, 1.0), (&at, &be, -1.0)])
}

/// Moyal bracket `(A⋆B − B⋆A)/(iħ)` on an `(x, p)` grid.
///
/// Symbol pairs use the terminating derivative series, a symbol against a
/// field uses the shifted-argument form, and two fields use the exact
/// twisted convolution of their Fourier coefficients.
pub fn moyal_bracket(a: &Operand, b: &Operand, grid: &Arc<PhaseGrid>, t: f64, hbar: f64) -> Result<Field> {
    grid_of(a, b, grid)?;
    if grid.ndim() != 2 || !grid.has_axis(AxisLabel::X) || !grid.has_axis(AxisLabel::P) {
        return Err(Error::Grid("the Moyal bracket is defined on (x, p) grids".into()));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::Grid(format!("ħ must be positive, got {hbar}")));
    }
    match (*a, *b) {
        (Operand::Symbol { expr: ea, params: pa }, Operand::Symbol { expr: eb, params: pb }) => {
            let mut params = pa.clone();
            params.extend(pb.iter().map(|(k, v)| (k.clone(), *v)));
            let e = symbolic_moyal_bracket(ea, eb, hbar)?;
            let data = sample_symbol(&e, &params, grid, t)?;
            Field::from_data(grid, vec![crate::grid::Rep::Direct; 2], data)
        }
        (Operand::Symbol { expr, params }, Operand::Sampled { field, .. }) => {
            shifted_bracket(expr, params, field, t, hbar)
        }
        (Operand::Sampled { field, .. }, Operand::Symbol { expr, params }) => {
            Ok(shifted_bracket(expr, params, field, t, hbar)?.map(|c| -c))
        }
        (Operand::Sampled { field: fa, .. }, Operand::Sampled { field: fb, .. }) => twisted_bracket(fa, fb, hbar),
    }
}

/// Normalized Fourier coefficients (synthesis `Σ c_k e^{iκ(u − min)}`) of a
/// 2-D field, with the axis index of x first or second.
fn coefficients(field: &Field) -> Vec<Complex64> {
    let shape = field.grid().shape();
    let mut c = field.data().to_vec();
    fft_axis(&mut c, &shape, 0, FftDirection::Forward);
    fft_axis(&mut c, &shape, 1, FftDirection::Forward);
    let s = 1.0 / c.len() as f64;
    c.iter_mut().for_each(|v| *v *= s);
    c
}

fn synthesize(grid: &Arc<PhaseGrid>, mut c: Vec<Complex64>) -> Result<Field> {
    let shape = grid.shape();
    fft_axis(&mut c, &shape, 0, FftDirection::Inverse);
    fft_axis(&mut c, &shape, 1, FftDirection::Inverse);
    Field::from_data(grid, vec![crate::grid::Rep::Direct; 2], c)
}

/// Effective (λ, θ) for every storage index of a 2-D coefficient array.
fn frequency_pairs(grid: &PhaseGrid) -> Result<Vec<(f64, f64)>> {
    let ix = grid.axis_index(AxisLabel::X)?;
    let shape = grid.shape();
    let c0 = grid.axes()[0].conjugate();
    let c1 = grid.axes()[1].conjugate();
    Ok((0..grid.len())
        .map(|flat| {
            let (f0, f1) = (c0.effective_frequency(flat / shape[1]), c1.effective_frequency(flat % shape[1]));
            if ix == 0 {
                (f0, f1)
            } else {
                (f1, f0)
            }
        })
        .collect())
}

fn twisted_bracket(a: &Field, b: &Field, hbar: f64) -> Result<Field> {
    let grid = a.grid();
    let shape = grid.shape();
    let (n0, n1) = (shape[0], shape[1]);
    let ca = coefficients(a);
    let cb = coefficients(b);
    let freqs = frequency_pairs(grid)?;
    let out: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (k0, k1) = (k / n1, k % n1);
            let mut acc = Complex64::new(0.0, 0.0);
            for j0 in 0..n0 {
                let r0 = (k0 + n0 - j0) % n0;
                for j1 in 0..n1 {
                    let j = j0 * n1 + j1;
                    let r = r0 * n1 + (k1 + n1 - j1) % n1;
                    let (l1, t1) = freqs[j];
                    let (l2, t2) = freqs[r];
                    let m = -(2.0 / hbar) * (0.5 * hbar * (l1 * t2 - t1 * l2)).sin();
                    acc += ca[j] * cb[r] * m;
                }
            }
            acc
        })
        .collect();
    synthesize(grid, out)
}

fn shifted_bracket(expr: &Expr, params: &Params, field: &Field, t: f64, hbar: f64) -> Result<Field> {
    let grid = field.grid();
    let ix = grid.axis_index(AxisLabel::X)?;
    let ip = grid.axis_index(AxisLabel::P)?;
    let sym: CompiledExpr = expr.compile(params)?;
    let cb = coefficients(field);
    let freqs = frequency_pairs(grid)?;
    let phase_freqs: Vec<(f64, f64)> = {
        let shape = grid.shape();
        let c0 = grid.axes()[0].conjugate();
        let c1 = grid.axes()[1].conjugate();
        (0..grid.len()).map(|f| (c0.frequency(f / shape[1]), c1.frequency(f % shape[1]))).collect()
    };
    let mins = (grid.axes()[0].min(), grid.axes()[1].min());
    let active: Vec<usize> = (0..cb.len()).filter(|&k| cb[k].norm() > 0.0).collect();
    let out: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; 2],
            |z, flat| {
                grid.point(flat, z);
                let (x, p) = (z[ix], z[ip]);
                let (u0, u1) = (z[0] - mins.0, z[1] - mins.1);
                let mut acc = Complex64::new(0.0, 0.0);
                for &k in &active {
                    let (lam, th) = freqs[k];
                    let (w0, w1) = phase_freqs[k];
                    let plus = sym.eval(&[x - 0.5 * hbar * th, p + 0.5 * hbar * lam, t, 0.0]);
                    let minus = sym.eval(&[x + 0.5 * hbar * th, p - 0.5 * hbar * lam, t, 0.0]);
                    acc += cb[k] * Complex64::from_polar(1.0, w0 * u0 + w1 * u1) * (plus - minus);
                }
                // Divide by iħ.
                Complex64::new(acc.im, -acc.re) / hbar
            },
        )
        .collect();
    Field::from_data(grid, vec![crate::grid::Rep::Direct; 2], out)
}

fn mixed_partial(e: &Expr, nx: usize, np: usize) -> Expr {
    let mut d = e.clone();
    for _ in 0..nx {
        d = d.diff(Variable::X);
    }
    for _ in 0..np {
        d = d.diff(Variable::P);
    }
    d
}

const MAX_SERIES_ORDER: usize = 41;

/// Closed-form Moyal bracket of two expressions,
/// `Σ_j (−1)^j (ħ/2)^{2j} / (2j+1)! · A P^{2j+1} B` with
/// `P = ←∂_x →∂_p − ←∂_p →∂_x`.
///
/// Fails unless one operand is polynomial in `x` and `p` so the series
/// terminates.
pub fn symbolic_moyal_bracket(a: &Expr, b: &Expr, hbar: f64) -> Result<Expr> {
    let mut total = Expr::num(0.0);
    let mut coefficient = 1.0;
    let mut n = 1;
    while n <= MAX_SERIES_ORDER {
        let mut a_zero = true;
        let mut b_zero = true;
        let mut term = Expr::num(0.0);
        let mut binom = 1.0;
        for r in 0..=n {
            let da = mixed_partial(a, n - r, r);
            let db = mixed_partial(b, r, n - r);
            a_zero &= da.is_zero();
            b_zero &= db.is_zero();
            let piece = mul(Expr::num(binom), mul(da, db));
            term = if r % 2 == 0 { add(term, piece) } else { sub(term, piece) };
            binom = binom * (n - r) as f64 / (r + 1) as f64;
        }
        if a_zero || b_zero {
            return Ok(total);
        }
        total = add(total, mul(Expr::num(coefficient), term));
        let j = n.div_ceil(2);
        coefficient *= -(0.5 * hbar).powi(2) / ((2 * j) as f64 * (2 * j + 1) as f64);
        n += 2;
    }
    Err(Error::Domain(format!(
        "the Moyal series of `{a}` and `{b}` does not terminate; pass one operand as sampled data"
    )))
}
