//! Hamiltonian trajectories by fixed-step fourth-order Runge–Kutta.
//!
//! The ordinary flow integrates `ẋ = ∂_p H`, `ṗ = −∂_x H`. The extended
//! flow adds the energy coordinate and time, `Ė = ∂_t H` and `ṫ = 1`, with
//! evolution parameter `s`. Derivatives come from the symbolic engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{HamiltonianModel, ModelFunctions};
use crate::observables::QuadraturePoint;

/// Sample of an ordinary trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub p: f64,
}

/// Point `(x, p, E, t)` of the extended phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub x: f64,
    pub p: f64,
    pub e: f64,
    pub t: f64,
}

impl ExtendedState {
    pub fn new(x: f64, p: f64, e: f64, t: f64) -> Result<ExtendedState> {
        let s = ExtendedState { x, p, e, t };
        if [x, p, e, t].iter().all(|v| v.is_finite()) {
            Ok(s)
        } else {
            Err(Error::State(format!("extended state is not finite: {s:?}")))
        }
    }
}

/// `H̃ = H(x, p, t) − E`.
#[derive(Clone, Debug)]
pub struct ExtendedHamiltonian {
    fns: ModelFunctions,
}

impl ExtendedHamiltonian {
    pub fn new(model: &HamiltonianModel) -> Result<ExtendedHamiltonian> {
        Ok(ExtendedHamiltonian { fns: model.functions()? })
    }

    pub fn value(&self, s: &ExtendedState) -> f64 {
        self.fns.h(s.x, s.p, s.t) - s.e
    }
}

/// Uniform step count and size covering `[a, b]` with steps no longer
/// than `|h|`.
fn steps(a: f64, b: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) || !a.is_finite() || !b.is_finite() {
        return Err(Error::State(format!("invalid integration interval [{a}, {b}] with step {h}")));
    }
    let span = b - a;
    if span == 0.0 {
        return Ok((0, 0.0));
    }
    let n = ((span.abs() / h) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

#[inline]
fn rk4<const N: usize>(y: [f64; N], s: f64, h: f64, f: impl Fn(&[f64; N], f64) -> [f64; N]) -> [f64; N] {
    let shift = |y: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    let k1 = f(&y, s);
    let k2 = f(&shift(&y, &k1, 0.5 * h), s + 0.5 * h);
    let k3 = f(&shift(&y, &k2, 0.5 * h), s + 0.5 * h);
    let k4 = f(&shift(&y, &k3, h), s + h);
    let mut out = y;
    for i in 0..N {
        out[i] += h * ((k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
    }
    out
}

fn ordinary_path(fns: &ModelFunctions, x0: f64, p0: f64, t0: f64, t1: f64, dt: f64) -> Result<Vec<PhasePoint>> {
    let (n, h) = steps(t0, t1, dt)?;
    let rhs = |y: &[f64; 2], t: f64| [fns.dh_dp(y[1], t), -fns.dh_dx(y[0], t)];
    let mut out = Vec::with_capacity(n + 1);
    let mut y = [x0, p0];
    out.push(PhasePoint { t: t0, x: x0, p: p0 });
    for k in 0..n {
        let t = t0 + k as f64 * h;
        y = rk4(y, t, h, rhs);
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::Numeric(format!("trajectory from ({x0}, {p0}) left the finite range at t = {t}")));
        }
        let t_next = if k + 1 == n { t1 } else { t0 + (k + 1) as f64 * h };
        out.push(PhasePoint { t: t_next, x: y[0], p: y[1] });
    }
    Ok(out)
}

/// Ordinary trajectory from `(x0, p0)` at `t0` to `t1`, sampled at every
/// step. Backward integration (`t1 < t0`) is allowed.
pub fn integrate_ordinary(
    model: &HamiltonianModel,
    x0: f64,
    p0: f64,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<PhasePoint>> {
    ordinary_path(&model.functions()?, x0, p0, t0, t1, dt)
}

/// Extended trajectory over evolution parameter `s ∈ [s0, s1]`, returned as
/// `(s, state)` samples.
pub fn integrate_extended(
    model: &HamiltonianModel,
    state0: ExtendedState,
    s0: f64,
    s1: f64,
    ds: f64,
) -> Result<Vec<(f64, ExtendedState)>> {
    let state0 = ExtendedState::new(state0.x, state0.p, state0.e, state0.t)?;
    let fns = model.functions()?;
    let (n, h) = steps(s0, s1, ds)?;
    let rhs = |y: &[f64; 4], _s: f64| [fns.dh_dp(y[1], y[3]), -fns.dh_dx(y[0], y[3]), fns.dh_dt(y[0], y[1], y[3]), 1.0];
    let mut y = [state0.x, state0.p, state0.e, state0.t];
    let mut out = Vec::with_capacity(n + 1);
    out.push((s0, state0));
    for k in 0..n {
        let s = s0 + k as f64 * h;
        y = rk4(y, s, h, rhs);
        let s_next = if k + 1 == n { s1 } else { s0 + (k + 1) as f64 * h };
        // RK4 advances `t` by exactly `h`; pinning it removes summation drift.
        y[3] = state0.t + (s_next - s0);
        let state = ExtendedState::new(y[0], y[1], y[2], y[3])
            .map_err(|_| Error::Numeric(format!("extended trajectory left the finite range at s = {s}")))?;
        out.push((s_next, state));
    }
    Ok(out)
}

/// Images `g^t(y)` of a cloud of `(x, p)` points under the flow from `t0`
/// to `t1`.
pub fn transport_domain(
    model: &HamiltonianModel,
    points: &[(f64, f64)],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let fns = model.functions()?;
    points
        .par_iter()
        .map(|&(x, p)| {
            let path = ordinary_path(&fns, x, p, t0, t1, dt)?;
            let end = path.last().expect("a path has at least its start");
            Ok((end.x, end.p))
        })
        .collect()
}

/// Transports a quadrature rule. Hamiltonian flows preserve phase-space
/// volume, so weights carry over unchanged.
pub fn transport_quadrature(
    model: &HamiltonianModel,
    rule: &[QuadraturePoint],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<QuadraturePoint>> {
    let pts: Vec<(f64, f64)> = rule.iter().map(|q| (q.x, q.p)).collect();
    let moved = transport_domain(model, &pts, t0, t1, dt)?;
    Ok(moved.into_iter().zip(rule).map(|((x, p), q)| QuadraturePoint { x, p, weight: q.weight }).collect())
}

/// Area of the convex hull of a planar point cloud (monotone chain).
pub fn convex_hull_area(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        .abs()
        * 0.5
}
