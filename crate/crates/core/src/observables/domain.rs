use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_axis, AxisLabel, Field};

/// Samples at or below this value contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Largest negativity tolerated before the entropy is declared undefined.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Rectangle { x: (f64, f64), p: (f64, f64) },
    Disc { center: (f64, f64), radius: f64 },
}

/// Region `G` of the `(x, p)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub region: Region,
    pub label: String,
}

/// Weighted sample point of a quadrature rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraturePoint {
    pub x: f64,
    pub p: f64,
    pub weight: f64,
}

impl DomainSpec {
    pub fn disc(label: &str, center: (f64, f64), radius: f64) -> DomainSpec {
        DomainSpec { region: Region::Disc { center, radius }, label: label.into() }
    }

    pub fn rectangle(label: &str, x: (f64, f64), p: (f64, f64)) -> DomainSpec {
        DomainSpec { region: Region::Rectangle { x, p }, label: label.into() }
    }

    pub fn contains(&self, x: f64, p: f64) -> bool {
        match self.region {
            Region::Rectangle { x: (x0, x1), p: (p0, p1) } => x >= x0 && x <= x1 && p >= p0 && p <= p1,
            Region::Disc { center: (cx, cp), radius } => (x - cx).powi(2) + (p - cp).powi(2) <= radius * radius,
        }
    }

    pub fn area(&self) -> f64 {
        match self.region {
            Region::Rectangle { x: (x0, x1), p: (p0, p1) } => (x1 - x0) * (p1 - p0),
            Region::Disc { radius, .. } => PI * radius * radius,
        }
    }

    /// Tensor-product rule: Gauss–Legendre in radius (or x) with `n_a`
    /// nodes, and either `n_b` uniform angles or `n_b` Gauss–Legendre nodes
    /// in p. Exact for smooth integrands up to the rule's order.
    pub fn quadrature(&self, n_a: usize, n_b: usize) -> Vec<QuadraturePoint> {
        let (ga, wa) = gauss_legendre(n_a);
        let mut out = Vec::with_capacity(n_a * n_b);
        match self.region {
            Region::Disc { center: (cx, cp), radius } => {
                let dphi = 2.0 * PI / n_b as f64;
                for (u, w) in ga.iter().zip(&wa) {
                    let r = 0.5 * radius * (u + 1.0);
                    let wr = 0.5 * radius * w * r * dphi;
                    for j in 0..n_b {
                        let phi = j as f64 * dphi;
                        out.push(QuadraturePoint { x: cx + r * phi.cos(), p: cp + r * phi.sin(), weight: wr });
                    }
                }
            }
            Region::Rectangle { x: (x0, x1), p: (p0, p1) } => {
                let (gb, wb) = gauss_legendre(n_b);
                let (hx, hp) = (0.5 * (x1 - x0), 0.5 * (p1 - p0));
                for (u, w) in ga.iter().zip(&wa) {
                    for (v, q) in gb.iter().zip(&wb) {
                        out.push(QuadraturePoint {
                            x: x0 + hx * (u + 1.0),
                            p: p0 + hp * (v + 1.0),
                            weight: hx * hp * w * q,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Indices of the x and p axes, rejecting fields not in the direct
/// representation.
fn xp_axes(field: &Field) -> Result<(usize, usize)> {
    field.require_all_direct("a domain functional")?;
    Ok((field.grid().axis_index(AxisLabel::X)?, field.grid().axis_index(AxisLabel::P)?))
}

/// Grid samples whose `(x, p)` projection lies in the domain.
fn domain_samples(field: &Field, domain: &DomainSpec) -> Result<Vec<f64>> {
    let (ix, ip) = xp_axes(field)?;
    let grid = field.grid();
    let ndim = grid.ndim();
    let values: Vec<f64> = field
        .data()
        .par_iter()
        .enumerate()
        .map_init(
            || vec![0.0; ndim],
            |z, (flat, c)| {
                grid.point(flat, z);
                domain.contains(z[ix], z[ip]).then_some(c.re)
            },
        )
        .flatten()
        .collect();
    if values.is_empty() {
        return Err(Error::Domain(format!("domain `{}` contains no grid points", domain.label)));
    }
    Ok(values)
}

fn entropy_density(values: &[f64], what: &str) -> Result<Vec<f64>> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVITY_TOLERANCE {
        return Err(Error::Domain(format!(
            "entropy is undefined on {what}: the distribution reaches {min:e} (quantum negativity)"
        )));
    }
    Ok(values.iter().map(|&f| if f <= ENTROPY_FLOOR { 0.0 } else { -f * f.ln() }).collect())
}

/// `P_G = ∫_G f` using the grid indicator of `G`.
pub fn probability_over_domain(field: &Field, domain: &DomainSpec) -> Result<f64> {
    let values = domain_samples(field, domain)?;
    Ok(values.iter().sum::<f64>() * field.grid().cell_volume())
}

/// `S_G = −∫_G f ln f` using the grid indicator of `G`.
pub fn entropy_over_domain(field: &Field, domain: &DomainSpec) -> Result<f64> {
    let values = domain_samples(field, domain)?;
    let s = entropy_density(&values, &format!("domain `{}`", domain.label))?;
    Ok(s.iter().sum::<f64>() * field.grid().cell_volume())
}

/// `∫ f` over a (possibly transported) quadrature rule, with `f`
/// evaluated by spectral interpolation.
pub fn probability_over_points(field: &Field, points: &[QuadraturePoint]) -> Result<f64> {
    let interp = SpectralInterpolator::new(field)?;
    let values = interp.eval_many(points.iter().map(|q| (q.x, q.p)));
    Ok(values.iter().zip(points).map(|(f, q)| f * q.weight).sum())
}

/// `−∫ f ln f` over a quadrature rule, with `f` interpolated spectrally.
pub fn entropy_over_points(field: &Field, points: &[QuadraturePoint]) -> Result<f64> {
    let interp = SpectralInterpolator::new(field)?;
    let values = interp.eval_many(points.iter().map(|q| (q.x, q.p)));
    let s = entropy_density(&values, "the transported domain")?;
    Ok(s.iter().zip(points).map(|(v, q)| v * q.weight).sum())
}

/// Trigonometric interpolant of a real field over an `(x, p)` grid.
///
/// The unpaired Nyquist mode is interpolated as a cosine so the
/// interpolant stays real.
pub struct SpectralInterpolator {
    coeffs: Vec<Complex64>,
    axes: [(f64, Vec<f64>, usize); 2],
    x_first: bool,
}

impl SpectralInterpolator {
    pub fn new(field: &Field) -> Result<SpectralInterpolator> {
        let (ix, ip) = xp_axes(field)?;
        let grid = field.grid();
        if grid.ndim() != 2 {
            return Err(Error::Grid("spectral interpolation needs an (x, p) grid".into()));
        }
        let shape = grid.shape();
        let mut coeffs = field.data().to_vec();
        fft_axis(&mut coeffs, &shape, 0, FftDirection::Forward);
        fft_axis(&mut coeffs, &shape, 1, FftDirection::Forward);
        let scale = 1.0 / grid.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        let axis = |k: usize| {
            let a = &grid.axes()[k];
            let c = a.conjugate();
            (a.min(), (0..a.n()).map(|j| c.frequency(j)).collect::<Vec<_>>(), c.nyquist_index())
        };
        Ok(SpectralInterpolator { coeffs, axes: [axis(0), axis(1)], x_first: ix == 0 && ip == 1 })
    }

    fn basis(&self, which: usize, u: f64) -> Vec<Complex64> {
        let (min, freqs, nyq) = &self.axes[which];
        freqs
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                if k == *nyq {
                    Complex64::new((w * (u - min)).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, w * (u - min))
                }
            })
            .collect()
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        let (a, b) = if self.x_first { (x, p) } else { (p, x) };
        let ea = self.basis(0, a);
        let eb = self.basis(1, b);
        let n1 = eb.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, row) in self.coeffs.chunks(n1).enumerate() {
            let inner: Complex64 = row.iter().zip(&eb).map(|(c, e)| c * e).sum();
            acc += ea[j] * inner;
        }
        acc.re
    }

    pub fn eval_many(&self, points: impl IntoIterator<Item = (f64, f64)>) -> Vec<f64> {
        let pts: Vec<(f64, f64)> = points.into_iter().collect();
        pts.par_iter().map(|&(x, p)| self.eval(x, p)).collect()
    }
}
