//! Discretized phase-space axes, complex fields over them, and the unitary
//! spectral transforms that switch an axis between its direct variable
//! (x, p, Ω) and the conjugate variable (λ, θ, τ).
//!
//! Conventions: the analysis kernel is `e^{-iκu}` and the synthesis kernel
//! `e^{+iκu}`, both scaled by `1/√n`, so that `-i∂_u` acting on a direct
//! field is multiplication by `κ` in the conjugate representation. Conjugate
//! data is stored in the usual FFT order (zero frequency first); the centered
//! ladder is what [`ConjugateAxis::samples`] reports.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of a direct phase-space axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    X,
    P,
    Omega,
}

impl AxisLabel {
    pub fn name(self) -> &'static str {
        match self {
            AxisLabel::X => "x",
            AxisLabel::P => "p",
            AxisLabel::Omega => "omega",
        }
    }

    /// Name of the conjugate variable paired with this axis.
    pub fn conjugate_name(self) -> &'static str {
        match self {
            AxisLabel::X => "lambda",
            AxisLabel::P => "theta",
            AxisLabel::Omega => "tau",
        }
    }

    pub fn parse(s: &str) -> Option<AxisLabel> {
        match s {
            "x" => Some(AxisLabel::X),
            "p" => Some(AxisLabel::P),
            "omega" | "Omega" | "E" => Some(AxisLabel::Omega),
            _ => None,
        }
    }
}

impl fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// User-facing description of one axis: `n` samples covering `[min, max)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub label: AxisLabel,
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

impl AxisSpec {
    pub fn new(label: AxisLabel, n: usize, min: f64, max: f64) -> Self {
        AxisSpec { label, n, min, max }
    }
}

/// A uniformly sampled periodic axis. Sample `j` sits at `min + j * spacing`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    label: AxisLabel,
    n: usize,
    min: f64,
    max: f64,
}

impl Axis {
    pub fn new(spec: &AxisSpec) -> Result<Axis> {
        let AxisSpec { label, n, min, max } = *spec;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("axis {label}: sample count {n} must be a power of two and at least 8")));
        }
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::Grid(format!("axis {label}: bounds [{min}, {max}] must be finite with min < max")));
        }
        Ok(Axis { label, n, min, max })
    }

    pub fn label(&self) -> AxisLabel {
        self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    #[inline]
    pub fn sample(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.sample(j)).collect()
    }

    pub fn spec(&self) -> AxisSpec {
        AxisSpec::new(self.label, self.n, self.min, self.max)
    }

    pub fn conjugate(&self) -> ConjugateAxis {
        ConjugateAxis { label: self.label, n: self.n, spacing: 2.0 * PI / (self.n as f64 * self.spacing()) }
    }
}

/// The discrete frequency ladder paired with an [`Axis`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugateAxis {
    label: AxisLabel,
    n: usize,
    spacing: f64,
}

impl ConjugateAxis {
    /// Label of the direct axis this ladder is paired with.
    pub fn direct_label(&self) -> AxisLabel {
        self.label
    }

    pub fn name(&self) -> &'static str {
        self.label.conjugate_name()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Storage index of the single unpaired extreme frequency `-n/2`.
    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Frequency held at storage index `k` (FFT order).
    #[inline]
    pub fn frequency(&self, k: usize) -> f64 {
        signed_index(k, self.n) as f64 * self.spacing
    }

    /// Frequency used by multipliers: identical to [`frequency`](Self::frequency)
    /// except that the unpaired Nyquist mode is mapped to zero, which keeps
    /// every multiplier Hermitian-symmetric.
    #[inline]
    pub fn effective_frequency(&self, k: usize) -> f64 {
        if k == self.n / 2 {
            0.0
        } else {
            self.frequency(k)
        }
    }

    /// Centered ladder `-n/2 .. n/2 - 1`, times the spacing.
    pub fn samples(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|k| k as f64 * self.spacing).collect()
    }

    /// Maps a position in the centered ladder to the storage index.
    pub fn storage_index(&self, centered: usize) -> usize {
        (centered + self.n / 2) % self.n
    }
}

#[inline]
pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Ordered set of axes plus the action constant ħ.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    axes: Vec<Axis>,
    hbar: f64,
}

/// Builds a grid and validates every axis.
pub fn make_grid(specs: &[AxisSpec], hbar: f64) -> Result<Arc<PhaseGrid>> {
    PhaseGrid::new(specs, hbar).map(Arc::new)
}

impl PhaseGrid {
    pub fn new(specs: &[AxisSpec], hbar: f64) -> Result<PhaseGrid> {
        if specs.is_empty() {
            return Err(Error::Grid("a grid needs at least one axis".into()));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Grid(format!("hbar must be positive, got {hbar}")));
        }
        let mut axes: Vec<Axis> = Vec::with_capacity(specs.len());
        for spec in specs {
            if axes.iter().any(|a| a.label == spec.label) {
                return Err(Error::Grid(format!("duplicate axis label `{}`", spec.label)));
            }
            axes.push(Axis::new(spec)?);
        }
        Ok(PhaseGrid { axes, hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Same axes, different ħ.
    pub fn with_hbar(&self, hbar: f64) -> Result<PhaseGrid> {
        PhaseGrid::new(&self.specs(), hbar)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn specs(&self) -> Vec<AxisSpec> {
        self.axes.iter().map(Axis::spec).collect()
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn has_axis(&self, label: AxisLabel) -> bool {
        self.axes.iter().any(|a| a.label == label)
    }

    pub fn axis_index(&self, label: AxisLabel) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::Grid(format!("grid has no `{label}` axis")))
    }

    pub fn axis(&self, label: AxisLabel) -> Result<&Axis> {
        self.axis_index(label).map(|i| &self.axes[i])
    }

    pub fn labels(&self) -> Vec<AxisLabel> {
        self.axes.iter().map(|a| a.label).collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element of the midpoint quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Row-major stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape())
    }

    /// Splits a flat index into per-axis indices.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = flat % axis.n;
            flat /= axis.n;
        }
    }

    /// Direct-space coordinates of the point at `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut rest = flat;
        for (slot, axis) in out.iter_mut().zip(&self.axes).rev() {
            *slot = axis.sample(rest % axis.n);
            rest /= axis.n;
        }
    }

    /// Grid with one axis removed; ħ is kept.
    pub fn without_axis(&self, label: AxisLabel) -> Result<PhaseGrid> {
        self.axis_index(label)?;
        let specs: Vec<AxisSpec> = self.specs().into_iter().filter(|s| s.label != label).collect();
        PhaseGrid::new(&specs, self.hbar)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

/// Representation of one axis of a [`Field`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Direct,
    Conjugate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToConjugate,
    ToDirect,
}

/// Complex samples over a [`PhaseGrid`], row-major in declared axis order.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<PhaseGrid>,
    reps: Vec<Rep>,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Arc<PhaseGrid>) -> Field {
        Field {
            grid: Arc::clone(grid),
            reps: vec![Rep::Direct; grid.ndim()],
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_data(grid: &Arc<PhaseGrid>, reps: Vec<Rep>, data: Vec<Complex64>) -> Result<Field> {
        if reps.len() != grid.ndim() {
            return Err(Error::Grid(format!("{} representation tags for a {}-axis grid", reps.len(), grid.ndim())));
        }
        if data.len() != grid.len() {
            return Err(Error::Grid(format!("data length {} does not match grid size {}", data.len(), grid.len())));
        }
        Ok(Field { grid: Arc::clone(grid), reps, data })
    }

    /// All-direct field sampled from a function of the point coordinates.
    pub fn from_fn<F>(grid: &Arc<PhaseGrid>, f: F) -> Field
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let ndim = grid.ndim();
        let data = (0..grid.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; ndim],
                |coords, flat| {
                    grid.point(flat, coords);
                    f(coords)
                },
            )
            .collect();
        Field { grid: Arc::clone(grid), reps: vec![Rep::Direct; ndim], data }
    }

    pub fn from_real_fn<F>(grid: &Arc<PhaseGrid>, f: F) -> Field
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Field::from_fn(grid, |c| Complex64::new(f(c), 0.0))
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn reps(&self) -> &[Rep] {
        &self.reps
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_all_direct(&self) -> bool {
        self.reps.iter().all(|r| *r == Rep::Direct)
    }

    pub(crate) fn require_all_direct(&self, what: &str) -> Result<()> {
        if self.is_all_direct() {
            Ok(())
        } else {
            Err(Error::Representation(format!("{what} requires an all-direct field")))
        }
    }

    pub(crate) fn require_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Grid("fields live on different grids".into()))
        }
    }

    /// Real parts as a plain vector.
    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.re).collect()
    }

    /// Largest |Im| over all samples.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    /// Elementwise map; representation tags are kept.
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Field {
            grid: Arc::clone(&self.grid),
            reps: self.reps.clone(),
            data: self.data.par_iter().map(|&c| f(c)).collect(),
        }
    }

    /// Coordinate of storage index `j` along axis `axis` in the field's
    /// current representation of that axis.
    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        let a = &self.grid.axes()[axis];
        match self.reps[axis] {
            Rep::Direct => a.sample(j),
            Rep::Conjugate => a.conjugate().frequency(j),
        }
    }

    /// Unitary transform of one axis between direct and conjugate
    /// representations.
    pub fn transform(&self, label: AxisLabel, direction: Direction) -> Result<Field> {
        let k = self.grid.axis_index(label)?;
        let (from, to) = match direction {
            Direction::ToConjugate => (Rep::Direct, Rep::Conjugate),
            Direction::ToDirect => (Rep::Conjugate, Rep::Direct),
        };
        if self.reps[k] != from {
            return Err(Error::Representation(format!(
                "axis {label} is already in the {} representation",
                if to == Rep::Direct { "direct" } else { "conjugate" }
            )));
        }
        let axis = &self.grid.axes()[k];
        let shape = self.grid.shape();
        let mut data = self.data.clone();
        let n = axis.n();
        let inner: usize = shape[k + 1..].iter().product();
        let conj = axis.conjugate();
        let scale = 1.0 / (n as f64).sqrt();
        // e^{∓iκ·min} makes the transform refer to the physical coordinate
        // instead of the sample index.
        let sign = if direction == Direction::ToConjugate { -1.0 } else { 1.0 };
        let phases: Vec<Complex64> =
            (0..n).map(|j| Complex64::from_polar(scale, sign * conj.frequency(j) * axis.min())).collect();
        if direction == Direction::ToDirect {
            apply_axis_factor(&mut data, n, inner, &phases);
        }
        let fft_dir = match direction {
            Direction::ToConjugate => FftDirection::Forward,
            Direction::ToDirect => FftDirection::Inverse,
        };
        fft_axis(&mut data, &shape, k, fft_dir);
        if direction == Direction::ToConjugate {
            apply_axis_factor(&mut data, n, inner, &phases);
        }
        let mut reps = self.reps.clone();
        reps[k] = to;
        Ok(Field { grid: Arc::clone(&self.grid), reps, data })
    }

    /// `-i ∂` along one direct axis, via transform, multiplication by the
    /// conjugate variable and inverse transform.
    pub fn spectral_derivative(&self, label: AxisLabel) -> Result<Field> {
        let k = self.grid.axis_index(label)?;
        if self.reps[k] != Rep::Direct {
            return Err(Error::Representation(format!(
                "spectral derivative along {label} needs the direct representation"
            )));
        }
        let axis = &self.grid.axes()[k];
        let n = axis.n();
        let conj = axis.conjugate();
        let inv_n = 1.0 / n as f64;
        let factor: Vec<Complex64> = (0..n).map(|j| Complex64::new(conj.effective_frequency(j) * inv_n, 0.0)).collect();
        let shape = self.grid.shape();
        let inner: usize = shape[k + 1..].iter().product();
        let mut data = self.data.clone();
        fft_axis(&mut data, &shape, k, FftDirection::Forward);
        apply_axis_factor(&mut data, n, inner, &factor);
        fft_axis(&mut data, &shape, k, FftDirection::Inverse);
        Ok(Field { grid: Arc::clone(&self.grid), reps: self.reps.clone(), data })
    }

    /// Ordinary derivative `∂` along one axis (`i` times the spectral `-i∂`).
    pub fn derivative(&self, label: AxisLabel) -> Result<Field> {
        let d = self.spectral_derivative(label)?;
        Ok(d.map(|c| Complex64::new(-c.im, c.re)))
    }
}

/// Multiplies every sample by `factor[j]`, where `j` is its index along the
/// axis with extent `n` and row-major inner stride `inner`.
pub(crate) fn apply_axis_factor(data: &mut [Complex64], n: usize, inner: usize, factor: &[Complex64]) {
    data.par_chunks_mut(n * inner).for_each(|block| {
        for (j, row) in block.chunks_mut(inner).enumerate() {
            let f = factor[j];
            for c in row {
                *c *= f;
            }
        }
    });
}

/// Unnormalized in-place FFT of every line along `axis`.
pub(crate) fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, direction: FftDirection) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let fft = FftPlanner::<f64>::new().plan_fft(n, direction);
    let scratch_len = fft.get_inplace_scratch_len();

    if inner == 1 {
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, line| fft.process_with_scratch(line, scratch),
        );
        return;
    }

    // Columns of each contiguous (n × inner) block are gathered in groups,
    // transformed, and scattered back.
    const GROUP: usize = 16;
    let block_len = n * inner;
    data.par_chunks_mut(block_len).for_each(|block| {
        let groups: Vec<(usize, Vec<Complex64>)> = (0..inner)
            .into_par_iter()
            .step_by(GROUP)
            .map_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, start| {
                    let width = GROUP.min(inner - start);
                    let mut buf = vec![Complex64::new(0.0, 0.0); width * n];
                    for c in 0..width {
                        let line = &mut buf[c * n..(c + 1) * n];
                        for (j, slot) in line.iter_mut().enumerate() {
                            *slot = block[j * inner + start + c];
                        }
                        fft.process_with_scratch(line, scratch);
                    }
                    (start, buf)
                },
            )
            .collect();
        for (start, buf) in groups {
            let width = buf.len() / n;
            for c in 0..width {
                for j in 0..n {
                    block[j * inner + start + c] = buf[c * n + j];
                }
            }
        }
    });
}
