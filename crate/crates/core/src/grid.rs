//! Periodic spectral grid, the [`Field`] value type and its Fourier transforms.
//!
//! The forward transform is the Riemann-sum approximation of the continuum
//! transform `F f(xi) = int f(x) e^{-i x.xi} dx` (factor `dx^N`), and the
//! inverse carries `(2 pi)^{-N} dxi^N = L^{-N}`, so symbols such as
//! `exp(-t |xi|^theta)` apply without extra constants.
//!
//! Lattice storage is row-major over the multi-index. Along each axis the
//! physical index `n` sits at `x = n dx` (origin at index 0, coordinates read
//! periodically in `[-L/2, L/2)`), and the frequency index `i` carries
//! wavenumber `k = i` for `i < M/2` and `k = i - M` otherwise.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{config_err, param_err, Error, Result};

pub const MAX_DIM: usize = 3;

/// Periodic box `[0, L)^dim` sampled with `points` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    box_length: f64,
    points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, box_length: f64, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(config_err!("dimension {dim} not in 1..={MAX_DIM}"));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(config_err!("box length must be positive, got {box_length}"));
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(config_err!("points per axis must be even and >= 2, got {points}"));
        }
        Ok(Self {
            dim,
            box_length,
            points,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Total number of lattice sites, `M^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    /// Frequency lattice spacing `2 pi / L`.
    pub fn freq_spacing(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Cell volume `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Largest per-axis frequency magnitude, `pi M / L`.
    pub fn axis_nyquist(&self) -> f64 {
        PI * self.points as f64 / self.box_length
    }

    /// Signed wavenumber of a per-axis frequency index.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let m = self.points as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// Signed periodic offset (in cells) of a per-axis physical index.
    pub fn cell_offset(&self, i: usize) -> i64 {
        self.wavenumber(i)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points + (i % self.points))
    }

    /// Frequency vector of a lattice site (unused axes are zero).
    pub fn freq(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let dk = self.freq_spacing();
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = dk * self.wavenumber(mi[axis]) as f64;
        }
        out
    }

    pub fn freq_norm(&self, idx: usize) -> f64 {
        let xi = self.freq(idx);
        xi.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `|xi|` at every lattice site in storage order.
    pub fn freq_norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.freq_norm(i)).collect()
    }

    /// Periodic physical coordinate of a lattice site in `[-L/2, L/2)^dim`.
    pub fn position(&self, idx: usize) -> [f64; MAX_DIM] {
        let mi = self.multi_index(idx);
        let dx = self.spacing();
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = dx * self.cell_offset(mi[axis]) as f64;
        }
        out
    }

    /// Periodic distance from the origin.
    pub fn distance_to_origin(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Whether the site's wavenumber along `axis` is the unpaired `-M/2` mode.
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.multi_index(idx)[axis] == self.points / 2
    }

    /// Flat index of the lattice site holding `-k` for the site holding `k`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let mi = self.multi_index(idx);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = (self.points - mi[axis]) % self.points;
        }
        self.flat_index(&out)
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.points == other.points
            && self.box_length.to_bits() == other.box_length.to_bits()
    }

    /// Same box with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.box_length, self.points * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Physical,
    Frequency,
}

impl Domain {
    pub fn tag(self) -> u8 {
        match self {
            Domain::Physical => 0,
            Domain::Frequency => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Domain::Physical),
            1 => Ok(Domain::Frequency),
            other => Err(Error::Format(format!("unknown domain tag {other}"))),
        }
    }
}

/// Complex samples over a [`GridSpec`] lattice, tagged with their domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
    domain: Domain,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<Complex64>, domain: Domain) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            domain,
        })
    }

    pub fn zeros(grid: GridSpec, domain: Domain) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            domain,
        }
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            Domain::Physical,
        )
    }

    /// Samples a real function of the periodic position (see [`GridSpec::position`]).
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| Complex64::new(f(&grid.position(i)[..grid.dim()]), 0.0))
            .collect();
        Self {
            grid,
            values,
            domain: Domain::Physical,
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(c, 0.0); grid.len()],
            domain: Domain::Physical,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// Drops imaginary parts.
    pub fn to_real(&self) -> Field {
        self.map(|v| Complex64::new(v.re, 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            domain: self.domain,
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        self.expect_compatible(other)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            domain: self.domain,
        })
    }

    pub fn expect_domain(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::Contract(format!(
                "expected {domain:?} field, got {:?}",
                self.domain
            )));
        }
        Ok(())
    }

    pub fn expect_grid(&self, grid: &GridSpec) -> Result<()> {
        if !self.grid.same_as(grid) {
            return Err(Error::Contract(format!(
                "grid mismatch: field on {:?}, expected {:?}",
                self.grid, grid
            )));
        }
        Ok(())
    }

    fn expect_compatible(&self, other: &Field) -> Result<()> {
        self.expect_grid(&other.grid)?;
        if self.domain != other.domain {
            return Err(Error::Contract("mixing physical and frequency fields".into()));
        }
        Ok(())
    }

    /// Riemann-sum inner product `sum dx^N f conj(g)` of two physical fields.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        self.expect_compatible(other)?;
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Largest `|F(xi) - conj(F(-xi))|` relative to `max |F|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let defect = (0..self.values.len()).fold(0.0f64, |m, i| {
            let j = self.grid.mirror_index(i);
            m.max((self.values[i] - self.values[j].conj()).norm())
        });
        defect / scale
    }
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan_cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let forward = direction == FftDirection::Forward;
    let mut cache = plan_cache().lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry((len, forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Unnormalized N-d DFT in place (`sum_n a_n e^{-+ 2 pi i k n / M}` per axis).
pub(crate) fn dft_in_place(values: &mut [Complex64], grid: &GridSpec, direction: FftDirection) {
    let m = grid.points();
    let fft = plan(m, direction);
    // Last axis: contiguous lines.
    fft.process(values);
    if grid.dim() == 1 {
        return;
    }
    let total = values.len();
    let mut lines = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..grid.dim() - 1 {
        let stride = m.pow((grid.dim() - 1 - axis) as u32);
        let block = m * stride;
        let outer = total / block;
        let mut line = 0;
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * block + inner;
                for i in 0..m {
                    lines[line * m + i] = values[base + i * stride];
                }
                line += 1;
            }
        }
        fft.process(&mut lines);
        line = 0;
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * block + inner;
                for i in 0..m {
                    values[base + i * stride] = lines[line * m + i];
                }
                line += 1;
            }
        }
    }
}

/// Continuum-normalized forward transform.
pub fn forward_transform(f: &Field) -> Result<Field> {
    f.expect_domain(Domain::Physical)?;
    let grid = *f.grid();
    let mut values = f.values().to_vec();
    dft_in_place(&mut values, &grid, FftDirection::Forward);
    let w = grid.cell_volume();
    values.iter_mut().for_each(|v| *v *= w);
    Field::new(grid, values, Domain::Frequency)
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform(f: &Field) -> Result<Field> {
    f.expect_domain(Domain::Frequency)?;
    let grid = *f.grid();
    let mut values = f.values().to_vec();
    dft_in_place(&mut values, &grid, FftDirection::Inverse);
    let w = grid.box_length().powi(grid.dim() as i32).recip();
    values.iter_mut().for_each(|v| *v *= w);
    Field::new(grid, values, Domain::Physical)
}

/// Multiplies frequency data by a per-site factor and returns to physical space.
pub(crate) fn apply_lattice_multiplier(
    spectrum: &Field,
    factor: impl Fn(usize) -> Complex64,
) -> Result<Field> {
    let mut out = spectrum.clone();
    out.values_mut()
        .iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v *= factor(i));
    inverse_transform(&out)
}

/// `d f / d x_axis` as `F^{-1}(i xi_axis F f)` with the Nyquist mode dropped.
pub fn spectral_gradient(f: &Field, axis: usize) -> Result<Field> {
    let grid = *f.grid();
    if axis >= grid.dim() {
        return Err(param_err!("axis {axis} out of range for dimension {}", grid.dim()));
    }
    let spectrum = forward_transform(f)?;
    apply_lattice_multiplier(&spectrum, |i| {
        if grid.is_nyquist(i, axis) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.freq(i)[axis])
        }
    })
}

/// All gradient components of a physical field.
pub fn spectral_gradients(f: &Field) -> Result<Vec<Field>> {
    let grid = *f.grid();
    let spectrum = forward_transform(f)?;
    (0..grid.dim())
        .map(|axis| {
            apply_lattice_multiplier(&spectrum, |i| {
                if grid.is_nyquist(i, axis) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, grid.freq(i)[axis])
                }
            })
        })
        .collect()
}

/// Pointwise Euclidean norm of a list of component fields, as a real field.
pub fn pointwise_magnitude(components: &[Field]) -> Result<Field> {
    let first = components
        .first()
        .ok_or_else(|| param_err!("no components given"))?;
    let mut acc = vec![0.0f64; first.values().len()];
    for c in components {
        c.expect_grid(first.grid())?;
        for (a, v) in acc.iter_mut().zip(c.values()) {
            *a += v.norm_sqr();
        }
    }
    let vals: Vec<f64> = acc.into_iter().map(f64::sqrt).collect();
    Field::from_real(*first.grid(), &vals)
}
