//! Fractional heat semigroup `S(t)`, its gradient variant and generic Fourier
//! multipliers, with the kernel and smoothing diagnostics built on them.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{param_err, Error, Result};
use crate::grid::{
    apply_lattice_multiplier, forward_transform, inverse_transform, Domain, Field, GridSpec,
    MAX_DIM,
};
use crate::lp::{low_pass_symbol, LpBank};
use crate::norms::{besov_morrey_norm, MorreyGridPolicy, SpaceParams, SumKind};

/// `|xi|^theta`, taken as exactly 0 at the origin for every `theta > 0`.
pub fn fractional_symbol(xi_norm: f64, theta: f64) -> f64 {
    if xi_norm == 0.0 {
        0.0
    } else {
        xi_norm.powf(theta)
    }
}

pub type CustomSymbol = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A Fourier multiplier `P(xi)`.
#[derive(Clone)]
pub enum Symbol {
    /// `exp(-t |xi|^theta)`.
    Heat { theta: f64, t: f64 },
    /// `i xi_axis exp(-t |xi|^theta)`.
    GradHeat { theta: f64, t: f64, axis: usize },
    Custom(CustomSymbol),
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Heat { theta, t } => write!(f, "Heat {{ theta: {theta}, t: {t} }}"),
            Symbol::GradHeat { theta, t, axis } => {
                write!(f, "GradHeat {{ theta: {theta}, t: {t}, axis: {axis} }}")
            }
            Symbol::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Symbol {
    pub fn heat(theta: f64, t: f64) -> Self {
        Symbol::Heat { theta, t }
    }

    pub fn custom(f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        Symbol::Custom(Arc::new(f))
    }

    /// `|xi|^m`.
    pub fn homogeneous(m: f64) -> Self {
        Self::custom(move |xi| {
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            Complex64::new(fractional_symbol(r, m), 0.0)
        })
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match *self {
            Symbol::Heat { theta, t } | Symbol::GradHeat { theta, t, .. } => {
                if !(theta.is_finite() && theta > 0.0) {
                    return Err(param_err!("theta must be positive, got {theta}"));
                }
                if !(t.is_finite() && t >= 0.0) {
                    return Err(param_err!("time must be nonnegative, got {t}"));
                }
            }
            Symbol::Custom(_) => {}
        }
        if let Symbol::GradHeat { axis, .. } = *self {
            if axis >= dim {
                return Err(param_err!("axis {axis} out of range for dimension {dim}"));
            }
        }
        Ok(())
    }

    /// Symbol value at a continuum frequency vector.
    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let r = || xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        match *self {
            Symbol::Heat { theta, t } => Complex64::new((-t * fractional_symbol(r(), theta)).exp(), 0.0),
            Symbol::GradHeat { theta, t, axis } => {
                Complex64::new(0.0, xi[axis] * (-t * fractional_symbol(r(), theta)).exp())
            }
            Symbol::Custom(ref f) => f(xi),
        }
    }

    /// Symbol sampled on a lattice; odd (gradient) symbols drop the Nyquist mode.
    pub fn on_lattice(&self, grid: &GridSpec) -> Vec<Complex64> {
        (0..grid.len())
            .map(|i| {
                if let Symbol::GradHeat { axis, .. } = *self {
                    if grid.is_nyquist(i, axis) {
                        return Complex64::new(0.0, 0.0);
                    }
                }
                let xi: [f64; MAX_DIM] = grid.freq(i);
                self.eval(&xi[..grid.dim()])
            })
            .collect()
    }
}

/// `P(D) f = F^{-1}(P F f)`.
pub fn apply_multiplier(f: &Field, sym: &Symbol) -> Result<Field> {
    f.expect_domain(Domain::Physical)?;
    sym.validate(f.grid().dim())?;
    let values = sym.on_lattice(f.grid());
    apply_lattice_multiplier(&forward_transform(f)?, |i| values[i])
}

/// `S(t) f` for the fractional heat semigroup of order `theta`.
pub fn heat(f: &Field, theta: f64, t: f64) -> Result<Field> {
    apply_multiplier(f, &Symbol::heat(theta, t))
}

/// `max |S(t1) S(t2) f - S(t1 + t2) f| / max |f|`.
pub fn semigroup_law_residual(f: &Field, theta: f64, t1: f64, t2: f64) -> Result<f64> {
    let composed = heat(&heat(f, theta, t2)?, theta, t1)?;
    let direct = heat(f, theta, t1 + t2)?;
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(composed.sub(&direct)?.max_abs() / scale)
}

/// Least-squares power law fitted to `||S(t) f | N^sigma_{p,q,1}||`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| (p.1 - icpt - slope * p.0).powi(2))
        .sum();
    (slope, icpt, (rss / n).sqrt())
}

pub fn smoothing_decay_fit(
    bank: &LpBank,
    f: &Field,
    theta: f64,
    source: &SpaceParams,
    sigma: f64,
    times: &[f64],
    policy: &MorreyGridPolicy,
) -> Result<DecayFit> {
    if sigma < source.s {
        return Err(param_err!("target index {sigma} below source index {}", source.s));
    }
    if times.len() < 5 {
        return Err(param_err!("need at least 5 times, got {}", times.len()));
    }
    if times.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(param_err!("times must lie in (0, 1)"));
    }
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(param_err!("times must span at least two decades"));
    }
    let target = SpaceParams::new(sigma, source.p, source.q, SumKind::One)?;
    let spectrum = forward_transform(f)?;
    let lambda: Vec<f64> = f
        .grid()
        .freq_norms()
        .into_iter()
        .map(|r| fractional_symbol(r, theta))
        .collect();
    let samples: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let u = apply_lattice_multiplier(&spectrum, |i| Complex64::new((-t * lambda[i]).exp(), 0.0))?;
            Ok((t, besov_morrey_norm(bank, &u, &target, policy)?))
        })
        .collect::<Result<_>>()?;
    if samples.iter().all(|s| s.1 < 1e-14) {
        return Err(Error::Numerical(
            "all norms below 1e-14: data too smooth for a decay fit".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let (slope, _, residual) = linear_fit(&logs);
    Ok(DecayFit {
        slope,
        residual,
        samples,
    })
}

/// `int |K|` for `K = F^{-1}(Phi_j P)` on a lattice fine enough to resolve
/// `supp Phi_j`, with the box doubled until the value moves by < 1%.
fn widened_kernel_l1(j: usize, sym: &Symbol, dim: usize, start_length: f64) -> Result<f64> {
    let support = (5.0 / 3.0) * (j as f64 + 2.0).exp2();
    let points_for = |length: f64| -> usize {
        let need = 2.2 * support * length / std::f64::consts::PI;
        (need.ceil() as usize).next_power_of_two().max(16)
    };
    let budget: usize = match dim {
        1 => 1 << 22,
        2 => 1 << 22,
        _ => 1 << 24,
    };
    let mut length = start_length;
    let mut previous: Option<f64> = None;
    loop {
        let m = points_for(length);
        if m.pow(dim as u32) > budget {
            return previous.ok_or_else(|| {
                Error::Configuration(format!("kernel grid for block {j} exceeds budget"))
            });
        }
        let grid = GridSpec::new(dim, length, m)?;
        let values: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let xi = grid.freq(i);
                let w = LpBank::widened_symbol(j, grid.freq_norm(i));
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                if let Symbol::GradHeat { axis, .. } = *sym {
                    if grid.is_nyquist(i, axis) {
                        return Complex64::new(0.0, 0.0);
                    }
                }
                sym.eval(&xi[..dim]) * w
            })
            .collect();
        let kernel = inverse_transform(&Field::new(grid, values, Domain::Frequency)?)?;
        let l1 = kernel.values().iter().map(|v| v.norm()).sum::<f64>() * grid.cell_volume();
        if let Some(prev) = previous {
            if (l1 - prev).abs() <= 0.01 * prev.abs().max(f64::MIN_POSITIVE) {
                return Ok(l1);
            }
        }
        previous = Some(l1);
        length *= 2.0;
    }
}

/// `(j, ||F^{-1}(Phi_j P)||_{L^1} / 2^{mj})` for `j` in `jrange`.
pub fn dyadic_kernel_bound(
    bank: &LpBank,
    sym: &Symbol,
    m: f64,
    jrange: std::ops::RangeInclusive<usize>,
) -> Result<Vec<(usize, f64)>> {
    let dim = bank.grid().dim();
    sym.validate(dim)?;
    if *jrange.start() < 1 || *jrange.end() > bank.jmax() || jrange.is_empty() {
        return Err(param_err!(
            "block range {jrange:?} outside 1..={}",
            bank.jmax()
        ));
    }
    let length = bank.grid().box_length();
    jrange
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&j| {
            let l1 = widened_kernel_l1(j, sym, dim, length)?;
            Ok((j, l1 / (m * j as f64).exp2()))
        })
        .collect()
}

/// `u1 = F^{-1} phi_(0)(2^{-m} xi) F f`, `u2 = f - u1`.
pub fn frequency_split(bank: &LpBank, f: &Field, m: usize) -> Result<(Field, Field)> {
    if m < 1 || m > bank.jmax() {
        return Err(param_err!("split level {m} outside 1..={}", bank.jmax()));
    }
    f.expect_domain(Domain::Physical)?;
    f.expect_grid(bank.grid())?;
    let norms = bank.grid().freq_norms();
    let low = apply_lattice_multiplier(&forward_transform(f)?, |i| {
        Complex64::new(low_pass_symbol(m, norms[i]), 0.0)
    })?;
    let high = f.sub(&low)?;
    Ok((low, high))
}
