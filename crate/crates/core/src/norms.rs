//! Local Morrey, measure-Morrey and inhomogeneous Besov-Morrey norms on the grid.
//!
//! Ball integrals are evaluated for every center at once: `|f|^q` is
//! circularly convolved with the lattice ball indicator through the FFT and
//! the result is max-reduced over the strided center set. Ball membership is
//! cell-center-in-open-ball under the periodic distance.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{config_err, param_err, Result};
use crate::grid::{dft_in_place, Domain, Field, GridSpec};
use crate::lp::LpBank;

/// Aggregation over dyadic blocks: `l^1` or `l^inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SumKind {
    One,
    Infinity,
}

impl SumKind {
    fn fold(self, terms: impl Iterator<Item = f64>) -> f64 {
        match self {
            SumKind::One => terms.sum(),
            SumKind::Infinity => terms.fold(0.0, f64::max),
        }
    }
}

/// Indices `(s, p, q, r)` of `N^s_{p,q,r}` (and `(p, q)` of `M^p_q`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: SumKind,
}

impl SpaceParams {
    pub fn new(s: f64, p: f64, q: f64, r: SumKind) -> Result<Self> {
        let params = Self { s, p, q, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponents(self.p, self.q)?;
        if !self.s.is_finite() {
            return Err(param_err!("smoothness index must be finite, got {}", self.s));
        }
        Ok(())
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }

    pub fn with_r(self, r: SumKind) -> Self {
        Self { r, ..self }
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p.is_finite() && q.is_finite()) || q < 1.0 || q > p {
        return Err(param_err!("need 1 <= q <= p < inf, got p = {p}, q = {q}"));
    }
    Ok(())
}

/// Discretization of the sup over centers and radii `0 < rho <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MorreyGridPolicy {
    pub center_stride: usize,
    pub radii: Vec<f64>,
}

pub const DEFAULT_CENTER_STRIDE: usize = 4;

impl MorreyGridPolicy {
    /// Dyadic radii `1, 1/2, ..` down to the smallest `2^{-k} >= 2 dx`.
    pub fn dyadic(grid: &GridSpec, center_stride: usize) -> Result<Self> {
        let floor = 2.0 * grid.spacing();
        let radii: Vec<f64> = (0..64)
            .map(|k| (-(k as f64)).exp2())
            .take_while(|&r| r >= floor)
            .collect();
        let policy = Self {
            center_stride,
            radii,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn with_radii(center_stride: usize, radii: Vec<f64>) -> Result<Self> {
        let policy = Self {
            center_stride,
            radii,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(config_err!("Morrey policy has no radii"));
        }
        if self.center_stride == 0 {
            return Err(config_err!("center stride must be >= 1"));
        }
        if let Some(r) = self.radii.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return Err(config_err!("radius {r} outside (0, 1]"));
        }
        Ok(())
    }

    fn is_center(&self, grid: &GridSpec, idx: usize) -> bool {
        let mi = grid.multi_index(idx);
        mi[..grid.dim()].iter().all(|&i| i % self.center_stride == 0)
    }
}

type BallKey = (usize, usize, u64, u64);

fn ball_cache() -> &'static RwLock<HashMap<BallKey, Arc<Vec<Complex64>>>> {
    static CACHE: OnceLock<RwLock<HashMap<BallKey, Arc<Vec<Complex64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Lattice ball indicator (cell centers at periodic distance `< rho`).
pub fn ball_indicator(grid: &GridSpec, rho: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            if grid.distance_to_origin(i) < rho {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Unnormalized DFT of the ball indicator, cached per (grid, radius).
fn ball_spectrum(grid: &GridSpec, rho: f64) -> Arc<Vec<Complex64>> {
    let key = (
        grid.dim(),
        grid.points(),
        grid.box_length().to_bits(),
        rho.to_bits(),
    );
    if let Some(hit) = ball_cache()
        .read()
        .unwrap_or_else(|e| e.into_inner())
        .get(&key)
    {
        return hit.clone();
    }
    let mut values: Vec<Complex64> = ball_indicator(grid, rho)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    dft_in_place(&mut values, grid, FftDirection::Forward);
    let arc = Arc::new(values);
    ball_cache()
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .entry(key)
        .or_insert(arc)
        .clone()
}

/// `max_x sum_{|y-x| < rho} w(y) dx^N` for each radius, over the policy centers.
fn max_ball_sums(
    grid: &GridSpec,
    weights: &[f64],
    policy: &MorreyGridPolicy,
) -> Vec<f64> {
    let mut spectrum: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    dft_in_place(&mut spectrum, grid, FftDirection::Forward);
    let scale = grid.cell_volume() / grid.len() as f64;
    let centers: Vec<usize> = (0..grid.len())
        .filter(|&i| policy.is_center(grid, i))
        .collect();
    policy
        .radii
        .par_iter()
        .map(|&rho| {
            let ball = ball_spectrum(grid, rho);
            let mut conv: Vec<Complex64> = spectrum
                .iter()
                .zip(ball.iter())
                .map(|(a, b)| a * b)
                .collect();
            dft_in_place(&mut conv, grid, FftDirection::Inverse);
            centers
                .iter()
                .map(|&i| (conv[i].re * scale).max(0.0))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Local Morrey norm `sup rho^{N/p - N/q} (int_{B(x, rho)} |f|^q)^{1/q}`.
pub fn morrey_norm(f: &Field, p: f64, q: f64, policy: &MorreyGridPolicy) -> Result<f64> {
    check_exponents(p, q)?;
    policy.validate()?;
    f.expect_domain(Domain::Physical)?;
    let grid = f.grid();
    let n = grid.dim() as f64;
    let powered: Vec<f64> = f.values().iter().map(|v| v.norm().powf(q)).collect();
    let sums = max_ball_sums(grid, &powered, policy);
    Ok(policy
        .radii
        .iter()
        .zip(sums)
        .map(|(&rho, s)| rho.powf(n / p - n / q) * s.powf(1.0 / q))
        .fold(0.0, f64::max))
}

/// Brute-force evaluation of [`morrey_norm`] by direct ball summation.
///
/// `O(M^{2N})`; kept as a reference for tests.
pub fn morrey_norm_direct(f: &Field, p: f64, q: f64, policy: &MorreyGridPolicy) -> Result<f64> {
    check_exponents(p, q)?;
    policy.validate()?;
    f.expect_domain(Domain::Physical)?;
    let grid = f.grid();
    let n = grid.dim() as f64;
    let dv = grid.cell_volume();
    let mut best = 0.0f64;
    for &rho in &policy.radii {
        for c in (0..grid.len()).filter(|&i| policy.is_center(grid, i)) {
            let cm = grid.multi_index(c);
            let mut acc = 0.0;
            for y in 0..grid.len() {
                let ym = grid.multi_index(y);
                let mut rel = [0usize; crate::grid::MAX_DIM];
                for a in 0..grid.dim() {
                    rel[a] = (ym[a] + grid.points() - cm[a]) % grid.points();
                }
                if grid.distance_to_origin(grid.flat_index(&rel)) < rho {
                    acc += f.values()[y].norm().powf(q) * dv;
                }
            }
            best = best.max(rho.powf(n / p - n / q) * acc.powf(1.0 / q));
        }
    }
    Ok(best)
}

/// Morrey norm of the atomic measure with cell masses `|w| dx^N`:
/// `sup rho^{N/p - N} |mu|(B(x, rho))`.
pub fn morrey_measure_norm(weights: &Field, p: f64, policy: &MorreyGridPolicy) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(param_err!("need 1 <= p < inf, got {p}"));
    }
    policy.validate()?;
    weights.expect_domain(Domain::Physical)?;
    let grid = weights.grid();
    let n = grid.dim() as f64;
    let density: Vec<f64> = weights.values().iter().map(|v| v.norm()).collect();
    let sums = max_ball_sums(grid, &density, policy);
    Ok(policy
        .radii
        .iter()
        .zip(sums)
        .map(|(&rho, s)| rho.powf(n / p - n) * s)
        .fold(0.0, f64::max))
}

fn check_bank(bank: &LpBank, f: &Field) -> Result<()> {
    f.expect_domain(Domain::Physical)?;
    f.expect_grid(bank.grid())
}

/// Per-block terms: `||Delta_0 f||` followed by `2^{sj} ||Delta_j f||`, `j >= 1`.
pub fn besov_morrey_terms(
    bank: &LpBank,
    f: &Field,
    params: &SpaceParams,
    policy: &MorreyGridPolicy,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_bank(bank, f)?;
    bank.project_all(f)?
        .iter()
        .enumerate()
        .map(|(j, piece)| {
            let w = if j == 0 { 1.0 } else { (params.s * j as f64).exp2() };
            Ok(w * morrey_norm(piece, params.p, params.q, policy)?)
        })
        .collect()
}

/// Inhomogeneous Besov-Morrey norm `||f | N^s_{p,q,r}||` (r in {1, inf}).
pub fn besov_morrey_norm(
    bank: &LpBank,
    f: &Field,
    params: &SpaceParams,
    policy: &MorreyGridPolicy,
) -> Result<f64> {
    let terms = besov_morrey_terms(bank, f, params, policy)?;
    Ok(terms[0] + params.r.fold(terms[1..].iter().copied()))
}

/// Besov norm with sup-norm blocks, `||f | B^s_{inf, r}||`.
pub fn besov_sup_norm(bank: &LpBank, f: &Field, s: f64, r: SumKind) -> Result<f64> {
    check_bank(bank, f)?;
    let terms: Vec<f64> = bank
        .project_all(f)?
        .iter()
        .enumerate()
        .map(|(j, piece)| {
            let w = if j == 0 { 1.0 } else { (s * j as f64).exp2() };
            w * piece.max_abs()
        })
        .collect();
    Ok(terms[0] + r.fold(terms[1..].iter().copied()))
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(param_err!("trace times must be positive, got {t}"));
    }
    Ok(())
}

/// Per-entry weighted values `t^{-s/theta} ||u(t)||_{M^p_q}`.
pub fn weighted_morrey_profile<'a>(
    trace: impl IntoIterator<Item = (f64, &'a Field)>,
    s: f64,
    theta: f64,
    p: f64,
    q: f64,
    policy: &MorreyGridPolicy,
) -> Result<Vec<(f64, f64)>> {
    trace
        .into_iter()
        .map(|(t, u)| {
            check_time(t)?;
            Ok((t, t.powf(-s / theta) * morrey_norm(u, p, q, policy)?))
        })
        .collect()
}

/// `||u | X_T|| = sup_t t^{-s/theta} ||u(t)||_{M^p_q}` over the trace.
pub fn solution_norm_x<'a>(
    trace: impl IntoIterator<Item = (f64, &'a Field)>,
    s: f64,
    theta: f64,
    p: f64,
    q: f64,
    policy: &MorreyGridPolicy,
) -> Result<f64> {
    Ok(weighted_morrey_profile(trace, s, theta, p, q, policy)?
        .into_iter()
        .fold(0.0f64, |m, (_, v)| m.max(v)))
}

/// Per-entry weighted gradient values `t^{(1-s)/theta} || |grad u(t)| ||_{M^p_q}`.
pub fn weighted_gradient_profile<'a>(
    trace: impl IntoIterator<Item = (f64, &'a [Field])>,
    s: f64,
    theta: f64,
    p: f64,
    q: f64,
    policy: &MorreyGridPolicy,
) -> Result<Vec<(f64, f64)>> {
    trace
        .into_iter()
        .map(|(t, grad)| {
            check_time(t)?;
            let mag = crate::grid::pointwise_magnitude(grad)?;
            Ok((t, t.powf((1.0 - s) / theta) * morrey_norm(&mag, p, q, policy)?))
        })
        .collect()
}

/// `||u | Y_T||`: the X_T term plus `sup_t t^{(1-s)/theta} || |grad u| ||_{M^p_q}`.
pub fn solution_norm_y<'a>(
    trace: impl IntoIterator<Item = (f64, &'a Field, &'a [Field])>,
    s: f64,
    theta: f64,
    p: f64,
    q: f64,
    policy: &MorreyGridPolicy,
) -> Result<f64> {
    let entries: Vec<_> = trace.into_iter().collect();
    let x = solution_norm_x(entries.iter().map(|e| (e.0, e.1)), s, theta, p, q, policy)?;
    let g = weighted_gradient_profile(entries.iter().map(|e| (e.0, e.2)), s, theta, p, q, policy)?
        .into_iter()
        .fold(0.0f64, |m, (_, v)| m.max(v));
    Ok(x + g)
}

/// Embedding quotients for one sample field; fitted constants are their maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingRatios {
    /// `||f | B^{s - N/p}_{inf,inf}|| / ||f | N^s_{p,q,inf}||`.
    pub sup_over_besov_morrey: f64,
    /// `||f | N^0_{p,q,inf}|| / ||f | M^p_q||`.
    pub besov_inf_over_morrey: f64,
    /// `||f | M^p_q|| / ||f | N^0_{p,q,1}||`.
    pub morrey_over_besov_one: f64,
    /// `||f | N^{s - N(1-l)/p}_{p/l, q/l, inf}|| / ||f | N^s_{p,q,inf}||`.
    pub lifted_over_besov_morrey: f64,
}

/// Evaluates every embedding quotient at `(s, p, q)` with `l` the exponent
/// of the second (Lebesgue-lifting) embedding.
pub fn embedding_ratios(
    bank: &LpBank,
    f: &Field,
    s: f64,
    p: f64,
    q: f64,
    l: f64,
    policy: &MorreyGridPolicy,
) -> Result<EmbeddingRatios> {
    if !(l > 0.0 && l <= 1.0) {
        return Err(param_err!("lifting exponent must lie in (0, 1], got {l}"));
    }
    let n = bank.grid().dim() as f64;
    let base = SpaceParams::new(s, p, q, SumKind::Infinity)?;
    let bm = besov_morrey_norm(bank, f, &base, policy)?;
    let sup = besov_sup_norm(bank, f, s - n / p, SumKind::Infinity)?;
    let m = morrey_norm(f, p, q, policy)?;
    let b0_inf = besov_morrey_norm(bank, f, &base.with_s(0.0), policy)?;
    let b0_one = besov_morrey_norm(bank, f, &base.with_s(0.0).with_r(SumKind::One), policy)?;
    let lifted = SpaceParams::new(s - n * (1.0 - l) / p, p / l, q / l, SumKind::Infinity)?;
    let bl = besov_morrey_norm(bank, f, &lifted, policy)?;
    Ok(EmbeddingRatios {
        sup_over_besov_morrey: sup / bm,
        besov_inf_over_morrey: b0_inf / m,
        morrey_over_besov_one: m / b0_one,
        lifted_over_besov_morrey: bl / bm,
    })
}

/// Fitted constants (maxima of the quotients) over a sample.
pub fn fitted_embedding_constants(samples: &[EmbeddingRatios]) -> EmbeddingRatios {
    samples.iter().fold(
        EmbeddingRatios {
            sup_over_besov_morrey: 0.0,
            besov_inf_over_morrey: 0.0,
            morrey_over_besov_one: 0.0,
            lifted_over_besov_morrey: 0.0,
        },
        |acc, r| EmbeddingRatios {
            sup_over_besov_morrey: acc.sup_over_besov_morrey.max(r.sup_over_besov_morrey),
            besov_inf_over_morrey: acc.besov_inf_over_morrey.max(r.besov_inf_over_morrey),
            morrey_over_besov_one: acc.morrey_over_besov_one.max(r.morrey_over_besov_one),
            lifted_over_besov_morrey: acc
                .lifted_over_besov_morrey
                .max(r.lifted_over_besov_morrey),
        },
    )
}
