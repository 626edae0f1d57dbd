//! Benchmark initial data and their admissibility under the tail-smallness condition.

use std::f64::consts::E;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::{param_err, Result};
use crate::grid::{inverse_transform, spectral_gradient, Domain, Field, GridSpec};
use crate::lp::LpBank;
use crate::norms::{besov_morrey_norm, MorreyGridPolicy, SpaceParams, SumKind};
use crate::semigroup::heat;
use crate::solver::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataKind {
    /// `max(|x|, dx)^{-beta}`.
    PowerLaw { beta: f64 },
    /// `|x|^{-N} log(e + 1/|x|)^{-N/theta - 1}`, capped at one cell.
    LogPower { theta: f64 },
    /// Unit-mass single-cell atom at the origin, optionally smoothed by `S(t)`.
    Dirac { smoothing: Option<(f64, f64)> },
    /// `order`-fold spectral derivative along axis 0 of the unit atom.
    DiracDerivative { order: u32 },
    /// Gaussian random field with shell amplitudes `2^{-sj}`.
    RandomShell { s: f64, seed: u64 },
    Constant,
}

/// A data kind times an amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataRecipe {
    pub kind: DataKind,
    pub amplitude: f64,
}

impl DataRecipe {
    pub fn new(kind: DataKind, amplitude: f64) -> Self {
        Self { kind, amplitude }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(param_err!("amplitude must be finite"));
        }
        match self.kind {
            DataKind::PowerLaw { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(param_err!("power-law exponent must be positive, got {beta}"))
            }
            DataKind::LogPower { theta } if !(theta > 0.0) => {
                Err(param_err!("theta must be positive, got {theta}"))
            }
            DataKind::DiracDerivative { order: 0 } => {
                Err(param_err!("derivative order must be >= 1"))
            }
            DataKind::Dirac {
                smoothing: Some((theta, t)),
            } if !(theta > 0.0 && t >= 0.0) => Err(param_err!("invalid smoothing ({theta}, {t})")),
            DataKind::RandomShell { s, .. } if !s.is_finite() => {
                Err(param_err!("shell exponent must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// True when the continuum profile fails to be locally `L^q`
    /// (`beta >= N/q`); such data are allowed, norms may grow under refinement.
    pub fn lq_integrability_fails(&self, dim: usize, q: f64) -> bool {
        let n = dim as f64;
        match self.kind {
            DataKind::PowerLaw { beta } => beta >= n / q,
            DataKind::LogPower { .. } | DataKind::Dirac { smoothing: None } => q > 1.0,
            DataKind::DiracDerivative { .. } => true,
            _ => false,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }
}

fn unit_atom(grid: &GridSpec) -> Field {
    let mut f = Field::zeros(*grid, Domain::Physical);
    f.values_mut()[0] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
    f
}

/// Dyadic shell of a lattice frequency: `|xi|` in `[0.75, 1.5) 2^j`, `j >= 0`.
pub fn shell_index(xi_norm: f64) -> usize {
    if xi_norm < 1.5 {
        0
    } else {
        (xi_norm / 0.75).log2().floor() as usize
    }
}

fn random_shell(grid: &GridSpec, s: f64, seed: u64) -> Result<Field> {
    let norms = grid.freq_norms();
    let shells: Vec<usize> = norms.iter().map(|&r| shell_index(r)).collect();
    let top = shells.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; top + 1];
    shells.iter().for_each(|&j| counts[j] += 1);
    let amp: Vec<f64> = (0..=top)
        .map(|j| (-s * j as f64).exp2() / (counts[j].max(1) as f64).sqrt())
        .collect();
    let volume = grid.box_length().powi(grid.dim() as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..grid.len() {
        let mirror = grid.mirror_index(i);
        let a = amp[shells[i]] * volume;
        if i < mirror {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * (a / 2f64.sqrt());
            coeffs[i] = z;
            coeffs[mirror] = z.conj();
        } else if i == mirror {
            let re: f64 = rng.sample(StandardNormal);
            coeffs[i] = Complex64::new(re * a, 0.0);
        }
    }
    Ok(inverse_transform(&Field::new(*grid, coeffs, Domain::Frequency)?)?.to_real())
}

/// Samples a recipe on a grid. Output is real and deterministic in (recipe, grid).
pub fn realize(recipe: &DataRecipe, grid: &GridSpec) -> Result<Field> {
    recipe.validate()?;
    let c = recipe.amplitude;
    let dx = grid.spacing();
    let n = grid.dim() as f64;
    let field = match recipe.kind {
        DataKind::Constant => Field::constant(*grid, c),
        DataKind::PowerLaw { beta } => {
            let vals: Vec<f64> = (0..grid.len())
                .map(|i| c * grid.distance_to_origin(i).max(dx).powf(-beta))
                .collect();
            Field::from_real(*grid, &vals)?
        }
        DataKind::LogPower { theta } => {
            let vals: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let d = grid.distance_to_origin(i).max(dx);
                    c * d.powf(-n) * (E + 1.0 / d).ln().powf(-n / theta - 1.0)
                })
                .collect();
            Field::from_real(*grid, &vals)?
        }
        DataKind::Dirac { smoothing } => {
            let atom = unit_atom(grid).scale(c);
            match smoothing {
                Some((theta, t)) => heat(&atom, theta, t)?.to_real(),
                None => atom,
            }
        }
        DataKind::DiracDerivative { order } => {
            let mut f = unit_atom(grid).scale(c);
            for _ in 0..order {
                f = spectral_gradient(&f, 0)?.to_real();
            }
            f
        }
        DataKind::RandomShell { s, seed } => random_shell(grid, s, seed)?.scale(c),
    };
    Ok(field)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Top-window surrogate of the limsup tail.
    pub tail: f64,
    /// `||f | N^s_{p,q,inf}||`.
    pub full_norm: f64,
    pub index_check: std::result::Result<(), String>,
    /// Tail at the given grid and at twice the points per axis.
    pub refinement_trend: Option<(f64, f64)>,
}

/// Evaluates the tail condition and index hypotheses for a data field.
pub fn admissibility_report(
    f: &Field,
    bank: &LpBank,
    spec: &ProblemSpec,
    jwin: usize,
    policy: &MorreyGridPolicy,
) -> Result<AdmissibilityReport> {
    let params = spec.space.with_r(SumKind::Infinity);
    let tail = bank.tail_smallness(f, &params, jwin, policy)?;
    let full_norm = besov_morrey_norm(bank, f, &params, policy)?;
    let index_check = spec
        .validate(f.grid().dim())
        .map_err(|e| e.to_string());
    Ok(AdmissibilityReport {
        tail,
        full_norm,
        index_check,
        refinement_trend: None,
    })
}

/// [`admissibility_report`] for a recipe, with the tail also evaluated at `2M`.
pub fn admissibility_with_refinement(
    recipe: &DataRecipe,
    grid: &GridSpec,
    spec: &ProblemSpec,
    jwin: usize,
    center_stride: usize,
) -> Result<AdmissibilityReport> {
    let coarse_bank = LpBank::build(*grid)?;
    let coarse_policy = MorreyGridPolicy::dyadic(grid, center_stride)?;
    let mut report = admissibility_report(
        &realize(recipe, grid)?,
        &coarse_bank,
        spec,
        jwin,
        &coarse_policy,
    )?;
    let fine = grid.refined(2)?;
    let fine_bank = LpBank::build(fine)?;
    let fine_policy = MorreyGridPolicy::dyadic(&fine, center_stride)?;
    let params: SpaceParams = spec.space.with_r(SumKind::Infinity);
    let fine_tail = fine_bank.tail_smallness(&realize(recipe, &fine)?, &params, jwin, &fine_policy)?;
    report.refinement_trend = Some((report.tail, fine_tail));
    Ok(report)
}
