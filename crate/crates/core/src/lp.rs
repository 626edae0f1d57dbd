//! Smooth dyadic (Littlewood-Paley) partition of the frequency lattice.

use rustfft::num_complex::Complex64;

use crate::error::{config_err, param_err, Result};
use crate::grid::{apply_lattice_multiplier, forward_transform, Domain, Field, GridSpec};
use crate::norms::{morrey_norm, MorreyGridPolicy, SpaceParams};

/// Identifier of the cutoff profile, echoed into run metadata.
pub const ZETA_PROFILE: &str = "exp-smoothstep[3/2,5/3]";

const ZETA_FLAT: f64 = 1.5;
const ZETA_EDGE: f64 = 5.0 / 3.0;

fn bump(b: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else {
        (-1.0 / b).exp()
    }
}

/// Cutoff `zeta`: 1 on `[0, 3/2]`, 0 on `[5/3, inf)`, smooth and decreasing between.
pub fn zeta(t: f64) -> f64 {
    if t <= ZETA_FLAT {
        1.0
    } else if t >= ZETA_EDGE {
        0.0
    } else {
        let b = (t - ZETA_FLAT) / (ZETA_EDGE - ZETA_FLAT);
        let (up, down) = (bump(b), bump(1.0 - b));
        down / (up + down)
    }
}

/// `phi_(0)` for `j = 0`, `phi_j` for `j >= 1`, evaluated at `|xi|`.
pub fn block_symbol(j: usize, xi_norm: f64) -> f64 {
    if j == 0 {
        zeta(xi_norm)
    } else {
        let s = (-(j as f64)).exp2() * xi_norm;
        zeta(s) - zeta(2.0 * s)
    }
}

/// `phi_(0)(2^{-m} xi) = zeta(2^{-m} |xi|)`.
pub fn low_pass_symbol(m: usize, xi_norm: f64) -> f64 {
    zeta((-(m as f64)).exp2() * xi_norm)
}

/// Precomputed dyadic multipliers on one grid's frequency lattice.
#[derive(Debug, Clone)]
pub struct LpBank {
    grid: GridSpec,
    jmax: usize,
    blocks: Vec<Vec<f64>>,
}

impl LpBank {
    /// Samples `phi_(0), phi_1, .., phi_jmax` with `jmax` the largest `j`
    /// whose annulus starts inside the lattice (`2^{j+1}/3 <= max |xi|`).
    pub fn build(grid: GridSpec) -> Result<Self> {
        let norms = grid.freq_norms();
        let max_xi = norms.iter().cloned().fold(0.0, f64::max);
        if max_xi < 4.0 / 3.0 {
            return Err(config_err!(
                "grid too coarse for dyadic blocks: max |xi| = {max_xi:.4} < 4/3"
            ));
        }
        let mut jmax = 1usize;
        while (jmax as f64 + 2.0).exp2() / 3.0 <= max_xi {
            jmax += 1;
        }
        let blocks = (0..=jmax)
            .map(|j| norms.iter().map(|&r| block_symbol(j, r)).collect())
            .collect();
        Ok(Self { grid, jmax, blocks })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn zeta_profile(&self) -> &'static str {
        ZETA_PROFILE
    }

    pub fn block(&self, j: usize) -> Result<&[f64]> {
        self.blocks
            .get(j)
            .map(Vec::as_slice)
            .ok_or_else(|| param_err!("block {j} exceeds jmax = {}", self.jmax))
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    /// Radius below which the sampled blocks sum to one.
    pub fn covered_radius(&self) -> f64 {
        1.5 * (self.jmax as f64).exp2()
    }

    /// `Phi_j = phi_{j-1} + phi_j + phi_{j+1}` for `j >= 1` (blocks beyond
    /// `jmax` evaluated analytically); `Phi_(0) = phi_(0) + phi_1`.
    pub fn widened_symbol(j: usize, xi_norm: f64) -> f64 {
        if j == 0 {
            block_symbol(0, xi_norm) + block_symbol(1, xi_norm)
        } else {
            block_symbol(j - 1, xi_norm) + block_symbol(j, xi_norm) + block_symbol(j + 1, xi_norm)
        }
    }

    pub fn widened_block(&self, j: usize) -> Vec<f64> {
        self.grid
            .freq_norms()
            .into_iter()
            .map(|r| Self::widened_symbol(j, r))
            .collect()
    }

    /// Largest partition-of-unity residual over the covered lattice region.
    pub fn partition_residuals(&self) -> Vec<(usize, f64)> {
        let cover = self.covered_radius();
        let norms = self.grid.freq_norms();
        (0..self.grid.len())
            .filter(|&i| norms[i] <= cover)
            .map(|i| {
                let s: f64 = self.blocks.iter().map(|b| b[i]).sum();
                (i, (s - 1.0).abs())
            })
            .collect()
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        f.expect_domain(Domain::Physical)?;
        f.expect_grid(&self.grid)
    }

    /// `F^{-1}(phi_j F f)`.
    pub fn project(&self, f: &Field, j: usize) -> Result<Field> {
        self.check_field(f)?;
        let block = self.block(j)?;
        let spectrum = forward_transform(f)?;
        apply_lattice_multiplier(&spectrum, |i| Complex64::new(block[i], 0.0))
    }

    /// Every block projection from a single forward transform.
    pub fn project_all(&self, f: &Field) -> Result<Vec<Field>> {
        self.check_field(f)?;
        let spectrum = forward_transform(f)?;
        self.project_spectrum(&spectrum)
    }

    pub(crate) fn project_spectrum(&self, spectrum: &Field) -> Result<Vec<Field>> {
        self.blocks
            .iter()
            .map(|b| apply_lattice_multiplier(spectrum, |i| Complex64::new(b[i], 0.0)))
            .collect()
    }

    /// Finite-resolution stand-in for `limsup_j 2^{sj} ||Delta_j f||_{M^p_q}`:
    /// the maximum over the top `jwin` blocks.
    pub fn tail_smallness(
        &self,
        f: &Field,
        params: &SpaceParams,
        jwin: usize,
        policy: &MorreyGridPolicy,
    ) -> Result<f64> {
        if jwin == 0 || jwin > self.jmax {
            return Err(param_err!("window {jwin} must be in 1..={}", self.jmax));
        }
        params.validate()?;
        self.check_field(f)?;
        let spectrum = forward_transform(f)?;
        let mut out = 0.0f64;
        for j in (self.jmax + 1 - jwin)..=self.jmax {
            let b = &self.blocks[j];
            let piece = apply_lattice_multiplier(&spectrum, |i| Complex64::new(b[i], 0.0))?;
            let w = (params.s * j as f64).exp2();
            out = out.max(w * morrey_norm(&piece, params.p, params.q, policy)?);
        }
        Ok(out)
    }
}

/// Default top-block window for [`LpBank::tail_smallness`].
pub const DEFAULT_TAIL_WINDOW: usize = 3;
