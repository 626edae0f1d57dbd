//! Picard iteration for the mild (Duhamel) form of
//! `u_t + (-Delta)^{theta/2} u = F(u)` with `F(u) = |u|^{gamma-1} u` (power
//! kind) or `F(u) = |grad u|^gamma` (Hamilton-Jacobi kind).
//!
//! The Duhamel integral is evaluated on a graded mesh `t_k = T (k/K)^nu`.
//! On each subinterval the nonlinearity is frozen at the average of its
//! endpoint values (the first interval uses `F(t_1)`), and the semigroup
//! factor is integrated exactly per Fourier mode:
//! `int_{t_{k-1}}^{t_k} e^{-(t - tau) lambda} dtau` with `lambda = |xi|^theta`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{param_err, Error, Result};
use crate::grid::{
    apply_lattice_multiplier, forward_transform, inverse_transform, spectral_gradients, Domain,
    Field, GridSpec,
};
use crate::norms::{morrey_norm, MorreyGridPolicy, SpaceParams};
use crate::semigroup::fractional_symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationKind {
    Power,
    HamiltonJacobi,
}

/// Equation, exponents, horizon and the data space `N^s_{p,q,inf}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub theta: f64,
    pub gamma: f64,
    pub kind: EquationKind,
    pub horizon: f64,
    pub space: SpaceParams,
}

const INDEX_SLACK: f64 = 1e-12;

impl ProblemSpec {
    /// Checks the admissible-index hypotheses of the existence theorems.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let (theta, gamma) = (self.theta, self.gamma);
        let SpaceParams { s, p, q, .. } = self.space;
        let n = dim as f64;
        self.space.validate()?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(param_err!("theta must be positive, got {theta}"));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(param_err!("gamma must exceed 1, got {gamma}"));
        }
        if !(self.horizon > 0.0 && self.horizon <= 1.0) {
            return Err(param_err!("horizon must lie in (0, 1], got {}", self.horizon));
        }
        if !(gamma <= q && q <= p) {
            return Err(param_err!("need gamma <= q <= p, got gamma = {gamma}, q = {q}, p = {p}"));
        }
        match self.kind {
            EquationKind::Power => {
                if !(-theta / gamma < s && s < 0.0) {
                    return Err(param_err!("need -theta/gamma < s < 0, got s = {s}"));
                }
                let floor = n / p - theta / (gamma - 1.0);
                if s < floor - INDEX_SLACK {
                    return Err(param_err!("need s >= N/p - theta/(gamma-1) = {floor}, got {s}"));
                }
            }
            EquationKind::HamiltonJacobi => {
                if theta <= 1.0 {
                    return Err(param_err!("Hamilton-Jacobi kind needs theta > 1, got {theta}"));
                }
                if gamma >= theta {
                    return Err(param_err!("need 1 < gamma < theta, got gamma = {gamma}"));
                }
                let pmin = n * (gamma - 1.0) / (theta - 1.0);
                if p <= pmin {
                    return Err(param_err!("need p > N(gamma-1)/(theta-1) = {pmin}, got {p}"));
                }
                if !(1.0 - theta / gamma < s && s < 0.0) {
                    return Err(param_err!("need 1 - theta/gamma < s < 0, got s = {s}"));
                }
                let floor = n / p + (gamma - theta) / (gamma - 1.0);
                if s < floor - INDEX_SLACK {
                    return Err(param_err!(
                        "need s >= N/p + (gamma-theta)/(gamma-1) = {floor}, got {s}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Graded nodes `t_k = T (k/K)^nu`, `k = 1..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nodes: Vec<f64>,
    grading: f64,
}

pub const DEFAULT_GRADING: f64 = 2.0;

impl TimeMesh {
    pub fn graded(horizon: f64, count: usize, grading: f64) -> Result<Self> {
        if count == 0 {
            return Err(param_err!("mesh needs at least one node"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(param_err!("horizon must be positive, got {horizon}"));
        }
        if !(grading >= 1.0 && grading.is_finite()) {
            return Err(param_err!("grading must be >= 1, got {grading}"));
        }
        let k = count as f64;
        let nodes = (1..=count)
            .map(|i| horizon * (i as f64 / k).powf(grading))
            .collect();
        Ok(Self { nodes, grading })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("mesh is nonempty")
    }

    /// Left endpoint of interval `k` (0-based), with `t_0 = 0`.
    fn left(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.nodes[k - 1]
        }
    }
}

/// Exponential spectral filter `exp(-alpha (|xi| / xi_max)^order)` applied
/// to the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    pub alpha: f64,
    pub order: f64,
}

impl SpectralFilter {
    fn factors(&self, grid: &GridSpec) -> Vec<f64> {
        let cut = grid.axis_nyquist();
        grid.freq_norms()
            .into_iter()
            .map(|r| (-self.alpha * (r / cut).powf(self.order)).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverControls {
    pub max_iters: usize,
    pub tol: f64,
    pub policy: MorreyGridPolicy,
    pub filter: Option<SpectralFilter>,
    /// Retain every iterate in the trace (memory `O(iters K M^N)`).
    pub keep_iterates: bool,
}

impl SolverControls {
    pub fn new(max_iters: usize, tol: f64, policy: MorreyGridPolicy) -> Self {
        Self {
            max_iters,
            tol,
            policy,
            filter: None,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    Diverged,
    MaxIters,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Diverged => "diverged",
            Status::MaxIters => "max_iters",
        }
    }
}

/// Growth of the solution functional that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub kind: EquationKind,
    pub times: Vec<f64>,
    /// `u_0(t_k) = S(t_k) phi`.
    pub initial: Vec<Field>,
    /// Last iterate at every node.
    pub solution: Vec<Field>,
    /// Every iterate, when requested by the controls.
    pub iterates: Vec<Vec<Field>>,
    /// `||u_n||` in X_T (power) or Y_T (Hamilton-Jacobi), `n = 0, 1, ..`.
    pub x_norms: Vec<f64>,
    /// `||u_{n+1} - u_n||` in the same norm.
    pub diff_norms: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub status: Status,
    pub diagnostic: Option<String>,
}

impl IterationTrace {
    pub fn sweeps(&self) -> usize {
        self.diff_norms.len()
    }
}

/// Precomputed state for one (problem, data, mesh) triple.
pub struct PicardSolver {
    spec: ProblemSpec,
    grid: GridSpec,
    mesh: TimeMesh,
    controls: SolverControls,
    lambda: Vec<f64>,
    data_spectrum: Field,
    filter: Option<Vec<f64>>,
}

fn interval_weight(lambda: f64, dt: f64) -> f64 {
    if lambda == 0.0 {
        dt
    } else {
        -(-dt * lambda).exp_m1() / lambda
    }
}

fn signed_power(u: f64, gamma: f64) -> f64 {
    u.abs().powf(gamma - 1.0) * u
}

impl PicardSolver {
    pub fn new(
        spec: ProblemSpec,
        data: &Field,
        mesh: TimeMesh,
        controls: SolverControls,
    ) -> Result<Self> {
        data.expect_domain(Domain::Physical)?;
        let grid = *data.grid();
        spec.validate(grid.dim())?;
        controls.policy.validate()?;
        if data.max_imag() > 1e-12 * data.max_abs().max(1.0) {
            return Err(param_err!("initial data must be real"));
        }
        let lambda = grid
            .freq_norms()
            .into_iter()
            .map(|r| fractional_symbol(r, spec.theta))
            .collect();
        let filter = controls.filter.map(|f| f.factors(&grid));
        Ok(Self {
            spec,
            grid,
            mesh,
            controls,
            lambda,
            data_spectrum: forward_transform(&data.to_real())?,
            filter,
        })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    /// `S(t_k) phi` at every node.
    pub fn initial_iterate(&self) -> Result<Vec<Field>> {
        self.mesh
            .nodes()
            .par_iter()
            .map(|&t| {
                Ok(apply_lattice_multiplier(&self.data_spectrum, |i| {
                    Complex64::new((-t * self.lambda[i]).exp(), 0.0)
                })?
                .to_real())
            })
            .collect()
    }

    /// Nonlinearity `F(u)` in physical space.
    pub fn nonlinearity(&self, u: &Field) -> Result<Field> {
        let gamma = self.spec.gamma;
        match self.spec.kind {
            EquationKind::Power => Ok(u.map(|v| Complex64::new(signed_power(v.re, gamma), 0.0))),
            EquationKind::HamiltonJacobi => {
                let grads = spectral_gradients(u)?;
                let mut acc = vec![0.0f64; u.values().len()];
                for g in &grads {
                    for (a, v) in acc.iter_mut().zip(g.values()) {
                        *a += v.re * v.re;
                    }
                }
                let vals: Vec<f64> = acc.into_iter().map(|a| a.sqrt().powf(gamma)).collect();
                Field::from_real(self.grid, &vals)
            }
        }
    }

    fn nonlinearity_spectra(&self, iterate: &[Field]) -> Result<Vec<Field>> {
        iterate
            .par_iter()
            .map(|u| {
                let mut spec = forward_transform(&self.nonlinearity(u)?)?;
                if let Some(f) = &self.filter {
                    spec.values_mut()
                        .iter_mut()
                        .zip(f)
                        .for_each(|(v, w)| *v *= *w);
                }
                Ok(spec)
            })
            .collect()
    }

    /// One Picard sweep: `u_{n+1}(t_k) = S(t_k) phi + Duhamel[F(u_n)](t_k)`.
    pub fn sweep(&self, iterate: &[Field]) -> Result<Vec<Field>> {
        if iterate.len() != self.mesh.len() {
            return Err(param_err!(
                "iterate has {} nodes, mesh has {}",
                iterate.len(),
                self.mesh.len()
            ));
        }
        let spectra = self.nonlinearity_spectra(iterate)?;
        let zero = Complex64::new(0.0, 0.0);
        let mut duhamel = vec![zero; self.grid.len()];
        let mut out = Vec::with_capacity(self.mesh.len());
        for (k, &t) in self.mesh.nodes().iter().enumerate() {
            let dt = t - self.mesh.left(k);
            let frozen = |i: usize| -> Complex64 {
                if k == 0 {
                    spectra[0].values()[i]
                } else {
                    (spectra[k - 1].values()[i] + spectra[k].values()[i]) * 0.5
                }
            };
            let mut total = Vec::with_capacity(self.grid.len());
            for (i, d) in duhamel.iter_mut().enumerate() {
                let lam = self.lambda[i];
                *d = *d * (-dt * lam).exp() + frozen(i) * interval_weight(lam, dt);
                total.push(*d + self.data_spectrum.values()[i] * (-t * lam).exp());
            }
            out.push(inverse_transform(&Field::new(self.grid, total, Domain::Frequency)?)?.to_real());
        }
        Ok(out)
    }

    /// X_T norm (power kind) or Y_T norm (Hamilton-Jacobi kind) of a node list.
    pub fn solution_norm(&self, iterate: &[Field]) -> Result<f64> {
        let SpaceParams { s, p, q, .. } = self.spec.space;
        let theta = self.spec.theta;
        let policy = &self.controls.policy;
        let hj = self.spec.kind == EquationKind::HamiltonJacobi;
        let terms: Vec<(f64, f64)> = self
            .mesh
            .nodes()
            .par_iter()
            .zip(iterate.par_iter())
            .map(|(&t, u)| {
                let x = t.powf(-s / theta) * morrey_norm(u, p, q, policy)?;
                let g = if hj {
                    let mag = crate::grid::pointwise_magnitude(&spectral_gradients(u)?)?;
                    t.powf((1.0 - s) / theta) * morrey_norm(&mag, p, q, policy)?
                } else {
                    0.0
                };
                Ok((x, g))
            })
            .collect::<Result<_>>()?;
        let (x, g) = terms
            .iter()
            .fold((0.0f64, 0.0f64), |(a, b), &(x, g)| (a.max(x), b.max(g)));
        Ok(x + g)
    }

    pub fn difference_norm(&self, a: &[Field], b: &[Field]) -> Result<f64> {
        let diff: Vec<Field> = a.iter().zip(b).map(|(x, y)| x.sub(y)).collect::<Result<_>>()?;
        self.solution_norm(&diff)
    }

    /// Norm of `Phi(u) - u` where `Phi` is one Picard sweep.
    pub fn fixed_point_residual(&self, iterate: &[Field]) -> Result<f64> {
        let next = self.sweep(iterate)?;
        self.difference_norm(&next, iterate)
    }

    pub fn run(&self) -> Result<IterationTrace> {
        self.run_from(None)
    }

    /// Iterates from `start` (defaults to `u_0`); norms and the divergence
    /// test stay anchored at `u_0`.
    pub fn run_from(&self, start: Option<Vec<Field>>) -> Result<IterationTrace> {
        let initial = self.initial_iterate()?;
        let mut current = match start {
            Some(s) => {
                if s.len() != self.mesh.len() {
                    return Err(param_err!("start iterate has wrong node count"));
                }
                s
            }
            None => initial.clone(),
        };
        let base = self.solution_norm(&initial)?;
        let mut x_norms = vec![self.solution_norm(&current)?];
        let mut diff_norms = Vec::new();
        let mut iterates = Vec::new();
        if self.controls.keep_iterates {
            iterates.push(current.clone());
        }
        let mut status = Status::MaxIters;
        let mut diagnostic = None;
        for sweep in 1..=self.controls.max_iters {
            let next = self.sweep(&current)?;
            if next.iter().any(|u| u.values().iter().any(|v| !v.re.is_finite())) {
                status = Status::Diverged;
                diagnostic = Some(format!("non-finite values in sweep {sweep}"));
                break;
            }
            let diff = self.difference_norm(&next, &current)?;
            let norm = self.solution_norm(&next)?;
            current = next;
            if self.controls.keep_iterates {
                iterates.push(current.clone());
            }
            diff_norms.push(diff);
            x_norms.push(norm);
            if !(diff.is_finite() && norm.is_finite()) {
                status = Status::Diverged;
                diagnostic = Some(format!("non-finite norm in sweep {sweep}"));
                break;
            }
            if diff < self.controls.tol {
                status = Status::Converged;
                break;
            }
            if norm > DIVERGENCE_FACTOR * base.max(f64::MIN_POSITIVE) {
                status = Status::Diverged;
                diagnostic = Some(format!(
                    "norm grew from {base:.3e} to {norm:.3e} by sweep {sweep}"
                ));
                break;
            }
        }
        let contraction_ratios = diff_norms.windows(2).map(|w| w[1] / w[0]).collect();
        Ok(IterationTrace {
            kind: self.spec.kind,
            times: self.mesh.nodes().to_vec(),
            initial,
            solution: current,
            iterates,
            x_norms,
            diff_norms,
            contraction_ratios,
            status,
            diagnostic,
        })
    }
}

pub fn picard_solve(
    spec: ProblemSpec,
    data: &Field,
    mesh: TimeMesh,
    controls: SolverControls,
) -> Result<IterationTrace> {
    PicardSolver::new(spec, data, mesh, controls)?.run()
}

/// `int_0^{t_node} S(t_node - tau) F(tau) dtau` by direct summation over
/// subintervals, `history[k]` holding `F(t_k)` in physical space.
pub fn duhamel_integral(
    history: &[Field],
    mesh: &TimeMesh,
    theta: f64,
    node: usize,
) -> Result<Field> {
    if node >= mesh.len() {
        return Err(param_err!("node {node} not on a mesh of {} nodes", mesh.len()));
    }
    if history.len() <= node {
        return Err(param_err!(
            "history covers {} nodes, need {}",
            history.len(),
            node + 1
        ));
    }
    if !(theta > 0.0) {
        return Err(param_err!("theta must be positive"));
    }
    let grid = *history[0].grid();
    let spectra: Vec<Field> = history[..=node]
        .iter()
        .map(forward_transform)
        .collect::<Result<_>>()?;
    let lambda: Vec<f64> = grid
        .freq_norms()
        .into_iter()
        .map(|r| fractional_symbol(r, theta))
        .collect();
    let t = mesh.nodes()[node];
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 0..=node {
        let (a, b) = (mesh.left(k), mesh.nodes()[k]);
        for (i, v) in acc.iter_mut().enumerate() {
            let lam = lambda[i];
            let frozen = if k == 0 {
                spectra[0].values()[i]
            } else {
                (spectra[k - 1].values()[i] + spectra[k].values()[i]) * 0.5
            };
            let w = (-(t - b) * lam).exp() * interval_weight(lam, b - a);
            *v += frozen * w;
        }
    }
    inverse_transform(&Field::new(grid, acc, Domain::Frequency)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub amplitude: f64,
    pub status: Status,
    pub sweeps: usize,
    pub final_ratio: Option<f64>,
    pub final_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<ScanRow>,
    /// Largest amplitude that converged.
    pub largest_converged: Option<f64>,
    /// Smallest amplitude that did not converge.
    pub smallest_failed: Option<f64>,
    /// False when a converged row follows a failed one.
    pub monotone: bool,
}

pub fn threshold_scan(
    spec: ProblemSpec,
    shape: &Field,
    amplitudes: &[f64],
    mesh: &TimeMesh,
    controls: &SolverControls,
) -> Result<ThresholdScan> {
    if amplitudes.is_empty() {
        return Err(param_err!("no amplitudes given"));
    }
    if amplitudes.iter().any(|&a| !(a > 0.0)) || amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param_err!("amplitudes must be positive and increasing"));
    }
    let rows: Vec<ScanRow> = amplitudes
        .par_iter()
        .map(|&c| {
            let solver = PicardSolver::new(spec, &shape.scale(c), mesh.clone(), controls.clone())?;
            let trace = solver.run()?;
            Ok(ScanRow {
                amplitude: c,
                status: trace.status,
                sweeps: trace.sweeps(),
                final_ratio: trace.contraction_ratios.last().copied(),
                final_diff: trace.diff_norms.last().copied(),
            })
        })
        .collect::<Result<_>>()?;
    let largest_converged = rows
        .iter()
        .filter(|r| r.status == Status::Converged)
        .map(|r| r.amplitude)
        .next_back();
    let smallest_failed = rows
        .iter()
        .find(|r| r.status != Status::Converged)
        .map(|r| r.amplitude);
    let monotone = match (largest_converged, smallest_failed) {
        (Some(ok), Some(bad)) => ok < bad,
        _ => true,
    };
    Ok(ThresholdScan {
        rows,
        largest_converged,
        smallest_failed,
        monotone,
    })
}

/// One rung `(p_j, q_j, s_j)` of the regularity bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

fn ladder_step(kind: EquationKind, theta: f64, gamma: f64) -> f64 {
    match kind {
        EquationKind::Power => theta / gamma,
        EquationKind::HamiltonJacobi => (theta - gamma) / gamma,
    }
}

/// Checks a rung `j >= 2` against the hypotheses needed to reapply the
/// existence argument.
pub fn check_ladder_row(
    kind: EquationKind,
    dim: usize,
    theta: f64,
    gamma: f64,
    row: &LadderRow,
) -> std::result::Result<(), String> {
    let n = dim as f64;
    let b = ladder_step(kind, theta, gamma);
    let LadderRow { p, q, s } = *row;
    if !(gamma <= q + INDEX_SLACK && q <= p + INDEX_SLACK) {
        return Err(format!("gamma <= q <= p fails: q = {q}, p = {p}"));
    }
    if !(-b < s && s < 0.0) {
        return Err(format!("{} < s < 0 fails: s = {s}", -b));
    }
    let floor = match kind {
        EquationKind::Power => n / p - theta / (gamma - 1.0),
        EquationKind::HamiltonJacobi => n / p - (theta - gamma) / (gamma - 1.0),
    };
    if s < floor - INDEX_SLACK {
        return Err(format!("s >= {floor} fails: s = {s}"));
    }
    if kind == EquationKind::HamiltonJacobi {
        let pmin = n * (gamma - 1.0) / (theta - 1.0);
        if p <= pmin {
            return Err(format!("p > {pmin} fails: p = {p}"));
        }
    }
    Ok(())
}

/// Exponent ladder `p_1 = p < p_2 < .. < p_n` with `n` the smallest integer
/// above `N/(p b)` (`b = theta/gamma`, or `(theta - gamma)/gamma` for the
/// Hamilton-Jacobi kind), `N/p_{j+1} > N/p_j - b` and `N/p_n < b`.
///
/// The rungs are spaced uniformly in `N/p`, ending at the midpoint of the
/// admissible window for `N/p_n`.
pub fn bootstrap_schedule(
    dim: usize,
    theta: f64,
    gamma: f64,
    p: f64,
    q: f64,
    s: f64,
    kind: EquationKind,
) -> Result<Vec<LadderRow>> {
    let b = ladder_step(kind, theta, gamma);
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Configuration(format!(
            "no ladder: step {b} must be positive (theta = {theta}, gamma = {gamma})"
        )));
    }
    if !(p >= 1.0 && q >= 1.0 && q <= p) {
        return Err(param_err!("need 1 <= q <= p, got p = {p}, q = {q}"));
    }
    let n = dim as f64;
    let a = n / p;
    // smallest integer strictly above a / b
    let count = (a / b).floor() as usize + 1;
    let mut rows = vec![LadderRow { p, q, s }];
    if count > 1 {
        let lo = (a - (count - 1) as f64 * b).max(0.0);
        let last = 0.5 * (lo + b);
        let step = (a - last) / (count - 1) as f64;
        for j in 1..count {
            let prev = rows[j - 1];
            let inv = a - step * j as f64;
            let pj = n / inv;
            rows.push(LadderRow {
                p: pj,
                q: pj * prev.q / prev.p,
                s: inv - n / prev.p,
            });
        }
    }
    let last = rows.last().expect("ladder is nonempty");
    if n / last.p >= b {
        return Err(Error::Configuration(format!(
            "ladder ends at N/p = {} >= {b}",
            n / last.p
        )));
    }
    for (j, row) in rows.iter().enumerate().skip(1) {
        if n / row.p <= n / rows[j - 1].p - b {
            return Err(Error::Configuration(format!("rung {} steps too far", j + 1)));
        }
        check_ladder_row(kind, dim, theta, gamma, row)
            .map_err(|e| Error::Configuration(format!("rung {}: {e}", j + 1)))?;
    }
    Ok(rows)
}

/// `(t, max |u|, max |grad u|)` of the final iterate at nodes `t >= eps`.
pub fn linf_monitor(trace: &IterationTrace, eps: f64) -> Result<Vec<(f64, f64, Option<f64>)>> {
    trace
        .times
        .iter()
        .zip(&trace.solution)
        .filter(|(&t, _)| t >= eps)
        .map(|(&t, u)| {
            let grad = match trace.kind {
                EquationKind::HamiltonJacobi => Some(
                    crate::grid::pointwise_magnitude(&spectral_gradients(u)?)?.max_abs(),
                ),
                EquationKind::Power => None,
            };
            Ok((t, u.max_abs(), grad))
        })
        .collect()
}
