//! The named experiments. Each writes its tables through [`Outputs`] and
//! returns a JSON summary for the manifest.

use std::fs;

use fracmorrey_core::data::{realize, DataKind, DataRecipe};
use fracmorrey_core::fbmf;
use fracmorrey_core::grid::{pointwise_magnitude, spectral_gradients};
use fracmorrey_core::norms::{
    besov_morrey_norm, besov_morrey_terms, besov_sup_norm, embedding_ratios,
    fitted_embedding_constants, morrey_norm, EmbeddingRatios,
};
use fracmorrey_core::semigroup::{dyadic_kernel_bound, frequency_split, smoothing_decay_fit, Symbol};
use fracmorrey_core::solver::{
    bootstrap_schedule, check_ladder_row, threshold_scan, EquationKind, PicardSolver, ProblemSpec,
    Status, ThresholdScan,
};
use fracmorrey_core::{Field, GridSpec, LpBank};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{DataKindName, Experiment, ExperimentConfig, SymbolName};
use crate::error::RunError;
use crate::manifest::{num, opt_num, Outputs};

/// Earliest node included in the weighted-profile spread of a solve.
pub const PROFILE_WINDOW_START: f64 = 1e-3;

pub fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let refinable = matches!(
        cfg.experiment,
        Experiment::Solve | Experiment::SolveHj | Experiment::ThresholdScan | Experiment::EmbeddingCheck
    );
    if cfg.refine && !refinable {
        return Err(RunError::config(
            "refine",
            &format!("not supported by {}", cfg.experiment),
        ));
    }
    match cfg.experiment {
        Experiment::LpCheck => lp_check(cfg, out),
        Experiment::Norms => norms(cfg, out),
        Experiment::Semigroup => semigroup(cfg, out),
        Experiment::KernelBounds => kernel_bounds(cfg, out),
        Experiment::Split => split(cfg, out),
        Experiment::Solve => solve(cfg, out, EquationKind::Power),
        Experiment::SolveHj => solve(cfg, out, EquationKind::HamiltonJacobi),
        Experiment::ThresholdScan => scan(cfg, out),
        Experiment::BootstrapSchedule => ladder(cfg, out),
        Experiment::EmbeddingCheck => embedding(cfg, out),
    }
}

/// The field named by `input` (FBMF), or else the `data` recipe on the grid.
fn load_field(cfg: &ExperimentConfig) -> Result<Field, RunError> {
    if let Some(path) = &cfg.input {
        let bytes = fs::read(path)
            .map_err(|e| RunError::config("input", &format!("{}: {e}", path.display())))?;
        return fbmf::decode(&bytes).map_err(|e| RunError::config("input", &e.to_string()));
    }
    let grid = cfg.grid()?;
    Ok(realize(&cfg.recipe(None)?, &grid)?)
}

fn spread(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    (lo > 0.0 && lo.is_finite()).then(|| hi / lo)
}

fn lp_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let grid = cfg.grid()?;
    let bank = LpBank::build(grid)?;
    let residuals = bank.partition_residuals();
    out.csv(
        "lp_check.csv",
        &["index", "xi_norm", "residual"],
        residuals
            .iter()
            .map(|&(i, r)| [i.to_string(), num(grid.freq_norm(i)), num(r)]),
    )?;
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.1));
    Ok(json!({
        "jmax": bank.jmax(),
        "covered_radius": bank.covered_radius(),
        "points_checked": residuals.len(),
        "max_residual": max,
    }))
}

fn norms(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let f = load_field(cfg)?;
    let grid = *f.grid();
    let bank = LpBank::build(grid)?;
    let policy = cfg.policy(&grid)?;
    let space = cfg.space()?;
    let n = grid.dim() as f64;
    let morrey = morrey_norm(&f, space.p, space.q, &policy)?;
    let bm = besov_morrey_norm(&bank, &f, &space, &policy)?;
    let sup = besov_sup_norm(&bank, &f, space.s - n / space.p, space.r)?;
    let r = match space.r {
        fracmorrey_core::SumKind::One => "one",
        fracmorrey_core::SumKind::Infinity => "infinity",
    };
    out.csv(
        "norms.csv",
        &["s", "p", "q", "r", "morrey", "besov_morrey", "besov_sup"],
        [[
            num(space.s),
            num(space.p),
            num(space.q),
            r.to_string(),
            num(morrey),
            num(bm),
            num(sup),
        ]],
    )?;
    let tail = if cfg.jwin >= 1 && cfg.jwin <= bank.jmax() {
        Some(bank.tail_smallness(&f, &space, cfg.jwin, &policy)?)
    } else {
        None
    };
    Ok(json!({
        "morrey": morrey,
        "besov_morrey": bm,
        "besov_sup": sup,
        "besov_sup_index": space.s - n / space.p,
        "tail": tail,
    }))
}

/// Default decay times: nine points spanning `[1e-3, 1e-1]` log-uniformly.
pub fn default_decay_times() -> Vec<f64> {
    (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect()
}

fn semigroup(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let f = load_field(cfg)?;
    let grid = *f.grid();
    let bank = LpBank::build(grid)?;
    let policy = cfg.policy(&grid)?;
    let space = cfg.space()?;
    let sigma = cfg.sigma.unwrap_or(0.0);
    let times = cfg.times.clone().unwrap_or_else(default_decay_times);
    let fit = smoothing_decay_fit(&bank, &f, cfg.theta, &space, sigma, &times, &policy)?;
    let name = cfg.csv_name.as_deref().unwrap_or("semigroup.csv");
    out.csv(
        name,
        &["t", "norm", "fitted_slope"],
        fit.samples.iter().map(|&(t, v)| [num(t), num(v), num(fit.slope)]),
    )?;
    let predicted = (space.s - sigma) / cfg.theta;
    Ok(json!({
        "slope": fit.slope,
        "fit_residual": fit.residual,
        "predicted_slope": predicted,
        "relative_deviation": ((fit.slope - predicted) / predicted).abs(),
    }))
}

fn kernel_bounds(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let grid = cfg.grid()?;
    let bank = LpBank::build(grid)?;
    let need_t = || cfg.t.ok_or_else(|| RunError::config("t", "required for heat symbols"));
    let kind = cfg.symbol.unwrap_or(SymbolName::Homogeneous);
    let (symbol, m) = match kind {
        SymbolName::Homogeneous => {
            let m = cfg.m.unwrap_or(1.0);
            (Symbol::homogeneous(m), m)
        }
        SymbolName::Heat => (Symbol::heat(cfg.theta, need_t()?), cfg.m.unwrap_or(0.0)),
        SymbolName::GradHeat => (
            Symbol::GradHeat {
                theta: cfg.theta,
                t: need_t()?,
                axis: cfg.axis.unwrap_or(0),
            },
            cfg.m.unwrap_or(0.0),
        ),
    };
    let lo = cfg.j_min.unwrap_or(1);
    let hi = cfg.j_max.unwrap_or(bank.jmax());
    let ratios = dyadic_kernel_bound(&bank, &symbol, m, lo..=hi)?;
    out.csv(
        "kernel_bounds.csv",
        &["j", "ratio"],
        ratios.iter().map(|&(j, r)| [j.to_string(), num(r)]),
    )?;
    let max = ratios.iter().fold(0.0f64, |a, r| a.max(r.1));
    Ok(json!({
        "m": m,
        "j_range": [lo, hi],
        "max_ratio": max,
        "spread": spread(ratios.iter().map(|r| r.1)),
    }))
}

fn split(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let f = load_field(cfg)?;
    let grid = *f.grid();
    let bank = LpBank::build(grid)?;
    let policy = cfg.policy(&grid)?;
    let space = cfg.space()?;
    let level = cfg.split_level.unwrap_or(1);
    let (low, high) = frequency_split(&bank, &f, level)
        .map_err(|e| RunError::config("split_level", &e.to_string()))?;
    let parts = [&f, &low, &high];
    let terms: Vec<Vec<f64>> = parts
        .iter()
        .map(|g| besov_morrey_terms(&bank, g, &space, &policy))
        .collect::<Result<_, _>>()?;
    out.csv(
        "split.csv",
        &["j", "full", "low", "high"],
        (0..terms[0].len()).map(|j| {
            [
                j.to_string(),
                num(terms[0][j]),
                num(terms[1][j]),
                num(terms[2][j]),
            ]
        }),
    )?;
    let norms: Vec<f64> = parts
        .iter()
        .map(|g| besov_morrey_norm(&bank, g, &space, &policy))
        .collect::<Result<_, _>>()?;
    let tail = if cfg.jwin >= 1 && cfg.jwin <= bank.jmax() {
        Some(bank.tail_smallness(&high, &space, cfg.jwin, &policy)?)
    } else {
        None
    };
    Ok(json!({
        "split_level": level,
        "full_norm": norms[0],
        "low_norm": norms[1],
        "high_norm": norms[2],
        "high_tail": tail,
    }))
}

fn solve(cfg: &ExperimentConfig, out: &mut Outputs, kind: EquationKind) -> Result<Value, RunError> {
    let grid = cfg.grid()?;
    let spec = cfg.problem(kind)?;
    let recipe = cfg.recipe(None)?;
    let base = solve_at(cfg, &spec, &recipe, grid, cfg.nodes, out, "")?;
    if !cfg.refine {
        return Ok(base);
    }
    let fine = grid
        .refined(2)
        .map_err(|e| RunError::config("M", &e.to_string()))?;
    let refined = solve_at(cfg, &spec, &recipe, fine, 2 * cfg.nodes, out, "_refined")?;
    Ok(json!({ "base": base, "refined": refined }))
}

#[allow(clippy::too_many_arguments)]
fn solve_at(
    cfg: &ExperimentConfig,
    spec: &ProblemSpec,
    recipe: &DataRecipe,
    grid: GridSpec,
    nodes: usize,
    out: &mut Outputs,
    suffix: &str,
) -> Result<Value, RunError> {
    let data = realize(recipe, &grid)?;
    let mesh = fracmorrey_core::solver::TimeMesh::graded(cfg.horizon, nodes, cfg.nu)
        .map_err(|e| RunError::config("K", &e.to_string()))?;
    let controls = cfg.controls(&grid)?;
    let policy = controls.policy.clone();
    let solver = PicardSolver::new(*spec, &data, mesh, controls)?;
    let trace = solver.run()?;

    out.csv(
        &format!("sweeps{suffix}.csv"),
        &["sweep", "x_norm", "diff_norm", "ratio"],
        trace.x_norms.iter().enumerate().map(|(n, &x)| {
            let diff = n.checked_sub(1).and_then(|k| trace.diff_norms.get(k)).copied();
            let ratio = n.checked_sub(2).and_then(|k| trace.contraction_ratios.get(k)).copied();
            [n.to_string(), num(x), opt_num(diff), opt_num(ratio)]
        }),
    )?;

    let (s, p, q, theta) = (spec.space.s, spec.space.p, spec.space.q, spec.theta);
    let hj = kind_is_hj(spec);
    let rows: Vec<NodeRow> = trace
        .times
        .par_iter()
        .zip(trace.solution.par_iter())
        .map(|(&t, u)| {
            let morrey = morrey_norm(u, p, q, &policy)?;
            let grad = if hj {
                let mag = pointwise_magnitude(&spectral_gradients(u)?)?;
                let gm = morrey_norm(&mag, p, q, &policy)?;
                Some((gm, t.powf((1.0 - s) / theta) * gm))
            } else {
                None
            };
            Ok(NodeRow {
                t,
                morrey,
                weighted: t.powf(-s / theta) * morrey,
                max_abs: u.max_abs(),
                grad,
            })
        })
        .collect::<fracmorrey_core::Result<_>>()?;
    let mut header = vec!["t", "morrey", "weighted", "max_abs"];
    if hj {
        header.extend(["grad_morrey", "grad_weighted"]);
    }
    out.csv(
        &format!("nodes{suffix}.csv"),
        &header,
        rows.iter().map(|r| {
            let mut row = vec![num(r.t), num(r.morrey), num(r.weighted), num(r.max_abs)];
            if let Some((gm, gw)) = r.grad {
                row.extend([num(gm), num(gw)]);
            }
            row
        }),
    )?;
    let last = trace.solution.last().expect("mesh is nonempty");
    out.bytes(&format!("final{suffix}.fbmf"), &fbmf::encode(last))?;

    let window = || rows.iter().filter(|r| r.t >= PROFILE_WINDOW_START);
    let residual = if trace.status == Status::Converged {
        Some(solver.fixed_point_residual(&trace.solution)?)
    } else {
        None
    };
    let late_ratio = trace.contraction_ratios.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(json!({
        "M": grid.points(),
        "K": nodes,
        "status": trace.status.as_str(),
        "diagnostic": trace.diagnostic,
        "sweeps": trace.sweeps(),
        "final_norm": trace.x_norms.last(),
        "max_contraction_ratio": (!trace.contraction_ratios.is_empty()).then_some(late_ratio),
        "fixed_point_residual": residual,
        "weighted_spread": spread(window().map(|r| r.weighted)),
        "grad_weighted_spread": if hj { spread(window().filter_map(|r| r.grad.map(|g| g.1))) } else { None },
    }))
}

/// Per-node diagnostics of a solve; `grad` holds the Morrey norm of `|∇u|`
/// and its weighted value for the Hamilton-Jacobi kind.
struct NodeRow {
    t: f64,
    morrey: f64,
    weighted: f64,
    max_abs: f64,
    grad: Option<(f64, f64)>,
}

fn kind_is_hj(spec: &ProblemSpec) -> bool {
    spec.kind == EquationKind::HamiltonJacobi
}

fn scan(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let grid = cfg.grid()?;
    let spec = cfg.problem(cfg.equation.into())?;
    let recipe = cfg.recipe(None)?.with_amplitude(1.0);
    let amplitudes = cfg
        .amplitudes
        .clone()
        .ok_or_else(|| RunError::config("amplitudes", "required for this experiment"))?;
    let mut levels = vec![(grid, cfg.nodes)];
    if cfg.refine {
        let fine = grid
            .refined(2)
            .map_err(|e| RunError::config("M", &e.to_string()))?;
        levels.push((fine, 2 * cfg.nodes));
    }
    let mut brackets = Vec::new();
    for (level, &(g, k)) in levels.iter().enumerate() {
        let shape = realize(&recipe, &g)?;
        let mesh = fracmorrey_core::solver::TimeMesh::graded(cfg.horizon, k, cfg.nu)
            .map_err(|e| RunError::config("K", &e.to_string()))?;
        let controls = cfg.controls(&g)?;
        let result = threshold_scan(spec, &shape, &amplitudes, &mesh, &controls)
            .map_err(|e| match e {
                fracmorrey_core::Error::Parameter(m) => RunError::config("amplitudes", &m),
                other => other.into(),
            })?;
        let suffix = if level == 0 { "" } else { "_refined" };
        out.csv(
            &format!("threshold_scan{suffix}.csv"),
            &["amplitude", "status", "sweeps", "final_ratio", "final_diff"],
            result.rows.iter().map(|r| {
                [
                    num(r.amplitude),
                    r.status.as_str().to_string(),
                    r.sweeps.to_string(),
                    opt_num(r.final_ratio),
                    opt_num(r.final_diff),
                ]
            }),
        )?;
        brackets.push((g.points(), k, result));
    }
    out.csv(
        "bracket.csv",
        &["M", "K", "largest_converged", "smallest_failed", "monotone"],
        brackets.iter().map(|(m, k, r)| {
            [
                m.to_string(),
                k.to_string(),
                opt_num(r.largest_converged),
                opt_num(r.smallest_failed),
                r.monotone.to_string(),
            ]
        }),
    )?;
    let describe = |(m, k, r): &(usize, usize, ThresholdScan)| {
        json!({
            "M": m,
            "K": k,
            "largest_converged": r.largest_converged,
            "smallest_failed": r.smallest_failed,
            "monotone": r.monotone,
        })
    };
    let mut summary = json!({ "brackets": brackets.iter().map(describe).collect::<Vec<_>>() });
    if let [(_, _, a), (_, _, b)] = brackets.as_slice() {
        let rel = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => Some((y - x).abs() / x),
            _ => None,
        };
        summary["lower_change"] = json!(rel(a.largest_converged, b.largest_converged));
        summary["upper_change"] = json!(rel(a.smallest_failed, b.smallest_failed));
    }
    Ok(summary)
}

fn ladder(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let kind: EquationKind = cfg.equation.into();
    let gamma = cfg.gamma()?;
    let p = cfg.p.ok_or_else(|| RunError::config("p", "required for this experiment"))?;
    let q = cfg.q.ok_or_else(|| RunError::config("q", "required for this experiment"))?;
    let n = cfg.dim as f64;
    // Without an explicit s, start in the middle of the admissible window.
    let s = cfg.s.unwrap_or_else(|| {
        let (b, floor) = match kind {
            EquationKind::Power => (cfg.theta / gamma, n / p - cfg.theta / (gamma - 1.0)),
            EquationKind::HamiltonJacobi => (
                (cfg.theta - gamma) / gamma,
                n / p - (cfg.theta - gamma) / (gamma - 1.0),
            ),
        };
        0.5 * (-b).max(floor)
    });
    let rows = bootstrap_schedule(cfg.dim, cfg.theta, gamma, p, q, s, kind)?;
    let checks: Vec<Result<(), String>> = rows
        .iter()
        .map(|r| check_ladder_row(kind, cfg.dim, cfg.theta, gamma, r))
        .collect();
    out.csv(
        "ladder.csv",
        &["rung", "p", "q", "s", "n_over_p", "check"],
        rows.iter().zip(&checks).enumerate().map(|(j, (r, c))| {
            [
                (j + 1).to_string(),
                num(r.p),
                num(r.q),
                num(r.s),
                num(n / r.p),
                c.clone().err().unwrap_or_else(|| "ok".into()),
            ]
        }),
    )?;
    Ok(json!({
        "rungs": rows.len(),
        "s": s,
        "all_rows_pass": checks.iter().all(Result::is_ok),
    }))
}

fn embedding(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Value, RunError> {
    let grid = cfg.grid()?;
    let shell_s = match &cfg.data {
        None => cfg.s,
        Some(d) if d.kind == DataKindName::RandomShell => d.s.or(cfg.s),
        Some(_) => {
            return Err(RunError::config("data.kind", "embedding-check samples random_shell fields"))
        }
    }
    .ok_or_else(|| RunError::config("s", "required for this experiment"))?;
    let space = cfg.space()?;
    let l = match (cfg.l, cfg.gamma) {
        (Some(l), _) => l,
        (None, Some(g)) => 1.0 / g,
        (None, None) => return Err(RunError::config("l", "give l or gamma")),
    };
    if cfg.samples == 0 {
        return Err(RunError::config("samples", "must be >= 1"));
    }
    let amplitude = cfg.data.as_ref().map_or(1.0, |d| d.amplitude);
    let mut grids = vec![grid];
    if cfg.refine {
        grids.push(grid.refined(2).map_err(|e| RunError::config("M", &e.to_string()))?);
    }
    let seeds: Vec<u64> = (0..cfg.samples as u64).map(|k| cfg.seed + k).collect();
    let mut sample_rows = Vec::new();
    let mut fitted = Vec::new();
    for g in &grids {
        let bank = LpBank::build(*g)?;
        let policy = cfg.policy(g)?;
        let samples: Vec<EmbeddingRatios> = seeds
            .par_iter()
            .map(|&seed| {
                let recipe = DataRecipe::new(DataKind::RandomShell { s: shell_s, seed }, amplitude);
                let f = realize(&recipe, g)?;
                embedding_ratios(&bank, &f, space.s, space.p, space.q, l, &policy)
            })
            .collect::<fracmorrey_core::Result<_>>()?;
        for (seed, r) in seeds.iter().zip(&samples) {
            sample_rows.push(ratio_row(g.points(), Some(*seed), r));
        }
        fitted.push((g.points(), fitted_embedding_constants(&samples)));
    }
    let header = [
        "M",
        "seed",
        "sup_over_besov_morrey",
        "besov_inf_over_morrey",
        "morrey_over_besov_one",
        "lifted_over_besov_morrey",
    ];
    out.csv("embedding.csv", &header, sample_rows)?;
    out.csv(
        "constants.csv",
        &header,
        fitted.iter().map(|(m, c)| ratio_row(*m, None, c)),
    )?;
    let as_json = |c: &EmbeddingRatios| {
        json!({
            "sup_over_besov_morrey": c.sup_over_besov_morrey,
            "besov_inf_over_morrey": c.besov_inf_over_morrey,
            "morrey_over_besov_one": c.morrey_over_besov_one,
            "lifted_over_besov_morrey": c.lifted_over_besov_morrey,
        })
    };
    let mut summary = json!({
        "l": l,
        "constants": fitted.iter().map(|(m, c)| json!({ "M": m, "fitted": as_json(c) })).collect::<Vec<_>>(),
    });
    if let [(_, a), (_, b)] = fitted.as_slice() {
        summary["max_relative_change"] = json!(max_relative_change(a, b));
    }
    Ok(summary)
}

fn ratio_row(points: usize, seed: Option<u64>, r: &EmbeddingRatios) -> Vec<String> {
    vec![
        points.to_string(),
        seed.map(|s| s.to_string()).unwrap_or_default(),
        num(r.sup_over_besov_morrey),
        num(r.besov_inf_over_morrey),
        num(r.morrey_over_besov_one),
        num(r.lifted_over_besov_morrey),
    ]
}

/// Largest relative change of any fitted constant between two resolutions.
pub fn max_relative_change(a: &EmbeddingRatios, b: &EmbeddingRatios) -> f64 {
    [
        (a.sup_over_besov_morrey, b.sup_over_besov_morrey),
        (a.besov_inf_over_morrey, b.besov_inf_over_morrey),
        (a.morrey_over_besov_one, b.morrey_over_besov_one),
        (a.lifted_over_besov_morrey, b.lifted_over_besov_morrey),
    ]
    .iter()
    .fold(0.0f64, |m, &(x, y)| m.max((y - x).abs() / x))
}
