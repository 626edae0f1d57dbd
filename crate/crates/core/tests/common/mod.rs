#![allow(dead_code)]

use fracmorrey_core::{Field, GridSpec};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// White-noise real field, deterministic in `seed`.
pub fn noise(grid: GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    Field::from_real(grid, &vals).unwrap()
}

/// Real trigonometric polynomial with random coefficients on wavenumbers `1..=kmax`
/// along each axis.
pub fn band_limited(grid: GridSpec, kmax: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = 2.0 * std::f64::consts::PI / grid.box_length();
    let terms: Vec<(usize, usize, f64, f64)> = (0..grid.dim())
        .flat_map(|axis| (1..=kmax).map(move |k| (axis, k)))
        .map(|(axis, k)| (axis, k, rng.sample(StandardNormal), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    Field::from_fn(grid, |x| {
        terms
            .iter()
            .map(|&(axis, k, a, ph)| a * (w * k as f64 * x[axis] + ph).cos())
            .sum()
    })
}

pub fn max_diff(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().max_abs()
}

/// Adaptive Simpson quadrature of a scalar function on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}
