//! Shared helpers for unit tests: seeded band-limited random fields and
//! finite-difference oracles evaluated from closed-form closures. The
//! oracles never touch the spectral code paths they are used to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spectral::{Axis, Grid, ScalarField, VectorField2};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fine-grid spacing for finite-difference oracles (1024^2 oracle grid).
pub const FD_H: f64 = 1.0 / 1024.0;

/// Fourth-order centered first difference of a closure at one point
/// (second order floors near 1e-5 for O(1) trigonometric fields, above the
/// 1e-6 agreement these oracles certify).
pub fn fd_partial(f: impl Fn(f64, f64) -> f64, x1: f64, x2: f64, axis: Axis) -> f64 {
    let h = FD_H;
    let g = |s: f64| match axis {
        Axis::X1 => f(x1 + s, x2),
        Axis::X2 => f(x1, x2 + s),
    };
    (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h)
}

/// Fourth-order centered second difference along one axis.
fn fd_second(g: impl Fn(f64) -> f64) -> f64 {
    let h = FD_H;
    (-g(2.0 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2.0 * h)) / (12.0 * h * h)
}

/// Centered-stencil Laplacian of a closure at one point.
pub fn fd_laplacian(f: impl Fn(f64, f64) -> f64, x1: f64, x2: f64) -> f64 {
    fd_second(|s| f(x1 + s, x2)) + fd_second(|s| f(x1, x2 + s))
}

/// Seeded band-limited random field: trigonometric polynomial with modes
/// `1 <= max(|m1|,|m2|) <= max_mode`, coefficients damped by `1/(1+|m|^2)`,
/// normalized to the requested max-abs amplitude.
pub fn rand_band_limited(grid: Grid, seed: u64, max_mode: i64, amplitude: f64) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = ScalarField::zeros(grid);
    for m1 in -max_mode..=max_mode {
        for m2 in -max_mode..=max_mode {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let damp = 1.0 / (1.0 + (m1 * m1 + m2 * m2) as f64);
            let a: f64 = rng.gen_range(-1.0..1.0) * damp;
            let b: f64 = rng.gen_range(-1.0..1.0) * damp;
            let mode = ScalarField::from_fn(grid, |x1: f64, x2: f64| {
                let phase = TWO_PI * (m1 as f64 * x1 + m2 as f64 * x2);
                a * phase.cos() + b * phase.sin()
            });
            field = field.add(&mode);
        }
    }
    let max = field.max_abs();
    if max > 0.0 {
        field.scaled(amplitude / max)
    } else {
        field
    }
}

/// Seeded band-limited divergence-free field built from a random
/// streamfunction: `v = (d2 psi, -d1 psi)`.
pub fn rand_solenoidal(grid: Grid, seed: u64, max_mode: i64, amplitude: f64) -> VectorField2<f64> {
    let psi = rand_band_limited(grid, seed, max_mode, 1.0);
    let v = VectorField2::new(
        psi.derivative(Axis::X2, 1),
        psi.derivative(Axis::X1, 1).scaled(-1.0),
    );
    let max = v.max_abs();
    if max > 0.0 {
        v.scaled(amplitude / max)
    } else {
        v
    }
}
