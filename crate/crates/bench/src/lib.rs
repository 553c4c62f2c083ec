//! Shared fixtures for the criterion benchmarks.

use irr_core::numerics::{Field2D, Rng};

/// A seeded smooth test image with values in `[0, 1]`.
pub fn smooth_image(size: usize, seed: u64) -> Field2D {
    let mut rng = Rng::new(seed);
    let (fy, fx, phase) = (rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0), rng.uniform(0.0, 6.0));
    let n = size as f64;
    Field2D::from_fn(size, size, |r, c| {
        let y = r as f64 / n * std::f64::consts::TAU;
        let x = c as f64 / n * std::f64::consts::TAU;
        0.5 + 0.25 * (fy * y + phase).sin() * (fx * x).cos()
    })
}
