//! Shared parameter fixtures for the benchmarks.

use virodyn::{Clearance, ModelParams};

/// Linear immune clearance setting with a bistable window.
pub fn linear_immune(b: f64) -> ModelParams {
    ModelParams {
        lambda: 0.36,
        k: 1.0,
        beta: 0.11,
        gamma: 1.0,
        b,
        delta: 0.2,
        beta_y: 0.48,
        beta_v: 0.16,
        beta_z: 0.6,
        c: 0.036,
        epsilon: Clearance::Linear,
    }
}

/// Quadratic immune clearance setting with three interior equilibria.
pub fn quadratic_immune(b: f64) -> ModelParams {
    ModelParams {
        lambda: 1.0,
        k: 1.0,
        beta: 43.5,
        gamma: 1.0 / 128.0,
        b,
        delta: 0.5,
        beta_y: 1.0,
        beta_v: 1.0,
        beta_z: 1.0,
        c: 1.0,
        epsilon: Clearance::Quadratic,
    }
}
