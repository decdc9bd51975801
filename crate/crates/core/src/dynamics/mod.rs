//! Time integration, periodic orbits and their continuation, and
//! Lyapunov-type indicators.

mod continuation;
mod cycle;
mod integrate;
mod lyapunov;

pub use continuation::{
    continue_cycle, continue_from_hopf, BranchEnd, ContinuationOptions, CycleBranch, CyclePoint, HopfBranch,
};
pub use cycle::{
    assemble_cycle, find_limit_cycle, floquet_multipliers, flow_with_sensitivity, poincare_estimate, poincare_returns, shoot, Cycle,
    CycleOptions, CycleStability, FlowSensitivity, ShootingResult,
};
pub use integrate::{
    flow, integrate, solve, Control, Orbit, OrbitStats, Sampling, SolveSummary, SolverOptions, Step, Termination,
    Tolerances,
};
pub use lyapunov::{
    first_lyapunov_coefficient, largest_lyapunov_exponent, HopfNormalForm, LyapunovEstimate, LyapunovOptions,
    PURE_IMAGINARY_TOL,
};
