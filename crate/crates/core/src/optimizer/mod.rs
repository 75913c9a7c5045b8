//! Derivative-free minimisation of the swarm information cost.

mod nelder_mead;
mod swarm;

pub use nelder_mead::{
    nelder_mead, nelder_mead_traced, nelder_mead_with_steps, NelderMeadOptions, OptResult,
    OptimizationProblem, Termination, TraceRecord,
};
pub use swarm::{
    optimize_swarm, optimize_swarm_traced, pack_swarm, swarm_simplex_steps, unpack_swarm_into,
    CostMode, SwarmOptimization, DEGENERATE_PENALTY, DEGENERATE_RADIUS,
};
