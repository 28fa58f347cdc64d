//! Exact analysis of the finite truncated chain.

pub mod chain;
pub mod export;
pub mod metrics;
pub mod solve;
pub mod transient;

pub use chain::{
    assemble_generator, enumerate_ball, irreducibility_check, Irreducibility, TruncatedChain,
};
pub use metrics::{concentration_tail, shift_tv, sigma_moment, tv_distance};
pub use solve::{
    solve_stein, stationary_distribution, ChainSolver, DiscreteDistribution, SteinSolution,
};
pub use transient::{decay_profile, stein_via_transient, transient_distribution, DecayProfile};
