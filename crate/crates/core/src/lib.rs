//! Lattice-wave laboratory: variable-mass FPUT chains, their KdV effective
//! dynamics, multiscale approximators with autoregressive correctors, and
//! an experiment harness that measures amplitude attenuation and
//! convergence rates.
//!
//! Layout:
//! - [`lattice`]: difference operators, disorder generators, the chain
//!   right-hand side, energy and norms.
//! - [`integrator`]: fixed-step RK4 with deterministic sampling.
//! - [`kdv`]: closed-form soliton and pseudospectral KdV evolution with
//!   derivatives, antiderivatives and second-order correctors.
//! - [`approximator`]: the multiscale lattice approximators, their
//!   autoregressive correction sequences, residual and size diagnostics.
//! - [`harness`]: experiment runners, slope fitting, CSV output.
//! - [`rng`]: counter-based deterministic randomness.

pub mod approximator;
pub mod harness;
pub mod integrator;
pub mod kdv;
pub mod lattice;
pub mod rng;

pub use approximator::{
    ar1_reference, gamma_build, Approximator, ApproximatorConfig, ExpansionOrder, GammaProcesses,
};
pub use integrator::{integrate, rk4_step, IntegrationPlan, IntegratorError};
pub use kdv::{kdv_evolve, soliton, split_initial_data, WaveFamily};
pub use lattice::{
    energy_h, fput_rhs, make_mass, LatticeError, LatticeState, MassModel, MassProfile, MassSpec,
    NoiseDistribution, NoiseSequence,
};
pub use rng::CounterRng;
