//! Steady states of the pumped bad-cavity laser.

pub mod cli;
pub mod cumulant;
pub mod dicke;
pub mod ed;
pub mod inhomogeneous;
pub mod error;
pub mod observables;
pub mod ode;
pub mod oracle;
pub mod params;
pub mod rates;
pub mod scan;
mod skyline;
pub mod steady;

pub use dicke::{build_space, degeneracy, DickeIndex, StateSpace};
pub use error::{Error, Result};
pub use observables::{compute_observables, ObservablesRecord};
pub use params::{derived_gammas, effective_pump_rates, EffectivePump, ModelParams, PumpLevelScheme};
pub use rates::{build_rate_matrix, channel_rates, Channel, RateMatrix, Transition};
pub use steady::{steady_state, PopulationVector, SolveOptions, SolverWarning};
pub use ed::{solve_ed, solve_ed_on, AutoTruncation, EdSolution, TruncationPolicy};
