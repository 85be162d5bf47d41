//! Brute-force reference solvers: a Monte-Carlo Liouville ensemble for
//! classical moments and wavefunction solvers for the quantum ones.

mod ground;
mod mc;
mod wave;

pub use ground::{ground_state_grid, GroundSpec, GroundState};
pub use mc::{liouville_mc, EnsembleSpec, McSeries};
pub use wave::{schrodinger_grid, GridSample, GridSeries, GridSpec, WavePacket};
