//! Concrete environments.
//!
//! GridWorld is small enough to enumerate, which makes it the workhorse for
//! the brute-force verification oracle. MountainCar and CartPole use the
//! conventional classic-control dynamics. PointMass is a dense-reward
//! continuous-action task standing in for physics-engine environments.

mod cartpole;
mod gridworld;
mod mountaincar;
mod pointmass;

pub use cartpole::CartPole;
pub use gridworld::GridWorld;
pub use mountaincar::MountainCar;
pub use pointmass::PointMass;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("grid cell ({0}, {1}) is outside a {2}x{3} grid")]
    CellOutOfBounds(usize, usize, usize, usize),
    #[error("start and goal cells must differ")]
    StartIsGoal,
    #[error("slip probability must be in [0, 1), got {0}")]
    BadSlipProb(f64),
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("state enumeration is unsupported for {0}: state space is continuous")]
    NotEnumerable(&'static str),
}
