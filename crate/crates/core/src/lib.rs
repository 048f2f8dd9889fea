//! A laboratory for studying reward poisoning of online reinforcement
//! learning at desk scale.
//!
//! The crate wires three independent parties into one instrumented training
//! loop: an environment ([`mdp::Mdp`]), a learner ([`learners::Learner`]),
//! and an attack ([`attacks::Attack`]) that intercepts every reward before
//! the learner sees it. Each run produces a full [`mdp::TrainingLog`] from
//! which [`metrics`] derives attack-efficiency numbers (mean action distance
//! to a target policy, total and per-step perturbation spend), and
//! [`oracle`] re-derives the same quantities by brute force on small
//! enumerable MDPs.

pub mod attacks;
pub mod config;
pub mod distance;
pub mod envs;
pub mod learners;
pub mod mdp;
pub mod metrics;
pub mod net;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod space;

pub use mdp::{run_training, TrainingLog, TransitionRecord};
pub use policy::Policy;
pub use space::{Action, ActionSpace, State};
