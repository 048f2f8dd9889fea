//! MDP interface, the instrumented episode loop, and its transition records.
//!
//! The loop enforces the interception ordering: the environment produces
//! `(s', r)`, the attack observes `(s, a, r, s')` and returns a perturbation
//! `delta`, and the learner receives only `r + delta`. Learners are handed
//! [`ObservedTransition`] values, which carry no true reward and no
//! perturbation, so the threat model is enforced by type visibility.

use thiserror::Error;

use crate::attacks::{Attack, AttackError};
use crate::distance::DistanceError;
use crate::learners::Learner;
use crate::policy::Policy;
use crate::rng::{substream, RunRng, Stream};
use crate::space::{Action, ActionSpace, State};

/// Everything an environment must provide: spaces, dynamics, reward,
/// initial distribution, horizon, and the terminal predicate.
pub trait Mdp: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_space(&self) -> &ActionSpace;
    /// Episode step cap.
    fn horizon(&self) -> usize;
    fn sample_initial(&self, rng: &mut RunRng) -> State;
    /// Draws the next state from the transition kernel.
    fn transition(&self, s: &State, a: &Action, rng: &mut RunRng) -> State;
    /// Deterministic reward for taking `a` in `s`.
    fn reward(&self, s: &State, a: &Action) -> f64;
    fn is_terminal(&self, s: &State) -> bool;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("action outside the action space: {0:?}")]
    ActionOutsideSpace(Action),
    #[error("episode already terminated; reset before stepping")]
    EpisodeTerminated,
    #[error("non-finite reward {reward} at step {step}")]
    NonFiniteReward { reward: f64, step: usize },
}

/// Position of one episode inside a run.
#[derive(Debug, Clone)]
pub struct EpisodeCursor {
    pub state: State,
    pub steps: usize,
    pub done: bool,
}

impl EpisodeCursor {
    pub fn reset<M: Mdp + ?Sized>(env: &M, rng: &mut RunRng) -> Self {
        let state = env.sample_initial(rng);
        let done = env.is_terminal(&state);
        EpisodeCursor {
            state,
            steps: 0,
            done,
        }
    }
}

/// Advances one environment step: draws `s'` from the transition kernel,
/// evaluates the true reward, and applies the horizon cap.
pub fn step<M: Mdp + ?Sized>(
    env: &M,
    cursor: &mut EpisodeCursor,
    action: &Action,
    rng: &mut RunRng,
) -> Result<(State, f64, bool), MdpError> {
    if cursor.done {
        return Err(MdpError::EpisodeTerminated);
    }
    if !env.action_space().contains(action) {
        return Err(MdpError::ActionOutsideSpace(action.clone()));
    }
    let r_true = env.reward(&cursor.state, action);
    if !r_true.is_finite() {
        return Err(MdpError::NonFiniteReward {
            reward: r_true,
            step: cursor.steps,
        });
    }
    let s_next = env.transition(&cursor.state, action, rng);
    cursor.steps += 1;
    let done = env.is_terminal(&s_next) || cursor.steps >= env.horizon();
    cursor.state = s_next.clone();
    cursor.done = done;
    Ok((s_next, r_true, done))
}

/// One fully instrumented step of a training run.
///
/// Invariant: `r_observed == r_true + delta` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub t: usize,
    pub episode: usize,
    pub s: State,
    pub a: Action,
    pub r_true: f64,
    pub delta: f64,
    pub r_observed: f64,
    pub s_next: State,
    pub done: bool,
}

/// The learner-visible slice of a transition: observed reward only.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedTransition {
    pub s: State,
    pub a: Action,
    pub r_observed: f64,
    pub s_next: State,
    pub done: bool,
}

/// Complete log of one training run.
#[derive(Debug, Clone)]
pub struct TrainingLog {
    pub records: Vec<TransitionRecord>,
    /// `d(a^t, target(s^t))` per step, measured against the attack's target.
    pub distances: Vec<f64>,
    pub seed: u64,
    /// Step at which the attack's spend budget ran out, if it did.
    pub exhausted_at: Option<usize>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("attack returned non-finite perturbation {delta} at step {step}")]
    NonFiniteDelta { delta: f64, step: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error("total steps must be >= 1")]
    NoSteps,
}

/// Runs `total_steps` training steps of learner vs. environment with the
/// attack intercepting every reward.
///
/// Per step: the learner picks an action (clipped into the box if
/// continuous — the clipped action is what the environment, attack, and
/// metrics all see), the environment returns `(s', r)`, the attack sees
/// `(s, a, r, s')` and returns `delta`, and the learner observes
/// `r + delta`. Episodes restart from the initial distribution; the
/// attack's budget ledger persists across episodes.
pub fn run_training<M: Mdp + ?Sized, L: Learner + ?Sized>(
    env: &M,
    learner: &mut L,
    attack: &mut Attack,
    total_steps: usize,
    seed: u64,
) -> Result<TrainingLog, RunError> {
    run_inner(env, learner, attack, total_steps, seed, None).map(|(log, _)| log)
}

/// Same loop, additionally freezing the learner's policy every
/// `snapshot_every` steps (and at the end). Returns `(step, policy)` pairs.
pub fn run_training_with_snapshots<M: Mdp + ?Sized, L: Learner + ?Sized>(
    env: &M,
    learner: &mut L,
    attack: &mut Attack,
    total_steps: usize,
    seed: u64,
    snapshot_every: usize,
) -> Result<(TrainingLog, Vec<(usize, Policy)>), RunError> {
    run_inner(env, learner, attack, total_steps, seed, Some(snapshot_every))
}

fn run_inner<M: Mdp + ?Sized, L: Learner + ?Sized>(
    env: &M,
    learner: &mut L,
    attack: &mut Attack,
    total_steps: usize,
    seed: u64,
    snapshot_every: Option<usize>,
) -> Result<(TrainingLog, Vec<(usize, Policy)>), RunError> {
    if total_steps == 0 {
        return Err(RunError::NoSteps);
    }
    let mut env_rng = substream(seed, Stream::Env);
    let mut learner_rng = substream(seed, Stream::Learner);

    let mut cursor = EpisodeCursor::reset(env, &mut env_rng);
    let mut episode = 0usize;
    let mut records = Vec::with_capacity(total_steps);
    let mut distances = Vec::with_capacity(total_steps);
    let mut snapshots = Vec::new();

    for t in 0..total_steps {
        let s = cursor.state.clone();
        let picked = learner.select_action(&s, t, &mut learner_rng);
        let a = env.action_space().clip(picked);
        let (s_next, r_true, done) = step(env, &mut cursor, &a, &mut env_rng)?;

        let outcome = attack.perturb(&s, &a, r_true, &s_next)?;
        if !outcome.delta.is_finite() {
            return Err(RunError::NonFiniteDelta {
                delta: outcome.delta,
                step: t,
            });
        }
        let r_observed = r_true + outcome.delta;

        learner.observe(
            &ObservedTransition {
                s: s.clone(),
                a: a.clone(),
                r_observed,
                s_next: s_next.clone(),
                done,
            },
            &mut learner_rng,
        );

        records.push(TransitionRecord {
            t,
            episode,
            s,
            a,
            r_true,
            delta: outcome.delta,
            r_observed,
            s_next,
            done,
        });
        distances.push(outcome.distance);

        if let Some(every) = snapshot_every {
            if every > 0 && (t + 1) % every == 0 {
                snapshots.push((t + 1, learner.snapshot_policy()));
            }
        }

        if done {
            episode += 1;
            cursor = EpisodeCursor::reset(env, &mut env_rng);
        }
    }

    if snapshot_every.is_some() && snapshots.last().map(|(t, _)| *t) != Some(total_steps) {
        snapshots.push((total_steps, learner.snapshot_policy()));
    }

    Ok((
        TrainingLog {
            records,
            distances,
            seed,
            exhausted_at: attack.ledger().exhausted_at,
        },
        snapshots,
    ))
}
