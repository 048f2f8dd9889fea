//! Continuous-action point-mass reacher.
//!
//! A unit mass moves in a walled 2-D arena under a bounded 2-D force. The
//! reward is the negative distance to a fixed target point minus a small
//! action-magnitude penalty, so the signal is dense and the action space is
//! a box — the structural features the continuous attacks rely on.

use rand::Rng;

use crate::mdp::Mdp;
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

const DT: f64 = 0.1;
const MAX_SPEED: f64 = 1.0;
const WALL: f64 = 2.0;
const ACTION_COST: f64 = 0.01;

/// State `[px, py, vx, vy]`; action = force in `[-1, 1]^2`; target at the
/// origin.
#[derive(Debug, Clone)]
pub struct PointMass {
    pub horizon: usize,
    space: ActionSpace,
}

impl Default for PointMass {
    fn default() -> Self {
        PointMass::new(200)
    }
}

impl PointMass {
    pub fn new(horizon: usize) -> Self {
        PointMass {
            horizon,
            space: ActionSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0])
                .expect("unit box is valid"),
        }
    }

    /// Width of the reward range over the reachable arena, used to scale
    /// attack magnitudes the way reward-relative sweeps expect.
    pub fn reward_range(&self) -> f64 {
        // best: at the target with zero action (0); worst: a far corner at
        // full force.
        (WALL * WALL * 2.0).sqrt() + ACTION_COST * 2.0
    }
}

impl Mdp for PointMass {
    fn state_dim(&self) -> usize {
        4
    }

    fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample_initial(&self, rng: &mut RunRng) -> State {
        vec![
            rng.gen_range(-WALL..WALL),
            rng.gen_range(-WALL..WALL),
            0.0,
            0.0,
        ]
    }

    fn transition(&self, s: &State, a: &Action, rng: &mut RunRng) -> State {
        let _ = rng;
        let f = a.as_continuous().expect("pointmass actions are continuous");
        let mut vx = (s[2] + DT * f[0]).clamp(-MAX_SPEED, MAX_SPEED);
        let mut vy = (s[3] + DT * f[1]).clamp(-MAX_SPEED, MAX_SPEED);
        let mut px = s[0] + DT * vx;
        let mut py = s[1] + DT * vy;
        if px.abs() > WALL {
            px = px.clamp(-WALL, WALL);
            vx = 0.0;
        }
        if py.abs() > WALL {
            py = py.clamp(-WALL, WALL);
            vy = 0.0;
        }
        vec![px, py, vx, vy]
    }

    fn reward(&self, s: &State, a: &Action) -> f64 {
        let f = a.as_continuous().expect("pointmass actions are continuous");
        let dist = (s[0] * s[0] + s[1] * s[1]).sqrt();
        let effort: f64 = f.iter().map(|x| x * x).sum();
        -dist - ACTION_COST * effort
    }

    fn is_terminal(&self, _s: &State) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn at_target_with_zero_action_reward_is_zero() {
        let env = PointMass::default();
        let s = vec![0.0, 0.0, 0.0, 0.0];
        assert_eq!(env.reward(&s, &Action::Continuous(vec![0.0, 0.0])), 0.0);
    }

    #[test]
    fn walls_contain_the_mass() {
        let env = PointMass::default();
        let mut rng = substream(2, Stream::Env);
        let mut s = env.sample_initial(&mut rng);
        for _ in 0..1000 {
            s = env.transition(&s, &Action::Continuous(vec![1.0, 1.0]), &mut rng);
            assert!(s[0].abs() <= WALL && s[1].abs() <= WALL);
        }
    }

    #[test]
    fn force_moves_the_mass_toward_the_push() {
        let env = PointMass::default();
        let mut rng = substream(2, Stream::Env);
        let s = vec![0.0, 0.0, 0.0, 0.0];
        let next = env.transition(&s, &Action::Continuous(vec![1.0, 0.0]), &mut rng);
        assert!(next[0] > 0.0);
        assert_eq!(next[1], 0.0);
    }
}
