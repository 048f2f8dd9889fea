//! Classic-control MountainCar with the conventional Gym dynamics.

use rand::Rng;

use crate::mdp::Mdp;
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.5;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// Discrete actions: 0 = push left, 1 = no push, 2 = push right.
#[derive(Debug, Clone)]
pub struct MountainCar {
    pub horizon: usize,
    space: ActionSpace,
}

impl Default for MountainCar {
    fn default() -> Self {
        MountainCar::new(200)
    }
}

impl MountainCar {
    pub fn new(horizon: usize) -> Self {
        MountainCar {
            horizon,
            space: ActionSpace::discrete(3).expect("3 >= 2"),
        }
    }
}

impl Mdp for MountainCar {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample_initial(&self, rng: &mut RunRng) -> State {
        vec![rng.gen_range(-0.6..-0.4), 0.0]
    }

    fn transition(&self, s: &State, a: &Action, rng: &mut RunRng) -> State {
        let _ = rng; // dynamics are deterministic
        let action = a.as_discrete().expect("mountaincar actions are discrete") as f64;
        let (position, velocity) = (s[0], s[1]);
        let mut velocity = velocity + (action - 1.0) * FORCE + (3.0 * position).cos() * (-GRAVITY);
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        let mut position = position + velocity;
        position = position.clamp(MIN_POSITION, MAX_POSITION);
        if position <= MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        vec![position, velocity]
    }

    fn reward(&self, _s: &State, _a: &Action) -> f64 {
        -1.0
    }

    fn is_terminal(&self, s: &State) -> bool {
        s[0] >= GOAL_POSITION
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn push_right_update_matches_the_formula() {
        let env = MountainCar::default();
        let mut rng = substream(0, Stream::Env);
        let s = vec![-0.5, 0.0];
        let next = env.transition(&s, &Action::Discrete(2), &mut rng);
        // velocity' = 0 + 0.001 - 0.0025 * cos(-1.5); position' = -0.5 + velocity'
        let v = 0.001 - 0.0025 * (-1.5_f64).cos();
        assert!((next[1] - v).abs() < 1e-15);
        assert!((next[0] - (-0.5 + v)).abs() < 1e-15);
        // pinned regression values
        assert!((next[1] - 0.0008231569958307428).abs() < 1e-15);
        assert!((next[0] - (-0.49917684300416926)).abs() < 1e-15);
    }

    #[test]
    fn state_stays_in_bounds() {
        let env = MountainCar::default();
        let mut rng = substream(1, Stream::Env);
        let mut s = env.sample_initial(&mut rng);
        for t in 0..500 {
            s = env.transition(&s, &Action::Discrete(t % 3), &mut rng);
            assert!((MIN_POSITION..=MAX_POSITION).contains(&s[0]));
            assert!((-MAX_SPEED..=MAX_SPEED).contains(&s[1]));
        }
    }

    #[test]
    fn reward_is_minus_one_and_goal_terminates() {
        let env = MountainCar::default();
        assert_eq!(env.reward(&vec![-0.5, 0.0], &Action::Discrete(0)), -1.0);
        assert!(env.is_terminal(&vec![0.5, 0.01]));
        assert!(!env.is_terminal(&vec![0.49, 0.01]));
    }
}
