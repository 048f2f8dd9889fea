//! Classic-control CartPole (pole balance) with Euler integration.

use rand::Rng;

use crate::mdp::Mdp;
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_THRESHOLD: f64 = 2.4;

/// State `[x, x_dot, theta, theta_dot]`; actions 0 = push left, 1 = push
/// right; +1 reward per step until the pole falls or the cart leaves the
/// track.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub horizon: usize,
    space: ActionSpace,
}

impl Default for CartPole {
    fn default() -> Self {
        CartPole::new(500)
    }
}

impl CartPole {
    pub fn new(horizon: usize) -> Self {
        CartPole {
            horizon,
            space: ActionSpace::discrete(2).expect("2 >= 2"),
        }
    }
}

impl Mdp for CartPole {
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
        (0..4).map(|_| rng.gen_range(-0.05..0.05)).collect()
    }

    fn transition(&self, s: &State, a: &Action, rng: &mut RunRng) -> State {
        let _ = rng;
        let (x, x_dot, theta, theta_dot) = (s[0], s[1], s[2], s[3]);
        let force = if a.as_discrete() == Some(1) {
            FORCE_MAG
        } else {
            -FORCE_MAG
        };
        let cos_theta = theta.cos();
        let sin_theta = theta.sin();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_theta) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
            / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta * cos_theta / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS;
        vec![
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ]
    }

    fn reward(&self, _s: &State, _a: &Action) -> f64 {
        1.0
    }

    fn is_terminal(&self, s: &State) -> bool {
        s[0].abs() > X_THRESHOLD || s[2].abs() > THETA_THRESHOLD
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn upright_start_does_not_terminate_immediately() {
        let env = CartPole::default();
        let mut rng = substream(0, Stream::Env);
        let s = vec![0.0, 0.0, 0.0, 0.0];
        assert_eq!(env.reward(&s, &Action::Discrete(0)), 1.0);
        let next = env.transition(&s, &Action::Discrete(1), &mut rng);
        assert!(!env.is_terminal(&next));
        // pushing right from rest accelerates the cart rightward
        assert!(next[1] > 0.0);
    }

    #[test]
    fn pole_falls_without_balancing() {
        let env = CartPole::default();
        let mut rng = substream(3, Stream::Env);
        let mut s = vec![0.0, 0.0, 0.02, 0.0];
        let mut steps = 0;
        while !env.is_terminal(&s) && steps < 500 {
            s = env.transition(&s, &Action::Discrete(1), &mut rng);
            steps += 1;
        }
        assert!(env.is_terminal(&s), "constant pushing should topple the pole");
        assert!(steps < 200);
    }
}
