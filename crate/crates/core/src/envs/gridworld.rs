//! Enumerable grid navigation task.
//!
//! The agent walks a `width x height` grid from a start cell to a goal
//! cell. Moving into a wall leaves the position unchanged. With probability
//! `slip_prob` the chosen action is replaced by a uniformly random one.
//! The reward is a deterministic function of `(s, a)`: it pays
//! `goal_reward` when the *intended* move lands on the goal and
//! `step_reward` otherwise, so the reward function stays well-defined per
//! state-action pair under slips.

use rand::Rng;

use super::EnvError;
use crate::mdp::Mdp;
use crate::oracle::TabularMdp;
use crate::policy::StateIndexer;
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

/// Action indices: 0 = right, 1 = up, 2 = left, 3 = down.
const MOVES: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub step_reward: f64,
    pub goal_reward: f64,
    pub slip_prob: f64,
    pub horizon: usize,
    space: ActionSpace,
}

impl GridWorld {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        width: usize,
        height: usize,
        start: (usize, usize),
        goal: (usize, usize),
        step_reward: f64,
        goal_reward: f64,
        slip_prob: f64,
        horizon: usize,
    ) -> Result<Self, EnvError> {
        for &(x, y) in [&start, &goal] {
            if x >= width || y >= height {
                return Err(EnvError::CellOutOfBounds(x, y, width, height));
            }
        }
        if start == goal {
            return Err(EnvError::StartIsGoal);
        }
        if !(0.0..1.0).contains(&slip_prob) {
            return Err(EnvError::BadSlipProb(slip_prob));
        }
        if horizon == 0 {
            return Err(EnvError::ZeroHorizon);
        }
        Ok(GridWorld {
            width,
            height,
            start,
            goal,
            step_reward,
            goal_reward,
            slip_prob,
            horizon,
            space: ActionSpace::discrete(4).expect("4 >= 2"),
        })
    }

    /// Conventional instance: start at a corner, goal at the opposite one.
    pub fn standard(width: usize, height: usize, slip_prob: f64, horizon: usize) -> Self {
        GridWorld::new(
            width,
            height,
            (0, 0),
            (width - 1, height - 1),
            -1.0,
            10.0,
            slip_prob,
            horizon,
        )
        .expect("standard grid parameters are valid")
    }

    fn cell_of(&self, s: &State) -> (usize, usize) {
        (s[0].round() as usize, s[1].round() as usize)
    }

    fn state_of(&self, cell: (usize, usize)) -> State {
        vec![cell.0 as f64, cell.1 as f64]
    }

    /// Deterministic move with wall clamping.
    fn next_cell(&self, cell: (usize, usize), action: usize) -> (usize, usize) {
        let (dx, dy) = MOVES[action];
        let nx = cell.0 as isize + dx;
        let ny = cell.1 as isize + dy;
        if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
            cell
        } else {
            (nx as usize, ny as usize)
        }
    }

    /// Complete, duplicate-free, stably ordered list of states
    /// (row-major: index = y * width + x).
    pub fn enumerate_states(&self) -> Vec<State> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| vec![x as f64, y as f64]))
            .collect()
    }

    pub fn indexer(&self) -> StateIndexer {
        StateIndexer::Grid {
            width: self.width,
            height: self.height,
        }
    }

    /// Exact tabular form of this grid for the verification oracle.
    pub fn to_tabular(&self) -> TabularMdp {
        let n = self.width * self.height;
        let idx = |c: (usize, usize)| c.1 * self.width + c.0;
        let mut transition = vec![vec![Vec::new(); 4]; n];
        let mut reward = vec![vec![0.0; 4]; n];
        for y in 0..self.height {
            for x in 0..self.width {
                let s = idx((x, y));
                for a in 0..4 {
                    let intended = self.next_cell((x, y), a);
                    reward[s][a] = if intended == self.goal {
                        self.goal_reward
                    } else {
                        self.step_reward
                    };
                    let mut probs = vec![0.0; n];
                    probs[idx(intended)] += 1.0 - self.slip_prob;
                    for slip in 0..4 {
                        probs[idx(self.next_cell((x, y), slip))] += self.slip_prob / 4.0;
                    }
                    transition[s][a] = probs
                        .into_iter()
                        .enumerate()
                        .filter(|(_, p)| *p > 0.0)
                        .collect();
                }
            }
        }
        let mut initial = vec![0.0; n];
        initial[idx(self.start)] = 1.0;
        let mut terminal = vec![false; n];
        terminal[idx(self.goal)] = true;
        TabularMdp {
            num_states: n,
            num_actions: 4,
            transition,
            reward,
            initial,
            terminal,
            horizon: self.horizon,
            action_space: self.space.clone(),
            states: self.enumerate_states(),
        }
    }
}

impl Mdp for GridWorld {
    fn state_dim(&self) -> usize {
        2
    }

    fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn sample_initial(&self, _rng: &mut RunRng) -> State {
        self.state_of(self.start)
    }

    fn transition(&self, s: &State, a: &Action, rng: &mut RunRng) -> State {
        let mut action = a.as_discrete().expect("grid actions are discrete");
        if self.slip_prob > 0.0 && rng.gen::<f64>() < self.slip_prob {
            action = rng.gen_range(0..4);
        }
        self.state_of(self.next_cell(self.cell_of(s), action))
    }

    fn reward(&self, s: &State, a: &Action) -> f64 {
        let action = a.as_discrete().expect("grid actions are discrete");
        if self.next_cell(self.cell_of(s), action) == self.goal {
            self.goal_reward
        } else {
            self.step_reward
        }
    }

    fn is_terminal(&self, s: &State) -> bool {
        self.cell_of(s) == self.goal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};

    #[test]
    fn right_from_origin() {
        let env = GridWorld::standard(5, 5, 0.0, 50);
        let mut rng = substream(0, Stream::Env);
        let s = vec![0.0, 0.0];
        let a = Action::Discrete(0);
        let s_next = env.transition(&s, &a, &mut rng);
        assert_eq!(s_next, vec![1.0, 0.0]);
        assert_eq!(env.reward(&s, &a), -1.0);
        assert!(!env.is_terminal(&s_next));
    }

    #[test]
    fn stepping_onto_goal_pays_and_terminates() {
        let env = GridWorld::standard(5, 5, 0.0, 50);
        let mut rng = substream(0, Stream::Env);
        let s = vec![3.0, 4.0]; // left of the (4,4) goal
        let a = Action::Discrete(0);
        assert_eq!(env.reward(&s, &a), 10.0);
        let s_next = env.transition(&s, &a, &mut rng);
        assert!(env.is_terminal(&s_next));
    }

    #[test]
    fn walls_block_movement() {
        let env = GridWorld::standard(3, 3, 0.0, 20);
        let mut rng = substream(0, Stream::Env);
        let s = vec![0.0, 0.0];
        assert_eq!(env.transition(&s, &Action::Discrete(2), &mut rng), s);
        assert_eq!(env.transition(&s, &Action::Discrete(3), &mut rng), s);
    }

    #[test]
    fn enumeration_is_complete_and_stable() {
        let g3 = GridWorld::standard(3, 3, 0.0, 20);
        assert_eq!(g3.enumerate_states().len(), 9);
        let g5 = GridWorld::standard(5, 5, 0.0, 50);
        assert_eq!(g5.enumerate_states().len(), 25);
        assert_eq!(g5.enumerate_states(), g5.enumerate_states());
        // no duplicates
        let states = g5.enumerate_states();
        for (i, a) in states.iter().enumerate() {
            for b in &states[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn tabular_rows_are_distributions() {
        let env = GridWorld::standard(3, 3, 0.1, 20);
        let tab = env.to_tabular();
        for s in 0..tab.num_states {
            for a in 0..tab.num_actions {
                let total: f64 = tab.transition[s][a].iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(tab.reward[0][0], -1.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(matches!(
            GridWorld::new(3, 3, (0, 0), (5, 5), -1.0, 10.0, 0.0, 10),
            Err(EnvError::CellOutOfBounds(..))
        ));
        assert!(matches!(
            GridWorld::new(3, 3, (1, 1), (1, 1), -1.0, 10.0, 0.0, 10),
            Err(EnvError::StartIsGoal)
        ));
        assert!(matches!(
            GridWorld::new(3, 3, (0, 0), (2, 2), -1.0, 10.0, 1.0, 10),
            Err(EnvError::BadSlipProb(_))
        ));
    }
}
