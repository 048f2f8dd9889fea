//! Brute-force verification on enumerable MDPs.
//!
//! Everything here is exact finite-horizon dynamic programming over an
//! explicit tabular MDP: policy values, trajectory divergences between
//! policies, membership checks for the efficient adversarial-environment
//! conditions, the value-decomposition identity behind the adaptive
//! penalty, and the gap-dominance comparison against alternative
//! adversarial reward functions. Policy values are undiscounted episodic
//! returns under the horizon cap.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::attacks::{Attack, AttackConfig, AttackError, AttackKind};
use crate::metrics::EfficiencyReport;
use crate::policy::Policy;
use crate::rng::RunRng;
use crate::space::{Action, ActionSpace, State};

/// Explicit finite MDP: sparse transition rows, dense reward table.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// `transition[s][a]` lists `(next_state, probability)` with the
    /// probabilities summing to 1.
    pub transition: Vec<Vec<Vec<(usize, f64)>>>,
    /// `reward[s][a]`.
    pub reward: Vec<Vec<f64>>,
    /// Initial state distribution.
    pub initial: Vec<f64>,
    pub terminal: Vec<bool>,
    pub horizon: usize,
    pub action_space: ActionSpace,
    /// Feature vector for each state index, so policies defined on raw
    /// states can be projected onto this table.
    pub states: Vec<State>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("policy space has {count} deterministic policies, above the 1e6 enumeration cap")]
    TooManyPolicies { count: u128 },
    #[error("policy emits a non-discrete or out-of-range action at state {state}")]
    BadPolicyAction { state: usize },
    #[error("alternative reward table {index} fails EM condition {condition}: {detail}")]
    AlternativeRejected {
        index: usize,
        condition: u8,
        detail: String,
    },
    #[error("reward table shape does not match the MDP")]
    BadRewardShape,
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// Exact per-start-state values of a policy plus the initial-distribution
/// weighted overall value.
#[derive(Debug, Clone)]
pub struct PolicyValue {
    pub per_state: Vec<f64>,
    pub overall: f64,
}

/// Report of the efficient-adversarial-environment membership checks.
///
/// Condition 1 (learnability of the adversarial environment) is
/// assumption-level and not mechanically checkable; only conditions 2
/// (target optimality) and 3 (perturbation bound) are verified.
#[derive(Debug, Clone)]
pub struct EmReport {
    /// Target policy maximizes overall adversarial value over all
    /// enumerated policies.
    pub condition2: bool,
    /// Adversarial value of the target minus the best value among policies
    /// with positive divergence from it (negative = violated).
    pub condition2_margin: f64,
    /// `|R̂ − R| <= delta * d(a, target(s))` everywhere.
    pub condition3: bool,
    /// Max over `(s, a)` of `|R̂ − R| − delta * d`; positive = violated.
    pub condition3_max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct GapEntry {
    /// Smallest adversarial-value margin of the target over any policy
    /// with positive divergence.
    pub gap: f64,
    pub dominated_by_adaptive: bool,
}

#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub adaptive_gap: f64,
    pub alternatives: Vec<GapEntry>,
    pub all_dominated: bool,
}

impl TabularMdp {
    /// Projects a policy onto this table: the action index it takes at each
    /// enumerated state.
    pub fn policy_table(&self, pi: &Policy) -> Result<Vec<usize>, OracleError> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| match pi.act(s) {
                Action::Discrete(a) if a < self.num_actions => Ok(a),
                _ => Err(OracleError::BadPolicyAction { state: i }),
            })
            .collect()
    }

    /// Backward-induction sum of `step_value(s)` along trajectories of the
    /// policy: the shared engine behind values and divergences.
    fn dp_sum(&self, table: &[usize], step_value: &dyn Fn(usize) -> f64) -> PolicyValue {
        let mut next = vec![0.0; self.num_states];
        let mut cur = vec![0.0; self.num_states];
        for _ in 0..self.horizon {
            for s in 0..self.num_states {
                cur[s] = if self.terminal[s] {
                    0.0
                } else {
                    let a = table[s];
                    let mut v = step_value(s);
                    for &(s2, p) in &self.transition[s][a] {
                        v += p * next[s2];
                    }
                    v
                };
            }
            std::mem::swap(&mut next, &mut cur);
        }
        let overall = self
            .initial
            .iter()
            .zip(&next)
            .map(|(mu, v)| mu * v)
            .sum();
        PolicyValue {
            per_state: next,
            overall,
        }
    }

    /// Exact expected episodic return of a policy under this MDP's reward.
    pub fn evaluate_table(&self, table: &[usize]) -> PolicyValue {
        self.dp_sum(table, &|s| self.reward[s][table[s]])
    }

    /// Same, under a substituted reward table.
    pub fn evaluate_table_with_reward(&self, table: &[usize], reward: &[Vec<f64>]) -> PolicyValue {
        self.dp_sum(table, &|s| reward[s][table[s]])
    }

    /// Exact expected return of a policy given as a state→action map.
    pub fn evaluate_policy(&self, pi: &Policy) -> Result<PolicyValue, OracleError> {
        Ok(self.evaluate_table(&self.policy_table(pi)?))
    }

    /// Expected cumulative action distance between a policy and a target
    /// along the policy's own trajectories.
    pub fn divergence(&self, table: &[usize], target: &[usize]) -> PolicyValue {
        self.dp_sum(table, &|s| if table[s] == target[s] { 0.0 } else { 1.0 })
    }

    /// Monte-Carlo return estimate, an independent route to
    /// [`TabularMdp::evaluate_table`]: `(mean, standard_error)`.
    pub fn simulate_return(&self, table: &[usize], episodes: usize, rng: &mut RunRng) -> (f64, f64) {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..episodes {
            let mut s = self.sample_state(&self.initial, rng);
            let mut ret = 0.0;
            for _ in 0..self.horizon {
                if self.terminal[s] {
                    break;
                }
                let a = table[s];
                ret += self.reward[s][a];
                s = self.sample_next(s, a, rng);
            }
            sum += ret;
            sum_sq += ret * ret;
        }
        let n = episodes as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        (mean, (var / n).sqrt())
    }

    fn sample_state(&self, dist: &[f64], rng: &mut RunRng) -> usize {
        let mut u: f64 = rng.gen();
        for (s, p) in dist.iter().enumerate() {
            u -= p;
            if u <= 0.0 {
                return s;
            }
        }
        dist.len() - 1
    }

    fn sample_next(&self, s: usize, a: usize, rng: &mut RunRng) -> usize {
        let mut u: f64 = rng.gen();
        for &(s2, p) in &self.transition[s][a] {
            u -= p;
            if u <= 0.0 {
                return s2;
            }
        }
        self.transition[s][a].last().expect("nonempty row").0
    }

    /// Count of deterministic stationary policies, `|A|^|S|`.
    pub fn policy_count(&self) -> u128 {
        (self.num_actions as u128).pow(self.num_states as u32)
    }

    /// All deterministic stationary policies, lexicographic order. Refuses
    /// spaces above 1e6 policies.
    pub fn enumerate_policies(&self) -> Result<Vec<Vec<usize>>, OracleError> {
        let count = self.policy_count();
        if count > 1_000_000 {
            return Err(OracleError::TooManyPolicies { count });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut cur = vec![0usize; self.num_states];
        loop {
            out.push(cur.clone());
            // odometer increment
            let mut i = 0;
            loop {
                if i == self.num_states {
                    return Ok(out);
                }
                cur[i] += 1;
                if cur[i] < self.num_actions {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    /// Seeded uniform sample of policy tables, for spaces too large to
    /// enumerate.
    pub fn sample_policies(&self, n: usize, rng: &mut RunRng) -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| {
                (0..self.num_states)
                    .map(|_| rng.gen_range(0..self.num_actions))
                    .collect()
            })
            .collect()
    }

    /// The static adversarial reward table `R̂` of an attack configuration.
    pub fn adversarial_reward_table(&self, cfg: &AttackConfig) -> Result<Vec<Vec<f64>>, OracleError> {
        let mut out = vec![vec![0.0; self.num_actions]; self.num_states];
        for (s, row) in out.iter_mut().enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                let delta = Attack::static_delta(
                    cfg,
                    &self.action_space,
                    &self.states[s],
                    &Action::Discrete(a),
                )?;
                *v = self.reward[s][a] + delta;
            }
        }
        Ok(out)
    }

    /// Checks conditions 2 and 3 of the efficient adversarial-environment
    /// definition for an attack on this MDP.
    pub fn check_em_membership(&self, cfg: &AttackConfig) -> Result<EmReport, OracleError> {
        let rhat = self.adversarial_reward_table(cfg)?;
        self.check_em_membership_of_table(&rhat, cfg.delta, &cfg.target)
    }

    /// Every stationary policy with a positive-divergence flag relative to
    /// one target, computed once and shared across reward tables.
    fn policy_sweep(&self, target_table: &[usize]) -> Result<Vec<(Vec<usize>, bool)>, OracleError> {
        let policies = self.enumerate_policies()?;
        Ok(policies
            .into_par_iter()
            .map(|table| {
                let diverging = self.divergence(&table, target_table).overall > 1e-12;
                (table, diverging)
            })
            .collect())
    }

    /// Same check for an explicit adversarial reward table.
    pub fn check_em_membership_of_table(
        &self,
        rhat: &[Vec<f64>],
        delta: f64,
        target: &Policy,
    ) -> Result<EmReport, OracleError> {
        Ok(self.em_reports_for_tables(std::slice::from_ref(&rhat.to_vec()), delta, target)?
            .pop()
            .expect("one table in, one report out"))
    }

    /// Membership reports for several reward tables at once; the policy
    /// sweep is computed a single time and shared.
    pub fn em_reports_for_tables(
        &self,
        tables: &[Vec<Vec<f64>>],
        delta: f64,
        target: &Policy,
    ) -> Result<Vec<EmReport>, OracleError> {
        let target_table = self.policy_table(target)?;
        let sweep = self.policy_sweep(&target_table)?;
        tables
            .iter()
            .map(|rhat| self.em_report_from_sweep(rhat, delta, &target_table, &sweep))
            .collect()
    }

    fn em_report_from_sweep(
        &self,
        rhat: &[Vec<f64>],
        delta: f64,
        target_table: &[usize],
        sweep: &[(Vec<usize>, bool)],
    ) -> Result<EmReport, OracleError> {
        if rhat.len() != self.num_states || rhat.iter().any(|r| r.len() != self.num_actions) {
            return Err(OracleError::BadRewardShape);
        }

        // Condition 3: |R̂ - R| <= delta * d(a, target(s)) everywhere.
        let mut max_violation = f64::NEG_INFINITY;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let d = if a == target_table[s] { 0.0 } else { 1.0 };
                let violation = (rhat[s][a] - self.reward[s][a]).abs() - delta * d;
                max_violation = max_violation.max(violation);
            }
        }

        // Condition 2: the target maximizes overall adversarial value over
        // all enumerated policies; policies with zero divergence share its
        // trajectories and are counted as the same policy.
        let target_value = self.evaluate_table_with_reward(target_table, rhat).overall;
        let best_other = sweep
            .par_iter()
            .filter(|(_, diverging)| *diverging)
            .map(|(table, _)| self.evaluate_table_with_reward(table, rhat).overall)
            .reduce(|| f64::NEG_INFINITY, f64::max);
        let margin = target_value - best_other;

        Ok(EmReport {
            condition2: margin >= -1e-9,
            condition2_margin: margin,
            condition3: max_violation <= 1e-9,
            condition3_max_violation: max_violation,
        })
    }

    /// Residual of the value-decomposition identity
    /// `V̂(π) = V(π) − delta · D(π, target)` under the adaptive attack,
    /// maximized over start states. Both sides are computed by independent
    /// DP passes.
    pub fn decomposition_residual(
        &self,
        rhat: &[Vec<f64>],
        delta: f64,
        table: &[usize],
        target_table: &[usize],
    ) -> f64 {
        let vhat = self.evaluate_table_with_reward(table, rhat);
        let v = self.evaluate_table(table);
        let div = self.divergence(table, target_table);
        vhat.per_state
            .iter()
            .zip(v.per_state.iter().zip(&div.per_state))
            .map(|(vh, (v0, d))| (vh - (v0 - delta * d)).abs())
            .fold(0.0, f64::max)
    }

    /// Decomposition residual for the adaptive attack built from a target
    /// policy and penalty scale.
    pub fn verify_decomposition(
        &self,
        target: &Policy,
        delta: f64,
        table: &[usize],
    ) -> Result<f64, OracleError> {
        let cfg = AttackConfig::new(AttackKind::Adaptive, delta, target.clone());
        let rhat = self.adversarial_reward_table(&cfg)?;
        let target_table = self.policy_table(target)?;
        Ok(self.decomposition_residual(&rhat, delta, table, &target_table))
    }

    /// Smallest adversarial-value margin of the target over any enumerated
    /// policy with positive divergence.
    pub fn min_gap(&self, rhat: &[Vec<f64>], target_table: &[usize]) -> Result<f64, OracleError> {
        let sweep = self.policy_sweep(target_table)?;
        Ok(self.min_gap_from_sweep(rhat, target_table, &sweep))
    }

    fn min_gap_from_sweep(
        &self,
        rhat: &[Vec<f64>],
        target_table: &[usize],
        sweep: &[(Vec<usize>, bool)],
    ) -> f64 {
        let target_value = self.evaluate_table_with_reward(target_table, rhat).overall;
        sweep
            .par_iter()
            .filter(|(_, diverging)| *diverging)
            .map(|(table, _)| target_value - self.evaluate_table_with_reward(table, rhat).overall)
            .reduce(|| f64::INFINITY, f64::min)
    }

    /// Compares the adaptive attack's policy-value gap against alternative
    /// adversarial reward tables. Every alternative must pass EM conditions
    /// 2 and 3 first; failures are rejected before any comparison.
    pub fn theorem2_gap_comparison(
        &self,
        target: &Policy,
        delta: f64,
        alternatives: &[Vec<Vec<f64>>],
    ) -> Result<Theorem2Report, OracleError> {
        let target_table = self.policy_table(target)?;
        let sweep = self.policy_sweep(&target_table)?;
        let adaptive_cfg = AttackConfig::new(AttackKind::Adaptive, delta, target.clone());
        let adaptive_rhat = self.adversarial_reward_table(&adaptive_cfg)?;
        let adaptive_gap = self.min_gap_from_sweep(&adaptive_rhat, &target_table, &sweep);

        let mut entries = Vec::with_capacity(alternatives.len());
        for (index, rhat) in alternatives.iter().enumerate() {
            let em = self.em_report_from_sweep(rhat, delta, &target_table, &sweep)?;
            if !em.condition2 {
                return Err(OracleError::AlternativeRejected {
                    index,
                    condition: 2,
                    detail: format!("target optimality margin {}", em.condition2_margin),
                });
            }
            if !em.condition3 {
                return Err(OracleError::AlternativeRejected {
                    index,
                    condition: 3,
                    detail: format!("perturbation bound exceeded by {}", em.condition3_max_violation),
                });
            }
            let gap = self.min_gap_from_sweep(rhat, &target_table, &sweep);
            entries.push(GapEntry {
                gap,
                dominated_by_adaptive: adaptive_gap >= gap - 1e-9,
            });
        }
        let all_dominated = entries.iter().all(|e| e.dominated_by_adaptive);
        Ok(Theorem2Report {
            adaptive_gap,
            alternatives: entries,
            all_dominated,
        })
    }

    /// Alternative adversarial reward with the penalty scaled down to
    /// `c * d` instead of `delta * d`.
    pub fn scaled_penalty_table(&self, target: &Policy, c: f64) -> Result<Vec<Vec<f64>>, OracleError> {
        let cfg = AttackConfig::new(AttackKind::Adaptive, c, target.clone());
        self.adversarial_reward_table(&cfg)
    }

    /// Seeded random alternative: per-(s, a) penalty `u * delta * d` with
    /// `u` uniform in `[lo, 1]`.
    pub fn random_penalty_table(
        &self,
        target: &Policy,
        delta: f64,
        lo: f64,
        rng: &mut RunRng,
    ) -> Result<Vec<Vec<f64>>, OracleError> {
        let target_table = self.policy_table(target)?;
        let mut out = self.reward.clone();
        for (s, row) in out.iter_mut().enumerate() {
            for (a, v) in row.iter_mut().enumerate() {
                if a != target_table[s] {
                    *v -= rng.gen_range(lo..=1.0) * delta;
                }
            }
        }
        Ok(out)
    }

    /// Nonstationary optimal value per state under a reward table.
    pub fn optimal_value(&self, reward: &[Vec<f64>]) -> Vec<f64> {
        let mut next = vec![0.0; self.num_states];
        let mut cur = vec![0.0; self.num_states];
        for _ in 0..self.horizon {
            for s in 0..self.num_states {
                cur[s] = if self.terminal[s] {
                    0.0
                } else {
                    let mut best = f64::NEG_INFINITY;
                    for a in 0..self.num_actions {
                        let mut v = reward[s][a];
                        for &(s2, p) in &self.transition[s][a] {
                            v += p * next[s2];
                        }
                        best = best.max(v);
                    }
                    best
                };
            }
            std::mem::swap(&mut next, &mut cur);
        }
        next
    }

    /// Per-state sets of optimal actions (within `tol` of the best) under
    /// discounted infinite-horizon value iteration. This matches what a
    /// discounting learner converges to, ties included.
    pub fn optimal_action_sets(&self, gamma: f64, tol: f64) -> Vec<Vec<usize>> {
        let mut v = vec![0.0; self.num_states];
        for _ in 0..10_000 {
            let mut delta = 0.0f64;
            for s in 0..self.num_states {
                if self.terminal[s] {
                    continue;
                }
                let best = (0..self.num_actions)
                    .map(|a| {
                        self.reward[s][a]
                            + gamma
                                * self.transition[s][a]
                                    .iter()
                                    .map(|&(s2, p)| p * v[s2])
                                    .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((best - v[s]).abs());
                v[s] = best;
            }
            if delta < tol * 1e-3 {
                break;
            }
        }
        (0..self.num_states)
            .map(|s| {
                let q: Vec<f64> = (0..self.num_actions)
                    .map(|a| {
                        self.reward[s][a]
                            + gamma
                                * self.transition[s][a]
                                    .iter()
                                    .map(|&(s2, p)| p * v[s2])
                                    .sum::<f64>()
                    })
                    .collect();
                let best = q.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
                (0..self.num_actions).filter(|&a| q[a] >= best - tol).collect()
            })
            .collect()
    }

    /// Exact penalty scale above which the target policy beats every other
    /// enumerated stationary policy in the adaptive adversarial
    /// environment: `max over π with D>0 of (V(π) − V(target)) / D(π)`.
    pub fn required_delta_enumerated(&self, target: &Policy) -> Result<f64, OracleError> {
        let target_table = self.policy_table(target)?;
        let target_value = self.evaluate_table(&target_table).overall;
        let policies = self.enumerate_policies()?;
        let req = policies
            .par_iter()
            .filter_map(|table| {
                let d = self.divergence(table, &target_table).overall;
                if d > 1e-12 {
                    Some((self.evaluate_table(table).overall - target_value) / d)
                } else {
                    None
                }
            })
            .reduce(|| 0.0, f64::max);
        Ok(req.max(0.0))
    }

    /// Penalty scale sufficient for target optimality, found by bisection
    /// against the nonstationary optimal value; works on MDPs too large to
    /// enumerate. Conservative: always at least the enumerated threshold.
    pub fn sufficient_delta(&self, target: &Policy) -> Result<f64, OracleError> {
        let target_table = self.policy_table(target)?;
        let sufficient = |delta: f64| -> bool {
            let mut rhat = self.reward.clone();
            for (s, row) in rhat.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    if a != target_table[s] {
                        *v -= delta;
                    }
                }
            }
            let vstar = self.optimal_value(&rhat);
            let overall_star: f64 = self.initial.iter().zip(&vstar).map(|(mu, v)| mu * v).sum();
            let target_value = self.evaluate_table_with_reward(&target_table, &rhat).overall;
            overall_star <= target_value + 1e-9
        };
        if sufficient(0.0) {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut grow = 0;
        while !sufficient(hi) {
            hi *= 2.0;
            grow += 1;
            assert!(grow < 64, "no finite sufficient penalty found");
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if sufficient(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Checks the observable accounting content of the efficiency theorem on an
/// un-capped adaptive run: `C_total = delta * epsilon * T` within relative
/// tolerance (float summation order differs between the two routes) and
/// `B_realized <= delta`.
pub fn theorem1_accounting_check(report: &EfficiencyReport, delta: f64) -> bool {
    let expected_c = delta * report.epsilon * report.total_steps as f64;
    let c_ok = (report.c_total - expected_c).abs() <= 1e-6 * expected_c.abs().max(1.0);
    let b_ok = report.b_realized <= delta + 1e-12;
    c_ok && b_ok
}
