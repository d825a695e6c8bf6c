use std::hash::Hash;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::reward::{PaidLandmarks, RewardScheme};
use crate::pomdp::{execute, Belief, EmptyBelief, Observation};
use crate::portal::Budget;
use crate::strips::{ActionId, CellId, Domain, WorldState};

#[derive(Clone, Debug, PartialEq)]
pub struct PomcpConfig {
    pub discount: f64,
    /// Rollouts stop once `discount^depth < epsilon`.
    pub epsilon: f64,
    pub exploration: f64,
    pub subgoal_reward: f64,
    pub search_reward: f64,
    pub startup_multiplier: f64,
}

impl Default for PomcpConfig {
    fn default() -> Self {
        PomcpConfig {
            discount: 0.97,
            epsilon: 0.01,
            exploration: 0.1,
            subgoal_reward: 1.0,
            search_reward: 0.1,
            startup_multiplier: 5.0,
        }
    }
}

/// Smallest `d` with `discount^d < epsilon`.
pub fn rollout_depth_cutoff(discount: f64, epsilon: f64) -> usize {
    assert!((0.0..1.0).contains(&discount) && epsilon > 0.0);
    let mut d = 0;
    let mut g = 1.0;
    while g >= epsilon {
        g *= discount;
        d += 1;
    }
    d
}

/// Generative model consumed by [`Pomcp`].
pub trait Simulator {
    type State: Clone + Eq + Hash + Ord;
    type Action: Copy + Eq + Ord;
    type Obs: Clone + Eq;

    /// Actions available in `state`, in a fixed order. Must only depend on
    /// what the agent can observe.
    fn legal_actions(&self, state: &Self::State, out: &mut Vec<Self::Action>);

    /// `None` if `action` cannot be executed in `state`.
    fn step(&self, state: &Self::State, action: Self::Action) -> Option<(Self::State, Self::Obs, f64)>;

    fn is_terminal(&self, state: &Self::State) -> bool;
}

struct ObsNode<S: Hash + Eq, A> {
    visits: u64,
    belief: Belief<S>,
    actions: Vec<(A, usize)>,
}

struct ActNode<O> {
    visits: u64,
    value: f64,
    children: Vec<(O, usize)>,
}

/// Standard POMCP: UCB descent, one new node per iteration, uniform-random
/// rollouts to the discount horizon, particles accumulated in visited
/// nodes.
pub struct Pomcp<M: Simulator> {
    model: M,
    config: PomcpConfig,
    horizon: usize,
    obs: Vec<ObsNode<M::State, M::Action>>,
    act: Vec<ActNode<M::Obs>>,
    root: usize,
    rng: ChaCha8Rng,
    scratch: Vec<M::Action>,
    iterations: u64,
}

impl<M: Simulator> Pomcp<M> {
    pub fn new(model: M, config: PomcpConfig, belief: Belief<M::State>, rng: ChaCha8Rng) -> Self {
        let horizon = rollout_depth_cutoff(config.discount, config.epsilon);
        let mut search = Pomcp {
            model,
            config,
            horizon,
            obs: Vec::new(),
            act: Vec::new(),
            root: 0,
            rng,
            scratch: Vec::new(),
            iterations: 0,
        };
        search.reset_root(belief);
        search
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn root_belief(&self) -> &Belief<M::State> {
        &self.obs[self.root].belief
    }

    /// Discards the tree and restarts from `belief`.
    pub fn reset_root(&mut self, belief: Belief<M::State>) {
        self.obs.clear();
        self.act.clear();
        self.root = self.new_obs_node(belief);
    }

    /// Root action values as `(action, visits, value)`.
    pub fn root_values(&self) -> Vec<(M::Action, u64, f64)> {
        self.obs[self.root]
            .actions
            .iter()
            .map(|(a, id)| (*a, self.act[*id].visits, self.act[*id].value))
            .collect()
    }

    pub fn search(&mut self, budget: Budget) -> Option<M::Action> {
        self.run(budget);
        self.best_action()
    }

    pub fn run(&mut self, budget: Budget) {
        match budget {
            Budget::Iterations(n) => {
                for _ in 0..n {
                    self.iterate();
                }
            }
            Budget::Time(d) => {
                let deadline = Instant::now() + d;
                while Instant::now() < deadline {
                    self.iterate();
                }
            }
        }
    }

    /// Visited root action with the highest value; ties go to the smaller
    /// action.
    pub fn best_action(&self) -> Option<M::Action> {
        let mut best: Option<(M::Action, f64)> = None;
        for (a, id) in &self.obs[self.root].actions {
            let node = &self.act[*id];
            if node.visits > 0 && best.is_none_or(|(_, v)| node.value > v) {
                best = Some((*a, node.value));
            }
        }
        best.map(|(a, _)| a)
    }

    pub fn iterate(&mut self) {
        let Some(s) = self.obs[self.root].belief.sample(&mut self.rng).cloned() else { return };
        let root = self.root;
        self.simulate(s, root, 0);
        self.iterations += 1;
    }

    /// Moves the root along the real `(action, observation)`. The new root
    /// belief is the old root belief pushed through the step and filtered
    /// on `observation`; if that is empty, the particles accumulated in the
    /// matching child are used instead.
    pub fn advance_root(&mut self, action: M::Action, observation: &M::Obs) -> Result<(), EmptyBelief> {
        let mut belief = Belief::new();
        for (s, n) in self.obs[self.root].belief.iter() {
            if let Some((next, o, _)) = self.model.step(s, action) {
                if o == *observation {
                    belief.insert(next, n);
                }
            }
        }
        if belief.is_empty() {
            if let Some(child) = self.child(self.root, action, observation) {
                belief = self.obs[child].belief.clone();
            }
        }
        if belief.is_empty() {
            return Err(EmptyBelief);
        }
        self.reset_root(belief);
        Ok(())
    }

    fn child(&self, h: usize, action: M::Action, observation: &M::Obs) -> Option<usize> {
        let (_, a) = self.obs[h].actions.iter().find(|(b, _)| *b == action)?;
        self.act[*a].children.iter().find(|(o, _)| o == observation).map(|(_, id)| *id)
    }

    fn new_obs_node(&mut self, belief: Belief<M::State>) -> usize {
        self.obs.push(ObsNode { visits: 0, belief, actions: Vec::new() });
        self.obs.len() - 1
    }

    fn expand(&mut self, h: usize, s: &M::State) {
        let mut legal = std::mem::take(&mut self.scratch);
        self.model.legal_actions(s, &mut legal);
        for a in &legal {
            self.act.push(ActNode { visits: 0, value: 0.0, children: Vec::new() });
            let id = self.act.len() - 1;
            self.obs[h].actions.push((*a, id));
        }
        self.scratch = legal;
    }

    fn simulate(&mut self, s: M::State, h: usize, depth: usize) -> f64 {
        if depth >= self.horizon || self.model.is_terminal(&s) {
            return 0.0;
        }
        if self.obs[h].actions.is_empty() && self.obs[h].visits == 0 {
            self.expand(h, &s);
            self.obs[h].visits += 1;
            if h != self.root {
                self.obs[h].belief.insert(s.clone(), 1);
            }
            return self.rollout(s, depth);
        }
        let Some((action, ha)) = self.select(h) else {
            self.obs[h].visits += 1;
            return 0.0;
        };
        let total = match self.model.step(&s, action) {
            Some((next, o, r)) => {
                let existing = self.act[ha].children.iter().find(|(b, _)| *b == o).map(|(_, id)| *id);
                let ret = match existing {
                    Some(child) => self.simulate(next, child, depth + 1),
                    None => {
                        // One new node per iteration: create it, then roll out.
                        let child = self.new_obs_node(Belief::new());
                        self.act[ha].children.push((o, child));
                        self.simulate(next, child, depth + 1)
                    }
                };
                r + self.config.discount * ret
            }
            None => 0.0,
        };
        if h != self.root {
            self.obs[h].belief.insert(s, 1);
        }
        self.obs[h].visits += 1;
        let node = &mut self.act[ha];
        node.visits += 1;
        node.value += (total - node.value) / node.visits as f64;
        total
    }

    fn select(&self, h: usize) -> Option<(M::Action, usize)> {
        let node = &self.obs[h];
        let log_n = (node.visits.max(1) as f64).ln();
        let mut best: Option<(M::Action, usize, f64)> = None;
        for (a, id) in &node.actions {
            let child = &self.act[*id];
            let score = if child.visits == 0 {
                f64::INFINITY
            } else {
                child.value + self.config.exploration * (log_n / child.visits as f64).sqrt()
            };
            if best.is_none_or(|(_, _, b)| score > b) {
                best = Some((*a, *id, score));
            }
        }
        best.map(|(a, id, _)| (a, id))
    }

    fn rollout(&mut self, mut s: M::State, mut depth: usize) -> f64 {
        let mut total = 0.0;
        let mut weight = 1.0;
        let mut legal = std::mem::take(&mut self.scratch);
        while depth < self.horizon && !self.model.is_terminal(&s) {
            self.model.legal_actions(&s, &mut legal);
            let Some(&a) = legal.choose(&mut self.rng) else { break };
            let Some((next, _, r)) = self.model.step(&s, a) else { break };
            total += weight * r;
            weight *= self.config.discount;
            s = next;
            depth += 1;
        }
        self.scratch = legal;
        total
    }
}

/// POMCP's view of a planning domain: the execution model with shaped
/// rewards, goal termination, and at most one search action per cell.
pub struct DomainSimulator<'d> {
    domain: &'d Domain,
    scheme: RewardScheme,
    search_at: Vec<Option<ActionId>>,
    buffer: std::cell::RefCell<Vec<ActionId>>,
}

impl<'d> DomainSimulator<'d> {
    pub fn new(domain: &'d Domain, config: &PomcpConfig) -> Self {
        let mut search_at = vec![None; domain.cells().len()];
        for id in domain.action_ids() {
            if let Some(c) = domain.search_cell(id) {
                search_at[c].get_or_insert(id);
            }
        }
        DomainSimulator {
            domain,
            scheme: RewardScheme::shaped(domain, config.subgoal_reward, config.search_reward),
            search_at,
            buffer: Default::default(),
        }
    }

    pub fn scheme(&self) -> &RewardScheme {
        &self.scheme
    }

    /// The search action used for `cell`, if any.
    pub fn search_action(&self, cell: CellId) -> Option<ActionId> {
        self.search_at[cell]
    }

    /// Pairs each particle with the landmarks it already satisfies.
    pub fn lift(&self, belief: &Belief) -> Belief<(WorldState, PaidLandmarks)> {
        let mut out = Belief::new();
        for (s, n) in belief.iter() {
            out.insert((s.clone(), self.scheme.already_paid(s)), n);
        }
        out
    }
}

impl Simulator for DomainSimulator<'_> {
    type State = (WorldState, PaidLandmarks);
    type Action = ActionId;
    type Obs = Observation;

    fn legal_actions(&self, (state, _): &Self::State, out: &mut Vec<ActionId>) {
        out.clear();
        let mut buffer = self.buffer.borrow_mut();
        self.domain.applicable_actions(state, &mut buffer);
        out.extend(buffer.iter().copied().filter(|a| self.domain.search_cell(*a).is_none()));
        let anything_hidden = (0..self.domain.entities().len()).any(|e| state.contains(self.domain.hidden_atom(e)));
        if anything_hidden {
            if let Some(search) = self.domain.robot_cell(state).and_then(|c| self.search_at[c]) {
                let pos = out.partition_point(|a| *a < search);
                out.insert(pos, search);
            }
        }
    }

    fn step(&self, (state, paid): &Self::State, action: ActionId) -> Option<(Self::State, Observation, f64)> {
        let (next, o) = execute(self.domain, state, action).ok()?;
        let mut paid = *paid;
        let r = self.scheme.reward_tracked(self.domain, state, action, &next, &mut paid);
        Some(((next, paid), o, r))
    }

    fn is_terminal(&self, (state, _): &Self::State) -> bool {
        self.domain.goal_satisfied(state)
    }
}

/// Toy POMDP used in tests: one decision between two actions with fixed
/// rewards, then termination.
#[derive(Clone, Debug)]
pub struct TwoArm {
    pub rewards: [f64; 2],
}

impl Simulator for TwoArm {
    type State = bool;
    type Action = u8;
    type Obs = ();

    fn legal_actions(&self, state: &bool, out: &mut Vec<u8>) {
        out.clear();
        if !*state {
            out.extend([0, 1]);
        }
    }

    fn step(&self, state: &bool, action: u8) -> Option<(bool, (), f64)> {
        if *state {
            return None;
        }
        Some((true, (), self.rewards[usize::from(action)]))
    }

    fn is_terminal(&self, state: &bool) -> bool {
        *state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn depth_cutoff_matches_horizon() {
        assert_eq!(rollout_depth_cutoff(0.97, 0.01), 152);
        assert!(0.97f64.powi(152) < 0.01);
        assert!(0.97f64.powi(151) >= 0.01);
    }

    #[test]
    fn two_arm_converges() {
        for seed in 0..100 {
            let model = TwoArm { rewards: [0.0, 1.0] };
            let mut search =
                Pomcp::new(model, PomcpConfig::default(), Belief::from_states([false]), stream(seed, Stream::Algorithm));
            assert_eq!(search.search(Budget::Iterations(500)), Some(1), "seed {seed}");
        }
    }

    #[test]
    fn zero_budget_has_no_action() {
        let mut search = Pomcp::new(
            TwoArm { rewards: [1.0, 0.0] },
            PomcpConfig::default(),
            Belief::from_states([false]),
            stream(0, Stream::Algorithm),
        );
        assert_eq!(search.search(Budget::Iterations(0)), None);
    }

    #[test]
    fn values_stay_within_return_bounds() {
        let mut search = Pomcp::new(
            TwoArm { rewards: [-2.0, 3.0] },
            PomcpConfig::default(),
            Belief::from_states([false]),
            stream(1, Stream::Algorithm),
        );
        search.run(Budget::Iterations(200));
        for (_, _, v) in search.root_values() {
            assert!((-2.0..=3.0).contains(&v));
        }
    }
}
