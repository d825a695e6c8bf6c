//! Plan-seeded belief-tree search.
//!
//! Each search iteration samples a particle from the root belief and
//! descends the history tree with UCT. When it reaches a meaningful node
//! whose plan count passes the progressive-widening test, it asks the
//! classical planner for a plan from the sampled particle. It then inserts
//! the whole plan into the tree by simulating it on every particle of the
//! node's belief. Observation branches that diverge from the sampled
//! particle's own branch are marked meaningful, so they become candidates
//! for further plan generation.

mod tree;

use std::collections::HashMap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::RewardScheme;
use crate::planner::Planner;
use crate::pomdp::{filter_belief, simulate_step, Belief, EmptyBelief, Observation};
use crate::strips::{ActionId, Domain, InapplicableAction, WorldState};

pub use tree::{ActId, ActNode, ObsId, ObsNode, Tree};

#[derive(Clone, Debug, PartialEq)]
pub struct PortalConfig {
    /// UCT exploration constant `c`.
    pub exploration: f64,
    /// Progressive widening: expand while `G < k * N^alpha`.
    pub widening_k: f64,
    pub widening_alpha: f64,
    pub reward_per_action: f64,
    pub discount: f64,
    /// Extra planning budget before the first step, in multiples of the
    /// per-step budget.
    pub startup_multiplier: f64,
}

impl Default for PortalConfig {
    fn default() -> Self {
        PortalConfig {
            exploration: 20.0,
            widening_k: 0.5,
            widening_alpha: 1.0,
            reward_per_action: -1.0,
            discount: 1.0,
            startup_multiplier: 5.0,
        }
    }
}

/// Planning budget for one decision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Iterations(u64),
    Time(Duration),
}

impl Budget {
    pub fn scaled(self, factor: f64) -> Budget {
        match self {
            Budget::Iterations(n) => Budget::Iterations((n as f64 * factor).round() as u64),
            Budget::Time(d) => Budget::Time(d.mul_f64(factor)),
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Budget::Iterations(n) => n == 0,
            Budget::Time(d) => d.is_zero(),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PortalError {
    #[error("no plan was inserted into the tree before the budget ran out")]
    NoChildren,
    #[error("root belief is empty")]
    EmptyBelief,
    #[error("model invariant violated: {0}")]
    Model(#[from] InapplicableAction),
}

impl From<EmptyBelief> for PortalError {
    fn from(_: EmptyBelief) -> Self {
        PortalError::EmptyBelief
    }
}

/// Cumulative counters over the lifetime of a search instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub iterations: u64,
    pub plans_generated: u64,
    /// Iterations whose sampled particle had no classical plan.
    pub planner_failures: u64,
}

/// `G < k * N^alpha`.
pub fn expand_test(visits: u64, plans: u64, k: f64, alpha: f64) -> bool {
    (plans as f64) < k * (visits as f64).powf(alpha)
}

/// UCT priority of a child; unvisited children get `+inf`.
pub fn uct_score(value: f64, parent_visits: u64, child_visits: u64, c: f64) -> f64 {
    if child_visits == 0 {
        return f64::INFINITY;
    }
    value + c * ((parent_visits as f64).ln() / child_visits as f64).sqrt()
}

type CachedPlan = Option<Rc<[ActionId]>>;

const PLAN_CACHE_LIMIT: usize = 100_000;

pub struct PortalSearch<'d> {
    domain: &'d Domain,
    config: PortalConfig,
    scheme: RewardScheme,
    planner: Planner<'d>,
    tree: Tree,
    rng: ChaCha8Rng,
    plans: HashMap<WorldState, CachedPlan>,
    stats: SearchStats,
    audit_every_iteration: bool,
    violations: Vec<String>,
}

impl<'d> PortalSearch<'d> {
    pub fn new(domain: &'d Domain, config: PortalConfig, belief: Belief, rng: ChaCha8Rng) -> Self {
        let scheme = RewardScheme::constant(config.reward_per_action);
        PortalSearch {
            domain,
            config,
            scheme,
            planner: Planner::new(domain),
            tree: Tree::new(belief),
            rng,
            plans: HashMap::new(),
            stats: SearchStats::default(),
            audit_every_iteration: false,
            violations: Vec::new(),
        }
    }

    /// Audits the whole tree after every iteration, collecting violations
    /// (see [`PortalSearch::violations`]). Quadratic; for tests.
    pub fn with_audit(mut self, enabled: bool) -> Self {
        self.audit_every_iteration = enabled;
        self
    }

    pub fn config(&self) -> &PortalConfig {
        &self.config
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    pub fn root_belief(&self) -> &Belief {
        &self.tree.obs(self.tree.root()).belief
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn audit(&self) -> Vec<String> {
        self.tree.audit(self.config.widening_k, self.config.widening_alpha)
    }

    pub fn dump(&self) -> String {
        self.tree.dump(self.domain)
    }

    /// Runs iterations until `budget` is spent (time is checked between
    /// iterations) and returns the best root action.
    pub fn search(&mut self, budget: Budget) -> Result<ActionId, PortalError> {
        self.run(budget)?;
        self.best_action()
    }

    /// Spends `budget` without choosing an action.
    pub fn run(&mut self, budget: Budget) -> Result<(), PortalError> {
        match budget {
            Budget::Iterations(n) => {
                for _ in 0..n {
                    self.iterate()?;
                }
            }
            Budget::Time(d) => {
                let deadline = Instant::now() + d;
                while Instant::now() < deadline {
                    self.iterate()?;
                }
            }
        }
        Ok(())
    }

    pub fn best_action(&self) -> Result<ActionId, PortalError> {
        self.tree.best_action(self.tree.root()).ok_or(PortalError::NoChildren)
    }

    /// One sample-and-simulate pass from the root.
    pub fn iterate(&mut self) -> Result<(), PortalError> {
        let root = self.tree.root();
        let s = self.tree.obs(root).belief.sample(&mut self.rng).ok_or(PortalError::EmptyBelief)?.clone();
        self.simulate(s, root)?;
        self.stats.iterations += 1;
        if self.audit_every_iteration {
            let found = self.audit();
            self.violations.extend(found.into_iter().map(|v| format!("iteration {}: {v}", self.stats.iterations)));
        }
        Ok(())
    }

    /// Moves the root to the child reached by the real `(action, observation)`.
    /// The new root's belief is the old root belief filtered through the
    /// real step. When the tree never simulated that observation, the search
    /// restarts from a fresh root. On an empty filtered belief the tree is
    /// left untouched and the caller is expected to recover a belief and
    /// call [`PortalSearch::reset_root`].
    pub fn advance_root(&mut self, action: ActionId, observation: &Observation) -> Result<(), EmptyBelief> {
        let root = self.tree.root();
        let belief = filter_belief(self.domain, &self.tree.obs(root).belief, action, observation)?;
        let child = self.tree.child_action(root, action).and_then(|a| self.tree.child_obs(a, observation));
        match child {
            Some(child) => {
                self.tree.promote(child);
                let root = self.tree.root();
                self.tree.obs_mut(root).belief = belief;
            }
            None => self.tree = Tree::new(belief),
        }
        Ok(())
    }

    /// Discards the tree and restarts from `belief`.
    pub fn reset_root(&mut self, belief: Belief) {
        self.tree = Tree::new(belief);
    }

    fn plan_from(&mut self, s: &WorldState) -> CachedPlan {
        if let Some(p) = self.plans.get(s) {
            return p.clone();
        }
        let plan = self.planner.plan(s, self.domain.goal()).ok().map(|p| Rc::from(p.actions));
        if self.plans.len() >= PLAN_CACHE_LIMIT {
            self.plans.clear();
        }
        self.plans.insert(s.clone(), plan.clone());
        plan
    }

    /// `|B(hao)| / |B(h)| * gamma * V(hao)`.
    fn weighted(&self, h: ObsId, child: ObsId) -> f64 {
        let parent = self.tree.obs(h).belief.len();
        if parent == 0 {
            return 0.0;
        }
        let node = self.tree.obs(child);
        node.belief.len() as f64 / parent as f64 * self.config.discount * node.value
    }

    fn refresh_value(&mut self, h: ObsId) {
        if let Some(best) = self.tree.best_child_value(h) {
            self.tree.obs_mut(h).value = best;
        }
    }

    fn simulate(&mut self, s: WorldState, h: ObsId) -> Result<(), PortalError> {
        self.tree.obs_mut(h).visits += 1;
        if self.domain.goal_satisfied(&s) {
            return Ok(());
        }
        let node = self.tree.obs(h);
        if node.meaningful
            && expand_test(node.visits, node.plans, self.config.widening_k, self.config.widening_alpha)
        {
            self.tree.obs_mut(h).plans += 1;
            match self.plan_from(&s) {
                Some(plan) => {
                    self.stats.plans_generated += 1;
                    if !plan.is_empty() {
                        self.rollout(&s, h, &plan)?;
                    }
                }
                None => self.stats.planner_failures += 1,
            }
            return Ok(());
        }
        let Some(ha) = self.select(h) else { return Ok(()) };
        self.tree.act_mut(ha).visits += 1;
        let action = self.tree.act(ha).action;
        let out = simulate_step(self.domain, &s, action, &self.scheme)?;
        let child = match self.tree.child_obs(ha, &out.observation) {
            Some(c) => c,
            None => {
                // Only reachable when `s` left the node's belief; track it
                // as a fresh branch of its own.
                let c = self.tree.add_obs(ha, out.observation.clone(), true);
                self.tree.obs_mut(c).belief.insert(out.next.clone(), 1);
                let w = self.weighted(h, c);
                self.tree.act_mut(ha).value += w;
                c
            }
        };
        let before = self.weighted(h, child);
        self.tree.act_mut(ha).value -= before;
        self.simulate(out.next, child)?;
        let after = self.weighted(h, child);
        self.tree.act_mut(ha).value += after;
        self.refresh_value(h);
        Ok(())
    }

    fn select(&self, h: ObsId) -> Option<ActId> {
        let node = self.tree.obs(h);
        let mut best: Option<(ActId, f64)> = None;
        for &a in &node.children {
            let child = self.tree.act(a);
            let score = uct_score(child.value, node.visits, child.visits, self.config.exploration);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((a, score));
            }
        }
        best.map(|(a, _)| a)
    }

    fn rollout(&mut self, s: &WorldState, h: ObsId, plan: &[ActionId]) -> Result<(), PortalError> {
        let Some((&action, rest)) = plan.split_first() else { return Ok(()) };
        let out = simulate_step(self.domain, s, action, &self.scheme)?;
        let ha = match self.tree.child_action(h, action) {
            Some(ha) => ha,
            None => self.expand_action(h, action, &out.observation)?,
        };
        let child = match self.tree.child_obs(ha, &out.observation) {
            Some(c) => c,
            None => {
                let c = self.tree.add_obs(ha, out.observation.clone(), false);
                self.tree.obs_mut(c).belief.insert(out.next.clone(), 1);
                let w = self.weighted(h, c);
                self.tree.act_mut(ha).value += w;
                c
            }
        };
        let before = self.weighted(h, child);
        self.tree.act_mut(ha).value -= before;
        self.rollout(&out.next, child, rest)?;
        let after = self.weighted(h, child);
        self.tree.act_mut(ha).value += after;
        self.refresh_value(h);
        Ok(())
    }

    /// Creates `h a`, pushing every particle of `B(h)` through `action`.
    /// Children whose observation differs from `own` are meaningful.
    fn expand_action(&mut self, h: ObsId, action: ActionId, own: &Observation) -> Result<ActId, PortalError> {
        let ha = self.tree.add_action(h, action);
        let particles: Vec<(WorldState, u32)> =
            self.tree.obs(h).belief.iter().map(|(s, n)| (s.clone(), n)).collect();
        let total = self.tree.obs(h).belief.len() as f64;
        let mut created = Vec::new();
        for (alt, n) in particles {
            let out = simulate_step(self.domain, &alt, action, &self.scheme)?;
            let child = match self.tree.child_obs(ha, &out.observation) {
                Some(c) => c,
                None => {
                    let c = self.tree.add_obs(ha, out.observation.clone(), out.observation != *own);
                    created.push(c);
                    c
                }
            };
            self.tree.obs_mut(child).belief.insert(out.next, n);
            self.tree.act_mut(ha).value += f64::from(n) * out.reward / total;
        }
        // Seed the action value with the children's initial estimates so
        // that the subtract/add pairs below stay balanced.
        for c in created {
            let w = self.weighted(h, c);
            self.tree.act_mut(ha).value += w;
        }
        Ok(ha)
    }
}
