//! Execution model: the deterministic black-box simulator, observations,
//! histories and particle beliefs.
//!
//! The execution model differs from the planning model in one place: a
//! search at cell `c` only needs the robot at `c`, and it reveals every
//! entity resting on `c`, reporting them in the observation.

use std::fmt;
use std::hash::Hash;

use indexmap::IndexMap;
use rand::Rng;
use smallvec::SmallVec;
use thiserror::Error;

use crate::baselines::RewardScheme;
use crate::planner::Plan;
use crate::strips::{ActionId, CellId, Domain, InapplicableAction, WorldState};

/// Default particle count for sampled beliefs.
pub const DEFAULT_PARTICLES: usize = 1000;

/// Upper bound on the number of worlds enumerated exhaustively.
pub const ENUMERATION_LIMIT: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observation {
    Ok,
    /// Entities seen by a search, in canonical entity order.
    Percept(SmallVec<[u16; 4]>),
}

impl Observation {
    pub fn percept(entities: impl IntoIterator<Item = usize>) -> Self {
        let mut seen: SmallVec<[u16; 4]> = entities.into_iter().map(|e| e as u16).collect();
        seen.sort_unstable();
        Observation::Percept(seen)
    }

    pub fn render(&self, domain: &Domain) -> String {
        match self {
            Observation::Ok => "ok".to_owned(),
            Observation::Percept(seen) => {
                let names: Vec<&str> = seen.iter().map(|e| domain.entity_name(*e as usize)).collect();
                format!("percept{{{}}}", names.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub next: WorldState,
    pub observation: Observation,
    pub reward: f64,
}

/// Runs one action in the execution model, without reward.
pub fn execute(
    domain: &Domain,
    state: &WorldState,
    action: ActionId,
) -> Result<(WorldState, Observation), InapplicableAction> {
    let Some(cell) = domain.search_cell(action) else {
        return Ok((domain.apply(state, action)?, Observation::Ok));
    };
    if !state.contains(domain.robot_at_atom(cell)) {
        return Err(InapplicableAction { action: domain.action(action).to_string() });
    }
    let seen: SmallVec<[usize; 4]> =
        domain.located_entities(state).filter(|(_, c)| *c == cell).map(|(e, _)| e).collect();
    let del: SmallVec<[u32; 4]> = seen
        .iter()
        .map(|e| domain.hidden_atom(*e))
        .filter(|a| state.contains(*a))
        .collect();
    let add: SmallVec<[u32; 4]> = seen
        .iter()
        .filter(|e| state.contains(domain.hidden_atom(**e)))
        .map(|e| domain.revealed_atom(*e))
        .collect();
    Ok((state.with_effects(&del, &add), Observation::percept(seen)))
}

/// The black-box simulator `G(s, a)`.
pub fn simulate_step(
    domain: &Domain,
    state: &WorldState,
    action: ActionId,
    scheme: &RewardScheme,
) -> Result<StepOutcome, InapplicableAction> {
    let (next, observation) = execute(domain, state, action)?;
    let reward = scheme.reward_of(domain, state, action, &next);
    Ok(StepOutcome { next, observation, reward })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct History {
    steps: Vec<(ActionId, Observation)>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, action: ActionId, observation: Observation) {
        self.steps.push((action, observation));
    }

    pub fn steps(&self) -> &[(ActionId, Observation)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("belief is empty")]
pub struct EmptyBelief;

/// A multiset of particles, stored as distinct states with multiplicities in
/// first-insertion order.
#[derive(Clone, Debug)]
pub struct Belief<S: Hash + Eq = WorldState> {
    particles: IndexMap<S, u32>,
    total: u64,
}

impl<S: Hash + Eq> Default for Belief<S> {
    fn default() -> Self {
        Belief { particles: IndexMap::new(), total: 0 }
    }
}

impl<S: Hash + Eq> PartialEq for Belief<S> {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.particles == other.particles
    }
}

impl<S: Hash + Eq> Eq for Belief<S> {}

impl<S: Hash + Eq + Clone + Ord> Belief<S> {
    pub fn new() -> Self {
        Belief::default()
    }

    pub fn from_states(states: impl IntoIterator<Item = S>) -> Self {
        let mut b = Belief::new();
        for s in states {
            b.insert(s, 1);
        }
        b
    }

    pub fn insert(&mut self, state: S, count: u32) {
        if count == 0 {
            return;
        }
        *self.particles.entry(state).or_insert(0) += count;
        self.total += u64::from(count);
    }

    /// Number of particles, counting multiplicity.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct(&self) -> usize {
        self.particles.len()
    }

    pub fn count_of(&self, state: &S) -> u32 {
        self.particles.get(state).copied().unwrap_or(0)
    }

    /// Distinct particles with their multiplicities, in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&S, u32)> {
        self.particles.iter().map(|(s, n)| (s, *n))
    }

    /// Draws one particle uniformly from the multiset.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&S> {
        if self.total == 0 {
            return None;
        }
        let mut pick = rng.gen_range(0..self.total);
        for (s, n) in &self.particles {
            let n = u64::from(*n);
            if pick < n {
                return Some(s);
            }
            pick -= n;
        }
        unreachable!("multiplicities sum to total")
    }

    /// Distinct particles ordered by multiplicity (descending), ties by the
    /// canonical state order.
    pub fn ranked(&self) -> Vec<(&S, u32)> {
        let mut v: Vec<(&S, u32)> = self.iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// The modal particle; ties go to the canonically smallest state.
    pub fn mode(&self) -> Result<&S, EmptyBelief> {
        self.ranked().first().map(|(s, _)| *s).ok_or(EmptyBelief)
    }

    /// Keeps the particles for which `keep` maps to `Some(next)`, replacing
    /// each by its image.
    pub fn filter_map(&self, mut keep: impl FnMut(&S) -> Option<S>) -> Belief<S> {
        let mut out = Belief::new();
        for (s, n) in self.iter() {
            if let Some(next) = keep(s) {
                out.insert(next, n);
            }
        }
        out
    }
}

/// Samples `count` particles, drawing each uncertain entity's cell
/// independently from its candidate distribution.
pub fn sample_initial_particles<R: Rng + ?Sized>(domain: &Domain, count: usize, rng: &mut R) -> Belief {
    let mut belief = Belief::new();
    for _ in 0..count {
        belief.insert(sample_world(domain, rng), 1);
    }
    belief
}

/// Draws one world from the initial distribution.
pub fn sample_world<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> WorldState {
    let placement: Vec<CellId> = domain
        .uncertain()
        .iter()
        .map(|u| {
            let mut u01: f64 = rng.gen();
            for (cell, p) in &u.cells {
                if u01 < *p {
                    return *cell;
                }
                u01 -= p;
            }
            u.cells.last().expect("validated: candidates nonempty").0
        })
        .collect();
    domain.world_with(&placement)
}

/// Number of distinct initial worlds (product of candidate counts).
pub fn world_count(domain: &Domain) -> u128 {
    domain.uncertain().iter().map(|u| u.cells.len() as u128).product()
}

/// Every initial world with its prior probability, in odometer order over
/// the candidate lists.
pub fn enumerate_worlds(domain: &Domain) -> Vec<(WorldState, f64)> {
    let sets = domain.uncertain();
    let mut idx = vec![0usize; sets.len()];
    let mut out = Vec::new();
    loop {
        let placement: Vec<CellId> = sets.iter().zip(&idx).map(|(u, i)| u.cells[*i].0).collect();
        let p: f64 = sets.iter().zip(&idx).map(|(u, i)| u.cells[*i].1).product();
        out.push((domain.world_with(&placement), p));
        let mut k = 0;
        loop {
            if k == sets.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < sets[k].cells.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

impl Belief<WorldState> {
    /// Exact-enumeration belief: every initial world with multiplicity
    /// `round(P(w) * total)`; worlds rounding to zero are dropped.
    pub fn enumerate(domain: &Domain, total: u64) -> Option<Belief> {
        if world_count(domain) > ENUMERATION_LIMIT {
            return None;
        }
        let mut b = Belief::new();
        for (w, p) in enumerate_worlds(domain) {
            let n = (p * total as f64).round();
            if n >= 1.0 {
                b.insert(w, n as u32);
            }
        }
        Some(b)
    }
}

/// `{ s' : G(s, a) = (s', o', _), s ∈ belief, o' = o }`.
///
/// Particles for which `action` is inapplicable cannot have produced `o`
/// and are dropped.
pub fn filter_belief(
    domain: &Domain,
    belief: &Belief,
    action: ActionId,
    observation: &Observation,
) -> Result<Belief, EmptyBelief> {
    let out = belief.filter_map(|s| match execute(domain, s, action) {
        Ok((next, o)) if o == *observation => Some(next),
        _ => None,
    });
    if out.is_empty() {
        Err(EmptyBelief)
    } else {
        Ok(out)
    }
}

/// The determinization rule: the modal particle, canonical tie-break.
pub fn most_probable_particle(belief: &Belief) -> Result<WorldState, EmptyBelief> {
    belief.mode().cloned()
}

/// Pairs each plan action with the observation it yields from `state`.
pub fn expected_history(domain: &Domain, state: &WorldState, plan: &Plan) -> Result<History, InapplicableAction> {
    let mut history = History::new();
    let mut s = state.clone();
    for a in &plan.actions {
        let (next, o) = execute(domain, &s, *a)?;
        history.push(*a, o);
        s = next;
    }
    Ok(history)
}

/// Rebuilds a belief from scratch: every initial world whose simulated
/// observations agree with the whole real `history`, advanced to the
/// present, with multiplicity proportional to its prior (at least one).
pub fn recover_belief(domain: &Domain, history: &History, count: usize) -> Result<Belief, EmptyBelief> {
    if world_count(domain) > ENUMERATION_LIMIT {
        return Err(EmptyBelief);
    }
    let mut consistent = Vec::new();
    'worlds: for (mut w, p) in enumerate_worlds(domain) {
        for (a, o) in history.steps() {
            match execute(domain, &w, *a) {
                Ok((next, seen)) if seen == *o => w = next,
                _ => continue 'worlds,
            }
        }
        consistent.push((w, p));
    }
    let mass: f64 = consistent.iter().map(|(_, p)| p).sum();
    let mut belief = Belief::new();
    for (w, p) in consistent {
        let share = if mass > 0.0 { p / mass } else { 0.0 };
        belief.insert(w, ((share * count as f64).round() as u32).max(1));
    }
    if belief.is_empty() {
        Err(EmptyBelief)
    } else {
        Ok(belief)
    }
}

/// One executed step, as written to trace logs:
/// `step<TAB>action<TAB>observation<TAB>cumulative-steps`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub step: usize,
    pub action: String,
    pub observation: String,
    pub cumulative: usize,
}

impl TraceLine {
    pub fn new(domain: &Domain, step: usize, action: ActionId, observation: &Observation) -> Self {
        TraceLine {
            step,
            action: domain.action(action).to_string(),
            observation: observation.render(domain),
            cumulative: step + 1,
        }
    }
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.step, self.action, self.observation, self.cumulative)
    }
}
