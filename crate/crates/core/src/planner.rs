//! Classical planner used on determinized worlds: greedy best-first search
//! guided by the additive delete-relaxation heuristic.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use thiserror::Error;

use crate::strips::{ActionId, AtomId, Domain, WorldState};

pub const DEFAULT_MAX_EXPANSIONS: usize = 200_000;
pub const DEFAULT_BFS_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<ActionId>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Checks sequential applicability from `state` and goal satisfaction.
    pub fn validate(&self, domain: &Domain, state: &WorldState, goal: &[AtomId]) -> bool {
        let mut s = state.clone();
        for a in &self.actions {
            match domain.apply(&s, *a) {
                Ok(next) => s = next,
                Err(_) => return false,
            }
        }
        s.contains_all(goal)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal is unreachable from the given state")]
    Unsolvable,
    #[error("search exceeded the limit of {limit} node expansions")]
    ResourceLimit { limit: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PlanStats {
    pub expanded: usize,
    pub generated: usize,
}

/// Greedy best-first planner with reusable heuristic buffers.
pub struct Planner<'d> {
    domain: &'d Domain,
    max_expansions: usize,
    /// Actions whose precondition list contains each atom.
    consumers: Vec<Vec<ActionId>>,
    cost: Vec<u64>,
    waiting: Vec<usize>,
    stats: PlanStats,
}

impl<'d> Planner<'d> {
    pub fn new(domain: &'d Domain) -> Self {
        let mut consumers = vec![Vec::new(); domain.atom_count()];
        for id in domain.action_ids() {
            for p in &domain.action(id).pre {
                consumers[*p as usize].push(id);
            }
        }
        Planner {
            domain,
            max_expansions: DEFAULT_MAX_EXPANSIONS,
            consumers,
            cost: vec![u64::MAX; domain.atom_count()],
            waiting: vec![0; domain.actions().len()],
            stats: PlanStats::default(),
        }
    }

    pub fn with_max_expansions(mut self, limit: usize) -> Self {
        self.max_expansions = limit;
        self
    }

    /// Counters for the most recent [`Planner::plan`] call.
    pub fn last_stats(&self) -> PlanStats {
        self.stats
    }

    /// Additive heuristic; `None` when the goal is unreachable even under
    /// the delete relaxation.
    pub fn h_add(&mut self, state: &WorldState, goal: &[AtomId]) -> Option<u64> {
        if state.contains_all(goal) {
            return Some(0);
        }
        let domain = self.domain;
        self.cost.fill(u64::MAX);
        let mut queue = BinaryHeap::new();
        for a in state.atoms() {
            self.cost[*a as usize] = 0;
            queue.push(Reverse((0u64, *a)));
        }
        for (i, w) in self.waiting.iter_mut().enumerate() {
            *w = domain.actions()[i].pre.len();
        }
        // Actions without preconditions fire immediately.
        for id in domain.action_ids() {
            if domain.action(id).pre.is_empty() {
                relax(domain, id, &mut self.cost, &mut queue);
            }
        }
        let mut unresolved = goal.len();
        let mut resolved = vec![false; goal.len()];
        while let Some(Reverse((c, atom))) = queue.pop() {
            if c > self.cost[atom as usize] {
                continue;
            }
            if let Ok(pos) = goal.binary_search(&atom) {
                if !resolved[pos] {
                    resolved[pos] = true;
                    unresolved -= 1;
                    if unresolved == 0 {
                        break;
                    }
                }
            }
            for id in &self.consumers[atom as usize] {
                let w = &mut self.waiting[id.index()];
                *w -= 1;
                if *w == 0 {
                    relax(domain, *id, &mut self.cost, &mut queue);
                }
            }
        }
        if unresolved > 0 {
            return None;
        }
        Some(goal.iter().map(|g| self.cost[*g as usize]).sum())
    }

    /// Greedy best-first search. Open-list ties go to the earlier generated
    /// node, and successors are generated in canonical action order.
    pub fn plan(&mut self, state: &WorldState, goal: &[AtomId]) -> Result<Plan, PlanError> {
        self.stats = PlanStats::default();
        if state.contains_all(goal) {
            return Ok(Plan::default());
        }
        let Some(h0) = self.h_add(state, goal) else {
            return Err(PlanError::Unsolvable);
        };

        struct Node {
            state: WorldState,
            parent: usize,
            action: ActionId,
        }
        let mut nodes = vec![Node { state: state.clone(), parent: usize::MAX, action: ActionId(0) }];
        let mut seen: HashMap<WorldState, ()> = HashMap::new();
        seen.insert(state.clone(), ());
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        open.push(Reverse((h0, seq, 0usize)));
        let mut successors = Vec::new();

        while let Some(Reverse((_, _, idx))) = open.pop() {
            if self.stats.expanded >= self.max_expansions {
                return Err(PlanError::ResourceLimit { limit: self.max_expansions });
            }
            self.stats.expanded += 1;
            let current = nodes[idx].state.clone();
            self.domain.applicable_actions(&current, &mut successors);
            for &a in &successors {
                let act = self.domain.action(a);
                let next = current.with_effects(&act.del, &act.add);
                let Entry::Vacant(slot) = seen.entry(next.clone()) else { continue };
                slot.insert(());
                self.stats.generated += 1;
                if next.contains_all(goal) {
                    nodes.push(Node { state: next, parent: idx, action: a });
                    return Ok(extract(&nodes, nodes.len() - 1, |n| (n.parent, n.action)));
                }
                let Some(h) = self.h_add(&next, goal) else { continue };
                seq += 1;
                nodes.push(Node { state: next, parent: idx, action: a });
                open.push(Reverse((h, seq, nodes.len() - 1)));
            }
        }
        Err(PlanError::Unsolvable)
    }
}

fn relax(domain: &Domain, id: ActionId, cost: &mut [u64], queue: &mut BinaryHeap<Reverse<(u64, AtomId)>>) {
    let action = domain.action(id);
    let c = action
        .pre
        .iter()
        .map(|p| cost[*p as usize])
        .fold(u64::from(action.cost()), u64::saturating_add);
    for q in &action.add {
        if c < cost[*q as usize] {
            cost[*q as usize] = c;
            queue.push(Reverse((c, *q)));
        }
    }
}

fn extract<N>(nodes: &[N], mut idx: usize, link: impl Fn(&N) -> (usize, ActionId)) -> Plan {
    let mut actions = Vec::new();
    loop {
        let (parent, action) = link(&nodes[idx]);
        if parent == usize::MAX {
            break;
        }
        actions.push(action);
        idx = parent;
    }
    actions.reverse();
    Plan { actions }
}

/// Satisficing plan from `state` to `goal`.
pub fn plan(domain: &Domain, state: &WorldState, goal: &[AtomId]) -> Result<Plan, PlanError> {
    Planner::new(domain).plan(state, goal)
}

/// The additive heuristic, with unreachable goals mapped to `+inf`.
pub fn h_add(domain: &Domain, state: &WorldState, goal: &[AtomId]) -> f64 {
    Planner::new(domain).h_add(state, goal).map_or(f64::INFINITY, |h| h as f64)
}

/// Step-optimal breadth-first search, for tests on small instances.
pub fn plan_bfs_oracle(
    domain: &Domain,
    state: &WorldState,
    goal: &[AtomId],
    limit: usize,
) -> Result<Plan, PlanError> {
    if state.contains_all(goal) {
        return Ok(Plan::default());
    }
    let mut parents: HashMap<WorldState, (WorldState, ActionId)> = HashMap::new();
    let mut queue = VecDeque::from([state.clone()]);
    let mut successors = Vec::new();
    let mut explored = 0usize;
    while let Some(current) = queue.pop_front() {
        explored += 1;
        if explored > limit {
            return Err(PlanError::ResourceLimit { limit });
        }
        domain.applicable_actions(&current, &mut successors);
        for &a in &successors {
            let next = domain.apply(&current, a).expect("applicable");
            if next == *state || parents.contains_key(&next) {
                continue;
            }
            parents.insert(next.clone(), (current.clone(), a));
            if next.contains_all(goal) {
                let mut actions = Vec::new();
                let mut cursor = next;
                while cursor != *state {
                    let (prev, a) = parents[&cursor].clone();
                    actions.push(a);
                    cursor = prev;
                }
                actions.reverse();
                return Ok(Plan { actions });
            }
            queue.push_back(next);
        }
    }
    Err(PlanError::Unsolvable)
}
