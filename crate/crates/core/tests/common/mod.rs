//! Shared fixtures and reference oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_rational::Ratio;
use portal_core::pomdp::{execute, Observation};
use portal_core::strips::{
    ActionId, Atom, Cell, CellId, CellKind, CellTotals, Domain, Entity, EntityKind, Predicate, ScenarioSpec,
    UncertainEntity, WorldState,
};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Q = Ratio<i64>;

/// Exact probability tables used by [`rational_scenario`].
const TABLES: [&[(i64, i64)]; 7] = [
    &[(1, 1)],
    &[(1, 2), (1, 2)],
    &[(1, 3), (2, 3)],
    &[(1, 4), (3, 4)],
    &[(1, 3), (1, 3), (1, 3)],
    &[(1, 7), (2, 7), (4, 7)],
    &[(1, 6), (2, 6), (3, 6)],
];

/// A 2x3 grid with two shelves, two items and a person. Between one and
/// three entities are uncertain over one to three cells, with exact
/// rational probabilities (returned keyed by entity and cell name).
pub fn rational_scenario(seed: u64) -> (ScenarioSpec, HashMap<(String, String), Q>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regions: Vec<String> = (0..6).map(|i| format!("r{i}")).collect();
    let mut cells: Vec<Cell> = regions.iter().map(|id| Cell { id: id.clone(), kind: CellKind::Region }).collect();
    let mut adjacency = vec![];
    for i in 0..6 {
        if i % 3 != 2 {
            adjacency.push((regions[i].clone(), regions[i + 1].clone()));
        }
        if i < 3 {
            adjacency.push((regions[i].clone(), regions[i + 3].clone()));
        }
    }
    for (j, at) in [(0, 2), (1, 4)] {
        let id = format!("s{j}");
        adjacency.push((regions[at].clone(), id.clone()));
        cells.push(Cell { id, kind: CellKind::Surface });
    }
    let all: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let entities = vec![
        Entity { id: "a".into(), kind: EntityKind::Item },
        Entity { id: "b".into(), kind: EntityKind::Item },
        Entity { id: "p".into(), kind: EntityKind::Person },
    ];
    let n_uncertain = rng.gen_range(1..=3);
    let mut order = vec!["a", "b", "p"];
    order.shuffle(&mut rng);
    let mut init: BTreeSet<Atom> = [Atom::new(Predicate::RobotAt, ["r0"])].into_iter().collect();
    let mut uncertain = vec![];
    let mut probs = HashMap::new();
    for (k, name) in order.iter().enumerate() {
        let pool = if *name == "p" { &regions } else { &all };
        if k < n_uncertain {
            let table = TABLES[rng.gen_range(0..TABLES.len())];
            let picked = sample(&mut rng, pool.len(), table.len());
            let mut candidates = vec![];
            for (i, (n, d)) in picked.iter().zip(table) {
                candidates.push((pool[i].clone(), *n as f64 / *d as f64));
                probs.insert((name.to_string(), pool[i].clone()), Q::new(*n, *d));
            }
            uncertain.push(UncertainEntity { entity: name.to_string(), candidates });
        } else {
            let cell = pool[rng.gen_range(0..pool.len())].clone();
            init.insert(Atom::new(Predicate::ItemAt, [name.to_string(), cell]));
        }
    }
    let spec = ScenarioSpec {
        cells,
        adjacency,
        entities,
        init,
        goal: [Atom::new(Predicate::ItemAt, ["a", "s0"])].into_iter().collect(),
        uncertain,
        totals: CellTotals::default(),
    };
    spec.validate().expect("fixture is valid");
    (spec, probs)
}

/// Every initial world with its exact prior, by brute-force product.
pub fn bayes_worlds(domain: &Domain, probs: &HashMap<(String, String), Q>) -> Vec<(WorldState, Q)> {
    let sets = domain.uncertain();
    let mut out = vec![];
    let mut idx = vec![0usize; sets.len()];
    loop {
        let placement: Vec<CellId> = sets.iter().zip(&idx).map(|(s, i)| s.cells[*i].0).collect();
        let mut p = Q::from_integer(1);
        for (s, c) in sets.iter().zip(&placement) {
            p *= probs[&(domain.entity_name(s.entity).to_owned(), domain.cells()[*c].clone())];
        }
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

/// Actions executable in `state` under the execution model, including a
/// search at the robot's cell.
pub fn executable_actions(domain: &Domain, state: &WorldState) -> Vec<ActionId> {
    domain.action_ids().filter(|a| execute(domain, state, *a).is_ok()).collect()
}

/// One step of the exact Bayes filter over `(state, probability)` pairs.
pub fn bayes_step(domain: &Domain, worlds: &[(WorldState, Q)], action: ActionId, o: &Observation) -> Vec<(WorldState, Q)> {
    let kept: Vec<(WorldState, Q)> = worlds
        .iter()
        .filter_map(|(s, p)| match execute(domain, s, action) {
            Ok((next, seen)) if seen == *o => Some((next, *p)),
            _ => None,
        })
        .collect();
    let mass: Q = kept.iter().map(|(_, p)| *p).sum();
    kept.into_iter().map(|(s, p)| (s, p / mass)).collect()
}

/// Shortest move count between two cells.
pub fn distance(domain: &Domain, from: CellId, to: CellId) -> usize {
    let mut dist = vec![usize::MAX; domain.cells().len()];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        for n in domain.neighbours(c) {
            if dist[*n] == usize::MAX {
                dist[*n] = dist[c] + 1;
                queue.push_back(*n);
            }
        }
    }
    dist[to]
}

/// Expected steps of the conditional policy "search the candidate cells in
/// `order`, then carry the item to `target`", evaluated exactly over every
/// world of a single-uncertain-item domain.
pub fn policy_expected_steps(domain: &Domain, item: &str, order: &[&str], target: &str) -> Q {
    let entity = domain.entity_id(item).unwrap();
    let set = domain.uncertain().iter().find(|u| u.entity == entity).unwrap();
    let start = domain.robot_cell(&domain.world_with(&[set.cells[0].0])).unwrap();
    let target = domain.cell_id(target).unwrap();
    let mut total = Q::from_integer(0);
    for (true_cell, p) in &set.cells {
        let mut here = start;
        let mut steps = 0;
        for name in order {
            let cell = domain.cell_id(name).unwrap();
            steps += distance(domain, here, cell) + 1;
            here = cell;
            if cell == *true_cell {
                steps += 1 + distance(domain, cell, target) + 1;
                break;
            }
        }
        let p = Q::approximate_float(*p).unwrap();
        total += p * Q::from_integer(steps as i64);
    }
    total
}
