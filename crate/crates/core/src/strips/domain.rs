//! Grounded planning domain compiled from a [`ScenarioSpec`].
//!
//! Atoms are interned to dense ids assigned in canonical order, so comparing
//! ids compares atoms canonically and a sorted id list is a canonical state.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use super::scenario::{Atom, CellKind, EntityKind, Predicate, ScenarioSpec};

pub type AtomId = u32;
pub type CellId = usize;
pub type EntityId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u32);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A fully determinized world: a sorted, duplicate-free set of atom ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WorldState {
    atoms: SmallVec<[AtomId; 12]>,
}

impl WorldState {
    pub fn from_atoms(atoms: impl IntoIterator<Item = AtomId>) -> Self {
        let mut atoms: SmallVec<[AtomId; 12]> = atoms.into_iter().collect();
        atoms.sort_unstable();
        atoms.dedup();
        WorldState { atoms }
    }

    pub fn atoms(&self) -> &[AtomId] {
        &self.atoms
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.atoms.binary_search(&atom).is_ok()
    }

    pub fn contains_all(&self, atoms: &[AtomId]) -> bool {
        atoms.iter().all(|a| self.contains(*a))
    }

    /// `(self \ del) ∪ add`.
    pub fn with_effects(&self, del: &[AtomId], add: &[AtomId]) -> WorldState {
        let mut atoms: SmallVec<[AtomId; 12]> =
            self.atoms.iter().copied().filter(|a| !del.contains(a)).collect();
        for a in add {
            if let Err(pos) = atoms.binary_search(a) {
                atoms.insert(pos, *a);
            }
        }
        WorldState { atoms }
    }
}

/// Action schemas, in lexicographic order of their names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    Checkin,
    Give,
    Move,
    Pick,
    Place,
    PutIn,
    Search,
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Checkin => "checkin",
            Schema::Give => "give",
            Schema::Move => "move",
            Schema::Pick => "pick",
            Schema::Place => "place",
            Schema::PutIn => "put-in",
            Schema::Search => "search",
        }
    }
}

/// A grounded STRIPS action with unit cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: Schema,
    pub params: Vec<String>,
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

impl GroundAction {
    pub fn cost(&self) -> u32 {
        1
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema.name(), self.params.join(","))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("action `{action}` is not applicable")]
pub struct InapplicableAction {
    pub action: String,
}

/// Location candidates of one uncertain entity, as cell ids.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub entity: EntityId,
    pub cells: Vec<(CellId, f64)>,
}

#[derive(Clone, Debug)]
pub struct Domain {
    spec: ScenarioSpec,
    atoms: Vec<Atom>,
    atom_ids: HashMap<Atom, AtomId>,
    cells: Vec<String>,
    cell_kinds: Vec<CellKind>,
    cell_ids: HashMap<String, CellId>,
    entities: Vec<(String, EntityKind)>,
    entity_ids: HashMap<String, EntityId>,
    robot_at: Vec<AtomId>,
    item_at: Vec<Vec<AtomId>>,
    hidden: Vec<AtomId>,
    revealed: Vec<AtomId>,
    holding: Vec<Option<AtomId>>,
    hand_empty: AtomId,
    actions: Vec<GroundAction>,
    search_cell: Vec<Option<CellId>>,
    goal: Vec<AtomId>,
    uncertain: Vec<CandidateSet>,
    fixed_init: Vec<AtomId>,
    /// Each action is listed under exactly one of its preconditions.
    triggers: Vec<Vec<ActionId>>,
    untriggered: Vec<ActionId>,
    /// For each atom: the entity it locates, if it is location-bearing.
    locates: Vec<Option<EntityId>>,
    robot_cell_of: Vec<Option<CellId>>,
    item_cell_of: Vec<Option<(EntityId, CellId)>>,
    neighbours: Vec<Vec<CellId>>,
}

impl Domain {
    /// Compiles a validated scenario.
    pub fn new(spec: &ScenarioSpec) -> Domain {
        let cells: Vec<String> = spec.cells.iter().map(|c| c.id.clone()).collect();
        let cell_kinds = spec.cells.iter().map(|c| c.kind).collect();
        let cell_ids: HashMap<String, CellId> =
            cells.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let mut entities: Vec<(String, EntityKind)> =
            spec.entities.iter().map(|e| (e.id.clone(), e.kind)).collect();
        entities.sort();
        let entity_ids: HashMap<String, EntityId> =
            entities.iter().enumerate().map(|(i, (e, _))| (e.clone(), i)).collect();

        let of_kind = |pred: fn(EntityKind) -> bool| -> Vec<&str> {
            entities.iter().filter(|(_, k)| pred(*k)).map(|(e, _)| e.as_str()).collect()
        };
        let items = of_kind(|k| k == EntityKind::Item);
        let boxes = of_kind(|k| k == EntityKind::Box);
        let carryables = of_kind(EntityKind::is_carryable);
        let people = of_kind(|k| k == EntityKind::Person);
        let all_entities = of_kind(|_| true);

        let mut vocabulary = BTreeSet::new();
        for c in &cells {
            vocabulary.insert(Atom::new(Predicate::RobotAt, [c.as_str()]));
            for e in &all_entities {
                vocabulary.insert(Atom::new(Predicate::ItemAt, [*e, c.as_str()]));
            }
        }
        for e in &all_entities {
            vocabulary.insert(Atom::new(Predicate::Hidden, [*e]));
            vocabulary.insert(Atom::new(Predicate::Revealed, [*e]));
        }
        for i in &carryables {
            vocabulary.insert(Atom::new(Predicate::Holding, [*i]));
        }
        vocabulary.insert(Atom::new(Predicate::HandEmpty, Vec::<String>::new()));
        for i in &items {
            for b in &boxes {
                vocabulary.insert(Atom::new(Predicate::InBox, [*i, *b]));
            }
            for p in &people {
                vocabulary.insert(Atom::new(Predicate::Delivered, [*i, *p]));
            }
        }
        for p in &people {
            vocabulary.insert(Atom::new(Predicate::CheckedIn, [*p]));
        }
        let atoms: Vec<Atom> = vocabulary.into_iter().collect();
        let atom_ids: HashMap<Atom, AtomId> =
            atoms.iter().enumerate().map(|(i, a)| (a.clone(), i as AtomId)).collect();
        let id = |pred: Predicate, args: &[&str]| atom_ids[&Atom::new(pred, args.iter().copied())];

        let robot_at: Vec<AtomId> = cells.iter().map(|c| id(Predicate::RobotAt, &[c])).collect();
        let item_at: Vec<Vec<AtomId>> = entities
            .iter()
            .map(|(e, _)| cells.iter().map(|c| id(Predicate::ItemAt, &[e, c])).collect())
            .collect();
        let hidden: Vec<AtomId> = entities.iter().map(|(e, _)| id(Predicate::Hidden, &[e])).collect();
        let revealed: Vec<AtomId> =
            entities.iter().map(|(e, _)| id(Predicate::Revealed, &[e])).collect();
        let holding: Vec<Option<AtomId>> = entities
            .iter()
            .map(|(e, k)| k.is_carryable().then(|| id(Predicate::Holding, &[e])))
            .collect();
        let hand_empty = id(Predicate::HandEmpty, &[]);

        let mut locates = vec![None; atoms.len()];
        for (eid, (e, _)) in entities.iter().enumerate() {
            for a in &item_at[eid] {
                locates[*a as usize] = Some(eid);
            }
            if let Some(h) = holding[eid] {
                locates[h as usize] = Some(eid);
            }
            for (aid, atom) in atoms.iter().enumerate() {
                if matches!(atom.predicate, Predicate::InBox | Predicate::Delivered)
                    && atom.args[0] == *e
                {
                    locates[aid] = Some(eid);
                }
            }
        }

        let mut robot_cell_of = vec![None; atoms.len()];
        for (c, a) in robot_at.iter().enumerate() {
            robot_cell_of[*a as usize] = Some(c);
        }
        let mut item_cell_of = vec![None; atoms.len()];
        for (e, per_cell) in item_at.iter().enumerate() {
            for (c, a) in per_cell.iter().enumerate() {
                item_cell_of[*a as usize] = Some((e, c));
            }
        }

        let mut neighbours = vec![Vec::new(); cells.len()];
        let mut edges = BTreeSet::new();
        for (a, b) in &spec.adjacency {
            let (a, b) = (cell_ids[a], cell_ids[b]);
            edges.insert((a, b));
            edges.insert((b, a));
        }
        for (a, b) in &edges {
            neighbours[*a].push(*b);
        }

        let uncertain: Vec<CandidateSet> = spec
            .uncertain
            .iter()
            .map(|u| CandidateSet {
                entity: entity_ids[&u.entity],
                cells: u.candidates.iter().map(|(c, p)| (cell_ids[c], *p)).collect(),
            })
            .collect();

        let mut fixed_init: Vec<AtomId> = spec.init.iter().map(|a| atom_ids[a]).collect();
        if !spec.init.iter().any(|a| a.predicate == Predicate::Holding) {
            fixed_init.push(hand_empty);
        }
        for (eid, _) in entities.iter().enumerate() {
            if !uncertain.iter().any(|u| u.entity == eid) {
                fixed_init.push(revealed[eid]);
            }
        }
        fixed_init.sort_unstable();

        let goal = {
            let mut g: Vec<AtomId> = spec.goal.iter().map(|a| atom_ids[a]).collect();
            g.sort_unstable();
            g
        };

        let mut domain = Domain {
            spec: spec.clone(),
            atoms,
            atom_ids,
            cells,
            cell_kinds,
            cell_ids,
            entities,
            entity_ids,
            robot_at,
            item_at,
            hidden,
            revealed,
            holding,
            hand_empty,
            actions: Vec::new(),
            search_cell: Vec::new(),
            goal,
            uncertain,
            fixed_init,
            triggers: Vec::new(),
            untriggered: Vec::new(),
            locates,
            robot_cell_of,
            item_cell_of,
            neighbours,
        };
        domain.actions = ground_actions(&domain, &edges);
        domain.search_cell = domain
            .actions
            .iter()
            .map(|a| (a.schema == Schema::Search).then(|| domain.cell_ids[&a.params[1]]))
            .collect();
        domain.build_triggers();
        domain
    }

    fn build_triggers(&mut self) {
        let mut uses = vec![0usize; self.atoms.len()];
        for a in &self.actions {
            for p in &a.pre {
                uses[*p as usize] += 1;
            }
        }
        self.triggers = vec![Vec::new(); self.atoms.len()];
        for (i, a) in self.actions.iter().enumerate() {
            let id = ActionId(i as u32);
            match a.pre.iter().min_by_key(|p| (uses[**p as usize], **p)) {
                Some(p) => self.triggers[*p as usize].push(id),
                None => self.untriggered.push(id),
            }
        }
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[id as usize]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.atom_ids.get(atom).copied()
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.index()]
    }

    pub fn action_ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len() as u32).map(ActionId)
    }

    /// Finds an action by its rendered form, e.g. `move(a,b)`.
    pub fn find_action(&self, rendered: &str) -> Option<ActionId> {
        self.action_ids().find(|id| self.action(*id).to_string() == rendered)
    }

    pub fn goal(&self) -> &[AtomId] {
        &self.goal
    }

    pub fn cells(&self) -> &[String] {
        &self.cells
    }

    pub fn cell_id(&self, name: &str) -> Option<CellId> {
        self.cell_ids.get(name).copied()
    }

    pub fn cell_kind(&self, cell: CellId) -> CellKind {
        self.cell_kinds[cell]
    }

    pub fn neighbours(&self, cell: CellId) -> &[CellId] {
        &self.neighbours[cell]
    }

    /// Entities in canonical (name) order.
    pub fn entities(&self) -> &[(String, EntityKind)] {
        &self.entities
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id].0
    }

    pub fn uncertain(&self) -> &[CandidateSet] {
        &self.uncertain
    }

    pub fn robot_at_atom(&self, cell: CellId) -> AtomId {
        self.robot_at[cell]
    }

    pub fn item_at_atom(&self, entity: EntityId, cell: CellId) -> AtomId {
        self.item_at[entity][cell]
    }

    pub fn hidden_atom(&self, entity: EntityId) -> AtomId {
        self.hidden[entity]
    }

    pub fn revealed_atom(&self, entity: EntityId) -> AtomId {
        self.revealed[entity]
    }

    pub fn hand_empty_atom(&self) -> AtomId {
        self.hand_empty
    }

    /// The cell searched by `action`, if it is a search action.
    pub fn search_cell(&self, action: ActionId) -> Option<CellId> {
        self.search_cell[action.index()]
    }

    pub fn robot_cell(&self, state: &WorldState) -> Option<CellId> {
        state.atoms().iter().find_map(|a| self.robot_cell_of[*a as usize])
    }

    /// The cell holding `entity` in `state`, if it rests on a cell.
    pub fn entity_cell(&self, state: &WorldState, entity: EntityId) -> Option<CellId> {
        self.located_entities(state).find(|(e, _)| *e == entity).map(|(_, c)| c)
    }

    /// Every `(entity, cell)` pair with an `item-at` atom in `state`.
    pub fn located_entities<'a>(
        &'a self,
        state: &'a WorldState,
    ) -> impl Iterator<Item = (EntityId, CellId)> + 'a {
        state.atoms().iter().filter_map(|a| self.item_cell_of[*a as usize])
    }

    /// Builds a full world from the fixed initial atoms and one cell per
    /// uncertain entity (in the order of [`Domain::uncertain`]). Uncertain
    /// entities start hidden.
    pub fn world_with(&self, placement: &[CellId]) -> WorldState {
        debug_assert_eq!(placement.len(), self.uncertain.len());
        let extra = self.uncertain.iter().zip(placement).flat_map(|(u, cell)| {
            [self.item_at[u.entity][*cell], self.hidden[u.entity]]
        });
        WorldState::from_atoms(self.fixed_init.iter().copied().chain(extra))
    }

    pub fn applicable(&self, state: &WorldState, action: ActionId) -> bool {
        state.contains_all(&self.action(action).pre)
    }

    pub fn apply(&self, state: &WorldState, action: ActionId) -> Result<WorldState, InapplicableAction> {
        let a = self.action(action);
        if !state.contains_all(&a.pre) {
            return Err(InapplicableAction { action: a.to_string() });
        }
        Ok(state.with_effects(&a.del, &a.add))
    }

    pub fn goal_satisfied(&self, state: &WorldState) -> bool {
        state.contains_all(&self.goal)
    }

    /// Appends every action applicable in `state`, in canonical order.
    pub fn applicable_actions(&self, state: &WorldState, out: &mut Vec<ActionId>) {
        out.clear();
        for atom in state.atoms() {
            for id in &self.triggers[*atom as usize] {
                if self.applicable(state, *id) {
                    out.push(*id);
                }
            }
        }
        out.extend(self.untriggered.iter().copied().filter(|id| self.applicable(state, *id)));
        out.sort_unstable();
    }

    pub fn render_state(&self, state: &WorldState) -> String {
        let parts: Vec<String> = state.atoms().iter().map(|a| format!("({})", self.atom(*a))).collect();
        parts.join(" ")
    }

    /// Checks the world-state invariants: one robot position, at most one
    /// held object, exactly one location per entity, and hidden/revealed
    /// mutually exclusive.
    pub fn check_invariants(&self, state: &WorldState) -> Result<(), String> {
        let robots = self.robot_at.iter().filter(|a| state.contains(**a)).count();
        if robots != 1 {
            return Err(format!("{robots} robot-at atoms"));
        }
        let held = self.holding.iter().flatten().filter(|a| state.contains(**a)).count();
        if held > 1 {
            return Err(format!("{held} holding atoms"));
        }
        if held == 1 && state.contains(self.hand_empty) {
            return Err("holding while hand-empty".into());
        }
        if held == 0 && !state.contains(self.hand_empty) {
            return Err("neither holding nor hand-empty".into());
        }
        let mut locations = vec![0usize; self.entities.len()];
        for a in state.atoms() {
            if let Some(e) = self.locates[*a as usize] {
                locations[e] += 1;
            }
        }
        for (e, n) in locations.iter().enumerate() {
            if *n != 1 {
                return Err(format!("entity {} has {n} location atoms", self.entities[e].0));
            }
            if state.contains(self.hidden[e]) == state.contains(self.revealed[e]) {
                return Err(format!("entity {} hidden/revealed inconsistent", self.entities[e].0));
            }
        }
        Ok(())
    }
}

/// Grounds the seven action schemas. Moves follow adjacency only; searches
/// exist for each candidate cell of each uncertain entity.
fn ground_actions(d: &Domain, edges: &BTreeSet<(CellId, CellId)>) -> Vec<GroundAction> {
    let name = |c: CellId| d.cells[c].clone();
    let ent = |e: EntityId| d.entities[e].0.clone();
    let kinds = |pred: fn(EntityKind) -> bool| -> Vec<EntityId> {
        (0..d.entities.len()).filter(|e| pred(d.entities[*e].1)).collect()
    };
    let items = kinds(|k| k == EntityKind::Item);
    let boxes = kinds(|k| k == EntityKind::Box);
    let carryables = kinds(EntityKind::is_carryable);
    let people = kinds(|k| k == EntityKind::Person);
    let regions: Vec<CellId> =
        (0..d.cells.len()).filter(|c| d.cell_kinds[*c] == CellKind::Region).collect();
    let holding = |e: EntityId| d.holding[e].expect("carryable");

    let mut out = Vec::new();
    let mut push = |schema, params: Vec<String>, pre: Vec<AtomId>, add: Vec<AtomId>, del: Vec<AtomId>| {
        let sorted = |mut v: Vec<AtomId>| {
            v.sort_unstable();
            v
        };
        out.push(GroundAction { schema, params, pre: sorted(pre), add: sorted(add), del: sorted(del) });
    };

    for (a, b) in edges {
        push(Schema::Move, vec![name(*a), name(*b)], vec![d.robot_at[*a]], vec![d.robot_at[*b]], vec![d.robot_at[*a]]);
    }
    for u in &d.uncertain {
        for (c, _) in &u.cells {
            let e = u.entity;
            push(
                Schema::Search,
                vec![ent(e), name(*c)],
                vec![d.robot_at[*c], d.item_at[e][*c], d.hidden[e]],
                vec![d.revealed[e]],
                vec![d.hidden[e]],
            );
        }
    }
    for &i in &carryables {
        for c in 0..d.cells.len() {
            push(
                Schema::Pick,
                vec![ent(i), name(c)],
                vec![d.robot_at[c], d.item_at[i][c], d.revealed[i], d.hand_empty],
                vec![holding(i)],
                vec![d.item_at[i][c], d.hand_empty],
            );
            push(
                Schema::Place,
                vec![ent(i), name(c)],
                vec![d.robot_at[c], holding(i)],
                vec![d.item_at[i][c], d.hand_empty],
                vec![holding(i)],
            );
        }
    }
    for &i in &items {
        for &b in &boxes {
            let in_box = d.atom_ids[&Atom::new(Predicate::InBox, [ent(i), ent(b)])];
            for c in 0..d.cells.len() {
                push(
                    Schema::PutIn,
                    vec![ent(i), ent(b), name(c)],
                    vec![d.robot_at[c], holding(i), d.item_at[b][c], d.revealed[b]],
                    vec![in_box, d.hand_empty],
                    vec![holding(i)],
                );
            }
        }
        for &p in &people {
            let delivered = d.atom_ids[&Atom::new(Predicate::Delivered, [ent(i), ent(p)])];
            for &c in &regions {
                push(
                    Schema::Give,
                    vec![ent(i), ent(p), name(c)],
                    vec![d.robot_at[c], holding(i), d.item_at[p][c], d.revealed[p]],
                    vec![delivered, d.hand_empty],
                    vec![holding(i)],
                );
            }
        }
    }
    for &p in &people {
        let checked = d.atom_ids[&Atom::new(Predicate::CheckedIn, [ent(p)])];
        for &c in &regions {
            push(
                Schema::Checkin,
                vec![ent(p), name(c)],
                vec![d.robot_at[c], d.item_at[p][c], d.revealed[p]],
                vec![checked],
                vec![],
            );
        }
    }

    out.sort_by(|a, b| (a.schema, &a.params).cmp(&(b.schema, &b.params)));
    out
}

/// The full grounded action set of a scenario, in canonical order.
pub fn ground(spec: &ScenarioSpec) -> Vec<GroundAction> {
    Domain::new(spec).actions
}
