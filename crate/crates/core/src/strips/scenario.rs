//! Symbolic scenario description: cells, adjacency, entities, fixed initial
//! atoms, goal, and the location distributions of uncertain entities.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

/// Tolerance on the per-entity candidate probability sum.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Predicates of the scenario language.
///
/// Variants are declared in lexicographic order of their textual names so
/// the derived `Ord` matches the canonical atom ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    CheckedIn,
    Delivered,
    HandEmpty,
    Hidden,
    Holding,
    InBox,
    ItemAt,
    Revealed,
    RobotAt,
}

/// Argument sorts used to type-check atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Cell,
    /// Any entity (item, box or person).
    Entity,
    /// An item or a box.
    Carryable,
    /// An item that is not a box.
    Item,
    Box,
    Person,
}

impl Predicate {
    pub const ALL: [Predicate; 9] = [
        Predicate::CheckedIn,
        Predicate::Delivered,
        Predicate::HandEmpty,
        Predicate::Hidden,
        Predicate::Holding,
        Predicate::InBox,
        Predicate::ItemAt,
        Predicate::Revealed,
        Predicate::RobotAt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::CheckedIn => "checked-in",
            Predicate::Delivered => "delivered",
            Predicate::HandEmpty => "hand-empty",
            Predicate::Hidden => "hidden",
            Predicate::Holding => "holding",
            Predicate::InBox => "in-box",
            Predicate::ItemAt => "item-at",
            Predicate::Revealed => "revealed",
            Predicate::RobotAt => "robot-at",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Predicate::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn signature(self) -> &'static [Sort] {
        match self {
            Predicate::CheckedIn => &[Sort::Person],
            Predicate::Delivered => &[Sort::Item, Sort::Person],
            Predicate::HandEmpty => &[],
            Predicate::Hidden | Predicate::Revealed => &[Sort::Entity],
            Predicate::Holding => &[Sort::Carryable],
            Predicate::InBox => &[Sort::Item, Sort::Box],
            Predicate::ItemAt => &[Sort::Entity, Sort::Cell],
            Predicate::RobotAt => &[Sort::Cell],
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A ground atom. Ordered by predicate name, then arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<S: Into<String>>(predicate: Predicate, args: impl IntoIterator<Item = S>) -> Self {
        Atom { predicate, args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.name())?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellKind {
    Region,
    Surface,
}

impl CellKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CellKind::Region => "region",
            CellKind::Surface => "surface",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: String,
    pub kind: CellKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Item,
    Box,
    Person,
}

impl EntityKind {
    pub fn keyword(self) -> &'static str {
        match self {
            EntityKind::Item => "item",
            EntityKind::Box => "box",
            EntityKind::Person => "person",
        }
    }

    pub fn is_carryable(self) -> bool {
        matches!(self, EntityKind::Item | EntityKind::Box)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
}

/// The candidate locations of one entity whose initial cell is unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertainEntity {
    pub entity: String,
    pub candidates: Vec<(String, f64)>,
}

/// Declared region/surface totals, checked against the cell list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CellTotals {
    pub regions: Option<usize>,
    pub surfaces: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioSpec {
    pub cells: Vec<Cell>,
    /// Undirected edges; each pair allows movement both ways.
    pub adjacency: Vec<(String, String)>,
    pub entities: Vec<Entity>,
    pub init: BTreeSet<Atom>,
    pub goal: BTreeSet<Atom>,
    pub uncertain: Vec<UncertainEntity>,
    pub totals: CellTotals,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SemanticError {
    #[error("duplicate cell `{0}`")]
    DuplicateCell(String),
    #[error("duplicate entity `{0}`")]
    DuplicateEntity(String),
    #[error("identifier `{0}` is declared both as a cell and as an entity")]
    NameClash(String),
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("adjacency `{0}` -- `{0}` is a self loop")]
    SelfLoop(String),
    #[error("atom `{atom}`: expected {expected} arguments, found {found}")]
    Arity { atom: String, expected: usize, found: usize },
    #[error("atom `{atom}`: argument `{arg}` is not a {expected:?}")]
    Sort { atom: String, arg: String, expected: Sort },
    #[error("atom `{0}` is derived and may not appear in init")]
    DerivedInInit(String),
    #[error("init must contain exactly one robot-at atom, found {0}")]
    RobotPlacement(usize),
    #[error("init holds {0} holding atoms; the robot has one gripper")]
    TooManyHeld(usize),
    #[error("entity `{entity}` has {found} location atoms, expected exactly one")]
    EntityPlacement { entity: String, found: usize },
    #[error("person `{person}` placed on non-region cell `{cell}`")]
    PersonOffRegion { person: String, cell: String },
    #[error("entity `{0}` is listed as uncertain more than once")]
    DuplicateUncertain(String),
    #[error("uncertain entity `{0}` has no candidate cells")]
    NoCandidates(String),
    #[error("uncertain entity `{entity}` lists cell `{cell}` twice")]
    DuplicateCandidate { entity: String, cell: String },
    #[error("probability {value} for `{entity}` is outside [0, 1]")]
    ProbabilityRange { entity: String, value: f64 },
    #[error("candidate probabilities of `{entity}` sum to {sum}, not 1")]
    ProbabilitySum { entity: String, sum: f64 },
    #[error("declared {kind} total {declared} but found {found}")]
    CountMismatch { kind: &'static str, declared: usize, found: usize },
}

impl ScenarioSpec {
    pub fn cell(&self, id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn region_count(&self) -> usize {
        self.cells.iter().filter(|c| c.kind == CellKind::Region).count()
    }

    pub fn surface_count(&self) -> usize {
        self.cells.iter().filter(|c| c.kind == CellKind::Surface).count()
    }

    pub fn uncertain_entity(&self, id: &str) -> Option<&UncertainEntity> {
        self.uncertain.iter().find(|u| u.entity == id)
    }

    /// Checks every structural invariant of the scenario.
    pub fn validate(&self) -> Result<(), SemanticError> {
        let mut cells: HashMap<&str, CellKind> = HashMap::new();
        for cell in &self.cells {
            if cells.insert(cell.id.as_str(), cell.kind).is_some() {
                return Err(SemanticError::DuplicateCell(cell.id.clone()));
            }
        }
        let mut entities: HashMap<&str, EntityKind> = HashMap::new();
        for entity in &self.entities {
            if cells.contains_key(entity.id.as_str()) {
                return Err(SemanticError::NameClash(entity.id.clone()));
            }
            if entities.insert(entity.id.as_str(), entity.kind).is_some() {
                return Err(SemanticError::DuplicateEntity(entity.id.clone()));
            }
        }
        for (a, b) in &self.adjacency {
            for end in [a, b] {
                if !cells.contains_key(end.as_str()) {
                    return Err(SemanticError::UnknownCell(end.clone()));
                }
            }
            if a == b {
                return Err(SemanticError::SelfLoop(a.clone()));
            }
        }

        let check_atom = |atom: &Atom| -> Result<(), SemanticError> {
            let signature = atom.predicate.signature();
            if signature.len() != atom.args.len() {
                return Err(SemanticError::Arity {
                    atom: atom.to_string(),
                    expected: signature.len(),
                    found: atom.args.len(),
                });
            }
            for (arg, sort) in atom.args.iter().zip(signature) {
                let ok = match sort {
                    Sort::Cell => {
                        if !cells.contains_key(arg.as_str()) {
                            return Err(SemanticError::UnknownCell(arg.clone()));
                        }
                        true
                    }
                    _ => {
                        let Some(kind) = entities.get(arg.as_str()) else {
                            return Err(SemanticError::UnknownEntity(arg.clone()));
                        };
                        match sort {
                            Sort::Entity => true,
                            Sort::Carryable => kind.is_carryable(),
                            Sort::Item => *kind == EntityKind::Item,
                            Sort::Box => *kind == EntityKind::Box,
                            Sort::Person => *kind == EntityKind::Person,
                            Sort::Cell => unreachable!(),
                        }
                    }
                };
                if !ok {
                    return Err(SemanticError::Sort {
                        atom: atom.to_string(),
                        arg: arg.clone(),
                        expected: *sort,
                    });
                }
            }
            Ok(())
        };

        for atom in self.init.iter().chain(&self.goal) {
            check_atom(atom)?;
        }
        for atom in &self.init {
            if matches!(
                atom.predicate,
                Predicate::Hidden | Predicate::Revealed | Predicate::HandEmpty
            ) {
                return Err(SemanticError::DerivedInInit(atom.to_string()));
            }
        }
        let robots = self.init.iter().filter(|a| a.predicate == Predicate::RobotAt).count();
        if robots != 1 {
            return Err(SemanticError::RobotPlacement(robots));
        }
        let held = self.init.iter().filter(|a| a.predicate == Predicate::Holding).count();
        if held > 1 {
            return Err(SemanticError::TooManyHeld(held));
        }

        let mut seen_uncertain = HashSet::new();
        for u in &self.uncertain {
            let Some(kind) = entities.get(u.entity.as_str()) else {
                return Err(SemanticError::UnknownEntity(u.entity.clone()));
            };
            if !seen_uncertain.insert(u.entity.as_str()) {
                return Err(SemanticError::DuplicateUncertain(u.entity.clone()));
            }
            if u.candidates.is_empty() {
                return Err(SemanticError::NoCandidates(u.entity.clone()));
            }
            let mut cand_cells = HashSet::new();
            let mut sum = 0.0;
            for (cell, p) in &u.candidates {
                let Some(cell_kind) = cells.get(cell.as_str()) else {
                    return Err(SemanticError::UnknownCell(cell.clone()));
                };
                if !cand_cells.insert(cell.as_str()) {
                    return Err(SemanticError::DuplicateCandidate {
                        entity: u.entity.clone(),
                        cell: cell.clone(),
                    });
                }
                if *kind == EntityKind::Person && *cell_kind != CellKind::Region {
                    return Err(SemanticError::PersonOffRegion {
                        person: u.entity.clone(),
                        cell: cell.clone(),
                    });
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(SemanticError::ProbabilityRange {
                        entity: u.entity.clone(),
                        value: *p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                return Err(SemanticError::ProbabilitySum { entity: u.entity.clone(), sum });
            }
        }

        // Every entity is located exactly once: by a fixed atom or by its
        // candidate distribution.
        for entity in &self.entities {
            let mut found = usize::from(seen_uncertain.contains(entity.id.as_str()));
            for atom in &self.init {
                let locates = match atom.predicate {
                    Predicate::ItemAt | Predicate::Holding | Predicate::InBox | Predicate::Delivered => {
                        atom.args[0] == entity.id
                    }
                    _ => false,
                };
                if locates {
                    found += 1;
                    if entity.kind == EntityKind::Person
                        && cells.get(atom.args[1].as_str()) != Some(&CellKind::Region)
                    {
                        return Err(SemanticError::PersonOffRegion {
                            person: entity.id.clone(),
                            cell: atom.args[1].clone(),
                        });
                    }
                }
            }
            if found != 1 {
                return Err(SemanticError::EntityPlacement { entity: entity.id.clone(), found });
            }
        }

        if let Some(declared) = self.totals.regions {
            let found = self.region_count();
            if declared != found {
                return Err(SemanticError::CountMismatch { kind: "region", declared, found });
            }
        }
        if let Some(declared) = self.totals.surfaces {
            let found = self.surface_count();
            if declared != found {
                return Err(SemanticError::CountMismatch { kind: "surface", declared, found });
            }
        }
        Ok(())
    }

    /// Renders the scenario in the line-oriented scenario format.
    ///
    /// Probabilities use the shortest decimal form that parses back to the
    /// same `f64`, so `parse_scenario(&spec.to_text())` reproduces `spec`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.totals != CellTotals::default() {
            out.push_str("totals:\n");
            if let Some(n) = self.totals.regions {
                let _ = writeln!(out, "  regions {n}");
            }
            if let Some(n) = self.totals.surfaces {
                let _ = writeln!(out, "  surfaces {n}");
            }
        }
        out.push_str("cells:\n");
        for cell in &self.cells {
            let _ = writeln!(out, "  {} {}", cell.kind.keyword(), cell.id);
        }
        out.push_str("adjacency:\n");
        for (a, b) in &self.adjacency {
            let _ = writeln!(out, "  {a} {b}");
        }
        out.push_str("entities:\n");
        for entity in &self.entities {
            let _ = writeln!(out, "  {} {}", entity.kind.keyword(), entity.id);
        }
        out.push_str("init:\n");
        for atom in &self.init {
            let _ = writeln!(out, "  {atom}");
        }
        out.push_str("goal:\n");
        for atom in &self.goal {
            let _ = writeln!(out, "  {atom}");
        }
        out.push_str("uncertain:\n");
        for u in &self.uncertain {
            let _ = write!(out, "  {}", u.entity);
            for (cell, p) in &u.candidates {
                let _ = write!(out, " {cell} {p}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cell() -> ScenarioSpec {
        ScenarioSpec {
            cells: vec![
                Cell { id: "a".into(), kind: CellKind::Region },
                Cell { id: "b".into(), kind: CellKind::Surface },
            ],
            adjacency: vec![("a".into(), "b".into())],
            entities: vec![Entity { id: "cup".into(), kind: EntityKind::Item }],
            init: [Atom::new(Predicate::RobotAt, ["a"]), Atom::new(Predicate::ItemAt, ["cup", "a"])]
                .into_iter()
                .collect(),
            goal: [Atom::new(Predicate::ItemAt, ["cup", "b"])].into_iter().collect(),
            uncertain: vec![],
            totals: CellTotals::default(),
        }
    }

    #[test]
    fn predicate_order_is_lexicographic() {
        let mut names: Vec<_> = Predicate::ALL.iter().map(|p| p.name()).collect();
        let sorted = {
            let mut s = names.clone();
            s.sort();
            s
        };
        assert_eq!(names, sorted);
        names.dedup();
        assert_eq!(names.len(), Predicate::ALL.len());
    }

    #[test]
    fn valid_minimal_scenario() {
        assert_eq!(two_cell().validate(), Ok(()));
    }

    #[test]
    fn rejects_item_located_twice() {
        let mut spec = two_cell();
        spec.uncertain.push(UncertainEntity {
            entity: "cup".into(),
            candidates: vec![("a".into(), 1.0)],
        });
        assert!(matches!(spec.validate(), Err(SemanticError::EntityPlacement { .. })));
    }

    #[test]
    fn rejects_derived_init_atoms() {
        let mut spec = two_cell();
        spec.init.insert(Atom::new(Predicate::HandEmpty, Vec::<String>::new()));
        assert!(matches!(spec.validate(), Err(SemanticError::DerivedInInit(_))));
    }

    #[test]
    fn rejects_wrong_sort() {
        let mut spec = two_cell();
        spec.goal.insert(Atom::new(Predicate::CheckedIn, ["cup"]));
        assert!(matches!(spec.validate(), Err(SemanticError::Sort { .. })));
    }

    #[test]
    fn rejects_count_mismatch() {
        let mut spec = two_cell();
        spec.totals.regions = Some(2);
        assert_eq!(
            spec.validate(),
            Err(SemanticError::CountMismatch { kind: "region", declared: 2, found: 1 })
        );
    }
}
