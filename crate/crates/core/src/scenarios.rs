//! Benchmark domains and the seeded generator of location uncertainty.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, Stream};
use crate::strips::{
    parse_scenario, Atom, Cell, CellKind, CellTotals, Entity, EntityKind, ParseError, Predicate, ScenarioSpec,
    UncertainEntity,
};

const OFFICE_TOPOLOGY: &str = include_str!("../data/office.scenario");
const FIG1_MICRO: &str = include_str!("../data/fig1_micro.scenario");

/// Shape of the probabilities attached to an entity's candidate cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Likelihood {
    Uniform,
    /// Each location has 75% of the probability of the next one.
    Decay75,
    /// Each location has 50% of the probability of the next one.
    Decay50,
}

impl Likelihood {
    pub const ALL: [Likelihood; 3] = [Likelihood::Uniform, Likelihood::Decay75, Likelihood::Decay50];

    pub fn name(self) -> &'static str {
        match self {
            Likelihood::Uniform => "uniform",
            Likelihood::Decay75 => "decay75",
            Likelihood::Decay50 => "decay50",
        }
    }

    fn ratio(self) -> Option<f64> {
        match self {
            Likelihood::Uniform => None,
            Likelihood::Decay75 => Some(0.75),
            Likelihood::Decay50 => Some(0.5),
        }
    }
}

impl fmt::Display for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("unknown {what} `{value}`")]
pub struct UnknownName {
    pub what: &'static str,
    pub value: String,
}

impl FromStr for Likelihood {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Likelihood::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownName { what: "likelihood", value: s.to_owned() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainKind {
    Elevator,
    Micro,
    Office,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [DomainKind::Elevator, DomainKind::Micro, DomainKind::Office];

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Elevator => "elevator",
            DomainKind::Micro => "micro",
            DomainKind::Office => "office",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| UnknownName { what: "domain", value: s.to_owned() })
    }
}

/// How many candidate cells each uncertain entity gets, with what
/// probabilities, drawn from which seed. The amount is shared by all
/// uncertain entities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UncertaintyConfig {
    pub amount: usize,
    pub likelihood: Likelihood,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("uncertainty amount must be at least 1")]
    ZeroAmount,
    #[error("entity `{entity}` needs {amount} candidate cells but only {eligible} are eligible")]
    TooFewCells { entity: String, amount: usize, eligible: usize },
    #[error("built-in scenario is invalid: {0}")]
    Builtin(#[from] ParseError),
}

/// Probabilities for `n` candidate locations, in nondecreasing order. For
/// the decay kinds each entry is exactly `r` times the next one.
pub fn gen_likelihoods(n: usize, kind: Likelihood) -> Vec<f64> {
    assert!(n >= 1, "at least one location");
    match kind.ratio() {
        None => vec![1.0 / n as f64; n],
        Some(r) => {
            let weight: f64 = (0..n).map(|k| r.powi(k as i32)).sum();
            let mut p = vec![0.0; n];
            p[n - 1] = 1.0 / weight;
            for i in (0..n - 1).rev() {
                p[i] = r * p[i + 1];
            }
            p
        }
    }
}

/// Replaces each listed entity's position by `uc.amount` distinct cells,
/// sampled uniformly without replacement from its eligible cells. The
/// i-th sampled cell gets the i-th probability of
/// [`gen_likelihoods`]. Different entities may share cells.
pub fn assign_locations<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    uc: &UncertaintyConfig,
    eligible: &[(&str, Vec<String>)],
    rng: &mut R,
) -> Result<ScenarioSpec, ScenarioError> {
    if uc.amount == 0 {
        return Err(ScenarioError::ZeroAmount);
    }
    let probabilities = gen_likelihoods(uc.amount, uc.likelihood);
    let mut out = spec.clone();
    for (entity, cells) in eligible {
        if cells.len() < uc.amount {
            return Err(ScenarioError::TooFewCells {
                entity: (*entity).to_owned(),
                amount: uc.amount,
                eligible: cells.len(),
            });
        }
        out.init.retain(|a| !(a.predicate == Predicate::ItemAt && a.args[0] == *entity));
        out.uncertain.retain(|u| u.entity != *entity);
        let picked = sample(rng, cells.len(), uc.amount);
        let candidates = picked.iter().zip(&probabilities).map(|(i, p)| (cells[i].clone(), *p)).collect();
        out.uncertain.push(UncertainEntity { entity: (*entity).to_owned(), candidates });
    }
    Ok(out)
}

fn cells_of(spec: &ScenarioSpec, kinds: &[CellKind], exclude: impl Fn(&str) -> bool) -> Vec<String> {
    spec.cells
        .iter()
        .filter(|c| kinds.contains(&c.kind) && !exclude(&c.id))
        .map(|c| c.id.clone())
        .collect()
}

/// The office topology with every entity at its default position.
pub fn office_base() -> ScenarioSpec {
    parse_scenario(OFFICE_TOPOLOGY).expect("shipped office topology is valid")
}

/// Office: 42 region and 29 surface cells; cake, cube and box are
/// uncertain over all cells; goal is both items in the box.
pub fn build_office(uc: &UncertaintyConfig) -> Result<ScenarioSpec, ScenarioError> {
    let base = parse_scenario(OFFICE_TOPOLOGY)?;
    let all = cells_of(&base, &[CellKind::Region, CellKind::Surface], |_| false);
    let eligible = [("box", all.clone()), ("cake", all.clone()), ("cube", all)];
    assign_locations(&base, uc, &eligible, &mut stream(uc.seed, Stream::Locations))
}

pub const ELEVATOR_ROWS: usize = 4;
pub const ELEVATOR_COLS: usize = 5;
pub const ELEVATOR_SHAFT: usize = 10;

fn floor_cell(floor: usize, r: usize, c: usize) -> String {
    format!("f{floor}-r{r}c{c}")
}

/// The elevator cell on each floor: bottom row, middle column.
pub fn elevator_lobby(floor: usize) -> String {
    floor_cell(floor, ELEVATOR_ROWS - 1, ELEVATOR_COLS / 2)
}

/// Two-floor office: per floor a grid of 4x5 region cells with 10 tables
/// in a checkerboard, each reachable from one floor cell. A 10-cell shaft
/// joins the lower-middle cells of the floors. The delivery item may start
/// on any floor or table cell, people on floor cells only.
pub fn elevator_base() -> ScenarioSpec {
    let mut cells = Vec::new();
    let mut adjacency = Vec::new();
    for floor in 1..=2 {
        for r in 0..ELEVATOR_ROWS {
            for c in 0..ELEVATOR_COLS {
                let id = floor_cell(floor, r, c);
                cells.push(Cell { id: id.clone(), kind: CellKind::Region });
                if c > 0 {
                    adjacency.push((floor_cell(floor, r, c - 1), id.clone()));
                }
                if r > 0 {
                    adjacency.push((floor_cell(floor, r - 1, c), id.clone()));
                }
            }
        }
        for r in 0..ELEVATOR_ROWS {
            for c in 0..ELEVATOR_COLS {
                if (r + c) % 2 == 0 {
                    let table = format!("f{floor}-table-r{r}c{c}");
                    cells.push(Cell { id: table.clone(), kind: CellKind::Surface });
                    adjacency.push((floor_cell(floor, r, c), table));
                }
            }
        }
    }
    for i in 1..=ELEVATOR_SHAFT {
        let id = format!("shaft-{i}");
        cells.push(Cell { id: id.clone(), kind: CellKind::Region });
        if i > 1 {
            adjacency.push((format!("shaft-{}", i - 1), id));
        }
    }
    adjacency.push((elevator_lobby(1), "shaft-1".to_owned()));
    adjacency.push((format!("shaft-{ELEVATOR_SHAFT}"), elevator_lobby(2)));

    let entities = vec![
        Entity { id: "delivery".into(), kind: EntityKind::Item },
        Entity { id: "recipient".into(), kind: EntityKind::Person },
        Entity { id: "staff".into(), kind: EntityKind::Person },
    ];
    let init = [
        Atom::new(Predicate::RobotAt, [elevator_lobby(1)]),
        Atom::new(Predicate::ItemAt, ["delivery".to_owned(), "f1-table-r0c0".to_owned()]),
        Atom::new(Predicate::ItemAt, ["recipient".to_owned(), floor_cell(2, 0, 4)]),
        Atom::new(Predicate::ItemAt, ["staff".to_owned(), floor_cell(2, 0, 0)]),
    ]
    .into_iter()
    .collect();
    let goal = [Atom::new(Predicate::Delivered, ["delivery", "recipient"]), Atom::new(Predicate::CheckedIn, ["staff"])]
        .into_iter()
        .collect();
    let regions = 2 * ELEVATOR_ROWS * ELEVATOR_COLS + ELEVATOR_SHAFT;
    let surfaces = cells.len() - regions;
    ScenarioSpec {
        cells,
        adjacency,
        entities,
        init,
        goal,
        uncertain: Vec::new(),
        totals: CellTotals { regions: Some(regions), surfaces: Some(surfaces) },
    }
}

pub fn build_elevator(uc: &UncertaintyConfig) -> Result<ScenarioSpec, ScenarioError> {
    let base = elevator_base();
    let off_shaft = |id: &str| id.starts_with("shaft-");
    let floors = cells_of(&base, &[CellKind::Region], off_shaft);
    let placeable = cells_of(&base, &[CellKind::Region, CellKind::Surface], off_shaft);
    let eligible = [("delivery", placeable), ("recipient", floors.clone()), ("staff", floors)];
    assign_locations(&base, uc, &eligible, &mut stream(uc.seed, Stream::Locations))
}

/// The two-world cup example: kitchen (20%, one move away) or bathroom
/// (80%, eight moves away); the cup must end on the table by the kitchen.
pub fn build_fig1_micro() -> ScenarioSpec {
    parse_scenario(FIG1_MICRO).expect("shipped micro scenario is valid")
}

pub fn build(kind: DomainKind, uc: &UncertaintyConfig) -> Result<ScenarioSpec, ScenarioError> {
    match kind {
        DomainKind::Office => build_office(uc),
        DomainKind::Elevator => build_elevator(uc),
        DomainKind::Micro => Ok(build_fig1_micro()),
    }
}

/// A small random fetch-and-place task for property tests: a chain of 3-5
/// rooms with an extra shortcut, 1-2 surfaces and one item to move onto a
/// surface. With `uncertain`, the item is hidden in one of two cells.
pub fn random_small(seed: u64, uncertain: bool) -> ScenarioSpec {
    let mut rng = stream(seed, Stream::Locations);
    let rooms = rng.gen_range(3..=5);
    let surfaces = rng.gen_range(1..=2);
    let mut cells: Vec<Cell> =
        (0..rooms).map(|i| Cell { id: format!("room-{i}"), kind: CellKind::Region }).collect();
    let mut adjacency: Vec<(String, String)> =
        (1..rooms).map(|i| (format!("room-{}", i - 1), format!("room-{i}"))).collect();
    if rooms > 3 && rng.gen_bool(0.5) {
        adjacency.push(("room-0".into(), format!("room-{}", rooms - 1)));
    }
    for j in 0..surfaces {
        let id = format!("shelf-{j}");
        adjacency.push((format!("room-{}", rng.gen_range(0..rooms)), id.clone()));
        cells.push(Cell { id, kind: CellKind::Surface });
    }
    let goal_cell = format!("shelf-{}", rng.gen_range(0..surfaces));
    let others: Vec<String> = cells.iter().map(|c| c.id.clone()).filter(|c| *c != goal_cell).collect();
    let robot = format!("room-{}", rng.gen_range(0..rooms));
    let mut init: std::collections::BTreeSet<Atom> = [Atom::new(Predicate::RobotAt, [robot])].into_iter().collect();
    let mut uncertain_entities = Vec::new();
    if uncertain {
        let picked = sample(&mut rng, others.len(), 2);
        uncertain_entities.push(UncertainEntity {
            entity: "cup".into(),
            candidates: picked.iter().map(|i| (others[i].clone(), 0.5)).collect(),
        });
    } else {
        let start = others[rng.gen_range(0..others.len())].clone();
        init.insert(Atom::new(Predicate::ItemAt, ["cup".to_owned(), start]));
    }
    ScenarioSpec {
        cells,
        adjacency,
        entities: vec![Entity { id: "cup".into(), kind: EntityKind::Item }],
        init,
        goal: [Atom::new(Predicate::ItemAt, ["cup".to_owned(), goal_cell])].into_iter().collect(),
        uncertain: uncertain_entities,
        totals: CellTotals::default(),
    }
}

#[cfg(test)]
mod tests {
    use num_rational::Ratio;

    use super::*;

    fn uc(amount: usize, likelihood: Likelihood, seed: u64) -> UncertaintyConfig {
        UncertaintyConfig { amount, likelihood, seed }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn likelihood_examples() {
        assert!(close(&gen_likelihoods(3, Likelihood::Uniform), &[1.0 / 3.0; 3]));
        assert!(close(&gen_likelihoods(2, Likelihood::Decay50), &[1.0 / 3.0, 2.0 / 3.0]));
        assert!(close(&gen_likelihoods(3, Likelihood::Decay50), &[1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]));
        assert_eq!(gen_likelihoods(1, Likelihood::Decay75), vec![1.0]);
    }

    #[test]
    fn decay_matches_exact_rationals() {
        // Exact reference: weights r^(n-1-i) normalized.
        for n in 1..=10usize {
            let r = Ratio::new(3i64, 4);
            let weights: Vec<Ratio<i64>> = (0..n).map(|i| r.pow((n - 1 - i) as i32)).collect();
            let total: Ratio<i64> = weights.iter().sum();
            let got = gen_likelihoods(n, Likelihood::Decay75);
            for (g, w) in got.iter().zip(&weights) {
                let exact = *(w / total).numer() as f64 / *(w / total).denom() as f64;
                assert!((g - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn office_counts() {
        for seed in 0..3 {
            let spec = build_office(&uc(2, Likelihood::Uniform, seed)).unwrap();
            assert_eq!((spec.region_count(), spec.surface_count()), (42, 29));
            assert_eq!(spec.uncertain.len(), 3);
            assert!(spec.uncertain.iter().all(|u| u.candidates.len() == 2));
            spec.validate().unwrap();
        }
        let base = office_base();
        assert_eq!((base.region_count(), base.surface_count()), (42, 29));
    }

    #[test]
    fn builders_are_deterministic() {
        let a = build_office(&uc(6, Likelihood::Decay75, 11)).unwrap();
        let b = build_office(&uc(6, Likelihood::Decay75, 11)).unwrap();
        assert_eq!(a, b);
        let c = build_office(&uc(6, Likelihood::Decay75, 12)).unwrap();
        assert_ne!(a, c);
        assert_eq!(build_elevator(&uc(4, Likelihood::Uniform, 3)), build_elevator(&uc(4, Likelihood::Uniform, 3)));
    }

    #[test]
    fn elevator_shape() {
        let spec = build_elevator(&uc(10, Likelihood::Decay50, 0)).unwrap();
        spec.validate().unwrap();
        assert_eq!(spec.region_count(), 50);
        for floor in 1..=2 {
            let tables = spec.cells.iter().filter(|c| c.id.starts_with(&format!("f{floor}-table"))).count();
            assert_eq!(tables, 10);
        }
        for u in &spec.uncertain {
            assert!(u.candidates.iter().all(|(c, _)| !c.starts_with("shaft")));
            if u.entity != "delivery" {
                assert!(u.candidates.iter().all(|(c, _)| spec.cell(c).unwrap().kind == CellKind::Region));
            }
        }
    }

    #[test]
    fn too_many_candidates() {
        let err = build_elevator(&uc(41, Likelihood::Uniform, 0)).unwrap_err();
        assert!(matches!(err, ScenarioError::TooFewCells { .. }));
        assert_eq!(build_office(&uc(0, Likelihood::Uniform, 0)).unwrap_err(), ScenarioError::ZeroAmount);
    }

    #[test]
    fn amount_equal_to_eligible_takes_all() {
        let spec = build_elevator(&uc(40, Likelihood::Uniform, 5)).unwrap();
        let staff = spec.uncertain_entity("staff").unwrap();
        let mut cells: Vec<_> = staff.candidates.iter().map(|(c, _)| c.clone()).collect();
        cells.sort();
        cells.dedup();
        assert_eq!(cells.len(), 40);
    }

    #[test]
    fn micro_fixture() {
        let spec = build_fig1_micro();
        let cup = spec.uncertain_entity("cup").unwrap();
        assert_eq!(cup.candidates, vec![("kitchen".to_owned(), 0.2), ("bathroom".to_owned(), 0.8)]);
    }

    #[test]
    fn random_small_is_valid() {
        for seed in 0..50 {
            random_small(seed, false).validate().unwrap();
            random_small(seed, true).validate().unwrap();
        }
    }

    #[test]
    fn names_round_trip() {
        for l in Likelihood::ALL {
            assert_eq!(l.name().parse::<Likelihood>().unwrap(), l);
        }
        for d in DomainKind::ALL {
            assert_eq!(d.name().parse::<DomainKind>().unwrap(), d);
        }
        assert!("decay90".parse::<Likelihood>().is_err());
    }

    proptest::proptest! {
        #[test]
        fn likelihoods_are_distributions(n in 1usize..40, k in 0usize..3) {
            let kind = Likelihood::ALL[k];
            let p = gen_likelihoods(n, kind);
            proptest::prop_assert_eq!(p.len(), n);
            proptest::prop_assert!(p.iter().all(|x| *x > 0.0));
            proptest::prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            proptest::prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn generated_candidates_are_distinct_eligible_cells(amount in 1usize..12, seed: u64, k in 0usize..3) {
            let spec = build_elevator(&uc(amount, Likelihood::ALL[k], seed)).unwrap();
            proptest::prop_assert!(spec.validate().is_ok());
            for u in &spec.uncertain {
                let mut cells: Vec<&String> = u.candidates.iter().map(|(c, _)| c).collect();
                cells.sort();
                cells.dedup();
                proptest::prop_assert_eq!(cells.len(), amount);
            }
        }
    }
}
