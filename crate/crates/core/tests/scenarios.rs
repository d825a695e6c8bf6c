mod common;

use common::{distance, rational_scenario};
use portal_core::scenarios::{
    build, build_elevator, elevator_lobby, office_base, random_small, DomainKind, Likelihood, UncertaintyConfig,
    ELEVATOR_SHAFT,
};
use portal_core::strips::{parse_scenario, Domain};

fn uc(amount: usize, likelihood: Likelihood, seed: u64) -> UncertaintyConfig {
    UncertaintyConfig { amount, likelihood, seed }
}

#[test]
fn generated_scenarios_round_trip_through_text() {
    let mut specs = vec![];
    for kind in DomainKind::ALL {
        for likelihood in Likelihood::ALL {
            specs.push(build(kind, &uc(3, likelihood, 11)).unwrap());
        }
    }
    specs.extend((0..20).map(|s| random_small(s, s % 2 == 0)));
    specs.extend((0..20).map(|s| rational_scenario(s).0));
    for spec in specs {
        let text = spec.to_text();
        let parsed = parse_scenario(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(parsed, spec);
        assert_eq!(parsed.to_text(), text);
    }
}

#[test]
fn office_has_declared_cell_totals() {
    let spec = office_base();
    spec.validate().unwrap();
    assert_eq!(spec.region_count(), 42);
    assert_eq!(spec.surface_count(), 29);
}

#[test]
fn elevator_floor_to_floor_trip_crosses_the_shaft() {
    let domain = Domain::new(&build_elevator(&uc(2, Likelihood::Uniform, 0)).unwrap());
    let f1 = domain.cell_id(&elevator_lobby(1)).unwrap();
    let f2 = domain.cell_id(&elevator_lobby(2)).unwrap();
    assert_eq!(distance(&domain, f1, f2), ELEVATOR_SHAFT + 1);
    assert_eq!(distance(&domain, f2, f1), ELEVATOR_SHAFT + 1);
}

#[test]
fn uncertain_entities_never_start_in_the_shaft() {
    for seed in 0..30 {
        let spec = build_elevator(&uc(10, Likelihood::Decay50, seed)).unwrap();
        for u in &spec.uncertain {
            assert_eq!(u.candidates.len(), 10);
            assert!(u.candidates.iter().all(|(c, _)| !c.starts_with("shaft")), "{:?}", u.candidates);
        }
    }
}

#[test]
fn location_sampling_is_seeded() {
    for kind in [DomainKind::Office, DomainKind::Elevator] {
        let a = build(kind, &uc(4, Likelihood::Decay75, 3)).unwrap();
        let b = build(kind, &uc(4, Likelihood::Decay75, 3)).unwrap();
        let c = build(kind, &uc(4, Likelihood::Decay75, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn grounding_is_deterministic() {
    let text = office_base().to_text();
    let a = portal_core::strips::ground(&parse_scenario(&text).unwrap());
    let b = portal_core::strips::ground(&parse_scenario(&text).unwrap());
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

/// Each eligible cell should be drawn as a candidate equally often.
#[test]
fn candidate_cells_are_uniformly_selected() {
    use portal_core::scenarios::assign_locations;
    use portal_core::rng::{stream, Stream};
    let spec = office_base();
    let cells: Vec<String> = ["hall-1", "hall-2", "hall-3", "hall-4", "hall-5", "hall-6"].map(String::from).to_vec();
    let eligible = [("cake", cells.clone())];
    let trials = 6000;
    let mut counts = vec![0usize; cells.len()];
    for seed in 0..trials {
        let out = assign_locations(&spec, &uc(2, Likelihood::Uniform, seed), &eligible, &mut stream(seed, Stream::Locations))
            .unwrap();
        for (c, _) in &out.uncertain_entity("cake").unwrap().candidates {
            counts[cells.iter().position(|x| x == c).unwrap()] += 1;
        }
    }
    let expected = (trials as f64) * 2.0 / cells.len() as f64;
    let chi2: f64 = counts.iter().map(|n| (*n as f64 - expected).powi(2) / expected).sum();
    // 5 degrees of freedom; 20.5 is the 0.999 quantile.
    assert!(chi2 < 20.5, "chi-square {chi2} for counts {counts:?}");
}
