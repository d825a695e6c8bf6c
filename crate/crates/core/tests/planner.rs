use portal_core::planner::{plan_bfs_oracle, Planner, DEFAULT_BFS_LIMIT};
use portal_core::scenarios::{build, random_small, DomainKind, Likelihood, UncertaintyConfig};
use portal_core::strips::Domain;

#[test]
fn greedy_plans_are_valid_and_no_shorter_than_optimal() {
    for seed in 0..60 {
        let domain = Domain::new(&random_small(seed, false));
        let start = domain.world_with(&[]);
        let optimal = plan_bfs_oracle(&domain, &start, domain.goal(), DEFAULT_BFS_LIMIT).unwrap();
        let plan = Planner::new(&domain).plan(&start, domain.goal()).unwrap();
        assert!(plan.validate(&domain, &start, domain.goal()), "seed {seed}");
        assert!(plan.len() >= optimal.len());
        assert!(optimal.validate(&domain, &start, domain.goal()));
    }
}

#[test]
fn every_initial_world_of_the_benchmarks_is_solvable() {
    for kind in [DomainKind::Office, DomainKind::Elevator] {
        let uc = UncertaintyConfig { amount: 3, likelihood: Likelihood::Uniform, seed: 5 };
        let domain = Domain::new(&build(kind, &uc).unwrap());
        let mut planner = Planner::new(&domain);
        for (world, _) in portal_core::pomdp::enumerate_worlds(&domain).into_iter().step_by(7) {
            let plan = planner.plan(&world, domain.goal()).unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert!(plan.validate(&domain, &world, domain.goal()));
        }
    }
}
