use portal_core::bench::{
    read_results, run_episode, run_episode_on, run_sweep, write_results, Algorithm, EpisodeConfig, EpisodeOptions,
    SweepConfig, CSV_HEADER,
};
use portal_core::planner::Planner;
use portal_core::portal::Budget;
use portal_core::scenarios::{office_base, DomainKind, Likelihood};
use portal_core::strips::Domain;

#[test]
fn office_without_uncertainty_follows_the_classical_plan() {
    let domain = Domain::new(&office_base());
    let start = domain.world_with(&[]);
    let plan = Planner::new(&domain).plan(&start, domain.goal()).unwrap();
    for (algorithm, budget) in [(Algorithm::Ffreplan, Budget::Iterations(0)), (Algorithm::Portal, Budget::Iterations(50))] {
        let cfg = EpisodeConfig::new(DomainKind::Office, algorithm, budget, 0);
        let out = run_episode_on(&domain, &cfg, &EpisodeOptions::default());
        assert!(out.record.goal, "{algorithm}: {:?}", out.failure);
        assert_eq!(out.actions, plan.actions, "{algorithm}");
        if algorithm == Algorithm::Ffreplan {
            assert_eq!(out.record.plans_generated, 1);
        }
    }
}

#[test]
fn episodes_reach_the_goal_on_every_domain() {
    for domain in DomainKind::ALL {
        for algorithm in Algorithm::ALL {
            let mut cfg = EpisodeConfig::new(domain, algorithm, Budget::Iterations(100), 3);
            cfg.particles = 200;
            cfg.likelihood = Likelihood::Decay75;
            let out = run_episode(&cfg).unwrap();
            assert!(out.failure.is_none(), "{domain} {algorithm}: {:?}", out.failure);
            assert_eq!(out.trace.len(), out.record.steps);
            assert_eq!(out.actions.len(), out.record.steps);
            if out.record.goal {
                assert!(out.record.steps < cfg.step_cap);
            } else {
                assert_eq!(out.record.steps, cfg.step_cap, "{domain} {algorithm}");
            }
        }
    }
}

#[test]
fn results_survive_a_csv_round_trip() {
    let config: SweepConfig = "domains = micro\nalgos = portal, ffreplan, pomcp\nbudgets = 10, 20\nseeds = 0..3\nparticles = 100\n"
        .parse()
        .unwrap();
    let episodes = config.episodes();
    // FF-Replan ignores the budget, so it runs once per seed.
    assert_eq!(episodes.len(), 3 * 2 + 3 + 3 * 2);
    let mut streamed = 0;
    let records = run_sweep(&episodes, 2, |_| streamed += 1).unwrap();
    assert_eq!(streamed, episodes.len());
    let mut buf = Vec::new();
    write_results(&records, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(read_results(&buf[..]).unwrap(), records);
    assert!(records.iter().filter(|r| r.algo == "ffreplan").all(|r| r.budget == 0.0));
}

#[test]
fn presets_expand_to_the_documented_grids() {
    let algorithm = SweepConfig::preset("algorithm-comparison").unwrap();
    // 2 domains x (2 budgeted algorithms x 2 budgets + FF-Replan) x 5 amounts x 3 likelihoods x 50 seeds.
    assert_eq!(algorithm.episodes().len(), 2 * 5 * 5 * 3 * 50);
    let time = SweepConfig::preset("time-comparison").unwrap();
    assert_eq!(time.episodes().len(), 2 * 5 * 2 * 50);
    assert!(SweepConfig::preset("nope").is_none());
}

#[test]
fn the_true_world_depends_only_on_the_seed() {
    // In the micro domain the cup's cell shows up as the search that sees it.
    let domain = Domain::new(&portal_core::scenarios::build_fig1_micro());
    for seed in 0..10 {
        let found: Vec<String> = Algorithm::ALL
            .iter()
            .filter_map(|algorithm| {
                let mut cfg = EpisodeConfig::new(DomainKind::Micro, *algorithm, Budget::Iterations(200), seed);
                cfg.step_cap = 100;
                let out = run_episode_on(&domain, &cfg, &EpisodeOptions::default());
                assert!(out.record.goal || *algorithm == Algorithm::Pomcp);
                out.trace.iter().find(|t| t.observation == "percept{cup}").map(|t| t.action.clone())
            })
            .collect();
        assert!(found.len() >= 2);
        assert!(found.windows(2).all(|w| w[0] == w[1]), "seed {seed}: {found:?}");
    }
}
