//! Experiment runner: seeded episodes, parameter sweeps and CSV results.

mod results;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use results::*;
pub use sweep::*;

use crate::baselines::{DomainSimulator, FfReplan, Pomcp, PomcpConfig};
use crate::planner::Planner;
use crate::pomdp::{
    execute, recover_belief, sample_initial_particles, sample_world, Belief, History, Observation, TraceLine,
    DEFAULT_PARTICLES,
};
use crate::portal::{Budget, PortalConfig, PortalError, PortalSearch};
use crate::rng::{stream, Stream};
use crate::scenarios::{self, DomainKind, Likelihood, ScenarioError, UncertaintyConfig, UnknownName};
use crate::strips::{ActionId, Domain, WorldState};

pub const DEFAULT_STEP_CAP: usize = 600;
pub const DEFAULT_SEEDS: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Ffreplan,
    Pomcp,
    Portal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Ffreplan, Algorithm::Pomcp, Algorithm::Portal];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ffreplan => "ffreplan",
            Algorithm::Pomcp => "pomcp",
            Algorithm::Portal => "portal",
        }
    }

    /// FF-Replan plans without a time limit.
    pub fn uses_budget(self) -> bool {
        self != Algorithm::Ffreplan
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownName { what: "algorithm", value: s.to_owned() })
    }
}

/// `secs` or `iters`, as written to the results file.
pub fn budget_mode(budget: Budget) -> &'static str {
    match budget {
        Budget::Iterations(_) => "iters",
        Budget::Time(_) => "secs",
    }
}

pub fn budget_value(budget: Budget) -> f64 {
    match budget {
        Budget::Iterations(n) => n as f64,
        Budget::Time(d) => d.as_secs_f64(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    pub domain: DomainKind,
    pub algorithm: Algorithm,
    /// Per-step planning budget; ignored by FF-Replan.
    pub budget: Budget,
    pub amount: usize,
    pub likelihood: Likelihood,
    pub particles: usize,
    pub step_cap: usize,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(domain: DomainKind, algorithm: Algorithm, budget: Budget, seed: u64) -> Self {
        EpisodeConfig {
            domain,
            algorithm,
            budget,
            amount: 2,
            likelihood: Likelihood::Uniform,
            particles: DEFAULT_PARTICLES,
            step_cap: DEFAULT_STEP_CAP,
            seed,
        }
    }

    pub fn uncertainty(&self) -> UncertaintyConfig {
        UncertaintyConfig { amount: self.amount, likelihood: self.likelihood, seed: self.seed }
    }

    fn record(&self) -> ResultRecord {
        let budget = if self.algorithm.uses_budget() { budget_value(self.budget) } else { 0.0 };
        ResultRecord {
            domain: self.domain.name().to_owned(),
            algo: self.algorithm.name().to_owned(),
            budget_mode: budget_mode(self.budget).to_owned(),
            budget,
            amount: self.amount,
            likelihood: self.likelihood.name().to_owned(),
            particles: self.particles,
            seed: self.seed,
            steps: 0,
            goal: false,
            planning_secs: 0.0,
            plans_generated: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeOptions {
    /// Use this true world instead of sampling one.
    pub true_world: Option<WorldState>,
    /// Audit the POrTAL tree after every iteration.
    pub audit: bool,
    /// Capture the POrTAL tree right after the first decision.
    pub dump_tree: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub record: ResultRecord,
    pub actions: Vec<ActionId>,
    pub trace: Vec<TraceLine>,
    /// Why the episode was aborted, if it was.
    pub failure: Option<String>,
    /// Tree-audit violations (only with [`EpisodeOptions::audit`]).
    pub violations: Vec<String>,
    /// Tree snapshot (only with [`EpisodeOptions::dump_tree`]).
    pub tree_dump: Option<String>,
}

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] crate::strips::SemanticError),
}

pub fn build_domain(cfg: &EpisodeConfig) -> Result<Domain, EpisodeError> {
    let spec = scenarios::build(cfg.domain, &cfg.uncertainty())?;
    spec.validate()?;
    Ok(Domain::new(&spec))
}

/// Builds the configured scenario and runs one episode on it.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<EpisodeOutcome, EpisodeError> {
    let domain = build_domain(cfg)?;
    Ok(run_episode_on(&domain, cfg, &EpisodeOptions::default()))
}

/// Per-step decision maker.
enum Agent<'d> {
    Portal(PortalSearch<'d>),
    Pomcp(Box<Pomcp<DomainSimulator<'d>>>),
    Ffreplan(FfReplan<'d>),
}

/// Runs one episode on `domain`: sample the true world and the initial
/// particles, spend the startup budget, then plan, act and observe until the
/// goal holds or the step cap is reached.
pub fn run_episode_on(domain: &Domain, cfg: &EpisodeConfig, options: &EpisodeOptions) -> EpisodeOutcome {
    let mut outcome = EpisodeOutcome {
        record: cfg.record(),
        actions: Vec::new(),
        trace: Vec::new(),
        failure: None,
        violations: Vec::new(),
        tree_dump: None,
    };
    let mut state = match &options.true_world {
        Some(w) => w.clone(),
        None => sample_world(domain, &mut stream(cfg.seed, Stream::TrueWorld)),
    };
    let belief = sample_initial_particles(domain, cfg.particles, &mut stream(cfg.seed, Stream::Particles));
    let rng = stream(cfg.seed, Stream::Algorithm);
    let mut planning = Duration::ZERO;
    let mut agent = match cfg.algorithm {
        Algorithm::Portal => Agent::Portal(
            PortalSearch::new(domain, PortalConfig::default(), belief, rng).with_audit(options.audit),
        ),
        Algorithm::Pomcp => {
            let config = PomcpConfig::default();
            let sim = DomainSimulator::new(domain, &config);
            let lifted = sim.lift(&belief);
            Agent::Pomcp(Box::new(Pomcp::new(sim, config, lifted, rng)))
        }
        Algorithm::Ffreplan => Agent::Ffreplan(FfReplan::new(domain, belief)),
    };

    let startup = cfg.budget.scaled(PortalConfig::default().startup_multiplier);
    let clock = Instant::now();
    let started = match &mut agent {
        Agent::Portal(search) => search.run(startup).map_err(|e| e.to_string()),
        Agent::Pomcp(search) => {
            search.run(startup);
            Ok(())
        }
        Agent::Ffreplan(_) => Ok(()),
    };
    planning += clock.elapsed();
    if let Err(e) = started {
        outcome.failure = Some(e);
    }

    let mut history = History::new();
    let mut fallback = Planner::new(domain);
    while outcome.failure.is_none() && !domain.goal_satisfied(&state) && outcome.actions.len() < cfg.step_cap {
        let clock = Instant::now();
        let chosen = choose(&mut agent, cfg.budget, domain, &mut fallback);
        planning += clock.elapsed();
        if let (true, None, Agent::Portal(search)) = (options.dump_tree, &outcome.tree_dump, &agent) {
            outcome.tree_dump = Some(search.dump());
        }
        let action = match chosen {
            Ok(a) => a,
            Err(e) => {
                outcome.failure = Some(e);
                break;
            }
        };
        let (next, observation) = match execute(domain, &state, action) {
            Ok(step) => step,
            Err(e) => {
                outcome.failure = Some(format!("chosen action failed in the true world: {e}"));
                break;
            }
        };
        outcome.trace.push(TraceLine::new(domain, outcome.actions.len(), action, &observation));
        outcome.actions.push(action);
        history.push(action, observation.clone());
        state = next;
        if domain.goal_satisfied(&state) {
            break;
        }
        if let Err(e) = observe(&mut agent, domain, action, &observation, &history, cfg.particles) {
            outcome.failure = Some(e);
        }
    }

    if let Agent::Portal(search) = &agent {
        outcome.violations = search.violations().to_vec();
    }
    outcome.record.steps = outcome.actions.len();
    outcome.record.goal = domain.goal_satisfied(&state);
    outcome.record.planning_secs = planning.as_secs_f64();
    outcome.record.plans_generated = match &agent {
        Agent::Portal(search) => search.stats().plans_generated,
        Agent::Ffreplan(ff) => ff.plans_generated(),
        Agent::Pomcp(_) => 0,
    };
    outcome
}

fn choose(agent: &mut Agent<'_>, budget: Budget, domain: &Domain, fallback: &mut Planner<'_>) -> Result<ActionId, String> {
    match agent {
        Agent::Portal(search) => match search.search(budget) {
            Ok(a) => Ok(a),
            Err(PortalError::NoChildren) => fallback_action(domain, fallback, search.root_belief().iter().map(|(s, n)| (s, n))),
            Err(e) => Err(e.to_string()),
        },
        Agent::Pomcp(search) => match search.search(budget) {
            Some(a) => Ok(a),
            None => fallback_action(domain, fallback, search.root_belief().iter().map(|((s, _), n)| (s, n))),
        },
        Agent::Ffreplan(ff) => ff.next_action().map_err(|e| e.to_string()),
    }
}

/// First action of a plan for the most probable particle that has one.
fn fallback_action<'a>(
    domain: &Domain,
    planner: &mut Planner<'_>,
    particles: impl Iterator<Item = (&'a WorldState, u32)>,
) -> Result<ActionId, String> {
    let mut belief = Belief::new();
    for (s, n) in particles {
        belief.insert(s.clone(), n);
    }
    for (s, _) in belief.ranked() {
        if let Ok(plan) = planner.plan(s, domain.goal()) {
            if let Some(a) = plan.actions.first() {
                return Ok(*a);
            }
        }
    }
    Err("no particle admits a plan".to_owned())
}

fn observe(
    agent: &mut Agent<'_>,
    domain: &Domain,
    action: ActionId,
    observation: &Observation,
    history: &History,
    particles: usize,
) -> Result<(), String> {
    let recover = || recover_belief(domain, history, particles).map_err(|_| "belief could not be recovered".to_owned());
    match agent {
        Agent::Portal(search) => {
            if search.advance_root(action, observation).is_err() {
                search.reset_root(recover()?);
            }
        }
        Agent::Pomcp(search) => {
            if search.advance_root(action, observation).is_err() {
                let lifted = search.model().lift(&recover()?);
                search.reset_root(lifted);
            }
        }
        Agent::Ffreplan(ff) => {
            if ff.observe(action, observation).is_err() {
                ff.reset_belief(recover()?);
            }
        }
    }
    Ok(())
}
