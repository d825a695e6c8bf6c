use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use portal_core::bench::{
    run_episode_on, run_sweep, sort_records, write_results, Algorithm, EpisodeConfig, EpisodeOptions, ResultWriter,
    SweepConfig, DEFAULT_STEP_CAP,
};
use portal_core::planner::Planner;
use portal_core::pomdp::{most_probable_particle, sample_initial_particles, DEFAULT_PARTICLES};
use portal_core::portal::Budget;
use portal_core::rng::{stream, Stream};
use portal_core::scenarios::{build, DomainKind, Likelihood, UncertaintyConfig};
use portal_core::strips::Domain;

/// Anytime task planning under initial-location uncertainty.
#[derive(Parser)]
#[command(name = "portal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes for one configuration and print one CSV row per seed.
    Run(RunArgs),
    /// Run a parameter grid from a sweep file or a built-in preset.
    Sweep(SweepArgs),
    /// Print a generated scenario in the scenario file format.
    EmitScenario(EmitArgs),
}

#[derive(Args)]
struct UncertaintyArgs {
    /// Candidate locations per uncertain entity.
    #[arg(long, default_value_t = 2)]
    uncertainty_amount: usize,
    /// Probability shape over the candidate locations.
    #[arg(long, default_value = "uniform", value_parser = parse_likelihood)]
    likelihood: Likelihood,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_domain)]
    domain: DomainKind,
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    /// Wall-clock planning time per action.
    #[arg(long, conflicts_with = "budget_iters")]
    budget_secs: Option<f64>,
    /// Search iterations per action.
    #[arg(long)]
    budget_iters: Option<u64>,
    #[command(flatten)]
    uncertainty: UncertaintyArgs,
    #[arg(long, default_value_t = DEFAULT_PARTICLES)]
    particles: usize,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to run, starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: usize,
    /// Print the executed steps (tab-separated) to stderr.
    #[arg(long)]
    trace: bool,
    /// Write results CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print classical-planner node counts for the modal initial particle.
    #[arg(long)]
    planner_debug: bool,
    /// Write the search tree after the first decision to this file.
    #[arg(long)]
    dump_tree: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep file (see README for the format).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in grid: algorithm-comparison or time-comparison.
    #[arg(long)]
    preset: Option<String>,
    /// Override the seed list with 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long, value_parser = parse_domain)]
    domain: DomainKind,
    #[command(flatten)]
    uncertainty: UncertaintyArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_domain(s: &str) -> Result<DomainKind, String> {
    s.parse().map_err(|e: portal_core::scenarios::UnknownName| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: portal_core::scenarios::UnknownName| e.to_string())
}

fn parse_likelihood(s: &str) -> Result<Likelihood, String> {
    s.parse().map_err(|e: portal_core::scenarios::UnknownName| e.to_string())
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(args: RunArgs) -> Result<()> {
    let budget = match (args.budget_secs, args.budget_iters) {
        (Some(s), None) if s.is_finite() && s > 0.0 => Budget::Time(Duration::from_secs_f64(s)),
        (Some(_), None) => bail!("--budget-secs must be positive"),
        (None, Some(n)) => Budget::Iterations(n),
        (None, None) if args.algo == Algorithm::Ffreplan => Budget::Iterations(0),
        _ => bail!("one of --budget-secs or --budget-iters is required for {}", args.algo),
    };
    if args.step_cap == 0 {
        bail!("--step-cap must be at least 1");
    }
    let mut records = Vec::new();
    for seed in args.seed..args.seed + args.seeds {
        let cfg = EpisodeConfig {
            domain: args.domain,
            algorithm: args.algo,
            budget,
            amount: args.uncertainty.uncertainty_amount,
            likelihood: args.uncertainty.likelihood,
            particles: args.particles,
            step_cap: args.step_cap,
            seed,
        };
        let spec = build(cfg.domain, &cfg.uncertainty())?;
        spec.validate()?;
        let domain = Domain::new(&spec);
        if args.planner_debug {
            planner_debug(&domain, &cfg);
        }
        let options = EpisodeOptions { dump_tree: args.dump_tree.is_some(), ..Default::default() };
        let outcome = run_episode_on(&domain, &cfg, &options);
        if args.trace {
            eprintln!("# seed {seed}");
            for line in &outcome.trace {
                eprintln!("{line}");
            }
        }
        if let Some(failure) = &outcome.failure {
            eprintln!("seed {seed}: episode aborted: {failure}");
        }
        if let (Some(path), Some(dump)) = (&args.dump_tree, &outcome.tree_dump) {
            std::fs::write(path, dump).with_context(|| format!("writing {}", path.display()))?;
        }
        records.push(outcome.record);
    }
    write_results(&records, output(&args.out)?)?;
    Ok(())
}

fn planner_debug(domain: &Domain, cfg: &EpisodeConfig) {
    let belief = sample_initial_particles(domain, cfg.particles, &mut stream(cfg.seed, Stream::Particles));
    let Ok(particle) = most_probable_particle(&belief) else { return };
    let mut planner = Planner::new(domain);
    let result = planner.plan(&particle, domain.goal());
    let stats = planner.last_stats();
    match result {
        Ok(plan) => eprintln!(
            "planner: seed {} plan length {} expanded {} generated {}",
            cfg.seed,
            plan.len(),
            stats.expanded,
            stats.generated
        ),
        Err(e) => eprintln!("planner: seed {} {e} (expanded {} generated {})", cfg.seed, stats.expanded, stats.generated),
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.parse::<SweepConfig>().with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => SweepConfig::preset(name).with_context(|| format!("unknown preset `{name}`"))?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    if let Some(n) = args.seeds {
        config.seeds = (0..n).collect();
    }
    let episodes = config.episodes();
    eprintln!("running {} episodes", episodes.len());
    let mut writer = ResultWriter::new(output(&args.out)?)?;
    let mut io_error = None;
    let mut records = run_sweep(&episodes, args.workers, |outcome| {
        if let Some(failure) = &outcome.failure {
            eprintln!("{} {} seed {}: episode aborted: {failure}", outcome.record.domain, outcome.record.algo, outcome.record.seed);
        }
        if let Err(e) = writer.write(&outcome.record) {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    sort_records(&mut records);
    let solved = records.iter().filter(|r| r.goal).count();
    eprintln!("done: {solved}/{} episodes reached the goal", records.len());
    Ok(())
}

fn emit(args: EmitArgs) -> Result<()> {
    let uc = UncertaintyConfig {
        amount: args.uncertainty.uncertainty_amount,
        likelihood: args.uncertainty.likelihood,
        seed: args.seed,
    };
    let spec = build(args.domain, &uc)?;
    output(&args.out)?.write_all(spec.to_text().as_bytes())?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::EmitScenario(args) => emit(args),
    }
}
