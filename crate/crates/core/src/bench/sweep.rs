//! Sweep configuration files and the parallel sweep runner.
//!
//! A sweep file holds one `key = value, value, ...` line per axis; `#`
//! starts a comment. Keys:
//!
//! | key           | values                                   | default   |
//! |---------------|------------------------------------------|-----------|
//! | `domains`     | `office`, `elevator`, `micro`            | required  |
//! | `algos`       | `portal`, `pomcp`, `ffreplan`            | required  |
//! | `budget_mode` | `secs` or `iters`                        | `iters`   |
//! | `budgets`     | positive numbers (integers for `iters`)  | required* |
//! | `amounts`     | positive integers                        | `2`       |
//! | `likelihoods` | `uniform`, `decay75`, `decay50`          | `uniform` |
//! | `particles`   | one positive integer                     | `1000`    |
//! | `step_cap`    | one positive integer                     | `600`     |
//! | `seeds`       | `a..b` (half-open) or a list of integers | `0..50`   |
//!
//! (*) `budgets` may be omitted when the only algorithm is `ffreplan`.
//! FF-Replan ignores budgets and runs once per remaining combination.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use super::{run_episode, Algorithm, EpisodeConfig, EpisodeOutcome, ResultRecord, DEFAULT_SEEDS, DEFAULT_STEP_CAP};
use crate::pomdp::DEFAULT_PARTICLES;
use crate::portal::Budget;
use crate::scenarios::{DomainKind, Likelihood};

pub const ALGORITHM_COMPARISON: &str = include_str!("../../data/sweeps/algorithm-comparison.sweep");
pub const TIME_COMPARISON: &str = include_str!("../../data/sweeps/time-comparison.sweep");

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SweepConfigError {
    #[error("line {line}: expected `key = values`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: `{key}` needs at least one value")]
    Empty { line: usize, key: String },
    #[error("missing required key `{key}`")]
    Missing { key: &'static str },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BudgetMode {
    Secs,
    Iters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub domains: Vec<DomainKind>,
    pub algorithms: Vec<Algorithm>,
    pub budget_mode: BudgetMode,
    pub budgets: Vec<f64>,
    pub amounts: Vec<usize>,
    pub likelihoods: Vec<Likelihood>,
    pub particles: usize,
    pub step_cap: usize,
    pub seeds: Vec<u64>,
}

const KEYS: [&str; 9] =
    ["domains", "algos", "budget_mode", "budgets", "amounts", "likelihoods", "particles", "step_cap", "seeds"];

fn parse_list<T>(line: usize, key: &str, values: &[&str], parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, SweepConfigError> {
    values
        .iter()
        .map(|v| parse(v).ok_or_else(|| SweepConfigError::BadValue { line, key: key.to_owned(), value: (*v).to_owned() }))
        .collect()
}

fn parse_single<T>(line: usize, key: &str, values: &[&str], parse: impl Fn(&str) -> Option<T>) -> Result<T, SweepConfigError> {
    match values {
        [v] => parse(v).ok_or_else(|| SweepConfigError::BadValue { line, key: key.to_owned(), value: (*v).to_owned() }),
        _ => Err(SweepConfigError::BadValue { line, key: key.to_owned(), value: values.join(", ") }),
    }
}

fn positive_usize(v: &str) -> Option<usize> {
    v.parse().ok().filter(|n| *n > 0)
}

fn parse_seeds(line: usize, values: &[&str]) -> Result<Vec<u64>, SweepConfigError> {
    let bad = |v: &str| SweepConfigError::BadValue { line, key: "seeds".into(), value: v.to_owned() };
    if let [v] = values {
        if let Some((a, b)) = v.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad(v))?;
            let b: u64 = b.trim().parse().map_err(|_| bad(v))?;
            if a > b {
                return Err(bad(v));
            }
            return Ok((a..b).collect());
        }
    }
    parse_list(line, "seeds", values, |v| v.parse().ok())
}

impl FromStr for SweepConfig {
    type Err = SweepConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut config = SweepConfig {
            domains: Vec::new(),
            algorithms: Vec::new(),
            budget_mode: BudgetMode::Iters,
            budgets: Vec::new(),
            amounts: vec![2],
            likelihoods: vec![Likelihood::Uniform],
            particles: DEFAULT_PARTICLES,
            step_cap: DEFAULT_STEP_CAP,
            seeds: (0..DEFAULT_SEEDS).collect(),
        };
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, rest) = content.split_once('=').ok_or(SweepConfigError::Syntax { line })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(SweepConfigError::UnknownKey { line, key: key.to_owned() });
            }
            if !seen.insert(key.to_owned()) {
                return Err(SweepConfigError::DuplicateKey { line, key: key.to_owned() });
            }
            let values: Vec<&str> = rest.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
            if values.is_empty() && key != "seeds" {
                return Err(SweepConfigError::Empty { line, key: key.to_owned() });
            }
            match key {
                "domains" => config.domains = parse_list(line, key, &values, |v| v.parse().ok())?,
                "algos" => config.algorithms = parse_list(line, key, &values, |v| v.parse().ok())?,
                "budget_mode" => {
                    config.budget_mode = parse_single(line, key, &values, |v| match v {
                        "secs" => Some(BudgetMode::Secs),
                        "iters" => Some(BudgetMode::Iters),
                        _ => None,
                    })?
                }
                "budgets" => {
                    config.budgets = parse_list(line, key, &values, |v| {
                        v.parse::<f64>().ok().filter(|b| b.is_finite() && *b > 0.0 && *b <= 1e9)
                    })?
                }
                "amounts" => config.amounts = parse_list(line, key, &values, positive_usize)?,
                "likelihoods" => config.likelihoods = parse_list(line, key, &values, |v| v.parse().ok())?,
                "particles" => config.particles = parse_single(line, key, &values, positive_usize)?,
                "step_cap" => config.step_cap = parse_single(line, key, &values, positive_usize)?,
                "seeds" => config.seeds = parse_seeds(line, &values)?,
                _ => unreachable!("key checked above"),
            }
        }
        if config.domains.is_empty() {
            return Err(SweepConfigError::Missing { key: "domains" });
        }
        if config.algorithms.is_empty() {
            return Err(SweepConfigError::Missing { key: "algos" });
        }
        if config.budgets.is_empty() && config.algorithms.iter().any(|a| a.uses_budget()) {
            return Err(SweepConfigError::Missing { key: "budgets" });
        }
        if config.budget_mode == BudgetMode::Iters {
            if let Some(b) = config.budgets.iter().find(|b| b.fract() != 0.0) {
                return Err(SweepConfigError::BadValue { line: 0, key: "budgets".into(), value: b.to_string() });
            }
        }
        Ok(config)
    }
}

impl SweepConfig {
    /// Built-in presets: `algorithm-comparison` and `time-comparison`.
    pub fn preset(name: &str) -> Option<SweepConfig> {
        let text = match name {
            "algorithm-comparison" => ALGORITHM_COMPARISON,
            "time-comparison" => TIME_COMPARISON,
            _ => return None,
        };
        Some(text.parse().expect("presets are valid"))
    }

    fn budget(&self, value: f64) -> Budget {
        match self.budget_mode {
            BudgetMode::Iters => Budget::Iterations(value as u64),
            BudgetMode::Secs => Budget::Time(Duration::from_secs_f64(value)),
        }
    }

    /// Every episode of the grid, in configuration order then seed order.
    pub fn episodes(&self) -> Vec<EpisodeConfig> {
        let mut out = Vec::new();
        for &domain in &self.domains {
            for &algorithm in &self.algorithms {
                let budgets: Vec<Budget> = if algorithm.uses_budget() {
                    self.budgets.iter().map(|b| self.budget(*b)).collect()
                } else {
                    vec![self.budget(0.0)]
                };
                for &budget in &budgets {
                    for &amount in &self.amounts {
                        for &likelihood in &self.likelihoods {
                            for &seed in &self.seeds {
                                out.push(EpisodeConfig {
                                    domain,
                                    algorithm,
                                    budget,
                                    amount,
                                    likelihood,
                                    particles: self.particles,
                                    step_cap: self.step_cap,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs every episode on a pool of `workers` threads (0 = one per core).
/// `sink` sees each outcome as it completes, from the calling thread.
/// Returns the records sorted by configuration and seed. Episodes whose
/// scenario cannot be built are reported as failed records.
pub fn run_sweep(
    episodes: &[EpisodeConfig],
    workers: usize,
    mut sink: impl FnMut(&EpisodeOutcome),
) -> Result<Vec<ResultRecord>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let (tx, rx) = mpsc::channel();
    let mut records = Vec::with_capacity(episodes.len());
    std::thread::scope(|scope| {
        scope.spawn(move || {
            pool.install(|| {
                episodes.par_iter().for_each_with(tx, |tx, cfg| {
                    let outcome = run_episode(cfg).unwrap_or_else(|e| EpisodeOutcome {
                        record: cfg.record(),
                        actions: Vec::new(),
                        trace: Vec::new(),
                        failure: Some(e.to_string()),
                        violations: Vec::new(),
                        tree_dump: None,
                    });
                    let _ = tx.send(outcome);
                });
            });
        });
        for outcome in rx {
            sink(&outcome);
            records.push(outcome.record);
        }
    });
    super::sort_records(&mut records);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg: SweepConfig = "
            # comment
            domains = office, elevator
            algos = portal, ffreplan   # trailing
            budget_mode = secs
            budgets = 4, 16
            amounts = 2, 4
            likelihoods = decay50
            particles = 500
            step_cap = 100
            seeds = 3..6
        "
        .parse()
        .unwrap();
        assert_eq!(cfg.domains, vec![DomainKind::Office, DomainKind::Elevator]);
        assert_eq!(cfg.seeds, vec![3, 4, 5]);
        assert_eq!(cfg.budget_mode, BudgetMode::Secs);
        // 2 domains x (portal x 2 budgets + ffreplan) x 2 amounts x 1 x 3 seeds
        assert_eq!(cfg.episodes().len(), 2 * 3 * 2 * 3);
    }

    #[test]
    fn presets_have_paper_shape() {
        let ac = SweepConfig::preset("algorithm-comparison").unwrap();
        let per_seed = ac.episodes().len() / ac.seeds.len();
        assert_eq!(per_seed, 2 * 5 * 5 * 3);
        let tc = SweepConfig::preset("time-comparison").unwrap();
        assert_eq!(tc.budgets, vec![2.0, 4.0, 8.0, 16.0, 32.0]);
        assert_eq!(tc.amounts, vec![4, 8]);
        assert!(SweepConfig::preset("nope").is_none());
    }

    #[test]
    fn empty_seed_list_gives_no_episodes() {
        let cfg: SweepConfig = "domains = micro\nalgos = ffreplan\nseeds =".parse().unwrap();
        assert!(cfg.episodes().is_empty());
        assert!(run_sweep(&cfg.episodes(), 1, |_| {}).unwrap().is_empty());
    }

    #[test]
    fn errors() {
        assert_eq!("domains office".parse::<SweepConfig>(), Err(SweepConfigError::Syntax { line: 1 }));
        assert!(matches!("colour = red".parse::<SweepConfig>(), Err(SweepConfigError::UnknownKey { .. })));
        assert!(matches!(
            "domains = micro\ndomains = office".parse::<SweepConfig>(),
            Err(SweepConfigError::DuplicateKey { line: 2, .. })
        ));
        assert!(matches!("domains = mars".parse::<SweepConfig>(), Err(SweepConfigError::BadValue { .. })));
        assert_eq!("algos = portal".parse::<SweepConfig>(), Err(SweepConfigError::Missing { key: "domains" }));
        assert_eq!(
            "domains = micro\nalgos = portal".parse::<SweepConfig>(),
            Err(SweepConfigError::Missing { key: "budgets" })
        );
        assert!(matches!(
            "domains = micro\nalgos = portal\nbudgets = 1.5".parse::<SweepConfig>(),
            Err(SweepConfigError::BadValue { .. })
        ));
        assert!(matches!("domains = micro\nalgos = ffreplan\nseeds = 5..2".parse::<SweepConfig>(), Err(_)));
    }

    #[test]
    fn sweep_runs_and_sorts() {
        let cfg: SweepConfig = "domains = micro\nalgos = ffreplan, portal\nbudgets = 50\nseeds = 0..4".parse().unwrap();
        let mut seen = 0;
        let records = run_sweep(&cfg.episodes(), 2, |_| seen += 1).unwrap();
        assert_eq!(seen, 8);
        assert_eq!(records.len(), 8);
        assert_eq!(records[0].algo, "ffreplan");
        assert_eq!(records.iter().map(|r| r.seed).take(4).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!(records.iter().all(|r| r.goal));
    }

    proptest::proptest! {
        #[test]
        fn parser_never_panics(text in "[a-z_=,.# 0-9\n]{0,200}") {
            let _ = text.parse::<SweepConfig>();
        }

        #[test]
        fn seed_ranges_expand_exactly(a in 0u64..1000, n in 0u64..50) {
            let text = format!("domains = micro\nalgos = ffreplan\nseeds = {a}..{}\n", a + n);
            let cfg: SweepConfig = text.parse().unwrap();
            proptest::prop_assert_eq!(&cfg.seeds, &(a..a + n).collect::<Vec<_>>());
            proptest::prop_assert_eq!(cfg.episodes().len() as u64, n);
        }
    }
}
