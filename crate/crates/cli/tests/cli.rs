use std::path::PathBuf;
use std::process::{Command, Output};

fn portal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portal")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const HEADER: &str = "domain,algo,budget_mode,budget,amount,likelihood,particles,seed,steps,goal,planning_secs,plans_generated";

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn run_prints_one_row_per_seed() {
    let out = portal(&[
        "run", "--domain", "micro", "--algo", "portal", "--budget-iters", "50", "--seeds", "3", "--particles", "100",
    ]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 4);
    for (i, line) in lines[1..].iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(&fields[..8], ["micro", "portal", "iters", "50.0", "2", "uniform", "100", &i.to_string()]);
        assert_eq!(fields[9], "true");
    }
}

#[test]
fn trace_goes_to_stderr_and_csv_to_file() {
    let path = scratch("trace.csv");
    let out = portal(&[
        "run", "--domain", "micro", "--algo", "ffreplan", "--seed", "4", "--trace", "--out", path.to_str().unwrap(),
    ]);
    assert!(stdout(&out).is_empty());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("# seed 4"));
    assert!(stderr.lines().any(|l| l.starts_with("0\tmove(living,hall-1)\tok\t1")));
    let csv = std::fs::read_to_string(path).unwrap();
    assert!(csv.starts_with(HEADER));
    assert!(csv.contains("micro,ffreplan,iters,0.0"));
}

#[test]
fn dump_tree_and_planner_debug() {
    let path = scratch("tree.txt");
    let out = portal(&[
        "run", "--domain", "micro", "--algo", "portal", "--budget-iters", "20", "--step-cap", "1", "--planner-debug",
        "--dump-tree", path.to_str().unwrap(),
    ]);
    stdout(&out);
    assert!(String::from_utf8(out.stderr).unwrap().contains("planner: seed 0 plan length 21"));
    let dump = std::fs::read_to_string(path).unwrap();
    assert!(dump.starts_with("root N="));
}

#[test]
fn sweep_from_a_config_file() {
    let config = scratch("tiny.sweep");
    std::fs::write(&config, "domains = micro\nalgos = ffreplan, pomcp\nbudgets = 20\nseeds = 0..2\nparticles = 50\n").unwrap();
    let out = portal(&["sweep", "--config", config.to_str().unwrap(), "--workers", "1"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(String::from_utf8(out.stderr).unwrap().contains("running 4 episodes"));
}

#[test]
fn emitted_scenarios_parse_back() {
    let out = portal(&["emit-scenario", "--domain", "elevator", "--uncertainty-amount", "3", "--likelihood", "decay50"]);
    let text = stdout(&out);
    assert!(text.contains("uncertain:"));
    assert!(text.contains("shaft-10"));
}

#[test]
fn bad_arguments_are_rejected() {
    for args in [
        &["run", "--domain", "moon", "--algo", "portal", "--budget-iters", "5"][..],
        &["run", "--domain", "micro", "--algo", "portal"],
        &["run", "--domain", "micro", "--algo", "pomcp", "--budget-secs", "1", "--budget-iters", "2"],
        &["run", "--domain", "micro", "--algo", "ffreplan", "--likelihood", "decay90"],
        &["sweep", "--preset", "nope"],
    ] {
        let out = portal(args);
        assert!(!out.status.success(), "{args:?} should fail");
    }
}
