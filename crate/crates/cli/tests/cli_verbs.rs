//! Exercises each CLI verb as a subprocess against a miniature run. The
//! acceptance suite owns the numeric claims; these checks pin the command
//! surface: artifact layout, defaults, validation errors, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use loi_core::allocator::allocate;
use loi_core::stats::{one_way_anova, t_test_one_tailed};
use loi_cli::pipeline::{EvalRecord, LoIRecord};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_loi-lab")
}

fn bench_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/bench.toml")
}

/// Runs the binary against the benchmark config with `--out` pointing at
/// `out`, at 1/2500 of the published step counts unless the caller says
/// otherwise. Panics only on spawn failure; callers inspect the Output.
fn loi_lab(out: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--config")
        .arg(bench_config())
        .arg("--seed")
        .arg("1")
        .arg("--scale")
        .arg("0.0004")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn loi-lab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Fixture {
    _dir: tempfile::TempDir,
    out: PathBuf,
}

/// One complete tiny run shared by the read-only checks. Tests that write
/// anywhere under the run root other than idempotent rewrites of their own
/// stage must copy it first.
fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let out = dir.path().join("run");
        let result = loi_lab(&out, &["run-all"]);
        assert!(
            result.status.success(),
            "fixture run-all failed: {}",
            stderr(&result)
        );
        Fixture { _dir: dir, out }
    })
}

fn copy_tree(src: &Path, dst: &Path) {
    std::fs::create_dir_all(dst).unwrap();
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_tree(&entry.path(), &to);
        } else {
            std::fs::copy(entry.path(), &to).unwrap();
        }
    }
}

#[test]
fn train_population_writes_one_pool_per_member() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result = loi_lab(
        &out,
        &["train", "--method", "pp:3", "--steps", "600", "--role", "pp3"],
    );
    assert!(result.status.success(), "{}", stderr(&result));
    let run_dir = out.join("pools/chicken/dense/pp3");
    assert!(stdout(&result).trim().ends_with("pools/chicken/dense/pp3"));
    for member in 0..3 {
        let pool = run_dir.join(format!("member-{member}/pool.json"));
        assert!(pool.is_file(), "missing {}", pool.display());
    }
    assert!(!run_dir.join("member-3").exists());
    assert!(run_dir.join("training.json").is_file());
}

#[test]
fn train_unknown_scenario_names_the_known_ones() {
    let dir = tempfile::tempdir().unwrap();
    let result = loi_lab(
        &dir.path().join("run"),
        &["train", "--scenario", "swamp", "--method", "sp"],
    );
    assert_eq!(result.status.code(), Some(2));
    let err = stderr(&result);
    assert!(err.contains("unknown scenario"), "{err}");
    assert!(err.contains("dense, sparse"), "{err}");
}

#[test]
fn missing_config_is_a_config_error() {
    let result = Command::new(bin())
        .args(["--config", "/nonexistent/experiment.toml", "run-all"])
        .output()
        .expect("spawn loi-lab");
    assert_eq!(result.status.code(), Some(2));
}

/// Rerunning the influence verb with default pools must reproduce the
/// pipeline's record byte for byte: same pools, same derived seed.
#[test]
fn loi_defaults_reproduce_the_pipeline_record() {
    let fx = fixture();
    let record_path = fx.out.join("loi/chicken/dense.json");
    let from_run_all = std::fs::read(&record_path).unwrap();
    let result = loi_lab(&fx.out, &["loi"]);
    assert!(result.status.success(), "{}", stderr(&result));
    assert!(stdout(&result).contains("mean"), "{}", stdout(&result));
    let rewritten = std::fs::read(&record_path).unwrap();
    assert_eq!(from_run_all, rewritten);
}

/// One co-player pool sampled at one checkpoint gives a single conditional,
/// so every influence sample is exactly zero.
#[test]
fn loi_single_conditional_is_zero() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let alice = fx.out.join("pools/chicken/dense/loi-alice-0");
    let bob = fx.out.join("pools/chicken/dense/loi-bob-0");
    let result = loi_lab(
        &out,
        &[
            "loi",
            "--alice",
            alice.to_str().unwrap(),
            "--bob",
            bob.to_str().unwrap(),
            "--bob-checkpoints",
            "1",
        ],
    );
    assert!(result.status.success(), "{}", stderr(&result));
    let text = std::fs::read_to_string(out.join("loi/chicken/dense.json")).unwrap();
    let record: LoIRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(record.bob_policies, 1);
    assert_eq!(record.bob_checkpoints, 1);
    assert_eq!(record.mean, 0.0);
    assert_eq!(record.std_dev, 0.0);
}

fn fake_record(scenario: &str, environment: &str, mean: f64) -> LoIRecord {
    LoIRecord {
        environment: String::from(environment),
        scenario: String::from(scenario),
        alice_policies: 1,
        bob_policies: 5,
        checkpoints_per_alice: 4,
        bob_checkpoints: 9,
        games_per_pair: 6,
        bin_width: 1.0,
        pool_bobs_across_policies: false,
        seed: 0,
        mean,
        std_dev: 0.0,
        samples: Vec::new(),
    }
}

#[test]
fn allocate_matches_the_library_plan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let dense = dir.path().join("dense.json");
    let sparse = dir.path().join("sparse.json");
    let scores = [(String::from("dense"), 1.3), (String::from("sparse"), 0.9)];
    for (path, (scenario, mean)) in [(&dense, &scores[0]), (&sparse, &scores[1])] {
        let text = serde_json::to_string(&fake_record(scenario, "chicken", *mean)).unwrap();
        std::fs::write(path, text).unwrap();
    }
    let result = loi_lab(
        &out,
        &[
            "allocate",
            "--loi",
            dense.to_str().unwrap(),
            sparse.to_str().unwrap(),
            "--base-unit",
            "1000",
        ],
    );
    assert!(result.status.success(), "{}", stderr(&result));

    let text = std::fs::read_to_string(out.join("allocation/chicken/plan.json")).unwrap();
    let plan: serde_json::Value = serde_json::from_str(&text).unwrap();
    let expected = allocate(&scores, 1000).unwrap();
    assert_eq!(plan["base_unit_steps"], 1000);
    assert_eq!(
        plan["heuristic"],
        serde_json::to_value(&expected).unwrap(),
        "CLI plan diverged from the library allocator"
    );
    assert_eq!(plan["uniform"]["total_steps"], 3 * 1000 * 2);
    assert!(stdout(&result).contains(&format!("total_steps {}", expected.total_steps)));
    assert!(out.join("allocation/chicken/plan.csv").is_file());
}

#[test]
fn allocate_rejects_thin_or_mixed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let dense = dir.path().join("dense.json");
    let other = dir.path().join("other.json");
    std::fs::write(
        &dense,
        serde_json::to_string(&fake_record("dense", "chicken", 1.3)).unwrap(),
    )
    .unwrap();
    std::fs::write(
        &other,
        serde_json::to_string(&fake_record("small", "stag_hunt", 1.0)).unwrap(),
    )
    .unwrap();

    let single = loi_lab(&out, &["allocate", "--loi", dense.to_str().unwrap()]);
    assert_eq!(single.status.code(), Some(3));
    assert!(stderr(&single).contains("at least 2"), "{}", stderr(&single));

    let mixed = loi_lab(
        &out,
        &[
            "allocate",
            "--loi",
            dense.to_str().unwrap(),
            other.to_str().unwrap(),
        ],
    );
    assert_eq!(mixed.status.code(), Some(3));
    assert!(
        stderr(&mixed).contains("mix environments"),
        "{}",
        stderr(&mixed)
    );
}

/// Sample count is |members| x |ladder rungs| x games for each candidate
/// method, and the baseline method normalizes to exactly 1.
#[test]
fn evaluate_explicit_candidates_report_shape() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let sp = fx.out.join("pools/chicken/dense/sp");
    let pp5 = fx.out.join("pools/chicken/dense/pp5");
    let bobs = fx.out.join("pools/chicken/dense/bobs-source");
    let result = loi_lab(
        &out,
        &[
            "evaluate",
            "--candidates",
            &format!("sp={}", sp.display()),
            &format!("pp5={}", pp5.display()),
            "--bobs",
            bobs.to_str().unwrap(),
            "--games",
            "2",
        ],
    );
    assert!(result.status.success(), "{}", stderr(&result));

    let text = std::fs::read_to_string(out.join("eval/chicken/dense/report.json")).unwrap();
    let record: EvalRecord = serde_json::from_str(&text).unwrap();
    // Ladder has one rung per configured fraction; sp brings 1 final
    // checkpoint, pp5 brings 5.
    assert_eq!(record.bob_steps.len(), 4);
    assert_eq!(record.games_per_pair, 2);
    assert_eq!(record.report.samples.len(), (1 + 5) * 4 * 2);
    assert_eq!(record.report.method_means.len(), 2);
    assert_eq!(record.report.normalized["sp"], 1.0);
    let csv = std::fs::read_to_string(out.join("eval/chicken/dense/samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + (1 + 5) * 4 * 2);
}

#[test]
fn stats_verb_agrees_with_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let groups = [
        ("sp", vec![1.0, 2.0, 3.0, 4.0]),
        ("pp3", vec![2.0, 3.0, 4.0, 5.0]),
        ("pp5", vec![8.0, 9.0, 10.0, 11.0]),
    ];
    let mut csv = String::from("scenario,method,reward\n");
    for (method, rewards) in &groups {
        for r in rewards {
            csv.push_str(&format!("dense,{method},{r}\n"));
        }
    }
    std::fs::write(&samples, csv).unwrap();
    let result = loi_lab(
        dir.path(),
        &["stats", "--report", samples.to_str().unwrap(), "--test", "anova"],
    );
    assert!(result.status.success(), "{}", stderr(&result));
    let out = stdout(&result);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("scenario,f_statistic,df_between,df_within,p_value")
    );
    let row: Vec<&str> = lines.next().expect("one result row").split(',').collect();
    let expected = one_way_anova(&[
        groups[0].1.clone(),
        groups[1].1.clone(),
        groups[2].1.clone(),
    ])
    .unwrap();
    assert_eq!(row[0], "dense");
    assert_eq!(row[1].parse::<f64>().unwrap(), expected.f_statistic);
    assert_eq!(row[2].parse::<f64>().unwrap(), expected.df_between);
    assert_eq!(row[3].parse::<f64>().unwrap(), expected.df_within);
    assert_eq!(row[4].parse::<f64>().unwrap(), expected.p_value);

    let plan_samples = dir.path().join("plan_samples.csv");
    let heuristic = [1.2, 1.4, 1.1, 1.5];
    let uniform = [1.0, 1.1, 0.9, 1.2];
    let mut csv = String::from("environment,plan,value\n");
    for v in &heuristic {
        csv.push_str(&format!("chicken,heuristic,{v}\n"));
    }
    for v in &uniform {
        csv.push_str(&format!("chicken,uniform,{v}\n"));
    }
    std::fs::write(&plan_samples, csv).unwrap();
    let result = loi_lab(
        dir.path(),
        &[
            "stats",
            "--report",
            plan_samples.to_str().unwrap(),
            "--test",
            "ttest",
        ],
    );
    assert!(result.status.success(), "{}", stderr(&result));
    let out = stdout(&result);
    let row: Vec<&str> = out.lines().nth(1).expect("one result row").split(',').collect();
    let expected = t_test_one_tailed(&heuristic, &uniform).unwrap();
    assert_eq!(row[0], "chicken");
    assert_eq!(row[1].parse::<f64>().unwrap(), expected.t_statistic);
    assert_eq!(row[3].parse::<f64>().unwrap(), expected.p_value);
}

#[test]
fn stats_rejects_a_table_missing_its_columns() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    std::fs::write(&samples, "plan,value\nheuristic,1.0\n").unwrap();
    let result = loi_lab(
        dir.path(),
        &["stats", "--report", samples.to_str().unwrap(), "--test", "anova"],
    );
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).contains("scenario"), "{}", stderr(&result));
}

/// Report accepts either the run directory or the manifest path, rewrites
/// identical tables on a clean rerun, and refuses a run whose recorded
/// artifacts are gone.
#[test]
fn report_rebuilds_then_detects_a_missing_stage() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("run");
    copy_tree(&fx.out, &copy);

    let table = copy.join("report/loi.csv");
    let before = std::fs::read(&table).unwrap();
    let manifest = copy.join("manifest.json");
    let result = loi_lab(&copy, &["report", "--run", manifest.to_str().unwrap()]);
    assert!(result.status.success(), "{}", stderr(&result));
    let line = stdout(&result);
    assert!(
        line.trim().ends_with("/report") && !line.contains("manifest.json/report"),
        "{line}"
    );
    assert_eq!(before, std::fs::read(&table).unwrap());

    std::fs::remove_file(copy.join("loi/chicken/sparse.json")).unwrap();
    let result = loi_lab(&copy, &["report", "--run", copy.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(3));
    let err = stderr(&result);
    assert!(
        err.contains("loi/chicken/sparse.json") && err.contains("missing"),
        "{err}"
    );
}
