//! Pipeline stages behind the CLI verbs. Every stage derives its seed from
//! the root seed through a labelled path (stage/environment/scenario plus
//! run indices), writes its artifacts through the store, and records them
//! in the run manifest. Independent cells fan out across the rayon pool;
//! artifacts are written by the coordinator in declaration order so equal
//! configurations produce byte-identical output trees.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use loi_core::allocator::{allocate, AllocationPlan, Assignment, Method};
use loi_core::eval::{
    build_fixed_bobs, fixed_bobs_eval, EvalConfig, EvaluationReport, BASELINE_METHOD,
};
use loi_core::game::payoff::PayoffMode;
use loi_core::loi::{estimate_loi, loi_variance_study, LoIParams, LoISample, VarianceStudyRow};
use loi_core::pool::{Checkpoint, CheckpointPool};
use loi_core::rng;
use loi_core::stats::{one_way_anova, t_test_one_tailed};
use loi_core::trainer::{train, ExchangeEvent, TrainingConfig, TrainingReport};

use crate::config::Experiment;
use crate::manifest::RunManifest;
use crate::store::{self, Artifact, Store};
use crate::CliError;

/// Maps a method argument to its run role and population size.
/// `pp:<p>` trains an ad-hoc population; `pp3`/`pp5` are its fixed forms.
pub fn parse_method(arg: &str) -> Result<(String, usize), CliError> {
    match arg {
        "sp" => return Ok((String::from("sp"), 1)),
        "pp3" => return Ok((String::from("pp3"), 3)),
        "pp5" => return Ok((String::from("pp5"), 5)),
        _ => {}
    }
    if let Some(rest) = arg.strip_prefix("pp:") {
        match rest.parse::<usize>() {
            Ok(p) if p >= 1 => return Ok((format!("pp{p}"), p)),
            _ => {}
        }
    }
    Err(CliError::Config(format!(
        "unknown method {arg:?}; expected sp, pp3, pp5, or pp:<p>"
    )))
}

/// Splits a run role into its seed label and run indices. Indexed roles
/// (`loi-alice-{i}`, `loi-bob-{j}`) share one label per family; the first
/// ego run uses the bare stage seed, every other run appends its index.
fn role_seed_parts(role: &str) -> (String, Vec<u64>) {
    if let Some(i) = role
        .strip_prefix("loi-alice-")
        .and_then(|s| s.parse::<u64>().ok())
    {
        let index = if i == 0 { Vec::new() } else { vec![i] };
        return (String::from("loi-alice"), index);
    }
    if let Some(j) = role
        .strip_prefix("loi-bob-")
        .and_then(|s| s.parse::<u64>().ok())
    {
        return (String::from("loi-bob"), vec![j]);
    }
    (String::from(role), Vec::new())
}

pub fn train_seed(root: u64, environment: &str, scenario: &str, role: &str) -> u64 {
    let (label, index) = role_seed_parts(role);
    rng::derive(root, &format!("train/{environment}/{scenario}/{label}"), &index)
}

pub fn loi_seed(root: u64, environment: &str, scenario: &str) -> u64 {
    rng::derive(root, &format!("loi/{environment}/{scenario}"), &[])
}

pub fn eval_seed(root: u64, environment: &str, scenario: &str) -> u64 {
    rng::derive(root, &format!("eval/{environment}/{scenario}"), &[])
}

pub fn study_seed(root: u64, environment: &str, scenario: &str) -> u64 {
    rng::derive(root, &format!("study/{environment}/{scenario}"), &[])
}

/// Companion record written next to a run's pool directories.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub environment: String,
    pub scenario: String,
    pub role: String,
    pub population_size: usize,
    pub total_steps: u64,
    pub save_interval: u64,
    pub seed: u64,
    pub wall_steps: u64,
    pub reward_curve: Vec<f64>,
    pub exchange_log: Vec<ExchangeEvent>,
}

fn default_role_steps(exp: &Experiment, role: &str) -> u64 {
    let raw = &exp.raw;
    if role.starts_with("loi-alice") || role.starts_with("loi-bob") {
        exp.scaled(raw.loi.pool_steps)
    } else if role == "bobs-source" {
        exp.scaled(raw.evaluation.source_steps)
    } else {
        exp.scaled(raw.training.total_steps)
    }
}

fn run_training(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    role: &str,
    population: usize,
    total_steps: u64,
) -> Result<(TrainingConfig, TrainingReport), CliError> {
    let payoff = exp.environment(environment)?;
    let map = exp.scenario(scenario)?;
    let config = TrainingConfig {
        scenario_id: String::from(scenario),
        environment_id: String::from(environment),
        total_steps,
        save_interval: exp.save_interval(total_steps),
        population_size: population,
        seed: train_seed(exp.seed, environment, scenario, role),
        discount_factor: exp.raw.training.discount_factor,
        learner: exp.raw.training.knobs(),
    };
    let report = train(&config, map, payoff, PayoffMode::Mixed)?;
    Ok((config, report))
}

fn save_training(
    store: &Store,
    environment: &str,
    scenario: &str,
    role: &str,
    config: &TrainingConfig,
    report: &TrainingReport,
) -> Result<(String, Vec<Artifact>), CliError> {
    let dir = store::run_dir(environment, scenario, role);
    let mut artifacts = store::save_pools(store, &dir, &report.pools)?;
    let summary = TrainingSummary {
        environment: String::from(environment),
        scenario: String::from(scenario),
        role: String::from(role),
        population_size: config.population_size,
        total_steps: config.total_steps,
        save_interval: config.save_interval,
        seed: config.seed,
        wall_steps: report.wall_steps,
        reward_curve: report.reward_curve.clone(),
        exchange_log: report.exchange_log.clone(),
    };
    artifacts.push(store.write_json(&format!("{dir}/training.json"), &summary)?);
    Ok((dir, artifacts))
}

/// Trains one run and writes its pool directories plus training summary.
/// Returns the run directory relative to the output root.
pub fn cmd_train(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    method: &str,
    steps: Option<u64>,
    role: Option<&str>,
) -> Result<String, CliError> {
    let (method_role, population) = parse_method(method)?;
    let role = role.map(String::from).unwrap_or(method_role);
    let total = steps.unwrap_or_else(|| default_role_steps(exp, &role));
    let (config, report) = run_training(exp, environment, scenario, &role, population, total)?;
    let store = Store::new(&exp.output_dir);
    let (dir, artifacts) = save_training(&store, environment, scenario, &role, &config, &report)?;
    let mut manifest = RunManifest::load_or_new(&store, exp);
    manifest.record(&format!("train/{environment}/{scenario}/{role}"), artifacts);
    manifest.save(&store)?;
    Ok(dir)
}

fn loi_params(exp: &Experiment, bob_checkpoints: usize) -> LoIParams {
    LoIParams {
        checkpoints_per_alice: exp.raw.loi.checkpoints_per_alice,
        bob_checkpoints,
        games_per_pair: exp.raw.loi.games_per_pair,
        bin_width: exp.raw.loi.bin_width,
        discount_factor: exp.raw.training.discount_factor,
        pool_bobs_across_policies: exp.raw.loi.pool_bobs_across_policies,
    }
}

/// One influence estimate with its full parameterization echoed, so the
/// file alone is enough to rerun the measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoIRecord {
    pub environment: String,
    pub scenario: String,
    pub alice_policies: usize,
    pub bob_policies: usize,
    pub checkpoints_per_alice: usize,
    pub bob_checkpoints: usize,
    pub games_per_pair: usize,
    pub bin_width: f64,
    pub pool_bobs_across_policies: bool,
    pub seed: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub samples: Vec<LoISample>,
}

fn estimate_cell(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    alice_pools: &[CheckpointPool],
    bob_pools: &[CheckpointPool],
    bob_checkpoints: usize,
) -> Result<LoIRecord, CliError> {
    let payoff = exp.environment(environment)?;
    let map = exp.scenario(scenario)?;
    let params = loi_params(exp, bob_checkpoints);
    let seed = loi_seed(exp.seed, environment, scenario);
    let estimate = estimate_loi(
        alice_pools,
        bob_pools,
        map,
        payoff,
        PayoffMode::Mixed,
        &params,
        seed,
    )?;
    Ok(LoIRecord {
        environment: String::from(environment),
        scenario: String::from(scenario),
        alice_policies: alice_pools.len(),
        bob_policies: bob_pools.len(),
        checkpoints_per_alice: params.checkpoints_per_alice,
        bob_checkpoints: params.bob_checkpoints,
        games_per_pair: params.games_per_pair,
        bin_width: params.bin_width,
        pool_bobs_across_policies: params.pool_bobs_across_policies,
        seed,
        mean: estimate.mean,
        std_dev: estimate.std_dev,
        samples: estimate.samples,
    })
}

pub fn loi_record_path(environment: &str, scenario: &str) -> String {
    format!("loi/{environment}/{scenario}.json")
}

fn load_default_pools(
    store: &Store,
    environment: &str,
    scenario: &str,
    family: &str,
    count: usize,
) -> Result<Vec<CheckpointPool>, CliError> {
    let mut pools = Vec::with_capacity(count);
    for i in 0..count {
        let dir = store::run_dir(environment, scenario, &format!("{family}-{i}"));
        let mut loaded = store::load_pools(store, &dir).map_err(|e| {
            CliError::Data(format!(
                "{e}; train the {family} pools first (loi-lab run-all) or pass them explicitly"
            ))
        })?;
        pools.append(&mut loaded);
    }
    Ok(pools)
}

/// Estimates the level of influence for one environment/scenario cell and
/// writes the record JSON. Pool paths default to the run directories the
/// pipeline trains; explicit paths override them.
pub fn cmd_loi(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    alice_paths: &[std::path::PathBuf],
    bob_paths: &[std::path::PathBuf],
    bob_checkpoints: Option<usize>,
) -> Result<(String, LoIRecord), CliError> {
    let store = Store::new(&exp.output_dir);
    let alice_pools = if alice_paths.is_empty() {
        load_default_pools(
            &store,
            environment,
            scenario,
            "loi-alice",
            exp.raw.loi.alice_policies,
        )?
    } else {
        let mut pools = Vec::new();
        for p in alice_paths {
            pools.append(&mut store::read_pools_path(p)?);
        }
        pools
    };
    let bob_pools = if bob_paths.is_empty() {
        load_default_pools(
            &store,
            environment,
            scenario,
            "loi-bob",
            exp.raw.loi.bob_policies,
        )?
    } else {
        let mut pools = Vec::new();
        for p in bob_paths {
            pools.append(&mut store::read_pools_path(p)?);
        }
        pools
    };
    let n = bob_checkpoints.unwrap_or(exp.raw.loi.bob_checkpoints);
    let record = estimate_cell(exp, environment, scenario, &alice_pools, &bob_pools, n)?;
    let rel = loi_record_path(environment, scenario);
    let artifact = store.write_json(&rel, &record)?;
    let mut manifest = RunManifest::load_or_new(&store, exp);
    manifest.record(&format!("loi/{environment}/{scenario}"), vec![artifact]);
    manifest.save(&store)?;
    Ok((rel, record))
}

/// The all-middle-tier control the heuristic is compared against. It does
/// no thresholding, so it carries no threshold metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniformControl {
    pub assignments: Vec<Assignment>,
    pub total_steps: u64,
}

pub fn uniform_control(scores: &[(String, f64)], base_unit: u64) -> UniformControl {
    let assignments: Vec<Assignment> = scores
        .iter()
        .map(|(scenario, loi)| Assignment {
            scenario: scenario.clone(),
            loi: *loi,
            method: Method::Pp3,
            steps: 3 * base_unit,
        })
        .collect();
    UniformControl {
        total_steps: 3 * base_unit * scores.len() as u64,
        assignments,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub environment: String,
    /// Steps behind one budget unit after scaling.
    pub base_unit_steps: u64,
    pub heuristic: AllocationPlan,
    pub uniform: UniformControl,
}

fn allocation_csv(record: &AllocationRecord) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec!["plan", "scenario", "loi", "method", "steps"];
    let mut rows = Vec::new();
    for a in &record.heuristic.assignments {
        rows.push(vec![
            String::from("heuristic"),
            a.scenario.clone(),
            a.loi.to_string(),
            a.method.name().to_string(),
            a.steps.to_string(),
        ]);
    }
    for a in &record.uniform.assignments {
        rows.push(vec![
            String::from("uniform"),
            a.scenario.clone(),
            a.loi.to_string(),
            a.method.name().to_string(),
            a.steps.to_string(),
        ]);
    }
    (header, rows)
}

fn build_allocation(
    environment: &str,
    scores: &[(String, f64)],
    base_unit: u64,
) -> Result<AllocationRecord, CliError> {
    let heuristic = allocate(scores, base_unit)?;
    Ok(AllocationRecord {
        environment: String::from(environment),
        base_unit_steps: base_unit,
        uniform: uniform_control(scores, base_unit),
        heuristic,
    })
}

fn save_allocation(
    store: &Store,
    record: &AllocationRecord,
) -> Result<Vec<Artifact>, CliError> {
    let dir = format!("allocation/{}", record.environment);
    let json = store.write_json(&format!("{dir}/plan.json"), record)?;
    let (header, rows) = allocation_csv(record);
    let csv = store.write_csv(&format!("{dir}/plan.csv"), &header, &rows)?;
    Ok(vec![json, csv])
}

/// Builds heuristic and uniform budget plans from influence record files.
/// Scenario order follows the argument order; it decides tie-breaks.
pub fn cmd_allocate(
    exp: &Experiment,
    loi_files: &[std::path::PathBuf],
    base_unit: Option<u64>,
) -> Result<(String, AllocationRecord), CliError> {
    if loi_files.len() < 2 {
        return Err(CliError::Data(format!(
            "allocation needs at least 2 influence records, got {}",
            loi_files.len()
        )));
    }
    let mut environment: Option<String> = None;
    let mut scores: Vec<(String, f64)> = Vec::new();
    for path in loi_files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let record: LoIRecord = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("cannot parse {}: {e}", path.display())))?;
        match &environment {
            None => environment = Some(record.environment.clone()),
            Some(env) if *env != record.environment => {
                return Err(CliError::Data(format!(
                    "influence records mix environments {:?} and {:?}",
                    env, record.environment
                )));
            }
            Some(_) => {}
        }
        scores.push((record.scenario, record.mean));
    }
    let environment = environment.expect("at least two records");
    let base = base_unit.unwrap_or_else(|| exp.scaled(exp.raw.allocation.base_unit));
    let record = build_allocation(&environment, &scores, base)?;
    let store = Store::new(&exp.output_dir);
    let artifacts = save_allocation(&store, &record)?;
    let rel = artifacts[0].path.clone();
    let mut manifest = RunManifest::load_or_new(&store, exp);
    manifest.record(&format!("allocate/{environment}"), artifacts);
    manifest.save(&store)?;
    Ok((rel, record))
}

/// One evaluation cell with its co-player ladder spelled out.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalRecord {
    pub environment: String,
    pub scenario: String,
    pub seed: u64,
    pub games_per_pair: usize,
    pub bob_source_run: String,
    pub bob_steps: Vec<u64>,
    pub report: EvaluationReport,
}

fn last_checkpoints(pools: &[CheckpointPool]) -> Result<Vec<Checkpoint>, CliError> {
    pools
        .iter()
        .map(|p| {
            p.checkpoints
                .last()
                .cloned()
                .ok_or_else(|| CliError::Data(format!("run {} saved no checkpoints", p.run_id)))
        })
        .collect()
}

fn eval_cell(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    candidates: &BTreeMap<String, Vec<Checkpoint>>,
    source_pool: &CheckpointPool,
    games_per_pair: usize,
) -> Result<EvalRecord, CliError> {
    let payoff = exp.environment(environment)?;
    let map = exp.scenario(scenario)?;
    let bobs = build_fixed_bobs(source_pool, &exp.raw.evaluation.fractions)?;
    let config = EvalConfig {
        games_per_pair,
        discount_factor: exp.raw.training.discount_factor,
        normalize: true,
    };
    let seed = eval_seed(exp.seed, environment, scenario);
    let report = fixed_bobs_eval(candidates, &bobs, map, payoff, PayoffMode::Mixed, &config, seed)?;
    Ok(EvalRecord {
        environment: String::from(environment),
        scenario: String::from(scenario),
        seed,
        games_per_pair,
        bob_source_run: bobs.source_run.clone(),
        bob_steps: bobs.checkpoints.iter().map(|c| c.step_index).collect(),
        report,
    })
}

pub fn eval_record_path(environment: &str, scenario: &str) -> String {
    format!("eval/{environment}/{scenario}/report.json")
}

fn eval_samples_csv(record: &EvalRecord) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "environment",
        "scenario",
        "method",
        "candidate",
        "bob",
        "game",
        "reward",
    ];
    let rows = record
        .report
        .samples
        .iter()
        .map(|s| {
            vec![
                record.environment.clone(),
                record.scenario.clone(),
                s.method.clone(),
                s.candidate.to_string(),
                s.bob.to_string(),
                s.game.to_string(),
                s.reward.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

fn save_eval(store: &Store, record: &EvalRecord) -> Result<Vec<Artifact>, CliError> {
    let dir = format!("eval/{}/{}", record.environment, record.scenario);
    let json = store.write_json(&format!("{dir}/report.json"), record)?;
    let (header, rows) = eval_samples_csv(record);
    let csv = store.write_csv(&format!("{dir}/samples.csv"), &header, &rows)?;
    Ok(vec![json, csv])
}

const EVAL_METHODS: [&str; 3] = ["sp", "pp3", "pp5"];

/// Runs the fixed co-player evaluation for one cell. Candidate directories
/// default to the sp/pp3/pp5 runs; each contributes the final checkpoint
/// of every member. The co-player ladder defaults to the bobs-source run.
pub fn cmd_evaluate(
    exp: &Experiment,
    environment: &str,
    scenario: &str,
    candidate_args: &[(String, std::path::PathBuf)],
    bobs_path: Option<&std::path::Path>,
    games: Option<usize>,
) -> Result<(String, EvalRecord), CliError> {
    let store = Store::new(&exp.output_dir);
    let mut candidates = BTreeMap::new();
    if candidate_args.is_empty() {
        for role in EVAL_METHODS {
            let dir = store::run_dir(environment, scenario, role);
            let pools = store::load_pools(&store, &dir).map_err(|e| {
                CliError::Data(format!(
                    "{e}; train the {role} run first (loi-lab run-all) or pass --candidates"
                ))
            })?;
            candidates.insert(String::from(role), last_checkpoints(&pools)?);
        }
    } else {
        for (role, path) in candidate_args {
            let pools = store::read_pools_path(path)?;
            candidates.insert(role.clone(), last_checkpoints(&pools)?);
        }
    }
    let source_pools = match bobs_path {
        Some(p) => store::read_pools_path(p)?,
        None => {
            let dir = store::run_dir(environment, scenario, "bobs-source");
            store::load_pools(&store, &dir).map_err(|e| {
                CliError::Data(format!(
                    "{e}; train the bobs-source run first (loi-lab run-all) or pass --bobs"
                ))
            })?
        }
    };
    let games = games.unwrap_or(exp.raw.evaluation.games_per_pair);
    let record = eval_cell(
        exp,
        environment,
        scenario,
        &candidates,
        &source_pools[0],
        games,
    )?;
    let artifacts = save_eval(&store, &record)?;
    let rel = artifacts[0].path.clone();
    let mut manifest = RunManifest::load_or_new(&store, exp);
    manifest.record(&format!("eval/{environment}/{scenario}"), artifacts);
    manifest.save(&store)?;
    Ok((rel, record))
}

/// Per-sample normalized values selected by a plan: for each assignment,
/// the assigned method's rewards divided by the cell's self-play mean.
pub fn plan_values(
    assignments: &[Assignment],
    evals: &BTreeMap<String, EvalRecord>,
) -> Result<Vec<(String, String, f64)>, CliError> {
    let mut values = Vec::new();
    for a in assignments {
        let record = evals.get(&a.scenario).ok_or_else(|| {
            CliError::Data(format!(
                "no evaluation record for scenario {:?}",
                a.scenario
            ))
        })?;
        let baseline = *record
            .report
            .method_means
            .get(BASELINE_METHOD)
            .ok_or_else(|| {
                CliError::Data(format!(
                    "evaluation for {:?} lacks the {BASELINE_METHOD} baseline",
                    a.scenario
                ))
            })?;
        if baseline == 0.0 {
            return Err(CliError::Numeric(format!(
                "self-play mean is zero in scenario {:?}; cannot normalize",
                a.scenario
            )));
        }
        let method = a.method.name();
        let before = values.len();
        for s in &record.report.samples {
            if s.method == method {
                values.push((a.scenario.clone(), String::from(method), s.reward / baseline));
            }
        }
        if values.len() == before {
            return Err(CliError::Data(format!(
                "evaluation for {:?} has no samples for method {method}",
                a.scenario
            )));
        }
    }
    Ok(values)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyRecord {
    pub environment: String,
    pub scenario: String,
    pub seed: u64,
    pub pool_steps: u64,
    pub save_interval: u64,
    pub repeats: usize,
    pub bob_counts: Vec<usize>,
    pub rows: Vec<VarianceStudyRow>,
}

pub fn run_study(exp: &Experiment) -> Result<StudyRecord, CliError> {
    let environment = exp.study_environment().to_string();
    let scenario = exp.study_scenario().to_string();
    let payoff = exp.environment(&environment)?;
    let map = exp.scenario(&scenario)?;
    let total = exp.scaled(exp.raw.study.pool_steps);
    let seed = study_seed(exp.seed, &environment, &scenario);
    let template = TrainingConfig {
        scenario_id: scenario.clone(),
        environment_id: environment.clone(),
        total_steps: total,
        save_interval: exp.save_interval(total),
        population_size: 1,
        seed,
        discount_factor: exp.raw.training.discount_factor,
        learner: exp.raw.training.knobs(),
    };
    let rows = loi_variance_study(
        &template,
        &loi_params(exp, exp.raw.loi.bob_checkpoints),
        &exp.raw.study.bob_counts,
        exp.raw.study.repeats,
        map,
        payoff,
        PayoffMode::Mixed,
        seed,
    )?;
    Ok(StudyRecord {
        environment,
        scenario,
        seed,
        pool_steps: total,
        save_interval: template.save_interval,
        repeats: exp.raw.study.repeats,
        bob_counts: exp.raw.study.bob_counts.clone(),
        rows,
    })
}

fn float_cell(v: f64) -> String {
    v.to_string()
}

fn stats_for_env(
    store: &Store,
    environment: &str,
    scenario_order: &[String],
    evals: &BTreeMap<String, EvalRecord>,
    allocation: &AllocationRecord,
) -> Result<Vec<Artifact>, CliError> {
    let dir = format!("stats/{environment}");

    // One variance analysis per scenario across the method groups.
    let mut anova_rows = Vec::new();
    for scenario in scenario_order {
        let record = &evals[scenario];
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for (_method, _mean) in &record.report.method_means {
            groups.push(Vec::new());
        }
        let method_index: BTreeMap<&str, usize> = record
            .report
            .method_means
            .keys()
            .enumerate()
            .map(|(i, m)| (m.as_str(), i))
            .collect();
        for s in &record.report.samples {
            groups[method_index[s.method.as_str()]].push(s.reward);
        }
        let result = one_way_anova(&groups)?;
        anova_rows.push(vec![
            String::from(environment),
            scenario.clone(),
            float_cell(result.f_statistic),
            float_cell(result.df_between),
            float_cell(result.df_within),
            float_cell(result.p_value),
        ]);
    }
    let anova = store.write_csv(
        &format!("{dir}/anova.csv"),
        &[
            "environment",
            "scenario",
            "f_statistic",
            "df_between",
            "df_within",
            "p_value",
        ],
        &anova_rows,
    )?;

    // Heuristic-beats-uniform test on plan-selected normalized rewards.
    let heuristic = plan_values(&allocation.heuristic.assignments, evals)?;
    let uniform = plan_values(&allocation.uniform.assignments, evals)?;
    let mut sample_rows = Vec::new();
    for (plan, values) in [("heuristic", &heuristic), ("uniform", &uniform)] {
        for (scenario, method, value) in values {
            sample_rows.push(vec![
                String::from(environment),
                String::from(plan),
                scenario.clone(),
                method.clone(),
                float_cell(*value),
            ]);
        }
    }
    let samples = store.write_csv(
        &format!("{dir}/allocation_samples.csv"),
        &["environment", "plan", "scenario", "method", "value"],
        &sample_rows,
    )?;

    let a: Vec<f64> = heuristic.iter().map(|(_, _, v)| *v).collect();
    let b: Vec<f64> = uniform.iter().map(|(_, _, v)| *v).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let result = t_test_one_tailed(&a, &b)?;
    let ttest = store.write_csv(
        &format!("{dir}/ttest.csv"),
        &[
            "environment",
            "heuristic_mean",
            "uniform_mean",
            "t_statistic",
            "dof",
            "p_value",
        ],
        &[vec![
            String::from(environment),
            float_cell(mean(&a)),
            float_cell(mean(&b)),
            float_cell(result.t_statistic),
            float_cell(result.dof),
            float_cell(result.p_value),
        ]],
    )?;

    Ok(vec![anova, samples, ttest])
}

struct TrainTask {
    environment: String,
    scenario: String,
    role: String,
    population: usize,
    total_steps: u64,
}

fn train_tasks(exp: &Experiment) -> Vec<TrainTask> {
    let mut tasks = Vec::new();
    for (environment, _) in &exp.environments {
        for (scenario, _) in &exp.scenarios {
            let mut push = |role: String, population: usize, total: u64| {
                tasks.push(TrainTask {
                    environment: environment.clone(),
                    scenario: scenario.clone(),
                    role,
                    population,
                    total_steps: total,
                });
            };
            let method_steps = exp.scaled(exp.raw.training.total_steps);
            push(String::from("sp"), 1, method_steps);
            push(String::from("pp3"), 3, method_steps);
            push(String::from("pp5"), 5, method_steps);
            let pool_steps = exp.scaled(exp.raw.loi.pool_steps);
            for i in 0..exp.raw.loi.alice_policies {
                push(format!("loi-alice-{i}"), 1, pool_steps);
            }
            for j in 0..exp.raw.loi.bob_policies {
                push(format!("loi-bob-{j}"), 1, pool_steps);
            }
            push(
                String::from("bobs-source"),
                1,
                exp.scaled(exp.raw.evaluation.source_steps),
            );
        }
    }
    tasks
}

type PoolsByRole = BTreeMap<(String, String, String), Vec<CheckpointPool>>;

/// Runs the whole pipeline: training, influence estimation, allocation,
/// fixed co-player evaluation, statistics, the variance study, and the
/// report, recording every artifact in a fresh manifest.
pub fn run_all(exp: &Experiment) -> Result<RunManifest, CliError> {
    let store = Store::new(&exp.output_dir);
    let mut manifest = RunManifest::new(exp);

    // Training fans out per run; results land in declaration order.
    let tasks = train_tasks(exp);
    let mut trained: Vec<(usize, TrainingConfig, TrainingReport)> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            run_training(exp, &t.environment, &t.scenario, &t.role, t.population, t.total_steps)
                .map(|(config, report)| (i, config, report))
        })
        .collect::<Result<_, CliError>>()?;
    trained.sort_by_key(|(i, _, _)| *i);
    let mut pools: PoolsByRole = BTreeMap::new();
    for (i, config, report) in trained {
        let task = &tasks[i];
        let (_, artifacts) = save_training(
            &store,
            &task.environment,
            &task.scenario,
            &task.role,
            &config,
            &report,
        )?;
        manifest.record(
            &format!("train/{}/{}/{}", task.environment, task.scenario, task.role),
            artifacts,
        );
        pools.insert(
            (task.environment.clone(), task.scenario.clone(), task.role.clone()),
            report.pools,
        );
    }

    let cells: Vec<(String, String)> = exp
        .environments
        .iter()
        .flat_map(|(e, _)| exp.scenarios.iter().map(move |(s, _)| (e.clone(), s.clone())))
        .collect();
    let key = |e: &str, s: &str, r: &str| (String::from(e), String::from(s), String::from(r));

    // Influence estimates per cell.
    let loi_records: Vec<LoIRecord> = cells
        .par_iter()
        .map(|(environment, scenario)| {
            let mut alice = Vec::with_capacity(exp.raw.loi.alice_policies);
            for i in 0..exp.raw.loi.alice_policies {
                alice.extend_from_slice(&pools[&key(environment, scenario, &format!("loi-alice-{i}"))]);
            }
            let mut bobs = Vec::with_capacity(exp.raw.loi.bob_policies);
            for j in 0..exp.raw.loi.bob_policies {
                bobs.extend_from_slice(&pools[&key(environment, scenario, &format!("loi-bob-{j}"))]);
            }
            estimate_cell(
                exp,
                environment,
                scenario,
                &alice,
                &bobs,
                exp.raw.loi.bob_checkpoints,
            )
        })
        .collect::<Result<_, CliError>>()?;
    for record in &loi_records {
        let artifact = store.write_json(
            &loi_record_path(&record.environment, &record.scenario),
            record,
        )?;
        manifest.record(
            &format!("loi/{}/{}", record.environment, record.scenario),
            vec![artifact],
        );
    }

    // Budget plans per environment, scenario order as declared.
    let base_unit = exp.scaled(exp.raw.allocation.base_unit);
    let mut allocations: BTreeMap<String, AllocationRecord> = BTreeMap::new();
    for (environment, _) in &exp.environments {
        let scores: Vec<(String, f64)> = exp
            .scenarios
            .iter()
            .map(|(scenario, _)| {
                let mean = loi_records
                    .iter()
                    .find(|r| &r.environment == environment && &r.scenario == scenario)
                    .expect("one record per cell")
                    .mean;
                (scenario.clone(), mean)
            })
            .collect();
        let record = build_allocation(environment, &scores, base_unit)?;
        let artifacts = save_allocation(&store, &record)?;
        manifest.record(&format!("allocate/{environment}"), artifacts);
        allocations.insert(environment.clone(), record);
    }

    // Fixed co-player evaluation per cell.
    let eval_records: Vec<EvalRecord> = cells
        .par_iter()
        .map(|(environment, scenario)| {
            let mut candidates = BTreeMap::new();
            for role in EVAL_METHODS {
                let members = &pools[&key(environment, scenario, role)];
                candidates.insert(String::from(role), last_checkpoints(members)?);
            }
            let source = &pools[&key(environment, scenario, "bobs-source")][0];
            eval_cell(
                exp,
                environment,
                scenario,
                &candidates,
                source,
                exp.raw.evaluation.games_per_pair,
            )
        })
        .collect::<Result<_, CliError>>()?;
    for record in &eval_records {
        let artifacts = save_eval(&store, record)?;
        manifest.record(
            &format!("eval/{}/{}", record.environment, record.scenario),
            artifacts,
        );
    }

    // Statistics per environment.
    let scenario_order: Vec<String> = exp.scenarios.iter().map(|(s, _)| s.clone()).collect();
    for (environment, _) in &exp.environments {
        let evals: BTreeMap<String, EvalRecord> = eval_records
            .iter()
            .filter(|r| &r.environment == environment)
            .map(|r| (r.scenario.clone(), r.clone()))
            .collect();
        let artifacts = stats_for_env(
            &store,
            environment,
            &scenario_order,
            &evals,
            &allocations[environment],
        )?;
        manifest.record(&format!("stats/{environment}"), artifacts);
    }

    // Estimator variance study on the configured cell.
    let study = run_study(exp)?;
    let artifact = store.write_json("study/variance.json", &study)?;
    manifest.record("study", vec![artifact]);

    // Summary tables, then the manifest itself.
    crate::report::write_report(&store, &mut manifest)?;
    manifest.save(&store)?;
    Ok(manifest)
}

/// Standalone statistics verb: reads a sample CSV and emits the test
/// result as CSV text (for stdout).
pub fn cmd_stats(report_path: &std::path::Path, test: &str) -> Result<String, CliError> {
    let mut reader = csv::Reader::from_path(report_path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", report_path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", report_path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize, CliError> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Data(format!(
                "{} has no {name:?} column",
                report_path.display()
            ))
        })
    };
    let parse = |field: &str| -> Result<f64, CliError> {
        field
            .trim()
            .parse::<f64>()
            .map_err(|_| CliError::Data(format!("cannot parse {field:?} as a number")))
    };

    match test {
        "anova" => {
            let scenario_col = col("scenario")?;
            let method_col = col("method")?;
            let reward_col = col("reward")?;
            // Group rewards by scenario then method, both in first-seen order.
            let mut order: Vec<String> = Vec::new();
            let mut by_scenario: BTreeMap<String, (Vec<String>, BTreeMap<String, Vec<f64>>)> =
                BTreeMap::new();
            for row in reader.records() {
                let row =
                    row.map_err(|e| CliError::Data(format!("bad csv row: {e}")))?;
                let scenario = row.get(scenario_col).unwrap_or("").to_string();
                let method = row.get(method_col).unwrap_or("").to_string();
                let reward = parse(row.get(reward_col).unwrap_or(""))?;
                if !order.contains(&scenario) {
                    order.push(scenario.clone());
                }
                let entry = by_scenario.entry(scenario).or_default();
                if !entry.0.contains(&method) {
                    entry.0.push(method.clone());
                }
                entry.1.entry(method).or_default().push(reward);
            }
            let mut out = String::from("scenario,f_statistic,df_between,df_within,p_value\n");
            for scenario in order {
                let (methods, groups) = &by_scenario[&scenario];
                let group_vec: Vec<Vec<f64>> =
                    methods.iter().map(|m| groups[m].clone()).collect();
                let r = one_way_anova(&group_vec)?;
                out.push_str(&format!(
                    "{scenario},{},{},{},{}\n",
                    r.f_statistic, r.df_between, r.df_within, r.p_value
                ));
            }
            Ok(out)
        }
        "ttest" => {
            let env_col = col("environment")?;
            let plan_col = col("plan")?;
            let value_col = col("value")?;
            let mut order: Vec<String> = Vec::new();
            let mut by_env: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for row in reader.records() {
                let row =
                    row.map_err(|e| CliError::Data(format!("bad csv row: {e}")))?;
                let environment = row.get(env_col).unwrap_or("").to_string();
                let plan = row.get(plan_col).unwrap_or("");
                let value = parse(row.get(value_col).unwrap_or(""))?;
                if !order.contains(&environment) {
                    order.push(environment.clone());
                }
                let entry = by_env.entry(environment).or_default();
                match plan {
                    "heuristic" => entry.0.push(value),
                    "uniform" => entry.1.push(value),
                    other => {
                        return Err(CliError::Data(format!(
                            "unknown plan {other:?}; expected heuristic or uniform"
                        )))
                    }
                }
            }
            let mut out = String::from("environment,t_statistic,dof,p_value\n");
            for environment in order {
                let (a, b) = &by_env[&environment];
                let r = t_test_one_tailed(a, b)?;
                out.push_str(&format!(
                    "{environment},{},{},{}\n",
                    r.t_statistic, r.dof, r.p_value
                ));
            }
            Ok(out)
        }
        other => Err(CliError::Config(format!(
            "unknown test {other:?}; expected anova or ttest"
        ))),
    }
}
