//! Summary tables. The report command reads every upstream artifact
//! through the manifest (verifying hashes first) and emits six plain CSV
//! files: the normalized reward grid, the influence table, the improvement
//! table, the Pearson table, the allocation comparison, and the variance
//! study table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loi_core::eval::{average_improvement, pearson_correlation, EvalError};

use crate::manifest::RunManifest;
use crate::pipeline::{plan_values, AllocationRecord, EvalRecord, LoIRecord, StudyRecord};
use crate::store::{Artifact, Store};
use crate::CliError;

fn find_artifact<'a>(
    artifacts: &'a [Artifact],
    stage: &str,
    suffix: &str,
) -> Result<&'a Artifact, CliError> {
    artifacts
        .iter()
        .find(|a| a.path.ends_with(suffix))
        .ok_or_else(|| {
            CliError::Data(format!("stage {stage:?} lists no {suffix} artifact"))
        })
}

fn read_stage_json<T: serde::de::DeserializeOwned>(
    store: &Store,
    manifest: &RunManifest,
    stage: &str,
    suffix: &str,
) -> Result<T, CliError> {
    let artifacts = manifest.stage(stage)?;
    let artifact = find_artifact(artifacts, stage, suffix)?;
    store.read_json(&artifact.path)
}

/// Mean and standard error (sample standard deviation over sqrt n).
fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn methods_baseline_first(record: &EvalRecord) -> Vec<String> {
    let mut methods: Vec<String> = record.report.method_means.keys().cloned().collect();
    methods.sort_by_key(|m| (m != "sp", m.clone()));
    methods
}

/// Writes the six summary tables from the manifest's artifacts and records
/// them as the report stage. Inputs are verified against their recorded
/// hashes before anything is read.
pub fn write_report(store: &Store, manifest: &mut RunManifest) -> Result<Vec<Artifact>, CliError> {
    manifest.verify(store)?;

    let environments: Vec<String> = manifest
        .config
        .environments
        .iter()
        .map(|e| e.name.clone())
        .collect();
    let scenarios: Vec<String> = manifest
        .config
        .scenarios
        .iter()
        .map(|s| s.name.clone())
        .collect();

    let mut loi_records: BTreeMap<(String, String), LoIRecord> = BTreeMap::new();
    let mut eval_records: BTreeMap<(String, String), EvalRecord> = BTreeMap::new();
    for environment in &environments {
        for scenario in &scenarios {
            let loi: LoIRecord = read_stage_json(
                store,
                manifest,
                &format!("loi/{environment}/{scenario}"),
                ".json",
            )?;
            let eval: EvalRecord = read_stage_json(
                store,
                manifest,
                &format!("eval/{environment}/{scenario}"),
                "report.json",
            )?;
            loi_records.insert((environment.clone(), scenario.clone()), loi);
            eval_records.insert((environment.clone(), scenario.clone()), eval);
        }
    }
    let mut allocations: BTreeMap<String, AllocationRecord> = BTreeMap::new();
    for environment in &environments {
        let record: AllocationRecord = read_stage_json(
            store,
            manifest,
            &format!("allocate/{environment}"),
            "plan.json",
        )?;
        allocations.insert(environment.clone(), record);
    }
    let study: StudyRecord = read_stage_json(store, manifest, "study", "variance.json")?;

    let mut artifacts = Vec::new();

    // Normalized reward grid, baseline method first.
    let mut reward_rows = Vec::new();
    for environment in &environments {
        for scenario in &scenarios {
            let record = &eval_records[&(environment.clone(), scenario.clone())];
            for method in methods_baseline_first(record) {
                let normalized = *record.report.normalized.get(&method).ok_or_else(|| {
                    CliError::Data(format!(
                        "evaluation for {environment}/{scenario} was not normalized"
                    ))
                })?;
                let baseline = record.report.method_means["sp"];
                let values: Vec<f64> = record
                    .report
                    .samples
                    .iter()
                    .filter(|s| s.method == method)
                    .map(|s| s.reward / baseline)
                    .collect();
                let (_, stderr) = mean_and_stderr(&values);
                reward_rows.push(vec![
                    environment.clone(),
                    scenario.clone(),
                    method.clone(),
                    record.report.method_means[&method].to_string(),
                    normalized.to_string(),
                    stderr.to_string(),
                    (1.96 * stderr).to_string(),
                ]);
            }
        }
    }
    artifacts.push(store.write_csv(
        "report/normalized_rewards.csv",
        &[
            "environment",
            "scenario",
            "method",
            "mean_reward",
            "normalized_reward",
            "stderr",
            "ci95_half",
        ],
        &reward_rows,
    )?);

    // Influence table.
    let mut loi_rows = Vec::new();
    for environment in &environments {
        for scenario in &scenarios {
            let record = &loi_records[&(environment.clone(), scenario.clone())];
            loi_rows.push(vec![
                environment.clone(),
                scenario.clone(),
                record.mean.to_string(),
                record.std_dev.to_string(),
                record.samples.len().to_string(),
            ]);
        }
    }
    artifacts.push(store.write_csv(
        "report/loi.csv",
        &["environment", "scenario", "mean", "std_dev", "sample_count"],
        &loi_rows,
    )?);

    // Improvement table: self-play to the largest population, halved.
    let mut improvement_rows = Vec::new();
    let mut improvements: BTreeMap<(String, String), f64> = BTreeMap::new();
    for environment in &environments {
        for scenario in &scenarios {
            let record = &eval_records[&(environment.clone(), scenario.clone())];
            let sp = *record.report.method_means.get("sp").ok_or_else(|| {
                CliError::Data(format!(
                    "evaluation for {environment}/{scenario} lacks method sp"
                ))
            })?;
            let pp5 = *record.report.method_means.get("pp5").ok_or_else(|| {
                CliError::Data(format!(
                    "evaluation for {environment}/{scenario} lacks method pp5"
                ))
            })?;
            let delta = average_improvement(sp, pp5);
            improvements.insert((environment.clone(), scenario.clone()), delta);
            improvement_rows.push(vec![
                environment.clone(),
                scenario.clone(),
                sp.to_string(),
                pp5.to_string(),
                delta.to_string(),
            ]);
        }
    }
    artifacts.push(store.write_csv(
        "report/improvement.csv",
        &["environment", "scenario", "sp_mean", "pp5_mean", "improvement"],
        &improvement_rows,
    )?);

    // Pearson coefficient of influence against improvement per environment.
    // Undefined coefficients (constant input, one scenario) leave the cell
    // empty rather than failing the whole report.
    let mut pearson_rows = Vec::new();
    for environment in &environments {
        let xs: Vec<f64> = scenarios
            .iter()
            .map(|s| loi_records[&(environment.clone(), s.clone())].mean)
            .collect();
        let ys: Vec<f64> = scenarios
            .iter()
            .map(|s| improvements[&(environment.clone(), s.clone())])
            .collect();
        let coefficient = match pearson_correlation(&xs, &ys) {
            Ok(c) => c.to_string(),
            Err(EvalError::ConstantInput) | Err(EvalError::TooFewPoints(_)) => String::new(),
            Err(e) => return Err(e.into()),
        };
        pearson_rows.push(vec![
            environment.clone(),
            scenarios.len().to_string(),
            coefficient,
        ]);
    }
    artifacts.push(store.write_csv(
        "report/pearson.csv",
        &["environment", "scenario_count", "coefficient"],
        &pearson_rows,
    )?);

    // Allocation comparison: plan-selected normalized rewards, pooled
    // across scenarios, with normal-approximation 95% intervals.
    let mut comparison_rows = Vec::new();
    for environment in &environments {
        let allocation = &allocations[environment];
        let evals: BTreeMap<String, EvalRecord> = scenarios
            .iter()
            .map(|s| {
                (
                    s.clone(),
                    eval_records[&(environment.clone(), s.clone())].clone(),
                )
            })
            .collect();
        for (plan, assignments, total) in [
            (
                "heuristic",
                &allocation.heuristic.assignments,
                allocation.heuristic.total_steps,
            ),
            (
                "uniform",
                &allocation.uniform.assignments,
                allocation.uniform.total_steps,
            ),
        ] {
            let values: Vec<f64> = plan_values(assignments, &evals)?
                .into_iter()
                .map(|(_, _, v)| v)
                .collect();
            let (mean, stderr) = mean_and_stderr(&values);
            comparison_rows.push(vec![
                environment.clone(),
                String::from(plan),
                total.to_string(),
                mean.to_string(),
                (1.96 * stderr).to_string(),
            ]);
        }
    }
    artifacts.push(store.write_csv(
        "report/allocation_comparison.csv",
        &[
            "environment",
            "plan",
            "total_steps",
            "mean_normalized",
            "ci95_half",
        ],
        &comparison_rows,
    )?);

    // Variance study table.
    let mut study_rows = Vec::new();
    for row in &study.rows {
        let (mean, _) = mean_and_stderr(&row.estimates);
        study_rows.push(vec![
            row.bob_count.to_string(),
            mean.to_string(),
            row.variance.to_string(),
        ]);
    }
    artifacts.push(store.write_csv(
        "report/variance_study.csv",
        &["bob_count", "mean_estimate", "variance"],
        &study_rows,
    )?);

    manifest.record("report", artifacts.clone());
    Ok(artifacts)
}

/// Report verb: rebuilds the summary tables for the run rooted at
/// `run_root` (a directory holding manifest.json, or the manifest path).
pub fn cmd_report(run_root: &Path) -> Result<(PathBuf, Vec<Artifact>), CliError> {
    let root = if run_root.is_file() {
        run_root.parent().unwrap_or(Path::new(".")).to_path_buf()
    } else {
        run_root.to_path_buf()
    };
    let store = Store::new(&root);
    let mut manifest = RunManifest::load(&store).map_err(|_| {
        CliError::Data(format!(
            "no run manifest at {}; run `loi-lab run-all` first",
            root.join("manifest.json").display()
        ))
    })?;
    let artifacts = write_report(&store, &mut manifest)?;
    manifest.save(&store)?;
    Ok((root, artifacts))
}
