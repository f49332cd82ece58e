use std::path::PathBuf;

use clap::{Parser, Subcommand};

use loi_cli::config::{Experiment, Overrides};
use loi_cli::{pipeline, report, CliError};

#[derive(Parser)]
#[command(
    name = "loi-lab",
    version,
    about = "Level-of-influence experiment workbench for matrix-game gridworlds"
)]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Root seed, overriding the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel pipeline cells (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Step-count scale factor, overriding the configured one.
    #[arg(long, global = true)]
    scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and save its checkpoint pool directories.
    Train {
        /// Environment name (default: first declared).
        #[arg(long)]
        environment: Option<String>,
        /// Scenario name (default: first declared).
        #[arg(long)]
        scenario: Option<String>,
        /// Training method: sp, pp3, pp5, or pp:<p>.
        #[arg(long)]
        method: String,
        /// Steps to run, taken literally (no scaling). Defaults to the
        /// configured budget for the role.
        #[arg(long)]
        steps: Option<u64>,
        /// Run role naming the output directory and seed path
        /// (default: the method name).
        #[arg(long)]
        role: Option<String>,
    },
    /// Estimate the level of influence for one cell.
    Loi {
        #[arg(long)]
        environment: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
        /// Ego pool paths (default: the trained loi-alice-* runs).
        #[arg(long)]
        alice: Vec<PathBuf>,
        /// Co-player pool paths (default: the trained loi-bob-* runs).
        #[arg(long)]
        bob: Vec<PathBuf>,
        /// Checkpoints sampled per co-player policy.
        #[arg(long)]
        bob_checkpoints: Option<usize>,
    },
    /// Build heuristic and uniform budget plans from influence records.
    Allocate {
        /// Influence record files; their order decides tie-breaks.
        #[arg(long, required = true, num_args = 1..)]
        loi: Vec<PathBuf>,
        /// Steps behind one budget unit, taken literally
        /// (default: the configured unit, scaled).
        #[arg(long)]
        base_unit: Option<u64>,
    },
    /// Evaluate candidate methods against the fixed co-player ladder.
    Evaluate {
        #[arg(long)]
        environment: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
        /// Candidate pools as role=path (default: the sp/pp3/pp5 runs).
        #[arg(long, num_args = 1..)]
        candidates: Vec<String>,
        /// Run the ladder is drawn from (default: the bobs-source run).
        #[arg(long)]
        bobs: Option<PathBuf>,
        /// Episodes per candidate and co-player pairing.
        #[arg(long)]
        games: Option<usize>,
    },
    /// Run a statistical test over a sample CSV and print the result CSV.
    Stats {
        /// Sample table. anova needs scenario,method,reward columns;
        /// ttest needs environment,plan,value columns.
        #[arg(long)]
        report: PathBuf,
        /// Test to run: anova or ttest.
        #[arg(long)]
        test: String,
    },
    /// Rebuild the summary tables from a run manifest.
    Report {
        /// Run directory or manifest path
        /// (default: the configured output directory).
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Execute the whole pipeline and write the run manifest.
    RunAll,
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run() -> Result<(), CliError> {
    let Cli {
        config,
        seed,
        out,
        jobs,
        scale,
        command,
    } = Cli::parse();
    if let Some(jobs) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let load = || {
        Experiment::load(
            &config,
            Overrides {
                seed,
                out: out.as_deref(),
                scale,
            },
        )
    };

    match command {
        Command::Train {
            environment,
            scenario,
            method,
            steps,
            role,
        } => {
            let exp = load()?;
            let environment = environment.as_deref().unwrap_or(&exp.environments[0].0);
            let scenario = scenario.as_deref().unwrap_or(&exp.scenarios[0].0);
            let dir = pipeline::cmd_train(
                &exp,
                environment,
                scenario,
                &method,
                steps,
                role.as_deref(),
            )?;
            println!("{}", exp.output_dir.join(dir).display());
        }
        Command::Loi {
            environment,
            scenario,
            alice,
            bob,
            bob_checkpoints,
        } => {
            let exp = load()?;
            let environment = environment.as_deref().unwrap_or(&exp.environments[0].0);
            let scenario = scenario.as_deref().unwrap_or(&exp.scenarios[0].0);
            let (rel, record) =
                pipeline::cmd_loi(&exp, environment, scenario, &alice, &bob, bob_checkpoints)?;
            println!(
                "{} mean {} std_dev {}",
                exp.output_dir.join(rel).display(),
                record.mean,
                record.std_dev
            );
        }
        Command::Allocate { loi, base_unit } => {
            let exp = load()?;
            let (rel, record) = pipeline::cmd_allocate(&exp, &loi, base_unit)?;
            println!(
                "{} total_steps {}",
                exp.output_dir.join(rel).display(),
                record.heuristic.total_steps
            );
        }
        Command::Evaluate {
            environment,
            scenario,
            candidates,
            bobs,
            games,
        } => {
            let exp = load()?;
            let environment = environment.as_deref().unwrap_or(&exp.environments[0].0);
            let scenario = scenario.as_deref().unwrap_or(&exp.scenarios[0].0);
            let mut candidate_args = Vec::new();
            for spec in &candidates {
                let (role, path) = spec.split_once('=').ok_or_else(|| {
                    CliError::Config(format!(
                        "candidate {spec:?} must have the form role=path"
                    ))
                })?;
                candidate_args.push((String::from(role), PathBuf::from(path)));
            }
            let (rel, _) = pipeline::cmd_evaluate(
                &exp,
                environment,
                scenario,
                &candidate_args,
                bobs.as_deref(),
                games,
            )?;
            println!("{}", exp.output_dir.join(rel).display());
        }
        Command::Stats { report, test } => {
            let csv = pipeline::cmd_stats(&report, &test)?;
            print!("{csv}");
        }
        Command::Report { run } => {
            let root = match run {
                Some(path) => path,
                None => load()?.output_dir,
            };
            let (resolved, artifacts) = report::cmd_report(&root)?;
            println!(
                "wrote {} tables under {}",
                artifacts.len(),
                resolved.join("report").display()
            );
        }
        Command::RunAll => {
            let exp = load()?;
            let manifest = pipeline::run_all(&exp)?;
            println!(
                "{} ({} stages)",
                exp.output_dir.join("manifest.json").display(),
                manifest.stages.len()
            );
        }
    }
    Ok(())
}
