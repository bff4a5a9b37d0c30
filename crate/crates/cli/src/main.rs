use clap::{Parser, Subcommand};
use leaksim_core::error::{Error, Result};
use leaksim_core::harness::{
    self, CorpusSpec, Scenario, ScenarioConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "leaksim",
    version,
    about = "Deterministic simulation of multi-turn secret-inference attacks and defenses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario's seeded trials; exports per-turn CSV and a JSON summary
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario's base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's trial count
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Toggle a defense layer, e.g. --defense spotlight=on (repeatable).
        /// Layers: sanitize, spotlight, detector, output-filter, dp
        #[arg(long = "defense", value_name = "NAME=on|off")]
        defenses: Vec<String>,
    },
    /// Compare scenarios that differ only in their defense stacks
    Compare {
        /// Scenario config (repeat for each stack under comparison)
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Synthesize labeled benign and attack conversation files
    GenCorpus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fit the detector on benign conversations, sweep thresholds on a
    /// labeled corpus, and export the ROC curve
    Roc {
        /// Scenario config supplying the detector parameters and document
        /// store (defaults apply when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        attack: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print per-query channel capacities for a scenario's candidate pool
    Capacity {
        #[arg(long)]
        config: PathBuf,
        /// Also write capacity.csv here
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_scenario(
    path: &Path,
    seed: Option<u64>,
    trials: Option<u32>,
    defenses: &[String],
) -> Result<Scenario> {
    let mut config = ScenarioConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(trials) = trials {
        config.trials = trials;
    }
    for spec in defenses {
        let (name, state) = spec.split_once('=').ok_or_else(|| {
            Error::config("--defense", format!("expected NAME=on|off, got '{spec}'"))
        })?;
        let on = match state {
            "on" => true,
            "off" => false,
            other => {
                return Err(Error::config(
                    "--defense",
                    format!("expected on or off, got '{other}'"),
                ))
            }
        };
        config.set_defense(name, on)?;
    }
    config.build()
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            defenses,
        } => {
            let scenario = load_scenario(&config, seed, trials, &defenses)?;
            let results = harness::run_scenario(&scenario)?;
            let (csv, json) = harness::export_results(&results, &out)?;
            println!(
                "{}: {} trials, success rate {:.3}, mean turns {:.2}, mean leaked {:.3} bits",
                results.summary.scenario_id,
                results.summary.trials,
                results.summary.success_rate,
                results.summary.mean_turns,
                results.summary.mean_cumulative_mi_bits,
            );
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
            Ok(())
        }
        Command::Compare {
            configs,
            seed,
            trials,
            out,
        } => {
            let scenarios = configs
                .iter()
                .map(|p| load_scenario(p, seed, trials, &[]))
                .collect::<Result<Vec<_>>>()?;
            let report = harness::compare_defenses(&scenarios)?;
            let (csv, json) = harness::export_compare(&report, &out)?;
            for row in &report.rows {
                println!(
                    "{:<24} defenses=[{}] success={:.3} mi={:.3} detect={:.3} fpr={:.3}",
                    row.scenario_id,
                    row.defenses.join("+"),
                    row.success_rate,
                    row.mean_cumulative_mi_bits,
                    row.detection_rate,
                    row.benign_fpr,
                );
            }
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
            Ok(())
        }
        Command::GenCorpus { config, seed, out } => {
            let mut spec = CorpusSpec::load(&config)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;
            let benign = harness::generate_benign(spec.benign_count, spec.seed);
            let benign_path = out.join("benign_conversations.txt");
            harness::write_conversations(&benign_path, &benign)?;
            println!("wrote {} ({} conversations)", benign_path.display(), benign.len());

            if spec.attack_count() > 0 {
                let scenario_path = spec.scenario.as_ref().ok_or_else(|| {
                    Error::config("corpus.scenario", "attack synthesis needs a scenario file")
                })?;
                let resolved = if scenario_path.is_absolute() {
                    scenario_path.clone()
                } else {
                    spec.base_dir.join(scenario_path)
                };
                let scenario = ScenarioConfig::load(&resolved)?.build()?;
                let attacks = harness::generate_attacks(&scenario, &spec.attack, spec.seed)?;
                let attack_path = out.join("attack_conversations.txt");
                harness::write_conversations(&attack_path, &attacks)?;
                println!(
                    "wrote {} ({} conversations)",
                    attack_path.display(),
                    attacks.len()
                );
            }
            Ok(())
        }
        Command::Roc {
            config,
            benign,
            attack,
            out,
        } => {
            let (detector_config, store) = match config {
                Some(path) => {
                    let scenario = ScenarioConfig::load(&path)?.build()?;
                    let dc = scenario
                        .config
                        .defense
                        .detector_config
                        .clone()
                        .unwrap_or_default();
                    (dc, Some(scenario.env.store))
                }
                None => (Default::default(), None),
            };
            let run = harness::evaluate_roc(&detector_config, &benign, &attack, store.as_ref())?;
            let (csv, json) = harness::export_roc(&run, &out)?;
            println!(
                "feature detector:  TPR@90%TNR={:.3} TPR@95%TNR={:.3} AUROC={:.3}",
                run.feature.tpr_at_90_tnr, run.feature.tpr_at_95_tnr, run.feature.auroc
            );
            println!(
                "keyword baseline:  TPR@90%TNR={:.3} TPR@95%TNR={:.3} AUROC={:.3}",
                run.keyword_baseline.tpr_at_90_tnr,
                run.keyword_baseline.tpr_at_95_tnr,
                run.keyword_baseline.auroc
            );
            println!("wrote {}", csv.display());
            println!("wrote {}", json.display());
            Ok(())
        }
        Command::Capacity { config, out } => {
            let scenario = ScenarioConfig::load(&config)?.build()?;
            let rows = harness::pool_capacities(&scenario)?;
            println!("{:<52} {:>14} {:>16}", "candidate", "capacity_bits", "initial_eig_bits");
            for row in &rows {
                println!(
                    "{:<52} {:>14.6} {:>16.6}",
                    row.template, row.capacity_bits, row.expected_info_gain_bits
                );
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| Error::io(dir.display().to_string(), e))?;
                let path = dir.join("capacity.csv");
                let mut csv = String::from("candidate,query_kind,capacity_bits,initial_eig_bits\n");
                for row in &rows {
                    csv.push_str(&format!(
                        "{},{},{:.9},{:.9}\n",
                        row.template.replace(',', ";"),
                        row.query_kind,
                        row.capacity_bits,
                        row.expected_info_gain_bits
                    ));
                }
                std::fs::write(&path, csv).map_err(|e| Error::io(path.display().to_string(), e))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
