//! Scenario execution, seeded trials, and bit-reproducible exports.
//!
//! Per scenario run the harness writes `<id>_turns.csv` with the fixed
//! column set
//! `trial,t,query_kind,info_gain_bits,cum_mi_bits,posterior_entropy_bits,fraction_revealed,detect_score,detect_flag,action`
//! and `<id>_summary.json`. Floats are printed with 9 fixed decimals so a
//! (config, seed) pair always produces byte-identical files. The defense
//! comparison additionally reports a mean wall-clock overhead column, which
//! is the one field exempt from byte reproducibility.

use crate::attacker::{AttackOutcome, AttackSession, QueryTemplate};
use crate::defense::{roc_evaluate, ConfidentialDoc, Detector, DetectorConfig, FeatureWeights, RocReport};
use crate::error::{Error, Result};
use crate::harness::config::{load_query_lines, Scenario};
use crate::harness::corpus::{generate_benign, read_conversations, Label};
use crate::leakage::kernel_capacity;
use crate::oracle::{assemble_effects, DocumentStore};
use crate::secret::BeliefState;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub struct TrialResult {
    pub trial: u32,
    pub seed: u64,
    pub outcome: AttackOutcome,
}

#[derive(Debug, Serialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub seed: u64,
    pub success: bool,
    pub turns_used: usize,
    pub cumulative_mi_bits: f64,
    pub final_fraction_revealed: f64,
    pub detection_events: usize,
}

#[derive(Debug, Serialize)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub seed: u64,
    pub trials: u32,
    pub max_turns: usize,
    pub defenses: Vec<String>,
    pub prior_entropy_bits: f64,
    pub success_rate: f64,
    pub mean_turns: f64,
    pub mean_cumulative_mi_bits: f64,
    pub total_detection_events: usize,
    /// Mean fraction revealed at each turn 1..=max_turns; finished trials
    /// carry their final value forward.
    pub mean_fraction_revealed_by_turn: Vec<f64>,
    pub per_trial: Vec<TrialSummary>,
}

#[derive(Debug)]
pub struct ScenarioResults {
    pub trials: Vec<TrialResult>,
    pub summary: ScenarioSummary,
    /// Wall-clock spent inside the trial loop.
    pub elapsed_ns: u128,
}

/// Run the configured number of seeded trials. Trial i uses seed
/// base_seed + i.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioResults> {
    let session = AttackSession::new(&scenario.policy, &scenario.env, &scenario.defenses)?;
    let started = Instant::now();
    let mut trials = Vec::with_capacity(scenario.config.trials as usize);
    for trial in 0..scenario.config.trials {
        let seed = scenario.config.seed.wrapping_add(trial as u64);
        let outcome = session.run(seed, scenario.config.max_turns)?;
        trials.push(TrialResult {
            trial: trial + 1,
            seed,
            outcome,
        });
    }
    let elapsed_ns = started.elapsed().as_nanos();
    let summary = summarize(scenario, &trials);
    Ok(ScenarioResults {
        trials,
        summary,
        elapsed_ns,
    })
}

fn summarize(scenario: &Scenario, trials: &[TrialResult]) -> ScenarioSummary {
    let n = trials.len() as f64;
    let successes = trials.iter().filter(|t| t.outcome.report.success).count();
    let mean_turns = trials
        .iter()
        .map(|t| t.outcome.report.turns_used as f64)
        .sum::<f64>()
        / n;
    let mean_mi = trials
        .iter()
        .map(|t| t.outcome.report.cumulative_mi_bits)
        .sum::<f64>()
        / n;
    let total_detections: usize = trials
        .iter()
        .map(|t| t.outcome.report.detection_events)
        .sum();

    let max_turns = scenario.config.max_turns;
    let mut by_turn = vec![0.0; max_turns];
    for t in trials {
        let fr = &t.outcome.report.fraction_revealed;
        for (turn, slot) in by_turn.iter_mut().enumerate() {
            let value = if fr.is_empty() {
                0.0
            } else {
                fr[turn.min(fr.len() - 1)]
            };
            *slot += value;
        }
    }
    for slot in &mut by_turn {
        *slot /= n;
    }

    ScenarioSummary {
        scenario_id: scenario.config.id.clone(),
        seed: scenario.config.seed,
        trials: scenario.config.trials,
        max_turns,
        defenses: scenario
            .defenses
            .enabled_names()
            .iter()
            .map(|s| s.to_string())
            .chain(
                scenario
                    .env
                    .channel
                    .dp_epsilon
                    .map(|e| format!("dp(eps={e})")),
            )
            .collect(),
        prior_entropy_bits: trials
            .first()
            .map(|t| t.outcome.transcript.prior_entropy_bits)
            .unwrap_or(0.0),
        success_rate: successes as f64 / n,
        mean_turns,
        mean_cumulative_mi_bits: mean_mi,
        total_detection_events: total_detections,
        mean_fraction_revealed_by_turn: by_turn,
        per_trial: trials
            .iter()
            .map(|t| TrialSummary {
                trial: t.trial,
                seed: t.seed,
                success: t.outcome.report.success,
                turns_used: t.outcome.report.turns_used,
                cumulative_mi_bits: t.outcome.report.cumulative_mi_bits,
                final_fraction_revealed: t.outcome.report.final_fraction_revealed(),
                detection_events: t.outcome.report.detection_events,
            })
            .collect(),
    }
}

pub const CSV_HEADER: &str = "trial,t,query_kind,info_gain_bits,cum_mi_bits,posterior_entropy_bits,fraction_revealed,detect_score,detect_flag,action";

/// Render the per-turn CSV. Fixed 9-decimal float formatting keeps exports
/// byte-identical for a given (config, seed).
pub fn render_turns_csv(results: &ScenarioResults) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for trial in &results.trials {
        let mut cum = 0.0;
        let prior = trial.outcome.transcript.prior_entropy_bits;
        for turn in &trial.outcome.transcript.turns {
            cum += turn.info_gain_bits;
            let fraction = if prior > 0.0 {
                (1.0 - turn.posterior_entropy_bits / prior).clamp(0.0, 1.0)
            } else {
                1.0
            };
            out.push_str(&format!(
                "{},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{},{}\n",
                trial.trial,
                turn.turn,
                turn.query_kind.as_str(),
                turn.info_gain_bits,
                cum,
                turn.posterior_entropy_bits,
                fraction,
                turn.detect_score,
                if turn.detection_flag { 1 } else { 0 },
                turn.action.as_str(),
            ));
        }
    }
    out
}

/// Write `<id>_turns.csv` and `<id>_summary.json` into `out_dir`.
pub fn export_results(results: &ScenarioResults, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let csv_path = out_dir.join(format!("{}_turns.csv", results.summary.scenario_id));
    let json_path = out_dir.join(format!("{}_summary.json", results.summary.scenario_id));
    std::fs::write(&csv_path, render_turns_csv(results))
        .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    let json = serde_json::to_string_pretty(&results.summary)
        .map_err(|e| Error::config("summary", e.to_string()))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(json_path.display().to_string(), e))?;
    Ok((csv_path, json_path))
}

// ---------------------------------------------------------------------------
// Defense comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub scenario_id: String,
    pub defenses: Vec<String>,
    pub success_rate: f64,
    pub mean_cumulative_mi_bits: f64,
    /// Fraction of trials with at least one detection event.
    pub detection_rate: f64,
    /// Fraction of synthetic benign conversations the stack's detector flags.
    pub benign_fpr: f64,
    /// Mean wall-clock per turn in nanoseconds. Not byte-reproducible.
    pub mean_wall_clock_per_turn_ns: u128,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Run a set of scenarios that differ only in their defense stacks and build
/// the comparison table. Any other difference is a validation error.
pub fn compare_defenses(scenarios: &[Scenario]) -> Result<CompareReport> {
    if scenarios.len() < 2 {
        return Err(Error::config(
            "compare",
            "need at least two scenario configs",
        ));
    }
    let reference = scenarios[0].config.comparable_value()?;
    for s in &scenarios[1..] {
        if s.config.comparable_value()? != reference {
            return Err(Error::config(
                "compare",
                format!(
                    "scenario '{}' differs from '{}' outside the defense stack",
                    s.config.id, scenarios[0].config.id
                ),
            ));
        }
    }

    // fixed seed so the synthetic benign traffic is shared across rows
    let benign = generate_benign(50, 0x6e19);
    let mut rows = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let results = run_scenario(scenario)?;
        let total_turns: usize = results
            .trials
            .iter()
            .map(|t| t.outcome.report.turns_used)
            .sum();
        let detection_rate = results
            .trials
            .iter()
            .filter(|t| t.outcome.report.detection_events > 0)
            .count() as f64
            / results.trials.len() as f64;
        let benign_fpr = match &scenario.defenses.detector {
            Some(detector) => {
                let confidential: Vec<ConfidentialDoc> = scenario
                    .env
                    .store
                    .confidential_bodies()
                    .map(|d| ConfidentialDoc::from_document(d, detector.shingle_len()))
                    .collect();
                let flagged = benign
                    .iter()
                    .filter(|c| {
                        detector.score_conversation(&c.turns, &confidential) > detector.theta()
                    })
                    .count();
                flagged as f64 / benign.len() as f64
            }
            None => 0.0,
        };
        rows.push(CompareRow {
            scenario_id: scenario.config.id.clone(),
            defenses: results.summary.defenses.clone(),
            success_rate: results.summary.success_rate,
            mean_cumulative_mi_bits: results.summary.mean_cumulative_mi_bits,
            detection_rate,
            benign_fpr,
            mean_wall_clock_per_turn_ns: if total_turns > 0 {
                results.elapsed_ns / total_turns as u128
            } else {
                0
            },
        });
    }
    Ok(CompareReport { rows })
}

pub fn export_compare(report: &CompareReport, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let csv_path = out_dir.join("compare.csv");
    let json_path = out_dir.join("compare.json");
    let mut csv = String::from(
        "scenario_id,defenses,success_rate,mean_cumulative_mi_bits,detection_rate,benign_fpr,mean_wall_clock_per_turn_ns\n",
    );
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{:.9},{:.9},{:.9},{:.9},{}\n",
            row.scenario_id,
            row.defenses.join("+"),
            row.success_rate,
            row.mean_cumulative_mi_bits,
            row.detection_rate,
            row.benign_fpr,
            row.mean_wall_clock_per_turn_ns,
        ));
    }
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::config("compare", e.to_string()))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(json_path.display().to_string(), e))?;
    Ok((csv_path, json_path))
}

// ---------------------------------------------------------------------------
// ROC evaluation over labeled conversation files
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct RocRun {
    pub theta_default: f64,
    pub feature: RocReport,
    pub keyword_baseline: RocReport,
}

/// Fit the detector on the benign file's queries, score both conversation
/// files, and sweep the threshold for the feature detector and the
/// keyword-only baseline.
pub fn evaluate_roc(
    config: &DetectorConfig,
    benign_path: &Path,
    attack_path: &Path,
    store: Option<&DocumentStore>,
) -> Result<RocRun> {
    let fit_lines = load_query_lines(benign_path)?;
    let feature = Detector::fit(config, &fit_lines)?;
    let baseline_config = DetectorConfig {
        weights: FeatureWeights::keyword_baseline(),
        ..config.clone()
    };
    let baseline = Detector::fit(&baseline_config, &fit_lines)?;

    let confidential: Vec<ConfidentialDoc> = store
        .map(|s| {
            s.confidential_bodies()
                .map(|d| ConfidentialDoc::from_document(d, config.shingle_len))
                .collect()
        })
        .unwrap_or_default();

    let benign_convs = read_conversations(benign_path)?;
    let attack_convs = read_conversations(attack_path)?;
    let score_all = |detector: &Detector, label: Label| -> Vec<f64> {
        benign_convs
            .iter()
            .chain(attack_convs.iter())
            .filter(|c| c.label == label)
            .map(|c| detector.score_conversation(&c.turns, &confidential))
            .collect()
    };

    let feature_report = roc_evaluate(
        &score_all(&feature, Label::Benign),
        &score_all(&feature, Label::Attack),
    )?;
    let baseline_report = roc_evaluate(
        &score_all(&baseline, Label::Benign),
        &score_all(&baseline, Label::Attack),
    )?;
    Ok(RocRun {
        theta_default: feature.theta(),
        feature: feature_report,
        keyword_baseline: baseline_report,
    })
}

pub fn export_roc(run: &RocRun, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let csv_path = out_dir.join("roc_points.csv");
    let json_path = out_dir.join("roc_summary.json");
    let mut csv = String::from("detector,threshold,fpr,tpr\n");
    for (name, report) in [
        ("feature", &run.feature),
        ("keyword-baseline", &run.keyword_baseline),
    ] {
        for (t, fpr, tpr) in &report.points {
            csv.push_str(&format!("{name},{t:.9},{fpr:.9},{tpr:.9}\n"));
        }
    }
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    let json =
        serde_json::to_string_pretty(run).map_err(|e| Error::config("roc", e.to_string()))?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(json_path.display().to_string(), e))?;
    Ok((csv_path, json_path))
}

// ---------------------------------------------------------------------------
// Per-query capacity listing
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct CapacityRow {
    pub template: String,
    pub query_kind: String,
    pub capacity_bits: f64,
    pub expected_info_gain_bits: f64,
}

/// Capacity and initial expected info gain for every candidate in the
/// scenario's pool, against the uniform starting belief.
pub fn pool_capacities(scenario: &Scenario) -> Result<Vec<CapacityRow>> {
    let belief = BeliefState::uniform(&scenario.env.space, scenario.env.belief_repr)?;
    let directive_present = scenario
        .env
        .store
        .documents()
        .iter()
        .any(|d| crate::oracle::find_directive(&d.body).is_some());
    let mut rows = Vec::new();
    for template in &scenario.policy.candidate_pool {
        let query = match template {
            QueryTemplate::BisectMedian => {
                crate::query::Query::value_threshold(belief.balanced_cutoff()?, crate::query::Framing::Direct)
            }
            QueryTemplate::FullGuessMap => {
                crate::query::Query::full_guess(scenario.env.space.element(belief.map_index()))
            }
            QueryTemplate::DigitThreshold { pos, min } => {
                crate::query::Query::digit_threshold(*pos, *min, crate::query::Framing::Direct)
            }
            QueryTemplate::DigitEquals { pos, digit } => {
                crate::query::Query::digit_equals(*pos, *digit, crate::query::Framing::Direct)
            }
            QueryTemplate::DigitValue { pos } => crate::query::Query::digit_value(*pos),
            QueryTemplate::ValueThreshold { cutoff } => {
                crate::query::Query::value_threshold(*cutoff, crate::query::Framing::Direct)
            }
            QueryTemplate::MetaRecon => crate::query::Query::meta_recon(),
            QueryTemplate::DirectAsk => crate::query::Query::direct_ask(),
            QueryTemplate::InjectedDoc { doc_id } => crate::query::Query::summarize_doc(doc_id.clone()),
        };
        let effects = assemble_effects(
            scenario.defenses.spotlight.as_ref().map(|s| s.fidelity),
            false,
            directive_present && query.kind == crate::query::QueryKind::InjectedContent,
            false,
        );
        let kernel = scenario
            .env
            .channel
            .kernel_for(&query, &scenario.env.space, &effects)?;
        rows.push(CapacityRow {
            template: format!("{template:?}"),
            query_kind: query.kind.as_str().to_string(),
            capacity_bits: kernel_capacity(&kernel, &scenario.env.space)?,
            expected_info_gain_bits: belief.expected_info_gain(&kernel, &scenario.env.space)?,
        });
    }
    Ok(rows)
}
