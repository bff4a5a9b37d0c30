//! Scenario loading, seeded experiment execution, corpus synthesis, and
//! CSV/JSON exports.

pub mod config;
pub mod corpus;
pub mod runner;

pub use config::{load_query_lines, Scenario, ScenarioConfig};
pub use corpus::{
    generate_attacks, generate_benign, read_conversations, write_conversations, Conversation,
    CorpusSpec, Label,
};
pub use runner::{
    compare_defenses, evaluate_roc, export_compare, export_results, export_roc, pool_capacities,
    render_turns_csv, run_scenario, CompareReport, CompareRow, RocRun, ScenarioResults,
    ScenarioSummary, CSV_HEADER,
};
