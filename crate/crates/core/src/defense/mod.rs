//! The layered defense stack: input sanitization, spotlighting, multi-turn
//! anomaly detection with a retrieval-cutoff policy, and output filtering.

pub mod detector;
pub mod fingerprint;
pub mod output_filter;
pub mod sanitizer;
pub mod spotlight;

pub use detector::{
    apply_policy, auroc, jaccard, roc_evaluate, tpr_at_tnr, ConfidentialDoc, Detector,
    DetectorConfig, FeatureWeights, NgramModel, PolicyAction, RocReport, ThresholdSpec,
    TurnFeatures,
};
pub use output_filter::{FilterRegistry, REDACTION_MARK};
pub use sanitizer::{sanitize, SanitizeFlag, SanitizerRuleSet};
pub use spotlight::{assemble_plain, spotlight, PromptAssembly, SpotlightConfig, SYSTEM_PROMPT};

/// Enabled defenses with their parameters, in pipeline order: sanitizer and
/// spotlighting shape the prompt, the detector and policy watch the session,
/// the output filter scrubs delivered responses.
#[derive(Debug, Clone, Default)]
pub struct DefenseStack {
    pub sanitizer: Option<SanitizerRuleSet>,
    pub spotlight: Option<SpotlightConfig>,
    pub detector: Option<Detector>,
    pub output_filter: Option<FilterRegistry>,
}

impl DefenseStack {
    pub fn none() -> Self {
        DefenseStack::default()
    }

    /// Names of the enabled layers, for reports.
    pub fn enabled_names(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        if self.sanitizer.is_some() {
            names.push("sanitize");
        }
        if self.spotlight.is_some() {
            names.push("spotlight");
        }
        if self.detector.is_some() {
            names.push("detector");
        }
        if self.output_filter.is_some() {
            names.push("output-filter");
        }
        names
    }
}
