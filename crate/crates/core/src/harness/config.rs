//! Scenario configuration: a single human-editable TOML file per scenario.
//!
//! ```toml
//! id = "unprotected-9digit"
//! seed = 42
//! trials = 100
//! max_turns = 12
//! role = "intern"
//! strict_acl = true
//! bound_ell = 3.33          # optional per-query cap carried onto reports
//!
//! [secret]
//! kind = "digit-code"       # or "explicit" with `elements = [...]`
//! width = 9
//! value = "492867135"
//! belief = "digit-factored" # dense | digit-factored | interval
//!
//! [store]                   # optional document store
//! manifest = "docs/manifest.json"
//!
//! [oracle]
//! p_follow_injection = 0.0
//! # dp_epsilon = 3.04
//! [[oracle.rules]]
//! kind = "yes-no-predicate" # omit to match any kind
//! framing = "direct"        # omit to match any framing
//! behavior = "answer-truthfully"
//!
//! [attacker]
//! strategy = "greedy-info-gain"
//! lambda = 0.0
//! backoff = false
//! [[attacker.pool]]
//! template = "digit-value"
//! pos = 0
//!
//! [defense]
//! sanitize = false
//! spotlight = false
//! spotlight_fidelity = 1.0
//! detector = false
//! benign_corpus = "corpora/benign_train.txt"
//! output_filter = false
//! ```
//!
//! Relative paths resolve against the scenario file's directory.

use crate::attacker::{AttackEnvironment, AttackerPolicy, QueryTemplate, Strategy};
use crate::defense::{
    Detector, DetectorConfig, DefenseStack, FilterRegistry, SanitizerRuleSet, SpotlightConfig,
};
use crate::error::{Error, Result};
use crate::oracle::{ChannelSpec, DocumentStore};
use crate::secret::{BeliefRepr, SecretSpace};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecretKind {
    DigitCode,
    Explicit,
}

/// Shorthand for large explicit spaces: elements `<prefix>000..<prefix>N-1`,
/// zero-padded to a fixed width.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedElements {
    pub count: usize,
    #[serde(default)]
    pub prefix: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecretSection {
    pub kind: SecretKind,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub elements: Option<Vec<String>>,
    #[serde(default)]
    pub generated: Option<GeneratedElements>,
    /// The true secret; must be an element of the space.
    pub value: String,
    pub belief: BeliefRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoreSection {
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AttackerSection {
    pub strategy: Option<Strategy>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub backoff: bool,
    #[serde(default)]
    pub pool: Vec<QueryTemplate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefenseSection {
    #[serde(default)]
    pub sanitize: bool,
    #[serde(default)]
    pub spotlight: bool,
    #[serde(default = "default_fidelity")]
    pub spotlight_fidelity: f64,
    #[serde(default)]
    pub detector: bool,
    #[serde(default)]
    pub detector_config: Option<DetectorConfig>,
    /// Plain-text benign queries used to fit the detector (one per line, or
    /// conversation files whose `U:` lines are used).
    #[serde(default)]
    pub benign_corpus: Option<PathBuf>,
    #[serde(default)]
    pub output_filter: bool,
    #[serde(default = "default_shingle")]
    pub filter_shingle_len: usize,
    #[serde(default = "default_true")]
    pub filter_base64: bool,
}

fn default_fidelity() -> f64 {
    1.0
}

fn default_shingle() -> usize {
    crate::defense::fingerprint::DEFAULT_SHINGLE_LEN
}

fn default_true() -> bool {
    true
}

impl Default for DefenseSection {
    fn default() -> Self {
        DefenseSection {
            sanitize: false,
            spotlight: false,
            spotlight_fidelity: 1.0,
            detector: false,
            detector_config: None,
            benign_corpus: None,
            output_filter: false,
            filter_shingle_len: default_shingle(),
            filter_base64: true,
        }
    }
}

fn default_role() -> String {
    "intern".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u32,
    pub max_turns: usize,
    #[serde(default = "default_role")]
    pub role: String,
    #[serde(default = "default_true")]
    pub strict_acl: bool,
    #[serde(default)]
    pub bound_ell: Option<f64>,
    pub secret: SecretSection,
    #[serde(default)]
    pub store: Option<StoreSection>,
    pub oracle: ChannelSpec,
    #[serde(default)]
    pub attacker: AttackerSection,
    #[serde(default)]
    pub defense: DefenseSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_trials() -> u32 {
    1
}

/// A fully built scenario, ready to run.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub env: AttackEnvironment,
    pub policy: AttackerPolicy,
    pub defenses: DefenseStack,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config: ScenarioConfig =
            toml::from_str(&raw).map_err(|e| Error::config("scenario", e.to_string()))?;
        config.base_dir = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Toggle a defense layer by name: sanitize, spotlight, detector,
    /// output-filter, or dp.
    pub fn set_defense(&mut self, name: &str, on: bool) -> Result<()> {
        match name {
            "sanitize" => self.defense.sanitize = on,
            "spotlight" => self.defense.spotlight = on,
            "detector" => self.defense.detector = on,
            "output-filter" => self.defense.output_filter = on,
            "dp" => {
                if on {
                    if self.oracle.dp_epsilon.is_none() {
                        return Err(Error::config(
                            "defense.dp",
                            "cannot enable dp without oracle.dp_epsilon in the config",
                        ));
                    }
                } else {
                    self.oracle.dp_epsilon = None;
                }
            }
            other => {
                return Err(Error::config(
                    "defense",
                    format!("unknown defense '{other}'"),
                ))
            }
        }
        Ok(())
    }

    fn secret_space(&self) -> Result<SecretSpace> {
        match self.secret.kind {
            SecretKind::DigitCode => {
                let width = self.secret.width.ok_or_else(|| {
                    Error::config("secret.width", "digit-code spaces need a width")
                })?;
                SecretSpace::digit_code(format!("{}-space", self.id), width)
            }
            SecretKind::Explicit => {
                let elements = match (&self.secret.elements, &self.secret.generated) {
                    (Some(e), None) => e.clone(),
                    (None, Some(g)) => {
                        let pad = (g.count.max(2) - 1).to_string().len();
                        (0..g.count)
                            .map(|i| format!("{}{:0pad$}", g.prefix, i, pad = pad))
                            .collect()
                    }
                    _ => {
                        return Err(Error::config(
                            "secret",
                            "explicit spaces need exactly one of `elements` or `generated`",
                        ))
                    }
                };
                SecretSpace::explicit(format!("{}-space", self.id), elements)
            }
        }
    }

    /// Validate the config and build the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        if self.trials == 0 {
            return Err(Error::config("trials", "trials must be >= 1"));
        }
        if self.max_turns == 0 {
            return Err(Error::config("max_turns", "max_turns must be >= 1"));
        }
        if let Some(eps) = self.oracle.dp_epsilon {
            if eps < 0.0 {
                return Err(Error::config("oracle.dp_epsilon", "epsilon must be >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.oracle.p_follow_injection) {
            return Err(Error::config(
                "oracle.p_follow_injection",
                "must be in [0,1]",
            ));
        }
        if !(0.0..=1.0).contains(&self.defense.spotlight_fidelity) {
            return Err(Error::config(
                "defense.spotlight_fidelity",
                "must be in [0,1]",
            ));
        }

        let space = self.secret_space()?;
        let secret_index = space.index_of(&self.secret.value).ok_or_else(|| {
            Error::config(
                "secret.value",
                format!("'{}' is not an element of the secret space", self.secret.value),
            )
        })?;

        let store = match &self.store {
            Some(section) => DocumentStore::load_manifest(&self.resolve(&section.manifest))?,
            None => DocumentStore::default(),
        };

        // every doc referenced by the attacker pool must exist
        for template in &self.attacker.pool {
            if let QueryTemplate::InjectedDoc { doc_id } = template {
                if store.get(doc_id).is_none() {
                    return Err(Error::config(
                        "attacker.pool",
                        format!("injected-doc references unknown doc_id '{doc_id}'"),
                    ));
                }
            }
        }

        let policy = AttackerPolicy {
            strategy: self.attacker.strategy.ok_or_else(|| {
                Error::config("attacker.strategy", "an attacker strategy is required")
            })?,
            lambda: self.attacker.lambda,
            candidate_pool: self.attacker.pool.clone(),
            backoff: self.attacker.backoff,
        };
        policy.validate()?;

        let defenses = self.build_defenses(&store)?;

        let env = AttackEnvironment {
            scenario_id: self.id.clone(),
            space,
            secret_index,
            channel: self.oracle.clone(),
            store,
            role: self.role.clone(),
            strict_acl: self.strict_acl,
            belief_repr: self.secret.belief,
            bound_ell: self.bound_ell,
        };

        Ok(Scenario {
            config: self.clone(),
            env,
            policy,
            defenses,
        })
    }

    fn build_defenses(&self, store: &DocumentStore) -> Result<DefenseStack> {
        let mut stack = DefenseStack::none();
        if self.defense.sanitize {
            stack.sanitizer = Some(SanitizerRuleSet::default());
        }
        if self.defense.spotlight {
            stack.spotlight = Some(SpotlightConfig {
                fidelity: self.defense.spotlight_fidelity,
            });
        }
        if self.defense.detector {
            let corpus_path = self.defense.benign_corpus.as_ref().ok_or_else(|| {
                Error::config(
                    "defense.benign_corpus",
                    "detector needs a benign corpus to fit on",
                )
            })?;
            let lines = load_query_lines(&self.resolve(corpus_path))?;
            let config = self.defense.detector_config.clone().unwrap_or_default();
            stack.detector = Some(Detector::fit(&config, &lines)?);
        }
        if self.defense.output_filter {
            stack.output_filter = Some(FilterRegistry::from_store(
                store,
                self.defense.filter_shingle_len,
                self.defense.filter_base64,
            )?);
        }
        Ok(stack)
    }

    /// TOML value with the defense-stack fields removed (the defense section,
    /// the privacy wrapper, and the id). Two configs are comparable for
    /// defense comparison iff these values are equal.
    pub fn comparable_value(&self) -> Result<toml::Value> {
        let mut value = toml::Value::try_from(self.clone())
            .map_err(|e| Error::config("scenario", e.to_string()))?;
        if let Some(table) = value.as_table_mut() {
            table.remove("id");
            table.remove("defense");
            table.remove("base_dir");
            if let Some(oracle) = table.get_mut("oracle").and_then(|o| o.as_table_mut()) {
                oracle.remove("dp_epsilon");
            }
        }
        Ok(value)
    }
}

/// Read benign query lines from either a plain list (one query per line) or
/// a role-prefixed conversation file (the `U:` lines).
pub fn load_query_lines(path: &Path) -> Result<Vec<String>> {
    let raw =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = Vec::new();
    for line in raw.lines() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') || line == "---" {
            continue;
        }
        if let Some(q) = line.strip_prefix("U: ") {
            lines.push(crate::harness::corpus::unescape_line(q));
        } else if !line.starts_with("A: ") {
            lines.push(line.to_string());
        }
    }
    if lines.is_empty() {
        return Err(Error::config(
            "benign_corpus",
            format!("no query lines found in {}", path.display()),
        ));
    }
    Ok(lines)
}
