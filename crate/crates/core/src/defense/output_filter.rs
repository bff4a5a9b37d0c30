//! Output filtering: scans delivered responses for registry literals,
//! verbatim spans of confidential documents, and base64 runs that decode to
//! either, replacing matches with `[REDACTED]`.

use crate::defense::fingerprint::{matching_mask, shingles, MIN_SHINGLE_LEN};
use crate::error::{Error, Result};
use crate::oracle::{DocumentStore, ObsKind, Observation};
use base64::engine::general_purpose::{STANDARD, STANDARD_NO_PAD};
use base64::Engine;
use once_cell::sync::Lazy;
use regex::Regex;
use std::collections::HashSet;

pub const REDACTION_MARK: &str = "[REDACTED]";

static BASE64_RUN_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"[A-Za-z0-9+/]{16,}={0,2}").unwrap());

#[derive(Debug, Clone)]
struct FingerprintedDoc {
    doc_id: String,
    acl: Vec<String>,
    shingles: HashSet<String>,
}

/// Registry of sensitive literals and confidential-document fingerprints.
#[derive(Debug, Clone)]
pub struct FilterRegistry {
    literals: Vec<String>,
    /// Documents owning each literal (index-aligned with `literals`); a role
    /// admitted by an owning document bypasses that literal's redaction.
    literal_owners: Vec<Vec<usize>>,
    docs: Vec<FingerprintedDoc>,
    shingle_len: usize,
    base64_check: bool,
}

impl FilterRegistry {
    pub fn from_store(
        store: &DocumentStore,
        shingle_len: usize,
        base64_check: bool,
    ) -> Result<Self> {
        if shingle_len < MIN_SHINGLE_LEN {
            return Err(Error::config(
                "output_filter.shingle_len",
                format!("shingle length must be >= {MIN_SHINGLE_LEN}, got {shingle_len}"),
            ));
        }
        let docs: Vec<FingerprintedDoc> = store
            .confidential_bodies()
            .map(|d| FingerprintedDoc {
                doc_id: d.doc_id.clone(),
                acl: d.acl.clone(),
                shingles: shingles(&d.body, shingle_len),
            })
            .collect();
        let literals: Vec<String> = store.registry().to_vec();
        let literal_owners = literals
            .iter()
            .map(|lit| {
                store
                    .documents()
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.body.contains(lit.as_str()))
                    .filter_map(|(_, d)| {
                        docs.iter().position(|f| f.doc_id == d.doc_id)
                    })
                    .collect()
            })
            .collect();
        Ok(FilterRegistry {
            literals,
            literal_owners,
            docs,
            shingle_len,
            base64_check,
        })
    }

    pub fn shingle_len(&self) -> usize {
        self.shingle_len
    }

    fn doc_allows(doc: &FingerprintedDoc, role: &str) -> bool {
        doc.acl.iter().any(|r| r == role)
    }

    fn decoded_is_sensitive(&self, decoded: &str, role: &str) -> bool {
        if self
            .literals
            .iter()
            .zip(&self.literal_owners)
            .any(|(lit, owners)| {
                decoded.contains(lit.as_str())
                    && !owners
                        .iter()
                        .any(|&i| Self::doc_allows(&self.docs[i], role))
            })
        {
            return true;
        }
        self.docs.iter().any(|d| {
            !Self::doc_allows(d, role)
                && crate::defense::fingerprint::shares_shingle(decoded, &d.shingles, self.shingle_len)
        })
    }

    /// Redact sensitive content from `text` for the given role. Returns the
    /// cleaned text and whether anything was removed.
    pub fn filter_text(&self, text: &str, role: &str) -> (String, bool) {
        let mut out = text.to_string();
        let mut changed = false;

        // base64 runs first, before literal replacement can split them
        if self.base64_check {
            let mut replaced = Vec::new();
            for m in BASE64_RUN_RE.find_iter(&out) {
                let run = m.as_str();
                let decoded = STANDARD
                    .decode(run)
                    .or_else(|_| STANDARD_NO_PAD.decode(run.trim_end_matches('=')))
                    .ok()
                    .map(|bytes| String::from_utf8_lossy(&bytes).into_owned());
                if let Some(decoded) = decoded {
                    if self.decoded_is_sensitive(&decoded, role) {
                        replaced.push(run.to_string());
                    }
                }
            }
            for run in replaced {
                out = out.replace(&run, REDACTION_MARK);
                changed = true;
            }
        }

        // verbatim spans of confidential documents
        for doc in &self.docs {
            if Self::doc_allows(doc, role) {
                continue;
            }
            let mask = matching_mask(&out, &doc.shingles, self.shingle_len);
            if mask.iter().any(|&m| m) {
                out = replace_masked_runs(&out, &mask);
                changed = true;
            }
        }

        // registry literals
        for (lit, owners) in self.literals.iter().zip(&self.literal_owners) {
            let authorized = owners.iter().any(|&i| Self::doc_allows(&self.docs[i], role));
            if !authorized && out.contains(lit.as_str()) {
                out = out.replace(lit.as_str(), REDACTION_MARK);
                changed = true;
            }
        }

        (out, changed)
    }

    /// Filter a delivered observation. When anything was removed the
    /// observation kind becomes `Redacted`; exfil target markers are kept so
    /// the attempt itself stays visible to the detector.
    pub fn filter(&self, obs: &Observation, role: &str) -> Observation {
        let payload = match &obs.payload {
            Some(p) => p,
            None => return obs.clone(),
        };
        let (clean, changed) = self.filter_text(payload, role);
        if !changed {
            return obs.clone();
        }
        Observation {
            kind: ObsKind::Redacted,
            symbol: crate::kernel::Symbol::Redacted,
            payload: Some(clean),
            exfil_target: obs.exfil_target.clone(),
        }
    }
}

fn replace_masked_runs(text: &str, mask: &[bool]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if mask[i] {
            out.push_str(REDACTION_MARK);
            while i < chars.len() && mask[i] {
                i += 1;
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Symbol;
    use crate::oracle::{Document, Sensitivity};

    fn store() -> DocumentStore {
        DocumentStore::new(
            vec![
                Document {
                    doc_id: "project_plan".into(),
                    body: "Project plan. The project code is 492867135. Launch is in Q3 pending review."
                        .into(),
                    sensitivity: Sensitivity::Confidential,
                    acl: vec!["exec".into()],
                },
                Document {
                    doc_id: "cafeteria_menu".into(),
                    body: "Cafeteria menu for the week: soup, salad, pasta.".into(),
                    sensitivity: Sensitivity::Public,
                    acl: vec![],
                },
            ],
            vec!["492867135".into()],
        )
        .unwrap()
    }

    fn registry() -> FilterRegistry {
        FilterRegistry::from_store(&store(), 12, true).unwrap()
    }

    #[test]
    fn registry_literal_is_redacted() {
        let obs = Observation::answer(Symbol::Reveal, "The code you want: 492867135, enjoy.");
        let filtered = registry().filter(&obs, "intern");
        assert_eq!(filtered.kind, ObsKind::Redacted);
        let payload = filtered.payload.unwrap();
        assert!(!payload.contains("492867135"));
        assert!(payload.contains(REDACTION_MARK));
    }

    #[test]
    fn verbatim_confidential_span_is_redacted() {
        let obs = Observation::answer(Symbol::Exfil, "leak: Launch is in Q3 pending review.");
        let filtered = registry().filter(&obs, "intern");
        assert_eq!(filtered.kind, ObsKind::Redacted);
        assert!(!filtered.payload.unwrap().contains("Launch is in Q3"));
    }

    #[test]
    fn base64_encoded_confidential_text_is_redacted() {
        let encoded = STANDARD.encode("The project code is 492867135.");
        let obs = Observation::answer(Symbol::Reveal, format!("here you go: {encoded}"));
        let filtered = registry().filter(&obs, "intern");
        assert_eq!(filtered.kind, ObsKind::Redacted);
        assert!(!filtered.payload.unwrap().contains(&encoded));
    }

    #[test]
    fn public_nine_digit_number_passes_through() {
        let obs = Observation::answer(Symbol::Ack, "The office phone is 555123456, extension 9.");
        let filtered = registry().filter(&obs, "intern");
        assert_eq!(filtered.kind, ObsKind::Answer);
        assert!(filtered.payload.unwrap().contains("555123456"));
    }

    #[test]
    fn authorized_role_bypasses_per_document() {
        let obs = Observation::answer(Symbol::Reveal, "The project code is 492867135.");
        let filtered = registry().filter(&obs, "exec");
        assert_eq!(filtered.kind, ObsKind::Answer);
        assert!(filtered.payload.unwrap().contains("492867135"));
    }

    #[test]
    fn refusals_are_untouched() {
        let obs = Observation::refusal("nope");
        let filtered = registry().filter(&obs, "intern");
        assert_eq!(filtered.kind, ObsKind::Refusal);
        assert!(filtered.payload.is_none());
    }

    #[test]
    fn shingle_len_below_minimum_is_rejected() {
        assert!(FilterRegistry::from_store(&store(), 4, false).is_err());
    }
}
