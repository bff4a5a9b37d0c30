//! Document store with sensitivity labels and per-document ACLs, plus the
//! keyword retrieval layer.
//!
//! A store loads from a JSON manifest next to plain-text document bodies:
//!
//! ```json
//! {
//!   "documents": [
//!     { "id": "project_plan", "file": "project_plan.txt",
//!       "sensitivity": "confidential", "acl": ["exec"] }
//!   ],
//!   "registry": ["492867135"]
//! }
//! ```
//!
//! `file` paths are resolved relative to the manifest's directory. The
//! `registry` lists sensitive literals shared with the output filter.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sensitivity {
    Public,
    Internal,
    Confidential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub body: String,
    pub sensitivity: Sensitivity,
    /// Role ids allowed to retrieve this document.
    pub acl: Vec<String>,
}

impl Document {
    pub fn allows(&self, role: &str) -> bool {
        match self.sensitivity {
            Sensitivity::Public => true,
            _ => self.acl.iter().any(|r| r == role),
        }
    }
}

/// A retrieved excerpt handed to the assistant as context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Excerpt {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DocumentStore {
    documents: Vec<Document>,
    /// Known sensitive literals (e.g. 9-digit codes).
    registry: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct ManifestDoc {
    id: String,
    file: String,
    sensitivity: Sensitivity,
    #[serde(default)]
    acl: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    documents: Vec<ManifestDoc>,
    #[serde(default)]
    registry: Vec<String>,
}

impl DocumentStore {
    pub fn new(documents: Vec<Document>, registry: Vec<String>) -> Result<Self> {
        let mut ids = HashSet::new();
        for d in &documents {
            if !ids.insert(d.doc_id.as_str()) {
                return Err(Error::config(
                    "store.documents",
                    format!("duplicate doc_id '{}'", d.doc_id),
                ));
            }
            if d.sensitivity == Sensitivity::Confidential && d.acl.is_empty() {
                return Err(Error::config(
                    "store.documents",
                    format!("confidential doc '{}' has an empty acl", d.doc_id),
                ));
            }
        }
        Ok(DocumentStore {
            documents,
            registry,
        })
    }

    pub fn load_manifest(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let manifest: Manifest = serde_json::from_str(&raw)
            .map_err(|e| Error::config("store.manifest", e.to_string()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut documents = Vec::with_capacity(manifest.documents.len());
        for d in manifest.documents {
            let body_path = dir.join(&d.file);
            let body = std::fs::read_to_string(&body_path)
                .map_err(|e| Error::io(body_path.display().to_string(), e))?;
            documents.push(Document {
                doc_id: d.id,
                body,
                sensitivity: d.sensitivity,
                acl: d.acl,
            });
        }
        DocumentStore::new(documents, manifest.registry)
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn registry(&self) -> &[String] {
        &self.registry
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn confidential_bodies(&self) -> impl Iterator<Item = &Document> {
        self.documents
            .iter()
            .filter(|d| d.sensitivity == Sensitivity::Confidential)
    }

    /// Keyword retrieval. Returns excerpts of documents whose body or id
    /// matches any keyword. With `strict_acl` the requesting role must be
    /// admitted by each document's ACL; disabling it models the retrieval
    /// flaw where permission checks are skipped.
    pub fn retrieve(&self, keywords: &[String], role: &str, strict_acl: bool) -> Vec<Excerpt> {
        let lowered: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        self.documents
            .iter()
            .filter(|d| {
                let body = d.body.to_lowercase();
                let id = d.doc_id.to_lowercase();
                lowered.iter().any(|k| !k.is_empty() && (body.contains(k) || id.contains(k)))
            })
            .filter(|d| !strict_acl || d.allows(role))
            .map(|d| Excerpt {
                doc_id: d.doc_id.clone(),
                text: d.body.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> DocumentStore {
        DocumentStore::new(
            vec![
                Document {
                    doc_id: "project_plan".into(),
                    body: "Project plan. The project code is 492867135. Launch in Q3.".into(),
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

    #[test]
    fn strict_acl_denies_unauthorized_role() {
        let s = store();
        let hits = s.retrieve(&["project".into()], "intern", true);
        assert!(hits.is_empty());
    }

    #[test]
    fn disabled_acl_returns_confidential_excerpt() {
        let s = store();
        let hits = s.retrieve(&["project".into()], "intern", false);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc_id, "project_plan");
    }

    #[test]
    fn no_keyword_overlap_returns_empty() {
        let s = store();
        assert!(s.retrieve(&["holiday".into()], "exec", true).is_empty());
    }

    #[test]
    fn authorized_role_passes_acl() {
        let s = store();
        let hits = s.retrieve(&["project".into()], "exec", true);
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn confidential_doc_requires_acl() {
        let err = DocumentStore::new(
            vec![Document {
                doc_id: "x".into(),
                body: String::new(),
                sensitivity: Sensitivity::Confidential,
                acl: vec![],
            }],
            vec![],
        );
        assert!(err.is_err());
    }
}
