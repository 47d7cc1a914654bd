//! JSON-lines audit trail of exploration and probing.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub domain: String,
    pub view: usize,
    pub tag: Option<String>,
    pub action: String,
    pub outcome: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditLog {
    pub records: Vec<AuditRecord>,
}

impl AuditLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, domain: &str, view: usize, tag: Option<String>, action: &str, outcome: &str, reason: &str) {
        self.records.push(AuditRecord {
            domain: domain.to_string(),
            view,
            tag,
            action: action.to_string(),
            outcome: outcome.to_string(),
            reason: reason.to_string(),
            evidence: None,
        });
    }

    pub fn attach_evidence(&mut self, evidence: serde_json::Value) {
        if let Some(r) = self.records.last_mut() {
            r.evidence = Some(evidence);
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}
