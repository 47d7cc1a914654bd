//! Per-domain enforcement records and the signed bundle the extension syncs.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decision::SwitchState;
use crate::dom::SelectorPath;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_STEP_DELAY_MS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RecordStatus {
    Plan,
    AcceptOnly,
    NoNotice,
    DedicatedPage,
    Error,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Plan => "PLAN",
            RecordStatus::AcceptOnly => "ACCEPT_ONLY",
            RecordStatus::NoNotice => "NO_NOTICE",
            RecordStatus::DedicatedPage => "DEDICATED_PAGE",
            RecordStatus::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnforcementStep {
    pub view_index: usize,
    pub tag_rendered: String,
    pub selector: SelectorPath,
    pub expected_state_before: Option<SwitchState>,
    pub delay_after_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnforcementRecord {
    pub schema_version: u32,
    pub domain: String,
    pub region: String,
    pub generated_at: DateTime<Utc>,
    pub status: RecordStatus,
    pub notice_selector: SelectorPath,
    /// Iframe holding the notice, when it is not in the top document.
    pub frame_selector: Option<SelectorPath>,
    pub steps: Vec<EnforcementStep>,
    pub serialized_notice: String,
    pub plan_text: String,
    /// Pipeline stage that failed, for `ERROR` records.
    pub error_stage: Option<String>,
}

impl EnforcementRecord {
    pub fn key(&self) -> (String, String) {
        (self.domain.clone(), self.region.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbManifest {
    pub schema_version: u32,
    pub record_count: usize,
    pub generated_at: Option<DateTime<Utc>>,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub manifest: DbManifest,
    pub records: Vec<EnforcementRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("record rejected: {0}")]
    ValidationFailed(String),
    #[error("stale write for {domain}/{region}: stored record is newer")]
    StaleWrite { domain: String, region: String },
    #[error("no records for region {0:?}")]
    EmptyRegion(String),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BundleError {
    #[error("bundle is not valid JSON: {0}")]
    Malformed(String),
    #[error("content hash mismatch")]
    HashMismatch,
    #[error("manifest does not describe the records: {0}")]
    ManifestMismatch(String),
    #[error("bundle is not in canonical form")]
    NotCanonical,
}

fn is_domain(d: &str) -> bool {
    !d.is_empty()
        && d.len() <= 253
        && d == d.to_lowercase()
        && !d.starts_with('.')
        && !d.ends_with('.')
        && d.contains('.')
        && d.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
}

pub fn validate_record(r: &EnforcementRecord) -> Result<(), DbError> {
    let fail = |m: String| Err(DbError::ValidationFailed(m));
    if r.schema_version != SCHEMA_VERSION {
        return fail(format!("schema_version {} != {SCHEMA_VERSION}", r.schema_version));
    }
    if !is_domain(&r.domain) {
        return fail(format!("{:?} is not a lowercase domain name", r.domain));
    }
    if r.region.trim().is_empty() {
        return fail("empty region".into());
    }
    match r.status {
        RecordStatus::Plan if r.steps.is_empty() => return fail("PLAN record without steps".into()),
        RecordStatus::Plan => {}
        s if !r.steps.is_empty() => return fail(format!("{} record with steps", s.as_str())),
        _ => {}
    }
    if r.steps.len() > 1 && r.steps.iter().any(|s| s.selector == r.notice_selector) {
        return fail("step targets the notice container".into());
    }
    if r.status == RecordStatus::Error && r.error_stage.is_none() {
        return fail("ERROR record without a stage".into());
    }
    Ok(())
}

fn canonical_records(records: &[EnforcementRecord]) -> Vec<u8> {
    serde_json::to_vec(records).expect("records serialize")
}

pub fn content_hash(records: &[EnforcementRecord]) -> String {
    hex::encode(Sha256::digest(canonical_records(records)))
}

fn render_bundle(bundle: &Bundle) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(bundle).expect("bundle serializes");
    out.push(b'\n');
    out
}

/// Builds the bundle for a set of records: sorted by domain, manifest
/// derived from content only.
pub fn build_bundle(mut records: Vec<EnforcementRecord>) -> Bundle {
    records.sort_by_key(EnforcementRecord::key);
    Bundle {
        manifest: DbManifest {
            schema_version: SCHEMA_VERSION,
            record_count: records.len(),
            generated_at: records.iter().map(|r| r.generated_at).max(),
            content_hash: content_hash(&records),
        },
        records,
    }
}

pub fn bundle_bytes(records: Vec<EnforcementRecord>) -> Vec<u8> {
    render_bundle(&build_bundle(records))
}

/// Checks a bundle as the extension does before applying it.
pub fn verify_bundle(bytes: &[u8]) -> Result<Bundle, BundleError> {
    let bundle: Bundle = serde_json::from_slice(bytes).map_err(|e| BundleError::Malformed(e.to_string()))?;
    if content_hash(&bundle.records) != bundle.manifest.content_hash {
        return Err(BundleError::HashMismatch);
    }
    let expected = build_bundle(bundle.records.clone());
    if expected.records != bundle.records {
        return Err(BundleError::ManifestMismatch("records are not sorted".into()));
    }
    if expected.manifest != bundle.manifest {
        return Err(BundleError::ManifestMismatch(format!(
            "expected {:?}, found {:?}",
            expected.manifest, bundle.manifest
        )));
    }
    if render_bundle(&bundle) != bytes {
        return Err(BundleError::NotCanonical);
    }
    Ok(bundle)
}

/// Upsert store keyed by (domain, region), persisted as JSON lines.
#[derive(Debug, Default)]
pub struct Db {
    path: Option<PathBuf>,
    records: BTreeMap<(String, String), EnforcementRecord>,
}

impl Db {
    pub fn in_memory() -> Self {
        Db::default()
    }

    /// Opens or creates a store file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let path = path.as_ref().to_path_buf();
        let mut db = Db {
            path: Some(path.clone()),
            records: BTreeMap::new(),
        };
        match fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let r: EnforcementRecord = serde_json::from_str(line)
                        .map_err(|e| DbError::Corrupt(format!("line {}: {e}", i + 1)))?;
                    db.records.insert(r.key(), r);
                }
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        Ok(db)
    }

    fn flush(&self) -> Result<(), DbError> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut text = String::new();
        for r in self.records.values() {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn put(&mut self, record: EnforcementRecord) -> Result<(), DbError> {
        validate_record(&record)?;
        if let Some(old) = self.records.get(&record.key()) {
            if old.generated_at > record.generated_at {
                return Err(DbError::StaleWrite {
                    domain: record.domain,
                    region: record.region,
                });
            }
        }
        self.records.insert(record.key(), record);
        self.flush()
    }

    pub fn get(&self, domain: &str, region: &str) -> Option<&EnforcementRecord> {
        self.records.get(&(domain.to_string(), region.to_string()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &EnforcementRecord> {
        self.records.values()
    }

    pub fn export_bundle(&self, region: &str) -> Result<Vec<u8>, DbError> {
        let records: Vec<EnforcementRecord> = self.records.values().filter(|r| r.region == region).cloned().collect();
        if records.is_empty() {
            return Err(DbError::EmptyRegion(region.to_string()));
        }
        Ok(bundle_bytes(records))
    }

    pub fn export_bundle_to(&self, region: &str, out: impl AsRef<Path>) -> Result<(), DbError> {
        fs::write(out, self.export_bundle(region)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::SelectorStrategy;
    use chrono::TimeZone;

    fn sel(css: &str) -> SelectorPath {
        SelectorPath::new(css, SelectorStrategy::ById)
    }

    pub(crate) fn record(domain: &str, secs: i64) -> EnforcementRecord {
        EnforcementRecord {
            schema_version: SCHEMA_VERSION,
            domain: domain.into(),
            region: "uk".into(),
            generated_at: Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap(),
            status: RecordStatus::Plan,
            notice_selector: sel("#banner"),
            frame_selector: None,
            steps: vec![EnforcementStep {
                view_index: 0,
                tag_rendered: "button0".into(),
                selector: sel("#reject"),
                expected_state_before: None,
                delay_after_ms: DEFAULT_STEP_DELAY_MS,
            }],
            serialized_notice: "button0 - reject all || button1 - accept all <end>".into(),
            plan_text: "Click button0.".into(),
            error_stage: None,
        }
    }

    #[test]
    fn put_get_and_validation() {
        let mut db = Db::in_memory();
        db.put(record("a.test", 0)).unwrap();
        assert_eq!(db.get("a.test", "uk").unwrap().plan_text, "Click button0.");
        let mut bad = record("b.test", 0);
        bad.steps.clear();
        assert!(matches!(db.put(bad), Err(DbError::ValidationFailed(_))));
        let mut upper = record("B.test", 0);
        upper.domain = "B.test".into();
        assert!(matches!(db.put(upper), Err(DbError::ValidationFailed(_))));
    }

    #[test]
    fn older_write_is_stale() {
        let mut db = Db::in_memory();
        db.put(record("a.test", 10)).unwrap();
        assert!(matches!(db.put(record("a.test", 5)), Err(DbError::StaleWrite { .. })));
        db.put(record("a.test", 20)).unwrap();
        assert_eq!(db.get("a.test", "uk").unwrap().generated_at.timestamp(), 1_700_000_020);
    }

    #[test]
    fn export_is_sorted_hashed_and_deterministic() {
        let mut db = Db::in_memory();
        for d in ["c.test", "a.test", "b.test"] {
            db.put(record(d, 1)).unwrap();
        }
        let bytes = db.export_bundle("uk").unwrap();
        assert_eq!(bytes, db.export_bundle("uk").unwrap());
        let b = verify_bundle(&bytes).unwrap();
        assert_eq!(b.manifest.record_count, 3);
        let domains: Vec<_> = b.records.iter().map(|r| r.domain.as_str()).collect();
        assert_eq!(domains, ["a.test", "b.test", "c.test"]);
        assert!(!bytes.contains(&b'\r'));
        assert!(matches!(db.export_bundle("us"), Err(DbError::EmptyRegion(_))));
    }

    #[test]
    fn every_single_byte_flip_is_rejected() {
        let bytes = bundle_bytes(vec![record("a.test", 0)]);
        for i in 0..bytes.len() {
            let mut t = bytes.clone();
            t[i] ^= 0x01;
            assert!(verify_bundle(&t).is_err(), "flip at {i} accepted");
        }
    }

    #[test]
    fn file_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.jsonl");
        {
            let mut db = Db::open(&path).unwrap();
            db.put(record("a.test", 0)).unwrap();
        }
        let db = Db::open(&path).unwrap();
        assert_eq!(db.get("a.test", "uk"), Some(&record("a.test", 0)));
    }
}
