//! End-to-end pipeline per domain and the M1-M3 measurement fold.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::analyzer::{explore_views, AuditLog, ExploreOptions, NoticeModel};
use crate::db::{EnforcementRecord, EnforcementStep, RecordStatus, DEFAULT_STEP_DELAY_MS, SCHEMA_VERSION};
use crate::decision::{consent_enabled, plan, ClickPlan, Provider, SerializedNotice};
use crate::detector::{detect_in_session, ClassifierHandle};
use crate::dom::{SelectorPath, SelectorStrategy};
use crate::driver::{Browser, DriverError};
use crate::roles::Role;

pub const DEFAULT_WORKERS: usize = 4;
pub const DEFAULT_DOMAIN_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub region: String,
    pub classifier: ClassifierHandle,
    pub provider: Provider,
    pub explore: ExploreOptions,
    pub scheme: String,
    /// Fixed record timestamp; the current time when unset.
    pub now: Option<DateTime<Utc>>,
    pub domain_timeout: Duration,
    /// Page text test; domains failing it are skipped with stage `language`.
    pub language_hook: Option<LanguageHook>,
}

/// Returns whether the visible page text is in the wanted language.
pub type LanguageHook = fn(&str) -> bool;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            region: "default".into(),
            classifier: ClassifierHandle::baseline(),
            provider: Provider::Rules,
            explore: ExploreOptions::default(),
            scheme: "https".into(),
            now: None,
            domain_timeout: DEFAULT_DOMAIN_TIMEOUT,
            language_hook: None,
        }
    }
}

/// Per-domain measurement flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MFlags {
    pub m1_notice: bool,
    pub m2_no_choice: bool,
    pub m3_default_enabled: bool,
}

/// Everything one pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub record: EnforcementRecord,
    pub model: Option<NoticeModel>,
    pub serialized: Option<SerializedNotice>,
    pub plan: Option<ClickPlan>,
    pub audit: AuditLog,
    pub flags: MFlags,
}

pub fn domain_url(scheme: &str, domain: &str) -> String {
    format!("{scheme}://{domain}/")
}

fn normalize_domain(domain: &str) -> String {
    let d = domain.trim().to_lowercase();
    let d = d.split("://").last().unwrap_or(&d).to_string();
    let d = d.split('/').next().unwrap_or("").to_string();
    d.trim_start_matches("www.").to_string()
}

fn empty_selector() -> SelectorPath {
    SelectorPath::new("", SelectorStrategy::ByNthChildChain)
}

/// Status for a plan, before any step is executed.
fn plan_status(model: &NoticeModel, plan: &ClickPlan) -> Option<RecordStatus> {
    if !plan.no_opt_out {
        return Some(RecordStatus::Plan);
    }
    if model.dedicated_page {
        Some(RecordStatus::DedicatedPage)
    } else if model.accept_only {
        Some(RecordStatus::AcceptOnly)
    } else {
        None
    }
}

/// M2: exactly one interactable element and no settings page; M3: the plan flips a Type A
/// element that started out consent-enabled.
pub fn model_flags(model: &NoticeModel, plan: Option<&ClickPlan>, sn: Option<&SerializedNotice>) -> MFlags {
    let interactable = model
        .elements()
        .filter(|e| e.role != Some(Role::Unknown))
        .count();
    let m3 = match (plan, sn) {
        (Some(p), Some(sn)) => p.steps.iter().any(|s| {
            sn.outline
                .views
                .get(s.view_index)
                .and_then(|v| v.get(s.tag))
                .is_some_and(|e| e.role == Some(Role::TypeA) && e.state.is_some_and(|st| consent_enabled(e, st)))
        }),
        _ => false,
    };
    MFlags {
        m1_notice: true,
        m2_no_choice: interactable == 1 && !model.dedicated_page,
        m3_default_enabled: m3,
    }
}

struct Failure {
    stage: &'static str,
    message: String,
}

fn fail<E: std::fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> Failure {
    move |e| Failure {
        stage,
        message: e.to_string(),
    }
}

/// Runs navigate, detect, explore, serialize and plan for one domain.
/// Failures are encoded in the record status.
pub fn analyze_domain<B: Browser + ?Sized>(browser: &mut B, domain: &str, config: &PipelineConfig) -> PipelineOutcome {
    let domain = normalize_domain(domain);
    let url = domain_url(&config.scheme, &domain);
    let mut out = PipelineOutcome {
        record: EnforcementRecord {
            schema_version: SCHEMA_VERSION,
            domain: domain.clone(),
            region: config.region.clone(),
            generated_at: config.now.unwrap_or_else(Utc::now),
            status: RecordStatus::Error,
            notice_selector: empty_selector(),
            frame_selector: None,
            steps: Vec::new(),
            serialized_notice: String::new(),
            plan_text: String::new(),
            error_stage: None,
        },
        model: None,
        serialized: None,
        plan: None,
        audit: AuditLog::new(),
        flags: MFlags::default(),
    };
    if let Err(f) = run_stages(browser, &url, config, &mut out) {
        log::warn!("{domain}: {} failed: {}", f.stage, f.message);
        out.record.status = RecordStatus::Error;
        out.record.steps.clear();
        out.record.error_stage = Some(f.stage.to_string());
        out.audit.push(&domain, 0, None, f.stage, "error", &f.message);
    }
    out
}

fn run_stages<B: Browser + ?Sized>(
    browser: &mut B,
    url: &str,
    config: &PipelineConfig,
    out: &mut PipelineOutcome,
) -> Result<(), Failure> {
    let landing = browser.navigate(url).map_err(fail("navigate"))?;
    if let Some(hook) = config.language_hook {
        let text: Vec<&str> = landing
            .elements
            .iter()
            .filter(|e| crate::dom::is_visible(e) && e.has_own_text())
            .map(|e| e.own_text.as_str())
            .collect();
        if !hook(&text.join(" ")) {
            return Err(Failure {
                stage: "language",
                message: "page language filtered out".into(),
            });
        }
    }
    let Some(notice) = detect_in_session(browser, &config.classifier).map_err(fail("detect"))? else {
        out.record.status = RecordStatus::NoNotice;
        return Ok(());
    };
    out.record.notice_selector = notice.selector().clone();
    out.record.frame_selector = notice.frame.clone();
    out.flags.m1_notice = true;

    let model = explore_views(browser, url, &notice, &config.classifier, config.explore, &mut out.audit)
        .map_err(fail("explore"))?;
    out.model = Some(model.clone());
    let sn = match model.serialize() {
        Ok(sn) => sn,
        Err(e) => {
            if model.dedicated_page {
                out.record.status = RecordStatus::DedicatedPage;
                out.flags = model_flags(&model, None, None);
                return Ok(());
            }
            return Err(fail("serialize")(e));
        }
    };
    out.record.serialized_notice = sn.text.clone();
    out.serialized = Some(sn.clone());
    let p = plan(&sn, &config.provider).map_err(fail("plan"))?;
    out.plan = Some(p.clone());
    out.record.plan_text = p.rendered.clone();
    out.flags = model_flags(&model, Some(&p), Some(&sn));

    let status = plan_status(&model, &p).ok_or_else(|| Failure {
        stage: "plan",
        message: "no opt-out route found".into(),
    })?;
    out.record.status = status;
    if status == RecordStatus::Plan {
        out.record.steps = p
            .steps
            .iter()
            .map(|s| {
                let el = model.find(s.tag).ok_or_else(|| Failure {
                    stage: "plan",
                    message: format!("{} not in model", s.tag),
                })?;
                Ok(EnforcementStep {
                    view_index: s.view_index,
                    tag_rendered: s.tag.to_string(),
                    selector: el.click_target.clone(),
                    expected_state_before: el.state.switch_state(),
                    delay_after_ms: DEFAULT_STEP_DELAY_MS,
                })
            })
            .collect::<Result<_, Failure>>()?;
    }
    Ok(())
}

pub fn run_pipeline<B: Browser + ?Sized>(browser: &mut B, domain: &str, config: &PipelineConfig) -> EnforcementRecord {
    analyze_domain(browser, domain, config).record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnforceStatus {
    Enforced,
    NoticeAbsent,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnforceOutcome {
    pub status: EnforceStatus,
    pub clicks: usize,
    pub failed_step: Option<String>,
}

/// Replays a record's steps on a fresh page load.
pub fn enforce_record<B: Browser + ?Sized>(browser: &mut B, record: &EnforcementRecord, url: &str) -> Result<EnforceOutcome, DriverError> {
    browser.navigate(url)?;
    if let Some(f) = &record.frame_selector {
        if browser.switch_to_frame(Some(f)).is_err() {
            return Ok(EnforceOutcome {
                status: EnforceStatus::NoticeAbsent,
                clicks: 0,
                failed_step: None,
            });
        }
    }
    let page = browser.snapshot()?;
    if page.query_unique(&record.notice_selector.css).is_none_or(|e| !crate::dom::is_visible(e)) {
        return Ok(EnforceOutcome {
            status: EnforceStatus::NoticeAbsent,
            clicks: 0,
            failed_step: None,
        });
    }
    let mut clicks = 0;
    for step in &record.steps {
        let out = browser.click(&step.selector)?;
        if !out.clicked {
            return Ok(EnforceOutcome {
                status: EnforceStatus::Failed,
                clicks,
                failed_step: Some(step.tag_rendered.clone()),
            });
        }
        clicks += 1;
        browser.pause(step.delay_after_ms);
    }
    browser.switch_to_frame(None)?;
    Ok(EnforceOutcome {
        status: EnforceStatus::Enforced,
        clicks,
        failed_step: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainResult {
    pub domain: String,
    pub status: RecordStatus,
    pub m_flags: MFlags,
}

impl DomainResult {
    pub fn from_outcome(o: &PipelineOutcome) -> Self {
        DomainResult {
            domain: o.record.domain.clone(),
            status: o.record.status,
            m_flags: o.flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// DEDICATED_PAGE domains count towards M1.
    pub m1_includes_dedicated_page: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub region: String,
    pub domains_total: usize,
    pub domains_analyzed: usize,
    pub m1_with_notice: usize,
    pub m2_no_choice: usize,
    pub m3_default_enabled: usize,
    pub per_domain: Vec<DomainResult>,
    pub metadata: ReportMetadata,
}

impl MeasurementReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn in_m1(s: RecordStatus) -> bool {
    matches!(s, RecordStatus::Plan | RecordStatus::AcceptOnly | RecordStatus::DedicatedPage)
}

/// Pure fold over per-domain results.
pub fn fold_report(region: &str, results: &[DomainResult]) -> MeasurementReport {
    let m1: Vec<&DomainResult> = results.iter().filter(|r| in_m1(r.status)).collect();
    MeasurementReport {
        region: region.to_string(),
        domains_total: results.len(),
        domains_analyzed: results.iter().filter(|r| r.status != RecordStatus::Error).count(),
        m1_with_notice: m1.len(),
        m2_no_choice: m1.iter().filter(|r| r.m_flags.m2_no_choice).count(),
        m3_default_enabled: m1.iter().filter(|r| r.m_flags.m3_default_enabled).count(),
        per_domain: results.to_vec(),
        metadata: ReportMetadata {
            m1_includes_dedicated_page: true,
        },
    }
}

/// Runs the pipeline over `domains` on a pool of sessions, in input order.
pub fn run_all<B, F>(domains: &[String], config: &PipelineConfig, workers: usize, make_browser: F) -> Vec<PipelineOutcome>
where
    B: Browser,
    F: Fn() -> Result<B, DriverError> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<PipelineOutcome>>> = Mutex::new(vec![None; domains.len()]);
    let workers = workers.clamp(1, domains.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut browser: Option<B> = None;
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(domain) = domains.get(i) else { break };
                    let started = Instant::now();
                    let outcome = match browser.as_mut() {
                        Some(b) => analyze_domain(b, domain, config),
                        None => match make_browser() {
                            Ok(b) => analyze_domain(browser.insert(b), domain, config),
                            Err(e) => error_outcome(domain, config, "session", &e.to_string()),
                        },
                    };
                    let outcome = if started.elapsed() > config.domain_timeout {
                        error_outcome(domain, config, "timeout", "domain exceeded its time limit")
                    } else {
                        outcome
                    };
                    slots.lock().expect("results lock")[i] = Some(outcome);
                }
                if let Some(mut b) = browser {
                    let _ = b.close();
                }
            });
        }
    });
    slots
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|o| o.expect("every domain ran"))
        .collect()
}

fn error_outcome(domain: &str, config: &PipelineConfig, stage: &str, message: &str) -> PipelineOutcome {
    let domain = normalize_domain(domain);
    let mut audit = AuditLog::new();
    audit.push(&domain, 0, None, stage, "error", message);
    PipelineOutcome {
        record: EnforcementRecord {
            schema_version: SCHEMA_VERSION,
            domain,
            region: config.region.clone(),
            generated_at: config.now.unwrap_or_else(Utc::now),
            status: RecordStatus::Error,
            notice_selector: empty_selector(),
            frame_selector: None,
            steps: Vec::new(),
            serialized_notice: String::new(),
            plan_text: String::new(),
            error_stage: Some(stage.to_string()),
        },
        model: None,
        serialized: None,
        plan: None,
        audit,
        flags: MFlags::default(),
    }
}

/// Pipeline over a domain list followed by the fold.
pub fn measure<B, F>(domains: &[String], config: &PipelineConfig, workers: usize, make_browser: F) -> MeasurementReport
where
    B: Browser,
    F: Fn() -> Result<B, DriverError> + Sync,
{
    measure_outcomes(domains, config, workers, make_browser).0
}

/// [`measure`] that also hands back the per-domain outcomes.
pub fn measure_outcomes<B, F>(
    domains: &[String],
    config: &PipelineConfig,
    workers: usize,
    make_browser: F,
) -> (MeasurementReport, Vec<PipelineOutcome>)
where
    B: Browser,
    F: Fn() -> Result<B, DriverError> + Sync,
{
    let outcomes = run_all(domains, config, workers, make_browser);
    let results: Vec<DomainResult> = outcomes.iter().map(DomainResult::from_outcome).collect();
    (fold_report(&config.region, &results), outcomes)
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "the", "and", "to", "of", "a", "in", "is", "you", "we", "our", "for", "on", "with", "this", "your", "are", "use",
];

/// Default language hook: at least a tenth of the words are common English
/// function words.
pub fn looks_english(text: &str) -> bool {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    if words.is_empty() {
        return true;
    }
    let hits = words.iter().filter(|w| ENGLISH_STOPWORDS.contains(&w.as_str())).count();
    hits * 10 >= words.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(domain: &str, status: RecordStatus, m2: bool, m3: bool) -> DomainResult {
        DomainResult {
            domain: domain.into(),
            status,
            m_flags: MFlags {
                m1_notice: in_m1(status),
                m2_no_choice: m2,
                m3_default_enabled: m3,
            },
        }
    }

    #[test]
    fn empty_list_is_all_zero() {
        let rep = fold_report("uk", &[]);
        assert_eq!(
            (rep.domains_total, rep.m1_with_notice, rep.m2_no_choice, rep.m3_default_enabled),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn fold_counts_and_bounds() {
        let rs = [
            r("a.test", RecordStatus::Plan, false, true),
            r("b.test", RecordStatus::AcceptOnly, true, false),
            r("c.test", RecordStatus::NoNotice, false, false),
            r("d.test", RecordStatus::DedicatedPage, false, false),
            r("e.test", RecordStatus::Error, false, false),
        ];
        let rep = fold_report("uk", &rs);
        assert_eq!(rep.domains_total, 5);
        assert_eq!(rep.domains_analyzed, 4);
        assert_eq!(rep.m1_with_notice, 3);
        assert_eq!(rep.m2_no_choice, 1);
        assert_eq!(rep.m3_default_enabled, 1);
        assert_eq!(rep.to_json(), fold_report("uk", &rs).to_json());
    }

    #[test]
    fn english_hook() {
        assert!(looks_english("We use cookies to improve your experience on our website."));
        assert!(!looks_english("Wir verwenden Cookies, um Ihre Erfahrung auf unserer Webseite zu verbessern."));
    }

    #[test]
    fn domains_are_normalized() {
        assert_eq!(normalize_domain("https://www.Example.test/path"), "example.test");
        assert_eq!(normalize_domain("example.test"), "example.test");
    }
}
