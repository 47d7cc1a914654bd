use std::sync::Arc;

use chrono::{TimeZone, Utc};
use optout_core::driver::SessionConfig;
use optout_core::fixtures::{self, expected_plan, expected_roles, model_roles, plan_labels, Fixture};
use optout_core::measure::{analyze_domain, PipelineConfig, PipelineOutcome};
use optout_core::sim::{SimBrowser, SiteRegistry};

fn config() -> PipelineConfig {
    PipelineConfig {
        scheme: "http".into(),
        now: Some(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()),
        ..PipelineConfig::default()
    }
}

fn run(reg: &Arc<SiteRegistry>, f: &Fixture) -> PipelineOutcome {
    let mut b = SimBrowser::new(reg.clone(), SessionConfig::default());
    analyze_domain(&mut b, &f.host(), &config())
}

fn actual_plan(o: &PipelineOutcome) -> Vec<Vec<String>> {
    match (&o.model, &o.plan) {
        (Some(m), Some(p)) => plan_labels(m, p),
        _ => Vec::new(),
    }
}

#[test]
fn corpus_matches_expectations() {
    let reg = fixtures::shared_registry();
    let mut mismatches = Vec::new();
    for f in fixtures::corpus() {
        let o = run(&reg, &f);
        let roles = o.model.as_ref().map(model_roles).unwrap_or_default();
        let status_ok = o.record.status == f.expect.status;
        let plan_ok = actual_plan(&o) == expected_plan(&f);
        let roles_ok = roles == expected_roles(&f);
        let flags_ok = o.flags.m2_no_choice == f.expect.m2 && o.flags.m3_default_enabled == f.expect.m3;
        let ok = status_ok && plan_ok && roles_ok && flags_ok;
        println!(
            "{:<20} status={:?} plan={:?} ok={}",
            f.name,
            o.record.status,
            actual_plan(&o),
            ok
        );
        if !ok && f.expect.known_failure.is_none() {
            mismatches.push(format!(
                "{}: status {:?}/{:?} plan {:?}/{:?} roles {:?}/{:?} flags {:?} err {:?} audit {}",
                f.name,
                o.record.status,
                f.expect.status,
                actual_plan(&o),
                expected_plan(&f),
                roles,
                expected_roles(&f),
                o.flags,
                o.record.error_stage,
                o.audit.to_jsonl()
            ));
        }
    }
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n\n"));
}

#[test]
fn known_failures_really_fail() {
    let reg = fixtures::shared_registry();
    for f in fixtures::corpus().iter().filter(|f| f.expect.known_failure.is_some()) {
        let o = run(&reg, f);
        assert!(
            o.record.status != f.expect.status || actual_plan(&o) != expected_plan(f),
            "{} unexpectedly passes",
            f.name
        );
    }
}
