mod common;

use optout_core::analyzer::ExploreOptions;
use optout_core::db::RecordStatus;
use optout_core::driver::SessionConfig;
use optout_core::fixtures;
use optout_core::measure::{analyze_domain, PipelineConfig, PipelineOutcome};
use optout_core::sim::SimBrowser;

fn run_with(name: &str, explore: ExploreOptions) -> PipelineOutcome {
    let config = PipelineConfig {
        explore,
        ..common::config()
    };
    let mut b = SimBrowser::new(fixtures::shared_registry(), SessionConfig::default());
    analyze_domain(&mut b, &format!("{name}.test"), &config)
}

#[test]
fn click_budget_truncates_the_model() {
    let full = run_with("askubuntu", ExploreOptions::default());
    let full_model = full.model.unwrap();
    assert!(!full_model.truncated);
    let small = run_with(
        "askubuntu",
        ExploreOptions {
            click_budget: 3,
            ..ExploreOptions::default()
        },
    );
    assert_eq!(
        small.serialized.map(|sn| sn.text).as_deref(),
        Some("button0 - customize settings || button1 - accept all cookies <end>")
    );
    let m = small.model.expect("truncated model is still returned");
    assert!(m.truncated);
    assert!(m.clicks_used <= 3);
    assert!(m.elements().count() < full_model.elements().count());
    assert!(small.audit.to_jsonl().contains("truncated"));
}

#[test]
fn view_depth_limits_exploration() {
    let shallow = run_with(
        "three-level",
        ExploreOptions {
            max_view_depth: 0,
            ..ExploreOptions::default()
        },
    );
    let deep = run_with("three-level", ExploreOptions::default());
    assert_eq!(shallow.model.unwrap().views.len(), 1);
    assert!(deep.model.unwrap().views.len() > 1);
    assert_ne!(deep.record.status, RecordStatus::Error);
}
