#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use chrono::{TimeZone, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use regex::Regex;

use optout_core::analyzer::{serialize, ControlState, InteractiveElement, NoticeModel, View};
use optout_core::decision::{
    parse_plan, parse_serialized, plan, validate, ElementTag, Provider, SerialError, TagKind,
};
use optout_core::driver::SessionConfig;
use optout_core::fixtures::{self, Fixture};
use optout_core::measure::{analyze_domain, PipelineConfig, PipelineOutcome};
use optout_core::roles::Role;
use optout_core::sim::{SimBrowser, SiteRegistry};

pub fn config() -> PipelineConfig {
    PipelineConfig {
        scheme: "http".into(),
        now: Some(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()),
        ..PipelineConfig::default()
    }
}

pub fn run(reg: &Arc<SiteRegistry>, f: &Fixture) -> PipelineOutcome {
    let mut b = SimBrowser::new(reg.clone(), SessionConfig::default());
    analyze_domain(&mut b, &f.host(), &config())
}

fn grammar() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let label = r"[^|*<>]*[^|*<>\s]";
        let entry = format!(r"(?:button\d+ - {label}|switch\d+ - {label}, (?:selected|not selected))");
        let view = format!(r"{entry}(?: \|\| {entry})*");
        Regex::new(&format!(r"^{view}(?: \*\* {view})* <end>$")).unwrap()
    })
}

/// Serializes `model`, checks the grammar and the text round-trip, plans
/// with the rule planner and checks that the rendered plan parses back to
/// the same plan.
pub fn check_roundtrip(model: &NoticeModel) -> Result<(), String> {
    let sn = match serialize(model) {
        Ok(sn) => sn,
        Err(SerialError::EmptyModel) => {
            return if model.outline().entry_count() == 0 {
                Ok(())
            } else {
                Err("non-empty model reported empty".into())
            }
        }
        Err(e) => return Err(e.to_string()),
    };
    if !grammar().is_match(&sn.text) {
        return Err(format!("grammar: {:?}", sn.text));
    }
    let parsed = parse_serialized(&sn.text).map_err(|e| format!("{e}: {:?}", sn.text))?;
    let shape = |o: &optout_core::decision::NoticeOutline| {
        o.views
            .iter()
            .map(|v| v.entries.iter().map(|e| (e.tag, e.label.clone(), e.state)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    if shape(&parsed) != shape(&sn.outline) {
        return Err(format!("text round-trip: {:?}", sn.text));
    }
    for v in &sn.outline.views {
        for e in &v.entries {
            if (e.tag.kind == TagKind::Switch) != e.state.is_some() {
                return Err(format!("state token on {}", e.tag));
            }
        }
    }
    let p = plan(&sn, &Provider::Rules).map_err(|e| format!("{e}: {:?}", sn.text))?;
    validate(&p, &sn.outline).map_err(|e| format!("{e}: {:?}", p.rendered))?;
    if !p.no_opt_out {
        let back = parse_plan(&p.rendered, &sn.outline).map_err(|e| format!("{e}: {:?} on {:?}", p.rendered, sn.text))?;
        if back != p {
            return Err(format!("plan round-trip: {:?} on {:?}", p.rendered, sn.text));
        }
    }
    Ok(())
}

const LABELS: &[&str] = &[
    "Accept all",
    "Reject all",
    "Reject non-essential",
    "Manage settings",
    "Customize",
    "Save settings",
    "Confirm my choices",
    "Close",
    "Analytics cookies",
    "Advertising cookies",
    "Do not allow non-essential cookies",
    "Strictly necessary",
    "Object to legitimate interest",
    "Learn more",
    "OK",
    "Cancel",
    "Allow selection",
    "Personalise my choices",
];

fn random_label(rng: &mut StdRng) -> String {
    if rng.gen_bool(0.7) {
        let l = LABELS.choose(rng).unwrap().to_string();
        return if rng.gen_bool(0.2) { l.to_uppercase() } else { l };
    }
    const JUNK: &[char] = &['a', 'b', 'x', ' ', ' ', '|', '*', '<', '>', '-', ',', '.', '!', 'é', '\t', '\n', '1'];
    let n = rng.gen_range(0..24);
    (0..n).map(|_| *JUNK.choose(rng).unwrap()).collect()
}

/// A model with random views, roles, states and labels, built from the
/// elements of `base`.
pub fn random_model(rng: &mut StdRng, base: &NoticeModel) -> NoticeModel {
    let protos: Vec<&InteractiveElement> = base.elements().collect();
    let view_count = rng.gen_range(1..=4);
    let mut next = 0u32;
    let mut views: Vec<View> = Vec::new();
    let mut openers: Vec<(usize, ElementTag)> = Vec::new();
    for vi in 0..view_count {
        let proto_view = &base.views[vi.min(base.views.len() - 1)];
        let opened_by = if vi == 0 { None } else { openers.choose(rng).copied() };
        let mut elements = Vec::new();
        for _ in 0..rng.gen_range(0..=7) {
            let role = *[Role::TypeA, Role::TypeB, Role::TypeC, Role::TypeD, Role::Unknown]
                .choose(rng)
                .unwrap();
            let state = match role {
                Role::TypeA if rng.gen_bool(0.5) => ControlState::Selected,
                Role::TypeA => ControlState::NotSelected,
                _ => ControlState::Stateless,
            };
            let tag = ElementTag {
                kind: state.tag_kind(),
                index: next,
            };
            next += rng.gen_range(1..=3);
            if role == Role::TypeC {
                openers.push((vi, tag));
            }
            let mut e = (*protos.choose(rng).unwrap()).clone();
            e.tag = tag;
            e.label = random_label(rng);
            e.state = state;
            e.role = Some(role);
            e.view_index = vi;
            e.revealed_by = None;
            elements.push(e);
        }
        views.push(View {
            elements,
            opened_by,
            container: proto_view.container.clone(),
            path: proto_view.path.clone(),
        });
    }
    NoticeModel {
        views,
        accept_only: rng.gen_bool(0.1),
        ..base.clone()
    }
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Runs the round-trip check on `n` random models; returns the failures.
pub fn fuzz_roundtrip(n: usize, seed: u64) -> Vec<String> {
    let reg = fixtures::shared_registry();
    let base = run(&reg, &fixtures::find("askubuntu").unwrap())
        .model
        .expect("askubuntu model");
    let mut rng = seeded(seed);
    (0..n)
        .filter_map(|i| check_roundtrip(&random_model(&mut rng, &base)).err().map(|e| format!("#{i}: {e}")))
        .collect()
}

/// Runs the round-trip check on every fixture model.
pub fn fixture_roundtrip() -> Vec<String> {
    let reg = fixtures::shared_registry();
    fixtures::corpus()
        .iter()
        .filter_map(|f| {
            let m = run(&reg, f).model?;
            check_roundtrip(&m).err().map(|e| format!("{}: {e}", f.name))
        })
        .collect()
}
