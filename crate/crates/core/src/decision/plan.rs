//! Click plans: rule-based planning, the external model adapter, the
//! output grammar and validation.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::semantics::{classify_label_semantics, is_essential_category, is_objection, LabelSemantics};
use super::serial::{ElementTag, NoticeOutline, OutlineEntry, SerializedNotice, SwitchState, TagKind};
use crate::roles::Role;

pub const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub view_index: usize,
    pub tag: ElementTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickPlan {
    pub steps: Vec<PlanStep>,
    pub rendered: String,
    /// Set when the notice offers no way to decline; steps are empty.
    pub no_opt_out: bool,
}

impl ClickPlan {
    pub fn new(steps: Vec<PlanStep>) -> Self {
        let rendered = render_plan(&steps);
        ClickPlan {
            steps,
            rendered,
            no_opt_out: false,
        }
    }

    pub fn no_opt_out() -> Self {
        ClickPlan {
            steps: Vec::new(),
            rendered: String::new(),
            no_opt_out: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provider {
    Rules,
    External { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("plan rejected: {0}")]
    PlanRejected(String),
    #[error("plan syntax error: {0}")]
    PlanSyntaxError(String),
    #[error("unknown tag {0}")]
    UnknownTag(String),
    #[error("external planner unavailable: {0}")]
    ExternalUnavailable(String),
}

/// Groups consecutive steps of the same view: `Click a | Click b ** Click c.`
pub fn render_plan(steps: &[PlanStep]) -> String {
    if steps.is_empty() {
        return String::new();
    }
    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut last_view = None;
    for s in steps {
        if last_view != Some(s.view_index) {
            groups.push(Vec::new());
            last_view = Some(s.view_index);
        }
        groups
            .last_mut()
            .expect("group pushed above")
            .push(format!("Click {}", s.tag));
    }
    groups
        .iter()
        .map(|g| g.join(" | "))
        .collect::<Vec<_>>()
        .join(" ** ")
        + "."
}

fn click_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^Click\s+((?:button|switch)\d+)$").expect("click pattern"))
}

/// Grammar-only parse into per-viewplan tag lists.
pub fn parse_plan_text(text: &str) -> Result<Vec<Vec<ElementTag>>, PlanError> {
    let t = text.trim();
    let t = t.strip_suffix('.').unwrap_or(t).trim();
    if t.is_empty() {
        return Err(PlanError::PlanSyntaxError("empty plan".into()));
    }
    let mut out = Vec::new();
    for vp in t.split("**") {
        let mut tags = Vec::new();
        for step in vp.split('|') {
            let step = step.trim();
            let caps = click_re()
                .captures(step)
                .ok_or_else(|| PlanError::PlanSyntaxError(format!("bad step {step:?}")))?;
            let tag = caps[1].parse().map_err(PlanError::PlanSyntaxError)?;
            tags.push(tag);
        }
        out.push(tags);
    }
    Ok(out)
}

/// Parses plan text and binds each viewplan to the earliest later view
/// that holds all of its tags.
pub fn parse_plan(text: &str, outline: &NoticeOutline) -> Result<ClickPlan, PlanError> {
    let groups = parse_plan_text(text)?;
    let mut steps = Vec::new();
    let mut next_view = 0;
    for tags in groups {
        let view = (next_view..outline.views.len())
            .find(|&v| tags.iter().all(|t| outline.views[v].get(*t).is_some()))
            .ok_or_else(|| {
                let missing = tags
                    .iter()
                    .find(|t| {
                        !(next_view..outline.views.len()).any(|v| outline.views[v].get(**t).is_some())
                    })
                    .unwrap_or(&tags[0]);
                PlanError::UnknownTag(missing.to_string())
            })?;
        steps.extend(tags.into_iter().map(|tag| PlanStep { view_index: view, tag }));
        next_view = view + 1;
    }
    let plan = ClickPlan::new(steps);
    validate(&plan, outline)?;
    Ok(plan)
}

/// Structural checks every emitted or parsed plan must pass.
pub fn validate(plan: &ClickPlan, outline: &NoticeOutline) -> Result<(), PlanError> {
    if plan.no_opt_out {
        return if plan.steps.is_empty() {
            Ok(())
        } else {
            Err(PlanError::PlanRejected("no-opt-out plan has steps".into()))
        };
    }
    if plan.steps.is_empty() {
        return Err(PlanError::PlanRejected("empty plan".into()));
    }
    let mut seen = BTreeSet::new();
    for (i, s) in plan.steps.iter().enumerate() {
        let view = outline
            .views
            .get(s.view_index)
            .ok_or_else(|| PlanError::UnknownTag(s.tag.to_string()))?;
        let entry = view
            .get(s.tag)
            .ok_or_else(|| PlanError::UnknownTag(s.tag.to_string()))?;
        if i > 0 && s.view_index < plan.steps[i - 1].view_index {
            return Err(PlanError::PlanRejected("steps go back to an earlier view".into()));
        }
        if entry.tag.kind == TagKind::Button && !seen.insert((s.view_index, s.tag)) {
            return Err(PlanError::PlanRejected(format!("{} clicked twice", s.tag)));
        }
        if entry.role == Some(Role::TypeD) {
            let last_in_view = plan
                .steps
                .get(i + 1)
                .is_none_or(|n| n.view_index != s.view_index);
            if !last_in_view {
                return Err(PlanError::PlanRejected(format!("{} submits before the end of its view", s.tag)));
            }
        }
    }
    let view0_rejects = outline.views.first().is_some_and(|v| {
        v.entries
            .iter()
            .any(|e| is_button(e) && sem(e) == LabelSemantics::RejectAll)
    });
    if view0_rejects && plan.steps.iter().any(|s| s.view_index > 0) {
        return Err(PlanError::PlanRejected("opens later views although view 0 can reject".into()));
    }
    Ok(())
}

/// Whether the switch currently lets non-essential cookies through.
pub fn consent_enabled(entry: &OutlineEntry, state: SwitchState) -> bool {
    let inverted = classify_label_semantics(&entry.label).inverted();
    (state == SwitchState::Selected) != inverted
}

/// Switches that must be clicked to reach the disabled state.
pub fn needs_toggle(entry: &OutlineEntry) -> bool {
    match (entry.tag.kind, entry.state) {
        (TagKind::Switch, Some(state)) => consent_enabled(entry, state) && !is_essential_category(&entry.label),
        _ => false,
    }
}

fn is_button(e: &OutlineEntry) -> bool {
    e.tag.kind == TagKind::Button && e.role != Some(Role::TypeC)
}

fn sem(e: &OutlineEntry) -> LabelSemantics {
    classify_label_semantics(&e.label)
}

/// Steps for configuring and submitting view `vi`, or `None` when the view
/// offers nothing to do.
fn configure_view(outline: &NoticeOutline, vi: usize) -> Option<Vec<PlanStep>> {
    let view = &outline.views[vi];
    let step = |tag| PlanStep { view_index: vi, tag };
    if let Some(r) = view.entries.iter().find(|e| is_button(e) && sem(e).rejects()) {
        return Some(vec![step(r.tag)]);
    }
    let mut steps = Vec::new();
    let mut revealed = BTreeSet::new();
    let mut closing_objection = None;
    for e in &view.entries {
        let objection = e.tag.kind == TagKind::Button && is_objection(&e.label);
        if objection && e.role == Some(Role::TypeD) {
            closing_objection = closing_objection.or(Some(e));
            continue;
        }
        if !(needs_toggle(e) || objection) {
            continue;
        }
        if let Some(c) = e.revealed_by {
            if view.get(c).is_some() && revealed.insert(c) {
                steps.push(step(c));
            }
        }
        steps.push(step(e.tag));
    }
    let save = view
        .entries
        .iter()
        .find(|e| is_button(e) && sem(e) == LabelSemantics::SaveConfirm && !is_objection(&e.label));
    match save {
        Some(s) => {
            steps.push(step(s.tag));
            Some(steps)
        }
        None => {
            if let Some(e) = closing_objection {
                if let Some(c) = e.revealed_by.filter(|c| view.get(*c).is_some() && !revealed.contains(c)) {
                    steps.push(step(c));
                }
                steps.push(step(e.tag));
            }
            (!steps.is_empty()).then_some(steps)
        }
    }
}

/// Views opened from `vi` and the opener tag, in view order.
fn children(outline: &NoticeOutline, vi: usize) -> Vec<(usize, ElementTag)> {
    let linked: Vec<(usize, ElementTag)> = outline
        .views
        .iter()
        .enumerate()
        .filter_map(|(i, v)| match v.opened_by {
            Some((from, tag)) if from == vi && i > vi => Some((i, tag)),
            _ => None,
        })
        .collect();
    if !linked.is_empty() || outline.views.iter().any(|v| v.opened_by.is_some()) {
        return linked;
    }
    // Parsed text carries no links: the next view is opened by the first
    // more-options button.
    if vi + 1 < outline.views.len() {
        if let Some(b) = outline.views[vi]
            .entries
            .iter()
            .find(|e| is_button(e) && sem(e) == LabelSemantics::MoreOptions)
        {
            return vec![(vi + 1, b.tag)];
        }
    }
    Vec::new()
}

fn route(outline: &NoticeOutline, vi: usize, depth: usize) -> Option<Vec<PlanStep>> {
    if depth > outline.views.len() {
        return None;
    }
    let mut openers = children(outline, vi);
    openers.sort_by_key(|(_, tag)| {
        let e = outline.views[vi].get(*tag);
        (e.map(sem) != Some(LabelSemantics::MoreOptions)) as u8
    });
    for (child, tag) in openers {
        if let Some(rest) = configure_view(outline, child).or_else(|| route(outline, child, depth + 1)) {
            let mut steps = vec![PlanStep { view_index: vi, tag }];
            steps.extend(rest);
            return Some(steps);
        }
    }
    None
}

/// Rule-based planner.
pub fn plan_rules(outline: &NoticeOutline) -> ClickPlan {
    if outline.accept_only || outline.views.is_empty() {
        return ClickPlan::no_opt_out();
    }
    let v0 = &outline.views[0];
    let step0 = |tag| PlanStep { view_index: 0, tag };
    if let Some(r) = v0.entries.iter().find(|e| is_button(e) && sem(e).rejects()) {
        return ClickPlan::new(vec![step0(r.tag)]);
    }
    let has_switches = v0.entries.iter().any(|e| e.tag.kind == TagKind::Switch);
    let buttons: Vec<&OutlineEntry> = v0.entries.iter().filter(|e| is_button(e)).collect();
    if !has_switches && buttons.len() == 2 {
        let accepts: Vec<_> = buttons.iter().filter(|e| sem(e) == LabelSemantics::AcceptAll).collect();
        if accepts.len() == 1 {
            let other = buttons
                .iter()
                .find(|e| sem(e) != LabelSemantics::AcceptAll)
                .expect("two buttons, one accept");
            if !matches!(sem(other), LabelSemantics::MoreOptions | LabelSemantics::SaveConfirm) {
                return ClickPlan::new(vec![step0(other.tag)]);
            }
        }
    }
    if has_switches {
        if let Some(steps) = configure_view(outline, 0) {
            return ClickPlan::new(steps);
        }
    }
    match route(outline, 0, 0) {
        Some(steps) => ClickPlan::new(steps),
        None => ClickPlan::no_opt_out(),
    }
}

#[derive(Serialize)]
struct ExternalRequest<'a> {
    input: &'a str,
}

#[derive(Deserialize)]
struct ExternalResponse {
    output: String,
}

/// Sends the notice text to a remote text-to-plan model and binds its answer.
pub fn plan_external(sn: &SerializedNotice, endpoint: &str) -> Result<ClickPlan, PlanError> {
    if sn.outline.accept_only {
        return Ok(ClickPlan::no_opt_out());
    }
    let client = reqwest::blocking::Client::builder()
        .timeout(EXTERNAL_TIMEOUT)
        .build()
        .map_err(|e| PlanError::ExternalUnavailable(e.to_string()))?;
    let resp: ExternalResponse = client
        .post(endpoint)
        .json(&ExternalRequest { input: &sn.text })
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.json())
        .map_err(|e| PlanError::ExternalUnavailable(e.to_string()))?;
    parse_plan(&resp.output, &sn.outline).map_err(|e| match e {
        PlanError::PlanSyntaxError(m) | PlanError::PlanRejected(m) => PlanError::PlanRejected(m),
        other => other,
    })
}

pub fn plan(sn: &SerializedNotice, provider: &Provider) -> Result<ClickPlan, PlanError> {
    let plan = match provider {
        Provider::Rules => plan_rules(&sn.outline),
        Provider::External { endpoint } => plan_external(sn, endpoint)?,
    };
    validate(&plan, &sn.outline)?;
    Ok(plan)
}
