//! Element discovery, outbound filtering and view exploration.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use super::{extract_label_near, AuditLog, ControlState, Discovery, InteractiveElement, NoticeModel, View};
use crate::decision::{classify_label_semantics, ElementTag, LabelSemantics, TagKind};
use crate::detector::{detect_notice, ClassifierHandle, DetectError, NoticeCandidate};
use crate::dom::{is_visible, ElementSnapshot, PageSnapshot, SelectorPath};
use crate::driver::{same_document, Browser, DriverError};
use crate::roles::{probe_role, ClickBudget, ProbeError, Role, ViewPath};

pub const DEFAULT_MAX_VIEW_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub max_view_depth: usize,
    pub click_budget: u32,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            max_view_depth: DEFAULT_MAX_VIEW_DEPTH,
            click_budget: crate::roles::DEFAULT_CLICK_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyzeError {
    #[error("notice container {0} no longer resolves")]
    ContainerGone(String),
    #[error(transparent)]
    Driver(DriverError),
    #[error(transparent)]
    Detect(DetectError),
    #[error(transparent)]
    Probe(ProbeError),
}

impl From<DriverError> for AnalyzeError {
    fn from(e: DriverError) -> Self {
        match e {
            DriverError::ContainerGone(c) => AnalyzeError::ContainerGone(c),
            e => AnalyzeError::Driver(e),
        }
    }
}

impl From<DetectError> for AnalyzeError {
    fn from(e: DetectError) -> Self {
        match e {
            DetectError::Driver(d) => d.into(),
            e => AnalyzeError::Detect(e),
        }
    }
}

impl From<ProbeError> for AnalyzeError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Driver(d) => d.into(),
            ProbeError::Detect(d) => d.into(),
            e => AnalyzeError::Probe(e),
        }
    }
}

/// An element dropped by [`filter_outbound`].
#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    pub element: InteractiveElement,
    pub reason: String,
}

fn settings_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\b(settings|preferences|options|manage|customi[sz]e|choices|configure)\b").expect("settings pattern")
    })
}

/// Labels of controls that lead to cookie settings.
fn is_settings_label(label: &str) -> bool {
    classify_label_semantics(label) == LabelSemantics::MoreOptions && settings_re().is_match(label)
}

fn label_proxy<'a>(page: &'a PageSnapshot, el: &ElementSnapshot, container: &ElementSnapshot) -> Option<&'a ElementSnapshot> {
    let inside = |p: &&ElementSnapshot| is_visible(p) && page.is_descendant(p, container.node_id);
    if let Some(id) = el.id_attr() {
        if let Some(l) = page
            .elements
            .iter()
            .filter(|e| e.tag_name == "label" && e.attr("for") == Some(id))
            .find(inside)
        {
            return Some(l);
        }
    }
    page.ancestors(el).into_iter().find(|a| a.tag_name == "label").filter(inside)
}

fn make_element(
    page: &PageSnapshot,
    el: &ElementSnapshot,
    anchor: &ElementSnapshot,
    state: ControlState,
    discovery: Discovery,
) -> InteractiveElement {
    InteractiveElement {
        tag: ElementTag {
            kind: state.tag_kind(),
            index: 0,
        },
        snapshot: el.clone(),
        label: extract_label_near(page, el, anchor),
        state,
        view_index: 0,
        discovery,
        click_target: anchor.selector_path.clone(),
        role: None,
        probe: None,
        revealed_by: None,
        path: ViewPath::default(),
    }
}

/// Tab-reachable controls of the notice plus hidden inputs, buttons and
/// links that a visible label stands in for. Tags are numbered from 0 in
/// the returned order; callers renumber.
pub fn discover_elements<B: Browser + ?Sized>(
    browser: &mut B,
    notice: &SelectorPath,
) -> Result<Vec<InteractiveElement>, AnalyzeError> {
    let page = browser.snapshot()?;
    let container = page
        .query_unique(&notice.css)
        .filter(|c| is_visible(c))
        .ok_or_else(|| AnalyzeError::ContainerGone(notice.css.clone()))?
        .clone();
    let tabbed = browser.tab_cycle(notice)?;

    let mut out: Vec<InteractiveElement> = Vec::new();
    let mut taken: BTreeSet<u64> = BTreeSet::new();
    for el in &tabbed {
        let Some(el) = page.get(el.node_id) else { continue };
        if !taken.insert(el.node_id) {
            continue;
        }
        let state = browser.query_state(&el.selector_path)?;
        if let Some(state) = ControlState::from_element_state(state) {
            out.push(make_element(&page, el, el, state, Discovery::Tabbed));
        }
    }

    let hidden: Vec<&ElementSnapshot> = page
        .descendants(container.node_id)
        .into_iter()
        .filter(|e| matches!(e.tag_name.as_str(), "input" | "button" | "a") && !is_visible(e))
        .filter(|e| e.attr("type") != Some("hidden"))
        .collect();
    for el in hidden {
        let Some(proxy) = label_proxy(&page, el, &container) else { continue };
        if taken.contains(&el.node_id) || taken.contains(&proxy.node_id) {
            continue;
        }
        let Some(state) = ControlState::from_element_state(browser.query_state(&proxy.selector_path)?) else {
            continue;
        };
        taken.insert(el.node_id);
        taken.insert(proxy.node_id);
        let item = make_element(&page, el, proxy, state, Discovery::HiddenSupplement);
        let pos = out
            .iter()
            .position(|o| o.snapshot.doc_order > el.doc_order)
            .unwrap_or(out.len());
        out.insert(pos, item);
    }
    for (i, e) in out.iter_mut().enumerate() {
        e.tag.index = i as u32;
    }
    Ok(out)
}

fn static_outbound(page_url: &str, el: &ElementSnapshot) -> Option<&'static str> {
    if el.attr("target") == Some("_blank") {
        return Some("opens a new tab");
    }
    if el.tag_name != "a" {
        return None;
    }
    let href = el.attr("href")?.trim();
    if href.is_empty() || href.starts_with('#') || href.to_ascii_lowercase().starts_with("javascript:") {
        return None;
    }
    let resolved = url::Url::parse(page_url)
        .and_then(|base| base.join(href))
        .map(|u| u.to_string())
        .unwrap_or_else(|_| href.to_string());
    (!same_document(page_url, &resolved)).then_some("href to other document")
}

fn ambiguous(e: &InteractiveElement) -> bool {
    e.state == ControlState::Stateless
        && matches!(
            classify_label_semantics(&e.label),
            LabelSemantics::MoreOptions | LabelSemantics::Neutral
        )
}

struct Explorer<'a, B: Browser + ?Sized> {
    b: &'a mut B,
    h: &'a ClassifierHandle,
    opts: ExploreOptions,
    budget: ClickBudget,
    audit: &'a mut AuditLog,
    domain: String,
    at: Option<ViewPath>,
    next_index: u32,
    seen: BTreeSet<String>,
}

impl<B: Browser + ?Sized> Explorer<'_, B> {
    fn ensure_at(&mut self, path: &ViewPath) -> Result<(), ProbeError> {
        if self.at.as_ref() != Some(path) {
            self.at = None;
            path.restore(self.b, &mut self.budget)?;
            self.at = Some(path.clone());
        }
        Ok(())
    }

    fn log(&mut self, view: usize, tag: Option<ElementTag>, action: &str, outcome: &str, reason: &str) {
        let tag = tag.map(|t| t.to_string());
        self.audit.push(&self.domain, view, tag, action, outcome, reason);
    }

    /// Drops outbound elements; probe clicks ambiguous ones from `path`.
    fn filter(
        &mut self,
        elements: Vec<InteractiveElement>,
        path: &ViewPath,
        view: usize,
    ) -> Result<(Vec<InteractiveElement>, Vec<Removal>), ProbeError> {
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        for e in elements {
            let reason = if e.state != ControlState::Stateless {
                None
            } else if let Some(r) = static_outbound(&self.b.current_url()?, &e.snapshot) {
                Some(r.to_string())
            } else if ambiguous(&e) {
                self.ensure_at(path)?;
                let before = self.b.snapshot()?;
                self.budget.spend(1)?;
                let out = self.b.click(&e.click_target)?;
                self.b.pause(self.b.config().settle_delay_ms);
                let after = self.b.snapshot()?;
                if out.url_changed || out.new_tab_opened || after.elements != before.elements {
                    self.at = None;
                }
                if out.url_changed {
                    Some("probe click navigated".into())
                } else if out.new_tab_opened {
                    Some("probe click opened a tab".into())
                } else {
                    None
                }
            } else {
                None
            };
            match reason {
                Some(reason) => {
                    self.log(view, Some(e.tag), "filter", "removed", &reason);
                    removed.push(Removal { element: e, reason });
                }
                None => kept.push(e),
            }
        }
        Ok((kept, removed))
    }

    /// Discovers unseen elements of `container` at `path`, tags them and
    /// filters outbound ones.
    fn collect(
        &mut self,
        container: &SelectorPath,
        path: &ViewPath,
        view: usize,
        discovery: Option<Discovery>,
        model: &mut NoticeModel,
    ) -> Result<Vec<InteractiveElement>, AnalyzeError> {
        let found = discover_elements(self.b, container)?;
        let mut fresh = Vec::new();
        for mut e in found {
            if self.seen.contains(&e.click_target.css) || self.seen.contains(&e.snapshot.selector_path.css) {
                continue;
            }
            self.seen.insert(e.click_target.css.clone());
            self.seen.insert(e.snapshot.selector_path.css.clone());
            e.tag = ElementTag {
                kind: e.tag.kind,
                index: self.next_index,
            };
            self.next_index += 1;
            e.view_index = view;
            e.path = path.clone();
            if let Some(d) = discovery {
                e.discovery = d;
            }
            self.log(view, Some(e.tag), "discover", &format!("{:?}", e.discovery), &e.label);
            fresh.push(e);
        }
        let (kept, removed) = self.filter(fresh, path, view)?;
        if removed.iter().any(|r| is_settings_label(&r.element.label)) {
            model.dedicated_page = true;
        }
        Ok(kept)
    }

    fn explore_view(
        &mut self,
        container: SelectorPath,
        path: ViewPath,
        opened_by: Option<(usize, ElementTag)>,
        depth: usize,
        model: &mut NoticeModel,
    ) -> Result<(), AnalyzeError> {
        let vi = model.views.len();
        self.ensure_at(&path)?;
        model.views.push(View {
            elements: Vec::new(),
            opened_by,
            container: container.clone(),
            path: path.clone(),
        });
        let elements = self.collect(&container, &path, vi, None, model)?;
        if elements.is_empty() && opened_by.is_some() {
            model.views.pop();
            self.log(vi, None, "open_view", "empty", "no unseen elements");
            return Ok(());
        }
        model.views[vi].elements = elements;

        let mut openers: Vec<(ElementTag, ViewPath)> = Vec::new();
        let mut i = 0;
        while i < model.views[vi].elements.len() {
            let e = model.views[vi].elements[i].clone();
            i += 1;
            self.ensure_at(&e.path)?;
            let result = match probe_role(self.b, &e.click_target, &container, &e.path, self.h, &mut self.budget) {
                Ok(r) => r,
                Err(ProbeError::ProbeAborted(css)) => {
                    self.at = None;
                    self.log(vi, Some(e.tag), "probe", "aborted", &css);
                    model.views[vi].elements[i - 1].role = Some(Role::Unknown);
                    continue;
                }
                Err(err) => return Err(err.into()),
            };
            self.log(vi, Some(e.tag), "probe", result.role.as_str(), if result.low_confidence { "low confidence" } else { "" });
            self.audit
                .attach_evidence(serde_json::to_value(result.evidence).expect("evidence serializes"));
            let slot = &mut model.views[vi].elements[i - 1];
            slot.role = Some(result.role);
            slot.probe = Some(result);
            match result.role {
                Role::TypeC => {
                    self.budget.spend(1)?;
                    let out = self.b.click(&e.click_target)?;
                    self.at = None;
                    if !out.clicked {
                        continue;
                    }
                    self.b.pause(self.b.config().settle_delay_ms);
                    let revealed_path = e.path.then(e.click_target.clone());
                    self.at = Some(revealed_path.clone());
                    let added = self.collect(&container, &revealed_path, vi, Some(Discovery::Dynamic), model)?;
                    self.log(vi, Some(e.tag), "reveal", &added.len().to_string(), "");
                    for mut a in added {
                        a.revealed_by = Some(e.tag);
                        model.views[vi].elements.push(a);
                    }
                }
                Role::TypeB => openers.push((e.tag, e.path.then(e.click_target.clone()))),
                _ => {}
            }
        }

        if depth >= self.opts.max_view_depth {
            if !openers.is_empty() {
                self.log(vi, None, "open_view", "skipped", "max view depth");
            }
            return Ok(());
        }
        for (tag, child_path) in openers {
            self.ensure_at(&child_path)?;
            let page = self.b.snapshot()?;
            match detect_notice(&page, self.h)? {
                Some(c) => {
                    self.log(vi, Some(tag), "open_view", "ok", &c.selector().css);
                    self.explore_view(c.selector().clone(), child_path, Some((vi, tag)), depth + 1, model)?;
                }
                None => self.log(vi, Some(tag), "open_view", "no notice", ""),
            }
        }
        Ok(())
    }
}

fn domain_of(url: &str) -> String {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(|h| h.trim_start_matches("www.").to_string()))
        .unwrap_or_else(|| url.to_string())
}

/// Only accept-like actions survived exploration.
fn accept_only(model: &NoticeModel) -> bool {
    let mut any = false;
    for e in model.elements() {
        match e.role {
            Some(Role::TypeA) | Some(Role::TypeB) | Some(Role::TypeC) => return false,
            Some(Role::Unknown) => continue,
            _ => {}
        }
        if e.tag.kind == TagKind::Switch || classify_label_semantics(&e.label) != LabelSemantics::AcceptAll {
            return false;
        }
        any = true;
    }
    any
}

/// Filters outbound elements of the view the session is at.
pub fn filter_outbound<B: Browser + ?Sized>(
    browser: &mut B,
    elements: Vec<InteractiveElement>,
    path: &ViewPath,
    budget: &mut ClickBudget,
    audit: &mut AuditLog,
) -> Result<(Vec<InteractiveElement>, Vec<Removal>), AnalyzeError> {
    let h = ClassifierHandle::baseline();
    let mut ex = Explorer {
        domain: domain_of(&path.url),
        b: browser,
        h: &h,
        opts: ExploreOptions::default(),
        budget: *budget,
        audit,
        at: Some(path.clone()),
        next_index: 0,
        seen: BTreeSet::new(),
    };
    let r = ex.filter(elements, path, 0);
    *budget = ex.budget;
    if ex.at.is_none() {
        path.restore(ex.b, budget)?;
    }
    Ok(r?)
}

/// Explores every view of the detected notice and probes each element's
/// role. Running out of click budget yields a truncated model. The page is
/// reset afterwards.
pub fn explore_views<B: Browser + ?Sized>(
    browser: &mut B,
    url: &str,
    notice: &NoticeCandidate,
    h: &ClassifierHandle,
    opts: ExploreOptions,
    audit: &mut AuditLog,
) -> Result<NoticeModel, AnalyzeError> {
    let root = ViewPath::new(url, notice.frame.clone());
    let mut model = NoticeModel {
        domain: domain_of(url),
        url: url.to_string(),
        views: Vec::new(),
        notice_selector: notice.selector().clone(),
        frame_selector: notice.frame.clone(),
        accept_only: false,
        dedicated_page: false,
        truncated: false,
        degraded: notice.degraded,
        clicks_used: 0,
    };
    let mut ex = Explorer {
        domain: model.domain.clone(),
        b: browser,
        h,
        opts,
        budget: ClickBudget::new(opts.click_budget),
        audit,
        at: None,
        next_index: 0,
        seen: BTreeSet::new(),
    };
    match ex.explore_view(notice.selector().clone(), root, None, 0, &mut model) {
        Ok(()) => {}
        Err(AnalyzeError::Probe(ProbeError::ExplorationBudgetExceeded { limit })) => {
            model.truncated = true;
            ex.log(model.views.len().saturating_sub(1), None, "explore", "truncated", &format!("budget {limit}"));
        }
        Err(e) => return Err(e),
    }
    model.clicks_used = ex.budget.used;
    model.accept_only = accept_only(&model);
    ex.b.reset(url)?;
    Ok(model)
}

/// Re-probes every element of `model` from its own view and ends with a
/// reset so the notice is shown again.
pub fn probe_all<B: Browser + ?Sized>(
    browser: &mut B,
    model: &NoticeModel,
    h: &ClassifierHandle,
    budget: &mut ClickBudget,
    audit: &mut AuditLog,
) -> Result<NoticeModel, AnalyzeError> {
    let mut out = model.clone();
    let mut at: Option<ViewPath> = None;
    for v in 0..out.views.len() {
        let container = out.views[v].container.clone();
        for i in 0..out.views[v].elements.len() {
            let e = out.views[v].elements[i].clone();
            if at.as_ref() != Some(&e.path) {
                e.path.restore(browser, budget)?;
                at = Some(e.path.clone());
            }
            let role = match probe_role(browser, &e.click_target, &container, &e.path, h, budget) {
                Ok(r) => {
                    out.views[v].elements[i].probe = Some(r);
                    r.role
                }
                Err(ProbeError::ProbeAborted(_)) => {
                    at = None;
                    Role::Unknown
                }
                Err(err) => return Err(err.into()),
            };
            audit.push(&out.domain, v, Some(e.tag.to_string()), "probe", role.as_str(), "");
            out.views[v].elements[i].role = Some(role);
        }
    }
    out.accept_only = accept_only(&out);
    browser.reset(&out.url)?;
    Ok(out)
}
