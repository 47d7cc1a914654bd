//! In-process scripted browser for fixture sites.
//!
//! Pages are declared with [`spec`], laid out by [`doc`], and driven through
//! the same [`Browser`] trait as a real WebDriver session.

pub mod doc;
pub mod html;
pub mod spec;
pub mod stub;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::dom::{NodeId, PageSnapshot, SelectorPath};
use crate::driver::{
    same_document, Browser, ClickErrorKind, ClickOutcome, DriverError, ElementState, Session,
    SessionConfig,
};
use doc::{resolve_url, SimDoc, VIEWPORT_H, VIEWPORT_W};
use spec::{el, para, ConsentMode, DocSpec, Effect};

/// Cookie written by [`Effect::Consent`].
pub const CONSENT_COOKIE: &str = "fx_consent";

/// What a site sees when a page is requested.
#[derive(Debug, Clone)]
pub struct Request<'a> {
    pub path: &'a str,
    pub cookies: &'a BTreeMap<String, String>,
}

impl Request<'_> {
    pub fn consented(&self) -> bool {
        self.cookies.contains_key(CONSENT_COOKIE)
    }
}

pub type Render = Arc<dyn Fn(&Request) -> Option<DocSpec> + Send + Sync>;

#[derive(Clone)]
pub struct Site {
    pub host: String,
    pub render: Render,
    /// Navigation never completes.
    pub hang: bool,
}

impl Site {
    pub fn new(host: &str, render: impl Fn(&Request) -> Option<DocSpec> + Send + Sync + 'static) -> Self {
        Site {
            host: host.to_string(),
            render: Arc::new(render),
            hang: false,
        }
    }

    pub fn hanging(mut self) -> Self {
        self.hang = true;
        self
    }
}

impl std::fmt::Debug for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Site")
            .field("host", &self.host)
            .field("hang", &self.hang)
            .finish()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SiteRegistry {
    sites: BTreeMap<String, Site>,
}

impl SiteRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, site: Site) {
        self.sites.insert(site.host.clone(), site);
    }

    pub fn get(&self, host: &str) -> Option<&Site> {
        self.sites
            .get(host)
            .or_else(|| self.sites.get(host.strip_prefix("www.").unwrap_or(host)))
    }

    pub fn hosts(&self) -> impl Iterator<Item = &str> {
        self.sites.keys().map(String::as_str)
    }
}

fn not_found(path: &str) -> DocSpec {
    DocSpec::new("404 Not Found").body([
        el("h1").text("Not Found"),
        para(&format!("The requested URL {path} was not found on this server.")),
    ])
}

static SESSIONS: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Focus {
    Document,
    Element(usize),
    Chrome,
}

/// Scripted browser over a [`SiteRegistry`].
pub struct SimBrowser {
    registry: Arc<SiteRegistry>,
    session: Session,
    config: SessionConfig,
    cookies: BTreeMap<String, BTreeMap<String, String>>,
    top: Option<SimDoc>,
    frame_path: Vec<usize>,
    focus: Focus,
    extra_windows: Vec<String>,
    next_window: u64,
    virtual_ms: u64,
    clicks: u64,
}

impl SimBrowser {
    pub fn new(registry: Arc<SiteRegistry>, config: SessionConfig) -> Self {
        let n = SESSIONS.fetch_add(1, Ordering::Relaxed);
        SimBrowser {
            registry,
            session: Session {
                session_id: format!("sim-{n}"),
                base_url: "sim:".into(),
                page_load_timeout_ms: config.page_load_timeout_ms,
                settle_delay_ms: config.settle_delay_ms,
            },
            config,
            cookies: BTreeMap::new(),
            top: None,
            frame_path: Vec::new(),
            focus: Focus::Document,
            extra_windows: Vec::new(),
            next_window: 1,
            virtual_ms: 0,
            clicks: 0,
        }
    }

    /// Milliseconds spent in pauses and page loads.
    pub fn virtual_ms(&self) -> u64 {
        self.virtual_ms
    }

    pub fn clicks(&self) -> u64 {
        self.clicks
    }

    pub fn cookies_for(&self, host: &str) -> BTreeMap<String, String> {
        self.cookies.get(host).cloned().unwrap_or_default()
    }

    pub fn set_cookie(&mut self, host: &str, name: &str, value: &str) {
        self.cookies
            .entry(host.to_string())
            .or_default()
            .insert(name.to_string(), value.to_string());
    }

    pub fn clear_cookies(&mut self) {
        self.cookies.clear();
    }

    pub fn top_url(&self) -> Option<&str> {
        self.top.as_ref().map(|d| d.url.as_str())
    }

    fn top_host(&self) -> String {
        self.top
            .as_ref()
            .and_then(|d| url::Url::parse(&d.url).ok())
            .and_then(|u| u.host_str().map(String::from))
            .unwrap_or_default()
    }

    fn doc_at<'a>(top: &'a mut SimDoc, path: &[usize]) -> &'a mut SimDoc {
        let mut d = top;
        for &k in path {
            d = d.nodes[k]
                .frame
                .as_deref_mut()
                .expect("frame path points at frames");
        }
        d
    }

    fn cur(&self) -> Result<&SimDoc, DriverError> {
        let mut d = self.top.as_ref().ok_or_else(no_page)?;
        for &k in &self.frame_path {
            d = d.nodes[k].frame.as_deref().ok_or_else(no_page)?;
        }
        Ok(d)
    }

    /// Loads `url` into the top-level context.
    pub fn load(&mut self, url: &str) -> Result<(), DriverError> {
        let parsed = url::Url::parse(url).map_err(|e| DriverError::Command {
            error: "invalid argument".into(),
            message: e.to_string(),
        })?;
        let host = parsed.host_str().unwrap_or_default().to_string();
        let site = self
            .registry
            .get(&host)
            .cloned()
            .ok_or_else(|| DriverError::PageCrashed(format!("net::ERR_NAME_NOT_RESOLVED {host}")))?;
        if site.hang {
            self.virtual_ms += self.config.page_load_timeout_ms;
            return Err(DriverError::NavTimeout {
                url: url.to_string(),
                timeout_ms: self.config.page_load_timeout_ms,
            });
        }
        let cookies = self.cookies_for(&host);
        let path = parsed.path().to_string();
        let spec = (site.render)(&Request {
            path: &path,
            cookies: &cookies,
        })
        .unwrap_or_else(|| not_found(&path));
        self.top = Some(SimDoc::build(&spec, parsed.as_str(), 0, (VIEWPORT_W, VIEWPORT_H)));
        self.frame_path.clear();
        self.focus = Focus::Document;
        Ok(())
    }

    /// First element matching `css` in the current context.
    pub fn find(&self, css: &str) -> Result<Option<NodeId>, DriverError> {
        let doc = self.cur()?;
        let page = doc.raw_snapshot(true);
        Ok(page.query_all(css).first().map(|e| e.node_id))
    }

    fn key(&self, id: NodeId) -> Result<Option<usize>, DriverError> {
        Ok(self.cur()?.key_of(id))
    }

    /// Clicks a node of the current context. New tabs stay open until
    /// [`SimBrowser::close_window`].
    pub fn click_node(&mut self, id: NodeId) -> Result<(), ClickErrorKind> {
        let doc = self.cur().map_err(|_| ClickErrorKind::Stale)?;
        let k = doc.key_of(id).ok_or(ClickErrorKind::Stale)?;
        if !doc.visible(k) {
            return Err(ClickErrorKind::NotInteractable);
        }
        if doc.intercepted(k) {
            return Err(ClickErrorKind::Intercepted);
        }
        self.clicks += 1;
        self.activate(k);
        Ok(())
    }

    fn activate(&mut self, k: usize) {
        let path = self.frame_path.clone();
        let top = self.top.as_mut().expect("page loaded");
        let doc = Self::doc_at(top, &path);
        let doc_url = doc.url.clone();

        let mut chain = vec![k];
        let mut p = doc.nodes[k].parent;
        while let Some(q) = p {
            chain.push(q);
            p = doc.nodes[q].parent;
        }

        let mut effects: Vec<(usize, Effect)> = Vec::new();
        let mut nav: Option<String> = None;
        let mut tab: Option<String> = None;
        let mut control_done = false;
        if doc.nodes[k].is_checkable_input() {
            if !doc.nodes[k].attrs.contains_key("disabled") {
                doc.toggle(k);
            }
            control_done = true;
        }
        for &n in &chain {
            if !control_done {
                if let Some(c) = doc.label_control(n) {
                    if !doc.nodes[c].attrs.contains_key("disabled") {
                        doc.toggle(c);
                        effects.extend(doc.nodes[c].on_click.iter().cloned().map(|e| (c, e)));
                    }
                    control_done = true;
                }
            }
            effects.extend(doc.nodes[n].on_click.iter().cloned().map(|e| (n, e)));
            if nav.is_none() && tab.is_none() && doc.nodes[n].tag == "a" {
                if let Some(href) = doc.nodes[n].attr("href") {
                    let target = resolve_url(&doc_url, href);
                    if doc.nodes[n].attr("target") == Some("_blank") {
                        tab = Some(target);
                    } else if !same_document(&doc_url, &target) {
                        nav = Some(target);
                    }
                }
            }
        }
        if doc.focusable(k) {
            self.focus = Focus::Element(k);
        }

        for (owner, effect) in effects {
            match effect {
                Effect::Toggle => {
                    let doc = Self::doc_at(self.top.as_mut().expect("page"), &path);
                    doc.toggle(owner);
                }
                Effect::Show(id) => self.with_target(&path, &id, |d, t| d.nodes[t].hidden = false),
                Effect::Hide(id) => self.with_target(&path, &id, |d, t| d.nodes[t].hidden = true),
                Effect::Remove(id) => self.with_target(&path, &id, |d, t| d.detach(t)),
                Effect::Inject { template, into } => self.with_target(&path, &into, |d, t| {
                    d.inject(&template, t);
                }),
                Effect::SetCookie(name, value) => {
                    let host = self.top_host();
                    self.set_cookie(&host, &name, &value);
                }
                Effect::Consent(mode) => {
                    let value = match mode {
                        ConsentMode::AcceptAll => "all".to_string(),
                        ConsentMode::RejectAll => "none".to_string(),
                        ConsentMode::Selection => self.selection(&path),
                    };
                    let host = self.top_host();
                    self.set_cookie(&host, CONSENT_COOKIE, &value);
                }
                Effect::Navigate(url) => nav = Some(resolve_url(&doc_url, &url)),
                Effect::OpenTab(url) => tab = Some(resolve_url(&doc_url, &url)),
            }
        }
        if let Some(top) = self.top.as_mut() {
            top.relayout();
        }
        if tab.is_some() {
            self.extra_windows.push(format!("tab-{}", self.next_window));
            self.next_window += 1;
        }
        if let Some(url) = nav {
            if self.load(&url).is_err() {
                if let Some(top) = self.top.as_mut() {
                    top.url = url;
                }
            }
        }
    }

    fn with_target(&mut self, path: &[usize], id: &str, f: impl FnOnce(&mut SimDoc, usize)) {
        let top = self.top.as_mut().expect("page loaded");
        if let Some(t) = Self::doc_at(top, path).find_by_id(id) {
            f(Self::doc_at(top, path), t);
        } else if let Some(t) = top.find_by_id(id) {
            f(top, t);
        }
    }

    /// `category=0|1` pairs for every categorised control.
    fn selection(&mut self, path: &[usize]) -> String {
        let top = self.top.as_mut().expect("page loaded");
        let mut states = collect_categories(Self::doc_at(top, path));
        if states.is_empty() {
            states = collect_categories(top);
        }
        states
            .iter()
            .map(|(c, on)| format!("{c}={}", u8::from(*on)))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_selected(&self, id: NodeId) -> Result<Option<bool>, DriverError> {
        let doc = self.cur()?;
        Ok(doc.key_of(id).map(|k| doc.nodes[k].checked.unwrap_or(false)))
    }

    pub fn window_handles(&self) -> Vec<String> {
        std::iter::once("main".to_string())
            .chain(self.extra_windows.iter().cloned())
            .collect()
    }

    pub fn close_window(&mut self, handle: &str) {
        self.extra_windows.retain(|h| h != handle);
    }

    pub fn focus_node(&mut self, id: NodeId) -> Result<bool, DriverError> {
        match self.key(id)? {
            Some(k) => {
                self.focus = Focus::Element(k);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn active_node(&self) -> Result<Option<NodeId>, DriverError> {
        let doc = self.cur()?;
        Ok(match self.focus {
            Focus::Element(k) if doc.nodes[k].attached => Some(doc.node_id(k)),
            _ => None,
        })
    }

    pub fn tab(&mut self) -> Result<(), DriverError> {
        let doc = self.cur()?;
        self.focus = match self.focus {
            Focus::Document | Focus::Chrome => doc.next_focus(None).map_or(Focus::Chrome, Focus::Element),
            Focus::Element(k) => doc.next_focus(Some(k)).map_or(Focus::Chrome, Focus::Element),
        };
        Ok(())
    }

    /// Classifies the element behind `css` for state queries.
    pub fn probe(&self, css: &str) -> Result<Probe, DriverError> {
        let Some(id) = self.find(css)? else {
            return Ok(Probe::Gone);
        };
        let doc = self.cur()?;
        let Some(k) = doc.key_of(id) else {
            return Ok(Probe::Gone);
        };
        if k != doc.root && k != doc.body && !doc.visible(k) {
            return Ok(Probe::Gone);
        }
        let control = doc.label_control(k).unwrap_or(k);
        if doc.nodes[control].is_checkable_input() {
            return Ok(Probe::Native(doc.node_id(control)));
        }
        let own = &doc.nodes[k];
        if own.is_aria_checkable() {
            return Ok(Probe::Aria(own.attr("aria-checked") == Some("true")));
        }
        Ok(Probe::Stateless)
    }

    /// State as seen through a selector, with labels reporting their control.
    pub fn state_of(&self, css: &str) -> Result<ElementState, DriverError> {
        Ok(match self.probe(css)? {
            Probe::Gone => ElementState::Gone,
            Probe::Native(id) => match self.is_selected(id)? {
                Some(on) => checked(on),
                None => ElementState::Gone,
            },
            Probe::Aria(on) => checked(on),
            Probe::Stateless => ElementState::Stateless,
        })
    }

    pub fn enter_frame(&mut self, id: NodeId) -> Result<(), DriverError> {
        let doc = self.cur()?;
        let k = doc
            .key_of(id)
            .filter(|&k| doc.nodes[k].frame.is_some())
            .ok_or_else(|| DriverError::Command {
                error: "no such frame".into(),
                message: format!("node {id} is not a frame"),
            })?;
        self.frame_path.push(k);
        self.focus = Focus::Document;
        Ok(())
    }

    pub fn leave_frames(&mut self) {
        self.frame_path.clear();
    }

    pub fn ready(&self) -> bool {
        self.top.is_some()
    }

    pub fn current_snapshot(&self) -> Result<PageSnapshot, DriverError> {
        Ok(self.cur()?.snapshot(true))
    }

    pub fn href(&self) -> Result<String, DriverError> {
        Ok(self.cur()?.url.clone())
    }
}

/// Result of [`SimBrowser::probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Gone,
    Native(NodeId),
    Aria(bool),
    Stateless,
}

fn collect_categories(doc: &SimDoc) -> BTreeMap<String, bool> {
    let mut out = BTreeMap::new();
    for k in doc.preorder() {
        let n = &doc.nodes[k];
        let Some(cat) = n.attr("data-category") else {
            continue;
        };
        let on = if n.is_checkable_input() {
            n.checked.unwrap_or(false)
        } else if n.is_aria_checkable() {
            n.attr("aria-checked") == Some("true")
        } else {
            continue;
        };
        out.insert(cat.to_string(), on);
    }
    out
}

fn checked(on: bool) -> ElementState {
    if on {
        ElementState::Selected
    } else {
        ElementState::NotSelected
    }
}

fn no_page() -> DriverError {
    DriverError::Command {
        error: "no such window".into(),
        message: "no page loaded".into(),
    }
}

/// Parses a consent cookie value into per-category states. `all` and `none`
/// return an empty map with the given default.
pub fn parse_consent(value: &str) -> (Option<bool>, BTreeMap<String, bool>) {
    match value {
        "all" => (Some(true), BTreeMap::new()),
        "none" => (Some(false), BTreeMap::new()),
        _ => (
            None,
            value
                .split(',')
                .filter_map(|p| p.split_once('='))
                .map(|(c, v)| (c.to_string(), v == "1"))
                .collect(),
        ),
    }
}

impl Browser for SimBrowser {
    fn session(&self) -> &Session {
        &self.session
    }

    fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn navigate(&mut self, url: &str) -> Result<PageSnapshot, DriverError> {
        self.load(url)?;
        self.pause(self.config.settle_delay_ms);
        self.snapshot()
    }

    fn snapshot(&mut self) -> Result<PageSnapshot, DriverError> {
        self.current_snapshot()
    }

    fn current_url(&mut self) -> Result<String, DriverError> {
        self.href()
    }

    fn focus(&mut self, target: &SelectorPath) -> Result<bool, DriverError> {
        match self.find(&target.css)? {
            Some(id) => self.focus_node(id),
            None => Ok(false),
        }
    }

    fn press_tab(&mut self) -> Result<(), DriverError> {
        self.tab()
    }

    fn active_element(&mut self) -> Result<Option<NodeId>, DriverError> {
        self.active_node()
    }

    fn click(&mut self, target: &SelectorPath) -> Result<ClickOutcome, DriverError> {
        let Some(id) = self.find(&target.css)? else {
            return Ok(ClickOutcome::failed(ClickErrorKind::Stale));
        };
        let before = self.top_url().unwrap_or_default().to_string();
        let windows = self.extra_windows.len();
        if let Err(kind) = self.click_node(id) {
            return Ok(ClickOutcome::failed(kind));
        }
        let new_tab = self.extra_windows.len() > windows;
        self.extra_windows.truncate(windows);
        let after = self.top_url().unwrap_or_default();
        Ok(ClickOutcome::ok(!same_document(&before, after), new_tab))
    }

    fn query_state(&mut self, target: &SelectorPath) -> Result<ElementState, DriverError> {
        self.state_of(&target.css)
    }

    fn reset(&mut self, url: &str) -> Result<PageSnapshot, DriverError> {
        self.frame_path.clear();
        self.cookies.clear();
        self.extra_windows.clear();
        self.navigate(url)
    }

    fn switch_to_frame(&mut self, frame: Option<&SelectorPath>) -> Result<(), DriverError> {
        match frame {
            None => {
                self.leave_frames();
                Ok(())
            }
            Some(sel) => {
                let id = self
                    .find(&sel.css)?
                    .ok_or_else(|| DriverError::ContainerGone(sel.css.clone()))?;
                self.enter_frame(id)
            }
        }
    }

    fn pause(&mut self, ms: u64) {
        self.virtual_ms += ms;
    }

    fn close(&mut self) -> Result<(), DriverError> {
        self.top = None;
        self.frame_path.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::spec::*;
    use super::*;

    fn registry() -> Arc<SiteRegistry> {
        let mut reg = SiteRegistry::new();
        reg.add(Site::new("shop.test", |req| {
            let mut doc = DocSpec::new("Shop").body(page_chrome("Shop"));
            if req.path != "/" {
                return None;
            }
            if !req.consented() {
                doc.push(
                    el("div")
                        .id("banner")
                        .fixed(Anchor::Bottom)
                        .z(999)
                        .children([
                            para("We use cookies to improve your experience."),
                            el("div").id("cats").hidden().children([
                                checkbox_row("Analytics", "analytics", true),
                                aria_switch("Advertising", "ads", true),
                            ]),
                            el("div").row().children([
                                button("Accept all")
                                    .id("accept")
                                    .on(Effect::Consent(ConsentMode::AcceptAll))
                                    .on(Effect::Hide("banner".into())),
                                button("Settings").id("settings").on(Effect::Show("cats".into())),
                                button("Save")
                                    .id("save")
                                    .on(Effect::Consent(ConsentMode::Selection))
                                    .on(Effect::Hide("banner".into())),
                                link("Privacy policy", "/privacy").id("policy"),
                                link("Partners", "https://partners.test/").attr("target", "_blank").id("partners"),
                            ]),
                        ]),
                );
            }
            Some(doc)
        }));
        reg.add(Site::new("slow.test", |_| Some(DocSpec::new("slow"))).hanging());
        Arc::new(reg)
    }

    fn browser() -> SimBrowser {
        SimBrowser::new(registry(), SessionConfig::default())
    }

    fn sel(css: &str) -> SelectorPath {
        SelectorPath::new(css, crate::dom::SelectorStrategy::ById)
    }

    #[test]
    fn selection_consent_records_toggled_state() {
        let mut b = browser();
        b.navigate("https://shop.test/").unwrap();
        assert_eq!(b.query_state(&sel("#cats input")).unwrap(), ElementState::Gone);
        assert!(b.click(&sel("#settings")).unwrap().clicked);
        assert_eq!(b.query_state(&sel("#cats input")).unwrap(), ElementState::Selected);
        b.click(&sel("#cats input")).unwrap();
        b.click(&sel("[role=\"switch\"]")).unwrap();
        assert_eq!(b.query_state(&sel("[role=\"switch\"]")).unwrap(), ElementState::NotSelected);
        b.click(&sel("#save")).unwrap();
        assert_eq!(b.cookies_for("shop.test")[CONSENT_COOKIE], "ads=0,analytics=0");
        let page = b.navigate("https://shop.test/").unwrap();
        assert!(page.query_unique("#banner").is_none());
        let page = b.reset("https://shop.test/").unwrap();
        assert!(page.query_unique("#banner").is_some());
    }

    #[test]
    fn links_navigate_or_open_tabs() {
        let mut b = browser();
        b.navigate("https://shop.test/").unwrap();
        let out = b.click(&sel("#partners")).unwrap();
        assert!(out.clicked && out.new_tab_opened && !out.url_changed);
        assert_eq!(b.window_handles().len(), 1);
        let out = b.click(&sel("#policy")).unwrap();
        assert!(out.url_changed);
        assert_eq!(b.snapshot().unwrap().title, "404 Not Found");
    }

    #[test]
    fn hidden_and_missing_targets_fail_softly() {
        let mut b = browser();
        b.navigate("https://shop.test/").unwrap();
        let out = b.click(&sel("#cats input")).unwrap();
        assert_eq!(out.error_kind, ClickErrorKind::NotInteractable);
        let out = b.click(&sel("#nope")).unwrap();
        assert_eq!(out.error_kind, ClickErrorKind::Stale);
    }

    #[test]
    fn navigation_failures_map_to_errors() {
        let mut b = browser();
        assert!(matches!(b.navigate("https://slow.test/"), Err(DriverError::NavTimeout { .. })));
        assert!(matches!(b.navigate("https://unknown.test/"), Err(DriverError::PageCrashed(_))));
        assert_eq!(b.virtual_ms(), DEFAULT_TIMEOUT);
    }

    const DEFAULT_TIMEOUT: u64 = crate::driver::DEFAULT_PAGE_LOAD_TIMEOUT_MS;

    #[test]
    fn tab_cycle_walks_banner_controls() {
        let mut b = browser();
        b.navigate("https://shop.test/").unwrap();
        let found = b.tab_cycle(&sel("#banner")).unwrap();
        let ids: Vec<_> = found.iter().filter_map(|e| e.id_attr()).collect();
        assert_eq!(ids, vec!["accept", "settings", "save", "policy", "partners"]);
    }

    #[test]
    fn consent_cookie_parsing() {
        assert_eq!(parse_consent("all").0, Some(true));
        let (d, m) = parse_consent("ads=0,analytics=1");
        assert_eq!(d, None);
        assert!(m["analytics"]);
        assert!(!m["ads"]);
    }
}
