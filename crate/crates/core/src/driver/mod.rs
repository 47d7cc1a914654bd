//! Browser capabilities the pipeline needs, behind one trait.
//!
//! [`WebDriverSession`] speaks the W3C WebDriver wire protocol. The
//! fixture engine in [`crate::sim`] implements the same trait in-process.

mod scripts;
mod webdriver;

use serde::{Deserialize, Serialize};

use crate::dom::{DomError, ElementSnapshot, NodeId, PageSnapshot, SelectorPath};

pub use scripts::SCRIPT_MARKER_PREFIX;
pub use webdriver::{WebDriverSession, ELEMENT_KEY};

pub const DEFAULT_SETTLE_DELAY_MS: u64 = 2000;
pub const DEFAULT_PAGE_LOAD_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_PROBE_CLICK_GAP_MS: u64 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub endpoint: String,
    pub headless: bool,
    pub page_load_timeout_ms: u64,
    pub settle_delay_ms: u64,
    pub probe_click_gap_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            endpoint: "http://127.0.0.1:4444".into(),
            headless: true,
            page_load_timeout_ms: DEFAULT_PAGE_LOAD_TIMEOUT_MS,
            settle_delay_ms: DEFAULT_SETTLE_DELAY_MS,
            probe_click_gap_ms: DEFAULT_PROBE_CLICK_GAP_MS,
        }
    }
}

/// A live driver session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub base_url: String,
    pub page_load_timeout_ms: u64,
    pub settle_delay_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClickErrorKind {
    None,
    NotInteractable,
    Stale,
    Intercepted,
    Navigated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickOutcome {
    pub clicked: bool,
    pub error_kind: ClickErrorKind,
    pub url_changed: bool,
    pub new_tab_opened: bool,
}

impl ClickOutcome {
    pub fn ok(url_changed: bool, new_tab_opened: bool) -> Self {
        ClickOutcome {
            clicked: true,
            error_kind: ClickErrorKind::None,
            url_changed,
            new_tab_opened,
        }
    }

    pub fn failed(kind: ClickErrorKind) -> Self {
        debug_assert!(kind != ClickErrorKind::None);
        ClickOutcome {
            clicked: false,
            error_kind: kind,
            url_changed: false,
            new_tab_opened: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementState {
    Selected,
    NotSelected,
    Stateless,
    Gone,
}

impl ElementState {
    pub fn is_checked_state(self) -> bool {
        matches!(self, ElementState::Selected | ElementState::NotSelected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConnectCause {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DriverError {
    #[error("driver unreachable ({cause})")]
    DriverUnreachable { cause: ConnectCause },
    #[error("session rejected: {0}")]
    SessionRejected(String),
    #[error("navigation to {url} timed out after {timeout_ms} ms")]
    NavTimeout { url: String, timeout_ms: u64 },
    #[error("page crashed: {0}")]
    PageCrashed(String),
    #[error("container {0} no longer resolves")]
    ContainerGone(String),
    #[error("webdriver error {error}: {message}")]
    Command { error: String, message: String },
    #[error("malformed driver response: {0}")]
    Protocol(String),
    #[error(transparent)]
    Dom(#[from] DomError),
}

/// Browser operations used by every pipeline stage. One implementor value
/// is one single-threaded session.
pub trait Browser {
    fn session(&self) -> &Session;

    fn config(&self) -> &SessionConfig;

    /// Loads `url`, waits for readiness plus the settle delay, then captures.
    fn navigate(&mut self, url: &str) -> Result<PageSnapshot, DriverError>;

    /// Captures the current browsing context without navigating.
    fn snapshot(&mut self) -> Result<PageSnapshot, DriverError>;

    fn current_url(&mut self) -> Result<String, DriverError>;

    /// Moves focus to the element; `false` when it does not resolve.
    fn focus(&mut self, target: &SelectorPath) -> Result<bool, DriverError>;

    fn press_tab(&mut self) -> Result<(), DriverError>;

    /// Node id of the focused element in the numbering of the latest
    /// snapshot, or `None` when focus is on the document or browser chrome.
    fn active_element(&mut self) -> Result<Option<NodeId>, DriverError>;

    /// One element click. Interactability failures are reported in the
    /// outcome, never raised; new tabs are closed before returning.
    fn click(&mut self, target: &SelectorPath) -> Result<ClickOutcome, DriverError>;

    fn query_state(&mut self, target: &SelectorPath) -> Result<ElementState, DriverError>;

    /// Clears cookies and storage, then navigates.
    fn reset(&mut self, url: &str) -> Result<PageSnapshot, DriverError>;

    /// `None` selects the top-level document.
    fn switch_to_frame(&mut self, frame: Option<&SelectorPath>) -> Result<(), DriverError>;

    fn pause(&mut self, ms: u64);

    fn close(&mut self) -> Result<(), DriverError>;

    /// Focus-order walk of the interactive descendants of `within`.
    ///
    /// Stops when focus revisits an element or lands outside the container
    /// on two consecutive presses.
    fn tab_cycle(&mut self, within: &SelectorPath) -> Result<Vec<ElementSnapshot>, DriverError> {
        let page = self.snapshot()?;
        let container = page
            .query_unique(&within.css)
            .ok_or_else(|| DriverError::ContainerGone(within.css.clone()))?
            .node_id;
        if !self.focus(within)? {
            return Err(DriverError::ContainerGone(within.css.clone()));
        }
        let limit = page.elements.len() + 2;
        let mut found: Vec<ElementSnapshot> = Vec::new();
        let mut outside = 0;
        for _ in 0..limit {
            self.press_tab()?;
            let inside = self
                .active_element()?
                .and_then(|id| page.get(id))
                .filter(|el| page.is_descendant(el, container));
            match inside {
                Some(el) => {
                    if found.iter().any(|f| f.node_id == el.node_id) {
                        break;
                    }
                    found.push(el.clone());
                    outside = 0;
                }
                None => {
                    outside += 1;
                    if outside >= 2 {
                        break;
                    }
                }
            }
        }
        Ok(found)
    }
}

/// URL equality for navigation detection: fragments are ignored.
pub fn same_document(a: &str, b: &str) -> bool {
    match (url::Url::parse(a), url::Url::parse(b)) {
        (Ok(mut ua), Ok(mut ub)) => {
            ua.set_fragment(None);
            ub.set_fragment(None);
            ua == ub
        }
        _ => a.split('#').next() == b.split('#').next(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fragment_changes_are_same_document() {
        assert!(same_document("https://a.test/x#one", "https://a.test/x#two"));
        assert!(same_document("https://a.test/x", "https://a.test/x#"));
        assert!(!same_document("https://a.test/x", "https://a.test/policy"));
        assert!(!same_document("https://a.test/x", "https://b.test/x"));
    }

    #[test]
    fn click_outcome_invariant() {
        let ok = ClickOutcome::ok(true, false);
        assert!(ok.clicked && ok.error_kind == ClickErrorKind::None);
        let bad = ClickOutcome::failed(ClickErrorKind::Stale);
        assert!(!bad.clicked && !bad.url_changed);
    }
}
