//! Cookie notice detection over stacking candidates.

mod classifier;

use serde::{Deserialize, Serialize};

use crate::dom::{is_visible, stacking_candidates, DomError, ElementSnapshot, PageSnapshot, SelectorPath};
use crate::driver::{Browser, DriverError};

pub use classifier::{
    baseline_score, classify, logistic, score_candidate, ClassifierError, ClassifierHandle, ClassifierKind,
    Features, Score, BASELINE_BIAS, BASELINE_WEIGHTS, DEFAULT_MAX_TOKENS, DEFAULT_THRESHOLD,
};

/// Scores within this distance count as tied.
pub const TIE_EPSILON: f64 = 0.01;

/// Frames covering less of the viewport than this are not searched.
pub const FRAME_MIN_VIEWPORT_SHARE: f64 = 0.10;

const INTERACTIVE_TAGS: &[&str] = &["button", "a", "input", "select", "textarea"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoticeCandidate {
    pub element: ElementSnapshot,
    pub concatenated_text: String,
    pub score: f64,
    /// The external classifier failed and the baseline scored this candidate.
    pub degraded: bool,
    /// Set when the notice lives inside an iframe.
    pub frame: Option<SelectorPath>,
}

impl NoticeCandidate {
    pub fn selector(&self) -> &SelectorPath {
        &self.element.selector_path
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Dom(#[from] DomError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

fn is_interactive(el: &ElementSnapshot) -> bool {
    INTERACTIVE_TAGS.contains(&el.tag_name.as_str())
        || matches!(el.attr("role"), Some("button") | Some("switch") | Some("checkbox") | Some("link"))
}

/// Text an interactive element contributes when it has no text of its own.
fn control_label(el: &ElementSnapshot) -> Option<&str> {
    if !is_interactive(el) {
        return None;
    }
    ["aria-label", "value", "title", "placeholder"]
        .iter()
        .filter_map(|a| el.attr(a))
        .map(str::trim)
        .find(|v| !v.is_empty())
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Visible text of `el` and its descendants in document order, normalized
/// and cut to `max_tokens` tokens.
pub fn extract_candidate_text_with(page: &PageSnapshot, el: &ElementSnapshot, max_tokens: usize) -> String {
    let mut parts: Vec<&str> = Vec::new();
    let mut nodes = vec![el];
    nodes.extend(page.descendants(el.node_id));
    for n in nodes {
        if !is_visible(n) {
            continue;
        }
        if n.has_own_text() {
            parts.push(&n.own_text);
        } else if let Some(l) = control_label(n) {
            parts.push(l);
        }
    }
    normalize_ws(&parts.join(" "))
        .split(' ')
        .filter(|t| !t.is_empty())
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn extract_candidate_text(page: &PageSnapshot, el: &ElementSnapshot) -> String {
    extract_candidate_text_with(page, el, DEFAULT_MAX_TOKENS)
}

fn interactive_count(page: &PageSnapshot, el: &ElementSnapshot) -> usize {
    page.descendants(el.node_id)
        .into_iter()
        .filter(|d| is_visible(d) && is_interactive(d))
        .count()
}

/// Every stacking candidate with its text and score, in stacking order.
pub fn score_candidates(page: &PageSnapshot, h: &ClassifierHandle) -> Result<Vec<NoticeCandidate>, DetectError> {
    h.validate()?;
    let candidates = stacking_candidates(page)?;
    Ok(candidates
        .into_iter()
        .map(|el| {
            let text = extract_candidate_text_with(page, &el, h.max_tokens);
            let score = score_candidate(h, &text, interactive_count(page, &el));
            NoticeCandidate {
                element: el,
                concatenated_text: text,
                score: score.p.clamp(0.0, 1.0),
                degraded: score.degraded,
                frame: None,
            }
        })
        .collect())
}

/// Highest-scoring candidate at or above threshold; earlier stacking
/// order wins ties within [`TIE_EPSILON`].
pub fn detect_notice(page: &PageSnapshot, h: &ClassifierHandle) -> Result<Option<NoticeCandidate>, DetectError> {
    let mut best: Option<NoticeCandidate> = None;
    for c in score_candidates(page, h)? {
        if c.score < h.threshold {
            continue;
        }
        if best.as_ref().is_none_or(|b| c.score > b.score + TIE_EPSILON) {
            best = Some(c);
        }
    }
    Ok(best)
}

/// Large visible iframes, in document order.
pub fn frame_candidates(page: &PageSnapshot) -> Vec<&ElementSnapshot> {
    let viewport = page.viewport_area();
    page.elements
        .iter()
        .filter(|e| e.tag_name == "iframe" && is_visible(e))
        .filter(|e| viewport > 0.0 && e.bbox.area() / viewport > FRAME_MIN_VIEWPORT_SHARE)
        .collect()
}

/// Detects on the live page, retrying inside large iframes. On success the
/// session is left in the browsing context that holds the notice.
pub fn detect_in_session<B: Browser + ?Sized>(
    browser: &mut B,
    h: &ClassifierHandle,
) -> Result<Option<NoticeCandidate>, DetectError> {
    browser.switch_to_frame(None)?;
    let page = browser.snapshot()?;
    if let Some(c) = detect_notice(&page, h)? {
        return Ok(Some(c));
    }
    for frame in frame_candidates(&page) {
        let sel = frame.selector_path.clone();
        if browser.switch_to_frame(Some(&sel)).is_err() {
            continue;
        }
        let inner = browser.snapshot()?;
        if let Some(mut c) = detect_notice(&inner, h)? {
            c.frame = Some(sel);
            return Ok(Some(c));
        }
        browser.switch_to_frame(None)?;
    }
    Ok(None)
}
