//! Execution roles from the click-twice protocol.

use serde::{Deserialize, Serialize};

use crate::detector::{detect_notice, ClassifierHandle, DetectError};
use crate::dom::{is_visible, PageSnapshot, SelectorPath};
use crate::driver::{Browser, ClickOutcome, DriverError, ElementState};

pub const DEFAULT_CLICK_BUDGET: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "TYPE_A")]
    TypeA,
    #[serde(rename = "TYPE_B")]
    TypeB,
    #[serde(rename = "TYPE_C")]
    TypeC,
    #[serde(rename = "TYPE_D")]
    TypeD,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::TypeA => "TYPE_A",
            Role::TypeB => "TYPE_B",
            Role::TypeC => "TYPE_C",
            Role::TypeD => "TYPE_D",
            Role::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeEvidence {
    pub first_click: ClickOutcome,
    pub second_click: ClickOutcome,
    pub state_before: ElementState,
    pub state_after_first: ElementState,
    pub state_after_second: ElementState,
    pub new_notice_detected: bool,
    pub element_visible_after: bool,
    /// Whether the first click changed the page at all.
    pub page_changed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleProbeResult {
    pub role: Role,
    pub evidence: ProbeEvidence,
    /// Type C element whose clicks had no visible effect.
    pub low_confidence: bool,
}

impl RoleProbeResult {
    pub fn from_evidence(evidence: ProbeEvidence) -> Self {
        let role = classify_evidence(&evidence);
        RoleProbeResult {
            role,
            evidence,
            low_confidence: role == Role::TypeC && !evidence.page_changed,
        }
    }
}

fn toggles(ev: &ProbeEvidence) -> bool {
    ev.state_before.is_checked_state()
        && ev.state_after_first.is_checked_state()
        && ev.state_after_second.is_checked_state()
        && ev.state_after_first != ev.state_before
        && ev.state_after_second != ev.state_after_first
}

fn left_page(c: &ClickOutcome) -> bool {
    c.url_changed || c.new_tab_opened
}

/// Applies the role criteria in priority order A > B > C > D.
pub fn classify_evidence(ev: &ProbeEvidence) -> Role {
    let (first, second) = (&ev.first_click, &ev.second_click);
    let both = first.clicked && second.clicked;
    if both && ev.element_visible_after && toggles(ev) {
        return Role::TypeA;
    }
    if first.clicked && ev.new_notice_detected {
        return Role::TypeB;
    }
    let state_fixed = ev.state_after_first == ev.state_before && ev.state_after_second == ev.state_before;
    if both && ev.element_visible_after && state_fixed && !left_page(first) && !left_page(second) {
        return Role::TypeC;
    }
    if first.clicked && !second.clicked && !left_page(first) {
        return Role::TypeD;
    }
    Role::Unknown
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbeError {
    #[error("element {0} vanished before the first click")]
    ProbeAborted(String),
    #[error("exploration budget of {limit} clicks exceeded")]
    ExplorationBudgetExceeded { limit: u32 },
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Clicks allowed per domain, shared by probes and restores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickBudget {
    pub limit: u32,
    pub used: u32,
}

impl Default for ClickBudget {
    fn default() -> Self {
        ClickBudget::new(DEFAULT_CLICK_BUDGET)
    }
}

impl ClickBudget {
    pub fn new(limit: u32) -> Self {
        ClickBudget { limit, used: 0 }
    }

    pub fn remaining(&self) -> u32 {
        self.limit - self.used
    }

    pub fn spend(&mut self, n: u32) -> Result<(), ProbeError> {
        if self.used + n > self.limit {
            return Err(ProbeError::ExplorationBudgetExceeded { limit: self.limit });
        }
        self.used += n;
        Ok(())
    }
}

/// How to bring a fresh page back to a given notice view.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViewPath {
    pub url: String,
    pub frame: Option<SelectorPath>,
    pub clicks: Vec<SelectorPath>,
}

impl ViewPath {
    pub fn new(url: &str, frame: Option<SelectorPath>) -> Self {
        ViewPath {
            url: url.to_string(),
            frame,
            clicks: Vec::new(),
        }
    }

    pub fn then(&self, click: SelectorPath) -> Self {
        let mut p = self.clone();
        p.clicks.push(click);
        p
    }

    /// Reset, re-enter the frame and replay the clicks.
    pub fn restore<B: Browser + ?Sized>(&self, browser: &mut B, budget: &mut ClickBudget) -> Result<(), ProbeError> {
        browser.reset(&self.url)?;
        if let Some(f) = &self.frame {
            browser.switch_to_frame(Some(f))?;
        }
        let settle = browser.config().settle_delay_ms;
        for c in &self.clicks {
            budget.spend(1)?;
            let out = browser.click(c)?;
            if !out.clicked {
                return Err(DriverError::ContainerGone(c.css.clone()).into());
            }
            browser.pause(settle);
        }
        Ok(())
    }
}

fn visible_in(page: &PageSnapshot, target: &SelectorPath) -> bool {
    page.query_unique(&target.css).is_some_and(is_visible)
}

/// A notice unrelated to `notice` appeared, or the target itself went away
/// while some notice is present.
fn new_notice_in(page: &PageSnapshot, target: &SelectorPath, notice: &SelectorPath, h: &ClassifierHandle) -> Result<bool, DetectError> {
    let Some(found) = detect_notice(page, h)? else {
        return Ok(false);
    };
    if !visible_in(page, target) {
        return Ok(true);
    }
    let Some(orig) = page.query_unique(&notice.css).filter(|e| is_visible(e)) else {
        return Ok(true);
    };
    let f = &found.element;
    let related = f.node_id == orig.node_id || page.is_descendant(f, orig.node_id) || page.is_descendant(orig, f.node_id);
    Ok(!related)
}

/// Clicks `target` twice and classifies it. The session must be positioned
/// at the element's view; it is restored through `path` when the probe left
/// the page different from how it found it.
pub fn probe_role<B: Browser + ?Sized>(
    browser: &mut B,
    target: &SelectorPath,
    notice: &SelectorPath,
    path: &ViewPath,
    h: &ClassifierHandle,
    budget: &mut ClickBudget,
) -> Result<RoleProbeResult, ProbeError> {
    let before = browser.snapshot()?;
    let url_before = browser.current_url()?;
    let state_before = browser.query_state(target)?;
    if state_before == ElementState::Gone || !visible_in(&before, target) {
        return Err(ProbeError::ProbeAborted(target.css.clone()));
    }
    let gap = browser.config().probe_click_gap_ms;

    budget.spend(1)?;
    let first_click = browser.click(target)?;
    browser.pause(gap);
    let state_after_first = browser.query_state(target)?;
    let mid = browser.snapshot()?;
    let page_changed = first_click.url_changed || mid.elements != before.elements;
    let new_notice_detected =
        first_click.clicked && !left_page(&first_click) && new_notice_in(&mid, target, notice, h)?;

    budget.spend(1)?;
    let second_click = browser.click(target)?;
    browser.pause(gap);
    let state_after_second = browser.query_state(target)?;
    let after = browser.snapshot()?;
    let element_visible_after = visible_in(&after, target);

    let result = RoleProbeResult::from_evidence(ProbeEvidence {
        first_click,
        second_click,
        state_before,
        state_after_first,
        state_after_second,
        new_notice_detected,
        element_visible_after,
        page_changed,
    });
    if after.elements != before.elements || browser.current_url()? != url_before {
        path.restore(browser, budget)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::ClickErrorKind;
    use proptest::prelude::*;

    const OK: ClickOutcome = ClickOutcome {
        clicked: true,
        error_kind: ClickErrorKind::None,
        url_changed: false,
        new_tab_opened: false,
    };
    const STALE: ClickOutcome = ClickOutcome {
        clicked: false,
        error_kind: ClickErrorKind::Stale,
        url_changed: false,
        new_tab_opened: false,
    };
    use ElementState::*;

    fn ev(first: ClickOutcome, second: ClickOutcome, states: [ElementState; 3], new_notice: bool, visible: bool) -> ProbeEvidence {
        ProbeEvidence {
            first_click: first,
            second_click: second,
            state_before: states[0],
            state_after_first: states[1],
            state_after_second: states[2],
            new_notice_detected: new_notice,
            element_visible_after: visible,
            page_changed: true,
        }
    }

    #[test]
    fn table_roles() {
        let switch = ev(OK, OK, [NotSelected, Selected, NotSelected], false, true);
        assert_eq!(classify_evidence(&switch), Role::TypeA);
        let more = ev(OK, STALE, [Stateless, Gone, Gone], true, false);
        assert_eq!(classify_evidence(&more), Role::TypeB);
        let tab = ev(OK, OK, [Stateless, Stateless, Stateless], false, true);
        assert_eq!(classify_evidence(&tab), Role::TypeC);
        let accept = ev(OK, STALE, [Stateless, Gone, Gone], false, false);
        assert_eq!(classify_evidence(&accept), Role::TypeD);
        let intercepted = ev(STALE, STALE, [Stateless, Stateless, Stateless], false, true);
        assert_eq!(classify_evidence(&intercepted), Role::Unknown);
        let mut nav = accept;
        nav.first_click.url_changed = true;
        assert_eq!(classify_evidence(&nav), Role::Unknown);
    }

    #[test]
    fn decorative_button_is_low_confidence_c() {
        let mut e = ev(OK, OK, [Stateless; 3], false, true);
        e.page_changed = false;
        let r = RoleProbeResult::from_evidence(e);
        assert_eq!(r.role, Role::TypeC);
        assert!(r.low_confidence);
    }

    #[test]
    fn stuck_switch_is_not_type_a() {
        let e = ev(OK, OK, [Selected, Selected, Selected], false, true);
        assert_eq!(classify_evidence(&e), Role::TypeC);
    }

    #[test]
    fn budget_is_enforced() {
        let mut b = ClickBudget::new(3);
        b.spend(2).unwrap();
        assert_eq!(b.spend(2), Err(ProbeError::ExplorationBudgetExceeded { limit: 3 }));
        b.spend(1).unwrap();
        assert_eq!(b.remaining(), 0);
    }

    fn outcome() -> impl Strategy<Value = ClickOutcome> {
        (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(c, u, t)| ClickOutcome {
            clicked: c,
            error_kind: if c { ClickErrorKind::None } else { ClickErrorKind::Stale },
            url_changed: c && u,
            new_tab_opened: c && t,
        })
    }

    fn state() -> impl Strategy<Value = ElementState> {
        prop_oneof![Just(Selected), Just(NotSelected), Just(Stateless), Just(Gone)]
    }

    proptest! {
        #[test]
        fn criteria_are_pure_and_respect_invariants(
            first in outcome(), second in outcome(),
            s in proptest::array::uniform3(state()),
            new_notice: bool, visible: bool,
        ) {
            let e = ev(first, second, s, new_notice, visible);
            let role = classify_evidence(&e);
            prop_assert_eq!(role, classify_evidence(&e));
            if role == Role::TypeA {
                prop_assert_ne!(e.state_before, e.state_after_first);
            }
            if role == Role::TypeD {
                prop_assert!(!e.second_click.clicked);
                prop_assert!(!e.new_notice_detected);
            }
        }
    }
}
