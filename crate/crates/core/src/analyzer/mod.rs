//! Notice exploration: elements, views, labels and states.

mod audit;
mod explore;
mod label;

use serde::{Deserialize, Serialize};

use crate::decision::{
    serialize_outline, ElementTag, NoticeOutline, OutlineEntry, OutlineView, SerialError, SerializedNotice,
    SwitchState, TagKind,
};
use crate::dom::{ElementSnapshot, SelectorPath};
use crate::driver::ElementState;
use crate::roles::{Role, RoleProbeResult, ViewPath};

pub use audit::{AuditLog, AuditRecord};
pub use explore::{
    discover_elements, explore_views, filter_outbound, probe_all, AnalyzeError, ExploreOptions, Removal,
    DEFAULT_MAX_VIEW_DEPTH,
};
pub use label::{extract_label, extract_label_near, MAX_LABEL_CHARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ControlState {
    Selected,
    NotSelected,
    Stateless,
}

impl ControlState {
    pub fn from_element_state(s: ElementState) -> Option<Self> {
        match s {
            ElementState::Selected => Some(ControlState::Selected),
            ElementState::NotSelected => Some(ControlState::NotSelected),
            ElementState::Stateless => Some(ControlState::Stateless),
            ElementState::Gone => None,
        }
    }

    pub fn switch_state(self) -> Option<SwitchState> {
        match self {
            ControlState::Selected => Some(SwitchState::Selected),
            ControlState::NotSelected => Some(SwitchState::NotSelected),
            ControlState::Stateless => None,
        }
    }

    pub fn tag_kind(self) -> TagKind {
        match self {
            ControlState::Stateless => TagKind::Button,
            _ => TagKind::Switch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Discovery {
    Tabbed,
    HiddenSupplement,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractiveElement {
    pub tag: ElementTag,
    pub snapshot: ElementSnapshot,
    pub label: String,
    pub state: ControlState,
    pub view_index: usize,
    pub discovery: Discovery,
    /// Selector that is clicked and queried; a visible label for hidden inputs.
    pub click_target: SelectorPath,
    pub role: Option<Role>,
    pub probe: Option<RoleProbeResult>,
    /// Type C element of the same view whose click reveals this one.
    pub revealed_by: Option<ElementTag>,
    /// Replay that makes this element reachable on a fresh page.
    pub path: ViewPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    pub elements: Vec<InteractiveElement>,
    pub opened_by: Option<(usize, ElementTag)>,
    pub container: SelectorPath,
    pub path: ViewPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoticeModel {
    pub domain: String,
    pub url: String,
    pub views: Vec<View>,
    pub notice_selector: SelectorPath,
    pub frame_selector: Option<SelectorPath>,
    pub accept_only: bool,
    /// A settings control leading to a separate page was filtered.
    pub dedicated_page: bool,
    /// Exploration stopped at the click budget.
    pub truncated: bool,
    /// Detection fell back to the baseline classifier.
    pub degraded: bool,
    pub clicks_used: u32,
}

impl NoticeModel {
    pub fn elements(&self) -> impl Iterator<Item = &InteractiveElement> {
        self.views.iter().flat_map(|v| v.elements.iter())
    }

    pub fn find(&self, tag: ElementTag) -> Option<&InteractiveElement> {
        self.elements().find(|e| e.tag == tag)
    }

    pub fn find_by_label(&self, label: &str) -> Option<&InteractiveElement> {
        self.elements().find(|e| e.label == label)
    }

    /// Planner view of the model; UNKNOWN elements are left out.
    pub fn outline(&self) -> NoticeOutline {
        NoticeOutline {
            views: self
                .views
                .iter()
                .map(|v| OutlineView {
                    entries: v
                        .elements
                        .iter()
                        .filter(|e| e.role != Some(Role::Unknown))
                        .map(|e| OutlineEntry {
                            tag: e.tag,
                            label: e.label.clone(),
                            state: e.state.switch_state(),
                            role: e.role,
                            revealed_by: e.revealed_by,
                        })
                        .collect(),
                    opened_by: v.opened_by,
                })
                .collect(),
            accept_only: self.accept_only,
        }
    }

    pub fn serialize(&self) -> Result<SerializedNotice, SerialError> {
        serialize(self)
    }
}

/// Serialized notice text for the planner.
pub fn serialize(model: &NoticeModel) -> Result<SerializedNotice, SerialError> {
    let outline = model.outline();
    let mut sn = serialize_outline(&outline)?;
    // Empty views are dropped by the serializer; keep opener links aligned.
    if sn.outline.views.len() != outline.views.len() {
        sn.outline = reindex_views(&outline);
    }
    Ok(sn)
}

fn reindex_views(outline: &NoticeOutline) -> NoticeOutline {
    let mut map = vec![None; outline.views.len()];
    let mut kept = Vec::new();
    for (i, v) in outline.views.iter().enumerate() {
        if !v.entries.is_empty() {
            map[i] = Some(kept.len());
            kept.push(v.clone());
        }
    }
    for v in &mut kept {
        v.opened_by = v.opened_by.and_then(|(from, tag)| map[from].map(|f| (f, tag)));
    }
    let reindexed = NoticeOutline {
        views: kept,
        accept_only: outline.accept_only,
    };
    serialize_outline(&reindexed).map(|sn| sn.outline).unwrap_or(reindexed)
}
