//! Element tags and the single-line notice text format.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::roles::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagKind {
    Button,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementTag {
    pub kind: TagKind,
    pub index: u32,
}

impl ElementTag {
    pub fn button(index: u32) -> Self {
        ElementTag { kind: TagKind::Button, index }
    }

    pub fn switch(index: u32) -> Self {
        ElementTag { kind: TagKind::Switch, index }
    }

    pub fn rendered(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ElementTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TagKind::Button => write!(f, "button{}", self.index),
            TagKind::Switch => write!(f, "switch{}", self.index),
        }
    }
}

impl FromStr for ElementTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, digits) = if let Some(d) = s.strip_prefix("button") {
            (TagKind::Button, d)
        } else if let Some(d) = s.strip_prefix("switch") {
            (TagKind::Switch, d)
        } else {
            return Err(format!("not a tag: {s:?}"));
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("not a tag: {s:?}"));
        }
        let index = digits.parse().map_err(|_| format!("tag index out of range: {s:?}"))?;
        Ok(ElementTag { kind, index })
    }
}

impl Serialize for ElementTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ElementTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SwitchState {
    Selected,
    NotSelected,
}

impl SwitchState {
    pub fn text(self) -> &'static str {
        match self {
            SwitchState::Selected => "selected",
            SwitchState::NotSelected => "not selected",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SwitchState::Selected => SwitchState::NotSelected,
            SwitchState::NotSelected => SwitchState::Selected,
        }
    }
}

/// One element as the decision step sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineEntry {
    pub tag: ElementTag,
    pub label: String,
    pub state: Option<SwitchState>,
    /// Known only for outlines derived from a probed model.
    pub role: Option<Role>,
    /// Type C element whose click reveals this one.
    pub revealed_by: Option<ElementTag>,
}

impl OutlineEntry {
    pub fn new(tag: ElementTag, label: &str, state: Option<SwitchState>) -> Self {
        OutlineEntry {
            tag,
            label: label.to_string(),
            state,
            role: None,
            revealed_by: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutlineView {
    pub entries: Vec<OutlineEntry>,
    pub opened_by: Option<(usize, ElementTag)>,
}

impl OutlineView {
    pub fn get(&self, tag: ElementTag) -> Option<&OutlineEntry> {
        self.entries.iter().find(|e| e.tag == tag)
    }
}

/// Views and elements of a notice, independent of the live page.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoticeOutline {
    pub views: Vec<OutlineView>,
    pub accept_only: bool,
}

impl NoticeOutline {
    pub fn entry_count(&self) -> usize {
        self.views.iter().map(|v| v.entries.len()).sum()
    }

    pub fn find(&self, tag: ElementTag) -> Option<(usize, &OutlineEntry)> {
        self.views
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.get(tag).map(|e| (i, e)))
    }
}

/// Serialized text plus the outline it was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerializedNotice {
    pub text: String,
    pub outline: NoticeOutline,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerialError {
    #[error("notice has no serializable elements")]
    EmptyModel,
    #[error("serialized notice syntax error: {0}")]
    Syntax(String),
}

pub const VIEW_SEP: &str = " ** ";
pub const ENTRY_SEP: &str = " || ";
pub const END: &str = " <end>";

/// Label text safe to embed in the grammar: lowercase, single spaces,
/// without separator characters.
pub fn sanitize_label(label: &str) -> String {
    let cleaned: String = label
        .chars()
        .map(|c| if matches!(c, '|' | '*' | '<' | '>') { ' ' } else { c })
        .collect();
    let mut l = super::semantics::normalize_label(&cleaned);
    while l.ends_with(',') || l.ends_with('-') {
        l.pop();
        l = l.trim_end().to_string();
    }
    while l.starts_with('-') {
        l.remove(0);
        l = l.trim_start().to_string();
    }
    if l.is_empty() {
        "unlabeled".into()
    } else {
        l
    }
}

fn render_entry(e: &OutlineEntry) -> String {
    match (e.tag.kind, e.state) {
        (TagKind::Switch, Some(s)) => format!("{} - {}, {}", e.tag, e.label, s.text()),
        _ => format!("{} - {}", e.tag, e.label),
    }
}

/// Renders an outline. Labels are sanitized first so the text parses back.
pub fn serialize_outline(outline: &NoticeOutline) -> Result<SerializedNotice, SerialError> {
    let mut outline = outline.clone();
    outline.views.retain(|v| !v.entries.is_empty());
    if outline.views.is_empty() {
        return Err(SerialError::EmptyModel);
    }
    for v in &mut outline.views {
        for e in &mut v.entries {
            e.label = sanitize_label(&e.label);
            if e.tag.kind == TagKind::Switch && e.state.is_none() {
                e.state = Some(SwitchState::NotSelected);
            }
            if e.tag.kind == TagKind::Button {
                e.state = None;
            }
        }
    }
    let text = outline
        .views
        .iter()
        .map(|v| v.entries.iter().map(render_entry).collect::<Vec<_>>().join(ENTRY_SEP))
        .collect::<Vec<_>>()
        .join(VIEW_SEP)
        + END;
    Ok(SerializedNotice { text, outline })
}

fn entry_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^((?:button|switch)\d+)\s*-\s*(.*)$").expect("entry pattern"))
}

fn state_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(.*?)\s*,\s*(selected|not selected)$").expect("state pattern"))
}

/// Parses notice text. Separator spacing is not significant and the
/// trailing `<end>` may be omitted.
pub fn parse_serialized(text: &str) -> Result<NoticeOutline, SerialError> {
    let mut body = text.trim();
    if let Some(b) = body.strip_suffix("<end>") {
        body = b.trim_end();
    }
    if body.is_empty() {
        return Err(SerialError::Syntax("empty input".into()));
    }
    let mut views = Vec::new();
    for (vi, view_text) in body.split("**").enumerate() {
        let mut view = OutlineView::default();
        for entry_text in view_text.split("||") {
            let entry_text = entry_text.split_whitespace().collect::<Vec<_>>().join(" ");
            let caps = entry_re()
                .captures(&entry_text)
                .ok_or_else(|| SerialError::Syntax(format!("view {vi}: bad entry {entry_text:?}")))?;
            let tag: ElementTag = caps[1].parse().map_err(SerialError::Syntax)?;
            let rest = caps[2].trim();
            let (label, state) = match tag.kind {
                TagKind::Switch => {
                    let sc = state_re().captures(rest).ok_or_else(|| {
                        SerialError::Syntax(format!("view {vi}: {tag} has no state"))
                    })?;
                    let state = if &sc[2] == "selected" {
                        SwitchState::Selected
                    } else {
                        SwitchState::NotSelected
                    };
                    (sc[1].trim().to_string(), Some(state))
                }
                TagKind::Button => (rest.to_string(), None),
            };
            if view.get(tag).is_some() {
                return Err(SerialError::Syntax(format!("view {vi}: duplicate tag {tag}")));
            }
            view.entries.push(OutlineEntry::new(tag, &label, state));
        }
        views.push(view);
    }
    Ok(NoticeOutline {
        views,
        accept_only: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_render_and_parse() {
        assert_eq!(ElementTag::switch(3).rendered(), "switch3");
        assert_eq!("button27".parse::<ElementTag>().unwrap(), ElementTag::button(27));
        assert!("button".parse::<ElementTag>().is_err());
        assert!("buttonx".parse::<ElementTag>().is_err());
        assert!("link1".parse::<ElementTag>().is_err());
        assert_eq!(serde_json::to_string(&ElementTag::button(5)).unwrap(), "\"button5\"");
    }

    #[test]
    fn tolerant_separators() {
        let o = parse_serialized(
            "button0 - close || switch5 - advertising cookies , not selected ||button27 - save settings  <end>",
        )
        .unwrap();
        let v = &o.views[0];
        assert_eq!(v.entries.len(), 3);
        assert_eq!(v.entries[1].label, "advertising cookies");
        assert_eq!(v.entries[1].state, Some(SwitchState::NotSelected));
        assert_eq!(v.entries[2].tag, ElementTag::button(27));
    }

    #[test]
    fn syntax_errors() {
        assert!(parse_serialized("").is_err());
        assert!(parse_serialized("<end>").is_err());
        assert!(parse_serialized("switch1 - ads <end>").is_err());
        assert!(parse_serialized("button0 - a || button0 - b <end>").is_err());
        assert!(parse_serialized("link0 - a <end>").is_err());
    }

    #[test]
    fn button_labels_keep_state_words() {
        let o = parse_serialized("button0 - show selected, selected <end>").unwrap();
        assert_eq!(o.views[0].entries[0].label, "show selected, selected");
        assert_eq!(o.views[0].entries[0].state, None);
    }

    #[test]
    fn sanitized_labels_survive() {
        assert_eq!(sanitize_label("  A || B ** <c> "), "a b c");
        assert_eq!(sanitize_label("x,"), "x");
        assert_eq!(sanitize_label("   "), "unlabeled");
    }
}
