//! Notice serialization, label semantics and click planning.

mod plan;
mod semantics;
mod serial;

pub use plan::{
    consent_enabled, needs_toggle, parse_plan, parse_plan_text, plan, plan_external, plan_rules, render_plan,
    validate, ClickPlan, PlanError, PlanStep, Provider, EXTERNAL_TIMEOUT,
};
pub use semantics::{classify_label_semantics, is_essential_category, is_objection, normalize_label, LabelSemantics};
pub use serial::{
    parse_serialized, sanitize_label, serialize_outline, ElementTag, NoticeOutline, OutlineEntry, OutlineView,
    SerialError, SerializedNotice, SwitchState, TagKind,
};
