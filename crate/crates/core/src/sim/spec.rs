//! Declarative page markup for the fixture engine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Top,
    Bottom,
    Center,
    /// Covers the whole viewport.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Flow,
    Fixed(Anchor),
    /// Offset and size relative to the parent box; outside the flow.
    Abs { x: f64, y: f64, w: f64, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Block,
    Row,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsentMode {
    AcceptAll,
    RejectAll,
    /// Records every `data-category` control as on/off.
    Selection,
}

/// What a click does, beyond native checkbox and link behaviour. Targets
/// are `id` attribute values, looked up in the current document first and
/// then in the top-level document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", content = "arg")]
pub enum Effect {
    /// Flips `checked` on the element that owns the effect.
    Toggle,
    Show(String),
    Hide(String),
    Remove(String),
    Inject { template: String, into: String },
    SetCookie(String, String),
    Consent(ConsentMode),
    Navigate(String),
    OpenTab(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub tag: String,
    pub attrs: BTreeMap<String, String>,
    pub text: String,
    pub children: Vec<NodeSpec>,
    pub hidden: bool,
    pub z: Option<i32>,
    pub position: Position,
    pub layout: Layout,
    pub size: Option<(f64, f64)>,
    pub checked: Option<bool>,
    pub on_click: Vec<Effect>,
    pub frame: Option<Box<DocSpec>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DocSpec {
    pub title: String,
    pub body: Vec<NodeSpec>,
    pub templates: BTreeMap<String, Vec<NodeSpec>>,
}

pub fn el(tag: &str) -> NodeSpec {
    NodeSpec {
        tag: tag.to_ascii_lowercase(),
        attrs: BTreeMap::new(),
        text: String::new(),
        children: Vec::new(),
        hidden: false,
        z: None,
        position: Position::Flow,
        layout: Layout::Block,
        size: None,
        checked: None,
        on_click: Vec::new(),
        frame: None,
    }
}

impl NodeSpec {
    pub fn id(self, id: &str) -> Self {
        self.attr("id", id)
    }

    pub fn class(self, class: &str) -> Self {
        self.attr("class", class)
    }

    pub fn attr(mut self, k: &str, v: &str) -> Self {
        self.attrs.insert(k.to_string(), v.to_string());
        self
    }

    pub fn text(mut self, t: &str) -> Self {
        self.text = t.to_string();
        self
    }

    pub fn child(mut self, c: NodeSpec) -> Self {
        self.children.push(c);
        self
    }

    pub fn children(mut self, cs: impl IntoIterator<Item = NodeSpec>) -> Self {
        self.children.extend(cs);
        self
    }

    pub fn hidden(mut self) -> Self {
        self.hidden = true;
        self
    }

    pub fn z(mut self, z: i32) -> Self {
        self.z = Some(z);
        self
    }

    pub fn fixed(mut self, anchor: Anchor) -> Self {
        self.position = Position::Fixed(anchor);
        self
    }

    pub fn abs(mut self, x: f64, y: f64, w: f64, h: f64) -> Self {
        self.position = Position::Abs { x, y, w, h };
        self
    }

    pub fn row(mut self) -> Self {
        self.layout = Layout::Row;
        self
    }

    pub fn size(mut self, w: f64, h: f64) -> Self {
        self.size = Some((w, h));
        self
    }

    pub fn checked(mut self, on: bool) -> Self {
        self.checked = Some(on);
        if self.tag == "input" && on {
            self.attrs.insert("checked".into(), String::new());
        }
        if self.attrs.get("role").map(String::as_str) == Some("switch") {
            self.attrs
                .insert("aria-checked".into(), if on { "true" } else { "false" }.into());
        }
        self
    }

    pub fn on(mut self, effect: Effect) -> Self {
        self.on_click.push(effect);
        self
    }

    pub fn frame(mut self, doc: DocSpec) -> Self {
        self.frame = Some(Box::new(doc));
        self
    }
}

impl DocSpec {
    pub fn new(title: &str) -> Self {
        DocSpec {
            title: title.to_string(),
            ..DocSpec::default()
        }
    }

    pub fn body(mut self, nodes: impl IntoIterator<Item = NodeSpec>) -> Self {
        self.body.extend(nodes);
        self
    }

    pub fn push(&mut self, node: NodeSpec) {
        self.body.push(node);
    }

    pub fn template(mut self, name: &str, nodes: impl IntoIterator<Item = NodeSpec>) -> Self {
        self.templates
            .insert(name.to_string(), nodes.into_iter().collect());
        self
    }
}

// Markup helpers shared by fixtures and tests.

pub fn button(text: &str) -> NodeSpec {
    el("button").attr("type", "button").text(text)
}

pub fn link(text: &str, href: &str) -> NodeSpec {
    el("a").attr("href", href).text(text)
}

pub fn para(text: &str) -> NodeSpec {
    el("p").text(text)
}

pub fn heading(text: &str) -> NodeSpec {
    el("h3").text(text)
}

/// Native checkbox with a text label beside it.
pub fn checkbox_row(label: &str, category: &str, on: bool) -> NodeSpec {
    el("div").row().children([
        el("input")
            .attr("type", "checkbox")
            .attr("data-category", category)
            .checked(on),
        el("span").text(label),
    ])
}

/// `role=switch` button labelled only by `aria-label`.
pub fn aria_switch(aria_label: &str, category: &str, on: bool) -> NodeSpec {
    el("button")
        .attr("role", "switch")
        .attr("aria-label", aria_label)
        .attr("data-category", category)
        .size(36.0, 20.0)
        .checked(on)
        .on(Effect::Toggle)
}

/// Custom-styled toggle: a display:none checkbox driven by its label.
pub fn styled_switch_row(label: &str, category: &str, input_id: &str, on: bool) -> NodeSpec {
    el("div").row().children([
        el("span").text(label),
        el("label")
            .class("switch")
            .attr("for", input_id)
            .size(40.0, 20.0)
            .children([
                el("input")
                    .id(input_id)
                    .attr("type", "checkbox")
                    .attr("data-category", category)
                    .checked(on)
                    .hidden(),
                el("span").class("slider"),
            ]),
    ])
}

/// Ordinary page content around a notice.
pub fn page_chrome(site: &str) -> Vec<NodeSpec> {
    vec![
        el("header").id("site-header").children([
            el("nav").row().children([
                link("Home", "/"),
                link("News", "/news"),
                link("About", "/about"),
            ]),
        ]),
        el("main").id("content").children([
            el("h1").text(&format!("Welcome to {site}")),
            para("Latest stories and updates from around the world, refreshed every hour."),
            para("Our editors pick the most interesting reads of the day for you."),
        ]),
        el("footer").id("site-footer").children([
            para("All rights reserved."),
            link("Contact", "/contact"),
        ]),
    ]
}
