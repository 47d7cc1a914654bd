//! Live document state for the fixture engine: node arena, layout,
//! focus order and hit testing.

use std::collections::BTreeMap;

use super::spec::{Anchor, DocSpec, Effect, Layout, NodeSpec, Position};
use crate::dom::{BBox, ElementSnapshot, NodeId, PageSnapshot, SelectorPath, SelectorStrategy, ZIndex};

pub const VIEWPORT_W: f64 = 1280.0;
pub const VIEWPORT_H: f64 = 800.0;
const CHAR_W: f64 = 7.0;
const LINE_H: f64 = 18.0;
const PAD: f64 = 4.0;
const INLINE_MIN_H: f64 = 20.0;

/// Node ids of nested frame documents start at multiples of this.
pub const FRAME_ID_STRIDE: u64 = 100_000;

#[derive(Debug, Clone)]
pub struct SimNode {
    pub tag: String,
    pub attrs: BTreeMap<String, String>,
    pub text: String,
    pub hidden: bool,
    pub z: Option<i32>,
    pub position: Position,
    pub layout: Layout,
    pub size: Option<(f64, f64)>,
    pub checked: Option<bool>,
    pub on_click: Vec<Effect>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub attached: bool,
    pub frame: Option<Box<SimDoc>>,
    pub bbox: BBox,
    pub displayed: bool,
}

impl SimNode {
    pub fn attr(&self, k: &str) -> Option<&str> {
        self.attrs.get(k).map(String::as_str)
    }

    fn inline(&self) -> bool {
        matches!(
            self.tag.as_str(),
            "button" | "a" | "span" | "label" | "input" | "img" | "select"
        )
    }

    pub fn is_checkable_input(&self) -> bool {
        self.tag == "input" && matches!(self.attr("type"), Some("checkbox") | Some("radio"))
    }

    pub fn is_aria_checkable(&self) -> bool {
        matches!(self.attr("role"), Some("switch") | Some("checkbox") | Some("radio"))
            && self.attr("aria-checked").is_some()
    }

    fn tabindex(&self) -> Option<i32> {
        self.attr("tabindex").and_then(|v| v.trim().parse().ok())
    }

    fn natively_focusable(&self) -> bool {
        match self.tag.as_str() {
            "a" => self.attrs.contains_key("href"),
            "button" | "select" | "textarea" | "iframe" => true,
            "input" => self.attr("type") != Some("hidden"),
            _ => false,
        }
    }

    fn disabled(&self) -> bool {
        self.attrs.contains_key("disabled")
    }
}

#[derive(Debug, Clone)]
pub struct SimDoc {
    pub nodes: Vec<SimNode>,
    pub root: usize,
    pub body: usize,
    pub id_base: u64,
    pub url: String,
    pub title: String,
    pub templates: BTreeMap<String, Vec<NodeSpec>>,
    pub viewport: (f64, f64),
}

impl SimDoc {
    pub fn build(spec: &DocSpec, url: &str, id_base: u64, viewport: (f64, f64)) -> SimDoc {
        let mut doc = SimDoc {
            nodes: Vec::new(),
            root: 0,
            body: 0,
            id_base,
            url: url.to_string(),
            title: spec.title.clone(),
            templates: spec.templates.clone(),
            viewport,
        };
        let root = doc.alloc(&super::spec::el("html"), None);
        let head = doc.alloc(&super::spec::el("head").hidden(), Some(root));
        let body = doc.alloc(&super::spec::el("body"), Some(root));
        doc.nodes[root].children = vec![head, body];
        doc.root = root;
        doc.body = body;
        for node in &spec.body {
            let k = doc.instantiate(node, Some(body), url, id_base);
            doc.nodes[body].children.push(k);
        }
        doc.relayout();
        doc
    }

    fn alloc(&mut self, spec: &NodeSpec, parent: Option<usize>) -> usize {
        self.nodes.push(SimNode {
            tag: spec.tag.clone(),
            attrs: spec.attrs.clone(),
            text: spec.text.clone(),
            hidden: spec.hidden,
            z: spec.z,
            position: spec.position,
            layout: spec.layout,
            size: spec.size,
            checked: spec.checked,
            on_click: spec.on_click.clone(),
            parent,
            children: Vec::new(),
            attached: true,
            frame: None,
            bbox: BBox::default(),
            displayed: false,
        });
        self.nodes.len() - 1
    }

    /// Copies a spec subtree into the arena; returns the new subtree root.
    pub fn instantiate(&mut self, spec: &NodeSpec, parent: Option<usize>, url: &str, id_base: u64) -> usize {
        let k = self.alloc(spec, parent);
        if let Some(frame) = &spec.frame {
            let depth = id_base / FRAME_ID_STRIDE + 1;
            let frame_url = spec
                .attrs
                .get("src")
                .map(|s| resolve_url(url, s))
                .unwrap_or_else(|| "about:blank".into());
            let child_base = depth * FRAME_ID_STRIDE + (k as u64) * 1000;
            let size = spec.size.unwrap_or((VIEWPORT_W, VIEWPORT_H));
            self.nodes[k].frame = Some(Box::new(SimDoc::build(frame, &frame_url, child_base, size)));
        }
        for c in &spec.children {
            let ck = self.instantiate(c, Some(k), url, id_base);
            self.nodes[k].children.push(ck);
        }
        k
    }

    pub fn node_id(&self, k: usize) -> NodeId {
        self.id_base + k as u64 + 1
    }

    pub fn key_of(&self, id: NodeId) -> Option<usize> {
        let k = id.checked_sub(self.id_base + 1)? as usize;
        (k < self.nodes.len() && self.nodes[k].attached).then_some(k)
    }

    /// Attached nodes in document pre-order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(k) = stack.pop() {
            if !self.nodes[k].attached {
                continue;
            }
            out.push(k);
            for &c in self.nodes[k].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn find_by_id(&self, id: &str) -> Option<usize> {
        self.preorder()
            .into_iter()
            .find(|&k| self.nodes[k].attr("id") == Some(id))
    }

    pub fn is_ancestor(&self, ancestor: usize, mut k: usize) -> bool {
        while let Some(p) = self.nodes[k].parent {
            if p == ancestor {
                return true;
            }
            k = p;
        }
        false
    }

    pub fn detach(&mut self, k: usize) {
        if let Some(p) = self.nodes[k].parent {
            self.nodes[p].children.retain(|&c| c != k);
        }
        self.mark_detached(k);
    }

    fn mark_detached(&mut self, k: usize) {
        self.nodes[k].attached = false;
        let children = self.nodes[k].children.clone();
        for c in children {
            self.mark_detached(c);
        }
    }

    pub fn inject(&mut self, template: &str, into: usize) -> bool {
        let Some(specs) = self.templates.get(template).cloned() else {
            return false;
        };
        let url = self.url.clone();
        for s in &specs {
            let k = self.instantiate(s, Some(into), &url, self.id_base);
            self.nodes[into].children.push(k);
        }
        true
    }

    /// The label-associated control, if any.
    pub fn label_control(&self, k: usize) -> Option<usize> {
        let n = &self.nodes[k];
        if n.tag != "label" {
            return None;
        }
        if let Some(target) = n.attr("for") {
            return self.find_by_id(target);
        }
        self.descendants(k)
            .into_iter()
            .find(|&d| self.nodes[d].is_checkable_input())
    }

    pub fn descendants(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.nodes[k].children.iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            if !self.nodes[c].attached {
                continue;
            }
            out.push(c);
            for &g in self.nodes[c].children.iter().rev() {
                stack.push(g);
            }
        }
        out
    }

    pub fn toggle(&mut self, k: usize) {
        let n = &mut self.nodes[k];
        let now = !n.checked.unwrap_or(false);
        n.checked = Some(now);
        if n.attrs.contains_key("aria-checked") || n.attr("role") == Some("switch") {
            n.attrs
                .insert("aria-checked".into(), if now { "true" } else { "false" }.into());
        }
    }

    // ---- layout ----

    pub fn relayout(&mut self) {
        let (vw, vh) = self.viewport;
        for n in &mut self.nodes {
            n.bbox = BBox::default();
            n.displayed = false;
        }
        let root = self.root;
        let body = self.body;
        let flow_h = self.layout_flow(body, 0.0, 0.0, vw);
        let page_h = flow_h.max(vh);
        self.nodes[root].bbox = BBox::new(0.0, 0.0, vw, page_h);
        self.nodes[root].displayed = true;
        self.nodes[body].bbox = BBox::new(0.0, 0.0, vw, page_h);

        let fixed: Vec<usize> = self
            .preorder()
            .into_iter()
            .filter(|&k| matches!(self.nodes[k].position, Position::Fixed(_)) && self.shown(k))
            .collect();
        for k in fixed {
            let Position::Fixed(anchor) = self.nodes[k].position else {
                continue;
            };
            let (x, w) = match anchor {
                Anchor::Center => ((vw - 640.0_f64.min(vw)) / 2.0, 640.0_f64.min(vw)),
                _ => (0.0, vw),
            };
            let w = self.nodes[k].size.map(|s| s.0).unwrap_or(w);
            let h = self.layout_box(k, x, 0.0, w);
            let dy = match anchor {
                Anchor::Top | Anchor::Full => 0.0,
                Anchor::Bottom => (vh - h).max(0.0),
                Anchor::Center => ((vh - h) / 2.0).max(0.0),
            };
            if dy != 0.0 {
                self.shift(k, dy);
            }
        }
        let frames: Vec<usize> = (0..self.nodes.len())
            .filter(|&k| self.nodes[k].frame.is_some())
            .collect();
        for k in frames {
            let size = (self.nodes[k].bbox.width, self.nodes[k].bbox.height);
            if let Some(f) = self.nodes[k].frame.as_mut() {
                f.viewport = if size.0 > 0.0 { size } else { f.viewport };
                f.relayout();
            }
        }
    }

    /// Not hidden itself nor under a hidden ancestor.
    pub fn shown(&self, mut k: usize) -> bool {
        loop {
            let n = &self.nodes[k];
            if n.hidden || !n.attached {
                return false;
            }
            match n.parent {
                Some(p) => k = p,
                None => return true,
            }
        }
    }

    fn shift(&mut self, k: usize, dy: f64) {
        self.nodes[k].bbox.y += dy;
        for c in self.nodes[k].children.clone() {
            self.shift(c, dy);
        }
    }

    fn text_width(&self, k: usize) -> f64 {
        let n = &self.nodes[k];
        let chars = n.text.trim().chars().count() as f64;
        if chars == 0.0 {
            return 0.0;
        }
        let pad = if matches!(n.tag.as_str(), "button" | "a") { 16.0 } else { 0.0 };
        chars * CHAR_W + pad
    }

    fn intrinsic_width(&self, k: usize) -> f64 {
        let n = &self.nodes[k];
        if let Some((w, _)) = n.size {
            return w;
        }
        if n.hidden {
            return 0.0;
        }
        if n.is_checkable_input() {
            return 16.0;
        }
        let kids = n
            .children
            .iter()
            .filter(|&&c| self.nodes[c].position == Position::Flow);
        let own = self.text_width(k);
        match n.layout {
            Layout::Row => {
                own + kids
                    .map(|&c| self.intrinsic_width(c) + PAD)
                    .sum::<f64>()
                    + PAD
            }
            Layout::Block => kids
                .map(|&c| self.intrinsic_width(c) + 2.0 * PAD)
                .fold(own, f64::max),
        }
    }

    /// Lays out a flow child; returns the height it occupies.
    fn layout_flow(&mut self, k: usize, x: f64, y: f64, avail: f64) -> f64 {
        if self.nodes[k].hidden || !self.nodes[k].attached {
            return 0.0;
        }
        if self.nodes[k].position != Position::Flow {
            return 0.0;
        }
        self.layout_box(k, x, y, avail)
    }

    fn layout_box(&mut self, k: usize, x: f64, y: f64, avail: f64) -> f64 {
        let (w, fixed_h) = {
            let n = &self.nodes[k];
            match (n.size, n.position) {
                (Some((w, h)), _) => (w.min(avail.max(w)), Some(h)),
                (None, Position::Fixed(Anchor::Full)) => (avail, Some(self.viewport.1)),
                (None, _) if n.inline() => (self.intrinsic_width(k).min(avail), None),
                (None, _) => (avail, None),
            }
        };
        let text_h = {
            let tw = self.text_width(k);
            if tw == 0.0 {
                0.0
            } else {
                (tw / w.max(1.0)).ceil().max(1.0) * LINE_H
            }
        };
        let children = self.nodes[k].children.clone();
        let layout = self.nodes[k].layout;
        let content_h = match layout {
            Layout::Block => {
                let mut cy = y + PAD + text_h;
                for &c in &children {
                    let h = self.layout_flow(c, x + PAD, cy, (w - 2.0 * PAD).max(0.0));
                    if h > 0.0 {
                        cy += h + PAD;
                    }
                }
                cy - y
            }
            Layout::Row => {
                let mut cx = x + PAD + self.text_width(k);
                let mut row_h = text_h;
                for &c in &children {
                    if self.nodes[c].position != Position::Flow || self.nodes[c].hidden {
                        continue;
                    }
                    let cw = self.intrinsic_width(c).min((x + w - cx).max(0.0));
                    let h = self.layout_flow(c, cx, y + PAD, cw);
                    cx += cw + PAD;
                    row_h = row_h.max(h);
                }
                row_h + 2.0 * PAD
            }
        };
        let n = &self.nodes[k];
        let h = match fixed_h {
            Some(h) => h,
            None if n.inline() || n.is_checkable_input() => {
                if n.is_checkable_input() {
                    16.0
                } else {
                    content_h.max(INLINE_MIN_H)
                }
            }
            None if children.is_empty() && text_h == 0.0 => 0.0,
            None => content_h,
        };
        self.nodes[k].bbox = BBox::new(x, y, w, h);
        self.nodes[k].displayed = true;

        for &c in &children {
            if let Position::Abs { x: ax, y: ay, w: aw, h: ah } = self.nodes[c].position {
                if self.nodes[c].hidden {
                    continue;
                }
                self.nodes[c].size = Some((aw, ah));
                self.layout_box(c, x + ax, y + ay, aw);
            }
        }
        h
    }

    // ---- snapshot ----

    pub fn snapshot(&self, ready: bool) -> PageSnapshot {
        let mut page = self.raw_snapshot(ready);
        page.assign_selectors()
            .expect("fixture documents always have unique nth-child paths");
        page
    }

    /// Snapshot without selector paths, for selector resolution.
    pub fn raw_snapshot(&self, ready: bool) -> PageSnapshot {
        let order = self.preorder();
        let elements = order
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let n = &self.nodes[k];
                let displayed = n.displayed && self.shown(k);
                let attrs = n.attrs.clone();
                ElementSnapshot {
                    node_id: self.node_id(k),
                    tag_name: n.tag.clone(),
                    attributes: attrs,
                    z_index: n.z.map(ZIndex::Value).unwrap_or(ZIndex::Auto),
                    bbox: if displayed { n.bbox } else { BBox::default() },
                    displayed,
                    own_text: n.text.clone(),
                    selector_path: SelectorPath::new("", SelectorStrategy::ByNthChildChain),
                    doc_order: i as u64,
                    parent: n.parent.map(|p| self.node_id(p)),
                }
            })
            .collect();
        PageSnapshot {
            url: self.url.clone(),
            elements,
            title: self.title.clone(),
            ready,
        }
    }

    pub fn visible(&self, k: usize) -> bool {
        let n = &self.nodes[k];
        self.shown(k) && n.displayed && n.bbox.width > 0.0 && n.bbox.height > 0.0
    }

    // ---- focus ----

    pub fn focusable(&self, k: usize) -> bool {
        let n = &self.nodes[k];
        if !self.shown(k) || n.disabled() {
            return false;
        }
        match n.tabindex() {
            Some(t) if t < 0 => false,
            Some(_) => true,
            None => n.natively_focusable(),
        }
    }

    /// Sequential focus navigation order.
    pub fn tab_sequence(&self) -> Vec<usize> {
        let order = self.preorder();
        let mut positive: Vec<(i32, usize, usize)> = Vec::new();
        let mut natural = Vec::new();
        for (pos, &k) in order.iter().enumerate() {
            if !self.focusable(k) {
                continue;
            }
            match self.nodes[k].tabindex() {
                Some(t) if t > 0 => positive.push((t, pos, k)),
                _ => natural.push(k),
            }
        }
        positive.sort();
        positive.into_iter().map(|(_, _, k)| k).chain(natural).collect()
    }

    /// Next focus target after `active`; `None` means browser chrome.
    pub fn next_focus(&self, active: Option<usize>) -> Option<usize> {
        let seq = self.tab_sequence();
        match active {
            None => seq.first().copied(),
            Some(a) => {
                if let Some(i) = seq.iter().position(|&k| k == a) {
                    return seq.get(i + 1).copied();
                }
                let order = self.preorder();
                let start = order.iter().position(|&k| k == a)?;
                order[start + 1..]
                    .iter()
                    .copied()
                    .find(|&k| self.focusable(k) && self.nodes[k].tabindex().unwrap_or(0) == 0)
            }
        }
    }

    // ---- hit testing ----

    fn effective_z(&self, mut k: usize) -> (i32, bool) {
        let mut fixed = false;
        let mut z = None;
        loop {
            let n = &self.nodes[k];
            if matches!(n.position, Position::Fixed(_)) {
                fixed = true;
            }
            if z.is_none() {
                z = n.z;
            }
            match n.parent {
                Some(p) => k = p,
                None => break,
            }
        }
        (z.unwrap_or(0), fixed)
    }

    /// Topmost element under the point.
    pub fn hit(&self, x: f64, y: f64) -> Option<usize> {
        let order = self.preorder();
        order
            .iter()
            .enumerate()
            .filter(|&(_, &k)| {
                let b = self.nodes[k].bbox;
                self.visible(k) && x >= b.x && x <= b.x + b.width && y >= b.y && y <= b.y + b.height
            })
            .max_by_key(|&(pos, &k)| {
                let (z, fixed) = self.effective_z(k);
                (z, fixed, pos)
            })
            .map(|(_, &k)| k)
    }

    /// Fixed overlay containing `k`, if any.
    fn fixed_anchor(&self, mut k: usize) -> Option<Anchor> {
        loop {
            if let Position::Fixed(a) = self.nodes[k].position {
                return Some(a);
            }
            k = self.nodes[k].parent?;
        }
    }

    /// Whether another element receives a click aimed at the centre of `k`.
    /// Partial overlays only block other overlays: scrolling into view
    /// moves flow content out from under them.
    pub fn intercepted(&self, k: usize) -> bool {
        let (cx, cy) = self.nodes[k].bbox.center();
        let Some(h) = self.hit(cx, cy) else {
            return false;
        };
        if h == k || self.is_ancestor(k, h) {
            return false;
        }
        match (self.fixed_anchor(k), self.fixed_anchor(h)) {
            (None, Some(a)) => a == Anchor::Full,
            _ => true,
        }
    }
}

/// Resolves `href` against `base` (fragment-only and absolute forms included).
pub fn resolve_url(base: &str, href: &str) -> String {
    url::Url::parse(base)
        .and_then(|b| b.join(href))
        .map(|u| u.to_string())
        .unwrap_or_else(|_| href.to_string())
}

#[cfg(test)]
mod tests {
    use super::super::spec::*;
    use super::*;

    fn doc(body: Vec<NodeSpec>) -> SimDoc {
        SimDoc::build(
            &DocSpec::new("t").body(body),
            "https://t.test/",
            0,
            (VIEWPORT_W, VIEWPORT_H),
        )
    }

    #[test]
    fn hidden_subtrees_have_no_box() {
        let d = doc(vec![el("div").id("a").hidden().child(button("x"))]);
        let k = d.find_by_id("a").unwrap();
        let b = d.nodes[k].children[0];
        assert!(!d.visible(k));
        assert!(!d.visible(b));
        let snap = d.snapshot(true);
        let bs = snap.get(d.node_id(b)).unwrap();
        assert!(!bs.displayed);
    }

    #[test]
    fn bottom_banner_sits_at_viewport_bottom() {
        let d = doc(vec![el("div")
            .id("banner")
            .fixed(Anchor::Bottom)
            .z(100)
            .child(button("OK"))]);
        let k = d.find_by_id("banner").unwrap();
        let b = d.nodes[k].bbox;
        assert!((b.y + b.height - VIEWPORT_H).abs() < 1e-6);
        assert_eq!(b.width, VIEWPORT_W);
    }

    #[test]
    fn wall_intercepts_page_content() {
        let d = doc(vec![
            el("main").child(button("Read more").id("read")),
            el("div")
                .id("wall")
                .fixed(Anchor::Full)
                .z(1000)
                .child(el("div").id("box").child(button("Agree").id("agree"))),
        ]);
        let read = d.find_by_id("read").unwrap();
        let agree = d.find_by_id("agree").unwrap();
        assert!(d.intercepted(read));
        assert!(!d.intercepted(agree));
    }

    #[test]
    fn tab_order_respects_positive_tabindex_and_skips_hidden() {
        let d = doc(vec![
            button("a").id("a"),
            button("b").id("b").attr("tabindex", "1"),
            button("c").id("c").hidden(),
            el("span").id("d").attr("tabindex", "0").text("d"),
            button("e").id("e").attr("tabindex", "-1"),
        ]);
        let ids: Vec<&str> = d
            .tab_sequence()
            .into_iter()
            .map(|k| d.nodes[k].attr("id").unwrap())
            .collect();
        assert_eq!(ids, vec!["b", "a", "d"]);
    }

    #[test]
    fn label_resolves_control() {
        let d = doc(vec![styled_switch_row("Ads", "ads", "ads-input", true)]);
        let label = d
            .preorder()
            .into_iter()
            .find(|&k| d.nodes[k].tag == "label")
            .unwrap();
        let control = d.label_control(label).unwrap();
        assert_eq!(d.nodes[control].attr("id"), Some("ads-input"));
        assert!(d.visible(label));
        assert!(!d.visible(control));
    }
}
