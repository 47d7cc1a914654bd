//! Page snapshots, stacking order and visibility.
//!
//! Everything here is a plain value type. A [`PageSnapshot`] is what the
//! driver captures from a live document; all later stages reason over it
//! without touching the browser again.

mod selector;

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

pub use selector::{
    css_escape_ident, generate_selector, is_random_looking, parse_selector, select, Selector,
    SelectorError,
};

/// Opaque per-session element identifier.
pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomError {
    #[error("page has no visible elements")]
    EmptyPage,
    #[error("page is not ready")]
    NotReady,
    #[error("no unique selector exists for node {0}")]
    SelectorUnresolvable(NodeId),
    #[error("node {0} is not part of the page")]
    UnknownNode(NodeId),
}

/// Computed z-index: `auto` unless the element carries an explicit number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ZIndex {
    #[default]
    Auto,
    Value(i32),
}

impl ZIndex {
    pub fn explicit(self) -> Option<i32> {
        match self {
            ZIndex::Auto => None,
            ZIndex::Value(v) => Some(v),
        }
    }
}

impl Serialize for ZIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ZIndex::Auto => serializer.serialize_str("auto"),
            ZIndex::Value(v) => serializer.serialize_i32(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ZIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ZVisitor;

        impl<'de> Visitor<'de> for ZVisitor {
            type Value = ZIndex;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ZIndex, E> {
                if v == "auto" {
                    Ok(ZIndex::Auto)
                } else {
                    v.trim()
                        .parse::<i32>()
                        .map(ZIndex::Value)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ZIndex, E> {
                i32::try_from(v)
                    .map(ZIndex::Value)
                    .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ZIndex, E> {
                i32::try_from(v)
                    .map(ZIndex::Value)
                    .map_err(|_| E::invalid_value(de::Unexpected::Unsigned(v), &self))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ZIndex, E> {
                Ok(ZIndex::Value(v as i32))
            }
        }

        deserializer.deserialize_any(ZVisitor)
    }
}

/// Border box in CSS pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        BBox {
            x,
            y,
            width: width.max(0.0),
            height: height.max(0.0),
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center_distance(&self, other: &BBox) -> f64 {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SelectorStrategy {
    ById,
    ByAttrCombo,
    ByNthChildChain,
}

/// A CSS selector that resolved to exactly one element when it was built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SelectorPath {
    pub css: String,
    pub strategy: SelectorStrategy,
}

impl SelectorPath {
    pub fn new(css: impl Into<String>, strategy: SelectorStrategy) -> Self {
        SelectorPath {
            css: css.into(),
            strategy,
        }
    }
}

impl fmt::Display for SelectorPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.css)
    }
}

/// One DOM element as captured by the driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSnapshot {
    pub node_id: NodeId,
    pub tag_name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default)]
    pub z_index: ZIndex,
    pub bbox: BBox,
    pub displayed: bool,
    #[serde(default)]
    pub own_text: String,
    pub selector_path: SelectorPath,
    pub doc_order: u64,
    /// Parent element; `None` for the document root.
    #[serde(default)]
    pub parent: Option<NodeId>,
}

impl ElementSnapshot {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn id_attr(&self) -> Option<&str> {
        self.attr("id").filter(|v| !v.is_empty())
    }

    pub fn has_own_text(&self) -> bool {
        !self.own_text.trim().is_empty()
    }
}

/// Whole-document capture in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSnapshot {
    pub url: String,
    pub elements: Vec<ElementSnapshot>,
    #[serde(default)]
    pub title: String,
    pub ready: bool,
}

impl PageSnapshot {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn get(&self, id: NodeId) -> Option<&ElementSnapshot> {
        self.index_of(id).map(|i| &self.elements[i])
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.elements.iter().position(|e| e.node_id == id)
    }

    pub fn contains(&self, el: &ElementSnapshot) -> bool {
        self.get(el.node_id).is_some()
    }

    pub fn root(&self) -> Option<&ElementSnapshot> {
        self.elements.iter().find(|e| e.parent.is_none())
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = &ElementSnapshot> {
        self.elements.iter().filter(move |e| e.parent == Some(id))
    }

    /// 1-based position among element siblings.
    pub fn child_position(&self, el: &ElementSnapshot) -> usize {
        match el.parent {
            Some(p) => self
                .children(p)
                .position(|c| c.node_id == el.node_id)
                .map(|i| i + 1)
                .unwrap_or(1),
            None => 1,
        }
    }

    pub fn ancestors(&self, el: &ElementSnapshot) -> Vec<&ElementSnapshot> {
        let mut out = Vec::new();
        let mut cur = el.parent;
        while let Some(id) = cur {
            match self.get(id) {
                Some(p) => {
                    out.push(p);
                    cur = p.parent;
                }
                None => break,
            }
        }
        out
    }

    pub fn is_descendant(&self, el: &ElementSnapshot, ancestor: NodeId) -> bool {
        let mut cur = el.parent;
        while let Some(id) = cur {
            if id == ancestor {
                return true;
            }
            cur = self.get(id).and_then(|p| p.parent);
        }
        false
    }

    /// Strict descendants of `id` in document order.
    pub fn descendants(&self, id: NodeId) -> Vec<&ElementSnapshot> {
        let Some(start) = self.index_of(id) else {
            return Vec::new();
        };
        // Pre-order: descendants are the contiguous run after the node
        // for as long as the ancestry chain reaches it.
        self.elements[start + 1..]
            .iter()
            .take_while(|e| self.is_descendant(e, id))
            .collect()
    }

    pub fn body(&self) -> Option<&ElementSnapshot> {
        self.elements.iter().find(|e| e.tag_name == "body")
    }

    /// Recomputes `selector_path` for every element.
    pub fn assign_selectors(&mut self) -> Result<(), DomError> {
        let paths = self
            .elements
            .iter()
            .map(|e| generate_selector(self, e))
            .collect::<Result<Vec<_>, _>>()?;
        for (el, path) in self.elements.iter_mut().zip(paths) {
            el.selector_path = path;
        }
        Ok(())
    }

    pub fn viewport_area(&self) -> f64 {
        self.root().map(|r| r.bbox.area()).unwrap_or(0.0)
    }
}

/// Driver-reported display state and a positive area.
pub fn is_visible(element: &ElementSnapshot) -> bool {
    element.displayed && element.bbox.width > 0.0 && element.bbox.height > 0.0
}

/// Candidate notice containers: visible explicit `z-index >= 0` elements,
/// topmost first, then the first three and last three visible top-level
/// elements of the body.
pub fn stacking_candidates(page: &PageSnapshot) -> Result<Vec<ElementSnapshot>, DomError> {
    if !page.ready {
        return Err(DomError::NotReady);
    }
    if !page.elements.iter().any(is_visible) {
        return Err(DomError::EmptyPage);
    }

    let mut stacked: Vec<&ElementSnapshot> = page
        .elements
        .iter()
        .filter(|e| is_visible(e) && e.z_index.explicit().is_some_and(|z| z >= 0))
        .collect();
    stacked.sort_by(|a, b| {
        let za = a.z_index.explicit().unwrap_or(0);
        let zb = b.z_index.explicit().unwrap_or(0);
        zb.cmp(&za).then(b.doc_order.cmp(&a.doc_order))
    });

    let edge: Vec<&ElementSnapshot> = {
        let top_level: Vec<&ElementSnapshot> = match page.body() {
            Some(body) => page.children(body.node_id).filter(|e| is_visible(e)).collect(),
            None => Vec::new(),
        };
        let pool = if top_level.is_empty() {
            page.elements.iter().filter(|e| is_visible(e)).collect()
        } else {
            top_level
        };
        let n = pool.len();
        let mut picked: Vec<&ElementSnapshot> = pool.iter().take(3).copied().collect();
        picked.extend(pool.iter().skip(n.saturating_sub(3).max(3.min(n))).copied());
        picked
    };

    let mut out: Vec<ElementSnapshot> = Vec::with_capacity(stacked.len() + edge.len());
    for el in stacked.into_iter().chain(edge) {
        if !out.iter().any(|o| o.node_id == el.node_id) {
            out.push(el.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Tiny builder for hand-made snapshots.
    pub struct PageBuilder {
        pub page: PageSnapshot,
        next: NodeId,
    }

    impl PageBuilder {
        pub fn new() -> Self {
            let mut b = PageBuilder {
                page: PageSnapshot {
                    url: "https://fixture.test/".into(),
                    elements: Vec::new(),
                    title: "fixture".into(),
                    ready: true,
                },
                next: 1,
            };
            let html = b.push(None, "html", &[], "");
            b.push(Some(html), "body", &[], "");
            b
        }

        pub fn body(&self) -> NodeId {
            2
        }

        pub fn push(
            &mut self,
            parent: Option<NodeId>,
            tag: &str,
            attrs: &[(&str, &str)],
            text: &str,
        ) -> NodeId {
            let id = self.next;
            self.next += 1;
            let el = ElementSnapshot {
                node_id: id,
                tag_name: tag.into(),
                attributes: attrs
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect(),
                z_index: ZIndex::Auto,
                bbox: BBox::new(0.0, 0.0, 100.0, 20.0),
                displayed: true,
                own_text: text.into(),
                selector_path: SelectorPath::new("", SelectorStrategy::ByNthChildChain),
                doc_order: 0,
                parent,
            };
            // Insert after the last descendant of the parent to keep pre-order.
            let pos = match parent {
                None => self.page.elements.len(),
                Some(p) => {
                    let start = self.page.index_of(p).unwrap();
                    let mut end = start + 1;
                    while end < self.page.elements.len()
                        && self.page.is_descendant(&self.page.elements[end], p)
                    {
                        end += 1;
                    }
                    end
                }
            };
            self.page.elements.insert(pos, el);
            for (i, e) in self.page.elements.iter_mut().enumerate() {
                e.doc_order = i as u64;
            }
            id
        }

        pub fn edit(&mut self, id: NodeId, f: impl FnOnce(&mut ElementSnapshot)) {
            let i = self.page.index_of(id).unwrap();
            f(&mut self.page.elements[i]);
        }

        pub fn finish(mut self) -> PageSnapshot {
            self.page.assign_selectors().unwrap();
            self.page
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::PageBuilder;
    use super::*;

    fn el(displayed: bool, w: f64, h: f64) -> ElementSnapshot {
        ElementSnapshot {
            node_id: 1,
            tag_name: "div".into(),
            attributes: BTreeMap::new(),
            z_index: ZIndex::Auto,
            bbox: BBox::new(0.0, 0.0, w, h),
            displayed,
            own_text: String::new(),
            selector_path: SelectorPath::new("div", SelectorStrategy::ByNthChildChain),
            doc_order: 0,
            parent: None,
        }
    }

    #[test]
    fn visibility_predicate() {
        assert!(is_visible(&el(true, 100.0, 40.0)));
        assert!(!is_visible(&el(true, 0.0, 0.0)));
        assert!(!is_visible(&el(false, 100.0, 40.0)));
        assert!(!is_visible(&el(true, 100.0, 0.0)));
    }

    #[test]
    fn z_index_json_encoding() {
        assert_eq!(serde_json::to_string(&ZIndex::Auto).unwrap(), "\"auto\"");
        assert_eq!(serde_json::to_string(&ZIndex::Value(9999)).unwrap(), "9999");
        let z: ZIndex = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(z, ZIndex::Auto);
        let z: ZIndex = serde_json::from_str("-3").unwrap();
        assert_eq!(z, ZIndex::Value(-3));
        assert!(serde_json::from_str::<ZIndex>("\"high\"").is_err());
    }

    fn page_with_body_children(n: usize) -> (PageBuilder, Vec<NodeId>) {
        let mut b = PageBuilder::new();
        let body = b.body();
        let ids = (0..n)
            .map(|i| b.push(Some(body), "div", &[], &format!("block {i}")))
            .collect();
        (b, ids)
    }

    #[test]
    fn overlay_comes_first_then_edges() {
        let (mut b, ids) = page_with_body_children(8);
        let body = b.body();
        let overlay = b.push(Some(body), "div", &[("id", "overlay")], "We use cookies");
        b.edit(overlay, |e| e.z_index = ZIndex::Value(9999));
        let page = b.finish();
        let got: Vec<NodeId> = stacking_candidates(&page)
            .unwrap()
            .iter()
            .map(|e| e.node_id)
            .collect();
        // overlay is also the last top-level child, so it is deduplicated
        let expected = vec![overlay, ids[0], ids[1], ids[2], ids[6], ids[7]];
        assert_eq!(got, expected);
    }

    #[test]
    fn no_explicit_z_gives_edges_only() {
        let (b, ids) = page_with_body_children(10);
        let page = b.finish();
        let got: Vec<NodeId> = stacking_candidates(&page)
            .unwrap()
            .iter()
            .map(|e| e.node_id)
            .collect();
        assert_eq!(got, vec![ids[0], ids[1], ids[2], ids[7], ids[8], ids[9]]);
    }

    #[test]
    fn short_body_is_not_duplicated() {
        let (b, ids) = page_with_body_children(4);
        let page = b.finish();
        let got: Vec<NodeId> = stacking_candidates(&page)
            .unwrap()
            .iter()
            .map(|e| e.node_id)
            .collect();
        assert_eq!(got, ids);
    }

    #[test]
    fn higher_z_first_and_ties_by_later_doc_order() {
        let (mut b, _) = page_with_body_children(2);
        let body = b.body();
        let low = b.push(Some(body), "div", &[], "low");
        let high = b.push(Some(body), "div", &[], "high");
        let tie_a = b.push(Some(body), "div", &[], "tie a");
        let tie_b = b.push(Some(body), "div", &[], "tie b");
        b.edit(low, |e| e.z_index = ZIndex::Value(10));
        b.edit(high, |e| e.z_index = ZIndex::Value(20));
        b.edit(tie_a, |e| e.z_index = ZIndex::Value(5));
        b.edit(tie_b, |e| e.z_index = ZIndex::Value(5));
        let page = b.finish();
        let got: Vec<NodeId> = stacking_candidates(&page)
            .unwrap()
            .iter()
            .map(|e| e.node_id)
            .take(4)
            .collect();
        assert_eq!(got, vec![high, low, tie_b, tie_a]);
    }

    #[test]
    fn negative_and_invisible_overlays_are_skipped() {
        let (mut b, _) = page_with_body_children(7);
        let body = b.body();
        let neg = b.push(Some(body), "div", &[], "behind");
        let hidden = b.push(Some(body), "div", &[], "hidden");
        b.edit(neg, |e| e.z_index = ZIndex::Value(-1));
        b.edit(hidden, |e| {
            e.z_index = ZIndex::Value(100);
            e.displayed = false;
        });
        // keep them out of the edge picks
        for i in 0..3 {
            b.push(Some(body), "div", &[], &format!("tail {i}"));
        }
        let page = b.finish();
        let cands = stacking_candidates(&page).unwrap();
        assert!(cands.iter().all(is_visible));
        assert!(!cands.iter().any(|e| e.node_id == neg || e.node_id == hidden));
    }

    #[test]
    fn empty_and_unready_pages() {
        let mut b = PageBuilder::new();
        b.edit(1, |e| e.displayed = false);
        b.edit(2, |e| e.displayed = false);
        let page = b.finish();
        assert_eq!(stacking_candidates(&page), Err(DomError::EmptyPage));

        let (b, _) = page_with_body_children(2);
        let mut page = b.finish();
        page.ready = false;
        assert_eq!(stacking_candidates(&page), Err(DomError::NotReady));
    }

    #[test]
    fn snapshot_json_round_trip() {
        let (mut b, ids) = page_with_body_children(3);
        b.edit(ids[1], |e| e.z_index = ZIndex::Value(7));
        let page = b.finish();
        let json = page.to_json();
        assert!(json.contains("\"z_index\": \"auto\""));
        assert!(json.contains("\"z_index\": 7"));
        assert_eq!(PageSnapshot::from_json(&json).unwrap(), page);
    }
}
