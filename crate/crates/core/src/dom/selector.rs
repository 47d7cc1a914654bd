//! CSS selector subset: parsing, evaluation over a [`PageSnapshot`], and
//! generation of stable unique selectors.
//!
//! The subset covers what the generator emits plus what fixture markup
//! needs: type, `#id`, `.class`, `[attr]`, `[attr="v"]`, `:nth-child(n)`,
//! `:root`, descendant and child combinators, and selector groups.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::{DomError, ElementSnapshot, NodeId, PageSnapshot, SelectorPath, SelectorStrategy};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectorError {
    #[error("selector syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Simple {
    Tag(String),
    Universal,
    Id(String),
    Class(String),
    AttrExists(String),
    AttrEquals(String, String),
    NthChild(usize),
    Root,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combinator {
    Descendant,
    Child,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Compound(Vec<Simple>);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Complex {
    // Rightmost compound last; combinators[i] joins parts[i] and parts[i + 1].
    parts: Vec<Compound>,
    combinators: Vec<Combinator>,
}

/// A parsed selector group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    alternatives: Vec<Complex>,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> SelectorError {
        SelectorError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.bump();
        }
        self.pos > start
    }

    fn ident_start(c: char) -> bool {
        c.is_ascii_alphabetic() || c == '_' || c == '-' || c == '\\' || !c.is_ascii()
    }

    fn ident_char(c: char) -> bool {
        c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '\\' || !c.is_ascii()
    }

    fn escape(&mut self) -> Result<char, SelectorError> {
        // after the backslash
        let start = self.pos;
        let mut hex = String::new();
        while hex.len() < 6 {
            match self.peek() {
                Some(c) if c.is_ascii_hexdigit() => {
                    hex.push(c);
                    self.bump();
                }
                _ => break,
            }
        }
        if hex.is_empty() {
            return match self.bump() {
                Some('\n') | None => Err(SelectorError::Syntax {
                    pos: start,
                    msg: "bad escape".into(),
                }),
                Some(c) => Ok(c),
            };
        }
        if matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.bump();
        }
        let cp = u32::from_str_radix(&hex, 16).unwrap_or(0xFFFD);
        Ok(char::from_u32(cp)
            .filter(|c| *c != '\0')
            .unwrap_or('\u{FFFD}'))
    }

    fn ident(&mut self) -> Result<String, SelectorError> {
        let mut out = String::new();
        let mut escaped = false;
        match self.peek() {
            Some(c) if Self::ident_start(c) => {}
            _ => return Err(self.err("expected identifier")),
        }
        if self.peek() == Some('-') {
            out.push('-');
            self.bump();
            match self.peek() {
                Some(c) if c.is_ascii_digit() => return Err(self.err("identifier starts with -digit")),
                _ => {}
            }
        }
        while let Some(c) = self.peek() {
            if !Self::ident_char(c) {
                break;
            }
            self.bump();
            if c == '\\' {
                escaped = true;
                out.push(self.escape()?);
            } else {
                out.push(c);
            }
        }
        if out.is_empty() || (out == "-" && !escaped) {
            return Err(self.err("empty identifier"));
        }
        Ok(out)
    }

    fn string(&mut self) -> Result<String, SelectorError> {
        let quote = self.bump().ok_or_else(|| self.err("expected string"))?;
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.err("unterminated string")),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => {
                    if self.peek() == Some('\n') {
                        self.bump();
                    } else {
                        out.push(self.escape()?);
                    }
                }
                Some('\n') => return Err(self.err("newline in string")),
                Some(c) => out.push(c),
            }
        }
    }

    fn attr(&mut self) -> Result<Simple, SelectorError> {
        self.skip_ws();
        let name = self.ident()?.to_ascii_lowercase();
        self.skip_ws();
        match self.bump() {
            Some(']') => Ok(Simple::AttrExists(name)),
            Some('=') => {
                self.skip_ws();
                let value = match self.peek() {
                    Some('"') | Some('\'') => self.string()?,
                    _ => self.ident()?,
                };
                self.skip_ws();
                if self.bump() != Some(']') {
                    return Err(self.err("expected ]"));
                }
                Ok(Simple::AttrEquals(name, value))
            }
            _ => Err(self.err("unsupported attribute operator")),
        }
    }

    fn pseudo(&mut self) -> Result<Simple, SelectorError> {
        let name = self.ident()?.to_ascii_lowercase();
        match name.as_str() {
            "root" => Ok(Simple::Root),
            "nth-child" => {
                if self.bump() != Some('(') {
                    return Err(self.err("expected ("));
                }
                self.skip_ws();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                let n: usize = self.src[start..self.pos]
                    .parse()
                    .map_err(|_| self.err("expected integer"))?;
                if n == 0 {
                    return Err(self.err("nth-child index must be positive"));
                }
                self.skip_ws();
                if self.bump() != Some(')') {
                    return Err(self.err("expected )"));
                }
                Ok(Simple::NthChild(n))
            }
            other => Err(self.err(format!("unsupported pseudo-class :{other}"))),
        }
    }

    fn compound(&mut self) -> Result<Compound, SelectorError> {
        let mut parts = Vec::new();
        match self.peek() {
            Some('*') => {
                self.bump();
                parts.push(Simple::Universal);
            }
            Some(c) if Self::ident_start(c) => {
                parts.push(Simple::Tag(self.ident()?.to_ascii_lowercase()));
            }
            _ => {}
        }
        loop {
            match self.peek() {
                Some('#') => {
                    self.bump();
                    parts.push(Simple::Id(self.ident()?));
                }
                Some('.') => {
                    self.bump();
                    parts.push(Simple::Class(self.ident()?));
                }
                Some('[') => {
                    self.bump();
                    parts.push(self.attr()?);
                }
                Some(':') => {
                    self.bump();
                    parts.push(self.pseudo()?);
                }
                _ => break,
            }
        }
        if parts.is_empty() {
            return Err(self.err("expected compound selector"));
        }
        Ok(Compound(parts))
    }

    fn complex(&mut self) -> Result<Complex, SelectorError> {
        self.skip_ws();
        let mut parts = vec![self.compound()?];
        let mut combinators = Vec::new();
        loop {
            let had_ws = self.skip_ws();
            match self.peek() {
                Some('>') => {
                    self.bump();
                    self.skip_ws();
                    combinators.push(Combinator::Child);
                    parts.push(self.compound()?);
                }
                Some(',') | None => break,
                Some(_) if had_ws => {
                    combinators.push(Combinator::Descendant);
                    parts.push(self.compound()?);
                }
                Some(c) => return Err(self.err(format!("unexpected {c:?}"))),
            }
        }
        Ok(Complex { parts, combinators })
    }

    fn group(&mut self) -> Result<Selector, SelectorError> {
        let mut alternatives = vec![self.complex()?];
        while self.peek() == Some(',') {
            self.bump();
            alternatives.push(self.complex()?);
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.err("trailing input"));
        }
        Ok(Selector { alternatives })
    }
}

pub fn parse_selector(css: &str) -> Result<Selector, SelectorError> {
    Parser { src: css, pos: 0 }.group()
}

/// Precomputed tree lookups for one snapshot.
pub(crate) struct PageIndex<'a> {
    pub page: &'a PageSnapshot,
    pos: HashMap<NodeId, usize>,
    child_pos: Vec<usize>,
    id_counts: HashMap<&'a str, usize>,
}

impl<'a> PageIndex<'a> {
    pub fn new(page: &'a PageSnapshot) -> Self {
        let pos: HashMap<NodeId, usize> = page
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.node_id, i))
            .collect();
        let mut counters: HashMap<Option<NodeId>, usize> = HashMap::new();
        let child_pos = page
            .elements
            .iter()
            .map(|e| {
                let c = counters.entry(e.parent).or_insert(0);
                *c += 1;
                *c
            })
            .collect();
        let mut id_counts = HashMap::new();
        for e in &page.elements {
            if let Some(id) = e.id_attr() {
                *id_counts.entry(id).or_insert(0) += 1;
            }
        }
        PageIndex {
            page,
            pos,
            child_pos,
            id_counts,
        }
    }

    fn idx(&self, id: NodeId) -> Option<usize> {
        self.pos.get(&id).copied()
    }

    fn parent_idx(&self, i: usize) -> Option<usize> {
        self.page.elements[i].parent.and_then(|p| self.idx(p))
    }

    fn matches_compound(&self, i: usize, c: &Compound) -> bool {
        let el = &self.page.elements[i];
        c.0.iter().all(|s| match s {
            Simple::Universal => true,
            Simple::Tag(t) => el.tag_name.eq_ignore_ascii_case(t),
            Simple::Id(id) => el.attr("id") == Some(id.as_str()),
            Simple::Class(cls) => el
                .attr("class")
                .is_some_and(|v| v.split_ascii_whitespace().any(|t| t == cls)),
            Simple::AttrExists(name) => el.attributes.contains_key(name),
            Simple::AttrEquals(name, v) => el.attr(name) == Some(v.as_str()),
            Simple::NthChild(n) => self.child_pos[i] == *n,
            Simple::Root => el.parent.is_none(),
        })
    }

    fn matches_from(&self, i: usize, cx: &Complex, part: usize) -> bool {
        if !self.matches_compound(i, &cx.parts[part]) {
            return false;
        }
        if part == 0 {
            return true;
        }
        match cx.combinators[part - 1] {
            Combinator::Child => self
                .parent_idx(i)
                .is_some_and(|p| self.matches_from(p, cx, part - 1)),
            Combinator::Descendant => {
                let mut cur = self.parent_idx(i);
                while let Some(p) = cur {
                    if self.matches_from(p, cx, part - 1) {
                        return true;
                    }
                    cur = self.parent_idx(p);
                }
                false
            }
        }
    }

    fn matches(&self, i: usize, sel: &Selector) -> bool {
        sel.alternatives
            .iter()
            .any(|cx| self.matches_from(i, cx, cx.parts.len() - 1))
    }

    pub fn select(&self, sel: &Selector) -> Vec<&'a ElementSnapshot> {
        (0..self.page.elements.len())
            .filter(|&i| self.matches(i, sel))
            .map(|i| &self.page.elements[i])
            .collect()
    }

    fn count_matches(&self, sel: &Selector, stop_after: usize) -> usize {
        let mut n = 0;
        for i in 0..self.page.elements.len() {
            if self.matches(i, sel) {
                n += 1;
                if n >= stop_after {
                    break;
                }
            }
        }
        n
    }

    fn unique(&self, css: &str, target: NodeId) -> bool {
        let Ok(sel) = parse_selector(css) else {
            return false;
        };
        self.count_matches(&sel, 2) == 1
            && self
                .idx(target)
                .is_some_and(|i| self.matches(i, &sel))
    }

    fn id_is_unique(&self, id: &str) -> bool {
        self.id_counts.get(id).copied() == Some(1)
    }
}

/// Evaluates `css` on the snapshot, returning matches in document order.
pub fn select<'a>(page: &'a PageSnapshot, css: &str) -> Result<Vec<&'a ElementSnapshot>, SelectorError> {
    let sel = parse_selector(css)?;
    Ok(PageIndex::new(page).select(&sel))
}

/// Serializes an identifier the way CSSOM does, so that any string can be
/// used after `#`.
pub fn css_escape_ident(ident: &str) -> String {
    let mut out = String::with_capacity(ident.len());
    let chars: Vec<char> = ident.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let needs_hex = c == '\0'
            || ('\u{1}'..='\u{1f}').contains(&c)
            || c == '\u{7f}'
            || (i == 0 && c.is_ascii_digit())
            || (i == 1 && c.is_ascii_digit() && chars[0] == '-');
        if needs_hex {
            let cp = if c == '\0' { 0xFFFD } else { c as u32 };
            out.push_str(&format!("\\{cp:x} "));
        } else if i == 0 && c == '-' && chars.len() == 1 {
            out.push_str("\\-");
        } else if c.is_ascii_alphanumeric() || c == '-' || c == '_' || !c.is_ascii() {
            out.push(c);
        } else {
            out.push('\\');
            out.push(c);
        }
    }
    out
}

fn css_string(value: &str) -> String {
    let mut out = String::from("\"");
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\a "),
            '\r' => out.push_str("\\d "),
            c if (c as u32) < 0x20 || c == '\u{7f}' => out.push_str(&format!("\\{:x} ", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn random_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[0-9a-fA-F]{8,}|[0-9]{5,}$").unwrap())
}

/// Framework-generated identifiers: a run of eight or more hex characters,
/// or five or more trailing digits.
pub fn is_random_looking(value: &str) -> bool {
    random_re().is_match(value)
}

fn usable_attr_value(v: &str) -> bool {
    !v.trim().is_empty() && v.len() <= 80 && !is_random_looking(v)
}

/// Attribute names tried for [`SelectorStrategy::ByAttrCombo`], in order.
fn stable_attrs(el: &ElementSnapshot) -> Vec<(&str, &str)> {
    const NAMED: [&str; 6] = ["name", "aria-label", "title", "role", "for", "type"];
    let mut out: Vec<(&str, &str)> = Vec::new();
    if let Some(v) = el.attr("data-testid") {
        out.push(("data-testid", v));
    }
    for (k, v) in &el.attributes {
        if k.starts_with("data-") && k != "data-testid" {
            out.push((k, v));
        }
    }
    for k in NAMED {
        if let Some(v) = el.attr(k) {
            out.push((k, v));
        }
    }
    out.retain(|(_, v)| usable_attr_value(v));
    out
}

fn attr_sel(name: &str, value: &str) -> String {
    format!("[{}={}]", css_escape_ident(name), css_string(value))
}

pub(crate) fn generate_with(ix: &PageIndex, element: &ElementSnapshot) -> Result<SelectorPath, DomError> {
    let target = element.node_id;
    if ix.idx(target).is_none() {
        return Err(DomError::UnknownNode(target));
    }

    if let Some(id) = element.id_attr() {
        if !is_random_looking(id) && ix.id_is_unique(id) {
            let css = format!("#{}", css_escape_ident(id));
            if ix.unique(&css, target) {
                return Ok(SelectorPath::new(css, SelectorStrategy::ById));
            }
        }
    }

    let attrs = stable_attrs(element);
    let tag = css_escape_ident(&element.tag_name);
    for (k, v) in &attrs {
        let bare = attr_sel(k, v);
        if ix.unique(&bare, target) {
            return Ok(SelectorPath::new(bare, SelectorStrategy::ByAttrCombo));
        }
        let tagged = format!("{tag}{bare}");
        if ix.unique(&tagged, target) {
            return Ok(SelectorPath::new(tagged, SelectorStrategy::ByAttrCombo));
        }
    }
    for (i, (k1, v1)) in attrs.iter().enumerate() {
        for (k2, v2) in attrs.iter().skip(i + 1) {
            let css = format!("{tag}{}{}", attr_sel(k1, v1), attr_sel(k2, v2));
            if ix.unique(&css, target) {
                return Ok(SelectorPath::new(css, SelectorStrategy::ByAttrCombo));
            }
        }
    }

    let mut segments: Vec<String> = Vec::new();
    let mut cur = element;
    let anchor = loop {
        if cur.node_id != target {
            if let Some(id) = cur.id_attr() {
                if !is_random_looking(id) && ix.id_is_unique(id) {
                    break format!("#{}", css_escape_ident(id));
                }
            }
        }
        match cur.parent.and_then(|p| ix.page.get(p)) {
            Some(parent) => {
                let i = ix.idx(cur.node_id).expect("indexed");
                segments.push(format!(
                    "{}:nth-child({})",
                    css_escape_ident(&cur.tag_name),
                    ix.child_pos[i]
                ));
                cur = parent;
            }
            None => break css_escape_ident(&cur.tag_name),
        }
    };
    segments.push(anchor);
    segments.reverse();
    let css = segments.join(" > ");
    if ix.unique(&css, target) {
        Ok(SelectorPath::new(css, SelectorStrategy::ByNthChildChain))
    } else {
        Err(DomError::SelectorUnresolvable(target))
    }
}

/// Builds a selector that resolves to `element` alone, preferring a stable
/// id, then attribute combinations, then an `nth-child` chain.
pub fn generate_selector(page: &PageSnapshot, element: &ElementSnapshot) -> Result<SelectorPath, DomError> {
    generate_with(&PageIndex::new(page), element)
}

impl PageSnapshot {
    /// Every element matched by `css`.
    pub fn query_all(&self, css: &str) -> Vec<&ElementSnapshot> {
        select(self, css).unwrap_or_default()
    }

    /// The element matched by `css` when there is exactly one.
    pub fn query_unique(&self, css: &str) -> Option<&ElementSnapshot> {
        match self.query_all(css).as_slice() {
            [one] => Some(*one),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::PageBuilder;
    use super::*;

    #[test]
    fn parses_generated_shapes() {
        for css in [
            "#cookie-banner",
            "[data-role=\"save\"]",
            "button[aria-label=\"Accept all\"][type=\"button\"]",
            "#notice > div:nth-child(1) > button:nth-child(2)",
            "html > body:nth-child(2)",
            "div .accept, #x",
            "#\\31 23",
            ":root",
        ] {
            parse_selector(css).unwrap_or_else(|e| panic!("{css}: {e}"));
        }
        for bad in ["", "#", "div >", "[a~=b]", ":hover", "div:nth-child(0)", "a,"] {
            assert!(parse_selector(bad).is_err(), "{bad} should not parse");
        }
    }

    #[test]
    fn escapes_round_trip_through_parser() {
        for id in ["123", "-1a", "a b", "x:y", "é", "a\"b", "-"] {
            let css = format!("#{}", css_escape_ident(id));
            let sel = parse_selector(&css).unwrap();
            assert_eq!(sel.alternatives[0].parts[0].0[0], Simple::Id(id.to_string()), "{css}");
        }
    }

    #[test]
    fn random_id_detection() {
        assert!(is_random_looking("x7f3a9bc1"));
        assert!(is_random_looking("ot-group-id-00042831"));
        assert!(!is_random_looking("cookie-banner"));
        assert!(!is_random_looking("onetrust-accept-btn-handler"));
        assert!(!is_random_looking("btn-2024"));
    }

    #[test]
    fn unique_id_wins() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let banner = b.push(Some(body), "div", &[("id", "cookie-banner")], "");
        let page = b.finish();
        let el = page.get(banner).unwrap();
        assert_eq!(
            generate_selector(&page, el).unwrap(),
            SelectorPath::new("#cookie-banner", SelectorStrategy::ById)
        );
    }

    #[test]
    fn nth_child_chain_anchored_at_id() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let notice = b.push(Some(body), "div", &[("id", "notice")], "");
        let row = b.push(Some(notice), "div", &[], "");
        b.push(Some(row), "button", &[("class", "reject")], "Reject");
        let accept = b.push(Some(row), "button", &[("class", "accept")], "Accept");
        let page = b.finish();
        let el = page.get(accept).unwrap();
        let path = generate_selector(&page, el).unwrap();
        assert_eq!(path.css, "#notice > div:nth-child(1) > button:nth-child(2)");
        assert_eq!(path.strategy, SelectorStrategy::ByNthChildChain);
        assert_eq!(page.query_unique(&path.css).unwrap().node_id, accept);
    }

    #[test]
    fn random_id_falls_back_to_attributes() {
        let mut b = PageBuilder::new();
        let body = b.body();
        b.push(Some(body), "button", &[("data-role", "accept")], "Accept");
        let save = b.push(
            Some(body),
            "button",
            &[("id", "x7f3a9bc1"), ("data-role", "save")],
            "Save",
        );
        let page = b.finish();
        let path = generate_selector(&page, page.get(save).unwrap()).unwrap();
        assert_eq!(path.css, "[data-role=\"save\"]");
        assert_eq!(path.strategy, SelectorStrategy::ByAttrCombo);
        // full-page scan
        let hits: Vec<_> = page
            .elements
            .iter()
            .filter(|e| e.attr("data-role") == Some("save"))
            .collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].node_id, save);
    }

    #[test]
    fn duplicate_ids_are_not_used() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let a = b.push(Some(body), "div", &[("id", "dup")], "");
        b.push(Some(body), "div", &[("id", "dup")], "");
        let page = b.finish();
        let path = generate_selector(&page, page.get(a).unwrap()).unwrap();
        assert_eq!(path.strategy, SelectorStrategy::ByNthChildChain);
        assert_eq!(path.css, "html > body:nth-child(1) > div:nth-child(1)");
    }

    #[test]
    fn descendant_and_group_evaluation() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let outer = b.push(Some(body), "section", &[("class", "cmp dark")], "");
        let inner = b.push(Some(outer), "div", &[], "");
        let btn = b.push(Some(inner), "button", &[("class", "accept primary")], "");
        let other = b.push(Some(body), "a", &[("id", "policy")], "");
        let page = b.finish();
        let ids = |css: &str| -> Vec<NodeId> { page.query_all(css).iter().map(|e| e.node_id).collect() };
        assert_eq!(ids(".cmp .accept"), vec![btn]);
        assert_eq!(ids("section > .accept"), Vec::<NodeId>::new());
        assert_eq!(ids("section > div > button.primary"), vec![btn]);
        assert_eq!(ids("button.accept, #policy"), vec![btn, other]);
        assert_eq!(ids(":root"), vec![1]);
    }

    #[test]
    fn unknown_node_is_an_error() {
        let b = PageBuilder::new();
        let page = b.finish();
        let mut ghost = page.elements[0].clone();
        ghost.node_id = 999;
        assert_eq!(generate_selector(&page, &ghost), Err(DomError::UnknownNode(999)));
    }
}
