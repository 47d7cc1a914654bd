//! Human-readable labels for interactive elements.

use crate::dom::{is_visible, ElementSnapshot, PageSnapshot};

pub const MAX_LABEL_CHARS: usize = 120;

fn clean(s: &str) -> String {
    let l = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    match l.char_indices().nth(MAX_LABEL_CHARS) {
        Some((cut, _)) => l[..cut].trim_end().to_string(),
        None => l,
    }
}

fn nonblank<'a>(el: &'a ElementSnapshot, attr: &str) -> Option<&'a str> {
    el.attr(attr).filter(|v| !v.trim().is_empty())
}

/// Label of `el`, measured from `anchor` (the visible stand-in for hidden
/// controls). Empty when nothing nearby carries text.
pub fn extract_label_near(page: &PageSnapshot, el: &ElementSnapshot, anchor: &ElementSnapshot) -> String {
    if let Some(a) = nonblank(el, "aria-label") {
        return clean(a);
    }
    if el.tag_name == "input" && matches!(el.attr("type"), Some("button") | Some("submit") | Some("reset")) {
        if let Some(v) = nonblank(el, "value") {
            return clean(v);
        }
    }
    let mut scopes = vec![anchor];
    scopes.extend(page.ancestors(anchor));
    for scope in scopes {
        let mut texts: Vec<&ElementSnapshot> = std::iter::once(scope)
            .chain(page.descendants(scope.node_id))
            .filter(|t| t.has_own_text() && is_visible(t))
            .collect();
        if texts.is_empty() {
            continue;
        }
        texts.sort_by(|a, b| {
            let da = a.bbox.center_distance(&anchor.bbox);
            let db = b.bbox.center_distance(&anchor.bbox);
            da.total_cmp(&db).then(a.doc_order.cmp(&b.doc_order))
        });
        return clean(&texts[0].own_text);
    }
    String::new()
}

/// aria-label when present, otherwise the text closest to the element
/// inside its nearest text-bearing ancestor.
pub fn extract_label(page: &PageSnapshot, el: &ElementSnapshot) -> String {
    extract_label_near(page, el, el)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::testutil::PageBuilder;
    use crate::dom::BBox;

    #[test]
    fn aria_label_wins() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let s = b.push(Some(body), "button", &[("role", "switch"), ("aria-label", "Online Advertising")], "");
        b.push(Some(body), "p", &[], "Other text");
        let page = b.finish();
        assert_eq!(extract_label(&page, page.get(s).unwrap()), "online advertising");
    }

    #[test]
    fn nearest_text_not_the_long_description() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let cat = b.push(Some(body), "div", &[], "");
        let row = b.push(Some(cat), "div", &[], "");
        let h = b.push(Some(row), "h4", &[], "Functionality cookies");
        let sw = b.push(Some(row), "input", &[("type", "checkbox"), ("aria-label", "  ")], "");
        let p = b.push(
            Some(cat),
            "p",
            &[],
            "These cookies enable the website to provide enhanced functionality and personalisation.",
        );
        b.edit(h, |e| e.bbox = BBox::new(0.0, 0.0, 300.0, 24.0));
        b.edit(p, |e| e.bbox = BBox::new(0.0, 30.0, 600.0, 80.0));
        b.edit(sw, |e| e.bbox = BBox::new(560.0, 2.0, 40.0, 20.0));
        let page = b.finish();
        assert_eq!(extract_label(&page, page.get(sw).unwrap()), "functionality cookies");
    }

    #[test]
    fn own_text_and_truncation() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let btn = b.push(Some(body), "button", &[], "  Accept   ALL ");
        let long = "x".repeat(300);
        let d = b.push(Some(body), "div", &[], &long);
        let empty = b.push(Some(body), "div", &[], "");
        let page = b.finish();
        assert_eq!(extract_label(&page, page.get(btn).unwrap()), "accept all");
        assert_eq!(extract_label(&page, page.get(d).unwrap()).chars().count(), MAX_LABEL_CHARS);
        // an ancestor holds text, so the empty div still gets a label
        assert!(!extract_label(&page, page.get(empty).unwrap()).is_empty());
    }

    #[test]
    fn no_text_anywhere_is_empty() {
        let mut b = PageBuilder::new();
        let body = b.body();
        let i = b.push(Some(body), "input", &[("type", "checkbox")], "");
        let page = b.finish();
        assert_eq!(extract_label(&page, page.get(i).unwrap()), "");
    }
}
