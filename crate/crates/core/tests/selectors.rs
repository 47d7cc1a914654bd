use std::collections::BTreeMap;

use proptest::prelude::*;
use scraper::{Html, Selector};

use optout_core::dom::{generate_selector, BBox, ElementSnapshot, PageSnapshot, SelectorPath, SelectorStrategy, ZIndex};
use optout_core::driver::SessionConfig;
use optout_core::fixtures;
use optout_core::sim::SimBrowser;

const VOID: &[&str] = &["input", "img", "br", "hr", "meta", "link"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render(page: &PageSnapshot, idx: usize, out: &mut String) {
    let el = &page.elements[idx];
    out.push_str(&format!("<{} data-oracle=\"{idx}\"", el.tag_name));
    for (k, v) in &el.attributes {
        out.push_str(&format!(" {k}=\"{}\"", escape(v)));
    }
    out.push('>');
    if VOID.contains(&el.tag_name.as_str()) {
        return;
    }
    out.push_str(&escape(&el.own_text));
    for (i, c) in page.elements.iter().enumerate() {
        if c.parent == Some(el.node_id) {
            render(page, i, out);
        }
    }
    out.push_str(&format!("</{}>", el.tag_name));
}

fn to_html(page: &PageSnapshot) -> String {
    let root = page.elements.iter().position(|e| e.parent.is_none()).expect("root");
    let mut out = String::from("<!DOCTYPE html>");
    render(page, root, &mut out);
    out
}

/// Every generated selector matches its element and nothing else when
/// evaluated by an independent CSS engine on equivalent markup.
fn check_page(page: &PageSnapshot) -> Result<(), String> {
    let doc = Html::parse_document(&to_html(page));
    let oracle = Selector::parse("[data-oracle]").unwrap();
    let parsed = doc.select(&oracle).count();
    if parsed != page.elements.len() {
        return Err(format!("markup reparsed to {parsed} of {} elements", page.elements.len()));
    }
    for (i, el) in page.elements.iter().enumerate() {
        let path = generate_selector(page, el).map_err(|e| format!("{}: {e}", el.tag_name))?;
        if path.css != generate_selector(page, el).unwrap().css {
            return Err(format!("nondeterministic selector for #{i}"));
        }
        let sel = Selector::parse(&path.css).map_err(|e| format!("{:?}: {e:?}", path.css))?;
        let hits: Vec<String> = doc
            .select(&sel)
            .filter_map(|n| n.value().attr("data-oracle").map(str::to_string))
            .collect();
        if hits != [i.to_string()] {
            return Err(format!("{:?} selects {hits:?}, expected [{i}]", path.css));
        }
    }
    Ok(())
}

#[test]
fn fixture_page_selectors_are_unique() {
    let reg = fixtures::shared_registry();
    let mut failures = Vec::new();
    let mut checked = 0;
    for f in fixtures::corpus() {
        let mut b = SimBrowser::new(reg.clone(), SessionConfig::default());
        b.load(&format!("http://{}/", f.host())).unwrap();
        let top = b.current_snapshot().unwrap();
        let mut pages = vec![top.clone()];
        for frame in top.elements.iter().filter(|e| e.tag_name == "iframe") {
            b.enter_frame(frame.node_id).unwrap();
            pages.push(b.current_snapshot().unwrap());
            b.leave_frames();
        }
        for p in &pages {
            checked += p.elements.len();
            if let Err(e) = check_page(p) {
                failures.push(format!("{}: {e}", f.name));
            }
        }
    }
    assert!(checked > 500, "only {checked} elements checked");
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[derive(Debug, Clone)]
struct NodeGen {
    tag: &'static str,
    attrs: BTreeMap<String, String>,
    text: String,
    children: Vec<NodeGen>,
}

fn attrs() -> impl Strategy<Value = BTreeMap<String, String>> {
    let id = prop_oneof![
        Just("banner".to_string()),
        Just("banner".to_string()),
        Just("a1b2c3d4e5f6".to_string()),
        Just("item-123456".to_string()),
        Just("x:y.z".to_string()),
        Just("1st".to_string()),
        Just("two words".to_string()),
        "[a-z]{1,6}",
    ];
    let class = prop_oneof![
        Just("btn".to_string()),
        Just("btn primary".to_string()),
        Just("cookie-notice".to_string()),
        "[a-z]{1,4}",
    ];
    let value = prop_oneof![
        Just("Accept".to_string()),
        Just("say \"hi\"".to_string()),
        Just("a\\b".to_string()),
        "[a-z ]{0,6}",
    ];
    (
        proptest::option::of(id),
        proptest::option::of(class),
        proptest::option::of(value.clone()),
        proptest::option::of(value),
    )
        .prop_map(|(id, class, label, data)| {
            let mut m = BTreeMap::new();
            if let Some(v) = id {
                m.insert("id".into(), v);
            }
            if let Some(v) = class {
                m.insert("class".into(), v);
            }
            if let Some(v) = label {
                m.insert("aria-label".into(), v);
            }
            if let Some(v) = data {
                m.insert("data-role".into(), v);
            }
            m
        })
}

fn leaf() -> impl Strategy<Value = NodeGen> {
    (prop_oneof![Just("button"), Just("a"), Just("input"), Just("span")], attrs(), "[A-Za-z ]{0,8}").prop_map(
        |(tag, attrs, text)| NodeGen {
            tag,
            attrs,
            text: if tag == "input" { String::new() } else { text },
            children: Vec::new(),
        },
    )
}

fn tree() -> impl Strategy<Value = NodeGen> {
    leaf().prop_recursive(4, 40, 5, |inner| {
        (
            prop_oneof![Just("div"), Just("section"), Just("span"), Just("nav")],
            attrs(),
            proptest::collection::vec(inner, 0..5),
        )
            .prop_map(|(tag, attrs, children)| NodeGen {
                tag,
                attrs,
                text: String::new(),
                children,
            })
    })
}

fn push(page: &mut PageSnapshot, parent: Option<u64>, tag: &str, attrs: BTreeMap<String, String>, text: &str) -> u64 {
    let id = page.elements.len() as u64 + 1;
    page.elements.push(ElementSnapshot {
        node_id: id,
        tag_name: tag.into(),
        attributes: attrs,
        z_index: ZIndex::Auto,
        bbox: BBox::new(0.0, 0.0, 100.0, 20.0),
        displayed: true,
        own_text: text.into(),
        selector_path: SelectorPath::new("", SelectorStrategy::ByNthChildChain),
        doc_order: id - 1,
        parent,
    });
    id
}

fn add(page: &mut PageSnapshot, parent: u64, n: &NodeGen) {
    let id = push(page, Some(parent), n.tag, n.attrs.clone(), &n.text);
    for c in &n.children {
        add(page, id, c);
    }
}

fn build(body: &[NodeGen]) -> PageSnapshot {
    let mut page = PageSnapshot {
        url: "http://random.test/".into(),
        elements: Vec::new(),
        title: String::new(),
        ready: true,
    };
    let html = push(&mut page, None, "html", BTreeMap::new(), "");
    push(&mut page, Some(html), "head", BTreeMap::new(), "");
    let body_id = push(&mut page, Some(html), "body", BTreeMap::new(), "");
    for n in body {
        add(&mut page, body_id, n);
    }
    page
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_page_selectors_are_unique(body in proptest::collection::vec(tree(), 1..6)) {
        let page = build(&body);
        if let Err(e) = check_page(&page) {
            prop_assert!(false, "{}", e);
        }
    }
}
