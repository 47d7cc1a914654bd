//! Scripted fixture sites with hand-labelled expectations.
//!
//! Each fixture is served as `{name}.test` by the simulated browser. The
//! expectations are written from the markup, not from pipeline output.

use std::sync::Arc;

use crate::analyzer::NoticeModel;
use crate::db::RecordStatus;
use crate::decision::ClickPlan;
use crate::roles::Role;
use crate::sim::spec::{
    aria_switch, button, checkbox_row, el, heading, link, page_chrome, para, styled_switch_row, Anchor, ConsentMode,
    DocSpec, Effect, NodeSpec,
};
use crate::sim::{Request, Site, SiteRegistry};

use Role::{TypeA as A, TypeB as B, TypeC as C, TypeD as D, Unknown as U};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Standard,
    AcceptOnly,
    NoNotice,
    TwoView,
    InvertedSemantics,
    Dynamic,
    Iframe,
    BlockingWall,
    LegitimateInterest,
    DedicatedPage,
    Buggy,
}

#[derive(Debug, Clone)]
pub struct Expect {
    pub status: RecordStatus,
    /// Labels clicked, grouped by consecutive view.
    pub plan: &'static [&'static [&'static str]],
    /// Scripted role of every element in model order.
    pub roles: &'static [(&'static str, Role)],
    pub m2: bool,
    pub m3: bool,
    /// Why the pipeline is known to miss this page.
    pub known_failure: Option<&'static str>,
}

pub type RenderFn = fn(&Request) -> Option<DocSpec>;

#[derive(Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub category: Category,
    pub render: RenderFn,
    pub expect: Expect,
}

impl Fixture {
    pub fn host(&self) -> String {
        format!("{}.test", self.name)
    }
}

/// Labels clicked by `plan`, grouped by consecutive view index.
pub fn plan_labels(model: &NoticeModel, plan: &ClickPlan) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut last = None;
    for s in &plan.steps {
        let label = model.find(s.tag).map(|e| e.label.clone()).unwrap_or_default();
        if last == Some(s.view_index) {
            out.last_mut().expect("group").push(label);
        } else {
            out.push(vec![label]);
            last = Some(s.view_index);
        }
    }
    out
}

/// Labels and roles of the model's elements in order.
pub fn model_roles(model: &NoticeModel) -> Vec<(String, Option<Role>)> {
    model.elements().map(|e| (e.label.clone(), e.role)).collect()
}

pub fn expected_plan(f: &Fixture) -> Vec<Vec<String>> {
    f.expect
        .plan
        .iter()
        .map(|g| g.iter().map(|s| s.to_string()).collect())
        .collect()
}

pub fn expected_roles(f: &Fixture) -> Vec<(String, Option<Role>)> {
    f.expect.roles.iter().map(|(l, r)| (l.to_string(), Some(*r))).collect()
}

pub fn registry() -> SiteRegistry {
    let mut reg = SiteRegistry::new();
    for f in corpus() {
        let render = f.render;
        reg.add(Site::new(&f.host(), move |req: &Request| render(req)));
    }
    reg
}

pub fn shared_registry() -> Arc<SiteRegistry> {
    Arc::new(registry())
}

pub fn find(name: &str) -> Option<Fixture> {
    corpus().into_iter().find(|f| f.name == name)
}

// Markup helpers.

fn page(req: &Request, title: &str, notice: impl FnOnce() -> Vec<NodeSpec>) -> Option<DocSpec> {
    let mut doc = DocSpec::new(title).body(page_chrome(title));
    if req.path == "/" && !req.consented() {
        for n in notice() {
            doc.push(n);
        }
    }
    Some(doc)
}

fn banner(id: &str, anchor: Anchor, children: impl IntoIterator<Item = NodeSpec>) -> NodeSpec {
    el("div").id(id).fixed(anchor).z(1000).children(children)
}

fn modal(id: &str, children: impl IntoIterator<Item = NodeSpec>) -> NodeSpec {
    el("div").id(id).fixed(Anchor::Center).z(1001).hidden().children(children)
}

fn hides(mut n: NodeSpec, ids: &[&str]) -> NodeSpec {
    for id in ids {
        n = n.on(Effect::Hide(id.to_string()));
    }
    n
}

fn accept(text: &str, ids: &[&str]) -> NodeSpec {
    hides(button(text).on(Effect::Consent(ConsentMode::AcceptAll)), ids)
}

fn reject(text: &str, ids: &[&str]) -> NodeSpec {
    hides(button(text).on(Effect::Consent(ConsentMode::RejectAll)), ids)
}

fn save(text: &str, ids: &[&str]) -> NodeSpec {
    hides(button(text).on(Effect::Consent(ConsentMode::Selection)), ids)
}

fn opens(text: &str, hide: &str, show: &str) -> NodeSpec {
    button(text)
        .on(Effect::Hide(hide.to_string()))
        .on(Effect::Show(show.to_string()))
}

fn buttons(children: impl IntoIterator<Item = NodeSpec>) -> NodeSpec {
    el("div").row().children(children)
}

fn filler(n: usize) -> Vec<NodeSpec> {
    (0..n)
        .map(|i| el("section").child(para(&format!("Section {i}: long-form reporting, analysis and opinion."))))
        .collect()
}

// Sites.

fn reddit(req: &Request) -> Option<DocSpec> {
    page(req, "Reddit", || {
        vec![banner(
            "cb",
            Anchor::Bottom,
            [
                para("Reddit uses cookies to improve your experience and to show you relevant ads."),
                buttons([
                    reject("Reject non-essential", &["cb"]),
                    accept("Accept all", &["cb"]),
                ]),
            ],
        )]
    })
}

fn fig2(req: &Request) -> Option<DocSpec> {
    page(req, "Figure Two", || {
        vec![
            banner(
                "cookie-banner",
                Anchor::Bottom,
                [
                    para("We use cookies to improve your browsing experience. To choose which cookies we set, click \"More Information\"."),
                    buttons([
                        accept("Accept Cookies", &["cookie-banner"]),
                        opens("More Information", "cookie-banner", "prefs"),
                    ]),
                ],
            ),
            modal(
                "prefs",
                [
                    heading("Privacy Preference Center"),
                    el("div").id("p-func").child(checkbox_row("Functional cookies", "functional", true)),
                    button("Analytics and Tracking Cookies").on(Effect::Show("p-analytics".into())),
                    el("div")
                        .id("p-analytics")
                        .hidden()
                        .child(checkbox_row("Analytics cookies", "analytics", true)),
                    save("Save Settings", &["prefs"]),
                ],
            ),
        ]
    })
}

fn netflix(req: &Request) -> Option<DocSpec> {
    page(req, "Netflix", || {
        vec![
            banner(
                "nf",
                Anchor::Bottom,
                [
                    para("Netflix and third parties use cookies and similar technologies on this website to collect information about your browsing activities."),
                    link("Learn more about our use of cookies and information", "/privacy"),
                    buttons([
                        accept("Accept", &["nf"]),
                        reject("Reject", &["nf"]),
                        opens("Personalise my choices", "nf", "nf-prefs"),
                    ]),
                ],
            ),
            modal(
                "nf-prefs",
                [
                    opens("Close", "nf-prefs", "nf"),
                    heading("Cookie preferences"),
                    aria_switch("Advertising cookies", "ads", false),
                    save("Save settings", &["nf-prefs"]),
                ],
            ),
        ]
    })
}

fn wordpress(req: &Request) -> Option<DocSpec> {
    page(req, "WordPress", || {
        vec![
            banner(
                "wp",
                Anchor::Bottom,
                [
                    para("We use cookies to personalise content and ads and to analyse our traffic."),
                    buttons([opens("Customize", "wp", "wp-prefs"), accept("Accept all", &["wp"])]),
                ],
            ),
            modal(
                "wp-prefs",
                [
                    checkbox_row("Analytics: these cookies allow us to optimize performance", "analytics", true),
                    checkbox_row("Advertising: these cookies are set by us and our partners", "ads", false),
                    save("Accept selection", &["wp-prefs"]),
                ],
            ),
        ]
    })
}

fn tata(req: &Request) -> Option<DocSpec> {
    page(req, "Tata", || {
        vec![banner(
            "tt",
            Anchor::Bottom,
            [
                para("Our site uses cookies. Learn more about our use of cookies: cookie policy."),
                buttons([accept("Sweet!", &["tt"]), reject("Sorry, I'm on a diet", &["tt"])]),
            ],
        )]
    })
}

fn newscientist(req: &Request) -> Option<DocSpec> {
    page(req, "New Scientist", || {
        vec![
            banner(
                "ns",
                Anchor::Bottom,
                [
                    para("We and our partners store and access information on your device, such as cookies, and process personal data for personalised ads and content."),
                    buttons([accept("I accept", &["ns"]), opens("Show purposes", "ns", "ns-prefs")]),
                ],
            ),
            modal(
                "ns-prefs",
                [
                    heading("Purposes"),
                    para("Choose how we and our partners may use cookies and process your data."),
                    button("Select basic ads; object to legitimate interests").on(Effect::Show("ns-objected".into())),
                    el("div").id("ns-objected").hidden().child(para("Objection recorded.")),
                    checkbox_row("Analytics cookies", "analytics", false),
                    save("Confirm my choices", &["ns-prefs"]),
                ],
            ),
        ]
    })
}

fn askubuntu(req: &Request) -> Option<DocSpec> {
    page(req, "Ask Ubuntu", || {
        vec![
            banner(
                "au",
                Anchor::Bottom,
                [
                    para("By clicking \"Accept all cookies\", you agree Stack Exchange can store cookies on your device and disclose information in accordance with our Cookie Policy."),
                    buttons([
                        opens("Customize settings", "au", "au-prefs"),
                        accept("Accept all cookies", &["au"]),
                    ]),
                    link("Cookie policy", "/legal/cookie-policy"),
                ],
            ),
            modal(
                "au-prefs",
                [
                    heading("Cookie settings"),
                    checkbox_row("Performance cookies", "performance", false),
                    checkbox_row("Functional cookies", "functional", false),
                    checkbox_row("Targeting cookies", "targeting", false),
                    buttons([
                        save("Confirm my choices", &["au-prefs"]),
                        accept("Accept all cookies", &["au-prefs"]),
                        opens("Cancel", "au-prefs", "au"),
                    ]),
                ],
            ),
        ]
    })
}

fn single_ok(req: &Request) -> Option<DocSpec> {
    page(req, "Single OK", || {
        vec![banner(
            "ok",
            Anchor::Bottom,
            [
                para("This site uses cookies. By continuing to browse you are agreeing to our use of cookies."),
                accept("OK", &["ok"]),
            ],
        )]
    })
}

fn got_it(req: &Request) -> Option<DocSpec> {
    page(req, "Got It", || {
        vec![banner(
            "gi",
            Anchor::Bottom,
            [
                para("Cookies help us deliver our services. By using our services, you agree to our use of cookies."),
                accept("Got it", &["gi"]),
            ],
        )]
    })
}

fn policy_link(req: &Request) -> Option<DocSpec> {
    page(req, "Policy Link", || {
        vec![banner(
            "pl",
            Anchor::Bottom,
            [
                para("We use cookies for analytics."),
                link("Learn more", "/privacy"),
                accept("Accept", &["pl"]),
            ],
        )]
    })
}

fn plain(req: &Request) -> Option<DocSpec> {
    page(req, "Plain", Vec::new)
}

fn newsletter(req: &Request) -> Option<DocSpec> {
    page(req, "Newsletter", || {
        vec![banner(
            "nl",
            Anchor::Center,
            [
                para("Subscribe to our newsletter for weekly updates."),
                buttons([button("Subscribe"), hides(button("No thanks"), &["nl"])]),
            ],
        )]
    })
}

fn chat_widget(req: &Request) -> Option<DocSpec> {
    page(req, "Chat", || {
        vec![banner("chat", Anchor::Bottom, [button("Chat with us")])]
    })
}

fn app_promo(req: &Request) -> Option<DocSpec> {
    page(req, "App Promo", || {
        vec![banner(
            "promo",
            Anchor::Top,
            [
                para("Download our app for a faster reading experience."),
                link("Get the app", "https://apps.example/"),
                hides(button("Not now"), &["promo"]),
            ],
        )]
    })
}

fn inverted_switch(req: &Request) -> Option<DocSpec> {
    page(req, "Inverted", || {
        vec![banner(
            "inv",
            Anchor::Bottom,
            [
                para("We use cookies to measure traffic and show personalised advertising."),
                checkbox_row("Do not allow non-essential cookies", "optout", false),
                buttons([save("Save", &["inv"]), accept("Accept", &["inv"])]),
            ],
        )]
    })
}

fn essential_switch(req: &Request) -> Option<DocSpec> {
    page(req, "Essential Switch", || {
        vec![banner(
            "es",
            Anchor::Bottom,
            [
                para("This website uses cookies for analytics and marketing."),
                checkbox_row("Only necessary cookies", "necessary-only", false),
                buttons([save("Confirm", &["es"]), accept("Accept all", &["es"])]),
            ],
        )]
    })
}

fn injected_modal(req: &Request) -> Option<DocSpec> {
    let doc = page(req, "Injected", || {
        vec![
            banner(
                "ij",
                Anchor::Bottom,
                [
                    para("We and our partners use cookies to deliver personalised advertising and measure its performance."),
                    buttons([
                        accept("Accept all", &["ij"]),
                        button("Manage options")
                            .on(Effect::Inject {
                                template: "prefs".into(),
                                into: "modal-root".into(),
                            })
                            .on(Effect::Hide("ij".into())),
                    ]),
                ],
            ),
            el("div").id("modal-root"),
        ]
    })?;
    Some(doc.template(
        "prefs",
        [el("div")
            .id("ij-prefs")
            .fixed(Anchor::Center)
            .z(1001)
            .children([
                heading("Manage your cookie options"),
                aria_switch("Personalised ads", "ads", true),
                aria_switch("Measurement", "measurement", true),
                button("Save and exit")
                    .on(Effect::Consent(ConsentMode::Selection))
                    .on(Effect::Remove("ij-prefs".into())),
            ])],
    ))
}

fn iframe_banner(req: &Request) -> Option<DocSpec> {
    page(req, "Framed", || {
        let inner = DocSpec::new("consent").body([banner(
            "fr",
            Anchor::Bottom,
            [
                para("We use cookies and similar technologies to personalise content and analyse traffic."),
                buttons([reject("Reject all", &["fr"]), accept("Accept all", &["fr"])]),
            ],
        )]);
        vec![el("iframe")
            .id("consent-frame")
            .fixed(Anchor::Bottom)
            .z(1000)
            .size(1280.0, 200.0)
            .frame(inner)]
    })
}

fn wall(req: &Request) -> Option<DocSpec> {
    page(req, "Wall", || {
        vec![banner(
            "wall",
            Anchor::Full,
            [
                el("div").id("wall-main").children([
                    heading("Your privacy"),
                    para("We use cookies and tracking technologies to fund our journalism. Please choose how we may use your data."),
                    buttons([
                        accept("Accept and continue", &["wall"]),
                        opens("Manage preferences", "wall-main", "wall-prefs"),
                    ]),
                ]),
                el("div").id("wall-prefs").hidden().children([
                    heading("Cookie preferences"),
                    para("Choose which cookies we may set on your device."),
                    checkbox_row("Advertising", "ads", true),
                    checkbox_row("Analytics", "analytics", true),
                    save("Save preferences", &["wall"]),
                ]),
            ],
        )
        .z(2000)]
    })
}

fn wall_reject(req: &Request) -> Option<DocSpec> {
    page(req, "Wall Reject", || {
        vec![banner(
            "wr",
            Anchor::Full,
            [
                heading("Before you continue"),
                para("We use cookies and data to deliver and maintain our services and to show personalised ads."),
                buttons([reject("Reject all", &["wr"]), accept("Accept all", &["wr"])]),
            ],
        )
        .z(2000)]
    })
}

fn tcf_objection(req: &Request) -> Option<DocSpec> {
    page(req, "TCF", || {
        vec![
            banner(
                "tcf",
                Anchor::Bottom,
                [
                    para("We and our 812 partners store and access information on a device, such as cookies, and process personal data based on consent or legitimate interest."),
                    buttons([accept("Accept all", &["tcf"]), opens("Manage vendors", "tcf", "tcf-prefs")]),
                ],
            ),
            modal(
                "tcf-prefs",
                [
                    heading("Legitimate interest"),
                    para("Some partners process data without asking for consent to cookies. You can object to this."),
                    button("Object to all legitimate interests").on(Effect::Show("tcf-objected".into())),
                    el("div").id("tcf-objected").hidden().child(para("Objections saved.")),
                    styled_switch_row("Store and/or access information on a device", "storage", "sw-storage", true),
                    styled_switch_row("Personalised advertising", "padv", "sw-padv", true),
                    save("Save and exit", &["tcf-prefs"]),
                ],
            ),
        ]
    })
}

fn intercepted(req: &Request) -> Option<DocSpec> {
    page(req, "Intercepted", || {
        vec![banner(
            "ic",
            Anchor::Bottom,
            [
                para("We use cookies to improve your experience on our website."),
                buttons([
                    el("div").id("rj-wrap").children([
                        reject("Reject all", &["ic"]),
                        el("div").class("shade").abs(0.0, 0.0, 400.0, 80.0),
                    ]),
                    accept("Accept all", &["ic"]),
                ]),
            ],
        )]
    })
}

fn inline_notice(req: &Request) -> Option<DocSpec> {
    let mut doc = DocSpec::new("Inline");
    let chrome = page_chrome("Inline");
    let (head, tail) = chrome.split_at(1);
    for n in head.iter().cloned().chain(filler(3)) {
        doc.push(n);
    }
    if req.path == "/" && !req.consented() {
        doc.push(el("div").id("inline-cookies").children([
            para("This website uses cookies to analyse traffic and personalise advertising."),
            buttons([reject("Decline", &["inline-cookies"]), accept("Allow", &["inline-cookies"])]),
        ]));
    }
    for n in filler(3).into_iter().chain(tail.iter().cloned()) {
        doc.push(n);
    }
    Some(doc)
}

fn decorative(req: &Request) -> Option<DocSpec> {
    page(req, "Decorative", || {
        vec![banner(
            "dc",
            Anchor::Bottom,
            [
                para("We use cookies to remember your settings and for analytics."),
                buttons([accept("Accept", &["dc"]), reject("Reject", &["dc"]), button("Cookies")]),
            ],
        )]
    })
}

fn horiba(req: &Request) -> Option<DocSpec> {
    let category = |title: &str, cat: &str, desc: &str| {
        el("div").children([
            el("div").row().children([
                el("h4").text(title),
                el("input")
                    .attr("type", "checkbox")
                    .attr("data-category", cat)
                    .checked(true),
            ]),
            para(desc),
        ])
    };
    page(req, "Horiba", || {
        vec![
            banner(
                "hb",
                Anchor::Bottom,
                [
                    para("This website uses cookies to enhance functionality and to analyse how visitors use it."),
                    buttons([accept("Accept all", &["hb"]), opens("Cookie settings", "hb", "hb-prefs")]),
                ],
            ),
            modal(
                "hb-prefs",
                [
                    el("div").children([
                        el("h4").text("Strictly necessary cookies"),
                        el("span").text("Always active"),
                    ]),
                    category(
                        "Functionality cookies",
                        "functionality",
                        "These cookies enable the website to provide enhanced functionality and personalisation.",
                    ),
                    category(
                        "Marketing cookies",
                        "marketing",
                        "These cookies may be set through our site by our advertising partners.",
                    ),
                    save("Save my preferences", &["hb-prefs"]),
                ],
            ),
        ]
    })
}

fn aria_switches(req: &Request) -> Option<DocSpec> {
    page(req, "Aria Switches", || {
        vec![banner(
            "as",
            Anchor::Bottom,
            [
                para("Choose which cookies we may use."),
                aria_switch("Online Advertising", "ads", true),
                aria_switch("Performance", "perf", true),
                buttons([save("Save", &["as"]), accept("Accept all", &["as"])]),
            ],
        )]
    })
}

fn linkedin(req: &Request) -> Option<DocSpec> {
    page(req, "LinkedIn", || {
        vec![banner(
            "li",
            Anchor::Top,
            [
                para("LinkedIn and 3rd parties use essential and non-essential cookies to provide, secure, analyse and improve our services."),
                buttons([accept("Accept", &["li"]), link("Manage preferences", "/mypreferences")]),
            ],
        )]
    })
}

fn nav_settings(req: &Request) -> Option<DocSpec> {
    page(req, "Nav Settings", || {
        vec![banner(
            "nv",
            Anchor::Bottom,
            [
                para("We use cookies to give you the best experience on our website."),
                buttons([
                    accept("Accept", &["nv"]),
                    button("Cookie preferences").on(Effect::Navigate("/cookie-preferences".into())),
                ]),
            ],
        )]
    })
}

fn essential_button(req: &Request) -> Option<DocSpec> {
    page(req, "Essential Button", || {
        vec![
            banner(
                "eb",
                Anchor::Bottom,
                [
                    para("We use cookies to analyse site usage and support our marketing."),
                    buttons([
                        accept("Accept all", &["eb"]),
                        reject("Use necessary cookies only", &["eb"]),
                        opens("Settings", "eb", "eb-prefs"),
                    ]),
                ],
            ),
            modal(
                "eb-prefs",
                [
                    heading("Cookie settings"),
                    aria_switch("Analytics", "analytics", false),
                    save("Save", &["eb-prefs"]),
                ],
            ),
        ]
    })
}

fn reject_in_prefs(req: &Request) -> Option<DocSpec> {
    page(req, "Reject In Prefs", || {
        vec![
            banner(
                "rp",
                Anchor::Bottom,
                [
                    para("This site uses cookies to provide a better experience."),
                    buttons([accept("Accept", &["rp"]), opens("Preferences", "rp", "rp-prefs")]),
                ],
            ),
            modal(
                "rp-prefs",
                [
                    reject("Reject all", &["rp-prefs"]),
                    aria_switch("Marketing", "marketing", true),
                    buttons([save("Save", &["rp-prefs"]), accept("Accept all", &["rp-prefs"])]),
                ],
            ),
        ]
    })
}

fn blank_target(req: &Request) -> Option<DocSpec> {
    page(req, "Blank Target", || {
        vec![banner(
            "bt",
            Anchor::Bottom,
            [
                para("We and our partners use cookies for advertising."),
                link("Our partners", "https://partners.example/").attr("target", "_blank"),
                buttons([reject("Decline", &["bt"]), accept("Allow cookies", &["bt"])]),
            ],
        )]
    })
}

fn top_banner(req: &Request) -> Option<DocSpec> {
    page(req, "Top Banner", || {
        vec![banner(
            "tb",
            Anchor::Top,
            [
                para("We use cookies for statistics and marketing."),
                buttons([reject("Deny", &["tb"]), accept("Allow all", &["tb"])]),
            ],
        )]
    })
}

fn three_level(req: &Request) -> Option<DocSpec> {
    page(req, "Three Level", || {
        vec![
            banner(
                "tl",
                Anchor::Bottom,
                [
                    para("We use cookies to run this site and to understand how it is used."),
                    buttons([accept("Accept", &["tl"]), opens("Options", "tl", "tl-prefs")]),
                ],
            ),
            modal(
                "tl-prefs",
                [
                    el("div").id("tl-one").children([
                        para("Cookie options"),
                        opens("Advanced settings", "tl-one", "tl-two"),
                        accept("Accept all", &["tl-prefs"]),
                    ]),
                    el("div").id("tl-two").hidden().children([
                        heading("Advanced cookie settings"),
                        checkbox_row("Statistics", "stats", true),
                        save("Save", &["tl-prefs"]),
                    ]),
                ],
            ),
        ]
    })
}

fn hidden_checkboxes(req: &Request) -> Option<DocSpec> {
    page(req, "Hidden Checkboxes", || {
        vec![banner(
            "hc",
            Anchor::Bottom,
            [
                para("We use cookies. Please select which cookies you allow."),
                styled_switch_row("Statistics", "stats", "hc-stats", true),
                styled_switch_row("Marketing", "marketing", "hc-marketing", false),
                buttons([save("Allow selection", &["hc"]), accept("Allow all", &["hc"])]),
            ],
        )]
    })
}

pub fn corpus() -> Vec<Fixture> {
    use Category::*;
    let f = |name, category, render: RenderFn, expect| Fixture {
        name,
        category,
        render,
        expect,
    };
    let plan = |status, plan, roles, m3| Expect {
        status,
        plan,
        roles,
        m2: false,
        m3,
        known_failure: None,
    };
    let accept_only = |roles: &'static [(&'static str, Role)]| Expect {
        status: RecordStatus::AcceptOnly,
        plan: &[],
        roles,
        m2: roles.len() == 1,
        m3: false,
        known_failure: None,
    };
    let none = Expect {
        status: RecordStatus::NoNotice,
        plan: &[],
        roles: &[],
        m2: false,
        m3: false,
        known_failure: None,
    };
    let dedicated = |roles| Expect {
        status: RecordStatus::DedicatedPage,
        plan: &[],
        roles,
        m2: false,
        m3: false,
        known_failure: None,
    };
    let p = RecordStatus::Plan;
    vec![
        f("reddit", Standard, reddit, plan(p, &[&["reject non-essential"]], &[("reject non-essential", D), ("accept all", D)], false)),
        f(
            "fig2",
            TwoView,
            fig2,
            plan(
                p,
                &[&["more information"], &["functional cookies", "analytics and tracking cookies", "analytics cookies", "save settings"]],
                &[
                    ("accept cookies", D),
                    ("more information", B),
                    ("functional cookies", A),
                    ("analytics and tracking cookies", C),
                    ("save settings", D),
                    ("analytics cookies", A),
                ],
                true,
            ),
        ),
        f(
            "netflix",
            Standard,
            netflix,
            plan(
                p,
                &[&["reject"]],
                &[
                    ("accept", D),
                    ("reject", D),
                    ("personalise my choices", B),
                    ("close", B),
                    ("advertising cookies", A),
                    ("save settings", D),
                ],
                false,
            ),
        ),
        f(
            "wordpress",
            TwoView,
            wordpress,
            plan(
                p,
                &[&["customize"], &["analytics: these cookies allow us to optimize performance", "accept selection"]],
                &[
                    ("customize", B),
                    ("accept all", D),
                    ("analytics: these cookies allow us to optimize performance", A),
                    ("advertising: these cookies are set by us and our partners", A),
                    ("accept selection", D),
                ],
                true,
            ),
        ),
        f("tata", Standard, tata, plan(p, &[&["sorry, i'm on a diet"]], &[("sweet!", D), ("sorry, i'm on a diet", D)], false)),
        f(
            "newscientist",
            LegitimateInterest,
            newscientist,
            plan(
                p,
                &[&["show purposes"], &["select basic ads; object to legitimate interests", "confirm my choices"]],
                &[
                    ("i accept", D),
                    ("show purposes", B),
                    ("select basic ads; object to legitimate interests", C),
                    ("analytics cookies", A),
                    ("confirm my choices", D),
                ],
                false,
            ),
        ),
        f(
            "askubuntu",
            TwoView,
            askubuntu,
            plan(
                p,
                &[&["customize settings"], &["confirm my choices"]],
                &[
                    ("customize settings", B),
                    ("accept all cookies", D),
                    ("performance cookies", A),
                    ("functional cookies", A),
                    ("targeting cookies", A),
                    ("confirm my choices", D),
                    ("accept all cookies", D),
                    ("cancel", B),
                ],
                false,
            ),
        ),
        f("single-ok", AcceptOnly, single_ok, accept_only(&[("ok", D)])),
        f("got-it", AcceptOnly, got_it, accept_only(&[("got it", D)])),
        f("policy-link", AcceptOnly, policy_link, accept_only(&[("accept", D)])),
        f("plain", NoNotice, plain, none.clone()),
        f("newsletter", NoNotice, newsletter, none.clone()),
        f("chat-widget", NoNotice, chat_widget, none.clone()),
        f("app-promo", NoNotice, app_promo, none.clone()),
        f(
            "inverted-switch",
            InvertedSemantics,
            inverted_switch,
            plan(
                p,
                &[&["do not allow non-essential cookies", "save"]],
                &[("do not allow non-essential cookies", A), ("save", D), ("accept", D)],
                true,
            ),
        ),
        f(
            "essential-switch",
            InvertedSemantics,
            essential_switch,
            plan(
                p,
                &[&["only necessary cookies", "confirm"]],
                &[("only necessary cookies", A), ("confirm", D), ("accept all", D)],
                true,
            ),
        ),
        f(
            "injected-modal",
            Dynamic,
            injected_modal,
            plan(
                p,
                &[&["manage options"], &["personalised ads", "measurement", "save and exit"]],
                &[
                    ("accept all", D),
                    ("manage options", B),
                    ("personalised ads", A),
                    ("measurement", A),
                    ("save and exit", D),
                ],
                true,
            ),
        ),
        f("iframe-banner", Iframe, iframe_banner, plan(p, &[&["reject all"]], &[("reject all", D), ("accept all", D)], false)),
        f(
            "wall",
            BlockingWall,
            wall,
            plan(
                p,
                &[&["manage preferences"], &["advertising", "analytics", "save preferences"]],
                &[
                    ("accept and continue", D),
                    ("manage preferences", B),
                    ("advertising", A),
                    ("analytics", A),
                    ("save preferences", D),
                ],
                true,
            ),
        ),
        f("wall-reject", BlockingWall, wall_reject, plan(p, &[&["reject all"]], &[("reject all", D), ("accept all", D)], false)),
        f(
            "tcf-objection",
            LegitimateInterest,
            tcf_objection,
            plan(
                p,
                &[
                    &["manage vendors"],
                    &[
                        "object to all legitimate interests",
                        "store and/or access information on a device",
                        "personalised advertising",
                        "save and exit",
                    ],
                ],
                &[
                    ("accept all", D),
                    ("manage vendors", B),
                    ("object to all legitimate interests", C),
                    ("store and/or access information on a device", A),
                    ("personalised advertising", A),
                    ("save and exit", D),
                ],
                true,
            ),
        ),
        f(
            "intercepted",
            Buggy,
            intercepted,
            Expect {
                known_failure: Some("the reject control sits under a transparent layer, so clicks never reach it"),
                ..plan(p, &[&["reject all"]], &[("reject all", U), ("accept all", D)], false)
            },
        ),
        f(
            "inline-notice",
            Buggy,
            inline_notice,
            Expect {
                known_failure: Some("the notice is ordinary page flow in the middle of the body, outside every stacking candidate"),
                ..plan(p, &[&["decline"]], &[], false)
            },
        ),
        f(
            "decorative",
            Buggy,
            decorative,
            plan(p, &[&["reject"]], &[("accept", D), ("reject", D), ("cookies", C)], false),
        ),
        f(
            "horiba",
            TwoView,
            horiba,
            plan(
                p,
                &[&["cookie settings"], &["functionality cookies", "marketing cookies", "save my preferences"]],
                &[
                    ("accept all", D),
                    ("cookie settings", B),
                    ("functionality cookies", A),
                    ("marketing cookies", A),
                    ("save my preferences", D),
                ],
                true,
            ),
        ),
        f(
            "aria-switches",
            Standard,
            aria_switches,
            plan(
                p,
                &[&["online advertising", "performance", "save"]],
                &[("online advertising", A), ("performance", A), ("save", D), ("accept all", D)],
                true,
            ),
        ),
        f("linkedin", DedicatedPage, linkedin, dedicated(&[("accept", D)])),
        f("nav-settings", DedicatedPage, nav_settings, dedicated(&[("accept", D)])),
        f(
            "essential-button",
            Standard,
            essential_button,
            plan(
                p,
                &[&["use necessary cookies only"]],
                &[
                    ("accept all", D),
                    ("use necessary cookies only", D),
                    ("settings", B),
                    ("analytics", A),
                    ("save", D),
                ],
                false,
            ),
        ),
        f(
            "reject-in-prefs",
            TwoView,
            reject_in_prefs,
            plan(
                p,
                &[&["preferences"], &["reject all"]],
                &[
                    ("accept", D),
                    ("preferences", B),
                    ("reject all", D),
                    ("marketing", A),
                    ("save", D),
                    ("accept all", D),
                ],
                false,
            ),
        ),
        f("blank-target", Standard, blank_target, plan(p, &[&["decline"]], &[("decline", D), ("allow cookies", D)], false)),
        f("top-banner", Standard, top_banner, plan(p, &[&["deny"]], &[("deny", D), ("allow all", D)], false)),
        f(
            "three-level",
            TwoView,
            three_level,
            plan(
                p,
                &[&["options"], &["advanced settings"], &["statistics", "save"]],
                &[
                    ("accept", D),
                    ("options", B),
                    ("advanced settings", B),
                    ("accept all", D),
                    ("statistics", A),
                    ("save", D),
                ],
                true,
            ),
        ),
        f(
            "hidden-checkboxes",
            Standard,
            hidden_checkboxes,
            plan(
                p,
                &[&["statistics", "allow selection"]],
                &[("statistics", A), ("marketing", A), ("allow selection", D), ("allow all", D)],
                true,
            ),
        ),
    ]
}
