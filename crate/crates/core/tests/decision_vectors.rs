use optout_core::decision::{
    parse_plan, parse_plan_text, parse_serialized, plan, serialize_outline, ElementTag, NoticeOutline, OutlineEntry,
    OutlineView, PlanError, Provider, SerializedNotice, SwitchState,
};

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn rules(input: &str) -> String {
    let outline = parse_serialized(input).expect("input parses");
    let sn = SerializedNotice {
        text: input.to_string(),
        outline,
    };
    plan(&sn, &Provider::Rules).expect("plan").rendered
}

const REDDIT: &str = "button0 - reject non-essential || button1 - accept all  <end>";
const NETFLIX: &str = "button1 - learn more about our use of cookies and information. || button4 - accept || button5 - reject || button6 - personalise my choices || button7 - close ** button0 - close || switch5 - advertising cookies , not selected ||button27 - save settings  <end>";
const WORDPRESS: &str = "button0 - customize || button1 - accept all ** switch3 - analytics: these cookies allow us to optimize performance by collecting , selected || switch4 - advertising: these cookies are set by us and our advertising , not selected || button5 - accept selection  <end>";
const TATA: &str = "button0 - sweet! || button1 - sorry, i'm on a diet <end>";
const NEWSCIENTIST: &str = "button1 - i accept || button2 - show purposes ** button4 - select basic ads; object to legitimate interests || switch23 - analytics cookies , not selected || button62 - confirm my choices <end>";

#[test]
fn reddit() {
    assert_eq!(squash(&rules(REDDIT)), "Click button0.");
}

#[test]
fn netflix() {
    assert_eq!(squash(&rules(NETFLIX)), "Click button5.");
}

#[test]
fn wordpress() {
    assert_eq!(squash(&rules(WORDPRESS)), squash("Click button0 ** Click  switch3 | Click  button5."));
}

#[test]
fn tata() {
    assert_eq!(squash(&rules(TATA)), "Click button1.");
}

#[test]
fn newscientist_completed() {
    assert_eq!(squash(&rules(NEWSCIENTIST)), "Click button2 ** Click button4 | Click button62.");
}

#[test]
fn do_not_allow_example() {
    let input = "switch0 - do not allow non-essential cookies, not selected || button1 - save || button2 - accept <end>";
    assert_eq!(rules(input), "Click switch0 | Click button1.");
}

fn askubuntu_outline() -> NoticeOutline {
    let b = |i, l: &str| OutlineEntry::new(ElementTag::button(i), l, None);
    let s = |i, l: &str| OutlineEntry::new(ElementTag::switch(i), l, Some(SwitchState::NotSelected));
    NoticeOutline {
        views: vec![
            OutlineView {
                entries: vec![b(0, "Customize settings"), b(1, "Accept all cookies")],
                opened_by: None,
            },
            OutlineView {
                entries: vec![
                    s(3, "Performance cookies"),
                    s(4, "Functional cookies"),
                    s(5, "Targeting cookies"),
                    b(6, "Confirm my choices"),
                    b(7, "Accept all cookies"),
                    b(8, "Cancel"),
                ],
                opened_by: Some((0, ElementTag::button(0))),
            },
        ],
        accept_only: false,
    }
}

const ASKUBUNTU_TEXT: &str = "button0 - customize settings || button1 - accept all cookies ** switch3 - performance cookies, not selected || switch4 - functional cookies, not selected || switch5 - targeting cookies, not selected || button6 - confirm my choices || button7 - accept all cookies || button8 - cancel <end>";

#[test]
fn askubuntu_serialization() {
    let sn = serialize_outline(&askubuntu_outline()).unwrap();
    assert_eq!(sn.text, ASKUBUNTU_TEXT);
    assert_eq!(parse_serialized(&sn.text).unwrap().views.len(), 2);
}

#[test]
fn askubuntu_reference_output_parses_but_names_a_missing_button() {
    let groups = parse_plan_text("Click button0 **   Click button5.").unwrap();
    assert_eq!(groups, vec![vec![ElementTag::button(0)], vec![ElementTag::button(5)]]);
    let outline = parse_serialized(ASKUBUNTU_TEXT).unwrap();
    assert_eq!(
        parse_plan("Click button0 **   Click button5.", &outline),
        Err(PlanError::UnknownTag("button5".into()))
    );
    let p = parse_plan("Click button0 **   Click button6.", &outline).unwrap();
    assert_eq!(p.steps.len(), 2);
    assert_eq!(p.steps[1].view_index, 1);
}

#[test]
fn askubuntu_rules_plan() {
    assert_eq!(rules(ASKUBUNTU_TEXT), "Click button0 ** Click button6.");
}

#[test]
fn one_button_banner() {
    let outline = NoticeOutline {
        views: vec![OutlineView {
            entries: vec![OutlineEntry::new(ElementTag::button(0), "I accept", None)],
            opened_by: None,
        }],
        accept_only: true,
    };
    let sn = serialize_outline(&outline).unwrap();
    assert_eq!(sn.text, "button0 - i accept <end>");
    let p = plan(&sn, &Provider::Rules).unwrap();
    assert!(p.no_opt_out && p.steps.is_empty());
}

#[test]
fn reddit_serialization() {
    let outline = NoticeOutline {
        views: vec![OutlineView {
            entries: vec![
                OutlineEntry::new(ElementTag::button(0), "Reject non-essential", None),
                OutlineEntry::new(ElementTag::button(1), "Accept all", None),
            ],
            opened_by: None,
        }],
        accept_only: false,
    };
    assert_eq!(
        serialize_outline(&outline).unwrap().text,
        "button0 - reject non-essential || button1 - accept all <end>"
    );
}

#[test]
fn parse_plan_errors() {
    let reddit = parse_serialized(REDDIT).unwrap();
    assert_eq!(parse_plan("Click button99.", &reddit), Err(PlanError::UnknownTag("button99".into())));
    assert!(matches!(parse_plan("", &reddit), Err(PlanError::PlanSyntaxError(_))));
    assert!(matches!(parse_plan("Press button0.", &reddit), Err(PlanError::PlanSyntaxError(_))));
    assert!(parse_plan("Click button0", &reddit).is_ok());
}

#[test]
fn first_view_reject_forbids_later_views() {
    let netflix = parse_serialized(NETFLIX).unwrap();
    assert!(matches!(
        parse_plan("Click button6 ** Click button27.", &netflix),
        Err(PlanError::PlanRejected(_))
    ));
}

#[test]
fn closing_objection_button_is_clicked_last() {
    use optout_core::roles::Role;
    let entry = |tag, label: &str, role| OutlineEntry {
        role: Some(role),
        ..OutlineEntry::new(tag, label, None)
    };
    let view = |entries| OutlineView { entries, opened_by: None };
    let with_save = NoticeOutline {
        views: vec![view(vec![
            entry(ElementTag::button(0), "Object to legitimate interest", Role::TypeD),
            entry(ElementTag::button(1), "Object to all legitimate interests", Role::TypeB),
            OutlineEntry::new(ElementTag::switch(3), "Analytics cookies", Some(SwitchState::NotSelected)),
            entry(ElementTag::button(2), "Save settings", Role::TypeD),
        ])],
        accept_only: false,
    };
    let sn = serialize_outline(&with_save).unwrap();
    assert_eq!(plan(&sn, &Provider::Rules).unwrap().rendered, "Click button1 | Click button2.");
    let without_save = NoticeOutline {
        views: vec![view(vec![
            entry(ElementTag::button(0), "Object to legitimate interest", Role::TypeD),
            entry(ElementTag::button(1), "Object to all legitimate interests", Role::TypeB),
            OutlineEntry::new(ElementTag::switch(3), "Analytics cookies", Some(SwitchState::NotSelected)),
        ])],
        accept_only: false,
    };
    let sn = serialize_outline(&without_save).unwrap();
    assert_eq!(plan(&sn, &Provider::Rules).unwrap().rendered, "Click button1 | Click button0.");
}
