//! Lexicon classification of element labels.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelSemantics {
    RejectAll,
    AcceptAll,
    SaveConfirm,
    MoreOptions,
    EssentialOnlyPositive,
    NegatedConsent,
    Neutral,
}

impl LabelSemantics {
    /// Labels whose SELECTED state means cookies are disabled.
    pub fn inverted(self) -> bool {
        matches!(self, LabelSemantics::NegatedConsent | LabelSemantics::EssentialOnlyPositive)
    }

    /// Actions that opt out in one click.
    pub fn rejects(self) -> bool {
        matches!(self, LabelSemantics::RejectAll | LabelSemantics::EssentialOnlyPositive)
    }
}

struct Lexicon {
    essential_only: Regex,
    negated: Regex,
    reject: Regex,
    save: Regex,
    accept: Regex,
    more: Regex,
    essential_category: Regex,
    non_essential: Regex,
    objection: Regex,
}

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| {
        let re = |p: &str| Regex::new(p).expect("lexicon pattern");
        Lexicon {
            essential_only: re(
                r"\b(only|just)\b.{0,30}\b(necessary|essential|required)\b|\b(necessary|essential|required)\b( cookies)? only\b",
            ),
            negated: re(
                r"\b(do not|don't|dont|never)\b(\s+\w+){0,2}?\s+(allow|sell|share|track|use|accept|consent|personali[sz]e)\b|\bopt[ -]?out\b",
            ),
            reject: re(
                r"\b(reject|decline|deny|refuse|disagree|sorry)\w*|\bno,? thanks\b|\bwithout accepting\b|\bdisable all\b|\bcontinue without\b",
            ),
            save: re(
                r"\b(save|confirm|submit|apply)\b|\b(accept|allow)\s+(my |the |current )?(selection|selected|choices)\b",
            ),
            accept: re(
                r"^(i )?(accept|agree|allow|ok|okay|yes|sweet|got it|continue)\b|\b(accept all|allow all|agree to all|accept cookies|allow cookies|i understand|got it)\b",
            ),
            more: re(
                r"\b(customi[sz]e|settings|preferences|options|manage|more information|more info|learn more|show purposes|personali[sz]e|choices|details|purposes|vendors)\b",
            ),
            essential_category: re(r"\b(strictly necessary|necessary|essential|required)\b"),
            non_essential: re(r"\b(non|un|not)[- ]?(essential|necessary|required)|\bunnecessary\b"),
            objection: re(r"\bobject\b.*\blegitimate interests?\b"),
        }
    })
}

/// Lowercases and collapses whitespace.
pub fn normalize_label(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Patterns are tried in a fixed order; the first match wins.
pub fn classify_label_semantics(label: &str) -> LabelSemantics {
    let l = normalize_label(label);
    let lex = lexicon();
    if lex.essential_only.is_match(&l) && !lex.non_essential.is_match(&l) {
        LabelSemantics::EssentialOnlyPositive
    } else if lex.negated.is_match(&l) {
        LabelSemantics::NegatedConsent
    } else if lex.reject.is_match(&l) {
        LabelSemantics::RejectAll
    } else if lex.save.is_match(&l) {
        LabelSemantics::SaveConfirm
    } else if lex.accept.is_match(&l) {
        LabelSemantics::AcceptAll
    } else if lex.more.is_match(&l) {
        LabelSemantics::MoreOptions
    } else {
        LabelSemantics::Neutral
    }
}

/// Switch labels naming the essential category itself.
pub fn is_essential_category(label: &str) -> bool {
    let l = normalize_label(label);
    let lex = lexicon();
    lex.essential_category.is_match(&l)
        && !lex.non_essential.is_match(&l)
        && classify_label_semantics(&l) != LabelSemantics::EssentialOnlyPositive
}

/// "Object to legitimate interests" style controls.
pub fn is_objection(label: &str) -> bool {
    lexicon().objection.is_match(&normalize_label(label))
}

#[cfg(test)]
mod tests {
    use super::LabelSemantics::*;
    use super::*;

    #[test]
    fn reference_labels() {
        let cases = [
            ("reject non-essential", RejectAll),
            ("do not allow non-essential cookies", NegatedConsent),
            ("confirm my choices", SaveConfirm),
            ("accept all", AcceptAll),
            ("accept all cookies", AcceptAll),
            ("i accept", AcceptAll),
            ("sweet!", AcceptAll),
            ("sorry, i'm on a diet", RejectAll),
            ("customize", MoreOptions),
            ("customize settings", MoreOptions),
            ("personalise my choices", MoreOptions),
            ("learn more about our use of cookies and information.", MoreOptions),
            ("show purposes", MoreOptions),
            ("accept selection", SaveConfirm),
            ("save settings", SaveConfirm),
            ("save", SaveConfirm),
            ("accept", AcceptAll),
            ("reject", RejectAll),
            ("close", Neutral),
            ("cancel", Neutral),
        ];
        for (label, want) in cases {
            assert_eq!(classify_label_semantics(label), want, "{label}");
        }
    }

    #[test]
    fn essential_only_and_negation() {
        assert_eq!(classify_label_semantics("Only allow necessary cookies"), EssentialOnlyPositive);
        assert_eq!(classify_label_semantics("use necessary cookies only"), EssentialOnlyPositive);
        assert_eq!(classify_label_semantics("do not sell my personal information"), NegatedConsent);
        assert_eq!(classify_label_semantics("opt out of targeted ads"), NegatedConsent);
        assert_eq!(classify_label_semantics("no thanks"), RejectAll);
        assert!(EssentialOnlyPositive.inverted() && NegatedConsent.inverted());
        assert!(!RejectAll.inverted());
    }

    #[test]
    fn switch_descriptions_are_not_accept_actions() {
        let l = "analytics: these cookies allow us to optimize performance by collecting";
        assert_ne!(classify_label_semantics(l), AcceptAll);
    }

    #[test]
    fn essential_categories() {
        assert!(is_essential_category("strictly necessary cookies"));
        assert!(is_essential_category("required"));
        assert!(!is_essential_category("non-essential cookies"));
        assert!(!is_essential_category("only allow necessary cookies"));
        assert!(!is_essential_category("performance cookies"));
    }

    #[test]
    fn objections() {
        assert!(is_objection("select basic ads; object to legitimate interests"));
        assert!(is_objection("Object to legitimate interest"));
        assert!(!is_objection("basic ads"));
    }
}
