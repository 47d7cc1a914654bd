//! Notice text classifiers.

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_TOKENS: usize = 256;
pub const EXTERNAL_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassifierKind {
    BaselineLexical,
    ExternalHttp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHandle {
    pub kind: ClassifierKind,
    pub threshold: f64,
    pub endpoint: Option<String>,
    pub max_tokens: usize,
}

impl Default for ClassifierHandle {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ClassifierHandle {
    pub fn baseline() -> Self {
        ClassifierHandle {
            kind: ClassifierKind::BaselineLexical,
            threshold: DEFAULT_THRESHOLD,
            endpoint: None,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn external(endpoint: &str) -> Self {
        ClassifierHandle {
            kind: ClassifierKind::ExternalHttp,
            endpoint: Some(endpoint.to_string()),
            ..Self::baseline()
        }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.kind == ClassifierKind::ExternalHttp && self.endpoint.is_none() {
            return Err(ClassifierError::Config("EXTERNAL_HTTP requires an endpoint".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ClassifierError::Config(format!("threshold {} outside [0,1]", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("classifier unavailable: {0}")]
    ClassifierUnavailable(String),
    #[error("classifier misconfigured: {0}")]
    Config(String),
}

/// A probability plus whether it came from the fallback classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub p: f64,
    pub degraded: bool,
}

const CONSENT_WORDS: &[&str] = &["cookie", "cookies", "consent", "gdpr", "privacy", "tracking"];
const ACTION_STEMS: &[&str] = &["accept", "agree", "allow", "reject", "decline", "manage", "setting"];

pub const HITS_CAP: f64 = 6.0;
pub const VERBS_CAP: f64 = 4.0;
pub const INTERACTIVE_CAP: f64 = 6.0;
pub const SHORT_TOKENS: usize = 4;

/// Baseline input features, each scaled to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub hits: f64,
    pub density: f64,
    pub verbs: f64,
    pub interactive: f64,
    pub short: f64,
}

impl Features {
    pub fn as_array(&self) -> [f64; 5] {
        [self.hits, self.density, self.verbs, self.interactive, self.short]
    }

    /// `interactive`: number of controls in the candidate; when unknown the
    /// number of distinct action verbs stands in for it.
    pub fn extract(text: &str, interactive: Option<usize>) -> Features {
        let tokens: Vec<String> = text
            .split_whitespace()
            .map(|t| {
                t.trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase()
            })
            .filter(|t| !t.is_empty())
            .collect();
        let mut hits = 0usize;
        let mut verbs = std::collections::BTreeSet::new();
        for (i, t) in tokens.iter().enumerate() {
            if CONSENT_WORDS.contains(&t.as_str()) || t.starts_with("personalis") || t.starts_with("personaliz") {
                hits += 1;
            }
            if t.starts_with("third-part") {
                hits += 1;
            }
            if t == "third" && tokens.get(i + 1).is_some_and(|n| n.starts_with("part")) {
                hits += 1;
            }
            if let Some(stem) = ACTION_STEMS.iter().find(|s| t.starts_with(*s)) {
                verbs.insert(*stem);
            }
        }
        let n = tokens.len();
        let inter = interactive.unwrap_or(verbs.len()) as f64;
        Features {
            hits: (hits as f64).min(HITS_CAP) / HITS_CAP,
            density: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
            verbs: (verbs.len() as f64).min(VERBS_CAP) / VERBS_CAP,
            interactive: inter.min(INTERACTIVE_CAP) / INTERACTIVE_CAP,
            short: if n < SHORT_TOKENS { 1.0 } else { 0.0 },
        }
    }
}

/// Logistic weights for `[hits, density, verbs, interactive, short]`,
/// produced by `examples/calibrate.rs` on `fixtures/classifier_corpus.jsonl`.
/// Signs are constrained so that more consent vocabulary never lowers a score.
pub const BASELINE_WEIGHTS: [f64; 5] = [9.69, 5.39, 3.93, 1.7, -0.51];
pub const BASELINE_BIAS: f64 = -3.03;

pub fn logistic(weights: &[f64; 5], bias: f64, f: &Features) -> f64 {
    let z = bias
        + weights
            .iter()
            .zip(f.as_array())
            .map(|(w, x)| w * x)
            .sum::<f64>();
    1.0 / (1.0 + (-z).exp())
}

pub fn baseline_score(text: &str, interactive: Option<usize>) -> f64 {
    logistic(&BASELINE_WEIGHTS, BASELINE_BIAS, &Features::extract(text, interactive))
}

#[derive(Serialize)]
struct ExternalRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct ExternalResponse {
    p: f64,
}

fn external_score(endpoint: &str, text: &str) -> Result<f64, ClassifierError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(EXTERNAL_TIMEOUT)
        .build()
        .map_err(|e| ClassifierError::ClassifierUnavailable(e.to_string()))?;
    let resp: ExternalResponse = client
        .post(endpoint)
        .json(&ExternalRequest { text })
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.json())
        .map_err(|e| ClassifierError::ClassifierUnavailable(e.to_string()))?;
    if !(0.0..=1.0).contains(&resp.p) || resp.p.is_nan() {
        return Err(ClassifierError::ClassifierUnavailable(format!("probability {} out of range", resp.p)));
    }
    Ok(resp.p)
}

/// Scores `text`. External failures surface as `ClassifierUnavailable`.
pub fn classify(h: &ClassifierHandle, text: &str) -> Result<f64, ClassifierError> {
    match h.kind {
        ClassifierKind::BaselineLexical => Ok(baseline_score(text, None)),
        ClassifierKind::ExternalHttp => {
            let endpoint = h
                .endpoint
                .as_deref()
                .ok_or_else(|| ClassifierError::Config("EXTERNAL_HTTP requires an endpoint".into()))?;
            external_score(endpoint, text)
        }
    }
}

/// Scores a candidate, falling back to the baseline when the external
/// classifier cannot be reached.
pub fn score_candidate(h: &ClassifierHandle, text: &str, interactive: usize) -> Score {
    match h.kind {
        ClassifierKind::BaselineLexical => Score {
            p: baseline_score(text, Some(interactive)),
            degraded: false,
        },
        ClassifierKind::ExternalHttp => match classify(h, text) {
            Ok(p) => Score { p, degraded: false },
            Err(e) => {
                log::warn!("{e}; using baseline classifier");
                Score {
                    p: baseline_score(text, Some(interactive)),
                    degraded: true,
                }
            }
        },
    }
}
