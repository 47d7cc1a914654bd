//! Fits the baseline notice classifier on the labeled corpus.
//!
//! Usage: cargo run -p optout-core --example calibrate [corpus.jsonl]
//!
//! Trains on even-numbered lines, reports metrics on odd-numbered lines and
//! on the whole corpus, and prints the constants to paste into
//! `detector/classifier.rs`.

use optout_core::detector::{logistic, Features, BASELINE_BIAS, BASELINE_WEIGHTS};
use serde::Deserialize;

#[derive(Deserialize)]
struct Sample {
    label: u8,
    interactive: usize,
    text: String,
}

const EPOCHS: usize = 20_000;
const RATE: f64 = 0.5;
const L2: f64 = 1e-3;

/// Signs that keep the score monotone in consent vocabulary.
fn project(w: &mut [f64; 5]) {
    for x in w.iter_mut().take(4) {
        *x = x.max(0.0);
    }
    w[4] = w[4].min(0.0);
}

fn fit(data: &[(Features, f64)]) -> ([f64; 5], f64) {
    let mut w = [0.0; 5];
    let mut b = 0.0;
    let n = data.len() as f64;
    for _ in 0..EPOCHS {
        let mut gw = [0.0; 5];
        let mut gb = 0.0;
        for (f, y) in data {
            let err = logistic(&w, b, f) - y;
            for (g, x) in gw.iter_mut().zip(f.as_array()) {
                *g += err * x;
            }
            gb += err;
        }
        for (wi, g) in w.iter_mut().zip(gw) {
            *wi -= RATE * (g / n + L2 * *wi);
        }
        b -= RATE * gb / n;
        project(&mut w);
    }
    (w, b)
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn report(name: &str, w: &[f64; 5], b: f64, data: &[(Features, f64)]) {
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    let mut correct = 0;
    for (f, y) in data {
        let pred = logistic(w, b, f) >= 0.5;
        let pos = *y > 0.5;
        match (pred, pos) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
        if pred == pos {
            correct += 1;
        }
    }
    let f1 = 2.0 * tp / (2.0 * tp + fp + fneg);
    println!(
        "{name:>8}: n={} accuracy={:.3} f1={:.3}",
        data.len(),
        correct as f64 / data.len() as f64,
        f1
    );
}

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/classifier_corpus.jsonl").into());
    let text = std::fs::read_to_string(&path).expect("read corpus");
    let data: Vec<(Features, f64)> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let s: Sample = serde_json::from_str(l).expect("corpus line");
            (Features::extract(&s.text, Some(s.interactive)), s.label as f64)
        })
        .collect();
    let train: Vec<_> = data.iter().step_by(2).cloned().collect();
    let test: Vec<_> = data.iter().skip(1).step_by(2).cloned().collect();

    let (w, b) = fit(&train);
    let w = w.map(round2);
    let b = round2(b);
    report("train", &w, b, &train);
    report("held-out", &w, b, &test);
    report("all", &w, b, &data);
    report("current", &BASELINE_WEIGHTS, BASELINE_BIAS, &data);
    println!("pub const BASELINE_WEIGHTS: [f64; 5] = {w:?};");
    println!("pub const BASELINE_BIAS: f64 = {b:?};");
}
