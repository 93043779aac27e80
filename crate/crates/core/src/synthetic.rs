//! Deterministic synthetic corpora for tests and offline demos.
//!
//! The templatic corpus crosses triliteral Hebrew roots with templates in
//! which `1`, `2`, `3` stand for the root letters and every other letter is
//! a template letter. Word frequencies are the product of a per-template
//! and a per-root weight, plus 10 so every word clears the default
//! frequency threshold. Word-final letters are written in their final
//! forms.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::denormalize_final_letters;
use crate::profile::LanguageProfile;

pub const ROOTS: [&str; 20] = [
    "כתב", "שמר", "למד", "עבד", "גדל", "סגר", "פקד", "זכר", "שבר", "רקד", "חשב", "דרש", "קבל", "פתח", "שלח",
    "גמר", "בדק", "סדר", "רשמ", "שכנ",
];

pub const TEMPLATES: [&str; 10] = [
    "123", "1ו23", "12ו3", "מ123", "123ה", "ה12י3", "ל12ו3", "מ12ו3", "123ימ", "ת123",
];

const TEMPLATE_WEIGHTS: [u64; 10] = [12, 6, 8, 9, 7, 4, 5, 3, 10, 2];

/// Fills a template with a root, in normalized (non-final) spelling.
pub fn fill_template(template: &str, root: &str) -> String {
    let r: Vec<char> = root.chars().collect();
    template
        .chars()
        .map(|c| match c {
            '1' => r[0],
            '2' => r[1],
            '3' => r[2],
            other => other,
        })
        .collect()
}

/// The 200 words of the templatic corpus as `(raw spelling, frequency)`,
/// root-major.
pub fn templatic_words() -> Vec<(String, u64)> {
    let he = LanguageProfile::hebrew();
    let mut out = Vec::with_capacity(ROOTS.len() * TEMPLATES.len());
    for (ri, root) in ROOTS.iter().enumerate() {
        let root_weight = 1 + (ri as u64 * 7) % 5;
        for (ti, template) in TEMPLATES.iter().enumerate() {
            let word = denormalize_final_letters(&fill_template(template, root), &he);
            out.push((word, 10 + TEMPLATE_WEIGHTS[ti] * root_weight));
        }
    }
    out
}

/// Lays out word occurrences as text: round-robin over the words so each
/// line mixes roots and templates, 12 words per line, with some
/// punctuation between words.
fn lay_out(words: &[(String, u64)]) -> String {
    let max = words.iter().map(|w| w.1).max().unwrap_or(0);
    let mut out = String::new();
    let mut on_line = 0;
    for round in 0..max {
        for (w, f) in words {
            if round >= *f {
                continue;
            }
            if on_line > 0 {
                out.push_str(match (on_line + round as usize) % 9 {
                    0 => ", ",
                    4 => " - ",
                    _ => " ",
                });
            }
            out.push_str(w);
            on_line += 1;
            if on_line == 12 {
                out.push_str(".\n");
                on_line = 0;
            }
        }
    }
    if on_line > 0 {
        out.push_str(".\n");
    }
    out
}

/// Text of the templatic corpus.
pub fn templatic_corpus() -> String {
    lay_out(&templatic_words())
}

/// Words built from the roots with prefixes and suffixes of several
/// lengths, so the same suffix letter sits at many different non-negative
/// positions.
pub fn suffix_heavy_words() -> Vec<(String, u64)> {
    let he = LanguageProfile::hebrew();
    let prefixes = ["", "ו", "ה", "וה", "ושה"];
    let suffixes = ["", "ה", "ימ", "ות", "תי", "ותיה"];
    let mut out = Vec::new();
    for (ri, root) in ROOTS.iter().enumerate() {
        for (pi, p) in prefixes.iter().enumerate() {
            for (si, s) in suffixes.iter().enumerate() {
                let word = denormalize_final_letters(&format!("{p}{root}{s}"), &he);
                let f = 10 + ((ri * 5 + pi * 3 + si * 7) % 11) as u64 * 2;
                out.push((word, f));
            }
        }
    }
    out
}

pub fn suffix_heavy_corpus() -> String {
    lay_out(&suffix_heavy_words())
}

/// A larger Hebrew-like corpus: random roots, a wider template inventory
/// with clitic prefixes and suffixes, Zipf-distributed root choice.
pub fn hebrew_like_corpus(target_bytes: usize, seed: u64) -> String {
    let he = LanguageProfile::hebrew();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<char> = "אבגדזחטכלמנסעפצקרשת".chars().collect();
    let mut roots: Vec<String> = ROOTS.iter().map(|s| s.to_string()).collect();
    while roots.len() < 600 {
        let r: String = (0..3).map(|_| *letters.choose(&mut rng).unwrap()).collect();
        if !roots.contains(&r) {
            roots.push(r);
        }
    }
    let stems = [
        "123",
        "1ו23",
        "12ו3",
        "מ123",
        "123ה",
        "ה12י3",
        "ל12ו3",
        "מ12ו3",
        "123ימ",
        "ת123",
        "נ123",
        "מ12י3",
        "ת12ו3ה",
        "הת123ות",
        "12י3ה",
        "1ו23ימ",
        "מ1ו23ת",
        "123ת",
        "123נו",
        "י123ו",
    ];
    let prefixes = ["", "", "", "ו", "ה", "ב", "ל", "ש", "וה", "מה"];
    let suffixes = ["", "", "", "", "ו", "ה", "ימ", "ות", "נו", "כמ"];
    // Zipf-like weights for roots: 1/(rank+1).
    let root_cdf: Vec<f64> = roots
        .iter()
        .enumerate()
        .scan(0.0, |acc, (i, _)| {
            *acc += 1.0 / (i as f64 + 1.0);
            Some(*acc)
        })
        .collect();
    let root_total = *root_cdf.last().unwrap();

    let mut out = String::with_capacity(target_bytes + 256);
    let mut on_line = 0;
    while out.len() < target_bytes {
        let x = rng.gen::<f64>() * root_total;
        let ri = root_cdf.partition_point(|&c| c < x).min(roots.len() - 1);
        let stem = stems[rng.gen_range(0..stems.len()).min(rng.gen_range(0..stems.len()))];
        let p = prefixes[rng.gen_range(0..prefixes.len())];
        let s = if stem.ends_with('3') {
            suffixes[rng.gen_range(0..suffixes.len())]
        } else {
            ""
        };
        let word = denormalize_final_letters(&format!("{p}{}{s}", fill_template(stem, &roots[ri])), &he);
        if on_line > 0 {
            out.push(if rng.gen_ratio(1, 15) { ',' } else { ' ' });
            if out.ends_with(',') {
                out.push(' ');
            }
        }
        out.push_str(&word);
        on_line += 1;
        if on_line >= 14 && rng.gen_ratio(1, 3) {
            out.push_str(".\n");
            on_line = 0;
        }
    }
    out.push_str(".\n");
    out
}

/// Mixed-script text exercising every pass-through and escape path:
/// Hebrew words (some pointed, some with misplaced final forms), Latin,
/// digits, punctuation, CJK, private-use and other symbols, and assorted
/// whitespace including CRLF.
pub fn mixed_script_text(target_bytes: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = templatic_words();
    let hebrew: Vec<char> = ('\u{05D0}'..='\u{05EA}').collect();
    let latin = [
        "the", "root", "Template", "kernel", "x86", "naïve", "Straße", "ok",
    ];
    let punct = [
        " ", " ", " ", ", ", ". ", "\t", " - ", ": ", " (", ") ", "\"", "\n", "\r\n", "  ",
    ];
    let odd = [
        "\u{E000}",
        "\u{E001}\u{05D0}",
        "字",
        "漢字",
        "😀",
        "\u{05BE}",
        "!",
        "?",
        "123",
        "a\u{0301}",
        "\u{200F}",
        "\u{05B8}",
        "\u{05D0}\u{05B8}\u{05D1}",
        "\u{F8FF}",
        "ǅ",
    ];
    let mut out = String::with_capacity(target_bytes + 64);
    while out.len() < target_bytes {
        match rng.gen_range(0..10) {
            0..=4 => out.push_str(&words[rng.gen_range(0..words.len())].0),
            5 | 6 => {
                let n = rng.gen_range(1..9);
                out.extend((0..n).map(|_| *hebrew.choose(&mut rng).unwrap()));
            }
            7 => out.push_str(latin[rng.gen_range(0..latin.len())]),
            8 => out.push_str(odd[rng.gen_range(0..odd.len())]),
            _ => {
                out.push_str(&words[rng.gen_range(0..words.len())].0);
                out.push_str(odd[rng.gen_range(0..odd.len())]);
            }
        }
        out.push_str(punct[rng.gen_range(0..punct.len())]);
    }
    out
}

/// Lexical-decision CSV with 12 corpus words and 12 nonwords. Accuracy
/// falls and response time rises with stimulus length, plus noise.
pub fn lexical_decision_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = templatic_words();
    let hebrew: Vec<char> = "אבגדהוזחטיכלמנסעפצקרשת".chars().collect();
    let mut out = String::from("stimulus,lexicality,accuracy,rt\n");
    for i in 0..12 {
        let w = &words[(i * 17) % words.len()].0;
        let len = w.chars().count() as f64;
        let acc: f64 = (0.99 - 0.02 * len - rng.gen_range(0.0..0.05)).clamp(0.0, 1.0);
        let rt = 480.0 + 25.0 * len + rng.gen_range(0.0..60.0);
        out.push_str(&format!("{w},word,{acc:.3},{rt:.1}\n"));
    }
    for _ in 0..12 {
        let n = rng.gen_range(3..8);
        let w: String = (0..n).map(|_| *hebrew.choose(&mut rng).unwrap()).collect();
        let acc: f64 = (0.95 - 0.03 * n as f64 - rng.gen_range(0.0..0.05)).clamp(0.0, 1.0);
        let rt = 560.0 + 30.0 * n as f64 + rng.gen_range(0.0..80.0);
        out.push_str(&format!("{w},nonword,{acc:.3},{rt:.1}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templatic_corpus_shape() {
        let words = templatic_words();
        assert_eq!(words.len(), 200);
        assert!(words.iter().all(|(_, f)| *f >= 10));
        assert_eq!(words[0].0, "כתב");
        // רשמ in template 123 ends in final mem.
        assert!(words.iter().any(|(w, _)| w == "רשם"));
        let text = templatic_corpus();
        let total: u64 = words.iter().map(|w| w.1).sum();
        assert_eq!(crate::corpus::split_words(&text).len() as u64, total);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(mixed_script_text(5000, 3), mixed_script_text(5000, 3));
        assert_eq!(hebrew_like_corpus(5000, 3), hebrew_like_corpus(5000, 3));
        assert_ne!(mixed_script_text(5000, 3), mixed_script_text(5000, 4));
    }
}
