//! Running-text splintering.
//!
//! Words made only of script letters are replaced by their surface form;
//! everything else passes through. Two kinds of word are escaped (prefixed
//! with the block's escape codepoint and copied verbatim) so the inverse
//! stays exact: script words whose final letter forms do not round-trip
//! through normalization, and words that already contain codepoints from
//! the composite block.

use std::ops::AddAssign;

use rayon::prelude::*;

use crate::corpus::{
    denormalize_final_letters, has_canonical_final_forms, normalize_final_letters, split_words_with,
};
use crate::error::Result;
use crate::profile::LanguageProfile;
use crate::reduction::ReductionMap;

use super::{decode_word, encode_word_traced, BeamConfig, CompositeAlphabet};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SplinterStats {
    pub splintered: u64,
    pub passed_through: u64,
    pub escaped: u64,
    /// Words whose reduction stopped above the core length.
    pub early_stops: u64,
}

impl AddAssign for SplinterStats {
    fn add_assign(&mut self, o: Self) {
        self.splintered += o.splintered;
        self.passed_through += o.passed_through;
        self.escaped += o.escaped;
        self.early_stops += o.early_stops;
    }
}

fn splinter_piece(
    text: &str,
    map: &ReductionMap,
    alphabet: &CompositeAlphabet,
    profile: &LanguageProfile,
    beam: BeamConfig,
) -> Result<(String, SplinterStats)> {
    let mut out = String::with_capacity(text.len() * 2);
    let mut stats = SplinterStats::default();
    let mut pos = 0;
    for ws in split_words_with(text, &profile.delimiters) {
        out.push_str(&text[pos..ws.span.start]);
        pos = ws.span.end;
        let word = ws.word;
        if profile.is_script_word(word) && has_canonical_final_forms(word, profile) {
            let norm = normalize_final_letters(word, profile);
            let (sw, early) = encode_word_traced(&norm, map, beam);
            out.push_str(&alphabet.encode_surface(&sw)?);
            stats.splintered += 1;
            stats.early_stops += u64::from(early);
        } else if profile.is_script_word(word) || word.chars().any(|c| alphabet.is_reserved(c)) {
            out.push(alphabet.escape());
            out.push_str(word);
            stats.escaped += 1;
        } else {
            out.push_str(word);
            stats.passed_through += 1;
        }
    }
    out.push_str(&text[pos..]);
    Ok((out, stats))
}

/// Splinters every target-script word of `text`. The alphabet is used
/// frozen; build it with [`CompositeAlphabet::from_map`] so every reduction
/// the map can emit is covered.
pub fn splinter_text(
    text: &str,
    map: &ReductionMap,
    alphabet: &CompositeAlphabet,
    profile: &LanguageProfile,
    beam: BeamConfig,
) -> Result<(String, SplinterStats)> {
    if !profile.delimiters.whitespace {
        return splinter_piece(text, map, alphabet, profile, beam);
    }
    // Newlines always delimit words here, so lines are independent.
    let pieces: Vec<(String, SplinterStats)> = text
        .split_inclusive('\n')
        .collect::<Vec<_>>()
        .par_iter()
        .map(|line| splinter_piece(line, map, alphabet, profile, beam))
        .collect::<Result<_>>()?;
    let mut out = String::with_capacity(pieces.iter().map(|p| p.0.len()).sum());
    let mut stats = SplinterStats::default();
    for (s, st) in pieces {
        out.push_str(&s);
        stats += st;
    }
    Ok((out, stats))
}

fn unsplinter_piece(text: &str, alphabet: &CompositeAlphabet, profile: &LanguageProfile) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    let escape = alphabet.escape();
    for ws in split_words_with(text, &profile.delimiters) {
        out.push_str(&text[pos..ws.span.start]);
        pos = ws.span.end;
        let word = ws.word;
        if let Some(rest) = word.strip_prefix(escape) {
            out.push_str(rest);
        } else if word
            .chars()
            .all(|c| alphabet.is_base(c) || (alphabet.is_reserved(c) && c != escape))
        {
            let sw = alphabet.from_surface(word)?;
            let decoded = decode_word(&sw)?;
            out.push_str(&denormalize_final_letters(&decoded, profile));
        } else {
            out.push_str(word);
        }
    }
    out.push_str(&text[pos..]);
    Ok(out)
}

/// Exact inverse of [`splinter_text`].
pub fn unsplinter_text(
    text: &str,
    alphabet: &CompositeAlphabet,
    profile: &LanguageProfile,
) -> Result<String> {
    if !profile.delimiters.whitespace {
        return unsplinter_piece(text, alphabet, profile);
    }
    let pieces: Vec<String> = text
        .split_inclusive('\n')
        .collect::<Vec<_>>()
        .par_iter()
        .map(|line| unsplinter_piece(line, alphabet, profile))
        .collect::<Result<_>>()?;
    Ok(pieces.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{IndexConvention, Reduction};
    use crate::splinterer::CompositeBlock;
    use proptest::prelude::*;

    fn setup() -> (ReductionMap, CompositeAlphabet, LanguageProfile) {
        let he = LanguageProfile::hebrew();
        let s = IndexConvention::Signed;
        let map = ReductionMap::from_scores(
            "hebrew",
            he.fingerprint(),
            s,
            3,
            [
                (5, Reduction::at(3, 5, 'ו', s), 40),
                (4, Reduction::at(0, 4, 'ל', s), 30),
                (5, Reduction::at(4, 5, 'מ', s), 20),
                (6, Reduction::at(4, 6, 'י', s), 20),
                (4, Reduction::at(3, 4, 'ה', s), 10),
            ],
        )
        .unwrap();
        let alphabet = CompositeAlphabet::from_map(&map, &he, CompositeBlock::default()).unwrap();
        (map, alphabet, he)
    }

    #[test]
    fn mixed_sentence() {
        let (map, alphabet, he) = setup();
        let text = "Hello, לעבוד (work) 42 times.\n";
        let (out, stats) = splinter_text(text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
        assert!(out.starts_with("Hello, "));
        assert!(out.ends_with(" (work) 42 times.\n"));
        assert!(!out.contains("לעבוד"));
        assert!(out.contains("עבד"));
        assert_eq!(stats.splintered, 1);
        assert_eq!(stats.passed_through, 4);
        assert_eq!(unsplinter_text(&out, &alphabet, &he).unwrap(), text);
    }

    #[test]
    fn final_forms_restored() {
        let (map, alphabet, he) = setup();
        let text = "הולכים הולך";
        let (out, _) = splinter_text(text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
        assert!(!out.contains('ם') && !out.contains('ך'));
        assert_eq!(unsplinter_text(&out, &alphabet, &he).unwrap(), text);
    }

    #[test]
    fn exceptions_and_reserved_codepoints_escaped() {
        let (map, alphabet, he) = setup();
        let text = "קטשופ אךב \u{E001}x \u{E000} עב\u{E002}";
        let (out, stats) = splinter_text(text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
        assert_eq!(stats.escaped, 5);
        assert_eq!(unsplinter_text(&out, &alphabet, &he).unwrap(), text);
    }

    #[test]
    fn no_script_words_is_identity() {
        let (map, alphabet, he) = setup();
        let text = "plain ascii, nothing (else) here.\n\nreally";
        let (out, _) = splinter_text(text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
        assert_eq!(out, text);
    }

    proptest! {
        #[test]
        fn round_trip(text in "[\u{05D0}-\u{05EA}\u{05B0}a-c \\n.,()\u{E000}-\u{E003}]{0,60}") {
            let (map, alphabet, he) = setup();
            let (out, _) = splinter_text(&text, &map, &alphabet, &he, BeamConfig::default()).unwrap();
            prop_assert_eq!(unsplinter_text(&out, &alphabet, &he).unwrap(), text);
        }
    }
}
