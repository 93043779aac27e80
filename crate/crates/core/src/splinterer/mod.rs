//! Applying a trained [`ReductionMap`] to words.
//!
//! Each step picks a reduction with a small scored selection tree (see
//! [`beam_select`]), removes it, and repeats on the shorter word until the
//! core length is reached. The removed reductions, replayed in reverse as
//! insertions, rebuild the word exactly.

mod alphabet;
mod text;

use std::fmt;

pub use alphabet::{CompositeAlphabet, CompositeBlock};
pub use text::{splinter_text, unsplinter_text, SplinterStats};

use crate::error::Result;
use crate::reduction::{Reduction, ReductionMap};

/// Breadth and depth of the selection tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    pub breadth: usize,
    pub depth: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self { breadth: 3, depth: 3 }
    }
}

impl BeamConfig {
    pub fn new(breadth: usize, depth: usize) -> Self {
        Self { breadth, depth }
    }
}

/// A word as an irreducible core plus the reductions that rebuild it, in
/// reconstruction order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplinteredWord {
    pub core: String,
    pub reductions: Vec<Reduction>,
}

impl SplinteredWord {
    pub fn unreduced(word: impl Into<String>) -> Self {
        Self {
            core: word.into(),
            reductions: Vec::new(),
        }
    }

    /// Length of the word this decodes to.
    pub fn word_len(&self) -> usize {
        self.core.chars().count() + self.reductions.len()
    }

    /// Reductions with each index shown as the plain non-negative position
    /// the letter is inserted at.
    pub fn positive_indices(&self) -> Vec<(usize, char)> {
        let mut len = self.core.chars().count();
        self.reductions
            .iter()
            .map(|r| {
                let p = r.insertion_position(len).unwrap_or(usize::MAX);
                len += 1;
                (p, r.letter)
            })
            .collect()
    }

    /// `core + [i:x j:y]` with non-negative indices.
    pub fn display_positive(&self) -> String {
        let parts: Vec<String> = self
            .positive_indices()
            .into_iter()
            .map(|(p, l)| format!("{p}:{l}"))
            .collect();
        format!("{} + [{}]", self.core, parts.join(" "))
    }
}

impl fmt::Display for SplinteredWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.reductions.iter().map(Reduction::to_string).collect();
        write!(f, "{} + [{}]", self.core, parts.join(" "))
    }
}

/// The first `breadth` reductions of the word's length that apply to it.
fn applicable<'m>(
    word: &[char],
    map: &'m ReductionMap,
    breadth: usize,
) -> impl Iterator<Item = (Reduction, f64)> + 'm {
    let len = word.len();
    let word: Vec<char> = word.to_vec();
    map.reductions(len)
        .iter()
        .filter(move |s| s.reduction.applies_to(&word))
        .take(breadth)
        .map(move |s| (s.reduction, map.weight(len, s)))
}

/// Best leaf score under `node`, whose path score so far is `score`.
fn best_leaf(node: &[char], score: f64, depth: usize, map: &ReductionMap, beam: BeamConfig) -> f64 {
    if node.len() <= map.min_core_length() || depth >= beam.depth {
        return score;
    }
    let mut best: Option<f64> = None;
    for (r, w) in applicable(node, map, beam.breadth) {
        let child = r.remove_from(node).expect("applicable reduction removes");
        let s = best_leaf(&child, score * w, depth + 1, map, beam);
        if best.is_none_or(|b| s > b) {
            best = Some(s);
        }
    }
    // A node with nothing applicable is a leaf.
    best.unwrap_or(score)
}

/// Picks the next reduction for `word`: the one starting the
/// highest-scoring path in a tree of at most `breadth` children per node
/// and `depth` levels. Path scores are products of normalized reduction
/// weights. Equal scores go to the earlier-ranked first reduction.
///
/// Returns `None` if nothing applies or the word is already at core
/// length.
pub fn beam_select(word: &[char], map: &ReductionMap, beam: BeamConfig) -> Option<Reduction> {
    beam_select_scored(word, map, beam).map(|(r, _)| r)
}

/// Like [`beam_select`], also returning the winning leaf score.
pub fn beam_select_scored(word: &[char], map: &ReductionMap, beam: BeamConfig) -> Option<(Reduction, f64)> {
    if word.len() <= map.min_core_length() || beam.depth == 0 || beam.breadth == 0 {
        return None;
    }
    let mut best: Option<(Reduction, f64)> = None;
    for (r, w) in applicable(word, map, beam.breadth) {
        let child = r.remove_from(word).expect("applicable reduction removes");
        let s = best_leaf(&child, w, 1, map, beam);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((r, s));
        }
    }
    best
}

/// Encodes a word; the flag is true when reduction stopped before the core
/// length because no reduction applied.
pub fn encode_word_traced(word: &str, map: &ReductionMap, beam: BeamConfig) -> (SplinteredWord, bool) {
    let mut current: Vec<char> = word.chars().collect();
    let mut removed = Vec::new();
    let mut stopped_early = false;
    while current.len() > map.min_core_length() {
        match beam_select(&current, map, beam) {
            Some(r) => {
                current = r.remove_from(&current).expect("selected reduction applies");
                removed.push(r);
            }
            None => {
                stopped_early = true;
                break;
            }
        }
    }
    removed.reverse();
    (
        SplinteredWord {
            core: current.into_iter().collect(),
            reductions: removed,
        },
        stopped_early,
    )
}

/// Reduces `word` to its core.
pub fn encode_word(word: &str, map: &ReductionMap, beam: BeamConfig) -> SplinteredWord {
    encode_word_traced(word, map, beam).0
}

/// Rebuilds the word by inserting each reduction's letter in order.
pub fn decode_word(sw: &SplinteredWord) -> Result<String> {
    let mut word: Vec<char> = sw.core.chars().collect();
    word.reserve(sw.reductions.len());
    for r in &sw.reductions {
        r.insert_into(&mut word)?;
    }
    Ok(word.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::reduction::IndexConvention;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    /// The lavod example: remove ו at 3 from 5-letter words, then ל at 0
    /// from 4-letter words.
    fn lavod_map(convention: IndexConvention) -> ReductionMap {
        let w = Reduction::at(3, 5, 'ו', convention);
        let l = Reduction::at(0, 4, 'ל', convention);
        ReductionMap::from_scores(
            "hebrew",
            "fp",
            convention,
            3,
            [
                (5, w, 40),
                (5, Reduction::at(0, 5, 'ל', convention), 10),
                (4, l, 30),
                (4, Reduction::at(2, 4, 'ב', convention), 5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lavod_encodes_to_root_and_template() {
        for conv in [IndexConvention::Signed, IndexConvention::Unsigned] {
            let map = lavod_map(conv);
            let sw = encode_word("לעבוד", &map, BeamConfig::default());
            assert_eq!(sw.core, "עבד");
            assert_eq!(sw.positive_indices(), vec![(0, 'ל'), (3, 'ו')]);
            assert_eq!(decode_word(&sw).unwrap(), "לעבוד");
        }
        let sw = encode_word(
            "לעבוד",
            &lavod_map(IndexConvention::Signed),
            BeamConfig::default(),
        );
        assert_eq!(
            sw.reductions,
            vec![Reduction::new(0, 'ל'), Reduction::new(-2, 'ו')]
        );
        assert_eq!(sw.display_positive(), "עבד + [0:ל 3:ו]");
    }

    #[test]
    fn short_words_are_their_own_core() {
        let map = lavod_map(IndexConvention::Signed);
        for w in ["עבד", "אב", "א"] {
            let sw = encode_word(w, &map, BeamConfig::default());
            assert_eq!(sw, SplinteredWord::unreduced(w));
        }
    }

    #[test]
    fn greedy_when_b_and_d_are_one() {
        let map = lavod_map(IndexConvention::Signed);
        let r = beam_select(&chars("לעבוד"), &map, BeamConfig::new(1, 1)).unwrap();
        assert_eq!(r, map.reductions(5)[0].reduction);
    }

    #[test]
    fn nothing_applicable_is_none() {
        let map = lavod_map(IndexConvention::Signed);
        assert_eq!(beam_select(&chars("גגגגג"), &map, BeamConfig::default()), None);
        let (sw, early) = encode_word_traced("גגגגג", &map, BeamConfig::default());
        assert!(early);
        assert_eq!(sw, SplinteredWord::unreduced("גגגגג"));
    }

    #[test]
    fn lookahead_can_beat_greedy() {
        let map = ReductionMap::from_scores(
            "x",
            "fp",
            IndexConvention::Unsigned,
            3,
            [
                (5, Reduction::new(0, 'a'), 6),
                (5, Reduction::new(4, 'b'), 4),
                (4, Reduction::new(0, 'a'), 9),
                (4, Reduction::new(1, 'q'), 1),
            ],
        )
        .unwrap();
        // a first: "qqyb" then only 1:q applies, 0.6 * 0.1 = 0.06.
        // b first: "aqqy" then 0:a applies, 0.4 * 0.9 = 0.36.
        let word = chars("aqqyb");
        assert_eq!(
            beam_select(&word, &map, BeamConfig::new(3, 1)),
            Some(Reduction::new(0, 'a'))
        );
        let (r, s) = beam_select_scored(&word, &map, BeamConfig::new(3, 2)).unwrap();
        assert_eq!(r, Reduction::new(4, 'b'));
        assert!((s - 0.36).abs() < 1e-12);
    }

    #[test]
    fn depth_changes_choice() {
        // Under d=1 the 0.6 reduction wins; under d=2 its child weight 0.1
        // loses to 0.4 * 1.0 (the b path hits a dead end and is padded).
        let map = ReductionMap::from_scores(
            "x",
            "fp",
            IndexConvention::Unsigned,
            2,
            [
                (4, Reduction::new(0, 'a'), 6),
                (4, Reduction::new(3, 'b'), 4),
                (3, Reduction::new(0, 'c'), 1),
                (3, Reduction::new(2, 'z'), 9),
            ],
        )
        .unwrap();
        let word = chars("acxb");
        assert_eq!(
            beam_select(&word, &map, BeamConfig::new(3, 1)),
            Some(Reduction::new(0, 'a'))
        );
        // a path: "cxb" -> 0:c applies (0.1) -> 0.06; 2:z? no.
        // b path: "acx" -> nothing applies -> 0.4.
        assert_eq!(
            beam_select(&word, &map, BeamConfig::new(3, 2)),
            Some(Reduction::new(3, 'b'))
        );
    }

    #[test]
    fn decode_range_error() {
        let sw = SplinteredWord {
            core: "אבג".into(),
            reductions: vec![Reduction::new(7, 'ד')],
        };
        assert!(matches!(decode_word(&sw), Err(Error::Range { .. })));
    }
}
