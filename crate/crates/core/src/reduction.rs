//! Reductions and the per-length reduction map.
//!
//! A [`Reduction`] removes one letter at a recorded index. The map is
//! trained in two passes over the frequency table: the first pass scores
//! every deletion that lands on an existing shorter word, the second pass
//! re-scores only the *first* such deletion per word under the first
//! pass's ranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::WordFrequencyTable;
use crate::error::{Error, Result};
use crate::profile::LanguageProfile;

/// One single-letter deletion (or, read backwards, insertion).
///
/// `index` is relative to the length of the word the letter is removed
/// from. Negative values count from the end: `-1` is the last letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reduction {
    pub index: i32,
    pub letter: char,
}

/// How deletion positions are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexConvention {
    /// Positions in the latter half of the word (`p >= ceil(n/2)`) are
    /// stored as `p - n`.
    #[default]
    Signed,
    /// Raw non-negative positions.
    Unsigned,
}

impl IndexConvention {
    pub fn is_signed(self) -> bool {
        self == IndexConvention::Signed
    }
}

impl Reduction {
    pub fn new(index: i32, letter: char) -> Self {
        Self { index, letter }
    }

    /// Canonical reduction for removing `letter` at `position` of a word
    /// with `len` letters.
    pub fn at(position: usize, len: usize, letter: char, convention: IndexConvention) -> Self {
        debug_assert!(position < len);
        let index = match convention {
            IndexConvention::Signed if position >= len.div_ceil(2) => position as i32 - len as i32,
            _ => position as i32,
        };
        Self { index, letter }
    }

    /// Position this reduction removes from a word of `len` letters.
    #[inline]
    pub fn position_in(&self, len: usize) -> Option<usize> {
        let p = if self.index >= 0 {
            self.index as i64
        } else {
            self.index as i64 + len as i64
        };
        (0..len as i64).contains(&p).then_some(p as usize)
    }

    /// True when the letter sits at the reduction's position.
    #[inline]
    pub fn applies_to(&self, word: &[char]) -> bool {
        self.position_in(word.len())
            .is_some_and(|p| word[p] == self.letter)
    }

    /// Removes the letter, if it applies.
    pub fn remove_from(&self, word: &[char]) -> Option<Vec<char>> {
        let p = self.position_in(word.len())?;
        if word[p] != self.letter {
            return None;
        }
        let mut out = Vec::with_capacity(word.len() - 1);
        out.extend_from_slice(&word[..p]);
        out.extend_from_slice(&word[p + 1..]);
        Some(out)
    }

    /// Where the letter goes when inserted into a word of `current_len`
    /// letters (producing `current_len + 1`).
    #[inline]
    pub fn insertion_position(&self, current_len: usize) -> Option<usize> {
        self.position_in(current_len + 1)
    }

    /// Inserts the letter back.
    pub fn insert_into(&self, word: &mut Vec<char>) -> Result<()> {
        let len = word.len();
        match self.insertion_position(len) {
            Some(p) => {
                word.insert(p, self.letter);
                Ok(())
            }
            None => Err(Error::Range {
                position: if self.index >= 0 {
                    self.index as isize
                } else {
                    self.index as isize + len as isize + 1
                },
                length: len,
            }),
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.index, self.letter)
    }
}

/// A reduction with its training score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredReduction {
    pub reduction: Reduction,
    pub score: u64,
}

/// Descending score, then ascending position within a word of `len`
/// letters, then letter.
fn rank_order(len: usize, a: &ScoredReduction, b: &ScoredReduction) -> Ordering {
    b.score
        .cmp(&a.score)
        .then_with(|| a.reduction.position_in(len).cmp(&b.reduction.position_in(len)))
        .then_with(|| a.reduction.letter.cmp(&b.reduction.letter))
}

fn sorted_list(len: usize, scores: HashMap<Reduction, u64>) -> Vec<ScoredReduction> {
    let mut list: Vec<ScoredReduction> = scores
        .into_iter()
        .filter(|&(_, s)| s > 0)
        .map(|(reduction, score)| ScoredReduction { reduction, score })
        .collect();
    list.sort_unstable_by(|a, b| rank_order(len, a, b));
    list
}

/// Word length → reductions ranked from most to least frequent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    language: String,
    profile_fingerprint: String,
    convention: IndexConvention,
    min_core_length: usize,
    per_length: BTreeMap<usize, Vec<ScoredReduction>>,
    totals: BTreeMap<usize, u64>,
}

/// Returned when a map was trained under a different profile than the one
/// in use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileMismatch {
    pub map_fingerprint: String,
    pub profile_fingerprint: String,
}

impl fmt::Display for ProfileMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "reduction map was trained with profile {} but the active profile is {}",
            self.map_fingerprint, self.profile_fingerprint
        )
    }
}

impl ReductionMap {
    /// Assembles a map from per-length score lists. Lists are re-sorted
    /// into rank order; zero scores are dropped.
    pub fn from_scores(
        language: impl Into<String>,
        profile_fingerprint: impl Into<String>,
        convention: IndexConvention,
        min_core_length: usize,
        scores: impl IntoIterator<Item = (usize, Reduction, u64)>,
    ) -> Result<Self> {
        let mut grouped: BTreeMap<usize, HashMap<Reduction, u64>> = BTreeMap::new();
        for (len, r, s) in scores {
            if r.position_in(len).is_none() {
                return Err(Error::format(
                    "reduction map",
                    format!("reduction {r} out of range for length {len}"),
                ));
            }
            *grouped.entry(len).or_default().entry(r).or_insert(0) += s;
        }
        let per_length = grouped
            .into_iter()
            .map(|(len, scores)| (len, sorted_list(len, scores)))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Self::assemble(
            language.into(),
            profile_fingerprint.into(),
            convention,
            min_core_length,
            per_length,
        )
    }

    fn assemble(
        language: String,
        profile_fingerprint: String,
        convention: IndexConvention,
        min_core_length: usize,
        per_length: BTreeMap<usize, Vec<ScoredReduction>>,
    ) -> Result<Self> {
        if per_length.is_empty() {
            return Err(Error::EmptyMap);
        }
        let totals = per_length
            .iter()
            .map(|(&len, l)| (len, l.iter().map(|s| s.score).sum()))
            .collect();
        Ok(Self {
            language,
            profile_fingerprint,
            convention,
            min_core_length,
            per_length,
            totals,
        })
    }

    /// Ranked reductions for words of `len` letters.
    pub fn reductions(&self, len: usize) -> &[ScoredReduction] {
        self.per_length.get(&len).map_or(&[], Vec::as_slice)
    }

    /// Score divided by the length's score total.
    pub fn weight(&self, len: usize, scored: &ScoredReduction) -> f64 {
        match self.totals.get(&len) {
            Some(&t) if t > 0 => scored.score as f64 / t as f64,
            _ => 0.0,
        }
    }

    pub fn total_score(&self, len: usize) -> u64 {
        self.totals.get(&len).copied().unwrap_or(0)
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.per_length.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ScoredReduction)> {
        self.per_length
            .iter()
            .flat_map(|(&len, l)| l.iter().map(move |s| (len, s)))
    }

    /// Number of (length, reduction) entries.
    pub fn len(&self) -> usize {
        self.per_length.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.per_length.is_empty()
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn profile_fingerprint(&self) -> &str {
        &self.profile_fingerprint
    }

    pub fn convention(&self) -> IndexConvention {
        self.convention
    }

    pub fn min_core_length(&self) -> usize {
        self.min_core_length
    }

    pub fn check_profile(&self, profile: &LanguageProfile) -> Option<ProfileMismatch> {
        let active = profile.fingerprint();
        (active != self.profile_fingerprint).then(|| ProfileMismatch {
            map_fingerprint: self.profile_fingerprint.clone(),
            profile_fingerprint: active,
        })
    }

    /// Reduction lines in final order: `length<TAB>index<TAB>letter<TAB>score`.
    pub fn body(&self) -> String {
        let mut out = String::new();
        for (len, s) in self.iter() {
            let _ = writeln!(
                out,
                "{len}\t{}\t{}\t{}",
                s.reduction.index, s.reduction.letter, s.score
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let body = self.body();
        let mut out = String::new();
        let _ = writeln!(out, "#splinter-map\t{MAP_VERSION}");
        let _ = writeln!(out, "#language\t{}", self.language);
        let _ = writeln!(out, "#fingerprint\t{}", self.profile_fingerprint);
        let _ = writeln!(out, "#signed_indices\t{}", self.convention.is_signed());
        let _ = writeln!(out, "#min_core_length\t{}", self.min_core_length);
        let _ = writeln!(out, "#checksum\t{}", checksum(&body));
        out.push_str(&body);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |r: String| Error::format("reduction map", r);
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l == format!("#splinter-map\t{MAP_VERSION}") => {}
            other => return Err(err(format!("bad header {:?}", other.unwrap_or("")))),
        }
        let mut header: HashMap<&str, &str> = HashMap::new();
        let mut body_start = text.len();
        let mut offset = text.find('\n').map_or(text.len(), |i| i + 1);
        for line in lines {
            match line.strip_prefix('#') {
                Some(kv) => {
                    let (k, v) = kv
                        .split_once('\t')
                        .ok_or_else(|| err(format!("bad header line {line:?}")))?;
                    header.insert(k, v);
                    offset += line.len() + 1;
                }
                None => {
                    body_start = offset;
                    break;
                }
            }
        }
        let body = &text[body_start.min(text.len())..];
        let field = |k: &str| header.get(k).copied().ok_or_else(|| err(format!("missing {k}")));
        if field("checksum")? != checksum(body) {
            return Err(err("checksum mismatch".into()));
        }
        let convention = match field("signed_indices")? {
            "true" => IndexConvention::Signed,
            "false" => IndexConvention::Unsigned,
            v => return Err(err(format!("bad signed_indices {v:?}"))),
        };
        let min_core_length: usize = field("min_core_length")?
            .parse()
            .map_err(|_| err("bad min_core_length".into()))?;

        let mut per_length: BTreeMap<usize, Vec<ScoredReduction>> = BTreeMap::new();
        for line in body.lines() {
            let bad = || err(format!("bad line {line:?}"));
            let mut f = line.split('\t');
            let (Some(len), Some(index), Some(letter), Some(score), None) =
                (f.next(), f.next(), f.next(), f.next(), f.next())
            else {
                return Err(bad());
            };
            let len: usize = len.parse().map_err(|_| bad())?;
            let index: i32 = index.parse().map_err(|_| bad())?;
            let mut lc = letter.chars();
            let (Some(letter), None) = (lc.next(), lc.next()) else {
                return Err(bad());
            };
            let score: u64 = score.parse().map_err(|_| bad())?;
            let reduction = Reduction { index, letter };
            if score == 0 || reduction.position_in(len).is_none() {
                return Err(bad());
            }
            per_length
                .entry(len)
                .or_default()
                .push(ScoredReduction { reduction, score });
        }
        for (&len, list) in &per_length {
            for w in list.windows(2) {
                if rank_order(len, &w[0], &w[1]) != Ordering::Less {
                    return Err(err(format!("length {len} list is not strictly ranked")));
                }
            }
        }
        Self::assemble(
            field("language")?.to_owned(),
            field("fingerprint")?.to_owned(),
            convention,
            min_core_length,
            per_length,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

const MAP_VERSION: u32 = 1;

fn checksum(body: &str) -> String {
    hex::encode(&Sha256::digest(body.as_bytes())[..8])
}

fn without(word: &[char], p: usize) -> String {
    word[..p].iter().chain(&word[p + 1..]).collect()
}

/// Every deletion from `word` that yields a word present in `table`,
/// scored by the resulting word's frequency.
pub fn enumerate_valid_reductions(
    word: &str,
    table: &WordFrequencyTable,
    convention: IndexConvention,
) -> Vec<(Reduction, u64)> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    (0..n)
        .filter_map(|p| {
            let shorter = without(&chars, p);
            table
                .get(&shorter)
                .map(|freq| (Reduction::at(p, n, chars[p], convention), freq))
        })
        .collect()
}

/// Trains the reduction map for `profile` (which supplies
/// `min_core_length` and the language name) from `table`.
pub fn train_reduction_map(
    table: &WordFrequencyTable,
    profile: &LanguageProfile,
    convention: IndexConvention,
) -> Result<ReductionMap> {
    let min_core = profile.min_core_length;
    let lengths: Vec<usize> = table.lengths().filter(|&k| k > min_core).collect();

    // Pass 1: every valid deletion, summed per (length, reduction).
    let candidates: BTreeMap<usize, Vec<ScoredReduction>> = lengths
        .par_iter()
        .map(|&k| {
            let mut scores: HashMap<Reduction, u64> = HashMap::new();
            for word in table.words_of_length(k) {
                for (r, freq) in enumerate_valid_reductions(word, table, convention) {
                    *scores.entry(r).or_insert(0) += freq;
                }
            }
            (k, sorted_list(k, scores))
        })
        .collect();

    // Pass 2: only the first valid deletion per word, in pass-1 rank order.
    let selected: BTreeMap<usize, Vec<ScoredReduction>> = lengths
        .par_iter()
        .map(|&k| {
            let ranked = &candidates[&k];
            let mut scores: HashMap<Reduction, u64> = HashMap::new();
            for word in table.words_of_length(k) {
                let chars: Vec<char> = word.chars().collect();
                for cand in ranked {
                    let r = cand.reduction;
                    let Some(p) = r.position_in(k) else { continue };
                    if chars[p] != r.letter {
                        continue;
                    }
                    if let Some(freq) = table.get(&without(&chars, p)) {
                        *scores.entry(r).or_insert(0) += freq;
                        break;
                    }
                }
            }
            (k, sorted_list(k, scores))
        })
        .filter(|(_, l)| !l.is_empty())
        .collect();

    ReductionMap::assemble(
        profile.name.clone(),
        table.profile_fingerprint().to_owned(),
        convention,
        min_core,
        selected,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> LanguageProfile {
        LanguageProfile::hebrew()
    }

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn signed_canonicalization_midpoint() {
        // n = 5: ceil(5/2) = 3, so positions 3 and 4 become -2 and -1.
        let s = IndexConvention::Signed;
        assert_eq!(Reduction::at(2, 5, 'x', s).index, 2);
        assert_eq!(Reduction::at(3, 5, 'x', s).index, -2);
        assert_eq!(Reduction::at(4, 5, 'x', s).index, -1);
        // n = 4: positions 2 and 3 become -2 and -1.
        assert_eq!(Reduction::at(1, 4, 'x', s).index, 1);
        assert_eq!(Reduction::at(2, 4, 'x', s).index, -2);
        assert_eq!(Reduction::at(3, 5, 'x', IndexConvention::Unsigned).index, 3);
    }

    #[test]
    fn remove_then_insert_is_identity() {
        let word = chars("לעבוד");
        for p in 0..word.len() {
            for conv in [IndexConvention::Signed, IndexConvention::Unsigned] {
                let r = Reduction::at(p, word.len(), word[p], conv);
                let mut shorter = r.remove_from(&word).unwrap();
                r.insert_into(&mut shorter).unwrap();
                assert_eq!(shorter, word);
            }
        }
    }

    #[test]
    fn insertion_out_of_range() {
        let mut w = chars("אב");
        assert!(matches!(
            Reduction::new(5, 'ג').insert_into(&mut w),
            Err(Error::Range { .. })
        ));
        assert!(Reduction::new(-4, 'ג').insert_into(&mut w).is_err());
        assert!(Reduction::new(-3, 'ג').insert_into(&mut w).is_ok());
        assert_eq!(w, chars("גאב"));
    }

    #[test]
    fn valid_reductions_of_lavod() {
        // l`bwd -> l`bd by removing w; l`bw is not a word.
        let table =
            WordFrequencyTable::from_counts([("לעבוד", 50), ("לעבד", 20), ("עבד", 40)], "fp").unwrap();
        let found = enumerate_valid_reductions("לעבוד", &table, IndexConvention::Unsigned);
        assert_eq!(found, vec![(Reduction::new(3, 'ו'), 20)]);
        let found = enumerate_valid_reductions("לעבוד", &table, IndexConvention::Signed);
        assert_eq!(found, vec![(Reduction::new(-2, 'ו'), 20)]);
        assert!(!found.iter().any(|(r, _)| r.letter == 'ד'));
    }

    #[test]
    fn no_valid_deletion_gives_empty_list() {
        let table = WordFrequencyTable::from_counts([("אבגד", 5)], "fp").unwrap();
        assert!(enumerate_valid_reductions("אבגד", &table, IndexConvention::Signed).is_empty());
    }

    #[test]
    fn only_short_words_is_empty_map() {
        let table = WordFrequencyTable::from_counts([("אבג", 5), ("אב", 5)], "fp").unwrap();
        assert!(matches!(
            train_reduction_map(&table, &profile(), IndexConvention::Signed),
            Err(Error::EmptyMap)
        ));
    }

    #[test]
    fn single_valid_deletion() {
        let table =
            WordFrequencyTable::from_counts([("מכתב", 30), ("מכתבה", 12), ("כתב", 7), ("גדול", 4)], "fp")
                .unwrap();
        let map = train_reduction_map(&table, &profile(), IndexConvention::Unsigned).unwrap();
        // מכתבה -> מכתב (remove ה at 4), מכתב -> כתב (remove מ at 0).
        assert_eq!(
            map.reductions(5),
            &[ScoredReduction {
                reduction: Reduction::new(4, 'ה'),
                score: 30
            }]
        );
        assert_eq!(
            map.reductions(4),
            &[ScoredReduction {
                reduction: Reduction::new(0, 'מ'),
                score: 7
            }]
        );
        assert_eq!(map.len(), 2);
    }

    #[test]
    fn text_round_trip_and_corruption() {
        let table =
            WordFrequencyTable::from_counts([("מכתב", 30), ("מכתבה", 12), ("כתב", 7), ("כתבה", 9)], "fp")
                .unwrap();
        let map = train_reduction_map(&table, &profile(), IndexConvention::Signed).unwrap();
        let text = map.to_text();
        assert_eq!(ReductionMap::from_text(&text).unwrap(), map);

        let bad_header = text.replacen("#splinter-map\t1", "#splinter-map\t7", 1);
        assert!(matches!(
            ReductionMap::from_text(&bad_header),
            Err(Error::Format { .. })
        ));
        let tampered = text.replace("\t30\n", "\t31\n");
        assert_ne!(tampered, text);
        assert!(matches!(
            ReductionMap::from_text(&tampered),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn profile_mismatch_is_reported() {
        let he = profile();
        let table = WordFrequencyTable::from_counts([("מכתב", 3), ("כתב", 7)], he.fingerprint()).unwrap();
        let map = train_reduction_map(&table, &he, IndexConvention::Signed).unwrap();
        assert!(map.check_profile(&he).is_none());
        let mut other = he.clone();
        other.min_word_frequency = 2;
        let m = map.check_profile(&other).unwrap();
        assert_eq!(m.map_fingerprint, he.fingerprint());
    }

    #[test]
    fn ties_break_by_position_then_letter() {
        let map = ReductionMap::from_scores(
            "x",
            "fp",
            IndexConvention::Signed,
            3,
            [
                (5, Reduction::new(-1, 'a'), 4),
                (5, Reduction::new(0, 'b'), 4),
                (5, Reduction::new(0, 'a'), 4),
                (5, Reduction::new(1, 'a'), 9),
            ],
        )
        .unwrap();
        let order: Vec<String> = map
            .reductions(5)
            .iter()
            .map(|s| s.reduction.to_string())
            .collect();
        assert_eq!(order, ["1:a", "0:a", "0:b", "-1:a"]);
    }
}
