//! Language profiles: which script a splinterer operates on and how raw
//! text in that script is normalized before counting.
//!
//! Profiles are declarative TOML files. Codepoints are written as hex
//! (`"05D0"`) and ranges as `"05D0-05EA"`:
//!
//! ```toml
//! name = "hebrew"
//! script_ranges = ["05D0-05EA"]
//! diacritics = ["0591-05BD", "05BF"]
//! final_letter_pairs = [["05DA", "05DB"]]
//! min_word_frequency = 10
//! min_core_length = 3
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Inclusive codepoint range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodepointRange {
    pub start: char,
    pub end: char,
}

impl CodepointRange {
    pub fn new(start: char, end: char) -> Self {
        Self { start, end }
    }

    pub fn single(c: char) -> Self {
        Self { start: c, end: c }
    }

    pub fn contains(&self, c: char) -> bool {
        self.start <= c && c <= self.end
    }

    fn parse(s: &str) -> Result<Self> {
        let (a, b) = match s.split_once('-') {
            Some((a, b)) => (a, b),
            None => (s, s),
        };
        let range = Self::new(parse_codepoint(a)?, parse_codepoint(b)?);
        if range.start > range.end {
            return Err(Error::InvalidProfile(format!("empty range {s:?}")));
        }
        Ok(range)
    }
}

fn parse_codepoint(s: &str) -> Result<char> {
    let s = s.trim();
    let s = s.strip_prefix("U+").or_else(|| s.strip_prefix("u+")).unwrap_or(s);
    u32::from_str_radix(s, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| Error::InvalidProfile(format!("bad codepoint {s:?}")))
}

/// The word delimiter set used to cut text into words.
///
/// The default is `.`, any whitespace, `-`, `,`, `:`, `"`, `(` and `)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delimiters {
    pub whitespace: bool,
    pub chars: BTreeSet<char>,
}

impl Default for Delimiters {
    fn default() -> Self {
        Self {
            whitespace: true,
            chars: ['.', '-', ',', ':', '"', '(', ')'].into_iter().collect(),
        }
    }
}

impl Delimiters {
    #[inline]
    pub fn is_delimiter(&self, c: char) -> bool {
        (self.whitespace && c.is_whitespace()) || self.chars.contains(&c)
    }
}

/// Normalization and filtering parameters for one target language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageProfile {
    pub name: String,
    pub script_ranges: Vec<CodepointRange>,
    pub diacritics: Vec<CodepointRange>,
    /// `(final form, non-final form)`.
    pub final_letter_pairs: Vec<(char, char)>,
    pub min_word_frequency: u64,
    pub min_core_length: usize,
    pub delimiters: Delimiters,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    name: String,
    script_ranges: Vec<String>,
    #[serde(default)]
    diacritics: Vec<String>,
    #[serde(default)]
    final_letter_pairs: Vec<(String, String)>,
    #[serde(default = "default_min_word_frequency")]
    min_word_frequency: u64,
    #[serde(default = "default_min_core_length")]
    min_core_length: usize,
    #[serde(default)]
    delimiters: Option<String>,
    #[serde(default = "default_true")]
    split_on_whitespace: bool,
}

fn default_min_word_frequency() -> u64 {
    10
}

fn default_min_core_length() -> usize {
    3
}

fn default_true() -> bool {
    true
}

const HEBREW: &str = include_str!("../profiles/hebrew.toml");
const ARABIC: &str = include_str!("../profiles/arabic.toml");
const MALAY: &str = include_str!("../profiles/malay.toml");

impl LanguageProfile {
    /// Names accepted by [`LanguageProfile::builtin`].
    pub const BUILTIN: [&'static str; 3] = ["hebrew", "arabic", "malay"];

    pub fn builtin(name: &str) -> Option<Self> {
        let src = match name {
            "hebrew" | "he" => HEBREW,
            "arabic" | "ar" => ARABIC,
            "malay" | "ms" => MALAY,
            _ => return None,
        };
        Some(Self::from_toml(src).expect("built-in profile parses"))
    }

    pub fn hebrew() -> Self {
        Self::builtin("hebrew").unwrap()
    }

    /// Resolves a built-in name, or else reads a profile file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(p) => Ok(p),
            None => Self::load(name_or_path),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&src)
    }

    pub fn from_toml(src: &str) -> Result<Self> {
        let raw: ProfileFile = toml::from_str(src).map_err(|e| Error::InvalidProfile(e.to_string()))?;
        let script_ranges = raw
            .script_ranges
            .iter()
            .map(|s| CodepointRange::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let diacritics = raw
            .diacritics
            .iter()
            .map(|s| CodepointRange::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let final_letter_pairs = raw
            .final_letter_pairs
            .iter()
            .map(|(f, n)| Ok((parse_codepoint(f)?, parse_codepoint(n)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut delimiters = Delimiters {
            whitespace: raw.split_on_whitespace,
            ..Delimiters::default()
        };
        if let Some(chars) = raw.delimiters {
            delimiters.chars = chars.chars().collect();
        }
        let profile = Self {
            name: raw.name,
            script_ranges,
            diacritics,
            final_letter_pairs,
            min_word_frequency: raw.min_word_frequency,
            min_core_length: raw.min_core_length,
            delimiters,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProfile(m));
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return bad(format!("name {:?} must be a non-empty identifier", self.name));
        }
        if self.script_ranges.is_empty() {
            return bad("script_ranges is empty".into());
        }
        let mut sorted = self.script_ranges.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0].end >= w[1].start {
                return bad(format!(
                    "script ranges U+{:04X} and U+{:04X} overlap",
                    w[0].start as u32, w[1].start as u32
                ));
            }
        }
        for r in &self.script_ranges {
            let mut c = r.start;
            loop {
                if self.delimiters.is_delimiter(c) || c.is_control() {
                    return bad(format!("script contains delimiter or control U+{:04X}", c as u32));
                }
                if c == r.end {
                    break;
                }
                c = match char::from_u32(c as u32 + 1) {
                    Some(n) => n,
                    None => break,
                };
            }
        }
        let mut finals = BTreeSet::new();
        let mut non_finals = BTreeSet::new();
        for &(f, n) in &self.final_letter_pairs {
            if !finals.insert(f) || !non_finals.insert(n) {
                return bad("final_letter_pairs is not a bijection".into());
            }
        }
        if finals.iter().any(|c| non_finals.contains(c)) {
            return bad("a codepoint is both a final and a non-final form".into());
        }
        if self.min_word_frequency == 0 {
            return bad("min_word_frequency must be >= 1".into());
        }
        if self.min_core_length == 0 {
            return bad("min_core_length must be >= 1".into());
        }
        Ok(())
    }

    #[inline]
    pub fn in_script(&self, c: char) -> bool {
        self.script_ranges.iter().any(|r| r.contains(c))
    }

    /// True for non-empty words made only of script codepoints.
    pub fn is_script_word(&self, word: &str) -> bool {
        !word.is_empty() && word.chars().all(|c| self.in_script(c))
    }

    #[inline]
    pub fn is_diacritic(&self, c: char) -> bool {
        self.diacritics.iter().any(|r| r.contains(c))
    }

    /// Final form → non-final form.
    pub fn final_to_non_final(&self) -> BTreeMap<char, char> {
        self.final_letter_pairs.iter().copied().collect()
    }

    /// Non-final form → final form.
    pub fn non_final_to_final(&self) -> BTreeMap<char, char> {
        self.final_letter_pairs.iter().map(|&(f, n)| (n, f)).collect()
    }

    /// Every script codepoint, ascending.
    pub fn script_codepoints(&self) -> Vec<char> {
        let mut out = Vec::new();
        let mut ranges = self.script_ranges.clone();
        ranges.sort();
        for r in ranges {
            out.extend((r.start as u32..=r.end as u32).filter_map(char::from_u32));
        }
        out
    }

    /// Stable short hash over every field that affects normalization.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        let _ = writeln!(canon, "name={}", self.name);
        let mut ranges = self.script_ranges.clone();
        ranges.sort();
        for r in ranges {
            let _ = writeln!(canon, "script={:X}-{:X}", r.start as u32, r.end as u32);
        }
        let mut dia = self.diacritics.clone();
        dia.sort();
        for r in dia {
            let _ = writeln!(canon, "diacritic={:X}-{:X}", r.start as u32, r.end as u32);
        }
        let mut pairs = self.final_letter_pairs.clone();
        pairs.sort();
        for (f, n) in pairs {
            let _ = writeln!(canon, "final={:X}:{:X}", f as u32, n as u32);
        }
        let _ = writeln!(canon, "min_word_frequency={}", self.min_word_frequency);
        let _ = writeln!(canon, "min_core_length={}", self.min_core_length);
        let _ = writeln!(canon, "whitespace={}", self.delimiters.whitespace);
        for c in &self.delimiters.chars {
            let _ = writeln!(canon, "delimiter={:X}", *c as u32);
        }
        let digest = Sha256::digest(canon.as_bytes());
        hex::encode(&digest[..8])
    }
}
