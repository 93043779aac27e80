use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::profile::{CodepointRange, LanguageProfile};
use crate::reduction::{Reduction, ReductionMap};

use super::SplinteredWord;

/// The contiguous codepoint block composite characters are drawn from.
///
/// The first codepoint of the block is reserved as the escape marker used
/// by text-level splintering; composites start right after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeBlock {
    pub base: char,
    pub capacity: u32,
}

impl Default for CompositeBlock {
    fn default() -> Self {
        Self::private_use()
    }
}

impl CompositeBlock {
    /// U+E000..=U+F8FF.
    pub fn private_use() -> Self {
        Self {
            base: '\u{E000}',
            capacity: 0x1900,
        }
    }

    /// U+4E00..=U+9FFF, for tokenizer libraries that reject private-use
    /// codepoints.
    pub fn cjk() -> Self {
        Self {
            base: '\u{4E00}',
            capacity: 0x5200,
        }
    }

    pub fn escape(&self) -> char {
        self.base
    }

    #[inline]
    pub fn contains(&self, c: char) -> bool {
        let c = c as u32;
        let b = self.base as u32;
        c >= b && c < b + self.capacity
    }

    fn codepoint(&self, slot: usize) -> Option<char> {
        let off = 1 + u32::try_from(slot).ok()?;
        (off < self.capacity)
            .then(|| char::from_u32(self.base as u32 + off))
            .flatten()
    }

    fn slot(&self, c: char) -> Option<usize> {
        (self.contains(c) && c != self.base).then(|| (c as u32 - self.base as u32 - 1) as usize)
    }

    fn validate(&self, profile: &LanguageProfile) -> Result<()> {
        let start = self.base as u32;
        let end = start
            .checked_add(self.capacity.saturating_sub(1))
            .filter(|&e| e <= 0x10FFFF)
            .ok_or_else(|| Error::InvalidProfile("composite block exceeds Unicode".into()))?;
        if self.capacity < 2 {
            return Err(Error::InvalidProfile("composite block too small".into()));
        }
        if start <= 0xDFFF && end >= 0xD800 {
            return Err(Error::InvalidProfile(
                "composite block overlaps surrogates".into(),
            ));
        }
        for r in &profile.script_ranges {
            if (r.start as u32) <= end && (r.end as u32) >= start {
                return Err(Error::InvalidProfile(
                    "composite block overlaps the profile script".into(),
                ));
            }
        }
        if profile.delimiters.chars.iter().any(|&c| self.contains(c)) {
            return Err(Error::InvalidProfile(
                "composite block contains a delimiter".into(),
            ));
        }
        Ok(())
    }
}

/// Bijection between reductions and composite codepoints, over a base
/// script alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeAlphabet {
    language: String,
    script: Vec<CodepointRange>,
    block: CompositeBlock,
    composites: Vec<Reduction>,
    lookup: HashMap<Reduction, usize>,
    frozen: bool,
}

impl CompositeAlphabet {
    /// An empty alphabet in training mode: unseen reductions are added by
    /// [`CompositeAlphabet::to_surface`].
    pub fn new(profile: &LanguageProfile, block: CompositeBlock) -> Result<Self> {
        block.validate(profile)?;
        Ok(Self {
            language: profile.name.clone(),
            script: profile.script_ranges.clone(),
            block,
            composites: Vec::new(),
            lookup: HashMap::new(),
            frozen: false,
        })
    }

    /// A frozen alphabet covering every reduction in `map`, assigned in
    /// ascending `(index, letter)` order.
    pub fn from_map(map: &ReductionMap, profile: &LanguageProfile, block: CompositeBlock) -> Result<Self> {
        let mut alphabet = Self::new(profile, block)?;
        let mut all: Vec<Reduction> = map.iter().map(|(_, s)| s.reduction).collect();
        all.sort_unstable();
        all.dedup();
        for r in all {
            alphabet.insert(r)?;
        }
        alphabet.freeze();
        Ok(alphabet)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn block(&self) -> CompositeBlock {
        self.block
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    /// Number of composite characters.
    pub fn composite_count(&self) -> usize {
        self.composites.len()
    }

    /// Base script letters plus composites.
    pub fn size(&self) -> usize {
        let base: usize = self.script.iter().map(|r| (r.start..=r.end).count()).sum();
        base + self.composites.len()
    }

    pub fn composites(&self) -> impl Iterator<Item = (char, Reduction)> + '_ {
        self.composites
            .iter()
            .enumerate()
            .map(|(i, &r)| (self.block.codepoint(i).expect("slot in block"), r))
    }

    #[inline]
    pub fn is_base(&self, c: char) -> bool {
        self.script.iter().any(|r| r.contains(c))
    }

    /// True for any codepoint in the composite block, assigned or not,
    /// including the escape marker.
    #[inline]
    pub fn is_reserved(&self, c: char) -> bool {
        self.block.contains(c)
    }

    pub fn escape(&self) -> char {
        self.block.escape()
    }

    pub fn codepoint_of(&self, r: &Reduction) -> Option<char> {
        self.lookup.get(r).and_then(|&i| self.block.codepoint(i))
    }

    pub fn reduction_of(&self, c: char) -> Result<Reduction> {
        match self.block.slot(c) {
            Some(i) if i < self.composites.len() => Ok(self.composites[i]),
            Some(_) => Err(Error::UnknownComposite(c as u32)),
            None => Err(Error::MixedScript(c as u32)),
        }
    }

    /// Adds `r` if missing and returns its codepoint. Allowed even when
    /// frozen; freezing only affects [`CompositeAlphabet::to_surface`].
    pub fn insert(&mut self, r: Reduction) -> Result<char> {
        if let Some(c) = self.codepoint_of(&r) {
            return Ok(c);
        }
        let slot = self.composites.len();
        let c = self.block.codepoint(slot).ok_or(Error::AlphabetFull(slot))?;
        self.composites.push(r);
        self.lookup.insert(r, slot);
        Ok(c)
    }

    /// Core codepoints followed by one composite per reduction. Fails with
    /// [`Error::UnknownReduction`] if a reduction is not assigned.
    pub fn encode_surface(&self, sw: &SplinteredWord) -> Result<String> {
        let mut out = String::with_capacity(sw.core.len() + 3 * sw.reductions.len());
        out.push_str(&sw.core);
        for r in &sw.reductions {
            let c = self.codepoint_of(r).ok_or(Error::UnknownReduction {
                index: r.index,
                letter: r.letter,
            })?;
            out.push(c);
        }
        Ok(out)
    }

    /// Surface form of `sw`. In training mode missing reductions are
    /// assigned; in frozen mode they are an error.
    pub fn to_surface(&mut self, sw: &SplinteredWord) -> Result<String> {
        if !self.frozen {
            for r in &sw.reductions {
                self.insert(*r)?;
            }
        }
        self.encode_surface(sw)
    }

    /// Inverse of [`CompositeAlphabet::to_surface`].
    pub fn from_surface(&self, s: &str) -> Result<SplinteredWord> {
        let mut core = String::new();
        let mut reductions = Vec::new();
        for c in s.chars() {
            if self.is_base(c) {
                if !reductions.is_empty() {
                    return Err(Error::MalformedSurface);
                }
                core.push(c);
            } else {
                reductions.push(self.reduction_of(c)?);
            }
        }
        Ok(SplinteredWord { core, reductions })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#splinter-alphabet\t{ALPHABET_VERSION}");
        let _ = writeln!(out, "#language\t{}", self.language);
        let _ = writeln!(
            out,
            "#block\t{:04X}\t{}",
            self.block.base as u32, self.block.capacity
        );
        for r in &self.script {
            let _ = writeln!(out, "#script\t{:04X}-{:04X}", r.start as u32, r.end as u32);
        }
        for (c, r) in self.composites() {
            let _ = writeln!(out, "{:04X}\t{}\t{}", c as u32, r.index, r.letter);
        }
        out
    }

    /// Parses an alphabet file. Loaded alphabets are frozen.
    pub fn from_text(text: &str) -> Result<Self> {
        let err = |r: String| Error::format("alphabet", r);
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l == format!("#splinter-alphabet\t{ALPHABET_VERSION}") => {}
            other => return Err(err(format!("bad header {:?}", other.unwrap_or("")))),
        }
        let hex = |s: &str| {
            u32::from_str_radix(s, 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| err(format!("bad codepoint {s:?}")))
        };
        let mut language = None;
        let mut block = None;
        let mut script = Vec::new();
        let mut entries = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split('\t').collect();
            match f.as_slice() {
                ["#language", l] => language = Some(l.to_string()),
                ["#block", b, cap] => {
                    block = Some(CompositeBlock {
                        base: hex(b)?,
                        capacity: cap.parse().map_err(|_| err(format!("bad capacity {cap:?}")))?,
                    })
                }
                ["#script", r] => {
                    let (a, b) = r.split_once('-').ok_or_else(|| err(format!("bad range {r:?}")))?;
                    script.push(CodepointRange::new(hex(a)?, hex(b)?));
                }
                [cp, index, letter] if !cp.starts_with('#') => {
                    let mut lc = letter.chars();
                    let (Some(l), None) = (lc.next(), lc.next()) else {
                        return Err(err(format!("bad letter in {line:?}")));
                    };
                    let index = index.parse().map_err(|_| err(format!("bad index in {line:?}")))?;
                    entries.push((hex(cp)?, Reduction::new(index, l)));
                }
                _ => return Err(err(format!("bad line {line:?}"))),
            }
        }
        let language = language.ok_or_else(|| err("missing #language".into()))?;
        let block = block.ok_or_else(|| err("missing #block".into()))?;
        if script.is_empty() {
            return Err(err("missing #script".into()));
        }
        let profile_like = LanguageProfile {
            name: language.clone(),
            script_ranges: script.clone(),
            diacritics: Vec::new(),
            final_letter_pairs: Vec::new(),
            min_word_frequency: 1,
            min_core_length: 1,
            delimiters: Default::default(),
        };
        let mut alphabet = Self::new(&profile_like, block)?;
        for (c, r) in entries {
            let assigned = alphabet.insert(r)?;
            if assigned != c {
                return Err(err(format!(
                    "composite {r} expected at U+{:04X}, file says U+{:04X}",
                    assigned as u32, c as u32
                )));
            }
        }
        alphabet.freeze();
        Ok(alphabet)
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

const ALPHABET_VERSION: u32 = 1;

#[cfg(test)]
mod tests {
    use super::*;

    fn lavod() -> SplinteredWord {
        SplinteredWord {
            core: "עבד".into(),
            reductions: vec![Reduction::new(0, 'ל'), Reduction::new(-2, 'ו')],
        }
    }

    #[test]
    fn surface_has_core_then_composites() {
        let he = LanguageProfile::hebrew();
        let mut a = CompositeAlphabet::new(&he, CompositeBlock::default()).unwrap();
        let s = a.to_surface(&lavod()).unwrap();
        let cps: Vec<char> = s.chars().collect();
        assert_eq!(cps.len(), 5);
        assert_eq!(&cps[..3], &['ע', 'ב', 'ד']);
        assert_eq!(cps[3], '\u{E001}');
        assert_eq!(cps[4], '\u{E002}');
        assert_eq!(a.from_surface(&s).unwrap(), lavod());
        assert_eq!(a.size(), 27 + 2);
    }

    #[test]
    fn frozen_rejects_new_reductions() {
        let he = LanguageProfile::hebrew();
        let mut a = CompositeAlphabet::new(&he, CompositeBlock::default()).unwrap();
        a.freeze();
        assert!(matches!(
            a.to_surface(&lavod()),
            Err(Error::UnknownReduction { .. })
        ));
    }

    #[test]
    fn from_surface_errors() {
        let he = LanguageProfile::hebrew();
        let mut a = CompositeAlphabet::new(&he, CompositeBlock::default()).unwrap();
        a.to_surface(&lavod()).unwrap();
        assert!(matches!(a.from_surface("עבx"), Err(Error::MixedScript(0x78))));
        assert!(matches!(
            a.from_surface("עב\u{E0FF}"),
            Err(Error::UnknownComposite(0xE0FF))
        ));
        assert!(matches!(
            a.from_surface("ע\u{E001}ב"),
            Err(Error::MalformedSurface)
        ));
    }

    #[test]
    fn text_round_trip_preserves_assignment() {
        let he = LanguageProfile::hebrew();
        let mut a = CompositeAlphabet::new(&he, CompositeBlock::cjk()).unwrap();
        a.to_surface(&lavod()).unwrap();
        a.insert(Reduction::new(-1, 'ה')).unwrap();
        a.freeze();
        let back = CompositeAlphabet::from_text(&a.to_text()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.codepoint_of(&Reduction::new(-1, 'ה')), Some('\u{4E03}'));
    }

    #[test]
    fn block_overlapping_script_rejected() {
        let he = LanguageProfile::hebrew();
        let block = CompositeBlock {
            base: '\u{05C0}',
            capacity: 100,
        };
        assert!(CompositeAlphabet::new(&he, block).is_err());
    }

    #[test]
    fn block_exhaustion() {
        let he = LanguageProfile::hebrew();
        let block = CompositeBlock {
            base: '\u{E000}',
            capacity: 3,
        };
        let mut a = CompositeAlphabet::new(&he, block).unwrap();
        a.insert(Reduction::new(0, 'א')).unwrap();
        a.insert(Reduction::new(1, 'א')).unwrap();
        assert!(matches!(
            a.insert(Reduction::new(2, 'א')),
            Err(Error::AlphabetFull(2))
        ));
    }
}
