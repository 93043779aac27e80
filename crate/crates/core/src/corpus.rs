//! Corpus ingestion: text normalization, word splitting and the unigram
//! frequency table that reduction-map training runs on.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::{Delimiters, LanguageProfile};

/// Deletes every diacritic codepoint of the profile; everything else is
/// kept in order.
pub fn normalize_text(raw: &str, profile: &LanguageProfile) -> String {
    if profile.diacritics.is_empty() {
        return raw.to_owned();
    }
    raw.chars().filter(|&c| !profile.is_diacritic(c)).collect()
}

/// Replaces every final letter form with its non-final form.
pub fn normalize_final_letters(word: &str, profile: &LanguageProfile) -> String {
    if profile.final_letter_pairs.is_empty() {
        return word.to_owned();
    }
    word.chars()
        .map(|c| {
            profile
                .final_letter_pairs
                .iter()
                .find(|&&(f, _)| f == c)
                .map_or(c, |&(_, n)| n)
        })
        .collect()
}

/// Inverse of [`normalize_final_letters`] for words written in the usual
/// way: a word-final non-final letter goes back to its final form.
pub fn denormalize_final_letters(word: &str, profile: &LanguageProfile) -> String {
    let Some(last) = word.chars().next_back() else {
        return String::new();
    };
    match profile.final_letter_pairs.iter().find(|&&(_, n)| n == last) {
        Some(&(f, _)) => {
            let mut out = String::with_capacity(word.len() + 1);
            out.push_str(&word[..word.len() - last.len_utf8()]);
            out.push(f);
            out
        }
        None => word.to_owned(),
    }
}

/// True when `denormalize(normalize(word)) == word`, i.e. final forms occur
/// exactly at the end of the word. Words failing this (borrowed words such
/// as "ketchup" spelled with a non-final last letter) are final-form
/// exceptions.
pub fn has_canonical_final_forms(word: &str, profile: &LanguageProfile) -> bool {
    if profile.final_letter_pairs.is_empty() {
        return true;
    }
    let mut chars = word.chars().peekable();
    while let Some(c) = chars.next() {
        let is_last = chars.peek().is_none();
        let is_final = profile.final_letter_pairs.iter().any(|&(f, _)| f == c);
        let is_non_final = profile.final_letter_pairs.iter().any(|&(_, n)| n == c);
        if (is_final && !is_last) || (is_non_final && is_last) {
            return false;
        }
    }
    true
}

/// A word and its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan<'a> {
    pub word: &'a str,
    pub span: Range<usize>,
}

/// Splits `text` at the default delimiter set, dropping empty fragments.
pub fn split_words(text: &str) -> Vec<WordSpan<'_>> {
    split_words_with(text, &Delimiters::default())
}

pub fn split_words_with<'a>(text: &'a str, delimiters: &Delimiters) -> Vec<WordSpan<'a>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if delimiters.is_delimiter(c) {
            if let Some(s) = start.take() {
                out.push(WordSpan {
                    word: &text[s..i],
                    span: s..i,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(WordSpan {
            word: &text[s..],
            span: s..text.len(),
        });
    }
    out
}

/// Word → occurrence count, partitioned by word length in codepoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFrequencyTable {
    entries: HashMap<String, u64>,
    by_length: BTreeMap<usize, Vec<String>>,
    profile_fingerprint: String,
    /// Raw spellings whose final letter forms do not round-trip, with counts.
    final_form_exceptions: BTreeMap<String, u64>,
}

impl WordFrequencyTable {
    fn from_parts(
        entries: HashMap<String, u64>,
        profile_fingerprint: String,
        final_form_exceptions: BTreeMap<String, u64>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut by_length: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for w in entries.keys() {
            by_length.entry(w.chars().count()).or_default().push(w.clone());
        }
        for words in by_length.values_mut() {
            words.sort_unstable();
        }
        Ok(Self {
            entries,
            by_length,
            profile_fingerprint,
            final_form_exceptions,
        })
    }

    /// Builds a table directly from `(word, count)` pairs, applying no
    /// filtering. Mostly useful for tests and hand-built examples.
    pub fn from_counts<I, S>(counts: I, profile_fingerprint: impl Into<String>) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut entries = HashMap::new();
        for (w, c) in counts {
            if c > 0 {
                *entries.entry(w.into()).or_insert(0) += c;
            }
        }
        Self::from_parts(entries, profile_fingerprint.into(), BTreeMap::new())
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn entries(&self) -> &HashMap<String, u64> {
        &self.entries
    }

    /// Words of exactly `len` codepoints, sorted.
    pub fn words_of_length(&self, len: usize) -> &[String] {
        self.by_length.get(&len).map_or(&[], Vec::as_slice)
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_length.keys().copied()
    }

    pub fn max_word_length(&self) -> usize {
        self.by_length.keys().next_back().copied().unwrap_or(0)
    }

    pub fn profile_fingerprint(&self) -> &str {
        &self.profile_fingerprint
    }

    pub fn final_form_exceptions(&self) -> &BTreeMap<String, u64> {
        &self.final_form_exceptions
    }

    /// Entries sorted by descending count, then lexicographically.
    pub fn sorted_entries(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        v.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }

    /// Writes `word<TAB>count` lines to `path` and the header to
    /// [`WordFrequencyTable::sidecar_path`].
    pub fn save(&self, path: impl AsRef<Path>, profile_name: &str) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (word, count) in self.sorted_entries() {
            writeln!(w, "{word}\t{count}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;

        let meta = Self::sidecar_path(path);
        let file = File::create(&meta).map_err(|e| Error::io(&meta, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>, s: String| writeln!(w, "{s}").map_err(|e| Error::io(&meta, e));
        write(&mut w, format!("#splinter-freq\t{FREQ_VERSION}"))?;
        write(&mut w, format!("profile\t{profile_name}"))?;
        write(&mut w, format!("fingerprint\t{}", self.profile_fingerprint))?;
        write(&mut w, format!("words\t{}", self.len()))?;
        write(&mut w, format!("total\t{}", self.total()))?;
        for (word, count) in &self.final_form_exceptions {
            write(&mut w, format!("exception\t{word}\t{count}"))?;
        }
        w.flush().map_err(|e| Error::io(&meta, e))?;
        Ok(())
    }

    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta");
        PathBuf::from(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = Self::sidecar_path(path);
        let meta = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let mut lines = meta.lines();
        let header = lines.next().unwrap_or_default();
        if header != format!("#splinter-freq\t{FREQ_VERSION}") {
            return Err(Error::format("frequency table header", header));
        }
        let mut fingerprint = None;
        let mut expected_words = None;
        let mut exceptions = BTreeMap::new();
        for line in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["fingerprint", f] => fingerprint = Some(f.to_string()),
                ["words", n] => expected_words = n.parse::<usize>().ok(),
                ["exception", w, c] => {
                    let c = c
                        .parse()
                        .map_err(|_| Error::format("frequency table header", line))?;
                    exceptions.insert(w.to_string(), c);
                }
                ["profile", _] | ["total", _] => {}
                _ => return Err(Error::format("frequency table header", line)),
            }
        }
        let fingerprint =
            fingerprint.ok_or_else(|| Error::format("frequency table header", "no fingerprint"))?;

        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashMap::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format("frequency table", line.clone()))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::format("frequency table", line.clone()))?;
            if entries.insert(word.to_owned(), count).is_some() {
                return Err(Error::format("frequency table", format!("duplicate {word:?}")));
            }
        }
        if expected_words.is_some_and(|n| n != entries.len()) {
            return Err(Error::format("frequency table", "word count mismatch"));
        }
        Self::from_parts(entries, fingerprint, exceptions)
    }
}

const FREQ_VERSION: u32 = 1;

/// Builds the frequency table from already-normalized words: keeps words
/// made only of script codepoints that occur at least
/// `min_word_frequency` times.
pub fn build_frequency_table<I, S>(words: I, profile: &LanguageProfile) -> Result<WordFrequencyTable>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counter = WordCounter::default();
    for w in words {
        counter.add_normalized(w.as_ref(), 1);
    }
    counter.finish(profile)
}

/// Mergeable raw word counts. Shards built over disjoint input chunks are
/// combined with [`WordCounter::merge`].
#[derive(Debug, Default, Clone)]
pub struct WordCounter {
    counts: HashMap<String, u64>,
    exceptions: HashMap<String, u64>,
}

impl WordCounter {
    pub fn add_normalized(&mut self, word: &str, n: u64) {
        if let Some(c) = self.counts.get_mut(word) {
            *c += n;
        } else {
            self.counts.insert(word.to_owned(), n);
        }
    }

    /// Normalizes one line of raw text and counts its words.
    pub fn add_raw_line(&mut self, line: &str, profile: &LanguageProfile) {
        let text = normalize_text(line, profile);
        for ws in split_words_with(&text, &profile.delimiters) {
            let word = ws.word;
            if profile.is_script_word(word) {
                if !has_canonical_final_forms(word, profile) {
                    *self.exceptions.entry(word.to_owned()).or_insert(0) += 1;
                }
                let norm = normalize_final_letters(word, profile);
                self.add_normalized(&norm, 1);
            } else {
                self.add_normalized(word, 1);
            }
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        let (mut big, small) = if self.counts.len() >= other.counts.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, self)
        };
        for (w, c) in small.counts {
            *big.counts.entry(w).or_insert(0) += c;
        }
        for (w, c) in small.exceptions {
            *big.exceptions.entry(w).or_insert(0) += c;
        }
        big
    }

    pub fn raw_counts(&self) -> &HashMap<String, u64> {
        &self.counts
    }

    pub fn finish(self, profile: &LanguageProfile) -> Result<WordFrequencyTable> {
        let entries: HashMap<String, u64> = self
            .counts
            .into_iter()
            .filter(|(w, c)| *c >= profile.min_word_frequency && profile.is_script_word(w))
            .collect();
        let exceptions = self
            .exceptions
            .into_iter()
            .filter(|(w, _)| entries.contains_key(&normalize_final_letters(w, profile)))
            .collect();
        WordFrequencyTable::from_parts(entries, profile.fingerprint(), exceptions)
    }
}

/// Counts words over raw text lines in parallel shards.
pub fn count_lines<S>(lines: &[S], profile: &LanguageProfile) -> WordCounter
where
    S: AsRef<str> + Sync,
{
    lines
        .par_chunks(4096)
        .map(|chunk| {
            let mut c = WordCounter::default();
            for line in chunk {
                c.add_raw_line(line.as_ref(), profile);
            }
            c
        })
        .reduce(WordCounter::default, WordCounter::merge)
}

pub fn frequency_table_from_text(text: &str, profile: &LanguageProfile) -> Result<WordFrequencyTable> {
    let lines: Vec<&str> = text.lines().collect();
    count_lines(&lines, profile).finish(profile)
}

/// Reads UTF-8 text files and builds their frequency table.
pub fn frequency_table_from_files<P: AsRef<Path>>(
    paths: &[P],
    profile: &LanguageProfile,
) -> Result<WordFrequencyTable> {
    let mut total = WordCounter::default();
    for path in paths {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<&str> = text.lines().collect();
        total = total.merge(count_lines(&lines, profile));
    }
    total.finish(profile)
}
