//! A small deterministic word-internal BPE trainer and segmenter.
//!
//! Words (as cut by the profile's delimiters) are the units; merges never
//! cross word boundaries. The most frequent adjacent pair is merged each
//! step, ties going to the lower left token id, then the lower right id.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::split_words_with;
use crate::error::{Error, Result};
use crate::profile::Delimiters;

pub type TokenId = u32;

#[derive(Debug, Clone)]
pub struct BpeConfig {
    /// Target vocabulary size, including base codepoints and special tokens.
    pub vocab_size: usize,
    pub special_tokens: Vec<String>,
    pub delimiters: Delimiters,
}

impl BpeConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            special_tokens: Vec::new(),
            delimiters: Delimiters::default(),
        }
    }
}

/// Trained vocabulary and ordered merge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerModel {
    vocab: Vec<String>,
    special_count: usize,
    base_count: usize,
    merges: Vec<(TokenId, TokenId)>,
    vocab_size: usize,
    index: HashMap<String, TokenId>,
    ranks: HashMap<(TokenId, TokenId), (usize, TokenId)>,
}

/// Counts words of `text`, split at `delimiters`.
pub fn count_words(text: &str, delimiters: &Delimiters) -> HashMap<String, u64> {
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    lines
        .par_chunks(2048)
        .map(|chunk| {
            let mut counts: HashMap<String, u64> = HashMap::new();
            for line in chunk {
                for ws in split_words_with(line, delimiters) {
                    if let Some(c) = counts.get_mut(ws.word) {
                        *c += 1;
                    } else {
                        counts.insert(ws.word.to_owned(), 1);
                    }
                }
            }
            counts
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, c) in b {
                *a.entry(w).or_insert(0) += c;
            }
            a
        })
}

/// Trains on running text.
pub fn train_bpe(text: &str, config: &BpeConfig) -> Result<TokenizerModel> {
    if !config.delimiters.whitespace {
        // Lines may not be word-independent; count sequentially.
        let mut counts: HashMap<String, u64> = HashMap::new();
        for ws in split_words_with(text, &config.delimiters) {
            *counts.entry(ws.word.to_owned()).or_insert(0) += 1;
        }
        return train_bpe_from_counts(&counts, config);
    }
    train_bpe_from_counts(&count_words(text, &config.delimiters), config)
}

fn pairs_of(symbols: &[TokenId]) -> impl Iterator<Item = (TokenId, TokenId)> + '_ {
    symbols.windows(2).map(|w| (w[0], w[1]))
}

/// Replaces every non-overlapping occurrence of `pair`, scanning left to
/// right. Returns whether anything changed.
fn merge_in_place(symbols: &mut Vec<TokenId>, pair: (TokenId, TokenId), new_id: TokenId) -> bool {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    let mut changed = false;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(new_id);
            i += 2;
            changed = true;
        } else {
            out.push(symbols[i]);
            i += 1;
        }
    }
    if changed {
        *symbols = out;
    }
    changed
}

/// Trains from word counts.
///
/// Exactly `vocab_size - base - specials` merges are learned unless every
/// word collapses to one token first. When two different pairs spell the
/// same string the second merge reuses the existing id, so the vocabulary
/// can end up slightly smaller than `vocab_size`.
pub fn train_bpe_from_counts(counts: &HashMap<String, u64>, config: &BpeConfig) -> Result<TokenizerModel> {
    let alphabet: BTreeSet<char> = counts.keys().flat_map(|w| w.chars()).collect();
    let special_count = config.special_tokens.len();
    let base_count = alphabet.len();
    if config.vocab_size <= base_count + special_count {
        return Err(Error::VocabTooSmall {
            requested: config.vocab_size,
            base: base_count + special_count,
        });
    }

    let mut vocab: Vec<String> = config.special_tokens.clone();
    let mut index: HashMap<String, TokenId> = HashMap::new();
    for c in &alphabet {
        index.insert(c.to_string(), vocab.len() as TokenId);
        vocab.push(c.to_string());
    }

    let mut sorted: Vec<(&String, u64)> = counts.iter().map(|(w, &c)| (w, c)).collect();
    sorted.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let freqs: Vec<i64> = sorted.iter().map(|&(_, c)| c as i64).collect();
    let mut words: Vec<Vec<TokenId>> = sorted
        .iter()
        .map(|(w, _)| w.chars().map(|c| index[&c.to_string()]).collect())
        .collect();

    let mut pair_counts: HashMap<(TokenId, TokenId), i64> = HashMap::new();
    let mut where_: HashMap<(TokenId, TokenId), HashSet<usize>> = HashMap::new();
    for (i, w) in words.iter().enumerate() {
        for p in pairs_of(w) {
            *pair_counts.entry(p).or_insert(0) += freqs[i];
            where_.entry(p).or_default().insert(i);
        }
    }
    let mut heap: BinaryHeap<(i64, Reverse<TokenId>, Reverse<TokenId>)> = pair_counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&(l, r), &c)| (c, Reverse(l), Reverse(r)))
        .collect();

    let target_merges = config.vocab_size - base_count - special_count;
    let mut merges = Vec::with_capacity(target_merges);
    while merges.len() < target_merges {
        let Some((count, Reverse(l), Reverse(r))) = heap.pop() else {
            break;
        };
        if pair_counts.get(&(l, r)).copied() != Some(count) || count <= 0 {
            continue;
        }
        let merged = format!("{}{}", vocab[l as usize], vocab[r as usize]);
        let new_id = match index.get(&merged) {
            Some(&id) => id,
            None => {
                let id = vocab.len() as TokenId;
                index.insert(merged.clone(), id);
                vocab.push(merged);
                id
            }
        };
        merges.push((l, r));

        let mut affected: Vec<usize> = where_
            .remove(&(l, r))
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut touched: HashSet<(TokenId, TokenId)> = HashSet::new();
        for wi in affected {
            let before: Vec<(TokenId, TokenId)> = pairs_of(&words[wi]).collect();
            if !merge_in_place(&mut words[wi], (l, r), new_id) {
                continue;
            }
            let f = freqs[wi];
            for p in before {
                *pair_counts.get_mut(&p).expect("counted pair") -= f;
                touched.insert(p);
            }
            for p in pairs_of(&words[wi]) {
                *pair_counts.entry(p).or_insert(0) += f;
                where_.entry(p).or_default().insert(wi);
                touched.insert(p);
            }
        }
        pair_counts.remove(&(l, r));
        touched.remove(&(l, r));
        let mut touched: Vec<_> = touched.into_iter().collect();
        touched.sort_unstable();
        for p in touched {
            match pair_counts.get(&p).copied() {
                Some(c) if c > 0 => heap.push((c, Reverse(p.0), Reverse(p.1))),
                Some(_) => {
                    pair_counts.remove(&p);
                }
                None => {}
            }
        }
    }
    if merges.len() < target_merges {
        log::warn!(
            "corpus exhausted after {} of {} merges (vocab target {})",
            merges.len(),
            target_merges,
            config.vocab_size
        );
    }
    Ok(TokenizerModel::assemble(
        vocab,
        special_count,
        base_count,
        merges,
        config.vocab_size,
    ))
}

/// One piece of a segmented word. `id` is `None` for fallback pieces made
/// of a codepoint the model never saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: Option<TokenId>,
    pub text: String,
}

impl TokenizerModel {
    fn assemble(
        vocab: Vec<String>,
        special_count: usize,
        base_count: usize,
        merges: Vec<(TokenId, TokenId)>,
        vocab_size: usize,
    ) -> Self {
        let index: HashMap<String, TokenId> = vocab
            .iter()
            .enumerate()
            .skip(special_count)
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(rank, &(l, r))| {
                let merged = format!("{}{}", vocab[l as usize], vocab[r as usize]);
                ((l, r), (rank, index[&merged]))
            })
            .collect();
        Self {
            vocab,
            special_count,
            base_count,
            merges,
            vocab_size,
            index,
            ranks,
        }
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Tokens other than special tokens.
    pub fn regular_tokens(&self) -> &[String] {
        &self.vocab[self.special_count..]
    }

    pub fn special_tokens(&self) -> &[String] {
        &self.vocab[..self.special_count]
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    /// Merges as token strings.
    pub fn merge_strings(&self) -> Vec<(String, String)> {
        self.merges
            .iter()
            .map(|&(l, r)| (self.vocab[l as usize].clone(), self.vocab[r as usize].clone()))
            .collect()
    }

    pub fn base_count(&self) -> usize {
        self.base_count
    }

    pub fn target_vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Segments one word by repeatedly merging its lowest-ranked pair.
    pub fn segment_word(&self, word: &str) -> Vec<Token> {
        let mut symbols: Vec<std::result::Result<TokenId, char>> = word
            .chars()
            .map(|c| {
                let mut buf = [0u8; 4];
                self.index.get(&*c.encode_utf8(&mut buf)).copied().ok_or(c)
            })
            .collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| match (w[0], w[1]) {
                    (Ok(l), Ok(r)) => self.ranks.get(&(l, r)).map(|&(rank, id)| (rank, l, r, id)),
                    _ => None,
                })
                .min();
            let Some((_, l, r, id)) = best else { break };
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == Ok(l) && symbols[i + 1] == Ok(r) {
                    out.push(Ok(id));
                    i += 2;
                } else {
                    out.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
            .into_iter()
            .map(|s| match s {
                Ok(id) => Token {
                    id: Some(id),
                    text: self.vocab[id as usize].clone(),
                },
                Err(c) => Token {
                    id: None,
                    text: c.to_string(),
                },
            })
            .collect()
    }

    /// Segments running text into one token list per word.
    pub fn segment(&self, text: &str, delimiters: &Delimiters) -> Vec<Vec<Token>> {
        split_words_with(text, delimiters)
            .into_iter()
            .map(|ws| self.segment_word(ws.word))
            .collect()
    }

    /// Tokenizes text line by line into the exchange format's structure.
    pub fn tokenize_lines(&self, text: &str, delimiters: &Delimiters) -> TokenizedCorpus {
        let lines: Vec<&str> = text.lines().collect();
        let lines = lines
            .par_iter()
            .map(|line| {
                self.segment(line, delimiters)
                    .into_iter()
                    .map(|toks| toks.into_iter().map(|t| t.text).collect())
                    .collect()
            })
            .collect();
        TokenizedCorpus { lines }
    }

    fn body(&self) -> String {
        let mut out = String::new();
        out.push_str("[vocab]\n");
        for (i, t) in self.vocab.iter().enumerate() {
            let _ = writeln!(out, "{i}\t{}", hex::encode(t.as_bytes()));
        }
        out.push_str("[merges]\n");
        for &(l, r) in &self.merges {
            let _ = writeln!(out, "{l}\t{r}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let body = self.body();
        let mut out = String::new();
        let _ = writeln!(out, "#splinter-bpe\t{MODEL_VERSION}");
        let _ = writeln!(out, "#vocab_size\t{}", self.vocab_size);
        let _ = writeln!(out, "#specials\t{}", self.special_count);
        let _ = writeln!(out, "#base\t{}", self.base_count);
        let _ = writeln!(
            out,
            "#checksum\t{}",
            hex::encode(&Sha256::digest(body.as_bytes())[..8])
        );
        out.push_str(&body);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |r: String| Error::format("tokenizer model", r);
        let Some(vocab_at) = text.find("[vocab]\n") else {
            return Err(err("missing [vocab] section".into()));
        };
        let (head, body) = text.split_at(vocab_at);
        let mut lines = head.lines();
        if lines.next() != Some(&*format!("#splinter-bpe\t{MODEL_VERSION}")) {
            return Err(err("bad header".into()));
        }
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for l in lines {
            let (k, v) = l
                .strip_prefix('#')
                .and_then(|kv| kv.split_once('\t'))
                .ok_or_else(|| err(format!("bad header line {l:?}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| -> Result<usize> {
            fields
                .get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(format!("missing or bad {k}")))
        };
        let sum = hex::encode(&Sha256::digest(body.as_bytes())[..8]);
        if fields.get("checksum") != Some(&sum.as_str()) {
            return Err(err("checksum mismatch".into()));
        }
        let (vocab_size, special_count, base_count) = (get("vocab_size")?, get("specials")?, get("base")?);

        let mut vocab = Vec::new();
        let mut merges = Vec::new();
        let mut in_merges = false;
        for line in body.lines().skip(1) {
            if line == "[merges]" {
                in_merges = true;
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| err(format!("bad line {line:?}")))?;
            if in_merges {
                let l: TokenId = a.parse().map_err(|_| err(format!("bad merge {line:?}")))?;
                let r: TokenId = b.parse().map_err(|_| err(format!("bad merge {line:?}")))?;
                if l as usize >= vocab.len() || r as usize >= vocab.len() {
                    return Err(err(format!("merge refers to unknown id: {line:?}")));
                }
                merges.push((l, r));
            } else {
                let id: usize = a.parse().map_err(|_| err(format!("bad id {line:?}")))?;
                if id != vocab.len() {
                    return Err(err("vocabulary ids are not dense".into()));
                }
                let bytes = hex::decode(b).map_err(|_| err(format!("bad hex {line:?}")))?;
                vocab.push(String::from_utf8(bytes).map_err(|_| err(format!("bad utf-8 {line:?}")))?);
            }
        }
        if special_count + base_count > vocab.len() {
            return Err(err("vocabulary shorter than declared base".into()));
        }
        let known: HashSet<&str> = vocab[special_count..].iter().map(String::as_str).collect();
        if known.len() != vocab.len() - special_count {
            return Err(err("duplicate token".into()));
        }
        for &(l, r) in &merges {
            let merged = format!("{}{}", vocab[l as usize], vocab[r as usize]);
            if !known.contains(merged.as_str()) {
                return Err(err(format!("merge output {merged:?} not in vocabulary")));
            }
        }
        Ok(Self::assemble(
            vocab,
            special_count,
            base_count,
            merges,
            vocab_size,
        ))
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

const MODEL_VERSION: u32 = 1;

/// Tokenized text with line and word boundaries kept: line → word → tokens.
///
/// Exchange format: one text line per input line; words separated by TAB,
/// tokens within a word by a single space. Both are word delimiters, so
/// neither can occur inside a token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub lines: Vec<Vec<Vec<String>>>,
}

impl TokenizedCorpus {
    pub fn word_count(&self) -> usize {
        self.lines.iter().map(Vec::len).sum()
    }

    pub fn token_count(&self) -> usize {
        self.lines.iter().flatten().map(Vec::len).sum()
    }

    /// Tokens of each line, flattened across words.
    pub fn token_lines(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.lines
            .iter()
            .map(|l| l.iter().flatten().map(String::as_str).collect())
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        for line in &self.lines {
            let words: Vec<String> = line.iter().map(|toks| toks.join(" ")).collect();
            writeln!(w, "{}", words.join("\t"))?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> std::io::Result<Self> {
        let mut lines = Vec::new();
        for line in r.lines() {
            let line = line?;
            let words = if line.is_empty() {
                Vec::new()
            } else {
                line.split('\t')
                    .map(|w| {
                        w.split(' ')
                            .filter(|t| !t.is_empty())
                            .map(str::to_owned)
                            .collect()
                    })
                    .collect()
            };
            lines.push(words);
        }
        Ok(Self { lines })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f)).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(model: &TokenizerModel, word: &str) -> Vec<String> {
        model.segment_word(word).into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn first_merge_is_most_frequent_pair() {
        // a, b, c: base 3; one merge.
        let model = train_bpe("ab ab ab ac", &BpeConfig::new(4)).unwrap();
        assert_eq!(model.merge_strings(), vec![("a".into(), "b".into())]);
        assert_eq!(model.vocab(), &["a", "b", "c", "ab"]);
    }

    #[test]
    fn vocab_too_small() {
        assert!(matches!(
            train_bpe("ab ab ab ac", &BpeConfig::new(3)),
            Err(Error::VocabTooSmall {
                requested: 3,
                base: 3
            })
        ));
    }

    #[test]
    fn segmentation_replays_merges() {
        let model = train_bpe("ab ab ab ac", &BpeConfig::new(4)).unwrap();
        assert_eq!(strings(&model, "ab"), ["ab"]);
        assert_eq!(strings(&model, "ac"), ["a", "c"]);
        assert_eq!(strings(&model, "abab"), ["ab", "ab"]);
        assert_eq!(strings(&model, "aab"), ["a", "ab"]);
    }

    #[test]
    fn unseen_codepoints_fall_back() {
        let model = train_bpe("ab ab ab ac", &BpeConfig::new(4)).unwrap();
        let toks = model.segment_word("xyz");
        assert_eq!(toks.len(), 3);
        assert!(toks.iter().all(|t| t.id.is_none()));
        let toks = model.segment_word("xab");
        assert_eq!(toks[0].id, None);
        assert_eq!(toks[1].text, "ab");
    }

    #[test]
    fn ties_break_by_token_id() {
        // (a,b) and (c,d) both occur twice; a < c.
        let model = train_bpe("ab cd ab cd", &BpeConfig::new(5)).unwrap();
        assert_eq!(model.merge_strings()[0], ("a".into(), "b".into()));
        // (b,a) vs (a,b) in "aba": both once; a has the lower id.
        let model = train_bpe("aba", &BpeConfig::new(3)).unwrap();
        assert_eq!(model.merge_strings()[0], ("a".into(), "b".into()));
    }

    #[test]
    fn overlapping_pairs() {
        let model = train_bpe("aaa aaa", &BpeConfig::new(3)).unwrap();
        assert_eq!(
            model.merge_strings(),
            vec![("a".into(), "a".into()), ("aa".into(), "a".into())]
        );
        assert_eq!(strings(&model, "aaa"), ["aaa"]);
        assert_eq!(strings(&model, "aaaa"), ["aa", "aa"]);
    }

    #[test]
    fn exhausted_corpus_stops() {
        let model = train_bpe("ab", &BpeConfig::new(100)).unwrap();
        assert_eq!(model.merges().len(), 1);
    }

    #[test]
    fn model_round_trip_and_corruption() {
        let mut cfg = BpeConfig::new(14);
        cfg.special_tokens = vec!["<unk>".into()];
        let model = train_bpe("hello world hello there", &cfg).unwrap();
        assert_eq!(model.merges().len(), 14 - 1 - model.base_count());
        let text = model.to_text();
        assert_eq!(TokenizerModel::from_text(&text).unwrap(), model);
        let broken = text.replacen("[merges]\n", "[merges]\n0\t999\n", 1);
        assert!(matches!(
            TokenizerModel::from_text(&broken),
            Err(Error::Format { .. })
        ));
        assert!(TokenizerModel::from_text("garbage").is_err());
    }

    #[test]
    fn special_tokens_do_not_segment() {
        let mut cfg = BpeConfig::new(7);
        cfg.special_tokens = vec!["<s>".into()];
        let model = train_bpe("<s> ab", &cfg).unwrap();
        assert_eq!(model.special_tokens(), ["<s>"]);
        let toks = model.segment_word("<s>");
        assert!(toks.iter().all(|t| t.id != Some(0)));
    }

    #[test]
    fn exchange_format_round_trip() {
        let corpus = TokenizedCorpus {
            lines: vec![
                vec![vec!["ab".into(), "c".into()], vec!["d".into()]],
                vec![],
                vec![vec!["x".into()]],
            ],
        };
        let mut buf = Vec::new();
        corpus.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "ab c\td\n\nx\n");
        assert_eq!(TokenizedCorpus::read_from(&buf[..]).unwrap(), corpus);
    }
}
