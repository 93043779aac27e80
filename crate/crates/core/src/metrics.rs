//! Intrinsic tokenizer metrics: Rényi efficiency, fertility, distinct
//! neighbors, cognitive plausibility and vocabulary intersection.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::splinterer::CompositeAlphabet;
use crate::tokenizer::{TokenizedCorpus, TokenizerModel};

/// Token type → occurrence count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenDistribution {
    counts: HashMap<String, u64>,
    total: u64,
}

impl TokenDistribution {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut d = Self::default();
        for t in tokens {
            d.add(t, 1);
        }
        d
    }

    pub fn from_corpus(corpus: &TokenizedCorpus) -> Self {
        Self::from_tokens(corpus.lines.iter().flatten().flatten().map(String::as_str))
    }

    pub fn add(&mut self, token: &str, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(token.to_owned()).or_insert(0) += n;
        self.total += n;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn types(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.values().copied()
    }
}

/// Default Rényi order.
pub const DEFAULT_ALPHA: f64 = 2.5;

/// Rényi entropy of order `alpha` over the observed types, divided by the
/// log of the number of observed types. `alpha == 1` uses Shannon entropy.
pub fn renyi_efficiency(dist: &TokenDistribution, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InsufficientData(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if dist.total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let v = dist.types();
    if v == 1 {
        return Err(Error::DegenerateDistribution);
    }
    // Sorting makes the floating-point sum independent of hash order.
    let mut counts: Vec<u64> = dist.counts().collect();
    counts.sort_unstable();
    let total = dist.total as f64;
    let entropy = if (alpha - 1.0).abs() < 1e-12 {
        -counts
            .iter()
            .map(|&c| {
                let p = c as f64 / total;
                p * p.ln()
            })
            .sum::<f64>()
    } else {
        let s: f64 = counts.iter().map(|&c| (c as f64 / total).powf(alpha)).sum();
        s.ln() / (1.0 - alpha)
    };
    Ok(entropy / (v as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fertility {
    pub tokens_per_word: f64,
    /// Percentage of words split into four or more tokens.
    pub pct_4plus: f64,
    /// Percentage of tokens that are a single codepoint.
    pub pct_single_char: f64,
}

pub fn fertility_stats(corpus: &TokenizedCorpus) -> Result<Fertility> {
    let mut words = 0u64;
    let mut tokens = 0u64;
    let mut four_plus = 0u64;
    let mut single = 0u64;
    for word in corpus.lines.iter().flatten() {
        words += 1;
        tokens += word.len() as u64;
        if word.len() >= 4 {
            four_plus += 1;
        }
        single += word.iter().filter(|t| t.chars().count() == 1).count() as u64;
    }
    if words == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(Fertility {
        tokens_per_word: tokens as f64 / words as f64,
        pct_4plus: 100.0 * four_plus as f64 / words as f64,
        pct_single_char: if tokens == 0 {
            0.0
        } else {
            100.0 * single as f64 / tokens as f64
        },
    })
}

/// Which token types the neighbor average runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborAveraging {
    /// Types that occur in the stream.
    #[default]
    Observed,
    /// The whole vocabulary of the given size; unobserved types count as 0.
    Vocabulary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStats {
    pub per_type: BTreeMap<String, usize>,
    pub average: f64,
    /// Distinct-neighbor counts of the top types, descending.
    pub curve: Vec<usize>,
}

/// Counts, per token type, the distinct types seen within `window`
/// positions on either side of any occurrence, without crossing lines.
pub fn distinct_neighbors<'a, I, L>(
    lines: I,
    window: usize,
    top_n: usize,
    averaging: NeighborAveraging,
) -> NeighborStats
where
    I: IntoIterator<Item = L>,
    L: AsRef<[&'a str]>,
{
    let mut ids: HashMap<&'a str, u32> = HashMap::new();
    let mut names: Vec<&'a str> = Vec::new();
    let mut seen: Vec<HashSet<u32>> = Vec::new();
    let mut buf: Vec<u32> = Vec::new();
    for line in lines {
        buf.clear();
        for &t in line.as_ref() {
            let id = *ids.entry(t).or_insert_with(|| {
                names.push(t);
                seen.push(HashSet::new());
                (names.len() - 1) as u32
            });
            buf.push(id);
        }
        for (i, &a) in buf.iter().enumerate() {
            let hi = (i + window + 1).min(buf.len());
            for &b in &buf[i + 1..hi] {
                seen[a as usize].insert(b);
                seen[b as usize].insert(a);
            }
        }
    }
    let per_type: BTreeMap<String, usize> = names
        .iter()
        .zip(&seen)
        .map(|(n, s)| (n.to_string(), s.len()))
        .collect();
    let sum: usize = per_type.values().sum();
    let denom = match averaging {
        NeighborAveraging::Observed => per_type.len(),
        NeighborAveraging::Vocabulary(v) => v.max(per_type.len()),
    };
    let average = if denom == 0 {
        0.0
    } else {
        sum as f64 / denom as f64
    };
    let mut curve: Vec<usize> = per_type.values().copied().collect();
    curve.sort_unstable_by(|a, b| b.cmp(a));
    curve.truncate(top_n);
    NeighborStats {
        per_type,
        average,
        curve,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lexicality {
    Word,
    Nonword,
}

/// One stimulus of a lexical decision dataset.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LexicalDecisionRecord {
    pub stimulus: String,
    pub lexicality: Lexicality,
    pub accuracy: f64,
    #[serde(rename = "rt")]
    pub response_time: f64,
}

impl LexicalDecisionRecord {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(Error::InsufficientData(format!(
                "accuracy {} of {:?} outside [0,1]",
                self.accuracy, self.stimulus
            )));
        }
        if self.response_time.is_nan() || self.response_time <= 0.0 {
            return Err(Error::InsufficientData(format!(
                "response time {} of {:?} must be positive",
                self.response_time, self.stimulus
            )));
        }
        Ok(())
    }
}

/// Reads `stimulus,lexicality,accuracy,rt` CSV.
pub fn load_lexical_decisions(path: impl AsRef<Path>) -> Result<Vec<LexicalDecisionRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_lexical_decisions(file)
}

pub fn read_lexical_decisions(r: impl std::io::Read) -> Result<Vec<LexicalDecisionRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for rec in reader.deserialize() {
        let rec: LexicalDecisionRecord =
            rec.map_err(|e| Error::format("lexical decision csv", e.to_string()))?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Accuracy,
    ResponseTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupCorrelation {
    pub lexicality: Lexicality,
    pub target: Target,
    pub records: usize,
    /// `None` when predictor or target had zero variance.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plausibility {
    /// Mean of `|r|` over the four setups (zero-variance setups count 0).
    pub score: f64,
    pub setups: Vec<SetupCorrelation>,
}

impl Plausibility {
    pub fn zero_variance(&self) -> bool {
        self.setups.iter().any(|s| s.r.is_none())
    }
}

/// Correlates a per-stimulus difficulty predictor (typically its token
/// count) with accuracy and response time, separately for words and
/// nonwords.
pub fn cognitive_plausibility<F>(records: &[LexicalDecisionRecord], mut predictor: F) -> Result<Plausibility>
where
    F: FnMut(&str) -> f64,
{
    let mut setups = Vec::with_capacity(4);
    for lex in [Lexicality::Word, Lexicality::Nonword] {
        let group: Vec<&LexicalDecisionRecord> = records.iter().filter(|r| r.lexicality == lex).collect();
        if group.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{} {lex:?} records; at least 3 needed",
                group.len()
            )));
        }
        let x: Vec<f64> = group.iter().map(|r| predictor(&r.stimulus)).collect();
        for target in [Target::Accuracy, Target::ResponseTime] {
            let y: Vec<f64> = group
                .iter()
                .map(|r| match target {
                    Target::Accuracy => r.accuracy,
                    Target::ResponseTime => r.response_time,
                })
                .collect();
            setups.push(SetupCorrelation {
                lexicality: lex,
                target,
                records: group.len(),
                r: pearson(&x, &y),
            });
        }
    }
    let score = setups.iter().map(|s| s.r.map_or(0.0, f64::abs)).sum::<f64>() / setups.len() as f64;
    Ok(Plausibility { score, setups })
}

/// Rewrites a splintered-vocabulary token as plain text: base codepoints
/// form the core and each composite's letter is inserted in order, with
/// out-of-range positions clamped to the nearest end.
pub fn linearize_token(token: &str, alphabet: &CompositeAlphabet) -> Result<String> {
    let mut core: Vec<char> = Vec::new();
    let mut inserts = Vec::new();
    for c in token.chars() {
        if c == alphabet.escape() {
            continue;
        }
        if alphabet.is_reserved(c) {
            inserts.push(alphabet.reduction_of(c)?);
        } else {
            core.push(c);
        }
    }
    for r in inserts {
        let len = core.len() as i64;
        let p = if r.index >= 0 {
            r.index as i64
        } else {
            r.index as i64 + len + 1
        };
        core.insert(p.clamp(0, len) as usize, r.letter);
    }
    Ok(core.into_iter().collect())
}

/// Percentage of the splintered vocabulary whose linearized form is in
/// the vanilla vocabulary. Special tokens are ignored on both sides.
pub fn vocab_intersection(
    vanilla: &TokenizerModel,
    splintered: &TokenizerModel,
    alphabet: &CompositeAlphabet,
) -> Result<f64> {
    let tokens = splintered.regular_tokens();
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut hits = 0usize;
    for t in tokens {
        if vanilla.contains(&linearize_token(t, alphabet)?) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / tokens.len() as f64)
}

/// Where a report's numbers came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    pub corpus: String,
    pub tokenizer: String,
    pub config_hash: String,
}

/// One row of the comparison tables.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub provenance: Provenance,
    pub arm: String,
    pub vocab_size: usize,
    pub cognitive_plausibility: Option<f64>,
    pub renyi_efficiency: Option<f64>,
    pub tokens_per_word: f64,
    pub pct_words_4plus_tokens: f64,
    pub pct_single_char_tokens: f64,
    pub avg_distinct_neighbors: f64,
    pub neighbor_curve: Vec<usize>,
    pub vocab_intersection_pct: Option<f64>,
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.prec$}"))
}

impl MetricsReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let p = &self.provenance;
        let _ = writeln!(out, "corpus={}", p.corpus);
        let _ = writeln!(out, "tokenizer={}", p.tokenizer);
        let _ = writeln!(out, "config_hash={}", p.config_hash);
        let _ = writeln!(out, "arm={}", self.arm);
        let _ = writeln!(out, "vocab_size={}", self.vocab_size);
        let _ = writeln!(
            out,
            "cognitive_plausibility={}",
            opt(self.cognitive_plausibility, 6)
        );
        let _ = writeln!(out, "renyi_efficiency={}", opt(self.renyi_efficiency, 6));
        let _ = writeln!(out, "tokens_per_word={:.6}", self.tokens_per_word);
        let _ = writeln!(out, "pct_words_4plus_tokens={:.6}", self.pct_words_4plus_tokens);
        let _ = writeln!(out, "pct_single_char_tokens={:.6}", self.pct_single_char_tokens);
        let _ = writeln!(out, "avg_distinct_neighbors={:.6}", self.avg_distinct_neighbors);
        let _ = writeln!(
            out,
            "vocab_intersection_pct={}",
            opt(self.vocab_intersection_pct, 6)
        );
        out
    }

    pub const TABLE_HEADER: &'static str = "Vocab\tType\tCognitive plausibility\tRényi efficiency\tTokens per word\t4+ token words\t1-char tokens\tDistinct Neighbors\tVocab intersection";

    pub fn table_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:.3}\t{:.2}%\t{:.2}%\t{:.0}\t{}",
            self.vocab_size,
            self.arm,
            opt(self.cognitive_plausibility, 3),
            opt(self.renyi_efficiency, 3),
            self.tokens_per_word,
            self.pct_words_4plus_tokens,
            self.pct_single_char_tokens,
            self.avg_distinct_neighbors,
            self.vocab_intersection_pct
                .map_or_else(|| "n/a".to_owned(), |x| format!("{x:.2}%")),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::LanguageProfile;
    use crate::reduction::Reduction;
    use crate::splinterer::CompositeBlock;

    fn corpus(words: &[&[&str]]) -> TokenizedCorpus {
        TokenizedCorpus {
            lines: vec![words
                .iter()
                .map(|w| w.iter().map(|s| s.to_string()).collect())
                .collect()],
        }
    }

    #[test]
    fn uniform_is_fully_efficient() {
        let names: Vec<String> = (0..16).map(|i| format!("t{i}")).collect();
        let d = TokenDistribution::from_tokens(names.iter().map(String::as_str));
        for alpha in [0.5, 1.0, 2.5, 3.0] {
            assert!((renyi_efficiency(&d, alpha).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn skew_is_penalized() {
        let mut even = TokenDistribution::default();
        even.add("a", 50);
        even.add("b", 50);
        let mut skew = TokenDistribution::default();
        skew.add("a", 99);
        skew.add("b", 1);
        assert!(renyi_efficiency(&even, 2.5).unwrap() > renyi_efficiency(&skew, 2.5).unwrap());
    }

    #[test]
    fn single_type_is_degenerate() {
        let d = TokenDistribution::from_tokens(["a", "a"]);
        assert!(matches!(
            renyi_efficiency(&d, 2.5),
            Err(Error::DegenerateDistribution)
        ));
    }

    #[test]
    fn five_token_hand_distribution() {
        // counts 5,3,1,1,2 of 12; alpha 2.5
        let mut d = TokenDistribution::default();
        for (t, c) in [("a", 5), ("b", 3), ("c", 1), ("d", 1), ("e", 2)] {
            d.add(t, c);
        }
        let p = [5.0 / 12.0, 3.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 2.0 / 12.0];
        let s: f64 = p.iter().map(|x: &f64| x.powf(2.5)).sum();
        let expected = (s.ln() / (1.0 - 2.5)) / 5f64.ln();
        assert!((renyi_efficiency(&d, 2.5).unwrap() - expected).abs() < 1e-12);
        // Frozen value, computed independently in Python: 0.76256834...
        assert!((expected - 0.762_568_343_038_778).abs() < 1e-12, "{expected}");
    }

    #[test]
    fn fertility_examples() {
        let c = corpus(&[&["ab"], &["cd"]]);
        assert_eq!(
            fertility_stats(&c).unwrap(),
            Fertility {
                tokens_per_word: 1.0,
                pct_4plus: 0.0,
                pct_single_char: 0.0
            }
        );
        let c = corpus(&[
            &["a"],
            &["a", "b"],
            &["a", "b", "c", "d"],
            &["a", "b", "c", "d", "e"],
        ]);
        let f = fertility_stats(&c).unwrap();
        assert_eq!(f.tokens_per_word, 3.0);
        assert_eq!(f.pct_4plus, 50.0);
        let c = corpus(&[&["w", "o", "r", "d", "s"]]);
        let f = fertility_stats(&c).unwrap();
        assert_eq!(
            (f.tokens_per_word, f.pct_4plus, f.pct_single_char),
            (5.0, 100.0, 100.0)
        );
        assert!(matches!(
            fertility_stats(&TokenizedCorpus::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn composite_counts_as_one_char() {
        let c = corpus(&[&["\u{E001}", "ab"]]);
        assert_eq!(fertility_stats(&c).unwrap().pct_single_char, 50.0);
    }

    #[test]
    fn neighbors_abab() {
        let s = distinct_neighbors([["a", "b", "a", "b"]], 2, 200, NeighborAveraging::Observed);
        assert_eq!(s.per_type["a"], 2);
        assert_eq!(s.per_type["b"], 2);
        assert_eq!(s.average, 2.0);
        let s = distinct_neighbors([vec!["x"]], 2, 200, NeighborAveraging::Observed);
        assert_eq!(s.per_type["x"], 0);
    }

    #[test]
    fn neighbors_do_not_cross_lines() {
        let s = distinct_neighbors(
            [vec!["a", "b"], vec!["c"]],
            2,
            200,
            NeighborAveraging::Vocabulary(6),
        );
        assert_eq!(s.per_type["c"], 0);
        assert_eq!(s.per_type["a"], 1);
        assert!((s.average - 2.0 / 6.0).abs() < 1e-12);
        assert_eq!(s.curve, vec![1, 1, 0]);
    }

    #[test]
    fn plausibility_edge_cases() {
        let recs: Vec<LexicalDecisionRecord> = (0..6)
            .map(|i| LexicalDecisionRecord {
                stimulus: format!("s{i}"),
                lexicality: if i % 2 == 0 {
                    Lexicality::Word
                } else {
                    Lexicality::Nonword
                },
                accuracy: 0.5 + 0.05 * i as f64,
                response_time: 500.0 + 10.0 * (i * i) as f64,
            })
            .collect();
        let p = cognitive_plausibility(&recs, |_| 2.0).unwrap();
        assert_eq!(p.score, 0.0);
        assert!(p.zero_variance());

        let rt: HashMap<String, f64> = recs
            .iter()
            .map(|r| (r.stimulus.clone(), r.response_time))
            .collect();
        let p = cognitive_plausibility(&recs, |s| rt[s]).unwrap();
        for s in &p.setups {
            if s.target == Target::ResponseTime {
                assert!((s.r.unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(matches!(
            cognitive_plausibility(&recs[..4], |_| 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn csv_parsing() {
        let csv = "stimulus,lexicality,accuracy,rt\nשלום,word,0.9,620\nבלחט,nonword,0.8,710.5\n";
        let recs = read_lexical_decisions(csv.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].lexicality, Lexicality::Nonword);
        assert_eq!(recs[1].response_time, 710.5);
        let bad = "stimulus,lexicality,accuracy,rt\nx,word,1.5,600\n";
        assert!(read_lexical_decisions(bad.as_bytes()).is_err());
    }

    #[test]
    fn permissive_linearization() {
        let he = LanguageProfile::hebrew();
        let mut a = CompositeAlphabet::new(&he, CompositeBlock::default()).unwrap();
        let l = a.insert(Reduction::new(0, 'ל')).unwrap();
        let w = a.insert(Reduction::new(3, 'ו')).unwrap();
        let token: String = [l, w].into_iter().collect();
        assert_eq!(linearize_token(&token, &a).unwrap(), "לו");
        let token: String = ['ע', 'ב', 'ד', l, w].into_iter().collect();
        assert_eq!(linearize_token(&token, &a).unwrap(), "לעבוד");
        assert!(matches!(
            linearize_token("\u{E0AA}", &a),
            Err(Error::UnknownComposite(0xE0AA))
        ));
    }

    #[test]
    fn report_formats() {
        let r = MetricsReport {
            provenance: Provenance {
                corpus: "c".into(),
                tokenizer: "t".into(),
                config_hash: "h".into(),
            },
            arm: "vanilla".into(),
            vocab_size: 800,
            cognitive_plausibility: None,
            renyi_efficiency: Some(0.5),
            tokens_per_word: 2.0,
            pct_words_4plus_tokens: 10.0,
            pct_single_char_tokens: 20.0,
            avg_distinct_neighbors: 3.0,
            neighbor_curve: vec![3],
            vocab_intersection_pct: Some(50.0),
        };
        let kv = r.to_key_values();
        assert!(kv.contains("cognitive_plausibility=n/a\n"));
        assert!(kv.contains("tokens_per_word=2.000000\n"));
        assert_eq!(
            r.table_row().split('\t').count(),
            MetricsReport::TABLE_HEADER.split('\t').count()
        );
    }
}
