use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use log::{info, warn};
use splinter::corpus::frequency_table_from_files;
use splinter::metrics::{
    cognitive_plausibility, distinct_neighbors, fertility_stats, load_lexical_decisions, renyi_efficiency,
    vocab_intersection, MetricsReport, Provenance, TokenDistribution,
};
use splinter::reduction::train_reduction_map;
use splinter::splinterer::{splinter_text, unsplinter_text};
use splinter::tokenizer::train_bpe;
use splinter::{
    BeamConfig, BpeConfig, CompositeAlphabet, Error, IndexConvention, LanguageProfile, ReductionMap,
    TokenizedCorpus, TokenizerModel, WordFrequencyTable,
};

use crate::config::{ConfigError, PipelineConfig};

pub const ARMS: [&str; 2] = ["vanilla", "splinter"];

pub struct Ctx {
    pub config: PipelineConfig,
    pub profile: LanguageProfile,
    pub hash: String,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.to_owned(),
            source,
        }
        .into()
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|source| {
        Error::Io {
            path: path.to_owned(),
            source,
        }
        .into()
    })
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    Ok(())
}

/// Refuses to overwrite an input.
fn distinct_output(input: &Path, output: &Path) -> Result<()> {
    let same = match (input.canonicalize(), output.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(
            ConfigError::Invalid(format!("output {} would overwrite the input", output.display())).into(),
        );
    }
    Ok(())
}

impl Ctx {
    fn load_map(&self, path: &Path) -> Result<ReductionMap> {
        let map = ReductionMap::load(path)?;
        if let Some(m) = map.check_profile(&self.profile) {
            return Err(ConfigError::Invalid(format!("{}: {m}", path.display())).into());
        }
        Ok(map)
    }

    fn load_alphabet(&self, path: &Path) -> Result<CompositeAlphabet> {
        let alphabet = CompositeAlphabet::load(path)?;
        if alphabet.language() != self.profile.name {
            return Err(ConfigError::Invalid(format!(
                "{}: alphabet is for {}, profile is {}",
                path.display(),
                alphabet.language(),
                self.profile.name
            ))
            .into());
        }
        Ok(alphabet)
    }

    pub fn build_freq(&self, inputs: &[PathBuf], output: &Path) -> Result<WordFrequencyTable> {
        if inputs.is_empty() {
            return Err(ConfigError::Invalid("no corpus files given".into()).into());
        }
        let table = frequency_table_from_files(inputs, &self.profile)?;
        ensure_parent(output)?;
        table.save(output, &self.profile.name)?;
        info!(
            "frequency table: {} words, {} tokens -> {}",
            table.len(),
            table.total(),
            output.display()
        );
        Ok(table)
    }

    pub fn train_map(&self, freq: &Path, output: &Path, convention: IndexConvention) -> Result<ReductionMap> {
        let table = WordFrequencyTable::load(freq)?;
        if table.profile_fingerprint() != self.profile.fingerprint() {
            return Err(ConfigError::Invalid(format!(
                "{} was built with profile {}, active profile is {}",
                freq.display(),
                table.profile_fingerprint(),
                self.profile.fingerprint()
            ))
            .into());
        }
        let map = train_reduction_map(&table, &self.profile, convention)?;
        ensure_parent(output)?;
        map.save(output)?;
        info!(
            "reduction map: {} entries over {} lengths -> {}",
            map.len(),
            map.lengths().count(),
            output.display()
        );
        Ok(map)
    }

    pub fn export_alphabet(
        &self,
        map: &Path,
        output: &Path,
        block: splinter::CompositeBlock,
    ) -> Result<CompositeAlphabet> {
        let map = self.load_map(map)?;
        let alphabet = CompositeAlphabet::from_map(&map, &self.profile, block)?;
        ensure_parent(output)?;
        alphabet.save(output)?;
        info!(
            "alphabet: {} base + {} composites -> {}",
            alphabet.size() - alphabet.composite_count(),
            alphabet.composite_count(),
            output.display()
        );
        Ok(alphabet)
    }

    pub fn splinter(
        &self,
        map: &Path,
        alphabet: &Path,
        input: &Path,
        output: &Path,
        beam: BeamConfig,
    ) -> Result<()> {
        distinct_output(input, output)?;
        let map = self.load_map(map)?;
        let alphabet = self.load_alphabet(alphabet)?;
        let text = read_text(input)?;
        let (out, stats) = splinter_text(&text, &map, &alphabet, &self.profile, beam)?;
        write_text(output, &out)?;
        info!(
            "splintered {} words, escaped {}, passed through {}, early stops {} -> {}",
            stats.splintered,
            stats.escaped,
            stats.passed_through,
            stats.early_stops,
            output.display()
        );
        Ok(())
    }

    pub fn unsplinter(&self, alphabet: &Path, input: &Path, output: &Path) -> Result<()> {
        distinct_output(input, output)?;
        let alphabet = self.load_alphabet(alphabet)?;
        let text = read_text(input)?;
        let out = unsplinter_text(&text, &alphabet, &self.profile)?;
        write_text(output, &out)?;
        info!("unsplintered -> {}", output.display());
        Ok(())
    }

    pub fn train_bpe(
        &self,
        inputs: &[PathBuf],
        output: &Path,
        vocab_size: usize,
        specials: &[String],
    ) -> Result<()> {
        let mut text = String::new();
        for p in inputs {
            text.push_str(&read_text(p)?);
            if !text.ends_with('\n') {
                text.push('\n');
            }
        }
        let model = self.train_model(&text, vocab_size, specials)?;
        ensure_parent(output)?;
        model.save(output)?;
        info!(
            "bpe: {} tokens, {} merges -> {}",
            model.len(),
            model.merges().len(),
            output.display()
        );
        Ok(())
    }

    fn bpe_config(&self, vocab_size: usize, specials: &[String]) -> BpeConfig {
        let mut cfg = BpeConfig::new(vocab_size);
        cfg.special_tokens = specials.to_vec();
        cfg.delimiters = self.profile.delimiters.clone();
        cfg
    }

    fn train_model(&self, text: &str, vocab_size: usize, specials: &[String]) -> Result<TokenizerModel> {
        Ok(train_bpe(text, &self.bpe_config(vocab_size, specials))?)
    }

    pub fn tokenize(&self, model: &Path, input: &Path, output: &Path) -> Result<TokenizedCorpus> {
        distinct_output(input, output)?;
        let model = TokenizerModel::load(model)?;
        let text = read_text(input)?;
        let corpus = model.tokenize_lines(&text, &self.profile.delimiters);
        ensure_parent(output)?;
        corpus.save(output)?;
        info!(
            "tokenized {} words into {} tokens -> {}",
            corpus.word_count(),
            corpus.token_count(),
            output.display()
        );
        Ok(corpus)
    }

    // Config-driven stages.

    fn corpus_files(&self) -> Result<Vec<PathBuf>> {
        let files = self.config.paths.corpus.clone();
        if files.is_empty() {
            return Err(ConfigError::Invalid("paths.corpus is empty".into()).into());
        }
        Ok(files)
    }

    fn splintered_path(&self, name: &str) -> PathBuf {
        self.config.work(&format!("splintered/{name}"))
    }

    fn eval_source(&self) -> Result<PathBuf> {
        match &self.config.paths.eval_corpus {
            Some(p) => Ok(p.clone()),
            None => Ok(self.corpus_files()?[0].clone()),
        }
    }

    pub fn pipeline(&self) -> Result<()> {
        let cfg = &self.config;
        let corpus = self.corpus_files()?;
        self.build_freq(&corpus, &cfg.freq_path())?;
        self.train_map(&cfg.freq_path(), &cfg.map_path(), cfg.convention())?;
        self.export_alphabet(&cfg.map_path(), &cfg.alphabet_path(), cfg.block.block())?;

        let mut raw_inputs = corpus.clone();
        let mut split_inputs = Vec::new();
        for (i, p) in corpus.iter().enumerate() {
            let out = self.splintered_path(&format!("corpus-{i}.txt"));
            self.splinter(&cfg.map_path(), &cfg.alphabet_path(), p, &out, cfg.beam())?;
            split_inputs.push(out);
        }
        let eval = self.eval_source()?;
        let eval_split = self.splintered_path("eval.txt");
        self.splinter(
            &cfg.map_path(),
            &cfg.alphabet_path(),
            &eval,
            &eval_split,
            cfg.beam(),
        )?;

        for &v in &cfg.vocab_sizes {
            for (arm, inputs, eval_text) in [
                ("vanilla", &mut raw_inputs, &eval),
                ("splinter", &mut split_inputs, &eval_split),
            ] {
                let model = cfg.model_path(arm, v);
                match self.train_bpe(inputs, &model, v, &cfg.special_tokens) {
                    Err(e) if matches!(e.downcast_ref::<Error>(), Some(Error::VocabTooSmall { .. })) => {
                        warn!("{arm} vocab {v} skipped: {e}");
                        continue;
                    }
                    r => r?,
                }
                self.tokenize(&model, eval_text, &cfg.tokens_path(arm, v))?;
            }
        }
        self.eval()?;
        self.compare_vocabs()?;
        Ok(())
    }

    /// Evaluation text and its splintered form, with the map and alphabet.
    fn eval_inputs(&self) -> Result<(String, String, ReductionMap, CompositeAlphabet)> {
        let cfg = &self.config;
        let map = self.load_map(&cfg.map_path())?;
        let alphabet = self.load_alphabet(&cfg.alphabet_path())?;
        let text = read_text(&self.eval_source()?)?;
        let (split, _) = splinter_text(&text, &map, &alphabet, &self.profile, cfg.beam())?;
        Ok((text, split, map, alphabet))
    }

    fn available_sizes(&self) -> Vec<usize> {
        self.config
            .vocab_sizes
            .iter()
            .copied()
            .filter(|&v| ARMS.iter().all(|arm| self.config.model_path(arm, v).exists()))
            .collect()
    }

    pub fn eval(&self) -> Result<Vec<MetricsReport>> {
        let cfg = &self.config;
        let (text, split, map, alphabet) = self.eval_inputs()?;
        let lexical = match &cfg.paths.lexical_decisions {
            Some(p) => Some(load_lexical_decisions(p)?),
            None => None,
        };
        let sizes = self.available_sizes();
        if sizes.is_empty() {
            return Err(ConfigError::Invalid(format!(
                "no trained model pairs under {} for vocab sizes {:?}",
                cfg.paths.work_dir.display(),
                cfg.vocab_sizes
            ))
            .into());
        }
        let corpus_name = self.eval_source()?.display().to_string();
        let mut reports = Vec::new();
        for v in sizes {
            let vanilla = TokenizerModel::load(cfg.model_path("vanilla", v))?;
            let splintered = TokenizerModel::load(cfg.model_path("splinter", v))?;
            let intersection = vocab_intersection(&vanilla, &splintered, &alphabet)?;
            for arm in ARMS {
                let (model, arm_text) = if arm == "vanilla" {
                    (&vanilla, &text)
                } else {
                    (&splintered, &split)
                };
                let tokens = model.tokenize_lines(arm_text, &self.profile.delimiters);
                let renyi = match renyi_efficiency(&TokenDistribution::from_corpus(&tokens), cfg.alpha) {
                    Ok(e) => Some(e),
                    Err(Error::DegenerateDistribution) => None,
                    Err(e) => return Err(e.into()),
                };
                let fertility = fertility_stats(&tokens)?;
                let neighbors = distinct_neighbors(
                    tokens.token_lines(),
                    cfg.neighbors.window,
                    cfg.neighbors.top_n,
                    cfg.averaging(model.len()),
                );
                let plausibility = match &lexical {
                    None => None,
                    Some(records) => {
                        let count = |s: &str| -> f64 {
                            let s = if arm == "splinter" {
                                splinter_text(s, &map, &alphabet, &self.profile, cfg.beam())
                                    .map(|(t, _)| t)
                                    .unwrap_or_else(|_| s.to_owned())
                            } else {
                                s.to_owned()
                            };
                            model
                                .segment(&s, &self.profile.delimiters)
                                .iter()
                                .map(Vec::len)
                                .sum::<usize>() as f64
                        };
                        match cognitive_plausibility(records, count) {
                            Ok(p) => {
                                if p.zero_variance() {
                                    warn!(
                                        "{arm} {v}: a plausibility setup has zero variance and counts as 0"
                                    );
                                }
                                Some(p.score)
                            }
                            Err(e) => {
                                warn!("{arm} {v}: cognitive plausibility unavailable: {e}");
                                None
                            }
                        }
                    }
                };
                reports.push(MetricsReport {
                    provenance: Provenance {
                        corpus: corpus_name.clone(),
                        tokenizer: cfg.model_path(arm, v).display().to_string(),
                        config_hash: self.hash.clone(),
                    },
                    arm: arm.to_owned(),
                    vocab_size: v,
                    cognitive_plausibility: plausibility,
                    renyi_efficiency: renyi,
                    tokens_per_word: fertility.tokens_per_word,
                    pct_words_4plus_tokens: fertility.pct_4plus,
                    pct_single_char_tokens: fertility.pct_single_char,
                    avg_distinct_neighbors: neighbors.average,
                    neighbor_curve: neighbors.curve,
                    vocab_intersection_pct: Some(intersection),
                });
            }
        }
        self.write_reports(&reports)?;
        Ok(reports)
    }

    fn write_reports(&self, reports: &[MetricsReport]) -> Result<()> {
        let dir = self.config.reports_dir();
        let mut table = String::new();
        table.push_str(MetricsReport::TABLE_HEADER);
        table.push('\n');
        let mut kv = String::new();
        for r in reports {
            table.push_str(&r.table_row());
            table.push('\n');
            kv.push_str(&r.to_key_values());
            kv.push('\n');
            let mut curve = String::from("rank\tdistinct_neighbors\n");
            for (i, c) in r.neighbor_curve.iter().enumerate() {
                let _ = writeln!(curve, "{}\t{c}", i + 1);
            }
            write_text(
                &dir.join(format!("neighbors-{}-{}.tsv", r.arm, r.vocab_size)),
                &curve,
            )?;
        }
        write_text(&dir.join("metrics.tsv"), &table)?;
        write_text(&dir.join("metrics.kv"), &kv)?;
        print!("{table}");
        info!("reports -> {}", dir.display());
        Ok(())
    }

    pub fn compare_vocabs(&self) -> Result<Vec<(usize, f64)>> {
        let cfg = &self.config;
        let alphabet = self.load_alphabet(&cfg.alphabet_path())?;
        let mut curve = Vec::new();
        let mut out = String::from("vocab_size\tintersection_pct\n");
        for v in self.available_sizes() {
            let vanilla = TokenizerModel::load(cfg.model_path("vanilla", v))?;
            let splintered = TokenizerModel::load(cfg.model_path("splinter", v))?;
            let pct = vocab_intersection(&vanilla, &splintered, &alphabet)?;
            let _ = writeln!(out, "{v}\t{pct:.4}");
            curve.push((v, pct));
        }
        let path = cfg.reports_dir().join("intersection.tsv");
        write_text(&path, &out)?;
        print!("{out}");
        info!("intersection curve -> {}", path.display());
        Ok(curve)
    }
}
