//! Declarative pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use splinter::metrics::{NeighborAveraging, DEFAULT_ALPHA};
use splinter::{BeamConfig, CompositeBlock, IndexConvention};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    /// Private Use Area, from U+E000.
    #[default]
    Pua,
    /// CJK Unified Ideographs, from U+4E00.
    Cjk,
}

impl BlockKind {
    pub fn block(self) -> CompositeBlock {
        match self {
            BlockKind::Pua => CompositeBlock::private_use(),
            BlockKind::Cjk => CompositeBlock::cjk(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Observed,
    Vocabulary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub breadth: usize,
    pub depth: usize,
}

impl Default for BeamSection {
    fn default() -> Self {
        let b = BeamConfig::default();
        Self {
            breadth: b.breadth,
            depth: b.depth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborSection {
    pub window: usize,
    pub top_n: usize,
    pub averaging: Averaging,
}

impl Default for NeighborSection {
    fn default() -> Self {
        Self {
            window: 2,
            top_n: 200,
            averaging: Averaging::Observed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    /// Training corpus files.
    pub corpus: Vec<PathBuf>,
    /// Evaluation text; the training corpus when absent.
    pub eval_corpus: Option<PathBuf>,
    /// `stimulus,lexicality,accuracy,rt` CSV for cognitive plausibility.
    pub lexical_decisions: Option<PathBuf>,
    /// Root of every artifact the pipeline writes.
    pub work_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Built-in profile name or path to a profile TOML file.
    pub profile: String,
    pub signed_indices: bool,
    pub block: BlockKind,
    pub vocab_sizes: Vec<usize>,
    pub alpha: f64,
    pub special_tokens: Vec<String>,
    /// Worker threads; all cores when absent.
    pub threads: Option<usize>,
    pub beam: BeamSection,
    pub neighbors: NeighborSection,
    pub paths: PathSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            profile: "hebrew".into(),
            signed_indices: true,
            block: BlockKind::Pua,
            vocab_sizes: vec![800, 1000, 2000, 10_000, 32_000, 64_000, 128_000],
            alpha: DEFAULT_ALPHA,
            special_tokens: Vec::new(),
            threads: None,
            beam: BeamSection::default(),
            neighbors: NeighborSection::default(),
            paths: PathSection {
                work_dir: PathBuf::from("splinter-out"),
                ..PathSection::default()
            },
        }
    }
}

impl PipelineConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&src).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.paths.corpus.iter_mut().for_each(rebase);
        cfg.paths.eval_corpus.iter_mut().for_each(rebase);
        cfg.paths.lexical_decisions.iter_mut().for_each(rebase);
        rebase(&mut cfg.paths.work_dir);
        if !Self::is_builtin(&cfg.profile) {
            let p = base.join(&cfg.profile);
            cfg.profile = p.to_string_lossy().into_owned();
        }
        Ok(cfg)
    }

    fn is_builtin(profile: &str) -> bool {
        splinter::LanguageProfile::BUILTIN.contains(&profile)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.beam.breadth == 0 || self.beam.depth == 0 {
            return bad("beam breadth and depth must be at least 1".into());
        }
        if self.vocab_sizes.contains(&0) {
            return bad("vocab sizes must be positive".into());
        }
        if self.vocab_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "vocab sizes must be strictly ascending: {:?}",
                self.vocab_sizes
            ));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.neighbors.window == 0 {
            return bad("neighbor window must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.to_toml().as_bytes())[..8])
    }

    pub fn beam(&self) -> BeamConfig {
        BeamConfig::new(self.beam.breadth, self.beam.depth)
    }

    pub fn convention(&self) -> IndexConvention {
        if self.signed_indices {
            IndexConvention::Signed
        } else {
            IndexConvention::Unsigned
        }
    }

    pub fn averaging(&self, vocab_size: usize) -> NeighborAveraging {
        match self.neighbors.averaging {
            Averaging::Observed => NeighborAveraging::Observed,
            Averaging::Vocabulary => NeighborAveraging::Vocabulary(vocab_size),
        }
    }

    pub fn work(&self, rel: &str) -> PathBuf {
        self.paths.work_dir.join(rel)
    }

    pub fn freq_path(&self) -> PathBuf {
        self.work("freq.tsv")
    }

    pub fn map_path(&self) -> PathBuf {
        self.work("map.tsv")
    }

    pub fn alphabet_path(&self) -> PathBuf {
        self.work("alphabet.tsv")
    }

    pub fn model_path(&self, arm: &str, v: usize) -> PathBuf {
        self.work(&format!("models/{arm}-{v}.bpe"))
    }

    pub fn tokens_path(&self, arm: &str, v: usize) -> PathBuf {
        self.work(&format!("tokens/{arm}-{v}.tok"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.work("reports")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        let back: PipelineConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn rejects_unsorted_sizes_and_zero_beam() {
        let cfg = PipelineConfig {
            vocab_sizes: vec![2000, 800],
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.beam.depth = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("bogus = 1").is_err());
        let cfg: PipelineConfig = toml::from_str("vocab_sizes = [100]\n[beam]\ndepth = 2\n").unwrap();
        assert_eq!(cfg.beam.breadth, 3);
        assert_eq!(cfg.beam.depth, 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.alpha = 1.0;
        assert_ne!(a.hash(), b.hash());
    }
}
