mod cli;
mod commands;
mod config;
mod exit;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use log::{error, info};
use splinter::{BeamConfig, LanguageProfile};

use crate::cli::{Cli, Command};
use crate::commands::Ctx;
use crate::config::{ConfigError, PipelineConfig};

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &cli.profile {
        cfg.profile = p.clone();
    }
    if let Some(w) = &cli.work_dir {
        cfg.paths.work_dir = w.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    match &cli.command {
        Command::TrainMap { unsigned: true, .. } => cfg.signed_indices = false,
        Command::ExportAlphabet { block: Some(b), .. } => cfg.block = *b,
        Command::Splinter { beam, .. } => {
            cfg.beam.breadth = beam.breadth.unwrap_or(cfg.beam.breadth);
            cfg.beam.depth = beam.depth.unwrap_or(cfg.beam.depth);
        }
        Command::BuildFreq { inputs, .. } if !inputs.is_empty() => cfg.paths.corpus = inputs.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    let profile = LanguageProfile::resolve(&config.profile)?;
    let hash = config.hash();
    info!("config hash {hash}");
    info!("resolved config:\n{}", config.to_toml());
    let ctx = Ctx {
        config,
        profile,
        hash,
    };
    let cfg = &ctx.config;
    let or = |p: &Option<std::path::PathBuf>, d: std::path::PathBuf| p.clone().unwrap_or(d);
    match &cli.command {
        Command::BuildFreq { output, .. } => {
            ctx.build_freq(&cfg.paths.corpus, &or(output, cfg.freq_path()))?;
        }
        Command::TrainMap { freq, output, .. } => {
            ctx.train_map(
                &or(freq, cfg.freq_path()),
                &or(output, cfg.map_path()),
                cfg.convention(),
            )?;
        }
        Command::ExportAlphabet { map, output, .. } => {
            ctx.export_alphabet(
                &or(map, cfg.map_path()),
                &or(output, cfg.alphabet_path()),
                cfg.block.block(),
            )?;
        }
        Command::Splinter {
            map,
            alphabet,
            input,
            output,
            ..
        } => {
            let beam = BeamConfig::new(cfg.beam.breadth, cfg.beam.depth);
            ctx.splinter(
                &or(map, cfg.map_path()),
                &or(alphabet, cfg.alphabet_path()),
                input,
                output,
                beam,
            )?;
        }
        Command::Unsplinter {
            alphabet,
            input,
            output,
        } => {
            ctx.unsplinter(&or(alphabet, cfg.alphabet_path()), input, output)?;
        }
        Command::TrainBpe {
            inputs,
            output,
            vocab_size,
            special_tokens,
        } => {
            let specials = if special_tokens.is_empty() {
                &cfg.special_tokens
            } else {
                special_tokens
            };
            ctx.train_bpe(inputs, output, *vocab_size, specials)?;
        }
        Command::Tokenize { model, input, output } => {
            ctx.tokenize(model, input, output)?;
        }
        Command::Eval => {
            ctx.eval()?;
        }
        Command::CompareVocabs => {
            ctx.compare_vocabs()?;
        }
        Command::Pipeline => ctx.pipeline()?,
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit::code(&e))
        }
    }
}
