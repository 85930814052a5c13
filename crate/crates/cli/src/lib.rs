//! Command surface of `semtopo`: argument types, dispatch and run
//! manifests. Every command writes `run_manifest.json` next to its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use semtopo::corpus::{CachedEmbedder, Embedder, MockEmbedder, ServiceEmbedder, DEFAULT_MOCK_DIMENSION};

mod corpus_cmd;
mod manifest;
mod report_cmd;
mod sim_cmd;

pub use corpus_cmd::{AnalyzeArgs, CalibrateArgs, GenCorpusArgs, IngestArgs};
pub use manifest::{RunManifest, MANIFEST_FILE};
pub use report_cmd::ReportArgs;
pub use sim_cmd::{SimulateArgs, SweepArgs};

#[derive(Parser, Debug)]
#[command(
    name = "semtopo",
    version,
    about = "Persistent-homology ambiguity scores for retrieval queries"
)]
pub struct Cli {
    /// Log at debug level.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Score simulated query/corpus pairs at one scale.
    Simulate(SimulateArgs),
    /// Sweep the neighborhood scale, projection dimensions or the dimension grid.
    Sweep(SweepArgs),
    /// Chunk a directory of text files and embed every chunk set.
    Ingest(IngestArgs),
    /// Score query embeddings against corpus embeddings.
    Analyze(AnalyzeArgs),
    /// Reference distributions from clustered, concatenated queries.
    Calibrate(CalibrateArgs),
    /// Histograms and KDE curves of result CSVs.
    Report(ReportArgs),
    /// Write a planted-topic synthetic corpus.
    GenCorpus(GenCorpusArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Ingest(_) => "ingest",
            Command::Analyze(_) => "analyze",
            Command::Calibrate(_) => "calibrate",
            Command::Report(_) => "report",
            Command::GenCorpus(_) => "gen-corpus",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(clap::Args, Clone, Debug, Serialize, Deserialize)]
pub struct RerunArgs {
    /// A run_manifest.json written by an earlier command.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedderKind {
    /// Offline hashed bag-of-tokens embedder.
    Mock,
    /// OpenAI-compatible endpoint configured through SEMTOPO_EMBED_* variables.
    Service,
}

/// Embedder flags shared by ingest and calibrate.
#[derive(clap::Args, Clone, Debug, Serialize, Deserialize)]
pub struct EmbedderArgs {
    #[arg(long, value_enum, default_value_t = EmbedderKind::Mock)]
    pub embedder: EmbedderKind,
    /// Mock embedding dimension.
    #[arg(long, default_value_t = DEFAULT_MOCK_DIMENSION)]
    pub dimension: usize,
    /// Mock embedder seed.
    #[arg(long = "embed-seed", default_value_t = 0)]
    pub embed_seed: u64,
    /// JSONL response cache.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

impl EmbedderArgs {
    pub fn build(&self) -> Result<Box<dyn Embedder>> {
        let inner: Box<dyn Embedder> = match self.embedder {
            EmbedderKind::Mock => Box::new(MockEmbedder::new(self.dimension, self.embed_seed)?),
            EmbedderKind::Service => Box::new(ServiceEmbedder::from_env()?),
        };
        Ok(match &self.cache {
            Some(path) => Box::new(CachedEmbedder::open(inner, path)?),
            None => inner,
        })
    }
}

/// Files written under one output directory, recorded relative to it.
pub(crate) struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub(crate) fn path(&mut self, name: impl AsRef<Path>) -> PathBuf {
        self.files.push(name.as_ref().to_path_buf());
        self.dir.join(name)
    }

    pub(crate) fn file(&mut self, name: impl AsRef<Path>) -> Result<fs::File> {
        let path = self.path(name);
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))
    }

    pub(crate) fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// What a command hands back for its manifest.
pub(crate) struct Finished {
    pub invocation: Command,
    pub seed: Option<u64>,
    pub outputs: Outputs,
}

/// Runs one command and writes its manifest.
pub fn run(command: Command) -> Result<RunManifest> {
    let command = match command {
        Command::Rerun(args) => {
            let mut m = RunManifest::read(&args.manifest)?;
            if let Some(out) = args.out {
                set_out(&mut m.invocation, out);
            }
            m.invocation
        }
        other => other,
    };
    let started = manifest::now_ms();
    let done = match command {
        Command::Simulate(a) => sim_cmd::simulate(a)?,
        Command::Sweep(a) => sim_cmd::sweep(a)?,
        Command::Ingest(a) => corpus_cmd::ingest(a)?,
        Command::Analyze(a) => corpus_cmd::analyze(a)?,
        Command::Calibrate(a) => corpus_cmd::calibrate(a)?,
        Command::Report(a) => report_cmd::report(a)?,
        Command::GenCorpus(a) => corpus_cmd::gen_corpus(a)?,
        Command::Rerun(_) => anyhow::bail!("a manifest cannot record a rerun"),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        command: done.invocation.name().to_owned(),
        seed: done.seed,
        started_unix_ms: started,
        finished_unix_ms: manifest::now_ms(),
        outputs: done.outputs.files.clone(),
        invocation: done.invocation,
    };
    manifest.write(&done.outputs.dir)?;
    Ok(manifest)
}

fn set_out(command: &mut Command, out: PathBuf) {
    match command {
        Command::Simulate(a) => a.out = out,
        Command::Sweep(a) => a.out = out,
        Command::Ingest(a) => a.out = out,
        Command::Analyze(a) => a.out = out,
        Command::Calibrate(a) => a.out = out,
        Command::Report(a) => a.out = out,
        Command::GenCorpus(a) => a.out = out,
        Command::Rerun(a) => a.out = Some(out),
    }
}

/// `0.2, 0.4, ..., 3.0`.
pub fn default_grid() -> Vec<f64> {
    semtopo::neighborhood::default_epsilon_grid()
}

pub(crate) fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests;
