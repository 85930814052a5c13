//! `ingest`, `analyze`, `calibrate` and `gen-corpus`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use semtopo::corpus::{
    analyze_direction, build_index, calibrate as run_calibration, chunk_corpus, direction_label, embed_chunks,
    read_corpus_dir, read_records, synthetic_corpus, write_corpus_dir, write_direction_csv, write_records,
    CalibrationConfig, DirectionResult, DirectionSummary, Document, EmbeddingRecord, SyntheticCorpusConfig,
    WhitespaceTokenizer,
};
use semtopo::neighborhood::DEFAULT_K;
use semtopo::report::{distributions, MetricDistribution, MetricSamples};

use crate::{file_label, Command, EmbedderArgs, Finished, Outputs};

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct IngestArgs {
    /// Directory of plain-text documents.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Chunk sizes in tokens, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [250usize, 750])]
    pub granularity: Vec<usize>,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Query embeddings JSONL.
    #[arg(long)]
    pub queries: PathBuf,
    /// Corpus embeddings JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.4])]
    pub epsilon_grid: Vec<f64>,
    /// Also score the corpus file against the query file.
    #[arg(long)]
    pub both: bool,
    /// Score every query, not only those nested with their top hit.
    #[arg(long)]
    pub no_containment: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub granularity: usize,
    /// Number of document clusters.
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    /// Chunks concatenated into each synthetic query.
    #[arg(long, default_value_t = 3)]
    pub parts: usize,
    /// Queries of each kind.
    #[arg(long, default_value_t = 30)]
    pub queries: usize,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.4])]
    pub epsilon_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub embedder: EmbedderArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GenCorpusArgs {
    /// Generator config JSON; unset fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(skip)]
    #[serde(default)]
    pub resolved: Option<SyntheticCorpusConfig>,
}

pub(crate) fn ingest(args: IngestArgs) -> Result<Finished> {
    if args.granularity.contains(&0) {
        bail!("chunk granularity must be at least 1 token");
    }
    let documents =
        read_corpus_dir(&args.corpus).with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let embedder = args.embedder.build()?;
    let mut outputs = Outputs::create(&args.out)?;
    for &t in &args.granularity {
        let chunks = chunk_corpus(&documents, t, &WhitespaceTokenizer)?;
        chunks.write_jsonl(&outputs.path(format!("chunks_T{t}.jsonl")))?;
        let records = embed_chunks(&chunks, &*embedder).with_context(|| format!("embedding chunks of {t} tokens"))?;
        write_records(&outputs.path(format!("embeddings_T{t}.jsonl")), &records)?;
        println!(
            "T={t}: {} chunks from {} documents embedded with {}",
            chunks.len(),
            documents.len(),
            embedder.model_tag()
        );
    }
    Ok(Finished {
        invocation: Command::Ingest(args.clone()),
        seed: Some(args.embedder.embed_seed),
        outputs,
    })
}

fn load_records(path: &Path) -> Result<Vec<EmbeddingRecord>> {
    let records = read_records(path).with_context(|| format!("reading embeddings {}", path.display()))?;
    if records.is_empty() {
        bail!("{} holds no embeddings", path.display());
    }
    Ok(records)
}

// chunk ids end in ":<granularity>:<index>"
fn granularity_of(records: &[EmbeddingRecord]) -> Option<usize> {
    let mut found = None;
    for r in records {
        let g: usize = r.chunk_id.rsplit(':').nth(1)?.parse().ok()?;
        match found {
            None => found = Some(g),
            Some(f) if f != g => return None,
            _ => {}
        }
    }
    found
}

fn label(queries: &[EmbeddingRecord], corpus: &[EmbeddingRecord], fallback: &str) -> String {
    match (granularity_of(queries), granularity_of(corpus)) {
        (Some(q), Some(c)) => direction_label(q, c),
        _ => fallback.to_owned(),
    }
}

#[derive(Serialize)]
struct DirectionReport {
    summary: DirectionSummary,
    distributions: Vec<MetricDistribution>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    k: usize,
    epsilon_grid: Vec<f64>,
    require_containment: bool,
    directions: Vec<DirectionReport>,
}

fn direction_distributions(result: &DirectionResult, grid: &[f64]) -> Result<Vec<MetricDistribution>> {
    if result.profiles.is_empty() {
        return Ok(Vec::new());
    }
    let groups: Vec<MetricSamples> = grid
        .iter()
        .enumerate()
        .map(|(i, eps)| MetricSamples {
            group: format!("{}[epsilon={eps}]", result.summary.label),
            w1_h0: result.profiles.iter().map(|p| p.scores[i].w1_h0).collect(),
            lt_max_h1: result.profiles.iter().map(|p| p.scores[i].lt_max_h1).collect(),
        })
        .collect();
    Ok(distributions(&groups, 20, 200)?)
}

pub(crate) fn analyze(args: AnalyzeArgs) -> Result<Finished> {
    let queries = load_records(&args.queries)?;
    let corpus = load_records(&args.corpus)?;
    let (qd, cd) = (queries[0].vector.len(), corpus[0].vector.len());
    if qd != cd {
        bail!(
            "dimension mismatch: {} has {qd}-d embeddings, {} has {cd}-d",
            args.queries.display(),
            args.corpus.display()
        );
    }
    let mut runs = vec![(label(&queries, &corpus, "forward"), &queries, &corpus)];
    if args.both {
        runs.push((label(&corpus, &queries, "reverse"), &corpus, &queries));
    }
    let mut outputs = Outputs::create(&args.out)?;
    let mut directions = Vec::new();
    for (name, q, c) in runs {
        let index = build_index(c.clone())?;
        let result = analyze_direction(&name, q, &index, args.k, &args.epsilon_grid, !args.no_containment)?;
        write_direction_csv(outputs.file(format!("scores_{}.csv", file_label(&name)))?, &result)?;
        let s = &result.summary;
        println!(
            "{name}: {} of {} queries scored ({} zero-distance, {} outside containment)",
            s.scored, s.n_queries, s.skipped_zero_distance, s.skipped_containment
        );
        for e in &s.per_epsilon {
            println!(
                "  eps={}: W1(H0) {:.4} [IQR {:.4}, {:.4}]  LT_max(H1) {:.4} [IQR {:.4}, {:.4}]",
                e.epsilon, e.w1_h0.mean, e.w1_h0.q25, e.w1_h0.q75, e.lt_max_h1.mean, e.lt_max_h1.q25, e.lt_max_h1.q75
            );
        }
        directions.push(DirectionReport {
            distributions: direction_distributions(&result, &args.epsilon_grid)?,
            summary: result.summary,
        });
    }
    if let [a, b] = directions.as_slice() {
        if let (Some(x), Some(y)) = (a.summary.per_epsilon.first(), b.summary.per_epsilon.first()) {
            println!(
                "{} minus {} at eps={}: W1(H0) {:+.4}",
                a.summary.label,
                b.summary.label,
                x.epsilon,
                x.w1_h0.mean - y.w1_h0.mean
            );
        }
    }
    outputs.write_json(
        "summary.json",
        &AnalyzeReport {
            k: args.k,
            epsilon_grid: args.epsilon_grid.clone(),
            require_containment: !args.no_containment,
            directions,
        },
    )?;
    Ok(Finished {
        invocation: Command::Analyze(args),
        seed: None,
        outputs,
    })
}

pub(crate) fn calibrate(args: CalibrateArgs) -> Result<Finished> {
    let documents =
        read_corpus_dir(&args.corpus).with_context(|| format!("reading corpus {}", args.corpus.display()))?;
    let chunks = chunk_corpus(&documents, args.granularity, &WhitespaceTokenizer)?;
    let embedder = args.embedder.build()?;
    let config = CalibrationConfig {
        cluster_count: args.clusters,
        parts: args.parts,
        queries: args.queries,
        k: args.k,
        epsilon_grid: args.epsilon_grid.clone(),
        seed: args.seed,
    };
    let baseline = run_calibration(&chunks, &*embedder, &config)?;
    println!("cluster sizes: {:?}", baseline.cluster_sizes);
    for s in [&baseline.multi_factual, &baseline.single_cluster] {
        for e in &s.per_epsilon {
            println!(
                "{} eps={}: W1(H0) {:.4} [IQR {:.4}, {:.4}]  LT_max(H1) {:.4} [IQR {:.4}, {:.4}]",
                s.label,
                e.epsilon,
                e.w1_h0.mean,
                e.w1_h0.q25,
                e.w1_h0.q75,
                e.lt_max_h1.mean,
                e.lt_max_h1.q25,
                e.lt_max_h1.q75
            );
        }
    }
    let mut outputs = Outputs::create(&args.out)?;
    outputs.write_json("calibration.json", &baseline)?;
    Ok(Finished {
        invocation: Command::Calibrate(args.clone()),
        seed: Some(args.seed),
        outputs,
    })
}

#[derive(Serialize)]
struct PlantedRow<'a> {
    id: &'a str,
    cluster: usize,
    segment_topics: &'a [usize],
}

pub(crate) fn gen_corpus(mut args: GenCorpusArgs) -> Result<Finished> {
    let config = match (&args.resolved, &args.config) {
        (Some(c), _) => c.clone(),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, None) => SyntheticCorpusConfig::default(),
    };
    let config = match (args.resolved.is_none(), args.seed) {
        (true, Some(seed)) => SyntheticCorpusConfig { seed, ..config },
        _ => config,
    };
    let planted = synthetic_corpus(&config)?;
    let mut outputs = Outputs::create(&args.out)?;
    let documents: Vec<Document> = planted.iter().map(|p| p.document.clone()).collect();
    write_corpus_dir(&args.out.join("docs"), &documents)?;
    for d in &documents {
        outputs.files.push(Path::new("docs").join(format!("{}.txt", d.id)));
    }
    let rows: Vec<PlantedRow> = planted
        .iter()
        .map(|p| PlantedRow {
            id: &p.document.id,
            cluster: p.cluster,
            segment_topics: &p.segment_topics,
        })
        .collect();
    outputs.write_json("planted.json", &rows)?;
    println!(
        "{} documents in {} clusters written to {}",
        documents.len(),
        config.clusters,
        args.out.join("docs").display()
    );
    let seed = config.seed;
    args.resolved = Some(config);
    Ok(Finished {
        invocation: Command::GenCorpus(args),
        seed: Some(seed),
        outputs,
    })
}
