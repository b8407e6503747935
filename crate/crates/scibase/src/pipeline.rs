//! Subcommand orchestration: load the corpus once, run the requested
//! stage, write deterministic artifacts plus a run manifest with content
//! digests.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::{self, FitError, FitResult, SvrConfig};
use crate::config::{ConfigError, RunConfig};
use crate::corpus::{self, Corpus, CorpusError, CountryMap};
use crate::metrics::MetricsError;
use crate::model::{self, ModelError, ScoreConfig};
use crate::network::{self, NetworkError};
use crate::snip::{self, SnipError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("computation error: {0}")]
    Compute(String),
    #[error("output error: {0}")]
    Output(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Compute(_) | PipelineError::Output(_) => 3,
        }
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        match e {
            // A conflicting alias table is a configuration mistake, not a
            // property of the corpus.
            CorpusError::AliasConflict { .. } => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<SnipError> for PipelineError {
    fn from(e: SnipError) -> Self {
        PipelineError::Compute(e.to_string())
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::InvalidMix(_) => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Compute(e.to_string()),
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidMix(_)
            | ModelError::EmptyGrid { .. }
            | ModelError::InvalidElasticities(_) => PipelineError::Usage(e.to_string()),
            ModelError::Metrics(inner) => inner.into(),
            _ => PipelineError::Compute(e.to_string()),
        }
    }
}

impl From<NetworkError> for PipelineError {
    fn from(e: NetworkError) -> Self {
        PipelineError::Compute(e.to_string())
    }
}

impl From<FitError> for PipelineError {
    fn from(e: FitError) -> Self {
        PipelineError::Compute(e.to_string())
    }
}

/// Corpus plus lookup tables, loaded once per run.
pub struct Context {
    pub config: RunConfig,
    pub corpus: Corpus,
    pub country_map: CountryMap,
    pub jis: BTreeMap<String, f64>,
}

fn parse_jis_file(path: &Path) -> Result<BTreeMap<String, f64>, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row =
            row.map_err(|e| PipelineError::Data(format!("{} row {}: {e}", path.display(), i + 1)))?;
        if row.len() != 2 {
            return Err(PipelineError::Data(format!(
                "{} row {}: expected 2 fields, got {}",
                path.display(),
                i + 1,
                row.len()
            )));
        }
        let value: f64 = match row[1].parse() {
            Ok(v) => v,
            // tolerate a single header row
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(PipelineError::Data(format!(
                    "{} row {}: bad influence score {:?}: {e}",
                    path.display(),
                    i + 1,
                    &row[1]
                )))
            }
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(PipelineError::Data(format!(
                "{} row {}: influence score {value} outside [0, 1]",
                path.display(),
                i + 1
            )));
        }
        out.insert(corpus::cleanse(&row[0]), value);
    }
    Ok(out)
}

/// Load the corpus and all side tables named by the config.
pub fn load_context(config: RunConfig) -> Result<Context, PipelineError> {
    let journal_countries: HashMap<String, String> = match &config.journal_country_path {
        Some(path) => corpus::parse_journal_countries(path)?,
        None => HashMap::new(),
    };
    let country_map = match &config.country_map_path {
        Some(path) => corpus::parse_country_map(path)?,
        None => CountryMap::empty(),
    };
    let jis = match &config.jis_path {
        Some(path) => parse_jis_file(path)?,
        None => BTreeMap::new(),
    };
    let corpus = corpus::parse_citation_db_with_countries(&config.corpus_path, &journal_countries)?;
    Ok(Context {
        config,
        corpus,
        country_map,
        jis,
    })
}

/// One file written by a run.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    snip_year: i32,
    artifacts: &'a [Artifact],
}

fn write_artifact(
    out_dir: &Path,
    name: &str,
    bytes: &[u8],
    artifacts: &mut Vec<Artifact>,
) -> Result<(), PipelineError> {
    let path = out_dir.join(name);
    std::fs::write(&path, bytes)
        .map_err(|e| PipelineError::Output(format!("cannot write {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    artifacts.push(Artifact {
        path: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: format!("{:x}", hasher.finalize()),
    });
    Ok(())
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    snip_year: i32,
    artifacts: &[Artifact],
) -> Result<(), PipelineError> {
    let manifest = Manifest {
        command,
        snip_year,
        artifacts,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    bytes.push(b'\n');
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, &bytes)
        .map_err(|e| PipelineError::Output(format!("cannot write {}: {e}", path.display())))
}

fn ensure_out_dir(out_dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::Output(format!("cannot create {}: {e}", out_dir.display())))
}

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, PipelineError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| PipelineError::Output(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct IngestReport<'a> {
    articles: usize,
    journals: usize,
    resolved_references: u64,
    diagnostics: &'a crate::corpus::Diagnostics,
}

fn ingest_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let mut corpus_bytes = Vec::new();
    corpus::export_jsonl(&ctx.corpus, &mut corpus_bytes)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "corpus.jsonl", &corpus_bytes, artifacts)?;

    let report = IngestReport {
        articles: ctx.corpus.articles().count(),
        journals: ctx.corpus.journals().count(),
        resolved_references: ctx.corpus.resolved_reference_count(),
        diagnostics: ctx.corpus.diagnostics(),
    };
    write_artifact(
        &ctx.config.out_dir,
        "ingest_report.json",
        &to_json_bytes(&report)?,
        artifacts,
    )
}

fn score_config(ctx: &Context) -> ScoreConfig {
    let mut config = ScoreConfig::new(ctx.config.snip_year);
    config.icr_mix = ctx.config.icr_mix;
    config.yi_mix = ctx.config.yi_mix;
    config.alpha_bounds = ctx.config.alpha_bounds;
    config.alpha_step = ctx.config.alpha_step;
    config.alpha_delta = ctx.config.alpha_delta;
    config.jis = ctx.jis.clone();
    config
}

fn metrics_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let snip_table = snip::snip_table(&ctx.corpus, ctx.config.snip_year).ok();
    let names: Vec<&str> = ctx.corpus.journal_names().collect();
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let (snip_value, snip_norm) = match &snip_table {
            Some(table) => (
                table.reports.get(name).map(|r| r.snip),
                table.snip_norm(name).unwrap_or(0.0),
            ),
            None => (None, 0.0),
        };
        rows.push(crate::metrics::journal_metrics(
            name,
            &ctx.corpus,
            &ctx.country_map,
            ctx.config.icr_mix,
            snip_value,
            snip_norm,
        )?);
    }
    let mut bytes = Vec::new();
    crate::metrics::write_metrics_csv(&rows, &mut bytes)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "metrics.csv", &bytes, artifacts)
}

fn snip_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let table = match snip::snip_table(&ctx.corpus, ctx.config.snip_year) {
        Ok(table) => table,
        Err(e) => {
            // Spell out which journals fail and why, one line per journal.
            let mut details = Vec::new();
            for name in ctx.corpus.journal_names() {
                if let Err(cause) = snip::rip(name, ctx.config.snip_year, &ctx.corpus) {
                    details.push(cause.to_string());
                }
            }
            return Err(PipelineError::Compute(format!(
                "{e}; {}",
                details.join("; ")
            )));
        }
    };
    let mut bytes = Vec::new();
    snip::write_snip_csv(&table, &mut bytes).map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "snip.csv", &bytes, artifacts)?;

    #[derive(Serialize)]
    struct SnipSummary<'a> {
        year: i32,
        median_dcp: f64,
        max_snip: f64,
        undefined: &'a [String],
    }
    let summary = SnipSummary {
        year: table.year,
        median_dcp: table.median_dcp,
        max_snip: table.max_snip,
        undefined: &table.undefined,
    };
    write_artifact(
        &ctx.config.out_dir,
        "snip_summary.json",
        &to_json_bytes(&summary)?,
        artifacts,
    )
}

fn score_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let outcome = model::score_corpus(&ctx.corpus, &ctx.country_map, &score_config(ctx))?;
    let mut bytes = Vec::new();
    model::write_score_csv(&outcome.rows, &mut bytes)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "scores.csv", &bytes, artifacts)?;

    #[derive(Serialize)]
    struct ModelReport<'a> {
        model: &'a model::CobbDouglasModel,
        objective: f64,
        concave: bool,
        snip_undefined: &'a [String],
    }
    let report = ModelReport {
        model: &outcome.model,
        objective: outcome.objective,
        concave: model::concavity_check(&outcome.model).concave,
        snip_undefined: &outcome.snip_undefined,
    };
    write_artifact(
        &ctx.config.out_dir,
        "model.json",
        &to_json_bytes(&report)?,
        artifacts,
    )
}

fn network_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let table = snip::snip_table(&ctx.corpus, ctx.config.snip_year)?;
    let graph = network::build_citation_graph(&ctx.corpus, &table.snip_values())?;

    let mut bytes = Vec::new();
    network::write_edge_csv(&graph, &mut bytes)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "edges.csv", &bytes, artifacts)?;

    let ordering: Vec<String> = graph.nodes.keys().cloned().collect();
    let intra = network::intra_journal_stats(&ctx.corpus);
    let matrix = graph.adjacency_matrix_with_intra(&ordering, &intra)?;
    let mut bytes = Vec::new();
    network::write_adjacency_csv(&matrix, &ordering, &mut bytes)
        .map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "adjacency.csv", &bytes, artifacts)?;

    let mut bytes = Vec::new();
    network::write_dot(&graph, &mut bytes).map_err(|e| PipelineError::Output(e.to_string()))?;
    write_artifact(&ctx.config.out_dir, "graph.dot", &bytes, artifacts)?;

    #[derive(Serialize)]
    struct DistributionRow {
        edge_type: u8,
        citations: u64,
        share: f64,
    }
    #[derive(Serialize)]
    struct NetworkReport {
        median_snip: f64,
        excluded_self_loops: u64,
        total_inter_journal_citations: u64,
        distribution: Vec<DistributionRow>,
        intra: BTreeMap<String, network::IntraJournalStats>,
    }
    let report = NetworkReport {
        median_snip: graph.median_snip,
        excluded_self_loops: graph.excluded_self_loops,
        total_inter_journal_citations: graph.total_weight(),
        distribution: graph
            .distribution_table()
            .into_iter()
            .map(|(etype, citations, share)| DistributionRow {
                edge_type: etype.code(),
                citations,
                share,
            })
            .collect(),
        intra,
    };
    write_artifact(
        &ctx.config.out_dir,
        "network.json",
        &to_json_bytes(&report)?,
        artifacts,
    )
}

#[derive(Serialize)]
#[serde(untagged)]
enum FitOutcome {
    Fit(FitResult),
    Failed { error: String },
}

fn record_fit(result: Result<FitResult, FitError>) -> FitOutcome {
    match result {
        Ok(fit) => FitOutcome::Fit(fit),
        Err(e) => FitOutcome::Failed {
            error: e.to_string(),
        },
    }
}

/// Regressions between NLIQ (x) and SNIP (y) across journals, the same
/// relationship the score model couples through x3 and x4.
fn regress_artifacts(ctx: &Context, artifacts: &mut Vec<Artifact>) -> Result<(), PipelineError> {
    let table = snip::snip_table(&ctx.corpus, ctx.config.snip_year)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut journals = Vec::new();
    for (name, report) in &table.reports {
        x.push(crate::metrics::nliq(name, &ctx.corpus)?);
        y.push(report.snip);
        journals.push(name.clone());
    }
    if x.len() < 2 {
        return Err(PipelineError::Compute(format!(
            "regression needs at least 2 journals with defined SNIP, got {}",
            x.len()
        )));
    }

    let svr_config = SvrConfig {
        epsilon: ctx.config.svr_epsilon,
        cost: ctx.config.svr_cost,
        ..SvrConfig::default()
    };
    let max_lag = ctx.config.max_lag.min(x.len() as i64 - 1);
    #[derive(Serialize)]
    struct RegressReport {
        x_metric: &'static str,
        y_metric: &'static str,
        journals: Vec<String>,
        linear: FitOutcome,
        polynomial: FitOutcome,
        exponential: FitOutcome,
        svr: FitOutcome,
        cross_correlation: BTreeMap<i64, f64>,
    }
    let report = RegressReport {
        x_metric: "nliq",
        y_metric: "snip",
        journals,
        linear: record_fit(analytics::linear_fit(&x, &y)),
        polynomial: record_fit(analytics::poly_fit(&x, &y, ctx.config.poly_degree)),
        exponential: record_fit(analytics::exp_fit(&x, &y)),
        svr: record_fit(analytics::svr_fit(&x, &y, &svr_config)),
        cross_correlation: analytics::cross_correlation(&x, &y, max_lag).unwrap_or_default(),
    };
    write_artifact(
        &ctx.config.out_dir,
        "regression.json",
        &to_json_bytes(&report)?,
        artifacts,
    )
}

/// The stage to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Metrics,
    Snip,
    Score,
    Network,
    Regress,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Metrics => "metrics",
            Command::Snip => "snip",
            Command::Score => "score",
            Command::Network => "network",
            Command::Regress => "regress",
            Command::All => "all",
        }
    }
}

/// Run one stage (or all of them) and return the artifact list written to
/// the output directory, manifest included.
pub fn run(command: Command, ctx: &Context) -> Result<Vec<Artifact>, PipelineError> {
    ensure_out_dir(&ctx.config.out_dir)?;
    let mut artifacts = Vec::new();
    match command {
        Command::Ingest => ingest_artifacts(ctx, &mut artifacts)?,
        Command::Metrics => metrics_artifacts(ctx, &mut artifacts)?,
        Command::Snip => snip_artifacts(ctx, &mut artifacts)?,
        Command::Score => score_artifacts(ctx, &mut artifacts)?,
        Command::Network => network_artifacts(ctx, &mut artifacts)?,
        Command::Regress => regress_artifacts(ctx, &mut artifacts)?,
        Command::All => {
            ingest_artifacts(ctx, &mut artifacts)?;
            metrics_artifacts(ctx, &mut artifacts)?;
            snip_artifacts(ctx, &mut artifacts)?;
            score_artifacts(ctx, &mut artifacts)?;
            network_artifacts(ctx, &mut artifacts)?;
            regress_artifacts(ctx, &mut artifacts)?;
        }
    }
    write_manifest(
        &ctx.config.out_dir,
        command.name(),
        ctx.config.snip_year,
        &artifacts,
    )?;
    Ok(artifacts)
}
