use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use scibase::config::{FileConfig, Overrides, RunConfig};
use scibase::pipeline::{self, Command as Stage};

/// Batch scientometrics engine: journal metrics, SNIP, internationality
/// scoring, citation networks and regression reports from a citation
/// corpus.
#[derive(Parser)]
#[command(name = "scibase", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct CommonArgs {
    /// Citation corpus: flat record file or JSON lines.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// CSV of country alias, canonical name.
    #[arg(long)]
    country_map: Option<PathBuf>,
    /// CSV of journal name, publishing country.
    #[arg(long)]
    journal_countries: Option<PathBuf>,
    /// CSV of journal name, external influence score in [0, 1].
    #[arg(long)]
    jis_file: Option<PathBuf>,
    /// Census year for SNIP; cited window is the three prior years.
    #[arg(long)]
    snip_year: Option<i32>,
    /// Elasticity search bounds, as lo,hi.
    #[arg(long, value_parser = parse_bounds)]
    alpha_bounds: Option<(f64, f64)>,
    /// Elasticity grid increment.
    #[arg(long)]
    alpha_step: Option<f64>,
    /// Slack of the elasticity sum constraint (sum <= 1 - delta).
    #[arg(long)]
    alpha_delta: Option<f64>,
    /// Weight of the foreign-entry ratio inside ICR, in [0, 1].
    #[arg(long)]
    icr_mix: Option<f64>,
    /// Weight of the external influence score inside YI, in (0, 1).
    #[arg(long)]
    yi_mix: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the machine default.
    #[arg(long)]
    jobs: Option<usize>,
    /// SVR insensitive-tube half width.
    #[arg(long)]
    svr_epsilon: Option<f64>,
    /// SVR penalty on tube violations.
    #[arg(long)]
    svr_cost: Option<f64>,
    /// Largest lag for cross-correlation.
    #[arg(long)]
    max_lag: Option<i64>,
    /// Polynomial regression degree, 1 to 5.
    #[arg(long)]
    poly_degree: Option<usize>,
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Normalize and validate the corpus, export it as JSON lines.
    Ingest(CommonArgs),
    /// Per-journal citation quotients and collaboration ratios.
    Metrics(CommonArgs),
    /// SNIP reports for the census year.
    Snip(CommonArgs),
    /// Fit the internationality model and rank journals.
    Score(CommonArgs),
    /// Inter-journal citation graph exports.
    Network(CommonArgs),
    /// Regression and correlation reports.
    Regress(CommonArgs),
    /// The full pipeline.
    All(CommonArgs),
}

fn parse_bounds(raw: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected lo,hi, got {raw:?}"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad lower bound {:?}: {e}", parts[0]))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad upper bound {:?}: {e}", parts[1]))?;
    Ok((lo, hi))
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            corpus: self.corpus.clone(),
            country_map: self.country_map.clone(),
            journal_countries: self.journal_countries.clone(),
            jis_file: self.jis_file.clone(),
            snip_year: self.snip_year,
            alpha_bounds: self.alpha_bounds,
            alpha_step: self.alpha_step,
            alpha_delta: self.alpha_delta,
            icr_mix: self.icr_mix,
            yi_mix: self.yi_mix,
            out: self.out.clone(),
            jobs: self.jobs,
            svr_epsilon: self.svr_epsilon,
            svr_cost: self.svr_cost,
            max_lag: self.max_lag,
            poly_degree: self.poly_degree,
        }
    }
}

fn fail(code: i32, message: &str) -> ExitCode {
    let payload = serde_json::json!({ "error": message, "exit_code": code });
    eprintln!("{payload}");
    ExitCode::from(code as u8)
}

fn execute(stage: Stage, args: &CommonArgs) -> ExitCode {
    let file = match &args.config {
        Some(path) => match FileConfig::load(path) {
            Ok(file) => file,
            Err(e) => return fail(1, &e.to_string()),
        },
        None => FileConfig::default(),
    };
    let config = match RunConfig::resolve(&file, &args.overrides()) {
        Ok(config) => config,
        Err(e) => return fail(1, &e.to_string()),
    };
    if config.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
        {
            return fail(3, &format!("cannot size thread pool: {e}"));
        }
    }
    let ctx = match pipeline::load_context(config) {
        Ok(ctx) => ctx,
        Err(e) => return fail(e.exit_code(), &e.to_string()),
    };
    match pipeline::run(stage, &ctx) {
        Ok(artifacts) => {
            for artifact in &artifacts {
                println!("{}  {}", artifact.sha256, artifact.path);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.exit_code(), &e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match &cli.command {
        CliCommand::Ingest(args) => execute(Stage::Ingest, args),
        CliCommand::Metrics(args) => execute(Stage::Metrics, args),
        CliCommand::Snip(args) => execute(Stage::Snip, args),
        CliCommand::Score(args) => execute(Stage::Score, args),
        CliCommand::Network(args) => execute(Stage::Network, args),
        CliCommand::Regress(args) => execute(Stage::Regress, args),
        CliCommand::All(args) => execute(Stage::All, args),
    }
}
