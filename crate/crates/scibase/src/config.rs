//! Run configuration: defaults, optional TOML file, command-line
//! overrides, in ascending precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub country_map_path: Option<PathBuf>,
    pub journal_country_path: Option<PathBuf>,
    pub jis_path: Option<PathBuf>,
    pub snip_year: i32,
    pub alpha_bounds: (f64, f64),
    pub alpha_step: f64,
    pub alpha_delta: f64,
    pub icr_mix: f64,
    pub yi_mix: f64,
    pub out_dir: PathBuf,
    /// 0 lets the runtime pick the thread count.
    pub jobs: usize,
    pub svr_epsilon: f64,
    pub svr_cost: f64,
    pub max_lag: i64,
    pub poly_degree: usize,
}

/// Values parsed from a TOML config file; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub country_map: Option<PathBuf>,
    pub journal_countries: Option<PathBuf>,
    pub jis_file: Option<PathBuf>,
    pub snip_year: Option<i32>,
    pub alpha_bounds: Option<[f64; 2]>,
    pub alpha_step: Option<f64>,
    pub alpha_delta: Option<f64>,
    pub icr_mix: Option<f64>,
    pub yi_mix: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub svr_epsilon: Option<f64>,
    pub svr_cost: Option<f64>,
    pub max_lag: Option<i64>,
    pub poly_degree: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// The same fields as [`FileConfig`], supplied on the command line; takes
/// precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub country_map: Option<PathBuf>,
    pub journal_countries: Option<PathBuf>,
    pub jis_file: Option<PathBuf>,
    pub snip_year: Option<i32>,
    pub alpha_bounds: Option<(f64, f64)>,
    pub alpha_step: Option<f64>,
    pub alpha_delta: Option<f64>,
    pub icr_mix: Option<f64>,
    pub yi_mix: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub svr_epsilon: Option<f64>,
    pub svr_cost: Option<f64>,
    pub max_lag: Option<i64>,
    pub poly_degree: Option<usize>,
}

impl RunConfig {
    /// Merge defaults, an optional file and command-line overrides, then
    /// validate ranges. The corpus path and SNIP year have no defaults
    /// and must come from one of the two sources.
    pub fn resolve(file: &FileConfig, cli: &Overrides) -> Result<Self, ConfigError> {
        let corpus_path = cli
            .corpus
            .clone()
            .or_else(|| file.corpus.clone())
            .ok_or_else(|| ConfigError::Invalid("no corpus path given".into()))?;
        let snip_year = cli
            .snip_year
            .or(file.snip_year)
            .ok_or_else(|| ConfigError::Invalid("no snip year given".into()))?;
        let config = Self {
            corpus_path,
            country_map_path: cli.country_map.clone().or_else(|| file.country_map.clone()),
            journal_country_path: cli
                .journal_countries
                .clone()
                .or_else(|| file.journal_countries.clone()),
            jis_path: cli.jis_file.clone().or_else(|| file.jis_file.clone()),
            snip_year,
            alpha_bounds: cli
                .alpha_bounds
                .or(file.alpha_bounds.map(|[lo, hi]| (lo, hi)))
                .unwrap_or((0.1, 0.9)),
            alpha_step: cli.alpha_step.or(file.alpha_step).unwrap_or(0.1),
            alpha_delta: cli.alpha_delta.or(file.alpha_delta).unwrap_or(0.01),
            icr_mix: cli.icr_mix.or(file.icr_mix).unwrap_or(0.5),
            yi_mix: cli.yi_mix.or(file.yi_mix).unwrap_or(0.5),
            out_dir: cli
                .out
                .clone()
                .or_else(|| file.out.clone())
                .unwrap_or_else(|| PathBuf::from("out")),
            jobs: cli.jobs.or(file.jobs).unwrap_or(0),
            svr_epsilon: cli.svr_epsilon.or(file.svr_epsilon).unwrap_or(0.1),
            svr_cost: cli.svr_cost.or(file.svr_cost).unwrap_or(10.0),
            max_lag: cli.max_lag.or(file.max_lag).unwrap_or(3),
            poly_degree: cli.poly_degree.or(file.poly_degree).unwrap_or(2),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.snip_year <= 0 {
            problems.push(format!("snip_year {} must be positive", self.snip_year));
        }
        let (lo, hi) = self.alpha_bounds;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            problems.push(format!("alpha bounds [{lo}, {hi}] must satisfy 0 < lo <= hi < 1"));
        }
        if self.alpha_step <= 0.0 || !self.alpha_step.is_finite() {
            problems.push(format!("alpha_step {} must be positive", self.alpha_step));
        }
        if !(0.0..1.0).contains(&self.alpha_delta) {
            problems.push(format!("alpha_delta {} must be in [0, 1)", self.alpha_delta));
        }
        if !(0.0..=1.0).contains(&self.icr_mix) {
            problems.push(format!("icr_mix {} must be in [0, 1]", self.icr_mix));
        }
        if !(self.yi_mix > 0.0 && self.yi_mix < 1.0) {
            problems.push(format!("yi_mix {} must be in (0, 1)", self.yi_mix));
        }
        if self.svr_epsilon <= 0.0
            || !self.svr_epsilon.is_finite()
            || self.svr_cost <= 0.0
            || !self.svr_cost.is_finite()
        {
            problems.push(format!(
                "svr epsilon {} and cost {} must be positive",
                self.svr_epsilon, self.svr_cost
            ));
        }
        if self.max_lag < 0 {
            problems.push(format!("max_lag {} must be nonnegative", self.max_lag));
        }
        if !(1..=5).contains(&self.poly_degree) {
            problems.push(format!("poly_degree {} must be in 1..=5", self.poly_degree));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems.join("; ")))
        }
    }
}
