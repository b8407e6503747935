//! Cobb-Douglas internationality model: scoring, elasticity fitting under
//! the decreasing-returns constraint, concavity checking and the convex
//! combination with an external influence score.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, CountryMap};
use crate::metrics::{self, MetricsError};
use crate::snip;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid elasticities: {0}")]
    InvalidElasticities(String),
    #[error("no feasible grid point for bounds [{lo}, {hi}], step {step}, slack {delta}")]
    EmptyGrid {
        lo: f64,
        hi: f64,
        step: f64,
        delta: f64,
    },
    #[error("empty feature table")]
    EmptyTable,
    #[error("mix weight {0} outside (0, 1)")]
    InvalidMix(f64),
    #[error("feature vector has {got} components, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// The normalized factors x1..x4 of one journal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureVector {
    pub ocq: f64,
    pub icr: f64,
    pub snip_norm: f64,
    pub nliq: f64,
}

impl FeatureVector {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.ocq, self.icr, self.snip_norm, self.nliq]
    }
}

/// Scale constant A and one elasticity per factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CobbDouglasModel {
    pub scale: f64,
    pub elasticities: Vec<f64>,
}

impl CobbDouglasModel {
    /// Elasticities must be positive and finite; the returns-to-scale
    /// constraint is enforced by the fitter and reported by
    /// [`concavity_check`], not here.
    pub fn new(scale: f64, elasticities: Vec<f64>) -> Result<Self, ModelError> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(ModelError::InvalidElasticities(format!(
                "scale constant must be positive, got {scale}"
            )));
        }
        if elasticities.is_empty() {
            return Err(ModelError::InvalidElasticities(
                "at least one elasticity is required".into(),
            ));
        }
        if let Some(bad) = elasticities.iter().find(|a| **a <= 0.0 || !a.is_finite()) {
            return Err(ModelError::InvalidElasticities(format!(
                "elasticities must be positive, got {bad}"
            )));
        }
        Ok(Self {
            scale,
            elasticities,
        })
    }

    pub fn elasticity_sum(&self) -> f64 {
        self.elasticities.iter().sum()
    }

    /// 1 - sum of elasticities.
    pub fn constraint_slack(&self) -> f64 {
        1.0 - self.elasticity_sum()
    }
}

/// Evaluate A * prod x_i^alpha_i. Zero if any factor is zero, so a journal
/// with no non-local influence scores zero regardless of the others.
pub fn cobb_douglas(factors: &[f64], model: &CobbDouglasModel) -> f64 {
    assert_eq!(
        factors.len(),
        model.elasticities.len(),
        "factor count must match the model"
    );
    if factors.contains(&0.0) {
        return 0.0;
    }
    let mut score = model.scale;
    for (x, alpha) in factors.iter().zip(&model.elasticities) {
        score *= x.powf(*alpha);
    }
    score
}

/// A fitted model together with its objective (mean score over the table).
#[derive(Debug, Clone, Serialize)]
pub struct FittedModel {
    pub model: CobbDouglasModel,
    pub objective: f64,
    pub grid_points: u64,
}

fn mean_score(rows: &[Vec<f64>], model: &CobbDouglasModel) -> f64 {
    let total: f64 = rows.iter().map(|row| cobb_douglas(row, model)).sum();
    total / rows.len() as f64
}

/// Grid-search the elasticity vector maximizing the mean score over
/// `rows`, with each elasticity in `[lo, hi]` in increments of `step` and
/// the sum constrained to `<= 1 - delta`. Ties break toward the smallest
/// elasticity sum, then lexicographically smallest vector.
pub fn fit_elasticities(
    rows: &[Vec<f64>],
    scale: f64,
    bounds: (f64, f64),
    step: f64,
    delta: f64,
) -> Result<FittedModel, ModelError> {
    let (lo, hi) = bounds;
    if rows.is_empty() {
        return Err(ModelError::EmptyTable);
    }
    let factors = rows[0].len();
    if factors == 0 || rows.iter().any(|r| r.len() != factors) {
        return Err(ModelError::DimensionMismatch {
            expected: factors,
            got: rows.iter().map(Vec::len).find(|l| *l != factors).unwrap_or(0),
        });
    }
    if !(0.0 < lo && lo <= hi && hi < 1.0) || step <= 0.0 || step.is_nan() {
        return Err(ModelError::InvalidElasticities(format!(
            "bounds [{lo}, {hi}] with step {step} are invalid"
        )));
    }

    let mut axis = Vec::new();
    let mut k = 0u32;
    loop {
        let v = lo + step * f64::from(k);
        if v > hi + 1e-9 {
            break;
        }
        axis.push(v);
        k += 1;
    }

    let budget = 1.0 - delta + 1e-9;
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (objective, sum, vector)
    let mut grid_points = 0u64;
    let mut current = vec![0.0; factors];
    enumerate_grid(&axis, &mut current, 0, 0.0, budget, &mut |alphas, sum| {
        grid_points += 1;
        let model = CobbDouglasModel {
            scale,
            elasticities: alphas.to_vec(),
        };
        let objective = mean_score(rows, &model);
        let replace = match &best {
            None => true,
            Some((best_obj, best_sum, _)) => {
                objective > *best_obj || (objective == *best_obj && sum < *best_sum)
            }
        };
        if replace {
            best = Some((objective, sum, alphas.to_vec()));
        }
    });

    match best {
        Some((objective, _, elasticities)) => Ok(FittedModel {
            model: CobbDouglasModel {
                scale,
                elasticities,
            },
            objective,
            grid_points,
        }),
        None => Err(ModelError::EmptyGrid {
            lo,
            hi,
            step,
            delta,
        }),
    }
}

fn enumerate_grid(
    axis: &[f64],
    current: &mut Vec<f64>,
    index: usize,
    sum: f64,
    budget: f64,
    visit: &mut impl FnMut(&[f64], f64),
) {
    if index == current.len() {
        visit(current, sum);
        return;
    }
    for v in axis {
        let next = sum + v;
        if next > budget {
            break; // axis is ascending
        }
        current[index] = *v;
        enumerate_grid(axis, current, index + 1, next, budget, visit);
    }
}

/// Projected coordinate ascent around a fitted model: nudge one elasticity
/// at a time, halving the step until the mean-score improvement falls
/// below `tolerance`. Stays inside the bounds and the slack constraint.
pub fn refine_elasticities(
    fit: &FittedModel,
    rows: &[Vec<f64>],
    bounds: (f64, f64),
    initial_step: f64,
    delta: f64,
    tolerance: f64,
) -> FittedModel {
    let (lo, hi) = bounds;
    let budget = 1.0 - delta + 1e-12;
    let mut alphas = fit.model.elasticities.clone();
    let mut objective = fit.objective;
    let mut h = initial_step / 2.0;
    while h > tolerance {
        let mut improved = false;
        for i in 0..alphas.len() {
            for dir in [-1.0, 1.0] {
                let candidate = (alphas[i] + dir * h).clamp(lo, hi);
                if candidate == alphas[i] {
                    continue;
                }
                let sum: f64 = alphas.iter().sum::<f64>() - alphas[i] + candidate;
                if sum > budget {
                    continue;
                }
                let mut trial = alphas.clone();
                trial[i] = candidate;
                let trial_obj = mean_score(
                    rows,
                    &CobbDouglasModel {
                        scale: fit.model.scale,
                        elasticities: trial.clone(),
                    },
                );
                if trial_obj > objective + tolerance {
                    alphas = trial;
                    objective = trial_obj;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    FittedModel {
        model: CobbDouglasModel {
            scale: fit.model.scale,
            elasticities: alphas,
        },
        objective,
        grid_points: fit.grid_points,
    }
}

/// First- and second-order principal minors of the two-factor Hessian,
/// evaluated at a probe point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrincipalMinors {
    pub m1: f64,
    pub m1_prime: f64,
    pub m2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Populated for two-factor models only.
    pub minors: Option<PrincipalMinors>,
}

/// Concave iff all elasticities are nonnegative and their sum is at most 1.
/// For two-factor models the Hessian principal minors are evaluated at
/// probe point (0.5, 0.5).
pub fn concavity_check(model: &CobbDouglasModel) -> ConcavityReport {
    concavity_check_at(model, &[0.5, 0.5])
}

/// [`concavity_check`] with an explicit two-factor probe point.
pub fn concavity_check_at(model: &CobbDouglasModel, probe: &[f64]) -> ConcavityReport {
    let sum = model.elasticity_sum();
    let concave = model.elasticities.iter().all(|a| *a >= 0.0) && sum <= 1.0;
    let minors = if model.elasticities.len() == 2 && probe.len() == 2 {
        let (alpha, beta) = (model.elasticities[0], model.elasticities[1]);
        let (x1, x2) = (probe[0], probe[1]);
        let k = model.scale;
        Some(PrincipalMinors {
            m1: alpha * (alpha - 1.0) * k * x1.powf(alpha - 2.0) * x2.powf(beta),
            m1_prime: beta * (beta - 1.0) * k * x1.powf(alpha) * x2.powf(beta - 2.0),
            m2: k * alpha * beta
                * x1.powf(2.0 * alpha - 2.0)
                * x2.powf(2.0 * beta - 2.0)
                * (1.0 - (alpha + beta)),
        })
    } else {
        None
    };
    ConcavityReport { concave, minors }
}

/// Convex combination YI = mix * jis + (1 - mix) * jimi.
pub fn combine_scores(jis: f64, jimi: f64, mix: f64) -> Result<f64, ModelError> {
    if !(mix > 0.0 && mix < 1.0) {
        return Err(ModelError::InvalidMix(mix));
    }
    Ok(mix * jis + (1.0 - mix) * jimi)
}

/// Configuration for [`score_corpus`].
#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub snip_year: i32,
    pub icr_mix: f64,
    pub yi_mix: f64,
    pub scale: f64,
    pub alpha_bounds: (f64, f64),
    pub alpha_step: f64,
    pub alpha_delta: f64,
    /// Skip fitting and use this elasticity vector as-is.
    pub fixed_elasticities: Option<Vec<f64>>,
    /// Apply coordinate-ascent refinement after the grid search.
    pub refine: bool,
    /// Externally supplied influence scores, combined into `yi`.
    pub jis: BTreeMap<String, f64>,
}

impl ScoreConfig {
    pub fn new(snip_year: i32) -> Self {
        Self {
            snip_year,
            icr_mix: 0.5,
            yi_mix: 0.5,
            scale: 1.0,
            alpha_bounds: (0.1, 0.9),
            alpha_step: 0.1,
            alpha_delta: 0.01,
            fixed_elasticities: None,
            refine: false,
            jis: BTreeMap::new(),
        }
    }
}

/// One scored journal.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreRow {
    pub rank: usize,
    pub journal: String,
    pub features: FeatureVector,
    pub jimi: f64,
    pub jis: Option<f64>,
    pub yi: Option<f64>,
    /// False when SNIP was undefined for this journal and x3 fell back to 0.
    pub snip_defined: bool,
}

#[derive(Debug, Serialize)]
pub struct ScoreOutcome {
    pub rows: Vec<ScoreRow>,
    pub model: CobbDouglasModel,
    pub objective: f64,
    /// Journals scored with x3 = 0 because SNIP was undefined.
    pub snip_undefined: Vec<String>,
    pub metrics: Vec<metrics::JournalMetrics>,
}

/// The end-to-end driver: compute x1..x4 for every journal, fit or load the
/// elasticities, evaluate the internationality score and sort descending.
pub fn score_corpus(
    corpus: &Corpus,
    map: &CountryMap,
    config: &ScoreConfig,
) -> Result<ScoreOutcome, ModelError> {
    let snip_table = snip::snip_table(corpus, config.snip_year).ok();
    let names: Vec<String> = corpus.journal_names().map(str::to_string).collect();

    let metric_rows: Vec<Result<metrics::JournalMetrics, MetricsError>> = names
        .par_iter()
        .map(|name| {
            let (snip_value, snip_norm) = match &snip_table {
                Some(table) => (
                    table.reports.get(name).map(|r| r.snip),
                    table.snip_norm(name).unwrap_or(0.0),
                ),
                None => (None, 0.0),
            };
            metrics::journal_metrics(name, corpus, map, config.icr_mix, snip_value, snip_norm)
        })
        .collect();
    let mut rows = Vec::with_capacity(names.len());
    for result in metric_rows {
        rows.push(result?);
    }

    let features: Vec<FeatureVector> = rows
        .iter()
        .map(|m| FeatureVector {
            ocq: m.ocq,
            icr: m.icr,
            snip_norm: m.snip_norm,
            nliq: m.nliq,
        })
        .collect();
    let table: Vec<Vec<f64>> = features.iter().map(|f| f.to_vec()).collect();

    let (model, objective) = match &config.fixed_elasticities {
        Some(alphas) => {
            if alphas.len() != 4 {
                return Err(ModelError::DimensionMismatch {
                    expected: 4,
                    got: alphas.len(),
                });
            }
            let model = CobbDouglasModel::new(config.scale, alphas.clone())?;
            let objective = if table.is_empty() {
                0.0
            } else {
                mean_score(&table, &model)
            };
            (model, objective)
        }
        None => {
            if table.is_empty() {
                return Err(ModelError::EmptyTable);
            }
            let mut fit = fit_elasticities(
                &table,
                config.scale,
                config.alpha_bounds,
                config.alpha_step,
                config.alpha_delta,
            )?;
            if config.refine {
                fit = refine_elasticities(
                    &fit,
                    &table,
                    config.alpha_bounds,
                    config.alpha_step,
                    config.alpha_delta,
                    1e-6,
                );
            }
            (fit.model, fit.objective)
        }
    };

    let snip_undefined: Vec<String> = rows
        .iter()
        .filter(|m| m.snip.is_none())
        .map(|m| m.journal.clone())
        .collect();

    let mut scored: Vec<ScoreRow> = rows
        .iter()
        .zip(&features)
        .map(|(m, features)| {
            let jimi = cobb_douglas(&features.to_vec(), &model);
            let jis = config.jis.get(&m.journal).copied();
            let yi = match jis {
                Some(jis) => Some(combine_scores(jis, jimi, config.yi_mix)?),
                None => None,
            };
            Ok(ScoreRow {
                rank: 0,
                journal: m.journal.clone(),
                features: *features,
                jimi,
                jis,
                yi,
                snip_defined: m.snip.is_some(),
            })
        })
        .collect::<Result<_, ModelError>>()?;
    scored.sort_by(|a, b| {
        b.jimi
            .partial_cmp(&a.jimi)
            .expect("scores are finite")
            .then_with(|| a.journal.cmp(&b.journal))
    });
    for (i, row) in scored.iter_mut().enumerate() {
        row.rank = i + 1;
    }

    Ok(ScoreOutcome {
        rows: scored,
        model,
        objective,
        snip_undefined,
        metrics: rows,
    })
}

/// Write the score export: `rank,journal,x1,x2,x3,x4,jimi,jis,yi`.
pub fn write_score_csv<W: std::io::Write>(rows: &[ScoreRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "journal", "x1", "x2", "x3", "x4", "jimi", "jis", "yi"])?;
    for row in rows {
        w.write_record([
            row.rank.to_string(),
            row.journal.clone(),
            row.features.ocq.to_string(),
            row.features.icr.to_string(),
            row.features.snip_norm.to_string(),
            row.features.nliq.to_string(),
            row.jimi.to_string(),
            row.jis.map(|v| v.to_string()).unwrap_or_default(),
            row.yi.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
