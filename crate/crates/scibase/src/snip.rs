//! Source-Normalized Impact per Paper.
//!
//! RIP is the citations made in year X to a journal's publications of years
//! X-3..X-1, divided by the count of those publications. DCP is the mean
//! number of 1-3 year old references in the year-X papers citing those
//! publications. SNIP = RIP / (DCP / median DCP over all journals).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;

/// Length of the cited-publication window in years.
pub const CITATION_WINDOW: i32 = 3;

#[derive(Debug, Error)]
pub enum SnipError {
    #[error("unknown journal: {0:?}")]
    UnknownJournal(String),
    #[error("RIP undefined for {journal:?} at {year}: no publications in window")]
    UndefinedRip { journal: String, year: i32 },
    #[error("DCP undefined for {journal:?} at {year}: no citing papers")]
    UndefinedDcp { journal: String, year: i32 },
    #[error("no journal has a defined DCP at {year}")]
    NoDcpDefined { year: i32 },
    #[error("degenerate normalization for {journal:?} at {year}: relative DCP is zero")]
    DegenerateNormalization { journal: String, year: i32 },
}

/// SNIP and its intermediate quantities for one (journal, year).
#[derive(Debug, Clone, Serialize)]
pub struct SnipReport {
    pub journal: String,
    pub year: i32,
    pub rip: f64,
    pub dcp: f64,
    pub rdcp: f64,
    pub snip: f64,
    pub cited_pub_count: u64,
    pub citing_paper_count: u64,
}

struct WindowStats {
    pub_count: u64,
    citation_count: u64,
    citing: BTreeSet<String>,
}

fn window_stats(journal: &str, year: i32, corpus: &Corpus) -> Result<WindowStats, SnipError> {
    corpus
        .journal(journal)
        .ok_or_else(|| SnipError::UnknownJournal(journal.to_string()))?;
    let mut pub_count = 0u64;
    let mut citation_count = 0u64;
    let mut citing = BTreeSet::new();
    for y in (year - CITATION_WINDOW)..year {
        for id in corpus.by_journal_year(journal, y) {
            pub_count += 1;
            for citer in corpus.cited_by(id) {
                let citer_year = corpus.article(citer).and_then(|a| a.year);
                if citer_year == Some(year) {
                    citation_count += 1;
                    citing.insert(citer.clone());
                }
            }
        }
    }
    Ok(WindowStats {
        pub_count,
        citation_count,
        citing,
    })
}

fn in_window_reference_count(citer: &str, year: i32, corpus: &Corpus) -> u64 {
    let article = match corpus.article(citer) {
        Some(a) => a,
        None => return 0,
    };
    article
        .references
        .iter()
        .filter(|r| {
            corpus
                .article(r)
                .and_then(|t| t.year)
                .map(|y| y >= year - CITATION_WINDOW && y < year)
                .unwrap_or(false)
        })
        .count() as u64
}

/// Raw impact per paper of `journal` at `year`.
pub fn rip(journal: &str, year: i32, corpus: &Corpus) -> Result<f64, SnipError> {
    let stats = window_stats(journal, year, corpus)?;
    if stats.pub_count == 0 {
        return Err(SnipError::UndefinedRip {
            journal: journal.to_string(),
            year,
        });
    }
    Ok(stats.citation_count as f64 / stats.pub_count as f64)
}

/// Database citation potential: mean in-window reference count of the
/// year-X papers citing the journal's window publications.
pub fn dcp(journal: &str, year: i32, corpus: &Corpus) -> Result<f64, SnipError> {
    let stats = window_stats(journal, year, corpus)?;
    dcp_from_stats(journal, year, corpus, &stats)
}

fn dcp_from_stats(
    journal: &str,
    year: i32,
    corpus: &Corpus,
    stats: &WindowStats,
) -> Result<f64, SnipError> {
    if stats.citing.is_empty() {
        return Err(SnipError::UndefinedDcp {
            journal: journal.to_string(),
            year,
        });
    }
    let total: u64 = stats
        .citing
        .iter()
        .map(|citer| in_window_reference_count(citer, year, corpus))
        .sum();
    Ok(total as f64 / stats.citing.len() as f64)
}

/// Median over the defined DCP values of all journals; for an even count,
/// the mean of the two middle values.
pub fn median_dcp(corpus: &Corpus, year: i32) -> Result<f64, SnipError> {
    let names: Vec<&str> = corpus.journal_names().collect();
    let mut values: Vec<f64> = names
        .par_iter()
        .filter_map(|name| dcp(name, year, corpus).ok())
        .collect();
    if values.is_empty() {
        return Err(SnipError::NoDcpDefined { year });
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("dcp values are finite"));
    Ok(median_of_sorted(&values))
}

pub(crate) fn median_of_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// SNIP for one journal, recomputing the corpus median.
pub fn snip(journal: &str, year: i32, corpus: &Corpus) -> Result<SnipReport, SnipError> {
    let median = median_dcp(corpus, year)?;
    snip_with_median(journal, year, corpus, median)
}

/// SNIP for one journal against a precomputed `median` DCP.
pub fn snip_with_median(
    journal: &str,
    year: i32,
    corpus: &Corpus,
    median: f64,
) -> Result<SnipReport, SnipError> {
    let stats = window_stats(journal, year, corpus)?;
    if stats.pub_count == 0 {
        return Err(SnipError::UndefinedRip {
            journal: journal.to_string(),
            year,
        });
    }
    let rip = stats.citation_count as f64 / stats.pub_count as f64;
    let dcp = dcp_from_stats(journal, year, corpus, &stats)?;
    let rdcp = dcp / median;
    if rdcp <= 0.0 || !rdcp.is_finite() {
        return Err(SnipError::DegenerateNormalization {
            journal: journal.to_string(),
            year,
        });
    }
    Ok(SnipReport {
        journal: journal.to_string(),
        year,
        rip,
        dcp,
        rdcp,
        snip: rip / rdcp,
        cited_pub_count: stats.pub_count,
        citing_paper_count: stats.citing.len() as u64,
    })
}

/// SNIP reports for every journal where it is defined at `year`, plus the
/// journals where it is not.
#[derive(Debug, Serialize)]
pub struct SnipTable {
    pub year: i32,
    pub median_dcp: f64,
    pub max_snip: f64,
    pub reports: BTreeMap<String, SnipReport>,
    pub undefined: Vec<String>,
}

impl SnipTable {
    /// snip / max snip over the scored set (x3 of the scoring model).
    pub fn snip_norm(&self, journal: &str) -> Option<f64> {
        let report = self.reports.get(journal)?;
        if self.max_snip > 0.0 {
            Some(report.snip / self.max_snip)
        } else {
            Some(0.0)
        }
    }

    pub fn snip_values(&self) -> BTreeMap<String, f64> {
        self.reports
            .iter()
            .map(|(name, report)| (name.clone(), report.snip))
            .collect()
    }
}

/// Compute SNIP for every journal of the corpus at `year`.
pub fn snip_table(corpus: &Corpus, year: i32) -> Result<SnipTable, SnipError> {
    let median = median_dcp(corpus, year)?;
    let names: Vec<&str> = corpus.journal_names().collect();
    let results: Vec<(String, Result<SnipReport, SnipError>)> = names
        .par_iter()
        .map(|name| (name.to_string(), snip_with_median(name, year, corpus, median)))
        .collect();
    let mut reports = BTreeMap::new();
    let mut undefined = Vec::new();
    for (name, result) in results {
        match result {
            Ok(report) => {
                reports.insert(name, report);
            }
            Err(_) => undefined.push(name),
        }
    }
    let max_snip = reports
        .values()
        .map(|r| r.snip)
        .fold(0.0f64, f64::max);
    Ok(SnipTable {
        year,
        median_dcp: median,
        max_snip,
        reports,
        undefined,
    })
}

/// Write the SNIP report export: `journal,year,rip,dcp,rdcp,snip`.
pub fn write_snip_csv<W: Write>(table: &SnipTable, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["journal", "year", "rip", "dcp", "rdcp", "snip"])?;
    for report in table.reports.values() {
        w.write_record([
            report.journal.clone(),
            report.year.to_string(),
            report.rip.to_string(),
            report.dcp.to_string(),
            report.rdcp.to_string(),
            report.snip.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
