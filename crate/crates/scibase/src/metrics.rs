//! Per-journal influence factors: self-citations and the other-citation
//! quotient (x1), the international collaboration ratio (x2) and the
//! non-local influence quotient (x4).
//!
//! All operations are pure reads over an immutable [`Corpus`] and may run
//! in parallel across journals.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{primary_affiliations, Affiliation, Corpus, CountryMap, UNKNOWN_COUNTRY};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("unknown journal: {0:?}")]
    UnknownJournal(String),
    #[error("self-citations ({self_cites}) exceed total citations ({total})")]
    SelfExceedsTotal { self_cites: u64, total: u64 },
    #[error("mix weight {0} outside [0, 1]")]
    InvalidMix(f64),
}

/// The per-journal factor row. `ocq`, `icr`, `snip_norm` and `nliq` are the
/// normalized factors x1..x4 of the scoring model.
#[derive(Debug, Clone, Serialize)]
pub struct JournalMetrics {
    pub journal: String,
    pub total_citations: u64,
    pub self_citations: u64,
    pub ocq: f64,
    pub icr: f64,
    pub snip: Option<f64>,
    pub snip_norm: f64,
    pub nliq: f64,
    pub internal_out: u64,
    pub external_out: u64,
}

/// Breakdown of the international collaboration ratio.
#[derive(Debug, Clone, Serialize)]
pub struct IcrReport {
    /// alpha * x + (1 - alpha) * y
    pub value: f64,
    /// x: fraction of (author, article) entries foreign to the journal country.
    pub matrix_ratio: f64,
    /// y: mean per-article country-diversity weight.
    pub mean_weight: f64,
    pub entries: u64,
    pub foreign_entries: u64,
    pub scorable_articles: u64,
    /// Authors whose primary affiliation country could not be resolved.
    pub unresolved_authors: u64,
    /// Set when the journal had no scorable article at all.
    pub flagged: bool,
}

/// Count inbound (citing -> cited) pairs where the cited article belongs to
/// `journal` and the two articles share at least one author after cleansing
/// and case-folding.
pub fn self_citation_count(journal: &str, corpus: &Corpus) -> Result<u64, MetricsError> {
    let record = corpus
        .journal(journal)
        .ok_or_else(|| MetricsError::UnknownJournal(journal.to_string()))?;
    let mut count = 0u64;
    for cited in &record.article_ids {
        let cited_authors = match corpus.author_keys(cited) {
            Some(keys) if !keys.is_empty() => keys,
            _ => continue,
        };
        for citing in corpus.cited_by(cited) {
            if let Some(citing_authors) = corpus.author_keys(citing) {
                if citing_authors.iter().any(|a| cited_authors.contains(a)) {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

/// Total inbound citations received by the journal's articles.
pub fn total_citation_count(journal: &str, corpus: &Corpus) -> Result<u64, MetricsError> {
    let record = corpus
        .journal(journal)
        .ok_or_else(|| MetricsError::UnknownJournal(journal.to_string()))?;
    Ok(record
        .article_ids
        .iter()
        .map(|id| corpus.cited_by(id).len() as u64)
        .sum())
}

/// 1 - self/total; 1 by convention when total is zero.
pub fn other_citation_quotient(self_cites: u64, total: u64) -> Result<f64, MetricsError> {
    if self_cites > total {
        return Err(MetricsError::SelfExceedsTotal { self_cites, total });
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(1.0 - self_cites as f64 / total as f64)
}

/// Outgoing reference counts of a journal: `(external, internal)`.
///
/// Only references that resolve within the corpus are counted; a resolved
/// target whose venue differs from (or is missing relative to) the journal
/// counts as external.
pub fn nliq_counts(journal: &str, corpus: &Corpus) -> Result<(u64, u64), MetricsError> {
    let record = corpus
        .journal(journal)
        .ok_or_else(|| MetricsError::UnknownJournal(journal.to_string()))?;
    let mut external = 0u64;
    let mut internal = 0u64;
    for id in &record.article_ids {
        let article = corpus.article(id).expect("journal index is consistent");
        for reference in &article.references {
            if let Some(target) = corpus.article(reference) {
                match &target.journal {
                    Some(j) if j == journal => internal += 1,
                    _ => external += 1,
                }
            }
        }
    }
    Ok((external, internal))
}

/// A / (A + B); 0 when the journal made no resolvable citations.
pub fn nliq(journal: &str, corpus: &Corpus) -> Result<f64, MetricsError> {
    let (external, internal) = nliq_counts(journal, corpus)?;
    let total = external + internal;
    if total == 0 {
        return Ok(0.0);
    }
    Ok(external as f64 / total as f64)
}

/// Country-diversity weight of one article from its authors' primary
/// affiliations. Authors with an unresolved country are excluded; `None`
/// when no author remains.
///
/// With n counted authors, d distinct countries and m the largest
/// same-country group: 0 when d = 1, 1 when d = n, otherwise 1 - m/n.
pub fn article_collab_weight(affiliations: &[Affiliation]) -> Option<f64> {
    let countries: Vec<&str> = affiliations
        .iter()
        .filter(|a| a.rank == 1 && a.country != UNKNOWN_COUNTRY)
        .map(|a| a.country.as_str())
        .collect();
    let n = countries.len();
    if n == 0 {
        return None;
    }
    let mut counts: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for c in &countries {
        *counts.entry(c).or_default() += 1;
    }
    let distinct = counts.len();
    let largest = counts.values().copied().max().unwrap_or(0);
    let weight = if distinct == 1 {
        0.0
    } else if distinct == n {
        1.0
    } else {
        1.0 - largest as f64 / n as f64
    };
    Some(weight)
}

/// International collaboration ratio of a journal: `mix * x + (1 - mix) * y`
/// where x is the foreign-entry ratio of the author/country matrix and y the
/// mean article diversity weight.
pub fn intl_collab_ratio(
    journal: &str,
    corpus: &Corpus,
    map: &CountryMap,
    mix: f64,
) -> Result<IcrReport, MetricsError> {
    if !(0.0..=1.0).contains(&mix) || !mix.is_finite() {
        return Err(MetricsError::InvalidMix(mix));
    }
    let record = corpus
        .journal(journal)
        .ok_or_else(|| MetricsError::UnknownJournal(journal.to_string()))?;
    let journal_country = record.country.as_str();

    let mut entries = 0u64;
    let mut foreign = 0u64;
    let mut unresolved = 0u64;
    let mut weight_sum = 0.0f64;
    let mut scorable = 0u64;

    for id in &record.article_ids {
        let article = corpus.article(id).expect("journal index is consistent");
        let affs = primary_affiliations(article, map);
        unresolved += affs
            .iter()
            .filter(|a| a.country == UNKNOWN_COUNTRY)
            .count() as u64;
        for aff in affs.iter().filter(|a| a.country != UNKNOWN_COUNTRY) {
            entries += 1;
            // UNKNOWN journal country matches no author country.
            if journal_country == UNKNOWN_COUNTRY || aff.country != journal_country {
                foreign += 1;
            }
        }
        if let Some(weight) = article_collab_weight(&affs) {
            weight_sum += weight;
            scorable += 1;
        }
    }

    if scorable == 0 {
        return Ok(IcrReport {
            value: 0.0,
            matrix_ratio: 0.0,
            mean_weight: 0.0,
            entries,
            foreign_entries: foreign,
            scorable_articles: 0,
            unresolved_authors: unresolved,
            flagged: true,
        });
    }
    let matrix_ratio = foreign as f64 / entries as f64;
    let mean_weight = weight_sum / scorable as f64;
    Ok(IcrReport {
        value: mix * matrix_ratio + (1.0 - mix) * mean_weight,
        matrix_ratio,
        mean_weight,
        entries,
        foreign_entries: foreign,
        scorable_articles: scorable,
        unresolved_authors: unresolved,
        flagged: false,
    })
}

/// Assemble the full factor row for one journal. `snip`/`snip_norm` are
/// supplied by the snip module (`None` when undefined at the chosen year).
pub fn journal_metrics(
    journal: &str,
    corpus: &Corpus,
    map: &CountryMap,
    icr_mix: f64,
    snip: Option<f64>,
    snip_norm: f64,
) -> Result<JournalMetrics, MetricsError> {
    let self_citations = self_citation_count(journal, corpus)?;
    let total_citations = total_citation_count(journal, corpus)?;
    let ocq = other_citation_quotient(self_citations, total_citations)?;
    let icr = intl_collab_ratio(journal, corpus, map, icr_mix)?;
    let (external_out, internal_out) = nliq_counts(journal, corpus)?;
    let denom = external_out + internal_out;
    let nliq = if denom == 0 {
        0.0
    } else {
        external_out as f64 / denom as f64
    };
    Ok(JournalMetrics {
        journal: journal.to_string(),
        total_citations,
        self_citations,
        ocq,
        icr: icr.value,
        snip,
        snip_norm,
        nliq,
        internal_out,
        external_out,
    })
}

/// Write the metric table export:
/// `journal,total_cites,self_cites,ocq,icr,snip,snip_norm,nliq`.
pub fn write_metrics_csv<W: Write>(rows: &[JournalMetrics], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "journal",
        "total_cites",
        "self_cites",
        "ocq",
        "icr",
        "snip",
        "snip_norm",
        "nliq",
    ])?;
    for row in rows {
        w.write_record([
            row.journal.clone(),
            row.total_citations.to_string(),
            row.self_citations.to_string(),
            row.ocq.to_string(),
            row.icr.to_string(),
            row.snip.map(|s| s.to_string()).unwrap_or_default(),
            row.snip_norm.to_string(),
            row.nliq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
