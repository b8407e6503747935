//! Shared helpers for the integration suites: brute-force recomputation
//! of every metric straight from an article list, plus seeded random
//! corpus generation. Deliberately naive so the library and the checks
//! cannot share a bug.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use scibase::corpus::{Article, AuthorAffiliations, Corpus, CorpusBuilder};

pub fn build(articles: &[Article]) -> Corpus {
    let mut builder = CorpusBuilder::new();
    for article in articles {
        builder.push(article.clone());
    }
    builder.build()
}

fn by_id<'a>(articles: &'a [Article], id: &str) -> Option<&'a Article> {
    articles.iter().find(|a| a.id == id)
}

fn journal_of<'a>(articles: &'a [Article], id: &str) -> Option<&'a str> {
    by_id(articles, id).and_then(|a| a.journal.as_deref())
}

fn share_author(a: &Article, b: &Article) -> bool {
    a.authors.iter().any(|x| {
        b.authors
            .iter()
            .any(|y| x.trim().to_lowercase() == y.trim().to_lowercase())
    })
}

/// Citations received by `journal` where citing and cited article share at
/// least one author.
pub fn oracle_self_citations(articles: &[Article], journal: &str) -> u64 {
    let mut count = 0;
    for cited in articles {
        if cited.journal.as_deref() != Some(journal) {
            continue;
        }
        for citer in articles {
            if citer.references.contains(&cited.id) && share_author(citer, cited) {
                count += 1;
            }
        }
    }
    count
}

pub fn oracle_total_citations(articles: &[Article], journal: &str) -> u64 {
    let mut count = 0;
    for cited in articles {
        if cited.journal.as_deref() != Some(journal) {
            continue;
        }
        for citer in articles {
            if citer.references.contains(&cited.id) {
                count += 1;
            }
        }
    }
    count
}

/// (external, internal) resolvable outbound references of `journal`.
pub fn oracle_nliq_counts(articles: &[Article], journal: &str) -> (u64, u64) {
    let mut external = 0;
    let mut internal = 0;
    for citer in articles {
        if citer.journal.as_deref() != Some(journal) {
            continue;
        }
        for reference in &citer.references {
            let Some(cited) = by_id(articles, reference) else {
                continue;
            };
            if cited.journal.as_deref() == Some(journal) {
                internal += 1;
            } else {
                external += 1;
            }
        }
    }
    (external, internal)
}

pub fn oracle_nliq(articles: &[Article], journal: &str) -> f64 {
    let (a, b) = oracle_nliq_counts(articles, journal);
    if a + b == 0 {
        0.0
    } else {
        a as f64 / (a + b) as f64
    }
}

fn window_pubs<'a>(articles: &'a [Article], journal: &str, year: i32) -> Vec<&'a Article> {
    articles
        .iter()
        .filter(|a| {
            a.journal.as_deref() == Some(journal)
                && a.year.map(|y| y >= year - 3 && y < year).unwrap_or(false)
        })
        .collect()
}

pub fn oracle_rip(articles: &[Article], journal: &str, year: i32) -> Option<f64> {
    let pubs = window_pubs(articles, journal, year);
    if pubs.is_empty() {
        return None;
    }
    let mut citations = 0u64;
    for target in &pubs {
        for citer in articles {
            if citer.year == Some(year) && citer.references.contains(&target.id) {
                citations += 1;
            }
        }
    }
    Some(citations as f64 / pubs.len() as f64)
}

pub fn oracle_dcp(articles: &[Article], journal: &str, year: i32) -> Option<f64> {
    let pubs = window_pubs(articles, journal, year);
    let mut citers = BTreeSet::new();
    for target in &pubs {
        for citer in articles {
            if citer.year == Some(year) && citer.references.contains(&target.id) {
                citers.insert(citer.id.clone());
            }
        }
    }
    if citers.is_empty() {
        return None;
    }
    let mut total = 0u64;
    for id in &citers {
        let citer = by_id(articles, id).unwrap();
        for reference in &citer.references {
            if let Some(cited) = by_id(articles, reference) {
                if cited.year.map(|y| y >= year - 3 && y < year).unwrap_or(false) {
                    total += 1;
                }
            }
        }
    }
    Some(total as f64 / citers.len() as f64)
}

fn journals(articles: &[Article]) -> BTreeSet<String> {
    articles
        .iter()
        .filter_map(|a| a.journal.clone())
        .collect()
}

pub fn oracle_median_dcp(articles: &[Article], year: i32) -> Option<f64> {
    let mut values: Vec<f64> = journals(articles)
        .iter()
        .filter_map(|j| oracle_dcp(articles, j, year))
        .collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn oracle_snip(articles: &[Article], journal: &str, year: i32) -> Option<f64> {
    let rip = oracle_rip(articles, journal, year)?;
    let dcp = oracle_dcp(articles, journal, year)?;
    let median = oracle_median_dcp(articles, year)?;
    let rdcp = dcp / median;
    if rdcp == 0.0 {
        return None;
    }
    Some(rip / rdcp)
}

/// Inter-journal edge weights over the journals in `snips`, keyed by
/// (src, dst), self-loops dropped.
pub fn oracle_edges(
    articles: &[Article],
    snips: &BTreeMap<String, f64>,
) -> BTreeMap<(String, String), u64> {
    let mut edges = BTreeMap::new();
    for citer in articles {
        let Some(src) = citer.journal.as_deref() else {
            continue;
        };
        if !snips.contains_key(src) {
            continue;
        }
        for reference in &citer.references {
            let Some(dst) = journal_of(articles, reference) else {
                continue;
            };
            if !snips.contains_key(dst) || dst == src {
                continue;
            }
            *edges
                .entry((src.to_string(), dst.to_string()))
                .or_insert(0u64) += 1;
        }
    }
    edges
}

/// 1..4 code for an edge given the SNIP table, using a median with
/// ties going to the high half.
pub fn oracle_edge_type(snips: &BTreeMap<String, f64>, src: &str, dst: &str) -> u8 {
    let mut values: Vec<f64> = snips.values().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    };
    let high = |j: &str| snips[j] >= median;
    match (high(src), high(dst)) {
        (false, false) => 1,
        (false, true) => 2,
        (true, false) => 3,
        (true, true) => 4,
    }
}

/// Per-type citation shares as (count, share) in code order 1..4.
pub fn oracle_distribution(
    articles: &[Article],
    snips: &BTreeMap<String, f64>,
) -> Vec<(u64, f64)> {
    let edges = oracle_edges(articles, snips);
    let mut counts = [0u64; 4];
    for ((src, dst), weight) in &edges {
        counts[(oracle_edge_type(snips, src, dst) - 1) as usize] += weight;
    }
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|c| {
            let share = if total == 0 {
                0.0
            } else {
                *c as f64 / total as f64
            };
            (*c, share)
        })
        .collect()
}

/// Neumaier-compensated sum, for the extended-precision fit oracles.
fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Closed-form least-squares line via compensated sums; (slope, intercept).
pub fn oracle_linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx = neumaier_sum(x.iter().copied());
    let sy = neumaier_sum(y.iter().copied());
    let sxx = neumaier_sum(x.iter().map(|v| v * v));
    let sxy = neumaier_sum(x.iter().zip(y).map(|(a, b)| a * b));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    ((n * sxy - sx * sy) / (n * sxx - sx * sx), (sy - slope * sx) / n)
}

/// Normal-equation polynomial oracle, ascending coefficients, solved by
/// unpivoted Gauss-Jordan over compensated sums.
#[allow(clippy::needless_range_loop)]
pub fn oracle_poly_fit(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let terms = degree + 1;
    let mut a: Vec<Vec<f64>> = (0..terms)
        .map(|i| {
            (0..terms)
                .map(|j| neumaier_sum(x.iter().map(|v| v.powi((i + j) as i32))))
                .collect()
        })
        .collect();
    let mut b: Vec<f64> = (0..terms)
        .map(|i| neumaier_sum(x.iter().zip(y).map(|(v, w)| v.powi(i as i32) * w)))
        .collect();
    for col in 0..terms {
        let pivot = a[col][col];
        for k in 0..terms {
            a[col][k] /= pivot;
        }
        b[col] /= pivot;
        for row in 0..terms {
            if row != col {
                let f = a[row][col];
                for k in 0..terms {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    b
}

/// Dense grid search for y = a e^{bx} minimizing squared error.
pub fn oracle_exp_fit(
    x: &[f64],
    y: &[f64],
    a_range: (f64, f64),
    b_range: (f64, f64),
    steps: usize,
) -> (f64, f64) {
    let sse = |a: f64, b: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(x, y)| (y - a * (b * x).exp()).powi(2))
            .sum()
    };
    let mut best = (a_range.0, b_range.0);
    let mut best_sse = f64::INFINITY;
    for i in 0..=steps {
        let a = a_range.0 + (a_range.1 - a_range.0) * i as f64 / steps as f64;
        for j in 0..=steps {
            let b = b_range.0 + (b_range.1 - b_range.0) * j as f64 / steps as f64;
            let s = sse(a, b);
            if s < best_sse {
                best_sse = s;
                best = (a, b);
            }
        }
    }
    best
}

const COUNTRIES: [&str; 6] = [
    "United States",
    "Spain",
    "Germany",
    "Japan",
    "India",
    "Brazil",
];

pub fn country_map() -> scibase::corpus::CountryMap {
    let mut map = scibase::corpus::CountryMap::empty();
    for c in COUNTRIES {
        map.insert(c, c).unwrap();
    }
    map
}

/// Knobs for [`random_articles`].
pub struct CorpusShape {
    pub articles: usize,
    pub journals: usize,
    pub year_span: i32,
    pub base_year: i32,
    /// Chance that an article in journal 0 cites outside it drops to zero,
    /// isolating that journal, when set.
    pub isolate_first_journal: bool,
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            articles: 60,
            journals: 5,
            year_span: 6,
            base_year: 2006,
            isolate_first_journal: false,
        }
    }
}

/// A random but well-formed article list: every reference resolves, no
/// duplicate ids, authors drawn from a shared pool so self-citations occur.
pub fn random_articles(seed: u64, shape: &CorpusShape) -> Vec<Article> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let author_pool: Vec<String> = (0..(shape.articles / 2).max(4))
        .map(|i| format!("Author {i}"))
        .collect();
    let mut articles: Vec<Article> = Vec::with_capacity(shape.articles);
    for i in 0..shape.articles {
        let journal = rng.gen_range(0..shape.journals);
        let year = shape.base_year + rng.gen_range(0..=shape.year_span);
        let author_count = rng.gen_range(1..=3);
        let mut authors: Vec<String> = Vec::new();
        while authors.len() < author_count {
            let pick = author_pool.choose(&mut rng).unwrap().clone();
            if !authors.contains(&pick) {
                authors.push(pick);
            }
        }
        let mut affiliations = Vec::new();
        for author in &authors {
            if rng.gen_bool(0.8) {
                affiliations.push(AuthorAffiliations {
                    author: author.clone(),
                    affiliations: vec![format!(
                        "Dept {}, Univ {}, {}",
                        rng.gen_range(0..9),
                        rng.gen_range(0..9),
                        COUNTRIES.choose(&mut rng).unwrap()
                    )],
                });
            }
        }

        // cite only already-created articles so everything resolves
        let mut references: Vec<String> = Vec::new();
        if i > 0 {
            for _ in 0..rng.gen_range(0..=4usize.min(i)) {
                let target = &articles[rng.gen_range(0..i)];
                if shape.isolate_first_journal {
                    let src_isolated = journal == 0;
                    let dst_isolated = target.journal.as_deref() == Some("Journal 0");
                    if src_isolated != dst_isolated {
                        continue;
                    }
                }
                if !references.contains(&target.id) {
                    references.push(target.id.clone());
                }
            }
        }
        articles.push(Article {
            id: format!("P{i:04}"),
            title: format!("Study {i}"),
            authors,
            year: Some(year),
            journal: Some(format!("Journal {journal}")),
            references,
            affiliations,
        });
    }
    articles
}
