//! Citation corpus: parsing, cleansing and indexing.
//!
//! The corpus is built once from a flat-text citation dump (or its JSONL
//! equivalent) plus optional journal-country and country-alias files, and
//! is immutable afterwards. All downstream modules read it concurrently.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentinel for a country that could not be resolved against the alias list.
pub const UNKNOWN_COUNTRY: &str = "UNKNOWN";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("no parseable records in {path}")]
    NoRecords { path: String },
    #[error("conflicting country aliases: {alias:?} maps to both {first:?} and {second:?}")]
    AliasConflict {
        alias: String,
        first: String,
        second: String,
    },
    #[error("bad csv row in {path}: {msg}")]
    BadCsv { path: String, msg: String },
}

/// Normalize a raw scraped string.
///
/// Trims surrounding whitespace, collapses internal whitespace runs to a
/// single space and strips leading `#` reference-id markers. Total and
/// idempotent.
pub fn cleanse(raw: &str) -> String {
    let stripped = raw.trim().trim_start_matches('#').trim_start();
    let mut out = String::with_capacity(stripped.len());
    let mut pending_space = false;
    for ch in stripped.chars() {
        if ch.is_whitespace() {
            pending_space = true;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        }
    }
    out
}

/// [`cleanse`] over arbitrary bytes; invalid UTF-8 sequences are replaced
/// with the standard replacement character.
pub fn cleanse_bytes(raw: &[u8]) -> String {
    cleanse(&String::from_utf8_lossy(raw))
}

/// Case-folded author name used for self-citation matching.
pub fn author_key(name: &str) -> String {
    cleanse(name).to_lowercase()
}

/// Affiliations of a single author of an article, in listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorAffiliations {
    pub author: String,
    pub affiliations: Vec<String>,
}

/// One publication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affiliations: Vec<AuthorAffiliations>,
}

/// A resolved author affiliation. Only `rank == 1` entries feed the
/// collaboration computation; secondary affiliations are kept for export.
#[derive(Debug, Clone, PartialEq)]
pub struct Affiliation {
    pub author: String,
    pub institution_raw: String,
    pub country: String,
    pub rank: usize,
}

/// One journal, derived from the distinct venue strings of the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct JournalRecord {
    pub name: String,
    pub country: String,
    pub article_ids: Vec<String>,
}

/// Counters accumulated while building a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub malformed_records: u64,
    pub duplicate_ids: u64,
    pub missing_year: u64,
}

/// Alias -> canonical country mapping. Lookup is case-insensitive.
#[derive(Debug, Clone, Default)]
pub struct CountryMap {
    aliases: HashMap<String, String>,
}

impl CountryMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) -> Result<(), CorpusError> {
        let key = cleanse(alias).to_lowercase();
        let canonical = cleanse(canonical);
        match self.aliases.get(&key) {
            Some(existing) if *existing != canonical => Err(CorpusError::AliasConflict {
                alias: cleanse(alias),
                first: existing.clone(),
                second: canonical,
            }),
            _ => {
                self.aliases.insert(key, canonical);
                Ok(())
            }
        }
    }

    pub fn resolve(&self, token: &str) -> Option<&str> {
        self.aliases
            .get(&cleanse(token).to_lowercase())
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }
}

/// Extract the country of one raw affiliation string by scanning its
/// comma-separated tokens right to left (postal addresses end with the
/// country). Unresolvable input yields [`UNKNOWN_COUNTRY`].
pub fn parse_affiliation(author: &str, raw: &str, rank: usize, map: &CountryMap) -> Affiliation {
    let country = raw
        .split(',')
        .rev()
        .find_map(|token| map.resolve(token))
        .unwrap_or(UNKNOWN_COUNTRY)
        .to_string();
    Affiliation {
        author: cleanse(author),
        institution_raw: cleanse(raw),
        country,
        rank,
    }
}

/// Primary (rank 1) affiliations for every author of `article` that has one.
pub fn primary_affiliations(article: &Article, map: &CountryMap) -> Vec<Affiliation> {
    article
        .affiliations
        .iter()
        .filter(|a| !a.affiliations.is_empty())
        .map(|a| parse_affiliation(&a.author, &a.affiliations[0], 1, map))
        .collect()
}

/// Immutable in-memory citation database with journal, year and inbound
/// citation indexes.
#[derive(Debug)]
pub struct Corpus {
    articles: BTreeMap<String, Article>,
    journals: BTreeMap<String, JournalRecord>,
    by_journal_year: BTreeMap<(String, i32), Vec<String>>,
    cited_by: HashMap<String, Vec<String>>,
    author_keys: HashMap<String, HashSet<String>>,
    diagnostics: Diagnostics,
}

impl Corpus {
    pub fn article(&self, id: &str) -> Option<&Article> {
        self.articles.get(id)
    }

    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.articles.values()
    }

    pub fn article_count(&self) -> usize {
        self.articles.len()
    }

    pub fn journal(&self, name: &str) -> Option<&JournalRecord> {
        self.journals.get(name)
    }

    pub fn journals(&self) -> impl Iterator<Item = &JournalRecord> {
        self.journals.values()
    }

    pub fn journal_names(&self) -> impl Iterator<Item = &str> {
        self.journals.keys().map(String::as_str)
    }

    pub fn journal_count(&self) -> usize {
        self.journals.len()
    }

    /// Article ids of `journal` published in `year`.
    pub fn by_journal_year(&self, journal: &str, year: i32) -> &[String] {
        self.by_journal_year
            .get(&(journal.to_string(), year))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Ids of articles citing `id` (resolvable inbound citations).
    pub fn cited_by(&self, id: &str) -> &[String] {
        self.cited_by.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cleansed, case-folded author names of `id`.
    pub fn author_keys(&self, id: &str) -> Option<&HashSet<String>> {
        self.author_keys.get(id)
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Total reference edges that resolve within the corpus.
    pub fn resolved_reference_count(&self) -> u64 {
        self.articles
            .values()
            .map(|a| {
                a.references
                    .iter()
                    .filter(|r| self.articles.contains_key(*r))
                    .count() as u64
            })
            .sum()
    }
}

/// Accumulates articles, normalizes them and freezes a [`Corpus`].
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    articles: BTreeMap<String, Article>,
    journal_countries: HashMap<String, String>,
    diagnostics: Diagnostics,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one article. Fields are cleansed, references deduplicated and
    /// non-positive years dropped. Duplicate ids are skipped and counted.
    pub fn push(&mut self, raw: Article) {
        let id = cleanse(&raw.id);
        if id.is_empty() {
            self.diagnostics.malformed_records += 1;
            return;
        }
        if self.articles.contains_key(&id) {
            self.diagnostics.duplicate_ids += 1;
            return;
        }
        let year = match raw.year {
            Some(y) if y > 0 => Some(y),
            _ => {
                self.diagnostics.missing_year += 1;
                None
            }
        };
        let journal = raw
            .journal
            .as_deref()
            .map(cleanse)
            .filter(|j| !j.is_empty());
        let mut seen = HashSet::new();
        let references: Vec<String> = raw
            .references
            .iter()
            .map(|r| cleanse(r))
            .filter(|r| !r.is_empty() && *r != id && seen.insert(r.clone()))
            .collect();
        let authors: Vec<String> = raw
            .authors
            .iter()
            .map(|a| cleanse(a))
            .filter(|a| !a.is_empty())
            .collect();
        let affiliations: Vec<AuthorAffiliations> = raw
            .affiliations
            .iter()
            .map(|a| AuthorAffiliations {
                author: cleanse(&a.author),
                affiliations: a.affiliations.iter().map(|s| cleanse(s)).collect(),
            })
            .filter(|a| !a.author.is_empty())
            .collect();
        self.articles.insert(
            id.clone(),
            Article {
                id,
                title: cleanse(&raw.title),
                authors,
                year,
                journal,
                references,
                affiliations,
            },
        );
    }

    pub fn note_malformed(&mut self) {
        self.diagnostics.malformed_records += 1;
    }

    pub fn journal_country(&mut self, journal: &str, country: &str) {
        self.journal_countries
            .insert(cleanse(journal), cleanse(country));
    }

    pub fn parsed_count(&self) -> usize {
        self.articles.len()
    }

    pub fn build(self) -> Corpus {
        let mut journals: BTreeMap<String, JournalRecord> = BTreeMap::new();
        let mut by_journal_year: BTreeMap<(String, i32), Vec<String>> = BTreeMap::new();
        let mut cited_by: HashMap<String, Vec<String>> = HashMap::new();
        let mut author_keys: HashMap<String, HashSet<String>> = HashMap::new();

        for article in self.articles.values() {
            if let Some(journal) = &article.journal {
                journals
                    .entry(journal.clone())
                    .or_insert_with(|| JournalRecord {
                        name: journal.clone(),
                        country: self
                            .journal_countries
                            .get(journal)
                            .cloned()
                            .unwrap_or_else(|| UNKNOWN_COUNTRY.to_string()),
                        article_ids: Vec::new(),
                    })
                    .article_ids
                    .push(article.id.clone());
                if let Some(year) = article.year {
                    by_journal_year
                        .entry((journal.clone(), year))
                        .or_default()
                        .push(article.id.clone());
                }
            }
            author_keys.insert(
                article.id.clone(),
                article.authors.iter().map(|a| author_key(a)).collect(),
            );
        }
        for article in self.articles.values() {
            for reference in &article.references {
                if self.articles.contains_key(reference) {
                    cited_by
                        .entry(reference.clone())
                        .or_default()
                        .push(article.id.clone());
                }
            }
        }
        for citers in cited_by.values_mut() {
            citers.sort();
        }

        Corpus {
            articles: self.articles,
            journals,
            by_journal_year,
            cited_by,
            author_keys,
            diagnostics: self.diagnostics,
        }
    }
}

/// Parse a `journal_name,country` CSV (no header).
pub fn parse_journal_countries(path: &Path) -> Result<HashMap<String, String>, CorpusError> {
    let mut out = HashMap::new();
    let mut reader = csv_reader(path)?;
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CorpusError::BadCsv {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        if row.len() < 2 {
            return Err(CorpusError::BadCsv {
                path: path.display().to_string(),
                msg: format!("row {}: expected journal_name,country", i + 1),
            });
        }
        out.insert(cleanse(&row[0]), cleanse(&row[1]));
    }
    Ok(out)
}

/// Parse an `alias,canonical` country CSV (no header). Duplicate aliases
/// with conflicting canonical forms are a fatal config error.
pub fn parse_country_map(path: &Path) -> Result<CountryMap, CorpusError> {
    let mut map = CountryMap::empty();
    let mut reader = csv_reader(path)?;
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| CorpusError::BadCsv {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        if row.len() < 2 {
            return Err(CorpusError::BadCsv {
                path: path.display().to_string(),
                msg: format!("row {}: expected alias,canonical", i + 1),
            });
        }
        map.insert(&row[0], &row[1])?;
    }
    Ok(map)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Parse the citation dump at `path` into a corpus.
///
/// Accepts either the flat-text record format (records separated by blank
/// lines, line prefixes `#*` title, `#@` authors, `#t` year, `#c` venue,
/// `#index` id, `#%` reference, `#a` author|affiliation...) or one JSON
/// article object per line. Malformed records are skipped and counted.
pub fn parse_citation_db(path: &Path) -> Result<Corpus, CorpusError> {
    parse_citation_db_with_countries(path, &HashMap::new())
}

/// [`parse_citation_db`] with journal countries applied from `countries`.
pub fn parse_citation_db_with_countries(
    path: &Path,
    countries: &HashMap<String, String>,
) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut builder = CorpusBuilder::new();
    for (journal, country) in countries {
        builder.journal_country(journal, country);
    }
    parse_records(BufReader::new(file), &mut builder).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if builder.parsed_count() == 0 {
        return Err(CorpusError::NoRecords {
            path: path.display().to_string(),
        });
    }
    Ok(builder.build())
}

fn parse_records<R: BufRead>(mut reader: R, builder: &mut CorpusBuilder) -> io::Result<()> {
    let mut buf = Vec::new();
    let mut record = FlatRecord::default();
    let mut format: Option<bool> = None; // Some(true) = jsonl
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        let eof = n == 0;
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim_end_matches(['\n', '\r']);
        if !eof && format.is_none() {
            if line.trim().is_empty() {
                continue;
            }
            format = Some(line.trim_start().starts_with('{'));
        }
        match format {
            Some(true) => {
                if eof {
                    break;
                }
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Article>(line) {
                    Ok(article) => builder.push(article),
                    Err(_) => builder.note_malformed(),
                }
            }
            Some(false) => {
                if eof || line.trim().is_empty() {
                    record.finish(builder);
                    if eof {
                        break;
                    }
                } else {
                    record.feed(line);
                }
            }
            None => {
                if eof {
                    break;
                }
            }
        }
    }
    Ok(())
}

#[derive(Default)]
struct FlatRecord {
    id: Option<String>,
    title: String,
    authors: Vec<String>,
    year: Option<i32>,
    journal: Option<String>,
    references: Vec<String>,
    affiliations: Vec<AuthorAffiliations>,
    seen_any: bool,
}

impl FlatRecord {
    fn feed(&mut self, line: &str) {
        self.seen_any = true;
        if let Some(rest) = line.strip_prefix("#index") {
            self.id = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("#*") {
            self.title = rest.to_string();
        } else if let Some(rest) = line.strip_prefix("#@") {
            self.authors = rest.split(';').map(str::to_string).collect();
        } else if let Some(rest) = line.strip_prefix("#t") {
            self.year = cleanse(rest).parse().ok();
        } else if let Some(rest) = line.strip_prefix("#c") {
            self.journal = Some(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("#%") {
            self.references.push(rest.to_string());
        } else if let Some(rest) = line.strip_prefix("#a") {
            let mut parts = rest.split('|');
            let author = parts.next().unwrap_or("").to_string();
            let affiliations: Vec<String> = parts.map(str::to_string).collect();
            self.affiliations.push(AuthorAffiliations {
                author,
                affiliations,
            });
        }
        // unknown prefixes are ignored
    }

    fn finish(&mut self, builder: &mut CorpusBuilder) {
        let record = std::mem::take(self);
        if !record.seen_any {
            return;
        }
        match record.id {
            Some(id) if !cleanse(&id).is_empty() => builder.push(Article {
                id,
                title: record.title,
                authors: record.authors,
                year: record.year,
                journal: record.journal,
                references: record.references,
                affiliations: record.affiliations,
            }),
            _ => builder.note_malformed(),
        }
    }
}

/// One record per distinct journal, sorted lexicographically.
pub fn list_journals(corpus: &Corpus) -> Vec<&JournalRecord> {
    corpus.journals().collect()
}

/// Write the normalized corpus export: one JSON article object per line,
/// sorted by article id.
pub fn export_jsonl<W: Write>(corpus: &Corpus, mut writer: W) -> io::Result<()> {
    for article in corpus.articles() {
        serde_json::to_writer(&mut writer, article)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
