//! Inter-journal citation graph: directed edges weighted by citation
//! count, nodes split into high/low SNIP halves at the median, edges
//! classed by which halves they connect.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("empty SNIP table, cannot split journals")]
    EmptySnipTable,
    #[error("unknown journal {0:?} in SNIP table")]
    UnknownJournal(String),
}

/// Edge class by the SNIP halves of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeType {
    LowToLow = 1,
    LowToHigh = 2,
    HighToLow = 3,
    HighToHigh = 4,
}

impl EdgeType {
    pub fn code(self) -> u8 {
        self as u8
    }

    fn classify(src_high: bool, dst_high: bool) -> Self {
        match (src_high, dst_high) {
            (false, false) => EdgeType::LowToLow,
            (false, true) => EdgeType::LowToHigh,
            (true, false) => EdgeType::HighToLow,
            (true, true) => EdgeType::HighToHigh,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphNode {
    pub snip: f64,
    pub high: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphEdge {
    pub weight: u64,
    pub etype: EdgeType,
}

impl GraphEdge {
    /// log10(1 + weight), finite for every weight including zero.
    pub fn display_weight(&self) -> f64 {
        (1.0 + self.weight as f64).log10()
    }
}

#[derive(Debug, Serialize)]
pub struct CitationGraph {
    pub median_snip: f64,
    pub nodes: BTreeMap<String, GraphNode>,
    pub edges: BTreeMap<(String, String), GraphEdge>,
    /// Same-journal citation count excluded from the edge set.
    pub excluded_self_loops: u64,
}

/// Counts per article of same-journal and cross-journal outbound
/// resolvable references.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IntraJournalStats {
    pub internal: u64,
    pub external: u64,
}

/// Build the journal digraph over the journals present in `snip_values`.
/// Journals with SNIP >= the median form the high half (ties go high).
/// References between articles of the same journal are tallied in
/// `excluded_self_loops` rather than forming edges; references touching a
/// journal outside `snip_values` are ignored.
pub fn build_citation_graph(
    corpus: &Corpus,
    snip_values: &BTreeMap<String, f64>,
) -> Result<CitationGraph, NetworkError> {
    if snip_values.is_empty() {
        return Err(NetworkError::EmptySnipTable);
    }
    let mut sorted: Vec<f64> = snip_values.values().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("SNIP values are finite"));
    let median_snip = crate::snip::median_of_sorted(&sorted);

    let nodes: BTreeMap<String, GraphNode> = snip_values
        .iter()
        .map(|(name, snip)| {
            (
                name.clone(),
                GraphNode {
                    snip: *snip,
                    high: *snip >= median_snip,
                },
            )
        })
        .collect();

    let mut edges: BTreeMap<(String, String), GraphEdge> = BTreeMap::new();
    let mut excluded_self_loops = 0u64;
    for article in corpus.articles() {
        let Some(src) = article.journal.as_deref() else {
            continue;
        };
        if !nodes.contains_key(src) {
            continue;
        }
        for reference in &article.references {
            let Some(cited) = corpus.article(reference) else {
                continue;
            };
            let Some(dst) = cited.journal.as_deref() else {
                continue;
            };
            if !nodes.contains_key(dst) {
                continue;
            }
            if src == dst {
                excluded_self_loops += 1;
                continue;
            }
            let etype = EdgeType::classify(nodes[src].high, nodes[dst].high);
            edges
                .entry((src.to_string(), dst.to_string()))
                .or_insert(GraphEdge { weight: 0, etype })
                .weight += 1;
        }
    }

    Ok(CitationGraph {
        median_snip,
        nodes,
        edges,
        excluded_self_loops,
    })
}

impl CitationGraph {
    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|e| e.weight).sum()
    }

    /// Citation count and share of the total per edge type, in code order.
    pub fn distribution_table(&self) -> Vec<(EdgeType, u64, f64)> {
        let total = self.total_weight();
        [
            EdgeType::LowToLow,
            EdgeType::LowToHigh,
            EdgeType::HighToLow,
            EdgeType::HighToHigh,
        ]
        .into_iter()
        .map(|etype| {
            let weight: u64 = self
                .edges
                .values()
                .filter(|e| e.etype == etype)
                .map(|e| e.weight)
                .sum();
            let share = if total == 0 {
                0.0
            } else {
                weight as f64 / total as f64
            };
            (etype, weight, share)
        })
        .collect()
    }

    /// Dense adjacency matrix in the order of `ordering`; entry (i, j) is
    /// the citation count from journal i to journal j, diagonal zero.
    pub fn adjacency_matrix(&self, ordering: &[String]) -> Result<Vec<Vec<u64>>, NetworkError> {
        self.matrix_with_diagonal(ordering, |_| 0)
    }

    /// Adjacency matrix whose diagonal carries same-journal citation
    /// counts taken from `intra`.
    pub fn adjacency_matrix_with_intra(
        &self,
        ordering: &[String],
        intra: &BTreeMap<String, IntraJournalStats>,
    ) -> Result<Vec<Vec<u64>>, NetworkError> {
        self.matrix_with_diagonal(ordering, |name| {
            intra.get(name).map(|s| s.internal).unwrap_or(0)
        })
    }

    fn matrix_with_diagonal(
        &self,
        ordering: &[String],
        diagonal: impl Fn(&str) -> u64,
    ) -> Result<Vec<Vec<u64>>, NetworkError> {
        for name in ordering {
            if !self.nodes.contains_key(name) {
                return Err(NetworkError::UnknownJournal(name.clone()));
            }
        }
        let index: BTreeMap<&str, usize> = ordering
            .iter()
            .enumerate()
            .map(|(i, name)| (name.as_str(), i))
            .collect();
        let n = ordering.len();
        let mut matrix = vec![vec![0u64; n]; n];
        for ((src, dst), edge) in &self.edges {
            if let (Some(&i), Some(&j)) = (index.get(src.as_str()), index.get(dst.as_str())) {
                matrix[i][j] = edge.weight;
            }
        }
        for (i, name) in ordering.iter().enumerate() {
            matrix[i][i] = diagonal(name);
        }
        Ok(matrix)
    }
}

/// Per-journal same-journal versus cross-journal outbound reference
/// counts, over resolvable references only. Computed straight from the
/// article table, independent of any graph.
pub fn intra_journal_stats(corpus: &Corpus) -> BTreeMap<String, IntraJournalStats> {
    let mut stats: BTreeMap<String, IntraJournalStats> = corpus
        .journal_names()
        .map(|name| (name.to_string(), IntraJournalStats::default()))
        .collect();
    for article in corpus.articles() {
        let Some(journal) = article.journal.as_deref() else {
            continue;
        };
        for reference in &article.references {
            let Some(cited) = corpus.article(reference) else {
                continue;
            };
            let entry = stats.get_mut(journal).expect("journal is indexed");
            if cited.journal.as_deref() == Some(journal) {
                entry.internal += 1;
            } else {
                entry.external += 1;
            }
        }
    }
    stats
}

/// Write the edge list: `src,dst,weight,display_weight,type`.
pub fn write_edge_csv<W: Write>(graph: &CitationGraph, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["src", "dst", "weight", "display_weight", "type"])?;
    for ((src, dst), edge) in &graph.edges {
        w.write_record([
            src.clone(),
            dst.clone(),
            edge.weight.to_string(),
            edge.display_weight().to_string(),
            edge.etype.code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write the adjacency matrix with a journal header row and column.
pub fn write_adjacency_csv<W: Write>(
    matrix: &[Vec<u64>],
    ordering: &[String],
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["journal".to_string()];
    header.extend(ordering.iter().cloned());
    w.write_record(&header)?;
    for (name, row) in ordering.iter().zip(matrix) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(u64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the graph in Graphviz dot form, high-SNIP nodes filled.
pub fn write_dot<W: Write>(graph: &CitationGraph, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "digraph citations {{")?;
    for (name, node) in &graph.nodes {
        let style = if node.high {
            " style=filled fillcolor=lightblue"
        } else {
            ""
        };
        writeln!(
            writer,
            "  {:?} [snip={:.6}{}];",
            name, node.snip, style
        )?;
    }
    for ((src, dst), edge) in &graph.edges {
        writeln!(
            writer,
            "  {:?} -> {:?} [weight={} penwidth={:.4} type={}];",
            src,
            dst,
            edge.weight,
            edge.display_weight(),
            edge.etype.code()
        )?;
    }
    writeln!(writer, "}}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Article, CorpusBuilder};
    use approx::assert_relative_eq;

    fn article(id: &str, journal: &str, year: i32, refs: &[&str]) -> Article {
        Article {
            id: id.into(),
            title: format!("Paper {id}"),
            authors: vec![format!("Author {id}")],
            year: Some(year),
            journal: Some(journal.into()),
            references: refs.iter().map(|r| r.to_string()).collect(),
            affiliations: Vec::new(),
        }
    }

    fn corpus(articles: Vec<Article>) -> Corpus {
        let mut builder = CorpusBuilder::new();
        for a in articles {
            builder.push(a);
        }
        builder.build()
    }

    fn two_journal_corpus() -> Corpus {
        corpus(vec![
            article("a1", "A", 2010, &["b1", "b2", "b1x"]),
            article("a2", "A", 2011, &["a1"]),
            article("b1", "B", 2010, &[]),
            article("b2", "B", 2010, &["b1"]),
            // a1 -> b1 appears once more via another A article
            article("b1x", "B", 2011, &[]),
            article("a3", "A", 2011, &["b1"]),
        ])
    }

    fn snips(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    #[test]
    fn builds_edges_and_excludes_self_loops() {
        let corpus = two_journal_corpus();
        let graph = build_citation_graph(&corpus, &snips(&[("A", 0.4), ("B", 1.2)])).unwrap();
        assert_eq!(graph.edges.len(), 1);
        let ab = &graph.edges[&("A".to_string(), "B".to_string())];
        assert_eq!(ab.weight, 4);
        assert_eq!(ab.etype, EdgeType::LowToHigh);
        let bb_internal = graph.excluded_self_loops;
        // a2 -> a1 and b2 -> b1
        assert_eq!(bb_internal, 2);
    }

    #[test]
    fn median_split_puts_ties_in_high_half() {
        let graph = build_citation_graph(
            &two_journal_corpus(),
            &snips(&[("A", 0.7), ("B", 0.7)]),
        )
        .unwrap();
        assert!(graph.nodes["A"].high);
        assert!(graph.nodes["B"].high);
        assert_eq!(
            graph.edges[&("A".to_string(), "B".to_string())].etype,
            EdgeType::HighToHigh
        );
    }

    #[test]
    fn display_weight_is_shifted_log() {
        let edge = GraphEdge {
            weight: 9,
            etype: EdgeType::LowToLow,
        };
        assert_relative_eq!(edge.display_weight(), 1.0, max_relative = 1e-12);
        let unit = GraphEdge {
            weight: 0,
            etype: EdgeType::LowToLow,
        };
        assert_eq!(unit.display_weight(), 0.0);
    }

    #[test]
    fn adjacency_matrix_two_nodes() {
        let corpus = corpus(vec![
            article("a1", "A", 2010, &["b1", "b2", "b3"]),
            article("b1", "B", 2009, &[]),
            article("b2", "B", 2009, &[]),
            article("b3", "B", 2009, &[]),
        ]);
        let graph = build_citation_graph(&corpus, &snips(&[("A", 0.5), ("B", 1.0)])).unwrap();
        let ordering = vec!["A".to_string(), "B".to_string()];
        let matrix = graph.adjacency_matrix(&ordering).unwrap();
        assert_eq!(matrix, vec![vec![0, 3], vec![0, 0]]);
    }

    #[test]
    fn adjacency_matrix_rejects_unknown_journal() {
        let graph = build_citation_graph(
            &two_journal_corpus(),
            &snips(&[("A", 0.5), ("B", 1.0)]),
        )
        .unwrap();
        let ordering = vec!["A".to_string(), "C".to_string()];
        assert!(matches!(
            graph.adjacency_matrix(&ordering),
            Err(NetworkError::UnknownJournal(name)) if name == "C"
        ));
    }

    #[test]
    fn empty_snip_table_is_an_error() {
        assert!(matches!(
            build_citation_graph(&two_journal_corpus(), &BTreeMap::new()),
            Err(NetworkError::EmptySnipTable)
        ));
    }

    #[test]
    fn distribution_shares_sum_to_one() {
        let graph = build_citation_graph(
            &two_journal_corpus(),
            &snips(&[("A", 0.4), ("B", 1.2)]),
        )
        .unwrap();
        let table = graph.distribution_table();
        let total_share: f64 = table.iter().map(|(_, _, share)| share).sum();
        assert_relative_eq!(total_share, 1.0, max_relative = 1e-12);
        assert_eq!(table[1].1 + table[2].1, graph.total_weight());
    }

    #[test]
    fn swapping_halves_swaps_cross_edge_types() {
        let corpus = two_journal_corpus();
        let forward = build_citation_graph(&corpus, &snips(&[("A", 0.4), ("B", 1.2)])).unwrap();
        let reversed = build_citation_graph(&corpus, &snips(&[("A", 1.2), ("B", 0.4)])).unwrap();
        let key = ("A".to_string(), "B".to_string());
        assert_eq!(forward.edges[&key].etype, EdgeType::LowToHigh);
        assert_eq!(reversed.edges[&key].etype, EdgeType::HighToLow);
    }

    #[test]
    fn intra_stats_count_resolvable_references() {
        let stats = intra_journal_stats(&two_journal_corpus());
        assert_eq!(
            stats["A"],
            IntraJournalStats {
                internal: 1,
                external: 4
            }
        );
        assert_eq!(
            stats["B"],
            IntraJournalStats {
                internal: 1,
                external: 0
            }
        );
    }

    #[test]
    fn intra_diagonal_lands_on_matrix() {
        let corpus = two_journal_corpus();
        let graph = build_citation_graph(&corpus, &snips(&[("A", 0.4), ("B", 1.2)])).unwrap();
        let intra = intra_journal_stats(&corpus);
        let ordering = vec!["A".to_string(), "B".to_string()];
        let matrix = graph.adjacency_matrix_with_intra(&ordering, &intra).unwrap();
        assert_eq!(matrix[0][0], 1);
        assert_eq!(matrix[1][1], 1);
        assert_eq!(matrix[0][1], 4);
    }
}
