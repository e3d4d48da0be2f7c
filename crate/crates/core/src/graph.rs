//! Weighted directed retweet network and influencer selection.
//!
//! An edge `A -> B` means user A retweeted a post authored by B; its weight is
//! the number of such retweet records. Adjacency is stored compressed by
//! destination, since the dominant query is "who retweeted this account".

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{TweetKind, TweetRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphOptions {
    /// Count self-retweets towards `unique_in_degree`.
    pub include_self_loops: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GraphBuildStats {
    pub retweets_consumed: u64,
    pub missing_retweeted_author: u64,
    pub non_retweet_records: u64,
    pub self_loops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetweetGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    // compressed by destination
    in_offsets: Vec<usize>,
    in_src: Vec<usize>,
    in_weight: Vec<u64>,
    // compressed by source
    out_offsets: Vec<usize>,
    out_dst: Vec<usize>,
    out_weight: Vec<u64>,
    unique_in_degree: Vec<usize>,
    options: GraphOptions,
}

/// Sequential fold of retweet records into edge multiplicities.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<String>,
    edges: HashMap<(String, String), u64>,
    stats: GraphBuildStats,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &str) {
        if !self.nodes.contains(id) {
            self.nodes.insert(id.to_string());
        }
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, weight: u64) {
        if weight == 0 {
            return;
        }
        self.add_node(src);
        self.add_node(dst);
        if src == dst {
            self.stats.self_loops += weight;
        }
        *self.edges.entry((src.to_string(), dst.to_string())).or_default() += weight;
    }

    pub fn add_record(&mut self, record: &TweetRecord) {
        if record.kind != TweetKind::Retweet {
            self.stats.non_retweet_records += 1;
            return;
        }
        match record.retweeted_author_id.as_deref() {
            Some(dst) => {
                self.stats.retweets_consumed += 1;
                self.add_edge(&record.author_id, dst, 1);
            }
            None => self.stats.missing_retweeted_author += 1,
        }
    }

    pub fn stats(&self) -> &GraphBuildStats {
        &self.stats
    }

    pub fn finish(self, options: GraphOptions) -> (RetweetGraph, GraphBuildStats) {
        let ids: Vec<String> = self.nodes.into_iter().collect();
        let index: HashMap<String, usize> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut triples: Vec<(usize, usize, u64)> = self
            .edges
            .into_iter()
            .map(|((s, d), w)| (index[&s], index[&d], w))
            .collect();
        let n = ids.len();

        triples.sort_unstable_by_key(|&(s, d, _)| (d, s));
        let mut in_offsets = vec![0usize; n + 1];
        for &(_, d, _) in &triples {
            in_offsets[d + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let in_src = triples.iter().map(|t| t.0).collect();
        let in_weight = triples.iter().map(|t| t.2).collect();
        let unique_in_degree = (0..n)
            .map(|d| {
                triples[in_offsets[d]..in_offsets[d + 1]]
                    .iter()
                    .filter(|&&(s, _, _)| options.include_self_loops || s != d)
                    .count()
            })
            .collect();

        triples.sort_unstable_by_key(|&(s, d, _)| (s, d));
        let mut out_offsets = vec![0usize; n + 1];
        for &(s, _, _) in &triples {
            out_offsets[s + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let out_dst = triples.iter().map(|t| t.1).collect();
        let out_weight = triples.iter().map(|t| t.2).collect();

        let graph = RetweetGraph {
            ids,
            index,
            in_offsets,
            in_src,
            in_weight,
            out_offsets,
            out_dst,
            out_weight,
            unique_in_degree,
            options,
        };
        (graph, self.stats)
    }
}

/// Builds the network from a stream of retweet records.
pub fn build_graph<I>(records: I, options: GraphOptions) -> (RetweetGraph, GraphBuildStats)
where
    I: IntoIterator<Item = TweetRecord>,
{
    let mut b = GraphBuilder::new();
    for r in records {
        b.add_record(&r);
    }
    b.finish(options)
}

impl RetweetGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.in_src.len()
    }

    pub fn options(&self) -> GraphOptions {
        self.options
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn unique_in_degree(&self, index: usize) -> usize {
        self.unique_in_degree[index]
    }

    pub fn unique_in_degree_of(&self, id: &str) -> Option<usize> {
        self.index_of(id).map(|i| self.unique_in_degree[i])
    }

    /// `(retweeter, weight)` pairs pointing at `dst`, ascending by retweeter.
    pub fn in_edges(&self, dst: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.in_offsets[dst]..self.in_offsets[dst + 1];
        self.in_src[r.clone()].iter().copied().zip(self.in_weight[r].iter().copied())
    }

    /// `(retweeted author, weight)` pairs leaving `src`, ascending by author.
    pub fn out_edges(&self, src: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.out_offsets[src]..self.out_offsets[src + 1];
        self.out_dst[r.clone()].iter().copied().zip(self.out_weight[r].iter().copied())
    }

    pub fn weight(&self, src: usize, dst: usize) -> u64 {
        let r = self.in_offsets[dst]..self.in_offsets[dst + 1];
        match self.in_src[r.clone()].binary_search(&src) {
            Ok(k) => self.in_weight[r.start + k],
            Err(_) => 0,
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.in_weight.iter().sum()
    }

    /// All edges as `(src, dst, weight)`, destination-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.node_count()).flat_map(move |d| self.in_edges(d).map(move |(s, w)| (s, d, w)))
    }

    /// Nodes by descending unique in-degree, ties broken by ascending id.
    pub fn rank_by_in_degree(&self) -> Vec<(String, usize)> {
        let mut order: Vec<usize> = (0..self.node_count()).collect();
        // ids are sorted, so index order is id order
        order.sort_by(|&a, &b| self.unique_in_degree[b].cmp(&self.unique_in_degree[a]).then(a.cmp(&b)));
        order
            .into_iter()
            .map(|i| (self.ids[i].clone(), self.unique_in_degree[i]))
            .collect()
    }

    /// Edge list CSV `src,dst,weight`.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst", "weight"])?;
        for (s, d, wt) in self.edges() {
            w.write_record([self.ids[s].as_str(), self.ids[d].as_str(), &wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_edge_csv<R: std::io::Read>(input: R, options: GraphOptions) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            src: String,
            dst: String,
            weight: u64,
        }
        let mut b = GraphBuilder::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row?;
            b.add_edge(&row.src, &row.dst, row.weight);
        }
        Ok(b.finish(options).0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InfluencerSet {
    pub members: Vec<String>,
    pub seed_source: String,
    pub min_unique_in_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InfluencerSelection {
    pub set: InfluencerSet,
    /// Seeds that are not nodes of the graph.
    pub missing: Vec<String>,
    /// Seeds present in the graph but under the in-degree threshold.
    pub below_threshold: Vec<(String, usize)>,
}

/// Reads one user id per line; blank lines and `#` comments are ignored.
pub fn read_seed_list<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut seeds = Vec::new();
    for line in input.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            seeds.push(id.to_string());
        }
    }
    Ok(seeds)
}

pub fn read_seed_file(path: &Path) -> Result<Vec<String>> {
    let f = std::fs::File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_seed_list(std::io::BufReader::new(f))
}

pub fn write_id_list<W: Write>(mut out: W, ids: &[String]) -> Result<()> {
    for id in ids {
        writeln!(out, "{id}")?;
    }
    Ok(())
}

/// Keeps the seeds whose unique in-degree reaches `threshold`, in rank order.
pub fn select_influencers(
    graph: &RetweetGraph,
    seeds: &[String],
    threshold: usize,
    seed_source: &str,
) -> Result<InfluencerSelection> {
    let mut missing = Vec::new();
    let mut below = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut seen = BTreeSet::new();
    for s in seeds {
        if !seen.insert(s.as_str()) {
            continue;
        }
        match graph.index_of(s) {
            None => missing.push(s.clone()),
            Some(i) if graph.unique_in_degree(i) < threshold => {
                below.push((s.clone(), graph.unique_in_degree(i)))
            }
            Some(i) => kept.push(i),
        }
    }
    for m in &missing {
        log::warn!("seed `{m}` is not in the retweet graph");
    }
    if kept.is_empty() {
        return Err(Error::EmptyInfluencerSet(format!(
            "{} seeds, {} absent from the graph, {} below in-degree {threshold}",
            seen.len(),
            missing.len(),
            below.len()
        )));
    }
    kept.sort_by(|&a, &b| graph.unique_in_degree(b).cmp(&graph.unique_in_degree(a)).then(a.cmp(&b)));
    Ok(InfluencerSelection {
        set: InfluencerSet {
            members: kept.into_iter().map(|i| graph.id(i).to_string()).collect(),
            seed_source: seed_source.to_string(),
            min_unique_in_degree: threshold,
        },
        missing,
        below_threshold: below,
    })
}
