//! Plot-ready tables: ideology histograms, per-influencer retweeter
//! distributions, the neighbor-opinion density grid, ideology by shared
//! leaning class, and follower/AE bivariate densities.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::Serialize;

use crate::engagement::Action;
use crate::graph::RetweetGraph;
use crate::ideology::ScoreTable;
use crate::ingest::TweetRecord;
use crate::mediabias::{LeaningLabel, UserLeaning};
use crate::numeric::exact_sum;
use crate::Result;

pub const DEFAULT_GRID_BINS: usize = 100;
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// `n` equal-width bins over `[lo, hi]` as `n + 1` edges.
pub fn uniform_edges(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n > 0 && hi > lo, "need n > 0 and hi > lo");
    (0..=n)
        .map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 })
        .collect()
}

/// Bin of `x`; the last bin is closed on the right.
fn bin_of(edges: &[f64], x: f64) -> Option<usize> {
    let n = edges.len() - 1;
    if !(x >= edges[0] && x <= edges[n]) {
        return None;
    }
    if x == edges[n] {
        return Some(n - 1);
    }
    // first edge strictly greater than x
    let k = edges.partition_point(|&e| e <= x);
    Some(k - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub x_label: String,
    pub y_label: String,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// `counts[x_bin][y_bin]`
    pub counts: Vec<Vec<u64>>,
    /// Points that fell outside the edges.
    pub skipped: u64,
}

impl DensityGrid {
    pub fn new(x_label: &str, y_label: &str, x_edges: Vec<f64>, y_edges: Vec<f64>) -> Self {
        for e in [&x_edges, &y_edges] {
            assert!(e.len() >= 2 && e.windows(2).all(|w| w[0] < w[1]), "edges must be strictly increasing");
        }
        let counts = vec![vec![0; y_edges.len() - 1]; x_edges.len() - 1];
        Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_edges,
            y_edges,
            counts,
            skipped: 0,
        }
    }

    pub fn add(&mut self, x: f64, y: f64) -> bool {
        match (bin_of(&self.x_edges, x), bin_of(&self.y_edges, y)) {
            (Some(i), Some(j)) => {
                self.counts[i][j] += 1;
                true
            }
            _ => {
                self.skipped += 1;
                false
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn log_density(&self, i: usize, j: usize) -> f64 {
        ((self.counts[i][j] + 1) as f64).log10()
    }

    pub fn x_marginal(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    /// Long-form CSV `x_bin,y_bin,count,log_density` over every cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_bin", "y_bin", "count", "log_density"])?;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                w.write_record([i.to_string(), j.to_string(), c.to_string(), self.log_density(i, j).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// JSON sidecar with edges, labels, totals, and any extra scalars.
    pub fn write_sidecar<W: Write>(&self, out: W, extra: &BTreeMap<String, f64>) -> Result<()> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            x_label: &'a str,
            y_label: &'a str,
            x_edges: &'a [f64],
            y_edges: &'a [f64],
            total: u64,
            skipped: u64,
            log_density: &'static str,
            extra: &'a BTreeMap<String, f64>,
        }
        serde_json::to_writer_pretty(
            out,
            &Sidecar {
                x_label: &self.x_label,
                y_label: &self.y_label,
                x_edges: &self.x_edges,
                y_edges: &self.y_edges,
                total: self.total(),
                skipped: self.skipped,
                log_density: "log10(count + 1)",
                extra,
            },
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Count,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramSeries {
    pub bin_edges: Vec<f64>,
    /// `(series name, counts)`, in insertion order.
    pub series: Vec<(String, Vec<u64>)>,
    pub normalization: Normalization,
}

impl HistogramSeries {
    pub fn new(bin_edges: Vec<f64>) -> Self {
        Self {
            bin_edges,
            series: Vec::new(),
            normalization: Normalization::Count,
        }
    }

    /// Adds a series; returns how many values fell outside the edges.
    pub fn push_series(&mut self, name: &str, values: &[f64]) -> usize {
        let mut counts = vec![0u64; self.bin_edges.len() - 1];
        let mut outside = 0;
        for &v in values {
            match bin_of(&self.bin_edges, v) {
                Some(k) => counts[k] += 1,
                None => outside += 1,
            }
        }
        self.series.push((name.to_string(), counts));
        outside
    }

    pub fn get(&self, name: &str) -> Option<&[u64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// Counts divided by population and bin width.
    pub fn density(&self, name: &str) -> Option<Vec<f64>> {
        let counts = self.get(name)?;
        let total: u64 = counts.iter().sum();
        Some(
            counts
                .iter()
                .zip(self.bin_edges.windows(2))
                .map(|(&c, w)| if total == 0 { 0.0 } else { c as f64 / (total as f64 * (w[1] - w[0])) })
                .collect(),
        )
    }

    /// CSV `bin_left,bin_right,series,count` (raw counts).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "series", "count"])?;
        for (name, counts) in &self.series {
            for (k, c) in counts.iter().enumerate() {
                w.write_record([
                    self.bin_edges[k].to_string(),
                    self.bin_edges[k + 1].to_string(),
                    name.clone(),
                    c.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborMode {
    /// Accounts the user retweeted.
    #[default]
    Out,
    /// Accounts that retweeted the user.
    In,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborGrid {
    pub grid: DensityGrid,
    /// Scored non-influencer users considered.
    pub population: usize,
    pub skipped_no_scored_neighbors: usize,
    /// Share of binned users whose own and neighbor scores have the same sign.
    pub diagonal_share: f64,
}

/// Own score against the weighted mean score of graph neighbors, for every
/// scored user that is not an influencer.
pub fn neighbor_opinion_grid(scores: &ScoreTable, graph: &RetweetGraph, bins: usize, mode: NeighborMode) -> NeighborGrid {
    let edges = uniform_edges(-1.0, 1.0, bins);
    let mut grid = DensityGrid::new("user_score", "neighbor_mean_score", edges.clone(), edges);
    let mut population = 0;
    let mut skipped = 0;
    let mut same_sign = 0u64;
    for (id, &(own, _)) in &scores.users {
        if scores.influencers.contains_key(id) {
            continue;
        }
        population += 1;
        let Some(node) = graph.index_of(id) else {
            skipped += 1;
            continue;
        };
        let neighbors: Vec<(usize, u64)> = match mode {
            NeighborMode::Out => graph.out_edges(node).collect(),
            NeighborMode::In => graph.in_edges(node).collect(),
        };
        let mut weighted = Vec::new();
        let mut weights = Vec::new();
        for (nb, w) in neighbors {
            if nb == node {
                continue;
            }
            if let Some(s) = scores.node(graph.id(nb)) {
                weighted.push(s * w as f64);
                weights.push(w as f64);
            }
        }
        if weights.is_empty() {
            skipped += 1;
            continue;
        }
        let y = exact_sum(weighted) / exact_sum(weights);
        if grid.add(own, y) && own * y > 0.0 {
            same_sign += 1;
        }
    }
    let total = grid.total();
    NeighborGrid {
        diagonal_share: if total == 0 { 0.0 } else { same_sign as f64 / total as f64 },
        grid,
        population,
        skipped_no_scored_neighbors: skipped,
    }
}

/// User and influencer score histograms on shared edges over `[-1, 1]`, plus
/// a `retweeters:<id>` series for each of the `top_k` scored influencers with
/// the highest unique in-degree.
pub fn ideology_histograms(scores: &ScoreTable, graph: &RetweetGraph, bins: usize, top_k: usize) -> HistogramSeries {
    let mut h = HistogramSeries::new(uniform_edges(-1.0, 1.0, bins));
    let users: Vec<f64> = scores.users.values().map(|s| s.0).collect();
    let infl: Vec<f64> = scores.influencers.values().map(|s| s.0).collect();
    h.push_series("users", &users);
    h.push_series("influencers", &infl);
    let mut ranked: Vec<(&String, usize)> = scores
        .influencers
        .keys()
        .filter_map(|id| graph.unique_in_degree_of(id).map(|d| (id, d)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    for (id, _) in ranked.into_iter().take(top_k) {
        let node = graph.index_of(id).expect("ranked ids are graph nodes");
        let vals: Vec<f64> = graph
            .in_edges(node)
            .filter(|&(src, _)| src != node)
            .filter_map(|(src, _)| scores.user(graph.id(src)))
            .collect();
        h.push_series(&format!("retweeters:{id}"), &vals);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaningDistributions {
    /// Series `users:<Label>` and `influencers:<Label>`.
    pub histogram: HistogramSeries,
    pub user_scores: BTreeMap<LeaningLabel, Vec<f64>>,
    pub influencer_scores: BTreeMap<LeaningLabel, Vec<f64>>,
}

/// Ideology of accounts grouped by the leaning classes they shared at least
/// `min_shares` times. An account can sit in several classes.
pub fn leaning_ideology_distributions(
    scores: &ScoreTable,
    leanings: &BTreeMap<String, UserLeaning>,
    min_shares: usize,
    bins: usize,
) -> LeaningDistributions {
    let mut users: BTreeMap<LeaningLabel, Vec<f64>> = BTreeMap::new();
    let mut infl: BTreeMap<LeaningLabel, Vec<f64>> = BTreeMap::new();
    for (id, l) in leanings {
        let (target, score) = if let Some(s) = scores.influencer(id) {
            (&mut infl, s)
        } else if let Some(s) = scores.user(id) {
            (&mut users, s)
        } else {
            continue;
        };
        for (&label, &n) in &l.class_counts {
            if n >= min_shares {
                target.entry(label).or_default().push(score);
            }
        }
    }
    let mut histogram = HistogramSeries::new(uniform_edges(-1.0, 1.0, bins));
    for label in LeaningLabel::ALL {
        if let Some(v) = users.get(&label) {
            histogram.push_series(&format!("users:{label}"), v);
        }
        if let Some(v) = infl.get(&label) {
            histogram.push_series(&format!("influencers:{label}"), v);
        }
    }
    LeaningDistributions {
        histogram,
        user_scores: users,
        influencer_scores: infl,
    }
}

fn padded_edges(values: impl Iterator<Item = f64>, bins: usize) -> Vec<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return uniform_edges(0.0, 1.0, bins);
    }
    if hi > lo {
        uniform_edges(lo, hi, bins)
    } else {
        uniform_edges(lo - 0.5, hi + 0.5, bins)
    }
}

/// Per action, a grid of `(log10 followers, log10 AE)` over tweets with
/// followers, impressions, and a nonzero count of that action.
pub fn ae_followers_density(tweets: &[TweetRecord], bins: usize) -> BTreeMap<Action, DensityGrid> {
    Action::ALL
        .iter()
        .map(|&action| {
            let pts: Vec<(f64, f64)> = tweets
                .iter()
                .filter(|t| t.author_followers > 0 && t.impressions > 0 && action.count(t) > 0)
                .map(|t| {
                    (
                        (t.author_followers as f64).log10(),
                        (action.count(t) as f64 / t.impressions as f64).log10(),
                    )
                })
                .collect();
            let mut grid = DensityGrid::new(
                "log10_followers",
                &format!("log10_ae_{action}"),
                padded_edges(pts.iter().map(|p| p.0), bins),
                padded_edges(pts.iter().map(|p| p.1), bins),
            );
            for (x, y) in pts {
                grid.add(x, y);
            }
            (action, grid)
        })
        .collect()
}

/// Tail exponent `alpha` of a Pareto variable from counts binned on its
/// log10 scale: the maximum-likelihood rate of the exponential in log space,
/// with bin centers standing in for values and the lowest edge as the scale.
/// Per-bin counts then fall off with slope `-alpha` on log-log axes.
pub fn log_binned_tail_exponent(edges: &[f64], counts: &[u64]) -> Option<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 || edges.len() != counts.len() + 1 {
        return None;
    }
    let spread = exact_sum(
        counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| c as f64 * ((w[0] + w[1]) / 2.0 - edges[0])),
    ) / total as f64;
    (spread > 0.0).then(|| 1.0 / (std::f64::consts::LN_10 * spread))
}

/// Ids that are both scored users and influencers.
pub fn overlapping_ids(scores: &ScoreTable) -> BTreeSet<&str> {
    scores
        .users
        .keys()
        .filter(|id| scores.influencers.contains_key(*id))
        .map(String::as_str)
        .collect()
}
