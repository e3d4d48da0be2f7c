//! Latent ideology by correspondence analysis of the user x influencer
//! retweet matrix.
//!
//! With `A[i][j]` the number of retweets user `i` directs at influencer `j`:
//!
//! ```text
//! P  = A / sum(A)
//! r  = P 1,   c = 1' P,   Dr = diag(r),   Dc = diag(c)
//! S  = Dr^-1/2 (P - r c') Dc^-1/2
//! ```
//!
//! The residual term is the outer product `r c'`. `S` is never materialized:
//! it is applied as `K v - sqrt(r) (sqrt(c)' v)` where `K = Dr^-1/2 P Dc^-1/2`
//! keeps the sparsity of `A`. Every reduction goes through
//! [`ExactSum`](crate::numeric::ExactSum), so products are correctly rounded
//! and independent of row order. A user's latent ideology is their entry in
//! the leading left singular vector; an influencer's is the median over their
//! retweeters.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{InfluencerSet, RetweetGraph};
use crate::numeric::{exact_dot, normalize, symmetric_eigen, ExactSum};
use crate::stats::median;

/// Sparse non-negative count matrix with row and column identities.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    row_offsets: Vec<usize>,
    col_index: Vec<usize>,
    values: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl InteractionMatrix {
    /// Builds from `(row, col, count)` triplets; duplicates are summed and
    /// zero counts dropped.
    pub fn from_triplets(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        triplets: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        let mut cells: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (i, j, v) in triplets {
            assert!(i < row_ids.len() && j < col_ids.len(), "triplet out of bounds");
            if v > 0 {
                *cells.entry((i, j)).or_default() += v;
            }
        }
        let (m, n) = (row_ids.len(), col_ids.len());
        let mut row_offsets = vec![0usize; m + 1];
        let mut col_index = Vec::with_capacity(cells.len());
        let mut values = Vec::with_capacity(cells.len());
        let mut row_sums = vec![0u64; m];
        let mut col_sums = vec![0u64; n];
        for (&(i, j), &v) in &cells {
            row_offsets[i + 1] += 1;
            col_index.push(j);
            values.push(v);
            row_sums[i] += v;
            col_sums[j] += v;
        }
        for i in 0..m {
            row_offsets[i + 1] += row_offsets[i];
        }
        let total = row_sums.iter().sum();
        Self {
            row_ids,
            col_ids,
            row_offsets,
            col_index,
            values,
            row_sums,
            col_sums,
            total,
        }
    }

    /// Row-major dense counts; ids default to `r0.. / c0..`.
    pub fn from_dense(rows: &[Vec<u64>]) -> Self {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let row_ids = (0..m).map(|i| format!("r{i}")).collect();
        let col_ids = (0..n).map(|j| format!("c{j}")).collect();
        let trip = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, v)));
        Self::from_triplets(row_ids, col_ids, trip)
    }

    pub fn nrows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Nonzero `(col, count)` entries of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_index[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        (0..self.nrows())
            .map(|i| {
                let mut r = vec![0; self.ncols()];
                for (j, v) in self.row(i) {
                    r[j] = v;
                }
                r
            })
            .collect()
    }

    /// Rows of users retweeting `col` (an influencer column), with counts.
    pub fn column(&self, j: usize) -> Vec<(usize, u64)> {
        (0..self.nrows())
            .filter_map(|i| {
                let v = self.get(i, j);
                (v > 0).then_some((i, v))
            })
            .collect()
    }
}

/// What [`build_interaction_matrix`] kept and dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatrixBuildReport {
    pub candidate_users: usize,
    pub rows_below_min_distinct: usize,
    pub dropped_columns: Vec<String>,
    pub self_retweets_ignored: u64,
}

/// Rows are users that retweeted at least `min_distinct` distinct influencers
/// (ascending id); columns follow the influencer set's order, minus columns
/// left without mass.
pub fn build_interaction_matrix(
    graph: &RetweetGraph,
    influencers: &InfluencerSet,
    min_distinct: usize,
) -> Result<(InteractionMatrix, MatrixBuildReport)> {
    if influencers.members.is_empty() {
        return Err(Error::EmptyInfluencerSet("influencer set is empty".into()));
    }
    let mut report = MatrixBuildReport::default();
    let cols: Vec<(String, usize)> = influencers
        .members
        .iter()
        .filter_map(|id| match graph.index_of(id) {
            Some(ix) => Some((id.clone(), ix)),
            None => {
                log::warn!("influencer `{id}` is not in the graph");
                report.dropped_columns.push(id.clone());
                None
            }
        })
        .collect();

    // per user: (col, count)
    let mut per_user: BTreeMap<usize, Vec<(usize, u64)>> = BTreeMap::new();
    for (j, &(_, node)) in cols.iter().enumerate() {
        for (src, w) in graph.in_edges(node) {
            if src == node {
                report.self_retweets_ignored += w;
                continue;
            }
            per_user.entry(src).or_default().push((j, w));
        }
    }
    report.candidate_users = per_user.len();

    let mut row_ids = Vec::new();
    let mut triplets = Vec::new();
    for (node, entries) in per_user {
        if entries.len() < min_distinct {
            report.rows_below_min_distinct += 1;
            continue;
        }
        let i = row_ids.len();
        row_ids.push(graph.id(node).to_string());
        triplets.extend(entries.into_iter().map(|(j, w)| (i, j, w)));
    }

    let mut col_mass = vec![0u64; cols.len()];
    for &(_, j, w) in &triplets {
        col_mass[j] += w;
    }
    let mut remap = vec![usize::MAX; cols.len()];
    let mut col_ids = Vec::new();
    for (j, (id, _)) in cols.iter().enumerate() {
        if col_mass[j] == 0 {
            log::warn!("influencer `{id}` has no retained retweeters; column dropped");
            report.dropped_columns.push(id.clone());
        } else {
            remap[j] = col_ids.len();
            col_ids.push(id.clone());
        }
    }
    let triplets: Vec<_> = triplets.into_iter().map(|(i, j, w)| (i, remap[j], w)).collect();
    if row_ids.len() < 2 || col_ids.len() < 2 {
        return Err(Error::MatrixTooSmall {
            rows: row_ids.len(),
            cols: col_ids.len(),
        });
    }
    Ok((InteractionMatrix::from_triplets(row_ids, col_ids, triplets), report))
}

/// `S` held as an operator over the sparse counts.
#[derive(Debug, Clone)]
pub struct NormalizedMatrix<'a> {
    matrix: &'a InteractionMatrix,
    /// `P` entries in the sparsity pattern of `A`.
    p: Vec<f64>,
    /// `P_ij / sqrt(r_i c_j)` in the sparsity pattern of `A`.
    k_rows: Vec<f64>,
    // column-compressed copy of K for S' products
    col_offsets: Vec<usize>,
    col_rows: Vec<usize>,
    k_cols: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    sqrt_r: Vec<f64>,
    sqrt_c: Vec<f64>,
}

pub fn normalize_matrix(matrix: &InteractionMatrix) -> Result<NormalizedMatrix<'_>> {
    if let Some(i) = matrix.row_sums.iter().position(|&s| s == 0) {
        return Err(Error::ZeroMass {
            axis: "row",
            id: matrix.row_ids[i].clone(),
        });
    }
    if let Some(j) = matrix.col_sums.iter().position(|&s| s == 0) {
        return Err(Error::ZeroMass {
            axis: "column",
            id: matrix.col_ids[j].clone(),
        });
    }
    let total = matrix.total as f64;
    let r: Vec<f64> = matrix.row_sums.iter().map(|&s| s as f64 / total).collect();
    let c: Vec<f64> = matrix.col_sums.iter().map(|&s| s as f64 / total).collect();
    let sqrt_r: Vec<f64> = r.iter().map(|x| x.sqrt()).collect();
    let sqrt_c: Vec<f64> = c.iter().map(|x| x.sqrt()).collect();

    let mut p = Vec::with_capacity(matrix.nnz());
    let mut k_rows = Vec::with_capacity(matrix.nnz());
    for i in 0..matrix.nrows() {
        for (j, v) in matrix.row(i) {
            let pij = v as f64 / total;
            p.push(pij);
            k_rows.push(pij / (sqrt_r[i] * sqrt_c[j]));
        }
    }

    let n = matrix.ncols();
    let mut col_offsets = vec![0usize; n + 1];
    for &j in &matrix.col_index {
        col_offsets[j + 1] += 1;
    }
    for j in 0..n {
        col_offsets[j + 1] += col_offsets[j];
    }
    let mut fill = col_offsets.clone();
    let mut col_rows = vec![0usize; matrix.nnz()];
    let mut k_cols = vec![0.0; matrix.nnz()];
    for i in 0..matrix.nrows() {
        for k in matrix.row_offsets[i]..matrix.row_offsets[i + 1] {
            let j = matrix.col_index[k];
            col_rows[fill[j]] = i;
            k_cols[fill[j]] = k_rows[k];
            fill[j] += 1;
        }
    }

    Ok(NormalizedMatrix {
        matrix,
        p,
        k_rows,
        col_offsets,
        col_rows,
        k_cols,
        r,
        c,
        sqrt_r,
        sqrt_c,
    })
}

impl<'a> NormalizedMatrix<'a> {
    pub fn matrix(&self) -> &'a InteractionMatrix {
        self.matrix
    }

    pub fn nrows(&self) -> usize {
        self.r.len()
    }

    pub fn ncols(&self) -> usize {
        self.c.len()
    }

    pub fn row_masses(&self) -> &[f64] {
        &self.r
    }

    pub fn col_masses(&self) -> &[f64] {
        &self.c
    }

    /// Sum of all `P` entries.
    pub fn p_total(&self) -> f64 {
        crate::numeric::exact_sum(self.p.iter().copied())
    }

    /// `S v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols());
        let t = exact_dot(&self.sqrt_c, v);
        let m = self.matrix;
        let mut acc = ExactSum::new();
        (0..self.nrows())
            .map(|i| {
                acc.clear();
                for k in m.row_offsets[i]..m.row_offsets[i + 1] {
                    acc.add(self.k_rows[k] * v[m.col_index[k]]);
                }
                acc.add(-(self.sqrt_r[i] * t));
                acc.value()
            })
            .collect()
    }

    /// `S' w`.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        assert_eq!(w.len(), self.nrows());
        let s = exact_dot(&self.sqrt_r, w);
        let mut acc = ExactSum::new();
        (0..self.ncols())
            .map(|j| {
                acc.clear();
                for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                    acc.add(self.k_cols[k] * w[self.col_rows[k]]);
                }
                acc.add(-(self.sqrt_c[j] * s));
                acc.value()
            })
            .collect()
    }

    /// Dense `S` by applying the operator to unit vectors. Small inputs only.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let (m, n) = (self.nrows(), self.ncols());
        let mut out = vec![vec![0.0; n]; m];
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            for (i, x) in self.apply(&e).into_iter().enumerate() {
                out[i][j] = x;
            }
            e[j] = 0.0;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Width of the iterated subspace; the leading Ritz pair is reported.
    pub block: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
            block: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularTriplet {
    pub sigma: f64,
    /// Unit left singular vector (one entry per user row).
    pub u: Vec<f64>,
    /// Unit right singular vector (one entry per influencer column).
    pub v: Vec<f64>,
    pub iterations: usize,
    /// `max(|S v - sigma u|, |S' u - sigma v|) / sigma` at exit.
    pub residual: f64,
}

fn orthonormalize(block: &mut [Vec<f64>]) {
    // modified Gram-Schmidt, applied twice
    for _ in 0..2 {
        for k in 0..block.len() {
            let (done, rest) = block.split_at_mut(k);
            let cur = &mut rest[0];
            for q in done.iter() {
                let proj = exact_dot(q, cur);
                cur.iter_mut().zip(q).for_each(|(x, y)| *x -= proj * y);
            }
            if normalize(cur) == 0.0 {
                // rank-deficient block: replace with a deterministic basis vector
                let n = cur.len();
                cur.iter_mut().for_each(|x| *x = 0.0);
                cur[k % n] = 1.0;
            }
        }
    }
}

/// Leading singular triplet of `S` by subspace power iteration on `S'S`.
///
/// The block is re-orthonormalized every step and a Rayleigh-Ritz projection
/// picks the leading vector, so convergence depends on the gap between the
/// first and `block+1`-th singular values rather than the first two.
pub fn leading_singular_triplet(n: &NormalizedMatrix<'_>, opts: &SolverOptions) -> Result<SingularTriplet> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let cols = n.ncols();
    let b = opts.block.clamp(1, cols.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    orthonormalize(&mut block);

    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let sv: Vec<Vec<f64>> = block.iter().map(|v| n.apply(v)).collect();
        let stsv: Vec<Vec<f64>> = sv.iter().map(|w| n.apply_transpose(w)).collect();
        let mut h = vec![0.0; b * b];
        for p in 0..b {
            for q in p..b {
                let x = exact_dot(&sv[p], &sv[q]);
                h[p * b + q] = x;
                h[q * b + p] = x;
            }
        }
        let (theta, y) = symmetric_eigen(&h, b);
        let rotate = |src: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..b)
                .map(|k| {
                    (0..cols)
                        .map(|row| crate::numeric::exact_sum((0..b).map(|p| src[p][row] * y[p * b + k])))
                        .collect()
                })
                .collect()
        };
        let ritz = rotate(&block);
        let images = rotate(&stsv);
        let sigma = theta[0].max(0.0).sqrt();
        if it > 3 && sigma <= opts.tol {
            return Err(Error::Degenerate { sigma, tol: opts.tol });
        }
        let lead = &ritz[0];
        let res_vec: Vec<f64> = images[0].iter().zip(lead).map(|(z, v)| z - theta[0] * v).collect();
        residual = if sigma > 0.0 {
            crate::numeric::norm2(&res_vec) / (sigma * sigma)
        } else {
            f64::INFINITY
        };
        if residual <= opts.tol {
            let mut v = lead.clone();
            normalize(&mut v);
            // orientation: largest-magnitude entry of v is positive
            let pivot = v
                .iter()
                .enumerate()
                .fold(0, |best, (k, x)| if x.abs() > v[best].abs() { k } else { best });
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let mut u = n.apply(&v);
            let sigma = normalize(&mut u);
            if sigma <= opts.tol {
                return Err(Error::Degenerate { sigma, tol: opts.tol });
            }
            let su = n.apply_transpose(&u);
            let left: Vec<f64> = n.apply(&v).iter().zip(&u).map(|(a, b)| a - sigma * b).collect();
            let right: Vec<f64> = su.iter().zip(&v).map(|(a, b)| a - sigma * b).collect();
            let residual = crate::numeric::norm2(&left).max(crate::numeric::norm2(&right)) / sigma;
            return Ok(SingularTriplet {
                sigma,
                u,
                v,
                iterations: it,
                residual,
            });
        }
        block = images;
        orthonormalize(&mut block);
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual,
    })
}

/// Score lookup table as exported in the scores CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    /// `id -> (score, raw_score)`
    pub users: BTreeMap<String, (f64, f64)>,
    pub influencers: BTreeMap<String, (f64, f64)>,
}

impl ScoreTable {
    pub fn user(&self, id: &str) -> Option<f64> {
        self.users.get(id).map(|s| s.0)
    }

    pub fn influencer(&self, id: &str) -> Option<f64> {
        self.influencers.get(id).map(|s| s.0)
    }

    /// Score of any node; influencer scores take precedence.
    pub fn node(&self, id: &str) -> Option<f64> {
        self.influencer(id).or_else(|| self.user(id))
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Row {
            id: String,
            kind: String,
            score: f64,
            raw_score: f64,
        }
        let mut t = ScoreTable::default();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row?;
            let target = match row.kind.as_str() {
                "user" => &mut t.users,
                "influencer" => &mut t.influencers,
                other => {
                    return Err(Error::InvalidParameter(format!("unknown score kind `{other}`")));
                }
            };
            target.insert(row.id, (row.score, row.raw_score));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdeologyScores {
    pub user_ids: Vec<String>,
    /// Sign-aligned `u1` entries divided by their largest magnitude.
    pub user_scores: Vec<f64>,
    /// Sign-aligned `u1` entries.
    pub user_raw: Vec<f64>,
    pub influencer_ids: Vec<String>,
    /// Median score of each influencer's retweeters.
    pub influencer_scores: Vec<f64>,
    pub influencer_raw: Vec<f64>,
    pub omitted_influencers: Vec<String>,
    pub sigma1: f64,
    pub anchor_id: String,
    pub iterations: usize,
    pub residual: f64,
    /// Largest `|u1|` entry used for rescaling.
    pub scale: f64,
    pub flipped: bool,
}

impl IdeologyScores {
    pub fn table(&self) -> ScoreTable {
        ScoreTable {
            users: self
                .user_ids
                .iter()
                .cloned()
                .zip(self.user_scores.iter().copied().zip(self.user_raw.iter().copied()))
                .collect(),
            influencers: self
                .influencer_ids
                .iter()
                .cloned()
                .zip(self.influencer_scores.iter().copied().zip(self.influencer_raw.iter().copied()))
                .collect(),
        }
    }

    /// CSV `id,kind,score,raw_score`; users in row order, then influencers.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "kind", "score", "raw_score"])?;
        for ((id, s), raw) in self.user_ids.iter().zip(&self.user_scores).zip(&self.user_raw) {
            w.write_record([id.as_str(), "user", &s.to_string(), &raw.to_string()])?;
        }
        for ((id, s), raw) in self
            .influencer_ids
            .iter()
            .zip(&self.influencer_scores)
            .zip(&self.influencer_raw)
        {
            w.write_record([id.as_str(), "influencer", &s.to_string(), &raw.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Turns the leading triplet into user and influencer scores.
///
/// Orientation is fixed so the anchor influencer scores negative; user scores
/// are then divided by the largest magnitude to lie in `[-1, 1]`.
pub fn score_users_and_influencers(
    matrix: &InteractionMatrix,
    triplet: &SingularTriplet,
    anchor_id: &str,
) -> Result<IdeologyScores> {
    let anchor = matrix
        .col_ids
        .iter()
        .position(|c| c == anchor_id)
        .ok_or_else(|| Error::AnchorMissing(anchor_id.to_string()))?;

    let mut retweeters: Vec<Vec<usize>> = vec![Vec::new(); matrix.ncols()];
    for i in 0..matrix.nrows() {
        for (j, _) in matrix.row(i) {
            retweeters[j].push(i);
        }
    }
    let medians = |scores: &[f64]| -> Vec<Option<f64>> {
        retweeters
            .iter()
            .map(|rows| median(&rows.iter().map(|&i| scores[i]).collect::<Vec<_>>()))
            .collect()
    };

    let raw_medians = medians(&triplet.u);
    let anchor_median = raw_medians[anchor].unwrap_or(0.0);
    let flipped = if anchor_median != 0.0 {
        anchor_median > 0.0
    } else {
        triplet.v[anchor] > 0.0
    };
    let sign = if flipped { -1.0 } else { 1.0 };
    let user_raw: Vec<f64> = triplet.u.iter().map(|x| sign * x).collect();
    let scale = user_raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let user_scores: Vec<f64> = user_raw.iter().map(|x| x / scale).collect();

    let scaled_medians = medians(&user_scores);
    let raw_medians = medians(&user_raw);
    let mut influencer_ids = Vec::new();
    let mut influencer_scores = Vec::new();
    let mut influencer_raw = Vec::new();
    let mut omitted = Vec::new();
    for (j, id) in matrix.col_ids.iter().enumerate() {
        match (scaled_medians[j], raw_medians[j]) {
            (Some(s), Some(r)) => {
                influencer_ids.push(id.clone());
                influencer_scores.push(s);
                influencer_raw.push(r);
            }
            _ => {
                log::warn!("influencer `{id}` has no scored retweeters");
                omitted.push(id.clone());
            }
        }
    }

    Ok(IdeologyScores {
        user_ids: matrix.row_ids.clone(),
        user_scores,
        user_raw,
        influencer_ids,
        influencer_scores,
        influencer_raw,
        omitted_influencers: omitted,
        sigma1: triplet.sigma,
        anchor_id: anchor_id.to_string(),
        iterations: triplet.iterations,
        residual: triplet.residual,
        scale,
        flipped,
    })
}

/// Normalization, leading triplet, and scoring in one call.
pub fn estimate_ideology(
    matrix: &InteractionMatrix,
    anchor_id: &str,
    opts: &SolverOptions,
) -> Result<IdeologyScores> {
    let normalized = normalize_matrix(matrix)?;
    let triplet = leading_singular_triplet(&normalized, opts)?;
    score_users_and_influencers(matrix, &triplet, anchor_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphBuilder, GraphOptions};

    #[test]
    fn matrix_from_graph_respects_min_distinct() {
        let mut b = GraphBuilder::new();
        b.add_edge("u1", "i1", 3);
        b.add_edge("u2", "i2", 1);
        let (g, _) = b.finish(GraphOptions::default());
        let infl = InfluencerSet {
            members: vec!["i1".into(), "i2".into()],
            seed_source: "test".into(),
            min_unique_in_degree: 1,
        };
        let (m, _) = build_interaction_matrix(&g, &infl, 1).unwrap();
        assert_eq!(m.to_dense(), vec![vec![3, 0], vec![0, 1]]);
        assert_eq!(m.row_ids(), ["u1", "u2"]);

        let err = build_interaction_matrix(&g, &infl, 2).unwrap_err();
        assert!(matches!(err, Error::MatrixTooSmall { rows: 0, .. }));
    }

    #[test]
    fn zero_mass_columns_are_dropped() {
        let mut b = GraphBuilder::new();
        b.add_edge("u1", "i1", 1);
        b.add_edge("u1", "i2", 1);
        b.add_edge("u2", "i1", 2);
        b.add_edge("u2", "i2", 1);
        b.add_edge("u3", "i3", 1);
        let (g, _) = b.finish(GraphOptions::default());
        let infl = InfluencerSet {
            members: vec!["i1".into(), "i2".into(), "i3".into()],
            seed_source: "test".into(),
            min_unique_in_degree: 1,
        };
        let (m, report) = build_interaction_matrix(&g, &infl, 2).unwrap();
        assert_eq!(m.col_ids(), ["i1", "i2"]);
        assert_eq!(report.dropped_columns, vec!["i3".to_string()]);
        assert_eq!(report.rows_below_min_distinct, 1);
    }

    #[test]
    fn identity_normalizes_to_half_residuals() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        let n = normalize_matrix(&m).unwrap();
        let s = n.to_dense();
        let expect = [[0.5, -0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[i][j] - expect[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn uniform_matrix_has_zero_residuals() {
        let m = InteractionMatrix::from_dense(&[vec![2, 2, 2], vec![2, 2, 2]]);
        let n = normalize_matrix(&m).unwrap();
        for row in n.to_dense() {
            for x in row {
                assert!(x.abs() < 1e-15);
            }
        }
        let err = leading_singular_triplet(&n, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn zero_row_is_fatal() {
        let m = InteractionMatrix::from_dense(&[vec![1, 2], vec![0, 0], vec![3, 1]]);
        let err = normalize_matrix(&m).unwrap_err();
        assert!(matches!(err, Error::ZeroMass { axis: "row", ref id } if id == "r1"));
    }

    #[test]
    fn identity_triplet() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        let n = normalize_matrix(&m).unwrap();
        let t = leading_singular_triplet(&n, &SolverOptions::default()).unwrap();
        assert!((t.sigma - 1.0).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((t.u[0].abs() - r).abs() < 1e-12);
        assert!((t.u[0] + t.u[1]).abs() < 1e-12);
    }

    #[test]
    fn anchor_orients_identity_scores() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        for anchor in ["c0", "c1"] {
            let s = estimate_ideology(&m, anchor, &SolverOptions::default()).unwrap();
            let expect = if anchor == "c0" { [-1.0, 1.0] } else { [1.0, -1.0] };
            assert!((s.user_scores[0] - expect[0]).abs() < 1e-12);
            assert!((s.user_scores[1] - expect[1]).abs() < 1e-12);
            let a = s.influencer_ids.iter().position(|x| x == anchor).unwrap();
            assert!(s.influencer_scores[a] < 0.0);
        }
    }

    #[test]
    fn missing_anchor_is_fatal() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        let err = estimate_ideology(&m, "nobody", &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::AnchorMissing(_)));
    }

    #[test]
    fn influencer_score_is_median_of_retweeters() {
        // column 0 retweeted by rows 0..3 only, column 1 by rows 3..5
        let m = InteractionMatrix::from_dense(&[
            vec![2, 0],
            vec![3, 0],
            vec![1, 0],
            vec![1, 1],
            vec![0, 2],
            vec![0, 5],
        ]);
        let s = estimate_ideology(&m, "c0", &SolverOptions::default()).unwrap();
        let mut col0: Vec<f64> = [0, 1, 2, 3].iter().map(|&i| s.user_scores[i]).collect();
        col0.sort_by(f64::total_cmp);
        let expect = (col0[1] + col0[2]) / 2.0;
        assert_eq!(s.influencer_scores[0], expect);
        assert!(s.influencer_scores[0] < 0.0);
    }

    #[test]
    fn invalid_tolerance() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        let n = normalize_matrix(&m).unwrap();
        let opts = SolverOptions { tol: 0.0, ..Default::default() };
        assert!(matches!(leading_singular_triplet(&n, &opts), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn scores_csv_round_trips_through_table() {
        let m = InteractionMatrix::from_dense(&[vec![1, 0], vec![0, 1]]);
        let s = estimate_ideology(&m, "c0", &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let t = ScoreTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(t, s.table());
    }
}
