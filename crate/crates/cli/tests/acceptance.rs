//! Acceptance criteria for the toolkit. Runs without the libtest harness so
//! every criterion prints exactly one PASS/FAIL line; exits nonzero if any fail.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use echoscope_core::echoreport::{neighbor_opinion_grid, NeighborMode, DEFAULT_GRID_BINS};
use echoscope_core::engagement::{summarize_tweets, tweet_ae, Action};
use echoscope_core::graph::{build_graph, select_influencers, GraphOptions};
use echoscope_core::ideology::{
    build_interaction_matrix, estimate_ideology, leading_singular_triplet, normalize_matrix, IdeologyScores,
    InteractionMatrix, SolverOptions,
};
use echoscope_core::ingest::{apply_filters, CorpusFilter, FilterReport, TweetKind, TweetRecord};
use echoscope_core::mediabias::{user_leanings, DomainTable, LeaningLabel, LeaningOptions};
use echoscope_core::stats::{dip_critical_value, dip_statistic, DipLevel};
use echoscope_core::synthgen::{dense_ca_oracle, generate, GeneratorConfig, SyntheticCorpus, REFERENCE_MEAN_AE};
use echoscope_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_counts(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<u64>> {
    let density = rng.random_range(0.2..0.9);
    let mut a: Vec<Vec<u64>> = (0..rows)
        .map(|_| (0..cols).map(|_| if rng.random_bool(density) { rng.random_range(1..20) } else { 0 }).collect())
        .collect();
    for (i, row) in a.iter_mut().enumerate() {
        if row.iter().all(|&x| x == 0) {
            row[i % cols] = 1;
        }
    }
    for j in 0..cols {
        if a.iter().all(|r| r[j] == 0) {
            a[j % rows][j] = 1;
        }
    }
    a
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn within(elapsed: Duration, limit_secs: u64) -> Outcome {
    if elapsed <= Duration::from_secs(limit_secs) {
        Ok(format!("{:.2}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
    }
}

fn ca_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2023);
    let (mut checked, mut worst_sigma, mut worst_dot) = (0, 0.0f64, 1.0f64);
    while checked < 100 {
        let rows = rng.random_range(2..=50);
        let cols = rng.random_range(2..=20);
        let a = random_counts(&mut rng, rows, cols);
        let oracle = match dense_ca_oracle(&a, 1e-12) {
            Ok(o) => o,
            // tied leading singular values have no unique vector to compare
            Err(Error::Degenerate { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let m = InteractionMatrix::from_dense(&a);
        let n = normalize_matrix(&m).map_err(|e| e.to_string())?;
        let t = leading_singular_triplet(&n, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let ds = (t.sigma - oracle.sigma1()).abs();
        let du = dot(&t.u, &oracle.u[0]).abs();
        let dv = dot(&t.v, &oracle.v[0]).abs();
        ensure!(ds <= 1e-9, "{rows}x{cols}: |dsigma1| = {ds:e}");
        ensure!(du >= 1.0 - 1e-9, "{rows}x{cols}: |<u,u'>| = {du}");
        ensure!(dv >= 1.0 - 1e-9, "{rows}x{cols}: |<v,v'>| = {dv}");
        worst_sigma = worst_sigma.max(ds);
        worst_dot = worst_dot.min(du);
        checked += 1;
    }
    let t = within(start.elapsed(), 10)?;
    Ok(format!("100 matrices, max |dsigma1| {worst_sigma:.1e}, min |<u,u'>| {worst_dot:.15}, {t}"))
}

fn invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut trials = 0;
    let mut worst = 0.0f64;
    while trials < 50 {
        let rows = rng.random_range(3..=40);
        let cols = rng.random_range(2..=10);
        let a = random_counts(&mut rng, rows, cols);
        let m = InteractionMatrix::from_dense(&a);
        let anchor = m.col_ids()[0].clone();
        let Ok(base) = estimate_ideology(&m, &anchor, &SolverOptions::default()) else {
            continue;
        };
        for k in [2u64, 5, 10] {
            let scaled: Vec<Vec<u64>> = a.iter().map(|r| r.iter().map(|x| x * k).collect()).collect();
            let s = estimate_ideology(&InteractionMatrix::from_dense(&scaled), &anchor, &SolverOptions::default())
                .map_err(|e| e.to_string())?;
            let d = max_diff(&base, &s);
            ensure!(d <= 1e-12, "k={k}: max score change {d:e}");
            worst = worst.max(d);
        }

        let mut order: Vec<usize> = (0..rows).collect();
        for i in (1..rows).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let permuted = InteractionMatrix::from_triplets(
            order.iter().map(|&i| m.row_ids()[i].clone()).collect(),
            m.col_ids().to_vec(),
            order
                .iter()
                .enumerate()
                .flat_map(|(k, &i)| a[i].iter().enumerate().map(move |(j, &x)| (k, j, x)))
                .collect::<Vec<_>>(),
        );
        let p = estimate_ideology(&permuted, &anchor, &SolverOptions::default()).map_err(|e| e.to_string())?;
        for (k, &i) in order.iter().enumerate() {
            ensure!(
                p.user_ids[k] == base.user_ids[i] && p.user_scores[k].to_bits() == base.user_scores[i].to_bits(),
                "row permutation changed the score of {}",
                base.user_ids[i]
            );
        }
        ensure!(p.influencer_scores == base.influencer_scores, "row permutation changed influencer scores");
        trials += 1;
    }
    Ok(format!("50 matrices x k in {{2,5,10}}, max change {worst:.1e}; permutations exact"))
}

fn max_diff(a: &IdeologyScores, b: &IdeologyScores) -> f64 {
    a.user_scores
        .iter()
        .zip(&b.user_scores)
        .chain(a.influencer_scores.iter().zip(&b.influencer_scores))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct SyntheticRun {
    corpus: SyntheticCorpus,
    kept: Vec<TweetRecord>,
    graph: echoscope_core::graph::RetweetGraph,
    scores: IdeologyScores,
}

fn synthetic_run() -> Result<SyntheticRun, String> {
    let corpus = generate(&GeneratorConfig::default()).map_err(|e| e.to_string())?;
    let filter = CorpusFilter::default();
    let mut report = FilterReport::default();
    let kept: Vec<TweetRecord> = apply_filters(corpus.records.clone(), &filter, &mut report).collect();
    let (graph, _) = build_graph(filter.network_subset(kept.iter().cloned()), GraphOptions::default());
    let sel = select_influencers(&graph, &corpus.truth.planted_hubs, 100, "truth").map_err(|e| e.to_string())?;
    let (m, _) = build_interaction_matrix(&graph, &sel.set, 2).map_err(|e| e.to_string())?;
    let scores = estimate_ideology(&m, &corpus.truth.anchor, &SolverOptions::default()).map_err(|e| e.to_string())?;
    Ok(SyntheticRun { corpus, kept, graph, scores })
}

fn community_recovery(run: &SyntheticRun, elapsed: Duration) -> Outcome {
    let truth = &run.corpus.truth;
    let s = &run.scores;
    let agree = s
        .user_ids
        .iter()
        .zip(&s.user_scores)
        .filter(|(id, x)| (truth.community[*id] == "A") == (**x < 0.0))
        .count();
    let share = agree as f64 / s.user_ids.len() as f64;
    ensure!(share >= 0.95, "sign agreement {share:.4} < 0.95");
    let dip = dip_statistic(&s.user_scores);
    let crit = dip_critical_value(s.user_scores.len(), DipLevel::P95);
    ensure!(dip > crit, "dip {dip:.4} does not exceed critical value {crit:.4}");
    let t = within(elapsed, 30)?;
    Ok(format!(
        "{} users, sign agreement {share:.4}, dip {dip:.4} > {crit:.4}, {t}",
        s.user_ids.len()
    ))
}

fn engagement_calibration(run: &SyntheticRun) -> Outcome {
    let truth = &run.corpus.truth;
    for a in Action::ALL {
        ensure!(
            truth.target_mean_ae.get(a) == REFERENCE_MEAN_AE.get(a),
            "generator target for {a} is not the reference mean"
        );
    }
    let filter = CorpusFilter::default();
    let tweets: Vec<TweetRecord> = filter.engagement_subset(run.kept.iter().cloned()).collect();
    let mut parts = Vec::new();
    for s in summarize_tweets(&tweets) {
        let want = truth.target_mean_ae.get(s.action);
        let rel = s.mean_ae / want - 1.0;
        let r = s.correlation.as_ref().ok_or(format!("{}: no correlation", s.action))?.pearson_r;
        let want_r = truth.target_log_pearson.get(s.action);
        ensure!(rel.abs() <= 0.05, "{}: mean {:.6} vs {want:.6} ({:+.2}%)", s.action, s.mean_ae, 100.0 * rel);
        ensure!((r - want_r).abs() <= 0.02, "{}: r {r:.4} vs {want_r:.4}", s.action);
        parts.push(format!("{} {:+.2}% / dr {:+.4}", s.action, 100.0 * rel, r - want_r));
    }
    Ok(parts.join(", "))
}

fn record(id: &str, impressions: u64, counts: [u64; 4]) -> TweetRecord {
    TweetRecord {
        tweet_id: id.to_string(),
        author_id: "hand".to_string(),
        created_at: Utc.with_ymd_and_hms(2023, 1, 10, 12, 0, 0).unwrap(),
        lang: "en".to_string(),
        kind: TweetKind::Original,
        retweeted_author_id: None,
        impressions,
        retweets: counts[0],
        replies: counts[1],
        likes: counts[2],
        quotes: counts[3],
        urls: Vec::new(),
        author_followers: 100,
    }
}

fn ae_exactness() -> Outcome {
    // (impressions, [retweet, reply, like, quote]) with ratios written as exact fractions
    let cases: [(u64, [u64; 4]); 6] = [
        (8, [1, 3, 5, 0]),
        (3, [1, 2, 3, 0]),
        (10_000_000, [2909, 2479, 11154, 612]),
        (1, [0, 0, 0, 0]),
        (7, [7, 1, 2, 3]),
        (1_000_003, [999_983, 17, 5, 1]),
    ];
    let mut worst = 0.0f64;
    for (i, (imp, counts)) in cases.iter().enumerate() {
        let got = tweet_ae(&record(&format!("t{i}"), *imp, *counts)).ok_or("no AE for nonzero impressions")?;
        for (k, a) in Action::ALL.iter().enumerate() {
            let want = counts[k] as f64 / *imp as f64;
            let err = (got[*a] - want).abs();
            ensure!(err <= 1e-15, "{a} {}/{imp}: error {err:e}", counts[k]);
            worst = worst.max(err);
        }
    }
    let fixed = tweet_ae(&record("f", 8, [1, 3, 5, 0])).unwrap();
    ensure!(
        fixed[Action::Retweet] == 0.125 && fixed[Action::Reply] == 0.375 && fixed[Action::Like] == 0.625,
        "eighths are not exact"
    );
    ensure!(tweet_ae(&record("z", 0, [1, 0, 0, 0])).is_none(), "zero impressions must yield no AE");
    Ok(format!("{} hand records, max error {worst:.1e}", cases.len()))
}

fn leaning_exactness() -> Outcome {
    let want: [(LeaningLabel, f64); 7] = [
        (LeaningLabel::ExtremeLeft, -1.0),
        (LeaningLabel::Left, -0.66),
        (LeaningLabel::LeftCenter, -0.33),
        (LeaningLabel::LeastBiased, 0.0),
        (LeaningLabel::RightCenter, 0.33),
        (LeaningLabel::Right, 0.66),
        (LeaningLabel::ExtremeRight, 1.0),
    ];
    for (label, v) in want {
        ensure!(label.score().to_bits() == v.to_bits(), "{label:?} -> {} (want {v})", label.score());
    }

    let csv = "domain,leaning_label,reliability\n\
               xl.com,ExtremeLeft,reliable\n\
               l.com,Left,reliable\n\
               lc.com,LeftCenter,reliable\n\
               c.com,LeastBiased,reliable\n\
               rc.com,RightCenter,reliable\n\
               r.com,Right,reliable\n\
               xr.com,ExtremeRight,reliable\n";
    let (table, _) = DomainTable::read_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    let hand: [(&str, &[&str], f64); 5] = [
        ("u1", &["https://l.com/a", "https://r.com/b", "https://rc.com/c"], (-0.66 + 0.66 + 0.33) / 3.0),
        ("u2", &["https://xl.com/1", "https://xl.com/2", "https://lc.com/3"], (-1.0 - 1.0 - 0.33) / 3.0),
        ("u3", &["https://c.com/x"], 0.0),
        ("u4", &["https://www.xr.com/p", "https://r.com/q", "https://unknown.org/z"], (1.0 + 0.66) / 2.0),
        ("u5", &["https://lc.com/1", "https://rc.com/2", "https://l.com/3", "https://r.com/4"], 0.0),
    ];
    let records: Vec<TweetRecord> = hand
        .iter()
        .flat_map(|(user, urls, _)| {
            urls.iter().enumerate().map(move |(k, u)| TweetRecord {
                author_id: user.to_string(),
                urls: vec![u.to_string()],
                ..record(&format!("{user}-{k}"), 10, [0; 4])
            })
        })
        .collect();
    let got = user_leanings(records, &table, LeaningOptions::default());
    let mut worst = 0.0f64;
    for (user, _, want) in hand {
        let score = got.get(user).and_then(|l| l.score).ok_or(format!("{user}: no score"))?;
        let err = (score - want).abs();
        ensure!(err <= 1e-12, "{user}: {score} vs {want}");
        worst = worst.max(err);
    }
    Ok(format!("7 labels bit-exact, {} hand users, max error {worst:.1e}", hand.len()))
}

fn echo_chamber_grid(run: &SyntheticRun) -> Outcome {
    let ng = neighbor_opinion_grid(&run.scores.table(), &run.graph, DEFAULT_GRID_BINS, NeighborMode::Out);
    let cells: u64 = ng.grid.counts.iter().flatten().sum();
    let marginal: u64 = ng.grid.x_marginal().iter().sum();
    ensure!(cells == ng.grid.total() && marginal == cells, "cell sum {cells}, marginal {marginal}, total {}", ng.grid.total());
    ensure!(
        cells as usize + ng.skipped_no_scored_neighbors == ng.population,
        "{cells} binned + {} skipped != {} users",
        ng.skipped_no_scored_neighbors,
        ng.population
    );
    ensure!(ng.diagonal_share >= 0.9, "on-diagonal share {:.4} < 0.9", ng.diagonal_share);
    Ok(format!(
        "{} users binned, {} skipped, on-diagonal share {:.4}",
        cells, ng.skipped_no_scored_neighbors, ng.diagonal_share
    ))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_echoscope"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`echoscope {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn pipeline(dir: &Path) -> Result<(), String> {
    let steps: [&[&str]; 6] = [
        &["synth", "--out-dir", "synth", "--seed", "7"],
        &[
            "ingest",
            "--input",
            "synth/corpus.jsonl",
            "--out",
            "work/filtered.jsonl",
            "--exclusions-out",
            "work/exclusions.csv",
            "--rejects-out",
            "work/rejects.txt",
        ],
        &[
            "graph",
            "--input",
            "work/filtered.jsonl",
            "--seeds",
            "synth/seeds.txt",
            "--graph-out",
            "work/graph.csv",
            "--influencers-out",
            "work/influencers.txt",
        ],
        &[
            "ideology",
            "--graph",
            "work/graph.csv",
            "--influencers",
            "work/influencers.txt",
            "--anchor",
            "u0000",
            "--out",
            "work/scores.csv",
        ],
        &[
            "engagement",
            "--input",
            "work/filtered.jsonl",
            "--domains",
            "synth/domains.csv",
            "--group-by",
            "reliability",
            "--out-dir",
            "engagement",
        ],
        &[
            "report",
            "--input",
            "work/filtered.jsonl",
            "--graph",
            "work/graph.csv",
            "--scores",
            "work/scores.csv",
            "--domains",
            "synth/domains.csv",
            "--out-dir",
            "report",
        ],
    ];
    steps.iter().try_for_each(|s| run_cli(dir, s))
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline_determinism() -> Outcome {
    let start = Instant::now();
    let base = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (base.path().join("a"), base.path().join("b"));
    for d in [&a, &b] {
        std::fs::create_dir_all(d).map_err(|e| e.to_string())?;
        pipeline(d)?;
    }
    let (ta, tb) = (tree(&a), tree(&b));
    ensure!(ta.keys().eq(tb.keys()), "output trees list different files");
    for (p, bytes) in &ta {
        ensure!(bytes == &tb[p], "{} differs between runs", p.display());
    }
    ensure!(ta.len() >= 20, "only {} output files", ta.len());
    let bytes: usize = ta.values().map(Vec::len).sum();
    let t = within(start.elapsed(), 120)?;
    Ok(format!("{} files, {bytes} bytes identical across runs, {t}", ta.len()))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".to_string())),
    }
}

fn main() {
    let start = Instant::now();
    let run = synthetic_run();
    let synth_elapsed = start.elapsed();
    let with_run = |f: &dyn Fn(&SyntheticRun) -> Outcome| match &run {
        Ok(r) => guarded(|| f(r)),
        Err(e) => Err(format!("synthetic run failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("1 CA oracle equivalence", guarded(ca_oracle_equivalence)),
        ("2 scale/permutation invariance", guarded(invariance)),
        ("3 community recovery", with_run(&|r| community_recovery(r, synth_elapsed))),
        ("4 engagement calibration", with_run(&engagement_calibration)),
        ("5 AE definition exactness", guarded(ae_exactness)),
        ("6 leaning mapping exactness", guarded(leaning_exactness)),
        ("7 echo-chamber grid", with_run(&echo_chamber_grid)),
        ("8 pipeline determinism", guarded(pipeline_determinism)),
    ];

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
