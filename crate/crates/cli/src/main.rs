use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use echoscope_core::echoreport::{
    ae_followers_density, ideology_histograms, leaning_ideology_distributions, neighbor_opinion_grid, NeighborMode,
    DEFAULT_GRID_BINS, DEFAULT_HISTOGRAM_BINS,
};
use echoscope_core::engagement::{
    aggregate_ae, domain_key, group_ae, ideology_groups, leaning_groups, reliability_groups, summarize_tweets,
    tweet_key, user_key, write_engagement_csv, write_group_csv, write_mean_of_ratios_csv, write_summary_csv,
    DomainAttribution, Granularity,
};
use echoscope_core::graph::{
    build_graph, read_seed_file, select_influencers, write_id_list, GraphOptions, InfluencerSet, RetweetGraph,
};
use echoscope_core::ideology::{build_interaction_matrix, estimate_ideology, ScoreTable, SolverOptions};
use echoscope_core::ingest::{
    apply_filters, parse_corpus, parse_timestamp, CorpusFilter, FilterReport, RecordSchema, TweetRecord,
};
use echoscope_core::mediabias::{load_domain_table, user_leanings, write_user_leanings_csv, DomainTable, LeaningOptions};
use echoscope_core::synthgen::{generate, GeneratorConfig};

#[derive(Parser)]
#[command(name = "echoscope", version, about = "Retweet-network ideology and engagement analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schema {
    Flat,
    Api,
}

impl From<Schema> for RecordSchema {
    fn from(s: Schema) -> Self {
        match s {
            Schema::Flat => RecordSchema::Flat,
            Schema::Api => RecordSchema::Api,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Tweet,
    User,
    Domain,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupBy {
    Ideology,
    Reliability,
    Leaning,
}

#[derive(Clone, Copy, ValueEnum)]
enum Attribution {
    Full,
    Fractional,
}

#[derive(Clone, Copy, ValueEnum)]
enum Neighbors {
    Out,
    In,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground truth.
    Synth {
        /// JSON generator config; omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and filter a raw corpus into flat records.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "flat")]
        schema: Schema,
        /// Earliest kept timestamp (RFC 3339 or YYYY-MM-DD, UTC).
        #[arg(long)]
        min_date: Option<String>,
        /// Allowed language codes (repeatable).
        #[arg(long = "lang", default_values_t = vec!["en".to_string()])]
        langs: Vec<String>,
        /// Write malformed input lines here.
        #[arg(long)]
        rejects_out: Option<PathBuf>,
        /// Filtered records, one flat JSON object per line.
        #[arg(long)]
        out: PathBuf,
        /// Per-reason exclusion counts (CSV).
        #[arg(long)]
        exclusions_out: Option<PathBuf>,
    },
    /// Build the retweet graph and refine the influencer set.
    Graph {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "flat")]
        schema: Schema,
        /// Candidate influencer ids, one per line. Without it every node is a candidate.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        min_indegree: usize,
        #[arg(long)]
        include_self_loops: bool,
        #[arg(long)]
        graph_out: PathBuf,
        #[arg(long)]
        influencers_out: PathBuf,
    },
    /// Correspondence-analysis ideology scores.
    Ideology {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        influencers: PathBuf,
        /// Influencer whose side is oriented negative.
        #[arg(long)]
        anchor: String,
        #[arg(long, default_value_t = 2)]
        min_distinct: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Scores CSV; a `.json` sidecar with solver details is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Active-engagement tables.
    Engagement {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "domain")]
        granularity: GranularityArg,
        #[arg(long, value_enum)]
        group_by: Option<GroupBy>,
        #[arg(long, value_enum, default_value = "full")]
        attribution: Attribution,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Plot-ready histograms and density grids.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GRID_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
        hist_bins: usize,
        /// Per-influencer retweeter histograms for this many top influencers.
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long, value_enum, default_value = "out")]
        neighbors: Neighbors,
        #[arg(long, default_value_t = 2)]
        min_shares: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_records(path: &Path, schema: RecordSchema) -> Result<Vec<TweetRecord>> {
    let mut reader = parse_corpus(path, schema)?;
    let records = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    let stats = reader.into_stats()?;
    if stats.total_rejects() > 0 {
        log::warn!("{}: {} malformed lines skipped", path.display(), stats.total_rejects());
    }
    Ok(records)
}

fn read_graph(path: &Path) -> Result<RetweetGraph> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(RetweetGraph::read_edge_csv(f, GraphOptions::default())?)
}

fn read_scores(path: &Path) -> Result<ScoreTable> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(ScoreTable::read_csv(f)?)
}

fn read_domains(path: &Path) -> Result<DomainTable> {
    let (table, report) = load_domain_table(path)?;
    for (line, msg) in &report.rejected {
        log::warn!("{}:{line}: {msg}", path.display());
    }
    Ok(table)
}

fn synth(config: Option<PathBuf>, out_dir: PathBuf, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(p) => GeneratorConfig::load(&p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let corpus = generate(&cfg)?;
    corpus.write_to(&out_dir, &cfg)?;
    log::info!("{} records written to {}", corpus.records.len(), out_dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ingest(
    input: PathBuf,
    schema: Schema,
    min_date: Option<String>,
    langs: Vec<String>,
    rejects_out: Option<PathBuf>,
    out: PathBuf,
    exclusions_out: Option<PathBuf>,
) -> Result<()> {
    let mut filter = CorpusFilter::default();
    if let Some(d) = min_date {
        let (t, _) = parse_timestamp(&d).with_context(|| format!("unparseable --min-date `{d}`"))?;
        filter.min_date = t;
    }
    if !filter.impressions_reliable() {
        log::warn!("min date precedes the impression-metric release; engagement on this output is unreliable");
    }
    filter.allowed_langs = langs.into_iter().collect();

    let mut reader = parse_corpus(&input, schema.into())?;
    if let Some(p) = &rejects_out {
        reader = reader.with_reject_sink(Box::new(create(p)?));
    }
    let mut w = create(&out)?;
    let mut report = FilterReport::default();
    let mut failure = None;
    {
        let records = reader.by_ref().map_while(|r| match r {
            Ok(r) => Some(r),
            Err(e) => {
                failure = Some(e);
                None
            }
        });
        for r in apply_filters(records, &filter, &mut report) {
            w.write_all(r.to_flat_json().as_bytes())?;
            w.write_all(b"\n")?;
        }
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    w.flush()?;
    let stats = reader.into_stats()?;
    log::info!(
        "{} lines, {} records, {} rejects, {} retained",
        stats.lines,
        stats.records,
        stats.total_rejects(),
        report.retained
    );
    if let Some(p) = exclusions_out {
        let mut w = create(&p)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn graph(
    input: PathBuf,
    schema: Schema,
    seeds: Option<PathBuf>,
    min_indegree: usize,
    include_self_loops: bool,
    graph_out: PathBuf,
    influencers_out: PathBuf,
) -> Result<()> {
    let filter = CorpusFilter::default();
    let records = read_records(&input, schema.into())?;
    let (g, stats) = build_graph(filter.network_subset(records), GraphOptions { include_self_loops });
    if stats.missing_retweeted_author > 0 {
        log::warn!("{} retweets lacked a retweeted author", stats.missing_retweeted_author);
    }
    let (candidates, source) = match &seeds {
        Some(p) => (read_seed_file(p)?, p.display().to_string()),
        None => (g.rank_by_in_degree().into_iter().map(|(id, _)| id).collect(), "graph".to_string()),
    };
    let sel = select_influencers(&g, &candidates, min_indegree, &source)?;
    log::info!(
        "{} nodes, {} edges, {} influencers ({} seeds absent, {} below threshold)",
        g.node_count(),
        g.edge_count(),
        sel.set.members.len(),
        sel.missing.len(),
        sel.below_threshold.len()
    );
    let mut w = create(&graph_out)?;
    g.write_edge_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&influencers_out)?;
    write_id_list(&mut w, &sel.set.members)?;
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ideology(
    graph: PathBuf,
    influencers: PathBuf,
    anchor: String,
    min_distinct: usize,
    tol: f64,
    seed: u64,
    max_iter: usize,
    out: PathBuf,
) -> Result<()> {
    let g = read_graph(&graph)?;
    let members = read_seed_file(&influencers)?;
    let set = InfluencerSet {
        members,
        seed_source: influencers.display().to_string(),
        min_unique_in_degree: 0,
    };
    let (m, report) = build_interaction_matrix(&g, &set, min_distinct)?;
    let opts = SolverOptions {
        tol,
        max_iter,
        seed,
        ..SolverOptions::default()
    };
    let scores = estimate_ideology(&m, &anchor, &opts)?;
    let mut w = create(&out)?;
    scores.write_csv(&mut w)?;
    w.flush()?;

    let sidecar = serde_json::json!({
        "rows": m.nrows(),
        "cols": m.ncols(),
        "nnz": m.nnz(),
        "rows_below_min_distinct": report.rows_below_min_distinct,
        "dropped_columns": report.dropped_columns,
        "sigma1": scores.sigma1,
        "iterations": scores.iterations,
        "residual": scores.residual,
        "anchor": scores.anchor_id,
        "flipped": scores.flipped,
        "scale": scores.scale,
        "omitted_influencers": scores.omitted_influencers,
        "tol": tol,
        "seed": seed,
    });
    write_json(&out.with_extension("json"), &sidecar)?;
    log::info!("{}x{} matrix, sigma1 = {}", m.nrows(), m.ncols(), scores.sigma1);
    Ok(())
}

fn engagement(
    input: PathBuf,
    domains: Option<PathBuf>,
    scores: Option<PathBuf>,
    granularity: GranularityArg,
    group_by: Option<GroupBy>,
    attribution: Attribution,
    out_dir: PathBuf,
) -> Result<()> {
    let filter = CorpusFilter::default();
    let tweets: Vec<TweetRecord> = filter
        .engagement_subset(read_records(&input, RecordSchema::Flat)?)
        .collect();
    let table = domains.as_deref().map(read_domains).transpose()?;
    let attribution = match attribution {
        Attribution::Full => DomainAttribution::Full,
        Attribution::Fractional => DomainAttribution::Fractional,
    };

    let agg = match granularity {
        GranularityArg::Tweet => aggregate_ae(tweets.iter().cloned(), Granularity::Tweet, tweet_key),
        GranularityArg::User => aggregate_ae(tweets.iter().cloned(), Granularity::User, user_key),
        GranularityArg::Domain => {
            let Some(t) = &table else {
                bail!("--granularity domain needs --domains");
            };
            aggregate_ae(tweets.iter().cloned(), Granularity::Domain, domain_key(t, attribution))
        }
    };
    if agg.ae_above_one > 0 {
        log::warn!("{} subject-action pairs have AE above 1", agg.ae_above_one);
    }

    fs::create_dir_all(&out_dir)?;
    let mut w = create(&out_dir.join("engagement.csv"))?;
    write_engagement_csv(&mut w, &agg.records)?;
    w.flush()?;
    let mut w = create(&out_dir.join("mean_of_ratios.csv"))?;
    write_mean_of_ratios_csv(&mut w, &agg.records)?;
    w.flush()?;
    let mut w = create(&out_dir.join("summary.csv"))?;
    write_summary_csv(&mut w, &summarize_tweets(&tweets))?;
    w.flush()?;

    if let Some(by) = group_by {
        let groups: BTreeMap<String, String> = match (by, granularity) {
            (GroupBy::Ideology, GranularityArg::User) => {
                let Some(p) = &scores else {
                    bail!("--group-by ideology needs --scores");
                };
                ideology_groups(&read_scores(p)?)
            }
            (GroupBy::Reliability, GranularityArg::Domain) => reliability_groups(table.as_ref().unwrap()),
            (GroupBy::Leaning, GranularityArg::Domain) => leaning_groups(table.as_ref().unwrap()),
            (GroupBy::Ideology, _) => bail!("--group-by ideology needs --granularity user"),
            _ => bail!("--group-by reliability/leaning needs --granularity domain"),
        };
        let mut w = create(&out_dir.join("groups.csv"))?;
        write_group_csv(&mut w, &group_ae(&agg.records, &groups))?;
        w.flush()?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn report(
    input: PathBuf,
    graph: PathBuf,
    scores: PathBuf,
    domains: Option<PathBuf>,
    bins: usize,
    hist_bins: usize,
    top_k: usize,
    neighbors: Neighbors,
    min_shares: usize,
    out_dir: PathBuf,
) -> Result<()> {
    if bins == 0 || hist_bins == 0 {
        bail!("bin counts must be positive");
    }
    let g = read_graph(&graph)?;
    let table = read_scores(&scores)?;
    let records = read_records(&input, RecordSchema::Flat)?;
    fs::create_dir_all(&out_dir)?;

    let h = ideology_histograms(&table, &g, hist_bins, top_k);
    let mut w = create(&out_dir.join("ideology_histograms.csv"))?;
    h.write_csv(&mut w)?;
    w.flush()?;

    let mode = match neighbors {
        Neighbors::Out => NeighborMode::Out,
        Neighbors::In => NeighborMode::In,
    };
    let ng = neighbor_opinion_grid(&table, &g, bins, mode);
    let mut w = create(&out_dir.join("neighbor_grid.csv"))?;
    ng.grid.write_csv(&mut w)?;
    w.flush()?;
    let extra = BTreeMap::from([
        ("diagonal_share".to_string(), ng.diagonal_share),
        ("population".to_string(), ng.population as f64),
        ("skipped_no_scored_neighbors".to_string(), ng.skipped_no_scored_neighbors as f64),
    ]);
    let mut w = create(&out_dir.join("neighbor_grid.json"))?;
    ng.grid.write_sidecar(&mut w, &extra)?;
    w.flush()?;

    let filter = CorpusFilter::default();
    let tweets: Vec<TweetRecord> = filter.engagement_subset(records.iter().cloned()).collect();
    for (action, grid) in ae_followers_density(&tweets, bins) {
        let mut w = create(&out_dir.join(format!("ae_followers_{action}.csv")))?;
        grid.write_csv(&mut w)?;
        w.flush()?;
        let mut w = create(&out_dir.join(format!("ae_followers_{action}.json")))?;
        grid.write_sidecar(&mut w, &BTreeMap::new())?;
        w.flush()?;
    }

    if let Some(p) = domains {
        let dt = read_domains(&p)?;
        let leanings = user_leanings(records.iter().cloned(), &dt, LeaningOptions::default());
        let mut w = create(&out_dir.join("user_leanings.csv"))?;
        write_user_leanings_csv(&mut w, leanings.values())?;
        w.flush()?;
        let dist = leaning_ideology_distributions(&table, &leanings, min_shares, hist_bins);
        let mut w = create(&out_dir.join("leaning_ideology.csv"))?;
        dist.histogram.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Synth { config, out_dir, seed } => synth(config, out_dir, seed),
        Command::Ingest {
            input,
            schema,
            min_date,
            langs,
            rejects_out,
            out,
            exclusions_out,
        } => ingest(input, schema, min_date, langs, rejects_out, out, exclusions_out),
        Command::Graph {
            input,
            schema,
            seeds,
            min_indegree,
            include_self_loops,
            graph_out,
            influencers_out,
        } => graph(input, schema, seeds, min_indegree, include_self_loops, graph_out, influencers_out),
        Command::Ideology {
            graph,
            influencers,
            anchor,
            min_distinct,
            tol,
            seed,
            max_iter,
            out,
        } => ideology(graph, influencers, anchor, min_distinct, tol, seed, max_iter, out),
        Command::Engagement {
            input,
            domains,
            scores,
            granularity,
            group_by,
            attribution,
            out_dir,
        } => engagement(input, domains, scores, granularity, group_by, attribution, out_dir),
        Command::Report {
            input,
            graph,
            scores,
            domains,
            bins,
            hist_bins,
            top_k,
            neighbors,
            min_shares,
            out_dir,
        } => report(input, graph, scores, domains, bins, hist_bins, top_k, neighbors, min_shares, out_dir),
    }
}
