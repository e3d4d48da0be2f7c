//! Synthetic polarized corpora with known communities, hubs, engagement
//! rates and domain-sharing habits, plus a dense correspondence-analysis
//! reference used to check the sparse solver.
//!
//! Every draw comes from a single `ChaCha8Rng` stream seeded by the config,
//! with `rand_distr` samplers, in a fixed order.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::engagement::{Action, PerAction};
use crate::graph::RetweetGraph;
use crate::ingest::{TweetKind, TweetRecord};
use crate::mediabias::{DomainProfile, DomainTable, LeaningLabel, Reliability};
use crate::{Error, Result};

pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), samplers from rand_distr 0.5";

/// One value per visible action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValues {
    pub retweet: f64,
    pub reply: f64,
    pub like: f64,
    pub quote: f64,
}

impl ActionValues {
    pub fn get(&self, a: Action) -> f64 {
        match a {
            Action::Retweet => self.retweet,
            Action::Reply => self.reply,
            Action::Like => self.like,
            Action::Quote => self.quote,
        }
    }

    fn from_fn(mut f: impl FnMut(Action) -> f64) -> Self {
        Self {
            retweet: f(Action::Retweet),
            reply: f(Action::Reply),
            like: f(Action::Like),
            quote: f(Action::Quote),
        }
    }

    pub fn total(&self) -> f64 {
        self.retweet + self.reply + self.like + self.quote
    }
}

impl From<ActionValues> for PerAction<f64> {
    fn from(v: ActionValues) -> Self {
        PerAction(Action::ALL.map(|a| v.get(a)))
    }
}

/// Log-normal parameters in base 10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Log10Normal {
    pub log10_median: f64,
    pub log10_sd: f64,
}

/// Follower counts with tail `P(F > f) = (min / f)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoFollowers {
    pub min: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseShares {
    /// Extra originals dated before the impression-metric release.
    pub pre_cutoff: f64,
    pub non_english: f64,
    pub replies: f64,
    pub quotes: f64,
}

impl Default for NoiseShares {
    fn default() -> Self {
        Self {
            pre_cutoff: 0.05,
            non_english: 0.03,
            replies: 0.05,
            quotes: 0.02,
        }
    }
}

/// Mean per-tweet AE the default generator is calibrated to.
pub const REFERENCE_MEAN_AE: ActionValues = ActionValues {
    retweet: 0.002909,
    reply: 0.002479,
    like: 0.011154,
    quote: 0.000612,
};

/// Follower/AE log-log correlations the default generator is calibrated to.
pub const REFERENCE_LOG_PEARSON: ActionValues = ActionValues {
    retweet: -0.3469,
    reply: -0.5649,
    like: -0.2250,
    quote: -0.5690,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_influencers_per_side: usize,
    /// Relative weight of retweeting inside one's own community.
    pub p_in: f64,
    /// Relative weight of retweeting across communities.
    pub p_cross: f64,
    pub mean_retweets_per_user: f64,
    /// Share of retweets that go to a planted hub rather than an ordinary user.
    pub hub_retweet_share: f64,
    /// Hub popularity falls off as `rank^-exponent` within a community.
    pub hub_popularity_exponent: f64,
    pub originals_per_user: usize,
    /// Mean per-tweet AE targets when both groups lurk at the default rate.
    pub target_mean_ae: ActionValues,
    pub target_log_pearson: ActionValues,
    /// Share of impressions with no visible action, per community `A`/`B`.
    /// Defaults to `1 - sum(target_mean_ae)`.
    pub lurk_rate_by_group: BTreeMap<String, f64>,
    /// Spread of log10 action rates around the group mean.
    pub rate_log10_sd: f64,
    pub impressions_dist: Log10Normal,
    pub followers: ParetoFollowers,
    pub url_share: f64,
    /// Weights over the seven leaning classes (left to right), per community.
    pub domain_mix: BTreeMap<String, [f64; 7]>,
    pub domains_per_class: usize,
    pub date_range: DateRange,
    pub noise: NoiseShares,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let lurk = 1.0 - REFERENCE_MEAN_AE.total();
        Self {
            seed: 1,
            n_users: 1000,
            n_influencers_per_side: 10,
            p_in: 0.95,
            p_cross: 0.0475,
            mean_retweets_per_user: 5.0,
            hub_retweet_share: 0.8,
            hub_popularity_exponent: 0.3,
            originals_per_user: 30,
            target_mean_ae: REFERENCE_MEAN_AE,
            target_log_pearson: REFERENCE_LOG_PEARSON,
            lurk_rate_by_group: [("A".to_string(), lurk), ("B".to_string(), lurk)].into(),
            rate_log10_sd: 0.3,
            impressions_dist: Log10Normal {
                log10_median: 6.0,
                log10_sd: 0.3,
            },
            followers: ParetoFollowers { min: 50.0, alpha: 1.0 },
            url_share: 0.4,
            domain_mix: [
                ("A".to_string(), [0.25, 0.30, 0.25, 0.12, 0.05, 0.02, 0.01]),
                ("B".to_string(), [0.01, 0.02, 0.05, 0.12, 0.25, 0.30, 0.25]),
            ]
            .into(),
            domains_per_class: 3,
            date_range: DateRange {
                start: Utc.with_ymd_and_hms(2022, 12, 16, 0, 0, 0).unwrap(),
                end: Utc.with_ymd_and_hms(2023, 3, 31, 23, 59, 59).unwrap(),
            },
            noise: NoiseShares::default(),
        }
    }
}

pub const GROUPS: [&str; 2] = ["A", "B"];

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_influencers_per_side == 0 {
            return Err(bad("n_influencers_per_side must be at least 1"));
        }
        if self.n_users < 2 * (self.n_influencers_per_side + 1) {
            return Err(bad("each community needs at least one ordinary user besides its hubs"));
        }
        if !(self.p_in > self.p_cross && self.p_cross >= 0.0) {
            return Err(bad(format!("need p_in > p_cross >= 0, got {} and {}", self.p_in, self.p_cross)));
        }
        for g in GROUPS {
            match self.lurk_rate_by_group.get(g) {
                Some(l) if (0.0..=1.0).contains(l) => {}
                Some(l) => return Err(bad(format!("lurk rate for {g} is {l}, outside [0, 1]"))),
                None => return Err(bad(format!("missing lurk rate for group {g}"))),
            }
            match self.domain_mix.get(g) {
                Some(w) if w.iter().all(|x| *x >= 0.0) && w.iter().sum::<f64>() > 0.0 => {}
                _ => return Err(bad(format!("domain_mix for {g} must be 7 non-negative weights with positive sum"))),
            }
        }
        for a in Action::ALL {
            if !(self.target_mean_ae.get(a) > 0.0) {
                return Err(bad(format!("target_mean_ae.{a} must be positive")));
            }
            if !(self.target_log_pearson.get(a).abs() < 1.0) {
                return Err(bad(format!("target_log_pearson.{a} must lie in (-1, 1)")));
            }
        }
        if !(self.target_mean_ae.total() < 1.0) {
            return Err(bad("target_mean_ae must sum below 1"));
        }
        let unit = [
            ("hub_retweet_share", self.hub_retweet_share),
            ("url_share", self.url_share),
            ("noise.pre_cutoff", self.noise.pre_cutoff),
            ("noise.non_english", self.noise.non_english),
            ("noise.replies", self.noise.replies),
            ("noise.quotes", self.noise.quotes),
        ];
        for (name, x) in unit {
            if !(0.0..=1.0).contains(&x) {
                return Err(bad(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.mean_retweets_per_user >= 0.0) || !(self.rate_log10_sd >= 0.0) || !(self.impressions_dist.log10_sd >= 0.0) {
            return Err(bad("rates and spreads must be non-negative"));
        }
        if !(self.followers.min >= 1.0 && self.followers.alpha > 0.0) {
            return Err(bad("followers need min >= 1 and alpha > 0"));
        }
        if self.domains_per_class == 0 {
            return Err(bad("domains_per_class must be at least 1"));
        }
        if self.date_range.end <= self.date_range.start {
            return Err(bad("date_range.end must follow date_range.start"));
        }
        Ok(())
    }

    /// Per-group action rates: Table-style shares scaled to `1 - lurk`.
    pub fn group_rates(&self) -> BTreeMap<String, ActionValues> {
        let total = self.target_mean_ae.total();
        GROUPS
            .iter()
            .map(|g| {
                let active = 1.0 - self.lurk_rate_by_group[*g];
                (g.to_string(), ActionValues::from_fn(|a| self.target_mean_ae.get(a) / total * active))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCounts {
    pub users: usize,
    pub originals: usize,
    pub retweets: usize,
    pub pre_cutoff: usize,
    pub non_english: usize,
    pub replies: usize,
    pub quotes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub rng: String,
    pub community: BTreeMap<String, String>,
    /// Community `A` hubs first, each side in popularity order.
    pub planted_hubs: Vec<String>,
    /// Most popular `A` hub; its side scores negative.
    pub anchor: String,
    /// Per-group action rates (pooled AE targets).
    pub target_ae_by_group: BTreeMap<String, ActionValues>,
    /// Mean per-tweet AE over engagement-eligible tweets.
    pub target_mean_ae: ActionValues,
    /// Correlation of log10 followers with log10 AE.
    pub target_log_pearson: ActionValues,
    /// Tail exponent of the follower distribution; per-log10-bin counts fall
    /// with slope `-alpha`.
    pub followers_alpha: f64,
    pub counts: CorpusCounts,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<TweetRecord>,
    pub truth: GroundTruth,
    pub domains: DomainTable,
}

fn class_slug(label: LeaningLabel) -> String {
    label.as_str().to_ascii_lowercase()
}

/// Domain catalog: `domains_per_class` outlets per leaning class. In the two
/// extreme classes the first outlet is conspiracy/pseudoscience and the second
/// questionable; in Left and Right the first is questionable.
pub fn domain_catalog(per_class: usize) -> Vec<Vec<DomainProfile>> {
    LeaningLabel::ALL
        .iter()
        .map(|&label| {
            (0..per_class)
                .map(|k| {
                    let extreme = matches!(label, LeaningLabel::ExtremeLeft | LeaningLabel::ExtremeRight);
                    let partisan = matches!(label, LeaningLabel::Left | LeaningLabel::Right);
                    let reliability = match k {
                        0 if extreme => Reliability::ConspiracyPseudoscience,
                        1 if extreme => Reliability::Questionable,
                        0 if partisan => Reliability::Questionable,
                        _ => Reliability::Reliable,
                    };
                    DomainProfile {
                        domain: format!("{}{}news.com", class_slug(label), k + 1),
                        leaning_label: Some(label),
                        reliability,
                    }
                })
                .collect()
        })
        .collect()
}

struct Stamp<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Stamp<'_> {
    fn between(&mut self, start: DateTime<Utc>, end: DateTime<Utc>) -> DateTime<Utc> {
        let span = (end - start).num_seconds();
        start + chrono::Duration::seconds(self.rng.random_range(0..=span))
    }
}

/// Draws a corpus. Same config, same records.
pub fn generate(cfg: &GeneratorConfig) -> Result<SyntheticCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_users;
    let width = (n - 1).to_string().len().max(4);
    let uid = |i: usize| format!("u{i:0width$}");
    let half = n / 2;
    let group_of = |i: usize| if i < half { 0usize } else { 1 };
    let members: [Vec<usize>; 2] = [(0..half).collect(), (half..n).collect()];
    let h = cfg.n_influencers_per_side;
    let hubs: [Vec<usize>; 2] = [members[0][..h].to_vec(), members[1][..h].to_vec()];
    let ordinary: [Vec<usize>; 2] = [members[0][h..].to_vec(), members[1][h..].to_vec()];

    let hub_weights: Vec<f64> = (1..=h).map(|r| (r as f64).powf(-cfg.hub_popularity_exponent)).collect();
    let hub_pick = WeightedIndex::new(&hub_weights).map_err(|e| bad(e.to_string()))?;

    // Pareto followers; rates key off the in-sample standardized log10
    // followers, which fixes the sample log-log correlation at its target
    let followers: Vec<u64> = (0..n)
        .map(|_| {
            let e: f64 = rng.sample(Exp1);
            (cfg.followers.min * (e / cfg.followers.alpha).exp()).round().max(1.0) as u64
        })
        .collect();
    let logf: Vec<f64> = followers.iter().map(|&f| (f as f64).log10()).collect();
    let fm = logf.iter().sum::<f64>() / n as f64;
    let fsd = (logf.iter().map(|x| (x - fm) * (x - fm)).sum::<f64>() / n as f64).sqrt();
    let z: Vec<f64> = logf.iter().map(|x| if fsd > 0.0 { (x - fm) / fsd } else { 0.0 }).collect();

    let rates = cfg.group_rates();
    let s = cfg.rate_log10_sd;
    let ln10 = std::f64::consts::LN_10;
    // expected rate multiplier given the drawn followers, averaged over users
    let norm = PerAction(Action::ALL.map(|a| {
        let rho = cfg.target_log_pearson.get(a);
        let noise = ((s * (1.0 - rho * rho).sqrt() * ln10).powi(2) / 2.0).exp();
        let user = z.iter().map(|zi| 10f64.powf(s * rho * zi)).sum::<f64>() / n as f64;
        (user * noise).log10()
    }));
    let log_mean: [PerAction<f64>; 2] = [0, 1].map(|g| {
        let r = rates[GROUPS[g]];
        PerAction(Action::ALL.map(|a| {
            let v = r.get(a);
            if v > 0.0 { v.log10() - norm[a] } else { f64::NEG_INFINITY }
        }))
    });

    let catalog = domain_catalog(cfg.domains_per_class);
    let mut domains = DomainTable::default();
    for p in catalog.iter().flatten() {
        domains.insert(p.clone());
    }
    let class_pick = [
        WeightedIndex::new(cfg.domain_mix["A"]).map_err(|e| bad(e.to_string()))?,
        WeightedIndex::new(cfg.domain_mix["B"]).map_err(|e| bad(e.to_string()))?,
    ];

    let same_prob = cfg.p_in / (cfg.p_in + cfg.p_cross);
    let retweets_per_user = if cfg.mean_retweets_per_user > 0.0 {
        Some(Poisson::new(cfg.mean_retweets_per_user).map_err(|e| bad(e.to_string()))?)
    } else {
        None
    };
    let pre_start = Utc.with_ymd_and_hms(2022, 10, 1, 0, 0, 0).unwrap();
    let pre_end = Utc.with_ymd_and_hms(2022, 12, 14, 23, 59, 59).unwrap();

    let mut records = Vec::new();
    let mut counts = CorpusCounts {
        users: n,
        originals: 0,
        retweets: 0,
        pre_cutoff: 0,
        non_english: 0,
        replies: 0,
        quotes: 0,
    };
    let mut next_id = 0usize;
    let mut tweet_id = || {
        next_id += 1;
        format!("t{next_id:08}")
    };

    for i in 0..n {
        let g = group_of(i);
        let author = uid(i);

        // ordinary originals, then noise records, then retweets
        let draw_metrics = |rng: &mut ChaCha8Rng| -> (u64, PerAction<u64>) {
            let imp_ln: f64 = rng.sample(StandardNormal);
            let impressions = 10f64
                .powf(cfg.impressions_dist.log10_median + cfg.impressions_dist.log10_sd * imp_ln)
                .round()
                .max(1.0) as u64;
            let mut c = PerAction([0u64; 4]);
            for a in Action::ALL {
                let rho = cfg.target_log_pearson.get(a);
                let eps: f64 = rng.sample(StandardNormal);
                let x = log_mean[g][a] + s * (rho * z[i] + (1.0 - rho * rho).sqrt() * eps);
                let p = 10f64.powf(x).clamp(0.0, 1.0);
                c[a] = Binomial::new(impressions, p).map(|b| b.sample(rng)).unwrap_or(0);
            }
            (impressions, c)
        };
        let make = |rng: &mut ChaCha8Rng, kind: TweetKind, lang: &str, when: DateTime<Utc>, id: String| {
            let (impressions, c) = draw_metrics(rng);
            let urls = if kind == TweetKind::Original && rng.random_bool(cfg.url_share) {
                let class = class_pick[g].sample(rng);
                let k = rng.random_range(0..cfg.domains_per_class);
                let host = &catalog[class][k].domain;
                vec![format!("https://www.{host}/story/{id}")]
            } else {
                Vec::new()
            };
            TweetRecord {
                tweet_id: id,
                author_id: author.clone(),
                created_at: when,
                lang: lang.to_string(),
                kind,
                retweeted_author_id: None,
                impressions,
                likes: c[Action::Like],
                replies: c[Action::Reply],
                retweets: c[Action::Retweet],
                quotes: c[Action::Quote],
                urls,
                author_followers: followers[i],
            }
        };

        for _ in 0..cfg.originals_per_user {
            let when = Stamp { rng: &mut rng }.between(cfg.date_range.start, cfg.date_range.end);
            let id = tweet_id();
            records.push(make(&mut rng, TweetKind::Original, "en", when, id));
            counts.originals += 1;
        }
        let extras = [
            (cfg.noise.pre_cutoff, TweetKind::Original, "en", true),
            (cfg.noise.non_english, TweetKind::Original, "es", false),
            (cfg.noise.replies, TweetKind::Reply, "en", false),
            (cfg.noise.quotes, TweetKind::Quote, "en", false),
        ];
        for (k, (share, kind, lang, early)) in extras.into_iter().enumerate() {
            let m = Binomial::new(cfg.originals_per_user as u64, share).map(|b| b.sample(&mut rng)).unwrap_or(0);
            for _ in 0..m {
                let when = if early {
                    Stamp { rng: &mut rng }.between(pre_start, pre_end)
                } else {
                    Stamp { rng: &mut rng }.between(cfg.date_range.start, cfg.date_range.end)
                };
                let id = tweet_id();
                records.push(make(&mut rng, kind, lang, when, id));
                match k {
                    0 => counts.pre_cutoff += 1,
                    1 => counts.non_english += 1,
                    2 => counts.replies += 1,
                    _ => counts.quotes += 1,
                }
            }
        }

        let n_rt = retweets_per_user.map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
        for _ in 0..n_rt {
            let side = if rng.random_bool(same_prob) { g } else { 1 - g };
            let target = if rng.random_bool(cfg.hub_retweet_share) {
                let mut t = hubs[side][hub_pick.sample(&mut rng)];
                if t == i {
                    t = hubs[side][(hub_pick.sample(&mut rng) + 1) % h];
                }
                t
            } else {
                let pool = &ordinary[side];
                let mut t = pool[rng.random_range(0..pool.len())];
                if t == i {
                    t = pool[(pool.iter().position(|&x| x == i).unwrap() + 1) % pool.len()];
                }
                t
            };
            if target == i {
                continue;
            }
            let when = Stamp { rng: &mut rng }.between(cfg.date_range.start, cfg.date_range.end);
            records.push(TweetRecord {
                tweet_id: tweet_id(),
                author_id: author.clone(),
                created_at: when,
                lang: "en".into(),
                kind: TweetKind::Retweet,
                retweeted_author_id: Some(uid(target)),
                impressions: 0,
                likes: 0,
                replies: 0,
                retweets: 0,
                quotes: 0,
                urls: Vec::new(),
                author_followers: followers[i],
            });
            counts.retweets += 1;
        }
    }

    // population targets over the engagement-eligible originals (equal per user)
    let w = [half as f64 / n as f64, (n - half) as f64 / n as f64];
    let target_mean_ae = ActionValues::from_fn(|a| w[0] * rates["A"].get(a) + w[1] * rates["B"].get(a));
    let target_log_pearson = ActionValues::from_fn(|a| {
        let rho = cfg.target_log_pearson.get(a);
        let (m0, m1) = (log_mean[0][a], log_mean[1][a]);
        let mbar = w[0] * m0 + w[1] * m1;
        let between = w[0] * (m0 - mbar).powi(2) + w[1] * (m1 - mbar).powi(2);
        if s == 0.0 || !between.is_finite() {
            0.0
        } else {
            rho * s / (s * s + between).sqrt()
        }
    });

    let truth = GroundTruth {
        seed: cfg.seed,
        rng: RNG_ALGORITHM.to_string(),
        community: (0..n).map(|i| (uid(i), GROUPS[group_of(i)].to_string())).collect(),
        planted_hubs: hubs.iter().flatten().map(|&i| uid(i)).collect(),
        anchor: uid(hubs[0][0]),
        target_ae_by_group: rates,
        target_mean_ae,
        target_log_pearson,
        followers_alpha: cfg.followers.alpha,
        counts,
    };
    Ok(SyntheticCorpus { records, truth, domains })
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TRUTH_FILE: &str = "truth.json";
pub const DOMAINS_FILE: &str = "domains.csv";
pub const SEEDS_FILE: &str = "seeds.txt";
pub const CONFIG_FILE: &str = "config.json";

impl SyntheticCorpus {
    /// Writes corpus, ground truth, domain table, hub seed list and the
    /// effective config into `dir`.
    pub fn write_to(&self, dir: &Path, cfg: &GeneratorConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join(CORPUS_FILE))?);
        for r in &self.records {
            out.write_all(r.to_flat_json().as_bytes())?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        let mut t = BufWriter::new(File::create(dir.join(TRUTH_FILE))?);
        serde_json::to_writer_pretty(&mut t, &self.truth)?;
        t.write_all(b"\n")?;
        t.flush()?;
        self.domains.write_csv(File::create(dir.join(DOMAINS_FILE))?)?;
        crate::graph::write_id_list(File::create(dir.join(SEEDS_FILE))?, &self.truth.planted_hubs)?;
        let mut c = BufWriter::new(File::create(dir.join(CONFIG_FILE))?);
        serde_json::to_writer_pretty(&mut c, cfg)?;
        c.write_all(b"\n")?;
        c.flush()?;
        Ok(())
    }
}

/// Newman modularity of a two-way partition, treating the retweet graph as
/// undirected and weighted. Self-loops and unlabeled nodes are ignored.
pub fn modularity(graph: &RetweetGraph, community: &BTreeMap<String, String>) -> f64 {
    let mut total = 0.0;
    let mut inside: BTreeMap<&str, f64> = BTreeMap::new();
    let mut degree: BTreeMap<&str, f64> = BTreeMap::new();
    for (src, dst, w) in graph.edges() {
        if src == dst {
            continue;
        }
        let (Some(a), Some(b)) = (community.get(graph.id(src)), community.get(graph.id(dst))) else {
            continue;
        };
        let w = w as f64;
        total += w;
        *degree.entry(a).or_default() += w;
        *degree.entry(b).or_default() += w;
        if a == b {
            *inside.entry(a).or_default() += w;
        }
    }
    if total == 0.0 {
        return 0.0;
    }
    degree
        .iter()
        .map(|(c, d)| inside.get(c).copied().unwrap_or(0.0) / total - (d / (2.0 * total)).powi(2))
        .sum()
}

/// Full dense correspondence analysis of a small count matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCa {
    /// The standardized residual matrix, row-major.
    pub s: Vec<Vec<f64>>,
    /// Descending.
    pub singular_values: Vec<f64>,
    /// `u[k]` is the k-th left singular vector (length = rows).
    pub u: Vec<Vec<f64>>,
    /// `v[k]` is the k-th right singular vector (length = columns).
    pub v: Vec<Vec<f64>>,
}

impl DenseCa {
    pub fn sigma1(&self) -> f64 {
        self.singular_values[0]
    }

    /// Leading left vector divided by its largest magnitude.
    pub fn scaled_user_scores(&self) -> Vec<f64> {
        let m = self.u[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.u[0].iter().map(|x| x / m).collect()
    }
}

pub const ORACLE_MAX_ROWS: usize = 200;
pub const ORACLE_MAX_COLS: usize = 50;

/// Builds `S = Dr^-1/2 (P - r c') Dc^-1/2` densely and takes its full SVD by
/// one-sided Jacobi rotations. Singular vectors are oriented so the
/// largest-magnitude entry of each right vector is positive.
pub fn dense_ca_oracle(a: &[Vec<u64>], tol: f64) -> Result<DenseCa> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("matrix must be non-empty and rectangular".into()));
    }
    if m > ORACLE_MAX_ROWS || n > ORACLE_MAX_COLS {
        return Err(Error::InvalidParameter(format!(
            "dense oracle supports at most {ORACLE_MAX_ROWS}x{ORACLE_MAX_COLS}, got {m}x{n}"
        )));
    }
    let total: f64 = a.iter().flatten().map(|&x| x as f64).sum();
    let p: Vec<Vec<f64>> = a.iter().map(|row| row.iter().map(|&x| x as f64 / total).collect()).collect();
    let r: Vec<f64> = p.iter().map(|row| row.iter().sum()).collect();
    let c: Vec<f64> = (0..n).map(|j| p.iter().map(|row| row[j]).sum()).collect();
    if let Some(i) = r.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroMass { axis: "row", id: format!("row {i}") });
    }
    if let Some(j) = c.iter().position(|&x| x == 0.0) {
        return Err(Error::ZeroMass { axis: "column", id: format!("column {j}") });
    }
    let s: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| (p[i][j] - r[i] * c[j]) / (r[i] * c[j]).sqrt()).collect())
        .collect();

    let (vals, left, right) = if m >= n {
        let (vals, l, r) = jacobi_svd(&s);
        (vals, l, r)
    } else {
        let t: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| s[i][j]).collect()).collect();
        let (vals, l, r) = jacobi_svd(&t);
        (vals, r, l)
    };
    if !(vals[0] > tol) {
        return Err(Error::Degenerate { sigma: vals[0], tol });
    }
    let mut u = left;
    let mut v = right;
    for k in 0..vals.len() {
        let big = v[k].iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
        if big < 0.0 {
            v[k].iter_mut().for_each(|x| *x = -*x);
            u[k].iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(DenseCa { s, singular_values: vals, u, v })
}

/// One-sided (Hestenes) Jacobi SVD of a tall `m x n` matrix (`m >= n`).
/// Returns singular values descending with left and right vectors.
fn jacobi_svd(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = a.len();
    let n = a[0].len();
    // work on columns
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a[i][j]).collect()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..200 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..m {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    cols[p][k] = cs * x - sn * y;
                    cols[q][k] = sn * x + cs * y;
                }
                for k in 0..n {
                    let (x, y) = (vcols[p][k], vcols[q][k]);
                    vcols[p][k] = cs * x - sn * y;
                    vcols[q][k] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let vals = order.iter().map(|&k| norms[k]).collect();
    let u = order
        .iter()
        .map(|&k| {
            if norms[k] > 0.0 {
                cols[k].iter().map(|x| x / norms[k]).collect()
            } else {
                vec![0.0; m]
            }
        })
        .collect();
    let v = order.iter().map(|&k| vcols[k].clone()).collect();
    (vals, u, v)
}
