//! Active Engagement (AE): visible actions divided by impressions, at tweet,
//! user, or domain granularity, plus popularity correlations and per-group
//! distribution summaries.
//!
//! AE may exceed 1 because impressions and action counters are sampled at
//! different times; such values are counted, never clamped.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ideology::ScoreTable;
use crate::ingest::TweetRecord;
use crate::mediabias::{extract_domain, DomainTable};
use crate::numeric::ExactSum;
use crate::stats::{mean, pearson, FiveNumberSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Retweet,
    Reply,
    Like,
    Quote,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Retweet, Action::Reply, Action::Like, Action::Quote];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::Retweet => "retweet",
            Action::Reply => "reply",
            Action::Like => "like",
            Action::Quote => "quote",
        }
    }

    pub fn count(self, t: &TweetRecord) -> u64 {
        match self {
            Action::Retweet => t.retweets,
            Action::Reply => t.replies,
            Action::Like => t.likes,
            Action::Quote => t.quotes,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per action kind.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PerAction<T>(pub [T; 4]);

impl<T> Index<Action> for PerAction<T> {
    type Output = T;

    fn index(&self, a: Action) -> &T {
        &self.0[a.slot()]
    }
}

impl<T> IndexMut<Action> for PerAction<T> {
    fn index_mut(&mut self, a: Action) -> &mut T {
        &mut self.0[a.slot()]
    }
}

/// Per-action AE of one tweet; `None` when it has no impressions.
pub fn tweet_ae(t: &TweetRecord) -> Option<PerAction<f64>> {
    if t.impressions == 0 {
        return None;
    }
    let imp = t.impressions as f64;
    Some(PerAction(Action::ALL.map(|a| a.count(t) as f64 / imp)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Tweet,
    User,
    Domain,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Tweet => "tweet",
            Granularity::User => "user",
            Granularity::Domain => "domain",
        }
    }
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tweet" => Ok(Granularity::Tweet),
            "user" => Ok(Granularity::User),
            "domain" => Ok(Granularity::Domain),
            other => Err(Error::InvalidParameter(format!("unknown granularity `{other}`"))),
        }
    }
}

/// How a tweet linking several table domains is credited to each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DomainAttribution {
    /// Every matched domain receives the tweet's full counts.
    #[default]
    Full,
    /// Counts are split evenly across the matched domains.
    Fractional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngagementRecord {
    pub subject_id: String,
    pub granularity: Granularity,
    pub n_tweets: usize,
    pub impressions: f64,
    pub counts: PerAction<f64>,
    /// Pooled ratio: total actions over total impressions.
    pub ae: PerAction<f64>,
    /// Mean of per-tweet ratios over the subject's tweets with impressions.
    pub mean_of_ratios: PerAction<f64>,
}

impl EngagementRecord {
    pub fn above_one(&self) -> usize {
        self.ae.0.iter().filter(|&&x| x > 1.0).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Aggregation {
    /// Sorted by subject id.
    pub records: Vec<EngagementRecord>,
    /// Subjects omitted because their tweets had no impressions.
    pub zero_impression_subjects: usize,
    /// Tweets that mapped to no subject (e.g. no table domain).
    pub unattributed_tweets: usize,
    /// Subject-action pairs with AE above 1.
    pub ae_above_one: usize,
}

#[derive(Default)]
struct Accumulator {
    n_tweets: usize,
    impressions: ExactSum,
    counts: [ExactSum; 4],
    ratio_sums: [ExactSum; 4],
    rated_tweets: usize,
}

/// Pools actions and impressions per subject.
///
/// `key_fn` returns the subjects a tweet belongs to with the share of its
/// counts each receives (1.0 unless a fractional split is wanted).
pub fn aggregate_ae<I, F>(records: I, granularity: Granularity, mut key_fn: F) -> Aggregation
where
    I: IntoIterator<Item = TweetRecord>,
    F: FnMut(&TweetRecord) -> Vec<(String, f64)>,
{
    let mut acc: BTreeMap<String, Accumulator> = BTreeMap::new();
    let mut unattributed = 0;
    for t in records {
        let keys = key_fn(&t);
        if keys.is_empty() {
            unattributed += 1;
            continue;
        }
        let ratios = tweet_ae(&t);
        for (key, share) in keys {
            let a = acc.entry(key).or_default();
            a.n_tweets += 1;
            a.impressions.add(t.impressions as f64 * share);
            for act in Action::ALL {
                a.counts[act.slot()].add(act.count(&t) as f64 * share);
            }
            if let Some(r) = &ratios {
                a.rated_tweets += 1;
                for act in Action::ALL {
                    a.ratio_sums[act.slot()].add(r[act]);
                }
            }
        }
    }
    let mut out = Aggregation {
        unattributed_tweets: unattributed,
        ..Default::default()
    };
    for (subject_id, a) in acc {
        let impressions = a.impressions.value();
        if impressions <= 0.0 {
            out.zero_impression_subjects += 1;
            continue;
        }
        let counts = PerAction(Action::ALL.map(|act| a.counts[act.slot()].value()));
        let ae = PerAction(counts.0.map(|c| c / impressions));
        let mean_of_ratios = PerAction(Action::ALL.map(|act| a.ratio_sums[act.slot()].value() / a.rated_tweets as f64));
        let rec = EngagementRecord {
            subject_id,
            granularity,
            n_tweets: a.n_tweets,
            impressions,
            counts,
            ae,
            mean_of_ratios,
        };
        out.ae_above_one += rec.above_one();
        out.records.push(rec);
    }
    if out.ae_above_one > 0 {
        log::warn!("{} subject-action pairs have AE above 1", out.ae_above_one);
    }
    out
}

pub fn tweet_key(t: &TweetRecord) -> Vec<(String, f64)> {
    vec![(t.tweet_id.clone(), 1.0)]
}

pub fn user_key(t: &TweetRecord) -> Vec<(String, f64)> {
    vec![(t.author_id.clone(), 1.0)]
}

/// Distinct table domains linked by a tweet.
pub fn matched_domains(t: &TweetRecord, table: &DomainTable) -> Vec<String> {
    let mut ds: Vec<String> = t
        .urls
        .iter()
        .filter_map(|u| extract_domain(u))
        .filter(|d| table.get(d).is_some())
        .collect();
    ds.sort();
    ds.dedup();
    ds
}

/// Key function crediting a tweet to each table domain it links.
pub fn domain_key(table: &DomainTable, attribution: DomainAttribution) -> impl FnMut(&TweetRecord) -> Vec<(String, f64)> + '_ {
    move |t| {
        let ds = matched_domains(t, table);
        let share = match attribution {
            DomainAttribution::Full => 1.0,
            DomainAttribution::Fractional => 1.0 / ds.len().max(1) as f64,
        };
        ds.into_iter().map(|d| (d, share)).collect()
    }
}

/// Pearson correlation of `(log10 x, log10 y)`.
pub fn log_pearson(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("need at least 2 points, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::UndefinedCorrelation(format!("non-positive value ({x}, {y}) on a log scale")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.log10()).collect();
    pearson(&xs, &ys).ok_or_else(|| Error::UndefinedCorrelation("zero variance in one coordinate".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub action: Action,
    pub n: usize,
    pub pearson_r: f64,
    pub filter: String,
}

/// Log-log correlation between author followers and tweet AE, over tweets
/// with a nonzero count of `action`, followers, and impressions.
pub fn followers_correlation(tweets: &[TweetRecord], action: Action) -> Result<CorrelationReport> {
    let pairs: Vec<(f64, f64)> = tweets
        .iter()
        .filter(|t| t.impressions > 0 && t.author_followers > 0 && action.count(t) > 0)
        .map(|t| (t.author_followers as f64, action.count(t) as f64 / t.impressions as f64))
        .collect();
    Ok(CorrelationReport {
        action,
        n: pairs.len(),
        pearson_r: log_pearson(&pairs)?,
        filter: format!("{action}_count>0 & author_followers>0 & impressions>0"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSummary {
    pub action: Action,
    /// Tweets with impressions, zero-action tweets included.
    pub n_tweets: usize,
    pub mean_ae: f64,
    pub correlation: Option<CorrelationReport>,
}

/// Tweet-level mean AE (zeros included) and follower correlation per action.
pub fn summarize_tweets(tweets: &[TweetRecord]) -> Vec<ActionSummary> {
    let ratios: Vec<PerAction<f64>> = tweets.iter().filter_map(tweet_ae).collect();
    Action::ALL
        .iter()
        .map(|&action| {
            let vals: Vec<f64> = ratios.iter().map(|r| r[action]).collect();
            let correlation = match followers_correlation(tweets, action) {
                Ok(c) => Some(c),
                Err(e) => {
                    log::warn!("{action}: {e}");
                    None
                }
            };
            ActionSummary {
                action,
                n_tweets: vals.len(),
                mean_ae: mean(&vals).unwrap_or(f64::NAN),
                correlation,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub action: Action,
    pub summary: FiveNumberSummary,
}

/// Boxplot summaries of pooled AE per group label and action.
///
/// Subjects missing from `groups` are left out; labels with no subjects are
/// omitted.
pub fn group_ae(records: &[EngagementRecord], groups: &BTreeMap<String, String>) -> Vec<GroupSummary> {
    let mut members: BTreeMap<&str, Vec<&EngagementRecord>> = BTreeMap::new();
    for label in groups.values() {
        members.entry(label.as_str()).or_default();
    }
    for r in records {
        if let Some(label) = groups.get(&r.subject_id) {
            members.get_mut(label.as_str()).unwrap().push(r);
        }
    }
    let mut out = Vec::new();
    for (label, recs) in members {
        if recs.is_empty() {
            log::warn!("group `{label}` has no subjects with engagement; omitted");
            continue;
        }
        for action in Action::ALL {
            let vals: Vec<f64> = recs.iter().map(|r| r.ae[action]).collect();
            out.push(GroupSummary {
                group: label.to_string(),
                action,
                summary: FiveNumberSummary::from_values(&vals).expect("nonempty group"),
            });
        }
    }
    out
}

/// `negative` / `positive` by the sign of each user's ideology score.
pub fn ideology_groups(scores: &ScoreTable) -> BTreeMap<String, String> {
    scores
        .users
        .iter()
        .map(|(id, &(s, _))| (id.clone(), if s < 0.0 { "negative" } else { "positive" }.to_string()))
        .collect()
}

pub fn reliability_groups(table: &DomainTable) -> BTreeMap<String, String> {
    table
        .iter()
        .map(|p| (p.domain.clone(), p.reliability.as_str().to_string()))
        .collect()
}

/// Leaning label per domain; unlabeled domains are left out.
pub fn leaning_groups(table: &DomainTable) -> BTreeMap<String, String> {
    table
        .iter()
        .filter_map(|p| p.leaning_label.map(|l| (p.domain.clone(), l.as_str().to_string())))
        .collect()
}

/// Long-form CSV `subject,granularity,action,impressions,count,ae`.
pub fn write_engagement_csv<W: Write>(out: W, records: &[EngagementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject", "granularity", "action", "impressions", "count", "ae"])?;
    for r in records {
        for a in Action::ALL {
            w.write_record([
                r.subject_id.as_str(),
                r.granularity.as_str(),
                a.as_str(),
                &r.impressions.to_string(),
                &r.counts[a].to_string(),
                &r.ae[a].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `subject,granularity,action,n_tweets,mean_ae` of per-tweet ratio means.
pub fn write_mean_of_ratios_csv<W: Write>(out: W, records: &[EngagementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject", "granularity", "action", "n_tweets", "mean_ae"])?;
    for r in records {
        for a in Action::ALL {
            w.write_record([
                r.subject_id.as_str(),
                r.granularity.as_str(),
                a.as_str(),
                &r.n_tweets.to_string(),
                &r.mean_of_ratios[a].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `action,n_tweets,mean_ae,mean_ae_percent,pearson_n,pearson_r,filter`.
pub fn write_summary_csv<W: Write>(out: W, summary: &[ActionSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["action", "n_tweets", "mean_ae", "mean_ae_percent", "pearson_n", "pearson_r", "filter"])?;
    for s in summary {
        let (n, r, filter) = match &s.correlation {
            Some(c) => (c.n.to_string(), c.pearson_r.to_string(), c.filter.clone()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            s.action.as_str(),
            &s.n_tweets.to_string(),
            &s.mean_ae.to_string(),
            &(s.mean_ae * 100.0).to_string(),
            &n,
            &r,
            &filter,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV `group,action,n,min,q1,median,q3,max,mean,whisker_low,whisker_high,outliers`.
pub fn write_group_csv<W: Write>(out: W, groups: &[GroupSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "group", "action", "n", "min", "q1", "median", "q3", "max", "mean", "whisker_low", "whisker_high", "outliers",
    ])?;
    for g in groups {
        let s = &g.summary;
        w.write_record([
            g.group.clone(),
            g.action.as_str().to_string(),
            s.n.to_string(),
            s.min.to_string(),
            s.q1.to_string(),
            s.median.to_string(),
            s.q3.to_string(),
            s.max.to_string(),
            s.mean.to_string(),
            s.whisker_low.to_string(),
            s.whisker_high.to_string(),
            s.outliers.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TweetKind;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn tweet(id: &str, author: &str, imp: u64, counts: [u64; 4]) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            author_id: author.into(),
            created_at: chrono::Utc.with_ymd_and_hms(2023, 1, 5, 0, 0, 0).unwrap(),
            lang: "en".into(),
            kind: TweetKind::Original,
            retweeted_author_id: None,
            impressions: imp,
            retweets: counts[0],
            replies: counts[1],
            likes: counts[2],
            quotes: counts[3],
            urls: vec![],
            author_followers: 100,
        }
    }

    #[test]
    fn direct_ratios() {
        let ae = tweet_ae(&tweet("t", "u", 500, [0, 0, 0, 0])).unwrap();
        assert_eq!(ae[Action::Like], 0.0);
        let ae = tweet_ae(&tweet("t", "u", 1000, [3, 0, 0, 0])).unwrap();
        assert_eq!(ae[Action::Retweet], 0.003);
        assert!(tweet_ae(&tweet("t", "u", 0, [1, 0, 0, 0])).is_none());
    }

    #[test]
    fn pooled_not_mean_of_ratios() {
        let tweets = vec![tweet("a", "u", 100, [0, 0, 1, 0]), tweet("b", "u", 300, [0, 0, 3, 0])];
        let agg = aggregate_ae(tweets, Granularity::User, user_key);
        assert_eq!(agg.records.len(), 1);
        assert_eq!(agg.records[0].ae[Action::Like], 0.01);
        assert_eq!(agg.records[0].impressions, 400.0);
    }

    #[test]
    fn single_tweet_user_matches_tweet_ae() {
        let t = tweet("a", "u", 777, [5, 2, 40, 1]);
        let direct = tweet_ae(&t).unwrap();
        let agg = aggregate_ae(vec![t], Granularity::User, user_key);
        assert_eq!(agg.records[0].ae, direct);
        assert_eq!(agg.records[0].mean_of_ratios, direct);
    }

    #[test]
    fn zero_impression_subjects_omitted() {
        let agg = aggregate_ae(vec![tweet("a", "u", 0, [1, 0, 0, 0])], Granularity::User, user_key);
        assert!(agg.records.is_empty());
        assert_eq!(agg.zero_impression_subjects, 1);
    }

    #[test]
    fn ae_above_one_is_counted_not_clamped() {
        let agg = aggregate_ae(vec![tweet("a", "u", 10, [0, 0, 25, 0])], Granularity::Tweet, tweet_key);
        assert_eq!(agg.records[0].ae[Action::Like], 2.5);
        assert_eq!(agg.ae_above_one, 1);
    }

    #[test]
    fn domain_attribution_modes() {
        let table = DomainTable::read_csv(
            "domain,leaning_label,reliability\na.com,Left,reliable\nb.com,Right,questionable\n".as_bytes(),
        )
        .unwrap()
        .0;
        let mut t = tweet("x", "u", 100, [2, 0, 0, 0]);
        t.urls = vec!["https://a.com/1".into(), "https://www.b.com/2".into(), "https://c.org/".into()];
        let full = aggregate_ae(vec![t.clone()], Granularity::Domain, domain_key(&table, DomainAttribution::Full));
        assert_eq!(full.records.len(), 2);
        assert!(full.records.iter().all(|r| r.impressions == 100.0 && r.counts[Action::Retweet] == 2.0));
        let frac = aggregate_ae(vec![t], Granularity::Domain, domain_key(&table, DomainAttribution::Fractional));
        assert!(frac.records.iter().all(|r| r.impressions == 50.0 && r.ae[Action::Retweet] == 0.02));
    }

    #[test]
    fn log_pearson_extremes() {
        let line: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, i as f64)).collect();
        assert!((log_pearson(&line).unwrap() - 1.0).abs() < 1e-12);
        let inv: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 1.0 / i as f64)).collect();
        assert!((log_pearson(&inv).unwrap() + 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 2.0)).collect();
        assert!(matches!(log_pearson(&flat), Err(Error::UndefinedCorrelation(_))));
        assert!(log_pearson(&[(1.0, 1.0)]).is_err());
        assert!(log_pearson(&[(1.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn group_summaries() {
        let recs: Vec<EngagementRecord> = aggregate_ae(
            vec![
                tweet("a", "u1", 100, [1, 1, 1, 1]),
                tweet("b", "u2", 100, [2, 2, 2, 2]),
                tweet("c", "u3", 100, [2, 2, 2, 2]),
            ],
            Granularity::User,
            user_key,
        )
        .records;
        let groups: BTreeMap<String, String> = [
            ("u1".to_string(), "solo".to_string()),
            ("u2".to_string(), "pair".to_string()),
            ("u3".to_string(), "pair".to_string()),
            ("ghost".to_string(), "empty".to_string()),
        ]
        .into();
        let out = group_ae(&recs, &groups);
        assert_eq!(out.len(), 8);
        let solo = out.iter().find(|g| g.group == "solo").unwrap();
        assert_eq!(solo.summary.q1, 0.01);
        assert_eq!(solo.summary.q3, 0.01);
        assert_eq!(out.iter().filter(|g| g.action == Action::Like).map(|g| g.summary.n).sum::<usize>(), 3);
    }

    #[test]
    fn engagement_csv_layout() {
        let agg = aggregate_ae(vec![tweet("a", "u", 1000, [3, 0, 10, 0])], Granularity::User, user_key);
        let mut out = Vec::new();
        write_engagement_csv(&mut out, &agg.records).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "subject,granularity,action,impressions,count,ae\n\
             u,user,retweet,1000,3,0.003\n\
             u,user,reply,1000,0,0\n\
             u,user,like,1000,10,0.01\n\
             u,user,quote,1000,0,0\n"
        );
    }

    fn arb_tweet() -> impl Strategy<Value = TweetRecord> {
        (0u8..5, 1u64..10_000, prop::array::uniform4(0u64..500)).prop_map(|(a, imp, c)| {
            tweet(&format!("t{a}{imp}"), &format!("u{a}"), imp, c)
        })
    }

    proptest! {
        #[test]
        fn pooled_ae_bounded_by_constituents(tweets in prop::collection::vec(arb_tweet(), 1..20)) {
            let agg = aggregate_ae(tweets.clone(), Granularity::User, user_key);
            for r in &agg.records {
                let own: Vec<_> = tweets.iter().filter(|t| t.author_id == r.subject_id).filter_map(tweet_ae).collect();
                for a in Action::ALL {
                    let lo = own.iter().map(|x| x[a]).fold(f64::INFINITY, f64::min);
                    let hi = own.iter().map(|x| x[a]).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(r.ae[a] >= lo * (1.0 - 1e-12) && r.ae[a] <= hi * (1.0 + 1e-12));
                    prop_assert!(r.ae[a] >= 0.0);
                }
            }
        }

        #[test]
        fn aggregation_ignores_order(tweets in prop::collection::vec(arb_tweet(), 1..20)) {
            let mut rev = tweets.clone();
            rev.reverse();
            prop_assert_eq!(
                aggregate_ae(tweets, Granularity::User, user_key),
                aggregate_ae(rev, Granularity::User, user_key)
            );
        }

        #[test]
        fn log_pearson_scale_invariant(
            pts in prop::collection::vec((1.0f64..1e6, 1.0f64..1e6), 3..30),
            kx in 1e-3f64..1e3,
            ky in 1e-3f64..1e3,
        ) {
            if let Ok(r) = log_pearson(&pts) {
                let scaled: Vec<_> = pts.iter().map(|&(x, y)| (x * kx, y * ky)).collect();
                let r2 = log_pearson(&scaled).unwrap();
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
