//! Streaming ingestion of newline-delimited tweet records and corpus filters.
//!
//! Two record layouts are understood:
//!
//! * `flat`: one object per line with the fields of [`TweetRecord`]
//!   (`tweet_id`, `author_id`, `created_at`, `lang`, `kind`,
//!   `retweeted_author_id`, `impressions`, `likes`, `replies`, `retweets`,
//!   `quotes`, `urls`, `author_followers`).
//! * `api`: the v2 tweet object shape (`id`, `author_id`, `created_at`,
//!   `lang`, `public_metrics.{retweet,reply,like,quote,impression}_count`,
//!   `referenced_tweets[].{type,id,author_id}`, `entities.urls[].expanded_url`,
//!   `author.public_metrics.followers_count`).
//!
//! Malformed lines are counted by reason and skipped; only I/O failures abort.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Date the platform started reporting impression counts.
pub fn impression_metric_release() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2022, 12, 15, 0, 0, 0).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TweetKind {
    Original,
    Retweet,
    Quote,
    Reply,
}

impl TweetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TweetKind::Original => "original",
            TweetKind::Retweet => "retweet",
            TweetKind::Quote => "quote",
            TweetKind::Reply => "reply",
        }
    }
}

impl FromStr for TweetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" => Ok(TweetKind::Original),
            "retweet" => Ok(TweetKind::Retweet),
            "quote" => Ok(TweetKind::Quote),
            "reply" => Ok(TweetKind::Reply),
            other => Err(format!("unknown tweet kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    pub lang: String,
    pub kind: TweetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweeted_author_id: Option<String>,
    pub impressions: u64,
    pub likes: u64,
    pub replies: u64,
    pub retweets: u64,
    pub quotes: u64,
    #[serde(default)]
    pub urls: Vec<String>,
    pub author_followers: u64,
}

impl TweetRecord {
    pub fn is_self_retweet(&self) -> bool {
        self.kind == TweetKind::Retweet
            && self.retweeted_author_id.as_deref() == Some(self.author_id.as_str())
    }

    /// One JSON line in the `flat` layout.
    pub fn to_flat_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordSchema {
    Flat,
    Api,
}

impl FromStr for RecordSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(RecordSchema::Flat),
            "api" => Ok(RecordSchema::Api),
            other => Err(Error::UnknownSchema(other.to_string())),
        }
    }
}

#[derive(Deserialize)]
struct FlatLine {
    tweet_id: String,
    author_id: String,
    created_at: String,
    lang: String,
    kind: String,
    #[serde(default)]
    retweeted_author_id: Option<String>,
    impressions: u64,
    likes: u64,
    replies: u64,
    retweets: u64,
    quotes: u64,
    #[serde(default)]
    urls: Vec<String>,
    #[serde(default)]
    author_followers: u64,
}

#[derive(Deserialize)]
struct ApiLine {
    id: String,
    author_id: String,
    created_at: String,
    lang: String,
    public_metrics: ApiMetrics,
    #[serde(default)]
    referenced_tweets: Vec<ApiReference>,
    #[serde(default)]
    entities: Option<ApiEntities>,
    #[serde(default)]
    author: Option<ApiAuthor>,
}

#[derive(Deserialize)]
struct ApiMetrics {
    retweet_count: u64,
    reply_count: u64,
    like_count: u64,
    quote_count: u64,
    #[serde(default)]
    impression_count: u64,
}

#[derive(Deserialize)]
struct ApiReference {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    author_id: Option<String>,
}

#[derive(Deserialize)]
struct ApiEntities {
    #[serde(default)]
    urls: Vec<ApiUrl>,
}

#[derive(Deserialize)]
struct ApiUrl {
    #[serde(default)]
    expanded_url: Option<String>,
    #[serde(default)]
    url: Option<String>,
}

#[derive(Deserialize)]
struct ApiAuthor {
    public_metrics: ApiAuthorMetrics,
}

#[derive(Deserialize)]
struct ApiAuthorMetrics {
    followers_count: u64,
}

/// Parsed timestamp and whether the source lacked a zone designator.
pub fn parse_timestamp(s: &str) -> Option<(DateTime<Utc>, bool)> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some((t.with_timezone(&Utc), false));
    }
    if let Ok(t) = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y") {
        return Some((t.with_timezone(&Utc), false));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some((t.and_utc(), true));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| (d.and_hms_opt(0, 0, 0).unwrap().and_utc(), true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RejectReason {
    InvalidJson,
    Schema,
    Timestamp,
    EmptyId,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::InvalidJson => "invalid_json",
            RejectReason::Schema => "schema",
            RejectReason::Timestamp => "timestamp",
            RejectReason::EmptyId => "empty_id",
        }
    }
}

struct Rejected(RejectReason, String);

struct Parsed {
    record: TweetRecord,
    naive_timestamp: bool,
}

fn parse_line(line: &str, schema: RecordSchema) -> std::result::Result<Parsed, Rejected> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| Rejected(RejectReason::InvalidJson, e.to_string()))?;
    let (record, created_at) = match schema {
        RecordSchema::Flat => {
            let f: FlatLine = serde_json::from_value(value)
                .map_err(|e| Rejected(RejectReason::Schema, e.to_string()))?;
            let kind = f
                .kind
                .parse::<TweetKind>()
                .map_err(|e| Rejected(RejectReason::Schema, e))?;
            let created = f.created_at.clone();
            (
                TweetRecord {
                    tweet_id: f.tweet_id,
                    author_id: f.author_id,
                    created_at: DateTime::<Utc>::MIN_UTC,
                    lang: f.lang,
                    kind,
                    retweeted_author_id: f.retweeted_author_id.filter(|s| !s.is_empty()),
                    impressions: f.impressions,
                    likes: f.likes,
                    replies: f.replies,
                    retweets: f.retweets,
                    quotes: f.quotes,
                    urls: f.urls,
                    author_followers: f.author_followers,
                },
                created,
            )
        }
        RecordSchema::Api => {
            let a: ApiLine = serde_json::from_value(value)
                .map_err(|e| Rejected(RejectReason::Schema, e.to_string()))?;
            let find = |t: &str| a.referenced_tweets.iter().find(|r| r.kind == t);
            let (kind, referenced) = if let Some(r) = find("retweeted") {
                (TweetKind::Retweet, r.author_id.clone())
            } else if let Some(r) = find("quoted") {
                (TweetKind::Quote, r.author_id.clone())
            } else if find("replied_to").is_some() {
                (TweetKind::Reply, None)
            } else {
                (TweetKind::Original, None)
            };
            let urls = a
                .entities
                .map(|e| {
                    e.urls
                        .into_iter()
                        .filter_map(|u| u.expanded_url.or(u.url))
                        .collect()
                })
                .unwrap_or_default();
            (
                TweetRecord {
                    tweet_id: a.id,
                    author_id: a.author_id,
                    created_at: DateTime::<Utc>::MIN_UTC,
                    lang: a.lang,
                    kind,
                    retweeted_author_id: referenced.filter(|s| !s.is_empty()),
                    impressions: a.public_metrics.impression_count,
                    likes: a.public_metrics.like_count,
                    replies: a.public_metrics.reply_count,
                    retweets: a.public_metrics.retweet_count,
                    quotes: a.public_metrics.quote_count,
                    urls,
                    author_followers: a.author.map(|x| x.public_metrics.followers_count).unwrap_or(0),
                },
                a.created_at,
            )
        }
    };
    if record.tweet_id.is_empty() || record.author_id.is_empty() {
        return Err(Rejected(RejectReason::EmptyId, "empty tweet or author id".into()));
    }
    let (ts, naive) = parse_timestamp(&created_at)
        .ok_or_else(|| Rejected(RejectReason::Timestamp, format!("unparseable `{created_at}`")))?;
    Ok(Parsed {
        record: TweetRecord { created_at: ts, ..record },
        naive_timestamp: naive,
    })
}

/// Running tallies kept while a corpus is parsed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseStats {
    pub lines: usize,
    pub records: usize,
    pub rejects: BTreeMap<String, usize>,
    /// Records whose timestamp had no zone and was read as UTC.
    pub naive_timestamps: usize,
    pub self_retweets: usize,
}

impl ParseStats {
    pub fn total_rejects(&self) -> usize {
        self.rejects.values().sum()
    }
}

/// Line-by-line record reader. Yields records in input order; malformed lines
/// are skipped and tallied in [`ParseStats`].
pub struct CorpusReader<R> {
    reader: R,
    schema: RecordSchema,
    source: PathBuf,
    buf: String,
    stats: ParseStats,
    reject_sink: Option<Box<dyn Write>>,
    failed: bool,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(reader: R, schema: RecordSchema) -> Self {
        Self {
            reader,
            schema,
            source: PathBuf::from("<stream>"),
            buf: String::new(),
            stats: ParseStats::default(),
            reject_sink: None,
            failed: false,
        }
    }

    /// Rejected lines are written to `sink` as `line<TAB>reason<TAB>message`.
    pub fn with_reject_sink(mut self, sink: Box<dyn Write>) -> Self {
        self.reject_sink = Some(sink);
        self
    }

    pub fn stats(&self) -> &ParseStats {
        &self.stats
    }

    pub fn into_stats(mut self) -> Result<ParseStats> {
        if let Some(sink) = self.reject_sink.as_mut() {
            sink.flush()?;
        }
        Ok(self.stats)
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<TweetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    self.failed = true;
                    return Some(Err(Error::Read {
                        path: self.source.clone(),
                        source,
                    }));
                }
            }
            self.stats.lines += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            match parse_line(line, self.schema) {
                Ok(parsed) => {
                    self.stats.records += 1;
                    if parsed.naive_timestamp {
                        self.stats.naive_timestamps += 1;
                    }
                    if parsed.record.is_self_retweet() {
                        self.stats.self_retweets += 1;
                    }
                    return Some(Ok(parsed.record));
                }
                Err(Rejected(reason, message)) => {
                    log::debug!("{}:{}: {}: {}", self.source.display(), self.stats.lines, reason.as_str(), message);
                    *self.stats.rejects.entry(reason.as_str().to_string()).or_default() += 1;
                    if let Some(sink) = self.reject_sink.as_mut() {
                        let written = writeln!(sink, "{}\t{}\t{}", self.stats.lines, reason.as_str(), message);
                        if let Err(source) = written {
                            self.failed = true;
                            return Some(Err(Error::Io(source)));
                        }
                    }
                }
            }
        }
    }
}

/// Opens a corpus file; `.gz` files are decompressed on the fly.
pub fn parse_corpus(path: &Path, schema: RecordSchema) -> Result<CorpusReader<Box<dyn BufRead>>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let reader: Box<dyn BufRead> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    let mut r = CorpusReader::new(reader, schema);
    r.source = path.to_path_buf();
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exclusion {
    BeforeMinDate,
    Language,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exclusion::BeforeMinDate => "before_min_date",
            Exclusion::Language => "language",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFilter {
    pub min_date: DateTime<Utc>,
    pub allowed_langs: BTreeSet<String>,
    pub kinds_for_engagement: BTreeSet<TweetKind>,
    pub kinds_for_network: BTreeSet<TweetKind>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        Self {
            min_date: impression_metric_release(),
            allowed_langs: BTreeSet::from(["en".to_string()]),
            kinds_for_engagement: BTreeSet::from([TweetKind::Original]),
            kinds_for_network: BTreeSet::from([TweetKind::Retweet]),
        }
    }
}

impl CorpusFilter {
    /// Whether impression counts are trustworthy for every retained record.
    pub fn impressions_reliable(&self) -> bool {
        self.min_date >= impression_metric_release()
    }

    /// The first rule a record fails, if any. Date is checked before language.
    pub fn check(&self, record: &TweetRecord) -> Option<Exclusion> {
        if record.created_at < self.min_date {
            Some(Exclusion::BeforeMinDate)
        } else if !self.allowed_langs.contains(&record.lang) {
            Some(Exclusion::Language)
        } else {
            None
        }
    }

    pub fn engagement_subset<'a, I>(&'a self, records: I) -> impl Iterator<Item = TweetRecord> + 'a
    where
        I: IntoIterator<Item = TweetRecord>,
        I::IntoIter: 'a,
    {
        records
            .into_iter()
            .filter(move |r| self.kinds_for_engagement.contains(&r.kind))
    }

    pub fn network_subset<'a, I>(&'a self, records: I) -> impl Iterator<Item = TweetRecord> + 'a
    where
        I: IntoIterator<Item = TweetRecord>,
        I::IntoIter: 'a,
    {
        records
            .into_iter()
            .filter(move |r| self.kinds_for_network.contains(&r.kind))
    }
}

/// Retained and excluded counts of one filtering pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub input: usize,
    pub retained: usize,
    pub excluded: BTreeMap<Exclusion, usize>,
}

impl FilterReport {
    pub fn total_excluded(&self) -> usize {
        self.excluded.values().sum()
    }

    /// CSV with header `reason,count`; every reason is listed, zeros included.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["reason", "count"])?;
        for reason in [Exclusion::BeforeMinDate, Exclusion::Language] {
            let n = self.excluded.get(&reason).copied().unwrap_or(0);
            w.write_record([reason.to_string(), n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Streams the records that pass `filter`, tallying exclusions into `report`.
pub fn apply_filters<'a, I>(
    records: I,
    filter: &'a CorpusFilter,
    report: &'a mut FilterReport,
) -> impl Iterator<Item = TweetRecord> + 'a
where
    I: IntoIterator<Item = TweetRecord>,
    I::IntoIter: 'a,
{
    records.into_iter().filter(move |r| {
        report.input += 1;
        match filter.check(r) {
            None => {
                report.retained += 1;
                true
            }
            Some(reason) => {
                *report.excluded.entry(reason).or_default() += 1;
                false
            }
        }
    })
}

/// Keeps only original tweets, the unit of engagement analysis.
pub fn engagement_subset<I>(records: I) -> impl Iterator<Item = TweetRecord>
where
    I: IntoIterator<Item = TweetRecord>,
{
    records.into_iter().filter(|r| r.kind == TweetKind::Original)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn flat(id: &str, date: &str, lang: &str, kind: &str) -> String {
        format!(
            r#"{{"tweet_id":"{id}","author_id":"u{id}","created_at":"{date}","lang":"{lang}","kind":"{kind}","impressions":100,"likes":1,"replies":0,"retweets":0,"quotes":0,"urls":[],"author_followers":10}}"#
        )
    }

    fn read_all(text: &str, schema: RecordSchema) -> (Vec<TweetRecord>, ParseStats) {
        let mut r = CorpusReader::new(Cursor::new(text.to_string()), schema);
        let recs: Vec<_> = r.by_ref().map(|x| x.unwrap()).collect();
        (recs, r.into_stats().unwrap())
    }

    #[test]
    fn malformed_line_is_skipped() {
        let text = [
            flat("1", "2023-01-05T00:00:00Z", "en", "original"),
            "{not json".to_string(),
            flat("2", "2023-01-05T00:00:00Z", "en", "reply"),
            flat("3", "2023-01-05T00:00:00Z", "en", "quote"),
        ]
        .join("\n");
        let (recs, stats) = read_all(&text, RecordSchema::Flat);
        assert_eq!(recs.len(), 3);
        assert_eq!(stats.total_rejects(), 1);
        assert_eq!(stats.rejects["invalid_json"], 1);
    }

    #[test]
    fn empty_input() {
        let (recs, stats) = read_all("", RecordSchema::Flat);
        assert!(recs.is_empty());
        assert_eq!(stats.total_rejects(), 0);
    }

    #[test]
    fn reject_reasons_are_distinguished() {
        let bad_kind = flat("1", "2023-01-05T00:00:00Z", "en", "like");
        let bad_date = flat("2", "yesterday", "en", "original");
        let negative = flat("3", "2023-01-05", "en", "original").replace("\"likes\":1", "\"likes\":-1");
        let (recs, stats) = read_all(&[bad_kind, bad_date, negative].join("\n"), RecordSchema::Flat);
        assert!(recs.is_empty());
        assert_eq!(stats.rejects["schema"], 2);
        assert_eq!(stats.rejects["timestamp"], 1);
    }

    #[test]
    fn naive_timestamps_assumed_utc() {
        let text = flat("1", "2023-01-05 10:30:00", "en", "original");
        let (recs, stats) = read_all(&text, RecordSchema::Flat);
        assert_eq!(recs[0].created_at, Utc.with_ymd_and_hms(2023, 1, 5, 10, 30, 0).unwrap());
        assert_eq!(stats.naive_timestamps, 1);
    }

    #[test]
    fn api_schema_maps_references() {
        let line = r#"{"id":"9","author_id":"a","created_at":"2023-02-01T08:00:00.000Z","lang":"en",
            "public_metrics":{"retweet_count":0,"reply_count":0,"like_count":0,"quote_count":0,"impression_count":0},
            "referenced_tweets":[{"type":"retweeted","id":"7","author_id":"b"}],
            "entities":{"urls":[{"url":"https://t.co/x","expanded_url":"https://www.example.com/a"}]},
            "author":{"public_metrics":{"followers_count":42}}}"#
            .replace('\n', "");
        let (recs, _) = read_all(&line, RecordSchema::Api);
        let r = &recs[0];
        assert_eq!(r.kind, TweetKind::Retweet);
        assert_eq!(r.retweeted_author_id.as_deref(), Some("b"));
        assert_eq!(r.urls, vec!["https://www.example.com/a".to_string()]);
        assert_eq!(r.author_followers, 42);
    }

    #[test]
    fn self_retweets_flagged_not_dropped() {
        let line = flat("1", "2023-01-05T00:00:00Z", "en", "retweet")
            .replace("\"kind\"", "\"retweeted_author_id\":\"u1\",\"kind\"");
        let (recs, stats) = read_all(&line, RecordSchema::Flat);
        assert_eq!(recs.len(), 1);
        assert_eq!(stats.self_retweets, 1);
    }

    #[test]
    fn cutoff_date_and_language() {
        let f = CorpusFilter::default();
        let (recs, _) = read_all(
            &[
                flat("1", "2022-12-10T12:00:00Z", "en", "original"),
                flat("2", "2023-01-05T12:00:00Z", "en", "original"),
                flat("3", "2023-01-05T12:00:00Z", "de", "original"),
            ]
            .join("\n"),
            RecordSchema::Flat,
        );
        assert_eq!(f.check(&recs[0]), Some(Exclusion::BeforeMinDate));
        assert_eq!(f.check(&recs[1]), None);
        assert_eq!(f.check(&recs[2]), Some(Exclusion::Language));
        let mut report = FilterReport::default();
        let kept: Vec<_> = apply_filters(recs, &f, &mut report).collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(report.input, 3);
        assert_eq!(report.total_excluded(), 2);
    }

    #[test]
    fn engagement_keeps_originals_only() {
        let (recs, _) = read_all(
            &[
                flat("1", "2023-01-05T12:00:00Z", "en", "reply"),
                flat("2", "2023-01-05T12:00:00Z", "en", "original"),
            ]
            .join("\n"),
            RecordSchema::Flat,
        );
        let kept: Vec<_> = engagement_subset(recs).collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].tweet_id, "2");
    }

    #[test]
    fn exclusion_csv_lists_every_reason() {
        let mut report = FilterReport::default();
        report.excluded.insert(Exclusion::Language, 4);
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "reason,count\nbefore_min_date,0\nlanguage,4\n");
    }

    fn arb_record() -> impl Strategy<Value = TweetRecord> {
        (0i64..120, prop::sample::select(vec!["en", "de", "fr"]), 0u8..4).prop_map(|(day, lang, k)| {
            let kind = [TweetKind::Original, TweetKind::Retweet, TweetKind::Quote, TweetKind::Reply][k as usize];
            TweetRecord {
                tweet_id: format!("t{day}{lang}{k}"),
                author_id: "a".into(),
                created_at: Utc.with_ymd_and_hms(2022, 11, 1, 0, 0, 0).unwrap() + chrono::Duration::days(day),
                lang: lang.into(),
                kind,
                retweeted_author_id: None,
                impressions: 1,
                likes: 0,
                replies: 0,
                retweets: 0,
                quotes: 0,
                urls: vec![],
                author_followers: 0,
            }
        })
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent_and_partitions(records in prop::collection::vec(arb_record(), 0..50)) {
            let f = CorpusFilter::default();
            let mut first = FilterReport::default();
            let once: Vec<_> = apply_filters(records.clone(), &f, &mut first).collect();
            let mut second = FilterReport::default();
            let twice: Vec<_> = apply_filters(once.clone(), &f, &mut second).collect();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(first.retained + first.total_excluded(), records.len());
            prop_assert_eq!(second.total_excluded(), 0);
        }
    }
}
