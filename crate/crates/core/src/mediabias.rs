//! News-domain classification: political leaning and reliability per domain,
//! URL-to-domain matching, and per-user leaning from shared links.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TweetRecord;
use crate::numeric::exact_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LeaningLabel {
    ExtremeLeft,
    Left,
    LeftCenter,
    LeastBiased,
    RightCenter,
    Right,
    ExtremeRight,
}

impl LeaningLabel {
    pub const ALL: [LeaningLabel; 7] = [
        LeaningLabel::ExtremeLeft,
        LeaningLabel::Left,
        LeaningLabel::LeftCenter,
        LeaningLabel::LeastBiased,
        LeaningLabel::RightCenter,
        LeaningLabel::Right,
        LeaningLabel::ExtremeRight,
    ];

    /// Fixed numeric encoding on `[-1, 1]`.
    pub fn score(self) -> f64 {
        match self {
            LeaningLabel::ExtremeLeft => -1.0,
            LeaningLabel::Left => -0.66,
            LeaningLabel::LeftCenter => -0.33,
            LeaningLabel::LeastBiased => 0.0,
            LeaningLabel::RightCenter => 0.33,
            LeaningLabel::Right => 0.66,
            LeaningLabel::ExtremeRight => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LeaningLabel::ExtremeLeft => "ExtremeLeft",
            LeaningLabel::Left => "Left",
            LeaningLabel::LeftCenter => "LeftCenter",
            LeaningLabel::LeastBiased => "LeastBiased",
            LeaningLabel::RightCenter => "RightCenter",
            LeaningLabel::Right => "Right",
            LeaningLabel::ExtremeRight => "ExtremeRight",
        }
    }
}

impl fmt::Display for LeaningLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn squash(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).map(|c| c.to_ascii_lowercase()).collect()
}

impl FromStr for LeaningLabel {
    type Err = String;

    /// Case, spaces, and punctuation are ignored: `Left-Center`, `left center`
    /// and `LeftCenter` are the same label.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match squash(s).as_str() {
            "extremeleft" | "farleft" => LeaningLabel::ExtremeLeft,
            "left" => LeaningLabel::Left,
            "leftcenter" | "centerleft" | "leftcentre" => LeaningLabel::LeftCenter,
            "leastbiased" | "center" | "centre" => LeaningLabel::LeastBiased,
            "rightcenter" | "centerright" | "rightcentre" => LeaningLabel::RightCenter,
            "right" => LeaningLabel::Right,
            "extremeright" | "farright" => LeaningLabel::ExtremeRight,
            _ => return Err(format!("unknown leaning label `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reliability {
    Reliable,
    Questionable,
    ConspiracyPseudoscience,
}

impl Reliability {
    pub const ALL: [Reliability; 3] = [
        Reliability::Reliable,
        Reliability::Questionable,
        Reliability::ConspiracyPseudoscience,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Reliability::Reliable => "reliable",
            Reliability::Questionable => "questionable",
            Reliability::ConspiracyPseudoscience => "conspiracy_pseudoscience",
        }
    }

    pub fn is_reliable(self) -> bool {
        self == Reliability::Reliable
    }
}

impl fmt::Display for Reliability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Reliability {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match squash(s).as_str() {
            "reliable" => Reliability::Reliable,
            "questionable" => Reliability::Questionable,
            "conspiracypseudoscience" | "conspiracy" | "pseudoscience" => Reliability::ConspiracyPseudoscience,
            _ => return Err(format!("unknown reliability class `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainProfile {
    pub domain: String,
    pub leaning_label: Option<LeaningLabel>,
    pub reliability: Reliability,
}

impl DomainProfile {
    pub fn leaning_score(&self) -> Option<f64> {
        self.leaning_label.map(LeaningLabel::score)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TableLoadReport {
    pub rows: usize,
    pub duplicates: Vec<String>,
    /// `(csv line, message)`
    pub rejected: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DomainTable {
    profiles: BTreeMap<String, DomainProfile>,
}

impl DomainTable {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, domain: &str) -> Option<&DomainProfile> {
        self.profiles.get(domain)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DomainProfile> {
        self.profiles.values()
    }

    pub fn insert(&mut self, profile: DomainProfile) -> Option<DomainProfile> {
        self.profiles.insert(profile.domain.clone(), profile)
    }

    /// Profile of the registrable domain a URL points at.
    pub fn lookup_url(&self, url: &str) -> Option<&DomainProfile> {
        extract_domain(url).and_then(|d| self.profiles.get(&d))
    }

    /// CSV `domain,leaning_label,reliability`. Domains are lowercased and
    /// collapsed to their registrable form; a repeated domain keeps the last
    /// row. Rows with unknown labels are skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<(Self, TableLoadReport)> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (Some(dc), Some(lc), Some(rc)) = (col("domain"), col("leaning_label"), col("reliability")) else {
            return Err(Error::Malformed {
                path: "<domain table>".into(),
                line: 1,
                message: "header must contain domain,leaning_label,reliability".into(),
            });
        };
        let mut table = DomainTable::default();
        let mut report = TableLoadReport::default();
        for (k, row) in rdr.records().enumerate() {
            let line = k + 2;
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    report.rejected.push((line, e.to_string()));
                    continue;
                }
            };
            report.rows += 1;
            let raw_domain = row.get(dc).unwrap_or("");
            let Some(domain) = normalize_domain(raw_domain) else {
                report.rejected.push((line, format!("invalid domain `{raw_domain}`")));
                continue;
            };
            let label = row.get(lc).unwrap_or("");
            let leaning_label = if label.is_empty() {
                None
            } else {
                match label.parse() {
                    Ok(l) => Some(l),
                    Err(e) => {
                        log::warn!("domain table line {line}: {e}");
                        report.rejected.push((line, e));
                        continue;
                    }
                }
            };
            let reliability = match row.get(rc).unwrap_or("").parse() {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("domain table line {line}: {e}");
                    report.rejected.push((line, e));
                    continue;
                }
            };
            let profile = DomainProfile {
                domain: domain.clone(),
                leaning_label,
                reliability,
            };
            if table.insert(profile).is_some() {
                log::warn!("duplicate domain `{domain}` in table; keeping the later row");
                report.duplicates.push(domain);
            }
        }
        Ok((table, report))
    }

    pub fn load(path: &Path) -> Result<(Self, TableLoadReport)> {
        let f = std::fs::File::open(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["domain", "leaning_label", "reliability"])?;
        for p in self.iter() {
            w.write_record([
                p.domain.as_str(),
                p.leaning_label.map_or("", LeaningLabel::as_str),
                p.reliability.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Loads a domain table from `path`.
pub fn load_domain_table(path: &Path) -> Result<(DomainTable, TableLoadReport)> {
    DomainTable::load(path)
}

struct SuffixRules {
    exact: HashSet<String>,
    wildcard: HashSet<String>,
    exception: HashSet<String>,
}

fn suffix_rules() -> &'static SuffixRules {
    static RULES: OnceLock<SuffixRules> = OnceLock::new();
    RULES.get_or_init(|| {
        let mut rules = SuffixRules {
            exact: HashSet::new(),
            wildcard: HashSet::new(),
            exception: HashSet::new(),
        };
        for line in include_str!("../data/public_suffix.dat").lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('!') {
                rules.exception.insert(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("*.") {
                rules.wildcard.insert(rest.to_string());
            } else {
                rules.exact.insert(line.to_string());
            }
        }
        rules
    })
}

const SHORTENERS: &[&str] = &[
    "bit.ly", "buff.ly", "dlvr.it", "fb.me", "goo.gl", "ift.tt", "is.gd", "ow.ly", "shorturl.at", "t.co", "t.ly",
    "tiny.cc", "tinyurl.com", "trib.al", "youtu.be", "wp.me", "lnkd.in", "rb.gy", "cutt.ly", "amzn.to",
];

/// Registrable domain (public suffix plus one label) of a lowercase host.
pub fn registrable_domain(host: &str) -> Option<String> {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() < 2 || labels.iter().any(|l| l.is_empty()) {
        return None;
    }
    let rules = suffix_rules();
    // number of labels in the public suffix
    let mut suffix_len = 1;
    for k in 1..=labels.len() {
        let candidate = labels[labels.len() - k..].join(".");
        if rules.exception.contains(&candidate) {
            suffix_len = k - 1;
            break;
        }
        if rules.exact.contains(&candidate) {
            suffix_len = suffix_len.max(k);
        }
        if k < labels.len() && rules.wildcard.contains(&candidate) {
            suffix_len = suffix_len.max(k + 1);
        }
    }
    if labels.len() <= suffix_len {
        return None;
    }
    Some(labels[labels.len() - suffix_len - 1..].join("."))
}

fn normalize_domain(raw: &str) -> Option<String> {
    let d = raw.trim().trim_end_matches('/').to_ascii_lowercase();
    let d = d.strip_prefix("www.").unwrap_or(&d);
    if d.is_empty() || d.contains(char::is_whitespace) || d.contains('/') {
        return None;
    }
    registrable_domain(d).or_else(|| Some(d.to_string()))
}

/// Registrable domain of a URL; `None` for link shorteners, bare IPs, and
/// strings that do not parse as web URLs.
pub fn extract_domain(raw: &str) -> Option<String> {
    let raw = raw.trim();
    if raw.is_empty() || raw.contains(char::is_whitespace) {
        return None;
    }
    let parsed = if raw.contains("://") {
        url::Url::parse(raw).ok()?
    } else {
        url::Url::parse(&format!("http://{raw}")).ok()?
    };
    if !matches!(parsed.scheme(), "http" | "https") {
        return None;
    }
    let host = match parsed.host()? {
        url::Host::Domain(d) => d.to_string(),
        _ => return None,
    };
    let host = host.trim_end_matches('.');
    if !host.contains('.') {
        return None;
    }
    let domain = registrable_domain(host)?;
    if SHORTENERS.contains(&domain.as_str()) {
        return None;
    }
    Some(domain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaningOptions {
    /// Let questionable and conspiracy sources with a leaning label count.
    pub include_unreliable: bool,
}

impl Default for LeaningOptions {
    fn default() -> Self {
        Self { include_unreliable: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserLeaning {
    pub user_id: String,
    /// URL occurrences that matched a labeled domain.
    pub n_urls: usize,
    /// Mean leaning score; absent when `n_urls == 0`.
    pub score: Option<f64>,
    /// URLs whose domain is not in the table (or is not a valid URL).
    pub unmatched: usize,
    /// URLs whose domain is in the table but carries no usable label.
    pub unlabeled: usize,
    pub class_counts: BTreeMap<LeaningLabel, usize>,
}

impl UserLeaning {
    fn empty(user_id: &str) -> Self {
        Self {
            user_id: user_id.to_string(),
            n_urls: 0,
            score: None,
            unmatched: 0,
            unlabeled: 0,
            class_counts: BTreeMap::new(),
        }
    }

    fn add_url(&mut self, url: &str, table: &DomainTable, opts: LeaningOptions) {
        match table.lookup_url(url) {
            None => self.unmatched += 1,
            Some(p) => match p.leaning_label {
                Some(label) if opts.include_unreliable || p.reliability.is_reliable() => {
                    *self.class_counts.entry(label).or_default() += 1;
                }
                _ => self.unlabeled += 1,
            },
        }
    }

    fn finish(&mut self) {
        self.n_urls = self.class_counts.values().sum();
        self.score = (self.n_urls > 0).then(|| {
            exact_sum(self.class_counts.iter().map(|(l, &n)| l.score() * n as f64)) / self.n_urls as f64
        });
    }
}

/// Mean leaning over every matched URL occurrence in `records`.
pub fn user_leaning<'a, I>(user_id: &str, records: I, table: &DomainTable, opts: LeaningOptions) -> UserLeaning
where
    I: IntoIterator<Item = &'a TweetRecord>,
{
    let mut acc = UserLeaning::empty(user_id);
    for r in records {
        for url in &r.urls {
            acc.add_url(url, table, opts);
        }
    }
    acc.finish();
    acc
}

/// Per-author leaning over a record stream, keyed by author id.
pub fn user_leanings<I>(records: I, table: &DomainTable, opts: LeaningOptions) -> BTreeMap<String, UserLeaning>
where
    I: IntoIterator<Item = TweetRecord>,
{
    let mut out: BTreeMap<String, UserLeaning> = BTreeMap::new();
    for r in records {
        if r.urls.is_empty() {
            continue;
        }
        let acc = out
            .entry(r.author_id.clone())
            .or_insert_with(|| UserLeaning::empty(&r.author_id));
        for url in &r.urls {
            acc.add_url(url, table, opts);
        }
    }
    out.values_mut().for_each(UserLeaning::finish);
    out
}

/// CSV `user_id,n_urls,score`; the score cell is empty when absent.
pub fn write_user_leanings_csv<'a, W: Write>(
    out: W,
    leanings: impl IntoIterator<Item = &'a UserLeaning>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "n_urls", "score"])?;
    for l in leanings {
        w.write_record([
            l.user_id.as_str(),
            &l.n_urls.to_string(),
            &l.score.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
