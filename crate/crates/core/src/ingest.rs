//! Parsing, validation, normalization, deduplication, and descriptive
//! statistics for interaction-event streams.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, BufRead, BufReader, Read};
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::Serialize;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::event::{Corpus, EventKind, InteractionEvent, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unreadable stream: {0}")]
    Io(#[from] io::Error),
    #[error("malformed record rate {errors}/{records} exceeds threshold {max_error_rate}")]
    ErrorRateExceeded {
        errors: usize,
        records: usize,
        max_error_rate: f64,
    },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Per-record problem, reported with the 1-based line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDiagnostic {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Study window; events outside it are excluded with a diagnostic.
    /// `None` derives the window from the data.
    pub window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    /// Fatal threshold on `malformed / total` records.
    pub max_error_rate: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            window: None,
            max_error_rate: 0.01,
        }
    }
}

#[derive(Debug)]
pub struct ParseOutcome {
    pub corpus: Corpus,
    pub diagnostics: Vec<RecordDiagnostic>,
    /// Total data records seen (valid and malformed, blank lines excluded).
    pub records_read: usize,
}

/// Parse a UTF-8 event stream into a validated corpus.
///
/// Malformed records are excluded and reported in the outcome rather than
/// silently dropped; the stream is fatal only when unreadable or when the
/// malformed fraction exceeds the configured threshold.
pub fn parse_events<R: Read>(source: R, format: InputFormat) -> Result<ParseOutcome, IngestError> {
    parse_events_with(source, format, &ParseOptions::default())
}

pub fn parse_events_with<R: Read>(
    source: R,
    format: InputFormat,
    options: &ParseOptions,
) -> Result<ParseOutcome, IngestError> {
    let mut raw: Vec<(u64, InteractionEvent)> = Vec::new();
    let mut diagnostics: Vec<RecordDiagnostic> = Vec::new();
    let mut records_read = 0usize;

    match format {
        InputFormat::Jsonl => {
            let reader = BufReader::new(source);
            for (idx, line) in reader.lines().enumerate() {
                let line_no = idx as u64 + 1;
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                records_read += 1;
                match serde_json::from_str::<InteractionEvent>(&line) {
                    Ok(ev) => raw.push((line_no, ev)),
                    Err(e) => diagnostics.push(RecordDiagnostic {
                        line: line_no,
                        message: e.to_string(),
                    }),
                }
            }
        }
        InputFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_reader(source);
            let mut iter = reader.deserialize::<InteractionEvent>();
            loop {
                let line_no = iter.reader().position().line();
                match iter.next() {
                    None => break,
                    Some(Ok(ev)) => {
                        records_read += 1;
                        raw.push((line_no, ev));
                    }
                    Some(Err(e)) => {
                        if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                            return Err(IngestError::Io(io::Error::other(e)));
                        }
                        records_read += 1;
                        diagnostics.push(RecordDiagnostic {
                            line: line_no,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    // Semantic validation happens after decoding so both formats share it.
    let mut seen_ids: HashSet<String> = HashSet::with_capacity(raw.len());
    let mut events: Vec<InteractionEvent> = Vec::with_capacity(raw.len());
    for (line, ev) in raw {
        if let Err(reason) = ev.validate() {
            diagnostics.push(RecordDiagnostic {
                line,
                message: reason,
            });
            continue;
        }
        if let Some((start, end)) = options.window {
            if ev.timestamp < start || ev.timestamp > end {
                diagnostics.push(RecordDiagnostic {
                    line,
                    message: "timestamp outside study window".into(),
                });
                continue;
            }
        }
        if !seen_ids.insert(ev.event_id.clone()) {
            diagnostics.push(RecordDiagnostic {
                line,
                message: format!("duplicate event_id {:?}", ev.event_id),
            });
            continue;
        }
        events.push(ev);
    }

    if records_read > 0 {
        let rate = diagnostics.len() as f64 / records_read as f64;
        if rate > options.max_error_rate {
            return Err(IngestError::ErrorRateExceeded {
                errors: diagnostics.len(),
                records: records_read,
                max_error_rate: options.max_error_rate,
            });
        }
    }

    events.sort_by(|a, b| (a.timestamp, &a.event_id).cmp(&(b.timestamp, &b.event_id)));
    let window = options
        .window
        .unwrap_or_else(|| crate::event::derive_window(&events));
    Ok(ParseOutcome {
        corpus: Corpus::from_validated(events, window),
        diagnostics,
        records_read,
    })
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // A mention is a maximal "@" followed by word characters.
    RE.get_or_init(|| Regex::new(r"@\w+").expect("valid regex"))
}

fn strip_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // Whitespace plus Unicode punctuation and symbols.
    RE.get_or_init(|| Regex::new(r"[\s\p{P}\p{S}]+").expect("valid regex"))
}

/// Canonical text key used for duplicate detection: NFC-normalize, drop
/// @-mention tokens, drop whitespace, punctuation and symbols, lowercase.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let no_mentions = mention_re().replace_all(&nfc, "");
    let stripped = strip_re().replace_all(&no_mentions, "");
    stripped.to_lowercase().nfc().collect()
}

/// Prepare a corpus for topic-level analysis: drop every retweet, then keep
/// only the earliest event per [`normalize_text`] key.
pub fn dedup_for_topics(corpus: &Corpus) -> Corpus {
    let mut seen: HashSet<String> = HashSet::new();
    let mut kept: Vec<InteractionEvent> = Vec::new();
    for ev in corpus.events() {
        if ev.kind == EventKind::Retweet {
            continue;
        }
        let key = normalize_text(ev.text.as_deref().unwrap_or(""));
        if seen.insert(key) {
            kept.push(ev.clone());
        }
    }
    Corpus::from_validated(kept, corpus.window())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindBreakdown {
    pub kind: EventKind,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdBucket {
    pub label: String,
    pub users: u64,
    pub proportion: f64,
}

/// Dataset-level descriptive statistics: share of events per kind, user
/// counts, and the proportion of users at fixed tweet-count thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveReport {
    pub total_events: u64,
    pub by_kind: Vec<KindBreakdown>,
    pub num_users: u64,
    pub mean_tweets_per_user: f64,
    pub max_tweets_per_user: u64,
    pub tweet_count_thresholds: Vec<ThresholdBucket>,
}

const TWEET_THRESHOLDS: [(&str, u64); 6] = [
    ("=1", 1),
    ("<=2", 2),
    ("<=3", 3),
    ("<=5", 5),
    ("<=10", 10),
    ("<=20", 20),
];

pub fn describe(corpus: &Corpus) -> Result<DescriptiveReport, IngestError> {
    if corpus.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let total = corpus.len() as u64;

    let mut kind_counts: BTreeMap<EventKind, u64> = BTreeMap::new();
    let mut per_user: HashMap<&str, u64> = HashMap::new();
    for ev in corpus.events() {
        *kind_counts.entry(ev.kind).or_insert(0) += 1;
        *per_user.entry(ev.actor_id.as_str()).or_insert(0) += 1;
    }

    let by_kind = EventKind::ALL
        .iter()
        .map(|&kind| {
            let count = kind_counts.get(&kind).copied().unwrap_or(0);
            KindBreakdown {
                kind,
                count,
                percent: 100.0 * count as f64 / total as f64,
            }
        })
        .collect();

    let num_users = per_user.len() as u64;
    let max_tweets = per_user.values().copied().max().unwrap_or(0);
    let mean_tweets = total as f64 / num_users as f64;

    let tweet_count_thresholds = TWEET_THRESHOLDS
        .iter()
        .map(|&(label, bound)| {
            let users = per_user
                .values()
                .filter(|&&c| if label == "=1" { c == 1 } else { c <= bound })
                .count() as u64;
            ThresholdBucket {
                label: label.to_string(),
                users,
                proportion: users as f64 / num_users as f64,
            }
        })
        .collect();

    Ok(DescriptiveReport {
        total_events: total,
        by_kind,
        num_users,
        mean_tweets_per_user: mean_tweets,
        max_tweets_per_user: max_tweets,
        tweet_count_thresholds,
    })
}

impl DescriptiveReport {
    /// `key,value` rows in a fixed order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out.push_str(&format!("total_events,{}\n", self.total_events));
        for row in &self.by_kind {
            out.push_str(&format!("count_{},{}\n", row.kind, row.count));
            out.push_str(&format!("pct_{},{}\n", row.kind, row.percent));
        }
        out.push_str(&format!("num_users,{}\n", self.num_users));
        out.push_str(&format!(
            "mean_tweets_per_user,{}\n",
            self.mean_tweets_per_user
        ));
        out.push_str(&format!(
            "max_tweets_per_user,{}\n",
            self.max_tweets_per_user
        ));
        for bucket in &self.tweet_count_thresholds {
            let key = bucket.label.replace("<=", "le_").replace('=', "eq_");
            out.push_str(&format!("prop_users_{},{}\n", key, bucket.proportion));
        }
        out
    }
}

/// Retweet counts per actor, used by the speed stage's user filter.
pub fn retweet_counts(corpus: &Corpus) -> BTreeMap<UserId, u64> {
    let mut counts: BTreeMap<UserId, u64> = BTreeMap::new();
    for ev in corpus.retweets() {
        *counts.entry(ev.actor_id.clone()).or_insert(0) += 1;
    }
    counts
}
