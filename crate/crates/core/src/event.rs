//! Domain types shared across the pipeline: interaction events and the
//! validated, time-ordered corpus they form.

use std::collections::HashSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque user identifier as it appears in the input data.
pub type UserId = String;

/// The four interaction kinds carried by the input streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Retweet,
    Reply,
    Original,
    Quote,
}

impl EventKind {
    /// All kinds in the fixed reporting order.
    pub const ALL: [EventKind; 4] = [
        EventKind::Retweet,
        EventKind::Reply,
        EventKind::Original,
        EventKind::Quote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Retweet => "retweet",
            EventKind::Reply => "reply",
            EventKind::Original => "original",
            EventKind::Quote => "quote",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Timestamps are stored at second precision; fractional seconds in the
/// input are truncated on read.
pub(crate) mod rfc3339_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{self, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(dt: &DateTime<Utc>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&dt.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(de)?;
        parse_timestamp(&raw).map_err(serde::de::Error::custom)
    }

    pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, String> {
        let parsed = DateTime::parse_from_rfc3339(raw)
            .map_err(|e| format!("invalid timestamp {raw:?}: {e}"))?;
        Ok(truncate_to_seconds(parsed.with_timezone(&Utc)))
    }

    pub fn truncate_to_seconds(dt: DateTime<Utc>) -> DateTime<Utc> {
        DateTime::from_timestamp(dt.timestamp(), 0).expect("timestamp in range")
    }
}

/// One timestamped interaction.
///
/// `target_id` is present exactly when the kind is not `original`; retweets
/// never target their own actor. Both rules are enforced at corpus
/// construction and at parse time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: String,
    pub actor_id: UserId,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_id: Option<UserId>,
    #[serde(with = "rfc3339_seconds")]
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_category: Option<String>,
}

impl InteractionEvent {
    /// Structural validity independent of any study window.
    pub(crate) fn validate(&self) -> Result<(), String> {
        match (self.kind, &self.target_id) {
            (EventKind::Original, Some(_)) => {
                return Err("unexpected target_id for original".into())
            }
            (EventKind::Original, None) => {}
            (_, None) => return Err("missing target_id".into()),
            (EventKind::Retweet, Some(t)) if *t == self.actor_id => {
                return Err("self-retweet".into())
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate event_id {0:?}")]
    DuplicateEventId(String),
    #[error("invalid event {event_id:?}: {reason}")]
    InvalidEvent { event_id: String, reason: String },
    #[error("event {event_id:?} outside study window")]
    OutsideWindow { event_id: String },
}

/// A validated sequence of events, totally ordered by `(timestamp, event_id)`,
/// together with the study window `[start, end]` the events fall in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    events: Vec<InteractionEvent>,
    window: (DateTime<Utc>, DateTime<Utc>),
}

impl Corpus {
    /// Build a corpus from raw events, validating every invariant.
    ///
    /// When `window` is `None` it is derived as `[min, max]` of the event
    /// timestamps (both epoch for an empty corpus). When given, every event
    /// must fall inside it.
    pub fn new(
        mut events: Vec<InteractionEvent>,
        window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    ) -> Result<Self, CorpusError> {
        for ev in &events {
            ev.validate().map_err(|reason| CorpusError::InvalidEvent {
                event_id: ev.event_id.clone(),
                reason,
            })?;
            if let Some((start, end)) = window {
                if ev.timestamp < start || ev.timestamp > end {
                    return Err(CorpusError::OutsideWindow {
                        event_id: ev.event_id.clone(),
                    });
                }
            }
        }
        {
            let mut seen: HashSet<&str> = HashSet::with_capacity(events.len());
            for ev in &events {
                if !seen.insert(&ev.event_id) {
                    return Err(CorpusError::DuplicateEventId(ev.event_id.clone()));
                }
            }
        }
        events.sort_by(|a, b| {
            (a.timestamp, &a.event_id).cmp(&(b.timestamp, &b.event_id))
        });
        let window = window.unwrap_or_else(|| derive_window(&events));
        Ok(Self { events, window })
    }

    /// Assemble from events already validated, deduplicated and sorted.
    pub(crate) fn from_validated(
        events: Vec<InteractionEvent>,
        window: (DateTime<Utc>, DateTime<Utc>),
    ) -> Self {
        debug_assert!(events
            .windows(2)
            .all(|w| (w[0].timestamp, &w[0].event_id) < (w[1].timestamp, &w[1].event_id)));
        Self { events, window }
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn window(&self) -> (DateTime<Utc>, DateTime<Utc>) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Iterate over the retweet events only.
    pub fn retweets(&self) -> impl Iterator<Item = &InteractionEvent> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Retweet)
    }
}

pub(crate) fn derive_window(events: &[InteractionEvent]) -> (DateTime<Utc>, DateTime<Utc>) {
    match (events.first(), events.last()) {
        (Some(first), Some(last)) => (first.timestamp, last.timestamp),
        _ => {
            let epoch = DateTime::from_timestamp(0, 0).expect("epoch");
            (epoch, epoch)
        }
    }
}
