//! Cumulative temporal snapshots of the undirected, unweighted retweet
//! graph, with shortest-path and component queries on each snapshot.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;
use std::collections::VecDeque as Queue;

use chrono::{DateTime, Duration, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::event::{Corpus, UserId};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no retweet edges")]
    NoRetweetEdges,
    #[error("bin width must be positive")]
    InvalidBinWidth,
    #[error("node {0:?} not in snapshot")]
    NodeNotInSnapshot(String),
}

/// User ids interned in first-appearance order over the whole series.
/// A node is present in snapshot `t` iff its index is below that
/// snapshot's `node_count`.
#[derive(Debug, Default)]
struct NodeNames {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeNames {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }
}

/// One cumulative snapshot: a simple undirected graph over every user that
/// appeared in a retweet edge up to the end of its bin.
#[derive(Debug, Clone)]
pub struct Snapshot {
    index: u32,
    bin_start: DateTime<Utc>,
    node_count: usize,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
    names: Arc<NodeNamesShared>,
}

#[derive(Debug)]
struct NodeNamesShared {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Snapshot {
    /// 1-based snapshot index.
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn bin_start(&self) -> DateTime<Utc> {
        self.bin_start
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn contains(&self, user: &str) -> bool {
        self.node_idx(user).is_some()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.names.names[..self.node_count].iter().map(String::as_str)
    }

    fn node_idx(&self, user: &str) -> Option<u32> {
        self.names
            .index
            .get(user)
            .copied()
            .filter(|&i| (i as usize) < self.node_count)
    }

    /// Hop count of a shortest path between `u` and `v`, by breadth-first
    /// search. Absent when either node is missing or they are disconnected;
    /// 0 when `u == v` and present.
    pub fn shortest_path_length(&self, u: &str, v: &str) -> Option<u32> {
        let src = self.node_idx(u)?;
        let dst = self.node_idx(v)?;
        if src == dst {
            return Some(0);
        }
        let mut dist = vec![u32::MAX; self.node_count];
        dist[src as usize] = 0;
        let mut queue: Queue<u32> = VecDeque::new();
        queue.push_back(src);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur as usize];
            for &next in &self.adj[cur as usize] {
                if dist[next as usize] == u32::MAX {
                    if next == dst {
                        return Some(d + 1);
                    }
                    dist[next as usize] = d + 1;
                    queue.push_back(next);
                }
            }
        }
        None
    }

    /// Distances from `u` to every target via one single-source traversal.
    /// Equals [`Snapshot::shortest_path_length`] applied per target.
    pub fn batch_distances(
        &self,
        u: &str,
        targets: &BTreeSet<UserId>,
    ) -> BTreeMap<UserId, Option<u32>> {
        let mut out: BTreeMap<UserId, Option<u32>> =
            targets.iter().map(|t| (t.clone(), None)).collect();
        let Some(src) = self.node_idx(u) else {
            return out;
        };
        let wanted: HashMap<u32, &UserId> = targets
            .iter()
            .filter_map(|t| self.node_idx(t).map(|i| (i, t)))
            .collect();
        let mut remaining = wanted.len();
        if let Some(t) = wanted.get(&src) {
            out.insert((*t).clone(), Some(0));
            remaining -= 1;
        }
        if remaining == 0 {
            return out;
        }
        let mut dist = vec![u32::MAX; self.node_count];
        dist[src as usize] = 0;
        let mut queue: Queue<u32> = VecDeque::new();
        queue.push_back(src);
        'bfs: while let Some(cur) = queue.pop_front() {
            let d = dist[cur as usize];
            for &next in &self.adj[cur as usize] {
                if dist[next as usize] == u32::MAX {
                    dist[next as usize] = d + 1;
                    if let Some(t) = wanted.get(&next) {
                        out.insert((*t).clone(), Some(d + 1));
                        remaining -= 1;
                        if remaining == 0 {
                            break 'bfs;
                        }
                    }
                    queue.push_back(next);
                }
            }
        }
        out
    }

    /// The maximal connected node set containing `u`.
    pub fn connected_component(&self, u: &str) -> Result<BTreeSet<UserId>, GraphError> {
        let src = self
            .node_idx(u)
            .ok_or_else(|| GraphError::NodeNotInSnapshot(u.to_string()))?;
        let mut seen = vec![false; self.node_count];
        seen[src as usize] = true;
        let mut queue: Queue<u32> = VecDeque::new();
        queue.push_back(src);
        let mut component = BTreeSet::new();
        component.insert(self.names.names[src as usize].clone());
        while let Some(cur) = queue.pop_front() {
            for &next in &self.adj[cur as usize] {
                if !seen[next as usize] {
                    seen[next as usize] = true;
                    component.insert(self.names.names[next as usize].clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(component)
    }

    /// Undirected edges as `(min, max)` user-id pairs, lexicographically
    /// sorted.
    pub fn edges(&self) -> Vec<(UserId, UserId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (i, neighbors) in self.adj.iter().enumerate() {
            let a = &self.names.names[i];
            for &j in neighbors {
                if (j as usize) > i {
                    let b = &self.names.names[j as usize];
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
        out.sort();
        out
    }
}

/// Ordered cumulative snapshots over fixed-width bins anchored at the
/// corpus window start.
#[derive(Debug)]
pub struct SnapshotSeries {
    bin_width: Duration,
    window_start: DateTime<Utc>,
    snapshots: Vec<Snapshot>,
}

impl SnapshotSeries {
    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Snapshot by 1-based index.
    pub fn snapshot(&self, t: u32) -> Option<&Snapshot> {
        if t == 0 {
            return None;
        }
        self.snapshots.get(t as usize - 1)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn bin_width(&self) -> Duration {
        self.bin_width
    }

    pub fn window_start(&self) -> DateTime<Utc> {
        self.window_start
    }

    /// 1-based bin owning `ts`. Bin `t` covers
    /// `[start + (t-1)*width, start + t*width)`; the final bin additionally
    /// owns the inclusive window end.
    pub fn bin_index_of(&self, ts: DateTime<Utc>) -> u32 {
        let width = self.bin_width.num_seconds();
        let offset = (ts - self.window_start).num_seconds().max(0);
        let raw = (offset / width) as u32 + 1;
        raw.min(self.snapshots.len() as u32)
    }
}

/// Build the cumulative snapshot series from the retweet events of a
/// corpus. Snapshot count is `ceil(window length / bin_width)`, minimum 1.
pub fn build_series(corpus: &Corpus, bin_width: Duration) -> Result<SnapshotSeries, GraphError> {
    if bin_width <= Duration::zero() {
        return Err(GraphError::InvalidBinWidth);
    }
    if corpus.retweets().next().is_none() {
        return Err(GraphError::NoRetweetEdges);
    }
    let (start, end) = corpus.window();
    let width_secs = bin_width.num_seconds();
    let len_secs = (end - start).num_seconds();
    let count = (len_secs.div_ceil(width_secs)).max(1) as u32;

    let mut names = NodeNames::default();
    let mut adj: Vec<Vec<u32>> = Vec::new();
    let mut edge_set: HashSet<(u32, u32)> = HashSet::new();
    // Frozen per-bin state: (node_count, adjacency, edge_count).
    let mut frozen: Vec<(usize, Vec<Vec<u32>>, usize)> = Vec::with_capacity(count as usize);

    let mut retweets = corpus.retweets().peekable();
    for t in 1..=count {
        let bin_end = start + bin_width * t as i32;
        loop {
            let Some(ev) = retweets.peek() else { break };
            if t < count && ev.timestamp >= bin_end {
                break;
            }
            let ev = retweets.next().expect("peeked");
            let target = ev.target_id.as_deref().expect("validated retweet");
            let a = names.intern(&ev.actor_id);
            let b = names.intern(target);
            if adj.len() < names.names.len() {
                adj.resize(names.names.len(), Vec::new());
            }
            let key = (a.min(b), a.max(b));
            if edge_set.insert(key) {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        let mut adj_frozen = adj.clone();
        for list in &mut adj_frozen {
            list.sort_unstable();
        }
        frozen.push((names.names.len(), adj_frozen, edge_set.len()));
    }
    debug_assert!(retweets.next().is_none());

    let shared = Arc::new(NodeNamesShared {
        names: names.names,
        index: names.index,
    });
    let snapshots = frozen
        .into_iter()
        .enumerate()
        .map(|(i, (node_count, adj, edge_count))| Snapshot {
            index: i as u32 + 1,
            bin_start: start + bin_width * i as i32,
            node_count,
            adj,
            edge_count,
            names: Arc::clone(&shared),
        })
        .collect();

    Ok(SnapshotSeries {
        bin_width,
        window_start: start,
        snapshots,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotSummary {
    pub index: u32,
    pub bin_start: String,
    pub nodes: usize,
    pub edges: usize,
}

/// Per-series manifest describing every snapshot, for export alongside the
/// edge lists.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesManifest {
    pub bin_width_secs: i64,
    pub window_start: String,
    pub snapshots: Vec<SnapshotSummary>,
}

pub fn series_manifest(series: &SnapshotSeries) -> SeriesManifest {
    SeriesManifest {
        bin_width_secs: series.bin_width().num_seconds(),
        window_start: series
            .window_start()
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        snapshots: series
            .snapshots()
            .iter()
            .map(|s| SnapshotSummary {
                index: s.index(),
                bin_start: s.bin_start().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                nodes: s.node_count(),
                edges: s.edge_count(),
            })
            .collect(),
    }
}

/// Edge list as CSV lines `u,v`, lexicographically sorted, no header.
pub fn edge_list_csv(snapshot: &Snapshot) -> String {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for (a, b) in snapshot.edges() {
        writer.write_record([a, b]).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventKind, InteractionEvent};

    fn ts(s: &str) -> DateTime<Utc> {
        s.parse().unwrap()
    }

    fn retweet(id: &str, actor: &str, target: &str, when: &str) -> InteractionEvent {
        InteractionEvent {
            event_id: id.into(),
            actor_id: actor.into(),
            kind: EventKind::Retweet,
            target_id: Some(target.into()),
            timestamp: ts(when),
            text: None,
            topic_id: None,
            topic_category: None,
        }
    }

    fn corpus(events: Vec<InteractionEvent>, window: Option<(&str, &str)>) -> Corpus {
        Corpus::new(events, window.map(|(a, b)| (ts(a), ts(b)))).unwrap()
    }

    #[test]
    fn single_retweet_appears_in_every_snapshot() {
        let c = corpus(
            vec![retweet("e1", "a", "b", "2021-01-01T00:00:00Z")],
            Some(("2021-01-01T00:00:00Z", "2021-01-29T00:00:00Z")),
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        assert_eq!(series.len(), 2);
        for snap in series.snapshots() {
            assert_eq!(snap.edge_count(), 1);
            assert_eq!(snap.node_count(), 2);
            assert_eq!(snap.shortest_path_length("a", "b"), Some(1));
        }
    }

    #[test]
    fn reverse_retweet_keeps_single_undirected_edge() {
        let c = corpus(
            vec![
                retweet("e1", "a", "b", "2021-01-01T00:00:00Z"),
                retweet("e2", "b", "a", "2021-01-16T00:00:00Z"),
            ],
            None,
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series.snapshot(2).unwrap().edge_count(), 1);
    }

    #[test]
    fn snapshot_count_is_ceiling_of_window_over_width() {
        // 8 weeks at 14-day bins -> 4 snapshots.
        let c = corpus(
            vec![retweet("e1", "a", "b", "2021-01-01T00:00:00Z")],
            Some(("2021-01-01T00:00:00Z", "2021-02-26T00:00:00Z")),
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        assert_eq!(series.len(), 4);
    }

    #[test]
    fn no_retweets_is_an_error() {
        let c = corpus(
            vec![InteractionEvent {
                event_id: "e".into(),
                actor_id: "u".into(),
                kind: EventKind::Original,
                target_id: None,
                timestamp: ts("2021-01-01T00:00:00Z"),
                text: None,
                topic_id: None,
                topic_category: None,
            }],
            None,
        );
        assert!(matches!(
            build_series(&c, Duration::days(14)),
            Err(GraphError::NoRetweetEdges)
        ));
    }

    fn path_graph() -> SnapshotSeries {
        // a-b-c in one bin.
        let c = corpus(
            vec![
                retweet("e1", "a", "b", "2021-01-01T00:00:00Z"),
                retweet("e2", "b", "c", "2021-01-02T00:00:00Z"),
            ],
            None,
        );
        build_series(&c, Duration::days(14)).unwrap()
    }

    #[test]
    fn bfs_on_path_graph() {
        let series = path_graph();
        let snap = series.snapshot(1).unwrap();
        assert_eq!(snap.shortest_path_length("a", "c"), Some(2));
        assert_eq!(snap.shortest_path_length("a", "a"), Some(0));
        assert_eq!(snap.shortest_path_length("a", "zzz"), None);
    }

    #[test]
    fn bfs_symmetry_spot_check() {
        let series = path_graph();
        let snap = series.snapshot(1).unwrap();
        assert_eq!(
            snap.shortest_path_length("a", "c"),
            snap.shortest_path_length("c", "a")
        );
    }

    #[test]
    fn batch_distances_empty_targets() {
        let series = path_graph();
        let snap = series.snapshot(1).unwrap();
        assert!(snap.batch_distances("a", &BTreeSet::new()).is_empty());
    }

    #[test]
    fn batch_distances_on_star() {
        let c = corpus(
            (1..=5)
                .map(|i| {
                    retweet(
                        &format!("e{i}"),
                        "hub",
                        &format!("leaf{i}"),
                        "2021-01-01T00:00:00Z",
                    )
                })
                .collect(),
            None,
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        let snap = series.snapshot(1).unwrap();
        let targets: BTreeSet<UserId> = (1..=5).map(|i| format!("leaf{i}")).collect();
        let dists = snap.batch_distances("hub", &targets);
        assert_eq!(dists.len(), 5);
        assert!(dists.values().all(|d| *d == Some(1)));
    }

    #[test]
    fn batch_distances_match_pairwise_calls() {
        let series = path_graph();
        let snap = series.snapshot(1).unwrap();
        let targets: BTreeSet<UserId> =
            ["a", "b", "c", "missing"].iter().map(|s| s.to_string()).collect();
        let batch = snap.batch_distances("a", &targets);
        for t in &targets {
            assert_eq!(batch[t], snap.shortest_path_length("a", t), "target {t}");
        }
    }

    #[test]
    fn component_of_isolated_edge() {
        let c = corpus(
            vec![
                retweet("e1", "a", "b", "2021-01-01T00:00:00Z"),
                retweet("e2", "x", "y", "2021-01-01T00:00:01Z"),
            ],
            None,
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        let snap = series.snapshot(1).unwrap();
        let comp = snap.connected_component("a").unwrap();
        assert_eq!(comp.len(), 2);
        assert!(comp.contains("a") && comp.contains("b"));
        assert!(matches!(
            snap.connected_component("nope"),
            Err(GraphError::NodeNotInSnapshot(_))
        ));
    }

    #[test]
    fn component_of_path_center() {
        let series = path_graph();
        let comp = series.snapshot(1).unwrap().connected_component("b").unwrap();
        let want: BTreeSet<UserId> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(comp, want);
    }

    #[test]
    fn cumulative_monotonicity() {
        let c = corpus(
            vec![
                retweet("e1", "a", "b", "2021-01-01T00:00:00Z"),
                retweet("e2", "c", "d", "2021-01-20T00:00:00Z"),
                retweet("e3", "a", "c", "2021-02-05T00:00:00Z"),
            ],
            None,
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        assert_eq!(series.len(), 3);
        for w in series.snapshots().windows(2) {
            assert!(w[1].node_count() >= w[0].node_count());
            assert!(w[1].edge_count() >= w[0].edge_count());
            let prev_edges: HashSet<_> = w[0].edges().into_iter().collect();
            let next_edges: HashSet<_> = w[1].edges().into_iter().collect();
            assert!(prev_edges.is_subset(&next_edges));
        }
    }

    #[test]
    fn event_at_window_end_lands_in_last_bin() {
        let c = corpus(
            vec![
                retweet("e1", "a", "b", "2021-01-01T00:00:00Z"),
                retweet("e2", "b", "c", "2021-01-29T00:00:00Z"),
            ],
            None,
        );
        // Window is exactly 28 days; the final event sits on the boundary.
        let series = build_series(&c, Duration::days(14)).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series.bin_index_of(ts("2021-01-29T00:00:00Z")), 2);
        assert_eq!(series.snapshot(2).unwrap().edge_count(), 2);
        assert_eq!(series.snapshot(1).unwrap().edge_count(), 1);
    }

    #[test]
    fn edge_list_export_is_sorted() {
        let c = corpus(
            vec![
                retweet("e1", "zeta", "alpha", "2021-01-01T00:00:00Z"),
                retweet("e2", "beta", "alpha", "2021-01-02T00:00:00Z"),
            ],
            None,
        );
        let series = build_series(&c, Duration::days(14)).unwrap();
        let csv = edge_list_csv(series.snapshot(1).unwrap());
        assert_eq!(csv, "alpha,beta\nalpha,zeta\n");
        let manifest = series_manifest(&series);
        assert_eq!(manifest.snapshots.len(), 1);
        assert_eq!(manifest.snapshots[0].nodes, 3);
        assert_eq!(manifest.snapshots[0].edges, 2);
    }
}
