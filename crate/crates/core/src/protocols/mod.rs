//! Range-skyline query protocols: local/global result computation and the
//! per-node state machines driven by the network simulator.

mod centralized;
mod drsq;

pub use centralized::Centralized;
pub use drsq::{Drsq, BATCH_INTERVAL};

use std::collections::BTreeMap;

use crate::error::{contract, Result};
use crate::kinematics::{MotionState, Window};
use crate::netsim::Stats;
use crate::skyline::{DataObject, NodeId};
use crate::timeline::{clip_intervals, membership, skyline_timeline, union_intervals, Candidate, Timeline};

/// A report entry: an object and the instants at which it belongs to the
/// sender's local result.
pub type Entry = Candidate;

/// What every participant knows about a query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDescriptor {
    pub id: u32,
    /// Bumped whenever the issuer re-floods with a new trajectory.
    pub version: u32,
    pub issuer: NodeId,
    pub motion: MotionState,
    pub range: f64,
    pub window: Window,
    pub ttl: u32,
}

impl QueryDescriptor {
    pub fn new(id: u32, issuer: NodeId, motion: MotionState, range: f64, window: Window, ttl: u32) -> Result<Self> {
        if !(range > 0.0) {
            return Err(contract(format!("query range {range} must be positive")));
        }
        Ok(QueryDescriptor {
            id,
            version: 0,
            issuer,
            motion,
            range,
            window,
            ttl,
        })
    }

    pub fn is_snapshot(&self) -> bool {
        self.window.is_instant()
    }

    /// The part of the window still ahead at `now`; a snapshot always
    /// evaluates at its single instant. `None` once the window has passed.
    pub fn eval_window(&self, now: f64) -> Option<Window> {
        if self.is_snapshot() {
            return Some(self.window);
        }
        if now > self.window.end {
            return None;
        }
        Some(Window {
            start: now.max(self.window.start),
            end: self.window.end,
        })
    }
}

/// A node's partial result, one entry per object, ordered by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalResult {
    pub entries: Vec<Entry>,
}

impl LocalResult {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.object.id).collect()
    }

    /// Restricted to `window`. Outside snapshots, pieces that collapse to a
    /// single instant are dropped.
    pub fn clipped(&self, window: Window) -> LocalResult {
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                let v: Vec<_> = clip_intervals(&e.validity, window)
                    .into_iter()
                    .filter(|(a, b)| window.is_instant() || a < b)
                    .collect();
                (!v.is_empty()).then(|| Entry::new(e.object.clone(), v))
            })
            .collect();
        LocalResult { entries }
    }
}

/// Unions own knowledge (valid over the whole window) with received entries.
/// Per id the newest record wins; records of the same age pool their
/// validity.
pub fn merge_candidates<'a>(
    window: Window,
    own: &[DataObject],
    received: impl IntoIterator<Item = &'a Entry>,
) -> Vec<Candidate> {
    let mut by_id: BTreeMap<NodeId, Candidate> = BTreeMap::new();
    let incoming = own
        .iter()
        .map(|o| Candidate::always(o.clone(), window))
        .chain(received.into_iter().map(|e| Entry::new(e.object.clone(), clip_intervals(&e.validity, window))));
    for c in incoming {
        if c.validity.is_empty() {
            continue;
        }
        match by_id.get_mut(&c.object.id) {
            None => {
                by_id.insert(c.object.id, c);
            }
            Some(prev) if c.object.observed_at > prev.object.observed_at => *prev = c,
            Some(prev) if c.object.observed_at == prev.object.observed_at => {
                let mut v = std::mem::take(&mut prev.validity);
                v.extend(c.validity);
                prev.validity = union_intervals(v);
            }
            Some(_) => {}
        }
    }
    by_id.into_values().collect()
}

fn entries_of(timeline: &Timeline, cands: &[Candidate]) -> Vec<Entry> {
    let objs: BTreeMap<NodeId, &DataObject> = cands.iter().map(|c| (c.object.id, &c.object)).collect();
    membership(timeline)
        .into_iter()
        .map(|(id, v)| Entry::new(objs[&id].clone(), v))
        .collect()
}

/// Local range skyline of a node from its own ground set (itself and its
/// one-hop neighbors) and the entries its children reported.
pub fn lrsq(q: &QueryDescriptor, now: f64, own: &[DataObject], received: &[Vec<Entry>]) -> Result<LocalResult> {
    let Some(window) = q.eval_window(now) else {
        return Ok(LocalResult::default());
    };
    let cands = merge_candidates(window, own, received.iter().flatten());
    let timeline = skyline_timeline(&q.motion, q.range, window, &cands)?;
    Ok(LocalResult { entries: entries_of(&timeline, &cands) })
}

/// The query node's view: candidates are the union of the received local
/// results, range-filtered against the issuer's own motion `center` and
/// dominance-pruned.
pub fn grsq_collect(q: &QueryDescriptor, center: &MotionState, now: f64, received: &[Vec<Entry>]) -> Result<Timeline> {
    let Some(window) = q.eval_window(now) else {
        return Ok(Timeline::default());
    };
    let cands = merge_candidates(window, &[], received.iter().flatten());
    skyline_timeline(center, q.range, window, &cands)
}

/// The issuer's answer: a timeline over the window (a single degenerate
/// segment for snapshots).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlobalResult {
    pub query_id: u32,
    pub timeline: Timeline,
    /// Nothing arrived before the collection timeout.
    pub low_confidence: bool,
}

/// Measurements of one query execution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryOutcome {
    pub result: GlobalResult,
    pub response_time: f64,
    pub accessed_objects: u64,
    pub stats: Stats,
}

/// Delay budget of one hop: a full burst of `BURST` packets plus a round
/// trip of latency.
pub(crate) const BURST: f64 = 8.0;

pub(crate) fn hop_budget(link: &crate::netsim::LinkModel) -> f64 {
    (1.0 + BURST) * link.tx_time() + 2.0 * link.hop_latency
}

/// How long the issuer waits for the first complete answer.
pub fn collection_timeout(link: &crate::netsim::LinkModel, ttl: u32) -> f64 {
    1.25 * (ttl as f64 + 1.0) * hop_budget(link)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::skyline::{merge_prune, ids, AttributeVector, QuerySnapshot};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn at_dist(id: u32, d: f64, v: f64) -> DataObject {
        DataObject::stationary(NodeId(id), Vec2::new(d, 0.0), AttributeVector::minimize(vec![v]).unwrap())
    }

    fn snapshot_query() -> QueryDescriptor {
        QueryDescriptor::new(0, NodeId(99), MotionState::stationary(Vec2::ZERO), 100.0, Window::instant(0.0), 2).unwrap()
    }

    fn n(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn end_node_alone_reports_itself() {
        let q = snapshot_query();
        let r = lrsq(&q, 0.0, &[at_dist(7, 30.0, 1.0)], &[]).unwrap();
        assert_eq!(r.ids(), n(&[7]));
        let outside = lrsq(&q, 0.0, &[at_dist(7, 130.0, 1.0)], &[]).unwrap();
        assert!(outside.is_empty());
    }

    #[test]
    fn dominated_self_is_excluded() {
        let q = snapshot_query();
        let a = Entry::always(at_dist(1, 10.0, 1.0), q.window);
        let r = lrsq(&q, 0.0, &[at_dist(2, 20.0, 2.0)], &[vec![a]]).unwrap();
        assert_eq!(r.ids(), n(&[1]));
    }

    #[test]
    fn running_example_local_and_global() {
        let q = snapshot_query();
        let s1 = at_dist(1, 10.0, 9.0);
        let s2 = at_dist(2, 50.0, 8.0);
        let s3 = at_dist(3, 80.0, 2.0);
        let s4 = at_dist(4, 40.0, 5.0);
        let s5 = at_dist(5, 60.0, 1.0);
        let w = q.window;
        let from_s3 = vec![Entry::always(s3.clone(), w)];
        let from_s5 = vec![Entry::always(s5.clone(), w)];
        let l4 = lrsq(&q, 0.0, &[s4.clone()], &[from_s3, from_s5]).unwrap();
        assert_eq!(l4.ids(), n(&[4, 5]));
        let l1 = lrsq(&q, 0.0, &[s1.clone()], &[vec![Entry::always(s2.clone(), w)]]).unwrap();
        assert_eq!(l1.ids(), n(&[1, 2]));
        let g = grsq_collect(&q, &q.motion, 0.0, &[l1.entries, l4.entries]).unwrap();
        assert_eq!(g.at(0.0).unwrap(), &n(&[1, 4, 5])[..]);
    }

    #[test]
    fn grsq_matches_merge_prune() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = snapshot_query();
        let snap = QuerySnapshot::new(Vec2::ZERO, 100.0).unwrap();
        for _ in 0..200 {
            let parts: Vec<Vec<DataObject>> = (0..rng.gen_range(1..4))
                .map(|_| {
                    let objs: Vec<DataObject> = (0..rng.gen_range(0..6))
                        .map(|_| {
                            let id = rng.gen_range(0..12);
                            DataObject::stationary(
                                NodeId(id),
                                Vec2::new(id as f64 * 9.0, 0.0),
                                AttributeVector::minimize(vec![(id * 7 % 5) as f64, (id % 3) as f64]).unwrap(),
                            )
                        })
                        .collect();
                    crate::skyline::point_skyline(&snap, &crate::skyline::dedup_latest(&objs)).unwrap()
                })
                .collect();
            let entries: Vec<Vec<Entry>> =
                parts.iter().map(|p| p.iter().map(|o| Entry::always(o.clone(), q.window)).collect()).collect();
            let g = grsq_collect(&q, &q.motion, 0.0, &entries).unwrap();
            let want = ids(&merge_prune(&snap, &parts).unwrap());
            assert_eq!(g.at(0.0).unwrap(), &want[..]);
        }
    }

    #[test]
    fn merge_keeps_newest_and_pools_same_age() {
        let w = Window::new(0.0, 10.0).unwrap();
        let mut old = at_dist(1, 10.0, 1.0);
        old.observed_at = 0.0;
        let mut new = at_dist(1, 12.0, 1.0);
        new.observed_at = 2.0;
        let c = merge_candidates(
            w,
            &[],
            &[Entry::new(old.clone(), vec![(0.0, 3.0)]), Entry::new(new.clone(), vec![(4.0, 5.0)])],
        );
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].object, new);
        let c = merge_candidates(w, &[], &[Entry::new(old.clone(), vec![(0.0, 3.0)]), Entry::new(old, vec![(2.0, 6.0)])]);
        assert_eq!(c[0].validity, vec![(0.0, 6.0)]);
    }

    #[test]
    fn clipped_drops_past_pieces() {
        let w = Window::new(0.0, 10.0).unwrap();
        let r = LocalResult {
            entries: vec![
                Entry::new(at_dist(1, 1.0, 1.0), vec![(0.0, 4.0)]),
                Entry::new(at_dist(2, 2.0, 0.0), vec![(0.0, 2.0), (6.0, 10.0)]),
            ],
        };
        let c = r.clipped(Window::new(4.0, 10.0).unwrap());
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.entries[0].validity, vec![(6.0, 10.0)]);
        assert_eq!(r.clipped(w), r);
    }
}
