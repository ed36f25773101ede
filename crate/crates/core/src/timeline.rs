//! Range skylines of linearly moving objects over a time window.
//!
//! Between consecutive critical instants (range crossings, distance-order
//! swaps between comparable objects, validity endpoints) the skyline is
//! constant, so it is evaluated once per piece at the piece midpoint.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::kinematics::{quadratic_roots, safe_interval, MotionState, Window};
use crate::skyline::{dominates_at, non_spatial_dominates, DataObject, NodeId};

/// Closed time interval `(start, end)`.
pub type Interval = (f64, f64);

/// An object that may take part in the skyline while one of its validity
/// intervals covers the instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub object: DataObject,
    pub validity: Vec<Interval>,
}

impl Candidate {
    pub fn new(object: DataObject, validity: Vec<Interval>) -> Self {
        Candidate { object, validity }
    }

    pub fn always(object: DataObject, window: Window) -> Self {
        Candidate::new(object, vec![(window.start, window.end)])
    }

    pub fn motion(&self) -> MotionState {
        MotionState::from(&self.object)
    }

    pub fn active(&self, t: f64) -> bool {
        self.validity.iter().any(|&(a, b)| a <= t && t <= b)
    }
}

/// A maximal stretch during which the result set is constant. Segments are
/// half-open `[start, end)` except that the final one includes its end.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub ids: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub segments: Vec<Segment>,
}

impl Timeline {
    pub fn new() -> Self {
        Timeline::default()
    }

    pub fn single(start: f64, end: f64, ids: Vec<NodeId>) -> Self {
        let mut t = Timeline::new();
        t.push(start, end, ids);
        t
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Appends a segment, merging it into the last one when the sets agree.
    pub fn push(&mut self, start: f64, end: f64, ids: Vec<NodeId>) {
        if let Some(last) = self.segments.last_mut() {
            if last.ids == ids && last.end == start {
                last.end = end;
                return;
            }
        }
        self.segments.push(Segment { start, end, ids });
    }

    pub fn start(&self) -> Option<f64> {
        self.segments.first().map(|s| s.start)
    }

    pub fn end(&self) -> Option<f64> {
        self.segments.last().map(|s| s.end)
    }

    /// The set in force at `t`, if `t` is covered.
    pub fn at(&self, t: f64) -> Option<&[NodeId]> {
        let last = self.segments.len().checked_sub(1)?;
        let i = self.segments.partition_point(|s| s.end <= t);
        if i <= last && self.segments[i].start <= t {
            return Some(&self.segments[i].ids);
        }
        let s = &self.segments[last];
        (s.end == t).then_some(&s.ids[..])
    }

    /// Drops everything from `t` on.
    pub fn truncate_at(&mut self, t: f64) {
        self.segments.retain(|s| s.start < t);
        if let Some(last) = self.segments.last_mut() {
            if last.end > t {
                last.end = t;
            }
        }
    }

    /// Appends `other`, which must start where this timeline ends.
    pub fn extend(&mut self, other: Timeline) {
        for s in other.segments {
            self.push(s.start, s.end, s.ids);
        }
    }

    /// Segment boundaries, including both ends.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().map(|s| s.start).collect();
        if let Some(e) = self.end() {
            v.push(e);
        }
        v
    }
}

/// Skyline at instant `t` of the candidates active at `t` and within `range`
/// of the center. Ids sorted.
pub fn skyline_at(center: &MotionState, range: f64, t: f64, cands: &[Candidate]) -> Result<Vec<NodeId>> {
    let c = center.at(t);
    let live: Vec<(f64, &Candidate)> = cands
        .iter()
        .filter(|k| k.active(t))
        .map(|k| (k.motion().at(t).dist(c), k))
        .filter(|(d, _)| *d <= range)
        .collect();
    let mut out = Vec::new();
    'cand: for (i, (di, ki)) in live.iter().enumerate() {
        for (j, (dj, kj)) in live.iter().enumerate() {
            if i != j && dominates_at(*dj, &kj.object.attrs, *di, &ki.object.attrs)? {
                continue 'cand;
            }
        }
        out.push(ki.object.id);
    }
    out.sort();
    Ok(out)
}

/// Instants in `(lo, hi)` where two objects are equidistant from the center.
fn equal_distance_roots(center: &MotionState, a: &MotionState, b: &MotionState) -> Vec<f64> {
    // Reference the latest leg start so the roots only depend on the motions.
    let r = center.valid_from.max(a.valid_from).max(b.valid_from);
    let (ua, ub) = (a.at(r) - center.at(r), b.at(r) - center.at(r));
    let (wa, wb) = (a.velocity - center.velocity, b.velocity - center.velocity);
    let qa = wa.norm_sq() - wb.norm_sq();
    let qb = 2.0 * (ua.dot(wa) - ub.dot(wb));
    let qc = ua.norm_sq() - ub.norm_sq();
    if qa == 0.0 && qb == 0.0 {
        return Vec::new();
    }
    quadratic_roots(qa, qb, qc).into_iter().map(|x| r + x).collect()
}

/// Critical instants strictly inside the window.
fn breakpoints(center: &MotionState, range: f64, window: Window, cands: &[Candidate]) -> Result<Vec<f64>> {
    let inside = |t: f64| t > window.start && t < window.end;
    let mut pts = Vec::new();
    for k in cands {
        for &(a, b) in &k.validity {
            pts.extend([a, b].into_iter().filter(|&t| inside(t)));
        }
        let m = k.motion();
        let r = center.valid_from.max(m.valid_from);
        if let crate::kinematics::SafeInterval::Span { enter, leave } = safe_interval(center, &m, range, r)? {
            pts.extend([enter, leave].into_iter().filter(|&t| inside(t)));
        }
    }
    for (i, a) in cands.iter().enumerate() {
        for b in &cands[i + 1..] {
            let ab = non_spatial_dominates(&a.object.attrs, &b.object.attrs)?;
            let ba = non_spatial_dominates(&b.object.attrs, &a.object.attrs)?;
            if ab || ba {
                let roots = equal_distance_roots(center, &a.motion(), &b.motion());
                pts.extend(roots.into_iter().filter(|&t| inside(t)));
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// Range-skyline timeline of moving candidates over `window`, with the query
/// center moving linearly. An instant window yields one degenerate segment.
pub fn skyline_timeline(
    center: &MotionState,
    range: f64,
    window: Window,
    cands: &[Candidate],
) -> Result<Timeline> {
    let mut out = Timeline::new();
    if window.is_instant() {
        out.push(window.start, window.end, skyline_at(center, range, window.start, cands)?);
        return Ok(out);
    }
    let mut cuts = vec![window.start];
    cuts.extend(breakpoints(center, range, window, cands)?);
    cuts.push(window.end);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        out.push(w[0], w[1], skyline_at(center, range, mid, cands)?);
    }
    Ok(out)
}

/// Per-object membership intervals of a timeline, adjacent pieces merged.
pub fn membership(timeline: &Timeline) -> BTreeMap<NodeId, Vec<Interval>> {
    let mut out: BTreeMap<NodeId, Vec<Interval>> = BTreeMap::new();
    for s in &timeline.segments {
        for id in &s.ids {
            let v = out.entry(*id).or_default();
            match v.last_mut() {
                Some(last) if last.1 == s.start => last.1 = s.end,
                _ => v.push((s.start, s.end)),
            }
        }
    }
    out
}

/// Sorted union of closed intervals.
pub fn union_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Intersection of each interval with `window`, empties dropped.
pub fn clip_intervals(v: &[Interval], window: Window) -> Vec<Interval> {
    v.iter()
        .map(|&(a, b)| (a.max(window.start), b.min(window.end)))
        .filter(|(a, b)| a <= b)
        .collect()
}
