use crate::netsim::World;
use crate::protocols::QueryDescriptor;
use crate::skyline::{ids, range_skyline, DataObject, NodeId, QuerySnapshot};
use crate::timeline::{skyline_timeline, Candidate, Timeline};
use crate::kinematics::Window;

/// Ground-truth answer over the query window, computed from every node's
/// true trajectory. Within each stretch where no node changes leg all motion
/// is linear, so the exact timeline of each stretch is concatenated.
pub fn oracle_timeline(world: &World, q: &QueryDescriptor) -> Timeline {
    let w = q.window;
    if w.is_instant() {
        let snap = QuerySnapshot { position: world.position(q.issuer, w.start), range: q.range };
        let objs: Vec<DataObject> = world
            .sensors()
            .filter_map(|s| world.data_object(s, w.start))
            .map(|mut o| {
                o.position = world.position(o.id, w.start);
                o
            })
            .collect();
        let set = ids(&range_skyline(&snap, &objs).expect("uniform attributes"));
        return Timeline::single(w.start, w.end, set);
    }
    let mut cuts: Vec<f64> = world
        .ids()
        .flat_map(|i| world.node(i).trajectory.breakpoints(w.start, w.end).collect::<Vec<_>>())
        .collect();
    cuts.push(w.start);
    cuts.push(w.end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Timeline::new();
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let mid = 0.5 * (a + b);
        let window = Window { start: a, end: b };
        let cands: Vec<Candidate> = world
            .sensors()
            .filter_map(|s| world.data_object(s, mid))
            .map(|o| Candidate::always(o, window))
            .collect();
        let center = world.motion(q.issuer, mid);
        let tl = skyline_timeline(&center, q.range, window, &cands).expect("uniform attributes");
        out.extend(tl);
    }
    out
}

fn instant_scores(result: &[NodeId], oracle: &[NodeId]) -> (f64, f64) {
    let hit = result.iter().filter(|x| oracle.contains(x)).count() as f64;
    let precision = match (result.is_empty(), oracle.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hit / result.len() as f64,
    };
    let recall = if oracle.is_empty() { 1.0 } else { hit / oracle.len() as f64 };
    (precision, recall)
}

/// Time-weighted precision and recall of `result` against `oracle` over
/// `window`. Instants the result does not cover count as an empty answer.
pub fn precision_recall(result: &Timeline, oracle: &Timeline, window: Window) -> (f64, f64) {
    let empty: &[NodeId] = &[];
    if window.is_instant() {
        let t = window.start;
        return instant_scores(result.at(t).unwrap_or(empty), oracle.at(t).unwrap_or(empty));
    }
    let mut cuts: Vec<f64> = result
        .boundaries()
        .into_iter()
        .chain(oracle.boundaries())
        .filter(|&t| window.contains(t))
        .chain([window.start, window.end])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut p, mut r) = (0.0, 0.0);
    for piece in cuts.windows(2) {
        let len = piece[1] - piece[0];
        let mid = 0.5 * (piece[0] + piece[1]);
        let (ip, ir) = instant_scores(result.at(mid).unwrap_or(empty), oracle.at(mid).unwrap_or(empty));
        p += ip * len;
        r += ir * len;
    }
    (p / window.len(), r / window.len())
}

/// Whether two timelines give the same set at every instant of `window`.
pub fn timelines_agree(a: &Timeline, b: &Timeline, window: Window) -> bool {
    let empty: &[NodeId] = &[];
    if window.is_instant() {
        return a.at(window.start).unwrap_or(empty) == b.at(window.start).unwrap_or(empty);
    }
    let mut cuts: Vec<f64> = a.boundaries().into_iter().chain(b.boundaries()).filter(|&t| window.contains(t)).collect();
    cuts.extend([window.start, window.end]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).all(|p| {
        let mid = 0.5 * (p[0] + p[1]);
        a.at(mid).unwrap_or(empty) == b.at(mid).unwrap_or(empty)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::kinematics::{Area, MotionState, Trajectory};
    use crate::netsim::Node;
    use crate::skyline::AttributeVector;

    fn n(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn scores() {
        let w = Window::new(0.0, 10.0).unwrap();
        let oracle = Timeline::single(0.0, 10.0, n(&[1, 2]));
        assert_eq!(precision_recall(&oracle, &oracle, w), (1.0, 1.0));
        let empty = Timeline::single(0.0, 10.0, vec![]);
        assert_eq!(precision_recall(&empty, &oracle, w), (0.0, 0.0));
        let mut half = Timeline::new();
        half.push(0.0, 5.0, n(&[1, 2]));
        half.push(5.0, 10.0, vec![]);
        assert_eq!(precision_recall(&half, &oracle, w), (0.5, 0.5));
        assert_eq!(precision_recall(&empty, &empty, w), (1.0, 1.0));
        let i = Window::instant(3.0);
        assert_eq!(
            precision_recall(&Timeline::single(3.0, 3.0, n(&[1, 3])), &Timeline::single(3.0, 3.0, n(&[1])), i),
            (0.5, 1.0)
        );
    }

    /// Two objects that each leave the disk in turn while a third enters
    /// from afar, with one leg change in the middle.
    #[test]
    fn moving_world_three_pieces() {
        let attrs = |v: f64| Some(AttributeVector::minimize(vec![v]).unwrap());
        let nodes = vec![
            // s1: stationary, close, poor attribute.
            Node { trajectory: Trajectory::stationary(Vec2::new(10.0, 0.0)), attrs: attrs(9.0) },
            // s4: leaves the range at t=2.
            Node {
                trajectory: Trajectory::from_legs(vec![MotionState::new(Vec2::new(80.0, 0.0), Vec2::new(10.0, 0.0), 0.0)]).unwrap(),
                attrs: attrs(5.0),
            },
            // s8: enters at t=2 and dominates s1 once closer than 10 m.
            Node {
                trajectory: Trajectory::from_legs(vec![
                    MotionState::new(Vec2::new(0.0, 120.0), Vec2::new(0.0, -10.0), 0.0),
                    MotionState::new(Vec2::new(0.0, 100.0), Vec2::new(0.0, -20.0), 2.0),
                ])
                .unwrap(),
                attrs: attrs(1.0),
            },
            // The query node at the origin.
            Node { trajectory: Trajectory::stationary(Vec2::ZERO), attrs: None },
        ];
        let world = World::new(Area::new(500.0, 500.0), nodes);
        let q = QueryDescriptor::new(0, NodeId(3), MotionState::stationary(Vec2::ZERO), 100.0, Window::new(0.0, 7.0).unwrap(), 2).unwrap();
        let tl = oracle_timeline(&world, &q);
        let sets: Vec<Vec<NodeId>> = tl.segments.iter().map(|s| s.ids.clone()).collect();
        assert_eq!(sets, vec![n(&[0, 1]), n(&[0, 2]), n(&[2])]);
        assert_eq!(tl.boundaries(), vec![0.0, 2.0, 6.5, 7.0]);
        // Dense sampling agrees.
        let mut t = 0.01;
        while t < 7.0 {
            let snap = QuerySnapshot { position: Vec2::ZERO, range: 100.0 };
            let objs: Vec<DataObject> = world.sensors().map(|s| {
                let mut o = world.data_object(s, t).unwrap();
                o.position = world.position(s, t);
                o
            }).collect();
            assert_eq!(tl.at(t).unwrap(), &ids(&range_skyline(&snap, &objs).unwrap())[..], "t={t}");
            t += 0.01;
        }
    }
}
