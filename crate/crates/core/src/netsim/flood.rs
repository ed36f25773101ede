use std::collections::BTreeMap;
use std::rc::Rc;

use super::engine::{Event, EventKind, Net, Protocol};
use super::message::{Message, MsgType, Payload};
use super::{LinkModel, World};
use crate::kinematics::{MotionState, Window};
use crate::protocols::QueryDescriptor;
use crate::skyline::NodeId;

struct Flooding {
    origin: NodeId,
    parents: BTreeMap<NodeId, NodeId>,
}

impl Protocol for Flooding {
    fn on_event(&mut self, net: &mut Net<'_>, ev: &Event) {
        let EventKind::Delivery { from, to, msgs } = &ev.kind else { return };
        for m in msgs {
            if *to == self.origin || self.parents.contains_key(to) {
                continue;
            }
            self.parents.insert(*to, *from);
            if m.ttl > 0 {
                let fwd = Message { ttl: m.ttl - 1, ..m.clone() };
                net.broadcast(*to, &fwd);
            }
        }
    }
}

/// TTL-limited flood from `origin` at time `at`. Every node forwards the
/// first copy it receives while hops remain. Returns each reached node with
/// the neighbor it first heard the query from.
pub fn flood(world: &World, link: LinkModel, origin: NodeId, ttl: u32, at: f64, seed: u64) -> BTreeMap<NodeId, NodeId> {
    let mut net = Net::new(world, link, at, at + (ttl as f64 + 2.0) * link.burst_delay(1), seed);
    let q = QueryDescriptor {
        id: 0,
        version: 0,
        issuer: origin,
        motion: MotionState::stationary(world.position(origin, at)),
        range: link.range,
        window: Window::instant(at),
        ttl,
    };
    let msg = Message {
        msg_type: MsgType::Query,
        src: origin,
        dst: origin,
        ttl,
        query_id: 0,
        version: 0,
        payload: Payload::Query(Rc::new(q)),
    };
    net.broadcast(origin, &msg);
    let mut p = Flooding { origin, parents: BTreeMap::new() };
    net.run(&mut p);
    p.parents
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::kinematics::{Area, Trajectory};
    use crate::netsim::Node;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    fn world(points: &[(f64, f64)]) -> World {
        let nodes = points
            .iter()
            .map(|&(x, y)| Node { trajectory: Trajectory::stationary(Vec2::new(x, y)), attrs: None })
            .collect();
        World::new(Area::new(1000.0, 1000.0), nodes)
    }

    #[test]
    fn ttl_zero_reaches_one_hop() {
        let w = world(&[(0.0, 0.0), (50.0, 0.0), (100.0, 0.0)]);
        let got = flood(&w, LinkModel::default(), NodeId(0), 0, 0.0, 1);
        assert_eq!(got.keys().copied().collect::<Vec<_>>(), vec![NodeId(1)]);
    }

    #[test]
    fn line_of_four_with_ttl_two() {
        let w = world(&[(0.0, 0.0), (60.0, 0.0), (120.0, 0.0), (180.0, 0.0), (240.0, 0.0)]);
        let got = flood(&w, LinkModel::default(), NodeId(0), 2, 0.0, 1);
        assert_eq!(got.keys().copied().collect::<Vec<_>>(), vec![NodeId(1), NodeId(2), NodeId(3)]);
        assert_eq!(got[&NodeId(3)], NodeId(2));
    }

    #[test]
    fn matches_bfs_within_ttl_plus_one_hops() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..20 {
            let pts: Vec<(f64, f64)> = (0..40).map(|_| (rng.gen_range(0.0..400.0), rng.gen_range(0.0..400.0))).collect();
            let w = world(&pts);
            let ttl = trial % 4;
            let got = flood(&w, LinkModel::default(), NodeId(0), ttl, 0.0, 1);
            let mut hops = vec![u32::MAX; pts.len()];
            hops[0] = 0;
            let mut queue = VecDeque::from([0usize]);
            while let Some(i) = queue.pop_front() {
                for j in 0..pts.len() {
                    let d = Vec2::new(pts[i].0, pts[i].1).dist(Vec2::new(pts[j].0, pts[j].1));
                    if hops[j] == u32::MAX && d <= 75.0 {
                        hops[j] = hops[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
            let want: Vec<NodeId> =
                (1..pts.len()).filter(|&j| hops[j] <= ttl + 1).map(|j| NodeId(j as u32)).collect();
            assert_eq!(got.keys().copied().collect::<Vec<_>>(), want);
        }
    }
}
