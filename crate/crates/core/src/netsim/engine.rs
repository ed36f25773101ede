use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::message::{Message, MsgType};
use super::{LinkModel, World};
use crate::kinematics::{quadratic_roots, MotionState};
use crate::skyline::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// The surviving packets of one burst arrive at `to`.
    Delivery { from: NodeId, to: NodeId, msgs: Vec<Message> },
    /// `node` reached a waypoint and started a new leg.
    WaypointArrival { node: NodeId },
    /// Start of a periodic collection round.
    PeriodicReport { round: u32 },
    /// Nodes `a` and `b` cross each other's transmission range boundary.
    SafeTimeTrigger { a: NodeId, b: NodeId, version: u64 },
    QueryIssue,
    QueryExpire,
    /// Protocol-private timer; `tag` is interpreted by the protocol.
    Timer { node: NodeId, tag: u32 },
}

impl EventKind {
    fn name(&self) -> &'static str {
        match self {
            EventKind::Delivery { .. } => "delivery",
            EventKind::WaypointArrival { .. } => "waypoint",
            EventKind::PeriodicReport { .. } => "report",
            EventKind::SafeTimeTrigger { .. } => "safe_time",
            EventKind::QueryIssue => "issue",
            EventKind::QueryExpire => "expire",
            EventKind::Timer { .. } => "timer",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then(o.seq.cmp(&self.seq))
    }
}

/// Packet accounting for one run. Every packet put on a link is either
/// delivered or lost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub flood: u64,
    pub reply: u64,
    pub update: u64,
}

impl Stats {
    fn count(&mut self, t: MsgType) {
        self.sent += 1;
        match t {
            MsgType::Query => self.flood += 1,
            MsgType::Reply => self.reply += 1,
            MsgType::Update => self.update += 1,
        }
    }
}

/// Reacts to events once the network has applied their effect on
/// neighbor tables and node motion.
pub trait Protocol {
    fn on_event(&mut self, net: &mut Net<'_>, ev: &Event);
}

/// Network state of one run: the clock, the event queue, oracle-maintained
/// neighbor tables and the loss generator.
pub struct Net<'w> {
    world: &'w World,
    link: LinkModel,
    now: f64,
    end: f64,
    queue: BinaryHeap<Event>,
    seq: u64,
    rng: ChaCha8Rng,
    adj: Vec<BTreeSet<NodeId>>,
    legs: Vec<MotionState>,
    pair_version: Vec<u64>,
    query_id: Option<u32>,
    pub stats: Stats,
    trace: Option<String>,
}

impl<'w> Net<'w> {
    /// Sets the world up at `start`. Events later than `end` never fire.
    pub fn new(world: &'w World, link: LinkModel, start: f64, end: f64, seed: u64) -> Self {
        let n = world.len();
        let legs: Vec<MotionState> = world.ids().map(|i| world.motion(i, start)).collect();
        let mut net = Net {
            world,
            link,
            now: start,
            end,
            queue: BinaryHeap::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            adj: vec![BTreeSet::new(); n],
            legs,
            pair_version: vec![0; n * n],
            query_id: None,
            stats: Stats::default(),
            trace: None,
        };
        for a in world.ids() {
            for b in world.ids().filter(|&b| b > a) {
                if net.legs[a.0 as usize].at(start).dist(net.legs[b.0 as usize].at(start)) <= link.range {
                    net.adj[a.0 as usize].insert(b);
                    net.adj[b.0 as usize].insert(a);
                }
                net.schedule_pair(a, b);
            }
            let arrival = world.node(a).trajectory.leg_end(world.node(a).trajectory.leg_index(start));
            net.schedule(arrival, EventKind::WaypointArrival { node: a });
        }
        net
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(String::new());
        self
    }

    pub fn set_query(&mut self, id: u32) {
        self.query_id = Some(id);
    }

    pub fn world(&self) -> &'w World {
        self.world
    }

    pub fn link(&self) -> &LinkModel {
        &self.link
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn neighbors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        &self.adj[id.0 as usize]
    }

    pub fn linked(&self, a: NodeId, b: NodeId) -> bool {
        self.adj[a.0 as usize].contains(&b)
    }

    /// Motion of `id` on its current leg.
    pub fn motion(&self, id: NodeId) -> MotionState {
        self.legs[id.0 as usize]
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) {
        if time > self.end || time.is_nan() {
            return;
        }
        self.seq += 1;
        self.queue.push(Event { time: time.max(self.now), seq: self.seq, kind });
    }

    /// Puts `msgs` on the link `from -> to` back to back. Each packet is lost
    /// independently; survivors arrive together after the burst delay. A
    /// missing link loses every packet.
    pub fn send(&mut self, from: NodeId, to: NodeId, msgs: Vec<Message>) {
        if msgs.is_empty() {
            return;
        }
        let up = self.linked(from, to);
        let delay = self.link.burst_delay(msgs.len());
        let mut arrived = Vec::with_capacity(msgs.len());
        for m in msgs {
            self.stats.count(m.msg_type);
            // Draw even on a dead link so the stream does not depend on topology.
            let ok = self.rng.gen::<f64>() < self.link.delivery_prob;
            if up && ok {
                self.stats.delivered += 1;
                arrived.push(m);
            } else {
                self.stats.lost += 1;
            }
        }
        if !arrived.is_empty() {
            let time = self.now + delay;
            self.schedule(time, EventKind::Delivery { from, to, msgs: arrived });
        }
    }

    /// Sends a copy of `msg` to every current neighbor.
    pub fn broadcast(&mut self, from: NodeId, msg: &Message) {
        let nbrs: Vec<NodeId> = self.neighbors(from).iter().copied().collect();
        for to in nbrs {
            let mut m = msg.clone();
            m.src = from;
            m.dst = to;
            self.send(from, to, vec![m]);
        }
    }

    fn pair_index(&self, a: NodeId, b: NodeId) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        lo.0 as usize * self.legs.len() + hi.0 as usize
    }

    /// First instant after now where the pair's distance crosses the radio
    /// range while both stay on their current legs.
    fn next_crossing(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (ma, mb) = (self.legs[a.0 as usize], self.legs[b.0 as usize]);
        let traj_a = &self.world.node(a).trajectory;
        let traj_b = &self.world.node(b).trajectory;
        let limit = traj_a
            .leg_end(traj_a.leg_index(self.now))
            .min(traj_b.leg_end(traj_b.leg_index(self.now)))
            .min(self.end);
        let r = ma.valid_from.max(mb.valid_from);
        let dp = mb.at(r) - ma.at(r);
        let dv = mb.velocity - ma.velocity;
        let a2 = dv.norm_sq();
        if a2 == 0.0 {
            return None;
        }
        let roots = quadratic_roots(a2, 2.0 * dp.dot(dv), dp.norm_sq() - self.link.range * self.link.range);
        roots.into_iter().map(|x| r + x).find(|&t| t > self.now && t <= limit)
    }

    fn schedule_pair(&mut self, a: NodeId, b: NodeId) {
        let idx = self.pair_index(a, b);
        self.pair_version[idx] += 1;
        let version = self.pair_version[idx];
        if let Some(t) = self.next_crossing(a, b) {
            self.schedule(t, EventKind::SafeTimeTrigger { a, b, version });
        }
    }

    /// Applies the network-level effect of `ev`. Returns false for stale
    /// events that must not reach the protocol.
    fn apply(&mut self, ev: &Event) -> bool {
        match &ev.kind {
            EventKind::WaypointArrival { node } => {
                let node = *node;
                let traj = &self.world.node(node).trajectory;
                let i = traj.leg_index(self.now);
                self.legs[node.0 as usize] = *traj.leg(i);
                let next = traj.leg_end(i);
                self.schedule(next, EventKind::WaypointArrival { node });
                for other in self.world.ids().filter(|&o| o != node) {
                    self.schedule_pair(node, other);
                }
                true
            }
            EventKind::SafeTimeTrigger { a, b, version } => {
                let (a, b) = (*a, *b);
                if self.pair_version[self.pair_index(a, b)] != *version {
                    return false;
                }
                let (ma, mb) = (self.legs[a.0 as usize], self.legs[b.0 as usize]);
                let dp = mb.at(self.now) - ma.at(self.now);
                let approach = dp.dot(mb.velocity - ma.velocity);
                let was = self.linked(a, b);
                let up = if approach < 0.0 {
                    true
                } else if approach > 0.0 {
                    false
                } else {
                    was
                };
                if up {
                    self.adj[a.0 as usize].insert(b);
                    self.adj[b.0 as usize].insert(a);
                } else {
                    self.adj[a.0 as usize].remove(&b);
                    self.adj[b.0 as usize].remove(&a);
                }
                self.schedule_pair(a, b);
                up != was
            }
            _ => true,
        }
    }

    fn record(&mut self, ev: &Event) {
        let Some(trace) = self.trace.as_mut() else { return };
        let q = self.query_id.map_or("-".to_string(), |q| q.to_string());
        let kind = ev.kind.name();
        let t = ev.time;
        match &ev.kind {
            EventKind::Delivery { from, to, msgs } => {
                for m in msgs {
                    let obj = m.object_id().map_or("-".to_string(), |o| o.to_string());
                    let _ = writeln!(
                        trace,
                        "{t:.9}\t{kind}\t{from}\t{to}\t{}\t{}\t{}\t{obj}",
                        m.msg_type, m.ttl, m.query_id
                    );
                }
            }
            EventKind::SafeTimeTrigger { a, b, .. } => {
                let _ = writeln!(trace, "{t:.9}\t{kind}\t{a}\t{b}\t-\t-\t{q}\t-");
            }
            EventKind::WaypointArrival { node } | EventKind::Timer { node, .. } => {
                let _ = writeln!(trace, "{t:.9}\t{kind}\t{node}\t-\t-\t-\t{q}\t-");
            }
            _ => {
                let _ = writeln!(trace, "{t:.9}\t{kind}\t-\t-\t-\t-\t{q}\t-");
            }
        }
    }

    /// Processes events in (time, sequence) order until the queue drains or
    /// the next event lies past the end time.
    pub fn run(&mut self, proto: &mut dyn Protocol) {
        self.run_until(proto, self.end);
    }

    /// Processes every event up to `until` and advances the clock there.
    pub fn run_until(&mut self, proto: &mut dyn Protocol, until: f64) {
        while let Some(ev) = self.queue.peek() {
            if ev.time > until {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            self.now = ev.time;
            if !self.apply(&ev) {
                continue;
            }
            self.record(&ev);
            proto.on_event(self, &ev);
        }
        self.now = self.now.max(until.min(self.end));
    }

    pub fn take_trace(&mut self) -> String {
        self.trace.take().unwrap_or_default()
    }
}
