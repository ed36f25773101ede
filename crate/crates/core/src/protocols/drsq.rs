//! Distributed range-skyline processing, snapshot (DRSQ) and continuous
//! (DCRSQ).
//!
//! Every node reached by the query keeps a reverse-path parent, merges the
//! reports of the nodes that chose it as parent with its own one-hop
//! knowledge, and forwards its local result upstream whenever it changes.
//! A node waits for its subtree until a hop-scaled deadline before the first
//! send. For continuous queries, local results carry per-object validity
//! intervals predicted from the current legs, so a node only has to speak
//! again when a leg changes or a neighbor enters or leaves its radio range.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;

use super::{collection_timeout, grsq_collect, hop_budget, lrsq, Entry, GlobalResult, LocalResult, QueryDescriptor, QueryOutcome};
use crate::netsim::{Event, EventKind, Message, MsgType, Net, Payload, Protocol};
use crate::skyline::{DataObject, NodeId};
use crate::timeline::Timeline;

const TAG_COLLECT: u32 = 0;
const TAG_BATCH: u32 = 1;
const TAG_DEADLINE: u32 = 2;
const TAG_REFLOOD: u32 = 3;

/// Minimum spacing between two recomputations of the issuer's timeline.
pub const BATCH_INTERVAL: f64 = 0.1;

#[derive(Debug, Clone, Default)]
struct NodeState {
    holder: bool,
    version: u32,
    parent: Option<NodeId>,
    hops: u32,
    armed: bool,
    children: BTreeMap<NodeId, Vec<Entry>>,
    last_sent: Option<LocalResult>,
}

pub struct Drsq {
    query: Rc<QueryDescriptor>,
    nodes: Vec<NodeState>,
    reply_until: f64,
    // Issuer side.
    reports: BTreeMap<NodeId, (u32, Vec<Entry>)>,
    current: Vec<NodeId>,
    effective: Timeline,
    collected: bool,
    last_batch: f64,
    batch_pending: bool,
    response_time: Option<f64>,
    accessed: u64,
    expired: bool,
}

impl Drsq {
    pub fn new(query: QueryDescriptor, node_count: usize, link: &crate::netsim::LinkModel) -> Self {
        let reply_until = query.window.start + collection_timeout(link, query.ttl);
        Drsq {
            query: Rc::new(query),
            nodes: vec![NodeState::default(); node_count],
            reply_until,
            reports: BTreeMap::new(),
            current: Vec::new(),
            effective: Timeline::new(),
            collected: false,
            last_batch: f64::NEG_INFINITY,
            batch_pending: false,
            response_time: None,
            accessed: 0,
            expired: false,
        }
    }

    fn issuer(&self) -> NodeId {
        self.query.issuer
    }

    fn continuous(&self) -> bool {
        !self.query.is_snapshot()
    }

    fn st(&mut self, n: NodeId) -> &mut NodeState {
        &mut self.nodes[n.0 as usize]
    }

    /// Result so far; complete after the run.
    pub fn outcome(&self, net: &Net<'_>) -> QueryOutcome {
        let q = &self.query;
        let timeline = if q.is_snapshot() {
            Timeline::single(q.window.start, q.window.end, self.current.clone())
        } else {
            self.effective.clone()
        };
        QueryOutcome {
            result: GlobalResult {
                query_id: q.id,
                timeline,
                low_confidence: self.response_time.is_none(),
            },
            response_time: self.response_time.unwrap_or(self.reply_until - q.window.start),
            accessed_objects: self.accessed,
            stats: net.stats,
        }
    }

    fn msg_type(&self, now: f64) -> MsgType {
        if now < self.reply_until {
            MsgType::Reply
        } else {
            MsgType::Update
        }
    }

    fn flood(&self, net: &mut Net<'_>) {
        let q = &self.query;
        let msg = Message {
            msg_type: MsgType::Query,
            src: q.issuer,
            dst: q.issuer,
            ttl: q.ttl,
            query_id: q.id,
            version: q.version,
            payload: Payload::Query(self.query.clone()),
        };
        net.broadcast(q.issuer, &msg);
    }

    fn own_ground_set(&self, net: &Net<'_>, n: NodeId) -> Vec<DataObject> {
        let world = net.world();
        let mut out = Vec::new();
        for id in std::iter::once(n).chain(net.neighbors(n).iter().copied()) {
            if let Some(attrs) = &world.node(id).attrs {
                let m = net.motion(id);
                out.push(DataObject {
                    id,
                    position: m.position,
                    velocity: m.velocity,
                    attrs: attrs.clone(),
                    observed_at: m.valid_from,
                });
            }
        }
        out
    }

    /// Recomputes `n`'s local result and sends it upstream if it differs
    /// from what the parent last got.
    fn refresh(&mut self, net: &mut Net<'_>, n: NodeId) {
        let now = net.now();
        let st = &self.nodes[n.0 as usize];
        if self.expired || !self.is_current_holder(n) || !st.armed || n == self.issuer() {
            return;
        }
        let Some(parent) = st.parent else { return };
        let Some(window) = self.query.eval_window(now) else { return };
        let own = self.own_ground_set(net, n);
        let received: Vec<Vec<Entry>> = st.children.values().cloned().collect();
        let local = lrsq(&self.query, now, &own, &received).expect("uniform attributes");
        let prev = st.last_sent.as_ref().map(|r| r.clipped(window));
        if prev.as_ref() == Some(&local) {
            return;
        }
        let had_objects = prev.as_ref().is_some_and(|p| !p.is_empty());
        if local.is_empty() && !had_objects {
            self.st(n).last_sent = Some(local);
            return;
        }
        let (msg_type, q) = (self.msg_type(now), &self.query);
        let base = Message {
            msg_type,
            src: n,
            dst: parent,
            ttl: 0,
            query_id: q.id,
            version: q.version,
            payload: Payload::Retract,
        };
        let msgs: Vec<Message> = if local.is_empty() {
            vec![base]
        } else {
            local
                .entries
                .iter()
                .map(|e| Message { payload: Payload::Object(e.clone()), ..base.clone() })
                .collect()
        };
        net.send(n, parent, msgs);
        self.st(n).last_sent = Some(local);
    }

    /// Adopts the current query version at `n` with the given parent.
    fn join(&mut self, n: NodeId, parent: NodeId, hops: u32) {
        let version = self.query.version;
        let st = self.st(n);
        *st = NodeState {
            holder: true,
            version,
            parent: Some(parent),
            hops,
            ..NodeState::default()
        };
    }

    fn on_query(&mut self, net: &mut Net<'_>, n: NodeId, from: NodeId, m: &Message) {
        if n == self.issuer() || m.version != self.query.version {
            return;
        }
        let st = &self.nodes[n.0 as usize];
        if st.holder && st.version == m.version {
            return;
        }
        let hops = self.query.ttl - m.ttl + 1;
        self.join(n, from, hops);
        if m.ttl > 0 {
            let fwd = Message { ttl: m.ttl - 1, ..m.clone() };
            net.broadcast(n, &fwd);
        }
        let deadline = net.now() + 1.25 * m.ttl as f64 * hop_budget(net.link());
        net.schedule(deadline, EventKind::Timer { node: n, tag: TAG_DEADLINE | (m.version << 2) });
    }

    fn on_report(&mut self, net: &mut Net<'_>, n: NodeId, from: NodeId, msgs: &[Message]) {
        let version = msgs[0].version;
        let entries: Vec<Entry> = msgs
            .iter()
            .filter_map(|m| match &m.payload {
                Payload::Object(e) => Some(e.clone()),
                _ => None,
            })
            .collect();
        if n == self.issuer() {
            self.accessed += entries.len() as u64;
            if version != self.query.version {
                return;
            }
            self.reports.insert(from, (version, entries));
            self.issuer_update(net);
            return;
        }
        let st = self.st(n);
        if !st.holder || st.version != version {
            return;
        }
        st.children.insert(from, entries);
        self.refresh(net, n);
    }

    fn issuer_reports(&self) -> Vec<Vec<Entry>> {
        self.reports.values().map(|(_, e)| e.clone()).collect()
    }

    fn issuer_update(&mut self, net: &mut Net<'_>) {
        let now = net.now();
        if !self.collected {
            let center = net.motion(self.issuer());
            let tl = grsq_collect(&self.query, &center, now, &self.issuer_reports()).expect("uniform attributes");
            let ids = tl.at(tl.start().unwrap_or(now)).map(|s| s.to_vec()).unwrap_or_default();
            if ids != self.current || self.response_time.is_none() {
                self.current = ids;
                self.response_time = Some(now - self.query.window.start);
            }
            return;
        }
        if self.continuous() {
            self.request_batch(net);
        }
    }

    fn request_batch(&mut self, net: &mut Net<'_>) {
        if self.batch_pending || self.expired {
            return;
        }
        self.batch_pending = true;
        let at = net.now().max(self.last_batch + BATCH_INTERVAL);
        net.schedule(at, EventKind::Timer { node: self.issuer(), tag: TAG_BATCH });
    }

    fn batch(&mut self, net: &mut Net<'_>, backfill: bool) {
        let now = net.now();
        self.batch_pending = false;
        self.last_batch = now;
        if now > self.query.window.end {
            return;
        }
        let center = net.motion(self.issuer());
        let mut tl = grsq_collect(&self.query, &center, now, &self.issuer_reports()).expect("uniform attributes");
        if backfill {
            if let Some(first) = tl.segments.first_mut() {
                first.start = self.query.window.start;
            }
            self.effective = tl;
        } else {
            self.effective.truncate_at(now);
            self.effective.extend(tl);
        }
    }

    /// Nearest holder that can adopt `n` as a child without forming a loop.
    fn find_parent(&self, net: &Net<'_>, n: NodeId) -> Option<(NodeId, u32)> {
        let issuer = self.issuer();
        let mut best: Option<(u32, NodeId)> = None;
        for &h in net.neighbors(n) {
            let hops = if h == issuer {
                0
            } else if self.reaches_issuer(h, n) {
                self.nodes[h.0 as usize].hops
            } else {
                continue;
            };
            if best.is_none_or(|b| (hops, h) < b) {
                best = Some((hops, h));
            }
        }
        best.map(|(hops, h)| (h, hops + 1))
    }

    /// Follows parent pointers from `h`; false on a dead end or on meeting
    /// `avoid`.
    fn reaches_issuer(&self, mut h: NodeId, avoid: NodeId) -> bool {
        let version = self.query.version;
        for _ in 0..=self.nodes.len() {
            if h == self.issuer() {
                return true;
            }
            let st = &self.nodes[h.0 as usize];
            if h == avoid || !st.holder || st.version != version {
                return false;
            }
            match st.parent {
                Some(p) => h = p,
                None => return false,
            }
        }
        false
    }

    fn reparent(&mut self, net: &mut Net<'_>, n: NodeId) {
        match self.find_parent(net, n) {
            Some((p, hops)) => {
                let st = self.st(n);
                st.parent = Some(p);
                st.hops = hops;
                st.last_sent = None;
            }
            None => self.st(n).parent = None,
        }
    }

    fn is_current_holder(&self, n: NodeId) -> bool {
        let st = &self.nodes[n.0 as usize];
        st.holder && st.version == self.query.version
    }

    fn hops_of(&self, n: NodeId) -> Option<u32> {
        if n == self.issuer() {
            Some(0)
        } else if self.is_current_holder(n) {
            Some(self.nodes[n.0 as usize].hops)
        } else {
            None
        }
    }

    /// Hands the query to non-holders around `from`, breadth first, within
    /// the flood's hop reach. Message-free: it rides on neighbor discovery.
    fn spread(&mut self, net: &mut Net<'_>, from: NodeId) -> Vec<NodeId> {
        let limit = self.query.ttl + 1;
        let mut learned = Vec::new();
        let mut queue = VecDeque::from([from]);
        while let Some(h) = queue.pop_front() {
            let Some(hops) = self.hops_of(h) else { continue };
            if hops + 1 > limit {
                continue;
            }
            let nbrs: Vec<NodeId> = net.neighbors(h).iter().copied().collect();
            for x in nbrs {
                if x == self.issuer() || self.is_current_holder(x) {
                    continue;
                }
                self.join(x, h, hops + 1);
                self.st(x).armed = true;
                learned.push(x);
                queue.push_back(x);
            }
        }
        learned
    }

    fn on_link(&mut self, net: &mut Net<'_>, a: NodeId, b: NodeId) {
        let up = net.linked(a, b);
        let mut touched: BTreeSet<NodeId> = BTreeSet::new();
        if up {
            for (x, y) in [(a, b), (b, a)] {
                if self.is_current_holder(x) && x != self.issuer() && self.nodes[x.0 as usize].parent.is_none() {
                    self.reparent(net, x);
                }
                if self.hops_of(y).is_some() && !self.is_current_holder(x) && x != self.issuer() {
                    touched.extend(self.spread(net, y));
                }
            }
        } else {
            for (x, y) in [(a, b), (b, a)] {
                if !self.is_current_holder(x) {
                    continue;
                }
                // A departed child's last report stays: its predictions
                // hold until a fresher record of the same object arrives.
                if self.nodes[x.0 as usize].parent == Some(y) {
                    self.reparent(net, x);
                }
            }
        }
        touched.extend([a, b]);
        for n in touched {
            self.refresh(net, n);
        }
    }

    fn on_leg_change(&mut self, net: &mut Net<'_>, x: NodeId) {
        if x == self.issuer() {
            if net.now() < self.query.window.end {
                let mut q = (*self.query).clone();
                q.version += 1;
                q.motion = net.motion(x);
                self.query = Rc::new(q);
                self.flood(net);
                let at = net.now() + collection_timeout(net.link(), self.query.ttl);
                net.schedule(at, EventKind::Timer { node: x, tag: TAG_REFLOOD | (self.query.version << 2) });
                self.request_batch(net);
            }
            return;
        }
        let affected: Vec<NodeId> = std::iter::once(x).chain(net.neighbors(x).iter().copied()).collect();
        for n in affected {
            self.refresh(net, n);
        }
    }
}

impl Protocol for Drsq {
    fn on_event(&mut self, net: &mut Net<'_>, ev: &Event) {
        if self.expired {
            return;
        }
        match &ev.kind {
            EventKind::QueryIssue => {
                self.flood(net);
                let at = self.reply_until;
                net.schedule(at, EventKind::Timer { node: self.issuer(), tag: TAG_COLLECT });
            }
            EventKind::QueryExpire => {
                self.expired = true;
            }
            EventKind::Delivery { from, to, msgs } => {
                let (queries, reports): (Vec<&Message>, Vec<&Message>) =
                    msgs.iter().partition(|m| m.msg_type == MsgType::Query);
                for m in queries {
                    self.on_query(net, *to, *from, m);
                }
                if !reports.is_empty() {
                    let reports: Vec<Message> = reports.into_iter().cloned().collect();
                    self.on_report(net, *to, *from, &reports);
                }
            }
            EventKind::Timer { node, tag } => match tag & 3 {
                TAG_COLLECT => {
                    self.collected = true;
                    if self.continuous() {
                        self.batch(net, true);
                    }
                }
                TAG_BATCH => self.batch(net, false),
                TAG_DEADLINE => {
                    if self.nodes[node.0 as usize].version == tag >> 2 {
                        self.st(*node).armed = true;
                        self.refresh(net, *node);
                    }
                }
                _ => {
                    // Drop reports from before the issuer's last re-flood.
                    let v = tag >> 2;
                    if v == self.query.version {
                        self.reports.retain(|_, (rv, _)| *rv == v);
                        self.request_batch(net);
                    }
                }
            },
            EventKind::SafeTimeTrigger { a, b, .. } if self.continuous() => self.on_link(net, *a, *b),
            EventKind::WaypointArrival { node } if self.continuous() => self.on_leg_change(net, *node),
            _ => {}
        }
    }
}
