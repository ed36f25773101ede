//! Centralized baseline: the issuer floods, every reached node ships its own
//! record back hop by hop without any pruning, and the issuer computes the
//! skyline itself. Continuous queries repeat this every report interval.

use std::collections::BTreeMap;
use std::rc::Rc;

use super::{collection_timeout, Entry, GlobalResult, QueryDescriptor, QueryOutcome};
use crate::netsim::{Event, EventKind, LinkModel, Message, MsgType, Net, Payload, Protocol};
use crate::skyline::{ids, range_skyline, DataObject, NodeId, QuerySnapshot};
use crate::timeline::Timeline;

#[derive(Debug, Clone, Copy, Default)]
struct Relay {
    round: Option<u32>,
    parent: Option<NodeId>,
}

pub struct Centralized {
    query: Rc<QueryDescriptor>,
    interval: f64,
    timeout: f64,
    reply_until: f64,
    relays: Vec<Relay>,
    round: u32,
    collected: BTreeMap<NodeId, DataObject>,
    current: Vec<NodeId>,
    effective: Timeline,
    first_done: bool,
    response_time: Option<f64>,
    accessed: u64,
}

impl Centralized {
    /// `query.ttl` is the flooding TTL; `interval` spaces collection rounds
    /// of a continuous query.
    pub fn new(query: QueryDescriptor, node_count: usize, link: &LinkModel, interval: f64) -> Self {
        let timeout = collection_timeout(link, query.ttl);
        Centralized {
            reply_until: query.window.start + timeout,
            query: Rc::new(query),
            interval,
            timeout,
            relays: vec![Relay::default(); node_count],
            round: 0,
            collected: BTreeMap::new(),
            current: Vec::new(),
            effective: Timeline::new(),
            first_done: false,
            response_time: None,
            accessed: 0,
        }
    }

    /// Number of collection rounds over the window.
    pub fn rounds(&self) -> u32 {
        if self.query.is_snapshot() {
            1
        } else {
            (self.query.window.len() / self.interval).ceil().max(1.0) as u32
        }
    }

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
            response_time: self.response_time.unwrap_or(self.timeout),
            accessed_objects: self.accessed,
            stats: net.stats,
        }
    }

    fn issuer(&self) -> NodeId {
        self.query.issuer
    }

    fn msg_type(&self, now: f64) -> MsgType {
        if now < self.reply_until {
            MsgType::Reply
        } else {
            MsgType::Update
        }
    }

    fn start_round(&mut self, net: &mut Net<'_>, round: u32) {
        self.round = round;
        self.collected.clear();
        let q = &self.query;
        let msg = Message {
            msg_type: MsgType::Query,
            src: q.issuer,
            dst: q.issuer,
            ttl: q.ttl,
            query_id: q.id,
            version: round,
            payload: Payload::Query(q.clone()),
        };
        net.broadcast(q.issuer, &msg);
        let at = net.now() + self.timeout;
        net.schedule(at, EventKind::Timer { node: q.issuer, tag: round });
    }

    fn skyline_now(&self, net: &Net<'_>) -> Vec<NodeId> {
        let snap = QuerySnapshot {
            position: net.world().position(self.issuer(), net.now()),
            range: self.query.range,
        };
        let objs: Vec<DataObject> = self.collected.values().cloned().collect();
        ids(&range_skyline(&snap, &objs).expect("uniform attributes"))
    }

    fn finish_round(&mut self, net: &mut Net<'_>, round: u32) {
        if round != self.round {
            return;
        }
        let now = net.now();
        let set = self.skyline_now(net);
        let q = &self.query;
        if q.is_snapshot() {
            self.current = set;
        } else if now <= q.window.end {
            let start = if self.first_done { now } else { q.window.start };
            self.effective.truncate_at(start);
            self.effective.push(start, q.window.end, set);
        }
        self.first_done = true;
    }

    fn on_query(&mut self, net: &mut Net<'_>, n: NodeId, from: NodeId, m: &Message) {
        if n == self.issuer() || self.relays[n.0 as usize].round == Some(m.version) {
            return;
        }
        self.relays[n.0 as usize] = Relay { round: Some(m.version), parent: Some(from) };
        if m.ttl > 0 {
            net.broadcast(n, &Message { ttl: m.ttl - 1, ..m.clone() });
        }
        let now = net.now();
        if let Some(attrs) = &net.world().node(n).attrs {
            let obj = DataObject {
                id: n,
                position: net.world().position(n, now),
                velocity: crate::geom::Vec2::ZERO,
                attrs: attrs.clone(),
                observed_at: now,
            };
            let msg = Message {
                msg_type: self.msg_type(now),
                src: n,
                dst: from,
                ttl: 0,
                query_id: m.query_id,
                version: m.version,
                payload: Payload::Object(Entry::new(obj, Vec::new())),
            };
            net.send(n, from, vec![msg]);
        }
    }

    fn on_objects(&mut self, net: &mut Net<'_>, n: NodeId, msgs: &[Message]) {
        if n == self.issuer() {
            self.accessed += msgs.len() as u64;
            for m in msgs {
                if let (Payload::Object(e), true) = (&m.payload, m.version == self.round) {
                    self.collected.insert(e.object.id, e.object.clone());
                }
            }
            if !self.first_done && net.now() <= self.reply_until {
                let set = self.skyline_now(net);
                if set != self.current || self.response_time.is_none() {
                    self.current = set;
                    self.response_time = Some(net.now() - self.query.window.start);
                }
            }
            return;
        }
        let relay = self.relays[n.0 as usize];
        let version = msgs[0].version;
        let (Some(parent), Some(round)) = (relay.parent, relay.round) else { return };
        if round != version {
            return;
        }
        let fwd: Vec<Message> = msgs.iter().map(|m| Message { src: n, dst: parent, ..m.clone() }).collect();
        net.send(n, parent, fwd);
    }
}

impl Protocol for Centralized {
    fn on_event(&mut self, net: &mut Net<'_>, ev: &Event) {
        match &ev.kind {
            EventKind::QueryIssue => {
                let start = self.query.window.start;
                for k in 1..self.rounds() {
                    net.schedule(start + k as f64 * self.interval, EventKind::PeriodicReport { round: k });
                }
                self.start_round(net, 0);
            }
            EventKind::PeriodicReport { round } => self.start_round(net, *round),
            EventKind::Timer { tag, .. } => self.finish_round(net, *tag),
            EventKind::Delivery { from, to, msgs } => {
                let (queries, objects): (Vec<&Message>, Vec<&Message>) =
                    msgs.iter().partition(|m| m.msg_type == MsgType::Query);
                for m in queries {
                    self.on_query(net, *to, *from, m);
                }
                if !objects.is_empty() {
                    let objects: Vec<Message> = objects.into_iter().cloned().collect();
                    self.on_objects(net, *to, &objects);
                }
            }
            _ => {}
        }
    }
}
