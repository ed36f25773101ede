//! Discrete-event simulation of a multi-hop wireless network.

mod engine;
mod flood;
mod message;

pub use engine::{Event, EventKind, Net, Protocol, Stats};
pub use flood::flood;
pub use message::{Message, MsgType, Payload};

use crate::geom::Vec2;
use crate::kinematics::{Area, MotionState, Trajectory};
use crate::skyline::{AttributeVector, DataObject, NodeId};

/// Radio and delay parameters shared by every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    /// Transmission range in meters; the region is a closed disk.
    pub range: f64,
    pub delivery_prob: f64,
    /// Bits per second.
    pub bandwidth: f64,
    /// Bits per packet.
    pub packet_size: f64,
    /// Seconds added to every hop on top of serialization.
    pub hop_latency: f64,
}

impl Default for LinkModel {
    fn default() -> Self {
        LinkModel {
            range: 75.0,
            delivery_prob: 1.0,
            bandwidth: 2e6,
            packet_size: 1024.0,
            hop_latency: 1e-3,
        }
    }
}

impl LinkModel {
    pub fn tx_time(&self) -> f64 {
        self.packet_size / self.bandwidth
    }

    /// Delay of a burst of `packets` back-to-back packets over one hop.
    pub fn burst_delay(&self, packets: usize) -> f64 {
        packets as f64 * self.tx_time() + self.hop_latency
    }
}

/// One simulated node. Query issuers carry no sensed data.
#[derive(Debug, Clone)]
pub struct Node {
    pub trajectory: Trajectory,
    pub attrs: Option<AttributeVector>,
}

/// Ground truth for a run: every node's full trajectory and sensed data.
#[derive(Debug, Clone)]
pub struct World {
    pub area: Area,
    pub nodes: Vec<Node>,
}

impl World {
    pub fn new(area: Area, nodes: Vec<Node>) -> Self {
        World { area, nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn sensors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ids().filter(|&i| self.node(i).attrs.is_some())
    }

    pub fn motion(&self, id: NodeId, t: f64) -> MotionState {
        self.node(id).trajectory.state_at(t)
    }

    pub fn position(&self, id: NodeId, t: f64) -> Vec2 {
        self.node(id).trajectory.position_at(t)
    }

    /// The node's record as of the leg in force at `t`. The record is
    /// anchored at the leg start, so it is identical for every `t` on a leg.
    pub fn data_object(&self, id: NodeId, t: f64) -> Option<DataObject> {
        let attrs = self.node(id).attrs.clone()?;
        let m = self.motion(id, t);
        Some(DataObject {
            id,
            position: m.position,
            velocity: m.velocity,
            attrs,
            observed_at: m.valid_from,
        })
    }
}

/// All nodes within `range` of `id` at `t` (closed disk), by direct scan.
pub fn neighbor_scan(world: &World, id: NodeId, t: f64, range: f64) -> Vec<NodeId> {
    let p = world.position(id, t);
    world
        .ids()
        .filter(|&j| j != id && world.position(j, t).dist(p) <= range)
        .collect()
}
