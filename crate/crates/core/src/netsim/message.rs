use std::fmt;
use std::rc::Rc;

use crate::protocols::{Entry, QueryDescriptor};
use crate::skyline::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgType {
    /// Query dissemination (`RSQ_TYPE`).
    Query,
    /// Result traffic inside the initial collection window (`RSQ_REPLY_TYPE`).
    Reply,
    /// Result traffic after the initial collection window.
    Update,
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MsgType::Query => "RSQ",
            MsgType::Reply => "RSQ_REPLY",
            MsgType::Update => "UPDATE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Query(Rc<QueryDescriptor>),
    Object(Entry),
    /// Announces that the sender's result became empty; carries no object.
    Retract,
}

/// One packet. A packet never carries more than one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub msg_type: MsgType,
    pub src: NodeId,
    pub dst: NodeId,
    pub ttl: u32,
    pub query_id: u32,
    /// Descriptor version (or collection round) the packet belongs to.
    pub version: u32,
    pub payload: Payload,
}

impl Message {
    pub fn object_id(&self) -> Option<NodeId> {
        match &self.payload {
            Payload::Object(e) => Some(e.object.id),
            _ => None,
        }
    }
}
