//! Distributed range-skyline query processing over simulated mobile sensor
//! networks.

pub mod analysis;
pub mod error;
pub mod geom;
pub mod harness;
pub mod kinematics;
pub mod netsim;
pub mod protocols;
pub mod skyline;
pub mod timeline;

pub use error::{Error, Result};
pub use geom::Vec2;
