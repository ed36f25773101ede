//! Multi-criteria dominance and skyline computation over snapshots of data
//! objects.
//!
//! An object is compared against another on its non-spatial attribute vector
//! and on its Euclidean distance to a query point. Dominance is strict Pareto
//! dominance over the combined `(distance, attributes)` vector: the dominator
//! must be no worse everywhere and strictly better somewhere, so two fully
//! equivalent objects never eject each other from a skyline.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{contract, Error, Result};
use crate::geom::Vec2;

/// Identity of a network node (and of the data object it senses).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Preference direction of one non-spatial attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Minimize,
    Maximize,
}

impl Direction {
    fn normalize(self, v: f64) -> f64 {
        match self {
            Direction::Minimize => v,
            Direction::Maximize => -v,
        }
    }
}

/// Non-spatial attributes of a data object together with the per-dimension
/// preference directions they are compared under.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeVector {
    values: Vec<f64>,
    directions: Vec<Direction>,
}

impl AttributeVector {
    /// Builds a vector where every dimension is minimized.
    pub fn minimize(values: Vec<f64>) -> Result<Self> {
        let directions = vec![Direction::Minimize; values.len()];
        Self::new(values, directions)
    }

    pub fn new(values: Vec<f64>, directions: Vec<Direction>) -> Result<Self> {
        if values.is_empty() {
            return Err(contract("attribute vector must have at least one dimension"));
        }
        if values.len() != directions.len() {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: directions.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(contract(format!("attribute value {v} is not finite")));
        }
        Ok(AttributeVector { values, directions })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_comparable(&self, other: &AttributeVector) -> Result<()> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimensionMismatch {
                left: self.values.len(),
                right: other.values.len(),
            });
        }
        if self.directions != other.directions {
            return Err(contract("attribute vectors use different preference directions"));
        }
        Ok(())
    }

    fn normalized(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.directions)
            .map(|(v, d)| d.normalize(*v))
    }
}

/// A mobile sensor node's record: where it was, how it was moving, and what
/// it sensed, as of `observed_at`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataObject {
    pub id: NodeId,
    pub position: Vec2,
    pub velocity: Vec2,
    pub attrs: AttributeVector,
    pub observed_at: f64,
}

impl DataObject {
    pub fn new(
        id: NodeId,
        position: Vec2,
        velocity: Vec2,
        attrs: AttributeVector,
        observed_at: f64,
    ) -> Result<Self> {
        if !(observed_at >= 0.0) {
            return Err(contract(format!("observed_at {observed_at} must be >= 0")));
        }
        if !position.is_finite() || !velocity.is_finite() {
            return Err(contract("position and velocity must be finite"));
        }
        Ok(DataObject {
            id,
            position,
            velocity,
            attrs,
            observed_at,
        })
    }

    /// A stationary object observed at time zero.
    pub fn stationary(id: NodeId, position: Vec2, attrs: AttributeVector) -> Self {
        DataObject {
            id,
            position,
            velocity: Vec2::ZERO,
            attrs,
            observed_at: 0.0,
        }
    }
}

/// The spatial half of a range-skyline query at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySnapshot {
    pub position: Vec2,
    pub range: f64,
}

impl QuerySnapshot {
    pub fn new(position: Vec2, range: f64) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(contract(format!("query range {range} must be positive")));
        }
        Ok(QuerySnapshot { position, range })
    }

    pub fn dist(&self, o: &DataObject) -> f64 {
        self.position.dist(o.position)
    }

    pub fn contains(&self, o: &DataObject) -> bool {
        self.dist(o) <= self.range
    }
}

/// `a` is no worse than `b` in every non-spatial attribute. Equal vectors
/// satisfy this; strictness is applied by [`dominates_wrt`].
pub fn non_spatial_dominates(a: &AttributeVector, b: &AttributeVector) -> Result<bool> {
    a.check_comparable(b)?;
    Ok(a.normalized().zip(b.normalized()).all(|(x, y)| x <= y))
}

/// Strict Pareto dominance of `a` over `b` with respect to the query point.
pub fn dominates_wrt(q: &QuerySnapshot, a: &DataObject, b: &DataObject) -> Result<bool> {
    dominates_at(q.dist(a), &a.attrs, q.dist(b), &b.attrs)
}

/// Dominance given precomputed distances.
pub(crate) fn dominates_at(
    dist_a: f64,
    a: &AttributeVector,
    dist_b: f64,
    b: &AttributeVector,
) -> Result<bool> {
    if !non_spatial_dominates(a, b)? || dist_a > dist_b {
        return Ok(false);
    }
    let strictly_better = dist_a < dist_b || a.normalized().zip(b.normalized()).any(|(x, y)| x < y);
    Ok(strictly_better)
}

fn check_uniform(objs: &[DataObject]) -> Result<()> {
    if let Some(first) = objs.first() {
        for o in &objs[1..] {
            first.attrs.check_comparable(&o.attrs)?;
        }
    }
    Ok(())
}

/// Objects not dominated by any other input object, in input order.
pub fn point_skyline(q: &QuerySnapshot, objs: &[DataObject]) -> Result<Vec<DataObject>> {
    check_uniform(objs)?;
    let dists: Vec<f64> = objs.iter().map(|o| q.dist(o)).collect();
    let mut out = Vec::new();
    'candidate: for (i, o) in objs.iter().enumerate() {
        for (j, other) in objs.iter().enumerate() {
            if i != j && dominates_at(dists[j], &other.attrs, dists[i], &o.attrs)? {
                continue 'candidate;
            }
        }
        out.push(o.clone());
    }
    Ok(out)
}

/// Skyline of the objects lying within the query range (closed disk).
pub fn range_skyline(q: &QuerySnapshot, objs: &[DataObject]) -> Result<Vec<DataObject>> {
    let in_range: Vec<DataObject> = objs.iter().filter(|o| q.contains(o)).cloned().collect();
    point_skyline(q, &in_range)
}

/// Collapses records sharing an id, keeping the most recently observed one
/// (the first seen wins a tie). Output is ordered by id.
pub fn dedup_latest<'a>(objs: impl IntoIterator<Item = &'a DataObject>) -> Vec<DataObject> {
    let mut by_id: BTreeMap<NodeId, &DataObject> = BTreeMap::new();
    for o in objs {
        match by_id.get(&o.id) {
            Some(prev) if prev.observed_at >= o.observed_at => {}
            _ => {
                by_id.insert(o.id, o);
            }
        }
    }
    by_id.into_values().cloned().collect()
}

/// Unions partial skylines, deduplicates by id and removes dominated objects.
pub fn merge_prune(q: &QuerySnapshot, partials: &[Vec<DataObject>]) -> Result<Vec<DataObject>> {
    let union = dedup_latest(partials.iter().flatten());
    point_skyline(q, &union)
}

/// Ids of a result set, sorted.
pub fn ids(objs: &[DataObject]) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = objs.iter().map(|o| o.id).collect();
    v.sort();
    v
}
