//! Linear motion, Random Way Point mobility and safe-time prediction.
//!
//! A node's motion between two waypoints is a [`MotionState`]: a reference
//! position, a constant velocity and the instant the reference was taken.
//! [`safe_interval`] solves for the window during which one linearly moving
//! node stays within distance `R` of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{contract, Result};
use crate::geom::Vec2;
use crate::skyline::DataObject;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub valid_from: f64,
}

impl MotionState {
    pub fn new(position: Vec2, velocity: Vec2, valid_from: f64) -> Self {
        MotionState {
            position,
            velocity,
            valid_from,
        }
    }

    pub fn stationary(position: Vec2) -> Self {
        MotionState::new(position, Vec2::ZERO, 0.0)
    }

    /// Extrapolates without checking `t >= valid_from`.
    pub(crate) fn at(&self, t: f64) -> Vec2 {
        self.position + self.velocity * (t - self.valid_from)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

impl From<&DataObject> for MotionState {
    fn from(o: &DataObject) -> Self {
        MotionState::new(o.position, o.velocity, o.observed_at)
    }
}

/// Position of `m` at time `t` under constant velocity.
pub fn position_at(m: &MotionState, t: f64) -> Result<Vec2> {
    if t < m.valid_from {
        return Err(contract(format!(
            "cannot extrapolate to t={t} before valid_from={}",
            m.valid_from
        )));
    }
    Ok(m.at(t))
}

/// The time window during which an object lies within a query's range.
///
/// `leave` is `f64::INFINITY` when the object never leaves. An object that is
/// already inside at the evaluation instant gets `enter == now`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SafeInterval {
    Empty,
    Span { enter: f64, leave: f64 },
}

impl SafeInterval {
    pub fn span(enter: f64, leave: f64) -> Self {
        if enter <= leave {
            SafeInterval::Span { enter, leave }
        } else {
            SafeInterval::Empty
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, SafeInterval::Empty)
    }

    pub fn enter(&self) -> Option<f64> {
        match self {
            SafeInterval::Span { enter, .. } => Some(*enter),
            SafeInterval::Empty => None,
        }
    }

    pub fn leave(&self) -> Option<f64> {
        match self {
            SafeInterval::Span { leave, .. } => Some(*leave),
            SafeInterval::Empty => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.leave() == Some(f64::INFINITY)
    }

    pub fn contains(&self, t: f64) -> bool {
        match self {
            SafeInterval::Span { enter, leave } => *enter <= t && t <= *leave,
            SafeInterval::Empty => false,
        }
    }
}

/// Real roots of `a t^2 + b t + c = 0`, ascending. Degenerate linear and
/// constant cases are handled; a zero polynomial has no isolated roots.
pub(crate) fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // Citardauq form avoids cancellation when b^2 >> 4ac.
    let k = -0.5 * (b + b.signum() * sq);
    if k == 0.0 {
        // b == 0 and disc == 0, so c == 0: double root at zero.
        return vec![0.0, 0.0];
    }
    let (r1, r2) = (k / a, c / k);
    if r1 <= r2 {
        vec![r1, r2]
    } else {
        vec![r2, r1]
    }
}

/// Window during which `s` stays within distance `range` of `q`, both moving
/// linearly from `now` on. Endpoints are absolute times; the window never
/// starts before `now`.
pub fn safe_interval(
    q: &MotionState,
    s: &MotionState,
    range: f64,
    now: f64,
) -> Result<SafeInterval> {
    if !(range > 0.0) {
        return Err(contract(format!("range {range} must be positive")));
    }
    if now < q.valid_from || now < s.valid_from {
        return Err(contract("motion states must be valid at the evaluation instant"));
    }
    let dp = s.at(now) - q.at(now);
    let dv = s.velocity - q.velocity;
    let a = dv.norm_sq();
    let b = 2.0 * dp.dot(dv);
    let c = dp.norm_sq() - range * range;
    if a == 0.0 {
        return Ok(if c <= 0.0 {
            SafeInterval::span(now, f64::INFINITY)
        } else {
            SafeInterval::Empty
        });
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Ok(SafeInterval::Empty);
    }
    let roots = quadratic_roots(a, b, c);
    let (t1, t2) = (roots[0], roots[1]);
    if t2 < 0.0 {
        return Ok(SafeInterval::Empty);
    }
    Ok(SafeInterval::span(now + t1.max(0.0), now + t2))
}

/// Closed observation window `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start <= end) {
            return Err(contract(format!("window start {start} after end {end}")));
        }
        Ok(Window { start, end })
    }

    pub fn instant(t: f64) -> Self {
        Window { start: t, end: t }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_instant(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Restricts a safe interval to the query's monitoring window.
pub fn monitoring_interval(si: SafeInterval, window: Window) -> SafeInterval {
    match si {
        SafeInterval::Empty => SafeInterval::Empty,
        SafeInterval::Span { enter, leave } => {
            SafeInterval::span(enter.max(window.start), leave.min(window.end))
        }
    }
}

/// Rectangular sensing area anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Self {
        Area { width, height }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        // Small slack absorbs rounding on segments ending at the border.
        const EPS: f64 = 1e-9;
        p.x >= -EPS && p.y >= -EPS && p.x <= self.width + EPS && p.y <= self.height + EPS
    }

    pub fn size(&self) -> f64 {
        self.width * self.height
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec2 {
        Vec2::new(rng.gen::<f64>() * self.width, rng.gen::<f64>() * self.height)
    }
}

/// Inclusive speed bounds; a zero minimum draws from `(0, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

impl SpeedRange {
    pub fn new(min: f64, max: f64) -> Self {
        SpeedRange { min, max }
    }

    pub fn fixed(speed: f64) -> Self {
        SpeedRange::new(speed, speed)
    }

    pub fn is_static(&self) -> bool {
        self.max == 0.0
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.gen();
        self.max - (self.max - self.min) * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    start: Vec2,
    target: Vec2,
    speed: f64,
    start_time: f64,
    end_time: f64,
}

impl Leg {
    fn new(start: Vec2, target: Vec2, speed: f64, start_time: f64) -> Self {
        let end_time = if speed > 0.0 {
            start_time + start.dist(target) / speed
        } else {
            f64::INFINITY
        };
        Leg {
            start,
            target,
            speed,
            start_time,
            end_time,
        }
    }

    fn motion(&self) -> MotionState {
        let len = self.start.dist(self.target);
        let velocity = if self.speed > 0.0 && len > 0.0 {
            (self.target - self.start) * (self.speed / len)
        } else {
            Vec2::ZERO
        };
        MotionState::new(self.start, velocity, self.start_time)
    }
}

/// Random Way Point plan with zero pause time. The plan owns its generator,
/// so advancing it is deterministic given the seed.
#[derive(Debug, Clone)]
pub struct WaypointPlan {
    area: Area,
    speeds: SpeedRange,
    rng: ChaCha8Rng,
    leg: Leg,
}

impl WaypointPlan {
    /// Starts at a uniform position with a uniform first waypoint.
    pub fn random(area: Area, speeds: SpeedRange, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = area.sample(&mut rng);
        let leg = Self::draw_leg(area, speeds, &mut rng, start, 0.0);
        WaypointPlan {
            area,
            speeds,
            rng,
            leg,
        }
    }

    /// Starts with an explicit first leg; later legs are drawn from `seed`.
    pub fn with_first_leg(
        area: Area,
        speeds: SpeedRange,
        seed: u64,
        start: Vec2,
        target: Vec2,
        speed: f64,
    ) -> Self {
        WaypointPlan {
            area,
            speeds,
            rng: ChaCha8Rng::seed_from_u64(seed),
            leg: Leg::new(start, target, speed, 0.0),
        }
    }

    fn draw_leg(area: Area, speeds: SpeedRange, rng: &mut ChaCha8Rng, from: Vec2, t: f64) -> Leg {
        if speeds.is_static() {
            return Leg::new(from, from, 0.0, t);
        }
        loop {
            let target = area.sample(rng);
            let speed = speeds.sample(rng);
            if target.dist(from) > 1e-9 && speed > 0.0 {
                return Leg::new(from, target, speed, t);
            }
        }
    }

    /// Time at which the current leg ends.
    pub fn next_arrival(&self) -> f64 {
        self.leg.end_time
    }

    /// Advances through any legs finished by `t` and returns the motion in
    /// force at `t`. At an arrival instant the new leg is returned.
    pub fn advance(&mut self, t: f64) -> MotionState {
        while self.leg.end_time <= t {
            let at = self.leg.end_time;
            let from = self.leg.target;
            self.leg = Self::draw_leg(self.area, self.speeds, &mut self.rng, from, at);
        }
        self.leg.motion()
    }

    /// Materializes the piecewise-linear path up to `horizon`.
    pub fn trajectory(mut self, horizon: f64) -> Trajectory {
        let mut legs = Vec::new();
        let mut ends = Vec::new();
        let mut t = 0.0;
        loop {
            let m = self.advance(t);
            let end = self.leg.end_time;
            legs.push(m);
            ends.push(end);
            if end > horizon {
                break;
            }
            t = end;
        }
        Trajectory { legs, ends }
    }
}

/// Motion state of a Random Way Point plan at time `t`.
pub fn rwp_step(plan: &mut WaypointPlan, t: f64) -> MotionState {
    plan.advance(t)
}

/// A precomputed piecewise-linear path: leg `i` is in force on
/// `[legs[i].valid_from, ends[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    legs: Vec<MotionState>,
    ends: Vec<f64>,
}

impl Trajectory {
    pub fn stationary(position: Vec2) -> Self {
        Trajectory {
            legs: vec![MotionState::stationary(position)],
            ends: vec![f64::INFINITY],
        }
    }

    /// Builds a path from consecutive legs; each leg ends where the next starts.
    pub fn from_legs(legs: Vec<MotionState>) -> Result<Self> {
        if legs.is_empty() {
            return Err(contract("trajectory needs at least one leg"));
        }
        let mut ends: Vec<f64> = legs.iter().skip(1).map(|m| m.valid_from).collect();
        ends.push(f64::INFINITY);
        if legs.windows(2).any(|w| w[1].valid_from <= w[0].valid_from) {
            return Err(contract("legs must start at increasing times"));
        }
        Ok(Trajectory { legs, ends })
    }

    pub fn leg_index(&self, t: f64) -> usize {
        self.ends.partition_point(|&e| e <= t).min(self.legs.len() - 1)
    }

    pub fn leg(&self, i: usize) -> &MotionState {
        &self.legs[i]
    }

    pub fn leg_end(&self, i: usize) -> f64 {
        self.ends[i]
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    pub fn state_at(&self, t: f64) -> MotionState {
        self.legs[self.leg_index(t)]
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        self.state_at(t).at(t)
    }

    /// Leg-change instants strictly inside `(from, to)`.
    pub fn breakpoints(&self, from: f64, to: f64) -> impl Iterator<Item = f64> + '_ {
        self.ends.iter().copied().filter(move |&e| e > from && e < to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(px: f64, py: f64, vx: f64, vy: f64) -> MotionState {
        MotionState::new(Vec2::new(px, py), Vec2::new(vx, vy), 0.0)
    }

    #[test]
    fn position_examples() {
        assert_eq!(position_at(&ms(0.0, 0.0, 1.0, 0.0), 5.0).unwrap(), Vec2::new(5.0, 0.0));
        assert_eq!(position_at(&ms(2.0, 7.0, 0.0, 0.0), 123.0).unwrap(), Vec2::new(2.0, 7.0));
        assert_eq!(position_at(&ms(3.0, 4.0, -1.0, 2.0), 2.0).unwrap(), Vec2::new(1.0, 8.0));
        let late = MotionState::new(Vec2::ZERO, Vec2::ZERO, 4.0);
        assert!(position_at(&late, 3.0).is_err());
    }

    #[test]
    fn safe_interval_entering_object() {
        let q = MotionState::stationary(Vec2::ZERO);
        let s = ms(-200.0, 0.0, 10.0, 0.0);
        let si = safe_interval(&q, &s, 100.0, 0.0).unwrap();
        assert_eq!(si, SafeInterval::Span { enter: 10.0, leave: 30.0 });
    }

    #[test]
    fn safe_interval_static_cases() {
        let q = MotionState::stationary(Vec2::ZERO);
        let near = MotionState::stationary(Vec2::new(3.0, 0.0));
        let far = MotionState::stationary(Vec2::new(30.0, 0.0));
        assert_eq!(
            safe_interval(&q, &near, 10.0, 2.0).unwrap(),
            SafeInterval::Span { enter: 2.0, leave: f64::INFINITY }
        );
        assert!(safe_interval(&q, &far, 10.0, 2.0).unwrap().is_empty());
        assert!(safe_interval(&q, &near, 0.0, 0.0).is_err());
        assert!(safe_interval(&q, &near, -1.0, 0.0).is_err());
    }

    #[test]
    fn safe_interval_already_inside_leaving() {
        let q = MotionState::stationary(Vec2::ZERO);
        let s = ms(0.0, 0.0, 5.0, 0.0);
        let si = safe_interval(&q, &s, 50.0, 0.0).unwrap();
        assert_eq!(si, SafeInterval::Span { enter: 0.0, leave: 10.0 });
        // Evaluated later, the window is shifted to absolute time.
        let s2 = MotionState::new(Vec2::ZERO, Vec2::new(5.0, 0.0), 4.0);
        let si2 = safe_interval(&q, &s2, 50.0, 6.0).unwrap();
        assert_eq!(si2, SafeInterval::Span { enter: 6.0, leave: 14.0 });
    }

    #[test]
    fn safe_interval_past_crossing_is_empty() {
        let q = MotionState::stationary(Vec2::ZERO);
        let s = ms(200.0, 0.0, 10.0, 0.0);
        assert!(safe_interval(&q, &s, 100.0, 0.0).unwrap().is_empty());
        let miss = ms(-200.0, 150.0, 10.0, 0.0);
        assert!(safe_interval(&q, &miss, 100.0, 0.0).unwrap().is_empty());
    }

    #[test]
    fn monitoring_interval_examples() {
        let w = Window::new(3.0, 10.0).unwrap();
        assert_eq!(monitoring_interval(SafeInterval::span(1.0, 6.0), w), SafeInterval::span(3.0, 6.0));
        assert!(monitoring_interval(SafeInterval::Empty, w).is_empty());
        assert_eq!(
            monitoring_interval(SafeInterval::span(0.0, f64::INFINITY), w),
            SafeInterval::span(3.0, 10.0)
        );
        assert!(monitoring_interval(SafeInterval::span(11.0, 12.0), w).is_empty());
        assert!(Window::new(2.0, 1.0).is_err());
    }

    #[test]
    fn quadratic_roots_cases() {
        assert_eq!(quadratic_roots(1.0, -3.0, 2.0), vec![1.0, 2.0]);
        assert_eq!(quadratic_roots(0.0, 2.0, -4.0), vec![2.0]);
        assert!(quadratic_roots(0.0, 0.0, 1.0).is_empty());
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
        assert_eq!(quadratic_roots(1.0, 0.0, 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn rwp_single_leg() {
        let area = Area::new(100.0, 100.0);
        let mut plan = WaypointPlan::with_first_leg(
            area,
            SpeedRange::new(0.0, 5.0),
            1,
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            2.0,
        );
        let m = rwp_step(&mut plan, 3.0);
        assert_eq!(position_at(&m, 3.0).unwrap(), Vec2::new(6.0, 0.0));
        let arrival = rwp_step(&mut plan, 5.0);
        assert_eq!(arrival.position, Vec2::new(10.0, 0.0));
        assert_eq!(arrival.valid_from, 5.0);
        assert!(plan.next_arrival() > 5.0);
    }

    #[test]
    fn rwp_is_deterministic_and_contained() {
        let area = Area::new(400.0, 300.0);
        let speeds = SpeedRange::new(0.0, 10.0);
        let mut a = WaypointPlan::random(area, speeds, 42);
        let mut b = WaypointPlan::random(area, speeds, 42);
        let mut t = 0.0;
        while t < 500.0 {
            let ma = rwp_step(&mut a, t);
            let mb = rwp_step(&mut b, t);
            assert_eq!(ma, mb);
            let p = position_at(&ma, t).unwrap();
            assert!(area.contains(p), "{p:?} outside at t={t}");
            assert!(ma.speed() <= 10.0 + 1e-9);
            t += 0.37;
        }
    }

    #[test]
    fn trajectory_matches_plan() {
        let area = Area::new(200.0, 200.0);
        let speeds = SpeedRange::new(1.0, 5.0);
        let traj = WaypointPlan::random(area, speeds, 9).trajectory(120.0);
        let mut plan = WaypointPlan::random(area, speeds, 9);
        let mut t = 0.0;
        while t < 120.0 {
            assert_eq!(traj.state_at(t), plan.advance(t));
            t += 0.5;
        }
        assert!(traj.leg_end(traj.leg_count() - 1) > 120.0);
    }

    #[test]
    fn static_plan_never_moves() {
        let traj = WaypointPlan::random(Area::new(50.0, 50.0), SpeedRange::fixed(0.0), 3).trajectory(60.0);
        assert_eq!(traj.leg_count(), 1);
        assert_eq!(traj.position_at(0.0), traj.position_at(59.0));
    }
}
