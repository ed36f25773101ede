use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::oracle::{oracle_timeline, precision_recall};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::kinematics::{Area, SpeedRange, Window, WaypointPlan};
use crate::netsim::{EventKind, Net, Node, World};
use crate::protocols::{collection_timeout, Centralized, Drsq, QueryDescriptor, QueryOutcome};
use crate::skyline::{AttributeVector, NodeId};
use crate::timeline::Timeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Approach {
    Centralized,
    Drsq,
    Dcrsq,
}

impl Approach {
    /// The approaches compared under a scenario: snapshot settings pit the
    /// baseline against DRSQ, continuous ones against DCRSQ.
    pub fn compared(sc: &Scenario) -> [Approach; 2] {
        if sc.is_continuous() {
            [Approach::Centralized, Approach::Dcrsq]
        } else {
            [Approach::Centralized, Approach::Drsq]
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Centralized => "centralized",
            Approach::Drsq => "drsq",
            Approach::Dcrsq => "dcrsq",
        })
    }
}

/// splitmix64 finalizer over a seed and two stream indices.
pub fn mix(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

const TRAJECTORY: u64 = 1;
const ATTRS: u64 = 2;
const ISSUE: u64 = 3;
const LOSS: u64 = 4;

/// One generated replication: the world and the queries issued in it.
/// Sensor nodes come first; query nodes carry no attributes and take the
/// last `query_count` ids.
#[derive(Debug, Clone)]
pub struct Instance {
    pub world: World,
    pub queries: Vec<(NodeId, Window)>,
    pub seed: u64,
}

pub fn build_instance(sc: &Scenario, seed: u64) -> Instance {
    let area = Area::new(sc.area_width, sc.area_height);
    let speeds = SpeedRange::new(sc.speed_min, sc.speed_max);
    let horizon = sc.horizon + sc.delta_t + 1.0;
    let dirs = sc.directions();
    let total = sc.node_count + sc.query_count;
    let nodes = (0..total)
        .map(|i| {
            let trajectory = WaypointPlan::random(area, speeds, mix(seed, TRAJECTORY, i as u64)).trajectory(horizon);
            let attrs = (i < sc.node_count).then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, ATTRS, i as u64));
                let values = (0..sc.attr_dims).map(|_| rng.gen::<f64>()).collect();
                AttributeVector::new(values, dirs.clone()).expect("validated dimensions")
            });
            Node { trajectory, attrs }
        })
        .collect();
    let queries = (0..sc.query_count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, ISSUE, k as u64));
            let t0 = if sc.issue_max > sc.issue_min { rng.gen_range(sc.issue_min..=sc.issue_max) } else { sc.issue_min };
            let window = Window { start: t0, end: t0 + sc.delta_t };
            (NodeId((sc.node_count + k) as u32), window)
        })
        .collect();
    Instance { world: World::new(area, nodes), queries, seed }
}

/// Result of one query under one approach, scored against the oracle.
#[derive(Debug, Clone)]
pub struct QueryRun {
    pub approach: Approach,
    pub query: QueryDescriptor,
    pub outcome: QueryOutcome,
    pub oracle: Timeline,
    pub precision: f64,
    pub recall: f64,
    pub trace: String,
}

pub fn descriptor(sc: &Scenario, inst: &Instance, k: usize, approach: Approach) -> Result<QueryDescriptor> {
    let (issuer, window) = inst.queries[k];
    let ttl = match approach {
        Approach::Centralized => sc.ttl,
        Approach::Drsq | Approach::Dcrsq => sc.distributed_ttl(),
    };
    QueryDescriptor::new(k as u32, issuer, inst.world.motion(issuer, window.start), sc.query_range, window, ttl)
}

/// Simulates query `k` of `inst` under `approach`. Packet losses are drawn
/// from a stream shared by all approaches on the same query.
pub fn run_query(sc: &Scenario, inst: &Instance, k: usize, approach: Approach, trace: bool) -> Result<QueryRun> {
    let q = descriptor(sc, inst, k, approach)?;
    let link = sc.link();
    let t0 = q.window.start;
    let end = if q.is_snapshot() { t0 + collection_timeout(&link, q.ttl) } else { q.window.end };
    let mut net = Net::new(&inst.world, link, t0, end, mix(inst.seed, LOSS, k as u64));
    if trace {
        net = net.with_trace();
    }
    net.set_query(q.id);
    net.schedule(t0, EventKind::QueryIssue);
    net.schedule(end, EventKind::QueryExpire);
    let n = inst.world.len();
    let outcome = match approach {
        Approach::Centralized => {
            let mut p = Centralized::new(q.clone(), n, &link, sc.report_interval);
            net.run(&mut p);
            p.outcome(&net)
        }
        Approach::Drsq | Approach::Dcrsq => {
            let mut p = Drsq::new(q.clone(), n, &link);
            net.run(&mut p);
            p.outcome(&net)
        }
    };
    let oracle = oracle_timeline(&inst.world, &q);
    let (precision, recall) = precision_recall(&outcome.result.timeline, &oracle, q.window);
    Ok(QueryRun {
        approach,
        query: q,
        outcome,
        oracle,
        precision,
        recall,
        trace: net.take_trace(),
    })
}

/// One CSV row: an approach on one replication, aggregated over queries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub scenario: String,
    pub approach: Approach,
    pub param: String,
    pub value: String,
    pub rep: usize,
    pub response_time_s: f64,
    pub msgs_total: u64,
    pub msgs_flood: u64,
    pub msgs_reply: u64,
    pub msgs_update: u64,
    pub accessed_objects: u64,
    pub precision: f64,
    pub recall: f64,
}

pub const CSV_HEADER: [&str; 13] = [
    "scenario",
    "approach",
    "param",
    "value",
    "rep",
    "response_time_s",
    "msgs_total",
    "msgs_flood",
    "msgs_reply",
    "msgs_update",
    "accessed_objects",
    "precision",
    "recall",
];

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl MetricRecord {
    fn from_runs(sc: &Scenario, approach: Approach, param: &str, value: &str, rep: usize, runs: &[QueryRun]) -> Self {
        let sum = |f: fn(&QueryRun) -> u64| runs.iter().map(f).sum::<u64>();
        let flood = sum(|r| r.outcome.stats.flood);
        let reply = sum(|r| r.outcome.stats.reply);
        let update = sum(|r| r.outcome.stats.update);
        MetricRecord {
            scenario: sc.name.clone(),
            approach,
            param: param.into(),
            value: value.into(),
            rep,
            response_time_s: mean(runs.iter().map(|r| r.outcome.response_time)),
            msgs_total: flood + reply + update,
            msgs_flood: flood,
            msgs_reply: reply,
            msgs_update: update,
            accessed_objects: sum(|r| r.outcome.accessed_objects),
            precision: mean(runs.iter().map(|r| r.precision)),
            recall: mean(runs.iter().map(|r| r.recall)),
        }
    }

    pub fn fields(&self) -> [String; 13] {
        [
            self.scenario.clone(),
            self.approach.to_string(),
            self.param.clone(),
            self.value.clone(),
            self.rep.to_string(),
            self.response_time_s.to_string(),
            self.msgs_total.to_string(),
            self.msgs_flood.to_string(),
            self.msgs_reply.to_string(),
            self.msgs_update.to_string(),
            self.accessed_objects.to_string(),
            self.precision.to_string(),
            self.recall.to_string(),
        ]
    }
}

/// Records and trace text of one replication.
#[derive(Debug, Clone, Default)]
pub struct Replication {
    pub records: Vec<MetricRecord>,
    pub runs: Vec<QueryRun>,
    pub trace: String,
}

/// Runs every compared approach on every query of replication `rep`.
pub fn run_replication(sc: &Scenario, param: &str, value: &str, rep: usize, trace: bool) -> Result<Replication> {
    sc.validate()?;
    let inst = build_instance(sc, mix(sc.seed, 0, rep as u64));
    let mut out = Replication::default();
    for approach in Approach::compared(sc) {
        let runs = (0..sc.query_count)
            .map(|k| run_query(sc, &inst, k, approach, trace))
            .collect::<Result<Vec<_>>>()?;
        for (k, r) in runs.iter().enumerate() {
            if trace {
                out.trace.push_str(&format!("# rep={rep} approach={approach} query={k} {param}={value}\n"));
                out.trace.push_str(&r.trace);
            }
        }
        out.records.push(MetricRecord::from_runs(sc, approach, param, value, rep, &runs));
        out.runs.extend(runs);
    }
    Ok(out)
}

/// Runs `reps` replications in parallel; output order is deterministic.
pub fn run(sc: &Scenario, reps: usize, trace: bool) -> Result<Replication> {
    sweep_cells(sc, "-", &["-".to_string()], reps, trace)
}

/// Runs `reps` replications for each value of `param`.
pub fn sweep(base: &Scenario, param: &str, values: &[String], reps: usize) -> Result<Replication> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    sweep_cells(base, param, values, reps, false)
}

fn sweep_cells(base: &Scenario, param: &str, values: &[String], reps: usize, trace: bool) -> Result<Replication> {
    let mut cells = Vec::new();
    for v in values {
        let mut sc = base.clone();
        if param != "-" {
            sc.set(param, v)?;
        }
        sc.validate()?;
        for rep in 0..reps {
            cells.push((sc.clone(), v.clone(), rep));
        }
    }
    let results: Vec<Result<Replication>> = cells
        .par_iter()
        .map(|(sc, v, rep)| run_replication(sc, param, v, *rep, trace))
        .collect();
    let mut out = Replication::default();
    for r in results {
        let r = r?;
        out.records.extend(r.records);
        out.runs.extend(r.runs);
        out.trace.push_str(&r.trace);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(w: W, records: &[MetricRecord]) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER).map_err(io)?;
    for r in records {
        wr.write_record(r.fields()).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Mean and 95% confidence half-width; the half-width is `None` for a
/// single sample.
pub fn mean_ci(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, None);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, Some(1.96 * (var / n).sqrt()))
}

/// Human-readable per-cell summary of `records`.
pub fn summary(records: &[MetricRecord]) -> String {
    let mut keys: Vec<(String, String, Approach)> = Vec::new();
    for r in records {
        let k = (r.param.clone(), r.value.clone(), r.approach);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut s = format!(
        "{:<12} {:<8} {:<12} {:>4} {:>22} {:>22} {:>20} {:>16} {:>16}\n",
        "param", "value", "approach", "n", "response_time_s", "msgs_total", "accessed", "precision", "recall"
    );
    for (param, value, approach) in keys {
        let cell: Vec<&MetricRecord> =
            records.iter().filter(|r| r.param == param && r.value == value && r.approach == approach).collect();
        let col = |f: fn(&MetricRecord) -> f64, prec: usize| {
            let xs: Vec<f64> = cell.iter().map(|r| f(r)).collect();
            match mean_ci(&xs) {
                (m, Some(h)) => format!("{m:.prec$} ± {h:.prec$}"),
                (m, None) => format!("{m:.prec$} ± n/a"),
            }
        };
        s.push_str(&format!(
            "{:<12} {:<8} {:<12} {:>4} {:>22} {:>22} {:>20} {:>16} {:>16}\n",
            param,
            value,
            approach.to_string(),
            cell.len(),
            col(|r| r.response_time_s, 5),
            col(|r| r.msgs_total as f64, 1),
            col(|r| r.accessed_objects as f64, 1),
            col(|r| r.precision, 3),
            col(|r| r.recall, 3),
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_spreads_streams() {
        assert_ne!(mix(1, 1, 0), mix(1, 2, 0));
        assert_ne!(mix(1, 1, 0), mix(1, 1, 1));
        assert_eq!(mix(7, 3, 9), mix(7, 3, 9));
    }

    #[test]
    fn instance_layout() {
        let sc = Scenario::scenario2();
        let inst = build_instance(&sc, 5);
        assert_eq!(inst.world.len(), 61);
        assert_eq!(inst.world.sensors().count(), 60);
        let (issuer, w) = inst.queries[0];
        assert_eq!(issuer, NodeId(60));
        assert!(w.start >= 1.0 && w.start <= 50.0 && (w.len() - 10.0).abs() < 1e-12);
        let again = build_instance(&sc, 5);
        assert_eq!(again.world.position(NodeId(3), 17.0), inst.world.position(NodeId(3), 17.0));
    }

    #[test]
    fn ci_examples() {
        assert_eq!(mean_ci(&[2.0]), (2.0, None));
        let (m, h) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h.unwrap() - 1.96).abs() < 1e-12);
    }

    #[test]
    fn replication_is_deterministic() {
        let mut sc = Scenario::scenario1();
        sc.node_count = 40;
        let a = run_replication(&sc, "-", "-", 0, true).unwrap();
        let b = run_replication(&sc, "-", "-", 0, true).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.records.len(), 2);
    }
}
