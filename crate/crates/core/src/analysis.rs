//! Closed-form network cost model: expected node densities, skyline size,
//! spreading and reply costs for the centralized and distributed
//! approaches, and the hop limit needed to cover the query range.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{contract, Error, Result};

/// Expected number of nodes inside a disk of `radius` under uniform
/// placement of `n` nodes over `area` square meters.
pub fn density(n: u64, area: f64, radius: f64) -> u64 {
    (PI * radius * radius * n as f64 / area).floor() as u64
}

/// Point estimate `(ln n)^(d-1)` of the skyline size of `n` uniform points
/// in `d` dimensions.
pub fn expected_skyline_size(n: f64, d: u32) -> f64 {
    n.ln().powi(d as i32 - 1)
}

/// Which hop probability the distributed reply cost attaches to hop `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReplyIndexing {
    /// `P_{k-i}` with `P_0 = 1`.
    #[default]
    Reversed,
    /// `P_1 * ... * P_i`, as in the spreading cost.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub n: u64,
    pub area: f64,
    pub big_r: f64,
    pub r: f64,
    /// Total dimensionality, distance included.
    pub d: u32,
    /// `hop_probs[j - 1]` is the success probability of hop `j`.
    pub hop_probs: Vec<f64>,
    pub delta_t: f64,
    pub report_interval: f64,
    pub safe_time_mean: f64,
    pub indexing: ReplyIndexing,
}

impl CostParams {
    pub fn n_big_r(&self) -> u64 {
        density(self.n, self.area, self.big_r)
    }

    pub fn n_r(&self) -> u64 {
        density(self.n, self.area, self.r)
    }

    /// `P_j`, with `P_0 = 1`.
    pub fn p(&self, j: u32) -> Result<f64> {
        if j == 0 {
            return Ok(1.0);
        }
        self.hop_probs
            .get(j as usize - 1)
            .copied()
            .ok_or_else(|| contract(format!("hop probability P_{j} not supplied")))
    }

    fn reach(&self, i: u32) -> Result<f64> {
        (1..=i).try_fold(1.0, |acc, j| Ok(acc * self.p(j)?))
    }
}

/// Expected number of query transmissions when flooding `k` hops.
pub fn query_spread_cost(p: &CostParams, k: u32) -> Result<f64> {
    let nr = p.n_r() as f64;
    (1..=k).try_fold(0.0, |acc, i| Ok(acc + nr.powi(i as i32) * p.reach(i)?))
}

/// Smallest hop count up to `cap` whose expected spread reaches the
/// expected population of the query range.
pub fn derive_ttl(p: &CostParams, cap: u32) -> Result<u32> {
    if p.n_r() <= 1 || p.n_big_r() < 1 {
        return Err(Error::Disconnected { cap });
    }
    let target = p.n_big_r() as f64;
    for k in 1..=cap {
        if query_spread_cost(p, k)? >= target {
            return Ok(k);
        }
    }
    Err(Error::Disconnected { cap })
}

/// Reply cost when every reached node ships its own record to the issuer.
pub fn response_cost_centralized(p: &CostParams, k: u32) -> Result<f64> {
    let nr = p.n_r() as f64;
    (1..=k).try_fold(0.0, |acc, i| Ok(acc + nr.powi(i as i32) * i as f64 * p.reach(i)?))
}

/// Reply cost when every hop forwards only a local skyline.
pub fn response_cost_drsq(p: &CostParams, k: u32) -> Result<f64> {
    let nr = p.n_r() as f64;
    (1..=k).try_fold(0.0, |acc, i| {
        let pop = nr.powi(i as i32);
        let prob = match p.indexing {
            ReplyIndexing::Reversed => p.p(k - i)?,
            ReplyIndexing::Cumulative => p.reach(i)?,
        };
        Ok(acc + pop * expected_skyline_size(pop, p.d) * prob)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostMode {
    SnapshotCentralized,
    SnapshotDrsq,
    ContinuousCentralized,
    ContinuousDcrsq,
}

impl CostMode {
    pub const ALL: [CostMode; 4] = [
        CostMode::SnapshotCentralized,
        CostMode::SnapshotDrsq,
        CostMode::ContinuousCentralized,
        CostMode::ContinuousDcrsq,
    ];
}

impl fmt::Display for CostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMode::SnapshotCentralized => "snapshot-centralized",
            CostMode::SnapshotDrsq => "snapshot-drsq",
            CostMode::ContinuousCentralized => "continuous-centralized",
            CostMode::ContinuousDcrsq => "continuous-dcrsq",
        })
    }
}

/// Total expected messages of one query under `mode` with hop limit `k`.
pub fn total_cost(p: &CostParams, k: u32, mode: CostMode) -> Result<f64> {
    let spread = query_spread_cost(p, k)?;
    match mode {
        CostMode::SnapshotCentralized => Ok(spread + response_cost_centralized(p, k)?),
        CostMode::SnapshotDrsq => Ok(spread + response_cost_drsq(p, k)?),
        CostMode::ContinuousCentralized => {
            if !(p.report_interval > 0.0) {
                return Err(contract("report interval must be positive"));
            }
            Ok(p.delta_t / p.report_interval * (spread + response_cost_centralized(p, k)?))
        }
        CostMode::ContinuousDcrsq => {
            if !(p.safe_time_mean > 0.0) {
                return Err(contract("mean safe time must be positive"));
            }
            Ok(spread + p.delta_t / p.safe_time_mean * response_cost_drsq(p, k)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u64, area: f64, big_r: f64, r: f64, d: u32, p: f64) -> CostParams {
        CostParams {
            n,
            area,
            big_r,
            r,
            d,
            hop_probs: vec![p; 8],
            delta_t: 10.0,
            report_interval: 1.0,
            safe_time_mean: 5.0,
            indexing: ReplyIndexing::Reversed,
        }
    }

    /// Parameters whose transmission-range population is exactly `nr`.
    fn with_nr(nr: u64, d: u32) -> CostParams {
        // pi * r^2 * n / area = nr + 0.5 with n = 1000, area = 1e6.
        let r = ((nr as f64 + 0.5) * 1000.0 / PI).sqrt();
        let p = params(1000, 1e6, r, r, d, 1.0);
        assert_eq!(p.n_r(), nr);
        p
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(100, 160000.0, 80.0), 12);
        assert_eq!(density(100, 160000.0, 75.0), 11);
        assert_eq!(density(100, 160000.0, 0.0), 0);
    }

    #[test]
    fn skyline_size_examples() {
        assert!((expected_skyline_size(100.0, 2) - 4.605170185988092).abs() < 1e-12);
        assert_eq!(expected_skyline_size(37.0, 1), 1.0);
        assert!((expected_skyline_size(std::f64::consts::E.powi(2), 3) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spread_and_ttl() {
        let p = with_nr(5, 2);
        assert_eq!(query_spread_cost(&p, 2).unwrap(), 30.0);
        let s1 = params(100, 160000.0, 80.0, 75.0, 2, 1.0);
        assert_eq!(derive_ttl(&s1, 5).unwrap(), 2);
        let sparse = params(20, 250000.0, 100.0, 75.0, 2, 1.0);
        assert_eq!(derive_ttl(&sparse, 5), Err(Error::Disconnected { cap: 5 }));
    }

    #[test]
    fn spread_with_decaying_probabilities() {
        let mut p = with_nr(4, 2);
        p.hop_probs = vec![0.9, 0.8, 0.7, 0.6];
        let mut want = 0.0;
        let mut prod = 1.0;
        for i in 1..=4 {
            prod *= p.hop_probs[i - 1];
            want += 4f64.powi(i as i32) * prod;
        }
        assert!((query_spread_cost(&p, 4).unwrap() - want).abs() < 1e-9);
        assert!(query_spread_cost(&p, 5).is_err());
    }

    #[test]
    fn reply_costs() {
        let p = with_nr(5, 2);
        assert_eq!(response_cost_centralized(&p, 2).unwrap(), 55.0);
        let mut q = with_nr(5, 1);
        q.hop_probs = vec![0.5; 4];
        // P_{k-i}: i=1 -> P_2, i=2 -> P_1, i=3 -> P_0.
        assert_eq!(response_cost_drsq(&q, 3).unwrap(), 5.0 * 0.5 + 25.0 * 0.5 + 125.0);
        q.indexing = ReplyIndexing::Cumulative;
        assert_eq!(response_cost_drsq(&q, 3).unwrap(), 5.0 * 0.5 + 25.0 * 0.25 + 125.0 * 0.125);
    }

    #[test]
    fn drsq_cheaper_when_log_factor_below_hop_count() {
        for nr in 2..12 {
            for d in 1..4 {
                for k in 1..5 {
                    let p = with_nr(nr, d);
                    let pop = |i: u32| (nr as f64).powi(i as i32);
                    if (1..=k).all(|i| expected_skyline_size(pop(i), d) < i as f64) {
                        assert!(response_cost_drsq(&p, k).unwrap() < response_cost_centralized(&p, k).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn totals() {
        let p = params(100, 160000.0, 80.0, 75.0, 2, 0.9);
        let snap = total_cost(&p, 3, CostMode::SnapshotCentralized).unwrap();
        let cont = total_cost(&p, 3, CostMode::ContinuousCentralized).unwrap();
        assert_eq!(cont, 10.0 * snap);
        let spread = query_spread_cost(&p, 3).unwrap();
        let dcrsq = total_cost(&p, 3, CostMode::ContinuousDcrsq).unwrap();
        assert_eq!(dcrsq, spread + 2.0 * response_cost_drsq(&p, 3).unwrap());
        let mut bad = p.clone();
        bad.report_interval = 0.0;
        bad.safe_time_mean = -1.0;
        assert!(total_cost(&bad, 3, CostMode::ContinuousCentralized).is_err());
        assert!(total_cost(&bad, 3, CostMode::ContinuousDcrsq).is_err());
    }

    #[test]
    fn dcrsq_below_periodic_when_safe_time_exceeds_interval() {
        for nr in 2..10 {
            for k in 1..5 {
                for &ts in &[1.5, 3.0, 8.0] {
                    let mut p = with_nr(nr, 2);
                    p.safe_time_mean = ts;
                    let reply = response_cost_drsq(&p, k).unwrap();
                    let central = total_cost(&p, k, CostMode::SnapshotCentralized).unwrap();
                    if p.safe_time_mean > p.report_interval && reply < central {
                        assert!(
                            total_cost(&p, k, CostMode::ContinuousDcrsq).unwrap()
                                < total_cost(&p, k, CostMode::ContinuousCentralized).unwrap()
                        );
                    }
                }
            }
        }
    }
}
