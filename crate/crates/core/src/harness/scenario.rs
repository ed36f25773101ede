use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{derive_ttl, CostParams, ReplyIndexing};
use crate::error::{Error, Result};
use crate::netsim::LinkModel;
use crate::skyline::Direction;

/// Everything needed to generate and simulate one experimental setting.
///
/// Config files are flat `key = value` lines whose keys are the field names
/// below; `#` starts a comment. Keys not given keep the `scenario1` value.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub area_width: f64,
    pub area_height: f64,
    pub node_count: usize,
    pub query_count: usize,
    pub query_range: f64,
    pub tx_range: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Monitoring window length; zero makes every query a snapshot.
    pub delta_t: f64,
    /// Period of the centralized baseline's collection rounds.
    pub report_interval: f64,
    /// Flooding TTL of the centralized baseline.
    pub ttl: u32,
    /// Upper bound for the derived distributed TTL.
    pub ttl_cap: u32,
    pub bandwidth: f64,
    pub delivery_prob: f64,
    pub horizon: f64,
    pub seed: u64,
    pub replications: usize,
    pub attr_dims: usize,
    pub directions: Vec<Direction>,
    pub packet_size: f64,
    pub hop_latency: f64,
    pub issue_min: f64,
    pub issue_max: f64,
    /// Mean spacing of result changes assumed by the cost model.
    pub safe_time_mean: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "scenario1".into(),
            area_width: 400.0,
            area_height: 400.0,
            node_count: 100,
            query_count: 1,
            query_range: 80.0,
            tx_range: 75.0,
            speed_min: 2.0,
            speed_max: 2.0,
            delta_t: 0.0,
            report_interval: 1.0,
            ttl: 5,
            ttl_cap: 5,
            bandwidth: 2e6,
            delivery_prob: 1.0,
            horizon: 60.0,
            seed: 1,
            replications: 20,
            attr_dims: 2,
            directions: Vec::new(),
            packet_size: 1024.0,
            hop_latency: 1e-3,
            issue_min: 1.0,
            issue_max: 50.0,
            safe_time_mean: 5.0,
        }
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| config(format!("{key}: cannot parse '{v}'")))
}

impl Scenario {
    pub const PRESETS: [&'static str; 2] = ["scenario1", "scenario2"];

    /// Snapshot setting with the defaults of the first experiment family.
    pub fn scenario1() -> Self {
        Scenario::default()
    }

    /// Continuous setting with the defaults of the second experiment family.
    pub fn scenario2() -> Self {
        Scenario {
            name: "scenario2".into(),
            area_width: 500.0,
            area_height: 500.0,
            node_count: 60,
            query_range: 100.0,
            speed_min: 0.0,
            speed_max: 10.0,
            delta_t: 10.0,
            ..Scenario::default()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "scenario1" => Ok(Scenario::scenario1()),
            "scenario2" => Ok(Scenario::scenario2()),
            _ => Err(config(format!("unknown preset '{name}' (expected scenario1 or scenario2)"))),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sc = Scenario { name: "custom".into(), ..Scenario::default() };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected key = value", i + 1)))?;
            sc.set(k.trim(), v.trim())
                .map_err(|e| config(format!("line {}: {}", i + 1, e.to_string().trim_start_matches("configuration error: "))))?;
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    /// Assigns one field from its textual form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "name" => self.name = v.to_string(),
            "area_width" => self.area_width = num(key, v)?,
            "area_height" => self.area_height = num(key, v)?,
            "node_count" => self.node_count = num(key, v)?,
            "query_count" => self.query_count = num(key, v)?,
            "query_range" => self.query_range = num(key, v)?,
            "tx_range" => self.tx_range = num(key, v)?,
            "speed_min" => self.speed_min = num(key, v)?,
            "speed_max" => self.speed_max = num(key, v)?,
            "delta_t" => self.delta_t = num(key, v)?,
            "report_interval" => self.report_interval = num(key, v)?,
            "ttl" => self.ttl = num(key, v)?,
            "ttl_cap" => self.ttl_cap = num(key, v)?,
            "bandwidth" => self.bandwidth = num(key, v)?,
            "delivery_prob" => self.delivery_prob = num(key, v)?,
            "horizon" => self.horizon = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "replications" => self.replications = num(key, v)?,
            "attr_dims" => self.attr_dims = num(key, v)?,
            "directions" => {
                self.directions = v
                    .split(',')
                    .map(|d| match d.trim() {
                        "min" => Ok(Direction::Minimize),
                        "max" => Ok(Direction::Maximize),
                        other => Err(config(format!("directions: '{other}' is neither min nor max"))),
                    })
                    .collect::<Result<_>>()?
            }
            "packet_size" => self.packet_size = num(key, v)?,
            "hop_latency" => self.hop_latency = num(key, v)?,
            "issue_min" => self.issue_min = num(key, v)?,
            "issue_max" => self.issue_max = num(key, v)?,
            "safe_time_mean" => self.safe_time_mean = num(key, v)?,
            _ => return Err(config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("query_range", self.query_range),
            ("tx_range", self.tx_range),
            ("report_interval", self.report_interval),
            ("bandwidth", self.bandwidth),
            ("packet_size", self.packet_size),
            ("horizon", self.horizon),
            ("safe_time_mean", self.safe_time_mean),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config(format!("{k} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("speed_min", self.speed_min),
            ("delta_t", self.delta_t),
            ("hop_latency", self.hop_latency),
            ("issue_min", self.issue_min),
        ];
        for (k, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config(format!("{k} must be non-negative, got {v}")));
            }
        }
        if !(self.speed_max >= self.speed_min && self.speed_max.is_finite()) {
            return Err(config("speed_max must be at least speed_min"));
        }
        if !(self.delivery_prob > 0.0 && self.delivery_prob <= 1.0) {
            return Err(config(format!("delivery_prob must lie in (0, 1], got {}", self.delivery_prob)));
        }
        if !(self.issue_max >= self.issue_min) {
            return Err(config("issue_max must be at least issue_min"));
        }
        if self.issue_max + self.delta_t > self.horizon {
            return Err(config("issue_max + delta_t must not exceed horizon"));
        }
        if self.attr_dims == 0 {
            return Err(config("attr_dims must be at least 1"));
        }
        if !self.directions.is_empty() && self.directions.len() != self.attr_dims {
            return Err(config(format!(
                "directions lists {} entries but attr_dims is {}",
                self.directions.len(),
                self.attr_dims
            )));
        }
        if self.replications == 0 {
            return Err(config("replications must be at least 1"));
        }
        if self.ttl_cap == 0 {
            return Err(config("ttl_cap must be at least 1"));
        }
        Ok(())
    }

    pub fn directions(&self) -> Vec<Direction> {
        if self.directions.is_empty() {
            vec![Direction::Minimize; self.attr_dims]
        } else {
            self.directions.clone()
        }
    }

    pub fn link(&self) -> LinkModel {
        LinkModel {
            range: self.tx_range,
            delivery_prob: self.delivery_prob,
            bandwidth: self.bandwidth,
            packet_size: self.packet_size,
            hop_latency: self.hop_latency,
        }
    }

    pub fn cost_params(&self) -> CostParams {
        CostParams {
            n: self.node_count as u64,
            area: self.area_width * self.area_height,
            big_r: self.query_range,
            r: self.tx_range,
            d: self.attr_dims as u32 + 1,
            hop_probs: (1..=self.ttl.max(self.ttl_cap) as i32).map(|j| self.delivery_prob.powi(j)).collect(),
            delta_t: self.delta_t,
            report_interval: self.report_interval,
            safe_time_mean: self.safe_time_mean,
            indexing: ReplyIndexing::Reversed,
        }
    }

    /// Hop limit of the distributed protocols: the smallest TTL whose
    /// expected spread covers the query range, or the cap when the network
    /// is too sparse for the model to give one.
    pub fn distributed_ttl(&self) -> u32 {
        derive_ttl(&self.cost_params(), self.ttl_cap).unwrap_or(self.ttl_cap)
    }

    pub fn is_continuous(&self) -> bool {
        self.delta_t > 0.0
    }

    /// The scenario as a config file.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let dirs: Vec<&str> = self
            .directions
            .iter()
            .map(|d| if *d == Direction::Minimize { "min" } else { "max" })
            .collect();
        let _ = writeln!(s, "name = {}", self.name);
        for (k, v) in [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("query_range", self.query_range),
            ("tx_range", self.tx_range),
            ("speed_min", self.speed_min),
            ("speed_max", self.speed_max),
            ("delta_t", self.delta_t),
            ("report_interval", self.report_interval),
            ("bandwidth", self.bandwidth),
            ("delivery_prob", self.delivery_prob),
            ("horizon", self.horizon),
            ("packet_size", self.packet_size),
            ("hop_latency", self.hop_latency),
            ("issue_min", self.issue_min),
            ("issue_max", self.issue_max),
            ("safe_time_mean", self.safe_time_mean),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (k, v) in [
            ("node_count", self.node_count as u64),
            ("query_count", self.query_count as u64),
            ("ttl", self.ttl as u64),
            ("ttl_cap", self.ttl_cap as u64),
            ("seed", self.seed),
            ("replications", self.replications as u64),
            ("attr_dims", self.attr_dims as u64),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        if !dirs.is_empty() {
            let _ = writeln!(s, "directions = {}", dirs.join(","));
        }
        s
    }
}
