use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use drsq::analysis::{derive_ttl, query_spread_cost, response_cost_centralized, response_cost_drsq, total_cost, CostMode, ReplyIndexing};
use drsq::harness::{self, timelines_agree, Approach, Scenario};
use drsq::{Error, Result};

#[derive(Parser)]
#[command(name = "drsq", version, about = "Range-skyline queries over simulated mobile sensor networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Source {
    /// Built-in scenario (scenario1 or scenario2).
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario config file of `key = value` lines.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Master seed, overriding the scenario's.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<Scenario> {
        let mut sc = match (&self.preset, &self.scenario) {
            (_, Some(path)) => Scenario::load(path)?,
            (Some(name), None) => Scenario::preset(name)?,
            (None, None) => Scenario::scenario1(),
        };
        if let Some(s) = self.seed {
            sc.seed = s;
        }
        Ok(sc)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write per-replication metrics.
    Run {
        #[command(flatten)]
        src: Source,
        /// Replications (default: the scenario's).
        #[arg(long)]
        reps: Option<usize>,
        /// CSV output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-packet event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Vary one scenario parameter over a list of values.
    Sweep {
        #[command(flatten)]
        src: Source,
        /// Scenario key to vary.
        #[arg(long, default_value = "node_count")]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the analytical cost model for a scenario.
    Cost {
        #[command(flatten)]
        src: Source,
        /// Hop probability used by the distributed reply cost.
        #[arg(long, value_enum, default_value = "reversed")]
        indexing: Indexing,
    },
    /// Check the distributed protocol against the oracle on a lossless,
    /// static network.
    OracleCheck {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Indexing {
    Reversed,
    Cumulative,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn emit_csv(out: &Option<PathBuf>, records: &[harness::MetricRecord]) -> Result<()> {
    match out {
        Some(p) => harness::write_csv(create(p)?, records),
        None => harness::write_csv(io::stdout().lock(), records),
    }
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn cost(sc: &Scenario, indexing: Indexing) -> Result<()> {
    let mut p = sc.cost_params();
    p.indexing = match indexing {
        Indexing::Reversed => ReplyIndexing::Reversed,
        Indexing::Cumulative => ReplyIndexing::Cumulative,
    };
    println!("scenario      {}", sc.name);
    println!("N_R           {}", p.n_big_r());
    println!("N_r           {}", p.n_r());
    let k = match derive_ttl(&p, sc.ttl_cap) {
        Ok(k) => {
            println!("derived TTL   {k}");
            k
        }
        Err(e) => {
            println!("derived TTL   none ({e}); using cap {}", sc.ttl_cap);
            sc.ttl_cap
        }
    };
    println!("spread        {:.3}", query_spread_cost(&p, k)?);
    println!("reply central {:.3}", response_cost_centralized(&p, k)?);
    println!("reply drsq    {:.3}", response_cost_drsq(&p, k)?);
    for mode in CostMode::ALL {
        println!("{:<24} {:.3}", mode.to_string(), total_cost(&p, k, mode)?);
    }
    Ok(())
}

fn oracle_check(mut sc: Scenario, trace: &Option<PathBuf>) -> Result<bool> {
    sc.delivery_prob = 1.0;
    sc.speed_min = 0.0;
    sc.speed_max = 0.0;
    sc.validate()?;
    let approach = if sc.is_continuous() { Approach::Dcrsq } else { Approach::Drsq };
    let inst = harness::build_instance(&sc, sc.seed);
    let mut ok = true;
    let mut text = String::new();
    for k in 0..sc.query_count {
        let r = harness::run_query(&sc, &inst, k, approach, trace.is_some())?;
        text.push_str(&r.trace);
        let agree = timelines_agree(&r.outcome.result.timeline, &r.oracle, r.query.window);
        let show = |t: &drsq::timeline::Timeline| {
            t.segments
                .iter()
                .map(|s| format!("[{:.3},{:.3}] {:?}", s.start, s.end, s.ids.iter().map(|i| i.0).collect::<Vec<_>>()))
                .collect::<Vec<_>>()
                .join(" ")
        };
        if !agree {
            println!("query {k}: result {}", show(&r.outcome.result.timeline));
            println!("query {k}: oracle {}", show(&r.oracle));
        }
        ok &= agree;
    }
    if let Some(p) = trace {
        write_text(p, &text)?;
    }
    Ok(ok)
}

fn main_inner(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { src, reps, out, trace } => {
            let sc = src.load()?;
            let reps = reps.unwrap_or(sc.replications);
            let r = harness::run(&sc, reps, trace.is_some())?;
            emit_csv(&out, &r.records)?;
            if let Some(p) = &trace {
                write_text(p, &r.trace)?;
            }
            eprint!("{}", harness::summary(&r.records));
        }
        Cmd::Sweep { src, param, values, reps, out } => {
            let sc = src.load()?;
            let reps = reps.unwrap_or(sc.replications);
            let r = harness::sweep(&sc, &param, &values, reps)?;
            emit_csv(&out, &r.records)?;
            eprint!("{}", harness::summary(&r.records));
        }
        Cmd::Cost { src, indexing } => cost(&src.load()?, indexing)?,
        Cmd::OracleCheck { src, trace } => {
            if oracle_check(src.load()?, &trace)? {
                println!("EXACT MATCH");
            } else {
                println!("MISMATCH");
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
