use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use earsim::analytic::{
    pattern_flow_solve, unwanted_overhead, ChannelParams, FLOW_SOLVER_MAX_RECEIVERS,
};
use earsim::channel::{ber_to_per, FecModel};
use earsim::harness::config::SEED_ENV;
use earsim::harness::{
    analytic_lambda, run_experiment, BerSweep, ConfigFile, ExperimentConfig, LossPoint,
};
use earsim::schemes::Scheme;

#[derive(Parser)]
#[command(name = "earsim", version, about = "XOR-coded retransmission simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial grid and write one CSV row per grid point and scheme.
    Run(Box<RunArgs>),
    /// Print closed-form retransmissions per packet.
    Theory {
        /// Loss rates, one per receiver, e.g. 0.1:0.2:0.3.
        #[arg(long)]
        loss: String,
    },
    /// Convert bit error rates to packet erasure rates.
    Per {
        #[arg(long, value_delimiter = ',', required = true)]
        ber: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (TOML); flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    scheme: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    receivers: Option<Vec<usize>>,
    /// Packets per receiver.
    #[arg(long)]
    packets: Option<usize>,
    /// start:stop:step
    #[arg(long, conflicts_with = "loss")]
    ber_sweep: Option<String>,
    /// Grid of loss rates; a point may list one rate per receiver with `:`.
    #[arg(long, value_delimiter = ',')]
    loss: Option<Vec<String>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Results CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trial EAR gains to this CSV.
    #[arg(long)]
    gains: Option<PathBuf>,
    #[arg(long)]
    compare_analytic: bool,
    #[arg(long)]
    round_cap: Option<u64>,
    /// Default to 100000 packets per receiver.
    #[arg(long)]
    paper_scale: bool,
}

impl RunArgs {
    fn overrides(&self) -> earsim::Result<ConfigFile> {
        let ber_sweep = match &self.ber_sweep {
            Some(s) => {
                let b = BerSweep::parse(s)?;
                Some([b.start, b.stop, b.step])
            }
            None => None,
        };
        let loss = match &self.loss {
            Some(points) => Some(
                points
                    .iter()
                    .map(|p| LossPoint::parse(p))
                    .collect::<earsim::Result<Vec<_>>>()?,
            ),
            None => None,
        };
        Ok(ConfigFile {
            schemes: self.scheme.clone(),
            receivers: self.receivers.clone(),
            packets: self.packets,
            loss,
            ber_sweep,
            trials: self.trials,
            seed: self.seed,
            round_cap: self.round_cap,
            out: self.out.clone(),
            compare_analytic: self.compare_analytic.then_some(true),
            paper_scale: self.paper_scale.then_some(true),
            delta_t: None,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(&args),
        Command::Theory { loss } => theory(&loss),
        Command::Per { ber } => per(&ber),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("earsim: {e}");
            ExitCode::FAILURE
        }
    }
}

fn create(path: &PathBuf) -> earsim::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(args: &RunArgs) -> earsim::Result<ExitCode> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let config = ExperimentConfig::resolve(file.merge(args.overrides()?), env_seed.as_deref())?;
    let result = run_experiment(&config)?;
    match &config.out {
        Some(path) => result.write_csv(create(path)?)?,
        None => result.write_csv(io::stdout().lock())?,
    }
    if let Some(path) = &args.gains {
        result.write_gains_csv(create(path)?)?;
    }
    let unclean = result.unclean();
    for (label, t) in &unclean {
        eprintln!(
            "earsim: {label} scheme={} broke an invariant: {} decode failures, {} monotonicity, {} codeability, {} duplicate, {} undelivered",
            t.scheme,
            t.decode_failures,
            t.monotonicity_violations,
            t.codeability_violations,
            t.duplicate_deliveries,
            t.undelivered
        );
    }
    Ok(if unclean.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn theory(loss: &str) -> earsim::Result<ExitCode> {
    let omegas = match LossPoint::parse(loss)? {
        LossPoint::Symmetric(w) => vec![w; 3],
        LossPoint::PerReceiver(v) => v,
    };
    let omega = ChannelParams::new(omegas)?;
    let mut out = io::stdout().lock();
    for s in Scheme::ALL {
        match analytic_lambda(s, &omega) {
            Some(l) => writeln!(out, "{s}\t{l}")?,
            None => writeln!(out, "{s}\t-")?,
        }
    }
    if omega.len() <= FLOW_SOLVER_MAX_RECEIVERS {
        let ledger = pattern_flow_solve(1.0, &omega.sorted().0)?;
        writeln!(out, "flow\t{}", ledger.lambda())?;
    }
    let w = omega.omegas();
    if w.len() == 3 && w.iter().all(|&x| x == w[0]) {
        writeln!(
            out,
            "unwanted_per_packet\t{}",
            unwanted_overhead(1.0, w[0])?
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn per(bers: &[f64]) -> earsim::Result<ExitCode> {
    let fec = FecModel::default();
    let mut out = io::stdout().lock();
    for &b in bers {
        writeln!(out, "{b}\t{}", ber_to_per(b, &fec)?)?;
    }
    Ok(ExitCode::SUCCESS)
}
