//! Round-based retransmission schemes.
//!
//! A trial sends `K` packets to each of `N` receivers once, then retransmits
//! in rounds. Every round schedules each outstanding unit exactly once,
//! samples all deliveries, and only then applies feedback.
//!
//! * [`Scheme::Arq`] resends every lost packet alone.
//! * [`Scheme::NcArq`] XORs lost natives whose destinations overheard each
//!   other. Overhearing is judged from the first transmission only, and a
//!   coded packet that fails somewhere falls back to its natives.
//! * [`Scheme::Ear`] also tracks who overheard retransmissions. A coded
//!   packet that fails somewhere becomes a unit of its own, with the loss
//!   pattern of everyone able to rebuild it, and can be XORed again.

mod engine;
mod packet;
mod queues;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use engine::Simulator;
pub use packet::{NativeId, Packet, UnitId};
pub use queues::{QueueKey, RescueQueues, Schedule, Scheduler};
pub use store::ReceiverStore;

use crate::analytic::ChannelParams;
use crate::channel::RngStream;
use crate::error::{Error, Result};

pub const DEFAULT_ROUND_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Arq,
    NcArq,
    Ear,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Arq, Scheme::NcArq, Scheme::Ear];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Arq => "arq",
            Scheme::NcArq => "ncarq",
            Scheme::Ear => "ear",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "arq" | "harq" => Ok(Scheme::Arq),
            "ncarq" | "ncharq" => Ok(Scheme::NcArq),
            "ear" => Ok(Scheme::Ear),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub scheme: Scheme,
    pub omega: ChannelParams,
    /// Packets per receiver.
    pub packets: usize,
    pub seed: u64,
    pub trial: u64,
    pub round_cap: u64,
    /// Keep per-state tallies (EAR only).
    pub diagnostics: bool,
}

impl TrialConfig {
    pub fn new(scheme: Scheme, omega: ChannelParams, packets: usize, seed: u64) -> Self {
        TrialConfig {
            scheme,
            omega,
            packets,
            seed,
            trial: 0,
            round_cap: DEFAULT_ROUND_CAP,
            diagnostics: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.packets == 0 {
            return Err(Error::Config(
                "at least one packet per receiver is required".into(),
            ));
        }
        if u32::try_from(self.packets * self.omega.len()).is_err() {
            return Err(Error::Config("batch too large".into()));
        }
        if let Some(&w) = self.omega.omegas().iter().find(|&&w| w > 0.99) {
            return Err(Error::InvalidLossRate(w));
        }
        if self.round_cap == 0 {
            return Err(Error::Config("round cap must be positive".into()));
        }
        Ok(())
    }
}

/// One retransmission round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u64,
    pub transmissions: u64,
    pub coded: u64,
    /// Units still queued after the round.
    pub outstanding: u64,
}

/// A native sent alone moved from pattern `from` to `to`, or was delivered
/// when `to` is `None`. Patterns are holder masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransferKey {
    pub dest: usize,
    pub from: u64,
    pub to: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialResult {
    pub scheme: Scheme,
    pub receivers: usize,
    pub packets: usize,
    pub initial_transmissions: u64,
    pub retransmissions: u64,
    pub coded_transmissions: u64,
    /// Coded transmissions mixing two or more coded units.
    pub coded_with_coded: u64,
    /// Coded units sent alone.
    pub coded_solo: u64,
    /// Coded units sent alone although some non-destination holds them.
    pub unwanted_retransmissions: u64,
    pub rounds: u64,
    /// Header bytes over all retransmissions.
    pub overhead_a_bytes: u64,
    pub overhead_b_bytes: u64,
    /// Scheme A header bytes over coded transmissions only.
    pub coded_overhead_a_bytes: u64,
    pub decode_failures: u64,
    pub monotonicity_violations: u64,
    pub codeability_violations: u64,
    pub duplicate_deliveries: u64,
    pub undelivered: u64,
    pub history: Vec<RoundRecord>,
    pub transfers: Option<BTreeMap<TransferKey, u64>>,
    /// Coded units sent alone, keyed by (pattern, pending) masks.
    pub coded_solo_states: Option<BTreeMap<(u64, u64), u64>>,
}

impl TrialResult {
    pub(crate) fn empty(scheme: Scheme, receivers: usize, packets: usize, track: bool) -> Self {
        TrialResult {
            scheme,
            receivers,
            packets,
            initial_transmissions: 0,
            retransmissions: 0,
            coded_transmissions: 0,
            coded_with_coded: 0,
            coded_solo: 0,
            unwanted_retransmissions: 0,
            rounds: 0,
            overhead_a_bytes: 0,
            overhead_b_bytes: 0,
            coded_overhead_a_bytes: 0,
            decode_failures: 0,
            monotonicity_violations: 0,
            codeability_violations: 0,
            duplicate_deliveries: 0,
            undelivered: 0,
            history: Vec::new(),
            transfers: track.then(BTreeMap::new),
            coded_solo_states: track.then(BTreeMap::new),
        }
    }

    /// Retransmissions per delivered packet.
    pub fn lambda(&self) -> f64 {
        self.retransmissions as f64 / (self.packets * self.receivers) as f64
    }

    pub fn mean_overhead_a(&self) -> f64 {
        per_transmission(self.overhead_a_bytes, self.retransmissions)
    }

    pub fn mean_overhead_b(&self) -> f64 {
        per_transmission(self.overhead_b_bytes, self.retransmissions)
    }

    /// Mean Scheme A header over transmissions that combine packets.
    pub fn mean_coded_overhead_a(&self) -> f64 {
        per_transmission(self.coded_overhead_a_bytes, self.coded_transmissions)
    }

    /// No safety invariant was broken and every native arrived.
    pub fn is_clean(&self) -> bool {
        self.decode_failures == 0
            && self.monotonicity_violations == 0
            && self.codeability_violations == 0
            && self.duplicate_deliveries == 0
            && self.undelivered == 0
    }
}

fn per_transmission(bytes: u64, count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        bytes as f64 / count as f64
    }
}

/// Runs one seeded trial to completion.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    config.validate()?;
    let rng = RngStream::new(config.seed, config.trial);
    let mut sim = Simulator::new(
        config.scheme,
        config.omega.clone(),
        config.packets,
        config.diagnostics,
    );
    sim.initial_phase(&rng)?;
    sim.run(&rng, config.round_cap)?;
    Ok(sim.into_result())
}
