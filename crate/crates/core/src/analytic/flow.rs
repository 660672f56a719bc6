//! Pattern-flow ledger.
//!
//! Follows every native loss state of every destination through repeated
//! retransmission. Each state's queue receives its share of the initial
//! losses plus whatever lighter states of the same destination hand over;
//! rescuing it costs `inflow / (1 - stay)` transmissions and forwards
//! `rescue × Pr{to | from}` packets to every heavier state.
//!
//! Coded packets are treated as divisible into natives that share the coded
//! packet's state, so the per-primary-set totals reproduce the closed form
//! exactly; the simulator measures what that idealisation hides.

use std::collections::HashMap;

use crate::analytic::{initial_pattern_prob, ChannelParams};
use crate::error::{Error, Result};
use crate::pattern::{LossPattern, ReceiverSet};

/// The number of states grows as `N · 2^(N-1)` and transfers as `N · 3^(N-1)`.
pub const FLOW_SOLVER_MAX_RECEIVERS: usize = 10;

/// Flow through one `(destination, pattern)` state.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowEntry {
    pub dest: usize,
    pub pattern: LossPattern,
    /// Expected losses landing here after the first transmission.
    pub original: f64,
    /// `original` plus every incoming transfer.
    pub inflow: f64,
    /// Expected transmissions while packets sit in this state.
    pub rescue_transmissions: f64,
    /// Expected packets handed to each heavier state.
    pub transfers: Vec<(LossPattern, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowLedger {
    pub receivers: usize,
    pub packets_per_receiver: f64,
    pub entries: Vec<FlowEntry>,
    /// Transmissions charged to each receiver's primary set, index `i - 1`.
    pub primary_totals: Vec<f64>,
}

impl FlowLedger {
    pub fn total(&self) -> f64 {
        self.primary_totals.iter().sum()
    }

    /// Mean retransmissions per delivered packet.
    pub fn lambda(&self) -> f64 {
        if self.packets_per_receiver == 0.0 {
            return 0.0;
        }
        self.total() / (self.packets_per_receiver * self.receivers as f64)
    }

    pub fn entry(&self, dest: usize, pattern: LossPattern) -> Option<&FlowEntry> {
        self.entries
            .iter()
            .find(|e| e.dest == dest && e.pattern == pattern)
    }

    /// Sum of transfers arriving at `(dest, pattern)`.
    pub fn incoming(&self, dest: usize, pattern: LossPattern) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.dest == dest)
            .flat_map(|e| e.transfers.iter())
            .filter(|(to, _)| *to == pattern)
            .map(|(_, amount)| amount)
            .sum()
    }
}

/// Solves the expected flow for `k` packets per receiver.
pub fn pattern_flow_solve(k: f64, omega: &ChannelParams) -> Result<FlowLedger> {
    omega.require_sorted()?;
    let n = omega.len();
    if n > FLOW_SOLVER_MAX_RECEIVERS {
        return Err(Error::FlowSolverLimit {
            receivers: n,
            max: FLOW_SOLVER_MAX_RECEIVERS,
        });
    }
    let mut ledger = FlowLedger {
        receivers: n,
        packets_per_receiver: k,
        entries: Vec::new(),
        primary_totals: vec![0.0; n],
    };
    if k == 0.0 {
        return Ok(ledger);
    }
    let omegas = omega.omegas();
    let full = ReceiverSet::all(n).mask();

    for dest in 1..=n {
        let dest_bit = 1u64 << (dest - 1);
        // Supersets have larger masks, so ascending mask order visits every
        // source before its targets.
        let mut inflow: HashMap<u64, f64> = HashMap::new();
        for mask in 0..=full {
            if mask & dest_bit != 0 {
                continue;
            }
            let pattern = LossPattern::from_holders(ReceiverSet::from_mask(mask), n)?;
            let original = k * initial_pattern_prob(pattern, dest, omega);
            let total_in = original + inflow.get(&mask).copied().unwrap_or(0.0);
            if total_in <= 0.0 {
                continue;
            }
            let missing = full & !mask;
            let stay: f64 = ReceiverSet::from_mask(missing)
                .iter()
                .map(|r| omegas[r - 1])
                .product();
            if stay >= 1.0 {
                return Err(Error::DegenerateChannel);
            }
            let rescue = total_in / (1.0 - stay);

            // Every non-empty subset of the missing non-destination entries
            // can flip in one transmission while the destination fails.
            let flippable = missing & !dest_bit;
            let mut transfers = Vec::new();
            let mut gain = flippable;
            while gain != 0 {
                let pr: f64 = ReceiverSet::from_mask(missing)
                    .iter()
                    .map(|r| {
                        if gain & (1 << (r - 1)) != 0 {
                            1.0 - omegas[r - 1]
                        } else {
                            omegas[r - 1]
                        }
                    })
                    .product();
                let amount = rescue * pr;
                if amount > 0.0 {
                    let to = mask | gain;
                    *inflow.entry(to).or_insert(0.0) += amount;
                    transfers.push((
                        LossPattern::from_holders(ReceiverSet::from_mask(to), n)?,
                        amount,
                    ));
                }
                gain = (gain - 1) & flippable;
            }

            // Leading states of receiver `dest` hold nothing at or above it.
            if mask >> (dest - 1) == 0 {
                ledger.primary_totals[dest - 1] += rescue;
            }
            ledger.entries.push(FlowEntry {
                dest,
                pattern,
                original,
                inflow: total_in,
                rescue_transmissions: rescue,
                transfers,
            });
        }
    }
    Ok(ledger)
}
