//! Erasure sampling and the bit-error to packet-erasure conversion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::ChannelParams;
use crate::error::{Error, Result};
use crate::pattern::ReceiverSet;

/// Reed-Solomon protected packet layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FecModel {
    pub packet_bytes: u32,
    /// Symbols per code block.
    pub rs_n: u32,
    /// Data symbols per code block.
    pub rs_k: u32,
    /// Correctable symbol errors per block.
    pub correctable: u32,
    pub symbol_bits: u32,
    /// Corrupted packets are always detected.
    pub crc: bool,
}

impl Default for FecModel {
    fn default() -> Self {
        FecModel {
            packet_bytes: 1532,
            rs_n: 32,
            rs_k: 28,
            correctable: 2,
            symbol_bits: 8,
            crc: true,
        }
    }
}

impl FecModel {
    pub fn validate(&self) -> Result<()> {
        if self.rs_n <= self.rs_k || self.rs_k == 0 {
            return Err(Error::Config(format!(
                "RS({}, {}) needs n > k > 0",
                self.rs_n, self.rs_k
            )));
        }
        if self.correctable != (self.rs_n - self.rs_k) / 2 {
            return Err(Error::Config(format!(
                "RS({}, {}) corrects {} symbols, not {}",
                self.rs_n,
                self.rs_k,
                (self.rs_n - self.rs_k) / 2,
                self.correctable
            )));
        }
        if self.packet_bytes == 0 || self.symbol_bits == 0 || self.symbol_bits > 32 {
            return Err(Error::Config(
                "packet and symbol sizes must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Code blocks needed to carry one packet.
    pub fn blocks(&self) -> u32 {
        let data_bits = self.rs_k as u64 * self.symbol_bits as u64;
        let packet_bits = self.packet_bytes as u64 * 8;
        packet_bits.div_ceil(data_bits) as u32
    }

    /// Probability that a symbol carries at least one bit error.
    pub fn symbol_error(&self, ber: f64) -> f64 {
        -(self.symbol_bits as f64 * (-ber).ln_1p()).exp_m1()
    }

    /// Probability that a block has more symbol errors than it can correct.
    pub fn block_failure(&self, ber: f64) -> f64 {
        let p = self.symbol_error(ber);
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let n = self.rs_n;
        let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
        // Summing the upper tail keeps full relative precision when p is tiny.
        let mut ln_choose = (0..=self.correctable)
            .map(|k| ((n - k) as f64 / (k + 1) as f64).ln())
            .sum::<f64>();
        let mut tail = 0.0;
        for k in self.correctable + 1..=n {
            tail += (ln_choose + k as f64 * ln_p + (n - k) as f64 * ln_q).exp();
            if k < n {
                ln_choose += ((n - k) as f64 / (k + 1) as f64).ln();
            }
        }
        tail.min(1.0)
    }
}

/// Packet erasure probability for independent bit errors at rate `ber`.
pub fn ber_to_per(ber: f64, fec: &FecModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidBer(ber));
    }
    fec.validate()?;
    let block = fec.block_failure(ber);
    if block >= 1.0 {
        return Ok(1.0);
    }
    Ok(-(fec.blocks() as f64 * (-block).ln_1p()).exp_m1())
}

/// Seed and trial index; every `(receiver, round)` pair gets its own
/// ChaCha stream, so results do not depend on how trials are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub trial: u64,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, trial: u64) -> Self {
        RngStream { seed, trial }
    }

    /// Generator for 1-based `receiver` in `round` (round 0 is the first
    /// transmission of every packet).
    pub fn generator(&self, receiver: usize, round: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let words = [
            mix(self.seed),
            mix(self.seed ^ mix(self.trial)),
            mix(self.trial.wrapping_add(mix(round))),
            mix(round ^ 0x5851_f42d_4c95_7f2d),
        ];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(receiver as u64);
        rng
    }
}

/// Per-transmission delivery sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryMatrix {
    receivers: usize,
    rows: Vec<u64>,
}

impl DeliveryMatrix {
    pub fn receivers(&self) -> usize {
        self.receivers
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn delivered(&self, transmission: usize, receiver: usize) -> bool {
        self.rows[transmission] & (1 << (receiver - 1)) != 0
    }

    /// Receivers that got `transmission`.
    pub fn row(&self, transmission: usize) -> ReceiverSet {
        ReceiverSet::from_mask(self.rows[transmission])
    }

    pub fn rows(&self) -> impl Iterator<Item = ReceiverSet> + '_ {
        self.rows.iter().map(|&m| ReceiverSet::from_mask(m))
    }
}

/// One Bernoulli draw per (transmission, receiver) with success `1 − ω_i`.
pub fn sample_round(
    omega: &ChannelParams,
    transmissions: usize,
    rng: &RngStream,
    round: u64,
) -> DeliveryMatrix {
    sample_with(omega.omegas(), transmissions, rng, round)
}

/// As [`sample_round`] on raw rates; `ω_i = 1` is allowed here.
pub fn sample_with(
    omegas: &[f64],
    transmissions: usize,
    rng: &RngStream,
    round: u64,
) -> DeliveryMatrix {
    let mut rows = vec![0u64; transmissions];
    for (idx, &w) in omegas.iter().enumerate() {
        let success = (1.0 - w).clamp(0.0, 1.0);
        let bit = 1u64 << idx;
        if success >= 1.0 {
            rows.iter_mut().for_each(|r| *r |= bit);
            continue;
        }
        if success <= 0.0 {
            continue;
        }
        let mut g = rng.generator(idx + 1, round);
        for r in rows.iter_mut() {
            if g.random_bool(success) {
                *r |= bit;
            }
        }
    }
    DeliveryMatrix {
        receivers: omegas.len(),
        rows,
    }
}
