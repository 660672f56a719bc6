use super::packet::{awaited_native, NativeId, Packet, UnitId};
use super::queues::{RescueQueues, Schedule, Scheduler};
use super::store::ReceiverStore;
use super::{RoundRecord, Scheme, TransferKey, TrialResult};
use crate::analytic::ChannelParams;
use crate::channel::{sample_round, RngStream};
use crate::error::{Error, Result};
use crate::overhead::HeaderModel;
use crate::pattern::{codeable_masks, LossPattern, ReceiverSet};

/// Sender state for one batch of `K` packets per receiver.
#[derive(Clone, Debug)]
pub struct Simulator {
    scheme: Scheme,
    omega: ChannelParams,
    k: usize,
    rank: Vec<usize>,
    units: Vec<Packet>,
    alive: Vec<bool>,
    live: Vec<UnitId>,
    spawned: Vec<UnitId>,
    /// Units sent this round, in order.
    touched: Vec<UnitId>,
    store: ReceiverStore,
    delivered: Vec<bool>,
    delivered_count: usize,
    scheduler: Scheduler,
    result: TrialResult,
}

impl Simulator {
    /// Empty sender; fill it with [`Simulator::initial_phase`] or
    /// [`Simulator::insert_native`].
    pub fn new(scheme: Scheme, omega: ChannelParams, k: usize, diagnostics: bool) -> Self {
        let n = omega.len();
        let (_, perm) = omega.sorted();
        let mut rank = vec![0; n];
        for (pos, &r) in perm.iter().enumerate() {
            rank[r - 1] = pos;
        }
        Simulator {
            scheme,
            k,
            rank,
            units: Vec::new(),
            alive: Vec::new(),
            live: Vec::new(),
            spawned: Vec::new(),
            touched: Vec::new(),
            store: ReceiverStore::new(),
            delivered: vec![false; k * n],
            delivered_count: 0,
            scheduler: Scheduler::new(n),
            result: TrialResult::empty(scheme, n, k, diagnostics),
            omega,
        }
    }

    pub fn receivers(&self) -> usize {
        self.omega.len()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn packet(&self, id: UnitId) -> &Packet {
        &self.units[id as usize]
    }

    pub fn store(&self) -> &ReceiverStore {
        &self.store
    }

    /// Outstanding units in FIFO order.
    pub fn live(&self) -> &[UnitId] {
        &self.live
    }

    pub fn queues(&self) -> RescueQueues {
        RescueQueues::from_units(self.live.iter().map(|&id| &self.units[id as usize]))
    }

    pub fn result(&self) -> &TrialResult {
        &self.result
    }

    fn native_index(&self, n: NativeId) -> usize {
        (n.dest as usize - 1) * self.k + n.seq as usize
    }

    fn push_unit(&mut self, unit: Packet, received: ReceiverSet) -> UnitId {
        let id = unit.id;
        self.store.record(id, received);
        self.alive.push(!unit.pending.is_empty());
        self.units.push(unit);
        id
    }

    /// Adds native `seq` for `dest` whose first transmission reached
    /// `received`.
    pub fn insert_native(
        &mut self,
        dest: usize,
        seq: u32,
        received: ReceiverSet,
    ) -> Result<UnitId> {
        let n = self.receivers();
        if dest == 0 || dest > n {
            return Err(Error::ReceiverOutOfRange {
                index: dest,
                receivers: n,
            });
        }
        if seq as usize >= self.k {
            return Err(Error::Config(format!(
                "sequence {seq} outside a batch of {}",
                self.k
            )));
        }
        if !received.is_subset(ReceiverSet::all(n)) {
            return Err(Error::LengthMismatch {
                expected: n,
                got: received.iter().last().unwrap_or(0),
            });
        }
        let native = NativeId {
            dest: dest as u8,
            seq,
        };
        let id = self.units.len() as UnitId;
        let pending = if received.contains(dest) {
            ReceiverSet::EMPTY
        } else {
            ReceiverSet::singleton(dest)
        };
        let unit = Packet::native(id, native, received.without(dest), pending);
        self.push_unit(unit, received);
        if pending.is_empty() {
            self.mark_delivered(native);
        } else {
            self.live.push(id);
            self.scheduler.attach(&self.units[id as usize]);
        }
        Ok(id)
    }

    /// Sends every native once and queues whatever its destination missed.
    pub fn initial_phase(&mut self, rng: &RngStream) -> Result<()> {
        let (n, k) = (self.receivers(), self.k);
        let deliveries = sample_round(&self.omega, n * k, rng, 0);
        self.units.reserve(n * k);
        let mut row = 0;
        for dest in 1..=n {
            for seq in 0..k {
                self.insert_native(dest, seq as u32, deliveries.row(row))?;
                row += 1;
            }
        }
        self.result.initial_transmissions = (n * k) as u64;
        Ok(())
    }

    fn mark_delivered(&mut self, native: NativeId) {
        let idx = self.native_index(native);
        if self.delivered[idx] {
            self.result.duplicate_deliveries += 1;
        } else {
            self.delivered[idx] = true;
            self.delivered_count += 1;
        }
    }

    /// This round's transmissions.
    pub fn schedule(&mut self) -> Schedule {
        match self.scheme {
            Scheme::Arq => Scheduler::solo(&self.live),
            Scheme::NcArq => self.scheduler.coded(&self.units, &self.rank, None),
            Scheme::Ear => {
                let tier = self.scheduler.lightest();
                self.scheduler.coded(&self.units, &self.rank, tier)
            }
        }
    }

    /// Feedback for one transmission as per-receiver booleans.
    pub fn apply_feedback(&mut self, tx: &[UnitId], deliveries: &[bool]) -> Result<()> {
        if deliveries.len() != self.receivers() {
            return Err(Error::FeedbackLength {
                expected: self.receivers(),
                got: deliveries.len(),
            });
        }
        let got = LossPattern::from_bools(deliveries)?.holders();
        self.apply_delivery(tx, got);
        Ok(())
    }

    /// Updates queues and stores after `tx` reached exactly `got`.
    pub fn apply_delivery(&mut self, tx: &[UnitId], got: ReceiverSet) {
        let n = self.receivers();
        let got = got.intersection(ReceiverSet::all(n));
        let constituents: usize = tx
            .iter()
            .map(|&id| self.units[id as usize].nc_count())
            .sum();
        for &id in tx {
            self.scheduler.detach(&self.units[id as usize]);
        }
        self.touched.extend_from_slice(tx);
        let r = &mut self.result;
        r.retransmissions += 1;
        let a = HeaderModel::scheme_a().len_for(constituents, n);
        r.overhead_a_bytes += a;
        if tx.len() > 1 {
            r.coded_overhead_a_bytes += a;
        }
        r.overhead_b_bytes += HeaderModel::scheme_b().len_for(constituents, n);
        if tx.len() == 1 {
            self.apply_solo(tx[0], got);
        } else {
            self.apply_coded(tx, got);
        }
    }

    fn apply_solo(&mut self, id: UnitId, got: ReceiverSet) {
        let idx = id as usize;
        let (pattern, pending, native) = {
            let u = &self.units[idx];
            (u.pattern, u.pending, u.is_native())
        };
        if !native {
            self.result.coded_solo += 1;
            if let Some(t) = self.result.coded_solo_states.as_mut() {
                *t.entry((pattern.mask(), pending.mask())).or_insert(0) += 1;
            }
            if !pattern.is_empty() {
                self.result.unwanted_retransmissions += 1;
            }
        }
        for j in got.intersection(pending).iter() {
            if !self.store.can_decode(&self.units, j, &[id]) {
                self.result.decode_failures += 1;
            }
            let c = awaited_native(&self.units, id, j).expect("pending receiver awaits a native");
            self.mark_delivered(c);
        }
        self.store.record(id, got);
        let new_pending = pending.difference(got);
        if self.scheme == Scheme::Ear {
            let new_pattern = pattern.union(got);
            if !pattern.is_subset(new_pattern) {
                self.result.monotonicity_violations += 1;
            }
            if native {
                if let Some(t) = self.result.transfers.as_mut() {
                    let dest = pending.iter().next().unwrap_or(0);
                    let to = (!new_pending.is_empty()).then_some(new_pattern.mask());
                    *t.entry(TransferKey {
                        dest,
                        from: pattern.mask(),
                        to,
                    })
                    .or_insert(0) += 1;
                }
            }
            self.units[idx].pattern = new_pattern;
        }
        self.units[idx].pending = new_pending;
        if new_pending.is_empty() {
            self.alive[idx] = false;
        }
    }

    fn apply_coded(&mut self, tx: &[UnitId], got: ReceiverSet) {
        let r = &mut self.result;
        r.coded_transmissions += 1;
        let masks: Vec<(u64, u64)> = tx
            .iter()
            .map(|&id| {
                let u = &self.units[id as usize];
                (u.pattern.mask(), u.pending.mask())
            })
            .collect();
        if !codeable_masks(&masks) {
            r.codeability_violations += 1;
        }
        if tx
            .iter()
            .filter(|&&id| !self.units[id as usize].is_native())
            .count()
            >= 2
        {
            r.coded_with_coded += 1;
        }
        for &m in tx {
            let pending = self.units[m as usize].pending;
            for j in got.intersection(pending).iter() {
                if !self.store.can_decode(&self.units, j, tx) {
                    self.result.decode_failures += 1;
                }
                let c =
                    awaited_native(&self.units, m, j).expect("pending receiver awaits a native");
                self.mark_delivered(c);
            }
        }
        match self.scheme {
            Scheme::Ear => {
                let waiting = masks.iter().fold(0u64, |acc, m| acc | m.1) & !got.mask();
                let inherited = masks.iter().fold(u64::MAX, |acc, m| acc & m.0);
                for &m in tx {
                    self.alive[m as usize] = false;
                }
                if waiting == 0 {
                    return;
                }
                let mut constituents: Vec<NativeId> = tx
                    .iter()
                    .flat_map(|&m| self.units[m as usize].constituents.iter().copied())
                    .collect();
                constituents.sort();
                let destinations = constituents.iter().map(|c| c.dest as usize).collect();
                let pattern = ReceiverSet::from_mask(inherited | got.mask());
                if !ReceiverSet::from_mask(inherited).is_subset(pattern) {
                    self.result.monotonicity_violations += 1;
                }
                let id = self.units.len() as UnitId;
                let unit = Packet {
                    id,
                    constituents,
                    destinations,
                    pending: ReceiverSet::from_mask(waiting),
                    pattern,
                    members: tx.to_vec(),
                };
                self.push_unit(unit, got);
                self.spawned.push(id);
            }
            Scheme::NcArq | Scheme::Arq => {
                for &m in tx {
                    let u = &mut self.units[m as usize];
                    u.pending = u.pending.difference(got);
                    if u.pending.is_empty() {
                        self.alive[m as usize] = false;
                    }
                }
            }
        }
    }

    /// Drops finished units and queues units created this round.
    pub fn finish_round(&mut self) {
        let alive = &self.alive;
        self.live.retain(|&id| alive[id as usize]);
        for id in self.touched.drain(..) {
            if alive[id as usize] {
                self.scheduler.attach(&self.units[id as usize]);
            }
        }
        for &id in &self.spawned {
            self.scheduler.attach(&self.units[id as usize]);
        }
        self.live.append(&mut self.spawned);
    }

    /// One full round: schedule, sample, apply.
    pub fn step(&mut self, rng: &RngStream, round: u64) -> RoundRecord {
        let schedule = self.schedule();
        let deliveries = sample_round(&self.omega, schedule.len(), rng, round);
        let coded = schedule.iter().filter(|tx| tx.len() > 1).count() as u64;
        for (tx, got) in schedule.iter().zip(deliveries.rows()) {
            self.apply_delivery(tx, got);
        }
        self.finish_round();
        let record = RoundRecord {
            round,
            transmissions: schedule.len() as u64,
            coded,
            outstanding: self.live.len() as u64,
        };
        self.result.rounds = round;
        self.result.history.push(record);
        record
    }

    /// Runs rounds until every queue is empty.
    pub fn run(&mut self, rng: &RngStream, round_cap: u64) -> Result<()> {
        let mut round = self.result.rounds;
        while !self.live.is_empty() {
            if round >= round_cap {
                return Err(Error::RoundCap {
                    cap: round_cap,
                    outstanding: self.live.len(),
                });
            }
            round += 1;
            self.step(rng, round);
        }
        Ok(())
    }

    pub fn into_result(mut self) -> TrialResult {
        self.result.undelivered = (self.delivered.len() - self.delivered_count) as u64;
        self.result
    }

    /// Copy of the tallies so far, with undelivered natives counted.
    pub fn snapshot(&self) -> TrialResult {
        let mut r = self.result.clone();
        r.undelivered = (self.delivered.len() - self.delivered_count) as u64;
        r
    }
}
