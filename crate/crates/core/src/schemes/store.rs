use super::packet::{Packet, UnitId};
use crate::pattern::ReceiverSet;

/// What every receiver has heard, tracked independently of the sender's
/// pattern bookkeeping so decodes can be verified.
///
/// A receiver holds a unit if it received that unit directly or holds every
/// unit XORed into it. Nothing is ever evicted.
#[derive(Clone, Debug, Default)]
pub struct ReceiverStore {
    received: Vec<u64>,
}

impl ReceiverStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, id: UnitId, got: ReceiverSet) {
        let idx = id as usize;
        if idx >= self.received.len() {
            self.received.resize(idx + 1, 0);
        }
        self.received[idx] |= got.mask();
    }

    pub fn received(&self, id: UnitId) -> ReceiverSet {
        ReceiverSet::from_mask(self.received.get(id as usize).copied().unwrap_or(0))
    }

    pub fn holds(&self, units: &[Packet], receiver: usize, id: UnitId) -> bool {
        if self.received(id).contains(receiver) {
            return true;
        }
        let unit = &units[id as usize];
        !unit.members.is_empty() && unit.members.iter().all(|&m| self.holds(units, receiver, m))
    }

    /// Whether `receiver` recovers its native from the XOR of `members`.
    pub fn can_decode(&self, units: &[Packet], receiver: usize, members: &[UnitId]) -> bool {
        let mut target = None;
        for &m in members {
            if units[m as usize].pending.contains(receiver) {
                if target.is_some() {
                    return false;
                }
                target = Some(m);
            } else if !self.holds(units, receiver, m) {
                return false;
            }
        }
        let Some(t) = target else {
            return false;
        };
        let unit = &units[t as usize];
        if unit.is_native() {
            unit.constituents[0].dest as usize == receiver
        } else {
            self.can_decode(units, receiver, &unit.members)
        }
    }
}
