use crate::pattern::ReceiverSet;

pub type UnitId = u32;

/// A native packet: the `seq`-th packet requested by receiver `dest` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NativeId {
    pub dest: u8,
    pub seq: u32,
}

/// A retransmission unit: a native packet, or the XOR of earlier units that
/// a coded transmission left undelivered somewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub id: UnitId,
    /// Sorted. A receiver may own several when it already decoded some.
    pub constituents: Vec<NativeId>,
    /// Intended receivers of the constituents.
    pub destinations: ReceiverSet,
    /// Intended receivers that still lack their constituent.
    pub pending: ReceiverSet,
    /// Receivers able to reproduce this unit.
    pub pattern: ReceiverSet,
    /// Units XORed to form this one; empty for natives.
    pub members: Vec<UnitId>,
}

impl Packet {
    pub(crate) fn native(
        id: UnitId,
        native: NativeId,
        pattern: ReceiverSet,
        pending: ReceiverSet,
    ) -> Self {
        Packet {
            id,
            constituents: vec![native],
            destinations: ReceiverSet::singleton(native.dest as usize),
            pending,
            pattern,
            members: Vec::new(),
        }
    }

    /// Bare packet for header accounting.
    pub fn for_header(mut constituents: Vec<NativeId>) -> Self {
        constituents.sort();
        let destinations = constituents.iter().map(|c| c.dest as usize).collect();
        Packet {
            id: 0,
            constituents,
            destinations,
            pending: destinations,
            pattern: ReceiverSet::EMPTY,
            members: Vec::new(),
        }
    }

    /// Number of natives XORed in.
    pub fn nc_count(&self) -> usize {
        self.constituents.len()
    }

    pub fn is_native(&self) -> bool {
        self.members.is_empty()
    }
}

/// The native `receiver` still awaits inside unit `id`.
pub(crate) fn awaited_native(units: &[Packet], id: UnitId, receiver: usize) -> Option<NativeId> {
    let unit = &units[id as usize];
    if !unit.pending.contains(receiver) {
        return None;
    }
    if unit.is_native() {
        return Some(unit.constituents[0]);
    }
    unit.members
        .iter()
        .find_map(|&m| awaited_native(units, m, receiver))
}
