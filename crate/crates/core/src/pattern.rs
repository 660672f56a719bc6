//! Loss-pattern algebra.
//!
//! A [`LossPattern`] records which of the `N` receivers currently hold a
//! packet. Receivers are numbered from 1 in every public signature; bit
//! `i - 1` of the underlying mask stands for receiver `i`.
//!
//! A set of queued packets can share one XOR transmission when their
//! destination sets are pairwise disjoint and each destination already holds
//! every other constituent ([`can_code`]). Restricting the receivers outside
//! all destination sets to hold none of the constituents makes the grouping
//! of a pattern unique ([`unique_code_group`]).

use std::fmt;

use crate::analytic::ChannelParams;
use crate::error::{Error, Result};

/// Largest supported receiver count.
pub const MAX_RECEIVERS: usize = 64;

/// A set of receiver indices packed into a 64-bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReceiverSet(u64);

impl ReceiverSet {
    pub const EMPTY: ReceiverSet = ReceiverSet(0);

    pub const fn from_mask(mask: u64) -> Self {
        ReceiverSet(mask)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    /// The set `{1, ..., n}`.
    pub fn all(n: usize) -> Self {
        assert!(
            n <= MAX_RECEIVERS,
            "receiver count {n} exceeds {MAX_RECEIVERS}"
        );
        if n == MAX_RECEIVERS {
            ReceiverSet(u64::MAX)
        } else {
            ReceiverSet((1u64 << n) - 1)
        }
    }

    /// Panics if `receiver` is not in `1..=64`.
    pub fn singleton(receiver: usize) -> Self {
        assert!(
            (1..=MAX_RECEIVERS).contains(&receiver),
            "receiver index {receiver} outside 1..=64"
        );
        ReceiverSet(1u64 << (receiver - 1))
    }

    /// Builds a set from 1-based indices, checking each against `n`.
    pub fn from_receivers<I>(receivers: I, n: usize) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut mask = 0u64;
        for r in receivers {
            if r == 0 || r > n || r > MAX_RECEIVERS {
                return Err(Error::ReceiverOutOfRange {
                    index: r,
                    receivers: n,
                });
            }
            mask |= 1u64 << (r - 1);
        }
        Ok(ReceiverSet(mask))
    }

    pub fn contains(self, receiver: usize) -> bool {
        (1..=MAX_RECEIVERS).contains(&receiver) && self.0 & (1u64 << (receiver - 1)) != 0
    }

    pub fn with(self, receiver: usize) -> Self {
        self.union(Self::singleton(receiver))
    }

    pub fn without(self, receiver: usize) -> Self {
        self.difference(Self::singleton(receiver))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ReceiverSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ReceiverSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ReceiverSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Ascending 1-based receiver indices.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let bit = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(bit + 1)
        })
    }
}

impl FromIterator<usize> for ReceiverSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(ReceiverSet::EMPTY, ReceiverSet::with)
    }
}

impl fmt::Display for ReceiverSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, r) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("}")
    }
}

/// Who holds a packet: entry `i` is true when receiver `i` has it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LossPattern {
    holders: ReceiverSet,
    receivers: u8,
}

impl LossPattern {
    /// The all-zero pattern over `receivers` entries.
    pub fn empty(receivers: usize) -> Result<Self> {
        if receivers == 0 || receivers > MAX_RECEIVERS {
            return Err(Error::ReceiverCount(receivers));
        }
        Ok(LossPattern {
            holders: ReceiverSet::EMPTY,
            receivers: receivers as u8,
        })
    }

    pub fn from_bools(entries: &[bool]) -> Result<Self> {
        let mut pattern = Self::empty(entries.len())?;
        for (i, &held) in entries.iter().enumerate() {
            if held {
                pattern.holders = pattern.holders.with(i + 1);
            }
        }
        Ok(pattern)
    }

    /// Convenience for literals: `from_bits(&[0, 1, 1])`.
    pub fn from_bits(entries: &[u8]) -> Result<Self> {
        let bools: Vec<bool> = entries.iter().map(|&b| b != 0).collect();
        Self::from_bools(&bools)
    }

    pub fn from_holders(holders: ReceiverSet, receivers: usize) -> Result<Self> {
        let mut pattern = Self::empty(receivers)?;
        if !holders.is_subset(ReceiverSet::all(receivers)) {
            let index = holders.iter().last().unwrap_or(0);
            return Err(Error::ReceiverOutOfRange { index, receivers });
        }
        pattern.holders = holders;
        Ok(pattern)
    }

    pub fn holders(self) -> ReceiverSet {
        self.holders
    }

    /// Receivers whose entry is still zero.
    pub fn missing(self) -> ReceiverSet {
        ReceiverSet::all(self.len()).difference(self.holders)
    }

    pub fn len(self) -> usize {
        self.receivers as usize
    }

    pub fn is_empty(self) -> bool {
        self.receivers == 0
    }

    pub fn holds(self, receiver: usize) -> bool {
        self.holders.contains(receiver)
    }

    /// Number of receivers holding the packet.
    pub fn weight(self) -> usize {
        self.holders.len()
    }

    pub fn to_bools(self) -> Vec<bool> {
        (1..=self.len()).map(|r| self.holds(r)).collect()
    }

    pub fn with_holders(self, extra: ReceiverSet) -> Self {
        LossPattern {
            holders: self
                .holders
                .union(extra)
                .intersection(ReceiverSet::all(self.len())),
            receivers: self.receivers,
        }
    }

    pub fn without_holders(self, gone: ReceiverSet) -> Self {
        LossPattern {
            holders: self.holders.difference(gone),
            receivers: self.receivers,
        }
    }
}

impl fmt::Display for LossPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for r in 1..=self.len() {
            if r > 1 {
                f.write_str(",")?;
            }
            f.write_str(if self.holds(r) { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

/// Intended recipients of a packet, or of every packet in one queue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DestinationSet(ReceiverSet);

impl DestinationSet {
    pub fn new(receivers: ReceiverSet) -> Result<Self> {
        if receivers.is_empty() {
            return Err(Error::EmptyDestinations);
        }
        Ok(DestinationSet(receivers))
    }

    pub fn single(receiver: usize) -> Self {
        DestinationSet(ReceiverSet::singleton(receiver))
    }

    pub fn receivers(self) -> ReceiverSet {
        self.0
    }
}

impl fmt::Display for DestinationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Loss patterns whose packets can share one XOR transmission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeGroup {
    members: Vec<(LossPattern, DestinationSet)>,
}

impl CodeGroup {
    pub fn members(&self) -> &[(LossPattern, DestinationSet)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Union of all member destination sets.
    pub fn destinations(&self) -> ReceiverSet {
        self.members
            .iter()
            .fold(ReceiverSet::EMPTY, |acc, (_, d)| acc.union(d.receivers()))
    }

    pub fn contains(&self, pattern: LossPattern, dest: DestinationSet) -> bool {
        self.members.iter().any(|&(p, d)| p == pattern && d == dest)
    }
}

/// Number of receivers holding the packet.
pub fn weight(p: LossPattern) -> usize {
    p.weight()
}

/// Mask-level codeability test shared by [`can_code`] and the schedulers.
///
/// Each member is `(holders, destinations)`. Valid iff destination sets are
/// pairwise disjoint and every destination of member `i` is missing only
/// member `i`.
pub(crate) fn codeable_masks(members: &[(u64, u64)]) -> bool {
    let mut seen = 0u64;
    for &(_, dest) in members {
        if dest == 0 || dest & seen != 0 {
            return false;
        }
        seen |= dest;
    }
    members.iter().enumerate().all(|(i, &(holders_i, dest_i))| {
        holders_i & dest_i == 0
            && members
                .iter()
                .enumerate()
                .all(|(t, &(holders_t, _))| t == i || dest_i & !holders_t == 0)
    })
}

/// Whether the packets behind `members` can be XORed into one transmission
/// that every destination decodes.
pub fn can_code(members: &[(LossPattern, DestinationSet)]) -> Result<bool> {
    let n = members.first().map(|(p, _)| p.len()).unwrap_or(0);
    if members.len() < 2 || members.len() > n {
        return Err(Error::GroupSize {
            max: n.max(2),
            got: members.len(),
        });
    }
    let all = ReceiverSet::all(n);
    for (p, d) in members {
        if p.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: p.len(),
            });
        }
        if !d.receivers().is_subset(all) {
            let index = d.receivers().difference(all).iter().next().unwrap_or(0);
            return Err(Error::ReceiverOutOfRange {
                index,
                receivers: n,
            });
        }
    }
    let masks: Vec<(u64, u64)> = members
        .iter()
        .map(|(p, d)| (p.holders().mask(), d.receivers().mask()))
        .collect();
    Ok(codeable_masks(&masks))
}

/// The maximal code group containing `(p, dest)` when receivers outside all
/// destination sets must hold none of the members.
///
/// Every holder `j` of `p` contributes one partner: the pattern that holds
/// the destinations of `p` and every other holder, destined to `j` alone.
/// A pattern nobody holds yields a degenerate group of size one.
pub fn unique_code_group(p: LossPattern, dest: DestinationSet) -> Result<CodeGroup> {
    let n = p.len();
    if !dest.receivers().is_subset(ReceiverSet::all(n)) {
        let index = dest.receivers().iter().last().unwrap_or(0);
        return Err(Error::ReceiverOutOfRange {
            index,
            receivers: n,
        });
    }
    if !p.holders().is_disjoint(dest.receivers()) {
        return Err(Error::IntendedHeld {
            pattern: p.to_string(),
        });
    }
    let span = p.holders().union(dest.receivers());
    let mut members = Vec::with_capacity(p.weight() + 1);
    members.push((p, dest));
    for j in p.holders().iter() {
        let partner = LossPattern::from_holders(span.without(j), n)?;
        members.push((partner, DestinationSet::single(j)));
    }
    Ok(CodeGroup { members })
}

/// Size and destination loss rate of one rescue queue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueueLoad {
    pub size: usize,
    pub loss: f64,
}

impl QueueLoad {
    pub fn new(size: usize, loss: f64) -> Self {
        QueueLoad { size, loss }
    }
}

/// True when every packet of `a` can ride inside coded transmissions with
/// `b` until `a` empties: `a` is no larger and its destination no lossier.
pub fn dominates(a: QueueLoad, b: QueueLoad) -> bool {
    a.size <= b.size && a.loss <= b.loss
}

/// Probability that one transmission of a packet in state `from` leaves it
/// in state `to` with every intended receiver still missing it.
///
/// `to == from` gives the stay probability. Returns zero whenever `to`
/// drops a holder or holds an intended receiver, since neither can happen.
pub fn transition_prob(
    from: LossPattern,
    to: LossPattern,
    dest: DestinationSet,
    omega: &ChannelParams,
) -> f64 {
    if from.len() != to.len() || from.len() != omega.len() {
        return 0.0;
    }
    if !from.holders().is_subset(to.holders()) || !to.holders().is_disjoint(dest.receivers()) {
        return 0.0;
    }
    let gained = to.holders().difference(from.holders());
    let omegas = omega.omegas();
    let gain: f64 = gained.iter().map(|r| 1.0 - omegas[r - 1]).product();
    let still_missing: f64 = to.missing().iter().map(|r| omegas[r - 1]).product();
    gain * still_missing
}

/// Probability that one transmission changes nothing.
pub fn stay_prob(p: LossPattern, omega: &ChannelParams) -> f64 {
    let omegas = omega.omegas();
    p.missing().iter().map(|r| omegas[r - 1]).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(bits: &[u8]) -> LossPattern {
        LossPattern::from_bits(bits).unwrap()
    }

    fn dest(rs: &[usize]) -> DestinationSet {
        DestinationSet::new(rs.iter().copied().collect()).unwrap()
    }

    fn chan(omegas: &[f64]) -> ChannelParams {
        ChannelParams::new(omegas.to_vec()).unwrap()
    }

    /// Simulates the receivers' XOR stores: member `i` is decodable at each
    /// of its destinations iff the destination holds every other member.
    fn brute_force_decodable(members: &[(LossPattern, DestinationSet)]) -> bool {
        let mut claimed = ReceiverSet::EMPTY;
        for (_, d) in members {
            if !claimed.is_disjoint(d.receivers()) {
                return false;
            }
            claimed = claimed.union(d.receivers());
        }
        for (i, (p, d)) in members.iter().enumerate() {
            for r in d.receivers().iter() {
                if p.holds(r) {
                    return false;
                }
                let mut residue: Vec<usize> = (0..members.len()).collect();
                residue.retain(|&t| t == i || !members[t].0.holds(r));
                if residue != vec![i] {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn weight_counts_ones() {
        assert_eq!(weight(pat(&[0, 0, 0])), 0);
        assert_eq!(weight(pat(&[0, 1, 1])), 2);
        assert_eq!(weight(pat(&[1, 0])), 1);
    }

    #[test]
    fn display_round_trips_visually() {
        assert_eq!(pat(&[0, 1, 1]).to_string(), "[0,1,1]");
        assert_eq!(dest(&[1, 3]).to_string(), "{1,3}");
    }

    #[test]
    fn can_code_examples() {
        assert!(can_code(&[(pat(&[0, 1]), dest(&[1])), (pat(&[1, 0]), dest(&[2]))]).unwrap());
        assert!(!can_code(&[(pat(&[0, 0]), dest(&[1])), (pat(&[1, 0]), dest(&[2]))]).unwrap());
        let triple = [
            (pat(&[0, 1, 1]), dest(&[1])),
            (pat(&[1, 0, 1]), dest(&[2])),
            (pat(&[1, 1, 0]), dest(&[3])),
        ];
        assert!(can_code(&triple).unwrap());
        assert!(brute_force_decodable(&triple));
    }

    #[test]
    fn can_code_rejects_bad_shapes() {
        assert!(matches!(
            can_code(&[(pat(&[0, 1]), dest(&[1]))]),
            Err(Error::GroupSize { .. })
        ));
        let too_many = [
            (pat(&[0, 1]), dest(&[1])),
            (pat(&[1, 0]), dest(&[2])),
            (pat(&[1, 0]), dest(&[2])),
        ];
        assert!(matches!(can_code(&too_many), Err(Error::GroupSize { .. })));
        assert!(matches!(
            can_code(&[(pat(&[0, 1]), dest(&[1])), (pat(&[1, 0, 0]), dest(&[2]))]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn overlapping_destinations_never_code() {
        assert!(
            !can_code(&[(pat(&[0, 1, 1]), dest(&[1])), (pat(&[0, 1, 1]), dest(&[1]))]).unwrap()
        );
    }

    #[test]
    fn unique_group_examples() {
        let g = unique_code_group(pat(&[0, 1, 1]), dest(&[1])).unwrap();
        assert_eq!(
            g.members(),
            &[
                (pat(&[0, 1, 1]), dest(&[1])),
                (pat(&[1, 0, 1]), dest(&[2])),
                (pat(&[1, 1, 0]), dest(&[3])),
            ]
        );
        let lone = unique_code_group(pat(&[0, 0]), dest(&[1])).unwrap();
        assert_eq!(lone.members(), &[(pat(&[0, 0]), dest(&[1]))]);
        let pair = unique_code_group(pat(&[0, 1]), dest(&[1])).unwrap();
        assert_eq!(
            pair.members(),
            &[(pat(&[0, 1]), dest(&[1])), (pat(&[1, 0]), dest(&[2]))]
        );
    }

    #[test]
    fn unique_group_rejects_held_destination() {
        assert!(matches!(
            unique_code_group(pat(&[1, 1, 0]), dest(&[1])),
            Err(Error::IntendedHeld { .. })
        ));
    }

    #[test]
    fn unique_group_for_coded_destination() {
        // Coded unit for {1,2} overheard by receiver 3 pairs with receiver 3's
        // packet held by both 1 and 2.
        let g = unique_code_group(pat(&[0, 0, 1]), dest(&[1, 2])).unwrap();
        assert_eq!(g.members()[1], (pat(&[1, 1, 0]), dest(&[3])));
        assert!(can_code(g.members()).unwrap());
    }

    /// Enumerates every subset of (pattern, single destination) pairs for
    /// N = 3 that passes the codeability test and has all-zero columns
    /// outside the destinations; each input must lie in exactly one
    /// maximal such group, which must match `unique_code_group`.
    #[test]
    fn unique_group_matches_enumeration() {
        let n = 3usize;
        let mut states = Vec::new();
        for d in 1..=n {
            for mask in 0u64..(1 << n) {
                if mask & (1 << (d - 1)) == 0 {
                    states.push((
                        LossPattern::from_holders(ReceiverSet::from_mask(mask), n).unwrap(),
                        DestinationSet::single(d),
                    ));
                }
            }
        }
        let mut restricted = Vec::new();
        for subset in 1u32..(1 << states.len()) {
            let members: Vec<_> = (0..states.len())
                .filter(|i| subset & (1 << i) != 0)
                .map(|i| states[i])
                .collect();
            if members.len() < 2 || members.len() > n {
                continue;
            }
            if !can_code(&members).unwrap() {
                continue;
            }
            let dests = members
                .iter()
                .fold(ReceiverSet::EMPTY, |a, (_, d)| a.union(d.receivers()));
            let outside_clear = members.iter().all(|(p, _)| p.holders().is_subset(dests));
            if outside_clear {
                restricted.push(members);
            }
        }
        for &(p, d) in &states {
            let containing: Vec<_> = restricted.iter().filter(|g| g.contains(&(p, d))).collect();
            let expected = unique_code_group(p, d).unwrap();
            if p.weight() == 0 {
                assert!(containing.is_empty());
                continue;
            }
            let maximal = containing.iter().max_by_key(|g| g.len()).unwrap();
            assert_eq!(maximal.len(), expected.len());
            for m in maximal.iter() {
                assert!(expected.contains(m.0, m.1), "{p} {d}: {} missing", m.0);
            }
            // Every restricted group containing the input is a subset of it.
            for g in containing {
                assert!(g.iter().all(|m| expected.contains(m.0, m.1)));
            }
        }
    }

    #[test]
    fn dominates_examples() {
        assert!(dominates(QueueLoad::new(10, 0.2), QueueLoad::new(20, 0.5)));
        assert!(!dominates(QueueLoad::new(20, 0.5), QueueLoad::new(10, 0.2)));
        assert!(!dominates(QueueLoad::new(10, 0.5), QueueLoad::new(20, 0.2)));
    }

    #[test]
    fn transition_examples() {
        let w = chan(&[0.5, 0.5]);
        let p = transition_prob(pat(&[0, 0]), pat(&[0, 1]), dest(&[1]), &w);
        assert!((p - 0.25).abs() < 1e-15);
        let stay = transition_prob(pat(&[0, 0]), pat(&[0, 0]), dest(&[1]), &w);
        assert!((stay - 0.25).abs() < 1e-15);
        assert_eq!(stay, stay_prob(pat(&[0, 0]), &w));
        assert_eq!(
            transition_prob(pat(&[0, 1]), pat(&[0, 0]), dest(&[1]), &w),
            0.0
        );
        assert_eq!(
            transition_prob(pat(&[0, 0]), pat(&[1, 0]), dest(&[1]), &w),
            0.0
        );
    }

    /// Enumerates the 2^N joint delivery outcomes of one transmission and
    /// checks that they are classified exactly once as stay, transfer or
    /// rescue.
    #[test]
    fn one_step_probabilities_partition_outcomes() {
        let omegas = [0.13, 0.42, 0.07, 0.66];
        for n in 2..=4 {
            let w = chan(&omegas[..n]);
            for d in 1..=n {
                let dset = DestinationSet::single(d);
                for mask in 0u64..(1 << n) {
                    if mask & (1 << (d - 1)) != 0 {
                        continue;
                    }
                    let from = LossPattern::from_holders(ReceiverSet::from_mask(mask), n).unwrap();
                    let mut total = 1.0 - omegas[d - 1];
                    for to_mask in 0u64..(1 << n) {
                        let to =
                            LossPattern::from_holders(ReceiverSet::from_mask(to_mask), n).unwrap();
                        total += transition_prob(from, to, dset, &w);
                    }
                    // Independent enumeration of outcomes.
                    let mut enumerated = 0.0;
                    for outcome in 0u64..(1 << n) {
                        let pr: f64 = (0..n)
                            .map(|i| {
                                if outcome & (1 << i) != 0 {
                                    1.0 - omegas[i]
                                } else {
                                    omegas[i]
                                }
                            })
                            .product();
                        enumerated += pr;
                    }
                    assert!((total - 1.0).abs() < 1e-12, "n={n} d={d} mask={mask}");
                    assert!((enumerated - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state(n: usize) -> impl Strategy<Value = (LossPattern, DestinationSet)> {
            (1..=n, any::<u64>()).prop_map(move |(d, bits)| {
                let holders = ReceiverSet::from_mask(bits)
                    .intersection(ReceiverSet::all(n))
                    .without(d);
                (
                    LossPattern::from_holders(holders, n).unwrap(),
                    DestinationSet::single(d),
                )
            })
        }

        proptest! {
            #[test]
            fn can_code_is_permutation_invariant(
                members in proptest::collection::vec(state(5), 2..=5),
                seed in any::<u64>(),
            ) {
                let base = can_code(&members).unwrap();
                let mut shuffled = members.clone();
                let len = shuffled.len();
                shuffled.rotate_left((seed as usize) % len);
                shuffled.swap(0, (seed as usize / 7) % len);
                prop_assert_eq!(base, can_code(&shuffled).unwrap());
                prop_assert_eq!(base, brute_force_decodable(&members));
            }

            #[test]
            fn unique_group_is_valid_and_maximal((p, d) in state(6), extra in state(6)) {
                let g = unique_code_group(p, d).unwrap();
                prop_assert_eq!(g.len(), p.weight() + 1);
                if g.len() >= 2 {
                    prop_assert!(can_code(g.members()).unwrap());
                    prop_assert!(brute_force_decodable(g.members()));
                }
                if g.len() < 6 && !g.contains(extra.0, extra.1) {
                    let mut grown = g.members().to_vec();
                    grown.push(extra);
                    let dests = grown.iter().fold(ReceiverSet::EMPTY, |a, (_, d)| a.union(d.receivers()));
                    let restricted = grown.iter().all(|(q, _)| q.holders().is_subset(dests));
                    prop_assert!(!(can_code(&grown).unwrap() && restricted));
                }
            }
        }
    }
}
