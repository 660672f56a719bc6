//! Closed-form retransmission expectations.
//!
//! All expectations assume independent Bernoulli erasures with per-receiver
//! probability `ω_i` and instantaneous, lossless feedback. Formulas that
//! depend on receiver order require `ω` sorted ascending; callers sort with
//! [`ChannelParams::sorted`] and map results back through the permutation.

mod flow;

pub use flow::{pattern_flow_solve, FlowEntry, FlowLedger, FLOW_SOLVER_MAX_RECEIVERS};

use crate::error::{Error, Result};
use crate::pattern::{DestinationSet, LossPattern, ReceiverSet, MAX_RECEIVERS};

/// Per-receiver erasure probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    omegas: Vec<f64>,
    sorted_ascending: bool,
}

impl ChannelParams {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.len() < 2 {
            return Err(Error::TooFewReceivers(omegas.len()));
        }
        if omegas.len() > MAX_RECEIVERS {
            return Err(Error::ReceiverCount(omegas.len()));
        }
        if let Some(&bad) = omegas.iter().find(|w| !(0.0..1.0).contains(*w)) {
            return Err(Error::InvalidLossRate(bad));
        }
        let sorted_ascending = omegas.windows(2).all(|w| w[0] <= w[1]);
        Ok(ChannelParams {
            omegas,
            sorted_ascending,
        })
    }

    /// `n` receivers sharing one erasure probability.
    pub fn symmetric(n: usize, omega: f64) -> Result<Self> {
        Self::new(vec![omega; n])
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted_ascending
    }

    /// Loss rate of 1-based receiver `r`.
    pub fn omega(&self, r: usize) -> f64 {
        self.omegas[r - 1]
    }

    /// Ascending copy plus the permutation: entry `k` of the result is
    /// original receiver `perm[k]` (1-based). Ties keep receiver order.
    pub fn sorted(&self) -> (ChannelParams, Vec<usize>) {
        let mut perm: Vec<usize> = (1..=self.len()).collect();
        perm.sort_by(|&a, &b| self.omegas[a - 1].total_cmp(&self.omegas[b - 1]));
        let omegas = perm.iter().map(|&r| self.omegas[r - 1]).collect();
        (
            ChannelParams {
                omegas,
                sorted_ascending: true,
            },
            perm,
        )
    }

    fn require_sorted(&self) -> Result<()> {
        if self.sorted_ascending {
            return Ok(());
        }
        let index = self
            .omegas
            .windows(2)
            .position(|w| w[0] > w[1])
            .map_or(0, |i| i + 2);
        Err(Error::Unsorted { index })
    }

    /// Product of ω over receivers `from..=N` (1-based).
    fn tail_product(&self, from: usize) -> f64 {
        self.omegas[from - 1..].iter().product()
    }
}

/// Expected transmissions to empty a queue of `queue_size` packets whose
/// pattern is zero exactly at `zero_receivers`.
pub fn rescue_expectation(
    queue_size: f64,
    zero_receivers: ReceiverSet,
    omega: &ChannelParams,
) -> Result<f64> {
    if zero_receivers.is_empty() {
        return Err(Error::EmptyDestinations);
    }
    if !zero_receivers.is_subset(ReceiverSet::all(omega.len())) {
        let index = zero_receivers.iter().last().unwrap_or(0);
        return Err(Error::ReceiverOutOfRange {
            index,
            receivers: omega.len(),
        });
    }
    let stay: f64 = zero_receivers.iter().map(|r| omega.omega(r)).product();
    if stay >= 1.0 {
        return Err(Error::DegenerateChannel);
    }
    Ok(queue_size / (1.0 - stay))
}

/// Expected number of packets moved from `from` to `to` while the queue at
/// `from` is rescued.
pub fn transfer_expectation(
    queue_size: f64,
    from: LossPattern,
    to: LossPattern,
    dest: DestinationSet,
    omega: &ChannelParams,
) -> Result<f64> {
    if from.len() != omega.len() {
        return Err(Error::LengthMismatch {
            expected: omega.len(),
            got: from.len(),
        });
    }
    if queue_size == 0.0 {
        return Ok(0.0);
    }
    let rescue = rescue_expectation(queue_size, from.missing(), omega)?;
    Ok(rescue * crate::pattern::transition_prob(from, to, dest, omega))
}

/// Mean retransmissions per delivered packet under plain ARQ.
pub fn lambda_arq(omega: &ChannelParams) -> f64 {
    let n = omega.len() as f64;
    omega.omegas().iter().map(|w| w / (1.0 - w)).sum::<f64>() / n
}

/// Mean retransmissions per delivered packet when lost native packets with
/// distinct destinations are XORed together.
pub fn lambda_ncarq(omega: &ChannelParams) -> Result<f64> {
    omega.require_sorted()?;
    let n = omega.len();
    let sum: f64 = (1..=n)
        .map(|i| omega.tail_product(i) / (1.0 - omega.omega(i)))
        .sum();
    Ok(sum / n as f64)
}

/// Mean retransmissions per delivered packet when overheard coded packets
/// are also used as coding material.
pub fn lambda_ear(omega: &ChannelParams) -> Result<f64> {
    omega.require_sorted()?;
    let n = omega.len();
    let sum: f64 = (1..=n)
        .map(|i| {
            let tail = omega.tail_product(i);
            tail / (1.0 - tail)
        })
        .sum();
    Ok(sum / n as f64)
}

/// Coded retransmissions needed to drain the dominated queue `a`, and the
/// natives of `b` left over to be sent alone.
pub fn lemma1_counts(size_a: f64, size_b: f64, omega_a: f64, omega_b: f64) -> Result<(f64, f64)> {
    for w in [omega_a, omega_b] {
        if !(0.0..1.0).contains(&w) {
            return Err(Error::InvalidLossRate(w));
        }
    }
    if size_a < 0.0 || size_a > size_b {
        return Err(Error::Hypothesis("queue a must be no larger than queue b"));
    }
    if omega_a > omega_b {
        return Err(Error::Hypothesis("queue a must be no lossier than queue b"));
    }
    let coded = size_a / (1.0 - omega_a);
    let solo = size_b - size_a * (1.0 - omega_b) / (1.0 - omega_a);
    Ok((coded, solo))
}

fn check_symmetric_omega(omega: f64) -> Result<()> {
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::InvalidLossRate(omega));
    }
    Ok(())
}

/// Expected solo deliveries of coded packets that lost every coding partner,
/// for three receivers sharing loss rate `omega`. Zero when
/// `ω³ + ω² − 1 ≤ 0`, where the partner supply never runs out.
pub fn unwanted_overhead(k: f64, omega: f64) -> Result<f64> {
    check_symmetric_omega(omega)?;
    let w = omega;
    let margin = w.powi(3) + w.powi(2) - 1.0;
    if margin <= 0.0 || k == 0.0 {
        return Ok(0.0);
    }
    Ok(k * w * (1.0 - w) * margin / ((1.0 - w.powi(3)) * (1.0 - w.powi(2))))
}

/// Queue sizes `(N1, N2)` behind [`unwanted_overhead`]: weight-two native
/// queues and the coded queues competing for the same partners.
pub fn n1_n2(k: f64, omega: f64) -> Result<(f64, f64)> {
    check_symmetric_omega(omega)?;
    let w = omega;
    let n1 = k * w * (1.0 - w).powi(2) / (1.0 - w.powi(3));
    let n2 = k * w.powi(4) * (1.0 - w).powi(2) / ((1.0 - w.powi(3)) * (1.0 - w.powi(2)));
    Ok((n1, n2))
}

/// Probability that the first transmission of a packet for `dest` ends in
/// pattern `p`.
pub fn initial_pattern_prob(p: LossPattern, dest: usize, omega: &ChannelParams) -> f64 {
    if p.len() != omega.len() || p.holds(dest) || dest == 0 || dest > p.len() {
        return 0.0;
    }
    (1..=p.len())
        .map(|r| {
            if p.holds(r) {
                1.0 - omega.omega(r)
            } else {
                omega.omega(r)
            }
        })
        .product()
}

/// A loss state for one destination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NativeState {
    pub dest: usize,
    pub pattern: LossPattern,
}

/// Partition of every native loss state into per-receiver primary sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimarySets {
    /// States of receiver `i` with every entry at positions `≥ i` zero.
    pub phi_upper: Vec<NativeState>,
    /// States of receivers `j < i` whose highest held entry is `i`.
    pub phi_lower: Vec<NativeState>,
}

impl PrimarySets {
    pub fn union(&self) -> Vec<NativeState> {
        let mut all = self.phi_upper.clone();
        all.extend_from_slice(&self.phi_lower);
        all.sort();
        all
    }
}

/// Primary set of receiver `i` among `n` receivers.
///
/// A state of receiver `j < i` belongs here when `i` is the highest receiver
/// holding it, so each state lands in exactly one primary set.
pub fn primary_sets(i: usize, n: usize) -> Result<PrimarySets> {
    if n == 0 || n > MAX_RECEIVERS {
        return Err(Error::ReceiverCount(n));
    }
    if i == 0 || i > n {
        return Err(Error::ReceiverOutOfRange {
            index: i,
            receivers: n,
        });
    }
    if n > 24 {
        return Err(Error::FlowSolverLimit {
            receivers: n,
            max: 24,
        });
    }
    let mut phi_upper = Vec::with_capacity(1 << (i - 1));
    for low in 0u64..(1u64 << (i - 1)) {
        let pattern = LossPattern::from_holders(ReceiverSet::from_mask(low), n)?;
        phi_upper.push(NativeState { dest: i, pattern });
    }
    let mut phi_lower = Vec::new();
    for j in 1..i {
        // Entry i set, entries above i clear, entry j clear, the rest free.
        for low in 0u64..(1u64 << (i - 1)) {
            if low & (1 << (j - 1)) != 0 {
                continue;
            }
            let mask = low | (1u64 << (i - 1));
            let pattern = LossPattern::from_holders(ReceiverSet::from_mask(mask), n)?;
            phi_lower.push(NativeState { dest: j, pattern });
        }
    }
    Ok(PrimarySets {
        phi_upper,
        phi_lower,
    })
}

/// Expected transmissions spent on receiver `i`'s primary set when every
/// state of it rides along with the leading states of receiver `i`.
pub fn phi_rescue_total(i: usize, k: f64, omega: &ChannelParams) -> Result<f64> {
    omega.require_sorted()?;
    if i == 0 || i > omega.len() {
        return Err(Error::ReceiverOutOfRange {
            index: i,
            receivers: omega.len(),
        });
    }
    let tail = omega.tail_product(i);
    Ok(k * tail / (1.0 - tail))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chan(omegas: &[f64]) -> ChannelParams {
        ChannelParams::new(omegas.to_vec()).unwrap()
    }

    fn pat(bits: &[u8]) -> LossPattern {
        LossPattern::from_bits(bits).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn channel_validation() {
        assert!(matches!(
            ChannelParams::new(vec![0.1]),
            Err(Error::TooFewReceivers(1))
        ));
        assert!(matches!(
            ChannelParams::new(vec![0.1, 1.0]),
            Err(Error::InvalidLossRate(_))
        ));
        assert!(matches!(
            ChannelParams::new(vec![-0.1, 0.2]),
            Err(Error::InvalidLossRate(_))
        ));
        assert!(chan(&[0.1, 0.1, 0.2]).is_sorted());
        assert!(!chan(&[0.3, 0.1]).is_sorted());
    }

    #[test]
    fn sorting_returns_permutation() {
        let (sorted, perm) = chan(&[0.3, 0.1, 0.2]).sorted();
        assert_eq!(sorted.omegas(), &[0.1, 0.2, 0.3]);
        assert_eq!(perm, vec![2, 3, 1]);
        assert!(sorted.is_sorted());
    }

    #[test]
    fn rescue_examples() {
        let set12 = ReceiverSet::from_receivers([1, 2], 2).unwrap();
        let v = rescue_expectation(100.0, set12, &chan(&[0.5, 0.5])).unwrap();
        assert!(close(v, 400.0 / 3.0, 1e-12));
        let one = ReceiverSet::singleton(1);
        assert_eq!(
            rescue_expectation(50.0, one, &chan(&[0.0, 0.4])).unwrap(),
            50.0
        );
        assert!(close(
            rescue_expectation(1.0, one, &chan(&[0.5, 0.4])).unwrap(),
            2.0,
            1e-12
        ));
        assert!(rescue_expectation(1.0, ReceiverSet::EMPTY, &chan(&[0.5, 0.4])).is_err());
    }

    /// Truncated enumeration of outcome sequences: P(first success on
    /// attempt t) = ω^(t-1)(1-ω).
    #[test]
    fn rescue_matches_truncated_series() {
        let w: f64 = 0.5;
        let series: f64 = (1..200).map(|t| t as f64 * w.powi(t - 1) * (1.0 - w)).sum();
        let one = ReceiverSet::singleton(1);
        assert!(close(
            rescue_expectation(1.0, one, &chan(&[w, 0.4])).unwrap(),
            series,
            1e-12
        ));
    }

    #[test]
    fn transfer_examples() {
        let w = chan(&[0.5, 0.5]);
        let d1 = DestinationSet::single(1);
        let t = transfer_expectation(100.0, pat(&[0, 0]), pat(&[0, 1]), d1, &w).unwrap();
        assert!(close(t, 100.0 / 3.0, 1e-12));
        assert_eq!(
            transfer_expectation(100.0, pat(&[0, 1]), pat(&[0, 0]), d1, &w).unwrap(),
            0.0
        );
        assert_eq!(
            transfer_expectation(0.0, pat(&[0, 0]), pat(&[0, 1]), d1, &w).unwrap(),
            0.0
        );
    }

    #[test]
    fn lambda_examples() {
        let sym = chan(&[0.5, 0.5]);
        assert!(close(lambda_ncarq(&sym).unwrap(), 0.75, 1e-12));
        assert!(close(lambda_ear(&sym).unwrap(), 2.0 / 3.0, 1e-12));
        let zero = chan(&[0.0, 0.0, 0.0]);
        assert_eq!(lambda_ncarq(&zero).unwrap(), 0.0);
        assert_eq!(lambda_ear(&zero).unwrap(), 0.0);
        // Hand evaluation: (0.006/0.9 + 0.06/0.8 + 0.3/0.7) / 3.
        let w = chan(&[0.1, 0.2, 0.3]);
        let expect_nc = (0.006 / 0.9 + 0.06 / 0.8 + 0.3 / 0.7) / 3.0;
        let expect_ear = (0.006 / 0.994 + 0.06 / 0.94 + 0.3 / 0.7) / 3.0;
        assert!(close(lambda_ncarq(&w).unwrap(), expect_nc, 1e-12));
        assert!(close(lambda_ear(&w).unwrap(), expect_ear, 1e-12));
        assert!((lambda_ncarq(&w).unwrap() - 0.170079).abs() < 1e-6);
        assert!((lambda_ear(&w).unwrap() - 0.166146).abs() < 1e-6);
    }

    #[test]
    fn lambdas_reject_unsorted() {
        let w = chan(&[0.3, 0.1]);
        assert!(matches!(
            lambda_ncarq(&w),
            Err(Error::Unsorted { index: 2 })
        ));
        assert!(matches!(lambda_ear(&w), Err(Error::Unsorted { .. })));
        assert!(phi_rescue_total(1, 1.0, &w).is_err());
    }

    #[test]
    fn two_receiver_closed_forms_agree() {
        // Per-receiver forms for N = 2 written out directly.
        for &(w1, w2) in &[(0.1, 0.2), (0.5, 0.5), (0.3, 0.9)] {
            let w = chan(&[w1, w2]);
            let nc2 = 0.5 * (w1 * w2 / (1.0 - w1) + w2 / (1.0 - w2));
            assert!(close(lambda_ncarq(&w).unwrap(), nc2, 1e-12));
            let k = 1000.0;
            let all = k * w2 / (1.0 - w2) + k * w1 * w2 / (1.0 - w1 * w2);
            assert!(close(lambda_ear(&w).unwrap(), all / (2.0 * k), 1e-12));
        }
    }

    #[test]
    fn dominated_queue_examples() {
        let (c, s) = lemma1_counts(10.0, 20.0, 0.2, 0.5).unwrap();
        assert!(close(c, 12.5, 1e-12) && close(s, 13.75, 1e-12));
        assert_eq!(lemma1_counts(0.0, 20.0, 0.2, 0.5).unwrap(), (0.0, 20.0));
        let (c, s) = lemma1_counts(10.0, 10.0, 0.3, 0.3).unwrap();
        assert!(close(c, 10.0 / 0.7, 1e-12));
        assert!(s.abs() < 1e-12);
        assert!(lemma1_counts(20.0, 10.0, 0.2, 0.5).is_err());
        assert!(lemma1_counts(10.0, 20.0, 0.5, 0.2).is_err());
    }

    /// Round-by-round recursion Y_{k+1} = ω_a Y_k, Z_{k+1} = Z_k - (1-ω_b) Y_k.
    #[test]
    fn dominated_queue_matches_round_recursion() {
        let (wa, wb) = (0.25, 0.6);
        let (mut y, mut z) = (40.0f64, 90.0f64);
        let mut coded = 0.0;
        while y > 1e-12 {
            coded += y;
            z -= (1.0 - wb) * y;
            y *= wa;
        }
        let (c, s) = lemma1_counts(40.0, 90.0, wa, wb).unwrap();
        assert!(close(c, coded, 1e-9));
        assert!(close(s, z, 1e-9));
    }

    #[test]
    fn unwanted_examples() {
        assert!((unwanted_overhead(1000.0, 0.8).unwrap() - 138.43).abs() < 0.01);
        assert_eq!(unwanted_overhead(1000.0, 0.5).unwrap(), 0.0);
        assert_eq!(unwanted_overhead(0.0, 0.9).unwrap(), 0.0);
        assert!(unwanted_overhead(10.0, 1.0).is_err());
    }

    #[test]
    fn unwanted_is_excess_of_n2_over_n1() {
        for &w in &[0.76, 0.8, 0.9] {
            let (n1, n2) = n1_n2(1000.0, w).unwrap();
            let expect = (n2 - n1) / (1.0 - w);
            assert!(close(unwanted_overhead(1000.0, w).unwrap(), expect, 1e-12));
        }
    }

    #[test]
    fn n1_n2_examples() {
        let (n1, n2) = n1_n2(1000.0, 0.5).unwrap();
        assert!(close(n1, 1000.0 / 7.0, 1e-12));
        assert!(close(n2, 1000.0 * 0.0625 * 0.25 / (0.875 * 0.75), 1e-12));
        assert!((n2 - 23.8095).abs() < 1e-3);
        assert_eq!(n1_n2(1000.0, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn n1_dominates_exactly_when_margin_nonpositive() {
        for step in 1..1000 {
            let w = step as f64 / 1000.0;
            let (n1, n2) = n1_n2(1.0, w).unwrap();
            let margin = w.powi(3) + w.powi(2) - 1.0;
            if margin.abs() < 1e-9 {
                continue;
            }
            assert_eq!(n1 >= n2, margin <= 0.0, "w = {w}");
        }
    }

    #[test]
    fn initial_pattern_examples() {
        let w = chan(&[0.5, 0.5]);
        assert!(close(
            initial_pattern_prob(pat(&[0, 1]), 1, &w),
            0.25,
            1e-15
        ));
        assert_eq!(initial_pattern_prob(pat(&[1, 0]), 1, &w), 0.0);
        let w = chan(&[0.12, 0.3, 0.45, 0.7]);
        for d in 1..=4 {
            let total: f64 = (0u64..16)
                .filter(|m| m & (1 << (d - 1)) == 0)
                .map(|m| {
                    let p = LossPattern::from_holders(ReceiverSet::from_mask(m), 4).unwrap();
                    initial_pattern_prob(p, d, &w)
                })
                .sum();
            assert!(close(total, w.omega(d), 1e-12));
        }
    }

    #[test]
    fn primary_sets_partition_all_states() {
        for n in 1..=5 {
            let mut seen = std::collections::BTreeSet::new();
            for i in 1..=n {
                let sets = primary_sets(i, n).unwrap();
                assert_eq!(sets.phi_upper.len(), 1 << (i - 1));
                for s in sets.union() {
                    assert!(!s.pattern.holds(s.dest));
                    assert!(seen.insert(s), "state {:?} in two primary sets", s);
                }
            }
            // Every state of every receiver is covered.
            assert_eq!(seen.len(), n * (1 << (n - 1)));
        }
        let first = primary_sets(1, 2).unwrap();
        assert_eq!(
            first.phi_upper,
            vec![NativeState {
                dest: 1,
                pattern: pat(&[0, 0])
            }]
        );
        assert!(first.phi_lower.is_empty());
    }

    #[test]
    fn phi_totals_sum_to_lambda_ear() {
        let w = chan(&[0.05, 0.3, 0.3, 0.8]);
        let k = 1000.0;
        let sum: f64 = (1..=4).map(|i| phi_rescue_total(i, k, &w).unwrap()).sum();
        assert!(close(sum / (k * 4.0), lambda_ear(&w).unwrap(), 1e-12));
        assert_eq!(phi_rescue_total(1, k, &chan(&[0.0, 0.0])).unwrap(), 0.0);
        assert!(close(
            phi_rescue_total(2, 1000.0, &chan(&[0.5, 0.5])).unwrap(),
            1000.0,
            1e-12
        ));
    }

    #[test]
    fn ear_never_exceeds_ncarq_on_grid() {
        for n in 2..=5 {
            let mut idx = vec![0usize; n];
            loop {
                let mut ws: Vec<f64> = idx.iter().map(|&k| 0.05 + 0.15 * k as f64).collect();
                ws.sort_by(f64::total_cmp);
                let w = chan(&ws);
                assert!(lambda_ear(&w).unwrap() <= lambda_ncarq(&w).unwrap());
                let mut pos = 0;
                while pos < n {
                    idx[pos] += 1;
                    if idx[pos] < 7 {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
    }

    #[test]
    fn lambdas_vanish_and_diverge_at_limits() {
        let tiny = chan(&[1e-9, 1e-9, 1e-9]);
        assert!(lambda_ear(&tiny).unwrap() < 1e-8);
        assert!(lambda_ncarq(&tiny).unwrap() < 1e-8);
        let heavy = chan(&[0.2, 0.5, 1.0 - 1e-9]);
        assert!(lambda_ear(&heavy).unwrap() > 1e7);
        assert!(lambda_ncarq(&heavy).unwrap() > 1e7);
    }
}
