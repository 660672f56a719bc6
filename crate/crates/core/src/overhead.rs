//! Coding-header length accounting.
//!
//! Scheme A lists a 2-byte hash per XORed packet. Scheme B keeps a 19-byte
//! receive bitmap per destination, i.e. one bit per packet of a 152-packet
//! batch, whatever the packet mixes.

use crate::analytic::ChannelParams;
use crate::error::{Error, Result};
use crate::schemes::Packet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeaderVariant {
    SchemeA,
    SchemeB,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeaderModel {
    pub variant: HeaderVariant,
    pub hash_bytes: u32,
    pub per_destination_bytes: u32,
    /// Width of the scheme B bitmap in packets.
    pub window_packets: u32,
}

impl HeaderModel {
    pub fn scheme_a() -> Self {
        HeaderModel {
            variant: HeaderVariant::SchemeA,
            hash_bytes: 2,
            per_destination_bytes: 19,
            window_packets: 152,
        }
    }

    pub fn scheme_b() -> Self {
        HeaderModel {
            variant: HeaderVariant::SchemeB,
            ..Self::scheme_a()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hash_bytes == 0 || self.per_destination_bytes == 0 || self.window_packets == 0 {
            return Err(Error::Config("header sizes must be positive".into()));
        }
        Ok(())
    }

    /// Header bytes for a packet mixing `constituents` natives.
    pub fn len_for(&self, constituents: usize, receivers: usize) -> u64 {
        match self.variant {
            HeaderVariant::SchemeA => self.hash_bytes as u64 * constituents as u64,
            HeaderVariant::SchemeB => self.per_destination_bytes as u64 * receivers as u64,
        }
    }
}

/// Header length of `p` among `n` receivers.
///
/// Scheme B needs every constituent inside one bitmap window; windows are
/// aligned to multiples of `window_packets`.
pub fn header_len(p: &Packet, model: &HeaderModel, n: usize) -> Result<u64> {
    model.validate()?;
    if model.variant == HeaderVariant::SchemeB {
        let w = model.window_packets;
        if let Some(first) = p.constituents.iter().map(|c| c.seq).min() {
            let low = first / w * w;
            let high = low + w - 1;
            if let Some(out) = p.constituents.iter().find(|c| c.seq > high) {
                return Err(Error::OutsideWindow {
                    receiver: out.dest as usize,
                    low,
                    high: out.seq,
                    window: w,
                });
            }
        }
    }
    Ok(model.len_for(p.constituents.len(), n))
}

/// Header bytes if every lost packet of a `k`-packet batch is listed once.
pub fn worst_case_total(k: u64, omega: &ChannelParams, model: &HeaderModel, n: usize) -> f64 {
    let lost: f64 = k as f64 * omega.omegas().iter().sum::<f64>();
    match model.variant {
        HeaderVariant::SchemeA => model.hash_bytes as f64 * lost,
        HeaderVariant::SchemeB => (model.per_destination_bytes as u64 * n as u64) as f64 * lost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::NativeId;

    fn packet(seqs: &[(u8, u32)]) -> Packet {
        Packet::for_header(
            seqs.iter()
                .map(|&(dest, seq)| NativeId { dest, seq })
                .collect(),
        )
    }

    #[test]
    fn scheme_a_counts_constituents() {
        let a = HeaderModel::scheme_a();
        assert_eq!(
            header_len(&packet(&[(1, 0), (2, 5), (3, 9)]), &a, 3).unwrap(),
            6
        );
        assert_eq!(header_len(&packet(&[(1, 0)]), &a, 3).unwrap(), 2);
    }

    #[test]
    fn scheme_b_is_per_destination() {
        let b = HeaderModel::scheme_b();
        assert_eq!(header_len(&packet(&[(1, 0)]), &b, 5).unwrap(), 95);
        assert_eq!(header_len(&packet(&[(1, 0), (2, 151)]), &b, 5).unwrap(), 95);
        assert_eq!(
            header_len(&packet(&[(1, 152), (2, 303)]), &b, 2).unwrap(),
            38
        );
    }

    #[test]
    fn scheme_b_rejects_window_overflow() {
        let b = HeaderModel::scheme_b();
        let err = header_len(&packet(&[(1, 10), (2, 200)]), &b, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::OutsideWindow {
                receiver: 2,
                window: 152,
                ..
            }
        ));
    }

    #[test]
    fn worst_case_examples() {
        let w = ChannelParams::new(vec![0.1, 0.1]).unwrap();
        let a = HeaderModel::scheme_a();
        assert!((worst_case_total(100, &w, &a, 2) - 40.0).abs() < 1e-9);
        assert_eq!(worst_case_total(0, &w, &a, 2), 0.0);
        assert_eq!(worst_case_total(0, &w, &HeaderModel::scheme_b(), 2), 0.0);
    }

    #[test]
    fn monotone_in_constituents() {
        let (a, b) = (HeaderModel::scheme_a(), HeaderModel::scheme_b());
        for n in 2..=25 {
            for c in 1..n {
                assert!(a.len_for(c + 1, n) > a.len_for(c, n));
                assert_eq!(b.len_for(c + 1, n), b.len_for(c, n));
            }
            assert_eq!(b.len_for(1, n + 1) - b.len_for(1, n), 19);
        }
    }
}
