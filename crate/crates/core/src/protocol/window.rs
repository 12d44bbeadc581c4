//! Sequence-number arithmetic and the per-neighbour sliding window.
//!
//! Sequence numbers live on a ring of `max_sqn + 1` values. A window of
//! `window_size` slots ending at `last` covers `last - window_size + 1 ..= last`
//! (mod range). Slots are addressed by their offset from the newest entry:
//! offset 0 is `last`, offset 1 is `last - 1`, and so on.

use serde::{Deserialize, Serialize};

use super::{ProtocolParams, Sqn};

#[inline]
fn ring_diff(a: Sqn, b: Sqn, range: u32) -> u32 {
    (u32::from(a) + range - u32::from(b)) % range
}

/// `a` is newer than `b` when it lies in the half-range after `b`.
///
/// Nothing recorded yet (`b == None`) makes every sequence number newer.
pub fn newer_than(a: Sqn, b: Option<Sqn>, params: &ProtocolParams) -> bool {
    match b {
        None => true,
        Some(b) => {
            let d = ring_diff(a, b, params.range());
            (1..=params.range() / 2).contains(&d)
        }
    }
}

/// Offset of `s` inside the window that ends at `last`, or `None` when `s`
/// falls outside it.
pub fn window_offset(s: Sqn, last: Sqn, params: &ProtocolParams) -> Option<usize> {
    let k = ring_diff(last, s, params.range()) as usize;
    (k < params.window_size).then_some(k)
}

/// Which recent sequence numbers one neighbour relayed for one originator.
///
/// Bit `k` is the flag for offset `k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlidingWindow {
    bits: u32,
}

impl SlidingWindow {
    #[inline]
    pub fn get(&self, offset: usize) -> bool {
        offset < 32 && self.bits & (1 << offset) != 0
    }

    #[inline]
    pub fn set(&mut self, offset: usize) {
        debug_assert!(offset < ProtocolParams::MAX_WINDOW_SIZE);
        self.bits |= 1 << offset;
    }

    /// Advance the newest slot by `k`: the `k` oldest flags fall off and `k`
    /// empty slots appear at the new end.
    pub fn shift(&mut self, k: usize, window_size: usize) {
        if k >= window_size {
            self.bits = 0;
        } else {
            let mask = if window_size >= 32 { u32::MAX } else { (1u32 << window_size) - 1 };
            self.bits = (self.bits << k) & mask;
        }
    }

    #[inline]
    pub fn count(&self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn clear(&mut self) {
        self.bits = 0;
    }

    /// The flags oldest first, so the last element belongs to the newest
    /// sequence number.
    pub fn entries(&self, window_size: usize) -> Vec<bool> {
        (0..window_size).rev().map(|k| self.get(k)).collect()
    }

    pub(crate) fn bits(&self) -> u32 {
        self.bits
    }

    pub(crate) fn from_bits(bits: u32) -> Self {
        SlidingWindow { bits }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Interpretation;

    fn params(max_sqn: Sqn, window_size: usize) -> ProtocolParams {
        let mut p = ProtocolParams::new(4, Interpretation::Literal);
        p.max_sqn = max_sqn;
        p.window_size = window_size;
        p
    }

    /// Walk forward from `b` one step at a time; `a` is newer if it is hit
    /// within half the ring.
    fn newer_by_walking(a: Sqn, b: Sqn, range: u32) -> bool {
        let mut cur = b as u32;
        for _ in 0..range / 2 {
            cur = (cur + 1) % range;
            if cur == a as u32 {
                return true;
            }
        }
        false
    }

    /// Walk backward from `last`; the number of steps to reach `s` is its offset.
    fn offset_by_walking(s: Sqn, last: Sqn, range: u32, window_size: usize) -> Option<usize> {
        let mut cur = last as u32;
        for k in 0..window_size {
            if cur == s as u32 {
                return Some(k);
            }
            cur = (cur + range - 1) % range;
        }
        None
    }

    #[test]
    fn newer_than_matches_walk_over_full_grid() {
        let p = params(15, 5);
        for a in 0..16 {
            assert!(newer_than(a, None, &p));
            for b in 0..16 {
                assert_eq!(newer_than(a, Some(b), &p), newer_by_walking(a, b, 16), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn newer_than_examples() {
        let p = params(15, 5);
        assert!(newer_than(2, Some(14), &p));
        assert!(!newer_than(3, Some(3), &p));
        assert!(newer_than(6, Some(14), &p));
        assert!(!newer_than(7, Some(14), &p));
    }

    #[test]
    fn newer_than_is_antisymmetric() {
        let p = params(15, 5);
        for a in 0..16u16 {
            for b in 0..16u16 {
                let ab = newer_than(a, Some(b), &p);
                let ba = newer_than(b, Some(a), &p);
                assert!(!(ab && ba) || ring_diff(a, b, 16) == 8);
                let d = ring_diff(a, b, 16);
                if d != 0 && d != 8 {
                    assert!(ab ^ ba, "a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn window_offset_matches_walk_over_full_grid() {
        for ws in 1..=8 {
            let p = params(15, ws);
            for s in 0..16 {
                for last in 0..16 {
                    assert_eq!(
                        window_offset(s, last, &p),
                        offset_by_walking(s, last, 16, ws),
                        "s={s} last={last} ws={ws}"
                    );
                }
            }
        }
    }

    #[test]
    fn window_offset_examples() {
        let p = params(15, 5);
        // window 6..=10
        assert_eq!(window_offset(8, 10, &p), Some(2));
        assert_eq!(window_offset(10, 10, &p), Some(0));
        assert_eq!(window_offset(1, 13, &p), None);
        // window 13, 14, 15, 0, 1
        assert_eq!(window_offset(15, 1, &p), Some(2));
        assert_eq!(window_offset(13, 1, &p), Some(4));
        assert_eq!(window_offset(12, 1, &p), None);
    }

    #[test]
    fn shift_drops_oldest_flags() {
        let mut w = SlidingWindow::default();
        // window 6..=10 with 6, 7 and 10 set
        w.set(4);
        w.set(3);
        w.set(0);
        assert_eq!(w.entries(5), vec![true, true, false, false, true]);
        w.shift(2, 5);
        // window 8..=12: only 10 survives, at offset 2
        assert_eq!(w.entries(5), vec![false, false, true, false, false]);
        w.shift(5, 5);
        assert!(w.is_empty());
    }

    #[test]
    fn shift_handles_full_width() {
        let mut w = SlidingWindow::from_bits(u32::MAX);
        w.shift(1, 32);
        assert_eq!(w.count(), 31);
        assert!(!w.get(0));
    }
}
