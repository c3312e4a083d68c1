//! Geometric covering interval systems.
//!
//! The compact geometric covering (CGC) family keeps, for every level `k`,
//! the intervals `[i·2^k, (i+1)·2^k − 1]` with `i` odd. Writing any
//! `t ≥ 1` as `i·2^k` with `i` odd shows exactly one CGC interval starts at
//! each round, so the family is generated arithmetically from the 2-adic
//! valuation instead of being materialized. The marker-indexed (CPGC)
//! variant uses the same combinatorics over marker indices.

mod render;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use render::{render_cgc, render_cpgc, render_gc, render_pgc};

/// Closed integer range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::contract(format!("interval start {start} exceeds end {end}")));
        }
        Ok(Interval { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// 2-adic valuation of a positive integer.
pub fn two_adic_valuation(t: usize) -> u32 {
    debug_assert!(t > 0);
    t.trailing_zeros()
}

fn lowest_power_of_two(t: usize) -> usize {
    1 << two_adic_valuation(t)
}

/// The unique CGC interval starting at `t`: `[t, t + 2^k − 1]` where `2^k`
/// is the largest power of two dividing `t`.
pub fn cgc_interval_at(t: usize) -> Result<Interval> {
    if t < 1 {
        return Err(Error::contract("rounds start at 1"));
    }
    Ok(Interval {
        start: t,
        end: t + lowest_power_of_two(t) - 1,
    })
}

/// All GC intervals `[i·2^k, (i+1)·2^k − 1]` (any `i ≥ 1`) starting at
/// `t`, shortest first, with ends truncated at `horizon`.
pub fn gc_intervals_at(t: usize, horizon: usize) -> Result<Vec<Interval>> {
    if t < 1 || t > horizon {
        return Err(Error::contract(format!("round {t} outside 1..={horizon}")));
    }
    Ok((0..=two_adic_valuation(t))
        .map(|k| Interval {
            start: t,
            end: (t + (1usize << k) - 1).min(horizon),
        })
        .collect())
}

/// End index `g = (i+1)·2^k` for marker index `m = i·2^k` (`i` odd): the
/// expert opened at marker `m` retires once marker `g` is about to exist.
pub fn cgc_end_index(m: usize) -> Result<usize> {
    if m < 1 {
        return Err(Error::contract("marker indices start at 1"));
    }
    Ok(m + lowest_power_of_two(m))
}

/// `⌈log₂(s − r + 2)⌉`, the worst-case number of CGC intervals needed to
/// cover `[r, s]`.
pub fn cover_length_bound(r: usize, s: usize) -> usize {
    let n = s - r + 2;
    n.next_power_of_two().trailing_zeros() as usize
}

/// Consecutive CGC intervals covering a query, produced greedily.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverSequence {
    pub intervals: Vec<Interval>,
    /// Right endpoint of the query that was covered.
    pub query_end: usize,
}

impl CoverSequence {
    /// Number of intervals `v`.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn query_start(&self) -> usize {
        self.intervals[0].start
    }

    /// How far the last interval extends past the query.
    pub fn overshoot(&self) -> usize {
        self.intervals.last().map_or(0, |iv| iv.end - self.query_end)
    }

    /// Checks the structural guarantees: consecutive, starts at the query,
    /// the last interval reaches the query end and the one before does not.
    pub fn is_well_formed(&self) -> bool {
        let Some(last) = self.intervals.last() else {
            return false;
        };
        let consecutive = self
            .intervals
            .windows(2)
            .all(|w| w[1].start == w[0].end + 1);
        let tight = self.intervals.len() < 2
            || self.intervals[self.intervals.len() - 2].end < self.query_end;
        consecutive && last.end >= self.query_end && tight
    }
}

impl fmt::Display for CoverSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.intervals.iter().map(|iv| iv.to_string()).collect();
        write!(f, "{}", parts.join(", "))
    }
}

fn greedy_cover(from: usize, to: usize) -> Result<CoverSequence> {
    if from < 1 {
        return Err(Error::contract("cover queries start at 1 or later"));
    }
    if from > to {
        return Err(Error::contract(format!("empty cover query [{from}, {to}]")));
    }
    let mut intervals = Vec::new();
    let mut next = from;
    loop {
        let iv = cgc_interval_at(next)?;
        intervals.push(iv);
        if iv.end >= to {
            break;
        }
        next = iv.end + 1;
    }
    Ok(CoverSequence {
        intervals,
        query_end: to,
    })
}

/// Greedy chain of CGC intervals covering `[r, s]`; the last interval is
/// returned untruncated and may overshoot `s`.
pub fn cgc_cover(r: usize, s: usize) -> Result<CoverSequence> {
    greedy_cover(r, s)
}

/// The same chain in marker-index space: covers marker indices `p..=q`
/// with CPGC intervals `[s_{i₁}, s_{i₂} − 1], …`.
pub fn marker_cover(p: usize, q: usize) -> Result<CoverSequence> {
    greedy_cover(p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cgc_starts_by_level() {
        assert_eq!(cgc_interval_at(1).unwrap(), Interval { start: 1, end: 1 });
        assert_eq!(cgc_interval_at(4).unwrap(), Interval { start: 4, end: 7 });
        assert_eq!(cgc_interval_at(6).unwrap(), Interval { start: 6, end: 7 });
        assert_eq!(cgc_interval_at(16).unwrap(), Interval { start: 16, end: 31 });
        assert!(cgc_interval_at(0).is_err());
    }

    #[test]
    fn gc_starts() {
        let at = |t| gc_intervals_at(t, 64).unwrap();
        assert_eq!(
            at(4),
            vec![
                Interval { start: 4, end: 4 },
                Interval { start: 4, end: 5 },
                Interval { start: 4, end: 7 }
            ]
        );
        assert_eq!(at(3), vec![Interval { start: 3, end: 3 }]);
        let ends: Vec<usize> = at(8).iter().map(|iv| iv.end).collect();
        assert_eq!(ends, vec![8, 9, 11, 15]);
        assert_eq!(gc_intervals_at(8, 10).unwrap().last().unwrap().end, 10);
        assert!(gc_intervals_at(11, 10).is_err());
    }

    #[test]
    fn end_indices() {
        assert_eq!(cgc_end_index(1).unwrap(), 2);
        assert_eq!(cgc_end_index(4).unwrap(), 8);
        assert_eq!(cgc_end_index(6).unwrap(), 8);
        assert!(cgc_end_index(0).is_err());
    }

    #[test]
    fn covers() {
        let c = cgc_cover(1, 1).unwrap();
        assert_eq!(c.len(), 1);
        let c = cgc_cover(4, 7).unwrap();
        assert_eq!(c.intervals, vec![Interval { start: 4, end: 7 }]);

        let c = cgc_cover(5, 23).unwrap();
        assert_eq!(c.to_string(), "5..5, 6..7, 8..15, 16..31");
        assert_eq!(c.len(), 4);
        assert_eq!(cover_length_bound(5, 23), 5);
        assert_eq!(c.overshoot(), 8);
        assert!(c.is_well_formed());

        assert!(cgc_cover(3, 2).is_err());
    }

    #[test]
    fn marker_covers() {
        assert_eq!(marker_cover(1, 1).unwrap().len(), 1);
        let c = marker_cover(1, 2).unwrap();
        assert_eq!(
            c.intervals,
            vec![Interval { start: 1, end: 1 }, Interval { start: 2, end: 3 }]
        );
        assert_eq!(cover_length_bound(1, 2), 2);
        assert_eq!(marker_cover(5, 23).unwrap().len(), 4);
        assert!(marker_cover(2, 1).is_err());
    }

    #[test]
    fn cover_bound_values() {
        assert_eq!(cover_length_bound(1, 1), 1);
        assert_eq!(cover_length_bound(1, 2), 2);
        assert_eq!(cover_length_bound(1, 3), 2);
        assert_eq!(cover_length_bound(1, 7), 3);
        assert_eq!(cover_length_bound(1, 256), 9);
    }
}
