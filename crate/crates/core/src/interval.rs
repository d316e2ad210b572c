//! Finite unions of intervals on the real line.
//!
//! Every interval is closed on the left. On the right it is open, except
//! for a cell that touches the right end of the support, which is closed.
//! Since all reward laws are non-atomic the closure never changes a
//! probability; it only makes membership of a realized value deterministic.

use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    right_closed: bool,
}

impl Interval {
    /// `[lo, hi)`, or `None` when the interval would be empty.
    pub fn half_open(lo: f64, hi: f64) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi, right_closed: false })
    }

    /// `[lo, hi]`, or `None` unless `lo < hi`.
    pub fn closed(lo: f64, hi: f64) -> Option<Self> {
        (lo < hi).then_some(Interval { lo, hi, right_closed: true })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_right_closed(&self) -> bool {
        self.right_closed
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && (x < self.hi || (self.right_closed && x == self.hi))
    }

    fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let (hi, right_closed) = if self.hi < other.hi {
            (self.hi, self.right_closed)
        } else if other.hi < self.hi {
            (other.hi, other.right_closed)
        } else {
            (self.hi, self.right_closed && other.right_closed)
        };
        (lo < hi).then_some(Interval { lo, hi, right_closed })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.right_closed { ']' } else { ')' };
        write!(f, "[{}, {}{}", self.lo, self.hi, close)
    }
}

/// Sorted, disjoint, merged union of [`Interval`]s.
///
/// All constructors normalize eagerly, so two sets covering the same points
/// compare equal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntervalSet {
    parts: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { parts: Vec::new() }
    }

    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self::from_intervals(Interval::half_open(lo, hi))
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::from_intervals(Interval::closed(lo, hi))
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(iter: I) -> Self {
        let mut parts: Vec<Interval> = iter.into_iter().collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for part in parts {
            match merged.last_mut() {
                Some(last) if part.lo <= last.hi => {
                    if part.hi > last.hi {
                        last.hi = part.hi;
                        last.right_closed = part.right_closed;
                    } else if part.hi == last.hi {
                        last.right_closed |= part.right_closed;
                    }
                }
                _ => merged.push(part),
            }
        }
        IntervalSet { parts: merged }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Lebesgue measure.
    pub fn length(&self) -> f64 {
        self.parts.iter().map(Interval::len).sum()
    }

    /// Smallest single interval containing the set.
    pub fn hull(&self) -> Option<Interval> {
        let first = self.parts.first()?;
        let last = self.parts.last()?;
        Some(Interval { lo: first.lo, hi: last.hi, right_closed: last.right_closed })
    }

    pub fn contains(&self, x: f64) -> bool {
        // parts are sorted, so only the last part starting at or before x can hold it
        let idx = self.parts.partition_point(|p| p.lo <= x);
        idx > 0 && self.parts[idx - 1].contains(x)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_intervals(self.parts.iter().chain(other.parts.iter()).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let (a, b) = (&self.parts[i], &other.parts[j]);
            if let Some(c) = a.intersect(b) {
                out.push(c);
            }
            if a.hi <= b.hi {
                i += 1;
            }
            if b.hi <= a.hi {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    /// Complement relative to `universe`.
    ///
    /// Gaps start where a part ends; a gap after a right-closed part is
    /// stored left-closed, which only affects that single boundary point.
    pub fn complement_in(&self, universe: Interval) -> IntervalSet {
        let mut gaps = Vec::new();
        let mut cursor = universe.lo;
        for p in &self.parts {
            if p.lo > cursor {
                gaps.extend(Interval::half_open(cursor, p.lo.min(universe.hi)));
            }
            cursor = cursor.max(p.hi);
        }
        if cursor < universe.hi {
            gaps.push(Interval { lo: cursor, hi: universe.hi, right_closed: universe.right_closed });
        }
        Self::from_intervals(gaps).intersect(&Self::from_intervals([universe]))
    }

    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        match self.hull() {
            Some(h) => self.intersect(&other.complement_in(h)),
            None => IntervalSet::empty(),
        }
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("{}");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" u ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ho(lo: f64, hi: f64) -> IntervalSet {
        IntervalSet::half_open(lo, hi)
    }

    #[test]
    fn adjacent_parts_merge() {
        let s = ho(0.0, 0.25).union(&ho(0.25, 0.5));
        assert_eq!(s, ho(0.0, 0.5));
        assert_eq!(s.parts().len(), 1);
    }

    #[test]
    fn closure_survives_merge_at_right_end() {
        let s = ho(0.0, 0.5).union(&IntervalSet::closed(0.5, 1.0));
        assert_eq!(s, IntervalSet::closed(0.0, 1.0));
        assert!(s.contains(1.0));
        assert!(!ho(0.0, 1.0).contains(1.0));
    }

    #[test]
    fn empty_intervals_are_never_stored() {
        assert!(Interval::half_open(1.0, 1.0).is_none());
        assert!(ho(2.0, 1.0).is_empty());
        assert_eq!(IntervalSet::empty().length(), 0.0);
    }

    #[test]
    fn intersect_and_difference() {
        let a = ho(0.0, 0.25).union(&ho(0.5, 0.6));
        let b = ho(0.0, 0.25).union(&ho(0.25, 0.5));
        assert_eq!(a.intersect(&b), ho(0.0, 0.25));
        // (D0 u D2) minus (D0 u D1) leaves D2
        assert_eq!(a.difference(&b), ho(0.5, 0.6));
        assert!(ho(0.0, 1.0).difference(&ho(0.0, 1.0)).is_empty());
    }

    #[test]
    fn complement_keeps_right_closure_of_universe() {
        let u = Interval::closed(0.0, 1.0).unwrap();
        let c = ho(0.0, 0.25).complement_in(u);
        assert_eq!(c, IntervalSet::closed(0.25, 1.0));
        assert!(c.contains(0.25) && c.contains(1.0) && !c.contains(0.2));
    }

    #[test]
    fn membership_uses_half_open_convention() {
        let s = ho(0.25, 0.5).union(&ho(0.75, 1.0));
        assert!(s.contains(0.25));
        assert!(!s.contains(0.5));
        assert!(s.contains(0.8));
        assert!(!s.contains(0.6));
        assert!(!s.contains(-1.0));
    }
}
