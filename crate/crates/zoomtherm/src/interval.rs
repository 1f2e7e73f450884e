//! Interval arithmetic for one-dimensional phase spaces.
//!
//! Everything downstream (pre-images, chains, holes, survivor sets) reduces
//! to finitely many intervals, so the two types here carry the geometric
//! weight of the whole crate. An [`Interval`] is an endpoint pair with an
//! open/closed flag; on the circle an interval may be stored unrolled
//! (`hi > 1`) with at most one wrap. [`IntervalSet`] is a canonical sorted
//! union of disjoint intervals with measure-theoretic semantics: endpoint
//! bookkeeping below `merge_tol` is not considered meaningful.

use serde::Serialize;

/// An interval with floating endpoints and an open/closed flag.
///
/// The flag records how the interval was produced (balls and shrunken sets
/// are open, chain closures are closed); set operations treat boundaries to
/// tolerance, so the flag is informational rather than load-bearing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi, closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi, closed: true }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self, tol: f64) -> bool {
        self.len() <= tol
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_point(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Containment of `other` up to `tol` slack at each endpoint.
    pub fn contains(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    /// Strict containment: `other` sits inside with margin beyond `tol` and
    /// the two intervals are not equal to tolerance.
    pub fn contains_strictly(&self, other: &Interval, tol: f64) -> bool {
        self.contains(other, tol) && !self.approx_eq(other, tol)
    }

    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }

    /// Whether the interiors overlap on a set of length greater than `tol`.
    pub fn overlaps_interior(&self, other: &Interval, tol: f64) -> bool {
        self.lo.max(other.lo) + tol < self.hi.min(other.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo < hi {
            Some(Interval { lo, hi, closed: self.closed && other.closed })
        } else {
            None
        }
    }

    /// Shift by a constant (used to unroll circle arcs).
    pub fn shifted(&self, k: f64) -> Interval {
        Interval { lo: self.lo + k, hi: self.hi + k, closed: self.closed }
    }

    /// Evenly spaced interior sample points.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|i| self.lo + self.len() * (i as f64 + 0.5) / n as f64)
            .collect()
    }
}

/// Linkedness of two open intervals: each contains points outside the other
/// and they genuinely overlap. Boundary touching, containment and equality
/// are all non-linked.
pub fn linked(a: &Interval, b: &Interval, tol: f64) -> bool {
    let straddle_right = a.lo + tol < b.lo && b.lo + tol < a.hi && a.hi + tol < b.hi;
    let straddle_left = b.lo + tol < a.lo && a.lo + tol < b.hi && b.hi + tol < a.hi;
    straddle_right || straddle_left
}

/// A canonical finite union of disjoint intervals, sorted by left endpoint.
/// Pieces closer than `MERGE_TOL` are fused.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntervalSet {
    pieces: Vec<Interval>,
}

const MERGE_TOL: f64 = 1e-14;

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { pieces: Vec::new() }
    }

    pub fn from_intervals(mut iv: Vec<Interval>) -> Self {
        iv.retain(|p| p.len() > MERGE_TOL);
        iv.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut pieces: Vec<Interval> = Vec::with_capacity(iv.len());
        for p in iv {
            match pieces.last_mut() {
                Some(last) if p.lo <= last.hi + MERGE_TOL => {
                    last.hi = last.hi.max(p.hi);
                }
                _ => pieces.push(p),
            }
        }
        IntervalSet { pieces }
    }

    pub fn single(iv: Interval) -> Self {
        IntervalSet::from_intervals(vec![iv])
    }

    pub fn pieces(&self) -> &[Interval] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn total_len(&self) -> f64 {
        self.pieces.iter().map(Interval::len).sum()
    }

    pub fn contains_point(&self, x: f64, tol: f64) -> bool {
        self.pieces.iter().any(|p| p.contains_point(x, tol))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.pieces.clone();
        all.extend_from_slice(&other.pieces);
        IntervalSet::from_intervals(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.pieces.len() && j < other.pieces.len() {
            let a = &self.pieces[i];
            let b = &other.pieces[j];
            if let Some(c) = a.intersect(b) {
                out.push(c);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Set difference `self ∖ other`, removing `other` as closed intervals
    /// (the standard closure-before-difference convention for shaving).
    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.pieces {
            let mut lo = a.lo;
            let mut exhausted = false;
            for b in &other.pieces {
                if b.hi <= lo || b.lo >= a.hi {
                    continue;
                }
                if b.lo > lo {
                    out.push(Interval::open(lo, b.lo));
                }
                lo = lo.max(b.hi);
                if lo >= a.hi {
                    exhausted = true;
                    break;
                }
            }
            if !exhausted && lo < a.hi {
                out.push(Interval::open(lo, a.hi));
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// The connected component containing `x`, if any.
    pub fn component_containing(&self, x: f64, tol: f64) -> Option<Interval> {
        self.pieces.iter().find(|p| p.contains_point(x, tol)).copied()
    }

    /// Whether `iv` is covered by this set up to `tol` slack.
    pub fn contains_interval(&self, iv: &Interval, tol: f64) -> bool {
        let gap = self.intersect(&IntervalSet::single(*iv)).total_len();
        iv.len() - gap <= tol
    }
}
