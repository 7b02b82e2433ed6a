//! Certified bounds.

use serde::{Deserialize, Serialize};

/// Width below which an interval is reported as exact.
pub const EXACTNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Exact,
    Approximate,
}

/// A certified enclosure `lo <= value <= hi` of a nonnegative quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub status: Status,
}

impl Interval {
    pub const ZERO: Interval = Interval {
        lo: 0.0,
        hi: 0.0,
        status: Status::Exact,
    };

    pub fn exact(v: f64) -> Self {
        Interval {
            lo: v,
            hi: v,
            status: Status::Exact,
        }
    }

    /// Builds an interval from bounds; status is derived from the width.
    pub fn new(lo: f64, hi: f64) -> Self {
        let lo = lo.max(0.0);
        let hi = hi.max(lo);
        let status = if hi - lo <= EXACTNESS_TOL {
            Status::Exact
        } else {
            Status::Approximate
        };
        Interval { lo, hi, status }
    }

    /// Forces approximate status regardless of width.
    pub fn approximate(lo: f64, hi: f64) -> Self {
        let mut i = Interval::new(lo, hi);
        i.status = Status::Approximate;
        i
    }

    pub fn is_exact(&self) -> bool {
        self.status == Status::Exact
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lo - slack && v <= self.hi + slack
    }

    pub fn overlaps(&self, other: &Interval, slack: f64) -> bool {
        self.lo <= other.hi + slack && other.lo <= self.hi + slack
    }

    pub fn scale(&self, t: f64) -> Interval {
        let t = t.abs();
        Interval {
            lo: self.lo * t,
            hi: self.hi * t,
            status: self.status,
        }
    }

    /// Enclosure of `max(a, b)`.
    pub fn max(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
            status: join(self.status, other.status),
        }
    }

    /// Enclosure of `a + b`.
    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
            status: join(self.status, other.status),
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo * other.lo,
            hi: self.hi * other.hi,
            status: join(self.status, other.status),
        }
    }

    /// Intersection, assuming both enclose the same value. Falls back to the
    /// tighter-upper-bound interval if rounding made them disjoint.
    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Interval::new(lo, hi)
        } else {
            Interval::new(hi, hi)
        }
    }
}

fn join(a: Status, b: Status) -> Status {
    if a == Status::Exact && b == Status::Exact {
        Status::Exact
    } else {
        Status::Approximate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_width() {
        assert!(Interval::new(1.0, 1.0 + 1e-12).is_exact());
        assert!(!Interval::new(1.0, 1.1).is_exact());
    }

    #[test]
    fn max_and_add() {
        let a = Interval::new(1.0, 2.0);
        let b = Interval::exact(1.5);
        assert_eq!(a.max(&b).lo, 1.5);
        assert_eq!(a.max(&b).hi, 2.0);
        assert_eq!(a.add(&b).hi, 3.5);
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&Interval::exact(1.0)).unwrap();
        assert_eq!(s, r#"{"lo":1.0,"hi":1.0,"status":"exact"}"#);
    }
}
