use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

/// A non-empty numeric interval with explicit endpoint closedness.
///
/// Unbounded ends are stored as `±inf` and are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
}

impl Interval {
    /// Returns `None` when the described set is empty.
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() {
            return None;
        }
        let lo_closed = lo_closed && lo.is_finite();
        let hi_closed = hi_closed && hi.is_finite();
        match lo.partial_cmp(&hi)? {
            Ordering::Less => Some(Interval { lo, hi, lo_closed, hi_closed }),
            Ordering::Equal if lo_closed && hi_closed => Some(Interval { lo, hi, lo_closed, hi_closed }),
            _ => None,
        }
    }

    pub fn unbounded() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_closed: false, hi_closed: false }
    }

    /// `[lo, +inf)`
    pub fn at_least(lo: f64) -> Self {
        Self::new(lo, f64::INFINITY, true, false).expect("finite lower bound")
    }

    /// `(lo, +inf)`
    pub fn greater_than(lo: f64) -> Self {
        Self::new(lo, f64::INFINITY, false, false).expect("finite lower bound")
    }

    /// `(-inf, hi]`
    pub fn at_most(hi: f64) -> Self {
        Self::new(f64::NEG_INFINITY, hi, false, true).expect("finite upper bound")
    }

    /// `(-inf, hi)`
    pub fn less_than(hi: f64) -> Self {
        Self::new(f64::NEG_INFINITY, hi, false, false).expect("finite upper bound")
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Option<Self> {
        Self::new(lo, hi, true, false)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo } else { v > self.lo };
        let below = if self.hi_closed { v <= self.hi } else { v < self.hi };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lo, lo_closed) = tighter_lo(self, other);
        let (hi, hi_closed) = tighter_hi(self, other);
        Interval::new(lo, hi, lo_closed, hi_closed)
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.intersect(other).is_some()
    }

    /// Smallest interval containing both operands. For overlapping operands this
    /// is their union; for disjoint ones it bridges the gap between them.
    pub fn hull(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo).unwrap() {
            Ordering::Less => (self.lo, self.lo_closed),
            Ordering::Greater => (other.lo, other.lo_closed),
            Ordering::Equal => (self.lo, self.lo_closed || other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi).unwrap() {
            Ordering::Greater => (self.hi, self.hi_closed),
            Ordering::Less => (other.hi, other.hi_closed),
            Ordering::Equal => (self.hi, self.hi_closed || other.hi_closed),
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }

    /// `self ∖ other` as at most two disjoint intervals, left to right.
    pub fn difference(&self, other: &Interval) -> Vec<Interval> {
        if !self.intersects(other) {
            return vec![*self];
        }
        let left = Interval::new(self.lo, other.lo, self.lo_closed, !other.lo_closed);
        let right = Interval::new(other.hi, self.hi, !other.hi_closed, self.hi_closed);
        left.into_iter().chain(right).collect()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        self.intersect(other).as_ref() == Some(self)
    }
}

fn tighter_lo(a: &Interval, b: &Interval) -> (f64, bool) {
    match a.lo.partial_cmp(&b.lo).unwrap() {
        Ordering::Greater => (a.lo, a.lo_closed),
        Ordering::Less => (b.lo, b.lo_closed),
        Ordering::Equal => (a.lo, a.lo_closed && b.lo_closed),
    }
}

fn tighter_hi(a: &Interval, b: &Interval) -> (f64, bool) {
    match a.hi.partial_cmp(&b.hi).unwrap() {
        Ordering::Less => (a.hi, a.hi_closed),
        Ordering::Greater => (b.hi, b.hi_closed),
        Ordering::Equal => (a.hi, a.hi_closed && b.hi_closed),
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, false) => write!(f, "{} {}", if self.lo_closed { ">=" } else { ">" }, self.lo),
            (false, true) => write!(f, "{} {}", if self.hi_closed { "<=" } else { "<" }, self.hi),
            (false, false) => f.write_str("any"),
            (true, true) if self.lo == self.hi => write!(f, "= {}", self.lo),
            (true, true) => write!(
                f,
                "in {}{}, {}{}",
                if self.lo_closed { '[' } else { '(' },
                self.lo,
                self.hi,
                if self.hi_closed { ']' } else { ')' }
            ),
        }
    }
}

/// Constraint on a single feature.
#[derive(Debug, Clone, PartialEq)]
pub enum Subspace {
    Interval(Interval),
    /// Non-empty set of category codes.
    Categories(BTreeSet<u32>),
}

impl Subspace {
    pub fn categories(codes: impl IntoIterator<Item = u32>) -> Option<Self> {
        let set: BTreeSet<u32> = codes.into_iter().collect();
        (!set.is_empty()).then_some(Subspace::Categories(set))
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            Subspace::Interval(i) => i.contains(v),
            Subspace::Categories(set) => v >= 0.0 && v.fract() == 0.0 && set.contains(&(v as u32)),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, Subspace::Categories(_))
    }

    pub fn intersect(&self, other: &Subspace) -> Option<Subspace> {
        match (self, other) {
            (Subspace::Interval(a), Subspace::Interval(b)) => a.intersect(b).map(Subspace::Interval),
            (Subspace::Categories(a), Subspace::Categories(b)) => {
                Subspace::categories(a.intersection(b).copied())
            }
            _ => None,
        }
    }

    /// Join of two constraints on the same feature: union for overlapping
    /// subspaces, bridging hull for disjoint intervals, set union for categories.
    pub fn join(&self, other: &Subspace) -> Subspace {
        match (self, other) {
            (Subspace::Interval(a), Subspace::Interval(b)) => Subspace::Interval(a.hull(b)),
            (Subspace::Categories(a), Subspace::Categories(b)) => Subspace::Categories(a | b),
            _ => panic!("join of subspaces of different kinds"),
        }
    }

    /// `self ∖ other` split into disjoint non-empty pieces (empty vec when nothing remains).
    pub fn difference(&self, other: &Subspace) -> Vec<Subspace> {
        match (self, other) {
            (Subspace::Interval(a), Subspace::Interval(b)) => {
                a.difference(b).into_iter().map(Subspace::Interval).collect()
            }
            (Subspace::Categories(a), Subspace::Categories(b)) => {
                Subspace::categories(a.difference(b).copied()).into_iter().collect()
            }
            _ => panic!("difference of subspaces of different kinds"),
        }
    }
}
