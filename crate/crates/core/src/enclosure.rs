use std::fmt;

use thiserror::Error;

use crate::rational::{fmt_rational, in_unit, one, zero, Rational};

/// A closed rational interval `[lo, hi]` inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: Rational,
    hi: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid enclosure [{lo}, {hi}]")]
pub struct EnclosureError {
    pub lo: String,
    pub hi: String,
}

impl Enclosure {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, EnclosureError> {
        if in_unit(&lo) && in_unit(&hi) && lo <= hi {
            Ok(Enclosure { lo, hi })
        } else {
            Err(EnclosureError { lo: fmt_rational(&lo), hi: fmt_rational(&hi) })
        }
    }

    /// Clips both ends into `[0, 1]` first; useful after adding error terms.
    pub fn clamped(lo: Rational, hi: Rational) -> Self {
        let clip = |r: Rational| r.max(zero()).min(one());
        let (lo, hi) = (clip(lo), clip(hi));
        assert!(lo <= hi, "clamped enclosure with lo > hi");
        Enclosure { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        Enclosure::new(v.clone(), v).expect("point enclosure outside [0,1]")
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_within(&self, outer: &Enclosure) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    /// Intersection of two enclosures of the same quantity.
    pub fn intersect(&self, other: &Enclosure) -> Option<Enclosure> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo <= hi).then_some(Enclosure { lo, hi })
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lo {} hi {}", fmt_rational(&self.lo), fmt_rational(&self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn rejects_bad_bounds() {
        assert!(Enclosure::new(q(1, 2), q(1, 3)).is_err());
        assert!(Enclosure::new(q(-1, 2), q(1, 3)).is_err());
        assert!(Enclosure::new(q(1, 2), q(3, 2)).is_err());
        let e = Enclosure::new(q(1, 4), q(1, 2)).unwrap();
        assert_eq!(e.to_string(), "lo 1/4 hi 1/2");
        assert!(e.contains(&q(1, 3)));
    }

    #[test]
    fn intersection() {
        let a = Enclosure::new(q(0, 1), q(1, 2)).unwrap();
        let b = Enclosure::new(q(1, 4), q(3, 4)).unwrap();
        assert_eq!(a.intersect(&b).unwrap(), Enclosure::new(q(1, 4), q(1, 2)).unwrap());
        let c = Enclosure::new(q(3, 4), q(1, 1)).unwrap();
        assert!(a.intersect(&c).is_none());
    }
}
