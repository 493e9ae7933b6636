//! Exact rationals and the truncated ("dotted") arithmetic of `[0,1]`.

use std::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational `{text}`: {reason}")]
pub struct ParseRationalError {
    pub text: String,
    pub reason: &'static str,
}

/// Shorthand constructor, panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `num/den` or a bare integer.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError { text: text.to_string(), reason };
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let valid = |s: &str| {
        let digits = s.strip_prefix('-').unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(n) || !valid(d) || d.starts_with('-') {
        return Err(err("expected num/den with decimal integers"));
    }
    let n: BigInt = n.parse().map_err(|_| err("bad numerator"))?;
    let d: BigInt = d.parse().map_err(|_| err("bad denominator"))?;
    if d.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(n, d))
}

/// Canonical `num/den` rendering (always with a denominator).
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Display adapter for `num/den` rendering.
pub struct Frac<'a>(pub &'a Rational);

impl fmt::Display for Frac<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

pub fn in_unit(r: &Rational) -> bool {
    !r.is_negative() && *r <= one()
}

/// `min(x + y, 1)`
pub fn dot_plus(x: &Rational, y: &Rational) -> Rational {
    (x + y).min(one())
}

/// `max(x - y, 0)`
pub fn dot_minus(x: &Rational, y: &Rational) -> Rational {
    (x - y).max(zero())
}

/// Dotted product: `min(c * x, 1)`.
pub fn dot_scale(c: &Rational, x: &Rational) -> Rational {
    (c * x).min(one())
}

pub fn neg(x: &Rational) -> Rational {
    one() - x
}

pub fn pow2_inv(i: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << i)
}

/// Returns `(lo, hi)` with `lo <= sqrt(x) <= hi` and `hi - lo <= 2^-bits`.
/// Exact (`lo == hi`) when `x` is the square of a rational.
pub fn sqrt_bounds(x: &Rational, bits: usize) -> (Rational, Rational) {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    if let Some(r) = exact_sqrt(x) {
        return (r.clone(), r);
    }
    // sqrt(n/d) = sqrt(n*d) / d, scaled by 2^bits.
    let scale = BigInt::one() << bits;
    let radicand = x.numer() * x.denom() * &scale * &scale;
    let root = radicand.sqrt();
    let den = x.denom() * &scale;
    let lo = Rational::new(root.clone(), den.clone());
    let hi = Rational::new(root + BigInt::one(), den);
    (lo, hi)
}

/// Square root when it is rational.
pub fn exact_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| num::integer::lcm(acc, v.denom().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("1").unwrap(), q(1, 1));
        assert_eq!(fmt_rational(&q(1, 1)), "1/1");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
        assert!(parse_rational("1/-2").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn dotted_ops() {
        assert_eq!(dot_plus(&q(3, 4), &q(1, 2)), one());
        assert_eq!(dot_minus(&q(1, 2), &q(3, 4)), zero());
        assert_eq!(dot_scale(&q(10, 1), &q(1, 5)), one());
        assert_eq!(neg(&q(2, 5)), q(3, 5));
    }

    #[test]
    fn sqrt_bounds_bracket() {
        assert_eq!(sqrt_bounds(&q(1, 4), 10), (q(1, 2), q(1, 2)));
        for k in 1..50 {
            let x = q(k, 37);
            let (lo, hi) = sqrt_bounds(&x, 30);
            assert!(&lo * &lo <= x && x <= &hi * &hi);
            assert!(&hi - &lo <= pow2_inv(30));
        }
    }
}
