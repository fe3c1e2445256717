//! Exact rational arithmetic and the `"p/q"` interchange syntax.
//!
//! Every probability, state value and solver coefficient in this crate is a
//! [`Rational`]: an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator. Arithmetic is exact, so solver verdicts are proofs
//! rather than approximations.
//!
//! Document formats carry rationals as strings, either `"3/4"` or `"1"`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Exact rational number, normalised (gcd 1, positive denominator).
pub type Rational = num_rational::BigRational;

/// Error for strings that do not denote a rational number.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {input:?}: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: String,
}

/// Parses `"p/q"` or `"p"` (optionally signed) into a [`Rational`].
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason: &str| ParseRationalError {
        input: s.to_owned(),
        reason: reason.to_owned(),
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty string"));
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (t, None),
    };
    let num: BigInt = num.parse().map_err(|_| err("numerator is not an integer"))?;
    let den: BigInt = match den {
        Some(d) => d.parse().map_err(|_| err("denominator is not an integer"))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational in the interchange syntax: `"3/4"`, or `"2"` when the
/// denominator is one.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Shorthand for small constants, mostly in tests and the registry.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_zero() -> Rational {
    Rational::zero()
}

pub fn rational_one() -> Rational {
    Rational::one()
}

/// True when `0 <= r <= 1`.
pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("1").unwrap(), ratio(1, 1));
        assert_eq!(parse_rational(" -2/6 ").unwrap(), ratio(-1, 3));
        assert_eq!(format_rational(&ratio(6, 8)), "3/4");
        assert_eq!(format_rational(&ratio(4, 2)), "2");
        assert_eq!(format_rational(&ratio(0, 5)), "0");
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in ["", "a", "1/0", "1/2/3", "0.5"] {
            assert!(parse_rational(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn normalisation_is_canonical() {
        let a = parse_rational("2/-4").unwrap();
        assert_eq!(a, ratio(-1, 2));
        assert_eq!(format_rational(&a), "-1/2");
    }

    #[test]
    fn unit_interval() {
        assert!(in_unit_interval(&ratio(0, 1)));
        assert!(in_unit_interval(&ratio(1, 1)));
        assert!(in_unit_interval(&ratio(1, 2)));
        assert!(!in_unit_interval(&ratio(-1, 2)));
        assert!(!in_unit_interval(&ratio(5, 4)));
    }
}
