//! Activity rates: exact positive rationals or weighted passive (`T`) rates.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Build a rational from a numerator and denominator.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `p/q` form, always with an explicit denominator. Used by JSON exports.
pub fn to_fraction_string(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parse `p/q`, `p`, or a finite decimal such as `1.25` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((numer, denom)) = text.split_once('/') {
        let numer: BigInt = numer.trim().parse().ok()?;
        let denom: BigInt = denom.trim().parse().ok()?;
        if denom.is_zero() {
            return None;
        }
        return Some(Rational::new(numer, denom));
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{whole}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(all, scale);
    Some(if negative { -value } else { value })
}

/// Render a rational as an integer, an exact decimal, or `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut denom = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0usize;
    let mut twos = 0usize;
    let mut fives = 0usize;
    while denom.is_even() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return to_fraction_string(value);
    }
    digits += twos.max(fives);
    let scaled = value * Rational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let scaled = scaled.to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let magnitude = scaled.abs().to_string();
    let padded = format!("{magnitude:0>width$}", width = digits + 1);
    let (whole, frac) = padded.split_at(padded.len() - digits);
    format!("{sign}{whole}.{frac}")
}

/// An activity rate.
///
/// `Passive(w)` stands for `w` times the unspecified rate `T`. Every active
/// rate is smaller than every passive rate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Rate {
    Active(Rational),
    Passive(Rational),
}

impl Rate {
    pub fn active(value: Rational) -> Rate {
        Rate::Active(value)
    }

    pub fn passive() -> Rate {
        Rate::Passive(Rational::one())
    }

    pub fn is_active(&self) -> bool {
        matches!(self, Rate::Active(_))
    }

    pub fn is_passive(&self) -> bool {
        matches!(self, Rate::Passive(_))
    }

    /// The numeric value (active rate or passive weight).
    pub fn value(&self) -> &Rational {
        match self {
            Rate::Active(v) | Rate::Passive(v) => v,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.value().is_positive()
    }

    /// Same-kind addition; `None` when an active and a passive rate meet.
    pub fn checked_add(&self, other: &Rate) -> Option<Rate> {
        match (self, other) {
            (Rate::Active(a), Rate::Active(b)) => Some(Rate::Active(a + b)),
            (Rate::Passive(a), Rate::Passive(b)) => Some(Rate::Passive(a + b)),
            _ => None,
        }
    }

    pub fn scale(&self, factor: usize) -> Rate {
        let factor = Rational::from_integer(BigInt::from(factor));
        match self {
            Rate::Active(v) => Rate::Active(v * &factor),
            Rate::Passive(v) => Rate::Passive(v * &factor),
        }
    }

    fn same_kind(&self, other: &Rate) -> bool {
        self.is_active() == other.is_active()
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rate::Active(a), Rate::Active(b)) => a.cmp(b),
            (Rate::Passive(a), Rate::Passive(b)) => a.cmp(b),
            (Rate::Active(_), Rate::Passive(_)) => Ordering::Less,
            (Rate::Passive(_), Rate::Active(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Active(v) => f.write_str(&format_rational(v)),
            Rate::Passive(w) if w.is_one() => f.write_str("T"),
            Rate::Passive(w) => write!(f, "{}*T", format_rational(w)),
        }
    }
}

/// Rate of a shared activity: `(r1/raP) * (r2/raQ) * min(raP, raQ)`.
///
/// `r1` contributes to `apparent_left` and `r2` to `apparent_right`, so each
/// must have the same kind as its apparent rate.
pub fn shared_rate(r1: &Rate, r2: &Rate, apparent_left: &Rate, apparent_right: &Rate) -> Result<Rate> {
    if !r1.same_kind(apparent_left) || !r2.same_kind(apparent_right) {
        return Err(Error::RateKind(format!(
            "{r1} against apparent rate {apparent_left}, {r2} against apparent rate {apparent_right}"
        )));
    }
    let left_share = r1.value() / apparent_left.value();
    let right_share = r2.value() / apparent_right.value();
    let slower = apparent_left.min(apparent_right);
    let value = left_share * right_share * slower.value();
    Ok(match slower {
        Rate::Active(_) => Rate::Active(value),
        Rate::Passive(_) => Rate::Passive(value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: i64) -> Rate {
        Rate::Active(int(n))
    }

    fn p(n: i64) -> Rate {
        Rate::Passive(int(n))
    }

    #[test]
    fn ordering_puts_passive_above_active() {
        assert!(a(1_000_000) < p(1));
        assert!(p(1) < p(2));
        assert!(a(1) < a(2));
        assert!(Rate::Active(ratio(1, 3)) < Rate::Active(ratio(1, 2)));
    }

    #[test]
    fn addition_is_kind_preserving() {
        assert_eq!(a(1).checked_add(&a(2)), Some(a(3)));
        assert_eq!(p(1).checked_add(&p(1)), Some(p(2)));
        assert_eq!(a(1).checked_add(&p(1)), None);
    }

    #[test]
    fn shared_rate_examples() {
        assert_eq!(shared_rate(&a(2), &a(3), &a(2), &a(3)).unwrap(), a(2));
        assert_eq!(shared_rate(&a(2), &p(1), &a(2), &p(1)).unwrap(), a(2));
        assert_eq!(shared_rate(&a(4), &a(6), &a(4), &a(12)).unwrap(), a(2));
        assert_eq!(shared_rate(&p(1), &a(3), &p(2), &a(3)).unwrap(), Rate::Active(ratio(3, 2)));
        assert_eq!(
            shared_rate(&p(1), &p(1), &p(2), &p(3)).unwrap(),
            Rate::Passive(ratio(1, 3))
        );
        assert!(shared_rate(&p(1), &a(1), &a(1), &a(1)).is_err());
    }

    #[test]
    fn rational_text_round_trips() {
        for text in ["1", "0.5", "1/3", "2.25", "7/6", "100"] {
            let value = parse_rational(text).unwrap();
            assert_eq!(parse_rational(&format_rational(&value)).unwrap(), value, "{text}");
        }
        assert_eq!(format_rational(&ratio(1, 3)), "1/3");
        assert_eq!(format_rational(&ratio(1, 2)), "0.5");
        assert_eq!(format_rational(&ratio(3, 40)), "0.075");
        assert_eq!(format_rational(&int(4)), "4");
        assert_eq!(parse_rational("1.0").unwrap(), int(1));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational(".").is_none());
    }

    #[test]
    fn display_of_passive_rates() {
        assert_eq!(p(1).to_string(), "T");
        assert_eq!(p(2).to_string(), "2*T");
        assert_eq!(Rate::Active(ratio(1, 3)).to_string(), "1/3");
    }
}
