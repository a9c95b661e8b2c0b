use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A decimal with exactly one fractional digit, stored as an integer count
/// of tenths. All rounding into this type is round-half-even on the exact
/// decimal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Tenths(pub i64);

/// Rounds `num / den` to the nearest integer, ties to even. `den > 0`.
fn div_round_half_even(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a decimal number: {0:?}")]
pub struct ParseTenthsError(pub String);

impl Tenths {
    pub const ZERO: Tenths = Tenths(0);
    pub const HUNDRED: Tenths = Tenths(1000);

    /// `100 * num / den` as a percentage.
    pub fn percent(num: u64, den: u64) -> Tenths {
        assert!(den > 0, "percentage of an empty count");
        Tenths(div_round_half_even(1000 * num as i128, den as i128) as i64)
    }

    /// Rounds the shortest decimal representation of `x`.
    pub fn from_f64(x: f64) -> Tenths {
        assert!(x.is_finite(), "non-finite value {x}");
        format!("{x}").parse().expect("Display of a finite f64 is a decimal")
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }

    pub fn max(self, other: Tenths) -> Tenths {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl std::ops::Sub for Tenths {
    type Output = Tenths;

    fn sub(self, rhs: Tenths) -> Tenths {
        Tenths(self.0 - rhs.0)
    }
}

impl FromStr for Tenths {
    type Err = ParseTenthsError;

    /// Accepts `[-+]digits[.digits]` with optional exponent, as printed by
    /// Rust and most table tools, and rounds half-even to one decimal.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTenthsError(s.to_string());
        let t = s.trim();
        let (mantissa, exp) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (neg, body) = match mantissa.as_bytes().first() {
            Some(b'-') => (true, &mantissa[1..]),
            Some(b'+') => (false, &mantissa[1..]),
            _ => (false, mantissa),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let digits = digits.trim_start_matches('0');
        let scale = frac.len() as i32 - exp - 1;
        if digits.len() > 30 || scale.abs() > 30 {
            return Err(err());
        }
        let mut v: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| err())? };
        if neg {
            v = -v;
        }
        let tenths = if scale <= 0 {
            v.checked_mul(10i128.pow((-scale) as u32)).ok_or_else(err)?
        } else {
            div_round_half_even(v, 10i128.pow(scale as u32))
        };
        i64::try_from(tenths).map(Tenths).map_err(|_| err())
    }
}

impl fmt::Display for Tenths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{}", a / 10, a % 10)
    }
}

impl Serialize for Tenths {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Tenths {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        if !x.is_finite() {
            return Err(serde::de::Error::custom("non-finite tenths value"));
        }
        Ok(Tenths::from_f64(x))
    }
}
