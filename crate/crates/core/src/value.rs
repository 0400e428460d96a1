//! Exact fixed-point amounts for valuations, bids and payments.
//!
//! Every amount is an integer count of nano-units (10^-9). Mechanisms only
//! compare, add and subtract amounts, so all payment identities hold exactly.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of decimal places carried internally.
pub const MAX_DECIMALS: u32 = 9;

const SCALE: i128 = 1_000_000_000;

/// Largest accepted magnitude, in whole units.
const MAX_UNITS: i128 = 1_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("empty decimal string")]
    Empty,
    #[error("malformed decimal `{0}`")]
    Malformed(String),
    #[error("`{0}` has more than {MAX_DECIMALS} decimal places")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    OutOfRange(String),
    #[error("precision {0} exceeds the supported {MAX_DECIMALS} decimal places")]
    BadPrecision(u32),
}

/// A signed decimal amount with nine fractional digits.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(i128);

impl Value {
    pub const ZERO: Value = Value(0);

    /// Whole units, e.g. `Value::from_units(12)` is 12.
    pub const fn from_units(units: i64) -> Self {
        Value(units as i128 * SCALE)
    }

    /// Raw nano-unit count.
    pub const fn from_raw(raw: i128) -> Self {
        Value(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Smallest representable positive amount.
    pub const fn epsilon() -> Self {
        Value(1)
    }

    /// Midpoint rounded toward negative infinity.
    pub fn midpoint(self, other: Value) -> Value {
        Value((self.0 + other.0).div_euclid(2))
    }

    /// Parses a decimal string and rounds it (half away from zero) to
    /// `precision` fractional digits.
    pub fn parse_quantized(s: &str, precision: u32) -> Result<Value, ValueError> {
        if precision > MAX_DECIMALS {
            return Err(ValueError::BadPrecision(precision));
        }
        let (negative, int_part, frac_part) = split_decimal(s)?;
        let keep = frac_part.len().min(precision as usize);
        let mut raw = parse_digits(s, int_part)? * SCALE;
        let mut frac: i128 = 0;
        for c in frac_part[..keep].bytes() {
            frac = frac * 10 + i128::from(c - b'0');
        }
        raw += frac * 10_i128.pow(MAX_DECIMALS - keep as u32);
        if let Some(&next) = frac_part.as_bytes().get(keep) {
            if next >= b'5' {
                raw += 10_i128.pow(MAX_DECIMALS - keep as u32);
            }
        }
        if raw > MAX_UNITS * SCALE {
            return Err(ValueError::OutOfRange(s.to_string()));
        }
        Ok(Value(if negative { -raw } else { raw }))
    }

    /// Rounds to `precision` fractional digits, half away from zero.
    pub fn quantize(self, precision: u32) -> Result<Value, ValueError> {
        if precision > MAX_DECIMALS {
            return Err(ValueError::BadPrecision(precision));
        }
        let unit = 10_i128.pow(MAX_DECIMALS - precision);
        let half = unit / 2;
        let magnitude = self.0.abs();
        let rounded = if unit == 1 { magnitude } else { (magnitude + half) / unit * unit };
        Ok(Value(if self.0 < 0 { -rounded } else { rounded }))
    }
}

fn split_decimal(s: &str) -> Result<(bool, &str, &str), ValueError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ValueError::Empty);
    }
    let (negative, body) = match t.as_bytes()[0] {
        b'-' => (true, &t[1..]),
        b'+' => (false, &t[1..]),
        _ => (false, t),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(ValueError::Malformed(s.to_string()));
    }
    if !int_part.bytes().all(|c| c.is_ascii_digit()) || !frac_part.bytes().all(|c| c.is_ascii_digit()) {
        return Err(ValueError::Malformed(s.to_string()));
    }
    Ok((negative, int_part, frac_part))
}

fn parse_digits(original: &str, digits: &str) -> Result<i128, ValueError> {
    let trimmed = digits.trim_start_matches('0');
    if trimmed.len() > 18 {
        return Err(ValueError::OutOfRange(original.to_string()));
    }
    let mut acc: i128 = 0;
    for c in trimmed.bytes() {
        acc = acc * 10 + i128::from(c - b'0');
    }
    if acc > MAX_UNITS {
        return Err(ValueError::OutOfRange(original.to_string()));
    }
    Ok(acc)
}

impl FromStr for Value {
    type Err = ValueError;

    /// Exact parse; rejects strings with more than nine decimal places.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (_, _, frac) = split_decimal(s)?;
        if frac.len() > MAX_DECIMALS as usize {
            return Err(ValueError::TooPrecise(s.to_string()));
        }
        Value::parse_quantized(s, MAX_DECIMALS)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let magnitude = self.0.unsigned_abs();
        let int = magnitude / SCALE as u128;
        let frac = magnitude % SCALE as u128;
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let digits = format!("{frac:09}");
            write!(f, "{sign}{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for Value {
    type Output = Value;
    fn add(self, rhs: Value) -> Value {
        Value(self.0 + rhs.0)
    }
}

impl Sub for Value {
    type Output = Value;
    fn sub(self, rhs: Value) -> Value {
        Value(self.0 - rhs.0)
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        Value(-self.0)
    }
}

impl AddAssign for Value {
    fn add_assign(&mut self, rhs: Value) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Value {
    fn sub_assign(&mut self, rhs: Value) {
        self.0 -= rhs.0;
    }
}

impl Sum for Value {
    fn sum<I: Iterator<Item = Value>>(iter: I) -> Value {
        iter.fold(Value::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Value> for Value {
    fn sum<I: Iterator<Item = &'a Value>>(iter: I) -> Value {
        iter.copied().sum()
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;

        impl Visitor<'_> for ValueVisitor {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Value, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Value, E> {
                Ok(Value::from_units(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
                i64::try_from(v).map(Value::from_units).map_err(|_| E::custom("integer out of range"))
            }
        }

        deserializer.deserialize_any(ValueVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_prints_canonically() {
        let cases = [("12", "12"), ("-1", "-1"), ("0.50", "0.5"), ("+3.000", "3"), (".25", "0.25"), ("7.", "7")];
        for (input, shown) in cases {
            assert_eq!(input.parse::<Value>().unwrap().to_string(), shown, "{input}");
        }
        assert_eq!("0.000000001".parse::<Value>().unwrap(), Value::epsilon());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "-", ".", "1.2.3", "abc", "1e3", "0.0000000001"] {
            assert!(bad.parse::<Value>().is_err(), "{bad}");
        }
        assert!(matches!("9999999999999999999".parse::<Value>(), Err(ValueError::OutOfRange(_))));
    }

    #[test]
    fn quantization_rounds_half_away_from_zero() {
        assert_eq!(Value::parse_quantized("1.25", 1).unwrap().to_string(), "1.3");
        assert_eq!(Value::parse_quantized("1.24", 1).unwrap().to_string(), "1.2");
        assert_eq!(Value::parse_quantized("-1.25", 1).unwrap().to_string(), "-1.3");
        assert_eq!(Value::parse_quantized("0.123456789123", 6).unwrap().to_string(), "0.123457");
        assert_eq!("2.5".parse::<Value>().unwrap().quantize(0).unwrap(), Value::from_units(3));
        assert!(Value::ZERO.quantize(10).is_err());
    }

    #[test]
    fn midpoint_floors() {
        assert_eq!(Value::from_units(1).midpoint(Value::from_units(2)).to_string(), "1.5");
        assert_eq!(Value::from_raw(1).midpoint(Value::from_raw(2)), Value::from_raw(1));
    }

    #[test]
    fn serde_accepts_strings_and_integers() {
        let v: Vec<Value> = serde_json::from_str(r#"["1.5", 2, "-0.25"]"#).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["1.5","2","-0.25"]"#);
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(raw in -(10_i128.pow(20))..10_i128.pow(20)) {
            let v = Value::from_raw(raw);
            prop_assert_eq!(v.to_string().parse::<Value>().unwrap(), v);
        }
    }
}
