//! Fixed-point decimal with nine fractional digits.
//!
//! Every value on the policy path (ratios, weights, index levels, policy
//! factors, coefficients) is a [`Dec`]: an `i128` count of `10^-9` units.
//! There is no binary floating point anywhere in this type. Multiplication
//! and division round half-to-even at the ninth digit; intermediates that do
//! not fit in `i128` are carried in a big integer so results never depend on
//! the evaluation route.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits carried by [`Dec`].
pub const FRACTIONAL_DIGITS: u32 = 9;

/// `10^FRACTIONAL_DIGITS`.
pub const SCALE: i128 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("empty decimal literal")]
    Empty,
    #[error("invalid decimal literal `{0}`")]
    Invalid(String),
    #[error("decimal literal `{0}` has more than 9 fractional digits")]
    TooPrecise(String),
    #[error("decimal literal `{0}` is out of range")]
    OutOfRange(String),
}

#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dec(i128);

impl Dec {
    pub const ZERO: Dec = Dec(0);
    pub const ONE: Dec = Dec(SCALE);
    /// Smallest positive value, `1e-9`.
    pub const ULP: Dec = Dec(1);

    pub const fn from_raw(raw: i128) -> Self {
        Dec(raw)
    }

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub const fn from_int(v: i64) -> Self {
        Dec(v as i128 * SCALE)
    }

    /// `numerator / denominator`, rounded half-even. Panics on a zero denominator.
    pub fn from_ratio(numerator: i128, denominator: i128) -> Self {
        Dec(mul_div_half_even(numerator, SCALE, denominator).expect("ratio out of range"))
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn abs(self) -> Self {
        Dec(self.0.abs())
    }

    pub fn checked_add(self, rhs: Dec) -> Option<Dec> {
        self.0.checked_add(rhs.0).map(Dec)
    }

    pub fn checked_sub(self, rhs: Dec) -> Option<Dec> {
        self.0.checked_sub(rhs.0).map(Dec)
    }

    pub fn checked_mul(self, rhs: Dec) -> Option<Dec> {
        mul_div_half_even(self.0, rhs.0, SCALE).map(Dec)
    }

    /// Half-even division; `None` on division by zero or overflow.
    pub fn checked_div(self, rhs: Dec) -> Option<Dec> {
        if rhs.0 == 0 {
            return None;
        }
        mul_div_half_even(self.0, SCALE, rhs.0).map(Dec)
    }

    /// `floor(self * units)` for a nonnegative factor; `None` if negative or out of range.
    pub fn mul_floor_units(self, units: u64) -> Option<u64> {
        if self.0 < 0 {
            return None;
        }
        let q = match self.0.checked_mul(units as i128) {
            Some(p) => p / SCALE,
            None => {
                let p = BigInt::from(self.0) * BigInt::from(units) / BigInt::from(SCALE);
                i128::try_from(p).ok()?
            }
        };
        u64::try_from(q).ok()
    }

    /// Exact product `self * units` expressed in `10^-9` units (no rounding).
    pub fn mul_units_exact(self, units: u64) -> Option<i128> {
        self.0.checked_mul(units as i128)
    }

    pub fn clamp_min(self, lo: Dec) -> Dec {
        self.max(lo)
    }

    /// Integer part, truncated toward zero.
    pub fn trunc_int(self) -> i128 {
        self.0 / SCALE
    }
}

/// `round_half_even(a * b / c)` without intermediate overflow.
pub(crate) fn mul_div_half_even(a: i128, b: i128, c: i128) -> Option<i128> {
    if c == 0 {
        return None;
    }
    match a.checked_mul(b) {
        Some(p) => Some(div_half_even_i128(p, c)),
        None => {
            let p = BigInt::from(a) * BigInt::from(b);
            i128::try_from(div_half_even_big(p, BigInt::from(c))).ok()
        }
    }
}

/// `⌈a·b / c⌉` for `a, b ≥ 0` and `c > 0`, widening when the product overflows.
pub(crate) fn mul_div_ceil(a: i128, b: i128, c: i128) -> Option<i128> {
    if c <= 0 || a < 0 || b < 0 {
        return None;
    }
    match a.checked_mul(b) {
        Some(p) => Some(p / c + i128::from(p % c != 0)),
        None => {
            let p = BigInt::from(a) * BigInt::from(b);
            let c = BigInt::from(c);
            let q = (&p + &c - 1u32) / &c;
            i128::try_from(q).ok()
        }
    }
}

fn div_half_even_i128(n: i128, d: i128) -> i128 {
    let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
    let q = n.div_euclid(d);
    let r = n.rem_euclid(d);
    // 0 <= r < d; compare 2r against d without overflow
    match r.cmp(&(d - r)) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.rem_euclid(2) == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

fn div_half_even_big(n: BigInt, d: BigInt) -> BigInt {
    use num_bigint::Sign;
    let (n, d) = if d.sign() == Sign::Minus { (-n, -d) } else { (n, d) };
    // floor division for possibly negative n
    let mut q = &n / &d;
    let mut r = &n - &q * &d;
    if r.sign() == Sign::Minus {
        q -= 1;
        r += &d;
    }
    let twice: BigInt = &r + &r;
    match twice.cmp(&d) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if (&q % 2u32) == BigInt::from(0) {
                q
            } else {
                q + 1
            }
        }
    }
}

impl Add for Dec {
    type Output = Dec;
    fn add(self, rhs: Dec) -> Dec {
        self.checked_add(rhs).expect("decimal overflow")
    }
}

impl Sub for Dec {
    type Output = Dec;
    fn sub(self, rhs: Dec) -> Dec {
        self.checked_sub(rhs).expect("decimal overflow")
    }
}

impl Mul for Dec {
    type Output = Dec;
    fn mul(self, rhs: Dec) -> Dec {
        self.checked_mul(rhs).expect("decimal overflow")
    }
}

impl Neg for Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec(-self.0)
    }
}

impl std::iter::Sum for Dec {
    fn sum<I: Iterator<Item = Dec>>(iter: I) -> Dec {
        iter.fold(Dec::ZERO, |a, b| a + b)
    }
}

impl FromStr for Dec {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(DecimalError::Empty);
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
            return Err(DecimalError::Invalid(s.to_string()));
        }
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) || (body.contains('.') && frac_part.is_empty() && int_part.is_empty()) {
            return Err(DecimalError::Invalid(s.to_string()));
        }
        if frac_part.len() > FRACTIONAL_DIGITS as usize {
            // trailing zeros beyond the ninth digit carry no information
            if frac_part[FRACTIONAL_DIGITS as usize..].bytes().any(|b| b != b'0') {
                return Err(DecimalError::TooPrecise(s.to_string()));
            }
        }
        let mut raw: i128 = 0;
        let overflow = || DecimalError::OutOfRange(s.to_string());
        for b in int_part.bytes() {
            raw = raw
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as i128))
                .ok_or_else(overflow)?;
        }
        raw = raw.checked_mul(SCALE).ok_or_else(overflow)?;
        let mut place = SCALE / 10;
        for b in frac_part.bytes().take(FRACTIONAL_DIGITS as usize) {
            raw += (b - b'0') as i128 * place;
            place /= 10;
        }
        Ok(Dec(if negative { -raw } else { raw }))
    }
}

impl fmt::Display for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        let s = SCALE as u128;
        write!(f, "{sign}{}.{:09}", a / s, a % s)
    }
}

impl fmt::Debug for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dec({self})")
    }
}

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DecVisitor;
        impl Visitor<'_> for DecVisitor {
            type Value = Dec;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a decimal string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Dec, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Dec, E> {
                Ok(Dec::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Dec, E> {
                i64::try_from(v).map(Dec::from_int).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(DecVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_render() {
        assert_eq!(d("160").to_string(), "160.000000000");
        assert_eq!(d("-0.5").to_string(), "-0.500000000");
        assert_eq!(d(".25").to_string(), "0.250000000");
        assert_eq!(d("1.000000000000").to_string(), "1.000000000");
        assert_eq!(d("121.586").raw(), 121_586_000_000);
    }

    #[test]
    fn parse_rejects() {
        assert!(matches!("".parse::<Dec>(), Err(DecimalError::Empty)));
        assert!(matches!("1e5".parse::<Dec>(), Err(DecimalError::Invalid(_))));
        assert!(matches!(".".parse::<Dec>(), Err(DecimalError::Invalid(_))));
        assert!(matches!("1.0000000001".parse::<Dec>(), Err(DecimalError::TooPrecise(_))));
        assert!(matches!("12a".parse::<Dec>(), Err(DecimalError::Invalid(_))));
    }

    #[test]
    fn half_even_rounding() {
        // 0.5e-9 ties go to even
        assert_eq!(mul_div_half_even(5, 1, 10), Some(0));
        assert_eq!(mul_div_half_even(15, 1, 10), Some(2));
        assert_eq!(mul_div_half_even(25, 1, 10), Some(2));
        assert_eq!(mul_div_half_even(-15, 1, 10), Some(-2));
        assert_eq!(mul_div_half_even(-25, 1, 10), Some(-2));
        assert_eq!(mul_div_half_even(26, 1, 10), Some(3));
        assert_eq!(Dec::from_ratio(1, 3).to_string(), "0.333333333");
        assert_eq!(Dec::from_ratio(2, 3).to_string(), "0.666666667");
    }

    #[test]
    fn wide_intermediates_match_narrow_route() {
        // 3e13 * 3e13 overflows i128 raw-product; result is still exact
        let big = d("30000000000000");
        let p = big * big;
        assert_eq!(p, d("900000000000000000000000000"));
        assert_eq!(
            mul_div_half_even(i128::MAX / 2, 4, 8),
            Some(div_half_even_i128(i128::MAX / 2, 2))
        );
    }

    #[test]
    fn mul_floor_units_truncates() {
        assert_eq!(d("0.4").mul_floor_units(1000), Some(400));
        assert_eq!(d("0.333333333").mul_floor_units(10), Some(3));
        assert_eq!(d("-0.1").mul_floor_units(10), None);
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(raw in any::<i64>()) {
            let v = Dec::from_raw(raw as i128 * 1_000 + 7);
            prop_assert_eq!(v.to_string().parse::<Dec>().unwrap(), v);
        }

        #[test]
        fn big_and_small_routes_agree(a in -(1i128 << 60)..(1i128 << 60), b in -(1i128 << 60)..(1i128 << 60), c in 1i128..(1i128 << 40)) {
            let big = div_half_even_big(BigInt::from(a) * BigInt::from(b), BigInt::from(c));
            let small = mul_div_half_even(a, b, c).unwrap();
            prop_assert_eq!(BigInt::from(small), big);
        }
    }
}
