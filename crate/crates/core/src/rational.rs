//! Exact rational numbers and their text forms.

use malachite::num::arithmetic::traits::{Abs, Pow};
use malachite::num::conversion::traits::{IsInteger, RoundingFrom};
use malachite::rounding_modes::RoundingMode;
use malachite::{Integer, Natural};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Rational = malachite::Rational;

/// Sign tests used throughout the solver.
pub trait Signs {
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn is_zero(&self) -> bool;
}

impl Signs for Rational {
    fn is_positive(&self) -> bool {
        *self > 0
    }
    fn is_negative(&self) -> bool {
        *self < 0
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::from_signeds(numer, denom)
}

pub fn int(n: i64) -> Rational {
    Rational::from(n)
}

/// Parses `"p/q"`, `"n"` or `"-n"`. Surrounding whitespace is ignored.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = || Error::BadRational(text.to_string());
    let t = text.trim();
    let parse_int = |s: &str| -> Result<Integer> {
        let s = s.trim();
        let (neg, digits) = match s.strip_prefix('-') {
            Some(d) => (true, d),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n = Integer::from(Natural::from_str(digits).map_err(|_| bad())?);
        Ok(if neg { -n } else { n })
    };
    match t.split_once('/') {
        Some((p, q)) => {
            let q = parse_int(q)?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational::from_integers(parse_int(p)?, q))
        }
        None => Ok(Rational::from(parse_int(t)?)),
    }
}

/// `"p/q"` in lowest terms, or just `"n"` for integers.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    f64::rounding_from(r, RoundingMode::Nearest).0
}

/// Decimal rendering with 12 significant digits, `%g` style.
pub fn format_decimal(r: &Rational) -> String {
    format_significant(r, 12)
}

pub fn format_f64(x: f64) -> String {
    match Rational::try_from(x) {
        Ok(r) => format_significant(&r, 12),
        Err(_) => x.to_string(),
    }
}

fn format_significant(r: &Rational, digits: u64) -> String {
    if *r == 0 {
        return "0".to_string();
    }
    let neg = *r < 0;
    let a = r.abs();
    let ten = Natural::from(10u32);
    let estimate = to_f64(&a).log10().floor();
    let mut exp = if estimate.is_finite() {
        estimate as i64
    } else {
        0
    };
    let lower = (&ten).pow(digits - 1);
    let upper = &lower * &ten;
    let scaled = |exp: i64| -> Natural {
        let shift = digits as i64 - 1 - exp;
        let p = Rational::from((&ten).pow(shift.unsigned_abs()));
        let v = if shift >= 0 { &a * p } else { &a / p };
        let (n, d) = v.into_numerator_and_denominator();
        (n * Natural::from(2u32) + &d) / (d * Natural::from(2u32))
    };
    let mut m = scaled(exp);
    for _ in 0..4 {
        if m >= upper {
            exp += 1;
        } else if m < lower {
            exp -= 1;
        } else {
            break;
        }
        m = scaled(exp);
    }
    if m >= upper {
        m /= &ten;
        exp += 1;
    }
    let ds = m.to_string();
    let body = if (-5..digits as i64).contains(&exp) {
        let point = exp + 1;
        let s = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), ds)
        } else {
            let (int, frac) = ds.split_at(point as usize);
            format!("{int}.{frac}")
        };
        trim_fraction(&s)
    } else {
        let (lead, rest) = ds.split_at(1);
        let mant = trim_fraction(&format!("{lead}.{rest}"));
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    };
    if neg && m != 0 {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn half() -> Rational {
    Rational::from_signeds(1, 2)
}

/// Serde adapter: integers as JSON numbers, everything else as `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Num(pub Rational);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            if let Ok(v) = i64::try_from(&self.0) {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer or a \"p/q\" string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
                Ok(Num(int(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
                Ok(Num(Rational::from(v)))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
                Err(E::custom(format!(
                    "non-integer number {v}; write rationals as \"p/q\" strings"
                )))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
                parse_rational(v).map(Num).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("5/46").unwrap(), rat(5, 46));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational(" 10/4 ").unwrap(), rat(5, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&rat(10, 46)), "5/23");
        assert_eq!(format_rational(&rat(-8, 2)), "-4");
    }

    #[test]
    fn decimal_uses_twelve_significant_digits() {
        assert_eq!(format_decimal(&rat(4, 23)), "0.173913043478");
        assert_eq!(format_decimal(&rat(39, 23)), "1.69565217391");
        assert_eq!(format_decimal(&int(8)), "8");
        assert_eq!(format_decimal(&rat(-1, 3)), "-0.333333333333");
        assert_eq!(format_decimal(&rat(2, 3)), "0.666666666667");
        assert_eq!(format_decimal(&int(9_999_999_999_999)), "1e+13");
        assert_eq!(format_decimal(&rat(1, 1_000_000)), "1e-06");
        assert_eq!(format_decimal(&rat(1, 100_000)), "0.00001");
        assert_eq!(format_f64(19.071067811865476), "19.0710678119");
    }

    #[test]
    fn num_adapter_round_trips() {
        let v: Num = serde_json::from_str("\"3/6\"").unwrap();
        assert_eq!(v.0, rat(1, 2));
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"1/2\"");
        let w: Num = serde_json::from_str("7").unwrap();
        assert_eq!(serde_json::to_string(&w).unwrap(), "7");
        assert!(serde_json::from_str::<Num>("1.5").is_err());
    }
}
