//! Exact rational helpers: parsing of decimal / `p/q` strings and the two
//! output renderings (exact string, 12-significant-digit decimal).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"3"`, `"-3/4"`, `"0.125"` or `"1.5e-2"` without going through floating point.
pub fn parse_rational(input: &str) -> Result<Rational, ParseError> {
    let s = input.trim();
    let fail = |reason: &str| ParseError::Rational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(fail("empty"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| fail("bad numerator"))?;
        let q: BigInt = q.trim().parse().map_err(|_| fail("bad denominator"))?;
        if q.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(Rational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| fail("bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(fail("no digits"));
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(fail("unexpected character"));
    }
    let joined = format!("{whole}{frac}");
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| fail("bad digits"))?
    };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// `p/q` in lowest terms, or just `p` for integers.
pub fn exact_string(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Decimal rendering rounded to 12 significant digits, trailing zeros trimmed.
pub fn decimal_string(value: &Rational) -> String {
    let v = to_f64(value);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// JSON rendering of an exact value: `{"exact": "p/q", "decimal": 0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub exact: String,
    pub decimal: f64,
}

impl From<&Rational> for ExactValue {
    fn from(value: &Rational) -> Self {
        Self {
            exact: exact_string(value),
            decimal: decimal_string(value)
                .parse()
                .unwrap_or_else(|_| to_f64(value)),
        }
    }
}

impl ExactValue {
    pub fn parse(&self) -> Result<Rational, ParseError> {
        parse_rational(&self.exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_supported_forms() {
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("6/8").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("2.").unwrap(), int(2));
        assert_eq!(parse_rational("1.5e-2").unwrap(), ratio(3, 200));
        assert_eq!(parse_rational("-2E3").unwrap(), int(-2000));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "abc", "1/0", "1.2.3", "--1", "1e", "/3", "."] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn renders() {
        assert_eq!(exact_string(&ratio(1, 2)), "1/2");
        assert_eq!(exact_string(&int(1)), "1");
        assert_eq!(decimal_string(&ratio(1, 2)), "0.5");
        assert_eq!(decimal_string(&ratio(1, 3)), "0.333333333333");
        assert_eq!(decimal_string(&ratio(200, 3)), "66.6666666667");
        assert_eq!(decimal_string(&int(0)), "0");
        assert_eq!(decimal_string(&ratio(-1, 8)), "-0.125");
        let v = ExactValue::from(&ratio(19, 37));
        assert_eq!(v.exact, "19/37");
        assert!((v.decimal - 19.0 / 37.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_string_round_trips(p in -10_000i64..10_000, q in 1i64..10_000) {
            let value = ratio(p, q);
            prop_assert_eq!(parse_rational(&exact_string(&value)).unwrap(), value);
        }
    }
}
