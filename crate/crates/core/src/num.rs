//! Rational helpers and the exact-or-approximate mass type.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, `"p"` or a finite decimal like `"0.3"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        let r = BigRational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod ratio_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(int(n)),
            Raw::Str(s) => parse_rational(&s)
                .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))),
        }
    }
}

pub mod ratio_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| {
                parse_rational(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .collect()
    }
}

/// A cylinder mass: exact when every ingredient was exact.
#[derive(Clone, Debug, PartialEq)]
pub enum Mass {
    Exact(BigRational),
    Approx(f64),
}

impl Mass {
    pub fn zero() -> Mass {
        Mass::Exact(BigRational::zero())
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Mass::Exact(r) => to_f64(r),
            Mass::Approx(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Mass::Exact(r) => Some(r),
            Mass::Approx(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mass::Exact(_))
    }
}

impl Add for Mass {
    type Output = Mass;

    fn add(self, rhs: Mass) -> Mass {
        match (self, rhs) {
            (Mass::Exact(a), Mass::Exact(b)) => Mass::Exact(a + b),
            (a, b) => Mass::Approx(a.to_f64() + b.to_f64()),
        }
    }
}

impl Mul<&BigRational> for Mass {
    type Output = Mass;

    fn mul(self, w: &BigRational) -> Mass {
        match self {
            Mass::Exact(a) => Mass::Exact(a * w),
            Mass::Approx(x) => Mass::Approx(x * to_f64(w)),
        }
    }
}

impl fmt::Display for Mass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mass::Exact(r) => f.write_str(&format_rational(r)),
            Mass::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Mass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Mass::Exact(r) => s.serialize_str(&format_rational(r)),
            Mass::Approx(x) => s.serialize_f64(*x),
        }
    }
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rational("0.3"), Some(rat(3, 10)));
        assert_eq!(parse_rational("-1.25"), Some(rat(-5, 4)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&int(3)), "3");
    }

    #[test]
    fn mass_arithmetic() {
        let m = Mass::Exact(rat(1, 3)) + Mass::Exact(rat(1, 6));
        assert_eq!(m, Mass::Exact(rat(1, 2)));
        let m = Mass::Exact(rat(1, 2)) + Mass::Approx(0.25);
        assert_eq!(m, Mass::Approx(0.75));
    }
}
