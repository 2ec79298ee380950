use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::IsoError;

/// The isoperimetric parameter `q`, kept exact so that the strict
/// inequalities defining cores are decided without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QParam {
    /// `num / den` in lowest terms.
    Rational { num: i64, den: i64 },
    /// `t^(-1/3)` for a positive integer `t` that is not a perfect cube.
    InvCbrt { t: u64 },
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

fn icbrt(t: u64) -> Option<u64> {
    let c = (t as f64).cbrt().round() as u64;
    (c.saturating_sub(1)..=c + 1).find(|&k| k.checked_pow(3) == Some(t))
}

impl QParam {
    pub fn rational(num: i64, den: i64) -> Result<Self, IsoError> {
        if den <= 0 || num <= 0 || num > den {
            return Err(IsoError::InvalidQ(format!("{num}/{den} is not in ]0,1]")));
        }
        let g = gcd(num, den);
        Ok(QParam::Rational { num: num / g, den: den / g })
    }

    /// `t^(-1/3)`; exact rational when `t` is a perfect cube.
    pub fn inv_cbrt(t: u64) -> Result<Self, IsoError> {
        if t == 0 {
            return Err(IsoError::InvalidQ("t must be positive".into()));
        }
        match icbrt(t) {
            Some(c) => Self::rational(1, c as i64),
            None => Ok(QParam::InvCbrt { t }),
        }
    }

    /// Exact value of the shortest decimal representation of `x`.
    pub fn from_f64(x: f64) -> Result<Self, IsoError> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(IsoError::InvalidQ(format!("{x} is not in ]0,1]")));
        }
        format!("{x}").parse()
    }

    pub fn value(&self) -> f64 {
        match *self {
            QParam::Rational { num, den } => num as f64 / den as f64,
            QParam::InvCbrt { t } => (t as f64).cbrt().recip(),
        }
    }

    /// Sign of `q * a - b`, exactly.
    pub fn cmp_scaled(&self, a: i64, b: i64) -> Ordering {
        match *self {
            QParam::Rational { num, den } => {
                (i128::from(num) * i128::from(a)).cmp(&(i128::from(b) * i128::from(den)))
            }
            QParam::InvCbrt { t } => {
                // a t^(-1/3) vs b  <=>  a vs b t^(1/3)  <=>  a^3 vs b^3 t  (cubing is monotone)
                let cube = |x: i64| {
                    let x = i128::from(x);
                    x.checked_mul(x).and_then(|y| y.checked_mul(x))
                };
                let lhs = cube(a);
                let rhs = cube(b).and_then(|y| y.checked_mul(i128::from(t)));
                match (lhs, rhs) {
                    (Some(l), Some(r)) => l.cmp(&r),
                    _ => (a as f64 * self.value())
                        .partial_cmp(&(b as f64))
                        .unwrap_or(Ordering::Equal),
                }
            }
        }
    }

    /// `q * a - b` as a float, for reporting.
    pub fn eval(&self, a: i64, b: i64) -> f64 {
        match *self {
            QParam::Rational { num, den } => (num as f64 * a as f64 - den as f64 * b as f64) / den as f64,
            QParam::InvCbrt { .. } => self.value() * a as f64 - b as f64,
        }
    }
}

impl FromStr for QParam {
    type Err = IsoError;

    /// Accepts decimals (`0.2`), fractions (`1/5`) and `t^-1/3` forms (`cbrt:1000`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || IsoError::InvalidQ(format!("cannot parse {s:?}"));
        if let Some(t) = s.strip_prefix("cbrt:") {
            return Self::inv_cbrt(t.trim().parse().map_err(|_| bad())?);
        }
        if let Some((n, d)) = s.split_once('/') {
            return Self::rational(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 17
        {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let digits = format!("{int}{frac}");
        let num: i64 = digits.parse().map_err(|_| bad())?;
        Self::rational(num, den)
    }
}

impl fmt::Display for QParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            QParam::Rational { num, den } => write!(f, "{num}/{den}"),
            QParam::InvCbrt { t } => write!(f, "cbrt:{t}"),
        }
    }
}

impl Serialize for QParam {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for QParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => QParam::from_f64(x),
            Raw::Text(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}
