use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// An angle stored as an exact rational multiple of π, e.g. `-1/4` for -π/4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PiFraction {
    num: i64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl PiFraction {
    pub const ZERO: PiFraction = PiFraction { num: 0, den: 1 };

    pub fn new(num: i64, den: u64) -> Result<Self, Error> {
        if den == 0 {
            return Err(Error::Parse("zero denominator in angle".into()));
        }
        let g = gcd(num.unsigned_abs(), den).max(1);
        Ok(PiFraction {
            num: num / g as i64,
            den: den / g,
        })
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn radians(&self) -> f64 {
        PI * self.num as f64 / self.den as f64
    }
}

impl fmt::Display for PiFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for PiFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational multiple of pi: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: u64 = d.trim().parse().map_err(|_| bad())?;
                PiFraction::new(n, d)
            }
            None => PiFraction::new(s.parse().map_err(|_| bad())?, 1),
        }
    }
}

impl Serialize for PiFraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PiFraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reduces() {
        let a: PiFraction = "-2/8".parse().unwrap();
        assert_eq!(a, PiFraction::new(-1, 4).unwrap());
        assert_eq!(a.to_string(), "-1/4");
        assert!((a.radians() + PI / 4.0).abs() < 1e-15);
        assert_eq!("0".parse::<PiFraction>().unwrap(), PiFraction::ZERO);
        assert!("1/0".parse::<PiFraction>().is_err());
        assert!("pi/4".parse::<PiFraction>().is_err());
    }
}
