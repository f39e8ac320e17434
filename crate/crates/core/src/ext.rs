use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::Rational;

/// A metric value: a nonnegative rational or infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    Fin(Rational),
    Inf,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Fin(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ext::Fin(r) => Some(r),
            Ext::Inf => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::Fin(r) => r.to_f64(),
            Ext::Inf => f64::INFINITY,
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        std::cmp::max(self, other)
    }

    pub fn scale(&self, c: &Rational) -> Ext {
        match self {
            Ext::Fin(r) => Ext::Fin(r * c),
            Ext::Inf => Ext::Inf,
        }
    }
}

impl From<Rational> for Ext {
    fn from(r: Rational) -> Self {
        Ext::Fin(r)
    }
}

impl Add for Ext {
    type Output = Ext;
    fn add(self, o: Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            _ => Ext::Inf,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(r) => write!(f, "{r}"),
            Ext::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            return Ok(Ext::Inf);
        }
        s.parse().map(Ext::Fin).map_err(serde::de::Error::custom)
    }
}
