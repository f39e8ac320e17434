use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// One of the three base spaces used throughout: a point, `[0,1]`, or `R/Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseSpace {
    Point,
    Interval,
    Circle,
}

impl BaseSpace {
    /// Normalized distance: `|x-y|` on the interval, arc length on the circle.
    pub fn dist(self, x: &Rational, y: &Rational) -> Rational {
        match self {
            BaseSpace::Point => Rational::zero(),
            BaseSpace::Interval => (x - y).abs(),
            BaseSpace::Circle => {
                let d = (x - y).fract();
                let e = Rational::one() - &d;
                d.min(e)
            }
        }
    }

    pub fn check_point(self, t: &Rational) -> Result<()> {
        let ok = match self {
            BaseSpace::Point => t.is_zero(),
            BaseSpace::Interval | BaseSpace::Circle => !t.is_negative() && *t <= Rational::one(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("{t} is outside the {self:?} domain")))
        }
    }

    pub fn same(self, other: BaseSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}
