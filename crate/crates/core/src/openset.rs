//! Open subsets of the base spaces in canonical disjoint-maximal form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::space::BaseSpace;

/// A component `(lo, hi)`.
///
/// On the interval, `lo_closed` / `hi_closed` may only be set when the
/// endpoint is 0 / 1 (relatively open sets of `[0,1]`). On the circle the
/// component is the arc from `lo` (in `[0,1)`) to `hi` (`lo < hi <= lo + 1`);
/// an arc of length 1 is the circle minus one point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Arc {
    pub fn open(lo: Rational, hi: Rational) -> Self {
        Arc { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    fn contains_lifted(&self, x: &Rational) -> bool {
        let left = *x > self.lo || (*x == self.lo && self.lo_closed);
        let right = *x < self.hi || (*x == self.hi && self.hi_closed);
        left && right
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawOpen", into = "RawOpen")]
pub struct OpenSet {
    space: BaseSpace,
    full: bool,
    arcs: Vec<Arc>,
}

#[derive(Serialize, Deserialize)]
struct RawOpen {
    space: BaseSpace,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    full: bool,
    arcs: Vec<Vec<String>>,
}

impl TryFrom<RawOpen> for OpenSet {
    type Error = Error;
    fn try_from(r: RawOpen) -> Result<Self> {
        if r.full {
            return Ok(OpenSet::full(r.space));
        }
        let mut arcs = Vec::new();
        for a in r.arcs {
            if a.len() < 2 || a.len() > 3 {
                return Err(Error::Parse("an arc is [a, b] or [a, b, brackets]".into()));
            }
            let lo: Rational = a[0].parse()?;
            let hi: Rational = a[1].parse()?;
            let (lc, hc) = match a.get(2).map(String::as_str) {
                None | Some("()") => (false, false),
                Some("[)") => (true, false),
                Some("(]") => (false, true),
                Some("[]") => (true, true),
                Some(o) => return Err(Error::Parse(format!("bad bracket spec {o:?}"))),
            };
            arcs.push(Arc { lo, hi, lo_closed: lc, hi_closed: hc });
        }
        OpenSet::new(r.space, arcs)
    }
}

impl From<OpenSet> for RawOpen {
    fn from(u: OpenSet) -> Self {
        let arcs = u
            .arcs
            .iter()
            .map(|a| {
                let hi = if u.space == BaseSpace::Circle { a.hi.fract() } else { a.hi.clone() };
                let hi = if u.space == BaseSpace::Circle && hi.is_zero() { Rational::one() } else { hi };
                let mut v = vec![a.lo.to_string(), hi.to_string()];
                match (a.lo_closed, a.hi_closed) {
                    (false, false) => {}
                    (true, false) => v.push("[)".into()),
                    (false, true) => v.push("(]".into()),
                    (true, true) => v.push("[]".into()),
                }
                v
            })
            .collect();
        RawOpen { space: u.space, full: u.full, arcs }
    }
}

impl OpenSet {
    pub fn empty(space: BaseSpace) -> Self {
        OpenSet { space, full: false, arcs: Vec::new() }
    }

    pub fn full(space: BaseSpace) -> Self {
        match space {
            BaseSpace::Interval => OpenSet {
                space,
                full: true,
                arcs: vec![Arc { lo: Rational::zero(), hi: Rational::one(), lo_closed: true, hi_closed: true }],
            },
            _ => OpenSet { space, full: true, arcs: Vec::new() },
        }
    }

    /// Build from components; on the circle `hi < lo` means the arc crosses 0.
    pub fn new(space: BaseSpace, arcs: Vec<Arc>) -> Result<Self> {
        let one = Rational::one();
        let mut norm = Vec::with_capacity(arcs.len());
        for mut a in arcs {
            match space {
                BaseSpace::Point => {
                    return Err(Error::Argument("use OpenSet::full or OpenSet::empty on a point".into()));
                }
                BaseSpace::Interval => {
                    if a.lo.is_negative() || a.hi > one || a.lo > a.hi {
                        return Err(Error::Domain(format!("component ({}, {}) outside [0,1]", a.lo, a.hi)));
                    }
                    if (a.lo_closed && !a.lo.is_zero()) || (a.hi_closed && a.hi != one) {
                        return Err(Error::Argument("closed ends are only allowed at 0 and 1".into()));
                    }
                    if a.lo == a.hi {
                        continue;
                    }
                }
                BaseSpace::Circle => {
                    if a.lo_closed || a.hi_closed {
                        return Err(Error::Argument("circle arcs are open".into()));
                    }
                    let lo = a.lo.fract();
                    let shift = &lo - &a.lo;
                    let mut hi = &a.hi + &shift;
                    if hi <= lo {
                        hi += &one;
                    }
                    a.lo = lo;
                    a.hi = hi;
                }
            }
            norm.push(a);
        }
        Ok(Self::canonical(space, norm))
    }

    pub fn interval(lo: Rational, hi: Rational) -> Result<Self> {
        Self::new(BaseSpace::Interval, vec![Arc::open(lo, hi)])
    }

    /// `(t, 1]` inside `[0,1]`.
    pub fn tail(t: Rational) -> Result<Self> {
        Self::new(BaseSpace::Interval, vec![Arc { lo: t, hi: Rational::one(), lo_closed: false, hi_closed: true }])
    }

    pub fn arc(lo: Rational, hi: Rational) -> Result<Self> {
        Self::new(BaseSpace::Circle, vec![Arc::open(lo, hi)])
    }

    fn canonical(space: BaseSpace, mut arcs: Vec<Arc>) -> Self {
        let one = Rational::one();
        if space == BaseSpace::Circle && arcs.iter().any(|a| a.len() > one) {
            return Self::full(space);
        }
        arcs.sort_by(|a, b| a.lo.cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut out: Vec<Arc> = Vec::with_capacity(arcs.len());
        for a in arcs {
            if let Some(c) = out.last_mut() {
                let touch = a.lo < c.hi || (a.lo == c.hi && (a.lo_closed || c.hi_closed));
                if touch {
                    if a.hi > c.hi || (a.hi == c.hi && a.hi_closed) {
                        c.hi = a.hi;
                        c.hi_closed = a.hi_closed;
                    }
                    continue;
                }
            }
            out.push(a);
        }
        if space == BaseSpace::Circle {
            // the last arc may wrap past 1 into the first ones
            while out.len() > 1 {
                let last_hi = out[out.len() - 1].hi.clone();
                let first = &out[0];
                if &first.lo + &one < last_hi {
                    let fhi = &first.hi + &one;
                    let n = out.len();
                    if fhi > out[n - 1].hi {
                        out[n - 1].hi = fhi;
                    }
                    out.remove(0);
                } else {
                    break;
                }
            }
            if out.iter().any(|a| a.len() > one) {
                return Self::full(space);
            }
        }
        if space == BaseSpace::Interval
            && out.len() == 1
            && out[0].lo.is_zero()
            && out[0].hi == one
            && out[0].lo_closed
            && out[0].hi_closed
        {
            return Self::full(space);
        }
        OpenSet { space, full: false, arcs: out }
    }

    pub fn space(&self) -> BaseSpace {
        self.space
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    pub fn is_empty(&self) -> bool {
        !self.full && self.arcs.is_empty()
    }

    /// Components; empty for the full circle or full point.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn contains(&self, x: &Rational) -> bool {
        if self.full {
            return true;
        }
        match self.space {
            BaseSpace::Point => false,
            BaseSpace::Interval => self.arcs.iter().any(|a| a.contains_lifted(x)),
            BaseSpace::Circle => {
                let x = x.fract();
                let x1 = &x + Rational::one();
                self.arcs.iter().any(|a| a.contains_lifted(&x) || a.contains_lifted(&x1))
            }
        }
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> Rational {
        if self.full {
            return Rational::one();
        }
        self.arcs.iter().map(|a| a.len()).sum()
    }

    /// `U_r`: union of open `r`-balls around points of `U`.
    pub fn fatten(&self, r: &Rational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Argument(format!("negative radius {r}")));
        }
        if self.full || self.arcs.is_empty() || r.is_zero() || self.space == BaseSpace::Point {
            return Ok(self.clone());
        }
        let one = Rational::one();
        let arcs = self
            .arcs
            .iter()
            .map(|a| {
                let lo = &a.lo - r;
                let hi = &a.hi + r;
                match self.space {
                    BaseSpace::Interval => {
                        let (lo, lc) = if lo.is_negative() || (a.lo_closed) {
                            (Rational::zero(), true)
                        } else {
                            (lo, false)
                        };
                        let (hi, hc) = if hi > one || a.hi_closed { (one.clone(), true) } else { (hi, false) };
                        Arc { lo, hi, lo_closed: lc, hi_closed: hc }
                    }
                    _ => Arc::open(lo, hi),
                }
            })
            .collect::<Vec<_>>();
        if self.space == BaseSpace::Circle && arcs.iter().any(|a| a.len() > one) {
            return Ok(Self::full(self.space));
        }
        Self::new(self.space, arcs)
    }

    /// Whether `closure(self) ⊆ other`.
    pub fn closure_within(&self, other: &OpenSet) -> Result<bool> {
        self.space.same(other.space)?;
        if self.is_empty() || other.full {
            return Ok(true);
        }
        if self.full || other.is_empty() {
            return Ok(false);
        }
        let one = Rational::one();
        Ok(self.arcs.iter().all(|a| {
            if self.space == BaseSpace::Circle && a.len() == one {
                return false;
            }
            other.arcs.iter().any(|b| match self.space {
                BaseSpace::Interval => {
                    let lo_ok = b.lo < a.lo || (b.lo == a.lo && b.lo_closed);
                    let hi_ok = a.hi < b.hi || (a.hi == b.hi && b.hi_closed);
                    lo_ok && hi_ok
                }
                _ => [Rational::zero(), one.clone(), -one.clone()].iter().any(|s| {
                    let lo = &a.lo + s;
                    let hi = &a.hi + s;
                    b.lo < lo && hi < b.hi
                }),
            })
        }))
    }

    /// Whether `self ⊆ other`.
    pub fn within(&self, other: &OpenSet) -> Result<bool> {
        self.space.same(other.space)?;
        if self.is_empty() || other.full {
            return Ok(true);
        }
        if self.full || other.is_empty() {
            return Ok(false);
        }
        Ok(self.arcs.iter().all(|a| other.component_of(a).is_some()))
    }

    /// Index of the component of `self` containing the whole component `a`.
    pub fn component_of(&self, a: &Arc) -> Option<usize> {
        let one = Rational::one();
        self.arcs.iter().position(|b| match self.space {
            BaseSpace::Interval => {
                let lo_ok = b.lo < a.lo || (b.lo == a.lo && (b.lo_closed || !a.lo_closed));
                let hi_ok = a.hi < b.hi || (a.hi == b.hi && (b.hi_closed || !a.hi_closed));
                lo_ok && hi_ok
            }
            _ => [Rational::zero(), one.clone(), -one.clone()]
                .iter()
                .any(|s| b.lo <= &a.lo + s && &a.hi + s <= b.hi),
        })
    }

    /// Union.
    pub fn union(&self, other: &OpenSet) -> Result<Self> {
        self.space.same(other.space)?;
        if self.full || other.full {
            return Ok(Self::full(self.space));
        }
        let mut arcs = self.arcs.clone();
        arcs.extend(other.arcs.iter().cloned());
        Ok(Self::canonical(self.space, arcs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    #[test]
    fn fatten_examples() {
        let u = OpenSet::interval(q(1, 5), q(3, 10)).unwrap();
        assert_eq!(u.fatten(&q(1, 10)).unwrap(), OpenSet::interval(q(1, 10), q(2, 5)).unwrap());
        let c = OpenSet::arc(qi(0), q(1, 4)).unwrap();
        let f = c.fatten(&q(1, 8)).unwrap();
        assert_eq!(f, OpenSet::arc(q(7, 8), q(3, 8)).unwrap());
        assert!(f.contains(&qi(0)) && f.contains(&q(15, 16)) && !f.contains(&q(1, 2)));
        let full = OpenSet::full(BaseSpace::Circle);
        assert_eq!(full.fatten(&q(1, 3)).unwrap(), full);
        assert!(u.fatten(&q(-1, 3)).is_err());
    }

    #[test]
    fn clipping_closes_ends() {
        let u = OpenSet::interval(q(1, 20), q(1, 10)).unwrap();
        let f = u.fatten(&q(1, 10)).unwrap();
        assert!(f.contains(&qi(0)));
        assert!(!f.contains(&q(1, 5)));
        let g = OpenSet::interval(q(1, 10), q(9, 10)).unwrap().fatten(&q(1, 5)).unwrap();
        assert!(g.is_full());
    }

    #[test]
    fn circle_wrap_merges() {
        let u = OpenSet::new(
            BaseSpace::Circle,
            vec![Arc::open(q(9, 10), q(1, 10)), Arc::open(q(1, 20), q(1, 5))],
        )
        .unwrap();
        assert_eq!(u.arcs().len(), 1);
        assert_eq!(u.measure(), q(3, 10));
        let s = serde_json::to_string(&u).unwrap();
        let v: OpenSet = serde_json::from_str(&s).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn closure_containment() {
        let a = OpenSet::interval(q(1, 4), q(1, 2)).unwrap();
        let b = OpenSet::interval(q(1, 8), q(5, 8)).unwrap();
        assert!(a.closure_within(&b).unwrap());
        let c = OpenSet::interval(qi(0), qi(1)).unwrap();
        assert!(!c.closure_within(&c).unwrap());
        let full = OpenSet::full(BaseSpace::Interval);
        assert!(full.closure_within(&full).unwrap());
    }

    fn arb_set(space: BaseSpace) -> impl Strategy<Value = OpenSet> {
        proptest::collection::vec((0i64..60, 1i64..30), 0..4).prop_map(move |v| {
            let arcs = v
                .into_iter()
                .map(|(a, l)| {
                    let lo = q(a, 60);
                    let hi = match space {
                        BaseSpace::Interval => (&lo + q(l, 60)).min(qi(1)),
                        _ => &lo + q(l, 60),
                    };
                    Arc::open(lo, hi)
                })
                .collect();
            OpenSet::new(space, arcs).unwrap()
        })
    }

    fn grid() -> Vec<Rational> {
        (0..240).map(|i| q(2 * i + 1, 480)).chain((0..=120).map(|i| q(i, 120))).collect()
    }

    proptest! {
        #[test]
        fn fatten_composes(u in prop_oneof![arb_set(BaseSpace::Interval), arb_set(BaseSpace::Circle)],
                           r in 0i64..12, s in 0i64..12) {
            let (r, s) = (q(r, 60), q(s, 60));
            let two = u.fatten(&r).unwrap().fatten(&s).unwrap();
            let one = u.fatten(&(&r + &s)).unwrap();
            prop_assert!(one.within(&two).unwrap());
            for x in grid() {
                prop_assert_eq!(one.contains(&x), two.contains(&x));
            }
        }

        #[test]
        fn fatten_matches_ball_union(u in arb_set(BaseSpace::Circle), r in 0i64..12) {
            let r = q(r, 60);
            let f = u.fatten(&r).unwrap();
            for x in grid() {
                // x is in U_r iff its distance to the closure of U is < r
                let near = u.contains(&x)
                    || u.arcs().iter().any(|a| {
                        BaseSpace::Circle.dist(&x, &a.lo) < r || BaseSpace::Circle.dist(&x, &a.hi) < r
                    });
                prop_assert_eq!(f.contains(&x), near || u.is_full());
            }
        }

        #[test]
        fn canonical_idempotent(u in arb_set(BaseSpace::Circle)) {
            let v = OpenSet::new(u.space(), u.arcs().to_vec()).unwrap();
            prop_assert_eq!(u, v);
        }
    }
}
