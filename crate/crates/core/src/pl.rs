//! Exact piecewise-linear functions on the base spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{qi, Rational};
use crate::space::BaseSpace;

/// A piecewise-linear function with rational breakpoints.
///
/// On the circle the stored values are a lift over `[0,1]`, so
/// `v(1) = v(0) + winding`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPl", into = "RawPl")]
pub struct PLFunction {
    space: BaseSpace,
    points: Vec<(Rational, Rational)>,
}

#[derive(Serialize, Deserialize)]
struct RawPl {
    space: BaseSpace,
    points: Vec<(Rational, Rational)>,
    #[serde(default)]
    winding: i64,
}

impl TryFrom<RawPl> for PLFunction {
    type Error = Error;
    fn try_from(r: RawPl) -> Result<Self> {
        let f = PLFunction::new(r.space, r.points)?;
        if f.winding() != r.winding {
            return Err(Error::Parse(format!(
                "declared winding {} but endpoint values give {}",
                r.winding,
                f.winding()
            )));
        }
        Ok(f)
    }
}

impl From<PLFunction> for RawPl {
    fn from(f: PLFunction) -> Self {
        let winding = f.winding();
        RawPl { space: f.space, points: f.points, winding }
    }
}

impl PLFunction {
    pub fn new(space: BaseSpace, points: Vec<(Rational, Rational)>) -> Result<Self> {
        match space {
            BaseSpace::Point => {
                if points.len() != 1 || !points[0].0.is_zero() {
                    return Err(Error::Argument("a function on a point has one breakpoint at 0".into()));
                }
            }
            BaseSpace::Interval | BaseSpace::Circle => {
                if points.len() < 2 {
                    return Err(Error::Argument("need at least two breakpoints".into()));
                }
                if !points[0].0.is_zero() || points[points.len() - 1].0 != Rational::one() {
                    return Err(Error::Argument("breakpoints must start at 0 and end at 1".into()));
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(Error::Argument("breakpoints must be strictly increasing".into()));
                }
                if space == BaseSpace::Circle {
                    let w = &points[points.len() - 1].1 - &points[0].1;
                    if !w.is_integer() {
                        return Err(Error::Argument(format!("circle lift has non-integer winding {w}")));
                    }
                }
            }
        }
        Ok(Self::canonical(space, points))
    }

    fn canonical(space: BaseSpace, points: Vec<(Rational, Rational)>) -> Self {
        if points.len() <= 2 {
            return PLFunction { space, points };
        }
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(points.len());
        for p in points {
            while out.len() >= 2 {
                let (a, b) = (&out[out.len() - 2], &out[out.len() - 1]);
                // drop b if a, b, p are collinear
                let lhs = (&b.1 - &a.1) * (&p.0 - &b.0);
                let rhs = (&p.1 - &b.1) * (&b.0 - &a.0);
                if lhs == rhs {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        PLFunction { space, points: out }
    }

    pub fn constant(space: BaseSpace, v: Rational) -> Self {
        match space {
            BaseSpace::Point => PLFunction { space, points: vec![(Rational::zero(), v)] },
            _ => PLFunction { space, points: vec![(Rational::zero(), v.clone()), (Rational::one(), v)] },
        }
    }

    /// `t ↦ a t + b`. On the circle `a` must be an integer.
    pub fn linear(space: BaseSpace, a: Rational, b: Rational) -> Result<Self> {
        match space {
            BaseSpace::Point => Ok(Self::constant(space, b)),
            _ => {
                let end = &a + &b;
                Self::new(space, vec![(Rational::zero(), b), (Rational::one(), end)])
            }
        }
    }

    pub fn identity(space: BaseSpace) -> Self {
        Self::linear(space, Rational::one(), Rational::zero()).expect("identity")
    }

    pub fn space(&self) -> BaseSpace {
        self.space
    }

    pub fn points(&self) -> &[(Rational, Rational)] {
        &self.points
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = &Rational> {
        self.points.iter().map(|p| &p.0)
    }

    pub fn winding(&self) -> i64 {
        match self.space {
            BaseSpace::Circle => (&self.points[self.points.len() - 1].1 - &self.points[0].1)
                .to_i64()
                .expect("integer winding"),
            _ => 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.points.iter().all(|p| p.1 == self.points[0].1)
    }

    fn eval_unchecked(&self, t: &Rational) -> Rational {
        let pts = &self.points;
        if pts.len() == 1 {
            return pts[0].1.clone();
        }
        let i = pts.partition_point(|p| p.0 <= *t);
        if i == 0 {
            return pts[0].1.clone();
        }
        if i >= pts.len() {
            return pts[pts.len() - 1].1.clone();
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        &a.1 + (&b.1 - &a.1) * (t - &a.0) / (&b.0 - &a.0)
    }

    pub fn eval(&self, t: &Rational) -> Result<Rational> {
        self.space.check_point(t)?;
        Ok(self.eval_unchecked(t))
    }

    /// Evaluate the lift at any real `x` (circle only; elsewhere same as `eval`).
    pub fn eval_lifted(&self, x: &Rational) -> Rational {
        match self.space {
            BaseSpace::Circle => {
                let n = x.floor();
                self.eval_unchecked(&(x - &n)) + n * qi(self.winding())
            }
            _ => self.eval_unchecked(x),
        }
    }

    /// Slope on the segment right after `t` (or the last segment at 1).
    pub fn slope_after(&self, t: &Rational) -> Rational {
        let pts = &self.points;
        if pts.len() == 1 {
            return Rational::zero();
        }
        let i = pts.partition_point(|p| p.0 <= *t).clamp(1, pts.len() - 1);
        let (a, b) = (&pts[i - 1], &pts[i]);
        (&b.1 - &a.1) / (&b.0 - &a.0)
    }

    /// Values at the union of both breakpoint sets.
    fn merged(&self, other: &PLFunction) -> Vec<(Rational, Rational, Rational)> {
        let mut ts: Vec<Rational> = self.breakpoints().chain(other.breakpoints()).cloned().collect();
        ts.sort();
        ts.dedup();
        ts.into_iter()
            .map(|t| {
                let a = self.eval_unchecked(&t);
                let b = other.eval_unchecked(&t);
                (t, a, b)
            })
            .collect()
    }

    fn zip_with(&self, other: &PLFunction, op: impl Fn(&Rational, &Rational) -> Rational) -> Result<Self> {
        self.space.same(other.space)?;
        let pts = self.merged(other).into_iter().map(|(t, a, b)| (t, op(&a, &b))).collect();
        Ok(Self::canonical(self.space, pts))
    }

    pub fn add(&self, other: &PLFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PLFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::constant(self.space, Rational::zero());
        }
        PLFunction {
            space: self.space,
            points: self.points.iter().map(|(t, v)| (t.clone(), v * c)).collect(),
        }
    }

    pub fn negate(&self) -> Self {
        self.scale(&qi(-1))
    }

    pub fn add_const(&self, c: &Rational) -> Self {
        PLFunction {
            space: self.space,
            points: self.points.iter().map(|(t, v)| (t.clone(), v + c)).collect(),
        }
    }

    /// Sum of many functions on a common refinement.
    pub fn sum<'a>(space: BaseSpace, fs: impl IntoIterator<Item = (&'a PLFunction, Rational)>) -> Result<Self> {
        let fs: Vec<_> = fs.into_iter().collect();
        for (f, _) in &fs {
            space.same(f.space)?;
        }
        if space == BaseSpace::Point {
            let v = fs.iter().map(|(f, c)| &f.points[0].1 * c).sum();
            return Ok(Self::constant(space, v));
        }
        let mut ts: Vec<Rational> = fs.iter().flat_map(|(f, _)| f.breakpoints().cloned()).collect();
        ts.push(Rational::zero());
        ts.push(Rational::one());
        ts.sort();
        ts.dedup();
        let pts = ts
            .into_iter()
            .map(|t| {
                let v = fs.iter().map(|(f, c)| f.eval_unchecked(&t) * c).sum();
                (t, v)
            })
            .collect();
        Ok(Self::canonical(space, pts))
    }

    /// Exact `(min, max)`, attained at breakpoints.
    pub fn range(&self) -> (Rational, Rational) {
        let mut lo = self.points[0].1.clone();
        let mut hi = lo.clone();
        for (_, v) in &self.points[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        (lo, hi)
    }

    pub fn sup_norm(&self) -> Rational {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }

    /// Points of `[0,1)` where the lift's slope changes (circle: including 0).
    fn kinks(&self) -> Vec<Rational> {
        let n = self.points.len();
        let mut out: Vec<Rational> = self.points[1..n - 1].iter().map(|p| p.0.clone()).collect();
        if self.space == BaseSpace::Circle && n >= 2 {
            let first = self.slope_after(&Rational::zero());
            let last = self.slope_after(&Rational::one());
            if first != last {
                out.insert(0, Rational::zero());
            }
        }
        out
    }

    /// `self ∘ inner`, where `inner` maps into this function's space (as a lift on the circle).
    pub fn compose(&self, inner: &PLFunction) -> Result<Self> {
        let y = inner.space;
        match self.space {
            BaseSpace::Point => return Ok(Self::constant(y, self.points[0].1.clone())),
            BaseSpace::Interval => {
                let (lo, hi) = inner.range();
                if lo.is_negative() || hi > Rational::one() {
                    return Err(Error::Domain(format!("inner range [{lo}, {hi}] leaves [0,1]")));
                }
            }
            BaseSpace::Circle => {}
        }
        if y == BaseSpace::Point {
            return Ok(Self::constant(y, self.eval_lifted(&inner.points[0].1)));
        }
        let kinks = self.kinks();
        let mut pts: Vec<(Rational, Rational)> = Vec::new();
        let ip = &inner.points;
        for w in ip.windows(2) {
            let ((s0, u0), (s1, u1)) = (&w[0], &w[1]);
            pts.push((s0.clone(), self.eval_lifted(u0)));
            if u0 == u1 || kinks.is_empty() {
                continue;
            }
            let (lo, hi) = if u0 < u1 { (u0, u1) } else { (u1, u0) };
            let mut xs: Vec<Rational> = Vec::new();
            match self.space {
                BaseSpace::Circle => {
                    let mut n = lo.floor();
                    while n <= *hi {
                        for k in &kinks {
                            let x = k + &n;
                            if x > *lo && x < *hi {
                                xs.push(x);
                            }
                        }
                        n += Rational::one();
                    }
                }
                _ => xs.extend(kinks.iter().filter(|k| *k > lo && *k < hi).cloned()),
            }
            xs.sort();
            if u0 > u1 {
                xs.reverse();
            }
            for x in xs {
                let s = s0 + (&x - u0) * (s1 - s0) / (u1 - u0);
                let v = self.eval_lifted(&x);
                pts.push((s, v));
            }
        }
        let last = &ip[ip.len() - 1];
        pts.push((last.0.clone(), self.eval_lifted(&last.1)));
        Self::new(y, pts)
    }

    /// Same function with its points re-expressed on another space of the same shape.
    pub fn with_space(&self, space: BaseSpace) -> Result<Self> {
        Self::new(space, self.points.clone())
    }

    /// Breakpoints and midpoints; enough to certify any PL comparison.
    pub fn sample_grid(fs: &[&PLFunction]) -> Vec<Rational> {
        let mut ts: Vec<Rational> = fs.iter().flat_map(|f| f.breakpoints().cloned()).collect();
        ts.sort();
        ts.dedup();
        let mids: Vec<Rational> = ts.windows(2).map(|w| w[0].mid(&w[1])).collect();
        ts.extend(mids);
        ts.sort();
        ts
    }
}
