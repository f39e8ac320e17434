//! Lower semicontinuous step functions `X -> N ∪ {∞}`.

use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::openset::{Arc, OpenSet};
use crate::rational::Rational;
use crate::space::BaseSpace;

/// Extended naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NBar {
    Fin(u64),
    Inf,
}

impl NBar {
    pub const ZERO: NBar = NBar::Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, NBar::Fin(_))
    }

    pub fn times(self, n: u64) -> NBar {
        match self {
            NBar::Fin(a) => NBar::Fin(a * n),
            NBar::Inf if n == 0 => NBar::ZERO,
            NBar::Inf => NBar::Inf,
        }
    }
}

impl Add for NBar {
    type Output = NBar;
    fn add(self, o: NBar) -> NBar {
        match (self, o) {
            (NBar::Fin(a), NBar::Fin(b)) => NBar::Fin(a + b),
            _ => NBar::Inf,
        }
    }
}

impl fmt::Display for NBar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NBar::Fin(n) => write!(f, "{n}"),
            NBar::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for NBar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NBar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            N(u64),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(NBar::Fin(n)),
            Raw::S(s) if s == "inf" => Ok(NBar::Inf),
            Raw::S(s) => s.parse().map(NBar::Fin).map_err(serde::de::Error::custom),
        }
    }
}

/// A step function in `Lsc(X, N̄)`.
///
/// `breaks` runs from 0 to 1 (a single 0 on a point); `at[i]` is the value at
/// `breaks[i]` and `on[i]` the value on `(breaks[i], breaks[i+1])`. On the
/// circle `at[last] == at[0]` and the breakpoint 0 is always kept.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLsc", into = "RawLsc")]
pub struct LscFunction {
    space: BaseSpace,
    breaks: Vec<Rational>,
    at: Vec<NBar>,
    on: Vec<NBar>,
}

#[derive(Serialize, Deserialize)]
struct Piece {
    from: Rational,
    to: Rational,
    value: NBar,
}

#[derive(Serialize, Deserialize)]
struct RawLsc {
    space: BaseSpace,
    pieces: Vec<Piece>,
}

impl TryFrom<RawLsc> for LscFunction {
    type Error = Error;
    fn try_from(r: RawLsc) -> Result<Self> {
        if r.space == BaseSpace::Point {
            let v = r.pieces.first().map(|p| p.value).unwrap_or(NBar::ZERO);
            return Ok(LscFunction::constant(BaseSpace::Point, v));
        }
        let mut breaks = vec![Rational::zero(), Rational::one()];
        for p in &r.pieces {
            if p.from > p.to || p.from.is_negative() || p.to > Rational::one() {
                return Err(Error::Parse(format!("bad piece ({}, {})", p.from, p.to)));
            }
            breaks.push(p.from.clone());
            breaks.push(p.to.clone());
        }
        breaks.sort();
        breaks.dedup();
        let mut on = vec![None; breaks.len() - 1];
        let mut at = vec![None; breaks.len()];
        for p in &r.pieces {
            if p.from == p.to {
                let i = breaks.binary_search(&p.from).expect("known break");
                at[i] = Some(p.value);
            } else {
                let i = breaks.binary_search(&p.from).expect("known break");
                let j = breaks.binary_search(&p.to).expect("known break");
                for slot in &mut on[i..j] {
                    *slot = Some(p.value);
                }
            }
        }
        let on: Vec<NBar> = on
            .into_iter()
            .map(|v| v.ok_or_else(|| Error::Parse("pieces do not cover the space".into())))
            .collect::<Result<_>>()?;
        let at = at.into_iter().map(|v| v.unwrap_or(NBar::Inf)).collect();
        Ok(LscFunction::normalize(r.space, breaks, at, on))
    }
}

impl From<LscFunction> for RawLsc {
    fn from(f: LscFunction) -> Self {
        let mut pieces = Vec::new();
        if f.space == BaseSpace::Point {
            pieces.push(Piece { from: Rational::zero(), to: Rational::zero(), value: f.at[0] });
            return RawLsc { space: f.space, pieces };
        }
        for i in 0..f.breaks.len() {
            if f.at[i] < f.neighbour_min(i) {
                pieces.push(Piece { from: f.breaks[i].clone(), to: f.breaks[i].clone(), value: f.at[i] });
            }
            if i < f.on.len() {
                pieces.push(Piece { from: f.breaks[i].clone(), to: f.breaks[i + 1].clone(), value: f.on[i] });
            }
        }
        RawLsc { space: f.space, pieces }
    }
}

impl LscFunction {
    /// Clamp point values down to the lsc envelope and drop redundant breaks.
    fn normalize(space: BaseSpace, breaks: Vec<Rational>, mut at: Vec<NBar>, on: Vec<NBar>) -> Self {
        let m = on.len();
        if space == BaseSpace::Circle {
            let v = at[0].min(at[m]);
            at[0] = v;
            at[m] = v;
        }
        let mut f = LscFunction { space, breaks, at, on };
        for i in 0..=m {
            let nb = f.neighbour_min(i);
            if f.at[i] > nb {
                f.at[i] = nb;
            }
        }
        if space == BaseSpace::Circle {
            let v = f.at[0].min(f.at[m]);
            f.at[0] = v;
            f.at[m] = v;
        }
        let mut breaks = vec![f.breaks[0].clone()];
        let mut at = vec![f.at[0]];
        let mut on: Vec<NBar> = Vec::with_capacity(m);
        for i in 1..=m {
            let seg = f.on[i - 1];
            if i < m && f.on[i] == seg && f.at[i] == seg {
                continue;
            }
            on.push(seg);
            breaks.push(f.breaks[i].clone());
            at.push(f.at[i]);
        }
        LscFunction { space, breaks, at, on }
    }

    fn neighbour_min(&self, i: usize) -> NBar {
        let m = self.on.len();
        if m == 0 {
            return NBar::Inf;
        }
        let left = if i > 0 {
            Some(self.on[i - 1])
        } else if self.space == BaseSpace::Circle {
            Some(self.on[m - 1])
        } else {
            None
        };
        let right = if i < m {
            Some(self.on[i])
        } else if self.space == BaseSpace::Circle {
            Some(self.on[0])
        } else {
            None
        };
        left.into_iter().chain(right).min().unwrap_or(NBar::Inf)
    }

    pub fn constant(space: BaseSpace, v: NBar) -> Self {
        match space {
            BaseSpace::Point => LscFunction { space, breaks: vec![Rational::zero()], at: vec![v], on: vec![] },
            _ => LscFunction {
                space,
                breaks: vec![Rational::zero(), Rational::one()],
                at: vec![v, v],
                on: vec![v],
            },
        }
    }

    pub fn zero(space: BaseSpace) -> Self {
        Self::constant(space, NBar::ZERO)
    }

    /// Build from explicit breaks and values (normalized to the lsc envelope).
    pub fn from_parts(space: BaseSpace, breaks: Vec<Rational>, at: Vec<NBar>, on: Vec<NBar>) -> Result<Self> {
        if space == BaseSpace::Point {
            return Ok(Self::constant(space, at.first().copied().unwrap_or(NBar::ZERO)));
        }
        let ok = breaks.len() >= 2
            && breaks[0].is_zero()
            && breaks[breaks.len() - 1] == Rational::one()
            && breaks.windows(2).all(|w| w[0] < w[1])
            && at.len() == breaks.len()
            && on.len() + 1 == breaks.len();
        if !ok {
            return Err(Error::Argument("malformed step function".into()));
        }
        Ok(Self::normalize(space, breaks, at, on))
    }

    pub fn indicator(u: &OpenSet) -> Self {
        Self::from_open(u, NBar::Fin(1))
    }

    /// `v · 1_U`.
    pub fn from_open(u: &OpenSet, v: NBar) -> Self {
        let space = u.space();
        if u.is_full() {
            return Self::constant(space, v);
        }
        if u.is_empty() {
            return Self::zero(space);
        }
        let one = Rational::one();
        let mut pieces: Vec<Arc> = Vec::new();
        for a in u.arcs() {
            if space == BaseSpace::Circle && a.hi > one {
                pieces.push(Arc { lo: a.lo.clone(), hi: one.clone(), lo_closed: false, hi_closed: true });
                pieces.push(Arc { lo: Rational::zero(), hi: &a.hi - &one, lo_closed: true, hi_closed: false });
            } else {
                pieces.push(a.clone());
            }
        }
        let mut breaks = vec![Rational::zero(), one.clone()];
        for a in &pieces {
            breaks.push(a.lo.clone());
            breaks.push(a.hi.clone());
        }
        breaks.sort();
        breaks.dedup();
        let mut at = vec![NBar::ZERO; breaks.len()];
        let mut on = vec![NBar::ZERO; breaks.len() - 1];
        for a in &pieces {
            let i = breaks.binary_search(&a.lo).unwrap();
            let j = breaks.binary_search(&a.hi).unwrap();
            for k in i..j {
                on[k] = v;
            }
            for k in i + 1..j {
                at[k] = v;
            }
            if a.lo_closed {
                at[i] = v;
            }
            if a.hi_closed {
                at[j] = v;
            }
        }
        if space == BaseSpace::Circle {
            let m = at.len() - 1;
            let w = at[0].max(at[m]);
            at[0] = w;
            at[m] = w;
        }
        Self::normalize(space, breaks, at, on)
    }

    pub fn space(&self) -> BaseSpace {
        self.space
    }

    pub fn breaks(&self) -> &[Rational] {
        &self.breaks
    }

    pub fn point_values(&self) -> &[NBar] {
        &self.at
    }

    pub fn open_values(&self) -> &[NBar] {
        &self.on
    }

    pub fn eval(&self, t: &Rational) -> Result<NBar> {
        self.space.check_point(t)?;
        if self.space == BaseSpace::Point {
            return Ok(self.at[0]);
        }
        match self.breaks.binary_search(t) {
            Ok(i) => Ok(self.at[i]),
            Err(i) => Ok(self.on[i - 1]),
        }
    }

    /// Values of `self` on a finer set of breaks.
    fn resample(&self, breaks: &[Rational]) -> (Vec<NBar>, Vec<NBar>) {
        let at = breaks.iter().map(|t| self.eval(t).expect("in domain")).collect();
        let on = breaks
            .windows(2)
            .map(|w| {
                let i = self.breaks.partition_point(|b| *b <= w[0]);
                self.on[i - 1]
            })
            .collect();
        (at, on)
    }

    fn common(&self, other: &Self) -> Result<Vec<Rational>> {
        self.space.same(other.space)?;
        let mut b: Vec<Rational> = self.breaks.iter().chain(other.breaks.iter()).cloned().collect();
        b.sort();
        b.dedup();
        Ok(b)
    }

    fn zip(&self, other: &Self, op: impl Fn(NBar, NBar) -> NBar) -> Result<Self> {
        if self.space == BaseSpace::Point {
            self.space.same(other.space)?;
            return Ok(Self::constant(self.space, op(self.at[0], other.at[0])));
        }
        let b = self.common(other)?;
        let (a1, o1) = self.resample(&b);
        let (a2, o2) = other.resample(&b);
        let at = a1.into_iter().zip(a2).map(|(x, y)| op(x, y)).collect();
        let on = o1.into_iter().zip(o2).map(|(x, y)| op(x, y)).collect();
        Ok(Self::normalize(self.space, b, at, on))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    /// Pointwise maximum (the join).
    pub fn max(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.max(b))
    }

    pub fn scale(&self, n: u64) -> Self {
        LscFunction {
            space: self.space,
            breaks: self.breaks.clone(),
            at: self.at.iter().map(|v| v.times(n)).collect(),
            on: self.on.iter().map(|v| v.times(n)).collect(),
        }
        .renormalized()
    }

    fn renormalized(self) -> Self {
        Self::normalize(self.space, self.breaks, self.at, self.on)
    }

    pub fn leq(&self, other: &Self) -> Result<bool> {
        if self.space == BaseSpace::Point {
            self.space.same(other.space)?;
            return Ok(self.at[0] <= other.at[0]);
        }
        let b = self.common(other)?;
        let (a1, o1) = self.resample(&b);
        let (a2, o2) = other.resample(&b);
        Ok(a1.iter().zip(&a2).all(|(x, y)| x <= y) && o1.iter().zip(&o2).all(|(x, y)| x <= y))
    }

    pub fn is_zero(&self) -> bool {
        self.at.iter().chain(&self.on).all(|v| *v == NBar::ZERO)
    }

    /// Largest value taken.
    pub fn max_value(&self) -> NBar {
        self.at.iter().chain(&self.on).copied().max().unwrap_or(NBar::ZERO)
    }

    /// Distinct positive values taken, ascending.
    pub fn levels(&self) -> Vec<NBar> {
        let mut v: Vec<NBar> = self.at.iter().chain(&self.on).copied().filter(|v| *v > NBar::ZERO).collect();
        v.sort();
        v.dedup();
        v
    }

    /// The open set `{x ≥ k}`.
    pub fn level_set(&self, k: NBar) -> OpenSet {
        let space = self.space;
        if space == BaseSpace::Point {
            return if self.at[0] >= k { OpenSet::full(space) } else { OpenSet::empty(space) };
        }
        let m = self.on.len();
        if self.at.iter().chain(&self.on).all(|v| *v >= k) {
            return OpenSet::full(space);
        }
        let mut arcs = Vec::new();
        let mut i = 0;
        while i < m {
            if self.on[i] < k {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < m && self.at[i + 1] >= k && self.on[i + 1] >= k {
                i += 1;
            }
            let lo_closed = start == 0 && self.at[0] >= k && space == BaseSpace::Interval;
            let hi_closed = i + 1 == m && self.at[m] >= k && space == BaseSpace::Interval;
            arcs.push(Arc {
                lo: self.breaks[start].clone(),
                hi: self.breaks[i + 1].clone(),
                lo_closed,
                hi_closed,
            });
            i += 1;
        }
        if space == BaseSpace::Circle && self.at[0] >= k && arcs.len() >= 2 {
            // glue the arc ending at 1 with the one starting at 0
            let last = arcs.pop().unwrap();
            let first = &mut arcs[0];
            if last.hi == Rational::one() && first.lo.is_zero() {
                first.hi = &first.hi + Rational::one();
                first.lo = last.lo;
                let f = arcs.remove(0);
                arcs.push(f);
            } else {
                arcs.push(last);
            }
        }
        OpenSet::new(space, arcs).expect("level sets are valid")
    }

    /// `self ≪ other` via closure containment of level sets.
    pub fn waybelow(&self, other: &Self) -> Result<bool> {
        self.space.same(other.space)?;
        if self.is_zero() {
            return Ok(true);
        }
        if self.max_value() == NBar::Inf {
            return Ok(false);
        }
        for k in self.levels() {
            if !self.level_set(k).closure_within(&other.level_set(k))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Supremum of a finite increasing chain.
    pub fn sup(chain: &[LscFunction]) -> Result<Self> {
        let first = chain.first().ok_or_else(|| Error::Argument("empty chain".into()))?;
        for w in chain.windows(2) {
            if !w[0].leq(&w[1])? {
                return Err(Error::Argument("chain is not increasing".into()));
            }
        }
        chain[1..].iter().try_fold(first.clone(), |acc, x| acc.max(x))
    }

    /// `Σ_{k ≤ min(m, max)} 1_{shrink({self ≥ k}, 1/m)}`; increases to `self` and
    /// each term is way-below the next.
    pub fn approximant(&self, m: u64) -> Self {
        let eps = Rational::new(1, m as i64);
        let top = match self.max_value() {
            NBar::Fin(k) => k.min(m),
            NBar::Inf => m,
        };
        let mut acc = Self::zero(self.space);
        for k in 1..=top {
            let u = shrink(&self.level_set(NBar::Fin(k)), &eps);
            acc = acc.add(&Self::indicator(&u)).expect("same space");
        }
        acc
    }
}

/// Shrink every component by `eps` on each open side; closed boundary ends stay.
pub fn shrink(u: &OpenSet, eps: &Rational) -> OpenSet {
    if u.is_full() || u.is_empty() {
        return u.clone();
    }
    let arcs = u
        .arcs()
        .iter()
        .filter_map(|a| {
            let lo = if a.lo_closed { a.lo.clone() } else { &a.lo + eps };
            let hi = if a.hi_closed { a.hi.clone() } else { &a.hi - eps };
            if lo < hi {
                Some(Arc { lo, hi, lo_closed: a.lo_closed, hi_closed: a.hi_closed })
            } else {
                None
            }
        })
        .collect();
    OpenSet::new(u.space(), arcs).expect("shrunk arcs stay valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn ind_i(a: Rational, b: Rational) -> LscFunction {
        LscFunction::indicator(&OpenSet::interval(a, b).unwrap())
    }

    #[test]
    fn indicator_examples() {
        assert!(LscFunction::indicator(&OpenSet::empty(BaseSpace::Interval)).is_zero());
        let c = LscFunction::indicator(&OpenSet::arc(qi(0), q(1, 2)).unwrap());
        assert_eq!(c.eval(&q(1, 4)).unwrap(), NBar::Fin(1));
        assert_eq!(c.eval(&qi(0)).unwrap(), NBar::ZERO);
        let two = OpenSet::new(
            BaseSpace::Interval,
            vec![Arc::open(q(1, 10), q(1, 5)), Arc::open(q(1, 2), q(3, 5))],
        )
        .unwrap();
        let sum = ind_i(q(1, 10), q(1, 5)).add(&ind_i(q(1, 2), q(3, 5))).unwrap();
        assert_eq!(LscFunction::indicator(&two), sum);
    }

    #[test]
    fn order_and_waybelow_examples() {
        let x = ind_i(qi(0), q(1, 2));
        let y = ind_i(qi(0), q(3, 4)).scale(2);
        assert!(x.leq(&y).unwrap());
        let a = ind_i(q(1, 4), q(1, 2));
        let b = ind_i(q(1, 8), q(5, 8));
        assert!(a.waybelow(&b).unwrap());
        let c = ind_i(qi(0), qi(1));
        assert!(!c.waybelow(&c).unwrap());
        assert!(LscFunction::zero(BaseSpace::Interval).waybelow(&c).unwrap());
        let one = LscFunction::constant(BaseSpace::Circle, NBar::Fin(1));
        assert!(one.waybelow(&one).unwrap());
    }

    #[test]
    fn sup_examples() {
        let a = ind_i(q(1, 4), q(1, 2));
        let b = ind_i(q(1, 8), q(5, 8));
        assert_eq!(LscFunction::sup(&[a.clone()]).unwrap(), a);
        assert_eq!(LscFunction::sup(&[a.clone(), b.clone()]).unwrap(), b);
        assert!(LscFunction::sup(&[b.clone(), a.clone()]).is_err());
        let u = ind_i(qi(0), q(1, 2));
        let v = ind_i(q(1, 4), qi(1));
        let m = u.max(&v).unwrap();
        assert_ne!(m, u.add(&v).unwrap());
        assert_eq!(m.eval(&q(3, 8)).unwrap(), NBar::Fin(1));
    }

    #[test]
    fn circle_level_set_wraps() {
        let u = OpenSet::arc(q(7, 8), q(1, 8)).unwrap();
        let f = LscFunction::indicator(&u);
        assert_eq!(f.eval(&qi(0)).unwrap(), NBar::Fin(1));
        assert_eq!(f.level_set(NBar::Fin(1)), u);
    }

    #[test]
    fn serde_roundtrip() {
        let f = ind_i(q(1, 4), q(1, 2)).add(&ind_i(q(1, 2), q(3, 4))).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"from\":\"1/2\",\"to\":\"1/2\""));
        let g: LscFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let inf = r#"{"space":"interval","pieces":[{"from":"0","to":"1","value":"inf"}]}"#;
        let h: LscFunction = serde_json::from_str(inf).unwrap();
        assert_eq!(h.max_value(), NBar::Inf);
    }
}
