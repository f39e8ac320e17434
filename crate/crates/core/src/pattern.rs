//! Eigenvalue patterns: diagonal *-homomorphisms `C(X) -> M_N(C(Y))`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{PhaseEntry, UnitaryField};
use crate::error::{Error, Result};
use crate::lsc::{LscFunction, NBar};
use crate::openset::OpenSet;
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::space::BaseSpace;

/// Cap on the number of refinement points an exact pattern action may create.
pub const REFINE_LIMIT: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PatternMap {
    /// A PL map on `Y`; into the circle it is read as a lift.
    Pl { map: PLFunction },
    /// `y ↦ ell·phi(y) + c` as a lift into the circle.
    Winding {
        ell: i64,
        phi: PLFunction,
        #[serde(default)]
        c: Rational,
    },
    Const { point: Rational },
}

fn one() -> u64 {
    1
}

fn is_one(n: &u64) -> bool {
    *n == 1
}

/// One map with multiplicity. `orbit = m` stands for the `m` rotated copies
/// `map + j/m`, each with multiplicity `mult` (circle targets only).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternEntry {
    #[serde(flatten)]
    pub map: PatternMap,
    pub mult: u64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub orbit: u64,
}

impl PatternEntry {
    pub fn pl(map: PLFunction, mult: u64) -> Self {
        PatternEntry { map: PatternMap::Pl { map }, mult, orbit: 1 }
    }

    pub fn constant(point: Rational, mult: u64) -> Self {
        PatternEntry { map: PatternMap::Const { point }, mult, orbit: 1 }
    }

    pub fn winding(ell: i64, phi: PLFunction, c: Rational, mult: u64) -> Self {
        PatternEntry { map: PatternMap::Winding { ell, phi, c }, mult, orbit: 1 }
    }

    pub fn with_orbit(mut self, orbit: u64) -> Self {
        self.orbit = orbit;
        self
    }

    pub fn weight(&self) -> u64 {
        self.mult * self.orbit
    }
}

/// A diagonal *-homomorphism `C(domain) -> M_N(C(codomain))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPattern", into = "RawPattern")]
pub struct EigenPattern {
    domain: BaseSpace,
    codomain: BaseSpace,
    entries: Vec<PatternEntry>,
    lifts: Vec<PLFunction>,
}

#[derive(Serialize, Deserialize)]
struct RawPattern {
    domain: BaseSpace,
    codomain: BaseSpace,
    maps: Vec<PatternEntry>,
}

impl TryFrom<RawPattern> for EigenPattern {
    type Error = Error;
    fn try_from(r: RawPattern) -> Result<Self> {
        EigenPattern::new(r.domain, r.codomain, r.maps)
    }
}

impl From<EigenPattern> for RawPattern {
    fn from(p: EigenPattern) -> Self {
        RawPattern { domain: p.domain, codomain: p.codomain, maps: p.entries }
    }
}

/// An atom `lift(y) + shift` with its multiplicity.
#[derive(Clone, Debug)]
pub struct Atom<'a> {
    pub lift: &'a PLFunction,
    pub shift: Rational,
    pub mult: u64,
}

impl Atom<'_> {
    pub fn at(&self, y: &Rational) -> Rational {
        self.lift.eval_lifted(y) + &self.shift
    }
}

impl EigenPattern {
    pub fn new(domain: BaseSpace, codomain: BaseSpace, entries: Vec<PatternEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("a pattern needs at least one map".into()));
        }
        let mut lifts = Vec::with_capacity(entries.len());
        for e in &entries {
            if e.mult == 0 || e.orbit == 0 {
                return Err(Error::Argument("multiplicities and orbits must be positive".into()));
            }
            if e.orbit > 1 && domain != BaseSpace::Circle {
                return Err(Error::Argument("rotation orbits only make sense into the circle".into()));
            }
            let lift = match &e.map {
                PatternMap::Pl { map } => {
                    codomain.same(map.space())?;
                    map.clone()
                }
                PatternMap::Winding { ell, phi, c } => {
                    codomain.same(phi.space())?;
                    if domain != BaseSpace::Circle {
                        return Err(Error::Argument("winding maps land in the circle".into()));
                    }
                    phi.scale(&qi(*ell)).add_const(c)
                }
                PatternMap::Const { point } => PLFunction::constant(codomain, point.clone()),
            };
            match domain {
                BaseSpace::Point => {
                    if !lift.is_constant() || !lift.range().0.is_zero() {
                        return Err(Error::Domain("maps into a point are the constant 0".into()));
                    }
                }
                BaseSpace::Interval => {
                    let (lo, hi) = lift.range();
                    if lo.is_negative() || hi > Rational::one() {
                        return Err(Error::Domain(format!("map with range [{lo}, {hi}] leaves [0,1]")));
                    }
                }
                BaseSpace::Circle => {}
            }
            lifts.push(lift);
        }
        let p = EigenPattern { domain, codomain, entries, lifts };
        p.total_mult_checked()?;
        Ok(p)
    }

    pub fn domain(&self) -> BaseSpace {
        self.domain
    }

    pub fn codomain(&self) -> BaseSpace {
        self.codomain
    }

    pub fn entries(&self) -> &[PatternEntry] {
        &self.entries
    }

    pub fn lifts(&self) -> &[PLFunction] {
        &self.lifts
    }

    fn total_mult_checked(&self) -> Result<u64> {
        self.entries.iter().try_fold(0u64, |acc, e| {
            e.mult
                .checked_mul(e.orbit)
                .and_then(|w| acc.checked_add(w))
                .ok_or_else(|| Error::Budget("multiplicity overflow".into()))
        })
    }

    /// The codomain block size `N`.
    pub fn total_mult(&self) -> u64 {
        self.total_mult_checked().expect("checked at construction")
    }

    /// All atoms, with orbits expanded.
    pub fn atoms(&self) -> impl Iterator<Item = Atom<'_>> + '_ {
        self.entries.iter().zip(&self.lifts).flat_map(|(e, l)| {
            let o = e.orbit as i64;
            (0..o).map(move |j| Atom { lift: l, shift: q(j, o), mult: e.mult })
        })
    }

    /// Eigenvalue positions at `y` (reduced mod 1 on the circle) with multiplicity.
    pub fn positions_at(&self, y: &Rational) -> Vec<(Rational, u64)> {
        self.atoms()
            .map(|a| {
                let x = a.at(y);
                let x = if self.domain == BaseSpace::Circle { x.fract() } else { x };
                (x, a.mult)
            })
            .collect()
    }

    /// K1 action as multiplication by this integer (zero unless circle to circle).
    pub fn k1_degree(&self) -> i64 {
        if self.domain != BaseSpace::Circle || self.codomain != BaseSpace::Circle {
            return 0;
        }
        self.entries.iter().zip(&self.lifts).map(|(e, l)| l.winding() * e.weight() as i64).sum()
    }

    fn check_domain(&self, s: BaseSpace) -> Result<()> {
        self.domain.same(s)
    }

    /// Breakpoints in `Y` where some atom meets one of `xs` (mod 1 on the circle).
    fn preimages(&self, xs: &[Rational], out: &mut Vec<Rational>) -> Result<()> {
        for a in self.atoms() {
            let pts = a.lift.points();
            for w in pts.windows(2) {
                let ((s0, u0), (s1, u1)) = (&w[0], &w[1]);
                if u0 == u1 {
                    continue;
                }
                let (v0, v1) = (u0 + &a.shift, u1 + &a.shift);
                let (lo, hi) = if v0 < v1 { (&v0, &v1) } else { (&v1, &v0) };
                let mut push = |x: Rational| {
                    if x >= *lo && x <= *hi {
                        out.push(s0 + (&x - &v0) * (s1 - s0) / (&v1 - &v0));
                    }
                };
                if self.domain == BaseSpace::Circle {
                    let span = (hi - lo).floor().to_i64().unwrap_or(i64::MAX);
                    if span.saturating_mul(xs.len() as i64) > REFINE_LIMIT as i64 {
                        return Err(Error::Budget("pattern refinement too fine".into()));
                    }
                    let mut n = lo.floor();
                    while n <= *hi {
                        for x in xs {
                            push(x + &n);
                        }
                        n += Rational::one();
                    }
                } else {
                    for x in xs {
                        push(x.clone());
                    }
                }
                if out.len() > REFINE_LIMIT {
                    return Err(Error::Budget("pattern refinement too fine".into()));
                }
            }
        }
        Ok(())
    }

    /// Induced Cu-map: `y ↦ Σ mult · s(map(y))`.
    pub fn apply(&self, s: &LscFunction) -> Result<LscFunction> {
        self.check_domain(s.space())?;
        let y = self.codomain;
        let eval_all = |t: &Rational| -> Result<NBar> {
            let mut acc = NBar::ZERO;
            for (x, m) in self.positions_at(t) {
                acc = acc + s.eval(&x)?.times(m);
            }
            Ok(acc)
        };
        if y == BaseSpace::Point {
            return Ok(LscFunction::constant(y, eval_all(&Rational::zero())?));
        }
        let mut ys = vec![Rational::zero(), Rational::one()];
        for l in &self.lifts {
            ys.extend(l.breakpoints().cloned());
        }
        self.preimages(s.breaks(), &mut ys)?;
        ys.sort();
        ys.dedup();
        let mut at = Vec::with_capacity(ys.len());
        let mut on = Vec::with_capacity(ys.len());
        for (i, t) in ys.iter().enumerate() {
            at.push(eval_all(t)?);
            if i + 1 < ys.len() {
                on.push(eval_all(&t.mid(&ys[i + 1]))?);
            }
        }
        LscFunction::from_parts(y, ys, at, on)
    }

    /// Support of the ideal generated by the image of `1_U`.
    pub fn support(&self, u: &OpenSet) -> Result<OpenSet> {
        self.check_domain(u.space())?;
        if u.is_empty() {
            return Ok(OpenSet::empty(self.codomain));
        }
        let hit = self.atoms().any(|a| a.lift.is_constant() && u.contains(&self.reduce(&a.at(&Rational::zero()))));
        if hit || u.is_full() {
            return Ok(OpenSet::full(self.codomain));
        }
        Ok(self.apply(&LscFunction::indicator(u))?.level_set(NBar::Fin(1)))
    }

    fn reduce(&self, x: &Rational) -> Rational {
        if self.domain == BaseSpace::Circle {
            x.fract()
        } else {
            x.clone()
        }
    }

    /// `Σ mult · h∘map / N`: the action on continuous functions (normalized trace).
    pub fn push_function(&self, h: &PLFunction) -> Result<PLFunction> {
        self.check_domain(h.space())?;
        if h.space() == BaseSpace::Circle && h.winding() != 0 {
            return Err(Error::Argument("a function on the circle cannot wind".into()));
        }
        let parts = self
            .atoms()
            .map(|a| Ok((h.compose(&a.lift.add_const(&a.shift))?, a.mult)))
            .collect::<Result<Vec<_>>>()?;
        let n = q(1, self.total_mult() as i64);
        PLFunction::sum(self.codomain, parts.iter().map(|(f, m)| (f, qi(*m as i64) * &n)))
    }

    /// Image of a diagonal unitary: phases composed with the maps.
    pub fn push_unitary(&self, u: &UnitaryField) -> Result<UnitaryField> {
        self.check_domain(u.space())?;
        let mut entries = Vec::new();
        for a in self.atoms() {
            let lift = a.lift.add_const(&a.shift);
            for e in u.entries() {
                let phase = e.phase.compose(&lift)?;
                let mult = e.mult.checked_mul(a.mult).ok_or_else(|| Error::Budget("multiplicity overflow".into()))?;
                entries.push(PhaseEntry { phase, mult });
            }
        }
        let size = u
            .size()
            .checked_mul(self.total_mult())
            .ok_or_else(|| Error::Budget("block size overflow".into()))?;
        UnitaryField::with_size(self.codomain, size, entries)
    }

    /// `self ∘ inner`: maps of `self` precomposed with the maps of `inner`.
    pub fn after(&self, inner: &EigenPattern) -> Result<EigenPattern> {
        inner.domain.same(self.codomain)?;
        let mut entries = Vec::new();
        for (e, l) in self.entries.iter().zip(&self.lifts) {
            for a in inner.atoms() {
                let map = l.compose(&a.lift.add_const(&a.shift))?;
                let mult = e.mult.checked_mul(a.mult).ok_or_else(|| Error::Budget("multiplicity overflow".into()))?;
                entries.push(PatternEntry { map: PatternMap::Pl { map }, mult, orbit: e.orbit });
            }
        }
        EigenPattern::new(self.domain, inner.codomain, entries)
    }

    /// Unitary image of the canonical generator `id` of `C(T)`.
    pub fn generator_image(&self) -> Result<UnitaryField> {
        if self.domain != BaseSpace::Circle {
            return Err(Error::Argument("only maps out of C(T) have a generator image".into()));
        }
        let id = UnitaryField::from_phases(BaseSpace::Circle, [(PLFunction::identity(BaseSpace::Circle), 1)])?;
        self.push_unitary(&id)
    }

    fn atom_bag(&self) -> BTreeMap<Vec<(Rational, Rational)>, u64> {
        let mut bag = BTreeMap::new();
        for a in self.atoms() {
            *bag.entry(orbit_key(a.lift.points(), &a.shift)).or_default() += a.mult;
        }
        bag
    }

    /// Largest `m` such that the eigenvalue configuration is invariant under rotation by `1/m`.
    pub fn rotation_period(&self) -> u64 {
        if self.domain != BaseSpace::Circle {
            return 1;
        }
        let bag = self.atom_bag();
        let n = self.total_mult();
        // invariance under 1/m implies it under 1/d for every d | m, so the first hit from the top is the largest
        (2..=n.min(1 << 20))
            .rev()
            .filter(|m| n % m == 0)
            .find(|m| {
                let s = q(1, *m as i64);
                bag.iter().all(|(k, c)| bag.get(&orbit_key(k, &s)) == Some(c))
            })
            .unwrap_or(1)
    }

    /// The same Cu-map with atoms regrouped into rotation orbits of length `m`.
    pub fn fold_orbits(&self, m: u64) -> Result<EigenPattern> {
        if m == 1 {
            return Ok(self.clone());
        }
        let mut bag = self.atom_bag();
        let step = q(1, m as i64);
        let keys: Vec<_> = bag.keys().cloned().collect();
        let mut entries = Vec::new();
        for k in keys {
            let c = bag[&k];
            if c == 0 {
                continue;
            }
            let mut cur = k.clone();
            for _ in 0..m {
                match bag.get_mut(&cur) {
                    Some(v) if *v >= c => *v -= c,
                    _ => return Err(Error::Argument(format!("configuration is not invariant under rotation by 1/{m}"))),
                }
                cur = orbit_key(&cur, &step);
            }
            let map = PLFunction::new(self.codomain, k)?;
            entries.push(PatternEntry::pl(map, c).with_orbit(m));
        }
        EigenPattern::new(self.domain, self.codomain, entries)
    }

    /// The pattern of `f ↦ f(u)` for a diagonal unitary `u`.
    pub fn from_unitary(u: &UnitaryField) -> Result<EigenPattern> {
        if u.total_mult() != u.size() {
            return Err(Error::Argument("a unitary in a matrix amplification does not define a unital map".into()));
        }
        let entries = u.entries().iter().map(|e| PatternEntry::pl(e.phase.clone(), e.mult)).collect();
        EigenPattern::new(BaseSpace::Circle, u.space(), entries)
    }
}

/// Lift points shifted by `s`, normalized so the first value lies in `[0,1)`.
fn orbit_key(points: &[(Rational, Rational)], s: &Rational) -> Vec<(Rational, Rational)> {
    let base = (&points[0].1 + s).floor();
    points.iter().map(|(t, v)| (t.clone(), v + s - &base)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::novel_u;

    fn iv(lo: Rational, hi: Rational) -> OpenSet {
        OpenSet::interval(lo, hi).unwrap()
    }

    #[test]
    fn exp_pulls_back_arcs() {
        let p = EigenPattern::new(
            BaseSpace::Circle,
            BaseSpace::Interval,
            vec![PatternEntry::pl(PLFunction::identity(BaseSpace::Interval), 1)],
        )
        .unwrap();
        let s = LscFunction::indicator(&OpenSet::arc(qi(0), q(1, 2)).unwrap());
        assert_eq!(p.apply(&s).unwrap(), LscFunction::indicator(&iv(qi(0), q(1, 2))));
    }

    #[test]
    fn constant_inside_gives_constant() {
        let p = EigenPattern::new(BaseSpace::Circle, BaseSpace::Interval, vec![PatternEntry::constant(q(1, 3), 3)])
            .unwrap();
        let u = OpenSet::arc(q(1, 4), q(1, 2)).unwrap();
        assert_eq!(p.apply(&LscFunction::indicator(&u)).unwrap(), LscFunction::constant(BaseSpace::Interval, NBar::Fin(3)));
        assert!(p.support(&u).unwrap().is_full());
    }

    #[test]
    fn winding_preimages_wrap() {
        let p = EigenPattern::new(
            BaseSpace::Circle,
            BaseSpace::Interval,
            vec![PatternEntry::winding(3, PLFunction::identity(BaseSpace::Interval), qi(0), 1)],
        )
        .unwrap();
        let s = LscFunction::indicator(&OpenSet::arc(q(9, 10), q(1, 10)).unwrap());
        let r = p.apply(&s).unwrap();
        assert_eq!(r.eval(&qi(0)).unwrap(), NBar::Fin(1));
        assert_eq!(r.eval(&q(1, 30)).unwrap(), NBar::ZERO);
        assert_eq!(r.eval(&q(1, 3)).unwrap(), NBar::Fin(1));
        assert_eq!(r.eval(&q(1, 2)).unwrap(), NBar::ZERO);
        assert_eq!(r.eval(&qi(1)).unwrap(), NBar::Fin(1));
        assert_eq!(r.level_set(NBar::Fin(1)).arcs().len(), 4);
    }

    #[test]
    fn multiplicity_scales() {
        let id = PLFunction::identity(BaseSpace::Interval);
        let p1 = EigenPattern::new(BaseSpace::Interval, BaseSpace::Interval, vec![PatternEntry::pl(id.clone(), 1)]).unwrap();
        let p3 = EigenPattern::new(BaseSpace::Interval, BaseSpace::Interval, vec![PatternEntry::pl(id, 3)]).unwrap();
        let s = LscFunction::indicator(&iv(q(1, 4), q(1, 2)));
        assert_eq!(p3.apply(&s).unwrap(), p1.apply(&s).unwrap().scale(3));
    }

    #[test]
    fn unitary_round_trip() {
        let u = novel_u(3).unwrap();
        let p = EigenPattern::from_unitary(&u).unwrap();
        assert_eq!(p.generator_image().unwrap().normalized_trace(), u.normalized_trace());
        assert_eq!(p.total_mult(), 8);
        let h = PLFunction::constant(BaseSpace::Circle, q(2, 3));
        assert_eq!(p.push_function(&h).unwrap(), PLFunction::constant(BaseSpace::Interval, q(2, 3)));
    }

    #[test]
    fn orbit_counts_and_degree() {
        let id = PLFunction::identity(BaseSpace::Circle);
        let p = EigenPattern::new(
            BaseSpace::Circle,
            BaseSpace::Circle,
            vec![PatternEntry::winding(2, id.clone(), qi(0), 1).with_orbit(4), PatternEntry::constant(q(1, 5), 3)],
        )
        .unwrap();
        assert_eq!(p.total_mult(), 7);
        assert_eq!(p.k1_degree(), 8);
        assert_eq!(p.positions_at(&q(1, 8)).len(), 5);
        let back: EigenPattern = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn composition_of_patterns() {
        let id = PLFunction::identity(BaseSpace::Interval);
        let sq = PLFunction::new(BaseSpace::Interval, vec![(qi(0), qi(0)), (q(1, 2), q(1, 4)), (qi(1), qi(1))]).unwrap();
        let a = EigenPattern::new(BaseSpace::Interval, BaseSpace::Interval, vec![PatternEntry::pl(sq.clone(), 2)]).unwrap();
        let b = EigenPattern::new(BaseSpace::Interval, BaseSpace::Interval, vec![PatternEntry::pl(id, 1), PatternEntry::constant(q(1, 2), 1)])
            .unwrap();
        let c = a.after(&b).unwrap();
        assert_eq!(c.total_mult(), 4);
        let s = LscFunction::indicator(&iv(q(1, 8), qi(1)));
        assert_eq!(b.apply(&a.apply(&s).unwrap()).unwrap(), c.apply(&s).unwrap());
    }
}
