//! Cu_K pairs over the Lsc model: ideals as open sets, K1 winding data, fiber diagrams
//! and the refined metrics.

use serde::Serialize;

use crate::algebra::{Block, K0Image, PhaseEntry, UnitaryField};
use crate::dcu::d_cu;
use crate::determinant::{det_hat, h_norm, HClass};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::lsc::{LscFunction, NBar};
use crate::openset::{Arc, OpenSet};
use crate::pattern::EigenPattern;
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::space::BaseSpace;

const ARC_LIMIT: usize = 1_500;
const RADIUS_LIMIT: usize = 400;

/// A component of an ideal's support that carries a copy of `Z` in K1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comp {
    /// The whole circle.
    Loop,
    Arc { lo: Rational, hi: Rational },
}

/// The ideal with a given support, with its declared K1 data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdealModel {
    pub support: OpenSet,
    pub k1: Vec<Comp>,
}

impl IdealModel {
    pub fn new(support: OpenSet) -> Self {
        let k1 = match support.space() {
            BaseSpace::Point => vec![],
            BaseSpace::Circle if support.is_full() => vec![Comp::Loop],
            BaseSpace::Circle => support.arcs().iter().map(|a| Comp::Arc { lo: a.lo.clone(), hi: a.hi.clone() }).collect(),
            BaseSpace::Interval => support
                .arcs()
                .iter()
                .filter(|a| !a.lo_closed && !a.hi_closed)
                .map(|a| Comp::Arc { lo: a.lo.clone(), hi: a.hi.clone() })
                .collect(),
        };
        IdealModel { support, k1 }
    }

    /// The ideal generated by `x`.
    pub fn of(x: &LscFunction) -> Self {
        Self::new(x.level_set(NBar::Fin(1)))
    }

    pub fn rank(&self) -> usize {
        self.k1.len()
    }

    pub fn space(&self) -> BaseSpace {
        self.support.space()
    }

    fn arc_index(&self, a: &Arc) -> Option<usize> {
        let lo = &a.lo;
        let hi = &a.hi;
        self.k1.iter().position(|c| matches!(c, Comp::Arc { lo: l, hi: h } if l == lo && h == hi))
    }
}

/// The lift `R_V` of the designated generator: `V` is crossed once at constant speed `1/|V|`.
pub fn generator_phase(space: BaseSpace, c: &Comp) -> Result<PLFunction> {
    match (space, c) {
        (BaseSpace::Circle, Comp::Loop) => Ok(PLFunction::identity(space)),
        (BaseSpace::Interval, Comp::Arc { lo, hi }) => {
            let mut pts = vec![(qi(0), qi(0))];
            if lo.is_positive() {
                pts.push((lo.clone(), qi(0)));
            }
            pts.push((hi.clone(), qi(1)));
            if *hi < Rational::one() {
                pts.push((qi(1), qi(1)));
            }
            PLFunction::new(space, pts)
        }
        (BaseSpace::Circle, Comp::Arc { lo, hi }) => {
            let len = hi - lo;
            let r = |x: &Rational| {
                let d = x - lo;
                let f = d.fract();
                let c = (&f / &len).min(Rational::one());
                d.floor() + c
            };
            let mut knots = vec![qi(0), qi(1), lo.clone()];
            for h in [hi.clone(), hi - &qi(1)] {
                if h.is_positive() && h < Rational::one() {
                    knots.push(h);
                }
            }
            knots.sort();
            knots.dedup();
            PLFunction::new(space, knots.iter().map(|t| (t.clone(), r(t))).collect())
        }
        _ => Err(Error::Argument(format!("no K1 generator for {c:?} in {space:?}"))),
    }
}

/// The designated unitary of a K1 component, as a field of size 1.
pub fn generator(space: BaseSpace, c: &Comp) -> Result<UnitaryField> {
    UnitaryField::from_phases(space, [(generator_phase(space, c)?, 1)])
}

/// Dense integer matrix; columns index the source components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, o: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != o.rows {
            return Err(Error::Argument(format!("{}x{} times {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut m = IntMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..o.cols {
                    let v = m.get(i, j) + a * o.get(k, j);
                    m.set(i, j, v);
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, v: &[i64]) -> Result<Vec<i64>> {
        if v.len() != self.cols {
            return Err(Error::Argument("vector length mismatch".into()));
        }
        Ok((0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum()).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0)
    }
}

fn target_ends(c: &Comp) -> (Rational, Rational) {
    match c {
        Comp::Loop => (qi(0), qi(1)),
        Comp::Arc { lo, hi } => (lo.clone(), hi.clone()),
    }
}

/// Net number of times the pushed generator winds over a target component.
fn winding(p: &EigenPattern, phase: &PLFunction, target: &Comp) -> Result<i64> {
    let (a, b) = target_ends(target);
    let mut acc = Rational::zero();
    for at in p.atoms() {
        let d = phase.eval_lifted(&at.at(&b)) - phase.eval_lifted(&at.at(&a));
        acc += d * qi(at.mult as i64);
    }
    if !acc.is_integer() {
        return Err(Error::Domain(format!("pushed generator does not close up over {target:?}")));
    }
    acc.to_i64().ok_or_else(|| Error::Budget("winding overflow".into()))
}

/// `K1(I → I_φ)` in the component bases.
pub fn push_matrix(p: &EigenPattern, dom: &IdealModel, tgt: &IdealModel) -> Result<IntMatrix> {
    dom.space().same(p.domain())?;
    tgt.space().same(p.codomain())?;
    let mut m = IntMatrix::zeros(tgt.rank(), dom.rank());
    for (j, c) in dom.k1.iter().enumerate() {
        let phase = generator_phase(dom.space(), c)?;
        for (i, t) in tgt.k1.iter().enumerate() {
            m.set(i, j, winding(p, &phase, t)?);
        }
    }
    Ok(m)
}

/// `K1(I ⊆ J)`.
pub fn order_matrix(small: &IdealModel, big: &IdealModel) -> Result<IntMatrix> {
    small.space().same(big.space())?;
    if !small.support.within(&big.support)? {
        return Err(Error::Argument("ideal inclusion fails".into()));
    }
    let mut m = IntMatrix::zeros(big.rank(), small.rank());
    for (j, c) in small.k1.iter().enumerate() {
        let row = match c {
            Comp::Loop => big.k1.iter().position(|b| *b == Comp::Loop),
            Comp::Arc { lo, hi } => {
                if big.support.is_full() {
                    big.k1.iter().position(|b| *b == Comp::Loop)
                } else {
                    let a = Arc::open(lo.clone(), hi.clone());
                    big.support.component_of(&a).and_then(|k| big.arc_index(&big.support.arcs()[k]))
                }
            }
        };
        if let Some(i) = row {
            m.set(i, j, 1);
        }
    }
    Ok(m)
}

/// An element `(x, g)` of the Cu_{K1} construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CuKElement {
    pub x: LscFunction,
    pub g: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CuKOrder {
    WayBelow,
    Leq,
    Incomparable,
}

impl CuKElement {
    pub fn new(x: LscFunction, g: Vec<i64>) -> Result<Self> {
        let r = IdealModel::of(&x).rank();
        if g.len() != r {
            return Err(Error::Argument(format!("K1 of the ideal has rank {r}, got {} entries", g.len())));
        }
        Ok(CuKElement { x, g })
    }

    /// `(x, 0)`.
    pub fn zero_over(x: LscFunction) -> Self {
        let r = IdealModel::of(&x).rank();
        CuKElement { x, g: vec![0; r] }
    }

    pub fn ideal(&self) -> IdealModel {
        IdealModel::of(&self.x)
    }

    /// Transport of the K-part into the ideal of `y ≥ x`.
    pub fn transport(&self, y: &LscFunction) -> Result<Vec<i64>> {
        order_matrix(&self.ideal(), &IdealModel::of(y))?.apply(&self.g)
    }

    pub fn add(&self, o: &CuKElement) -> Result<CuKElement> {
        let x = self.x.add(&o.x)?;
        let a = self.transport(&x)?;
        let b = o.transport(&x)?;
        Ok(CuKElement { x, g: a.iter().zip(&b).map(|(u, v)| u + v).collect() })
    }
}

/// `(x,g) ≤ (y,h)` iff `x ≤ y` and `g` transports to `h`; way-below when moreover `x ≪ y`.
pub fn cuk_order(a: &CuKElement, b: &CuKElement) -> Result<CuKOrder> {
    if !a.x.leq(&b.x)? || a.transport(&b.x)? != b.g {
        return Ok(CuKOrder::Incomparable);
    }
    Ok(if a.x.waybelow(&b.x)? { CuKOrder::WayBelow } else { CuKOrder::Leq })
}

/// `(x, g) ↦ (Cu(φ)(x), K1(I_x → I_{φ(x)})(g))`.
pub fn cuk_morphism_apply(p: &EigenPattern, e: &CuKElement) -> Result<CuKElement> {
    let x = p.apply(&e.x)?;
    let m = push_matrix(p, &e.ideal(), &IdealModel::of(&x))?;
    Ok(CuKElement { g: m.apply(&e.g)?, x })
}

/// Image of the designated generator of one component, with its block trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RestrictedImage {
    pub component: Comp,
    pub unitary: UnitaryField,
    /// `Σ mult · phase`, the class read in `H` of the target.
    pub trace: PLFunction,
    /// The same divided by the block size.
    pub normalized: PLFunction,
    pub k1: i64,
}

/// Generators of every K1 component of the ideal pushed through `p` into the full target.
pub fn restricted_generator_image(p: &EigenPattern, ideal: &IdealModel) -> Result<Vec<RestrictedImage>> {
    ideal.space().same(p.domain())?;
    let full = IdealModel::new(OpenSet::full(p.codomain()));
    ideal
        .k1
        .iter()
        .map(|c| {
            let unitary = p.push_unitary(&generator(ideal.space(), c)?)?;
            let normalized = det_hat(&unitary);
            let trace = normalized.scale(&qi(unitary.size() as i64));
            let k1 = match full.k1.first() {
                Some(t) => winding(p, &generator_phase(ideal.space(), c)?, t)?,
                None => 0,
            };
            Ok(RestrictedImage { component: c.clone(), unitary, trace, normalized, k1 })
        })
        .collect()
}

/// One pair of parallel paths of a fiber diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathPair {
    pub corner: String,
    pub left: String,
    pub right: String,
    pub distance: Ext,
}

/// K1 fiber diagram of two pattern morphisms at `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberDiagram {
    pub x: LscFunction,
    pub y: LscFunction,
    /// Ranks of `K(x), K(y), K(α₀x), K(α₀y), K(β₀x), K(β₀y)`.
    pub ranks: [usize; 6],
    pub delta_ba: bool,
    pub delta_ab: bool,
    pub paths: Vec<(String, String, IntMatrix)>,
}

impl FiberDiagram {
    pub fn new(alpha: &EigenPattern, beta: &EigenPattern, x: &LscFunction, y: &LscFunction) -> Result<Self> {
        alpha.domain().same(beta.domain())?;
        alpha.codomain().same(beta.codomain())?;
        if !x.waybelow(y)? {
            return Err(Error::Argument("fiber diagrams need x ≪ y".into()));
        }
        let (ax, ay, bx, by) = (alpha.apply(x)?, alpha.apply(y)?, beta.apply(x)?, beta.apply(y)?);
        let (ix, iy) = (IdealModel::of(x), IdealModel::of(y));
        let (iax, iay, ibx, iby) = (IdealModel::of(&ax), IdealModel::of(&ay), IdealModel::of(&bx), IdealModel::of(&by));
        let ord = order_matrix(&ix, &iy)?;
        let a_x = push_matrix(alpha, &ix, &iax)?;
        let a_y = push_matrix(alpha, &iy, &iay)?;
        let b_x = push_matrix(beta, &ix, &ibx)?;
        let b_y = push_matrix(beta, &iy, &iby)?;
        let mut paths = vec![
            ("alpha0(y)".to_string(), "alpha_y . ord".to_string(), a_y.mul(&ord)?),
            ("alpha0(y)".into(), "ord . alpha_x".into(), order_matrix(&iax, &iay)?.mul(&a_x)?),
            ("beta0(y)".into(), "beta_y . ord".into(), b_y.mul(&ord)?),
            ("beta0(y)".into(), "ord . beta_x".into(), order_matrix(&ibx, &iby)?.mul(&b_x)?),
        ];
        let delta_ba = bx.leq(&ay)?;
        let delta_ab = ax.leq(&by)?;
        if delta_ba {
            paths.push(("alpha0(y)".into(), "delta . beta_x".into(), order_matrix(&ibx, &iay)?.mul(&b_x)?));
        }
        if delta_ab {
            paths.push(("beta0(y)".into(), "delta . alpha_x".into(), order_matrix(&iax, &iby)?.mul(&a_x)?));
        }
        Ok(FiberDiagram {
            x: x.clone(),
            y: y.clone(),
            ranks: [ix.rank(), iy.rank(), iax.rank(), iay.rank(), ibx.rank(), iby.rank()],
            delta_ba,
            delta_ab,
            paths,
        })
    }

    /// Same-endpoint pairs under the trivial metric.
    pub fn pairs(&self) -> Vec<PathPair> {
        let mut out = Vec::new();
        for (i, a) in self.paths.iter().enumerate() {
            for b in &self.paths[i + 1..] {
                if a.0 == b.0 {
                    let distance = if a.2 == b.2 { Ext::zero() } else { Ext::Inf };
                    out.push(PathPair { corner: a.0.clone(), left: a.1.clone(), right: b.1.clone(), distance });
                }
            }
        }
        out
    }

    /// `‖F(x,y)‖` for the trivial metric: 0 iff the diagram commutes.
    pub fn norm(&self) -> Ext {
        self.pairs().into_iter().map(|p| p.distance).fold(Ext::zero(), Ext::max)
    }

    pub fn commutes(&self) -> bool {
        self.norm() == Ext::zero()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DStarScope {
    /// The value holds for every open set.
    AllOpenSets,
    /// The quantifier over open sets ran over this many critical arcs per radius.
    ArcFamily { arcs: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DStar {
    pub epsilon0: Ext,
    pub value: Ext,
    pub scope: DStarScope,
    /// A radius below the value and an arc where the diagram fails.
    pub witness: Option<(Arc, Rational)>,
}

/// Radius beyond which every fattened nonempty open set meets some eigenvalue at every
/// point of the target, so the image ideal is everything.
pub fn cover_radius(p: &EigenPattern) -> Rational {
    let circle = p.domain() == BaseSpace::Circle;
    let mut consts: Vec<Rational> = p
        .atoms()
        .filter(|a| a.lift.is_constant())
        .map(|a| {
            let x = a.at(&Rational::zero());
            if circle {
                x.fract()
            } else {
                x
            }
        })
        .collect();
    consts.sort();
    consts.dedup();
    let from_consts = if consts.is_empty() {
        qi(1)
    } else if circle {
        let mut gap = &consts[0] + &qi(1) - consts.last().unwrap();
        for w in consts.windows(2) {
            gap = gap.max(&w[1] - &w[0]);
        }
        gap / qi(2)
    } else {
        let mut r = consts[0].clone().max(qi(1) - consts.last().unwrap());
        for w in consts.windows(2) {
            r = r.max((&w[1] - &w[0]) / qi(2));
        }
        r
    };
    if circle {
        from_consts.min(q(1, 2 * p.rotation_period() as i64))
    } else {
        from_consts
    }
}

fn events(p: &EigenPattern) -> Vec<Rational> {
    let circle = p.domain() == BaseSpace::Circle;
    let mut out = Vec::new();
    for a in p.atoms() {
        for (_, v) in a.lift.points() {
            let x = v + &a.shift;
            out.push(if circle { x.fract() } else { x });
        }
    }
    if !circle {
        out.push(qi(0));
        out.push(qi(1));
    }
    out.sort();
    out.dedup();
    out
}

fn constant_positions(p: &EigenPattern) -> Vec<Rational> {
    let circle = p.domain() == BaseSpace::Circle;
    let mut v: Vec<Rational> = p
        .atoms()
        .filter(|a| a.lift.is_constant())
        .map(|a| {
            let x = a.at(&Rational::zero());
            if circle {
                x.fract()
            } else {
                x
            }
        })
        .collect();
    v.sort();
    v.dedup();
    v
}

/// Closed regions of points at distance `≥ r` from every constant eigenvalue; a fattened
/// arc misses all constants iff it lies in one of them. `None` means the whole space.
fn regions(circle: bool, consts: &[Rational], r: &Rational) -> Option<Vec<(Rational, Rational)>> {
    if consts.is_empty() {
        return None;
    }
    let mut out = Vec::new();
    let mut push = |s: Rational, t: Rational| {
        if s < t {
            out.push((s, t));
        }
    };
    for w in consts.windows(2) {
        push(&w[0] + r, &w[1] - r);
    }
    let (first, last) = (&consts[0], consts.last().unwrap());
    if circle {
        push(last + r, first + &qi(1) - r);
    } else {
        push(qi(0), first - r);
        push(last + r, qi(1));
    }
    Some(out)
}

fn representatives(ev: &[Rational], r: &Rational, circle: bool) -> Vec<Rational> {
    let mut pts: Vec<Rational> = Vec::new();
    for e in ev {
        for x in [e.clone(), e + r, e - r] {
            if circle {
                pts.push(x.fract());
            } else if !x.is_negative() && x <= Rational::one() {
                pts.push(x);
            }
        }
    }
    pts.sort();
    pts.dedup();
    let mut reps = pts.clone();
    for w in pts.windows(2) {
        reps.push(w[0].mid(&w[1]));
    }
    if circle {
        if let (Some(a), Some(b)) = (pts.first(), pts.last()) {
            reps.push((a + &qi(1)).mid(b).fract());
        }
    }
    reps.sort();
    reps.dedup();
    reps
}

fn interval_arcs(cands: &[Rational], out: &mut Vec<Arc>) {
    for (i, a) in cands.iter().enumerate() {
        for b in &cands[i + 1..] {
            out.push(Arc::open(a.clone(), b.clone()));
            let (lc, hc) = (a.is_zero(), *b == Rational::one());
            if lc || hc {
                out.push(Arc { lo: a.clone(), hi: b.clone(), lo_closed: lc, hi_closed: hc });
            }
        }
    }
}

/// Critical single arcs at radius `r`. With an interval target only arcs whose fattening
/// misses the constant eigenvalues of one side are listed: otherwise both `y`-corners are the
/// whole target, whose K1 vanishes.
fn arc_family(alpha: &EigenPattern, beta: &EigenPattern, ev: &[Rational], r: &Rational) -> Vec<Arc> {
    let circle = alpha.domain() == BaseSpace::Circle;
    let reps = representatives(ev, r, circle);
    let prune = alpha.codomain() == BaseSpace::Interval;
    let regs = if prune {
        match (regions(circle, &constant_positions(alpha), r), regions(circle, &constant_positions(beta), r)) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                a.sort();
                a.dedup();
                Some(a)
            }
            _ => None,
        }
    } else {
        None
    };
    let mut arcs = Vec::new();
    match regs {
        Some(regs) => {
            let per = (ARC_LIMIT / regs.len().max(1)).max(3);
            let side = ((2 * per) as f64).sqrt() as usize + 1;
            for (s, t) in regs {
                let mut c = vec![s.clone(), t.clone()];
                for x in &reps {
                    for k in [qi(0), qi(1)] {
                        let y = x + &k;
                        if y > s && y < t {
                            c.push(y);
                        }
                    }
                }
                c.sort();
                c.dedup();
                let c = thin(c, side.max(2));
                if circle {
                    for (i, a) in c.iter().enumerate() {
                        for b in &c[i + 1..] {
                            let lo = a.fract();
                            let hi = &lo + &(b - a);
                            arcs.push(Arc::open(lo, hi));
                        }
                    }
                } else {
                    interval_arcs(&c, &mut arcs);
                }
            }
        }
        None => {
            let side = ((ARC_LIMIT as f64).sqrt() as usize).max(2);
            let reps = thin(reps, side);
            if circle {
                for (i, a) in reps.iter().enumerate() {
                    for (j, b) in reps.iter().enumerate() {
                        if i != j {
                            let hi = if b > a { b.clone() } else { b + &qi(1) };
                            arcs.push(Arc::open(a.clone(), hi));
                        }
                    }
                }
            } else {
                let mut c = reps;
                c.push(qi(0));
                c.push(qi(1));
                c.sort();
                c.dedup();
                interval_arcs(&c, &mut arcs);
            }
        }
    }
    thin(arcs, ARC_LIMIT)
}

fn thin<T: Clone>(v: Vec<T>, limit: usize) -> Vec<T> {
    if v.len() <= limit {
        return v;
    }
    let step = v.len() as f64 / limit as f64;
    (0..limit).map(|i| v[(i as f64 * step) as usize].clone()).collect()
}

/// First arc of the family where `F(1_U, 1_{U_r})` fails to commute.
fn check_radius(alpha: &EigenPattern, beta: &EigenPattern, r: &Rational, arcs: &[Arc]) -> Result<Option<Arc>> {
    let space = alpha.domain();
    for a in arcs {
        let u = OpenSet::new(space, vec![a.clone()])?;
        let ur = u.fatten(r)?;
        let f = FiberDiagram::new(alpha, beta, &LscFunction::indicator(&u), &LscFunction::indicator(&ur))?;
        if !f.commutes() {
            return Ok(Some(a.clone()));
        }
    }
    Ok(None)
}

/// `d*_Cu` of the Cu_{K1} morphisms with the trivial fiber metric:
/// `inf{r > ε₀ : F(1_U, 1_{U_r}) commutes for every U}`, `ε₀ = d_Cu(α₀, β₀)`.
///
/// Failing arcs are genuine counterexamples; a passing radius is only checked on the
/// critical arc family unless the scope says otherwise. With an interval target every
/// radius above the cover radius passes for all open sets.
pub fn d_star_k1(alpha: &EigenPattern, beta: &EigenPattern) -> Result<DStar> {
    let eps = d_cu(alpha, beta)?.value;
    let e0 = match &eps {
        Ext::Inf => return Ok(DStar { epsilon0: Ext::Inf, value: Ext::Inf, scope: DStarScope::AllOpenSets, witness: None }),
        Ext::Fin(v) => v.clone(),
    };
    let done = |value: Rational| DStar { epsilon0: eps.clone(), value: Ext::Fin(value), scope: DStarScope::AllOpenSets, witness: None };
    if alpha == beta || alpha.codomain() == BaseSpace::Point {
        return Ok(done(e0));
    }
    let space = alpha.domain();
    let circle = space == BaseSpace::Circle;
    let interval_target = alpha.codomain() == BaseSpace::Interval;
    let fast = cover_radius(alpha).max(cover_radius(beta));
    if interval_target && fast <= e0 {
        return Ok(done(e0));
    }
    let one = LscFunction::indicator(&OpenSet::full(space));
    if !FiberDiagram::new(alpha, beta, &one, &one)?.commutes() {
        // the diagram at (1, 1) appears for every radius
        return Ok(DStar { epsilon0: eps, value: Ext::Inf, scope: DStarScope::AllOpenSets, witness: None });
    }
    let top = if interval_target { fast.clone() } else { q(1, 2) };

    let mut ev = events(alpha);
    ev.extend(events(beta));
    ev.sort();
    ev.dedup();
    let mut radii: Vec<Rational> = vec![top.clone()];
    for (i, a) in ev.iter().enumerate() {
        for b in &ev[i + 1..] {
            let mut d = b - a;
            if d >= &top * &qi(2) && !circle {
                break;
            }
            if circle {
                d = d.clone().min(qi(1) - d);
            }
            for c in [d.clone(), d / qi(2)] {
                if c > e0 && c < top {
                    radii.push(c);
                }
            }
        }
    }
    radii.sort();
    radii.dedup();
    let radii = thin(radii, RADIUS_LIMIT);
    let mut tests: Vec<(Rational, Rational)> = Vec::new();
    let mut lower = e0.clone();
    for r in &radii {
        tests.push((lower.mid(r), lower.clone()));
        tests.push((r.clone(), r.clone()));
        lower = r.clone();
    }
    let mut largest = 0;
    let mut witness = None;
    for (r, value) in tests {
        let arcs = arc_family(alpha, beta, &ev, &r);
        largest = largest.max(arcs.len());
        match check_radius(alpha, beta, &r, &arcs)? {
            None => {
                return Ok(DStar { epsilon0: eps, value: Ext::Fin(value), scope: DStarScope::ArcFamily { arcs: largest }, witness });
            }
            Some(a) => witness = Some((a, r)),
        }
    }
    if interval_target {
        return Ok(DStar { epsilon0: eps, value: Ext::Fin(top), scope: DStarScope::AllOpenSets, witness });
    }
    Ok(DStar { epsilon0: eps, value: Ext::Inf, scope: DStarScope::ArcFamily { arcs: largest }, witness })
}

/// `d_triv(K(α₀x ≤ z)∘α_I, K(β₀x ≤ z)∘β_I)` for K1. This bounds `4·d*` only when `z` also
/// dominates both images of a fattening of `x` by some radius above `d*`.
pub fn lower_bound_check_k1(alpha: &EigenPattern, beta: &EigenPattern, x: &LscFunction, z: &LscFunction) -> Result<Ext> {
    let (ax, bx) = (alpha.apply(x)?, beta.apply(x)?);
    if !ax.leq(z)? || !bx.leq(z)? {
        return Err(Error::Argument("z must dominate both images of x".into()));
    }
    let (ix, iz) = (IdealModel::of(x), IdealModel::of(z));
    let (iax, ibx) = (IdealModel::of(&ax), IdealModel::of(&bx));
    let l = order_matrix(&iax, &iz)?.mul(&push_matrix(alpha, &ix, &iax)?)?;
    let r = order_matrix(&ibx, &iz)?.mul(&push_matrix(beta, &ix, &ibx)?)?;
    Ok(if l == r { Ext::zero() } else { Ext::Inf })
}

/// Per-component comparison of the K̄1 maps out of an ideal, landing in the whole target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrakdLowerBound {
    pub components: Vec<(Comp, HClass, Rational, Ext)>,
    /// `max (d_R + d_triv)`; the H-map term is left out, so this bounds 𝔡 from below.
    pub value: Ext,
}

/// Lower bound for `𝔡(K̄1(α₀x ≤ 1)∘α_I, K̄1(β₀x ≤ 1)∘β_I)` at `z = 1_B`, read in `H` through
/// `k0image`.
pub fn lower_bound_check_frakd(alpha: &EigenPattern, beta: &EigenPattern, ideal: &IdealModel, k0image: &K0Image) -> Result<FrakdLowerBound> {
    alpha.domain().same(beta.domain())?;
    alpha.codomain().same(beta.codomain())?;
    let ia = restricted_generator_image(alpha, ideal)?;
    let ib = restricted_generator_image(beta, ideal)?;
    let mut value = Ext::zero();
    let mut components = Vec::new();
    for (a, b) in ia.iter().zip(&ib) {
        let diff = HClass::new(a.trace.sub(&b.trace)?, k0image.clone());
        let dr = h_norm(&diff);
        let dt = if a.k1 == b.k1 { Ext::zero() } else { Ext::Inf };
        value = value.max(Ext::Fin(dr.clone()) + dt.clone());
        components.push((a.component.clone(), diff, dr, dt));
    }
    Ok(FrakdLowerBound { components, value })
}

/// Pointwise phases of the explicit restricted diagonal at `y`: `clamp(((θ − lo) mod 1)/|V|)`
/// for each eigenvalue `θ`, computed without the lifted generator.
pub fn restricted_phases_at(p: &EigenPattern, c: &Comp, y: &Rational) -> Result<Vec<(Rational, u64)>> {
    let (lo, len) = match c {
        Comp::Loop => (qi(0), qi(1)),
        Comp::Arc { lo, hi } => (lo.clone(), hi - lo),
    };
    let circle = p.domain() == BaseSpace::Circle;
    Ok(p.positions_at(y)
        .into_iter()
        .map(|(x, m)| {
            let d = &x - &lo;
            let d = if circle { d.fract() } else { d.max(qi(0)) };
            ((d / len.clone()).min(qi(1)), m)
        })
        .collect())
}

/// A field with the given phases and block size, for feeding the numeric oracle.
pub fn field_from_values(space: BaseSpace, size: u64, vals: &[(Rational, u64)]) -> Result<UnitaryField> {
    UnitaryField::with_size(
        space,
        size,
        vals.iter().map(|(v, m)| PhaseEntry { phase: PLFunction::constant(space, v.clone()), mult: *m }).collect(),
    )
}

/// The unit of the target block as an Lsc class, a valid `z` for any unital pattern.
pub fn unit_class(b: &Block) -> LscFunction {
    LscFunction::constant(b.base, NBar::Fin(b.size))
}
