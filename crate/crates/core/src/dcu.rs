//! The Cu-metric between eigenvalue patterns via bottleneck matchings.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::lsc::LscFunction;
use crate::pattern::EigenPattern;
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::space::BaseSpace;

const ATOM_LIMIT: u64 = 200_000;
const NODE_LIMIT: usize = 400_000;
const HIT_LIMIT: usize = 1_000;
/// Largest pattern for which a stalled node is settled on its tie points.
const STALL_ATOMS: u64 = 64;
const GRID: i64 = 64;
const GRID_ODD: i64 = 61;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DcuMethod {
    /// The two patterns have different sizes.
    SizeMismatch,
    /// The maximum over sample points is certified globally.
    Certificate,
    /// Branch and bound over the elementary intervals.
    Search,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DcuWitness {
    /// The point of the codomain base where the cost peaks.
    pub y: Rational,
    /// A matched pair realizing the bottleneck there.
    pub from: Rational,
    pub to: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DcuResult {
    pub value: Ext,
    pub witness: Option<DcuWitness>,
    pub method: DcuMethod,
}

struct Side {
    lifts: Vec<PLFunction>,
    /// (lift index, shift) for every eigenvalue, repeated by multiplicity.
    atoms: Vec<(usize, Rational)>,
}

struct Prep {
    circle: bool,
    scale: i64,
    a: Side,
    b: Side,
    breaks: Vec<Rational>,
}

struct Eval {
    cost: Rational,
    /// (a atom, b atom, integer offset) for each matched pair.
    edges: Vec<(u32, u32, i64)>,
    worst: usize,
}

fn side(p: &EigenPattern, n: u64) -> Result<Side> {
    let scale = qi(n as i64);
    let mut lifts = Vec::new();
    let mut atoms = Vec::new();
    for (e, l) in p.entries().iter().zip(p.lifts()) {
        let o = (e.orbit / n) as i64;
        lifts.push(if n > 1 { l.scale(&scale) } else { l.clone() });
        let li = lifts.len() - 1;
        for j in 0..o {
            for _ in 0..e.mult {
                atoms.push((li, q(j, o)));
            }
        }
    }
    Ok(Side { lifts, atoms })
}

impl Side {
    fn pos(&self, i: usize, y: &Rational) -> Rational {
        let (l, s) = &self.atoms[i];
        self.lifts[*l].eval_lifted(y) + s
    }
}

impl Prep {
    fn new(p: &EigenPattern, qp: &EigenPattern) -> Result<Self> {
        let circle = p.domain() == BaseSpace::Circle;
        let n = if circle {
            p.entries().iter().chain(qp.entries()).fold(0u64, |g, e| g.gcd(&e.orbit))
        } else {
            1
        };
        if p.total_mult() / n > ATOM_LIMIT {
            return Err(Error::Budget(format!("{} eigenvalues per point", p.total_mult())));
        }
        let a = side(p, n)?;
        let b = side(qp, n)?;
        let mut breaks: Vec<Rational> = vec![Rational::zero(), Rational::one()];
        if p.codomain() == BaseSpace::Point {
            breaks = vec![Rational::zero()];
        } else {
            for l in a.lifts.iter().chain(&b.lifts) {
                breaks.extend(l.breakpoints().cloned());
            }
            breaks.sort();
            breaks.dedup();
        }
        Ok(Prep { circle, scale: n as i64, a, b, breaks })
    }

    fn sorted(&self, s: &Side, y: &Rational) -> Vec<(Rational, u32)> {
        let mut cache: Vec<Option<Rational>> = vec![None; s.lifts.len()];
        let mut v: Vec<(Rational, u32)> = s
            .atoms
            .iter()
            .enumerate()
            .map(|(i, (l, sh))| {
                let base = cache[*l].get_or_insert_with(|| s.lifts[*l].eval_lifted(y)).clone();
                let x = base + sh;
                (if self.circle { x.fract() } else { x }, i as u32)
            })
            .collect();
        v.sort();
        v
    }

    fn eval(&self, y: &Rational) -> Eval {
        let a = self.sorted(&self.a, y);
        let b = self.sorted(&self.b, y);
        let m = a.len() as i64;
        if !self.circle {
            let mut cost = Rational::zero();
            let mut worst = 0;
            let mut edges = Vec::with_capacity(a.len());
            for (k, (x, z)) in a.iter().zip(&b).enumerate() {
                let d = (&z.0 - &x.0).abs();
                if d > cost {
                    cost = d;
                    worst = k;
                }
                edges.push((x.1, z.1, 0));
            }
            return Eval { cost, edges, worst };
        }
        let bt = |k: i64| -> Rational {
            let (w, r) = (k.div_euclid(m), k.rem_euclid(m));
            &b[r as usize].0 + qi(w)
        };
        let pn = |s: i64| -> (Rational, Rational) {
            let mut p = None::<Rational>;
            let mut n = None::<Rational>;
            for (i, x) in a.iter().enumerate() {
                let d = bt(i as i64 + s) - &x.0;
                let nd = -d.clone();
                if p.as_ref().map_or(true, |v| d > *v) {
                    p = Some(d);
                }
                if n.as_ref().map_or(true, |v| nd > *v) {
                    n = Some(nd);
                }
            }
            (p.expect("atoms"), n.expect("atoms"))
        };
        let (mut lo, mut hi) = (-m, m);
        while lo < hi {
            let mid = lo + (hi - lo).div_euclid(2);
            let (p, n) = pn(mid);
            if p >= n {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let cost_of = |s: i64| {
            let (p, n) = pn(s);
            p.max(n)
        };
        let mut s = lo;
        if lo > -m && cost_of(lo - 1) < cost_of(lo) {
            s = lo - 1;
        }
        let mut cost = Rational::zero();
        let mut worst = 0;
        let mut edges = Vec::with_capacity(a.len());
        for (i, x) in a.iter().enumerate() {
            let k = i as i64 + s;
            let z = &b[k.rem_euclid(m) as usize];
            let d = bt(k) - &x.0;
            // offset between the raw lifts and the reduced positions
            let raw = self.b.pos(z.1 as usize, y) - self.a.pos(x.1 as usize, y);
            let off = (&d - &raw).to_i64().expect("integer offset");
            if d.abs() > cost {
                cost = d.abs();
                worst = i;
            }
            edges.push((x.1, z.1, off));
        }
        Eval { cost, edges, worst }
    }

    fn delta(&self, e: &(u32, u32, i64), y: &Rational) -> Rational {
        self.b.pos(e.1 as usize, y) - self.a.pos(e.0 as usize, y) + qi(e.2)
    }

    /// Cost of a fixed matching at `y`, with the worst edge.
    fn matching_cost(&self, edges: &[(u32, u32, i64)], y: &Rational) -> (Rational, usize) {
        let mut best = Rational::zero();
        let mut arg = 0;
        for (k, e) in edges.iter().enumerate() {
            let d = self.delta(e, y).abs();
            if d > best {
                best = d;
                arg = k;
            }
        }
        (best, arg)
    }

    fn samples(&self) -> Vec<Rational> {
        let mut ys = self.breaks.clone();
        if ys.len() == 1 {
            return ys;
        }
        let mids: Vec<Rational> = ys.windows(2).map(|w| w[0].mid(&w[1])).collect();
        ys.extend(mids);
        ys.extend((0..=GRID).map(|j| q(j, GRID)));
        ys.extend((1..GRID_ODD).map(|j| q(j, GRID_ODD)));
        ys.extend(self.hits());
        ys.sort();
        ys.dedup();
        ys
    }

    /// Points where a moving eigenvalue crosses a fixed one.
    fn hits(&self) -> Vec<Rational> {
        let mut fixed: Vec<Rational> = Vec::new();
        for s in [&self.a, &self.b] {
            for (l, sh) in &s.atoms {
                let f = &s.lifts[*l];
                if f.is_constant() {
                    let x = f.eval_lifted(&Rational::zero()) + sh;
                    fixed.push(if self.circle { x.fract() } else { x });
                }
            }
        }
        fixed.sort();
        fixed.dedup();
        let mut out = Vec::new();
        if fixed.is_empty() {
            return out;
        }
        for s in [&self.a, &self.b] {
            let mut seen: Vec<(usize, Rational)> = Vec::new();
            for (l, sh) in &s.atoms {
                let f = &s.lifts[*l];
                if f.is_constant() || seen.iter().any(|(m, t)| m == l && t == sh) {
                    continue;
                }
                seen.push((*l, sh.clone()));
                let mut local = Vec::new();
                let mut ok = true;
                for w in f.points().windows(2) {
                    let ((s0, u0), (s1, u1)) = (&w[0], &w[1]);
                    if u0 == u1 {
                        continue;
                    }
                    let (v0, v1) = (u0 + sh, u1 + sh);
                    let (lo, hi) = if v0 < v1 { (v0.clone(), v1.clone()) } else { (v1.clone(), v0.clone()) };
                    let span = (&hi - &lo).ceil().to_i64().unwrap_or(i64::MAX).saturating_add(1);
                    if span.saturating_mul(fixed.len() as i64) > HIT_LIMIT as i64 {
                        ok = false;
                        break;
                    }
                    let shifts: Vec<Rational> = if self.circle {
                        let mut n = lo.floor();
                        let mut v = Vec::new();
                        while n <= hi {
                            v.push(n.clone());
                            n += Rational::one();
                        }
                        v
                    } else {
                        vec![Rational::zero()]
                    };
                    for n in &shifts {
                        for c in &fixed {
                            let x = c + n;
                            if x >= lo && x <= hi {
                                local.push(s0 + (&x - &v0) * (s1 - s0) / (&v1 - &v0));
                            }
                        }
                    }
                }
                if ok && out.len() + local.len() <= HIT_LIMIT {
                    out.extend(local);
                }
            }
        }
        out
    }
}

/// The per-point bottleneck cost of two patterns at `y`.
pub fn cost_at(p: &EigenPattern, qp: &EigenPattern, y: &Rational) -> Result<Rational> {
    check(p, qp)?;
    if p.total_mult() != qp.total_mult() {
        return Err(Error::Argument("patterns of different sizes have no matching".into()));
    }
    let prep = Prep::new(p, qp)?;
    Ok(prep.eval(y).cost / qi(prep.scale))
}

fn check(p: &EigenPattern, qp: &EigenPattern) -> Result<()> {
    p.domain().same(qp.domain())?;
    p.codomain().same(qp.codomain())
}

struct Obj {
    lo: Rational,
    hi: Rational,
    w: u64,
}

/// Ranges swept by the eigenvalues over the whole base, split into fixed points and moving ranges.
fn objects(prep: &Prep, s: &Side) -> (Vec<(Rational, u64)>, Vec<Obj>, u64) {
    let mut fixed: Vec<(Rational, u64)> = Vec::new();
    let mut moving: Vec<Obj> = Vec::new();
    let mut full = 0u64;
    for (l, sh) in &s.atoms {
        let (lo, hi) = s.lifts[*l].range();
        let (lo, hi) = (lo + sh, hi + sh);
        if lo == hi {
            fixed.push((if prep.circle { lo.fract() } else { lo }, 1));
        } else if prep.circle && &hi - &lo >= qi(1) {
            full += 1;
        } else if prep.circle {
            let f = lo.floor();
            moving.push(Obj { lo: &lo - &f, hi: &hi - &f, w: 1 });
        } else {
            moving.push(Obj { lo, hi, w: 1 });
        }
    }
    fixed.sort();
    let mut merged: Vec<(Rational, u64)> = Vec::new();
    for (x, w) in fixed {
        match merged.last_mut() {
            Some(l) if l.0 == x => l.1 += w,
            _ => merged.push((x, w)),
        }
    }
    (merged, moving, full)
}

/// Weighted counts of sorted points on closed (lifted) arcs.
struct Counter {
    xs: Vec<Rational>,
    prefix: Vec<u64>,
    circle: bool,
}

impl Counter {
    fn new(pts: &[(Rational, u64)], circle: bool) -> Self {
        let mut prefix = vec![0u64];
        for (_, w) in pts {
            prefix.push(prefix.last().unwrap() + w);
        }
        Counter { xs: pts.iter().map(|p| p.0.clone()).collect(), prefix, circle }
    }

    fn total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }

    /// Weight of points `<= x` (or `< x`), lifted on the circle.
    fn upto(&self, x: &Rational, strict: bool) -> i128 {
        let (n, f) = if self.circle { (x.floor().to_i64().unwrap() as i128, x.fract()) } else { (0, x.clone()) };
        let k = if strict { self.xs.partition_point(|v| *v < f) } else { self.xs.partition_point(|v| *v <= f) };
        n * self.total() as i128 + self.prefix[k] as i128
    }

    fn closed(&self, a: &Rational, b: &Rational) -> u64 {
        (self.upto(b, false) - self.upto(a, true)) as u64
    }
}

fn meets(o: &Obj, a: &Rational, b: &Rational, circle: bool) -> bool {
    if !circle {
        return o.lo <= *b && o.hi >= *a;
    }
    // shift o so that its low end is the first lift >= a - len
    let n = (a - &o.hi).ceil();
    let (lo, _hi) = (&o.lo + &n, &o.hi + &n);
    lo <= *b
}

fn inside(o: &Obj, a: &Rational, b: &Rational, circle: bool) -> bool {
    if !circle {
        return o.lo >= *a && o.hi <= *b;
    }
    let n = (a - &o.lo).ceil();
    &o.hi + &n <= *b
}

/// Checks `μ_y(I) <= ν_y(I^r)` for all closed arcs `I` and all `y` at once,
/// using only the ranges swept by the eigenvalues.
fn certify_dir(prep: &Prep, mu: &Side, nu: &Side, r: &Rational) -> bool {
    let circle = prep.circle;
    let one = qi(1);
    let (mf, mm, mfull) = objects(prep, mu);
    let (nf, nm, _) = objects(prep, nu);
    let mc = Counter::new(&mf, circle);
    let nc = Counter::new(&nf, circle);
    let ub = |a: &Rational, b: &Rational| -> u64 {
        mc.closed(a, b) + mfull + mm.iter().filter(|o| meets(o, a, b, circle)).map(|o| o.w).sum::<u64>()
    };
    let lb = |a: &Rational, b: &Rational| -> Option<u64> {
        let (a2, b2) = (a - r, b + r);
        let (a2, b2) = if circle {
            if &b2 - &a2 >= one {
                return None;
            }
            (a2, b2)
        } else {
            let a2 = a2.max(Rational::zero());
            let b2 = b2.min(one.clone());
            if a2.is_zero() && b2 == one {
                return None;
            }
            (a2, b2)
        };
        Some(nc.closed(&a2, &b2) + nm.iter().filter(|o| inside(o, &a2, &b2, circle)).map(|o| o.w).sum::<u64>())
    };
    let ok = |a: &Rational, b: &Rational| lb(a, b).map_or(true, |l| ub(a, b) <= l);
    // left ends: upper ends of μ objects; right ends: lower ends
    let mut ps: Vec<Rational> = mf.iter().map(|p| p.0.clone()).collect();
    let mut qs = ps.clone();
    for o in &mm {
        ps.push(if circle { o.hi.fract() } else { o.hi.clone() });
        qs.push(o.lo.clone());
    }
    ps.sort();
    ps.dedup();
    qs.sort();
    qs.dedup();
    for p in &ps {
        for qv in &qs {
            let b = if circle {
                let mut b = qv - &(qv - p).floor();
                if b < *p {
                    b += one.clone();
                }
                b
            } else {
                qv.clone()
            };
            if b < *p {
                continue;
            }
            if circle && &b - p + r * qi(2) >= one {
                continue;
            }
            if !ok(p, &b) {
                return false;
            }
        }
    }
    // single points
    let mut xs: Vec<Rational> = Vec::new();
    for (x, _) in mf.iter().chain(&nf) {
        xs.push(x.clone());
        xs.push(x - r);
        xs.push(x + r);
    }
    for o in mm.iter().chain(&nm) {
        for e in [&o.lo, &o.hi] {
            xs.push(e.clone());
            xs.push(e - r);
            xs.push(e + r);
        }
    }
    let mut xs: Vec<Rational> = xs
        .into_iter()
        .map(|x| if circle { x.fract() } else { x.max(Rational::zero()).min(one.clone()) })
        .collect();
    xs.sort();
    xs.dedup();
    let mut all = xs.clone();
    for w in xs.windows(2) {
        all.push(w[0].mid(&w[1]));
    }
    if circle {
        if let (Some(f), Some(l)) = (xs.first(), xs.last()) {
            all.push((l + &(f + &one)) / qi(2));
        }
    }
    if all.is_empty() {
        all.push(q(1, 2));
    }
    all.iter().all(|x| {
        let x = if circle { x.fract() } else { x.clone() };
        ok(&x, &x)
    })
}

#[derive(PartialEq, Eq)]
struct Node {
    ub: Rational,
    y0: Rational,
    y1: Rational,
}

impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        self.ub.cmp(&o.ub).then_with(|| o.y0.cmp(&self.y0))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Best {
    cost: Rational,
    y: Rational,
    pair: (Rational, Rational),
}

impl Best {
    fn offer(&mut self, prep: &Prep, y: &Rational, ev: &Eval) {
        if ev.cost > self.cost {
            let e = &ev.edges[ev.worst];
            let from = prep.a.pos(e.0 as usize, y);
            let to = prep.b.pos(e.1 as usize, y) + qi(e.2);
            self.cost = ev.cost.clone();
            self.y = y.clone();
            self.pair = (from, to);
        }
    }
}

/// Exact upper bound of the matching cost over `[y0, y1]`, or a split point.
fn node_bound(prep: &Prep, y0: &Rational, y1: &Rational, e0: &Eval, e1: &Eval) -> (Rational, Option<Rational>) {
    let (fa0, wa0) = (e0.cost.clone(), e0.worst);
    let (fa1, wa1) = prep.matching_cost(&e0.edges, y1);
    let (fb1, wb1) = (e1.cost.clone(), e1.worst);
    let (fb0, wb0) = prep.matching_cost(&e1.edges, y0);
    let ma = fa0.clone().max(fa1.clone());
    let mb = fb0.clone().max(fb1.clone());
    let ub = ma.min(mb);
    // one dominating edge per matching: the bound is a min of two lines
    let line = |edges: &[(u32, u32, i64)], i: usize, j: usize| -> Option<(Rational, Rational)> {
        if edges[i] != edges[j] {
            return None;
        }
        let d0 = prep.delta(&edges[i], y0);
        let d1 = prep.delta(&edges[i], y1);
        if d0.signum() * d1.signum() < 0 {
            return None;
        }
        Some((d0.abs(), d1.abs()))
    };
    if let (Some((a0, a1)), Some((b0, b1))) = (line(&e0.edges, wa0, wa1), line(&e1.edges, wb0, wb1)) {
        let g0 = &a0 - &b0;
        let g1 = &a1 - &b1;
        if g0.signum() * g1.signum() < 0 {
            let t = &g0 / (&g0 - &g1);
            let ys = y0 + &t * (y1 - y0);
            let v = &a0 + &t * (&a1 - &a0);
            return (v.min(ub), Some(ys));
        }
        let v = a0.min(b0).max(a1.min(b1));
        return (v.min(ub), None);
    }
    (ub, None)
}

/// `d_Cu` of the induced Cu-morphisms, exact.
pub fn d_cu(p: &EigenPattern, qp: &EigenPattern) -> Result<DcuResult> {
    check(p, qp)?;
    if p.total_mult() != qp.total_mult() {
        return Ok(DcuResult { value: Ext::Inf, witness: None, method: DcuMethod::SizeMismatch });
    }
    let folded;
    let (p, qp) = if p.domain() == BaseSpace::Circle {
        let m = p.rotation_period().gcd(&qp.rotation_period());
        folded = (p.fold_orbits(m)?, qp.fold_orbits(m)?);
        (&folded.0, &folded.1)
    } else {
        (p, qp)
    };
    let prep = Prep::new(p, qp)?;
    let scale = qi(prep.scale);
    let mut best = Best { cost: Rational::zero(), y: Rational::zero(), pair: (Rational::zero(), Rational::zero()) };
    let samples = prep.samples();
    for y in &samples {
        let ev = prep.eval(y);
        best.offer(&prep, y, &ev);
    }
    let finish = |best: Best, method| {
        let value = Ext::Fin(&best.cost / &scale);
        let witness = Some(DcuWitness { y: best.y, from: &best.pair.0 / &scale, to: &best.pair.1 / &scale });
        Ok(DcuResult { value, witness, method })
    };
    // no matching moves an eigenvalue further than half the circle, or across [0,1]
    let cap = if prep.circle { q(1, 2) } else { qi(1) };
    if best.cost >= cap {
        return finish(best, DcuMethod::Certificate);
    }
    if prep.breaks.len() == 1 || (certify_dir(&prep, &prep.a, &prep.b, &best.cost) && certify_dir(&prep, &prep.b, &prep.a, &best.cost)) {
        return finish(best, DcuMethod::Certificate);
    }
    let mut heap = BinaryHeap::new();
    let mut evals: std::collections::HashMap<Rational, Eval> = std::collections::HashMap::new();
    let get = |evals: &mut std::collections::HashMap<Rational, Eval>, y: &Rational| {
        if !evals.contains_key(y) {
            evals.insert(y.clone(), prep.eval(y));
        }
    };
    for w in prep.breaks.windows(2) {
        heap.push(Node { ub: qi(i64::MAX), y0: w[0].clone(), y1: w[1].clone() });
    }
    let mut nodes = 0usize;
    let stall = q(1, 1 << 30);
    while let Some(node) = heap.pop() {
        if node.ub <= best.cost || best.cost >= cap {
            break;
        }
        nodes += 1;
        if nodes > NODE_LIMIT {
            return Err(Error::Budget(format!("d_cu search exceeded {NODE_LIMIT} nodes")));
        }
        if &node.y1 - &node.y0 < stall && p.total_mult() <= STALL_ATOMS {
            // the bound only creeps towards the true value here: settle the node on its tie points
            let ends = [node.y0.clone(), node.y1.clone()];
            for y in crate::oracle::tie_points(p, qp, &node.y0, &node.y1).into_iter().chain(ends) {
                if y >= node.y0 && y <= node.y1 {
                    best.offer(&prep, &y, &prep.eval(&y));
                }
            }
            continue;
        }
        get(&mut evals, &node.y0);
        get(&mut evals, &node.y1);
        let (ub, split) = {
            let e0 = &evals[&node.y0];
            let e1 = &evals[&node.y1];
            best.offer(&prep, &node.y0, e0);
            best.offer(&prep, &node.y1, e1);
            node_bound(&prep, &node.y0, &node.y1, e0, e1)
        };
        if ub <= best.cost {
            continue;
        }
        let ys = split.filter(|s| *s > node.y0 && *s < node.y1).unwrap_or_else(|| node.y0.mid(&node.y1));
        get(&mut evals, &ys);
        best.offer(&prep, &ys, &evals[&ys]);
        if evals[&ys].cost >= ub {
            continue;
        }
        heap.push(Node { ub: ub.clone(), y0: node.y0.clone(), y1: ys.clone() });
        heap.push(Node { ub, y0: ys, y1: node.y1 });
    }
    finish(best, DcuMethod::Search)
}

/// For every `g ≪ h` in `pairs`: `α(g) <= β(h)` and `β(g) <= α(h)`.
pub fn finite_set_compare(a: &EigenPattern, b: &EigenPattern, pairs: &[(LscFunction, LscFunction)]) -> Result<bool> {
    for (g, h) in pairs {
        if !g.waybelow(h)? {
            return Err(Error::Argument("finite-set comparison needs g ≪ h".into()));
        }
        if !a.apply(g)?.leq(&b.apply(h)?)? || !b.apply(g)?.leq(&a.apply(h)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}
