//! Slow reference implementations used to cross-check the fast paths.

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::lsc::LscFunction;
use crate::pattern::EigenPattern;
use crate::rational::{qi, Rational};

use crate::space::BaseSpace;

fn circle_dist(a: &Rational, b: &Rational) -> Rational {
    let d = (a - b).fract();
    d.clone().min(Rational::one() - d)
}

/// Does every closed arc spanned by `xs` have at most as many points of `xs`
/// as `ys` has in its `r`-neighbourhood?
fn hall(xs: &[Rational], ys: &[Rational], r: &Rational, circle: bool) -> bool {
    let one = Rational::one();
    for p in xs {
        for qv in xs {
            let (lo, hi) = if circle {
                let mut hi = qv.clone();
                if hi < *p {
                    hi += one.clone();
                }
                (p.clone(), hi)
            } else {
                if qv < p {
                    continue;
                }
                (p.clone(), qv.clone())
            };
            let inside = |x: &Rational, a: &Rational, b: &Rational| {
                if circle {
                    let x = x - &(x - a).floor();
                    x <= *b
                } else {
                    x >= a && x <= b
                }
            };
            let a = &lo - r;
            let b = &hi + r;
            if circle && &b - &a >= one {
                continue;
            }
            let n_in = xs.iter().filter(|x| inside(x, &lo, &hi)).count();
            let n_out = ys.iter().filter(|y| inside(y, &a, &b)).count();
            if n_in > n_out {
                return false;
            }
        }
    }
    true
}

/// Bottleneck cost at one point by testing Hall's condition on every candidate radius.
pub fn cost_at_brute(p: &EigenPattern, qp: &EigenPattern, y: &Rational) -> Rational {
    let circle = p.domain() == BaseSpace::Circle;
    let expand = |e: &EigenPattern| -> Vec<Rational> {
        let mut v = Vec::new();
        for (x, m) in e.positions_at(y) {
            v.extend(std::iter::repeat(x).take(m as usize));
        }
        v
    };
    let xs = expand(p);
    let ys = expand(qp);
    let mut radii: Vec<Rational> = Vec::new();
    for x in &xs {
        for z in &ys {
            radii.push(if circle { circle_dist(x, z) } else { (x - z).abs() });
        }
    }
    radii.sort();
    radii.dedup();
    let (mut lo, mut hi) = (0usize, radii.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if hall(&xs, &ys, &radii[mid], circle) && hall(&ys, &xs, &radii[mid], circle) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    radii[lo].clone()
}

/// `d_Cu` by evaluating at every point where two eigenvalue gaps can tie.
pub fn d_cu_brute(p: &EigenPattern, qp: &EigenPattern) -> Result<Ext> {
    p.domain().same(qp.domain())?;
    p.codomain().same(qp.codomain())?;
    if p.total_mult() != qp.total_mult() {
        return Ok(Ext::Inf);
    }
    if p.total_mult() > 12 {
        return Err(Error::Budget("brute force is for small patterns".into()));
    }
    if p.codomain() == BaseSpace::Point {
        return Ok(Ext::Fin(cost_at_brute(p, qp, &Rational::zero())));
    }
    let mut ys: Vec<Rational> = vec![Rational::zero(), Rational::one()];
    for e in [p, qp] {
        for l in e.lifts() {
            ys.extend(l.breakpoints().cloned());
        }
    }
    ys.sort();
    ys.dedup();
    let mut cands = ys.clone();
    for w in ys.windows(2) {
        cands.extend(tie_points(p, qp, &w[0], &w[1]));
    }
    let mut best = Rational::zero();
    for y in &cands {
        best = best.max(cost_at_brute(p, qp, y));
    }
    Ok(Ext::Fin(best))
}

/// Points of `[y0, y1]` where two eigenvalue gaps tie or one gap crosses a half-integer.
/// Between breakpoints of the lifts the bottleneck cost is linear away from these points.
pub fn tie_points(p: &EigenPattern, qp: &EigenPattern, y0: &Rational, y1: &Rational) -> Vec<Rational> {
    let lifts: Vec<(Vec<&crate::pl::PLFunction>, Vec<Rational>)> = [p, qp]
        .iter()
        .map(|e| {
            let atoms: Vec<_> = e.atoms().collect();
            (atoms.iter().map(|a| a.lift).collect(), atoms.iter().map(|a| a.shift.clone()).collect())
        })
        .collect();
    let pos = |side: usize, i: usize, y: &Rational| lifts[side].0[i].eval_lifted(y) + &lifts[side].1[i];
    let (na, nb) = (lifts[0].0.len(), lifts[1].0.len());
    let gaps: Vec<(usize, usize)> = (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).collect();
    let g = |k: &(usize, usize), y: &Rational| pos(1, k.1, y) - pos(0, k.0, y);
    let g0: Vec<Rational> = gaps.iter().map(|k| g(k, y0)).collect();
    let g1: Vec<Rational> = gaps.iter().map(|k| g(k, y1)).collect();
    // tie points of |g1 + n1| = |g2 + n2|, i.e. g1 ∓ g2 integral (or half-integral for a single gap)
    let mut fns: Vec<(Rational, Rational)> = Vec::new();
    for a in 0..gaps.len() {
        fns.push((g0[a].clone(), g1[a].clone()));
        for b in 0..gaps.len() {
            for s in [1i64, -1] {
                fns.push((&g0[a] - &g0[b] * qi(s), &g1[a] - &g1[b] * qi(s)));
            }
        }
    }
    let step = Rational::new(1, 2);
    let mut out = Vec::new();
    for (v0, v1) in fns {
        if v0 == v1 {
            continue;
        }
        let (lo, hi) = if v0 < v1 { (v0.clone(), v1.clone()) } else { (v1.clone(), v0.clone()) };
        let mut n = (&lo / &step).ceil() * &step;
        while n <= hi {
            out.push(y0 + (&n - &v0) / (&v1 - &v0) * (y1 - y0));
            n += step.clone();
        }
    }
    out
}

/// `g ≪ h` decided through the increasing sequence of approximants of `h`.
pub fn waybelow_by_sequence(g: &LscFunction, h: &LscFunction, depth: u64) -> Result<bool> {
    let mut m = 1u64;
    while m <= depth {
        if g.leq(&h.approximant(m))? {
            return Ok(true);
        }
        m *= 2;
    }
    Ok(false)
}
