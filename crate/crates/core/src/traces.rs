//! Trace-level distances between pattern morphisms, and Thomsen elements.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::algebra::{K0Image, PositiveField};
use crate::dcu::d_cu;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::pattern::{EigenPattern, PatternEntry};
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::space::BaseSpace;

/// An eigenvalue line on an elementary interval, with the signed normalized mass `P − Q`.
#[derive(Clone, Debug)]
struct Group {
    slope: Rational,
    at: Rational,
    w: Rational,
}

fn breaks(p: &EigenPattern, qp: &EigenPattern) -> Vec<Rational> {
    if p.codomain() == BaseSpace::Point {
        return vec![Rational::zero()];
    }
    let mut ys = vec![Rational::zero(), Rational::one()];
    for l in p.lifts().iter().chain(qp.lifts()) {
        ys.extend(l.breakpoints().cloned());
    }
    ys.sort();
    ys.dedup();
    ys
}

/// Groups of identical eigenvalue lines over `[y0, y1]` (a point when `y0 == y1`).
fn groups(p: &EigenPattern, qp: &EigenPattern, y0: &Rational, y1: &Rational) -> Vec<Group> {
    let circle = p.domain() == BaseSpace::Circle;
    let mut acc: BTreeMap<(Rational, Rational), Rational> = BTreeMap::new();
    for (pat, sign) in [(p, 1i64), (qp, -1i64)] {
        let n = q(sign, pat.total_mult() as i64);
        for a in pat.atoms() {
            let v0 = a.at(y0);
            let slope = if y0 == y1 { Rational::zero() } else { (a.at(y1) - &v0) / (y1 - y0) };
            let at = if circle { v0.fract() } else { v0 };
            *acc.entry((slope, at)).or_insert_with(Rational::zero) += qi(a.mult as i64) * &n;
        }
    }
    acc.into_iter().filter(|(_, w)| !w.is_zero()).map(|((slope, at), w)| Group { slope, at, w }).collect()
}

fn cells(p: &EigenPattern, qp: &EigenPattern) -> Result<Vec<Vec<Group>>> {
    p.domain().same(qp.domain())?;
    p.codomain().same(qp.codomain())?;
    let ys = breaks(p, qp);
    if ys.len() == 1 {
        return Ok(vec![groups(p, qp, &ys[0], &ys[0])]);
    }
    Ok(ys.windows(2).map(|w| groups(p, qp, &w[0], &w[1])).collect())
}

/// `sup_{‖h‖≤1} ‖φ(h)^ − ψ(h)^‖`: the largest total variation of the difference of the
/// normalized eigenvalue measures, at generic points of the codomain.
pub fn aff_t_distance(p: &EigenPattern, qp: &EigenPattern) -> Result<Rational> {
    Ok(cells(p, qp)?
        .iter()
        .map(|gs| gs.iter().map(|g| g.w.abs()).sum::<Rational>())
        .max()
        .unwrap_or_else(Rational::zero))
}

/// `sup_{‖h‖≤1}` of the quotient norm of `φ(h)^ − ψ(h)^` modulo the given image of K0.
pub fn h_distance(p: &EigenPattern, qp: &EigenPattern, k0: &K0Image) -> Result<Rational> {
    let cs = cells(p, qp)?;
    let point = p.codomain() == BaseSpace::Point;
    let mut best = Rational::zero();
    for (i, c1) in cs.iter().enumerate() {
        for c2 in &cs[i..] {
            // generators (value at y1, value at y2) of the achievable pairs
            let mut gens: Vec<(Rational, Rational)> = Vec::new();
            if point {
                gens.extend(c1.iter().map(|g| (g.w.clone(), g.w.clone())));
            } else {
                let mut flat: BTreeMap<&Rational, (Rational, Rational)> = BTreeMap::new();
                for (g, first) in c1.iter().map(|g| (g, true)).chain(c2.iter().map(|g| (g, false))) {
                    let (a, b) = if first { (g.w.clone(), Rational::zero()) } else { (Rational::zero(), g.w.clone()) };
                    if !g.slope.is_zero() {
                        gens.push((a, b));
                        continue;
                    }
                    let f = flat.entry(&g.at).or_insert_with(|| (Rational::zero(), Rational::zero()));
                    f.0 += a;
                    f.1 += b;
                }
                gens.extend(flat.into_values());
            }
            best = best.max(zonotope_sup(&gens, k0));
        }
    }
    Ok(best)
}

fn cross(a: &(Rational, Rational), b: &(Rational, Rational)) -> Rational {
    &a.0 * &b.1 - &a.1 * &b.0
}

/// Max over `Σ h_i g_i`, `h_i ∈ [−1,1]`, of the quotient norm of a function with
/// extreme values `a`, `b`.
fn zonotope_sup(gens: &[(Rational, Rational)], k0: &K0Image) -> Rational {
    // (u, v) = (a + b, a − b)
    let mut uv: Vec<(Rational, Rational)> = gens
        .iter()
        .map(|(a, b)| (a + b, a - b))
        .filter(|g| !(g.0.is_zero() && g.1.is_zero()))
        .map(|g| if g.1.is_negative() || (g.1.is_zero() && g.0.is_negative()) { (-g.0, -g.1) } else { g })
        .collect();
    if uv.is_empty() {
        return Rational::zero();
    }
    uv.sort_by(|a, b| match cross(a, b).signum() {
        1 => Ordering::Less,
        -1 => Ordering::Greater,
        _ => Ordering::Equal,
    });
    // parallel generators add up to one edge
    let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(uv.len());
    for g in uv {
        match merged.last_mut() {
            Some(m) if cross(m, &g).is_zero() => {
                m.0 += g.0;
                m.1 += g.1;
            }
            _ => merged.push(g),
        }
    }
    let uv = merged;
    let two = qi(2);
    let mut p = uv.iter().fold((Rational::zero(), Rational::zero()), |acc, g| (acc.0 - &g.0, acc.1 - &g.1));
    let mut verts = vec![p.clone()];
    for g in uv.iter().chain(uv.iter()) {
        let s = if verts.len() <= uv.len() { two.clone() } else { -two.clone() };
        p = (&p.0 + &g.0 * &s, &p.1 + &g.1 * &s);
        verts.push(p.clone());
    }
    let umin = verts.iter().map(|v| v.0.clone()).min().expect("vertices");
    let umax = verts.iter().map(|v| v.0.clone()).max().expect("vertices");
    let mut us: Vec<Rational> = verts.iter().map(|v| v.0.clone()).collect();
    match k0 {
        K0Image::Zero => us.push(Rational::zero()),
        K0Image::LatticeConstants(c) => {
            let mut k = (&umin / c).ceil();
            while &k * c <= umax {
                us.push(&k * c);
                k += Rational::one();
            }
        }
        K0Image::AllConstants => {}
    }
    let half = q(1, 2);
    let chains = hull_chains(&verts);
    us.sort();
    us.dedup();
    us.into_iter()
        .filter(|u| *u >= umin && *u <= umax)
        .map(|u| {
            let v = slice_width(&chains, &u);
            match k0 {
                K0Image::AllConstants => &v * &half,
                K0Image::Zero => (u.abs() + v) * &half,
                K0Image::LatticeConstants(_) => &v * &half + k0.dist_const(&(&u * &half)),
            }
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Lower and upper boundary chains of the convex hull, both sorted by `u`.
fn hull_chains(pts: &[(Rational, Rational)]) -> [Vec<(Rational, Rational)>; 2] {
    let mut sorted = pts.to_vec();
    sorted.sort();
    sorted.dedup();
    let turn = |o: &(Rational, Rational), a: &(Rational, Rational), b: &(Rational, Rational)| {
        (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
    };
    let chain = |it: &mut dyn Iterator<Item = &(Rational, Rational)>| {
        let mut h: Vec<(Rational, Rational)> = Vec::new();
        for p in it {
            while h.len() >= 2 && !turn(&h[h.len() - 2], &h[h.len() - 1], p).is_positive() {
                h.pop();
            }
            h.push(p.clone());
        }
        h
    };
    let lower = chain(&mut sorted.iter());
    let mut upper = chain(&mut sorted.iter().rev());
    upper.reverse();
    [lower, upper]
}

/// Largest `|v|` on the slice of the polygon at `u`.
fn slice_width(chains: &[Vec<(Rational, Rational)>; 2], u: &Rational) -> Rational {
    let mut best = Rational::zero();
    for c in chains {
        let i = c.partition_point(|p| &p.0 < u);
        let mut j = i;
        while j < c.len() && &c[j].0 == u {
            best = best.max(c[j].1.abs());
            j += 1;
        }
        if j == i && i > 0 && i < c.len() {
            let (a, b) = (&c[i - 1], &c[i]);
            let v = &a.1 + (u - &a.0) * (&b.1 - &a.1) / (&b.0 - &a.0);
            best = best.max(v.abs());
        }
    }
    best
}

/// The pattern of `f ↦ f(a)` out of `C([0,1])`, whose Cu-map restricted to the
/// generators `1_{(t,1]}` is the Thomsen element of `a`.
pub fn thomsen_nu(a: &PositiveField) -> Result<EigenPattern> {
    if a.norm() > qi(1) {
        return Err(Error::Argument(format!("positive field of norm {} > 1", a.norm())));
    }
    let y = a.space();
    let maps = a.entries().iter().map(|e| PatternEntry::pl(e.value.clone(), e.mult)).collect();
    EigenPattern::new(BaseSpace::Interval, y, maps)
}

/// `ν_δ`: the Thomsen element of `(a − δ)₊`.
pub fn nu_delta(a: &PositiveField, delta: &Rational) -> Result<EigenPattern> {
    if delta.is_negative() || *delta > qi(1) {
        return Err(Error::Argument(format!("shift {delta} outside [0,1]")));
    }
    let mut pts = vec![(qi(0), qi(0)), (delta.clone(), qi(0)), (qi(1), qi(1) - delta)];
    pts.dedup_by(|b, a| a.0 == b.0);
    let cut = PLFunction::new(BaseSpace::Interval, pts)?;
    let shifted = a
        .entries()
        .iter()
        .map(|e| Ok((cut.compose(&e.value)?, e.mult)))
        .collect::<Result<Vec<_>>>()?;
    thomsen_nu(&PositiveField::from_values(a.space(), shifted)?)
}

/// `sup_{ν ∈ N} d_Cu(α∘ν, β∘ν)`.
pub fn d_n(alpha: &EigenPattern, beta: &EigenPattern, ns: &[EigenPattern]) -> Result<Ext> {
    if ns.is_empty() {
        return Err(Error::Argument("d_N needs at least one Thomsen element".into()));
    }
    let mut best = Ext::zero();
    for nu in ns {
        best = best.max(d_cu(&nu.after(alpha)?, &nu.after(beta)?)?.value);
    }
    Ok(best)
}
