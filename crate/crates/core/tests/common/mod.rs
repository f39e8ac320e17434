#![allow(dead_code)]

use nt_desk::{q, qi, BaseSpace, EigenPattern, LscFunction, NBar, PLFunction, PatternEntry, PositiveField, Rational, UnitaryField};
use rand::rngs::StdRng;
use rand::Rng;

pub fn dyadic(rng: &mut StdRng, lo: i64, hi: i64, den: i64) -> Rational {
    q(rng.gen_range(lo * den..=hi * den), den)
}

/// A random PL function on [0,1] with values in [lo, hi].
pub fn random_pl(rng: &mut StdRng, lo: i64, hi: i64) -> PLFunction {
    let pieces = rng.gen_range(1..=3);
    let mut xs: Vec<Rational> = (1..pieces).map(|_| q(rng.gen_range(1..8), 8)).collect();
    xs.push(qi(0));
    xs.push(qi(1));
    xs.sort();
    xs.dedup();
    let pts = xs.into_iter().map(|x| (x, dyadic(rng, lo, hi, 8))).collect();
    PLFunction::new(BaseSpace::Interval, pts).unwrap()
}

fn random_entry(rng: &mut StdRng, circle: bool, mult: u64) -> PatternEntry {
    match rng.gen_range(0..3) {
        0 => PatternEntry::constant(dyadic(rng, 0, 1, 8).min(qi(1)), mult),
        1 if circle => PatternEntry::winding(rng.gen_range(-2..=2), PLFunction::identity(BaseSpace::Interval), dyadic(rng, 0, 1, 8), mult),
        _ => {
            if circle {
                PatternEntry::pl(random_pl(rng, -1, 2), mult)
            } else {
                PatternEntry::pl(random_pl(rng, 0, 1), mult)
            }
        }
    }
}

/// A random pattern into `C([0,1])` with `size` eigenvalues.
pub fn random_pattern(rng: &mut StdRng, circle: bool, size: u64) -> EigenPattern {
    let mut left = size;
    let mut maps = Vec::new();
    while left > 0 {
        if circle && left % 2 == 0 && rng.gen_bool(0.2) {
            let m = rng.gen_range(1..=left / 2);
            maps.push(random_entry(rng, circle, m).with_orbit(2));
            left -= 2 * m;
        } else {
            let m = rng.gen_range(1..=left.min(2));
            maps.push(random_entry(rng, circle, m));
            left -= m;
        }
    }
    let dom = if circle { BaseSpace::Circle } else { BaseSpace::Interval };
    EigenPattern::new(dom, BaseSpace::Interval, maps).unwrap()
}

fn random_nbar(rng: &mut StdRng) -> NBar {
    if rng.gen_bool(0.05) {
        NBar::Inf
    } else {
        NBar::Fin(rng.gen_range(0..=3))
    }
}

/// A random step function with breaks on the grid of eighths.
pub fn random_lsc(rng: &mut StdRng, space: BaseSpace) -> LscFunction {
    let mut breaks: Vec<Rational> = (1..8).filter(|_| rng.gen_bool(0.3)).map(|k| q(k, 8)).collect();
    breaks.insert(0, qi(0));
    breaks.push(qi(1));
    let at = breaks.iter().map(|_| random_nbar(rng)).collect();
    let on = breaks[1..].iter().map(|_| random_nbar(rng)).collect();
    LscFunction::from_parts(space, breaks, at, on).unwrap()
}

/// A finite-valued random step function.
pub fn random_finite_lsc(rng: &mut StdRng, space: BaseSpace) -> LscFunction {
    loop {
        let f = random_lsc(rng, space);
        if f.max_value().is_finite() {
            return f;
        }
    }
}

/// A positive diagonal field on `[0,1]` of norm at most 1.
pub fn random_positive(rng: &mut StdRng, size: u64) -> PositiveField {
    let vals = (0..size).map(|_| (random_pl(rng, 0, 1), 1)).collect::<Vec<_>>();
    PositiveField::from_values(BaseSpace::Interval, vals).unwrap()
}

/// A phase on the circle with no winding and values in `[lo, hi]`.
pub fn random_loop(rng: &mut StdRng, lo: i64, hi: i64) -> PLFunction {
    let f = random_pl(rng, lo, hi);
    let mut pts = f.points().to_vec();
    let first = pts[0].1.clone();
    pts.last_mut().unwrap().1 = first;
    PLFunction::new(BaseSpace::Circle, pts).unwrap()
}

/// A unitary field filling its block; on the circle the first eigenvalue winds once.
pub fn random_unitary(rng: &mut StdRng, space: BaseSpace, size: u64) -> UnitaryField {
    let mut phases = Vec::new();
    if space == BaseSpace::Circle {
        phases.push((PLFunction::identity(BaseSpace::Circle).add(&random_loop(rng, 0, 1)).unwrap(), 1));
    }
    while (phases.len() as u64) < size {
        let p = match space {
            BaseSpace::Circle => random_loop(rng, 0, 1),
            _ => random_pl(rng, -1, 2),
        };
        phases.push((p, 1));
    }
    UnitaryField::from_phases(space, phases).unwrap()
}
