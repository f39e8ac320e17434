//! The command implementations behind the `nt-desk` binary, on parsed inputs.

use std::path::Path;

use serde::Deserialize;

use crate::algebra::{Block, K0Image, UnitaryField};
use crate::dcu::d_cu;
use crate::determinant::{det_hat, numeric_det_at};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::nt::{frak_d, is_diagonalisable, rotation, NTBasis, NTMorphism};
use crate::openset::OpenSet;
use crate::pattern::EigenPattern;
use crate::rational::{q, Rational};
use crate::refined::{d_star_k1, lower_bound_check_frakd, DStarScope, IdealModel};
use crate::report::{Provenance, ScenarioReport, Witness};
use crate::space::BaseSpace;

/// Any of the accepted input shapes for a morphism out of `C(X)`.
#[derive(Deserialize)]
#[serde(untagged)]
enum MorphismInput {
    Nt(NTMorphism),
    Pattern(EigenPattern),
    Unitary(UnitaryField),
}

pub fn read_json<T: for<'de> Deserialize<'de>>(p: &Path) -> Result<T> {
    let s = std::fs::read_to_string(p)?;
    serde_json::from_str(&s).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

/// `all`, `zero` or `lattice:P/Q`.
pub fn parse_k0(s: &str) -> Result<K0Image> {
    match s {
        "all" => Ok(K0Image::AllConstants),
        "zero" => Ok(K0Image::Zero),
        _ => {
            let step = s.strip_prefix("lattice:").ok_or_else(|| Error::Parse(format!("unknown K0 image {s}")))?;
            K0Image::lattice(step.parse::<Rational>()?)
        }
    }
}

/// A morphism from JSON: an `NTMorphism`, a bare pattern or a unitary `u` (read as `f ↦ f(u)`).
/// Bare inputs get a single target block with K0 image all constants unless `k0` says otherwise.
pub fn morphism_from_str(s: &str, k0: Option<&K0Image>) -> Result<NTMorphism> {
    let m = match serde_json::from_str::<MorphismInput>(s).map_err(|e| Error::Parse(e.to_string()))? {
        MorphismInput::Nt(m) => m,
        MorphismInput::Pattern(pat) => {
            let target = Block::new(pat.codomain(), pat.total_mult())?.with_k0image(K0Image::AllConstants);
            NTMorphism::new(pat, target)?
        }
        MorphismInput::Unitary(u) => NTMorphism::from_unitary(&u, K0Image::AllConstants)?,
    };
    match k0 {
        Some(k) => {
            let target = m.target.clone().with_k0image(k.clone());
            NTMorphism::new(m.pattern, target)
        }
        None => Ok(m),
    }
}

pub fn load_morphism(p: &Path, k0: Option<&K0Image>) -> Result<NTMorphism> {
    morphism_from_str(&std::fs::read_to_string(p)?, k0).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))
}

/// `id_T` for a circle domain, else the trivial basis.
pub fn default_domain_basis(m: &NTMorphism) -> Result<NTBasis> {
    if m.pattern.domain() == BaseSpace::Circle {
        NTBasis::canonical(1)
    } else {
        Ok(NTBasis::trivial())
    }
}

pub fn default_target_basis(m: &NTMorphism) -> Result<NTBasis> {
    if m.target.base == BaseSpace::Circle {
        NTBasis::canonical(m.target.size)
    } else {
        Ok(NTBasis::trivial())
    }
}

pub fn metric_dcu(a: &NTMorphism, b: &NTMorphism) -> Result<ScenarioReport> {
    let d = d_cu(&a.pattern, &b.pattern)?;
    let mut rep = ScenarioReport::new("metric dcu");
    rep.push("d_cu", None, d.value.clone(), Provenance::Exact);
    if let Some(w) = d.witness {
        rep.witnesses.push(Witness { quantity: "d_cu".into(), y: Some(w.y), pair: Some((w.from, w.to)), ..Default::default() });
    }
    rep.notes.push(format!("method: {:?}", d.method));
    Ok(rep)
}

/// Rotation and diagonalisability of `a`, and the metric to `b` when given.
pub fn metric_frakd(a: &NTMorphism, b: Option<&NTMorphism>, c: Option<NTBasis>, d: Option<NTBasis>) -> Result<ScenarioReport> {
    let c = c.map_or_else(|| default_domain_basis(a), Ok)?;
    let d = d.map_or_else(|| default_target_basis(a), Ok)?;
    let mut rep = ScenarioReport::new("metric frakd");
    if let Some(r) = rotation(a, &c, &d)? {
        let pts: Vec<String> = r.representative.points().iter().map(|(x, y)| format!("({x}, {y})")).collect();
        rep.notes.push(format!("rotation(1) of a has representative with knots {}", pts.join(" ")));
        rep.push("rotation_norm", None, r.norm(), Provenance::Exact);
    }
    let diag = is_diagonalisable(a, &c, &d)?;
    rep.push("diagonalisable", None, Rational::from_int(diag.diagonalisable as i64), Provenance::Exact);
    rep.notes.push(format!(
        "a is {}diagonalisable ({}{})",
        if diag.diagonalisable { "" } else { "not " },
        diag.reason,
        match (diag.all_bases, diag.diagonalisable) {
            (false, _) => "",
            (true, false) => ", for every choice of bases",
            (true, true) => ", which settles it whatever the bases",
        }
    ));
    if let Some(b) = b {
        let fd = frak_d(a, b, &c, &d)?;
        rep.push("frakd_h", None, fd.d_h.clone(), Provenance::Exact);
        rep.push("frakd_r", None, fd.d_r.clone(), Provenance::Exact);
        rep.push("frakd_triv", None, fd.d_triv.clone(), Provenance::Exact);
        rep.push("frakd", None, fd.total.clone(), Provenance::Exact);
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KGroup {
    K1,
    Kbar1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberMetric {
    Triv,
    Frakd,
}

/// Arcs `(j/8, (j+w)/8)` of the domain, as ideals.
pub fn ideal_family(space: BaseSpace) -> Result<Vec<IdealModel>> {
    let mut out = Vec::new();
    for w in 1..8 {
        for j in 0..8 {
            let (lo, hi) = (q(j, 8), q(j + w, 8));
            let u = match space {
                BaseSpace::Circle => OpenSet::arc(lo, hi)?,
                BaseSpace::Interval if hi <= Rational::one() => OpenSet::interval(lo, hi)?,
                _ => continue,
            };
            out.push(IdealModel::new(u));
        }
    }
    Ok(out)
}

pub fn metric_dstar(a: &NTMorphism, b: &NTMorphism, k: KGroup, fm: FiberMetric) -> Result<ScenarioReport> {
    let mut rep = ScenarioReport::new("metric dstar");
    match k {
        KGroup::K1 => {
            let d = d_star_k1(&a.pattern, &b.pattern)?;
            let prov = match d.scope {
                DStarScope::AllOpenSets => Provenance::Exact,
                DStarScope::ArcFamily { .. } => Provenance::ArcFamily,
            };
            rep.push("epsilon0", None, d.epsilon0.clone(), Provenance::Exact);
            rep.push("dstar_k1", None, d.value.clone(), prov);
            if let Some((arc, r)) = &d.witness {
                rep.witnesses.push(Witness { quantity: "dstar_k1".into(), arc: Some(arc.clone()), radius: Some(r.clone()), ..Default::default() });
            }
            if fm == FiberMetric::Frakd {
                rep.notes.push("K1 fibers carry no H-part, so the rotation-map metric on them is the trivial one".into());
            }
        }
        KGroup::Kbar1 => {
            let eps = d_cu(&a.pattern, &b.pattern)?.value;
            rep.push("epsilon0", None, eps, Provenance::Exact);
            let mut best = Ext::zero();
            let mut at = None;
            for ideal in ideal_family(a.pattern.domain())? {
                let lb = lower_bound_check_frakd(&a.pattern, &b.pattern, &ideal, &a.target.k0image)?;
                let v = match fm {
                    FiberMetric::Frakd => lb.value,
                    FiberMetric::Triv => lb.components.iter().map(|c| c.3.clone()).max().unwrap_or_else(Ext::zero),
                };
                if v > best {
                    best = v;
                    at = Some(ideal);
                }
            }
            rep.push("fiber_norm", None, best.clone(), Provenance::LowerBound);
            rep.push("dstar_kbar1_lower", None, best.scale(&q(1, 4)), Provenance::LowerBound);
            if let Some(i) = at {
                let arcs: Vec<String> = i.support.arcs().iter().map(|a| format!("({}, {})", a.lo, a.hi)).collect();
                rep.notes.push(format!("largest fiber norm at the ideal over {}", arcs.join(" ")));
            }
            rep.notes.push("only a lower bound is computed for the K-bar-1 version".into());
        }
    }
    Ok(rep)
}

/// `det_hat` at its knots and midpoints, optionally against the path-integration oracle.
pub fn det_report(u: &UnitaryField, numeric: bool, steps: usize) -> Result<ScenarioReport> {
    let d = det_hat(u);
    let mut rep = ScenarioReport::new("det");
    let knots: Vec<String> = d.points().iter().map(|(x, y)| format!("({x}, {y})")).collect();
    rep.notes.push(format!("det_hat knots: {}", knots.join(" ")));
    let mut ys: Vec<Rational> = d.points().iter().map(|(x, _)| x.clone()).collect();
    let mids: Vec<Rational> = ys.windows(2).map(|w| w[0].mid(&w[1])).collect();
    ys.extend(mids);
    ys.sort();
    let mut worst = 0.0f64;
    for y in &ys {
        let exact = d.eval(y)?;
        rep.push(&format!("det_hat({y})"), None, exact.clone(), Provenance::Exact);
        if numeric {
            let v = numeric_det_at(u, y, steps)?;
            worst = worst.max((v - exact.to_f64()).abs());
        }
    }
    if numeric {
        rep.notes.push(format!("largest oracle deviation {worst:.3e}"));
        rep.check("oracle within 1e-9", worst <= 1e-9, format!("{worst:.3e}"));
    }
    Ok(rep)
}
