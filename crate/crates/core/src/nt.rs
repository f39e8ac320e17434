//! Nielsen–Thomsen bases, rotation maps and the metric on Hausdorffized K1 maps.

use serde::{Deserialize, Serialize};

use crate::algebra::{Block, K0Image, K1Tag, UnitaryField};
use crate::determinant::{det_hat, h_norm, HClass};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::pattern::EigenPattern;
use crate::pl::PLFunction;
use crate::rational::Rational;
use crate::space::BaseSpace;
use crate::traces::h_distance;

/// A basis `k ↦ c_k` with `c_0 = 1` and `c_k` the `k`-fold stack of `c_1` (or its adjoint).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NTBasis {
    pub generator: Option<UnitaryField>,
}

impl NTBasis {
    /// The only basis of an algebra with trivial K1.
    pub fn trivial() -> Self {
        NTBasis { generator: None }
    }

    pub fn new(c1: UnitaryField) -> Result<Self> {
        if c1.space() != BaseSpace::Circle || c1.k1_class() != 1 {
            return Err(Error::Argument(format!("a generator needs K1 class 1, got {}", c1.k1_class())));
        }
        Ok(NTBasis { generator: Some(c1) })
    }

    /// `id_T`, or `diag(id_T, 1, …, 1)` in a block of the given size.
    pub fn canonical(size: u64) -> Result<Self> {
        let mut phases = vec![(PLFunction::identity(BaseSpace::Circle), 1)];
        if size > 1 {
            phases.push((PLFunction::constant(BaseSpace::Circle, Rational::zero()), size - 1));
        }
        Self::new(UnitaryField::from_phases(BaseSpace::Circle, phases)?)
    }

    /// The basis `e^{2iπ p} c_1`, for a phase perturbation `p` on the circle.
    pub fn perturbed(&self, p: &PLFunction) -> Result<Self> {
        let c = self.generator.as_ref().ok_or_else(|| Error::Argument("the trivial basis has no generator".into()))?;
        let shifted: Vec<(PLFunction, u64)> = c
            .entries()
            .iter()
            .enumerate()
            .flat_map(|(i, e)| {
                if i == 0 {
                    let mut v = vec![(e.phase.add(p).expect("same space"), 1)];
                    if e.mult > 1 {
                        v.push((e.phase.clone(), e.mult - 1));
                    }
                    v
                } else {
                    vec![(e.phase.clone(), e.mult)]
                }
            })
            .collect();
        Self::new(UnitaryField::with_size(
            BaseSpace::Circle,
            c.size(),
            shifted.into_iter().map(|(phase, mult)| crate::algebra::PhaseEntry { phase, mult }).collect(),
        )?)
    }

    pub fn is_trivial(&self) -> bool {
        self.generator.is_none()
    }

    /// `c_k`, with the identity of `size` for `k = 0` or the trivial basis.
    pub fn element(&self, k: i64, space: BaseSpace, size: u64) -> Result<UnitaryField> {
        if k == 0 {
            return UnitaryField::identity(space, size);
        }
        let c = self.generator.as_ref().ok_or_else(|| Error::Argument(format!("index {k} outside the trivial K1")))?;
        if c.space() != space || c.size() != size {
            return Err(Error::Argument("basis does not live on this block".into()));
        }
        let base = if k > 0 { c.clone() } else { c.adjoint() };
        let n = k.unsigned_abs();
        UnitaryField::with_size(
            space,
            size,
            base.entries().iter().map(|e| crate::algebra::PhaseEntry { phase: e.phase.clone(), mult: e.mult * n }).collect(),
        )
    }
}

/// The K1 component of a morphism of the models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K1Map {
    Zero,
    Mul(i64),
}

impl K1Map {
    pub fn at(self, k: i64) -> i64 {
        match self {
            K1Map::Zero => 0,
            K1Map::Mul(m) => m * k,
        }
    }
}

/// A unital pattern morphism into one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NTMorphism {
    pub pattern: EigenPattern,
    pub target: Block,
}

impl NTMorphism {
    pub fn new(pattern: EigenPattern, target: Block) -> Result<Self> {
        target.validate()?;
        pattern.codomain().same(target.base)?;
        if pattern.total_mult() != target.size {
            return Err(Error::Argument(format!(
                "pattern of size {} into a block of size {}",
                pattern.total_mult(),
                target.size
            )));
        }
        Ok(NTMorphism { pattern, target })
    }

    /// `f ↦ f(u)` out of `C(T)`.
    pub fn from_unitary(u: &UnitaryField, k0image: K0Image) -> Result<Self> {
        let target = Block::new(u.space(), u.size())?.with_k0image(k0image);
        Self::new(EigenPattern::from_unitary(u)?, target)
    }

    pub fn k1_map(&self) -> K1Map {
        if self.pattern.domain() != BaseSpace::Circle || self.target.k1 == K1Tag::Zero {
            K1Map::Zero
        } else {
            K1Map::Mul(self.pattern.k1_degree())
        }
    }

    fn domain_has_k1(&self) -> bool {
        self.pattern.domain() == BaseSpace::Circle
    }

    fn image(&self, c: &NTBasis) -> Result<UnitaryField> {
        self.pattern.push_unitary(&c.element(1, BaseSpace::Circle, 1.max(c.generator.as_ref().map_or(1, |g| g.size())))?)
    }
}

/// Upper-triangular matrix of the induced map on Hausdorffized K1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NTMatrixRep {
    pub h_part: EigenPattern,
    /// `R(1)`, absent when the domain has trivial K1.
    pub rotation: Option<HClass>,
    pub k1_part: K1Map,
}

/// `R_CD(φ)(1) = Δ̄(diag(φ(c_1), d_m*))`, `m = K1(φ)(1)`.
pub fn rotation(phi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<Option<HClass>> {
    if !phi.domain_has_k1() {
        return Ok(None);
    }
    if c.is_trivial() {
        return Err(Error::Argument("C(T) needs a basis with a generator".into()));
    }
    let img = phi.image(c)?;
    let m = phi.k1_map().at(1);
    let dm = d.element(m, phi.target.base, img.size())?;
    let u = img.diag(&dm.adjoint())?;
    Ok(Some(HClass::new(det_hat(&u), phi.target.k0image.clone())))
}

pub fn nt_matrix(phi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<NTMatrixRep> {
    Ok(NTMatrixRep { h_part: phi.pattern.clone(), rotation: rotation(phi, c, d)?, k1_part: phi.k1_map() })
}

fn same_target(phi: &NTMorphism, psi: &NTMorphism) -> Result<()> {
    phi.pattern.domain().same(psi.pattern.domain())?;
    if phi.target != psi.target {
        return Err(Error::Argument("morphisms land in different blocks".into()));
    }
    Ok(())
}

/// `R_CD(φ)(1) − R_CD(ψ)(1)`.
pub fn relative_rotation(phi: &NTMorphism, psi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<Option<HClass>> {
    same_target(phi, psi)?;
    match (rotation(phi, c, d)?, rotation(psi, c, d)?) {
        (Some(a), Some(b)) => Ok(Some(a.sub(&b)?)),
        _ => Ok(None),
    }
}

/// `Δ̄(diag(φ(c_1), ψ(c_1)*))`, which equals the relative rotation when the K1 maps agree.
pub fn closed_form_rotation(phi: &NTMorphism, psi: &NTMorphism, c: &NTBasis) -> Result<HClass> {
    same_target(phi, psi)?;
    if phi.k1_map() != psi.k1_map() {
        return Err(Error::Argument("the closed form needs equal K1 maps".into()));
    }
    let u = phi.image(c)?.diag(&psi.image(c)?.adjoint())?;
    Ok(HClass::new(det_hat(&u), phi.target.k0image.clone()))
}

/// `φ(h)^ − ψ(h)^` with `ĥ = Δ̂(diag(c_1, c′_1*))`: the change of the relative rotation
/// when `C` is replaced by `C′`.
pub fn basis_change_term(phi: &NTMorphism, psi: &NTMorphism, c: &NTBasis, c2: &NTBasis) -> Result<HClass> {
    same_target(phi, psi)?;
    let (a, b) = match (&c.generator, &c2.generator) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Argument("basis change needs two generators".into())),
    };
    let h = det_hat(&a.diag(&b.adjoint())?);
    let diff = phi.pattern.push_function(&h)?.sub(&psi.pattern.push_function(&h)?)?;
    Ok(HClass::new(diff, phi.target.k0image.clone()))
}

/// `‖R_CD(φ,ψ)(1)‖` over the generator.
pub fn d_r(phi: &NTMorphism, psi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<Rational> {
    Ok(relative_rotation(phi, psi, c, d)?.map_or_else(Rational::zero, |x| h_norm(&x)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrakD {
    pub d_h: Rational,
    pub d_r: Ext,
    pub d_triv: Ext,
    pub total: Ext,
}

impl FrakD {
    /// The same summands with the H-term replaced.
    pub fn with_h(&self, d_h: Rational) -> FrakD {
        let total = Ext::Fin(d_h.clone()) + self.d_r.clone() + self.d_triv.clone();
        FrakD { d_h, d_r: self.d_r.clone(), d_triv: self.d_triv.clone(), total }
    }
}

/// `d(H(φ),H(ψ)) + d_R + d_triv(K1(φ),K1(ψ))`.
pub fn frak_d(phi: &NTMorphism, psi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<FrakD> {
    same_target(phi, psi)?;
    let d_h = h_distance(&phi.pattern, &psi.pattern, &phi.target.k0image)?;
    if phi.k1_map() != psi.k1_map() {
        return Ok(FrakD { d_h, d_r: Ext::Inf, d_triv: Ext::Inf, total: Ext::Inf });
    }
    let dr = d_r(phi, psi, c, d)?;
    let total = Ext::Fin(&d_h + &dr);
    Ok(FrakD { d_h, d_r: Ext::Fin(dr), d_triv: Ext::zero(), total })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagonalisability {
    pub diagonalisable: bool,
    /// True when the answer holds for every choice of bases.
    pub all_bases: bool,
    pub reason: String,
}

/// Whether the rotation vanishes in the given bases, with the structural obstruction for a
/// commutative codomain: there `R = 0` forces `c_1∘u` to be a scalar, so `c_1` is constant on the
/// spectrum of `u`; when that spectrum is all of T this contradicts `[c_1] = 1`.
pub fn is_diagonalisable(phi: &NTMorphism, c: &NTBasis, d: &NTBasis) -> Result<Diagonalisability> {
    let Some(r) = rotation(phi, c, d)? else {
        return Ok(Diagonalisability {
            diagonalisable: true,
            all_bases: true,
            reason: "the domain has trivial K1".into(),
        });
    };
    let full_circle = phi.pattern.lifts().iter().any(|l| {
        let (lo, hi) = l.range();
        &hi - &lo >= Rational::one()
    });
    if phi.target.size == 1 && phi.target.k1 == K1Tag::Zero && full_circle {
        return Ok(Diagonalisability {
            diagonalisable: false,
            all_bases: true,
            reason: "commutative codomain: a vanishing rotation forces c1(u) to be a scalar, and u has full spectrum, so c1 is constant, which has K1 class 0".into(),
        });
    }
    let zero = r.is_zero();
    Ok(Diagonalisability {
        diagonalisable: zero,
        all_bases: zero,
        reason: if zero { "rotation vanishes in the given bases".into() } else { "rotation is nonzero in the given bases".into() },
    })
}

/// First perturbation `p` (in order) for which `e^{2iπp}c_1` diagonalises `φ`.
pub fn search_diagonalising(phi: &NTMorphism, c: &NTBasis, d: &NTBasis, family: &[PLFunction]) -> Result<Option<usize>> {
    for (i, p) in family.iter().enumerate() {
        let c2 = c.perturbed(p)?;
        if rotation(phi, &c2, d)?.map_or(true, |r| r.is_zero()) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{novel_u, novel_v, robert_u};
    use crate::rational::{q, qi};

    fn exp_u() -> UnitaryField {
        UnitaryField::from_phases(BaseSpace::Interval, [(PLFunction::identity(BaseSpace::Interval), 1)]).unwrap()
    }

    #[test]
    fn non_diagonalisable_example() {
        let phi = NTMorphism::from_unitary(&exp_u(), K0Image::LatticeConstants(qi(1))).unwrap();
        let c = NTBasis::canonical(1).unwrap();
        let m = nt_matrix(&phi, &c, &NTBasis::trivial()).unwrap();
        let r = m.rotation.unwrap();
        assert_eq!(r.representative, PLFunction::identity(BaseSpace::Interval));
        assert_eq!(m.k1_part, K1Map::Zero);
        let diag = is_diagonalisable(&phi, &c, &NTBasis::trivial()).unwrap();
        assert!(!diag.diagonalisable && diag.all_bases);
    }

    #[test]
    fn identity_is_diagonal() {
        let id = EigenPattern::from_unitary(&UnitaryField::from_phases(BaseSpace::Circle, [(PLFunction::identity(BaseSpace::Circle), 1)]).unwrap()).unwrap();
        let phi = NTMorphism::new(id, Block::new(BaseSpace::Circle, 1).unwrap()).unwrap();
        let c = NTBasis::canonical(1).unwrap();
        let m = nt_matrix(&phi, &c, &c).unwrap();
        assert_eq!(m.k1_part, K1Map::Mul(1));
        assert!(m.rotation.unwrap().is_zero());
        assert!(is_diagonalisable(&phi, &c, &c).unwrap().diagonalisable);
    }

    #[test]
    fn robert_pairs() {
        let c = NTBasis::canonical(1).unwrap();
        let d = NTBasis::trivial();
        for (k, l) in [(0, 1), (3, 7), (2, 2)] {
            let a = NTMorphism::from_unitary(&robert_u(k, 3).unwrap(), K0Image::AllConstants).unwrap();
            let b = NTMorphism::from_unitary(&robert_u(l, 3).unwrap(), K0Image::AllConstants).unwrap();
            assert_eq!(d_r(&a, &b, &c, &d).unwrap(), q((k - l).abs(), 2));
            let rr = relative_rotation(&a, &b, &c, &d).unwrap().unwrap();
            assert_eq!(rr.representative, PLFunction::linear(BaseSpace::Interval, qi(k - l), qi(0)).unwrap());
            assert_eq!(closed_form_rotation(&a, &b, &c).unwrap().representative, rr.representative);
        }
    }

    #[test]
    fn novel_rotation_vanishes() {
        let c = NTBasis::canonical(1).unwrap();
        let a = NTMorphism::from_unitary(&novel_u(3).unwrap(), K0Image::AllConstants).unwrap();
        let b = NTMorphism::from_unitary(&novel_v(3).unwrap(), K0Image::AllConstants).unwrap();
        assert_eq!(d_r(&a, &b, &c, &NTBasis::trivial()).unwrap(), qi(0));
    }

    #[test]
    fn basis_change_identity() {
        let c = NTBasis::canonical(1).unwrap();
        let p = PLFunction::new(BaseSpace::Circle, vec![(qi(0), qi(0)), (q(1, 3), q(1, 4)), (qi(1), qi(0))]).unwrap();
        let c2 = c.perturbed(&p).unwrap();
        let d = NTBasis::trivial();
        let a = NTMorphism::from_unitary(&robert_u(1, 2).unwrap(), K0Image::AllConstants).unwrap();
        let b = NTMorphism::from_unitary(&novel_u(2).unwrap(), K0Image::AllConstants).unwrap();
        let lhs = relative_rotation(&a, &b, &c, &d).unwrap().unwrap().sub(&relative_rotation(&a, &b, &c2, &d).unwrap().unwrap()).unwrap();
        let rhs = basis_change_term(&a, &b, &c, &c2).unwrap();
        assert!(lhs.same_class(&rhs).unwrap());
        assert_eq!(lhs.representative, rhs.representative);
    }
}
