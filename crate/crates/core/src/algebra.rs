//! Finite-stage model algebras and diagonal fields over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pl::PLFunction;
use crate::rational::{q, qi, Rational};
use crate::space::BaseSpace;

/// Closure of the trace image of K0 inside the constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K0Image {
    AllConstants,
    LatticeConstants(Rational),
    Zero,
}

impl K0Image {
    pub fn lattice(step: Rational) -> Result<Self> {
        if !step.is_positive() {
            return Err(Error::Argument(format!("lattice step {step} must be positive")));
        }
        Ok(K0Image::LatticeConstants(step))
    }

    /// Quotient norm of the class of `f`.
    pub fn quotient_norm(&self, f: &PLFunction) -> Rational {
        let (lo, hi) = f.range();
        match self {
            K0Image::AllConstants => (hi - lo) / qi(2),
            K0Image::Zero => lo.abs().max(hi.abs()),
            K0Image::LatticeConstants(c) => {
                let mid = lo.mid(&hi);
                let k = (&mid / c).floor();
                [k.clone(), k + qi(1)]
                    .iter()
                    .map(|k| {
                        let p = k * c;
                        (&hi - &p).max(&p - &lo)
                    })
                    .min()
                    .expect("two candidates")
            }
        }
    }

    /// Distance from a real number to the image (inside the constants).
    pub fn dist_const(&self, x: &Rational) -> Rational {
        match self {
            K0Image::AllConstants => Rational::zero(),
            K0Image::Zero => x.abs(),
            K0Image::LatticeConstants(c) => {
                let r = (x / c).fract() * c;
                r.clone().min(c - &r)
            }
        }
    }

    pub fn contains(&self, f: &PLFunction) -> bool {
        self.quotient_norm(f).is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum K1Tag {
    Zero,
    Z,
}

/// `M_size(C(base))` with its K-theoretic tags.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub base: BaseSpace,
    pub size: u64,
    pub k1: K1Tag,
    pub k0image: K0Image,
}

impl Block {
    /// Standard tags: K1 from the base, K0 image `(1/size)Z`.
    pub fn new(base: BaseSpace, size: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("block size must be positive".into()));
        }
        let k1 = if base == BaseSpace::Circle { K1Tag::Z } else { K1Tag::Zero };
        Ok(Block { base, size, k1, k0image: K0Image::LatticeConstants(q(1, size as i64)) })
    }

    pub fn with_k0image(mut self, k: K0Image) -> Self {
        self.k0image = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let want = if self.base == BaseSpace::Circle { K1Tag::Z } else { K1Tag::Zero };
        if self.k1 != want {
            return Err(Error::Argument(format!("a {:?} block has K1 tag {:?}", self.base, want)));
        }
        if self.size == 0 {
            return Err(Error::Argument("block size must be positive".into()));
        }
        if let K0Image::LatticeConstants(c) = &self.k0image {
            if !c.is_positive() {
                return Err(Error::Argument("lattice step must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelAlgebra {
    pub blocks: Vec<Block>,
}

impl ModelAlgebra {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        blocks.iter().try_for_each(Block::validate)?;
        Ok(ModelAlgebra { blocks })
    }

    pub fn direct_sum(parts: &[&ModelAlgebra]) -> Self {
        ModelAlgebra { blocks: parts.iter().flat_map(|a| a.blocks.iter().cloned()).collect() }
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    /// Trace weights of the blocks (proportional to size).
    pub fn weights(&self) -> Vec<Rational> {
        let total: u64 = self.sizes().iter().sum();
        self.blocks.iter().map(|b| q(b.size as i64, total as i64)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub phase: PLFunction,
    pub mult: u64,
}

/// A diagonal unitary `diag(e^{2πi phase})` with multiplicities.
///
/// `size` is the block size `N` of the algebra the field lives over; the
/// total multiplicity is a multiple `m·N` (an element of `M_m` over the block).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct UnitaryField {
    space: BaseSpace,
    size: u64,
    entries: Vec<PhaseEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    space: BaseSpace,
    #[serde(default)]
    size: Option<u64>,
    entries: Vec<PhaseEntry>,
}

impl TryFrom<RawField> for UnitaryField {
    type Error = Error;
    fn try_from(r: RawField) -> Result<Self> {
        let total: u64 = r.entries.iter().map(|e| e.mult).sum();
        UnitaryField::with_size(r.space, r.size.unwrap_or(total), r.entries)
    }
}

impl From<UnitaryField> for RawField {
    fn from(u: UnitaryField) -> Self {
        RawField { space: u.space, size: Some(u.size), entries: u.entries }
    }
}

fn check_entries<'a>(space: BaseSpace, it: impl Iterator<Item = (&'a PLFunction, u64)>) -> Result<u64> {
    let mut total = 0u64;
    for (f, m) in it {
        space.same(f.space())?;
        if m == 0 {
            return Err(Error::Argument("multiplicities must be positive".into()));
        }
        total = total.checked_add(m).ok_or_else(|| Error::Budget("multiplicity overflow".into()))?;
    }
    if total == 0 {
        return Err(Error::Argument("a field needs at least one entry".into()));
    }
    Ok(total)
}

impl UnitaryField {
    /// Field whose total multiplicity is its block size.
    pub fn new(space: BaseSpace, entries: Vec<PhaseEntry>) -> Result<Self> {
        let total = check_entries(space, entries.iter().map(|e| (&e.phase, e.mult)))?;
        Ok(UnitaryField { space, size: total, entries })
    }

    pub fn with_size(space: BaseSpace, size: u64, entries: Vec<PhaseEntry>) -> Result<Self> {
        let total = check_entries(space, entries.iter().map(|e| (&e.phase, e.mult)))?;
        if size == 0 || total % size != 0 {
            return Err(Error::Argument(format!("total multiplicity {total} is not a multiple of size {size}")));
        }
        Ok(UnitaryField { space, size, entries })
    }

    pub fn from_phases(space: BaseSpace, phases: impl IntoIterator<Item = (PLFunction, u64)>) -> Result<Self> {
        Self::new(space, phases.into_iter().map(|(phase, mult)| PhaseEntry { phase, mult }).collect())
    }

    pub fn identity(space: BaseSpace, size: u64) -> Result<Self> {
        Self::from_phases(space, [(PLFunction::constant(space, Rational::zero()), size)])
    }

    pub fn space(&self) -> BaseSpace {
        self.space
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn entries(&self) -> &[PhaseEntry] {
        &self.entries
    }

    pub fn total_mult(&self) -> u64 {
        self.entries.iter().map(|e| e.mult).sum()
    }

    /// K1 class: total signed winding (zero off the circle).
    pub fn k1_class(&self) -> i64 {
        self.entries.iter().map(|e| e.phase.winding() * e.mult as i64).sum()
    }

    pub fn adjoint(&self) -> Self {
        self.map_phases(|p| p.negate())
    }

    /// `e^{2πic}·u`.
    pub fn rotate(&self, c: &Rational) -> Self {
        self.map_phases(|p| p.add_const(c))
    }

    pub fn map_phases(&self, f: impl Fn(&PLFunction) -> PLFunction) -> Self {
        let entries = self.entries.iter().map(|e| PhaseEntry { phase: f(&e.phase), mult: e.mult }).collect();
        UnitaryField { space: self.space, size: self.size, entries }
    }

    /// `diag(u, v)` over the same block (a larger matrix amplification).
    pub fn diag(&self, other: &UnitaryField) -> Result<Self> {
        self.space.same(other.space)?;
        if self.size != other.size {
            return Err(Error::Argument(format!("diag of fields over blocks of size {} and {}", self.size, other.size)));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(UnitaryField { space: self.space, size: self.size, entries })
    }

    /// Direct sum into the block `M_{N+M}`.
    pub fn direct_sum(&self, other: &UnitaryField) -> Result<Self> {
        self.space.same(other.space)?;
        if self.total_mult() != self.size || other.total_mult() != other.size {
            return Err(Error::Argument("direct sums need fields filling their blocks".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Ok(UnitaryField { space: self.space, size: self.size + other.size, entries })
    }

    /// `(Σ mult·phase) / size`.
    pub fn normalized_trace(&self) -> PLFunction {
        weighted_mean(self.space, self.size, self.entries.iter().map(|e| (&e.phase, e.mult)))
    }

    /// Closed arcs of the circle swept by the phases.
    pub fn spectrum(&self) -> Spectrum {
        Spectrum::from_ranges(self.entries.iter().map(|e| e.phase.range()))
    }
}

fn weighted_mean<'a>(space: BaseSpace, size: u64, it: impl Iterator<Item = (&'a PLFunction, u64)>) -> PLFunction {
    let inv = q(1, size as i64);
    let terms: Vec<(&PLFunction, Rational)> = it.map(|(f, m)| (f, qi(m as i64) * &inv)).collect();
    PLFunction::sum(space, terms).expect("entries share the field's space")
}

/// A union of closed arcs of `R/Z`, stored as lifted `[lo, hi]` with `lo` in `[0,1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Spectrum {
    pub full: bool,
    pub arcs: Vec<(Rational, Rational)>,
}

impl Spectrum {
    pub fn from_ranges(ranges: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        let mut arcs: Vec<(Rational, Rational)> = Vec::new();
        for (lo, hi) in ranges {
            if &hi - &lo >= qi(1) {
                return Spectrum { full: true, arcs: Vec::new() };
            }
            let s = lo.floor();
            arcs.push((&lo - &s, &hi - &s));
        }
        arcs.sort();
        let mut out: Vec<(Rational, Rational)> = Vec::new();
        for (lo, hi) in arcs {
            match out.last_mut() {
                Some(last) if lo <= last.1 => {
                    if hi > last.1 {
                        last.1 = hi;
                    }
                }
                _ => out.push((lo, hi)),
            }
        }
        // arcs that run past 1 may swallow arcs near 0
        while out.len() > 1 {
            let end = &out[out.len() - 1].1 - qi(1);
            if out[0].0 > end {
                break;
            }
            let first = out.remove(0);
            let last = out.last_mut().expect("nonempty");
            let fh = &first.1 + qi(1);
            if fh > last.1 {
                last.1 = fh;
            }
        }
        if let Some(last) = out.last() {
            if &last.1 - &out[0].0 >= qi(1) {
                return Spectrum { full: true, arcs: Vec::new() };
            }
        }
        Spectrum { full: false, arcs: out }
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.full
            || self.arcs.iter().any(|(lo, hi)| {
                let y = lo + (x - lo).fract();
                y <= *hi
            })
    }

    pub fn rotate(&self, c: &Rational) -> Self {
        if self.full {
            return self.clone();
        }
        Spectrum::from_ranges(self.arcs.iter().map(|(lo, hi)| (lo + c, hi + c)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositiveEntry {
    pub value: PLFunction,
    pub mult: u64,
}

/// A diagonal positive element with multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPositive", into = "RawPositive")]
pub struct PositiveField {
    space: BaseSpace,
    entries: Vec<PositiveEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawPositive {
    space: BaseSpace,
    entries: Vec<PositiveEntry>,
}

impl TryFrom<RawPositive> for PositiveField {
    type Error = Error;
    fn try_from(r: RawPositive) -> Result<Self> {
        PositiveField::new(r.space, r.entries)
    }
}

impl From<PositiveField> for RawPositive {
    fn from(p: PositiveField) -> Self {
        RawPositive { space: p.space, entries: p.entries }
    }
}

impl PositiveField {
    pub fn new(space: BaseSpace, entries: Vec<PositiveEntry>) -> Result<Self> {
        check_entries(space, entries.iter().map(|e| (&e.value, e.mult)))?;
        for e in &entries {
            if e.value.range().0.is_negative() {
                return Err(Error::Argument("positive field with a negative value".into()));
            }
            if space == BaseSpace::Circle && e.value.winding() != 0 {
                return Err(Error::Argument("a positive value on the circle cannot wind".into()));
            }
        }
        Ok(PositiveField { space, entries })
    }

    pub fn from_values(space: BaseSpace, values: impl IntoIterator<Item = (PLFunction, u64)>) -> Result<Self> {
        Self::new(space, values.into_iter().map(|(value, mult)| PositiveEntry { value, mult }).collect())
    }

    pub fn space(&self) -> BaseSpace {
        self.space
    }

    pub fn entries(&self) -> &[PositiveEntry] {
        &self.entries
    }

    pub fn total_mult(&self) -> u64 {
        self.entries.iter().map(|e| e.mult).sum()
    }

    pub fn norm(&self) -> Rational {
        self.entries.iter().map(|e| e.value.range().1).max().expect("nonempty")
    }

    pub fn normalized_trace(&self) -> PLFunction {
        weighted_mean(self.space, self.total_mult(), self.entries.iter().map(|e| (&e.value, e.mult)))
    }
}

/// The tent `f` of the novel example: `(0,0), (1/2,1/4), (1,0)`.
pub fn novel_f() -> PLFunction {
    PLFunction::new(BaseSpace::Interval, vec![(qi(0), qi(0)), (q(1, 2), q(1, 4)), (qi(1), qi(0))]).expect("valid")
}

/// The double tent `g`: zero at 0, 1/2, 1 and 1/4 at 1/4, 3/4.
pub fn novel_g() -> PLFunction {
    PLFunction::new(
        BaseSpace::Interval,
        vec![(qi(0), qi(0)), (q(1, 4), q(1, 4)), (q(1, 2), qi(0)), (q(3, 4), q(1, 4)), (qi(1), qi(0))],
    )
    .expect("valid")
}

fn pow2(n: u32) -> Result<i64> {
    if n > 40 {
        return Err(Error::Budget(format!("stage {n} is too large")));
    }
    Ok(1i64 << n)
}

/// `w_n = diag(e^{2πi j/2^n})`, `j = 0..2^n`.
pub fn robert_w(n: u32) -> Result<UnitaryField> {
    let m = pow2(n)?;
    UnitaryField::from_phases(
        BaseSpace::Interval,
        (0..m).map(|j| (PLFunction::constant(BaseSpace::Interval, q(j, m)), 1)),
    )
}

/// `u_{k,n} = e^{2πikt} ⊗ w_n`.
pub fn robert_u(k: i64, n: u32) -> Result<UnitaryField> {
    let m = pow2(n)?;
    let phases = (0..m).map(|j| (PLFunction::linear(BaseSpace::Interval, qi(k), q(j, m)).expect("linear"), 1));
    UnitaryField::from_phases(BaseSpace::Interval, phases)
}

/// Phases `k/2^{n+1}`, `k = 1..2^{n-1}`.
pub fn novel_lambdas(n: u32) -> Result<Vec<Rational>> {
    if n < 1 {
        return Err(Error::Argument("the novel example starts at stage 1".into()));
    }
    let half = pow2(n - 1)?;
    let den = pow2(n + 1)?;
    Ok((1..half).map(|k| q(k, den)).collect())
}

/// `u_n` of the novel example.
pub fn novel_u(n: u32) -> Result<UnitaryField> {
    let lam = novel_lambdas(n)?;
    let c = |v: &Rational| PLFunction::constant(BaseSpace::Interval, v.clone());
    let half = q(1, 2);
    let mut phases = vec![(novel_f(), 1)];
    phases.extend(lam.iter().map(|l| (c(l), 1)));
    phases.push((novel_g().add_const(&half), 1));
    phases.extend(lam.iter().map(|l| (c(&(l + &half)), 1)));
    UnitaryField::from_phases(BaseSpace::Interval, phases)
}

/// `v_n = e^{iπ}u_n`.
pub fn novel_v(n: u32) -> Result<UnitaryField> {
    Ok(novel_u(n)?.rotate(&q(1, 2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_of_identity_is_zero() {
        let u = UnitaryField::identity(BaseSpace::Interval, 3).unwrap();
        assert_eq!(u.normalized_trace(), PLFunction::constant(BaseSpace::Interval, qi(0)));
    }

    #[test]
    fn robert_traces() {
        for n in 1..6 {
            let m = 1i64 << n;
            let c = q(m - 1, 2 * m);
            assert_eq!(robert_w(n).unwrap().normalized_trace(), PLFunction::constant(BaseSpace::Interval, c.clone()));
            let t = robert_u(3, n).unwrap().normalized_trace();
            assert_eq!(t, PLFunction::linear(BaseSpace::Interval, qi(3), c).unwrap());
        }
    }

    #[test]
    fn novel_spectrum() {
        for n in 2..7 {
            let u = novel_u(n).unwrap();
            assert_eq!(u.total_mult(), 1 << n);
            let s = u.spectrum();
            assert_eq!(s.arcs, vec![(qi(0), q(1, 4)), (q(1, 2), q(3, 4))]);
            assert_eq!(novel_v(n).unwrap().spectrum(), s.rotate(&q(1, 2)));
            assert_eq!(s.rotate(&q(1, 2)), s);
        }
    }

    #[test]
    fn winding_spectrum_is_full() {
        let u = UnitaryField::from_phases(BaseSpace::Interval, [(PLFunction::identity(BaseSpace::Interval), 1)]).unwrap();
        assert!(u.spectrum().full);
        let c = UnitaryField::from_phases(BaseSpace::Interval, [(PLFunction::constant(BaseSpace::Interval, q(1, 3)), 1)])
            .unwrap();
        assert_eq!(c.spectrum().arcs, vec![(q(1, 3), q(1, 3))]);
    }

    #[test]
    fn block_sizes_sum() {
        let a = ModelAlgebra::new(vec![Block::new(BaseSpace::Interval, 4).unwrap()]).unwrap();
        let b = ModelAlgebra::new(vec![Block::new(BaseSpace::Circle, 4).unwrap()]).unwrap();
        let s = ModelAlgebra::direct_sum(&[&a, &b, &ModelAlgebra::default()]);
        assert_eq!(s.sizes(), vec![4, 4]);
        assert_eq!(s.weights(), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn trace_linear_over_direct_sum() {
        let u = robert_u(2, 2).unwrap();
        let v = novel_u(3).unwrap();
        let s = u.direct_sum(&v).unwrap();
        let expect = u.normalized_trace().scale(&q(4, 12)).add(&v.normalized_trace().scale(&q(8, 12))).unwrap();
        assert_eq!(s.normalized_trace(), expect);
    }

    #[test]
    fn splitting_multiplicity_changes_nothing() {
        let f = novel_f();
        let a = UnitaryField::from_phases(BaseSpace::Interval, [(f.clone(), 3)]).unwrap();
        let b = UnitaryField::from_phases(BaseSpace::Interval, [(f.clone(), 1), (f.clone(), 1), (f, 1)]).unwrap();
        assert_eq!(a.normalized_trace(), b.normalized_trace());
        assert_eq!(a.spectrum(), b.spectrum());
    }

    #[test]
    fn quotient_norms() {
        let id = PLFunction::identity(BaseSpace::Interval);
        assert_eq!(K0Image::AllConstants.quotient_norm(&id.scale(&qi(3))), q(3, 2));
        assert_eq!(K0Image::LatticeConstants(q(1, 4)).quotient_norm(&id.scale(&q(1, 8))), q(1, 8));
        assert_eq!(K0Image::LatticeConstants(qi(1)).quotient_norm(&id), qi(1));
        assert_eq!(K0Image::Zero.quotient_norm(&id.add_const(&qi(-2))), qi(2));
        let d = novel_f().sub(&novel_g()).unwrap().scale(&qi(4));
        assert_eq!(K0Image::AllConstants.quotient_norm(&d), q(3, 4));
    }
}
