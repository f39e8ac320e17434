//! De la Harpe–Skandalis determinants of diagonal unitaries and H-classes.

use serde::{Deserialize, Serialize};

use crate::algebra::{Block, K0Image, UnitaryField};
use crate::error::{Error, Result};
use crate::pl::PLFunction;
use crate::rational::Rational;

/// A class in `Aff T / K0-image`, kept as a representative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HClass {
    pub representative: PLFunction,
    pub k0image: K0Image,
}

impl HClass {
    pub fn new(representative: PLFunction, k0image: K0Image) -> Self {
        HClass { representative, k0image }
    }

    fn check(&self, o: &HClass) -> Result<()> {
        if self.k0image != o.k0image {
            return Err(Error::Argument("H-classes over different K0 images".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &HClass) -> Result<HClass> {
        self.check(o)?;
        Ok(HClass::new(self.representative.add(&o.representative)?, self.k0image.clone()))
    }

    pub fn sub(&self, o: &HClass) -> Result<HClass> {
        self.check(o)?;
        Ok(HClass::new(self.representative.sub(&o.representative)?, self.k0image.clone()))
    }

    pub fn neg(&self) -> HClass {
        HClass::new(self.representative.negate(), self.k0image.clone())
    }

    pub fn norm(&self) -> Rational {
        h_norm(self)
    }

    pub fn is_zero(&self) -> bool {
        self.norm().is_zero()
    }

    /// Equality of classes, i.e. the difference lies in the K0 image.
    pub fn same_class(&self, o: &HClass) -> Result<bool> {
        Ok(self.sub(o)?.is_zero())
    }
}

/// `Δ̂(u)`: the phase mean along the straight path `s ↦ e^{2iπ s h}`.
pub fn det_hat(u: &UnitaryField) -> PLFunction {
    u.normalized_trace()
}

/// `Δ̄(u)` in `H` of the block carrying `u`.
pub fn det_bar(u: &UnitaryField, block: &Block) -> Result<HClass> {
    block.base.same(u.space())?;
    if u.size() != block.size {
        return Err(Error::Argument(format!("unitary of size {} over a block of size {}", u.size(), block.size)));
    }
    Ok(HClass::new(det_hat(u), block.k0image.clone()))
}

/// Quotient norm of an H-class.
pub fn h_norm(x: &HClass) -> Rational {
    x.k0image.quotient_norm(&x.representative)
}

/// One sample of a diagonal path: the parameter and the diagonal entries as `(re, im)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub s: f64,
    pub values: Vec<(f64, f64)>,
}

const UNIT_TOL: f64 = 1e-9;

/// `(1/2iπ) ∫ Tr(ξ′ξ⁻¹) ds / size` by summing the principal arguments of consecutive
/// ratios, entry by entry with multiplicity weights.
pub fn numeric_det_oracle(rows: &[PathRow], weights: &[u64], size: u64) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::Numeric("a path needs at least two samples".into()));
    }
    let width = weights.len();
    for r in rows {
        if r.values.len() != width {
            return Err(Error::Numeric(format!("row at s = {} has {} entries, expected {width}", r.s, r.values.len())));
        }
        for (re, im) in &r.values {
            if ((re * re + im * im).sqrt() - 1.0).abs() > UNIT_TOL {
                return Err(Error::Numeric(format!("non-unitary sample {re}+{im}i at s = {}", r.s)));
            }
        }
    }
    let mut total = 0.0;
    for (j, w) in weights.iter().enumerate() {
        let mut acc = 0.0;
        for pair in rows.windows(2) {
            let (a, b) = (pair[0].values[j], pair[1].values[j]);
            // arg(b · conj(a))
            let re = b.0 * a.0 + b.1 * a.1;
            let im = b.1 * a.0 - b.0 * a.1;
            acc += im.atan2(re);
        }
        total += *w as f64 * acc / (2.0 * std::f64::consts::PI);
    }
    Ok(total / size as f64)
}

/// Samples the straight path of `u` at `y`; the step count grows with the largest phase
/// so that no step turns by half a circle.
pub fn sample_path(u: &UnitaryField, y: &Rational, steps: usize) -> (Vec<PathRow>, Vec<u64>) {
    let phases: Vec<f64> = u.entries().iter().map(|e| e.phase.eval_lifted(y).to_f64()).collect();
    let top = phases.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let steps = steps.max((4.0 * top).ceil() as usize);
    let tau = 2.0 * std::f64::consts::PI;
    let rows = (0..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64;
            let values = phases.iter().map(|h| ((tau * s * h).cos(), (tau * s * h).sin())).collect();
            PathRow { s, values }
        })
        .collect();
    (rows, u.entries().iter().map(|e| e.mult).collect())
}

/// The oracle value of `Δ̂(u)(y)`.
pub fn numeric_det_at(u: &UnitaryField, y: &Rational, steps: usize) -> Result<f64> {
    let (rows, w) = sample_path(u, y, steps);
    numeric_det_oracle(&rows, &w, u.size())
}
