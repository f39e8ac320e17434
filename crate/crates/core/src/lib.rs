//! Exact invariants and metrics for *-homomorphisms between model C*-algebras
//! over a point, `[0,1]` and the circle.

pub mod algebra;
pub mod cli;
pub mod dcu;
pub mod determinant;
pub mod error;
pub mod ext;
pub mod lsc;
pub mod nt;
pub mod openset;
pub mod oracle;
pub mod pattern;
pub mod pl;
pub mod rational;
pub mod refined;
pub mod report;
pub mod scenarios;
pub mod space;
pub mod traces;

pub use algebra::{Block, K0Image, K1Tag, ModelAlgebra, PositiveField, UnitaryField};
pub use dcu::{d_cu, DcuResult};
pub use error::{Error, Result};
pub use ext::Ext;
pub use lsc::{LscFunction, NBar};
pub use openset::{Arc, OpenSet};
pub use pattern::{EigenPattern, PatternEntry, PatternMap};
pub use pl::PLFunction;
pub use rational::{q, qi, Rational};
pub use space::BaseSpace;
