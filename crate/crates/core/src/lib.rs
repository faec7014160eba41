//! Certificates and determinacy checks for truncated moment problems, in
//! finite dimension and for moment tensors of random grid measures.
//!
//! Everything numeric is generic over [`Scalar`] (or the weaker [`Ring`]
//! where only exact arithmetic is needed); the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod oracle;
pub mod poly;
pub mod quasi;
pub mod scalar;
pub mod sobolev;
pub mod weight;

pub use error::{Error, Result};
pub use scalar::{Ring, Scalar};

pub type Moments = moments::MomentSequence<f64>;
pub type Poly = poly::Polynomial<f64>;
pub type Spec = moments::SemiAlgebraicSpec<f64>;
pub type Sequence = quasi::PositiveSequence<f64>;
pub type Tensors = field::MomentTensorSeq<f64>;
pub type Measure = field::GridMeasure<f64>;
pub type Phi = field::TestFunction<f64>;
pub type FieldPoly = field::FieldPolynomial<f64>;
pub type Sampled = sobolev::SampledFunction<f64>;
pub type Ensemble = oracle::AtomicEnsemble<f64>;
