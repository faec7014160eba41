//! Moment tensors of random fields on a finite grid.

mod carleman;
mod checks;
mod grid;
mod tensor;

pub use carleman::{determining_bound, weighted_carleman_field, DeterminingBound, FieldCarlemanReport, FieldOrderTerm, FieldSeriesVariant};
pub use checks::{
    check_bounded_density, check_radon, generalized_moment_matrix, sliced_density_psd, words, FieldCheckReport, PhiReport,
    SliceVariant, SLICE_MAX_ROWS,
};
pub use grid::{default_phi_samples, Grid, GridMeasure, PhiSample, TestFunction};
pub use tensor::{field_shift, FieldPolynomial, MomentTensorSeq, Representation, DENSE_LIMIT};
