//! Quasi-analyticity of positive sequences: log-convex regularization, the
//! Denjoy-Carleman series, a finite-sample classifier and the dominating
//! summable sequence construction.

mod classify;
mod dominate;
mod hull;
mod sequence;

pub use classify::{
    bump_derivative_bounds, classify, dj_carleman_sums, subsequence_class, BumpToken, DjSums, QaClass, QaEvidence,
    QaVerdict, Thresholds, MIN_CLASSIFY_TERMS,
};
pub(crate) use classify::classify_ln;
pub use dominate::{dominating_summable_sequence, hurwitz_zeta, DominatingSequence, SummableSequence};
pub use hull::{log_convex_regularize, log_convexity_defect, lower_envelope, lower_hull_vertices, regularization_vertices};
pub use sequence::{NamedRule, PositiveSequence, Rule};

/// Termwise `δ · M_n`.
pub fn scale<T: crate::Scalar>(m: &PositiveSequence<T>, delta: T) -> crate::Result<PositiveSequence<T>> {
    m.scale(delta)
}
