//! Chebyshev-basis polynomials and certified even step filters.

pub mod filter;
pub mod series;

pub use filter::{
    certify_filter, heaviside_filter, heaviside_filter_at_degree, ConditionReport, FilterDesign,
    FilterReport, FilterSpec, DEGREE_CAP, FILTER_MARGIN,
};
pub use series::{cheb_eval, ChebyshevSeries, Parity};
