//! Weak-form market efficiency audit.
//!
//! The crate turns adjusted-close price files into log-returns, runs two
//! flavours of the runs test and the heteroskedasticity-robust variance-ratio
//! test (with the Chow–Denning joint bound), plans a two-layer stratified
//! sample, rules on each stock, and estimates the proportion of inefficient
//! stocks with finite-population-corrected intervals. A Monte Carlo harness
//! measures the empirical size of every test on simulated random series.
//!
//! The statistical kernels are generic over [`Real`] (`f32` or `f64`).
//! Ingestion, the verdict pipeline and the simulation harness work in `f64`;
//! the `*F64` / `*F32` aliases below name the concrete instantiations.

// `!(x > 0)` style checks are used on purpose so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod monte_carlo;
pub mod normal;
pub mod pipeline;
pub mod report;
pub mod runs;
pub mod sampling;
pub mod series;
pub mod variance_ratio;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub use error::{Error, Result};

/// Floating-point scalar accepted by the statistical kernels.
pub trait Real: Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of)
    /// any finite `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type RunsTestResultF64 = runs::RunsTestResult<f64>;
pub type RunsTestResultF32 = runs::RunsTestResult<f32>;
pub type LengthTestF64 = runs::LengthTest<f64>;
pub type LogPricePathF64 = variance_ratio::LogPricePath<f64>;
pub type LogPricePathF32 = variance_ratio::LogPricePath<f32>;
pub type VrResultF64 = variance_ratio::VrResult<f64>;
pub type VrResultF32 = variance_ratio::VrResult<f32>;
pub type JointVrResultF64 = variance_ratio::JointVrResult<f64>;
pub type JointVrResultF32 = variance_ratio::JointVrResult<f32>;
pub type ProportionIntervalF64 = sampling::ProportionInterval<f64>;
pub type ProportionIntervalF32 = sampling::ProportionInterval<f32>;
