//! Fractional integral operators associated to `n`-dimensional measures.
//!
//! A measure on a metric space is `n`-dimensional when every ball satisfies
//! `μ(B(x, r)) ≤ C rⁿ`; no doubling condition is assumed. This crate works with
//! finite atomic quadratures of such measures and provides:
//!
//! - [`measure`]: metric spaces, balls, atomic measures, generators
//!   ([`generate`]), JSON ingestion ([`io`]) and growth-constant estimation
//!   ([`growth`]).
//! - [`kernels`]: fractional kernels of order `α` and regularity `ε`, with
//!   empirical validators for the size and regularity conditions.
//! - [`operators`]: quadrature evaluation of `I_α`, `K_α`, the basepoint
//!   renormalized `K̃_α`, the RBMO-adapted `K̄_α`, and the subtracted
//!   oscillation form.
//! - [`norms`] and [`rbmo`]: `Lᵖ`, weak `L^q`, `Lip(β)` and RBMO functionals
//!   over ball families ([`family`]).
//! - [`verify`]: one check per mapping theorem, producing a [`CheckReport`].
//!
//! # Quadrature semantics
//!
//! Atomic measures violate the growth condition below their resolution `h`,
//! so every supremum over balls is restricted to radii `r ≥ h` and every
//! check is phrased as a bounded, refinement-stable limit rather than a
//! comparison against an unknown constant.

#![forbid(unsafe_code)]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod family;
pub mod generate;
pub mod growth;
pub mod io;
pub mod kernels;
pub mod measure;
pub mod metric;
pub mod norms;
pub mod operators;
pub mod rbmo;
pub mod report;
pub mod seed;
pub mod testfn;
pub mod verify;

mod ratio;

pub use error::{Error, Result};
pub use family::{BallFamily, FamilySpec};
pub use generate::{generate_measure, refinement_levels, CurveSpec, MeasureKind};
pub use growth::{growth_constant, BallSampler, RadiusGrid};
pub use io::{load_measure, save_measure};
pub use kernels::{FractionalKernel, KernelForm, Modulation};
pub use measure::{ball_mass, AtomicMeasure, Ball, SampledFunction};
pub use metric::{DistanceTable, Location, MetricSpace};
pub use norms::{k_coeff, lip_seminorm, lp_norm, weak_norm, LipEstimate, LipMethod, LipPlan};
pub use operators::{EvaluationResult, Operator, OperatorConfig};
pub use rbmo::{rbmo_alt_diagnostic, rbmo_norm, RbmoAltReport, RbmoReport};
pub use report::{CheckReport, Level, Tolerance};
pub use testfn::{TestFunctionKind, TestFunctionSpec};
