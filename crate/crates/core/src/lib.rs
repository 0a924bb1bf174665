//! Continuous controlled K-g-fusion frames in finite dimensions.
//!
//! Operators are dense complex matrices. A family of weighted subspaces with
//! local operators over a finite measure space, together with a pair of
//! positive invertible controllers `T`, `U` and a target operator `K`, defines
//! the controlled frame operator
//!
//! ```text
//! S_C = Σ_x μ_x v(x)² T* P_F(x) Λ_x* Λ_x P_F(x) U
//! ```
//!
//! The crate computes `S_C`, its optimal bounds relative to `K`, the
//! constructions that produce new frames from old ones, and the associated
//! stability estimates.

pub mod constructions;
pub mod error;
pub mod frames;
pub mod gen;
pub mod linalg;
pub mod measure;
pub mod stability;
pub mod tol;

pub use constructions::{
    canonical_dual, canonical_k_construction, controlled_uncontrolled_equivalence_check, douglas_transfer,
    inverse_transform_check, pairwise_k_frame_check, restrict_to_range, transform_by_invertible, weaken_to_k_frame,
    Construction, TransformedFamily,
};
pub use error::{Error, ErrorClass, Result};
pub use frames::{
    analysis_operator, frame_functional, frame_operator, is_controlled_k_g_fusion_frame, optimal_bounds,
    AnalysisOperator, AtomComponent, BoundsCertificate, CoefficientVector, ControlContext, FrameFamily,
    FrameOperatorResult,
};
pub use gen::{generate, ControllerMode, Field, GenSpec, Instance, KMode, Sampler, RNG_VERSION};
pub use linalg::{Operator, Subspace, Vector, C64};
pub use measure::{counting_measure, discretize_interval, MeasureSpace, WeightFunction};
pub use stability::{
    dual_stability_check, frame_operator_distance, quotient_bound, three_equivalences, StabilityReport,
    StabilityVariant,
};
pub use tol::Tolerances;
