//! Oja median computation: exact and approximate algorithms, Oja signs, ranks
//! and signed ranks, sign/rank covariance matrices, and affine-invariant
//! location tests.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`.
//!
//! ```
//! use oja_core::{exact_median, DataMatrix64, ExactConfig};
//!
//! let x = DataMatrix64::from_f64_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
//! let m = exact_median(&x, &ExactConfig::default()).unwrap();
//! assert!((m.objective - 0.5).abs() < 1e-12);
//! ```

pub mod data;
pub mod error;
pub mod evolutionary;
pub mod exact;
pub mod geometry;
pub mod grid;
pub mod inference;
pub mod linalg;
pub mod median;
pub mod objective;
pub mod oracle;
pub mod reference;
pub mod region;
pub mod scalar;
pub mod scores;
pub mod subsets;

pub use data::{DataMatrix, GeneralPosition};
pub use error::{OjaError, Result};
pub use evolutionary::{evolutionary_median, evolutionary_median_raw, EvoConfig, Termination};
pub use exact::{
    bounded_exact_median, bounded_exact_median_traced, enumerate_hyperplanes, exact_median, median_set_vertices,
    BoundedConfig, BoundedTrace, Cut, ExactConfig, HyperplaneSet,
};
pub use geometry::{abs_det_gradient, cross_direction, hyperplane_from_indices, hyperplane_from_points, simplex_volume, Hyperplane, Source};
pub use grid::{grid_median, knot_test, GridConfig, KnotDecision, KnotTest};
pub use inference::{
    c_sample_test, chi_square_quantile, chi_square_sf, one_sample_test, Method, NullValue, TestConfig, TestResult,
};
pub use linalg::{covariance_matrix, inverse_sqrt_psd, Matrix};
pub use median::{compute_median, median_averaged, Algorithm, Diagnostic, MedianConfig, MedianResult};
pub use objective::{
    depth_from_objective, minimize_on_line, oja_depth, oja_objective, Line, LineMinimum, LineSearchMode, Objective,
    PlaneSet, Subsets,
};
pub use oracle::{brute_force_median, OracleResult};
pub use reference::{
    marginal_median, spatial_median, univariate_median, univariate_median_interval, MedianInterval, SpatialMedian,
};
pub use region::{region_cut, CutOutcome, Region, Vertex};
pub use scalar::Scalar;
pub use scores::{
    marginal_scores, oja_rank, oja_rank_from_signs, oja_rank_matrix, oja_rcm, oja_scm, oja_sign, oja_sign_matrix,
    oja_signed_rank, oja_signed_rank_matrix, resolve_center, score_cov, scores, spatial_scores, CenterSpec,
    ScoreFamily, ScoreKind, ScoreMatrix,
};
pub use subsets::{binomial, enumeration_cap, k_subsets, set_enumeration_cap, IndexTuple, SubsetMode};

pub type DataMatrix64 = DataMatrix<f64>;
pub type Hyperplane64 = Hyperplane<f64>;
pub type MedianResult64 = MedianResult<f64>;
pub type ScoreMatrix64 = ScoreMatrix<f64>;
pub type TestResult64 = TestResult<f64>;
pub type Region64 = Region<f64>;
pub type Matrix64 = Matrix<f64>;
pub type CenterSpec64 = CenterSpec<f64>;
