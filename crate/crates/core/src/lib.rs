//! Numerical spectral analysis of elliptic cone operators.
//!
//! The pipeline runs from the indicial roots of a model cone Laplacian,
//! through the scaling flow on the Grassmannian of extension domains and the
//! model-operator invertibility test along rays, to dense enriched pencils
//! whose spectra, resolvents and eigenvector expansions are checked against
//! an independent secular-equation oracle.
//!
//! All dense kernels run single threaded; independent problems are
//! distributed with rayon.

// Guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretize;
pub mod error;
pub mod grassmann;
pub mod indicial;
pub mod linalg;
pub mod model;
pub mod normalop;
pub mod special;
pub mod spectral;

pub use discretize::{
    assemble_embedding_grams, assemble_mode_pencil, bump_test_vector, embedding_singular_values, DiscreteOperatorPencil,
    EmbeddingGrams, Grading, RadialGrid,
};
pub use error::{Error, Result};
pub use grassmann::{flow, grassmann_distance, kappa_matrix, omega_minus, KappaMatrix};
pub use indicial::{boundary_spectrum, critical_strip, dmin_is_weighted_sobolev, singular_basis, IndicialRoot, SingularFunction};
pub use linalg::CMat;
pub use model::{ConeModelOperator, ExtensionDomain, Geometry, Ray, WeightedSobolevParams};
pub use normalop::{
    decaying_trace, normal_invertible, ray_minimal_growth_normal, Certification, NormalOutcome, NormalRayVerdict,
};
pub use spectral::{
    completeness_certificate, completeness_residual, friedrichs_sector_eigenvalues, oracle_eigenvalues,
    ray_minimal_growth_full, resolvent_norm, schatten_fit, solve_pencil, weyl_fit, CompletenessCertificate, RayVerdict,
    SchattenFit, SpectralResult, Verdict, WeylFit,
};
