//! Information geometry of the Gaussian linear regression model.
//!
//! The model `Y ~ N_n(Aβ, σ²I_n)` is an exponential family whose Fisher
//! metric, written in upper half-space coordinates, is `2n/u_{p+1}² · I`:
//! a scaled copy of hyperbolic space `H^{p+1}`. This crate provides
//!
//! * the canonical form of the model ([`model`]),
//! * the natural / expectation / upper half-space charts and their Fisher
//!   matrices ([`params`]),
//! * the scaled hyperbolic geometry, the horomap and plane conversion
//!   ([`hyperbolic`]),
//! * the Jeffreys prior and the closed-form marginal of the sufficient
//!   statistic ([`prior`]),
//! * strict minimum message length codes fitted on a truncated domain and
//!   exported as hyperbolic tessellations ([`smml`]).

pub mod error;
pub mod grid;
pub mod hyperbolic;
pub mod model;
pub mod params;
pub mod prior;
pub mod smml;

mod special;

pub use error::{Error, Result};
pub use grid::{DataGrid, TruncatedDomain};
pub use hyperbolic::{
    affine_to_hyperbolic_plane, default_curvature_radius, exp_map, geodesic_point, horomap_uh,
    horomap_uh_inverse, horomap_xi, hyperbolic_distance, hyperbolic_volume_density,
    sectional_curvature_estimate, AffineFunctional, HoromapDirection, HyperbolicPlane,
};
pub use model::{
    classify_data_point, lift_to_data, log_partition, log_pdf_suffstat, log_pdf_y,
    orthonormal_basis, sample_suffstat, suff_stat, DataRegion, DesignBasis, NaturalParam, SuffStat,
};
pub use params::{
    fisher_expectation, fisher_natural, fisher_upper_half, from_beta_sigma, pullback_metric,
    reparameterize, theta_from_u, theta_from_xi, u_from_theta, u_from_xi, xi_from_theta, xi_from_u,
    Chart, ExpectationParam, FisherMatrix, ModelPoint, UpperHalfParam,
};
pub use prior::{
    density_ratio_constant, jeffreys_prior_natural, marginal_constant, marginal_density,
    truncated_mass,
};
pub use smml::{
    adjacent_cells, assign_cell, cell_polytope, fit_smml, grid_partition, lambda_score,
    message_length, tessellation_hyperbolic, update_weights_and_assertions, CellPolytope, Facet,
    FitOptions, FitReport, HalfStep, HalfStepKind, RestartTrace, SmmlCode, Tessellation,
    TessellationCell,
};
