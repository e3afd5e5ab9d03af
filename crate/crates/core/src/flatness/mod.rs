//! Sharpness-aware machinery: SAM perturbations, the sharpness metric, discrete Gibbs
//! posteriors with a brute-force oracle, and the PAC-Bayes bound evaluator.

mod bound;
mod gibbs;
mod sam;
mod sharpness;

pub use bound::{
    covering_number_bound, pac_bayes_bound_term, pac_bayes_bound_terms, sigma_from_rho, sigma_from_rho_log,
    BoundInputs, BoundTerms, CoveringBound,
};
pub use gibbs::{gibbs_objective, gibbs_oracle, gibbs_posterior_grid, total_variation, GibbsGrid};
pub use sam::{geometry_diag, sam_perturb, t_norm, GeometryKind, GEOMETRY_FLOOR, MIN_GRAD_NORM};
pub use sharpness::sharpness;
