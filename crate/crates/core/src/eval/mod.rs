//! Posterior-predictive evaluation: ensemble prediction from any trained artifact,
//! accuracy, NLL, expected calibration error with reliability tables, sampled sharpness
//! and Hessian eigenvalues by power iteration.

mod eigen;
mod metrics;
mod predict;
mod report;

pub use eigen::{power_iteration, top_eigenvalues, EigenEstimate, HVP_STEP, RAYLEIGH_TOL};
pub use metrics::{accuracy, argmax, ece, nll, ReliabilityRow, ReliabilityTable, PROB_FLOOR};
pub use predict::{ensemble_predict, sample_models, sampled_sharpness, SampledModel};
pub use report::{
    evaluate, reference_params, reference_spectrum, EigenOptions, EvalOptions, EvalReport, SharpnessOptions,
};
