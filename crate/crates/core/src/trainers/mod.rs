//! Training for SGVB (weight and local reparameterization), SGLD, SWAG, MC dropout and
//! deep ensembles, each in a baseline and a flat variant built on one SAM step.

mod artifact;
mod config;
mod dropout;
mod ensemble;
mod sgd;
mod sgld;
mod step;
mod swag;
mod variational;

pub use artifact::{train, Artifact};
pub use config::{LrSchedule, Method, TrainConfig};
pub use dropout::train_mc_dropout;
pub use ensemble::train_deep_ensemble;
pub use sgld::{sgld_update, train_sgld, Particle, ParticleSet};
pub use step::{sam_step, Evaluation, Trained};
pub use swag::{swag_sample, train_swag, SwagStats};
pub use variational::train_sgvb;
