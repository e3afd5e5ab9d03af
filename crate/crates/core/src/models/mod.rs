//! MLP architecture, flat parameter vectors, Gaussian posteriors and stochastic forward passes.

mod forward;
mod params;
mod posterior;
mod spec;

pub use forward::{
    dropout_forward, local_reparam_forward, lrt_loss_grad, mlp_forward, mlp_loss, mlp_loss_grad, softmax_rows,
    DropoutMasks, LocalNoise,
};
pub use params::{FlatParams, Layout, LayoutEntry, ParamKind};
pub use posterior::{
    kl_diag_gaussian, kl_diag_gaussian_grad, sample_weights_reparam, GaussianPosterior, PriorSpec, LOG_SIGMA_MAX,
    LOG_SIGMA_MIN,
};
pub use spec::{Activation, MlpSpec};
