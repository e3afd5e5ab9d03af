use serde::{Deserialize, Serialize};

use super::params::{FlatParams, Layout};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "tanh" => Ok(Self::Tanh),
            other => Err(invalid("activation", format!("unknown activation `{other}`"))),
        }
    }
}

/// Dense feed-forward network: `widths[0]` inputs, `widths.last()` raw logits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    activations: Vec<Activation>,
}

impl MlpSpec {
    /// `activations` has one entry per hidden layer.
    pub fn new(widths: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(invalid("widths", "need at least an input and an output width"));
        }
        if widths.contains(&0) {
            return Err(invalid("widths", format!("all widths must be >= 1, got {widths:?}")));
        }
        if activations.len() != widths.len() - 2 {
            return Err(invalid(
                "activations",
                format!(
                    "{} hidden layers need {} activations, got {}",
                    widths.len() - 2,
                    widths.len() - 2,
                    activations.len()
                ),
            ));
        }
        Ok(Self { widths, activations })
    }

    /// Same activation on every hidden layer.
    pub fn uniform(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        let hidden = widths.len().saturating_sub(2);
        Self::new(widths, vec![activation; hidden])
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.widths[1..self.widths.len() - 1]
    }

    pub fn layout(&self) -> Layout {
        Layout::for_widths(&self.widths)
    }

    pub fn num_params(&self) -> usize {
        self.layout().total()
    }

    /// Glorot-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
    pub fn init_params<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> FlatParams {
        let layout = self.layout();
        let mut values = vec![0.0; layout.total()];
        for entry in layout.entries() {
            if entry.kind == super::ParamKind::Weight {
                let (fan_in, fan_out) = (entry.shape[0], entry.shape[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in &mut values[entry.range()] {
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
        FlatParams::new(values, layout).expect("layout sized by construction")
    }
}
