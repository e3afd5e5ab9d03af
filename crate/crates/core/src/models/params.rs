use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Weight,
    Bias,
}

/// One weight matrix `(fan_in, fan_out)` or bias vector `(fan_out)` inside a flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub layer: usize,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl LayoutEntry {
    pub fn size(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.size()
    }
}

/// Ordered `W₀, b₀, W₁, b₁, …` records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    entries: Vec<LayoutEntry>,
}

impl Layout {
    pub(crate) fn for_widths(widths: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(2 * widths.len());
        let mut offset = 0;
        for (layer, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            entries.push(LayoutEntry { layer, kind: ParamKind::Weight, shape: vec![fan_in, fan_out], offset });
            offset += fan_in * fan_out;
            entries.push(LayoutEntry { layer, kind: ParamKind::Bias, shape: vec![fan_out], offset });
            offset += fan_out;
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[LayoutEntry] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.entries.last().map_or(0, |e| e.offset + e.size())
    }

    pub fn weight(&self, layer: usize) -> &LayoutEntry {
        &self.entries[2 * layer]
    }

    pub fn bias(&self, layer: usize) -> &LayoutEntry {
        &self.entries[2 * layer + 1]
    }

    pub fn num_layers(&self) -> usize {
        self.entries.len() / 2
    }
}

/// Flattened parameter vector with the layout that maps slices to layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    values: Vec<f64>,
    layout: Layout,
}

impl FlatParams {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        if values.len() != layout.total() {
            return Err(Error::Layout { expected: layout.total(), actual: values.len() });
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self { values: vec![0.0; layout.total()], layout }
    }

    /// Same layout, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.layout.clone())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self, layer: usize) -> Tensor {
        let e = self.layout.weight(layer);
        Tensor::new(e.shape.clone(), self.values[e.range()].to_vec()).expect("layout shape")
    }

    pub fn bias(&self, layer: usize) -> Tensor {
        let e = self.layout.bias(layer);
        Tensor::new(e.shape.clone(), self.values[e.range()].to_vec()).expect("layout shape")
    }
}
