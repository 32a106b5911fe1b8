use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// A named parameter with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { value, grad }
    }
}

/// Named parameter collection. Iteration order is the sorted name order,
/// which fixes the layout of checkpoints and the order of all reductions.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    map: BTreeMap<String, Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.map.insert(name.into(), Param::new(value));
    }

    pub fn get(&self, name: &str) -> Result<&Param> {
        self.map
            .get(name)
            .ok_or_else(|| Error::shape(format!("unknown parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Param> {
        self.map
            .get_mut(name)
            .ok_or_else(|| Error::shape(format!("unknown parameter {name}")))
    }

    pub fn value(&self, name: &str) -> Result<&Tensor> {
        Ok(&self.get(name)?.value)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.map.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.map.values().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in self.map.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Global L2 norm of all gradients, accumulated in name order.
    pub fn grad_norm(&self) -> f64 {
        let mut sq = 0.0;
        for p in self.map.values() {
            for g in p.grad.as_slice() {
                sq += g * g;
            }
        }
        sq.sqrt()
    }

    /// Name of the first parameter (in name order) with a non-finite
    /// gradient entry, if any.
    pub fn first_nonfinite_grad(&self) -> Option<&str> {
        self.map
            .iter()
            .find(|(_, p)| !p.grad.all_finite())
            .map(|(k, _)| k.as_str())
    }
}
