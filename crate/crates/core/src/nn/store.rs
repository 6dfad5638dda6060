use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::autodiff::ParamValues;
use crate::error::{Error, Result};

/// Named flat parameter tensors. Insertion order is stable, which keeps
/// optimizer updates and checkpoints deterministic.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct ParameterStore {
    tensors: IndexMap<String, Vec<f64>>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.tensors.insert(name.into(), values);
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        self.tensors
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        Ok(self.get(name)?[0])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn remove(&mut self, name: &str) {
        self.tensors.shift_remove(name);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.tensors.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    /// Total number of trainable scalars.
    pub fn n_parameters(&self) -> usize {
        self.tensors.values().map(|v| v.len()).sum()
    }

    /// Zero gradients shaped like this store.
    pub fn zeros_like(&self) -> ParamGrads {
        ParamGrads {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), vec![0.0; v.len()]))
                .collect(),
        }
    }
}

impl ParamValues for ParameterStore {
    fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.tensors.get(name).map(|v| v.as_slice())
    }
}

/// Gradient accumulator keyed identically to a [`ParameterStore`].
#[derive(Debug, Clone, Default)]
pub struct ParamGrads {
    tensors: IndexMap<String, Vec<f64>>,
}

impl ParamGrads {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.tensors.get(name).map(|v| v.as_slice())
    }

    pub fn accumulate(&mut self, name: &str, index: usize, value: f64) -> Result<()> {
        let t = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        let slot = t.get_mut(index).ok_or_else(|| Error::ShapeMismatch {
            name: name.to_string(),
            expected: index + 1,
            actual: 0,
        })?;
        *slot += value;
        Ok(())
    }

    pub fn zero(&mut self) {
        for v in self.tensors.values_mut() {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.tensors.iter()
    }
}
