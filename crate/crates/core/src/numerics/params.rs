use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use super::{Scalar, Tensor};
use crate::{Error, Result};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// First/second moment estimates and step count of one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: Tensor<F>,
    pub v: Tensor<F>,
    pub step: u64,
}

/// Named trainable tensors with their gradients and optimizer state.
///
/// Values and gradients live in separate arrays so a backward pass can read
/// weights while writing gradients (see [`ParamStore::split`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<F> {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    values: Vec<Tensor<F>>,
    grads: Vec<Tensor<F>>,
    adam: Vec<AdamState<F>>,
}

/// Read-only view of parameter values.
#[derive(Clone, Copy)]
pub struct Values<'a, F>(&'a [Tensor<F>]);

/// Mutable view of parameter gradients.
pub struct Grads<'a, F>(&'a mut [Tensor<F>]);

impl<F> Index<ParamId> for Values<'_, F> {
    type Output = Tensor<F>;
    fn index(&self, id: ParamId) -> &Tensor<F> {
        &self.0[id.0]
    }
}

impl<F> Index<ParamId> for Grads<'_, F> {
    type Output = Tensor<F>;
    fn index(&self, id: ParamId) -> &Tensor<F> {
        &self.0[id.0]
    }
}

impl<F> IndexMut<ParamId> for Grads<'_, F> {
    fn index_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.0[id.0]
    }
}

impl<F: Scalar> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> ParamStore<F> {
    pub fn new() -> Self {
        ParamStore { names: Vec::new(), index: BTreeMap::new(), values: Vec::new(), grads: Vec::new(), adam: Vec::new() }
    }

    pub fn add(&mut self, name: &str, value: Tensor<F>) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateParameter(name.into()));
        }
        let id = self.values.len();
        self.index.insert(name.into(), id);
        self.names.push(name.into());
        self.grads.push(Tensor::zeros(value.shape()));
        self.adam.push(AdamState { m: Tensor::zeros(value.shape()), v: Tensor::zeros(value.shape()), step: 0 });
        self.values.push(value);
        Ok(ParamId(id))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.index.get(name).map(|i| ParamId(*i)).ok_or_else(|| Error::UnknownParameter(name.into()))
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor<F> {
        &self.values[id.0]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.values[id.0]
    }

    /// Replaces a value; the shape must not change.
    pub fn set_value(&mut self, id: ParamId, value: Tensor<F>) -> Result<()> {
        value.ensure_shape(self.values[id.0].shape())?;
        self.values[id.0] = value;
        Ok(())
    }

    pub fn grad(&self, id: ParamId) -> &Tensor<F> {
        &self.grads[id.0]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.grads[id.0]
    }

    pub fn adam_state(&self, id: ParamId) -> &AdamState<F> {
        &self.adam[id.0]
    }

    pub fn values(&self) -> Values<'_, F> {
        Values(&self.values)
    }

    /// Simultaneous read access to values and write access to gradients.
    pub fn split(&mut self) -> (Values<'_, F>, Grads<'_, F>) {
        (Values(&self.values), Grads(&mut self.grads))
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Tensor<F>], &mut [Tensor<F>], &mut [AdamState<F>]) {
        (&mut self.values, &mut self.grads, &mut self.adam)
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(F::zero());
        }
    }

    pub fn num_elements(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Copy with every tensor converted to another scalar type; gradients
    /// and optimizer state start fresh.
    pub fn cast<G: Scalar>(&self) -> ParamStore<G> {
        let mut out = ParamStore::new();
        for (name, v) in self.names.iter().zip(&self.values) {
            out.add(name, v.map()).expect("names are unique");
        }
        out
    }
}
