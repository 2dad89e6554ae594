use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Optimizer grouping for a tensor; each group can carry its own learning
/// rate (network weights vs blend vectors vs Koopman frequencies).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Network,
    Blend,
    Frequency,
}

impl ParamGroup {
    pub fn tag(&self) -> &'static str {
        match self {
            ParamGroup::Network => "network",
            ParamGroup::Blend => "blend",
            ParamGroup::Frequency => "frequency",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "network" => Ok(ParamGroup::Network),
            "blend" => Ok(ParamGroup::Blend),
            "frequency" => Ok(ParamGroup::Frequency),
            other => Err(Error::format(format!("unknown parameter group `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

#[derive(Debug, Clone)]
struct ParamEntry {
    name: String,
    group: ParamGroup,
    value: DenseMatrix,
    grad: DenseMatrix,
}

/// Named trainable tensors with matching gradient buffers.
///
/// Insertion order is stable and defines serialization order, so two stores
/// built by the same code path are directly comparable.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore { entries: Vec::new() }
    }

    pub fn insert(
        &mut self,
        name: impl Into<String>,
        group: ParamGroup,
        value: DenseMatrix,
    ) -> Result<ParamId> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::validation(format!("duplicate parameter `{name}`")));
        }
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        self.entries.push(ParamEntry { name, group, value, grad });
        Ok(ParamId(self.entries.len() - 1))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn group(&self, id: ParamId) -> ParamGroup {
        self.entries[id.0].group
    }

    pub fn value(&self, id: ParamId) -> &DenseMatrix {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut DenseMatrix {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &DenseMatrix {
        &self.entries[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut DenseMatrix {
        &mut self.entries[id.0].grad
    }

    pub fn accumulate_grad(&mut self, id: ParamId, delta: &DenseMatrix) {
        self.entries[id.0].grad.add_assign(delta);
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.as_mut_slice().fill(0.0);
        }
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.entries.len()).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|e| e.value.rows() * e.value.cols()).sum()
    }

    /// Concatenated copy of all parameter values, in insertion order.
    pub fn flatten_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for e in &self.entries {
            out.extend_from_slice(e.value.as_slice());
        }
        out
    }

    /// Concatenated copy of all gradients, in insertion order.
    pub fn flatten_grads(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for e in &self.entries {
            out.extend_from_slice(e.grad.as_slice());
        }
        out
    }

    /// Overwrite all parameter values from a flat buffer (inverse of
    /// [`ParamStore::flatten_values`]).
    pub fn set_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_len(), "flat buffer length mismatch");
        let mut offset = 0;
        for e in &mut self.entries {
            let n = e.value.rows() * e.value.cols();
            e.value.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
    }

    /// value += scale * delta over the flat layout.
    pub fn add_scaled_flat(&mut self, scale: f64, delta: &[f64]) {
        assert_eq!(delta.len(), self.total_len(), "flat buffer length mismatch");
        let mut offset = 0;
        for e in &mut self.entries {
            let n = e.value.rows() * e.value.cols();
            for (v, d) in e.value.as_mut_slice().iter_mut().zip(&delta[offset..offset + n]) {
                *v += scale * d;
            }
            offset += n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grads_match_shapes_and_zero() {
        let mut store = ParamStore::new();
        let id = store
            .insert("w", ParamGroup::Network, DenseMatrix::zeros(2, 3))
            .unwrap();
        assert_eq!(store.grad(id).shape(), (2, 3));
        store.grad_mut(id).set(1, 2, 5.0);
        store.zero_grads();
        assert!(store.grad(id).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicate_name_rejected() {
        let mut store = ParamStore::new();
        store.insert("w", ParamGroup::Network, DenseMatrix::zeros(1, 1)).unwrap();
        assert!(store.insert("w", ParamGroup::Blend, DenseMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let mut store = ParamStore::new();
        store
            .insert("a", ParamGroup::Network, DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]))
            .unwrap();
        store
            .insert("b", ParamGroup::Blend, DenseMatrix::from_vec(2, 1, vec![3.0, 4.0]))
            .unwrap();
        let flat = store.flatten_values();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0]);
        let mut store2 = store.clone();
        store2.set_from_flat(&[9.0, 8.0, 7.0, 6.0]);
        assert_eq!(store2.flatten_values(), vec![9.0, 8.0, 7.0, 6.0]);
        store2.set_from_flat(&flat);
        assert_eq!(store2.flatten_values(), flat);
    }
}
