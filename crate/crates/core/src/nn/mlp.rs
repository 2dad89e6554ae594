use crate::error::{Error, Result};
use crate::nn::param::{ParamGroup, ParamId, ParamStore};
use crate::nn::tape::{Activation, NodeId, Tape};
use crate::numerics::{DenseMatrix, RandomStream};

/// Fully-connected network: sizes `[n0, n1, ..., nk]` with one activation
/// per layer. The last layer is always linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl MlpSpec {
    /// Hidden layers use `hidden_act`, output is linear.
    pub fn with_hidden(sizes: &[usize], hidden_act: Activation) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let n_layers = sizes.len() - 1;
        let mut activations = vec![hidden_act; n_layers];
        activations[n_layers - 1] = Activation::Linear;
        MlpSpec { layer_sizes: sizes.to_vec(), activations }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("mlp needs at least one layer"));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("mlp layer sizes must be positive"));
        }
        if self.activations.len() != self.layer_sizes.len() - 1 {
            return Err(Error::config(format!(
                "mlp has {} layers but {} activations",
                self.layer_sizes.len() - 1,
                self.activations.len()
            )));
        }
        if *self.activations.last().unwrap() != Activation::Linear {
            return Err(Error::config("mlp final layer activation must be linear"));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Number of scalar parameters (weights + biases).
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// An MLP registered in a parameter store under a name prefix.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub prefix: String,
    weights: Vec<ParamId>,
    biases: Vec<ParamId>,
}

impl Mlp {
    /// Register zero-valued weight/bias tensors `{prefix}.w{l}` /
    /// `{prefix}.b{l}` in the store.
    pub fn register(spec: MlpSpec, prefix: &str, store: &mut ParamStore) -> Result<Mlp> {
        spec.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..spec.n_layers() {
            let (nin, nout) = (spec.layer_sizes[l], spec.layer_sizes[l + 1]);
            weights.push(store.insert(
                format!("{prefix}.w{l}"),
                ParamGroup::Network,
                DenseMatrix::zeros(nin, nout),
            )?);
            biases.push(store.insert(
                format!("{prefix}.b{l}"),
                ParamGroup::Network,
                DenseMatrix::zeros(1, nout),
            )?);
        }
        Ok(Mlp { spec, prefix: prefix.to_string(), weights, biases })
    }

    /// Rebind parameter ids by name (after loading a checkpoint).
    pub fn rebind(spec: MlpSpec, prefix: &str, store: &ParamStore) -> Result<Mlp> {
        spec.validate()?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..spec.n_layers() {
            let wname = format!("{prefix}.w{l}");
            let bname = format!("{prefix}.b{l}");
            weights.push(
                store
                    .id(&wname)
                    .ok_or_else(|| Error::format(format!("missing tensor `{wname}`")))?,
            );
            biases.push(
                store
                    .id(&bname)
                    .ok_or_else(|| Error::format(format!("missing tensor `{bname}`")))?,
            );
        }
        Ok(Mlp { spec, prefix: prefix.to_string(), weights, biases })
    }

    pub fn weight_ids(&self) -> &[ParamId] {
        &self.weights
    }

    pub fn bias_ids(&self) -> &[ParamId] {
        &self.biases
    }

    /// Kaiming-normal weights (std = sqrt(2 / fan_in)), zero biases.
    pub fn init_kaiming(&self, store: &mut ParamStore, stream: &mut RandomStream) {
        for (l, wid) in self.weights.iter().enumerate() {
            let fan_in = self.spec.layer_sizes[l] as f64;
            let std = (2.0 / fan_in).sqrt();
            let w = store.value_mut(*wid);
            for v in w.as_mut_slice() {
                *v = std * stream.normal();
            }
        }
        for bid in &self.biases {
            store.value_mut(*bid).as_mut_slice().fill(0.0);
        }
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.spec.input_size() {
            return Err(Error::validation(format!(
                "mlp `{}` expects {} input features, got {cols}",
                self.prefix,
                self.spec.input_size()
            )));
        }
        Ok(())
    }

    /// Plain forward pass on frozen parameters.
    pub fn forward(&self, store: &ParamStore, batch: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_input(batch.cols())?;
        let mut x = batch.clone();
        for l in 0..self.spec.n_layers() {
            let w = store.value(self.weights[l]);
            let b = store.value(self.biases[l]);
            let mut y = x.matmul(w);
            let act = self.spec.activations[l];
            for r in 0..y.rows() {
                for (v, bias) in y.row_mut(r).iter_mut().zip(b.row(0)) {
                    *v = act.apply(*v + bias);
                }
            }
            x = y;
        }
        Ok(x)
    }

    /// Forward pass recorded on a tape.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        input: NodeId,
    ) -> Result<NodeId> {
        self.check_input(tape.value(input).cols())?;
        let mut x = input;
        for l in 0..self.spec.n_layers() {
            let w = tape.param(store, self.weights[l]);
            let b = tape.param(store, self.biases[l]);
            let y = tape.matmul(x, w);
            let y = tape.add_bias(y, b);
            x = tape.activation(y, self.spec.activations[l]);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_store() -> (ParamStore, Mlp) {
        let mut store = ParamStore::new();
        let spec = MlpSpec::with_hidden(&[3, 4, 2], Activation::Tanh);
        let mlp = Mlp::register(spec, "enc", &mut store).unwrap();
        (store, mlp)
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let (store, mlp) = tiny_store();
        let x = DenseMatrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0]);
        let y = mlp.forward(&store, &x).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_layer_affine_map() {
        let mut store = ParamStore::new();
        let spec = MlpSpec::with_hidden(&[1, 1], Activation::Tanh);
        let mlp = Mlp::register(spec, "f", &mut store).unwrap();
        store.value_mut(mlp.weights[0]).set(0, 0, 2.0);
        store.value_mut(mlp.biases[0]).set(0, 0, 1.0);
        let y = mlp
            .forward(&store, &DenseMatrix::from_vec(1, 1, vec![3.0]))
            .unwrap();
        assert_eq!(y.get(0, 0), 7.0);
    }

    #[test]
    fn tape_forward_matches_straight_line_oracle() {
        let mut store = ParamStore::new();
        let spec = MlpSpec::with_hidden(&[3, 5, 2], Activation::Tanh);
        let mlp = Mlp::register(spec, "m", &mut store).unwrap();
        let mut stream = RandomStream::new(11);
        mlp.init_kaiming(&mut store, &mut stream);
        let batch = DenseMatrix::from_vec(4, 3, (0..12).map(|_| stream.normal()).collect());

        // independent straight-line oracle: explicit loops, no tape, no matmul helper
        let mut oracle = vec![vec![0.0; 2]; 4];
        for r in 0..4 {
            let mut h = vec![0.0; 5];
            let w0 = store.value(mlp.weights[0]);
            let b0 = store.value(mlp.biases[0]);
            for j in 0..5 {
                let mut acc = b0.get(0, j);
                for i in 0..3 {
                    acc += batch.get(r, i) * w0.get(i, j);
                }
                h[j] = acc.tanh();
            }
            let w1 = store.value(mlp.weights[1]);
            let b1 = store.value(mlp.biases[1]);
            for j in 0..2 {
                let mut acc = b1.get(0, j);
                for (i, hv) in h.iter().enumerate() {
                    acc += hv * w1.get(i, j);
                }
                oracle[r][j] = acc;
            }
        }

        let mut tape = Tape::new();
        let x = tape.constant(batch.clone());
        let out = mlp.forward_tape(&mut tape, &store, x).unwrap();
        let plain = mlp.forward(&store, &batch).unwrap();
        for r in 0..4 {
            for c in 0..2 {
                assert!((tape.value(out).get(r, c) - oracle[r][c]).abs() < 1e-12);
                assert!((plain.get(r, c) - oracle[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kaiming_variance_matches_two_over_fan_in() {
        let mut store = ParamStore::new();
        // fan_in = 2 => target variance 1.0; big output dim for sample size
        let spec = MlpSpec::with_hidden(&[2, 50_000], Activation::Tanh);
        let mlp = Mlp::register(spec, "k", &mut store).unwrap();
        let mut stream = RandomStream::new(17);
        mlp.init_kaiming(&mut store, &mut stream);
        let w = store.value(mlp.weights[0]);
        let n = w.as_slice().len() as f64;
        let mean: f64 = w.as_slice().iter().sum::<f64>() / n;
        let var: f64 = w.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 0.05, "var = {var}");
        // biases exactly zero
        assert!(store.value(mlp.biases[0]).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn same_seed_bit_identical_weights() {
        let (mut s1, m1) = tiny_store();
        let (mut s2, m2) = tiny_store();
        m1.init_kaiming(&mut s1, &mut RandomStream::new(5));
        m2.init_kaiming(&mut s2, &mut RandomStream::new(5));
        assert_eq!(s1.flatten_values(), s2.flatten_values());
    }

    #[test]
    fn dimension_mismatch_is_validation_error() {
        let (store, mlp) = tiny_store();
        let bad = DenseMatrix::zeros(2, 5);
        assert!(matches!(mlp.forward(&store, &bad), Err(Error::Validation(_))));
    }

    #[test]
    fn final_activation_must_be_linear() {
        let spec = MlpSpec {
            layer_sizes: vec![2, 2],
            activations: vec![Activation::Tanh],
        };
        assert!(spec.validate().is_err());
    }
}
