//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::nn::param::ParamStore;

#[derive(Debug, Clone)]
pub struct GradCheckEntry {
    pub tensor: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_err: f64,
    pub worst_tensor: String,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Compare the gradients currently stored in `store` against central
/// finite differences of `loss`. `loss` must be a pure function of the
/// parameter values.
///
/// Relative error per entry is `|fd - an| / max(|fd|, |an|)`, with entries
/// where both magnitudes are below `1e-10` counted as exact.
pub fn gradient_check<F>(store: &mut ParamStore, mut loss: F, h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> f64,
{
    if !(1e-8..=1e-4).contains(&h) {
        return Err(Error::domain(format!("gradient_check: h={h} outside [1e-8, 1e-4]")));
    }
    let ids: Vec<_> = store.ids().collect();
    let mut entries = Vec::with_capacity(ids.len());
    let mut max_rel_err = 0.0_f64;
    let mut worst_tensor = String::new();
    for id in ids {
        let (rows, cols) = store.value(id).shape();
        let mut tensor_err = 0.0_f64;
        for r in 0..rows {
            for c in 0..cols {
                let orig = store.value(id).get(r, c);
                store.value_mut(id).set(r, c, orig + h);
                let plus = loss(store);
                store.value_mut(id).set(r, c, orig - h);
                let minus = loss(store);
                store.value_mut(id).set(r, c, orig);
                let fd = (plus - minus) / (2.0 * h);
                let an = store.grad(id).get(r, c);
                let denom = fd.abs().max(an.abs());
                let rel = if denom < 1e-10 { 0.0 } else { (fd - an).abs() / denom };
                tensor_err = tensor_err.max(rel);
            }
        }
        if tensor_err > max_rel_err {
            max_rel_err = tensor_err;
            worst_tensor = store.name(id).to_string();
        }
        entries.push(GradCheckEntry { tensor: store.name(id).to_string(), max_rel_err: tensor_err });
    }
    Ok(GradCheckReport { entries, max_rel_err, worst_tensor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::{Mlp, MlpSpec};
    use crate::nn::param::ParamGroup;
    use crate::nn::tape::{Activation, Tape};
    use crate::numerics::{DenseMatrix, RandomStream};

    #[test]
    fn linear_least_squares_is_exact_up_to_roundoff() {
        let mut store = ParamStore::new();
        let w = store
            .insert("w", ParamGroup::Network, DenseMatrix::from_vec(2, 1, vec![0.3, -0.7]))
            .unwrap();
        let x = DenseMatrix::from_vec(8, 2, {
            let mut s = RandomStream::new(1);
            (0..16).map(|_| s.normal()).collect()
        });
        let y = DenseMatrix::from_vec(8, 1, {
            let mut s = RandomStream::new(2);
            (0..8).map(|_| s.normal()).collect()
        });

        let mut tape = Tape::new();
        let xn = tape.constant(x.clone());
        let wn = tape.param(&store, w);
        let pred = tape.matmul(xn, wn);
        let tn = tape.constant(y.clone());
        let loss = tape.mean_row_sq_error(pred, tn);
        tape.backward(loss, &mut store).unwrap();

        let report = gradient_check(
            &mut store,
            |s| {
                let pred = x.matmul(s.value(s.id("w").unwrap()));
                pred.sub(&y).as_slice().iter().map(|d| d * d).sum::<f64>() / 8.0
            },
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-8, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn tanh_mlp_matches_finite_differences() {
        let mut store = ParamStore::new();
        let spec = MlpSpec::with_hidden(&[3, 6, 2], Activation::Tanh);
        let mlp = Mlp::register(spec, "m", &mut store).unwrap();
        let mut stream = RandomStream::new(21);
        mlp.init_kaiming(&mut store, &mut stream);
        let batch = DenseMatrix::from_vec(5, 3, (0..15).map(|_| stream.normal()).collect());
        let target = DenseMatrix::from_vec(5, 2, (0..10).map(|_| stream.normal()).collect());

        let mut tape = Tape::new();
        let xn = tape.constant(batch.clone());
        let out = mlp.forward_tape(&mut tape, &store, xn).unwrap();
        let tn = tape.constant(target.clone());
        let loss = tape.mean_row_sq_error(out, tn);
        tape.backward(loss, &mut store).unwrap();

        let mlp2 = mlp.clone();
        let report = gradient_check(
            &mut store,
            move |s| {
                let pred = mlp2.forward(s, &batch).unwrap();
                pred.sub(&target).as_slice().iter().map(|d| d * d).sum::<f64>() / 5.0
            },
            1e-6,
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-4, "max rel err {}", report.max_rel_err);
    }

    #[test]
    fn corrupted_gradient_is_flagged_by_tensor_name() {
        let mut store = ParamStore::new();
        let w = store
            .insert("w", ParamGroup::Network, DenseMatrix::from_vec(1, 1, vec![0.5]))
            .unwrap();
        let u = store
            .insert("u", ParamGroup::Network, DenseMatrix::from_vec(1, 1, vec![-0.25]))
            .unwrap();
        // loss = w^2 + u^2; correct grads then corrupt one entry
        store.grad_mut(w).set(0, 0, 2.0 * 0.5);
        store.grad_mut(u).set(0, 0, 2.0 * -0.25 + 0.1); // corrupted
        let report = gradient_check(
            &mut store,
            |s| {
                let wv = s.value(s.id("w").unwrap()).get(0, 0);
                let uv = s.value(s.id("u").unwrap()).get(0, 0);
                wv * wv + uv * uv
            },
            1e-6,
        )
        .unwrap();
        assert_eq!(report.worst_tensor, "u");
        assert!(!report.passes(1e-4));
    }

    #[test]
    fn h_out_of_range_is_domain_error() {
        let mut store = ParamStore::new();
        store
            .insert("w", ParamGroup::Network, DenseMatrix::zeros(1, 1))
            .unwrap();
        assert!(gradient_check(&mut store, |_| 0.0, 1e-3).is_err());
        assert!(gradient_check(&mut store, |_| 0.0, 1e-9).is_err());
    }
}
