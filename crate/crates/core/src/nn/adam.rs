use crate::error::{Error, Result};
use crate::nn::param::{ParamGroup, ParamStore};
use crate::numerics::DenseMatrix;

/// Learning rate per parameter group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRates {
    pub network: f64,
    pub blend: f64,
    pub frequency: f64,
}

impl GroupRates {
    pub fn uniform(lr: f64) -> Self {
        GroupRates { network: lr, blend: lr, frequency: lr }
    }

    pub fn rate(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Network => self.network,
            ParamGroup::Blend => self.blend,
            ParamGroup::Frequency => self.frequency,
        }
    }
}

/// Adam with bias-corrected moments and per-group learning rates.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rates: GroupRates,
    pub t: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl AdamState {
    pub fn new(store: &ParamStore, rates: GroupRates) -> Self {
        Self::with_betas(store, rates, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(
        store: &ParamStore,
        rates: GroupRates,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        let m = store
            .ids()
            .map(|id| DenseMatrix::zeros(store.value(id).rows(), store.value(id).cols()))
            .collect::<Vec<_>>();
        let v = m.clone();
        AdamState { beta1, beta2, epsilon, rates, t: 0, m, v }
    }

    /// One update from the gradients currently in the store;
    /// `lr_scale` multiplies every group rate (scheduler hook).
    pub fn step_scaled(&mut self, store: &mut ParamStore, lr_scale: f64) -> Result<()> {
        for id in store.ids() {
            if !store.grad(id).is_finite() {
                return Err(Error::Optimization {
                    tensor: store.name(id).to_string(),
                    message: "gradient contains NaN/Inf".to_string(),
                });
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (idx, id) in store.ids().enumerate().collect::<Vec<_>>() {
            let lr = self.rates.rate(store.group(id)) * lr_scale;
            let grad = store.grad(id).clone();
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for ((mv, vv), g) in m
                .as_mut_slice()
                .iter_mut()
                .zip(v.as_mut_slice())
                .zip(grad.as_slice())
            {
                *mv = self.beta1 * *mv + (1.0 - self.beta1) * g;
                *vv = self.beta2 * *vv + (1.0 - self.beta2) * g * g;
            }
            let value = store.value_mut(id);
            for ((p, mv), vv) in value
                .as_mut_slice()
                .iter_mut()
                .zip(m.as_slice())
                .zip(v.as_slice())
            {
                let mhat = mv / bc1;
                let vhat = vv / bc2;
                *p -= lr * mhat / (vhat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, store: &mut ParamStore) -> Result<()> {
        self.step_scaled(store, 1.0)
    }
}

/// Learning-rate schedule applied multiplicatively on top of the group
/// rates. The triangular cyclic policy ramps `low -> high -> low` over
/// `period` steps; group rates are interpreted as the `high` amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheduler {
    Constant,
    Cyclic { low: f64, high: f64, period: usize },
}

impl Scheduler {
    pub fn factor(&self, step: u64) -> f64 {
        match *self {
            Scheduler::Constant => 1.0,
            Scheduler::Cyclic { low, high, period } => {
                let p = period.max(2) as f64;
                let phase = (step % period.max(2) as u64) as f64 / p;
                let tri = 1.0 - (2.0 * phase - 1.0).abs(); // 0 -> 1 -> 0
                (low + (high - low) * tri) / high
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Scheduler::Cyclic { low, high, period } = *self {
            if !(low > 0.0 && high >= low) {
                return Err(Error::config("cyclic scheduler needs 0 < low <= high"));
            }
            if period < 2 {
                return Err(Error::config("cyclic scheduler period must be >= 2"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::param::ParamGroup;

    fn scalar_store(groups: &[(&str, ParamGroup, f64)]) -> ParamStore {
        let mut store = ParamStore::new();
        for (name, group, value) in groups {
            store
                .insert(*name, *group, DenseMatrix::from_vec(1, 1, vec![*value]))
                .unwrap();
        }
        store
    }

    #[test]
    fn first_step_magnitude_equals_lr() {
        let mut store = scalar_store(&[("w", ParamGroup::Network, 0.0)]);
        let id = store.id("w").unwrap();
        store.grad_mut(id).set(0, 0, 1.0);
        let mut adam = AdamState::new(&store, GroupRates::uniform(1e-3));
        adam.step(&mut store).unwrap();
        let w = store.value(id).get(0, 0);
        assert!((w + 1e-3).abs() < 1e-10, "w = {w}");
    }

    #[test]
    fn zero_grads_leave_params_unchanged() {
        let mut store = scalar_store(&[("w", ParamGroup::Network, 0.7)]);
        let mut adam = AdamState::new(&store, GroupRates::uniform(1e-3));
        for _ in 0..10 {
            store.zero_grads();
            adam.step(&mut store).unwrap();
        }
        assert_eq!(store.value(store.id("w").unwrap()).get(0, 0), 0.7);
    }

    #[test]
    fn group_rates_differ_by_factor_ten_on_first_step() {
        let mut store = scalar_store(&[
            ("theta", ParamGroup::Network, 0.0),
            ("blend", ParamGroup::Blend, 0.0),
        ]);
        let t = store.id("theta").unwrap();
        let b = store.id("blend").unwrap();
        store.grad_mut(t).set(0, 0, 0.5);
        store.grad_mut(b).set(0, 0, 0.5);
        let mut adam = AdamState::new(
            &store,
            GroupRates { network: 1e-4, blend: 1e-5, frequency: 1e-4 },
        );
        adam.step(&mut store).unwrap();
        let wt = store.value(t).get(0, 0);
        let wb = store.value(b).get(0, 0);
        assert!((wt / wb - 10.0).abs() < 1e-9, "ratio = {}", wt / wb);
    }

    #[test]
    fn invariant_to_uniform_gradient_scaling_with_tiny_epsilon() {
        let run = |gscale: f64| -> f64 {
            let mut store = scalar_store(&[("w", ParamGroup::Network, 0.0)]);
            let id = store.id("w").unwrap();
            store.grad_mut(id).set(0, 0, 0.3 * gscale);
            let mut adam =
                AdamState::with_betas(&store, GroupRates::uniform(1e-3), 0.9, 0.999, 1e-16);
            adam.step(&mut store).unwrap();
            store.value(id).get(0, 0)
        };
        let w1 = run(1.0);
        let w100 = run(100.0);
        assert!(((w1 - w100) / w1).abs() < 1e-10);
    }

    #[test]
    fn nan_gradient_names_offending_tensor() {
        let mut store = scalar_store(&[
            ("good", ParamGroup::Network, 0.0),
            ("bad", ParamGroup::Network, 0.0),
        ]);
        let bad = store.id("bad").unwrap();
        store.grad_mut(bad).set(0, 0, f64::NAN);
        let mut adam = AdamState::new(&store, GroupRates::uniform(1e-3));
        match adam.step(&mut store) {
            Err(Error::Optimization { tensor, .. }) => assert_eq!(tensor, "bad"),
            other => panic!("expected optimization error, got {other:?}"),
        }
    }

    #[test]
    fn step_counter_increments_by_one() {
        let mut store = scalar_store(&[("w", ParamGroup::Network, 0.0)]);
        let mut adam = AdamState::new(&store, GroupRates::uniform(1e-3));
        for expect in 1..=5 {
            adam.step(&mut store).unwrap();
            assert_eq!(adam.t, expect);
        }
    }

    #[test]
    fn cyclic_factor_ranges_between_low_and_high() {
        let s = Scheduler::Cyclic { low: 1e-5, high: 1e-4, period: 100 };
        let mut min = f64::MAX;
        let mut max: f64 = 0.0;
        for step in 0..200 {
            let f = s.factor(step);
            min = min.min(f);
            max = max.max(f);
        }
        assert!((min - 0.1).abs() < 0.05, "min factor {min}");
        assert!((max - 1.0).abs() < 0.05, "max factor {max}");
    }
}
