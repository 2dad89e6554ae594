//! Self-contained data generation and dataset handling: KS spectral
//! solver, analytic viscous Burgers, traveling Gaussian wave, plus
//! standardization, splitting, and noise injection.

pub mod burgers;
pub mod container;
pub mod ks;
pub mod wave;

pub use burgers::{burgers_solution, gen_burgers_set, BurgersConfig};
pub use ks::{ks_initial_condition, simulate_ks, KsConfig};
pub use wave::{gen_traveling_wave, WaveConfig};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, RandomStream};

/// Provenance carried by a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub generator: String,
    /// Grid size per spatial dimension (cells).
    pub n: usize,
    /// Timestep between stored snapshots.
    pub dt: f64,
    /// Domain length (0 when not applicable).
    pub lx: f64,
    pub seed: u64,
}

impl Default for DatasetMeta {
    fn default() -> Self {
        DatasetMeta { generator: "custom".into(), n: 0, dt: 1.0, lx: 0.0, seed: 0 }
    }
}

/// One trajectory inside a stacked snapshot matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryInfo {
    pub start: usize,
    pub len: usize,
    /// Control parameter of the trajectory (e.g. Reynolds number).
    pub param: f64,
}

/// M x (N*Q) snapshot matrix with optional standardization statistics and
/// train/test split.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub data: DenseMatrix,
    /// Components per cell; features are laid out cell-major, so feature
    /// index `f` belongs to component `f % q`.
    pub q: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub standardized: bool,
    /// Largest |entry| of the raw (pre-standardization) data; noise levels
    /// are defined relative to this.
    pub max_abs_raw: f64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub trajectories: Vec<TrajectoryInfo>,
    pub meta: DatasetMeta,
}

impl SnapshotMatrix {
    pub fn new(data: DenseMatrix, q: usize, meta: DatasetMeta) -> Self {
        assert!(q > 0 && data.cols() % q == 0, "feature count not divisible by q");
        let features = data.cols();
        let max_abs_raw = data.max_abs();
        SnapshotMatrix {
            data,
            q,
            mean: vec![0.0; features],
            std: vec![1.0; features],
            standardized: false,
            max_abs_raw,
            train_idx: Vec::new(),
            test_idx: Vec::new(),
            trajectories: Vec::new(),
            meta,
        }
    }

    pub fn samples(&self) -> usize {
        self.data.rows()
    }

    pub fn features(&self) -> usize {
        self.data.cols()
    }

    pub fn assign_split(&mut self, policy: &SplitPolicy) -> Result<()> {
        let (train, test) = split_dataset(self, policy)?;
        self.train_idx = train;
        self.test_idx = test;
        Ok(())
    }

    pub fn train_rows(&self) -> DenseMatrix {
        self.data.select_rows(&self.train_idx)
    }

    pub fn test_rows(&self) -> DenseMatrix {
        self.data.select_rows(&self.test_idx)
    }

    /// Standardize in place with per-feature statistics computed on the
    /// train split only. Features with raw std below `1e-12` are centered
    /// but not scaled.
    pub fn standardize(&mut self) -> Result<()> {
        if self.standardized {
            return Err(Error::state("snapshot matrix already standardized"));
        }
        if self.train_idx.is_empty() {
            return Err(Error::domain("standardize: empty train split"));
        }
        let f = self.features();
        let m = self.train_idx.len() as f64;
        let mut mean = vec![0.0_f64; f];
        for &i in &self.train_idx {
            for (acc, v) in mean.iter_mut().zip(self.data.row(i)) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= m;
        }
        let mut var = vec![0.0_f64; f];
        for &i in &self.train_idx {
            for ((acc, v), mu) in var.iter_mut().zip(self.data.row(i)).zip(&mean) {
                let d = v - mu;
                *acc += d * d;
            }
        }
        let std: Vec<f64> = var
            .iter()
            .map(|v| {
                let s = (v / m).sqrt();
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        for r in 0..self.data.rows() {
            let row = self.data.row_mut(r);
            for ((x, mu), s) in row.iter_mut().zip(&mean).zip(&std) {
                *x = (*x - mu) / s;
            }
        }
        self.mean = mean;
        self.std = std;
        self.standardized = true;
        Ok(())
    }

    /// Map rows from the standardized representation back to raw units.
    pub fn destandardize(&self, rows: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rows.cols(), self.features());
        let mut out = rows.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            for ((x, mu), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = *x * s + mu;
            }
        }
        out
    }

    /// Noisy copy: zero-mean normal noise with standard deviation
    /// `level * max_abs_raw` in raw units, expressed in the current
    /// representation (per-feature std scaling when standardized).
    pub fn add_noise(&self, level: f64, stream: &mut RandomStream) -> SnapshotMatrix {
        let mut out = self.clone();
        if level == 0.0 {
            return out;
        }
        let sigma_raw = level * self.max_abs_raw;
        let f = self.features();
        for r in 0..out.data.rows() {
            let row = out.data.row_mut(r);
            for c in 0..f {
                let sigma = if self.standardized { sigma_raw / self.std[c] } else { sigma_raw };
                row[c] += sigma * stream.normal();
            }
        }
        out
    }
}

/// How to assign train/test membership.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitPolicy {
    /// Shuffle all row indices with `seed`, first `ratio` to train.
    ShuffledRatio { ratio: f64, seed: u64 },
    /// Whole trajectories by control parameter value.
    ByParameter { train: Vec<f64>, test: Vec<f64> },
    /// First `fraction` of rows (in time order) to train.
    ByTime { fraction: f64 },
}

/// Disjoint train/test row indices under a policy; deterministic for a
/// fixed seed. Indices are returned sorted.
pub fn split_dataset(snapshots: &SnapshotMatrix, policy: &SplitPolicy) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = snapshots.samples();
    if m == 0 {
        return Err(Error::domain("split_dataset: empty snapshot matrix"));
    }
    match policy {
        SplitPolicy::ShuffledRatio { ratio, seed } => {
            if !(0.0..=1.0).contains(ratio) {
                return Err(Error::config(format!("split ratio {ratio} outside [0, 1]")));
            }
            let mut idx: Vec<usize> = (0..m).collect();
            let mut stream = RandomStream::new(*seed);
            stream.shuffle(&mut idx);
            let n_train = (ratio * m as f64).round() as usize;
            let mut train = idx[..n_train].to_vec();
            let mut test = idx[n_train..].to_vec();
            train.sort_unstable();
            test.sort_unstable();
            Ok((train, test))
        }
        SplitPolicy::ByParameter { train, test } => {
            if snapshots.trajectories.is_empty() {
                return Err(Error::config("by-parameter split needs trajectory metadata"));
            }
            for t in train {
                if test.iter().any(|v| v == t) {
                    return Err(Error::config(format!(
                        "parameter {t} appears in both train and test sets"
                    )));
                }
            }
            let collect = |params: &[f64]| -> Result<Vec<usize>> {
                let mut rows = Vec::new();
                for p in params {
                    let tr = snapshots
                        .trajectories
                        .iter()
                        .find(|t| t.param == *p)
                        .ok_or_else(|| {
                            Error::config(format!("no trajectory with parameter {p}"))
                        })?;
                    rows.extend(tr.start..tr.start + tr.len);
                }
                rows.sort_unstable();
                Ok(rows)
            };
            Ok((collect(train)?, collect(test)?))
        }
        SplitPolicy::ByTime { fraction } => {
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::config(format!("split fraction {fraction} outside [0, 1]")));
            }
            let n_train = (fraction * m as f64).round() as usize;
            Ok(((0..n_train).collect(), (n_train..m).collect()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_matrix(m: usize, f: usize, seed: u64) -> SnapshotMatrix {
        let mut stream = RandomStream::new(seed);
        let data = DenseMatrix::from_vec(m, f, (0..m * f).map(|_| stream.normal()).collect());
        SnapshotMatrix::new(data, 1, DatasetMeta::default())
    }

    #[test]
    fn shuffled_ratio_split_counts() {
        let snaps = toy_matrix(2000, 4, 1);
        let (train, test) =
            split_dataset(&snaps, &SplitPolicy::ShuffledRatio { ratio: 0.7, seed: 3 }).unwrap();
        assert_eq!(train.len(), 1400);
        assert_eq!(test.len(), 600);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..2000).collect::<Vec<_>>());
    }

    #[test]
    fn by_time_split_takes_prefix() {
        let snaps = toy_matrix(10, 2, 1);
        let (train, test) = split_dataset(&snaps, &SplitPolicy::ByTime { fraction: 0.5 }).unwrap();
        assert_eq!(train, vec![0, 1, 2, 3, 4]);
        assert_eq!(test, vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn overlapping_parameter_sets_rejected() {
        let mut snaps = toy_matrix(20, 2, 1);
        snaps.trajectories = vec![
            TrajectoryInfo { start: 0, len: 10, param: 100.0 },
            TrajectoryInfo { start: 10, len: 10, param: 200.0 },
        ];
        let bad = SplitPolicy::ByParameter { train: vec![100.0], test: vec![100.0] };
        assert!(matches!(split_dataset(&snaps, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn standardize_statistics_and_round_trip() {
        let mut snaps = toy_matrix(500, 6, 7);
        let raw = snaps.data.clone();
        snaps.assign_split(&SplitPolicy::ShuffledRatio { ratio: 0.7, seed: 1 }).unwrap();
        snaps.standardize().unwrap();

        // already near-standard-normal synthetic data: stats close to (0, 1)
        for c in 0..6 {
            assert!(snaps.mean[c].abs() < 0.2);
            assert!((snaps.std[c] - 1.0).abs() < 0.2);
        }
        // train block is standardized exactly
        let train = snaps.train_rows();
        let m = train.rows() as f64;
        for c in 0..6 {
            let mu: f64 = (0..train.rows()).map(|r| train.get(r, c)).sum::<f64>() / m;
            let var: f64 =
                (0..train.rows()).map(|r| (train.get(r, c) - mu).powi(2)).sum::<f64>() / m;
            assert!(mu.abs() < 1e-10, "col {c} mean {mu}");
            assert!((var.sqrt() - 1.0).abs() < 1e-10, "col {c} std {}", var.sqrt());
        }
        // destandardize restores the raw matrix
        let restored = snaps.destandardize(&snaps.data);
        for (a, b) in restored.as_slice().iter().zip(raw.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_feature_centered_not_divided() {
        let mut data = DenseMatrix::zeros(10, 2);
        for r in 0..10 {
            data.set(r, 0, 5.0); // constant feature
            data.set(r, 1, r as f64);
        }
        let mut snaps = SnapshotMatrix::new(data, 1, DatasetMeta::default());
        snaps.assign_split(&SplitPolicy::ByTime { fraction: 1.0 }).unwrap();
        snaps.standardize().unwrap();
        for r in 0..10 {
            assert_eq!(snaps.data.get(r, 0), 0.0);
        }
        assert_eq!(snaps.std[0], 1.0);
    }

    #[test]
    fn empty_train_split_is_domain_error() {
        let mut snaps = toy_matrix(5, 2, 1);
        snaps.train_idx.clear();
        assert!(matches!(snaps.standardize(), Err(Error::Domain(_))));
    }

    #[test]
    fn noise_level_zero_is_bit_identical_and_pure() {
        let snaps = toy_matrix(20, 5, 9);
        let before = snaps.data.clone();
        let noisy = snaps.add_noise(0.0, &mut RandomStream::new(1));
        assert_eq!(noisy.data.as_slice(), snaps.data.as_slice());
        let noisy2 = snaps.add_noise(0.3, &mut RandomStream::new(1));
        assert_ne!(noisy2.data.as_slice(), snaps.data.as_slice());
        // clean data untouched
        assert_eq!(snaps.data.as_slice(), before.as_slice());
    }

    #[test]
    fn noise_std_matches_level_times_max_abs() {
        let snaps = toy_matrix(400, 250, 33); // 100k entries
        let level = 0.2;
        let noisy = snaps.add_noise(level, &mut RandomStream::new(5));
        let target = level * snaps.max_abs_raw;
        let n = snaps.samples() * snaps.features();
        let mut acc = 0.0;
        for r in 0..snaps.samples() {
            for (a, b) in noisy.data.row(r).iter().zip(snaps.data.row(r)) {
                let d = a - b;
                acc += d * d;
            }
        }
        let emp = (acc / n as f64).sqrt();
        assert!(
            (emp - target).abs() / target < 0.02,
            "empirical {emp} vs target {target}"
        );
    }
}
