//! 1D Kuramoto-Sivashinsky solver.
//!
//! u_t + u u_x + u_xx + u_xxxx = 0 on [0, Lx) with periodic boundaries,
//! Fourier pseudospectral in space. Per Fourier mode q the linear part
//! L(q) = q^2 - q^4 is integrated with Crank-Nicolson and the nonlinear
//! term N(u) = -1/2 d/dx (u^2) with Adams-Bashforth-2 (forward Euler on
//! the first step). The quadratic product is dealiased with the 2/3 rule.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::datasets::{DatasetMeta, SnapshotMatrix};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, RandomStream};

#[derive(Debug, Clone)]
pub struct KsConfig {
    /// Domain length, 64*pi in the reference setup.
    pub lx: f64,
    /// Grid size; must be a power of two.
    pub n: usize,
    pub dt: f64,
    /// Number of stored snapshots (after the transient).
    pub n_steps: usize,
    /// Leading integration steps discarded as transient.
    pub transient_skip: usize,
    pub seed: u64,
    /// Number of random sine/cosine modes in the initial condition.
    pub n_modes: usize,
}

impl Default for KsConfig {
    fn default() -> Self {
        KsConfig {
            lx: 64.0 * std::f64::consts::PI,
            n: 512,
            dt: 0.01,
            n_steps: 2000,
            transient_skip: 500,
            seed: 1,
            n_modes: 10,
        }
    }
}

impl KsConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(Error::config(format!("KS grid size {} must be a power of two >= 16", self.n)));
        }
        if self.dt <= 0.0 {
            return Err(Error::config("KS dt must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::config("KS n_steps must be >= 1"));
        }
        Ok(())
    }
}

/// Initial condition: sum of `n_modes` random sine+cosine waves with
/// amplitudes A_k ~ U(-1,1), phases phi_k ~ U(0,2pi), integer wavenumbers
/// n_k ~ U{1..6}.
pub fn ks_initial_condition(config: &KsConfig, stream: &mut RandomStream) -> Vec<f64> {
    let mut amps = Vec::with_capacity(config.n_modes);
    for _ in 0..config.n_modes {
        let a = stream.uniform_in(-1.0, 1.0);
        let phi = stream.uniform_in(0.0, 2.0 * std::f64::consts::PI);
        let nk = stream.int_range(1, 6) as f64;
        amps.push((a, phi, nk));
    }
    (0..config.n)
        .map(|i| {
            let x = config.lx * i as f64 / config.n as f64;
            amps.iter()
                .map(|&(a, phi, nk)| {
                    let arg = 2.0 * std::f64::consts::PI * nk * x / config.lx + phi;
                    a * (arg.sin() + arg.cos())
                })
                .sum()
        })
        .collect()
}

struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Spectral { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Forward transform normalized by 1/n, so coefficient 0 is the mean.
    fn to_spectral(&self, u: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    fn to_physical(&self, hat: &[Complex<f64>]) -> Vec<f64> {
        let mut buf = hat.to_vec();
        self.inv.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

/// Signed wavenumber index for FFT bin j.
#[inline]
fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Integrate the KS equation and return the stored trajectory
/// (n_steps x n), wrapped with dataset metadata.
pub fn simulate_ks(config: &KsConfig, stream: &mut RandomStream) -> Result<SnapshotMatrix> {
    let u0 = ks_initial_condition(config, stream);
    let traj = integrate_ks(config, &u0)?;
    let meta = DatasetMeta {
        generator: "ks".into(),
        n: config.n,
        dt: config.dt,
        lx: config.lx,
        seed: config.seed,
    };
    Ok(SnapshotMatrix::new(traj, 1, meta))
}

/// Integrate from a given initial condition; snapshots are recorded after
/// each step once the transient is past.
pub fn integrate_ks(config: &KsConfig, u0: &[f64]) -> Result<DenseMatrix> {
    config.validate()?;
    if u0.len() != config.n {
        return Err(Error::validation(format!(
            "initial condition has {} points, expected {}",
            u0.len(),
            config.n
        )));
    }
    let n = config.n;
    let spectral = Spectral::new(n);
    let dt = config.dt;

    // linear symbol L = q^2 - q^4 per mode
    let lin: Vec<f64> = (0..n)
        .map(|j| {
            let q = 2.0 * std::f64::consts::PI * signed_index(j, n) as f64 / config.lx;
            q * q - q.powi(4)
        })
        .collect();
    // 2/3-rule dealiasing mask for the quadratic term
    let cutoff = (n as f64 / 3.0).floor() as i64;
    let keep: Vec<bool> = (0..n).map(|j| signed_index(j, n).abs() <= cutoff).collect();
    // d/dx symbol i*q
    let deriv: Vec<Complex<f64>> = (0..n)
        .map(|j| {
            let q = 2.0 * std::f64::consts::PI * signed_index(j, n) as f64 / config.lx;
            Complex::new(0.0, q)
        })
        .collect();

    let nonlinear = |u_hat: &[Complex<f64>]| -> Vec<Complex<f64>> {
        let u = spectral.to_physical(u_hat);
        let u2: Vec<f64> = u.iter().map(|v| v * v).collect();
        let mut u2_hat = spectral.to_spectral(&u2);
        for j in 0..n {
            u2_hat[j] = if keep[j] {
                -0.5 * deriv[j] * u2_hat[j]
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        u2_hat
    };

    let total_steps = config.transient_skip + config.n_steps;
    let mut out = DenseMatrix::zeros(config.n_steps, n);

    let mut u_hat = spectral.to_spectral(u0);
    let mut n_prev = nonlinear(&u_hat);
    let mut stored = 0;
    for step in 0..total_steps {
        let n_curr = nonlinear(&u_hat);
        let (cn, cp) = if step == 0 {
            (1.0, 0.0) // forward Euler on the nonlinear term
        } else {
            (1.5, -0.5)
        };
        for j in 0..n {
            let num = u_hat[j] * (1.0 + 0.5 * dt * lin[j])
                + dt * (cn * n_curr[j] + cp * n_prev[j]);
            u_hat[j] = num / (1.0 - 0.5 * dt * lin[j]);
        }
        n_prev = n_curr;

        let u = spectral.to_physical(&u_hat);
        let max = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !max.is_finite() || max > 1e6 {
            return Err(Error::Simulation {
                step,
                message: format!("KS solution blow-up, max |u| = {max:e}"),
            });
        }
        if step >= config.transient_skip {
            out.row_mut(stored).copy_from_slice(&u);
            stored += 1;
        }
    }
    debug_assert_eq!(stored, config.n_steps);
    Ok(out)
}
