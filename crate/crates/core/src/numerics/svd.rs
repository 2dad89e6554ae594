//! Deterministic dense singular value decomposition.
//!
//! Golub-Kahan Householder bidiagonalization followed by implicit-shift QR
//! iteration on the bidiagonal (the classical Golub-Reinsch algorithm).
//! No randomized sketching: the same input always produces the same
//! factorization, and a fixed sign convention (largest-magnitude entry of
//! each left singular vector positive) makes bases reproducible across
//! platforms.

use crate::error::{Error, Result};
use crate::numerics::matrix::DenseMatrix;

/// Thin SVD `A ≈ U · diag(S) · Vt` with `U: m×k`, `S: k`, `Vt: k×n`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: DenseMatrix,
}

/// Top-`k` singular triplets of a dense matrix.
pub fn thin_svd(a: &DenseMatrix, k: usize) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let min_dim = m.min(n);
    if k == 0 || k > min_dim {
        return Err(Error::domain(format!(
            "thin_svd: k={k} out of range 1..={min_dim} for a {m}x{n} matrix"
        )));
    }
    a.validate_finite("thin_svd input")?;

    let (u, s, v) = golub_reinsch(a, true, true)?;
    let u = u.expect("u requested");
    let v = v.expect("v requested");

    let mut uk = DenseMatrix::zeros(m, k);
    let mut vtk = DenseMatrix::zeros(k, n);
    for i in 0..m {
        for j in 0..k {
            uk.set(i, j, u.get(i, j));
        }
    }
    for j in 0..k {
        for i in 0..n {
            vtk.set(j, i, v.get(i, j));
        }
    }
    Ok(SvdResult { u: uk, s: s[..k].to_vec(), vt: vtk })
}

/// All singular values of `a`, descending.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    a.validate_finite("singular_values input")?;
    let (_, s, _) = golub_reinsch(a, false, false)?;
    Ok(s)
}

/// Full Golub-Reinsch SVD with optional accumulation of either factor.
///
/// Returns `(U, S, V)` where `U` is m×min(m,n), `V` is n×min(m,n) (columns
/// are right singular vectors; note V, not Vᵀ), and `S` is sorted
/// descending with the sign convention applied.
pub fn golub_reinsch(
    a: &DenseMatrix,
    want_u: bool,
    want_v: bool,
) -> Result<(Option<DenseMatrix>, Vec<f64>, Option<DenseMatrix>)> {
    let (m, n) = a.shape();
    if m >= n {
        decompose_tall(a, want_u, want_v)
    } else {
        // Work on the transpose and swap the factors back.
        let (u, s, v) = decompose_tall(&a.transpose(), want_v, want_u)?;
        Ok((v, s, u))
    }
}

/// Fortran-style SIGN(a, b): |a| carrying the sign of b.
#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

const MAX_QR_ITERS: usize = 75;

/// Golub-Reinsch on a tall (m >= n) matrix.
#[allow(clippy::needless_range_loop)]
fn decompose_tall(
    input: &DenseMatrix,
    want_u: bool,
    want_v: bool,
) -> Result<(Option<DenseMatrix>, Vec<f64>, Option<DenseMatrix>)> {
    let (m, n) = input.shape();
    debug_assert!(m >= n);
    if n == 0 {
        return Ok((
            want_u.then(|| DenseMatrix::zeros(m, 0)),
            Vec::new(),
            want_v.then(|| DenseMatrix::zeros(0, 0)),
        ));
    }

    // `a` holds the Householder vectors during bidiagonalization and is
    // back-accumulated into the thin U afterwards.
    let mut a = input.clone();
    let mut w = vec![0.0_f64; n]; // diagonal of the bidiagonal
    let mut rv1 = vec![0.0_f64; n]; // superdiagonal (rv1[0] == 0)
    let mut v = DenseMatrix::zeros(n, n);

    // -- Householder bidiagonalization --------------------------------
    let mut g = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut anorm = 0.0_f64;
    for i in 0..n {
        let l = i + 1;
        rv1[i] = scale * g;
        g = 0.0;
        scale = 0.0;
        // left transform: zero a[i+1.., i]
        for k in i..m {
            scale += a.get(k, i).abs();
        }
        if scale != 0.0 {
            let mut s = 0.0;
            for k in i..m {
                let val = a.get(k, i) / scale;
                a.set(k, i, val);
                s += val * val;
            }
            let f = a.get(i, i);
            g = -sign(s.sqrt(), f);
            let h = f * g - s;
            a.set(i, i, f - g);
            for j in l..n {
                let mut s = 0.0;
                for k in i..m {
                    s += a.get(k, i) * a.get(k, j);
                }
                let f = s / h;
                for k in i..m {
                    let val = a.get(k, j) + f * a.get(k, i);
                    a.set(k, j, val);
                }
            }
            for k in i..m {
                let val = a.get(k, i) * scale;
                a.set(k, i, val);
            }
        }
        w[i] = scale * g;

        g = 0.0;
        scale = 0.0;
        // right transform: zero a[i, i+2..]
        if i + 1 != n {
            for k in l..n {
                scale += a.get(i, k).abs();
            }
            if scale != 0.0 {
                let mut s = 0.0;
                for k in l..n {
                    let val = a.get(i, k) / scale;
                    a.set(i, k, val);
                    s += val * val;
                }
                let f = a.get(i, l);
                g = -sign(s.sqrt(), f);
                let h = f * g - s;
                a.set(i, l, f - g);
                for k in l..n {
                    rv1[k] = a.get(i, k) / h;
                }
                for j in l..m {
                    let mut s = 0.0;
                    for k in l..n {
                        s += a.get(j, k) * a.get(i, k);
                    }
                    for k in l..n {
                        let val = a.get(j, k) + s * rv1[k];
                        a.set(j, k, val);
                    }
                }
                for k in l..n {
                    let val = a.get(i, k) * scale;
                    a.set(i, k, val);
                }
            }
        }
        anorm = anorm.max(w[i].abs() + rv1[i].abs());
    }

    // -- accumulate right-hand transformations into V ------------------
    {
        let mut g = 0.0;
        let mut l = n;
        for i in (0..n).rev() {
            if i < n - 1 {
                if g != 0.0 {
                    // double division avoids possible underflow
                    for j in l..n {
                        v.set(j, i, (a.get(i, j) / a.get(i, l)) / g);
                    }
                    for j in l..n {
                        let mut s = 0.0;
                        for k in l..n {
                            s += a.get(i, k) * v.get(k, j);
                        }
                        for k in l..n {
                            let val = v.get(k, j) + s * v.get(k, i);
                            v.set(k, j, val);
                        }
                    }
                }
                for j in l..n {
                    v.set(i, j, 0.0);
                    v.set(j, i, 0.0);
                }
            }
            v.set(i, i, 1.0);
            g = rv1[i];
            l = i;
        }
    }

    // -- accumulate left-hand transformations into a (becomes thin U) --
    for i in (0..n).rev() {
        let l = i + 1;
        let g = w[i];
        for j in l..n {
            a.set(i, j, 0.0);
        }
        if g != 0.0 {
            let ginv = 1.0 / g;
            for j in l..n {
                let mut s = 0.0;
                for k in l..m {
                    s += a.get(k, i) * a.get(k, j);
                }
                let f = (s / a.get(i, i)) * ginv;
                for k in i..m {
                    let val = a.get(k, j) + f * a.get(k, i);
                    a.set(k, j, val);
                }
            }
            for j in i..m {
                let val = a.get(j, i) * ginv;
                a.set(j, i, val);
            }
        } else {
            for j in i..m {
                a.set(j, i, 0.0);
            }
        }
        let val = a.get(i, i) + 1.0;
        a.set(i, i, val);
    }

    let negligible = |x: f64| x.abs() <= f64::EPSILON * anorm;

    // -- implicit-shift QR iteration on the bidiagonal -----------------
    for k in (0..n).rev() {
        let mut converged = false;
        for _iteration in 0..MAX_QR_ITERS {
            // find the split point
            let mut l = k;
            let mut cancel = false;
            loop {
                if negligible(rv1[l]) {
                    break;
                }
                // rv1[0] == 0, so l >= 1 whenever we reach this test
                if negligible(w[l - 1]) {
                    cancel = true;
                    break;
                }
                l -= 1;
            }
            if cancel {
                // w[l-1] ~ 0: rotate rv1[l..=k] out through the U columns
                let mut c = 0.0;
                let mut s = 1.0;
                for i in l..=k {
                    let f = s * rv1[i];
                    rv1[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = w[i];
                    let h = f.hypot(g);
                    w[i] = h;
                    let hinv = 1.0 / h;
                    c = g * hinv;
                    s = -f * hinv;
                    if want_u {
                        for j in 0..m {
                            let y = a.get(j, l - 1);
                            let z = a.get(j, i);
                            a.set(j, l - 1, y * c + z * s);
                            a.set(j, i, z * c - y * s);
                        }
                    }
                }
            }
            let z = w[k];
            if l == k {
                // converged; make the singular value non-negative
                if z < 0.0 {
                    w[k] = -z;
                    for j in 0..n {
                        v.set(j, k, -v.get(j, k));
                    }
                }
                converged = true;
                break;
            }

            // Wilkinson-style shift from the bottom 2x2 minor
            let mut x = w[l];
            let y = w[k - 1];
            let mut g = rv1[k - 1];
            let h = rv1[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + sign(g, f))) - h)) / x;

            // chase the bulge
            let mut c = 1.0;
            let mut s = 1.0;
            for j in l..k {
                let i = j + 1;
                let mut g2 = rv1[i];
                let mut y2 = w[i];
                let mut h2 = s * g2;
                g2 *= c;
                let mut z2 = f.hypot(h2);
                rv1[j] = z2;
                c = f / z2;
                s = h2 / z2;
                f = x * c + g2 * s;
                g2 = g2 * c - x * s;
                h2 = y2 * s;
                y2 *= c;
                if want_v {
                    for jj in 0..n {
                        let xv = v.get(jj, j);
                        let zv = v.get(jj, i);
                        v.set(jj, j, xv * c + zv * s);
                        v.set(jj, i, zv * c - xv * s);
                    }
                }
                z2 = f.hypot(h2);
                w[j] = z2;
                if z2 != 0.0 {
                    let zinv = 1.0 / z2;
                    c = f * zinv;
                    s = h2 * zinv;
                }
                f = c * g2 + s * y2;
                x = c * y2 - s * g2;
                if want_u {
                    for jj in 0..m {
                        let yu = a.get(jj, j);
                        let zu = a.get(jj, i);
                        a.set(jj, j, yu * c + zu * s);
                        a.set(jj, i, zu * c - yu * s);
                    }
                }
            }
            rv1[l] = 0.0;
            rv1[k] = f;
            w[k] = x;
        }
        if !converged {
            return Err(Error::domain(format!(
                "svd failed to converge for singular value {k} after {MAX_QR_ITERS} iterations"
            )));
        }
    }

    // -- sort descending and fix signs ---------------------------------
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).unwrap().then(i.cmp(&j)));

    let s_sorted: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let mut u_sorted = want_u.then(|| DenseMatrix::zeros(m, n));
    let mut v_sorted = want_v.then(|| DenseMatrix::zeros(n, n));
    for (new_j, &old_j) in order.iter().enumerate() {
        // sign fix keyed on U when available, else on V
        let flip = if want_u {
            let mut best = 0.0_f64;
            let mut best_val = 0.0_f64;
            for i in 0..m {
                let val = a.get(i, old_j);
                if val.abs() > best {
                    best = val.abs();
                    best_val = val;
                }
            }
            best_val < 0.0
        } else if want_v {
            let mut best = 0.0_f64;
            let mut best_val = 0.0_f64;
            for i in 0..n {
                let val = v.get(i, old_j);
                if val.abs() > best {
                    best = val.abs();
                    best_val = val;
                }
            }
            best_val < 0.0
        } else {
            false
        };
        let sgn = if flip { -1.0 } else { 1.0 };
        if let Some(us) = u_sorted.as_mut() {
            for i in 0..m {
                us.set(i, new_j, sgn * a.get(i, old_j));
            }
        }
        if let Some(vs) = v_sorted.as_mut() {
            for i in 0..n {
                vs.set(i, new_j, sgn * v.get(i, old_j));
            }
        }
    }

    Ok((u_sorted, s_sorted, v_sorted))
}
