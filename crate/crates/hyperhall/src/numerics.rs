//! Shared numerical kernels: dense Hermitian eigensolvers, Chebyshev
//! (Kernel Polynomial Method) filters with Jackson damping, and a
//! conjugate-gradient least-squares solver.
//!
//! Everything here is deterministic: stochastic KPM traces draw from a
//! fixed-seed ChaCha stream.

use ndarray::Array2;
use ndarray_linalg::{Eigh, EigValsh, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues_hermitian(h: &Array2<Complex64>) -> Result<Vec<f64>> {
    let vals = h
        .eigvalsh(UPLO::Lower)
        .map_err(|e| Error::numerical(format!("eigensolver failed: {e}")))?;
    Ok(vals.to_vec())
}

/// Full eigendecomposition of a Hermitian matrix (ascending eigenvalues);
/// eigenvector k is column k of the returned matrix, satisfying H v = λ v.
///
/// The backend receives our row-major buffer column-major, i.e. it actually
/// decomposes Hᵀ = conj(H), so its eigenvectors come back conjugated; we
/// conjugate them again here. A unit test pins this convention via the
/// residual ‖Hv − λv‖ (a conjugated eigenvector of a genuinely complex H
/// fails that residual at O(1), which would silently flip the sign of every
/// Hall conductance downstream).
pub fn eigen_hermitian(h: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let (vals, mut vecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::numerical(format!("eigensolver failed: {e}")))?;
    vecs.mapv_inplace(|z| z.conj());
    Ok((vals.to_vec(), vecs))
}

/// Jackson damping factors g_0..g_deg for a degree-`deg` Chebyshev expansion.
fn jackson_coefficients(deg: usize) -> Vec<f64> {
    let m = (deg + 1) as f64;
    (0..=deg)
        .map(|k| {
            let kf = k as f64;
            ((m - kf) * (std::f64::consts::PI * kf / m).cos()
                + (std::f64::consts::PI * kf / m).sin() / (std::f64::consts::PI / m).tan())
                / m
        })
        .collect()
}

/// Chebyshev coefficients of the step function χ_{x ≤ x0} on [−1, 1],
/// Jackson-damped.
fn step_coefficients(x0: f64, deg: usize) -> Vec<f64> {
    let theta = x0.clamp(-1.0, 1.0).acos();
    let g = jackson_coefficients(deg);
    let mut c = vec![0.0; deg + 1];
    c[0] = (1.0 - theta / std::f64::consts::PI) * g[0];
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        let kf = k as f64;
        *ck = -2.0 * (kf * theta).sin() / (kf * std::f64::consts::PI) * g[k];
    }
    c
}

/// Apply the Jackson-damped Chebyshev expansion of χ_{λ ≤ energy} for the
/// operator behind `apply_h` (assumed Hermitian with spectrum inside
/// [−half_width, half_width]) to the vector `v`.
pub fn chebyshev_filter_apply<F>(
    apply_h: &F,
    v: &[Complex64],
    energy: f64,
    half_width: f64,
    degree: usize,
) -> Vec<Complex64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let coef = step_coefficients(energy / half_width, degree);
    let n = v.len();
    let mut t0 = v.to_vec();
    let mut t1 = apply_h(v);
    for x in &mut t1 {
        *x /= half_width;
    }
    let mut out: Vec<Complex64> = (0..n).map(|i| coef[0] * t0[i] + coef[1] * t1[i]).collect();
    for ck in coef.iter().skip(2) {
        let ht1 = apply_h(&t1);
        let mut t2 = vec![Complex64::default(); n];
        for i in 0..n {
            t2[i] = 2.0 * ht1[i] / half_width - t0[i];
            out[i] += ck * t2[i];
        }
        t0 = t1;
        t1 = t2;
    }
    out
}

/// One column of a spectral projector below `energy`, computed matrix-free:
/// Jackson-damped Chebyshev step filter applied to the basis vector
/// `e_{column}`, then one McWeeny purification step 3w² − 2w³ (evaluated as
/// repeated filter application: all factors are functions of the same H).
pub fn projector_column<F>(
    apply_h: &F,
    n: usize,
    column: usize,
    energy: f64,
    half_width: f64,
    degree: usize,
) -> Vec<Complex64>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut e0 = vec![Complex64::default(); n];
    e0[column] = Complex64::new(1.0, 0.0);
    let w1 = chebyshev_filter_apply(apply_h, &e0, energy, half_width, degree);
    let w2 = chebyshev_filter_apply(apply_h, &w1, energy, half_width, degree);
    let w3 = chebyshev_filter_apply(apply_h, &w2, energy, half_width, degree);
    (0..n).map(|i| 3.0 * w2[i] - 2.0 * w3[i]).collect()
}

/// Kernel-polynomial estimate of the density of states of the operator behind
/// `apply_h`, returned as (energies, density) over `points` samples of
/// (−half_width, half_width). Deterministic: stochastic trace vectors come
/// from a fixed-seed stream.
pub fn kpm_density_of_states<F>(
    apply_h: &F,
    n: usize,
    half_width: f64,
    degree: usize,
    vectors: usize,
    points: usize,
) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b70_6d64);
    let mut mu = vec![0.0f64; degree + 1];
    for _ in 0..vectors {
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        let mut t0 = v.clone();
        let mut t1 = apply_h(&v);
        for x in &mut t1 {
            *x /= half_width;
        }
        mu[0] += v.iter().zip(&t0).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        mu[1] += v.iter().zip(&t1).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        for k in 2..=degree {
            let ht1 = apply_h(&t1);
            let t2: Vec<Complex64> = (0..n)
                .map(|i| 2.0 * ht1[i] / half_width - t0[i])
                .collect();
            mu[k] += v.iter().zip(&t2).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
            t0 = t1;
            t1 = t2;
        }
    }
    let g = jackson_coefficients(degree);
    for (k, m) in mu.iter_mut().enumerate() {
        *m *= g[k] / vectors as f64;
    }
    let mut energies = Vec::with_capacity(points);
    let mut density = Vec::with_capacity(points);
    for j in 0..points {
        let x = -0.999 + 1.998 * j as f64 / (points - 1) as f64;
        let theta = x.acos();
        let mut rho = mu[0];
        for (k, m) in mu.iter().enumerate().skip(1) {
            rho += 2.0 * m * (k as f64 * theta).cos();
        }
        rho /= std::f64::consts::PI * (1.0 - x * x).sqrt();
        energies.push(x * half_width);
        density.push(rho);
    }
    (energies, density)
}

/// Intervals of near-zero density (gaps) in a sampled density of states:
/// maximal runs where ρ < `fraction`·max(ρ), wider than `min_width`.
pub fn density_gaps(
    energies: &[f64],
    density: &[f64],
    fraction: f64,
    min_width: f64,
) -> Vec<(f64, f64)> {
    let peak = density.iter().cloned().fold(0.0f64, f64::max);
    let threshold = fraction * peak;
    let mut gaps = Vec::new();
    let mut lo: Option<f64> = None;
    let mut hi = 0.0;
    for (&e, &r) in energies.iter().zip(density) {
        if r < threshold {
            if lo.is_none() {
                lo = Some(e);
            }
            hi = e;
        } else if let Some(l) = lo.take() {
            if hi - l > min_width {
                gaps.push((l, hi));
            }
        }
    }
    if let Some(l) = lo {
        if hi - l > min_width {
            gaps.push((l, hi));
        }
    }
    gaps
}

/// Least squares min ‖Ax − b‖₂ by CGLS (conjugate gradient on the normal
/// equations in factored form), with A given functionally
/// (apply_a: ℝⁿ → ℝᵐ, apply_at: ℝᵐ → ℝⁿ).
///
/// `tol` is relative: iteration stops once ‖Aᵀr‖ ≤ tol·‖Aᵀb‖. A is allowed
/// to be rank-deficient; the iterate of smallest data-space residual seen is
/// the one returned, and iteration also stops when that residual stagnates
/// (CG past convergence would otherwise drift along the null space).
/// Returns (x, rms residual ‖Ax − b‖/√m).
pub fn least_squares_cgnr<FA, FT>(
    apply_a: &FA,
    apply_at: &FT,
    m: usize,
    n: usize,
    b: &[f64],
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64)
where
    FA: Fn(&[f64]) -> Vec<f64>,
    FT: Fn(&[f64]) -> Vec<f64>,
{
    let norm2 = |v: &[f64]| -> f64 { v.iter().map(|x| x * x).sum() };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec(); // data-space residual b − Ax
    let mut s = apply_at(&r);
    let mut p = s.clone();
    let mut gamma = norm2(&s);
    let gamma0 = gamma;
    let mut best_x = x.clone();
    let mut best_rss = norm2(&r);
    let mut since_improvement = 0usize;
    for _ in 0..max_iters {
        if gamma.sqrt() <= tol * gamma0.sqrt() {
            break;
        }
        let q = apply_a(&p);
        let delta = norm2(&q);
        if delta < f64::MIN_POSITIVE {
            break;
        }
        let alpha = gamma / delta;
        for i in 0..n {
            x[i] += alpha * p[i];
        }
        for i in 0..m {
            r[i] -= alpha * q[i];
        }
        let rss = norm2(&r);
        if rss < best_rss * (1.0 - 1e-12) {
            best_rss = rss;
            best_x.copy_from_slice(&x);
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > 50 {
                break;
            }
        }
        s = apply_at(&r);
        let gamma_new = norm2(&s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for i in 0..n {
            p[i] = s[i] + beta * p[i];
        }
    }
    (best_x, (best_rss / m as f64).sqrt())
}

/// Build an `Array2<Complex64>` from a row-major closure.
pub fn dense_from_fn(
    n: usize,
    f: impl Fn(usize, usize) -> Complex64,
) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |(i, j)| f(i, j))
}

/// Hermiticity defect max|H − H†| of a dense matrix.
pub fn hermiticity_defect(h: &Array2<Complex64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

/// ℓ¹ norm of a complex vector.
pub fn vector_l1_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).sum()
}
