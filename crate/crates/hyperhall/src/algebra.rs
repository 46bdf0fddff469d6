//! The twisted group algebra on a Cayley ball.
//!
//! Elements are finitely supported functions a: Γ → ℂ stored densely over
//! ball ids. The σ-twisted convolution, the star involution, and the left
//! σ-regular representation (finite matrices over the ball) are implemented
//! exactly as sums over located products; truncation at the ball boundary is
//! always surfaced (either a hard error or a reported escaped mass).

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cocycles::multiplier;
use crate::error::{Error, Result};
use crate::groups::{cayley_ball, CayleyBall, Realization};
use crate::numerics::{eigenvalues_hermitian, hermiticity_defect};

/// A finitely supported element of the twisted algebra, indexed by ball ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub coeffs: Vec<Complex64>,
}

impl AlgebraElement {
    pub fn zeros(ball: &CayleyBall) -> Self {
        AlgebraElement {
            coeffs: vec![Complex64::new(0.0, 0.0); ball.len()],
        }
    }

    /// δ_γ for a single ball element.
    pub fn delta(ball: &CayleyBall, id: u32) -> Self {
        let mut e = Self::zeros(ball);
        e.coeffs[id as usize] = Complex64::new(1.0, 0.0);
        e
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        AlgebraElement { coeffs }
    }

    /// Ids with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(i, c)| (i as u32, *c))
    }

    /// Canonical trace τ(a) = a(e).
    pub fn trace(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Largest word length carrying a nonzero coefficient.
    pub fn support_radius(&self, ball: &CayleyBall) -> u32 {
        self.support()
            .map(|(id, _)| ball.word_length(id))
            .max()
            .unwrap_or(0)
    }
}

/// What to do with convolution mass that lands outside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionMode {
    /// Any escaping product is a hard numerical error.
    Strict,
    /// Drop escaping products, but report their ℓ¹ mass.
    Truncate,
}

/// Result of a twisted convolution.
#[derive(Debug, Clone)]
pub struct Convolution {
    pub element: AlgebraElement,
    /// ℓ¹ mass of the products that fell outside the ball (0 in strict mode).
    pub escaped_l1: f64,
}

/// σ-twisted convolution (a ⋆ b)(γ) = Σ_{γ₁γ₂=γ} a(γ₁) b(γ₂) σ(γ₁, γ₂).
pub fn convolve(
    ball: &CayleyBall,
    theta_tilde: f64,
    a: &AlgebraElement,
    b: &AlgebraElement,
    mode: ConvolutionMode,
) -> Result<Convolution> {
    let mut out = AlgebraElement::zeros(ball);
    let mut escaped = 0.0;
    for (x, ax) in a.support() {
        for (y, by) in b.support() {
            match ball.multiply(x, y) {
                Some(xy) => {
                    out.coeffs[xy as usize] += ax * by * multiplier(ball, theta_tilde, x, y);
                }
                None => {
                    let mass = (ax * by).norm();
                    if mode == ConvolutionMode::Strict {
                        return Err(Error::numerical(format!(
                            "convolution product escaped the ball (|a(x)b(y)| = {mass:.3e}); \
                             enlarge the radius or use truncating mode"
                        )));
                    }
                    escaped += mass;
                }
            }
        }
    }
    Ok(Convolution {
        element: out,
        escaped_l1: escaped,
    })
}

/// Star involution a*(γ) = conj(a(γ⁻¹)). (The multiplier factor σ(γ, γ⁻¹)
/// is 1 here because the area of the degenerate triangle (o, γ·o, o)
/// vanishes, so it does not appear.)
pub fn star(ball: &CayleyBall, a: &AlgebraElement) -> AlgebraElement {
    let mut out = AlgebraElement::zeros(ball);
    for (x, ax) in a.support() {
        out.coeffs[ball.inverse(x) as usize] = ax.conj();
    }
    out
}

/// The generalized Harper element h = Σ_{s∈S} δ_s over the symmetric
/// generating set, as a multiset: an order-2 cone generator equals its own
/// inverse and contributes multiplicity 2 when `doubled` is set (the default
/// convention, which keeps ‖h‖ = |S| counted with multiplicity).
pub fn harper_element(ball: &CayleyBall, doubled: bool) -> AlgebraElement {
    let mut h = AlgebraElement::zeros(ball);
    for s in &ball.s_set {
        let id = ball
            .element_for_word(&[s.letter])
            .expect("generators lie in any ball of radius >= 1");
        let w = if s.merged_involution && doubled { 2.0 } else { 1.0 };
        h.coeffs[id as usize] += Complex64::new(w, 0.0);
    }
    h
}

/// Left σ-regular representation of an algebra element on the ball:
/// M[x, y] = a(x·y⁻¹)·σ(x·y⁻¹, y). Self-adjoint elements (a* = a) give
/// Hermitian matrices up to roundoff.
pub fn matrix_on_ball(
    ball: &CayleyBall,
    theta_tilde: f64,
    a: &AlgebraElement,
) -> Array2<Complex64> {
    let n = ball.len();
    let support: Vec<(u32, Complex64)> = a.support().collect();
    let mut m = Array2::zeros((n, n));
    for y in 0..n as u32 {
        for &(g, ag) in &support {
            if let Some(x) = ball.multiply(g, y) {
                m[(x as usize, y as usize)] += ag * multiplier(ball, theta_tilde, g, y);
            }
        }
    }
    m
}

/// Eigenvalues of the σ-regular matrix of a self-adjoint element, sorted
/// ascending. Errors (numerical) if the matrix fails the Hermiticity audit,
/// which would mean the ball's adjacency is inconsistent.
pub fn spectrum(
    ball: &CayleyBall,
    theta_tilde: f64,
    a: &AlgebraElement,
) -> Result<Vec<f64>> {
    let m = matrix_on_ball(ball, theta_tilde, a);
    let defect = hermiticity_defect(&m);
    if defect > 1e-9 {
        return Err(Error::numerical(format!(
            "regular representation is not Hermitian (defect {defect:.3e})"
        )));
    }
    eigenvalues_hermitian(&m)
}

/// Harper spectrum at one flux.
pub fn harper_spectrum(ball: &CayleyBall, theta_tilde: f64) -> Result<Vec<f64>> {
    spectrum(ball, theta_tilde, &harper_element(ball, true))
}

/// One row of a butterfly sweep.
#[derive(Debug, Clone)]
pub struct ButterflyPoint {
    pub theta_tilde: f64,
    pub theta: f64,
    pub eigenvalues: Vec<f64>,
}

/// Harper spectra over an inclusive uniform grid of θ̃ ∈ [0, max], computed
/// in parallel over grid indices with a deterministic output order.
pub fn butterfly(
    real: &Realization,
    radius: u32,
    theta_tilde_max: f64,
    steps: u32,
) -> Result<Vec<ButterflyPoint>> {
    if steps == 0 {
        return Err(Error::validation("butterfly needs at least one grid step"));
    }
    let ball = cayley_ball(real, radius)?;
    let points: Result<Vec<ButterflyPoint>> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let tt = theta_tilde_max * k as f64 / steps as f64;
            let eigenvalues = harper_spectrum(&ball, tt)?;
            Ok(ButterflyPoint {
                theta_tilde: tt,
                theta: crate::cocycles::flux_theta(&real.signature, tt),
                eigenvalues,
            })
        })
        .collect();
    points
}

/// Spectral gaps of a sorted eigenvalue list: maximal open intervals between
/// consecutive eigenvalues wider than `min_width`.
pub fn spectral_gaps(eigenvalues: &[f64], min_width: f64) -> Vec<(f64, f64)> {
    let mut gaps = Vec::new();
    for w in eigenvalues.windows(2) {
        if w[1] - w[0] > min_width {
            gaps.push((w[0], w[1]));
        }
    }
    gaps
}

/// Gaps of the Harper spectrum that persist when the truncation radius drops
/// by one: the intersection of the gap lists at `radius` and `radius − 1`,
/// which screens out gaps that are artifacts of one particular truncation.
pub fn stable_gaps(
    real: &Realization,
    radius: u32,
    theta_tilde: f64,
    min_width: f64,
) -> Result<Vec<(f64, f64)>> {
    if radius < 2 {
        return Err(Error::validation("gap stability needs radius >= 2"));
    }
    let ball_hi = cayley_ball(real, radius)?;
    let ball_lo = cayley_ball(real, radius - 1)?;
    let hi = spectral_gaps(&harper_spectrum(&ball_hi, theta_tilde)?, min_width);
    let lo = spectral_gaps(&harper_spectrum(&ball_lo, theta_tilde)?, min_width);
    let mut out = Vec::new();
    for &(l1, h1) in &hi {
        for &(l2, h2) in &lo {
            let lo_e = l1.max(l2);
            let hi_e = h1.min(h2);
            if hi_e - lo_e > min_width {
                out.push((lo_e, hi_e));
            }
        }
    }
    Ok(out)
}
