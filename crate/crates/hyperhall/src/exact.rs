//! Exact integer arithmetic for the genus-2 octagon surface group.
//!
//! The regular-octagon side-pairing translations have matrix entries in the
//! degree-4 number field ℚ(s), where s = sinh(ℓ/2) satisfies s⁴ = 4s² + 4
//! and cosh(ℓ/2) = 1 + √2 = s²/2 (ℓ is the pairing translation length,
//! cosh(ℓ/2) = cot(π/8)). Scaling by 4 clears denominators, so every group
//! element is represented by an integer 2×2 matrix over ℤ[s]/(s⁴−4s²−4)
//! together with an implicit positive scale. Reducing to the primitive,
//! sign-canonical integer matrix gives a *perfect* deduplication key in
//! PSL(2,ℝ): floating-point keys provably break at Cayley radius 6, where the
//! discreteness separation (~e^{−ℓR}) drops below any practical quantization.

use crate::error::{Error, Result};
use crate::geometry::Isometry;

/// Element of ℤ[s]/(s⁴ − 4s² − 4): coefficients of (1, s, s², s³).
pub type FieldInt = [i128; 4];

pub const FE_ZERO: FieldInt = [0, 0, 0, 0];

/// Numerical value of s = sinh(ℓ/2) = √(2 + 2√2).
pub fn s_value() -> f64 {
    (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt()
}

fn fe_add(a: &FieldInt, b: &FieldInt) -> FieldInt {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn fe_neg(a: &FieldInt) -> FieldInt {
    [-a[0], -a[1], -a[2], -a[3]]
}

fn fe_mul(a: &FieldInt, b: &FieldInt) -> FieldInt {
    let mut c = [0i128; 7];
    for i in 0..4 {
        if a[i] == 0 {
            continue;
        }
        for j in 0..4 {
            c[i + j] += a[i] * b[j];
        }
    }
    // reduce with s⁴ = 4s² + 4, s⁵ = 4s³ + 4s, s⁶ = 20s² + 16
    c[2] += 20 * c[6];
    c[0] += 16 * c[6];
    c[3] += 4 * c[5];
    c[1] += 4 * c[5];
    c[2] += 4 * c[4];
    c[0] += 4 * c[4];
    [c[0], c[1], c[2], c[3]]
}

fn fe_value(a: &FieldInt) -> f64 {
    let s = s_value();
    a[0] as f64 + a[1] as f64 * s + a[2] as f64 * s * s + a[3] as f64 * s * s * s
}

/// Scaled-integer matrix (a,b,c,d) over ℤ[s]; represents the PSL(2,ℝ)
/// element (matrix)/(positive scale), the scale being implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactMat {
    pub m: [FieldInt; 4],
}

/// Coefficient bound beyond which we refuse to continue (long before i128
/// products can overflow: |entry| < 2⁶⁰ keeps fe_mul sums < 2¹²⁷).
const COEFF_LIMIT: i128 = 1 << 60;

impl ExactMat {
    pub fn identity() -> Self {
        ExactMat {
            m: [[1, 0, 0, 0], FE_ZERO, FE_ZERO, [1, 0, 0, 0]],
        }
    }

    pub fn compose(&self, o: &ExactMat) -> Result<ExactMat> {
        let [a1, b1, c1, d1] = &self.m;
        let [a2, b2, c2, d2] = &o.m;
        let out = ExactMat {
            m: [
                fe_add(&fe_mul(a1, a2), &fe_mul(b1, c2)),
                fe_add(&fe_mul(a1, b2), &fe_mul(b1, d2)),
                fe_add(&fe_mul(c1, a2), &fe_mul(d1, c2)),
                fe_add(&fe_mul(c1, b2), &fe_mul(d1, d2)),
            ],
        };
        for e in &out.m {
            for &x in e {
                if x.abs() > COEFF_LIMIT {
                    return Err(Error::numerical(
                        "exact octagon arithmetic overflow: radius too large",
                    ));
                }
            }
        }
        Ok(out)
    }

    /// Inverse up to positive scale (det·M⁻¹): same PSL element as M⁻¹.
    pub fn inverse_scaled(&self) -> ExactMat {
        let [a, b, c, d] = &self.m;
        ExactMat {
            m: [*d, fe_neg(b), fe_neg(c), *a],
        }
    }

    /// Primitive sign-canonical key: divide out the integer content, then
    /// make the first nonzero coefficient positive. Unique per PSL element.
    pub fn canonical_key(&self) -> [i128; 16] {
        let mut flat = [0i128; 16];
        for (i, e) in self.m.iter().enumerate() {
            flat[i * 4..i * 4 + 4].copy_from_slice(e);
        }
        let mut g: i128 = 0;
        for &x in &flat {
            g = gcd_i128(g, x);
        }
        if g > 1 {
            for x in &mut flat {
                *x /= g;
            }
        }
        for &x in &flat {
            if x != 0 {
                if x < 0 {
                    for y in &mut flat {
                        *y = -*y;
                    }
                }
                break;
            }
        }
        flat
    }

    /// Determinant-normalized float matrix (det of the scaled integer matrix
    /// is a positive square of the scale, so the sign of the representative
    /// is preserved).
    pub fn to_isometry(&self) -> Isometry {
        let a = fe_value(&self.m[0]);
        let b = fe_value(&self.m[1]);
        let c = fe_value(&self.m[2]);
        let d = fe_value(&self.m[3]);
        let det = a * d - b * c;
        let s = det.sqrt();
        Isometry::raw(a / s, b / s, c / s, d / s)
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// The four octagon side-pairing translations 4·T_k, k = 0..3, where
/// T_k translates by ℓ along the direction kπ/4:
/// 4·T_k = 2s²·I + 4s·[[cos ψ, −sin ψ], [−sin ψ, −cos ψ]] at ψ = kπ/4
/// (and 4s·(√2/2) = s³ − 2s keeps entries integral at odd k).
fn octagon_translation(k: usize) -> ExactMat {
    let two_s2: FieldInt = [0, 0, 2, 0];
    let four_s: FieldInt = [0, 4, 0, 0];
    let s3m2s: FieldInt = [0, -2, 0, 1];
    let (c, s_) = match k {
        0 => (four_s, FE_ZERO),
        1 => (s3m2s, s3m2s),
        2 => (FE_ZERO, four_s),
        3 => (fe_neg(&s3m2s), s3m2s),
        _ => unreachable!(),
    };
    ExactMat {
        m: [
            fe_add(&two_s2, &c),
            fe_neg(&s_),
            fe_neg(&s_),
            fe_add(&two_s2, &fe_neg(&c)),
        ],
    }
}

/// Exact standard generators (A₁, B₁, A₂, B₂) of the genus-2 surface group:
/// A₁ = T₀, B₁ = T₁, A₂ = T₁T₃⁻¹T₀⁻¹, B₂ = T₀T₂T₁⁻¹, which satisfy
/// [A₁,B₁][A₂,B₂] = 1 identically in ℤ[s].
pub fn octagon_generators() -> [ExactMat; 4] {
    let t: Vec<ExactMat> = (0..4).map(octagon_translation).collect();
    let a1 = t[0];
    let b1 = t[1];
    let a2 = t[1]
        .compose(&t[3].inverse_scaled())
        .and_then(|m| m.compose(&t[0].inverse_scaled()))
        .expect("no overflow at word length 3");
    let b2 = t[0]
        .compose(&t[2])
        .and_then(|m| m.compose(&t[1].inverse_scaled()))
        .expect("no overflow at word length 3");
    [a1, b1, a2, b2]
}
