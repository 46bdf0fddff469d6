//! Hyperbolic geometry in the Poincaré disk.
//!
//! Isometries are stored as real 2×2 unit-determinant matrices `(a,b,c,d)`
//! modulo sign (elements of PSL(2,ℝ)); their action on the disk goes through
//! the standard SU(1,1) correspondence. Signed triangle areas are computed by
//! an angle-defect formula phrased in terms of matrix data that stays
//! numerically stable deep into a Cayley ball, where orbit points crowd the
//! boundary circle.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Central tolerance configuration for all geometric/numerical checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// Points must satisfy |z| < 1 − boundary_guard.
    pub boundary_guard: f64,
    /// Unit-determinant deviation allowed on isometries.
    pub det_tol: f64,
    /// Residual threshold for relator/identity checks.
    pub identity_tol: f64,
    /// Relative quantization step for float ball deduplication keys.
    pub quantization: f64,
    /// |trace| − 2 window classifying parabolic vs elliptic/hyperbolic.
    pub trace_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundary_guard: 1e-12,
            det_tol: 1e-12,
            identity_tol: 1e-9,
            quantization: 1e-6,
            trace_tol: 1e-9,
        }
    }
}

/// A point of the open unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub z: Complex64,
}

impl Point {
    pub fn new(z: Complex64) -> Result<Self> {
        let tol = Tolerances::default();
        if z.norm() >= 1.0 - tol.boundary_guard {
            return Err(Error::numerical(format!(
                "point |z| = {} outside the boundary guard",
                z.norm()
            )));
        }
        Ok(Point { z })
    }

    pub fn origin() -> Self {
        Point {
            z: Complex64::new(0.0, 0.0),
        }
    }

    pub fn from_xy(x: f64, y: f64) -> Result<Self> {
        Point::new(Complex64::new(x, y))
    }
}

/// Orientation-preserving isometry of the hyperbolic plane: a real matrix
/// [[a,b],[c,d]] with ad − bc = 1, taken modulo overall sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Classification of an isometry by |trace|.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsometryClass {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!(
                "isometry determinant {det} != 1"
            )));
        }
        let m = Isometry { a, b, c, d };
        Ok(m.renormalized().canonical_sign())
    }

    /// Raw constructor for internal composition chains (no validation).
    pub(crate) fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        Isometry { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Rescale so det = 1 exactly up to roundoff (guards drift in long words).
    pub fn renormalized(&self) -> Self {
        let det = self.det();
        let s = det.abs().sqrt();
        Isometry {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
    }

    /// Canonical sign: first entry of (a,b,c,d) with |entry| > 1e−7 is positive.
    pub fn canonical_sign(&self) -> Self {
        for x in [self.a, self.b, self.c, self.d] {
            if x.abs() > 1e-7 {
                return if x < 0.0 {
                    Isometry {
                        a: -self.a,
                        b: -self.b,
                        c: -self.c,
                        d: -self.d,
                    }
                } else {
                    *self
                };
            }
        }
        *self
    }

    /// Matrix product (in SL(2,ℝ); no sign canonicalization — callers that
    /// need PSL representatives canonicalize explicitly).
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Max-norm distance to the identity after sign canonicalization.
    pub fn identity_residual(&self) -> f64 {
        let m = self.renormalized().canonical_sign();
        [(m.a - 1.0).abs(), m.b.abs(), m.c.abs(), (m.d - 1.0).abs()]
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// SU(1,1) parameters (α, β) of the disk-model action
    /// z ↦ (αz + β)/(β̄z + ᾱ).
    pub fn su11(&self) -> (Complex64, Complex64) {
        let alpha = Complex64::new((self.a + self.d) / 2.0, (self.b - self.c) / 2.0);
        let beta = Complex64::new((self.a - self.d) / 2.0, -(self.b + self.c) / 2.0);
        (alpha, beta)
    }

    /// Rebuild the matrix from SU(1,1) parameters.
    pub fn from_su11(alpha: Complex64, beta: Complex64) -> Isometry {
        Isometry {
            a: alpha.re + beta.re,
            b: alpha.im - beta.im,
            c: -alpha.im - beta.im,
            d: alpha.re - beta.re,
        }
    }

    /// arg(α): the rotation angle data used by the stable area formula.
    pub fn arg_alpha(&self) -> f64 {
        ((self.b - self.c) / 2.0).atan2((self.a + self.d) / 2.0)
    }

    /// Classify by |trace| (identity separated from other parabolics by the
    /// identity residual).
    pub fn classify(&self) -> IsometryClass {
        let tol = Tolerances::default();
        let t = self.renormalized().trace().abs();
        if (t - 2.0).abs() <= tol.trace_tol {
            if self.identity_residual() <= tol.trace_tol {
                IsometryClass::Identity
            } else {
                IsometryClass::Parabolic
            }
        } else if t < 2.0 {
            IsometryClass::Elliptic
        } else {
            IsometryClass::Hyperbolic
        }
    }
}

/// Möbius action on the disk.
pub fn apply(iso: &Isometry, p: &Point) -> Result<Point> {
    let (alpha, beta) = iso.su11();
    let z = p.z;
    let w = (alpha * z + beta) / (beta.conj() * z + alpha.conj());
    Point::new(w)
}

/// Rotation by `angle` about the origin.
pub fn rotation_at_origin(angle: f64) -> Isometry {
    let h = angle / 2.0;
    Isometry::raw(h.cos(), h.sin(), -h.sin(), h.cos())
}

/// Translation by hyperbolic length `l` along the real axis (x-axis in the
/// disk), moving the origin toward +1.
pub fn translation_along_x(l: f64) -> Isometry {
    Isometry::raw((l / 2.0).exp(), 0.0, 0.0, (-l / 2.0).exp())
}

/// Translation by length `l` along the geodesic through the origin in
/// direction `psi`.
pub fn translation_in_direction(psi: f64, l: f64) -> Isometry {
    rotation_at_origin(psi)
        .compose(&translation_along_x(l))
        .compose(&rotation_at_origin(-psi))
}

/// The isometry taking the origin to `p` along the connecting geodesic.
pub fn translation_to(p: &Point) -> Isometry {
    let n2 = p.z.norm_sqr();
    let s = 1.0 / (1.0 - n2).sqrt();
    let alpha = Complex64::new(s, 0.0);
    let beta = p.z * s;
    Isometry::from_su11(alpha, beta)
}

/// Rotation by `angle` about an arbitrary disk point `p`.
pub fn rotation_about(p: &Point, angle: f64) -> Isometry {
    let t = translation_to(p);
    t.compose(&rotation_at_origin(angle)).compose(&t.inverse())
}

/// Hyperbolic distance between two disk points.
pub fn distance(p: &Point, q: &Point) -> f64 {
    let num = (p.z - q.z).norm();
    let den = (Complex64::new(1.0, 0.0) - p.z.conj() * q.z).norm();
    2.0 * (num / den).atanh()
}

/// Wrap to (−π, π].
fn wrap_angle(s: f64) -> f64 {
    s - (s / (2.0 * PI)).round() * 2.0 * PI
}

/// Signed hyperbolic area of the geodesic triangle with the given vertices:
/// magnitude = angle deficit π − Σ angles, sign = orientation (positive for a
/// counterclockwise vertex triple); 0 for degenerate triangles.
///
/// Evaluated as −2·[arg(1 − z̄₁z₂) + arg(1 − z̄₂z₃) + arg(1 − z̄₃z₁)], which is
/// exact for ideal configurations and stable near the boundary circle.
pub fn signed_triangle_area(p1: &Point, p2: &Point, p3: &Point) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let s = (one - p1.z.conj() * p2.z).arg()
        + (one - p2.z.conj() * p3.z).arg()
        + (one - p3.z.conj() * p1.z).arg();
    -2.0 * wrap_angle(s)
}

/// Signed area of the geodesic triangle (o, x·o, (x·y)·o) computed directly
/// from matrix data: 2·wrap(argα(x) + argα(y) − argα(x·y)). Equivalent to
/// [`signed_triangle_area`] on those vertices but immune to the catastrophic
/// cancellation of boundary-crowded orbit points, and therefore the form used
/// by the cocycle machinery. The composition `x·y` is taken in SL(2,ℝ) with
/// the true (non-canonicalized) product: a sign flip would shift argα by π
/// and corrupt the area by ±2π.
pub fn triangle_area_from_matrices(x: &Isometry, y: &Isometry) -> f64 {
    let xy = x.compose(y);
    let s = x.arg_alpha() + y.arg_alpha() - xy.arg_alpha();
    2.0 * wrap_angle(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_identity_and_rotation() {
        let p = Point::from_xy(0.3, 0.0).unwrap();
        let q = apply(&Isometry::identity(), &p).unwrap();
        assert!((q.z - p.z).norm() < 1e-15);
        let r = rotation_about(&Point::origin(), PI);
        let q = apply(&r, &p).unwrap();
        assert!((q.z + p.z).norm() < 1e-12);
    }

    #[test]
    fn composition_consistency() {
        let g = translation_in_direction(0.7, 1.3);
        let h = rotation_about(&Point::from_xy(0.2, -0.1).unwrap(), 1.1);
        let p = Point::from_xy(-0.25, 0.4).unwrap();
        let lhs = apply(&g.compose(&h), &p).unwrap();
        let rhs = apply(&g, &apply(&h, &p).unwrap()).unwrap();
        assert!((lhs.z - rhs.z).norm() < 1e-12);
    }

    #[test]
    fn rotation_orders_and_fixed_points() {
        let p = Point::from_xy(0.31, -0.12).unwrap();
        for nu in [2u32, 3, 5, 7] {
            let r = rotation_about(&p, 2.0 * PI / nu as f64);
            let mut acc = Isometry::identity();
            for _ in 0..nu {
                acc = r.compose(&acc);
            }
            assert!(acc.identity_residual() < 1e-10, "order {nu}");
            let q = apply(&r, &p).unwrap();
            assert!((q.z - p.z).norm() < 1e-12);
        }
        let r = rotation_at_origin(1.234);
        assert!((r.trace().abs() - 2.0 * (1.234f64 / 2.0).cos().abs()).abs() < 1e-12);
    }

    #[test]
    fn distance_closed_form_and_invariance() {
        assert_eq!(distance(&Point::origin(), &Point::origin()), 0.0);
        let r = 0.6;
        let p = Point::from_xy(r, 0.0).unwrap();
        let expect = ((1.0 + r) / (1.0 - r)).ln();
        assert!((distance(&Point::origin(), &p) - expect).abs() < 1e-12);
        let g = translation_in_direction(-0.9, 0.8);
        let q = Point::from_xy(-0.2, 0.35).unwrap();
        let d0 = distance(&p, &q);
        let d1 = distance(&apply(&g, &p).unwrap(), &apply(&g, &q).unwrap());
        assert!((d0 - d1).abs() < 1e-12);
    }

    #[test]
    fn area_degenerate_orientation_and_deficit() {
        let p = Point::from_xy(0.1, 0.2).unwrap();
        let q = Point::from_xy(-0.4, 0.1).unwrap();
        assert_eq!(signed_triangle_area(&p, &p, &q), 0.0);
        let r = Point::from_xy(0.3, -0.5).unwrap();
        let a = signed_triangle_area(&p, &q, &r);
        let b = signed_triangle_area(&q, &p, &r);
        assert!((a + b).abs() < 1e-12);

        // equilateral triangle with known angles: vertices at radius t from
        // the origin, angles 2π/3 apart; interior angle sum < π.
        let t = 0.5;
        let v: Vec<Point> = (0..3)
            .map(|k| {
                let ang = 2.0 * PI * k as f64 / 3.0;
                Point::from_xy(t * ang.cos(), t * ang.sin()).unwrap()
            })
            .collect();
        let area = signed_triangle_area(&v[0], &v[1], &v[2]).abs();
        assert!(area > 0.0 && area < PI);
    }

    #[test]
    fn area_additivity() {
        // s strictly inside triangle pqr: area(pqr) = area(pqs)+area(qrs)+area(rps)
        let p = Point::from_xy(0.5, 0.0).unwrap();
        let q = Point::from_xy(-0.3, 0.45).unwrap();
        let r = Point::from_xy(-0.2, -0.5).unwrap();
        let s = Point::from_xy(0.02, 0.01).unwrap();
        let whole = signed_triangle_area(&p, &q, &r);
        let parts = signed_triangle_area(&p, &q, &s)
            + signed_triangle_area(&q, &r, &s)
            + signed_triangle_area(&r, &p, &s);
        assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn area_isometry_invariance() {
        let p = Point::from_xy(0.5, 0.0).unwrap();
        let q = Point::from_xy(-0.3, 0.45).unwrap();
        let r = Point::from_xy(-0.2, -0.5).unwrap();
        let g = translation_in_direction(0.3, 1.7).compose(&rotation_at_origin(0.9));
        let a0 = signed_triangle_area(&p, &q, &r);
        let a1 = signed_triangle_area(
            &apply(&g, &p).unwrap(),
            &apply(&g, &q).unwrap(),
            &apply(&g, &r).unwrap(),
        );
        assert!((a0 - a1).abs() < 1e-12);
    }

    #[test]
    fn matrix_area_matches_point_area() {
        let x = translation_in_direction(0.4, 1.9);
        let y = rotation_about(&Point::from_xy(0.3, 0.2).unwrap(), 2.0 * PI / 5.0);
        let o = Point::origin();
        let xo = apply(&x, &o).unwrap();
        let xyo = apply(&x.compose(&y), &o).unwrap();
        let via_points = signed_triangle_area(&o, &xo, &xyo);
        let via_matrices = triangle_area_from_matrices(&x, &y);
        assert!(
            (via_points - via_matrices).abs() < 1e-12,
            "{via_points} vs {via_matrices}"
        );
    }

    #[test]
    fn classify_examples() {
        assert_eq!(Isometry::identity().classify(), IsometryClass::Identity);
        let r = rotation_about(&Point::from_xy(0.1, 0.1).unwrap(), 2.0 * PI / 3.0);
        assert_eq!(r.classify(), IsometryClass::Elliptic);
        let t = translation_in_direction(1.0, 0.7);
        assert_eq!(t.classify(), IsometryClass::Hyperbolic);
        // standard parabolic: conjugate of [[1,1],[0,1]]
        let par = Isometry::raw(1.0, 1.0, 0.0, 1.0);
        assert_eq!(par.classify(), IsometryClass::Parabolic);
    }

    #[test]
    fn translation_to_moves_origin() {
        let p = Point::from_xy(0.37, -0.21).unwrap();
        let t = translation_to(&p);
        let img = apply(&t, &Point::origin()).unwrap();
        assert!((img.z - p.z).norm() < 1e-14);
        assert!((t.det() - 1.0).abs() < 1e-12);
    }
}
