//! Exact rational invariants of an orbifold signature `(g; ν₁,…,νₙ)` and of
//! its twisted group C*-algebra: Euler characteristic, conductance quantum φ,
//! K-theory ranks, the range of the canonical trace and its minimal positive
//! element, smooth covering data, the isomorphism classification of twists,
//! and Seifert/Chern bookkeeping for orbifold line bundles.
//!
//! Everything in this module is exact: all arithmetic is in ℚ via reduced
//! `Rational` values; no floats, no tolerances.

use crate::error::{Error, Result};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use std::f64::consts::TAU;
use std::fmt;

/// Exact rational number, always in lowest terms.
pub type Rational = Ratio<i64>;

/// Render a rational as `"p/q"` (or `"p"` when the denominator is 1).
/// All exact quantities cross the CLI boundary in this form, never as floats.
pub fn rational_string(r: &Rational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = n
        .parse()
        .map_err(|_| Error::validation(format!("bad rational numerator in {s:?}")))?;
    let d: i64 = d
        .parse()
        .map_err(|_| Error::validation(format!("bad rational denominator in {s:?}")))?;
    if d == 0 {
        return Err(Error::validation(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// Geometry class of a signature, by the sign of its orbifold Euler
/// characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryClass {
    Hyperbolic,
    Euclidean,
    Spherical,
}

impl fmt::Display for GeometryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryClass::Hyperbolic => write!(f, "hyperbolic"),
            GeometryClass::Euclidean => write!(f, "euclidean"),
            GeometryClass::Spherical => write!(f, "spherical"),
        }
    }
}

/// An orbifold signature `(g; ν₁,…,νₙ)`: genus plus cone orders (each ≥ 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub genus: u32,
    pub cone_orders: Vec<u32>,
}

impl Signature {
    /// Validating constructor: every cone order must be ≥ 2.
    pub fn new(genus: u32, cone_orders: Vec<u32>) -> Result<Self> {
        if let Some(bad) = cone_orders.iter().find(|&&v| v < 2) {
            return Err(Error::validation(format!(
                "cone order {bad} < 2 in signature"
            )));
        }
        Ok(Signature { genus, cone_orders })
    }

    /// Parse the CLI grammar `"g;v1,v2,..."` (empty order list permitted,
    /// e.g. `"2;"` for a smooth genus-2 surface).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (g, rest) = s
            .split_once(';')
            .ok_or_else(|| Error::validation(format!("signature {s:?}: expected \"g;v1,v2,...\"")))?;
        let genus: u32 = g
            .trim()
            .parse()
            .map_err(|_| Error::validation(format!("signature {s:?}: bad genus {g:?}")))?;
        let rest = rest.trim();
        let cone_orders = if rest.is_empty() {
            vec![]
        } else {
            rest.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::validation(format!("signature {s:?}: bad cone order {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Signature::new(genus, cone_orders)
    }

    /// Canonical string form `g;v1,v2,...`.
    pub fn canonical_string(&self) -> String {
        let orders: Vec<String> = self.cone_orders.iter().map(|v| v.to_string()).collect();
        format!("{};{}", self.genus, orders.join(","))
    }

    pub fn n_cone_points(&self) -> usize {
        self.cone_orders.len()
    }

    /// ν = Σ 1/νⱼ, exact.
    pub fn nu_sum(&self) -> Rational {
        self.cone_orders
            .iter()
            .map(|&v| Rational::new(1, v as i64))
            .sum()
    }

    pub fn geometry_class(&self) -> GeometryClass {
        let chi = orbifold_euler_characteristic(self);
        if chi.is_negative() {
            GeometryClass::Hyperbolic
        } else if chi.is_zero() {
            GeometryClass::Euclidean
        } else {
            GeometryClass::Spherical
        }
    }

    /// Hyperbolic area of a fundamental domain, `2π·φ` (Gauss–Bonnet).
    pub fn fundamental_area(&self) -> f64 {
        let p = phi(self);
        TAU * (*p.numer() as f64) / (*p.denom() as f64)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.canonical_string())
    }
}

/// χ_orb = 2 − 2g − Σ(1 − 1/νⱼ), exact.
pub fn orbifold_euler_characteristic(sig: &Signature) -> Rational {
    let g = sig.genus as i64;
    let n = sig.n_cone_points() as i64;
    Rational::from_integer(2 - 2 * g - n) + sig.nu_sum()
}

/// φ = 2(g−1) + (n − ν) = −χ_orb: the Hall-conductance quantum.
pub fn phi(sig: &Signature) -> Rational {
    -orbifold_euler_characteristic(sig)
}

/// K-theory ranks of the twisted group C*-algebra:
/// K₀ has rank 2 − n + Σνⱼ and K₁ has rank 2g.
pub fn k_theory_ranks(sig: &Signature) -> (i64, i64) {
    let sum_nu: i64 = sig.cone_orders.iter().map(|&v| v as i64).sum();
    let k0 = 2 - sig.n_cone_points() as i64 + sum_nu;
    let k1 = 2 * sig.genus as i64;
    (k0, k1)
}

/// The flux parameter θ of a trace lattice: an exact rational in (0,1] or a
/// tagged irrational symbol (kept symbolic; no decimal approximation).
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaValue {
    Rational(Rational),
    Irrational(String),
}

/// The range of the canonical trace on K₀: the subgroup
/// ℤθ + ℤ + Σᵢ ℤ(1/νᵢ) of (ℝ, +).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLattice {
    /// Deduplicated rational generators (1 and the 1/νᵢ, plus θ if rational).
    pub rational_generators: Vec<Rational>,
    /// Present when θ is kept symbolic.
    pub irrational_generator: Option<String>,
}

/// Build the trace lattice for a signature at flux θ ∈ (0,1].
pub fn trace_range(sig: &Signature, theta: &ThetaValue) -> Result<TraceLattice> {
    if let ThetaValue::Rational(t) = theta {
        if *t <= Rational::zero() || *t > Rational::one() {
            return Err(Error::validation(format!(
                "theta {} outside (0,1]",
                rational_string(t)
            )));
        }
    }
    let mut gens: Vec<Rational> = vec![Rational::one()];
    for &v in &sig.cone_orders {
        gens.push(Rational::new(1, v as i64));
    }
    let irrational = match theta {
        ThetaValue::Rational(t) => {
            gens.push(*t);
            None
        }
        ThetaValue::Irrational(tag) => Some(tag.clone()),
    };
    gens.sort();
    gens.dedup();
    gens.reverse(); // largest first: (1, 1/2, 1/3, …)
    Ok(TraceLattice {
        rational_generators: gens,
        irrational_generator: irrational,
    })
}

impl TraceLattice {
    /// Minimal positive element when fully rational: gcd of the numerators
    /// over the common denominator. `None` when an irrational generator is
    /// present (the lattice is then dense).
    pub fn minimal_positive(&self) -> Option<Rational> {
        if self.irrational_generator.is_some() {
            return None;
        }
        let denom = self
            .rational_generators
            .iter()
            .fold(1i64, |l, r| l.lcm(r.denom()));
        let g = self
            .rational_generators
            .iter()
            .fold(0i64, |acc, r| acc.gcd(&(r.numer() * (denom / r.denom()))));
        Some(Rational::new(g, denom))
    }

    /// All lattice points in `[0, 1]`, ascending. By minimality these are the
    /// multiples of `minimal_positive()`; there are exactly
    /// `1/minimal_positive + 1` of them.
    pub fn points_in_unit_interval(&self) -> Option<Vec<Rational>> {
        let step = self.minimal_positive()?;
        let mut out = vec![];
        let mut x = Rational::zero();
        while x <= Rational::one() {
            out.push(x);
            x += step;
        }
        Some(out)
    }

    /// Nearest lattice point to a float value, with absolute deviation
    /// (gap labeling of trace values). Rational lattices only.
    pub fn nearest_point(&self, value: f64) -> Option<(Rational, f64)> {
        let step = self.minimal_positive()?;
        let s = (*step.numer() as f64) / (*step.denom() as f64);
        let k = (value / s).round() as i64;
        let point = step * Rational::from_integer(k);
        let p = (*point.numer() as f64) / (*point.denom() as f64);
        Some((point, (value - p).abs()))
    }
}

/// Minimal positive element of the trace lattice: an exact lower bound for
/// the Kadison constant of the twisted algebra. Rational θ only.
pub fn kadison_bound(sig: &Signature, theta: &ThetaValue) -> Result<Rational> {
    match theta {
        ThetaValue::Irrational(tag) => Err(Error::validation(format!(
            "kadison bound needs rational theta, got irrational {tag:?}"
        ))),
        ThetaValue::Rational(_) => {
            let lat = trace_range(sig, theta)?;
            Ok(lat
                .minimal_positive()
                .expect("rational lattice has a minimal positive element"))
        }
    }
}

/// Is `m` an admissible smooth-cover order: every νᵢ divides m, and m·φ is an
/// even nonnegative integer (= 2(g′−1) of the covering surface).
pub fn cover_order_admissible(sig: &Signature, m: i64) -> bool {
    if m < 1 {
        return false;
    }
    if sig
        .cone_orders
        .iter()
        .any(|&v| m % (v as i64) != 0)
    {
        return false;
    }
    let mphi = Rational::from_integer(m) * phi(sig);
    mphi.denom().is_one() && mphi.numer() % 2 == 0 && !mphi.is_negative()
}

/// Smallest order of a group acting on a smooth surface with this quotient
/// orbifold: the least m ≥ 1 with every νᵢ | m and m·φ ∈ 2ℤ≥0.
pub fn smallest_smooth_cover_order(sig: &Signature) -> Result<i64> {
    match sig.geometry_class() {
        GeometryClass::Spherical => Err(Error::validation(
            "smooth cover order defined for hyperbolic/euclidean signatures only",
        )),
        _ => {
            let base = sig
                .cone_orders
                .iter()
                .fold(1i64, |l, &v| l.lcm(&(v as i64)));
            // m must be a multiple of lcm(ν); scan multiples for parity.
            let mut m = base;
            loop {
                if cover_order_admissible(sig, m) {
                    return Ok(m);
                }
                m += base;
            }
        }
    }
}

/// Genus of the degree-m smooth cover: g′ = 1 + (m/2)·φ, exact.
pub fn covering_genus(sig: &Signature, m: i64) -> Result<i64> {
    if !cover_order_admissible(sig, m) {
        return Err(Error::validation(format!(
            "m = {m} is not an admissible cover order for ({})",
            sig.canonical_string()
        )));
    }
    let gp = Rational::one() + Rational::new(m, 2) * phi(sig);
    debug_assert!(gp.denom().is_one());
    Ok(*gp.numer())
}

/// Reduce into the paper's fundamental domain (0,1] for θ: mod 1 with 0 ↦ 1.
fn mod_one_half_open(r: Rational) -> Rational {
    let one = Rational::one();
    let mut x = r - r.floor();
    if x.is_zero() {
        x = one;
    }
    x
}

/// Isomorphism classification of the twisted algebras: θ′ is equivalent to θ
/// iff θ′ ∈ {(±θ + Σᵢ βᵢ/νᵢ) mod 1 : 0 ≤ βᵢ ≤ νᵢ−1} (with −θ entering as
/// 1−θ), decided by exact enumeration of all β tuples.
pub fn classification_equivalent(
    sig: &Signature,
    theta: &Rational,
    theta_prime: &Rational,
) -> Result<bool> {
    for t in [theta, theta_prime] {
        if *t <= Rational::zero() || *t > Rational::one() {
            return Err(Error::validation(format!(
                "theta {} outside (0,1]",
                rational_string(t)
            )));
        }
    }
    let target = mod_one_half_open(*theta_prime);
    let mut stack: Vec<Rational> = vec![Rational::zero()];
    for &v in &sig.cone_orders {
        let mut next = Vec::with_capacity(stack.len() * v as usize);
        for base in &stack {
            for beta in 0..v as i64 {
                next.push(*base + Rational::new(beta, v as i64));
            }
        }
        stack = next;
    }
    let one = Rational::one();
    Ok(stack.iter().any(|s| {
        mod_one_half_open(*theta + *s) == target || mod_one_half_open(one - *theta + *s) == target
    }))
}

/// Seifert data of an orbifold line bundle: background Chern number c₁ and
/// local invariants (βⱼ, νⱼ) at the cone points, normalized to 0 < βⱼ < νⱼ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeifertData {
    pub c1: i64,
    pub pairs: Vec<(i64, i64)>,
}

impl SeifertData {
    pub fn new(c1: i64, pairs: Vec<(i64, i64)>) -> Result<Self> {
        for &(b, v) in &pairs {
            if !(0 < b && b < v) {
                return Err(Error::validation(format!(
                    "Seifert pair ({b},{v}) violates 0 < β < ν"
                )));
            }
        }
        Ok(SeifertData { c1, pairs })
    }
}

/// Orbifold Euler number e = c₁ + Σⱼ βⱼ/νⱼ, exact.
pub fn orbifold_euler_number(data: &SeifertData) -> Rational {
    data.pairs
        .iter()
        .map(|&(b, v)| Rational::new(b, v))
        .fold(Rational::from_integer(data.c1), |acc, r| acc + r)
}

/// One component of the delocalized Chern character.
#[derive(Debug, Clone, PartialEq)]
pub enum ChernComponent {
    /// The rank component (always 1 for a line bundle).
    Rank(i64),
    /// The background Chern number c₁.
    C1(i64),
    /// A cone-point phase: e^{2πi·(frac)} recorded as the exact rational
    /// `frac = βⱼ·k/νⱼ mod 1` for k = 1..νⱼ−1.
    Phase(Rational),
}

/// Chern character components `(1, c₁, {exact phases per cone point})`.
pub fn chern_character(data: &SeifertData) -> Vec<ChernComponent> {
    let mut out = vec![ChernComponent::Rank(1), ChernComponent::C1(data.c1)];
    for &(b, v) in &data.pairs {
        for k in 1..v {
            let frac = Rational::new(b * k, v);
            out.push(ChernComponent::Phase(frac - frac.floor()));
        }
    }
    out
}

/// Pairing of the Chern character with the equivariant fundamental class:
/// c₁ + Σⱼ Σ_{k=1}^{νⱼ−1} e^{2πi βⱼ k/νⱼ}. Each inner sum is a full sum of
/// nontrivial roots of unity and equals −1 exactly; the numeric evaluation
/// here is the check route, the exact value being c₁ − n.
pub fn equivariant_euler_pairing(data: &SeifertData) -> Complex64 {
    let mut acc = Complex64::new(data.c1 as f64, 0.0);
    for &(b, v) in &data.pairs {
        for k in 1..v {
            let angle = TAU * ((b * k) % v) as f64 / v as f64;
            acc += Complex64::from_polar(1.0, angle);
        }
    }
    acc
}
