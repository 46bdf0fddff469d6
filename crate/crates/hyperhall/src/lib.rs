//! Magnetic tight-binding models on hyperbolic lattices.
//!
//! This crate computes, at desk scale, the objects attached to a cocompact
//! Fuchsian group of signature `(g; ν₁,…,νₙ)` and a magnetic flux density:
//!
//! * exact rational invariants of the signature and of its twisted group
//!   C*-algebra — Euler characteristic, conductance quantum φ, K-theory
//!   ranks, trace lattice and its minimal positive element, smooth-cover
//!   data, Seifert/Chern bookkeeping ([`signatures`]);
//! * explicit matrix realizations of the group in PSL(2,ℝ) acting on the
//!   Poincaré disk, and breadth-first Cayley balls with a word-problem
//!   oracle ([`geometry`], [`groups`]);
//! * the hyperbolic-area 2-cocycle, the magnetic multiplier σ, the
//!   abelianization period maps, and a coboundary-defect solver
//!   ([`cocycles`]);
//! * the twisted group algebra, generalized Harper operators, truncated
//!   spectra, butterfly sweeps and gap detection ([`algebra`]);
//! * spectral projections and the two cyclic 2-cocycle pairings (area and
//!   Connes–Kubo) whose value on a gap projection is the Hall conductance,
//!   quantized in multiples of φ ([`conductance`]).
//!
//! The binary `hyperhall` exposes all of this behind a deterministic CLI;
//! the `examples/` directory demonstrates each capability end to end.

pub mod algebra;
pub mod cli;
pub mod cocycles;
pub mod conductance;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod groups;
pub mod numerics;
pub mod signatures;

pub use error::{Error, Result};
