//! Exact DG-algebra computations for surjective maps of graded local rings
//! over a prime field.
//!
//! Given a weighted-homogeneous quotient `R = F_p[x_1..x_n]/I` and a
//! surjective map `R -> S = R/(f_1..f_c)`, this crate constructs, inside a
//! bidegree window,
//!
//! * the acyclic closure `R<Y>` (Tate's construction with exterior and
//!   divided-power variables),
//! * the minimal model `R[X]` (exterior and polynomial variables),
//! * an explicit comparison quasi-isomorphism `R[X] -> R<Y>`,
//! * the homotopy Lie algebra of the map together with its bracket and
//!   reduced-square tables, and
//! * deviation sequences and structural classifications (closed,
//!   weakly-closed, complete intersection, quasi-complete intersection).
//!
//! All arithmetic is exact over `GF(p)`. Every statement produced by the
//! engine is certified only inside the window it was computed in; reports
//! carry the certified window explicitly.

pub mod classify;
pub mod cli;
pub mod coeffs;
pub mod compare;
pub mod dga;
pub mod error;
pub mod linalg;
pub mod pi;
pub mod resolve;
pub mod ring;

pub use error::EngineError;
