//! Numerics for operator-algebraic quantum error correction.
//!
//! The library is organized around one chain of ideas:
//!
//! * [`operators`] is the dense complex linear-algebra substrate: Hermitian
//!   eigendecomposition, spectral projections, operator norms, commutators,
//!   partial traces, and the scalar-on-code test everything else leans on.
//! * [`crossed`] builds twisted group algebras over finite abelian groups
//!   (bit vectors, symplectic pairs, torus lattices) with their Weyl
//!   operators, cocycles, and weight functions.
//! * [`metric`] equips finite point sets with block Dirac operators whose
//!   commutator seminorm reproduces a metric, computes that metric both in
//!   closed form and by constrained maximization, and implements supports,
//!   diameters, local algebras, and the Knill-Laflamme scalar condition.
//! * [`codes`] instantiates concrete code families: classical linear codes,
//!   stabilizer codes, a discretized oscillator grid code, and the Z2 surface
//!   code on a small torus, each as a kernel of an explicit Dirac operator.
//! * [`channels`] simulates noise and decoding: Kraus channels, the Petz
//!   transpose channel, a projective "poor" decoder with its quadratic
//!   fidelity-loss expansion, residual-error curves, and threshold fits.
//! * [`fluctuations`] perturbs Dirac operators: one-forms, real structures,
//!   gauge transformations, and kernel-preserving gap-growing perturbations
//!   with their effect on decoding quality.
//! * [`quantization`] realizes functions on the 2-sphere as matrices via
//!   projection onto a spin-p/2 coherent-state family and measures how fast
//!   the algebraic axioms are restored as p grows.

pub mod channels;
pub mod codes;
pub mod crossed;
pub mod error;
pub mod fluctuations;
pub mod metric;
pub mod operators;
pub mod quantization;

pub use error::{Error, Result};
