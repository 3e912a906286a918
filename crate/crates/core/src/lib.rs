//! Hamiltonians for generalized probabilistic theories.
//!
//! States of a three-dimensional theory are real vectors inside a compact
//! convex body, observables are affine functionals, and reversible dynamics
//! are orthogonal maps generated by antisymmetric matrices. The Hamiltonian
//! of a rotation is the vector of coefficients of its generator in the
//! standard `so(3)` basis; this crate builds that correspondence, evolves
//! states with it, and checks the resulting energy observable against the
//! quantum case and a set of non-quantum example theories.
//!
//! Modules:
//! - [`realrep`]: generalized Gell-Mann bases and the Bloch-vector bridge to
//!   density matrices.
//! - [`statespace`]: states, effects, measurements, observables and the
//!   builtin state-space bodies.
//! - [`symmetry`]: orthogonal maps, finite symmetry groups of polytopes and
//!   the Spekkens ontic-permutation group.
//! - [`dynamics`]: the generator recipe, time evolution and the desiderata
//!   verifier.
//! - [`phase`]: phase groups, well-defined-energy faces, branch locality and
//!   energy assignment from periods.
//! - [`liouville`]: a discretized classical Liouville operator.
//! - [`cli`]: scenario files and the command implementations behind the
//!   `gptham` binary.

pub mod cli;
pub mod dynamics;
mod error;
pub mod liouville;
pub mod phase;
pub mod realrep;
pub mod sampling;
pub mod statespace;
pub mod symmetry;

pub use error::{Error, Result};
