//! Dense, deterministic quantum-state machinery for finite tensor-product
//! Hilbert spaces.
//!
//! The crate is organised around a handful of small, pure modules:
//!
//! - [`matrix`], [`tensor`], [`linalg`]: complex dense linear algebra
//!   (Kronecker products, factor embedding, Hermitian eigendecomposition and
//!   SVD with a fixed phase convention, unitary exponentials).
//! - [`state`], [`projector`]: state vectors, density operators, partial
//!   traces and validated projective families (PVMs).
//! - [`modal`]: single-time property assignment from the biorthogonal or
//!   spectral decomposition, degeneracy merging, definite-valued membership
//!   tests and joint probabilities over disjoint subsystems.
//! - [`histories`]: Heisenberg projector chains, multi-time history
//!   probabilities, the decoherence functional, consistency and
//!   marginalization checks.
//! - [`decoherence`]: factory for recording (environment-memory) scenarios
//!   whose step unitaries write orthogonal records of pointer observables.
//! - [`branch`]: branch trees with per-branch decompositions, reinterference
//!   detection and branch history families.
//! - [`lattice`]: a finite causal lattice of point-like regions with
//!   lightcone records, slice projectors, joint event probabilities and
//!   foliation-invariance reports.
//!
//! Every operation is a pure function over immutable values; all tolerances
//! come from an explicit [`NumericPolicy`]. Nothing in this crate performs
//! I/O.

pub mod branch;
pub mod decoherence;
pub mod error;
pub mod histories;
pub mod lattice;
pub mod linalg;
pub mod matrix;
pub mod modal;
pub mod policy;
pub mod projector;
pub mod rng;
pub mod state;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
pub use policy::NumericPolicy;
pub use projector::ProjectorFamily;
pub use state::{DensityOperator, PureState};
