//! Floquet Schrieffer–Wolff transform for periodically driven fermion chains.
//!
//! The crate is `no_std` and only needs `alloc`. Operators live in fixed
//! (L, N↑, N↓) Fock sectors as sparse complex matrices; the engine solves the
//! operator Sylvester equations order by order in the drive strength and
//! assembles effective Hamiltonians and micro-motion unitaries from them.

#![no_std]
// float methods come from num_traits under no_std but are inherent when std is linked for tests
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod fswt;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod reference;
pub mod sambe;
pub mod sylvester;

pub use basis::{SectorBasis, Spin};
pub use error::{Error, Resonance, Result};
pub use fswt::{EffectiveHamiltonian, Expansion, FswtEngine, GeneratorMethod, GeneratorSeries};
pub use model::{DriveKey, HubbardDriveParams, PeriodicHamiltonian};
pub use operator::{Hint, OperatorMatrix, SectorTag};

pub use num_complex::Complex64 as C64;
