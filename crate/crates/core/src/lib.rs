//! Exact computation of derived inverse limits for finite inverse systems of
//! abelian groups over `ℤ` and `ℤ₂`, together with windowed (finite) versions
//! of the classical coherent families and the refutation machinery that checks
//! bounded trivializers.
//!
//! The crate is organised bottom-up:
//!
//! - [`coeffs`]: exact arithmetic, sparse matrices, Smith normal form, kernels.
//! - [`index`]: finite posets, ordered tuples, ordinal notations, windowed sets, towers.
//! - [`system`]: inverse systems and their elements.
//! - [`cochain`]: cochains, the coboundary, and the operator algebra on them.
//! - [`limits`]: `limⁿ` by exact linear algebra, a brute-force oracle, and the flasque trivializer.
//! - [`constructions`]: explicit coherent families on finite windows.
//! - [`falsify`]: bounded trivializer search and proof-replay refutations.

pub mod cochain;
pub mod coeffs;
pub mod constructions;
mod error;
pub mod falsify;
pub mod index;
pub mod limits;
pub mod system;

pub use error::{Error, Result};

/// Library version embedded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
