//! Numerical library for the Jacobi theta-constant flows: q-series and their
//! termwise derivatives, Legendre elliptic integrals via the AGM, Gauss
//! hypergeometric and associated Legendre functions, the family of modular
//! dynamical systems (canonical, Jacobi, Darboux-Halphen, Weierstrass,
//! Ramamani, Halphen-Brioschi and friends), adaptive integration along
//! complex time segments, every first integral of those systems, and the
//! Hamiltonian layer: Poisson pencil, Casimirs, Nambu reduction, the
//! constant-bracket obstruction, bracket transport and the Lagrangian check.

pub mod conserved;
pub mod elliptic;
pub mod error;
pub mod flows;
pub mod hyp2f1;
pub mod integrate;
pub mod jets;
pub mod legendre;
pub mod linalg;
pub mod poisson;
pub mod qseries;
pub mod scalar;
pub mod sampling;

pub use error::{Error, Result};
pub use num_complex::Complex64;
