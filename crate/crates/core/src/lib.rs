//! Finite-dimensional operator algebras and quantum channels.
//!
//! - [`matcore`]: dense complex matrices, Hermitian eigensolver, norms.
//! - [`staralg`]: *-subalgebras of `M_d`, commutants, centers, block
//!   structure, matrix units and independence tests for commuting pairs.
//! - [`channels`]: linear maps between algebras, Choi matrices, complete
//!   positivity, Kraus and Stinespring forms, local extensions.
//! - [`net`]: a local net of algebras over a finite spin chain.

pub mod channels;
pub mod error;
pub mod matcore;
pub mod net;
pub mod random;
pub mod staralg;

pub use channels::{
    choi, cp_check, extend_local, is_completely_positive, is_positive_sampled, kraus_from_choi,
    kraus_on_subfactor, stinespring, theorem1_certify, ChoiMatrix, CpCertificate, KrausSet, LinMap,
    Verdict,
};
pub use error::{Error, Result};
pub use matcore::{CMatrix, Tolerance, C64};
pub use net::{Region, RegionNet};
pub use staralg::{commutant, generate, matrix_units, MatrixUnits, StarAlgebra};
