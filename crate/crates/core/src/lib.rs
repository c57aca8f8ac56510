//! Decoherence-free subsystem codes for Lindbladian systems: sector
//! structure of the noise commutant, code construction, P-static control
//! analysis and logical controllability tests.

pub mod codes;
pub mod commutant;
pub mod cvs;
pub mod error;
pub mod liealg;
pub mod linalg;
pub mod model;
pub mod pstatic;
pub mod sim;
pub mod tol;

pub use cvs::{BasisKind, GModel, HermitianBasis};
pub use error::{Error, Result};
pub use model::{IonParams, LindbladModel, NoiseChannel, PauliString};
pub use tol::Tolerances;
