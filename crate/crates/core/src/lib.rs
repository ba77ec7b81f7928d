//! Ground-state entanglement of the reduced BCS (Richardson) pairing model.
//!
//! Three independent routes to the ground state are provided:
//!
//! * [`meanfield`]: closed forms and quadrature in the thermodynamic limit,
//! * [`exactdiag`]: brute-force diagonalization of the paired sector,
//! * [`richardson`]: Newton iteration with continuation on the Bethe ansatz
//!   equations written in eigenvalue-based (Λ) variables.
//!
//! [`observables`] turns occupations and energies into local concurrences,
//! the average local concurrence (ALC), the condensation energy and the
//! threshold coupling, and [`sweep`] drives λ scans and figure data.

pub mod error;
pub mod exactdiag;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod quadrature;
pub mod richardson;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use exactdiag::{GroundSolution, PairedBasis, Source};
pub use meanfield::{BulkSolution, GapPolicy};
pub use model::{DensityProfile, LevelSet, ModelSpec};
pub use observables::EntanglementReport;
pub use richardson::{BetheSolver, BetheState};
pub use sweep::{SweepResult, SweepRow};

