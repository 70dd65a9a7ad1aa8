//! Finite element solver for the Cahn-Hilliard equation with dynamic
//! boundary conditions of Cahn-Hilliard or Allen-Cahn type.
//!
//! The discretization is P1 with mass lumping on nonobtuse simplicial
//! meshes. Each implicit time step eliminates the interior chemical
//! potential unknowns, leaving a boundary-sized SPD Schur complement that
//! is factored once per run; the nonlinear step equation is then solved by
//! a matrix-free Newton-Krylov iteration. A convex-concave splitting of
//! the potentials makes the scheme unconditionally energy stable.

pub mod assembly;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod init;
pub mod linalg;
pub mod mesh;
pub mod oracle;
pub mod output;
pub mod params;
pub mod potential_solver;
pub mod potentials;
pub mod stepper;

pub use assembly::{assemble, Assembled, BlockMaps};
pub use config::{IcSpec, MeshSource, RunConfig};
pub use diagnostics::EnergyReport;
pub use error::{Error, Result};
pub use mesh::{load_mesh, structured_unit_square, Mesh};
pub use params::{BcMode, ModelParams};
pub use potential_solver::{build_schur, Potentials, SchurOperator, SchurSolverKind};
pub use potentials::{double_well_penalized, wetting_energy, PotentialSplit};
pub use stepper::{NewtonConfig, StepState, System};
