//! Finite-volume simulator for incompressible nematic liquid crystal flow
//! with temperature-dependent viscosity and heat release.
//!
//! Unknowns live on a staggered grid: velocity on faces, pressure,
//! temperature and the unit director at cell centres. A time step solves,
//! in order, the temperature equation, the director equation and an
//! implicit variable-viscosity Stokes problem. Everything is generic over the
//! floating-point type; the `*F64` aliases fix it to `f64`.

pub mod coupler;
pub mod director;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod heat;
pub mod linalg;
pub mod norms;
pub mod ops;
pub mod scalar;
pub mod stokes;
pub mod viscosity;

pub use coupler::{energy_budget, project_divergence_free, Coupler, CouplerConfig, CouplingMode, EnergyBudget, RunOutput, StepInfo};
pub use director::{director_step, DirectorSolver, DirectorStepOptions};
pub use error::{CheckpointError, ConfigError, NormError, SolverError};
pub use grid::{DirectorBc, DirectorField, FaceField, GridSpec, ScalarBc, ScalarField, State, VectorField};
pub use heat::{dissipation_sources, heat_step, DissipationSources, HeatSolver};
pub use norms::{DiagnosticsRecord, FunctionalTracker, MixedNormAccumulator, NormExponents};
pub use scalar::Real;
pub use stokes::{StokesSolution, StokesSolver, StokesStepProblem, StokesStrategy};
pub use viscosity::{ViscosityKind, ViscosityModel};

pub type GridF64 = GridSpec<f64>;
pub type StateF64 = State<f64>;
pub type ScalarFieldF64 = ScalarField<f64>;
pub type VectorFieldF64 = VectorField<f64>;
pub type DirectorFieldF64 = DirectorField<f64>;
pub type ViscosityF64 = ViscosityModel<f64>;
pub type CouplerF64 = Coupler<f64>;
pub type CouplerConfigF64 = CouplerConfig<f64>;
pub type DiagnosticsF64 = DiagnosticsRecord<f64>;
