//! Simulation of an engineered spin reservoir: a carbon qubit coupled to two
//! hydrogen chains whose natural dipolar couplings are turned into an
//! exchange interaction by a four-pulse cycle.
//!
//! Operators are sums of sparse Pauli strings applied matrix-free to state
//! vectors. Hamiltonians used for time evolution are in angular-frequency
//! units (`H/ħ`, rad/s); only the thermal-machine energies carry joules.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod operator;
pub mod pauli;
pub mod propagate;
pub mod pulse;
pub mod reduce;
pub mod state;
pub mod thermo;
pub mod tomography;

pub use density::{partial_trace, DensityMatrix};
pub use dynamics::{
    concurrence, eof, run_effective, run_pulsed, Ensemble, InitialCondition, LocalState, RunOptions, Trajectory,
};
pub use error::{Error, Result};
pub use model::{ChainModel, ChainTopology, CouplingConstants, ZeemanParams};
pub use operator::{apply_operator, expectation, CompiledOperator, OperatorSum};
pub use pauli::{Pauli, PauliString, SpinConvention};
pub use propagate::{evolve, EvolveOptions, Method, Propagator};
pub use pulse::{average_hamiltonian_zeroth, CyclePropagator, Pulse, PulseAxis, PulseCycle, Schedule};
pub use state::StateVector;
pub use thermo::{InverseTemperature, MachineRecord, MachineUnitary};
pub use tomography::{process_fidelity, reconstruct_chi, OperatorBasis, ProcessMatrix};
