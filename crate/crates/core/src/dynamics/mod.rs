//! Dynamic component library and DAE assembly.
//!
//! Every generating unit contributes a sub-transient machine, an ST1A
//! exciter, a hydro or gas turbine-governor and optionally a multi-band
//! stabilizer. The network enters as nodal current balance at every bus
//! whose voltage is not held fixed.

mod assembly;
mod exciter;
mod governor;
mod machine;
mod pss;
pub mod smooth;

pub use assembly::{assemble, init_dynamics, DynamicSystem, Equilibrium, UnitOutputs};
pub use exciter::{exciter_derivatives, ExciterST1A};
pub use governor::{gas_derivatives, hydro_derivatives, GasGovernor, Governor, HydroGovernor};
pub use machine::{
    electrical_torque, machine_derivatives, stator_algebraic, subtransient_emf, FluxCoefficients,
    MachineParams, MachineState,
};
pub use pss::{pss_derivatives, PssBand, PssMB, BAND_DETUNING};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("stator equations are singular (rs^2 + xd''·xq'' = 0)")]
    SingularStator,
    #[error("initialization of {unit} failed: residual {residual:.3e}")]
    InitializationFailed { unit: String, residual: f64 },
    #[error("{limit} limit of {unit} binds at the equilibrium")]
    LimitBindingAtEquilibrium { unit: String, limit: &'static str },
    #[error("PV bus {0} has no generating unit to model")]
    NoGeneratorAtPvBus(u32),
}
