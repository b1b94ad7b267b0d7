//! Circuit solution: MNA assembly, DC operating point, sweeps and transient.

mod dc;
pub mod linalg;
mod mna;
mod sweep;
mod transient;

pub use dc::{
    kcl_residual, solve_dc, solve_dc_from, OperatingPoint, SmallSignal, Strategy, CURRENT_TOL,
    MAX_ITERATIONS, VOLTAGE_TOL,
};
pub use mna::{assemble_mna, CapCompanion, Layout, StampInputs, SystemMatrix};
pub use sweep::{dc_sweep, dc_sweep_values, SweepResult};
pub use transient::{transient, Waveforms, DT_MIN};
