//! Circuit simulation for memristive current mirrors.
//!
//! A SPICE-like netlist is parsed and validated ([`netlist`]), devices are
//! evaluated by compact models ([`devices`]), the circuit is solved by
//! modified nodal analysis ([`engine`]), and waveforms are reduced to
//! harmonic distortion, h-parameters and linear fits ([`analysis`]).

pub mod analysis;
pub mod devices;
pub mod engine;
mod error;
pub mod netlist;

pub use error::*;
