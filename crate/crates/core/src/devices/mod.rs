//! Device constitutive relations.

mod memristor;
mod mosfet;

use std::fmt;

pub use memristor::{
    memristance, memristor_step, mss_conductance, mss_on_fraction, window, MemristorParams,
    MemristorState,
};
pub use mosfet::{mosfet_eval, DeviceEval, MosfetParams, Region};

/// A parameter that failed its range check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamError {
    pub param: &'static str,
    pub reason: String,
}

impl ParamError {
    pub(crate) fn new(param: &'static str, reason: impl Into<String>) -> Self {
        Self {
            param,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.param, self.reason)
    }
}
