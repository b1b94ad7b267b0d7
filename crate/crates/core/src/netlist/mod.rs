//! Circuit descriptions: types, text format and validation.

mod emit;
mod parse;
mod types;
mod validate;
mod value;

pub use parse::parse_netlist;
pub use types::*;
pub use validate::{validate, ValidCircuit};
pub use value::{format_value, parse_value};

/// Parses and validates in one step.
pub fn load(text: &str) -> Result<ValidCircuit, crate::error::NetlistError> {
    validate(parse_netlist(text)?)
}
