//! Newton–Raphson operating point with gmin and source stepping fallbacks.

use std::collections::BTreeMap;

use super::linalg::lu_solve;
use super::mna::{assemble_mna, device_current, Layout, StampInputs};
use crate::devices::{mosfet_eval, Region};
use crate::error::{EngineError, Result};
use crate::netlist::{Circuit, DeviceParams, Observable, ValidCircuit, GROUND};

/// Convergence requires both the node-voltage update and the KCL residual
/// to fall below these bounds.
pub const VOLTAGE_TOL: f64 = 1e-9;
pub const CURRENT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 100;
/// Largest node-voltage update per iteration in circuits with MOSFETs.
const MAX_STEP: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSignal {
    pub id: f64,
    pub gm: f64,
    pub gds: f64,
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Newton,
    GminStepping,
    SourceStepping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Every node including ground.
    pub node_voltages: BTreeMap<String, f64>,
    /// Current entering each device's first terminal (drain for nmos).
    pub branch_currents: BTreeMap<String, f64>,
    pub device_small_signal: BTreeMap<String, SmallSignal>,
    pub memristor_states: BTreeMap<String, f64>,
    pub strategy: Strategy,
    pub iterations: usize,
    pub(crate) solution: Vec<f64>,
}

impl OperatingPoint {
    pub fn voltage(&self, node: &str) -> Option<f64> {
        self.node_voltages.get(node).copied()
    }

    /// Device current, looked up case-insensitively.
    pub fn current(&self, device: &str) -> Option<f64> {
        lookup(&self.branch_currents, device).copied()
    }

    /// Current a source pushes out of its `+` terminal into the circuit.
    pub fn delivered(&self, source: &str) -> Option<f64> {
        self.current(source).map(|i| -i)
    }

    pub fn small_signal(&self, device: &str) -> Option<&SmallSignal> {
        lookup(&self.device_small_signal, device)
    }

    pub fn observable(&self, obs: &Observable) -> Option<f64> {
        match obs {
            Observable::Voltage(n) => self.voltage(n),
            Observable::Current(d) => self.current(d),
        }
    }
}

pub(crate) fn lookup<'a, T>(map: &'a BTreeMap<String, T>, key: &str) -> Option<&'a T> {
    map.get(key).or_else(|| {
        map.iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|(_, v)| v)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NewtonFailure {
    pub residual: f64,
    pub step: f64,
    pub iterations: usize,
    pub singular: Option<EngineError>,
}

impl NewtonFailure {
    pub(crate) fn into_error(self, context: Option<String>) -> EngineError {
        match self.singular {
            Some(e) => e,
            None => EngineError::NonConvergence {
                residual: self.residual,
                step: self.step,
                iterations: self.iterations,
                context,
            },
        }
    }
}

/// Shared Newton machinery for DC and transient solves.
pub(crate) struct Newton<'c> {
    pub circuit: &'c Circuit,
    pub layout: Layout,
    nonlinear: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl<'c> Newton<'c> {
    pub fn new(circuit: &'c Circuit) -> Self {
        let nonlinear = circuit
            .devices
            .iter()
            .any(|d| matches!(d.params, DeviceParams::Nmos(_)));
        Self {
            circuit,
            layout: Layout::new(circuit),
            nonlinear,
        }
    }

    /// Worst KCL imbalance (A) and branch-equation error (V) of the system
    /// linearized at `x`, which equal the nonlinear residuals at `x`.
    fn residual(&self, x: &[f64], inputs: &StampInputs) -> (f64, f64) {
        let sys = assemble_mna(self.circuit, &self.layout, x, inputs);
        let r = sys.residual(x);
        let n = self.layout.node_count();
        (max_abs(&r[..n]), max_abs(&r[n..]))
    }

    pub fn solve(
        &self,
        mut x: Vec<f64>,
        inputs: &StampInputs,
    ) -> std::result::Result<(Vec<f64>, usize), NewtonFailure> {
        let n = self.layout.node_count();
        let dim = self.layout.dim();
        let mut last = (f64::INFINITY, f64::INFINITY);
        for it in 1..=MAX_ITERATIONS {
            let sys = assemble_mna(self.circuit, &self.layout, &x, inputs);
            let (mut a, mut b) = (sys.a, sys.rhs);
            if let Err(e) = lu_solve(&mut a, &mut b, dim) {
                return Err(NewtonFailure {
                    residual: last.0,
                    step: last.1,
                    iterations: it,
                    singular: Some(e),
                });
            }
            let mut delta: Vec<f64> = b.iter().zip(&x).map(|(new, old)| new - old).collect();
            let step = max_abs(&delta[..n]);
            if self.nonlinear && step > MAX_STEP {
                let s = MAX_STEP / step;
                delta.iter_mut().for_each(|d| *d *= s);
            }
            for (xi, d) in x.iter_mut().zip(&delta) {
                *xi += d;
            }
            if !x.iter().all(|v| v.is_finite()) {
                break;
            }
            let step = max_abs(&delta[..n]);
            let (kcl, branch) = self.residual(&x, inputs);
            last = (kcl, step);
            if step < VOLTAGE_TOL && kcl < CURRENT_TOL && branch < VOLTAGE_TOL {
                return Ok((x, it));
            }
        }
        Err(NewtonFailure {
            residual: last.0,
            step: last.1,
            iterations: MAX_ITERATIONS,
            singular: None,
        })
    }

    pub fn operating_point(
        &self,
        x: Vec<f64>,
        inputs: &StampInputs,
        strategy: Strategy,
        iterations: usize,
    ) -> OperatingPoint {
        let c = self.circuit;
        let mut node_voltages = BTreeMap::new();
        for node in &c.nodes {
            let v = self.layout.node(node).map_or(0.0, |i| x[i]);
            node_voltages.insert(node.clone(), if node == GROUND { 0.0 } else { v });
        }
        let mut branch_currents = BTreeMap::new();
        let mut device_small_signal = BTreeMap::new();
        let mut memristor_states = BTreeMap::new();
        for (idx, d) in c.devices.iter().enumerate() {
            branch_currents.insert(
                d.name.clone(),
                device_current(c, &self.layout, &x, inputs, idx),
            );
            match &d.params {
                DeviceParams::Nmos(p) => {
                    let v = |k: usize| self.layout.terminals(idx)[k].map_or(0.0, |i| x[i]);
                    let e = mosfet_eval(v(1) - v(2), v(0) - v(2), p);
                    device_small_signal.insert(
                        d.name.clone(),
                        SmallSignal {
                            id: e.current,
                            gm: e.gm,
                            gds: e.gds,
                            region: e.region,
                        },
                    );
                }
                DeviceParams::Memristor(_) => {
                    memristor_states.insert(d.name.clone(), inputs.memristor_x[idx]);
                }
                _ => {}
            }
        }
        OperatingPoint {
            node_voltages,
            branch_currents,
            device_small_signal,
            memristor_states,
            strategy,
            iterations,
            solution: x,
        }
    }
}

/// Initial memristor states (from the MSS fraction) indexed by device.
pub(crate) fn initial_memristor_x(circuit: &Circuit) -> Vec<f64> {
    circuit
        .devices
        .iter()
        .map(|d| d.memristor().map_or(0.0, |p| p.initial_state().x()))
        .collect()
}

/// Runs the Newton → gmin stepping → source stepping ladder.
pub(crate) fn solve_with_fallbacks(
    newton: &Newton,
    guess: Option<&[f64]>,
    base: &StampInputs,
) -> Result<OperatingPoint> {
    let dim = newton.layout.dim();
    let start = match guess {
        Some(g) if g.len() == dim => g.to_vec(),
        _ => vec![0.0; dim],
    };
    let mut total = 0;

    let first = match newton.solve(start.clone(), base) {
        Ok((x, it)) => return Ok(newton.operating_point(x, base, Strategy::Newton, it)),
        Err(f) => f,
    };
    total += first.iterations;

    // gmin stepping: 1e-3 S down to 1e-12 S, then without gmin
    let mut x = start;
    let mut ok = true;
    for decade in 3..=12 {
        let inputs = StampInputs {
            gmin: 10f64.powi(-decade),
            ..base.clone()
        };
        match newton.solve(x.clone(), &inputs) {
            Ok((next, it)) => {
                x = next;
                total += it;
            }
            Err(f) => {
                total += f.iterations;
                ok = false;
                break;
            }
        }
    }
    if ok {
        match newton.solve(x, base) {
            Ok((x, it)) => {
                return Ok(newton.operating_point(x, base, Strategy::GminStepping, total + it))
            }
            Err(f) => total += f.iterations,
        }
    }

    // source stepping: scale every source 0 -> 1 in ten steps
    let mut x = vec![0.0; dim];
    let mut failure = None;
    for k in 1..=10 {
        let inputs = StampInputs {
            source_scale: base.source_scale * k as f64 / 10.0,
            ..base.clone()
        };
        match newton.solve(x.clone(), &inputs) {
            Ok((next, it)) => {
                x = next;
                total += it;
            }
            Err(f) => {
                failure = Some(f);
                break;
            }
        }
    }
    match failure {
        None => Ok(newton.operating_point(x, base, Strategy::SourceStepping, total)),
        Some(f) => {
            let total = total + f.iterations;
            let context = format!("after gmin and source stepping, {total} iterations in total");
            Err(f.into_error(Some(context)).into())
        }
    }
}

/// DC operating point. Capacitors are open; memristor states come from
/// their initial resistance.
pub fn solve_dc(circuit: &ValidCircuit) -> Result<OperatingPoint> {
    solve_dc_from(circuit, None)
}

/// DC operating point starting Newton from a previous solution of the same topology.
pub fn solve_dc_from(circuit: &ValidCircuit, guess: Option<&OperatingPoint>) -> Result<OperatingPoint> {
    let newton = Newton::new(circuit);
    let mem = initial_memristor_x(circuit);
    let inputs = StampInputs {
        source_scale: 1.0,
        time: None,
        memristor_x: &mem,
        capacitors: None,
        gmin: 0.0,
    };
    solve_with_fallbacks(&newton, guess.map(|op| op.solution.as_slice()), &inputs)
}

/// Largest net current into any non-ground node, recomputed from the
/// device currents of `op`.
pub fn kcl_residual(circuit: &Circuit, op: &OperatingPoint) -> f64 {
    let mut sum: BTreeMap<&str, f64> = BTreeMap::new();
    for d in &circuit.devices {
        let i = op.current(&d.name).unwrap_or(0.0);
        let (into, out_of) = match d.params {
            DeviceParams::Nmos(_) => (&d.nodes[0], &d.nodes[2]),
            _ => (&d.nodes[0], &d.nodes[1]),
        };
        *sum.entry(into.as_str()).or_default() -= i;
        *sum.entry(out_of.as_str()).or_default() += i;
    }
    sum.iter()
        .filter(|(n, _)| **n != GROUND)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}
