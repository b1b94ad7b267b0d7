//! Fixed-step transient analysis.
//!
//! The step is `period / points_per_period`, where the period is the
//! fundamental of the circuit's sine source (or `tstop / periods` when there
//! is none). The run starts from the operating point with every sine at its
//! offset, or from all-zero voltages with `uic`. Capacitors use backward Euler on the first step and the
//! trapezoidal rule afterwards. Memristor states advance once per accepted
//! step from that step's converged branch voltage and current; within a step
//! each memristor is a fixed resistor.

use std::collections::BTreeMap;

use super::dc::{initial_memristor_x, solve_with_fallbacks, Newton};
use super::mna::{device_current, CapCompanion, StampInputs};
use crate::devices::{memristor_step, MemristorState};
use crate::error::{EngineError, Result};
use crate::netlist::{DeviceParams, Observable, TranSpec, ValidCircuit};

#[derive(Debug, Clone, PartialEq)]
pub struct Waveforms {
    pub time: Vec<f64>,
    /// `V(node)` for every non-ground node and `I(device)` for every device.
    pub signals: BTreeMap<String, Vec<f64>>,
    pub memristor_states: BTreeMap<String, Vec<f64>>,
    pub dt: f64,
    pub points_per_period: usize,
    pub periods: usize,
    /// Sine frequency that set the step, if any.
    pub fundamental_hz: Option<f64>,
}

impl Waveforms {
    pub fn signal(&self, obs: &Observable) -> Option<&[f64]> {
        self.signal_named(&obs.to_string())
    }

    pub fn signal_named(&self, name: &str) -> Option<&[f64]> {
        super::dc::lookup(&self.signals, name).map(Vec::as_slice)
    }

    pub fn memristor_state(&self, device: &str) -> Option<&[f64]> {
        super::dc::lookup(&self.memristor_states, device).map(Vec::as_slice)
    }
}

/// Smallest step accepted (s).
pub const DT_MIN: f64 = 1e-18;

pub fn transient(circuit: &ValidCircuit, spec: &TranSpec) -> Result<Waveforms> {
    let freqs = circuit.sine_frequencies();
    if freqs.len() > 1 {
        return Err(EngineError::Transient(format!(
            "exactly one sine frequency may define the fundamental, found {freqs:?}"
        ))
        .into());
    }
    let fundamental_hz = freqs.first().copied();
    let period = match fundamental_hz {
        Some(f0) => {
            let expected = spec.periods as f64 / f0;
            if ((spec.tstop - expected) / expected).abs() > 1e-6 {
                return Err(EngineError::Transient(format!(
                    "tstop {:e} s must equal periods / f0 = {expected:e} s",
                    spec.tstop
                ))
                .into());
            }
            1.0 / f0
        }
        None => spec.period(),
    };
    let dt = period / spec.points_per_period as f64;
    let steps = spec.periods * spec.points_per_period;
    if !(dt >= DT_MIN) || dt <= 64.0 * f64::EPSILON * spec.tstop {
        return Err(EngineError::DtUnderflow { dt, t: spec.tstop }.into());
    }

    let c: &crate::netlist::Circuit = circuit;
    let newton = Newton::new(c);
    let ndev = c.devices.len();
    let mut mem_x = initial_memristor_x(c);

    let mut x = if spec.uic {
        vec![0.0; newton.layout.dim()]
    } else {
        // sine sources sit at their offset
        let inputs = StampInputs {
            source_scale: 1.0,
            time: None,
            memristor_x: &mem_x,
            capacitors: None,
            gmin: 0.0,
        };
        solve_with_fallbacks(&newton, None, &inputs)?.solution
    };

    let node_names: Vec<String> = newton.layout.node_names().to_vec();
    let mut time = Vec::with_capacity(steps + 1);
    let mut node_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); node_names.len()];
    let mut dev_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); ndev];
    let mem_idx: Vec<usize> = (0..ndev)
        .filter(|&i| matches!(c.devices[i].params, DeviceParams::Memristor(_)))
        .collect();
    let mut mem_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(steps + 1); mem_idx.len()];

    let mut caps = vec![CapCompanion::default(); ndev];
    // capacitor (voltage, current) at the previous accepted point
    let mut cap_state: Vec<(f64, f64)> = vec![(0.0, 0.0); ndev];
    let branch_v = |x: &[f64], idx: usize| {
        let t = newton.layout.terminals(idx);
        t[0].map_or(0.0, |i| x[i]) - t[1].map_or(0.0, |i| x[i])
    };
    for (idx, state) in cap_state.iter_mut().enumerate() {
        if matches!(c.devices[idx].params, DeviceParams::Capacitor { .. }) {
            *state = (branch_v(&x, idx), 0.0);
        }
    }

    let mut record = |t: f64, x: &[f64], inputs: &StampInputs, caps_now: Option<&[(f64, f64)]>| {
        time.push(t);
        for (trace, v) in node_traces.iter_mut().zip(x) {
            trace.push(*v);
        }
        for (idx, trace) in dev_traces.iter_mut().enumerate() {
            let i = match (caps_now, &c.devices[idx].params) {
                (Some(cs), DeviceParams::Capacitor { .. }) => cs[idx].1,
                (None, DeviceParams::Capacitor { .. }) => 0.0,
                _ => device_current(c, &newton.layout, x, inputs, idx),
            };
            trace.push(i);
        }
    };
    let push_states = |traces: &mut Vec<Vec<f64>>, mem_x: &[f64]| {
        for (trace, &idx) in traces.iter_mut().zip(&mem_idx) {
            trace.push(mem_x[idx]);
        }
    };

    {
        let inputs = StampInputs {
            source_scale: 1.0,
            time: Some(0.0),
            memristor_x: &mem_x,
            capacitors: None,
            gmin: 0.0,
        };
        record(0.0, &x, &inputs, None);
    }
    push_states(&mut mem_traces, &mem_x);

    for step in 1..=steps {
        let t = step as f64 * dt;
        for idx in 0..ndev {
            if let DeviceParams::Capacitor { capacitance } = c.devices[idx].params {
                let (v_prev, i_prev) = cap_state[idx];
                caps[idx] = if step == 1 {
                    let geq = capacitance / dt;
                    CapCompanion {
                        geq,
                        ihist: -geq * v_prev,
                    }
                } else {
                    let geq = 2.0 * capacitance / dt;
                    CapCompanion {
                        geq,
                        ihist: -geq * v_prev - i_prev,
                    }
                };
            }
        }
        let inputs = StampInputs {
            source_scale: 1.0,
            time: Some(t),
            memristor_x: &mem_x,
            capacitors: Some(&caps),
            gmin: 0.0,
        };
        let (next, _) = newton
            .solve(x, &inputs)
            .map_err(|f| f.into_error(Some(format!("transient step at t = {t:e} s"))))?;
        x = next;
        for idx in 0..ndev {
            if matches!(c.devices[idx].params, DeviceParams::Capacitor { .. }) {
                let v = branch_v(&x, idx);
                cap_state[idx] = (v, caps[idx].geq * v + caps[idx].ihist);
            }
        }
        let currents: Vec<(usize, f64, f64)> = mem_idx
            .iter()
            .map(|&idx| {
                (
                    idx,
                    device_current(c, &newton.layout, &x, &inputs, idx),
                    branch_v(&x, idx),
                )
            })
            .collect();
        record(t, &x, &inputs, Some(&cap_state));
        for (idx, i, v) in currents {
            let p = c.devices[idx].memristor().expect("memristor params");
            mem_x[idx] = memristor_step(MemristorState::new(mem_x[idx]), i, v, dt, p).x();
        }
        // the recorded state is the one in force at the end of the step
        push_states(&mut mem_traces, &mem_x);
    }

    let mut signals = BTreeMap::new();
    for (name, trace) in node_names.into_iter().zip(node_traces) {
        signals.insert(format!("V({name})"), trace);
    }
    for (d, trace) in c.devices.iter().zip(dev_traces) {
        signals.insert(format!("I({})", d.name), trace);
    }
    let memristor_states = mem_idx
        .iter()
        .zip(mem_traces)
        .map(|(&idx, trace)| (c.devices[idx].name.clone(), trace))
        .collect();
    Ok(Waveforms {
        time,
        signals,
        memristor_states,
        dt,
        points_per_period: spec.points_per_period,
        periods: spec.periods,
        fundamental_hz,
    })
}
