//! Modified nodal analysis: unknown layout and linearized stamps.
//!
//! Unknowns are the non-ground node voltages (in circuit node order) followed
//! by one branch current per voltage source. A voltage-source branch current
//! flows from the `+` terminal through the source to the `-` terminal.
//! Node rows are KCL balances of current leaving the node.

use std::collections::HashMap;

use crate::devices::{memristance, mosfet_eval};
use crate::netlist::{Circuit, DeviceParams, GROUND};

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    node_names: Vec<String>,
    node_index: HashMap<String, usize>,
    /// Per device: the branch unknown of a voltage source.
    branch: Vec<Option<usize>>,
    /// Per device: resolved terminal indices (`None` is ground).
    terminals: Vec<Vec<Option<usize>>>,
    dim: usize,
}

impl Layout {
    pub fn new(circuit: &Circuit) -> Self {
        let node_names: Vec<String> = circuit
            .nodes
            .iter()
            .filter(|n| *n != GROUND)
            .cloned()
            .collect();
        let node_index: HashMap<String, usize> = node_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut next = node_names.len();
        let branch = circuit
            .devices
            .iter()
            .map(|d| {
                matches!(d.params, DeviceParams::VSource(_)).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let terminals = circuit
            .devices
            .iter()
            .map(|d| d.nodes.iter().map(|n| node_index.get(n).copied()).collect())
            .collect();
        Self {
            node_names,
            node_index,
            branch,
            terminals,
            dim: next,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    /// Unknown index of a node; `None` for ground or unknown names.
    pub fn node(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn branch(&self, device: usize) -> Option<usize> {
        self.branch[device]
    }

    pub fn terminals(&self, device: usize) -> &[Option<usize>] {
        &self.terminals[device]
    }
}

/// Transient companion of one capacitor: `i = geq * v + ihist`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CapCompanion {
    pub geq: f64,
    pub ihist: f64,
}

/// Everything besides the guess that the linearization depends on.
#[derive(Debug, Clone)]
pub struct StampInputs<'a> {
    /// Multiplier applied to every independent source (source stepping).
    pub source_scale: f64,
    /// `None` evaluates sources at their DC value, `Some(t)` at time `t`.
    pub time: Option<f64>,
    /// Memristor state per device index; entries of other devices are ignored.
    pub memristor_x: &'a [f64],
    /// Capacitor companions per device index; `None` leaves capacitors open.
    pub capacitors: Option<&'a [CapCompanion]>,
    /// Shunt conductance from every node to ground.
    pub gmin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub a: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl SystemMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
            rhs: vec![0.0; dim],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.dim + c]
    }

    fn add(&mut self, r: Option<usize>, c: Option<usize>, v: f64) {
        if let (Some(r), Some(c)) = (r, c) {
            self.a[r * self.dim + c] += v;
        }
    }

    fn add_rhs(&mut self, r: Option<usize>, v: f64) {
        if let Some(r) = r {
            self.rhs[r] += v;
        }
    }

    fn conductance(&mut self, a: Option<usize>, b: Option<usize>, g: f64) {
        self.add(a, a, g);
        self.add(b, b, g);
        self.add(a, b, -g);
        self.add(b, a, -g);
    }

    /// Current `i` leaving node `a` and entering node `b`.
    fn current(&mut self, a: Option<usize>, b: Option<usize>, i: f64) {
        self.add_rhs(a, -i);
        self.add_rhs(b, i);
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|r| {
                let row = &self.a[r * self.dim..(r + 1) * self.dim];
                row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - self.rhs[r]
            })
            .collect()
    }
}

fn voltage(x: &[f64], node: Option<usize>) -> f64 {
    node.map_or(0.0, |i| x[i])
}

fn source_value(w: &crate::netlist::SourceWaveform, inputs: &StampInputs) -> f64 {
    let v = match inputs.time {
        None => w.dc_value(),
        Some(t) => w.value_at(t),
    };
    v * inputs.source_scale
}

/// Linearizes the circuit at `guess`.
///
/// Memristors stamp as resistors of value `R(x)`; MOSFETs as `gm`/`gds`
/// conductances plus an equivalent current; voltage sources as branch rows.
pub fn assemble_mna(
    circuit: &Circuit,
    layout: &Layout,
    guess: &[f64],
    inputs: &StampInputs,
) -> SystemMatrix {
    let mut m = SystemMatrix::zeros(layout.dim());
    for (idx, dev) in circuit.devices.iter().enumerate() {
        let t = layout.terminals(idx);
        match &dev.params {
            DeviceParams::Resistor { resistance } => m.conductance(t[0], t[1], 1.0 / resistance),
            DeviceParams::Memristor(p) => {
                m.conductance(t[0], t[1], 1.0 / memristance(inputs.memristor_x[idx], p))
            }
            DeviceParams::Capacitor { .. } => {
                if let Some(caps) = inputs.capacitors {
                    let c = caps[idx];
                    m.conductance(t[0], t[1], c.geq);
                    m.current(t[0], t[1], c.ihist);
                }
            }
            DeviceParams::VSource(w) => {
                let k = layout.branch(idx);
                m.add(t[0], k, 1.0);
                m.add(t[1], k, -1.0);
                m.add(k, t[0], 1.0);
                m.add(k, t[1], -1.0);
                m.add_rhs(k, source_value(w, inputs));
            }
            DeviceParams::ISource(w) => m.current(t[0], t[1], source_value(w, inputs)),
            DeviceParams::Nmos(p) => {
                let (d, g, s) = (t[0], t[1], t[2]);
                let (vd, vg, vs) = (voltage(guess, d), voltage(guess, g), voltage(guess, s));
                let e = mosfet_eval(vg - vs, vd - vs, p);
                let ieq = e.current - e.gm * (vg - vs) - e.gds * (vd - vs);
                // i(d->s) = gm*(vg - vs) + gds*(vd - vs) + ieq
                m.add(d, g, e.gm);
                m.add(d, s, -e.gm - e.gds);
                m.add(d, d, e.gds);
                m.add(s, g, -e.gm);
                m.add(s, s, e.gm + e.gds);
                m.add(s, d, -e.gds);
                m.current(d, s, ieq);
            }
        }
    }
    if inputs.gmin > 0.0 {
        for i in 0..layout.node_count() {
            m.a[i * m.dim + i] += inputs.gmin;
        }
    }
    m
}

/// Current entering the first terminal of device `idx` at solution `x`.
pub fn device_current(
    circuit: &Circuit,
    layout: &Layout,
    x: &[f64],
    inputs: &StampInputs,
    idx: usize,
) -> f64 {
    let t = layout.terminals(idx);
    let dev = &circuit.devices[idx];
    match &dev.params {
        DeviceParams::Resistor { resistance } => {
            (voltage(x, t[0]) - voltage(x, t[1])) / resistance
        }
        DeviceParams::Memristor(p) => {
            (voltage(x, t[0]) - voltage(x, t[1])) / memristance(inputs.memristor_x[idx], p)
        }
        DeviceParams::Capacitor { .. } => match inputs.capacitors {
            Some(caps) => caps[idx].geq * (voltage(x, t[0]) - voltage(x, t[1])) + caps[idx].ihist,
            None => 0.0,
        },
        DeviceParams::VSource(_) => x[layout.branch(idx).expect("vsource branch")],
        DeviceParams::ISource(w) => source_value(w, inputs),
        DeviceParams::Nmos(p) => {
            let (vd, vg, vs) = (voltage(x, t[0]), voltage(x, t[1]), voltage(x, t[2]));
            mosfet_eval(vg - vs, vd - vs, p).current
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::load;

    fn dc_inputs(x: &[f64]) -> StampInputs<'_> {
        StampInputs {
            source_scale: 1.0,
            time: None,
            memristor_x: x,
            capacitors: None,
            gmin: 0.0,
        }
    }

    #[test]
    fn divider_dimension() {
        let c = load("V1 in 0 3\nR1 in 0 1k\n").unwrap();
        let layout = Layout::new(&c);
        assert_eq!(layout.dim(), 2);
        let m = assemble_mna(&c, &layout, &[0.0; 2], &dc_inputs(&[0.0; 2]));
        assert_eq!(m.a, vec![1e-3, 1.0, 1.0, 0.0]);
        assert_eq!(m.rhs, vec![0.0, 3.0]);
    }

    #[test]
    fn memristor_stamp_uses_drift_resistance() {
        let c = load("V1 a 0 1\nXM mem a 0 RON=500 ROFF=1500 RINIT=750\n").unwrap();
        let layout = Layout::new(&c);
        let m = assemble_mna(&c, &layout, &[0.0; 2], &dc_inputs(&[0.0, 0.5]));
        assert_eq!(m.get(0, 0), 1.0 / 1000.0);
    }

    #[test]
    fn mirror_dimension() {
        let c = load(
            "VDD vdd 0 3\nRB vdd in 10k\nXM1 mem in g RON=500 ROFF=1500 RINIT=500\n\
             M1 nmos g g 0 W=1.8u L=180n\nM2 nmos d g 0 W=1.8u L=180n\n\
             XM2 mem out d RON=500 ROFF=1500 RINIT=500\nVOUT out 0 3\n",
        )
        .unwrap();
        // nodes vdd in g d out + two source branches
        assert_eq!(Layout::new(&c).dim(), 5 + 2);
    }
}
