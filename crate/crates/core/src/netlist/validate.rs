use std::collections::HashMap;
use std::ops::Deref;

use super::types::*;
use crate::error::NetlistError;

/// A circuit that passed [`validate`]. Solvers only accept this type.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidCircuit(Circuit);

impl ValidCircuit {
    pub fn into_inner(self) -> Circuit {
        self.0
    }

    /// A validated copy with one parameter changed.
    pub fn with_param(&self, path: &ParamPath, value: f64) -> Result<ValidCircuit, NetlistError> {
        let mut c = self.0.clone();
        c.set_param(path, value)?;
        validate(c)
    }

    /// A validated copy with several parameters changed.
    pub fn with_params<'a>(
        &self,
        changes: impl IntoIterator<Item = (&'a ParamPath, f64)>,
    ) -> Result<ValidCircuit, NetlistError> {
        let mut c = self.0.clone();
        for (path, value) in changes {
            c.set_param(path, value)?;
        }
        validate(c)
    }
}

impl Deref for ValidCircuit {
    type Target = Circuit;

    fn deref(&self) -> &Circuit {
        &self.0
    }
}

fn invalid(device: &Device, param: &str, reason: impl Into<String>) -> NetlistError {
    NetlistError::InvalidParam {
        device: device.name.clone(),
        param: param.to_string(),
        reason: reason.into(),
    }
}

fn check_waveform(device: &Device, w: &SourceWaveform) -> Result<(), NetlistError> {
    match *w {
        SourceWaveform::Dc(v) => {
            if !v.is_finite() {
                return Err(invalid(device, "DC", "must be finite"));
            }
        }
        SourceWaveform::Sine {
            offset,
            amplitude,
            frequency,
            phase,
        } => {
            if ![offset, amplitude, frequency, phase].iter().all(|x| x.is_finite()) {
                return Err(invalid(device, "SIN", "values must be finite"));
            }
            if frequency <= 0.0 {
                return Err(invalid(device, "FREQ", "must be > 0"));
            }
            if amplitude < 0.0 {
                return Err(invalid(device, "AMP", "must be >= 0"));
            }
        }
    }
    Ok(())
}

fn check_device(device: &Device) -> Result<(), NetlistError> {
    match &device.params {
        DeviceParams::Resistor { resistance: x } | DeviceParams::Capacitor { capacitance: x } => {
            let name = if device.kind() == DeviceKind::Resistor { "R" } else { "C" };
            if !x.is_finite() || *x <= 0.0 {
                return Err(invalid(device, name, "must be finite and > 0"));
            }
        }
        DeviceParams::VSource(w) | DeviceParams::ISource(w) => check_waveform(device, w)?,
        DeviceParams::Nmos(m) => m.check().map_err(|e| invalid(device, e.param, e.reason))?,
        DeviceParams::Memristor(m) => m.check().map_err(|e| invalid(device, e.param, e.reason))?,
    }
    Ok(())
}

fn check_directives(c: &Circuit) -> Result<(), NetlistError> {
    let unknown = |what: String| Err(NetlistError::UnknownReference(what));
    for d in &c.directives {
        match d {
            AnalysisDirective::Op | AnalysisDirective::Tran(_) => {}
            AnalysisDirective::DcSweep(s) => {
                if c.param(&s.target).is_none() {
                    return unknown(s.target.to_string());
                }
            }
            AnalysisDirective::Thd(t) => match &t.observable {
                Observable::Voltage(n) if !c.has_node(n) => return unknown(t.observable.to_string()),
                Observable::Current(n) if c.device(n).is_none() => {
                    return unknown(t.observable.to_string())
                }
                _ => {}
            },
            AnalysisDirective::HParam { input, output } => {
                for s in [input, output] {
                    if c.device(s).map(Device::kind) != Some(DeviceKind::VSource) {
                        return unknown(format!("{s} (expected a voltage source)"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks ground presence, connectivity and parameter ranges.
///
/// A node is floating when it is touched by fewer than two device
/// terminals or has no device path to ground.
pub fn validate(circuit: Circuit) -> Result<ValidCircuit, NetlistError> {
    if !circuit.has_node(GROUND) {
        return Err(NetlistError::MissingGround);
    }
    let mut seen = std::collections::HashSet::new();
    for d in &circuit.devices {
        if d.nodes.len() != d.kind().terminal_count() {
            return Err(invalid(d, "nodes", "terminal count does not match the device kind"));
        }
        if !seen.insert(d.name.to_ascii_uppercase()) {
            return Err(NetlistError::DuplicateName {
                line: 0,
                name: d.name.clone(),
            });
        }
        if let Some(n) = d.nodes.iter().find(|n| !circuit.has_node(n)) {
            return Err(NetlistError::UnknownReference(n.clone()));
        }
        check_device(d)?;
    }

    let index: HashMap<&str, usize> = circuit
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut degree = vec![0usize; circuit.nodes.len()];
    let mut parent: Vec<usize> = (0..circuit.nodes.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for d in &circuit.devices {
        let ids: Vec<usize> = d.nodes.iter().map(|n| index[n.as_str()]).collect();
        for &i in &ids {
            degree[i] += 1;
        }
        for w in ids.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a] = b;
        }
    }
    let ground = find(&mut parent, index[GROUND]);
    for (i, node) in circuit.nodes.iter().enumerate() {
        if node == GROUND {
            continue;
        }
        if degree[i] < 2 || find(&mut parent, i) != ground {
            return Err(NetlistError::FloatingNode { node: node.clone() });
        }
    }

    check_directives(&circuit)?;
    Ok(ValidCircuit(circuit))
}
