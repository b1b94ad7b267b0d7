use std::collections::BTreeMap;

use super::dc::{lookup, solve_dc_from, OperatingPoint};
use crate::error::{EngineError, Error, NetlistError, Result};
use crate::netlist::{format_value, DcSweep, DeviceParams, ParamPath, ValidCircuit};

/// One operating point per swept parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub target: ParamPath,
    pub param_values: Vec<f64>,
    /// `V(node)` and `I(device)` columns, plus any derived columns.
    pub observables: BTreeMap<String, Vec<f64>>,
    /// Swept path and the DC setting of every independent source.
    pub metadata: BTreeMap<String, String>,
    pub points: Vec<OperatingPoint>,
}

impl SweepResult {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        lookup(&self.observables, name).map(Vec::as_slice)
    }

    /// Adds `I_ref`, `I_out` and `dI = I_ref - I_out`, taking each as the
    /// current delivered by the named source.
    pub fn with_mirror_currents(mut self, reference: &str, output: &str) -> Result<Self> {
        let delivered = |src: &str| -> Result<Vec<f64>> {
            self.points
                .iter()
                .map(|op| {
                    op.delivered(src)
                        .ok_or_else(|| NetlistError::UnknownReference(src.to_string()).into())
                })
                .collect()
        };
        let i_ref = delivered(reference)?;
        let i_out = delivered(output)?;
        let di = i_ref.iter().zip(&i_out).map(|(a, b)| a - b).collect();
        self.observables.insert("I_ref".into(), i_ref);
        self.observables.insert("I_out".into(), i_out);
        self.observables.insert("dI".into(), di);
        Ok(self)
    }
}

/// Sweeps the directive's parameter from start to stop.
pub fn dc_sweep(circuit: &ValidCircuit, sweep: &DcSweep) -> Result<SweepResult> {
    dc_sweep_values(circuit, &sweep.target, &sweep.values())
}

/// Sweeps a parameter over explicit values, each point seeded with the
/// previous solution.
pub fn dc_sweep_values(
    circuit: &ValidCircuit,
    target: &ParamPath,
    values: &[f64],
) -> Result<SweepResult> {
    if circuit.param(target).is_none() {
        return Err(NetlistError::UnknownReference(target.to_string()).into());
    }
    if values.is_empty() {
        return Err(NetlistError::BadValue("empty sweep".into()).into());
    }
    let ascending = values.windows(2).all(|w| w[1] > w[0]);
    let descending = values.windows(2).all(|w| w[1] < w[0]);
    if !(ascending || descending) {
        return Err(NetlistError::BadValue("sweep values must be strictly monotone".into()).into());
    }

    let mut points: Vec<OperatingPoint> = Vec::with_capacity(values.len());
    for &value in values {
        let wrap = |e: Error| EngineError::SweepPoint {
            path: target.to_string(),
            value,
            source: Box::new(e),
        };
        let c = circuit
            .with_param(target, value)
            .map_err(|e| wrap(e.into()))?;
        let op = solve_dc_from(&c, points.last()).map_err(wrap)?;
        points.push(op);
    }

    let mut observables: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for op in &points {
        for (n, v) in &op.node_voltages {
            observables.entry(format!("V({n})")).or_default().push(*v);
        }
        for (d, i) in &op.branch_currents {
            observables.entry(format!("I({d})")).or_default().push(*i);
        }
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("swept".to_string(), target.to_string());
    for d in &circuit.devices {
        if let DeviceParams::VSource(w) | DeviceParams::ISource(w) = &d.params {
            if !d.is_named(&target.device) {
                metadata.insert(format!("source:{}", d.name), format_value(w.dc_value()));
            }
        }
    }
    Ok(SweepResult {
        target: target.clone(),
        param_values: values.to_vec(),
        observables,
        metadata,
        points,
    })
}
