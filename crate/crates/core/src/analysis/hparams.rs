//! Two-port hybrid parameters of a current mirror.

use crate::devices::{memristance, Region};
use crate::engine::{solve_dc, solve_dc_from, OperatingPoint};
use crate::error::{AnalysisError, NetlistError, Result};
use crate::netlist::{Circuit, DeviceKind, ParamPath, ValidCircuit};

/// Relative port-voltage perturbation for central differences.
pub const PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HParams {
    /// Input impedance (Ω).
    pub h11: f64,
    /// Reverse voltage gain.
    pub h12: f64,
    /// Forward current gain.
    pub h21: f64,
    /// Output admittance (S).
    pub h22: f64,
}

/// Device roles in a two-transistor mirror, optionally with a series memristor per side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorTopology {
    /// Diode-connected input transistor.
    pub m1: String,
    /// Output transistor sharing the gate of `m1`.
    pub m2: String,
    /// Memristor touching the drain of `m1`.
    pub mem1: Option<String>,
    /// Memristor touching the drain of `m2`.
    pub mem2: Option<String>,
}

impl MirrorTopology {
    /// Finds a grounded diode-connected NMOS and the NMOS sharing its gate.
    pub fn detect(circuit: &Circuit) -> Result<Self> {
        let fail = || AnalysisError::Invalid("no current-mirror pair found".into());
        let nmos: Vec<_> = circuit.devices_of(DeviceKind::Nmos).collect();
        let m1 = nmos
            .iter()
            .find(|d| d.nodes[0] == d.nodes[1] && d.nodes[2] == crate::netlist::GROUND)
            .or_else(|| nmos.iter().find(|d| d.nodes[0] == d.nodes[1]))
            .ok_or_else(fail)?;
        let m2 = nmos
            .iter()
            .find(|d| d.name != m1.name && d.nodes[1] == m1.nodes[1])
            .ok_or_else(fail)?;
        let touching = |node: &str| {
            circuit
                .devices_of(DeviceKind::Memristor)
                .find(|d| d.nodes.iter().any(|n| n == node))
                .map(|d| d.name.clone())
        };
        Ok(Self {
            m1: m1.name.clone(),
            m2: m2.name.clone(),
            mem1: touching(&m1.nodes[0]),
            mem2: touching(&m2.nodes[0]),
        })
    }
}

/// Small-signal quantities the analytic h-parameter formulas need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallSignalView {
    pub gm1: f64,
    pub gm2: f64,
    /// `1/gds2` (Ω); infinite when `gds2 = 0`.
    pub ro2: f64,
    pub r_mem1: f64,
    pub r_mem2: f64,
    /// Geometric mirror ratio `(W/L_eff)2 / (W/L_eff)1`.
    pub n: f64,
}

impl SmallSignalView {
    pub fn from_operating_point(
        circuit: &Circuit,
        op: &OperatingPoint,
        topo: &MirrorTopology,
    ) -> Result<Self> {
        let missing = |name: &str| NetlistError::UnknownReference(name.to_string());
        let ss = |name: &str| op.small_signal(name).copied().ok_or_else(|| missing(name));
        let (s1, s2) = (ss(&topo.m1)?, ss(&topo.m2)?);
        for (name, s) in [(&topo.m1, s1), (&topo.m2, s2)] {
            if s.region != Region::Saturation {
                return Err(AnalysisError::NotSaturated(name.clone()).into());
            }
        }
        let r_mem = |name: &Option<String>| -> Result<f64> {
            match name {
                Some(name) => memristance_at(circuit, op, name).ok_or_else(|| missing(name).into()),
                None => Ok(0.0),
            }
        };
        let geom = |name: &str| -> Result<f64> {
            Ok(circuit
                .device(name)
                .and_then(|d| d.mosfet())
                .ok_or_else(|| missing(name))?
                .aspect_ratio())
        };
        Ok(Self {
            gm1: s1.gm,
            gm2: s2.gm,
            ro2: 1.0 / s2.gds,
            r_mem1: r_mem(&topo.mem1)?,
            r_mem2: r_mem(&topo.mem2)?,
            n: geom(&topo.m2)? / geom(&topo.m1)?,
        })
    }
}

/// `R(x)` of a memristor at the state held in an operating point.
pub fn memristance_at(circuit: &Circuit, op: &OperatingPoint, name: &str) -> Option<f64> {
    let params = circuit.device(name)?.memristor()?;
    let x = op
        .memristor_states
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(name))
        .map(|(_, x)| *x)?;
    Some(memristance(x, params))
}

/// First-order MOSFET mirror h-parameters; with memristors, their resistances
/// add in series with the input and output resistances.
pub fn analytic_hparams(view: &SmallSignalView, with_memristor: bool) -> Result<HParams> {
    if !(view.gm1 > 0.0) {
        return Err(AnalysisError::NotSaturated("input transistor".into()).into());
    }
    let (r_mem1, r_mem2) = if with_memristor {
        (view.r_mem1, view.r_mem2)
    } else {
        (0.0, 0.0)
    };
    Ok(HParams {
        h11: 1.0 / view.gm1 + r_mem1,
        h12: 0.0,
        h21: view.gm2 / view.gm1,
        h22: 1.0 / (view.ro2 + r_mem2),
    })
}

/// Numeric h-parameters by central differences of the port sources.
///
/// Both ports are driven by voltage sources, so the short-circuit admittances
/// `y_ij = ∂i_i/∂v_j` are measured and converted; this is the same set of
/// partials as holding `v2` (for `h11`, `h21`) or `i1` (for `h12`, `h22`)
/// fixed. Port currents are the currents each source delivers into the circuit.
pub fn extract_hparams_numeric(circuit: &ValidCircuit, input: &str, output: &str) -> Result<HParams> {
    for s in [input, output] {
        if circuit.device(s).map(|d| d.kind()) != Some(DeviceKind::VSource) {
            return Err(NetlistError::UnknownReference(format!("{s} (expected a voltage source)")).into());
        }
    }
    let op = solve_dc(circuit)?;
    let p_in = ParamPath::new(input, "DC");
    let p_out = ParamPath::new(output, "DC");
    let v1 = circuit.param(&p_in).expect("source level");
    let v2 = circuit.param(&p_out).expect("source level");
    let step = |v: f64| if v != 0.0 { PERTURBATION * v.abs() } else { PERTURBATION };

    let port_currents = |path: &ParamPath, value: f64| -> Result<(f64, f64)> {
        let c = circuit.with_param(path, value)?;
        let sol = solve_dc_from(&c, Some(&op))?;
        Ok((
            sol.delivered(input).expect("input source"),
            sol.delivered(output).expect("output source"),
        ))
    };
    let d1 = step(v1);
    let (i1p, i2p) = port_currents(&p_in, v1 + d1)?;
    let (i1m, i2m) = port_currents(&p_in, v1 - d1)?;
    let y11 = (i1p - i1m) / (2.0 * d1);
    let y21 = (i2p - i2m) / (2.0 * d1);
    let d2 = step(v2);
    let (i1p, i2p) = port_currents(&p_out, v2 + d2)?;
    let (i1m, i2m) = port_currents(&p_out, v2 - d2)?;
    let y12 = (i1p - i1m) / (2.0 * d2);
    let y22 = (i2p - i2m) / (2.0 * d2);

    if y11 == 0.0 {
        return Err(AnalysisError::Invalid("input port draws no small-signal current".into()).into());
    }
    Ok(HParams {
        h11: 1.0 / y11,
        h12: -y12 / y11,
        h21: y21 / y11,
        h22: y22 - y12 * y21 / y11,
    })
}
