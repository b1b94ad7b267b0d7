//! Runs the analyses a netlist asks for and renders them as text.

use std::fmt::Write as _;

use anyhow::{Context, Result};

use mirrorsim_core::analysis::{
    analytic_hparams, extract_hparams_numeric, thd_report, MirrorTopology, SmallSignalView,
};
use mirrorsim_core::engine::{dc_sweep, solve_dc, transient, OperatingPoint, Waveforms};
use mirrorsim_core::netlist::{load, AnalysisDirective, ValidCircuit};

fn op_text(out: &mut String, op: &OperatingPoint) {
    let _ = writeln!(out, "operating point ({:?}, {} iterations)", op.strategy, op.iterations);
    for (n, v) in &op.node_voltages {
        let _ = writeln!(out, "  V({n}) = {v:.9} V");
    }
    for (d, i) in &op.branch_currents {
        let _ = writeln!(out, "  I({d}) = {i:.9e} A");
    }
    for (d, s) in &op.device_small_signal {
        let _ = writeln!(
            out,
            "  {d}: id = {:.6e} A, gm = {:.6e} S, gds = {:.6e} S, {:?}",
            s.id, s.gm, s.gds, s.region
        );
    }
    for (d, x) in &op.memristor_states {
        let _ = writeln!(out, "  {d}: x = {x}");
    }
}

/// Executes every directive in order; a netlist without any gets `.op`.
/// Transient waveforms are returned alongside the text.
pub fn simulate(circuit: &ValidCircuit) -> Result<(String, Vec<Waveforms>)> {
    let mut out = String::new();
    let mut waves: Vec<Waveforms> = Vec::new();
    let directives = if circuit.directives.is_empty() {
        vec![AnalysisDirective::Op]
    } else {
        circuit.directives.clone()
    };
    for d in &directives {
        match d {
            AnalysisDirective::Op => op_text(&mut out, &solve_dc(circuit).context(".op")?),
            AnalysisDirective::DcSweep(s) => {
                let r = dc_sweep(circuit, s).with_context(|| format!("{d}"))?;
                let names: Vec<&String> = r.observables.keys().collect();
                let _ = writeln!(
                    out,
                    "{},{}",
                    r.target,
                    names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
                );
                for (k, p) in r.param_values.iter().enumerate() {
                    let cols: Vec<String> = names.iter().map(|n| r.observables[*n][k].to_string()).collect();
                    let _ = writeln!(out, "{p},{}", cols.join(","));
                }
            }
            AnalysisDirective::Tran(t) => {
                let w = transient(circuit, t).with_context(|| format!("{d}"))?;
                let _ = writeln!(
                    out,
                    "transient: {} samples, dt = {:e} s, {} periods",
                    w.time.len(),
                    w.dt,
                    w.periods
                );
                waves.push(w);
            }
            AnalysisDirective::Thd(spec) => {
                let w = waves
                    .last()
                    .with_context(|| format!("{d} needs a preceding .tran"))?;
                let r = thd_report(w, &spec.observable, spec.fundamental_hz, spec.n_harmonics, w.periods / 2)
                    .with_context(|| format!("{d}"))?;
                let _ = writeln!(
                    out,
                    "THD of {} at {} Hz = {:.6e} % (periods {}..{}, {} samples/period)",
                    spec.observable,
                    spec.fundamental_hz,
                    r.thd_percent,
                    r.window.first_period,
                    r.window.first_period + r.window.period_count,
                    r.window.samples_per_period
                );
                for (k, m) in r.harmonic_magnitudes.iter().enumerate() {
                    let _ = writeln!(out, "  |c{}| = {m:.6e}", k + 1);
                }
            }
            AnalysisDirective::HParam { input, output } => {
                let h = extract_hparams_numeric(circuit, input, output).with_context(|| format!("{d}"))?;
                let _ = writeln!(
                    out,
                    "h-parameters (numeric): h11 = {:.6e} ohm, h12 = {:.3e}, h21 = {:.6}, h22 = {:.6e} S",
                    h.h11, h.h12, h.h21, h.h22
                );
                let analytic = MirrorTopology::detect(circuit).and_then(|topo| {
                    let op = solve_dc(circuit)?;
                    let view = SmallSignalView::from_operating_point(circuit, &op, &topo)?;
                    analytic_hparams(&view, topo.mem1.is_some() || topo.mem2.is_some())
                });
                if let Ok(a) = analytic {
                    let _ = writeln!(
                        out,
                        "h-parameters (analytic): h11 = {:.6e} ohm, h12 = {:.3e}, h21 = {:.6}, h22 = {:.6e} S",
                        a.h11, a.h12, a.h21, a.h22
                    );
                }
            }
        }
    }
    Ok((out, waves))
}

/// Writes one CSV per transient: `time` then every signal and memristor state.
pub fn waveform_csv(w: &Waveforms) -> Result<String> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string()];
    header.extend(w.signals.keys().cloned());
    header.extend(w.memristor_states.keys().map(|k| format!("x({k})")));
    wr.write_record(&header)?;
    for (k, t) in w.time.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(w.signals.values().map(|s| s[k].to_string()));
        row.extend(w.memristor_states.values().map(|s| s[k].to_string()));
        wr.write_record(&row)?;
    }
    Ok(String::from_utf8(wr.into_inner().context("flushing csv")?)?)
}

pub fn simulate_text(text: &str) -> Result<(String, Vec<Waveforms>)> {
    let circuit = load(text).context("loading netlist")?;
    simulate(&circuit)
}
