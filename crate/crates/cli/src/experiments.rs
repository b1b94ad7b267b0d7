//! The four studies: THD against frequency and channel length, and DC current
//! imbalance against channel-length and memristor-resistance mismatch.

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use mirrorsim_core::analysis::{linear_fit, memristance_at, thd_report, FitResult, MirrorTopology, ThdReport};
use mirrorsim_core::engine::{dc_sweep_values, transient};
use mirrorsim_core::netlist::{load, validate, Observable, ParamPath, TranSpec, ValidCircuit};

use crate::config::{Experiment, ExperimentConfig, QUASI_STATIC_LIMIT_HZ};

pub const MEMRISTOR_CM: &str = include_str!("../netlists/memristor_cm.cir");
pub const BASIC_CM: &str = include_str!("../netlists/basic_cm.cir");
pub const CASCODE_CM: &str = include_str!("../netlists/cascode_cm.cir");
pub const WILSON_CM: &str = include_str!("../netlists/wilson_cm.cir");

pub const MEMRISTIVE: &str = "memristive";
pub const BASELINE: &str = "baseline";

/// A circuit under study and the roles of its devices.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: &'static str,
    pub circuit: ValidCircuit,
    pub topology: MirrorTopology,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThdRow {
    pub variant: &'static str,
    pub supply_v: f64,
    /// Effective channel length, for the length study.
    pub length_m: Option<f64>,
    pub frequency_hz: f64,
    pub report: ThdReport,
}

impl ThdRow {
    pub fn quasi_static(&self) -> bool {
        self.frequency_hz > QUASI_STATIC_LIMIT_HZ
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcRow {
    pub variant: &'static str,
    pub supply_v: f64,
    /// Swept parameter path.
    pub swept: String,
    /// Length offset (m) or memristor resistance setting (Ω).
    pub x: f64,
    /// Value written to the swept parameter.
    pub param_value: f64,
    /// Output-side memristance at the operating point.
    pub r_mem: Option<f64>,
    pub i_ref: f64,
    pub i_out: f64,
    pub di: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub variant: &'static str,
    pub supply_v: f64,
    /// What the fit is grouped by: a frequency or a swept parameter.
    pub group: String,
    pub x: &'static str,
    pub y: &'static str,
    pub fit: FitResult,
    /// Slope in the unit of `display_unit`.
    pub slope_display: f64,
    pub display_unit: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub config_echo: Vec<(String, String)>,
    pub thd: Vec<ThdRow>,
    pub dc: Vec<DcRow>,
    pub fits: Vec<FitRow>,
}

fn read_netlist(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading netlist {}", path.display()))
}

fn apply_overrides(c: ValidCircuit, cfg: &ExperimentConfig, required: bool) -> Result<ValidCircuit> {
    let applicable: Vec<_> = cfg
        .overrides
        .iter()
        .filter(|(p, _)| required || c.device(&p.device).is_some())
        .map(|(p, v)| (p, *v))
        .collect();
    Ok(c.with_params(applicable)?)
}

/// The configured circuit and, when asked, its memristor-free counterpart.
pub fn load_variants(cfg: &ExperimentConfig, with_baseline: bool) -> Result<Vec<Variant>> {
    let text = match &cfg.netlist {
        Some(p) => read_netlist(p)?,
        None => MEMRISTOR_CM.to_string(),
    };
    let main = load(&text).context("loading netlist")?;
    let main = apply_overrides(main, cfg, true)?;
    let mut out = vec![Variant {
        label: MEMRISTIVE,
        topology: MirrorTopology::detect(&main)?,
        circuit: main.clone(),
    }];
    if with_baseline {
        let base = match &cfg.baseline {
            Some(p) => load(&read_netlist(p)?).context("loading baseline netlist")?,
            None => validate(main.without_memristors()).context("shorting memristors")?,
        };
        let base = apply_overrides(base, cfg, false)?;
        out.push(Variant {
            label: BASELINE,
            topology: MirrorTopology::detect(&base)?,
            circuit: base,
        });
    }
    Ok(out)
}

fn with_supply(c: &ValidCircuit, cfg: &ExperimentConfig, volts: f64) -> Result<ValidCircuit> {
    Ok(c.with_params([
        (&ParamPath::new(&cfg.supply_source, "DC"), volts),
        (&ParamPath::new(&cfg.output_source, "DC"), volts),
    ])?)
}

fn observable(cfg: &ExperimentConfig) -> Result<Observable> {
    let Some(text) = cfg.observable.as_deref() else {
        return Ok(Observable::Current(cfg.output_source.clone()));
    };
    let inner = |prefix: char| {
        let t = text.trim();
        let head = t.chars().next()?;
        (head.eq_ignore_ascii_case(&prefix) && t[1..].starts_with('(') && t.ends_with(')'))
            .then(|| t[2..t.len() - 1].trim().to_string())
    };
    if let Some(n) = inner('V') {
        Ok(Observable::Voltage(n))
    } else if let Some(d) = inner('I') {
        Ok(Observable::Current(d))
    } else if !text.trim().is_empty() && !text.contains(['(', ')']) {
        Ok(Observable::Voltage(text.trim().to_string()))
    } else {
        bail!("bad observable `{text}` (expected V(node), I(device) or a node name)")
    }
}

/// Transient at `f` followed by THD of the observable over the post-warmup window.
pub fn thd_at(circuit: &ValidCircuit, cfg: &ExperimentConfig, obs: &Observable, f: f64) -> Result<ThdReport> {
    let c = circuit.with_param(&ParamPath::new(&cfg.supply_source, "FREQ"), f)?;
    let spec = TranSpec {
        tstop: cfg.periods as f64 / f,
        points_per_period: cfg.points_per_period,
        periods: cfg.periods,
        uic: false,
    };
    let waves = transient(&c, &spec)?;
    Ok(thd_report(&waves, obs, f, cfg.n_harmonics, cfg.warmup_periods())?)
}

fn set_length(c: &ValidCircuit, topo: &MirrorTopology, l_eff: f64) -> Result<ValidCircuit> {
    let mut updates = Vec::new();
    for name in [&topo.m1, &topo.m2] {
        let lint = c
            .param(&ParamPath::new(name, "LINT"))
            .ok_or_else(|| anyhow!("{name} has no LINT"))?;
        updates.push((ParamPath::new(name, "L"), l_eff + 2.0 * lint));
    }
    Ok(c.with_params(updates.iter().map(|(p, v)| (p, *v)))?)
}

pub fn run_freq_thd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_thd(cfg, Experiment::FreqThd, &[None])
}

pub fn run_length_thd(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let lengths: Vec<Option<f64>> = cfg.lengths.iter().map(|l| Some(*l)).collect();
    let mut report = run_thd(cfg, Experiment::LengthThd, &lengths)?;
    let mut fits = Vec::new();
    for variant in [MEMRISTIVE, BASELINE] {
        for &supply in &cfg.supplies_for(Experiment::LengthThd) {
            for &f in &cfg.freqs {
                let (x, y): (Vec<f64>, Vec<f64>) = report
                    .thd
                    .iter()
                    .filter(|r| r.variant == variant && r.supply_v == supply && r.frequency_hz == f)
                    .map(|r| (r.length_m.expect("length row"), r.report.thd_percent))
                    .unzip();
                if x.len() < 3 {
                    continue;
                }
                let fit = linear_fit(&x, &y).with_context(|| format!("THD-vs-length fit at {f} Hz"))?;
                fits.push(FitRow {
                    variant,
                    supply_v: supply,
                    group: format!("{f}Hz"),
                    x: "length_m",
                    y: "thd_percent",
                    slope_display: fit.slope * 1e-6,
                    display_unit: "%/um",
                    fit,
                });
            }
        }
    }
    report.fits = fits;
    Ok(report)
}

fn run_thd(cfg: &ExperimentConfig, experiment: Experiment, lengths: &[Option<f64>]) -> Result<ExperimentReport> {
    if cfg.freqs.iter().any(|f| !(*f > 0.0)) {
        bail!("frequencies must be > 0");
    }
    let variants = load_variants(cfg, true)?;
    let obs = observable(cfg)?;
    let supplies = cfg.supplies_for(experiment);
    let mut jobs = Vec::new();
    for v in &variants {
        for &s in &supplies {
            for &l in lengths {
                for &f in &cfg.freqs {
                    jobs.push((v, s, l, f));
                }
            }
        }
    }
    let thd = jobs
        .par_iter()
        .map(|&(v, supply, length, f)| -> Result<ThdRow> {
            let tag = || {
                let len = length.map_or(String::new(), |l| format!(", L_eff = {l} m"));
                format!("{} circuit at {f} Hz, supply {supply} V{len}", v.label)
            };
            let mut c = with_supply(&v.circuit, cfg, supply).with_context(tag)?;
            if let Some(l) = length {
                c = set_length(&c, &v.topology, l).with_context(tag)?;
            }
            let report = thd_at(&c, cfg, &obs, f).with_context(tag)?;
            Ok(ThdRow {
                variant: v.label,
                supply_v: supply,
                length_m: length,
                frequency_hz: f,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        experiment,
        config_echo: cfg.echo(experiment),
        thd,
        dc: Vec::new(),
        fits: Vec::new(),
    })
}

/// Default length offsets: -5 nm to 5 nm in 1 nm steps.
pub fn default_length_offsets() -> Vec<f64> {
    (-5..=5).map(|k| k as f64 * 1e-9).collect()
}

fn dc_rows(
    v: &Variant,
    c: &ValidCircuit,
    cfg: &ExperimentConfig,
    supply: f64,
    path: &ParamPath,
    xs: &[f64],
    values: &[f64],
) -> Result<Vec<DcRow>> {
    let sweep = dc_sweep_values(c, path, values)?
        .with_mirror_currents(&cfg.supply_source, &cfg.output_source)?;
    let col = |name: &str| sweep.observable(name).expect("mirror columns").to_vec();
    let (i_ref, i_out, di) = (col("I_ref"), col("I_out"), col("dI"));
    let mem2 = v.topology.mem2.as_deref();
    Ok((0..values.len())
        .map(|k| DcRow {
            variant: v.label,
            supply_v: supply,
            swept: path.to_string(),
            x: xs[k],
            param_value: values[k],
            r_mem: mem2.and_then(|m| memristance_at(c, &sweep.points[k], m)),
            i_ref: i_ref[k],
            i_out: i_out[k],
            di: di[k],
        })
        .collect())
}

fn fit_dc(rows: &[DcRow], x: &'static str, display: (f64, &'static str)) -> Result<Vec<FitRow>> {
    let mut groups: Vec<(&'static str, f64, String)> = Vec::new();
    for r in rows {
        let key = (r.variant, r.supply_v, r.swept.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut fits = Vec::new();
    for (variant, supply, swept) in groups {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.variant == variant && r.supply_v == supply && r.swept == swept)
            .map(|r| (r.x, r.di))
            .unzip();
        if xs.len() < 3 {
            continue;
        }
        let fit = linear_fit(&xs, &ys).with_context(|| format!("fit of dI against {swept} at {supply} V"))?;
        fits.push(FitRow {
            variant,
            supply_v: supply,
            group: swept,
            x,
            y: "di_a",
            slope_display: fit.slope * display.0,
            display_unit: display.1,
            fit,
        });
    }
    Ok(fits)
}

/// Sweeps each mirror transistor's effective length in turn through LINT,
/// the other transistor staying at its netlist value.
pub fn run_dc_length(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let variants = load_variants(cfg, true)?;
    let offsets = cfg.sweep.clone().unwrap_or_else(default_length_offsets);
    let supplies = cfg.supplies_for(Experiment::DcLength);
    let mut jobs = Vec::new();
    for v in &variants {
        for &s in &supplies {
            for dev in [&v.topology.m2, &v.topology.m1] {
                jobs.push((v, s, dev.clone()));
            }
        }
    }
    let dc = jobs
        .par_iter()
        .map(|(v, supply, dev)| -> Result<Vec<DcRow>> {
            let tag = || format!("{} circuit, {dev} length sweep at {supply} V", v.label);
            let c = with_supply(&v.circuit, cfg, *supply).with_context(tag)?;
            let path = ParamPath::new(dev.as_str(), "LINT");
            let lint0 = c.param(&path).ok_or_else(|| anyhow!("{dev} has no LINT"))?;
            // L_eff = L - 2*LINT, so a length offset dl moves LINT by -dl/2
            let values: Vec<f64> = offsets.iter().map(|dl| lint0 - 0.5 * dl).collect();
            dc_rows(v, &c, cfg, *supply, &path, &offsets, &values).with_context(tag)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let fits = fit_dc(&dc, "delta_l_m", (1e6 * 1e-9, "uA/nm"))?;
    Ok(ExperimentReport {
        experiment: Experiment::DcLength,
        config_echo: cfg.echo(Experiment::DcLength),
        thd: Vec::new(),
        dc,
        fits,
    })
}

/// Sweeps the output-side memristor's ON resistance, by default from its
/// netlist value to 10 % above in 11 points.
pub fn run_dc_ron(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let variants = load_variants(cfg, false)?;
    let v = &variants[0];
    let mem = v
        .topology
        .mem2
        .clone()
        .ok_or_else(|| anyhow!("the netlist has no memristor at the output transistor"))?;
    let path = ParamPath::new(mem.as_str(), "RON");
    let r0 = v.circuit.param(&path).expect("memristor RON");
    let values = cfg
        .sweep
        .clone()
        .unwrap_or_else(|| (0..=10).map(|k| r0 * (1.0 + 0.01 * k as f64)).collect());
    let supplies = cfg.supplies_for(Experiment::DcRon);
    let dc = supplies
        .par_iter()
        .map(|supply| -> Result<Vec<DcRow>> {
            let tag = || format!("{path} sweep at {supply} V");
            let c = with_supply(&v.circuit, cfg, *supply).with_context(tag)?;
            dc_rows(v, &c, cfg, *supply, &path, &values, &values).with_context(tag)
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let fits = fit_dc(&dc, "ron_ohm", (1e6, "uA/ohm"))?;
    Ok(ExperimentReport {
        experiment: Experiment::DcRon,
        config_echo: cfg.echo(Experiment::DcRon),
        thd: Vec::new(),
        dc,
        fits,
    })
}

pub fn run(cfg: &ExperimentConfig, experiment: Experiment) -> Result<ExperimentReport> {
    match experiment {
        Experiment::FreqThd => run_freq_thd(cfg),
        Experiment::LengthThd => run_length_thd(cfg),
        Experiment::DcLength => run_dc_length(cfg),
        Experiment::DcRon => run_dc_ron(cfg),
    }
    .with_context(|| format!("experiment {experiment}"))
}

pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<ExperimentReport>> {
    Experiment::ALL.iter().map(|&e| run(cfg, e)).collect()
}
