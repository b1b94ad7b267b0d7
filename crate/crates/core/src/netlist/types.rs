use std::f64::consts::PI;
use std::fmt;

use indexmap::IndexSet;

use crate::devices::{MemristorParams, MosfetParams};

pub const GROUND: &str = "0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    Resistor,
    Capacitor,
    VSource,
    ISource,
    Nmos,
    Memristor,
}

impl DeviceKind {
    pub fn keyword(self) -> &'static str {
        match self {
            DeviceKind::Resistor => "res",
            DeviceKind::Capacitor => "cap",
            DeviceKind::VSource => "vsrc",
            DeviceKind::ISource => "isrc",
            DeviceKind::Nmos => "nmos",
            DeviceKind::Memristor => "mem",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word.to_ascii_lowercase().as_str() {
            "res" => DeviceKind::Resistor,
            "cap" => DeviceKind::Capacitor,
            "vsrc" => DeviceKind::VSource,
            "isrc" => DeviceKind::ISource,
            "nmos" => DeviceKind::Nmos,
            "mem" => DeviceKind::Memristor,
            _ => return None,
        })
    }

    pub fn terminal_count(self) -> usize {
        match self {
            DeviceKind::Nmos => 3,
            _ => 2,
        }
    }
}

/// Time dependence of an independent source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceWaveform {
    Dc(f64),
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        /// Degrees.
        phase: f64,
    },
}

impl SourceWaveform {
    /// Value used by DC analyses: the level, or the sine offset.
    pub fn dc_value(&self) -> f64 {
        match *self {
            SourceWaveform::Dc(v) => v,
            SourceWaveform::Sine { offset, .. } => offset,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match *self {
            SourceWaveform::Dc(v) => v,
            SourceWaveform::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => offset + amplitude * (2.0 * PI * frequency * t + phase.to_radians()).sin(),
        }
    }

    pub fn frequency(&self) -> Option<f64> {
        match *self {
            SourceWaveform::Dc(_) => None,
            SourceWaveform::Sine { frequency, .. } => Some(frequency),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeviceParams {
    Resistor { resistance: f64 },
    Capacitor { capacitance: f64 },
    VSource(SourceWaveform),
    ISource(SourceWaveform),
    Nmos(MosfetParams),
    Memristor(MemristorParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub name: String,
    /// Terminal nodes: (p, n) for two-terminal devices, (drain, gate, source) for nmos.
    pub nodes: Vec<String>,
    pub params: DeviceParams,
}

impl Device {
    pub fn kind(&self) -> DeviceKind {
        match self.params {
            DeviceParams::Resistor { .. } => DeviceKind::Resistor,
            DeviceParams::Capacitor { .. } => DeviceKind::Capacitor,
            DeviceParams::VSource(_) => DeviceKind::VSource,
            DeviceParams::ISource(_) => DeviceKind::ISource,
            DeviceParams::Nmos(_) => DeviceKind::Nmos,
            DeviceParams::Memristor(_) => DeviceKind::Memristor,
        }
    }

    pub fn is_named(&self, name: &str) -> bool {
        self.name.eq_ignore_ascii_case(name)
    }

    pub fn waveform(&self) -> Option<&SourceWaveform> {
        match &self.params {
            DeviceParams::VSource(w) | DeviceParams::ISource(w) => Some(w),
            _ => None,
        }
    }

    pub fn mosfet(&self) -> Option<&MosfetParams> {
        match &self.params {
            DeviceParams::Nmos(p) => Some(p),
            _ => None,
        }
    }

    pub fn memristor(&self) -> Option<&MemristorParams> {
        match &self.params {
            DeviceParams::Memristor(p) => Some(p),
            _ => None,
        }
    }
}

/// `<device>.<PARAM>` reference used by sweeps and overrides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPath {
    pub device: String,
    /// Upper-case parameter keyword.
    pub param: String,
}

impl ParamPath {
    pub fn new(device: impl Into<String>, param: impl Into<String>) -> Self {
        Self {
            device: device.into(),
            param: param.into().to_ascii_uppercase(),
        }
    }
}

impl std::str::FromStr for ParamPath {
    type Err = crate::error::NetlistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('.') {
            Some((d, p)) if !d.is_empty() && !p.is_empty() && !p.contains('.') => {
                Ok(ParamPath::new(d, p))
            }
            _ => Err(crate::error::NetlistError::BadValue(s.to_string())),
        }
    }
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.device, self.param)
    }
}

/// A probed quantity: a node voltage or a device current.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Observable {
    Voltage(String),
    /// Current entering the device's first terminal.
    Current(String),
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Voltage(n) => write!(f, "V({n})"),
            Observable::Current(d) => write!(f, "I({d})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcSweep {
    pub target: ParamPath,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DcSweep {
    /// Sweep points `start + i*step` up to and including `stop`.
    pub fn values(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let n = (span + 1e-9).floor().max(0.0) as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranSpec {
    pub tstop: f64,
    pub points_per_period: usize,
    pub periods: usize,
    /// Start from all-zero node voltages instead of the operating point.
    pub uic: bool,
}

impl TranSpec {
    pub fn period(&self) -> f64 {
        self.tstop / self.periods as f64
    }

    pub fn dt(&self) -> f64 {
        self.period() / self.points_per_period as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThdSpec {
    pub observable: Observable,
    pub fundamental_hz: f64,
    pub n_harmonics: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisDirective {
    Op,
    DcSweep(DcSweep),
    Tran(TranSpec),
    Thd(ThdSpec),
    HParam { input: String, output: String },
}

/// A parsed circuit. Devices keep source order; nodes keep first-appearance order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub nodes: IndexSet<String>,
    pub devices: Vec<Device>,
    pub directives: Vec<AnalysisDirective>,
}

impl Circuit {
    pub fn device(&self, name: &str) -> Option<&Device> {
        self.devices.iter().find(|d| d.is_named(name))
    }

    pub fn device_mut(&mut self, name: &str) -> Option<&mut Device> {
        self.devices.iter_mut().find(|d| d.is_named(name))
    }

    pub fn has_node(&self, node: &str) -> bool {
        self.nodes.contains(node)
    }

    /// Adds a device, registering its nodes.
    pub fn push(&mut self, device: Device) {
        for n in &device.nodes {
            self.nodes.insert(n.clone());
        }
        self.devices.push(device);
    }

    pub fn devices_of(&self, kind: DeviceKind) -> impl Iterator<Item = &Device> {
        self.devices.iter().filter(move |d| d.kind() == kind)
    }

    /// Distinct sine frequencies among the independent sources, ascending.
    pub fn sine_frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self
            .devices
            .iter()
            .filter_map(|d| d.waveform().and_then(SourceWaveform::frequency))
            .collect();
        f.sort_by(f64::total_cmp);
        f.dedup();
        f
    }

    pub fn has_memristors(&self) -> bool {
        self.devices_of(DeviceKind::Memristor).next().is_some()
    }

    /// Reads a numeric device parameter through its path.
    pub fn param(&self, path: &ParamPath) -> Option<f64> {
        let dev = self.device(&path.device)?;
        let p = path.param.as_str();
        Some(match &dev.params {
            DeviceParams::Resistor { resistance } if matches!(p, "R" | "VALUE") => *resistance,
            DeviceParams::Capacitor { capacitance } if matches!(p, "C" | "VALUE") => *capacitance,
            DeviceParams::VSource(w) | DeviceParams::ISource(w) => match (w, p) {
                (_, "DC" | "VALUE" | "OFFSET") => w.dc_value(),
                (SourceWaveform::Sine { amplitude, .. }, "AMP") => *amplitude,
                (SourceWaveform::Sine { frequency, .. }, "FREQ") => *frequency,
                (SourceWaveform::Sine { phase, .. }, "PHASE") => *phase,
                _ => return None,
            },
            DeviceParams::Nmos(m) => match p {
                "W" => m.w,
                "L" => m.l,
                "LINT" => m.lint,
                "VT0" => m.vt0,
                "KP" => m.kp,
                "LAMBDA" => m.lambda,
                _ => return None,
            },
            DeviceParams::Memristor(m) => match p {
                "RON" => m.r_on,
                "ROFF" => m.r_off,
                "RINIT" => m.r_init,
                "D" => m.d,
                "MU" => m.mu_d,
                "P" => m.p as f64,
                "VT" => m.v_t,
                _ => return None,
            },
            _ => return None,
        })
    }

    /// Writes a numeric device parameter. Range checks are left to validation.
    pub fn set_param(&mut self, path: &ParamPath, value: f64) -> Result<(), crate::error::NetlistError> {
        let unknown = || crate::error::NetlistError::UnknownReference(path.to_string());
        let dev = self.device_mut(&path.device).ok_or_else(unknown)?;
        let p = path.param.as_str();
        match &mut dev.params {
            DeviceParams::Resistor { resistance } if matches!(p, "R" | "VALUE") => {
                *resistance = value
            }
            DeviceParams::Capacitor { capacitance } if matches!(p, "C" | "VALUE") => {
                *capacitance = value
            }
            DeviceParams::VSource(w) | DeviceParams::ISource(w) => match (w, p) {
                (SourceWaveform::Dc(v), "DC" | "VALUE" | "OFFSET") => *v = value,
                (SourceWaveform::Sine { offset, .. }, "DC" | "VALUE" | "OFFSET") => *offset = value,
                (SourceWaveform::Sine { amplitude, .. }, "AMP") => *amplitude = value,
                (SourceWaveform::Sine { frequency, .. }, "FREQ") => *frequency = value,
                (SourceWaveform::Sine { phase, .. }, "PHASE") => *phase = value,
                _ => return Err(unknown()),
            },
            DeviceParams::Nmos(m) => match p {
                "W" => m.w = value,
                "L" => m.l = value,
                "LINT" => m.lint = value,
                "VT0" => m.vt0 = value,
                "KP" => m.kp = value,
                "LAMBDA" => m.lambda = value,
                _ => return Err(unknown()),
            },
            DeviceParams::Memristor(m) => match p {
                "RON" => m.r_on = value,
                "ROFF" => m.r_off = value,
                "RINIT" => m.r_init = value,
                "D" => m.d = value,
                "MU" => m.mu_d = value,
                "P" => {
                    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
                        return Err(crate::error::NetlistError::InvalidParam {
                            device: dev.name.clone(),
                            param: "P".into(),
                            reason: "must be a positive integer".into(),
                        });
                    }
                    m.p = value as u32
                }
                "VT" => m.v_t = value,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// The same circuit with every memristor replaced by a short.
    ///
    /// Each memristor's second terminal is merged into its first (ground wins),
    /// and directives that name merged nodes are rewritten.
    pub fn without_memristors(&self) -> Circuit {
        let mut alias: std::collections::HashMap<String, String> = Default::default();
        fn root(alias: &std::collections::HashMap<String, String>, n: &str) -> String {
            let mut cur = n.to_string();
            while let Some(next) = alias.get(&cur) {
                cur = next.clone();
            }
            cur
        }
        for d in self.devices_of(DeviceKind::Memristor) {
            let a = root(&alias, &d.nodes[0]);
            let b = root(&alias, &d.nodes[1]);
            if a == b {
                continue;
            }
            let (keep, drop) = if b == GROUND { (b, a) } else { (a, b) };
            alias.insert(drop, keep);
        }
        let mut out = Circuit::default();
        for d in &self.devices {
            if d.kind() == DeviceKind::Memristor {
                continue;
            }
            let mut d = d.clone();
            for n in &mut d.nodes {
                *n = root(&alias, n);
            }
            out.push(d);
        }
        out.directives = self
            .directives
            .iter()
            .filter(|dir| match dir {
                AnalysisDirective::DcSweep(s) => self
                    .device(&s.target.device)
                    .is_none_or(|d| d.kind() != DeviceKind::Memristor),
                AnalysisDirective::Thd(t) => match &t.observable {
                    Observable::Current(d) => self
                        .device(d)
                        .is_none_or(|d| d.kind() != DeviceKind::Memristor),
                    Observable::Voltage(_) => true,
                },
                _ => true,
            })
            .cloned()
            .map(|dir| match dir {
                AnalysisDirective::Thd(mut t) => {
                    if let Observable::Voltage(n) = &t.observable {
                        t.observable = Observable::Voltage(root(&alias, n));
                    }
                    AnalysisDirective::Thd(t)
                }
                other => other,
            })
            .collect();
        out
    }
}
