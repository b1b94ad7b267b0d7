//! Netlist text output. Every device is written with its explicit kind keyword.

use std::fmt;

use super::types::*;
use super::value::format_value as v;

impl fmt::Display for SourceWaveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SourceWaveform::Dc(x) => write!(f, "DC {}", v(x)),
            SourceWaveform::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => write!(
                f,
                "SIN({} {} {} {})",
                v(offset),
                v(amplitude),
                v(frequency),
                v(phase)
            ),
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.name, self.kind().keyword(), self.nodes.join(" "))?;
        match &self.params {
            DeviceParams::Resistor { resistance } => write!(f, " {}", v(*resistance)),
            DeviceParams::Capacitor { capacitance } => write!(f, " {}", v(*capacitance)),
            DeviceParams::VSource(w) | DeviceParams::ISource(w) => write!(f, " {w}"),
            DeviceParams::Nmos(m) => write!(
                f,
                " W={} L={} LINT={} VT0={} KP={} LAMBDA={}",
                v(m.w),
                v(m.l),
                v(m.lint),
                v(m.vt0),
                v(m.kp),
                v(m.lambda)
            ),
            DeviceParams::Memristor(m) => write!(
                f,
                " RON={} ROFF={} RINIT={} D={} MU={} P={} VT={}",
                v(m.r_on),
                v(m.r_off),
                v(m.r_init),
                v(m.d),
                v(m.mu_d),
                m.p,
                v(m.v_t)
            ),
        }
    }
}

impl fmt::Display for AnalysisDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisDirective::Op => write!(f, ".op"),
            AnalysisDirective::DcSweep(s) => write!(
                f,
                ".dc {} {} {} {}",
                s.target,
                v(s.start),
                v(s.stop),
                v(s.step)
            ),
            AnalysisDirective::Tran(t) => {
                write!(
                    f,
                    ".tran {} ppp={} periods={}",
                    v(t.tstop),
                    t.points_per_period,
                    t.periods
                )?;
                if t.uic {
                    write!(f, " uic")?;
                }
                Ok(())
            }
            AnalysisDirective::Thd(t) => write!(
                f,
                ".thd {} f0={} nh={}",
                t.observable,
                v(t.fundamental_hz),
                t.n_harmonics
            ),
            AnalysisDirective::HParam { input, output } => {
                write!(f, ".hparam in={input} out={output}")
            }
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.devices {
            writeln!(f, "{d}")?;
        }
        for d in &self.directives {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
