//! Experiment configuration from flags and `key = value` files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use mirrorsim_core::netlist::{parse_value, DcSweep, ParamPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    FreqThd,
    LengthThd,
    DcLength,
    DcRon,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::FreqThd,
        Experiment::LengthThd,
        Experiment::DcLength,
        Experiment::DcRon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FreqThd => "freq-thd",
            Experiment::LengthThd => "length-thd",
            Experiment::DcLength => "dc-length",
            Experiment::DcRon => "dc-ron",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| anyhow!("unknown experiment `{s}` (expected freq-thd, length-thd, dc-length or dc-ron)"))
    }
}

pub const DEFAULT_FREQS: [f64; 6] = [1.0, 1e2, 1e4, 1e6, 1e8, 1e10];
pub const DEFAULT_LENGTHS: [f64; 4] = [17e-9, 20e-9, 25e-9, 30e-9];
pub const DEFAULT_DC_SUPPLIES: [f64; 3] = [3.0, 5.0, 8.0];
pub const DEFAULT_AC_SUPPLY: f64 = 3.0;
/// Above this the square-law devices are run far outside their validity.
pub const QUASI_STATIC_LIMIT_HZ: f64 = 1e9;

/// Unparsed settings; every field is the raw text of one key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawOptions {
    pub netlist: Option<String>,
    pub baseline: Option<String>,
    pub freqs: Option<String>,
    pub lengths: Option<String>,
    pub sweep: Option<String>,
    pub supplies: Option<String>,
    pub ppp: Option<String>,
    pub periods: Option<String>,
    pub harmonics: Option<String>,
    pub observable: Option<String>,
    pub supply_source: Option<String>,
    pub output_source: Option<String>,
    pub set: Vec<String>,
    pub out: Option<String>,
}

impl RawOptions {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawOptions::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            let value = value.trim().to_string();
            let slot = match key.trim().to_ascii_lowercase().replace('_', "-").as_str() {
                "netlist" => &mut raw.netlist,
                "baseline" => &mut raw.baseline,
                "freqs" => &mut raw.freqs,
                "lengths" => &mut raw.lengths,
                "sweep" => &mut raw.sweep,
                "supplies" => &mut raw.supplies,
                "ppp" => &mut raw.ppp,
                "periods" => &mut raw.periods,
                "harmonics" => &mut raw.harmonics,
                "observable" => &mut raw.observable,
                "supply-source" => &mut raw.supply_source,
                "output-source" => &mut raw.output_source,
                "out" => &mut raw.out,
                "set" => {
                    raw.set.extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()));
                    continue;
                }
                other => bail!("line {}: unknown key `{other}`", n + 1),
            };
            *slot = Some(value);
        }
        Ok(raw)
    }

    /// Field-wise merge where `self` wins; overrides from both are kept, `self` last.
    pub fn over(self, base: RawOptions) -> RawOptions {
        let mut set = base.set;
        set.extend(self.set);
        RawOptions {
            netlist: self.netlist.or(base.netlist),
            baseline: self.baseline.or(base.baseline),
            freqs: self.freqs.or(base.freqs),
            lengths: self.lengths.or(base.lengths),
            sweep: self.sweep.or(base.sweep),
            supplies: self.supplies.or(base.supplies),
            ppp: self.ppp.or(base.ppp),
            periods: self.periods.or(base.periods),
            harmonics: self.harmonics.or(base.harmonics),
            observable: self.observable.or(base.observable),
            supply_source: self.supply_source.or(base.supply_source),
            output_source: self.output_source.or(base.output_source),
            set,
            out: self.out.or(base.out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `None` selects the built-in memristive mirror.
    pub netlist: Option<PathBuf>,
    /// Memristor-free counterpart; `None` derives it by shorting the memristors.
    pub baseline: Option<PathBuf>,
    pub freqs: Vec<f64>,
    /// Effective channel lengths for length-thd (m).
    pub lengths: Vec<f64>,
    /// Explicit sweep for dc-length (length offsets, m) or dc-ron (Ω).
    pub sweep: Option<Vec<f64>>,
    /// `None` uses the experiment's default supplies.
    pub supplies: Option<Vec<f64>>,
    pub points_per_period: usize,
    pub periods: usize,
    pub n_harmonics: usize,
    /// THD observable; `None` is the output source current.
    pub observable: Option<String>,
    pub supply_source: String,
    pub output_source: String,
    pub overrides: Vec<(ParamPath, f64)>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            netlist: None,
            baseline: None,
            freqs: DEFAULT_FREQS.to_vec(),
            lengths: DEFAULT_LENGTHS.to_vec(),
            sweep: None,
            supplies: None,
            points_per_period: 1024,
            periods: 10,
            n_harmonics: 9,
            observable: None,
            supply_source: "VDD".into(),
            output_source: "VOUT".into(),
            overrides: Vec::new(),
            out_dir: out_dir.into(),
        }
    }

    pub fn from_raw(raw: &RawOptions) -> Result<Self> {
        let out = raw.out.as_deref().ok_or_else(|| anyhow!("an output directory (--out) is required"))?;
        let mut cfg = Self::new(out);
        cfg.netlist = raw.netlist.as_ref().map(PathBuf::from);
        cfg.baseline = raw.baseline.as_ref().map(PathBuf::from);
        if let Some(s) = &raw.freqs {
            cfg.freqs = parse_list(s).context("--freqs")?;
        }
        if let Some(s) = &raw.lengths {
            cfg.lengths = parse_list(s).context("--lengths")?;
        }
        if let Some(s) = &raw.sweep {
            cfg.sweep = Some(parse_list(s).context("--sweep")?);
        }
        if let Some(s) = &raw.supplies {
            cfg.supplies = Some(parse_list(s).context("--supplies")?);
        }
        if let Some(s) = &raw.ppp {
            cfg.points_per_period = parse_count(s).context("--ppp")?;
        }
        if let Some(s) = &raw.periods {
            cfg.periods = parse_count(s).context("--periods")?;
        }
        if let Some(s) = &raw.harmonics {
            cfg.n_harmonics = parse_count(s).context("--harmonics")?;
        }
        cfg.observable = raw.observable.clone();
        if let Some(s) = &raw.supply_source {
            cfg.supply_source = s.clone();
        }
        if let Some(s) = &raw.output_source {
            cfg.output_source = s.clone();
        }
        for item in &raw.set {
            cfg.overrides.push(parse_override(item)?);
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let monotone = |name: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() {
                bail!("{name} must not be empty");
            }
            let up = v.windows(2).all(|w| w[1] > w[0]);
            let down = v.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                bail!("{name} must be strictly monotone");
            }
            Ok(())
        };
        monotone("frequencies", &self.freqs)?;
        if self.freqs.iter().any(|f| !(*f > 0.0)) {
            bail!("frequencies must be > 0");
        }
        monotone("lengths", &self.lengths)?;
        if self.lengths.iter().any(|l| !(*l > 0.0)) {
            bail!("lengths must be > 0");
        }
        if let Some(s) = &self.sweep {
            monotone("sweep", s)?;
        }
        if let Some(s) = &self.supplies {
            monotone("supplies", s)?;
            if s.iter().any(|v| !(*v > 0.0)) {
                bail!("supply voltages must be > 0");
            }
        }
        if self.points_per_period < 2 {
            bail!("points per period must be at least 2");
        }
        if self.periods < 2 {
            bail!("at least 2 periods are needed (half are discarded as warmup)");
        }
        if self.n_harmonics < 2 {
            bail!("at least 2 harmonics are needed for THD");
        }
        Ok(())
    }

    pub fn supplies_for(&self, experiment: Experiment) -> Vec<f64> {
        match (&self.supplies, experiment) {
            (Some(s), _) => s.clone(),
            (None, Experiment::FreqThd | Experiment::LengthThd) => vec![DEFAULT_AC_SUPPLY],
            (None, _) => DEFAULT_DC_SUPPLIES.to_vec(),
        }
    }

    /// Simulated periods discarded before the THD window.
    pub fn warmup_periods(&self) -> usize {
        self.periods / 2
    }

    /// `key = value` pairs describing the effective configuration.
    pub fn echo(&self, experiment: Experiment) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("experiment".to_string(), experiment.to_string()),
            (
                "netlist".into(),
                self.netlist.as_ref().map_or("builtin:memristor_cm.cir".into(), |p| p.display().to_string()),
            ),
            (
                "baseline".into(),
                self.baseline.as_ref().map_or("derived:memristors-shorted".into(), |p| p.display().to_string()),
            ),
            ("supplies".into(), list(&self.supplies_for(experiment))),
            ("supply-source".into(), self.supply_source.clone()),
            ("output-source".into(), self.output_source.clone()),
        ];
        match experiment {
            Experiment::FreqThd | Experiment::LengthThd => {
                out.push(("freqs".into(), list(&self.freqs)));
                if experiment == Experiment::LengthThd {
                    out.push(("lengths".into(), list(&self.lengths)));
                }
                out.push(("ppp".into(), self.points_per_period.to_string()));
                out.push(("periods".into(), self.periods.to_string()));
                out.push(("warmup-periods".into(), self.warmup_periods().to_string()));
                out.push(("harmonics".into(), self.n_harmonics.to_string()));
                out.push((
                    "observable".into(),
                    self.observable.clone().unwrap_or_else(|| format!("I({})", self.output_source)),
                ));
            }
            Experiment::DcLength | Experiment::DcRon => {
                if let Some(s) = &self.sweep {
                    out.push(("sweep".into(), list(s)));
                }
            }
        }
        for (p, v) in &self.overrides {
            out.push(("set".into(), format!("{p}={v}")));
        }
        out
    }
}

/// Comma/space separated values, or an inclusive `start:stop:step` range.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, step] = parts.as_slice() else {
            bail!("range must be start:stop:step, got `{s}`");
        };
        let sweep = DcSweep {
            target: ParamPath::new("range", "value"),
            start: parse_value(start)?,
            stop: parse_value(stop)?,
            step: parse_value(step)?,
        };
        if sweep.step == 0.0 || (sweep.stop - sweep.start) / sweep.step < 0.0 {
            bail!("range step must be nonzero and point from start to stop");
        }
        return Ok(sweep.values());
    }
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| parse_value(t).map_err(Into::into))
        .collect()
}

fn parse_count(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| anyhow!("expected a positive integer, got `{s}`"))
}

/// `DEVICE.PARAM=value`.
pub fn parse_override(s: &str) -> Result<(ParamPath, f64)> {
    let (path, value) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{s}` must look like DEVICE.PARAM=value"))?;
    let path: ParamPath = path.trim().parse()?;
    Ok((path, parse_value(value.trim())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("1, 1e2 10k").unwrap(), vec![1.0, 100.0, 10e3]);
        assert_eq!(parse_list("500:550:5").unwrap().len(), 11);
        assert_eq!(parse_list("-5n:5n:1n").unwrap().len(), 11);
        assert!(parse_list("1:0:1").is_err());
    }

    #[test]
    fn file_then_flags() {
        let file = RawOptions::parse("# comment\nppp = 256\nout = a\nset = M1.W=2u, M2.W=3u\nfreqs=1,2\n").unwrap();
        let flags = RawOptions {
            ppp: Some("512".into()),
            set: vec!["M1.W=4u".into()],
            ..Default::default()
        };
        let cfg = ExperimentConfig::from_raw(&flags.over(file)).unwrap();
        assert_eq!(cfg.points_per_period, 512);
        assert_eq!(cfg.freqs, vec![1.0, 2.0]);
        assert_eq!(cfg.out_dir, PathBuf::from("a"));
        // the flag override is applied last
        assert_eq!(cfg.overrides.last().unwrap().1, 4e-6);
        assert_eq!(cfg.overrides.len(), 3);
    }

    #[test]
    fn rejects_bad_settings() {
        let base = RawOptions {
            out: Some("o".into()),
            ..Default::default()
        };
        let with = |f: fn(&mut RawOptions)| {
            let mut r = base.clone();
            f(&mut r);
            ExperimentConfig::from_raw(&r)
        };
        assert!(with(|r| r.supplies = Some("3,-5".into())).is_err());
        assert!(with(|r| r.freqs = Some("1,3,2".into())).is_err());
        assert!(with(|r| r.harmonics = Some("1".into())).is_err());
        assert!(RawOptions::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::from_raw(&RawOptions::default()).is_err());
    }
}
