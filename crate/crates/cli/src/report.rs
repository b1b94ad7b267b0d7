//! CSV output: one results file and one fits file per experiment, plus
//! two-column plot files under `plot/`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::{Experiment, QUASI_STATIC_LIMIT_HZ};
use crate::experiments::{DcRow, ExperimentReport, FitRow, ThdRow};

pub const QUASI_STATIC_NOTE: &str = "quasi-static extrapolation";

/// Lines written before every CSV body, each starting with `#`.
pub fn provenance(report: &ExperimentReport, timestamp: &str) -> Vec<String> {
    let mut lines = vec![
        format!("# mirrorsim {}", env!("CARGO_PKG_VERSION")),
        format!("# generated {timestamp}"),
    ];
    lines.extend(report.config_echo.iter().map(|(k, v)| format!("# {k} = {v}")));
    if report.thd.iter().any(ThdRow::quasi_static) {
        lines.push(format!(
            "# rows above {QUASI_STATIC_LIMIT_HZ:e} Hz are a {QUASI_STATIC_NOTE}: the square-law devices have no charge storage"
        ));
    }
    lines
}

fn num(x: f64) -> String {
    x.to_string()
}

fn thd_table(rows: &[ThdRow], with_length: bool) -> (Vec<String>, Vec<Vec<String>>) {
    let k = rows.first().map_or(0, |r| r.report.harmonic_magnitudes.len());
    let mut header: Vec<String> = ["variant", "supply_v"].map(String::from).to_vec();
    if with_length {
        header.push("length_m".into());
    }
    header.extend(["frequency_hz", "thd_percent"].map(String::from));
    header.extend((1..=k).map(|i| format!("c{i}_abs")));
    header.extend(["first_period", "period_count", "samples_per_period", "note"].map(String::from));
    let body = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.variant.to_string(), num(r.supply_v)];
            if with_length {
                row.push(r.length_m.map_or(String::new(), num));
            }
            row.push(num(r.frequency_hz));
            row.push(num(r.report.thd_percent));
            row.extend(r.report.harmonic_magnitudes.iter().map(|m| num(*m)));
            let w = &r.report.window;
            row.extend([w.first_period, w.period_count, w.samples_per_period].map(|n| n.to_string()));
            row.push(if r.quasi_static() { QUASI_STATIC_NOTE.into() } else { String::new() });
            row
        })
        .collect();
    (header, body)
}

fn dc_table(rows: &[DcRow], experiment: Experiment) -> (Vec<String>, Vec<Vec<String>>) {
    let (x, p) = match experiment {
        Experiment::DcLength => ("delta_l_m", "lint_m"),
        _ => ("ron_ohm", "param_value"),
    };
    let header = ["variant", "supply_v", "swept", x, p, "r_mem_ohm", "i_ref_a", "i_out_a", "di_a"]
        .map(String::from)
        .to_vec();
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.variant.to_string(),
                num(r.supply_v),
                r.swept.clone(),
                num(r.x),
                num(r.param_value),
                r.r_mem.map_or(String::new(), num),
                num(r.i_ref),
                num(r.i_out),
                num(r.di),
            ]
        })
        .collect();
    (header, body)
}

fn fit_table(rows: &[FitRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "variant",
        "supply_v",
        "group",
        "x",
        "y",
        "slope",
        "intercept",
        "r_squared",
        "slope_display",
        "display_unit",
    ]
    .map(String::from)
    .to_vec();
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.variant.to_string(),
                num(r.supply_v),
                r.group.clone(),
                r.x.to_string(),
                r.y.to_string(),
                num(r.fit.slope),
                num(r.fit.intercept),
                num(r.fit.r_squared),
                num(r.slope_display),
                r.display_unit.to_string(),
            ]
        })
        .collect();
    (header, body)
}

/// The results table of a report as CSV text without provenance.
pub fn results_body(report: &ExperimentReport) -> Result<String> {
    let (h, b) = match report.experiment {
        Experiment::FreqThd => thd_table(&report.thd, false),
        Experiment::LengthThd => thd_table(&report.thd, true),
        e => dc_table(&report.dc, e),
    };
    csv_text(&h, &b)
}

pub fn fits_body(report: &ExperimentReport) -> Result<String> {
    let (h, b) = fit_table(&report.fits);
    csv_text(&h, &b)
}

fn csv_text(header: &[String], body: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in body {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
}

/// One curve: file stem, x label, y label, points.
pub type PlotSeries = (String, &'static str, &'static str, Vec<(f64, f64)>);

pub fn plot_series(report: &ExperimentReport) -> Vec<PlotSeries> {
    let mut out: Vec<PlotSeries> = Vec::new();
    let mut push = |stem: String, x: &'static str, y: &'static str, p: (f64, f64)| {
        match out.iter_mut().find(|s| s.0 == stem) {
            Some(s) => s.3.push(p),
            None => out.push((stem, x, y, vec![p])),
        }
    };
    let e = report.experiment;
    for r in &report.thd {
        match r.length_m {
            None => push(
                format!("{e}_{}_{}V", r.variant, r.supply_v),
                "frequency_hz",
                "thd_percent",
                (r.frequency_hz, r.report.thd_percent),
            ),
            Some(l) => push(
                format!("{e}_{}_{}V_{}Hz", r.variant, r.supply_v, r.frequency_hz),
                "length_m",
                "thd_percent",
                (l, r.report.thd_percent),
            ),
        }
    }
    let x = if e == Experiment::DcLength { "delta_l_m" } else { "ron_ohm" };
    for r in &report.dc {
        let swept = r.swept.replace('.', "_");
        push(format!("{e}_{}_{}V_{swept}", r.variant, r.supply_v), x, "di_a", (r.x, r.di));
    }
    out
}

fn write_with_header(path: &Path, header: &[String], body: &str) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    for line in header {
        writeln!(f, "{line}")?;
    }
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Writes all files for one report and returns their paths.
pub fn write_report(report: &ExperimentReport, dir: &Path, timestamp: &str) -> Result<Vec<PathBuf>> {
    let plot_dir = dir.join("plot");
    fs::create_dir_all(&plot_dir).with_context(|| format!("creating {}", plot_dir.display()))?;
    let header = provenance(report, timestamp);
    let e = report.experiment;
    let mut written = Vec::new();

    let path = dir.join(format!("{e}.csv"));
    write_with_header(&path, &header, &results_body(report)?)?;
    written.push(path);
    if !report.fits.is_empty() {
        let path = dir.join(format!("{e}_fits.csv"));
        write_with_header(&path, &header, &fits_body(report)?)?;
        written.push(path);
    }
    for (stem, x, y, points) in plot_series(report) {
        let rows: Vec<Vec<String>> = points.iter().map(|(a, b)| vec![num(*a), num(*b)]).collect();
        let path = plot_dir.join(format!("{stem}.csv"));
        write_with_header(&path, &header[..2], &csv_text(&[x.into(), y.into()], &rows)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Everything after the leading `#` lines of a written file.
pub fn strip_provenance(text: &str) -> String {
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
