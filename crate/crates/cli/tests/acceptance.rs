//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! Run with `cargo test -p mirrorsim-cli --test acceptance -- --nocapture`
//! to see the report.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirrorsim_cli::config::{Experiment, ExperimentConfig};
use mirrorsim_cli::experiments::{self, ExperimentReport, MEMRISTIVE};
use mirrorsim_cli::report::strip_provenance;
use mirrorsim_core::analysis::{
    analytic_hparams, extract_hparams_numeric, fourier_coefficients, pinched_loop_area, thd, MirrorTopology,
    SmallSignalView,
};
use mirrorsim_core::devices::{memristance, mss_conductance, mss_on_fraction, window, MemristorParams, MosfetParams};
use mirrorsim_core::engine::{solve_dc, transient};
use mirrorsim_core::netlist::{format_value, load, TranSpec, ValidCircuit};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_runtime(started: Instant, limit: Duration, detail: String) -> Outcome {
    let took = started.elapsed();
    check(took < limit, format!("{detail}; runtime {:.3} s (limit {} s)", took.as_secs_f64(), limit.as_secs()))
}

fn conductance_identity() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r_on = 10f64.powf(rng.gen_range(1.0..4.0));
        let r_off = r_on * rng.gen_range(1.5..100.0);
        let r_init = rng.gen_range(r_on..=r_off);
        let p = MemristorParams::new(r_on, r_off, r_init);
        let g = mss_conductance(mss_on_fraction(&p), &p);
        worst = worst.max((g * r_init - 1.0).abs());
    }
    if worst > 1e-12 {
        return Err(format!("worst relative error {worst:e} over 1000 sets (limit 1e-12)"));
    }
    within_runtime(started, Duration::from_secs(1), format!("worst relative error {worst:e} over 1000 sets"))
}

fn window_function() -> Outcome {
    let started = Instant::now();
    let mut problems = Vec::new();
    for p in 1..=10u32 {
        if window(0.0, p) != 0.0 || window(1.0, p) != 0.0 || window(0.5, p) != 1.0 {
            problems.push(format!("p={p}: endpoint or centre value"));
        }
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let f = window(x, p);
            let mirror = window(1.0 - x, p);
            if !(0.0..=1.0).contains(&f) {
                problems.push(format!("p={p}: F({x}) = {f} outside [0,1]"));
            }
            if (f - mirror).abs() > 1e-12 {
                problems.push(format!("p={p}: F({x}) = {f} but F(1-x) = {mirror}"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(format!("{} violations, first: {}", problems.len(), problems[0]));
    }
    within_runtime(started, Duration::from_secs(1), "p = 1..10 on a 1001-point grid".into())
}

fn ladder(rng: &mut impl Rng) -> (String, Vec<f64>) {
    let n = rng.gen_range(2..12);
    let r = |rng: &mut dyn rand::RngCore| 10f64.powf(rng.gen_range(1.0..5.0));
    let series: Vec<f64> = (1..n).map(|_| r(rng)).collect();
    let shunt: Vec<f64> = (1..n).map(|_| r(rng)).collect();
    let vs = rng.gen_range(-5.0..5.0);
    let mut net = format!("V1 n1 0 DC {}\n", format_value(vs));
    let m = n - 1;
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for k in 0..m {
        net += &format!("RS{k} n{} n{} {}\n", k + 1, k + 2, format_value(series[k]));
        net += &format!("RP{k} n{} 0 {}\n", k + 2, format_value(shunt[k]));
        let gs = 1.0 / series[k];
        g[(k, k)] += gs + 1.0 / shunt[k];
        if k == 0 {
            b[0] += gs * vs;
        } else {
            g[(k - 1, k - 1)] += gs;
            g[(k - 1, k)] -= gs;
            g[(k, k - 1)] -= gs;
        }
    }
    let v = g.lu().solve(&b).expect("nonsingular ladder");
    (net, std::iter::once(vs).chain(v.iter().copied()).collect())
}

fn rc_end_error(ppp: usize) -> Result<(f64, f64), String> {
    let c = load("V1 a 0 DC 1\nR1 a b 1k\nC1 b 0 1u\n").map_err(|e| e.to_string())?;
    let spec = TranSpec { tstop: 1e-3, points_per_period: ppp, periods: 1, uic: true };
    let w = transient(&c, &spec).map_err(|e| e.to_string())?;
    let v = w.signal_named("V(b)").ok_or("no V(b)")?;
    let worst = w
        .time
        .iter()
        .zip(v)
        .map(|(t, v)| (v - (1.0 - (-t / 1e-3).exp())).abs())
        .fold(0.0, f64::max);
    let end = (v.last().unwrap() - (1.0 - (-1.0f64).exp())).abs();
    Ok((worst, end))
}

fn engine_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ladder_err = 0.0f64;
    for _ in 0..100 {
        let (net, want) = ladder(&mut rng);
        let op = solve_dc(&load(&net).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for (k, w) in want.iter().enumerate() {
            let got = op.voltage(&format!("n{}", k + 1)).ok_or("missing node")?;
            ladder_err = ladder_err.max((got - w).abs());
        }
    }
    let (rc_err, e1) = rc_end_error(1024)?;
    let (_, e2) = rc_end_error(2048)?;
    let ratio = e1 / e2;
    check(
        ladder_err < 1e-10 && rc_err < 1e-4 && (3.5..=4.5).contains(&ratio),
        format!(
            "ladder max error {ladder_err:e} (limit 1e-10); RC max error {rc_err:e} (limit 1e-4); \
             trapezoidal error ratio {ratio:.4} (range 3.5..4.5)"
        ),
    )
}

fn mirror_ratio() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (w1, l1) = (rng.gen_range(1e-6..5e-6), rng.gen_range(150e-9..1e-6));
        let (w2, l2) = (rng.gen_range(1e-6..5e-6), rng.gen_range(150e-9..1e-6));
        let c = load(&format!(
            "VDD vdd 0 DC 3\nRB vdd g 10k\nM1 nmos g g 0 W={} L={} LAMBDA=0\n\
             M2 nmos out g 0 W={} L={} LAMBDA=0\nVOUT out 0 DC 3\n",
            format_value(w1),
            format_value(l1),
            format_value(w2),
            format_value(l2)
        ))
        .map_err(|e| e.to_string())?;
        let op = solve_dc(&c).map_err(|e| e.to_string())?;
        let ratio = op.delivered("VOUT").unwrap() / op.delivered("VDD").unwrap();
        let want = (w2 / l2) / (w1 / l1);
        worst = worst.max(((ratio - want) / want).abs());
    }
    check(worst < 1e-6, format!("worst relative deviation {worst:e} over 50 geometries (limit 1e-6)"))
}

fn hparam_circuit(rng: &mut impl Rng, with_mem: bool) -> Result<ValidCircuit, String> {
    let l = rng.gen_range(180e-9..1e-6);
    let (w1, w2) = (rng.gen_range(1e-6..4e-6), rng.gen_range(1e-6..4e-6));
    let lambda = rng.gen_range(0.01..0.05);
    let vov = rng.gen_range(0.1..0.3);
    let (r1, r2) = (rng.gen_range(500.0..1500.0), rng.gen_range(500.0..1500.0));
    let vout = rng.gen_range(1.0..3.0);
    let mut m1 = MosfetParams::new(w1, l);
    m1.lambda = lambda;
    let vgs = m1.vt0 + vov;
    let id = 0.5 * m1.beta() * vov * vov * (1.0 + lambda * vgs);
    let p1 = MemristorParams::new(500.0, 1500.0, r1);
    let r_mem1 = memristance(p1.initial_state().x(), &p1);
    let (l, lambda) = (format_value(l), format_value(lambda));
    let net = if with_mem {
        format!(
            "VIN in 0 DC {}\nXMEM1 mem in g RON=500 ROFF=1500 RINIT={}\n\
             M1 nmos g g 0 W={} L={l} LAMBDA={lambda}\nM2 nmos d g 0 W={} L={l} LAMBDA={lambda}\n\
             XMEM2 mem out d RON=500 ROFF=1500 RINIT={}\nVOUT out 0 DC {}\n",
            format_value(vgs + id * r_mem1),
            format_value(r1),
            format_value(w1),
            format_value(w2),
            format_value(r2),
            format_value(vout),
        )
    } else {
        format!(
            "VIN g 0 DC {}\nM1 nmos g g 0 W={} L={l} LAMBDA={lambda}\n\
             M2 nmos out g 0 W={} L={l} LAMBDA={lambda}\nVOUT out 0 DC {}\n",
            format_value(vgs),
            format_value(w1),
            format_value(w2),
            format_value(vout),
        )
    };
    load(&net).map_err(|e| e.to_string())
}

fn hparam_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut worst_h11_mem = 0.0f64;
    for k in 0..20 {
        let with_mem = k % 2 == 0;
        let c = hparam_circuit(&mut rng, with_mem)?;
        let op = solve_dc(&c).map_err(|e| e.to_string())?;
        let topo = MirrorTopology::detect(&c).map_err(|e| e.to_string())?;
        let view = SmallSignalView::from_operating_point(&c, &op, &topo).map_err(|e| e.to_string())?;
        let a = analytic_hparams(&view, with_mem).map_err(|e| e.to_string())?;
        let n = extract_hparams_numeric(&c, "VIN", "VOUT").map_err(|e| e.to_string())?;
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        let e = rel(n.h11, a.h11).max(rel(n.h21, a.h21)).max(rel(n.h22, a.h22));
        worst = worst.max(e);
        if with_mem {
            let gm1 = op.small_signal(&topo.m1).unwrap().gm;
            let r_mem1 = view.r_mem1;
            worst_h11_mem = worst_h11_mem.max(rel(n.h11, 1.0 / gm1 + r_mem1));
        }
    }
    check(
        worst < 0.01 && worst_h11_mem < 0.01,
        format!(
            "worst relative deviation {worst:.3e} over 20 configurations; \
             h11 vs 1/gm1 + r_mem1 with memristor {worst_h11_mem:.3e} (limit 1e-2)"
        ),
    )
}

fn tone_thd(amps: &[(usize, f64, f64)]) -> Result<f64, String> {
    let f0 = 1e3;
    let t: Vec<f64> = (0..1024 * 5).map(|i| i as f64 / (1024.0 * f0)).collect();
    let w: Vec<f64> = t
        .iter()
        .map(|t| amps.iter().map(|&(k, a, ph)| a * (2.0 * PI * k as f64 * f0 * t + ph).sin()).sum())
        .collect();
    let c = fourier_coefficients(&w, &t, f0, 9).map_err(|e| e.to_string())?;
    thd(&c).map_err(|e| e.to_string())
}

fn thd_oracle() -> Outcome {
    let two = tone_thd(&[(1, 1.0, 0.0), (2, 0.1, 0.0)])?;
    let three = tone_thd(&[(1, 1.0, 0.0), (2, 0.1, 0.4), (3, 0.1, -1.1)])?;
    let pure = tone_thd(&[(1, 3.0, 0.0)])?;
    check(
        (two - 10.0).abs() < 0.1 && (three - 14.1421).abs() < 0.1 && pure < 1e-6,
        format!("two-tone {two:.6} % (want 10.0); three-tone {three:.6} % (want 14.1421); pure sine {pure:e} %"),
    )
}

fn pinched_hysteresis() -> Outcome {
    let mut areas = Vec::new();
    let mut origin = 0.0f64;
    for f in [1.0, 10.0, 100.0] {
        let c = load(&format!("V1 a 0 SIN(0 1.5 {})\nXM1 mem a 0 RON=100 ROFF=16k RINIT=1k\n", format_value(f)))
            .map_err(|e| e.to_string())?;
        let spec = TranSpec { tstop: 2.0 / f, points_per_period: 1024, periods: 2, uic: false };
        let w = transient(&c, &spec).map_err(|e| e.to_string())?;
        let v = w.signal_named("V(a)").ok_or("no V(a)")?;
        let i = w.signal_named("I(XM1)").ok_or("no I(XM1)")?;
        for k in (0..v.len()).step_by(512) {
            origin = origin.max(v[k].abs()).max(i[k].abs());
        }
        areas.push(pinched_loop_area(v, i, 1024));
    }
    check(
        origin < 1e-12 && areas[0] > areas[1] && areas[1] > areas[2],
        format!("largest |v|,|i| at zero crossings {origin:e}; loop areas at 1, 10, 100 Hz: {areas:?}"),
    )
}

fn run(experiment: Experiment) -> Result<ExperimentReport, String> {
    experiments::run(&ExperimentConfig::new("unused"), experiment).map_err(|e| format!("{e:#}"))
}

fn thd_trend() -> Outcome {
    let r = run(Experiment::FreqThd)?;
    let rows: Vec<(f64, f64)> = r
        .thd
        .iter()
        .filter(|t| t.variant == MEMRISTIVE)
        .map(|t| (t.frequency_hz, t.report.thd_percent))
        .collect();
    let low = rows.iter().filter(|(f, _)| *f <= 1e4).map(|r| r.1).fold(f64::INFINITY, f64::min);
    let at = |f: f64| rows.iter().find(|r| r.0 == f).map(|r| r.1);
    let (Some(t8), Some(t10)) = (at(1e8), at(1e10)) else {
        return Err("missing 1e8 or 1e10 Hz row".into());
    };
    let table: Vec<String> = rows.iter().map(|(f, t)| format!("{f:e} Hz: {t:.6} %")).collect();
    check(
        t8 < low && t10 < low,
        format!("memristive THD {}; lowest at <= 1e4 Hz {low:.6} %", table.join(", ")),
    )
}

fn linearity() -> Outcome {
    let len = run(Experiment::DcLength)?;
    let ron = run(Experiment::DcRon)?;
    let mut notes = Vec::new();
    let mut ok = true;
    let worst_r2 = len
        .fits
        .iter()
        .chain(&ron.fits)
        .map(|f| f.fit.r_squared)
        .fold(f64::INFINITY, f64::min);
    let supplies: Vec<f64> = ron.fits.iter().map(|f| f.supply_v).collect();
    ok &= worst_r2 > 0.99 && supplies == [3.0, 5.0, 8.0];
    notes.push(format!("lowest r^2 {worst_r2:.6} over {} fits", len.fits.len() + ron.fits.len()));

    let mut worst_mismatch = 0.0f64;
    let mut by_group: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
    for f in &len.fits {
        let key = (f.variant.to_string(), f.supply_v.to_string());
        let e = by_group.entry(key).or_insert((f64::NAN, f64::NAN));
        if f.group.starts_with("M2") {
            e.1 = f.fit.slope;
        } else {
            e.0 = f.fit.slope;
        }
    }
    for ((v, s), (m1, m2)) in &by_group {
        let mismatch = (m1.abs() - m2.abs()).abs() / m1.abs().max(m2.abs());
        if !(mismatch <= 0.05) {
            ok = false;
            notes.push(format!("{v} {s} V: M1 slope {m1:e}, M2 slope {m2:e}"));
        }
        worst_mismatch = worst_mismatch.max(mismatch);
    }
    ok &= by_group.len() == 6;
    notes.push(format!("largest M1/M2 slope-magnitude mismatch {:.2} % (limit 5 %)", 100.0 * worst_mismatch));

    let mut worst_iref = 0.0f64;
    for (v, s) in by_group.keys() {
        let i: Vec<f64> = len
            .dc
            .iter()
            .filter(|d| d.variant == v && d.supply_v.to_string() == *s && d.swept.starts_with("M2"))
            .map(|d| d.i_ref)
            .collect();
        for x in &i {
            worst_iref = worst_iref.max(((x - i[0]) / i[0]).abs());
        }
    }
    ok &= worst_iref <= 1e-9;
    notes.push(format!("I_ref relative drift under M2 sweep {worst_iref:e} (limit 1e-9)"));
    check(ok, notes.join("; "))
}

fn files(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, strip_provenance(&std::fs::read_to_string(&p).unwrap()));
            }
        }
    }
    out
}

fn full_suite() -> Outcome {
    let netlists = Path::new(env!("CARGO_MANIFEST_DIR")).join("netlists");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut timings = Vec::new();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        let started = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_mirrorsim"))
            .args(["run", "all", "--netlist"])
            .arg(netlists.join("memristor_cm.cir"))
            .arg("--out")
            .arg(&dir)
            .output()
            .map_err(|e| e.to_string())?;
        timings.push(started.elapsed().as_secs_f64());
        if !out.status.success() {
            return Err(format!("run all failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        outputs.push(files(&dir));
    }
    let same = outputs[0] == outputs[1];
    check(
        same && timings.iter().all(|t| *t < 60.0) && outputs[0].len() >= 8,
        format!(
            "{} files, bodies identical across runs: {same}; runtimes {:.2} s and {:.2} s (limit 60 s)",
            outputs[0].len(),
            timings[0],
            timings[1]
        ),
    )
}

#[test]
fn acceptance_criteria() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("conductance identity", conductance_identity),
        ("window function", window_function),
        ("engine oracles", engine_oracles),
        ("mirror ratio", mirror_ratio),
        ("h-parameter consistency", hparam_consistency),
        ("THD oracle", thd_oracle),
        ("pinched hysteresis", pinched_hysteresis),
        ("THD falls at high frequency", thd_trend),
        ("DC linearity", linearity),
        ("full experiment suite", full_suite),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
