use mirrorsim_core::devices::memristance;
use mirrorsim_core::engine::{dc_sweep_values, kcl_residual, solve_dc, transient};
use mirrorsim_core::netlist::{format_value, load, ParamPath, TranSpec, ValidCircuit};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Ladder {
    netlist: String,
    series: Vec<f64>,
    shunt: Vec<f64>,
    vs: f64,
    inject_node: usize,
    inject: f64,
}

/// `n1` is driven by `V1`; `n(k) -- Rs(k) -- n(k+1)`, every node past `n1`
/// has a shunt to ground, and `I1` pushes current into one node.
fn random_ladder(rng: &mut impl Rng) -> Ladder {
    let n = rng.gen_range(2..12);
    let r = |rng: &mut dyn rand::RngCore| 10f64.powf(rng.gen_range(1.0..5.0));
    let series: Vec<f64> = (1..n).map(|_| r(rng)).collect();
    let shunt: Vec<f64> = (1..n).map(|_| r(rng)).collect();
    let vs = rng.gen_range(-5.0..5.0);
    let inject_node = rng.gen_range(2..=n);
    let inject = rng.gen_range(-1e-3..1e-3);
    let mut netlist = format!("V1 n1 0 DC {}\n", format_value(vs));
    for k in 1..n {
        netlist += &format!("RS{k} n{k} n{} {}\n", k + 1, format_value(series[k - 1]));
        netlist += &format!("RP{k} n{} 0 {}\n", k + 1, format_value(shunt[k - 1]));
    }
    netlist += &format!("I1 0 n{inject_node} DC {}\n", format_value(inject));
    Ladder {
        netlist,
        series,
        shunt,
        vs,
        inject_node,
        inject,
    }
}

/// Plain nodal analysis over n2..nN with n1 pinned at `vs`.
fn ladder_oracle(l: &Ladder) -> Vec<f64> {
    let m = l.series.len();
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for k in 0..m {
        // series resistor between node k+1 (index k-1, or the source) and node k+2 (index k)
        let gs = 1.0 / l.series[k];
        g[(k, k)] += gs;
        if k == 0 {
            b[0] += gs * l.vs;
        } else {
            g[(k - 1, k - 1)] += gs;
            g[(k - 1, k)] -= gs;
            g[(k, k - 1)] -= gs;
        }
        g[(k, k)] += 1.0 / l.shunt[k];
    }
    b[l.inject_node - 2] += l.inject;
    let v = g.lu().solve(&b).expect("nonsingular ladder");
    std::iter::once(l.vs).chain(v.iter().copied()).collect()
}

#[test]
fn random_ladders_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let l = random_ladder(&mut rng);
        let c = load(&l.netlist).unwrap();
        let op = solve_dc(&c).unwrap();
        for (k, want) in ladder_oracle(&l).iter().enumerate() {
            let got = op.voltage(&format!("n{}", k + 1)).unwrap();
            assert!((got - want).abs() < 1e-10, "n{}: {got} vs {want}\n{}", k + 1, l.netlist);
        }
        assert!(kcl_residual(&c, &op) < 1e-9);
    }
}

fn rc_step(ppp: usize) -> (Vec<f64>, Vec<f64>) {
    // tau = 1 ms, one "period" of 1 ms
    let c = load(&format!(
        "V1 a 0 DC 1\nR1 a b 1k\nC1 b 0 1u\n.tran 1m ppp={ppp} periods=1 uic\n"
    ))
    .unwrap();
    let spec = TranSpec {
        tstop: 1e-3,
        points_per_period: ppp,
        periods: 1,
        uic: true,
    };
    let w = transient(&c, &spec).unwrap();
    (w.time.clone(), w.signal_named("V(b)").unwrap().to_vec())
}

#[test]
fn rc_charging_matches_exponential() {
    let (t, v) = rc_step(1024);
    assert_eq!(t.len(), 1025);
    for (t, v) in t.iter().zip(&v) {
        let want = 1.0 - (-t / 1e-3).exp();
        assert!((v - want).abs() < 1e-4, "t = {t}: {v} vs {want}");
    }
    let end = *v.last().unwrap();
    assert!((end - (1.0 - (-1.0f64).exp())).abs() < 1e-4);
}

#[test]
fn trapezoidal_error_quarters_when_dt_halves() {
    let want = 1.0 - (-1.0f64).exp();
    let e1 = (rc_step(1024).1.last().unwrap() - want).abs();
    let e2 = (rc_step(2048).1.last().unwrap() - want).abs();
    let ratio = e1 / e2;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} ({e1:e} / {e2:e})");
}

fn mirror(w1: f64, l1: f64, w2: f64, l2: f64, lambda: f64) -> ValidCircuit {
    load(&format!(
        "VDD vdd 0 DC 3\nRB vdd g 10k\n\
         M1 nmos g g 0 W={} L={} LAMBDA={}\n\
         M2 nmos out g 0 W={} L={} LAMBDA={}\n\
         VOUT out 0 DC 3\n",
        format_value(w1),
        format_value(l1),
        format_value(lambda),
        format_value(w2),
        format_value(l2),
        format_value(lambda),
    ))
    .unwrap()
}

#[test]
fn mirror_ratio_follows_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let (w1, l1) = (rng.gen_range(1e-6..5e-6), rng.gen_range(150e-9..1e-6));
        let (w2, l2) = (rng.gen_range(1e-6..5e-6), rng.gen_range(150e-9..1e-6));
        let c = mirror(w1, l1, w2, l2, 0.0);
        let op = solve_dc(&c).unwrap();
        let ratio = op.delivered("VOUT").unwrap() / op.delivered("VDD").unwrap();
        let want = (w2 / l2) / (w1 / l1);
        assert!(((ratio - want) / want).abs() < 1e-6, "{ratio} vs {want}");
    }
}

#[test]
fn continuation_direction_does_not_matter() {
    let c = mirror(2e-6, 180e-9, 2e-6, 180e-9, 0.05);
    let path = ParamPath::new("VDD", "DC");
    let up: Vec<f64> = (0..=12).map(|i| 2.0 + 0.25 * i as f64).collect();
    let down: Vec<f64> = up.iter().rev().copied().collect();
    let a = dc_sweep_values(&c, &path, &up).unwrap();
    let b = dc_sweep_values(&c, &path, &down).unwrap();
    for (name, col) in &a.observables {
        let other = b.observable(name).unwrap();
        for (x, y) in col.iter().zip(other.iter().rev()) {
            assert!((x - y).abs() < 1e-10, "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn memristor_branch_obeys_ohm_law() {
    let c = load(
        "VDD vdd 0 DC 3\nRB vdd in 10k\nXM1 mem in g RON=500 ROFF=1500 RINIT=900\n\
         M1 nmos g g 0 W=1.8u L=180n\nM2 nmos d g 0 W=1.8u L=180n\n\
         XM2 mem out d RON=500 ROFF=1500 RINIT=700\nVOUT out 0 DC 3\n",
    )
    .unwrap();
    let op = solve_dc(&c).unwrap();
    assert!(kcl_residual(&c, &op) < 1e-9);
    for (name, a, b) in [("XM1", "in", "g"), ("XM2", "out", "d")] {
        let v = op.voltage(a).unwrap() - op.voltage(b).unwrap();
        let i = op.current(name).unwrap();
        let p = c.device(name).unwrap().memristor().unwrap();
        let r = memristance(op.memristor_states[name], p);
        assert!(((v - r * i) / v).abs() < 1e-9, "{name}: {v} vs {}", r * i);
    }
}

#[test]
fn hard_start_recovers_through_fallbacks() {
    // a long chain of stacked diode-connected devices from a 0 V guess
    let mut net = String::from("VDD vdd 0 DC 20\nRB vdd n0 1k\n");
    for k in 0..8 {
        net += &format!("M{k} nmos n{k} n{k} n{} W=10u L=180n\n", k + 1);
    }
    net += "RL n8 0 100\n";
    let c = load(&net).unwrap();
    let op = solve_dc(&c).unwrap();
    assert!(kcl_residual(&c, &op) < 1e-9);
}

#[test]
fn diode_connected_device_against_bisection() {
    // kp/2 * W/L * (v - vt0)^2 = (3 - v) / 1k
    let f = |v: f64| 0.5 * 200e-6 * 10.0 * (v - 0.5).powi(2) - (3.0 - v) / 1e3;
    let (mut lo, mut hi) = (0.5, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let want = 0.5 * (lo + hi);
    assert!((want - 1.658_312).abs() < 1e-6);
    let c = load("V1 vdd 0 3\nR1 vdd g 1k\nM1 nmos g g 0 W=1.8u L=180n LAMBDA=0\n").unwrap();
    let v = solve_dc(&c).unwrap().voltage("g").unwrap();
    assert!((v - want).abs() < 1e-9, "{v} vs {want}");
}

#[test]
fn matched_mirror_copies_exactly() {
    let op = solve_dc(&mirror(1.8e-6, 180e-9, 1.8e-6, 180e-9, 0.0)).unwrap();
    let (i_ref, i_out) = (op.delivered("VDD").unwrap(), op.delivered("VOUT").unwrap());
    assert!(((i_out - i_ref) / i_ref).abs() < 1e-12, "{i_ref} vs {i_out}");
}
