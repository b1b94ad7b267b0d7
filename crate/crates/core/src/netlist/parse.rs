//! Line-oriented netlist reader.
//!
//! ```text
//! * comment            # comment          ; trailing comment
//! R1 [res] a b 1k
//! C1 [cap] a b 1p
//! V1 [vsrc] p n [DC] 3 | SIN(offset amplitude freq [phase])
//! I1 [isrc] p n [DC] 1m | SIN(...)
//! M1 nmos d g s W=1.8u L=180n [LINT=] [VT0=] [KP=] [LAMBDA=]
//! XM1 mem p n RON= ROFF= RINIT= [D=] [MU=] [P=] [VT=]
//! + continuation
//! .op
//! .dc M2.LINT 0 5n 1n
//! .tran 10m ppp=1024 periods=10 [uic]
//! .thd I(VOUT) f0=1k nh=9
//! .hparam in=VIN out=VOUT
//! .end
//! ```

use std::collections::HashMap;

use super::types::*;
use super::value::parse_value;
use crate::devices::{MemristorParams, MosfetParams};
use crate::error::NetlistError;

struct Line {
    number: usize,
    tokens: Vec<String>,
}

fn tokenize(text: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        match c {
            '(' | ')' => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            ',' => spaced.push(' '),
            '=' => spaced.push_str(" = "),
            _ => spaced.push(c),
        }
    }
    let raw: Vec<&str> = spaced.split_whitespace().collect();
    // glue `key = value` back into `key=value`
    let mut tokens: Vec<String> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == "=" {
            let mut t = tokens.pop().unwrap_or_default();
            t.push('=');
            if let Some(next) = raw.get(i + 1) {
                if *next != "=" {
                    t.push_str(next);
                    i += 1;
                }
            }
            tokens.push(t);
        } else {
            tokens.push(raw[i].to_string());
        }
        i += 1;
    }
    tokens
}

fn logical_lines(text: &str) -> Result<Vec<Line>, NetlistError> {
    let mut lines: Vec<Line> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let body = raw.split(';').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with('*') || body.starts_with('#') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('+') {
            let last = lines.last_mut().ok_or_else(|| NetlistError::Syntax {
                line: number,
                reason: "continuation line without a preceding element".into(),
            })?;
            last.tokens.extend(tokenize(rest));
            continue;
        }
        let tokens = tokenize(body);
        if tokens.is_empty() {
            continue;
        }
        lines.push(Line { number, tokens });
    }
    Ok(lines)
}

fn syntax(line: usize, reason: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        reason: reason.into(),
    }
}

fn value_at(line: usize, token: &str) -> Result<f64, NetlistError> {
    parse_value(token).map_err(|_| syntax(line, format!("bad value `{token}`")))
}

fn count_at(line: usize, token: &str, what: &str) -> Result<usize, NetlistError> {
    let v = value_at(line, token)?;
    if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(syntax(line, format!("{what} must be a positive integer")));
    }
    Ok(v as usize)
}

fn is_identifier(token: &str) -> bool {
    !token.is_empty() && !token.contains(['=', '(', ')', '.'])
}

/// Parses `KEY=value` tokens against an allowed key list (upper-case).
fn keyed(
    line: usize,
    tokens: &[String],
    allowed: &[&str],
) -> Result<HashMap<String, String>, NetlistError> {
    let mut out = HashMap::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected KEY=value, found `{t}`")))?;
        let key = k.to_ascii_uppercase();
        if !allowed.contains(&key.as_str()) {
            return Err(syntax(line, format!("unknown parameter `{k}`")));
        }
        if v.is_empty() {
            return Err(syntax(line, format!("missing value for `{k}`")));
        }
        if out.insert(key, v.to_string()).is_some() {
            return Err(syntax(line, format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

fn take_value(
    line: usize,
    map: &HashMap<String, String>,
    key: &str,
    default: Option<f64>,
) -> Result<f64, NetlistError> {
    match map.get(key) {
        Some(v) => value_at(line, v),
        None => default.ok_or_else(|| syntax(line, format!("missing required parameter {key}"))),
    }
}

fn parse_waveform(line: usize, tokens: &[String]) -> Result<SourceWaveform, NetlistError> {
    let first = tokens
        .first()
        .ok_or_else(|| syntax(line, "source needs a value"))?;
    match first.to_ascii_uppercase().as_str() {
        "DC" => match tokens {
            [_, v] => Ok(SourceWaveform::Dc(value_at(line, v)?)),
            _ => Err(syntax(line, "expected `DC <value>`")),
        },
        "SIN" => {
            let args: Vec<&String> = tokens[1..]
                .iter()
                .filter(|t| *t != "(" && *t != ")")
                .collect();
            let parens = tokens[1..].iter().filter(|t| *t == "(" || *t == ")").count();
            if parens != 0 && (tokens.get(1).map(String::as_str) != Some("(")
                || tokens.last().map(String::as_str) != Some(")")
                || parens != 2)
            {
                return Err(syntax(line, "unbalanced parentheses in SIN(...)"));
            }
            if !(3..=4).contains(&args.len()) {
                return Err(syntax(line, "SIN takes (offset amplitude frequency [phase])"));
            }
            let v: Vec<f64> = args
                .iter()
                .map(|a| value_at(line, a))
                .collect::<Result<_, _>>()?;
            Ok(SourceWaveform::Sine {
                offset: v[0],
                amplitude: v[1],
                frequency: v[2],
                phase: v.get(3).copied().unwrap_or(0.0),
            })
        }
        _ => match tokens {
            [v] => Ok(SourceWaveform::Dc(value_at(line, v)?)),
            _ => Err(syntax(line, "expected a source value, `DC <v>` or `SIN(...)`")),
        },
    }
}

fn parse_device(line: &Line) -> Result<Device, NetlistError> {
    let n = line.number;
    let name = line.tokens[0].clone();
    if !is_identifier(&name) {
        return Err(syntax(n, format!("invalid device name `{name}`")));
    }
    let (kind, rest) = match line.tokens.get(1).and_then(|t| DeviceKind::from_keyword(t)) {
        Some(kind) => (kind, &line.tokens[2..]),
        None => {
            let kind = match name.chars().next().map(|c| c.to_ascii_uppercase()) {
                Some('R') => DeviceKind::Resistor,
                Some('C') => DeviceKind::Capacitor,
                Some('V') => DeviceKind::VSource,
                Some('I') => DeviceKind::ISource,
                _ => return Err(NetlistError::UnknownKind { line: n, name }),
            };
            (kind, &line.tokens[1..])
        }
    };
    let terminals = kind.terminal_count();
    if rest.len() < terminals {
        return Err(syntax(n, format!("`{name}` needs {terminals} nodes")));
    }
    let (nodes, args) = rest.split_at(terminals);
    if let Some(bad) = nodes.iter().find(|t| !is_identifier(t)) {
        return Err(syntax(n, format!("invalid node name `{bad}`")));
    }
    let nodes = nodes.to_vec();
    let params = match kind {
        DeviceKind::Resistor | DeviceKind::Capacitor => {
            let [v] = args else {
                return Err(syntax(n, format!("`{name}` takes exactly one value")));
            };
            let v = value_at(n, v)?;
            if kind == DeviceKind::Resistor {
                DeviceParams::Resistor { resistance: v }
            } else {
                DeviceParams::Capacitor { capacitance: v }
            }
        }
        DeviceKind::VSource => DeviceParams::VSource(parse_waveform(n, args)?),
        DeviceKind::ISource => DeviceParams::ISource(parse_waveform(n, args)?),
        DeviceKind::Nmos => {
            let m = keyed(n, args, &["W", "L", "LINT", "VT0", "KP", "LAMBDA"])?;
            DeviceParams::Nmos(MosfetParams {
                w: take_value(n, &m, "W", None)?,
                l: take_value(n, &m, "L", None)?,
                lint: take_value(n, &m, "LINT", Some(0.0))?,
                vt0: take_value(n, &m, "VT0", Some(MosfetParams::DEFAULT_VT0))?,
                kp: take_value(n, &m, "KP", Some(MosfetParams::DEFAULT_KP))?,
                lambda: take_value(n, &m, "LAMBDA", Some(MosfetParams::DEFAULT_LAMBDA))?,
            })
        }
        DeviceKind::Memristor => {
            let m = keyed(n, args, &["RON", "ROFF", "RINIT", "D", "MU", "P", "VT"])?;
            let p = match m.get("P") {
                Some(v) => count_at(n, v, "P")? as u32,
                None => MemristorParams::DEFAULT_P,
            };
            DeviceParams::Memristor(MemristorParams {
                r_on: take_value(n, &m, "RON", None)?,
                r_off: take_value(n, &m, "ROFF", None)?,
                r_init: take_value(n, &m, "RINIT", None)?,
                d: take_value(n, &m, "D", Some(MemristorParams::DEFAULT_D))?,
                mu_d: take_value(n, &m, "MU", Some(MemristorParams::DEFAULT_MU_D))?,
                p,
                v_t: take_value(n, &m, "VT", Some(MemristorParams::DEFAULT_V_T))?,
            })
        }
    };
    Ok(Device {
        name,
        nodes,
        params,
    })
}

fn parse_observable(line: usize, tokens: &[String]) -> Result<(Observable, usize), NetlistError> {
    match tokens {
        [kind, open, target, close, ..] if open == "(" && close == ")" => {
            if !is_identifier(target) {
                return Err(syntax(line, format!("invalid probe target `{target}`")));
            }
            let obs = match kind.to_ascii_uppercase().as_str() {
                "V" => Observable::Voltage(target.clone()),
                "I" => Observable::Current(target.clone()),
                _ => return Err(syntax(line, format!("unknown probe `{kind}(...)`"))),
            };
            Ok((obs, 4))
        }
        [node, ..] if is_identifier(node) => Ok((Observable::Voltage(node.clone()), 1)),
        _ => Err(syntax(line, "expected V(node), I(device) or a node name")),
    }
}

fn parse_directive(line: &Line) -> Result<Option<AnalysisDirective>, NetlistError> {
    let n = line.number;
    let head = line.tokens[0].to_ascii_lowercase();
    let args = &line.tokens[1..];
    let directive = match head.as_str() {
        ".op" => {
            if !args.is_empty() {
                return Err(syntax(n, ".op takes no arguments"));
            }
            AnalysisDirective::Op
        }
        ".dc" => {
            let [path, start, stop, step] = args else {
                return Err(syntax(n, "expected `.dc <device>.<param> <start> <stop> <step>`"));
            };
            let target: ParamPath = path
                .parse()
                .map_err(|_| syntax(n, format!("bad parameter path `{path}`")))?;
            let (start, stop, step) = (value_at(n, start)?, value_at(n, stop)?, value_at(n, step)?);
            if step == 0.0 {
                return Err(syntax(n, "sweep step must be nonzero"));
            }
            if (stop - start) / step < 0.0 {
                return Err(syntax(n, "sweep step points away from stop"));
            }
            AnalysisDirective::DcSweep(DcSweep {
                target,
                start,
                stop,
                step,
            })
        }
        ".tran" => {
            let (tstop, rest) = args
                .split_first()
                .ok_or_else(|| syntax(n, "expected `.tran <tstop> ppp=<n> periods=<n>`"))?;
            let tstop = value_at(n, tstop)?;
            if tstop <= 0.0 {
                return Err(syntax(n, "tstop must be > 0"));
            }
            let uic = rest.iter().any(|t| t.eq_ignore_ascii_case("uic"));
            let keyed_args: Vec<String> = rest
                .iter()
                .filter(|t| !t.eq_ignore_ascii_case("uic"))
                .cloned()
                .collect();
            let m = keyed(n, &keyed_args, &["PPP", "PERIODS"])?;
            let points_per_period = match m.get("PPP") {
                Some(v) => count_at(n, v, "ppp")?,
                None => 1024,
            };
            if points_per_period < 2 {
                return Err(syntax(n, "ppp must be at least 2"));
            }
            let periods = match m.get("PERIODS") {
                Some(v) => count_at(n, v, "periods")?,
                None => 10,
            };
            AnalysisDirective::Tran(TranSpec {
                tstop,
                points_per_period,
                periods,
                uic,
            })
        }
        ".thd" => {
            let (observable, used) = parse_observable(n, args)?;
            let m = keyed(n, &args[used..], &["F0", "NH"])?;
            let fundamental_hz = take_value(n, &m, "F0", None)?;
            if fundamental_hz <= 0.0 {
                return Err(syntax(n, "f0 must be > 0"));
            }
            let n_harmonics = match m.get("NH") {
                Some(v) => count_at(n, v, "nh")?,
                None => 9,
            };
            if n_harmonics < 2 {
                return Err(syntax(n, "nh must be at least 2"));
            }
            AnalysisDirective::Thd(ThdSpec {
                observable,
                fundamental_hz,
                n_harmonics,
            })
        }
        ".hparam" => {
            let m = keyed(n, args, &["IN", "OUT"])?;
            let (Some(input), Some(output)) = (m.get("IN"), m.get("OUT")) else {
                return Err(syntax(n, "expected `.hparam in=<vsrc> out=<vsrc>`"));
            };
            AnalysisDirective::HParam {
                input: input.clone(),
                output: output.clone(),
            }
        }
        ".end" => return Ok(None),
        other => return Err(syntax(n, format!("unknown directive `{other}`"))),
    };
    Ok(Some(directive))
}

/// Parses netlist text into a circuit. Values are converted to SI units.
///
/// Device parameter ranges and connectivity are checked by [`super::validate`].
pub fn parse_netlist(text: &str) -> Result<Circuit, NetlistError> {
    let mut circuit = Circuit::default();
    for line in logical_lines(text)? {
        if line.tokens[0].starts_with('.') {
            match parse_directive(&line)? {
                Some(d) => circuit.directives.push(d),
                None => break,
            }
            continue;
        }
        let device = parse_device(&line)?;
        if circuit.device(&device.name).is_some() {
            return Err(NetlistError::DuplicateName {
                line: line.number,
                name: device.name,
            });
        }
        circuit.push(device);
    }
    if !circuit.has_node(GROUND) {
        return Err(NetlistError::MissingGround);
    }
    Ok(circuit)
}
