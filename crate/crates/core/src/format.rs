//! Line-oriented text format for circuits.
//!
//! ```text
//! # comments run to the end of the line
//! dims 2 3          # one dimension per qudit, least significant first
//! init 0 0          # optional starting digits, least significant first
//! h 1               # Fourier gate on qudit 1
//! x 0 1 @ 1=2       # shift X_{+1} on qudit 0, controlled on q1 = 2
//! z 0 1             # clock gate to the given power
//! p 0 0.0 1.5708    # diagonal gate from explicit angles (radians)
//! u 0 0 0 1 0 1 0 0 0   # inline matrix, row-major re/im pairs (2*d^2 floats)
//! cx 1 0            # shift target by +1 when the control is at its top state
//! ```
//!
//! `dims` must be the first directive. A `@ q=v [q=v ...]` suffix adds
//! control conditions to any gate line. A `# name: ...` comment names the
//! circuit and is what the serializer emits, so parse/serialize round-trips
//! preserve the name.

use num_complex::Complex64;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateOp};
use crate::gates::{Gate, GateKind};
use crate::system::QuditSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, col {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    /// The register itself cannot be represented (index space overflow);
    /// kept apart from plain validation so callers can exit differently.
    #[error("line {line}: {message}")]
    Resource { line: usize, message: String },
}

impl ParseError {
    fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }

    fn validation(line: usize, err: impl std::fmt::Display) -> Self {
        ParseError::Validation {
            line,
            message: err.to_string(),
        }
    }
}

/// One whitespace-separated token and its 1-based column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push((s + 1, &line[s..]));
    }
    tokens
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Parses the circuit text format, reporting line/column-accurate syntax
/// errors and per-line validation errors.
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut name = String::from("circuit");
    let mut sys: Option<QuditSystem> = None;
    let mut initial: u64 = 0;
    let mut ops: Vec<GateOp> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        if let Some(rest) = raw.trim_start().strip_prefix("# name:") {
            name = rest.trim().to_string();
            continue;
        }
        let tokens = tokenize(strip_comment(raw));
        let Some(&(col0, head)) = tokens.first() else {
            continue;
        };
        match head {
            "dims" => {
                if sys.is_some() {
                    return Err(ParseError::syntax(line, col0, "duplicate dims line"));
                }
                if tokens.len() < 2 {
                    return Err(ParseError::syntax(line, col0, "dims needs at least one dimension"));
                }
                let mut dims = Vec::with_capacity(tokens.len() - 1);
                for &(col, tok) in &tokens[1..] {
                    let d: usize = tok.parse().map_err(|_| {
                        ParseError::syntax(line, col, format!("invalid dimension `{tok}`"))
                    })?;
                    dims.push(d);
                }
                sys = Some(QuditSystem::new(&dims).map_err(|e| match e {
                    crate::system::SystemError::IndexOverflow => ParseError::Resource {
                        line,
                        message: e.to_string(),
                    },
                    other => ParseError::validation(line, other),
                })?);
            }
            "init" => {
                let sys = sys.as_ref().ok_or_else(|| {
                    ParseError::syntax(line, col0, "init must come after dims")
                })?;
                let mut digits = Vec::with_capacity(tokens.len() - 1);
                for &(col, tok) in &tokens[1..] {
                    let v: usize = tok.parse().map_err(|_| {
                        ParseError::syntax(line, col, format!("invalid digit `{tok}`"))
                    })?;
                    digits.push(v);
                }
                if digits.len() != sys.num_qudits() {
                    return Err(ParseError::validation(
                        line,
                        format!(
                            "init needs {} digits, got {}",
                            sys.num_qudits(),
                            digits.len()
                        ),
                    ));
                }
                initial = sys
                    .encode(&digits)
                    .map_err(|e| ParseError::validation(line, e))?;
            }
            "h" | "x" | "z" | "p" | "u" | "cx" => {
                let sys = sys.as_ref().ok_or_else(|| {
                    ParseError::syntax(line, col0, "dims must come before any gate")
                })?;
                let op = parse_gate_line(sys, head, &tokens, line)?;
                op.validate(sys)
                    .map_err(|e| ParseError::validation(line, e))?;
                ops.push(op);
            }
            other => {
                return Err(ParseError::syntax(
                    line,
                    col0,
                    format!("unknown directive `{other}`"),
                ));
            }
        }
    }

    let sys = sys.ok_or_else(|| ParseError::syntax(last_line + 1, 1, "missing dims line"))?;
    Circuit::with_initial_state(name, sys, ops, initial)
        .map_err(|e| ParseError::validation(last_line, e))
}

fn parse_gate_line(
    sys: &QuditSystem,
    head: &str,
    tokens: &[(usize, &str)],
    line: usize,
) -> Result<GateOp, ParseError> {
    let at = tokens
        .iter()
        .position(|&(_, t)| t == "@")
        .unwrap_or(tokens.len());
    let args = &tokens[1..at];
    let mut controls = parse_controls(&tokens[at..], line)?;

    let parse_usize = |&(col, tok): &(usize, &str)| -> Result<usize, ParseError> {
        tok.parse()
            .map_err(|_| ParseError::syntax(line, col, format!("invalid index `{tok}`")))
    };
    let parse_i64 = |&(col, tok): &(usize, &str)| -> Result<i64, ParseError> {
        tok.parse()
            .map_err(|_| ParseError::syntax(line, col, format!("invalid integer `{tok}`")))
    };
    let parse_f64 = |&(col, tok): &(usize, &str)| -> Result<f64, ParseError> {
        tok.parse()
            .map_err(|_| ParseError::syntax(line, col, format!("invalid number `{tok}`")))
    };
    let arity = |want: usize| -> Result<(), ParseError> {
        if args.len() != want {
            return Err(ParseError::syntax(
                line,
                tokens[0].0,
                format!("`{head}` takes {want} arguments, got {}", args.len()),
            ));
        }
        Ok(())
    };
    let qudit_dim = |q: usize| -> Result<usize, ParseError> {
        sys.dims().get(q).copied().ok_or_else(|| {
            ParseError::validation(
                line,
                CircuitError::QuditOutOfRange {
                    qudit: q,
                    count: sys.num_qudits(),
                },
            )
        })
    };

    let (gate, target) = match head {
        "h" => {
            arity(1)?;
            let q = parse_usize(&args[0])?;
            let d = qudit_dim(q)?;
            (
                Gate::fourier_h(d).map_err(|e| ParseError::validation(line, e))?,
                q,
            )
        }
        "x" => {
            arity(2)?;
            let q = parse_usize(&args[0])?;
            let a = parse_i64(&args[1])?;
            let d = qudit_dim(q)?;
            (
                Gate::shift_x(d, a).map_err(|e| ParseError::validation(line, e))?,
                q,
            )
        }
        "z" => {
            arity(2)?;
            let q = parse_usize(&args[0])?;
            let p = parse_i64(&args[1])?;
            let d = qudit_dim(q)?;
            (
                Gate::clock_z(d, p).map_err(|e| ParseError::validation(line, e))?,
                q,
            )
        }
        "p" => {
            if args.is_empty() {
                return Err(ParseError::syntax(line, tokens[0].0, "`p` needs a qudit"));
            }
            let q = parse_usize(&args[0])?;
            let d = qudit_dim(q)?;
            if args.len() != 1 + d {
                return Err(ParseError::syntax(
                    line,
                    tokens[0].0,
                    format!("`p` on a dimension-{d} qudit takes {d} angles, got {}", args.len() - 1),
                ));
            }
            let angles = args[1..]
                .iter()
                .map(parse_f64)
                .collect::<Result<Vec<_>, _>>()?;
            (
                Gate::phase_gate(d, &angles).map_err(|e| ParseError::validation(line, e))?,
                q,
            )
        }
        "u" => {
            if args.is_empty() {
                return Err(ParseError::syntax(line, tokens[0].0, "`u` needs a qudit"));
            }
            let q = parse_usize(&args[0])?;
            let d = qudit_dim(q)?;
            let want = 2 * d * d;
            if args.len() != 1 + want {
                return Err(ParseError::syntax(
                    line,
                    tokens[0].0,
                    format!(
                        "`u` on a dimension-{d} qudit takes {want} floats (row-major re/im pairs), got {}",
                        args.len() - 1
                    ),
                ));
            }
            let floats = args[1..]
                .iter()
                .map(parse_f64)
                .collect::<Result<Vec<_>, _>>()?;
            let matrix: Vec<Complex64> = floats
                .chunks_exact(2)
                .map(|pair| Complex64::new(pair[0], pair[1]))
                .collect();
            (
                Gate::arbitrary(d, &matrix).map_err(|e| ParseError::validation(line, e))?,
                q,
            )
        }
        "cx" => {
            arity(2)?;
            let control = parse_usize(&args[0])?;
            let target = parse_usize(&args[1])?;
            let control_dim = qudit_dim(control)?;
            let target_dim = qudit_dim(target)?;
            // Increment the target when the control sits at its highest
            // state.
            controls.insert(0, (control, control_dim - 1));
            (
                Gate::shift_x(target_dim, 1).map_err(|e| ParseError::validation(line, e))?,
                target,
            )
        }
        _ => unreachable!("caller matched the directive"),
    };

    Ok(GateOp::controlled(gate, target, controls))
}

fn parse_controls(
    tokens: &[(usize, &str)],
    line: usize,
) -> Result<Vec<(usize, usize)>, ParseError> {
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let specs = &tokens[1..];
    if specs.is_empty() {
        return Err(ParseError::syntax(
            line,
            tokens[0].0,
            "`@` needs at least one q=v condition",
        ));
    }
    let mut controls = Vec::with_capacity(specs.len());
    for &(col, tok) in specs {
        let Some((q, v)) = tok.split_once('=') else {
            return Err(ParseError::syntax(
                line,
                col,
                format!("control `{tok}` is not of the form q=v"),
            ));
        };
        let q: usize = q.parse().map_err(|_| {
            ParseError::syntax(line, col, format!("invalid control qudit `{q}`"))
        })?;
        let v: usize = v.parse().map_err(|_| {
            ParseError::syntax(line, col, format!("invalid control value `{v}`"))
        })?;
        controls.push((q, v));
    }
    Ok(controls)
}

/// Serializes a circuit in the text format, emitting the most specific
/// directive that reproduces each gate bit for bit.
pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str(&format!("# name: {}\n", circuit.name()));
    let dims: Vec<String> = circuit.system().dims().iter().map(|d| d.to_string()).collect();
    out.push_str(&format!("dims {}\n", dims.join(" ")));
    if circuit.initial_state() != 0 {
        let digits = circuit
            .system()
            .decode(circuit.initial_state())
            .expect("initial state validated at construction");
        let digits: Vec<String> = digits.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("init {}\n", digits.join(" ")));
    }
    for op in circuit.ops() {
        out.push_str(&render_op(op));
        out.push('\n');
    }
    out
}

fn render_op(op: &GateOp) -> String {
    let d = op.gate.dim();
    let mut line = match op.gate.kind() {
        GateKind::Permutation { map } => match cyclic_shift_of(map) {
            Some(a) => format!("x {} {}", op.target, a),
            None => render_inline_matrix(op),
        },
        GateKind::Phase { diag } => match clock_power_of(diag, d) {
            Some(p) => format!("z {} {}", op.target, p),
            None => {
                let angles: Vec<String> =
                    diag.iter().map(|z| format!("{}", z.arg())).collect();
                format!("p {} {}", op.target, angles.join(" "))
            }
        },
        GateKind::General { .. } => {
            if op.gate == Gate::fourier_h(d).expect("valid dim") {
                format!("h {}", op.target)
            } else {
                render_inline_matrix(op)
            }
        }
    };
    if !op.controls.is_empty() {
        line.push_str(" @");
        for &(q, v) in &op.controls {
            line.push_str(&format!(" {q}={v}"));
        }
    }
    line
}

fn render_inline_matrix(op: &GateOp) -> String {
    let floats: Vec<String> = op
        .gate
        .to_matrix()
        .iter()
        .flat_map(|z| [format!("{}", z.re), format!("{}", z.im)])
        .collect();
    format!("u {} {}", op.target, floats.join(" "))
}

/// `Some(a)` when the map is `j -> (j + a) mod d`.
fn cyclic_shift_of(map: &[usize]) -> Option<usize> {
    let d = map.len();
    let a = map[0];
    (0..d).all(|j| map[j] == (j + a) % d).then_some(a)
}

/// `Some(p)` when the diagonal equals the clock gate raised to `p`, bit for
/// bit.
fn clock_power_of(diag: &[Complex64], d: usize) -> Option<i64> {
    (0..d as i64).find(|&p| {
        let GateKind::Phase { diag: clock } = Gate::clock_z(d, p).expect("valid dim").kind().clone()
        else {
            return false;
        };
        clock == diag
    })
}
