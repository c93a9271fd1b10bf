//! OpenQASM 2.0 emission and parsing for the frozen circuit subset:
//! one quantum register, one classical register, `u3` rotations, `cx`,
//! and trailing measurements. Emission is byte-deterministic and the
//! parser round-trips emitted files exactly.

use thiserror::Error;

use crate::simulator::{Circuit, GateOp, SimulatorError};

#[derive(Debug, Error)]
pub enum QasmError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Circuit(#[from] SimulatorError),
}

/// Angle formatting: 15 significant digits, trailing zeros trimmed,
/// locale-independent. Parsing the result and re-emitting reproduces the
/// exact same bytes.
fn format_angle(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return "0e0".to_string();
    }
    let full = format!("{x:.14e}");
    let (mantissa, exponent) = full.split_once('e').expect("exponent always present");
    let trimmed = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{trimmed}e{exponent}")
}

/// Emit a circuit as OpenQASM 2.0 text.
pub fn emit_qasm(c: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    out.push_str(&format!("qreg q[{}];\n", c.num_qubits()));
    out.push_str(&format!("creg c[{}];\n", c.measured_qubits().len()));
    for op in c.ops() {
        match *op {
            GateOp::Rotation { qubit, theta, phi, lambda } => {
                out.push_str(&format!(
                    "u3({},{},{}) q[{}];\n",
                    format_angle(theta),
                    format_angle(phi),
                    format_angle(lambda),
                    qubit
                ));
            }
            GateOp::Cnot { control, target } => {
                out.push_str(&format!("cx q[{control}],q[{target}];\n"));
            }
        }
    }
    for (k, &q) in c.measured_qubits().iter().enumerate() {
        out.push_str(&format!("measure q[{q}] -> c[{k}];\n"));
    }
    out
}

/// Single-line cursor with column tracking for error reporting.
struct Cursor<'a> {
    text: &'a str,
    line: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self { text, line, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> QasmError {
        QasmError::Parse { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn expect(&mut self, literal: &str) -> Result<(), QasmError> {
        if self.rest().starts_with(literal) {
            self.pos += literal.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{literal}`")))
        }
    }

    fn parse_usize(&mut self) -> Result<usize, QasmError> {
        let digits: String = self.rest().chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(self.error("expected an integer"));
        }
        self.pos += digits.len();
        digits
            .parse()
            .map_err(|_| self.error("integer out of range"))
    }

    fn parse_f64(&mut self) -> Result<f64, QasmError> {
        let len = self
            .rest()
            .chars()
            .take_while(|&c| c.is_ascii_digit() || "+-.eE".contains(c))
            .count();
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        let token = &self.rest()[..len];
        let value: f64 = token
            .parse()
            .map_err(|_| self.error(format!("invalid number `{token}`")))?;
        if !value.is_finite() {
            return Err(self.error("non-finite angle"));
        }
        self.pos += len;
        Ok(value)
    }

    fn done(&mut self) -> Result<(), QasmError> {
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.error("trailing characters"))
        }
    }
}

/// Parse OpenQASM 2.0 text restricted to the emitted subset. Whole-line
/// comments (`//`) and blank lines are skipped.
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("//"));

    let mut expect_line = |want: &str, what: &str| -> Result<usize, QasmError> {
        match lines.next() {
            Some((n, l)) if l == want => Ok(n),
            Some((n, l)) => Err(QasmError::Parse {
                line: n,
                column: 1,
                message: format!("expected {what}, found `{l}`"),
            }),
            None => Err(QasmError::Parse {
                line: 0,
                column: 1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    };
    expect_line("OPENQASM 2.0;", "the `OPENQASM 2.0;` header")?;
    expect_line("include \"qelib1.inc\";", "the standard include")?;

    let (qreg_line_no, qreg_line) = lines.next().ok_or(QasmError::Parse {
        line: 0,
        column: 1,
        message: "unexpected end of input, expected qreg".into(),
    })?;
    let mut cur = Cursor::new(qreg_line, qreg_line_no);
    cur.expect("qreg q[")?;
    let num_qubits = cur.parse_usize()?;
    cur.expect("];")?;
    cur.done()?;

    let (creg_line_no, creg_line) = lines.next().ok_or(QasmError::Parse {
        line: 0,
        column: 1,
        message: "unexpected end of input, expected creg".into(),
    })?;
    let mut cur = Cursor::new(creg_line, creg_line_no);
    cur.expect("creg c[")?;
    let num_clbits = cur.parse_usize()?;
    cur.expect("];")?;
    cur.done()?;

    let mut ops = Vec::new();
    let mut measured: Vec<usize> = Vec::new();
    for (line_no, line) in lines {
        let mut cur = Cursor::new(line, line_no);
        if line.starts_with("u3(") {
            if !measured.is_empty() {
                return Err(cur.error("gate after measurement"));
            }
            cur.expect("u3(")?;
            let theta = cur.parse_f64()?;
            cur.expect(",")?;
            let phi = cur.parse_f64()?;
            cur.expect(",")?;
            let lambda = cur.parse_f64()?;
            cur.expect(") q[")?;
            let qubit = cur.parse_usize()?;
            cur.expect("];")?;
            cur.done()?;
            ops.push(GateOp::Rotation { qubit, theta, phi, lambda });
        } else if line.starts_with("cx ") {
            if !measured.is_empty() {
                return Err(cur.error("gate after measurement"));
            }
            cur.expect("cx q[")?;
            let control = cur.parse_usize()?;
            cur.expect("],q[")?;
            let target = cur.parse_usize()?;
            cur.expect("];")?;
            cur.done()?;
            ops.push(GateOp::Cnot { control, target });
        } else if line.starts_with("measure ") {
            cur.expect("measure q[")?;
            let qubit = cur.parse_usize()?;
            cur.expect("] -> c[")?;
            let clbit = cur.parse_usize()?;
            cur.expect("];")?;
            cur.done()?;
            if clbit != measured.len() {
                return Err(cur.error(format!(
                    "classical bits must be assigned in order (expected c[{}])",
                    measured.len()
                )));
            }
            if clbit >= num_clbits {
                return Err(cur.error(format!("classical register has size {num_clbits}")));
            }
            measured.push(qubit);
        } else {
            return Err(cur.error("unsupported construct"));
        }
    }
    if measured.len() != num_clbits {
        return Err(QasmError::Parse {
            line: 0,
            column: 1,
            message: format!(
                "classical register has size {num_clbits} but {} bits were measured",
                measured.len()
            ),
        });
    }
    Ok(Circuit::new(num_qubits, ops, measured)?)
}
