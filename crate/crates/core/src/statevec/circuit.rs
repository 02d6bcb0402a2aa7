use std::fmt::Write as _;

use num_complex::Complex64;

use super::gate::{Gate1Q, GateName};
use crate::error::{QsimError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    OneQubit { gate: Gate1Q, target: usize },
    Controlled { gate: Gate1Q, control: usize, target: usize },
}

/// One gate placed on the noise clock.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub time_step: u64,
}

impl GateOp {
    pub fn gate(&self) -> &Gate1Q {
        match &self.kind {
            GateKind::OneQubit { gate, .. } | GateKind::Controlled { gate, .. } => gate,
        }
    }

    pub fn target(&self) -> usize {
        match self.kind {
            GateKind::OneQubit { target, .. } | GateKind::Controlled { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match self.kind {
            GateKind::OneQubit { .. } => None,
            GateKind::Controlled { control, .. } => Some(control),
        }
    }

    /// Highest qubit index the gate touches.
    pub fn max_qubit(&self) -> usize {
        self.control().map_or(self.target(), |c| c.max(self.target()))
    }

    pub fn qubit_mask(&self) -> u64 {
        let t = 1u64 << self.target();
        self.control().map_or(t, |c| t | (1u64 << c))
    }
}

/// Ordered gate sequence on `num_qubits` qubits.
///
/// `global_phase` accumulates phases of identity exponentials; it never
/// affects observables.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            ops: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn gate_count(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Number of distinct noise-clock steps.
    pub fn num_time_steps(&self) -> usize {
        let mut steps = 0;
        let mut last = None;
        for op in &self.ops {
            if last != Some(op.time_step) {
                steps += 1;
                last = Some(op.time_step);
            }
        }
        steps
    }

    pub fn is_unitary(&self) -> bool {
        self.ops.iter().all(|op| op.gate().is_unitary())
    }

    fn next_step(&self) -> u64 {
        self.ops.last().map_or(0, |op| op.time_step + 1)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(QsimError::QubitIndex {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    /// Appends a single-qubit gate in its own time step.
    pub fn push_1q(&mut self, gate: Gate1Q, target: usize) -> Result<()> {
        self.check_qubit(target)?;
        let time_step = self.next_step();
        self.ops.push(GateOp {
            kind: GateKind::OneQubit { gate, target },
            time_step,
        });
        Ok(())
    }

    /// Appends a controlled gate in its own time step.
    pub fn push_controlled(&mut self, gate: Gate1Q, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QsimError::InvalidGate(format!(
                "control and target are both qubit {control}"
            )));
        }
        let time_step = self.next_step();
        self.ops.push(GateOp {
            kind: GateKind::Controlled {
                gate,
                control,
                target,
            },
            time_step,
        });
        Ok(())
    }

    pub fn push_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push_controlled(Gate1Q::x(), control, target)
    }

    /// Appends `other`'s gates after this circuit's, re-stamping time steps serially.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        let base = self.next_step();
        let first = other.ops.first().map_or(0, |op| op.time_step);
        self.ops.extend(other.ops.iter().map(|op| GateOp {
            kind: op.kind.clone(),
            time_step: base + (op.time_step - first),
        }));
        self.global_phase += other.global_phase;
        Ok(())
    }

    /// Same gates with each op's gate replaced by `f(op)`; time steps kept.
    pub fn map_gates(&self, mut f: impl FnMut(usize, &GateOp) -> Gate1Q) -> Circuit {
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(i, op)| {
                let gate = f(i, op);
                let kind = match op.kind {
                    GateKind::OneQubit { target, .. } => GateKind::OneQubit { gate, target },
                    GateKind::Controlled {
                        control, target, ..
                    } => GateKind::Controlled {
                        gate,
                        control,
                        target,
                    },
                };
                GateOp {
                    kind,
                    time_step: op.time_step,
                }
            })
            .collect();
        Circuit {
            num_qubits: self.num_qubits,
            ops,
            global_phase: self.global_phase,
        }
    }

    /// Re-stamps time steps so gates on disjoint qubits share a step.
    ///
    /// A new step opens whenever an op touches a qubit already used in the
    /// current step, so steps stay nondecreasing in program order.
    pub fn layered(&self) -> Circuit {
        let mut out = self.clone();
        let mut step = 0u64;
        let mut used = 0u64;
        for op in &mut out.ops {
            let mask = op.qubit_mask();
            if used & mask != 0 {
                step += 1;
                used = 0;
            }
            used |= mask;
            op.time_step = step;
        }
        out
    }

    /// Groups op indices by time step, in order.
    pub fn steps(&self) -> Vec<&[GateOp]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.ops.len() {
            if i == self.ops.len() || self.ops[i].time_step != self.ops[start].time_step {
                out.push(&self.ops[start..i]);
                start = i;
            }
        }
        out
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn gate_line(op: &GateOp) -> String {
    let g = op.gate();
    match op.kind {
        GateKind::OneQubit { target: q, .. } => match g.name() {
            GateName::H => format!("H {q}"),
            GateName::X => format!("X {q}"),
            GateName::Y => format!("Y {q}"),
            GateName::Z => format!("Z {q}"),
            GateName::Yb => format!("YB {q}"),
            GateName::YbDg => format!("YBDG {q}"),
            GateName::Rx(a) => format!("RX {q} {}", fmt_f64(a)),
            GateName::Ry(a) => format!("RY {q} {}", fmt_f64(a)),
            GateName::Rz(a) => format!("RZ {q} {}", fmt_f64(a)),
            GateName::Phase(a) => format!("P {q} {}", fmt_f64(a)),
            GateName::HadamardAxis(_) | GateName::Custom => format!("U {q} {}", matrix_fields(g)),
        },
        GateKind::Controlled {
            control: c,
            target: t,
            ..
        } => match g.name() {
            GateName::X => format!("CNOT {c} {t}"),
            GateName::Rx(a) => format!("CRX {c} {t} {}", fmt_f64(a)),
            GateName::Phase(a) => format!("CP {c} {t} {}", fmt_f64(a)),
            _ => format!("CU {c} {t} {}", matrix_fields(g)),
        },
    }
}

fn matrix_fields(g: &Gate1Q) -> String {
    let m = g.matrix();
    [m[0][0], m[0][1], m[1][0], m[1][1]]
        .iter()
        .flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes the circuit text format with `# qubits`, optional `# reference`,
/// and `# gates` header comments.
pub fn write_circuit(circuit: &Circuit, reference: Option<u64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# qubits {}", circuit.num_qubits);
    if let Some(r) = reference {
        let _ = writeln!(s, "# reference 0b{r:0width$b}", width = circuit.num_qubits.max(1));
    }
    let _ = writeln!(s, "# gates {}", circuit.gate_count());
    if circuit.global_phase != 0.0 {
        let _ = writeln!(s, "# global_phase {}", fmt_f64(circuit.global_phase));
    }
    for op in &circuit.ops {
        s.push_str(&gate_line(op));
        s.push('\n');
    }
    s
}

/// A parsed circuit file.
#[derive(Clone, Debug)]
pub struct CircuitFile {
    pub circuit: Circuit,
    pub reference: Option<u64>,
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix('#')?.trim_start();
    let rest = rest.strip_prefix(key)?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    Some(rest.trim())
}

/// Parses the circuit text format. Qubit count comes from a `# qubits n`
/// header when present, otherwise from the largest index used.
pub fn parse_circuit(text: &str) -> Result<CircuitFile> {
    let mut declared = None;
    let mut reference = None;
    let mut global_phase = 0.0;
    let mut parsed: Vec<(usize, Vec<usize>, Gate1Q)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(v) = header_value(line, "qubits") {
                declared = Some(
                    v.parse::<usize>()
                        .map_err(|_| QsimError::parse(lineno, format!("bad qubit count `{v}`")))?,
                );
            } else if let Some(v) = header_value(line, "reference") {
                let digits = v.strip_prefix("0b").unwrap_or(v);
                reference = Some(
                    u64::from_str_radix(digits, 2)
                        .map_err(|_| QsimError::parse(lineno, format!("bad reference `{v}`")))?,
                );
            } else if let Some(v) = header_value(line, "global_phase") {
                global_phase = v
                    .parse::<f64>()
                    .map_err(|_| QsimError::parse(lineno, format!("bad phase `{v}`")))?;
            }
            continue;
        }
        let line = line.split('#').next().unwrap_or("").trim();
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (qubits, gate) = parse_op(&toks, lineno)?;
        parsed.push((lineno, qubits, gate));
    }

    let inferred = parsed
        .iter()
        .flat_map(|(_, qs, _)| qs.iter().copied())
        .max()
        .map_or(1, |m| m + 1);
    let n = declared.unwrap_or(inferred);
    let mut circuit = Circuit::new(n);
    circuit.global_phase = global_phase;
    for (lineno, qubits, gate) in parsed {
        let res = match qubits.as_slice() {
            [t] => circuit.push_1q(gate, *t),
            [c, t] => circuit.push_controlled(gate, *c, *t),
            _ => unreachable!(),
        };
        res.map_err(|e| QsimError::parse(lineno, e.to_string()))?;
    }
    Ok(CircuitFile { circuit, reference })
}

fn parse_op(toks: &[&str], lineno: usize) -> Result<(Vec<usize>, Gate1Q)> {
    let err = |m: String| QsimError::parse(lineno, m);
    let qubit = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| QsimError::parse(lineno, format!("bad qubit index `{s}`")))
    };
    let real = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| QsimError::parse(lineno, format!("bad number `{s}`")))
    };
    let arity = |n: usize| -> Result<()> {
        if toks.len() != n {
            return Err(err(format!(
                "`{}` takes {} arguments, found {}",
                toks[0],
                n - 1,
                toks.len() - 1
            )));
        }
        Ok(())
    };
    let matrix = |fields: &[&str]| -> Result<[Complex64; 4]> {
        let v = fields.iter().map(|s| real(s)).collect::<Result<Vec<_>>>()?;
        Ok([
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
            Complex64::new(v[6], v[7]),
        ])
    };
    let op = toks[0].to_ascii_uppercase();
    let one = |g: Gate1Q| -> Result<(Vec<usize>, Gate1Q)> {
        arity(2)?;
        Ok((vec![qubit(toks[1])?], g))
    };
    match op.as_str() {
        "H" => one(Gate1Q::h()),
        "X" => one(Gate1Q::x()),
        "Y" => one(Gate1Q::y()),
        "Z" => one(Gate1Q::z()),
        "YB" => one(Gate1Q::yb()),
        "YBDG" => one(Gate1Q::ybdg()),
        "RX" | "RY" | "RZ" | "P" => {
            arity(3)?;
            let a = real(toks[2])?;
            let g = match op.as_str() {
                "RX" => Gate1Q::rx(a),
                "RY" => Gate1Q::ry(a),
                "RZ" => Gate1Q::rz(a),
                _ => Gate1Q::phase(a),
            };
            Ok((vec![qubit(toks[1])?], g))
        }
        "U" => {
            arity(10)?;
            let [a, b, cc, d] = matrix(&toks[2..10])?;
            let g = Gate1Q::new(a, b, cc, d).unwrap_or_else(|_| Gate1Q::new_nonunitary(a, b, cc, d));
            Ok((vec![qubit(toks[1])?], g))
        }
        "CNOT" => {
            arity(3)?;
            Ok((vec![qubit(toks[1])?, qubit(toks[2])?], Gate1Q::x()))
        }
        "CRX" | "CP" => {
            arity(4)?;
            let a = real(toks[3])?;
            let g = if op == "CRX" {
                Gate1Q::rx(a)
            } else {
                Gate1Q::phase(a)
            };
            Ok((vec![qubit(toks[1])?, qubit(toks[2])?], g))
        }
        "CU" => {
            arity(11)?;
            let [a, b, cc, d] = matrix(&toks[3..11])?;
            let g = Gate1Q::new(a, b, cc, d).unwrap_or_else(|_| Gate1Q::new_nonunitary(a, b, cc, d));
            Ok((vec![qubit(toks[1])?, qubit(toks[2])?], g))
        }
        other => Err(err(format!("unknown gate `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_time_steps() {
        let mut c = Circuit::new(3);
        c.push_1q(Gate1Q::h(), 0).unwrap();
        c.push_cnot(0, 2).unwrap();
        c.push_1q(Gate1Q::rz(0.1), 1).unwrap();
        let steps: Vec<u64> = c.ops().iter().map(|o| o.time_step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
        assert_eq!(c.num_time_steps(), 3);
    }

    #[test]
    fn layered_shares_steps_on_disjoint_qubits() {
        let mut c = Circuit::new(4);
        c.push_1q(Gate1Q::h(), 0).unwrap();
        c.push_1q(Gate1Q::h(), 1).unwrap();
        c.push_cnot(2, 3).unwrap();
        c.push_cnot(0, 1).unwrap();
        let l = c.layered();
        let steps: Vec<u64> = l.ops().iter().map(|o| o.time_step).collect();
        assert_eq!(steps, vec![0, 0, 0, 1]);
        assert_eq!(l.steps().len(), 2);
    }

    #[test]
    fn rejects_bad_ops() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.push_cnot(1, 1), Err(QsimError::InvalidGate(_))));
        assert!(matches!(c.push_1q(Gate1Q::x(), 2), Err(QsimError::QubitIndex { .. })));
    }

    #[test]
    fn text_round_trip() {
        let text = "# qubits 3\n# reference 0b011\nH 0\nYB 1\nYBDG 1\nRZ 2 -0.2\nCNOT 0 2\nCRX 1 0 3.1425926535897933\nCP 0 1 0.7853981633974483\nU 2 0 0 1 0 1 0 0 0\n";
        let f = parse_circuit(text).unwrap();
        assert_eq!(f.circuit.num_qubits(), 3);
        assert_eq!(f.reference, Some(0b011));
        assert_eq!(f.circuit.gate_count(), 8);
        let written = write_circuit(&f.circuit, f.reference);
        let again = parse_circuit(&written).unwrap();
        assert_eq!(again.circuit, f.circuit);
        assert_eq!(write_circuit(&again.circuit, again.reference), written);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_circuit("H 0\nFOO 1\n") {
            Err(QsimError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_circuit("# qubits 2\nH 5\n") {
            Err(QsimError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_circuit("RZ 0\n").is_err());
    }

    #[test]
    fn comments_and_inference() {
        let f = parse_circuit("# a comment\nH 0 # trailing\n\nCNOT 0 4\n").unwrap();
        assert_eq!(f.circuit.num_qubits(), 5);
        assert_eq!(f.circuit.gate_count(), 2);
    }
}
