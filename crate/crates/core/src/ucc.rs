//! Unitary coupled-cluster circuits: cluster operators from amplitude files,
//! Trotter product formulas and Pauli-exponential synthesis.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::fermion::{FermionOp, FermionSum, Ladder};
use crate::mapping::{encode_occupation, fermion_to_pauli, Mapping};
use crate::pauli::{Letter, PauliString, PauliSum, ALGEBRAIC_ZERO};
use crate::statevec::{Circuit, Gate1Q};

/// Amplitudes below this magnitude are dropped.
pub const DEFAULT_AMPLITUDE_CUTOFF: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleExcitation {
    pub i: usize,
    pub p: usize,
    pub xi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleExcitation {
    pub i1: usize,
    pub i2: usize,
    pub p1: usize,
    pub p2: usize,
    pub xi: f64,
}

/// Singles and doubles over `n_modes` spin-orbitals with the lowest
/// `n_electrons` occupied in the reference.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterAmplitudes {
    pub n_modes: usize,
    pub n_electrons: usize,
    pub singles: Vec<SingleExcitation>,
    pub doubles: Vec<DoubleExcitation>,
}

impl ClusterAmplitudes {
    pub fn new(n_modes: usize, n_electrons: usize) -> Self {
        Self {
            n_modes,
            n_electrons,
            ..Self::default()
        }
    }

    /// Checks index ranges and finiteness. Returns warnings for excitations
    /// whose occupied and virtual modes differ in spin (even/odd index).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n_electrons > self.n_modes {
            return Err(QsimError::Contract(format!(
                "{} electrons do not fit in {} modes",
                self.n_electrons, self.n_modes
            )));
        }
        let occ = |i: usize| -> Result<()> {
            if i >= self.n_electrons {
                return Err(QsimError::Contract(format!(
                    "mode {i} is not occupied in the reference ({} electrons)",
                    self.n_electrons
                )));
            }
            Ok(())
        };
        let virt = |p: usize| -> Result<()> {
            if p < self.n_electrons || p >= self.n_modes {
                return Err(QsimError::ModeIndex {
                    index: p,
                    num_modes: self.n_modes,
                });
            }
            Ok(())
        };
        let finite = |xi: f64| -> Result<()> {
            if !xi.is_finite() {
                return Err(QsimError::Contract(format!("amplitude {xi} is not finite")));
            }
            Ok(())
        };
        let mut warnings = Vec::new();
        for s in &self.singles {
            occ(s.i)?;
            virt(s.p)?;
            finite(s.xi)?;
            if s.i % 2 != s.p % 2 {
                warnings.push(format!("single {} -> {} changes spin", s.i, s.p));
            }
        }
        for d in &self.doubles {
            occ(d.i1)?;
            occ(d.i2)?;
            virt(d.p1)?;
            virt(d.p2)?;
            finite(d.xi)?;
            let spin_in = d.i1 % 2 + d.i2 % 2;
            let spin_out = d.p1 % 2 + d.p2 % 2;
            if spin_in != spin_out {
                warnings.push(format!(
                    "double {} {} -> {} {} changes spin",
                    d.i1, d.i2, d.p1, d.p2
                ));
            }
        }
        Ok(warnings)
    }
}

/// Reads `modes`, `electrons`, `single i p xi` and `double i1 i2 p1 p2 xi` lines.
pub fn parse_amplitudes(text: &str) -> Result<ClusterAmplitudes> {
    let mut modes = None;
    let mut electrons = None;
    let mut singles = Vec::new();
    let mut doubles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| QsimError::parse(lineno, format!("expected an index, found `{s}`")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| QsimError::parse(lineno, format!("expected a number, found `{s}`")))
        };
        let arity = |k: usize| {
            if toks.len() != k {
                return Err(QsimError::parse(
                    lineno,
                    format!("`{}` takes {} fields", toks[0], k - 1),
                ));
            }
            Ok(())
        };
        match toks[0] {
            "modes" => {
                arity(2)?;
                modes = Some(int(toks[1])?);
            }
            "electrons" => {
                arity(2)?;
                electrons = Some(int(toks[1])?);
            }
            "single" => {
                arity(4)?;
                singles.push(SingleExcitation {
                    i: int(toks[1])?,
                    p: int(toks[2])?,
                    xi: real(toks[3])?,
                });
            }
            "double" => {
                arity(6)?;
                doubles.push(DoubleExcitation {
                    i1: int(toks[1])?,
                    i2: int(toks[2])?,
                    p1: int(toks[3])?,
                    p2: int(toks[4])?,
                    xi: real(toks[5])?,
                });
            }
            other => return Err(QsimError::parse(lineno, format!("unknown keyword `{other}`"))),
        }
    }
    let amps = ClusterAmplitudes {
        n_modes: modes.ok_or_else(|| QsimError::parse(0, "missing `modes` line"))?,
        n_electrons: electrons.ok_or_else(|| QsimError::parse(0, "missing `electrons` line"))?,
        singles,
        doubles,
    };
    amps.validate()?;
    Ok(amps)
}

pub fn write_amplitudes(amps: &ClusterAmplitudes) -> String {
    let mut out = format!("modes {}\nelectrons {}\n", amps.n_modes, amps.n_electrons);
    for s in &amps.singles {
        let _ = writeln!(out, "single {} {} {:?}", s.i, s.p, s.xi);
    }
    for d in &amps.doubles {
        let _ = writeln!(out, "double {} {} {} {} {:?}", d.i1, d.i2, d.p1, d.p2, d.xi);
    }
    out
}

/// `T = T1 + T2` with
/// `T1 = sum xi (a_i^ a_p - a_p^ a_i)` and
/// `T2 = sum xi (a_i1^ a_p1 a_i2^ a_p2 - a_p2^ a_i2 a_p1^ a_i1)`.
pub fn build_cluster_operator(amps: &ClusterAmplitudes, cutoff: f64) -> Result<FermionSum> {
    amps.validate()?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let (cr, an) = (Ladder::create, Ladder::annihilate);
    let mut t = FermionSum::new(amps.n_modes);
    for s in amps.singles.iter().filter(|s| s.xi.abs() >= cutoff) {
        t.push(c(s.xi), FermionOp::new(vec![cr(s.i), an(s.p)]))?;
        t.push(c(-s.xi), FermionOp::new(vec![cr(s.p), an(s.i)]))?;
    }
    for d in amps.doubles.iter().filter(|d| d.xi.abs() >= cutoff) {
        t.push(
            c(d.xi),
            FermionOp::new(vec![cr(d.i1), an(d.p1), cr(d.i2), an(d.p2)]),
        )?;
        t.push(
            c(-d.xi),
            FermionOp::new(vec![cr(d.p2), an(d.i2), cr(d.p1), an(d.i1)]),
        )?;
    }
    Ok(t)
}

/// Qubit bitmask of the Hartree-Fock state: the lowest `n_electrons` modes
/// occupied, encoded under `mapping`.
pub fn hartree_fock_reference(n_electrons: usize, n_modes: usize, mapping: Mapping) -> Result<u64> {
    if n_electrons > n_modes {
        return Err(QsimError::Contract(format!(
            "{n_electrons} electrons do not fit in {n_modes} modes"
        )));
    }
    if n_modes > 64 {
        return Err(QsimError::Contract("at most 64 modes are supported".into()));
    }
    let occ = if n_electrons == 64 {
        u64::MAX
    } else {
        (1u64 << n_electrons) - 1
    };
    Ok(encode_occupation(occ, mapping, n_modes))
}

/// Order of exponentials inside one Trotter step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TermOrder {
    /// Strings grouped by their `X`-mask (the set of flipped qubits). Groups
    /// follow the canonical order of their first member; members within a
    /// group are canonical.
    #[default]
    FlipPatternGroups,
    /// Plain canonical order of the strings.
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrotterPlan {
    pub eta: usize,
    pub term_order: TermOrder,
}

impl TrotterPlan {
    pub fn new(eta: usize) -> Result<Self> {
        if eta == 0 {
            return Err(QsimError::Contract("Trotter number must be at least 1".into()));
        }
        Ok(Self {
            eta,
            term_order: TermOrder::default(),
        })
    }

    pub fn with_order(mut self, term_order: TermOrder) -> Self {
        self.term_order = term_order;
        self
    }
}

impl Default for TrotterPlan {
    fn default() -> Self {
        Self {
            eta: 1,
            term_order: TermOrder::default(),
        }
    }
}

/// Splits `exp(sum_k i c_k P_k)` into `eta` repetitions of `exp(i c_k/eta P_k)`.
/// Returns `(c_k / eta, P_k)` in application order.
pub fn trotterize(generator: &PauliSum, plan: &TrotterPlan) -> Result<Vec<(f64, PauliString)>> {
    if plan.eta == 0 {
        return Err(QsimError::Contract("Trotter number must be at least 1".into()));
    }
    let simplified = generator.simplified();
    let mut terms: Vec<(f64, PauliString)> = Vec::with_capacity(simplified.len());
    for t in simplified.terms() {
        if t.coeff.re.abs() > ALGEBRAIC_ZERO {
            return Err(QsimError::Contract(format!(
                "generator term {} has real coefficient part {}; expected anti-Hermitian",
                t.string, t.coeff.re
            )));
        }
        terms.push((t.coeff.im, t.string));
    }
    // `simplified` is already canonical.
    if plan.term_order == TermOrder::FlipPatternGroups {
        let mut groups: BTreeMap<usize, Vec<(f64, PauliString)>> = BTreeMap::new();
        let mut first_of: BTreeMap<u64, usize> = BTreeMap::new();
        for (pos, term) in terms.into_iter().enumerate() {
            let key = *first_of.entry(term.1.x_mask()).or_insert(pos);
            groups.entry(key).or_default().push(term);
        }
        terms = groups.into_values().flatten().collect();
    }
    let eta = plan.eta as f64;
    let step: Vec<(f64, PauliString)> = terms.into_iter().map(|(c, p)| (c / eta, p)).collect();
    let mut out = Vec::with_capacity(step.len() * plan.eta);
    for _ in 0..plan.eta {
        out.extend(step.iter().cloned());
    }
    Ok(out)
}

/// Circuit for `exp(i c P)`. The identity string contributes only a global phase.
pub fn synthesize_exponential(c: f64, p: &PauliString) -> Result<Circuit> {
    let mut circ = Circuit::new(p.num_qubits());
    append_exponential(&mut circ, c, p)?;
    Ok(circ)
}

/// Appends the gates of `exp(i c P)` to `circ`.
pub fn append_exponential(circ: &mut Circuit, c: f64, p: &PauliString) -> Result<()> {
    if p.num_qubits() != circ.num_qubits() {
        return Err(QsimError::SizeMismatch {
            expected: circ.num_qubits(),
            actual: p.num_qubits(),
        });
    }
    let active: Vec<(usize, Letter)> = p.letters().filter(|(_, l)| *l != Letter::I).collect();
    let Some(&(top, _)) = active.last() else {
        circ.global_phase += c;
        return Ok(());
    };
    for &(q, l) in &active {
        match l {
            Letter::X => circ.push_1q(Gate1Q::h(), q)?,
            Letter::Y => circ.push_1q(Gate1Q::yb(), q)?,
            _ => {}
        }
    }
    for w in active.windows(2) {
        circ.push_cnot(w[0].0, w[1].0)?;
    }
    circ.push_1q(Gate1Q::rz(-2.0 * c), top)?;
    for w in active.windows(2).rev() {
        circ.push_cnot(w[0].0, w[1].0)?;
    }
    for &(q, l) in &active {
        match l {
            Letter::X => circ.push_1q(Gate1Q::h(), q)?,
            Letter::Y => circ.push_1q(Gate1Q::ybdg(), q)?,
            _ => {}
        }
    }
    Ok(())
}

/// A synthesized state-preparation circuit and the basis state it starts from.
#[derive(Clone, Debug, PartialEq)]
pub struct UccCircuit {
    pub circuit: Circuit,
    pub reference: u64,
    pub generator: PauliSum,
}

impl UccCircuit {
    pub fn gate_count(&self) -> usize {
        self.circuit.gate_count()
    }
}

/// Qubit image of `T` under `mapping`, ready for [`trotterize`].
pub fn ucc_generator(amps: &ClusterAmplitudes, mapping: Mapping, cutoff: f64) -> Result<PauliSum> {
    let t = build_cluster_operator(amps, cutoff)?;
    fermion_to_pauli(&t, mapping, amps.n_modes)
}

pub fn build_ucc_circuit(
    amps: &ClusterAmplitudes,
    mapping: Mapping,
    plan: &TrotterPlan,
    cutoff: f64,
) -> Result<UccCircuit> {
    let generator = ucc_generator(amps, mapping, cutoff)?;
    let reference = hartree_fock_reference(amps.n_electrons, amps.n_modes, mapping)?;
    let mut circuit = Circuit::new(amps.n_modes);
    for (c, p) in trotterize(&generator, plan)? {
        append_exponential(&mut circuit, c, &p)?;
    }
    Ok(UccCircuit {
        circuit,
        reference,
        generator,
    })
}

/// Quantum Fourier transform `|x> -> 2^{-n/2} sum_y e^{2 pi i x y / 2^n} |y>`
/// built from `H`, controlled phases and a final swap network of CNOTs.
pub fn qft_circuit(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(QsimError::Contract("QFT needs at least one qubit".into()));
    }
    let mut circ = Circuit::new(n);
    for j in (0..n).rev() {
        circ.push_1q(Gate1Q::h(), j)?;
        for m in (0..j).rev() {
            let angle = PI / (1u64 << (j - m)) as f64;
            circ.push_controlled(Gate1Q::phase(angle), m, j)?;
        }
    }
    for j in 0..n / 2 {
        let k = n - 1 - j;
        circ.push_cnot(j, k)?;
        circ.push_cnot(k, j)?;
        circ.push_cnot(j, k)?;
    }
    Ok(circ)
}
