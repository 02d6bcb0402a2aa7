//! Second-quantized operators: weighted products of ladder operators.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::pauli::parse_coeff_line;

/// One ladder operator: `a_p^dagger` when `dagger`, else `a_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }
}

/// Operator product, leftmost factor acting last on a ket.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FermionOp(pub Vec<Ladder>);

impl FermionOp {
    pub fn new(ops: Vec<Ladder>) -> Self {
        Self(ops)
    }

    pub fn adjoint(&self) -> Self {
        Self(
            self.0
                .iter()
                .rev()
                .map(|l| Ladder {
                    mode: l.mode,
                    dagger: !l.dagger,
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FermionSum {
    num_modes: usize,
    terms: Vec<(Complex64, FermionOp)>,
}

impl FermionSum {
    pub fn new(num_modes: usize) -> Self {
        Self {
            num_modes,
            terms: Vec::new(),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn terms(&self) -> &[(Complex64, FermionOp)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coeff: Complex64, op: FermionOp) -> Result<()> {
        if let Some(l) = op.0.iter().find(|l| l.mode >= self.num_modes) {
            return Err(QsimError::ModeIndex {
                index: l.mode,
                num_modes: self.num_modes,
            });
        }
        self.terms.push((coeff, op));
        Ok(())
    }

    pub fn extend(&mut self, other: &FermionSum) -> Result<()> {
        if other.num_modes != self.num_modes {
            return Err(QsimError::SizeMismatch {
                expected: self.num_modes,
                actual: other.num_modes,
            });
        }
        self.terms.extend(other.terms.iter().cloned());
        Ok(())
    }

    /// Term-wise adjoint: reversed products with flipped daggers and conjugated coefficients.
    pub fn adjoint(&self) -> Self {
        Self {
            num_modes: self.num_modes,
            terms: self
                .terms
                .iter()
                .map(|(c, op)| (c.conj(), op.adjoint()))
                .collect(),
        }
    }

    /// `sum a_i^dagger a_i` over all modes.
    pub fn number_operator(num_modes: usize) -> Self {
        Self {
            num_modes,
            terms: (0..num_modes)
                .map(|i| {
                    (
                        Complex64::new(1.0, 0.0),
                        FermionOp::new(vec![Ladder::create(i), Ladder::annihilate(i)]),
                    )
                })
                .collect(),
        }
    }

    fn merged(&self) -> BTreeMap<FermionOp, Complex64> {
        let mut m: BTreeMap<FermionOp, Complex64> = BTreeMap::new();
        for (c, op) in &self.terms {
            *m.entry(op.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        m.retain(|_, c| c.norm() > 0.0);
        m
    }

    /// `f^dagger == -f` by term-wise comparison of the written products (no
    /// reordering by anticommutation).
    pub fn is_syntactically_anti_hermitian(&self, tol: f64) -> bool {
        let mine = self.merged();
        let adj = self.adjoint().merged();
        let keys: std::collections::BTreeSet<&FermionOp> = mine.keys().chain(adj.keys()).collect();
        let ok = keys.into_iter().all(|k| {
            let a = mine.get(k).copied().unwrap_or_default();
            let b = adj.get(k).copied().unwrap_or_default();
            (a + b).norm() <= tol
        });
        ok
    }
}

/// Reads a fermion file: `modes <n>`, then `<re> <im> : <tok> ...` lines where
/// a token is `p^` (creation) or `p` (annihilation).
pub fn parse_fermion_file(text: &str) -> Result<(usize, FermionSum)> {
    let mut sum: Option<FermionSum> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(s) = sum.as_mut() else {
            let mut toks = line.split_whitespace();
            match (toks.next(), toks.next(), toks.next()) {
                (Some("modes"), Some(v), None) => {
                    let n: usize = v
                        .parse()
                        .map_err(|_| QsimError::parse(lineno, format!("bad mode count `{v}`")))?;
                    sum = Some(FermionSum::new(n));
                    continue;
                }
                _ => return Err(QsimError::parse(lineno, "expected `modes <n>`")),
            }
        };
        let (coeff, tail) = parse_coeff_line(line, lineno)?;
        let mut ops = Vec::new();
        for tok in tail.split_whitespace() {
            let (digits, dagger) = match tok.strip_suffix('^') {
                Some(d) => (d, true),
                None => (tok, false),
            };
            let mode: usize = digits
                .parse()
                .map_err(|_| QsimError::parse(lineno, format!("bad ladder token `{tok}`")))?;
            ops.push(Ladder { mode, dagger });
        }
        s.push(coeff, FermionOp::new(ops))?;
    }
    let s = sum.ok_or_else(|| QsimError::parse(0, "missing `modes <n>` line"))?;
    Ok((s.num_modes, s))
}

pub fn write_fermion_file(sum: &FermionSum) -> String {
    let mut s = format!("modes {}\n", sum.num_modes);
    for (c, op) in &sum.terms {
        let _ = write!(s, "{:?} {:?} :", c.re, c.im);
        for l in &op.0 {
            let _ = write!(s, " {}{}", l.mode, if l.dagger { "^" } else { "" });
        }
        s.push('\n');
    }
    s
}
