//! Pauli strings in symplectic form and weighted sums of them.
//!
//! A string is stored as an x-mask and a z-mask over at most 64 qubits; a set
//! bit in both masks is a `Y`. Multiplication phases come from bit counts.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{QsimError, Result};

pub const MAX_QUBITS: usize = 64;
/// Coefficient magnitude treated as an algebraic zero by [`PauliSum::simplified`].
pub const ALGEBRAIC_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x: u64,
    z: u64,
}

fn mask_for(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        debug_assert!(num_qubits <= MAX_QUBITS);
        Self {
            num_qubits,
            x: 0,
            z: 0,
        }
    }

    pub fn from_masks(num_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(QsimError::Contract(format!(
                "Pauli strings support at most {MAX_QUBITS} qubits"
            )));
        }
        let outside = (x | z) & !mask_for(num_qubits);
        if outside != 0 {
            return Err(QsimError::QubitIndex {
                index: 63 - outside.leading_zeros() as usize,
                num_qubits,
            });
        }
        Ok(Self { num_qubits, x, z })
    }

    pub fn single(num_qubits: usize, q: usize, letter: Letter) -> Result<Self> {
        Self::from_letters(num_qubits, &[(q, letter)])
    }

    pub fn from_letters(num_qubits: usize, letters: &[(usize, Letter)]) -> Result<Self> {
        let mut s = Self::identity(num_qubits.min(MAX_QUBITS));
        for &(q, l) in letters {
            if q >= num_qubits || q >= MAX_QUBITS {
                return Err(QsimError::QubitIndex {
                    index: q,
                    num_qubits,
                });
            }
            s.set(q, l);
        }
        Ok(s)
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        let bit = 1u64 << q;
        let (x, z) = letter.bits();
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn letter(&self, q: usize) -> Letter {
        let bit = 1u64 << q;
        Letter::from_bits(self.x & bit != 0, self.z & bit != 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    /// Highest qubit carrying a non-identity letter.
    pub fn highest_qubit(&self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// Non-identity letters in ascending qubit order.
    pub fn letters(&self) -> impl Iterator<Item = (usize, Letter)> + '_ {
        (0..self.num_qubits)
            .filter(move |&q| self.support() >> q & 1 == 1)
            .map(move |q| (q, self.letter(q)))
    }

    /// Same letters on a register of `n` qubits.
    pub fn resized(self, n: usize) -> Self {
        debug_assert!(self.support() & !mask_for(n) == 0);
        Self {
            num_qubits: n,
            ..self
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Product `self * other` as `(i^k, string)`, returning `k mod 4`.
    pub fn mul_phase(&self, other: &PauliString) -> (u32, PauliString) {
        // With P(x, z) = i^{x.z} X^x Z^z per qubit:
        // P1 P2 = i^{x1 z1 + x2 z2 + 2 z1 x2 - x3 z3} P3.
        let x3 = self.x ^ other.x;
        let z3 = self.z ^ other.z;
        let e = (self.x & self.z).count_ones() as i64
            + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x3 & z3).count_ones() as i64;
        (
            e.rem_euclid(4) as u32,
            PauliString {
                num_qubits: self.num_qubits,
                x: x3,
                z: z3,
            },
        )
    }

    fn letter_code(&self, q: usize) -> u8 {
        self.letter(q) as u8
    }
}

/// Canonical term order: highest non-identity qubit first, then letters
/// compared from qubit 0 upward with `I < X < Y < Z`.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.num_qubits
            .cmp(&other.num_qubits)
            .then_with(|| self.highest_qubit().cmp(&other.highest_qubit()))
            .then_with(|| {
                let diff = (self.x ^ other.x) | (self.z ^ other.z);
                if diff == 0 {
                    Ordering::Equal
                } else {
                    let q = diff.trailing_zeros() as usize;
                    self.letter_code(q).cmp(&other.letter_code(q))
                }
            })
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    /// Sparse form, e.g. `X0 Z2 Y3`; the identity prints as `I`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let mut first = true;
        for (q, l) in self.letters() {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{l}{q}")?;
            first = false;
        }
        Ok(())
    }
}

fn parse_sparse_tokens<'a>(
    toks: impl Iterator<Item = &'a str>,
) -> std::result::Result<Vec<(usize, Letter)>, String> {
    let mut out = Vec::new();
    for tok in toks {
        let mut chars = tok.chars();
        let letter = chars
            .next()
            .and_then(Letter::from_char)
            .ok_or_else(|| format!("bad Pauli token `{tok}`"))?;
        let q: usize = chars
            .as_str()
            .parse()
            .map_err(|_| format!("bad qubit in Pauli token `{tok}`"))?;
        if letter != Letter::I {
            if out.iter().any(|&(p, _)| p == q) {
                return Err(format!("qubit {q} repeated in Pauli string"));
            }
            out.push((q, letter));
        }
    }
    Ok(out)
}

impl FromStr for PauliString {
    type Err = QsimError;

    /// Parses the sparse form; the register size is one past the highest index.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(PauliString::identity(1));
        }
        let letters = parse_sparse_tokens(s.split_whitespace()).map_err(|m| QsimError::parse(1, m))?;
        let n = letters.iter().map(|&(q, _)| q + 1).max().unwrap_or(1);
        PauliString::from_letters(n, &letters)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: Complex64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: Complex64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        if self.string.num_qubits != other.string.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.string.num_qubits,
                actual: other.string.num_qubits,
            });
        }
        let (k, string) = self.string.mul_phase(&other.string);
        Ok(PauliTerm {
            coeff: self.coeff * other.coeff * crate::statevec::y_phase(k),
            string,
        })
    }
}

/// Free-function form of [`PauliTerm::multiply`].
pub fn pauli_multiply(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    a.multiply(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(num_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        let mut s = Self::new(num_qubits);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn identity(num_qubits: usize, coeff: Complex64) -> Self {
        Self {
            num_qubits,
            terms: vec![PauliTerm::new(coeff, PauliString::identity(num_qubits))],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: PauliTerm) -> Result<()> {
        if term.string.num_qubits != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.num_qubits,
                actual: term.string.num_qubits,
            });
        }
        self.terms.push(term);
        Ok(())
    }

    fn check_size(&self, other: &PauliSum) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        Ok(())
    }

    /// Concatenation, without simplification.
    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_size(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(PauliSum {
            num_qubits: self.num_qubits,
            terms,
        })
    }

    /// Distributed product, simplified at the algebraic-zero cutoff.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_size(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(a.multiply(b)?);
            }
        }
        Ok(PauliSum {
            num_qubits: self.num_qubits,
            terms,
        }
        .simplified())
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.coeff * factor, t.string))
                .collect(),
        }
    }

    /// Conjugate transpose; Pauli strings are Hermitian so only coefficients change.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.coeff.conj(), t.string))
                .collect(),
        }
    }

    /// Merges duplicate strings, drops terms with `|coeff| <= cutoff`, and sorts
    /// into canonical order.
    pub fn simplify(&self, cutoff: f64) -> PauliSum {
        let mut merged: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.string).or_insert(Complex64::new(0.0, 0.0)) += t.coeff;
        }
        PauliSum {
            num_qubits: self.num_qubits,
            terms: merged
                .into_iter()
                .filter(|(_, c)| c.norm() > cutoff)
                .map(|(s, c)| PauliTerm::new(c, s))
                .collect(),
        }
    }

    pub fn simplified(&self) -> PauliSum {
        self.simplify(ALGEBRAIC_ZERO)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0).terms.iter().all(|t| t.coeff.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.simplify(0.0).terms.iter().all(|t| t.coeff.re.abs() <= tol)
    }

    /// Largest coefficient difference against `other` after simplification.
    pub fn distance(&self, other: &PauliSum) -> Result<f64> {
        let diff = self.add(&other.scale(Complex64::new(-1.0, 0.0)))?.simplify(0.0);
        Ok(diff.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max))
    }
}

/// Reads a Pauli-sum file: a `qubits <n>` line, then
/// `<re> <im> : <L><q> ...` lines with `#` comments.
pub fn parse_pauli_file(text: &str) -> Result<(usize, PauliSum)> {
    let mut n: Option<usize> = None;
    let mut sum = PauliSum::new(0);
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(num_qubits) = n else {
            let mut toks = line.split_whitespace();
            match (toks.next(), toks.next(), toks.next()) {
                (Some("qubits"), Some(v), None) => {
                    let v: usize = v
                        .parse()
                        .map_err(|_| QsimError::parse(lineno, format!("bad qubit count `{v}`")))?;
                    if v == 0 || v > MAX_QUBITS {
                        return Err(QsimError::parse(lineno, format!("qubit count {v} out of range")));
                    }
                    n = Some(v);
                    sum = PauliSum::new(v);
                    continue;
                }
                _ => return Err(QsimError::parse(lineno, "expected `qubits <n>`")),
            }
        };
        let (coeff, tail) = parse_coeff_line(line, lineno)?;
        let letters =
            parse_sparse_tokens(tail.split_whitespace()).map_err(|m| QsimError::parse(lineno, m))?;
        for &(q, _) in &letters {
            if q >= num_qubits {
                return Err(QsimError::QubitIndex {
                    index: q,
                    num_qubits,
                });
            }
        }
        let string = PauliString::from_letters(num_qubits, &letters)?;
        sum.push(PauliTerm::new(coeff, string))?;
    }
    let n = n.ok_or_else(|| QsimError::parse(0, "missing `qubits <n>` line"))?;
    Ok((n, sum))
}

pub fn write_pauli_file(sum: &PauliSum) -> String {
    let mut s = format!("qubits {}\n", sum.num_qubits());
    for t in sum.terms() {
        let body = if t.string.is_identity() {
            String::new()
        } else {
            format!(" {}", t.string)
        };
        let _ = writeln!(s, "{:?} {:?} :{}", t.coeff.re, t.coeff.im, body);
    }
    s
}

/// Splits `<re> <im> : <tail>` into the coefficient and the tail.
pub(crate) fn parse_coeff_line(line: &str, lineno: usize) -> Result<(Complex64, &str)> {
    let (head, tail) = line
        .split_once(':')
        .ok_or_else(|| QsimError::parse(lineno, "expected `<re> <im> : ...`"))?;
    let nums: Vec<&str> = head.split_whitespace().collect();
    if nums.len() != 2 {
        return Err(QsimError::parse(lineno, "expected two coefficient fields before `:`"));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| QsimError::parse(lineno, format!("bad number `{s}`")))
    };
    Ok((Complex64::new(num(nums[0])?, num(nums[1])?), tail))
}
