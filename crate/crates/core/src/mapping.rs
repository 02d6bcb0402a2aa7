//! Fermion-to-qubit encodings.
//!
//! Jordan-Wigner stores each occupation on its own qubit and carries parity in
//! a `Z` string. Bravyi-Kitaev stores partial occupation sums on a Fenwick
//! tree: qubit `j` holds the parity of modes `j + 1 - lowbit(j + 1) ..= j`,
//! which makes every ladder operator act on `O(log n)` qubits.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::fermion::{FermionSum, Ladder};
use crate::pauli::{PauliString, PauliSum, PauliTerm, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mapping {
    JordanWigner,
    BravyiKitaev,
}

impl FromStr for Mapping {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jw" | "jordan-wigner" => Ok(Mapping::JordanWigner),
            "bk" | "bravyi-kitaev" => Ok(Mapping::BravyiKitaev),
            other => Err(QsimError::Contract(format!("unknown mapping `{other}`"))),
        }
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mapping::JordanWigner => "jw",
            Mapping::BravyiKitaev => "bk",
        })
    }
}

fn check_mode(p: usize, n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(QsimError::Contract(format!("at most {MAX_QUBITS} modes are supported")));
    }
    if p >= n {
        return Err(QsimError::ModeIndex {
            index: p,
            num_modes: n,
        });
    }
    Ok(())
}

fn half(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn jw_ladder(p: usize, n: usize, dagger: bool) -> Result<PauliSum> {
    check_mode(p, n)?;
    let z_below = if p == 0 { 0 } else { (1u64 << p) - 1 };
    let bit = 1u64 << p;
    let x_part = PauliString::from_masks(n, bit, z_below)?;
    let y_part = PauliString::from_masks(n, bit, z_below | bit)?;
    // sigma^+ = (X - iY)/2 raises |0> to |1>.
    let sign = if dagger { -1.0 } else { 1.0 };
    PauliSum::from_terms(
        n,
        vec![
            PauliTerm::new(half(0.5, 0.0), x_part),
            PauliTerm::new(half(0.0, 0.5 * sign), y_part),
        ],
    )
}

/// `a_p^dagger = (prod_{m<p} Z_m) (X_p - i Y_p)/2`.
pub fn jw_creation(p: usize, n: usize) -> Result<PauliSum> {
    jw_ladder(p, n, true)
}

/// `a_p = (prod_{m<p} Z_m) (X_p + i Y_p)/2`.
pub fn jw_annihilation(p: usize, n: usize) -> Result<PauliSum> {
    jw_ladder(p, n, false)
}

fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

/// Qubits other than `j` whose stored sums include mode `j`.
pub fn bk_update_set(j: usize, n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = j + 1;
    loop {
        i += lowbit(i);
        if i > n {
            break;
        }
        out.push(i - 1);
    }
    out
}

/// Qubits whose stored values combine to the parity of modes `0..j`.
pub fn bk_parity_set(j: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = j;
    while i > 0 {
        out.push(i - 1);
        i -= lowbit(i);
    }
    out.reverse();
    out
}

/// Qubits whose values, together with qubit `j`, give the occupation of mode `j`.
pub fn bk_flip_set(j: usize) -> Vec<usize> {
    let lb = lowbit(j + 1);
    let mut out = Vec::new();
    let mut t = 1;
    while t < lb {
        out.push(j - t);
        t <<= 1;
    }
    out.reverse();
    out
}

fn mask_of(qs: &[usize]) -> u64 {
    qs.iter().fold(0, |m, &q| m | (1u64 << q))
}

/// Bravyi-Kitaev image of `a_p` or `a_p^dagger`:
/// `a_p^dagger = (X_U X_p Z_P - i X_U Y_p Z_R) / 2` with `R = P \ F`.
pub fn bk_transform_mode(p: usize, dagger: bool, n: usize) -> Result<PauliSum> {
    check_mode(p, n)?;
    let update = mask_of(&bk_update_set(p, n));
    let parity = mask_of(&bk_parity_set(p));
    let flip = mask_of(&bk_flip_set(p));
    let remainder = parity & !flip;
    let bit = 1u64 << p;
    let x_part = PauliString::from_masks(n, update | bit, parity)?;
    let y_part = PauliString::from_masks(n, update | bit, remainder | bit)?;
    let sign = if dagger { -1.0 } else { 1.0 };
    PauliSum::from_terms(
        n,
        vec![
            PauliTerm::new(half(0.5, 0.0), x_part),
            PauliTerm::new(half(0.0, 0.5 * sign), y_part),
        ],
    )
}

pub fn ladder_image(l: Ladder, mapping: Mapping, n: usize) -> Result<PauliSum> {
    match mapping {
        Mapping::JordanWigner => jw_ladder(l.mode, n, l.dagger),
        Mapping::BravyiKitaev => bk_transform_mode(l.mode, l.dagger, n),
    }
}

/// Encodes an occupation bitmask (bit `i` = mode `i` occupied) as qubit values.
pub fn encode_occupation(occupation: u64, mapping: Mapping, n: usize) -> u64 {
    match mapping {
        Mapping::JordanWigner => occupation,
        Mapping::BravyiKitaev => (0..n).fold(0u64, |acc, j| {
            let lo = j + 1 - lowbit(j + 1);
            let span = ((1u64 << (j - lo + 1)) - 1) << lo;
            let parity = (occupation & span).count_ones() & 1;
            acc | ((parity as u64) << j)
        }),
    }
}

/// Qubit image of a fermionic sum, simplified. Anti-Hermitian input must give
/// purely imaginary coefficients.
pub fn fermion_to_pauli(f: &FermionSum, mapping: Mapping, n: usize) -> Result<PauliSum> {
    if f.num_modes() > n {
        return Err(QsimError::Contract(format!(
            "operator declares {} modes but the register has {n}",
            f.num_modes()
        )));
    }
    let images: Vec<PauliSum> = (0..n)
        .flat_map(|p| [(p, true), (p, false)])
        .map(|(mode, dagger)| ladder_image(Ladder { mode, dagger }, mapping, n))
        .collect::<Result<_>>()?;
    let image_of = |l: &Ladder| -> Result<&PauliSum> {
        check_mode(l.mode, n)?;
        Ok(&images[2 * l.mode + usize::from(!l.dagger)])
    };
    let mut acc = PauliSum::new(n);
    for (coeff, op) in f.terms() {
        if coeff.norm() == 0.0 {
            continue;
        }
        let mut product = PauliSum::identity(n, *coeff);
        for l in &op.0 {
            product = product.mul(image_of(l)?)?;
        }
        acc = acc.add(&product)?;
    }
    let out = acc.simplified();
    if f.is_syntactically_anti_hermitian(1e-12) && !out.is_anti_hermitian(1e-12) {
        return Err(QsimError::Contract(
            "anti-Hermitian operator mapped to non-imaginary coefficients".into(),
        ));
    }
    Ok(out)
}

/// `sum_i a_i^dagger a_i` under `mapping`. The Jordan-Wigner form is
/// `(n/2) I - (1/2) sum_i Z_i`.
pub fn particle_number_observable(n: usize, mapping: Mapping) -> Result<PauliSum> {
    fermion_to_pauli(&FermionSum::number_operator(n), mapping, n)
}

/// Number of non-identity letters allowed for a Bravyi-Kitaev ladder image.
pub fn bk_locality_bound(n: usize) -> u32 {
    let log = usize::BITS - (n.max(1) - 1).leading_zeros();
    3 * log + 1
}
