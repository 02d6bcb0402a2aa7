//! Dense reference implementations for small registers.
//!
//! Everything here materializes `2^n x 2^n` matrices and is meant as an
//! independent check on the state-vector kernels, the encodings, circuit
//! synthesis and the noise model.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QsimError, Result};
use crate::pauli::{PauliString, PauliSum};
use crate::statevec::{Circuit, Gate1Q, GateKind, GateOp, StateVector};

/// Largest register the dense oracle accepts.
pub const ORACLE_MAX_QUBITS: usize = 12;

pub type DenseMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_bound(n: usize) -> Result<()> {
    if n > ORACLE_MAX_QUBITS {
        return Err(QsimError::Capacity {
            num_qubits: n,
            required_bytes: 1u128 << (2 * n + 4),
            limit_bytes: 1u128 << (2 * ORACLE_MAX_QUBITS + 4),
        });
    }
    Ok(())
}

pub fn pauli_string_matrix(p: &PauliString) -> Result<DenseMatrix> {
    let n = p.num_qubits();
    check_bound(n)?;
    let dim = 1usize << n;
    let (x, z) = (p.x_mask() as usize, p.z_mask() as usize);
    let phase = crate::statevec::y_phase(p.y_count());
    let mut m = DenseMatrix::zeros(dim, dim);
    for col in 0..dim {
        let sign = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(col ^ x, col)] = phase * sign;
    }
    Ok(m)
}

pub fn pauli_sum_matrix(sum: &PauliSum) -> Result<DenseMatrix> {
    let n = sum.num_qubits();
    check_bound(n)?;
    let dim = 1usize << n;
    let mut m = DenseMatrix::zeros(dim, dim);
    for t in sum.terms() {
        m += pauli_string_matrix(&t.string)? * t.coeff;
    }
    Ok(m)
}

/// Dense embedding of a gate op on `n` qubits.
pub fn gate_op_matrix(op: &GateOp, n: usize) -> Result<DenseMatrix> {
    check_bound(n)?;
    let (gate, control, target) = match &op.kind {
        GateKind::OneQubit { gate, target } => (gate, None, *target),
        GateKind::Controlled {
            gate,
            control,
            target,
        } => (gate, Some(*control), *target),
    };
    embed(gate, control, target, n)
}

/// Dense `2^n` matrix of `gate` on `target`, optionally controlled by `control`.
pub fn embed(gate: &Gate1Q, control: Option<usize>, target: usize, n: usize) -> Result<DenseMatrix> {
    check_bound(n)?;
    if target >= n || control.is_some_and(|c| c >= n) {
        return Err(QsimError::QubitIndex {
            index: target.max(control.unwrap_or(0)),
            num_qubits: n,
        });
    }
    let dim = 1usize << n;
    let g = gate.matrix();
    let tbit = 1usize << target;
    let mut m = DenseMatrix::zeros(dim, dim);
    for col in 0..dim {
        let active = control.is_none_or(|c| col >> c & 1 == 1);
        if !active {
            m[(col, col)] = ONE;
            continue;
        }
        let b = (col >> target) & 1;
        let base = col & !tbit;
        m[(base, col)] = g[0][b];
        m[(base | tbit, col)] = g[1][b];
    }
    Ok(m)
}

/// Product of all gate matrices, times `e^{i global_phase}`.
pub fn circuit_matrix(circuit: &Circuit) -> Result<DenseMatrix> {
    let n = circuit.num_qubits();
    check_bound(n)?;
    let dim = 1usize << n;
    let mut u = DenseMatrix::identity(dim, dim);
    for op in circuit.ops() {
        u = gate_op_matrix(op, n)? * u;
    }
    Ok(u * Complex64::from_polar(1.0, circuit.global_phase))
}

/// Matrix exponential (Pade scaling and squaring).
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    a.clone().exp()
}

/// `exp(sum)` for a Pauli sum.
pub fn dense_exponential(sum: &PauliSum) -> Result<DenseMatrix> {
    Ok(expm(&pauli_sum_matrix(sum)?))
}

pub fn apply_to_state(m: &DenseMatrix, state: &StateVector) -> Result<StateVector> {
    let v = nalgebra::DVector::from_column_slice(state.amplitudes());
    if m.ncols() != v.len() {
        return Err(QsimError::SizeMismatch {
            expected: m.ncols().trailing_zeros() as usize,
            actual: state.num_qubits(),
        });
    }
    StateVector::from_amplitudes((m * v).as_slice().to_vec())
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest entry-wise difference.
pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm via the largest singular value.
pub fn operator_norm(a: &DenseMatrix) -> f64 {
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Mixed or pure state `rho` on up to [`ORACLE_MAX_QUBITS`] qubits.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    num_qubits: usize,
    rho: DenseMatrix,
}

impl DensityMatrix {
    pub fn from_basis(num_qubits: usize, index: u64) -> Result<Self> {
        check_bound(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut rho = DenseMatrix::zeros(dim, dim);
        rho[(index as usize, index as usize)] = ONE;
        Ok(Self { num_qubits, rho })
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        check_bound(state.num_qubits())?;
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok(Self {
            num_qubits: state.num_qubits(),
            rho: &v * v.adjoint(),
        })
    }

    pub fn from_matrix(num_qubits: usize, rho: DenseMatrix) -> Result<Self> {
        check_bound(num_qubits)?;
        let dim = 1usize << num_qubits;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(QsimError::SizeMismatch {
                expected: num_qubits,
                actual: rho.nrows().trailing_zeros() as usize,
            });
        }
        Ok(Self { num_qubits, rho })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.rho, &self.rho.adjoint())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.rho).first().copied().unwrap_or(0.0)
    }

    /// `rho -> U rho U^dagger`.
    pub fn apply_op(&mut self, op: &GateOp) -> Result<()> {
        let u = gate_op_matrix(op, self.num_qubits)?;
        self.rho = &u * &self.rho * u.adjoint();
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate1Q, control: Option<usize>, target: usize) -> Result<()> {
        let u = embed(gate, control, target, self.num_qubits)?;
        self.rho = &u * &self.rho * u.adjoint();
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        for op in circuit.ops() {
            self.apply_op(op)?;
        }
        Ok(())
    }

    /// `rho -> (1 - px - py - pz) rho + px X rho X + py Y rho Y + pz Z rho Z` on `qubit`.
    pub fn apply_pauli_channel(&mut self, qubit: usize, px: f64, py: f64, pz: f64) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(QsimError::QubitIndex {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        let valid = |p: f64| (0.0..1.0).contains(&p);
        if !(valid(px) && valid(py) && valid(pz) && px + py + pz < 1.0) {
            return Err(QsimError::InvalidScenario(format!(
                "channel probabilities ({px}, {py}, {pz}) are not a distribution"
            )));
        }
        let dim = 1usize << self.num_qubits;
        let b = 1usize << qubit;
        let keep = 1.0 - px - py - pz;
        let old = &self.rho;
        let mut out = DenseMatrix::from_element(dim, dim, ZERO);
        for j in 0..dim {
            for i in 0..dim {
                // Z rho Z and Y rho Y pick up (-1)^{i_q + j_q}.
                let sign = if ((i ^ j) & b) != 0 { -1.0 } else { 1.0 };
                let flipped = old[(i ^ b, j ^ b)];
                out[(i, j)] = old[(i, j)] * (keep + pz * sign) + flipped * (px + py * sign);
            }
        }
        self.rho = out;
        Ok(())
    }

    /// One noise step: the channel on every qubit independently.
    pub fn apply_noise_step(&mut self, px: f64, py: f64, pz: f64) -> Result<()> {
        for q in 0..self.num_qubits {
            self.apply_pauli_channel(q, px, py, pz)?;
        }
        Ok(())
    }

    /// `Tr(rho H)`; the imaginary part is dropped.
    pub fn expectation(&self, sum: &PauliSum) -> Result<f64> {
        if sum.num_qubits() != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.num_qubits,
                actual: sum.num_qubits(),
            });
        }
        let dim = 1usize << self.num_qubits;
        let mut acc = ZERO;
        for t in sum.terms() {
            let (x, z) = (t.string.x_mask() as usize, t.string.z_mask() as usize);
            let phase = crate::statevec::y_phase(t.string.y_count());
            // Tr(rho P) = sum_col P[col^x, col] rho[col, col^x]
            let mut s = ZERO;
            for col in 0..dim {
                let sign = if (col & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                s += self.rho[(col, col ^ x)] * sign;
            }
            acc += t.coeff * phase * s;
        }
        Ok(acc.re)
    }
}

/// Free-function forms matching the operation names used in the docs.
pub fn dm_apply_gate(rho: &mut DensityMatrix, op: &GateOp) -> Result<()> {
    rho.apply_op(op)
}

pub fn dm_apply_pauli_channel(rho: &mut DensityMatrix, qubit: usize, px: f64, py: f64, pz: f64) -> Result<()> {
    rho.apply_pauli_channel(qubit, px, py, pz)
}

pub fn dm_expectation(rho: &DensityMatrix, sum: &PauliSum) -> Result<f64> {
    rho.expectation(sum)
}
