//! Dense state-vector storage and gate kernels.
//!
//! Amplitude `i` holds the coefficient of the basis state whose bit `k` is
//! the value of qubit `k`. A single-qubit gate on qubit `k` mixes the pairs of
//! amplitudes whose indices differ only in bit `k`; their stride is `2^k`.

mod circuit;
mod fusion;
mod gate;

pub use circuit::{parse_circuit, write_circuit, Circuit, CircuitFile, GateKind, GateOp};
pub use fusion::{fuse_cache_blocks, FusedSchedule, GateGroup, DEFAULT_BLOCK_QUBITS};
pub use gate::{Gate1Q, GateName};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QsimError, Result};
use crate::pauli::{PauliString, PauliSum};

/// Default allocation bound: 2^36 bytes, i.e. 32 qubits.
pub const DEFAULT_MAX_BYTES: u128 = 1 << 36;

/// Slices shorter than this run on the calling thread.
const PAR_MIN_LEN: usize = 1 << 14;
/// Fixed reduction granularity, so sums do not depend on the worker count.
const REDUCE_CHUNK: usize = 1 << 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bytes needed for `n` qubits at 16 bytes per amplitude.
pub fn required_bytes(num_qubits: usize) -> u128 {
    1u128 << (num_qubits + 4)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Computational basis state `|occupied>` on `n` qubits.
pub fn init_basis_state(num_qubits: usize, occupied: u64) -> Result<StateVector> {
    StateVector::basis_with_limit(num_qubits, occupied, DEFAULT_MAX_BYTES)
}

impl StateVector {
    pub fn basis_with_limit(num_qubits: usize, occupied: u64, limit_bytes: u128) -> Result<Self> {
        if num_qubits == 0 {
            return Err(QsimError::Contract("a register needs at least one qubit".into()));
        }
        let required = if num_qubits >= 120 {
            u128::MAX
        } else {
            required_bytes(num_qubits)
        };
        let capacity_err = || QsimError::Capacity {
            num_qubits,
            required_bytes: required,
            limit_bytes,
        };
        if required > limit_bytes || num_qubits >= usize::BITS as usize - 4 {
            return Err(capacity_err());
        }
        let len = 1usize << num_qubits;
        if num_qubits < 64 && occupied >= (len as u64) {
            return Err(QsimError::Contract(format!(
                "basis index {occupied} does not fit in {num_qubits} qubits"
            )));
        }
        let mut amps = Vec::new();
        amps.try_reserve_exact(len).map_err(|_| capacity_err())?;
        amps.resize(len, ZERO);
        amps[occupied as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Wraps an amplitude vector whose length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::Contract(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
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

    pub fn apply_1q(&mut self, gate: &Gate1Q, k: usize) -> Result<()> {
        self.check_qubit(k)?;
        apply_pairs_par(&mut self.amps, gate, k, 0);
        Ok(())
    }

    pub fn apply_controlled(&mut self, gate: &Gate1Q, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QsimError::InvalidGate(format!(
                "control and target are both qubit {control}"
            )));
        }
        apply_pairs_par(&mut self.amps, gate, target, 1usize << control);
        Ok(())
    }

    pub fn apply_op(&mut self, op: &GateOp) -> Result<()> {
        match &op.kind {
            GateKind::OneQubit { gate, target } => self.apply_1q(gate, *target),
            GateKind::Controlled {
                gate,
                control,
                target,
            } => self.apply_controlled(gate, *control, *target),
        }
    }

    /// Applies every gate of `circuit` in order, one pass per gate.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        self.check_size(circuit.num_qubits())?;
        for op in circuit.ops() {
            self.apply_op(op)?;
        }
        Ok(())
    }

    /// Executes a cache-blocked schedule: each fused group runs block by block.
    pub fn apply_schedule(&mut self, schedule: &FusedSchedule) -> Result<()> {
        self.check_size(schedule.num_qubits)?;
        let block_qubits = schedule.block_qubits.min(self.num_qubits);
        let block = 1usize << block_qubits;
        for group in &schedule.groups {
            match group {
                GateGroup::Single(op) => self.apply_op(op)?,
                GateGroup::Fused(ops) => {
                    let run = |(b, chunk): (usize, &mut [Complex64])| {
                        for op in ops {
                            let cmask = op.control().map_or(0, |c| 1usize << c);
                            apply_pairs_seq(chunk, op.gate(), op.target(), cmask, b * block);
                        }
                    };
                    if self.amps.len() >= PAR_MIN_LEN && self.amps.len() > block {
                        self.amps.par_chunks_mut(block).enumerate().for_each(run);
                    } else {
                        self.amps.chunks_mut(block).enumerate().for_each(run);
                    }
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if n != self.num_qubits {
            return Err(QsimError::SizeMismatch {
                expected: self.num_qubits,
                actual: n,
            });
        }
        Ok(())
    }

    /// `<psi|psi>`, summed in fixed-size chunks in index order.
    pub fn norm_sqr(&self) -> f64 {
        chunked_sum(&self.amps, |_, a| a.norm_sqr())
    }

    /// `<psi|P|psi>` for a single Pauli string.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        self.check_size(p.num_qubits())?;
        let value = pauli_overlap(&self.amps, p.x_mask() as usize, p.z_mask() as usize, 0)
            * y_phase(p.y_count());
        debug_assert!(
            value.im.abs() <= 1e-10 * self.norm_sqr().max(1.0),
            "imaginary expectation {value}"
        );
        Ok(value.re)
    }

    /// `<psi|O_gamma|psi>` for every term of `sum`, in term order.
    pub fn expectation_terms(&self, sum: &PauliSum) -> Result<Vec<f64>> {
        self.check_size(sum.num_qubits())?;
        sum.terms()
            .iter()
            .map(|t| self.expectation_pauli(&t.string))
            .collect()
    }

    /// `sum_gamma Re(w_gamma) <O_gamma>`; imaginary coefficient parts are ignored.
    pub fn expectation_sum(&self, sum: &PauliSum) -> Result<f64> {
        let values = self.expectation_terms(sum)?;
        Ok(sum
            .terms()
            .iter()
            .zip(values)
            .map(|(t, v)| t.coeff.re * v)
            .sum())
    }

    /// `sum_i f(i) |psi_i|^2` for an observable diagonal in the computational basis.
    pub fn expectation_diagonal(&self, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        chunked_sum(&self.amps, |i, a| f(i) * a.norm_sqr())
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.check_size(other.num_qubits)?;
        let a = &self.amps;
        let b = &other.amps;
        let partials: Vec<Complex64> = (0..a.len().div_ceil(REDUCE_CHUNK))
            .map(|c| {
                let lo = c * REDUCE_CHUNK;
                let hi = (lo + REDUCE_CHUNK).min(a.len());
                (lo..hi).map(|i| a[i].conj() * b[i]).sum()
            })
            .collect();
        Ok(partials.into_iter().sum())
    }
}

/// `i^{n_y}`.
pub(crate) fn y_phase(n_y: u32) -> Complex64 {
    match n_y % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `sum_i conj(psi[i ^ x]) (-1)^{popcount((offset + i) & z)} psi[i]` without the
/// `i^{n_y}` factor. `x` must only flip bits inside the slice.
pub(crate) fn pauli_overlap(amps: &[Complex64], x: usize, z: usize, offset: usize) -> Complex64 {
    let chunk_sum = |c: usize| -> Complex64 {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(amps.len());
        let mut acc = ZERO;
        for i in lo..hi {
            let term = amps[i ^ x].conj() * amps[i];
            if ((offset + i) & z).count_ones() & 1 == 1 {
                acc -= term;
            } else {
                acc += term;
            }
        }
        acc
    };
    let nchunks = amps.len().div_ceil(REDUCE_CHUNK);
    let partials: Vec<Complex64> = if amps.len() >= PAR_MIN_LEN {
        (0..nchunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..nchunks).map(chunk_sum).collect()
    };
    partials.into_iter().fold(ZERO, |a, b| a + b)
}

fn chunked_sum(amps: &[Complex64], f: impl Fn(usize, &Complex64) -> f64 + Sync) -> f64 {
    let chunk = |(c, s): (usize, &[Complex64])| -> f64 {
        s.iter()
            .enumerate()
            .map(|(i, a)| f(c * REDUCE_CHUNK + i, a))
            .sum()
    };
    let partials: Vec<f64> = if amps.len() >= PAR_MIN_LEN {
        amps.par_chunks(REDUCE_CHUNK).enumerate().map(chunk).collect()
    } else {
        amps.chunks(REDUCE_CHUNK).enumerate().map(chunk).collect()
    };
    partials.into_iter().sum()
}

/// Applies `gate` to bit `k` of every pair in `amps` whose global index
/// (`offset + local`) has all bits of `cmask` set.
pub(crate) fn apply_pairs_seq(
    amps: &mut [Complex64],
    gate: &Gate1Q,
    k: usize,
    cmask: usize,
    offset: usize,
) {
    let stride = 1usize << k;
    for (b, block) in amps.chunks_mut(stride << 1).enumerate() {
        let base = offset + b * (stride << 1);
        let (lo, hi) = block.split_at_mut(stride);
        update_halves(lo, hi, gate, cmask, base);
    }
}

#[inline]
pub(crate) fn update_halves(
    lo: &mut [Complex64],
    hi: &mut [Complex64],
    gate: &Gate1Q,
    cmask: usize,
    base: usize,
) {
    if cmask == 0 {
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (na, nb) = gate.apply_pair(*a, *b);
            *a = na;
            *b = nb;
        }
    } else {
        for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if (base + j) & cmask == cmask {
                let (na, nb) = gate.apply_pair(*a, *b);
                *a = na;
                *b = nb;
            }
        }
    }
}

/// Parallel form of [`apply_pairs_seq`]; every amplitude receives the same
/// arithmetic regardless of how pairs are split across workers.
pub(crate) fn apply_pairs_par(amps: &mut [Complex64], gate: &Gate1Q, k: usize, cmask: usize) {
    let len = amps.len();
    if len < PAR_MIN_LEN {
        apply_pairs_seq(amps, gate, k, cmask, 0);
        return;
    }
    let stride = 1usize << k;
    let block = stride << 1;
    if len / block >= 64 {
        amps.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
            let (lo, hi) = chunk.split_at_mut(stride);
            update_halves(lo, hi, gate, cmask, b * block);
        });
    } else {
        let piece = (stride / 64).max(REDUCE_CHUNK).min(stride);
        for (b, chunk) in amps.chunks_mut(block).enumerate() {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.par_chunks_mut(piece)
                .zip(hi.par_chunks_mut(piece))
                .enumerate()
                .for_each(|(p, (l, h))| update_halves(l, h, gate, cmask, b * block + p * piece));
        }
    }
}
