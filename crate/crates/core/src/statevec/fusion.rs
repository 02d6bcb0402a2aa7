use super::circuit::{Circuit, GateOp};

/// Default block of 2^21 amplitudes (32 MiB of state).
pub const DEFAULT_BLOCK_QUBITS: usize = 21;

#[derive(Clone, Debug, PartialEq)]
pub enum GateGroup {
    /// Consecutive gates on qubits below the block size, applied block by block.
    Fused(Vec<GateOp>),
    /// A gate touching a qubit at or above the block size.
    Single(GateOp),
}

/// Execution schedule for a circuit; the gate sequence and its time steps are
/// unchanged, only the traversal order over memory differs.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedSchedule {
    pub num_qubits: usize,
    pub block_qubits: usize,
    pub groups: Vec<GateGroup>,
}

impl FusedSchedule {
    /// Flattens the schedule back into program order.
    pub fn ops(&self) -> impl Iterator<Item = &GateOp> {
        self.groups.iter().flat_map(|g| match g {
            GateGroup::Fused(ops) => ops.iter(),
            GateGroup::Single(op) => std::slice::from_ref(op).iter(),
        })
    }
}

/// Groups runs of consecutive gates whose qubits are all `< block_qubits`.
/// `block_qubits` is clamped to the register size.
pub fn fuse_cache_blocks(circuit: &Circuit, block_qubits: usize) -> FusedSchedule {
    let block_qubits = block_qubits.min(circuit.num_qubits());
    let mut groups = Vec::new();
    let mut current: Vec<GateOp> = Vec::new();
    for op in circuit.ops() {
        if op.max_qubit() < block_qubits {
            current.push(op.clone());
        } else {
            if !current.is_empty() {
                groups.push(GateGroup::Fused(std::mem::take(&mut current)));
            }
            groups.push(GateGroup::Single(op.clone()));
        }
    }
    if !current.is_empty() {
        groups.push(GateGroup::Fused(current));
    }
    FusedSchedule {
        num_qubits: circuit.num_qubits(),
        block_qubits,
        groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::Gate1Q;

    #[test]
    fn low_gates_fuse_into_one_group() {
        let mut c = Circuit::new(3);
        for q in 0..3 {
            c.push_1q(Gate1Q::h(), q).unwrap();
        }
        let s = fuse_cache_blocks(&c, 3);
        assert_eq!(s.groups.len(), 1);
        assert!(matches!(&s.groups[0], GateGroup::Fused(ops) if ops.len() == 3));
    }

    #[test]
    fn high_gate_splits_groups() {
        let n = 5;
        let mut c = Circuit::new(n);
        c.push_1q(Gate1Q::h(), 0).unwrap();
        c.push_cnot(0, n - 1).unwrap();
        c.push_1q(Gate1Q::h(), 1).unwrap();
        let s = fuse_cache_blocks(&c, 3);
        assert_eq!(s.groups.len(), 3);
        assert!(matches!(&s.groups[1], GateGroup::Single(_)));
        let steps: Vec<u64> = s.ops().map(|o| o.time_step).collect();
        assert_eq!(steps, vec![0, 1, 2]);
    }

    #[test]
    fn clamps_block_size() {
        let mut c = Circuit::new(2);
        c.push_cnot(0, 1).unwrap();
        let s = fuse_cache_blocks(&c, DEFAULT_BLOCK_QUBITS);
        assert_eq!(s.block_qubits, 2);
        assert_eq!(s.groups.len(), 1);
    }
}
