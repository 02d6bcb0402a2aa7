//! Exact two-electron ground energy of the bundled toy Hamiltonian next to the
//! Hartree-Fock, exact UCC and Trotterized UCC energies.
//!
//! cargo run --release --example ground_state

use qsim::experiments::{exact_ucc_energy, pristine_state};
use qsim::fermion::parse_fermion_file;
use qsim::oracle::{hermitian_eigenvalues, pauli_sum_matrix};
use qsim::ucc::{build_ucc_circuit, hartree_fock_reference, parse_amplitudes, TrotterPlan, DEFAULT_AMPLITUDE_CUTOFF};
use qsim::{fermion_to_pauli, init_basis_state, Mapping};

fn main() -> qsim::Result<()> {
    let (n, f) = parse_fermion_file(include_str!("../data/toy4.ferm"))?;
    let amps = parse_amplitudes(include_str!("../data/toy4.amp"))?;
    let h = fermion_to_pauli(&f, Mapping::JordanWigner, n)?;
    let m = pauli_sum_matrix(&h)?;
    let sector: Vec<usize> =
        (0..1usize << n).filter(|i| i.count_ones() as usize == amps.n_electrons).collect();
    let block = m.select_rows(&sector).select_columns(&sector);
    let ground = hermitian_eigenvalues(&block).into_iter().fold(f64::INFINITY, f64::min);
    println!("ground        {ground:.10}");
    for mapping in [Mapping::JordanWigner, Mapping::BravyiKitaev] {
        let h = fermion_to_pauli(&f, mapping, n)?;
        let reference = hartree_fock_reference(amps.n_electrons, n, mapping)?;
        let hf = init_basis_state(n, reference)?.expectation_sum(&h)?;
        let exact = exact_ucc_energy(&amps, mapping, DEFAULT_AMPLITUDE_CUTOFF, &h)?;
        println!("{mapping}  hf      {hf:.10}");
        println!("{mapping}  ucc     {exact:.10}");
        for eta in [1, 2, 4] {
            let u = build_ucc_circuit(&amps, mapping, &TrotterPlan::new(eta)?, DEFAULT_AMPLITUDE_CUTOFF)?;
            let e = pristine_state(&u.circuit, u.reference)?.expectation_sum(&h)?;
            println!("{mapping}  eta={eta}   {e:.10}  ({} gates, error {:+.3e})", u.circuit.gate_count(), e - exact);
        }
    }
    Ok(())
}
