use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qsim::dist::{run_inproc, Partition};
use qsim::experiments::{estimator_report, pristine_state, pristine_variance, sweep_csv, noise_sweep};
use qsim::mapping::{ladder_image, particle_number_observable};
use qsim::noise::{
    run_trajectories, sample_noise_gate, NoiseModel, NoiseMode, NoiseScenario, ScenarioKind, TrajectoryConfig,
    TrajectoryRng,
};
use qsim::oracle::{
    apply_to_state, circuit_matrix, dense_exponential, embed, max_abs_diff, operator_norm, DensityMatrix,
};
use qsim::statevec::{fuse_cache_blocks, write_circuit};
use qsim::ucc::{
    append_exponential, build_ucc_circuit, synthesize_exponential, trotterize, ClusterAmplitudes, DoubleExcitation,
    SingleExcitation, TrotterPlan,
};
use qsim::{
    fermion_to_pauli, init_basis_state, Circuit, FermionOp, FermionSum, Gate1Q, Ladder, Mapping, PauliString,
    PauliSum, PauliTerm, StateVector,
};

#[derive(Clone, Debug)]
struct GateSpec {
    target: usize,
    control: Option<usize>,
    angles: (f64, f64, f64, f64),
}

fn gate_of(a: (f64, f64, f64, f64)) -> Gate1Q {
    let g = Gate1Q::rz(a.0).mul(&Gate1Q::ry(a.1)).mul(&Gate1Q::rz(a.2)).matrix();
    let p = Complex64::from_polar(1.0, a.3);
    Gate1Q::new(p * g[0][0], p * g[0][1], p * g[1][0], p * g[1][1]).unwrap()
}

fn arb_gate(n: usize) -> impl Strategy<Value = GateSpec> {
    let angle = -PI..PI;
    (0..n, proptest::option::weighted(0.4, 0..n), (angle.clone(), angle.clone(), angle.clone(), angle)).prop_map(
        |(target, control, angles)| GateSpec {
            target,
            control: control.filter(|&c| c != target),
            angles,
        },
    )
}

fn build(n: usize, specs: &[GateSpec]) -> Circuit {
    let mut c = Circuit::new(n);
    for s in specs {
        match s.control {
            Some(ctl) => c.push_controlled(gate_of(s.angles), ctl, s.target).unwrap(),
            None => c.push_1q(gate_of(s.angles), s.target).unwrap(),
        }
    }
    c
}

fn arb_circuit(n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    proptest::collection::vec(arb_gate(n), 1..max_len).prop_map(move |specs| build(n, &specs))
}

fn arb_sized_circuit(max_n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_n).prop_flat_map(move |n| arb_circuit(n, max_len))
}

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("zero vector", |v| {
        let norm = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| {
            StateVector::from_amplitudes(v.iter().map(|(a, b)| Complex64::new(a / norm, b / norm)).collect()).unwrap()
        })
    })
}

fn arb_pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (0..1u64 << n, 0..1u64 << n)
        .prop_filter("identity", |(x, z)| x | z != 0)
        .prop_map(move |(x, z)| PauliString::from_masks(n, x, z).unwrap())
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn arb_amplitudes() -> impl Strategy<Value = (ClusterAmplitudes, Mapping)> {
    let mapping = prop_oneof![Just(Mapping::JordanWigner), Just(Mapping::BravyiKitaev)];
    (
        proptest::collection::vec(-0.3f64..0.3, 4),
        proptest::collection::vec(-0.3f64..0.3, 2),
        mapping,
    )
        .prop_map(|(s, d, mapping)| {
            let mut a = ClusterAmplitudes::new(6, 2);
            for (k, (i, p)) in [(0, 2), (1, 3), (0, 4), (1, 5)].into_iter().enumerate() {
                a.singles.push(SingleExcitation { i, p, xi: s[k] });
            }
            a.doubles.push(DoubleExcitation { i1: 0, i2: 1, p1: 2, p2: 3, xi: d[0] });
            a.doubles.push(DoubleExcitation { i1: 0, i2: 1, p1: 4, p2: 5, xi: d[1] });
            (a, mapping)
        })
}

fn arb_fermion(n: usize) -> impl Strategy<Value = FermionSum> {
    let ladder = (0..n, any::<bool>()).prop_map(|(m, c)| if c { Ladder::create(m) } else { Ladder::annihilate(m) });
    let term = (proptest::collection::vec(ladder, 1..4), -1.0f64..1.0, -1.0f64..1.0);
    proptest::collection::vec(term, 1..5).prop_map(move |terms| {
        let mut f = FermionSum::new(n);
        for (ops, re, im) in terms {
            f.push(Complex64::new(re, im), FermionOp::new(ops)).unwrap();
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn unitary_sequences_preserve_norm(c in arb_sized_circuit(8, 120)) {
        let mut s = init_basis_state(c.num_qubits(), 0).unwrap();
        s.apply_circuit(&c).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gates_match_dense_oracle((c, s) in (1..=6usize).prop_flat_map(|n| (arb_circuit(n, 12), arb_state(n)))) {
        let mut state = s.clone();
        for op in c.ops() {
            let m = embed(op.gate(), op.control(), op.target(), c.num_qubits()).unwrap();
            let want = apply_to_state(&m, &state).unwrap();
            state.apply_op(op).unwrap();
            prop_assert!(max_diff(&state, &want) <= 1e-12);
        }
    }

    #[test]
    fn single_qubit_gate_is_linear(
        (k, a, b, g, alpha, gamma) in (1..=5usize).prop_flat_map(|n| (
            0..n, arb_state(n), arb_state(n), arb_gate(n),
            (-1.0f64..1.0, -1.0f64..1.0), (-1.0f64..1.0, -1.0f64..1.0),
        ))
    ) {
        let alpha = Complex64::new(alpha.0, alpha.1);
        let gamma = Complex64::new(gamma.0, gamma.1);
        let gate = gate_of(g.angles);
        let mix = |x: &StateVector, y: &StateVector| -> Vec<Complex64> {
            x.amplitudes().iter().zip(y.amplitudes()).map(|(p, q)| alpha * p + gamma * q).collect()
        };
        let mut combined = StateVector::from_amplitudes(mix(&a, &b)).unwrap();
        combined.apply_1q(&gate, k).unwrap();
        let (mut ga, mut gb) = (a.clone(), b.clone());
        ga.apply_1q(&gate, k).unwrap();
        gb.apply_1q(&gate, k).unwrap();
        let expected = mix(&ga, &gb);
        let d = combined.amplitudes().iter().zip(&expected).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn fused_and_unfused_agree((c, block) in (arb_sized_circuit(8, 80), 1..6usize)) {
        let mut plain = init_basis_state(c.num_qubits(), 0).unwrap();
        plain.apply_circuit(&c).unwrap();
        let mut fused = init_basis_state(c.num_qubits(), 0).unwrap();
        fused.apply_schedule(&fuse_cache_blocks(&c, block)).unwrap();
        prop_assert!(max_diff(&plain, &fused) <= 1e-12);
    }

    #[test]
    fn single_qubit_gate_couples_only_stride_pairs((n, k, g) in (1..=5usize).prop_flat_map(|n| (Just(n), 0..n, arb_gate(n)))) {
        let gate = gate_of(g.angles);
        for c in 0..1usize << n {
            let mut col = init_basis_state(n, c as u64).unwrap();
            col.apply_1q(&gate, k).unwrap();
            for (r, a) in col.amplitudes().iter().enumerate() {
                if r != c && r ^ c != 1 << k {
                    prop_assert_eq!(*a, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn ladder_adjoint_roundtrip((n, p) in (1..=6usize).prop_flat_map(|n| (Just(n), 0..n))) {
        for mapping in [Mapping::JordanWigner, Mapping::BravyiKitaev] {
            let a = ladder_image(Ladder::annihilate(p), mapping, n).unwrap();
            let ad = ladder_image(Ladder::create(p), mapping, n).unwrap();
            prop_assert!(ad.adjoint().distance(&a).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn ladder_locality((n, p) in (1..=16usize).prop_flat_map(|n| (Just(n), 0..n))) {
        let jw = ladder_image(Ladder::annihilate(p), Mapping::JordanWigner, n).unwrap();
        let support = jw.terms().iter().fold(0u64, |acc, t| acc | t.string.support());
        prop_assert_eq!(support.count_ones() as usize, p + 1);
        let bound = (n as f64).log2().ceil() as u32 * 3 + 1;
        let bk = ladder_image(Ladder::annihilate(p), Mapping::BravyiKitaev, n).unwrap();
        for t in bk.terms() {
            prop_assert!(t.string.weight() <= bound);
        }
    }

    #[test]
    fn mapping_distributes_over_addition((f, g) in (1..=6usize).prop_flat_map(|n| (arb_fermion(n), arb_fermion(n)))) {
        let n = f.num_modes();
        for mapping in [Mapping::JordanWigner, Mapping::BravyiKitaev] {
            let mut fg = f.clone();
            fg.extend(&g).unwrap();
            let lhs = fermion_to_pauli(&fg, mapping, n).unwrap();
            let rhs = fermion_to_pauli(&f, mapping, n).unwrap().add(&fermion_to_pauli(&g, mapping, n).unwrap()).unwrap();
            prop_assert!(lhs.distance(&rhs.simplified()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn synthesized_exponential_matches_dense((p, c) in (1..=6usize).prop_flat_map(|n| (arb_pauli(n), -1.0f64..1.0))) {
        let n = p.num_qubits();
        let circuit = synthesize_exponential(c, &p).unwrap();
        prop_assert!(circuit.is_unitary());
        let sum = PauliSum::from_terms(n, vec![PauliTerm::new(Complex64::new(0.0, c), p)]).unwrap();
        prop_assert!(max_abs_diff(&circuit_matrix(&circuit).unwrap(), &dense_exponential(&sum).unwrap()) <= 1e-12);
    }

    #[test]
    fn doubling_trotter_number_never_hurts(
        terms in (2..=4usize).prop_flat_map(|n| proptest::collection::vec((arb_pauli(n), -0.5f64..0.5), 2..5))
    ) {
        let n = terms[0].0.num_qubits();
        let g = PauliSum::from_terms(
            n,
            terms.into_iter().map(|(p, c)| PauliTerm::new(Complex64::new(0.0, c), p)).collect(),
        ).unwrap().simplified();
        prop_assume!(!g.is_empty());
        let exact = dense_exponential(&g).unwrap();
        let err = |eta| {
            let mut c = Circuit::new(n);
            for (coeff, p) in trotterize(&g, &TrotterPlan::new(eta).unwrap()).unwrap() {
                append_exponential(&mut c, coeff, &p).unwrap();
            }
            operator_norm(&(circuit_matrix(&c).unwrap() - &exact))
        };
        let (e1, e2, e4) = (err(1), err(2), err(4));
        prop_assert!(e2 <= e1 + 1e-12);
        prop_assert!(e4 <= e2 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn noise_free_ucc_conserves_particles(((amps, mapping), eta) in (arb_amplitudes(), 1..=2usize)) {
        let u = build_ucc_circuit(&amps, mapping, &TrotterPlan::new(eta).unwrap(), 1e-5).unwrap();
        let number = particle_number_observable(6, mapping).unwrap();
        let n = pristine_state(&u.circuit, u.reference).unwrap().expectation_sum(&number).unwrap();
        prop_assert!((n - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn ucc_build_is_deterministic((amps, mapping) in arb_amplitudes()) {
        let plan = TrotterPlan::new(1).unwrap();
        let a = build_ucc_circuit(&amps, mapping, &plan, 1e-5).unwrap();
        let b = build_ucc_circuit(&amps, mapping, &plan, 1e-5).unwrap();
        prop_assert_eq!(write_circuit(&a.circuit, Some(a.reference)), write_circuit(&b.circuit, Some(b.reference)));
    }

    #[test]
    fn noise_gates_are_unitary(
        (seed, idx, m1, ratio, single) in (any::<u64>(), any::<u64>(), 1.0f64..1e6, 0.05f64..2.0, any::<bool>())
    ) {
        let model = NoiseModel::new(m1, m1 * ratio).unwrap();
        let mode = if single { NoiseMode::SingleRotation } else { NoiseMode::ThreeRotation };
        let mut rng = TrajectoryRng::new(seed, idx);
        for _ in 0..16 {
            prop_assert!(sample_noise_gate(&mut rng, model.stddevs(), mode).unitarity_error() <= 1e-14);
        }
    }

    #[test]
    fn dephasing_noise_gates_are_diagonal((seed, m) in (any::<u64>(), 1.0f64..1e4)) {
        let model = NoiseScenario::new(ScenarioKind::PureDephasing, m).model().unwrap();
        let mut rng = TrajectoryRng::new(seed, 0);
        for mode in [NoiseMode::ThreeRotation, NoiseMode::SingleRotation] {
            let g = sample_noise_gate(&mut rng, model.stddevs(), mode).matrix();
            prop_assert!(g[0][1].norm() <= 1e-15 && g[1][0].norm() <= 1e-15);
        }
    }

    #[test]
    fn dephasing_preserves_number_on_diagonal_circuits(
        (occ, angles, seed) in (0..64u64, proptest::collection::vec((0..6usize, -PI..PI), 1..30), any::<u64>())
    ) {
        let mut c = Circuit::new(6);
        for (q, a) in angles {
            c.push_1q(Gate1Q::rz(a), q).unwrap();
        }
        let model = NoiseScenario::new(ScenarioKind::PureDephasing, 20.0).model().unwrap();
        let number = particle_number_observable(6, Mapping::JordanWigner).unwrap();
        let cfg = TrajectoryConfig { num_trajectories: 8, master_seed: seed, ..Default::default() };
        let r = run_trajectories(&c, occ, &model, &[number], &cfg).unwrap();
        for rec in &r.records {
            prop_assert!((rec.values[0] - occ.count_ones() as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn trajectory_records_ignore_worker_count((c, seed) in (arb_circuit(3, 15), any::<u64>())) {
        let model = NoiseModel::new(50.0, 60.0).unwrap();
        let obs = PauliSum::from_terms(3, vec![PauliTerm::new(Complex64::new(1.0, 0.0), "Z0 X1".parse::<PauliString>().unwrap().resized(3))]).unwrap();
        let run = |workers| {
            let cfg = TrajectoryConfig { num_trajectories: 16, master_seed: seed, workers, ..Default::default() };
            run_trajectories(&c, 0, &model, std::slice::from_ref(&obs), &cfg).unwrap()
        };
        let a = run(Some(1));
        let b = run(Some(3));
        let bits = |r: &qsim::noise::TrajectoryResult| r.records.iter().map(|x| x.values[0].to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn channel_keeps_trace_and_hermiticity(
        (c, px, py, pz) in (arb_circuit(3, 10), 0.0f64..0.2, 0.0f64..0.2, 0.0f64..0.2)
    ) {
        let mut rho = DensityMatrix::from_basis(3, 0).unwrap();
        for step in c.steps() {
            for op in step {
                rho.apply_op(op).unwrap();
            }
            rho.apply_noise_step(px, py, pz).unwrap();
        }
        prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
        prop_assert!(rho.hermiticity_error() <= 1e-12);
    }

    #[test]
    fn density_and_state_paths_agree_without_noise((c, p) in (1..=4usize).prop_flat_map(|n| (arb_circuit(n, 20), arb_pauli(n)))) {
        let n = c.num_qubits();
        let mut s = init_basis_state(n, 0).unwrap();
        s.apply_circuit(&c).unwrap();
        let mut rho = DensityMatrix::from_basis(n, 0).unwrap();
        rho.apply_circuit(&c).unwrap();
        let sum = PauliSum::from_terms(n, vec![PauliTerm::new(Complex64::new(1.0, 0.0), p)]).unwrap();
        prop_assert!((s.expectation_sum(&sum).unwrap() - rho.expectation(&sum).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn distributed_matches_single_node(
        (c, p, chunk) in (4..=8usize).prop_flat_map(|n| (arb_circuit(n, 40), 1..=3usize, 0..4u32))
    ) {
        let n = c.num_qubits();
        let mut single = init_basis_state(n, 0).unwrap();
        single.apply_circuit(&c).unwrap();
        let chunk = 1usize << chunk;
        let out = run_inproc(1 << p, |t| {
            let mut part = Partition::basis(n, 0, t, chunk)?;
            part.apply_circuit(&c)?;
            assert!(part.scratch_len() <= chunk);
            part.gather()
        }).unwrap();
        let gathered = out.into_iter().next().unwrap().unwrap();
        prop_assert!(max_diff(&single, &gathered) <= 1e-12);
    }

    #[test]
    fn low_qubit_gates_send_nothing(
        (n, specs, p) in (6..=8usize).prop_flat_map(|n| (Just(n), proptest::collection::vec(arb_gate(n - 3), 1..30), 1..=3usize))
    ) {
        let wide = build(n, &specs);
        let counts = run_inproc(1 << p, |t| {
            let mut part = Partition::basis(n, 0, t, 8)?;
            part.apply_circuit(&wide)?;
            Ok(part.counters().exchange_messages)
        }).unwrap();
        prop_assert!(counts.iter().all(|&m| m == 0));
    }

    #[test]
    fn noiseless_reports_have_no_error((c, p) in (2..=4usize).prop_flat_map(|n| (arb_circuit(n, 20), arb_pauli(n)))) {
        let n = c.num_qubits();
        let h = PauliSum::from_terms(n, vec![
            PauliTerm::new(Complex64::new(0.7, 0.0), p),
            PauliTerm::new(Complex64::new(-0.3, 0.0), PauliString::identity(n)),
        ]).unwrap();
        let cfg = TrajectoryConfig { num_trajectories: 4, ..Default::default() };
        let ens = run_trajectories(&c, 0, &NoiseModel::noiseless(), std::slice::from_ref(&h), &cfg).unwrap();
        let pristine = pristine_state(&c, 0).unwrap();
        let r = estimator_report(&pristine, &h, &ens, 0).unwrap();
        prop_assert!(r.mean_error.abs() <= 1e-12);
        prop_assert!(r.error_width.abs() <= 1e-12);
        prop_assert!(r.sigma_p >= 0.0);
    }

    #[test]
    fn pristine_variance_adds_over_disjoint_groups(
        (c, wa, wb) in (arb_circuit(4, 20), -1.0f64..1.0, -1.0f64..1.0)
    ) {
        let mut s = init_basis_state(4, 0).unwrap();
        s.apply_circuit(&c).unwrap();
        let term = |w: f64, text: &str| PauliTerm::new(Complex64::new(w, 0.0), text.parse::<PauliString>().unwrap().resized(4));
        let a = PauliSum::from_terms(4, vec![term(wa, "X0 Z1"), term(0.4, "Y1")]).unwrap();
        let b = PauliSum::from_terms(4, vec![term(wb, "Z2 X3"), term(-0.2, "Y3")]).unwrap();
        let va = pristine_variance(&s, &a).unwrap();
        let vb = pristine_variance(&s, &b).unwrap();
        let vab = pristine_variance(&s, &a.add(&b).unwrap()).unwrap();
        prop_assert!(va >= 0.0 && vb >= 0.0);
        prop_assert!((vab - va - vb).abs() <= 1e-12);
    }

    #[test]
    fn sweep_csv_is_reproducible(seed in any::<u64>()) {
        let mut c = Circuit::new(2);
        c.push_1q(Gate1Q::h(), 0).unwrap();
        c.push_cnot(0, 1).unwrap();
        let h = PauliSum::from_terms(2, vec![PauliTerm::new(Complex64::new(1.0, 0.0), "Z0 Z1".parse().unwrap())]).unwrap();
        let number = particle_number_observable(2, Mapping::JordanWigner).unwrap();
        let sc = [NoiseScenario::new(ScenarioKind::RelaxationDephasing, 30.0)];
        let cfg = TrajectoryConfig { num_trajectories: 20, master_seed: seed, ..Default::default() };
        let a = sweep_csv(&noise_sweep(&c, 0, &h, &number, &sc, &cfg).unwrap());
        let b = sweep_csv(&noise_sweep(&c, 0, &h, &number, &sc, &TrajectoryConfig { workers: Some(2), ..cfg }).unwrap());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn long_idle_noise_reaches_the_mixed_state() {
    let model = NoiseModel::new(5.0, 5.0).unwrap();
    let mut c = Circuit::new(1);
    c.push_1q(Gate1Q::h(), 0).unwrap();
    c.push_1q(Gate1Q::rz(0.3), 0).unwrap();
    for _ in 0..200 {
        c.push_1q(Gate1Q::identity(), 0).unwrap();
    }
    let obs: Vec<PauliSum> = ["X0", "Y0", "Z0"]
        .iter()
        .map(|s| PauliSum::from_terms(1, vec![PauliTerm::new(Complex64::new(1.0, 0.0), s.parse().unwrap())]).unwrap())
        .collect();
    let cfg = TrajectoryConfig { num_trajectories: 2000, master_seed: 3, ..Default::default() };
    let r = run_trajectories(&c, 0, &model, &obs, &cfg).unwrap();
    for st in &r.stats {
        assert!(st.mean.abs() < 4.0 * st.std_error + 1e-3, "{} vs se {}", st.mean, st.std_error);
    }
}
