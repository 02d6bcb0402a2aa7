use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsim::dist::{run_inproc, run_tcp_loopback, ChunkHeader, InProcTransport, Partition, Transport, TransportCounters};
use qsim::noise::{run_noisy_trajectory, NoiseMode, NoiseModel, TrajectoryRng};
use qsim::ucc::qft_circuit;
use qsim::{init_basis_state, Circuit, Gate1Q, PauliString, PauliSum, PauliTerm, StateVector};

fn random_gate(rng: &mut ChaCha8Rng) -> Gate1Q {
    Gate1Q::rz(rng.random_range(-3.0..3.0))
        .mul(&Gate1Q::ry(rng.random_range(-3.0..3.0)))
        .mul(&Gate1Q::rz(rng.random_range(-3.0..3.0)))
}

fn random_circuit(rng: &mut ChaCha8Rng, n: usize, gates: usize, controlled: f64) -> Circuit {
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        let t = rng.random_range(0..n);
        if rng.random_bool(controlled) {
            let mut ctl = rng.random_range(0..n - 1);
            if ctl >= t {
                ctl += 1;
            }
            c.push_controlled(random_gate(rng), ctl, t).unwrap();
        } else {
            c.push_1q(random_gate(rng), t).unwrap();
        }
    }
    c
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut amps: Vec<Complex64> =
        (0..1usize << n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn single_node(n: usize, c: &Circuit) -> StateVector {
    let mut s = init_basis_state(n, 0).unwrap();
    s.apply_circuit(c).unwrap();
    s
}

fn distributed(n: usize, ranks: usize, chunk: usize, c: &Circuit) -> StateVector {
    run_inproc(ranks, |t| {
        let mut p = Partition::basis(n, 0, t, chunk)?;
        p.apply_circuit(c)?;
        p.gather()
    })
    .unwrap()
    .remove(0)
    .unwrap()
}

#[test]
fn twenty_qubit_random_circuit_on_four_ranks() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let c = random_circuit(&mut rng, 20, 120, 0.4);
    assert!(max_diff(&single_node(20, &c), &distributed(20, 4, 1 << 12, &c)) <= 1e-12);
}

#[test]
fn randomized_controlled_gates_two_to_eight_ranks() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for ranks in [2, 4, 8] {
        for n in [4usize, 9, 16] {
            let c = random_circuit(&mut rng, n, 60, 1.0);
            let chunk = 1 << rng.random_range(0..4);
            assert!(max_diff(&single_node(n, &c), &distributed(n, ranks, chunk, &c)) <= 1e-12, "ranks {ranks} n {n}");
        }
    }
}

#[test]
fn controlled_from_high_qubit_example() {
    let mut c = Circuit::new(4);
    c.push_1q(Gate1Q::h(), 3).unwrap();
    c.push_cnot(3, 1).unwrap();
    let out = distributed(4, 2, 2, &c);
    let h = 0.5f64.sqrt();
    for (i, a) in out.amplitudes().iter().enumerate() {
        let want = if i == 0b0000 || i == 0b1010 { h } else { 0.0 };
        assert!((a - Complex64::new(want, 0.0)).norm() <= 1e-12);
    }
}

#[test]
fn idle_control_sends_nothing() {
    let n = 8;
    let out = run_inproc(4, |t| {
        let mut p = Partition::basis(n, 0, t, 4)?;
        p.apply_controlled(&Gate1Q::x(), n - 1, 0)?;
        Ok((p.rank(), p.counters().exchange_messages, p.gather()?))
    })
    .unwrap();
    for (rank, msgs, _) in &out {
        if rank >> 1 & 1 == 0 {
            assert_eq!(*msgs, 0);
        }
    }
    let state = out[0].2.as_ref().unwrap();
    assert_eq!(state.amplitudes()[0], Complex64::new(1.0, 0.0));
}

#[test]
fn expectation_matches_single_node() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let n = 12;
    let state = random_state(&mut rng, n);
    let terms: Vec<PauliTerm> = (0..20)
        .map(|_| {
            let x = rng.random_range(0..1u64 << n);
            let z = rng.random_range(0..1u64 << n);
            PauliTerm::new(Complex64::new(rng.random_range(-1.0..1.0), 0.0), PauliString::from_masks(n, x, z).unwrap())
        })
        .collect();
    let h = PauliSum::from_terms(n, terms).unwrap().simplified();
    let want = state.expectation_sum(&h).unwrap();
    let got = run_inproc(4, |t| {
        let mut p = Partition::scatter(&state, t, 64)?;
        let e = p.expectation(&h)?;
        let back = p.gather()?;
        Ok((e, back))
    })
    .unwrap();
    for (e, _) in &got {
        assert!((e - want).abs() <= 1e-10);
    }
    assert_eq!(got[0].1.as_ref().unwrap().amplitudes(), state.amplitudes());
}

#[test]
fn identity_and_high_z_expectations() {
    let n = 10;
    let z_top = PauliSum::from_terms(n, vec![PauliTerm::new(Complex64::new(1.0, 0.0), PauliString::from_masks(n, 0, 1 << (n - 1)).unwrap())]).unwrap();
    let id = PauliSum::identity(n, Complex64::new(1.0, 0.0));
    let out = run_inproc(4, |t| {
        let mut p = Partition::basis(n, 0, t, 8)?;
        let z = p.expectation(&z_top)?;
        let one = p.expectation(&id)?;
        Ok((z, one, p.counters().exchange_messages))
    })
    .unwrap();
    for (z, one, msgs) in out {
        assert_eq!(z, 1.0);
        assert_eq!(one, 1.0);
        assert_eq!(msgs, 0);
    }
}

#[test]
fn single_rank_gather_is_a_copy() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let state = random_state(&mut rng, 6);
    let out = run_inproc(1, |t| Partition::scatter(&state, t, 4)?.gather()).unwrap();
    assert_eq!(out[0].as_ref().unwrap().amplitudes(), state.amplitudes());
}

#[test]
fn qft16_on_four_ranks() {
    let c = qft_circuit(16).unwrap();
    assert!(max_diff(&single_node(16, &c), &distributed(16, 4, 1 << 10, &c)) <= 1e-12);
}

#[test]
fn noisy_distributed_run_reproduces_single_node_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let n = 8;
    let c = random_circuit(&mut rng, n, 40, 0.3);
    let model = NoiseModel::new(30.0, 40.0).unwrap();
    for mode in [NoiseMode::ThreeRotation, NoiseMode::SingleRotation] {
        let mut r = TrajectoryRng::new(9, 3);
        let single = run_noisy_trajectory(&c, 0b101, &model, mode, false, &mut r).unwrap();
        let dist = run_inproc(4, |t| {
            let mut p = Partition::basis(n, 0b101, t, 8)?;
            let mut r = TrajectoryRng::new(9, 3);
            p.run_circuit(&c, Some((&model, mode, &mut r)))?;
            p.gather()
        })
        .unwrap()
        .remove(0)
        .unwrap();
        assert!(max_diff(&single, &dist) <= 1e-12);
    }
}

#[test]
fn tcp_four_ranks_match_inproc() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let n = 10;
    let c = random_circuit(&mut rng, n, 50, 0.4);
    let body = |t: Box<dyn Transport>| -> qsim::Result<(Vec<u64>, Option<StateVector>)> {
        let mut p = Partition::basis(n, 0, t, 16)?;
        p.apply_circuit(&c)?;
        let norm = p.norm_sqr()?.to_bits();
        Ok((vec![norm, p.gate_seq()], p.gather()?))
    };
    let a = run_inproc(4, body).unwrap();
    let b = run_tcp_loopback(4, body).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.0, y.0);
    }
    assert_eq!(a[0].1.as_ref().unwrap().amplitudes(), b[0].1.as_ref().unwrap().amplitudes());
}

struct Recording {
    inner: InProcTransport,
    seqs: Arc<Mutex<Vec<u64>>>,
}

impl Transport for Recording {
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn num_ranks(&self) -> usize {
        self.inner.num_ranks()
    }

    fn send(&mut self, to: usize, header: ChunkHeader, payload: &[Complex64]) -> qsim::Result<()> {
        self.seqs.lock().unwrap().push(header.gate_seq);
        self.inner.send(to, header, payload)
    }

    fn receive(&mut self, from: usize, buf: &mut [Complex64]) -> qsim::Result<ChunkHeader> {
        self.inner.receive(from, buf)
    }

    fn counters(&self) -> TransportCounters {
        self.inner.counters()
    }
}

#[test]
fn gate_sequence_numbers_increase() {
    let n = 8;
    let mut c = Circuit::new(n);
    for k in [7, 6, 7, 0, 6] {
        c.push_1q(Gate1Q::h(), k).unwrap();
    }
    let logs: Vec<Arc<Mutex<Vec<u64>>>> = (0..4).map(|_| Arc::new(Mutex::new(Vec::new()))).collect();
    let transports: Vec<Recording> = InProcTransport::create(4)
        .into_iter()
        .zip(&logs)
        .map(|(inner, seqs)| Recording { inner, seqs: seqs.clone() })
        .collect();
    std::thread::scope(|s| {
        for t in transports {
            let c = &c;
            s.spawn(move || {
                let mut p = Partition::basis(n, 0, Box::new(t), 4).unwrap();
                p.apply_circuit(c).unwrap();
            });
        }
    });
    for log in logs {
        let seqs = log.lock().unwrap();
        assert!(!seqs.is_empty());
        assert!(seqs.windows(2).all(|w| w[0] <= w[1]));
        let mut distinct = seqs.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
    }
}
