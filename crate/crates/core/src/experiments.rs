//! Estimators and experiment procedures: energy and particle-number errors
//! under noise, coherence sweeps, the Trotter/noise crossover search,
//! systematic gate-error experiments and decay calibration.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QsimError, Result};
use crate::mapping::{particle_number_observable, Mapping};
use crate::noise::{
    run_trajectories, summarize, NoiseModel, NoiseMode, NoiseScenario, ScenarioKind, TrajectoryConfig,
    TrajectoryResult, TrajectoryRng, sample_noise_gate,
};
use crate::oracle::{apply_to_state, dense_exponential};
use crate::pauli::{PauliString, PauliSum, PauliTerm};
use crate::statevec::{init_basis_state, Circuit, Gate1Q, GateKind, GateName, StateVector};
use crate::ucc::{build_ucc_circuit, ucc_generator, ClusterAmplitudes, SingleExcitation, TrotterPlan};

/// 1 kcal/mol in Hartree.
pub const CHEMICAL_ACCURACY: f64 = 1.6e-3;

pub fn within_chemical_accuracy(error: f64) -> bool {
    error.abs() <= CHEMICAL_ACCURACY
}

fn require_hermitian(h: &PauliSum) -> Result<()> {
    if !h.is_hermitian(1e-12) {
        return Err(QsimError::Contract("observable is not Hermitian".into()));
    }
    Ok(())
}

/// `<psi|H|psi>` for Hermitian `H`.
pub fn energy_estimate(state: &StateVector, h: &PauliSum) -> Result<f64> {
    require_hermitian(h)?;
    state.expectation_sum(h)
}

/// `sum_gamma w_gamma^2 (1 - <O_gamma>^2)` from per-term expectations.
pub fn variance_from_terms(h: &PauliSum, term_values: &[f64]) -> Result<f64> {
    if term_values.len() != h.len() {
        return Err(QsimError::Contract(format!(
            "{} term values for {} terms",
            term_values.len(),
            h.len()
        )));
    }
    Ok(h.terms()
        .iter()
        .zip(term_values)
        .map(|(t, v)| {
            let w = t.coeff.re;
            w * w - (w * v) * (w * v)
        })
        .sum())
}

/// `sigma_p^2 = sum_gamma (w_gamma^2 - <H_gamma>_p^2)`.
pub fn pristine_variance(state: &StateVector, h: &PauliSum) -> Result<f64> {
    require_hermitian(h)?;
    variance_from_terms(h, &state.expectation_terms(h)?)
}

/// `sigma_noisy^2` with trajectory-averaged term expectations.
pub fn noisy_variance(term_means: &[f64], h: &PauliSum) -> Result<f64> {
    require_hermitian(h)?;
    variance_from_terms(h, term_means)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub pristine_value: f64,
    pub noisy_mean: f64,
    pub mean_error: f64,
    pub sigma_p: f64,
    pub sigma_noisy: f64,
    pub error_width: f64,
    pub per_gate_error: f64,
    pub trajectory_count: usize,
    pub standard_error: f64,
    /// Sample standard deviation of per-trajectory values.
    pub trajectory_std_dev: f64,
    pub gate_count: usize,
}

/// Builds a report for observable `k` of an ensemble.
pub fn estimator_report(
    pristine: &StateVector,
    h: &PauliSum,
    ensemble: &TrajectoryResult,
    k: usize,
) -> Result<EstimatorReport> {
    let stats = ensemble
        .stats
        .get(k)
        .ok_or_else(|| QsimError::Contract(format!("no observable {k} in the ensemble")))?;
    let pristine_value = energy_estimate(pristine, h)?;
    let sigma_p = pristine_variance(pristine, h)?.max(0.0).sqrt();
    let sigma_noisy = noisy_variance(&stats.term_means, h)?.max(0.0).sqrt();
    let mean_error = stats.mean - pristine_value;
    let gate_count = ensemble.gate_count;
    Ok(EstimatorReport {
        pristine_value,
        noisy_mean: stats.mean,
        mean_error,
        sigma_p,
        sigma_noisy,
        error_width: sigma_noisy - sigma_p,
        per_gate_error: if gate_count > 0 { mean_error / gate_count as f64 } else { 0.0 },
        trajectory_count: ensemble.records.len(),
        standard_error: stats.std_error,
        trajectory_std_dev: stats.std_dev,
        gate_count,
    })
}

/// Divides the mean error and the width by `gate_count`.
pub fn per_gate_normalize(report: &EstimatorReport, gate_count: usize) -> Result<EstimatorReport> {
    if gate_count == 0 {
        return Err(QsimError::Contract("gate count must be positive".into()));
    }
    let g = gate_count as f64;
    Ok(EstimatorReport {
        mean_error: report.mean_error / g,
        error_width: report.error_width / g,
        per_gate_error: report.mean_error / g,
        ..report.clone()
    })
}

/// Pristine final state of `circuit` from `|reference>`.
pub fn pristine_state(circuit: &Circuit, reference: u64) -> Result<StateVector> {
    let mut s = init_basis_state(circuit.num_qubits(), reference)?;
    s.apply_circuit(circuit)?;
    Ok(s)
}

/// One row of a coherence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub scenario: NoiseScenario,
    pub energy: EstimatorReport,
    pub particle: EstimatorReport,
    /// `mean_error * M` for the energy.
    pub error_times_m: f64,
}

/// Energy and particle-number reports per scenario.
pub fn noise_sweep(
    circuit: &Circuit,
    reference: u64,
    h: &PauliSum,
    number: &PauliSum,
    scenarios: &[NoiseScenario],
    cfg: &TrajectoryConfig,
) -> Result<Vec<SweepRow>> {
    require_hermitian(h)?;
    let pristine = pristine_state(circuit, reference)?;
    let observables = [h.clone(), number.clone()];
    scenarios
        .iter()
        .map(|sc| {
            let model = sc.model()?;
            let ens = run_trajectories(circuit, reference, &model, &observables, cfg)?;
            let energy = estimator_report(&pristine, h, &ens, 0)?;
            let particle = estimator_report(&pristine, number, &ens, 1)?;
            let error_times_m = if sc.m.is_finite() { energy.mean_error * sc.m } else { 0.0 };
            Ok(SweepRow {
                scenario: *sc,
                energy,
                particle,
                error_times_m,
            })
        })
        .collect()
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

pub const SWEEP_CSV_HEADER: &str = "scenario,M,M1,M2,gate_count,trajectories,energy_pristine,energy_noisy_mean,energy_mean_error,energy_standard_error,sigma_p,sigma_noisy,width_energy_estimator,energy_per_gate_error,error_times_M,particle_pristine,particle_noisy_mean,particle_mean_error,particle_standard_error,stddev_particle_error,chemical_accuracy";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (m1, m2) = r.scenario.coherence();
        let e = &r.energy;
        let p = &r.particle;
        let cells = [
            r.scenario.kind.to_string(),
            fmt17(r.scenario.m),
            fmt17(m1),
            fmt17(m2),
            e.gate_count.to_string(),
            e.trajectory_count.to_string(),
            fmt17(e.pristine_value),
            fmt17(e.noisy_mean),
            fmt17(e.mean_error),
            fmt17(e.standard_error),
            fmt17(e.sigma_p),
            fmt17(e.sigma_noisy),
            fmt17(e.error_width),
            fmt17(e.per_gate_error),
            fmt17(r.error_times_m),
            fmt17(p.pristine_value),
            fmt17(p.noisy_mean),
            fmt17(p.mean_error),
            fmt17(p.standard_error),
            fmt17(p.trajectory_std_dev),
            within_chemical_accuracy(e.mean_error).to_string(),
        ];
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Per-trajectory CSV: `traj_id` then one column per observable.
pub fn trajectory_csv(names: &[String], ens: &TrajectoryResult) -> String {
    let mut out = String::from("traj_id");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for r in &ens.records {
        out.push_str(&r.index.to_string());
        for v in &r.values {
            out.push(',');
            out.push_str(&fmt17(*v));
        }
        out.push('\n');
    }
    out
}

/// `<HF| e^{-T} H e^{T} |HF>` from the dense exponential of the full generator.
pub fn exact_ucc_energy(amps: &ClusterAmplitudes, mapping: Mapping, cutoff: f64, h: &PauliSum) -> Result<f64> {
    let g = ucc_generator(amps, mapping, cutoff)?;
    let u = dense_exponential(&g)?;
    let reference = crate::ucc::hartree_fock_reference(amps.n_electrons, amps.n_modes, mapping)?;
    let state = apply_to_state(&u, &init_basis_state(amps.n_modes, reference)?)?;
    state.expectation_sum(h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MTrotPoint {
    pub log10_m: f64,
    pub error_eta1: f64,
    pub error_eta2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MTrotResult {
    pub m_trot: f64,
    pub log10_m: f64,
    pub exact_energy: f64,
    pub evaluations: Vec<MTrotPoint>,
}

/// Coherence parameter where the total energy errors of `eta = 1` and `eta = 2`
/// coincide, by bisection on `log10 M` until the bracket is below `tol_decades`.
#[allow(clippy::too_many_arguments)]
pub fn find_m_trot(
    amps: &ClusterAmplitudes,
    mapping: Mapping,
    h: &PauliSum,
    kind: ScenarioKind,
    log10_bounds: (f64, f64),
    tol_decades: f64,
    cutoff: f64,
    cfg: &TrajectoryConfig,
) -> Result<MTrotResult> {
    let exact = exact_ucc_energy(amps, mapping, cutoff, h)?;
    let c1 = build_ucc_circuit(amps, mapping, &TrotterPlan::new(1)?, cutoff)?;
    let c2 = build_ucc_circuit(amps, mapping, &TrotterPlan::new(2)?, cutoff)?;
    let obs = [h.clone()];
    let mut evaluations = Vec::new();
    let mut eval = |lm: f64| -> Result<f64> {
        let model = NoiseScenario::new(kind, 10f64.powf(lm)).model()?;
        let e1 = run_trajectories(&c1.circuit, c1.reference, &model, &obs, cfg)?.stats[0].mean;
        let e2 = run_trajectories(&c2.circuit, c2.reference, &model, &obs, cfg)?.stats[0].mean;
        let p = MTrotPoint {
            log10_m: lm,
            error_eta1: (e1 - exact).abs(),
            error_eta2: (e2 - exact).abs(),
        };
        let d = p.error_eta1 - p.error_eta2;
        evaluations.push(p);
        Ok(d)
    };
    let (mut lo, mut hi) = log10_bounds;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(QsimError::Bracket(format!("empty bracket [{lo}, {hi}]")));
    }
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
        return Err(QsimError::Bracket(format!(
            "err(eta=1) - err(eta=2) is {f_lo:e} at 10^{lo} and {f_hi:e} at 10^{hi}"
        )));
    }
    let lo_sign = f_lo.signum();
    while hi - lo > tol_decades {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid)?;
        if f.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let log10_m = 0.5 * (lo + hi);
    Ok(MTrotResult {
        m_trot: 10f64.powf(log10_m),
        log10_m,
        exact_energy: exact,
        evaluations,
    })
}

/// Which controlled gates carry the CNOT error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CnotErrorScope {
    #[default]
    All,
    /// Only the run of CNOTs immediately preceding the fourth `RZ`.
    BeforeFourthRotation,
}

/// Systematic gate errors on two sequential single excitations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateErrorSpec {
    pub n: usize,
    /// Excess rotation of every `H` about its own axis.
    pub h_overrotation: f64,
    /// Excess rotation of every Y-basis change about X.
    pub yb_overrotation: f64,
    /// Angle of the controlled X-axis rotation replacing CNOT (`pi` is exact).
    pub cnot_angle: f64,
    pub cnot_scope: CnotErrorScope,
    /// `RZ` magnitude of the first excitation's rotations.
    pub theta1: f64,
    /// `RZ` magnitude of the second excitation's rotations.
    pub theta2: f64,
}

impl GateErrorSpec {
    /// Over-rotations of `1e-4` on `H` and `Yb`, CNOT as a `pi + 1e-3` X-rotation.
    pub fn standard(n: usize, theta1: f64) -> Self {
        Self {
            n,
            h_overrotation: 1e-4,
            yb_overrotation: 1e-4,
            cnot_angle: std::f64::consts::PI + 1e-3,
            cnot_scope: CnotErrorScope::All,
            theta1,
            theta2: 0.1,
        }
    }

    pub fn error_free(n: usize, theta1: f64) -> Self {
        Self {
            h_overrotation: 0.0,
            yb_overrotation: 0.0,
            cnot_angle: std::f64::consts::PI,
            ..Self::standard(n, theta1)
        }
    }
}

/// `i RX(angle)`: a rotation about X scaled so that `angle = pi` is exactly `X`.
pub fn x_axis_rotation(angle: f64) -> Gate1Q {
    let rx = Gate1Q::rx(angle).matrix();
    let i = Complex64::new(0.0, 1.0);
    Gate1Q::new(i * rx[0][0], i * rx[0][1], i * rx[1][0], i * rx[1][1]).expect("unitary")
}

/// Ideal circuit of the experiment: the lowest `n/4` modes filled, excitations
/// `0 -> n/4` with amplitude `theta1` and `n/4 - 1 -> n - 1` with `theta2`.
pub fn gate_error_circuit(spec: &GateErrorSpec) -> Result<(Circuit, u64)> {
    let n = spec.n;
    if n == 0 || !n.is_multiple_of(4) {
        return Err(QsimError::Contract(format!("qubit count {n} is not a positive multiple of 4")));
    }
    let fill = n / 4;
    let mut amps = ClusterAmplitudes::new(n, fill);
    amps.singles.push(SingleExcitation { i: 0, p: fill, xi: spec.theta1 });
    amps.singles.push(SingleExcitation { i: fill - 1, p: n - 1, xi: spec.theta2 });
    let generator = ucc_generator(&amps, Mapping::JordanWigner, 0.0)?;
    // Keep excitation order: the first excitation's strings come first.
    let mut circuit = Circuit::new(n);
    let first_mask = (1u64 << fill) | 1;
    let (first, second): (Vec<&PauliTerm>, Vec<&PauliTerm>) = generator
        .terms()
        .iter()
        .partition(|t| t.string.x_mask() == first_mask);
    for t in first.into_iter().chain(second) {
        crate::ucc::append_exponential(&mut circuit, t.coeff.im, &t.string)?;
    }
    let reference = crate::ucc::hartree_fock_reference(fill, n, Mapping::JordanWigner)?;
    Ok((circuit, reference))
}

/// Replaces ideal gates by their errored forms according to `spec`.
pub fn apply_gate_errors(circuit: &Circuit, spec: &GateErrorSpec) -> Circuit {
    use std::f64::consts::{FRAC_PI_2, PI};
    let ops = circuit.ops();
    // Indices of CNOTs in the run right before the fourth RZ.
    let mut scoped = vec![spec.cnot_scope == CnotErrorScope::All; ops.len()];
    if spec.cnot_scope == CnotErrorScope::BeforeFourthRotation {
        let rz: Vec<usize> = ops
            .iter()
            .enumerate()
            .filter(|(_, o)| matches!(o.gate().name(), GateName::Rz(_)))
            .map(|(i, _)| i)
            .collect();
        if let Some(&fourth) = rz.get(3) {
            let mut i = fourth;
            while i > 0 && ops[i - 1].control().is_some() {
                i -= 1;
                scoped[i] = true;
            }
        }
    }
    let h_err = Gate1Q::hadamard_axis(PI + spec.h_overrotation);
    let yb_err = Gate1Q::rx(FRAC_PI_2 + spec.yb_overrotation);
    let ybdg_err = Gate1Q::rx(-FRAC_PI_2 - spec.yb_overrotation);
    let cx_err = x_axis_rotation(spec.cnot_angle);
    circuit.map_gates(|i, op| {
        let g = *op.gate();
        match (&op.kind, g.name()) {
            (GateKind::OneQubit { .. }, GateName::H) if spec.h_overrotation != 0.0 => h_err,
            (GateKind::OneQubit { .. }, GateName::Yb) if spec.yb_overrotation != 0.0 => yb_err,
            (GateKind::OneQubit { .. }, GateName::YbDg) if spec.yb_overrotation != 0.0 => ybdg_err,
            (GateKind::Controlled { .. }, GateName::X) if scoped[i] && spec.cnot_angle != PI => cx_err,
            _ => g,
        }
    })
}

/// `|<N> - n/4|` after the errored circuit.
pub fn gate_error_experiment(spec: &GateErrorSpec) -> Result<f64> {
    let (ideal, reference) = gate_error_circuit(spec)?;
    let errored = apply_gate_errors(&ideal, spec);
    let state = pristine_state(&errored, reference)?;
    let norm = state.norm_sqr();
    let number = state.expectation_diagonal(|i| i.count_ones() as f64);
    Ok((number / norm - (spec.n / 4) as f64).abs())
}

/// Least-squares line `y = a + b x` and its `R^2`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Mean and standard error of an observable at each of `steps + 1` times.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationFit {
    pub m1_fit: f64,
    pub m2_fit: f64,
    /// `-<Z>` from `|1>`.
    pub z_decay: DecayCurve,
    /// `<X>` from `|+>`.
    pub x_decay: DecayCurve,
}

fn idle_decay(
    model: &NoiseModel,
    steps: usize,
    prepare: &Gate1Q,
    observable: &PauliString,
    sign: f64,
    stream: u64,
    cfg: &TrajectoryConfig,
) -> Result<DecayCurve> {
    cfg.validate()?;
    let runs: Vec<Vec<f64>> = (0..cfg.num_trajectories)
        .map(|j| {
            let mut rng = TrajectoryRng::for_trajectory(cfg.master_seed ^ stream, j as u64, cfg.antithetic);
            let mut s = init_basis_state(1, 0)?;
            s.apply_1q(prepare, 0)?;
            let mut vals = Vec::with_capacity(steps + 1);
            vals.push(sign * s.expectation_pauli(observable)?);
            for _ in 0..steps {
                let g = sample_noise_gate(&mut rng, model.stddevs(), cfg.mode);
                s.apply_1q(&g, 0)?;
                vals.push(sign * s.expectation_pauli(observable)?);
            }
            Ok(vals)
        })
        .collect::<Result<_>>()?;
    let mut mean = Vec::with_capacity(steps + 1);
    let mut std_error = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        let column: Vec<f64> = runs.iter().map(|r| r[t]).collect();
        let (m, _, se) = summarize(&column, cfg.antithetic);
        mean.push(m);
        std_error.push(se);
    }
    Ok(DecayCurve { mean, std_error })
}

/// Fits `y(t) = A e^{-t/M}` by weighted least squares on `ln y`, using points
/// with `y > 3 SE` and positive standard error.
pub fn fit_decay(curve: &DecayCurve) -> Result<f64> {
    let mut sw = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for (t, (&y, &se)) in curve.mean.iter().zip(&curve.std_error).enumerate() {
        if se <= 0.0 || y <= 3.0 * se {
            continue;
        }
        let w = (y / se) * (y / se);
        let x = t as f64;
        let ly = y.ln();
        sw += w;
        sx += w * x;
        sy += w * ly;
        sxx += w * x * x;
        sxy += w * x * ly;
        used += 1;
    }
    if used < 2 {
        return Err(QsimError::Contract("too few resolved points to fit a decay".into()));
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    if slope >= 0.0 {
        return Err(QsimError::Contract(format!("fitted decay rate {slope} is not negative")));
    }
    Ok(-1.0 / slope)
}

/// Idles one qubit for `steps` noise steps from `|1>` and from `|+>` and fits
/// the coherence parameters back from the decays.
pub fn calibrate(m1: f64, m2: f64, steps: usize, cfg: &TrajectoryConfig) -> Result<CalibrationFit> {
    let model = NoiseModel::new(m1, m2)?;
    let z = "Z0".parse::<PauliString>()?;
    let x = "X0".parse::<PauliString>()?;
    let z_decay = idle_decay(&model, steps, &Gate1Q::x(), &z, -1.0, 0, cfg)?;
    let x_decay = idle_decay(&model, steps, &Gate1Q::h(), &x, 1.0, 0x9e37_79b9_7f4a_7c15, cfg)?;
    Ok(CalibrationFit {
        m1_fit: fit_decay(&z_decay)?,
        m2_fit: fit_decay(&x_decay)?,
        z_decay,
        x_decay,
    })
}

/// Particle-number observable under `mapping`.
pub fn number_operator(n: usize, mapping: Mapping) -> Result<PauliSum> {
    particle_number_observable(n, mapping)
}

/// Noise mode recorded in output metadata.
pub fn describe_mode(mode: NoiseMode) -> &'static str {
    match mode {
        NoiseMode::ThreeRotation => "three",
        NoiseMode::SingleRotation => "single",
    }
}
