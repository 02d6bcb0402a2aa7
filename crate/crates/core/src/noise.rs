//! Pauli-twirled decoherence as random single-qubit rotations.
//!
//! Each time step every qubit receives a gate `exp(-i nu_x X) exp(-i nu_y Y)
//! exp(-i nu_z Z)` with Gaussian angles of standard deviation
//! `s = sqrt(-ln(1 - p))`. Averaged over trajectories this reproduces the
//! asymmetric depolarizing channel with probabilities `(px, py, pz)` derived
//! from the coherence parameters `M1 = T1/dt` and `M2 = T2/dt`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{QsimError, Result};
use crate::pauli::PauliSum;
use crate::statevec::{init_basis_state, Circuit, Gate1Q, StateVector};

/// `px = py = (1 - e^{-1/M1})/4`, `pz = (1 - e^{-1/M2})/2 - px`.
pub fn derive_probabilities(m1: f64, m2: f64) -> Result<(f64, f64, f64)> {
    for (name, m) in [("M1", m1), ("M2", m2)] {
        if m.is_nan() || m <= 0.0 {
            return Err(QsimError::InvalidScenario(format!("{name} = {m} must be positive")));
        }
    }
    if m2 > 2.0 * m1 {
        return Err(QsimError::InvalidScenario(format!(
            "M2 = {m2} exceeds 2 * M1 = {}",
            2.0 * m1
        )));
    }
    let pxy = -(-1.0 / m1).exp_m1() / 4.0;
    let pz = -(-1.0 / m2).exp_m1() / 2.0 - pxy;
    if pz < -1e-15 {
        return Err(QsimError::InvalidScenario(format!(
            "M2 = {m2} exceeds 2 * M1 = {}",
            2.0 * m1
        )));
    }
    Ok((pxy, pxy, pz.max(0.0)))
}

/// `s = sqrt(-ln(1 - p))` for each probability.
pub fn stddevs(px: f64, py: f64, pz: f64) -> Result<(f64, f64, f64)> {
    let s = |p: f64| -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(QsimError::Divergence(p));
        }
        Ok((-(-p).ln_1p()).sqrt())
    };
    Ok((s(px)?, s(py)?, s(pz)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// `T1 = T_phi = M`.
    RelaxationDephasing,
    /// `T1 = M`, no pure dephasing.
    PureRelaxation,
    /// `T_phi = M`, no relaxation.
    PureDephasing,
}

impl FromStr for ScenarioKind {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t1tphi" => Ok(Self::RelaxationDephasing),
            "relax" => Ok(Self::PureRelaxation),
            "dephase" => Ok(Self::PureDephasing),
            other => Err(QsimError::InvalidScenario(format!("unknown scenario `{other}`"))),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RelaxationDephasing => "t1tphi",
            Self::PureRelaxation => "relax",
            Self::PureDephasing => "dephase",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseScenario {
    pub kind: ScenarioKind,
    pub m: f64,
}

impl NoiseScenario {
    pub fn new(kind: ScenarioKind, m: f64) -> Self {
        Self { kind, m }
    }

    /// `(M1, M2)` from `1/T2 = 1/T_phi + 1/(2 T1)`.
    pub fn coherence(&self) -> (f64, f64) {
        let m = self.m;
        match self.kind {
            ScenarioKind::RelaxationDephasing => (m, 2.0 * m / 3.0),
            ScenarioKind::PureRelaxation => (m, 2.0 * m),
            ScenarioKind::PureDephasing => (f64::INFINITY, m),
        }
    }

    pub fn model(&self) -> Result<NoiseModel> {
        let (m1, m2) = self.coherence();
        NoiseModel::new(m1, m2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub m1: f64,
    pub m2: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl NoiseModel {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        let (px, py, pz) = derive_probabilities(m1, m2)?;
        let (sx, sy, sz) = stddevs(px, py, pz)?;
        Ok(Self {
            m1,
            m2,
            px,
            py,
            pz,
            sx,
            sy,
            sz,
        })
    }

    /// No noise at all (`M1 = M2 = inf`).
    pub fn noiseless() -> Self {
        Self::new(f64::INFINITY, f64::INFINITY).expect("infinite coherence is valid")
    }

    pub fn is_noiseless(&self) -> bool {
        self.sx == 0.0 && self.sy == 0.0 && self.sz == 0.0
    }

    pub fn stddevs(&self) -> (f64, f64, f64) {
        (self.sx, self.sy, self.sz)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseMode {
    /// Exact product of three axis rotations.
    #[default]
    ThreeRotation,
    /// One rotation by `2 |nu|` about `nu / |nu|`.
    SingleRotation,
}

impl FromStr for NoiseMode {
    type Err = QsimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three" => Ok(Self::ThreeRotation),
            "single" => Ok(Self::SingleRotation),
            other => Err(QsimError::InvalidScenario(format!("unknown noise mode `{other}`"))),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ThreeRotation => "three",
            Self::SingleRotation => "single",
        })
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gate for fixed angles `(nu_x, nu_y, nu_z)`.
pub fn noise_gate(nu: (f64, f64, f64), mode: NoiseMode) -> Gate1Q {
    let (x, y, z) = nu;
    match mode {
        NoiseMode::ThreeRotation => {
            let (sx, cx) = x.sin_cos();
            let (sy, cy) = y.sin_cos();
            let (sz, cz) = z.sin_cos();
            let rx = Gate1Q::from_matrix_unchecked([[c(cx, 0.0), c(0.0, -sx)], [c(0.0, -sx), c(cx, 0.0)]]);
            let ry = Gate1Q::from_matrix_unchecked([[c(cy, 0.0), c(-sy, 0.0)], [c(sy, 0.0), c(cy, 0.0)]]);
            let rz = Gate1Q::from_matrix_unchecked([[c(cz, -sz), c(0.0, 0.0)], [c(0.0, 0.0), c(cz, sz)]]);
            rx.mul(&ry).mul(&rz)
        }
        NoiseMode::SingleRotation => {
            let norm = (x * x + y * y + z * z).sqrt();
            if norm == 0.0 {
                return Gate1Q::identity();
            }
            let (s, co) = norm.sin_cos();
            let (nx, ny, nz) = (x / norm * s, y / norm * s, z / norm * s);
            // cos I - i sin (n . sigma)
            Gate1Q::from_matrix_unchecked([[c(co, -nz), c(-ny, -nx)], [c(ny, -nx), c(co, nz)]])
        }
    }
}

/// Random stream of one trajectory. Antithetic partners share a stream and
/// negate every angle.
#[derive(Clone, Debug)]
pub struct TrajectoryRng {
    rng: ChaCha20Rng,
    sign: f64,
}

impl TrajectoryRng {
    /// Stream keyed by SHA-256 of the little-endian `(master_seed, index)`.
    pub fn new(master_seed: u64, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(master_seed.to_le_bytes());
        h.update(index.to_le_bytes());
        let seed: [u8; 32] = h.finalize().into();
        Self {
            rng: ChaCha20Rng::from_seed(seed),
            sign: 1.0,
        }
    }

    /// Stream for trajectory `index`; with `antithetic`, trajectories `2k` and
    /// `2k + 1` share stream `k` with opposite signs.
    pub fn for_trajectory(master_seed: u64, index: u64, antithetic: bool) -> Self {
        if antithetic {
            let mut r = Self::new(master_seed, index / 2);
            if index % 2 == 1 {
                r.sign = -1.0;
            }
            r
        } else {
            Self::new(master_seed, index)
        }
    }

    pub fn normal(&mut self) -> f64 {
        let v: f64 = StandardNormal.sample(&mut self.rng);
        self.sign * v
    }

    /// Draws `(nu_x, nu_y, nu_z)` in that order.
    pub fn angles(&mut self, s: (f64, f64, f64)) -> (f64, f64, f64) {
        let x = self.normal() * s.0;
        let y = self.normal() * s.1;
        let z = self.normal() * s.2;
        (x, y, z)
    }
}

pub fn sample_noise_gate(rng: &mut TrajectoryRng, s: (f64, f64, f64), mode: NoiseMode) -> Gate1Q {
    noise_gate(rng.angles(s), mode)
}

/// One gate standing in for `t` idle steps: per-axis deviations `s * sqrt(t)`.
pub fn fuse_idle_noise(rng: &mut TrajectoryRng, t: u64, s: (f64, f64, f64), mode: NoiseMode) -> Gate1Q {
    let r = (t as f64).sqrt();
    sample_noise_gate(rng, (s.0 * r, s.1 * r, s.2 * r), mode)
}

/// Independent noise gate on every qubit, qubits in ascending order.
pub fn apply_noise_step(
    state: &mut StateVector,
    model: &NoiseModel,
    mode: NoiseMode,
    rng: &mut TrajectoryRng,
) -> Result<()> {
    if model.is_noiseless() {
        return Ok(());
    }
    for q in 0..state.num_qubits() {
        let g = sample_noise_gate(rng, model.stddevs(), mode);
        state.apply_1q(&g, q)?;
    }
    Ok(())
}

pub const DEFAULT_TRAJECTORIES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub num_trajectories: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses the ambient pool. Never affects results.
    pub workers: Option<usize>,
    pub mode: NoiseMode,
    pub fuse_idle: bool,
    /// Pair trajectories with negated noise angles.
    pub antithetic: bool,
    /// Let gates on disjoint qubits share a time step.
    pub layered: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            num_trajectories: DEFAULT_TRAJECTORIES,
            master_seed: 0,
            workers: None,
            mode: NoiseMode::default(),
            fuse_idle: false,
            antithetic: false,
            layered: false,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trajectories == 0 {
            return Err(QsimError::Contract("at least one trajectory is required".into()));
        }
        if self.antithetic && self.num_trajectories % 2 == 1 {
            return Err(QsimError::Contract(
                "antithetic sampling needs an even trajectory count".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(QsimError::Contract("worker count must be positive".into()));
        }
        Ok(())
    }

    /// Runs `f` on a pool sized by `workers`.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build()
                    .map_err(|e| QsimError::Contract(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Runs `circuit` from `|reference>` with noise after every time step.
pub fn run_noisy_trajectory(
    circuit: &Circuit,
    reference: u64,
    model: &NoiseModel,
    mode: NoiseMode,
    fuse_idle: bool,
    rng: &mut TrajectoryRng,
) -> Result<StateVector> {
    let n = circuit.num_qubits();
    let mut state = init_basis_state(n, reference)?;
    let s = model.stddevs();
    if model.is_noiseless() {
        state.apply_circuit(circuit)?;
        return Ok(state);
    }
    if !fuse_idle {
        for step in circuit.steps() {
            for op in step {
                state.apply_op(op)?;
            }
            apply_noise_step(&mut state, model, mode, rng)?;
        }
        return Ok(state);
    }
    let mut pending = vec![0u64; n];
    let mut flush = |state: &mut StateVector, q: usize, pending: &mut [u64]| -> Result<()> {
        if pending[q] > 0 {
            let g = fuse_idle_noise(rng, pending[q], s, mode);
            state.apply_1q(&g, q)?;
            pending[q] = 0;
        }
        Ok(())
    };
    for step in circuit.steps() {
        for op in step {
            for q in 0..n {
                if op.qubit_mask() >> q & 1 == 1 {
                    flush(&mut state, q, &mut pending)?;
                }
            }
            state.apply_op(op)?;
        }
        pending.iter_mut().for_each(|p| *p += 1);
    }
    for q in 0..n {
        flush(&mut state, q, &mut pending)?;
    }
    Ok(state)
}

/// Observable values of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub index: usize,
    /// `<psi|O|psi>` per observable (real coefficient parts).
    pub values: Vec<f64>,
    /// Per-term `<psi|P_gamma|psi>` per observable.
    pub term_values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableStats {
    pub mean: f64,
    /// Sample standard deviation over trajectories.
    pub std_dev: f64,
    /// Standard error of `mean`; over antithetic pair averages when pairing is on.
    pub std_error: f64,
    /// Trajectory average of each term's expectation.
    pub term_means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub records: Vec<TrajectoryRecord>,
    pub stats: Vec<ObservableStats>,
    pub gate_count: usize,
    pub time_steps: usize,
}

/// Mean, sample standard deviation and standard error, summed in index order.
pub fn summarize(values: &[f64], antithetic: bool) -> (f64, f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    // Centered on the first value so a constant ensemble has zero spread exactly.
    let v0 = values[0];
    let mean = v0 + values.iter().map(|x| x - v0).sum::<f64>() / n as f64;
    let var = |xs: &[f64], m: f64| -> f64 {
        if xs.len() < 2 {
            0.0
        } else {
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
        }
    };
    let std_dev = var(values, mean).sqrt();
    let std_error = if antithetic && n >= 2 {
        let pairs: Vec<f64> = values.chunks(2).map(|p| p.iter().sum::<f64>() / p.len() as f64).collect();
        (var(&pairs, mean) / pairs.len() as f64).sqrt()
    } else {
        std_dev / (n as f64).sqrt()
    };
    (mean, std_dev, std_error)
}

/// Runs the ensemble; trajectory `j` depends only on `(master_seed, j)`.
pub fn run_trajectories(
    circuit: &Circuit,
    reference: u64,
    model: &NoiseModel,
    observables: &[PauliSum],
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryResult> {
    cfg.validate()?;
    for o in observables {
        if o.num_qubits() != circuit.num_qubits() {
            return Err(QsimError::SizeMismatch {
                expected: circuit.num_qubits(),
                actual: o.num_qubits(),
            });
        }
    }
    let circuit = if cfg.layered { circuit.layered() } else { circuit.clone() };
    let one = |j: usize| -> Result<TrajectoryRecord> {
        let mut rng = TrajectoryRng::for_trajectory(cfg.master_seed, j as u64, cfg.antithetic);
        let state = run_noisy_trajectory(&circuit, reference, model, cfg.mode, cfg.fuse_idle, &mut rng)?;
        let mut values = Vec::with_capacity(observables.len());
        let mut term_values = Vec::with_capacity(observables.len());
        for o in observables {
            let terms = state.expectation_terms(o)?;
            values.push(o.terms().iter().zip(&terms).map(|(t, v)| t.coeff.re * v).sum());
            term_values.push(terms);
        }
        Ok(TrajectoryRecord {
            index: j,
            values,
            term_values,
        })
    };
    let records: Vec<TrajectoryRecord> = cfg.install(|| {
        (0..cfg.num_trajectories)
            .into_par_iter()
            .with_min_len(1)
            .map(one)
            .collect::<Result<Vec<_>>>()
    })??;
    let stats = (0..observables.len())
        .map(|k| {
            let vals: Vec<f64> = records.iter().map(|r| r.values[k]).collect();
            let (mean, std_dev, std_error) = summarize(&vals, cfg.antithetic);
            let nterms = observables[k].len();
            let term_means = (0..nterms)
                .map(|t| records.iter().map(|r| r.term_values[k][t]).sum::<f64>() / records.len() as f64)
                .collect();
            ObservableStats {
                mean,
                std_dev,
                std_error,
                term_means,
            }
        })
        .collect();
    Ok(TrajectoryResult {
        records,
        stats,
        gate_count: circuit.gate_count(),
        time_steps: circuit.num_time_steps(),
    })
}

/// Settings read from a `key=value` list.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub scenario: Option<NoiseScenario>,
    pub mode: Option<NoiseMode>,
    pub fuse_idle: Option<bool>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
}

impl NoiseSpec {
    /// Applies the optional overrides to `cfg`.
    pub fn apply_to(&self, cfg: &mut TrajectoryConfig) {
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(f) = self.fuse_idle {
            cfg.fuse_idle = f;
        }
        if let Some(t) = self.trajectories {
            cfg.num_trajectories = t;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
    }
}

/// Parses `scenario=t1tphi|relax|dephase`, `M=`, `M1=`, `M2=`,
/// `mode=three|single`, `fuse_idle=on|off`, `traj=`, `seed=`, separated by
/// commas or whitespace.
pub fn parse_noise_config(text: &str) -> Result<NoiseSpec> {
    let bad = |m: String| QsimError::InvalidScenario(m);
    let mut kind = None;
    let (mut m, mut m1, mut m2) = (None, None, None);
    let mut spec = NoiseSpec {
        model: NoiseModel::noiseless(),
        scenario: None,
        mode: None,
        fuse_idle: None,
        trajectories: None,
        seed: None,
    };
    for item in text.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, found `{item}`")))?;
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("`{key}` needs a number, found `{value}`")))
        };
        match key {
            "scenario" => kind = Some(value.parse::<ScenarioKind>()?),
            "M" => m = Some(real()?),
            "M1" => m1 = Some(real()?),
            "M2" => m2 = Some(real()?),
            "mode" => spec.mode = Some(value.parse()?),
            "fuse_idle" => {
                spec.fuse_idle = Some(match value {
                    "on" => true,
                    "off" => false,
                    _ => return Err(bad(format!("fuse_idle must be on or off, found `{value}`"))),
                })
            }
            "traj" => {
                spec.trajectories = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("traj needs a positive integer, found `{value}`")))?,
                )
            }
            "seed" => {
                spec.seed = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("seed needs an unsigned integer, found `{value}`")))?,
                )
            }
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    spec.model = match (kind, m, m1, m2) {
        (Some(kind), Some(m), None, None) => {
            let sc = NoiseScenario::new(kind, m);
            spec.scenario = Some(sc);
            sc.model()?
        }
        (None, None, Some(m1), Some(m2)) => NoiseModel::new(m1, m2)?,
        (None, Some(m), None, None) => NoiseModel::new(m, m)?,
        (None, None, None, None) => NoiseModel::noiseless(),
        _ => {
            return Err(bad(
                "give either scenario with M, or both M1 and M2".into(),
            ))
        }
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{PauliString, PauliTerm};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn probabilities() {
        let (px, py, pz) = derive_probabilities(7.0, 7.0).unwrap();
        let p = (1.0 - (-1.0f64 / 7.0).exp()) / 4.0;
        assert!(close(px, p, 1e-15) && close(py, p, 1e-15) && close(pz, p, 1e-15));
        let (px, py, pz) = derive_probabilities(f64::INFINITY, 3.0).unwrap();
        assert_eq!((px, py), (0.0, 0.0));
        assert!(close(pz, (1.0 - (-1.0f64 / 3.0).exp()) / 2.0, 1e-15));
        let (px, _, pz) = derive_probabilities(1.0, 2.0).unwrap();
        assert!(close(px, 0.158_030_139_707_139_42, 1e-15));
        assert!(close(pz, 0.038_704_530_436_543_87, 1e-15));
        assert!(matches!(derive_probabilities(1.0, 2.5), Err(QsimError::InvalidScenario(_))));
        assert!(derive_probabilities(0.0, 1.0).is_err());
    }

    #[test]
    fn deviations() {
        assert_eq!(stddevs(0.0, 0.0, 0.0).unwrap(), (0.0, 0.0, 0.0));
        let (s, _, _) = stddevs(0.158_030_13, 0.0, 0.0).unwrap();
        assert!(close(s, 0.414_742_147_879_918_9, 1e-12));
        // 1 - 1e-300 rounds to 1.0; the largest double below one is the edge.
        let (s, _, _) = stddevs(1.0 - f64::EPSILON / 2.0, 0.0, 0.0).unwrap();
        assert!(s.is_finite() && s > 6.0);
        assert!(matches!(stddevs(1.0, 0.0, 0.0), Err(QsimError::Divergence(_))));
    }

    #[test]
    fn scenarios() {
        let (m1, m2) = NoiseScenario::new(ScenarioKind::RelaxationDephasing, 30.0).coherence();
        // 1/T_phi = 1/T2 - 1/(2 T1) recovers T_phi = M.
        assert!(close(1.0 / (1.0 / m2 - 0.5 / m1), 30.0, 1e-12));
        assert_eq!(NoiseScenario::new(ScenarioKind::PureRelaxation, 5.0).coherence(), (5.0, 10.0));
        let m = NoiseScenario::new(ScenarioKind::PureDephasing, 5.0).model().unwrap();
        assert_eq!((m.px, m.py), (0.0, 0.0));
    }

    #[test]
    fn gates_are_unitary() {
        let mut rng = TrajectoryRng::new(3, 0);
        for mode in [NoiseMode::ThreeRotation, NoiseMode::SingleRotation] {
            for _ in 0..100 {
                let g = sample_noise_gate(&mut rng, (0.3, 0.2, 0.5), mode);
                assert!(g.unitarity_error() <= 1e-14);
            }
            assert_eq!(sample_noise_gate(&mut rng, (0.0, 0.0, 0.0), mode), Gate1Q::identity());
        }
    }

    #[test]
    fn pure_z_noise_is_diagonal() {
        let mut rng = TrajectoryRng::new(1, 1);
        let m = sample_noise_gate(&mut rng, (0.0, 0.0, 0.4), NoiseMode::ThreeRotation).matrix();
        assert_eq!(m[0][1], c(0.0, 0.0));
        assert_eq!(m[1][0], c(0.0, 0.0));
    }

    #[test]
    fn single_and_three_rotation_agree_to_second_order() {
        let mut rng = TrajectoryRng::new(11, 0);
        for _ in 0..200 {
            let nu = rng.angles((3e-4, 3e-4, 3e-4));
            let norm = (nu.0 * nu.0 + nu.1 * nu.1 + nu.2 * nu.2).sqrt();
            if norm > 1e-3 {
                continue;
            }
            let a = noise_gate(nu, NoiseMode::ThreeRotation).matrix();
            let b = noise_gate(nu, NoiseMode::SingleRotation).matrix();
            let diff = (0..4).map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).norm()).fold(0.0, f64::max);
            assert!(diff <= 5e-6, "{diff}");
        }
    }

    #[test]
    fn streams_are_reproducible_and_antithetic() {
        let mut a = TrajectoryRng::new(9, 4);
        let mut b = TrajectoryRng::new(9, 4);
        assert_eq!(a.normal(), b.normal());
        let mut even = TrajectoryRng::for_trajectory(9, 6, true);
        let mut odd = TrajectoryRng::for_trajectory(9, 7, true);
        assert_eq!(even.normal(), -odd.normal());
    }

    fn z0() -> PauliSum {
        PauliSum::from_terms(1, vec![PauliTerm::new(c(1.0, 0.0), "Z0".parse::<PauliString>().unwrap())]).unwrap()
    }

    #[test]
    fn noiseless_ensemble_is_pristine() {
        let mut circ = Circuit::new(1);
        circ.push_1q(Gate1Q::ry(0.7), 0).unwrap();
        let cfg = TrajectoryConfig {
            num_trajectories: 8,
            ..Default::default()
        };
        let r = run_trajectories(&circ, 0, &NoiseModel::noiseless(), &[z0()], &cfg).unwrap();
        assert!(close(r.stats[0].mean, 0.7f64.cos(), 1e-15));
        assert_eq!(r.stats[0].std_dev, 0.0);
        let empty = run_trajectories(&Circuit::new(1), 1, &NoiseModel::new(5.0, 5.0).unwrap(), &[z0()], &cfg).unwrap();
        assert!(empty.records.iter().all(|r| r.values[0] == -1.0));
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let mut circ = Circuit::new(2);
        circ.push_1q(Gate1Q::h(), 0).unwrap();
        circ.push_cnot(0, 1).unwrap();
        let model = NoiseModel::new(20.0, 20.0).unwrap();
        let mut cfg = TrajectoryConfig {
            num_trajectories: 40,
            master_seed: 5,
            ..Default::default()
        };
        let obs = [PauliSum::from_terms(2, vec![PauliTerm::new(c(1.0, 0.0), "X0 X1".parse::<PauliString>().unwrap())]).unwrap()];
        cfg.workers = Some(1);
        let a = run_trajectories(&circ, 0, &model, &obs, &cfg).unwrap();
        cfg.workers = Some(3);
        let b = run_trajectories(&circ, 0, &model, &obs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_parsing() {
        let s = parse_noise_config("scenario=t1tphi,M=1e6,mode=single,fuse_idle=on,traj=10,seed=7").unwrap();
        assert_eq!(s.scenario.unwrap().kind, ScenarioKind::RelaxationDephasing);
        assert_eq!(s.model.m1, 1e6);
        assert_eq!(s.mode, Some(NoiseMode::SingleRotation));
        assert_eq!((s.fuse_idle, s.trajectories, s.seed), (Some(true), Some(10), Some(7)));
        let s = parse_noise_config("M1=50 M2=40").unwrap();
        assert_eq!((s.model.m1, s.model.m2), (50.0, 40.0));
        assert!(parse_noise_config("scenario=bogus,M=1").is_err());
        assert!(parse_noise_config("M1=5").is_err());
        assert!(parse_noise_config("M1=5,M2=11").is_err());
        assert!(parse_noise_config("").unwrap().model.is_noiseless());
    }
}
