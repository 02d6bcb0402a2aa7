use std::f64::consts::PI;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use qsim::dist::{run_inproc, run_tcp_loopback, Partition, TcpTransport, Transport, DEFAULT_CHUNK_SIZE};
use qsim::experiments::{
    calibrate, describe_mode, estimator_report, find_m_trot, fmt17, gate_error_experiment, noise_sweep,
    pristine_state, sweep_csv, trajectory_csv, CnotErrorScope, GateErrorSpec,
};
use qsim::fermion::parse_fermion_file;
use qsim::mapping::particle_number_observable;
use qsim::noise::{
    parse_noise_config, run_trajectories, NoiseMode, NoiseModel, NoiseScenario, ScenarioKind, TrajectoryConfig,
    TrajectoryRng, DEFAULT_TRAJECTORIES,
};
use qsim::pauli::{parse_pauli_file, write_pauli_file};
use qsim::statevec::{parse_circuit, write_circuit};
use qsim::ucc::{
    build_ucc_circuit, parse_amplitudes, qft_circuit, TermOrder, TrotterPlan, DEFAULT_AMPLITUDE_CUTOFF,
};
use qsim::{fermion_to_pauli, init_basis_state, Circuit, Mapping, PauliSum, QsimError, Result};

#[derive(Parser)]
#[command(name = "qsim", version, about = "Noisy state-vector simulation of UCC state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map a fermionic operator file to a Pauli operator file.
    Transform(TransformArgs),
    /// Build a UCC state-preparation circuit from cluster amplitudes.
    Ucc(UccArgs),
    /// Run noisy trajectories of a circuit and estimate observables.
    Run(RunArgs),
    /// Energy and particle-number errors over a list of noise scenarios.
    Sweep(SweepArgs),
    /// Recover coherence parameters from single-qubit decays.
    Calibrate(CalibrateArgs),
    /// Locate the crossover between Trotter error and noise error.
    Mtrot(MTrotArgs),
    /// Particle-number error from systematic gate errors.
    GateError(GateErrorArgs),
    /// Build and run the quantum Fourier transform.
    Qft(QftArgs),
    /// Run a circuit over partitioned ranks.
    DistRun(DistArgs),
}

#[derive(Args)]
struct Output {
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, default_value = "jw")]
    mapping: Mapping,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Groups,
    Canonical,
}

impl From<OrderArg> for TermOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::Groups => TermOrder::FlipPatternGroups,
            OrderArg::Canonical => TermOrder::Canonical,
        }
    }
}

#[derive(Args)]
struct UccArgs {
    #[arg(long)]
    amps: PathBuf,
    #[arg(long, default_value = "jw")]
    mapping: Mapping,
    #[arg(long, default_value_t = 1)]
    eta: usize,
    #[arg(long, value_enum, default_value = "groups")]
    order: OrderArg,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE_CUTOFF)]
    cutoff: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the Pauli generator.
    #[arg(long)]
    generator_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TrajArgs {
    /// Noise settings, e.g. `scenario=t1tphi,M=1e6` or `M1=100,M2=150`.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    traj: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<NoiseMode>,
    /// Merge consecutive idle noise steps on each qubit.
    #[arg(long)]
    fuse_idle: bool,
    /// Pair trajectories with negated noise angles.
    #[arg(long)]
    antithetic: bool,
    /// Let gates on disjoint qubits share a time step.
    #[arg(long)]
    layered: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    ham: PathBuf,
    /// Also estimate the particle number under this mapping.
    #[arg(long)]
    number: Option<Mapping>,
    /// Reference basis state when the circuit file has none.
    #[arg(long)]
    reference: Option<String>,
    #[command(flatten)]
    traj: TrajArgs,
    /// Per-trajectory CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    ham: PathBuf,
    /// Mapping of the particle-number observable.
    #[arg(long, default_value = "jw")]
    mapping: Mapping,
    #[arg(long)]
    reference: Option<String>,
    /// Scenarios as `kind:M`, comma separated, e.g. `t1tphi:1e5,dephase:1e6`.
    #[arg(long, required = true, value_delimiter = ',')]
    scenario: Vec<String>,
    #[command(flatten)]
    traj: TrajArgs,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long = "M1")]
    m1: f64,
    #[arg(long = "M2")]
    m2: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[command(flatten)]
    traj: TrajArgs,
    /// Decay curves as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct MTrotArgs {
    #[arg(long)]
    amps: PathBuf,
    #[arg(long)]
    ham: PathBuf,
    #[arg(long, default_value = "jw")]
    mapping: Mapping,
    #[arg(long, default_value = "dephase")]
    kind: ScenarioKind,
    #[arg(long, default_value_t = 2.0)]
    lo: f64,
    #[arg(long, default_value_t = 7.0)]
    hi: f64,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_AMPLITUDE_CUTOFF)]
    cutoff: f64,
    #[command(flatten)]
    traj: TrajArgs,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    All,
    BeforeFourth,
}

#[derive(Args)]
struct GateErrorArgs {
    /// Qubit counts, multiples of 4.
    #[arg(long, required = true, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    theta1: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    theta2: f64,
    /// Hadamard over-rotation in radians.
    #[arg(long, default_value_t = 1e-4)]
    h_err: f64,
    /// Y-basis over-rotation in radians.
    #[arg(long, default_value_t = 1e-4)]
    yb_err: f64,
    /// Excess angle of the controlled X rotation replacing CNOT.
    #[arg(long, default_value_t = 1e-3)]
    cnot_err: f64,
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeArg,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct QftArgs {
    #[arg(long)]
    n: usize,
    /// Input basis state index.
    #[arg(long, default_value_t = 0)]
    input: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Only build the circuit.
    #[arg(long)]
    no_run: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Inproc,
    Tcp,
}

#[derive(Args)]
struct DistArgs {
    #[arg(long)]
    ranks: usize,
    #[arg(long, value_enum, default_value = "inproc")]
    transport: TransportArg,
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    ham: Option<PathBuf>,
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trajectory index of the noise stream.
    #[arg(long, default_value_t = 0)]
    traj_index: u64,
    #[arg(long)]
    mode: Option<NoiseMode>,
    #[arg(long, default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk: usize,
    /// This process's rank; without it every rank runs here.
    #[arg(long)]
    rank: Option<usize>,
    /// Listen addresses of all ranks, comma separated.
    #[arg(long, value_delimiter = ',')]
    peers: Vec<SocketAddr>,
    /// Write the gathered amplitudes (rank 0).
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform(a) => transform(a),
        Command::Ucc(a) => ucc(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Mtrot(a) => mtrot(a),
        Command::GateError(a) => gate_error(a),
        Command::Qft(a) => qft(a),
        Command::DistRun(a) => dist_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| QsimError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| QsimError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Git-style blob hash over SHA-256.
fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

struct Inputs(Vec<(String, String)>);

impl Inputs {
    fn new() -> Self {
        Inputs(Vec::new())
    }

    fn load(&mut self, path: &Path) -> Result<String> {
        let text = read(path)?;
        self.0.push((path.display().to_string(), content_hash(&text)));
        Ok(text)
    }

    fn json(&self) -> Value {
        self.0.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect()
    }
}

fn emit(output: &Output, summary: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&summary).map_err(|e| QsimError::Io(std::io::Error::other(e)))? + "\n";
    match &output.json {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("QSIM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| QsimError::Contract(format!("QSIM_THREADS=`{v}` is not a count"))),
        _ => Ok(None),
    }
}

fn parse_reference(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0b") {
        Some(bits) => u64::from_str_radix(bits, 2),
        None => t.parse(),
    };
    parsed.map_err(|_| QsimError::Contract(format!("bad reference `{text}`")))
}

fn load_circuit(inputs: &mut Inputs, path: &Path, reference: Option<&str>) -> Result<(Circuit, u64)> {
    let file = parse_circuit(&inputs.load(path)?)?;
    let reference = match reference {
        Some(r) => parse_reference(r)?,
        None => file.reference.unwrap_or(0),
    };
    Ok((file.circuit, reference))
}

fn load_hamiltonian(inputs: &mut Inputs, path: &Path, n: usize) -> Result<PauliSum> {
    let (m, h) = parse_pauli_file(&inputs.load(path)?)?;
    if m != n {
        return Err(QsimError::SizeMismatch { expected: n, actual: m });
    }
    Ok(h)
}

/// Trajectory settings and noise model from the shared flags.
fn trajectory_setup(a: &TrajArgs) -> Result<(NoiseModel, Option<NoiseScenario>, TrajectoryConfig)> {
    let mut cfg = TrajectoryConfig {
        num_trajectories: DEFAULT_TRAJECTORIES,
        workers: threads()?,
        ..Default::default()
    };
    let (model, scenario) = match &a.noise {
        Some(text) => {
            let spec = parse_noise_config(text)?;
            spec.apply_to(&mut cfg);
            (spec.model, spec.scenario)
        }
        None => (NoiseModel::noiseless(), None),
    };
    if let Some(t) = a.traj {
        cfg.num_trajectories = t;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    cfg.fuse_idle |= a.fuse_idle;
    cfg.antithetic = a.antithetic;
    cfg.layered = a.layered;
    cfg.validate()?;
    Ok((model, scenario, cfg))
}

fn config_json(cfg: &TrajectoryConfig) -> Value {
    json!({
        "trajectories": cfg.num_trajectories,
        "master_seed": cfg.master_seed,
        "noise_mode": describe_mode(cfg.mode),
        "fuse_idle": cfg.fuse_idle,
        "antithetic": cfg.antithetic,
        "layered": cfg.layered,
        "over_rotation_model": "excess rotation about the gate's own axis",
    })
}

fn model_json(model: &NoiseModel, scenario: Option<&NoiseScenario>) -> Value {
    json!({
        "scenario": scenario.map(|s| s.kind.to_string()),
        "M": scenario.map(|s| s.m),
        "M1": model.m1,
        "M2": model.m2,
        "px": model.px,
        "py": model.py,
        "pz": model.pz,
    })
}

fn transform(a: TransformArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let (n, f) = parse_fermion_file(&inputs.load(&a.input)?)?;
    let h = fermion_to_pauli(&f, a.mapping, n)?;
    let text = write_pauli_file(&h);
    write(&a.out, &text)?;
    emit(
        &a.output,
        json!({
            "command": "transform",
            "mapping": a.mapping.to_string(),
            "modes": n,
            "fermion_terms": f.terms().len(),
            "pauli_terms": h.len(),
            "output": { "path": a.out.display().to_string(), "sha256": content_hash(&text) },
            "inputs": inputs.json(),
        }),
    )
}

fn ucc(a: UccArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let amps = parse_amplitudes(&inputs.load(&a.amps)?)?;
    let warnings = amps.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let plan = TrotterPlan::new(a.eta)?.with_order(a.order.into());
    let u = build_ucc_circuit(&amps, a.mapping, &plan, a.cutoff)?;
    let text = write_circuit(&u.circuit, Some(u.reference));
    write(&a.out, &text)?;
    if let Some(p) = &a.generator_out {
        write(p, &write_pauli_file(&u.generator))?;
    }
    emit(
        &a.output,
        json!({
            "command": "ucc",
            "mapping": a.mapping.to_string(),
            "eta": a.eta,
            "cutoff": a.cutoff,
            "modes": amps.n_modes,
            "electrons": amps.n_electrons,
            "generator_terms": u.generator.len(),
            "gate_count": u.gate_count(),
            "time_steps": u.circuit.num_time_steps(),
            "reference": u.reference,
            "warnings": warnings,
            "output": { "path": a.out.display().to_string(), "sha256": content_hash(&text) },
            "inputs": inputs.json(),
        }),
    )
}

fn run(a: RunArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let (circuit, reference) = load_circuit(&mut inputs, &a.circuit, a.reference.as_deref())?;
    let n = circuit.num_qubits();
    let h = load_hamiltonian(&mut inputs, &a.ham, n)?;
    let (model, scenario, cfg) = trajectory_setup(&a.traj)?;
    let mut observables = vec![h];
    let mut names = vec!["energy".to_string()];
    if let Some(m) = a.number {
        observables.push(particle_number_observable(n, m)?);
        names.push("particle_number".to_string());
    }
    let ens = run_trajectories(&circuit, reference, &model, &observables, &cfg)?;
    let pristine = pristine_state(&circuit, reference)?;
    let mut reports = serde_json::Map::new();
    for (k, (name, obs)) in names.iter().zip(&observables).enumerate() {
        let r = estimator_report(&pristine, obs, &ens, k)?;
        reports.insert(name.clone(), serde_json::to_value(r).map_err(|e| QsimError::Io(std::io::Error::other(e)))?);
    }
    if let Some(p) = &a.csv {
        write(p, &trajectory_csv(&names, &ens))?;
    }
    emit(
        &a.output,
        json!({
            "command": "run",
            "qubits": n,
            "reference": reference,
            "gate_count": ens.gate_count,
            "time_steps": ens.time_steps,
            "noise": model_json(&model, scenario.as_ref()),
            "config": config_json(&cfg),
            "seeds": { "master_seed": cfg.master_seed },
            "reports": reports,
            "inputs": inputs.json(),
        }),
    )
}

fn parse_scenario(text: &str) -> Result<NoiseScenario> {
    let (kind, m) = text
        .split_once(':')
        .ok_or_else(|| QsimError::InvalidScenario(format!("`{text}` is not kind:M")))?;
    let m: f64 = m
        .trim()
        .parse()
        .map_err(|_| QsimError::InvalidScenario(format!("bad M in `{text}`")))?;
    Ok(NoiseScenario::new(kind.trim().parse()?, m))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let (circuit, reference) = load_circuit(&mut inputs, &a.circuit, a.reference.as_deref())?;
    let n = circuit.num_qubits();
    let h = load_hamiltonian(&mut inputs, &a.ham, n)?;
    let (_, _, cfg) = trajectory_setup(&a.traj)?;
    let scenarios = a.scenario.iter().map(|s| parse_scenario(s)).collect::<Result<Vec<_>>>()?;
    let number = particle_number_observable(n, a.mapping)?;
    let rows = noise_sweep(&circuit, reference, &h, &number, &scenarios, &cfg)?;
    let csv = sweep_csv(&rows);
    if let Some(p) = &a.csv {
        write(p, &csv)?;
    }
    let rows_json: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "scenario": r.scenario.kind.to_string(),
                "M": r.scenario.m,
                "energy": r.energy,
                "particle_number": r.particle,
                "error_times_M": r.error_times_m,
            })
        })
        .collect();
    emit(
        &a.output,
        json!({
            "command": "sweep",
            "qubits": n,
            "reference": reference,
            "number_mapping": a.mapping.to_string(),
            "config": config_json(&cfg),
            "seeds": { "master_seed": cfg.master_seed },
            "rows": rows_json,
            "inputs": inputs.json(),
        }),
    )
}

fn calibrate_cmd(a: CalibrateArgs) -> Result<()> {
    let (_, _, cfg) = trajectory_setup(&a.traj)?;
    let fit = cfg.install(|| calibrate(a.m1, a.m2, a.steps, &cfg))??;
    if let Some(p) = &a.csv {
        let mut out = String::from("step,z_decay,z_standard_error,x_decay,x_standard_error\n");
        for t in 0..=a.steps {
            out.push_str(&format!(
                "{t},{},{},{},{}\n",
                fmt17(fit.z_decay.mean[t]),
                fmt17(fit.z_decay.std_error[t]),
                fmt17(fit.x_decay.mean[t]),
                fmt17(fit.x_decay.std_error[t])
            ));
        }
        write(p, &out)?;
    }
    emit(
        &a.output,
        json!({
            "command": "calibrate",
            "M1": a.m1,
            "M2": a.m2,
            "steps": a.steps,
            "M1_fit": fit.m1_fit,
            "M2_fit": fit.m2_fit,
            "M1_relative_error": (fit.m1_fit - a.m1).abs() / a.m1,
            "M2_relative_error": (fit.m2_fit - a.m2).abs() / a.m2,
            "config": config_json(&cfg),
            "seeds": { "master_seed": cfg.master_seed },
        }),
    )
}

fn mtrot(a: MTrotArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let amps = parse_amplitudes(&inputs.load(&a.amps)?)?;
    let h = load_hamiltonian(&mut inputs, &a.ham, amps.n_modes)?;
    let (_, _, cfg) = trajectory_setup(&a.traj)?;
    let r = find_m_trot(&amps, a.mapping, &h, a.kind, (a.lo, a.hi), a.tol, a.cutoff, &cfg)?;
    emit(
        &a.output,
        json!({
            "command": "mtrot",
            "mapping": a.mapping.to_string(),
            "scenario": a.kind.to_string(),
            "bracket_log10": [a.lo, a.hi],
            "tolerance_decades": a.tol,
            "M_trot": r.m_trot,
            "log10_M_trot": r.log10_m,
            "exact_energy": r.exact_energy,
            "evaluations": r.evaluations,
            "config": config_json(&cfg),
            "seeds": { "master_seed": cfg.master_seed },
            "inputs": inputs.json(),
        }),
    )
}

fn gate_error(a: GateErrorArgs) -> Result<()> {
    let mut out = String::from("n,theta1,theta2,particle_error\n");
    let mut rows = Vec::new();
    for &n in &a.n {
        for &theta1 in &a.theta1 {
            let spec = GateErrorSpec {
                n,
                h_overrotation: a.h_err,
                yb_overrotation: a.yb_err,
                cnot_angle: PI + a.cnot_err,
                cnot_scope: match a.scope {
                    ScopeArg::All => CnotErrorScope::All,
                    ScopeArg::BeforeFourth => CnotErrorScope::BeforeFourthRotation,
                },
                theta1,
                theta2: a.theta2,
            };
            let err = gate_error_experiment(&spec)?;
            out.push_str(&format!("{n},{},{},{}\n", fmt17(theta1), fmt17(a.theta2), fmt17(err)));
            rows.push(json!({ "n": n, "theta1": theta1, "particle_error": err }));
        }
    }
    if let Some(p) = &a.csv {
        write(p, &out)?;
    }
    emit(
        &a.output,
        json!({
            "command": "gate-error",
            "h_overrotation": a.h_err,
            "yb_overrotation": a.yb_err,
            "cnot_angle": PI + a.cnot_err,
            "cnot_scope": match a.scope { ScopeArg::All => "all", ScopeArg::BeforeFourth => "before-fourth" },
            "theta2": a.theta2,
            "over_rotation_model": "excess rotation about the gate's own axis",
            "rows": rows,
        }),
    )
}

fn qft(a: QftArgs) -> Result<()> {
    let circuit = qft_circuit(a.n)?;
    if let Some(p) = &a.out {
        write(p, &write_circuit(&circuit, Some(a.input)))?;
    }
    let mut summary = json!({
        "command": "qft",
        "qubits": a.n,
        "input": a.input,
        "gate_count": circuit.gate_count(),
    });
    if !a.no_run {
        let mut s = init_basis_state(a.n, a.input)?;
        s.apply_circuit(&circuit)?;
        let (lo, hi) = s
            .amplitudes()
            .iter()
            .map(|z| z.norm())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        summary["norm"] = json!(s.norm_sqr());
        summary["amplitude_spread"] = json!(hi - lo);
    }
    emit(&a.output, summary)
}

struct RankOutcome {
    rank: usize,
    expectation: Option<f64>,
    norm: f64,
    gate_seq: u64,
    exchange_messages: u64,
    exchange_amplitudes: u64,
    state: Option<String>,
}

fn dist_run(a: DistArgs) -> Result<()> {
    let mut inputs = Inputs::new();
    let (circuit, reference) = load_circuit(&mut inputs, &a.circuit, a.reference.as_deref())?;
    let h = match &a.ham {
        Some(p) => Some(load_hamiltonian(&mut inputs, p, circuit.num_qubits())?),
        None => None,
    };
    let noise = match &a.noise {
        Some(text) => Some(parse_noise_config(text)?),
        None => None,
    };
    let mode = a.mode.or(noise.as_ref().and_then(|s| s.mode)).unwrap_or_default();
    let seed = noise.as_ref().and_then(|s| s.seed).unwrap_or(a.seed);
    let want_state = a.state_out.is_some();

    let body = |t: Box<dyn Transport>| -> Result<RankOutcome> {
        let mut part = Partition::basis(circuit.num_qubits(), reference, t, a.chunk)?;
        match &noise {
            Some(spec) => {
                let mut rng = TrajectoryRng::new(seed, a.traj_index);
                part.run_circuit(&circuit, Some((&spec.model, mode, &mut rng)))?;
            }
            None => part.run_circuit(&circuit, None)?,
        }
        let expectation = match &h {
            Some(h) => Some(part.expectation(h)?),
            None => None,
        };
        let norm = part.norm_sqr()?;
        let state = if want_state {
            part.gather()?.map(|s| {
                let mut out = String::new();
                for (i, z) in s.amplitudes().iter().enumerate() {
                    out.push_str(&format!("{i} {} {}\n", fmt17(z.re), fmt17(z.im)));
                }
                out
            })
        } else {
            None
        };
        let c = part.counters();
        Ok(RankOutcome {
            rank: part.rank(),
            expectation,
            norm,
            gate_seq: part.gate_seq(),
            exchange_messages: c.exchange_messages,
            exchange_amplitudes: c.exchange_amplitudes,
            state,
        })
    };

    let outcomes = match (a.transport, a.rank) {
        (TransportArg::Inproc, _) => run_inproc(a.ranks, body)?,
        (TransportArg::Tcp, None) => run_tcp_loopback(a.ranks, body)?,
        (TransportArg::Tcp, Some(rank)) => {
            if a.peers.len() != a.ranks {
                return Err(QsimError::Contract(format!(
                    "{} peer addresses for {} ranks",
                    a.peers.len(),
                    a.ranks
                )));
            }
            let listener = TcpTransport::bind(a.peers[rank])?;
            let t = TcpTransport::establish(rank, listener, &a.peers, std::time::Duration::from_secs(60))?;
            vec![body(Box::new(t))?]
        }
    };

    if let (Some(p), Some(state)) = (&a.state_out, outcomes.iter().find_map(|o| o.state.as_ref())) {
        write(p, state)?;
    }
    let first = &outcomes[0];
    let ranks: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "rank": o.rank,
                "gate_seq": o.gate_seq,
                "exchange_messages": o.exchange_messages,
                "exchange_amplitudes": o.exchange_amplitudes,
            })
        })
        .collect();
    emit(
        &a.output,
        json!({
            "command": "dist-run",
            "ranks": a.ranks,
            "transport": match a.transport { TransportArg::Inproc => "inproc", TransportArg::Tcp => "tcp" },
            "chunk_size": a.chunk,
            "qubits": circuit.num_qubits(),
            "reference": reference,
            "gate_count": circuit.gate_count(),
            "noise": noise.as_ref().map(|s| model_json(&s.model, s.scenario.as_ref())),
            "seeds": { "master_seed": seed, "trajectory_index": a.traj_index },
            "expectation": first.expectation,
            "norm": first.norm,
            "rank_reports": ranks,
            "inputs": inputs.json(),
        }),
    )
}
