//! `qsvd` command line: decomposition, layer sweeps and protocol demos.
//!
//! Exit codes: 0 success, 1 usage, 2 nonconvergence, 3 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::ansatz::QsvdAnsatz;
use crate::applications::{
    b_register_weights, crosses_bipartition, decode, encode, prob_a_zero, swap_circuit, swap_without_connection,
    synthesize_state, SpectrumSpec,
};
use crate::decomposer::{extract_schmidt, train, ExtractOptions, TrainOptions, DEFAULT_RANK_CUTOFF};
use crate::error::{QsvdError, Result};
use crate::oracle::exact_schmidt;
use crate::seed::derive_seed;
use crate::state_gen;
use crate::statevec::PureState;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qsvd", version, about = "Variational Schmidt decomposition by exact output coincidence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the circuit pair on one state and report its Schmidt spectrum.
    Decompose(DecomposeArgs),
    /// Entropy error versus layer count over an ensemble of random states.
    Sweep(SweepArgs),
    /// Exchange the two registers using only local gates.
    SwapDemo(DemoArgs),
    /// Compress a state onto register B and decode it back.
    EncodeDemo(DemoArgs),
    /// Prepare a random state with a prescribed Schmidt spectrum.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct StateSource {
    /// State file in the JSON state format.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Random state from the uniform-coefficient ensemble.
    #[arg(long, num_args = 2, value_names = ["N_A", "N_B"])]
    pub random: Option<Vec<usize>>,
    /// Random product state.
    #[arg(long, num_args = 2, value_names = ["N_A", "N_B"])]
    pub product: Option<Vec<usize>>,
    /// GHZ state on N qubits, natural bipartition.
    #[arg(long, value_name = "N")]
    pub ghz: Option<usize>,
    /// Two-qubit Bell state.
    #[arg(long)]
    pub bell: bool,
    /// Bundled 6-qubit absolutely maximally entangled state.
    #[arg(long)]
    pub ame: bool,
}

impl StateSource {
    fn describe(&self) -> String {
        if let Some(p) = &self.state {
            format!("file:{}", p.display())
        } else if let Some(v) = &self.random {
            format!("random:{}:{}", v[0], v[1])
        } else if let Some(v) = &self.product {
            format!("product:{}:{}", v[0], v[1])
        } else if let Some(n) = self.ghz {
            format!("ghz:{n}")
        } else if self.bell {
            "bell".into()
        } else {
            "ame".into()
        }
    }

    pub fn load(&self, seed: u64) -> Result<PureState> {
        let state_seed = derive_seed(seed, 0);
        if let Some(p) = &self.state {
            state_gen::load_state(p)
        } else if let Some(v) = &self.random {
            state_gen::random_state(v[0], v[1], state_seed)
        } else if let Some(v) = &self.product {
            state_gen::product_state(v[0], v[1], state_seed)
        } else if let Some(n) = self.ghz {
            state_gen::ghz_state(n)
        } else if self.bell {
            Ok(state_gen::bell_state())
        } else {
            Ok(state_gen::ame_6_2())
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Total number of independent optimizer runs.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Final cost below which a run counts as converged.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 3000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train on sampled costs with this many shots per evaluation.
    #[arg(long)]
    pub shots: Option<usize>,
}

impl TrainArgs {
    fn options(&self) -> TrainOptions {
        TrainOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            restarts: self.restarts,
            seed: derive_seed(self.seed, 1),
            shots: self.shots,
            ..TrainOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the reconstructed Schmidt vectors.
    #[arg(long)]
    pub emit_eigenvectors: bool,
    /// Also report the exact classical decomposition.
    #[arg(long)]
    pub compare_oracle: bool,
    /// Cutoff on lambda^2 for the rank estimate.
    #[arg(long, default_value_t = DEFAULT_RANK_CUTOFF)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Ensemble {
    Random,
    Product,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Total qubits; split into n/2 | n - n/2.
    #[arg(long, default_value_t = 6)]
    pub qubits: usize,
    #[arg(long, default_value_t = 1)]
    pub layers_min: usize,
    #[arg(long, default_value_t = 5)]
    pub layers_max: usize,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Ensemble::Random)]
    pub ensemble: Ensemble,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Largest cost at which the protocol accepts the trained circuit.
    #[arg(long, default_value_t = 1e-6)]
    pub protocol_tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Squared Schmidt coefficients, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub weights: Vec<f64>,
    /// Optional phases, comma separated, one per weight.
    #[arg(long, value_delimiter = ',')]
    pub phases: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub n_a: usize,
    #[arg(long, default_value_t = 2)]
    pub n_b: usize,
    /// Layers of the random local circuits.
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the synthesized state here.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code_for(err: &QsvdError) -> i32 {
    match err {
        QsvdError::Io(_) | QsvdError::Json(_) | QsvdError::Malformed(_) => EXIT_IO,
        QsvdError::Untrained { .. } | QsvdError::CostAboveTolerance { .. } => EXIT_NONCONVERGED,
        _ => EXIT_USAGE,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(&text, out)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SwapDemo(a) => cmd_swap_demo(a),
        Command::EncodeDemo(a) => cmd_encode_demo(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Trains on the selected state and reports the extracted spectrum.
pub fn decompose_report(args: &DecomposeArgs) -> Result<(serde_json::Value, bool)> {
    let state = args.source.load(args.train.seed)?;
    let ansatz = QsvdAnsatz::for_state(&state, args.train.layers);
    let (params, report) = train(&state, &ansatz, &args.train.options())?;
    let extract = ExtractOptions { cutoff: args.cutoff, eigenvectors: args.emit_eigenvectors, ..Default::default() };
    let schmidt = extract_schmidt(&state, &ansatz, &params, &extract)
        .or_else(|_| extract_schmidt(&state, &ansatz, &params, &ExtractOptions { min_weight: 0.0, ..extract }))?;
    let mut value = json!({
        "state": {
            "source": args.source.describe(),
            "n_qubits": state.n_qubits(),
            "n_a": state.n_a(),
        },
        "ansatz": ansatz,
        "training": report,
        "schmidt": schmidt,
        "params": params,
    });
    if args.compare_oracle {
        let ex = exact_schmidt(&state);
        let squared = ex.squared();
        let estimated = value["schmidt"]["coefficients"]
            .as_array()
            .map(|a| a.iter().filter_map(|x| x.as_f64()).map(|x| x * x).collect::<Vec<_>>())
            .unwrap_or_default();
        let max_dev = squared
            .iter()
            .zip(estimated.iter().chain(std::iter::repeat(&0.0)))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        value["oracle"] = json!({
            "coefficients": ex.values,
            "entropy_bits": ex.entropy_bits,
            "entropy_abs_error": (ex.entropy_bits - value["schmidt"]["von_neumann_entropy"].as_f64().unwrap_or(f64::NAN)).abs(),
            "max_squared_deviation": max_dev,
        });
    }
    Ok((value, report.converged))
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<i32> {
    let (value, converged) = decompose_report(args)?;
    emit_json(&value, args.out.as_deref())?;
    Ok(if converged { EXIT_OK } else { EXIT_NONCONVERGED })
}

/// One line of the sweep CSV. Summary lines carry `instance = "mean"` or
/// `"std"`, an empty seed, and the converged fraction in `converged`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub layers: usize,
    pub instance: String,
    pub seed: Option<u64>,
    pub exact_entropy: f64,
    pub estimated_entropy: f64,
    pub relative_error: f64,
    pub final_cost: f64,
    pub converged: String,
    /// `relative`, or `absolute` when the exact entropy is zero.
    pub error_kind: String,
}

impl SweepRecord {
    pub fn is_summary(&self) -> bool {
        self.seed.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub qubits: usize,
    pub layers_min: usize,
    pub layers_max: usize,
    pub instances: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub ensemble: Ensemble,
}

impl From<&SweepArgs> for SweepConfig {
    fn from(a: &SweepArgs) -> Self {
        Self {
            qubits: a.qubits,
            layers_min: a.layers_min,
            layers_max: a.layers_max,
            instances: a.instances,
            seed: a.seed,
            restarts: a.restarts,
            max_iterations: a.max_iterations,
            tolerance: a.tolerance,
            ensemble: a.ensemble,
        }
    }
}

/// Result of one (layers, instance) cell, before formatting.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub layers: usize,
    pub instance: usize,
    pub seed: u64,
    pub exact_entropy: f64,
    pub estimated_entropy: f64,
    pub final_cost: f64,
    pub converged: bool,
    /// Squared coefficients from the circuit and from the oracle.
    pub estimated_squared: Vec<f64>,
    pub exact_squared: Vec<f64>,
}

impl SweepCell {
    /// Relative entropy error, or the absolute error when the exact entropy
    /// vanishes.
    pub fn error(&self) -> (f64, &'static str) {
        let abs = (self.estimated_entropy - self.exact_entropy).abs();
        if self.exact_entropy.abs() < 1e-12 {
            (abs, "absolute")
        } else {
            (abs / self.exact_entropy, "relative")
        }
    }
}

/// Runs every (layers, instance) cell. Cells are ordered by `(layers,
/// instance)` regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    if cfg.layers_min > cfg.layers_max {
        return Err(QsvdError::InvalidOption(format!(
            "layers-min {} exceeds layers-max {}",
            cfg.layers_min, cfg.layers_max
        )));
    }
    if cfg.instances == 0 {
        return Err(QsvdError::InvalidOption("instances must be at least 1".into()));
    }
    if cfg.qubits < 2 {
        return Err(QsvdError::InvalidOption("a sweep needs at least 2 qubits".into()));
    }
    let n_a = cfg.qubits / 2;
    let n_b = cfg.qubits - n_a;
    let jobs: Vec<(usize, usize)> = (cfg.layers_min..=cfg.layers_max)
        .flat_map(|l| (0..cfg.instances).map(move |i| (l, i)))
        .collect();
    let cells: Vec<Result<SweepCell>> = jobs
        .par_iter()
        .map(|&(layers, instance)| {
            let seed = derive_seed(cfg.seed, instance as u64);
            let state = match cfg.ensemble {
                Ensemble::Random => state_gen::random_state(n_a, n_b, seed)?,
                Ensemble::Product => state_gen::product_state(n_a, n_b, seed)?,
            };
            let exact = exact_schmidt(&state);
            let ansatz = QsvdAnsatz::for_state(&state, layers);
            let opts = TrainOptions {
                max_iterations: cfg.max_iterations,
                tolerance: cfg.tolerance,
                restarts: cfg.restarts,
                seed: derive_seed(seed, 100 + layers as u64),
                ..TrainOptions::default()
            };
            let (params, report) = train(&state, &ansatz, &opts)?;
            let extract = ExtractOptions { min_weight: 0.0, ..ExtractOptions::default() };
            let schmidt = extract_schmidt(&state, &ansatz, &params, &extract)?;
            Ok(SweepCell {
                layers,
                instance,
                seed,
                exact_entropy: exact.entropy_bits,
                estimated_entropy: schmidt.von_neumann_entropy,
                final_cost: report.final_cost,
                converged: report.converged,
                estimated_squared: schmidt.squared(),
                exact_squared: exact.squared(),
            })
        })
        .collect();
    cells.into_iter().collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Instance rows followed by `mean` and `std` rows for every layer count.
pub fn sweep_records(cells: &[SweepCell]) -> Vec<SweepRecord> {
    let mut out = Vec::new();
    let mut layers: Vec<usize> = cells.iter().map(|c| c.layers).collect();
    layers.dedup();
    for l in layers {
        let group: Vec<&SweepCell> = cells.iter().filter(|c| c.layers == l).collect();
        for c in &group {
            let (err, kind) = c.error();
            out.push(SweepRecord {
                layers: l,
                instance: c.instance.to_string(),
                seed: Some(c.seed),
                exact_entropy: c.exact_entropy,
                estimated_entropy: c.estimated_entropy,
                relative_error: err,
                final_cost: c.final_cost,
                converged: c.converged.to_string(),
                error_kind: kind.to_string(),
            });
        }
        let col = |f: &dyn Fn(&SweepCell) -> f64| mean_std(&group.iter().map(|c| f(c)).collect::<Vec<_>>());
        let exact = col(&|c| c.exact_entropy);
        let est = col(&|c| c.estimated_entropy);
        let err = col(&|c| c.error().0);
        let cost = col(&|c| c.final_cost);
        let conv = col(&|c| if c.converged { 1.0 } else { 0.0 });
        let kind = if group.iter().all(|c| c.error().1 == "relative") { "relative" } else { "mixed" };
        let kind = if group.iter().all(|c| c.error().1 == "absolute") { "absolute" } else { kind };
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let p = |v: (f64, f64)| if pick == 0 { v.0 } else { v.1 };
            out.push(SweepRecord {
                layers: l,
                instance: label.to_string(),
                seed: None,
                exact_entropy: p(exact),
                estimated_entropy: p(est),
                relative_error: p(err),
                final_cost: p(cost),
                converged: p(conv).to_string(),
                error_kind: kind.to_string(),
            });
        }
    }
    out
}

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| QsvdError::Malformed(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(reader: R) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|rec| rec.map_err(|e| QsvdError::Malformed(e.to_string()))).collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let cells = run_sweep(&SweepConfig::from(args))?;
    let records = sweep_records(&cells);
    let mut buf = Vec::new();
    write_sweep_csv(&records, &mut buf)?;
    emit(&String::from_utf8_lossy(&buf), args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn train_for_demo(args: &DemoArgs) -> Result<(PureState, QsvdAnsatz, crate::ParamVector, crate::TrainingReport)> {
    let state = args.source.load(args.train.seed)?;
    let ansatz = QsvdAnsatz::for_state(&state, args.train.layers);
    let (params, report) = train(&state, &ansatz, &args.train.options())?;
    Ok((state, ansatz, params, report))
}

pub fn swap_demo_report(args: &DemoArgs) -> Result<serde_json::Value> {
    let (state, ansatz, params, report) = train_for_demo(args)?;
    let out = swap_without_connection(&state, &ansatz, &params, args.protocol_tolerance)?;
    let gates = swap_circuit(&ansatz, &params)?;
    let crossing = gates.iter().filter(|g| crosses_bipartition(g, state.n_a())).count();
    Ok(json!({
        "final_cost": report.final_cost,
        "converged": report.converged,
        "swap_fidelity": out.fidelity(&state.swapped_halves()?)?,
        "fidelity_with_input": out.fidelity(&state)?,
        "gate_count": gates.len(),
        "crossing_gates": crossing,
    }))
}

pub fn cmd_swap_demo(args: &DemoArgs) -> Result<i32> {
    emit_json(&swap_demo_report(args)?, args.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn encode_demo_report(args: &DemoArgs) -> Result<serde_json::Value> {
    let (state, ansatz, params, report) = train_for_demo(args)?;
    let encoded = encode(&state, &ansatz, &params, args.protocol_tolerance)?;
    let decoded = decode(&encoded, &ansatz, &params)?;
    let weights = b_register_weights(&encoded);
    let oracle = exact_schmidt(&state).squared();
    let max_dev = oracle
        .iter()
        .zip(weights.iter())
        .map(|(a, b)| (a - b).abs())
        .chain(weights.iter().skip(oracle.len()).copied())
        .fold(0.0, f64::max);
    Ok(json!({
        "final_cost": report.final_cost,
        "converged": report.converged,
        "prob_a_zero": prob_a_zero(&encoded),
        "b_weights": weights,
        "oracle_weights": oracle,
        "max_weight_deviation": max_dev,
        "roundtrip_fidelity": decoded.fidelity(&state)?,
    }))
}

pub fn cmd_encode_demo(args: &DemoArgs) -> Result<i32> {
    emit_json(&encode_demo_report(args)?, args.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn synth_report(args: &SynthArgs) -> Result<(serde_json::Value, PureState)> {
    let mut spec = SpectrumSpec::new(args.weights.clone());
    if let Some(p) = &args.phases {
        spec = spec.with_phases(p.clone());
    }
    let state = synthesize_state(&spec, args.n_a, args.n_b, args.layers, derive_seed(args.seed, 2))?;
    let ex = exact_schmidt(&state);
    let recovered = ex.squared();
    let max_dev = recovered
        .iter()
        .zip(args.weights.iter().chain(std::iter::repeat(&0.0)))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let value = json!({
        "requested_weights": args.weights,
        "oracle_weights": recovered,
        "max_deviation": max_dev,
        "entropy_bits": ex.entropy_bits,
        "n_a": args.n_a,
        "n_b": args.n_b,
    });
    Ok((value, state))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<i32> {
    let (value, state) = synth_report(args)?;
    if let Some(p) = &args.state_out {
        state.write(p)?;
    }
    emit_json(&value, args.out.as_deref())?;
    Ok(EXIT_OK)
}
