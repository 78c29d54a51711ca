//! Command-line front end: experiment configuration, scheme orchestration,
//! and deterministic artifact emission.
//!
//! Exit codes: 0 on success, 2 on configuration violations (with a
//! field-level JSON error on stderr), 1 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tmera_core::circuits::LayoutKind;
use tmera_core::costmodel::{classical_cost, quantum_cost_qae, quantum_cost_sampling};
use tmera_core::models::{build_term, embed_to_qubits, ModelSpec};
use tmera_core::network::{
    init_random, state_vector_energy, MeraConfig, Parametrization, TMeraState,
};
use tmera_core::optimize::{Objective, ObjectiveKind, OptimizerConfig};
use tmera_core::record::{
    format_f64, write_histogram_csv, write_meta_json, write_records_csv, write_state_bin,
    write_sweep_csv, ResultRow, RunMeta, SweepRow,
};
use tmera_core::schemes::{
    default_scan_path, histogram, run_restarts, run_scheme_state, SchemeKind,
    SchemeSpec,
};
use tmera_core::Rng;

/// A configuration violation tied to a specific field.
#[derive(Debug, Serialize)]
struct FieldError {
    field: String,
    message: String,
}

enum CliError {
    /// Exit 2, machine-readable field errors.
    Config(Vec<FieldError>),
    /// Exit 1.
    Runtime(String),
}

impl CliError {
    fn config(field: &str, message: impl ToString) -> CliError {
        CliError::Config(vec![FieldError {
            field: field.to_string(),
            message: message.to_string(),
        }])
    }
}

impl From<tmera_core::Error> for CliError {
    fn from(e: tmera_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// Full experiment description: accepted as a JSON file and overridable by
/// command-line flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    model: ModelSpec,
    mera: MeraConfig,
    #[serde(default = "SchemeSpec::direct")]
    scheme: SchemeSpec,
    #[serde(default)]
    optimizer: OptimizerConfig,
    #[serde(default = "default_objective")]
    objective: Objective,
    #[serde(default = "one")]
    restarts: usize,
    #[serde(default = "one_u64")]
    base_seed: u64,
}

fn default_objective() -> Objective {
    Objective::ENERGY
}
fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}

impl ExperimentConfig {
    fn validate(&self) -> CliResult<()> {
        self.mera
            .validate()
            .map_err(|e| CliError::config("mera", e))?;
        self.optimizer
            .validate()
            .map_err(|e| CliError::config("optimizer", e))?;
        self.objective
            .validate()
            .map_err(|e| CliError::config("objective", e))?;
        self.scheme
            .validate(&self.model)
            .map_err(|e| CliError::config("scheme", e))?;
        if self.restarts == 0 {
            return Err(CliError::config("restarts", "must be at least 1"));
        }
        if self.mera.q0 != self.model.qubits_per_site() {
            return Err(CliError::config(
                "mera.q0",
                format!(
                    "model {} needs q0 = {} qubits per site",
                    self.model.label(),
                    self.model.qubits_per_site()
                ),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(name = "tmera", version, about = "Trotterized-MERA ground-state toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelFlag {
    Xxz,
    Blbq,
    Blbqbc,
    XxxThreeHalf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LayoutFlag {
    #[value(alias = "brick-wall")]
    Brickwall,
    Prpc,
}

impl From<LayoutFlag> for LayoutKind {
    fn from(f: LayoutFlag) -> LayoutKind {
        match f {
            LayoutFlag::Brickwall => LayoutKind::BrickWall,
            LayoutFlag::Prpc => LayoutKind::Prpc,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ParametrizationFlag {
    TrotterAngles,
    TrotterUnitary,
    FullTensor,
}

impl From<ParametrizationFlag> for Parametrization {
    fn from(f: ParametrizationFlag) -> Parametrization {
        match f {
            ParametrizationFlag::TrotterAngles => Parametrization::TrotterAngles,
            ParametrizationFlag::TrotterUnitary => Parametrization::TrotterUnitary,
            ParametrizationFlag::FullTensor => Parametrization::FullTensor,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SchemeFlag {
    Direct,
    TttnThenTmera,
    BuildUp,
    BuildUpTttnThenTmera,
    Scan,
}

/// Flags shared by the run-style subcommands. Flags override the config
/// file; defaults fill whatever remains.
#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelFlag>,
    /// XXZ anisotropy.
    #[arg(long)]
    delta: Option<f64>,
    /// BLBQ mixing angle (radians).
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    n_sites: Option<usize>,
    /// Number of layers T.
    #[arg(long, visible_alias = "T")]
    layers: Option<usize>,
    /// Qubits per renormalized site (chi = 2^q).
    #[arg(long)]
    q: Option<usize>,
    /// Trotter steps per tensor circuit.
    #[arg(long, visible_alias = "t")]
    trotter_steps: Option<usize>,
    /// Tensor-circuit wiring.
    #[arg(long = "tensor-circuit", value_enum)]
    tensor_circuit: Option<LayoutFlag>,
    #[arg(long, value_enum)]
    parametrization: Option<ParametrizationFlag>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeFlag>,
    /// Penalty weight kappa (angle penalty in angle mode, Frobenius
    /// otherwise).
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one configuration; emits records.csv, state.bin, meta.json.
    Optimize(CommonArgs),
    /// Grid over (t, q, T); emits sweep.csv sorted by classical cost.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated Trotter-step values.
        #[arg(long, default_value = "1,2,4")]
        t_list: String,
        /// Comma-separated q values.
        #[arg(long, default_value = "1,2")]
        q_list: String,
        /// Comma-separated layer counts.
        #[arg(long, default_value = "2,3")]
        layers_list: String,
    },
    /// Restart histogram; emits histogram.csv and records.csv.
    Hist {
        #[command(flatten)]
        common: CommonArgs,
        /// Histogram bin width in energy units.
        #[arg(long, default_value_t = 0.005)]
        bin_width: f64,
    },
    /// Brick-wall versus PRPC wiring at identical budgets.
    CompareLayouts(CommonArgs),
    /// Pure cost-model arithmetic; prints one CSV row.
    CostTable {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        t: usize,
        #[arg(long = "T")]
        layers: usize,
        #[arg(long)]
        eps: f64,
        /// Bond dimension for the classical column (default 2^q).
        #[arg(long)]
        chi: Option<usize>,
        /// Classical contraction exponent.
        #[arg(long, default_value_t = 7)]
        r: u32,
    },
    /// Fast self-check of the contraction oracle and gradients.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

impl CommonArgs {
    fn build(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
                serde_json::from_str::<ExperimentConfig>(&text)
                    .map_err(|e| CliError::config("config", e))?
            }
            None => default_experiment(),
        };
        if let Some(m) = self.model {
            cfg.model = match m {
                ModelFlag::Xxz => ModelSpec::Xxz {
                    delta: self.delta.unwrap_or(1.0),
                },
                ModelFlag::Blbq => ModelSpec::Blbq {
                    theta: self.theta.unwrap_or(0.0),
                },
                ModelFlag::Blbqbc => ModelSpec::Blbqbc,
                ModelFlag::XxxThreeHalf => ModelSpec::XxxThreeHalf,
            };
        } else if let Some(d) = self.delta {
            match &mut cfg.model {
                ModelSpec::Xxz { delta } => *delta = d,
                _ => return Err(CliError::config("delta", "only meaningful for the xxz model")),
            }
        }
        cfg.mera.q0 = cfg.model.qubits_per_site();
        if let Some(n) = self.n_sites {
            cfg.mera.n_sites = n;
        }
        if let Some(l) = self.layers {
            cfg.mera.layers = l;
        }
        if let Some(q) = self.q {
            cfg.mera.q = q;
        }
        if let Some(t) = self.trotter_steps {
            cfg.mera.trotter_steps = t;
        }
        if let Some(l) = self.tensor_circuit {
            cfg.mera.layout = l.into();
        }
        if let Some(p) = self.parametrization {
            cfg.mera.parametrization = p.into();
        }
        if let Some(s) = self.scheme {
            cfg.scheme = match s {
                SchemeFlag::Direct => SchemeSpec::direct(),
                SchemeFlag::TttnThenTmera => SchemeSpec::of_kind(SchemeKind::TttnThenTmera),
                SchemeFlag::BuildUp => SchemeSpec::of_kind(SchemeKind::BuildUp),
                SchemeFlag::BuildUpTttnThenTmera => {
                    SchemeSpec::of_kind(SchemeKind::BuildUpTttnThenTmera)
                }
                SchemeFlag::Scan => match cfg.model {
                    ModelSpec::Xxz { delta } => SchemeSpec::scan(default_scan_path(delta, 200)),
                    _ => {
                        return Err(CliError::config(
                            "scheme",
                            "the default scan path exists only for the xxz model",
                        ))
                    }
                },
            };
        }
        if let Some(k) = self.kappa {
            cfg.objective = Objective {
                kind: if cfg.mera.parametrization == Parametrization::TrotterAngles {
                    ObjectiveKind::AnglePenalty
                } else {
                    ObjectiveKind::FrobeniusPenalty
                },
                kappa: k,
            };
        }
        if let Some(m) = self.max_iterations {
            cfg.optimizer.max_iterations = m;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(k) = self.restarts {
            cfg.restarts = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_experiment() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec::Xxz { delta: 1.0 },
        mera: MeraConfig {
            n_sites: 16,
            layers: 2,
            q: 1,
            q0: 1,
            trotter_steps: 2,
            layout: LayoutKind::BrickWall,
            parametrization: Parametrization::TrotterAngles,
        },
        scheme: SchemeSpec::direct(),
        optimizer: OptimizerConfig::default(),
        objective: Objective::ENERGY,
        restarts: 1,
        base_seed: 1,
    }
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

fn ensure_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn meta_for(cfg: &ExperimentConfig, seeds: Vec<u64>, started: Instant) -> RunMeta {
    RunMeta {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        seeds,
        total_wall_time: started.elapsed().as_secs_f64(),
    }
}

/// Runs the restart set of one experiment and emits records.csv.
fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> CliResult<Vec<ResultRow>> {
    let outcome = run_restarts(
        &cfg.scheme,
        &cfg.mera,
        &cfg.model,
        &cfg.objective,
        &cfg.optimizer,
        cfg.restarts,
        cfg.base_seed,
    )?;
    for (seed, msg) in &outcome.failures {
        eprintln!("warning: seed {seed} failed: {msg}");
    }
    if outcome.records.is_empty() {
        return Err(CliError::Runtime("all restarts failed".into()));
    }
    let rows: Vec<ResultRow> = outcome
        .records
        .into_iter()
        .map(ResultRow::from_record)
        .collect::<tmera_core::Result<_>>()?;
    write_records_csv(&out.join("records.csv"), &rows)?;
    Ok(rows)
}

fn cmd_optimize(args: &CommonArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = args.build()?;
    ensure_out(&args.out)?;
    let rows = run_experiment(&cfg, &args.out)?;
    let best = &rows[0].record;
    // deterministic rerun of the best seed recovers its state for state.bin
    let (state, _) = run_scheme_state(
        &cfg.scheme,
        &cfg.mera,
        &cfg.model,
        &cfg.objective,
        &cfg.optimizer,
        best.seed,
    )?;
    write_state_bin(&args.out.join("state.bin"), &state)?;
    let seeds = rows.iter().map(|r| r.record.seed).collect();
    write_meta_json(&args.out.join("meta.json"), &meta_for(&cfg, seeds, started))?;
    println!(
        "best e = {} (seed {}) over {} restart(s); artifacts in {}",
        format_f64(best.energy),
        best.seed,
        rows.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_hist(args: &CommonArgs, bin_width: f64) -> CliResult<()> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(CliError::config("bin_width", "must be positive"));
    }
    let started = Instant::now();
    let cfg = args.build()?;
    ensure_out(&args.out)?;
    let rows = run_experiment(&cfg, &args.out)?;
    let records: Vec<_> = rows.iter().map(|r| r.record.clone()).collect();
    let h = histogram(&records, bin_width)?;
    write_histogram_csv(&args.out.join("histogram.csv"), &h)?;
    let seeds = rows.iter().map(|r| r.record.seed).collect();
    write_meta_json(&args.out.join("meta.json"), &meta_for(&cfg, seeds, started))?;
    println!(
        "{} run(s) in {} bin(s); artifacts in {}",
        records.len(),
        h.counts.len(),
        args.out.display()
    );
    Ok(())
}

fn parse_list(name: &str, text: &str) -> CliResult<Vec<usize>> {
    let vals: std::result::Result<Vec<usize>, _> =
        text.split(',').map(|s| s.trim().parse::<usize>()).collect();
    match vals {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::config(
            name,
            format!("expected comma-separated positive integers, got {text:?}"),
        )),
    }
}

fn cmd_sweep(
    common: &CommonArgs,
    t_list: &str,
    q_list: &str,
    layers_list: &str,
) -> CliResult<()> {
    let started = Instant::now();
    let base = common.build()?;
    let ts = parse_list("t_list", t_list)?;
    let qs = parse_list("q_list", q_list)?;
    let ls = parse_list("layers_list", layers_list)?;
    ensure_out(&common.out)?;
    let mut rows = Vec::new();
    for &layers in &ls {
        for &q in &qs {
            for &t in &ts {
                let mut cfg = base.clone();
                cfg.mera.layers = layers;
                cfg.mera.q = q;
                cfg.mera.trotter_steps = t;
                // keep n_top fixed so deeper networks grow the chain
                let n_top = (base.mera.n_sites >> base.mera.layers).max(4);
                cfg.mera.n_sites = n_top << layers;
                if let Err(e) = cfg.validate() {
                    let msg = match e {
                        CliError::Config(fe) => fe
                            .into_iter()
                            .map(|f| format!("{}: {}", f.field, f.message))
                            .collect::<Vec<_>>()
                            .join("; "),
                        CliError::Runtime(m) => m,
                    };
                    eprintln!("warning: skipping cell (t={t}, q={q}, T={layers}): {msg}");
                    continue;
                }
                let outcome = run_restarts(
                    &cfg.scheme,
                    &cfg.mera,
                    &cfg.model,
                    &cfg.objective,
                    &cfg.optimizer,
                    cfg.restarts,
                    cfg.base_seed,
                )?;
                let Some(best) = outcome.records.first() else {
                    eprintln!("warning: cell (t={t}, q={q}, T={layers}): all restarts failed");
                    continue;
                };
                let row = ResultRow::from_record(best.clone())?;
                rows.push(SweepRow {
                    trotter_steps: t,
                    q,
                    layers,
                    chi: 1 << q,
                    energy: best.energy,
                    accuracy: best.accuracy,
                    cost_classical: row.cost_classical,
                    cost_quantum_sampling: row.cost_quantum_sampling,
                    cost_quantum_qae: row.cost_quantum_qae,
                    cost_quantum_qae_caption: row.cost_quantum_qae_caption,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Runtime("every sweep cell failed".into()));
    }
    write_sweep_csv(&common.out.join("sweep.csv"), &rows)?;
    write_meta_json(
        &common.out.join("meta.json"),
        &meta_for(&base, vec![base.base_seed], started),
    )?;
    println!("{} sweep cell(s); artifacts in {}", rows.len(), common.out.display());
    Ok(())
}

fn cmd_compare_layouts(args: &CommonArgs) -> CliResult<()> {
    let started = Instant::now();
    let base = args.build()?;
    ensure_out(&args.out)?;
    let mut all = Vec::new();
    let mut best = Vec::new();
    for layout in [LayoutKind::BrickWall, LayoutKind::Prpc] {
        let mut cfg = base.clone();
        cfg.mera.layout = layout;
        let outcome = run_restarts(
            &cfg.scheme,
            &cfg.mera,
            &cfg.model,
            &cfg.objective,
            &cfg.optimizer,
            cfg.restarts,
            cfg.base_seed,
        )?;
        let Some(b) = outcome.records.first() else {
            return Err(CliError::Runtime(format!("all {layout:?} restarts failed")));
        };
        best.push((layout, b.energy, b.accuracy));
        all.extend(outcome.records);
    }
    all.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.seed.cmp(&b.seed)));
    let rows: Vec<ResultRow> = all
        .into_iter()
        .map(ResultRow::from_record)
        .collect::<tmera_core::Result<_>>()?;
    write_records_csv(&args.out.join("records.csv"), &rows)?;
    write_meta_json(
        &args.out.join("meta.json"),
        &meta_for(&base, vec![base.base_seed], started),
    )?;
    for (layout, e, acc) in &best {
        match acc {
            Some(a) => println!("{layout:?}: best e = {}, accuracy = {}", format_f64(*e), format_f64(*a)),
            None => println!("{layout:?}: best e = {}", format_f64(*e)),
        }
    }
    Ok(())
}

fn cmd_cost_table(q: usize, t: usize, layers: usize, eps: f64, chi: Option<usize>, r: u32) -> CliResult<()> {
    let chi = chi.unwrap_or(1usize << q);
    let classical = classical_cost(chi, r).map_err(|e| CliError::config("chi/r", e))?;
    let sampling =
        quantum_cost_sampling(q, t, layers, eps).map_err(|e| CliError::config("eps", e))?;
    let qae = quantum_cost_qae(q, t, layers, eps).map_err(|e| CliError::config("eps", e))?;
    println!("chi,r,cost_classical,cost_quantum_sampling,cost_quantum_qae,cost_quantum_qae_caption");
    println!(
        "{chi},{r},{},{},{},{}",
        format_f64(classical),
        format_f64(sampling),
        format_f64(qae.full),
        format_f64(qae.caption_metric)
    );
    Ok(())
}

/// Spot checks: contraction against the state-vector oracle, the descending
/// adjoint through the energy identity, a finite-difference gradient probe,
/// and cost arithmetic.
fn cmd_verify(seed: u64) -> CliResult<()> {
    let mut failures = 0;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let model = ModelSpec::Xxz { delta: 1.0 };
    let term = embed_to_qubits(&build_term(&model).map_err(CliError::from)?);
    let config = MeraConfig {
        n_sites: 8,
        layers: 2,
        q: 1,
        q0: 1,
        trotter_steps: 2,
        layout: LayoutKind::BrickWall,
        parametrization: Parametrization::TrotterUnitary,
    };
    let mut rng = Rng::new(seed);

    let mut oracle_ok = true;
    let mut states: Vec<TMeraState> = Vec::new();
    for _ in 0..5 {
        let state = init_random(&config, &mut rng).map_err(CliError::from)?;
        let fast = tmera_core::contraction::energy(&state, &model).map_err(CliError::from)?;
        let oracle = state_vector_energy(&state, &term).map_err(CliError::from)?;
        oracle_ok &= (fast - oracle).abs() < 1e-10;
        states.push(state);
    }
    check("contraction matches the state-vector oracle (5 random instances)", oracle_ok);

    let mut scale_ok = true;
    for state in &states {
        let ctx =
            tmera_core::contraction::EvaluationContext::new(state, &model).map_err(CliError::from)?;
        for tau in 0..=config.layers {
            scale_ok &= (ctx.energy_at_scale(tau) - ctx.energy).abs() < 1e-10;
        }
    }
    check("energy identity holds at every scale (ascend/descend adjoint)", scale_ok);

    // finite-difference probe of one full-tensor environment
    let fcfg = MeraConfig {
        parametrization: Parametrization::FullTensor,
        ..config
    };
    let state = init_random(&fcfg, &mut rng).map_err(CliError::from)?;
    let envs = tmera_core::contraction::environments(&state, &model).map_err(CliError::from)?;
    let mut fd_ok = true;
    if let tmera_core::contraction::LayerEnvironment::Full {
        disentangler: Some(gamma),
        ..
    } = &envs.layers[0]
    {
        let h = 1e-6;
        let mut s2 = state.clone();
        let shift = |s2: &mut TMeraState, idx: usize, d: f64| {
            if let tmera_core::network::LayerTensors::Full { disentangler, .. } =
                &mut s2.layers[0].tensors
            {
                disentangler.data_mut()[idx] += num_complex::Complex64::new(d, 0.0);
            }
        };
        for idx in [0usize, 5, 9] {
            shift(&mut s2, idx, h);
            let ep = tmera_core::contraction::energy(&s2, &model).map_err(CliError::from)?;
            shift(&mut s2, idx, -2.0 * h);
            let em = tmera_core::contraction::energy(&s2, &model).map_err(CliError::from)?;
            shift(&mut s2, idx, h);
            let fd = (ep - em) / (2.0 * h);
            let analytic = 2.0 * gamma.data()[idx].re;
            fd_ok &= (fd - analytic).abs() < 1e-5 * (1.0 + analytic.abs());
        }
    } else {
        fd_ok = false;
    }
    check("environments match finite differences (3 probes)", fd_ok);

    let cost_ok = classical_cost(8, 7).map(|c| c == 2_097_152.0).unwrap_or(false)
        && quantum_cost_sampling(3, 8, 6, 1e-3)
            .map(|c| (c - 6.912e9).abs() < 1.0)
            .unwrap_or(false);
    check("cost-model arithmetic", cost_ok);

    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{failures} verification check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sweep {
            common,
            t_list,
            q_list,
            layers_list,
        } => cmd_sweep(common, t_list, q_list, layers_list),
        Command::Hist { common, bin_width } => cmd_hist(common, *bin_width),
        Command::CompareLayouts(args) => cmd_compare_layouts(args),
        Command::CostTable {
            q,
            t,
            layers,
            eps,
            chi,
            r,
        } => cmd_cost_table(*q, *t, *layers, *eps, *chi, *r),
        Command::Verify { seed } => cmd_verify(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(fields)) => {
            let body = serde_json::json!({ "error": { "kind": "config", "fields": fields } });
            eprintln!("{body}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            let body = serde_json::json!({ "error": { "kind": "runtime", "message": message } });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
