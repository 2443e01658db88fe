//! `pdbn` — command-line driver for the persistent-DBN library.
//!
//! Subcommands cover the full pipeline: `validate` a model file, `smooth`
//! exact posteriors given evidence, run approximate online `filter`s, `gen`
//! random prototype models, forward-`sample` trajectories and evidence,
//! sweep `bench` experiments to CSV, and aggregate that CSV into `plotdata`
//! files.
//!
//! Exit codes: 0 on success, 2 on any validation or input error, 3 when the
//! supplied evidence has probability zero under the model.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use persistent_dbn::model::{evidence_to_json, model_to_json};
use persistent_dbn::oracle::{DEFAULT_ENUM_BUDGET, DEFAULT_VE_BUDGET};
use persistent_dbn::{
    bk_filter, emit_plot_data, exact_filter_marginals, fixed_window_filter, forward_sample,
    gen_random_prototype, load_evidence, load_model, run_benchmark, smooth, Algorithm,
    ChangepointModel, EvidenceMode, EvidenceSet, ExperimentSpec, FilterError, FilterRun,
    GeneratorKind, InferenceError, OracleError, PrototypeNetwork, SmoothOptions,
};

#[derive(Parser)]
#[command(name = "pdbn", version, about = "Inference and benchmarks for DBNs with persistent variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file and print its structure report.
    Validate(ValidateArgs),
    /// Exact smoothing: posterior changepoint distributions given evidence.
    Smooth(SmoothArgs),
    /// Online filtering with an exact or approximate algorithm.
    Filter(FilterArgs),
    /// Generate a random prototype model.
    Gen(GenArgs),
    /// Forward-sample a trajectory and extract an evidence set.
    Sample(SampleArgs),
    /// Run a benchmark sweep and emit results CSV.
    Bench(BenchArgs),
    /// Aggregate a results CSV into per-figure plot data files.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct SmoothArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Evidence JSON file; omit for the prior.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Number of slices in the unrolled network.
    #[arg(long = "slices", value_name = "M")]
    slices: usize,
    /// Root the message schedule at this node instead of the pseudo-centre.
    #[arg(long)]
    root: Option<String>,
    /// Output path for the posterior JSON; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    /// Model JSON file (all hidden nodes must be persistent).
    #[arg(long)]
    model: PathBuf,
    /// Evidence JSON file; omit to filter on no observations.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Number of slices in the unrolled network.
    #[arg(long = "slices", value_name = "M")]
    slices: usize,
    /// Filtering algorithm.
    #[arg(long, value_enum, default_value_t = FilterAlgorithm::Exact)]
    algorithm: FilterAlgorithm,
    /// Window width for the fixed-window filter.
    #[arg(long, value_name = "W")]
    window: Option<usize>,
    /// Pin a node's state once its window-start marginal saturates
    /// (fixed-window filter only).
    #[arg(long)]
    pin: bool,
    /// Output path for the marginals CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterAlgorithm {
    /// Re-smooth the full prefix at every slice (exact, expensive).
    Exact,
    /// Fully factored projection filter.
    Bk,
    /// Exact smoothing over the most recent W slices.
    Window,
}

#[derive(Args)]
struct GenArgs {
    /// Structure family to generate.
    #[arg(long, value_enum)]
    kind: StructureKind,
    /// Number of hidden nodes.
    #[arg(long, short = 'n', value_name = "N")]
    nodes: usize,
    /// In-degree bound for polytree mode.
    #[arg(long, default_value_t = 2, value_name = "D")]
    max_in_degree: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the model JSON; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StructureKind {
    /// Full binary tree over the hidden nodes.
    Tree,
    /// Random polytree with bounded in-degree.
    Polytree,
}

#[derive(Args)]
struct SampleArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Number of slices to sample.
    #[arg(long = "slices", value_name = "M")]
    slices: usize,
    /// Expose all observation leaves (accuracy mode) or a random subset of
    /// all node-slices (speed mode).
    #[arg(long, value_enum, default_value_t = SampleMode::Observables)]
    mode: SampleMode,
    /// Node-slice fraction for `--mode fraction`.
    #[arg(long, default_value_t = 0.10)]
    fraction: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the evidence JSON; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full sampled trajectory to this path.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMode {
    /// Every observation leaf at every slice.
    Observables,
    /// A random subset of all node-slice pairs.
    Fraction,
}

#[derive(Args)]
struct BenchArgs {
    /// Structure family to sweep.
    #[arg(long, value_enum)]
    kind: StructureKind,
    /// In-degree bound for polytree mode.
    #[arg(long, default_value_t = 2, value_name = "D")]
    max_in_degree: usize,
    /// Hidden-node counts to sweep, comma-separated.
    #[arg(long = "nodes", short = 'n', value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Horizons to sweep, comma-separated.
    #[arg(long = "slices", value_name = "M", value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
    /// Evidence fraction for the exact-query algorithms.
    #[arg(long, default_value_t = 0.10)]
    fraction: f64,
    /// Repetitions per (N, M) cell.
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Base RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Algorithms to run: smooth, ve, enum, bk, window.
    #[arg(long, value_delimiter = ',', default_value = "smooth")]
    algorithms: Vec<String>,
    /// Window widths for the fixed-window filter, comma-separated.
    #[arg(long = "windows", value_name = "W", value_delimiter = ',')]
    windows: Vec<usize>,
    /// Suppress wall-clock timings so equal seeds give byte-identical CSV.
    #[arg(long)]
    no_wall: bool,
    /// Factor-size budget (table cells) for the variable-elimination baseline.
    #[arg(long, default_value_t = DEFAULT_VE_BUDGET)]
    budget: u64,
    /// Assignment-count budget for the enumeration baseline.
    #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
    enum_budget: f64,
    /// Output path for the results CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Results CSV produced by `pdbn bench`.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the aggregated data files (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 3 for zero-probability evidence anywhere in the chain, 2 otherwise.
///
/// Transparent error wrappers forward their `source()` past the wrapped
/// value, so the filter variants are unwrapped by hand.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        let zero = matches!(
            cause.downcast_ref::<InferenceError>(),
            Some(InferenceError::ZeroEvidenceProbability)
        ) || matches!(
            cause.downcast_ref::<OracleError>(),
            Some(OracleError::ZeroEvidenceProbability)
        ) || matches!(
            cause.downcast_ref::<FilterError>(),
            Some(FilterError::Inference(InferenceError::ZeroEvidenceProbability))
                | Some(FilterError::Oracle(OracleError::ZeroEvidenceProbability))
        );
        if zero {
            return 3;
        }
    }
    2
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Smooth(args) => cmd_smooth(&args),
        Command::Filter(args) => cmd_filter(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Plotdata(args) => cmd_plotdata(&args),
    }
}

fn load(path: &Path) -> anyhow::Result<PrototypeNetwork> {
    load_model(path).with_context(|| format!("cannot load model {}", path.display()))
}

fn load_optional_evidence(
    path: Option<&PathBuf>,
    net: &PrototypeNetwork,
) -> anyhow::Result<EvidenceSet> {
    match path {
        None => Ok(EvidenceSet::empty()),
        Some(p) => {
            load_evidence(p, net).with_context(|| format!("cannot load evidence {}", p.display()))
        }
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<()> {
    let net = load(&args.model)?;
    let report = net.validate()?;
    let class = match report.class {
        persistent_dbn::StructureClass::Chain => "chain",
        persistent_dbn::StructureClass::Tree => "tree",
        persistent_dbn::StructureClass::Polytree => "polytree",
        persistent_dbn::StructureClass::GeneralDag => "general-dag",
    };
    println!("class: {class}");
    println!("hidden nodes: {}", report.hidden_count);
    println!("observation leaves: {}", report.observation_count);
    println!("persistent: {}", report.persistent_count);
    if report.non_persistent.is_empty() {
        println!("non-persistent: (none)");
    } else {
        println!("non-persistent: {}", report.non_persistent.join(", "));
    }
    println!("max in-degree: {}", report.max_in_degree);
    println!("components: {}", report.components);
    println!(
        "exact engine: {}",
        if report.exact_engine_supported {
            "supported"
        } else {
            "unsupported"
        }
    );
    Ok(())
}

fn cmd_smooth(args: &SmoothArgs) -> anyhow::Result<()> {
    let net = load(&args.model)?;
    let ev = load_optional_evidence(args.evidence.as_ref(), &net)?;
    let model = ChangepointModel::transform(&net, args.slices)?;
    let options = SmoothOptions {
        root: args.root.clone(),
        ..SmoothOptions::default()
    };
    let result = smooth(&model, &ev, &options)?;

    let posteriors: Vec<serde_json::Value> = result
        .posterior
        .entries()
        .iter()
        .map(|e| {
            serde_json::json!({
                "node": e.node,
                "changepoint": e.changepoint,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "horizon": result.posterior.horizon(),
        "log_likelihood": result.posterior.log_likelihood(),
        "ops": result.ops,
        "posteriors": posteriors,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("posterior serialization");
    text.push('\n');
    write_output(args.out.as_ref(), &text)
}

fn cmd_filter(args: &FilterArgs) -> anyhow::Result<()> {
    let net = load(&args.model)?;
    let ev = load_optional_evidence(args.evidence.as_ref(), &net)?;
    let run: FilterRun = match args.algorithm {
        FilterAlgorithm::Exact => exact_filter_marginals(&net, args.slices, &ev)?,
        FilterAlgorithm::Bk => bk_filter(&net, args.slices, &ev)?,
        FilterAlgorithm::Window => {
            let window = args
                .window
                .context("--window is required with --algorithm window")?;
            fixed_window_filter(&net, args.slices, &ev, window, args.pin)?
        }
    };

    let mut text = String::from("node,t,p_on\n");
    for (t_idx, slice) in run.marginals.iter().enumerate() {
        for (k, p) in slice.iter().enumerate() {
            let name = &net.hidden()[k].name;
            text.push_str(&format!("{name},{},{p:.16e}\n", t_idx + 1));
        }
    }
    eprintln!("ops: {}", run.ops);
    write_output(args.out.as_ref(), &text)
}

fn generator_kind(kind: StructureKind, max_in_degree: usize) -> GeneratorKind {
    match kind {
        StructureKind::Tree => GeneratorKind::FullBinaryTree,
        StructureKind::Polytree => GeneratorKind::RandomPolytree { max_in_degree },
    }
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let net = gen_random_prototype(
        args.nodes,
        generator_kind(args.kind, args.max_in_degree),
        &mut rng,
    )?;
    write_output(args.out.as_ref(), &model_to_json(&net))
}

fn cmd_sample(args: &SampleArgs) -> anyhow::Result<()> {
    let net = load(&args.model)?;
    let mode = match args.mode {
        SampleMode::Observables => EvidenceMode::Observables,
        SampleMode::Fraction => EvidenceMode::Fraction(args.fraction),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let sample = forward_sample(&net, args.slices, mode, &mut rng)?;

    if let Some(path) = &args.trajectory_out {
        let doc = serde_json::json!({
            "hidden": sample.hidden,
            "leaves": sample.leaves,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("trajectory serialization");
        text.push('\n');
        std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    write_output(args.out.as_ref(), &evidence_to_json(&sample.evidence))
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let mut spec = ExperimentSpec::new(
        generator_kind(args.kind, args.max_in_degree),
        args.n_list.clone(),
        args.m_list.clone(),
    );
    spec.evidence_fraction = args.fraction;
    spec.reps = args.reps;
    spec.seed = args.seed;
    spec.algorithms = args
        .algorithms
        .iter()
        .map(|s| Algorithm::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    spec.windows = args.windows.clone();
    spec.record_wall = !args.no_wall;
    spec.ve_budget = args.budget;
    spec.enum_budget = args.enum_budget;

    let csv = run_benchmark(&spec)?;
    write_output(args.out.as_ref(), &csv)
}

fn cmd_plotdata(args: &PlotdataArgs) -> anyhow::Result<()> {
    let csv = std::fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let bundle = emit_plot_data(&csv)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    for (name, text) in [
        ("time_vs_n.csv", &bundle.time_vs_n),
        ("time_vs_m.csv", &bundle.time_vs_m),
        ("error_vs_w.csv", &bundle.error_vs_w),
    ] {
        let path = args.out_dir.join(name);
        std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}
