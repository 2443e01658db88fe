//! Benchmark harness: seeded sweeps over model size, algorithm and window
//! length, written as CSV.
//!
//! Each repetition generates a fresh random model and forward-sampled
//! evidence, runs every requested algorithm, and appends rows to one CSV
//! table. Exact posterior queries (smoothing, variable elimination,
//! enumeration) use a random node-slice subset as evidence and produce one
//! row each; filters observe the leaves at every slice and produce one row
//! per slice (with the error against the exact filter) plus an aggregate
//! row. Failures the protocol anticipates — budgets exceeded on oversized
//! networks — are recorded in the `status` column and the sweep continues.
//!
//! Determinism: every row carries the sub-seed that produced it, derived
//! from the experiment seed and the row's coordinates, so any single row
//! can be reproduced in isolation. With wall-clock capture disabled the
//! whole CSV is byte-identical across runs.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::changepoint::ChangepointModel;
use crate::error::{BenchError, FilterError, InferenceError, OracleError};
use crate::filtering::{bk_filter, exact_filter_marginals, fixed_window_filter, rms_error, FilterRun};
use crate::inference::{smooth, SmoothOptions};
use crate::oracle::{
    enumerate_changepoint_posteriors, ve_exact_unrolled, VeOptions, VeTargets,
    DEFAULT_ENUM_BUDGET, DEFAULT_VE_BUDGET,
};
use crate::synth::{forward_sample, gen_random_prototype, EvidenceMode, GeneratorKind};

/// Header row of the results CSV.
pub const CSV_HEADER: &str =
    "kind,n,m,evidence_fraction,rep,seed,algorithm,window,t,status,wall_nanos,op_count,rms_error";

/// One algorithm to time within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Changepoint message passing over the whole evidence set.
    Smooth,
    /// Variable elimination on the unrolled network, querying one node.
    VariableElimination,
    /// Brute-force enumeration of changepoint configurations.
    Enumeration,
    /// Fully-factored assumed-density filtering.
    BoyenKoller,
    /// Fixed-window filtering, run once per entry of `windows`.
    FixedWindow,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Smooth => "smooth",
            Algorithm::VariableElimination => "ve",
            Algorithm::Enumeration => "enum",
            Algorithm::BoyenKoller => "bk",
            Algorithm::FixedWindow => "window",
        }
    }

    pub fn parse(s: &str) -> Result<Self, BenchError> {
        match s {
            "smooth" => Ok(Algorithm::Smooth),
            "ve" => Ok(Algorithm::VariableElimination),
            "enum" => Ok(Algorithm::Enumeration),
            "bk" => Ok(Algorithm::BoyenKoller),
            "window" => Ok(Algorithm::FixedWindow),
            other => Err(BenchError::InvalidSpec(format!(
                "unknown algorithm `{other}` (expected smooth, ve, enum, bk or window)"
            ))),
        }
    }
}

/// A full sweep description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: GeneratorKind,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// Fraction of all node-slice pairs observed for the exact-query rows.
    pub evidence_fraction: f64,
    pub reps: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Window lengths used when `FixedWindow` is listed.
    pub windows: Vec<usize>,
    /// When false, `wall_nanos` is written as 0 so CSVs are byte-stable.
    pub record_wall: bool,
    pub ve_budget: u64,
    pub enum_budget: f64,
}

impl ExperimentSpec {
    /// A sweep with protocol defaults: 10% evidence, wall clock on.
    pub fn new(kind: GeneratorKind, n_list: Vec<usize>, m_list: Vec<usize>) -> Self {
        Self {
            kind,
            n_list,
            m_list,
            evidence_fraction: 0.10,
            reps: 1,
            seed: 0,
            algorithms: vec![Algorithm::Smooth],
            windows: vec![],
            record_wall: true,
            ve_budget: DEFAULT_VE_BUDGET,
            enum_budget: DEFAULT_ENUM_BUDGET,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.n_list.is_empty() || self.m_list.is_empty() {
            return Err(BenchError::InvalidSpec("sweep lists must be non-empty".into()));
        }
        if self.reps == 0 {
            return Err(BenchError::InvalidSpec("need at least one repetition".into()));
        }
        if self.algorithms.is_empty() {
            return Err(BenchError::InvalidSpec("algorithm list must be non-empty".into()));
        }
        if self.algorithms.contains(&Algorithm::FixedWindow) && self.windows.is_empty() {
            return Err(BenchError::InvalidSpec(
                "fixed-window filtering needs a non-empty window list".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.evidence_fraction) {
            return Err(BenchError::InvalidSpec(format!(
                "evidence fraction must lie in [0, 1], got {}",
                self.evidence_fraction
            )));
        }
        Ok(())
    }

    fn kind_label(&self) -> &'static str {
        match self.kind {
            GeneratorKind::FullBinaryTree => "tree",
            GeneratorKind::RandomPolytree { .. } => "polytree",
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-row sub-seed from the experiment seed and row coordinates.
fn sub_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &p in parts {
        s = splitmix64(s ^ p);
    }
    s
}

enum Outcome {
    Ok { ops: u64 },
    Failed { status: &'static str },
}

fn classify_oracle(e: &OracleError) -> Option<&'static str> {
    match e {
        OracleError::BudgetExceeded { .. } | OracleError::MemoryBudgetExceeded { .. } => {
            Some("budget_exceeded")
        }
        OracleError::ZeroEvidenceProbability => Some("zero_evidence"),
        _ => None,
    }
}

fn classify_inference(e: &InferenceError) -> Option<&'static str> {
    match e {
        InferenceError::ZeroEvidenceProbability => Some("zero_evidence"),
        InferenceError::InDegreeTooLarge { .. } => Some("budget_exceeded"),
        _ => None,
    }
}

fn classify_filter(e: &FilterError) -> Option<&'static str> {
    match e {
        FilterError::Oracle(o) => classify_oracle(o),
        FilterError::Inference(i) => classify_inference(i),
        _ => None,
    }
}

struct Row<'a> {
    kind: &'a str,
    n: usize,
    m: usize,
    evidence_fraction: f64,
    rep: usize,
    seed: u64,
    algorithm: &'a str,
    window: Option<usize>,
    t: Option<usize>,
    status: &'a str,
    wall_nanos: u128,
    op_count: Option<u64>,
    rms: Option<f64>,
}

fn push_row(out: &mut String, r: &Row) {
    let window = r.window.map(|w| w.to_string()).unwrap_or_default();
    let t = r.t.map(|t| t.to_string()).unwrap_or_default();
    let ops = r.op_count.map(|o| o.to_string()).unwrap_or_default();
    let rms = r.rms.map(|e| format!("{e:.16e}")).unwrap_or_default();
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.kind,
        r.n,
        r.m,
        r.evidence_fraction,
        r.rep,
        r.seed,
        r.algorithm,
        window,
        t,
        r.status,
        r.wall_nanos,
        ops,
        rms
    )
    .expect("writing to a String cannot fail");
}

/// Run the sweep and return the CSV table as text.
pub fn run_benchmark(spec: &ExperimentSpec) -> Result<String, BenchError> {
    spec.validate()?;
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');

    let wants_filters = spec
        .algorithms
        .iter()
        .any(|a| matches!(a, Algorithm::BoyenKoller | Algorithm::FixedWindow));

    for &n in &spec.n_list {
        for &m in &spec.m_list {
            for rep in 0..spec.reps {
                let coords = [n as u64, m as u64, rep as u64];
                let rep_seed = sub_seed(spec.seed, &coords);
                let mut model_rng = ChaCha8Rng::seed_from_u64(sub_seed(rep_seed, &[0]));
                let net = gen_random_prototype(n, spec.kind, &mut model_rng)?;

                let mut query_rng = ChaCha8Rng::seed_from_u64(sub_seed(rep_seed, &[1]));
                let query_evidence = forward_sample(
                    &net,
                    m,
                    EvidenceMode::Fraction(spec.evidence_fraction),
                    &mut query_rng,
                )?
                .evidence;

                let filter_evidence = if wants_filters {
                    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(rep_seed, &[2]));
                    Some(forward_sample(&net, m, EvidenceMode::Observables, &mut rng)?.evidence)
                } else {
                    None
                };
                // The exact filtering reference, shared across filter rows.
                let reference = match &filter_evidence {
                    Some(ev) => Some(exact_filter_marginals(&net, m, ev)?),
                    None => None,
                };

                for algorithm in &spec.algorithms {
                    let mut base = Row {
                        kind: spec.kind_label(),
                        n,
                        m,
                        evidence_fraction: spec.evidence_fraction,
                        rep,
                        seed: rep_seed,
                        algorithm: algorithm.label(),
                        window: None,
                        t: None,
                        status: "ok",
                        wall_nanos: 0,
                        op_count: None,
                        rms: None,
                    };
                    match algorithm {
                        Algorithm::Smooth => {
                            let start = Instant::now();
                            let outcome = match ChangepointModel::transform(&net, m) {
                                Ok(model) => {
                                    match smooth(&model, &query_evidence, &SmoothOptions::default())
                                    {
                                        Ok(r) => Outcome::Ok { ops: r.ops },
                                        Err(e) => match classify_inference(&e) {
                                            Some(status) => Outcome::Failed { status },
                                            None => return Err(FilterError::from(e).into()),
                                        },
                                    }
                                }
                                Err(e) => return Err(BenchError::Model(e)),
                            };
                            finish_row(&mut out, &mut base, outcome, start, spec.record_wall);
                        }
                        Algorithm::VariableElimination => {
                            let options = VeOptions {
                                budget: spec.ve_budget,
                                order: None,
                                targets: VeTargets::Node(net.hidden()[0].name.clone()),
                            };
                            let start = Instant::now();
                            let outcome =
                                match ve_exact_unrolled(&net, m, &query_evidence, &options) {
                                    Ok(r) => Outcome::Ok { ops: r.ops },
                                    Err(e) => match classify_oracle(&e) {
                                        Some(status) => Outcome::Failed { status },
                                        None => return Err(FilterError::from(e).into()),
                                    },
                                };
                            finish_row(&mut out, &mut base, outcome, start, spec.record_wall);
                        }
                        Algorithm::Enumeration => {
                            let start = Instant::now();
                            let outcome = match ChangepointModel::transform(&net, m) {
                                Ok(model) => match enumerate_changepoint_posteriors(
                                    &model,
                                    &query_evidence,
                                    spec.enum_budget,
                                ) {
                                    Ok(r) => Outcome::Ok { ops: r.ops },
                                    Err(e) => match classify_oracle(&e) {
                                        Some(status) => Outcome::Failed { status },
                                        None => return Err(FilterError::from(e).into()),
                                    },
                                },
                                Err(e) => return Err(BenchError::Model(e)),
                            };
                            finish_row(&mut out, &mut base, outcome, start, spec.record_wall);
                        }
                        Algorithm::BoyenKoller => {
                            let ev = filter_evidence.as_ref().expect("filters sampled evidence");
                            let reference = reference.as_ref().expect("reference computed");
                            let start = Instant::now();
                            let run = bk_filter(&net, m, ev);
                            push_filter_rows(
                                &mut out,
                                &mut base,
                                run,
                                reference,
                                start,
                                spec.record_wall,
                            )?;
                        }
                        Algorithm::FixedWindow => {
                            for &w in &spec.windows {
                                let ev =
                                    filter_evidence.as_ref().expect("filters sampled evidence");
                                let reference =
                                    reference.as_ref().expect("reference computed");
                                base.window = Some(w);
                                let start = Instant::now();
                                let run = fixed_window_filter(&net, m, ev, w, false);
                                push_filter_rows(
                                    &mut out,
                                    &mut base,
                                    run,
                                    reference,
                                    start,
                                    spec.record_wall,
                                )?;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn finish_row(
    out: &mut String,
    base: &mut Row,
    outcome: Outcome,
    start: Instant,
    record_wall: bool,
) {
    base.wall_nanos = if record_wall {
        start.elapsed().as_nanos()
    } else {
        0
    };
    match outcome {
        Outcome::Ok { ops } => {
            base.status = "ok";
            base.op_count = Some(ops);
        }
        Outcome::Failed { status } => {
            base.status = status;
            base.op_count = None;
        }
    }
    push_row(out, base);
}

/// Per-slice rows (error against the exact filter) plus one aggregate row
/// carrying the total operation count and the mean per-slice error.
fn push_filter_rows(
    out: &mut String,
    base: &mut Row,
    run: Result<FilterRun, FilterError>,
    reference: &FilterRun,
    start: Instant,
    record_wall: bool,
) -> Result<(), BenchError> {
    let wall = if record_wall {
        start.elapsed().as_nanos()
    } else {
        0
    };
    let run = match run {
        Ok(run) => run,
        Err(e) => {
            let status = classify_filter(&e).ok_or(BenchError::Filter(e))?;
            base.wall_nanos = wall;
            base.status = status;
            base.t = None;
            base.op_count = None;
            base.rms = None;
            push_row(out, base);
            return Ok(());
        }
    };
    let mut errors = Vec::with_capacity(run.marginals.len());
    for (idx, row) in run.marginals.iter().enumerate() {
        let e = rms_error(row, &reference.marginals[idx])?;
        errors.push(e);
        base.t = Some(idx + 1);
        base.status = "ok";
        base.wall_nanos = 0;
        base.op_count = None;
        base.rms = Some(e);
        push_row(out, base);
    }
    base.t = None;
    base.status = "ok";
    base.wall_nanos = wall;
    base.op_count = Some(run.ops);
    base.rms = Some(errors.iter().sum::<f64>() / errors.len().max(1) as f64);
    push_row(out, base);
    Ok(())
}

/// Aggregated data files for the three figure analogues.
#[derive(Debug, Clone)]
pub struct PlotBundle {
    /// Operation count and wall time vs network size.
    pub time_vs_n: String,
    /// Operation count and wall time vs horizon.
    pub time_vs_m: String,
    /// Mean filtering error vs window length.
    pub error_vs_w: String,
}

#[derive(Debug, Clone, PartialEq)]
struct ParsedRow {
    kind: String,
    n: usize,
    m: usize,
    rep: usize,
    algorithm: String,
    window: Option<usize>,
    t: Option<usize>,
    status: String,
    wall_nanos: u128,
    op_count: Option<u64>,
    rms: Option<f64>,
}

fn parse_csv(csv: &str) -> Result<Vec<ParsedRow>, BenchError> {
    let mut lines = csv.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => {
            return Err(BenchError::Parse(format!("unexpected header: {h}")));
        }
        None => return Err(BenchError::Parse("empty input".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(BenchError::Parse(format!(
                "line {}: expected 13 fields, got {}",
                lineno + 2,
                f.len()
            )));
        }
        let bad = |what: &str| BenchError::Parse(format!("line {}: bad {what}", lineno + 2));
        let opt_usize = |s: &str, what: &str| -> Result<Option<usize>, BenchError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(what))
            }
        };
        rows.push(ParsedRow {
            kind: f[0].to_string(),
            n: f[1].parse().map_err(|_| bad("n"))?,
            m: f[2].parse().map_err(|_| bad("m"))?,
            rep: f[4].parse().map_err(|_| bad("rep"))?,
            algorithm: f[6].to_string(),
            window: opt_usize(f[7], "window")?,
            t: opt_usize(f[8], "t")?,
            status: f[9].to_string(),
            wall_nanos: f[10].parse().map_err(|_| bad("wall_nanos"))?,
            op_count: if f[11].is_empty() {
                None
            } else {
                Some(f[11].parse().map_err(|_| bad("op_count"))?)
            },
            rms: if f[12].is_empty() {
                None
            } else {
                Some(f[12].parse().map_err(|_| bad("rms_error"))?)
            },
        });
    }
    Ok(rows)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate a results CSV into per-figure data files (mean and standard
/// deviation across repetitions).
pub fn emit_plot_data(csv: &str) -> Result<PlotBundle, BenchError> {
    let rows = parse_csv(csv)?;
    // Aggregate rows only: exact queries and filter totals, successful runs.
    let totals: Vec<&ParsedRow> = rows
        .iter()
        .filter(|r| r.t.is_none() && r.status == "ok" && r.op_count.is_some())
        .collect();

    let mut time_groups: Vec<(String, usize, usize, Option<usize>, Vec<f64>, Vec<f64>)> =
        Vec::new();
    for r in &totals {
        let key = (r.kind.clone(), r.algorithm.clone(), r.window, r.n, r.m);
        match time_groups.iter_mut().find(|(label, n, m, w, _, _)| {
            (label.as_str(), *n, *m, *w)
                == (format!("{},{}", key.0, key.1).as_str(), key.3, key.4, key.2)
        }) {
            Some((_, _, _, _, ops, walls)) => {
                ops.push(r.op_count.unwrap() as f64);
                walls.push(r.wall_nanos as f64);
            }
            None => time_groups.push((
                format!("{},{}", key.0, key.1),
                key.3,
                key.4,
                key.2,
                vec![r.op_count.unwrap() as f64],
                vec![r.wall_nanos as f64],
            )),
        }
    }

    let time_header = "kind,algorithm,window,n,m,reps,mean_op_count,sd_op_count,mean_wall_nanos,sd_wall_nanos";
    let render_time = |sort_by_m: bool| -> String {
        let mut groups = time_groups.clone();
        groups.sort_by(|a, b| {
            let ka = (a.0.clone(), a.3, if sort_by_m { (a.2, a.1) } else { (a.1, a.2) });
            let kb = (b.0.clone(), b.3, if sort_by_m { (b.2, b.1) } else { (b.1, b.2) });
            ka.cmp(&kb)
        });
        let mut out = String::from(time_header);
        out.push('\n');
        for (label, n, m, w, ops, walls) in groups {
            let (op_mean, op_sd) = mean_sd(&ops);
            let (wall_mean, wall_sd) = mean_sd(&walls);
            let w = w.map(|w| w.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{label},{w},{n},{m},{},{op_mean:.16e},{op_sd:.16e},{wall_mean:.16e},{wall_sd:.16e}",
                ops.len()
            )
            .expect("writing to a String cannot fail");
        }
        out
    };
    let time_vs_n = render_time(false);
    let time_vs_m = render_time(true);

    // Error vs window: aggregate rows of filters carry the mean rms.
    let mut err_groups: Vec<(String, usize, usize, Option<usize>, Vec<f64>)> = Vec::new();
    for r in &totals {
        let Some(rms) = r.rms else { continue };
        let key = (r.kind.clone(), r.algorithm.clone(), r.n, r.m, r.window);
        match err_groups
            .iter_mut()
            .find(|(label, n, m, w, _)| {
                (label.as_str(), *n, *m, *w)
                    == (format!("{},{}", key.0, key.1).as_str(), key.2, key.3, key.4)
            }) {
            Some((_, _, _, _, v)) => v.push(rms),
            None => err_groups.push((
                format!("{},{}", key.0, key.1),
                key.2,
                key.3,
                key.4,
                vec![rms],
            )),
        }
    }
    err_groups.sort_by(|a, b| (a.0.clone(), a.1, a.2, a.3).cmp(&(b.0.clone(), b.1, b.2, b.3)));
    let mut error_vs_w = String::from("kind,algorithm,n,m,window,reps,mean_rms,sd_rms");
    error_vs_w.push('\n');
    for (label, n, m, w, v) in err_groups {
        let (mean, sd) = mean_sd(&v);
        let w = w.map(|w| w.to_string()).unwrap_or_default();
        writeln!(
            error_vs_w,
            "{label},{n},{m},{w},{},{mean:.16e},{sd:.16e}",
            v.len()
        )
        .expect("writing to a String cannot fail");
    }

    Ok(PlotBundle {
        time_vs_n,
        time_vs_m,
        error_vs_w,
    })
}
