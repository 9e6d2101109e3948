//! Command definitions and implementations behind the `mvtensor` binary.
//!
//! Every command that writes a run directory also writes `run_config.json`,
//! the fully resolved command (absolute paths, filled-in defaults). Feeding
//! that file to `mvtensor replay` reruns the exact same computation.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use mvtensor::cluster::evaluate;
use mvtensor::dataset::{
    load_labels, load_manifest, load_matrix, save_dataset, save_matrix, write_atomic, write_json,
    MatrixFormat, MultiViewDataset, SyntheticBlobs,
};
use mvtensor::gcmf::{self, GcmfConfig, Kernel};
use mvtensor::graph::{select_anchors_kmeans, select_anchors_svd, AnchorSet, Bandwidth};
use mvtensor::tcgf::{self, TcgfConfig, TcgfResult};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mvtensor::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &mvtensor::Error) -> u8 {
    use mvtensor::Error as E;
    match e {
        E::Io { .. } => EXIT_IO,
        E::AtIteration { source, .. } => core_exit_code(source),
        E::Numerical(_) => EXIT_FAILURE,
        E::Shape(_) | E::InvalidArgument(_) | E::Format { .. } | E::Checksum { .. } => {
            EXIT_VALIDATION
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// How a successful command finished.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Done => EXIT_OK,
            Outcome::NotConverged => EXIT_NOT_CONVERGED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mvtensor",
    version,
    about = "Multi-view graph learning and clustering"
)]
pub struct Cli {
    /// Log solver progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Select anchor samples from a dataset.
    Anchors(AnchorsArgs),
    /// Run the tensorized consensus graph solver on anchor graphs.
    Tcgf(TcgfArgs),
    /// Run the graph-consensus multi-view LLE solver.
    Gcmf(GcmfArgs),
    /// Cluster an embedding with repeated k-means and score it.
    ClusterEval(ClusterEvalArgs),
    /// Write a synthetic multi-view blob dataset.
    Synth(SynthArgs),
    /// Rerun a command from its run_config.json.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Svd,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Gaussian,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Mvb,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Mvb => MatrixFormat::Mvb,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct AnchorsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Number of anchors.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "svd")]
    pub method: MethodArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
#[command(group(ArgGroup::new("anchor_source").required(true).args(["anchors", "k"])))]
pub struct TcgfArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Anchor file written by `mvtensor anchors`.
    #[arg(long)]
    pub anchors: Option<PathBuf>,
    /// Select this many anchors instead of reading a file.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value = "svd")]
    pub anchor_method: MethodArg,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_e: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_r: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Embedding dimension; defaults to the number of label classes.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Anchors linked to each sample.
    #[arg(long, default_value_t = 5)]
    pub knn: usize,
    /// Tensor nuclear norm weights, one per view (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub mu0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub rho0: f64,
    #[arg(long, default_value_t = 1.5)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e8)]
    pub penalty_cap: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep λ_E and λ_R over this many log-spaced values each.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub grid_max: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct GcmfArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// LLE neighborhood size.
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_c: f64,
    /// Embedding dimension; defaults to the number of label classes.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelArg,
    /// Fixed Gaussian bandwidth; the median pairwise distance when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
    /// LLE regularization.
    #[arg(long, default_value_t = 1e-3)]
    pub reg: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ClusterEvalArgs {
    /// Embedding matrix, one row per sample (.csv or .mvb).
    #[arg(long)]
    pub embedding: PathBuf,
    /// Cluster count; defaults to the number of classes in --truth.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 100)]
    pub n_per_cluster: usize,
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    /// Feature dimension of every view (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "10,12,8")]
    pub dims: Vec<usize>,
    /// Noise standard deviation per view; a single value applies to all.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub noise: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A run_config.json written by an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const RUN_CONFIG: &str = "run_config.json";

/// Runs one command to completion.
pub fn run(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Anchors(a) => cmd_anchors(a),
        Command::Tcgf(a) => cmd_tcgf(a),
        Command::Gcmf(a) => cmd_gcmf(a),
        Command::ClusterEval(a) => cmd_cluster_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

fn existing(path: &Path) -> CliResult<PathBuf> {
    fs::canonicalize(path).map_err(|e| {
        mvtensor::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn absolute(path: &Path) -> CliResult<PathBuf> {
    std::path::absolute(path).map_err(|e| {
        mvtensor::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| {
        mvtensor::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()
    })
}

fn resolve_dim(dim: Option<usize>, ds: &MultiViewDataset) -> CliResult<usize> {
    dim.or_else(|| ds.n_classes())
        .ok_or_else(|| CliError::Usage("--dim is required when the dataset has no labels".into()))
}

fn select_anchors(
    ds: &MultiViewDataset,
    k: usize,
    method: MethodArg,
    seed: u64,
) -> CliResult<AnchorSet> {
    Ok(match method {
        MethodArg::Svd => select_anchors_svd(ds, k)?,
        MethodArg::Kmeans => select_anchors_kmeans(ds, k, seed)?,
    })
}

fn read_anchors(path: &Path, n: usize) -> CliResult<AnchorSet> {
    let text = fs::read_to_string(path).map_err(|e| mvtensor::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let set: AnchorSet = serde_json::from_str(&text).map_err(|e| mvtensor::Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    set.validate(n)?;
    Ok(set)
}

pub fn cmd_anchors(args: &AnchorsArgs) -> CliResult<Outcome> {
    let ds = load_manifest(&args.manifest)?;
    let set = select_anchors(&ds, args.k, args.method, args.seed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(&args.out, &set)?;
    Ok(Outcome::Done)
}

fn tcgf_config(args: &TcgfArgs, dim: usize) -> TcgfConfig {
    TcgfConfig {
        lambda_e: args.lambda_e,
        lambda_r: args.lambda_r,
        gamma: args.gamma,
        dim,
        omega: args.omega.clone(),
        mu0: args.mu0,
        rho0: args.rho0,
        eta: args.eta,
        penalty_cap: args.penalty_cap,
        tol: args.tol,
        max_iter: args.max_iter,
        seed: args.seed,
    }
}

#[derive(Serialize)]
struct TcgfSummary {
    converged: bool,
    iterations: usize,
    degenerate: bool,
    objective: f64,
    res_graph_inf: f64,
    res_tensor_inf: f64,
}

fn write_tcgf_outputs(dir: &Path, result: &TcgfResult) -> CliResult<()> {
    save_matrix(
        dir.join("embedding.csv"),
        MatrixFormat::Csv,
        &result.embedding,
    )?;
    save_matrix(
        dir.join("anchor_embedding.csv"),
        MatrixFormat::Csv,
        &result.anchor_embedding,
    )?;
    write_json(
        &dir.join("alpha.json"),
        &serde_json::json!({ "alpha": result.alpha }),
    )?;
    write_atomic(
        &dir.join("history.csv"),
        tcgf::history_csv(&result.history).as_bytes(),
    )?;
    let last = result.history.last();
    write_json(
        &dir.join("summary.json"),
        &TcgfSummary {
            converged: result.converged,
            iterations: result.iterations,
            degenerate: result.degenerate,
            objective: last.map_or(f64::NAN, |r| r.objective),
            res_graph_inf: last.map_or(f64::NAN, |r| r.res_graph),
            res_tensor_inf: last.map_or(f64::NAN, |r| r.res_tensor),
        },
    )?;
    Ok(())
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(CliError::Usage(format!(
            "grid needs 0 < min <= max and at least one point, got [{lo}, {hi}] x {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

pub fn cmd_tcgf(args: &TcgfArgs) -> CliResult<Outcome> {
    let mut args = args.clone();
    args.manifest = existing(&args.manifest)?;
    args.anchors = args.anchors.as_deref().map(existing).transpose()?;
    args.out_dir = absolute(&args.out_dir)?;

    let ds = load_manifest(&args.manifest)?;
    let anchors = match (&args.anchors, args.k) {
        (Some(path), _) => read_anchors(path, ds.n_samples())?,
        (None, Some(k)) => select_anchors(&ds, k, args.anchor_method, args.seed)?,
        (None, None) => {
            return Err(CliError::Usage(
                "either --anchors or --k is required".into(),
            ))
        }
    };
    let dim = resolve_dim(args.dim, &ds)?;
    args.dim = Some(dim);
    let cfg = tcgf_config(&args, dim);
    cfg.validate(ds.n_samples(), anchors.len(), ds.n_views())?;
    let graphs = tcgf::anchor_graphs(&ds, &anchors, args.knn)?;

    create_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("anchors.json"), &anchors)?;
    let outcome = match args.grid {
        None => {
            let result = tcgf::solve_graphs(&graphs, &cfg)?;
            write_tcgf_outputs(&args.out_dir, &result)?;
            if result.converged {
                Outcome::Done
            } else {
                log::warn!(
                    "stopped after {} iterations without converging",
                    result.iterations
                );
                Outcome::NotConverged
            }
        }
        Some(points) => run_grid(&args, &ds, &graphs, &cfg, points)?,
    };
    write_json(&args.out_dir.join(RUN_CONFIG), &Command::Tcgf(args.clone()))?;
    Ok(outcome)
}

fn run_grid(
    args: &TcgfArgs,
    ds: &MultiViewDataset,
    graphs: &[DMatrix<f64>],
    base: &TcgfConfig,
    points: usize,
) -> CliResult<Outcome> {
    let values = log_grid(args.grid_min, args.grid_max, points)?;
    let mut summary = String::from("lambda_e,lambda_r,converged,iterations,objective");
    if ds.labels().is_some() {
        summary.push_str(",acc,nmi,purity");
    }
    summary.push('\n');
    let mut all_converged = true;
    for &le in &values {
        for &lr in &values {
            let cfg = TcgfConfig {
                lambda_e: le,
                lambda_r: lr,
                ..base.clone()
            };
            let result = tcgf::solve_graphs(graphs, &cfg)?;
            let dir = args.out_dir.join(format!("le{le:.3e}_lr{lr:.3e}"));
            create_dir(&dir)?;
            write_tcgf_outputs(&dir, &result)?;
            all_converged &= result.converged;
            let objective = result.history.last().map_or(f64::NAN, |r| r.objective);
            summary.push_str(&format!(
                "{le:?},{lr:?},{},{},{objective:?}",
                result.converged, result.iterations
            ));
            if let Some(truth) = ds.labels() {
                let classes = ds.n_classes().unwrap_or(1);
                let eval = evaluate(&result.embedding, classes, Some(truth), 1, args.seed)?;
                summary.push_str(&format!(
                    ",{:?},{:?},{:?}",
                    eval.acc.unwrap_or(f64::NAN),
                    eval.nmi.unwrap_or(f64::NAN),
                    eval.purity.unwrap_or(f64::NAN)
                ));
            }
            summary.push('\n');
        }
    }
    write_atomic(&args.out_dir.join("grid.csv"), summary.as_bytes())?;
    Ok(if all_converged {
        Outcome::Done
    } else {
        Outcome::NotConverged
    })
}

#[derive(Serialize)]
struct GcmfSummary {
    converged: bool,
    sweeps: usize,
    eigen_ties: bool,
    zero_degree: bool,
}

pub fn cmd_gcmf(args: &GcmfArgs) -> CliResult<Outcome> {
    let mut args = args.clone();
    args.manifest = existing(&args.manifest)?;
    args.out_dir = absolute(&args.out_dir)?;
    let ds = load_manifest(&args.manifest)?;
    let dim = resolve_dim(args.dim, &ds)?;
    args.dim = Some(dim);
    let cfg = GcmfConfig {
        neighbors: args.neighbors,
        lambda_c: args.lambda_c,
        dim,
        view_dims: None,
        kernel: match args.kernel {
            KernelArg::Gaussian => Kernel::Gaussian,
            KernelArg::Linear => Kernel::Linear,
        },
        bandwidth: args.bandwidth.map_or(Bandwidth::Auto, Bandwidth::Fixed),
        tol: args.tol,
        max_sweeps: args.max_sweeps,
        reg: args.reg,
    };
    let result = gcmf::solve(&ds, &cfg)?;
    create_dir(&args.out_dir)?;
    for (v, u) in result.embeddings.iter().enumerate() {
        let path = args.out_dir.join(format!("embedding_view{}.csv", v + 1));
        save_matrix(path, MatrixFormat::Csv, &u.transpose())?;
    }
    write_atomic(
        &args.out_dir.join("history.csv"),
        gcmf::history_csv(&result.objective_history).as_bytes(),
    )?;
    write_json(
        &args.out_dir.join("summary.json"),
        &GcmfSummary {
            converged: result.converged,
            sweeps: result.sweeps,
            eigen_ties: result.eigen_ties,
            zero_degree: result.zero_degree,
        },
    )?;
    write_json(&args.out_dir.join(RUN_CONFIG), &Command::Gcmf(args.clone()))?;
    Ok(if result.converged {
        Outcome::Done
    } else {
        log::warn!("stopped after {} sweeps without converging", result.sweeps);
        Outcome::NotConverged
    })
}

pub fn cmd_cluster_eval(args: &ClusterEvalArgs) -> CliResult<Outcome> {
    let points = load_matrix(&args.embedding, MatrixFormat::from_path(&args.embedding))?;
    let truth = args.truth.as_deref().map(load_labels).transpose()?;
    let clusters = match (args.clusters, &truth) {
        (Some(c), _) => c,
        (None, Some(t)) => t.iter().max().map_or(1, |m| m + 1),
        (None, None) => {
            return Err(CliError::Usage(
                "--clusters is required without --truth".into(),
            ))
        }
    };
    let eval = evaluate(&points, clusters, truth.as_deref(), args.repeats, args.seed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_json(&args.out, &eval)?;
    Ok(Outcome::Done)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<Outcome> {
    let noise = match args.noise.as_slice() {
        [one] => vec![*one; args.dims.len()],
        many => many.to_vec(),
    };
    let ds = SyntheticBlobs {
        n_per_cluster: args.n_per_cluster,
        clusters: args.clusters,
        dims: args.dims.clone(),
        noise_sigmas: noise,
        seed: args.seed,
    }
    .generate()?;
    create_dir(&args.out_dir)?;
    save_dataset(&args.out_dir, &ds, args.format.into())?;
    Ok(Outcome::Done)
}

pub fn cmd_replay(args: &ReplayArgs) -> CliResult<Outcome> {
    let text = fs::read_to_string(&args.config).map_err(|e| mvtensor::Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let mut command: Command =
        serde_json::from_str(&text).map_err(|e| mvtensor::Error::Format {
            path: args.config.clone(),
            message: e.to_string(),
        })?;
    if let Some(dir) = &args.out_dir {
        match &mut command {
            Command::Tcgf(a) => a.out_dir = dir.clone(),
            Command::Gcmf(a) => a.out_dir = dir.clone(),
            Command::Synth(a) => a.out_dir = dir.clone(),
            Command::Anchors(_) | Command::ClusterEval(_) => {
                return Err(CliError::Usage(
                    "--out-dir does not apply to this command".into(),
                ))
            }
            Command::Replay(_) => {}
        }
    }
    if matches!(command, Command::Replay(_)) {
        return Err(CliError::Usage(
            "a replay config cannot replay another replay".into(),
        ));
    }
    run(&command)
}
