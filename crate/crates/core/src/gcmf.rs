//! Multi-view LLE with cross-view graph consensus, solved by alternating
//! per-view eigendecompositions.
//!
//! Each view keeps its own `d × N` embedding `U^v` with orthonormal rows.
//! The objective sums the LLE reconstruction costs `tr(U^v M^v U^vᵀ)` and
//! consensus penalties `λ_C tr(U^v L^w U^vᵀ)`, where `L^w` is the normalized
//! Laplacian of a kernel graph built on the current embedding of view `w`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::graph::{degree_and_normalize, lle_weights, Bandwidth, GraphKind, ViewGraph};
use crate::linalg::{median, sym_eigen_ascending};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcmfConfig {
    pub neighbors: usize,
    pub lambda_c: f64,
    pub dim: usize,
    /// Per-view dimensions overriding `dim`.
    pub view_dims: Option<Vec<usize>>,
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    pub tol: f64,
    pub max_sweeps: usize,
    pub reg: f64,
}

impl Default for GcmfConfig {
    fn default() -> Self {
        Self {
            neighbors: 10,
            lambda_c: 1.0,
            dim: 2,
            view_dims: None,
            kernel: Kernel::Gaussian,
            bandwidth: Bandwidth::Auto,
            tol: 1e-6,
            max_sweeps: 50,
            reg: 1e-3,
        }
    }
}

impl GcmfConfig {
    /// Embedding dimension of every view.
    pub fn dims(&self, views: usize) -> Vec<usize> {
        self.view_dims
            .clone()
            .unwrap_or_else(|| vec![self.dim; views])
    }

    pub fn validate(&self, n: usize, views: usize) -> Result<()> {
        if !(self.lambda_c > 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda_c must be positive, got {}",
                self.lambda_c
            )));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tol must be >= 0, got {}",
                self.tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument(
                "max_sweeps must be at least 1".into(),
            ));
        }
        if self.neighbors == 0 || self.neighbors >= n {
            return Err(Error::InvalidArgument(format!(
                "neighbors {} must satisfy 1 <= k < {n}",
                self.neighbors
            )));
        }
        if let Bandwidth::Fixed(s) = self.bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "bandwidth must be positive, got {s}"
                )));
            }
        }
        let dims = self.dims(views);
        if dims.len() != views {
            return Err(Error::InvalidArgument(format!(
                "{} view dimensions for {views} views",
                dims.len()
            )));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0 || d >= n) {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension {d} must satisfy 1 <= d < {n}"
            )));
        }
        Ok(())
    }
}

/// `(I − S)ᵀ(I − S)` for a square reconstruction-weight graph.
pub fn build_m(s: &ViewGraph) -> Result<DMatrix<f64>> {
    let w = &s.matrix;
    if !w.is_square() {
        return Err(Error::Shape(format!(
            "reconstruction graph must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    if s.kind != GraphKind::Lle {
        log::debug!("building the LLE cost from a {:?} graph", s.kind);
    }
    let r = DMatrix::identity(w.nrows(), w.ncols()) - w;
    Ok(r.transpose() * r)
}

/// Normalized Laplacian of the kernel graph over the columns of `u`.
/// The boolean reports a zero-degree node.
pub fn consensus_laplacian(
    u: &DMatrix<f64>,
    kernel: Kernel,
    bandwidth: Bandwidth,
) -> Result<(DMatrix<f64>, bool)> {
    let n = u.ncols();
    let gram = u.transpose() * u;
    let sq = |i: usize, j: usize| (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
    let g = match kernel {
        Kernel::Linear => gram.map(|v| v.max(0.0)),
        Kernel::Gaussian => {
            let sigma = match bandwidth {
                Bandwidth::Fixed(s) => s,
                Bandwidth::Auto => {
                    let mut d: Vec<f64> = (0..n)
                        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                        .map(|(i, j)| sq(i, j).sqrt())
                        .collect();
                    if d.is_empty() {
                        0.0
                    } else {
                        median(&mut d)
                    }
                }
            };
            if sigma > 0.0 {
                let two_s2 = 2.0 * sigma * sigma;
                DMatrix::from_fn(n, n, |i, j| (-sq(i, j) / two_s2).exp())
            } else {
                // A zero bandwidth only arises when the median distance is
                // zero; coincident points stay fully connected.
                DMatrix::from_fn(n, n, |i, j| if sq(i, j) == 0.0 { 1.0 } else { 0.0 })
            }
        }
    };
    let norm = degree_and_normalize(&g)?;
    Ok((
        norm.laplacian.expect("kernel graph is square"),
        norm.zero_degree,
    ))
}

/// Output of [`update_view_embedding`].
#[derive(Clone, Debug)]
pub struct ViewEmbedding {
    /// `d × N`, orthonormal rows.
    pub u: DMatrix<f64>,
    /// The `d` smallest eigenvalues of `C^v`.
    pub eigenvalues: Vec<f64>,
    /// Set when the `d`-th and `(d+1)`-th eigenvalues coincide.
    pub tie: bool,
}

/// Rows are the eigenvectors of `m + λ_C Σ L^w` for the `dim` smallest
/// eigenvalues.
pub fn update_view_embedding(
    m: &DMatrix<f64>,
    laplacians: &[&DMatrix<f64>],
    lambda_c: f64,
    dim: usize,
) -> Result<ViewEmbedding> {
    let n = m.nrows();
    if dim == 0 || dim > n {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension {dim} must satisfy 1 <= d <= {n}"
        )));
    }
    let mut c = m.clone();
    for l in laplacians {
        if l.shape() != c.shape() {
            return Err(Error::Shape(format!(
                "Laplacian is {}x{}, cost matrix is {n}x{n}",
                l.nrows(),
                l.ncols()
            )));
        }
        c += *l * lambda_c;
    }
    // Symmetrize away rounding so the eigensolver sees an exact symmetric
    // matrix.
    let c = (&c + c.transpose()) * 0.5;
    let (values, vectors) = sym_eigen_ascending(&c)?;
    let tie = dim < n && {
        let (a, b) = (values[dim - 1], values[dim]);
        (b - a).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
    };
    Ok(ViewEmbedding {
        u: vectors.columns(0, dim).transpose(),
        eigenvalues: values[..dim].to_vec(),
        tie,
    })
}

/// Solver state between sweeps.
#[derive(Clone, Debug)]
pub struct GcmfState {
    pub u: Vec<DMatrix<f64>>,
    pub m_mats: Vec<DMatrix<f64>>,
    pub objective_history: Vec<f64>,
    pub start_objectives: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GcmfResult {
    /// One `d^v × N` embedding per view.
    pub embeddings: Vec<DMatrix<f64>>,
    /// Objective after each sweep, evaluated with the Laplacians that were
    /// frozen during that sweep.
    pub objective_history: Vec<f64>,
    /// Objective at the start of each sweep under the same Laplacians.
    /// Every sweep satisfies `objective_history[s] <= start_objectives[s]`
    /// up to rounding.
    pub start_objectives: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Some view update hit an eigenvalue tie at its cut-off.
    pub eigen_ties: bool,
    /// Some consensus graph had a zero-degree node.
    pub zero_degree: bool,
}

fn laplacians(u: &[DMatrix<f64>], cfg: &GcmfConfig) -> Result<(Vec<DMatrix<f64>>, bool)> {
    let built = u
        .par_iter()
        .enumerate()
        .map(|(w, uw)| {
            consensus_laplacian(uw, cfg.kernel, cfg.bandwidth)
                .map_err(|e| Error::Numerical(format!("consensus graph of view {w}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let zero = built.iter().any(|(_, z)| *z);
    Ok((built.into_iter().map(|(l, _)| l).collect(), zero))
}

/// `Σ_v tr(U^v M^v U^vᵀ) + λ_C Σ_v Σ_{w≠v} tr(U^v L^w U^vᵀ)`.
pub fn objective(
    u: &[DMatrix<f64>],
    m_mats: &[DMatrix<f64>],
    laps: &[DMatrix<f64>],
    lambda_c: f64,
) -> f64 {
    let quad = |uv: &DMatrix<f64>, a: &DMatrix<f64>| (uv * a).component_mul(uv).sum();
    let mut total = 0.0;
    for (v, uv) in u.iter().enumerate() {
        total += quad(uv, &m_mats[v]);
        for (w, l) in laps.iter().enumerate() {
            if w != v {
                total += lambda_c * quad(uv, l);
            }
        }
    }
    total
}

fn sweep(
    state: &GcmfState,
    laps: &[DMatrix<f64>],
    dims: &[usize],
    lambda_c: f64,
) -> Result<Vec<ViewEmbedding>> {
    (0..state.m_mats.len())
        .map(|v| {
            let others: Vec<&DMatrix<f64>> = laps
                .iter()
                .enumerate()
                .filter(|(w, _)| *w != v)
                .map(|(_, l)| l)
                .collect();
            update_view_embedding(&state.m_mats[v], &others, lambda_c, dims[v])
                .map_err(|e| Error::Numerical(format!("embedding update of view {v}: {e}")))
        })
        .collect()
}

/// Alternating solve. Consensus Laplacians are rebuilt from the embeddings at
/// the start of every sweep and held fixed while each view is updated, so
/// every view update is the global minimizer of its share of the sweep's
/// objective.
pub fn solve(ds: &MultiViewDataset, cfg: &GcmfConfig) -> Result<GcmfResult> {
    let n = ds.n_samples();
    let views = ds.n_views();
    cfg.validate(n, views)?;
    let dims = cfg.dims(views);
    let m_mats = ds
        .views()
        .par_iter()
        .enumerate()
        .map(|(v, x)| {
            lle_weights(x, cfg.neighbors, cfg.reg)
                .and_then(|s| build_m(&s))
                .map_err(|e| Error::InvalidArgument(format!("view {v}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut state = GcmfState {
        u: Vec::with_capacity(views),
        m_mats,
        objective_history: Vec::new(),
        start_objectives: Vec::new(),
    };
    let mut eigen_ties = false;
    let mut zero_degree = false;
    let init = sweep(&state, &[], &dims, 0.0)?;
    for e in init {
        eigen_ties |= e.tie;
        state.u.push(e.u);
    }

    let mut previous: Option<f64> = None;
    let mut converged = false;
    for s in 1..=cfg.max_sweeps {
        let at = |e: Error| Error::AtIteration {
            iteration: s,
            source: Box::new(e),
        };
        let (laps, z) = laplacians(&state.u, cfg).map_err(at)?;
        zero_degree |= z;
        let start = objective(&state.u, &state.m_mats, &laps, cfg.lambda_c);
        let updated = sweep(&state, &laps, &dims, cfg.lambda_c).map_err(at)?;
        state.u = updated
            .into_iter()
            .map(|e| {
                eigen_ties |= e.tie;
                e.u
            })
            .collect();
        let value = objective(&state.u, &state.m_mats, &laps, cfg.lambda_c);
        state.start_objectives.push(start);
        state.objective_history.push(value);
        log::debug!("sweep {s}: objective {start:.10e} -> {value:.10e}");
        let reference = previous.unwrap_or(start);
        let change = (reference - value).abs() / reference.abs().max(f64::MIN_POSITIVE);
        previous = Some(value);
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if eigen_ties {
        log::warn!("eigenvalue tie at the embedding cut-off; ordering fixed by convention");
    }
    Ok(GcmfResult {
        sweeps: state.objective_history.len(),
        embeddings: state.u,
        objective_history: state.objective_history,
        start_objectives: state.start_objectives,
        converged,
        eigen_ties,
        zero_degree,
    })
}

/// Objective history as CSV with columns `sweep,objective`.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("sweep,objective\n");
    for (i, v) in history.iter().enumerate() {
        let _ = writeln!(out, "{},{v:?}", i + 1);
    }
    out
}
