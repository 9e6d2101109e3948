//! Tensorized consensus graph learning solved by ADMM over anchor graphs.
//!
//! Every view contributes a row-stochastic `N × K` bipartite graph `B^(v)`.
//! The solver learns refined graphs `G^(v) = B^(v) − E^(v)` whose rotated
//! stack is pulled toward a low weighted-tubal-rank tensor `𝒵`, and a shared
//! embedding `(F_S, F_A)` whose linear kernel agrees with the weighted views.
//! The full `N × N` model is the case where every sample is an anchor.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::graph::{bipartite_graph, gaussian_knn_graph, AnchorSet, Bandwidth, DEGREE_FLOOR};
use crate::linalg::orient_by_largest;
use crate::tensor::{
    complete_orthonormal, prox_weighted_tnn_with, stack_rotate, unstack_rotate, SliceMode, Tensor3,
    WeightVector,
};

/// Lower clamp on view agreement values before the weight update.
pub const AGREEMENT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TcgfConfig {
    pub lambda_e: f64,
    pub lambda_r: f64,
    pub gamma: f64,
    pub dim: usize,
    /// Tensor nuclear norm weights, one per view; `None` means all ones.
    pub omega: Option<Vec<f64>>,
    pub mu0: f64,
    pub rho0: f64,
    pub eta: f64,
    pub penalty_cap: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for TcgfConfig {
    fn default() -> Self {
        Self {
            lambda_e: 0.1,
            lambda_r: 1.0,
            gamma: 0.5,
            dim: 2,
            omega: None,
            mu0: 0.1,
            rho0: 0.1,
            eta: 1.5,
            penalty_cap: 1e8,
            tol: 1e-6,
            max_iter: 100,
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl TcgfConfig {
    /// Checks the configuration against a problem with `n` samples, `k`
    /// anchors and `m` views.
    pub fn validate(&self, n: usize, k: usize, m: usize) -> Result<()> {
        positive("lambda_e", self.lambda_e)?;
        positive("lambda_r", self.lambda_r)?;
        check_gamma(self.gamma)?;
        positive("mu0", self.mu0)?;
        positive("rho0", self.rho0)?;
        positive("tol", self.tol)?;
        positive("penalty_cap", self.penalty_cap)?;
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eta must be greater than 1, got {}",
                self.eta
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.dim == 0 || self.dim > n.min(k) {
            return Err(Error::InvalidArgument(format!(
                "dim {} must satisfy 1 <= dim <= min(N, K) = {}",
                self.dim,
                n.min(k)
            )));
        }
        self.weights(m).map(|_| ())
    }

    fn weights(&self, m: usize) -> Result<WeightVector> {
        match &self.omega {
            None => Ok(WeightVector::ones(m)),
            Some(w) if w.len() != m => Err(Error::InvalidArgument(format!(
                "omega has {} entries for {m} views",
                w.len()
            ))),
            Some(w) => WeightVector::new(w.clone()),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )))
    }
}

/// One row of the convergence history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    /// `max_v ‖B^(v) − G^(v) − E^(v)‖_∞`.
    pub res_graph: f64,
    /// `‖𝒢 − 𝒵‖_∞`.
    pub res_tensor: f64,
    /// Penalties used during this iteration.
    pub mu: f64,
    pub rho: f64,
    pub alpha: Vec<f64>,
}

/// Every primal and dual variable of one solve.
#[derive(Clone, Debug)]
pub struct TcgfState {
    pub f_s: DMatrix<f64>,
    pub f_a: DMatrix<f64>,
    pub g: Vec<DMatrix<f64>>,
    pub e: Vec<DMatrix<f64>>,
    pub z: Tensor3,
    pub y: Vec<DMatrix<f64>>,
    pub y_tensor: Tensor3,
    pub alpha: Vec<f64>,
    pub mu: f64,
    pub rho: f64,
    pub history: Vec<IterRecord>,
}

impl TcgfState {
    /// `G = B`, `E = Y = 𝒴 = 0`, `𝒵` the rotated stack of `G`, uniform `α`.
    pub fn init(b: &[DMatrix<f64>], dim: usize, mu0: f64, rho0: f64) -> Result<Self> {
        let z = stack_rotate(b)?;
        let (n, k) = b[0].shape();
        let m = b.len();
        Ok(Self {
            f_s: DMatrix::zeros(n, dim),
            f_a: DMatrix::zeros(k, dim),
            g: b.to_vec(),
            e: vec![DMatrix::zeros(n, k); m],
            y: vec![DMatrix::zeros(n, k); m],
            y_tensor: Tensor3::zeros(n, m, k),
            z,
            alpha: vec![1.0 / m as f64; m],
            mu: mu0,
            rho: rho0,
            history: Vec::new(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TcgfResult {
    /// `F_S`, one row per sample.
    pub embedding: DMatrix<f64>,
    /// `F_A`, one row per anchor.
    pub anchor_embedding: DMatrix<f64>,
    /// `G_F = F_S F_Aᵀ`.
    pub consensus_graph: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub history: Vec<IterRecord>,
    /// Set when some embedding update asked for more directions than the
    /// rank of the fused graph.
    pub degenerate: bool,
}

/// Column sums of `g`, floored at [`DEGREE_FLOOR`].
pub fn column_degrees(g: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        g.ncols(),
        g.column_iter().map(|c| {
            let s = c.sum();
            if s > 0.0 {
                s
            } else {
                DEGREE_FLOOR
            }
        }),
    )
}

fn scale_columns(m: &DMatrix<f64>, inv: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col /= inv[j];
    }
    out
}

/// Output of [`update_f`].
#[derive(Clone, Debug)]
pub struct Embedding {
    pub f_s: DMatrix<f64>,
    pub f_a: DMatrix<f64>,
    pub degenerate: bool,
}

/// Closed-form embedding update: `F_S = (√2/2) U_d`, `F_A = (√2/2) V_d` from
/// the top-`d` singular pairs of `M̂ = Σ_v α_v^γ G^(v) D^(v)⁻¹`.
///
/// `degrees[v]` is the column-degree vector used for view `v`.
pub fn update_f(
    g: &[DMatrix<f64>],
    degrees: &[DVector<f64>],
    alpha: &[f64],
    gamma: f64,
    dim: usize,
) -> Result<Embedding> {
    let (n, k) = g
        .first()
        .map(|m| m.shape())
        .ok_or_else(|| Error::Shape("at least one view is required".into()))?;
    if dim == 0 || dim > n.min(k) {
        return Err(Error::InvalidArgument(format!(
            "dim {dim} must satisfy 1 <= dim <= {}",
            n.min(k)
        )));
    }
    let mut m_hat = DMatrix::zeros(n, k);
    for ((gv, dv), &av) in g.iter().zip(degrees).zip(alpha) {
        m_hat += scale_columns(gv, dv) * av.powf(gamma);
    }
    let (u, sv, v) = thin_svd(m_hat)?;
    let cutoff = sv.first().copied().unwrap_or(0.0) * 1e-12 * n.max(k) as f64;
    let rank = sv
        .iter()
        .take(dim)
        .filter(|&&s| s > cutoff && s > 0.0)
        .count();

    let mut left: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut right: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for i in 0..rank {
        let mut l: Vec<f64> = u.column(i).iter().copied().collect();
        let mut r = v.column(i).into_owned();
        if orient_by_largest(&mut l) {
            r.neg_mut();
        }
        left.push(DVector::from_vec(l));
        right.push(r);
    }
    let degenerate = rank < dim;
    if degenerate {
        let lc = complete_orthonormal(&columns(&left, n));
        let rc = complete_orthonormal(&columns(&right, k));
        for i in rank..dim {
            let mut l: Vec<f64> = lc.column(i).iter().copied().collect();
            orient_by_largest(&mut l);
            left.push(DVector::from_vec(l));
            right.push(rc.column(i).into_owned());
        }
    }
    let half = std::f64::consts::FRAC_1_SQRT_2;
    Ok(Embedding {
        f_s: DMatrix::from_columns(&left) * half,
        f_a: DMatrix::from_columns(&right) * half,
        degenerate,
    })
}

fn columns(cols: &[DVector<f64>], rows: usize) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

/// Thin SVD of a tall or wide matrix through a QR factorization of the tall
/// orientation, so the expensive SVD runs on a small square factor.
fn thin_svd(m: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (n, k) = m.shape();
    if n < k {
        let (v, s, u) = thin_svd(m.transpose())?;
        return Ok((u, s, v));
    }
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    let svd = r.svd(true, true);
    let ur = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let u_full = q * ur;
    let v = v_t.transpose();
    let u = u_full.select_columns(&order);
    let v = v.select_columns(&order);
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((u, s, v))
}

/// Weighted tensor singular value thresholding of `𝒢 + 𝒴/ρ` at `λ_R/ρ`,
/// returned with the weighted nuclear norm of the result.
pub fn update_z(
    g_tensor: &Tensor3,
    y_tensor: &Tensor3,
    rho: f64,
    lambda_r: f64,
    omega: &WeightVector,
) -> Result<(Tensor3, f64)> {
    positive("rho", rho)?;
    let target = g_tensor.add_scaled(y_tensor, 1.0 / rho)?;
    prox_weighted_tnn_with(&target, lambda_r / rho, omega, SliceMode::Half)
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot project an empty vector".into(),
        ));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite entry at position {i}"
        )));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    Ok(v.iter().map(|x| (x - theta).max(0.0)).collect())
}

/// Inputs of [`update_g`] for one view.
pub struct GraphUpdate<'a> {
    pub b: &'a DMatrix<f64>,
    pub e: &'a DMatrix<f64>,
    pub y: &'a DMatrix<f64>,
    pub z_slice: &'a DMatrix<f64>,
    pub y_tensor_slice: &'a DMatrix<f64>,
    /// `F_S F_Aᵀ`.
    pub consensus: &'a DMatrix<f64>,
    pub d_prev: &'a DVector<f64>,
    pub alpha_v: f64,
    pub gamma: f64,
    pub mu: f64,
    pub rho: f64,
}

/// Row-wise simplex projection of the affine target `P + Q`.
pub fn update_g(p: &GraphUpdate<'_>) -> Result<DMatrix<f64>> {
    positive("mu", p.mu)?;
    positive("rho", p.rho)?;
    let denom = p.mu + p.rho;
    let weight = p.alpha_v.powf(p.gamma) / denom;
    let (n, k) = p.b.shape();
    let mut target = DMatrix::zeros(n, k);
    for j in 0..k {
        let inv_d = 1.0 / p.d_prev[j];
        for i in 0..n {
            let pv = (p.mu * (p.b[(i, j)] - p.e[(i, j)]) + p.y[(i, j)] + p.rho * p.z_slice[(i, j)]
                - p.y_tensor_slice[(i, j)])
                / denom;
            target[(i, j)] = pv + weight * p.consensus[(i, j)] * inv_d;
        }
    }
    let rows = (0..n)
        .into_par_iter()
        .map(|i| project_simplex(&target.row(i).iter().copied().collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
}

/// Elementwise soft-thresholding of `Γ = B − G + Y/μ` at `λ_E/μ`.
pub fn update_e(
    b: &DMatrix<f64>,
    g: &DMatrix<f64>,
    y: &DMatrix<f64>,
    mu: f64,
    lambda_e: f64,
) -> Result<DMatrix<f64>> {
    positive("mu", mu)?;
    let t = lambda_e / mu;
    Ok(DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| {
        soft_threshold(b[(i, j)] - g[(i, j)] + y[(i, j)] / mu, t)
    }))
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// View weights maximizing `Σ_v α_v^γ h_v` over the simplex.
pub fn update_alpha(h: &[f64], gamma: f64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if h.is_empty() {
        return Err(Error::InvalidArgument("no agreement values".into()));
    }
    let h: Vec<f64> = h.iter().map(|&v| v.max(AGREEMENT_FLOOR)).collect();
    let top = h.iter().copied().fold(f64::MIN, f64::max);
    let p = 1.0 / (1.0 - gamma);
    let raw: Vec<f64> = h.iter().map(|&v| (v / top).powf(p)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.iter().map(|r| r / total).collect())
}

/// `tr(G_Fᵀ G D⁻¹)`.
pub fn agreement(consensus: &DMatrix<f64>, g: &DMatrix<f64>, degrees: &DVector<f64>) -> f64 {
    let mut total = 0.0;
    for j in 0..g.ncols() {
        let col: f64 = consensus.column(j).dot(&g.column(j));
        total += col / degrees[j];
    }
    total
}

/// Dual ascent on both constraint sets followed by penalty growth.
pub fn update_multipliers(
    state: &mut TcgfState,
    b: &[DMatrix<f64>],
    eta: f64,
    cap: f64,
) -> Result<()> {
    for ((y, bv), (g, e)) in state.y.iter_mut().zip(b).zip(state.g.iter().zip(&state.e)) {
        *y += (bv - g - e) * state.mu;
    }
    let g_tensor = stack_rotate(&state.g)?;
    let diff = g_tensor.add_scaled(&state.z, -1.0)?;
    state.y_tensor = state.y_tensor.add_scaled(&diff, state.rho)?;
    state.mu = (eta * state.mu).min(cap);
    state.rho = (eta * state.rho).min(cap);
    Ok(())
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn check_graphs(b: &[DMatrix<f64>]) -> Result<(usize, usize)> {
    let first = b
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one view is required".into()))?;
    let shape = first.shape();
    for (v, bv) in b.iter().enumerate() {
        if bv.shape() != shape {
            return Err(Error::Shape(format!(
                "view {v} graph is {}x{}, view 0 is {}x{}",
                bv.nrows(),
                bv.ncols(),
                shape.0,
                shape.1
            )));
        }
        if bv.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "view {v} graph has negative or non-finite entries"
            )));
        }
    }
    Ok(shape)
}

/// One ADMM pass over all variables. Returns whether the embedding update
/// was degenerate.
fn iterate(
    state: &mut TcgfState,
    b: &[DMatrix<f64>],
    cfg: &TcgfConfig,
    omega: &WeightVector,
    iter: usize,
) -> Result<bool> {
    let degrees: Vec<DVector<f64>> = state.g.iter().map(column_degrees).collect();

    let emb = update_f(&state.g, &degrees, &state.alpha, cfg.gamma, cfg.dim)?;
    state.f_s = emb.f_s;
    state.f_a = emb.f_a;
    let consensus = &state.f_s * state.f_a.transpose();

    let g_tensor = stack_rotate(&state.g)?;
    let (z, z_norm) = update_z(&g_tensor, &state.y_tensor, state.rho, cfg.lambda_r, omega)?;
    state.z = z;
    let z_slices = unstack_rotate(&state.z);
    let yt_slices = unstack_rotate(&state.y_tensor);

    state.g = (0..b.len())
        .into_par_iter()
        .map(|v| {
            update_g(&GraphUpdate {
                b: &b[v],
                e: &state.e[v],
                y: &state.y[v],
                z_slice: &z_slices[v],
                y_tensor_slice: &yt_slices[v],
                consensus: &consensus,
                d_prev: &degrees[v],
                alpha_v: state.alpha[v],
                gamma: cfg.gamma,
                mu: state.mu,
                rho: state.rho,
            })
            .map_err(|e| Error::Numerical(format!("graph update for view {v}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    state.e = (0..b.len())
        .into_par_iter()
        .map(|v| update_e(&b[v], &state.g[v], &state.y[v], state.mu, cfg.lambda_e))
        .collect::<Result<Vec<_>>>()?;

    let h: Vec<f64> = state
        .g
        .iter()
        .zip(&degrees)
        .map(|(g, d)| agreement(&consensus, g, d))
        .collect();
    state.alpha = update_alpha(&h, cfg.gamma)?;

    let res_graph = b
        .iter()
        .zip(state.g.iter().zip(&state.e))
        .map(|(bv, (g, e))| inf_norm(&(bv - g - e)))
        .fold(0.0, f64::max);
    let res_tensor = stack_rotate(&state.g)?.max_abs_diff(&state.z);

    let fused: f64 = state
        .alpha
        .iter()
        .zip(&h)
        .map(|(a, hv)| a.powf(cfg.gamma) * hv)
        .sum();
    let sparse: f64 = state
        .e
        .iter()
        .map(|e| e.iter().map(|x| x.abs()).sum::<f64>())
        .sum();
    // The thresholding step minimizes the nuclear norm scaled by 1/K.
    let k = b[0].ncols() as f64;
    let objective = -fused + cfg.lambda_e * sparse + cfg.lambda_r * z_norm / k;

    state.history.push(IterRecord {
        iter,
        objective,
        res_graph,
        res_tensor,
        mu: state.mu,
        rho: state.rho,
        alpha: state.alpha.clone(),
    });
    update_multipliers(state, b, cfg.eta, cfg.penalty_cap)?;
    Ok(emb.degenerate)
}

/// Runs the solver on prebuilt row-stochastic `N × K` graphs, one per view.
pub fn solve_graphs(b: &[DMatrix<f64>], cfg: &TcgfConfig) -> Result<TcgfResult> {
    let (n, k) = check_graphs(b)?;
    cfg.validate(n, k, b.len())?;
    let omega = cfg.weights(b.len())?;
    let mut state = TcgfState::init(b, cfg.dim, cfg.mu0, cfg.rho0)?;
    let mut converged = false;
    let mut degenerate = false;
    for iter in 1..=cfg.max_iter {
        degenerate |=
            iterate(&mut state, b, cfg, &omega, iter).map_err(|e| Error::AtIteration {
                iteration: iter,
                source: Box::new(e),
            })?;
        let last = state.history.last().expect("iteration recorded");
        log::debug!(
            "iter {iter}: objective {:.6e}, residuals {:.3e} / {:.3e}",
            last.objective,
            last.res_graph,
            last.res_tensor
        );
        if last.res_graph.max(last.res_tensor) < cfg.tol {
            converged = true;
            break;
        }
    }
    let iterations = state.history.len();
    // Refresh the embedding against the final graphs.
    let degrees: Vec<DVector<f64>> = state.g.iter().map(column_degrees).collect();
    let emb = update_f(&state.g, &degrees, &state.alpha, cfg.gamma, cfg.dim).map_err(|e| {
        Error::AtIteration {
            iteration: iterations,
            source: Box::new(e),
        }
    })?;
    degenerate |= emb.degenerate;
    if degenerate {
        log::warn!("embedding dimension exceeds the rank of the fused graph");
    }
    let consensus_graph = &emb.f_s * emb.f_a.transpose();
    Ok(TcgfResult {
        embedding: emb.f_s,
        anchor_embedding: emb.f_a,
        consensus_graph,
        alpha: state.alpha,
        converged,
        iterations,
        history: state.history,
        degenerate,
    })
}

/// Bipartite graphs of every view against the given anchors, each sample
/// linked to its `neighbors` nearest anchors.
pub fn anchor_graphs(
    ds: &MultiViewDataset,
    anchors: &AnchorSet,
    neighbors: usize,
) -> Result<Vec<DMatrix<f64>>> {
    anchors.validate(ds.n_samples())?;
    ds.views()
        .iter()
        .enumerate()
        .map(|(v, x)| {
            bipartite_graph(x, &anchors.features(x), neighbors)
                .map(|g| g.matrix)
                .map_err(|e| Error::InvalidArgument(format!("view {v}: {e}")))
        })
        .collect()
}

/// Row-normalized Gaussian kNN graphs for the full model, where every sample
/// is an anchor.
pub fn full_graphs(
    ds: &MultiViewDataset,
    neighbors: usize,
    bandwidth: Bandwidth,
) -> Result<Vec<DMatrix<f64>>> {
    ds.views()
        .iter()
        .map(|x| {
            let mut s = gaussian_knn_graph(x, neighbors, bandwidth)?.matrix;
            for mut row in s.row_iter_mut() {
                let total = row.sum();
                if total > 0.0 {
                    row /= total;
                }
            }
            Ok(s)
        })
        .collect()
}

/// Solves on the anchor graphs of `ds`.
pub fn solve(
    ds: &MultiViewDataset,
    anchors: &AnchorSet,
    neighbors: usize,
    cfg: &TcgfConfig,
) -> Result<TcgfResult> {
    solve_graphs(&anchor_graphs(ds, anchors, neighbors)?, cfg)
}

/// History as CSV with columns
/// `iter,objective,res_graph_inf,res_tensor_inf,mu,rho,alpha_1..alpha_M`.
pub fn history_csv(history: &[IterRecord]) -> String {
    let m = history.first().map_or(0, |r| r.alpha.len());
    let mut out = String::from("iter,objective,res_graph_inf,res_tensor_inf,mu,rho");
    for v in 1..=m {
        let _ = write!(out, ",alpha_{v}");
    }
    out.push('\n');
    for r in history {
        let _ = write!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?}",
            r.iter, r.objective, r.res_graph, r.res_tensor, r.mu, r.rho
        );
        for a in &r.alpha {
            let _ = write!(out, ",{a:?}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_columns_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_stochastic(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(n, k, |_, _| rng.random_range(0.0..1.0));
        for mut row in m.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        m
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(
            project_simplex(&[0.3, 0.3, 0.4]).unwrap(),
            vec![0.3, 0.3, 0.4]
        );
        assert_eq!(project_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_simplex(&[5.0]).unwrap(), vec![1.0]);
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn update_f_examples() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let d = DVector::from_element(2, 1.0);
        let emb = update_f(&[g], &[d], &[1.0], 0.5, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((emb.f_s[(0, 0)] - h).abs() < 1e-15 && emb.f_s[(1, 0)].abs() < 1e-15);
        assert!((emb.f_a[(0, 0)] - h).abs() < 1e-15 && emb.f_a[(1, 0)].abs() < 1e-15);
        assert!(!emb.degenerate);

        // Rank one but two directions requested.
        let g = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let emb = update_f(&[g], &[DVector::from_element(2, 1.0)], &[1.0], 0.5, 2).unwrap();
        assert!(emb.degenerate);
        let stacked = DMatrix::from_fn(5, 2, |i, j| {
            if i < 3 {
                emb.f_s[(i, j)]
            } else {
                emb.f_a[(i - 3, j)]
            }
        });
        assert!(orthonormal_columns_error(&stacked) < 1e-12);
    }

    #[test]
    fn update_f_orthonormal_and_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_stochastic(&mut rng, 12, 5);
        let d = column_degrees(&g);
        let emb = update_f(
            std::slice::from_ref(&g),
            std::slice::from_ref(&d),
            &[1.0],
            0.5,
            3,
        )
        .unwrap();
        let gram = emb.f_s.transpose() * &emb.f_s + emb.f_a.transpose() * &emb.f_a;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-10);

        let svd = scale_columns(&g, &d).svd(true, true);
        let u = svd.u.unwrap();
        for c in 0..3 {
            let dot = emb.f_s.column(c).dot(&u.column(c)) * 2f64.sqrt();
            assert!((dot.abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn update_z_scalar_and_vanishing() {
        let g = Tensor3::from_vec(1, 1, 1, vec![5.0]).unwrap();
        let y = Tensor3::zeros(1, 1, 1);
        let (z, _) = update_z(&g, &y, 0.5, 1.0, &WeightVector::ones(1)).unwrap();
        assert!((z.get(0, 0, 0) - 3.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gs: Vec<_> = (0..2).map(|_| random_stochastic(&mut rng, 4, 3)).collect();
        let g = stack_rotate(&gs).unwrap();
        let (z, _) = update_z(
            &g,
            &Tensor3::zeros(4, 2, 3),
            1e12,
            1.0,
            &WeightVector::ones(2),
        )
        .unwrap();
        assert!(z.max_abs_diff(&g) < 1e-9);
    }

    #[test]
    fn update_g_fixed_point_and_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_stochastic(&mut rng, 4, 3);
        let zero = DMatrix::zeros(4, 3);
        let d = DVector::from_element(3, 1.0);
        let g = update_g(&GraphUpdate {
            b: &b,
            e: &zero,
            y: &zero,
            z_slice: &b,
            y_tensor_slice: &zero,
            consensus: &zero,
            d_prev: &d,
            alpha_v: 0.5,
            gamma: 0.5,
            mu: 1.0,
            rho: 2.0,
        })
        .unwrap();
        assert!((g - &b).amax() < 1e-15);

        let b = DMatrix::from_row_slice(1, 2, &[2.0, 0.0]);
        let zero = DMatrix::zeros(1, 2);
        let g = update_g(&GraphUpdate {
            b: &b,
            e: &zero,
            y: &zero,
            z_slice: &b,
            y_tensor_slice: &zero,
            consensus: &zero,
            d_prev: &DVector::from_element(2, 1.0),
            alpha_v: 1.0,
            gamma: 0.5,
            mu: 1.0,
            rho: 1.0,
        })
        .unwrap();
        assert_eq!(g.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
    }

    #[test]
    fn update_e_examples() {
        let z = DMatrix::zeros(1, 3);
        let b = DMatrix::from_row_slice(1, 3, &[0.5, -3.0, 3.0]);
        let e = update_e(&b, &z, &z, 1.0, 1.0).unwrap();
        assert_eq!(
            e.row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, -2.0, 2.0]
        );
        assert!(update_e(&b, &z, &z, 0.0, 1.0).is_err());
    }

    #[test]
    fn update_alpha_examples() {
        let a = update_alpha(&[2.0, 2.0, 2.0], 0.5).unwrap();
        assert!(a.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let a = update_alpha(&[2.0, 1.0], 0.5).unwrap();
        assert!((a[0] - 0.8).abs() < 1e-15 && (a[1] - 0.2).abs() < 1e-15);
        let a = update_alpha(&[4.0, 1.0], 0.5).unwrap();
        assert!((a[0] - 16.0 / 17.0).abs() < 1e-15);
        assert_eq!(update_alpha(&[0.3], 0.5).unwrap(), vec![1.0]);
        assert!(update_alpha(&[1.0], 1.0).is_err());
        assert!(update_alpha(&[1.0], 0.0).is_err());
        // All-zero agreements fall back to the floor and stay uniform.
        assert_eq!(update_alpha(&[0.0, -1.0], 0.5).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn multipliers_examples() {
        let b = vec![DMatrix::from_element(1, 1, 3.0)];
        let mut st = TcgfState::init(&[DMatrix::zeros(1, 1)], 1, 2.0, 1.0).unwrap();
        update_multipliers(&mut st, &b, 1.5, 2.5).unwrap();
        assert_eq!(st.y[0][(0, 0)], 6.0);
        assert_eq!(st.mu, 2.5);
        assert_eq!(st.rho, 1.5);

        let mut st = TcgfState::init(&b, 1, 0.1, 0.1).unwrap();
        update_multipliers(&mut st, &b, 1.5, 1e8).unwrap();
        assert_eq!(st.y[0][(0, 0)], 0.0);
        assert_eq!(st.y_tensor.get(0, 0, 0), 0.0);
        assert!((st.mu - 0.15).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let ok = TcgfConfig::default();
        assert!(ok.validate(10, 5, 2).is_ok());
        assert!(TcgfConfig {
            dim: 6,
            ..ok.clone()
        }
        .validate(10, 5, 2)
        .is_err());
        assert!(TcgfConfig {
            gamma: 1.0,
            ..ok.clone()
        }
        .validate(10, 5, 2)
        .is_err());
        assert!(TcgfConfig {
            eta: 1.0,
            ..ok.clone()
        }
        .validate(10, 5, 2)
        .is_err());
        assert!(TcgfConfig {
            lambda_e: 0.0,
            ..ok.clone()
        }
        .validate(10, 5, 2)
        .is_err());
        assert!(TcgfConfig {
            omega: Some(vec![1.0]),
            ..ok
        }
        .validate(10, 5, 2)
        .is_err());
    }

    #[test]
    fn decoupled_single_view() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_stochastic(&mut rng, 15, 6);
        let cfg = TcgfConfig {
            lambda_e: 1e6,
            lambda_r: 1e-9,
            dim: 2,
            ..TcgfConfig::default()
        };
        let res = solve_graphs(std::slice::from_ref(&b), &cfg).unwrap();
        assert_eq!(res.history.len(), res.iterations);
        let reference = update_f(
            std::slice::from_ref(&b),
            &[column_degrees(&b)],
            &[1.0],
            0.5,
            2,
        )
        .unwrap();
        // G only matches B up to the residual tolerance.
        assert!(res.converged);
        assert!((&res.embedding - &reference.f_s).amax() < 1e-4);
    }

    #[test]
    fn history_csv_layout() {
        let rec = IterRecord {
            iter: 1,
            objective: -1.5,
            res_graph: 0.25,
            res_tensor: 0.0,
            mu: 0.1,
            rho: 0.1,
            alpha: vec![0.5, 0.5],
        };
        let csv = history_csv(&[rec]);
        assert_eq!(
            csv,
            "iter,objective,res_graph_inf,res_tensor_inf,mu,rho,alpha_1,alpha_2\n1,-1.5,0.25,0.0,0.1,0.1,0.5,0.5\n"
        );
    }
}
