//! Graph construction: Gaussian kNN similarity graphs, LLE reconstruction
//! weights, anchor selection and sample-to-anchor bipartite graphs.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, KmeansOptions};
use crate::dataset::MultiViewDataset;
use crate::error::{Error, Result};
use crate::linalg::{median, rows_of, sq_dist, sym_eigen_ascending};

/// Degree assigned to an empty column so that `D⁻¹` stays finite.
pub const DEGREE_FLOOR: f64 = 1e-12;

/// Floor for feature standard deviations during standardization.
const STD_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Similarity,
    Lle,
    Bipartite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewGraph {
    pub matrix: DMatrix<f64>,
    pub kind: GraphKind,
    pub row_stochastic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// Median of the retained neighbor distances.
    Auto,
    Fixed(f64),
}

fn check_neighbors(k: usize, n: usize, what: &str) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "{what}: neighbor count {k} must satisfy 1 <= k < {n}"
        )));
    }
    Ok(())
}

/// The `k` nearest other rows of every row, nearest first. Ties at equal
/// distance go to the lower index.
pub fn knn_indices(x: &DMatrix<f64>, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = x.nrows();
    check_neighbors(k, n, "kNN")?;
    let rows = rows_of(x);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, sq_dist(&rows[i], &rows[j])))
                .collect();
            cand.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            cand.truncate(k);
            cand
        })
        .collect())
}

/// Symmetrized Gaussian kNN similarity graph with zero diagonal.
pub fn gaussian_knn_graph(x: &DMatrix<f64>, k: usize, bandwidth: Bandwidth) -> Result<ViewGraph> {
    let n = x.nrows();
    let neighbors = knn_indices(x, k)?;
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Bandwidth::Fixed(s) => {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {s}"
            )))
        }
        Bandwidth::Auto => {
            let mut dists: Vec<f64> = neighbors
                .iter()
                .flat_map(|row| row.iter().map(|(_, d2)| d2.sqrt()))
                .collect();
            let m = median(&mut dists);
            if m <= 0.0 {
                return Err(Error::InvalidArgument(
                    "degenerate bandwidth: median neighbor distance is zero".into(),
                ));
            }
            m
        }
    };
    let mut s = DMatrix::zeros(n, n);
    for (i, row) in neighbors.iter().enumerate() {
        for &(j, d2) in row {
            s[(i, j)] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
    let sym = (&s + s.transpose()) * 0.5;
    Ok(ViewGraph {
        matrix: sym,
        kind: GraphKind::Similarity,
        row_stochastic: false,
    })
}

/// Sum-to-one weights reconstructing `target` from `neighbors` through the
/// regularized local Gram system.
fn local_reconstruction(target: &[f64], neighbors: &[&[f64]], reg: f64) -> Result<Vec<f64>> {
    let k = neighbors.len();
    if k == 1 {
        return Ok(vec![1.0]);
    }
    let diffs: Vec<Vec<f64>> = neighbors
        .iter()
        .map(|nb| nb.iter().zip(target).map(|(a, b)| a - b).collect())
        .collect();
    let mut c = DMatrix::from_fn(k, k, |a, b| {
        diffs[a]
            .iter()
            .zip(&diffs[b])
            .map(|(x, y)| x * y)
            .sum::<f64>()
    });
    let trace = c.trace();
    if trace == 0.0 {
        // Every neighbor coincides with the target; any sum-to-one weights
        // reconstruct it exactly.
        return Ok(vec![1.0 / k as f64; k]);
    }
    for a in 0..k {
        c[(a, a)] += reg * trace / k as f64;
    }
    let (vals, _) = sym_eigen_ascending(&c)?;
    if vals[0] <= 1e-12 * vals[k - 1].abs() {
        return Err(Error::Numerical(
            "local Gram system is singular; a positive regularization is required".into(),
        ));
    }
    let w = c
        .lu()
        .solve(&DVector::from_element(k, 1.0))
        .ok_or_else(|| Error::Numerical("local Gram system could not be solved".into()))?;
    let total: f64 = w.iter().sum();
    Ok(w.iter().map(|v| v / total).collect())
}

/// LLE reconstruction weights over the `k` nearest neighbors of each row.
pub fn lle_weights(x: &DMatrix<f64>, k: usize, reg: f64) -> Result<ViewGraph> {
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "regularization must be finite and >= 0, got {reg}"
        )));
    }
    let n = x.nrows();
    let neighbors = knn_indices(x, k)?;
    let rows = rows_of(x);
    let weights = neighbors
        .par_iter()
        .enumerate()
        .map(|(i, nb)| {
            let nbrs: Vec<&[f64]> = nb.iter().map(|(j, _)| rows[*j].as_slice()).collect();
            local_reconstruction(&rows[i], &nbrs, reg)
                .map_err(|e| Error::Numerical(format!("LLE weights for sample {i}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = DMatrix::zeros(n, n);
    for (i, (nb, w)) in neighbors.iter().zip(&weights).enumerate() {
        for ((j, _), wj) in nb.iter().zip(w) {
            s[(i, *j)] = *wj;
        }
    }
    Ok(ViewGraph {
        matrix: s,
        kind: GraphKind::Lle,
        row_stochastic: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorMethod {
    #[serde(rename = "svd")]
    SvdLeverage,
    #[serde(rename = "kmeans")]
    Kmeans,
}

/// Strictly increasing sample indices chosen as anchors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSet {
    pub method: AnchorMethod,
    pub indices: Vec<usize>,
}

impl AnchorSet {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.indices.is_empty() {
            return Err(Error::InvalidArgument("anchor set is empty".into()));
        }
        if self.indices.len() > n {
            return Err(Error::InvalidArgument(format!(
                "{} anchors for {n} samples",
                self.indices.len()
            )));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "anchor indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = self.indices.last() {
            if last >= n {
                return Err(Error::InvalidArgument(format!(
                    "anchor index {last} out of range for {n} samples"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Rows of `x` at the anchor indices.
    pub fn features(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.select_rows(&self.indices)
    }
}

/// Column-wise concatenation of all views after per-feature standardization
/// (zero mean, unit variance).
pub fn standardized_concat(ds: &MultiViewDataset) -> DMatrix<f64> {
    let mut z = ds.concatenated();
    let n = z.nrows() as f64;
    for mut col in z.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt().max(STD_FLOOR);
        col.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
    z
}

fn check_anchor_count(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "anchor count {k} must satisfy 1 <= k <= {n}"
        )));
    }
    Ok(())
}

/// Leverage score of every row of `z` in its top-`r` left singular subspace,
/// with `r` capped at the numerical rank.
pub fn leverage_scores(z: &DMatrix<f64>, r: usize) -> Result<Vec<f64>> {
    let svd = z.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return V".into()))?;
    let sv = &svd.singular_values;
    let cutoff = sv.get(0).copied().unwrap_or(0.0) * 1e-12 * z.nrows().max(z.ncols()) as f64;
    let rank = sv.iter().take(r).filter(|&&s| s > cutoff).count();
    // Scores are computed row by row so identical rows score identically.
    Ok((0..z.nrows())
        .map(|i| {
            (0..rank)
                .map(|l| {
                    let proj: f64 = z
                        .row(i)
                        .iter()
                        .zip(v_t.row(l).iter())
                        .map(|(a, b)| a * b)
                        .sum();
                    (proj / sv[l]).powi(2)
                })
                .sum()
        })
        .collect())
}

/// The `k` samples with the highest leverage in the top singular subspace of
/// the standardized, concatenated views.
pub fn select_anchors_svd(ds: &MultiViewDataset, k: usize) -> Result<AnchorSet> {
    let n = ds.n_samples();
    check_anchor_count(k, n)?;
    let z = standardized_concat(ds);
    let r = k.min(z.ncols()).min(n);
    let scores = leverage_scores(&z, r)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut indices = order[..k].to_vec();
    indices.sort_unstable();
    Ok(AnchorSet {
        method: AnchorMethod::SvdLeverage,
        indices,
    })
}

/// One anchor per k-means centroid: the nearest sample not already taken.
pub fn select_anchors_kmeans(ds: &MultiViewDataset, k: usize, seed: u64) -> Result<AnchorSet> {
    let n = ds.n_samples();
    check_anchor_count(k, n)?;
    let z = standardized_concat(ds);
    let result = kmeans(&z, &KmeansOptions::new(k, seed))?;
    let rows = rows_of(&z);
    let mut taken = vec![false; n];
    let mut indices = Vec::with_capacity(k);
    for c in 0..k {
        let centroid: Vec<f64> = result.centroids.row(c).iter().copied().collect();
        let best = (0..n)
            .filter(|&i| !taken[i])
            .min_by(|&a, &b| {
                sq_dist(&rows[a], &centroid)
                    .total_cmp(&sq_dist(&rows[b], &centroid))
                    .then(a.cmp(&b))
            })
            .expect("k <= n leaves a free sample");
        taken[best] = true;
        indices.push(best);
    }
    indices.sort_unstable();
    Ok(AnchorSet {
        method: AnchorMethod::Kmeans,
        indices,
    })
}

/// Adaptive-neighbor weights from the `k + 1` smallest squared distances,
/// sorted ascending. Falls back to uniform weights when every retained
/// distance equals the `(k+1)`-th.
pub fn adaptive_neighbor_weights(sorted_d2: &[f64], k: usize) -> Vec<f64> {
    let far = sorted_d2[k];
    let near: f64 = sorted_d2[..k].iter().sum();
    let denom = k as f64 * far - near;
    if denom <= f64::EPSILON * k as f64 * far.abs().max(f64::MIN_POSITIVE) {
        return vec![1.0 / k as f64; k];
    }
    sorted_d2[..k].iter().map(|d| (far - d) / denom).collect()
}

/// Row-stochastic `N × K` graph linking every sample to its `k` nearest
/// anchors.
pub fn bipartite_graph(
    x: &DMatrix<f64>,
    anchor_features: &DMatrix<f64>,
    k: usize,
) -> Result<ViewGraph> {
    let n_anchors = anchor_features.nrows();
    if anchor_features.ncols() != x.ncols() {
        return Err(Error::Shape(format!(
            "anchor features have {} columns, samples have {}",
            anchor_features.ncols(),
            x.ncols()
        )));
    }
    check_neighbors(k, n_anchors, "bipartite graph")?;
    let rows = rows_of(x);
    let anchors = rows_of(anchor_features);
    let weights: Vec<Vec<(usize, f64)>> = rows
        .par_iter()
        .map(|r| {
            let mut d: Vec<(usize, f64)> = anchors
                .iter()
                .enumerate()
                .map(|(j, a)| (j, sq_dist(r, a)))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let sorted: Vec<f64> = d[..=k].iter().map(|p| p.1).collect();
            let w = adaptive_neighbor_weights(&sorted, k);
            d[..k].iter().zip(w).map(|((j, _), wj)| (*j, wj)).collect()
        })
        .collect();
    let mut b = DMatrix::zeros(x.nrows(), n_anchors);
    for (i, row) in weights.iter().enumerate() {
        for &(j, w) in row {
            b[(i, j)] = w;
        }
    }
    Ok(ViewGraph {
        matrix: b,
        kind: GraphKind::Bipartite,
        row_stochastic: true,
    })
}

/// Column degrees of a graph with its column-normalized form and, for square
/// graphs, the symmetric normalized Laplacian.
#[derive(Clone, Debug)]
pub struct Normalized {
    /// `D(j, j) = Σ_i g(i, j)`, floored at [`DEGREE_FLOOR`].
    pub degree: DVector<f64>,
    /// `G · D⁻¹`.
    pub normalized: DMatrix<f64>,
    /// `I − D^{-1/2} G D^{-1/2}` when `g` is square.
    pub laplacian: Option<DMatrix<f64>>,
    /// Set when some column had zero degree.
    pub zero_degree: bool,
}

pub fn degree_and_normalize(g: &DMatrix<f64>) -> Result<Normalized> {
    if let Some(pos) = g.iter().position(|&v| v < 0.0 || !v.is_finite()) {
        let (r, c) = (pos % g.nrows(), pos / g.nrows());
        return Err(Error::InvalidArgument(format!(
            "graph entry ({r}, {c}) is negative or non-finite"
        )));
    }
    let mut zero_degree = false;
    let degree = DVector::from_iterator(
        g.ncols(),
        g.column_iter().map(|c| {
            let s = c.sum();
            if s > 0.0 {
                s
            } else {
                zero_degree = true;
                DEGREE_FLOOR
            }
        }),
    );
    if zero_degree {
        log::warn!("graph has zero-degree columns; using degree {DEGREE_FLOOR:e}");
    }
    let mut normalized = g.clone();
    for (j, mut col) in normalized.column_iter_mut().enumerate() {
        col /= degree[j];
    }
    let laplacian = g.is_square().then(|| {
        let inv_sqrt = degree.map(|d| 1.0 / d.sqrt());
        let n = g.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - inv_sqrt[i] * g[(i, j)] * inv_sqrt[j]
        })
    });
    Ok(Normalized {
        degree,
        normalized,
        laplacian,
        zero_degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn gaussian_entries() {
        // Points 0 and 1 coincide; point 2 sits at distance sqrt(2) * sigma.
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 2f64.sqrt()]);
        let g = gaussian_knn_graph(&x, 2, Bandwidth::Fixed(1.0)).unwrap();
        assert_eq!(g.matrix[(0, 1)], 1.0);
        assert!((g.matrix[(0, 2)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((g.matrix[(0, 2)] - 0.367879).abs() < 1e-6);
        for i in 0..3 {
            assert_eq!(g.matrix[(i, i)], 0.0);
        }
    }

    #[test]
    fn gaussian_pattern_matches_brute_force() {
        let x = random(10, 3, 5);
        let k = 3;
        let g = gaussian_knn_graph(&x, k, Bandwidth::Auto).unwrap();
        let mut expected = DMatrix::<bool>::from_element(10, 10, false);
        for i in 0..10 {
            let mut d: Vec<(f64, usize)> = (0..10)
                .filter(|&j| j != i)
                .map(|j| ((x.row(i) - x.row(j)).norm(), j))
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for &(_, j) in &d[..k] {
                expected[(i, j)] = true;
                expected[(j, i)] = true;
            }
        }
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(g.matrix[(i, j)] > 0.0, expected[(i, j)], "({i},{j})");
                assert_eq!(g.matrix[(i, j)], g.matrix[(j, i)]);
            }
        }
    }

    #[test]
    fn gaussian_errors() {
        let same = DMatrix::from_element(4, 2, 1.0);
        assert!(gaussian_knn_graph(&same, 2, Bandwidth::Auto).is_err());
        assert!(gaussian_knn_graph(&same, 4, Bandwidth::Fixed(1.0)).is_err());
        assert!(gaussian_knn_graph(&same, 0, Bandwidth::Fixed(1.0)).is_err());
    }

    #[test]
    fn lle_midpoint_and_single_neighbor() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, -1.0, 1.0]);
        let s = lle_weights(&x, 2, 1e-3).unwrap();
        assert!((s.matrix[(0, 1)] - 0.5).abs() < 1e-12);
        assert!((s.matrix[(0, 2)] - 0.5).abs() < 1e-12);

        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 5.0, 5.0]);
        let s = lle_weights(&x, 1, 0.0).unwrap();
        assert_eq!(s.matrix[(0, 1)], 1.0);
        assert!(s.row_stochastic);
    }

    #[test]
    fn lle_singular_without_regularization() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, -1.0, 1.0]);
        let err = lle_weights(&x, 2, 0.0).unwrap_err().to_string();
        assert!(err.contains("regularization"), "{err}");
    }

    #[test]
    fn anchors_full_selection_and_ties() {
        let x = random(6, 3, 2);
        let ds = MultiViewDataset::new("a", vec![x.clone()], None).unwrap();
        let all = select_anchors_svd(&ds, 6).unwrap();
        assert_eq!(all.indices, (0..6).collect::<Vec<_>>());

        // Rows 1 and 4 identical: equal scores, so the lower index wins.
        let mut y = random(8, 2, 3);
        let r1 = y.row(1).clone_owned();
        y.set_row(4, &r1);
        let ds = MultiViewDataset::new("b", vec![y.clone()], None).unwrap();
        let z = standardized_concat(&ds);
        let scores = leverage_scores(&z, 2).unwrap();
        assert_eq!(scores[1].to_bits(), scores[4].to_bits());
        let mut order: Vec<usize> = (0..8).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let cut = order.iter().position(|&i| i == 1).unwrap() + 1;
        let set = select_anchors_svd(&ds, cut).unwrap();
        assert!(set.indices.contains(&1) && !set.indices.contains(&4));
    }

    #[test]
    fn kmeans_anchors() {
        let x = random(9, 2, 4);
        let ds = MultiViewDataset::new("a", vec![x.clone()], None).unwrap();
        let one = select_anchors_kmeans(&ds, 1, 0).unwrap();
        let z = standardized_concat(&ds);
        let nearest_mean = (0..9)
            .min_by(|&a, &b| z.row(a).norm().total_cmp(&z.row(b).norm()))
            .unwrap();
        assert_eq!(one.indices, vec![nearest_mean]);

        let pts = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let rows: Vec<f64> = (0..12).flat_map(|i| pts[i % 3]).collect();
        let ds =
            MultiViewDataset::new("c", vec![DMatrix::from_row_slice(12, 2, &rows)], None).unwrap();
        let a = select_anchors_kmeans(&ds, 3, 17).unwrap();
        let mut locs: Vec<usize> = a.indices.iter().map(|i| i % 3).collect();
        locs.sort_unstable();
        assert_eq!(locs, vec![0, 1, 2]);
        assert_eq!(a, select_anchors_kmeans(&ds, 3, 17).unwrap());
        assert!(select_anchors_kmeans(&ds, 13, 0).is_err());
    }

    #[test]
    fn adaptive_weights_examples() {
        assert_eq!(
            adaptive_neighbor_weights(&[1.0, 1.0, 2.0], 2),
            vec![0.5, 0.5]
        );
        assert_eq!(adaptive_neighbor_weights(&[0.0, 3.0], 1), vec![1.0]);
        assert_eq!(
            adaptive_neighbor_weights(&[2.0, 2.0, 2.0], 2),
            vec![0.5, 0.5]
        );
    }

    #[test]
    fn adaptive_weights_match_simplex_qp() {
        // The closed form is the simplex-constrained minimizer of
        // Σ d_j g_j + γ‖g‖² with γ = (k d_{k+1} − Σ_{j≤k} d_j) / 2; check it
        // against exhaustive enumeration of support sets.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let k = rng.random_range(1..5);
            let mut d: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..4.0)).collect();
            d.sort_by(f64::total_cmp);
            let gamma = (k as f64 * d[k] - d[..k].iter().sum::<f64>()) / 2.0;
            if gamma < 1e-6 {
                continue;
            }
            let f = |g: &[f64]| -> f64 {
                g.iter()
                    .zip(&d)
                    .map(|(gi, di)| di * gi + gamma * gi * gi)
                    .sum()
            };
            let mut best = (f64::INFINITY, vec![]);
            for mask in 1u32..(1 << 6) {
                let support: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
                // Stationarity on the support: d_j + 2γ g_j = ν.
                let nu = (2.0 * gamma + support.iter().map(|&j| d[j]).sum::<f64>())
                    / support.len() as f64;
                let mut g = vec![0.0; 6];
                for &j in &support {
                    g[j] = (nu - d[j]) / (2.0 * gamma);
                }
                if g.iter().all(|&v| v >= -1e-12) && f(&g) < best.0 {
                    best = (f(&g), g);
                }
            }
            let w = adaptive_neighbor_weights(&d, k);
            for (j, want) in best.1.iter().enumerate() {
                let got = if j < k { w[j] } else { 0.0 };
                assert!((got - want).abs() < 1e-9, "k={k} d={d:?}");
            }
        }
    }

    #[test]
    fn bipartite_rows() {
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 0.4]);
        let anchors = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let b = bipartite_graph(&x, &anchors, 1).unwrap();
        assert_eq!(b.matrix[(0, 0)], 1.0);

        let x = random(30, 4, 7);
        let anchors = random(8, 4, 8);
        let b = bipartite_graph(&x, &anchors, 3).unwrap();
        for i in 0..30 {
            let row = b.matrix.row(i);
            assert!((row.sum() - 1.0).abs() < 1e-10);
            assert!(row.iter().all(|&v| v >= 0.0));
            // Non-increasing in anchor distance.
            let mut pairs: Vec<(f64, f64)> = (0..8)
                .map(|j| ((x.row(i) - anchors.row(j)).norm_squared(), row[j]))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pairs.windows(2) {
                assert!(w[1].1 <= w[0].1 + 1e-15);
            }
        }
        assert!(bipartite_graph(&x, &anchors, 8).is_err());
    }

    #[test]
    fn normalization_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        let n = degree_and_normalize(&id).unwrap();
        assert_eq!(n.degree, DVector::from_element(4, 1.0));
        assert_eq!(n.normalized, id);
        assert!(n.laplacian.unwrap().amax() < 1e-15);

        let ones = DMatrix::from_element(5, 5, 1.0);
        let n = degree_and_normalize(&ones).unwrap();
        assert_eq!(n.degree, DVector::from_element(5, 5.0));
        let expected = DMatrix::identity(5, 5) - DMatrix::from_element(5, 5, 0.2);
        assert!((n.laplacian.unwrap() - expected).amax() < 1e-15);

        let g = random(6, 4, 9).map(f64::abs);
        let n = degree_and_normalize(&g).unwrap();
        assert!(n.laplacian.is_none());
        for c in n.normalized.column_iter() {
            assert!((c.sum() - 1.0).abs() < 1e-14);
        }

        let mut neg = g.clone();
        neg[(1, 1)] = -0.1;
        assert!(degree_and_normalize(&neg).is_err());

        let mut empty = g;
        empty.column_mut(2).fill(0.0);
        let n = degree_and_normalize(&empty).unwrap();
        assert!(n.zero_degree);
        assert_eq!(n.degree[2], DEGREE_FLOOR);
    }
}
