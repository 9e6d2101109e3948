//! k-means on embeddings and the external clustering metrics (accuracy
//! under optimal cluster-to-class matching, NMI, purity).

use nalgebra::DMatrix;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansOptions {
    pub clusters: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl KmeansOptions {
    pub fn new(clusters: usize, seed: u64) -> Self {
        Self {
            clusters,
            seed,
            max_iter: 300,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// `c × d`, one centroid per row.
    pub centroids: DMatrix<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

/// k-means++ seeding followed by Lloyd iterations, best of
/// `opts.restarts` runs by inertia (lowest restart index on ties).
pub fn kmeans(points: &DMatrix<f64>, opts: &KmeansOptions) -> Result<KmeansResult> {
    let (n, d) = points.shape();
    let c = opts.clusters;
    if c == 0 || c > n {
        return Err(Error::InvalidArgument(format!(
            "cannot form {c} clusters from {n} points"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument(
            "k-means needs at least one restart".into(),
        ));
    }
    let data: Vec<f64> = (0..n)
        .flat_map(|i| points.row(i).iter().copied().collect::<Vec<_>>())
        .collect();
    let runs: Vec<Lloyd> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let init = plus_plus_init(&data, n, d, c, &mut rng);
            lloyd(&data, n, d, init, opts.max_iter)
        })
        .collect();
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.inertia.total_cmp(&b.inertia).then(ia.cmp(ib)))
        .map(|(_, run)| run)
        .expect("at least one restart");
    Ok(KmeansResult {
        labels: best.labels,
        centroids: DMatrix::from_row_slice(c, d, &best.centroids),
        inertia: best.inertia,
        iterations: best.iterations,
    })
}

#[inline]
fn point(data: &[f64], d: usize, i: usize) -> &[f64] {
    &data[i * d..(i + 1) * d]
}

#[inline]
fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(data: &[f64], n: usize, d: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(c * d);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(point(data, d, first));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq(point(data, d, i), point(data, d, first)))
        .collect();
    for _ in 1..c {
        let total: f64 = dist.iter().sum();
        let chosen = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let new = point(data, d, chosen).to_vec();
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq(point(data, d, i), &new));
        }
        centroids.extend_from_slice(&new);
    }
    centroids
}

pub(crate) struct Lloyd {
    pub labels: Vec<usize>,
    pub centroids: Vec<f64>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each assignment step.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

fn assign(
    data: &[f64],
    n: usize,
    d: usize,
    centroids: &[f64],
    labels: &mut [usize],
) -> (bool, f64) {
    let c = centroids.len() / d;
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate().take(n) {
        let p = point(data, d, i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..c {
            let dj = sq(p, &centroids[j * d..(j + 1) * d]);
            if dj < best_d {
                best_d = dj;
                best = j;
            }
        }
        if *label != best {
            *label = best;
            changed = true;
        }
        inertia += best_d;
    }
    (changed, inertia)
}

pub(crate) fn lloyd(
    data: &[f64],
    n: usize,
    d: usize,
    mut centroids: Vec<f64>,
    max_iter: usize,
) -> Lloyd {
    let c = centroids.len() / d;
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut inertia;
    loop {
        let (changed, value) = assign(data, n, d, &centroids, &mut labels);
        inertia = value;
        trace.push(value);
        if !changed || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut sums = vec![0.0; c * d];
        let mut counts = vec![0usize; c];
        for (i, &l) in labels.iter().enumerate().take(n) {
            counts[l] += 1;
            for (s, x) in sums[l * d..(l + 1) * d].iter_mut().zip(point(data, d, i)) {
                *s += x;
            }
        }
        let mut taken = vec![false; n];
        for j in 0..c {
            if counts[j] > 0 {
                for k in 0..d {
                    centroids[j * d + k] = sums[j * d + k] / counts[j] as f64;
                }
            } else {
                // Empty cluster: move it onto the point farthest from its
                // current centroid.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| {
                        let da = sq(
                            point(data, d, a),
                            &centroids[labels[a] * d..(labels[a] + 1) * d],
                        );
                        let db = sq(
                            point(data, d, b),
                            &centroids[labels[b] * d..(labels[b] + 1) * d],
                        );
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                taken[far] = true;
                centroids[j * d..(j + 1) * d].copy_from_slice(point(data, d, far));
            }
        }
    }
    Lloyd {
        labels,
        centroids,
        inertia,
        iterations,
        trace,
    }
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "label length mismatch: predicted={}, truth={}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("label vectors are empty".into()));
    }
    Ok(())
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let dense = labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap())
        .collect();
    (dense, distinct.len())
}

/// Counts `table[p][t]` of samples with predicted cluster `p` and class `t`.
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    check_lengths(pred, truth)?;
    let (p, np) = densify(pred);
    let (t, nt) = densify(truth);
    let mut table = vec![vec![0usize; nt]; np];
    for (a, b) in p.iter().zip(&t) {
        table[*a][*b] += 1;
    }
    Ok(table)
}

/// Fraction of samples correctly labelled under the best one-to-one mapping
/// of clusters to classes (Hungarian algorithm; the contingency table is
/// zero-padded to square).
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let size = table.len().max(table[0].len());
    let rows: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| table.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0) as i64)
                .collect()
        })
        .collect();
    let weights = Matrix::from_rows(rows).expect("square contingency matrix");
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `I(P; T) / sqrt(H(P) H(T))`.
///
/// When either entropy is zero the score is 1 if both labelings describe the
/// same partition and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let hp = entropy(row_sums.iter().copied(), n);
    let ht = entropy(col_sums.iter().copied(), n);
    if hp == 0.0 || ht == 0.0 {
        return Ok(if hp == 0.0 && ht == 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let pij = nij as f64 / n;
                mi += pij * (nij as f64 * n / (row_sums[i] as f64 * col_sums[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

/// `(1/N) Σ_clusters max_class overlap`.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let hits: usize = table
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / pred.len() as f64)
}

/// Scores of one k-means repeat against the ground truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepeatScore {
    pub seed: u64,
    pub inertia: f64,
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

/// Means and population standard deviations over repeated k-means runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub clusters: usize,
    pub repeats: usize,
    /// Labels of the lowest-inertia repeat (earliest on ties).
    pub labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi_normalization: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RepeatScore>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs k-means `repeats` times with seeds `seed, seed + 1, ...` and scores
/// every run against `truth` when given.
pub fn evaluate(
    points: &DMatrix<f64>,
    clusters: usize,
    truth: Option<&[usize]>,
    repeats: usize,
    seed: u64,
) -> Result<Evaluation> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if let Some(t) = truth {
        if t.len() != points.nrows() {
            return Err(Error::Shape(format!(
                "embedding has {} rows, ground truth has {} labels",
                points.nrows(),
                t.len()
            )));
        }
    }
    let runs = (0..repeats as u64)
        .map(|r| kmeans(points, &KmeansOptions::new(clusters, seed.wrapping_add(r))))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.inertia.total_cmp(&b.1.inertia).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one repeat");
    let mut eval = Evaluation {
        clusters,
        repeats,
        labels: runs[best].labels.clone(),
        acc: None,
        nmi: None,
        purity: None,
        acc_std: None,
        nmi_std: None,
        purity_std: None,
        nmi_normalization: None,
        runs: Vec::new(),
    };
    if let Some(t) = truth {
        for (r, run) in runs.iter().enumerate() {
            eval.runs.push(RepeatScore {
                seed: seed.wrapping_add(r as u64),
                inertia: run.inertia,
                acc: accuracy(&run.labels, t)?,
                nmi: nmi(&run.labels, t)?,
                purity: purity(&run.labels, t)?,
            });
        }
        let stat =
            |f: fn(&RepeatScore) -> f64| mean_std(&eval.runs.iter().map(f).collect::<Vec<_>>());
        let (acc, acc_std) = stat(|r| r.acc);
        let (nmi_m, nmi_std) = stat(|r| r.nmi);
        let (pur, pur_std) = stat(|r| r.purity);
        eval.acc = Some(acc);
        eval.acc_std = Some(acc_std);
        eval.nmi = Some(nmi_m);
        eval.nmi_std = Some(nmi_std);
        eval.purity = Some(pur);
        eval.purity_std = Some(pur_std);
        eval.nmi_normalization = Some("sqrt");
    }
    Ok(eval)
}
