//! Third-order tensor algebra built on the discrete Fourier transform along
//! the third axis.
//!
//! A [`Tensor3`] of shape `n1 × n2 × n3` is stored as `n3` frontal slices,
//! each an `n1 × n2` row-major block. The t-product, t-SVD and the weighted
//! tensor nuclear norm all reduce to independent matrix operations on the
//! frontal slices of the transformed tensor. For real input the transformed
//! slices come in conjugate pairs, so only `n3 / 2 + 1` of them need any
//! factorization work; the rest are filled by conjugation.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Largest imaginary part tolerated when mapping a Fourier-domain result
/// back to real space.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    values: Vec<f64>,
}

/// Fourier-domain companion of [`Tensor3`], same layout with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    values: Vec<Complex64>,
}

/// Which Fourier slices receive an explicit factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SliceMode {
    /// Factor the first `n3 / 2 + 1` slices and fill the rest by conjugate
    /// symmetry. Valid for real input only.
    #[default]
    Half,
    /// Factor every slice independently.
    Full,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            n1,
            n2,
            n3,
            values: vec![0.0; n1 * n2 * n3],
        }
    }

    /// Builds a tensor from slice-major values (frontal slice outermost, then
    /// row-major within each slice).
    pub fn from_vec(n1: usize, n2: usize, n3: usize, values: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(Error::Shape(format!(
                "tensor dimensions must be positive, got {n1}x{n2}x{n3}"
            )));
        }
        if values.len() != n1 * n2 * n3 {
            return Err(Error::Shape(format!(
                "{} values supplied for a {n1}x{n2}x{n3} tensor",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite tensor entry at flat index {pos}"
            )));
        }
        Ok(Self { n1, n2, n3, values })
    }

    /// Identity tensor: first frontal slice is `I`, the others are zero.
    pub fn identity(n: usize, n3: usize) -> Self {
        let mut t = Self::zeros(n, n, n3);
        for i in 0..n {
            t.set(i, i, 0, 1.0);
        }
        t
    }

    /// Stacks `n3` frontal slices, all `n1 × n2`.
    pub fn from_frontal_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("no frontal slices supplied".into()))?;
        let (n1, n2) = first.shape();
        let mut values = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::Shape(format!(
                    "frontal slice {k} is {:?}, expected {:?}",
                    s.shape(),
                    (n1, n2)
                )));
            }
            for i in 0..n1 {
                for j in 0..n2 {
                    values.push(s[(i, j)]);
                }
            }
        }
        Self::from_vec(n1, n2, slices.len(), values)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        k * self.n1 * self.n2 + i * self.n2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.idx(i, j, k);
        self.values[idx] = v;
    }

    pub fn frontal_slice(&self, k: usize) -> DMatrix<f64> {
        let len = self.n1 * self.n2;
        DMatrix::from_row_slice(self.n1, self.n2, &self.values[k * len..(k + 1) * len])
    }

    /// Lateral slice `t(:, j, :)` as an `n1 × n3` matrix.
    pub fn lateral_slice(&self, j: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n1, self.n3, |i, k| self.get(i, j, k))
    }

    /// Tensor transpose: every frontal slice transposed and slices
    /// `2..n3` taken in reverse order.
    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.n2, self.n1, self.n3);
        for k in 0..self.n3 {
            let src = (self.n3 - k) % self.n3;
            for i in 0..self.n1 {
                for j in 0..self.n2 {
                    out.set(j, i, k, self.get(i, j, src));
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &Tensor3, scale: f64) -> Result<Tensor3> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "cannot add tensors of shape {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(Tensor3 { values, ..*self })
    }
}

impl ComplexTensor3 {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn frontal_slice(&self, k: usize) -> DMatrix<Complex64> {
        let len = self.n1 * self.n2;
        DMatrix::from_row_slice(self.n1, self.n2, &self.values[k * len..(k + 1) * len])
    }

    fn from_frontal_slices(n1: usize, n2: usize, slices: &[DMatrix<Complex64>]) -> Self {
        let mut values = Vec::with_capacity(n1 * n2 * slices.len());
        for s in slices {
            for i in 0..n1 {
                for j in 0..n2 {
                    values.push(s[(i, j)]);
                }
            }
        }
        Self {
            n1,
            n2,
            n3: slices.len(),
            values,
        }
    }
}

/// Gathers tubes `t(i, j, :)` contiguously, transforms each in place and
/// scatters back.
fn transform_tubes(n1: usize, n2: usize, n3: usize, values: &mut [Complex64], inverse: bool) {
    if n3 == 1 {
        return;
    }
    let plane = n1 * n2;
    let mut buf = vec![Complex64::new(0.0, 0.0); plane * n3];
    for k in 0..n3 {
        for p in 0..plane {
            buf[p * n3 + k] = values[k * plane + p];
        }
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n3)
    } else {
        planner.plan_fft_forward(n3)
    };
    fft.process(&mut buf);
    let scale = if inverse { 1.0 / n3 as f64 } else { 1.0 };
    for k in 0..n3 {
        for p in 0..plane {
            values[k * plane + p] = buf[p * n3 + k] * scale;
        }
    }
}

/// DFT of every tube along the third axis.
pub fn fft3(t: &Tensor3) -> ComplexTensor3 {
    let mut values: Vec<Complex64> = t.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_tubes(t.n1, t.n2, t.n3, &mut values, false);
    ComplexTensor3 {
        n1: t.n1,
        n2: t.n2,
        n3: t.n3,
        values,
    }
}

/// Inverse DFT along the third axis, returning the real part together with
/// the largest discarded imaginary magnitude.
pub fn ifft3_with_residue(t: &ComplexTensor3) -> (Tensor3, f64) {
    let mut values = t.values.clone();
    transform_tubes(t.n1, t.n2, t.n3, &mut values, true);
    let residue = values.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let real = Tensor3 {
        n1: t.n1,
        n2: t.n2,
        n3: t.n3,
        values: values.iter().map(|c| c.re).collect(),
    };
    (real, residue)
}

/// Inverse DFT along the third axis; the imaginary part is dropped.
pub fn ifft3(t: &ComplexTensor3) -> Tensor3 {
    ifft3_with_residue(t).0
}

fn ifft3_checked(t: &ComplexTensor3, what: &str) -> Result<Tensor3> {
    let (real, residue) = ifft3_with_residue(t);
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::Numerical(format!(
            "{what}: imaginary residue {residue:e} after inverse transform exceeds {IMAG_RESIDUE_TOL:e}"
        )));
    }
    Ok(real)
}

/// Number of Fourier slices that need explicit work under conjugate symmetry.
pub fn half_slice_count(n3: usize) -> usize {
    n3 / 2 + 1
}

/// A Fourier slice of a real tensor is real when it is its own conjugate
/// partner.
fn is_self_conjugate(k: usize, n3: usize) -> bool {
    k == 0 || 2 * k == n3
}

/// Applies `f` to the Fourier slices selected by `mode` in parallel and
/// assembles the complete slice list, filling the upper half by conjugation
/// under [`SliceMode::Half`].
fn map_fourier_slices<T, F>(n3: usize, mode: SliceMode, f: F) -> Result<Vec<T>>
where
    T: Send + Conjugate,
    F: Fn(usize) -> Result<T> + Sync,
{
    let explicit = match mode {
        SliceMode::Half => half_slice_count(n3),
        SliceMode::Full => n3,
    };
    let mut slices = (0..explicit)
        .into_par_iter()
        .map(&f)
        .collect::<Result<Vec<T>>>()?;
    for k in explicit..n3 {
        let partner = slices[n3 - k].conjugated();
        slices.push(partner);
    }
    Ok(slices)
}

trait Conjugate {
    fn conjugated(&self) -> Self;
}

impl Conjugate for DMatrix<Complex64> {
    fn conjugated(&self) -> Self {
        self.map(|c| c.conj())
    }
}

impl<A: Conjugate, B: Conjugate, C: Conjugate> Conjugate for (A, B, C) {
    fn conjugated(&self) -> Self {
        (
            self.0.conjugated(),
            self.1.conjugated(),
            self.2.conjugated(),
        )
    }
}

impl Conjugate for (DMatrix<Complex64>, f64) {
    fn conjugated(&self) -> Self {
        (self.0.conjugated(), self.1)
    }
}

impl Conjugate for Vec<f64> {
    fn conjugated(&self) -> Self {
        self.clone()
    }
}

/// t-product `a ∗ b`, evaluated as slice-wise products in the Fourier domain.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.n2 != b.n1 || a.n3 != b.n3 {
        return Err(Error::Shape(format!(
            "t-product of {}x{}x{} and {}x{}x{} is undefined",
            a.n1, a.n2, a.n3, b.n1, b.n2, b.n3
        )));
    }
    let af = fft3(a);
    let bf = fft3(b);
    let slices = map_fourier_slices(a.n3, SliceMode::Half, |k| {
        Ok(af.frontal_slice(k) * bf.frontal_slice(k))
    })?;
    let cf = ComplexTensor3::from_frontal_slices(a.n1, b.n2, &slices);
    ifft3_checked(&cf, "t-product")
}

/// Orthogonal/unitary `u`, f-diagonal `s`, orthogonal `v` with
/// `a = u ∗ s ∗ vᵀ`.
#[derive(Clone, Debug)]
pub struct TSvdFactors {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
}

impl TSvdFactors {
    pub fn reconstruct(&self) -> Result<Tensor3> {
        t_product(&t_product(&self.u, &self.s)?, &self.v.transpose())
    }
}

/// Extends the orthonormal columns of `q` to an orthonormal basis of the
/// whole space with Gram-Schmidt against the standard basis.
pub(crate) fn complete_orthonormal<T>(q: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = q.nrows();
    let mut cols: Vec<nalgebra::DVector<T>> = q.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = nalgebra::DVector::<T>::zeros(n);
        v[e] = T::one();
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v.axpy(-proj, c, T::one());
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            cols.push(v.unscale(norm));
        }
    }
    DMatrix::from_columns(&cols)
}

/// Full SVD `m = u · diag(s) · vᴴ` with square `u` and `v`, singular values
/// non-increasing.
fn full_svd<T>(m: DMatrix<T>) -> Result<(DMatrix<T>, Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let svd = m.svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not return U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return Vᴴ".into()))?;
    let v = v_t.adjoint();
    Ok((
        complete_orthonormal(&u),
        svd.singular_values.iter().copied().collect(),
        complete_orthonormal(&v),
    ))
}

fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// t-SVD via per-Fourier-slice SVD. Self-conjugate slices are factored in
/// real arithmetic so the factors stay real after the inverse transform.
pub fn t_svd(a: &Tensor3) -> Result<TSvdFactors> {
    let (n1, n2, n3) = a.shape();
    let af = fft3(a);
    let slices = map_fourier_slices(n3, SliceMode::Half, |k| {
        let slice = af.frontal_slice(k);
        let (u, sv, v) = if is_self_conjugate(k, n3) {
            let (u, sv, v) = full_svd(slice.map(|c| c.re))?;
            (real_to_complex(&u), sv, real_to_complex(&v))
        } else {
            full_svd(slice)?
        };
        let mut s = DMatrix::<Complex64>::zeros(n1, n2);
        for (i, &sigma) in sv.iter().enumerate() {
            s[(i, i)] = Complex64::new(sigma, 0.0);
        }
        Ok((u, s, v))
    })?;
    let us: Vec<_> = slices.iter().map(|t| t.0.clone()).collect();
    let ss: Vec<_> = slices.iter().map(|t| t.1.clone()).collect();
    let vs: Vec<_> = slices.iter().map(|t| t.2.clone()).collect();
    Ok(TSvdFactors {
        u: ifft3_checked(&ComplexTensor3::from_frontal_slices(n1, n1, &us), "t-SVD U")?,
        s: ifft3_checked(&ComplexTensor3::from_frontal_slices(n1, n2, &ss), "t-SVD S")?,
        v: ifft3_checked(&ComplexTensor3::from_frontal_slices(n2, n2, &vs), "t-SVD V")?,
    })
}

/// Strictly positive weights paired with the singular values of each
/// Fourier slice, largest singular value first.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidArgument("weight vector is empty".into()));
        }
        if let Some(w) = omega.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weights must be finite and strictly positive, found {w}"
            )));
        }
        Ok(Self(omega))
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn check_for(&self, t: &Tensor3) -> Result<()> {
        let expected = t.n1.min(t.n2);
        if self.0.len() != expected {
            return Err(Error::Shape(format!(
                "weight vector has length {}, tensor {}x{}x{} needs {expected}",
                self.0.len(),
                t.n1,
                t.n2,
                t.n3
            )));
        }
        Ok(())
    }
}

/// Weighted tensor nuclear norm: `Σ_j Σ_i ω_i σ_i(slice_j)` over all Fourier
/// slices, σ sorted non-increasing within each slice.
pub fn weighted_tnn(a: &Tensor3, w: &WeightVector) -> Result<f64> {
    w.check_for(a)?;
    let n3 = a.n3;
    let af = fft3(a);
    let per_slice = map_fourier_slices(n3, SliceMode::Half, |k| {
        Ok(af
            .frontal_slice(k)
            .singular_values()
            .iter()
            .copied()
            .collect::<Vec<f64>>())
    })?;
    Ok(per_slice
        .iter()
        .map(|sv| {
            sv.iter()
                .zip(w.as_slice())
                .map(|(s, om)| om * s.abs())
                .sum::<f64>()
        })
        .sum())
}

/// Weighted tensor singular value thresholding: every Fourier-slice
/// singular value `σ_i` shrinks to `max(σ_i − τ·ω_i, 0)`.
///
/// Because the Fourier slices carry `n3` times the energy of the original
/// tensor, the result is `argmin_Z ½‖A − Z‖²_F + (τ/n3)‖Z‖_{ω,∗}`.
pub fn prox_weighted_tnn(a: &Tensor3, tau: f64, w: &WeightVector) -> Result<Tensor3> {
    prox_weighted_tnn_with(a, tau, w, SliceMode::Half).map(|(z, _)| z)
}

/// [`prox_weighted_tnn`] with an explicit slice mode; also returns the
/// weighted nuclear norm of the result.
pub fn prox_weighted_tnn_with(
    a: &Tensor3,
    tau: f64,
    w: &WeightVector,
    mode: SliceMode,
) -> Result<(Tensor3, f64)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "proximal step must be positive and finite, got {tau}"
        )));
    }
    w.check_for(a)?;
    let (n1, n2, n3) = a.shape();
    let af = fft3(a);
    let slices = map_fourier_slices(n3, mode, |k| {
        let slice = af.frontal_slice(k);
        let svd = slice.svd(true, true);
        let (u, v_t) = match (svd.u, svd.v_t) {
            (Some(u), Some(v_t)) => (u, v_t),
            _ => return Err(Error::Numerical(format!("SVD failed on Fourier slice {k}"))),
        };
        let mut norm = 0.0;
        let shrunk: Vec<f64> = svd
            .singular_values
            .iter()
            .zip(w.as_slice())
            .map(|(s, om)| {
                let t = (s - tau * om).max(0.0);
                norm += om * t;
                t
            })
            .collect();
        let mut out = DMatrix::<Complex64>::zeros(n1, n2);
        for (i, &t) in shrunk.iter().enumerate() {
            if t > 0.0 {
                let ui = u.column(i);
                let vi = v_t.row(i);
                out += (ui * vi) * Complex64::new(t, 0.0);
            }
        }
        Ok((out, norm))
    })?;
    let norm = slices.iter().map(|s| s.1).sum();
    let mats: Vec<_> = slices.into_iter().map(|s| s.0).collect();
    let z = ifft3_checked(&ComplexTensor3::from_frontal_slices(n1, n2, &mats), "prox")?;
    Ok((z, norm))
}

/// Stacks `M` matrices of shape `N × K` into an `N × M × K` tensor with
/// `t(:, v, :) = graphs[v]`.
pub fn stack_rotate(graphs: &[DMatrix<f64>]) -> Result<Tensor3> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::Shape("at least one view is required".into()))?;
    let (n, k) = first.shape();
    for (v, g) in graphs.iter().enumerate() {
        if g.shape() != (n, k) {
            return Err(Error::Shape(format!(
                "view {v} graph is {}x{}, view 0 is {n}x{k}",
                g.nrows(),
                g.ncols()
            )));
        }
    }
    let m = graphs.len();
    let mut t = Tensor3::zeros(n, m, k);
    for (v, g) in graphs.iter().enumerate() {
        for kk in 0..k {
            for i in 0..n {
                t.set(i, v, kk, g[(i, kk)]);
            }
        }
    }
    Ok(t)
}

/// Inverse of [`stack_rotate`].
pub fn unstack_rotate(t: &Tensor3) -> Vec<DMatrix<f64>> {
    (0..t.n2).map(|v| t.lateral_slice(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, n1: usize, n2: usize, n3: usize) -> Tensor3 {
        let values = (0..n1 * n2 * n3)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Tensor3::from_vec(n1, n2, n3, values).unwrap()
    }

    #[test]
    fn fft_of_single_slice_is_identity() {
        let t = Tensor3::from_vec(2, 2, 1, vec![1.0, -2.0, 3.5, 0.25]).unwrap();
        let f = fft3(&t);
        for (c, v) in f.values().iter().zip(t.values()) {
            assert_eq!(c.re, *v);
            assert_eq!(c.im, 0.0);
        }
    }

    #[test]
    fn fft_of_impulse_is_flat() {
        let t = Tensor3::from_vec(1, 1, 4, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        for c in fft3(&t).values() {
            assert!((c.re - 1.0).abs() < 1e-15 && c.im.abs() < 1e-15);
        }
    }

    #[test]
    fn fft_round_trip_and_conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_tensor(&mut rng, 3, 4, 6);
        let f = fft3(&t);
        let back = ifft3(&f);
        assert!(t.max_abs_diff(&back) < 1e-10);
        for k in 1..6 {
            let a = f.frontal_slice(k);
            let b = f.frontal_slice(6 - k);
            assert!((a - b.map(|c| c.conj())).camax() < 1e-12);
        }
    }

    #[test]
    fn t_product_identity_and_degenerate_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_tensor(&mut rng, 3, 4, 5);
        let id = Tensor3::identity(4, 5);
        assert!(t_product(&a, &id).unwrap().max_abs_diff(&a) < 1e-12);

        let a = random_tensor(&mut rng, 3, 2, 1);
        let b = random_tensor(&mut rng, 2, 4, 1);
        let c = t_product(&a, &b).unwrap();
        let expected = a.frontal_slice(0) * b.frontal_slice(0);
        assert!((c.frontal_slice(0) - expected).amax() < 1e-14);
    }

    #[test]
    fn t_product_rejects_mismatch() {
        let a = Tensor3::zeros(2, 3, 4);
        let b = Tensor3::zeros(2, 3, 4);
        let err = t_product(&a, &b).unwrap_err().to_string();
        assert!(err.contains("2x3x4"), "{err}");
    }

    #[test]
    fn t_svd_of_identity() {
        let id = Tensor3::identity(3, 4);
        let f = t_svd(&id).unwrap();
        assert!(f.s.max_abs_diff(&id) < 1e-12);
        assert!(f.reconstruct().unwrap().max_abs_diff(&id) < 1e-12);
        // U and V agree up to the sign of each column.
        for i in 0..3 {
            assert!((f.u.get(i, i, 0).abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn t_svd_single_slice_is_matrix_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tensor(&mut rng, 4, 3, 1);
        let f = t_svd(&a).unwrap();
        let sv = a.frontal_slice(0).singular_values();
        for i in 0..3 {
            assert!((f.s.get(i, i, 0) - sv[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_tnn_examples() {
        let w = WeightVector::ones(3);
        assert_eq!(weighted_tnn(&Tensor3::zeros(3, 3, 2), &w).unwrap(), 0.0);

        let diag31 = Tensor3::from_vec(2, 2, 1, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let v = weighted_tnn(&diag31, &WeightVector::ones(2)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);

        let diag33 = Tensor3::from_vec(2, 2, 1, vec![3.0, 0.0, 0.0, 3.0]).unwrap();
        let v = weighted_tnn(&diag33, &WeightVector::new(vec![1.0, 2.0]).unwrap()).unwrap();
        assert!((v - 9.0).abs() < 1e-12);

        assert!(weighted_tnn(&diag33, &WeightVector::ones(3)).is_err());
    }

    #[test]
    fn prox_examples() {
        let five = Tensor3::from_vec(1, 1, 1, vec![5.0]).unwrap();
        let z = prox_weighted_tnn(&five, 2.0, &WeightVector::ones(1)).unwrap();
        assert!((z.get(0, 0, 0) - 3.0).abs() < 1e-12);

        let diag31 = Tensor3::from_vec(2, 2, 1, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let z = prox_weighted_tnn(&diag31, 1.0, &WeightVector::ones(2)).unwrap();
        let expected = Tensor3::from_vec(2, 2, 1, vec![2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(z.max_abs_diff(&expected) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_tensor(&mut rng, 3, 4, 5);
        let z = prox_weighted_tnn(&a, 1e-12, &WeightVector::ones(3)).unwrap();
        assert!(z.max_abs_diff(&a) < 1e-9);

        assert!(prox_weighted_tnn(&a, 0.0, &WeightVector::ones(3)).is_err());
        assert!(prox_weighted_tnn(&a, -1.0, &WeightVector::ones(3)).is_err());
    }

    #[test]
    fn half_and_full_slice_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n3 in 1..8 {
            let a = random_tensor(&mut rng, 4, 3, n3);
            let w = WeightVector::ones(3);
            let (h, hn) = prox_weighted_tnn_with(&a, 0.2, &w, SliceMode::Half).unwrap();
            let (f, fnorm) = prox_weighted_tnn_with(&a, 0.2, &w, SliceMode::Full).unwrap();
            assert!(h.max_abs_diff(&f) < 1e-10, "n3={n3}");
            assert!((hn - fnorm).abs() < 1e-10);
        }
    }

    #[test]
    fn stack_rotate_bookkeeping() {
        let g0 = DMatrix::from_fn(3, 2, |i, k| (i * 10 + k) as f64);
        let g1 = DMatrix::from_fn(3, 2, |i, k| (100 + i * 10 + k) as f64);
        let t = stack_rotate(&[g0.clone(), g1.clone()]).unwrap();
        assert_eq!(t.shape(), (3, 2, 2));
        assert_eq!(t.get(2, 1, 1), g1[(2, 1)]);
        assert_eq!(t.lateral_slice(0), g0);
        assert_eq!(unstack_rotate(&t), vec![g0.clone(), g1]);

        let single = stack_rotate(std::slice::from_ref(&g0)).unwrap();
        assert_eq!(single.lateral_slice(0), g0);

        let bad = DMatrix::<f64>::zeros(2, 2);
        assert!(stack_rotate(&[g0, bad]).is_err());
    }
}
