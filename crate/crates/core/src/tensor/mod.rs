//! Dense complex tensors.
//!
//! [`ComplexTensor`] is a row-major array of [`C64`] values with an explicit
//! shape. Everything in the crate (site tensors, gates, boundary vectors,
//! dense operators) is built on it. Matrices are simply rank-2 tensors.

mod expm;
mod svd;

pub use expm::{eigh, herm_exp, HermitianEigen};
pub use svd::{svd, svd_truncated, SvdResult, DEFAULT_CUTOFF};

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexTensor")
            .field("shape", &self.shape)
            .field("len", &self.data.len())
            .finish()
    }
}

fn num_elements(shape: &[usize]) -> usize {
    shape.iter().product()
}

fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

impl ComplexTensor {
    /// Build a tensor from a shape and row-major data.
    ///
    /// Fails if the shape has a zero extent, the element count does not
    /// match, or any amplitude is not finite.
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::dim(format!("shape {shape:?} has a zero extent")));
        }
        if num_elements(&shape) != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {} amplitudes, got {}",
                num_elements(&shape),
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numeric("tensor contains non-finite amplitudes".into()));
        }
        Ok(Self { shape, data })
    }

    /// Internal constructor for data known to be consistent.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<C64>) -> Self {
        debug_assert_eq!(num_elements(&shape), data.len());
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = num_elements(&shape);
        Self { shape, data: vec![ZERO; n] }
    }

    pub fn scalar(value: C64) -> Self {
        Self { shape: vec![], data: vec![value] }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn from_real_matrix(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(vec![rows, cols], data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = ONE;
        }
        t
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        let mut t = Self::zeros(vec![n, n]);
        for (i, v) in values.iter().enumerate() {
            t.data[i * n + i] = *v;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    pub fn is_square(&self) -> bool {
        self.is_matrix() && self.shape[0] == self.shape[1]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut flat = 0;
        for (i, (&ix, &ext)) in index.iter().zip(&self.shape).enumerate() {
            debug_assert!(ix < ext, "axis {i} index {ix} >= {ext}");
            flat = flat * ext + ix;
        }
        self.data[flat]
    }

    /// Matrix element `(i, j)` of a rank-2 tensor.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        let cols = self.shape[1];
        self.data[i * cols + j] = value;
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        if num_elements(&shape) != self.data.len() {
            return Err(Error::dim(format!(
                "cannot reshape {:?} ({} amplitudes) into {shape:?}",
                self.shape,
                self.data.len()
            )));
        }
        Ok(Self { shape, data: self.data })
    }

    /// Reorder axes: axis `k` of the result is axis `axes[k]` of `self`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let r = self.shape.len();
        let mut seen = vec![false; r];
        if axes.len() != r || axes.iter().any(|&a| a >= r || std::mem::replace(&mut seen[a], true)) {
            return Err(Error::dim(format!("{axes:?} is not a permutation of {r} axes")));
        }
        if axes.iter().enumerate().all(|(k, &a)| k == a) {
            return Ok(self.clone());
        }
        let old_strides = strides_of(&self.shape);
        let new_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let src_strides: Vec<usize> = axes.iter().map(|&a| old_strides[a]).collect();
        let n = self.data.len();
        let mut out = Vec::with_capacity(n);
        let mut counter = vec![0usize; r];
        let mut src = 0usize;
        let last = r - 1;
        let inner_ext = new_shape[last];
        let inner_stride = src_strides[last];
        while out.len() < n {
            for k in 0..inner_ext {
                out.push(self.data[src + k * inner_stride]);
            }
            // advance the outer counters
            let mut ax = last;
            loop {
                if ax == 0 {
                    break;
                }
                ax -= 1;
                counter[ax] += 1;
                src += src_strides[ax];
                if counter[ax] < new_shape[ax] {
                    break;
                }
                src -= src_strides[ax] * new_shape[ax];
                counter[ax] = 0;
            }
        }
        Ok(Self { shape: new_shape, data: out })
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        assert!(self.is_matrix(), "transpose needs a matrix");
        self.permute(&[1, 0]).expect("valid permutation")
    }

    /// Conjugate transpose of a matrix.
    pub fn dagger(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn scale_mut(&mut self, factor: C64) {
        self.data.iter_mut().for_each(|z| *z *= factor);
    }

    /// `self + factor * other`, shapes must agree.
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(format!("cannot add {:?} and {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + factor * b).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if !self.is_matrix() || !other.is_matrix() || self.shape[1] != other.shape[0] {
            return Err(Error::dim(format!(
                "cannot multiply {:?} by {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        Ok(Self { shape: vec![m, n], data: matmul_raw(&self.data, &other.data, m, k, n) })
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace needs a square matrix");
        let n = self.shape[0];
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest elementwise modulus of `self - other`; infinite if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Kronecker product of two matrices; `self` indexes the slow (left) factor.
    pub fn kron(&self, other: &Self) -> Self {
        assert!(self.is_matrix() && other.is_matrix(), "kron needs matrices");
        let (ar, ac) = (self.shape[0], self.shape[1]);
        let (br, bc) = (other.shape[0], other.shape[1]);
        let mut out = Self::zeros(vec![ar * br, ac * bc]);
        let cols = ac * bc;
        for i in 0..ar {
            for j in 0..ac {
                let a = self.data[i * ac + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..br {
                    for l in 0..bc {
                        out.data[(i * br + k) * cols + j * bc + l] = a * other.data[k * bc + l];
                    }
                }
            }
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.dagger()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = self.dagger().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.shape[0])) <= tol
    }
}

pub(crate) fn matmul_raw(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// Sum over paired axes of `a` and `b`.
///
/// `axes` lists `(axis_of_a, axis_of_b)` pairs. The result carries the
/// remaining axes of `a` in order, followed by the remaining axes of `b`.
pub fn contract(a: &ComplexTensor, b: &ComplexTensor, axes: &[(usize, usize)]) -> Result<ComplexTensor> {
    let (ra, rb) = (a.rank(), b.rank());
    let mut used_a = vec![false; ra];
    let mut used_b = vec![false; rb];
    for &(ia, ib) in axes {
        if ia >= ra || ib >= rb {
            return Err(Error::dim(format!("axis pair ({ia}, {ib}) out of range for ranks {ra}, {rb}")));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::dim(format!("axis pair ({ia}, {ib}) repeats an axis")));
        }
        if a.shape[ia] != b.shape[ib] {
            return Err(Error::dim(format!(
                "extent mismatch on pair ({ia}, {ib}): {} vs {}",
                a.shape[ia], b.shape[ib]
            )));
        }
        used_a[ia] = true;
        used_b[ib] = true;
    }
    let free_a: Vec<usize> = (0..ra).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..rb).filter(|&i| !used_b[i]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(axes.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = axes.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let pa = a.permute(&perm_a)?;
    let pb = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&i| a.shape[i]).product();
    let k: usize = axes.iter().map(|p| a.shape[p.0]).product();
    let n: usize = free_b.iter().map(|&i| b.shape[i]).product();
    let data = matmul_raw(&pa.data, &pb.data, m, k, n);
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&i| a.shape[i])
        .chain(free_b.iter().map(|&i| b.shape[i]))
        .collect();
    Ok(ComplexTensor { shape, data })
}

/// Pauli and identity matrices on one qubit, in the Z basis (|0> = up).
pub mod pauli {
    use super::{ComplexTensor, C64, I, ONE, ZERO};

    pub fn id() -> ComplexTensor {
        ComplexTensor::identity(2)
    }

    pub fn x() -> ComplexTensor {
        ComplexTensor::from_parts(vec![2, 2], vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> ComplexTensor {
        ComplexTensor::from_parts(vec![2, 2], vec![ZERO, -I, I, ZERO])
    }

    pub fn z() -> ComplexTensor {
        ComplexTensor::from_parts(vec![2, 2], vec![ONE, ZERO, ZERO, C64::new(-1.0, 0.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_tensor(shape: Vec<usize>, rng: &mut impl Rng) -> ComplexTensor {
        let n = shape.iter().product();
        let data = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        ComplexTensor::new(shape, data).unwrap()
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(matches!(ComplexTensor::new(vec![2, 2], vec![ONE; 3]), Err(Error::Dimension(_))));
        assert!(matches!(
            ComplexTensor::new(vec![1], vec![C64::new(f64::NAN, 0.0)]),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn identity_composition() {
        let id = ComplexTensor::identity(2);
        let r = contract(&id, &id, &[(1, 0)]).unwrap();
        assert_eq!(r, id);
    }

    #[test]
    fn normalized_vector_self_contraction() {
        let v = ComplexTensor::new(vec![2], vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let r = contract(&v, &v.conj(), &[(0, 0)]).unwrap();
        assert_eq!(r.shape(), &[] as &[usize]);
        assert!((r.data()[0] - ONE).norm() < 1e-15);
    }

    #[test]
    fn contraction_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_tensor(vec![3, 4], &mut rng);
        let b = random_tensor(vec![4, 5], &mut rng);
        let r = contract(&a, &b, &[(1, 0)]).unwrap();
        for i in 0..3 {
            for j in 0..5 {
                let mut s = ZERO;
                for k in 0..4 {
                    s += a.at(i, k) * b.at(k, j);
                }
                assert!((r.at(i, j) - s).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn contraction_extent_mismatch() {
        let a = ComplexTensor::zeros(vec![2, 3]);
        let b = ComplexTensor::zeros(vec![2, 3]);
        assert!(matches!(contract(&a, &b, &[(1, 0)]), Err(Error::Dimension(_))));
    }

    #[test]
    fn contraction_orders_free_axes_a_then_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_tensor(vec![2, 3, 4], &mut rng);
        let b = random_tensor(vec![5, 3], &mut rng);
        let r = contract(&a, &b, &[(1, 1)]).unwrap();
        assert_eq!(r.shape(), &[2, 4, 5]);
        for i in 0..2 {
            for k in 0..4 {
                for l in 0..5 {
                    let s: C64 = (0..3).map(|j| a.get(&[i, j, k]) * b.get(&[l, j])).sum();
                    assert!((r.get(&[i, k, l]) - s).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn permute_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_tensor(vec![2, 3, 4, 5], &mut rng);
        let p = a.permute(&[2, 0, 3, 1]).unwrap();
        assert_eq!(p.shape(), &[4, 2, 5, 3]);
        assert_eq!(p.get(&[3, 1, 4, 2]), a.get(&[1, 2, 3, 4]));
        let back = p.permute(&[1, 3, 0, 2]).unwrap();
        assert_eq!(back, a);
        assert!(a.permute(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn kron_of_paulis() {
        let zx = pauli::z().kron(&pauli::x());
        assert_eq!(zx.at(0, 1), ONE);
        assert_eq!(zx.at(2, 3), -ONE);
        assert!(zx.is_unitary(1e-15));
        assert!(zx.is_hermitian(1e-15));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn contract_is_bilinear(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_tensor(vec![3, 2, 4], &mut rng);
                let b = random_tensor(vec![4, 3], &mut rng);
                let alpha = C64::new(re, im);
                let lhs = contract(&a.scale(alpha), &b, &[(2, 0), (0, 1)]).unwrap();
                let rhs = contract(&a, &b, &[(2, 0), (0, 1)]).unwrap().scale(alpha);
                prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
    }
}
