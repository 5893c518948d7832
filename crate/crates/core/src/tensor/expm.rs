//! Hermitian eigendecomposition and exponentials of Hermitian matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{ComplexTensor, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexTensor,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V†`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> ComplexTensor {
        let n = self.values.len();
        let fl: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let v = self.vectors.data();
        let mut out = ComplexTensor::zeros(vec![n, n]);
        let data = out.data_mut();
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    s += v[i * n + k] * fl[k] * v[j * n + k].conj();
                }
                data[i * n + j] = s;
            }
        }
        out
    }
}

pub(crate) fn to_nalgebra(m: &ComplexTensor) -> DMatrix<C64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn check_hermitian(h: &ComplexTensor) -> Result<()> {
    if !h.is_square() {
        return Err(Error::dim(format!("expected a square matrix, got {:?}", h.shape())));
    }
    if !h.is_finite() {
        return Err(Error::Numeric("matrix contains non-finite values".into()));
    }
    let dev = h.max_abs_diff(&h.dagger());
    if dev > HERMITIAN_TOL {
        return Err(Error::invalid(format!("matrix is not Hermitian (deviation {dev:.3e})")));
    }
    Ok(())
}

pub fn eigh(h: &ComplexTensor) -> Result<HermitianEigen> {
    check_hermitian(h)?;
    let eig = SymmetricEigen::new(to_nalgebra(h));
    let n = h.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexTensor::zeros(vec![n, n]);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, col, eig.eigenvectors[(i, k)]);
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// `exp(scale * h)` for Hermitian `h`, through its eigendecomposition.
pub fn herm_exp(h: &ComplexTensor, scale: C64) -> Result<ComplexTensor> {
    let eig = eigh(h)?;
    Ok(eig.apply_function(|l| (scale * l).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexTensor {
        let data = (0..n * n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let a = ComplexTensor::matrix(n, n, data).unwrap();
        a.add_scaled(&a.dagger(), C64::new(1.0, 0.0)).unwrap().scale(C64::new(0.5, 0.0))
    }

    #[test]
    fn diagonal_exponential() {
        let u = herm_exp(&pauli::z(), C64::new(0.0, -std::f64::consts::PI)).unwrap();
        let minus_id = ComplexTensor::identity(2).scale(C64::new(-1.0, 0.0));
        assert!(u.max_abs_diff(&minus_id) < 1e-12);
    }

    #[test]
    fn zero_scale_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_hermitian(4, &mut rng);
        let u = herm_exp(&h, C64::new(0.0, 0.0)).unwrap();
        assert!(u.max_abs_diff(&ComplexTensor::identity(4)) < 1e-12);
    }

    #[test]
    fn matches_taylor_series() {
        let x = pauli::x();
        let scale = C64::new(0.0, -0.3);
        let a = x.scale(scale);
        let mut term = ComplexTensor::identity(2);
        let mut sum = term.clone();
        for k in 1..12 {
            term = term.matmul(&a).unwrap().scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add_scaled(&term, C64::new(1.0, 0.0)).unwrap();
        }
        let u = herm_exp(&x, scale).unwrap();
        assert!(u.max_abs_diff(&sum) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexTensor::from_real_matrix(2, 2, &[0., 1., 0., 0.]).unwrap();
        assert!(matches!(herm_exp(&m, C64::new(1.0, 0.0)), Err(Error::Validation(_))));
    }

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(6, &mut rng);
        let e = eigh(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(e.vectors.is_unitary(1e-12));
        let back = e.apply_function(|l| C64::new(l, 0.0));
        assert!(back.max_abs_diff(&h) < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn forward_backward_is_identity(seed in 0u64..10_000, t in -5.0f64..5.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = random_hermitian(4, &mut rng);
                let u = herm_exp(&h, C64::new(0.0, -t)).unwrap();
                let v = herm_exp(&h, C64::new(0.0, t)).unwrap();
                let p = u.matmul(&v).unwrap();
                prop_assert!(p.max_abs_diff(&ComplexTensor::identity(4)) < 1e-12);
                prop_assert!(u.is_unitary(1e-12));
            }
        }
    }
}
