//! One-sided Jacobi singular value decomposition for complex matrices.

use super::{ComplexTensor, C64, ZERO};
use crate::error::{Error, Result};

/// Singular values below this are dropped unless the caller asks otherwise.
pub const DEFAULT_CUTOFF: f64 = 1e-14;

const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;
const REORTHOGONALIZE_BELOW: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m × r`, orthonormal columns.
    pub left_vectors: ComplexTensor,
    /// Descending, non-negative.
    pub singular_values: Vec<f64>,
    /// `r × n`, orthonormal rows.
    pub right_vectors_conj_transposed: ComplexTensor,
    /// Sum of squared singular values that were discarded.
    pub truncation_weight: f64,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `X S Y†` as a dense matrix.
    pub fn reconstruct(&self) -> ComplexTensor {
        let mut xs = self.left_vectors.clone();
        let r = self.rank();
        for row in xs.data_mut().chunks_mut(r) {
            for (z, s) in row.iter_mut().zip(&self.singular_values) {
                *z *= s;
            }
        }
        xs.matmul(&self.right_vectors_conj_transposed).expect("consistent factors")
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn rotate(p: &mut [C64], q: &mut [C64], c: f64, s: f64, phase: C64) {
    for (x, y) in p.iter_mut().zip(q.iter_mut()) {
        let yq = *y * phase;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Thin SVD of a tall-or-square column set. Returns (U columns, sigma, V columns)
/// sorted by descending sigma; columns of U with zero sigma are completed to an
/// orthonormal set.
fn jacobi_tall(mut a: Vec<Vec<C64>>, m: usize) -> Result<(Vec<Vec<C64>>, Vec<f64>, Vec<Vec<C64>>)> {
    let n = a.len();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let tol = OFF_DIAGONAL_TOL.max(m as f64 * f64::EPSILON);
    let total: f64 = a.iter().map(|col| norm_sqr(col)).sum();
    let negligible = total * (f64::EPSILON * (m.max(n) as f64)).powi(2);

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norm_sqr(&a[p]);
                let beta = norm_sqr(&a[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&a[p], &a[q]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = a.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s, phase);
                let (lo, hi) = v.split_at_mut(q);
                rotate(&mut lo[p], &mut hi[0], c, s, phase);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::Numeric(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
    }

    let sigma: Vec<f64> = a.iter().map(|col| norm_sqr(col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite"));
    let smax = order.first().map_or(0.0, |&i| sigma[i]);
    let floor = smax * f64::EPSILON * (m.max(n) as f64);

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    let mut sorted_sigma = Vec::with_capacity(n);
    let mut v_cols = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let s = sigma[j];
        let mut col: Option<Vec<C64>> = None;
        if s > floor && s > 0.0 {
            let mut u: Vec<C64> = a[j].iter().map(|z| z / s).collect();
            if s < smax * REORTHOGONALIZE_BELOW {
                // small singular values leave roundoff in the direction; re-orthogonalize
                for _ in 0..2 {
                    for prev in &u_cols {
                        let proj = dot(prev, &u);
                        for (x, p) in u.iter_mut().zip(prev) {
                            *x -= proj * p;
                        }
                    }
                }
                let nrm = norm_sqr(&u).sqrt();
                if nrm > 1e-8 {
                    col = Some(u.iter().map(|z| z / nrm).collect());
                }
            } else {
                col = Some(u);
            }
        }
        if let Some(u) = col {
            u_cols.push(u);
            sorted_sigma.push(s);
        } else {
            u_cols.push(vec![ZERO; m]);
            missing.push(k);
            sorted_sigma.push(0.0);
        }
        v_cols.push(std::mem::take(&mut v[j]));
    }
    complete_orthonormal(&mut u_cols, &missing, m);
    Ok((u_cols, sorted_sigma, v_cols))
}

/// Fill the columns listed in `missing` with unit vectors orthogonal to all others.
fn complete_orthonormal(cols: &mut [Vec<C64>], missing: &[usize], m: usize) {
    if missing.is_empty() {
        return;
    }
    let mut candidate = 0usize;
    for &k in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut w = vec![ZERO; m];
            w[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for (idx, col) in cols.iter().enumerate() {
                    if idx == k || (missing.contains(&idx) && norm_sqr(col) == 0.0) {
                        continue;
                    }
                    let proj = dot(col, &w);
                    for (x, c) in w.iter_mut().zip(col) {
                        *x -= proj * c;
                    }
                }
            }
            let nrm = norm_sqr(&w).sqrt();
            if nrm > 1e-8 {
                cols[k] = w.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
}

fn columns_of(m: &ComplexTensor, conj_transpose: bool) -> Vec<Vec<C64>> {
    let (rows, cols) = (m.rows(), m.cols());
    if conj_transpose {
        (0..rows).map(|i| m.data()[i * cols..(i + 1) * cols].iter().map(|z| z.conj()).collect()).collect()
    } else {
        (0..cols).map(|j| (0..rows).map(|i| m.at(i, j)).collect()).collect()
    }
}

fn matrix_from_columns(cols: &[Vec<C64>], rows: usize) -> ComplexTensor {
    let n = cols.len();
    let mut out = ComplexTensor::zeros(vec![rows, n]);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            out.data_mut()[i * n + j] = *z;
        }
    }
    out
}

fn matrix_from_conj_rows(rows_in: &[Vec<C64>], cols: usize) -> ComplexTensor {
    let data = rows_in.iter().flat_map(|r| r.iter().map(|z| z.conj())).collect();
    ComplexTensor::from_parts(vec![rows_in.len(), cols], data)
}

/// Full thin SVD, `r = min(m, n)` triplets, nothing discarded.
pub fn svd(m: &ComplexTensor) -> Result<SvdResult> {
    if !m.is_matrix() {
        return Err(Error::dim(format!("svd needs a matrix, got shape {:?}", m.shape())));
    }
    if !m.is_finite() {
        return Err(Error::Numeric("svd input contains non-finite values".into()));
    }
    let (rows, cols) = (m.rows(), m.cols());
    if rows >= cols {
        let (u, s, v) = jacobi_tall(columns_of(m, false), rows)?;
        Ok(SvdResult {
            left_vectors: matrix_from_columns(&u, rows),
            singular_values: s,
            right_vectors_conj_transposed: matrix_from_conj_rows(&v, cols),
            truncation_weight: 0.0,
        })
    } else {
        // A† = U' S V'†  =>  A = V' S U'†
        let (u, s, v) = jacobi_tall(columns_of(m, true), cols)?;
        Ok(SvdResult {
            left_vectors: matrix_from_columns(&v, rows),
            singular_values: s,
            right_vectors_conj_transposed: matrix_from_conj_rows(&u, cols),
            truncation_weight: 0.0,
        })
    }
}

/// SVD keeping at most `max_rank` triplets and none with singular value
/// below `cutoff`. Always keeps at least one triplet.
///
/// Equal singular values keep the order in which the Jacobi sweep produced
/// them, so individual factors are not unique; only products such as
/// reconstructions and fidelities are.
pub fn svd_truncated(m: &ComplexTensor, max_rank: usize, cutoff: f64) -> Result<SvdResult> {
    if max_rank == 0 {
        return Err(Error::invalid("max_rank must be positive"));
    }
    if cutoff.is_nan() || cutoff < 0.0 {
        return Err(Error::invalid(format!("cutoff must be non-negative, got {cutoff}")));
    }
    let full = svd(m)?;
    let keep = full
        .singular_values
        .iter()
        .take(max_rank)
        .take_while(|&&s| s >= cutoff)
        .count()
        .max(1);
    if keep == full.rank() {
        return Ok(full);
    }
    let truncation_weight = full.singular_values[keep..].iter().map(|s| s * s).sum();
    let (rows, cols) = (m.rows(), m.cols());
    let r = full.rank();
    let x = full.left_vectors.data();
    let left: Vec<C64> = (0..rows).flat_map(|i| x[i * r..i * r + keep].iter().copied()).collect();
    let right = full.right_vectors_conj_transposed.data()[..keep * cols].to_vec();
    Ok(SvdResult {
        left_vectors: ComplexTensor::from_parts(vec![rows, keep], left),
        singular_values: full.singular_values[..keep].to_vec(),
        right_vectors_conj_transposed: ComplexTensor::from_parts(vec![keep, cols], right),
        truncation_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexTensor {
        let data = (0..rows * cols)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexTensor::matrix(rows, cols, data).unwrap()
    }

    fn assert_isometries(r: &SvdResult) {
        let x = &r.left_vectors;
        let xx = x.dagger().matmul(x).unwrap();
        assert!(xx.max_abs_diff(&ComplexTensor::identity(x.cols())) < 1e-10);
        let y = &r.right_vectors_conj_transposed;
        let yy = y.matmul(&y.dagger()).unwrap();
        assert!(yy.max_abs_diff(&ComplexTensor::identity(y.rows())) < 1e-10);
    }

    #[test]
    fn diagonal_truncation() {
        let m = ComplexTensor::from_real_matrix(3, 3, &[3., 0., 0., 0., 2., 0., 0., 0., 1.]).unwrap();
        let r = svd_truncated(&m, 2, 0.0).unwrap();
        assert_eq!(r.rank(), 2);
        assert!((r.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((r.singular_values[1] - 2.0).abs() < 1e-14);
        assert!((r.truncation_weight - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_matrix(4, 1, &mut rng);
        let v = random_matrix(4, 1, &mut rng);
        let m = u.matmul(&v.dagger()).unwrap();
        let r = svd_truncated(&m, 4, 1e-10).unwrap();
        assert_eq!(r.rank(), 1);
        let expect = u.frobenius_norm() * v.frobenius_norm();
        assert!((r.singular_values[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn random_square_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_matrix(8, 8, &mut rng);
        let r = svd_truncated(&m, 8, 0.0).unwrap();
        assert!(r.reconstruct().max_abs_diff(&m) < 1e-10);
        assert_isometries(&r);
        assert!(r.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn wide_and_tall_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (rows, cols) in [(3, 7), (9, 2), (1, 5), (5, 1)] {
            let m = random_matrix(rows, cols, &mut rng);
            let r = svd(&m).unwrap();
            assert_eq!(r.rank(), rows.min(cols));
            assert!(r.reconstruct().max_abs_diff(&m) < 1e-10);
            assert_isometries(&r);
        }
    }

    #[test]
    fn rank_deficient_left_factor_is_completed() {
        let m = ComplexTensor::from_real_matrix(2, 2, &[1., 0., 0., 0.]).unwrap();
        let r = svd(&m).unwrap();
        assert_eq!(r.singular_values, vec![1.0, 0.0]);
        assert_isometries(&r);
        let z = ComplexTensor::zeros(vec![4, 4]);
        let r = svd(&z).unwrap();
        assert_isometries(&r);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut m = ComplexTensor::identity(2);
        m.data_mut()[1] = C64::new(f64::INFINITY, 0.0);
        assert!(matches!(svd(&m), Err(Error::Numeric(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn full_rank_reconstructs(seed in 0u64..10_000, rows in 1usize..12, cols in 1usize..12) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = random_matrix(rows, cols, &mut rng);
                let r = svd_truncated(&m, rows.max(cols), 0.0).unwrap();
                prop_assert!(r.reconstruct().max_abs_diff(&m) < 1e-10);
            }

            #[test]
            fn truncation_weight_is_discarded_mass(seed in 0u64..10_000, keep in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = random_matrix(6, 7, &mut rng);
                let r = svd_truncated(&m, keep, 0.0).unwrap();
                let kept: f64 = r.singular_values.iter().map(|s| s * s).sum();
                prop_assert!((m.norm_sqr() - kept - r.truncation_weight).abs() < 1e-10);
            }
        }
    }
}
