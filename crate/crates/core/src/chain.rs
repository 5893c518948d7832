//! Open-boundary tensor chains shared by MPS (d = 2) and MPO (d = 4).
//!
//! Site tensors are `[χ_left, d, χ_right]`. The chain tracks an optional
//! orthogonality center: when set, every tensor left of it is a left
//! isometry and every tensor right of it a right isometry, so the center
//! tensor carries the whole norm.

use crate::error::{Error, Result};
use crate::tensor::{svd_truncated, ComplexTensor, SvdResult, C64, DEFAULT_CUTOFF};

#[derive(Clone, Debug)]
pub(crate) struct Chain {
    pub d: usize,
    pub tensors: Vec<ComplexTensor>,
    pub center: Option<usize>,
    pub max_bond: usize,
}

fn as_matrix(t: &ComplexTensor, rows: usize, cols: usize) -> ComplexTensor {
    t.clone().reshape(vec![rows, cols]).expect("consistent reshape")
}

fn scale_rows(m: &mut ComplexTensor, s: &[f64]) {
    let cols = m.cols();
    for (row, &f) in m.data_mut().chunks_mut(cols).zip(s) {
        row.iter_mut().for_each(|z| *z *= f);
    }
}

fn scale_cols(m: &mut ComplexTensor, s: &[f64]) {
    let cols = m.cols();
    for row in m.data_mut().chunks_mut(cols) {
        for (z, &f) in row.iter_mut().zip(s) {
            *z *= f;
        }
    }
}

fn truncated(m: &ComplexTensor, max_rank: usize) -> Result<SvdResult> {
    svd_truncated(m, max_rank, DEFAULT_CUTOFF * m.frobenius_norm())
}

impl Chain {
    /// Bond-1 chain from one local vector per site.
    pub fn product(local: &[Vec<C64>], max_bond: usize) -> Result<Self> {
        if local.is_empty() {
            return Err(Error::invalid("a chain needs at least one site"));
        }
        let d = local[0].len();
        if local.iter().any(|v| v.len() != d) {
            return Err(Error::dim("local vectors have different dimensions"));
        }
        let tensors = local
            .iter()
            .map(|v| ComplexTensor::new(vec![1, d, 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, tensors, center: None, max_bond: max_bond.max(1) })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn left_dim(&self, site: usize) -> usize {
        self.tensors[site].shape()[0]
    }

    pub fn right_dim(&self, site: usize) -> usize {
        self.tensors[site].shape()[2]
    }

    /// Extents of the `L - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        (0..self.len() - 1).map(|n| self.right_dim(n)).collect()
    }

    fn step_right(&mut self, c: usize) -> Result<()> {
        let (l, d, r) = (self.left_dim(c), self.d, self.right_dim(c));
        let f = truncated(&as_matrix(&self.tensors[c], l * d, r), self.max_bond)?;
        let k = f.rank();
        self.tensors[c] = f.left_vectors.reshape(vec![l, d, k])?;
        let mut sv = f.right_vectors_conj_transposed;
        scale_rows(&mut sv, &f.singular_values);
        let (d2, r2) = (self.d, self.right_dim(c + 1));
        let next = as_matrix(&self.tensors[c + 1], r, d2 * r2);
        self.tensors[c + 1] = sv.matmul(&next)?.reshape(vec![k, d2, r2])?;
        Ok(())
    }

    fn step_left(&mut self, c: usize) -> Result<()> {
        let (l, d, r) = (self.left_dim(c), self.d, self.right_dim(c));
        let f = truncated(&as_matrix(&self.tensors[c], l, d * r), self.max_bond)?;
        let k = f.rank();
        self.tensors[c] = f.right_vectors_conj_transposed.reshape(vec![k, d, r])?;
        let mut us = f.left_vectors;
        scale_cols(&mut us, &f.singular_values);
        let l2 = self.left_dim(c - 1);
        let prev = as_matrix(&self.tensors[c - 1], l2 * d, l);
        self.tensors[c - 1] = prev.matmul(&us)?.reshape(vec![l2, d, k])?;
        Ok(())
    }

    /// Bring the chain into mixed-canonical form centered at `site`.
    pub fn canonicalize(&mut self, site: usize) -> Result<()> {
        for c in 0..site {
            self.step_right(c)?;
        }
        for c in (site + 1..self.len()).rev() {
            self.step_left(c)?;
        }
        self.center = Some(site);
        Ok(())
    }

    pub fn move_center(&mut self, target: usize) -> Result<()> {
        let Some(mut c) = self.center else {
            return self.canonicalize(target);
        };
        while c < target {
            self.step_right(c)?;
            c += 1;
        }
        while c > target {
            self.step_left(c)?;
            c -= 1;
        }
        self.center = Some(target);
        Ok(())
    }

    /// Two-site tensor of sites `(left, left + 1)` as a `(χl·d, d·χr)` matrix.
    pub fn theta(&self, left: usize) -> ComplexTensor {
        let (l, d, m) = (self.left_dim(left), self.d, self.right_dim(left));
        let r = self.right_dim(left + 1);
        let a = as_matrix(&self.tensors[left], l * d, m);
        let b = as_matrix(&self.tensors[left + 1], m, d * r);
        a.matmul(&b).expect("matching bond")
    }

    /// Make sure the center sits on `left` or `left + 1`.
    pub fn center_near(&mut self, left: usize) -> Result<()> {
        match self.center {
            Some(c) if c == left || c == left + 1 => Ok(()),
            Some(c) if c < left => self.move_center(left),
            Some(_) => self.move_center(left + 1),
            None => self.canonicalize(left),
        }
    }

    /// Replace sites `(left, left + 1)` by the SVD split of `theta`
    /// (a `(χl·d, d·χr)` matrix). Returns the discarded squared weight,
    /// relative to `||theta||²` when `renormalize` is set.
    pub fn split(&mut self, left: usize, theta: &ComplexTensor, center_right: bool, renormalize: bool) -> Result<f64> {
        let (l, d) = (self.left_dim(left), self.d);
        let r = self.right_dim(left + 1);
        let norm_sqr = theta.norm_sqr();
        let mut f = truncated(theta, self.max_bond)?;
        let k = f.rank();
        let mut weight = f.truncation_weight;
        if renormalize {
            let kept: f64 = f.singular_values.iter().map(|s| s * s).sum();
            if kept > 0.0 {
                let factor = (1.0 / kept).sqrt();
                f.singular_values.iter_mut().for_each(|s| *s *= factor);
            }
            if norm_sqr > 0.0 {
                weight /= norm_sqr;
            }
        }
        if center_right {
            let mut sv = f.right_vectors_conj_transposed;
            scale_rows(&mut sv, &f.singular_values);
            self.tensors[left] = f.left_vectors.reshape(vec![l, d, k])?;
            self.tensors[left + 1] = sv.reshape(vec![k, d, r])?;
            self.center = Some(left + 1);
        } else {
            let mut us = f.left_vectors;
            scale_cols(&mut us, &f.singular_values);
            self.tensors[left] = us.reshape(vec![l, d, k])?;
            self.tensors[left + 1] = f.right_vectors_conj_transposed.reshape(vec![k, d, r])?;
            self.center = Some(left);
        }
        Ok(weight)
    }

    /// Singular values across the bond after the first `cut` sites.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.len() {
            return Err(Error::OutOfRange { index: cut, len: self.len() });
        }
        let values = |chain: &Chain, c: usize| -> Result<Vec<f64>> {
            let (l, d, r) = (chain.left_dim(c), chain.d, chain.right_dim(c));
            let m = if c == cut {
                as_matrix(&chain.tensors[c], l, d * r)
            } else {
                as_matrix(&chain.tensors[c], l * d, r)
            };
            Ok(truncated(&m, usize::MAX)?.singular_values)
        };
        match self.center {
            Some(c) if c == cut || c + 1 == cut => values(self, c),
            _ => {
                let mut copy = self.clone();
                copy.move_center(cut)?;
                values(&copy, cut)
            }
        }
    }

    /// `Σ conj(other) · self` over all physical indices.
    pub fn overlap(&self, other: &Chain) -> Result<C64> {
        if self.len() != other.len() || self.d != other.d {
            return Err(Error::dim(format!(
                "chains differ: {} sites (d={}) vs {} sites (d={})",
                self.len(),
                self.d,
                other.len(),
                other.d
            )));
        }
        let d = self.d;
        let mut env = ComplexTensor::identity(1);
        for (s, o) in self.tensors.iter().zip(&other.tensors) {
            let (sl, sr) = (s.shape()[0], s.shape()[2]);
            let (ol, or) = (o.shape()[0], o.shape()[2]);
            let x = env.matmul(&as_matrix(s, sl, d * sr))?.reshape(vec![ol * d, sr])?;
            env = as_matrix(o, ol * d, or).dagger().matmul(&x)?;
        }
        Ok(env.data()[0])
    }

    pub fn norm_sqr(&self) -> f64 {
        match self.center {
            Some(c) => self.tensors[c].norm_sqr(),
            None => self.overlap(self).map(|z| z.re).unwrap_or(f64::NAN),
        }
    }

    /// Full contraction into `d^L` amplitudes, site 0 slowest.
    pub fn to_dense(&self) -> Vec<C64> {
        let d = self.d;
        let mut acc = ComplexTensor::identity(1);
        for t in &self.tensors {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let p = acc.rows();
            acc = acc.matmul(&as_matrix(t, l, d * r)).expect("matching bond").reshape(vec![p * d, r]).expect("reshape");
        }
        acc.into_data()
    }

    /// Chain from dense amplitudes via successive SVDs (no truncation beyond the cutoff).
    pub fn from_dense(amps: &[C64], d: usize, num_sites: usize, max_bond: usize) -> Result<Self> {
        if d.checked_pow(num_sites as u32) != Some(amps.len()) {
            return Err(Error::dim(format!("{} amplitudes do not fit {num_sites} sites of dimension {d}", amps.len())));
        }
        let mut tensors = Vec::with_capacity(num_sites);
        let mut rest = ComplexTensor::new(vec![1, amps.len()], amps.to_vec())?;
        let mut left = 1;
        for _ in 0..num_sites - 1 {
            let cols = rest.len() / (left * d);
            let m = rest.reshape(vec![left * d, cols])?;
            let f = truncated(&m, max_bond.max(1))?;
            let k = f.rank();
            tensors.push(f.left_vectors.reshape(vec![left, d, k])?);
            let mut sv = f.right_vectors_conj_transposed;
            scale_rows(&mut sv, &f.singular_values);
            rest = sv;
            left = k;
        }
        tensors.push(rest.reshape(vec![left, d, 1])?);
        Ok(Self { d, tensors, center: Some(num_sites - 1), max_bond: max_bond.max(1) })
    }

    pub fn is_left_isometry(&self, site: usize, tol: f64) -> bool {
        let (l, d, r) = (self.left_dim(site), self.d, self.right_dim(site));
        let m = as_matrix(&self.tensors[site], l * d, r);
        m.dagger().matmul(&m).expect("square").max_abs_diff(&ComplexTensor::identity(r)) <= tol
    }

    pub fn is_right_isometry(&self, site: usize, tol: f64) -> bool {
        let (l, d, r) = (self.left_dim(site), self.d, self.right_dim(site));
        let m = as_matrix(&self.tensors[site], l, d * r);
        m.matmul(&m.dagger()).expect("square").max_abs_diff(&ComplexTensor::identity(l)) <= tol
    }
}

/// Apply a `D × D` operator to the middle axis of a `(a, D, b)` array.
pub(crate) fn apply_middle(theta: &ComplexTensor, a: usize, dim: usize, b: usize, op: &ComplexTensor) -> ComplexTensor {
    let src = theta.data();
    let g = op.data();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for i in 0..a {
        let base = i * dim * b;
        for r in 0..dim {
            let dst = &mut out[base + r * b..base + (r + 1) * b];
            for c in 0..dim {
                let grc = g[r * dim + c];
                if grc == C64::new(0.0, 0.0) {
                    continue;
                }
                let s = &src[base + c * b..base + (c + 1) * b];
                for (o, v) in dst.iter_mut().zip(s) {
                    *o += grc * v;
                }
            }
        }
    }
    ComplexTensor::from_parts(theta.shape().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_amps(n: usize, rng: &mut impl Rng) -> Vec<C64> {
        (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn dense_roundtrip_and_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let amps = random_amps(1 << 6, &mut rng);
        let mut chain = Chain::from_dense(&amps, 2, 6, 64).unwrap();
        let back = chain.to_dense();
        let diff = amps.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
        chain.move_center(2).unwrap();
        for s in 0..2 {
            assert!(chain.is_left_isometry(s, 1e-10));
        }
        for s in 3..6 {
            assert!(chain.is_right_isometry(s, 1e-10));
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        assert!((chain.norm_sqr() - norm).abs() < 1e-10);
        assert!((chain.overlap(&chain).unwrap().re - norm).abs() < 1e-10);
    }

    #[test]
    fn schmidt_values_do_not_depend_on_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let amps = random_amps(1 << 5, &mut rng);
        let chain = Chain::from_dense(&amps, 2, 5, 64).unwrap();
        let m = ComplexTensor::matrix(4, 8, amps).unwrap();
        let direct = crate::tensor::svd(&m).unwrap().singular_values;
        let via = chain.schmidt_values(2).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_middle_matches_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = ComplexTensor::new(vec![3, 4, 5], random_amps(60, &mut rng)).unwrap();
        let g = ComplexTensor::matrix(4, 4, random_amps(16, &mut rng)).unwrap();
        let expect = crate::tensor::contract(&g, &t, &[(1, 1)]).unwrap().permute(&[1, 0, 2]).unwrap();
        assert!(apply_middle(&t, 3, 4, 5, &g).max_abs_diff(&expect) < 1e-13);
    }
}
