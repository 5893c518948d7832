//! Dense statevectors of qubit chains.
//!
//! Basis index convention: site 0 is the most significant bit, and bit value
//! 0 is spin up (Z = +1).

use crate::error::{check_index, Error, Result};
use crate::model::Spin;
use crate::tensor::{svd, ComplexTensor, C64, ZERO};

/// Largest chain that dense routines accept by default.
pub const DENSE_LIMIT: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    num_sites: usize,
    amps: Vec<C64>,
}

pub(crate) fn check_dense(num_sites: usize, limit: usize) -> Result<()> {
    if num_sites > limit {
        return Err(Error::capability(format!(
            "{num_sites} sites exceed the dense limit of {limit}"
        )));
    }
    Ok(())
}

impl Statevector {
    pub fn new(num_sites: usize, amps: Vec<C64>) -> Result<Self> {
        check_dense(num_sites, DENSE_LIMIT)?;
        if amps.len() != 1 << num_sites {
            return Err(Error::dim(format!(
                "{num_sites} sites need {} amplitudes, got {}",
                1usize << num_sites,
                amps.len()
            )));
        }
        Ok(Self { num_sites, amps })
    }

    pub fn from_tensor(num_sites: usize, t: &ComplexTensor) -> Result<Self> {
        Self::new(num_sites, t.data().to_vec())
    }

    pub fn basis(num_sites: usize, index: usize) -> Result<Self> {
        let mut amps = vec![ZERO; 1 << num_sites];
        check_index(index, amps.len())?;
        amps[index] = C64::new(1.0, 0.0);
        Self::new(num_sites, amps)
    }

    pub fn from_product(labels: &[Spin]) -> Result<Self> {
        let l = labels.len();
        let index = labels.iter().fold(0usize, |acc, s| (acc << 1) | s.bit());
        Self::basis(l, index)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn to_tensor(&self) -> ComplexTensor {
        ComplexTensor::from_parts(vec![self.amps.len()], self.amps.clone())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|z| *z /= n);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.num_sites != other.num_sites {
            return Err(Error::dim(format!(
                "statevectors have {} and {} sites",
                self.num_sites, other.num_sites
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Apply a 4×4 gate to sites `(left, left + 1)`; row index is `2*o_left + o_right`.
    pub fn apply_two_site(&mut self, left: usize, gate: &ComplexTensor) -> Result<()> {
        if left + 1 >= self.num_sites {
            return Err(Error::OutOfRange { index: left, len: self.num_sites.saturating_sub(1) });
        }
        if gate.shape() != [4, 4] {
            return Err(Error::dim(format!("two-site gate must be 4x4, got {:?}", gate.shape())));
        }
        let s = 1usize << (self.num_sites - 2 - left);
        let g = gate.data();
        let highs = 1usize << left;
        for high in 0..highs {
            for low in 0..s {
                let base = high * 4 * s + low;
                let v = [self.amps[base], self.amps[base + s], self.amps[base + 2 * s], self.amps[base + 3 * s]];
                for r in 0..4 {
                    self.amps[base + r * s] =
                        g[4 * r] * v[0] + g[4 * r + 1] * v[1] + g[4 * r + 2] * v[2] + g[4 * r + 3] * v[3];
                }
            }
        }
        Ok(())
    }

    pub fn apply_one_site(&mut self, site: usize, op: &ComplexTensor) -> Result<()> {
        check_index(site, self.num_sites)?;
        if op.shape() != [2, 2] {
            return Err(Error::dim(format!("one-site operator must be 2x2, got {:?}", op.shape())));
        }
        let s = 1usize << (self.num_sites - 1 - site);
        let g = op.data();
        for high in 0..(1usize << site) {
            for low in 0..s {
                let base = high * 2 * s + low;
                let (a, b) = (self.amps[base], self.amps[base + s]);
                self.amps[base] = g[0] * a + g[1] * b;
                self.amps[base + s] = g[2] * a + g[3] * b;
            }
        }
        Ok(())
    }

    /// `<Z_site>` (not divided by the norm).
    pub fn expectation_z(&self, site: usize) -> Result<f64> {
        check_index(site, self.num_sites)?;
        let shift = self.num_sites - 1 - site;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, z)| if (i >> shift) & 1 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
            .sum())
    }

    /// Apply a dense operator given as a `2^L × 2^L` matrix.
    pub fn apply_dense(&self, op: &ComplexTensor) -> Result<Self> {
        let n = self.amps.len();
        if op.shape() != [n, n] {
            return Err(Error::dim(format!("operator shape {:?} does not act on {n} amplitudes", op.shape())));
        }
        let v = ComplexTensor::from_parts(vec![n, 1], self.amps.clone());
        let out = op.matmul(&v)?;
        Ok(Self { num_sites: self.num_sites, amps: out.into_data() })
    }

    /// Schmidt coefficients across the cut after the first `cut` sites.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.num_sites {
            return Err(Error::OutOfRange { index: cut, len: self.num_sites });
        }
        let m = ComplexTensor::matrix(1 << cut, 1 << (self.num_sites - cut), self.amps.clone())?;
        Ok(svd(&m)?.singular_values)
    }

    /// Von Neumann entropy in bits across the cut after `cut` sites.
    pub fn entropy_vn(&self, cut: usize) -> Result<f64> {
        Ok(entropy_bits(&self.schmidt_values(cut)?))
    }

    /// `|self><self|` as a dense matrix.
    pub fn density_matrix(&self) -> ComplexTensor {
        let n = self.amps.len();
        let mut rho = ComplexTensor::zeros(vec![n, n]);
        for i in 0..n {
            for j in 0..n {
                rho.set(i, j, self.amps[i] * self.amps[j].conj());
            }
        }
        rho
    }
}

/// `-Σ λ² log₂ λ²` over Schmidt coefficients, skipping weights below 1e-15.
pub fn entropy_bits(schmidt: &[f64]) -> f64 {
    schmidt
        .iter()
        .map(|s| s * s)
        .filter(|&w| w >= 1e-15)
        .map(|w| -w * w.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Embed a two-site operator acting on `(left, left + 1)` into the full chain.
pub fn embed_two_site(num_sites: usize, left: usize, op: &ComplexTensor) -> Result<ComplexTensor> {
    check_dense(num_sites, DENSE_LIMIT)?;
    if left + 1 >= num_sites {
        return Err(Error::OutOfRange { index: left, len: num_sites.saturating_sub(1) });
    }
    let before = ComplexTensor::identity(1 << left);
    let after = ComplexTensor::identity(1 << (num_sites - left - 2));
    Ok(before.kron(op).kron(&after))
}

/// Embed a one-site operator acting on `site` into the full chain.
pub fn embed_one_site(num_sites: usize, site: usize, op: &ComplexTensor) -> Result<ComplexTensor> {
    check_dense(num_sites, DENSE_LIMIT)?;
    check_index(site, num_sites)?;
    let before = ComplexTensor::identity(1 << site);
    let after = ComplexTensor::identity(1 << (num_sites - site - 1));
    Ok(before.kron(op).kron(&after))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_state(l: usize, rng: &mut impl Rng) -> Statevector {
        let amps = (0..1 << l).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut s = Statevector::new(l, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn two_site_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_state(5, &mut rng);
        let data = (0..16).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let g = ComplexTensor::matrix(4, 4, data).unwrap();
        for left in 0..4 {
            let mut a = psi.clone();
            a.apply_two_site(left, &g).unwrap();
            let b = psi.apply_dense(&embed_two_site(5, left, &g).unwrap()).unwrap();
            assert!(a.to_tensor().max_abs_diff(&b.to_tensor()) < 1e-13);
        }
    }

    #[test]
    fn one_site_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let psi = random_state(4, &mut rng);
        for site in 0..4 {
            let mut a = psi.clone();
            a.apply_one_site(site, &pauli::y()).unwrap();
            let b = psi.apply_dense(&embed_one_site(4, site, &pauli::y()).unwrap()).unwrap();
            assert!(a.to_tensor().max_abs_diff(&b.to_tensor()) < 1e-13);
        }
    }

    #[test]
    fn expectation_z_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = random_state(6, &mut rng);
        let rho = psi.density_matrix();
        for site in 0..6 {
            let z = embed_one_site(6, site, &pauli::z()).unwrap();
            let dense = rho.matmul(&z).unwrap().trace().re;
            assert!((psi.expectation_z(site).unwrap() - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_pair_entropy() {
        let h = 1.0 / 2f64.sqrt();
        let s = Statevector::new(2, vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]).unwrap();
        assert!((s.entropy_vn(1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_limit() {
        assert!(matches!(Statevector::basis(15, 0), Err(Error::Capability(_))));
    }
}
