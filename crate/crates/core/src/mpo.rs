//! Matrix product operators, operator TEBD and the Frobenius operator fidelity.
//!
//! Each site tensor is stored as `(κ_left, 2, 2, κ_right)` with the physical
//! pair ordered (output, input).

use std::io::Write;

use crate::chain::{apply_middle, Chain};
use crate::error::{Error, Result};
use crate::model::{trotter_step_gates, TfimParams};
use crate::statevector::check_dense;
use crate::tensor::{ComplexTensor, C64};

/// Which physical legs a gate multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `g · U`: the gate acts after the operator (output legs).
    Left,
    /// `U · g`: the gate acts before the operator (input legs).
    Right,
}

#[derive(Clone, Debug)]
pub struct MatrixProductOperator {
    chain: Chain,
}

impl MatrixProductOperator {
    pub fn identity(num_sites: usize, kappa_max: usize) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let local = vec![vec![one, zero, zero, one]; num_sites];
        Ok(Self { chain: Chain::product(&local, kappa_max)? })
    }

    /// Exact MPO of a dense `2^L × 2^L` matrix (rows are outputs).
    pub fn from_dense(num_sites: usize, m: &ComplexTensor) -> Result<Self> {
        check_dense(num_sites, 10)?;
        let n = 1usize << num_sites;
        if m.shape() != [n, n] {
            return Err(Error::dim(format!("{:?} is not a {n}x{n} operator", m.shape())));
        }
        let mut perm = Vec::with_capacity(2 * num_sites);
        for s in 0..num_sites {
            perm.push(s);
            perm.push(num_sites + s);
        }
        let fused = m.clone().reshape(vec![2; 2 * num_sites])?.permute(&perm)?;
        let chain = Chain::from_dense(fused.data(), 4, num_sites, usize::MAX)?;
        Ok(Self { chain })
    }

    pub fn num_sites(&self) -> usize {
        self.chain.len()
    }

    pub fn kappa_max(&self) -> usize {
        self.chain.max_bond
    }

    pub fn set_kappa_max(&mut self, kappa_max: usize) {
        self.chain.max_bond = kappa_max.max(1);
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    /// Site tensors shaped `(κ_left, 2, 2, κ_right)`.
    pub fn site_tensors(&self) -> Vec<ComplexTensor> {
        self.chain
            .tensors
            .iter()
            .map(|t| {
                let (l, r) = (t.shape()[0], t.shape()[2]);
                t.clone().reshape(vec![l, 2, 2, r]).expect("fused physical leg")
            })
            .collect()
    }

    /// Multiply a 4×4 gate into sites `(bond, bond + 1)` and re-split at
    /// `kappa_max`. No renormalization. Returns the discarded weight.
    pub fn apply_gate(&mut self, bond: usize, gate: &ComplexTensor, side: Side) -> Result<f64> {
        self.apply_gate_directed(bond, gate, side, true)
    }

    pub(crate) fn apply_gate_directed(&mut self, bond: usize, gate: &ComplexTensor, side: Side, center_right: bool) -> Result<f64> {
        if bond + 1 >= self.num_sites() {
            return Err(Error::OutOfRange { index: bond, len: self.num_sites().saturating_sub(1) });
        }
        if gate.shape() != [4, 4] {
            return Err(Error::dim(format!("two-site gate must be 4x4, got {:?}", gate.shape())));
        }
        self.chain.center_near(bond)?;
        let l = self.chain.left_dim(bond);
        let r = self.chain.right_dim(bond + 1);
        // axes [a, o1, i1, o2, i2, b]
        let theta = self.chain.theta(bond).reshape(vec![l, 2, 2, 2, 2, r])?;
        let updated = match side {
            Side::Left => {
                let t = theta.permute(&[0, 1, 3, 2, 4, 5])?.reshape(vec![l, 4, 4 * r])?;
                apply_middle(&t, l, 4, 4 * r, gate).reshape(vec![l, 2, 2, 2, 2, r])?.permute(&[0, 1, 3, 2, 4, 5])?
            }
            Side::Right => {
                let t = theta.permute(&[0, 2, 4, 1, 3, 5])?.reshape(vec![l, 4, 4 * r])?;
                apply_middle(&t, l, 4, 4 * r, &gate.transpose())
                    .reshape(vec![l, 2, 2, 2, 2, r])?
                    .permute(&[0, 3, 1, 4, 2, 5])?
            }
        };
        self.chain.split(bond, &updated.reshape(vec![4 * l, 4 * r])?, center_right, false)
    }

    /// Dense `2^L × 2^L` matrix, rows indexed by outputs.
    pub fn to_dense(&self) -> Result<ComplexTensor> {
        let l = self.num_sites();
        check_dense(l, 10)?;
        let amps = self.chain.to_dense();
        let t = ComplexTensor::new(vec![2; 2 * l], amps)?;
        let perm: Vec<usize> = (0..l).map(|s| 2 * s).chain((0..l).map(|s| 2 * s + 1)).collect();
        t.permute(&perm)?.reshape(vec![1 << l, 1 << l])
    }

    /// Raw little-endian dump: `u64` dimension then `(re, im)` `f64` pairs row-major.
    pub fn write_dense(&self, mut out: impl Write) -> Result<()> {
        let m = self.to_dense()?;
        out.write_all(&(m.rows() as u64).to_le_bytes())?;
        for z in m.data() {
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn identity_mpo(num_sites: usize) -> Result<MatrixProductOperator> {
    MatrixProductOperator::identity(num_sites, usize::MAX)
}

/// `Tr(U† V) / 2^L`.
pub fn frobenius_fidelity(u: &MatrixProductOperator, v: &MatrixProductOperator) -> Result<C64> {
    let tr = v.chain.overlap(&u.chain)?;
    Ok(tr * 0.5f64.powi(u.num_sites() as i32))
}

/// One Trotter step multiplied onto the output legs of an MPO.
pub(crate) fn trotter_step_mpo(u: &mut MatrixProductOperator, gates: &[(usize, ComplexTensor)]) -> Result<f64> {
    let mut weight = 0.0;
    for (bond, g) in gates.iter().filter(|(b, _)| b % 2 == 0) {
        weight += u.apply_gate_directed(*bond, g, Side::Left, true)?;
    }
    for (bond, g) in gates.iter().filter(|(b, _)| b % 2 == 1).rev() {
        weight += u.apply_gate_directed(*bond, g, Side::Left, false)?;
    }
    Ok(weight)
}

/// MPO of the first-order Trotter propagator at time `t`, bond dimension capped at `kappa_max`.
pub fn trotter_propagator_mpo(p: &TfimParams, t: f64, kappa_max: usize) -> Result<MatrixProductOperator> {
    let steps = p.steps_for(t)?;
    let gates = trotter_step_gates(p)?.gates;
    let mut u = MatrixProductOperator::identity(p.num_sites, kappa_max)?;
    for _ in 0..steps {
        trotter_step_mpo(&mut u, &gates)?;
    }
    Ok(u)
}

/// Trotter propagator MPOs at each of the ascending `times`.
pub fn trotter_propagator_snapshots(p: &TfimParams, times: &[f64], kappa_max: usize) -> Result<Vec<MatrixProductOperator>> {
    let gates = trotter_step_gates(p)?.gates;
    let mut u = MatrixProductOperator::identity(p.num_sites, kappa_max)?;
    let mut done = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = p.steps_for(t)?;
        if steps < done {
            return Err(Error::invalid("snapshot times must be ascending"));
        }
        for _ in done..steps {
            trotter_step_mpo(&mut u, &gates)?;
        }
        done = steps;
        out.push(u.clone());
    }
    Ok(out)
}

/// Largest staircase depth an MPO target of an `L`-site chain can usefully
/// feed, `floor(log_4(2^(floor(L/2) - 1)))`, never below one.
pub fn max_useful_layers(num_sites: usize) -> usize {
    let half = num_sites / 2;
    let layers = half.saturating_sub(1) / 2;
    if layers == 0 {
        log::warn!("max_useful_layers({num_sites}) evaluates to 0; using 1");
        1
    } else {
        layers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{embed_one_site, embed_two_site};
    use crate::tensor::{herm_exp, pauli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary(rng: &mut impl Rng) -> ComplexTensor {
        let data = (0..16).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let a = ComplexTensor::matrix(4, 4, data).unwrap();
        herm_exp(&a.add_scaled(&a.dagger(), C64::new(1.0, 0.0)).unwrap(), C64::new(0.0, -1.0)).unwrap()
    }

    #[test]
    fn identity_basics() {
        let id = identity_mpo(3).unwrap();
        assert!(id.to_dense().unwrap().max_abs_diff(&ComplexTensor::identity(8)) < 1e-15);
        assert!((frobenius_fidelity(&id, &id).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(id.bond_dims().iter().all(|&k| k == 1));
    }

    #[test]
    fn traceless_operator_has_zero_fidelity() {
        let z = embed_one_site(3, 1, &pauli::z()).unwrap();
        let zm = MatrixProductOperator::from_dense(3, &z).unwrap();
        assert!(zm.to_dense().unwrap().max_abs_diff(&z) < 1e-13);
        assert!(frobenius_fidelity(&identity_mpo(3).unwrap(), &zm).unwrap().norm() < 1e-15);
    }

    #[test]
    fn gate_sides_match_dense_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g1 = random_unitary(&mut rng);
        let g2 = random_unitary(&mut rng);
        let mut u = identity_mpo(4).unwrap();
        let w = u.apply_gate(1, &g1, Side::Left).unwrap();
        assert_eq!(w, 0.0);
        let e1 = embed_two_site(4, 1, &g1).unwrap();
        assert!(u.to_dense().unwrap().max_abs_diff(&e1) < 1e-12);
        assert!(u.bond_dims().iter().all(|&k| k <= 4));
        u.apply_gate(2, &g2, Side::Right).unwrap();
        let expect = e1.matmul(&embed_two_site(4, 2, &g2).unwrap()).unwrap();
        assert!(u.to_dense().unwrap().max_abs_diff(&expect) < 1e-12);
        let before = u.to_dense().unwrap();
        u.apply_gate(0, &ComplexTensor::identity(4), Side::Left).unwrap();
        assert!(u.to_dense().unwrap().max_abs_diff(&before) < 1e-12);
    }

    #[test]
    fn trotter_step_matches_dense() {
        let p = TfimParams::critical(4, 0.1);
        let u = trotter_propagator_mpo(&p, 0.1, 16).unwrap();
        let mut dense = ComplexTensor::identity(16);
        for (bond, g) in &trotter_step_gates(&p).unwrap().gates {
            dense = embed_two_site(4, *bond, g).unwrap().matmul(&dense).unwrap();
        }
        assert!(u.to_dense().unwrap().max_abs_diff(&dense) < 1e-12);
        let zero = trotter_propagator_mpo(&p, 0.0, 16).unwrap();
        assert!(zero.to_dense().unwrap().max_abs_diff(&ComplexTensor::identity(16)) < 1e-15);
    }

    #[test]
    fn conjugate_symmetry() {
        let p = TfimParams::critical(5, 0.05);
        let a = trotter_propagator_mpo(&p, 0.2, 16).unwrap();
        let b = trotter_propagator_mpo(&p, 0.5, 16).unwrap();
        let ab = frobenius_fidelity(&a, &b).unwrap();
        let ba = frobenius_fidelity(&b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-13);
        assert!(ab.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn layer_bound() {
        assert_eq!(max_useful_layers(12), 2);
        assert_eq!(max_useful_layers(10), 2);
        assert_eq!(max_useful_layers(4), 1);
        assert_eq!(max_useful_layers(8), 1);
    }

    #[test]
    fn dense_dump_layout() {
        let mut buf = Vec::new();
        identity_mpo(2).unwrap().write_dense(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * 16);
        assert_eq!(u64::from_le_bytes(buf[..8].try_into().unwrap()), 4);
    }
}
