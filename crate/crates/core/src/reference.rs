//! Ground-truth dynamics on small chains: exact diagonalization and the fine-step Trotter reference.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{neel_product_state, trotter_step_gates, TfimParams};
use crate::statevector::{check_dense, Statevector, DENSE_LIMIT};
use crate::tensor::{eigh, ComplexTensor, HermitianEigen, C64};

/// Largest chain whose Hamiltonian is diagonalized densely.
pub const EIGEN_LIMIT: usize = 12;

/// Dense TFIM Hamiltonian with a lazily computed eigendecomposition.
#[derive(Debug)]
pub struct DenseHamiltonian {
    num_sites: usize,
    matrix: ComplexTensor,
    eigen: OnceLock<HermitianEigen>,
}

impl DenseHamiltonian {
    pub fn new(p: &TfimParams) -> Result<Self> {
        p.validate()?;
        check_dense(p.num_sites, EIGEN_LIMIT)?;
        let l = p.num_sites;
        let n = 1usize << l;
        let mut m = ComplexTensor::zeros(vec![n, n]);
        for i in 0..n {
            let z: f64 = (0..l).map(|s| if (i >> (l - 1 - s)) & 1 == 0 { 1.0 } else { -1.0 }).sum();
            m.set(i, i, C64::new(-p.field * z, 0.0));
            for b in 0..l - 1 {
                let j = i ^ (0b11 << (l - 2 - b));
                m.set(i, j, m.at(i, j) - p.coupling);
            }
        }
        Ok(Self { num_sites: l, matrix: m, eigen: OnceLock::new() })
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn matrix(&self) -> &ComplexTensor {
        &self.matrix
    }

    pub fn eigen(&self) -> Result<&HermitianEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = eigh(&self.matrix)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    /// `<psi|H|psi>`.
    pub fn energy(&self, psi: &Statevector) -> Result<f64> {
        let h_psi = psi.apply_dense(&self.matrix)?;
        Ok(psi.inner(&h_psi)?.re)
    }
}

/// `exp(-iHt) |psi0>` through the eigendecomposition of `H`.
pub fn exact_propagate(psi0: &Statevector, h: &DenseHamiltonian, t: f64) -> Result<Statevector> {
    if psi0.num_sites() != h.num_sites {
        return Err(Error::dim(format!("state has {} sites, Hamiltonian {}", psi0.num_sites(), h.num_sites)));
    }
    let eig = h.eigen()?;
    let n = eig.values.len();
    let v = eig.vectors.data();
    let amps = psi0.amplitudes();
    // c = V† psi, scaled by the phases, then back
    let mut c = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let a = amps[i];
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        for (k, ck) in c.iter_mut().enumerate() {
            *ck += v[i * n + k].conj() * a;
        }
    }
    for (ck, &l) in c.iter_mut().zip(&eig.values) {
        *ck *= C64::from_polar(1.0, -l * t);
    }
    let out = (0..n).map(|i| v[i * n..(i + 1) * n].iter().zip(&c).map(|(x, y)| x * y).sum()).collect();
    Statevector::new(psi0.num_sites(), out)
}

/// Dense first-order Trotter evolution of the Néel state to time `t` with step `p.dt`.
pub fn fine_trotter_reference(p: &TfimParams, t: f64) -> Result<Statevector> {
    Ok(fine_trotter_snapshots(p, &[t])?.pop().expect("one snapshot"))
}

/// Dense Trotter reference states at each of the ascending `times`.
pub fn fine_trotter_snapshots(p: &TfimParams, times: &[f64]) -> Result<Vec<Statevector>> {
    p.validate()?;
    check_dense(p.num_sites, DENSE_LIMIT)?;
    let gates = trotter_step_gates(p)?.gates;
    let mut psi = Statevector::from_product(&neel_product_state(p.num_sites))?;
    let mut done = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = p.steps_for(t)?;
        if steps < done {
            return Err(Error::invalid("snapshot times must be ascending"));
        }
        for _ in done..steps {
            for (b, g) in &gates {
                psi.apply_two_site(*b, g)?;
            }
        }
        done = steps;
        out.push(psi.clone());
    }
    Ok(out)
}

/// `<Z_i>` for every site.
pub fn local_magnetization(psi: &Statevector) -> Vec<f64> {
    (0..psi.num_sites()).map(|i| psi.expectation_z(i).expect("site in range")).collect()
}
