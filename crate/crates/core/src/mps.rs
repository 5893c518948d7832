//! Matrix product states and TEBD time evolution.

use std::io::Write;

use crate::chain::{apply_middle, Chain};
use crate::error::{check_index, Error, Result};
use crate::model::{trotter_step_gates, Spin, TfimParams};
use crate::statevector::{check_dense, entropy_bits, Statevector, DENSE_LIMIT};
use crate::tensor::{ComplexTensor, C64};

#[derive(Clone, Debug)]
pub struct MatrixProductState {
    chain: Chain,
}

impl MatrixProductState {
    pub fn from_product(labels: &[Spin], chi_max: usize) -> Result<Self> {
        let local: Vec<Vec<C64>> = labels
            .iter()
            .map(|s| match s {
                Spin::Up => vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                Spin::Down => vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            })
            .collect();
        let mut chain = Chain::product(&local, chi_max)?;
        chain.center = Some(0);
        Ok(Self { chain })
    }

    /// Normalized MPS of a dense state, truncated at `chi_max`.
    pub fn from_statevector(psi: &Statevector, chi_max: usize) -> Result<Self> {
        let mut chain = Chain::from_dense(psi.amplitudes(), 2, psi.num_sites(), chi_max)?;
        let c = chain.len() - 1;
        let n = chain.tensors[c].frobenius_norm();
        if n > 0.0 {
            chain.tensors[c].scale_mut(C64::new(1.0 / n, 0.0));
        }
        Ok(Self { chain })
    }

    pub fn num_sites(&self) -> usize {
        self.chain.len()
    }

    pub fn chi_max(&self) -> usize {
        self.chain.max_bond
    }

    pub fn set_chi_max(&mut self, chi_max: usize) {
        self.chain.max_bond = chi_max.max(1);
    }

    pub fn center(&self) -> Option<usize> {
        self.chain.center
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    /// Site tensors shaped `(χ_left, 2, χ_right)`.
    pub fn site_tensors(&self) -> &[ComplexTensor] {
        &self.chain.tensors
    }

    pub fn canonicalize(&mut self, site: usize) -> Result<()> {
        check_index(site, self.num_sites())?;
        self.chain.canonicalize(site)
    }

    pub fn move_center(&mut self, site: usize) -> Result<()> {
        check_index(site, self.num_sites())?;
        self.chain.move_center(site)
    }

    pub fn is_left_isometry(&self, site: usize, tol: f64) -> bool {
        self.chain.is_left_isometry(site, tol)
    }

    pub fn is_right_isometry(&self, site: usize, tol: f64) -> bool {
        self.chain.is_right_isometry(site, tol)
    }

    pub fn norm(&self) -> f64 {
        self.chain.norm_sqr().sqrt()
    }

    /// Multiply the state by a scalar (used to change the global phase).
    pub fn scale(&mut self, factor: C64) {
        let site = self.chain.center.unwrap_or(0);
        self.chain.tensors[site].scale_mut(factor);
    }

    /// Apply a 4×4 gate to sites `(bond, bond + 1)`, truncate to `chi_max`
    /// and renormalize. Returns the discarded weight.
    pub fn apply_two_site_gate(&mut self, bond: usize, gate: &ComplexTensor) -> Result<f64> {
        self.apply_gate_directed(bond, gate, true)
    }

    /// Same as [`apply_two_site_gate`](Self::apply_two_site_gate), choosing on
    /// which side of the bond the center ends up.
    pub(crate) fn apply_gate_directed(&mut self, bond: usize, gate: &ComplexTensor, center_right: bool) -> Result<f64> {
        if bond + 1 >= self.num_sites() {
            return Err(Error::OutOfRange { index: bond, len: self.num_sites().saturating_sub(1) });
        }
        if gate.shape() != [4, 4] {
            return Err(Error::dim(format!("two-site gate must be 4x4, got {:?}", gate.shape())));
        }
        self.chain.center_near(bond)?;
        let l = self.chain.left_dim(bond);
        let r = self.chain.right_dim(bond + 1);
        let theta = self.chain.theta(bond);
        let updated = apply_middle(&theta.reshape(vec![l, 4, r])?, l, 4, r, gate).reshape(vec![2 * l, 2 * r])?;
        self.chain.split(bond, &updated, center_right, true)
    }

    /// Schmidt coefficients across the bond after the first `cut` sites.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        self.chain.schmidt_values(cut)
    }

    /// Von Neumann entropy in bits across the bond after the first `cut` sites.
    pub fn entropy_vn(&self, cut: usize) -> Result<f64> {
        Ok(entropy_bits(&self.schmidt_values(cut)?))
    }

    /// `<other|self>`.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        self.chain.overlap(&other.chain)
    }

    pub fn to_statevector(&self) -> Result<Statevector> {
        check_dense(self.num_sites(), DENSE_LIMIT)?;
        Statevector::new(self.num_sites(), self.chain.to_dense())
    }
}

/// `<phi|psi>`.
pub fn overlap(psi: &MatrixProductState, phi: &MatrixProductState) -> Result<C64> {
    psi.overlap(phi)
}

/// Half-chain entropy (or another cut) sampled along a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntropyTrace {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub cut: usize,
}

impl EntropyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t,S_vN,cut`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "t,S_vN,cut")?;
        for (t, s) in self.times.iter().zip(&self.entropy) {
            writeln!(out, "{t:.6},{s:.12e},{}", self.cut)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TebdOptions {
    /// Keep every n-th step in the trajectory (the final state is always kept).
    pub keep_every: usize,
    /// Entropy cut; `None` means the half chain.
    pub cut: Option<usize>,
}

impl Default for TebdOptions {
    fn default() -> Self {
        Self { keep_every: 10, cut: None }
    }
}

#[derive(Clone, Debug)]
pub struct TebdResult {
    pub trajectory: Vec<(f64, MatrixProductState)>,
    pub trace: EntropyTrace,
    /// Sum of the discarded weights of all gate applications.
    pub truncation_weight: f64,
}

impl TebdResult {
    pub fn final_state(&self) -> &MatrixProductState {
        &self.trajectory.last().expect("trajectory holds the initial state").1
    }

    /// Stored state closest to time `t`.
    pub fn state_at(&self, t: f64) -> Option<&MatrixProductState> {
        self.trajectory
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .filter(|(s, _)| (s - t).abs() < 1e-9)
            .map(|(_, m)| m)
    }
}

/// Apply one Trotter step to an MPS.
///
/// Gates inside a parity class commute, so the second class is swept right
/// to left; that keeps the orthogonality center next to the active bond.
pub(crate) fn trotter_step_mps(psi: &mut MatrixProductState, gates: &[(usize, ComplexTensor)]) -> Result<f64> {
    let mut weight = 0.0;
    let first: Vec<_> = gates.iter().filter(|(b, _)| b % 2 == 0).collect();
    let second: Vec<_> = gates.iter().filter(|(b, _)| b % 2 == 1).collect();
    for (bond, g) in &first {
        weight += psi.apply_gate_directed(*bond, g, true)?;
    }
    for (bond, g) in second.iter().rev() {
        weight += psi.apply_gate_directed(*bond, g, false)?;
    }
    Ok(weight)
}

/// First-order TEBD of `psi0` under the TFIM up to `t_final`, truncating
/// to the state's `chi_max`.
pub fn tebd_evolve(psi0: &MatrixProductState, p: &TfimParams, t_final: f64) -> Result<TebdResult> {
    tebd_evolve_with(psi0, p, t_final, &TebdOptions::default())
}

pub fn tebd_evolve_with(psi0: &MatrixProductState, p: &TfimParams, t_final: f64, opts: &TebdOptions) -> Result<TebdResult> {
    if psi0.num_sites() != p.num_sites {
        return Err(Error::dim(format!("state has {} sites, model has {}", psi0.num_sites(), p.num_sites)));
    }
    let steps = p.steps_for(t_final)?;
    let cut = opts.cut.unwrap_or(p.num_sites / 2);
    if cut == 0 || cut >= p.num_sites {
        return Err(Error::OutOfRange { index: cut, len: p.num_sites });
    }
    let keep = opts.keep_every.max(1);
    let gates = trotter_step_gates(p)?.gates;

    let mut psi = psi0.clone();
    let mut trace = EntropyTrace { times: vec![0.0], entropy: vec![psi.entropy_vn(cut)?], cut };
    let mut trajectory = vec![(0.0, psi.clone())];
    let mut weight = 0.0;
    for n in 1..=steps {
        weight += trotter_step_mps(&mut psi, &gates)?;
        let t = n as f64 * p.dt;
        trace.times.push(t);
        trace.entropy.push(psi.entropy_vn(cut)?);
        if n % keep == 0 || n == steps {
            trajectory.push((t, psi.clone()));
        }
    }
    Ok(TebdResult { trajectory, trace, truncation_weight: weight })
}

/// TEBD states at each of the ascending `times`.
pub fn tebd_snapshots(psi0: &MatrixProductState, p: &TfimParams, times: &[f64]) -> Result<Vec<MatrixProductState>> {
    if psi0.num_sites() != p.num_sites {
        return Err(Error::dim(format!("state has {} sites, model has {}", psi0.num_sites(), p.num_sites)));
    }
    let gates = trotter_step_gates(p)?.gates;
    let mut psi = psi0.clone();
    let mut done = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let steps = p.steps_for(t)?;
        if steps < done {
            return Err(Error::invalid("snapshot times must be ascending"));
        }
        for _ in done..steps {
            trotter_step_mps(&mut psi, &gates)?;
        }
        done = steps;
        out.push(psi.clone());
    }
    Ok(out)
}

/// First time the entropy comes within `0.05` bits of `log₂ chi`; the last
/// time of the trace if it never does.
pub fn t_max_detect(trace: &EntropyTrace, chi: usize) -> Result<f64> {
    t_max_detect_with(trace, chi, 0.05)
}

pub fn t_max_detect_with(trace: &EntropyTrace, chi: usize, margin: f64) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::invalid("entropy trace is empty"));
    }
    if trace.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("entropy trace times are not monotone"));
    }
    let target = (chi as f64).log2() - margin;
    Ok(trace
        .times
        .iter()
        .zip(&trace.entropy)
        .find(|(_, &s)| s >= target)
        .map_or(*trace.times.last().expect("non-empty"), |(&t, _)| t))
}
