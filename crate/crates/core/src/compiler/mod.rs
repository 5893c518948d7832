//! Variational compilation of staircase circuits by sequential polar sweeps.

mod polar;
pub(crate) mod sandwich;

pub use polar::polar_update;

use serde::Serialize;

use crate::circuit::{Init, StaircaseCircuit};
use crate::error::{Error, Result};
use crate::model::{neel_product_state, TfimParams};
use crate::mpo::{max_useful_layers, trotter_propagator_snapshots, MatrixProductOperator};
use crate::mps::{tebd_snapshots, MatrixProductState};
use crate::tensor::{ComplexTensor, C64};
use sandwich::{trace_product, Sandwich};

/// Largest decrease of `Re F` tolerated across a single gate update.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the fidelity by less than this.
    pub convergence_delta: f64,
    /// Starting circuit; identity gates when absent.
    pub warm_start: Option<StaircaseCircuit>,
}

impl SweepConfig {
    pub fn qmps() -> Self {
        Self { max_sweeps: 2000, convergence_delta: 1e-8, warm_start: None }
    }

    pub fn qmpo() -> Self {
        Self { max_sweeps: 1000, convergence_delta: 1e-8, warm_start: None }
    }

    /// Short schedule for quick runs.
    pub fn fast() -> Self {
        Self { max_sweeps: 100, convergence_delta: 1e-8, warm_start: None }
    }

    pub fn with_warm_start(mut self, circuit: StaircaseCircuit) -> Self {
        self.warm_start = Some(circuit);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        if !(self.convergence_delta > 0.0) || !self.convergence_delta.is_finite() {
            return Err(Error::invalid(format!("convergence_delta must be positive, got {}", self.convergence_delta)));
        }
        Ok(())
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::qmps()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompileReport {
    pub initial_fidelity: f64,
    pub final_fidelity: f64,
    /// Fidelity after each completed sweep.
    pub fidelity_per_sweep: Vec<f64>,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Smallest `Re F_after - Re F_before` over all gate updates.
    pub min_update_gain: f64,
    /// Final overlap (`<target|C|psi0>` or `Tr(C† T) / 2^L`).
    pub overlap: [f64; 2],
}

impl CompileReport {
    pub fn is_monotone(&self) -> bool {
        self.min_update_gain >= -MONOTONE_SLACK && self.fidelity_per_sweep.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK)
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub circuit: StaircaseCircuit,
    pub report: CompileReport,
}

/// Environment `E` of gate `k` for `<target| C |psi0>`, so that the overlap is `Tr(E U_k)`.
/// Rows index the gate input pair, columns the output pair.
pub fn qmps_environment(
    target: &MatrixProductState,
    circuit: &StaircaseCircuit,
    psi0: &MatrixProductState,
    k: usize,
) -> Result<ComplexTensor> {
    Sandwich::qmps(target, psi0, circuit.num_layers())?.environment_of(circuit, k)
}

/// Environment of gate `k` for `Tr(T† C) / 2^L`.
pub fn qmpo_environment(target: &MatrixProductOperator, circuit: &StaircaseCircuit, k: usize) -> Result<ComplexTensor> {
    Sandwich::qmpo(target, circuit.num_layers())?.environment_of(circuit, k)
}

/// One pass over all gates, layer by layer and left to right within a layer.
/// Returns the overlap after the pass and the smallest per-update gain.
fn sweep(net: &Sandwich, circuit: &mut StaircaseCircuit) -> Result<(C64, f64)> {
    let cols = net.num_sites() - 1;
    let mut min_gain = f64::INFINITY;
    let mut current = C64::new(0.0, 0.0);
    for m in 0..circuit.num_layers() {
        let rs = net.right_boundaries(circuit);
        let mut l = net.left_init();
        for c in 0..cols {
            let env = net.environment(&l, &rs[c], circuit, c, m);
            let idx = net.gate_index(c, m);
            let before = trace_product(&env, &circuit.gates()[idx].unitary);
            let u = polar_update(&env)?;
            let after = trace_product(&env, &u);
            min_gain = min_gain.min(after.re - before.re);
            current = after;
            circuit.set_unitary(idx, u)?;
            if c + 1 < cols {
                let absorbed = net.absorb_left(&l, circuit, c, None);
                l = net.transfer_left(&absorbed, c);
            }
        }
    }
    Ok((current, min_gain))
}

fn run(net: &Sandwich, circuit: &mut StaircaseCircuit, cfg: &SweepConfig, metric: impl Fn(C64) -> f64) -> Result<CompileReport> {
    net.check_circuit(circuit)?;
    let start = net.overlap(circuit)?;
    let initial = metric(start);
    let mut report = CompileReport {
        initial_fidelity: initial,
        final_fidelity: initial,
        fidelity_per_sweep: Vec::new(),
        sweeps_used: 0,
        converged: false,
        min_update_gain: f64::INFINITY,
        overlap: [start.re, start.im],
    };
    let mut last = initial;
    for _ in 0..cfg.max_sweeps {
        let (f, gain) = sweep(net, circuit)?;
        if !f.is_finite() {
            return Err(Error::Numeric("overlap became non-finite during a sweep".into()));
        }
        let fid = metric(f);
        report.min_update_gain = report.min_update_gain.min(gain);
        report.fidelity_per_sweep.push(fid);
        report.sweeps_used += 1;
        report.final_fidelity = fid;
        report.overlap = [f.re, f.im];
        if fid - last < cfg.convergence_delta {
            report.converged = true;
            break;
        }
        last = fid;
    }
    if report.min_update_gain < -MONOTONE_SLACK {
        log::warn!("non-monotone sweep: an update lowered Re F by {:.3e}", -report.min_update_gain);
    }
    Ok(report)
}

fn starting_circuit(num_sites: usize, num_layers: usize, cfg: &SweepConfig) -> Result<StaircaseCircuit> {
    match &cfg.warm_start {
        Some(c) => {
            if c.num_sites() != num_sites || c.num_layers() != num_layers {
                return Err(Error::dim(format!(
                    "warm start has {} sites and {} layers, expected {} and {}",
                    c.num_sites(),
                    c.num_layers(),
                    num_sites,
                    num_layers
                )));
            }
            Ok(c.clone())
        }
        None => StaircaseCircuit::new_staircase(num_sites, num_layers, Init::Identity),
    }
}

/// Compile a `num_layers` staircase `C` maximising `|<target| C |psi0>|²`.
pub fn qmps_compile(
    target: &MatrixProductState,
    psi0: &MatrixProductState,
    num_layers: usize,
    cfg: &SweepConfig,
) -> Result<(StaircaseCircuit, CompileReport)> {
    cfg.validate()?;
    let mut net = Sandwich::qmps(target, psi0, num_layers)?;
    let mut circuit = starting_circuit(target.num_sites(), num_layers, cfg)?;
    let f0 = net.overlap(&circuit)?;
    if f0.norm() > 1e-14 {
        // fix the target phase so the starting overlap is real and positive
        net.scale_first(f0.conj() / f0.norm());
    }
    let report = run(&net, &mut circuit, cfg, |f| f.norm_sqr())?;
    Ok((circuit, report))
}

/// QMPS compilation against the given targets in order, each warm-started from the previous solution.
pub fn qmps_trajectory_targets(
    targets: &[(f64, MatrixProductState)],
    psi0: &MatrixProductState,
    num_layers: usize,
    cfg: &SweepConfig,
) -> Result<Vec<TrajectoryPoint>> {
    let mut out: Vec<TrajectoryPoint> = Vec::with_capacity(targets.len());
    for (t, target) in targets {
        let mut step = cfg.clone();
        if let Some(prev) = out.last() {
            step.warm_start = Some(prev.circuit.clone());
        }
        let (circuit, report) = qmps_compile(target, psi0, num_layers, &step)?;
        log::debug!("qmps t={t:.3} fidelity={:.6e} sweeps={}", report.final_fidelity, report.sweeps_used);
        out.push(TrajectoryPoint { t: *t, circuit, report });
    }
    Ok(out)
}

/// QMPS circuits along a Néel quench: targets are TEBD states with bond dimension `2^num_layers`.
pub fn qmps_trajectory(p: &TfimParams, num_layers: usize, times: &[f64], cfg: &SweepConfig) -> Result<Vec<TrajectoryPoint>> {
    p.validate()?;
    let chi = 1usize << num_layers.min(20);
    let neel = neel_product_state(p.num_sites);
    let psi0 = MatrixProductState::from_product(&neel, chi)?;
    let states = tebd_snapshots(&psi0, p, times)?;
    let targets: Vec<(f64, MatrixProductState)> = times.iter().copied().zip(states).collect();
    let start = MatrixProductState::from_product(&neel, 1)?;
    qmps_trajectory_targets(&targets, &start, num_layers, cfg)
}

/// Compile a staircase maximising `Re Tr(T† C) / 2^L`. The reported fidelity is `|Tr(C† T)| / 2^L`.
pub fn qmpo_compile_target(
    target: &MatrixProductOperator,
    num_layers: usize,
    cfg: &SweepConfig,
) -> Result<(StaircaseCircuit, CompileReport)> {
    cfg.validate()?;
    if num_layers > max_useful_layers(target.num_sites()) {
        log::warn!(
            "{num_layers} layers exceed the useful depth {} for L={}",
            max_useful_layers(target.num_sites()),
            target.num_sites()
        );
    }
    let net = Sandwich::qmpo(target, num_layers)?;
    let mut circuit = starting_circuit(target.num_sites(), num_layers, cfg)?;
    let mut report = run(&net, &mut circuit, cfg, |f| f.norm())?;
    report.overlap[1] = -report.overlap[1];
    Ok((circuit, report))
}

/// QMPO compilation of the Trotter propagator at time `t` (step `p.dt`), target bond dimension `4^num_layers`.
pub fn qmpo_compile(p: &TfimParams, t: f64, num_layers: usize, cfg: &SweepConfig) -> Result<(StaircaseCircuit, CompileReport)> {
    let target = trotter_propagator_snapshots(p, &[t], qmpo_kappa(num_layers))?.pop().expect("one snapshot");
    qmpo_compile_target(&target, num_layers, cfg)
}

/// QMPO circuits on an ascending time grid, each warm-started from the previous one.
pub fn qmpo_trajectory(p: &TfimParams, num_layers: usize, times: &[f64], cfg: &SweepConfig) -> Result<Vec<TrajectoryPoint>> {
    p.validate()?;
    let targets = trotter_propagator_snapshots(p, times, qmpo_kappa(num_layers))?;
    let mut out: Vec<TrajectoryPoint> = Vec::with_capacity(times.len());
    for (&t, target) in times.iter().zip(&targets) {
        let mut step = cfg.clone();
        if let Some(prev) = out.last() {
            step.warm_start = Some(prev.circuit.clone());
        }
        let (circuit, report) = qmpo_compile_target(target, num_layers, &step)?;
        log::debug!("qmpo t={t:.3} fidelity={:.6e} sweeps={}", report.final_fidelity, report.sweeps_used);
        out.push(TrajectoryPoint { t, circuit, report });
    }
    Ok(out)
}

/// Target MPO bond dimension for a QMPO of `num_layers` layers.
pub fn qmpo_kappa(num_layers: usize) -> usize {
    1usize << (2 * num_layers.min(15))
}
