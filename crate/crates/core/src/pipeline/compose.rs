//! QMPSO composition and the shared noisy-comparison run.

use crate::circuit::{Init, StaircaseCircuit};
use crate::compiler::{qmpo_trajectory, qmps_trajectory_targets, SweepConfig, TrajectoryPoint};
use crate::error::{Error, Result};
use crate::model::neel_product_state;
use crate::mps::{t_max_detect_with, tebd_evolve_with, EntropyTrace, MatrixProductState, TebdOptions};
use crate::noise::infidelity_per_site;
use crate::reference::fine_trotter_snapshots;
use crate::statevector::Statevector;

use super::config::{grid, round_time, QmpsoSchedule, RunConfig};

/// `U_QMPO(Δt) U_QMPO(t_max_mpo)^M U_QMPS(t_max_mps)`.
pub fn compose_qmpso(
    schedule: &QmpsoSchedule,
    qmps: &StaircaseCircuit,
    qmpo: &StaircaseCircuit,
    qmpo_remainder: Option<&StaircaseCircuit>,
) -> Result<StaircaseCircuit> {
    let d = schedule.decompose()?;
    let mut parts: Vec<&StaircaseCircuit> = vec![qmps];
    parts.extend(std::iter::repeat_n(qmpo, d.m));
    if d.remainder_steps > 0 {
        let rest = qmpo_remainder.ok_or_else(|| {
            Error::invalid(format!("a QMPO circuit for the remainder Δt = {} is required", schedule.delta_t().unwrap_or(0.0)))
        })?;
        parts.push(rest);
    }
    let out = StaircaseCircuit::concat(&parts)?;
    debug_assert_eq!(out.gate_count(), schedule.gate_count(out.num_sites())?);
    Ok(out)
}

pub(crate) fn sweep_config(cfg: &RunConfig, max_sweeps: usize, num_sites: usize, layers: usize, salt: u64) -> Result<SweepConfig> {
    let mut s = SweepConfig { max_sweeps, convergence_delta: cfg.convergence_delta, warm_start: None };
    if cfg.random_init {
        s.warm_start = Some(StaircaseCircuit::new_staircase(num_sites, layers, Init::RandomUnitary(cfg.seed ^ salt))?);
    }
    Ok(s)
}

/// TEBD from the Néel state at bond dimension `chi`, with states kept on the output grid.
pub(crate) fn mps_run(cfg: &RunConfig, chi: usize, t_final: f64) -> Result<(Vec<(f64, MatrixProductState)>, EntropyTrace)> {
    let p = cfg.model;
    let psi0 = MatrixProductState::from_product(&neel_product_state(p.num_sites), chi)?;
    let keep = p.steps_for(cfg.t_step)?;
    let res = tebd_evolve_with(&psi0, &p, t_final, &TebdOptions { keep_every: keep, cut: None })?;
    let states = grid(t_final, cfg.t_step)
        .into_iter()
        .map(|t| res.state_at(t).cloned().map(|s| (t, s)).ok_or_else(|| Error::invalid(format!("no TEBD state at t = {t}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((states, res.trace))
}

/// Largest `t` before the first QMPO whose operator infidelity per site exceeds `threshold`.
pub fn detect_t_max_mpo(points: &[TrajectoryPoint], num_sites: usize, threshold: f64) -> Result<f64> {
    let mut best = None;
    for p in points {
        if infidelity_per_site(p.report.final_fidelity.min(1.0), num_sites)? > threshold {
            break;
        }
        best = Some(p.t);
    }
    match best {
        Some(t) => Ok(t),
        None => {
            let first = points.first().ok_or_else(|| Error::invalid("empty QMPO scan"))?;
            log::warn!("no QMPO meets the threshold {threshold}; using t = {}", first.t);
            Ok(first.t)
        }
    }
}

/// Every state of the MPS / Trotter / QMPSO comparison on the output grid.
#[derive(Clone, Debug)]
pub struct QmpsoRun {
    pub times: Vec<f64>,
    pub t_max_mps: f64,
    pub t_max_mpo: f64,
    /// Fine-step Trotter reference.
    pub reference: Vec<Statevector>,
    pub mps: Vec<Statevector>,
    pub mps_trace: EntropyTrace,
    pub trotter: Vec<Statevector>,
    pub trotter_gates: Vec<usize>,
    pub qmpso: Vec<Statevector>,
    pub qmpso_gates: Vec<usize>,
    pub qmps_points: Vec<TrajectoryPoint>,
    pub qmpo_points: Vec<TrajectoryPoint>,
}

impl QmpsoRun {
    pub fn build(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.model;
        let l = p.num_sites;
        let times = cfg.time_grid();
        let chi = cfg.chi_mps();

        let (dense, mps_part) = rayon::join(
            || {
                rayon::join(
                    || fine_trotter_snapshots(&p, &times),
                    || fine_trotter_snapshots(&p.with_dt(cfg.trotter_dt), &times),
                )
            },
            || mps_run(cfg, chi, cfg.t_final),
        );
        let (reference, trotter) = (dense.0?, dense.1?);
        let (mps_states, mps_trace) = mps_part?;

        let t_max_mps = match cfg.t_max_mps {
            Some(t) => t,
            None => {
                let t = t_max_detect_with(&mps_trace, chi, cfg.saturation_margin)?;
                round_time((t / cfg.t_step).floor() * cfg.t_step).max(cfg.t_step)
            }
        };
        if t_max_mps > cfg.t_final {
            return Err(Error::invalid(format!("t_max_mps = {t_max_mps} lies beyond t_final = {}", cfg.t_final)));
        }

        let targets: Vec<(f64, MatrixProductState)> =
            mps_states.iter().filter(|(t, _)| *t <= t_max_mps + 1e-9).cloned().collect();
        let start = MatrixProductState::from_product(&neel_product_state(l), 1)?;
        let qmps_cfg = sweep_config(cfg, cfg.max_sweeps_qmps, l, cfg.n_l_mps, 1)?;
        let qmpo_cfg = sweep_config(cfg, cfg.max_sweeps_qmpo, l, cfg.n_l_mpo, 2)?;
        let mpo_end = cfg.t_max_mpo.unwrap_or(cfg.mpo_scan_max);
        let mpo_times: Vec<f64> = grid(mpo_end, cfg.t_step).into_iter().skip(1).collect();
        let (qmps_points, qmpo_points) = rayon::join(
            || qmps_trajectory_targets(&targets, &start, cfg.n_l_mps, &qmps_cfg),
            || qmpo_trajectory(&p, cfg.n_l_mpo, &mpo_times, &qmpo_cfg),
        );
        let (qmps_points, qmpo_points) = (qmps_points?, qmpo_points?);
        let t_max_mpo = match cfg.t_max_mpo {
            Some(t) => t,
            None => detect_t_max_mpo(&qmpo_points, l, cfg.mpo_threshold)?,
        };
        let qmpo_at = |t: f64| qmpo_points.iter().find(|q| (q.t - t).abs() < 1e-9).map(|q| &q.circuit);
        let qmpo_max = qmpo_at(t_max_mpo).ok_or_else(|| Error::invalid("missing QMPO at t_max_mpo"))?;

        let neel = Statevector::from_product(&neel_product_state(l))?;
        let mut qmpso = Vec::with_capacity(times.len());
        let mut qmpso_gates = Vec::with_capacity(times.len());
        let qmps_last = qmps_points.last().ok_or_else(|| Error::invalid("no QMPS circuits compiled"))?;
        let mut block_states = vec![qmps_last.circuit.apply_to_statevector(&neel)?];
        for &t in &times {
            if t < t_max_mps - 1e-9 {
                let q = qmps_points.iter().find(|q| (q.t - t).abs() < 1e-9).expect("QMPS on every grid point");
                qmpso.push(q.circuit.apply_to_statevector(&neel)?);
                qmpso_gates.push(q.circuit.gate_count());
                continue;
            }
            let schedule = QmpsoSchedule {
                t_max_mps,
                t_max_mpo,
                n_l_mps: cfg.n_l_mps,
                n_l_mpo: cfg.n_l_mpo,
                dt: p.dt,
                target_t: t,
            };
            let d = schedule.decompose()?;
            while block_states.len() <= d.m {
                let next = qmpo_max.apply_to_statevector(block_states.last().expect("non-empty"))?;
                block_states.push(next);
            }
            let mut state = block_states[d.m].clone();
            if d.remainder_steps > 0 {
                let dt_rest = schedule.delta_t()?;
                let rest = qmpo_at(dt_rest).ok_or_else(|| Error::invalid(format!("missing QMPO at Δt = {dt_rest}")))?;
                state = rest.apply_to_statevector(&state)?;
            }
            qmpso.push(state);
            qmpso_gates.push(schedule.gate_count(l)?);
        }

        let trotter_gates = times
            .iter()
            .map(|&t| Ok((l - 1) * p.with_dt(cfg.trotter_dt).steps_for(t)?))
            .collect::<Result<Vec<_>>>()?;
        let mps = mps_states
            .iter()
            .map(|(_, s)| {
                let mut v = s.to_statevector()?;
                v.normalize();
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            times,
            t_max_mps,
            t_max_mpo,
            reference,
            mps,
            mps_trace,
            trotter,
            trotter_gates,
            qmpso,
            qmpso_gates,
            qmps_points,
            qmpo_points,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.reference.first().map_or(0, Statevector::num_sites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Init;
    use crate::tensor::C64;

    pub(crate) fn small_config() -> RunConfig {
        RunConfig {
            model: crate::model::TfimParams::critical(6, 0.01),
            n_l_mps: 2,
            t_max_mps: Some(0.5),
            t_max_mpo: Some(0.2),
            t_final: 1.0,
            epsilons: vec![1e-3],
            max_sweeps_qmps: 200,
            max_sweeps_qmpo: 50,
            ..RunConfig::preset("fig6").unwrap()
        }
    }

    fn sched(target_t: f64) -> QmpsoSchedule {
        QmpsoSchedule { t_max_mps: 0.5, t_max_mpo: 0.2, n_l_mps: 2, n_l_mpo: 1, dt: 0.01, target_t }
    }

    #[test]
    fn composed_gate_count_matches_formula() {
        let l = 6;
        let qmps = StaircaseCircuit::new_staircase(l, 2, Init::RandomUnitary(1)).unwrap();
        let qmpo = StaircaseCircuit::new_staircase(l, 1, Init::RandomUnitary(2)).unwrap();
        let rest = StaircaseCircuit::new_staircase(l, 1, Init::RandomUnitary(3)).unwrap();
        for t in [0.5, 0.6, 0.7, 0.9, 1.3] {
            let s = sched(t);
            let c = compose_qmpso(&s, &qmps, &qmpo, Some(&rest)).unwrap();
            assert_eq!(c.gate_count(), s.gate_count(l).unwrap(), "t = {t}");
        }
        assert_eq!(compose_qmpso(&sched(0.5), &qmps, &qmpo, None).unwrap().gate_count(), 10);
    }

    #[test]
    fn missing_remainder_circuit_is_an_error() {
        let qmps = StaircaseCircuit::new_staircase(4, 1, Init::Identity).unwrap();
        let qmpo = qmps.clone();
        assert!(compose_qmpso(&sched(0.6), &qmps, &qmpo, None).is_err());
        assert!(compose_qmpso(&sched(0.4), &qmps, &qmpo, None).is_err());
    }

    #[test]
    fn composed_circuit_reproduces_run_states() {
        let cfg = small_config();
        let run = QmpsoRun::build(&cfg).unwrap();
        let qmps = &run.qmps_points.last().unwrap().circuit;
        let at = |t: f64| &run.qmpo_points.iter().find(|q| (q.t - t).abs() < 1e-9).unwrap().circuit;
        let neel = Statevector::from_product(&neel_product_state(6)).unwrap();
        for (k, &t) in run.times.iter().enumerate().filter(|(_, t)| **t >= 0.5) {
            let s = QmpsoSchedule { t_max_mps: 0.5, t_max_mpo: 0.2, n_l_mps: 2, n_l_mpo: 1, dt: 0.01, target_t: t };
            let rest = s.delta_t().unwrap();
            let c = compose_qmpso(&s, qmps, at(0.2), (rest > 0.0).then(|| at(rest))).unwrap();
            let v = c.apply_to_statevector(&neel).unwrap();
            assert!((v.fidelity(&run.qmpso[k]).unwrap() - 1.0).abs() < 1e-10, "t = {t}");
            assert_eq!(c.gate_count(), run.qmpso_gates[k]);
        }
    }

    #[test]
    fn qmpso_at_t_max_mps_matches_compile_report() {
        let cfg = small_config();
        let run = QmpsoRun::build(&cfg).unwrap();
        let k = run.times.iter().position(|&t| (t - 0.5).abs() < 1e-9).unwrap();
        let (states, _) = mps_run(&cfg, cfg.chi_mps(), 0.5).unwrap();
        let target = states.last().unwrap().1.to_statevector().unwrap();
        let amp: C64 = target.inner(&run.qmpso[k]).unwrap();
        let f = amp.norm_sqr() / target.norm().powi(2);
        let report = &run.qmps_points.last().unwrap().report;
        assert!((f - report.final_fidelity).abs() < 1e-10, "{f} vs {}", report.final_fidelity);
    }

    #[test]
    fn threshold_detection_stops_at_first_failure() {
        let cfg = small_config();
        let run = QmpsoRun::build(&RunConfig { t_max_mpo: None, mpo_scan_max: 0.6, ..cfg }).unwrap();
        let t = run.t_max_mpo;
        for q in &run.qmpo_points {
            let ips = infidelity_per_site(q.report.final_fidelity.min(1.0), 6).unwrap();
            if q.t <= t + 1e-9 {
                assert!(ips <= 1e-3);
            }
        }
    }
}
