//! Figure drivers. Each returns typed data; `render` turns it into tables and figures.

use rayon::prelude::*;
use serde_json::json;

use crate::circuit::StaircaseCircuit;
use crate::compiler::{qmpo_trajectory, qmps_trajectory_targets, TrajectoryPoint};
use crate::error::Result;
use crate::model::neel_product_state;
use crate::mpo::{frobenius_fidelity, trotter_propagator_snapshots};
use crate::mps::{t_max_detect_with, tebd_evolve_with, EntropyTrace, MatrixProductState, TebdOptions};
use crate::noise::{
    advantage_classify, cumulated_error, infidelity_per_site, noisy_expectation_z, noisy_fidelity, operator_entropy,
    MethodFidelities, NoiseModel, NoisyState, Region,
};
use crate::reference::{fine_trotter_snapshots, local_magnetization};
use crate::statevector::Statevector;

use super::config::{grid, RunConfig};
use super::output::{category_map, fmt_f, fmt_t, line_plot, ExperimentOutput, Series, Table};
use super::compose::{detect_t_max_mpo, mps_run, sweep_config, QmpsoRun};

fn neel_vector(l: usize) -> Result<Statevector> {
    Statevector::from_product(&neel_product_state(l))
}

fn circuit_state(c: &StaircaseCircuit, l: usize) -> Result<Statevector> {
    c.apply_to_statevector(&neel_vector(l)?)
}

// ---------------------------------------------------------------- fig2

#[derive(Clone, Debug)]
pub struct Fig2 {
    pub chis: Vec<usize>,
    pub traces: Vec<EntropyTrace>,
    pub t_max: Vec<f64>,
}

pub fn fig2(cfg: &RunConfig) -> Result<Fig2> {
    cfg.validate()?;
    let p = cfg.model;
    let runs = cfg
        .chis
        .par_iter()
        .map(|&chi| {
            let psi0 = MatrixProductState::from_product(&neel_product_state(p.num_sites), chi)?;
            let opts = TebdOptions { keep_every: cfg.snapshot_every, cut: None };
            let res = tebd_evolve_with(&psi0, &p, cfg.t_final, &opts)?;
            let t = t_max_detect_with(&res.trace, chi, cfg.saturation_margin)?;
            Ok((res.trace, t))
        })
        .collect::<Result<Vec<_>>>()?;
    let (traces, t_max) = runs.into_iter().unzip();
    Ok(Fig2 { chis: cfg.chis.clone(), traces, t_max })
}

impl Fig2 {
    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut entropy = Table::new("entropy", &["t", "cut", "chi", "S_vN"]);
        let mut tmax = Table::new("t_max", &["chi", "t_max"]);
        let mut series = Vec::new();
        for ((chi, tr), t_max) in self.chis.iter().zip(&self.traces).zip(&self.t_max) {
            for (t, s) in tr.times.iter().zip(&tr.entropy) {
                entropy.push(vec![fmt_t(*t), tr.cut.to_string(), chi.to_string(), fmt_f(*s)]);
            }
            tmax.push(vec![chi.to_string(), fmt_t(*t_max)]);
            series.push(Series { label: format!("chi={chi}"), points: tr.times.iter().copied().zip(tr.entropy.iter().copied()).collect() });
        }
        let svg = line_plot("Half-chain entropy", "t", "S_vN (bits)", &series, false);
        Ok(ExperimentOutput {
            tables: vec![entropy, tmax],
            figures: vec![("entropy".into(), svg)],
            summary: json!({ "chis": self.chis, "t_max": self.t_max }),
        })
    }
}

// ---------------------------------------------------------------- fig4

#[derive(Clone, Debug)]
pub struct Fig4Curve {
    pub layers: usize,
    pub times: Vec<f64>,
    /// `|<Φ_MPS|Ψ_QMPS>|²` against the compilation target.
    pub qmps_vs_target: Vec<f64>,
    pub qmps_vs_exact: Vec<f64>,
    pub mps_vs_exact: Vec<f64>,
    pub qmps_entropy: Vec<f64>,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug)]
pub struct Fig4 {
    pub num_sites: usize,
    pub exact_entropy: Vec<f64>,
    pub curves: Vec<Fig4Curve>,
}

pub fn fig4(cfg: &RunConfig) -> Result<Fig4> {
    cfg.validate()?;
    let l = cfg.model.num_sites;
    let times = cfg.time_grid();
    let reference = fine_trotter_snapshots(&cfg.model, &times)?;
    let exact_entropy = reference.iter().map(|v| v.entropy_vn(l / 2)).collect::<Result<Vec<_>>>()?;
    let curves = cfg
        .layer_scan
        .par_iter()
        .map(|&n| {
            let (targets, _) = mps_run(cfg, 1 << n, cfg.t_final)?;
            let start = MatrixProductState::from_product(&neel_product_state(l), 1)?;
            let sweep = sweep_config(cfg, cfg.max_sweeps_qmps, l, n, n as u64)?;
            let points = qmps_trajectory_targets(&targets, &start, n, &sweep)?;
            let mut c = Fig4Curve {
                layers: n,
                times: times.clone(),
                qmps_vs_target: Vec::new(),
                qmps_vs_exact: Vec::new(),
                mps_vs_exact: Vec::new(),
                qmps_entropy: Vec::new(),
                points: Vec::new(),
            };
            for ((pt, (_, mps)), exact) in points.iter().zip(&targets).zip(&reference) {
                let q = circuit_state(&pt.circuit, l)?;
                let mut m = mps.to_statevector()?;
                m.normalize();
                c.qmps_vs_target.push(pt.report.final_fidelity);
                c.qmps_vs_exact.push(q.fidelity(exact)?);
                c.mps_vs_exact.push(m.fidelity(exact)?);
                c.qmps_entropy.push(q.entropy_vn(l / 2)?);
            }
            c.points = points;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig4 { num_sites: l, exact_entropy, curves })
}

impl Fig4 {
    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut fid = Table::new("qmps_fidelity", &["t", "layers", "method", "F", "infidelity_per_site"]);
        let mut ent = Table::new("qmps_entropy", &["t", "layers", "S_vN"]);
        let mut series = Vec::new();
        let mut ent_series = vec![Series {
            label: "exact".into(),
            points: self.curves.first().map(|c| c.times.iter().copied().zip(self.exact_entropy.iter().copied()).collect()).unwrap_or_default(),
        }];
        for c in &self.curves {
            for (k, &t) in c.times.iter().enumerate() {
                for (method, f) in [("qmps_vs_mps", c.qmps_vs_target[k]), ("qmps", c.qmps_vs_exact[k]), ("mps", c.mps_vs_exact[k])] {
                    let ips = infidelity_per_site(f.min(1.0), self.num_sites)?;
                    fid.push(vec![fmt_t(t), c.layers.to_string(), method.into(), fmt_f(f), fmt_f(ips)]);
                }
                ent.push(vec![fmt_t(t), c.layers.to_string(), fmt_f(c.qmps_entropy[k])]);
            }
            let ips = |v: &[f64]| -> Vec<(f64, f64)> {
                c.times.iter().zip(v).map(|(&t, &f)| (t, infidelity_per_site(f.min(1.0), self.num_sites).unwrap_or(f64::NAN))).collect()
            };
            series.push(Series { label: format!("QMPS N_L={}", c.layers), points: ips(&c.qmps_vs_exact) });
            series.push(Series { label: format!("MPS chi={}", 1 << c.layers), points: ips(&c.mps_vs_exact) });
            ent_series.push(Series { label: format!("QMPS N_L={}", c.layers), points: c.times.iter().copied().zip(c.qmps_entropy.iter().copied()).collect() });
        }
        Ok(ExperimentOutput {
            tables: vec![fid, ent],
            figures: vec![
                ("qmps_infidelity".into(), line_plot("QMPS infidelity per site", "t", "1 - F^(1/L)", &series, true)),
                ("qmps_entropy".into(), line_plot("QMPS entropy", "t", "S_vN (bits)", &ent_series, false)),
            ],
            summary: json!({
                "layers": self.curves.iter().map(|c| c.layers).collect::<Vec<_>>(),
                "min_fidelity_vs_target": self.curves.iter().map(|c| c.qmps_vs_target.iter().copied().fold(1.0, f64::min)).collect::<Vec<_>>(),
            }),
        })
    }
}

// ---------------------------------------------------------------- fig5

#[derive(Clone, Debug)]
pub struct Fig5Curve {
    pub layers: usize,
    pub times: Vec<f64>,
    pub qmpo: Vec<f64>,
    /// `|F_op|` of the first-order Trotter circuit with the same number of layers.
    pub trotter: Vec<f64>,
    pub t_max_mpo: f64,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Clone, Debug)]
pub struct Fig5 {
    pub num_sites: usize,
    pub curves: Vec<Fig5Curve>,
}

pub fn fig5(cfg: &RunConfig) -> Result<Fig5> {
    cfg.validate()?;
    let p = cfg.model;
    let l = p.num_sites;
    let times: Vec<f64> = cfg.time_grid().into_iter().skip(1).collect();
    let curves = cfg
        .layer_scan
        .par_iter()
        .map(|&n| {
            let kappa = 1usize << (2 * n);
            let sweep = sweep_config(cfg, cfg.max_sweeps_qmpo, l, n, 100 + n as u64)?;
            let (points, trotter) = rayon::join(
                || qmpo_trajectory(&p, n, &times, &sweep),
                || -> Result<Vec<f64>> {
                    let targets = trotter_propagator_snapshots(&p, &times, kappa)?;
                    times
                        .iter()
                        .zip(&targets)
                        .map(|(&t, target)| {
                            let c = StaircaseCircuit::trotter(&p.with_dt(t / n as f64), n)?;
                            Ok(frobenius_fidelity(&c.to_mpo(kappa)?, target)?.norm())
                        })
                        .collect()
                },
            );
            let (points, trotter) = (points?, trotter?);
            let qmpo = points.iter().map(|q| q.report.final_fidelity).collect();
            let t_max_mpo = detect_t_max_mpo(&points, l, cfg.mpo_threshold)?;
            Ok(Fig5Curve { layers: n, times: times.clone(), qmpo, trotter, t_max_mpo, points })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig5 { num_sites: l, curves })
}

impl Fig5 {
    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut fid = Table::new("operator_fidelity", &["t", "layers", "method", "F_op", "infidelity_per_site"]);
        let mut tmax = Table::new("tmax_mpo", &["layers", "t_max_mpo"]);
        let mut series = Vec::new();
        for c in &self.curves {
            for (k, &t) in c.times.iter().enumerate() {
                for (method, f) in [("qmpo", c.qmpo[k]), ("trotter", c.trotter[k])] {
                    let ips = infidelity_per_site(f.min(1.0), self.num_sites)?;
                    fid.push(vec![fmt_t(t), c.layers.to_string(), method.into(), fmt_f(f), fmt_f(ips)]);
                }
            }
            tmax.push(vec![c.layers.to_string(), fmt_t(c.t_max_mpo)]);
            series.push(Series { label: format!("QMPO N_L={}", c.layers), points: c.times.iter().copied().zip(c.qmpo.iter().copied()).collect() });
            series.push(Series { label: format!("Trotter N_L={}", c.layers), points: c.times.iter().copied().zip(c.trotter.iter().copied()).collect() });
        }
        Ok(ExperimentOutput {
            tables: vec![fid, tmax],
            figures: vec![("operator_fidelity".into(), line_plot("Operator fidelity", "t", "|F_op|", &series, false))],
            summary: json!({
                "layers": self.curves.iter().map(|c| c.layers).collect::<Vec<_>>(),
                "t_max_mpo": self.curves.iter().map(|c| c.t_max_mpo).collect::<Vec<_>>(),
            }),
        })
    }
}

// ---------------------------------------------------------------- fig6

#[derive(Clone, Debug)]
pub struct Fig6 {
    pub num_sites: usize,
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub t_max_mps: f64,
    pub t_max_mpo: f64,
    /// `[epsilon][t]`.
    pub fidelities: Vec<Vec<MethodFidelities>>,
    pub regions: Vec<Vec<Region>>,
    pub trotter_gates: Vec<usize>,
    pub qmpso_gates: Vec<usize>,
}

pub(crate) fn noisy(state: &Statevector, eps: f64, gates: usize) -> Result<NoisyState> {
    NoisyState::new(state.clone(), NoiseModel::new(eps)?.alpha(gates))
}

pub fn fig6_from_run(run: &QmpsoRun, epsilons: &[f64]) -> Result<Fig6> {
    let mps: Vec<f64> = run.mps.iter().zip(&run.reference).map(|(m, r)| m.fidelity(r)).collect::<Result<_>>()?;
    let cells = epsilons
        .par_iter()
        .map(|&eps| {
            (0..run.times.len())
                .map(|k| {
                    let r = &run.reference[k];
                    let f = MethodFidelities {
                        mps: mps[k],
                        trotter: noisy_fidelity(&noisy(&run.trotter[k], eps, run.trotter_gates[k])?, r)?,
                        qmpso: noisy_fidelity(&noisy(&run.qmpso[k], eps, run.qmpso_gates[k])?, r)?,
                    };
                    Ok((f, advantage_classify(run.times[k], run.t_max_mps, &f)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (fidelities, regions) = cells.into_iter().map(|row| row.into_iter().unzip()).unzip();
    Ok(Fig6 {
        num_sites: run.num_sites(),
        times: run.times.clone(),
        epsilons: epsilons.to_vec(),
        t_max_mps: run.t_max_mps,
        t_max_mpo: run.t_max_mpo,
        fidelities,
        regions,
        trotter_gates: run.trotter_gates.clone(),
        qmpso_gates: run.qmpso_gates.clone(),
    })
}

pub fn fig6(cfg: &RunConfig) -> Result<Fig6> {
    fig6_from_run(&QmpsoRun::build(cfg)?, &cfg.epsilons)
}

impl Fig6 {
    pub fn region(&self, eps_index: usize, t: f64) -> Option<Region> {
        let k = self.times.iter().position(|&x| (x - t).abs() < 1e-9)?;
        Some(self.regions[eps_index][k])
    }

    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut fid = Table::new("fidelity", &["t", "epsilon", "method", "F", "infidelity_per_site"]);
        let mut adv = Table::new("advantage", &["t", "epsilon", "region"]);
        let mut figures = Vec::new();
        for (e, &eps) in self.epsilons.iter().enumerate() {
            let mut series: Vec<Series> = ["mps", "trotter", "qmpso"].iter().map(|m| Series { label: m.to_string(), points: Vec::new() }).collect();
            for (k, &t) in self.times.iter().enumerate() {
                let f = self.fidelities[e][k];
                for (i, (method, v)) in [("mps", f.mps), ("trotter", f.trotter), ("qmpso", f.qmpso)].into_iter().enumerate() {
                    let ips = infidelity_per_site(v.clamp(0.0, 1.0), self.num_sites)?;
                    fid.push(vec![fmt_t(t), fmt_f(eps), method.into(), fmt_f(v), fmt_f(ips)]);
                    series[i].points.push((t, ips));
                }
                adv.push(vec![fmt_t(t), fmt_f(eps), self.regions[e][k].as_str().into()]);
            }
            figures.push((format!("fidelity_eps{e}"), line_plot(&format!("Infidelity per site, eps={eps:e}"), "t", "1 - F^(1/L)", &series, true)));
        }
        let code = |r: Region| match r {
            Region::MpsBest => 0,
            Region::QmpsoAdvantage => 1,
            Region::TrotterAdvantage => 2,
        };
        let cells: Vec<Vec<usize>> = self.regions.iter().map(|row| row.iter().map(|&r| code(r)).collect()).collect();
        let labels: Vec<String> = self.epsilons.iter().map(|e| format!("{e:.0e}")).collect();
        figures.push((
            "advantage".into(),
            category_map(
                "Advantage diagram",
                "t",
                "epsilon",
                &self.times,
                &labels,
                &cells,
                &[("mps_best", "#1b5e20"), ("qmpso_advantage", "#43a047"), ("trotter_advantage", "#a5d6a7")],
            ),
        ));
        Ok(ExperimentOutput {
            tables: vec![fid, adv],
            figures,
            summary: json!({ "t_max_mps": self.t_max_mps, "t_max_mpo": self.t_max_mpo, "epsilons": self.epsilons }),
        })
    }
}

// ---------------------------------------------------------------- fig7

pub const FIG7_METHODS: [&str; 4] = ["exact", "mps", "trotter", "qmpso"];

#[derive(Clone, Debug)]
pub struct Fig7 {
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub t_max_mps: f64,
    /// `[method][t][site]` in the order of `FIG7_METHODS`.
    pub magnetization: Vec<Vec<Vec<f64>>>,
    /// `[method - 1][t]` for t on the grid after `t_max_mps`; `NaN` before.
    pub cumulated: Vec<Vec<f64>>,
}

pub fn fig7_from_run(run: &QmpsoRun, eps: f64) -> Result<Fig7> {
    let l = run.num_sites();
    let noisy_z = |states: &[Statevector], gates: &[usize]| -> Result<Vec<Vec<f64>>> {
        states
            .iter()
            .zip(gates)
            .map(|(s, &g)| {
                let rho = noisy(s, eps, g)?;
                (0..l).map(|i| noisy_expectation_z(&rho, i)).collect()
            })
            .collect()
    };
    let exact: Vec<Vec<f64>> = run.reference.iter().map(local_magnetization).collect();
    let mps: Vec<Vec<f64>> = run.mps.iter().map(local_magnetization).collect();
    let magnetization = vec![exact, mps, noisy_z(&run.trotter, &run.trotter_gates)?, noisy_z(&run.qmpso, &run.qmpso_gates)?];
    let mut cumulated = Vec::new();
    for series in &magnetization[1..] {
        let row = run
            .times
            .iter()
            .map(|&t| {
                if t <= run.t_max_mps + 1e-9 {
                    Ok(f64::NAN)
                } else {
                    cumulated_error(&run.times, series, &magnetization[0], run.t_max_mps, t)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        cumulated.push(row);
    }
    Ok(Fig7 { times: run.times.clone(), epsilon: eps, t_max_mps: run.t_max_mps, magnetization, cumulated })
}

pub fn fig7(cfg: &RunConfig) -> Result<Fig7> {
    let eps = *cfg.epsilons.first().ok_or_else(|| crate::error::Error::invalid("fig7 needs one error rate"))?;
    fig7_from_run(&QmpsoRun::build(cfg)?, eps)
}

impl Fig7 {
    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut mag = Table::new("magnetization", &["t", "site", "method", "z"]);
        let mut cum = Table::new("cumulated_error", &["t", "epsilon", "method", "eps_c"]);
        for (m, method) in FIG7_METHODS.iter().enumerate() {
            for (k, &t) in self.times.iter().enumerate() {
                for (i, z) in self.magnetization[m][k].iter().enumerate() {
                    mag.push(vec![fmt_t(t), i.to_string(), method.to_string(), fmt_f(*z)]);
                }
            }
        }
        let mut series = Vec::new();
        for (m, method) in FIG7_METHODS[1..].iter().enumerate() {
            let mut s = Series { label: method.to_string(), points: Vec::new() };
            for (k, &t) in self.times.iter().enumerate() {
                let v = self.cumulated[m][k];
                if v.is_finite() {
                    cum.push(vec![fmt_t(t), fmt_f(self.epsilon), method.to_string(), fmt_f(v)]);
                    s.points.push((t, v));
                }
            }
            series.push(s);
        }
        let mid = self.magnetization[0].first().map_or(0, |z| z.len() / 2);
        let site_series: Vec<Series> = FIG7_METHODS
            .iter()
            .enumerate()
            .map(|(m, method)| Series {
                label: method.to_string(),
                points: self.times.iter().zip(&self.magnetization[m]).map(|(&t, z)| (t, z[mid])).collect(),
            })
            .collect();
        Ok(ExperimentOutput {
            tables: vec![mag, cum],
            figures: vec![
                ("magnetization".into(), line_plot(&format!("<Z_{mid}>"), "t", "z", &site_series, false)),
                ("cumulated_error".into(), line_plot("Cumulated error", "t", "eps_c", &series, true)),
            ],
            summary: json!({ "epsilon": self.epsilon, "t_max_mps": self.t_max_mps }),
        })
    }
}

// ---------------------------------------------------------------- fig8

#[derive(Clone, Debug)]
pub struct Fig8Curve {
    pub num_sites: usize,
    pub qmps_times: Vec<f64>,
    pub qmps: Vec<f64>,
    pub qmpo_times: Vec<f64>,
    pub qmpo: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Fig8 {
    pub curves: Vec<Fig8Curve>,
}

pub fn fig8(cfg: &RunConfig) -> Result<Fig8> {
    cfg.validate()?;
    let curves = cfg
        .sizes
        .par_iter()
        .map(|&l| {
            let sub = RunConfig { model: cfg.model.with_sites(l), ..cfg.clone() };
            let qmpo_times: Vec<f64> = grid(cfg.t_final.min(cfg.mpo_scan_max), cfg.t_step).into_iter().skip(1).collect();
            let (qmps, qmpo) = rayon::join(
                || -> Result<Vec<TrajectoryPoint>> {
                    let (targets, _) = mps_run(&sub, sub.chi_mps(), sub.t_final)?;
                    let start = MatrixProductState::from_product(&neel_product_state(l), 1)?;
                    qmps_trajectory_targets(&targets, &start, sub.n_l_mps, &sweep_config(&sub, sub.max_sweeps_qmps, l, sub.n_l_mps, 1)?)
                },
                || qmpo_trajectory(&sub.model, sub.n_l_mpo, &qmpo_times, &sweep_config(&sub, sub.max_sweeps_qmpo, l, sub.n_l_mpo, 2)?),
            );
            let ips = |pts: &[TrajectoryPoint]| -> Result<(Vec<f64>, Vec<f64>)> {
                let v = pts.iter().map(|q| infidelity_per_site(q.report.final_fidelity.min(1.0), l)).collect::<Result<_>>()?;
                Ok((pts.iter().map(|q| q.t).collect(), v))
            };
            let (qmps_times, qmps) = ips(&qmps?)?;
            let (qmpo_times, qmpo) = ips(&qmpo?)?;
            Ok(Fig8Curve { num_sites: l, qmps_times, qmps, qmpo_times, qmpo })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Fig8 { curves })
}

impl Fig8 {
    pub fn qmps_at(&self, num_sites: usize, t: f64) -> Option<f64> {
        let c = self.curves.iter().find(|c| c.num_sites == num_sites)?;
        c.qmps_times.iter().position(|&x| (x - t).abs() < 1e-9).map(|k| c.qmps[k])
    }

    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut table = Table::new("size_infidelity", &["t", "L", "method", "infidelity_per_site"]);
        let mut series = Vec::new();
        for c in &self.curves {
            for (method, times, vals) in [("qmps", &c.qmps_times, &c.qmps), ("qmpo", &c.qmpo_times, &c.qmpo)] {
                for (&t, &v) in times.iter().zip(vals.iter()) {
                    table.push(vec![fmt_t(t), c.num_sites.to_string(), method.into(), fmt_f(v)]);
                }
                series.push(Series { label: format!("{method} L={}", c.num_sites), points: times.iter().copied().zip(vals.iter().copied()).collect() });
            }
        }
        Ok(ExperimentOutput {
            tables: vec![table],
            figures: vec![("size_infidelity".into(), line_plot("Infidelity per site by size", "t", "1 - F^(1/L)", &series, true))],
            summary: json!({ "sizes": self.curves.iter().map(|c| c.num_sites).collect::<Vec<_>>() }),
        })
    }
}

// ---------------------------------------------------------------- fig9

#[derive(Clone, Debug)]
pub struct Fig9 {
    pub times: Vec<f64>,
    pub t_max_mps: f64,
    pub t_max_mpo: f64,
    /// `log2 chi` of the MPS run.
    pub mps_bound: f64,
    pub epsilons: Vec<f64>,
    /// `[epsilon][t]`.
    pub qmpso: Vec<Vec<f64>>,
    pub trotter: Vec<Vec<f64>>,
}

pub fn fig9_from_run(run: &QmpsoRun, epsilons: &[f64], chi: usize) -> Result<Fig9> {
    let l = run.num_sites();
    let s_op = |states: &[Statevector], gates: &[usize], eps: f64| -> Result<Vec<f64>> {
        states
            .par_iter()
            .zip(gates.par_iter())
            .map(|(s, &g)| operator_entropy(&noisy(s, eps, g)?.density_matrix()?, l, l / 2))
            .collect()
    };
    let mut qmpso = Vec::new();
    let mut trotter = Vec::new();
    for &eps in epsilons {
        qmpso.push(s_op(&run.qmpso, &run.qmpso_gates, eps)?);
        trotter.push(s_op(&run.trotter, &run.trotter_gates, eps)?);
    }
    Ok(Fig9 {
        times: run.times.clone(),
        t_max_mps: run.t_max_mps,
        t_max_mpo: run.t_max_mpo,
        mps_bound: (chi as f64).log2(),
        epsilons: epsilons.to_vec(),
        qmpso,
        trotter,
    })
}

pub fn fig9(cfg: &RunConfig) -> Result<Fig9> {
    fig9_from_run(&QmpsoRun::build(cfg)?, &cfg.epsilons, cfg.chi_mps())
}

impl Fig9 {
    pub fn render(&self) -> Result<ExperimentOutput> {
        let mut table = Table::new("operator_entropy", &["t", "epsilon", "method", "S_op"]);
        let mut series = Vec::new();
        for (e, &eps) in self.epsilons.iter().enumerate() {
            for (method, vals) in [("qmpso", &self.qmpso[e]), ("trotter", &self.trotter[e])] {
                for (&t, &v) in self.times.iter().zip(vals.iter()) {
                    table.push(vec![fmt_t(t), fmt_f(eps), method.into(), fmt_f(v)]);
                }
                series.push(Series { label: format!("{method} eps={eps:e}"), points: self.times.iter().copied().zip(vals.iter().copied()).collect() });
            }
        }
        for &t in &self.times {
            table.push(vec![fmt_t(t), fmt_f(0.0), "mps_bound".into(), fmt_f(self.mps_bound)]);
        }
        series.push(Series { label: "log2 chi".into(), points: self.times.iter().map(|&t| (t, self.mps_bound)).collect() });
        Ok(ExperimentOutput {
            tables: vec![table],
            figures: vec![("operator_entropy".into(), line_plot("Operator entanglement entropy", "t", "S_op (bits)", &series, false))],
            summary: json!({ "t_max_mps": self.t_max_mps, "t_max_mpo": self.t_max_mpo, "mps_bound": self.mps_bound }),
        })
    }
}
