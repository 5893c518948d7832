//! Run configuration, experiment presets and the QMPSO time decomposition.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{steps_on_grid, TfimParams};

pub const EXPERIMENTS: [&str; 7] = ["fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    /// Model; `dt` is the step of the reference, TEBD targets and MPO targets.
    pub model: TfimParams,
    /// Bond dimensions scanned by entropy runs.
    pub chis: Vec<usize>,
    pub n_l_mps: usize,
    pub n_l_mpo: usize,
    /// Depths scanned by QMPS / QMPO quality runs.
    pub layer_scan: Vec<usize>,
    /// Chain lengths scanned by the size study.
    pub sizes: Vec<usize>,
    /// Detected from the entropy trace when absent.
    pub t_max_mps: Option<f64>,
    /// Detected from the QMPO error threshold when absent.
    pub t_max_mpo: Option<f64>,
    pub t_final: f64,
    /// Spacing of the output time grid.
    pub t_step: f64,
    /// Step of the Trotter circuits compared against QMPSO.
    pub trotter_dt: f64,
    pub epsilons: Vec<f64>,
    pub max_sweeps_qmps: usize,
    pub max_sweeps_qmpo: usize,
    pub convergence_delta: f64,
    /// Operator infidelity per site tolerated when detecting `t_max_mpo`.
    pub mpo_threshold: f64,
    /// Upper end of the QMPO scan used for detection.
    pub mpo_scan_max: f64,
    /// Entropy margin (bits) below `log2 chi` that marks saturation.
    pub saturation_margin: f64,
    pub seed: u64,
    /// Start compilations from seeded random gates instead of identities.
    pub random_init: bool,
    /// Keep every n-th TEBD state.
    pub snapshot_every: usize,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            experiment: name.to_string(),
            model: TfimParams::critical(12, 0.01),
            chis: vec![2, 4, 8, 16, 32, 64],
            n_l_mps: 3,
            n_l_mpo: 1,
            layer_scan: vec![1, 2, 3],
            sizes: vec![8, 10, 12],
            t_max_mps: Some(2.2),
            t_max_mpo: Some(0.2),
            t_final: 6.0,
            t_step: 0.1,
            trotter_dt: 0.01,
            epsilons: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5],
            max_sweeps_qmps: 2000,
            max_sweeps_qmpo: 100,
            convergence_delta: 1e-8,
            mpo_threshold: 1e-3,
            mpo_scan_max: 1.0,
            saturation_margin: 0.05,
            seed: 0,
            random_init: false,
            snapshot_every: 10,
        };
        let cfg = match name {
            "fig2" => base,
            "fig4" => Self { model: TfimParams::critical(10, 0.01), t_final: 3.0, ..base },
            "fig5" => Self { layer_scan: vec![1, 2], t_final: 1.0, t_step: 0.05, ..base },
            "fig6" => base,
            "fig7" => Self {
                model: TfimParams::critical(10, 0.01),
                t_max_mpo: Some(0.5),
                t_final: 5.0,
                trotter_dt: 0.1,
                epsilons: vec![1e-2],
                ..base
            },
            "fig8" => Self { n_l_mps: 2, t_final: 2.0, ..base },
            "fig9" => Self {
                model: TfimParams::critical(8, 0.01),
                n_l_mps: 2,
                t_max_mps: None,
                t_max_mpo: None,
                t_final: 5.0,
                trotter_dt: 0.1,
                epsilons: vec![1e-3],
                ..base
            },
            other => return Err(Error::invalid(format!("unknown experiment '{other}'; expected one of {EXPERIMENTS:?}"))),
        };
        Ok(cfg)
    }

    /// Preset for `name` with the fields of `overrides` (a JSON object) replaced.
    pub fn from_overrides(name: &str, overrides: &Value) -> Result<Self> {
        let mut doc = serde_json::to_value(Self::preset(name)?).expect("config serializes");
        let obj = overrides.as_object().ok_or_else(|| Error::parse("$", "config must be a JSON object"))?;
        let target = doc.as_object_mut().expect("object");
        for (k, v) in obj {
            if k == "model" {
                let m = target.get_mut("model").and_then(Value::as_object_mut).expect("model object");
                let vo = v.as_object().ok_or_else(|| Error::parse("$.model", "expected an object"))?;
                for (mk, mv) in vo {
                    m.insert(mk.clone(), mv.clone());
                }
            } else {
                target.insert(k.clone(), v.clone());
            }
        }
        target.insert("experiment".into(), Value::String(name.to_string()));
        let cfg: Self = serde_json::from_value(doc).map_err(|e| Error::parse("$", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chi_mps(&self) -> usize {
        1 << self.n_l_mps
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !EXPERIMENTS.contains(&self.experiment.as_str()) {
            return Err(Error::invalid(format!("unknown experiment '{}'", self.experiment)));
        }
        if self.n_l_mps == 0 || self.n_l_mpo == 0 || self.n_l_mps > 10 || self.n_l_mpo > 5 {
            return Err(Error::invalid("layer counts must be in 1..=10 (QMPS) and 1..=5 (QMPO)"));
        }
        if (1usize << (2 * self.n_l_mpo)) > self.chi_mps() / 2 {
            log::warn!(
                "QMPO bond dimension 4^{} exceeds chi_mps/2 = {}",
                self.n_l_mpo,
                self.chi_mps() / 2
            );
        }
        if !(self.t_step > 0.0) || !(self.t_final > 0.0) || !(self.trotter_dt > 0.0) {
            return Err(Error::invalid("t_step, t_final and trotter_dt must be positive"));
        }
        steps_on_grid(self.t_step, self.model.dt)?;
        steps_on_grid(self.t_final, self.t_step)?;
        steps_on_grid(self.t_step, self.trotter_dt).map_err(|_| Error::invalid("t_step must be a multiple of trotter_dt"))?;
        for t in [self.t_max_mps, self.t_max_mpo].into_iter().flatten() {
            steps_on_grid(t, self.t_step).map_err(|_| Error::invalid(format!("t_max = {t} is off the output grid")))?;
        }
        if self.t_max_mpo == Some(0.0) {
            return Err(Error::invalid("t_max_mpo must be positive"));
        }
        if self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::invalid("error rates must be non-negative"));
        }
        if self.chis.contains(&0) || self.layer_scan.contains(&0) || self.sizes.iter().any(|&l| l < 2) {
            return Err(Error::invalid("bond dimensions and depths must be positive, sizes at least 2"));
        }
        if self.max_sweeps_qmps == 0 || self.max_sweeps_qmpo == 0 || !(self.convergence_delta > 0.0) {
            return Err(Error::invalid("sweep limits and convergence delta must be positive"));
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every must be positive"));
        }
        Ok(())
    }

    /// `0, t_step, ..., t_final`.
    pub fn time_grid(&self) -> Vec<f64> {
        grid(self.t_final, self.t_step)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// `0, step, ..., end` computed from integer multiples.
pub fn grid(end: f64, step: f64) -> Vec<f64> {
    let n = (end / step).round() as usize;
    (0..=n).map(|k| round_time(k as f64 * step)).collect()
}

/// Strip float noise from grid times.
pub(crate) fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// `t = t_max_mps + M t_max_mpo + Δt`, all on the `dt` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmpsoSchedule {
    pub t_max_mps: f64,
    pub t_max_mpo: f64,
    pub n_l_mps: usize,
    pub n_l_mpo: usize,
    pub dt: f64,
    pub target_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub m: usize,
    /// Remainder in units of `dt`.
    pub remainder_steps: usize,
}

impl QmpsoSchedule {
    pub fn decompose(&self) -> Result<Decomposition> {
        let n_t = steps_on_grid(self.target_t, self.dt)?;
        let n_mps = steps_on_grid(self.t_max_mps, self.dt)?;
        let n_mpo = steps_on_grid(self.t_max_mpo, self.dt)?;
        if n_mpo == 0 {
            return Err(Error::invalid("t_max_mpo must be at least one step"));
        }
        if n_t < n_mps {
            return Err(Error::invalid(format!(
                "target time {} precedes t_max_mps = {}",
                self.target_t, self.t_max_mps
            )));
        }
        let rest = n_t - n_mps;
        Ok(Decomposition { m: rest / n_mpo, remainder_steps: rest % n_mpo })
    }

    pub fn delta_t(&self) -> Result<f64> {
        Ok(round_time(self.decompose()?.remainder_steps as f64 * self.dt))
    }

    /// Two-qubit gates of the composed circuit on `num_sites` sites.
    pub fn gate_count(&self, num_sites: usize) -> Result<usize> {
        let d = self.decompose()?;
        let blocks = d.m + usize::from(d.remainder_steps > 0);
        Ok((num_sites - 1) * (self.n_l_mps + blocks * self.n_l_mpo))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(t_max_mps: f64, t_max_mpo: f64, n_l_mps: usize, n_l_mpo: usize, target_t: f64) -> QmpsoSchedule {
        QmpsoSchedule { t_max_mps, t_max_mpo, n_l_mps, n_l_mpo, dt: 0.01, target_t }
    }

    #[test]
    fn decomposition_examples() {
        let s = schedule(2.2, 0.2, 3, 1, 3.0);
        assert_eq!(s.decompose().unwrap(), Decomposition { m: 4, remainder_steps: 0 });
        let s = schedule(2.2, 0.2, 3, 1, 2.2);
        assert_eq!(s.decompose().unwrap(), Decomposition { m: 0, remainder_steps: 0 });
        assert_eq!(s.gate_count(12).unwrap(), 33);
        let s = schedule(2.2, 0.5, 3, 1, 3.2);
        assert_eq!(s.decompose().unwrap(), Decomposition { m: 2, remainder_steps: 0 });
        assert_eq!(s.gate_count(10).unwrap(), 45);
        let s = schedule(2.2, 0.5, 3, 1, 3.5);
        assert_eq!(s.decompose().unwrap(), Decomposition { m: 2, remainder_steps: 30 });
        assert!((s.delta_t().unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(s.gate_count(10).unwrap(), 9 * 6);
        assert!(schedule(2.2, 0.2, 3, 1, 2.0).decompose().is_err());
    }

    #[test]
    fn decomposition_reassembles_on_grid() {
        for k in 220..=600 {
            let t = k as f64 * 0.01;
            let s = schedule(2.2, 0.3, 3, 1, t);
            let d = s.decompose().unwrap();
            assert_eq!(220 + d.m * 30 + d.remainder_steps, k);
            assert!(d.remainder_steps < 30);
        }
    }

    #[test]
    fn presets_validate() {
        for name in EXPERIMENTS {
            RunConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(RunConfig::preset("fig3").is_err());
    }

    #[test]
    fn overrides_merge_and_reject_unknown_fields() {
        let cfg = RunConfig::from_overrides("fig6", &serde_json::json!({"n_l_mps": 5, "model": {"L": 8}})).unwrap();
        assert_eq!(cfg.n_l_mps, 5);
        assert_eq!(cfg.model.num_sites, 8);
        assert_eq!(cfg.model.dt, 0.01);
        assert!(RunConfig::from_overrides("fig6", &serde_json::json!({"bogus": 1})).is_err());
        assert!(RunConfig::from_overrides("fig6", &serde_json::json!({"t_step": 0.015})).is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::preset("fig6").unwrap();
        assert_eq!(a.hash(), RunConfig::preset("fig6").unwrap().hash());
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.model.field = 1.0 + 1e-15;
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.epsilons.push(1e-6);
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn grid_is_exact() {
        let g = grid(6.0, 0.1);
        assert_eq!(g.len(), 61);
        assert_eq!(g[22], 2.2);
        assert_eq!(g[60], 6.0);
    }
}
