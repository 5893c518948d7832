//! Transverse-field Ising chain: local terms, Trotter gates, initial state.
//!
//! H = -J Σ X_i X_{i+1} - h Σ Z_i on an open chain. Bonds are identified by
//! their 0-based left site; "odd" bonds in the usual 1-based counting are the
//! bonds with an even left site.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{herm_exp, pauli, ComplexTensor, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfimParams {
    #[serde(rename = "L")]
    pub num_sites: usize,
    #[serde(rename = "J", default = "unit")]
    pub coupling: f64,
    #[serde(rename = "h", default = "unit")]
    pub field: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.01
}

impl TfimParams {
    /// Critical chain `J = h = 1`.
    pub fn critical(num_sites: usize, dt: f64) -> Self {
        Self { num_sites, coupling: 1.0, field: 1.0, dt }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        Self { dt, ..self }
    }

    pub fn with_sites(self, num_sites: usize) -> Self {
        Self { num_sites, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sites < 2 {
            return Err(Error::invalid(format!("need at least 2 sites, got {}", self.num_sites)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !self.coupling.is_finite() || !self.field.is_finite() {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(())
    }

    /// Number of whole steps that reach `t`, rejecting times off the dt grid.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        steps_on_grid(t, self.dt)
    }
}

pub(crate) fn steps_on_grid(t: f64, dt: f64) -> Result<usize> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::invalid(format!("t = {t} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Local basis label; `Up` is bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn bit(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub fn z(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// `|↑↓↑↓...⟩`.
pub fn neel_product_state(num_sites: usize) -> Vec<Spin> {
    (0..num_sites).map(|i| if i % 2 == 0 { Spin::Up } else { Spin::Down }).collect()
}

/// Two-site terms `h_{i,i+1}` whose sum over bonds is H.
///
/// Bulk bonds share the field equally between their sites; the first and
/// last bond carry the full field on their outer site.
pub fn local_terms(p: &TfimParams) -> Result<Vec<ComplexTensor>> {
    p.validate()?;
    let l = p.num_sites;
    let xx = pauli::x().kron(&pauli::x());
    let zi = pauli::z().kron(&pauli::id());
    let iz = pauli::id().kron(&pauli::z());
    let real = |x: f64| C64::new(x, 0.0);
    Ok((0..l - 1)
        .map(|bond| {
            let left = if bond == 0 { p.field } else { p.field / 2.0 };
            let right = if bond == l - 2 { p.field } else { p.field / 2.0 };
            xx.scale(real(-p.coupling))
                .add_scaled(&zi, real(-left))
                .and_then(|m| m.add_scaled(&iz, real(-right)))
                .expect("4x4 operands")
        })
        .collect())
}

/// Gates of a first-order Trotter circuit, in application order.
#[derive(Clone, Debug)]
pub struct TrotterSchedule {
    /// One step: `(left site, gate)` pairs, applied first to last.
    pub gates: Vec<(usize, ComplexTensor)>,
    pub steps: usize,
}

impl TrotterSchedule {
    pub fn repeated(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    /// Every gate application over all steps.
    pub fn iter(&self) -> impl Iterator<Item = &(usize, ComplexTensor)> {
        (0..self.steps).flat_map(move |_| self.gates.iter())
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len() * self.steps
    }
}

/// One Trotter step: the bonds with even left site (odd bonds in 1-based
/// counting) act first, then the remaining ones, each ascending.
pub fn trotter_step_gates(p: &TfimParams) -> Result<TrotterSchedule> {
    let terms = local_terms(p)?;
    let scale = C64::new(0.0, -p.dt);
    let mut gates = Vec::with_capacity(terms.len());
    for parity in [0, 1] {
        for (bond, h) in terms.iter().enumerate().filter(|(b, _)| b % 2 == parity) {
            gates.push((bond, herm_exp(h, scale)?));
        }
    }
    Ok(TrotterSchedule { gates, steps: 1 })
}
