//! Two-qubit gate circuits on a chain: staircase ansätze and Trotter brickworks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{trotter_step_gates, TfimParams};
use crate::mpo::{MatrixProductOperator, Side};
use crate::mps::MatrixProductState;
use crate::statevector::{embed_two_site, Statevector};
use crate::tensor::{ComplexTensor, C64, ZERO};

const UNITARY_TOL: f64 = 1e-12;
const EXACT_WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitKind {
    /// Each layer is bonds `0..L-1` ascending.
    Staircase,
    /// Each layer is the bonds with even left site, then those with odd left site, ascending.
    Brickwork,
}

impl CircuitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CircuitKind::Staircase => "staircase",
            CircuitKind::Brickwork => "brickwork",
        }
    }

    fn layer_bonds(self, num_sites: usize) -> Vec<usize> {
        match self {
            CircuitKind::Staircase => (0..num_sites - 1).collect(),
            CircuitKind::Brickwork => (0..num_sites - 1).step_by(2).chain((1..num_sites - 1).step_by(2)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Identity,
    RandomUnitary(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    /// The gate acts on sites `(left_site, left_site + 1)`.
    pub left_site: usize,
    pub unitary: ComplexTensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseCircuit {
    num_sites: usize,
    kind: CircuitKind,
    gates: Vec<Gate>,
    layer_starts: Vec<usize>,
}

/// Haar-random `dim × dim` unitary (QR of a complex Gaussian matrix).
pub fn haar_unitary(dim: usize, rng: &mut impl rand::Rng) -> ComplexTensor {
    let scale = 1.0 / 2f64.sqrt();
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    C64::new(re * scale, im * scale)
                })
                .collect()
        })
        .collect();
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let prev = cols[k].clone();
                for (x, p) in cols[j].iter_mut().zip(prev) {
                    *x -= proj * p;
                }
            }
        }
        let n = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= n);
    }
    let mut u = ComplexTensor::zeros(vec![dim, dim]);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u.set(i, j, *z);
        }
    }
    u
}

impl StaircaseCircuit {
    /// `num_layers` staircase layers of `L - 1` gates each.
    pub fn new_staircase(num_sites: usize, num_layers: usize, init: Init) -> Result<Self> {
        if num_layers == 0 {
            return Err(Error::invalid("a staircase needs at least one layer"));
        }
        let mut rng = match init {
            Init::RandomUnitary(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            Init::Identity => None,
        };
        let layers = (0..num_layers)
            .map(|_| {
                (0..num_sites.saturating_sub(1))
                    .map(|b| Gate {
                        left_site: b,
                        unitary: match rng.as_mut() {
                            Some(r) => haar_unitary(4, r),
                            None => ComplexTensor::identity(4),
                        },
                    })
                    .collect()
            })
            .collect();
        Self::from_layers(num_sites, CircuitKind::Staircase, layers)
    }

    /// Empty circuit (no gates).
    pub fn empty(num_sites: usize, kind: CircuitKind) -> Result<Self> {
        Self::from_layers(num_sites, kind, Vec::new())
    }

    /// First-order Trotter circuit: one brickwork layer per step.
    pub fn trotter(p: &TfimParams, steps: usize) -> Result<Self> {
        let step = trotter_step_gates(p)?;
        let layer: Vec<Gate> = step.gates.into_iter().map(|(b, u)| Gate { left_site: b, unitary: u }).collect();
        Self::from_layers(p.num_sites, CircuitKind::Brickwork, vec![layer; steps])
    }

    pub fn from_layers(num_sites: usize, kind: CircuitKind, layers: Vec<Vec<Gate>>) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::invalid(format!("a circuit needs at least 2 sites, got {num_sites}")));
        }
        let expected = kind.layer_bonds(num_sites);
        let mut gates = Vec::new();
        let mut layer_starts = Vec::with_capacity(layers.len());
        for (k, layer) in layers.into_iter().enumerate() {
            let bonds: Vec<usize> = layer.iter().map(|g| g.left_site).collect();
            if bonds != expected {
                return Err(Error::invalid(format!(
                    "layer {k} acts on bonds {bonds:?}, a {} layer needs {expected:?}",
                    kind.as_str()
                )));
            }
            for g in &layer {
                if g.unitary.shape() != [4, 4] || !g.unitary.is_unitary(UNITARY_TOL) {
                    return Err(Error::invalid(format!("gate on bond {} of layer {k} is not a 4x4 unitary", g.left_site)));
                }
            }
            layer_starts.push(gates.len());
            gates.extend(layer);
        }
        Ok(Self { num_sites, kind, gates, layer_starts })
    }

    /// Concatenate circuits of the same kind and size; `parts[0]` acts first.
    pub fn concat(parts: &[&StaircaseCircuit]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        let mut out = Self::empty(first.num_sites, first.kind)?;
        for c in parts {
            if c.num_sites != out.num_sites || c.kind != out.kind {
                return Err(Error::invalid("concatenated circuits must share size and kind"));
            }
            for k in 0..c.num_layers() {
                out.layer_starts.push(out.gates.len());
                out.gates.extend_from_slice(c.layer(k));
            }
        }
        Ok(out)
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    pub fn num_layers(&self) -> usize {
        self.layer_starts.len()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn layer(&self, k: usize) -> &[Gate] {
        let start = self.layer_starts[k];
        let end = self.layer_starts.get(k + 1).copied().unwrap_or(self.gates.len());
        &self.gates[start..end]
    }

    /// Index in [`gates`](Self::gates) where each layer starts.
    pub fn layer_boundaries(&self) -> &[usize] {
        &self.layer_starts
    }

    /// Number of two-qubit gates.
    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Replace the unitary of gate `index`.
    pub fn set_unitary(&mut self, index: usize, unitary: ComplexTensor) -> Result<()> {
        crate::error::check_index(index, self.gates.len())?;
        if unitary.shape() != [4, 4] || !unitary.is_unitary(1e-10) {
            return Err(Error::invalid("replacement gate is not a 4x4 unitary"));
        }
        self.gates[index].unitary = unitary;
        Ok(())
    }

    fn check_sites(&self, n: usize) -> Result<()> {
        if n != self.num_sites {
            return Err(Error::dim(format!("circuit has {} sites, state has {n}", self.num_sites)));
        }
        Ok(())
    }

    pub fn apply_to_statevector(&self, psi: &Statevector) -> Result<Statevector> {
        self.check_sites(psi.num_sites())?;
        let mut out = psi.clone();
        for g in &self.gates {
            out.apply_two_site(g.left_site, &g.unitary)?;
        }
        Ok(out)
    }

    /// Exact MPS evolution; fails instead of truncating when `chi_max` is too small.
    pub fn apply_to_mps(&self, psi: &MatrixProductState) -> Result<MatrixProductState> {
        self.check_sites(psi.num_sites())?;
        let mut out = psi.clone();
        for g in &self.gates {
            let w = out.apply_two_site_gate(g.left_site, &g.unitary)?;
            if w > EXACT_WEIGHT_TOL {
                return Err(Error::capability(format!(
                    "chi_max = {} truncates the circuit output (discarded weight {w:.3e}); a {}-layer staircase needs 2^{}",
                    psi.chi_max(),
                    self.num_layers(),
                    self.num_layers()
                )));
            }
        }
        Ok(out)
    }

    pub fn apply_to_state(&self, state: &CircuitState) -> Result<CircuitState> {
        match state {
            CircuitState::Statevector(s) => self.apply_to_statevector(s).map(CircuitState::Statevector),
            CircuitState::Mps(m) => self.apply_to_mps(m).map(CircuitState::Mps),
        }
    }

    /// Exact MPO of the circuit unitary with bond dimension at most `kappa_budget`.
    pub fn to_mpo(&self, kappa_budget: usize) -> Result<MatrixProductOperator> {
        let needed = 4usize.saturating_pow(self.num_layers() as u32);
        let cap = 4usize.saturating_pow((self.num_sites / 2) as u32);
        if self.kind == CircuitKind::Staircase && kappa_budget < needed.min(cap) {
            return Err(Error::capability(format!(
                "kappa budget {kappa_budget} is below 4^{} needed by the circuit",
                self.num_layers()
            )));
        }
        let mut u = MatrixProductOperator::identity(self.num_sites, kappa_budget)?;
        for g in &self.gates {
            let w = u.apply_gate(g.left_site, &g.unitary, Side::Left)?;
            if w > EXACT_WEIGHT_TOL * 2f64.powi(self.num_sites as i32) {
                return Err(Error::capability(format!("kappa budget {kappa_budget} truncates the circuit (discarded weight {w:.3e})")));
            }
        }
        Ok(u)
    }

    /// Dense `2^L × 2^L` unitary (small chains only).
    pub fn to_dense(&self) -> Result<ComplexTensor> {
        crate::statevector::check_dense(self.num_sites, 10)?;
        let mut u = ComplexTensor::identity(1 << self.num_sites);
        for g in &self.gates {
            u = embed_two_site(self.num_sites, g.left_site, &g.unitary)?.matmul(&u)?;
        }
        Ok(u)
    }

    pub fn to_json(&self) -> Value {
        let layers: Vec<Value> = (0..self.num_layers())
            .map(|k| {
                Value::Array(
                    self.layer(k)
                        .iter()
                        .map(|g| {
                            let u: Vec<Value> = g.unitary.data().iter().map(|z| json!([z.re, z.im])).collect();
                            json!({ "sites": [g.left_site, g.left_site + 1], "u": u })
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "version": "1", "L": self.num_sites, "kind": self.kind.as_str(), "layers": layers })
    }

    pub fn serialize(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.to_json()).expect("JSON values always serialize")
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let doc: Value = serde_json::from_slice(bytes).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_json(&doc)
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let obj = doc.as_object().ok_or_else(|| Error::parse("$", "expected a JSON object"))?;
        let field = |name: &str| obj.get(name).ok_or_else(|| Error::parse("$", format!("missing field \"{name}\"")));
        match field("version")?.as_str() {
            Some("1") => {}
            Some(v) => {
                return Err(Error::parse(
                    "$.version",
                    format!("unsupported circuit version \"{v}\"; this build reads version \"1\", upgrade qmpso to read newer files"),
                ))
            }
            None => return Err(Error::parse("$.version", "expected a string")),
        }
        let num_sites = field("L")?.as_u64().ok_or_else(|| Error::parse("$.L", "expected a non-negative integer"))? as usize;
        let kind = match field("kind")?.as_str() {
            Some("staircase") => CircuitKind::Staircase,
            Some("brickwork") => CircuitKind::Brickwork,
            _ => return Err(Error::parse("$.kind", "expected \"staircase\" or \"brickwork\"")),
        };
        let layers_json = field("layers")?.as_array().ok_or_else(|| Error::parse("$.layers", "expected an array"))?;
        let mut layers = Vec::with_capacity(layers_json.len());
        for (k, layer) in layers_json.iter().enumerate() {
            let loc = format!("$.layers[{k}]");
            let gates_json = layer.as_array().ok_or_else(|| Error::parse(&loc, "expected an array of gates"))?;
            let mut gates = Vec::with_capacity(gates_json.len());
            for (j, g) in gates_json.iter().enumerate() {
                gates.push(parse_gate(g, &format!("{loc}[{j}]"))?);
            }
            layers.push(gates);
        }
        Self::from_layers(num_sites, kind, layers)
    }
}

fn parse_gate(g: &Value, loc: &str) -> Result<Gate> {
    let obj = g.as_object().ok_or_else(|| Error::parse(loc, "expected a gate object"))?;
    let sites = obj
        .get("sites")
        .ok_or_else(|| Error::parse(loc, "missing field \"sites\""))?
        .as_array()
        .filter(|a| a.len() == 2)
        .and_then(|a| Some((a[0].as_u64()? as usize, a[1].as_u64()? as usize)))
        .ok_or_else(|| Error::parse(format!("{loc}.sites"), "expected [i, i+1]"))?;
    if sites.1 != sites.0 + 1 {
        return Err(Error::parse(format!("{loc}.sites"), "gate sites must be adjacent and ascending"));
    }
    let u = obj
        .get("u")
        .ok_or_else(|| Error::parse(loc, "missing field \"u\""))?
        .as_array()
        .filter(|a| a.len() == 16)
        .ok_or_else(|| Error::parse(format!("{loc}.u"), "expected 16 complex entries"))?;
    let mut data = vec![ZERO; 16];
    for (i, z) in u.iter().enumerate() {
        let pair = z
            .as_array()
            .filter(|p| p.len() == 2)
            .and_then(|p| Some(C64::new(p[0].as_f64()?, p[1].as_f64()?)))
            .ok_or_else(|| Error::parse(format!("{loc}.u[{i}]"), "expected [re, im]"))?;
        data[i] = pair;
    }
    Ok(Gate { left_site: sites.0, unitary: ComplexTensor::matrix(4, 4, data)? })
}

/// Input or output of [`StaircaseCircuit::apply_to_state`].
#[derive(Clone, Debug)]
pub enum CircuitState {
    Statevector(Statevector),
    Mps(MatrixProductState),
}

impl CircuitState {
    pub fn to_statevector(&self) -> Result<Statevector> {
        match self {
            CircuitState::Statevector(s) => Ok(s.clone()),
            CircuitState::Mps(m) => m.to_statevector(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::neel_product_state;
    use crate::mpo::frobenius_fidelity;

    #[test]
    fn identity_staircase_is_trivial() {
        let c = StaircaseCircuit::new_staircase(4, 2, Init::Identity).unwrap();
        assert_eq!(c.gate_count(), 6);
        let psi = Statevector::from_product(&neel_product_state(4)).unwrap();
        assert_eq!(c.apply_to_statevector(&psi).unwrap(), psi);
        let m = c.to_mpo(16).unwrap();
        assert!(m.to_dense().unwrap().max_abs_diff(&ComplexTensor::identity(16)) < 1e-14);
    }

    #[test]
    fn gate_counts() {
        assert_eq!(StaircaseCircuit::empty(5, CircuitKind::Staircase).unwrap().gate_count(), 0);
        assert_eq!(StaircaseCircuit::new_staircase(12, 3, Init::Identity).unwrap().gate_count(), 33);
        let p = TfimParams::critical(6, 0.1);
        assert_eq!(StaircaseCircuit::trotter(&p, 7).unwrap().gate_count(), 35);
    }

    #[test]
    fn seeded_random_init_is_reproducible() {
        let a = StaircaseCircuit::new_staircase(5, 2, Init::RandomUnitary(9)).unwrap();
        let b = StaircaseCircuit::new_staircase(5, 2, Init::RandomUnitary(9)).unwrap();
        let c = StaircaseCircuit::new_staircase(5, 2, Init::RandomUnitary(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn one_layer_output_has_bond_two() {
        let c = StaircaseCircuit::new_staircase(6, 1, Init::RandomUnitary(1)).unwrap();
        let psi = MatrixProductState::from_product(&neel_product_state(6), 2).unwrap();
        let out = c.apply_to_mps(&psi).unwrap();
        assert!(out.bond_dims().iter().all(|&b| b <= 2));
    }

    #[test]
    fn mps_and_statevector_paths_agree() {
        let c = StaircaseCircuit::new_staircase(8, 3, Init::RandomUnitary(2)).unwrap();
        let labels = neel_product_state(8);
        let mps = c.apply_to_mps(&MatrixProductState::from_product(&labels, 8).unwrap()).unwrap();
        let sv = c.apply_to_statevector(&Statevector::from_product(&labels).unwrap()).unwrap();
        assert!(mps.to_statevector().unwrap().to_tensor().max_abs_diff(&sv.to_tensor()) < 1e-11);
        assert!((sv.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncating_mps_path_is_an_error() {
        let c = StaircaseCircuit::new_staircase(8, 3, Init::RandomUnitary(2)).unwrap();
        let psi = MatrixProductState::from_product(&neel_product_state(8), 4).unwrap();
        assert!(matches!(c.apply_to_mps(&psi), Err(Error::Capability(_))));
    }

    #[test]
    fn mpo_matches_dense_product() {
        let c = StaircaseCircuit::new_staircase(4, 1, Init::RandomUnitary(3)).unwrap();
        let m = c.to_mpo(4).unwrap();
        assert!(m.to_dense().unwrap().max_abs_diff(&c.to_dense().unwrap()) < 1e-12);
        let c2 = StaircaseCircuit::new_staircase(6, 2, Init::RandomUnitary(4)).unwrap();
        let m2 = c2.to_mpo(16).unwrap();
        assert!(m2.bond_dims().iter().all(|&k| k <= 16));
        assert!((frobenius_fidelity(&m2, &m2).unwrap().re - 1.0).abs() < 1e-10);
        assert!(matches!(c2.to_mpo(4), Err(Error::Capability(_))));
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let c = StaircaseCircuit::new_staircase(5, 2, Init::RandomUnitary(5)).unwrap();
        let back = StaircaseCircuit::deserialize(&c.serialize()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn json_schema_errors() {
        let c = StaircaseCircuit::new_staircase(3, 1, Init::Identity).unwrap();
        let mut doc = c.to_json();
        doc.as_object_mut().unwrap().remove("layers");
        let err = StaircaseCircuit::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("\"layers\""), "{err}");

        let mut doc = c.to_json();
        doc["version"] = json!("2");
        let err = StaircaseCircuit::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("upgrade"), "{err}");

        let mut doc = c.to_json();
        doc["layers"][0][1]["u"] = json!([[1.0, 0.0]]);
        let err = StaircaseCircuit::from_json(&doc).unwrap_err();
        assert!(err.to_string().contains("$.layers[0][1].u"), "{err}");

        assert!(matches!(StaircaseCircuit::deserialize(b"{ nope"), Err(Error::Parse { .. })));
    }

    #[test]
    fn layer_structure_is_validated() {
        let g = |b| Gate { left_site: b, unitary: ComplexTensor::identity(4) };
        assert!(StaircaseCircuit::from_layers(4, CircuitKind::Staircase, vec![vec![g(0), g(2), g(1)]]).is_err());
        assert!(StaircaseCircuit::from_layers(4, CircuitKind::Brickwork, vec![vec![g(0), g(2), g(1)]]).is_ok());
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert!(haar_unitary(4, &mut rng).is_unitary(1e-13));
        }
    }
}
