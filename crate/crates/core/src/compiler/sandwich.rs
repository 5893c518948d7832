//! Column-boundary contraction of `overlap = Σ W · C` for staircase circuits.
//!
//! Every site carries a tensor `W[b, y, x, b']` pairing the circuit output
//! `y` and input `x` with the fixed part of the overlap (target and initial
//! state for QMPS, the conjugated target operator for QMPO). Column `c`
//! holds the gates on sites `(c, c + 1)`, one per layer.
//!
//! A left boundary at column `c` has the bond leg plus, for every layer,
//! the (input, output) legs of the column's gate on site `c`. A right
//! boundary has the bond leg plus the gate legs on site `c + 1`. Pair `m`
//! is flattened as `2·in + out` and pair 1 is the most significant.

use crate::circuit::StaircaseCircuit;
use crate::error::{Error, Result};
use crate::mpo::MatrixProductOperator;
use crate::mps::MatrixProductState;
use crate::tensor::{contract, ComplexTensor, C64, ZERO};

pub(crate) struct Sandwich {
    /// `[b, y, x, b']` per site.
    w: Vec<ComplexTensor>,
    layers: usize,
}

/// Boundary tensor `[bond, 4^D]`.
type Boundary = ComplexTensor;

impl Sandwich {
    /// `<target| C |psi0>`.
    pub fn qmps(target: &MatrixProductState, psi0: &MatrixProductState, layers: usize) -> Result<Self> {
        if target.num_sites() != psi0.num_sites() {
            return Err(Error::dim(format!(
                "target has {} sites, initial state {}",
                target.num_sites(),
                psi0.num_sites()
            )));
        }
        let w = target
            .site_tensors()
            .iter()
            .zip(psi0.site_tensors())
            .map(|(phi, psi)| {
                let (pl, pr) = (phi.shape()[0], phi.shape()[2]);
                let (ql, qr) = (psi.shape()[0], psi.shape()[2]);
                let mut out = ComplexTensor::zeros(vec![pl * ql, 2, 2, pr * qr]);
                let data = out.data_mut();
                for a in 0..pl {
                    for c in 0..ql {
                        for y in 0..2 {
                            for x in 0..2 {
                                for b in 0..pr {
                                    let f = phi.get(&[a, y, b]).conj();
                                    if f == ZERO {
                                        continue;
                                    }
                                    for d in 0..qr {
                                        let idx = (((a * ql + c) * 2 + y) * 2 + x) * pr * qr + b * qr + d;
                                        data[idx] = f * psi.get(&[c, x, d]);
                                    }
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Self::new(w, layers)
    }

    /// `Tr(T† C) / 2^L`.
    pub fn qmpo(target: &MatrixProductOperator, layers: usize) -> Result<Self> {
        let w = target.site_tensors().iter().map(|t| t.conj().scale(C64::new(0.5, 0.0))).collect();
        Self::new(w, layers)
    }

    fn new(w: Vec<ComplexTensor>, layers: usize) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::invalid("circuit compilation needs at least 2 sites"));
        }
        if layers == 0 {
            return Err(Error::invalid("circuit compilation needs at least one layer"));
        }
        Ok(Self { w, layers })
    }

    pub fn num_sites(&self) -> usize {
        self.w.len()
    }

    pub fn scale_first(&mut self, factor: C64) {
        self.w[0].scale_mut(factor);
    }

    fn pairs(&self) -> usize {
        1 << (2 * self.layers)
    }

    /// Index of the gate in column `c`, layer `m` (0-based) of a staircase circuit.
    pub fn gate_index(&self, c: usize, m: usize) -> usize {
        m * (self.num_sites() - 1) + c
    }

    pub fn check_circuit(&self, circuit: &StaircaseCircuit) -> Result<()> {
        if circuit.num_sites() != self.num_sites() {
            return Err(Error::dim(format!(
                "circuit has {} sites, overlap network {}",
                circuit.num_sites(),
                self.num_sites()
            )));
        }
        if circuit.kind() != crate::circuit::CircuitKind::Staircase || circuit.num_layers() != self.layers {
            return Err(Error::invalid(format!(
                "expected a {}-layer staircase circuit, got {} {} layers",
                self.layers,
                circuit.num_layers(),
                circuit.kind().as_str()
            )));
        }
        Ok(())
    }

    /// Boundary whose chained legs identify consecutive wire segments of one site.
    fn chained(&self, bond: usize, entry: impl Fn(usize, usize, usize) -> C64) -> Boundary {
        let d = self.layers;
        let mut out = ComplexTensor::zeros(vec![bond, self.pairs()]);
        let cols = self.pairs();
        for b in 0..bond {
            for x in 0..2 {
                for y in 0..2 {
                    for s in 0..(1usize << (d - 1)) {
                        // legs: (x, s_1, s_1, s_2, ..., s_{D-1}, y)
                        let mut idx = x;
                        for k in (0..d - 1).rev() {
                            let bit = (s >> k) & 1;
                            idx = (idx << 2) | (bit << 1) | bit;
                        }
                        idx = (idx << 1) | y;
                        out.data_mut()[b * cols + idx] = entry(b, y, x);
                    }
                }
            }
        }
        out
    }

    /// Left boundary of column 0.
    pub fn left_init(&self) -> Boundary {
        let w0 = &self.w[0];
        let bond = w0.shape()[3];
        self.chained(bond, |b, y, x| w0.get(&[0, y, x, b]))
    }

    /// Right boundary of the last column.
    pub fn right_init(&self) -> Boundary {
        let wl = &self.w[self.num_sites() - 1];
        let bond = wl.shape()[0];
        self.chained(bond, |b, y, x| wl.get(&[b, y, x, 0]))
    }

    /// Map pair `m` of a boundary through a 4×4 linear map (rows: new pair index).
    fn map_pair(&self, t: &Boundary, m: usize, map: &ComplexTensor) -> Boundary {
        let bond = t.rows();
        let before = bond * (1 << (2 * m));
        let after = 1 << (2 * (self.layers - m - 1));
        let view = t.clone().reshape(vec![before, 4, after]).expect("boundary layout");
        crate::chain::apply_middle(&view, before, 4, after, map).reshape(vec![bond, self.pairs()]).expect("boundary layout")
    }

    /// `(in, out)` of the left qubit to `(in, out)` of the right qubit.
    pub fn left_to_right(g: &ComplexTensor) -> ComplexTensor {
        let mut m = ComplexTensor::zeros(vec![4, 4]);
        for i1 in 0..2 {
            for o1 in 0..2 {
                for i2 in 0..2 {
                    for o2 in 0..2 {
                        m.set(2 * i2 + o2, 2 * i1 + o1, g.at(2 * o1 + o2, 2 * i1 + i2));
                    }
                }
            }
        }
        m
    }

    /// `(in, out)` of the right qubit to `(in, out)` of the left qubit.
    pub fn right_to_left(g: &ComplexTensor) -> ComplexTensor {
        let mut m = ComplexTensor::zeros(vec![4, 4]);
        for i1 in 0..2 {
            for o1 in 0..2 {
                for i2 in 0..2 {
                    for o2 in 0..2 {
                        m.set(2 * i1 + o1, 2 * i2 + o2, g.at(2 * o1 + o2, 2 * i1 + i2));
                    }
                }
            }
        }
        m
    }

    /// Absorb the column-`c` gates of every layer except `skip` into a left boundary.
    pub fn absorb_left(&self, l: &Boundary, circuit: &StaircaseCircuit, c: usize, skip: Option<usize>) -> Boundary {
        let mut t = l.clone();
        for m in (0..self.layers).filter(|&m| Some(m) != skip) {
            let g = &circuit.gates()[self.gate_index(c, m)].unitary;
            t = self.map_pair(&t, m, &Self::left_to_right(g));
        }
        t
    }

    pub fn absorb_right(&self, r: &Boundary, circuit: &StaircaseCircuit, c: usize) -> Boundary {
        let mut t = r.clone();
        for m in 0..self.layers {
            let g = &circuit.gates()[self.gate_index(c, m)].unitary;
            t = self.map_pair(&t, m, &Self::right_to_left(g));
        }
        t
    }

    /// Left boundary of column `c + 1` from the gate-absorbed boundary of column `c`.
    pub fn transfer_left(&self, absorbed: &Boundary, c: usize) -> Boundary {
        let w = &self.w[c + 1];
        let (bond, new_bond) = (w.shape()[0], w.shape()[3]);
        let half = self.pairs() / 2;
        let t = absorbed.clone().reshape(vec![bond, 2, half]).expect("layout");
        // [rest, y, b']
        let r = contract(&t, w, &[(0, 0), (1, 2)]).expect("matching bond");
        r.permute(&[2, 0, 1]).expect("perm").reshape(vec![new_bond, self.pairs()]).expect("layout")
    }

    /// Right boundary of column `c - 1` from the gate-absorbed right boundary of column `c`.
    pub fn transfer_right(&self, absorbed: &Boundary, c: usize) -> Boundary {
        let w = &self.w[c];
        let (new_bond, bond) = (w.shape()[0], w.shape()[3]);
        let half = self.pairs() / 2;
        let t = absorbed.clone().reshape(vec![bond, half, 2]).expect("layout");
        // [b_new, x, rest]
        contract(w, &t, &[(3, 0), (1, 2)]).expect("matching bond").reshape(vec![new_bond, self.pairs()]).expect("layout")
    }

    /// All right boundaries, indexed by column.
    pub fn right_boundaries(&self, circuit: &StaircaseCircuit) -> Vec<Boundary> {
        let cols = self.num_sites() - 1;
        let mut out = vec![ComplexTensor::zeros(vec![1, 1]); cols];
        out[cols - 1] = self.right_init();
        for c in (1..cols).rev() {
            let absorbed = self.absorb_right(&out[c], circuit, c);
            out[c - 1] = self.transfer_right(&absorbed, c);
        }
        out
    }

    /// Environment of the column-`c`, layer-`m` gate given the column's
    /// left boundary and right boundary. Rows: input pair, columns: output pair.
    pub fn environment(&self, l: &Boundary, r: &Boundary, circuit: &StaircaseCircuit, c: usize, m: usize) -> ComplexTensor {
        let t = self.absorb_left(l, circuit, c, Some(m));
        let shape: Vec<usize> = std::iter::once(l.rows()).chain(std::iter::repeat_n(4, self.layers)).collect();
        let t = t.reshape(shape.clone()).expect("layout");
        let r = r.clone().reshape(shape).expect("layout");
        let axes: Vec<(usize, usize)> =
            std::iter::once((0, 0)).chain((0..self.layers).filter(|&k| k != m).map(|k| (k + 1, k + 1))).collect();
        // x[(i1, o1), (i2, o2)]
        let x = contract(&t, &r, &axes).expect("matching boundaries");
        let mut e = ComplexTensor::zeros(vec![4, 4]);
        for i1 in 0..2 {
            for o1 in 0..2 {
                for i2 in 0..2 {
                    for o2 in 0..2 {
                        e.set(2 * i1 + i2, 2 * o1 + o2, x.at(2 * i1 + o1, 2 * i2 + o2));
                    }
                }
            }
        }
        e
    }

    /// Environment of gate `k` computed from scratch.
    pub fn environment_of(&self, circuit: &StaircaseCircuit, k: usize) -> Result<ComplexTensor> {
        self.check_circuit(circuit)?;
        crate::error::check_index(k, circuit.gate_count())?;
        let cols = self.num_sites() - 1;
        let (m, c) = (k / cols, k % cols);
        let rs = self.right_boundaries(circuit);
        let mut l = self.left_init();
        for col in 0..c {
            let absorbed = self.absorb_left(&l, circuit, col, None);
            l = self.transfer_left(&absorbed, col);
        }
        Ok(self.environment(&l, &rs[c], circuit, c, m))
    }

    /// Full overlap of the network with the given circuit.
    pub fn overlap(&self, circuit: &StaircaseCircuit) -> Result<C64> {
        let e = self.environment_of(circuit, 0)?;
        Ok(trace_product(&e, &circuit.gates()[0].unitary))
    }
}

/// `Tr(E g)`.
pub(crate) fn trace_product(e: &ComplexTensor, g: &ComplexTensor) -> C64 {
    let mut s = ZERO;
    for r in 0..4 {
        for c in 0..4 {
            s += e.at(r, c) * g.at(c, r);
        }
    }
    s
}
