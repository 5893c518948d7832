//! Canonical (KAK) decomposition of two-qubit unitaries into
//! single-qubit rotations around an `exp(-i(a XX + b YY + c ZZ))` core.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{pauli, ComplexTensor, C64, I, ONE, ZERO};

#[derive(Clone, Debug)]
pub struct KakFactors {
    /// `(left qubit, right qubit)` rotations applied first.
    pub pre_rotations: [ComplexTensor; 2],
    /// `(θ_xx, θ_yy, θ_zz)` with `π/4 ≥ θ_xx ≥ θ_yy ≥ |θ_zz|`.
    pub canonical_angles: [f64; 3],
    /// `(left qubit, right qubit)` rotations applied last.
    pub post_rotations: [ComplexTensor; 2],
    pub global_phase: C64,
}

/// `exp(-i(a XX + b YY + c ZZ))`.
pub fn canonical_gate(a: f64, b: f64, c: f64) -> ComplexTensor {
    // XX, YY, ZZ commute, so the exponential factorizes
    let f = |theta: f64, p: ComplexTensor| {
        let pp = p.kron(&p);
        ComplexTensor::identity(4)
            .scale(C64::new(theta.cos(), 0.0))
            .add_scaled(&pp, C64::new(0.0, -theta.sin()))
            .expect("4x4")
    };
    f(a, pauli::x()).matmul(&f(b, pauli::y())).and_then(|m| m.matmul(&f(c, pauli::z()))).expect("4x4")
}

impl KakFactors {
    pub fn reconstruct(&self) -> ComplexTensor {
        let [a, b, c] = self.canonical_angles;
        let pre = self.pre_rotations[0].kron(&self.pre_rotations[1]);
        let post = self.post_rotations[0].kron(&self.post_rotations[1]);
        post.matmul(&canonical_gate(a, b, c))
            .and_then(|m| m.matmul(&pre))
            .expect("4x4")
            .scale(self.global_phase)
    }
}

fn magic_basis() -> ComplexTensor {
    let h = 1.0 / 2f64.sqrt();
    let r = C64::new(h, 0.0);
    let i = C64::new(0.0, h);
    ComplexTensor::from_parts(
        vec![4, 4],
        vec![r, i, ZERO, ZERO, ZERO, ZERO, i, r, ZERO, ZERO, i, -r, r, -i, ZERO, ZERO],
    )
}

fn determinant(u: &ComplexTensor) -> C64 {
    Matrix4::from_row_slice(u.data()).determinant()
}

/// Real orthogonal `P` (det +1) with `Pᵀ M P` diagonal, for complex symmetric
/// `M` whose real and imaginary parts commute.
fn simultaneous_diagonalizer(m: &ComplexTensor) -> Result<DMatrix<f64>> {
    let re = DMatrix::from_fn(4, 4, |i, j| m.at(i, j).re);
    let im = DMatrix::from_fn(4, 4, |i, j| m.at(i, j).im);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_6b);
    for _ in 0..100 {
        let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let eig = SymmetricEigen::new(&re * x + &im * y);
        let mut p = eig.eigenvectors;
        if p.determinant() < 0.0 {
            p.column_mut(0).neg_mut();
        }
        let d_re = p.transpose() * &re * &p;
        let d_im = p.transpose() * &im * &p;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d_re[(i, j)].hypot(d_im[(i, j)]))
            .fold(0.0, f64::max);
        if off < 1e-10 {
            return Ok(p);
        }
    }
    Err(Error::Numeric("could not diagonalize the magic-basis Gram matrix".into()))
}

/// `K = scalar · (A ⊗ C)` with `A, C ∈ SU(2)`.
fn factor_kron(k: &ComplexTensor) -> Result<(C64, ComplexTensor, ComplexTensor)> {
    let block = |i: usize, j: usize| {
        ComplexTensor::from_parts(
            vec![2, 2],
            vec![k.at(2 * i, 2 * j), k.at(2 * i, 2 * j + 1), k.at(2 * i + 1, 2 * j), k.at(2 * i + 1, 2 * j + 1)],
        )
    };
    let (mut best, mut best_norm) = ((0, 0), -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).norm_sqr();
            if n > best_norm {
                best = (i, j);
                best_norm = n;
            }
        }
    }
    let bk = block(best.0, best.1);
    let det = bk.at(0, 0) * bk.at(1, 1) - bk.at(0, 1) * bk.at(1, 0);
    let c = bk.scale(det.sqrt().inv());
    let mut a = ComplexTensor::zeros(vec![2, 2]);
    for i in 0..2 {
        for j in 0..2 {
            let bij = block(i, j);
            let s: C64 = c.data().iter().zip(bij.data()).map(|(x, y)| x.conj() * y).sum();
            a.set(i, j, s / 2.0);
        }
    }
    let det_a = a.at(0, 0) * a.at(1, 1) - a.at(0, 1) * a.at(1, 0);
    let root = det_a.sqrt();
    let a = a.scale(root.inv());
    let err = a.kron(&c).scale(root).max_abs_diff(k);
    if err > 1e-9 {
        return Err(Error::Numeric(format!("local factor is not a tensor product (error {err:.3e})")));
    }
    Ok((root, a, c))
}

struct Reduction {
    angles: [f64; 3],
    pre: ComplexTensor,
    post: ComplexTensor,
    phase: C64,
}

impl Reduction {
    /// Shift angle `k` by `n·π/2`, compensating with the matching Pauli pair.
    fn shift(&mut self, k: usize, n: i64) {
        if n == 0 {
            return;
        }
        let p = [pauli::x(), pauli::y(), pauli::z()][k].clone();
        let pp = p.kron(&p);
        // N(θ) = N(θ + nπ/2) · exp(+i nπ/2 PP) and exp(iπ/2 PP) = i PP
        let i_pow = [ONE, I, -ONE, -I][n.rem_euclid(4) as usize];
        if n.rem_euclid(2) == 1 {
            self.pre = pp.matmul(&self.pre).expect("4x4");
        }
        self.phase *= i_pow;
        self.angles[k] += n as f64 * FRAC_PI_2;
    }

    /// Conjugate by `L = l ⊗ l` so that `N(old) = L† N(new) L`.
    fn relabel(&mut self, l: &ComplexTensor, new_angles: [f64; 3]) {
        let ll = l.kron(l);
        self.pre = ll.matmul(&self.pre).expect("4x4");
        self.post = self.post.matmul(&ll.dagger()).expect("4x4");
        self.angles = new_angles;
    }

    fn swap_ab(&mut self) {
        let s = ComplexTensor::diagonal(&[ONE, I]);
        let [a, b, c] = self.angles;
        self.relabel(&s, [b, a, c]);
    }

    fn swap_ac(&mut self) {
        let h = 1.0 / 2f64.sqrt();
        let had = ComplexTensor::from_real_matrix(2, 2, &[h, h, h, -h]).expect("2x2");
        let [a, b, c] = self.angles;
        self.relabel(&had, [c, b, a]);
    }

    fn swap_bc(&mut self) {
        self.swap_ab();
        self.swap_ac();
        self.swap_ab();
    }

    /// Negate the two angles other than `keep` using a single-qubit Pauli on the left qubit.
    fn flip_pair(&mut self, keep: usize) {
        let p = [pauli::x(), pauli::y(), pauli::z()][keep].clone();
        let pi = p.kron(&pauli::id());
        self.pre = pi.matmul(&self.pre).expect("4x4");
        self.post = self.post.matmul(&pi).expect("4x4");
        for k in 0..3 {
            if k != keep {
                self.angles[k] = -self.angles[k];
            }
        }
    }

    fn into_weyl_chamber(&mut self) {
        for k in 0..3 {
            // bring into (-π/4, π/4]
            let n = -((self.angles[k] - FRAC_PI_4) / FRAC_PI_2).ceil() as i64;
            self.shift(k, n);
        }
        let mag = |r: &Reduction, k: usize| r.angles[k].abs();
        if mag(self, 1) > mag(self, 0) {
            self.swap_ab();
        }
        if mag(self, 2) > mag(self, 0) {
            self.swap_ac();
        }
        if mag(self, 2) > mag(self, 1) {
            self.swap_bc();
        }
        let [a, b, _] = self.angles;
        if a < 0.0 && b < 0.0 {
            self.flip_pair(2);
        } else if a < 0.0 {
            self.flip_pair(1);
        } else if b < 0.0 {
            self.flip_pair(0);
        }
    }
}

/// Decompose a two-qubit unitary as
/// `phase · (post₀ ⊗ post₁) · exp(-i(a XX + b YY + c ZZ)) · (pre₀ ⊗ pre₁)`.
pub fn kak_decompose(u: &ComplexTensor) -> Result<KakFactors> {
    if u.shape() != [4, 4] || !u.is_finite() {
        return Err(Error::invalid("KAK decomposition needs a finite 4x4 matrix"));
    }
    if !u.is_unitary(1e-9) {
        return Err(Error::invalid("KAK decomposition needs a unitary matrix"));
    }
    let det = determinant(u);
    let phase0 = (det.ln() / 4.0).exp();
    let su = u.scale(phase0.inv());

    let b = magic_basis();
    let m = b.dagger().matmul(&su)?.matmul(&b)?;
    let m2 = m.transpose().matmul(&m)?;
    let p = simultaneous_diagonalizer(&m2)?;
    let pc = ComplexTensor::from_parts(vec![4, 4], (0..16).map(|k| C64::new(p[(k / 4, k % 4)], 0.0)).collect());
    let d2 = pc.transpose().matmul(&m2)?.matmul(&pc)?;

    let mut d: Vec<f64> = (0..4).map(|k| -d2.at(k, k).arg() / 2.0).collect();
    d[3] = -(d[0] + d[1] + d[2]);
    let inv_delta = ComplexTensor::diagonal(&d.iter().map(|&x| C64::new(0.0, x).exp()).collect::<Vec<_>>());
    let o1 = m.matmul(&pc)?.matmul(&inv_delta)?;
    let o1 = ComplexTensor::from_parts(vec![4, 4], o1.data().iter().map(|z| C64::new(z.re, 0.0)).collect());

    // eigenvalue patterns of XX, YY, ZZ in the magic basis
    let pattern = |p: ComplexTensor| -> Vec<f64> {
        let diag = b.dagger().matmul(&p.kron(&p)).and_then(|x| x.matmul(&b)).expect("4x4");
        (0..4).map(|k| diag.at(k, k).re).collect()
    };
    let dot = |v: &[f64]| v.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>() / 4.0;
    let angles = [dot(&pattern(pauli::x())), dot(&pattern(pauli::y())), dot(&pattern(pauli::z()))];

    let mut red = Reduction {
        angles,
        pre: b.matmul(&pc.transpose())?.matmul(&b.dagger())?,
        post: b.matmul(&o1)?.matmul(&b.dagger())?,
        phase: phase0,
    };
    red.into_weyl_chamber();

    let (s_pre, pre0, pre1) = factor_kron(&red.pre)?;
    let (s_post, post0, post1) = factor_kron(&red.post)?;
    let out = KakFactors {
        pre_rotations: [pre0, pre1],
        canonical_angles: red.angles,
        post_rotations: [post0, post1],
        global_phase: red.phase * s_pre * s_post,
    };
    let err = out.reconstruct().max_abs_diff(u);
    if err > 1e-8 {
        return Err(Error::Numeric(format!("KAK reconstruction error {err:.3e}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::haar_unitary;

    fn in_chamber(a: [f64; 3]) -> bool {
        let eps = 1e-12;
        FRAC_PI_4 + eps >= a[0] && a[0] + eps >= a[1] && a[1] + eps >= a[2].abs()
    }

    #[test]
    fn identity_has_zero_angles() {
        let k = kak_decompose(&ComplexTensor::identity(4)).unwrap();
        assert!(k.canonical_angles.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn cnot_angles() {
        let mut cnot = ComplexTensor::zeros(vec![4, 4]);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot.set(r, c, ONE);
        }
        let k = kak_decompose(&cnot).unwrap();
        let [a, b, c] = k.canonical_angles;
        assert!((a - FRAC_PI_4).abs() < 1e-9 && b.abs() < 1e-9 && c.abs() < 1e-9, "{:?}", k.canonical_angles);
        assert!(k.reconstruct().max_abs_diff(&cnot) < 1e-10);
    }

    #[test]
    fn canonical_gate_roundtrip() {
        let g = canonical_gate(0.3, -0.2, 0.1);
        let k = kak_decompose(&g).unwrap();
        let [a, b, c] = k.canonical_angles;
        assert!((a - 0.3).abs() < 1e-9 && (b - 0.2).abs() < 1e-9 && (c + 0.1).abs() < 1e-9, "{:?}", k.canonical_angles);
    }

    #[test]
    fn random_unitaries_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let u = haar_unitary(4, &mut rng);
            let k = kak_decompose(&u).unwrap();
            worst = worst.max(k.reconstruct().max_abs_diff(&u));
            assert!(in_chamber(k.canonical_angles), "{:?}", k.canonical_angles);
            assert!((k.global_phase.norm() - 1.0).abs() < 1e-10);
            for r in k.pre_rotations.iter().chain(&k.post_rotations) {
                assert!(r.is_unitary(1e-10));
            }
        }
        assert!(worst < 1e-9, "worst reconstruction error {worst:e}");
    }

    #[test]
    fn rejects_non_unitary() {
        let m = ComplexTensor::identity(4).scale(C64::new(2.0, 0.0));
        assert!(matches!(kak_decompose(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn degenerate_local_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = haar_unitary(2, &mut rng);
        let c = haar_unitary(2, &mut rng);
        let k = kak_decompose(&a.kron(&c)).unwrap();
        assert!(k.canonical_angles.iter().all(|x| x.abs() < 1e-9));
        let swap = ComplexTensor::from_real_matrix(4, 4, &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.]).unwrap();
        let k = kak_decompose(&swap).unwrap();
        assert!(k.canonical_angles.iter().all(|x| (x.abs() - FRAC_PI_4).abs() < 1e-9), "{:?}", k.canonical_angles);
        assert!(k.reconstruct().max_abs_diff(&swap) < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn angles_ignore_local_dressing(seed in 0u64..100_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let u = haar_unitary(4, &mut rng);
                let pre = haar_unitary(2, &mut rng).kron(&haar_unitary(2, &mut rng));
                let post = haar_unitary(2, &mut rng).kron(&haar_unitary(2, &mut rng));
                let dressed = post.matmul(&u).unwrap().matmul(&pre).unwrap();
                let a = kak_decompose(&u).unwrap().canonical_angles;
                let b = kak_decompose(&dressed).unwrap().canonical_angles;
                for k in 0..3 {
                    prop_assert!((a[k] - b[k]).abs() < 1e-9, "{:?} vs {:?}", a, b);
                }
            }
        }
    }
}
