//! Global depolarizing noise and the fidelity, magnetization and entropy metrics built on it.

use serde::{Deserialize, Serialize};

use crate::circuit::StaircaseCircuit;
use crate::error::{check_index, Error, Result};
use crate::statevector::{check_dense, Statevector};
use crate::tensor::{eigh, ComplexTensor, C64};

/// Dense limit for operator entanglement.
pub const OPERATOR_ENTROPY_LIMIT: usize = 10;

/// Fidelities closer than this count as equal when classifying.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Two-qubit gate error rate.
    pub epsilon: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::invalid(format!("error rate must be finite and non-negative, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn alpha(&self, gate_count: usize) -> f64 {
        alpha(self, gate_count)
    }
}

/// `exp(-ε N_g)`.
pub fn alpha(nm: &NoiseModel, gate_count: usize) -> f64 {
    (-nm.epsilon * gate_count as f64).exp()
}

/// `ρ = α |ψ><ψ| + (1 - α) 𝟙 / 2^L`.
#[derive(Clone, Debug)]
pub struct NoisyState {
    pure_part: Statevector,
    alpha: f64,
}

impl NoisyState {
    pub fn new(pure_part: Statevector, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if (pure_part.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("pure part has norm {}", pure_part.norm())));
        }
        Ok(Self { pure_part, alpha })
    }

    /// Output of `circuit` on `psi0` with every two-qubit gate counted by the noise model.
    pub fn from_circuit(nm: &NoiseModel, circuit: &StaircaseCircuit, psi0: &Statevector) -> Result<Self> {
        let pure = circuit.apply_to_statevector(psi0)?;
        Self::new(pure, nm.alpha(circuit.gate_count()))
    }

    pub fn num_sites(&self) -> usize {
        self.pure_part.num_sites()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pure_part(&self) -> &Statevector {
        &self.pure_part
    }

    pub fn density_matrix(&self) -> Result<ComplexTensor> {
        check_dense(self.num_sites(), OPERATOR_ENTROPY_LIMIT)?;
        let n = 1usize << self.num_sites();
        let mut rho = self.pure_part.density_matrix().scale(C64::new(self.alpha, 0.0));
        let mix = (1.0 - self.alpha) / n as f64;
        for i in 0..n {
            rho.set(i, i, rho.at(i, i) + mix);
        }
        Ok(rho)
    }
}

/// `<ref|ρ|ref> = α |<ref|ψ>|² + (1 - α) / 2^L`.
pub fn noisy_fidelity(rho: &NoisyState, reference: &Statevector) -> Result<f64> {
    if reference.num_sites() != rho.num_sites() {
        return Err(Error::dim(format!("reference has {} sites, state {}", reference.num_sites(), rho.num_sites())));
    }
    let overlap = reference.fidelity(&rho.pure_part)?;
    Ok(rho.alpha * overlap + (1.0 - rho.alpha) / (1u64 << rho.num_sites()) as f64)
}

/// `1 - F^(1/L)`.
pub fn infidelity_per_site(fidelity: f64, num_sites: usize) -> Result<f64> {
    if !(-TIE_TOL..=1.0 + TIE_TOL).contains(&fidelity) || num_sites == 0 {
        return Err(Error::invalid(format!("fidelity {fidelity} outside [0, 1] or empty chain")));
    }
    Ok(1.0 - fidelity.clamp(0.0, 1.0).powf(1.0 / num_sites as f64))
}

/// `Tr(ρ Z_site) = α <ψ|Z|ψ>`.
pub fn noisy_expectation_z(rho: &NoisyState, site: usize) -> Result<f64> {
    check_index(site, rho.num_sites())?;
    Ok(rho.alpha * rho.pure_part.expectation_z(site)?)
}

/// Operator entanglement entropy (bits) of a dense `2^L × 2^L` operator across the cut after `cut` sites.
pub fn operator_entropy(rho: &ComplexTensor, num_sites: usize, cut: usize) -> Result<f64> {
    check_dense(num_sites, OPERATOR_ENTROPY_LIMIT)?;
    let n = 1usize << num_sites;
    if rho.shape() != [n, n] {
        return Err(Error::dim(format!("expected a {n}x{n} operator, got {:?}", rho.shape())));
    }
    if cut == 0 || cut >= num_sites {
        return Err(Error::OutOfRange { index: cut, len: num_sites });
    }
    let (da, db) = (1usize << cut, 1usize << (num_sites - cut));
    // R[(i_A, j_A), (i_B, j_B)] = ρ[(i_A, i_B), (j_A, j_B)]
    let r = rho
        .clone()
        .reshape(vec![da, db, da, db])?
        .permute(&[0, 2, 1, 3])?
        .reshape(vec![da * da, db * db])?;
    let gram = if da <= db { r.matmul(&r.dagger())? } else { r.dagger().matmul(&r)? };
    let weights: Vec<f64> = eigh(&gram)?.values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(weights
        .iter()
        .map(|w| w / total)
        .filter(|&p| p >= 1e-15)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0))
}

/// `ε_c(t)`: trapezoidal time average over `[t_start, t]` of `(1/L) Σ_i |z_i - z_i^exact|²`.
///
/// `z_series[k]` and `z_exact[k]` hold the per-site values at `times[k]`.
pub fn cumulated_error(times: &[f64], z_series: &[Vec<f64>], z_exact: &[Vec<f64>], t_start: f64, t: f64) -> Result<f64> {
    if t <= t_start {
        return Err(Error::invalid(format!("end time {t} must exceed start time {t_start}")));
    }
    if z_series.len() != times.len() || z_exact.len() != times.len() {
        return Err(Error::dim("magnetization series and time grid differ in length"));
    }
    let slack = 1e-9;
    let mut pts = Vec::new();
    for (k, &tk) in times.iter().enumerate() {
        if tk < t_start - slack || tk > t + slack {
            continue;
        }
        let (a, b) = (&z_series[k], &z_exact[k]);
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::dim(format!("site counts differ at t={tk}")));
        }
        let v = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
        pts.push((tk, v));
    }
    if pts.len() < 2 {
        return Err(Error::invalid("fewer than two grid points inside the integration window"));
    }
    let integral: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(integral / (pts[pts.len() - 1].0 - pts[0].0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    MpsBest,
    QmpsoAdvantage,
    TrotterAdvantage,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::MpsBest => "mps_best",
            Region::QmpsoAdvantage => "qmpso_advantage",
            Region::TrotterAdvantage => "trotter_advantage",
        }
    }
}

/// Fidelities of the three methods against the same reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MethodFidelities {
    pub mps: f64,
    pub trotter: f64,
    pub qmpso: f64,
}

/// Region of the advantage diagram. Before `t_max_mps` and on ties the MPS wins.
pub fn advantage_classify(t: f64, t_max_mps: f64, f: &MethodFidelities) -> Region {
    if t < t_max_mps - 1e-9 {
        return Region::MpsBest;
    }
    if f.trotter > f.mps + TIE_TOL {
        Region::TrotterAdvantage
    } else if f.qmpso > f.mps + TIE_TOL {
        Region::QmpsoAdvantage
    } else {
        Region::MpsBest
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::neel_product_state;
    use crate::statevector::embed_one_site;
    use crate::tensor::pauli;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(l: usize, seed: u64) -> Statevector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << l).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut s = Statevector::new(l, amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(&NoiseModel::new(0.0).unwrap(), 50), 1.0);
        assert!((alpha(&NoiseModel::new(0.01).unwrap(), 100) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(alpha(&NoiseModel::new(1e-4).unwrap(), 0), 1.0);
        assert!(NoiseModel::new(-1e-3).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let psi = random_state(10, 1);
        let a = (-1.0f64).exp();
        let f = noisy_fidelity(&NoisyState::new(psi.clone(), a).unwrap(), &psi).unwrap();
        assert!((f - (a + (1.0 - a) / 1024.0)).abs() < 1e-12);
        assert!((f - 0.368497).abs() < 1e-6);
        let f1 = noisy_fidelity(&NoisyState::new(psi.clone(), 1.0).unwrap(), &psi).unwrap();
        assert!((f1 - 1.0).abs() < 1e-12);
        let other = random_state(10, 2);
        let f0 = noisy_fidelity(&NoisyState::new(other, 0.0).unwrap(), &psi).unwrap();
        assert!((f0 - 1.0 / 1024.0).abs() < 1e-15);
        assert!(noisy_fidelity(&NoisyState::new(random_state(4, 1), 1.0).unwrap(), &psi).is_err());
    }

    #[test]
    fn infidelity_examples() {
        assert_eq!(infidelity_per_site(1.0, 10).unwrap(), 0.0);
        assert!((infidelity_per_site(0.9, 10).unwrap() - 0.0104807).abs() < 1e-7);
        let (eps, d) = (1e-3, 3.0);
        let l = 200;
        let f = (-eps * d * (l as f64 - 1.0)).exp();
        assert!((infidelity_per_site(f, l).unwrap() - (1.0 - (-eps * d).exp())).abs() < 2e-5);
        assert!(infidelity_per_site(1.5, 4).is_err());
    }

    #[test]
    fn matches_explicit_density_matrix() {
        let l = 6;
        let psi = random_state(l, 7);
        let reference = random_state(l, 8);
        for a in [0.0, 0.3, 0.5, 1.0] {
            let noisy = NoisyState::new(psi.clone(), a).unwrap();
            let mut rho = psi.density_matrix().scale(C64::new(a, 0.0));
            let id = ComplexTensor::identity(64).scale(C64::new((1.0 - a) / 64.0, 0.0));
            rho = rho.add_scaled(&id, C64::new(1.0, 0.0)).unwrap();
            assert!(noisy.density_matrix().unwrap().max_abs_diff(&rho) < 1e-15);
            let dense_f = reference.density_matrix().matmul(&rho).unwrap().trace().re;
            assert!((noisy_fidelity(&noisy, &reference).unwrap() - dense_f).abs() < 1e-12);
            for site in 0..l {
                let z = rho.matmul(&embed_one_site(l, site, &pauli::z()).unwrap()).unwrap().trace().re;
                assert!((noisy_expectation_z(&noisy, site).unwrap() - z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maximally_mixed_has_no_magnetization() {
        let neel = Statevector::from_product(&neel_product_state(4)).unwrap();
        let mixed = NoisyState::new(neel.clone(), 0.0).unwrap();
        assert!((0..4).all(|s| noisy_expectation_z(&mixed, s).unwrap() == 0.0));
        let pure = NoisyState::new(neel, 1.0).unwrap();
        let z: Vec<f64> = (0..4).map(|s| noisy_expectation_z(&pure, s).unwrap()).collect();
        assert_eq!(z, vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn operator_entropy_examples() {
        let mixed = ComplexTensor::identity(64).scale(C64::new(1.0 / 64.0, 0.0));
        assert!(operator_entropy(&mixed, 6, 3).unwrap().abs() < 1e-12);
        let product = Statevector::from_product(&neel_product_state(4)).unwrap().density_matrix();
        assert!(operator_entropy(&product, 4, 2).unwrap().abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Statevector::new(2, vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)]).unwrap();
        assert!((operator_entropy(&bell.density_matrix(), 2, 1).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(operator_entropy(&ComplexTensor::identity(2048), 11, 5), Err(Error::Capability(_))));
    }

    #[test]
    fn operator_entropy_limits_of_mixture() {
        let psi = random_state(6, 5);
        for cut in 1..6 {
            let pure = NoisyState::new(psi.clone(), 1.0).unwrap().density_matrix().unwrap();
            let s = operator_entropy(&pure, 6, cut).unwrap();
            assert!((s - 2.0 * psi.entropy_vn(cut).unwrap()).abs() < 1e-9);
            let mixed = NoisyState::new(psi.clone(), 0.0).unwrap().density_matrix().unwrap();
            assert!(operator_entropy(&mixed, 6, cut).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn cumulated_error_examples() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let exact: Vec<Vec<f64>> = times.iter().map(|t| vec![t.cos(), -t.cos(), 0.5 * t.sin()]).collect();
        assert_eq!(cumulated_error(&times, &exact, &exact, 1.0, 3.0).unwrap(), 0.0);
        let shifted: Vec<Vec<f64>> = exact.iter().map(|z| z.iter().map(|v| v + 0.2).collect()).collect();
        assert!((cumulated_error(&times, &shifted, &exact, 1.0, 3.0).unwrap() - 0.04).abs() < 1e-12);
        // maximally mixed baseline against a direct quadrature
        let zeros = vec![vec![0.0; 3]; times.len()];
        let got = cumulated_error(&times, &zeros, &exact, 1.0, 3.0).unwrap();
        let n = 20_000;
        let f = |t: f64| (2.0 * t.cos().powi(2) + 0.25 * t.sin().powi(2)) / 3.0;
        let h = 2.0 / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * f(1.0 + k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((got - simpson / 2.0).abs() < 2e-3);
        assert!(cumulated_error(&times, &zeros, &exact, 3.0, 3.0).is_err());
    }

    #[test]
    fn classification_rules() {
        let f = |mps, trotter, qmpso| MethodFidelities { mps, trotter, qmpso };
        assert_eq!(advantage_classify(1.0, 2.2, &f(0.1, 0.9, 0.9)), Region::MpsBest);
        assert_eq!(advantage_classify(3.0, 2.2, &f(0.5, 0.4, 0.6)), Region::QmpsoAdvantage);
        assert_eq!(advantage_classify(3.0, 2.2, &f(0.5, 0.7, 0.6)), Region::TrotterAdvantage);
        assert_eq!(advantage_classify(3.0, 2.2, &f(0.5, 0.5, 0.5 + 1e-13)), Region::MpsBest);
        assert_eq!(advantage_classify(3.0, 2.2, &f(0.9, 0.5, 0.6)), Region::MpsBest);
        assert_eq!(Region::QmpsoAdvantage.as_str(), "qmpso_advantage");
    }

    proptest! {
        #[test]
        fn fidelity_affine_in_alpha(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let psi = random_state(4, seed);
            let r = random_state(4, seed + 1);
            let fa = noisy_fidelity(&NoisyState::new(psi.clone(), a).unwrap(), &r).unwrap();
            let fb = noisy_fidelity(&NoisyState::new(psi.clone(), b).unwrap(), &r).unwrap();
            if (a - b).abs() > 1e-6 {
                let slope = (fa - fb) / (a - b);
                prop_assert!((slope - (r.fidelity(&psi).unwrap() - 1.0 / 16.0)).abs() < 1e-8);
            }
        }

        #[test]
        fn infidelity_decreasing(f1 in 0.0f64..1.0, f2 in 0.0f64..1.0, l in 1usize..20) {
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            prop_assert!(infidelity_per_site(lo, l).unwrap() >= infidelity_per_site(hi, l).unwrap());
        }

        #[test]
        fn cumulated_error_site_relabeling(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
            let a: Vec<Vec<f64>> = times.iter().map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let b: Vec<Vec<f64>> = times.iter().map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let perm = [2, 0, 3, 1];
            let pa: Vec<Vec<f64>> = a.iter().map(|z| perm.iter().map(|&i| z[i]).collect()).collect();
            let pb: Vec<Vec<f64>> = b.iter().map(|z| perm.iter().map(|&i| z[i]).collect()).collect();
            let x = cumulated_error(&times, &a, &b, 0.0, 1.0).unwrap();
            let y = cumulated_error(&times, &pa, &pb, 0.0, 1.0).unwrap();
            prop_assert!((x - y).abs() < 1e-14);
        }
    }
}
