//! Canonical distributions `e^{-βH}/Z` and inverse-temperature solving.

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::operator::{HermitianOperator, Spectrum};

/// Largest accepted `β (E_max - E_min)` before the shifted weights are declared unusable.
pub const MAX_BETA_SPREAD: f64 = 700.0;

/// A Hamiltonian at a fixed inverse temperature, with its partition function.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSpec {
    pub hamiltonian: HermitianOperator,
    pub beta: f64,
    pub partition_function: f64,
    spectrum: Spectrum,
    weights: Vec<f64>,
}

impl CanonicalSpec {
    pub fn new(hamiltonian: HermitianOperator, beta: f64) -> Result<Self> {
        let spectrum = hamiltonian.eig();
        let (weights, log_z) = boltzmann(&spectrum.values, beta)?;
        Ok(Self {
            hamiltonian,
            beta,
            partition_function: log_z.exp(),
            spectrum,
            weights,
        })
    }

    /// Occupation probabilities in ascending energy order.
    pub fn probabilities(&self) -> &[f64] {
        &self.weights
    }

    pub fn energies(&self) -> &[f64] {
        &self.spectrum.values
    }

    pub fn state(&self) -> Distribution {
        Distribution::from_trusted(
            HermitianOperator::from_spectrum(&self.weights, &self.spectrum.basis).into_matrix(),
        )
    }

    pub fn mean_energy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.spectrum.values)
            .map(|(p, e)| p * e)
            .sum()
    }
}

/// Normalized Boltzmann weights and `ln Z`, shifted by the ground energy.
pub fn boltzmann(energies: &[f64], beta: f64) -> Result<(Vec<f64>, f64)> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::NonPositiveBeta(beta));
    }
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let emax = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = beta * (emax - e0);
    if spread > MAX_BETA_SPREAD {
        return Err(Error::BoltzmannOverflow(spread));
    }
    let raw: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let shifted_z: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / shifted_z).collect();
    Ok((weights, shifted_z.ln() - beta * e0))
}

pub fn canonical_state(h: &HermitianOperator, beta: f64) -> Result<Distribution> {
    Ok(CanonicalSpec::new(h.clone(), beta)?.state())
}

/// `Z = tr e^{-βH}`.
pub fn partition_function(h: &HermitianOperator, beta: f64) -> Result<f64> {
    log_partition_function(h, beta).map(f64::exp)
}

pub fn log_partition_function(h: &HermitianOperator, beta: f64) -> Result<f64> {
    boltzmann(&h.eigenvalues(), beta).map(|(_, log_z)| log_z)
}

fn mean_energy_of_levels(energies: &[f64], beta: f64) -> Result<f64> {
    let (w, _) = boltzmann(energies, beta)?;
    Ok(w.iter().zip(energies).map(|(p, e)| p * e).sum())
}

pub fn mean_energy(h: &HermitianOperator, beta: f64) -> Result<f64> {
    mean_energy_of_levels(&h.eigenvalues(), beta)
}

/// Inverse temperature whose canonical state has mean energy `energy`.
///
/// Bisection on the strictly decreasing map `β ↦ ⟨H⟩_β`, starting from the
/// bracket `[1e-12, 1]` and doubling the upper end until it undershoots.
pub fn beta_for_energy(h: &HermitianOperator, energy: f64) -> Result<f64> {
    let levels = h.eigenvalues();
    let d = levels.len() as f64;
    let ground = levels[0];
    let top = *levels.last().unwrap();
    let infinite_temperature = levels.iter().sum::<f64>() / d;
    let out_of_range = || Error::EnergyOutOfRange {
        energy,
        ground,
        infinite_temperature,
    };
    if !(energy > ground && energy < infinite_temperature) {
        return Err(out_of_range());
    }
    let spread = top - ground;
    let beta_cap = MAX_BETA_SPREAD / spread;
    let mut lo = 1e-12_f64.min(beta_cap);
    if mean_energy_of_levels(&levels, lo)? <= energy {
        return Err(out_of_range());
    }
    let mut hi = 1.0_f64.max(lo);
    while mean_energy_of_levels(&levels, hi)? > energy {
        if hi >= beta_cap {
            return Err(out_of_range());
        }
        lo = hi;
        hi = (2.0 * hi).min(beta_cap);
    }
    let energy_tol = 1e-10 * spread;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let m = mean_energy_of_levels(&levels, mid)?;
        if m > energy {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi && (m - energy).abs() <= energy_tol {
            return Ok(0.5 * (lo + hi));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{commutator_norm, max_abs};
    use crate::random::{random_hermitian, rng_from_seed};
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_level_state() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let rho = canonical_state(&h, 1.0).unwrap();
        let p0 = 1.0 / (1.0 + (-1.0f64).exp());
        assert_abs_diff_eq!(p0, 0.731_058_578_630_005, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, p0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 1.0 - p0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_limit() {
        let mut rng = rng_from_seed(2);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let rho = canonical_state(&h, 1e-12).unwrap();
        assert!(max_abs(&(rho.matrix() - Distribution::maximally_mixed(4).matrix())) < 1e-9);
    }

    #[test]
    fn geometric_weights() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0]);
        let rho = canonical_state(&h, 2f64.ln()).unwrap();
        for (i, p) in [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0].iter().enumerate() {
            assert_abs_diff_eq!(rho.matrix()[(i, i)].re, *p, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejections() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        assert!(matches!(
            canonical_state(&h, 0.0),
            Err(Error::NonPositiveBeta(_))
        ));
        assert!(matches!(
            canonical_state(&h, -1.0),
            Err(Error::NonPositiveBeta(_))
        ));
        assert!(matches!(
            canonical_state(&h, 701.0),
            Err(Error::BoltzmannOverflow(_))
        ));
    }

    #[test]
    fn partition_function_examples() {
        assert_abs_diff_eq!(
            partition_function(&HermitianOperator::zeros(3), 0.7).unwrap(),
            3.0,
            epsilon = 1e-12
        );
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        assert_abs_diff_eq!(
            partition_function(&h, 1.0).unwrap(),
            1.367_879_441_171_442,
            epsilon = 1e-12
        );

        let mut rng = rng_from_seed(3);
        let h1 = random_hermitian(&mut rng, 2, 1.0);
        let h2 = random_hermitian(&mut rng, 3, 1.0);
        let joint = &h1.extend_right(3) + &h2.extend_left(2);
        let z = partition_function(&joint, 0.8).unwrap();
        let z1 = partition_function(&h1, 0.8).unwrap();
        let z2 = partition_function(&h2, 0.8).unwrap();
        assert_abs_diff_eq!(z, z1 * z2, epsilon = 1e-10 * z);
    }

    #[test]
    fn canonical_spec_invariants() {
        let mut rng = rng_from_seed(4);
        let h = random_hermitian(&mut rng, 5, 1.0);
        let spec = CanonicalSpec::new(h.clone(), 1.3).unwrap();
        let direct: f64 = h.eigenvalues().iter().map(|e| (-1.3 * e).exp()).sum();
        assert_abs_diff_eq!(spec.partition_function, direct, epsilon = 1e-9);
        assert!(commutator_norm(spec.state().matrix(), h.matrix()) < 1e-9);
        assert_abs_diff_eq!(
            spec.mean_energy(),
            spec.state().expectation(&h),
            epsilon = 1e-12
        );
    }

    #[test]
    fn beta_for_energy_examples() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let target = (-1.0f64).exp() / (1.0 + (-1.0f64).exp());
        assert_abs_diff_eq!(target, 0.268_941_421_369_995, epsilon = 1e-12);
        assert_abs_diff_eq!(beta_for_energy(&h, target).unwrap(), 1.0, epsilon = 1e-8);

        // ⟨H⟩ = 1/2 - β/4 + O(β³) near β = 0
        let b = beta_for_energy(&h, 0.5 - 1e-6).unwrap();
        assert_abs_diff_eq!(b, 4e-6, epsilon = 1e-12);

        assert!(matches!(
            beta_for_energy(&h, 0.0),
            Err(Error::EnergyOutOfRange { .. })
        ));
        assert!(matches!(
            beta_for_energy(&h, 0.5),
            Err(Error::EnergyOutOfRange { .. })
        ));
        assert!(beta_for_energy(&HermitianOperator::identity(3), 1.0).is_err());
    }

    #[test]
    fn beta_for_energy_hits_target_energy() {
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, 4, 1.0);
            let ev = h.eigenvalues();
            let mean = ev.iter().sum::<f64>() / 4.0;
            let target = ev[0] + 0.3 * (mean - ev[0]);
            let b = beta_for_energy(&h, target).unwrap();
            let achieved = mean_energy(&h, b).unwrap();
            assert!((achieved - target).abs() <= 1e-9 * (ev[3] - ev[0]));
        }
    }

    #[test]
    fn mean_energy_decreases_with_beta() {
        let mut rng = rng_from_seed(6);
        let h = random_hermitian(&mut rng, 4, 1.0);
        let grid: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        let means: Vec<f64> = grid.iter().map(|&b| mean_energy(&h, b).unwrap()).collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]));
    }
}
