//! Density matrices and the Gibbs–von Neumann measure `G(ρ) = tr ρ ln ρ`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{Tolerances, Units};
use crate::error::{Error, Result};
use crate::operator::{
    hermiticity_deviation, kron, max_abs, partial_trace_matrix, trace, CMatrix, HermitianOperator,
    Spectrum, UnitaryOperator,
};

/// Positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    m: CMatrix,
}

impl Distribution {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    /// Validates hermiticity, trace and positivity. Eigenvalues in `[-psd, 0)`
    /// are clipped to zero and the matrix renormalized; lower ones are rejected.
    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianOperator::with_tolerance(m, tol.hermiticity).map_err(|e| match e {
            Error::NotHermitian { max_deviation, .. } => Error::InvalidDistribution(format!(
                "not Hermitian (max |ρ - ρ†| = {max_deviation:e})"
            )),
            other => other,
        })?;
        let tr = h.trace();
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidDistribution(format!(
                "trace {tr} differs from 1"
            )));
        }
        let s = h.eig();
        let lowest = s.values[0];
        if lowest < -tol.psd {
            return Err(Error::InvalidDistribution(format!(
                "eigenvalue {lowest:e} below -{:e}",
                tol.psd
            )));
        }
        if lowest < 0.0 {
            let clipped: Vec<f64> = s.values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let renorm: Vec<f64> = clipped.iter().map(|v| v / total).collect();
            return Ok(Self {
                m: HermitianOperator::from_spectrum(&renorm, &s.basis).into_matrix(),
            });
        }
        Ok(Self { m: h.into_matrix() })
    }

    /// Accepts a matrix produced by a trace- and positivity-preserving
    /// operation; only the Hermitian part is kept.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self {
            m: HermitianOperator::symmetrized(m).into_matrix(),
        }
    }

    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let n = psi.norm_squared();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::InvalidDistribution(
                "zero or non-finite state vector".into(),
            ));
        }
        Ok(Self::from_trusted(
            psi * psi.adjoint() / Complex64::new(n, 0.0),
        ))
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        Self { m }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            m: CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
        }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianOperator::from_real_diagonal(probs).into_matrix())
    }

    /// `Σ p_n |u_n⟩⟨u_n|` over the columns of `basis`.
    pub fn from_probabilities(probs: &[f64], basis: &CMatrix) -> Result<Self> {
        if basis.nrows() != probs.len() || basis.ncols() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} probabilities for a {}x{} basis",
                probs.len(),
                basis.nrows(),
                basis.ncols()
            )));
        }
        let dev = crate::operator::unitarity_deviation(basis);
        if dev > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "basis not orthonormal (deviation {dev:e})"
            )));
        }
        Self::new(HermitianOperator::from_spectrum(probs, basis).into_matrix())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn spectrum(&self) -> Spectrum {
        HermitianOperator::symmetrized(self.m.clone()).eig()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum().values
    }

    /// `⟨A⟩_ρ = tr(A ρ)`.
    pub fn expectation(&self, a: &HermitianOperator) -> f64 {
        a.expectation(&self.m)
    }

    pub fn evolve(&self, u: &UnitaryOperator) -> Self {
        Self::from_trusted(u.conjugate(&self.m))
    }

    pub fn tensor(&self, other: &Distribution) -> Self {
        Self::from_trusted(kron(&self.m, &other.m))
    }

    /// `λ self + (1 - λ) other` for `λ ∈ [0, 1]`.
    pub fn mix(&self, other: &Distribution, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || self.dim() != other.dim() {
            return Err(Error::InvalidArgument(format!(
                "cannot mix with weight {lambda}"
            )));
        }
        Ok(Self::from_trusted(
            &self.m * Complex64::new(lambda, 0.0) + &other.m * Complex64::new(1.0 - lambda, 0.0),
        ))
    }

    /// Tensor power `ρ^{⊗n}`.
    pub fn power(&self, n: usize) -> Self {
        let mut out = Self::from_trusted(CMatrix::identity(1, 1));
        for _ in 0..n {
            out = out.tensor(self);
        }
        out
    }
}

/// Orthogonal resolution of the identity `{K_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    projectors: Vec<CMatrix>,
}

const PROJECTOR_TOL: f64 = 1e-9;

impl ProjectorSet {
    pub fn new(projectors: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = projectors.first() else {
            return Err(Error::InvalidProjectors("empty set".into()));
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for (i, k) in projectors.iter().enumerate() {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::InvalidProjectors(format!(
                    "projector {i} has wrong shape"
                )));
            }
            if hermiticity_deviation(k) > PROJECTOR_TOL {
                return Err(Error::InvalidProjectors(format!(
                    "projector {i} is not Hermitian"
                )));
            }
            for (j, other) in projectors.iter().enumerate() {
                let prod = k * other;
                let expected = if i == j {
                    k.clone()
                } else {
                    CMatrix::zeros(d, d)
                };
                if max_abs(&(prod - expected)) > PROJECTOR_TOL {
                    return Err(Error::InvalidProjectors(format!(
                        "K_{i} K_{j} violates K_i K_j = δ_ij K_i"
                    )));
                }
            }
            sum += k;
        }
        if max_abs(&(sum - CMatrix::identity(d, d))) > PROJECTOR_TOL {
            return Err(Error::InvalidProjectors(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(Self { projectors })
    }

    /// Projectors onto spans of computational basis vectors.
    pub fn from_index_blocks(d: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut ks = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut k = CMatrix::zeros(d, d);
            for &i in block {
                if i >= d {
                    return Err(Error::InvalidProjectors(format!(
                        "index {i} out of range for d = {d}"
                    )));
                }
                k[(i, i)] += Complex64::new(1.0, 0.0);
            }
            ks.push(k);
        }
        Self::new(ks)
    }

    pub fn trivial(d: usize) -> Self {
        Self {
            projectors: vec![CMatrix::identity(d, d)],
        }
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Orthonormal basis of `range(K_i)` as the columns of a `d x rank` matrix.
    pub fn range_basis(&self, i: usize) -> CMatrix {
        let s = HermitianOperator::symmetrized(self.projectors[i].clone()).eig();
        let cols: Vec<usize> = (0..s.dim()).filter(|&j| s.values[j] > 0.5).collect();
        CMatrix::from_fn(self.dim(), cols.len(), |r, c| s.basis[(r, cols[c])])
    }

    /// `Σ K_i ρ K_i`.
    pub fn dephase(&self, rho: &Distribution) -> Distribution {
        let d = rho.dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.projectors {
            out += k * rho.matrix() * k;
        }
        Distribution::from_trusted(out)
    }
}

/// `G(ρ) = Σ λ ln λ` over the eigenvalues, with `0 ln 0 = 0`.
pub fn gibbs_measure(rho: &Distribution) -> f64 {
    gibbs_of_probabilities(&rho.eigenvalues())
}

pub fn gibbs_of_probabilities(p: &[f64]) -> f64 {
    let support = Tolerances::default().support;
    p.iter()
        .filter(|&&x| x > support)
        .map(|&x| x * x.ln())
        .sum()
}

/// `S(ρ) = -k G(ρ)`.
pub fn entropy(rho: &Distribution, units: &Units) -> f64 {
    -units.k_boltzmann * gibbs_measure(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RelativeMeasure {
    Finite(f64),
    /// `support(ρ)` is not contained in `support(σ)`.
    Infinite,
}

impl RelativeMeasure {
    pub fn value(&self) -> f64 {
        match self {
            Self::Finite(x) => *x,
            Self::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }
}

/// `tr ρ (ln ρ - ln σ)`.
pub fn relative_measure(rho: &Distribution, sigma: &Distribution) -> Result<RelativeMeasure> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let support = Tolerances::default().support;
    let s = sigma.spectrum();
    let mut cross = 0.0;
    for j in 0..s.dim() {
        let v = s.vector(j);
        let weight = (v.adjoint() * rho.matrix() * &v)[(0, 0)].re;
        if s.values[j] <= support {
            if weight > support {
                return Ok(RelativeMeasure::Infinite);
            }
        } else {
            cross += weight * s.values[j].ln();
        }
    }
    Ok(RelativeMeasure::Finite(gibbs_measure(rho) - cross))
}

/// Reduced state of factor `keep` (0-based) of a state on `⊗ dims`.
pub fn marginal(rho: &Distribution, dims: &[usize], keep: usize) -> Result<Distribution> {
    partial_trace_matrix(rho.matrix(), dims, keep).map(Distribution::from_trusted)
}

/// `C = G(ρ) - G(ρ̄₁) - G(ρ̄₂) ≥ 0` for a bipartite state.
pub fn correlation(rho: &Distribution, dims: [usize; 2]) -> Result<f64> {
    let m1 = marginal(rho, &dims, 0)?;
    let m2 = marginal(rho, &dims, 1)?;
    Ok(gibbs_measure(rho) - gibbs_measure(&m1) - gibbs_measure(&m2))
}

/// `(w_i, Ω_i)` with `w_i = tr K_i ρ K_i` and `Ω_i = K_i ρ K_i / w_i`;
/// zero-weight blocks are omitted.
pub fn decompose(rho: &Distribution, k: &ProjectorSet) -> Result<Vec<(f64, Distribution)>> {
    if rho.dim() != k.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs projector dim {}",
            rho.dim(),
            k.dim()
        )));
    }
    let support = Tolerances::default().support;
    Ok(k.projectors()
        .iter()
        .filter_map(|p| {
            let block = p * rho.matrix() * p;
            let w = trace(&block).re;
            (w > support).then(|| {
                (
                    w,
                    Distribution::from_trusted(block / Complex64::new(w, 0.0)),
                )
            })
        })
        .collect())
}

/// `½ ‖ρ - σ‖₁`.
pub fn trace_distance(rho: &Distribution, sigma: &Distribution) -> f64 {
    let diff = HermitianOperator::symmetrized(rho.matrix() - sigma.matrix());
    0.5 * diff.eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_pure, random_unitary, rng_from_seed};
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn bell() -> Distribution {
        let s = 1.0 / 2f64.sqrt();
        let psi = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        Distribution::pure(&psi).unwrap()
    }

    #[test]
    fn validation_and_psd_repair() {
        assert!(Distribution::diagonal(&[0.5, 0.6]).is_err());
        assert!(Distribution::diagonal(&[1.1, -0.1]).is_err());
        let repaired = Distribution::diagonal(&[1.0 + 5e-11, -5e-11]).unwrap();
        assert!(repaired.eigenvalues().iter().all(|&v| v >= 0.0));
        assert_abs_diff_eq!(trace(repaired.matrix()).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gibbs_measure_examples() {
        let mut rng = rng_from_seed(4);
        assert_abs_diff_eq!(
            gibbs_measure(&random_pure(&mut rng, 3)),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            gibbs_measure(&Distribution::maximally_mixed(4)),
            -(4f64).ln(),
            epsilon = 1e-12
        );
        let p = [0.731_058_578_630_004_9, 0.268_941_421_369_995_1];
        let oracle: f64 = p.iter().map(|x: &f64| x * x.ln()).sum();
        assert_abs_diff_eq!(oracle, -0.582_203_108_888_218, epsilon = 1e-12);
        assert_abs_diff_eq!(
            gibbs_measure(&Distribution::diagonal(&p).unwrap()),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_examples() {
        let units = Units {
            hbar: 1.0,
            k_boltzmann: 2.5,
        };
        assert_abs_diff_eq!(
            entropy(&Distribution::basis_state(3, 1), &units),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            entropy(&Distribution::maximally_mixed(5), &units),
            2.5 * 5f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn relative_measure_examples() {
        let mut rng = rng_from_seed(5);
        let rho = random_density(&mut rng, 3);
        assert_abs_diff_eq!(
            relative_measure(&rho, &rho).unwrap().value(),
            0.0,
            epsilon = 1e-10
        );
        let r = relative_measure(
            &Distribution::basis_state(2, 0),
            &Distribution::maximally_mixed(2),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value(), 2f64.ln(), epsilon = 1e-12);
        assert_eq!(
            relative_measure(
                &Distribution::maximally_mixed(2),
                &Distribution::basis_state(2, 0)
            )
            .unwrap(),
            RelativeMeasure::Infinite
        );
    }

    #[test]
    fn marginal_examples() {
        let mut rng = rng_from_seed(6);
        let a = random_density(&mut rng, 2);
        let b = random_density(&mut rng, 3);
        let m = marginal(&a.tensor(&b), &[2, 3], 0).unwrap();
        assert!(max_abs(&(m.matrix() - a.matrix())) < 1e-12);
        let m = marginal(&bell(), &[2, 2], 1).unwrap();
        assert!(max_abs(&(m.matrix() - Distribution::maximally_mixed(2).matrix())) < 1e-12);
        assert!(marginal(&bell(), &[3, 2], 0).is_err());
    }

    #[test]
    fn correlation_examples() {
        let mut rng = rng_from_seed(7);
        let prod = random_density(&mut rng, 2).tensor(&random_density(&mut rng, 2));
        assert_abs_diff_eq!(correlation(&prod, [2, 2]).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            correlation(&bell(), [2, 2]).unwrap(),
            2.0 * 2f64.ln(),
            epsilon = 1e-10
        );
        let classical = Distribution::diagonal(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(
            correlation(&classical, [2, 2]).unwrap(),
            2f64.ln(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn decompose_examples() {
        let rho = Distribution::diagonal(&[0.5, 0.3, 0.2]).unwrap();
        let parts = decompose(&rho, &ProjectorSet::trivial(3)).unwrap();
        assert_eq!(parts.len(), 1);
        assert_abs_diff_eq!(parts[0].0, 1.0, epsilon = 1e-12);

        let k = ProjectorSet::from_index_blocks(3, &[vec![0], vec![1, 2]]).unwrap();
        let parts = decompose(&rho, &k).unwrap();
        assert_abs_diff_eq!(parts[0].0, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(parts[1].0, 0.5, epsilon = 1e-12);
        assert!(max_abs(&(parts[0].1.matrix() - Distribution::basis_state(3, 0).matrix())) < 1e-12);
        let expected = Distribution::diagonal(&[0.0, 0.6, 0.4]).unwrap();
        assert!(max_abs(&(parts[1].1.matrix() - expected.matrix())) < 1e-12);

        let psi = DVector::from_vec(vec![c(0.0), c(0.6), c(0.8)]);
        let pure = Distribution::pure(&psi).unwrap();
        let parts = decompose(&pure, &k).unwrap();
        assert_eq!(parts.len(), 1);
        assert!(max_abs(&(parts[0].1.matrix() - pure.matrix())) < 1e-12);
    }

    #[test]
    fn invalid_projector_sets() {
        assert!(ProjectorSet::from_index_blocks(3, &[vec![0], vec![1]]).is_err());
        assert!(ProjectorSet::from_index_blocks(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(ProjectorSet::new(vec![]).is_err());
    }

    #[test]
    fn unitary_invariance_and_additivity() {
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let rho = random_density(&mut rng, 4);
            let u = random_unitary(&mut rng, 4);
            assert_abs_diff_eq!(
                gibbs_measure(&rho.evolve(&u)),
                gibbs_measure(&rho),
                epsilon = 1e-9
            );
            let sigma = random_density(&mut rng, 3);
            let joint = gibbs_measure(&rho.tensor(&sigma));
            assert_abs_diff_eq!(
                joint,
                gibbs_measure(&rho) + gibbs_measure(&sigma),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn dephasing_never_increases_gibbs_measure() {
        let mut rng = rng_from_seed(9);
        let k = ProjectorSet::from_index_blocks(4, &[vec![0, 2], vec![1], vec![3]]).unwrap();
        for _ in 0..50 {
            let rho = random_density(&mut rng, 4);
            assert!(gibbs_measure(&k.dephase(&rho)) <= gibbs_measure(&rho) + 1e-9);
        }
    }

    #[test]
    fn trace_distance_basic() {
        let a = Distribution::basis_state(2, 0);
        let b = Distribution::basis_state(2, 1);
        assert_abs_diff_eq!(trace_distance(&a, &b), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&a, &a), 0.0, epsilon = 1e-12);
    }
}
