//! Dense complex operator algebra.
//!
//! Hermitian operators are stored as full `d x d` complex matrices and are
//! symmetrized on construction, so every downstream eigendecomposition sees an
//! exactly self-adjoint input.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::config::Tolerances;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(d, d)))
}

/// Largest entry of the commutator `[a, b]`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Re tr(a b)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("zero-dimensional operator".into()));
    }
    Ok(())
}

/// Partial trace over every tensor factor except `keep` (0-based).
pub fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep: usize) -> Result<CMatrix> {
    check_square(m)?;
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "factor dims {dims:?} do not multiply to operator dimension {}",
            m.nrows()
        )));
    }
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "keep index {keep} out of range for {} factors",
            dims.len()
        )));
    }
    let mut strides = vec![1usize; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * dims[j + 1];
    }
    // offsets of every assignment of the traced-out factors
    let mut offsets = vec![0usize];
    for (j, (&d, &s)) in dims.iter().zip(&strides).enumerate() {
        if j == keep {
            continue;
        }
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..d).map(move |r| o + r * s))
            .collect();
    }
    let dk = dims[keep];
    let sk = strides[keep];
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            out[(a, b)] = offsets.iter().map(|&o| m[(a * sk + o, b * sk + o)]).sum();
        }
    }
    Ok(out)
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// as the columns of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub basis: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> DVector<Complex64> {
        self.basis.column(i).into_owned()
    }

    /// `U f(diag) U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let d = self.dim();
        let mut scaled = self.basis.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..d {
                scaled[(i, j)] *= fv;
            }
        }
        scaled * self.basis.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|v| Complex64::new(v, 0.0))
    }

    pub fn orthonormality_deviation(&self) -> f64 {
        unitarity_deviation(&self.basis)
    }
}

/// Eigendecomposition of a Hermitian matrix; values ascending, ties in solver order.
pub fn hermitian_eig(a: &HermitianOperator) -> Spectrum {
    eig_of_symmetrized(&a.m)
}

fn eig_of_symmetrized(m: &CMatrix) -> Spectrum {
    let d = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = CMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }
    Spectrum { values, basis }
}

/// A self-adjoint `d x d` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().hermiticity)
    }

    pub fn with_tolerance(m: CMatrix, tolerance: f64) -> Result<Self> {
        check_square(&m)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let max_deviation = hermiticity_deviation(&m);
        if max_deviation > tolerance {
            return Err(Error::NotHermitian {
                max_deviation,
                tolerance,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Takes the Hermitian part `(m + m†)/2` without validation.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj) * Complex64::new(0.5, 0.0),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            m: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self {
            m: CMatrix::from_diagonal(&v),
        }
    }

    /// `Σ_n values[n] |u_n⟩⟨u_n|` for the columns `u_n` of `basis`.
    pub fn from_spectrum(values: &[f64], basis: &CMatrix) -> Self {
        let s = Spectrum {
            values: values.to_vec(),
            basis: basis.clone(),
        };
        Self::symmetrized(s.reconstruct())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn eig(&self) -> Spectrum {
        hermitian_eig(self)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().values
    }

    pub fn trace(&self) -> f64 {
        trace(&self.m).re
    }

    /// `Re tr(A ρ)`.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        trace_product_re(&self.m, rho)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            m: &self.m * Complex64::new(s, 0.0),
        }
    }

    pub fn tensor(&self, other: &HermitianOperator) -> Self {
        Self::symmetrized(kron(&self.m, &other.m))
    }

    /// `A ⊗ I_right`.
    pub fn extend_right(&self, right_dim: usize) -> Self {
        self.tensor(&Self::identity(right_dim))
    }

    /// `I_left ⊗ A`.
    pub fn extend_left(&self, left_dim: usize) -> Self {
        Self::identity(left_dim).tensor(self)
    }

    /// `U A U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self::symmetrized(u * &self.m * u.adjoint())
    }

    pub fn commutes_with(&self, other: &CMatrix) -> f64 {
        commutator_norm(&self.m, other)
    }

    /// `exp(-i A t / ħ)`.
    pub fn evolution(&self, t: f64, hbar: f64) -> UnitaryOperator {
        let s = self.eig();
        UnitaryOperator {
            m: s.reconstruct_with(|e| (-I * (e * t / hbar)).exp()),
        }
    }

    pub fn partial_trace(&self, dims: &[usize], keep: usize) -> Result<Self> {
        partial_trace_matrix(&self.m, dims, keep).map(Self::symmetrized)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            m: &self.m - &rhs.m,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

/// Kronecker product `A ⊗ B`; `dims` of a later partial trace are `[A.dim(), B.dim()]`.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    a.tensor(b)
}

pub fn partial_trace(
    m: &HermitianOperator,
    dims: &[usize],
    keep: usize,
) -> Result<HermitianOperator> {
    m.partial_trace(dims, keep)
}

/// `U f(Λ) U†`. Fails if `f` is non-finite at any eigenvalue.
pub fn apply_function(a: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let s = a.eig();
    let mapped: Vec<f64> = s.values.iter().map(|&v| f(v)).collect();
    if let Some((i, _)) = mapped.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::FunctionUndefined {
            eigenvalue: s.values[i],
        });
    }
    Ok(HermitianOperator::from_spectrum(&mapped, &s.basis))
}

/// Natural log restricted to the support: eigenvalues `<= support` contribute
/// zero, negative eigenvalues below `-support` are rejected.
pub fn log_on_support(a: &HermitianOperator, support: f64) -> Result<HermitianOperator> {
    let s = a.eig();
    let mut mapped = Vec::with_capacity(s.dim());
    for &v in &s.values {
        if v < -support {
            return Err(Error::FunctionUndefined { eigenvalue: v });
        }
        mapped.push(if v <= support { 0.0 } else { v.ln() });
    }
    Ok(HermitianOperator::from_spectrum(&mapped, &s.basis))
}

/// A `d x d` unitary matrix. The unitarity defect is carried, not enforced,
/// since products of many steps accumulate rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator {
    m: CMatrix,
}

impl UnitaryOperator {
    pub fn new(m: CMatrix, tolerance: f64) -> Result<Self> {
        check_square(&m)?;
        let max_deviation = unitarity_deviation(&m);
        if max_deviation > tolerance {
            return Err(Error::NotUnitary {
                max_deviation,
                tolerance,
            });
        }
        Ok(Self { m })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// `self · other` (apply `other` first).
    pub fn then_after(&self, other: &UnitaryOperator) -> Self {
        Self {
            m: &self.m * &other.m,
        }
    }

    pub fn tensor(&self, other: &UnitaryOperator) -> Self {
        Self {
            m: kron(&self.m, &other.m),
        }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.m)
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &CMatrix) -> CMatrix {
        &self.m * rho * self.m.adjoint()
    }

    /// Phase-insensitive overlap `|tr(U† W)| / d`, equal to one iff `W = e^{iφ} U`.
    pub fn fidelity(&self, other: &UnitaryOperator) -> f64 {
        trace(&(self.m.adjoint() * &other.m)).norm() / self.dim() as f64
    }
}

/// Principal logarithm of a unitary, stored as eigenphases in `(-π, π]` and
/// the eigenbasis. The matrix form `U diag(iφ) U†` is anti-Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryLog {
    pub phases: Vec<f64>,
    pub basis: CMatrix,
}

impl UnitaryLog {
    pub fn matrix(&self) -> CMatrix {
        let s = Spectrum {
            values: self.phases.clone(),
            basis: self.basis.clone(),
        };
        s.reconstruct_with(|p| I * p)
    }

    /// Hermitian `K` with `ln V = -i K`, so that `V = exp(-i K)`.
    pub fn generator(&self) -> HermitianOperator {
        HermitianOperator::from_spectrum(
            &self.phases.iter().map(|p| -p).collect::<Vec<_>>(),
            &self.basis,
        )
    }

    pub fn exp(&self) -> UnitaryOperator {
        let s = Spectrum {
            values: self.phases.clone(),
            basis: self.basis.clone(),
        };
        UnitaryOperator::from_matrix_unchecked(s.reconstruct_with(|p| (I * p).exp()))
    }
}

pub const BRANCH_TOLERANCE: f64 = 1e-8;

/// Principal branch logarithm of a unitary.
///
/// The commuting Hermitian pair `(V + V†)/2` and `(V - V†)/2i` is diagonalized
/// through a generic real combination; eigenvalues of `V` are then read off as
/// `⟨u|V|u⟩`. An eigenvalue of exactly `-1` takes phase `+π`.
pub fn unitary_log(v: &UnitaryOperator) -> Result<UnitaryLog> {
    let d = v.dim();
    let m = v.matrix();
    let max_deviation = v.unitarity_deviation();
    if max_deviation > BRANCH_TOLERANCE {
        return Err(Error::NotUnitary {
            max_deviation,
            tolerance: BRANCH_TOLERANCE,
        });
    }
    let adj = m.adjoint();
    let re_part = (m + &adj) * Complex64::new(0.5, 0.0);
    let im_part = (m - &adj) * Complex64::new(0.0, -0.5);
    let mut last_residual = f64::INFINITY;
    for mix in [
        0.739_085_133_215_160_6,
        1.324_717_957_244_746,
        -0.567_143_290_409_783_8,
    ] {
        let combo = &re_part + &im_part * Complex64::new(mix, 0.0);
        let s = eig_of_symmetrized(&HermitianOperator::symmetrized(combo).m);
        let mut phases = Vec::with_capacity(d);
        for j in 0..d {
            let u = s.basis.column(j);
            let lambda = (u.adjoint() * m * u)[(0, 0)];
            let mut phase = lambda.im.atan2(lambda.re);
            if phase <= -PI + BRANCH_TOLERANCE {
                if lambda.im.abs() <= 1e-14 {
                    phase = PI;
                } else {
                    return Err(Error::BranchAmbiguity {
                        phase,
                        tolerance: BRANCH_TOLERANCE,
                    });
                }
            }
            phases.push(phase);
        }
        let log = UnitaryLog {
            phases,
            basis: s.basis,
        };
        last_residual = max_abs(&(log.exp().matrix() - m));
        if last_residual <= 1e-9 {
            return Ok(log);
        }
    }
    Err(Error::InvalidArgument(format!(
        "unitary logarithm failed to reproduce input (residual {last_residual:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_unitary, rng_from_seed};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eig_of_diagonal_sorts_ascending() {
        let a = HermitianOperator::from_real_diagonal(&[3.0, 1.0, 4.0]);
        let s = a.eig();
        assert_eq!(s.values, vec![1.0, 3.0, 4.0]);
        // permutation basis: column 0 is e_1
        assert_abs_diff_eq!(s.basis[(1, 0)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis[(0, 1)].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.basis[(2, 2)].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eig_of_identity() {
        let s = HermitianOperator::identity(4).eig();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(s.orthonormality_deviation() < 1e-10);
    }

    #[test]
    fn eig_reconstructs_random_d6() {
        let mut rng = rng_from_seed(11);
        let a = random_hermitian(&mut rng, 6, 1.0);
        let s = a.eig();
        assert!(max_abs(&(s.reconstruct() - a.matrix())) <= 1e-9);
        assert!(s.orthonormality_deviation() <= 1e-10);
        assert!(s.values.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(s, a.eig());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        match HermitianOperator::new(m) {
            Err(Error::NotHermitian { max_deviation, .. }) => {
                assert_abs_diff_eq!(max_deviation, 1.0)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            HermitianOperator::new(CMatrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn tensor_and_partial_trace() {
        let i4 = tensor(
            &HermitianOperator::identity(2),
            &HermitianOperator::identity(2),
        );
        assert_eq!(i4, HermitianOperator::identity(4));

        let h1 = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let h2 = HermitianOperator::from_real_diagonal(&[0.0, 2.0]);
        let sum = &h1.extend_right(2) + &h2.extend_left(2);
        assert_eq!(
            sum,
            HermitianOperator::from_real_diagonal(&[0.0, 2.0, 1.0, 3.0])
        );

        let mut rng = rng_from_seed(3);
        let a = random_hermitian(&mut rng, 2, 1.0);
        let b = random_hermitian(&mut rng, 3, 1.0);
        let ab = tensor(&a, &b);
        let kept = partial_trace(&ab, &[2, 3], 0).unwrap();
        assert!(max_abs(&(kept.matrix() - a.matrix() * c(b.trace(), 0.0))) < 1e-12);
        let kept_b = partial_trace(&ab, &[2, 3], 1).unwrap();
        assert!(max_abs(&(kept_b.matrix() - b.matrix() * c(a.trace(), 0.0))) < 1e-12);
        assert_abs_diff_eq!(kept.trace(), ab.trace(), epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_three_factors() {
        let mut rng = rng_from_seed(5);
        let a = random_hermitian(&mut rng, 2, 1.0);
        let b = random_hermitian(&mut rng, 3, 1.0);
        let cc = random_hermitian(&mut rng, 2, 1.0);
        let abc = tensor(&tensor(&a, &b), &cc);
        let kept = partial_trace(&abc, &[2, 3, 2], 1).unwrap();
        let expected = b.matrix() * c(a.trace() * cc.trace(), 0.0);
        assert!(max_abs(&(kept.matrix() - expected)) < 1e-12);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let m = HermitianOperator::identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 3], 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            partial_trace(&m, &[2, 2], 2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn functional_calculus() {
        let e = apply_function(&HermitianOperator::zeros(3), f64::exp).unwrap();
        assert!(max_abs(&(e.matrix() - CMatrix::identity(3, 3))) < 1e-15);

        let l = apply_function(
            &HermitianOperator::from_real_diagonal(&[1.0, std::f64::consts::E]),
            f64::ln,
        )
        .unwrap();
        assert_abs_diff_eq!(l.matrix()[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l.matrix()[(1, 1)].re, 1.0, epsilon = 1e-15);

        let x = apply_function(&HermitianOperator::from_real_diagonal(&[0.0, 1.0]), |v| {
            (-v).exp()
        })
        .unwrap();
        assert_abs_diff_eq!(x.matrix()[(1, 1)].re, (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            x.matrix()[(1, 1)].re,
            0.367_879_441_171_442_3,
            epsilon = 1e-15
        );

        assert!(matches!(
            apply_function(
                &HermitianOperator::from_real_diagonal(&[-1.0, 1.0]),
                f64::ln
            ),
            Err(Error::FunctionUndefined { .. })
        ));
        let l0 =
            log_on_support(&HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1e-12).unwrap();
        assert_eq!(l0.matrix()[(0, 0)], ZERO);
    }

    #[test]
    fn unitary_log_cases() {
        let l = unitary_log(&UnitaryOperator::identity(3)).unwrap();
        assert!(max_abs(&l.matrix()) < 1e-15);

        let mut m = CMatrix::identity(2, 2);
        m[(1, 1)] = I;
        let l = unitary_log(&UnitaryOperator::new(m, 1e-12).unwrap()).unwrap();
        let lm = l.matrix();
        assert_abs_diff_eq!(lm[(0, 0)].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lm[(1, 1)].im, PI / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(lm[(1, 1)].re, 0.0, epsilon = 1e-14);

        let mut rng = rng_from_seed(17);
        for _ in 0..20 {
            let u = random_unitary(&mut rng, 3);
            let l = unitary_log(&u).unwrap();
            assert!(max_abs(&(l.exp().matrix() - u.matrix())) <= 1e-8);
            assert!(hermiticity_deviation(&(l.matrix() * c(0.0, 1.0))) < 1e-12);
            assert!(l.phases.iter().all(|&p| p > -PI && p <= PI));
        }
    }

    #[test]
    fn unitary_log_of_swap_takes_plus_pi() {
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = ONE;
        x[(1, 0)] = ONE;
        let l = unitary_log(&UnitaryOperator::new(x.clone(), 1e-12).unwrap()).unwrap();
        assert!(l.phases.iter().any(|&p| (p - PI).abs() < 1e-12));
        assert!(max_abs(&(l.exp().matrix() - x)) < 1e-12);
    }

    #[test]
    fn unitary_log_rejects_near_minus_pi() {
        let mut m = CMatrix::identity(2, 2);
        m[(1, 1)] = (I * (-PI + 1e-10)).exp();
        let v = UnitaryOperator::new(m, 1e-12).unwrap();
        assert!(matches!(
            unitary_log(&v),
            Err(Error::BranchAmbiguity { .. })
        ));
    }

    #[test]
    fn evolution_is_unitary_and_matches_scalar_phase() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 2.0]);
        let u = h.evolution(0.5, 1.0);
        assert!(u.unitarity_deviation() < 1e-14);
        assert_abs_diff_eq!(
            (u.matrix()[(1, 1)] - (-I).exp()).norm(),
            0.0,
            epsilon = 1e-14
        );
    }
}
