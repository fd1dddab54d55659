//! Seeded generators for random operators and states.
//!
//! Every random draw in the crate flows from a `u64` seed through
//! [`rng_from_seed`]; independent trials derive their own seed with
//! [`derive_seed`] so results do not depend on scheduling order.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::distribution::Distribution;
use crate::operator::{CMatrix, HermitianOperator, UnitaryOperator};

pub type TrialRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` of stream `stream` under a root seed.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index)
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| complex_normal(rng))
}

/// GUE-like Hermitian matrix with entries of order `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> HermitianOperator {
    let g = ginibre(rng, d) * Complex64::new(scale / 2.0, 0.0);
    HermitianOperator::symmetrized(&g + g.adjoint())
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> UnitaryOperator {
    let qr = ginibre(rng, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOperator::from_matrix_unchecked(q)
}

/// Mixed state `G G† / tr(G G†)` with `G` Ginibre of size `d x rank`.
pub fn random_density_with_rank<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    rank: usize,
) -> Distribution {
    let g = CMatrix::from_fn(d, rank, |_, _| complex_normal(rng));
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    Distribution::from_trusted(m / Complex64::new(tr, 0.0))
}

pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Distribution {
    random_density_with_rank(rng, d, d)
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Distribution {
    let v = DVector::from_fn(d, |_, _| complex_normal(rng));
    Distribution::from_trusted(&v * v.adjoint() / Complex64::new(v.norm_squared(), 0.0))
}

/// Probability vector with every entry at least `floor` (requires `d * floor < 1`).
pub fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..d)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let free = 1.0 - floor * d as f64;
    raw.iter().map(|x| floor + free * x / total).collect()
}

/// Full-support state with spectrum drawn by [`random_probabilities`] in a Haar basis.
pub fn random_full_support<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> Distribution {
    let p = random_probabilities(rng, d, floor);
    let u = random_unitary(rng, d);
    Distribution::from_trusted(HermitianOperator::from_spectrum(&p, u.matrix()).into_matrix())
}

/// Sorted real spectrum uniformly drawn in `[0, width)` with the lowest level at zero.
pub fn random_levels<R: Rng + ?Sized>(rng: &mut R, d: usize, width: f64) -> Vec<f64> {
    let mut e: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * width).collect();
    e.sort_by(f64::total_cmp);
    let e0 = e[0];
    e.iter().map(|x| x - e0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_abs;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(1);
        for d in 1..=6 {
            assert!(random_unitary(&mut rng, d).unitarity_deviation() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let a = random_hermitian(&mut rng_from_seed(9), 4, 1.0);
        let b = random_hermitian(&mut rng_from_seed(9), 4, 1.0);
        assert_eq!(max_abs(&(a.matrix() - b.matrix())), 0.0);
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
    }

    #[test]
    fn probabilities_respect_floor() {
        let mut rng = rng_from_seed(2);
        let p = random_probabilities(&mut rng, 5, 0.02);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&x| x >= 0.02));
    }
}
