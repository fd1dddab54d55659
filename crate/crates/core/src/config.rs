//! Tolerances and unit conventions shared by every module.

use serde::{Deserialize, Serialize};

/// Numerical tolerances used when validating operators and states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest accepted entry of `A - A†` for a Hermitian operator.
    pub hermiticity: f64,
    /// Eigenvalues in `[-psd, 0)` are clipped to zero; anything lower is rejected.
    pub psd: f64,
    /// Accepted deviation of `tr ρ` from one.
    pub trace: f64,
    /// Eigenvalues at or below this count as outside the support (`0 ln 0 = 0`).
    pub support: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            psd: 1e-10,
            trace: 1e-10,
            support: 1e-12,
        }
    }
}

/// Physical constants. Natural units (`ħ = k = 1`) by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub hbar: f64,
    pub k_boltzmann: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            k_boltzmann: 1.0,
        }
    }
}

impl Units {
    pub fn natural() -> Self {
        Self::default()
    }

    /// Inverse temperature `β = 1/kT`.
    pub fn beta(&self, temperature: f64) -> f64 {
        1.0 / (self.k_boltzmann * temperature)
    }

    pub fn temperature(&self, beta: f64) -> f64 {
        1.0 / (self.k_boltzmann * beta)
    }
}
