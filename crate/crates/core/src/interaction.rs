//! Two coupled systems under `H₁ ⊗ I + I ⊗ H₂ + V₁₂` with work and heat bookkeeping.
//!
//! Heat into system 1 accumulates the rate `Q[H₁] = (i/ħ) ⟨[V, H₁ ⊗ I]⟩` on the
//! same midpoint grid the propagator uses, so ledger closure measures only
//! the quadrature error.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::canonical_state;
use crate::config::Units;
use crate::distribution::{gibbs_measure, marginal, Distribution};
use crate::error::{Error, Result};
use crate::operator::{max_abs, CMatrix, HermitianOperator, ZERO};
use crate::random::{random_hermitian, rng_from_seed};
use crate::schedule::{merged_grid, Schedule};

/// Energy changes, work terms `D[·]` and integrated heat flows of a joint run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub delta_h1: f64,
    pub delta_h2: f64,
    pub delta_v: f64,
    pub work_d_h1: f64,
    pub work_d_h2: f64,
    pub work_d_v: f64,
    pub heat_q1: f64,
    pub heat_q2: f64,
    /// Largest violation of `ΔH₁ = D[H₁] + Q₁`, `ΔH₂ = D[H₂] + Q₂` and
    /// `ΔV = D[V] - Q₁ - Q₂`.
    pub residual: f64,
}

/// One sampled instant of a joint evolution (the CSV row).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub time: f64,
    pub mean_h1: f64,
    pub mean_h2: f64,
    pub mean_v: f64,
    pub heat_q1: f64,
    pub gibbs_1: f64,
    pub gibbs_2: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Joint states at `times` (subsampled to at most ~200 entries plus the endpoints).
    pub states: Vec<Distribution>,
    pub rows: Vec<TrajectoryRow>,
    pub ledger: EnergyLedger,
    pub lyapunov: Option<Vec<f64>>,
    pub dims: [usize; 2],
}

impl Trajectory {
    pub fn final_state(&self) -> &Distribution {
        self.states
            .last()
            .expect("trajectory has at least the initial state")
    }

    /// CSV with header `time,mean_h1,mean_h2,mean_v,heat_q1,gibbs_1,gibbs_2`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        out.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

fn commutator_expectation_rate(rho: &CMatrix, v: &CMatrix, h: &CMatrix, hbar: f64) -> f64 {
    // (i/ħ) tr(ρ [V, H]); the trace is purely imaginary
    let c = v * h - h * v;
    let t: Complex64 = (rho * c).diagonal().iter().sum();
    -t.im / hbar
}

/// Joint evolution with full ledger. `h1`, `h2` act on the factors, `v` on the
/// joint space; all three schedules must share one total duration.
pub fn evolve_joint(
    h1: &Schedule,
    h2: &Schedule,
    v: &Schedule,
    rho0: &Distribution,
    steps: usize,
    units: &Units,
) -> Result<Trajectory> {
    let (d1, d2) = (h1.dim(), h2.dim());
    if v.dim() != d1 * d2 || rho0.dim() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "factors {d1}x{d2}, coupling {}, state {}",
            v.dim(),
            rho0.dim()
        )));
    }
    let dims = [d1, d2];
    let hbar = units.hbar;
    let grid = merged_grid(&[h1, h2, v], steps)?;
    let stride = (grid.len() / 200).max(1);

    let ext1 = |h: &HermitianOperator| h.extend_right(d2);
    let ext2 = |h: &HermitianOperator| h.extend_left(d1);
    let row_at = |t: f64, rho: &Distribution, q1: f64| -> Result<TrajectoryRow> {
        Ok(TrajectoryRow {
            time: t,
            mean_h1: rho.expectation(&ext1(&h1.at(t))),
            mean_h2: rho.expectation(&ext2(&h2.at(t))),
            mean_v: rho.expectation(&v.at(t)),
            heat_q1: q1,
            gibbs_1: gibbs_measure(&marginal(rho, &dims, 0)?),
            gibbs_2: gibbs_measure(&marginal(rho, &dims, 1)?),
        })
    };

    let mut rho = rho0.clone();
    let mut ledger = EnergyLedger::default();
    let first = row_at(0.0, &rho, 0.0)?;
    let mut rows = vec![first];
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];

    for (k, &(t0, dt)) in grid.iter().enumerate() {
        let tm = t0 + 0.5 * dt;
        let a = ext1(&h1.at(tm));
        let b = ext2(&h2.at(tm));
        let c = v.at(tm);
        let total = &(&a + &b) + &c;
        let half = total.evolution(0.5 * dt, hbar);
        let mid = rho.evolve(&half);
        let m = mid.matrix();
        ledger.heat_q1 += dt * commutator_expectation_rate(m, c.matrix(), a.matrix(), hbar);
        ledger.heat_q2 += dt * commutator_expectation_rate(m, c.matrix(), b.matrix(), hbar);
        ledger.work_d_h1 += dt * mid.expectation(&ext1(&h1.derivative_at(tm)));
        ledger.work_d_h2 += dt * mid.expectation(&ext2(&h2.derivative_at(tm)));
        ledger.work_d_v += dt * mid.expectation(&v.derivative_at(tm));
        rho = mid.evolve(&half);
        let t1 = t0 + dt;
        if (k + 1) % stride == 0 || k + 1 == grid.len() {
            times.push(t1);
            states.push(rho.clone());
        }
        rows.push(row_at(t1, &rho, ledger.heat_q1)?);
    }
    let (start, end) = (&rows[0], rows.last().unwrap());
    ledger.delta_h1 = end.mean_h1 - start.mean_h1;
    ledger.delta_h2 = end.mean_h2 - start.mean_h2;
    ledger.delta_v = end.mean_v - start.mean_v;
    ledger.residual = (ledger.delta_h1 - ledger.work_d_h1 - ledger.heat_q1)
        .abs()
        .max((ledger.delta_h2 - ledger.work_d_h2 - ledger.heat_q2).abs())
        .max((ledger.delta_v - ledger.work_d_v + ledger.heat_q1 + ledger.heat_q2).abs());
    Ok(Trajectory {
        times,
        states,
        rows,
        ledger,
        lyapunov: None,
        dims,
    })
}

/// `H₁ ⊗ I + I ⊗ H₂`.
pub fn bare_hamiltonian(h1: &HermitianOperator, h2: &HermitianOperator) -> HermitianOperator {
    &h1.extend_right(h2.dim()) + &h2.extend_left(h1.dim())
}

/// Largest entry of `[V, H₁ ⊗ I + I ⊗ H₂]`.
pub fn conservation_defect(
    h1: &HermitianOperator,
    h2: &HermitianOperator,
    v: &HermitianOperator,
) -> f64 {
    v.commutes_with(bare_hamiltonian(h1, h2).matrix())
}

/// Random coupling supported on the degenerate blocks (size ≥ 2) of the bare
/// Hamiltonian, hence commuting with it.
pub fn energy_conserving_coupling(
    h1: &HermitianOperator,
    h2: &HermitianOperator,
    seed: u64,
) -> Result<HermitianOperator> {
    let mut rng = rng_from_seed(seed);
    energy_conserving_coupling_with(h1, h2, &mut rng)
}

pub fn energy_conserving_coupling_with<R: Rng + ?Sized>(
    h1: &HermitianOperator,
    h2: &HermitianOperator,
    rng: &mut R,
) -> Result<HermitianOperator> {
    let bare = bare_hamiltonian(h1, h2);
    let s = bare.eig();
    let d = s.dim();
    let gap_tol = 1e-9;
    let mut block = vec![0usize; d];
    for i in 1..d {
        block[i] = block[i - 1] + usize::from(s.values[i] - s.values[i - 1] > gap_tol);
    }
    let mut block_size = vec![0usize; block[d - 1] + 1];
    for &b in &block {
        block_size[b] += 1;
    }
    if block_size.iter().all(|&n| n < 2) {
        return Err(Error::TrivialCommutant);
    }
    let raw = random_hermitian(rng, d, 1.0);
    let mut m = raw.into_matrix();
    for i in 0..d {
        for j in 0..d {
            if block[i] != block[j] || block_size[block[i]] < 2 {
                m[(i, j)] = ZERO;
            }
        }
    }
    let v = HermitianOperator::symmetrized(&s.basis * m * s.basis.adjoint());
    Ok(v)
}

/// `g · SWAP` on `C^d ⊗ C^d`. Commutes with `H ⊗ I + I ⊗ H` for any `H`;
/// `exp(-i g t SWAP)` is a partial swap with angle `g t / ħ`.
pub fn swap_coupling(d: usize, strength: f64) -> HermitianOperator {
    let mut m = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + j, j * d + i)] = Complex64::new(strength, 0.0);
        }
    }
    HermitianOperator::symmetrized(m)
}

/// Outcome of a contact between two initially canonical systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub delta_h1: f64,
    pub delta_h2: f64,
    /// `ΔH₁ (β₁ - β₂)`; non-negative when energy flows into the colder system.
    pub flow_product: f64,
    /// `G(ρ̄₂) + β₁⟨H₂⟩` before and after (system 1 is the canonical partner).
    pub lyapunov_2: [f64; 2],
    /// `G(ρ̄₁) + β₂⟨H₁⟩` before and after (system 2 is the canonical partner).
    pub lyapunov_1: [f64; 2],
    pub ledger: EnergyLedger,
}

const CONSERVATION_TOL: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
pub fn contact_experiment(
    beta1: f64,
    h1: &HermitianOperator,
    beta2: f64,
    h2: &HermitianOperator,
    v: &HermitianOperator,
    tau: f64,
    steps: usize,
    units: &Units,
) -> Result<ContactRecord> {
    let defect = conservation_defect(h1, h2, v);
    if defect > CONSERVATION_TOL {
        return Err(Error::NonConservingCoupling(defect));
    }
    let rho0 = canonical_state(h1, beta1)?.tensor(&canonical_state(h2, beta2)?);
    let traj = evolve_joint(
        &Schedule::constant(h1.clone(), tau)?,
        &Schedule::constant(h2.clone(), tau)?,
        &Schedule::constant(v.clone(), tau)?,
        &rho0,
        steps,
        units,
    )?;
    let dims = [h1.dim(), h2.dim()];
    let phi = |rho: &Distribution, keep: usize, beta: f64, h: &HermitianOperator| -> Result<f64> {
        let m = marginal(rho, &dims, keep)?;
        Ok(gibbs_measure(&m) + beta * m.expectation(h))
    };
    let end = traj.final_state();
    let ledger = traj.ledger;
    Ok(ContactRecord {
        delta_h1: ledger.delta_h1,
        delta_h2: ledger.delta_h2,
        flow_product: ledger.delta_h1 * (beta1 - beta2),
        lyapunov_2: [phi(&rho0, 1, beta1, h2)?, phi(end, 1, beta1, h2)?],
        lyapunov_1: [phi(&rho0, 0, beta2, h1)?, phi(end, 0, beta2, h1)?],
        ledger,
    })
}

/// Contact of an arbitrary system state with a fresh canonical partner
/// (partner first in the tensor order). Returns the system's final marginal,
/// the partner's energy gain and the functional `G + β⟨H_sys⟩` before/after.
#[derive(Debug, Clone)]
pub struct PartnerContact {
    pub system_after: Distribution,
    pub partner_energy_gain: f64,
    pub lyapunov: [f64; 2],
}

pub fn contact_with_canonical_partner(
    rho_sys: &Distribution,
    h_sys: &HermitianOperator,
    beta: f64,
    h_partner: &HermitianOperator,
    v: &HermitianOperator,
    tau: f64,
    units: &Units,
) -> Result<PartnerContact> {
    let defect = conservation_defect(h_partner, h_sys, v);
    if defect > CONSERVATION_TOL {
        return Err(Error::NonConservingCoupling(defect));
    }
    let partner = canonical_state(h_partner, beta)?;
    let joint = partner.tensor(rho_sys);
    let total = &bare_hamiltonian(h_partner, h_sys) + v;
    let after = joint.evolve(&total.evolution(tau, units.hbar));
    let dims = [h_partner.dim(), h_sys.dim()];
    let sys_after = marginal(&after, &dims, 1)?;
    let partner_after = marginal(&after, &dims, 0)?;
    Ok(PartnerContact {
        partner_energy_gain: partner_after.expectation(h_partner) - partner.expectation(h_partner),
        lyapunov: [
            gibbs_measure(rho_sys) + beta * rho_sys.expectation(h_sys),
            gibbs_measure(&sys_after) + beta * sys_after.expectation(h_sys),
        ],
        system_after: sys_after,
    })
}

/// Largest entry of `V - V†`; kept for callers validating hand-built couplings.
pub fn coupling_is_hermitian(v: &CMatrix) -> bool {
    max_abs(&(v - v.adjoint())) <= 1e-10
}
