//! Collision-model heat baths, partial thermalization and thermal-cycle ledgers.
//!
//! The system is always the left tensor factor and the bath ancilla the right one.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::canonical_state;
use crate::config::Units;
use crate::distribution::{gibbs_measure, marginal, trace_distance, Distribution, ProjectorSet};
use crate::error::{Error, Result};
use crate::interaction::{conservation_defect, swap_coupling};
use crate::operator::{max_abs, CMatrix, HermitianOperator};
use crate::random::{random_hermitian, random_levels, rng_from_seed};
use crate::schedule::{propagate, Schedule};

const CONSERVATION_TOL: f64 = 1e-9;
/// Largest trace distance at which a cycle counts as closed.
pub const CLOSURE_TOL: f64 = 1e-4;

/// A stream of fresh canonical ancillas. `reuse_probability` and
/// `mixing_strength` model non-ideal baths and are 0 for the ideal one.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealBath {
    pub beta: f64,
    pub ancilla_h: HermitianOperator,
    pub coupling: HermitianOperator,
    pub contact_time: f64,
    /// Probability that a collision reuses the previous outgoing ancilla.
    pub reuse_probability: f64,
    /// Weight of the previous outgoing ancilla mixed into each fresh one.
    pub mixing_strength: f64,
    /// Seed for the reuse draws.
    pub seed: u64,
}

impl IdealBath {
    pub fn new(
        beta: f64,
        ancilla_h: HermitianOperator,
        coupling: HermitianOperator,
        contact_time: f64,
    ) -> Result<Self> {
        let bath = Self {
            beta,
            ancilla_h,
            coupling,
            contact_time,
            reuse_probability: 0.0,
            mixing_strength: 0.0,
            seed: 0,
        };
        bath.validate()?;
        Ok(bath)
    }

    /// Ancilla copying the system Hamiltonian, coupled by `g · SWAP`. Each
    /// collision is a partial swap with angle `g τ / ħ`.
    pub fn partial_swap(
        beta: f64,
        h: &HermitianOperator,
        strength: f64,
        contact_time: f64,
    ) -> Result<Self> {
        Self::new(
            beta,
            h.clone(),
            swap_coupling(h.dim(), strength),
            contact_time,
        )
    }

    pub fn with_nonideal(
        mut self,
        reuse_probability: f64,
        mixing_strength: f64,
        seed: u64,
    ) -> Result<Self> {
        self.reuse_probability = reuse_probability;
        self.mixing_strength = mixing_strength;
        self.seed = seed;
        self.validate()?;
        Ok(self)
    }

    pub fn is_ideal(&self) -> bool {
        self.reuse_probability == 0.0 && self.mixing_strength == 0.0
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::NonPositiveBeta(self.beta));
        }
        if !(self.contact_time > 0.0) || !self.contact_time.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "contact_time must be positive, got {}",
                self.contact_time
            )));
        }
        for (name, p) in [
            ("reuse_probability", self.reuse_probability),
            ("mixing_strength", self.mixing_strength),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !self.coupling.dim().is_multiple_of(self.ancilla_h.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "coupling dim {} is not a multiple of ancilla dim {}",
                self.coupling.dim(),
                self.ancilla_h.dim()
            )));
        }
        Ok(())
    }

    fn check_system(&self, h_sys: &HermitianOperator) -> Result<()> {
        if h_sys.dim() * self.ancilla_h.dim() != self.coupling.dim() {
            return Err(Error::DimensionMismatch(format!(
                "system dim {} x ancilla dim {} vs coupling dim {}",
                h_sys.dim(),
                self.ancilla_h.dim(),
                self.coupling.dim()
            )));
        }
        let defect = conservation_defect(h_sys, &self.ancilla_h, &self.coupling);
        if defect > CONSERVATION_TOL {
            return Err(Error::NonConservingCoupling(defect));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub index: usize,
    #[serde(skip)]
    pub state: Option<Distribution>,
    /// `Φ = G(ρ) + β⟨H⟩`.
    pub lyapunov: f64,
    /// Energy gained by the ancilla in this collision.
    pub heat_into_bath: f64,
    pub trace_distance: f64,
}

/// Record 0 is the initial state; record `k` follows collision `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionTrace {
    pub records: Vec<CollisionRecord>,
    pub target: Distribution,
}

impl CollisionTrace {
    pub fn final_state(&self) -> &Distribution {
        self.records
            .last()
            .and_then(|r| r.state.as_ref())
            .expect("trace holds states")
    }

    pub fn total_heat(&self) -> f64 {
        self.records.iter().map(|r| r.heat_into_bath).sum()
    }

    /// Largest single-collision increase of `Φ` (negative when strictly decreasing).
    pub fn max_lyapunov_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].lyapunov - w[0].lyapunov)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// First collision index whose trace distance is below `tol`.
    pub fn collisions_to_reach(&self, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.trace_distance < tol)
            .map(|r| r.index)
    }

    /// CSV with header `index,lyapunov,heat_into_bath,trace_distance`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        out.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

fn lyapunov(rho: &Distribution, h: &HermitianOperator, beta: f64) -> f64 {
    gibbs_measure(rho) + beta * rho.expectation(h)
}

/// Repeated collisions of the system with ancillas drawn from `bath`.
pub fn thermalize(
    rho0: &Distribution,
    h_sys: &HermitianOperator,
    bath: &IdealBath,
    n_collisions: usize,
    steps_per_collision: usize,
    units: &Units,
) -> Result<CollisionTrace> {
    bath.validate()?;
    bath.check_system(h_sys)?;
    if rho0.dim() != h_sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian dim {}",
            rho0.dim(),
            h_sys.dim()
        )));
    }
    let (ds, da) = (h_sys.dim(), bath.ancilla_h.dim());
    let total = &(&h_sys.extend_right(da) + &bath.ancilla_h.extend_left(ds)) + &bath.coupling;
    let u = propagate(
        &Schedule::constant(total, bath.contact_time)?,
        steps_per_collision.max(1),
        units.hbar,
    )?;
    let fresh = canonical_state(&bath.ancilla_h, bath.beta)?;
    let target = canonical_state(h_sys, bath.beta)?;
    let mut rng = rng_from_seed(bath.seed);

    let record = |index, rho: &Distribution, heat| CollisionRecord {
        index,
        lyapunov: lyapunov(rho, h_sys, bath.beta),
        heat_into_bath: heat,
        trace_distance: trace_distance(rho, &target),
        state: Some(rho.clone()),
    };
    let mut records = vec![record(0, rho0, 0.0)];
    let mut rho = rho0.clone();
    let mut outgoing: Option<Distribution> = None;
    for k in 1..=n_collisions {
        let ancilla = match &outgoing {
            Some(prev)
                if bath.reuse_probability > 0.0 && rng.random::<f64>() < bath.reuse_probability =>
            {
                prev.clone()
            }
            Some(prev) if bath.mixing_strength > 0.0 => prev.mix(&fresh, bath.mixing_strength)?,
            _ => fresh.clone(),
        };
        let joint = rho.tensor(&ancilla).evolve(&u);
        rho = marginal(&joint, &[ds, da], 0)?;
        let anc_after = marginal(&joint, &[ds, da], 1)?;
        let heat = anc_after.expectation(&bath.ancilla_h) - ancilla.expectation(&bath.ancilla_h);
        records.push(record(k, &rho, heat));
        outgoing = Some(anc_after);
    }
    Ok(CollisionTrace { records, target })
}

fn block_canonical(h: &HermitianOperator, beta: f64, basis: &CMatrix) -> Result<CMatrix> {
    let hb = HermitianOperator::symmetrized(basis.adjoint() * h.matrix() * basis);
    let sigma = canonical_state(&hb, beta)?;
    Ok(basis * sigma.matrix() * basis.adjoint())
}

fn check_projector_dim(rho: &Distribution, h: &HermitianOperator, k: &ProjectorSet) -> Result<()> {
    if rho.dim() != h.dim() || k.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state {}, Hamiltonian {}, projectors {}",
            rho.dim(),
            h.dim(),
            k.dim()
        )));
    }
    Ok(())
}

/// `Σ_i tr(K_i ρ K_i) · exp(-β K_i H K_i) / Z_i`, each exponential restricted to `range(K_i)`.
pub fn partial_thermalize_blocks(
    rho: &Distribution,
    h: &HermitianOperator,
    beta: f64,
    k: &ProjectorSet,
) -> Result<Distribution> {
    check_projector_dim(rho, h, k)?;
    let d = rho.dim();
    let mut out = CMatrix::zeros(d, d);
    for (i, p) in k.projectors().iter().enumerate() {
        let w = (p * rho.matrix() * p).trace().re;
        if w <= 0.0 {
            continue;
        }
        out += block_canonical(h, beta, &k.range_basis(i))? * num_complex::Complex64::new(w, 0.0);
    }
    Distribution::new(out)
}

/// `K_α ρ K_α + tr(K_β ρ K_β) · (canonical state on range(K_β))`.
pub fn partial_thermalize_isolated(
    rho: &Distribution,
    h: &HermitianOperator,
    beta: f64,
    k_alpha: &CMatrix,
    k_beta: &CMatrix,
) -> Result<Distribution> {
    let k = ProjectorSet::new(vec![k_alpha.clone(), k_beta.clone()])?;
    check_projector_dim(rho, h, &k)?;
    let mut out = k_alpha * rho.matrix() * k_alpha;
    let w = (k_beta * rho.matrix() * k_beta).trace().re;
    if w > 0.0 {
        out += block_canonical(h, beta, &k.range_basis(1))? * num_complex::Complex64::new(w, 0.0);
    }
    Distribution::new(out)
}

/// One instruction of a thermal cycle.
#[derive(Debug, Clone)]
pub enum CycleStep {
    /// Isolated evolution; the schedule must start at the current Hamiltonian.
    Drive { schedule: Schedule, steps: usize },
    /// Collisions with a bath at fixed system Hamiltonian.
    Contact { bath: IdealBath, collisions: usize },
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub initial_state: Distribution,
    pub hamiltonian: HermitianOperator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEntry {
    pub beta: f64,
    /// Energy into the bath.
    pub delta_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLedger {
    pub contacts: Vec<ContactEntry>,
    /// Work done on the system by the drives.
    pub net_work: f64,
    /// Trace distance between the final and initial system state.
    pub closure_error: f64,
    /// Largest entry of `H_final - H_initial`.
    pub hamiltonian_closure: f64,
    pub clausius_sum: f64,
}

impl CycleLedger {
    pub fn is_closed(&self) -> bool {
        self.closure_error <= CLOSURE_TOL && self.hamiltonian_closure <= CLOSURE_TOL
    }

    /// `Some(Σ β_i ΔQ_i ≥ -tol)` on closed cycles, `None` otherwise.
    pub fn clausius_holds(&self, tol: f64) -> Option<bool> {
        self.is_closed().then_some(self.clausius_sum >= -tol)
    }

    pub fn total_heat(&self) -> f64 {
        self.contacts.iter().map(|c| c.delta_q).sum()
    }

    /// CSV with header `beta,delta_q`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for c in &self.contacts {
            out.serialize(c)
                .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        }
        out.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }
}

pub fn run_cycle(plan: &[CycleStep], system: &SystemSpec, units: &Units) -> Result<CycleLedger> {
    if plan.is_empty() {
        return Err(Error::InvalidCycle("empty plan".into()));
    }
    if system.initial_state.dim() != system.hamiltonian.dim() {
        return Err(Error::InvalidCycle(
            "initial state and Hamiltonian dimensions differ".into(),
        ));
    }
    let mut rho = system.initial_state.clone();
    let mut h = system.hamiltonian.clone();
    let mut contacts = Vec::new();
    let mut net_work = 0.0;
    for (i, step) in plan.iter().enumerate() {
        match step {
            CycleStep::Drive { schedule, steps } => {
                if schedule.dim() != h.dim() {
                    return Err(Error::InvalidCycle(format!(
                        "step {i}: drive dimension {}",
                        schedule.dim()
                    )));
                }
                let jump = max_abs(&(schedule.initial().matrix() - h.matrix()));
                if jump > 1e-9 {
                    return Err(Error::InvalidCycle(format!(
                        "step {i}: drive starts {jump:.3e} away from the current Hamiltonian"
                    )));
                }
                let before = rho.expectation(&h);
                rho = rho.evolve(&propagate(schedule, *steps, units.hbar)?);
                h = schedule.last();
                net_work += rho.expectation(&h) - before;
            }
            CycleStep::Contact { bath, collisions } => {
                let trace = thermalize(&rho, &h, bath, *collisions, 1, units)
                    .map_err(|e| Error::InvalidCycle(format!("step {i}: {e}")))?;
                rho = trace.final_state().clone();
                contacts.push(ContactEntry {
                    beta: bath.beta,
                    delta_q: trace.total_heat(),
                });
            }
        }
    }
    Ok(CycleLedger {
        clausius_sum: contacts.iter().map(|c| c.beta * c.delta_q).sum(),
        contacts,
        net_work,
        closure_error: trace_distance(&rho, &system.initial_state),
        hamiltonian_closure: max_abs(&(h.matrix() - system.hamiltonian.matrix())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineBounds {
    /// Heat drawn from the hottest bath.
    pub q_in: f64,
    /// Work delivered by the system, `-net_work`.
    pub work_out: f64,
    pub efficiency: f64,
    /// `1 - T_cold / T_hot`.
    pub carnot_bound: f64,
    pub margin: f64,
}

const HEAT_FLOOR: f64 = 1e-12;

pub fn engine_bounds(ledger: &CycleLedger) -> Result<EngineBounds> {
    let active: Vec<&ContactEntry> = ledger
        .contacts
        .iter()
        .filter(|c| c.delta_q.abs() > HEAT_FLOOR)
        .collect();
    let mut betas: Vec<f64> = active.iter().map(|c| c.beta).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    if betas.is_empty() || betas.len() > 2 {
        return Err(Error::InvalidCycle(format!(
            "engine bounds need one or two bath temperatures with heat exchange, found {}",
            betas.len()
        )));
    }
    let (hot, cold) = (betas[0], *betas.last().unwrap());
    let q_in: f64 = -active
        .iter()
        .filter(|c| (c.beta - hot).abs() <= 1e-12 * hot)
        .map(|c| c.delta_q)
        .sum::<f64>();
    if q_in <= HEAT_FLOOR {
        return Err(Error::InvalidCycle(format!(
            "no heat drawn from the hot bath (Q_in = {q_in:.3e})"
        )));
    }
    let work_out = -ledger.net_work;
    let efficiency = work_out / q_in;
    let carnot_bound = 1.0 - hot / cold;
    Ok(EngineBounds {
        q_in,
        work_out,
        efficiency,
        carnot_bound,
        margin: carnot_bound - efficiency,
    })
}

/// Exact (full) swap with a fresh canonical copy of the system at `h`, which
/// resets the system to `canonical(h, β)`.
pub fn full_swap_contact(beta: f64, h: &HermitianOperator) -> Result<CycleStep> {
    Ok(CycleStep::Contact {
        bath: IdealBath::partial_swap(beta, h, std::f64::consts::FRAC_PI_2, 1.0)?,
        collisions: 1,
    })
}

/// Random closed cycle on a qubit or qutrit: canonical start at `H₀`, random
/// drives and partial-swap contacts at random temperatures, return drive to
/// `H₀`, and a final full swap with the starting bath to close the cycle.
pub fn random_closed_cycle<R: Rng + ?Sized>(rng: &mut R) -> Result<(SystemSpec, Vec<CycleStep>)> {
    let d = rng.random_range(2..=3);
    let h0 = HermitianOperator::from_real_diagonal(&random_levels(rng, d, 2.0));
    let beta0 = rng.random_range(0.3..3.0);
    let system = SystemSpec {
        initial_state: canonical_state(&h0, beta0)?,
        hamiltonian: h0.clone(),
    };
    let mut plan = Vec::new();
    let mut h = h0.clone();
    for _ in 0..rng.random_range(1..=3) {
        let next = &random_hermitian(rng, d, 1.0)
            + &HermitianOperator::from_real_diagonal(&random_levels(rng, d, 2.0));
        plan.push(CycleStep::Drive {
            schedule: Schedule::linear(h.clone(), next.clone(), rng.random_range(0.2..2.0))?,
            steps: 40,
        });
        h = next;
        let bath = IdealBath::partial_swap(
            rng.random_range(0.2..4.0),
            &h,
            1.0,
            rng.random_range(0.1..1.5),
        )?;
        plan.push(CycleStep::Contact {
            bath,
            collisions: rng.random_range(1..=4),
        });
    }
    plan.push(CycleStep::Drive {
        schedule: Schedule::linear(h, h0.clone(), rng.random_range(0.2..2.0))?,
        steps: 40,
    });
    plan.push(full_swap_contact(beta0, &h0)?);
    Ok((system, plan))
}

/// Qubit Otto cycle: gap `w_cold` in contact with the cold bath, sudden or
/// slow change to `w_hot`, full contact with the hot bath, and back.
pub fn otto_cycle(
    w_cold: f64,
    w_hot: f64,
    beta_cold: f64,
    beta_hot: f64,
) -> Result<(SystemSpec, Vec<CycleStep>)> {
    let hc = HermitianOperator::from_real_diagonal(&[0.0, w_cold]);
    let hh = HermitianOperator::from_real_diagonal(&[0.0, w_hot]);
    let system = SystemSpec {
        initial_state: canonical_state(&hc, beta_cold)?,
        hamiltonian: hc.clone(),
    };
    let plan = vec![
        CycleStep::Drive {
            schedule: Schedule::linear(hc.clone(), hh.clone(), 1.0)?,
            steps: 10,
        },
        full_swap_contact(beta_hot, &hh)?,
        CycleStep::Drive {
            schedule: Schedule::linear(hh, hc.clone(), 1.0)?,
            steps: 10,
        },
        full_swap_contact(beta_cold, &hc)?,
    ];
    Ok((system, plan))
}
