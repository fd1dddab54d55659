//! Passive states, ergotropy, explicit extraction schedules, N-passivity and
//! the same-temperature criteria.

use serde::{Deserialize, Serialize};

use crate::config::Units;
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::operator::{unitary_log, CMatrix, HermitianOperator, UnitaryOperator};
use crate::schedule::{propagate, Schedule};

/// The passive rearrangement of a state together with the unitary that produces it.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveForm {
    pub passive_state: Distribution,
    /// `V = Σ_j |E_j⟩⟨Λ_j|`. Not canonical when either spectrum is degenerate.
    pub aligning_unitary: UnitaryOperator,
    pub ergotropy: f64,
}

fn check_dims(rho: &Distribution, h: &HermitianOperator) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian dim {}",
            rho.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// Assigns the eigenvalues of `ρ` in descending order to the energy levels in
/// ascending order. Ties keep index order (stable sort).
pub fn passive_form(rho: &Distribution, h: &HermitianOperator) -> Result<PassiveForm> {
    check_dims(rho, h)?;
    let d = rho.dim();
    let rs = rho.spectrum();
    let hs = h.eig();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| rs.values[b].total_cmp(&rs.values[a]));
    let probs: Vec<f64> = order.iter().map(|&i| rs.values[i].max(0.0)).collect();

    let mut v = CMatrix::zeros(d, d);
    for (j, &src) in order.iter().enumerate() {
        let e = hs.basis.column(j);
        let mut lambda = rs.basis.column(src).into_owned();
        // gauge: make ⟨E_j|Λ_j⟩ real and non-negative so aligned states map to +1
        let overlap = e.dotc(&lambda);
        if overlap.norm() > 1e-12 {
            lambda *= overlap.conj() / overlap.norm();
        }
        v += e * lambda.adjoint();
    }
    let passive_state = Distribution::from_trusted(
        HermitianOperator::from_spectrum(&probs, &hs.basis).into_matrix(),
    );
    let passive_energy: f64 = probs.iter().zip(&hs.values).map(|(p, e)| p * e).sum();
    Ok(PassiveForm {
        passive_state,
        aligning_unitary: UnitaryOperator::from_matrix_unchecked(v),
        ergotropy: rho.expectation(h) - passive_energy,
    })
}

/// Maximum mean work extractable by a cyclic Hamiltonian variation, `tr H(ρ - ρ̃)`.
pub fn ergotropy(rho: &Distribution, h: &HermitianOperator) -> Result<f64> {
    Ok(passive_form(rho, h)?.ergotropy)
}

const PROB_TOL: f64 = 1e-12;

/// Passivity in the strict ordering sense `p_m ≥ p_n ⟺ E_m ≤ E_n`: the state
/// is diagonal in the energy basis, uniform on each degenerate level and
/// non-increasing in energy. Violations below `1e-12` count as ties.
pub fn is_passive(rho: &Distribution, h: &HermitianOperator) -> Result<bool> {
    check_dims(rho, h)?;
    let hs = h.eig();
    let d = hs.dim();
    let scale = hs.values.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let rotated = hs.basis.adjoint() * rho.matrix() * &hs.basis;
    // group eigenvalues into degenerate levels
    let mut level_of = vec![0usize; d];
    for i in 1..d {
        level_of[i] =
            level_of[i - 1] + usize::from(hs.values[i] - hs.values[i - 1] > 1e-10 * scale);
    }
    let mut level_prob: Vec<Option<f64>> = vec![None; level_of[d - 1] + 1];
    for a in 0..d {
        for b in 0..d {
            if a != b && rotated[(a, b)].norm() > PROB_TOL {
                return Ok(false);
            }
        }
        let p = rotated[(a, a)].re;
        match level_prob[level_of[a]] {
            Some(q) if (q - p).abs() > PROB_TOL => return Ok(false),
            Some(_) => {}
            None => level_prob[level_of[a]] = Some(p),
        }
    }
    Ok(level_prob
        .windows(2)
        .all(|w| w[1].unwrap() <= w[0].unwrap() + PROB_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// The literal cyclic Hamiltonian `H₀ cos(2πt/τ) - (2iħ/τ) sin²(πt/τ) ln V`.
    Smooth,
    /// `H₀` held, then the generator `iħ ln V / τ_hold` alone, then `H₀` again.
    Piecewise,
}

/// A cyclic schedule starting and ending at `H₀`, with the propagator it is
/// meant to realize.
#[derive(Debug, Clone)]
pub struct ExtractionSchedule {
    pub schedule: Schedule,
    pub target: UnitaryOperator,
    pub ergotropy: f64,
    pub mode: ExtractionMode,
}

pub fn extraction_schedule(
    rho: &Distribution,
    h0: &HermitianOperator,
    tau: f64,
    mode: ExtractionMode,
    units: &Units,
) -> Result<ExtractionSchedule> {
    check_dims(rho, h0)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "period must be positive, got {tau}"
        )));
    }
    let hbar = units.hbar;
    match mode {
        ExtractionMode::Piecewise => {
            let hold = tau / 3.0;
            let free = h0.evolution(hold, hbar);
            let rho_mid = rho.evolve(&free);
            let pf = passive_form(&rho_mid, h0)?;
            let log = unitary_log(&pf.aligning_unitary)?;
            let generator = log.generator().scaled(hbar / hold);
            let schedule = Schedule::constant(h0.clone(), hold)?
                .then(Schedule::constant(generator, hold)?)?
                .then(Schedule::constant(h0.clone(), hold)?)?;
            let target = free.then_after(&pf.aligning_unitary).then_after(&free);
            Ok(ExtractionSchedule {
                schedule,
                target,
                ergotropy: pf.ergotropy,
                mode,
            })
        }
        ExtractionMode::Smooth => {
            let pf = passive_form(rho, h0)?;
            let log = unitary_log(&pf.aligning_unitary)?;
            // -(2iħ/τ) ln V with ln V = -iK
            let rotation = log.generator().scaled(-2.0 * hbar / tau);
            let h0c = h0.clone();
            let schedule = Schedule::function(tau, move |t| {
                let phase = std::f64::consts::PI * t / tau;
                &h0c.scaled((2.0 * phase).cos()) + &rotation.scaled(phase.sin().powi(2))
            })?;
            Ok(ExtractionSchedule {
                schedule,
                target: pf.aligning_unitary,
                ergotropy: pf.ergotropy,
                mode,
            })
        }
    }
}

/// Outcome of propagating an extraction schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub steps: usize,
    pub work_extracted: f64,
    pub ergotropy: f64,
    /// `|tr(V† U(τ))| / d`.
    pub fidelity: f64,
    /// Same against `V†`.
    pub adjoint_fidelity: f64,
    pub unitarity_drift: f64,
}

/// `W = tr H₀ ρ - tr H₀ U ρ U†` for `U` the propagator of the schedule.
pub fn run_extraction(
    rho: &Distribution,
    h0: &HermitianOperator,
    plan: &ExtractionSchedule,
    steps: usize,
    units: &Units,
) -> Result<ExtractionRun> {
    let u = propagate(&plan.schedule, steps, units.hbar)?;
    let after = rho.evolve(&u);
    Ok(ExtractionRun {
        steps,
        work_extracted: rho.expectation(h0) - after.expectation(h0),
        ergotropy: plan.ergotropy,
        fidelity: plan.target.fidelity(&u),
        adjoint_fidelity: plan.target.adjoint().fidelity(&u),
        unitarity_drift: u.unitarity_deviation(),
    })
}

/// Energy levels with occupation probabilities, diagonal in a common basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSystem {
    energies: Vec<f64>,
    probs: Vec<f64>,
}

impl LevelSystem {
    pub fn new(energies: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if energies.len() != probs.len() || energies.is_empty() {
            return Err(Error::InvalidLevelSystem(format!(
                "{} energies vs {} probabilities",
                energies.len(),
                probs.len()
            )));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidLevelSystem(
                "energies must be ascending".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidLevelSystem("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLevelSystem(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { energies, probs })
    }

    /// Canonical occupations of `energies` at `beta`.
    pub fn canonical(energies: Vec<f64>, beta: f64) -> Result<Self> {
        let (probs, _) = crate::canonical::boltzmann(&energies, beta)?;
        Self::new(energies, probs)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&self.energies)
    }

    pub fn state(&self) -> Distribution {
        Distribution::from_trusted(HermitianOperator::from_real_diagonal(&self.probs).into_matrix())
    }

    fn energy_scale(&self) -> f64 {
        self.energies.iter().fold(1.0f64, |a, e| a.max(e.abs()))
    }
}

/// Upper bound on composition pairs examined by [`is_n_passive`].
pub const PAIR_BUDGET: u128 = 10_000_000;

/// Two multisets of levels (occupation counts) of equal size `N`. `lower` has
/// energy no higher than `higher` yet strictly lower probability, breaking
/// `(Σ a_i E_i ≤ Σ b_j E_j) ⟺ (Π p_i^{a_i} ≥ Π p_j^{b_j})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapWitness {
    pub lower: Vec<usize>,
    pub higher: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPassivity {
    pub n: usize,
    pub passive: bool,
    pub witness: Option<SwapWitness>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of compositions of `n` into `d` non-negative parts.
pub fn composition_count(n: usize, d: usize) -> u128 {
    binomial((n + d - 1) as u128, (d - 1) as u128)
}

fn compositions(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            rec(remaining - k, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

const LOG_TOL: f64 = 1e-12;

/// Whether `N` independent copies are jointly passive, by enumerating every
/// pair of compositions `{a_i}`, `{b_j}` of `N`. Probabilities are compared
/// in log space (`ln 0 = -∞`).
pub fn is_n_passive(sys: &LevelSystem, n: usize) -> Result<NPassivity> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let d = sys.dim();
    let count = composition_count(n, d);
    let pairs = count * count;
    if pairs > PAIR_BUDGET {
        return Err(Error::BudgetExceeded {
            n,
            pairs,
            budget: PAIR_BUDGET,
        });
    }
    let log_p: Vec<f64> = sys.probs.iter().map(|p| p.ln()).collect();
    let energy_tol = 1e-12 * sys.energy_scale() * n as f64;
    let comps = compositions(n, d);
    let keyed: Vec<(f64, f64)> = comps
        .iter()
        .map(|c| {
            let e: f64 = c
                .iter()
                .zip(&sys.energies)
                .map(|(&k, e)| k as f64 * e)
                .sum();
            let lp: f64 = c
                .iter()
                .zip(&log_p)
                .map(|(&k, lp)| if k == 0 { 0.0 } else { k as f64 * lp })
                .sum();
            (e, lp)
        })
        .collect();
    for (ia, &(ea, la)) in keyed.iter().enumerate() {
        for (ib, &(eb, lb)) in keyed.iter().enumerate() {
            if ea <= eb + energy_tol && log_lt(la, lb) {
                return Ok(NPassivity {
                    n,
                    passive: false,
                    witness: Some(SwapWitness {
                        lower: comps[ia].clone(),
                        higher: comps[ib].clone(),
                    }),
                });
            }
        }
    }
    Ok(NPassivity {
        n,
        passive: true,
        witness: None,
    })
}

/// `a < b - tol` in log space, with `-∞` below every finite value and equal to itself.
fn log_lt(a: f64, b: f64) -> bool {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => a < b - LOG_TOL,
        (false, true) => true,
        _ => false,
    }
}

/// One level triple `E_i < E_j < E_k` and the first `N` at which an integer
/// separates `l = N(E_j-E_i)/(E_k-E_i)` from
/// `m = N(ln p_i - ln p_j)/(ln p_i - ln p_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriplePrediction {
    pub levels: [usize; 3],
    pub n: usize,
    pub l: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinFailing {
    /// Smallest `N ≤ N_max` found by composition enumeration.
    pub enumerated: Option<usize>,
    /// Smallest `N ≤ N_max` predicted by any level triple.
    pub predicted: Option<TriplePrediction>,
}

/// `(l, m)` for triple `(i, j, k)` at copy number `n`, or `None` when the
/// triple cannot produce a violation (degenerate energies, `p_j = 0`, or
/// equal probabilities throughout).
pub fn triple_separation(sys: &LevelSystem, [i, j, k]: [usize; 3], n: usize) -> Option<(f64, f64)> {
    let (e, p) = (&sys.energies, &sys.probs);
    if !(e[i] < e[j] && e[j] < e[k]) || p[j] == 0.0 {
        return None;
    }
    let nf = n as f64;
    let l = nf * (e[j] - e[i]) / (e[k] - e[i]);
    let m = if p[k] == 0.0 {
        0.0
    } else {
        let denom = p[i].ln() - p[k].ln();
        if denom == 0.0 {
            return None;
        }
        nf * (p[i].ln() - p[j].ln()) / denom
    };
    Some((l, m))
}

/// Whether some `n ∈ [1, N-1]` separates `l` from `m`. An integer equal to
/// `l` is an energy tie with unequal probabilities and counts; one equal to
/// `m` is a probability tie and does not.
fn integer_separates(l: f64, m: f64, n: usize) -> bool {
    const EPS: f64 = 1e-9;
    if (l - m).abs() <= EPS {
        return false;
    }
    (1..n).any(|k| {
        let k = k as f64;
        let at_l = (k - l).abs() <= EPS;
        let inside = if l < m {
            k > l && k < m - EPS
        } else {
            k < l && k > m + EPS
        };
        at_l || inside
    })
}

/// Smallest failing `N` by the triple criterion alone.
pub fn triple_prediction(sys: &LevelSystem, n_max: usize) -> Option<TriplePrediction> {
    let d = sys.dim();
    for n in 2..=n_max {
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    if let Some((l, m)) = triple_separation(sys, [i, j, k], n) {
                        if integer_separates(l, m, n) {
                            return Some(TriplePrediction {
                                levels: [i, j, k],
                                n,
                                l,
                                m,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

/// Smallest `N ≤ n_max` at which `N` copies stop being passive, together with
/// the triple-criterion prediction. For three levels the two coincide; with
/// more levels the prediction is an upper bound.
pub fn min_failing_n(sys: &LevelSystem, n_max: usize) -> Result<MinFailing> {
    if !is_n_passive(sys, 1)?.passive {
        return Err(Error::InvalidLevelSystem(
            "system is not passive (fails at N = 1)".into(),
        ));
    }
    let predicted = triple_prediction(sys, n_max);
    let mut enumerated = None;
    for n in 2..=n_max {
        if !is_n_passive(sys, n)?.passive {
            enumerated = Some(n);
            break;
        }
    }
    Ok(MinFailing {
        enumerated,
        predicted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletePassivity {
    pub completely_passive: bool,
    /// Common inverse temperature of all gaps, when they agree.
    pub beta: Option<f64>,
    /// Largest minus smallest gap estimate `ln(p_i/p_j)/(E_j-E_i)`.
    pub spread: f64,
    pub diagnostic: Option<String>,
}

/// Complete passivity holds iff every gap yields the same `β = ln(p_i/p_j)/(E_j - E_i)`.
pub fn is_completely_passive(sys: &LevelSystem, tol: f64) -> Result<CompletePassivity> {
    if sys.probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidLevelSystem(
            "complete passivity needs full support".into(),
        ));
    }
    let d = sys.dim();
    let mut estimates = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let gap = sys.energies[j] - sys.energies[i];
            let ratio = (sys.probs[i] / sys.probs[j]).ln();
            if gap <= 1e-12 * sys.energy_scale() {
                if ratio.abs() > LOG_TOL {
                    return Ok(CompletePassivity {
                        completely_passive: false,
                        beta: None,
                        spread: f64::INFINITY,
                        diagnostic: Some(format!(
                            "degenerate levels {i} and {j} carry unequal probabilities {} and {}",
                            sys.probs[i], sys.probs[j]
                        )),
                    });
                }
                continue;
            }
            estimates.push(ratio / gap);
        }
    }
    if estimates.is_empty() {
        return Ok(CompletePassivity {
            completely_passive: true,
            beta: None,
            spread: 0.0,
            diagnostic: Some("no non-degenerate gaps".into()),
        });
    }
    let lo = estimates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let ok = spread <= tol && lo >= -tol;
    Ok(CompletePassivity {
        completely_passive: ok,
        beta: ok.then(|| estimates.iter().sum::<f64>() / estimates.len() as f64),
        spread,
        diagnostic: (!ok).then(|| format!("gap inverse temperatures range over [{lo}, {hi}]")),
    })
}

/// Necessary condition for equal temperature: `ρ₁ ⊗ ρ₂` passive for `H₁ ⊗ I + I ⊗ H₂`.
pub fn same_temperature_necessary(
    rho1: &Distribution,
    h1: &HermitianOperator,
    rho2: &Distribution,
    h2: &HermitianOperator,
) -> Result<bool> {
    check_dims(rho1, h1)?;
    check_dims(rho2, h2)?;
    let joint_h = &h1.extend_right(h2.dim()) + &h2.extend_left(h1.dim());
    is_passive(&rho1.tensor(rho2), &joint_h)
}

/// `e^{-β(Δ₁+Δ₂)} = e^{-βΔ₁} e^{-βΔ₂}` for every pair of gaps, within `1e-12`.
pub fn check_ratio_law(beta: f64, gaps: &[f64]) -> Result<bool> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveBeta(beta));
    }
    let pi = |g: f64| (-beta * g).exp();
    Ok(gaps.iter().all(|&a| {
        gaps.iter()
            .all(|&b| (pi(a + b) - pi(a) * pi(b)).abs() <= 1e-12)
    }))
}

/// Largest relative deviation of `p_i/p_j` from `e^{-β(E_i - E_j)}` over all
/// level pairs of the canonical state of `h`.
pub fn canonical_ratio_residual(h: &HermitianOperator, beta: f64) -> Result<f64> {
    let spec = crate::canonical::CanonicalSpec::new(h.clone(), beta)?;
    let (e, p) = (spec.energies(), spec.probabilities());
    let mut worst = 0.0f64;
    for i in 0..e.len() {
        for j in 0..e.len() {
            let expected = (-beta * (e[i] - e[j])).exp();
            worst = worst.max((p[i] / p[j] - expected).abs() / expected);
        }
    }
    Ok(worst)
}
