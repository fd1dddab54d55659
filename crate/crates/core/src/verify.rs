//! Randomized checks of the core inequalities, aggregated into a deterministic report.

use serde::{Deserialize, Serialize};

use crate::bath::{random_closed_cycle, run_cycle};
use crate::canonical::canonical_state;
use crate::config::Units;
use crate::distribution::{gibbs_measure, marginal, relative_measure, Distribution};
use crate::error::{Error, Result};
use crate::interaction::{
    contact_experiment, contact_with_canonical_partner, energy_conserving_coupling_with,
};
use crate::operator::HermitianOperator;
use crate::parallel::map_trials;
use crate::random::{
    derive_seed, random_density, random_hermitian, random_levels, random_unitary, rng_from_seed,
    TrialRng,
};

/// Allowed violation per check; a trial passes when its margin is `≥ -tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyTolerances {
    pub klein: f64,
    pub second_law: f64,
    pub canonical_minimum: f64,
    pub lyapunov: f64,
    pub temperature_flow: f64,
    pub clausius: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        Self {
            klein: 1e-9,
            second_law: 1e-9,
            canonical_minimum: 1e-9,
            lyapunov: 1e-9,
            temperature_flow: 1e-9,
            clausius: 1e-6,
        }
    }
}

impl VerifyTolerances {
    fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("clausius", self.clausius),
            ("klein", self.klein),
            ("lyapunov", self.lyapunov),
            ("canonical_minimum", self.canonical_minimum),
            ("second_law", self.second_law),
            ("temperature_flow", self.temperature_flow),
        ]
    }

    /// Sets one tolerance by check name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "klein" => &mut self.klein,
            "second_law" => &mut self.second_law,
            "canonical_minimum" => &mut self.canonical_minimum,
            "lyapunov" => &mut self.lyapunov,
            "temperature_flow" => &mut self.temperature_flow,
            "clausius" => &mut self.clausius,
            _ => return Err(Error::InvalidArgument(format!("unknown check `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.entries() {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "tolerance for {name} must be non-negative, got {t}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub seed: u64,
    pub trials: usize,
    /// Largest single-system dimension drawn (at least 2).
    pub max_dim: usize,
    #[serde(default)]
    pub tolerances: VerifyTolerances,
}

impl VerifySettings {
    pub fn new(seed: u64, trials: usize, max_dim: usize) -> Self {
        Self {
            seed,
            trials,
            max_dim,
            tolerances: VerifyTolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if !(2..=8).contains(&self.max_dim) {
            return Err(Error::InvalidArgument(format!(
                "max_dim must lie in 2..=8, got {}",
                self.max_dim
            )));
        }
        self.tolerances.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// Smallest margin over all trials (negative means a violation).
    pub worst_margin: f64,
    pub tolerance: f64,
}

impl CheckSummary {
    pub fn all_passed(&self) -> bool {
        self.passed == self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub settings: VerifySettings,
    /// Sorted by check name.
    pub checks: Vec<CheckSummary>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn dim(rng: &mut TrialRng, max_dim: usize) -> usize {
    use rand::Rng;
    rng.random_range(2..=max_dim)
}

fn beta(rng: &mut TrialRng) -> f64 {
    use rand::Rng;
    rng.random_range(0.1..4.0)
}

fn klein_margin(rng: &mut TrialRng, max_dim: usize) -> Result<f64> {
    let d = dim(rng, max_dim);
    let (rho, sigma) = (random_density(rng, d), random_density(rng, d));
    Ok(relative_measure(&rho, &sigma)?.value())
}

fn second_law_margin(rng: &mut TrialRng, max_dim: usize) -> Result<f64> {
    let (d1, d2) = (dim(rng, max_dim.min(4)), dim(rng, max_dim.min(4)));
    let rho = random_density(rng, d1).tensor(&random_density(rng, d2));
    let after = rho.evolve(&random_unitary(rng, d1 * d2));
    let g = |r: &Distribution| -> Result<f64> {
        Ok(gibbs_measure(&marginal(r, &[d1, d2], 0)?) + gibbs_measure(&marginal(r, &[d1, d2], 1)?))
    };
    Ok(g(&rho)? - g(&after)?)
}

fn canonical_minimum_margin(rng: &mut TrialRng, max_dim: usize) -> Result<f64> {
    let d = dim(rng, max_dim);
    let h = random_hermitian(rng, d, 1.0);
    let b = beta(rng);
    let rho = random_density(rng, d);
    let can = canonical_state(&h, b)?;
    let phi = |r: &Distribution| gibbs_measure(r) + b * r.expectation(&h);
    Ok(phi(&rho) - phi(&can))
}

fn resonant_pair(rng: &mut TrialRng, max_dim: usize) -> HermitianOperator {
    let d = dim(rng, max_dim.min(4));
    let levels = random_levels(rng, d, 2.0);
    HermitianOperator::from_real_diagonal(&levels).conjugated(random_unitary(rng, d).matrix())
}

fn lyapunov_margin(rng: &mut TrialRng, max_dim: usize) -> Result<f64> {
    use rand::Rng;
    let h = resonant_pair(rng, max_dim);
    let v = energy_conserving_coupling_with(&h, &h, rng)?;
    let rho = random_density(rng, h.dim());
    let tau = rng.random_range(0.1..3.0);
    let r = contact_with_canonical_partner(&rho, &h, beta(rng), &h, &v, tau, &Units::natural())?;
    Ok(r.lyapunov[0] - r.lyapunov[1])
}

fn temperature_flow_margin(rng: &mut TrialRng, max_dim: usize) -> Result<f64> {
    use rand::Rng;
    let h = resonant_pair(rng, max_dim);
    let v = energy_conserving_coupling_with(&h, &h, rng)?;
    let (b1, b2) = (beta(rng), beta(rng));
    let tau = rng.random_range(0.1..3.0);
    Ok(contact_experiment(b1, &h, b2, &h, &v, tau, 4, &Units::natural())?.flow_product)
}

fn clausius_margin(rng: &mut TrialRng) -> Result<f64> {
    let (system, plan) = random_closed_cycle(rng)?;
    let ledger = run_cycle(&plan, &system, &Units::natural())?;
    if !ledger.is_closed() {
        return Err(Error::InvalidCycle(format!(
            "cycle failed to close ({:.3e})",
            ledger.closure_error
        )));
    }
    Ok(ledger.clausius_sum)
}

type MarginFn = fn(&mut TrialRng, usize) -> Result<f64>;

/// Runs every check `trials` times; trial `i` of check `c` draws from
/// `derive_seed(seed, c, i)`, so the report depends only on the settings.
pub fn verify_suite(settings: &VerifySettings) -> Result<VerifyReport> {
    settings.validate()?;
    let checks: [(&str, MarginFn); 6] = [
        ("clausius", |rng, _| clausius_margin(rng)),
        ("klein", klein_margin),
        ("lyapunov", lyapunov_margin),
        ("canonical_minimum", canonical_minimum_margin),
        ("second_law", second_law_margin),
        ("temperature_flow", temperature_flow_margin),
    ];
    let tolerances = settings.tolerances.entries();
    let mut summaries = Vec::with_capacity(checks.len());
    for (c, ((name, f), (_, tol))) in checks.iter().zip(tolerances).enumerate() {
        let margins = map_trials(settings.trials, |i| {
            let mut rng = rng_from_seed(derive_seed(settings.seed, c as u64, i as u64));
            f(&mut rng, settings.max_dim)
        });
        let margins = margins.into_iter().collect::<Result<Vec<f64>>>()?;
        summaries.push(CheckSummary {
            name: (*name).to_string(),
            trials: settings.trials,
            passed: margins.iter().filter(|&&m| m >= -tol).count(),
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            tolerance: tol,
        });
    }
    summaries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(VerifyReport {
        all_passed: summaries.iter().all(CheckSummary::all_passed),
        settings: settings.clone(),
        checks: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let s = VerifySettings::new(42, 10, 4);
        let a = verify_suite(&s).unwrap();
        assert!(a.all_passed, "{}", a.to_json());
        assert_eq!(a.checks.len(), 6);
        assert_eq!(a.to_json(), verify_suite(&s).unwrap().to_json());
        let names: Vec<&str> = a.checks.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn settings_are_validated() {
        assert!(verify_suite(&VerifySettings::new(1, 0, 3)).is_err());
        assert!(verify_suite(&VerifySettings::new(1, 1, 1)).is_err());
        let mut s = VerifySettings::new(1, 1, 3);
        s.tolerances.set("klein", -1.0).unwrap();
        assert!(matches!(verify_suite(&s), Err(Error::InvalidArgument(_))));
        assert!(s.tolerances.set("nope", 1.0).is_err());
    }

    #[test]
    fn different_seeds_give_different_margins() {
        let a = verify_suite(&VerifySettings::new(1, 3, 3)).unwrap();
        let b = verify_suite(&VerifySettings::new(2, 3, 3)).unwrap();
        assert_ne!(a.checks[1].worst_margin, b.checks[1].worst_margin);
    }
}
