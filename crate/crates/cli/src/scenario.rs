//! Scenario documents: the JSON schema, `--set` overrides and validation into
//! library types. Validation failures carry the offending field path.

use qthermo::bath::{CycleStep, IdealBath, SystemSpec};
use qthermo::canonical::{beta_for_energy, canonical_state};
use qthermo::distribution::Distribution;
use qthermo::interaction::swap_coupling;
use qthermo::operator::{CMatrix, HermitianOperator};
use qthermo::passivity::{ExtractionMode, LevelSystem};
use qthermo::protocols::StageMode;
use qthermo::schedule::Schedule;
use qthermo::verify::{VerifySettings, VerifyTolerances};
use qthermo::Units;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use num_complex::Complex64;

/// Row-major complex matrix; each entry is `[re, im]`.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitsSpec>,
    #[serde(flatten)]
    pub payload: Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitsSpec {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub k_boltzmann: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Ergotropy(ErgotropySpec),
    Passivity(PassivitySpec),
    Thermalize(ThermalizeSpec),
    Isothermal(IsothermalSpec),
    EntropyProtocol(EntropyProtocolSpec),
    Cycle(CycleSpec),
    Verify(VerifySpec),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Ergotropy(_) => "ergotropy",
            Payload::Passivity(_) => "passivity",
            Payload::Thermalize(_) => "thermalize",
            Payload::Isothermal(_) => "isothermal",
            Payload::EntropyProtocol(_) => "entropy_protocol",
            Payload::Cycle(_) => "cycle",
            Payload::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Matrix {
        matrix: MatrixSpec,
    },
    Probabilities {
        probabilities: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<MatrixSpec>,
    },
    Thermal {
        thermal: ThermalSpec,
    },
}

/// Canonical state of `hamiltonian` (default: the enclosing one) at `beta`
/// or at the temperature giving `mean_energy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgotropySpec {
    pub hamiltonian: MatrixSpec,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSpec {
    pub mode: ExtractionMode,
    pub period: f64,
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassivitySpec {
    pub energies: Vec<f64>,
    pub probabilities: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_cp_tolerance")]
    pub tolerance: f64,
}

fn default_n_max() -> usize {
    6
}

fn default_cp_tolerance() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    /// `g · SWAP`; needs the ancilla to have the system's dimension.
    Swap {
        swap: f64,
    },
    Matrix {
        matrix: MatrixSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub beta: f64,
    /// Defaults to the system Hamiltonian at the time of contact.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla_hamiltonian: Option<MatrixSpec>,
    pub coupling: CouplingSpec,
    pub contact_time: f64,
    #[serde(default)]
    pub reuse_probability: f64,
    #[serde(default)]
    pub mixing_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalizeSpec {
    pub hamiltonian: MatrixSpec,
    pub state: StateSpec,
    pub bath: BathSpec,
    pub collisions: usize,
    #[serde(default = "default_one_step")]
    pub steps_per_collision: usize,
}

fn default_one_step() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsothermalSpec {
    pub from: MatrixSpec,
    pub to: MatrixSpec,
    pub beta: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub hamiltonian: MatrixSpec,
    pub state: StateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProtocolSpec {
    pub initial: EndpointSpec,
    pub target: EndpointSpec,
    pub temperature: f64,
    pub steps: usize,
    #[serde(default)]
    pub stages: StageMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStepSpec {
    /// Straight-line drive from the current Hamiltonian to `to`.
    Drive {
        to: MatrixSpec,
        duration: f64,
        steps: usize,
    },
    Contact {
        bath: BathSpec,
        collisions: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    /// Draw a random closed cycle from the seed instead of `system`/`plan`.
    #[serde(default)]
    pub random: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<EndpointSpec>,
    #[serde(default)]
    pub plan: Vec<CycleStepSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySpec {
    pub trials: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default)]
    pub tolerances: VerifyTolerances,
}

fn default_max_dim() -> usize {
    4
}

/// Schema violation at `path`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

fn err<T>(path: &str, message: impl std::fmt::Display) -> Result<T, SchemaError> {
    Err(SchemaError {
        path: path.to_string(),
        message: message.to_string(),
    })
}

/// Applies `key=value` overrides to a scenario document. Keys are dotted
/// paths (numeric segments index arrays); values are parsed as JSON and
/// fall back to plain strings.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), SchemaError> {
    for item in overrides {
        let Some((key, raw)) = item.split_once('=') else {
            return err("--set", format!("expected key=value, got `{item}`"));
        };
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            node = match node {
                Value::Array(items) => {
                    let Some(slot) = part.parse::<usize>().ok().and_then(|k| items.get_mut(k))
                    else {
                        return err(key, format!("no array element `{part}`"));
                    };
                    slot
                }
                Value::Object(map) => map.entry(part.to_string()).or_insert(if last {
                    Value::Null
                } else {
                    Value::Object(Default::default())
                }),
                _ => return err(key, format!("cannot descend into `{part}`")),
            };
        }
        *node = value;
    }
    Ok(())
}

pub fn parse(doc: Value) -> Result<Scenario, SchemaError> {
    serde_json::from_value(doc).map_err(|e| SchemaError {
        path: String::new(),
        message: format!("invalid scenario: {e}"),
    })
}

pub fn matrix(spec: &MatrixSpec, path: &str) -> Result<CMatrix, SchemaError> {
    let d = spec.len();
    if d == 0 {
        return err(path, "matrix is empty");
    }
    for (r, row) in spec.iter().enumerate() {
        if row.len() != d {
            return err(
                &format!("{path}[{r}]"),
                format!(
                    "row has {} entries, expected {d} (matrix must be square)",
                    row.len()
                ),
            );
        }
        if row.iter().flatten().any(|x| !x.is_finite()) {
            return err(&format!("{path}[{r}]"), "non-finite entry");
        }
    }
    Ok(CMatrix::from_fn(d, d, |r, c| {
        Complex64::new(spec[r][c][0], spec[r][c][1])
    }))
}

pub fn hermitian(spec: &MatrixSpec, path: &str) -> Result<HermitianOperator, SchemaError> {
    HermitianOperator::new(matrix(spec, path)?).or_else(|e| err(path, e))
}

fn positive(x: f64, path: &str) -> Result<f64, SchemaError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        err(path, format!("must be positive, got {x}"))
    }
}

fn at_least_one(n: usize, path: &str) -> Result<usize, SchemaError> {
    if n >= 1 {
        Ok(n)
    } else {
        err(path, "must be at least 1")
    }
}

pub fn state(
    spec: &StateSpec,
    h: &HermitianOperator,
    path: &str,
) -> Result<Distribution, SchemaError> {
    let rho = match spec {
        StateSpec::Matrix { matrix: m } => {
            Distribution::new(matrix(m, &format!("{path}.matrix"))?).or_else(|e| err(path, e))?
        }
        StateSpec::Probabilities {
            probabilities,
            basis,
        } => match basis {
            Some(b) => {
                let b = matrix(b, &format!("{path}.basis"))?;
                Distribution::from_probabilities(probabilities, &b).or_else(|e| err(path, e))?
            }
            None => Distribution::diagonal(probabilities)
                .or_else(|e| err(&format!("{path}.probabilities"), e))?,
        },
        StateSpec::Thermal { thermal } => {
            let tp = format!("{path}.thermal");
            let h = match &thermal.hamiltonian {
                Some(m) => hermitian(m, &format!("{tp}.hamiltonian"))?,
                None => h.clone(),
            };
            let beta = match (thermal.beta, thermal.mean_energy) {
                (Some(b), None) => positive(b, &format!("{tp}.beta"))?,
                (None, Some(e)) => {
                    beta_for_energy(&h, e).or_else(|er| err(&format!("{tp}.mean_energy"), er))?
                }
                _ => return err(&tp, "give exactly one of `beta` and `mean_energy`"),
            };
            canonical_state(&h, beta).or_else(|e| err(&tp, e))?
        }
    };
    if rho.dim() != h.dim() {
        return err(
            path,
            format!(
                "state dimension {} differs from Hamiltonian dimension {}",
                rho.dim(),
                h.dim()
            ),
        );
    }
    Ok(rho)
}

fn endpoint(
    spec: &EndpointSpec,
    path: &str,
) -> Result<(Distribution, HermitianOperator), SchemaError> {
    let h = hermitian(&spec.hamiltonian, &format!("{path}.hamiltonian"))?;
    Ok((state(&spec.state, &h, &format!("{path}.state"))?, h))
}

pub fn bath(
    spec: &BathSpec,
    h_sys: &HermitianOperator,
    seed: u64,
    path: &str,
) -> Result<IdealBath, SchemaError> {
    let beta = positive(spec.beta, &format!("{path}.beta"))?;
    let contact_time = positive(spec.contact_time, &format!("{path}.contact_time"))?;
    let ancilla = match &spec.ancilla_hamiltonian {
        Some(m) => hermitian(m, &format!("{path}.ancilla_hamiltonian"))?,
        None => h_sys.clone(),
    };
    let coupling = match &spec.coupling {
        CouplingSpec::Swap { swap } => {
            if ancilla.dim() != h_sys.dim() {
                return err(
                    &format!("{path}.coupling"),
                    "swap coupling needs equal system and ancilla dimensions",
                );
            }
            swap_coupling(ancilla.dim(), *swap)
        }
        CouplingSpec::Matrix { matrix: m } => hermitian(m, &format!("{path}.coupling.matrix"))?,
    };
    if coupling.dim() != h_sys.dim() * ancilla.dim() {
        return err(
            &format!("{path}.coupling"),
            format!(
                "dimension {} differs from system x ancilla = {}",
                coupling.dim(),
                h_sys.dim() * ancilla.dim()
            ),
        );
    }
    IdealBath::new(beta, ancilla, coupling, contact_time)
        .and_then(|b| b.with_nonideal(spec.reuse_probability, spec.mixing_strength, seed))
        .or_else(|e| err(path, e))
}

/// A scenario turned into library inputs, ready to run.
#[derive(Debug, Clone)]
pub enum Job {
    Ergotropy {
        hamiltonian: HermitianOperator,
        state: Distribution,
        extraction: Option<ExtractionSpec>,
    },
    Passivity {
        system: LevelSystem,
        n_max: usize,
        tolerance: f64,
    },
    Thermalize {
        hamiltonian: HermitianOperator,
        state: Distribution,
        bath: IdealBath,
        collisions: usize,
        steps_per_collision: usize,
    },
    Isothermal {
        path: Schedule,
        beta: f64,
        steps: usize,
    },
    EntropyProtocol {
        initial: (Distribution, HermitianOperator),
        target: (Distribution, HermitianOperator),
        temperature: f64,
        steps: usize,
        stages: StageMode,
    },
    Cycle {
        system: SystemSpec,
        plan: Vec<CycleStep>,
    },
    RandomCycle,
    Verify(VerifySettings),
}

pub fn validate(s: &Scenario) -> Result<(Job, Units), SchemaError> {
    let units = match s.units {
        Some(u) => Units {
            hbar: positive(u.hbar, "units.hbar")?,
            k_boltzmann: positive(u.k_boltzmann, "units.k_boltzmann")?,
        },
        None => Units::natural(),
    };
    let job = match &s.payload {
        Payload::Ergotropy(p) => {
            let h = hermitian(&p.hamiltonian, "hamiltonian")?;
            if let Some(x) = &p.extraction {
                positive(x.period, "extraction.period")?;
                for (i, &n) in x.steps.iter().enumerate() {
                    at_least_one(n, &format!("extraction.steps[{i}]"))?;
                }
            }
            Job::Ergotropy {
                state: state(&p.state, &h, "state")?,
                hamiltonian: h,
                extraction: p.extraction.clone(),
            }
        }
        Payload::Passivity(p) => Job::Passivity {
            system: LevelSystem::new(p.energies.clone(), p.probabilities.clone())
                .or_else(|e| err("probabilities", e))?,
            n_max: at_least_one(p.n_max, "n_max")?,
            tolerance: positive(p.tolerance, "tolerance")?,
        },
        Payload::Thermalize(p) => {
            let h = hermitian(&p.hamiltonian, "hamiltonian")?;
            Job::Thermalize {
                state: state(&p.state, &h, "state")?,
                bath: bath(&p.bath, &h, s.seed, "bath")?,
                hamiltonian: h,
                collisions: p.collisions,
                steps_per_collision: at_least_one(p.steps_per_collision, "steps_per_collision")?,
            }
        }
        Payload::Isothermal(p) => {
            let from = hermitian(&p.from, "from")?;
            let to = hermitian(&p.to, "to")?;
            if from.dim() != to.dim() {
                return err("to", "dimension differs from `from`");
            }
            Job::Isothermal {
                path: Schedule::linear(from, to, 1.0).or_else(|e| err("to", e))?,
                beta: positive(p.beta, "beta")?,
                steps: at_least_one(p.steps, "steps")?,
            }
        }
        Payload::EntropyProtocol(p) => {
            if let StageMode::Schedule { duration, steps } = p.stages {
                positive(duration, "stages.duration")?;
                at_least_one(steps, "stages.steps")?;
            }
            let initial = endpoint(&p.initial, "initial")?;
            let target = endpoint(&p.target, "target")?;
            if initial.0.dim() != target.0.dim() {
                return err("target", "dimension differs from `initial`");
            }
            Job::EntropyProtocol {
                initial,
                target,
                temperature: positive(p.temperature, "temperature")?,
                steps: at_least_one(p.steps, "steps")?,
                stages: p.stages,
            }
        }
        Payload::Cycle(p) if p.random => Job::RandomCycle,
        Payload::Cycle(p) => {
            let Some(sys) = &p.system else {
                return err("system", "required unless `random` is true");
            };
            if p.plan.is_empty() {
                return err("plan", "required unless `random` is true");
            }
            let (rho, h0) = endpoint(sys, "system")?;
            let mut h = h0.clone();
            let mut plan = Vec::with_capacity(p.plan.len());
            for (i, step) in p.plan.iter().enumerate() {
                let path = format!("plan[{i}]");
                plan.push(match step {
                    CycleStepSpec::Drive {
                        to,
                        duration,
                        steps,
                    } => {
                        let next = hermitian(to, &format!("{path}.drive.to"))?;
                        if next.dim() != h.dim() {
                            return err(
                                &format!("{path}.drive.to"),
                                "dimension differs from the system",
                            );
                        }
                        let schedule = Schedule::linear(
                            h.clone(),
                            next.clone(),
                            positive(*duration, &format!("{path}.drive.duration"))?,
                        )
                        .or_else(|e| err(&path, e))?;
                        h = next;
                        CycleStep::Drive {
                            schedule,
                            steps: at_least_one(*steps, &format!("{path}.drive.steps"))?,
                        }
                    }
                    CycleStepSpec::Contact {
                        bath: b,
                        collisions,
                    } => CycleStep::Contact {
                        bath: bath(b, &h, s.seed, &format!("{path}.contact.bath"))?,
                        collisions: *collisions,
                    },
                });
            }
            Job::Cycle {
                system: SystemSpec {
                    initial_state: rho,
                    hamiltonian: h0,
                },
                plan,
            }
        }
        Payload::Verify(p) => {
            let settings = VerifySettings {
                seed: s.seed,
                trials: p.trials,
                max_dim: p.max_dim,
                tolerances: p.tolerances,
            };
            settings.validate().or_else(|e| err("", e))?;
            Job::Verify(settings)
        }
    };
    Ok((job, units))
}
