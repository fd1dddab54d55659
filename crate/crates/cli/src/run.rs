//! Executes validated jobs and assembles the summary, result record and CSV.

use std::fmt::Write as _;

use qthermo::bath::{engine_bounds, random_closed_cycle, run_cycle, thermalize};
use qthermo::passivity::{
    extraction_schedule, is_completely_passive, is_n_passive, is_passive, min_failing_n,
    passive_form, run_extraction,
};
use qthermo::protocols::{entropy_protocol, isothermal_drive};
use qthermo::random::rng_from_seed;
use qthermo::verify::verify_suite;
use qthermo::{Error, Units};
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::Job;

pub struct Output {
    pub summary: String,
    pub result: Value,
    pub csv: Option<Vec<u8>>,
    /// Set when a verification margin breached its tolerance.
    pub breach: bool,
}

/// Fixed-precision number with trailing zeros removed.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn csv_of<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

fn sink<F: FnOnce(&mut Vec<u8>) -> qthermo::Result<()>>(f: F) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

#[derive(Serialize)]
struct PassivityRow {
    n: usize,
    passive: bool,
    witness_lower: String,
    witness_higher: String,
}

pub fn execute(job: Job, seed: u64, units: &Units) -> Result<Output, Error> {
    let mut s = String::new();
    let mut breach = false;
    let (result, csv) = match job {
        Job::Ergotropy {
            hamiltonian: h,
            state: rho,
            extraction,
        } => {
            let pf = passive_form(&rho, &h)?;
            let mean = rho.expectation(&h);
            writeln!(s, "ergotropy: {}", num(pf.ergotropy)).ok();
            writeln!(s, "mean energy: {}", num(mean)).ok();
            writeln!(s, "passive energy: {}", num(mean - pf.ergotropy)).ok();
            writeln!(s, "state already passive: {}", is_passive(&rho, &h)?).ok();
            let mut runs = Vec::new();
            if let Some(x) = extraction {
                let plan = extraction_schedule(&rho, &h, x.period, x.mode, units)?;
                for &n in &x.steps {
                    let run = run_extraction(&rho, &h, &plan, n, units)?;
                    writeln!(
                        s,
                        "extraction ({}, {n} steps): work {}, fidelity {}",
                        format!("{:?}", x.mode).to_lowercase(),
                        num(run.work_extracted),
                        num(run.fidelity)
                    )
                    .ok();
                    runs.push(run);
                }
            }
            let csv = (!runs.is_empty()).then(|| csv_of(&runs)).transpose()?;
            (
                json!({
                    "ergotropy": pf.ergotropy,
                    "mean_energy": mean,
                    "passive_energy": mean - pf.ergotropy,
                    "passive_probabilities": pf.passive_state.eigenvalues(),
                    "extraction": runs,
                }),
                csv,
            )
        }
        Job::Passivity {
            system,
            n_max,
            tolerance,
        } => {
            let mut rows = Vec::new();
            let mut records = Vec::new();
            for n in 1..=n_max {
                let r = is_n_passive(&system, n)?;
                let (lo, hi) = r
                    .witness
                    .as_ref()
                    .map(|w| (format!("{:?}", w.lower), format!("{:?}", w.higher)))
                    .unwrap_or_default();
                writeln!(
                    s,
                    "N = {n}: {}{}",
                    if r.passive { "passive" } else { "not passive" },
                    if lo.is_empty() {
                        String::new()
                    } else {
                        format!(" (witness {lo} vs {hi})")
                    }
                )
                .ok();
                rows.push(PassivityRow {
                    n,
                    passive: r.passive,
                    witness_lower: lo,
                    witness_higher: hi,
                });
                records.push(r);
            }
            let cp = is_completely_passive(&system, tolerance)?;
            writeln!(s, "completely passive: {}", cp.completely_passive).ok();
            let min_failing = if records.first().is_some_and(|r| r.passive) {
                let mf = min_failing_n(&system, n_max)?;
                writeln!(
                    s,
                    "smallest failing N (enumerated / triple criterion): {:?} / {:?}",
                    mf.enumerated,
                    mf.predicted.map(|p| p.n)
                )
                .ok();
                Some(mf)
            } else {
                None
            };
            (
                json!({"n_passivity": records, "complete_passivity": cp, "min_failing": min_failing}),
                Some(csv_of(&rows)?),
            )
        }
        Job::Thermalize {
            hamiltonian,
            state,
            bath,
            collisions,
            steps_per_collision,
        } => {
            let trace = thermalize(
                &state,
                &hamiltonian,
                &bath,
                collisions,
                steps_per_collision,
                units,
            )?;
            let last = trace.records.last().expect("initial record");
            writeln!(s, "collisions: {collisions}").ok();
            writeln!(
                s,
                "final trace distance to canonical: {}",
                num(last.trace_distance)
            )
            .ok();
            writeln!(
                s,
                "lyapunov: {} -> {}",
                num(trace.records[0].lyapunov),
                num(last.lyapunov)
            )
            .ok();
            writeln!(
                s,
                "largest lyapunov increase: {:e}",
                trace.max_lyapunov_increase()
            )
            .ok();
            writeln!(s, "heat into bath: {}", num(trace.total_heat())).ok();
            (
                json!({
                    "records": trace.records,
                    "total_heat_into_bath": trace.total_heat(),
                    "max_lyapunov_increase": trace.max_lyapunov_increase(),
                }),
                Some(sink(|w| trace.write_csv(w))?),
            )
        }
        Job::Isothermal { path, beta, steps } => {
            let r = isothermal_drive(&path, beta, steps)?;
            writeln!(s, "work: {}", num(r.work)).ok();
            writeln!(s, "quasistatic work: {}", num(r.ideal_work)).ok();
            writeln!(s, "discretization error: {:e}", r.discretization_error).ok();
            writeln!(s, "heat into bath: {}", num(r.heat)).ok();
            (value(&r), Some(sink(|w| r.write_csv(w))?))
        }
        Job::EntropyProtocol {
            initial,
            target,
            temperature,
            steps,
            stages,
        } => {
            let r = entropy_protocol(
                &initial.0,
                &initial.1,
                &target.0,
                &target.1,
                temperature,
                steps,
                stages,
                units,
            )?;
            writeln!(s, "heat into bath: {}", num(r.total_heat_q)).ok();
            writeln!(
                s,
                "entropy difference from heat: {}",
                num(r.entropy_diff_estimate)
            )
            .ok();
            writeln!(
                s,
                "entropy difference from spectra: {}",
                num(r.entropy_diff_reference)
            )
            .ok();
            writeln!(
                s,
                "stage fidelities: {} / {}",
                num(r.stage_fidelity[0]),
                num(r.stage_fidelity[1])
            )
            .ok();
            writeln!(s, "final distance to target: {:e}", r.final_distance).ok();
            (value(&r), Some(sink(|w| r.isothermal.write_csv(w))?))
        }
        Job::Cycle { system, plan } => cycle_output(&mut s, &plan, &system, units)?,
        Job::RandomCycle => {
            let (system, plan) = random_closed_cycle(&mut rng_from_seed(seed))?;
            cycle_output(&mut s, &plan, &system, units)?
        }
        Job::Verify(settings) => {
            let report = verify_suite(&settings)?;
            for c in &report.checks {
                writeln!(
                    s,
                    "{:<17} {}/{} passed, worst margin {:e} (tolerance {:e})",
                    c.name, c.passed, c.trials, c.worst_margin, c.tolerance
                )
                .ok();
            }
            writeln!(s, "all passed: {}", report.all_passed).ok();
            breach = !report.all_passed;
            (value(&report), Some(csv_of(&report.checks)?))
        }
    };
    Ok(Output {
        summary: s,
        result,
        csv,
        breach,
    })
}

fn cycle_output(
    s: &mut String,
    plan: &[qthermo::bath::CycleStep],
    system: &qthermo::bath::SystemSpec,
    units: &Units,
) -> Result<(Value, Option<Vec<u8>>), Error> {
    let ledger = run_cycle(plan, system, units)?;
    writeln!(s, "contacts: {}", ledger.contacts.len()).ok();
    writeln!(s, "net work on system: {}", num(ledger.net_work)).ok();
    writeln!(s, "closure error: {:e}", ledger.closure_error).ok();
    writeln!(s, "clausius sum: {}", num(ledger.clausius_sum)).ok();
    match ledger.clausius_holds(1e-6) {
        Some(ok) => writeln!(s, "clausius inequality holds: {ok}").ok(),
        None => writeln!(s, "cycle not closed; clausius inequality not asserted").ok(),
    };
    let engine = engine_bounds(&ledger).ok();
    if let Some(b) = &engine {
        writeln!(
            s,
            "efficiency {} vs carnot bound {}",
            num(b.efficiency),
            num(b.carnot_bound)
        )
        .ok();
    }
    let csv = sink(|w| ledger.write_csv(w))?;
    Ok((json!({"ledger": ledger, "engine": engine}), Some(csv)))
}
