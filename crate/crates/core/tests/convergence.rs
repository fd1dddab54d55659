use qthermo::operator::{max_abs, HermitianOperator};
use qthermo::passivity::{extraction_schedule, run_extraction, ExtractionMode};
use qthermo::protocols::isothermal_drive;
use qthermo::random::{random_density, random_hermitian, rng_from_seed};
use qthermo::schedule::{propagate, Schedule};
use qthermo::Units;

#[test]
fn midpoint_propagator_is_second_order() {
    let mut rng = rng_from_seed(11);
    let (a, b) = (
        random_hermitian(&mut rng, 3, 1.0),
        random_hermitian(&mut rng, 3, 1.0),
    );
    let s = Schedule::linear(a, b, 2.0).unwrap();
    let reference = propagate(&s, 20_000, 1.0).unwrap();
    let err = |n| max_abs(&(propagate(&s, n, 1.0).unwrap().matrix() - reference.matrix()));
    let ratio = err(50) / err(100);
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn piecewise_extraction_is_exact_at_any_resolution() {
    let units = Units::natural();
    let mut rng = rng_from_seed(3);
    let h = random_hermitian(&mut rng, 4, 1.0);
    let rho = random_density(&mut rng, 4);
    let plan = extraction_schedule(&rho, &h, 2.0, ExtractionMode::Piecewise, &units).unwrap();
    for steps in [3, 30, 300] {
        let run = run_extraction(&rho, &h, &plan, steps, &units).unwrap();
        assert!((run.work_extracted - run.ergotropy).abs() < 1e-9);
        assert!((run.fidelity - 1.0).abs() < 1e-9);
    }
}

#[test]
fn literal_extraction_schedule_converges_in_steps() {
    let units = Units::natural();
    let mut rng = rng_from_seed(4);
    let h = random_hermitian(&mut rng, 2, 1.0);
    let rho = random_density(&mut rng, 2);
    let plan = extraction_schedule(&rho, &h, 1.0, ExtractionMode::Smooth, &units).unwrap();
    let runs: Vec<_> = [100, 1000, 10_000]
        .iter()
        .map(|&n| run_extraction(&rho, &h, &plan, n, &units).unwrap())
        .collect();
    let d1 = (runs[0].work_extracted - runs[2].work_extracted).abs();
    let d2 = (runs[1].work_extracted - runs[2].work_extracted).abs();
    assert!(d2 <= d1 + 1e-12);
    assert!(runs.iter().all(|r| r.unitarity_drift < 1e-10));
}

#[test]
fn isothermal_error_is_first_order() {
    let gap = |w: f64| HermitianOperator::from_real_diagonal(&[0.0, w, 2.5 * w]);
    let path = Schedule::linear(gap(0.5), gap(1.5), 1.0).unwrap();
    let e1 = isothermal_drive(&path, 0.8, 400)
        .unwrap()
        .discretization_error;
    let e2 = isothermal_drive(&path, 0.8, 800)
        .unwrap()
        .discretization_error;
    assert!(e1 > 0.0 && e2 > 0.0);
    assert!((e1 / e2 - 2.0).abs() < 0.2);
}
