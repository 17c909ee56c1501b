//! Acceptance suite: every release criterion in one sequential run, one
//! pass/fail line per criterion (visible with `--nocapture`).
//!
//! Criteria are executed in order with their own wall-clock budgets where
//! stated; a failing criterion is reported and the suite fails at the end,
//! after every criterion has had its say.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use jmlab::gallery;
use jmlab::metrics;
use jmlab::operators::fixtures::{sigma_x, sigma_y, sigma_z};
use jmlab::operators::{Operator, StateVector};
use jmlab::povm::{Axis, JointPovm, OutcomeGrid};
use jmlab::process::{ancilla_from_process, naimark_dilate, povm_from_ancilla, povm_from_process};
use jmlab::relations;
use jmlab::sample;
use jmlab::search::{
    minimize, run_sweep, Objective, OptimizerKind, ScenarioFamily, SearchConfig, SweepConfig,
    SweepMode,
};
use jmlab::Tolerances;

const SLACK: f64 = 1e-9;
const ANCHOR: f64 = 1e-12;

fn tol() -> Tolerances {
    Tolerances::default()
}

/// 1. Robertson bound over 1000 random observable pairs and states.
fn criterion_1_robertson_sweep() -> Duration {
    let t = tol();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    for i in 0..1000 {
        let dim = rng.random_range(2..=8);
        let a = sample::random_hermitian(dim, &mut rng);
        let b = sample::random_hermitian(dim, &mut rng);
        let psi = sample::random_state(dim, &mut rng);
        let r = relations::eval_robertson(&a, &b, &psi, &t).unwrap();
        assert!(r.slack >= -SLACK, "instance {i}: slack {}", r.slack);
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    elapsed
}

/// 2. Universal relations with chain ordering over 500 random dilated POVMs.
fn criterion_2_universal_sweep() -> Duration {
    let t = tol();
    let started = Instant::now();
    let cfg = SweepConfig {
        family: ScenarioFamily::RandomDilated {
            dim_min: 2,
            dim_max: 5,
            nx: 3,
            ny: 3,
        },
        instances: 500,
        seed: 202,
        mode: SweepMode::Relations,
        search: None,
    };
    let out = run_sweep(&cfg, &t).unwrap();
    assert_eq!(out.violations, 0, "worst slack {}", out.worst_slack);
    assert!(out.worst_slack >= -SLACK);
    // the generalized record's `holds` already folds in the chain ordering
    // lhs(generalized) >= lhs(universal) >= rhs; spot-check rows exist
    assert_eq!(
        out.csv_rows
            .iter()
            .filter(|r| r.contains(",universal_valid,"))
            .count(),
        500
    );
    assert_eq!(
        out.csv_rows
            .iter()
            .filter(|r| r.contains(",generalized_joint,"))
            .count(),
        500
    );
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    elapsed
}

/// 3. The qubit anchor: exact saturation values of the guess model.
fn criterion_3_qubit_anchor() -> Duration {
    let t = tol();
    let started = Instant::now();
    let povm = gallery::guess_model(&sigma_x(), 0.0, &t).unwrap();
    let psi = StateVector::basis_state(2, 0);

    let eps_a = metrics::rms_noise(&povm, &sigma_x(), &psi, Axis::A, &t, None).unwrap();
    let eps_b = metrics::rms_noise(&povm, &sigma_y(), &psi, Axis::B, &t, None).unwrap();
    assert!(eps_a.abs() <= ANCHOR, "eps_a = {eps_a}");
    assert!((eps_b - 1.0).abs() <= ANCHOR, "eps_b = {eps_b}");

    let delta_a = sigma_x().std_dev(&psi, &t).unwrap();
    let rhs = 0.5
        * sigma_x()
            .commutator(&sigma_y())
            .unwrap()
            .expectation(&psi)
            .unwrap()
            .norm();
    assert!((delta_a * eps_b - 1.0).abs() <= ANCHOR);
    assert!((rhs - 1.0).abs() <= ANCHOR);

    let precise =
        relations::eval_precise_bound(&povm, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
    let precise = precise.record().expect("precise A marginal");
    assert!((precise.lhs - 1.0).abs() <= ANCHOR);
    assert!((precise.rhs - 1.0).abs() <= ANCHOR);

    let (universal, _) =
        relations::eval_universal(&povm, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
    assert!(
        (universal.lhs - 1.0).abs() <= ANCHOR,
        "lhs {}",
        universal.lhs
    );
    assert!((universal.rhs - 1.0).abs() <= ANCHOR);

    // the naive product bound is violated by a full unit
    assert!(eps_a * eps_b <= ANCHOR);
    assert!(eps_a * eps_b < rhs - 0.5);
    started.elapsed()
}

/// 4. Dilation round trip and route equivalence over 50 random POVMs.
fn criterion_4_dilation_round_trip() -> Duration {
    let t = tol();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(404);
    for i in 0..50 {
        let dim = rng.random_range(2..=5);
        let nx = rng.random_range(1..=3);
        let ny = rng.random_range(1..=3);
        let povm = sample::random_joint_povm(dim, nx, ny, &mut rng, &t).unwrap();
        let process = naimark_dilate(&povm, &t, &mut rng).unwrap();
        let via_process = povm_from_process(&process, &t).unwrap();
        let defect = povm.max_element_distance(&via_process, 1e-8).unwrap();
        assert!(defect <= 1e-8, "instance {i}: round trip defect {defect}");

        let ancilla = ancilla_from_process(&process, &t).unwrap();
        let via_ancilla = povm_from_ancilla(&ancilla, &t).unwrap();
        let route_gap = via_process
            .max_element_distance(&via_ancilla, SLACK)
            .unwrap();
        assert!(route_gap <= SLACK, "instance {i}: route gap {route_gap}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    elapsed
}

/// 5. Precision ⇔ vanishing rms noise, on projective and smeared POVMs.
fn criterion_5_precision_equivalence() -> Duration {
    let t = tol();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(505);
    let obs = sigma_z();
    let dec = obs.spectral_auto(&t).unwrap();

    for eta in [0.0, 0.05, 0.2] {
        let elements: Vec<Operator> = dec
            .projectors()
            .iter()
            .map(|e| &e.scale(1.0 - eta) + &Operator::identity(2).scale(eta / 2.0))
            .collect();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![0.0]).unwrap();
        let povm = JointPovm::new(2, grid, elements, &t).unwrap();

        let precise = povm.marginal(Axis::A).is_precise_for(&obs, &t).unwrap();
        let mut max_eps = 0.0_f64;
        for k in 0..2 {
            let psi = StateVector::basis_state(2, k);
            max_eps =
                max_eps.max(metrics::rms_noise(&povm, &obs, &psi, Axis::A, &t, None).unwrap());
        }
        for _ in 0..100 {
            let psi = sample::random_state(2, &mut rng);
            max_eps =
                max_eps.max(metrics::rms_noise(&povm, &obs, &psi, Axis::A, &t, None).unwrap());
        }

        if eta == 0.0 {
            assert!(precise.precise, "projective marginal must be precise");
            assert!(max_eps <= SLACK, "eta 0: max eps {max_eps}");
        } else {
            assert!(!precise.precise, "eta {eta}: smeared marginal not precise");
            assert!(max_eps > SLACK, "eta {eta}: noise must be visible");
        }
    }
    started.elapsed()
}

/// 6. Independent-noise suite: moment identity, variance additivity,
///    the Heisenberg-form relations, and the factorization property.
fn criterion_6_independent_noise() -> Duration {
    let t = tol();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(606);

    // model (a): disjoint probe factors, commuting observables, biased noise
    let a_obs = Operator::diagonal(&[0.0, 1.0]);
    let b_obs = Operator::diagonal(&[3.0, 5.0]);
    let g1 = sample::random_hermitian(2, &mut rng);
    let g2 = sample::random_hermitian(2, &mut rng);
    let xi = sample::random_state(4, &mut rng);
    let anc_a = gallery::independent_noise_model(&a_obs, &b_obs, &g1, &g2, &xi, &t).unwrap();
    let povm_a = povm_from_ancilla(&anc_a, &t).unwrap();

    // model (b): the smeared Pauli pair through its dilation (noncommuting
    // observables, zero-mean independent noise, nonzero bound)
    let (povm_b, sx, sy) = gallery::unbiased_pauli_pair_model(&t).unwrap();
    let process_b = naimark_dilate(&povm_b, &t, &mut rng).unwrap();
    let anc_b = ancilla_from_process(&process_b, &t).unwrap();
    let povm_b = povm_from_process(&process_b, &t).unwrap();

    let models: [(&JointPovm, &Operator, &Operator, &jmlab::Ancilla); 2] = [
        (&povm_a, &a_obs, &b_obs, &anc_a),
        (&povm_b, &sx, &sy, &anc_b),
    ];

    for (k, (povm, a, b, ancilla)) in models.iter().enumerate() {
        let psi = if k == 0 {
            sample::random_state(2, &mut rng)
        } else {
            StateVector::basis_state(2, 0)
        };

        for (axis, obs) in [(Axis::A, *a), (Axis::B, *b)] {
            let report = metrics::noise_report(povm, obs, &psi, axis, &t, Some(*ancilla)).unwrap();
            assert!(report.stat_independent, "model {k} axis {axis:?}");
            // moment identity
            let identity_gap = (report.noise_std * report.noise_std
                - (report.rms_noise * report.rms_noise
                    - report.mean_noise_value * report.mean_noise_value))
                .abs();
            assert!(
                identity_gap <= SLACK,
                "model {k}: identity gap {identity_gap}"
            );
            // variance additivity
            let delta = obs.std_dev(&psi, &t).unwrap();
            let additivity = (report.output_std * report.output_std
                - delta * delta
                - report.noise_std * report.noise_std)
                .abs();
            assert!(
                additivity <= SLACK,
                "model {k}: additivity gap {additivity}"
            );
        }

        let heisenberg =
            relations::eval_independent_heisenberg(povm, a, b, &psi, &t, Some(*ancilla)).unwrap();
        let heisenberg = heisenberg.record().expect("independent on both axes");
        assert!(heisenberg.holds, "model {k}: {heisenberg:?}");
        assert!(heisenberg.terms["upper_link_slack"] >= -SLACK);
        assert!(heisenberg.terms["lower_link_slack"] >= -SLACK);

        let spread = relations::eval_output_spread(povm, a, b, &psi, &t).unwrap();
        let spread = spread.record().expect("independent on both axes");
        assert!(
            spread.slack >= -SLACK,
            "model {k}: spread slack {}",
            spread.slack
        );

        // factorization over 100 random object observables
        for axis_obs in [(*a, Axis::A), (*b, Axis::B)] {
            for _ in 0..50 {
                let x = sample::random_hermitian(2, &mut rng);
                let defect = metrics::verify_independence_factorization(
                    ancilla, axis_obs.0, axis_obs.1, &x, &psi,
                )
                .unwrap();
                assert!(defect <= SLACK, "model {k}: factorization defect {defect}");
            }
        }
    }
    started.elapsed()
}

/// 7. Noise metrics are ancilla-invariant across distinct dilations.
fn criterion_7_ancilla_invariance() -> Duration {
    let t = tol();
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(707);
    for i in 0..5 {
        let dim = rng.random_range(2..=4);
        let povm = sample::random_joint_povm(dim, 2, 2, &mut rng, &t).unwrap();
        let obs_a = sample::random_hermitian(dim, &mut rng);
        let obs_b = sample::random_hermitian(dim, &mut rng);
        let psi = sample::random_state(dim, &mut rng);

        let mut rng1 = StdRng::seed_from_u64(1000 + i);
        let mut rng2 = StdRng::seed_from_u64(2000 + i);
        let d1 = naimark_dilate(&povm, &t, &mut rng1).unwrap();
        let d2 = naimark_dilate(&povm, &t, &mut rng2).unwrap();
        // distinct completions, same physics
        assert!(d1.unitary().max_distance(d2.unitary()).unwrap() > 1e-3);

        for (axis, obs) in [(Axis::A, &obs_a), (Axis::B, &obs_b)] {
            let r1 = metrics::noise_report(
                &povm_from_process(&d1, &t).unwrap(),
                obs,
                &psi,
                axis,
                &t,
                Some(&ancilla_from_process(&d1, &t).unwrap()),
            )
            .unwrap();
            let r2 = metrics::noise_report(
                &povm_from_process(&d2, &t).unwrap(),
                obs,
                &psi,
                axis,
                &t,
                Some(&ancilla_from_process(&d2, &t).unwrap()),
            )
            .unwrap();
            assert!((r1.rms_noise - r2.rms_noise).abs() <= SLACK);
            assert!((r1.noise_std - r2.noise_std).abs() <= SLACK);
            assert!((r1.output_std - r2.output_std).abs() <= SLACK);
            assert!((r1.mean_noise_value - r2.mean_noise_value).abs() <= SLACK);
            assert_eq!(r1.unbiased, r2.unbiased);
            assert_eq!(r1.stat_independent, r2.stat_independent);
            assert!(r1.mean_noise_op.max_distance(&r2.mean_noise_op).unwrap() <= SLACK);
        }
    }
    started.elapsed()
}

/// 8. Search attainability on the qubit anchor, deterministic and safe.
fn criterion_8_search_attainability() -> Duration {
    let t = tol();
    let started = Instant::now();
    let psi = StateVector::basis_state(2, 0);
    let cfg = SearchConfig {
        objective: Objective::EpsBGivenPreciseA,
        optimizer: OptimizerKind::NelderMead,
        max_evals: 5000,
        seed: 808,
        restarts: 4,
        tolerances: Tolerances::default(),
    };
    let first = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
    assert!(first.evals <= 5000, "used {} evaluations", first.evals);
    assert!(
        first.best_objective <= 1.05,
        "best {} not within 5% of 1.0",
        first.best_objective
    );
    assert!(first.best_objective >= 1.0 - SLACK);
    for row in &first.trace {
        assert!(
            row.universal_slack >= -SLACK,
            "candidate violates the bound"
        );
        assert!(row.generalized_slack >= -SLACK);
    }
    let second = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
    assert_eq!(
        first.best_objective.to_bits(),
        second.best_objective.to_bits()
    );
    assert_eq!(first.evals, second.evals);
    started.elapsed()
}

/// 9. Truncated oscillator demo: bounds hold within the truncation
///    estimate, and the estimate shrinks monotonically with the cutoff.
fn criterion_9_truncated_ccr() -> Duration {
    let t = tol();
    let started = Instant::now();

    // the bound demo at N = 16 over low-lying states
    let n = 16;
    let osc = gallery::TruncatedOscillator::new(n, 1.0).unwrap();
    let ground = StateVector::basis_state(n, 0);
    let one = StateVector::basis_state(n, 1);
    let states = vec![
        (ground.clone(), ground.clone()),
        (one.clone(), ground.clone()),
        (osc.coherent_like(1.0), ground.clone()),
        (osc.squeezed_like(0.8), osc.coherent_like(0.5)),
    ];
    let report = gallery::truncated_ccr_demo(n, &states, 1.0, &t).unwrap();
    for (i, rec) in report.records.iter().enumerate() {
        assert!(
            rec.generalized_slack >= -(rec.truncation_estimate + SLACK),
            "state {i}: slack {} vs estimate {}",
            rec.generalized_slack,
            rec.truncation_estimate
        );
        assert!(
            rec.closing_slack >= -(rec.truncation_estimate + SLACK),
            "state {i}: closing slack {} vs estimate {}",
            rec.closing_slack,
            rec.truncation_estimate
        );
        assert!(rec.holds_within_estimate);
    }

    // the estimate shrinks strictly with the cutoff for a fixed family
    let mut last = f64::INFINITY;
    for n in [8usize, 12, 16, 24] {
        let osc = gallery::TruncatedOscillator::new(n, 1.0).unwrap();
        let ground = StateVector::basis_state(n, 0);
        let report =
            gallery::truncated_ccr_demo(n, &[(osc.coherent_like(1.0), ground)], 1.0, &t).unwrap();
        let est = report.records[0].truncation_estimate;
        assert!(est < last, "estimate {est} did not shrink at N = {n}");
        assert!(report.records[0].holds_within_estimate);
        last = est;
    }
    started.elapsed()
}

#[test]
fn acceptance_criteria() {
    let suite_started = Instant::now();
    type Criterion = (&'static str, fn() -> Duration);
    let criteria: Vec<Criterion> = vec![
        (
            "criterion 1 (Robertson sweep, 1000 instances, < 10 s)",
            criterion_1_robertson_sweep,
        ),
        (
            "criterion 2 (universal relations + chain, 500 dilated POVMs, < 60 s)",
            criterion_2_universal_sweep,
        ),
        (
            "criterion 3 (qubit anchor saturation, ±1e-12)",
            criterion_3_qubit_anchor,
        ),
        (
            "criterion 4 (dilation round trip + route equivalence, 50 POVMs, < 30 s)",
            criterion_4_dilation_round_trip,
        ),
        (
            "criterion 5 (precision ⇔ zero rms noise, η ∈ {0, 0.05, 0.2})",
            criterion_5_precision_equivalence,
        ),
        (
            "criterion 6 (independent noise: identity, additivity, bounds, factorization)",
            criterion_6_independent_noise,
        ),
        (
            "criterion 7 (noise metrics invariant across dilations)",
            criterion_7_ancilla_invariance,
        ),
        (
            "criterion 8 (search reaches the bound within 5%, ≤ 5000 evals, deterministic)",
            criterion_8_search_attainability,
        ),
        (
            "criterion 9 (truncated oscillators: bounds within shrinking estimate)",
            criterion_9_truncated_ccr,
        ),
    ];

    let mut failures = Vec::new();
    for (name, run) in criteria {
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(elapsed) => println!("{name}: PASS ({:.2}s)", elapsed.as_secs_f64()),
            Err(cause) => {
                let msg = cause
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| cause.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                println!("{name}: FAIL ({msg})");
                failures.push(name);
            }
        }
    }

    // criterion 10: the whole acceptance run stays inside the suite budget
    let total = suite_started.elapsed();
    if total < Duration::from_secs(120) {
        println!(
            "criterion 10 (acceptance wall clock < 2 min): PASS ({:.2}s)",
            total.as_secs_f64()
        );
    } else {
        println!(
            "criterion 10 (acceptance wall clock < 2 min): FAIL ({:.2}s)",
            total.as_secs_f64()
        );
        failures.push("criterion 10 (acceptance wall clock < 2 min)");
    }

    assert!(failures.is_empty(), "failed: {failures:?}");
}
