//! Property tests over randomized instances: structural invariants that
//! must hold for every generated model, not just the hand-picked fixtures.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use jmlab::metrics;
use jmlab::operators::Operator;
use jmlab::povm::{Axis, JointPovm, OutcomeGrid};
use jmlab::sample;
use jmlab::search::{
    default_grid, run_sweep, Objective, OptimizerKind, PovmParametrization, ScenarioFamily,
    SearchConfig, SweepConfig, SweepMode,
};
use jmlab::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Born-rule sanity on every valid joint POVM: probabilities are
    /// nonnegative and sum to one, and both marginals are valid POVMs.
    #[test]
    fn probabilities_form_a_distribution(
        seed in any::<u64>(),
        dim in 2usize..=8,
        nx in 1usize..=2,
        ny in 1usize..=3,
    ) {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(seed);
        let povm = sample::random_joint_povm(dim, nx, ny, &mut rng, &t).unwrap();
        let psi = sample::random_state(dim, &mut rng);
        let dist = povm.distribution(&psi, &t).unwrap();
        prop_assert!(dist.iter().all(|&q| q >= -1e-9));
        let total: f64 = dist.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "total {total}");
        prop_assert!(povm.marginal(Axis::A).validate(&t).passes);
        prop_assert!(povm.marginal(Axis::B).validate(&t).passes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// An unbiased measurement has statistically independent noise with a
    /// vanishing constant. Instances are built by taking the first moment
    /// operator of a random marginal as the observable itself.
    #[test]
    fn unbiased_implies_statistically_independent(
        seed in any::<u64>(),
        dim in 2usize..=5,
        axis in prop_oneof![Just(Axis::A), Just(Axis::B)],
    ) {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(seed);
        let povm = sample::random_joint_povm(dim, 2, 2, &mut rng, &t).unwrap();
        let obs = povm
            .marginal(axis)
            .moment_operator(jmlab::povm::MomentOrder::First);
        let (unbiased, defect) = metrics::is_unbiased(&povm, &obs, axis, &t).unwrap();
        prop_assert!(unbiased, "defect {defect}");
        let (independent, r) = metrics::is_stat_independent(&povm, &obs, axis, &t).unwrap();
        prop_assert!(independent);
        prop_assert!(r.abs() <= 1e-9, "r = {r}");
    }

    /// Commutator antisymmetry, entrywise.
    #[test]
    fn commutator_antisymmetry(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = sample::random_hermitian(dim, &mut rng);
        let y = sample::random_hermitian(dim, &mut rng);
        let xy = x.commutator(&y).unwrap();
        let yx = y.commutator(&x).unwrap();
        prop_assert!(xy.max_distance(&(-&yx)).unwrap() < 1e-12);
    }

    /// Precise marginals are exactly the spectral families: reconstructing
    /// a POVM from the spectral projectors of a random observable always
    /// passes the precision criterion against that observable.
    #[test]
    fn spectral_families_are_precise(seed in any::<u64>(), dim in 2usize..=6) {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(seed);
        let obs = sample::random_hermitian(dim, &mut rng);
        let dec = obs.spectral_auto(&t).unwrap();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![0.0]).unwrap();
        let povm = JointPovm::new(dim, grid, dec.projectors().to_vec(), &t).unwrap();
        let check = povm.marginal(Axis::A).is_precise_for(&obs, &t).unwrap();
        prop_assert!(check.precise, "defect {}", check.defect);
    }
}

/// Search floor over random qubit states: no optimized value dips below
/// the commutator bound, however hard the optimizer pushes.
#[test]
fn qubit_state_sweep_respects_the_floor() {
    let t = tol();
    let cfg = SweepConfig {
        family: ScenarioFamily::QubitConjugatePair,
        instances: 20,
        seed: 404,
        mode: SweepMode::Search,
        search: Some(SearchConfig {
            objective: Objective::EpsBGivenPreciseA,
            optimizer: OptimizerKind::NelderMead,
            max_evals: 800,
            seed: 11,
            restarts: 2,
            tolerances: Tolerances::default(),
        }),
    };
    let out = run_sweep(&cfg, &t).unwrap();
    assert_eq!(out.violations, 0, "worst gap {}", out.worst_slack);
    assert_eq!(out.csv_rows.len(), 20);
}

/// Same floor on clock/shift scenarios in dimension 3.
#[test]
fn clock_shift_sweep_respects_the_floor() {
    let t = tol();
    let cfg = SweepConfig {
        family: ScenarioFamily::ClockShift { d: 3 },
        instances: 6,
        seed: 405,
        mode: SweepMode::Search,
        search: Some(SearchConfig {
            objective: Objective::EpsBGivenPreciseA,
            optimizer: OptimizerKind::NelderMead,
            max_evals: 900,
            seed: 12,
            restarts: 2,
            tolerances: Tolerances::default(),
        }),
    };
    let out = run_sweep(&cfg, &t).unwrap();
    assert_eq!(out.violations, 0, "worst gap {}", out.worst_slack);
}

/// The precise-measurement bound holds on every model whose x marginal is
/// pinned to the spectral family of the first observable, whatever the
/// conditional distribution of the second output does.
#[test]
fn precise_bound_holds_on_constrained_models() {
    use jmlab::relations::eval_precise_bound;
    use rand::Rng;
    let t = tol();
    let mut rng = StdRng::seed_from_u64(500);
    for _ in 0..50 {
        let dim = rng.random_range(2..=4);
        let a = sample::random_hermitian(dim, &mut rng);
        let b = sample::random_hermitian(dim, &mut rng);
        let psi = sample::random_state(dim, &mut rng);
        let grid = default_grid(&a, &b, true, &t).unwrap();
        let parametrization = PovmParametrization::precise_a(&a, grid, &t).unwrap();
        let params: Vec<f64> = (0..parametrization.param_len())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let povm = parametrization.decode(&params, &t).unwrap();
        let outcome = eval_precise_bound(&povm, &a, &b, &psi, &t, None).unwrap();
        let record = outcome.record().expect("constrained marginal is precise");
        assert!(record.slack >= -1e-9, "slack {}", record.slack);
    }
}

/// A product-projective POVM for a commuting pair certifies commutation;
/// the criterion also cross-checks the observables commute.
#[test]
fn product_projective_certifies_commutation() {
    let t = tol();
    let mut rng = StdRng::seed_from_u64(77);
    for _ in 0..20 {
        let dim = 3;
        // commuting pair from a shared random eigenbasis
        let u = sample::random_unitary(dim, &mut rng);
        let a = &(&u * &Operator::diagonal(&[0.0, 1.0, 2.0])) * &u.adjoint();
        let b = &(&u * &Operator::diagonal(&[5.0, 7.0, 7.0])) * &u.adjoint();
        let dec_a = a.spectral_auto(&t).unwrap();
        let dec_b = b.spectral_auto(&t).unwrap();
        let grid =
            OutcomeGrid::new(dec_a.eigenvalues().to_vec(), dec_b.eigenvalues().to_vec()).unwrap();
        let mut elements = Vec::new();
        for (_, _, x, y) in grid.points() {
            let ea = dec_a.projector_for(x, 1e-8).unwrap();
            let eb = dec_b.projector_for(y, 1e-8).unwrap();
            elements.push(ea * eb);
        }
        let povm = JointPovm::new(dim, grid, elements, &t).unwrap();
        assert!(povm.is_product_projective(&a, &b, &t).unwrap());
        assert!(a.commutator(&b).unwrap().op_norm() < 1e-8);
    }
}
