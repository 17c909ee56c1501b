//! Noise statistics of a joint measurement.
//!
//! Everything here is intrinsic to the POVM: the mean noise operator, the
//! rms noise, the standard deviation of the noise, and the spread of the
//! output distribution can all be computed from the marginal elements and
//! the outcome values alone. When an ancilla realization is supplied, each
//! quantity is additionally cross-checked against the noise-operator route
//! on the composite space, and a disagreement beyond the configured
//! tolerance is a hard error: the two routes are algebraically equal, so a
//! gap means a bug, not physics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{clamped_sqrt, Operator, StateVector};
use crate::povm::{Axis, JointPovm, MomentOrder};
use crate::process::Ancilla;
use crate::tol::Tolerances;

/// All noise metrics of one output axis in one state.
#[derive(Debug, Clone, Serialize)]
pub struct NoiseReport {
    pub target: Axis,
    /// `n = O(Π) − A` on the object space.
    pub mean_noise_op: Operator,
    /// `ε = ⟨N²⟩^{1/2}`, the rms noise.
    pub rms_noise: f64,
    /// `ΔN = (ε² − ⟨n⟩²)^{1/2}`, the standard deviation of the noise.
    pub noise_std: f64,
    /// Standard deviation of the output distribution.
    pub output_std: f64,
    /// `⟨ψ|n|ψ⟩`, recorded so the identity `ΔN² = ε² − ⟨n⟩²` is auditable.
    pub mean_noise_value: f64,
    /// `O(Π) = A`, equivalently `n = 0`.
    pub unbiased: bool,
    /// `n = r·I` for some real `r`.
    pub stat_independent: bool,
}

/// Mean noise operator `n = O(Π) − A`.
///
/// Computed along two algebraically equal routes, the moment-operator form
/// and the sum form `Σ_x Π(x)(x − A)`, which must agree within the route
/// tolerance. With an ancilla supplied, the partial mean `⟨ξ|N|ξ⟩` of the
/// noise operator is verified as a third route.
pub fn mean_noise_operator(
    p: &JointPovm,
    obs: &Operator,
    axis: Axis,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<Operator> {
    if obs.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: obs.dim(),
            context: "mean noise operator",
        });
    }
    let marginal = p.marginal(axis);
    let moment_route = &marginal.moment_operator(MomentOrder::First) - obs;

    let mut sum_route = Operator::zeros(p.dim());
    for (v, e) in marginal.values().iter().zip(marginal.elements()) {
        let shifted = &Operator::identity(p.dim()).scale(*v) - obs;
        sum_route = &sum_route + &(e * &shifted);
    }
    let defect = moment_route.max_distance(&sum_route)?;
    if defect > tol.route_agreement {
        return Err(Error::RouteDisagreement {
            defect,
            context: "mean noise operator (moment vs sum form)",
        });
    }

    if let Some(a) = ancilla {
        let noise = a.noise_operator(obs, axis)?;
        let partial = noise.operator().partial_mean(a.xi())?;
        let defect = moment_route.max_distance(&partial)?;
        if defect > tol.route_agreement {
            return Err(Error::RouteDisagreement {
                defect,
                context: "mean noise operator (POVM vs ancilla route)",
            });
        }
    }
    Ok(moment_route)
}

/// rms noise `ε = ⟨N²⟩^{1/2}`, computed from the POVM sum form
/// `ε² = Σ_x ‖Π(x)^{1/2}(x − A)ψ‖² = Σ_x ⟨(x−A)ψ|Π(x)|(x−A)ψ⟩`,
/// which needs no ancilla. A supplied ancilla is used as an independent
/// verification route through `‖N(ψ⊗ξ)‖`.
pub fn rms_noise(
    p: &JointPovm,
    obs: &Operator,
    psi: &StateVector,
    axis: Axis,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<f64> {
    if obs.dim() != p.dim() || psi.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: if obs.dim() != p.dim() {
                obs.dim()
            } else {
                psi.dim()
            },
            context: "rms noise",
        });
    }
    let marginal = p.marginal(axis);
    let mut eps_sq = 0.0;
    for (v, e) in marginal.values().iter().zip(marginal.elements()) {
        let shifted = psi.vector() * num_complex::Complex64::new(*v, 0.0) - obs.apply(psi.vector());
        eps_sq += shifted.dotc(&e.apply(&shifted)).re;
    }
    let eps = clamped_sqrt(eps_sq, tol)?;

    if let Some(a) = ancilla {
        let noise = a.noise_operator(obs, axis)?;
        let composite = psi.tensor(a.xi());
        let via_sq = noise.operator().apply(composite.vector()).norm_squared();
        // gate on the squared scale: the square root amplifies pure
        // round-off without bound when the noise itself vanishes
        let scale = 1.0 + eps_sq.abs() + via_sq.abs();
        if (eps_sq - via_sq).abs() > tol.route_agreement * scale {
            return Err(Error::RouteDisagreement {
                defect: (eps_sq - via_sq).abs(),
                context: "rms noise (POVM vs ancilla route)",
            });
        }
    }
    Ok(eps)
}

/// Noise standard deviation `ΔN = (ε² − ⟨ψ|n|ψ⟩²)^{1/2}`.
pub fn noise_std(
    p: &JointPovm,
    obs: &Operator,
    psi: &StateVector,
    axis: Axis,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<f64> {
    let eps = rms_noise(p, obs, psi, axis, tol, ancilla)?;
    let n = mean_noise_operator(p, obs, axis, tol, ancilla)?;
    let mean = n.expectation_real(psi, tol)?;
    clamped_sqrt(eps * eps - mean * mean, tol)
}

/// Standard deviation of the output distribution,
/// `(⟨O²(Π)⟩ − ⟨O(Π)⟩²)^{1/2}`, verified against the standard deviation of
/// the classical outcome distribution.
pub fn output_std(p: &JointPovm, psi: &StateVector, axis: Axis, tol: &Tolerances) -> Result<f64> {
    let marginal = p.marginal(axis);
    let first = marginal
        .moment_operator(MomentOrder::First)
        .expectation_real(psi, tol)?;
    let second = marginal
        .moment_operator(MomentOrder::Second)
        .expectation_real(psi, tol)?;
    let var_op = second - first * first;

    // classical route: moments of Pr{x = x_k}
    let dist = marginal.distribution(psi, tol)?;
    let mut mean = 0.0;
    let mut sq = 0.0;
    for (v, q) in marginal.values().iter().zip(dist.iter()) {
        mean += v * q;
        sq += v * v * q;
    }
    let var_classical = sq - mean * mean;
    // compare variances, not their roots: the root amplifies round-off
    // without bound as the variance approaches zero
    let scale = 1.0 + second.abs() + sq.abs();
    if (var_op - var_classical).abs() > tol.route_agreement * scale {
        return Err(Error::RouteDisagreement {
            defect: (var_op - var_classical).abs(),
            context: "output spread (operator vs distribution route)",
        });
    }
    clamped_sqrt(var_op, tol)
}

/// Unbiasedness check: `O(Π) = A` within the identity-residual tolerance,
/// which is the same statement as a vanishing mean noise operator.
/// Returns the flag and the operator-norm defect.
pub fn is_unbiased(
    p: &JointPovm,
    obs: &Operator,
    axis: Axis,
    tol: &Tolerances,
) -> Result<(bool, f64)> {
    let n = mean_noise_operator(p, obs, axis, tol, None)?;
    let defect = n.op_norm();
    Ok((defect <= tol.identity_residual, defect))
}

/// Statistical-independence check: the mean noise operator is a constant,
/// `n = r·I` with `r = tr(n)/dim`. Returns the flag and `r`.
pub fn is_stat_independent(
    p: &JointPovm,
    obs: &Operator,
    axis: Axis,
    tol: &Tolerances,
) -> Result<(bool, f64)> {
    let n = mean_noise_operator(p, obs, axis, tol, None)?;
    let r = n.trace().re / p.dim() as f64;
    let residual = (&n - &Operator::identity(p.dim()).scale(r)).op_norm();
    Ok((residual <= tol.identity_residual, r))
}

/// Factorization defect `|⟨X̃N⟩ − ⟨ψ|X|ψ⟩⟨N⟩|` of an object observable `X`
/// against the noise of the chosen axis, with all composite expectations in
/// `ψ⊗ξ`. Vanishes whenever the noise is statistically independent.
pub fn verify_independence_factorization(
    a: &Ancilla,
    target_obs: &Operator,
    axis: Axis,
    x_obs: &Operator,
    psi: &StateVector,
) -> Result<f64> {
    if x_obs.dim() != a.dim_h() || psi.dim() != a.dim_h() {
        return Err(Error::DimensionMismatch {
            expected: a.dim_h(),
            got: if x_obs.dim() != a.dim_h() {
                x_obs.dim()
            } else {
                psi.dim()
            },
            context: "independence factorization",
        });
    }
    let noise = a.noise_operator(target_obs, axis)?;
    let composite = psi.tensor(a.xi());
    let lifted_x = x_obs.tensor(&Operator::identity(a.dim_k()));
    let joint = (&lifted_x * noise.operator()).expectation(&composite)?;
    let x_mean = x_obs.expectation(psi)?;
    let n_mean = noise.operator().expectation(&composite)?;
    Ok((joint - x_mean * n_mean).norm())
}

/// Assemble the full noise report for one axis.
pub fn noise_report(
    p: &JointPovm,
    obs: &Operator,
    psi: &StateVector,
    axis: Axis,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<NoiseReport> {
    let mean_noise_op = mean_noise_operator(p, obs, axis, tol, ancilla)?;
    let rms = rms_noise(p, obs, psi, axis, tol, ancilla)?;
    let mean_noise_value = mean_noise_op.expectation_real(psi, tol)?;
    let nstd = clamped_sqrt(rms * rms - mean_noise_value * mean_noise_value, tol)?;
    let out_std = output_std(p, psi, axis, tol)?;
    let (unbiased, _) = is_unbiased(p, obs, axis, tol)?;
    let (stat_independent, _) = is_stat_independent(p, obs, axis, tol)?;
    Ok(NoiseReport {
        target: axis,
        mean_noise_op,
        rms_noise: rms,
        noise_std: nstd,
        output_std: out_std,
        mean_noise_value,
        unbiased,
        stat_independent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fixtures::*;
    use crate::povm::OutcomeGrid;
    use crate::process::{ancilla_from_process, naimark_dilate, Ancilla};
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Precise measurement of `a` on the x output, constant guess `y0` on y.
    fn guess(a: &Operator, y0: f64, t: &Tolerances) -> JointPovm {
        let dec = a.spectral_auto(t).unwrap();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![y0]).unwrap();
        JointPovm::new(a.dim(), grid, dec.projectors().to_vec(), t).unwrap()
    }

    #[test]
    fn projective_marginal_has_zero_mean_noise() {
        let t = tol();
        let p = guess(&sigma_z(), 0.0, &t);
        let n = mean_noise_operator(&p, &sigma_z(), Axis::A, &t, None).unwrap();
        assert!(n.max_abs_entry() < 1e-12);
    }

    #[test]
    fn guess_output_mean_noise_is_shifted_observable() {
        let t = tol();
        let y0 = 0.25;
        let p = guess(&sigma_x(), y0, &t);
        let n = mean_noise_operator(&p, &sigma_y(), Axis::B, &t, None).unwrap();
        let expected = &Operator::identity(2).scale(y0) - &sigma_y();
        assert!(n.max_distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn mean_noise_three_routes_agree_on_dilated_povm() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..10 {
            let p = sample::random_joint_povm(3, 2, 2, &mut rng, &t).unwrap();
            let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
            let a = ancilla_from_process(&mp, &t).unwrap();
            let obs = sample::random_hermitian(3, &mut rng);
            // the operation hard-errors above 1e-8; verify the tighter bound
            let n_povm = mean_noise_operator(&p, &obs, Axis::A, &t, None).unwrap();
            let n_all = mean_noise_operator(&p, &obs, Axis::A, &t, Some(&a)).unwrap();
            assert!(n_povm.max_distance(&n_all).unwrap() < 1e-10);
            let noise = a.noise_operator(&obs, Axis::A).unwrap();
            let partial = noise.operator().partial_mean(a.xi()).unwrap();
            assert!(n_povm.max_distance(&partial).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rms_noise_vanishes_for_precise_measurement() {
        let t = tol();
        let p = guess(&sigma_z(), 0.0, &t);
        for psi in [
            StateVector::basis_state(2, 0),
            StateVector::basis_state(2, 1),
            plus_state(),
        ] {
            let eps = rms_noise(&p, &sigma_z(), &psi, Axis::A, &t, None).unwrap();
            assert!(eps < 1e-12);
        }
    }

    #[test]
    fn guess_rms_noise_for_conjugate_target() {
        let t = tol();
        // x output measures sigma_x precisely; y is the constant guess 0 for
        // sigma_y, so the noise is the full spread: ε(B)² = ⟨σy²⟩ = 1
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let eps = rms_noise(&p, &sigma_y(), &psi, Axis::B, &t, None).unwrap();
        assert_abs_diff_eq!(eps, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rms_noise_povm_and_ancilla_routes_agree() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..10 {
            let p = sample::random_joint_povm(2, 2, 2, &mut rng, &t).unwrap();
            let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
            let a = ancilla_from_process(&mp, &t).unwrap();
            let obs = sample::random_hermitian(2, &mut rng);
            let psi = sample::random_state(2, &mut rng);
            // passing the ancilla runs the dual-route check at 1e-8; verify
            // the tighter 1e-9 agreement explicitly
            let eps = rms_noise(&p, &obs, &psi, Axis::A, &t, Some(&a)).unwrap();
            let noise = a.noise_operator(&obs, Axis::A).unwrap();
            let composite = psi.tensor(a.xi());
            let direct = noise.operator().apply(composite.vector()).norm();
            assert!((eps - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_std_identity() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        // ⟨n_B⟩ = ⟨0|(0 − σy)|0⟩ = 0, so ΔN = ε = 1
        let nstd = noise_std(&p, &sigma_y(), &psi, Axis::B, &t, None).unwrap();
        assert_abs_diff_eq!(nstd, 1.0, epsilon = 1e-12);

        let precise = noise_std(&p, &sigma_x(), &psi, Axis::A, &t, None).unwrap();
        assert!(precise < 1e-12);
    }

    #[test]
    fn noise_std_matches_ancilla_std_dev() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(41);
        for _ in 0..10 {
            let p = sample::random_joint_povm(2, 2, 2, &mut rng, &t).unwrap();
            let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
            let a = ancilla_from_process(&mp, &t).unwrap();
            let obs = sample::random_hermitian(2, &mut rng);
            let psi = sample::random_state(2, &mut rng);
            let nstd = noise_std(&p, &obs, &psi, Axis::A, &t, Some(&a)).unwrap();
            let noise = a.noise_operator(&obs, Axis::A).unwrap();
            let composite = psi.tensor(a.xi());
            let oracle = noise.operator().std_dev(&composite, &t).unwrap();
            assert!((nstd - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn output_std_projective_cases() {
        let t = tol();
        let p = guess(&sigma_z(), 0.0, &t);
        let zero = StateVector::basis_state(2, 0);
        assert!(output_std(&p, &zero, Axis::A, &t).unwrap() < 1e-12);
        assert_abs_diff_eq!(
            output_std(&p, &plus_state(), Axis::A, &t).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // the guess output never fluctuates
        assert!(output_std(&p, &plus_state(), Axis::B, &t).unwrap() < 1e-12);
    }

    #[test]
    fn output_std_matches_distribution_oracle() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(43);
        for _ in 0..20 {
            let p = sample::random_joint_povm(3, 3, 2, &mut rng, &t).unwrap();
            let psi = sample::random_state(3, &mut rng);
            let spread = output_std(&p, &psi, Axis::A, &t).unwrap();
            let marginal = p.marginal(Axis::A);
            let dist = marginal.distribution(&psi, &t).unwrap();
            let mean: f64 = marginal
                .values()
                .iter()
                .zip(&dist)
                .map(|(v, q)| v * q)
                .sum();
            let var: f64 = marginal
                .values()
                .iter()
                .zip(&dist)
                .map(|(v, q)| (v - mean) * (v - mean) * q)
                .sum();
            assert!((spread - var.max(0.0).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn unbiasedness_checks() {
        let t = tol();
        let p = guess(&sigma_z(), 0.0, &t);
        let (ok, defect) = is_unbiased(&p, &sigma_z(), Axis::A, &t).unwrap();
        assert!(ok);
        assert!(defect < 1e-12);

        // the constant guess is biased for sigma_y: defect = ‖y0·I − σy‖ = 1
        let (ok, defect) = is_unbiased(&p, &sigma_y(), Axis::B, &t).unwrap();
        assert!(!ok);
        assert_abs_diff_eq!(defect, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn smeared_unbiased_povm_with_symmetric_noise() {
        let t = tol();
        // smear the projective sigma_z outcomes onto values ±2 with weights
        // chosen so the first moment operator stays exactly sigma_z:
        // Π(±2) = (I ± σz/2)/2, O = 2·(σz/2) = σz
        let grid = OutcomeGrid::new(vec![-2.0, 2.0], vec![0.0]).unwrap();
        let half = Operator::identity(2).scale(0.5);
        let elements = vec![
            &half - &sigma_z().scale(0.25),
            &half + &sigma_z().scale(0.25),
        ];
        let p = JointPovm::new(2, grid, elements, &t).unwrap();
        let (ok, defect) = is_unbiased(&p, &sigma_z(), Axis::A, &t).unwrap();
        assert!(ok, "defect {defect}");
        // unbiased implies statistically independent with r = 0
        let (ind, r) = is_stat_independent(&p, &sigma_z(), Axis::A, &t).unwrap();
        assert!(ind);
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn stat_independence_of_shifted_outcomes() {
        let t = tol();
        let dec = sigma_z().spectral_auto(&t).unwrap();
        let shift = 0.75;
        let values: Vec<f64> = dec.eigenvalues().iter().map(|v| v + shift).collect();
        let grid = OutcomeGrid::new(values, vec![0.0]).unwrap();
        let p = JointPovm::new(2, grid, dec.projectors().to_vec(), &t).unwrap();
        let (ind, r) = is_stat_independent(&p, &sigma_z(), Axis::A, &t).unwrap();
        assert!(ind);
        assert_abs_diff_eq!(r, shift, epsilon = 1e-12);

        // the guess model's B noise is y0·I − σy, not a constant
        let p = guess(&sigma_x(), 0.0, &t);
        let (ind, _) = is_stat_independent(&p, &sigma_y(), Axis::B, &t).unwrap();
        assert!(!ind);
    }

    #[test]
    fn factorization_defect_for_product_noise() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(47);
        // N = I⊗G commutes with X⊗I and factorizes for every X and ψ
        let g = Operator::diagonal(&[0.4, -0.2]);
        let a_obs = sigma_z();
        let c = &a_obs.tensor(&Operator::identity(2)) + &Operator::identity(2).tensor(&g);
        let d = Operator::zeros(4);
        let xi = sample::random_state(2, &mut rng);
        let anc = Ancilla::new(2, xi, c, d, &t).unwrap();
        for _ in 0..100 {
            let x = sample::random_hermitian(2, &mut rng);
            let psi = sample::random_state(2, &mut rng);
            let defect =
                verify_independence_factorization(&anc, &a_obs, Axis::A, &x, &psi).unwrap();
            assert!(defect < 1e-12, "defect {defect}");
        }
        // X = I factorizes trivially for any ancilla
        let defect = verify_independence_factorization(
            &anc,
            &a_obs,
            Axis::A,
            &Operator::identity(2),
            &StateVector::basis_state(2, 0),
        )
        .unwrap();
        assert!(defect < 1e-13);
    }

    #[test]
    fn factorization_defect_detects_dependent_noise() {
        let t = tol();
        // trivial probe, C = σx − σy, so N_A = −σy; X = σy, ψ = |0⟩ gives
        // ⟨X̃N⟩ = −⟨σy²⟩ = −1 while ⟨X⟩⟨N⟩ = 0
        let xi = StateVector::basis_state(1, 0);
        let c = &sigma_x() - &sigma_y();
        let anc = Ancilla::new(2, xi, c.clone(), c, &t).unwrap();
        let defect = verify_independence_factorization(
            &anc,
            &sigma_x(),
            Axis::A,
            &sigma_y(),
            &StateVector::basis_state(2, 0),
        )
        .unwrap();
        assert_abs_diff_eq!(defect, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn precision_equivalence_with_rms_noise() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(53);
        // precise marginal ⇔ ε = 0 on basis states and random states
        let precise = guess(&sigma_z(), 0.0, &t);
        let mut all_zero = true;
        for k in 0..2 {
            let psi = StateVector::basis_state(2, k);
            all_zero &= rms_noise(&precise, &sigma_z(), &psi, Axis::A, &t, None).unwrap() < 1e-9;
        }
        for _ in 0..100 {
            let psi = sample::random_state(2, &mut rng);
            all_zero &= rms_noise(&precise, &sigma_z(), &psi, Axis::A, &t, None).unwrap() < 1e-9;
        }
        assert!(all_zero);
        assert!(
            precise
                .marginal(Axis::A)
                .is_precise_for(&sigma_z(), &t)
                .unwrap()
                .precise
        );

        // perturbed marginal: ε > 0 on some state and the criterion fails
        for eta in [0.05, 0.2] {
            let dec = sigma_z().spectral_auto(&t).unwrap();
            let elements: Vec<Operator> = dec
                .projectors()
                .iter()
                .map(|e| &e.scale(1.0 - eta) + &Operator::identity(2).scale(eta / 2.0))
                .collect();
            let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![0.0]).unwrap();
            let p = JointPovm::new(2, grid, elements, &t).unwrap();
            assert!(
                !p.marginal(Axis::A)
                    .is_precise_for(&sigma_z(), &t)
                    .unwrap()
                    .precise
            );
            let psi = StateVector::basis_state(2, 0);
            let eps = rms_noise(&p, &sigma_z(), &psi, Axis::A, &t, None).unwrap();
            assert!(eps > 1e-3, "eta {eta}: rms noise {eps}");
        }
    }

    #[test]
    fn report_ties_the_identity_together() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(59);
        let p = sample::random_joint_povm(3, 2, 3, &mut rng, &t).unwrap();
        let obs = sample::random_hermitian(3, &mut rng);
        let psi = sample::random_state(3, &mut rng);
        let report = noise_report(&p, &obs, &psi, Axis::B, &t, None).unwrap();
        assert_abs_diff_eq!(
            report.noise_std * report.noise_std,
            report.rms_noise * report.rms_noise - report.mean_noise_value * report.mean_noise_value,
            epsilon = 1e-9
        );
        assert!(report.rms_noise >= report.noise_std);
        assert!(report.noise_std >= 0.0);
    }
}
