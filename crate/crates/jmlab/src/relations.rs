//! The uncertainty relations for joint measurements, evaluated as
//! LHS / RHS / slack records.
//!
//! Three relations are universal: they hold for every joint measurement of
//! every pair of observables in every state:
//!
//! * the commutator-corrected relation in its rms form,
//!   `ε(A)ε(B) + ½|⟨[n_A,B]⟩| + ½|⟨[A,n_B]⟩| ≥ ½|⟨[A,B]⟩|`,
//! * the same with the noise spreads, `ΔN_A ΔN_B` in place of `ε(A)ε(B)`,
//! * and the generalized trade-off
//!   `ε(A)ε(B) + ε(A)ΔB + ΔA ε(B) ≥ ½|⟨[A,B]⟩|`.
//!
//! The naive product form `ε(A)ε(B) ≥ ½|⟨[A,B]⟩|` is *not* universal; it is
//! recovered exactly when the noises are statistically independent on both
//! axes, and the report always carries the product comparison so violations
//! can be exhibited. Relations with preconditions evaluate to a distinct
//! not-applicable outcome rather than polluting holds/fails statistics.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::metrics::{self, NoiseReport};
use crate::operators::{Operator, StateVector};
use crate::povm::{Axis, JointPovm};
use crate::process::{
    ancilla_from_process, povm_from_ancilla, povm_from_process, Ancilla, MeasuringProcess,
};
use crate::tol::Tolerances;

/// Stable identifiers for every relation the report can contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    /// `ΔA·ΔB ≥ ½|⟨[A,B]⟩|` for the pre-measurement state.
    Robertson,
    /// rms-noise form with mean-noise commutator corrections.
    UniversalValid,
    /// Noise-spread form with the same corrections.
    UniversalValidSpread,
    /// `ε(A)ε(B) + ε(A)ΔB + ΔA·ε(B) ≥ ½|⟨[A,B]⟩|`.
    GeneralizedJoint,
    /// `ΔA·ε(B) ≥ ½|⟨[A,B]⟩|` when the `x` output is precise for `A`.
    PreciseABound,
    /// `ε(A)ε(B) ≥ ΔN_A·ΔN_B ≥ ½|⟨[A,B]⟩|` under independent noises.
    IndependentHeisenberg,
    /// `Δx·Δy ≥ |⟨[A,B]⟩|` under independent noises.
    OutputSpread,
}

impl RelationId {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationId::Robertson => "robertson",
            RelationId::UniversalValid => "universal_valid",
            RelationId::UniversalValidSpread => "universal_valid_spread",
            RelationId::GeneralizedJoint => "generalized_joint",
            RelationId::PreciseABound => "precise_a_bound",
            RelationId::IndependentHeisenberg => "independent_heisenberg",
            RelationId::OutputSpread => "output_spread",
        }
    }
}

/// One evaluated inequality with its sub-term breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct RelationRecord {
    pub name: RelationId,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs` exactly as computed.
    pub slack: f64,
    /// `slack ≥ −relation_slack`, plus any secondary links of a chained
    /// relation (their slacks are listed in `terms`).
    pub holds: bool,
    /// Named sub-terms so saturation can be analyzed without recomputation.
    pub terms: BTreeMap<String, f64>,
}

impl RelationRecord {
    fn new(
        name: RelationId,
        lhs: f64,
        rhs: f64,
        terms: BTreeMap<String, f64>,
        tol: &Tolerances,
    ) -> Self {
        let slack = lhs - rhs;
        Self {
            name,
            lhs,
            rhs,
            slack,
            holds: slack >= -tol.relation_slack,
            terms,
        }
    }
}

/// Evaluation result of a relation that may not apply to the given model.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RelationOutcome {
    Evaluated(RelationRecord),
    NotApplicable { name: RelationId, reason: String },
}

impl RelationOutcome {
    pub fn record(&self) -> Option<&RelationRecord> {
        match self {
            RelationOutcome::Evaluated(r) => Some(r),
            RelationOutcome::NotApplicable { .. } => None,
        }
    }
}

fn half_commutator_modulus(x: &Operator, y: &Operator, psi: &StateVector) -> Result<f64> {
    Ok(0.5 * x.commutator(y)?.expectation(psi)?.norm())
}

/// The state-preparation bound `ΔA·ΔB ≥ ½|⟨[A,B]⟩|`.
pub fn eval_robertson(
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
) -> Result<RelationRecord> {
    let da = a.std_dev(psi, tol)?;
    let db = b.std_dev(psi, tol)?;
    let rhs = half_commutator_modulus(a, b, psi)?;
    let mut terms = BTreeMap::new();
    terms.insert("delta_a".into(), da);
    terms.insert("delta_b".into(), db);
    Ok(RelationRecord::new(
        RelationId::Robertson,
        da * db,
        rhs,
        terms,
        tol,
    ))
}

/// The two commutator-corrected joint-measurement relations: the rms form
/// and the noise-spread form. Both are universal.
pub fn eval_universal(
    p: &JointPovm,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<(RelationRecord, RelationRecord)> {
    let eps_a = metrics::rms_noise(p, a, psi, Axis::A, tol, ancilla)?;
    let eps_b = metrics::rms_noise(p, b, psi, Axis::B, tol, ancilla)?;
    let dn_a = metrics::noise_std(p, a, psi, Axis::A, tol, ancilla)?;
    let dn_b = metrics::noise_std(p, b, psi, Axis::B, tol, ancilla)?;
    let n_a = metrics::mean_noise_operator(p, a, Axis::A, tol, ancilla)?;
    let n_b = metrics::mean_noise_operator(p, b, Axis::B, tol, ancilla)?;
    let corr_a = half_commutator_modulus(&n_a, b, psi)?;
    let corr_b = half_commutator_modulus(a, &n_b, psi)?;
    let rhs = half_commutator_modulus(a, b, psi)?;

    let mut terms = BTreeMap::new();
    terms.insert("eps_a".into(), eps_a);
    terms.insert("eps_b".into(), eps_b);
    terms.insert("mean_noise_corr_a".into(), corr_a);
    terms.insert("mean_noise_corr_b".into(), corr_b);
    let rms_form = RelationRecord::new(
        RelationId::UniversalValid,
        eps_a * eps_b + corr_a + corr_b,
        rhs,
        terms.clone(),
        tol,
    );

    terms.insert("noise_std_a".into(), dn_a);
    terms.insert("noise_std_b".into(), dn_b);
    let spread_form = RelationRecord::new(
        RelationId::UniversalValidSpread,
        dn_a * dn_b + corr_a + corr_b,
        rhs,
        terms,
        tol,
    );
    Ok((rms_form, spread_form))
}

/// The generalized trade-off between the rms noises and the
/// pre-measurement spreads. Its left-hand side dominates the rms form of
/// the commutator-corrected relation; that chain ordering is recorded as
/// `chain_slack` and folded into `holds`.
pub fn eval_generalized(
    p: &JointPovm,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<RelationRecord> {
    let eps_a = metrics::rms_noise(p, a, psi, Axis::A, tol, ancilla)?;
    let eps_b = metrics::rms_noise(p, b, psi, Axis::B, tol, ancilla)?;
    let da = a.std_dev(psi, tol)?;
    let db = b.std_dev(psi, tol)?;
    let rhs = half_commutator_modulus(a, b, psi)?;
    let lhs = eps_a * eps_b + eps_a * db + da * eps_b;

    let (universal, _) = eval_universal(p, a, b, psi, tol, ancilla)?;
    let chain_slack = lhs - universal.lhs;

    let mut terms = BTreeMap::new();
    terms.insert("eps_a".into(), eps_a);
    terms.insert("eps_b".into(), eps_b);
    terms.insert("delta_a".into(), da);
    terms.insert("delta_b".into(), db);
    terms.insert("universal_lhs".into(), universal.lhs);
    terms.insert("chain_slack".into(), chain_slack);
    let mut record = RelationRecord::new(RelationId::GeneralizedJoint, lhs, rhs, terms, tol);
    record.holds = record.holds && chain_slack >= -tol.relation_slack;
    Ok(record)
}

/// `ΔA·ε(B) ≥ ½|⟨[A,B]⟩|`, applicable when the `x` output measures `A`
/// precisely.
pub fn eval_precise_bound(
    p: &JointPovm,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<RelationOutcome> {
    let check = p.marginal(Axis::A).is_precise_for(a, tol)?;
    if !check.precise {
        return Ok(RelationOutcome::NotApplicable {
            name: RelationId::PreciseABound,
            reason: format!(
                "the x marginal does not measure the first observable precisely (defect {:.3e})",
                check.defect
            ),
        });
    }
    let da = a.std_dev(psi, tol)?;
    let eps_b = metrics::rms_noise(p, b, psi, Axis::B, tol, ancilla)?;
    let rhs = half_commutator_modulus(a, b, psi)?;
    let mut terms = BTreeMap::new();
    terms.insert("delta_a".into(), da);
    terms.insert("eps_b".into(), eps_b);
    Ok(RelationOutcome::Evaluated(RelationRecord::new(
        RelationId::PreciseABound,
        da * eps_b,
        rhs,
        terms,
        tol,
    )))
}

/// `ε(A)ε(B) ≥ ΔN_A·ΔN_B ≥ ½|⟨[A,B]⟩|`, applicable when the noise is
/// statistically independent on both axes. Both links are recorded; the
/// record holds only if both do.
pub fn eval_independent_heisenberg(
    p: &JointPovm,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
    ancilla: Option<&Ancilla>,
) -> Result<RelationOutcome> {
    let (ind_a, _) = metrics::is_stat_independent(p, a, Axis::A, tol)?;
    let (ind_b, _) = metrics::is_stat_independent(p, b, Axis::B, tol)?;
    if !ind_a || !ind_b {
        let which = match (ind_a, ind_b) {
            (false, true) => "the A-axis noise",
            (true, false) => "the B-axis noise",
            _ => "both noises",
        };
        return Ok(RelationOutcome::NotApplicable {
            name: RelationId::IndependentHeisenberg,
            reason: format!("{which} not statistically independent (mean noise not ∝ identity)"),
        });
    }
    let eps_a = metrics::rms_noise(p, a, psi, Axis::A, tol, ancilla)?;
    let eps_b = metrics::rms_noise(p, b, psi, Axis::B, tol, ancilla)?;
    let dn_a = metrics::noise_std(p, a, psi, Axis::A, tol, ancilla)?;
    let dn_b = metrics::noise_std(p, b, psi, Axis::B, tol, ancilla)?;
    let rhs = half_commutator_modulus(a, b, psi)?;
    let mid = dn_a * dn_b;
    let lhs = eps_a * eps_b;
    let mut terms = BTreeMap::new();
    terms.insert("eps_product".into(), lhs);
    terms.insert("noise_spread_product".into(), mid);
    terms.insert("upper_link_slack".into(), lhs - mid);
    terms.insert("lower_link_slack".into(), mid - rhs);
    let mut record = RelationRecord::new(RelationId::IndependentHeisenberg, lhs, rhs, terms, tol);
    record.holds = lhs - mid >= -tol.relation_slack && mid - rhs >= -tol.relation_slack;
    Ok(RelationOutcome::Evaluated(record))
}

/// `Δx·Δy ≥ |⟨[A,B]⟩|`, with twice the right-hand side of the
/// state-preparation bound, applicable under statistically independent
/// noises on both axes.
pub fn eval_output_spread(
    p: &JointPovm,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
) -> Result<RelationOutcome> {
    let (ind_a, _) = metrics::is_stat_independent(p, a, Axis::A, tol)?;
    let (ind_b, _) = metrics::is_stat_independent(p, b, Axis::B, tol)?;
    if !ind_a || !ind_b {
        return Ok(RelationOutcome::NotApplicable {
            name: RelationId::OutputSpread,
            reason: "noise not statistically independent on both axes".into(),
        });
    }
    let dx = metrics::output_std(p, psi, Axis::A, tol)?;
    let dy = metrics::output_std(p, psi, Axis::B, tol)?;
    let rhs = 2.0 * half_commutator_modulus(a, b, psi)?;
    let mut terms = BTreeMap::new();
    terms.insert("output_std_x".into(), dx);
    terms.insert("output_std_y".into(), dy);
    Ok(RelationOutcome::Evaluated(RelationRecord::new(
        RelationId::OutputSpread,
        dx * dy,
        rhs,
        terms,
        tol,
    )))
}

/// A measurement model in any of its three equivalent presentations.
#[derive(Debug, Clone)]
pub enum Model {
    Povm(JointPovm),
    Process(MeasuringProcess),
    Ancilla(Ancilla),
}

impl Model {
    /// Normalize to the POVM plus, when available, an ancilla realization
    /// used for cross-route verification.
    pub fn normalize(&self, tol: &Tolerances) -> Result<(JointPovm, Option<Ancilla>)> {
        match self {
            Model::Povm(p) => Ok((p.clone(), None)),
            Model::Process(mp) => {
                let povm = povm_from_process(mp, tol)?;
                let ancilla = ancilla_from_process(mp, tol)?;
                Ok((povm, Some(ancilla)))
            }
            Model::Ancilla(a) => {
                let povm = povm_from_ancilla(a, tol)?;
                Ok((povm, Some(a.clone())))
            }
        }
    }
}

/// The always-computed comparison of the naive noise product against the
/// commutator bound. Informational: `violated` is expected for models with
/// dependent noise and is the whole point of the corrected relations.
#[derive(Debug, Clone, Serialize)]
pub struct HeisenbergProduct {
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub dim: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
}

/// Everything the laboratory knows about one model in one state.
#[derive(Debug, Clone, Serialize)]
pub struct RelationReport {
    pub scenario: ScenarioSummary,
    pub noise_a: NoiseReport,
    pub noise_b: NoiseReport,
    /// Evaluated records: the universal relations plus every conditional
    /// relation whose precondition held.
    pub records: Vec<RelationRecord>,
    /// Conditional relations whose precondition failed, with the reason.
    pub not_applicable: Vec<RelationOutcome>,
    pub heisenberg_product: HeisenbergProduct,
}

impl RelationReport {
    pub fn record(&self, name: RelationId) -> Option<&RelationRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.records.iter().all(|r| r.holds)
    }

    /// Flatten to CSV rows: `relation,lhs,rhs,slack,holds`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                format!(
                    "{},{:.17e},{:.17e},{:.17e},{}",
                    r.name.as_str(),
                    r.lhs,
                    r.rhs,
                    r.slack,
                    r.holds
                )
            })
            .collect()
    }
}

/// Evaluate every applicable relation for the model and assemble the report.
pub fn full_report(
    model: &Model,
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    tol: &Tolerances,
) -> Result<RelationReport> {
    let (povm, ancilla) = model.normalize(tol)?;
    let ancilla_ref = ancilla.as_ref();

    let noise_a = metrics::noise_report(&povm, a, psi, Axis::A, tol, ancilla_ref)?;
    let noise_b = metrics::noise_report(&povm, b, psi, Axis::B, tol, ancilla_ref)?;

    let mut records = Vec::new();
    let mut not_applicable = Vec::new();

    records.push(eval_robertson(a, b, psi, tol)?);
    let (rms_form, spread_form) = eval_universal(&povm, a, b, psi, tol, ancilla_ref)?;
    records.push(rms_form);
    records.push(spread_form);
    records.push(eval_generalized(&povm, a, b, psi, tol, ancilla_ref)?);
    for outcome in [
        eval_precise_bound(&povm, a, b, psi, tol, ancilla_ref)?,
        eval_independent_heisenberg(&povm, a, b, psi, tol, ancilla_ref)?,
        eval_output_spread(&povm, a, b, psi, tol)?,
    ] {
        match outcome {
            RelationOutcome::Evaluated(r) => records.push(r),
            na @ RelationOutcome::NotApplicable { .. } => not_applicable.push(na),
        }
    }

    let product_lhs = noise_a.rms_noise * noise_b.rms_noise;
    let product_rhs = half_commutator_modulus(a, b, psi)?;
    let heisenberg_product = HeisenbergProduct {
        lhs: product_lhs,
        rhs: product_rhs,
        violated: product_lhs < product_rhs - tol.relation_slack,
    };

    Ok(RelationReport {
        scenario: ScenarioSummary {
            dim: povm.dim(),
            grid_nx: povm.grid().nx(),
            grid_ny: povm.grid().ny(),
        },
        noise_a,
        noise_b,
        records,
        not_applicable,
        heisenberg_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fixtures::*;
    use crate::povm::OutcomeGrid;
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn guess(a: &Operator, y0: f64, t: &Tolerances) -> JointPovm {
        let dec = a.spectral_auto(t).unwrap();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![y0]).unwrap();
        JointPovm::new(a.dim(), grid, dec.projectors().to_vec(), t).unwrap()
    }

    #[test]
    fn robertson_saturates_for_conjugate_pauli_pair() {
        let t = tol();
        let r =
            eval_robertson(&sigma_x(), &sigma_y(), &StateVector::basis_state(2, 0), &t).unwrap();
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn robertson_commuting_pair_has_zero_bound() {
        let t = tol();
        let psi = plus_state();
        let r = eval_robertson(&sigma_z(), &sigma_z(), &psi, &t).unwrap();
        assert_abs_diff_eq!(r.rhs, 0.0, epsilon = 1e-14);
        assert!(r.holds);
    }

    #[test]
    fn robertson_random_sweep_never_violates() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..300 {
            let dim = rng.random_range(2..=8);
            let a = sample::random_hermitian(dim, &mut rng);
            let b = sample::random_hermitian(dim, &mut rng);
            let psi = sample::random_state(dim, &mut rng);
            let r = eval_robertson(&a, &b, &psi, &t).unwrap();
            assert!(r.slack >= -1e-9, "slack {}", r.slack);
        }
    }

    #[test]
    fn guess_model_saturates_universal_relation() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let (rms_form, spread_form) =
            eval_universal(&p, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
        // terms: ε(A)ε(B) = 0, corr_a = 0, corr_b = ½|⟨[σx,−σy]⟩| = 1
        assert_abs_diff_eq!(rms_form.terms["eps_a"], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms_form.terms["mean_noise_corr_a"], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms_form.terms["mean_noise_corr_b"], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms_form.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms_form.rhs, 1.0, epsilon = 1e-12);
        assert!(rms_form.holds);
        assert_abs_diff_eq!(spread_form.lhs, 1.0, epsilon = 1e-12);
        assert!(spread_form.holds);
    }

    #[test]
    fn generalized_relation_on_guess_model() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let r = eval_generalized(&p, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
        // 0 + 0·ΔB + ΔA·ε(B) = 1·1 = 1 ≥ 1
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-12);
        assert!(r.holds);
        assert!(r.terms["chain_slack"] >= -1e-12);
    }

    #[test]
    fn precise_bound_saturates_on_guess_model() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let out = eval_precise_bound(&p, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
        let r = out.record().expect("precise A marginal");
        assert_abs_diff_eq!(r.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rhs, 1.0, epsilon = 1e-12);

        // smeared marginal makes it not applicable
        let eta = 0.2;
        let dec = sigma_x().spectral_auto(&t).unwrap();
        let elements: Vec<Operator> = dec
            .projectors()
            .iter()
            .map(|e| &e.scale(1.0 - eta) + &Operator::identity(2).scale(eta / 2.0))
            .collect();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![0.0]).unwrap();
        let smeared = JointPovm::new(2, grid, elements, &t).unwrap();
        let out = eval_precise_bound(&smeared, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
        assert!(out.record().is_none());
    }

    #[test]
    fn guess_model_heisenberg_not_applicable_but_violated() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let out = eval_independent_heisenberg(&p, &sigma_x(), &sigma_y(), &psi, &t, None).unwrap();
        assert!(out.record().is_none(), "guess noise is state-dependent");

        let report = full_report(&Model::Povm(p), &sigma_x(), &sigma_y(), &psi, &t).unwrap();
        assert!(report.heisenberg_product.violated);
        assert_abs_diff_eq!(report.heisenberg_product.lhs, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.heisenberg_product.rhs, 1.0, epsilon = 1e-12);
        // the informational violation is large: a full unit below the bound
        assert!(report.heisenberg_product.rhs - report.heisenberg_product.lhs > 0.5);
        assert!(report.all_hold());
    }

    #[test]
    fn product_projective_model_reports_all_zero_bounds() {
        let t = tol();
        let a = Operator::diagonal(&[-1.0, 1.0]);
        let b = Operator::diagonal(&[2.0, 5.0]);
        let dec_a = a.spectral_auto(&t).unwrap();
        let dec_b = b.spectral_auto(&t).unwrap();
        let grid =
            OutcomeGrid::new(dec_a.eigenvalues().to_vec(), dec_b.eigenvalues().to_vec()).unwrap();
        let mut elements = Vec::new();
        for (_, _, x, y) in grid.points() {
            let ea = dec_a.projector_for(x, 1e-9).unwrap();
            let eb = dec_b.projector_for(y, 1e-9).unwrap();
            elements.push(ea * eb);
        }
        let p = JointPovm::new(2, grid, elements, &t).unwrap();
        let psi = plus_state();
        let report = full_report(&Model::Povm(p), &a, &b, &psi, &t).unwrap();
        for r in &report.records {
            assert!(r.holds, "{:?} fails", r.name);
            assert_abs_diff_eq!(r.rhs, 0.0, epsilon = 1e-12);
        }
        // precise, independent, and spread relations all apply here
        assert!(report.record(RelationId::PreciseABound).is_some());
        assert!(report.record(RelationId::IndependentHeisenberg).is_some());
        assert!(report.record(RelationId::OutputSpread).is_some());
        assert!(!report.heisenberg_product.violated);
    }

    #[test]
    fn random_dilated_sweep_universal_relations_hold() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..40 {
            let dim = rng.random_range(2..=4);
            let p = sample::random_joint_povm(dim, 2, 2, &mut rng, &t).unwrap();
            let a = sample::random_hermitian(dim, &mut rng);
            let b = sample::random_hermitian(dim, &mut rng);
            let psi = sample::random_state(dim, &mut rng);
            let report = full_report(&Model::Povm(p), &a, &b, &psi, &t).unwrap();
            for id in [
                RelationId::UniversalValid,
                RelationId::UniversalValidSpread,
                RelationId::GeneralizedJoint,
            ] {
                let r = report.record(id).unwrap();
                assert!(r.slack >= -1e-9, "{:?} slack {}", id, r.slack);
            }
            // chain ordering
            let gen = report.record(RelationId::GeneralizedJoint).unwrap();
            assert!(gen.terms["chain_slack"] >= -1e-9);
        }
    }

    #[test]
    fn full_report_from_process_and_ancilla_presentations() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(71);
        let p = sample::random_joint_povm(2, 2, 2, &mut rng, &t).unwrap();
        let mp = crate::process::naimark_dilate(&p, &t, &mut rng).unwrap();
        let a_obs = sample::random_hermitian(2, &mut rng);
        let b_obs = sample::random_hermitian(2, &mut rng);
        let psi = sample::random_state(2, &mut rng);

        let via_povm = full_report(&Model::Povm(p), &a_obs, &b_obs, &psi, &t).unwrap();
        let via_process =
            full_report(&Model::Process(mp.clone()), &a_obs, &b_obs, &psi, &t).unwrap();
        let anc = ancilla_from_process(&mp, &t).unwrap();
        let via_ancilla = full_report(&Model::Ancilla(anc), &a_obs, &b_obs, &psi, &t).unwrap();

        for (x, y) in [(&via_povm, &via_process), (&via_povm, &via_ancilla)] {
            assert_abs_diff_eq!(x.noise_a.rms_noise, y.noise_a.rms_noise, epsilon = 1e-9);
            assert_abs_diff_eq!(x.noise_b.rms_noise, y.noise_b.rms_noise, epsilon = 1e-9);
            for (rx, ry) in x.records.iter().zip(y.records.iter()) {
                assert_eq!(rx.name, ry.name);
                assert_abs_diff_eq!(rx.lhs, ry.lhs, epsilon = 1e-9);
                assert_abs_diff_eq!(rx.rhs, ry.rhs, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn report_serializes_with_stable_names() {
        let t = tol();
        let p = guess(&sigma_x(), 0.0, &t);
        let psi = StateVector::basis_state(2, 0);
        let report = full_report(&Model::Povm(p), &sigma_x(), &sigma_y(), &psi, &t).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["records"][0]["name"], "robertson");
        assert!(json["heisenberg_product"]["violated"].as_bool().unwrap());
        let rows = report.csv_rows();
        assert!(rows[0].starts_with("robertson,"));
    }
}
