//! Canonical example models.
//!
//! * the guess model: measure one observable projectively and output a
//!   constant guess for the other: the minimal exhibit of a noise-product
//!   violation of the naive Heisenberg bound;
//! * clock/shift conjugate pairs on `C^d` related by the discrete Fourier
//!   transform;
//! * the difference/sum model on `C^d ⊗ C^d`: modular clock difference and
//!   modular shift sum commute exactly (the generalized Bell basis
//!   diagonalizes both), giving an exactly-commuting joint measurement of a
//!   noncommuting pair;
//! * truncated harmonic oscillators and the position-measurement bound demo
//!   in the presence of a second oscillator;
//! * independent-noise constructions feeding the Heisenberg-form relations.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::operators::{Operator, StateVector};
use crate::povm::{JointPovm, OutcomeGrid};
use crate::process::Ancilla;
use crate::tol::Tolerances;

/// Conjugate pair on `C^d`: the clock observable `X = diag(0..d−1)` and its
/// Fourier conjugate `P = F X F†`.
#[derive(Debug, Clone)]
pub struct DiscretePair {
    d: usize,
    clock: Operator,
    shift: Operator,
    fourier: Operator,
}

impl DiscretePair {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: d,
                context: "discrete conjugate pair",
            });
        }
        let clock_values: Vec<f64> = (0..d).map(|k| k as f64).collect();
        let clock = Operator::diagonal(&clock_values);
        let fourier = fourier_matrix(d);
        let shift = &(&fourier * &clock) * &fourier.adjoint();
        Ok(Self {
            d,
            clock,
            shift,
            fourier,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Diagonal observable with eigenvalues `0..d−1`.
    pub fn clock(&self) -> &Operator {
        &self.clock
    }

    /// The Fourier conjugate of the clock; same spectrum, mutually unbiased
    /// eigenbasis.
    pub fn shift(&self) -> &Operator {
        &self.shift
    }

    pub fn fourier(&self) -> &Operator {
        &self.fourier
    }
}

/// `F[j,k] = exp(2πi·jk/d)/√d`.
pub fn fourier_matrix(d: usize) -> Operator {
    let norm = 1.0 / (d as f64).sqrt();
    let mut entries = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let phase = 2.0 * PI * (j * k) as f64 / d as f64;
            entries.push(C64::new(phase.cos() * norm, phase.sin() * norm));
        }
    }
    Operator::from_row_slice(d, &entries).expect("square by construction")
}

/// Precise projective measurement of `a` on the `x` output combined with a
/// constant guess `y0` on the `y` output: `Π(x, y0) = E_A(x)`.
///
/// The second observable plays no role in the construction; that is the
/// point: its "measurement" ignores the system entirely, and the noise
/// analysis against any target `b` quantifies what the guess costs.
pub fn guess_model(a: &Operator, y0: f64, tol: &Tolerances) -> Result<JointPovm> {
    let dec = a.spectral_auto(tol)?;
    let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![y0])?;
    JointPovm::new(a.dim(), grid, dec.projectors().to_vec(), tol)
}

/// The difference/sum model: object and reference copies of `C^d`, with the
/// modular clock difference and the modular shift sum measured jointly.
#[derive(Debug, Clone)]
pub struct EprModel {
    /// The commuting pair `(C, D)` with the reference system as probe.
    pub ancilla: Ancilla,
    /// Object observable measured by the `x` output: the clock.
    pub clock: Operator,
    /// Object observable measured by the `y` output: the shift conjugate.
    pub shift: Operator,
}

/// Build the difference/sum model for a reference state `ξ` on `C^d`.
///
/// `C` has eigenvalue `(j − k) mod d` on the product clock basis `|j, k⟩`;
/// `D` has eigenvalue `(m + n) mod d` on the product Fourier basis. Both
/// are assembled from the generalized Bell projectors, which diagonalize
/// the two simultaneously, so `[C, D] = 0` holds at construction rather
/// than within a tolerance.
///
/// Outcome labels are the plain integers `0..d−1`; the wrap-around lives
/// in the *eigenvalues* of `C` and `D` only. The noise operators stay
/// ordinary operator differences, `N = C − A⊗I`, with no modular
/// arithmetic, which keeps the whole metric layer linear-algebraic. The
/// price is that the wrap contributes noise of size `~d` on components
/// where it engages, which is why a sharp reference at clock value `0`
/// (where no wrap occurs) measures the clock exactly.
pub fn epr_difference_sum_model(d: usize, xi: &StateVector, tol: &Tolerances) -> Result<EprModel> {
    if d < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: d,
            context: "difference/sum model",
        });
    }
    if xi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: xi.dim(),
            context: "difference/sum reference state",
        });
    }
    let pair = DiscretePair::new(d)?;
    let dd = d * d;
    let mut c = Operator::zeros(dd);
    let mut dop = Operator::zeros(dd);
    for diff in 0..d {
        for sum in 0..d {
            let bell = bell_vector(d, diff, sum);
            let proj = Operator::outer(&bell);
            c = &c + &proj.scale(diff as f64);
            dop = &dop + &proj.scale(sum as f64);
        }
    }
    let ancilla = Ancilla::new(d, xi.clone(), c, dop, tol)?;
    Ok(EprModel {
        ancilla,
        clock: pair.clock.clone(),
        shift: pair.shift.clone(),
    })
}

/// Generalized Bell vector `(1/√d) Σ_j ω^{s·j} |j⟩⊗|(j−c) mod d⟩`:
/// eigenvector of the modular clock difference with eigenvalue `c` and of
/// the modular shift sum with eigenvalue `s`.
fn bell_vector(d: usize, c: usize, s: usize) -> DVector<C64> {
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = DVector::<C64>::zeros(d * d);
    for j in 0..d {
        let partner = (j + d - c) % d;
        let phase = 2.0 * PI * (s * j) as f64 / d as f64;
        v[j * d + partner] = C64::new(phase.cos() * norm, phase.sin() * norm);
    }
    v
}

/// Truncated harmonic oscillator: position and momentum built from the
/// ladder operators on the lowest `cutoff` number states.
///
/// The commutator `[Q, P]` equals `iħ·I` on every row except the boundary
/// row `cutoff−1`, where truncation necessarily breaks the canonical pair —
/// no finite-dimensional pair satisfies it exactly.
#[derive(Debug, Clone)]
pub struct TruncatedOscillator {
    cutoff: usize,
    position: Operator,
    momentum: Operator,
    hbar: f64,
}

impl TruncatedOscillator {
    pub fn new(cutoff: usize, hbar: f64) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: cutoff,
                context: "oscillator cutoff",
            });
        }
        let scale = (hbar / 2.0).sqrt();
        let mut q = Operator::zeros(cutoff).into_matrix();
        let mut p = Operator::zeros(cutoff).into_matrix();
        for k in 1..cutoff {
            let amp = (k as f64).sqrt() * scale;
            // a = Σ √k |k−1⟩⟨k|; Q = scale(a + a†), P = i·scale(a† − a)
            q[(k - 1, k)] += C64::new(amp, 0.0);
            q[(k, k - 1)] += C64::new(amp, 0.0);
            p[(k - 1, k)] += C64::new(0.0, -amp);
            p[(k, k - 1)] += C64::new(0.0, amp);
        }
        Ok(Self {
            cutoff,
            position: Operator::from_matrix(q)?,
            momentum: Operator::from_matrix(p)?,
            hbar,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn position(&self) -> &Operator {
        &self.position
    }

    pub fn momentum(&self) -> &Operator {
        &self.momentum
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `‖([Q,P] − iħI)ψ‖`, the truncation-error estimate for a state.
    pub fn ccr_defect(&self, psi: &StateVector) -> Result<f64> {
        if psi.dim() != self.cutoff {
            return Err(Error::DimensionMismatch {
                expected: self.cutoff,
                got: psi.dim(),
                context: "oscillator state",
            });
        }
        let comm = self.position.commutator(&self.momentum)?;
        let ideal = Operator::identity(self.cutoff).scale_complex(C64::new(0.0, self.hbar));
        Ok((&comm - &ideal).apply(psi.vector()).norm())
    }

    /// Normalized truncation of the coherent state with amplitude `alpha`.
    pub fn coherent_like(&self, alpha: f64) -> StateVector {
        let mut v = DVector::<C64>::zeros(self.cutoff);
        let mut amp = 1.0;
        for k in 0..self.cutoff {
            v[k] = C64::new(amp, 0.0);
            amp *= alpha / ((k + 1) as f64).sqrt();
        }
        StateVector::normalized(v).expect("nonzero amplitude at k = 0")
    }

    /// Normalized truncation of the squeezed vacuum with parameter `r > 0`
    /// (momentum spread shrinks as `e^{-r}`).
    pub fn squeezed_like(&self, r: f64) -> StateVector {
        let mut v = DVector::<C64>::zeros(self.cutoff);
        let t = r.tanh();
        let mut amp = 1.0;
        let mut k = 0;
        while 2 * k < self.cutoff {
            v[2 * k] = C64::new(amp, 0.0);
            // c_{2(k+1)}/c_{2k} = tanh(r) · √(2k+1)/√(2k+2) with the sign
            // chosen to squeeze momentum rather than position
            amp *= t * ((2 * k + 1) as f64).sqrt() / ((2 * k + 2) as f64).sqrt();
            k += 1;
        }
        StateVector::normalized(v).expect("nonzero vacuum amplitude")
    }
}

/// Largest admissible probability mass on the upper half of the number
/// basis for states fed into [`truncated_ccr_demo`].
pub const LOW_SUPPORT_TAIL_LIMIT: f64 = 0.05;

/// One evaluated state pair in the truncated demo.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedCcrRecord {
    /// `ε(A)ε(B) + ε(A)ΔB + ΔA·ε(B)` for `A` the momentum sum (measured
    /// without noise) and `B` the object position, so effectively `ΔA·ε(B)`.
    pub generalized_lhs: f64,
    /// `½|⟨[A,B]⟩|` with the truncated commutator.
    pub commutator_bound: f64,
    pub generalized_slack: f64,
    /// `ε(Q)²` for the position output.
    pub position_noise_sq: f64,
    /// `ħ²/(4ΔP² + 4ΔP′²)`.
    pub closing_bound: f64,
    pub closing_slack: f64,
    /// `‖([Q,P]−iħ)ψ₁‖ + ‖([Q′,P′]−iħ)ψ₂‖`.
    pub truncation_estimate: f64,
    /// Both slacks stay above `−truncation_estimate`.
    pub holds_within_estimate: bool,
    pub delta_p1: f64,
    pub delta_p2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncatedCcrReport {
    pub cutoff: usize,
    pub hbar: f64,
    pub records: Vec<TruncatedCcrRecord>,
}

/// Position-measurement bound with a second oscillator as reference.
///
/// Two truncated oscillators; the commuting pair on the doubled space is
/// the momentum sum `P⊗I + I⊗P′` (measured exactly, output `x`) and the
/// position difference `Q⊗I − I⊗Q′` (output `y`, taken as the measured
/// value of the object position `Q`). The generalized trade-off and the
/// closing bound `ε(Q)² ≥ ħ²/(4ΔP² + 4ΔP′²)` are evaluated per state pair;
/// both are asserted only up to the reported truncation estimate, which is
/// exactly zero for states supported strictly below the boundary row.
pub fn truncated_ccr_demo(
    cutoff: usize,
    states: &[(StateVector, StateVector)],
    hbar: f64,
    tol: &Tolerances,
) -> Result<TruncatedCcrReport> {
    if cutoff < 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: cutoff,
            context: "truncated demo cutoff",
        });
    }
    let osc = TruncatedOscillator::new(cutoff, hbar)?;
    let id = Operator::identity(cutoff);
    // A = P⊗I + I⊗P′ (momentum sum), B = Q⊗I (object position),
    // D = Q⊗I − I⊗Q′ (the position output actually read)
    let a_op = &osc.momentum().tensor(&id) + &id.tensor(osc.momentum());
    let b_op = osc.position().tensor(&id);
    let noise_b = &-&id.tensor(osc.position()); // D − B = −I⊗Q′

    let mut records = Vec::with_capacity(states.len());
    for (psi1, psi2) in states {
        for psi in [psi1, psi2] {
            if psi.dim() != cutoff {
                return Err(Error::DimensionMismatch {
                    expected: cutoff,
                    got: psi.dim(),
                    context: "truncated demo state",
                });
            }
            let tail: f64 = (cutoff / 2..cutoff)
                .map(|k| psi.amplitude(k).norm_sqr())
                .sum();
            if tail > LOW_SUPPORT_TAIL_LIMIT {
                return Err(Error::StateSupport {
                    reason: format!(
                        "probability mass {tail:.3e} above index {} exceeds {LOW_SUPPORT_TAIL_LIMIT}",
                        cutoff / 2
                    ),
                });
            }
        }
        let psi = psi1.tensor(psi2);

        // the momentum sum is read off exactly, so eps_a = 0 identically
        let eps_b = noise_b.apply(psi.vector()).norm();
        let delta_a = a_op.std_dev(&psi, tol)?;
        let delta_p1 = osc.momentum().std_dev(psi1, tol)?;
        let delta_p2 = osc.momentum().std_dev(psi2, tol)?;

        let a_psi = a_op.apply(psi.vector());
        let b_psi = b_op.apply(psi.vector());
        let comm_mean = a_psi.dotc(&b_psi) - b_psi.dotc(&a_psi);
        let bound = 0.5 * comm_mean.norm();

        let generalized_lhs = delta_a * eps_b;
        let generalized_slack = generalized_lhs - bound;

        let closing_bound = hbar * hbar / (4.0 * delta_p1 * delta_p1 + 4.0 * delta_p2 * delta_p2);
        let closing_slack = eps_b * eps_b - closing_bound;

        let estimate = osc.ccr_defect(psi1)? + osc.ccr_defect(psi2)?;
        let holds_within_estimate = generalized_slack >= -(estimate + tol.relation_slack)
            && closing_slack >= -(estimate + tol.relation_slack);

        records.push(TruncatedCcrRecord {
            generalized_lhs,
            commutator_bound: bound,
            generalized_slack,
            position_noise_sq: eps_b * eps_b,
            closing_bound,
            closing_slack,
            truncation_estimate: estimate,
            holds_within_estimate,
            delta_p1,
            delta_p2,
        });
    }
    Ok(TruncatedCcrReport {
        cutoff,
        hbar,
        records,
    })
}

/// Independent-noise construction on disjoint probe factors:
/// `C = A⊗I⊗I + I⊗G1⊗I` and `D = B⊗I⊗I + I⊗I⊗G2` on `H⊗K1⊗K2`.
///
/// The noises are `I⊗G̃` products, so their partial means are multiples of
/// the identity for *any* probe state, so statistical independence holds by
/// construction. The pair commutes exactly when `[A, B] = 0`; anything else
/// is rejected, which is the content of the commutation obstruction: this
/// simple recipe cannot produce independent noise for a noncommuting pair.
/// (Dilated unbiased POVMs can; see the guide.)
pub fn independent_noise_model(
    a: &Operator,
    b: &Operator,
    g1: &Operator,
    g2: &Operator,
    xi: &StateVector,
    tol: &Tolerances,
) -> Result<Ancilla> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
            context: "independent-noise observables",
        });
    }
    if xi.dim() != g1.dim() * g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim() * g2.dim(),
            got: xi.dim(),
            context: "independent-noise probe state",
        });
    }
    let id_h = Operator::identity(a.dim());
    let id1 = Operator::identity(g1.dim());
    let id2 = Operator::identity(g2.dim());
    let c = &a.tensor(&id1).tensor(&id2) + &id_h.tensor(g1).tensor(&id2);
    let d = &b.tensor(&id1).tensor(&id2) + &id_h.tensor(&id1).tensor(g2);
    // Ancilla::new re-verifies commutation and rejects the construction
    Ancilla::new(a.dim(), xi.clone(), c, d, tol)
}

/// The unbiased joint measurement of the Pauli pair `(σx, σy)` with
/// isotropic smearing: four outcomes at `(±√2, ±√2)` with elements
/// `¼(I ± σx/√2 ± σy/√2)`.
///
/// Both marginals are unbiased (hence the noises are statistically
/// independent with zero mean), `ε(A) = ε(B) = 1` in every state, and in
/// the `|0⟩` state the whole independent-noise chain
/// `ε(A)ε(B) ≥ ΔN_AΔN_B ≥ ½|⟨[A,B]⟩|` saturates at 1.
pub fn unbiased_pauli_pair_model(tol: &Tolerances) -> Result<(JointPovm, Operator, Operator)> {
    let sx = crate::operators::fixtures::sigma_x();
    let sy = crate::operators::fixtures::sigma_y();
    let s = 2.0_f64.sqrt();
    let grid = OutcomeGrid::new(vec![-s, s], vec![-s, s])?;
    let mut elements = Vec::with_capacity(4);
    for (_, _, x, y) in grid.points() {
        let e = &(&Operator::identity(2).scale(0.25) + &sx.scale(0.25 * x.signum() / s))
            + &sy.scale(0.25 * y.signum() / s);
        elements.push(e);
    }
    let povm = JointPovm::new(2, grid, elements, tol)?;
    Ok((povm, sx, sy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::operators::fixtures::*;
    use crate::povm::Axis;
    use crate::process::povm_from_ancilla;
    use crate::relations::{self, Model, RelationId};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn discrete_pair_invariants() {
        let t = tol();
        for d in [2, 3, 5] {
            let pair = DiscretePair::new(d).unwrap();
            let f = pair.fourier();
            let unit = (&(&f.adjoint() * f) - &Operator::identity(d)).op_norm();
            assert!(unit < 1e-10, "Fourier unitarity defect {unit}");
            let rebuilt = &(f * pair.clock()) * &f.adjoint();
            assert!(rebuilt.max_distance(pair.shift()).unwrap() < 1e-10);
            // the conjugate has the same spectrum
            let dec = pair.shift().spectral_auto(&t).unwrap();
            for (k, ev) in dec.eigenvalues().iter().enumerate() {
                assert_abs_diff_eq!(*ev, k as f64, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn guess_model_noise_anchor_values() {
        let t = tol();
        let p = guess_model(&sigma_x(), 0.0, &t).unwrap();
        let psi = StateVector::basis_state(2, 0);
        let eps_a = metrics::rms_noise(&p, &sigma_x(), &psi, Axis::A, &t, None).unwrap();
        let eps_b = metrics::rms_noise(&p, &sigma_y(), &psi, Axis::B, &t, None).unwrap();
        assert!(eps_a < 1e-12);
        assert_abs_diff_eq!(eps_b, 1.0, epsilon = 1e-12);

        // guessing an eigenvalue on its own eigenstate is also precise
        let p = guess_model(&sigma_z(), 1.0, &t).unwrap();
        let eps_b = metrics::rms_noise(
            &p,
            &sigma_z(),
            &StateVector::basis_state(2, 0),
            Axis::B,
            &t,
            None,
        )
        .unwrap();
        assert!(eps_b < 1e-12);

        // distance from the guess to the eigenvalue otherwise
        let p = guess_model(&sigma_z(), 0.0, &t).unwrap();
        let eps_b = metrics::rms_noise(
            &p,
            &sigma_z(),
            &StateVector::basis_state(2, 0),
            Axis::B,
            &t,
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(eps_b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn epr_model_commutes_exactly() {
        let t = tol();
        for d in [2, 3] {
            let xi = StateVector::basis_state(d, 0);
            let model = epr_difference_sum_model(d, &xi, &t).unwrap();
            let defect = model
                .ancilla
                .measured_1()
                .commutator(model.ancilla.measured_2())
                .unwrap()
                .op_norm();
            assert!(defect < 1e-12, "d = {d}: [C,D] defect {defect}");
        }
    }

    #[test]
    fn epr_sharp_reference_measures_clock_precisely() {
        use rand::SeedableRng;
        let t = tol();
        for d in [2, 3] {
            let xi = StateVector::basis_state(d, 0);
            let model = epr_difference_sum_model(d, &xi, &t).unwrap();
            // dual-route rms noise: POVM sum form vs ancilla route, both zero
            let povm = povm_from_ancilla(&model.ancilla, &t).unwrap();
            let psi = crate::sample::random_state(d, &mut rand::rngs::StdRng::seed_from_u64(3));
            let eps =
                metrics::rms_noise(&povm, &model.clock, &psi, Axis::A, &t, Some(&model.ancilla))
                    .unwrap();
            assert!(eps < 1e-9, "d = {d}: eps {eps}");
        }
    }

    #[test]
    fn epr_uniform_reference_satisfies_universal_relation() {
        let t = tol();
        let d = 3;
        let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let xi = StateVector::new(DVector::from_element(d, amp), &t).unwrap();
        let model = epr_difference_sum_model(d, &xi, &t).unwrap();
        let psi = StateVector::basis_state(d, 1);
        let report = relations::full_report(
            &Model::Ancilla(model.ancilla.clone()),
            &model.clock,
            &model.shift,
            &psi,
            &t,
        )
        .unwrap();
        for id in [
            RelationId::UniversalValid,
            RelationId::UniversalValidSpread,
            RelationId::GeneralizedJoint,
        ] {
            let r = report.record(id).unwrap();
            assert!(r.slack >= -1e-9, "{:?} slack {}", id, r.slack);
        }
    }

    #[test]
    fn epr_clock_noise_shrinks_as_reference_sharpens() {
        let t = tol();
        let d = 3;
        let psi = StateVector::normalized(DVector::from_column_slice(&[
            C64::new(0.6, 0.1),
            C64::new(0.5, -0.3),
            C64::new(0.2, 0.4),
        ]))
        .unwrap();
        let mut last = f64::INFINITY;
        // reference |0⟩ + w|1⟩ sharpens as w decreases; ε(clock) follows
        for w in [0.8, 0.5, 0.2, 0.05, 0.0] {
            let xi = StateVector::normalized(DVector::from_column_slice(&[
                C64::new(1.0, 0.0),
                C64::new(w, 0.0),
                C64::new(0.0, 0.0),
            ]))
            .unwrap();
            let model = epr_difference_sum_model(d, &xi, &t).unwrap();
            let noise = model.ancilla.noise_operator(&model.clock, Axis::A).unwrap();
            let composite = psi.tensor(&xi);
            let eps = noise.operator().apply(composite.vector()).norm();
            assert!(eps <= last + 1e-12, "not monotone at w = {w}");
            // the mean noise vanishes for the sharp reference
            if w == 0.0 {
                assert!(eps < 1e-12);
            }
            last = eps;
        }
    }

    #[test]
    fn oscillator_ccr_is_exact_below_the_boundary() {
        let osc = TruncatedOscillator::new(8, 1.0).unwrap();
        let comm = osc.position().commutator(osc.momentum()).unwrap();
        // rows below the boundary equal the iħI rows exactly
        for i in 0..7 {
            for j in 0..8 {
                let want = if i == j {
                    C64::new(0.0, 1.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((comm.entry(i, j) - want).norm() < 1e-14);
            }
        }
        // boundary entry carries the full truncation deficit
        assert_abs_diff_eq!(comm.entry(7, 7).im, 1.0 - 8.0, epsilon = 1e-12);
    }

    #[test]
    fn oscillator_ground_state_is_minimum_uncertainty() {
        let t = tol();
        let osc = TruncatedOscillator::new(12, 1.0).unwrap();
        let ground = StateVector::basis_state(12, 0);
        let dq = osc.position().std_dev(&ground, &t).unwrap();
        let dp = osc.momentum().std_dev(&ground, &t).unwrap();
        assert_abs_diff_eq!(dq * dp, 0.5, epsilon = 1e-12);
        // squeezing trades momentum spread for position spread
        let sq = osc.squeezed_like(0.6);
        let dq_s = osc.position().std_dev(&sq, &t).unwrap();
        let dp_s = osc.momentum().std_dev(&sq, &t).unwrap();
        assert!(dp_s < dp);
        assert!(dq_s > dq);
    }

    #[test]
    fn truncated_demo_ground_states() {
        let t = tol();
        let n = 16;
        let ground = StateVector::basis_state(n, 0);
        let report = truncated_ccr_demo(n, &[(ground.clone(), ground.clone())], 1.0, &t).unwrap();
        let rec = &report.records[0];
        // exactly supported low states have zero truncation estimate
        assert!(rec.truncation_estimate < 1e-14);
        assert!(rec.generalized_slack >= -1e-12);
        assert!(rec.closing_slack >= -1e-12);
        assert!(rec.holds_within_estimate);
        // ε(Q)² = ⟨Q′²⟩ = ħ/2 for the ground-state reference
        assert_abs_diff_eq!(rec.position_noise_sq, 0.5, epsilon = 1e-12);
        // ΔP = ΔP′ = √(ħ/2): closing bound = 1/(4·1/2 + 4·1/2) = 1/4
        assert_abs_diff_eq!(rec.closing_bound, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn truncated_demo_closing_bound_tightens_with_squeezing() {
        let t = tol();
        let n = 16;
        let osc = TruncatedOscillator::new(n, 1.0).unwrap();
        let ground = StateVector::basis_state(n, 0);
        let mut last_gap = f64::INFINITY;
        for r in [0.0, 0.5, 1.0] {
            let psi1 = osc.squeezed_like(r);
            let report = truncated_ccr_demo(n, &[(psi1, ground.clone())], 1.0, &t).unwrap();
            let rec = &report.records[0];
            let gap = rec.position_noise_sq - rec.closing_bound;
            assert!(rec.holds_within_estimate);
            assert!(
                gap < last_gap + 1e-12,
                "gap {gap} did not shrink at r = {r}"
            );
            last_gap = gap;
        }
        // strongest squeezing approaches the bound within the estimate
        assert!(last_gap < 0.1);
    }

    #[test]
    fn truncated_demo_estimate_shrinks_with_cutoff() {
        let t = tol();
        let mut last = f64::INFINITY;
        for n in [8, 12, 16, 24] {
            let osc = TruncatedOscillator::new(n, 1.0).unwrap();
            let coherent = osc.coherent_like(1.0);
            let ground = StateVector::basis_state(n, 0);
            let report = truncated_ccr_demo(n, &[(coherent, ground)], 1.0, &t).unwrap();
            let est = report.records[0].truncation_estimate;
            assert!(est < last, "estimate {est} did not shrink at N = {n}");
            assert!(report.records[0].holds_within_estimate);
            last = est;
        }
    }

    #[test]
    fn truncated_demo_rejects_high_states() {
        let t = tol();
        let n = 8;
        let high = StateVector::basis_state(n, n - 1);
        let ground = StateVector::basis_state(n, 0);
        assert!(matches!(
            truncated_ccr_demo(n, &[(high, ground)], 1.0, &t),
            Err(Error::StateSupport { .. })
        ));
    }

    #[test]
    fn independent_noise_model_commuting_pair() {
        let t = tol();
        let mut rng = {
            use rand::SeedableRng;
            rand::rngs::StdRng::seed_from_u64(73)
        };
        let a = Operator::diagonal(&[0.0, 1.0]);
        let b = Operator::diagonal(&[3.0, 5.0]);
        let g1 = crate::sample::random_hermitian(2, &mut rng);
        let g2 = crate::sample::random_hermitian(2, &mut rng);
        let xi = crate::sample::random_state(4, &mut rng);
        let anc = independent_noise_model(&a, &b, &g1, &g2, &xi, &t).unwrap();
        let povm = povm_from_ancilla(&anc, &t).unwrap();
        // mean noise ∝ I on both axes, for an arbitrary (even entangled) probe
        let (ind_a, _) = metrics::is_stat_independent(&povm, &a, Axis::A, &t).unwrap();
        let (ind_b, _) = metrics::is_stat_independent(&povm, &b, Axis::B, &t).unwrap();
        assert!(ind_a && ind_b);

        // the recipe cannot serve a noncommuting pair
        assert!(matches!(
            independent_noise_model(&sigma_x(), &sigma_y(), &g1, &g2, &xi, &t),
            Err(Error::CommutationDefect { .. })
        ));
    }

    #[test]
    fn unbiased_pauli_pair_is_valid_and_unbiased() {
        let t = tol();
        let (povm, sx, sy) = unbiased_pauli_pair_model(&t).unwrap();
        assert!(povm.validate(&t).passes);
        let (ua, _) = metrics::is_unbiased(&povm, &sx, Axis::A, &t).unwrap();
        let (ub, _) = metrics::is_unbiased(&povm, &sy, Axis::B, &t).unwrap();
        assert!(ua && ub);
        let psi = StateVector::basis_state(2, 0);
        let eps_a = metrics::rms_noise(&povm, &sx, &psi, Axis::A, &t, None).unwrap();
        let eps_b = metrics::rms_noise(&povm, &sy, &psi, Axis::B, &t, None).unwrap();
        assert_abs_diff_eq!(eps_a, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eps_b, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unbiased_pauli_pair_saturates_independent_heisenberg() {
        let t = tol();
        let (povm, sx, sy) = unbiased_pauli_pair_model(&t).unwrap();
        let psi = StateVector::basis_state(2, 0);
        let out = relations::eval_independent_heisenberg(&povm, &sx, &sy, &psi, &t, None).unwrap();
        let rec = out.record().expect("independent on both axes");
        assert!(rec.holds);
        assert_abs_diff_eq!(rec.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.rhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.terms["noise_spread_product"], 1.0, epsilon = 1e-12);
    }
}
