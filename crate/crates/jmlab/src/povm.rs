//! Joint POVMs over a finite outcome grid, their marginals and moment
//! operators, and the precision / product-projective criteria.
//!
//! A joint measurement with output pair `(x, y)` is described by a family of
//! positive operators `Π(x, y)` summing to the identity. Instances may hold
//! semantically invalid data on purpose (so that defects can be *reported*);
//! [`JointPovm::new`] validates, [`JointPovm::validate`] never fails and
//! returns the defects it found.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operators::{Operator, StateVector};
use crate::tol::Tolerances;

/// Which output variable of the joint measurement is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// The `x` output, measuring the first observable.
    A,
    /// The `y` output, measuring the second observable.
    B,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::A => "A",
            Axis::B => "B",
        }
    }
}

/// Finite grid of outcome pairs; values per axis are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    x_values: Vec<f64>,
    y_values: Vec<f64>,
}

impl OutcomeGrid {
    pub fn new(x_values: Vec<f64>, y_values: Vec<f64>) -> Result<Self> {
        if x_values.is_empty() || y_values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let increasing =
            |v: &[f64]| v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&x_values) {
            return Err(Error::GridNotIncreasing { axis: "x" });
        }
        if !increasing(&y_values) {
            return Err(Error::GridNotIncreasing { axis: "y" });
        }
        Ok(Self { x_values, y_values })
    }

    pub fn nx(&self) -> usize {
        self.x_values.len()
    }

    pub fn ny(&self) -> usize {
        self.y_values.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor rejects empty axes
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn y_values(&self) -> &[f64] {
        &self.y_values
    }

    pub fn values(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::A => &self.x_values,
            Axis::B => &self.y_values,
        }
    }

    /// Row-major flat index: `x` is the slow axis.
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny() + iy
    }

    /// Locate a grid point by outcome values, matching within `tol`.
    pub fn index_of(&self, x: f64, y: f64, tol: f64) -> Option<(usize, usize)> {
        let find = |v: &[f64], target: f64| {
            v.iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (*a - target).abs().total_cmp(&(*b - target).abs()))
                .filter(|(_, a)| (*a - target).abs() <= tol)
                .map(|(i, _)| i)
        };
        Some((find(&self.x_values, x)?, find(&self.y_values, y)?))
    }

    /// Iterate `(ix, iy, x, y)` in row-major order.
    pub fn points(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.x_values.iter().enumerate().flat_map(move |(ix, &x)| {
            self.y_values
                .iter()
                .enumerate()
                .map(move |(iy, &y)| (ix, iy, x, y))
        })
    }
}

/// A joint POVM: one positive operator per grid point, summing to identity.
#[derive(Debug, Clone)]
pub struct JointPovm {
    dim: usize,
    grid: OutcomeGrid,
    /// Flat row-major storage, `elements[ix * ny + iy]`.
    elements: Vec<Operator>,
}

/// Validation report for a joint POVM. Never an error: invalid data is
/// described, not rejected.
#[derive(Debug, Clone, Serialize)]
pub struct PovmValidity {
    /// Smallest eigenvalue of each element, row-major.
    pub element_min_eigenvalues: Vec<f64>,
    /// Smallest eigenvalue over all elements.
    pub min_eigenvalue: f64,
    /// Largest Hermiticity defect over all elements.
    pub hermiticity_defect: f64,
    /// Operator-norm defect of `Σ Π − I`.
    pub completeness_defect: f64,
    pub passes: bool,
}

impl JointPovm {
    /// Validating constructor.
    pub fn new(
        dim: usize,
        grid: OutcomeGrid,
        elements: Vec<Operator>,
        tol: &Tolerances,
    ) -> Result<Self> {
        let povm = Self::from_parts(dim, grid, elements)?;
        let report = povm.validate(tol);
        if !report.passes {
            return Err(Error::InvalidPovm {
                reason: format!(
                    "min eigenvalue {:.3e}, hermiticity defect {:.3e}, completeness defect {:.3e}",
                    report.min_eigenvalue, report.hermiticity_defect, report.completeness_defect
                ),
            });
        }
        Ok(povm)
    }

    /// Structural construction without semantic validation; used to inspect
    /// defective data through [`JointPovm::validate`].
    pub fn from_parts(dim: usize, grid: OutcomeGrid, elements: Vec<Operator>) -> Result<Self> {
        if elements.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: elements.len(),
                context: "POVM element count",
            });
        }
        for e in &elements {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                    context: "POVM element dimension",
                });
            }
        }
        Ok(Self {
            dim,
            grid,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &OutcomeGrid {
        &self.grid
    }

    pub fn element(&self, ix: usize, iy: usize) -> &Operator {
        &self.elements[self.grid.flat_index(ix, iy)]
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    /// Per-element positivity and completeness report.
    pub fn validate(&self, tol: &Tolerances) -> PovmValidity {
        let mut element_min_eigenvalues = Vec::with_capacity(self.elements.len());
        let mut hermiticity_defect = 0.0_f64;
        let mut sum = Operator::zeros(self.dim);
        for e in &self.elements {
            hermiticity_defect = hermiticity_defect.max(e.hermiticity_defect());
            // symmetrize before the eigensolver so the report stays
            // meaningful even for slightly non-Hermitian data
            let sym = Operator::from_matrix((e.matrix() + e.matrix().adjoint()).scale(0.5))
                .expect("square");
            let min_eig = sym.min_eigenvalue(tol).unwrap_or(f64::NEG_INFINITY);
            element_min_eigenvalues.push(min_eig);
            sum = &sum + e;
        }
        let min_eigenvalue = element_min_eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let completeness_defect = (&sum - &Operator::identity(self.dim)).op_norm();
        let passes = hermiticity_defect <= tol.hermiticity
            && min_eigenvalue >= -tol.psd_floor
            && completeness_defect <= tol.completeness;
        PovmValidity {
            element_min_eigenvalues,
            min_eigenvalue,
            hermiticity_defect,
            completeness_defect,
            passes,
        }
    }

    /// Sum the elements along the other axis.
    pub fn marginal(&self, axis: Axis) -> MarginalPovm {
        match axis {
            Axis::A => {
                let elements = (0..self.grid.nx())
                    .map(|ix| {
                        (0..self.grid.ny()).fold(Operator::zeros(self.dim), |acc, iy| {
                            &acc + self.element(ix, iy)
                        })
                    })
                    .collect();
                MarginalPovm {
                    dim: self.dim,
                    values: self.grid.x_values.clone(),
                    elements,
                }
            }
            Axis::B => {
                let elements = (0..self.grid.ny())
                    .map(|iy| {
                        (0..self.grid.nx()).fold(Operator::zeros(self.dim), |acc, ix| {
                            &acc + self.element(ix, iy)
                        })
                    })
                    .collect();
                MarginalPovm {
                    dim: self.dim,
                    values: self.grid.y_values.clone(),
                    elements,
                }
            }
        }
    }

    /// Born-rule joint probability of the outcome pair `(x, y)`.
    pub fn joint_prob(&self, psi: &StateVector, x: f64, y: f64, tol: &Tolerances) -> Result<f64> {
        let (ix, iy) = self
            .grid
            .index_of(x, y, grid_match_tol(&self.grid, tol))
            .ok_or(Error::OutcomeNotOnGrid { x, y })?;
        self.element(ix, iy).expectation_real(psi, tol)
    }

    /// Full joint distribution in row-major grid order.
    pub fn distribution(&self, psi: &StateVector, tol: &Tolerances) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|e| e.expectation_real(psi, tol))
            .collect()
    }

    /// True when every element equals `E_A(x)·E_B(y)` within the precision
    /// tolerance; in that case the observables are cross-checked to commute.
    pub fn is_product_projective(
        &self,
        a: &Operator,
        b: &Operator,
        tol: &Tolerances,
    ) -> Result<bool> {
        let dec_a = a.spectral_auto(tol)?;
        let dec_b = b.spectral_auto(tol)?;
        let match_tol = grid_match_tol(&self.grid, tol);
        for (ix, iy, x, y) in self.grid.points() {
            let ea = dec_a.projector_for(x, match_tol);
            let eb = dec_b.projector_for(y, match_tol);
            let expected = match (ea, eb) {
                (Some(ea), Some(eb)) => ea * eb,
                // no spectral weight at this grid point: element must vanish
                _ => Operator::zeros(self.dim),
            };
            if self.element(ix, iy).max_distance(&expected)? > tol.precision {
                return Ok(false);
            }
        }
        // consistency cross-check: a product-projective joint measurement
        // exists only for commuting observables
        let comm_defect = a.commutator(b)?.op_norm();
        if comm_defect > 10.0 * tol.commutation {
            return Err(Error::CommutationDefect {
                defect: comm_defect,
            });
        }
        Ok(true)
    }

    /// Largest elementwise distance to another POVM over the shared grid.
    /// Errors when the grids disagree (sizes or outcome values).
    pub fn max_element_distance(&self, other: &JointPovm, value_tol: f64) -> Result<f64> {
        if self.grid.nx() != other.grid.nx() || self.grid.ny() != other.grid.ny() {
            return Err(Error::InvalidPovm {
                reason: format!(
                    "grid shapes differ: {}x{} vs {}x{}",
                    self.grid.nx(),
                    self.grid.ny(),
                    other.grid.nx(),
                    other.grid.ny()
                ),
            });
        }
        for (u, v) in self
            .grid
            .x_values
            .iter()
            .zip(other.grid.x_values.iter())
            .chain(self.grid.y_values.iter().zip(other.grid.y_values.iter()))
        {
            if (u - v).abs() > value_tol {
                return Err(Error::InvalidPovm {
                    reason: format!("grid values differ: {u} vs {v}"),
                });
            }
        }
        let mut worst = 0.0_f64;
        for (e, f) in self.elements.iter().zip(other.elements.iter()) {
            worst = worst.max(e.max_distance(f)?);
        }
        Ok(worst)
    }
}

/// Matching width used to look up outcome values on a grid. Tight on
/// purpose: off-grid outcomes are an error, only round-off (for example a
/// value recovered through an eigensolver) may differ.
pub(crate) fn grid_match_tol(grid: &OutcomeGrid, tol: &Tolerances) -> f64 {
    let scale = grid
        .x_values
        .iter()
        .chain(grid.y_values.iter())
        .fold(1.0_f64, |a, &b| a.max(b.abs()));
    tol.relation_slack * scale
}

/// One marginal of a joint POVM.
#[derive(Debug, Clone)]
pub struct MarginalPovm {
    dim: usize,
    values: Vec<f64>,
    elements: Vec<Operator>,
}

/// First or second moment operator of a marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    First,
    Second,
}

/// Outcome of the precise-measurement criterion: the marginal equals the
/// spectral family of the observable, or it misses by `defect`.
#[derive(Debug, Clone, Serialize)]
pub struct PrecisionCheck {
    pub precise: bool,
    /// `max_x ‖Π(x) − E(x)‖` over the union of grid values and spectrum.
    pub defect: f64,
    /// Set when the observable's spectrum does not lie on the value set,
    /// which makes the measurement imprecise regardless of the elements.
    pub spectrum_off_grid: bool,
}

impl MarginalPovm {
    pub fn from_parts(dim: usize, values: Vec<f64>, elements: Vec<Operator>) -> Result<Self> {
        if values.len() != elements.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                got: elements.len(),
                context: "marginal element count",
            });
        }
        Ok(Self {
            dim,
            values,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ x^k Π(x)` for `k` = 1 or 2.
    pub fn moment_operator(&self, order: MomentOrder) -> Operator {
        let mut acc = Operator::zeros(self.dim);
        for (v, e) in self.values.iter().zip(self.elements.iter()) {
            let w = match order {
                MomentOrder::First => *v,
                MomentOrder::Second => v * v,
            };
            acc = &acc + &e.scale(w);
        }
        acc
    }

    /// Output probability distribution in the given state.
    pub fn distribution(&self, psi: &StateVector, tol: &Tolerances) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|e| e.expectation_real(psi, tol))
            .collect()
    }

    /// Positivity/completeness report, same semantics as the joint version.
    pub fn validate(&self, tol: &Tolerances) -> PovmValidity {
        let mut element_min_eigenvalues = Vec::with_capacity(self.elements.len());
        let mut hermiticity_defect = 0.0_f64;
        let mut sum = Operator::zeros(self.dim);
        for e in &self.elements {
            hermiticity_defect = hermiticity_defect.max(e.hermiticity_defect());
            let sym = Operator::from_matrix((e.matrix() + e.matrix().adjoint()).scale(0.5))
                .expect("square");
            element_min_eigenvalues.push(sym.min_eigenvalue(tol).unwrap_or(f64::NEG_INFINITY));
            sum = &sum + e;
        }
        let min_eigenvalue = element_min_eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let completeness_defect = (&sum - &Operator::identity(self.dim)).op_norm();
        let passes = hermiticity_defect <= tol.hermiticity
            && min_eigenvalue >= -tol.psd_floor
            && completeness_defect <= tol.completeness;
        PovmValidity {
            element_min_eigenvalues,
            min_eigenvalue,
            hermiticity_defect,
            completeness_defect,
            passes,
        }
    }

    /// Does this marginal measure `a` precisely, i.e. does `Π(x) = E(x)`
    /// hold for every spectral value of `a`?
    pub fn is_precise_for(&self, a: &Operator, tol: &Tolerances) -> Result<PrecisionCheck> {
        let dec = a.spectral_auto(tol)?;
        let value_tol = self.value_match_tol(tol);
        let mut defect = 0.0_f64;
        let mut spectrum_off_grid = false;
        // every spectral value must appear on the value set
        for (ev, proj) in dec.iter() {
            if !self.values.iter().any(|v| (v - ev).abs() <= value_tol) {
                spectrum_off_grid = true;
                defect = defect.max(proj.op_norm());
            }
        }
        // and every marginal element must match the corresponding projector
        for (v, e) in self.values.iter().zip(self.elements.iter()) {
            let expected = dec
                .projector_for(*v, value_tol)
                .cloned()
                .unwrap_or_else(|| Operator::zeros(self.dim));
            defect = defect.max((e - &expected).op_norm());
        }
        Ok(PrecisionCheck {
            precise: !spectrum_off_grid && defect <= tol.precision,
            defect,
            spectrum_off_grid,
        })
    }

    fn value_match_tol(&self, tol: &Tolerances) -> f64 {
        let scale = self.values.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        tol.relation_slack * scale
    }
}

// ---------------------------------------------------------------------------
// JSON format: { "dim", "x_values", "y_values", "elements": [{x, y, matrix}] }
// Elements absent from the list default to the zero operator.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PovmElementJson {
    x: f64,
    y: f64,
    matrix: Operator,
}

#[derive(Serialize, Deserialize)]
struct PovmJson {
    dim: usize,
    x_values: Vec<f64>,
    y_values: Vec<f64>,
    elements: Vec<PovmElementJson>,
}

impl Serialize for JointPovm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let elements = self
            .grid
            .points()
            .filter_map(|(ix, iy, x, y)| {
                let e = self.element(ix, iy);
                (e.max_abs_entry() > 0.0).then(|| PovmElementJson {
                    x,
                    y,
                    matrix: e.clone(),
                })
            })
            .collect();
        PovmJson {
            dim: self.dim,
            x_values: self.grid.x_values.clone(),
            y_values: self.grid.y_values.clone(),
            elements,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointPovm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PovmJson::deserialize(d)?;
        let grid = OutcomeGrid::new(raw.x_values, raw.y_values).map_err(D::Error::custom)?;
        let mut elements = vec![Operator::zeros(raw.dim); grid.len()];
        let mut seen: BTreeMap<usize, ()> = BTreeMap::new();
        for el in raw.elements {
            let (ix, iy) = grid.index_of(el.x, el.y, 0.0).ok_or_else(|| {
                D::Error::custom(format!(
                    "element outcome ({}, {}) is not a grid point",
                    el.x, el.y
                ))
            })?;
            if el.matrix.dim() != raw.dim {
                return Err(D::Error::custom(format!(
                    "element matrix dimension {} differs from POVM dimension {}",
                    el.matrix.dim(),
                    raw.dim
                )));
            }
            let flat = grid.flat_index(ix, iy);
            if seen.insert(flat, ()).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate element at outcome ({}, {})",
                    el.x, el.y
                )));
            }
            elements[flat] = el.matrix;
        }
        JointPovm::from_parts(raw.dim, grid, elements).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fixtures::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    /// Projective measurement of `a` on the x axis with a constant guess
    /// outcome `y0` on the y axis.
    pub(crate) fn projective_guess(a: &Operator, y0: f64, tol: &Tolerances) -> JointPovm {
        let dec = a.spectral_auto(tol).unwrap();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![y0]).unwrap();
        let elements = dec.projectors().to_vec();
        JointPovm::new(a.dim(), grid, elements, tol).unwrap()
    }

    #[test]
    fn projective_guess_povm_is_valid() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let report = p.validate(&t);
        assert!(report.passes);
        assert!(report.completeness_defect < 1e-12);
    }

    #[test]
    fn broken_normalization_is_detected() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let halved: Vec<Operator> = p.elements().iter().map(|e| e.scale(0.5)).collect();
        let broken = JointPovm::from_parts(2, p.grid().clone(), halved).unwrap();
        let report = broken.validate(&t);
        assert!(!report.passes);
        assert_abs_diff_eq!(report.completeness_defect, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn random_povm_is_valid_and_normalized() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..50 {
            let p = crate::sample::random_joint_povm(3, 2, 2, &mut rng, &t).unwrap();
            let report = p.validate(&t);
            assert!(report.passes, "defect {}", report.completeness_defect);
        }
    }

    #[test]
    fn marginals_of_guess_model() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.5, &t);
        let ma = p.marginal(Axis::A);
        let dec = sigma_z().spectral_auto(&t).unwrap();
        for (i, e) in ma.elements().iter().enumerate() {
            assert!(e.max_distance(&dec.projectors()[i]).unwrap() < 1e-12);
        }
        let mb = p.marginal(Axis::B);
        assert_eq!(mb.len(), 1);
        assert!(
            mb.elements()[0]
                .max_distance(&Operator::identity(2))
                .unwrap()
                < 1e-12
        );
        assert!(mb.validate(&t).passes);
    }

    #[test]
    fn random_marginals_are_complete() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let p = crate::sample::random_joint_povm(4, 3, 2, &mut rng, &t).unwrap();
            assert!(p.marginal(Axis::A).validate(&t).passes);
            assert!(p.marginal(Axis::B).validate(&t).passes);
        }
    }

    #[test]
    fn joint_prob_born_rule() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let plus = plus_state();
        let prob = p.joint_prob(&plus, 1.0, 0.0, &t).unwrap();
        assert_abs_diff_eq!(prob, 0.5, epsilon = 1e-12);
        assert!(p.joint_prob(&plus, 0.7, 0.0, &t).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        use rand::Rng;
        let t = tol();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let dim = rng.random_range(2..=8);
            let p = crate::sample::random_joint_povm(dim, 2, 3, &mut rng, &t).unwrap();
            let psi = crate::sample::random_state(dim, &mut rng);
            let dist = p.distribution(&psi, &t).unwrap();
            assert!(dist.iter().all(|&q| q >= -1e-9));
            assert_abs_diff_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn moment_operators_of_projective_marginal() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let ma = p.marginal(Axis::A);
        assert!(
            ma.moment_operator(MomentOrder::First)
                .max_distance(&sigma_z())
                .unwrap()
                < 1e-10
        );
        assert!(
            ma.moment_operator(MomentOrder::Second)
                .max_distance(&Operator::identity(2))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn moment_operator_matches_weighted_sum_oracle() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(8);
        let p = crate::sample::random_joint_povm(3, 3, 2, &mut rng, &t).unwrap();
        let ma = p.marginal(Axis::A);
        let m1 = ma.moment_operator(MomentOrder::First);
        let mut oracle = Operator::zeros(3);
        for (v, e) in ma.values().iter().zip(ma.elements()) {
            oracle = &oracle + &e.scale(*v);
        }
        assert!(m1.max_distance(&oracle).unwrap() < 1e-13);
    }

    #[test]
    fn precision_criterion() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let ma = p.marginal(Axis::A);
        let check = ma.is_precise_for(&sigma_z(), &t).unwrap();
        assert!(check.precise);
        assert!(check.defect < 1e-12);

        let wrong_basis = ma.is_precise_for(&sigma_x(), &t).unwrap();
        assert!(!wrong_basis.precise);

        // smeared marginal: (1-eta) E(x) + eta I/2
        let eta = 0.1;
        let dec = sigma_z().spectral_auto(&t).unwrap();
        let smeared: Vec<Operator> = dec
            .projectors()
            .iter()
            .map(|e| &e.scale(1.0 - eta) + &Operator::identity(2).scale(eta / 2.0))
            .collect();
        let smeared = MarginalPovm::from_parts(2, dec.eigenvalues().to_vec(), smeared).unwrap();
        let check = smeared.is_precise_for(&sigma_z(), &t).unwrap();
        assert!(!check.precise);
        assert_abs_diff_eq!(check.defect, 0.05, epsilon = 1e-10);
    }

    #[test]
    fn product_projective_criterion() {
        let t = tol();
        // commuting diagonal pair on C^3
        let a = Operator::diagonal(&[0.0, 1.0, 2.0]);
        let b = Operator::diagonal(&[5.0, 5.0, 7.0]);
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
        let p = JointPovm::new(3, grid, elements, &t).unwrap();
        assert!(p.is_product_projective(&a, &b, &t).unwrap());

        // the guess model is not product-projective for a noncommuting pair
        let guess = projective_guess(&sigma_z(), 0.0, &t);
        assert!(!guess
            .is_product_projective(&sigma_z(), &sigma_y(), &t)
            .unwrap());
    }

    #[test]
    fn povm_json_round_trip_with_sparse_elements() {
        let t = tol();
        let p = projective_guess(&sigma_z(), 0.0, &t);
        let json = serde_json::to_string(&p).unwrap();
        let back: JointPovm = serde_json::from_str(&json).unwrap();
        assert_eq!(back.grid(), p.grid());
        assert!(p.max_element_distance(&back, 0.0).unwrap() == 0.0);

        // elements omitted from the list deserialize as zero
        let sparse = r#"{
            "dim": 2,
            "x_values": [-1.0, 1.0],
            "y_values": [0.0],
            "elements": [
                {"x": 1.0, "y": 0.0, "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0],[0.0,0.0]]]}
            ]
        }"#;
        let sparse: JointPovm = serde_json::from_str(sparse).unwrap();
        assert!(sparse.element(0, 0).max_abs_entry() == 0.0);
        assert!(!sparse.validate(&t).passes); // incomplete on purpose
    }
}
