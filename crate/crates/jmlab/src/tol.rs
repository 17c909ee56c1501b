use serde::{Deserialize, Serialize};

/// Numerical tolerances used throughout the crate.
///
/// Every threshold is a configuration value rather than a hard-coded literal;
/// the defaults are the contract the test suite pins. `with_base` rescales
/// the whole family proportionally for experiments on noisier data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Max-entry distance between a matrix and its conjugate transpose.
    pub hermiticity: f64,
    /// Deviation of a state-vector norm from 1.
    pub state_norm: f64,
    /// Deviation of a density-matrix trace from 1.
    pub trace_one: f64,
    /// Eigenvalue floor for positive-semidefinite checks: eigenvalues must
    /// stay above `-psd_floor`; anything in `[-psd_floor, 0)` is round-off.
    pub psd_floor: f64,
    /// Defect of a POVM completeness sum or projector-family sum from identity.
    pub completeness: f64,
    /// Defect of `U†U` from identity.
    pub unitarity: f64,
    /// Norm of a commutator that is required to vanish.
    pub commutation: f64,
    /// Commutation defect above which a derived ancilla is rejected outright.
    pub commutation_reject: f64,
    /// Eigenvalue clustering width, relative to the spectral range.
    pub cluster_rel: f64,
    /// Absolute floor for the clustering width, relative to the largest
    /// eigenvalue magnitude (guards the zero-range degenerate case).
    pub cluster_floor_rel: f64,
    /// Residual allowed when reconstructing an operator from its spectral data.
    pub reconstruction: f64,
    /// Marginal-vs-spectral defect below which a measurement counts as precise.
    pub precision: f64,
    /// Residual allowed when testing `n = r·I` (statistical independence) or
    /// `O(Π) = A` (unbiasedness).
    pub identity_residual: f64,
    /// Disagreement between algebraically equal computation routes that
    /// triggers a hard error.
    pub route_agreement: f64,
    /// Negative-variance window treated as round-off and clamped to zero.
    pub variance_floor: f64,
    /// A relation "holds" when `lhs - rhs >= -relation_slack` (absolute;
    /// right-hand sides are frequently exactly zero).
    pub relation_slack: f64,
    /// Elementwise defect allowed for a dilation round-trip.
    pub round_trip: f64,
    /// Imaginary part above which an expectation value is not considered real.
    pub imag_part: f64,
    /// Outcome probability below which conditioning is refused.
    pub zero_probability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            state_norm: 1e-10,
            trace_one: 1e-10,
            psd_floor: 1e-10,
            completeness: 1e-9,
            unitarity: 1e-9,
            commutation: 1e-9,
            commutation_reject: 1e-8,
            cluster_rel: 1e-8,
            cluster_floor_rel: 1e-12,
            reconstruction: 1e-9,
            precision: 1e-9,
            identity_residual: 1e-9,
            route_agreement: 1e-8,
            variance_floor: 1e-12,
            relation_slack: 1e-9,
            round_trip: 1e-8,
            imag_part: 1e-10,
            zero_probability: 1e-12,
        }
    }
}

impl Tolerances {
    /// Rescale the default family so that the validation base (default 1e-9)
    /// becomes `base`. Relative cluster widths are left untouched.
    pub fn with_base(base: f64) -> Self {
        let d = Self::default();
        let s = base / 1e-9;
        Self {
            hermiticity: d.hermiticity * s,
            state_norm: d.state_norm * s,
            trace_one: d.trace_one * s,
            psd_floor: d.psd_floor * s,
            completeness: d.completeness * s,
            unitarity: d.unitarity * s,
            commutation: d.commutation * s,
            commutation_reject: d.commutation_reject * s,
            cluster_rel: d.cluster_rel,
            cluster_floor_rel: d.cluster_floor_rel,
            reconstruction: d.reconstruction * s,
            precision: d.precision * s,
            identity_residual: d.identity_residual * s,
            route_agreement: d.route_agreement * s,
            variance_floor: d.variance_floor * s,
            relation_slack: d.relation_slack * s,
            round_trip: d.round_trip * s,
            imag_part: d.imag_part * s,
            zero_probability: d.zero_probability * s,
        }
    }
}
