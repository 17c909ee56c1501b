//! Scenario files: the observable pair, the input state, and optionally a
//! measurement model, bundled for reproducible runs.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "A": [[[0,0],[1,0]],[[1,0],[0,0]]],
//!   "B": [[[0,0],[0,-1]],[[0,1],[0,0]]],
//!   "psi": [[1,0],[0,0]],
//!   "hbar": 1.0,
//!   "model": { "povm": { ... } }
//! }
//! ```
//!
//! Parsing is structural (shape and finiteness); semantic validity is a
//! separate [`Scenario::validate`] report so that defective files can be
//! inspected rather than rejected at the parser.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Operator, StateVector};
use crate::povm::JointPovm;
use crate::process::{Ancilla, MeasuringProcess};
use crate::relations::Model;
use crate::tol::Tolerances;

/// A measurement model in any of the three JSON presentations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPayload {
    Povm(JointPovm),
    Process(MeasuringProcess),
    Ancilla(Ancilla),
}

impl ModelPayload {
    pub fn to_model(&self) -> Model {
        match self {
            ModelPayload::Povm(p) => Model::Povm(p.clone()),
            ModelPayload::Process(mp) => Model::Process(mp.clone()),
            ModelPayload::Ancilla(a) => Model::Ancilla(a.clone()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelPayload::Povm(_) => "povm",
            ModelPayload::Process(_) => "process",
            ModelPayload::Ancilla(_) => "ancilla",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: Operator,
    #[serde(rename = "B")]
    pub b: Operator,
    pub psi: StateVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelPayload>,
}

/// Defects found when validating a scenario and its attached model.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ScenarioValidity {
    pub defects: Vec<String>,
    pub passes: bool,
}

impl Scenario {
    pub fn new(a: Operator, b: Operator, psi: StateVector) -> Result<Self> {
        if a.dim() != b.dim() || a.dim() != psi.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: if b.dim() != a.dim() {
                    b.dim()
                } else {
                    psi.dim()
                },
                context: "scenario components",
            });
        }
        Ok(Self {
            dim: a.dim(),
            a,
            b,
            psi,
            hbar: None,
            model: None,
        })
    }

    pub fn with_model(mut self, model: ModelPayload) -> Self {
        self.model = Some(model);
        self
    }

    /// Full semantic validation: dimensions, Hermiticity, state
    /// normalization, and the attached model's own invariants.
    pub fn validate(&self, tol: &Tolerances) -> ScenarioValidity {
        let mut defects = Vec::new();
        if self.a.dim() != self.dim {
            defects.push(format!(
                "observable A has dimension {}, expected {}",
                self.a.dim(),
                self.dim
            ));
        }
        if self.b.dim() != self.dim {
            defects.push(format!(
                "observable B has dimension {}, expected {}",
                self.b.dim(),
                self.dim
            ));
        }
        if self.psi.dim() != self.dim {
            defects.push(format!(
                "state has dimension {}, expected {}",
                self.psi.dim(),
                self.dim
            ));
        }
        let herm_a = self.a.hermiticity_defect();
        if herm_a > tol.hermiticity {
            defects.push(format!("observable A not Hermitian (defect {herm_a:.3e})"));
        }
        let herm_b = self.b.hermiticity_defect();
        if herm_b > tol.hermiticity {
            defects.push(format!("observable B not Hermitian (defect {herm_b:.3e})"));
        }
        let norm = self.psi.norm();
        if (norm - 1.0).abs() > tol.state_norm {
            defects.push(format!("state norm {norm} differs from 1"));
        }
        if let Some(hbar) = self.hbar {
            if !(hbar.is_finite() && hbar > 0.0) {
                defects.push(format!("hbar {hbar} must be finite and positive"));
            }
        }
        match &self.model {
            None => {}
            Some(ModelPayload::Povm(p)) => {
                if p.dim() != self.dim {
                    defects.push(format!(
                        "POVM dimension {} differs from scenario dimension {}",
                        p.dim(),
                        self.dim
                    ));
                }
                let report = p.validate(tol);
                if !report.passes {
                    defects.push(format!(
                        "POVM invalid: min eigenvalue {:.3e}, completeness defect {:.3e}",
                        report.min_eigenvalue, report.completeness_defect
                    ));
                }
            }
            Some(ModelPayload::Process(mp)) => {
                if mp.dim_h() != self.dim {
                    defects.push(format!(
                        "process object dimension {} differs from scenario dimension {}",
                        mp.dim_h(),
                        self.dim
                    ));
                }
                let report = mp.validate(tol);
                if !report.passes {
                    defects.push(format!(
                        "process invalid: unitarity defect {:.3e}, pointer commutation defect {:.3e}",
                        report.unitarity_defect, report.pointer_commutation_defect
                    ));
                }
            }
            Some(ModelPayload::Ancilla(a)) => {
                if a.dim_h() != self.dim {
                    defects.push(format!(
                        "ancilla object dimension {} differs from scenario dimension {}",
                        a.dim_h(),
                        self.dim
                    ));
                }
                let report = a.validate(tol);
                if !report.passes {
                    defects.push(format!(
                        "ancilla invalid: commutation defect {:.3e}, hermiticity defect {:.3e}",
                        report.commutation_defect, report.hermiticity_defect
                    ));
                }
            }
        }
        ScenarioValidity {
            passes: defects.is_empty(),
            defects,
        }
    }

    /// The model as required input, for commands that need one.
    pub fn require_model(&self) -> Result<Model> {
        self.model
            .as_ref()
            .map(|m| m.to_model())
            .ok_or(Error::MissingModel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::operators::fixtures::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn scenario_json_round_trip_with_povm_model() {
        let t = tol();
        let povm = gallery::guess_model(&sigma_x(), 0.0, &t).unwrap();
        let scenario = Scenario::new(sigma_x(), sigma_y(), StateVector::basis_state(2, 0))
            .unwrap()
            .with_model(ModelPayload::Povm(povm));
        assert!(scenario.validate(&t).passes);
        let json = serde_json::to_string_pretty(&scenario).unwrap();
        let back: Scenario = serde_json::from_str(&json).unwrap();
        assert!(back.validate(&t).passes);
        assert_eq!(back.model.as_ref().unwrap().kind(), "povm");
    }

    #[test]
    fn validation_reports_defects_without_failing() {
        let t = tol();
        let povm = gallery::guess_model(&sigma_z(), 0.0, &t).unwrap();
        let halved: Vec<Operator> = povm.elements().iter().map(|e| e.scale(0.5)).collect();
        let broken = JointPovm::from_parts(2, povm.grid().clone(), halved).unwrap();
        let scenario = Scenario::new(sigma_z(), sigma_x(), StateVector::basis_state(2, 0))
            .unwrap()
            .with_model(ModelPayload::Povm(broken));
        let report = scenario.validate(&t);
        assert!(!report.passes);
        assert!(report.defects[0].contains("completeness"));
    }

    #[test]
    fn missing_model_is_an_error_where_required() {
        let scenario = Scenario::new(sigma_x(), sigma_y(), StateVector::basis_state(2, 0)).unwrap();
        assert!(matches!(scenario.require_model(), Err(Error::MissingModel)));
    }
}
