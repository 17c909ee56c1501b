//! Measuring processes and ancillas.
//!
//! A measuring process realizes a joint POVM physically: couple the object
//! to a probe prepared in `ξ`, evolve with a unitary `U`, then read two
//! commuting pointer observables `M1`, `M2`. Conjugating the pointers back
//! through `U` gives the ancilla picture: a commuting pair `(C, D)` on the
//! composite space whose joint spectral measure, averaged over `ξ`,
//! reproduces the POVM. The difference between `C` and the target `A⊗I` is
//! the noise operator of the `x` output.
//!
//! Both directions are implemented: inducing the POVM from a process or an
//! ancilla, and dilating an arbitrary joint POVM back into a process.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{orthonormalize, DensityMatrix, Operator, StateVector};
use crate::povm::{Axis, JointPovm, OutcomeGrid};
use crate::sample::random_complex;
use crate::tol::Tolerances;

/// The 5-tuple `(K, ξ, U, M1, M2)`: probe space dimension, probe state,
/// coupling unitary on `H⊗K`, and two commuting pointer observables on `K`.
#[derive(Debug, Clone)]
pub struct MeasuringProcess {
    dim_h: usize,
    dim_k: usize,
    xi: StateVector,
    u: Operator,
    m1: Operator,
    m2: Operator,
}

/// Validity report for a measuring process.
#[derive(Debug, Clone, Serialize)]
pub struct ProcessValidity {
    pub unitarity_defect: f64,
    pub pointer_commutation_defect: f64,
    pub pointer_hermiticity_defect: f64,
    pub state_norm_defect: f64,
    pub passes: bool,
}

impl MeasuringProcess {
    pub fn new(
        dim_h: usize,
        xi: StateVector,
        u: Operator,
        m1: Operator,
        m2: Operator,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mp = Self::from_parts(dim_h, xi, u, m1, m2)?;
        let report = mp.validate(tol);
        if report.unitarity_defect > tol.unitarity {
            return Err(Error::NotUnitary {
                defect: report.unitarity_defect,
            });
        }
        if report.pointer_commutation_defect > tol.commutation {
            return Err(Error::CommutationDefect {
                defect: report.pointer_commutation_defect,
            });
        }
        if report.pointer_hermiticity_defect > tol.hermiticity {
            return Err(Error::NotHermitian {
                defect: report.pointer_hermiticity_defect,
            });
        }
        if report.state_norm_defect > tol.state_norm {
            return Err(Error::InvalidStateNorm {
                norm: 1.0 + report.state_norm_defect,
            });
        }
        Ok(mp)
    }

    /// Structural construction (dimension checks only).
    pub fn from_parts(
        dim_h: usize,
        xi: StateVector,
        u: Operator,
        m1: Operator,
        m2: Operator,
    ) -> Result<Self> {
        let dim_k = xi.dim();
        if m1.dim() != dim_k || m2.dim() != dim_k {
            return Err(Error::DimensionMismatch {
                expected: dim_k,
                got: if m1.dim() != dim_k {
                    m1.dim()
                } else {
                    m2.dim()
                },
                context: "pointer observable dimension",
            });
        }
        if u.dim() != dim_h * dim_k {
            return Err(Error::DimensionMismatch {
                expected: dim_h * dim_k,
                got: u.dim(),
                context: "process unitary dimension",
            });
        }
        Ok(Self {
            dim_h,
            dim_k,
            xi,
            u,
            m1,
            m2,
        })
    }

    pub fn validate(&self, tol: &Tolerances) -> ProcessValidity {
        let unitarity_defect =
            (&(&self.u.adjoint() * &self.u) - &Operator::identity(self.u.dim())).op_norm();
        let pointer_commutation_defect = self
            .m1
            .commutator(&self.m2)
            .map(|c| c.op_norm())
            .unwrap_or(f64::INFINITY);
        let pointer_hermiticity_defect = self
            .m1
            .hermiticity_defect()
            .max(self.m2.hermiticity_defect());
        let state_norm_defect = (self.xi.norm() - 1.0).abs();
        let passes = unitarity_defect <= tol.unitarity
            && pointer_commutation_defect <= tol.commutation
            && pointer_hermiticity_defect <= tol.hermiticity
            && state_norm_defect <= tol.state_norm;
        ProcessValidity {
            unitarity_defect,
            pointer_commutation_defect,
            pointer_hermiticity_defect,
            state_norm_defect,
            passes,
        }
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn xi(&self) -> &StateVector {
        &self.xi
    }

    pub fn unitary(&self) -> &Operator {
        &self.u
    }

    pub fn pointer_1(&self) -> &Operator {
        &self.m1
    }

    pub fn pointer_2(&self) -> &Operator {
        &self.m2
    }
}

/// The quadruple `(K, ξ, C, D)` with commuting `C`, `D` on `H⊗K`.
#[derive(Debug, Clone)]
pub struct Ancilla {
    dim_h: usize,
    dim_k: usize,
    xi: StateVector,
    c: Operator,
    d: Operator,
}

/// Validity report for an ancilla quadruple.
#[derive(Debug, Clone, Serialize)]
pub struct AncillaValidity {
    pub commutation_defect: f64,
    pub hermiticity_defect: f64,
    pub state_norm_defect: f64,
    pub passes: bool,
}

impl Ancilla {
    pub fn new(
        dim_h: usize,
        xi: StateVector,
        c: Operator,
        d: Operator,
        tol: &Tolerances,
    ) -> Result<Self> {
        let a = Self::from_parts(dim_h, xi, c, d)?;
        let report = a.validate(tol);
        if report.hermiticity_defect > tol.hermiticity {
            return Err(Error::NotHermitian {
                defect: report.hermiticity_defect,
            });
        }
        if report.commutation_defect > tol.commutation {
            return Err(Error::CommutationDefect {
                defect: report.commutation_defect,
            });
        }
        if report.state_norm_defect > tol.state_norm {
            return Err(Error::InvalidStateNorm {
                norm: 1.0 + report.state_norm_defect,
            });
        }
        Ok(a)
    }

    pub fn from_parts(dim_h: usize, xi: StateVector, c: Operator, d: Operator) -> Result<Self> {
        let dim_k = xi.dim();
        if c.dim() != dim_h * dim_k || d.dim() != dim_h * dim_k {
            return Err(Error::DimensionMismatch {
                expected: dim_h * dim_k,
                got: if c.dim() != dim_h * dim_k {
                    c.dim()
                } else {
                    d.dim()
                },
                context: "ancilla observable dimension",
            });
        }
        Ok(Self {
            dim_h,
            dim_k,
            xi,
            c,
            d,
        })
    }

    pub fn validate(&self, tol: &Tolerances) -> AncillaValidity {
        let commutation_defect = self
            .c
            .commutator(&self.d)
            .map(|x| x.op_norm())
            .unwrap_or(f64::INFINITY);
        let hermiticity_defect = self.c.hermiticity_defect().max(self.d.hermiticity_defect());
        let state_norm_defect = (self.xi.norm() - 1.0).abs();
        let passes = commutation_defect <= tol.commutation
            && hermiticity_defect <= tol.hermiticity
            && state_norm_defect <= tol.state_norm;
        AncillaValidity {
            commutation_defect,
            hermiticity_defect,
            state_norm_defect,
            passes,
        }
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn xi(&self) -> &StateVector {
        &self.xi
    }

    pub fn measured_1(&self) -> &Operator {
        &self.c
    }

    pub fn measured_2(&self) -> &Operator {
        &self.d
    }

    pub fn measured(&self, axis: Axis) -> &Operator {
        match axis {
            Axis::A => &self.c,
            Axis::B => &self.d,
        }
    }

    /// Noise operator of the chosen output: the difference between the
    /// observable actually measured and the target lifted to `H⊗K`.
    pub fn noise_operator(&self, target_obs: &Operator, target: Axis) -> Result<NoiseOperator> {
        if target_obs.dim() != self.dim_h {
            return Err(Error::DimensionMismatch {
                expected: self.dim_h,
                got: target_obs.dim(),
                context: "noise target observable",
            });
        }
        let lifted = target_obs.tensor(&Operator::identity(self.dim_k));
        let op = match target {
            Axis::A => &self.c - &lifted,
            Axis::B => &self.d - &lifted,
        };
        Ok(NoiseOperator { target, op })
    }
}

/// `N = C − A⊗I` (or `D − B⊗I`), Hermitian on the composite space.
#[derive(Debug, Clone)]
pub struct NoiseOperator {
    target: Axis,
    op: Operator,
}

impl NoiseOperator {
    pub fn target(&self) -> Axis {
        self.target
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }
}

/// Conjugate the pointer observables through the coupling:
/// `C = U†(I⊗M1)U`, `D = U†(I⊗M2)U`.
pub fn ancilla_from_process(mp: &MeasuringProcess, tol: &Tolerances) -> Result<Ancilla> {
    let id_h = Operator::identity(mp.dim_h);
    let u_dag = mp.u.adjoint();
    let c = &(&u_dag * &id_h.tensor(&mp.m1)) * &mp.u;
    let d = &(&u_dag * &id_h.tensor(&mp.m2)) * &mp.u;
    // commutation is inherited from the pointers; re-verify and reject hard
    // if conjugation amplified the defect beyond the reject threshold
    let defect = c.commutator(&d)?.op_norm();
    if defect > tol.commutation_reject {
        return Err(Error::CommutationDefect { defect });
    }
    Ancilla::from_parts(mp.dim_h, mp.xi.clone(), c, d)
}

/// One joint eigenspace of a commuting Hermitian pair.
#[derive(Debug, Clone)]
pub struct JointEigenspace {
    pub x_value: f64,
    pub y_value: f64,
    pub projector: Operator,
}

/// Simultaneously diagonalize a commuting Hermitian pair `(X, Y)`.
///
/// Diagonalizes `X + γY` for a generic real `γ` chosen so the candidate
/// joint eigenvalues stay separated, then reads the `X` and `Y` eigenvalues
/// back in the common eigenbasis. Retries with a fresh `γ` when a residual
/// check reveals a collision.
pub fn joint_spectral(
    x: &Operator,
    y: &Operator,
    tol: &Tolerances,
) -> Result<Vec<JointEigenspace>> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
            context: "simultaneous diagonalization",
        });
    }
    let comm = x.commutator(y)?.op_norm();
    if comm > tol.commutation_reject {
        return Err(Error::SimultaneousDiagonalization { defect: comm });
    }

    let xs = x.spectral_auto(tol)?;
    let ys = y.spectral_auto(tol)?;
    let scale = |vals: &[f64]| vals.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    let sx = scale(xs.eigenvalues());
    let sy = scale(ys.eigenvalues());

    // deterministic sequence of candidate mixing weights
    let mut gamma_seq = (1..=24).map(|k| {
        let base: f64 = 0.618_034 + 0.137_187 * k as f64;
        base.fract() * sx / sy + 1e-3 * sx / sy
    });

    let mut last_residual = f64::INFINITY;
    for _ in 0..24 {
        let gamma = gamma_seq.next().expect("sequence is long enough");
        // candidate joint values must stay separated for this gamma
        let mut candidates: Vec<f64> = Vec::new();
        for &xv in xs.eigenvalues() {
            for &yv in ys.eigenvalues() {
                candidates.push(xv + gamma * yv);
            }
        }
        candidates.sort_by(f64::total_cmp);
        let min_gap = candidates
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let sep_scale = sx.max(gamma.abs() * sy);
        if min_gap < 1e-6 * sep_scale {
            continue;
        }

        let z = x + &y.scale(gamma);
        let cluster = if min_gap.is_finite() {
            0.25 * min_gap
        } else {
            // single joint eigenvalue candidate
            tol.cluster_floor_rel * sep_scale
        };
        let dec = z.spectral(cluster, tol)?;
        let mut spaces = Vec::with_capacity(dec.len());
        let mut residual = 0.0_f64;
        for proj in dec.projectors() {
            let rank = proj.trace().re;
            let x_value = (proj * x).trace().re / rank;
            let y_value = (proj * y).trace().re / rank;
            // residual: the block really is a joint eigenspace
            residual = residual.max((&(x * proj) - &proj.scale(x_value)).op_norm() / sx.max(1.0));
            residual = residual.max((&(y * proj) - &proj.scale(y_value)).op_norm() / sy.max(1.0));
            spaces.push(JointEigenspace {
                x_value,
                y_value,
                projector: proj.clone(),
            });
        }
        if residual <= tol.commutation_reject.max(10.0 * comm) {
            return Ok(spaces);
        }
        last_residual = last_residual.min(residual);
    }
    Err(Error::SimultaneousDiagonalization {
        defect: last_residual,
    })
}

/// Cluster raw values to a strictly increasing outcome axis, mapping each
/// input to its cluster representative's index.
fn cluster_values(raw: &[f64], width: f64) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let mut values = Vec::new();
    let mut assignment = vec![0usize; raw.len()];
    let mut members: Vec<usize> = Vec::new();
    let mut acc = 0.0;
    let mut last = f64::NEG_INFINITY;
    for &i in &order {
        if !members.is_empty() && raw[i] - last > width {
            values.push(acc / members.len() as f64);
            for &m in &members {
                assignment[m] = values.len() - 1;
            }
            members.clear();
            acc = 0.0;
        }
        members.push(i);
        acc += raw[i];
        last = raw[i];
    }
    if !members.is_empty() {
        values.push(acc / members.len() as f64);
        for &m in &members {
            assignment[m] = values.len() - 1;
        }
    }
    (values, assignment)
}

fn povm_from_joint_spaces(
    dim_h: usize,
    xi: &StateVector,
    spaces: &[JointEigenspace],
    extra_x: &[f64],
    extra_y: &[f64],
    tol: &Tolerances,
) -> Result<JointPovm> {
    // grid = (clustered x values ∪ extra) × (clustered y values ∪ extra);
    // grid points that carry no joint eigenspace keep the zero element
    let mut raw_x: Vec<f64> = spaces.iter().map(|s| s.x_value).collect();
    raw_x.extend_from_slice(extra_x);
    let mut raw_y: Vec<f64> = spaces.iter().map(|s| s.y_value).collect();
    raw_y.extend_from_slice(extra_y);
    let width = |vals: &[f64]| {
        let scale = vals.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        let range = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        (tol.cluster_rel * range).max(tol.cluster_floor_rel * scale)
    };
    let (x_values, x_assign) = cluster_values(&raw_x, width(&raw_x));
    let (y_values, y_assign) = cluster_values(&raw_y, width(&raw_y));
    let grid = OutcomeGrid::new(x_values, y_values)?;
    let mut elements = vec![Operator::zeros(dim_h); grid.len()];
    for (k, space) in spaces.iter().enumerate() {
        let ix = x_assign[k];
        let iy = y_assign[k];
        let mean = space.projector.partial_mean(xi)?;
        let flat = grid.flat_index(ix, iy);
        elements[flat] = &elements[flat] + &mean;
    }
    JointPovm::new(dim_h, grid, elements, tol)
}

/// Induce the joint POVM of a measuring process:
/// `Π(x, y) = ⟨ξ|U†[I⊗E_{M1}(x)E_{M2}(y)]U|ξ⟩` over the grid
/// `spectrum(M1) × spectrum(M2)`.
pub fn povm_from_process(mp: &MeasuringProcess, tol: &Tolerances) -> Result<JointPovm> {
    let spaces = joint_spectral(&mp.m1, &mp.m2, tol)?;
    let id_h = Operator::identity(mp.dim_h);
    let u_dag = mp.u.adjoint();
    let lifted: Vec<JointEigenspace> = spaces
        .iter()
        .map(|s| JointEigenspace {
            x_value: s.x_value,
            y_value: s.y_value,
            projector: &(&u_dag * &id_h.tensor(&s.projector)) * &mp.u,
        })
        .collect();
    // pointer spectra that never occur jointly still label grid rows/columns
    let m1_spec = mp.m1.spectral_auto(tol)?;
    let m2_spec = mp.m2.spectral_auto(tol)?;
    povm_from_joint_spaces(
        mp.dim_h,
        &mp.xi,
        &lifted,
        m1_spec.eigenvalues(),
        m2_spec.eigenvalues(),
        tol,
    )
}

/// Induce the joint POVM of an ancilla quadruple:
/// `Π(x, y) = ⟨ξ|E_C(x)E_D(y)|ξ⟩`.
pub fn povm_from_ancilla(a: &Ancilla, tol: &Tolerances) -> Result<JointPovm> {
    let spaces = joint_spectral(&a.c, &a.d, tol)?;
    povm_from_joint_spaces(a.dim_h, &a.xi, &spaces, &[], &[], tol)
}

/// Conditional post-measurement state for the outcome pair `(x, y)`:
/// sandwich the evolved state with the pointer projector, trace out the
/// probe, and normalize:
/// `ρ' = Tr_K{[I⊗E] U(ρ⊗|ξ⟩⟨ξ|)U† [I⊗E]} / p`.
///
/// The sandwich form is positive by construction. The one-sided product
/// `Tr_K{U(ρ⊗|ξ⟩⟨ξ|)U†[I⊗E]}` has the same trace (so the same outcome
/// probability) but is not Hermitian as an operator in general; see the
/// guide chapter on measuring processes for the comparison.
pub fn conditional_output_state(
    mp: &MeasuringProcess,
    rho: &DensityMatrix,
    x: f64,
    y: f64,
    tol: &Tolerances,
) -> Result<DensityMatrix> {
    if rho.dim() != mp.dim_h {
        return Err(Error::DimensionMismatch {
            expected: mp.dim_h,
            got: rho.dim(),
            context: "conditional state input",
        });
    }
    let spaces = joint_spectral(&mp.m1, &mp.m2, tol)?;
    let m1_spec = mp.m1.spectral_auto(tol)?;
    let m2_spec = mp.m2.spectral_auto(tol)?;
    let mut match_scale = 1.0_f64;
    for v in m1_spec.eigenvalues().iter().chain(m2_spec.eigenvalues()) {
        match_scale = match_scale.max(v.abs());
    }
    let match_tol = tol.relation_slack * match_scale;
    let on_grid = m1_spec
        .eigenvalues()
        .iter()
        .any(|v| (v - x).abs() <= match_tol)
        && m2_spec
            .eigenvalues()
            .iter()
            .any(|v| (v - y).abs() <= match_tol);
    if !on_grid {
        return Err(Error::OutcomeNotOnGrid { x, y });
    }
    let mut pointer = Operator::zeros(mp.dim_k);
    for s in &spaces {
        if (s.x_value - x).abs() <= match_tol && (s.y_value - y).abs() <= match_tol {
            pointer = &pointer + &s.projector;
        }
    }

    let id_h = Operator::identity(mp.dim_h);
    let xi_proj = Operator::outer(mp.xi.vector());
    let joint_in = rho.as_operator().tensor(&xi_proj);
    let evolved = &(&mp.u * &joint_in) * &mp.u.adjoint();
    let e = id_h.tensor(&pointer);
    let sandwiched = &(&e * &evolved) * &e;
    let p = sandwiched.trace().re;
    if p <= tol.zero_probability {
        return Err(Error::ZeroProbabilityOutcome { x, y, p });
    }
    let reduced = sandwiched.partial_trace_ancilla(mp.dim_k)?;
    DensityMatrix::new(reduced.matrix().scale(1.0 / p), tol)
}

/// Dilate a joint POVM into a measuring process.
///
/// The probe space has one dimension per grid point; the probe starts in
/// the first basis vector; the isometry `Vψ = Σ (Π(x,y)^{1/2}ψ)⊗|xy⟩` is
/// completed to a unitary by orthonormalizing seeded random columns against
/// it (any completion works — the induced POVM only probes the `H⊗ξ`
/// slice); the pointers are diagonal in the grid basis with eigenvalues `x`
/// and `y`.
pub fn naimark_dilate(
    p: &JointPovm,
    tol: &Tolerances,
    rng: &mut impl Rng,
) -> Result<MeasuringProcess> {
    let d = p.dim();
    let n = p.grid().len();
    let total = d * n;

    // sqrt blocks, row-major over the grid
    let mut roots = Vec::with_capacity(n);
    for e in p.elements() {
        roots.push(e.psd_sqrt(tol)?);
    }

    // columns of U: position i*n + 0 carries V(e_i), the rest are completed
    let mut columns: Vec<DVector<C64>> = Vec::with_capacity(total);
    for i in 0..d {
        let mut col = DVector::<C64>::zeros(total);
        for (g, root) in roots.iter().enumerate() {
            for j in 0..d {
                col[j * n + g] = root.entry(j, i);
            }
        }
        columns.push(col);
    }
    for _ in d..total {
        columns.push(DVector::from_fn(total, |_, _| random_complex(rng)));
    }

    let mut attempts = 0;
    loop {
        match orthonormalize(&mut columns, 1e-8, "dilation unitary completion") {
            Ok(()) => break,
            Err(e) => {
                attempts += 1;
                if attempts > 16 {
                    return Err(e);
                }
                // redraw the completion candidates, keep the isometry block
                for col in columns.iter_mut().skip(d) {
                    *col = DVector::from_fn(total, |_, _| random_complex(rng));
                }
            }
        }
    }

    let mut u = DMatrix::<C64>::zeros(total, total);
    // isometry block goes to the H⊗|0⟩ slots, completion fills the rest
    let mut completion = columns.iter().skip(d);
    for (i, col) in columns.iter().take(d).enumerate() {
        u.set_column(i * n, col);
    }
    for slot in 0..total {
        if slot % n != 0 {
            u.set_column(slot, completion.next().expect("column count matches"));
        }
    }

    let mut m1_diag = Vec::with_capacity(n);
    let mut m2_diag = Vec::with_capacity(n);
    for (_, _, x, y) in p.grid().points() {
        m1_diag.push(x);
        m2_diag.push(y);
    }

    MeasuringProcess::new(
        d,
        StateVector::basis_state(n, 0),
        Operator::from_matrix(u)?,
        Operator::diagonal(&m1_diag),
        Operator::diagonal(&m2_diag),
        tol,
    )
}

// ---------------------------------------------------------------------------
// JSON formats:
//   process: { "dimH", "dimK", "xi", "U", "M1", "M2" }
//   ancilla: { "dimH", "dimK", "xi", "C", "D" }
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ProcessJson {
    #[serde(rename = "dimH")]
    dim_h: usize,
    #[serde(rename = "dimK")]
    dim_k: usize,
    xi: StateVector,
    #[serde(rename = "U")]
    u: Operator,
    #[serde(rename = "M1")]
    m1: Operator,
    #[serde(rename = "M2")]
    m2: Operator,
}

impl Serialize for MeasuringProcess {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProcessJson {
            dim_h: self.dim_h,
            dim_k: self.dim_k,
            xi: self.xi.clone(),
            u: self.u.clone(),
            m1: self.m1.clone(),
            m2: self.m2.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MeasuringProcess {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ProcessJson::deserialize(d)?;
        if raw.xi.dim() != raw.dim_k {
            return Err(D::Error::custom(format!(
                "probe state has dimension {}, expected dimK = {}",
                raw.xi.dim(),
                raw.dim_k
            )));
        }
        MeasuringProcess::from_parts(raw.dim_h, raw.xi, raw.u, raw.m1, raw.m2)
            .map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct AncillaJson {
    #[serde(rename = "dimH")]
    dim_h: usize,
    #[serde(rename = "dimK")]
    dim_k: usize,
    xi: StateVector,
    #[serde(rename = "C")]
    c: Operator,
    #[serde(rename = "D")]
    d: Operator,
}

impl Serialize for Ancilla {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AncillaJson {
            dim_h: self.dim_h,
            dim_k: self.dim_k,
            xi: self.xi.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ancilla {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = AncillaJson::deserialize(d)?;
        if raw.xi.dim() != raw.dim_k {
            return Err(D::Error::custom(format!(
                "probe state has dimension {}, expected dimK = {}",
                raw.xi.dim(),
                raw.dim_k
            )));
        }
        Ancilla::from_parts(raw.dim_h, raw.xi, raw.c, raw.d).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::fixtures::*;
    use crate::sample;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn swap_gate() -> Operator {
        // SWAP on C2 ⊗ C2
        let mut m = DMatrix::<C64>::zeros(4, 4);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 2)] = C64::new(1.0, 0.0);
        m[(2, 1)] = C64::new(1.0, 0.0);
        m[(3, 3)] = C64::new(1.0, 0.0);
        Operator::from_matrix(m).unwrap()
    }

    #[test]
    fn trivial_process_gives_identity_povm() {
        let t = tol();
        let mp = MeasuringProcess::new(
            2,
            StateVector::basis_state(2, 0),
            Operator::identity(4),
            Operator::zeros(2),
            Operator::zeros(2),
            &t,
        )
        .unwrap();
        let p = povm_from_process(&mp, &t).unwrap();
        assert_eq!(p.grid().nx(), 1);
        assert_eq!(p.grid().ny(), 1);
        assert_abs_diff_eq!(p.grid().x_values()[0], 0.0, epsilon = 1e-12);
        assert!(
            p.element(0, 0)
                .max_distance(&Operator::identity(2))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn ancilla_from_identity_process_is_lifted_pointer() {
        let t = tol();
        let m1 = Operator::diagonal(&[0.0, 1.0]);
        let m2 = Operator::diagonal(&[0.0, 2.0]);
        let mp = MeasuringProcess::new(
            2,
            StateVector::basis_state(2, 0),
            Operator::identity(4),
            m1.clone(),
            m2.clone(),
            &t,
        )
        .unwrap();
        let a = ancilla_from_process(&mp, &t).unwrap();
        let expect_c = Operator::identity(2).tensor(&m1);
        let expect_d = Operator::identity(2).tensor(&m2);
        assert!(a.measured_1().max_distance(&expect_c).unwrap() < 1e-13);
        assert!(a.measured_2().max_distance(&expect_d).unwrap() < 1e-13);
    }

    #[test]
    fn swap_process_measures_object_sigma_z() {
        let t = tol();
        let mp = MeasuringProcess::new(
            2,
            StateVector::basis_state(2, 0),
            swap_gate(),
            sigma_z(),
            Operator::zeros(2),
            &t,
        )
        .unwrap();
        let p = povm_from_process(&mp, &t).unwrap();
        // swapping moves the object into the probe, so reading sigma_z on the
        // probe is a projective sigma_z measurement of the object
        assert_eq!(p.grid().x_values(), &[-1.0, 1.0]);
        let dec = sigma_z().spectral_auto(&t).unwrap();
        for (i, &x) in [-1.0_f64, 1.0].iter().enumerate() {
            let e = dec.projector_for(x, 1e-9).unwrap();
            assert!(p.element(i, 0).max_distance(e).unwrap() < 1e-12);
        }
    }

    #[test]
    fn process_and_ancilla_routes_agree() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..10 {
            let u = sample::random_unitary(6, &mut rng);
            let m1 = Operator::diagonal(&sample::random_outcome_values(3, &mut rng));
            let m2 = Operator::diagonal(&sample::random_outcome_values(3, &mut rng));
            let xi = sample::random_state(3, &mut rng);
            let mp = MeasuringProcess::new(2, xi, u, m1, m2, &t).unwrap();
            let via_process = povm_from_process(&mp, &t).unwrap();
            let a = ancilla_from_process(&mp, &t).unwrap();
            let via_ancilla = povm_from_ancilla(&a, &t).unwrap();
            let dist = via_process
                .max_element_distance(&via_ancilla, 1e-9)
                .unwrap();
            assert!(dist < 1e-9, "route disagreement {dist}");
        }
    }

    #[test]
    fn ancilla_povm_for_noise_free_channel() {
        let t = tol();
        // C = A⊗I, D = 0: a precise A measurement with a constant y output
        let a_obs = sigma_z();
        let c = a_obs.tensor(&Operator::identity(2));
        let d = Operator::zeros(4);
        let xi = plus_state();
        let a = Ancilla::new(2, xi, c, d, &t).unwrap();
        let p = povm_from_ancilla(&a, &t).unwrap();
        assert_eq!(p.grid().x_values(), &[-1.0, 1.0]);
        assert_eq!(p.grid().y_values(), &[0.0]);
        let dec = a_obs.spectral_auto(&t).unwrap();
        for (i, &x) in [-1.0_f64, 1.0].iter().enumerate() {
            let e = dec.projector_for(x, 1e-9).unwrap();
            assert!(p.element(i, 0).max_distance(e).unwrap() < 1e-11);
        }
    }

    #[test]
    fn identical_observables_give_diagonal_support() {
        let t = tol();
        let c = sigma_z().tensor(&Operator::identity(2));
        let a = Ancilla::new(2, plus_state(), c.clone(), c.clone(), &t).unwrap();
        let p = povm_from_ancilla(&a, &t).unwrap();
        for (ix, iy, x, y) in p.grid().points() {
            if (x - y).abs() > 1e-9 {
                assert!(p.element(ix, iy).max_abs_entry() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_spectral_reconstructs_shared_eigenbasis_pair() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(99);
        // commuting pair built from a shared random eigenbasis
        let u = sample::random_unitary(5, &mut rng);
        let xv = [0.0, 1.0, 1.0, 2.0, 3.0];
        let yv = [5.0, 5.0, 6.0, 6.0, 5.0];
        let x = &(&u * &Operator::diagonal(&xv)) * &u.adjoint();
        let y = &(&u * &Operator::diagonal(&yv)) * &u.adjoint();
        let spaces = joint_spectral(&x, &y, &t).unwrap();
        // reconstruct both operators from the joint data
        let mut rx = Operator::zeros(5);
        let mut ry = Operator::zeros(5);
        let mut total_rank = 0.0;
        for s in &spaces {
            rx = &rx + &s.projector.scale(s.x_value);
            ry = &ry + &s.projector.scale(s.y_value);
            total_rank += s.projector.trace().re;
        }
        assert_abs_diff_eq!(total_rank, 5.0, epsilon = 1e-9);
        assert!(rx.max_distance(&x).unwrap() < 1e-9);
        assert!(ry.max_distance(&y).unwrap() < 1e-9);
        // joint pairs: (0,5), (1,5), (1,6), (2,6), (3,5)
        assert_eq!(spaces.len(), 5);
    }

    #[test]
    fn noise_operator_definition() {
        let t = tol();
        let a_obs = sigma_z();
        let c = a_obs.tensor(&Operator::identity(2));
        let anc = Ancilla::new(2, plus_state(), c.clone(), Operator::zeros(4), &t).unwrap();
        let n = anc.noise_operator(&a_obs, Axis::A).unwrap();
        assert!(n.operator().max_abs_entry() < 1e-13);

        let g = Operator::diagonal(&[0.3, -0.7]);
        let c2 = &c + &Operator::identity(2).tensor(&g);
        let anc2 = Ancilla::new(2, plus_state(), c2, Operator::zeros(4), &t).unwrap();
        let n2 = anc2.noise_operator(&a_obs, Axis::A).unwrap();
        let expected = Operator::identity(2).tensor(&g);
        assert!(n2.operator().max_distance(&expected).unwrap() < 1e-13);
        // decomposition consistency: C = A⊗I + N exactly by construction
        let rebuilt = &a_obs.tensor(&Operator::identity(2)) + n2.operator();
        assert!(rebuilt.max_distance(anc2.measured_1()).unwrap() == 0.0);
    }

    #[test]
    fn conditional_state_of_trivial_measurement() {
        let t = tol();
        let mp = MeasuringProcess::new(
            2,
            StateVector::basis_state(2, 0),
            Operator::identity(4),
            Operator::zeros(2),
            Operator::zeros(2),
            &t,
        )
        .unwrap();
        let rho = DensityMatrix::pure(&plus_state());
        let out = conditional_output_state(&mp, &rho, 0.0, 0.0, &t).unwrap();
        assert!(out.max_distance(&rho).unwrap() < 1e-12);
    }

    #[test]
    fn conditional_state_of_swap_process() {
        let t = tol();
        let mp = MeasuringProcess::new(
            2,
            StateVector::basis_state(2, 0),
            swap_gate(),
            sigma_z(),
            Operator::zeros(2),
            &t,
        )
        .unwrap();
        let rho = DensityMatrix::pure(&plus_state());
        // after the swap the probe holds |+⟩; reading +1 projects it and the
        // object ends in the probe's initial state |0⟩
        let out = conditional_output_state(&mp, &rho, 1.0, 0.0, &t).unwrap();
        let expected = DensityMatrix::pure(&StateVector::basis_state(2, 0));
        assert!(out.max_distance(&expected).unwrap() < 1e-12);
        // zero-probability conditioning is refused: prepare |0⟩, ask for -1
        let rho0 = DensityMatrix::pure(&StateVector::basis_state(2, 0));
        assert!(matches!(
            conditional_output_state(&mp, &rho0, -1.0, 0.0, &t),
            Err(Error::ZeroProbabilityOutcome { .. })
        ));
    }

    #[test]
    fn conditional_states_average_to_total_density() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(4);
        let u = sample::random_unitary(4, &mut rng);
        let m1 = Operator::diagonal(&[0.0, 1.0]);
        let m2 = Operator::diagonal(&[0.0, 3.0]);
        let xi = sample::random_state(2, &mut rng);
        let mp = MeasuringProcess::new(2, xi, u, m1, m2, &t).unwrap();
        let p = povm_from_process(&mp, &t).unwrap();
        let psi = sample::random_state(2, &mut rng);
        let rho = DensityMatrix::pure(&psi);
        let mut acc = DMatrix::<C64>::zeros(2, 2);
        for (_, _, x, y) in p.grid().points() {
            let prob = p.joint_prob(&psi, x, y, &t).unwrap();
            if prob > 1e-9 {
                let cond = conditional_output_state(&mp, &rho, x, y, &t).unwrap();
                acc += cond.matrix().scale(prob);
            }
        }
        let total = DensityMatrix::new(acc, &t).unwrap();
        assert_abs_diff_eq!(total.matrix().trace().re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn dilation_round_trip_projective_guess() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(7);
        let dec = sigma_z().spectral_auto(&t).unwrap();
        let grid = OutcomeGrid::new(dec.eigenvalues().to_vec(), vec![0.0]).unwrap();
        let p = JointPovm::new(2, grid, dec.projectors().to_vec(), &t).unwrap();
        let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
        let back = povm_from_process(&mp, &t).unwrap();
        let defect = p.max_element_distance(&back, 1e-9).unwrap();
        assert!(defect < 1e-10, "round trip defect {defect}");
    }

    #[test]
    fn dilation_round_trip_single_element() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(8);
        let grid = OutcomeGrid::new(vec![0.0], vec![0.0]).unwrap();
        let p = JointPovm::new(2, grid, vec![Operator::identity(2)], &t).unwrap();
        let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
        let back = povm_from_process(&mp, &t).unwrap();
        assert!(p.max_element_distance(&back, 1e-9).unwrap() < 1e-12);
    }

    #[test]
    fn dilation_round_trip_with_zero_element() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(15);
        // one grid cell carries the whole identity, the other nothing
        let grid = OutcomeGrid::new(vec![0.0, 1.0], vec![0.5]).unwrap();
        let p =
            JointPovm::new(2, grid, vec![Operator::identity(2), Operator::zeros(2)], &t).unwrap();
        let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
        let back = povm_from_process(&mp, &t).unwrap();
        assert!(p.max_element_distance(&back, 1e-9).unwrap() < 1e-10);
    }

    #[test]
    fn dilation_round_trip_random_povms() {
        use rand::Rng;
        let t = tol();
        let mut rng = StdRng::seed_from_u64(9);
        for i in 0..20 {
            let dim = rng.random_range(2..=5);
            let nx = rng.random_range(1..=3);
            let ny = rng.random_range(1..=3);
            let p = sample::random_joint_povm(dim, nx, ny, &mut rng, &t).unwrap();
            let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
            let back = povm_from_process(&mp, &t).unwrap();
            let defect = p.max_element_distance(&back, 1e-8).unwrap();
            assert!(defect < 1e-8, "instance {i}: round trip defect {defect}");
        }
    }

    #[test]
    fn process_json_round_trip() {
        let t = tol();
        let mut rng = StdRng::seed_from_u64(10);
        let p = sample::random_joint_povm(2, 2, 1, &mut rng, &t).unwrap();
        let mp = naimark_dilate(&p, &t, &mut rng).unwrap();
        let json = serde_json::to_string(&mp).unwrap();
        let back: MeasuringProcess = serde_json::from_str(&json).unwrap();
        let d = mp.unitary().max_distance(back.unitary()).unwrap();
        assert!(d == 0.0, "round trip distance {d:e}");
        assert!(back.validate(&t).passes);
    }
}
