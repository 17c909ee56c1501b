//! Seeded random fixtures: Hermitian observables, states, and joint POVMs.
//!
//! All generators take the RNG by argument so sweeps stay reproducible and
//! parallelizable with derived seeds.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::Result;
use crate::operators::{orthonormalize, Operator, StateVector};
use crate::povm::{JointPovm, OutcomeGrid};
use crate::tol::Tolerances;

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(
        rng.random::<f64>() * 2.0 - 1.0,
        rng.random::<f64>() * 2.0 - 1.0,
    )
}

pub fn random_matrix(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| random_complex(rng))
}

/// Random Hermitian operator with entries of order one.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Operator {
    let m = random_matrix(dim, rng);
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Operator::from_matrix(h).expect("square by construction")
}

/// Haar-ish random state (normalized complex Gaussian-free box sampling is
/// fine for test coverage purposes).
pub fn random_state(dim: usize, rng: &mut impl Rng) -> StateVector {
    loop {
        let v = DVector::from_fn(dim, |_, _| random_complex(rng));
        if v.norm() > 1e-6 {
            return StateVector::normalized(v).expect("nonzero norm");
        }
    }
}

/// Random unitary via orthonormalization of a random matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> Operator {
    loop {
        let m = random_matrix(dim, rng);
        let mut cols: Vec<DVector<C64>> = (0..dim).map(|j| m.column(j).into()).collect();
        if orthonormalize(&mut cols, 1e-8, "random unitary").is_err() {
            continue;
        }
        let mut u = DMatrix::<C64>::zeros(dim, dim);
        for (j, c) in cols.iter().enumerate() {
            u.set_column(j, c);
        }
        return Operator::from_matrix(u).expect("square by construction");
    }
}

/// Strictly increasing outcome values: integers `0..n` with jittered spacing.
pub fn random_outcome_values(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut values = Vec::with_capacity(n);
    let mut current = rng.random::<f64>() * 2.0 - 1.0;
    for _ in 0..n {
        values.push(current);
        current += 0.5 + rng.random::<f64>();
    }
    values
}

/// Random valid joint POVM on an `nx × ny` grid, built from a random
/// stacked isometry so that completeness holds by construction.
pub fn random_joint_povm(
    dim: usize,
    nx: usize,
    ny: usize,
    rng: &mut impl Rng,
    tol: &Tolerances,
) -> Result<JointPovm> {
    let grid = OutcomeGrid::new(
        random_outcome_values(nx, rng),
        random_outcome_values(ny, rng),
    )?;
    let n_out = nx * ny;
    // columns of a (n_out*dim) x dim isometry
    let mut cols: Vec<DVector<C64>> = (0..dim)
        .map(|_| DVector::from_fn(n_out * dim, |_, _| random_complex(rng)))
        .collect();
    while orthonormalize(&mut cols, 1e-8, "random POVM isometry").is_err() {
        cols = (0..dim)
            .map(|_| DVector::from_fn(n_out * dim, |_, _| random_complex(rng)))
            .collect();
    }
    let mut elements = Vec::with_capacity(n_out);
    for block in 0..n_out {
        let mut k = DMatrix::<C64>::zeros(dim, dim);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                k[(i, j)] = col[block * dim + i];
            }
        }
        elements.push(Operator::from_matrix(k.adjoint() * k).expect("square"));
    }
    JointPovm::new(dim, grid, elements, tol)
}
