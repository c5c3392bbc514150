#![allow(dead_code)]

use nalgebra::DMatrix;

use monosplit::spaces::Sampler;
use monosplit::{SubspaceProjector, Vector};

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn gaussian_matrix(s: &mut Sampler, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        m.set_column(j, &s.vector(rows, 1.0));
    }
    m
}

/// Orthonormal basis of a random `k`-dimensional subspace of ℝⁿ.
pub fn random_basis(s: &mut Sampler, n: usize, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    gaussian_matrix(s, n, k).qr().q()
}

pub fn projector_from_basis(basis: &DMatrix<f64>) -> SubspaceProjector {
    let n = basis.nrows();
    let p = if basis.ncols() == 0 {
        DMatrix::zeros(n, n)
    } else {
        basis * basis.transpose()
    };
    SubspaceProjector::dense(p).expect("square projector")
}

/// Symmetric matrix with eigenvalues drawn uniformly from `[lo, hi]`.
pub fn random_psd(s: &mut Sampler, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let q = random_basis(s, n, n);
    let d = DMatrix::from_diagonal(&Vector::from_fn(n, |_, _| s.uniform(lo, hi)));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Minimizer of `½xᵀQx − bᵀx` over `x ∈ span(basis)`, from the reduced
/// normal equations `UᵀQU t = Uᵀb`.
pub fn constrained_quadratic_minimizer(q: &DMatrix<f64>, b: &Vector, basis: &DMatrix<f64>) -> Vector {
    if basis.ncols() == 0 {
        return Vector::zeros(q.nrows());
    }
    let reduced = basis.transpose() * q * basis;
    let rhs = basis.transpose() * b;
    let t = reduced.lu().solve(&rhs).expect("reduced system is nonsingular");
    basis * t
}

pub fn max_abs(x: &Vector) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
