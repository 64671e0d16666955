//! Residue embedding of polynomial matrices into products of matrix algebras
//! and its inverse, plus the trace pairing on residue tuples.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::PolyMatrix;
use super::PolymatError;
use crate::poly::{self, ComplexPolynomial, PolyError};

/// How the marked divisor treats the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivisorMode {
    /// All marked points finite; residues sum to zero.
    AllFinite,
    /// The last residue lives at infinity and equals minus the sum of the
    /// finite ones. The leading coefficient of the matrix is carried along so
    /// the embedding stays invertible.
    LastAtInfinity,
}

/// Residues of the matrix 1-form A(x) dx / prod (x - a_j) at the marked
/// points, one complex r x r matrix per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueTuple {
    /// Finite marked points a_1..a_f.
    pub points: Vec<Complex64>,
    /// Residue matrices, one per finite point, plus one more at infinity in
    /// last-at-infinity mode.
    pub matrices: Vec<DMatrix<Complex64>>,
    pub mode: DivisorMode,
    /// Leading coefficient matrix of A, kept only in last-at-infinity mode
    /// where the residues alone do not determine it.
    pub leading: Option<DMatrix<Complex64>>,
}

impl ResidueTuple {
    pub fn rank(&self) -> usize {
        self.matrices[0].nrows()
    }

    /// Max entry magnitude across all factors.
    pub fn norm(&self) -> f64 {
        self.matrices
            .iter()
            .flat_map(|m| m.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn sum(&self) -> DMatrix<Complex64> {
        let r = self.rank();
        let mut acc = DMatrix::<Complex64>::zeros(r, r);
        let finite = self.points.len();
        for m in self.matrices.iter().take(finite) {
            acc += m;
        }
        acc
    }
}

fn check_distinct(points: &[Complex64]) -> Result<(), PolymatError> {
    let scale = points.iter().map(|p| p.norm()).fold(1.0_f64, f64::max);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i] - points[j]).norm() <= 1e-12 * scale {
                return Err(PolymatError::DuplicatePoints);
            }
        }
    }
    Ok(())
}

/// Residues R_i = A(a_i) / prod_{j != i} (a_i - a_j).
///
/// In all-finite mode the divisor must have at least deg A + 2 points, which
/// forces the residues to sum to zero. In last-at-infinity mode the divisor
/// lists the finite points; a final residue at infinity, equal to minus the
/// sum, is appended.
pub fn residue_embed(
    a: &PolyMatrix,
    divisor: &[Complex64],
    mode: DivisorMode,
) -> Result<ResidueTuple, PolymatError> {
    check_distinct(divisor)?;
    let deg = a.degree().map_or(0, |d| d);
    let m = divisor.len();
    match mode {
        DivisorMode::AllFinite => {
            if deg + 2 > m {
                return Err(PolymatError::DegreeTooHigh(deg, m));
            }
        }
        DivisorMode::LastAtInfinity => {
            if deg > m {
                return Err(PolymatError::DegreeTooHigh(deg, m));
            }
        }
    }
    let r = a.size();
    let mut matrices = Vec::with_capacity(m + 1);
    for (i, &ai) in divisor.iter().enumerate() {
        let mut denom = Complex64::new(1.0, 0.0);
        for (j, &aj) in divisor.iter().enumerate() {
            if j != i {
                denom *= ai - aj;
            }
        }
        matrices.push(a.eval(ai) / denom);
    }
    let leading = match mode {
        DivisorMode::AllFinite => None,
        DivisorMode::LastAtInfinity => {
            let mut acc = DMatrix::<Complex64>::zeros(r, r);
            for mat in &matrices {
                acc += mat;
            }
            matrices.push(-acc);
            // Degree-m coefficient of A; zero unless deg A reaches m.
            Some(a.coefficient_matrix(m))
        }
    };
    Ok(ResidueTuple {
        points: divisor.to_vec(),
        matrices,
        mode,
        leading,
    })
}

const SUM_TOL: f64 = 1e-6;

/// Inverse of residue_embed: entrywise Lagrange interpolation of
/// A(a_i) = R_i prod_{j != i} (a_i - a_j).
pub fn residue_reconstruct(t: &ResidueTuple) -> Result<PolyMatrix, PolymatError> {
    if t.mode == DivisorMode::AllFinite {
        let s = t.sum().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if s > SUM_TOL * t.norm().max(1.0) {
            return Err(PolymatError::ResidueSumNonzero(s));
        }
    }
    reconstruct_lenient(t)
}

/// Interpolation without the sum-zero gate. Used by finite-difference
/// gradients of spectral functionals, which step off the sum-zero locus.
pub(crate) fn reconstruct_lenient(t: &ResidueTuple) -> Result<PolyMatrix, PolymatError> {
    let r = t.rank();
    let mut values: Vec<DMatrix<Complex64>> = Vec::with_capacity(t.points.len());
    for (i, &ai) in t.points.iter().enumerate() {
        let mut numer = Complex64::new(1.0, 0.0);
        for (j, &aj) in t.points.iter().enumerate() {
            if j != i {
                numer *= ai - aj;
            }
        }
        values.push(&t.matrices[i] * numer);
    }
    let mut rows = vec![vec![ComplexPolynomial::zero(); r]; r];
    for p in 0..r {
        for q in 0..r {
            let vals: Vec<Complex64> = values.iter().map(|v| v[(p, q)]).collect();
            let entry = match (&t.leading, t.mode) {
                (Some(lead), DivisorMode::LastAtInfinity) => {
                    poly::lagrange_interpolate_with_infinity(&t.points, &vals, lead[(p, q)])
                }
                _ => poly::lagrange_interpolate(&t.points, &vals),
            }
            .map_err(PolyError::from)?;
            rows[p][q] = entry;
        }
    }
    Ok(PolyMatrix::new(rows))
}

/// The pairing sum_i trace(A_i R_i) between a jet of constant matrices and a
/// residue tuple.
pub fn trace_pair(jet: &[DMatrix<Complex64>], t: &ResidueTuple) -> Complex64 {
    assert_eq!(jet.len(), t.matrices.len(), "jet and tuple lengths differ");
    jet.iter()
        .zip(&t.matrices)
        .map(|(a, r)| (a * r).trace())
        .sum()
}
