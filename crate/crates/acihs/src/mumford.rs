//! Mumford (U, V, W) coordinates on the complement of the theta divisor
//! of a hyperelliptic Jacobian, and the explicit map from the constrained
//! phase space of the confocal system.
//!
//! For a curve s^2 = f(t) with f monic of odd degree 2n+1, a divisor of n
//! affine points (t_i, s_i) in general position is encoded by
//!   U = prod (t - t_i)          (monic, degree n)
//!   V = interpolant of s_i      (degree <= n-1)
//!   W = (f - V^2)/U             (monic, degree n+1)
//! and the image is cut out by V^2 + UW = f.

use crate::confocal::{uhlenbeck_integrals, ConfocalFamily, PhasePoint};
use crate::poly::{self, ComplexPolynomial};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MumfordError {
    #[error("point ({0}, {1}) is not on the curve s^2 = f(t)")]
    PointNotOnCurve(Complex64, Complex64),
    #[error("divisor touches the theta divisor: conjugate pair or repeated support point")]
    ThetaDivisorDegenerate,
    #[error("U has a near-double root; confluent divisors are out of scope")]
    ConfluentDivisor,
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
}

/// The triple (U, V, W) with V^2 + UW = f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MumfordTriple {
    pub u: ComplexPolynomial,
    pub v: ComplexPolynomial,
    pub w: ComplexPolynomial,
}

/// The hyperelliptic model s^2 = f(t), f monic squarefree of odd degree,
/// optionally split as f = f_1 f_2 with f_1 the axis factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticModel {
    pub f: ComplexPolynomial,
    pub f1: Option<ComplexPolynomial>,
    pub f2: Option<ComplexPolynomial>,
}

impl HyperellipticModel {
    pub fn new(f: ComplexPolynomial) -> Self {
        Self {
            f,
            f1: None,
            f2: None,
        }
    }
}

const ON_CURVE_TOL: f64 = 1e-8;

/// Build the (U, V, W) triple of a divisor of distinct affine points.
pub fn triple_from_divisor(
    points: &[(Complex64, Complex64)],
    model: &HyperellipticModel,
) -> Result<MumfordTriple, MumfordError> {
    let scale = model.f.norm().max(1.0);
    for &(t, s) in points {
        if (s * s - model.f.eval(t)).norm() > ON_CURVE_TOL * scale * (1.0 + t.norm()) {
            return Err(MumfordError::PointNotOnCurve(t, s));
        }
    }
    // Reject repeated t_i: both genuine repeats and conjugate pairs
    // (t_i = t_j, s_i = -s_j) land on the theta divisor.
    let tscale = points
        .iter()
        .map(|(t, _)| t.norm())
        .fold(1.0_f64, f64::max);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (points[i].0 - points[j].0).norm() < 1e-9 * tscale {
                return Err(MumfordError::ThetaDivisorDegenerate);
            }
        }
    }
    let ts: Vec<Complex64> = points.iter().map(|p| p.0).collect();
    let ss: Vec<Complex64> = points.iter().map(|p| p.1).collect();
    let u = ComplexPolynomial::from_roots(&ts);
    let v = if points.is_empty() {
        ComplexPolynomial::zero()
    } else {
        poly::lagrange_interpolate(&ts, &ss)?
    };
    let num = model.f.sub(&v.mul(&v));
    let (w, _residual) = poly::exact_divide(&num, &u)?;
    Ok(MumfordTriple { u, v, w })
}

/// Recover the divisor: t_i = roots of U, s_i = V(t_i).
pub fn divisor_from_triple(
    m: &MumfordTriple,
) -> Result<Vec<(Complex64, Complex64)>, MumfordError> {
    if m.u.degree().map_or(true, |d| d == 0) {
        return Ok(Vec::new());
    }
    let ts = poly::roots(&m.u)?;
    let scale = ts.iter().map(|t| t.norm()).fold(1.0_f64, f64::max);
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            if (ts[i] - ts[j]).norm() < 1e-7 * scale {
                return Err(MumfordError::ConfluentDivisor);
            }
        }
    }
    Ok(ts.iter().map(|&t| (t, m.v.eval(t))).collect())
}

/// Relative residual of the defining identity: ||V^2 + UW - f|| / ||f||.
pub fn verify_pell(m: &MumfordTriple, model: &HyperellipticModel) -> f64 {
    let lhs = m.v.mul(&m.v).add(&m.u.mul(&m.w));
    lhs.sub(&model.f).norm() / model.f.norm().max(f64::MIN_POSITIVE)
}

/// The explicit map from TS into Mumford coordinates:
///   U = f_1 sum x_k^2/(t - a_k),  V = i f_1 sum x_k y_k/(t - a_k),
///   W = f_1 (1 + sum y_k^2/(t - a_k)),  f_2 = f_1 sum F_k/(t - a_k).
/// Returns the triple and the model f = f_1 f_2.
pub fn triple_from_phase(
    p: &PhasePoint,
    fam: &ConfocalFamily,
) -> (MumfordTriple, HyperellipticModel) {
    let a = fam.axes();
    let n1 = fam.dim();
    let fk = uhlenbeck_integrals(p, fam);
    // f_1 sum c_k/(t - a_k) = sum_k c_k prod_{l != k} (t - a_l)
    let cleared = |c: &dyn Fn(usize) -> Complex64| -> ComplexPolynomial {
        let mut acc = ComplexPolynomial::zero();
        for k in 0..n1 {
            let others: Vec<Complex64> = (0..n1)
                .filter(|&l| l != k)
                .map(|l| Complex64::new(a[l], 0.0))
                .collect();
            acc = acc.add(&ComplexPolynomial::from_roots(&others).scale(c(k)));
        }
        acc
    };
    let f1 = fam.axis_polynomial();
    let u = cleared(&|k| Complex64::new(p.x[k] * p.x[k], 0.0));
    let v = cleared(&|k| Complex64::new(0.0, p.x[k] * p.y[k]));
    let w = f1.add(&cleared(&|k| Complex64::new(p.y[k] * p.y[k], 0.0)));
    let f2 = cleared(&|k| Complex64::new(fk[k], 0.0));
    let f = f1.mul(&f2);
    (
        MumfordTriple { u, v, w },
        HyperellipticModel {
            f,
            f1: Some(f1),
            f2: Some(f2),
        },
    )
}
