//! Polynomial matrices, characteristic polynomials, and spectral-curve
//! diagnostics (smoothness, genus, splitting degrees, ramification blocks).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cplx, PolymatError};
use crate::poly::{self, ComplexPolynomial, PolyError};

/// Square matrix with polynomial entries of degree at most `d`, stored as
/// row-major rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMatrix {
    rows: Vec<Vec<ComplexPolynomial>>,
}

impl PolyMatrix {
    pub fn new(rows: Vec<Vec<ComplexPolynomial>>) -> Self {
        let r = rows.len();
        assert!(r > 0, "PolyMatrix must be nonempty");
        assert!(
            rows.iter().all(|row| row.len() == r),
            "PolyMatrix must be square"
        );
        Self { rows }
    }

    pub fn zeros(r: usize) -> Self {
        Self::new(vec![vec![ComplexPolynomial::zero(); r]; r])
    }

    pub fn identity(r: usize) -> Self {
        let mut m = Self::zeros(r);
        for i in 0..r {
            m.rows[i][i] = ComplexPolynomial::one();
        }
        m
    }

    /// From a constant complex matrix.
    pub fn from_constant(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::new(
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| ComplexPolynomial::constant(m[(i, j)]))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Max entry degree, or None for the zero matrix.
    pub fn degree(&self) -> Option<usize> {
        self.rows
            .iter()
            .flatten()
            .filter_map(|p| p.degree())
            .max()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ComplexPolynomial {
        &self.rows[i][j]
    }

    pub fn set_entry(&mut self, i: usize, j: usize, p: ComplexPolynomial) {
        self.rows[i][j] = p;
    }

    /// Coefficient matrix A_k of x^k.
    pub fn coefficient_matrix(&self, k: usize) -> DMatrix<Complex64> {
        let r = self.size();
        DMatrix::from_fn(r, r, |i, j| self.rows[i][j].coeff(k))
    }

    pub fn eval(&self, x: Complex64) -> DMatrix<Complex64> {
        let r = self.size();
        DMatrix::from_fn(r, r, |i, j| self.rows[i][j].eval(x))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.size(), other.size());
        Self::new(
            self.rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.add(q)).collect())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.size(), other.size());
        Self::new(
            self.rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.sub(q)).collect())
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(
            self.rows
                .iter()
                .map(|row| row.iter().map(|p| p.scale(s)).collect())
                .collect(),
        )
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let r = self.size();
        assert_eq!(r, other.size());
        let mut out = Self::zeros(r);
        for i in 0..r {
            for j in 0..r {
                let mut acc = ComplexPolynomial::zero();
                for k in 0..r {
                    acc = acc.add(&self.rows[i][k].mul(&other.rows[k][j]));
                }
                out.rows[i][j] = acc;
            }
        }
        out
    }

    pub fn trace(&self) -> ComplexPolynomial {
        let mut acc = ComplexPolynomial::zero();
        for i in 0..self.size() {
            acc = acc.add(&self.rows[i][i]);
        }
        acc
    }

    /// Conjugate by a constant invertible matrix: g A g^{-1}.
    pub fn conjugate(&self, g: &DMatrix<Complex64>) -> Result<Self, PolymatError> {
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or(PolymatError::IllConditioned)?;
        Ok(Self::from_constant(g)
            .matmul(self)
            .matmul(&Self::from_constant(&ginv)))
    }

    /// Max coefficient magnitude over all entries.
    pub fn norm(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficients b_1..b_r of det(yI - A(x)) = y^r + b_1(x) y^{r-1} + ... + b_r(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub r: usize,
    pub d: usize,
    pub b: Vec<ComplexPolynomial>,
}

impl CharPoly {
    /// Evaluate P(x, y).
    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for bi in &self.b {
            acc = acc * y + bi.eval(x);
        }
        acc
    }

    /// The fiber polynomial P(x0, y) in y, ascending coefficients.
    pub fn fiber(&self, x0: Complex64) -> ComplexPolynomial {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.r + 1];
        coeffs[self.r] = Complex64::new(1.0, 0.0);
        for (i, bi) in self.b.iter().enumerate() {
            coeffs[self.r - 1 - i] = bi.eval(x0);
        }
        ComplexPolynomial::new(coeffs)
    }

    /// dP/dy as a polynomial in y with polynomial coefficients, evaluated at x0.
    pub fn fiber_dy(&self, x0: Complex64) -> ComplexPolynomial {
        self.fiber(x0).derivative()
    }

    /// dP/dx evaluated at (x0, y0).
    pub fn eval_dx(&self, x0: Complex64, y0: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, bi) in self.b.iter().enumerate() {
            acc += bi.derivative().eval(x0) * y0.powu((self.r - 1 - i) as u32);
        }
        acc
    }
}

/// Characteristic polynomial of A(x) by the Faddeev-LeVerrier recursion over
/// the polynomial ring. Degree bounds deg b_i <= i*d are asserted.
pub fn char_poly(a: &PolyMatrix) -> CharPoly {
    let r = a.size();
    let d = a.degree().unwrap_or(0);
    let mut m = PolyMatrix::identity(r);
    let mut c = vec![ComplexPolynomial::zero(); r + 1];
    c[r] = ComplexPolynomial::one();
    for k in 1..=r {
        let am = a.matmul(&m);
        c[r - k] = am.trace().scale(cplx(-1.0 / k as f64));
        if k < r {
            // M_{k+1} = A M_k + c_{r-k} I
            m = am;
            for i in 0..r {
                let diag = m.entry(i, i).add(&c[r - k]);
                m.set_entry(i, i, diag);
            }
        }
    }
    let mut b = Vec::with_capacity(r);
    for i in 1..=r {
        let bi = c[r - i].clone();
        debug_assert!(bi.degree().map_or(true, |deg| deg <= i * d));
        b.push(bi);
    }
    CharPoly { r, d, b }
}

/// Genus of a smooth spectral r-cover: degK*r(r-1)/2 + r(g_base-1) + 1.
pub fn spectral_genus(r: i64, deg_k: i64, g_base: i64) -> i64 {
    assert!(r >= 1);
    deg_k * r * (r - 1) / 2 + r * (g_base - 1) + 1
}

/// Splitting degrees of the direct image of O(d) under an n-fold cover of the
/// line: floor((d - i)/n) for i = 0..n-1.
pub fn direct_image_splitting(n: i64, d: i64) -> Vec<i64> {
    assert!(n >= 1);
    (0..n).map(|i| (d - i).div_euclid(n)).collect()
}

/// The k x k block P_k with z in the upper-right corner and ones on the
/// subdiagonal; its k-th power is z times the identity.
pub fn ramification_matrix(k: usize) -> PolyMatrix {
    assert!(k >= 1);
    let z = ComplexPolynomial::identity();
    let mut m = PolyMatrix::zeros(k);
    m.set_entry(0, k - 1, z);
    for i in 1..k {
        m.set_entry(i, i - 1, ComplexPolynomial::one());
    }
    m
}

/// Outcome of the affine smoothness test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub smooth: bool,
    /// Offending (x, y) when not smooth.
    pub witness: Option<(Complex64, Complex64)>,
}

const SINGULAR_TOL: f64 = 1e-2;

/// Affine smoothness of P(x,y) = y^r + sum b_i(x) y^{r-i}: true iff
/// P = dP/dx = dP/dy = 0 has no common solution. Candidate x values come
/// from the resultant Res_y(P, dP/dy), computed by evaluation at sample
/// points followed by interpolation.
pub fn spectral_smooth_affine(b: &CharPoly) -> Result<SmoothnessReport, PolymatError> {
    let r = b.r;
    assert!(r >= 1);
    if r == 1 {
        // y + b_1(x): dP/dy = 1 never vanishes.
        return Ok(SmoothnessReport {
            smooth: true,
            witness: None,
        });
    }
    let dx_deg: usize = b.b.iter().filter_map(|p| p.degree()).max().unwrap_or(0);
    // Resultant degree in x is at most (2r - 1) * dx_deg.
    let n_samples = (2 * r - 1) * dx_deg + 1;
    // Unit-circle nodes keep the interpolation well conditioned (FFT-like).
    let radius = 1.0;
    let mut nodes = Vec::with_capacity(n_samples);
    let mut dets = Vec::with_capacity(n_samples);
    let mut max_det = 0.0_f64;
    for k in 0..n_samples {
        // Sample on a circle with an irrational phase offset to dodge axes.
        let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5_f64.sqrt()) / n_samples as f64;
        let x = Complex64::new(radius * theta.cos(), radius * theta.sin());
        let p = b.fiber(x);
        let py = p.derivative();
        let det = sylvester_det(&p, &py);
        max_det = max_det.max(det.norm());
        nodes.push(x);
        dets.push(det);
    }
    let res = poly::lagrange_interpolate(&nodes, &dets).map_err(PolyError::from)?;
    if res.norm() <= 1e-12 * max_det.max(1.0) || res.degree().is_none() {
        // Discriminant identically zero: every fiber has a multiple root.
        return Err(PolymatError::IllConditioned);
    }
    let scale = (1.0 + b.b.iter().map(|p| p.norm()).fold(0.0, f64::max)).max(1.0);
    if res.degree() == Some(0) {
        return Ok(SmoothnessReport {
            smooth: true,
            witness: None,
        });
    }
    let candidates = poly::roots(&res).map_err(PolyError::from)?;
    for x0 in candidates {
        let fiber = b.fiber(x0);
        let dy = fiber.derivative();
        let ys = poly::roots(&fiber).map_err(PolyError::from)?;
        for y0 in ys {
            if dy.eval(y0).norm() < SINGULAR_TOL * scale
                && b.eval_dx(x0, y0).norm() < SINGULAR_TOL * scale
            {
                return Ok(SmoothnessReport {
                    smooth: false,
                    witness: Some((x0, y0)),
                });
            }
        }
    }
    Ok(SmoothnessReport {
        smooth: true,
        witness: None,
    })
}

/// Determinant of the Sylvester matrix of two scalar polynomials.
fn sylvester_det(p: &ComplexPolynomial, q: &ComplexPolynomial) -> Complex64 {
    let n = p.degree().expect("nonzero p");
    let m = q.degree().expect("nonzero q");
    let size = n + m;
    let mut s = DMatrix::<Complex64>::zeros(size, size);
    for row in 0..m {
        for k in 0..=n {
            s[(row, row + k)] = p.coeff(n - k);
        }
    }
    for row in 0..n {
        for k in 0..=m {
            s[(m + row, row + k)] = q.coeff(m - k);
        }
    }
    s.lu().determinant()
}
