//! Dense univariate polynomials over the complex numbers.
//!
//! Everything downstream (tangency polynomials, Mumford triples, spectral
//! curves) is built out of these. Coefficients are stored in ascending
//! degree order and trailing coefficients below a relative magnitude floor
//! are trimmed on normalization.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative magnitude floor used to trim trailing coefficients.
pub const TRIM_FLOOR: f64 = 1e-12;

/// Relative cutoff for the Euclidean gcd degree decision.
pub const GCD_CUTOFF: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("interpolation nodes coincide within tolerance")]
    DuplicateNodes,
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("root polishing diverged; polynomial is ill-conditioned")]
    IllConditioned,
}

/// Dense complex polynomial, ascending coefficient order.
///
/// The zero polynomial is represented by an empty coefficient vector and
/// reports `degree() == None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Self { coeffs };
        p.normalize(TRIM_FLOOR);
        p
    }

    /// Build from coefficients with a caller-chosen trim floor.
    pub fn with_floor(coeffs: Vec<Complex64>, floor: f64) -> Self {
        let mut p = Self { coeffs };
        p.normalize(floor);
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial t.
    pub fn identity() -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Self::one();
        for &r in roots {
            p = p.mul(&Self::new(vec![-r, Complex64::new(1.0, 0.0)]));
        }
        p
    }

    fn normalize(&mut self, floor: f64) {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        let cut = floor * scale;
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of t^k (zero past the degree).
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs
            .get(k)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs
            .last()
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Max coefficient magnitude.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Self::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        Self::new(coeffs)
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs =
            vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// Taylor shift: returns p(t0 + t) as a polynomial in t.
    pub fn shift(&self, t0: Complex64) -> Self {
        // Repeated synthetic division by (t - t0).
        let mut work = self.coeffs.clone();
        let n = work.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for slot in out.iter_mut().take(n) {
            // Divide work by (t - t0); remainder is the next Taylor coefficient.
            let mut rem = Complex64::new(0.0, 0.0);
            for c in work.iter_mut().rev() {
                let tmp = *c + rem * t0;
                rem = tmp;
                *c = tmp;
            }
            // After the loop the running value in position 0 is the remainder;
            // shift the quotient down.
            *slot = work[0];
            work.remove(0);
            if work.is_empty() {
                break;
            }
        }
        Self::new(out)
    }

    /// Quotient and remainder of Euclidean division.
    pub fn div_rem(&self, den: &Self) -> Result<(Self, Self), PolyError> {
        if den.is_zero() {
            return Err(PolyError::DivisionByZeroPolynomial);
        }
        let dd = den.degree().unwrap();
        if self.is_zero() || self.degree().unwrap() < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let nd = self.degree().unwrap();
        let lead = den.leading();
        let mut rem = self.coeffs.clone();
        let mut quo = vec![Complex64::new(0.0, 0.0); nd - dd + 1];
        for k in (0..=(nd - dd)).rev() {
            let q = rem[k + dd] / lead;
            quo[k] = q;
            for (j, &c) in den.coeffs.iter().enumerate() {
                rem[k + j] -= q * c;
            }
        }
        rem.truncate(dd);
        Ok((Self::new(quo), Self::new(rem)))
    }
}

/// Lagrange interpolation through (nodes[i], values[i]).
///
/// The result has degree <= nodes.len() - 1.
pub fn lagrange_interpolate(
    nodes: &[Complex64],
    values: &[Complex64],
) -> Result<ComplexPolynomial, PolyError> {
    assert_eq!(nodes.len(), values.len());
    assert!(!nodes.is_empty());
    check_distinct(nodes)?;
    let mut acc = ComplexPolynomial::zero();
    for (i, &ni) in nodes.iter().enumerate() {
        let mut basis = ComplexPolynomial::one();
        let mut denom = Complex64::new(1.0, 0.0);
        for (j, &nj) in nodes.iter().enumerate() {
            if j != i {
                basis = basis.mul(&ComplexPolynomial::new(vec![-nj, Complex64::new(1.0, 0.0)]));
                denom *= ni - nj;
            }
        }
        acc = acc.add(&basis.scale(values[i] / denom));
    }
    Ok(acc)
}

/// Lagrange interpolation with a prescribed leading coefficient:
/// F(x) = sum_i F(a_i) prod_{j != i} (x - a_j)/(a_i - a_j) + leading * prod_j (x - a_j).
///
/// The `leading` value plays the role of F at infinity; the result has
/// degree nodes.len() when `leading` is nonzero.
pub fn lagrange_interpolate_with_infinity(
    nodes: &[Complex64],
    values: &[Complex64],
    leading: Complex64,
) -> Result<ComplexPolynomial, PolyError> {
    let base = lagrange_interpolate(nodes, values)?;
    let top = ComplexPolynomial::from_roots(nodes).scale(leading);
    Ok(base.add(&top))
}

fn check_distinct(nodes: &[Complex64]) -> Result<(), PolyError> {
    let scale = nodes.iter().map(|n| n.norm()).fold(1.0_f64, f64::max);
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if (nodes[i] - nodes[j]).norm() <= TRIM_FLOOR * scale {
                return Err(PolyError::DuplicateNodes);
            }
        }
    }
    Ok(())
}

/// Quotient of `num / den` together with the max-coefficient norm of the
/// remainder. The remainder is reported, never silently dropped.
pub fn exact_divide(
    num: &ComplexPolynomial,
    den: &ComplexPolynomial,
) -> Result<(ComplexPolynomial, f64), PolyError> {
    let (q, r) = num.div_rem(den)?;
    Ok((q, r.norm()))
}

/// Degree of the numeric gcd of f and g, decided by Euclidean remainders
/// with a relative cutoff.
pub fn gcd_degree(f: &ComplexPolynomial, g: &ComplexPolynomial, cutoff: f64) -> usize {
    let mut a = f.clone();
    let mut b = g.clone();
    if a.degree() < b.degree() {
        std::mem::swap(&mut a, &mut b);
    }
    let scale = a.norm().max(b.norm()).max(1.0);
    loop {
        if b.is_zero() || b.norm() <= cutoff * scale {
            return a.degree().unwrap_or(0);
        }
        let (_, r) = a.div_rem(&b).expect("b nonzero by loop guard");
        // Trim against the working scale so noise remainders terminate the loop.
        let floor = cutoff * scale / r.norm().max(1e-300);
        let r = ComplexPolynomial::with_floor(r.coeffs, floor);
        a = b;
        b = r;
    }
}

/// True iff f has no repeated roots: numeric gcd(f, f') has degree 0.
pub fn squarefree(f: &ComplexPolynomial) -> bool {
    assert!(
        f.degree().map_or(false, |d| d >= 1),
        "squarefree requires deg f >= 1"
    );
    gcd_degree(f, &f.derivative(), GCD_CUTOFF) == 0
}

/// All complex roots of f, via balanced companion-matrix eigenvalues
/// followed by two Newton polishing steps.
pub fn roots(f: &ComplexPolynomial) -> Result<Vec<Complex64>, PolyError> {
    let deg = f.degree().expect("roots requires a nonzero polynomial");
    assert!(deg >= 1, "roots requires deg f >= 1");
    if deg == 1 {
        return Ok(vec![-f.coeff(0) / f.coeff(1)]);
    }
    let lead = f.leading();
    let monic: Vec<Complex64> = f.coeffs().iter().map(|&c| c / lead).collect();
    let mut m = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -monic[i];
    }
    balance(&mut m);
    let schur = m.try_schur(1e-14, 10_000).ok_or(PolyError::IllConditioned)?;
    let mut eigs: Vec<Complex64> = schur
        .eigenvalues()
        .ok_or(PolyError::IllConditioned)?
        .iter()
        .copied()
        .collect();
    let fp = f.derivative();
    let scale = f.norm();
    for r in eigs.iter_mut() {
        // Two Newton steps, each accepted only if it reduces the residual
        // (clustered roots make the raw step destructive).
        for _ in 0..2 {
            let d = fp.eval(*r);
            if d.norm() > 0.0 {
                let step = f.eval(*r) / d;
                let cand = *r - step;
                if step.norm().is_finite() && f.eval(cand).norm() < f.eval(*r).norm() {
                    *r = cand;
                }
            }
        }
        let local = scale * (1.0 + r.norm().powi(deg as i32));
        if !r.re.is_finite() || !r.im.is_finite() || f.eval(*r).norm() > 1e-6 * local {
            return Err(PolyError::IllConditioned);
        }
    }
    Ok(eigs)
}

/// One pass of diagonal balancing (norm equilibration) in place.
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for _ in 0..5 {
        for i in 0..n {
            let mut rnorm = 0.0;
            let mut cnorm = 0.0;
            for j in 0..n {
                if j != i {
                    rnorm += m[(i, j)].norm();
                    cnorm += m[(j, i)].norm();
                }
            }
            if rnorm > 0.0 && cnorm > 0.0 {
                let s = (cnorm / rnorm).sqrt().sqrt();
                for j in 0..n {
                    m[(i, j)] *= s;
                    m[(j, i)] /= s;
                }
            }
        }
    }
}

/// Match two root multisets greedily; returns the max pairing distance.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut remaining: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0_f64;
    for &x in a {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .expect("nonempty by length equality");
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    worst
}

/// Sort complex values lexicographically by (re, im).
pub fn sort_lex(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_polynomial_degree_sentinel() {
        assert_eq!(ComplexPolynomial::zero().degree(), None);
        assert_eq!(ComplexPolynomial::new(vec![c(0.0, 0.0); 3]).degree(), None);
        // The floor is relative, so a lone tiny constant survives.
        assert_eq!(ComplexPolynomial::new(vec![c(1e-300, 0.0)]).degree(), Some(0));
    }

    #[test]
    fn trims_trailing_noise() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(2.0, 0.0), c(1e-15, 0.0)]);
        assert_eq!(p.degree(), Some(1));
    }

    #[test]
    fn interpolate_single_node() {
        let p = lagrange_interpolate(&[c(0.0, 0.0)], &[c(5.0, 0.0)]).unwrap();
        assert_eq!(p.degree(), Some(0));
        assert!((p.eval(c(3.0, 0.0)) - c(5.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn interpolate_identity_line() {
        let p = lagrange_interpolate(&[c(0.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!((p.coeff(0)).norm() < 1e-14);
        assert!((p.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn interpolate_parabola() {
        // nodes [0,1,2], values [1,2,5] -> t^2 + 1 (checked by the 3x3
        // Vandermonde solve: a0=1, a0+a1+a2=2, a0+2a1+4a2=5).
        let p = lagrange_interpolate(
            &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
            &[c(1.0, 0.0), c(2.0, 0.0), c(5.0, 0.0)],
        )
        .unwrap();
        assert!((p.coeff(0) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(p.coeff(1).norm() < 1e-13);
        assert!((p.coeff(2) - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn interpolate_duplicate_nodes_rejected() {
        let r = lagrange_interpolate(&[c(1.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(r.unwrap_err(), PolyError::DuplicateNodes);
    }

    #[test]
    fn interpolate_with_infinity_monomial() {
        // nodes [0], values [0], leading 1 -> t
        let p = lagrange_interpolate_with_infinity(&[c(0.0, 0.0)], &[c(0.0, 0.0)], c(1.0, 0.0))
            .unwrap();
        assert!((p.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(p.degree(), Some(1));
    }

    #[test]
    fn interpolate_with_infinity_even_data() {
        // nodes [1,-1], values [1,1], leading 0 -> constant 1
        let p = lagrange_interpolate_with_infinity(
            &[c(1.0, 0.0), c(-1.0, 0.0)],
            &[c(1.0, 0.0), c(1.0, 0.0)],
            c(0.0, 0.0),
        )
        .unwrap();
        assert_eq!(p.degree(), Some(0));
        assert!((p.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn interpolate_with_infinity_leading_two() {
        // nodes [0,1], values [0,0], leading 2 -> 2t(t-1) = 2t^2 - 2t
        let p = lagrange_interpolate_with_infinity(
            &[c(0.0, 0.0), c(1.0, 0.0)],
            &[c(0.0, 0.0), c(0.0, 0.0)],
            c(2.0, 0.0),
        )
        .unwrap();
        assert!((p.coeff(2) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((p.coeff(1) + c(2.0, 0.0)).norm() < 1e-14);
        assert!(p.coeff(0).norm() < 1e-14);
    }

    #[test]
    fn exact_divide_clean() {
        let num = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]); // t^2 - 1
        let den = ComplexPolynomial::from_real(&[-1.0, 1.0]); // t - 1
        let (q, res) = exact_divide(&num, &den).unwrap();
        assert!((q.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((q.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(res < 1e-14);
    }

    #[test]
    fn exact_divide_cubic() {
        // (t^3 - 2t - 4)/(t - 2) = t^2 + 2t + 2, residual 0 (long division)
        let num = ComplexPolynomial::from_real(&[-4.0, -2.0, 0.0, 1.0]);
        let den = ComplexPolynomial::from_real(&[-2.0, 1.0]);
        let (q, res) = exact_divide(&num, &den).unwrap();
        assert!((q.coeff(0) - c(2.0, 0.0)).norm() < 1e-13);
        assert!((q.coeff(1) - c(2.0, 0.0)).norm() < 1e-13);
        assert!((q.coeff(2) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(res < 1e-13);
    }

    #[test]
    fn exact_divide_reports_remainder() {
        // (t^2 + 1)/t -> quotient t, residual 1
        let num = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]);
        let den = ComplexPolynomial::from_real(&[0.0, 1.0]);
        let (q, res) = exact_divide(&num, &den).unwrap();
        assert!((q.coeff(1) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((res - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divide_by_zero_rejected() {
        let num = ComplexPolynomial::from_real(&[1.0, 1.0]);
        let r = exact_divide(&num, &ComplexPolynomial::zero());
        assert_eq!(r.unwrap_err(), PolyError::DivisionByZeroPolynomial);
    }

    #[test]
    fn squarefree_examples() {
        // t^3 - 2t has roots 0, +-sqrt(2): squarefree
        assert!(squarefree(&ComplexPolynomial::from_real(&[0.0, -2.0, 0.0, 1.0])));
        // (t-1)^2 has a double root
        assert!(!squarefree(&ComplexPolynomial::from_real(&[1.0, -2.0, 1.0])));
        assert!(squarefree(&ComplexPolynomial::from_real(&[0.0, 1.0])));
    }

    #[test]
    fn roots_quadratic_imaginary() {
        let mut r = roots(&ComplexPolynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        sort_lex(&mut r);
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-10);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-10);
    }

    #[test]
    fn roots_cubic_integers() {
        let f = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let r = roots(&f).unwrap();
        assert!(multiset_distance(&r, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]) < 1e-9);
    }

    #[test]
    fn roots_sqrt2() {
        let r = roots(&ComplexPolynomial::from_real(&[0.0, -2.0, 0.0, 1.0])).unwrap();
        let s = 2.0_f64.sqrt();
        assert!(multiset_distance(&r, &[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0)]) < 1e-10);
    }

    #[test]
    fn taylor_shift() {
        let f = ComplexPolynomial::from_real(&[1.0, 2.0, 3.0]);
        let g = f.shift(c(0.5, -0.25));
        for k in 0..5 {
            let t = c(0.1 * k as f64, 0.05);
            let lhs = g.eval(t);
            let rhs = f.eval(t + c(0.5, -0.25));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
