//! Kostant-Kirillov Poisson bracket on products of matrix algebras, spectral
//! coefficient functionals, and the induced isospectral flows.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::{char_poly, CharPoly};
use super::residue::{reconstruct_lenient, ResidueTuple};
use super::PolymatError;
use crate::poly;

/// Differentiable functional on residue tuples. The default gradient is a
/// central finite difference in each matrix entry; the step is relative to
/// the tuple scale. Gradients use the trace pairing, so the (l,k) entry of
/// the gradient matrix is the partial in the (k,l) entry of the factor.
pub trait TupleFunctional {
    fn eval(&self, t: &ResidueTuple) -> Result<Complex64, PolymatError>;

    fn gradient(&self, t: &ResidueTuple) -> Result<Vec<DMatrix<Complex64>>, PolymatError> {
        fd_gradient(&|s| self.eval(s), t, 1e-6)
    }
}

impl<F> TupleFunctional for F
where
    F: Fn(&ResidueTuple) -> Result<Complex64, PolymatError>,
{
    fn eval(&self, t: &ResidueTuple) -> Result<Complex64, PolymatError> {
        self(t)
    }
}

/// Central finite-difference gradient with the trace-pairing convention.
pub(crate) fn fd_gradient(
    f: &dyn Fn(&ResidueTuple) -> Result<Complex64, PolymatError>,
    t: &ResidueTuple,
    h_rel: f64,
) -> Result<Vec<DMatrix<Complex64>>, PolymatError> {
    let r = t.rank();
    let h = h_rel * t.norm().max(1.0);
    let hc = Complex64::new(h, 0.0);
    let mut grads = Vec::with_capacity(t.matrices.len());
    let mut work = t.clone();
    for i in 0..t.matrices.len() {
        let mut g = DMatrix::<Complex64>::zeros(r, r);
        for k in 0..r {
            for l in 0..r {
                let orig = work.matrices[i][(k, l)];
                work.matrices[i][(k, l)] = orig + hc;
                let fp = f(&work)?;
                work.matrices[i][(k, l)] = orig - hc;
                let fm = f(&work)?;
                work.matrices[i][(k, l)] = orig;
                // Trace pairing: gradient entry (l,k) pairs with delta (k,l).
                g[(l, k)] = (fp - fm) / (2.0 * hc);
            }
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Linear functional t -> sum_i trace(R_i C_i) with analytic gradient C_i.
pub struct LinearFunctional {
    pub jet: Vec<DMatrix<Complex64>>,
}

impl TupleFunctional for LinearFunctional {
    fn eval(&self, t: &ResidueTuple) -> Result<Complex64, PolymatError> {
        assert_eq!(self.jet.len(), t.matrices.len());
        Ok(self
            .jet
            .iter()
            .zip(&t.matrices)
            .map(|(c, r)| (r * c).trace())
            .sum())
    }

    fn gradient(&self, _t: &ResidueTuple) -> Result<Vec<DMatrix<Complex64>>, PolymatError> {
        Ok(self.jet.clone())
    }
}

/// H_{i,j}: the coefficient of x^j in b_i of the reconstructed matrix.
pub struct SpectralFunctional {
    pub i: usize,
    pub j: usize,
}

impl SpectralFunctional {
    pub fn new(i: usize, j: usize) -> Self {
        assert!(i >= 1);
        Self { i, j }
    }
}

impl TupleFunctional for SpectralFunctional {
    fn eval(&self, t: &ResidueTuple) -> Result<Complex64, PolymatError> {
        let a = reconstruct_lenient(t)?;
        let cp = char_poly(&a);
        assert!(self.i <= cp.r, "H_{{i,j}} needs i <= r");
        Ok(cp.b[self.i - 1].coeff(self.j))
    }

    fn gradient(&self, t: &ResidueTuple) -> Result<Vec<DMatrix<Complex64>>, PolymatError> {
        if self.i == 1 {
            // b_1 = -trace A is linear: gradient of [x^j] b_1 in R_i is
            // -[x^j](ell_i) I with ell_i the scaled Lagrange basis polynomial.
            let r = t.rank();
            let mut grads = Vec::with_capacity(t.matrices.len());
            for i in 0..t.points.len() {
                let others: Vec<Complex64> = t
                    .points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &a)| a)
                    .collect();
                let ell = poly::ComplexPolynomial::from_roots(&others);
                let coeff = -ell.coeff(self.j);
                grads.push(DMatrix::<Complex64>::identity(r, r) * coeff);
            }
            while grads.len() < t.matrices.len() {
                grads.push(DMatrix::<Complex64>::zeros(r, r));
            }
            return Ok(grads);
        }
        fd_gradient(&|s| self.eval(s), t, 1e-6)
    }
}

/// Kostant-Kirillov bracket sum_i trace(R_i [grad_i F, grad_i G]).
pub fn kk_bracket(
    f: &dyn TupleFunctional,
    g: &dyn TupleFunctional,
    t: &ResidueTuple,
) -> Result<Complex64, PolymatError> {
    let gf = f.gradient(t)?;
    let gg = g.gradient(t)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..t.matrices.len() {
        let comm = &gf[i] * &gg[i] - &gg[i] * &gf[i];
        acc += (&t.matrices[i] * comm).trace();
    }
    Ok(acc)
}

/// One recorded step of an isospectral flow.
#[derive(Debug, Clone)]
pub struct TupleFlowStep {
    pub step: usize,
    pub tuple: ResidueTuple,
    /// Relative drift of the characteristic-polynomial coefficients from the
    /// initial tuple.
    pub charpoly_drift: f64,
    /// Max eigenvalue drift across factors from the initial tuple.
    pub leaf_drift: f64,
}

fn flow_field(
    h: &dyn TupleFunctional,
    t: &ResidueTuple,
) -> Result<Vec<DMatrix<Complex64>>, PolymatError> {
    let grads = h.gradient(t)?;
    Ok(t.matrices
        .iter()
        .zip(&grads)
        .map(|(r, g)| r * g - g * r)
        .collect())
}

fn add_scaled(t: &ResidueTuple, v: &[DMatrix<Complex64>], s: f64) -> ResidueTuple {
    let mut out = t.clone();
    let sc = Complex64::new(s, 0.0);
    for (m, dv) in out.matrices.iter_mut().zip(v) {
        *m += dv * sc;
    }
    out
}

fn charpoly_coeffs(t: &ResidueTuple) -> Result<Vec<Complex64>, PolymatError> {
    let cp: CharPoly = char_poly(&reconstruct_lenient(t)?);
    let mut out = Vec::new();
    for b in &cp.b {
        out.extend_from_slice(b.coeffs());
    }
    Ok(out)
}

fn factor_eigenvalues(t: &ResidueTuple) -> Result<Vec<Vec<Complex64>>, PolymatError> {
    let mut out = Vec::new();
    for m in &t.matrices {
        let schur = m
            .clone()
            .try_schur(1e-14, 10_000)
            .ok_or(PolymatError::IllConditioned)?;
        let ev = schur.eigenvalues().ok_or(PolymatError::IllConditioned)?;
        out.push(ev.iter().copied().collect());
    }
    Ok(out)
}

const FLOW_STEP_DRIFT_LIMIT: f64 = 1e-3;

/// Fixed-step RK4 integration of the Lax field R_i' = [R_i, grad_i H].
///
/// Drift of the characteristic polynomial and of each factor's eigenvalues is
/// recorded per step; a per-step drift above 1e-3 aborts the run.
pub fn kk_flow(
    h: &dyn TupleFunctional,
    t0: &ResidueTuple,
    dt: f64,
    steps: usize,
) -> Result<Vec<TupleFlowStep>, PolymatError> {
    let cp0 = charpoly_coeffs(t0)?;
    let ev0 = factor_eigenvalues(t0)?;
    let cp_scale = cp0.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
    let mut traj = Vec::with_capacity(steps + 1);
    let mut cur = t0.clone();
    let mut prev_drift = 0.0_f64;
    traj.push(TupleFlowStep {
        step: 0,
        tuple: cur.clone(),
        charpoly_drift: 0.0,
        leaf_drift: 0.0,
    });
    for step in 1..=steps {
        let k1 = flow_field(h, &cur)?;
        let k2 = flow_field(h, &add_scaled(&cur, &k1, dt / 2.0))?;
        let k3 = flow_field(h, &add_scaled(&cur, &k2, dt / 2.0))?;
        let k4 = flow_field(h, &add_scaled(&cur, &k3, dt))?;
        let mut next = cur.clone();
        for i in 0..next.matrices.len() {
            let incr = (&k1[i] + &k2[i] * Complex64::new(2.0, 0.0)
                + &k3[i] * Complex64::new(2.0, 0.0)
                + &k4[i])
                * Complex64::new(dt / 6.0, 0.0);
            next.matrices[i] += incr;
        }
        cur = next;
        let cp = charpoly_coeffs(&cur)?;
        let charpoly_drift = cp
            .iter()
            .zip(&cp0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / cp_scale;
        if (charpoly_drift - prev_drift).abs() > FLOW_STEP_DRIFT_LIMIT {
            return Err(PolymatError::StepRejected(
                (charpoly_drift - prev_drift).abs(),
            ));
        }
        prev_drift = charpoly_drift;
        let ev = factor_eigenvalues(&cur)?;
        let leaf_drift = ev
            .iter()
            .zip(&ev0)
            .map(|(a, b)| poly::multiset_distance(a, b))
            .fold(0.0, f64::max);
        traj.push(TupleFlowStep {
            step,
            tuple: cur.clone(),
            charpoly_drift,
            leaf_drift,
        });
    }
    Ok(traj)
}
