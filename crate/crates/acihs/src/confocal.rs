//! Confocal-quadric geometry and constrained flows.
//!
//! The phase space is the tangent bundle of the unit sphere,
//! TS = { (x, y) : sum x_k^2 = 1, sum x_k y_k = 0 }, carrying the ambient
//! symplectic form sum 2 dx_k ^ dy_k reduced by the two constraints. The
//! conserved quantities are the rational-residue integrals
//! F_k = x_k^2 + sum_{l != k} (x_k y_l - x_l y_k)^2 / (a_k - a_l),
//! whose level sets cut out the tangency spectrum of the line through y
//! in direction x with respect to the confocal family
//! sum x_k^2 / (a_k - lambda) = 1.

use crate::poly::{self, ComplexPolynomial};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Constraint tolerance for TS membership.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Symplectic scale: the ambient form is `SYMPLECTIC_SCALE * sum dx ^ dy`,
/// fixed to 2 to match the nilpotent-cover normalization.
pub const SYMPLECTIC_SCALE: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfocalError {
    #[error("axes must be strictly increasing, positive, and well separated")]
    BadAxes,
    #[error("point violates the TS constraints beyond tolerance")]
    NotConstrained,
    #[error("tangency polynomial is numerically zero; line is degenerate")]
    DegenerateLine,
    #[error("constraint drift {0:.3e} exceeded 1e-3 in one step; reduce dt")]
    StepRejected(f64),
    #[error("constraint Gram matrix is singular at this point")]
    DegenerateConstraints,
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
}

/// Axis parameters a_1 < ... < a_{n+1} of the confocal family, all positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfocalFamily {
    axes: Vec<f64>,
}

impl ConfocalFamily {
    pub fn new(axes: Vec<f64>) -> Result<Self, ConfocalError> {
        if axes.is_empty() || axes[0] <= 0.0 {
            return Err(ConfocalError::BadAxes);
        }
        let scale = axes.iter().fold(1.0_f64, |m, &a| m.max(a.abs()));
        for w in axes.windows(2) {
            if w[1] - w[0] <= 1e-10 * scale {
                return Err(ConfocalError::BadAxes);
            }
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    /// Ambient dimension n+1.
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Number of tangency values n.
    pub fn n(&self) -> usize {
        self.axes.len() - 1
    }

    /// f_1(t) = prod_k (t - a_k), the fixed factor of the spectral model.
    pub fn axis_polynomial(&self) -> ComplexPolynomial {
        let roots: Vec<Complex64> = self.axes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        ComplexPolynomial::from_roots(&roots)
    }
}

/// A point (x, y) of phase space, optionally constrained to TS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub constrained: bool,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        Self {
            x,
            y,
            constrained: false,
        }
    }

    /// Build a point asserting TS membership.
    pub fn constrained(x: Vec<f64>, y: Vec<f64>) -> Result<Self, ConfocalError> {
        assert_eq!(x.len(), y.len());
        let p = Self {
            x,
            y,
            constrained: true,
        };
        let (c1, c2) = p.constraint_values();
        if c1.abs() > CONSTRAINT_TOL || c2.abs() > CONSTRAINT_TOL {
            return Err(ConfocalError::NotConstrained);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// (sum x^2 - 1, sum x y).
    pub fn constraint_values(&self) -> (f64, f64) {
        let c1: f64 = self.x.iter().map(|x| x * x).sum::<f64>() - 1.0;
        let c2: f64 = self.x.iter().zip(&self.y).map(|(x, y)| x * y).sum();
        (c1, c2)
    }
}

/// Sorted multiset of tangency values of a line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencySpectrum {
    pub values: Vec<Complex64>,
}

/// The Uhlenbeck integrals F_1..F_{n+1}.
///
/// The cross terms cancel antisymmetrically, so sum_k F_k = sum_k x_k^2
/// for any point, constrained or not.
pub fn uhlenbeck_integrals(p: &PhasePoint, fam: &ConfocalFamily) -> Vec<f64> {
    let a = fam.axes();
    let n1 = fam.dim();
    assert_eq!(p.dim(), n1);
    let mut f = vec![0.0; n1];
    for k in 0..n1 {
        let mut acc = p.x[k] * p.x[k];
        for l in 0..n1 {
            if l != k {
                let w = p.x[k] * p.y[l] - p.x[l] * p.y[k];
                acc += w * w / (a[k] - a[l]);
            }
        }
        f[k] = acc;
    }
    f
}

/// sum_k F_k prod_{l != k} (a_l - lambda), the tangency condition cleared
/// of denominators; a polynomial of degree <= n in lambda.
pub fn tangency_polynomial(p: &PhasePoint, fam: &ConfocalFamily) -> ComplexPolynomial {
    let f = uhlenbeck_integrals(p, fam);
    let a = fam.axes();
    let mut acc = ComplexPolynomial::zero();
    for k in 0..fam.dim() {
        let mut term = ComplexPolynomial::constant(Complex64::new(f[k], 0.0));
        for (l, &al) in a.iter().enumerate() {
            if l != k {
                // (a_l - lambda)
                term = term.mul(&ComplexPolynomial::from_real(&[al, -1.0]));
            }
        }
        acc = acc.add(&term);
    }
    acc
}

/// Tangency values of the line through y in direction x: the roots of the
/// tangency polynomial, sorted lexicographically by (re, im).
pub fn tangency_values(
    p: &PhasePoint,
    fam: &ConfocalFamily,
) -> Result<TangencySpectrum, ConfocalError> {
    let tp = tangency_polynomial(p, fam);
    if tp.is_zero() {
        return Err(ConfocalError::DegenerateLine);
    }
    let mut vals = if tp.degree() == Some(0) {
        Vec::new()
    } else {
        poly::roots(&tp)?
    };
    poly::sort_lex(&mut vals);
    Ok(TangencySpectrum { values: vals })
}

/// H = 1/2 sum a_k x_k^2 + 1/2 sum y_k^2; equals 1/2 sum a_k F_k on TS.
pub fn neumann_hamiltonian(p: &PhasePoint, fam: &ConfocalFamily) -> f64 {
    let a = fam.axes();
    0.5 * p
        .x
        .iter()
        .zip(a)
        .map(|(x, a)| a * x * x)
        .sum::<f64>()
        + 0.5 * p.y.iter().map(|y| y * y).sum::<f64>()
}

/// A Hamiltonian on phase space with an analytic or finite-difference gradient.
pub enum Hamiltonian<'a> {
    /// The k-th Uhlenbeck integral F_k (0-based index).
    Uhlenbeck(usize),
    /// The Neumann Hamiltonian 1/2 sum a_k x_k^2 + 1/2 sum y_k^2.
    Neumann,
    /// User-supplied value; gradient by central finite differences.
    #[allow(clippy::type_complexity)]
    Callable(&'a dyn Fn(&PhasePoint, &ConfocalFamily) -> f64),
}

impl Hamiltonian<'_> {
    pub fn eval(&self, p: &PhasePoint, fam: &ConfocalFamily) -> f64 {
        match self {
            Hamiltonian::Uhlenbeck(k) => uhlenbeck_integrals(p, fam)[*k],
            Hamiltonian::Neumann => neumann_hamiltonian(p, fam),
            Hamiltonian::Callable(f) => f(p, fam),
        }
    }

    /// Gradient (dH/dx, dH/dy).
    pub fn gradient(&self, p: &PhasePoint, fam: &ConfocalFamily) -> (Vec<f64>, Vec<f64>) {
        let n1 = p.dim();
        let a = fam.axes();
        match self {
            Hamiltonian::Uhlenbeck(k) => {
                let k = *k;
                let mut gx = vec![0.0; n1];
                let mut gy = vec![0.0; n1];
                gx[k] = 2.0 * p.x[k];
                for m in 0..n1 {
                    if m != k {
                        let w = p.x[k] * p.y[m] - p.x[m] * p.y[k];
                        let d = a[k] - a[m];
                        gx[k] += 2.0 * w * p.y[m] / d;
                        gy[k] += -2.0 * w * p.x[m] / d;
                        gx[m] = -2.0 * w * p.y[k] / d;
                        gy[m] = 2.0 * w * p.x[k] / d;
                    }
                }
                (gx, gy)
            }
            Hamiltonian::Neumann => {
                let gx = p.x.iter().zip(a).map(|(x, a)| a * x).collect();
                let gy = p.y.to_vec();
                (gx, gy)
            }
            Hamiltonian::Callable(f) => {
                let h = 1e-6;
                let mut gx = vec![0.0; n1];
                let mut gy = vec![0.0; n1];
                let mut q = p.clone();
                q.constrained = false;
                for i in 0..n1 {
                    q.x[i] = p.x[i] + h;
                    let plus = f(&q, fam);
                    q.x[i] = p.x[i] - h;
                    let minus = f(&q, fam);
                    q.x[i] = p.x[i];
                    gx[i] = (plus - minus) / (2.0 * h);
                    q.y[i] = p.y[i] + h;
                    let plus = f(&q, fam);
                    q.y[i] = p.y[i] - h;
                    let minus = f(&q, fam);
                    q.y[i] = p.y[i];
                    gy[i] = (plus - minus) / (2.0 * h);
                }
                (gx, gy)
            }
        }
    }
}

/// Dirac bracket of two functions given their gradients, at p.
///
/// Ambient bracket {F, G} = (1/s) sum_k (F_x G_y - F_y G_x) with
/// s = SYMPLECTIC_SCALE, reduced by the constraint pair
/// C1 = sum x^2 - 1, C2 = sum x y.
pub fn dirac_bracket(
    p: &PhasePoint,
    gf: (&[f64], &[f64]),
    gg: (&[f64], &[f64]),
) -> Result<f64, ConfocalError> {
    let s = SYMPLECTIC_SCALE;
    let ambient = |ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]| -> f64 {
        let mut acc = 0.0;
        for k in 0..ax.len() {
            acc += ax[k] * by[k] - ay[k] * bx[k];
        }
        acc / s
    };
    let n1 = p.dim();
    // Constraint gradients: C1 -> (2x, 0), C2 -> (y, x).
    let c1x: Vec<f64> = p.x.iter().map(|x| 2.0 * x).collect();
    let c1y = vec![0.0; n1];
    let c2x = p.y.clone();
    let c2y = p.x.clone();
    let c12 = ambient(&c1x, &c1y, &c2x, &c2y); // = (2/s) sum x^2
    if c12.abs() < 1e-12 {
        return Err(ConfocalError::DegenerateConstraints);
    }
    let fg = ambient(gf.0, gf.1, gg.0, gg.1);
    let f1 = ambient(gf.0, gf.1, &c1x, &c1y);
    let f2 = ambient(gf.0, gf.1, &c2x, &c2y);
    let g1 = ambient(gg.0, gg.1, &c1x, &c1y);
    let g2 = ambient(gg.0, gg.1, &c2x, &c2y);
    // {F,G}_D = {F,G} + ({F,C1}{C2,G} - {F,C2}{C1,G}) / {C1,C2}
    Ok(fg + (f1 * (-g2) - f2 * (-g1)) / c12)
}

/// Dirac-bracket vector field of a Hamiltonian with gradient (hx, hy).
pub fn dirac_field(p: &PhasePoint, hx: &[f64], hy: &[f64]) -> Result<(Vec<f64>, Vec<f64>), ConfocalError> {
    let s = SYMPLECTIC_SCALE;
    let n1 = p.dim();
    let sum_x2: f64 = p.x.iter().map(|x| x * x).sum();
    let c12 = 2.0 * sum_x2 / s;
    if c12.abs() < 1e-12 {
        return Err(ConfocalError::DegenerateConstraints);
    }
    // {C1, H} = (2/s) sum x_j H_{y_j}
    let c1h: f64 = (2.0 / s) * p.x.iter().zip(hy).map(|(x, h)| x * h).sum::<f64>();
    // {C2, H} = (1/s) sum (y_j H_{y_j} - x_j H_{x_j})
    let c2h: f64 = (1.0 / s)
        * p.y
            .iter()
            .zip(hy)
            .map(|(y, h)| y * h)
            .sum::<f64>()
        - (1.0 / s) * p.x.iter().zip(hx).map(|(x, h)| x * h).sum::<f64>();
    let mut dx = vec![0.0; n1];
    let mut dy = vec![0.0; n1];
    for k in 0..n1 {
        // {x_k, H} = H_{y_k}/s ; {x_k, C1} = 0 ; {x_k, C2} = x_k/s
        dx[k] = hy[k] / s - (p.x[k] / s) * c1h / c12;
        // {y_k, H} = -H_{x_k}/s ; {y_k, C1} = -2x_k/s ; {y_k, C2} = -y_k/s
        dy[k] = -hx[k] / s + ((-2.0 * p.x[k] / s) * c2h + (p.y[k] / s) * c1h) / c12;
    }
    Ok((dx, dy))
}

/// One Newton projection step back onto {C1 = 0, C2 = 0} along the
/// constraint gradients.
fn project_ts(x: &mut [f64], y: &mut [f64]) {
    let n1 = x.len();
    let c1: f64 = x.iter().map(|x| x * x).sum::<f64>() - 1.0;
    let c2: f64 = x.iter().zip(y.iter()).map(|(x, y)| x * y).sum();
    // Jacobian rows: J1 = (2x, 0), J2 = (y, x). Solve (J J^T) d = -c,
    // update z += J^T d.
    let g11: f64 = x.iter().map(|x| 4.0 * x * x).sum();
    let g12: f64 = x.iter().zip(y.iter()).map(|(x, y)| 2.0 * x * y).sum();
    let g22: f64 = x.iter().map(|x| x * x).sum::<f64>() + y.iter().map(|y| y * y).sum::<f64>();
    let det = g11 * g22 - g12 * g12;
    if det.abs() < 1e-14 {
        return;
    }
    let d1 = (-c1 * g22 + c2 * g12) / det;
    let d2 = (-c2 * g11 + c1 * g12) / det;
    for k in 0..n1 {
        let (xk, yk) = (x[k], y[k]);
        x[k] += 2.0 * xk * d1 + yk * d2;
        y[k] += xk * d2;
    }
}

/// One trajectory record of a constrained flow.
#[derive(Debug, Clone, Serialize)]
pub struct FlowStep {
    pub step: usize,
    pub point: PhasePoint,
    /// Constraint drift before the per-step projection.
    pub drift: f64,
}

/// Fixed-step RK4 of the Dirac-bracket field of H, with per-step
/// renormalizing projection onto TS.
pub fn dirac_flow(
    h: &Hamiltonian,
    p0: &PhasePoint,
    dt: f64,
    steps: usize,
    fam: &ConfocalFamily,
) -> Result<Vec<FlowStep>, ConfocalError> {
    assert!(dt > 0.0);
    if !p0.constrained {
        let (c1, c2) = p0.constraint_values();
        if c1.abs() > CONSTRAINT_TOL || c2.abs() > CONSTRAINT_TOL {
            return Err(ConfocalError::NotConstrained);
        }
    }
    let mut traj = Vec::with_capacity(steps + 1);
    let mut cur = p0.clone();
    cur.constrained = true;
    traj.push(FlowStep {
        step: 0,
        point: cur.clone(),
        drift: 0.0,
    });
    let field = |q: &PhasePoint| -> Result<(Vec<f64>, Vec<f64>), ConfocalError> {
        let (hx, hy) = h.gradient(q, fam);
        dirac_field(q, &hx, &hy)
    };
    for step in 1..=steps {
        let (mut x, mut y) = rk4_step(&cur, dt, &field)?;
        let c1: f64 = x.iter().map(|x| x * x).sum::<f64>() - 1.0;
        let c2: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        let drift = c1.abs().max(c2.abs());
        if drift > 1e-3 {
            return Err(ConfocalError::StepRejected(drift));
        }
        project_ts(&mut x, &mut y);
        cur = PhasePoint {
            x,
            y,
            constrained: true,
        };
        traj.push(FlowStep {
            step,
            point: cur.clone(),
            drift,
        });
    }
    Ok(traj)
}

fn rk4_step<F>(p: &PhasePoint, dt: f64, field: &F) -> Result<(Vec<f64>, Vec<f64>), ConfocalError>
where
    F: Fn(&PhasePoint) -> Result<(Vec<f64>, Vec<f64>), ConfocalError>,
{
    let n1 = p.dim();
    let at = |x0: &[f64], y0: &[f64], kx: &[f64], ky: &[f64], c: f64| -> PhasePoint {
        let x = (0..n1).map(|i| x0[i] + c * kx[i]).collect();
        let y = (0..n1).map(|i| y0[i] + c * ky[i]).collect();
        PhasePoint {
            x,
            y,
            constrained: false,
        }
    };
    let (k1x, k1y) = field(p)?;
    let (k2x, k2y) = field(&at(&p.x, &p.y, &k1x, &k1y, dt / 2.0))?;
    let (k3x, k3y) = field(&at(&p.x, &p.y, &k2x, &k2y, dt / 2.0))?;
    let (k4x, k4y) = field(&at(&p.x, &p.y, &k3x, &k3y, dt))?;
    let x = (0..n1)
        .map(|i| p.x[i] + dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]))
        .collect();
    let y = (0..n1)
        .map(|i| p.y[i] + dt / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]))
        .collect();
    Ok((x, y))
}

/// One record of a geodesic trajectory on the ellipsoid sum x^2/a = 1.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicStep {
    pub step: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub drift: f64,
}

impl GeodesicStep {
    /// The line through this point in the velocity direction, as a TS point:
    /// direction x = v/|v|, base y = foot of the perpendicular from the origin.
    pub fn line(&self) -> PhasePoint {
        let speed = self.v.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = self.v.iter().map(|v| v / speed).collect();
        let proj: f64 = self.x.iter().zip(&dir).map(|(x, d)| x * d).sum();
        let base: Vec<f64> = self
            .x
            .iter()
            .zip(&dir)
            .map(|(x, d)| x - proj * d)
            .collect();
        PhasePoint {
            x: dir,
            y: base,
            constrained: true,
        }
    }
}

/// Geodesic flow on the ellipsoid sum x_k^2 / a_k = 1 as a second-order
/// system: xdd = mu * (x/a) with mu keeping the acceleration tangent,
/// integrated by RK4 with per-step projection of position and velocity.
pub fn geodesic_flow(
    x0: &[f64],
    v0: &[f64],
    fam: &ConfocalFamily,
    dt: f64,
    steps: usize,
) -> Result<Vec<GeodesicStep>, ConfocalError> {
    assert!(dt > 0.0);
    let a = fam.axes().to_vec();
    let n1 = a.len();
    assert_eq!(x0.len(), n1);
    assert_eq!(v0.len(), n1);
    let g = |x: &[f64]| -> f64 { x.iter().zip(&a).map(|(x, a)| x * x / a).sum::<f64>() - 1.0 };
    let speed0 = v0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tangency: f64 = x0.iter().zip(v0).zip(&a).map(|((x, v), a)| x * v / a).sum();
    if g(x0).abs() > 1e-8 || tangency.abs() > 1e-8 * speed0.max(1.0) || speed0 <= 0.0 {
        return Err(ConfocalError::NotConstrained);
    }
    let accel = |x: &[f64], v: &[f64]| -> Vec<f64> {
        // d^2/dt^2 g = 2 sum v^2/a + 2 sum x xdd / a = 0 with xdd = mu x/a
        let num: f64 = v.iter().zip(&a).map(|(v, a)| v * v / a).sum();
        let den: f64 = x.iter().zip(&a).map(|(x, a)| x * x / (a * a)).sum();
        let mu = -num / den;
        x.iter().zip(&a).map(|(x, a)| mu * x / a).collect()
    };
    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(GeodesicStep {
        step: 0,
        x: x.clone(),
        v: v.clone(),
        drift: 0.0,
    });
    for step in 1..=steps {
        // RK4 on (x, v).
        let add = |x: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(x, k)| x + c * k).collect()
        };
        let k1x = v.clone();
        let k1v = accel(&x, &v);
        let (x2, v2) = (add(&x, &k1x, dt / 2.0), add(&v, &k1v, dt / 2.0));
        let k2x = v2.clone();
        let k2v = accel(&x2, &v2);
        let (x3, v3) = (add(&x, &k2x, dt / 2.0), add(&v, &k2v, dt / 2.0));
        let k3x = v3.clone();
        let k3v = accel(&x3, &v3);
        let (x4, v4) = (add(&x, &k3x, dt), add(&v, &k3v, dt));
        let k4x = v4;
        let k4v = accel(&x4, &k4x);
        for i in 0..n1 {
            x[i] += dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        let drift = g(&x).abs();
        if drift > 1e-3 {
            return Err(ConfocalError::StepRejected(drift));
        }
        // Project position back onto the ellipsoid and velocity onto its
        // tangent plane.
        let s = 1.0 / (g(&x) + 1.0).sqrt();
        for xi in x.iter_mut() {
            *xi *= s;
        }
        let grad: Vec<f64> = x.iter().zip(&a).map(|(x, a)| 2.0 * x / a).collect();
        let gv: f64 = grad.iter().zip(&v).map(|(g, v)| g * v).sum();
        let gg: f64 = grad.iter().map(|g| g * g).sum();
        for i in 0..n1 {
            v[i] -= gv / gg * grad[i];
        }
        traj.push(GeodesicStep {
            step,
            x: x.clone(),
            v: v.clone(),
            drift,
        });
    }
    Ok(traj)
}

/// Rank-1 nilpotent residues of the TS covering: per axis index i,
/// R_i = [[x_i y_i, -x_i^2], [y_i^2, -x_i y_i]].
///
/// On TS the sum has vanishing diagonal and (1,2) entry -sum x_i^2 = -1,
/// so -sum R_i = [[0, 1], [s, 0]] up to the covering's sign convention;
/// the product normalization already absorbs the 1/prod(a_i - a_j)
/// residue factors.
pub fn ts_to_nilpotent(p: &PhasePoint, fam: &ConfocalFamily) -> Vec<[[Complex64; 2]; 2]> {
    assert_eq!(p.dim(), fam.dim());
    p.x.iter()
        .zip(&p.y)
        .map(|(&x, &y)| {
            [
                [Complex64::new(x * y, 0.0), Complex64::new(-x * x, 0.0)],
                [Complex64::new(y * y, 0.0), Complex64::new(-x * y, 0.0)],
            ]
        })
        .collect()
}

/// Uniform random TS point via rejection-free projection: random unit x,
/// random y projected orthogonal to x.
pub fn random_ts_point<R: rand::Rng>(rng: &mut R, n1: usize) -> PhasePoint {
    use rand::distributions::Distribution;
    let normal = rand::distributions::Uniform::new(-1.0, 1.0);
    loop {
        let x: Vec<f64> = (0..n1).map(|_| normal.sample(rng)).collect();
        let nx = x.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nx < 1e-3 {
            continue;
        }
        let x: Vec<f64> = x.iter().map(|x| x / nx).collect();
        let y: Vec<f64> = (0..n1).map(|_| normal.sample(rng)).collect();
        let xy: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        let y: Vec<f64> = y.iter().zip(&x).map(|(y, x)| y - xy * x).collect();
        return PhasePoint {
            x,
            y,
            constrained: true,
        };
    }
}
