//! The cubic condition on period maps of families of tori: finite-difference
//! period tensors, the Koszul-symmetry defect, Hessian-generated samplers,
//! and Siegel upper-half-space membership.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CubicError {
    #[error("period sampler failed: {0}")]
    SamplerFailure(String),
    #[error("sampled period matrix is not symmetric (defect {0:.3e})")]
    NotSymmetric(f64),
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Evaluation contract for a period map: b in C^g maps to a symmetric g x g
/// complex matrix p(b).
pub struct PeriodSampler {
    pub g: usize,
    /// Recommended finite-difference step for this sampler.
    pub h: f64,
    eval: Box<dyn Fn(&[Complex64]) -> Result<DMatrix<Complex64>, CubicError>>,
}

impl PeriodSampler {
    pub fn new(
        g: usize,
        h: f64,
        eval: impl Fn(&[Complex64]) -> Result<DMatrix<Complex64>, CubicError> + 'static,
    ) -> Self {
        Self {
            g,
            h,
            eval: Box::new(eval),
        }
    }

    /// Evaluate and enforce the symmetry contract.
    pub fn sample(&self, b: &[Complex64]) -> Result<DMatrix<Complex64>, CubicError> {
        assert_eq!(b.len(), self.g);
        let m = (self.eval)(b)?;
        assert_eq!(m.nrows(), self.g);
        assert_eq!(m.ncols(), self.g);
        let scale = m.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
        let defect = asymmetry(&m);
        if defect > SYMMETRY_TOL * scale {
            return Err(CubicError::NotSymmetric(defect));
        }
        Ok(m)
    }
}

fn asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            d = d.max((m[(i, j)] - m[(j, i)]).norm());
        }
    }
    d
}

/// T_{ijk} = dp_{jk}/db_i by central differences; symmetric in (j,k) by
/// construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicTensor {
    pub g: usize,
    pub h: f64,
    t: Vec<Complex64>,
}

impl CubicTensor {
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.t[(i * self.g + j) * self.g + k]
    }

    /// Max entry magnitude.
    pub fn scale(&self) -> f64 {
        self.t.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Full symmetrization over all index permutations.
    pub fn symmetrized(&self) -> Self {
        let g = self.g;
        let mut t = vec![Complex64::new(0.0, 0.0); g * g * g];
        for i in 0..g {
            for j in 0..g {
                for k in 0..g {
                    let perms = [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ];
                    let avg: Complex64 =
                        perms.iter().map(|&(a, b, c)| self.get(a, b, c)).sum::<Complex64>() / 6.0;
                    t[(i * g + j) * g + k] = avg;
                }
            }
        }
        Self { g, h: self.h, t }
    }
}

/// Central-difference derivative tensor of a period sampler at b0.
pub fn period_tensor(
    s: &PeriodSampler,
    b0: &[Complex64],
    h: f64,
) -> Result<CubicTensor, CubicError> {
    assert!(h > 0.0);
    let g = s.g;
    assert_eq!(b0.len(), g);
    let mut t = vec![Complex64::new(0.0, 0.0); g * g * g];
    for i in 0..g {
        let mut bp = b0.to_vec();
        bp[i] += Complex64::new(h, 0.0);
        let mut bm = b0.to_vec();
        bm[i] -= Complex64::new(h, 0.0);
        let pp = s.sample(&bp)?;
        let pm = s.sample(&bm)?;
        for j in 0..g {
            for k in 0..g {
                t[(i * g + j) * g + k] = (pp[(j, k)] - pm[(j, k)]) / (2.0 * h);
            }
        }
    }
    Ok(CubicTensor { g, h, t })
}

/// Koszul-symmetry obstruction max |T_{ijk} - T_{jik}|; zero iff T is a
/// symmetric cubic at the sampled point.
pub fn cubic_defect(t: &CubicTensor) -> f64 {
    let mut d = 0.0_f64;
    for i in 0..t.g {
        for j in 0..t.g {
            for k in 0..t.g {
                d = d.max((t.get(i, j, k) - t.get(j, i, k)).norm());
            }
        }
    }
    d
}

/// Finite-difference Hessian of a scalar prepotential, packaged as a period
/// sampler. Symmetric by the symmetrized stencil.
pub fn hessian_sampler(
    f: impl Fn(&[Complex64]) -> Complex64 + 'static,
    g: usize,
    h: f64,
) -> PeriodSampler {
    assert!(h > 0.0);
    PeriodSampler::new(g, h, move |b: &[Complex64]| {
        let hc = Complex64::new(h, 0.0);
        let mut m = DMatrix::<Complex64>::zeros(g, g);
        for j in 0..g {
            for k in j..g {
                let mut bpp = b.to_vec();
                bpp[j] += hc;
                bpp[k] += hc;
                let mut bpm = b.to_vec();
                bpm[j] += hc;
                bpm[k] -= hc;
                let mut bmp = b.to_vec();
                bmp[j] -= hc;
                bmp[k] += hc;
                let mut bmm = b.to_vec();
                bmm[j] -= hc;
                bmm[k] -= hc;
                let val = (f(&bpp) - f(&bpm) - f(&bmp) + f(&bmm)) / (4.0 * hc * hc);
                m[(j, k)] = val;
                m[(k, j)] = val;
            }
        }
        Ok(m)
    })
}

/// Multivariate polynomial prepotential: a sum of monomial terms
/// coeff * prod b_i^{exps[i]}. Supports exact partial derivatives, so the
/// induced Hessian sampler has no stencil error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultivariatePolynomial {
    pub g: usize,
    pub terms: Vec<(Complex64, Vec<u32>)>,
}

impl MultivariatePolynomial {
    pub fn new(g: usize, terms: Vec<(Complex64, Vec<u32>)>) -> Self {
        assert!(terms.iter().all(|(_, e)| e.len() == g));
        Self { g, terms }
    }

    pub fn eval(&self, b: &[Complex64]) -> Complex64 {
        assert_eq!(b.len(), self.g);
        self.terms
            .iter()
            .map(|(c, exps)| {
                let mut acc = *c;
                for (bi, &e) in b.iter().zip(exps) {
                    acc *= bi.powu(e);
                }
                acc
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, exps)| exps[i] > 0)
            .map(|(c, exps)| {
                let mut e = exps.clone();
                let mult = e[i] as f64;
                e[i] -= 1;
                (c * mult, e)
            })
            .collect();
        Self { g: self.g, terms }
    }
}

/// Exact (symbolic) Hessian of a polynomial prepotential as a period sampler.
pub fn polynomial_hessian_sampler(p: &MultivariatePolynomial, h: f64) -> PeriodSampler {
    let g = p.g;
    let mut hessian = Vec::with_capacity(g * g);
    for j in 0..g {
        let pj = p.partial(j);
        for k in 0..g {
            hessian.push(pj.partial(k));
        }
    }
    PeriodSampler::new(g, h, move |b: &[Complex64]| {
        Ok(DMatrix::from_fn(g, g, |j, k| hessian[j * g + k].eval(b)))
    })
}

const SIEGEL_TOL: f64 = 1e-10;

/// Membership in the Siegel upper half space: symmetric with positive
/// definite imaginary part.
pub fn siegel_check(p: &DMatrix<Complex64>) -> bool {
    assert_eq!(p.nrows(), p.ncols());
    let scale = p.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
    if asymmetry(p) > SIEGEL_TOL * scale {
        return false;
    }
    let g = p.nrows();
    let im = DMatrix::<f64>::from_fn(g, g, |i, j| (p[(i, j)].im + p[(j, i)].im) / 2.0);
    let eig = im.symmetric_eigen();
    eig.eigenvalues.iter().all(|&l| l > SIEGEL_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_sampler_gives_zero_tensor() {
        let s = PeriodSampler::new(2, 1e-4, |_| {
            Ok(DMatrix::from_fn(2, 2, |i, j| {
                c(if i == j { 2.0 } else { 0.5 }, 1.0)
            }))
        });
        let t = period_tensor(&s, &[c(0.0, 0.0), c(0.0, 0.0)], 1e-4).unwrap();
        assert!(t.scale() < 1e-10);
        assert!(cubic_defect(&t) < 1e-10);
    }

    #[test]
    fn cubic_prepotential_has_constant_third_partials() {
        // F = b_1^2 b_2: third partials T_{112} = T_{121} = T_{211} = 2.
        let p = MultivariatePolynomial::new(2, vec![(c(1.0, 0.0), vec![2, 1])]);
        let s = polynomial_hessian_sampler(&p, 1e-4);
        let t = period_tensor(&s, &[c(0.3, 0.1), c(-0.2, 0.4)], 1e-4).unwrap();
        for (i, j, k) in [(0, 0, 1), (0, 1, 0), (1, 0, 0)] {
            assert!((t.get(i, j, k) - c(2.0, 0.0)).norm() < 1e-9);
        }
        assert!(t.get(0, 0, 0).norm() < 1e-9);
        assert!(t.get(1, 1, 1).norm() < 1e-9);
        assert!(t.get(0, 1, 1).norm() < 1e-9);
        assert!(cubic_defect(&t) < 1e-9);
    }

    #[test]
    fn linear_sampler_recovers_its_slopes_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = 3;
        let cs: Vec<DMatrix<Complex64>> = (0..g)
            .map(|_| {
                let mut m = DMatrix::from_fn(g, g, |_, _| {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                let mt = m.transpose();
                m = (&m + &mt) * c(0.5, 0.0);
                m
            })
            .collect();
        let cs2 = cs.clone();
        let s = PeriodSampler::new(g, 1e-4, move |b: &[Complex64]| {
            let mut acc = DMatrix::<Complex64>::zeros(g, g);
            for (bi, ci) in b.iter().zip(&cs2) {
                acc += ci * *bi;
            }
            Ok(acc)
        });
        let b0 = vec![c(0.1, 0.0), c(0.2, 0.0), c(-0.3, 0.0)];
        let t = period_tensor(&s, &b0, 1e-3).unwrap();
        for i in 0..g {
            for j in 0..g {
                for k in 0..g {
                    assert!((t.get(i, j, k) - cs[i][(j, k)]).norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn skew_counterexample_has_defect_one() {
        // p(b) = [[b_2, 0], [0, b_1]] is symmetric pointwise but not a
        // Hessian: T_{011} = 1 while T_{101} = 0.
        let s = skew_sampler();
        for &h in &[1e-2, 1e-3, 1e-4] {
            let t = period_tensor(&s, &[c(0.0, 0.0), c(0.0, 0.0)], h).unwrap();
            let d = cubic_defect(&t);
            assert!((d - 1.0).abs() < 1e-9, "h = {} d = {}", h, d);
            assert!(cubic_defect(&t.symmetrized()) < 1e-12);
        }
    }

    fn skew_sampler() -> PeriodSampler {
        PeriodSampler::new(2, 1e-4, |b: &[Complex64]| {
            let mut m = DMatrix::<Complex64>::zeros(2, 2);
            m[(0, 0)] = b[1];
            m[(1, 1)] = b[0];
            Ok(m)
        })
    }

    #[test]
    fn finite_difference_hessian_matches_known_values() {
        let s = hessian_sampler(|b: &[Complex64]| b.iter().map(|x| x * x).sum(), 3, 1e-4);
        let m = s.sample(&[c(0.4, 0.0), c(-0.1, 0.2), c(0.0, 0.0)]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) };
                assert!((m[(i, j)] - expect).norm() < 1e-6);
            }
        }
        let s2 = hessian_sampler(|b: &[Complex64]| b[0] * b[0] * b[0], 2, 1e-4);
        let m2 = s2.sample(&[c(0.5, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((m2[(0, 0)] - c(3.0, 0.0)).norm() < 1e-5);
        assert!(m2[(0, 1)].norm() < 1e-6 && m2[(1, 1)].norm() < 1e-6);
    }

    #[test]
    fn fd_hessian_sampler_passes_defect_check() {
        let f = |b: &[Complex64]| {
            b[0] * b[0] * b[1] + b[1] * b[1] * b[2] * c(0.3, 0.2) + b[2].powu(4)
        };
        let s = hessian_sampler(f, 3, 1e-4);
        let b0 = vec![c(0.2, 0.1), c(-0.4, 0.0), c(0.3, -0.2)];
        let t = period_tensor(&s, &b0, 1e-4).unwrap();
        assert!(cubic_defect(&t) < 1e-8 * t.scale().max(1.0));
    }

    #[test]
    fn analytic_hessian_defect_shrinks_quadratically() {
        // Per-variable degree <= 4 with total degree 5 so the leading defect
        // term h^2/6 (d_i^3 d_j d_k - d_j^3 d_i d_k) F is nonzero.
        let p = MultivariatePolynomial::new(2, vec![(c(1.0, 0.0), vec![4, 1])]);
        let s = polynomial_hessian_sampler(&p, 1e-2);
        let b0 = vec![c(0.7, 0.0), c(0.4, 0.0)];
        let d1 = cubic_defect(&period_tensor(&s, &b0, 1e-2).unwrap());
        let d2 = cubic_defect(&period_tensor(&s, &b0, 5e-3).unwrap());
        let ratio = d1 / d2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {}", ratio);
        let d_small = cubic_defect(&period_tensor(&s, &b0, 1e-4).unwrap());
        let scale = period_tensor(&s, &b0, 1e-4).unwrap().scale();
        assert!(d_small < 1e-6 * scale.max(1.0));
    }

    #[test]
    fn defect_is_permutation_invariant() {
        let s = skew_sampler();
        let t = period_tensor(&s, &[c(0.3, 0.0), c(-0.1, 0.0)], 1e-3).unwrap();
        // Relabel coordinates 0 <-> 1 in the sampler.
        let s_swapped = PeriodSampler::new(2, 1e-4, |b: &[Complex64]| {
            let mut m = DMatrix::<Complex64>::zeros(2, 2);
            m[(1, 1)] = b[0];
            m[(0, 0)] = b[1];
            Ok(m)
        });
        let t2 = period_tensor(&s_swapped, &[c(-0.1, 0.0), c(0.3, 0.0)], 1e-3).unwrap();
        assert!((cubic_defect(&t) - cubic_defect(&t2)).abs() < 1e-12);
    }

    #[test]
    fn sampler_rejects_asymmetric_matrices() {
        let s = PeriodSampler::new(2, 1e-4, |_| {
            let mut m = DMatrix::<Complex64>::zeros(2, 2);
            m[(0, 1)] = c(1.0, 0.0);
            Ok(m)
        });
        assert!(matches!(
            s.sample(&[c(0.0, 0.0); 2]),
            Err(CubicError::NotSymmetric(_))
        ));
    }

    #[test]
    fn siegel_membership_examples() {
        let i_id = DMatrix::from_fn(2, 2, |i, j| if i == j { c(0.0, 1.0) } else { c(0.0, 0.0) });
        assert!(siegel_check(&i_id));

        let real_sym = DMatrix::from_fn(2, 2, |i, j| c((i + j) as f64, 0.0));
        assert!(!siegel_check(&real_sym));

        let mut p = DMatrix::<Complex64>::zeros(2, 2);
        p[(0, 0)] = c(0.0, 2.0);
        p[(0, 1)] = c(1.0, 0.0);
        p[(1, 0)] = c(1.0, 0.0);
        p[(1, 1)] = c(0.0, 1.0);
        assert!(siegel_check(&p));

        let mut q = p.clone();
        q[(0, 1)] = c(1.0, 0.1);
        assert!(!siegel_check(&q)); // asymmetric
    }
}
