//! Branch series of a spectral curve over an unramified base point and the
//! residue Hamiltonians read off their coefficients.

use num_complex::Complex64;

use super::matrix::CharPoly;
use super::PolymatError;
use crate::poly;

const RAMIFIED_TOL: f64 = 1e-6;

type Series = Vec<Complex64>;

fn trunc_mul(a: &Series, b: &Series, k: usize) -> Series {
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    for (i, &ai) in a.iter().enumerate().take(k) {
        for (j, &bj) in b.iter().enumerate().take(k - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn trunc_add(a: &Series, b: &Series, k: usize) -> Series {
    (0..k)
        .map(|i| {
            a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default()
        })
        .collect()
}

fn trunc_inv(a: &Series, k: usize) -> Series {
    assert!(a[0].norm() > 0.0, "series inverse needs a unit");
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    out[0] = 1.0 / a[0];
    for n in 1..k {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=n {
            acc += a.get(j).copied().unwrap_or_default() * out[n - j];
        }
        out[n] = -acc / a[0];
    }
    out
}

/// Truncated series y(z) per sheet over an unramified base point, satisfying
/// P(x0 + z, y(z)) = O(z^{order+1}).
#[derive(Debug, Clone)]
pub struct BranchExpansion {
    pub x0: Complex64,
    /// One coefficient vector z^0..z^order per sheet.
    pub sheets: Vec<Series>,
    pub order: usize,
}

impl BranchExpansion {
    /// Expand every sheet of P(x, y) = 0 around x0 to the given order by
    /// Newton iteration on truncated power series.
    pub fn compute(b: &CharPoly, x0: Complex64, order: usize) -> Result<Self, PolymatError> {
        let k = order + 1;
        let fiber = b.fiber(x0);
        let scale = fiber.norm().max(1.0);
        let ys = poly::roots(&fiber).map_err(poly::PolyError::from)?;
        let dy = fiber.derivative();
        for (i, &yi) in ys.iter().enumerate() {
            if dy.eval(yi).norm() <= RAMIFIED_TOL * scale {
                return Err(PolymatError::RamifiedFiber);
            }
            for &yj in ys.iter().skip(i + 1) {
                if (yi - yj).norm() <= RAMIFIED_TOL * scale {
                    return Err(PolymatError::RamifiedFiber);
                }
            }
        }
        // Shifted coefficients c_i(z) = b_i(x0 + z), truncated.
        let r = b.r;
        let coeffs: Vec<Series> = b
            .b
            .iter()
            .map(|bi| {
                let shifted = bi.shift(x0);
                (0..k).map(|t| shifted.coeff(t)).collect()
            })
            .collect();
        let eval_p = |y: &Series| -> Series {
            let mut acc = vec![Complex64::new(0.0, 0.0); k];
            acc[0] = Complex64::new(1.0, 0.0);
            for ci in &coeffs {
                acc = trunc_add(&trunc_mul(&acc, y, k), ci, k);
            }
            acc
        };
        let eval_py = |y: &Series| -> Series {
            // d/dy of y^r + sum c_i y^{r-i}.
            let mut acc = vec![Complex64::new(0.0, 0.0); k];
            acc[0] = Complex64::new(r as f64, 0.0);
            for (i, ci) in coeffs.iter().enumerate().take(r - 1) {
                let mult = (r - 1 - i) as f64;
                let scaled: Series = ci.iter().map(|c| c * mult).collect();
                acc = trunc_add(&trunc_mul(&acc, y, k), &scaled, k);
            }
            acc
        };
        let iters = (usize::BITS - k.leading_zeros()) as usize + 2;
        let mut sheets = Vec::with_capacity(ys.len());
        for &y0 in &ys {
            let mut y = vec![Complex64::new(0.0, 0.0); k];
            y[0] = y0;
            for _ in 0..iters {
                let p = eval_p(&y);
                let py = eval_py(&y);
                let step = trunc_mul(&p, &trunc_inv(&py, k), k);
                for (yc, sc) in y.iter_mut().zip(&step) {
                    *yc -= sc;
                }
            }
            sheets.push(y);
        }
        Ok(Self { x0, sheets, order })
    }
}

/// Residue Hamiltonians over an unramified point: the coefficient of
/// z^{j-1} in the branch series of each sheet, j >= 1.
pub fn branch_residue_hamiltonians(
    b: &CharPoly,
    x0: Complex64,
    j: usize,
) -> Result<Vec<Complex64>, PolymatError> {
    assert!(j >= 1);
    // Depth j + 2 leaves guard terms past the extracted coefficient.
    let exp = BranchExpansion::compute(b, x0, j + 1)?;
    Ok(exp.sheets.iter().map(|s| s[j - 1]).collect())
}

/// Square-root power series of F with prescribed constant term s0 (one of the
/// two square roots of F[0]). Independent oracle for the r = 2 case.
pub fn sqrt_series(f: &Series, s0: Complex64, k: usize) -> Series {
    assert!((s0 * s0 - f[0]).norm() <= 1e-9 * (1.0 + f[0].norm()));
    let mut s = vec![Complex64::new(0.0, 0.0); k];
    s[0] = s0;
    for n in 1..k {
        let mut acc = f.get(n).copied().unwrap_or_default();
        for m in 1..n {
            acc -= s[m] * s[n - m];
        }
        s[n] = acc / (2.0 * s0);
    }
    s
}
