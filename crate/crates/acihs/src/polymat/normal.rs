//! Normal forms for polynomial matrices with regular nilpotent leading
//! coefficient, and the 2x2 specialization producing a Mumford triple.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::PolyMatrix;
use super::PolymatError;
use crate::mumford::MumfordTriple;

const REG_TOL: f64 = 1e-8;

fn lower_shift(r: usize) -> DMatrix<Complex64> {
    // J with ones on the first subdiagonal: J e_i = e_{i+1}.
    DMatrix::from_fn(r, r, |i, j| {
        if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Bring A to the normal form with leading coefficient J and the last column
/// of the subleading coefficient equal to (beta_r, 0, ..., 0)^T.
///
/// Returns the normalized matrix and the conjugating matrix g with
/// g A g^{-1} in normal form. The normalized matrix is unique on each
/// conjugation orbit; g is unique up to a scalar.
pub fn normal_form(a: &PolyMatrix) -> Result<(PolyMatrix, DMatrix<Complex64>), PolymatError> {
    let r = a.size();
    assert!(r >= 2, "normal_form needs r >= 2");
    let d = a.degree().ok_or(PolymatError::LeadingNotRegularNilpotent)?;
    assert!(d >= 1, "normal_form needs degree >= 1");
    let ad = a.coefficient_matrix(d);
    let scale = ad.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(PolymatError::LeadingNotRegularNilpotent);
    }
    // Regular nilpotent: rank r-1 power chain, vanishing r-th power.
    let mut pow = DMatrix::<Complex64>::identity(r, r);
    for _ in 0..(r - 1) {
        pow = &ad * pow;
    }
    let pow_r1 = pow.clone();
    let pow_r = &ad * &pow_r1;
    let n1 = pow_r1.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let nr = pow_r.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if nr > REG_TOL * scale.powi(r as i32) || n1 <= REG_TOL * scale.powi(r as i32 - 1) {
        return Err(PolymatError::LeadingNotRegularNilpotent);
    }

    // Step 1: cyclic-vector basis sends the leading coefficient to J.
    let v0 = (0..r)
        .max_by(|&i, &j| {
            let ci = pow_r1.column(i).iter().map(|c| c.norm_sqr()).sum::<f64>();
            let cj = pow_r1.column(j).iter().map(|c| c.norm_sqr()).sum::<f64>();
            ci.partial_cmp(&cj).unwrap()
        })
        .unwrap();
    let mut s = DMatrix::<Complex64>::zeros(r, r);
    let mut col = DMatrix::<Complex64>::zeros(r, 1);
    col[(v0, 0)] = Complex64::new(1.0, 0.0);
    for j in 0..r {
        s.set_column(j, &col.column(0));
        col = &ad * col;
    }
    let g1 = s
        .clone()
        .try_inverse()
        .ok_or(PolymatError::LeadingNotRegularNilpotent)?;
    let a1 = a.conjugate(&g1)?;

    // Step 2: unique unipotent element of C[J] fixing the last column of the
    // subleading coefficient to (beta_r, 0, ..., 0)^T.
    let sub = a1.coefficient_matrix(d - 1);
    let rvec: Vec<Complex64> = (0..r).map(|m| sub[(m, r - 1)]).collect();
    let beta = rvec[0];
    if beta.norm() <= REG_TOL * a1.norm().max(1.0) {
        return Err(PolymatError::BetaZero);
    }
    // Back-substitution: sum_{k=1}^{i} n_k R_{i-k} = -R_i for i = 1..r-1.
    let mut n = vec![Complex64::new(0.0, 0.0); r];
    for i in 1..r {
        let mut acc = -rvec[i];
        for k in 1..i {
            acc -= n[k] * rvec[i - k];
        }
        n[i] = acc / beta;
    }
    let j = lower_shift(r);
    let mut g2 = DMatrix::<Complex64>::identity(r, r);
    let mut jk = DMatrix::<Complex64>::identity(r, r);
    for nk in n.iter().take(r).skip(1) {
        jk = &j * jk;
        g2 += &jk * *nk;
    }
    let a2 = a1.conjugate(&g2)?;
    Ok((a2, &g2 * g1))
}

/// Normalize a traceless 2x2 matrix with b_2 = -f monic of degree 2d-1 to the
/// unique conjugate [[V, U], [W, -V]] with W monic of degree d, U monic of
/// degree d-1, and deg V <= d-2; returned as a Mumford triple.
pub fn theta_complement_normalize(a: &PolyMatrix) -> Result<MumfordTriple, PolymatError> {
    assert_eq!(a.size(), 2, "theta_complement_normalize needs a 2x2 matrix");
    let tr = a.trace();
    assert!(
        tr.norm() <= 1e-9 * a.norm().max(1.0),
        "theta_complement_normalize needs a traceless matrix"
    );
    let (nf, _g) = normal_form(a)?;
    Ok(MumfordTriple {
        u: nf.entry(0, 1).clone(),
        v: nf.entry(0, 0).clone(),
        w: nf.entry(1, 0).clone(),
    })
}
