use super::*;
use crate::confocal::{random_ts_point, ts_to_nilpotent, ConfocalFamily};
use crate::mumford::triple_from_phase;
use crate::poly::{self, ComplexPolynomial};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_poly<R: Rng>(rng: &mut R, deg: usize) -> ComplexPolynomial {
    ComplexPolynomial::new(
        (0..=deg)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

fn random_matrix<R: Rng>(rng: &mut R, r: usize, d: usize) -> PolyMatrix {
    PolyMatrix::new(
        (0..r)
            .map(|_| (0..r).map(|_| random_poly(rng, d)).collect())
            .collect(),
    )
}

fn random_invertible<R: Rng>(rng: &mut R, r: usize) -> DMatrix<Complex64> {
    loop {
        let g = DMatrix::from_fn(r, r, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        if g.clone().lu().determinant().norm() > 0.2 {
            return g;
        }
    }
}

fn random_sum_zero_tuple<R: Rng>(rng: &mut R, r: usize, d: usize) -> ResidueTuple {
    let a = random_matrix(rng, r, d);
    let divisor: Vec<Complex64> = (0..d + 2).map(|k| c(k as f64, 0.0)).collect();
    residue_embed(&a, &divisor, DivisorMode::AllFinite).unwrap()
}

// Smaller amplitude keeps the Lax field well inside the RK4 stability region
// at dt = 1e-3 over the spread-out divisor {0..d+1}.
fn random_small_tuple<R: Rng>(rng: &mut R, r: usize, d: usize, amp: f64) -> ResidueTuple {
    let a = random_matrix(rng, r, d);
    let a = a.scale(c(amp, 0.0));
    let divisor: Vec<Complex64> = (0..d + 2).map(|k| c(k as f64, 0.0)).collect();
    residue_embed(&a, &divisor, DivisorMode::AllFinite).unwrap()
}

// ---- char_poly ----

#[test]
fn charpoly_of_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_poly(&mut rng, 3);
    let q = random_poly(&mut rng, 3);
    let mut a = PolyMatrix::zeros(2);
    a.set_entry(0, 0, p.clone());
    a.set_entry(1, 1, q.clone());
    let cp = char_poly(&a);
    assert!(cp.b[0].add(&p.add(&q)).norm() < 1e-12);
    assert!(cp.b[1].sub(&p.mul(&q)).norm() < 1e-12);
}

#[test]
fn charpoly_of_traceless_two_by_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v = random_poly(&mut rng, 2);
    let u = random_poly(&mut rng, 3);
    let w = random_poly(&mut rng, 3);
    let a = PolyMatrix::new(vec![vec![v.clone(), u.clone()], vec![w.clone(), v.neg()]]);
    let cp = char_poly(&a);
    assert!(cp.b[0].norm() < 1e-12);
    let f = v.mul(&v).add(&u.mul(&w));
    assert!(cp.b[1].add(&f).norm() < 1e-12);
}

#[test]
fn charpoly_matches_interpolation_oracle() {
    // Independent oracle: sample det(yI - A(x_j)) coefficients numerically at
    // 3d+1 points and interpolate each b_i.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (r, d) = (3, 2);
    let a = random_matrix(&mut rng, r, d);
    let cp = char_poly(&a);
    let n = r * d + 1;
    let nodes: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            c(1.1 * t.cos(), 1.1 * t.sin())
        })
        .collect();
    for i in 1..=r {
        let values: Vec<Complex64> = nodes
            .iter()
            .map(|&x| {
                // Coefficient of y^{r-i} in det(yI - A(x)) via char poly of the
                // constant matrix, computed from eigenvalues.
                let m = a.eval(x);
                let ev = m
                    .try_schur(1e-14, 10_000)
                    .unwrap()
                    .eigenvalues()
                    .unwrap();
                let roots: Vec<Complex64> = ev.iter().copied().collect();
                poly::ComplexPolynomial::from_roots(&roots).coeff(r - i)
            })
            .collect();
        let oracle = poly::lagrange_interpolate(&nodes, &values).unwrap();
        assert!(
            cp.b[i - 1].sub(&oracle).norm() < 1e-8 * oracle.norm().max(1.0),
            "b_{} mismatch",
            i
        );
    }
}

#[test]
fn charpoly_is_conjugation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for r in 2..=4 {
        for d in 1..=4 {
            let a = random_matrix(&mut rng, r, d);
            let g = random_invertible(&mut rng, r);
            let cp1 = char_poly(&a);
            let cp2 = char_poly(&a.conjugate(&g).unwrap());
            for (b1, b2) in cp1.b.iter().zip(&cp2.b) {
                assert!(b1.sub(b2).norm() < 1e-10 * b1.norm().max(1.0));
            }
        }
    }
}

#[test]
fn charpoly_degree_bounds_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 4, 3);
    let cp = char_poly(&a);
    for (i, b) in cp.b.iter().enumerate() {
        assert!(b.degree().map_or(true, |deg| deg <= (i + 1) * 3));
    }
}

// ---- spectral_smooth_affine ----

#[test]
fn smooth_iff_squarefree_for_hyperelliptic() {
    let f = ComplexPolynomial::from_roots(&[c(0.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
    let b = CharPoly {
        r: 2,
        d: 2,
        b: vec![ComplexPolynomial::zero(), f.neg()],
    };
    let rep = spectral_smooth_affine(&b).unwrap();
    assert!(rep.smooth);

    let g = ComplexPolynomial::from_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
    let b2 = CharPoly {
        r: 2,
        d: 2,
        b: vec![ComplexPolynomial::zero(), g.neg()],
    };
    let rep2 = spectral_smooth_affine(&b2).unwrap();
    assert!(!rep2.smooth);
    let (x0, y0) = rep2.witness.unwrap();
    assert!((x0 - c(1.0, 0.0)).norm() < 1e-4);
    assert!(y0.norm() < 1e-4);
}

#[test]
fn smooth_agrees_with_squarefree_on_random_hyperelliptic() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10 {
        let roots: Vec<Complex64> = (0..5)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut roots = roots;
        let duplicate = trial % 2 == 1;
        if duplicate {
            roots[1] = roots[0];
        }
        let f = ComplexPolynomial::from_roots(&roots);
        let b = CharPoly {
            r: 2,
            d: 3,
            b: vec![ComplexPolynomial::zero(), f.neg()],
        };
        let rep = spectral_smooth_affine(&b).unwrap();
        assert_eq!(rep.smooth, poly::squarefree(&f), "trial {}", trial);
    }
}

#[test]
fn cusp_is_singular_at_origin() {
    // y^3 = x^2: P = P_x = P_y = 0 at (0,0).
    let b = CharPoly {
        r: 3,
        d: 1,
        b: vec![
            ComplexPolynomial::zero(),
            ComplexPolynomial::zero(),
            ComplexPolynomial::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        ],
    };
    let rep = spectral_smooth_affine(&b).unwrap();
    assert!(!rep.smooth);
    let (x0, y0) = rep.witness.unwrap();
    assert!(x0.norm() < 1e-2 && y0.norm() < 1e-2);
}

#[test]
fn generic_cubic_cover_is_smooth() {
    // y^3 + y + x: discriminant 4 + 27x^2 has simple roots and dP/dx = 1.
    let b = CharPoly {
        r: 3,
        d: 1,
        b: vec![
            ComplexPolynomial::zero(),
            ComplexPolynomial::one(),
            ComplexPolynomial::identity(),
        ],
    };
    assert!(spectral_smooth_affine(&b).unwrap().smooth);
}

// ---- genus / splitting / ramification ----

#[test]
fn genus_formula_values() {
    assert_eq!(spectral_genus(2, 5, 0), 4); // d - 1 for r = 2, base genus 0
    assert_eq!(spectral_genus(1, 7, 3), 3);
    assert_eq!(spectral_genus(3, 2, 1), 7);
}

#[test]
fn splitting_degrees() {
    assert_eq!(direct_image_splitting(2, 5), vec![2, 2]);
    assert_eq!(direct_image_splitting(2, 0), vec![0, -1]);
    assert_eq!(direct_image_splitting(1, 9), vec![9]);
    assert_eq!(direct_image_splitting(3, 7), vec![2, 2, 1]);
}

#[test]
fn ramification_block_powers() {
    for k in [1usize, 2, 4] {
        let p = ramification_matrix(k);
        let mut acc = PolyMatrix::identity(k);
        for _ in 0..k {
            acc = acc.matmul(&p);
        }
        let mut z_id = PolyMatrix::zeros(k);
        for i in 0..k {
            z_id.set_entry(i, i, ComplexPolynomial::identity());
        }
        assert!(acc.sub(&z_id).norm() < 1e-14, "k = {}", k);
    }
    let p2 = ramification_matrix(2);
    assert!(p2.entry(0, 1).sub(&ComplexPolynomial::identity()).norm() < 1e-14);
    assert!(p2.entry(1, 0).sub(&ComplexPolynomial::one()).norm() < 1e-14);
}

// ---- residue embedding ----

#[test]
fn residue_of_constant_one() {
    let a = PolyMatrix::identity(1);
    let t = residue_embed(&a, &[c(0.0, 0.0), c(1.0, 0.0)], DivisorMode::AllFinite).unwrap();
    assert!((t.matrices[0][(0, 0)] + c(1.0, 0.0)).norm() < 1e-14);
    assert!((t.matrices[1][(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn residue_of_x_over_three_points() {
    let mut a = PolyMatrix::zeros(1);
    a.set_entry(0, 0, ComplexPolynomial::identity());
    let divisor = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
    let t = residue_embed(&a, &divisor, DivisorMode::AllFinite).unwrap();
    let got: Vec<Complex64> = t.matrices.iter().map(|m| m[(0, 0)]).collect();
    assert!((got[0] - c(0.0, 0.0)).norm() < 1e-14);
    assert!((got[1] + c(1.0, 0.0)).norm() < 1e-14);
    assert!((got[2] - c(1.0, 0.0)).norm() < 1e-14);
    assert!(t.sum().norm() < 1e-14);
}

#[test]
fn embed_reconstruct_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for r in 1..=3 {
        for d in 0..=4 {
            let a = random_matrix(&mut rng, r, d);
            let divisor: Vec<Complex64> = (0..d + 2)
                .map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let t = match residue_embed(&a, &divisor, DivisorMode::AllFinite) {
                Ok(t) => t,
                Err(PolymatError::DuplicatePoints) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!(t.sum().iter().map(|v| v.norm()).sum::<f64>() < 1e-10 * a.norm().max(1.0));
            let back = residue_reconstruct(&t).unwrap();
            assert!(back.sub(&a).norm() < 1e-11 * a.norm().max(1.0));
        }
    }
}

#[test]
fn embed_reconstruct_round_trip_at_infinity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_matrix(&mut rng, 2, 3);
    let divisor: Vec<Complex64> = (0..3).map(|k| c(k as f64, 0.0)).collect();
    let t = residue_embed(&a, &divisor, DivisorMode::LastAtInfinity).unwrap();
    assert_eq!(t.matrices.len(), 4);
    // Residue at infinity balances the finite ones.
    let total = t.sum() + t.matrices[3].clone();
    assert!(total.iter().map(|v| v.norm()).sum::<f64>() < 1e-12 * a.norm());
    let back = residue_reconstruct(&t).unwrap();
    assert!(back.sub(&a).norm() < 1e-11 * a.norm());
}

#[test]
fn zero_tuple_reconstructs_to_zero() {
    let t = ResidueTuple {
        points: vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)],
        matrices: vec![DMatrix::zeros(2, 2); 3],
        mode: DivisorMode::AllFinite,
        leading: None,
    };
    let a = residue_reconstruct(&t).unwrap();
    assert!(a.norm() < 1e-14);
}

#[test]
fn embed_rejects_bad_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_matrix(&mut rng, 2, 3);
    let too_few: Vec<Complex64> = (0..4).map(|k| c(k as f64, 0.0)).collect();
    assert!(matches!(
        residue_embed(&a, &too_few, DivisorMode::AllFinite),
        Err(PolymatError::DegreeTooHigh(3, 4))
    ));
    let dup = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
    assert!(matches!(
        residue_embed(&a, &dup, DivisorMode::AllFinite),
        Err(PolymatError::DuplicatePoints)
    ));
}

#[test]
fn reconstruct_rejects_nonzero_sum() {
    let mut t = ResidueTuple {
        points: vec![c(0.0, 0.0), c(1.0, 0.0)],
        matrices: vec![DMatrix::zeros(1, 1); 2],
        mode: DivisorMode::AllFinite,
        leading: None,
    };
    t.matrices[0][(0, 0)] = c(1.0, 0.0);
    assert!(matches!(
        residue_reconstruct(&t),
        Err(PolymatError::ResidueSumNonzero(_))
    ));
}

#[test]
fn ts_residues_match_nilpotent_cover() {
    // The Mumford matrix of a TS point has residues at the axes equal to the
    // rank-one nilpotent cover matrices after the substitution x -> i x.
    let fam = ConfocalFamily::new(vec![1.0, 2.0, 4.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let p = random_ts_point(&mut rng, 3);
    let (m, _model) = triple_from_phase(&p, &fam);
    let a = PolyMatrix::new(vec![vec![m.v.clone(), m.u.clone()], vec![m.w.clone(), m.v.neg()]]);
    let divisor: Vec<Complex64> = fam.axes().iter().map(|&a| c(a, 0.0)).collect();
    let t = residue_embed(&a, &divisor, DivisorMode::LastAtInfinity).unwrap();
    let cover = ts_to_nilpotent(&p, &fam);
    for i in 0..3 {
        let r = &t.matrices[i];
        let n = &cover[i];
        assert!((r[(0, 0)] - c(0.0, 1.0) * n[0][0]).norm() < 1e-10);
        assert!((r[(0, 1)] + n[0][1]).norm() < 1e-10);
        assert!((r[(1, 0)] - n[1][0]).norm() < 1e-10);
        assert!((r[(1, 1)] - c(0.0, 1.0) * n[1][1]).norm() < 1e-10);
    }
}

// ---- trace pairing ----

#[test]
fn trace_pair_identity_jet_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = random_sum_zero_tuple(&mut rng, 2, 2);
    let jet = vec![DMatrix::<Complex64>::identity(2, 2); t.matrices.len()];
    assert!(trace_pair(&jet, &t).norm() < 1e-12);
}

#[test]
fn trace_pair_picks_single_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let t = random_sum_zero_tuple(&mut rng, 2, 2);
    let x = random_invertible(&mut rng, 2);
    let mut jet = vec![DMatrix::<Complex64>::zeros(2, 2); t.matrices.len()];
    jet[0] = x.clone();
    let expect = (&x * &t.matrices[0]).trace();
    assert!((trace_pair(&jet, &t) - expect).norm() < 1e-13);
}

#[test]
fn trace_pair_is_bilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let t = random_sum_zero_tuple(&mut rng, 2, 1);
    let s = random_sum_zero_tuple(&mut rng, 2, 1);
    let jet: Vec<DMatrix<Complex64>> = (0..t.matrices.len())
        .map(|_| random_invertible(&mut rng, 2))
        .collect();
    let lam = c(0.3, -0.7);
    let mut combo = t.clone();
    for (m, sm) in combo.matrices.iter_mut().zip(&s.matrices) {
        *m += sm * lam;
    }
    let lhs = trace_pair(&jet, &combo);
    let rhs = trace_pair(&jet, &t) + lam * trace_pair(&jet, &s);
    assert!((lhs - rhs).norm() < 1e-12);
}

// ---- KK bracket ----

fn single_factor_tuple(m: DMatrix<Complex64>) -> ResidueTuple {
    ResidueTuple {
        points: vec![c(0.0, 0.0)],
        matrices: vec![m],
        mode: DivisorMode::AllFinite,
        leading: None,
    }
}

#[test]
fn bracket_of_coordinate_functionals() {
    // F = <., E11>, G = <., E21> at xi = E12 gives trace(E12 [E11, E21]) = -1.
    let mut e11 = DMatrix::<Complex64>::zeros(2, 2);
    e11[(0, 0)] = c(1.0, 0.0);
    let mut e21 = DMatrix::<Complex64>::zeros(2, 2);
    e21[(1, 0)] = c(1.0, 0.0);
    let mut e12 = DMatrix::<Complex64>::zeros(2, 2);
    e12[(0, 1)] = c(1.0, 0.0);
    let t = single_factor_tuple(e12);
    let f = LinearFunctional { jet: vec![e11] };
    let g = LinearFunctional { jet: vec![e21] };
    let val = kk_bracket(&f, &g, &t).unwrap();
    assert!((val + c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn casimirs_commute_with_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let m = random_invertible(&mut rng, 3);
    let t = single_factor_tuple(m);
    // Casimir trace(R^3) with finite-difference gradients.
    let casimir = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        let r = &s.matrices[0];
        Ok((r * r * r).trace())
    };
    let g = LinearFunctional {
        jet: vec![random_invertible(&mut rng, 3)],
    };
    let val = kk_bracket(&casimir, &g, &t).unwrap();
    assert!(val.norm() < 1e-8, "|{{C, G}}| = {:.3e}", val.norm());
}

#[test]
fn bracket_is_antisymmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let t = random_sum_zero_tuple(&mut rng, 2, 2);
    let f = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices[0][(0, 1)] * s.matrices[1][(1, 0)] + s.matrices[2][(0, 0)])
    };
    let g = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices[1][(0, 0)] * s.matrices[1][(0, 0)] + s.matrices[0][(1, 1)])
    };
    let fg = kk_bracket(&f, &g, &t).unwrap();
    let gf = kk_bracket(&g, &f, &t).unwrap();
    assert!((fg + gf).norm() < 1e-8);
}

#[test]
fn bracket_satisfies_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let t = random_sum_zero_tuple(&mut rng, 2, 1);
    // Linear-plus-quadratic functionals with closed-form values.
    let f = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices[0][(0, 0)] + s.matrices[1][(0, 1)] * s.matrices[1][(1, 0)])
    };
    let g = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices[0][(1, 0)] * s.matrices[0][(0, 1)] + s.matrices[2][(1, 1)])
    };
    let h = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices[1][(0, 0)] + s.matrices[0][(0, 1)])
    };
    // {F, {G, H}} needs the inner bracket as a functional of the tuple.
    let bracket_fn = |a: &dyn TupleFunctional,
                      b: &dyn TupleFunctional,
                      s: &ResidueTuple|
     -> Result<Complex64, PolymatError> { kk_bracket(a, b, s) };
    let gh = |s: &ResidueTuple| bracket_fn(&g, &h, s);
    let hf = |s: &ResidueTuple| bracket_fn(&h, &f, s);
    let fg = |s: &ResidueTuple| bracket_fn(&f, &g, s);
    let total = kk_bracket(&f, &gh, &t).unwrap()
        + kk_bracket(&g, &hf, &t).unwrap()
        + kk_bracket(&h, &fg, &t).unwrap();
    assert!(total.norm() < 1e-6, "Jacobi defect {:.3e}", total.norm());
}

// ---- spectral functionals ----

#[test]
fn linear_spectral_gradient_matches_fd() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let t = random_sum_zero_tuple(&mut rng, 2, 2);
    let h = SpectralFunctional::new(1, 1);
    let analytic = h.gradient(&t).unwrap();
    let fd = super::bracket::fd_gradient(&|s| h.eval(s), &t, 1e-6).unwrap();
    for (a, b) in analytic.iter().zip(&fd) {
        assert!((a - b).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-7);
    }
}

#[test]
fn spectral_functionals_recover_charpoly() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let t = random_sum_zero_tuple(&mut rng, 2, 3);
    let a = residue_reconstruct(&t).unwrap();
    let cp = char_poly(&a);
    for i in 1..=2 {
        for j in 0..=(i * 3) {
            let h = SpectralFunctional::new(i, j);
            let val = h.eval(&t).unwrap();
            assert!((val - cp.b[i - 1].coeff(j)).norm() < 1e-12);
        }
    }
}

#[test]
fn spectral_functionals_poisson_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let t = random_sum_zero_tuple(&mut rng, 2, 3);
    let scale = t.norm().max(1.0);
    for &(i, j, k, l) in &[(1, 0, 2, 1), (1, 2, 2, 4), (2, 0, 2, 3), (1, 1, 1, 3)] {
        let hf = SpectralFunctional::new(i, j);
        let hg = SpectralFunctional::new(k, l);
        let val = kk_bracket(&hf, &hg, &t).unwrap();
        assert!(
            val.norm() < 1e-7 * scale,
            "{{H_{},{}, H_{},{}}} = {:.3e}",
            i,
            j,
            k,
            l,
            val.norm()
        );
    }
}

// ---- flows ----

#[test]
fn casimir_flow_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let t = random_sum_zero_tuple(&mut rng, 2, 1);
    let casimir = |s: &ResidueTuple| -> Result<Complex64, PolymatError> {
        Ok(s.matrices.iter().map(|m| (m * m).trace()).sum())
    };
    let traj = kk_flow(&casimir, &t, 1e-2, 20).unwrap();
    let last = traj.last().unwrap();
    for (m0, m1) in t.matrices.iter().zip(&last.tuple.matrices) {
        assert!((m0 - m1).iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-9);
    }
}

#[test]
fn spectral_flow_preserves_curve_and_leaves() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let t = random_small_tuple(&mut rng, 2, 3, 0.2);
    let h = SpectralFunctional::new(2, 1);
    let traj = kk_flow(&h, &t, 1e-3, 100).unwrap();
    let last = traj.last().unwrap();
    assert!(last.charpoly_drift < 1e-6, "drift {:.3e}", last.charpoly_drift);
    assert!(last.leaf_drift < 1e-8, "leaf drift {:.3e}", last.leaf_drift);
    // The motion itself is nontrivial.
    let moved = t
        .matrices
        .iter()
        .zip(&last.tuple.matrices)
        .map(|(a, b)| (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    assert!(moved > 1e-4);
}

// ---- normal form ----

fn random_normal_form<R: Rng>(rng: &mut R, r: usize, d: usize) -> PolyMatrix {
    // Leading coefficient J, subleading with last column (beta, 0, .., 0),
    // arbitrary lower-degree parts.
    let mut rows: Vec<Vec<ComplexPolynomial>> = (0..r)
        .map(|_| (0..r).map(|_| random_poly(rng, d - 1)).collect())
        .collect();
    // Last column of the x^{d-1} coefficient: (beta, 0, ..., 0).
    let beta = c(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    for (i, row) in rows.iter_mut().enumerate() {
        let mut coeffs: Vec<Complex64> = (0..d).map(|k| row[r - 1].coeff(k)).collect();
        coeffs[d - 1] = if i == 0 { beta } else { c(0.0, 0.0) };
        row[r - 1] = ComplexPolynomial::new(coeffs);
    }
    // Add J x^d.
    for i in 1..r {
        let mut coeffs = vec![c(0.0, 0.0); d + 1];
        coeffs[d] = c(1.0, 0.0);
        let jxd = ComplexPolynomial::new(coeffs);
        rows[i][i - 1] = rows[i][i - 1].add(&jxd);
    }
    PolyMatrix::new(rows)
}

#[test]
fn normal_form_fixes_normal_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let a = random_normal_form(&mut rng, 3, 2);
    let (nf, _g) = normal_form(&a).unwrap();
    assert!(nf.sub(&a).norm() < 1e-9 * a.norm());
}

#[test]
fn normal_form_is_orbit_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for r in 2..=4 {
        for d in 1..=3 {
            let a = random_normal_form(&mut rng, r, d);
            let g = random_invertible(&mut rng, r);
            let conj = a.conjugate(&g).unwrap();
            let (nf, _) = normal_form(&conj).unwrap();
            assert!(
                nf.sub(&a).norm() < 1e-8 * a.norm().max(1.0),
                "r={} d={} err={:.3e}",
                r,
                d,
                nf.sub(&a).norm()
            );
        }
    }
}

#[test]
fn beta_matches_determinant_coefficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for r in 2..=4 {
        let d = 2;
        let a = random_normal_form(&mut rng, r, d);
        let g = random_invertible(&mut rng, r);
        let (nf, _) = normal_form(&a.conjugate(&g).unwrap()).unwrap();
        let beta = nf.coefficient_matrix(d - 1)[(0, r - 1)];
        let cp = char_poly(&nf);
        // b_r = (-1)^r det A, so beta_r = (-1)^{r+1} [x^{dr-1}] det A.
        let det_coeff = cp.b[r - 1].coeff(d * r - 1) * c((-1.0_f64).powi(r as i32), 0.0);
        let expect = det_coeff * c((-1.0_f64).powi(r as i32 + 1), 0.0);
        assert!(
            (beta - expect).norm() < 1e-10 * beta.norm().max(1.0),
            "r = {}",
            r
        );
    }
}

#[test]
fn normal_form_rejects_bad_leading_terms() {
    // Diagonalizable leading coefficient.
    let mut a = PolyMatrix::zeros(2);
    a.set_entry(0, 0, ComplexPolynomial::identity());
    a.set_entry(1, 1, ComplexPolynomial::one());
    assert!(matches!(
        normal_form(&a),
        Err(PolymatError::LeadingNotRegularNilpotent)
    ));
    // Regular nilpotent leading term but vanishing beta.
    let mut b = PolyMatrix::zeros(2);
    b.set_entry(0, 0, ComplexPolynomial::one());
    b.set_entry(1, 0, ComplexPolynomial::identity());
    b.set_entry(1, 1, ComplexPolynomial::constant(c(2.0, 0.0)));
    assert!(matches!(normal_form(&b), Err(PolymatError::BetaZero)));
}

#[test]
fn theta_normalize_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let d = 3;
    // Build a normalized triple directly: W monic deg d, U monic deg d-1,
    // deg V <= d-2.
    let mut u = random_poly(&mut rng, d - 2);
    u = ComplexPolynomial::new({
        let mut cs: Vec<Complex64> = (0..d - 1).map(|k| u.coeff(k)).collect();
        cs.push(c(1.0, 0.0));
        cs
    });
    let mut w = random_poly(&mut rng, d - 1);
    w = ComplexPolynomial::new({
        let mut cs: Vec<Complex64> = (0..d).map(|k| w.coeff(k)).collect();
        cs.push(c(1.0, 0.0));
        cs
    });
    let v = random_poly(&mut rng, d - 2);
    let a = PolyMatrix::new(vec![vec![v.clone(), u.clone()], vec![w.clone(), v.neg()]]);
    let m0 = theta_complement_normalize(&a).unwrap();
    assert!(m0.u.sub(&u).norm() < 1e-9);
    assert!(m0.v.sub(&v).norm() < 1e-9);
    assert!(m0.w.sub(&w).norm() < 1e-9);

    let g = random_invertible(&mut rng, 2);
    let m1 = theta_complement_normalize(&a.conjugate(&g).unwrap()).unwrap();
    assert!(m1.u.sub(&u).norm() < 1e-8);
    assert!(m1.v.sub(&v).norm() < 1e-8);
    assert!(m1.w.sub(&w).norm() < 1e-8);

    // V^2 + UW is preserved and equals -b_2 of the input.
    let f = v.mul(&v).add(&u.mul(&w));
    let f1 = m1.v.mul(&m1.v).add(&m1.u.mul(&m1.w));
    assert!(f.sub(&f1).norm() < 1e-10 * f.norm());
}

// ---- branch expansions ----

#[test]
fn single_sheet_is_taylor_series() {
    let f = ComplexPolynomial::from_real(&[1.0, -3.0, 0.5, 2.0]);
    let b = CharPoly {
        r: 1,
        d: 3,
        b: vec![f.neg()],
    };
    let x0 = c(0.7, -0.2);
    for j in 1..=4 {
        let phi = branch_residue_hamiltonians(&b, x0, j).unwrap();
        assert_eq!(phi.len(), 1);
        // [z^{j-1}] f(x0+z) = f^{(j-1)}(x0)/(j-1)!.
        let expect = f.shift(x0).coeff(j - 1);
        assert!((phi[0] - expect).norm() < 1e-10);
    }
}

#[test]
fn hyperelliptic_sheets_match_sqrt_oracle() {
    let f = ComplexPolynomial::from_real(&[2.0, 1.0, -0.3, 1.0]);
    let b = CharPoly {
        r: 2,
        d: 2,
        b: vec![ComplexPolynomial::zero(), f.neg()],
    };
    let x0 = c(0.4, 0.1);
    for j in 1..=4 {
        let phi = branch_residue_hamiltonians(&b, x0, j).unwrap();
        let k = j + 2;
        let fs: Vec<Complex64> = (0..k).map(|t| f.shift(x0).coeff(t)).collect();
        let s0 = fs[0].sqrt();
        let plus = sqrt_series(&fs, s0, k);
        let minus = sqrt_series(&fs, -s0, k);
        let expect = [plus[j - 1], minus[j - 1]];
        let err = poly::multiset_distance(&phi, &expect);
        assert!(err < 1e-9, "j = {} err = {:.3e}", j, err);
    }
}

#[test]
fn sheet_sum_matches_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let b1 = random_poly(&mut rng, 2);
    let b2 = random_poly(&mut rng, 4);
    let b3 = random_poly(&mut rng, 6);
    let b = CharPoly {
        r: 3,
        d: 2,
        b: vec![b1.clone(), b2, b3],
    };
    let x0 = c(0.3, 0.9);
    let phi = branch_residue_hamiltonians(&b, x0, 1).unwrap();
    let total: Complex64 = phi.iter().sum();
    assert!((total + b1.eval(x0)).norm() < 1e-9);
}

#[test]
fn ramified_fiber_is_rejected() {
    // y^2 = x is ramified over x = 0.
    let b = CharPoly {
        r: 2,
        d: 1,
        b: vec![ComplexPolynomial::zero(), ComplexPolynomial::identity().neg()],
    };
    assert!(matches!(
        branch_residue_hamiltonians(&b, c(0.0, 0.0), 1),
        Err(PolymatError::RamifiedFiber)
    ));
    // Unramified elsewhere.
    assert!(branch_residue_hamiltonians(&b, c(1.0, 0.0), 2).is_ok());
}
