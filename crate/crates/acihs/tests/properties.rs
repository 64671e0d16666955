//! Randomized invariants checked with proptest: algebraic identities that
//! must hold for every input, not just the hand-picked fixtures.

use num_complex::Complex64;
use proptest::prelude::*;

use acihs::confocal::{uhlenbeck_integrals, ConfocalFamily, PhasePoint};
use acihs::poly::{self, ComplexPolynomial};
use acihs::polymat::{char_poly, direct_image_splitting, spectral_genus, PolyMatrix};

fn small_complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn poly_coeffs(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(small_complex(), 1..=max_len)
}

proptest! {
    #[test]
    fn interpolation_recovers_evaluations(coeffs in poly_coeffs(6)) {
        let p = ComplexPolynomial::new(coeffs);
        let d = p.degree().unwrap_or(0);
        let nodes: Vec<Complex64> = (0..=d)
            .map(|k| Complex64::new(k as f64 - d as f64 / 2.0, 0.3 * k as f64))
            .collect();
        let values: Vec<Complex64> = nodes.iter().map(|&x| p.eval(x)).collect();
        let q = poly::lagrange_interpolate(&nodes, &values).unwrap();
        prop_assert!(q.sub(&p).norm() <= 1e-8 * p.norm().max(1.0));
    }

    #[test]
    fn product_division_round_trips(a in poly_coeffs(5), b in poly_coeffs(5)) {
        let p = ComplexPolynomial::new(a);
        let q = ComplexPolynomial::new(b);
        prop_assume!(q.degree().is_some() && q.leading().norm() > 1e-3);
        let prod = p.mul(&q);
        let (quot, residual) = poly::exact_divide(&prod, &q).unwrap();
        prop_assert!(residual <= 1e-8 * prod.norm().max(1.0));
        prop_assert!(quot.sub(&p).norm() <= 1e-7 * p.norm().max(1.0));
    }

    #[test]
    fn evaluation_is_multiplicative(a in poly_coeffs(5), b in poly_coeffs(5), z in small_complex()) {
        let p = ComplexPolynomial::new(a);
        let q = ComplexPolynomial::new(b);
        let lhs = p.mul(&q).eval(z);
        let rhs = p.eval(z) * q.eval(z);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn roots_rebuild_the_monic_polynomial(rs in prop::collection::vec(small_complex(), 1..5)) {
        let p = ComplexPolynomial::from_roots(&rs);
        let found = poly::roots(&p).unwrap();
        prop_assert!(poly::multiset_distance(&found, &rs) <= 1e-6);
    }

    #[test]
    fn integrals_sum_to_the_squared_norm(
        x in prop::collection::vec(-1.0f64..1.0, 3),
        y in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        // Off the constraint set the identity deforms to sum F_k = |x|^2.
        let fam = ConfocalFamily::new(vec![1.0, 2.0, 4.0]).unwrap();
        let xy: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        let xx: f64 = x.iter().map(|x| x * x).sum();
        prop_assume!(xx > 1e-3);
        // Project y to make <x, y> = 0; the identity needs only that.
        let y: Vec<f64> = y.iter().zip(&x).map(|(y, x)| y - xy / xx * x).collect();
        let p = PhasePoint::new(x, y);
        let sum: f64 = uhlenbeck_integrals(&p, &fam).iter().sum();
        prop_assert!((sum - xx).abs() <= 1e-10 * xx.max(1.0));
    }

    #[test]
    fn charpoly_matches_determinant_of_the_fiber(
        entries in prop::collection::vec(poly_coeffs(3), 4),
        z in small_complex(),
    ) {
        let a = PolyMatrix::new(vec![
            vec![ComplexPolynomial::new(entries[0].clone()), ComplexPolynomial::new(entries[1].clone())],
            vec![ComplexPolynomial::new(entries[2].clone()), ComplexPolynomial::new(entries[3].clone())],
        ]);
        let cp = char_poly(&a);
        let m = a.eval(z);
        let y = Complex64::new(0.37, -0.21);
        let det = (y - m[(0, 0)]) * (y - m[(1, 1)]) - m[(0, 1)] * m[(1, 0)];
        let scale = a.norm().max(1.0).powi(2);
        prop_assert!((cp.eval(z, y) - det).norm() <= 1e-9 * scale);
    }

    #[test]
    fn splitting_sums_match_the_genus_count(n in 1i64..6, d in 0i64..8) {
        let s = direct_image_splitting(n, d);
        prop_assert_eq!(s.len(), n as usize);
        prop_assert_eq!(s.iter().sum::<i64>(), d - n + 1);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(spectral_genus(1, d, 0), 0);
    }
}
