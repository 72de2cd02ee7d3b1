//! Laurent series and matrix series arithmetic against direct evaluation.

mod common;

use common::*;
use qstokes::series::{qpow, CMatrix, Complex, Laurent, SeriesMatrix, Tail};
use qstokes::Error;

#[test]
fn qpow_matches_repeated_multiplication() {
    let q = c(1.5, -0.7);
    let mut acc = c(1.0, 0.0);
    for n in 0..30 {
        assert!(rel(qpow(q, n), acc) < 1e-13, "n = {n}");
        assert!(rel(qpow(q, -n), acc.inv()) < 1e-13, "n = -{n}");
        acc *= q;
    }
}

#[test]
fn product_evaluates_to_product_of_values() {
    let mut r = rng(20);
    for _ in 0..20 {
        let a = random_poly(&mut r, -3, 5);
        let b = random_poly(&mut r, -2, 4);
        let z = polar(&mut r, 0.5, 1.5);
        assert!(rel((&a * &b).eval(z), a.eval(z) * b.eval(z)) < 1e-13);
        assert!(rel((&a + &b).eval(z), a.eval(z) + b.eval(z)) < 1e-13);
        assert!(rel((&a - &b).eval(z), a.eval(z) - b.eval(z)) < 1e-13);
    }
}

#[test]
fn truncated_windows_only_keep_determined_coefficients() {
    let a = Laurent::truncated(0, vec![c(1.0, 0.0); 6]);
    let b = Laurent::truncated(-1, vec![c(2.0, 0.0); 4]);
    let p = &a * &b;
    // a is known through z^5 and b through z^2, so the product is known
    // through min(0 + 2, -1 + 5) = 2.
    assert_eq!((p.lo(), p.hi(), p.tail()), (-1, 2, Tail::Truncated));
    let s = &a + &Laurent::polynomial(0, vec![c(1.0, 0.0); 10]);
    assert_eq!(s.hi(), 5);
    assert_eq!(s.get(6), None);
    assert_eq!(
        Laurent::polynomial(0, vec![c(1.0, 0.0)]).get(6),
        Some(c(0.0, 0.0))
    );
}

#[test]
fn inverse_is_multiplicative_inverse() {
    let mut r = rng(21);
    for _ in 0..10 {
        let mut a = random_poly(&mut r, 2, 6);
        a = &a + &Laurent::monomial(c(1.5, 0.0), 2);
        let inv = a.invert_to(20).unwrap();
        assert_eq!(inv.lo(), -a.valuation().unwrap());
        let one = &a * &inv;
        for n in one.lo()..=one.hi() {
            let expected = if n == 0 { 1.0 } else { 0.0 };
            assert!(
                (one.coeff(n) - expected).norm() < 1e-10,
                "coefficient {n}: {}",
                one.coeff(n)
            );
        }
    }
    assert_eq!(Laurent::zero().invert(), Err(Error::EmptyWindow));
}

#[test]
fn sigma_is_dilatation() {
    let mut r = rng(22);
    let q = c(2.0, 0.5);
    let a = random_poly(&mut r, -4, 4);
    let z = c(0.3, 0.2);
    assert!(rel(a.sigma(1, q).eval(z), a.eval(q * z)) < 1e-13);
    assert!(rel(a.sigma(-2, q).eval(z), a.eval(z / (q * q))) < 1e-13);
    assert!(rel(a.shift(3).eval(z), a.eval(z) * z * z * z) < 1e-13);
}

#[test]
fn valuation_ignores_coefficients_below_threshold() {
    let a = Laurent::polynomial(
        -2,
        vec![c(1e-20, 0.0), c(0.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)],
    );
    assert_eq!(a.valuation(), Ok(0));
    assert_eq!(
        Laurent::polynomial(0, vec![c(0.0, 0.0)]).valuation(),
        Err(Error::AllBelowThreshold)
    );
}

#[test]
fn trim_and_chop() {
    let a =
        Laurent::polynomial(-1, vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]).trim();
    assert_eq!((a.lo(), a.hi()), (0, 1));
    let t = Laurent::truncated(0, vec![c(1.0, 0.0); 5]);
    let ch = t.chop(1, 3);
    assert!(ch.is_exact());
    assert_eq!((ch.lo(), ch.hi()), (1, 3));
    assert_eq!(t.truncate(2).hi(), 2);
}

#[test]
fn matrix_series_product_and_inverse() {
    let mut r = rng(23);
    let a = random_poly_matrix(&mut r, 2, 3, 0, 3);
    let b = random_poly_matrix(&mut r, 3, 2, -1, 2);
    let z = c(0.7, -0.4);
    assert!(mat_rel(&(&a * &b).eval(z), &(a.eval(z) * b.eval(z))) < 1e-13);
    let mut g = random_poly_matrix(&mut r, 2, 2, 1, 4);
    g = &g + &SeriesMatrix::constant(&CMatrix::identity(2, 2));
    let inv = g.inverse_to(20).unwrap();
    let prod = &g * &inv;
    for n in prod.lo()..=prod.hi() {
        let expected = if n == 0 {
            CMatrix::identity(2, 2)
        } else {
            CMatrix::zeros(2, 2)
        };
        assert!(
            max_abs(&(prod.coeff(n) - expected)) < 1e-9,
            "coefficient {n}"
        );
    }
}

#[test]
fn matrix_coefficient_access() {
    let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
    let s = SeriesMatrix::monomial(&m, 3);
    assert_eq!(s.coeff(3), m);
    assert_eq!(s.coeff(2), CMatrix::zeros(2, 2));
    assert_eq!(s.sigma(1, c(2.0, 0.0)).coeff(3), m * c(8.0, 0.0));
    let eval: Complex = s.eval(c(2.0, 0.0))[(1, 1)];
    assert_eq!(eval, c(32.0, 0.0));
}
