//! Newton polygons, indices, companion matrices and the homotopy identities.

mod common;

use common::*;
use num_rational::Rational64;
use qstokes::newton::{
    companion, homotopy_check, index, irregularity, newton_polygon, NewtonPolygon, QDiffOperator,
    Setting,
};
use qstokes::series::{Complex, Laurent};
use qstokes::Error;
use rand::Rng;

fn ratio(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn monomials(vals: &[Option<i64>]) -> QDiffOperator {
    let coeffs = vals
        .iter()
        .map(|v| match v {
            Some(e) => Laurent::monomial(c(1.0, 0.5), *e),
            None => Laurent::zero(),
        })
        .collect();
    QDiffOperator::new(coeffs).unwrap()
}

#[test]
fn polygon_is_lower_hull_of_valuations() {
    // Points (0,0), (1,3), (2,1), (3,4): the hull is (0,0)-(2,1)-(3,4).
    let np = newton_polygon(&monomials(&[Some(0), Some(3), Some(1), Some(4)])).unwrap();
    assert_eq!(
        np,
        NewtonPolygon::from_pairs([(ratio(1, 2), 2), (ratio(3, 1), 1)])
    );
    assert_eq!(np.rank(), 3);
    assert!(!np.is_integral());
    assert_eq!(irregularity(&np), ratio(4, 1));
    // Missing middle coefficients do not contribute points.
    let np = newton_polygon(&monomials(&[Some(2), None, Some(-1)])).unwrap();
    assert_eq!(np, NewtonPolygon::from_pairs([(ratio(-3, 2), 2)]));
}

#[test]
fn collinear_points_merge_into_one_slope() {
    let np = newton_polygon(&monomials(&[Some(0), Some(1), Some(2), Some(3)])).unwrap();
    assert_eq!(np.slopes.len(), 1);
    assert_eq!(np.multiplicity(ratio(1, 1)), 3);
}

#[test]
fn extreme_coefficients_need_a_valuation() {
    let bad = QDiffOperator::new(vec![Laurent::zero(), Laurent::constant(c(1.0, 0.0))]);
    assert_eq!(bad, Err(Error::UndefinedValuation(0)));
    let bad = QDiffOperator::new(vec![Laurent::constant(c(1.0, 0.0)), Laurent::zero()]);
    assert_eq!(bad, Err(Error::UndefinedValuation(1)));
}

#[test]
fn index_is_minus_irregularity_on_convergent_series() {
    // z^δ σ - 1 has the single slope δ.
    for delta in 0..4 {
        let op = QDiffOperator::first_order(
            Laurent::constant(c(-1.0, 0.0)),
            Laurent::monomial(c(1.0, 0.0), delta),
        )
        .unwrap();
        assert_eq!(index(&op, Setting::Formal), Ok(0));
        assert_eq!(index(&op, Setting::Convergent), Ok(-delta));
    }
    let half = monomials(&[Some(0), None, Some(1)]);
    assert_eq!(
        index(&half, Setting::Convergent),
        Err(Error::NonIntegralSlopes)
    );
}

#[test]
fn polygon_of_a_product_is_the_union() {
    let q = c(1.7, 0.4);
    let mut r = rng(40);
    for _ in 0..20 {
        let mut op = |order: usize| {
            let coeffs = (0..=order)
                .map(|_| {
                    Laurent::polynomial(
                        r.gen_range(-3..=3),
                        vec![polar(&mut r, 0.5, 2.0), cplx(&mut r)],
                    )
                })
                .collect();
            QDiffOperator::new(coeffs).unwrap()
        };
        let (a, b) = (op(2), op(1));
        let np = newton_polygon(&a.compose(&b, q).unwrap()).unwrap();
        assert_eq!(
            np,
            newton_polygon(&a)
                .unwrap()
                .union(&newton_polygon(&b).unwrap())
        );
    }
}

#[test]
fn composition_applies_in_sequence() {
    let q = c(2.0, 0.3);
    let mut r = rng(41);
    let a = QDiffOperator::new((0..3).map(|_| random_poly(&mut r, -1, 2)).collect()).unwrap();
    let b = QDiffOperator::new((0..2).map(|_| random_poly(&mut r, 0, 2)).collect()).unwrap();
    let f = random_poly(&mut r, -2, 3);
    let z = c(0.4, 0.3);
    let direct = a.apply(&b.apply(&f, q), q).eval(z);
    assert!(rel(a.compose(&b, q).unwrap().apply(&f, q).eval(z), direct) < 1e-12);
}

#[test]
fn companion_system_reproduces_the_operator() {
    // For Y = (f, σf, …, σ^{n-1}f): σY - AY = (0, …, 0, P(f)/aₙ).
    let q = q2();
    let mut r = rng(42);
    let lead = Laurent::monomial(c(1.3, -0.2), 1);
    let mut coeffs: Vec<Laurent> = (0..3).map(|_| random_poly(&mut r, 0, 2)).collect();
    coeffs.push(lead.clone());
    let op = QDiffOperator::new(coeffs).unwrap();
    let a = companion(&op).unwrap();
    let f = random_poly(&mut r, 0, 4);
    let z = c(0.6, -0.2);
    let y: Vec<Complex> = (0..3).map(|k| f.sigma(k, q).eval(z)).collect();
    let y_next: Vec<Complex> = (1..4).map(|k| f.sigma(k, q).eval(z)).collect();
    let az = a.eval(z);
    for i in 0..3 {
        let ay: Complex = (0..3).map(|j| az[(i, j)] * y[j]).sum();
        let expected = if i == 2 {
            op.apply(&f, q).eval(z) / lead.eval(z)
        } else {
            c(0.0, 0.0)
        };
        assert!(
            (y_next[i] - ay - expected).norm() < 1e-11 * y_next[i].norm().max(1.0),
            "row {i}"
        );
    }
}

#[test]
fn homotopy_identities_hold_and_report_shape_errors() {
    let q = q2();
    let mut r = rng(43);
    let mut coeffs: Vec<Laurent> = (0..2).map(|_| random_poly(&mut r, 0, 2)).collect();
    coeffs.push(Laurent::monomial(c(0.9, 0.4), 0));
    let op = QDiffOperator::new(coeffs).unwrap();
    let scalars: Vec<Laurent> = (0..3).map(|_| random_poly(&mut r, -2, 2)).collect();
    let vectors: Vec<Vec<Laurent>> = (0..3)
        .map(|_| (0..2).map(|_| random_poly(&mut r, -2, 2)).collect())
        .collect();
    let report = homotopy_check(&op, q, &scalars, &vectors, 1e-10).unwrap();
    assert_eq!(report.residuals.len(), 6);
    assert!(report.max() < 1e-10);
    let wrong = vec![vec![random_poly(&mut r, 0, 1)]];
    assert!(matches!(
        homotopy_check(&op, q, &scalars, &wrong, 1e-10),
        Err(Error::WrongShape(_))
    ));
}
