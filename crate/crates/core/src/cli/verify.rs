//! Named identity checks over the built-in fixture corpus.
//!
//! Each fixture is a JSON file with a `name`, a role-describing `comment`,
//! the base `q`, a default `tolerance` and check-specific `params`. A check
//! reports named residuals, each with its own tolerance (`--tolerance`
//! overrides them all), and passes when every residual is within bounds.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ComplexJson, Settings, TermJson};
use crate::error::{Error, Result};
use crate::module_rep::{resonance_set, BlockModule, PureBlock, EIG_TOLERANCE};
use crate::newton::{homotopy_check, QDiffOperator};
use crate::series::{CMatrix, Complex, Laurent, SeriesMatrix};
use crate::special_fn::{growth_majorant, theta_identity_residuals, thq, ThetaKind};
use crate::stokes::{
    borel_square_continuation, borel_square_obstructions, confluent_check, contour_residue,
    elliptic_constant, elliptic_constant_by_derivative, mock_theta_check, mock_theta_closed_form,
    mock_theta_module, mordell_check, rank2_elliptic_formula, residue_alpha0, sample_grid,
    shifted_tshakaloff_sum, square_equation_residual, stokes_cocycle, symmetric_square_module,
    symmetric_square_multiplicities, zero_case_conjecture,
};
use crate::summation::{algebraic_sum, q_euler_sum};

/// The fixture corpus, sorted by name.
pub const FIXTURES: &[(&str, &str)] = &[
    (
        "borel-square",
        include_str!("../../fixtures/checks/borel-square.json"),
    ),
    (
        "confluent",
        include_str!("../../fixtures/checks/confluent.json"),
    ),
    (
        "homotopy",
        include_str!("../../fixtures/checks/homotopy.json"),
    ),
    (
        "mock-theta",
        include_str!("../../fixtures/checks/mock-theta.json"),
    ),
    (
        "mordell",
        include_str!("../../fixtures/checks/mordell.json"),
    ),
    (
        "rank2-elliptic",
        include_str!("../../fixtures/checks/rank2-elliptic.json"),
    ),
    (
        "residue-alpha0",
        include_str!("../../fixtures/checks/residue-alpha0.json"),
    ),
    (
        "sym-square",
        include_str!("../../fixtures/checks/sym-square.json"),
    ),
    (
        "triple-product",
        include_str!("../../fixtures/checks/triple-product.json"),
    ),
];

/// A fixture file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub comment: String,
    pub q: ComplexJson,
    pub tolerance: f64,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// One residual against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Outcome of one fixture.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub fixture: String,
    pub status: String,
    pub comment: String,
    pub max_residual: f64,
    pub residuals: BTreeMap<String, Residual>,
    pub notes: Vec<String>,
}

/// Look up and parse a fixture by name.
pub fn fixture(name: &str) -> Result<Fixture> {
    let text = FIXTURES
        .iter()
        .find(|f| f.0 == name)
        .map(|f| f.1)
        .ok_or_else(|| {
            let names: Vec<&str> = FIXTURES.iter().map(|f| f.0).collect();
            Error::InvalidArgument(format!(
                "unknown fixture `{name}`; available: {}",
                names.join(", ")
            ))
        })?;
    serde_json::from_str(text).map_err(|e| Error::Schema {
        field: format!("fixture {name}, line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Run fixtures in parallel; results come back in the order of `names`.
/// Unknown names and malformed fixtures are errors; numeric failures are
/// reported as `FAIL`.
pub fn run_fixtures(names: &[String], s: &Settings) -> Result<Vec<CheckResult>> {
    let fixtures: Vec<Fixture> = names.iter().map(|n| fixture(n)).collect::<Result<_>>()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = fixtures
            .iter()
            .map(|f| scope.spawn(move || run_fixture(f, s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fixture thread panicked"))
            .collect()
    })
}

struct Checker<'a> {
    settings: &'a Settings,
    default_tol: f64,
    residuals: BTreeMap<String, Residual>,
    notes: Vec<String>,
}

impl Checker<'_> {
    fn add(&mut self, name: &str, value: f64, tol: Option<f64>) {
        let tolerance = self.settings.tolerance.or(tol).unwrap_or(self.default_tol);
        self.residuals.insert(
            name.to_string(),
            Residual {
                value,
                tolerance,
                pass: value <= tolerance,
            },
        );
    }

    /// An exact (integer) condition, reported as residual 0 or 1.
    fn require(&mut self, name: &str, ok: bool) {
        self.residuals.insert(
            name.to_string(),
            Residual {
                value: if ok { 0.0 } else { 1.0 },
                tolerance: 0.0,
                pass: ok,
            },
        );
    }
}

/// Run one fixture.
pub fn run_fixture(f: &Fixture, s: &Settings) -> Result<CheckResult> {
    let q = s.q.unwrap_or_else(|| f.q.into());
    let mut ck = Checker {
        settings: s,
        default_tol: f.tolerance,
        residuals: BTreeMap::new(),
        notes: Vec::new(),
    };
    let outcome = match f.name.as_str() {
        "triple-product" => triple_product(&mut ck, q, params(f)?),
        "rank2-elliptic" => rank2_elliptic(&mut ck, q, params(f)?),
        "residue-alpha0" => residue(&mut ck, q, params(f)?),
        "borel-square" => borel_square(&mut ck, q, params(f)?),
        "sym-square" => sym_square(&mut ck, q, params(f)?),
        "mock-theta" => mock_theta(&mut ck, q, params(f)?),
        "mordell" => mordell(&mut ck, q, params(f)?),
        "homotopy" => homotopy(&mut ck, q, params(f)?),
        "confluent" => confluent(&mut ck, q, params(f)?),
        other => {
            return Err(Error::InvalidArgument(format!(
                "no check is registered for fixture `{other}`"
            )))
        }
    };
    if let Err(e) = outcome {
        ck.notes.push(format!("error: {e}"));
        ck.require("completed", false);
    }
    let max_residual = ck.residuals.values().map(|r| r.value).fold(0.0, f64::max);
    let pass = ck.residuals.values().all(|r| r.pass);
    Ok(CheckResult {
        fixture: f.name.clone(),
        status: if pass { "PASS" } else { "FAIL" }.into(),
        comment: f.comment.clone(),
        max_residual,
        residuals: ck.residuals,
        notes: ck.notes,
    })
}

fn params<T: for<'de> Deserialize<'de>>(f: &Fixture) -> Result<T> {
    serde_json::from_value(f.params.clone()).map_err(|e| Error::Schema {
        field: format!("fixture {} params", f.name),
        message: e.to_string(),
    })
}

fn rel(a: Complex, b: Complex) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

fn c(x: ComplexJson) -> Complex {
    x.into()
}

/// Sampling annulus of a fixture.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Annulus {
    points: usize,
    r_min: f64,
    r_max: f64,
}

fn grid(q: Complex, avoid: &[Complex], a: Annulus) -> Result<Vec<Complex>> {
    let g = sample_grid(q, avoid, a.points, a.r_min, a.r_max, 0.05);
    if g.len() < a.points {
        return Err(Error::InvalidArgument(format!(
            "only {} admissible sample points",
            g.len()
        )));
    }
    Ok(g)
}

// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TripleProductParams {
    kinds: Vec<ThetaKind>,
    annulus: Annulus,
    zeros: [i64; 2],
    zero_tolerance: f64,
}

fn triple_product(ck: &mut Checker, q: Complex, p: TripleProductParams) -> Result<()> {
    let mut worst = [0.0_f64; 3];
    for kind in &p.kinds {
        let zero = match kind {
            ThetaKind::ThetaQLambda { lambda } => -*lambda,
            _ => Complex::new(-1.0, 0.0),
        };
        for z in grid(q, &[zero], p.annulus)? {
            let r = theta_identity_residuals(*kind, z, q)?;
            worst[0] = worst[0].max(r.triple_product);
            worst[1] = worst[1].max(r.shift);
            worst[2] = worst[2].max(r.inversion);
        }
    }
    ck.add("series_vs_product", worst[0], None);
    ck.add("shift_equation", worst[1], None);
    ck.add("inversion_equation", worst[2], None);
    // Zeros of θ_q on -q^ℤ, measured against the growth majorant.
    let mut zero_worst = 0.0_f64;
    for k in p.zeros[0]..=p.zeros[1] {
        let z = -crate::series::qpow(q, k);
        zero_worst = zero_worst.max(thq(z, q)?.norm() / growth_majorant(z / q, q)?);
    }
    ck.add(
        "zeros_on_minus_q_spiral",
        zero_worst,
        Some(p.zero_tolerance),
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rank2Params {
    lambda: ComplexJson,
    mu: ComplexJson,
    annulus: Annulus,
    window: i64,
    constant_tolerance: f64,
}

fn rank2_elliptic(ck: &mut Checker, q: Complex, p: Rank2Params) -> Result<()> {
    let (lambda, mu) = (c(p.lambda), c(p.mu));
    let window = ck.settings.window.unwrap_or(p.window);
    let mut worst = 0.0_f64;
    for z in grid(q, &[-lambda, -mu], p.annulus)? {
        let direct = shifted_tshakaloff_sum(lambda, z, q, window)?
            - shifted_tshakaloff_sum(mu, z, q, window)?;
        worst = worst.max(rel(direct, rank2_elliptic_formula(lambda, mu, z, q)?));
    }
    ck.add("difference_vs_formula", worst, None);
    ck.add(
        "constant_vs_theta_derivative",
        rel(elliptic_constant(q)?, elliptic_constant_by_derivative(q)?),
        Some(p.constant_tolerance),
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResidueParams {
    lambdas: Vec<ComplexJson>,
    radius: f64,
    nodes: usize,
    window: i64,
}

fn residue(ck: &mut Checker, q: Complex, p: ResidueParams) -> Result<()> {
    let window = ck.settings.window.unwrap_or(p.window);
    let mut worst = 0.0_f64;
    for l in p.lambdas.iter().map(|&l| c(l)) {
        let sum = q_euler_sum(q, &Laurent::constant(Complex::new(-1.0, 0.0)), l, q, window)?;
        let res = contour_residue(&|z| sum.eval(z), -l, p.radius * l.norm(), p.nodes)?;
        worst = worst.max(rel(res, residue_alpha0(l, q)?));
    }
    ck.add("contour_vs_closed_form", worst, None);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BorelSquareParams {
    m_max: i64,
    terms: i64,
    order: usize,
    equation_tolerance: f64,
}

fn borel_square(ck: &mut Checker, q: Complex, p: BorelSquareParams) -> Result<()> {
    let values = borel_square_obstructions(q, p.m_max, p.terms)?;
    let worst = values.iter().map(|v| v.relative_error).fold(0.0, f64::max);
    ck.add("obstructions_vs_closed_form", worst, None);
    let order = ck.settings.order.map_or(p.order, |o| o.max(2) as usize);
    ck.add(
        "square_equation",
        square_equation_residual(q, order)?,
        Some(p.equation_tolerance),
    );
    // The convergent representation of the squared Borel transform gives a
    // different normalization; report the ratio for the record.
    for v in values.iter().filter(|v| v.m <= 2) {
        let alt = borel_square_continuation(q, crate::series::qpow(q, v.m), p.terms);
        let ratio = alt / v.value;
        ck.notes.push(format!(
            "m = {}: continuation / termwise = {:.6} {:+.1e}i",
            v.m, ratio.re, ratio.im
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymSquareParams {
    a: ComplexJson,
    b: ComplexJson,
    mu: i64,
    nu: i64,
    u: Vec<TermJson>,
    c: ComplexJson,
    d: ComplexJson,
    annulus: Annulus,
    window: i64,
}

/// Symmetric square of a 2×2 matrix on the basis `(e₁², 2e₁e₂, e₂²)`,
/// written out from `M e₁ = αe₁ + γe₂`, `M e₂ = βe₁ + δe₂`.
fn sym2(m: &CMatrix) -> CMatrix {
    let (al, be, ga, de) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let two = Complex::new(2.0, 0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[
            al * al,
            two * al * be,
            be * be,
            al * ga,
            al * de + be * ga,
            be * de,
            ga * ga,
            two * ga * de,
            de * de,
        ],
    )
}

fn max_rel(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a
        .iter()
        .chain(b.iter())
        .map(|x| x.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale
}

fn sym_square(ck: &mut Checker, q: Complex, p: SymSquareParams) -> Result<()> {
    let window = ck.settings.window.unwrap_or(p.window);
    let u = super::laurent_of(&p.u, "params.u")?;
    let mut us = BTreeMap::new();
    us.insert((0, 1), SeriesMatrix::from_fn(1, 1, |_, _| u.clone()));
    let m = BlockModule::new(
        q,
        vec![
            PureBlock::scalar(p.mu, c(p.a)),
            PureBlock::scalar(p.nu, c(p.b)),
        ],
        us,
    )?;
    let s2 = symmetric_square_module(&m)?;
    let (cc, dd) = (c(p.c), c(p.d));
    let samples = grid(q, &[-cc, -dd], p.annulus)?;
    let mut shape = 0.0_f64;
    for &z in &samples {
        shape = shape.max(max_rel(&sym2(&m.eval(z)), &s2.eval(z)));
    }
    ck.add("module_shape", shape, Some(1e-14));
    let sum = algebraic_sum(&m, cc, window)?;
    let sum2 = algebraic_sum(&s2, cc, window)?;
    let co = stokes_cocycle(&m, cc, dd, window)?;
    let co2 = stokes_cocycle(&s2, cc, dd, window)?;
    let (mut sum_f, mut co_f) = (0.0_f64, 0.0_f64);
    for &z in &samples {
        sum_f = sum_f.max(max_rel(&sym2(&sum.eval(z)?), &sum2.eval(z)?));
        co_f = co_f.max(max_rel(&sym2(&co.eval(z)?), &co2.eval(z)?));
    }
    ck.add("sum_functoriality", sum_f, None);
    ck.add("cocycle_functoriality", co_f, None);
    let mult_ok = [(1, 1), (2, 1), (1, 2), (2, 2)].iter().all(|&(r, s)| {
        let (x, y, w) = symmetric_square_multiplicities(r, s);
        // Dimensions of S²(V₁), V₁⊗V₂, S²(V₂) add up to dim S²(V₁⊕V₂).
        x + y + w == (r + s) * (r + s + 1) / 2 && y == r * s
    });
    ck.require("multiplicities", mult_ok && s2.sizes() == vec![1, 1, 1]);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MockThetaParams {
    u: Vec<TermJson>,
    c: ComplexJson,
    annulus: Annulus,
    order: i64,
    window: i64,
    forbidden_classes: usize,
}

fn mock_theta(ck: &mut Checker, q: Complex, p: MockThetaParams) -> Result<()> {
    let window = ck.settings.window.unwrap_or(p.window);
    let order = ck.settings.order.unwrap_or(p.order);
    let u = super::laurent_of(&p.u, "params.u")?;
    let cc = c(p.c);
    let samples = grid(q, &[-cc], p.annulus)?;
    let r = mock_theta_check(q, &u, cc, &samples, order, window)?;
    ck.add("equation", r.equation_residual, None);
    ck.add("even_odd_split", r.split_residual, None);
    ck.add("invariants_vs_obstructions", r.invariant_mismatch, None);
    ck.add(
        "sum_vs_theta_square_coefficients",
        r.closed_form_mismatch,
        None,
    );
    ck.require(
        "forbidden_classes",
        r.forbidden_classes == p.forbidden_classes,
    );
    let m = mock_theta_module(q, u.clone())?;
    ck.require(
        "direction_generic",
        resonance_set(&m.blocks, q, EIG_TOLERANCE)?.is_generic(cc),
    );
    let minus_one_plus_z =
        Laurent::polynomial(0, vec![Complex::new(-1.0, 0.0), Complex::new(1.0, 0.0)]);
    if u == minus_one_plus_z {
        let sum = algebraic_sum(&m, cc, window)?;
        let mut worst = 0.0_f64;
        for &z in &samples {
            worst = worst.max(rel(
                mock_theta_closed_form(q, cc, z, window)?,
                sum.block(0, 1, z)?[(0, 0)],
            ));
        }
        ck.add("literal_closed_form", worst, None);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MordellParams {
    c: ComplexJson,
    annulus: Annulus,
    window: i64,
}

fn mordell(ck: &mut Checker, q: Complex, p: MordellParams) -> Result<()> {
    let window = ck.settings.window.unwrap_or(p.window);
    let cc = c(p.c);
    let r = mordell_check(q, cc, &grid(q, &[-cc], p.annulus)?, window)?;
    ck.add("functional_equation", r.functional_residual, None);
    ck.add("series_vs_spiral", r.spiral_mismatch, None);
    ck.add("matrix_vs_scalar", r.matrix_mismatch, None);
    ck.add("invariant_vs_borel", r.invariant_mismatch, None);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HomotopyParams {
    seed: u64,
    trials: usize,
    order: usize,
    inputs: usize,
    degree: i64,
}

fn random_poly(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Laurent {
    Laurent::from_fn(lo, hi, crate::series::Tail::Exact, |_| {
        Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn homotopy(ck: &mut Checker, q: Complex, p: HomotopyParams) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    for _ in 0..p.trials {
        // Random operator with an invertible (monomial) leading coefficient.
        let mut coeffs: Vec<Laurent> = (0..p.order)
            .map(|_| random_poly(&mut rng, 0, p.degree))
            .collect();
        let lead = Complex::from_polar(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        coeffs.push(Laurent::monomial(lead, rng.gen_range(-1..=1)));
        let op = QDiffOperator::new(coeffs)?;
        let scalars: Vec<Laurent> = (0..p.inputs)
            .map(|_| random_poly(&mut rng, -p.degree, p.degree))
            .collect();
        let vectors: Vec<Vec<Laurent>> = (0..p.inputs)
            .map(|_| {
                (0..p.order)
                    .map(|_| random_poly(&mut rng, -p.degree, p.degree))
                    .collect()
            })
            .collect();
        let report = homotopy_check(&op, q, &scalars, &vectors, f64::INFINITY)?;
        for (name, r) in report.residuals {
            let e = worst.entry(name).or_insert(0.0);
            *e = e.max(r);
        }
    }
    for (name, r) in worst {
        ck.add(&name, r, None);
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfluentParams {
    parameters: Vec<[ComplexJson; 2]>,
    order: usize,
    annulus: Annulus,
    lambda: ComplexJson,
    mu: ComplexJson,
    points: Vec<ComplexJson>,
    conjecture_tolerance: f64,
}

fn confluent(ck: &mut Checker, q: Complex, p: ConfluentParams) -> Result<()> {
    let order = ck.settings.order.map_or(p.order, |o| o.max(4) as usize);
    let samples = grid(q, &[Complex::new(-1.0, 0.0)], p.annulus)?;
    let mut worst = [0.0_f64; 5];
    for [a, b] in &p.parameters {
        let r = confluent_check(c(*a), c(*b), q, order, &samples)?;
        worst[0] = worst[0].max(r.divergent_residual);
        worst[1] = worst[1].max(r.conjugate_residual);
        worst[2] = worst[2].max(r.convergent_residual);
        worst[3] = worst[3].max(r.factorization_residual);
        if let Some(x) = r.closed_form_residual {
            worst[4] = worst[4].max(x);
        }
    }
    ck.add("divergent_solution", worst[0], None);
    ck.add("conjugate_equation", worst[1], None);
    ck.add("convergent_solution", worst[2], None);
    ck.add("factorization", worst[3], None);
    ck.add("zero_parameter_coefficients", worst[4], None);
    ck.notes.push("the normalized divergent solution satisfies q z g0 (sigma f) - (sigma g0) f = -(-abqz; 1/q)_inf".into());
    let mut conj = 0.0_f64;
    for &z in &p.points {
        conj = conj.max(zero_case_conjecture(c(p.lambda), c(p.mu), c(z), q, order)?.relative_error);
    }
    ck.add(
        "zero_case_stokes_difference",
        conj,
        Some(p.conjecture_tolerance),
    );
    Ok(())
}
