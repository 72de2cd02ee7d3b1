//! q-difference operators `P = Σ aᵢ σ_qⁱ`: Newton polygon, irregularity,
//! index, companion vectorization and the chain homotopy between the scalar
//! complex `K --P--> K` and the companion complex `Kⁿ --(σ - A_P)--> Kⁿ`.

use num_rational::Rational64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{Complex, Laurent, SeriesMatrix};

/// `P = Σ_{i=0}^n aᵢ σ_qⁱ` with `a₀, aₙ ≠ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QDiffOperator {
    coeffs: Vec<Laurent>,
}

impl QDiffOperator {
    /// Build from coefficients `a₀, …, aₙ`; both extreme coefficients must
    /// have a valuation.
    pub fn new(coeffs: Vec<Laurent>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::UndefinedValuation(0));
        }
        let n = coeffs.len() - 1;
        coeffs[0]
            .valuation()
            .map_err(|_| Error::UndefinedValuation(0))?;
        coeffs[n]
            .valuation()
            .map_err(|_| Error::UndefinedValuation(n))?;
        Ok(QDiffOperator { coeffs })
    }

    /// `σ_q - u` style first-order operator `b σ_q + a`.
    pub fn first_order(a: Laurent, b: Laurent) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Laurent] {
        &self.coeffs
    }

    /// `P(f) = Σ aᵢ σ_qⁱ f`.
    pub fn apply(&self, f: &Laurent, q: Complex) -> Laurent {
        let mut acc = Laurent::zero();
        for (i, a) in self.coeffs.iter().enumerate() {
            acc = acc + a * f.sigma(i as i64, q);
        }
        acc
    }

    /// Composition `self ∘ other` in the skew ring: `(a σⁱ)(b σʲ) = a σⁱ(b) σ^{i+j}`.
    pub fn compose(&self, other: &QDiffOperator, q: Complex) -> Result<QDiffOperator> {
        let n = self.order() + other.order();
        let mut out = vec![Laurent::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b.sigma(i as i64, q);
            }
        }
        QDiffOperator::new(out.into_iter().map(Laurent::trim).collect())
    }
}

/// One edge of the Newton polygon: slope `mu` with horizontal length `mult`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slope {
    #[serde(serialize_with = "ser_rational")]
    pub mu: Rational64,
    pub mult: usize,
}

fn ser_rational<S: serde::Serializer>(
    r: &Rational64,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    if *r.denom() == 1 {
        s.serialize_i64(*r.numer())
    } else {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }
}

/// Slopes with multiplicities, strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct NewtonPolygon {
    pub slopes: Vec<Slope>,
}

impl NewtonPolygon {
    /// Build from `(slope, multiplicity)` pairs, merging equal slopes.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Rational64, usize)>) -> Self {
        let mut v: Vec<(Rational64, usize)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        v.sort();
        let mut slopes: Vec<Slope> = Vec::new();
        for (mu, mult) in v {
            match slopes.last_mut() {
                Some(s) if s.mu == mu => s.mult += mult,
                _ => slopes.push(Slope { mu, mult }),
            }
        }
        NewtonPolygon { slopes }
    }

    /// Multiset union (the polygon of a product of operators).
    pub fn union(&self, other: &NewtonPolygon) -> NewtonPolygon {
        Self::from_pairs(
            self.slopes
                .iter()
                .chain(&other.slopes)
                .map(|s| (s.mu, s.mult)),
        )
    }

    pub fn rank(&self) -> usize {
        self.slopes.iter().map(|s| s.mult).sum()
    }

    pub fn is_integral(&self) -> bool {
        self.slopes.iter().all(|s| s.mu.is_integer())
    }

    /// Multiplicity of slope `mu` (zero if absent).
    pub fn multiplicity(&self, mu: Rational64) -> usize {
        self.slopes
            .iter()
            .find(|s| s.mu == mu)
            .map_or(0, |s| s.mult)
    }
}

/// Lower convex hull of the points `(i, v₀(aᵢ))`, computed on integers.
pub fn newton_polygon(p: &QDiffOperator) -> Result<NewtonPolygon> {
    let mut pts: Vec<(i64, i64)> = Vec::new();
    for (i, a) in p.coeffs.iter().enumerate() {
        match a.valuation() {
            Ok(v) => pts.push((i as i64, v)),
            Err(_) if i == 0 || i == p.order() => return Err(Error::UndefinedValuation(i)),
            Err(_) => {}
        }
    }
    // Monotone chain, lower part; points are already sorted by abscissa.
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for pt in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    Ok(NewtonPolygon::from_pairs(hull.windows(2).map(|w| {
        let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        (Rational64::new(dy, dx), dx as usize)
    })))
}

/// Irregularity `Σ_{μ>0} r(μ) μ`.
pub fn irregularity(np: &NewtonPolygon) -> Rational64 {
    np.slopes
        .iter()
        .filter(|s| s.mu > Rational64::from_integer(0))
        .map(|s| s.mu * Rational64::from_integer(s.mult as i64))
        .sum()
}

/// Where kernels and cokernels are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Formal Laurent series: every operator has index 0.
    Formal,
    /// Convergent Laurent series: the index is minus the irregularity.
    Convergent,
}

/// Index `dim ker - dim coker` of `P` acting on the chosen function space.
pub fn index(p: &QDiffOperator, setting: Setting) -> Result<i64> {
    let np = newton_polygon(p)?;
    if !np.is_integral() {
        return Err(Error::NonIntegralSlopes);
    }
    Ok(match setting {
        Setting::Formal => 0,
        Setting::Convergent => -irregularity(&np).to_integer(),
    })
}

/// Monic coefficients `b₀ = 1, b₁, …, bₙ` with `P/aₙ = Σ_k b_k σ^{n-k}`.
fn monic(p: &QDiffOperator) -> Result<Vec<Laurent>> {
    let n = p.order();
    let inv = p.coeffs[n]
        .invert()
        .map_err(|_| Error::NonInvertibleLeading)?;
    let mut b = vec![Laurent::constant(Complex::new(1.0, 0.0))];
    for k in 1..=n {
        b.push(&p.coeffs[n - k] * &inv);
    }
    Ok(b)
}

/// Companion matrix: ones on the superdiagonal, last row
/// `(-a₀/aₙ, …, -a_{n-1}/aₙ)`.
pub fn companion(p: &QDiffOperator) -> Result<SeriesMatrix> {
    let n = p.order();
    let b = monic(p)?;
    let mut m = SeriesMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m.set(i, i + 1, Laurent::constant(Complex::new(1.0, 0.0)));
    }
    for j in 0..n {
        m.set(n - 1, j, -&b[n - j]);
    }
    Ok(m)
}

/// Residuals of the homotopy identities, in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub residuals: Vec<(String, f64)>,
}

impl HomotopyReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

type Vector = Vec<Laurent>;

fn vsub(a: &Vector, b: &Vector) -> Vector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Relative residual between two vectors of series on their common window.
fn vres(a: &Vector, b: &Vector) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .map(|s| s.max_abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    vsub(a, b).iter().map(|s| s.max_abs()).fold(0.0, f64::max) / scale
}

/// The maps of the homotopy between the scalar and companion complexes.
struct Homotopy {
    n: usize,
    q: Complex,
    b: Vec<Laurent>,
    a: SeriesMatrix,
}

impl Homotopy {
    /// `V(f) = (f, σf, …, σ^{n-1} f)`.
    fn v(&self, f: &Laurent) -> Vector {
        (0..self.n).map(|i| f.sigma(i as i64, self.q)).collect()
    }

    /// `I(g) = (0, …, 0, g)`.
    fn i(&self, g: &Laurent) -> Vector {
        let mut out = vec![Laurent::zero(); self.n];
        out[self.n - 1] = g.clone();
        out
    }

    fn pi1(&self, g: &Vector) -> Laurent {
        g[0].clone()
    }

    /// Horner operator `P_i = Σ_{k=0}^{n-i} b_k σ^{n-i-k}` applied to `g`.
    fn horner(&self, i: usize, g: &Laurent) -> Laurent {
        let mut acc = Laurent::zero();
        for k in 0..=(self.n - i) {
            acc = acc + &self.b[k] * g.sigma((self.n - i - k) as i64, self.q);
        }
        acc
    }

    /// `Π(g) = Σ P_i gᵢ`.
    fn big_pi(&self, g: &Vector) -> Laurent {
        (1..=self.n).fold(Laurent::zero(), |acc, i| acc + self.horner(i, &g[i - 1]))
    }

    /// Monic scalar operator.
    fn p(&self, f: &Laurent) -> Laurent {
        self.horner(0, f)
    }

    /// `Δ = σ - A_P`.
    fn delta(&self, g: &Vector) -> Vector {
        (0..self.n)
            .map(|r| {
                let mut acc = g[r].sigma(1, self.q);
                for c in 0..self.n {
                    let e = self.a.get(r, c);
                    if !(e.is_exact() && e.is_empty()) {
                        acc = acc - e * &g[c];
                    }
                }
                acc
            })
            .collect()
    }

    /// `Δ'(g)_i = Σ_{j+k=i-1, k≥1} σʲ g_k` (1-based indices).
    fn delta_prime(&self, g: &Vector) -> Vector {
        (1..=self.n)
            .map(|i| {
                let mut acc = Laurent::zero();
                for k in 1..i {
                    let j = i - 1 - k;
                    acc = acc + g[k - 1].sigma(j as i64, self.q);
                }
                acc
            })
            .collect()
    }
}

/// Check the homotopy identities on sample inputs:
///
/// - `π₁∘V = Id` and `Π∘I = Id` (the pair of maps is a section);
/// - `Δ∘V = I∘P` and `Π∘Δ = P∘π₁` (both are morphisms of complexes);
/// - `V∘π₁ - Id = Δ'∘Δ` and `I∘Π - Id = Δ∘Δ'`.
///
/// Returns the relative residuals, or [`Error::IdentityViolated`] if one
/// exceeds `tol`.
pub fn homotopy_check(
    p: &QDiffOperator,
    q: Complex,
    scalars: &[Laurent],
    vectors: &[Vec<Laurent>],
    tol: f64,
) -> Result<HomotopyReport> {
    let n = p.order();
    let h = Homotopy {
        n,
        q,
        b: monic(p)?,
        a: companion(p)?,
    };
    let mut worst = [0.0_f64; 6];
    for f in scalars {
        worst[0] = worst[0].max(vres(&vec![h.pi1(&h.v(f))], &vec![f.clone()]));
        worst[1] = worst[1].max(vres(&vec![h.big_pi(&h.i(f))], &vec![f.clone()]));
        worst[2] = worst[2].max(vres(&h.delta(&h.v(f)), &h.i(&h.p(f))));
    }
    for g in vectors {
        if g.len() != n {
            return Err(Error::WrongShape(format!(
                "vector of length {} for order {n}",
                g.len()
            )));
        }
        worst[3] = worst[3].max(vres(&vec![h.big_pi(&h.delta(g))], &vec![h.p(&h.pi1(g))]));
        let lhs = vsub(&h.v(&h.pi1(g)), g);
        worst[4] = worst[4].max(vres(&lhs, &h.delta_prime(&h.delta(g))));
        let lhs = vsub(&h.i(&h.big_pi(g)), g);
        worst[5] = worst[5].max(vres(&lhs, &h.delta(&h.delta_prime(g))));
    }
    let names = [
        "pi1 . V = Id",
        "Pi . I = Id",
        "Delta . V = I . P",
        "Pi . Delta = P . pi1",
        "V . pi1 - Id = Delta' . Delta",
        "I . Pi - Id = Delta . Delta'",
    ];
    let report = HomotopyReport {
        residuals: names
            .iter()
            .zip(worst)
            .map(|(n, r)| (n.to_string(), r))
            .collect(),
    };
    for (which, residual) in &report.residuals {
        if !(*residual <= tol) {
            return Err(Error::IdentityViolated {
                which: which.clone(),
                residual: *residual,
            });
        }
    }
    Ok(report)
}
