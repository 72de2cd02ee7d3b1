//! Stokes cocycles between summation directions and the worked identities
//! they satisfy: the rank-2 elliptic difference formula, residues, privileged
//! cocycle dimensions, dévissage coordinates, symmetric squares, and the
//! confluent / mock-theta / Mordell examples.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::module_rep::{
    resonance_set, spiral_distance, unipotent_inverse_numeric, BlockModule, PureBlock,
    EIG_TOLERANCE, RESONANCE_MARGIN,
};
use crate::normal_form::{bg_normal_form, formal_solution};
use crate::reduction::{obstructions, two_slope_invariant, INVARIANT_TAIL_EPSILON};
use crate::series::{qpow, CMatrix, Complex, Laurent, SeriesMatrix, Tail};
use crate::special_fn::{
    check_q, euler_constant, pochhammer, theta_laurent, thq, tshakaloff, PochhammerLength,
    ThetaKind,
};
use crate::summation::{algebraic_sum, q_euler_spiral, q_euler_sum, AlgebraicSum, POLE_EPSILON};

fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

fn rel(a: Complex, b: Complex) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------
// Cocycles

/// `F_{c,d} = F_c⁻¹ F_d`: an automorphism of the graded module, flat at 0.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub module: BlockModule,
    pub from: AlgebraicSum,
    pub to: AlgebraicSum,
}

/// Least-squares quadratic fit of `ln|entry(z₀q^{-m})|` in `m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessFit {
    /// `(m, ln|entry|)` samples above the cancellation floor.
    pub points: Vec<(f64, f64)>,
    /// Fitted coefficient of `m²`.
    pub leading: f64,
    /// Predicted coefficient `-δ ln|q| / 2`.
    pub expected: f64,
}

impl FlatnessFit {
    /// Relative deviation of the fitted from the predicted coefficient.
    pub fn deviation(&self) -> f64 {
        ((self.leading - self.expected) / self.expected).abs()
    }
}

impl Cocycle {
    pub fn eval(&self, z: Complex) -> Result<CMatrix> {
        Ok(unipotent_inverse_numeric(&self.from.eval(z)?) * self.to.eval(z)?)
    }

    /// Relative residual of `F_{c,d}(qz) A₀(z) = A₀(z) F_{c,d}(z)`.
    pub fn automorphism_residual(&self, z: Complex) -> Result<f64> {
        let a0 = self.module.graded().eval(z);
        let lhs = self.eval(self.module.q * z)? * &a0;
        let rhs = &a0 * self.eval(z)?;
        let scale = linalg::max_abs(&lhs).max(linalg::max_abs(&rhs)).max(1.0);
        Ok(linalg::max_abs(&(lhs - rhs)) / scale)
    }

    /// Largest off-diagonal modulus of `F_{c,d}` over `samples`.
    pub fn max_off_diagonal(&self, samples: &[Complex]) -> Result<f64> {
        let mut best = 0.0_f64;
        for &z in samples {
            let m = self.eval(z)? - CMatrix::identity(self.module.rank(), self.module.rank());
            best = best.max(linalg::max_abs(&m));
        }
        Ok(best)
    }

    /// Fit the decay of block `(i, j)` along `z₀ q^{-m}`, `m ∈ ms`. Samples
    /// whose value is below `1e-11` times the summed functions (where the
    /// difference of the two sums is pure cancellation) are discarded.
    pub fn flatness(
        &self,
        i: usize,
        j: usize,
        z0: Complex,
        ms: std::ops::RangeInclusive<i64>,
    ) -> Result<FlatnessFit> {
        let q = self.module.q;
        let off = self.module.offsets();
        let sizes = self.module.sizes();
        let mut points = Vec::new();
        for m in ms {
            let z = z0 * qpow(q, -m);
            let st = self.eval(z)?;
            let block = st.view((off[i], off[j]), (sizes[i], sizes[j])).into_owned();
            let value = linalg::max_abs(&block);
            let floor = 1e-11
                * linalg::max_abs(&self.from.eval(z)?).max(linalg::max_abs(&self.to.eval(z)?));
            if value > floor && value > 0.0 {
                points.push((m as f64, value.ln()));
            }
        }
        let [leading, _, _] = linalg::quadratic_fit(&points)?;
        let delta = (self.module.blocks[j].mu - self.module.blocks[i].mu) as f64;
        Ok(FlatnessFit {
            points,
            leading,
            expected: -delta * q.norm().ln() / 2.0,
        })
    }
}

/// The cocycle `F_c⁻¹F_d` of `m` for two generic, distinct directions.
pub fn stokes_cocycle(m: &BlockModule, c: Complex, d: Complex, window: i64) -> Result<Cocycle> {
    if spiral_distance(c, d, m.q) < RESONANCE_MARGIN {
        return Err(Error::DirectionsEqual);
    }
    Ok(Cocycle {
        module: m.clone(),
        from: algebraic_sum(m, c, window)?,
        to: algebraic_sum(m, d, window)?,
    })
}

/// Outcome of [`triviality_verdict`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub max_off_diagonal: f64,
    pub threshold: f64,
    pub trivial: bool,
}

/// Whether every cocycle between consecutive `directions` is the identity
/// over `samples` (off-diagonal magnitude at most `10·tol`).
pub fn triviality_verdict(
    m: &BlockModule,
    directions: &[Complex],
    samples: &[Complex],
    tol: f64,
    window: i64,
) -> Result<Verdict> {
    let mut best = 0.0_f64;
    for w in directions.windows(2) {
        let cc = stokes_cocycle(m, w[0], w[1], window)?;
        best = best.max(cc.max_off_diagonal(samples)?);
    }
    let threshold = 10.0 * tol;
    Ok(Verdict {
        max_off_diagonal: best,
        threshold,
        trivial: best <= threshold,
    })
}

// ---------------------------------------------------------------------------
// Rank-2 identities

/// `C = (q⁻¹; q⁻¹)_∞³`.
pub fn elliptic_constant(q: Complex) -> Result<Complex> {
    Ok(euler_constant(q)?.powi(3))
}

/// `-θ_q'(-1)` by a central finite difference (independent of the product).
pub fn elliptic_constant_by_derivative(q: Complex) -> Result<Complex> {
    let h = 1e-5;
    let x = Complex::new(-1.0, 0.0);
    Ok(-(thq(x + h, q)? - thq(x - h, q)?) / (2.0 * h))
}

/// Predicted `S_λ f̂ - S_μ f̂` for `f̂ = Ĉ(qz)`, the formal solution of
/// `(qzσ_q - 1) f = -1`:
/// `C θ_q(-λ/μ) θ_q(z/λμ) / (θ_q(-1/λ) θ_q(-1/μ) θ_q(λ/z) θ_q(z/μ))`.
pub fn rank2_elliptic_formula(
    lambda: Complex,
    mu: Complex,
    z: Complex,
    q: Complex,
) -> Result<Complex> {
    check_q(q)?;
    if lambda == Complex::default() || mu == Complex::default() || z == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let near = |a: Complex, b: Complex| spiral_distance(a, b, q) < POLE_EPSILON;
    if near(lambda, one()) || near(mu, one()) || near(z, -lambda) || near(z, -mu) {
        return Err(Error::PoleHit);
    }
    let num = elliptic_constant(q)? * thq(-lambda / mu, q)? * thq(z / (lambda * mu), q)?;
    let den = thq(-lambda.inv(), q)? * thq(-mu.inv(), q)? * thq(lambda / z, q)? * thq(z / mu, q)?;
    Ok(num / den)
}

/// The sum `S_λ Ĉ(qz)` with simple poles on `[-λ; q]`.
pub fn shifted_tshakaloff_sum(
    lambda: Complex,
    z: Complex,
    q: Complex,
    window: i64,
) -> Result<Complex> {
    q_euler_sum(q, &Laurent::constant(-one()), lambda, q, window)?.eval(z)
}

/// Residue `α₀ = λ / θ_q(-1/λ)` of `S_λ Ĉ(qz)` at `z = -λ`.
pub fn residue_alpha0(lambda: Complex, q: Complex) -> Result<Complex> {
    Ok(lambda / thq(-lambda.inv(), q)?)
}

/// `(1/2πi) ∮ f` over the circle of `radius` about `center`, by the
/// trapezoid rule with `points` nodes (spectrally accurate for analytic
/// integrands).
pub fn contour_residue(
    f: &dyn Fn(Complex) -> Result<Complex>,
    center: Complex,
    radius: f64,
    points: usize,
) -> Result<Complex> {
    let mut acc = Complex::default();
    for k in 0..points {
        let w = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / points as f64);
        acc += f(center + w * radius)? * w;
    }
    Ok(acc * radius / points as f64)
}

// ---------------------------------------------------------------------------
// Privileged cocycles and dévissage

/// Dimension of the space of solutions of `(σX) z^{μⱼ}Aⱼ = z^{μᵢ}AᵢX` of
/// the form `X = (θ_{q,a}θ_{q,b})^{-δ} Y`, `Y` holomorphic on `ℂ*`: the
/// numeric nullity of the induced recurrence
/// `qⁿYₙ = (ab)^{-δ} Aᵢ Y_{n-δ} Aⱼ⁻¹` on `n ∈ [-probe, probe]`.
pub fn privileged_space_dimension(
    a_i: &CMatrix,
    a_j: &CMatrix,
    delta: i64,
    a: Complex,
    b: Complex,
    q: Complex,
    probe: i64,
) -> Result<usize> {
    check_q(q)?;
    if spiral_distance(a, b, q) < RESONANCE_MARGIN {
        return Err(Error::DirectionsEqual);
    }
    if delta == 0 {
        return Ok(0);
    }
    if delta < 0 {
        return Err(Error::InvalidArgument(
            "slope difference must be non-negative".into(),
        ));
    }
    let (ri, rj) = (a_i.nrows(), a_j.nrows());
    let bs = ri * rj;
    let aj_inv = a_j
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("A_j".into()))?;
    // vec(Aᵢ Y Aⱼ⁻¹) = (Aⱼ⁻ᵀ ⊗ Aᵢ) vec Y.
    let step = linalg::kron(&aj_inv.transpose(), a_i) * (a * b).powi(-(delta as i32));
    let unknowns = (2 * probe + 1) as usize;
    let rows = (2 * probe + 1 - delta).max(0) as usize;
    let mut sys = CMatrix::zeros(rows * bs, unknowns * bs);
    for (row, n) in (-probe + delta..=probe).enumerate() {
        let col = |k: i64| ((k + probe) as usize) * bs;
        // Divide the equation by max(|qⁿ|, |step|) to keep rows balanced.
        let qn = qpow(q, n);
        let s = qn.norm().max(linalg::max_abs(&step)).max(f64::MIN_POSITIVE);
        let mut diag = CMatrix::identity(bs, bs) * (qn / s);
        sys.view_mut((row * bs, col(n)), (bs, bs)).copy_from(&diag);
        diag = -&step / Complex::new(s, 0.0);
        sys.view_mut((row * bs, col(n - delta)), (bs, bs))
            .copy_from(&diag);
    }
    Ok(unknowns * bs - linalg::rank(&sys, 1e-10))
}

/// Normal-form coefficients grouped by level `δ = μⱼ - μᵢ`: for every
/// present block `U_{ij}`, the coefficient matrices at exponents
/// `μᵢ .. μⱼ-1` (in that order). Coefficients outside that window are not
/// coordinates and are ignored; run [`bg_normal_form`] first.
pub fn devissage_coordinates(m: &BlockModule) -> BTreeMap<i64, Vec<CMatrix>> {
    let mut out: BTreeMap<i64, Vec<CMatrix>> = BTreeMap::new();
    for (&(i, j), u) in &m.u {
        let (lo, hi) = (m.blocks[i].mu, m.blocks[j].mu);
        let entry = out.entry(hi - lo).or_default();
        for e in lo..hi {
            entry.push(u.coeff(e));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Symmetric square

/// Block multiplicities `((r²+r)/2, rs, (s²+s)/2)` of the symmetric square
/// of a two-slope module with ranks `(r, s)`.
pub fn symmetric_square_multiplicities(r: usize, s: usize) -> (usize, usize, usize) {
    ((r * r + r) / 2, r * s, (s * s + s) / 2)
}

/// Symmetric square of `[[a z^μ, u], [0, b z^ν]]` in the basis
/// `(e₁², 2e₁e₂, e₂²)`: diagonal `(a² z^{2μ}, ab z^{μ+ν}, b² z^{2ν})` and
/// entries `U₁₂ = 2a z^μ u`, `U₁₃ = u²`, `U₂₃ = b z^ν u`.
pub fn symmetric_square_module(m: &BlockModule) -> Result<BlockModule> {
    if m.len() != 2 || m.sizes() != [1, 1] {
        return Err(Error::WrongShape(format!(
            "expected two rank-1 blocks, got sizes {:?}",
            m.sizes()
        )));
    }
    let (mu, nu) = (m.blocks[0].mu, m.blocks[1].mu);
    let (a, b) = (m.blocks[0].a[(0, 0)], m.blocks[1].a[(0, 0)]);
    let u = m.u_block(0, 1).get(0, 0).clone();
    let one_by_one = |l: Laurent| SeriesMatrix::from_fn(1, 1, |_, _| l.clone());
    let blocks = vec![
        PureBlock::scalar(2 * mu, a * a),
        PureBlock::scalar(mu + nu, a * b),
        PureBlock::scalar(2 * nu, b * b),
    ];
    let mut us = BTreeMap::new();
    us.insert((0, 1), one_by_one(u.shift(mu).scale(2.0 * a)));
    us.insert((0, 2), one_by_one(&u * &u));
    us.insert((1, 2), one_by_one(u.shift(nu).scale(b)));
    BlockModule::new(m.q, blocks, us)
}

/// `S²F = [[1, 2f, f²], [0, 1, f], [0, 0, 1]]` for `F = [[1, f], [0, 1]]`.
pub fn symmetric_square_gauge(f: &SeriesMatrix) -> Result<SeriesMatrix> {
    if f.nrows() != 2 || f.ncols() != 2 {
        return Err(Error::WrongShape(format!(
            "expected a 2x2 gauge, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let e = f.get(0, 1).clone();
    let mut out = SeriesMatrix::identity(3);
    out.set(0, 1, e.scale(Complex::new(2.0, 0.0)));
    out.set(0, 2, &e * &e);
    out.set(1, 2, e);
    Ok(out)
}

/// Numeric counterpart of [`symmetric_square_gauge`].
pub fn symmetric_square_matrix(f: &CMatrix) -> Result<CMatrix> {
    if f.nrows() != 2 || f.ncols() != 2 {
        return Err(Error::WrongShape(format!(
            "expected a 2x2 matrix, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let e = f[(0, 1)];
    let mut out = CMatrix::identity(3, 3);
    out[(0, 1)] = e * 2.0;
    out[(0, 2)] = e * e;
    out[(1, 2)] = e;
    Ok(out)
}

/// One value of the square-of-Tshakaloff Borel obstruction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorelSquareValue {
    pub m: i64,
    #[serde(with = "crate::cli::complex_serde")]
    pub value: Complex,
    #[serde(with = "crate::cli::complex_serde")]
    pub closed_form: Complex,
    pub relative_error: f64,
}

/// `(-1)ᵐ q^{m(3m+1)/2} (q⁻¹;q⁻¹)ₘ (q⁻¹;q⁻¹)_∞`.
pub fn borel_square_closed_form(q: Complex, m: i64) -> Result<Complex> {
    let p = q.inv();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    Ok(qpow(q, m * (3 * m + 1) / 2)
        * sign
        * pochhammer(p, p, PochhammerLength::Finite(m))?
        * euler_constant(q)?)
}

/// `P(ξ) = Π_{k≤K}(1 - q^{-k}ξ) · B_q(Ĉ²)(ξ)` with `B_q(Ĉ²)` expanded by the
/// termwise product rule `Σₙ aₙ q^{-n(n-1)/2} ξⁿ B_qĈ(q^{-n}ξ)` and
/// `B_qĈ(x) = 1/(1-x)`, so that term `n` is `ξⁿ Π_{k≠n}(1 - q^{-k}ξ)`.
pub fn borel_square_termwise(q: Complex, xi: Complex, terms: i64) -> Complex {
    let mut acc = Complex::default();
    for n in 0..=terms {
        let mut t = qpow(xi, n);
        for k in 0..=terms {
            if k != n {
                t *= one() - qpow(q, -k) * xi;
            }
        }
        acc += t;
    }
    acc
}

/// The same partial product times the convergent representation
/// `B_q(Ĉ²)(ξ) = Σ_k q^{-k²} ξ^{2k} (1 + q^{-k}ξ)/(1 - q^{-k}ξ)`.
pub fn borel_square_continuation(q: Complex, xi: Complex, terms: i64) -> Complex {
    let mut acc = Complex::default();
    for k in 0..=terms {
        let mut t = qpow(q, -k * k) * qpow(xi, 2 * k) * (one() + qpow(q, -k) * xi);
        for j in 0..=terms {
            if j != k {
                t *= one() - qpow(q, -j) * xi;
            }
        }
        acc += t;
    }
    acc
}

/// Evaluate [`borel_square_termwise`] at `ξ = qᵐ`, `m = 0..=m_max`, and
/// compare with the closed form. `terms` must leave a negligible tail
/// `|q|^{m_max - terms}`.
pub fn borel_square_obstructions(
    q: Complex,
    m_max: i64,
    terms: i64,
) -> Result<Vec<BorelSquareValue>> {
    check_q(q)?;
    let tail = q.norm().powf((m_max - terms) as f64);
    if tail > 1e-15 {
        return Err(Error::TruncationInsufficient(format!(
            "{terms} factors leave a tail of {tail:.1e} at m = {m_max}"
        )));
    }
    (0..=m_max)
        .map(|m| {
            let value = borel_square_termwise(q, qpow(q, m), terms);
            let closed_form = borel_square_closed_form(q, m)?;
            Ok(BorelSquareValue {
                m,
                value,
                closed_form,
                relative_error: rel(value, closed_form),
            })
        })
        .collect()
}

/// Max relative residual of `L Ĉ² = 1 + z`,
/// `L = q²z³σ_q² - z(1+z)σ_q + 1`, on the coefficients `0 ..= order-2`,
/// each measured against the largest of the four terms it combines.
pub fn square_equation_residual(q: Complex, order: usize) -> Result<f64> {
    let c = tshakaloff(order, q);
    let y = (&c * &c).truncate(order as i64);
    let yc = |n: i64| {
        if n < 0 {
            Complex::default()
        } else {
            y.coeff(n)
        }
    };
    let mut worst = 0.0_f64;
    for n in 0..=(order as i64 - 2) {
        let t = [
            qpow(q, 2 + 2 * (n - 3)) * yc(n - 3),
            -qpow(q, n - 1) * yc(n - 1),
            -qpow(q, n - 2) * yc(n - 2),
            yc(n),
        ];
        let target = if n <= 1 { one() } else { Complex::default() };
        let res: Complex = t.iter().sum::<Complex>() - target;
        let scale = t.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if !scale.is_finite() {
            return Err(Error::Overflow("square equation residual"));
        }
        worst = worst.max(res.norm() / scale);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Confluent basic hypergeometric example

/// Residuals of the confluent example `L = q²z(σ-a)(σ-b) - (σ-1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfluentReport {
    /// `L f̂ = 0` on the coefficients of the divergent solution.
    pub divergent_residual: f64,
    /// `(σ² - (1+(a+b)q²z)σ + qz(1+abq²z)) g₀ = 0` on coefficients.
    pub conjugate_residual: f64,
    /// `L(g₀ / (z θ_q)) = 0` at sample points.
    pub convergent_residual: f64,
    /// Factorization through the first-order equation
    /// `qz g₀ σf̂ - (σg₀) f̂ = (-abqz; q⁻¹)_∞` on coefficients.
    pub factorization_residual: f64,
    /// `a = b = 0`: `g₀ₙ = (-1)ⁿ q^{-n²} / (q⁻¹;q⁻¹)ₙ`.
    pub closed_form_residual: Option<f64>,
}

impl ConfluentReport {
    pub fn max(&self) -> f64 {
        [
            self.divergent_residual,
            self.conjugate_residual,
            self.convergent_residual,
            self.factorization_residual,
        ]
        .into_iter()
        .chain(self.closed_form_residual)
        .fold(0.0, f64::max)
    }
}

/// Coefficients of the divergent solution `f̂ = Σ uₙ zⁿ`,
/// `(q^{n+1} - 1) u_{n+1} = q² (qⁿ - a)(qⁿ - b) uₙ`, `u₀ = 1`.
pub fn confluent_divergent(a: Complex, b: Complex, q: Complex, order: usize) -> Laurent {
    let mut u = vec![one()];
    for n in 0..order as i64 {
        let qn = qpow(q, n);
        let next = q * q * (qn - a) * (qn - b) * u[n as usize] / (qpow(q, n + 1) - one());
        u.push(next);
    }
    Laurent::truncated(0, u)
}

/// Coefficients of `g₀ ∈ 1 + z ℂ{z}`:
/// `(q^{2n} - qⁿ) γₙ = ((a+b) q^{n+1} - q) γ_{n-1} - ab q³ γ_{n-2}`.
pub fn confluent_convergent(a: Complex, b: Complex, q: Complex, order: usize) -> Laurent {
    let mut g = vec![one()];
    for n in 1..=order as i64 {
        let prev = g[(n - 1) as usize];
        let prev2 = if n >= 2 {
            g[(n - 2) as usize]
        } else {
            Complex::default()
        };
        let rhs = ((a + b) * qpow(q, n + 1) - q) * prev - a * b * qpow(q, 3) * prev2;
        g.push(rhs / (qpow(q, 2 * n) - qpow(q, n)));
    }
    Laurent::truncated(0, g)
}

/// Largest relative residual of `Σ terms = target` per coefficient. Rows
/// whose scale has decayed below the normal `f64` range (where relative
/// precision is lost to gradual underflow) are skipped.
fn coefficient_residual(terms: &[Laurent], target: &Laurent, upto: i64) -> f64 {
    let floor = f64::MIN_POSITIVE / f64::EPSILON;
    let mut worst = 0.0_f64;
    for n in 0..=upto {
        let parts: Vec<Complex> = terms.iter().map(|t| t.get(n).unwrap_or_default()).collect();
        let res = parts.iter().sum::<Complex>() - target.get(n).unwrap_or_default();
        let scale = parts
            .iter()
            .map(|x| x.norm())
            .fold(target.get(n).unwrap_or_default().norm(), f64::max);
        if scale < floor {
            continue;
        }
        worst = worst.max(res.norm() / scale);
    }
    worst
}

/// Run the confluent checks at `order` coefficients and the sample points.
pub fn confluent_check(
    a: Complex,
    b: Complex,
    q: Complex,
    order: usize,
    samples: &[Complex],
) -> Result<ConfluentReport> {
    check_q(q)?;
    let z = Laurent::monomial(one(), 1);
    let q2 = q * q;
    let upto = order as i64 - 3;
    // L f̂ = q²z σ²f̂ - (1 + (a+b)q²z) σf̂ + (1 + ab q²z) f̂.
    let f = confluent_divergent(a, b, q, order);
    let divergent_residual = coefficient_residual(
        &[
            (&z * &f.sigma(2, q)).scale(q2),
            -(&f.sigma(1, q) + &(&z * &f.sigma(1, q)).scale((a + b) * q2)),
            &f + &(&z * &f).scale(a * b * q2),
        ],
        &Laurent::zero(),
        upto,
    );
    let g = confluent_convergent(a, b, q, order);
    let conjugate_residual = coefficient_residual(
        &[
            g.sigma(2, q),
            -(&g.sigma(1, q) + &(&z * &g.sigma(1, q)).scale((a + b) * q2)),
            (&z * &g).scale(q) + (&z * &(&z * &g)).scale(a * b * q * q2),
        ],
        &Laurent::zero(),
        upto,
    );
    // Product (-abqz; q⁻¹)_∞ = Π_{n≥1}(1 + ab q^{2-n} z) as a series.
    let mut prod = Laurent::constant(one());
    let mut k = 1;
    loop {
        let c = a * b * qpow(q, 2 - k);
        if c.norm() < 1e-18 || k > 400 {
            break;
        }
        prod = (&prod * &Laurent::polynomial(0, vec![one(), c])).chop(0, order as i64);
        k += 1;
    }
    let factorization_residual = coefficient_residual(
        &[
            (&z * &(&g * &f.sigma(1, q))).scale(q),
            -(&g.sigma(1, q) * &f),
        ],
        &-prod,
        upto,
    );
    // Convergent solution f₀ = g₀ / (z θ_q) evaluated at points.
    let gpoly = g.chop(0, order as i64);
    let f0 = |x: Complex| -> Result<Complex> { Ok(gpoly.eval(x) / (x * thq(x, q)?)) };
    let mut convergent_residual = 0.0_f64;
    for &x in samples {
        let t = [
            q2 * x * f0(q * q * x)?,
            -(one() + (a + b) * q2 * x) * f0(q * x)?,
            (one() + a * b * q2 * x) * f0(x)?,
        ];
        let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        convergent_residual = convergent_residual.max(t.iter().sum::<Complex>().norm() / scale);
    }
    let closed_form_residual = if a == Complex::default() && b == Complex::default() {
        let p = q.inv();
        let mut worst = 0.0_f64;
        for n in 0..=order as i64 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let expect = qpow(q, -n * n) * sign / pochhammer(p, p, PochhammerLength::Finite(n))?;
            worst = worst.max(rel(g.coeff(n), expect));
        }
        Some(worst)
    } else {
        None
    };
    Ok(ConfluentReport {
        divergent_residual,
        conjugate_residual,
        convergent_residual,
        factorization_residual,
        closed_form_residual,
    })
}

/// Numeric comparison for the `a = b = 0` Stokes difference conjecture:
/// `S_λf̂ - S_μf̂ = (q⁻¹;q⁻¹)_∞² θ_q(-λ/μ)θ_q(z/λμ) g₀(z) /
/// (θ_q(-1/λ)θ_q(-1/μ)θ_q(λ/z)θ_q(z/μ))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureReport {
    #[serde(with = "crate::cli::complex_serde")]
    pub difference: Complex,
    #[serde(with = "crate::cli::complex_serde")]
    pub predicted: Complex,
    pub relative_error: f64,
}

/// Compute both sides of the `a = b = 0` conjecture at `z`. The sums are
/// taken through the factorization `f̂ = g₀ φ̂`, with `φ̂` the formal
/// solution of `qzσφ - φ = -1/(g₀ σg₀)` summed along its pole spiral.
pub fn zero_case_conjecture(
    lambda: Complex,
    mu: Complex,
    z: Complex,
    q: Complex,
    order: usize,
) -> Result<ConjectureReport> {
    let zero = Complex::default();
    let g = confluent_convergent(zero, zero, q, order);
    let w = -(&g * &g.sigma(1, q))
        .truncate(order as i64)
        .invert_to(order as i64)?;
    let phi = |l: Complex| q_euler_spiral(q, &w.chop(0, order as i64), l, z, q);
    let gz = g.chop(0, order as i64).eval(z);
    let difference = gz * (phi(lambda)? - phi(mu)?);
    let num = euler_constant(q)?.powi(2) * thq(-lambda / mu, q)? * thq(z / (lambda * mu), q)? * gz;
    let den = thq(-lambda.inv(), q)? * thq(-mu.inv(), q)? * thq(lambda / z, q)? * thq(z / mu, q)?;
    let predicted = num / den;
    Ok(ConjectureReport {
        difference,
        predicted,
        relative_error: rel(difference, predicted),
    })
}

// ---------------------------------------------------------------------------
// Mock-theta and Mordell examples

/// Checks for `√q z² σ_q f - f = U` (the mock-theta equation has
/// `U = z - 1`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MockThetaReport {
    /// Formal solution substituted back, on coefficients.
    pub equation_residual: f64,
    /// Even/odd parts `g, h` against `√q Z σ_Q g - g = U₀`,
    /// `q√q Z σ_Q h - h = U₁` (`Z = z²`, `Q = q²`).
    pub split_residual: f64,
    /// Level-2 obstructions of `U` against the level-1 invariants of the
    /// split equations in `Q`.
    pub invariant_mismatch: f64,
    /// Number of forbidden direction classes (four for this module).
    pub forbidden_classes: usize,
    /// Algebraic sum against the closed form through the coefficients of
    /// `θ_q²`, at the sample points.
    pub closed_form_mismatch: f64,
}

impl MockThetaReport {
    pub fn max(&self) -> f64 {
        [
            self.equation_residual,
            self.split_residual,
            self.invariant_mismatch,
            self.closed_form_mismatch,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The module `[[1, U], [0, √q z²]]`, principal `√q`.
pub fn mock_theta_module(q: Complex, u: Laurent) -> Result<BlockModule> {
    let mut us = BTreeMap::new();
    us.insert((0, 1), SeriesMatrix::from_fn(1, 1, |_, _| u.clone()));
    BlockModule::new(
        q,
        vec![PureBlock::scalar(0, one()), PureBlock::scalar(2, q.sqrt())],
        us,
    )
}

/// Run the mock-theta checks for the polynomial `u`.
pub fn mock_theta_check(
    q: Complex,
    u: &Laurent,
    c: Complex,
    samples: &[Complex],
    order: i64,
    window: i64,
) -> Result<MockThetaReport> {
    let sq = q.sqrt();
    let m = mock_theta_module(q, u.clone())?;
    let f = formal_solution(&m, order)?.block(0, 1).get(0, 0).clone();
    let z2 = Laurent::monomial(sq, 2);
    let equation_residual = coefficient_residual(&[&z2 * &f.sigma(1, q), -f.clone()], u, order - 2);
    // Split into Z = z², Q = q².
    let big_q = q * q;
    let even = |s: &Laurent, r: i64| -> Laurent {
        let hi = s.hi();
        let tail = if s.is_exact() {
            Tail::Exact
        } else {
            Tail::Truncated
        };
        Laurent::from_fn(0, (hi - r).div_euclid(2).max(0), tail, |k| {
            s.get(2 * k + r).unwrap_or_default()
        })
    };
    let z1 = Laurent::monomial(one(), 1);
    let mut split_residual = 0.0_f64;
    let mut invariant_mismatch = 0.0_f64;
    let obs = obstructions(
        0,
        &CMatrix::from_element(1, 1, one()),
        2,
        &CMatrix::from_element(1, 1, sq),
        &SeriesMatrix::from_fn(1, 1, |_, _| u.clone()),
        q,
    )?;
    for r in 0..2 {
        let part = even(&f, r);
        let target = even(u, r);
        let a = sq * qpow(q, r);
        let top = part.hi() - 1;
        split_residual = split_residual.max(coefficient_residual(
            &[(&z1 * &part.sigma(1, big_q)).scale(a), -part.clone()],
            &target,
            top,
        ));
        let inv = two_slope_invariant(
            &SeriesMatrix::from_fn(1, 1, |_, _| target.clone()),
            &CMatrix::from_element(1, 1, a),
            big_q,
            INVARIANT_TAIL_EPSILON,
        )?;
        invariant_mismatch =
            invariant_mismatch.max(rel(inv.value[(0, 0)], obs[r as usize][(0, 0)]));
    }
    let forbidden_classes = resonance_set(&m.blocks, q, EIG_TOLERANCE)?.points.len();
    // Closed form: g_n = (τ_{n-1}c - τ_n)c^{-n} / (√q c² qⁿ - 1) for U = z - 1,
    // generalised to any polynomial U through the coefficients of U θ_{q,c}².
    let tau = theta_laurent(ThetaKind::Thq, q, window)?;
    let tau2 = (&tau * &tau).chop(-window, window);
    let twisted = (u * &tau2.rescale(c.inv())).chop(-window, window);
    let g = Laurent::from_fn(twisted.lo(), twisted.hi(), Tail::Exact, |n| {
        twisted.coeff(n) / (sq * c * c * qpow(q, n) - one())
    });
    let sum = algebraic_sum(&m, c, window)?;
    let mut closed_form_mismatch = 0.0_f64;
    for &z in samples {
        let closed = g.eval(z) / thq(z / c, q)?.powi(2);
        let engine = sum.block(0, 1, z)?[(0, 0)];
        closed_form_mismatch = closed_form_mismatch.max(rel(closed, engine));
    }
    Ok(MockThetaReport {
        equation_residual,
        split_residual,
        invariant_mismatch,
        forbidden_classes,
        closed_form_mismatch,
    })
}

/// The mock-theta closed form written with `τₙ` (coefficients of `θ_q²`)
/// exactly as `(τ_{n-1}c - τₙ) c^{-n} / (√q c² qⁿ - 1)`, for `U = z - 1`.
pub fn mock_theta_closed_form(q: Complex, c: Complex, z: Complex, window: i64) -> Result<Complex> {
    let sq = q.sqrt();
    let tau = theta_laurent(ThetaKind::Thq, q, window)?;
    let tau2 = (&tau * &tau).chop(-window, window);
    let mut acc = Complex::default();
    for n in -window..=window {
        let t = (tau2.coeff(n - 1) * c - tau2.coeff(n)) * qpow(c, -n)
            / (sq * c * c * qpow(q, n) - one());
        acc += t * qpow(z, n);
    }
    Ok(acc / thq(z / c, q)?.powi(2))
}

/// Checks for the Mordell equation `(√q zσ_q - 1) G = √q z`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MordellReport {
    /// `√q z S(qz) - S(z) - √q z` at the samples.
    pub functional_residual: f64,
    /// Series form against the sum over the pole spiral.
    pub spiral_mismatch: f64,
    /// Algebraic summation of the matrix form against the scalar sum.
    pub matrix_mismatch: f64,
    /// Normal-form coefficient against `B_q u(1/√q)`.
    #[serde(with = "crate::cli::complex_serde")]
    pub invariant: Complex,
    pub invariant_mismatch: f64,
}

impl MordellReport {
    pub fn max(&self) -> f64 {
        [
            self.functional_residual,
            self.spiral_mismatch,
            self.matrix_mismatch,
            self.invariant_mismatch,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Run the Mordell checks in direction `c`.
pub fn mordell_check(
    q: Complex,
    c: Complex,
    samples: &[Complex],
    window: i64,
) -> Result<MordellReport> {
    let sq = q.sqrt();
    let u = Laurent::monomial(sq, 1);
    let s = q_euler_sum(sq, &u, c, q, window)?;
    let mut us = BTreeMap::new();
    us.insert((0, 1), SeriesMatrix::from_fn(1, 1, |_, _| u.clone()));
    let m = BlockModule::new(
        q,
        vec![PureBlock::scalar(0, one()), PureBlock::scalar(1, sq)],
        us,
    )?;
    let alg = algebraic_sum(&m, c, window)?;
    let mut functional_residual = 0.0_f64;
    let mut spiral_mismatch = 0.0_f64;
    let mut matrix_mismatch = 0.0_f64;
    for &z in samples {
        let (fz, fqz) = (s.eval(z)?, s.eval(q * z)?);
        let t = [sq * z * fqz, -fz, -sq * z];
        let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        functional_residual = functional_residual.max(t.iter().sum::<Complex>().norm() / scale);
        spiral_mismatch = spiral_mismatch.max(rel(fz, q_euler_spiral(sq, &u, c, z, q)?));
        matrix_mismatch = matrix_mismatch.max(rel(fz, alg.block(0, 1, z)?[(0, 0)]));
    }
    let nf = bg_normal_form(&m, crate::normal_form::DEFAULT_ORDER)?;
    let invariant = nf.normal.u_block(0, 1).get(0, 0).coeff(0);
    let borel: Complex = crate::summation::borel_polynomial(&u, sq.inv(), q);
    Ok(MordellReport {
        functional_residual,
        spiral_mismatch,
        matrix_mismatch,
        invariant,
        invariant_mismatch: rel(invariant, borel),
    })
}

/// Sample points `|z| ∈ [r_min, r_max]` on a spiral-free grid: every point
/// keeps `d_q ≥ min_distance` from each of `avoid`.
pub fn sample_grid(
    q: Complex,
    avoid: &[Complex],
    count: usize,
    r_min: f64,
    r_max: f64,
    min_distance: f64,
) -> Vec<Complex> {
    let mut out = Vec::with_capacity(count);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut k = 0usize;
    while out.len() < count && k < 100 * count + 100 {
        let t = (k as f64 + 0.5) / count as f64;
        let r = r_min * (r_max / r_min).powf(t.fract());
        let z = Complex::from_polar(r, golden * k as f64);
        if avoid
            .iter()
            .all(|&a| spiral_distance(z, a, q) >= min_distance)
        {
            out.push(z);
        }
        k += 1;
    }
    out
}
