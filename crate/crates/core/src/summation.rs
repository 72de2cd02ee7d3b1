//! q-summation: the q-Euler sum, algebraic summation of block modules, and
//! Borel–Ritt sums of q-Gevrey series, together with the q-Gevrey
//! asymptotic check.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::module_rep::{
    format_complex, resonance_set, spiral_distance, BlockModule, EIG_TOLERANCE, RESONANCE_MARGIN,
};
use crate::series::{qpow, CMatrix, Complex, Laurent, SeriesMatrix, DEFAULT_WINDOW};
use crate::special_fn::{
    check_q, eval_theta, theta, theta_laurent, theta_q_lambda, EvalMode, ThetaKind,
};

/// Relative size of the window-edge terms above which an evaluation is
/// refused as too far from the origin (or too close to it).
pub const EDGE_EPSILON: f64 = 1e-13;

/// Distance to a pole spiral below which an evaluation is refused.
pub const POLE_EPSILON: f64 = 1e-12;

fn edge_check(f: &Laurent, z: Complex, what: &str) -> Result<()> {
    if f.is_empty() {
        return Ok(());
    }
    let (lo, hi) = f.edge_terms(z, 2);
    let scale = f.max_term(z).max(f64::MIN_POSITIVE);
    if lo.max(hi) > EDGE_EPSILON * scale {
        return Err(Error::PointTooFar(format!(
            "{what} at z = {z}: window edge term {:.2e} of {:.2e}",
            lo.max(hi),
            scale
        )));
    }
    Ok(())
}

/// Divisor `Σ νⱼ [λⱼ; q]` on `E_q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Divisor {
    #[serde(skip)]
    pub q: Complex,
    #[serde(skip)]
    pub terms: Vec<(Complex, u32)>,
}

impl Divisor {
    /// Validate non-zero points, positive multiplicities and distinct classes.
    pub fn new(q: Complex, terms: Vec<(Complex, u32)>) -> Result<Self> {
        check_q(q)?;
        for (k, &(l, nu)) in terms.iter().enumerate() {
            if l == Complex::default() {
                return Err(Error::ZeroArgument);
            }
            if nu == 0 {
                return Err(Error::InvalidArgument(
                    "divisor multiplicities must be positive".into(),
                ));
            }
            if terms[..k]
                .iter()
                .any(|&(m, _)| spiral_distance(l, m, q) < RESONANCE_MARGIN)
            {
                return Err(Error::InvalidArgument(format!(
                    "divisor point {l} repeats a class"
                )));
            }
        }
        Ok(Divisor { q, terms })
    }

    /// A single point with multiplicity one.
    pub fn point(q: Complex, lambda: Complex) -> Result<Self> {
        Divisor::new(q, vec![(lambda, 1)])
    }

    /// Degree `ν = Σ νⱼ`.
    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1).sum()
    }

    /// `d_q(z, Λ) = Π d_q(z, [λⱼ])^{νⱼ}`.
    pub fn distance(&self, z: Complex) -> f64 {
        self.terms
            .iter()
            .map(|&(l, nu)| spiral_distance(z, l, self.q).powi(nu as i32))
            .product()
    }

    /// `θ_Λ(z) = Π θ(-z/λⱼ)^{νⱼ}`, vanishing exactly on the spirals `λⱼ q^ℤ`.
    pub fn theta(&self, z: Complex) -> Result<Complex> {
        let mut acc = Complex::new(1.0, 0.0);
        for &(l, nu) in &self.terms {
            acc *= theta(-z / l, self.q)?.powi(nu as i32);
        }
        Ok(acc)
    }

    /// Laurent coefficients `βₙ` of `θ_Λ` on `[-window, window]`, by direct
    /// multiplication of the factors.
    pub fn theta_laurent(&self, window: i64) -> Result<Laurent> {
        let base = theta_laurent(ThetaKind::Theta, self.q, window)?;
        let mut acc = Laurent::constant(Complex::new(1.0, 0.0));
        for &(l, nu) in &self.terms {
            let factor = base.rescale(-l.inv());
            for _ in 0..nu {
                acc = (&acc * &factor).chop(-window, window);
            }
        }
        Ok(acc)
    }

    /// `L = Π (-q/λⱼ)^{νⱼ}`, so that `θ_Λ(qz) = L z^ν θ_Λ(z)`.
    pub fn multiplier(&self) -> Complex {
        self.terms
            .iter()
            .map(|&(l, nu)| (-self.q / l).powi(nu as i32))
            .product()
    }
}

/// `‖q‖₁ = Σ_{n≥1} |q|^{-n(n-1)/2}` style constant of the basic estimate
/// `|θ(x)| ≤ M_q e(x)`; here `M_q = θ(1; |q|)`.
pub fn m_q(q: Complex) -> Result<f64> {
    Ok(theta(Complex::new(1.0, 0.0), Complex::new(q.norm(), 0.0))?.re)
}

// ---------------------------------------------------------------------------
// q-Euler sum

/// Sum `S = g/θ_{q,λ}` of the unique formal solution of `a z σf - f = u`
/// with simple poles on `[-λ; q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QEulerSum {
    pub q: Complex,
    pub a: Complex,
    pub lambda: Complex,
    /// Entire numerator `g = Σ gₙ zⁿ`, `gₙ = [u θ_{q,λ}]ₙ / (aλqⁿ - 1)`.
    pub numerator: Laurent,
}

impl QEulerSum {
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        if spiral_distance(z, -self.lambda, self.q) < POLE_EPSILON {
            return Err(Error::PoleHit);
        }
        edge_check(&self.numerator, z, "q-Euler sum")?;
        Ok(self.numerator.eval(z) / theta_q_lambda(self.lambda, z, self.q)?)
    }
}

/// Build the q-Euler sum for a polynomial `u` (a truncated `u` is used as
/// the polynomial of its window). `λ` must avoid `[a⁻¹; q]`.
pub fn q_euler_sum(
    a: Complex,
    u: &Laurent,
    lambda: Complex,
    q: Complex,
    window: i64,
) -> Result<QEulerSum> {
    check_q(q)?;
    if a == Complex::default() || lambda == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let one = Complex::new(1.0, 0.0);
    if spiral_distance(a * lambda, one, q) < RESONANCE_MARGIN {
        return Err(Error::ForbiddenDirection(
            format_complex(lambda),
            format!("[p({})]", format_complex(-a.inv())),
        ));
    }
    let u = u.chop(u.lo(), u.hi());
    let th = theta_laurent(ThetaKind::ThetaQLambda { lambda }, q, window)?;
    let prod = (&u * &th).chop(-window, window);
    let numerator = Laurent::from_fn(prod.lo(), prod.hi(), crate::series::Tail::Exact, |n| {
        prod.coeff(n) / (a * lambda * qpow(q, n) - one)
    })
    .ensure_finite("q-Euler numerator")?;
    Ok(QEulerSum {
        q,
        a,
        lambda,
        numerator,
    })
}

/// Polynomial q-Borel transform `B_q u(ξ) = Σ uₙ q^{-n(n-1)/2} ξⁿ`.
pub fn borel_polynomial(u: &Laurent, xi: Complex, q: Complex) -> Complex {
    u.iter()
        .map(|(n, c)| c * qpow(q, -(n * (n - 1) / 2)) * qpow(xi, n))
        .sum()
}

/// The same sum as [`q_euler_sum`] written as a sum over its poles:
/// `Σₖ B_q u(λqᵏ) / ((aλqᵏ - 1) θ_{q,λqᵏ}(z))`.
///
/// `u` may be any truncated convergent series (its q-Borel transform is
/// entire). Using `θ_q(xq^{-k}) = q^{k(k+1)/2} x^{-k} θ_q(x)`, term `k` is
/// `xᵏ Σₙ uₙ λⁿ q^{-(k-n)(k-n+1)/2} / ((aλqᵏ - 1) θ_q(x))` with `x = z/λ`,
/// which is evaluated in log space.
pub fn q_euler_spiral(
    a: Complex,
    u: &Laurent,
    lambda: Complex,
    z: Complex,
    q: Complex,
) -> Result<Complex> {
    check_q(q)?;
    let one = Complex::new(1.0, 0.0);
    if spiral_distance(a * lambda, one, q) < RESONANCE_MARGIN {
        return Err(Error::ForbiddenDirection(
            format_complex(lambda),
            format!("[p({})]", format_complex(-a.inv())),
        ));
    }
    if spiral_distance(z, -lambda, q) < POLE_EPSILON {
        return Err(Error::PoleHit);
    }
    let (lq, ll, lx) = (q.ln(), lambda.ln(), (z / lambda).ln());
    let logs: Vec<(i64, Complex)> = u
        .iter()
        .filter(|(_, c)| *c != Complex::default())
        .map(|(n, c)| (n, c.ln() + ll * n as f64))
        .collect();
    let term = |k: i64| -> Complex {
        let inner: Complex = logs
            .iter()
            .map(|&(n, lc)| {
                let e = ((k - n) * (k - n + 1) / 2) as f64;
                (lc - lq * e + lx * k as f64).exp()
            })
            .sum();
        inner / (a * lambda * qpow(q, k) - one)
    };
    let mut sum = term(0);
    let mut biggest = sum.norm();
    for dir in [1_i64, -1] {
        let mut quiet = 0;
        let mut k = dir;
        while quiet < 4 {
            let t = term(k);
            if !t.re.is_finite() || !t.im.is_finite() {
                return Err(Error::NonConvergent("q-Euler spiral sum".into()));
            }
            sum += t;
            biggest = biggest.max(t.norm());
            quiet = if t.norm() <= 1e-18 * biggest {
                quiet + 1
            } else {
                0
            };
            k += dir;
            if k.abs() > 2000 {
                return Err(Error::NonConvergent("q-Euler spiral sum".into()));
            }
        }
    }
    Ok(sum / theta_q_lambda(lambda, z, q)?)
}

// ---------------------------------------------------------------------------
// Algebraic summation

/// The algebraic sum `F_c` of a block module with polynomial `U`:
/// `F_{ij} = G_{ij} / θ_{q,c}^{μⱼ-μᵢ}` with `G_{ij}` entire on `ℂ*`, so that
/// `F_c[A₀] = A_U` and `F_{ij}` has poles of order at most `μⱼ - μᵢ` on
/// `[-c; q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraicSum {
    pub q: Complex,
    pub c: Complex,
    pub slopes: Vec<i64>,
    pub sizes: Vec<usize>,
    /// Entire numerators `G_{ij}`.
    pub numerators: BTreeMap<(usize, usize), SeriesMatrix>,
}

impl AlgebraicSum {
    fn check_point(&self, z: Complex) -> Result<()> {
        if z == Complex::default() {
            return Err(Error::ZeroArgument);
        }
        if spiral_distance(z, -self.c, self.q) < POLE_EPSILON {
            return Err(Error::PoleHit);
        }
        Ok(())
    }

    /// `G_{ij}(z) = θ_{q,c}(z)^{μⱼ-μᵢ} F_{ij}(z)`.
    pub fn numerator(&self, i: usize, j: usize, z: Complex) -> Result<CMatrix> {
        if z == Complex::default() {
            return Err(Error::ZeroArgument);
        }
        match self.numerators.get(&(i, j)) {
            Some(g) => {
                for e in g.entries() {
                    edge_check(e, z, "algebraic sum")?;
                }
                Ok(g.eval(z))
            }
            None => Ok(CMatrix::zeros(self.sizes[i], self.sizes[j])),
        }
    }

    /// Block `F_{ij}(z)`.
    pub fn block(&self, i: usize, j: usize, z: Complex) -> Result<CMatrix> {
        self.check_point(z)?;
        let th = theta_q_lambda(self.c, z, self.q)?;
        let d = (self.slopes[j] - self.slopes[i]) as i32;
        Ok(self.numerator(i, j, z)? / th.powi(d))
    }

    /// The full gauge matrix `F_c(z)`.
    pub fn eval(&self, z: Complex) -> Result<CMatrix> {
        self.check_point(z)?;
        let n: usize = self.sizes.iter().sum();
        let off = crate::module_rep::offsets(&self.sizes);
        let mut m = CMatrix::identity(n, n);
        for &(i, j) in self.numerators.keys() {
            let b = self.block(i, j, z)?;
            m.view_mut((off[i], off[j]), (self.sizes[i], self.sizes[j]))
                .copy_from(&b);
        }
        Ok(m)
    }

    /// Relative residual of `F_c(qz) A₀(z) = A_U(z) F_c(z)` at `z`.
    pub fn residual(&self, m: &BlockModule, z: Complex) -> Result<f64> {
        let lhs = self.eval(self.q * z)? * m.graded().eval(z);
        let rhs = m.eval(z) * self.eval(z)?;
        let scale = linalg::max_abs(&lhs).max(linalg::max_abs(&rhs)).max(1.0);
        Ok(linalg::max_abs(&(lhs - rhs)) / scale)
    }
}

/// Algebraic summation of `m` in the direction `c` (poles on `[-c; q]`).
/// `p(-c)` must avoid the forbidden set of the graded module.
pub fn algebraic_sum(m: &BlockModule, c: Complex, window: i64) -> Result<AlgebraicSum> {
    let q = m.q;
    if c == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let forbidden = resonance_set(&m.blocks, q, EIG_TOLERANCE)?;
    if !forbidden.is_generic(c) {
        return Err(Error::ForbiddenDirection(
            format_complex(c),
            forbidden.describe(),
        ));
    }
    for (&(i, j), u) in &m.u {
        if !u.is_exact() {
            return Err(Error::InvalidArgument(format!(
                "U({i},{j}) must be a polynomial for algebraic summation"
            )));
        }
    }
    let k = m.len();
    let sizes = m.sizes();
    let slopes = m.slopes();
    let th = theta_laurent(ThetaKind::ThetaQLambda { lambda: c }, q, window)?;
    let max_delta = slopes[k - 1] - slopes[0];
    let mut th_pow = vec![Laurent::constant(Complex::new(1.0, 0.0))];
    for _ in 0..max_delta {
        let next = (th_pow.last().unwrap_or(&th) * &th).chop(-window, window);
        th_pow.push(next);
    }
    // B_{ij} = c^{μᵢ} z^{-μᵢ} θ^{δ} U_{ij}.
    let b = |i: usize, j: usize| -> SeriesMatrix {
        let u = m.u_block(i, j);
        let scale = qpow(c, slopes[i]);
        let t = &th_pow[(slopes[j] - slopes[i]) as usize];
        u.map(|e| {
            (&e.shift(-slopes[i]) * t)
                .scale(scale)
                .chop(-window, window)
        })
    };
    let diag: Vec<CMatrix> = m.blocks.iter().map(|bl| &bl.a * qpow(c, bl.mu)).collect();
    let mut g: BTreeMap<(usize, usize), SeriesMatrix> = BTreeMap::new();
    for span in 1..k {
        for i in 0..k - span {
            let j = i + span;
            let mut y = b(i, j);
            for l in i + 1..j {
                if let Some(gl) = g.get(&(l, j)) {
                    y = &y + &(&b(i, l) * gl).map(|e| e.chop(-window, window));
                }
            }
            if y.max_abs() == 0.0 {
                continue;
            }
            let (lo, hi) = (y.lo(), y.hi());
            let mut xs = Vec::with_capacity((hi - lo + 1) as usize);
            for p in lo..=hi {
                xs.push(linalg::solve_sylvester(
                    qpow(q, p),
                    &diag[i],
                    &diag[j],
                    &y.coeff(p),
                )?);
            }
            let gij =
                SeriesMatrix::from_coeffs(sizes[i], sizes[j], lo, &xs, crate::series::Tail::Exact)
                    .ensure_finite("algebraic sum numerator")?;
            g.insert((i, j), gij);
        }
    }
    Ok(AlgebraicSum {
        q,
        c,
        slopes,
        sizes,
        numerators: g,
    })
}

// ---------------------------------------------------------------------------
// Borel–Ritt summation

/// `F/θ_Λ` with `F = Σ_{ℓ ≤ N₀} c_ℓ z^ℓ`, `c_ℓ = Σₙ aₙ β_{ℓ-n}`: a function
/// with poles on the divisor `Λ`, q-Gevrey asymptotic to `Σ aₙ zⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BorelRittSum {
    pub divisor: Divisor,
    pub n0: i64,
    pub numerator: Laurent,
}

impl BorelRittSum {
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        if z == Complex::default() {
            return Err(Error::ZeroArgument);
        }
        if self.divisor.distance(z) < POLE_EPSILON {
            return Err(Error::PoleHit);
        }
        // Only the low end is a truncation; the top exponent N₀ is a cutoff.
        let (low, _) = self.numerator.edge_terms(z, 2);
        let scale = self.numerator.max_term(z).max(f64::MIN_POSITIVE);
        if low > EDGE_EPSILON * scale {
            return Err(Error::PointTooFar(format!(
                "Borel-Ritt sum at z = {z}: low-end term {low:.2e} of {scale:.2e}"
            )));
        }
        Ok(self.numerator.eval(z) / self.divisor.theta(z)?)
    }
}

/// `ln βₙ` for the coefficients of `θ_Λ`, from the `ν` central ones through
/// `β_{kν+r} = (L/q^r)^k q^{-νk(k+1)/2} β_r`. Returns `None` for a vanishing
/// coefficient.
struct BetaTable {
    nu: i64,
    central: Vec<Complex>,
    ln_l: Complex,
    ln_q: Complex,
}

impl BetaTable {
    fn new(divisor: &Divisor) -> Result<Self> {
        let nu = divisor.degree() as i64;
        let lap = divisor.theta_laurent(32)?;
        Ok(BetaTable {
            nu,
            central: (0..nu).map(|r| lap.coeff(r)).collect(),
            ln_l: divisor.multiplier().ln(),
            ln_q: divisor.q.ln(),
        })
    }

    fn ln(&self, n: i64) -> Option<Complex> {
        let (k, r) = (n.div_euclid(self.nu), n.rem_euclid(self.nu));
        let b = self.central[r as usize];
        if b == Complex::default() {
            return None;
        }
        let kf = k as f64;
        Some(
            b.ln() + (self.ln_l - self.ln_q * r as f64) * kf
                - self.ln_q * (self.nu as f64 * kf * (kf + 1.0) / 2.0),
        )
    }
}

/// Whether `Σ aₙ zⁿ` looks q-Gevrey of order `1/ν`: the effective order
/// `2 ln|aₙ| / (n² ln|q|)` over the last third of the coefficients must
/// stay below `1.25/ν`.
pub fn looks_q_gevrey(coeffs: &[Complex], nu: u32, q: Complex) -> bool {
    let lq = q.norm().ln();
    let n = coeffs.len();
    let start = (2 * n / 3).max(4);
    (start..n).all(|k| {
        let a = coeffs[k].norm();
        a == 0.0 || 2.0 * a.ln() / ((k * k) as f64 * lq) <= 1.25 / nu as f64
    })
}

/// Sum `Σ aₙ zⁿ` (given by its first coefficients) with poles on `divisor`.
/// `n0 = None` scans downward from `-1` for the first exponent whose series
/// `c_ℓ` has negligible tail; `window` bounds how far down `c_ℓ` is kept.
pub fn borel_ritt_sum(
    coeffs: &[Complex],
    divisor: &Divisor,
    n0: Option<i64>,
    window: i64,
) -> Result<BorelRittSum> {
    let nu = divisor.degree();
    if nu == 0 {
        return Err(Error::InvalidArgument("empty divisor".into()));
    }
    if !looks_q_gevrey(coeffs, nu, divisor.q) {
        return Err(Error::NotQGevrey);
    }
    let beta = BetaTable::new(divisor)?;
    let c_at = |l: i64| -> Option<Complex> {
        let mut sum = Complex::default();
        let mut biggest = 0.0_f64;
        let mut tail = 0.0_f64;
        let m = coeffs.len();
        for (n, a) in coeffs.iter().enumerate() {
            if *a == Complex::default() {
                continue;
            }
            let Some(lb) = beta.ln(l - n as i64) else {
                continue;
            };
            let t = (a.ln() + lb).exp();
            if !t.re.is_finite() || !t.im.is_finite() {
                return None;
            }
            sum += t;
            biggest = biggest.max(t.norm());
            if n + 3 >= m {
                tail = tail.max(t.norm());
            }
        }
        (tail <= 1e-12 * biggest.max(sum.norm())).then_some(sum)
    };
    let floor = -window.abs().max(8);
    let n0 = match n0 {
        Some(n) => {
            if c_at(n).is_none() {
                return Err(Error::N0TooLarge(n));
            }
            n
        }
        None => (floor..=-1)
            .rev()
            .find(|&l| c_at(l).is_some())
            .ok_or(Error::N0TooLarge(floor))?,
    };
    let lo = n0 + floor;
    let mut cs = Vec::with_capacity((n0 - lo + 1) as usize);
    for l in lo..=n0 {
        cs.push(c_at(l).ok_or(Error::N0TooLarge(l))?);
    }
    let numerator = Laurent::polynomial(lo, cs)
        .trim()
        .ensure_finite("Borel-Ritt numerator")?;
    Ok(BorelRittSum {
        divisor: divisor.clone(),
        n0,
        numerator,
    })
}

// ---------------------------------------------------------------------------
// Asymptotic check

/// Outcome of [`asymptotic_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticReport {
    /// `max_z |f(z) - S_{N-1}(z)| / (ε⁻¹ |q|^{N²/2ν} |z|^N)` for `N = 1, 2, …`
    /// (`None` where every sample fell below the noise floor).
    pub ratios: Vec<Option<f64>>,
    /// Fitted growth `A` of `ratio_N ≈ C A^N`.
    pub growth: f64,
    /// Fitted constant `C`.
    pub constant: f64,
    pub pass: bool,
}

/// Check the q-Gevrey estimate
/// `|f(z) - Σ_{n<N} aₙ zⁿ| ≤ C A^N ε⁻¹ |q|^{N²/2ν} |z|^N` on `d_q(z, Λ) > ε`
/// at the given samples, passing when the fitted `A ≤ growth_cap`.
pub fn asymptotic_check(
    f: &dyn Fn(Complex) -> Result<Complex>,
    coeffs: &[Complex],
    divisor: &Divisor,
    samples: &[Complex],
    n_max: usize,
    growth_cap: f64,
) -> Result<AsymptoticReport> {
    let q = divisor.q;
    let nu = divisor.degree() as f64;
    let lq = q.norm().ln();
    let values: Vec<Complex> = samples.iter().map(|&z| f(z)).collect::<Result<_>>()?;
    let mut ratios = Vec::with_capacity(n_max);
    for big_n in 1..=n_max.min(coeffs.len()) {
        let mut best: Option<f64> = None;
        for (z, fz) in samples.iter().zip(&values) {
            let eps = divisor.distance(*z).max(1e-300);
            let partial: Complex = coeffs[..big_n]
                .iter()
                .enumerate()
                .map(|(n, a)| a * z.powi(n as i32))
                .sum();
            let ln_den =
                -eps.ln() + (big_n * big_n) as f64 / (2.0 * nu) * lq + big_n as f64 * z.norm().ln();
            let err = (fz - partial).norm();
            let noise = 1e-13 * fz.norm().max(partial.norm()).max(1.0);
            if err <= noise && ln_den < noise.ln() {
                continue;
            }
            let r = (err.ln() - ln_den).exp();
            best = Some(best.map_or(r, |b: f64| b.max(r)));
        }
        ratios.push(best);
    }
    let pts: Vec<(f64, f64)> = ratios
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.filter(|v| *v > 0.0).map(|v| ((k + 1) as f64, v.ln())))
        .collect();
    if pts.len() < 2 {
        return Ok(AsymptoticReport {
            ratios,
            growth: 0.0,
            constant: 0.0,
            pass: true,
        });
    }
    // Upper envelope: least-squares slope, then the smallest C covering all points.
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2))
    });
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let ln_c = pts
        .iter()
        .map(|p| p.1 - slope * p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let growth = slope.exp();
    Ok(AsymptoticReport {
        ratios,
        growth,
        constant: ln_c.exp(),
        pass: growth.is_finite() && growth <= growth_cap,
    })
}

/// Default window used by the summation entry points.
pub const SUM_WINDOW: i64 = DEFAULT_WINDOW;

/// Evaluate `θ_{q,c}` in series mode (re-exported for callers building
/// pole-divisor checks).
pub fn theta_direction(c: Complex, z: Complex, q: Complex) -> Result<Complex> {
    eval_theta(
        ThetaKind::ThetaQLambda { lambda: c },
        z,
        q,
        EvalMode::Series,
    )
}
