//! q-Borel transforms and the two-slope reduction `Red`.
//!
//! For slopes `μ₁ < μ₂` (level `d = μ₂ - μ₁`), blocks `A₁, A₂` and a
//! right-hand side `U`, `Red` returns the unique pair `(F, V)` with `F`
//! convergent and `V` a polynomial supported on exponents `μ₁ .. μ₂-1` such
//! that
//!
//! ```text
//! (σ_q F) z^{μ₂} A₂ - z^{μ₁} A₁ F = U - V.
//! ```
//!
//! Writing `F = Σ Xₙ zⁿ` and `Zₙ = A₁⁻¹ U_{n+μ₁}`, the coefficients satisfy
//! `q^{n-d} A₁⁻¹ X_{n-d} A₂ - Xₙ = Zₙ - A₁⁻¹V_{n+μ₁}`. Running this forward
//! amplifies rounding like `|q|^{n²/2d}`. We run it *downward* instead,
//! `X_{n-d} = q^{-(n-d)} A₁ (Xₙ + Zₙ) A₂⁻¹`, starting from zero above the top
//! of `U`. That direction is contracting, and it yields the convergent
//! solution directly. Per residue class `r` of `n mod d`, the obstruction to
//! solving with `V = 0` is the level-d Borel sum
//! `O_r = Σ_{k≥0} A₁ᵏ Z_{r+kd} A₂⁻ᵏ / t_{r+kd}`, and `V_{μ₁+r} = A₁ O_r`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::series::{qpow, CMatrix, Complex, Laurent, SeriesMatrix, Tail};

/// Tail threshold for [`two_slope_invariant`].
pub const INVARIANT_TAIL_EPSILON: f64 = 1e-14;

/// Exponent `e` with `tₙ = q^e` for the level-d weights
/// `t_{r+kd} = q^{d·k(k-1)/2 + r·k}` (`0 ≤ r < d`). They satisfy
/// `tₙ = q^{n-d} t_{n-d}` and reduce to `q^{n(n-1)/2}` at `d = 1`.
pub fn weight_exponent(n: i64, d: i64) -> i64 {
    let (k, r) = (n.div_euclid(d), n.rem_euclid(d));
    d * k * (k - 1) / 2 + r * k
}

/// Level-d weight `tₙ`.
pub fn level_weight(n: i64, d: i64, q: Complex) -> Complex {
    qpow(q, weight_exponent(n, d))
}

/// q-Borel transform of level `d`: `fₙ ↦ fₙ / tₙ`.
pub fn q_borel(f: &Laurent, d: i64, q: Complex) -> Result<Laurent> {
    if d < 1 {
        return Err(Error::InvalidArgument(format!(
            "Borel level must be positive, got {d}"
        )));
    }
    let coeffs = f
        .iter()
        .map(|(n, c)| c * qpow(q, -weight_exponent(n, d)))
        .collect();
    let out = match f.tail() {
        Tail::Exact => Laurent::polynomial(f.lo(), coeffs),
        Tail::Truncated => Laurent::truncated(f.lo(), coeffs),
    };
    out.ensure_finite("q_borel")
}

/// Value and certified tail of the two-slope invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Invariant {
    pub value: CMatrix,
    /// Modulus of the last summed term relative to the sum (0 for exact
    /// input).
    pub tail: f64,
}

/// `B_q Y(A⁻¹) = Σ q^{-n(n-1)/2} A⁻ⁿ Yₙ` over the window of `Y`: the class
/// of `[[A₁, Y], [0, z A]]`-type extensions at level 1.
pub fn two_slope_invariant(
    y: &SeriesMatrix,
    a: &CMatrix,
    q: Complex,
    tail_eps: f64,
) -> Result<Invariant> {
    let ainv = a
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("invariant matrix".into()))?;
    let (lo, hi) = (y.lo(), y.hi());
    let mut value = CMatrix::zeros(y.nrows(), y.ncols());
    let mut last = 0.0;
    let mut biggest = 0.0_f64;
    for n in lo..=hi {
        let pow = linalg::matrix_pow(&ainv, n)?;
        let term = (&pow * y.coeff(n)) * qpow(q, -(n * (n - 1) / 2));
        last = linalg::max_abs(&term);
        biggest = biggest.max(last);
        value += term;
    }
    if value.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Overflow("two_slope_invariant"));
    }
    let tail = if y.is_exact() {
        0.0
    } else {
        last / biggest.max(linalg::max_abs(&value)).max(f64::MIN_POSITIVE)
    };
    if tail > tail_eps {
        return Err(Error::TailNotNegligible(tail));
    }
    Ok(Invariant { value, tail })
}

/// Output of [`red`].
#[derive(Clone, Debug, PartialEq)]
pub struct RedOutput {
    /// The gauge block `F`.
    pub f: SeriesMatrix,
    /// Polynomial normal component, supported on `μ₁ .. μ₂-1`.
    pub v: SeriesMatrix,
    /// Level-d obstructions `O_r`, `0 ≤ r < d`, of `U` itself.
    pub obstructions: Vec<CMatrix>,
    /// Condition number of the map from obstructions to `V` (`cond A₁`).
    pub condition: f64,
}

/// The level-d obstructions `O_r = Σ_{k≥0} A₁ᵏ Z_{r+kd} A₂⁻ᵏ / t_{r+kd}`,
/// `Zₙ = A₁⁻¹ U_{n+μ₁}`, for `U` supported on exponents `≥ μ₁`. They vanish
/// iff `σF z^{μ₂}A₂ - z^{μ₁}A₁F = U` has a convergent solution.
pub fn obstructions(
    mu1: i64,
    a1: &CMatrix,
    mu2: i64,
    a2: &CMatrix,
    u: &SeriesMatrix,
    q: Complex,
) -> Result<Vec<CMatrix>> {
    let d = mu2 - mu1;
    if d < 1 {
        return Err(Error::InvalidArgument(
            "slopes must satisfy mu1 < mu2".into(),
        ));
    }
    let a1inv = a1
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("A1".into()))?;
    let a2inv = a2
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("A2".into()))?;
    let top = u.hi() - mu1;
    let mut out = Vec::with_capacity(d as usize);
    for r in 0..d {
        let mut acc = CMatrix::zeros(a1.nrows(), a2.nrows());
        let mut left = CMatrix::identity(a1.nrows(), a1.nrows());
        let mut right = CMatrix::identity(a2.nrows(), a2.nrows());
        let mut n = r;
        while n <= top {
            let z = &a1inv * u.coeff(n + mu1);
            acc += (&left * z * &right) * qpow(q, -weight_exponent(n, d));
            left = &left * a1;
            right = &right * &a2inv;
            n += d;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Two-slope reduction `Red(μ₁, A₁, μ₂, A₂, U) = (F, V)`.
///
/// A truncated `U` must be known up to `order` (at least `μ₂`); it is
/// replaced by its polynomial truncation at `order`, and `F` is the exact
/// reduction of that polynomial (reported as truncated `d` exponents below
/// the top). An exact `U` is used as is and gives an exact `F`.
pub fn red(
    mu1: i64,
    a1: &CMatrix,
    mu2: i64,
    a2: &CMatrix,
    u: &SeriesMatrix,
    order: i64,
    q: Complex,
) -> Result<RedOutput> {
    let d = mu2 - mu1;
    if d < 1 {
        return Err(Error::InvalidArgument(
            "slopes must satisfy mu1 < mu2".into(),
        ));
    }
    let (r1, r2) = (a1.nrows(), a2.nrows());
    if u.nrows() != r1 || u.ncols() != r2 {
        return Err(Error::WrongShape(format!(
            "U is {}x{}, expected {r1}x{r2}",
            u.nrows(),
            u.ncols()
        )));
    }
    let a1inv = a1
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("A1".into()))?;
    let a2inv = a2
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("A2".into()))?;
    let exact = u.is_exact();
    let up = if exact {
        u.clone()
    } else {
        if u.hi() < order.max(mu2) {
            return Err(Error::OrderTooSmall {
                have: u.hi(),
                need: order.max(mu2),
            });
        }
        u.chop(u.lo().min(mu1), order)
    };
    let zero_f = || SeriesMatrix::zeros(r1, r2);
    if up.max_abs() == 0.0 {
        let f = if exact {
            zero_f()
        } else {
            SeriesMatrix::from_coeffs(r1, r2, 0, &[CMatrix::zeros(r1, r2)], Tail::Truncated)
        };
        return Ok(RedOutput {
            f,
            v: zero_f(),
            obstructions: vec![CMatrix::zeros(r1, r2); d as usize],
            condition: linalg::condition(a1),
        });
    }
    let (m_lo, m_hi) = (up.lo(), up.hi());
    let top = (m_hi - mu1).max(d - 1);
    let n_lo = (m_lo - mu1).min(0);
    let z = |n: i64| &a1inv * up.coeff(n + mu1);
    let len = (top - n_lo + 1) as usize;
    let mut x = vec![CMatrix::zeros(r1, r2); len];
    let idx = |n: i64| (n - n_lo) as usize;
    // Downward (contracting) recursion on n ≥ 0.
    let mut n = top;
    while n >= d {
        let next = (&x[idx(n)] + z(n)) * qpow(q, -(n - d));
        x[idx(n - d)] = a1 * next * &a2inv;
        n -= 1;
    }
    // Upward recursion on the finitely many negative exponents.
    for n in n_lo..0 {
        let prev = if n - d >= n_lo {
            x[idx(n - d)].clone()
        } else {
            CMatrix::zeros(r1, r2)
        };
        x[idx(n)] = (&a1inv * prev * a2) * qpow(q, n - d) - z(n);
    }
    // Seam n ∈ [0, d): V absorbs the mismatch.
    let mut v = Vec::with_capacity(d as usize);
    for r in 0..d {
        let prev = if r - d >= n_lo {
            x[idx(r - d)].clone()
        } else {
            CMatrix::zeros(r1, r2)
        };
        let vr = up.coeff(r + mu1) + a1 * &x[idx(r)] - (prev * a2) * qpow(q, r - d);
        v.push(vr);
    }
    let obs = if m_lo >= mu1 {
        obstructions(mu1, a1, mu2, a2, &up, q)?
    } else {
        v.iter().map(|vr| &a1inv * vr).collect()
    };
    let f = if exact {
        SeriesMatrix::from_coeffs(r1, r2, n_lo, &x, Tail::Exact)
    } else {
        let keep = (len as i64 - d).max(1) as usize;
        SeriesMatrix::from_coeffs(r1, r2, n_lo, &x[..keep], Tail::Truncated)
    };
    let v = SeriesMatrix::from_coeffs(r1, r2, mu1, &v, Tail::Exact);
    Ok(RedOutput {
        f: f.ensure_finite("red: F")?,
        v: v.ensure_finite("red: V")?,
        obstructions: obs,
        condition: linalg::condition(a1),
    })
}

/// Relative residual of the defining relation
/// `(σF) z^{μ₂}A₂ - z^{μ₁}A₁F - (U - V)` on its derived window.
pub fn red_residual(
    mu1: i64,
    a1: &CMatrix,
    mu2: i64,
    a2: &CMatrix,
    u: &SeriesMatrix,
    out: &RedOutput,
    q: Complex,
) -> f64 {
    let lhs = &(&out.f.sigma(1, q) * &SeriesMatrix::monomial(a2, mu2))
        - &(&SeriesMatrix::monomial(a1, mu1) * &out.f);
    let rhs = u - &out.v;
    let scale = u.max_abs().max(out.v.max_abs()).max(f64::MIN_POSITIVE);
    (&lhs - &rhs).max_abs() / scale
}

/// Summary of a `Red` call for machine-readable output.
#[derive(Clone, Debug, Serialize)]
pub struct RedSummary {
    pub level: i64,
    pub condition: f64,
    pub residual: f64,
}
