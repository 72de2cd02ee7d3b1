//! Jacobi theta functions, q-Pochhammer symbols, the growth majorant and
//! the Tshakaloff series, for `|q| > 1`.
//!
//! Three theta variants are in use, all reduced to the basic one
//!
//! ```text
//! θ(x; q) = Σ_{n∈ℤ} q^{-n(n-1)/2} xⁿ
//!         = Π_{n≥0} (1 - q^{-n-1}) (1 + q^{-n} x) (1 + q^{-n-1}/x),
//! ```
//!
//! which satisfies `θ(qx) = qx θ(x)` and `θ(x) = θ(1/(qx))`:
//!
//! - [`ThetaKind::Theta`]: `θ(z; q)` itself;
//! - [`ThetaKind::Thq`]: `θ_q(z) = Σ q^{-n(n+1)/2} zⁿ = θ(z/q; q)`, with
//!   `θ_q(qz) = z θ_q(z) = θ_q(1/z)`;
//! - [`ThetaKind::ThetaQLambda`]: `θ_{q,λ}(z) = θ_q(z/λ)`, with simple zeroes
//!   on the spiral `-λ q^ℤ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{qpow, Complex, Laurent, Tail};

/// Smallest admissible `|q|`: we require `|q| >= 1 + Q_MARGIN`.
pub const Q_MARGIN: f64 = 0.1;
/// Series/product truncation threshold relative to the running maximum.
pub const TAIL_EPSILON: f64 = 1e-16;
const MAX_TERMS: i64 = 100_000;

/// Which theta function a formula refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThetaKind {
    /// `θ(z; q) = Σ q^{-n(n-1)/2} zⁿ`.
    Theta,
    /// `θ_q(z) = Σ q^{-n(n+1)/2} zⁿ`.
    Thq,
    /// `θ_{q,λ}(z) = θ_q(z/λ)`.
    ThetaQLambda {
        #[serde(with = "crate::cli::complex_serde")]
        lambda: Complex,
    },
}

/// Evaluation path for theta functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Two-sided Laurent sum with adaptive truncation.
    Series,
    /// Jacobi triple product.
    Product,
}

/// Validate `|q| >= 1 + Q_MARGIN`.
pub fn check_q(q: Complex) -> Result<()> {
    let m = q.norm();
    if !(m >= 1.0 + Q_MARGIN) || !m.is_finite() {
        return Err(Error::QModulusTooSmall(m));
    }
    Ok(())
}

/// Argument of the basic theta function corresponding to `kind` at `z`.
fn basic_argument(kind: ThetaKind, z: Complex, q: Complex) -> Result<Complex> {
    match kind {
        ThetaKind::Theta => Ok(z),
        ThetaKind::Thq => Ok(z / q),
        ThetaKind::ThetaQLambda { lambda } => {
            if lambda == Complex::default() {
                return Err(Error::ZeroArgument);
            }
            Ok(z / (lambda * q))
        }
    }
}

/// Sum `Σ q^{-n(n-1)/2} xⁿ` (and optionally the x-derivative) walking out
/// from `n = 0` in both directions until the terms are negligible.
fn basic_series(x: Complex, q: Complex) -> Result<(Complex, Complex)> {
    let qinv = q.inv();
    let mut sum = Complex::new(1.0, 0.0);
    let mut dsum = Complex::default();
    let mut max_term = 1.0_f64;
    // Upward: t_{n+1} = t_n q^{-n} x.
    let mut t = Complex::new(1.0, 0.0);
    let mut qn = Complex::new(1.0, 0.0); // q^{-n}
    let mut n = 0_i64;
    loop {
        t *= qn * x;
        n += 1;
        qn *= qinv;
        sum += t;
        dsum += t * (n as f64) / x;
        let m = t.norm();
        max_term = max_term.max(m);
        let ratio = (qn * x).norm();
        if ratio < 0.5 && m <= TAIL_EPSILON * max_term {
            break;
        }
        if n > MAX_TERMS || !m.is_finite() {
            return Err(Error::NonConvergent("theta series (upward)".into()));
        }
    }
    // Downward: t_{n-1} = t_n q^{n-1} / x.
    let mut t = Complex::new(1.0, 0.0);
    let mut n = 0_i64;
    let xinv = x.inv();
    let mut qn1 = qinv; // q^{n-1}
    loop {
        t *= qn1 * xinv;
        n -= 1;
        qn1 *= qinv;
        sum += t;
        dsum += t * (n as f64) / x;
        let m = t.norm();
        max_term = max_term.max(m);
        let ratio = (qn1 * xinv).norm();
        if ratio < 0.5 && m <= TAIL_EPSILON * max_term {
            break;
        }
        if -n > MAX_TERMS || !m.is_finite() {
            return Err(Error::NonConvergent("theta series (downward)".into()));
        }
    }
    Ok((sum, dsum))
}

/// Triple product `Π (1 - q^{-n-1})(1 + q^{-n} x)(1 + q^{-n-1}/x)`.
fn basic_product(x: Complex, q: Complex) -> Result<Complex> {
    let qinv = q.inv();
    let one = Complex::new(1.0, 0.0);
    let xinv = x.inv();
    let scale = x.norm().max(xinv.norm()).max(1.0);
    let mut p = one;
    let mut qn = one; // q^{-n}
    let mut n = 0;
    loop {
        let qn1 = qn * qinv;
        p *= (one - qn1) * (one + qn * x) * (one + qn1 * xinv);
        qn = qn1;
        n += 1;
        if qn.norm() * scale < 1e-18 {
            break;
        }
        if n > MAX_TERMS || !p.re.is_finite() || !p.im.is_finite() {
            return Err(Error::NonConvergent("theta product".into()));
        }
    }
    Ok(p)
}

/// Evaluate the theta function `kind` at `z`.
pub fn eval_theta(kind: ThetaKind, z: Complex, q: Complex, mode: EvalMode) -> Result<Complex> {
    check_q(q)?;
    if z == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let x = basic_argument(kind, z, q)?;
    match mode {
        EvalMode::Series => basic_series(x, q).map(|(s, _)| s),
        EvalMode::Product => basic_product(x, q),
    }
}

/// Shorthand for `θ_q(z)` in series mode.
pub fn thq(z: Complex, q: Complex) -> Result<Complex> {
    eval_theta(ThetaKind::Thq, z, q, EvalMode::Series)
}

/// Shorthand for `θ(z; q)` in series mode.
pub fn theta(z: Complex, q: Complex) -> Result<Complex> {
    eval_theta(ThetaKind::Theta, z, q, EvalMode::Series)
}

/// Shorthand for `θ_{q,λ}(z) = θ_q(z/λ)` in series mode.
pub fn theta_q_lambda(lambda: Complex, z: Complex, q: Complex) -> Result<Complex> {
    eval_theta(ThetaKind::ThetaQLambda { lambda }, z, q, EvalMode::Series)
}

/// z-derivative of the theta function `kind` at `z` (termwise).
pub fn theta_derivative(kind: ThetaKind, z: Complex, q: Complex) -> Result<Complex> {
    check_q(q)?;
    if z == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let x = basic_argument(kind, z, q)?;
    let (_, d) = basic_series(x, q)?;
    Ok(d * (x / z))
}

/// Relative residuals of the identities every theta function satisfies at
/// a point. With `x` the argument of the basic function `θ` (`x = z`,
/// `z/q` or `z/(λq)`), they are the triple product, the shift
/// `θ(qx) = qxθ(x)` and the inversion `θ(1/x) = θ(x/q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaIdentityResiduals {
    pub triple_product: f64,
    pub shift: f64,
    pub inversion: f64,
}

impl ThetaIdentityResiduals {
    pub fn max(&self) -> f64 {
        self.triple_product.max(self.shift).max(self.inversion)
    }
}

/// Evaluate [`ThetaIdentityResiduals`] for `kind` at `z`.
pub fn theta_identity_residuals(
    kind: ThetaKind,
    z: Complex,
    q: Complex,
) -> Result<ThetaIdentityResiduals> {
    check_q(q)?;
    if z == Complex::default() {
        return Err(Error::ZeroArgument);
    }
    let rel =
        |a: Complex, b: Complex| (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let x = basic_argument(kind, z, q)?;
    let (series, _) = basic_series(x, q)?;
    let product = basic_product(x, q)?;
    let (shifted, _) = basic_series(q * x, q)?;
    let (inverted, _) = basic_series(x.inv(), q)?;
    let (lowered, _) = basic_series(x / q, q)?;
    Ok(ThetaIdentityResiduals {
        triple_product: rel(series, product),
        shift: rel(shifted, q * x * series),
        inversion: rel(inverted, lowered),
    })
}

/// Laurent coefficients of the theta function `kind` as a function of `z`,
/// on `[-window, window]` (tagged exact: the omitted coefficients are below
/// `|q|^{-window²/2}`).
pub fn theta_laurent(kind: ThetaKind, q: Complex, window: i64) -> Result<Laurent> {
    check_q(q)?;
    // Coefficient n of θ(cz; q) is q^{-n(n-1)/2} cⁿ.
    let c = basic_argument(kind, Complex::new(1.0, 0.0), q)?;
    let mut up = vec![Complex::new(1.0, 0.0)];
    let qinv = q.inv();
    let mut qn = Complex::new(1.0, 0.0);
    for _ in 1..=window {
        let t = up.last().copied().unwrap_or_default() * qn * c;
        qn *= qinv;
        up.push(t);
    }
    let mut down = vec![Complex::new(1.0, 0.0)];
    let cinv = c.inv();
    let mut qn1 = qinv;
    for _ in 1..=window {
        let t = down.last().copied().unwrap_or_default() * qn1 * cinv;
        qn1 *= qinv;
        down.push(t);
    }
    let mut coeffs: Vec<Complex> = down.into_iter().skip(1).rev().collect();
    coeffs.extend(up);
    Laurent::polynomial(-window, coeffs).ensure_finite("theta_laurent")
}

/// Length argument of [`pochhammer`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochhammerLength {
    Finite(i64),
    Infinite,
}

/// `(a; p)_n = Π_{i<n} (1 - a pⁱ)`, extended to negative `n` by
/// `(a;p)_{-m} = 1 / Π_{i=1..m} (1 - a p^{-i})`, and to `n = ∞` for `|p| < 1`
/// with a certified geometric tail bound.
pub fn pochhammer(a: Complex, p: Complex, n: PochhammerLength) -> Result<Complex> {
    let one = Complex::new(1.0, 0.0);
    match n {
        PochhammerLength::Finite(n) if n >= 0 => {
            let mut acc = one;
            let mut ap = a;
            for _ in 0..n {
                acc *= one - ap;
                ap *= p;
            }
            Ok(acc)
        }
        PochhammerLength::Finite(n) => {
            let pinv = p.inv();
            let mut acc = one;
            let mut ap = a * pinv;
            for _ in 0..(-n) {
                acc *= one - ap;
                ap *= pinv;
            }
            if acc == Complex::default() {
                return Err(Error::NonConvergent(
                    "pole of the negative-length Pochhammer".into(),
                ));
            }
            Ok(acc.inv())
        }
        PochhammerLength::Infinite => {
            let r = p.norm();
            if r >= 1.0 {
                return Err(Error::DivergentProduct);
            }
            let mut acc = one;
            let mut ap = a;
            for _ in 0..MAX_TERMS {
                let x = ap.norm();
                // |log Π_{i≥N}(1 - x_i)| ≤ Σ |x_i| / (1 - |x_i|) ≤ x / ((1-r)(1-x)).
                if x < 0.5 && x / ((1.0 - r) * (1.0 - x)) < 1e-17 {
                    return Ok(acc);
                }
                acc *= one - ap;
                ap *= p;
            }
            Err(Error::NonConvergent("infinite Pochhammer product".into()))
        }
    }
}

/// `(q^{-1}; q^{-1})_∞`, the constant of the triple product.
pub fn euler_constant(q: Complex) -> Result<Complex> {
    let p = q.inv();
    pochhammer(p, p, PochhammerLength::Infinite)
}

/// Growth majorant `e(z; q) = θ(|z|; |q|)`: it satisfies `|θ(z)| ≤ e(z)` and
/// `e(z) = e(1/(qz))`.
pub fn growth_majorant(z: Complex, q: Complex) -> Result<f64> {
    let v = eval_theta(
        ThetaKind::Theta,
        Complex::new(z.norm(), 0.0),
        Complex::new(q.norm(), 0.0),
        EvalMode::Series,
    )?;
    Ok(v.re)
}

/// Tshakaloff series `Σ_{n=0}^{order} q^{n(n-1)/2} zⁿ`, truncated.
pub fn tshakaloff(order: usize, q: Complex) -> Laurent {
    Laurent::from_fn(0, order as i64, Tail::Truncated, |n| {
        qpow(q, n * (n - 1) / 2)
    })
}

/// Stieltjes–Wiegert polynomial
/// `Sₙ(x; q) = Σ_{k=0}^n q^{k²} / ((q;q)_k (q;q)_{n-k}) (-x)^k`.
#[doc(hidden)]
pub fn stieltjes_wiegert(n: usize, x: Complex, q: Complex) -> Result<Complex> {
    let mut acc = Complex::default();
    for k in 0..=n {
        let den = pochhammer(q, q, PochhammerLength::Finite(k as i64))?
            * pochhammer(q, q, PochhammerLength::Finite((n - k) as i64))?;
        acc += qpow(q, (k * k) as i64) / den * qpow(-x, k as i64);
    }
    Ok(acc)
}
