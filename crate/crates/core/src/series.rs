//! Two-sided truncated Laurent series over complex doubles.
//!
//! A [`Laurent`] stores the coefficients of `z^lo .. z^hi`. Everything below
//! `lo` is zero. What lies above `hi` depends on the [`Tail`]:
//!
//! - [`Tail::Truncated`]: unknown (a truncated formal or convergent series);
//! - [`Tail::Exact`]: zero (a Laurent polynomial, e.g. a theta function
//!   chopped where its coefficients underflow).
//!
//! Binary operations derive the window on which the result is meaningful:
//! a sum keeps the lowest `lo` and the smallest truncated `hi`; a product of
//! two truncated series lives on `lo₁+lo₂ ..= min(lo₁+hi₂, lo₂+hi₁)`.
//!
//! [`SeriesMatrix`] is a dense matrix of such series, used for gauge
//! transforms and block-triangular systems.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The scalar field of every computation (hardware double precision).
pub type Complex = Complex64;
/// Dense constant complex matrix.
pub type CMatrix = DMatrix<Complex>;

/// Relative threshold below which a coefficient counts as zero for
/// valuations.
pub const VALUATION_EPSILON: f64 = 1e-13;
/// Default symmetric exponent window `[-W, W]`.
pub const DEFAULT_WINDOW: i64 = 64;

/// `q^e` by repeated squaring, so that integral powers of `2` are exact.
/// Negative exponents invert first: huge negative powers underflow to zero
/// instead of producing `1/inf` artefacts.
pub fn qpow(q: Complex, e: i64) -> Complex {
    let (mut base, mut k) = if e < 0 {
        (q.inv(), e.unsigned_abs())
    } else {
        (q, e as u64)
    };
    let mut acc = Complex::new(1.0, 0.0);
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        k >>= 1;
        if k > 0 {
            base *= base;
        }
    }
    acc
}

/// Coefficient bookkeeping beyond `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Coefficients above `hi` are unknown.
    Truncated,
    /// Coefficients above `hi` are zero.
    Exact,
}

/// A two-sided Laurent series with an explicit validity window.
#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    lo: i64,
    coeffs: Vec<Complex>,
    tail: Tail,
}

impl Laurent {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Laurent {
            lo: 0,
            coeffs: Vec::new(),
            tail: Tail::Exact,
        }
    }

    /// The constant polynomial `c`.
    pub fn constant(c: Complex) -> Self {
        Self::monomial(c, 0)
    }

    /// The monomial `c z^n`.
    pub fn monomial(c: Complex, n: i64) -> Self {
        Laurent {
            lo: n,
            coeffs: vec![c],
            tail: Tail::Exact,
        }
    }

    /// Laurent polynomial `Σ coeffs[k] z^(lo+k)`.
    pub fn polynomial(lo: i64, coeffs: Vec<Complex>) -> Self {
        Laurent {
            lo,
            coeffs,
            tail: Tail::Exact,
        }
    }

    /// Truncated series known on `lo ..= lo + coeffs.len() - 1`.
    pub fn truncated(lo: i64, coeffs: Vec<Complex>) -> Self {
        Laurent {
            lo,
            coeffs,
            tail: Tail::Truncated,
        }
    }

    /// Series on `lo ..= hi` with coefficients `f(n)`.
    pub fn from_fn(lo: i64, hi: i64, tail: Tail, f: impl FnMut(i64) -> Complex) -> Self {
        let coeffs = (lo..=hi).map(f).collect();
        Laurent { lo, coeffs, tail }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest tracked exponent (`lo - 1` for an empty window).
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn is_exact(&self) -> bool {
        self.tail == Tail::Exact
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// `(exponent, coefficient)` pairs over the window.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (self.lo + k as i64, c))
    }

    /// Coefficient of `z^n` if it is known.
    pub fn get(&self, n: i64) -> Option<Complex> {
        if n < self.lo {
            Some(Complex::new(0.0, 0.0))
        } else if n > self.hi() {
            match self.tail {
                Tail::Exact => Some(Complex::new(0.0, 0.0)),
                Tail::Truncated => None,
            }
        } else {
            Some(self.coeffs[(n - self.lo) as usize])
        }
    }

    /// Coefficient of `z^n`; reading above the window of a truncated series
    /// is a logic error (debug assertion) and yields zero in release builds.
    pub fn coeff(&self, n: i64) -> Complex {
        let c = self.get(n);
        debug_assert!(
            c.is_some(),
            "read of z^{n} outside window [{}, {}]",
            self.lo,
            self.hi()
        );
        c.unwrap_or_default()
    }

    /// Largest coefficient modulus on the window.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Error out on NaN/inf coefficients.
    pub fn ensure_finite(self, ctx: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Overflow(ctx))
        }
    }

    /// Drop exactly-zero coefficients at both ends of an exact series.
    pub fn trim(mut self) -> Self {
        if self.tail == Tail::Exact {
            while self.coeffs.last().is_some_and(|c| *c == Complex::default()) {
                self.coeffs.pop();
            }
            let lead = self
                .coeffs
                .iter()
                .take_while(|c| **c == Complex::default())
                .count();
            if lead > 0 {
                self.coeffs.drain(..lead);
                self.lo += lead as i64;
            }
            if self.coeffs.is_empty() {
                self.lo = 0;
            }
        }
        self
    }

    /// Forget everything above `hi` (the result is truncated).
    pub fn truncate(&self, hi: i64) -> Self {
        let hi = hi.min(self.hi());
        let len = (hi - self.lo + 1).max(0) as usize;
        Laurent {
            lo: self.lo,
            coeffs: self.coeffs[..len].to_vec(),
            tail: Tail::Truncated,
        }
    }

    /// Keep only exponents in `lo ..= hi` and declare the rest zero.
    pub fn chop(&self, lo: i64, hi: i64) -> Self {
        let hi = if self.tail == Tail::Truncated {
            hi.min(self.hi())
        } else {
            hi
        };
        if hi < lo {
            return Laurent::zero();
        }
        Laurent::from_fn(lo, hi, Tail::Exact, |n| self.get(n).unwrap_or_default()).trim()
    }

    /// Re-express on a window starting at `lo` (padding with zeros, or
    /// dropping lower coefficients).
    pub fn with_lo(&self, lo: i64) -> Self {
        let hi = self.hi();
        Laurent::from_fn(lo, hi, self.tail, |n| self.get(n).unwrap_or_default())
    }

    pub fn scale(&self, c: Complex) -> Self {
        Laurent {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            tail: self.tail,
        }
    }

    /// Multiply by `z^m`.
    pub fn shift(&self, m: i64) -> Self {
        Laurent {
            lo: self.lo + m,
            coeffs: self.coeffs.clone(),
            tail: self.tail,
        }
    }

    /// `f(cz)`: coefficient `n` becomes `cⁿ fₙ`.
    pub fn rescale(&self, c: Complex) -> Self {
        let coeffs = self.iter().map(|(n, x)| x * qpow(c, n)).collect();
        Laurent {
            lo: self.lo,
            coeffs,
            tail: self.tail,
        }
    }

    /// The dilatation `σ_q^k`: coefficient `n` becomes `q^(kn) fₙ`.
    pub fn sigma(&self, k: i64, q: Complex) -> Self {
        self.rescale(qpow(q, k))
    }

    /// z-adic valuation: least exponent whose coefficient exceeds
    /// `eps * max_abs()`.
    pub fn valuation_eps(&self, eps: f64) -> Result<i64> {
        let m = self.max_abs();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::AllBelowThreshold);
        }
        self.iter()
            .find(|(_, c)| c.norm() > eps * m)
            .map(|(n, _)| n)
            .ok_or(Error::AllBelowThreshold)
    }

    /// Valuation with the default [`VALUATION_EPSILON`].
    pub fn valuation(&self) -> Result<i64> {
        self.valuation_eps(VALUATION_EPSILON)
    }

    /// Multiplicative inverse on the derivable window. Exact inputs are
    /// inverted up to exponent `DEFAULT_WINDOW`.
    pub fn invert(&self) -> Result<Self> {
        self.invert_to(DEFAULT_WINDOW)
    }

    /// Multiplicative inverse, tracked at most up to exponent `hi`.
    ///
    /// Coefficients below the valuation threshold are treated as zero.
    pub fn invert_to(&self, hi: i64) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let v = self.valuation().map_err(|_| Error::NonInvertible)?;
        let lead = self.coeff(v);
        let mut top = hi;
        if self.tail == Tail::Truncated {
            top = top.min(self.hi() - 2 * v);
        }
        let len = (top + v + 1).max(0) as usize;
        let inv_lead = lead.inv();
        let mut g = Vec::with_capacity(len);
        for m in 0..len {
            if m == 0 {
                g.push(inv_lead);
                continue;
            }
            let mut acc = Complex::default();
            for k in 1..=m {
                acc += self.get(v + k as i64).unwrap_or_default() * g[m - k];
            }
            g.push(-acc * inv_lead);
        }
        Laurent::truncated(-v, g).ensure_finite("invert")
    }

    /// Evaluate `Σ fₙ zⁿ` over the window.
    pub fn eval(&self, z: Complex) -> Complex {
        let mut acc = Complex::default();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * qpow(z, self.lo)
    }

    /// Largest term modulus `|fₙ zⁿ|` at the two ends of the window, as
    /// `(low end, high end)`; used to certify evaluations.
    pub fn edge_terms(&self, z: Complex, width: usize) -> (f64, f64) {
        let n = self.coeffs.len();
        let w = width.min(n);
        let term = |k: usize| (self.coeffs[k] * qpow(z, self.lo + k as i64)).norm();
        let low = (0..w).map(term).fold(0.0, f64::max);
        let high = (n - w..n).map(term).fold(0.0, f64::max);
        (low, high)
    }

    /// Largest term modulus `|fₙ zⁿ|`.
    pub fn max_term(&self, z: Complex) -> f64 {
        self.iter()
            .map(|(n, c)| (c * qpow(z, n)).norm())
            .fold(0.0, f64::max)
    }
}

impl Default for Laurent {
    fn default() -> Self {
        Laurent::zero()
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.iter() {
            if c == Complex::default() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})z^{n}")?;
        }
        if first {
            write!(f, "0")?;
        }
        if self.tail == Tail::Truncated {
            write!(f, " + O(z^{})", self.hi() + 1)?;
        }
        Ok(())
    }
}

fn sum_window(a: &Laurent, b: &Laurent) -> (i64, i64, Tail) {
    let lo = a.lo.min(b.lo);
    match (a.tail, b.tail) {
        (Tail::Exact, Tail::Exact) => (lo, a.hi().max(b.hi()), Tail::Exact),
        (Tail::Truncated, Tail::Truncated) => (lo, a.hi().min(b.hi()), Tail::Truncated),
        (Tail::Truncated, Tail::Exact) => (lo, a.hi(), Tail::Truncated),
        (Tail::Exact, Tail::Truncated) => (lo, b.hi(), Tail::Truncated),
    }
}

fn add_impl(a: &Laurent, b: &Laurent, sign: f64) -> Laurent {
    if b.is_empty() && b.is_exact() {
        return a.clone();
    }
    if a.is_empty() && a.is_exact() {
        return b.scale(Complex::new(sign, 0.0));
    }
    let (lo, hi, tail) = sum_window(a, b);
    Laurent::from_fn(lo, hi, tail, |n| {
        a.get(n).unwrap_or_default() + b.get(n).unwrap_or_default() * sign
    })
}

fn mul_impl(a: &Laurent, b: &Laurent) -> Laurent {
    if (a.is_empty() && a.is_exact()) || (b.is_empty() && b.is_exact()) {
        return Laurent::zero();
    }
    let lo = a.lo + b.lo;
    let (hi, tail) = match (a.tail, b.tail) {
        (Tail::Exact, Tail::Exact) => (a.hi() + b.hi(), Tail::Exact),
        (Tail::Truncated, Tail::Truncated) => ((a.lo + b.hi()).min(b.lo + a.hi()), Tail::Truncated),
        (Tail::Exact, Tail::Truncated) => (a.lo + b.hi(), Tail::Truncated),
        (Tail::Truncated, Tail::Exact) => (b.lo + a.hi(), Tail::Truncated),
    };
    let mut out = vec![Complex::default(); (hi - lo + 1).max(0) as usize];
    for (i, x) in a.coeffs.iter().enumerate() {
        if *x == Complex::default() {
            continue;
        }
        for (j, y) in b.coeffs.iter().enumerate() {
            let k = i + j;
            if k < out.len() {
                out[k] += x * y;
            } else {
                break;
            }
        }
    }
    Laurent {
        lo,
        coeffs: out,
        tail,
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Laurent> for &Laurent {
            type Output = Laurent;
            fn $m(self, rhs: &Laurent) -> Laurent {
                $body(self, rhs)
            }
        }
        impl $tr<Laurent> for Laurent {
            type Output = Laurent;
            fn $m(self, rhs: Laurent) -> Laurent {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Laurent> for Laurent {
            type Output = Laurent;
            fn $m(self, rhs: &Laurent) -> Laurent {
                $body(&self, rhs)
            }
        }
        impl $tr<Laurent> for &Laurent {
            type Output = Laurent;
            fn $m(self, rhs: Laurent) -> Laurent {
                $body(self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a, b| add_impl(a, b, 1.0));
forward_binop!(Sub, sub, |a, b| add_impl(a, b, -1.0));
forward_binop!(Mul, mul, mul_impl);

impl Neg for &Laurent {
    type Output = Laurent;
    fn neg(self) -> Laurent {
        self.scale(Complex::new(-1.0, 0.0))
    }
}

impl Neg for Laurent {
    type Output = Laurent;
    fn neg(self) -> Laurent {
        -&self
    }
}

/// Dense matrix whose entries are [`Laurent`] series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Laurent>,
}

impl SeriesMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SeriesMatrix {
            rows,
            cols,
            data: vec![Laurent::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Laurent::constant(Complex::new(1.0, 0.0)));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Laurent) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SeriesMatrix { rows, cols, data }
    }

    /// The exact matrix `z^n M`.
    pub fn monomial(m: &CMatrix, n: i64) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| {
            Laurent::monomial(m[(i, j)], n).trim()
        })
    }

    /// The exact constant matrix `M`.
    pub fn constant(m: &CMatrix) -> Self {
        Self::monomial(m, 0)
    }

    /// Matrix series `Σ mats[k] z^(lo+k)`.
    pub fn from_coeffs(rows: usize, cols: usize, lo: i64, mats: &[CMatrix], tail: Tail) -> Self {
        let hi = lo + mats.len() as i64 - 1;
        let m = Self::from_fn(rows, cols, |i, j| {
            Laurent::from_fn(lo, hi, tail, |n| mats[(n - lo) as usize][(i, j)])
        });
        if tail == Tail::Exact {
            m.map(|e| e.clone().trim())
        } else {
            m
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Laurent {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Laurent) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = &Laurent> {
        self.data.iter()
    }

    pub fn map(&self, f: impl Fn(&Laurent) -> Laurent) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Lowest `lo` over nonempty entries (0 if all are empty).
    pub fn lo(&self) -> i64 {
        self.data
            .iter()
            .filter(|e| !e.is_empty())
            .map(|e| e.lo())
            .min()
            .unwrap_or(0)
    }

    /// Highest exponent at which every entry is known: the minimum `hi` over
    /// truncated entries, or the maximum `hi` if all entries are exact.
    pub fn hi(&self) -> i64 {
        let trunc = self
            .data
            .iter()
            .filter(|e| !e.is_exact())
            .map(|e| e.hi())
            .min();
        trunc.unwrap_or_else(|| {
            self.data
                .iter()
                .filter(|e| !e.is_empty())
                .map(|e| e.hi())
                .max()
                .unwrap_or(-1)
        })
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(|e| e.is_exact())
    }

    /// Coefficient matrix of `zⁿ`.
    pub fn coeff(&self, n: i64) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).coeff(n))
    }

    /// Coefficient matrix of `zⁿ` if every entry knows it.
    pub fn get_coeff(&self, n: i64) -> Option<CMatrix> {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).get(n)?;
            }
        }
        Some(m)
    }

    pub fn block(&self, r0: usize, c0: usize, r: usize, c: usize) -> Self {
        Self::from_fn(r, c, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &SeriesMatrix) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }

    pub fn sigma(&self, k: i64, q: Complex) -> Self {
        self.map(|e| e.sigma(k, q))
    }

    pub fn scale(&self, c: Complex) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn shift(&self, m: i64) -> Self {
        self.map(|e| e.shift(m))
    }

    pub fn truncate(&self, hi: i64) -> Self {
        self.map(|e| e.truncate(hi))
    }

    pub fn chop(&self, lo: i64, hi: i64) -> Self {
        self.map(|e| e.chop(lo, hi))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|e| e.is_finite())
    }

    pub fn ensure_finite(self, ctx: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::Overflow(ctx))
        }
    }

    /// Left multiplication by a constant matrix.
    pub fn left_const(&self, m: &CMatrix) -> Self {
        assert_eq!(m.ncols(), self.rows);
        Self::from_fn(m.nrows(), self.cols, |i, j| {
            let mut acc = Laurent::zero();
            for k in 0..self.rows {
                if m[(i, k)] != Complex::default() {
                    acc = acc + self.get(k, j).scale(m[(i, k)]);
                }
            }
            acc
        })
    }

    /// Right multiplication by a constant matrix.
    pub fn right_const(&self, m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), self.cols);
        Self::from_fn(self.rows, m.ncols(), |i, j| {
            let mut acc = Laurent::zero();
            for k in 0..self.cols {
                if m[(k, j)] != Complex::default() {
                    acc = acc + self.get(i, k).scale(m[(k, j)]);
                }
            }
            acc
        })
    }

    /// Evaluate every entry at `z`.
    pub fn eval(&self, z: Complex) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }

    /// Inverse of a matrix series whose lowest coefficient matrix is
    /// invertible, tracked up to exponent `hi` at most.
    pub fn inverse_to(&self, hi: i64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::WrongShape(format!(
                "{}x{} is not square",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut v = i64::MAX;
        for e in &self.data {
            if let Ok(x) = e.valuation() {
                v = v.min(x);
            }
        }
        if v == i64::MAX {
            return Err(Error::NonInvertibleGauge);
        }
        let lead = self.coeff(v);
        let lead_inv = lead
            .clone()
            .try_inverse()
            .ok_or(Error::NonInvertibleGauge)?;
        if crate::linalg::condition(&lead) > 1e12 {
            return Err(Error::NonInvertibleGauge);
        }
        let mut top = hi;
        if !self.is_exact() {
            top = top.min(self.hi() - 2 * v);
        }
        let len = (top + v + 1).max(0) as usize;
        let mut g: Vec<CMatrix> = Vec::with_capacity(len);
        for m in 0..len {
            if m == 0 {
                g.push(lead_inv.clone());
                continue;
            }
            let mut acc = CMatrix::zeros(n, n);
            for k in 1..=m {
                acc += self.coeff(v + k as i64) * &g[m - k];
            }
            g.push(-(&lead_inv * acc));
        }
        Self::from_coeffs(n, n, -v, &g, Tail::Truncated).ensure_finite("matrix inverse")
    }
}

impl Add<&SeriesMatrix> for &SeriesMatrix {
    type Output = SeriesMatrix;
    fn add(self, rhs: &SeriesMatrix) -> SeriesMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub<&SeriesMatrix> for &SeriesMatrix {
    type Output = SeriesMatrix;
    fn sub(self, rhs: &SeriesMatrix) -> SeriesMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<&SeriesMatrix> for &SeriesMatrix {
    type Output = SeriesMatrix;
    fn mul(self, rhs: &SeriesMatrix) -> SeriesMatrix {
        assert_eq!(self.cols, rhs.rows);
        SeriesMatrix::from_fn(self.rows, rhs.cols, |i, j| {
            let mut acc = Laurent::zero();
            for k in 0..self.cols {
                let (a, b) = (self.get(i, k), rhs.get(k, j));
                if (a.is_exact() && a.is_empty()) || (b.is_exact() && b.is_empty()) {
                    continue;
                }
                acc = acc + a * b;
            }
            acc
        })
    }
}

impl Neg for &SeriesMatrix {
    type Output = SeriesMatrix;
    fn neg(self) -> SeriesMatrix {
        self.map(|e| -e)
    }
}
