//! Block-upper-triangular q-difference systems with pure integral-slope
//! diagonal
//!
//! ```text
//!        ⎛ z^{μ₁}A₁  U₁₂   …    U₁ₖ  ⎞
//! A_U =  ⎜    0    z^{μ₂}A₂ …    U₂ₖ  ⎟      μ₁ < μ₂ < … < μₖ,
//!        ⎝    0       0     …  z^{μₖ}Aₖ⎠
//! ```
//!
//! together with the gauge action `F[A] = (σ_q F) A F⁻¹`, the dimension of the
//! moduli space, and the resonance set of forbidden summation directions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::series::{CMatrix, Complex, Laurent, SeriesMatrix, DEFAULT_WINDOW};
use crate::special_fn::check_q;

/// Relative tolerance on eigenvalues.
pub const EIG_TOLERANCE: f64 = 1e-9;
/// Directions this close (in `d_q` distance) to a forbidden class are
/// rejected.
pub const RESONANCE_MARGIN: f64 = 1e-6;

/// Pure isoclinic block `z^μ A`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureBlock {
    pub mu: i64,
    pub a: CMatrix,
}

impl PureBlock {
    /// Validate squareness and invertibility of `a`.
    pub fn new(mu: i64, a: CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::WrongShape(format!(
                "block matrix is {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if linalg::condition(&a) > 1e12 {
            return Err(Error::InvalidArgument(
                "block matrix is not invertible".into(),
            ));
        }
        Ok(PureBlock { mu, a })
    }

    /// 1×1 block `z^μ a`.
    pub fn scalar(mu: i64, a: Complex) -> Self {
        PureBlock {
            mu,
            a: CMatrix::from_element(1, 1, a),
        }
    }

    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    /// Whether all eigenvalues lie in the fundamental annulus `1 ≤ |λ| < |q|`.
    pub fn is_normalized(&self, q: Complex) -> bool {
        match self.a.clone().schur().eigenvalues() {
            Some(ev) => ev
                .iter()
                .all(|l| l.norm() >= 1.0 - 1e-12 && l.norm() < q.norm()),
            None => false,
        }
    }
}

/// The matrix `A_U`: pure diagonal blocks and strictly upper blocks `U_{i,j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockModule {
    pub q: Complex,
    pub blocks: Vec<PureBlock>,
    pub u: BTreeMap<(usize, usize), SeriesMatrix>,
}

impl BlockModule {
    /// Validate slopes, shapes and `q`.
    pub fn new(
        q: Complex,
        blocks: Vec<PureBlock>,
        u: BTreeMap<(usize, usize), SeriesMatrix>,
    ) -> Result<Self> {
        check_q(q)?;
        if blocks.is_empty() {
            return Err(Error::WrongShape("no blocks".into()));
        }
        for w in blocks.windows(2) {
            if w[0].mu >= w[1].mu {
                return Err(Error::InvalidArgument(format!(
                    "slopes must be strictly increasing ({} then {})",
                    w[0].mu, w[1].mu
                )));
            }
        }
        for (&(i, j), m) in &u {
            if i >= j || j >= blocks.len() {
                return Err(Error::WrongShape(format!(
                    "U entry ({i},{j}) is not strictly upper"
                )));
            }
            if m.nrows() != blocks[i].rank() || m.ncols() != blocks[j].rank() {
                return Err(Error::WrongShape(format!(
                    "U({i},{j}) is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    blocks[i].rank(),
                    blocks[j].rank()
                )));
            }
        }
        Ok(BlockModule { q, blocks, u })
    }

    /// The graded module `A₀` (all `U` dropped).
    pub fn graded(&self) -> BlockModule {
        BlockModule {
            q: self.q,
            blocks: self.blocks.clone(),
            u: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rank()).collect()
    }

    pub fn rank(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// Row offset of each block.
    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.sizes())
    }

    pub fn slopes(&self) -> Vec<i64> {
        self.blocks.iter().map(|b| b.mu).collect()
    }

    /// `U_{i,j}` (exact zero if absent).
    pub fn u_block(&self, i: usize, j: usize) -> SeriesMatrix {
        self.u
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| SeriesMatrix::zeros(self.blocks[i].rank(), self.blocks[j].rank()))
    }

    /// Whether every `U` entry is (numerically) zero.
    pub fn is_graded(&self) -> bool {
        self.u.values().all(|m| m.max_abs() == 0.0)
    }

    /// The full matrix `A_U`.
    pub fn matrix(&self) -> SeriesMatrix {
        let n = self.rank();
        let off = self.offsets();
        let mut m = SeriesMatrix::zeros(n, n);
        for (i, b) in self.blocks.iter().enumerate() {
            m.set_block(off[i], off[i], &SeriesMatrix::monomial(&b.a, b.mu));
        }
        for (&(i, j), u) in &self.u {
            m.set_block(off[i], off[j], u);
        }
        m
    }

    /// Evaluate `A_U(z)` (the `U` entries summed over their windows).
    pub fn eval(&self, z: Complex) -> CMatrix {
        self.matrix().eval(z)
    }
}

pub(crate) fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|s| {
            let o = acc;
            acc += s;
            o
        })
        .collect()
}

/// Block-unipotent gauge transform `F = I + (F_{i,j})_{i<j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeTransform {
    pub sizes: Vec<usize>,
    pub f: BTreeMap<(usize, usize), SeriesMatrix>,
}

impl GaugeTransform {
    pub fn identity(sizes: Vec<usize>) -> Self {
        GaugeTransform {
            sizes,
            f: BTreeMap::new(),
        }
    }

    /// `F_{i,j}` (exact zero if absent).
    pub fn block(&self, i: usize, j: usize) -> SeriesMatrix {
        self.f
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(|| SeriesMatrix::zeros(self.sizes[i], self.sizes[j]))
    }

    pub fn to_matrix(&self) -> SeriesMatrix {
        let n: usize = self.sizes.iter().sum();
        let off = offsets(&self.sizes);
        let mut m = SeriesMatrix::identity(n);
        for (&(i, j), b) in &self.f {
            m.set_block(off[i], off[j], b);
        }
        m
    }

    /// Exact inverse (finite Neumann sum).
    pub fn inverse(&self) -> SeriesMatrix {
        unipotent_inverse(&self.to_matrix())
    }

    /// Whether all off-diagonal blocks vanish.
    pub fn is_identity(&self, tol: f64) -> bool {
        self.f.values().all(|b| b.max_abs() <= tol)
    }
}

fn is_unipotent(f: &SeriesMatrix) -> bool {
    let one = Laurent::constant(Complex::new(1.0, 0.0));
    (0..f.nrows()).all(|i| {
        (0..=i).all(|j| {
            let e = f.get(i, j);
            if i == j {
                e.is_exact() && e.clone().trim() == one
            } else {
                e.is_exact() && e.clone().trim().is_empty()
            }
        })
    })
}

/// `F⁻¹ = Σ_{k<n} (I - F)^k` for unipotent upper-triangular `F`.
pub fn unipotent_inverse(f: &SeriesMatrix) -> SeriesMatrix {
    let n = f.nrows();
    let id = SeriesMatrix::identity(n);
    let minus_nil = &id - f;
    let mut acc = id.clone();
    let mut pow = id;
    for _ in 1..n {
        pow = &pow * &minus_nil;
        acc = &acc + &pow;
    }
    acc
}

/// Numeric counterpart of [`unipotent_inverse`].
pub fn unipotent_inverse_numeric(f: &CMatrix) -> CMatrix {
    let n = f.nrows();
    let id = CMatrix::identity(n, n);
    let minus_nil = &id - f;
    let mut acc = id.clone();
    let mut pow = id;
    for _ in 1..n {
        pow = &pow * &minus_nil;
        acc += &pow;
    }
    acc
}

/// Gauge action `F[A] = (σ_q F) A F⁻¹`. Unipotent `F` is inverted exactly;
/// otherwise the lowest coefficient matrix of `F` must be invertible.
pub fn gauge_apply(f: &SeriesMatrix, a: &SeriesMatrix, q: Complex) -> Result<SeriesMatrix> {
    let finv = if is_unipotent(f) {
        unipotent_inverse(f)
    } else {
        f.inverse_to(DEFAULT_WINDOW)?
    };
    Ok(&(&f.sigma(1, q) * a) * &finv)
}

/// Dimension `Σ_{i<j} rᵢ rⱼ (μⱼ - μᵢ)` of the space of analytic classes.
pub fn moduli_dimension(blocks: &[PureBlock]) -> i64 {
    let mut d = 0;
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            d += (blocks[i].rank() * blocks[j].rank()) as i64 * (blocks[j].mu - blocks[i].mu);
        }
    }
    d
}

/// A point of `E_q = ℂ*/q^ℤ`, stored in the fundamental annulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction {
    pub c: Complex,
}

impl Direction {
    /// Reduce `c` into `1 ≤ |c| < |q|`.
    pub fn new(c: Complex, q: Complex) -> Result<Self> {
        check_q(q)?;
        if c == Complex::default() || !c.norm().is_finite() {
            return Err(Error::ZeroArgument);
        }
        let k = (c.norm().ln() / q.norm().ln()).floor() as i64;
        let mut r = c * crate::series::qpow(q, -k);
        while r.norm() >= q.norm() {
            r /= q;
        }
        while r.norm() < 1.0 {
            r *= q;
        }
        Ok(Direction { c: r })
    }
}

/// `re±imi` with six decimals and no negative zeros.
pub fn format_complex(c: Complex) -> String {
    format!("{:.6}{:+.6}i", c.re + 0.0, c.im + 0.0)
}

/// `d_q(a, [b]) = inf_k |1 - a/(b q^k)|`: zero iff `a ∈ b q^ℤ`.
pub fn spiral_distance(a: Complex, b: Complex, q: Complex) -> f64 {
    let k0 = ((a / b).norm().ln() / q.norm().ln()).round() as i64;
    (k0 - 2..=k0 + 2)
        .map(|k| (Complex::new(1.0, 0.0) - a / (b * crate::series::qpow(q, k))).norm())
        .fold(f64::INFINITY, f64::min)
}

/// The finite set `Σ_{A₀} ⊂ E_q` of forbidden pole classes: `p(-a)` for
/// every `a` with `q^ℤ a^{μᵢ} Sp(Aᵢ) ∩ q^ℤ a^{μⱼ} Sp(Aⱼ) ≠ ∅`, `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceSet {
    pub q: Complex,
    pub points: Vec<Direction>,
    pub margin: f64,
}

impl ResonanceSet {
    /// Whether summing with poles on `[-c; q]` is authorized, i.e. `p(-c)`
    /// stays `margin` away from every forbidden class.
    pub fn is_generic(&self, c: Complex) -> bool {
        self.points
            .iter()
            .all(|p| spiral_distance(-c, p.c, self.q) > self.margin)
    }

    /// Human-readable list of the forbidden classes.
    pub fn describe(&self) -> String {
        let v: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("p({})", format_complex(p.c)))
            .collect();
        format!("[{}]", v.join(", "))
    }
}

/// Enumerate `Σ_{A₀}`. For a pair `i < j` with `δ = μⱼ - μᵢ` and eigenvalues
/// `α ∈ Sp(Aᵢ)`, `β ∈ Sp(Aⱼ)`, the condition reads `a^δ ∈ (α/β) q^ℤ`, whose
/// solutions modulo `q^ℤ` are the `δ²` points
/// `a = exp((log(α/β) + k log q + 2πi s)/δ)`, `0 ≤ k, s < δ`.
pub fn resonance_set(blocks: &[PureBlock], q: Complex, tol: f64) -> Result<ResonanceSet> {
    check_q(q)?;
    let spectra: Vec<Vec<Complex>> = blocks
        .iter()
        .map(|b| {
            b.a.clone()
                .schur()
                .eigenvalues()
                .map(|v| v.iter().cloned().collect())
        })
        .collect::<Option<_>>()
        .ok_or(Error::EigDecompositionFailed)?;
    let mut points: Vec<Direction> = Vec::new();
    let lq = q.ln();
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let delta = blocks[j].mu - blocks[i].mu;
            for alpha in &spectra[i] {
                for beta in &spectra[j] {
                    let lg = (alpha / beta).ln();
                    for k in 0..delta {
                        for s in 0..delta {
                            let e = (lg + lq * k as f64 + Complex::new(0.0, 2.0 * PI * s as f64))
                                / delta as f64;
                            let p = Direction::new(-e.exp(), q)?;
                            if points.iter().all(|x| spiral_distance(x.c, p.c, q) > tol) {
                                points.push(p);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ResonanceSet {
        q,
        points,
        margin: RESONANCE_MARGIN.max(tol),
    })
}
