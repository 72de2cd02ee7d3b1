//! Birkhoff–Guenther normal forms, formal solutions and Gevrey cutoffs.
//!
//! All three walk the strictly upper blocks by increasing distance `j - i`.
//! Cell `(i, j)` solves
//!
//! ```text
//! (σF_{ij}) z^{μⱼ}Aⱼ - z^{μᵢ}AᵢF_{ij} = U_{ij} + Σ U_{iℓ}F_{ℓj} - Σ (σF_{iℓ})V_{ℓj} - V_{ij}
//! ```
//!
//! (sums over `i < ℓ < j`), which is the `(i, j)` block of
//! `(σF) A_V = A_U F`. A cell is solved either analytically by
//! [`red`](crate::reduction::red), which leaves a polynomial `V_{ij}` on
//! `μᵢ .. μⱼ-1`, or formally with `V_{ij} = 0` by a forward recurrence.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::module_rep::{BlockModule, GaugeTransform};
use crate::reduction::red;
use crate::series::{qpow, CMatrix, Complex, SeriesMatrix, Tail};
use num_rational::Rational64;

/// Default truncation order.
pub const DEFAULT_ORDER: i64 = 48;

/// A gauge transform `F` with `F[A_V] = A_U`, the normal module `A_V`, and the
/// relative residual of `(σF)A_V - A_U F`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub gauge: GaugeTransform,
    pub normal: BlockModule,
    pub residual: f64,
}

/// Gevrey order `s` of the cutoff form: cells of level `δ < 1/s` are solved
/// analytically, the rest formally.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GevreyOrder {
    /// `s = 0`: every cell analytic (the full normal form).
    Analytic,
    /// A positive rational order.
    Order(Rational64),
    /// `s = ∞`: every cell formal (the formal solution onto the graded module).
    Formal,
}

impl GevreyOrder {
    fn analytic_at(&self, level: i64) -> bool {
        match self {
            GevreyOrder::Analytic => true,
            GevreyOrder::Formal => false,
            GevreyOrder::Order(s) => {
                Rational64::from_integer(level) * s < Rational64::from_integer(1)
            }
        }
    }
}

/// Normal form whose normal components are polynomials on `[μᵢ, μⱼ)`,
/// reached by a convergent gauge transform.
pub fn bg_normal_form(m: &BlockModule, order: i64) -> Result<NormalForm> {
    cutoff(m, GevreyOrder::Analytic, order)
}

/// Gevrey-`s` cutoff form: analytic reduction on the levels `< 1/s`, formal
/// elimination above.
pub fn gevrey_cutoff_form(m: &BlockModule, s: GevreyOrder, order: i64) -> Result<NormalForm> {
    if let GevreyOrder::Order(r) = s {
        if *r.numer() <= 0 {
            return Err(Error::InvalidArgument(
                "Gevrey order must be positive".into(),
            ));
        }
    }
    cutoff(m, s, order)
}

/// The unique formal gauge transform `F̂` with `F̂[A₀] = A_U` modulo
/// `z^{order}`.
pub fn formal_solution(m: &BlockModule, order: i64) -> Result<GaugeTransform> {
    Ok(cutoff(m, GevreyOrder::Formal, order)?.gauge)
}

fn cutoff(m: &BlockModule, s: GevreyOrder, order: i64) -> Result<NormalForm> {
    let q = m.q;
    let k = m.len();
    let sizes = m.sizes();
    let mut f: BTreeMap<(usize, usize), SeriesMatrix> = BTreeMap::new();
    let mut v: BTreeMap<(usize, usize), SeriesMatrix> = BTreeMap::new();
    let zero = |i: usize, j: usize| SeriesMatrix::zeros(sizes[i], sizes[j]);
    for span in 1..k {
        for i in 0..k - span {
            let j = i + span;
            let mut rhs = m.u_block(i, j);
            for l in i + 1..j {
                let fl = f.get(&(l, j)).cloned().unwrap_or_else(|| zero(l, j));
                rhs = &rhs + &(&m.u_block(i, l) * &fl);
                if let Some(vl) = v.get(&(l, j)) {
                    let fil = f.get(&(i, l)).cloned().unwrap_or_else(|| zero(i, l));
                    rhs = &rhs - &(&fil.sigma(1, q) * vl);
                }
            }
            let (bi, bj) = (&m.blocks[i], &m.blocks[j]);
            let level = bj.mu - bi.mu;
            if s.analytic_at(level) {
                let eff = if rhs.is_exact() {
                    order
                } else {
                    order.min(rhs.hi())
                };
                let out = red(bi.mu, &bi.a, bj.mu, &bj.a, &rhs, eff, q)?;
                f.insert((i, j), out.f);
                if out.v.max_abs() > 0.0 {
                    v.insert((i, j), out.v);
                }
            } else {
                let cell = formal_cell(bi.mu, &bi.a, bj.mu, &bj.a, &rhs, order, q)?;
                f.insert((i, j), cell);
            }
        }
    }
    let gauge = GaugeTransform { sizes, f };
    let normal = BlockModule::new(q, m.blocks.clone(), v)?;
    let residual = gauge_residual(&gauge, &normal, m);
    Ok(NormalForm {
        gauge,
        normal,
        residual,
    })
}

/// Forward recurrence for `(σX) z^{μⱼ}Aⱼ - z^{μᵢ}AᵢX = R`:
/// `Xₙ = Aᵢ⁻¹(q^{n-δ}X_{n-δ}Aⱼ - R_{n+μᵢ})`, computed up to `n = order - μᵢ`.
fn formal_cell(
    mu_i: i64,
    a_i: &CMatrix,
    mu_j: i64,
    a_j: &CMatrix,
    r: &SeriesMatrix,
    order: i64,
    q: Complex,
) -> Result<SeriesMatrix> {
    let (ri, rj) = (a_i.nrows(), a_j.nrows());
    let d = mu_j - mu_i;
    let ainv = a_i
        .clone()
        .try_inverse()
        .ok_or(Error::LinearSolveSingular("diagonal block".into()))?;
    let top = if r.is_exact() {
        order
    } else {
        order.min(r.hi())
    };
    let n_hi = top - mu_i;
    if r.max_abs() == 0.0 {
        let tail = if r.is_exact() {
            Tail::Exact
        } else {
            Tail::Truncated
        };
        return Ok(SeriesMatrix::from_coeffs(
            ri,
            rj,
            n_hi.min(0),
            &[CMatrix::zeros(ri, rj)],
            tail,
        ));
    }
    let n_lo = r.lo() - mu_i;
    if n_hi < n_lo {
        return Err(Error::OrderTooSmall {
            have: top,
            need: r.lo(),
        });
    }
    let mut xs: Vec<CMatrix> = Vec::with_capacity((n_hi - n_lo + 1) as usize);
    for n in n_lo..=n_hi {
        let prev = if n - d >= n_lo {
            xs[(n - d - n_lo) as usize].clone() * a_j * qpow(q, n - d)
        } else {
            CMatrix::zeros(ri, rj)
        };
        let x = &ainv * (prev - r.coeff(n + mu_i));
        if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Overflow(
                "formal solution coefficient (lower the truncation order)",
            ));
        }
        xs.push(x);
    }
    Ok(SeriesMatrix::from_coeffs(
        ri,
        rj,
        n_lo,
        &xs,
        Tail::Truncated,
    ))
}

/// Relative residual of `(σF)A_V - A_U F` for a gauge transform claimed to
/// satisfy `F[A_V] = A_U`.
pub fn gauge_residual(f: &GaugeTransform, source: &BlockModule, target: &BlockModule) -> f64 {
    let fm = f.to_matrix();
    let left = &fm.sigma(1, source.q) * &source.matrix();
    let right = &target.matrix() * &fm;
    let scale = left.max_abs().max(right.max_abs()).max(1.0);
    (&left - &right).max_abs() / scale
}

/// Number of scalar coefficients the normal form may carry:
/// `Σ_{i<j} rᵢrⱼ(μⱼ - μᵢ)`, checking that each `V_{ij}` lives on `[μᵢ, μⱼ)`.
pub fn free_coefficient_count(normal: &BlockModule) -> Result<i64> {
    for (&(i, j), vij) in &normal.u {
        let (lo, hi) = (normal.blocks[i].mu, normal.blocks[j].mu);
        for e in vij.entries() {
            let t = e.clone().trim();
            if !t.is_empty() && (t.lo() < lo || t.hi() >= hi) {
                return Err(Error::WrongShape(format!(
                    "normal component ({i},{j}) leaves [{lo}, {hi})"
                )));
            }
        }
    }
    Ok(crate::module_rep::moduli_dimension(&normal.blocks))
}
