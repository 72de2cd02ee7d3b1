//! Shared helpers for the integration tests: seeded random instances and
//! independent reference evaluations.

#![allow(dead_code)]

use std::collections::BTreeMap;

use qstokes::module_rep::{BlockModule, PureBlock};
use qstokes::series::{CMatrix, Complex, Laurent, SeriesMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub fn q2() -> Complex {
    c(2.0, 0.0)
}

/// Uniform in the square `[-1, 1]²`.
pub fn cplx(rng: &mut ChaCha8Rng) -> Complex {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Modulus in `[r_min, r_max)`, uniform argument.
pub fn polar(rng: &mut ChaCha8Rng, r_min: f64, r_max: f64) -> Complex {
    Complex::from_polar(
        rng.gen_range(r_min..r_max),
        rng.gen_range(0.0..std::f64::consts::TAU),
    )
}

/// `D + 0.3 N` with `D` diagonal of modulus in `[1, 1.9)` and `N` random:
/// invertible and close to normalized for `|q| = 2`.
pub fn random_block_matrix(rng: &mut ChaCha8Rng, r: usize) -> CMatrix {
    let mut a = CMatrix::from_fn(r, r, |_, _| cplx(rng) * 0.3);
    for i in 0..r {
        a[(i, i)] += polar(rng, 1.0, 1.9);
    }
    a
}

pub fn random_poly(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Laurent {
    Laurent::polynomial(lo, (lo..=hi).map(|_| cplx(rng)).collect()).trim()
}

pub fn random_poly_matrix(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    lo: i64,
    hi: i64,
) -> SeriesMatrix {
    SeriesMatrix::from_fn(rows, cols, |_, _| random_poly(rng, lo, hi))
}

/// A module with the given slopes and ranks; every `U_{ij}` is a random
/// polynomial on `[μᵢ, μⱼ + extra]`.
pub fn random_module(
    rng: &mut ChaCha8Rng,
    q: Complex,
    slopes: &[i64],
    ranks: &[usize],
    extra: i64,
) -> BlockModule {
    let blocks: Vec<PureBlock> = slopes
        .iter()
        .zip(ranks)
        .map(|(&mu, &r)| PureBlock::new(mu, random_block_matrix(rng, r)).unwrap())
        .collect();
    let mut u = BTreeMap::new();
    for i in 0..slopes.len() {
        for j in i + 1..slopes.len() {
            u.insert(
                (i, j),
                random_poly_matrix(rng, ranks[i], ranks[j], slopes[i], slopes[j] + extra),
            );
        }
    }
    BlockModule::new(q, blocks, u).unwrap()
}

/// The module `[[a z^μ, u], [0, b z^ν]]`.
pub fn scalar_two_slope(
    q: Complex,
    a: Complex,
    mu: i64,
    b: Complex,
    nu: i64,
    u: Laurent,
) -> BlockModule {
    let mut us = BTreeMap::new();
    us.insert((0, 1), SeriesMatrix::from_fn(1, 1, |_, _| u.clone()));
    BlockModule::new(
        q,
        vec![PureBlock::scalar(mu, a), PureBlock::scalar(nu, b)],
        us,
    )
    .unwrap()
}

pub fn rel(a: Complex, b: Complex) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `|a - b| / max(|a|, |b|)` in the max norm.
pub fn mat_rel(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b)) / max_abs(a).max(max_abs(b)).max(f64::MIN_POSITIVE)
}

/// Integer power by repeated multiplication.
pub fn ipow(x: Complex, n: i64) -> Complex {
    let base = if n < 0 { x.inv() } else { x };
    (0..n.abs()).fold(c(1.0, 0.0), |acc, _| acc * base)
}

/// `θ(x) = Σ q^{-n(n-1)/2} xⁿ`, summed directly over `|n| ≤ 60` with the
/// exponent evaluated in log space.
pub fn theta_direct(x: Complex, q: Complex) -> Complex {
    let (lq, lx) = (q.ln(), x.ln());
    (-60_i64..=60)
        .map(|n| (lx * n as f64 - lq * (n * (n - 1)) as f64 / 2.0).exp())
        .sum()
}

/// `θ_q(z) = θ(z/q)`.
pub fn thq_direct(z: Complex, q: Complex) -> Complex {
    theta_direct(z / q, q)
}

/// `(1/q; 1/q)_∞` by direct product.
pub fn euler_product(q: Complex) -> Complex {
    let p = q.inv();
    let mut acc = c(1.0, 0.0);
    let mut pk = p;
    for _ in 0..200 {
        acc *= c(1.0, 0.0) - pk;
        pk *= p;
    }
    acc
}

/// `(1/q; 1/q)_m` by direct product.
pub fn finite_euler_product(q: Complex, m: i64) -> Complex {
    let p = q.inv();
    (1..=m).fold(c(1.0, 0.0), |acc, k| acc * (c(1.0, 0.0) - ipow(p, k)))
}

/// Points on a golden-angle spiral in `[r_min, r_max]`, kept `min_dist`
/// away (in `|1 - z/(a qᵏ)|`) from each spiral `a q^ℤ` in `avoid`.
pub fn off_spiral_points(
    q: Complex,
    avoid: &[Complex],
    count: usize,
    r_min: f64,
    r_max: f64,
) -> Vec<Complex> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < count {
        let t = ((k as f64) * 0.618_033_988_749_895).fract();
        let z = Complex::from_polar(r_min * (r_max / r_min).powf(t), golden * k as f64 * 1.7);
        let ok = avoid.iter().all(|&a| {
            (-40..=40)
                .map(|j| (c(1.0, 0.0) - z / (a * ipow(q, j))).norm())
                .fold(f64::INFINITY, f64::min)
                > 0.05
        });
        if ok {
            out.push(z);
        }
        k += 1;
    }
    out
}

/// `f(z) = g(z)/θ_q(z/c)` for `a z σf - f = u`, with
/// `gₙ = Σₖ uₖ τ_{n-k} / (a c qⁿ - 1)`, `τₘ = q^{-m(m+1)/2} c^{-m}`.
pub fn q_euler_closed_form(
    a: Complex,
    u: &Laurent,
    cc: Complex,
    q: Complex,
    z: Complex,
) -> Complex {
    let ln_tau = |m: i64| -q.ln() * ((m * (m + 1)) as f64 / 2.0) - cc.ln() * m as f64;
    let mut g = c(0.0, 0.0);
    for n in -70_i64..=70 {
        let mut gn = c(0.0, 0.0);
        for (k, uk) in u.iter() {
            gn += uk * ln_tau(n - k).exp();
        }
        g += gn / (a * cc * ipow(q, n) - 1.0) * ipow(z, n);
    }
    g / thq_direct(z / cc, q)
}
