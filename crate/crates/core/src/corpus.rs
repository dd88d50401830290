//! Deterministic random data for test corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{CompArray, ConnectionData};
use crate::symkernel::{monomials_up_to, ChartRef, Rat, ScalarFn};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small nonzero rational such as `-2`, `1/2`, `3`.
pub fn small_rat(rng: &mut CorpusRng) -> Rat {
    let n = loop {
        let k: i64 = rng.gen_range(-3..=3);
        if k != 0 {
            break k;
        }
    };
    let d: i64 = if rng.gen_bool(0.25) { 2 } else { 1 };
    Rat::new(n, d)
}

/// Polynomial of total degree ≤ `deg`; each monomial is present with probability `density`.
pub fn random_poly(rng: &mut CorpusRng, chart: &ChartRef, deg: u32, density: f64) -> ScalarFn {
    let mut terms = Vec::new();
    for e in monomials_up_to(chart.dim(), deg) {
        if rng.gen_bool(density) {
            terms.push((e, small_rat(rng)));
        }
    }
    ScalarFn::from_terms(chart, terms)
}

/// Connection with random polynomial Christoffel symbols.
pub fn random_connection(
    rng: &mut CorpusRng,
    base: &ChartRef,
    rank: usize,
    deg: u32,
    density: f64,
) -> ConnectionData {
    ConnectionData::from_fn(base, rank, |_, _, _| {
        if rng.gen_bool(0.5) {
            random_poly(rng, base, deg, density)
        } else {
            ScalarFn::zero(base)
        }
    })
}

/// Array of random polynomials.
pub fn random_array(
    rng: &mut CorpusRng,
    chart: &ChartRef,
    shape: &[usize],
    deg: u32,
    density: f64,
) -> CompArray {
    CompArray::from_fn(shape, |_| random_poly(rng, chart, deg, density))
}

/// `(2,1)` components `[μ][ν][λ]` related to a `(2,1)` tensor on the base
/// of the coordinate projection onto the variables `base`: components along a
/// base variable depend on base variables only and vanish unless both lower
/// slots are base slots.
pub fn random_projectable_array(
    rng: &mut CorpusRng,
    chart: &ChartRef,
    base: &[usize],
    deg: u32,
    density: f64,
) -> CompArray {
    let n = chart.dim();
    let fiber: Vec<usize> = (0..n).filter(|i| !base.contains(i)).collect();
    CompArray::from_fn(&[n, n, n], |ix| {
        if !base.contains(&ix[2]) {
            random_poly(rng, chart, deg, density)
        } else if base.contains(&ix[0]) && base.contains(&ix[1]) {
            random_poly(rng, chart, deg, density).set_zero(&fiber)
        } else {
            ScalarFn::zero(chart)
        }
    })
}

/// Connection on `ℝ^{b+f}` projectable along the projection to the first `b`
/// coordinates.
pub fn random_projectable_connection(
    rng: &mut CorpusRng,
    total: &ChartRef,
    base_dim: usize,
    deg: u32,
    density: f64,
) -> ConnectionData {
    let base: Vec<usize> = (0..base_dim).collect();
    let arr = random_projectable_array(rng, total, &base, deg, density);
    ConnectionData::from_fn(total, total.dim(), |mu, nu, lam| {
        arr.get(&[mu, nu, lam]).clone()
    })
}
