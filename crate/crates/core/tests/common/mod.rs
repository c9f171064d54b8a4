//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod props;

use cashval::arbitrage::{Quote, QuoteSet};
use cashval::curve::DiscountCurve;
use cashval::measure::{Atom, CashFlow};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Flat,
    SpotGrid,
    Svensson,
}

pub const FAMILIES: [Family; 3] = [Family::Flat, Family::SpotGrid, Family::Svensson];

pub fn random_curve<R: Rng>(rng: &mut R, family: Family) -> DiscountCurve {
    match family {
        Family::Flat => DiscountCurve::flat(rng.gen_range(-0.01..0.10)).unwrap(),
        Family::SpotGrid => {
            // segment forward rates in [-1%, 8%]
            let mut knots = vec![(0.0, 1.0)];
            let (mut t, mut p) = (0.0, 1.0);
            for _ in 0..rng.gen_range(2..7) {
                let dt = rng.gen_range(0.5..8.0);
                let f: f64 = rng.gen_range(-0.01..0.08);
                t += dt;
                p *= (1.0 + f).powf(-dt);
                knots.push((t, p));
            }
            DiscountCurve::spot_grid(&knots).unwrap()
        }
        Family::Svensson => DiscountCurve::svensson(
            rng.gen_range(0.01..0.06),
            rng.gen_range(-0.03..0.03),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(0.5..3.0),
            rng.gen_range(3.0..10.0),
        )
        .unwrap(),
    }
}

/// Integer difference rows `right - left` of a quote set built from integer amounts.
pub fn integer_rows(qs: &QuoteSet) -> Vec<Vec<i64>> {
    qs.difference_matrix()
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| {
                    assert_eq!(v.fract(), 0.0);
                    *v as i64
                })
                .collect()
        })
        .collect()
}

/// Searches `c ∈ [-bound, bound]^quotes` for a nonnegative nonzero `Σ c_i d_i`.
pub fn brute_force_arbitrage(rows: &[Vec<i64>], bound: i64) -> Option<Vec<i64>> {
    let m = rows.len();
    if m == 0 {
        return None;
    }
    let n = rows[0].len();
    let mut c = vec![-bound; m];
    loop {
        let mut sum = vec![0i64; n];
        for (ci, row) in c.iter().zip(rows) {
            for (s, d) in sum.iter_mut().zip(row) {
                *s += ci * d;
            }
        }
        if sum.iter().all(|v| *v >= 0) && sum.iter().any(|v| *v > 0) {
            return Some(c);
        }
        let mut k = 0;
        loop {
            if k == m {
                return None;
            }
            c[k] += 1;
            if c[k] <= bound {
                break;
            }
            c[k] = -bound;
            k += 1;
        }
    }
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i128) -> (i128, i128) {
    let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    (h1, k1)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Replays certificate coefficients in exact integer arithmetic after
/// rationalizing them; true when the combination is nonnegative and nonzero.
pub fn replay_exact(rows: &[Vec<i64>], coefficients: &[f64]) -> bool {
    let fracs: Vec<(i128, i128)> = coefficients
        .iter()
        .map(|c| rationalize(*c, 10_000_000))
        .collect();
    for ((p, q), c) in fracs.iter().zip(coefficients) {
        if (*p as f64 / *q as f64 - c).abs() > 1e-9 {
            return false;
        }
    }
    let lcm = fracs.iter().fold(1i128, |l, (_, q)| l / gcd(l, *q) * q);
    let ints: Vec<i128> = fracs.iter().map(|(p, q)| p * (lcm / q)).collect();
    let n = rows.first().map_or(0, |r| r.len());
    let mut sum = vec![0i128; n];
    for (c, row) in ints.iter().zip(rows) {
        for (s, d) in sum.iter_mut().zip(row) {
            *s += c * *d as i128;
        }
    }
    sum.iter().all(|v| *v >= 0) && sum.iter().any(|v| *v > 0)
}

fn integer_side<R: Rng>(rng: &mut R, grid: &[f64]) -> CashFlow {
    let mut atoms = Vec::new();
    for &t in grid {
        if rng.gen_bool(0.6) {
            atoms.push(Atom {
                t,
                amount: rng.gen_range(-3i32..=3) as f64,
            });
        }
    }
    CashFlow::new(atoms, Vec::new()).unwrap()
}

/// A quote set on a grid of at most `max_grid` integer times with at most
/// `max_quotes` quotes and integer amounts in [-3, 3].
pub fn random_integer_quotes<R: Rng>(rng: &mut R, max_grid: usize, max_quotes: usize) -> QuoteSet {
    let g = rng.gen_range(1..=max_grid);
    let grid: Vec<f64> = (0..g).map(|k| k as f64).collect();
    let q = rng.gen_range(0..=max_quotes);
    let quotes = (0..q)
        .map(|_| Quote::new(integer_side(rng, &grid), integer_side(rng, &grid)))
        .collect();
    QuoteSet::new(grid, quotes).unwrap()
}
