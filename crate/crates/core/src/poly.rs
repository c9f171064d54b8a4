//! Dense real polynomials stored as coefficient slices, constant term first.

/// Largest density degree accepted by the cash-flow representation.
pub const MAX_DEGREE: usize = 8;

/// Absolute accuracy of isolated roots.
pub const ROOT_TOL: f64 = 1e-14;

// Five-point Gauss-Legendre rule on [-1, 1]; exact through degree 9.
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

pub fn eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * t + k)
}

/// Sum of |c_k| |t|^k, the scale against which roundoff in `eval` is measured.
pub fn magnitude(c: &[f64], t: f64) -> f64 {
    let at = t.abs();
    c.iter().rev().fold(0.0, |acc, &k| acc * at + k.abs())
}

/// Drops trailing zero coefficients. The zero polynomial becomes empty.
pub fn trim(mut c: Vec<f64>) -> Vec<f64> {
    while c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

pub fn is_zero(c: &[f64]) -> bool {
    c.iter().all(|&k| k == 0.0)
}

pub fn degree(c: &[f64]) -> usize {
    c.iter().rposition(|&k| k != 0.0).unwrap_or(0)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect();
    trim(out)
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    trim(a.iter().map(|&k| k * s).collect())
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &x)| k as f64 * x)
        .collect()
}

pub fn antiderivative(c: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(0.0);
    out.extend(c.iter().enumerate().map(|(k, &x)| x / (k + 1) as f64));
    out
}

/// Coefficients of `s -> p(origin + s)` (Taylor shift by synthetic division).
///
/// The recurrence runs in double-double arithmetic, so each output
/// coefficient is accurate to about one rounding even when the shift cancels
/// heavily, e.g. re-centering absolute-time coefficients far from zero.
pub fn shift(c: &[f64], origin: f64) -> Vec<f64> {
    let mut out: Vec<(f64, f64)> = c.iter().map(|&x| (x, 0.0)).collect();
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] = dd_add(out[j], dd_mul(out[j + 1], origin));
        }
    }
    out.into_iter().map(|(h, l)| h + l).collect()
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn dd_add(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(x.0, y.0);
    fast_two_sum(s, e + x.1 + y.1)
}

fn dd_mul(x: (f64, f64), d: f64) -> (f64, f64) {
    let p = x.0 * d;
    let e = x.0.mul_add(d, -p);
    fast_two_sum(p, e + x.1 * d)
}

/// Integral of the polynomial over [a, b].
pub fn integrate(c: &[f64], a: f64, b: f64) -> f64 {
    if c.is_empty() || a == b {
        return 0.0;
    }
    if c.len() <= 10 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let sum: f64 = GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS.iter())
            .map(|(&x, &w)| w * eval(c, mid + half * x))
            .sum();
        half * sum
    } else {
        let anti = antiderivative(c);
        eval(&anti, b) - eval(&anti, a)
    }
}

/// Integral over [-r, r] of a polynomial in the local variable.
pub fn integrate_symmetric(c: &[f64], r: f64) -> f64 {
    // Odd powers vanish; accumulate even powers r^(k+1) * 2/(k+1).
    let mut acc = 0.0;
    let mut rk1 = r;
    for (k, &x) in c.iter().enumerate() {
        if k % 2 == 0 {
            acc += x * 2.0 * rk1 / (k + 1) as f64;
        }
        rk1 *= r;
    }
    acc
}

/// Points in the open interval (a, b) where the polynomial changes sign.
///
/// Roots of even multiplicity (the polynomial touches zero) are not reported.
pub fn sign_change_roots(c: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = trim(c.to_vec());
    if c.len() <= 1 || !(a < b) {
        return Vec::new();
    }
    // Monotone segments are delimited by the sign changes of the derivative.
    let crit = sign_change_roots(&derivative(&c), a, b);
    let mut knots = Vec::with_capacity(crit.len() + 2);
    knots.push(a);
    knots.extend(crit);
    knots.push(b);

    let snap = |x: f64| {
        let v = eval(&c, x);
        if v.abs() <= 64.0 * f64::EPSILON * magnitude(&c, x) {
            0.0
        } else {
            v
        }
    };
    let values: Vec<f64> = knots.iter().map(|&x| snap(x)).collect();

    let mut roots = Vec::new();
    for i in 0..knots.len() - 1 {
        let (l, r) = (knots[i], knots[i + 1]);
        let (vl, vr) = (values[i], values[i + 1]);
        if vl * vr < 0.0 {
            roots.push(bisect(&c, l, r, vl));
        }
    }
    roots
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64, v_lo: f64) -> f64 {
    let neg_lo = v_lo < 0.0;
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = eval(c, mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
