//! Piecewise smooth positive functions with Taylor jets.
//!
//! The pricer brackets `∫ρ(t) k(t) dt` on a cell by expanding `k` to a
//! degree-7 Taylor polynomial at the cell midpoint and sandwiching the
//! remainder between the extrema of `k⁽⁸⁾` on the cell. A [`Kernel`] supplies
//! the jets, the points where it is not smooth, and those extrema.

/// Order of the Taylor remainder used by the pricer and measure conversion.
pub const REMAINDER_ORDER: usize = 8;

const SAMPLES: usize = 33;

pub trait Kernel {
    /// Value at `t`.
    fn value(&self, t: f64) -> f64;

    /// Taylor coefficients `k⁽ʲ⁾(at)/j!` for `j = 0..=order`, taken on the
    /// smooth segment that contains `hint`.
    fn jet(&self, at: f64, hint: f64, order: usize) -> Vec<f64>;

    /// Points in the open interval `(a, b)` where the kernel is not smooth.
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64>;

    /// True when the kernel is `c·exp(λt)` on every smooth segment, which makes
    /// every derivative monotone there.
    fn exponential_segments(&self) -> bool;

    /// Largest time the kernel is validated for.
    fn horizon(&self) -> f64;

    /// Range of the `order`-th derivative over `[a, b]`, assumed to lie in one
    /// smooth segment.
    fn derivative_range(&self, a: f64, b: f64, order: usize) -> (f64, f64) {
        let hint = 0.5 * (a + b);
        let deriv = |t: f64| self.jet(t, hint, order)[order] * factorial(order);
        if self.exponential_segments() {
            let (x, y) = (deriv(a), deriv(b));
            return (x.min(y), x.max(y));
        }
        sampled_range(&deriv, a, b)
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Taylor coefficients of `exp(u)` given those of `u`.
pub fn jet_exp(u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    if u.is_empty() {
        return out;
    }
    out[0] = u[0].exp();
    for k in 1..u.len() {
        let acc: f64 = (1..=k).map(|j| j as f64 * u[j] * out[k - j]).sum();
        out[k] = acc / k as f64;
    }
    out
}

/// Sampled extrema refined by golden-section search, then widened by a
/// fraction of the largest step between neighbouring samples.
fn sampled_range<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    if a == b {
        let v = f(a);
        return (v, v);
    }
    let xs: Vec<f64> = (0..SAMPLES)
        .map(|i| a + (b - a) * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let (mut imin, mut imax) = (0, 0);
    for i in 1..SAMPLES {
        if ys[i] < ys[imin] {
            imin = i;
        }
        if ys[i] > ys[imax] {
            imax = i;
        }
    }
    let step = ys
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let lo = xs[imin.saturating_sub(1)];
    let hi = xs[(imin + 1).min(SAMPLES - 1)];
    let min = golden(f, lo, hi, true).min(ys[imin]);
    let lo = xs[imax.saturating_sub(1)];
    let hi = xs[(imax + 1).min(SAMPLES - 1)];
    let max = golden(f, lo, hi, false).max(ys[imax]);
    let pad = 0.125 * step;
    (min - pad, max + pad)
}

fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, minimize: bool) -> f64 {
    let sign = if minimize { 1.0 } else { -1.0 };
    let g = |x: f64| sign * f(x);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d);
        }
    }
    sign * fc.min(fd).min(g(a)).min(g(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_jet_matches_series() {
        // exp(2 + 3s): coefficients e^2 * 3^k / k!
        let j = jet_exp(&[2.0, 3.0, 0.0, 0.0, 0.0]);
        for (k, v) in j.iter().enumerate() {
            let want = 2f64.exp() * 3f64.powi(k as i32) / factorial(k);
            assert!((v - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn sampled_range_finds_interior_extremum() {
        let (lo, hi) = sampled_range(&|x: f64| (x - 0.37).powi(2), 0.0, 1.0);
        assert!(lo <= 0.0 && lo > -1e-2);
        assert!(hi >= 0.63f64.powi(2));
    }
}
