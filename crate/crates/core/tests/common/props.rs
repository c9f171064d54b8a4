//! Seeded property checks shared by the proptest suite and the acceptance harness.

use cashval::curve::DiscountCurve;
use cashval::measure::CashFlow;
use cashval::measure::{Closure, Interval};
use cashval::poly;
use cashval::pricer::{darboux_sums, default_tolerance, forward_price, price, yield_bound_check};
use cashval::sample::{self, Mix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_curve, Family, FAMILIES};

pub type Check = Result<(), String>;

fn setup(seed: u64) -> (ChaCha8Rng, DiscountCurve) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = FAMILIES[rng.gen_range(0..3)];
    let curve = random_curve(&mut rng, family);
    (rng, curve)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

macro_rules! tryf {
    ($e:expr) => {
        $e.map_err(|e| format!("{}: {e}", stringify!($e)))?
    };
}

pub fn linearity(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let g1 = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let g2 = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let a: f64 = rng.gen_range(-5.0..5.0);
    let b: f64 = rng.gen_range(-5.0..5.0);
    let tol = 1e-10;
    let combo = &(&g1 * a) + &(&g2 * b);
    let lhs = tryf!(price(&curve, &combo, tol)).value;
    let rhs = a * tryf!(price(&curve, &g1, tol)).value + b * tryf!(price(&curve, &g2, tol)).value;
    let bound = (a.abs() + b.abs() + 1.0) * tol;
    ensure((lhs - rhs).abs() <= bound, || {
        format!("linearity defect {} > {bound}", (lhs - rhs).abs())
    })
}

pub fn positivity(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let g = sample::nonnegative(&mut rng, 30.0, Mix::ALL[(seed % 3) as usize]);
    let p = tryf!(price(&curve, &g, default_tolerance(&g)));
    ensure(p.lower > 0.0, || format!("nonnegative flow priced {p:?}"))
}

pub fn monotonicity(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let base = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let extra = sample::nonnegative(&mut rng, 30.0, Mix::ALL[(seed % 3) as usize]);
    let bigger = &base + &extra;
    let tol = 1e-10;
    let hi = tryf!(price(&curve, &bigger, tol));
    let lo = tryf!(price(&curve, &base, tol));
    ensure(hi.lower > lo.upper, || format!("{hi:?} not above {lo:?}"))
}

pub fn self_financing(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let g = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let tol = 1e-10;
    let p = tryf!(price(&curve, &g, tol)).value;
    let funded = &g - &tryf!(CashFlow::payment(0.0, p));
    let v = tryf!(price(&curve, &funded, tol)).value;
    ensure(v.abs() <= 2.0 * tol, || {
        format!("self-financed flow priced {v}")
    })
}

/// Price equals the sum over the yearly traces `(k-1, k]` plus the atom at 0.
pub fn sigma_additivity(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let mut g = sample::signed(&mut rng, 64.0, Mix::Mixed);
    if rng.gen_bool(0.5) {
        g = &g + &tryf!(CashFlow::payment(0.0, rng.gen_range(-2.0..2.0)));
    }
    let tol = 1e-10;
    let whole = tryf!(price(&curve, &g, tol)).value;
    let n = g.support().map_or(0, |(_, hi)| hi.ceil() as usize);
    let mut sum = g
        .atoms()
        .iter()
        .filter(|a| a.t == 0.0)
        .map(|a| a.amount)
        .sum::<f64>();
    for k in 1..=n {
        let piece = g.trace(tryf!(Interval::new(
            (k - 1) as f64,
            k as f64,
            Closure::LeftOpen
        )));
        sum += tryf!(price(&curve, &piece, tol)).value;
    }
    let bound = (n as f64 + 1.0) * tol;
    ensure((whole - sum).abs() <= bound, || {
        format!(
            "partition defect {} > {bound} over {n} years",
            (whole - sum).abs()
        )
    })
}

/// Darboux sums on a refined partition nest inside the coarse ones, and
/// halving the pricer tolerance keeps the bracket within the new tolerance.
pub fn darboux_refinement(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = if rng.gen_bool(0.5) {
        Family::Flat
    } else {
        Family::SpotGrid
    };
    let curve = random_curve(&mut rng, family);
    let g = sample::nonnegative(&mut rng, 30.0, Mix::Density);
    let coarse = tryf!(darboux_sums(&curve, &g, 16));
    let fine = tryf!(darboux_sums(&curve, &g, 32));
    let slack = 1e-12 * (1.0 + coarse.value.abs());
    ensure(
        fine.lower >= coarse.lower - slack && fine.upper <= coarse.upper + slack,
        || format!("refined {fine:?} escapes {coarse:?}"),
    )?;
    ensure(fine.width() <= coarse.width() + slack, || {
        "refined width grew".into()
    })?;
    let tight = tryf!(price(&curve, &g, 1e-10));
    ensure(
        coarse.contains(tight.value) && fine.contains(tight.value),
        || format!("price {} outside Darboux sums", tight.value),
    )?;
    let mut tol = 1e-6;
    let mut prev = tryf!(price(&curve, &g, tol)).width();
    for _ in 0..8 {
        tol /= 2.0;
        let w = tryf!(price(&curve, &g, tol)).width();
        ensure(w <= tol, || format!("width {w} above tolerance {tol}"))?;
        ensure(w <= prev.max(tol), || {
            format!("width grew from {prev} to {w}")
        })?;
        prev = w;
    }
    Ok(())
}

pub fn jordan_reconstruction(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let j = g.jordan();
    ensure(
        j.positive.is_nonnegative() && j.negative.is_nonnegative(),
        || "parts are not nonnegative".into(),
    )?;
    let scale = 1e-11 * (1.0 + g.total_variation());
    for _ in 0..20 {
        let a = rng.gen_range(0.0..30.0);
        let b = rng.gen_range(a..31.0);
        let iv = tryf!(Interval::closed(a, b));
        let diff = j.positive.mass(iv) - j.negative.mass(iv) - g.mass(iv);
        ensure(diff.abs() <= scale, || {
            format!("mass defect {diff} on [{a}, {b}]")
        })?;
        let t = rng.gen_range(0.0..30.0);
        ensure(j.positive.rate(t) * j.negative.rate(t) == 0.0, || {
            format!("parts overlap at {t}")
        })?;
    }
    for a in j.positive.atoms() {
        ensure(j.negative.atoms().iter().all(|b| b.t != a.t), || {
            format!("atom at {} in both parts", a.t)
        })?;
    }
    let tv = j.positive.total_mass() + j.negative.total_mass();
    ensure((tv - g.total_variation()).abs() <= scale, || {
        format!("total variation {} vs {tv}", g.total_variation())
    })
}

pub fn lebesgue_reconstruction(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = sample::signed(&mut rng, 30.0, Mix::Mixed);
    let l = g.lebesgue();
    ensure(
        l.ac.atoms().is_empty() && l.singular.density().is_empty(),
        || "parts are mixed".into(),
    )?;
    ensure(&l.ac + &l.singular == g, || {
        "ac + singular differs from the flow".into()
    })
}

/// `∫_a^b Σ d_j (t-a)^j (1+i)^(-t) dt` as a series of positive terms.
fn poly_exp_integral(d: &[f64], a: f64, b: f64, i: f64) -> f64 {
    let lam = (1.0 + i).ln();
    let len = b - a;
    let x = lam * len;
    let mut total = 0.0;
    for (j, &dj) in d.iter().enumerate() {
        // ∫_0^L u^j e^{-λu} du = e^{-x} Σ_{m>j} j! λ^{m-j-1} L^m / m!
        let mut term = len.powi(j as i32 + 1) / (j as f64 + 1.0);
        let mut series = 0.0;
        let mut m = j + 1;
        while term > 1e-300 && m < 400 {
            series += term;
            m += 1;
            term *= x / m as f64;
        }
        total += dj * (-x).exp() * series;
    }
    total * (-lam * a).exp()
}

pub fn polynomial_oracle(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = rng.gen_range(0.0..0.12);
    let curve = tryf!(DiscountCurve::flat(i));
    let a = rng.gen_range(0.0..25.0);
    let len: f64 = rng.gen_range(0.5..10.0);
    let b = a + len;
    let d: Vec<f64> = (0..=rng.gen_range(0..=4))
        .map(|j| rng.gen_range(0.0..1.0) / len.powi(j))
        .collect();
    let coeffs = poly::shift(&d, -a);
    // rounding of the absolute-time coefficients themselves
    let representation =
        4.0 * coeffs.len() as f64 * f64::EPSILON * poly::magnitude(&coeffs, b) * len;
    let g = tryf!(CashFlow::polynomial(a, b, coeffs));
    let tol = 1e-10;
    let p = tryf!(price(&curve, &g, tol));
    let exact = poly_exp_integral(&d, a, b, i);
    ensure((p.value - exact).abs() <= tol + representation, || {
        format!("{p:?} vs closed form {exact}")
    })
}

/// `(1+y_t)^t = (1+y_s)^s (1+f_{s,t})^{t-s}` and the three-point composition.
pub fn forward_identities(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let s = rng.gen_range(0.01..50.0);
    let t = s + rng.gen_range(0.01..50.0);
    let ys = tryf!(curve.spot_rate(s));
    let yt = tryf!(curve.spot_rate(t));
    let f = tryf!(curve.forward_rate(s, t));
    let lhs = (1.0 + yt).powf(t);
    let rhs = (1.0 + ys).powf(s) * (1.0 + f).powf(t - s);
    let rel = ((lhs - rhs) / lhs).abs();
    ensure(rel < 1e-12, || {
        format!("spot/forward residual {rel} at s = {s}, t = {t}")
    })?;
    let r = rng.gen_range(0.0..30.0);
    let s = rng.gen_range(0.0..30.0);
    let t = rng.gen_range(0.0..30.0);
    let res = tryf!(curve.forward_composition_residual(r, s, t));
    ensure(res < 1e-12, || {
        format!("composition residual {res} at ({r}, {s}, {t})")
    })
}

/// `π_s(γ) = π_s(π_t(γ) δ_t)` within `4·tol`.
pub fn forward_consistency(seed: u64) -> Check {
    let (mut rng, curve) = setup(seed);
    let g = sample::signed(&mut rng, 30.0, Mix::ALL[(seed % 3) as usize]);
    let s = rng.gen_range(0.0..30.0);
    let t = rng.gen_range(0.0..30.0);
    let tol = 1e-10;
    let direct = tryf!(forward_price(&curve, &g, s, tol)).value;
    // accuracy of π_t needed so that its image at s stays within tol
    let ratio = tryf!(curve.discount(t)) / tryf!(curve.discount(s));
    let at_t = tryf!(forward_price(&curve, &g, t, tol * ratio.recip().min(1.0))).value;
    let carried = tryf!(CashFlow::payment(t, at_t));
    let via = tryf!(forward_price(&curve, &carried, s, tol)).value;
    ensure((direct - via).abs() <= 4.0 * tol, || {
        format!("forward prices {direct} vs {via} (s = {s}, t = {t})")
    })
}

pub fn yield_bound(seed: u64, family: Family) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curve = random_curve(&mut rng, family);
    let g = sample::nonnegative(&mut rng, 30.0, Mix::ALL[(seed % 3) as usize]);
    let first = g.support().expect("non-null").0;
    let r = rng.gen_range(0.0..=1.0) * first;
    let b = tryf!(yield_bound_check(&curve, &g, r, default_tolerance(&g)));
    ensure(b.holds, || {
        format!("yield {} above f_max {}", b.irr.rate, b.f_max)
    })
}
