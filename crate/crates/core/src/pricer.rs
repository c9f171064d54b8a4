//! No-arbitrage present values `∫ P_t dγ(t)` with certified error brackets.
//!
//! Atoms are priced exactly as `Σ c_k P(t_k)`. Density pieces are split into
//! their positive and negative parts and integrated cell by cell. On a cell
//! `[a, b]` with midpoint `c` and nonnegative density `ρ`, the kernel is
//! written as its degree-7 Taylor polynomial plus the Lagrange remainder
//! `k⁽⁸⁾(ξ)(t - c)⁸/8!`. Since `ρ(t)(t - c)⁸ ≥ 0`, the remainder integral lies
//! between the minimum and maximum of `k⁽⁸⁾` on the cell times that weight,
//! which is the Darboux sandwich applied one Taylor order up. Cells are split
//! greedily, widest first, until the total bracket width meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::curve::{DiscountCurve, Shape};
use crate::error::{Error, Result};
use crate::measure::{Bracket, CashFlow, DensityPiece};
use crate::poly;
use crate::quad;
use crate::smooth::{factorial, Kernel, REMAINDER_ORDER};

const MAX_CELLS: usize = 1 << 18;

/// A present value with its certified bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceResult {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Exact contribution of the atoms.
    pub atom_part: f64,
    /// Quadrature contribution of the density.
    pub density_part: f64,
}

impl PriceResult {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    fn scaled(self, factor: f64) -> PriceResult {
        debug_assert!(factor > 0.0);
        let value = self.value * factor;
        let atom_part = self.atom_part * factor;
        PriceResult {
            value,
            lower: self.lower * factor,
            upper: self.upper * factor,
            atom_part,
            density_part: value - atom_part,
        }
    }
}

/// Solution of the internal-rate-of-return equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldResult {
    pub rate: f64,
    /// Present value at `rate` minus the target price.
    pub residual: f64,
    pub iterations: usize,
}

/// Outcome of comparing a yield with the largest forward rate over the payment span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldBound {
    pub irr: YieldResult,
    pub f_max: f64,
    pub holds: bool,
}

/// `1e-10 · (1 + total variation)`.
pub fn default_tolerance(gamma: &CashFlow) -> f64 {
    1e-10 * (1.0 + gamma.total_variation())
}

/// Present value of `gamma` under `curve`.
pub fn price(curve: &DiscountCurve, gamma: &CashFlow, tol: f64) -> Result<PriceResult> {
    price_with(curve, gamma, tol)
}

/// `∫ k dγ` for any positive smooth kernel.
pub fn price_with<K: Kernel + ?Sized>(
    kernel: &K,
    gamma: &CashFlow,
    tol: f64,
) -> Result<PriceResult> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    check_horizon(kernel.horizon(), gamma)?;

    let atom_part: f64 = gamma
        .atoms()
        .iter()
        .map(|a| a.amount * kernel.value(a.t))
        .sum();
    if !atom_part.is_finite() {
        return Err(Error::NonFinite(gamma.atoms()[0].t));
    }

    let jordan = gamma.ac_part().jordan();
    let pieces: Vec<(f64, &DensityPiece)> = jordan
        .positive
        .density()
        .iter()
        .map(|p| (1.0, p))
        .chain(jordan.negative.density().iter().map(|p| (-1.0, p)))
        .collect();
    let density = integrate_density(kernel, &pieces, tol)?;

    Ok(PriceResult {
        value: atom_part + density.value,
        lower: atom_part + density.lower,
        upper: atom_part + density.upper,
        atom_part,
        density_part: density.value,
    })
}

fn check_horizon(horizon: f64, gamma: &CashFlow) -> Result<()> {
    if let Some((_, hi)) = gamma.support() {
        if hi > horizon {
            return Err(Error::BeyondHorizon { t: hi, horizon });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    piece: usize,
    a: f64,
    b: f64,
    lower: f64,
    upper: f64,
    value: f64,
}

impl Cell {
    fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

struct Widest {
    width: f64,
    id: usize,
}

impl PartialEq for Widest {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Widest {}

impl PartialOrd for Widest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Widest {
    fn cmp(&self, other: &Self) -> Ordering {
        // widest first, then the earliest created cell
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn integrate_density<K: Kernel + ?Sized>(
    kernel: &K,
    pieces: &[(f64, &DensityPiece)],
    tol: f64,
) -> Result<Bracket> {
    let mut cells: Vec<Option<Cell>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;

    let push = |cell: Cell, cells: &mut Vec<Option<Cell>>, heap: &mut BinaryHeap<Widest>| {
        let id = cells.len();
        heap.push(Widest {
            width: cell.width(),
            id,
        });
        cells.push(Some(cell));
        cell.width()
    };

    for (idx, (_, p)) in pieces.iter().enumerate() {
        let mut knots = vec![p.from];
        knots.extend(kernel.breakpoints(p.from, p.to));
        knots.push(p.to);
        for w in knots.windows(2) {
            let cell = bracket_cell(kernel, &p.coeffs, idx, w[0], w[1])?;
            total += push(cell, &mut cells, &mut heap);
        }
    }

    loop {
        while total > tol {
            let Some(Widest { id, .. }) = heap.pop() else {
                break;
            };
            let cell = cells[id].take().expect("heap entries refer to live cells");
            let mid = 0.5 * (cell.a + cell.b);
            if !(cell.a < mid && mid < cell.b) || cells.len() >= MAX_CELLS {
                return Err(Error::QuadratureStalled {
                    tol,
                    achieved: total,
                });
            }
            let coeffs = &pieces[cell.piece].1.coeffs;
            let left = bracket_cell(kernel, coeffs, cell.piece, cell.a, mid)?;
            let right = bracket_cell(kernel, coeffs, cell.piece, mid, cell.b)?;
            total -= cell.width();
            total += push(left, &mut cells, &mut heap);
            total += push(right, &mut cells, &mut heap);
        }

        // Fixed-order summation over live cells.
        let mut live: Vec<Cell> = cells.iter().flatten().copied().collect();
        live.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
        let mut out = Bracket::exact(0.0);
        for c in &live {
            let sign = pieces[c.piece].0;
            if sign > 0.0 {
                out.value += c.value;
                out.lower += c.lower;
                out.upper += c.upper;
            } else {
                out.value -= c.value;
                out.lower -= c.upper;
                out.upper -= c.lower;
            }
        }
        if out.width() <= tol {
            return Ok(out);
        }
        // accumulated drift in `total`; resynchronise and keep refining
        total = live.iter().map(Cell::width).sum::<f64>().max(out.width());
        if heap.is_empty() {
            return Err(Error::QuadratureStalled {
                tol,
                achieved: out.width(),
            });
        }
    }
}

/// Certified bracket for `∫_a^b ρ k` with `ρ ≥ 0` on `[a, b]` and `k` smooth there.
fn bracket_cell<K: Kernel + ?Sized>(
    kernel: &K,
    coeffs: &[f64],
    piece: usize,
    a: f64,
    b: f64,
) -> Result<Cell> {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let local = poly::shift(coeffs, c);
    let jet = kernel.jet(c, c, REMAINDER_ORDER);
    if jet.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(c));
    }
    let taylor = &jet[..REMAINDER_ORDER];
    let product = poly::mul(&local, taylor);
    let main = poly::integrate_symmetric(&product, r);

    let mut weighted = vec![0.0; REMAINDER_ORDER];
    weighted.extend_from_slice(&local);
    let weight = poly::integrate_symmetric(&weighted, r).max(0.0) / factorial(REMAINDER_ORDER);

    let (dmin, dmax) = kernel.derivative_range(a, b, REMAINDER_ORDER);
    let abs_local: Vec<f64> = local.iter().map(|v| v.abs()).collect();
    let abs_taylor: Vec<f64> = taylor.iter().map(|v| v.abs()).collect();
    let roundoff = 16.0 * f64::EPSILON * abs_symmetric(&poly::mul(&abs_local, &abs_taylor), r)
        + 4.0 * f64::EPSILON * (dmin.abs() + dmax.abs()) * weight;
    let lower = main + dmin * weight - roundoff;
    let upper = main + dmax * weight + roundoff;

    let value = quad::gl7(|t| poly::eval(coeffs, t) * kernel.value(t), a, b)?;
    Ok(Cell {
        piece,
        a,
        b,
        lower,
        upper,
        value: value.clamp(lower, upper),
    })
}

fn abs_symmetric(c: &[f64], r: f64) -> f64 {
    let mut acc = 0.0;
    let mut rk1 = r;
    for (k, &x) in c.iter().enumerate() {
        acc += x.abs() * 2.0 * rk1 / (k + 1) as f64;
        rk1 *= r;
    }
    acc
}

/// First-order Darboux sums over a uniform partition of every density piece
/// into `cells` parts: `Σ min P · γ(cell)` and `Σ max P · γ(cell)`.
///
/// The returned value is the midpoint; atoms enter exactly.
pub fn darboux_sums<K: Kernel + ?Sized>(
    kernel: &K,
    gamma: &CashFlow,
    cells: usize,
) -> Result<Bracket> {
    check_horizon(kernel.horizon(), gamma)?;
    let cells = cells.max(1);
    let atom_part: f64 = gamma
        .atoms()
        .iter()
        .map(|a| a.amount * kernel.value(a.t))
        .sum();
    let jordan = gamma.ac_part().jordan();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (sign, part) in [(1.0, &jordan.positive), (-1.0, &jordan.negative)] {
        for p in part.density() {
            let h = (p.to - p.from) / cells as f64;
            for k in 0..cells {
                let a = p.from + h * k as f64;
                let b = if k + 1 == cells { p.to } else { a + h };
                let mut knots = vec![a];
                knots.extend(kernel.breakpoints(a, b));
                knots.push(b);
                for w in knots.windows(2) {
                    let mass = poly::integrate(&p.coeffs, w[0], w[1]);
                    let (lo, hi) = kernel.derivative_range(w[0], w[1], 0);
                    if sign > 0.0 {
                        lower += lo * mass;
                        upper += hi * mass;
                    } else {
                        lower -= hi * mass;
                        upper -= lo * mass;
                    }
                }
            }
        }
    }
    Ok(Bracket {
        value: atom_part + 0.5 * (lower + upper),
        lower: atom_part + lower,
        upper: atom_part + upper,
    })
}

/// Time-`t` forward price `π(γ)/P_t`.
pub fn forward_price(
    curve: &DiscountCurve,
    gamma: &CashFlow,
    t: f64,
    tol: f64,
) -> Result<PriceResult> {
    let pt = curve.discount(t)?;
    let spot = price(curve, gamma, tol * pt)?;
    Ok(spot.scaled(1.0 / pt))
}

/// Price of `gamma` in units of `numeraire`.
pub fn numeraire_price(
    curve: &DiscountCurve,
    gamma: &CashFlow,
    numeraire: &CashFlow,
    tol: f64,
) -> Result<f64> {
    if numeraire.is_null() || !numeraire.is_nonnegative() {
        return Err(Error::InvalidNumeraire);
    }
    let num = price(curve, numeraire, tol)?;
    Ok(price(curve, gamma, tol)?.value / num.value)
}

/// Bounds of the yield search domain.
pub const YIELD_RANGE: (f64, f64) = (-0.999, 10.0);

/// The constant effective rate `i` with `∫ (1 + i)^(r - u) dγ(u) = target`,
/// where `r` is the purchase time.
pub fn irr(gamma: &CashFlow, purchase_time: f64, target: f64, tol: f64) -> Result<YieldResult> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    if gamma.is_null() {
        return Err(Error::YieldDomain("a nonzero cash flow".into()));
    }
    if !gamma.is_nonnegative() {
        return Err(Error::YieldDomain("a nonnegative cash flow".into()));
    }
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::YieldDomain("a positive target price".into()));
    }
    let (first, last) = gamma.support().expect("non-null cash flow has a support");
    if !(purchase_time >= 0.0) || purchase_time > first {
        return Err(Error::YieldDomain(
            "a purchase time in [0, first payment time]".into(),
        ));
    }
    let shifted = gamma.shift(-purchase_time)?;
    let horizon = (last - purchase_time).max(1.0);
    let quad_tol = 0.01 * tol;

    let pv = |rate: f64| -> Result<f64> {
        let Ok(curve) = DiscountCurve::new(Shape::Flat { rate }, horizon) else {
            return Ok(f64::INFINITY);
        };
        // Far from the root the value only has to be accurate relative to its size.
        let peak = curve.discount(horizon).unwrap_or(f64::INFINITY).max(1.0);
        match price(&curve, &shifted, quad_tol * peak) {
            Ok(p) => Ok(p.value),
            Err(Error::NonFinite(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };

    // All payments at the purchase time: the present value does not depend on the rate.
    if last == purchase_time {
        let residual = pv(0.0)? - target;
        if residual.abs() <= tol {
            return Ok(YieldResult {
                rate: 0.0,
                residual,
                iterations: 0,
            });
        }
        return Err(Error::NoYieldRoot { target });
    }

    let (mut a, mut b) = YIELD_RANGE;
    let mut ga = pv(a)? - target;
    let mut gb = pv(b)? - target;
    if gb.abs() <= tol {
        return Ok(YieldResult {
            rate: b,
            residual: gb,
            iterations: 0,
        });
    }
    if !(ga > 0.0 && gb < 0.0) {
        return Err(Error::NoYieldRoot { target });
    }

    // Bisection start, then Illinois-modified secant steps; fall back to
    // bisection whenever a step fails to halve the bracket.
    let mut iterations = 0;
    let mut side = 0i8;
    let mut last_width = b - a;
    while iterations < 400 {
        iterations += 1;
        let secant_ok = iterations > 4 && ga.is_finite();
        let mut x = if secant_ok {
            b - gb * (b - a) / (gb - ga)
        } else {
            0.5 * (a + b)
        };
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = pv(x)? - target;
        if gx.abs() <= tol {
            return Ok(YieldResult {
                rate: x,
                residual: gx,
                iterations,
            });
        }
        if gx > 0.0 {
            a = x;
            ga = gx;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = x;
            gb = gx;
            if side == -1 && ga.is_finite() {
                ga *= 0.5;
            }
            side = -1;
        }
        let width = b - a;
        if width > 0.5 * last_width && iterations % 3 == 0 {
            let m = 0.5 * (a + b);
            let gm = pv(m)? - target;
            if gm.abs() <= tol {
                return Ok(YieldResult {
                    rate: m,
                    residual: gm,
                    iterations,
                });
            }
            if gm > 0.0 {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
            side = 0;
        }
        last_width = b - a;
        if b - a <= f64::EPSILON * (1.0 + a.abs()) {
            break;
        }
    }
    Err(Error::YieldDomain(format!(
        "a yield solvable to residual {tol}; bracket collapsed at [{a}, {b}]"
    )))
}

/// Step of the forward-rate grid used by [`yield_bound_check`].
pub const FORWARD_GRID_STEP: f64 = 1e-3;

/// Compares the yield earned by buying `gamma` at its time-`r` forward price
/// with the largest forward rate `f(r, u)` over the payment span.
pub fn yield_bound_check(
    curve: &DiscountCurve,
    gamma: &CashFlow,
    purchase_time: f64,
    tol: f64,
) -> Result<YieldBound> {
    let target = forward_price(curve, gamma, purchase_time, 0.01 * tol)?.value;
    let irr = irr(gamma, purchase_time, target, tol)?;
    let (s, t) = gamma.support().expect("irr rejects the null measure");
    let steps = ((t - s) / FORWARD_GRID_STEP).ceil() as usize;
    let mut f_max = f64::NEG_INFINITY;
    let grid = (0..=steps)
        .map(|k| (s + k as f64 * FORWARD_GRID_STEP).min(t))
        .chain(gamma.atoms().iter().map(|a| a.t));
    for u in grid {
        f_max = f_max.max(curve.forward_rate(purchase_time, u)?);
    }
    Ok(YieldBound {
        irr,
        f_max,
        holds: irr.rate <= f_max + tol,
    })
}
