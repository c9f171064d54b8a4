//! Two-currency cash flows priced in a combined market.
//!
//! FX quotes are domestic units per one foreign unit. The forward rate
//! follows interest rate parity, `X_t = X_0 · P^f_t / P^d_t`, and converting a
//! foreign cash flow into domestic units multiplies it by `X_t` pointwise.

use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpec, DiscountCurve};
use crate::error::{Error, Result};
use crate::measure::{Atom, CashFlow, DensityPiece};
use crate::poly;
use crate::pricer::{price, PriceResult};
use crate::smooth::{factorial, jet_exp, Kernel};

const BOUND_SAMPLES: usize = 1000;
/// Relative sup-norm target for the per-piece fit of `X_t`.
pub const FIT_TOL: f64 = 1e-10;
/// Maximum number of bisection levels when fitting one density piece.
pub const MAX_FIT_LEVELS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Currency {
    Domestic,
    Foreign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketSpec", into = "MarketSpec")]
pub struct DualCurrencyMarket {
    domestic: DiscountCurve,
    foreign: DiscountCurve,
    spot: f64,
}

#[derive(Serialize, Deserialize)]
struct MarketSpec {
    domestic_curve: CurveSpec,
    foreign_curve: CurveSpec,
    spot_fx: f64,
}

impl TryFrom<MarketSpec> for DualCurrencyMarket {
    type Error = Error;

    fn try_from(s: MarketSpec) -> Result<Self> {
        DualCurrencyMarket::new(
            DiscountCurve::try_from(s.domestic_curve)?,
            DiscountCurve::try_from(s.foreign_curve)?,
            s.spot_fx,
        )
    }
}

impl From<DualCurrencyMarket> for MarketSpec {
    fn from(m: DualCurrencyMarket) -> Self {
        MarketSpec {
            domestic_curve: m.domestic.into(),
            foreign_curve: m.foreign.into(),
            spot_fx: m.spot,
        }
    }
}

impl DualCurrencyMarket {
    pub fn new(domestic: DiscountCurve, foreign: DiscountCurve, spot_fx: f64) -> Result<Self> {
        if !(spot_fx > 0.0) || !spot_fx.is_finite() {
            return Err(Error::InvalidMarket(format!(
                "spot FX must be positive and finite, got {spot_fx}"
            )));
        }
        let m = DualCurrencyMarket {
            domestic,
            foreign,
            spot: spot_fx,
        };
        let h = m.horizon();
        for k in 0..=BOUND_SAMPLES {
            let t = h * k as f64 / BOUND_SAMPLES as f64;
            let x = m.fx_forward(t)?;
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidMarket(format!(
                    "forward FX rate is not positive and finite at t = {t} (got {x})"
                )));
            }
        }
        Ok(m)
    }

    pub fn domestic_curve(&self) -> &DiscountCurve {
        &self.domestic
    }

    pub fn foreign_curve(&self) -> &DiscountCurve {
        &self.foreign
    }

    pub fn spot_fx(&self) -> f64 {
        self.spot
    }

    pub fn horizon(&self) -> f64 {
        self.domestic.horizon().min(self.foreign.horizon())
    }

    /// Forward FX rate `X_0 · P^f_t / P^d_t`; exactly `X_0` at `t = 0`.
    pub fn fx_forward(&self, t: f64) -> Result<f64> {
        if t > self.horizon() {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.horizon(),
            });
        }
        if t == 0.0 {
            return Ok(self.spot);
        }
        Ok(self.spot * self.foreign.discount(t)? / self.domestic.discount(t)?)
    }

    fn kernel(&self) -> FxKernel<'_> {
        FxKernel { market: self }
    }
}

/// `t ↦ X_t` as a smooth kernel, for jets and derivative ranges.
struct FxKernel<'a> {
    market: &'a DualCurrencyMarket,
}

impl Kernel for FxKernel<'_> {
    fn value(&self, t: f64) -> f64 {
        let m = self.market;
        m.spot * (m.foreign.log_discount(t) - m.domestic.log_discount(t)).exp()
    }

    fn jet(&self, at: f64, hint: f64, order: usize) -> Vec<f64> {
        let m = self.market;
        let f = m.foreign.shape().log_jet(at, hint, order);
        let d = m.domestic.shape().log_jet(at, hint, order);
        let mut u: Vec<f64> = f.iter().zip(&d).map(|(a, b)| a - b).collect();
        u[0] += m.spot.ln();
        jet_exp(&u)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let mut v = self.market.foreign.shape().breakpoints(a, b);
        v.extend(self.market.domestic.shape().breakpoints(a, b));
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn exponential_segments(&self) -> bool {
        self.market.foreign.shape().is_exponential()
            && self.market.domestic.shape().is_exponential()
    }

    fn horizon(&self) -> f64 {
        self.market.horizon()
    }
}

/// `(γ_d, γ_f)`: a domestic and a foreign cash flow held together.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DualCashFlow {
    #[serde(default)]
    pub domestic: CashFlow,
    #[serde(default)]
    pub foreign: CashFlow,
}

impl DualCashFlow {
    pub fn new(domestic: CashFlow, foreign: CashFlow) -> Self {
        DualCashFlow { domestic, foreign }
    }

    pub fn total_variation(&self) -> f64 {
        self.domestic.total_variation() + self.foreign.total_variation()
    }
}

/// Domestic price `π_d(γ_d) + X_0 · π_f(γ_f)`, or that divided by `X_0` in
/// foreign units.
pub fn price_dual(
    m: &DualCurrencyMarket,
    dcf: &DualCashFlow,
    currency: Currency,
    tol: f64,
) -> Result<PriceResult> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    let tol = match currency {
        Currency::Domestic => tol,
        Currency::Foreign => tol * m.spot,
    };
    let s = m.spot;
    let d = price(&m.domestic, &dcf.domestic, 0.5 * tol)?;
    let f = price(&m.foreign, &dcf.foreign, 0.5 * tol / s)?;
    let value = d.value + s * f.value;
    let atom_part = d.atom_part + s * f.atom_part;
    let out = PriceResult {
        value,
        lower: d.lower + s * f.lower,
        upper: d.upper + s * f.upper,
        atom_part,
        density_part: value - atom_part,
    };
    Ok(match currency {
        Currency::Domestic => out,
        Currency::Foreign => {
            let value = out.value / s;
            let atom_part = out.atom_part / s;
            PriceResult {
                value,
                lower: out.lower / s,
                upper: out.upper / s,
                atom_part,
                density_part: value - atom_part,
            }
        }
    })
}

/// A foreign cash flow re-expressed in domestic units.
#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub cash_flow: CashFlow,
    /// Bound on the total variation of the difference between `cash_flow`
    /// and the exact converted measure; only density pieces contribute.
    pub fit_error_bound: f64,
}

/// Multiplies a foreign cash flow by `X_t`.
///
/// Atoms are converted exactly. On each density piece `X_t` is replaced by a
/// Taylor polynomial whose degree keeps the product within degree 8, with the
/// Lagrange remainder certified against the range of the next derivative.
/// Pieces are bisected until that remainder is within [`FIT_TOL`] of `X_t`.
pub fn convert_measure(m: &DualCurrencyMarket, foreign: &CashFlow) -> Result<Conversion> {
    if let Some((_, hi)) = foreign.support() {
        if hi > m.horizon() {
            return Err(Error::BeyondHorizon {
                t: hi,
                horizon: m.horizon(),
            });
        }
    }
    let atoms = foreign
        .atoms()
        .iter()
        .map(|a| {
            Ok(Atom {
                t: a.t,
                amount: a.amount * m.fx_forward(a.t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let kernel = m.kernel();
    let mut pieces = Vec::new();
    let mut bound = 0.0;
    for p in foreign.density() {
        let order = poly::MAX_DEGREE - poly::degree(&p.coeffs);
        let mut knots = vec![p.from];
        knots.extend(kernel.breakpoints(p.from, p.to));
        knots.push(p.to);
        for w in knots.windows(2) {
            let mut stack = vec![(w[0], w[1], 0u32)];
            while let Some((a, b, level)) = stack.pop() {
                let (coeffs, err) = fit(&kernel, a, b, order);
                if err > FIT_TOL * kernel.value(0.5 * (a + b)) {
                    if level >= MAX_FIT_LEVELS {
                        return Err(Error::FitBudget { from: a, to: b });
                    }
                    let mid = 0.5 * (a + b);
                    stack.push((mid, b, level + 1));
                    stack.push((a, mid, level + 1));
                    continue;
                }
                bound += err * abs_mass(&p.coeffs, a, b);
                pieces.push(DensityPiece {
                    from: a,
                    to: b,
                    coeffs: poly::mul(&p.coeffs, &coeffs),
                });
            }
        }
    }
    Ok(Conversion {
        cash_flow: CashFlow::new(atoms, pieces)?,
        fit_error_bound: bound,
    })
}

/// Taylor polynomial of degree `order` at the midpoint of `[a, b]`, in
/// absolute time, and a sup-norm bound for its error on the cell.
fn fit(k: &FxKernel<'_>, a: f64, b: f64, order: usize) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let jet = k.jet(c, c, order);
    let (lo, hi) = k.derivative_range(a, b, order + 1);
    let remainder = lo.abs().max(hi.abs()) * r.powi(order as i32 + 1) / factorial(order + 1);
    let coeffs = poly::shift(&jet, -c);
    let t_max = a.abs().max(b.abs());
    let roundoff = 16.0 * f64::EPSILON * poly::magnitude(&coeffs, t_max);
    (coeffs, remainder + roundoff)
}

/// `∫_a^b |ρ|`, split at sign changes.
fn abs_mass(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let mut knots = vec![a];
    knots.extend(poly::sign_change_roots(coeffs, a, b));
    knots.push(b);
    knots
        .windows(2)
        .map(|w| poly::integrate(coeffs, w[0], w[1]).abs())
        .sum()
}
