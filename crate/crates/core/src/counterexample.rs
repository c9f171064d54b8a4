//! A linear, strictly positive price functional that is not of Choquet form.
//!
//! The atomic part of a cash flow is priced with a discount curve `f` and the
//! density part with a separate positive weight `g`:
//! `π̃(γ) = ∫ g dγ_ac + ∫ f dγ_singular`. Since the Lebesgue split is unique and
//! linear, `π̃` is linear; it is strictly positive on nonnegative non-null
//! cash flows, so it admits no arbitrage, yet it disagrees with `∫ f dγ`
//! whenever `g ≠ f` on the support of the density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveSpec, DiscountCurve, WeightCurve};
use crate::error::{Error, Result};
use crate::measure::CashFlow;
use crate::pricer::{default_tolerance, price, price_with, PriceResult};
use crate::sample::{self, Mix, TrialReport};
use crate::smooth::Kernel;

/// Name of the `g = 2f` preset.
pub const DOUBLE_DENSITY: &str = "double-density";

#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional {
    f: DiscountCurve,
    g: WeightCurve,
}

impl DualFunctional {
    pub fn new(f: DiscountCurve, g: WeightCurve) -> Self {
        DualFunctional { f, g }
    }

    /// `g = 2f`.
    pub fn double_density(f: DiscountCurve) -> Result<Self> {
        let g = WeightCurve::scaled(&f, 2.0)?;
        Ok(DualFunctional { f, g })
    }

    pub fn preset(name: &str, f: DiscountCurve) -> Result<Self> {
        match name {
            DOUBLE_DENSITY => Self::double_density(f),
            other => Err(Error::InvalidCurve(format!("unknown preset {other:?}"))),
        }
    }

    pub fn f_curve(&self) -> &DiscountCurve {
        &self.f
    }

    pub fn g_curve(&self) -> &WeightCurve {
        &self.g
    }

    pub fn horizon(&self) -> f64 {
        self.f.horizon().min(self.g.horizon())
    }
}

/// `∫ f dγ_singular + ∫ g dγ_ac`, with the tolerance split evenly.
pub fn dual_price(df: &DualFunctional, gamma: &CashFlow, tol: f64) -> Result<PriceResult> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidTolerance(tol));
    }
    if let Some((_, hi)) = gamma.support() {
        if hi > df.horizon() {
            return Err(Error::BeyondHorizon {
                t: hi,
                horizon: df.horizon(),
            });
        }
    }
    let parts = gamma.lebesgue();
    let atomic = price_with(&df.f, &parts.singular, 0.5 * tol)?;
    let density = price_with(&df.g, &parts.ac, 0.5 * tol)?;
    Ok(PriceResult {
        value: atomic.value + density.value,
        lower: atomic.lower + density.lower,
        upper: atomic.upper + density.upper,
        atom_part: atomic.atom_part,
        density_part: density.density_part,
    })
}

/// `π̃(γ) - ∫ f dγ`.
pub fn choquet_gap(df: &DualFunctional, gamma: &CashFlow, tol: f64) -> Result<f64> {
    Ok(dual_price(df, gamma, tol)?.value - price(&df.f, gamma, tol)?.value)
}

/// Random checks that `π̃` is a strictly positive, normalized, linear functional.
///
/// Each trial samples a nonnegative cash flow (cycling atoms only, density
/// only, mixed) and requires a positive lower bound, then checks linearity on
/// a random signed pair. `π̃(δ_0) = 1` is checked once.
pub fn verify_na_positivity(df: &DualFunctional, trials: usize, seed: u64) -> TrialReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = df.horizon().min(30.0);
    let mut report = TrialReport::default();

    let unit = CashFlow::dirac(0.0).and_then(|d| dual_price(df, &d, 1e-12));
    report.record(unit.as_ref().is_ok_and(|p| p.value == 1.0), || {
        format!("price of a unit payment at 0: {unit:?}")
    });

    for k in 0..trials {
        let gamma = sample::nonnegative(&mut rng, span, Mix::ALL[k % 3]);
        let tol = default_tolerance(&gamma);
        let res = dual_price(df, &gamma, tol);
        report.record(res.as_ref().is_ok_and(|p| p.lower > 0.0), || {
            format!("trial {k}: positivity failed: {res:?}")
        });

        let g1 = sample::signed(&mut rng, span, Mix::Mixed);
        let g2 = sample::signed(&mut rng, span, Mix::Mixed);
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let combo = &(&g1 * a) + &(&g2 * b);
        let tol = 1e-10;
        let lin = (|| -> Result<f64> {
            let lhs = dual_price(df, &combo, tol)?.value;
            let rhs = a * dual_price(df, &g1, tol)?.value + b * dual_price(df, &g2, tol)?.value;
            Ok((lhs - rhs).abs())
        })();
        let bound = (a.abs() + b.abs() + 1.0) * tol;
        report.record(lin.as_ref().is_ok_and(|d| *d <= bound), || {
            format!("trial {k}: linearity defect {lin:?} exceeds {bound}")
        });
    }
    report
}

/// Dual-functional file representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSpec {
    pub f: CurveSpec,
    pub g: CurveSpec,
    #[serde(default)]
    pub g_unit_check: bool,
}

impl TryFrom<DualSpec> for DualFunctional {
    type Error = Error;

    fn try_from(spec: DualSpec) -> Result<Self> {
        let f = DiscountCurve::try_from(spec.f)?;
        let g = spec.g.to_weight_curve(spec.g_unit_check)?;
        Ok(DualFunctional { f, g })
    }
}

impl From<&DualFunctional> for DualSpec {
    fn from(df: &DualFunctional) -> Self {
        DualSpec {
            f: df.f.clone().into(),
            g: (&df.g).into(),
            g_unit_check: false,
        }
    }
}
