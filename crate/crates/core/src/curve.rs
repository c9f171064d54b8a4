//! Unit zero-coupon bond price curves `t -> P_t` and the rates derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smooth::{jet_exp, Kernel};

pub const DEFAULT_HORIZON: f64 = 100.0;

const VALIDATION_SAMPLES: usize = 1000;

/// Functional form of `ln P_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Constant effective annual rate `i`: `P_t = (1 + i)^-t`.
    Flat { rate: f64 },
    /// Knots `(t, ln P_t)` interpolated linearly in `ln P`; the last slope
    /// continues past the final knot.
    SpotGrid { knots: Vec<(f64, f64)> },
    /// Continuously compounded Svensson yields, `P_t = exp(-t·y(t))`.
    Svensson {
        beta0: f64,
        beta1: f64,
        beta2: f64,
        beta3: f64,
        tau1: f64,
        tau2: f64,
    },
}

impl Shape {
    fn log_discount(&self, t: f64) -> f64 {
        match self {
            Shape::Flat { rate } => -t * rate.ln_1p(),
            Shape::SpotGrid { knots } => {
                let i = grid_segment(knots, t);
                let (t0, l0) = knots[i];
                let (t1, l1) = knots[i + 1];
                if t == t0 {
                    l0
                } else if t == t1 {
                    l1
                } else {
                    l0 + (l1 - l0) * (t - t0) / (t1 - t0)
                }
            }
            Shape::Svensson { .. } => -self.svensson_h(t, 0),
        }
    }

    /// Taylor coefficients of `ln P` at `at` on the segment holding `hint`.
    pub(crate) fn log_jet(&self, at: f64, hint: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        match self {
            Shape::Flat { rate } => {
                let k = rate.ln_1p();
                out[0] = -at * k;
                if order >= 1 {
                    out[1] = -k;
                }
            }
            Shape::SpotGrid { knots } => {
                let i = grid_segment(knots, hint);
                let (t0, l0) = knots[i];
                let (t1, l1) = knots[i + 1];
                let slope = (l1 - l0) / (t1 - t0);
                out[0] = l0 + slope * (at - t0);
                if order >= 1 {
                    out[1] = slope;
                }
            }
            Shape::Svensson { .. } => {
                let mut fact = 1.0;
                for (k, o) in out.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *o = -self.svensson_h(at, k) / fact;
                }
            }
        }
        out
    }

    /// k-th derivative of `h(t) = t·y(t)`.
    fn svensson_h(&self, t: f64, k: usize) -> f64 {
        let Shape::Svensson {
            beta0,
            beta1,
            beta2,
            beta3,
            tau1,
            tau2,
        } = *self
        else {
            unreachable!("svensson_h on a non-Svensson shape")
        };
        let e1 = (-t / tau1).exp();
        let e2 = (-t / tau2).exp();
        match k {
            0 => {
                let g1 = -(-t / tau1).exp_m1();
                let g2 = -(-t / tau2).exp_m1();
                beta0 * t
                    + beta1 * tau1 * g1
                    + beta2 * (tau1 * g1 - t * e1)
                    + beta3 * (tau2 * g2 - t * e2)
            }
            1 => beta0 + beta1 * e1 + beta2 * (t / tau1) * e1 + beta3 * (t / tau2) * e2,
            _ => {
                let n = (k - 1) as i32;
                let term = |tau: f64, e: f64| {
                    let m = -1.0 / tau;
                    ((t / tau) * m.powi(n) + n as f64 / tau * m.powi(n - 1)) * e
                };
                beta1 * (-1.0 / tau1).powi(n) * e1 + beta2 * term(tau1, e1) + beta3 * term(tau2, e2)
            }
        }
    }

    pub(crate) fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Shape::SpotGrid { knots } => knots
                .iter()
                .map(|k| k.0)
                .filter(|&t| a < t && t < b)
                .collect(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn is_exponential(&self) -> bool {
        !matches!(self, Shape::Svensson { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Shape::Flat { rate } => {
                if !rate.is_finite() || *rate <= -1.0 {
                    return Err(Error::InvalidCurve(format!(
                        "flat rate must be finite and > -1, got {rate}"
                    )));
                }
            }
            Shape::SpotGrid { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidCurve(
                        "spot grid needs at least two knots".into(),
                    ));
                }
                if knots[0].0 != 0.0 {
                    return Err(Error::InvalidCurve("spot grid must start at t = 0".into()));
                }
                for w in knots.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::InvalidCurve(
                            "spot grid times must be strictly increasing".into(),
                        ));
                    }
                }
                if knots.iter().any(|(t, l)| !t.is_finite() || !l.is_finite()) {
                    return Err(Error::InvalidCurve(
                        "spot grid knots must be finite with positive prices".into(),
                    ));
                }
            }
            Shape::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            } => {
                if [beta0, beta1, beta2, beta3, tau1, tau2]
                    .iter()
                    .any(|v| !v.is_finite())
                {
                    return Err(Error::InvalidCurve(
                        "Svensson parameters must be finite".into(),
                    ));
                }
                if *tau1 <= 0.0 || *tau2 <= 0.0 {
                    return Err(Error::InvalidCurve(
                        "Svensson decay factors must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn grid_segment(knots: &[(f64, f64)], t: f64) -> usize {
    // Index i of the segment [t_i, t_{i+1}] holding t; the last segment extends past the end.
    let idx = knots.partition_point(|k| k.0 <= t);
    idx.saturating_sub(1).min(knots.len() - 2)
}

/// Discount curve: strictly positive, continuous, bounded on its horizon, `P_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveSpec", into = "CurveSpec")]
pub struct DiscountCurve {
    shape: Shape,
    horizon: f64,
}

impl DiscountCurve {
    pub fn new(shape: Shape, horizon: f64) -> Result<Self> {
        shape.validate()?;
        if let Shape::SpotGrid { knots } = &shape {
            if knots[0].1 != 0.0 {
                return Err(Error::InvalidCurve(format!(
                    "spot grid must have P_0 = 1, got {}",
                    knots[0].1.exp()
                )));
            }
        }
        let curve = DiscountCurve { shape, horizon };
        validate_sampled(&curve.shape, horizon)?;
        Ok(curve)
    }

    pub fn flat(rate: f64) -> Result<Self> {
        Self::new(Shape::Flat { rate }, DEFAULT_HORIZON)
    }

    /// Curve through `(t, P_t)` knots; the first knot must be `(0, 1)`.
    pub fn spot_grid(knots: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            Shape::SpotGrid {
                knots: log_knots(knots)?,
            },
            DEFAULT_HORIZON,
        )
    }

    pub fn svensson(
        beta0: f64,
        beta1: f64,
        beta2: f64,
        beta3: f64,
        tau1: f64,
        tau2: f64,
    ) -> Result<Self> {
        Self::new(
            Shape::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            },
            DEFAULT_HORIZON,
        )
    }

    pub fn with_horizon(self, horizon: f64) -> Result<Self> {
        Self::new(self.shape, horizon)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn log_discount(&self, t: f64) -> f64 {
        self.shape.log_discount(t)
    }

    /// `P_t`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.shape.log_discount(t).exp())
    }

    /// Effective spot yield `(1/P_t)^(1/t) - 1`.
    pub fn spot_rate(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Err(Error::SpotRateAtZero);
        }
        self.forward_rate(0.0, t)
    }

    /// Effective forward rate `(P_s/P_t)^(1/(t-s)) - 1`, zero when `s == t`.
    pub fn forward_rate(&self, s: f64, t: f64) -> Result<f64> {
        check_time(s)?;
        check_time(t)?;
        if s > t {
            return Err(Error::ForwardOrder { s, t });
        }
        if s == t {
            return Ok(0.0);
        }
        let growth = self.shape.log_discount(s) - self.shape.log_discount(t);
        Ok((growth / (t - s)).exp_m1())
    }

    /// Time-`t` forward price `P_s / P_t` of the unit bond maturing at `s`.
    pub fn forward_discount(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.discount(s)? / self.discount(t)?)
    }

    /// Relative residual of
    /// `(1 + f(r, r+s+t))^(s+t) = (1 + f(r, r+s))^s · (1 + f(r+s, r+s+t))^t`.
    pub fn forward_composition_residual(&self, r: f64, s: f64, t: f64) -> Result<f64> {
        if s < 0.0 || t < 0.0 {
            return Err(Error::NegativeTime(s.min(t)));
        }
        let lhs = (1.0 + self.forward_rate(r, r + s + t)?).powf(s + t);
        let rhs = (1.0 + self.forward_rate(r, r + s)?).powf(s)
            * (1.0 + self.forward_rate(r + s, r + s + t)?).powf(t);
        Ok(((lhs - rhs) / lhs).abs())
    }
}

impl Kernel for DiscountCurve {
    fn value(&self, t: f64) -> f64 {
        self.shape.log_discount(t).exp()
    }

    fn jet(&self, at: f64, hint: f64, order: usize) -> Vec<f64> {
        jet_exp(&self.shape.log_jet(at, hint, order))
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.shape.breakpoints(a, b)
    }

    fn exponential_segments(&self) -> bool {
        self.shape.is_exponential()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// A positive multiple of a curve shape, without the `P_0 = 1` requirement.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCurve {
    shape: Shape,
    scale: f64,
    horizon: f64,
}

impl WeightCurve {
    pub fn new(shape: Shape, scale: f64, horizon: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidCurve(format!(
                "weight scale must be positive and finite, got {scale}"
            )));
        }
        shape.validate()?;
        // Fold a spot grid's level into the scale so the shape starts at 1.
        let (shape, scale) = match shape {
            Shape::SpotGrid { knots } => {
                let l0 = knots[0].1;
                let knots = knots.into_iter().map(|(t, l)| (t, l - l0)).collect();
                (Shape::SpotGrid { knots }, scale * l0.exp())
            }
            other => (other, scale),
        };
        validate_sampled(&shape, horizon)?;
        Ok(WeightCurve {
            shape,
            scale,
            horizon,
        })
    }

    /// `scale · P_t` for a discount curve.
    pub fn scaled(curve: &DiscountCurve, scale: f64) -> Result<Self> {
        Self::new(curve.shape.clone(), scale, curve.horizon)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl Kernel for WeightCurve {
    fn value(&self, t: f64) -> f64 {
        self.scale * self.shape.log_discount(t).exp()
    }

    fn jet(&self, at: f64, hint: f64, order: usize) -> Vec<f64> {
        let mut u = self.shape.log_jet(at, hint, order);
        u[0] += self.scale.ln();
        jet_exp(&u)
    }

    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.shape.breakpoints(a, b)
    }

    fn exponential_segments(&self) -> bool {
        self.shape.is_exponential()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

fn log_knots(knots: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    knots
        .iter()
        .map(|&(t, p)| {
            if p > 0.0 && p.is_finite() {
                Ok((t, p.ln()))
            } else {
                Err(Error::InvalidCurve(format!(
                    "spot grid price at t = {t} must be positive and finite, got {p}"
                )))
            }
        })
        .collect()
}

fn validate_sampled(shape: &Shape, horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidCurve(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    for k in 0..=VALIDATION_SAMPLES {
        let t = horizon * k as f64 / VALIDATION_SAMPLES as f64;
        let p = shape.log_discount(t).exp();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidCurve(format!(
                "P_t is not positive and finite at t = {t} (got {p})"
            )));
        }
    }
    Ok(())
}

/// Curve file representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Level multiplier; only meaningful for weight curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShapeSpec {
    Flat {
        i: f64,
    },
    SpotGrid {
        knots: Vec<(f64, f64)>,
    },
    Svensson {
        beta0: f64,
        beta1: f64,
        beta2: f64,
        beta3: f64,
        tau1: f64,
        tau2: f64,
    },
}

impl ShapeSpec {
    fn to_shape(&self) -> Result<Shape> {
        Ok(match self {
            ShapeSpec::Flat { i } => Shape::Flat { rate: *i },
            ShapeSpec::SpotGrid { knots } => Shape::SpotGrid {
                knots: log_knots(knots)?,
            },
            &ShapeSpec::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            } => Shape::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            },
        })
    }

    fn from_shape(shape: &Shape) -> Self {
        match shape {
            Shape::Flat { rate } => ShapeSpec::Flat { i: *rate },
            Shape::SpotGrid { knots } => ShapeSpec::SpotGrid {
                knots: knots.iter().map(|&(t, l)| (t, l.exp())).collect(),
            },
            &Shape::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            } => ShapeSpec::Svensson {
                beta0,
                beta1,
                beta2,
                beta3,
                tau1,
                tau2,
            },
        }
    }
}

impl CurveSpec {
    /// Builds a weight curve; with `unit_check` the result must also be a
    /// valid discount curve (`P_0 = 1`, no scale).
    pub fn to_weight_curve(&self, unit_check: bool) -> Result<WeightCurve> {
        if unit_check {
            let curve = DiscountCurve::try_from(self.clone())?;
            return WeightCurve::scaled(&curve, 1.0);
        }
        WeightCurve::new(
            self.shape.to_shape()?,
            self.scale.unwrap_or(1.0),
            self.horizon.unwrap_or(DEFAULT_HORIZON),
        )
    }
}

impl TryFrom<CurveSpec> for DiscountCurve {
    type Error = Error;

    fn try_from(spec: CurveSpec) -> Result<Self> {
        if spec.scale.is_some_and(|s| s != 1.0) {
            return Err(Error::InvalidCurve(
                "a discount curve cannot carry a scale (P_0 must be 1)".into(),
            ));
        }
        DiscountCurve::new(
            spec.shape.to_shape()?,
            spec.horizon.unwrap_or(DEFAULT_HORIZON),
        )
    }
}

impl From<DiscountCurve> for CurveSpec {
    fn from(c: DiscountCurve) -> Self {
        CurveSpec {
            shape: ShapeSpec::from_shape(&c.shape),
            horizon: (c.horizon != DEFAULT_HORIZON).then_some(c.horizon),
            scale: None,
        }
    }
}

impl From<&WeightCurve> for CurveSpec {
    fn from(c: &WeightCurve) -> Self {
        CurveSpec {
            shape: ShapeSpec::from_shape(&c.shape),
            horizon: (c.horizon != DEFAULT_HORIZON).then_some(c.horizon),
            scale: (c.scale != 1.0).then_some(c.scale),
        }
    }
}
