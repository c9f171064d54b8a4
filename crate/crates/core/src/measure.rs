//! Finite signed Borel measures on the nonnegative time axis.
//!
//! A [`CashFlow`] is a finite list of point payments (atoms) plus a piecewise
//! polynomial payment density. Every constructor and operation returns the
//! canonical form: atoms sorted by strictly increasing time with nonzero
//! amounts, density pieces sorted, non-overlapping, nonzero, and with equal
//! adjacent pieces merged. Structural equality is therefore measure equality.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly;
use crate::quad;

/// A point payment `amount` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    pub amount: f64,
}

/// A polynomial payment rate on `[from, to)`, coefficients in `t`, constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub from: f64,
    pub to: f64,
    pub coeffs: Vec<f64>,
}

impl DensityPiece {
    pub fn rate(&self, t: f64) -> f64 {
        poly::eval(&self.coeffs, t)
    }

    pub fn mass(&self) -> f64 {
        poly::integrate(&self.coeffs, self.from, self.to)
    }
}

/// End convention of an [`Interval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `[from, to]`
    Closed,
    /// `(from, to)`
    Open,
    /// `(from, to]`
    LeftOpen,
    /// `[from, to)`
    RightOpen,
}

/// A subinterval of the time axis. `to` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    from: f64,
    to: f64,
    closure: Closure,
}

impl Interval {
    pub fn new(from: f64, to: f64, closure: Closure) -> Result<Self> {
        if !(from >= 0.0) || !from.is_finite() || to.is_nan() || from > to {
            return Err(Error::InvalidInterval { from, to });
        }
        Ok(Interval { from, to, closure })
    }

    pub fn closed(from: f64, to: f64) -> Result<Self> {
        Self::new(from, to, Closure::Closed)
    }

    pub fn left_open(from: f64, to: f64) -> Result<Self> {
        Self::new(from, to, Closure::LeftOpen)
    }

    /// `[0, inf)`
    pub fn whole() -> Self {
        Interval {
            from: 0.0,
            to: f64::INFINITY,
            closure: Closure::RightOpen,
        }
    }

    pub fn from(&self) -> f64 {
        self.from
    }

    pub fn to(&self) -> f64 {
        self.to
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn contains(&self, t: f64) -> bool {
        let left = match self.closure {
            Closure::Closed | Closure::RightOpen => t >= self.from,
            Closure::Open | Closure::LeftOpen => t > self.from,
        };
        let right = match self.closure {
            Closure::Closed | Closure::LeftOpen => t <= self.to,
            Closure::Open | Closure::RightOpen => t < self.to,
        };
        left && right
    }
}

/// A value with an enclosing error bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn exact(value: f64) -> Self {
        Bracket {
            value,
            lower: value,
            upper: value,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// A finite signed measure on `[0, inf)` with atomic and absolutely continuous parts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawCashFlow")]
pub struct CashFlow {
    atoms: Vec<Atom>,
    density: Vec<DensityPiece>,
}

#[derive(Deserialize)]
struct RawCashFlow {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    density: Vec<DensityPiece>,
}

impl TryFrom<RawCashFlow> for CashFlow {
    type Error = Error;

    fn try_from(raw: RawCashFlow) -> Result<Self> {
        CashFlow::new(raw.atoms, raw.density)
    }
}

/// Hahn-Jordan split into mutually singular nonnegative parts.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanPair {
    pub positive: CashFlow,
    pub negative: CashFlow,
}

/// Split into the absolutely continuous part and the (atomic) singular part.
#[derive(Debug, Clone, PartialEq)]
pub struct LebesguePair {
    pub ac: CashFlow,
    pub singular: CashFlow,
}

impl CashFlow {
    /// Validates and normalizes. Overlapping density pieces are summed.
    pub fn new(atoms: Vec<Atom>, density: Vec<DensityPiece>) -> Result<Self> {
        for a in &atoms {
            if !a.t.is_finite() || !a.amount.is_finite() {
                return Err(Error::InvalidCashFlow(format!(
                    "non-finite atom (t = {}, amount = {})",
                    a.t, a.amount
                )));
            }
            if a.t < 0.0 {
                return Err(Error::InvalidCashFlow(format!(
                    "negative atom time {}",
                    a.t
                )));
            }
        }
        for p in &density {
            if !p.from.is_finite() || !p.to.is_finite() {
                return Err(Error::InvalidCashFlow(format!(
                    "non-finite density bounds [{}, {})",
                    p.from, p.to
                )));
            }
            if p.from < 0.0 {
                return Err(Error::InvalidCashFlow(format!(
                    "negative density start {}",
                    p.from
                )));
            }
            if p.from >= p.to {
                return Err(Error::InvalidCashFlow(format!(
                    "density piece needs from < to, got [{}, {})",
                    p.from, p.to
                )));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidCashFlow(
                    "non-finite density coefficient".into(),
                ));
            }
            if poly::degree(&p.coeffs) > poly::MAX_DEGREE {
                return Err(Error::InvalidCashFlow(format!(
                    "density degree {} exceeds {}",
                    poly::degree(&p.coeffs),
                    poly::MAX_DEGREE
                )));
            }
        }
        Ok(Self::from_parts(atoms, density))
    }

    fn from_parts(atoms: Vec<Atom>, density: Vec<DensityPiece>) -> Self {
        CashFlow {
            atoms: normalize_atoms(atoms),
            density: normalize_density(density),
        }
    }

    /// The null measure.
    pub fn null() -> Self {
        CashFlow::default()
    }

    /// Unit payment at `t`.
    pub fn dirac(t: f64) -> Result<Self> {
        Self::payment(t, 1.0)
    }

    pub fn payment(t: f64, amount: f64) -> Result<Self> {
        Self::new(vec![Atom { t, amount }], Vec::new())
    }

    /// Payments of `amount` at each of the given times.
    pub fn payments<I: IntoIterator<Item = f64>>(times: I, amount: f64) -> Result<Self> {
        Self::new(
            times.into_iter().map(|t| Atom { t, amount }).collect(),
            Vec::new(),
        )
    }

    /// Constant payment rate on `[from, to)`.
    pub fn uniform(from: f64, to: f64, rate: f64) -> Result<Self> {
        Self::polynomial(from, to, vec![rate])
    }

    pub fn polynomial(from: f64, to: f64, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), vec![DensityPiece { from, to, coeffs }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn is_null(&self) -> bool {
        self.atoms.is_empty() && self.density.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_empty()
    }

    /// Density value at `t` (pieces are half-open on the right).
    pub fn rate(&self, t: f64) -> f64 {
        self.density
            .iter()
            .find(|p| p.from <= t && t < p.to)
            .map_or(0.0, |p| p.rate(t))
    }

    /// Smallest and largest time carrying mass, `None` for the null measure.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(first), Some(last)) = (self.atoms.first(), self.atoms.last()) {
            lo = lo.min(first.t);
            hi = hi.max(last.t);
        }
        if let (Some(first), Some(last)) = (self.density.first(), self.density.last()) {
            lo = lo.min(first.from);
            hi = hi.max(last.to);
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn scale(&self, c: f64) -> CashFlow {
        if c == 0.0 {
            return CashFlow::null();
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                t: a.t,
                amount: a.amount * c,
            })
            .collect();
        let density = self
            .density
            .iter()
            .map(|p| DensityPiece {
                from: p.from,
                to: p.to,
                coeffs: poly::scale(&p.coeffs, c),
            })
            .collect();
        Self::from_parts(atoms, density)
    }

    /// Moves every payment by `dt` years. Fails if a payment would land before 0.
    pub fn shift(&self, dt: f64) -> Result<CashFlow> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                t: a.t + dt,
                amount: a.amount,
            })
            .collect();
        let density = self
            .density
            .iter()
            .map(|p| DensityPiece {
                from: p.from + dt,
                to: p.to + dt,
                coeffs: poly::shift(&p.coeffs, -dt),
            })
            .collect();
        Self::new(atoms, density)
    }

    pub fn jordan(&self) -> JordanPair {
        let mut pos_atoms = Vec::new();
        let mut neg_atoms = Vec::new();
        for a in &self.atoms {
            if a.amount > 0.0 {
                pos_atoms.push(*a);
            } else {
                neg_atoms.push(Atom {
                    t: a.t,
                    amount: -a.amount,
                });
            }
        }
        let mut pos_density = Vec::new();
        let mut neg_density = Vec::new();
        for p in &self.density {
            let mut knots = vec![p.from];
            knots.extend(poly::sign_change_roots(&p.coeffs, p.from, p.to));
            knots.push(p.to);
            for w in knots.windows(2) {
                let (l, r) = (w[0], w[1]);
                if !(l < r) {
                    continue;
                }
                let probe: f64 = [0.25, 0.5, 0.75]
                    .iter()
                    .map(|f| p.rate(l + f * (r - l)))
                    .sum();
                let piece = DensityPiece {
                    from: l,
                    to: r,
                    coeffs: p.coeffs.clone(),
                };
                if probe > 0.0 {
                    pos_density.push(piece);
                } else if probe < 0.0 {
                    neg_density.push(DensityPiece {
                        coeffs: poly::scale(&piece.coeffs, -1.0),
                        ..piece
                    });
                }
            }
        }
        JordanPair {
            positive: Self::from_parts(pos_atoms, pos_density),
            negative: Self::from_parts(neg_atoms, neg_density),
        }
    }

    pub fn lebesgue(&self) -> LebesguePair {
        LebesguePair {
            ac: CashFlow {
                atoms: Vec::new(),
                density: self.density.clone(),
            },
            singular: CashFlow {
                atoms: self.atoms.clone(),
                density: Vec::new(),
            },
        }
    }

    /// Absolutely continuous part.
    pub fn ac_part(&self) -> CashFlow {
        self.lebesgue().ac
    }

    /// Atomic part.
    pub fn atomic_part(&self) -> CashFlow {
        self.lebesgue().singular
    }

    /// Restriction to an interval. Density endpoints carry no mass, so only
    /// atoms are sensitive to the end convention.
    pub fn trace(&self, interval: Interval) -> CashFlow {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| interval.contains(a.t))
            .copied()
            .collect();
        let density = self
            .density
            .iter()
            .filter_map(|p| {
                let from = p.from.max(interval.from);
                let to = p.to.min(interval.to);
                (from < to).then(|| DensityPiece {
                    from,
                    to,
                    coeffs: p.coeffs.clone(),
                })
            })
            .collect();
        Self::from_parts(atoms, density)
    }

    /// Measure of an interval.
    pub fn mass(&self, interval: Interval) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|a| interval.contains(a.t))
            .map(|a| a.amount)
            .sum();
        let density: f64 = self
            .density
            .iter()
            .map(|p| {
                let from = p.from.max(interval.from);
                let to = p.to.min(interval.to);
                if from < to {
                    poly::integrate(&p.coeffs, from, to)
                } else {
                    0.0
                }
            })
            .sum();
        atoms + density
    }

    /// Distribution function `F(t) = mass([0, t])`.
    pub fn distribution(&self, t: f64) -> Result<f64> {
        Ok(self.mass(Interval::closed(0.0, t)?))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(Interval::whole())
    }

    pub fn total_variation(&self) -> f64 {
        let JordanPair { positive, negative } = self.jordan();
        positive.total_mass() + negative.total_mass()
    }

    /// True if the measure is nonnegative (the null measure included).
    pub fn is_nonnegative(&self) -> bool {
        self.jordan().negative.is_null()
    }

    /// Integral of `f` against the measure.
    ///
    /// Atoms contribute `f(t) * amount` exactly. Density pieces are integrated
    /// adaptively; the bracket half-width is the quadrature error estimate.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<Bracket> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidTolerance(tol));
        }
        let mut atom_part = 0.0;
        for a in &self.atoms {
            let v = f(a.t);
            if !v.is_finite() {
                return Err(Error::NonFinite(a.t));
            }
            atom_part += v * a.amount;
        }
        let span: f64 = self.density.iter().map(|p| p.to - p.from).sum();
        let mut density_part = 0.0;
        let mut err = 0.0;
        for p in &self.density {
            let budget = tol * (p.to - p.from) / span;
            let g = |t: f64| f(t) * p.rate(t);
            let (v, e) = quad::adaptive(&g, p.from, p.to, budget)?;
            density_part += v;
            err += e;
        }
        let value = atom_part + density_part;
        let slack = err + 4.0 * f64::EPSILON * density_part.abs();
        Ok(Bracket {
            value,
            lower: value - slack,
            upper: value + slack,
        })
    }
}

fn normalize_atoms(mut atoms: Vec<Atom>) -> Vec<Atom> {
    atoms.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if last.t == a.t => last.amount += a.amount,
            _ => out.push(a),
        }
    }
    out.retain(|a| a.amount != 0.0);
    // -0.0 and 0.0 compare equal; keep the canonical +0.0 time.
    for a in &mut out {
        if a.t == 0.0 {
            a.t = 0.0;
        }
    }
    out
}

fn normalize_density(pieces: Vec<DensityPiece>) -> Vec<DensityPiece> {
    let pieces: Vec<DensityPiece> = pieces
        .into_iter()
        .map(|p| DensityPiece {
            coeffs: poly::trim(p.coeffs),
            ..p
        })
        .filter(|p| !p.coeffs.is_empty() && p.from < p.to)
        .collect();
    if pieces.is_empty() {
        return pieces;
    }
    let mut knots: Vec<f64> = pieces.iter().flat_map(|p| [p.from, p.to]).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut out: Vec<DensityPiece> = Vec::new();
    for w in knots.windows(2) {
        let (l, r) = (w[0], w[1]);
        let mut coeffs: Vec<f64> = Vec::new();
        for p in pieces.iter().filter(|p| p.from <= l && r <= p.to) {
            coeffs = poly::add(&coeffs, &p.coeffs);
        }
        if poly::is_zero(&coeffs) {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.to == l && last.coeffs == coeffs => last.to = r,
            _ => out.push(DensityPiece {
                from: l,
                to: r,
                coeffs,
            }),
        }
    }
    out
}

impl Add for &CashFlow {
    type Output = CashFlow;

    fn add(self, rhs: &CashFlow) -> CashFlow {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&rhs.atoms);
        let mut density = self.density.clone();
        density.extend_from_slice(&rhs.density);
        CashFlow::from_parts(atoms, density)
    }
}

impl Add for CashFlow {
    type Output = CashFlow;

    fn add(self, rhs: CashFlow) -> CashFlow {
        &self + &rhs
    }
}

impl Neg for &CashFlow {
    type Output = CashFlow;

    fn neg(self) -> CashFlow {
        self.scale(-1.0)
    }
}

impl Neg for CashFlow {
    type Output = CashFlow;

    fn neg(self) -> CashFlow {
        self.scale(-1.0)
    }
}

impl Sub for &CashFlow {
    type Output = CashFlow;

    fn sub(self, rhs: &CashFlow) -> CashFlow {
        self + &(-rhs)
    }
}

impl Sub for CashFlow {
    type Output = CashFlow;

    fn sub(self, rhs: CashFlow) -> CashFlow {
        &self - &rhs
    }
}

impl Mul<f64> for &CashFlow {
    type Output = CashFlow;

    fn mul(self, c: f64) -> CashFlow {
        self.scale(c)
    }
}

impl Mul<f64> for CashFlow {
    type Output = CashFlow;

    fn mul(self, c: f64) -> CashFlow {
        self.scale(c)
    }
}
