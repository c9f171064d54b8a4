//! Arbitrage detection for finitely many quoted exchanges of grid cash flows.
//!
//! A quote `left ∼ right` says the two cash flows trade for each other, so
//! the difference `d = right - left` must have price zero. A price vector
//! `p > 0` with `D p = 0` exists exactly when no combination `Σ c_i d_i` is
//! nonnegative and nonzero on the grid (Stiemke's alternative). [`check`]
//! solves one LP for the largest uniform lower bound `s` on `p`, and when
//! `s ≤ 0` a second LP for the certificate `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::measure::{Atom, CashFlow};
use crate::sample::TrialReport;
use crate::simplex::{maximize, LpOutcome};

pub const MAX_GRID: usize = 256;
pub const MAX_QUOTES: usize = 1024;
/// Absolute tolerance on `D p = 0`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Smallest optimal `s` accepted as strict positivity (with `Σ p = 1`).
const MARGIN_EPS: f64 = 1e-10;

/// `left ∼ right`: the two cash flows are exchangeable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub left: CashFlow,
    pub right: CashFlow,
}

impl Quote {
    pub fn new(left: CashFlow, right: CashFlow) -> Self {
        Quote { left, right }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuoteSet")]
pub struct QuoteSet {
    grid: Vec<f64>,
    quotes: Vec<Quote>,
}

#[derive(Deserialize)]
struct RawQuoteSet {
    grid: Vec<f64>,
    #[serde(default)]
    quotes: Vec<Quote>,
}

impl TryFrom<RawQuoteSet> for QuoteSet {
    type Error = Error;

    fn try_from(raw: RawQuoteSet) -> Result<Self> {
        QuoteSet::new(raw.grid, raw.quotes)
    }
}

impl QuoteSet {
    pub fn new(grid: Vec<f64>, quotes: Vec<Quote>) -> Result<Self> {
        if grid.is_empty() || grid.len() > MAX_GRID {
            return Err(Error::InvalidQuotes(format!(
                "grid must have between 1 and {MAX_GRID} times, got {}",
                grid.len()
            )));
        }
        if quotes.len() > MAX_QUOTES {
            return Err(Error::InvalidQuotes(format!(
                "at most {MAX_QUOTES} quotes, got {}",
                quotes.len()
            )));
        }
        if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidQuotes(
                "grid times must be finite and >= 0".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidQuotes(
                "grid must be strictly increasing".into(),
            ));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidQuotes("grid must contain t = 0".into()));
        }
        let qs = QuoteSet { grid, quotes };
        for (i, q) in qs.quotes.iter().enumerate() {
            for (side, cf) in [("left", &q.left), ("right", &q.right)] {
                if !cf.is_atomic() {
                    return Err(Error::InvalidQuotes(format!(
                        "quote {i}: {side} side has a density part"
                    )));
                }
                for a in cf.atoms() {
                    if qs.index(a.t).is_none() {
                        return Err(Error::InvalidQuotes(format!(
                            "quote {i}: {side} side pays at t = {} which is not on the grid",
                            a.t
                        )));
                    }
                }
            }
        }
        Ok(qs)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn quotes(&self) -> &[Quote] {
        &self.quotes
    }

    fn index(&self, t: f64) -> Option<usize> {
        self.grid.binary_search_by(|g| g.total_cmp(&t)).ok()
    }

    /// Grid coordinates of an atomic cash flow.
    pub fn coordinates(&self, cf: &CashFlow) -> Result<Vec<f64>> {
        if !cf.is_atomic() {
            return Err(Error::InvalidQuotes("cash flow has a density part".into()));
        }
        let mut v = vec![0.0; self.grid.len()];
        for a in cf.atoms() {
            let j = self
                .index(a.t)
                .ok_or_else(|| Error::InvalidQuotes(format!("t = {} is not on the grid", a.t)))?;
            v[j] += a.amount;
        }
        Ok(v)
    }

    /// Rows `d_i = right_i - left_i` over grid coordinates.
    pub fn difference_matrix(&self) -> Vec<Vec<f64>> {
        self.quotes
            .iter()
            .map(|q| {
                let r = self
                    .coordinates(&q.right)
                    .expect("validated on construction");
                let l = self
                    .coordinates(&q.left)
                    .expect("validated on construction");
                r.iter().zip(&l).map(|(a, b)| a - b).collect()
            })
            .collect()
    }

    fn to_cash_flow(&self, v: &[f64]) -> CashFlow {
        let atoms = self
            .grid
            .iter()
            .zip(v)
            .filter(|(_, a)| **a != 0.0)
            .map(|(&t, &amount)| Atom { t, amount })
            .collect();
        CashFlow::new(atoms, Vec::new()).expect("grid atoms are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NaVerdict {
    /// A strictly positive price per grid time with `implied[0] = 1`.
    ArbitrageFree { implied: Vec<f64> },
    /// `Σ coefficients_i · d_i` is the nonnegative, nonzero `portfolio`
    /// obtained for nothing.
    Arbitrage {
        coefficients: Vec<f64>,
        portfolio: CashFlow,
    },
}

impl NaVerdict {
    pub fn is_arbitrage_free(&self) -> bool {
        matches!(self, NaVerdict::ArbitrageFree { .. })
    }
}

pub fn check(qs: &QuoteSet) -> Result<NaVerdict> {
    let n = qs.grid.len();
    if qs.quotes.is_empty() {
        return Ok(NaVerdict::ArbitrageFree {
            implied: vec![1.0; n],
        });
    }
    let d = qs.difference_matrix();

    // p = q + s·1 with q ≥ 0 and s = s⁺ - s⁻; maximize s subject to
    // D p = 0 and Σ p = 1.
    let mut a = Vec::with_capacity(d.len() + 1);
    for row in &d {
        let sum: f64 = row.iter().sum();
        let mut r = row.clone();
        r.extend([sum, -sum]);
        a.push(r);
    }
    let mut norm = vec![1.0; n];
    norm.extend([n as f64, -(n as f64)]);
    a.push(norm);
    let mut b = vec![0.0; d.len()];
    b.push(1.0);
    let mut c = vec![0.0; n];
    c.extend([1.0, -1.0]);

    let margin = match maximize(&a, &b, &c)? {
        LpOutcome::Optimal { x, objective } => {
            let s = objective;
            Some((x[..n].iter().map(|q| q + s).collect::<Vec<f64>>(), s))
        }
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => {
            return Err(Error::Simplex("price-margin problem is unbounded".into()))
        }
    };

    if let Some((p, s)) = &margin {
        if *s > MARGIN_EPS {
            let implied: Vec<f64> = p.iter().map(|v| v / p[0]).collect();
            let residual = residual(&d, &implied);
            if residual > FEASIBILITY_TOL || implied.iter().any(|v| *v <= 0.0) {
                return Err(Error::Simplex(format!(
                    "implied prices fail verification (residual {residual:e})"
                )));
            }
            return Ok(NaVerdict::ArbitrageFree { implied });
        }
    }

    match certificate(qs, &d)? {
        Some(v) => Ok(v),
        None => match margin {
            Some((p, s)) if s > 0.0 => Ok(NaVerdict::ArbitrageFree {
                implied: p.iter().map(|v| v / p[0]).collect(),
            }),
            _ => Err(Error::Simplex(
                "neither a positive price vector nor an arbitrage was found".into(),
            )),
        },
    }
}

fn residual(d: &[Vec<f64>], p: &[f64]) -> f64 {
    d.iter()
        .map(|row| row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// Finds `c` with `Dᵀc ≥ 0` and `1ᵀDᵀc = 1`, preferring small `Σ|c_i|`.
fn certificate(qs: &QuoteSet, d: &[Vec<f64>]) -> Result<Option<NaVerdict>> {
    let m = d.len();
    let n = qs.grid.len();
    // variables: c⁺ (m), c⁻ (m), w (n)
    let width = 2 * m + n;
    let mut a = Vec::with_capacity(n + 1);
    for j in 0..n {
        let mut r = vec![0.0; width];
        for i in 0..m {
            r[i] = d[i][j];
            r[m + i] = -d[i][j];
        }
        r[2 * m + j] = -1.0;
        a.push(r);
    }
    let mut total = vec![0.0; width];
    for v in &mut total[2 * m..] {
        *v = 1.0;
    }
    a.push(total);
    let mut b = vec![0.0; n];
    b.push(1.0);
    let mut cost = vec![-1.0; 2 * m];
    cost.extend(vec![0.0; n]);

    let LpOutcome::Optimal { x, .. } = maximize(&a, &b, &cost)? else {
        return Ok(None);
    };
    let mut coefficients: Vec<f64> = (0..m).map(|i| x[i] - x[m + i]).collect();
    let scale = coefficients.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Ok(None);
    }
    for c in &mut coefficients {
        *c /= scale;
    }
    let mut portfolio = vec![0.0; n];
    for (c, row) in coefficients.iter().zip(d) {
        for (p, v) in portfolio.iter_mut().zip(row) {
            *p += c * v;
        }
    }
    let magnitude = portfolio.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let snap = 1e-9 * magnitude.max(1.0);
    if portfolio.iter().any(|v| *v < -snap) || magnitude <= snap {
        return Ok(None);
    }
    for v in &mut portfolio {
        if v.abs() <= snap {
            *v = 0.0;
        }
    }
    Ok(Some(NaVerdict::Arbitrage {
        coefficients,
        portfolio: qs.to_cash_flow(&portfolio),
    }))
}

/// Basis of the null space of `d` (rows of length `n`) by Gauss-Jordan elimination.
pub fn null_space(d: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = d.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let eps = 1e-10 * scale.max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        if row == m.len() {
            break;
        }
        let (best, val) = (row..m.len())
            .map(|i| (i, m[i][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("rows remain");
        if val <= eps {
            continue;
        }
        m.swap(row, best);
        let p = m[row][col];
        for v in m[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = m[row].clone();
        for (i, r) in m.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let f = r[col];
                for (v, q) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * q;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; n];
            v[f] = 1.0;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][f];
            }
            v
        })
        .collect()
}

/// The unique implied discount curve, as a spot grid through `(t, p_t)`.
pub fn implied_curve(qs: &QuoteSet) -> Result<DiscountCurve> {
    let implied = unique_prices(qs)?;
    let knots: Vec<(f64, f64)> = qs.grid.iter().copied().zip(implied).collect();
    DiscountCurve::spot_grid(&knots)
}

fn unique_prices(qs: &QuoteSet) -> Result<Vec<f64>> {
    if !check(qs)?.is_arbitrage_free() {
        return Err(Error::ArbitragePresent);
    }
    let n = qs.grid.len();
    let basis = null_space(&qs.difference_matrix(), n);
    if basis.len() != 1 {
        return Err(Error::NotUnique {
            free_directions: basis,
        });
    }
    let v = &basis[0];
    let p: Vec<f64> = v.iter().map(|x| x / v[0]).collect();
    if p.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Simplex(
            "null vector is not strictly positive".into(),
        ));
    }
    Ok(p)
}

/// Checks that the implied prices are consistent with sign inversion,
/// addition and scaling of quotes, and that the null flow has price 0.
pub fn closure_probe(qs: &QuoteSet, trials: usize, seed: u64) -> Result<TrialReport> {
    let p = unique_prices(qs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TrialReport::default();
    let value = |cf: &CashFlow| -> f64 {
        let v = qs.coordinates(cf).expect("combinations stay on the grid");
        v.iter().zip(&p).map(|(a, b)| a * b).sum()
    };
    let agree = |x: f64, y: f64, size: f64| (x - y).abs() <= FEASIBILITY_TOL * (1.0 + size);

    report.record(value(&CashFlow::null()) == 0.0, || {
        "null flow has nonzero price".into()
    });
    if qs.quotes.is_empty() {
        return Ok(report);
    }
    for k in 0..trials {
        let i = rng.gen_range(0..qs.quotes.len());
        let j = rng.gen_range(0..qs.quotes.len());
        let r: f64 = rng.gen_range(-10.0..10.0);
        let (qi, qj) = (&qs.quotes[i], &qs.quotes[j]);
        let size = qi.left.total_variation() + qi.right.total_variation();

        let (a, b) = (value(&-&qi.left), value(&-&qi.right));
        report.record(agree(a, b, size), || {
            format!("trial {k}: negated quote {i} prices {a} vs {b}")
        });

        let (a, b) = (
            value(&(&qi.left + &qj.left)),
            value(&(&qi.right + &qj.right)),
        );
        let size2 = size + qj.left.total_variation() + qj.right.total_variation();
        report.record(agree(a, b, size2), || {
            format!("trial {k}: sum of quotes {i}, {j} prices {a} vs {b}")
        });

        let (a, b) = (value(&(&qi.left * r)), value(&(&qi.right * r)));
        report.record(agree(a, b, size * r.abs()), || {
            format!("trial {k}: quote {i} scaled by {r} prices {a} vs {b}")
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pay(t: f64, a: f64) -> CashFlow {
        CashFlow::payment(t, a).unwrap()
    }

    fn arbitrage_sound(qs: &QuoteSet, v: &NaVerdict) {
        let NaVerdict::Arbitrage {
            coefficients,
            portfolio,
        } = v
        else {
            panic!("expected arbitrage, got {v:?}");
        };
        let d = qs.difference_matrix();
        let mut sum = vec![0.0; qs.grid().len()];
        for (c, row) in coefficients.iter().zip(&d) {
            for (s, x) in sum.iter_mut().zip(row) {
                *s += c * x;
            }
        }
        assert!(sum.iter().all(|x| *x >= -1e-12));
        assert!(sum.iter().any(|x| *x > 1e-9));
        assert!(portfolio.is_nonnegative() && !portfolio.is_null());
    }

    #[test]
    fn single_quote_is_arbitrage_free() {
        let qs = QuoteSet::new(
            vec![0.0, 1.0],
            vec![Quote::new(pay(1.0, 1.05), pay(0.0, 1.0))],
        )
        .unwrap();
        let NaVerdict::ArbitrageFree { implied } = check(&qs).unwrap() else {
            panic!()
        };
        assert_eq!(implied[0], 1.0);
        assert!((implied[1] - 1.0 / 1.05).abs() < 1e-12);
    }

    #[test]
    fn law_of_one_price_violation() {
        let qs = QuoteSet::new(
            vec![0.0, 1.0],
            vec![
                Quote::new(pay(1.0, 1.0), pay(0.0, 0.95)),
                Quote::new(pay(1.0, 1.0), pay(0.0, 0.96)),
            ],
        )
        .unwrap();
        let v = check(&qs).unwrap();
        arbitrage_sound(&qs, &v);
        let NaVerdict::Arbitrage { coefficients, .. } = &v else {
            unreachable!()
        };
        // opposite signs: sell one quote, buy the other
        assert!(coefficients[0] * coefficients[1] < 0.0);
        assert!(matches!(implied_curve(&qs), Err(Error::ArbitragePresent)));
    }

    #[test]
    fn empty_and_free_lunch() {
        let empty = QuoteSet::new(vec![0.0, 1.0, 2.0], vec![]).unwrap();
        assert_eq!(
            check(&empty).unwrap(),
            NaVerdict::ArbitrageFree {
                implied: vec![1.0; 3]
            }
        );
        // nothing exchanged for a payment
        let qs = QuoteSet::new(
            vec![0.0, 1.0],
            vec![Quote::new(CashFlow::null(), pay(1.0, 1.0))],
        )
        .unwrap();
        arbitrage_sound(&qs, &check(&qs).unwrap());
    }

    #[test]
    fn implied_curve_from_two_quotes() {
        let qs = QuoteSet::new(
            vec![0.0, 1.0, 2.0],
            vec![
                Quote::new(pay(1.0, 1.0), pay(0.0, 0.95)),
                Quote::new(pay(2.0, 1.0), pay(0.0, 0.90)),
            ],
        )
        .unwrap();
        let c = implied_curve(&qs).unwrap();
        assert!((c.discount(1.0).unwrap() - 0.95).abs() < 1e-12);
        assert!((c.discount(2.0).unwrap() - 0.90).abs() < 1e-12);
        let r = closure_probe(&qs, 100, 3).unwrap();
        assert!(r.all_passed(), "{:?}", r.failures);
    }

    #[test]
    fn under_determined() {
        let qs = QuoteSet::new(
            vec![0.0, 1.0, 2.0],
            vec![Quote::new(pay(1.0, 1.0), pay(0.0, 0.95))],
        )
        .unwrap();
        let Err(Error::NotUnique { free_directions }) = implied_curve(&qs) else {
            panic!()
        };
        assert_eq!(free_directions.len(), 2);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(QuoteSet::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(QuoteSet::new(vec![0.0, 0.0], vec![]).is_err());
        let off = Quote::new(pay(1.5, 1.0), pay(0.0, 1.0));
        assert!(QuoteSet::new(vec![0.0, 1.0], vec![off]).is_err());
        let dens = Quote::new(CashFlow::uniform(0.0, 1.0, 1.0).unwrap(), pay(0.0, 1.0));
        assert!(QuoteSet::new(vec![0.0, 1.0], vec![dens]).is_err());
    }

    #[test]
    fn file_format() {
        let json = r#"{"grid": [0, 1],
            "quotes": [{"left": {"atoms": [{"t": 1, "amount": 1.05}]},
                        "right": {"atoms": [{"t": 0, "amount": 1}]}}]}"#;
        let qs: QuoteSet = serde_json::from_str(json).unwrap();
        assert!(check(&qs).unwrap().is_arbitrage_free());
        let out = serde_json::to_value(check(&qs).unwrap()).unwrap();
        assert_eq!(out["verdict"], "ARBITRAGE_FREE");
    }
}
