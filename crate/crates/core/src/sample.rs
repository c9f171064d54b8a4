//! Seeded random cash flows for property trials.

use rand::Rng;
use serde::Serialize;

use crate::measure::{Atom, CashFlow, DensityPiece};
use crate::poly;

/// Which parts a sampled cash flow carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mix {
    Atoms,
    Density,
    Mixed,
}

impl Mix {
    pub const ALL: [Mix; 3] = [Mix::Atoms, Mix::Density, Mix::Mixed];
}

fn atoms<R: Rng>(rng: &mut R, span: f64, signed: bool) -> Vec<Atom> {
    let n = rng.gen_range(1..=4);
    (0..n)
        .map(|_| {
            let amount = if signed {
                rng.gen_range(-3.0..3.0)
            } else {
                rng.gen_range(0.05..3.0)
            };
            // a quarter-year grid so atoms sometimes coincide
            let t = if rng.gen_bool(0.5) {
                (rng.gen_range(0.0..span) * 4.0).floor() / 4.0
            } else {
                rng.gen_range(0.0..span)
            };
            Atom { t, amount }
        })
        .collect()
}

fn pieces<R: Rng>(rng: &mut R, span: f64, signed: bool) -> Vec<DensityPiece> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            let from = rng.gen_range(0.0..span * 0.9);
            let to = (from + rng.gen_range(0.1..6.0)).min(span);
            let degree = rng.gen_range(0..=3);
            // Coefficients in powers of (t - from); nonnegative ones keep the piece nonnegative.
            let local: Vec<f64> = (0..=degree)
                .map(|k| {
                    let c = if signed {
                        rng.gen_range(-2.0..2.0)
                    } else if k == 0 {
                        rng.gen_range(0.05..2.0)
                    } else {
                        rng.gen_range(0.0..1.0)
                    };
                    c / (1.0 + to - from).powi(k)
                })
                .collect();
            DensityPiece {
                from,
                to,
                coeffs: poly::shift(&local, -from),
            }
        })
        .collect()
}

fn build<R: Rng>(rng: &mut R, span: f64, mix: Mix, signed: bool) -> CashFlow {
    let a = if mix == Mix::Density {
        Vec::new()
    } else {
        atoms(rng, span, signed)
    };
    let d = if mix == Mix::Atoms {
        Vec::new()
    } else {
        pieces(rng, span, signed)
    };
    CashFlow::new(a, d).expect("sampled data is valid")
}

/// A nonnegative, non-null cash flow supported in `[0, span]`.
pub fn nonnegative<R: Rng>(rng: &mut R, span: f64, mix: Mix) -> CashFlow {
    build(rng, span, mix, false)
}

/// A signed cash flow supported in `[0, span]`; may cancel to the null measure.
pub fn signed<R: Rng>(rng: &mut R, span: f64, mix: Mix) -> CashFlow {
    build(rng, span, mix, true)
}

/// Pass/fail tally of a randomized check.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrialReport {
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

impl TrialReport {
    pub fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.failures.len() < 20 {
                self.failures.push(what());
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0 && self.passed > 0
    }
}
