//! Command-line front end.
//!
//! Exit status: 0 on success (including a detected arbitrage), 1 when the
//! computation itself fails, 2 when the input cannot be read or parsed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::arbitrage::{check, implied_curve, NaVerdict, QuoteSet};
use crate::counterexample::{
    choquet_gap, dual_price, verify_na_positivity, DualFunctional, DualSpec, DOUBLE_DENSITY,
};
use crate::curve::DiscountCurve;
use crate::error::Error;
use crate::fx::{convert_measure, price_dual, Currency, DualCashFlow, DualCurrencyMarket};
use crate::measure::CashFlow;
use crate::pricer::{default_tolerance, forward_price, irr, price, PriceResult};

#[derive(Debug, Parser)]
#[command(
    name = "cashval",
    version,
    about = "No-arbitrage valuation of cash flows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurrencyArg {
    Domestic,
    Foreign,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Absolute error tolerance; defaults to 1e-10 · (1 + total variation).
    #[arg(long)]
    tol: Option<f64>,
    /// Decimals printed for numbers.
    #[arg(long, default_value_t = 6)]
    precision: usize,
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Present value with its error bracket.
    Price {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        cashflow: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Time-t forward price.
    ForwardPrice {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        cashflow: PathBuf,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Yield earned when buying the cash flow at time t for a given price.
    ///
    /// The price is --price, or else the forward price under --curve.
    Irr {
        #[arg(long)]
        cashflow: PathBuf,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        price: Option<f64>,
        /// Purchase time.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Hahn-Jordan and Lebesgue decompositions.
    Decompose {
        #[arg(long)]
        cashflow: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Price of a two-currency cash flow.
    FxPrice {
        #[arg(long)]
        market: PathBuf,
        /// A file of the form {"domestic": <cash flow>, "foreign": <cash flow>}.
        #[arg(long)]
        cashflow: PathBuf,
        #[arg(long, value_enum, default_value_t = CurrencyArg::Domestic)]
        currency: CurrencyArg,
        #[command(flatten)]
        output: Output,
    },
    /// Converts a foreign cash flow into domestic units at forward FX rates.
    FxConvert {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        cashflow: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Decides whether a quote set admits an arbitrage.
    ArbitrageCheck {
        #[arg(long)]
        quotes: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Tabulates P_t, the spot rate and the forward rate from 0.
    CurveEval {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Compares a split-measure price functional with the curve price.
    ///
    /// Uses --dual, or the double-density preset built on --curve.
    Counterexample {
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long)]
        cashflow: PathBuf,
        /// Random positivity and linearity trials to run.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    fn status(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Domain(_) | CliError::Write(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.status()
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: cannot read {what}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid {what}: {e}", path.display())))
}

fn check_tol(tol: Option<f64>) -> CliResult<Option<f64>> {
    match tol {
        Some(t) if !(t > 0.0) || !t.is_finite() => Err(CliError::Input(format!(
            "--tol must be positive and finite, got {t}"
        ))),
        other => Ok(other),
    }
}

struct Printer {
    precision: usize,
}

impl Printer {
    fn num(&self, x: f64) -> String {
        let s = format!("{x:.p$}", p = self.precision);
        // avoid printing "-0.000000"
        if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
            s[1..].to_string()
        } else {
            s
        }
    }

    fn bracket(&self, p: &PriceResult) -> String {
        format!(
            "{} [{}, {}]",
            self.num(p.value),
            self.num(p.lower),
            self.num(p.upper)
        )
    }
}

fn emit(output: &Output, text: String, structured: Value, stdout: &mut dyn Write) -> CliResult<()> {
    let body = match output.format {
        Format::Text => text,
        Format::Structured => {
            serde_json::to_string_pretty(&structured).expect("values serialize") + "\n"
        }
    };
    match &output.out {
        Some(path) => fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn execute(command: &Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Price {
            curve,
            cashflow,
            output,
        } => {
            let tol = check_tol(output.tol)?;
            let c: DiscountCurve = load(curve, "curve")?;
            let g: CashFlow = load(cashflow, "cash flow")?;
            let r = price(&c, &g, tol.unwrap_or_else(|| default_tolerance(&g)))?;
            let pr = Printer {
                precision: output.precision,
            };
            emit(output, pr.bracket(&r) + "\n", to_value(&r), stdout)
        }
        Command::ForwardPrice {
            curve,
            cashflow,
            t,
            output,
        } => {
            let tol = check_tol(output.tol)?;
            let c: DiscountCurve = load(curve, "curve")?;
            let g: CashFlow = load(cashflow, "cash flow")?;
            let r = forward_price(&c, &g, *t, tol.unwrap_or_else(|| default_tolerance(&g)))?;
            let pr = Printer {
                precision: output.precision,
            };
            emit(output, pr.bracket(&r) + "\n", to_value(&r), stdout)
        }
        Command::Irr {
            cashflow,
            curve,
            price: target,
            t,
            output,
        } => {
            let tol = check_tol(output.tol)?;
            let g: CashFlow = load(cashflow, "cash flow")?;
            let tol = tol.unwrap_or_else(|| default_tolerance(&g));
            let target = match (target, curve) {
                (Some(p), _) => *p,
                (None, Some(path)) => {
                    let c: DiscountCurve = load(path, "curve")?;
                    forward_price(&c, &g, *t, 0.01 * tol)?.value
                }
                (None, None) => {
                    return Err(CliError::Input(
                        "irr needs --price or --curve to fix the purchase price".into(),
                    ))
                }
            };
            let y = irr(&g, *t, target, tol)?;
            let pr = Printer {
                precision: output.precision,
            };
            let text = format!(
                "{}\nresidual {:e}\niterations {}\n",
                pr.num(y.rate),
                y.residual,
                y.iterations
            );
            emit(output, text, to_value(&y), stdout)
        }
        Command::Decompose { cashflow, output } => {
            let g: CashFlow = load(cashflow, "cash flow")?;
            let j = g.jordan();
            let l = g.lebesgue();
            let parts = [
                ("positive", &j.positive),
                ("negative", &j.negative),
                ("absolutely_continuous", &l.ac),
                ("singular", &l.singular),
            ];
            let pr = Printer {
                precision: output.precision,
            };
            let mut text = String::new();
            for (name, cf) in parts {
                text += &format!(
                    "{name} mass {} {}\n",
                    pr.num(cf.total_mass()),
                    serde_json::to_string(cf).expect("values serialize")
                );
            }
            let structured = json!({
                "positive": j.positive,
                "negative": j.negative,
                "absolutely_continuous": l.ac,
                "singular": l.singular,
            });
            emit(output, text, structured, stdout)
        }
        Command::FxPrice {
            market,
            cashflow,
            currency,
            output,
        } => {
            let tol = check_tol(output.tol)?;
            let m: DualCurrencyMarket = load(market, "market")?;
            let d: DualCashFlow = load(cashflow, "dual cash flow")?;
            let currency = match currency {
                CurrencyArg::Domestic => Currency::Domestic,
                CurrencyArg::Foreign => Currency::Foreign,
            };
            let tol = tol.unwrap_or_else(|| 1e-10 * (1.0 + d.total_variation()));
            let r = price_dual(&m, &d, currency, tol)?;
            let pr = Printer {
                precision: output.precision,
            };
            emit(output, pr.bracket(&r) + "\n", to_value(&r), stdout)
        }
        Command::FxConvert {
            market,
            cashflow,
            output,
        } => {
            let m: DualCurrencyMarket = load(market, "market")?;
            let g: CashFlow = load(cashflow, "cash flow")?;
            let c = convert_measure(&m, &g)?;
            let text = format!(
                "{}\nfit_error_bound {:e}\n",
                serde_json::to_string(&c.cash_flow).expect("values serialize"),
                c.fit_error_bound
            );
            emit(output, text, to_value(&c.cash_flow), stdout)
        }
        Command::ArbitrageCheck { quotes, output } => {
            let qs: QuoteSet = load(quotes, "quote set")?;
            let verdict = check(&qs)?;
            let pr = Printer {
                precision: output.precision,
            };
            let mut text = String::new();
            match &verdict {
                NaVerdict::ArbitrageFree { implied } => {
                    text += "ARBITRAGE_FREE\n";
                    let unique = match implied_curve(&qs) {
                        Ok(_) => "unique",
                        Err(Error::NotUnique { .. }) => "not unique",
                        Err(e) => return Err(e.into()),
                    };
                    text += &format!("implied prices ({unique})\nt,price\n");
                    for (t, p) in qs.grid().iter().zip(implied) {
                        text += &format!("{t},{}\n", pr.num(*p));
                    }
                }
                NaVerdict::Arbitrage {
                    coefficients,
                    portfolio,
                } => {
                    text += "ARBITRAGE\ncoefficients ";
                    let cs: Vec<String> = coefficients.iter().map(|c| pr.num(*c)).collect();
                    text += &cs.join(", ");
                    text += "\nportfolio\nt,amount\n";
                    for a in portfolio.atoms() {
                        text += &format!("{},{}\n", a.t, pr.num(a.amount));
                    }
                }
            }
            emit(output, text, to_value(&verdict), stdout)
        }
        Command::CurveEval {
            curve,
            from,
            to,
            step,
            output,
        } => {
            let c: DiscountCurve = load(curve, "curve")?;
            if !(*step > 0.0) || !step.is_finite() || !(from <= to) || *from < 0.0 {
                return Err(CliError::Input(format!(
                    "need 0 <= --from <= --to and --step > 0, got from {from}, to {to}, step {step}"
                )));
            }
            let n = ((to - from) / step + 1e-9).floor() as usize;
            let pr = Printer {
                precision: output.precision,
            };
            let mut text = String::from("t,P_t,y_t,f_0t\n");
            let mut rows = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let t = from + k as f64 * step;
                let p = c.discount(t)?;
                let (y, f) = if t == 0.0 {
                    (None, None)
                } else {
                    (Some(c.spot_rate(t)?), Some(c.forward_rate(0.0, t)?))
                };
                let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| pr.num(x));
                text += &format!("{t},{},{},{}\n", pr.num(p), cell(y), cell(f));
                rows.push(json!({"t": t, "discount": p, "spot_rate": y, "forward_rate": f}));
            }
            emit(output, text, Value::Array(rows), stdout)
        }
        Command::Counterexample {
            dual,
            curve,
            cashflow,
            trials,
            seed,
            output,
        } => {
            let tol = check_tol(output.tol)?;
            let df = match (dual, curve) {
                (Some(path), _) => {
                    let spec: DualSpec = load(path, "dual functional")?;
                    DualFunctional::try_from(spec)
                        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
                }
                (None, Some(path)) => DualFunctional::preset(DOUBLE_DENSITY, load(path, "curve")?)?,
                (None, None) => {
                    return Err(CliError::Input(
                        "counterexample needs --dual or --curve".into(),
                    ))
                }
            };
            let g: CashFlow = load(cashflow, "cash flow")?;
            let tol = tol.unwrap_or_else(|| default_tolerance(&g));
            let dual = dual_price(&df, &g, tol)?;
            let curve_price = price(df.f_curve(), &g, tol)?;
            let gap = choquet_gap(&df, &g, tol)?;
            let pr = Printer {
                precision: output.precision,
            };
            let mut text = format!(
                "dual {}\ncurve {}\ngap {}\n",
                pr.bracket(&dual),
                pr.bracket(&curve_price),
                pr.num(gap)
            );
            let mut structured = json!({
                "dual_price": dual,
                "curve_price": curve_price,
                "gap": gap,
            });
            if *trials > 0 {
                let report = verify_na_positivity(&df, *trials, *seed);
                text += &format!(
                    "positivity checks passed {} failed {}\n",
                    report.passed, report.failed
                );
                for f in &report.failures {
                    text += &format!("  {f}\n");
                }
                structured["positivity"] = to_value(&report);
            }
            emit(output, text, structured, stdout)
        }
    }
}
