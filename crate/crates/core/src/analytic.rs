//! Closed-form expected runtimes and bounds, used as oracles for the
//! simulations.
//!
//! All runtimes here count mutation-selection rounds, not evaluations:
//! compare them with [`RunRecord::iterations`](crate::ea::RunRecord::iterations).
//!
//! ```
//! use ea_lab::analytic::{lo_exact_uniform, lo_exact_vector};
//!
//! let t = lo_exact_uniform(10, 0.1).unwrap();
//! assert!((t.value - 84.0587).abs() < 1e-4);
//! assert!((lo_exact_vector(&[0.5, 0.25]).unwrap().value - 5.0).abs() < 1e-12);
//! ```

use serde::{Deserialize, Serialize};

use crate::distributions::LengthDistribution;
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, CompensatedSum};
use crate::sequences::SequenceFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    UpperBound,
    LowerBound,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::UpperBound => "upper_bound",
            BoundKind::LowerBound => "lower_bound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub value: f64,
    pub kind: BoundKind,
    /// Where the value holds, and anything done to it (clamping, log base).
    pub validity: String,
}

impl BoundReport {
    fn new(value: f64, kind: BoundKind, validity: impl Into<String>) -> Self {
        Self {
            value,
            kind,
            validity: validity.into(),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(crate::error::invalid("n", "must be at least 1"));
    }
    Ok(())
}

/// `ln(e^x - 1)` for `x > 0`.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Natural log of the exact LeadingOnes runtime at uniform rate `p`.
/// Finite even where the runtime itself overflows `f64`.
pub fn ln_lo_exact_uniform(n: usize, p: f64) -> Result<f64> {
    check_n(n)?;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Regime(format!(
            "exact LeadingOnes formula needs 0 < p < 1/2, got {p}"
        )));
    }
    let ln_q = (-p).ln_1p();
    Ok(ln_q + ln_expm1(-(n as f64) * ln_q) - (2.0 * p * p).ln())
}

/// Expected rounds of the `(1+1) EA` with rate `p` on LeadingOnes of
/// length `n`: `((1-p)^(1-n) - (1-p)) / (2 p^2)`.
pub fn lo_exact_uniform(n: usize, p: f64) -> Result<BoundReport> {
    let ln_t = ln_lo_exact_uniform(n, p)?;
    let ln_q = (-p).ln_1p();
    let value = if ln_t < 700.0 {
        (1.0 - p) * (-(n as f64) * ln_q).exp_m1() / (2.0 * p * p)
    } else {
        ln_t.exp()
    };
    Ok(BoundReport::new(value, BoundKind::Exact, "0 < p < 1/2"))
}

fn check_open_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(crate::error::invalid("rates", "must not be empty"));
    }
    match rates.iter().position(|&p| !(p > 0.0 && p < 1.0)) {
        Some(index) => Err(Error::InvalidProbability {
            index,
            value: rates[index],
        }),
        None => Ok(()),
    }
}

/// Expected rounds on LeadingOnes with per-position rates `p_1..p_n`:
/// `sum_i 1/(2 p_i) / prod_{j<i} (1 - p_j)`.
pub fn lo_exact_vector(rates: &[f64]) -> Result<BoundReport> {
    check_open_rates(rates)?;
    let mut sum = CompensatedSum::new();
    let mut ln_survive = 0.0f64;
    for &p in rates {
        sum.add((-ln_survive).exp() / (2.0 * p));
        ln_survive += (-p).ln_1p();
    }
    Ok(BoundReport::new(sum.value(), BoundKind::Exact, "0 < p_i < 1"))
}

/// Natural log of [`lo_exact_vector`], finite where the value overflows.
pub fn ln_lo_exact_vector(rates: &[f64]) -> Result<f64> {
    check_open_rates(rates)?;
    let mut acc = f64::NEG_INFINITY;
    let mut ln_survive = 0.0f64;
    for &p in rates {
        acc = log_add_exp(acc, -ln_survive - (2.0 * p).ln());
        ln_survive += (-p).ln_1p();
    }
    Ok(acc)
}

fn check_unit_open(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Regime(format!("needs 0 < p < 1, got {p}")));
    }
    Ok(())
}

/// `(ln n + 1) / (p (1-p)^n)`, an upper bound on the expected rounds on
/// OneMax at uniform rate `p`.
pub fn om_upper_uniform(n: usize, p: f64) -> Result<BoundReport> {
    check_n(n)?;
    check_unit_open(p)?;
    let nf = n as f64;
    let value = (nf.ln() + 1.0) / (p * (nf * (-p).ln_1p()).exp());
    Ok(BoundReport::new(value, BoundKind::UpperBound, "0 < p < 1"))
}

/// Lower bound on the expected rounds on OneMax at uniform rate `p`:
///
/// * `(ln n - ln ln n - 3) / (p (1-p)^n)` for `2^(-n/3) <= p <= 1/n`,
/// * `(ln(1/(p^2 n)) - ln ln n - 3) / (p (1-p)^n)` for
///   `1/n <= p <= 1/(sqrt(n) ln n)`.
///
/// For small `n` the numerator is negative; the bound is then reported as
/// 0, which still holds.
pub fn om_lower_uniform(n: usize, p: f64) -> Result<BoundReport> {
    if n < 2 {
        return Err(Error::Regime("lower bound needs n >= 2".into()));
    }
    check_unit_open(p)?;
    let nf = n as f64;
    let ln_n = nf.ln();
    let low = (-nf / 3.0).exp2();
    let mid = 1.0 / nf;
    let high = 1.0 / (nf.sqrt() * ln_n);
    let (numerator, range) = if p >= low && p <= mid {
        (ln_n - ln_n.ln() - 3.0, "2^(-n/3) <= p <= 1/n")
    } else if p >= mid && p <= high {
        ((1.0 / (p * p * nf)).ln() - ln_n.ln() - 3.0, "1/n <= p <= 1/(sqrt(n) ln n)")
    } else {
        return Err(Error::Regime(format!(
            "p = {p} is outside [2^(-n/3), 1/n] and [1/n, 1/(sqrt(n) ln n)] for n = {n}"
        )));
    };
    let denominator = p * (nf * (-p).ln_1p()).exp();
    if numerator <= 0.0 {
        return Ok(BoundReport::new(
            0.0,
            BoundKind::LowerBound,
            format!("{range}; numerator {numerator:.4} is negative, clamped to 0"),
        ));
    }
    Ok(BoundReport::new(numerator / denominator, BoundKind::LowerBound, range))
}

/// Pmf mass beyond which a geometric length law is cut off.
const MIXTURE_TAIL: f64 = 1e-12;

/// `sum_n pmf(n) * per_n(n)` over the support of `dist`.
///
/// For an unbounded law the sum runs until the remaining pmf mass drops
/// below `1e-12`, then over as many terms again; if that second block
/// still moves the sum by more than `1e-9` relative, `per_n` grows too
/// fast and the series is reported as divergent.
pub fn mixture_expectation<F>(dist: &LengthDistribution, mut per_n: F) -> Result<BoundReport>
where
    F: FnMut(usize) -> Result<BoundReport>,
{
    dist.validate()?;
    let mut kind = None;
    let mut validity = String::new();
    let mut term = |n: usize| -> Result<f64> {
        let w = dist.pmf(n);
        if w == 0.0 {
            return Ok(0.0);
        }
        let r = per_n(n)?;
        match kind {
            None => {
                kind = Some(r.kind);
                validity = r.validity;
            }
            Some(k) if k != r.kind => {
                return Err(crate::error::invalid("per_n", "mixes exact values and bounds"));
            }
            _ => {}
        }
        Ok(w * r.value)
    };
    let cutoff = match *dist {
        LengthDistribution::Fixed { n } => n,
        LengthDistribution::TruncGeo { n_max, .. } => n_max,
        LengthDistribution::Geo { q } => {
            (MIXTURE_TAIL.ln() / (-q).ln_1p()).ceil().max(1.0) as usize
        }
    };
    let start = match *dist {
        LengthDistribution::Fixed { n } => n,
        _ => 1,
    };
    let mut sum = CompensatedSum::new();
    for n in start..=cutoff {
        sum.add(term(n)?);
    }
    let head = sum.value();
    if let LengthDistribution::Geo { .. } = dist {
        for n in cutoff + 1..=2 * cutoff {
            sum.add(term(n)?);
        }
        let total = sum.value();
        if !total.is_finite() || (total - head).abs() > 1e-9 * total.abs() {
            return Err(Error::Divergent(format!(
                "partial sums {head:e} at n = {cutoff} and {total:e} at n = {} disagree",
                2 * cutoff
            )));
        }
    }
    let value = sum.value();
    if !value.is_finite() {
        return Err(Error::Divergent(format!("mixture overflows: {value}")));
    }
    let kind = kind.unwrap_or(BoundKind::Exact);
    Ok(BoundReport::new(value, kind, format!("mixture over {dist:?}; {validity}")))
}

/// Upper bounds on the expected rounds on OneMax (`log2 n / (p_n (1 - S))`)
/// and LeadingOnes (`n / (p_n (1 - S))`) for the rate vector given by a
/// summable sequence with certified total `S < 1`.
pub fn reform_upper_bounds(seq: &SequenceFamily, n: usize) -> Result<(BoundReport, BoundReport)> {
    check_n(n)?;
    let total = seq.certified_sum()?.upper();
    if total >= 1.0 {
        return Err(Error::Regime(format!(
            "sequence total is at most {total}, but the bounds need it below 1"
        )));
    }
    let p_n = seq.term(n as u64)?;
    let denominator = p_n * (1.0 - total);
    let nf = n as f64;
    let note = format!("sequence total <= {total:.6}");
    Ok((
        BoundReport::new(
            nf.log2() / denominator,
            BoundKind::UpperBound,
            format!("{note}; log base 2"),
        ),
        BoundReport::new(nf / denominator, BoundKind::UpperBound, note),
    ))
}

/// Ratios `T(n + step) / T(n)` of the exact LeadingOnes runtime at rate
/// `p`, for `n` in `ns`. They tend to `(1-p)^(-step)`.
pub fn exponential_growth_check(
    p: f64,
    ns: impl IntoIterator<Item = usize>,
    step: usize,
) -> Result<Vec<(usize, f64)>> {
    ns.into_iter()
        .map(|n| {
            let a = ln_lo_exact_uniform(n, p)?;
            let b = ln_lo_exact_uniform(n + step, p)?;
            Ok((n, (b - a).exp()))
        })
        .collect()
}
