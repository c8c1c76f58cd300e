//! Solution-length distributions and the rate distribution `Q` of the
//! `(1+1) EA_Q`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;
use crate::rng::RngStream;
use crate::sequences::SequenceFamily;

/// Where the solution length `n` comes from.
///
/// `TruncGeo { n_max, q }` is the geometric law with success probability
/// `q` whose mass above `n_max` is moved onto `n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthDistribution {
    Fixed { n: usize },
    Geo { q: f64 },
    TruncGeo { n_max: usize, q: f64 },
}

impl LengthDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthDistribution::Fixed { n: 0 } => Err(invalid("n", "must be at least 1")),
            LengthDistribution::TruncGeo { n_max: 0, .. } => {
                Err(invalid("n_max", "must be at least 1"))
            }
            LengthDistribution::Geo { q } | LengthDistribution::TruncGeo { q, .. }
                if !(q > 0.0 && q < 1.0) =>
            {
                Err(invalid("q", format!("must lie in (0, 1), got {q}")))
            }
            _ => Ok(()),
        }
    }

    /// Departures from `1/N <= q <= 1/2`, the regime the runtime results
    /// are stated for. Not errors.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        match *self {
            LengthDistribution::TruncGeo { n_max, q } => {
                if q < 1.0 / n_max as f64 {
                    out.push(format!("q = {q} is below 1/N = {}", 1.0 / n_max as f64));
                }
                if q > 0.5 {
                    out.push(format!("q = {q} is above 1/2"));
                }
            }
            LengthDistribution::Geo { q } if q > 0.5 => {
                out.push(format!("q = {q} is above 1/2"));
            }
            _ => {}
        }
        out
    }

    /// Largest value with positive probability, if finite.
    pub fn support_max(&self) -> Option<usize> {
        match *self {
            LengthDistribution::Fixed { n } => Some(n),
            LengthDistribution::Geo { .. } => None,
            LengthDistribution::TruncGeo { n_max, .. } => Some(n_max),
        }
    }

    pub fn pmf(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match *self {
            LengthDistribution::Fixed { n: m } => f64::from(u8::from(n == m)),
            LengthDistribution::Geo { q } => q * (1.0 - q).powi(n as i32 - 1),
            LengthDistribution::TruncGeo { n_max, q } => {
                if n < n_max {
                    q * (1.0 - q).powi(n as i32 - 1)
                } else if n == n_max {
                    (1.0 - q).powi(n as i32 - 1)
                } else {
                    0.0
                }
            }
        }
    }

    /// Exact mean: `1/q` for `Geo`, the finite sum for `TruncGeo`.
    pub fn expectation(&self) -> f64 {
        match *self {
            LengthDistribution::Fixed { n } => n as f64,
            LengthDistribution::Geo { q } => 1.0 / q,
            LengthDistribution::TruncGeo { n_max, .. } => {
                let mut acc = CompensatedSum::new();
                for n in 1..=n_max {
                    acc.add(n as f64 * self.pmf(n));
                }
                acc.value()
            }
        }
    }

    /// Draws a length by inverse CDF on one uniform: `ceil(ln u / ln(1-q))`,
    /// clamped to `N` for the truncated law.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        match *self {
            LengthDistribution::Fixed { n } => n,
            LengthDistribution::Geo { q } => geometric_trial(q, rng),
            LengthDistribution::TruncGeo { n_max, q } => geometric_trial(q, rng).min(n_max),
        }
    }
}

/// Index of the first success, `>= 1`.
fn geometric_trial(q: f64, rng: &mut RngStream) -> usize {
    let u = rng.open01();
    let x = (u.ln() / (-q).ln_1p()).ceil();
    if x < 1.0 {
        1
    } else if x >= usize::MAX as f64 {
        usize::MAX
    } else {
        x as usize
    }
}

pub fn pmf(dist: &LengthDistribution, n: usize) -> f64 {
    dist.pmf(n)
}

pub fn expectation(dist: &LengthDistribution) -> f64 {
    dist.expectation()
}

pub fn sample_length(dist: &LengthDistribution, rng: &mut RngStream) -> usize {
    dist.sample(rng)
}

/// Default truncation index of a [`RateDistribution`].
pub const DEFAULT_RATE_CAP: usize = 1 << 20;

const GUIDE_BITS: u32 = 12;

/// Distribution over the bit-flip rates `1/i` with `P(1/i)` proportional
/// to `p_i`.
///
/// The support is cut at `cap`; the mass of all indices beyond `cap`
/// (bounded by the sequence's certified tail) is folded onto `1/cap`.
/// Sampling is a binary search over prefix sums, narrowed first by a guide
/// table so it returns exactly what a full search would.
#[derive(Clone, Debug)]
pub struct RateDistribution {
    /// `prefix[i-1] = p_1 + ... + p_i`; the last entry includes the tail.
    prefix: Arc<[f64]>,
    guide: Arc<[u32]>,
    tail: f64,
    sequence: SequenceFamily,
}

impl PartialEq for RateDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.sequence == other.sequence && self.prefix.len() == other.prefix.len()
    }
}

impl RateDistribution {
    pub fn new(seq: &SequenceFamily, cap: usize) -> Result<Self> {
        seq.validate()?;
        if cap < 2 {
            return Err(invalid("cap", format!("must be at least 2, got {cap}")));
        }
        if cap > u32::MAX as usize {
            return Err(invalid("cap", "too large"));
        }
        if !seq.summable() {
            return Err(Error::NotSummable(format!("{:?}", seq.kind)));
        }
        let tail = seq.tail_bound(cap as u64)?;
        let mut prefix = Vec::with_capacity(cap);
        let mut acc = CompensatedSum::new();
        for i in 1..=cap as u64 {
            acc.add(seq.weight(i));
            prefix.push(acc.value());
        }
        *prefix.last_mut().expect("cap >= 2") += tail;
        if let Some(i) = prefix.windows(2).position(|w| w[1] <= w[0]) {
            return Err(invalid(
                "cap",
                format!("prefix sums stop increasing at index {}; use a smaller cap", i + 2),
            ));
        }
        let total = *prefix.last().unwrap();
        let buckets = 1usize << GUIDE_BITS;
        let guide: Vec<u32> = (0..=buckets)
            .map(|b| {
                let target = (b as f64 / buckets as f64) * total;
                prefix.partition_point(|&c| c <= target) as u32
            })
            .collect();
        Ok(Self {
            prefix: prefix.into(),
            guide: guide.into(),
            tail,
            sequence: seq.clone(),
        })
    }

    pub fn cap(&self) -> usize {
        self.prefix.len()
    }

    pub fn sequence(&self) -> &SequenceFamily {
        &self.sequence
    }

    /// Normalizing constant: partial sum to `cap` plus the tail bound.
    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    /// Share of the probability mass folded onto the last atom from beyond
    /// the cut.
    pub fn truncation_mass(&self) -> f64 {
        self.tail / self.total()
    }

    pub fn prefix_sums(&self) -> &[f64] {
        &self.prefix
    }

    /// `P(rate = 1/i)`.
    pub fn probability(&self, i: usize) -> f64 {
        if i == 0 || i > self.cap() {
            return 0.0;
        }
        let lo = if i == 1 { 0.0 } else { self.prefix[i - 2] };
        (self.prefix[i - 1] - lo) / self.total()
    }

    /// Index `i` selected by the uniform draw `u` in [0, 1).
    #[inline]
    pub fn index_for(&self, u: f64) -> usize {
        let total = self.total();
        let target = u * total;
        let buckets = (1usize << GUIDE_BITS) as f64;
        let b = ((u * buckets) as usize).min((1 << GUIDE_BITS) - 1);
        let lo = self.guide[b] as usize;
        let hi = (self.guide[b + 1] as usize + 1).min(self.cap());
        let idx = if lo < hi && (lo == 0 || self.prefix[lo - 1] <= target) {
            lo + self.prefix[lo..hi].partition_point(|&c| c <= target)
        } else {
            self.prefix.partition_point(|&c| c <= target)
        };
        (idx + 1).min(self.cap())
    }

    #[inline]
    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        self.index_for(rng.unit())
    }

    /// A rate `1/i`.
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        1.0 / self.sample_index(rng) as f64
    }
}

pub fn build_rate_distribution(seq: &SequenceFamily, cap: usize) -> Result<RateDistribution> {
    RateDistribution::new(seq, cap)
}

pub fn sample_rate(q: &RateDistribution, rng: &mut RngStream) -> f64 {
    q.sample(rng)
}
