//! Mutation-rate sequences `(p_i)`, iterated logarithms, certified sums and
//! tail bounds.
//!
//! The workhorse family is [`SequenceKind::LogPower`]:
//!
//! ```text
//! p_i = 1 / ( i * (log^(s) i)^(1+eps) * prod_{j<s} log^(j) i )
//! ```
//!
//! with base-2 iterated logarithms floored at 1, so every index `i >= 1` has
//! a well-defined term. It is summable for every `s >= 1` and `eps > 0`,
//! which is what lets the `(1+1) EA_p` keep a constant probability of
//! flipping exactly one bit no matter how long the string is.
//!
//! ```
//! use ea_lab::sequences::{SequenceFamily, SequenceKind};
//!
//! let seq = SequenceFamily::new(SequenceKind::LogPower { s: 1, eps: 1.0 }).unwrap();
//! assert_eq!(seq.term(4).unwrap(), 1.0 / 16.0);
//!
//! // Scale so the whole series stays below 1/2.
//! let c = seq.normalized_scale(0.5).unwrap();
//! let scaled = seq.scaled(c).unwrap();
//! assert!(scaled.partial_sum(1_000_000) < 0.5);
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;

/// `log^(j) r`: the `j`-fold base-2 logarithm, where each step that would
/// start from a value below 2 yields 1 instead.
pub fn iterated_log(j: u32, r: f64) -> f64 {
    assert!(j >= 1, "iterated_log needs j >= 1");
    let mut v = r;
    for _ in 0..j {
        v = if v >= 2.0 { v.log2() } else { 1.0 };
    }
    v
}

/// Smallest integer `k` from which `log^(s)` is a genuine base-2 logarithm
/// on `[k, inf)` (2, 4, 16, 65536, ...). `None` when it exceeds `u64`.
fn genuine_log_threshold(s: u32) -> Option<u64> {
    let mut t: u64 = 2;
    for _ in 1..s {
        if t >= 64 {
            return None;
        }
        t = 1u64 << t;
    }
    Some(t)
}

/// Term `i` of the non-summable limit `1 / (i * prod_{j>=1} log^(j) i)`.
///
/// Provided for illustration only; it cannot be used as a mutation scheme.
pub fn limit_sequence_term(i: u64) -> f64 {
    assert!(i >= 1);
    let mut d = i as f64;
    let mut v = i as f64;
    while v >= 2.0 {
        v = v.log2();
        d *= v;
    }
    1.0 / d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    /// `1/i`
    Harmonic,
    /// `1/(i+1)`
    ShiftedHarmonic,
    /// `1/i^(1+eps)`
    PowerLaw { eps: f64 },
    /// The iterated-logarithm family, see the module docs.
    LogPower { s: u32, eps: f64 },
    /// `r^i`
    Geometric { r: f64 },
    /// Explicit finite list of terms. Only treated as summable when a
    /// finite total is declared; terms past the list are zero.
    Custom {
        terms: Vec<f64>,
        #[serde(default)]
        declared_sum: Option<f64>,
    },
}

/// A sequence family together with a positive scale factor applied to every
/// term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFamily {
    #[serde(flatten)]
    pub kind: SequenceKind,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Upper bound on a series: `partial + tail` with the cut-off index used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumBound {
    pub cutoff: u64,
    pub partial: f64,
    pub tail: f64,
}

impl SumBound {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail
    }
}

const MAX_CUTOFF: u64 = 1 << 24;

impl SequenceFamily {
    pub fn new(kind: SequenceKind) -> Result<Self> {
        let s = Self { kind, scale: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn log_power(s: u32, eps: f64) -> Result<Self> {
        Self::new(SequenceKind::LogPower { s, eps })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(invalid("scale", format!("must be positive, got {}", self.scale)));
        }
        match &self.kind {
            SequenceKind::PowerLaw { eps } | SequenceKind::LogPower { eps, .. }
                if !(eps.is_finite() && *eps > 0.0) =>
            {
                Err(invalid("eps", format!("must be positive, got {eps}")))
            }
            SequenceKind::LogPower { s: 0, .. } => Err(invalid("s", "must be at least 1")),
            SequenceKind::Geometric { r } if !(*r > 0.0 && *r < 1.0) => {
                Err(invalid("r", format!("must lie in (0, 1), got {r}")))
            }
            SequenceKind::Custom { terms, declared_sum } => {
                if terms.is_empty() {
                    return Err(invalid("terms", "custom sequence needs at least one term"));
                }
                if let Some(i) = terms.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
                    return Err(invalid("terms", format!("term {} is not positive", i + 1)));
                }
                if let Some(d) = declared_sum {
                    if !d.is_finite() || *d <= 0.0 {
                        return Err(invalid("declared_sum", "must be finite and positive"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Same family with the scale multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let s = Self {
            kind: self.kind.clone(),
            scale: self.scale * c,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn summable(&self) -> bool {
        match &self.kind {
            SequenceKind::Harmonic | SequenceKind::ShiftedHarmonic => false,
            SequenceKind::PowerLaw { .. }
            | SequenceKind::LogPower { .. }
            | SequenceKind::Geometric { .. } => true,
            SequenceKind::Custom { declared_sum, .. } => declared_sum.is_some(),
        }
    }

    /// Whether terms never increase (a hypothesis of the runtime bounds).
    pub fn is_non_increasing(&self) -> bool {
        match &self.kind {
            SequenceKind::Custom { terms, .. } => terms.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    /// Unscaled term, 0 past the end of a custom list.
    fn raw(&self, i: u64) -> f64 {
        let x = i as f64;
        match &self.kind {
            SequenceKind::Harmonic => 1.0 / x,
            SequenceKind::ShiftedHarmonic => 1.0 / (x + 1.0),
            SequenceKind::PowerLaw { eps } => x.powf(-1.0 - eps),
            SequenceKind::LogPower { s, eps } => {
                let mut d = x * iterated_log(*s, x).powf(1.0 + eps);
                let mut v = x;
                for _ in 1..*s {
                    v = if v >= 2.0 { v.log2() } else { 1.0 };
                    d *= v;
                }
                1.0 / d
            }
            SequenceKind::Geometric { r } => r.powf(x),
            SequenceKind::Custom { terms, .. } => {
                terms.get((i - 1) as usize).copied().unwrap_or(0.0)
            }
        }
    }

    /// Scaled term without the probability check; 0 past a custom list.
    pub(crate) fn weight(&self, i: u64) -> f64 {
        self.scale * self.raw(i)
    }

    /// Term `p_i` (1-based), which must be a valid probability in (0, 1].
    pub fn term(&self, i: u64) -> Result<f64> {
        if i == 0 {
            return Err(invalid("i", "sequence indices start at 1"));
        }
        if let SequenceKind::Custom { terms, .. } = &self.kind {
            if i as usize > terms.len() {
                return Err(invalid(
                    "i",
                    format!("custom sequence has only {} terms", terms.len()),
                ));
            }
        }
        let t = self.scale * self.raw(i);
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidProbability {
                index: i as usize,
                value: t,
            });
        }
        Ok(t)
    }

    /// The first `n` terms as a rate vector.
    pub fn rates(&self, n: usize) -> Result<Vec<f64>> {
        (1..=n as u64).map(|i| self.term(i)).collect()
    }

    /// `sum_{i=1}^k p_i`, compensated.
    pub fn partial_sum(&self, k: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for i in 1..=k {
            acc.add(self.raw(i));
        }
        self.scale * acc.value()
    }

    /// Certified upper bound on `sum_{i>k} p_i`.
    ///
    /// Uses integral comparison for the power-law and iterated-log families
    /// and the closed form for geometric sequences.
    pub fn tail_bound(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        let kf = k as f64;
        let raw = match &self.kind {
            SequenceKind::Harmonic | SequenceKind::ShiftedHarmonic => {
                return Err(Error::NotSummable(format!("{:?}", self.kind)));
            }
            SequenceKind::Custom { declared_sum: None, .. } => {
                return Err(Error::NotSummable("custom sequence without declared sum".into()));
            }
            SequenceKind::Custom {
                terms,
                declared_sum: Some(total),
            } => {
                let head: f64 = terms.iter().take(k as usize).sum();
                (total - head).max(0.0)
            }
            SequenceKind::Geometric { r } => r.powf(kf + 1.0) / (1.0 - r),
            SequenceKind::PowerLaw { eps } => 1.0 / (eps * kf.powf(*eps)),
            SequenceKind::LogPower { s, eps } => {
                let min_k = genuine_log_threshold(*s)
                    .ok_or_else(|| Error::Regime(format!("tail bound unsupported for s = {s}")))?
                    .max(4);
                if k < min_k {
                    return Err(Error::Regime(format!(
                        "tail bound for s = {s} needs k >= {min_k}, got {k}"
                    )));
                }
                std::f64::consts::LN_2.powi(*s as i32) / (eps * iterated_log(*s, kf).powf(*eps))
            }
        };
        Ok(self.scale * raw)
    }

    /// Partial sum plus tail bound at a cut-off where the bound's slack (at
    /// most one term) is below `1e-6` of the total, or at `2^24`.
    pub fn certified_sum(&self) -> Result<SumBound> {
        if !self.summable() {
            return Err(Error::NotSummable(format!("{:?}", self.kind)));
        }
        if let SequenceKind::Custom { terms, .. } = &self.kind {
            let k = terms.len() as u64;
            return Ok(SumBound {
                cutoff: k,
                partial: self.partial_sum(k),
                tail: self.tail_bound(k)?,
            });
        }
        let mut acc = CompensatedSum::new();
        let mut k: u64 = 0;
        let mut next: u64 = 1024;
        loop {
            for i in (k + 1)..=next {
                acc.add(self.raw(i));
            }
            k = next;
            let slack = self.raw(k);
            if slack <= 1e-6 * acc.value() || k >= MAX_CUTOFF {
                break;
            }
            next = k * 2;
        }
        Ok(SumBound {
            cutoff: k,
            partial: self.scale * acc.value(),
            tail: self.tail_bound(k)?,
        })
    }

    /// Factor `c` such that the sequence scaled by `c` has total below
    /// `target_sum`, computed against the certified upper bound.
    pub fn normalized_scale(&self, target_sum: f64) -> Result<f64> {
        if !(target_sum > 0.0 && target_sum < 1.0) {
            return Err(invalid(
                "target_sum",
                format!("must lie in (0, 1), got {target_sum}"),
            ));
        }
        let bound = self.certified_sum()?;
        Ok(target_sum / bound.upper())
    }

    /// Convenience: this family rescaled to a certified total below `target_sum`.
    pub fn normalized(&self, target_sum: f64) -> Result<Self> {
        self.scaled(self.normalized_scale(target_sum)?)
    }
}
