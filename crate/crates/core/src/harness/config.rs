//! Experiment configuration: one JSON document per experiment.
//!
//! ```json
//! {
//!   "id": "lo-q-half",
//!   "fitness": { "family": "leading_ones" },
//!   "scheme": { "kind": "uniform_of_q", "factor": 0.5 },
//!   "length": { "distributions": [ { "kind": "trunc_geo", "n_max": 80, "q": 0.125 } ] },
//!   "trials": 1000,
//!   "budget": 10000000,
//!   "master_seed": 1
//! }
//! ```

use std::fmt;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::bitgenome::{BitGenome, Family, FitnessSpec};
use crate::distributions::{LengthDistribution, RateDistribution, DEFAULT_RATE_CAP};
use crate::ea::MutationScheme;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sequences::SequenceFamily;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub fitness: FitnessTemplate,
    pub scheme: SchemeTemplate,
    pub length: LengthPolicy,
    pub trials: u64,
    pub budget: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; `None` leaves the choice to the caller.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessTemplate {
    pub family: Family,
    #[serde(default)]
    pub mask: MaskPolicy,
    #[serde(default)]
    pub positions: PositionPolicy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    /// The optimum is the all-ones string.
    #[default]
    None,
    /// A fresh uniformly random optimum per trial.
    Random,
}

/// Where the `n` relevant bits sit in the genome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PositionPolicy {
    /// The genome is exactly the `n` relevant bits.
    #[default]
    All,
    /// Positions `1..=n` of a longer genome.
    Contiguous { genome_len: usize },
    /// `n` distinct positions drawn per trial, in random order.
    Random { genome_len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeTemplate {
    /// The same rate `p` everywhere.
    Uniform { p: f64 },
    /// Uniform rate `factor * q` where `q` is the length distribution's
    /// parameter.
    UniformOfQ { factor: f64 },
    /// Uniform rate `1/N`, `N` the largest possible length.
    InverseLength,
    /// Explicit per-position rates; the first `genome_len` are used.
    Vector { rates: Vec<f64> },
    /// Per-position rates from a sequence, optionally rescaled so the whole
    /// series sums to `target_sum`.
    Sequence {
        sequence: SequenceFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_sum: Option<f64>,
    },
    /// `(1+1) EA_Q`: rate `1/i` drawn with probability proportional to the
    /// sequence's `i`-th term.
    RandomRate {
        sequence: SequenceFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<usize>,
    },
}

/// Cells of an experiment: a list of fixed lengths or of length laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LengthPolicy {
    Sweep(Vec<usize>),
    Distributions(Vec<LengthDistribution>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A finding about a config, attached to the key it concerns (`scheme.rates[1]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}: {}: {}", self.key, self.message)
    }
}

/// Trials below this give confidence intervals that the normal
/// approximation does not support for skewed runtimes.
pub const MIN_CI_TRIALS: u64 = 1000;

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            key: key.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Warning,
            key: key.into(),
            message: message.into(),
        });
    }
}

/// One cell of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub ordinal: usize,
    pub key: String,
    pub dist: LengthDistribution,
}

impl Cell {
    /// Fixed length of a sweep cell.
    pub fn fixed_length(&self) -> Option<usize> {
        match self.dist {
            LengthDistribution::Fixed { n } => Some(n),
            _ => None,
        }
    }
}

fn dist_key(d: &LengthDistribution) -> String {
    match *d {
        LengthDistribution::Fixed { n } => format!("n={n}"),
        LengthDistribution::Geo { q } => format!("geo(q={q})"),
        LengthDistribution::TruncGeo { n_max, q } => format!("trunc_geo(N={n_max},q={q})"),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn cells(&self) -> Vec<Cell> {
        let dists: Vec<LengthDistribution> = match &self.length {
            LengthPolicy::Sweep(ns) => ns.iter().map(|&n| LengthDistribution::Fixed { n }).collect(),
            LengthPolicy::Distributions(ds) => ds.clone(),
        };
        dists
            .into_iter()
            .enumerate()
            .map(|(ordinal, dist)| Cell {
                ordinal,
                key: dist_key(&dist),
                dist,
            })
            .collect()
    }

    /// Every problem found, errors and regime warnings alike.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut c = Collector(Vec::new());
        if self.id.trim().is_empty() {
            c.error("id", "must not be empty");
        }
        if self.trials == 0 {
            c.error("trials", "must be at least 1");
        } else if self.trials < MIN_CI_TRIALS {
            c.warning(
                "trials",
                format!("{} trials; confidence intervals assume at least {MIN_CI_TRIALS}", self.trials),
            );
        }
        if self.budget == 0 {
            c.error("budget", "must be at least 1");
        }
        if self.threads == Some(0) {
            c.error("threads", "must be at least 1");
        }
        self.check_length(&mut c);
        self.check_scheme(&mut c);
        self.check_positions(&mut c);
        c.0
    }

    pub fn errors(&self) -> Vec<Diagnostic> {
        self.diagnostics()
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self.errors().first() {
            Some(d) => Err(Error::Config(format!("{}: {}", d.key, d.message))),
            None => Ok(()),
        }
    }

    fn check_length(&self, c: &mut Collector) {
        match &self.length {
            LengthPolicy::Sweep(ns) => {
                if ns.is_empty() {
                    c.error("length.sweep", "needs at least one length");
                }
                for (i, &n) in ns.iter().enumerate() {
                    if n == 0 {
                        c.error(format!("length.sweep[{i}]"), "lengths must be at least 1");
                    }
                }
            }
            LengthPolicy::Distributions(ds) => {
                if ds.is_empty() {
                    c.error("length.distributions", "needs at least one distribution");
                }
                for (i, d) in ds.iter().enumerate() {
                    let key = format!("length.distributions[{i}]");
                    if let Err(e) = d.validate() {
                        c.error(key.clone(), e.to_string());
                    } else {
                        for w in d.regime_warnings() {
                            c.warning(key.clone(), w);
                        }
                    }
                }
            }
        }
    }

    /// Largest solution length any cell can produce; `None` if unbounded.
    fn max_length(&self) -> Option<usize> {
        self.cells()
            .iter()
            .map(|cell| cell.dist.support_max())
            .try_fold(0, |acc, m| m.map(|m| acc.max(m)))
    }

    fn max_genome_len(&self) -> Option<usize> {
        match self.fitness.positions {
            PositionPolicy::All => self.max_length(),
            PositionPolicy::Contiguous { genome_len } | PositionPolicy::Random { genome_len } => {
                Some(genome_len)
            }
        }
    }

    fn check_positions(&self, c: &mut Collector) {
        if let PositionPolicy::Contiguous { genome_len } | PositionPolicy::Random { genome_len } =
            self.fitness.positions
        {
            match self.max_length() {
                Some(m) if m > genome_len => c.error(
                    "fitness.positions.genome_len",
                    format!("{genome_len} is shorter than the largest solution length {m}"),
                ),
                None => c.error(
                    "fitness.positions",
                    "scattered positions need a bounded length distribution",
                ),
                _ => {}
            }
        }
    }

    fn check_scheme(&self, c: &mut Collector) {
        match &self.scheme {
            SchemeTemplate::Uniform { p } => {
                if !(0.0..=1.0).contains(p) {
                    c.error("scheme.p", format!("{p} is not a probability"));
                } else if *p > 0.5 {
                    c.warning("scheme.p", format!("rate {p} is above 1/2"));
                }
            }
            SchemeTemplate::UniformOfQ { factor } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    c.error("scheme.factor", format!("must be positive, got {factor}"));
                }
                for (i, cell) in self.cells().iter().enumerate() {
                    match cell.dist {
                        LengthDistribution::Fixed { .. } => c.error(
                            "scheme.kind",
                            format!("cell {i} has a fixed length, which has no q"),
                        ),
                        LengthDistribution::Geo { q } | LengthDistribution::TruncGeo { q, .. } => {
                            if factor * q > 1.0 {
                                c.error("scheme.factor", format!("factor * q = {} exceeds 1", factor * q));
                            }
                        }
                    }
                }
            }
            SchemeTemplate::InverseLength => {
                if self.max_length().is_none() {
                    c.error("scheme.kind", "inverse_length needs a bounded length distribution");
                }
            }
            SchemeTemplate::Vector { rates } => {
                for (i, p) in rates.iter().enumerate() {
                    if !(0.0..=1.0).contains(p) {
                        c.error(format!("scheme.rates[{i}]"), format!("{p} is not a probability"));
                    }
                }
                match self.max_genome_len() {
                    Some(m) if m > rates.len() => c.error(
                        "scheme.rates",
                        format!("{} rates for genomes of up to {m} bits", rates.len()),
                    ),
                    None => c.error("scheme.rates", "explicit rates need a bounded length distribution"),
                    _ => {}
                }
            }
            SchemeTemplate::Sequence { sequence, target_sum } => {
                if let Err(e) = sequence.validate() {
                    c.error("scheme.sequence", e.to_string());
                    return;
                }
                match target_sum {
                    Some(t) if !(*t > 0.0 && *t < 1.0) => {
                        c.error("scheme.target_sum", format!("must lie in (0, 1), got {t}"));
                    }
                    Some(_) if !sequence.summable() => {
                        c.error("scheme.target_sum", "the sequence is not summable");
                    }
                    _ => {
                        if let Some(m) = self.max_genome_len() {
                            if let Err(e) = self.sequence_rates(sequence, *target_sum, m) {
                                c.error("scheme.sequence", e.to_string());
                            }
                        }
                    }
                }
            }
            SchemeTemplate::RandomRate { sequence, cap } => {
                if let Err(e) = sequence.validate() {
                    c.error("scheme.sequence", e.to_string());
                } else if !sequence.summable() {
                    c.error("scheme.sequence", "random rates need a summable sequence");
                }
                if let Some(cap) = cap {
                    if *cap < 2 {
                        c.error("scheme.cap", "must be at least 2");
                    }
                }
            }
        }
    }

    fn sequence_rates(&self, seq: &SequenceFamily, target: Option<f64>, len: usize) -> Result<Vec<f64>> {
        match target {
            Some(t) => seq.normalized(t)?.rates(len),
            None => seq.rates(len),
        }
    }

    /// Checks the config and prepares what every trial shares.
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        self.validate()?;
        let shared = match &self.scheme {
            SchemeTemplate::Sequence {
                sequence,
                target_sum: Some(t),
            } => SharedScheme::Sequence(sequence.normalized(*t)?),
            SchemeTemplate::Sequence { sequence, .. } => SharedScheme::Sequence(sequence.clone()),
            SchemeTemplate::RandomRate { sequence, cap } => {
                SharedScheme::Random(RateDistribution::new(sequence, cap.unwrap_or(DEFAULT_RATE_CAP))?)
            }
            _ => SharedScheme::None,
        };
        Ok(ResolvedExperiment {
            config: self.clone(),
            cells: self.cells(),
            shared,
        })
    }
}

#[derive(Clone, Debug)]
enum SharedScheme {
    None,
    Sequence(SequenceFamily),
    Random(RateDistribution),
}

/// A validated config with its rate distribution built once.
#[derive(Clone, Debug)]
pub struct ResolvedExperiment {
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    shared: SharedScheme,
}

impl ResolvedExperiment {
    /// Problem and mutation scheme for solution length `n` in `cell`;
    /// random masks and positions come from `rng`.
    pub fn instantiate(&self, cell: &Cell, n: usize, rng: &mut RngStream) -> Result<(FitnessSpec, MutationScheme)> {
        let fit = &self.config.fitness;
        let genome_len = match fit.positions {
            PositionPolicy::All => n,
            PositionPolicy::Contiguous { genome_len } | PositionPolicy::Random { genome_len } => genome_len,
        };
        let mut spec = FitnessSpec::new(fit.family, genome_len)?;
        match fit.positions {
            PositionPolicy::All => {}
            PositionPolicy::Contiguous { .. } => {
                let positions: Vec<usize> = (1..=n).collect();
                spec = spec.with_relevant_positions(&positions)?;
            }
            PositionPolicy::Random { genome_len } => {
                let positions: Vec<usize> = index::sample(rng, genome_len, n).into_iter().map(|i| i + 1).collect();
                spec = spec.with_relevant_positions(&positions)?;
            }
        }
        if fit.mask == MaskPolicy::Random {
            spec = spec.with_mask(BitGenome::random(genome_len, rng)?)?;
        }
        let scheme = match (&self.config.scheme, &self.shared) {
            (SchemeTemplate::Uniform { p }, _) => MutationScheme::UniformFixed(*p),
            (SchemeTemplate::UniformOfQ { factor }, _) => match cell.dist {
                LengthDistribution::Geo { q } | LengthDistribution::TruncGeo { q, .. } => {
                    MutationScheme::UniformFixed(factor * q)
                }
                LengthDistribution::Fixed { .. } => {
                    return Err(Error::Config("uniform_of_q needs a q".into()));
                }
            },
            (SchemeTemplate::InverseLength, _) => {
                let max = cell
                    .dist
                    .support_max()
                    .ok_or_else(|| Error::Config("inverse_length needs a bounded length".into()))?;
                MutationScheme::UniformFixed(1.0 / max as f64)
            }
            (SchemeTemplate::Vector { rates }, _) => MutationScheme::FixedVector(rates[..genome_len].to_vec()),
            (SchemeTemplate::Sequence { .. }, SharedScheme::Sequence(seq)) => {
                MutationScheme::FixedVector(seq.rates(genome_len)?)
            }
            (SchemeTemplate::RandomRate { .. }, SharedScheme::Random(q)) => MutationScheme::RandomRate(q.clone()),
            _ => unreachable!("shared scheme matches template"),
        };
        Ok((spec, scheme))
    }
}
