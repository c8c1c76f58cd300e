//! The `(1+1) EA_p` (one flip probability per position) and the
//! `(1+1) EA_Q` (one random rate per iteration, shared by all positions).
//!
//! Both start from a uniformly random string, evaluate it, then repeat:
//! mutate the parent into an offspring, evaluate the offspring and keep it
//! whenever its fitness is at least the parent's. A run ends when the
//! optimum is evaluated for the first time or the evaluation budget is
//! spent.
//!
//! Mutation never walks the whole string unless the rate is large: flip
//! positions are drawn by inverse-CDF skipping over the cumulative
//! log-survival `sum ln(1 - p_j)`.
//!
//! For LeadingOnes (natural bit order) with a fixed rate vector,
//! [`Engine::Auto`] also skips, in one geometric draw, every iteration that
//! provably leaves the parent unchanged (nothing flipped, or a bit of the
//! leading block flipped and the offspring rejected). The evaluation count
//! and the sequence of parents have exactly the law of the step-by-step
//! algorithm, which [`Engine::Stepwise`] runs literally.

use serde::{Deserialize, Serialize};

use crate::bitgenome::{BitGenome, FitnessSpec};
use crate::distributions::{LengthDistribution, RateDistribution};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// How offspring are produced.
#[derive(Clone, Debug, PartialEq)]
pub enum MutationScheme {
    /// `(1+1) EA_p`: position `i` flips with probability `rates[i]`.
    FixedVector(Vec<f64>),
    /// `(1+1) EA_p` with all rates equal.
    UniformFixed(f64),
    /// `(1+1) EA_Q`: each iteration draws one rate from `Q`.
    RandomRate(RateDistribution),
}

impl MutationScheme {
    pub fn validate(&self, genome_len: usize) -> Result<()> {
        match self {
            MutationScheme::FixedVector(rates) => {
                if rates.len() != genome_len {
                    return Err(Error::LengthMismatch {
                        expected: genome_len,
                        actual: rates.len(),
                    });
                }
                check_rates(rates)
            }
            MutationScheme::UniformFixed(p) => check_rates(&[*p]),
            MutationScheme::RandomRate(_) => Ok(()),
        }
    }
}

fn check_rates(rates: &[f64]) -> Result<()> {
    match rates.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(index) => Err(Error::InvalidProbability {
            index,
            value: rates[index],
        }),
        None => Ok(()),
    }
}

/// Outcome of one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Fitness evaluations until the optimum was first evaluated, counting
    /// the evaluation of the initial string.
    pub evaluations: u64,
    /// The run was stopped by the budget (then `evaluations == budget`).
    pub hit_budget: bool,
    pub seed: u64,
    pub realized_length: usize,
}

impl RunRecord {
    /// Completed mutation-selection rounds, `evaluations - 1`. This is the
    /// quantity the closed-form runtime formulas describe.
    pub fn iterations(&self) -> u64 {
        self.evaluations - 1
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Event skipping where it is exact, otherwise stepwise.
    #[default]
    Auto,
    /// One loop pass per iteration, as in the algorithm listing.
    Stepwise,
}

// ---------------------------------------------------------------------------
// Flip sampling

/// Positions to flip in one mutation, sparse or as a word mask.
#[derive(Debug, Default)]
struct Flips {
    sparse: Vec<usize>,
    dense: Vec<u64>,
    is_dense: bool,
}

impl Flips {
    fn clear(&mut self) {
        self.sparse.clear();
        self.is_dense = false;
    }

    fn is_empty(&self) -> bool {
        if self.is_dense {
            self.dense.iter().all(|&w| w == 0)
        } else {
            self.sparse.is_empty()
        }
    }

    fn apply(&self, x: &mut BitGenome) {
        if self.is_dense {
            x.xor_words(&self.dense);
        } else {
            for &i in &self.sparse {
                x.flip(i);
            }
        }
    }

    fn dense_mut(&mut self, len: usize) -> &mut [u64] {
        self.is_dense = true;
        self.dense.clear();
        self.dense.resize(len.div_ceil(64), 0);
        &mut self.dense
    }
}

/// Rates above this fill whole words at once instead of skipping.
const DENSE_RATE: f64 = 1.0 / 32.0;

/// A word whose 64 bits are independently 1 with probability `p`.
///
/// Each lane compares a stream of random bits with the binary digits of
/// `p` and is decided at the first digit where they differ, so the result
/// is exact for the double `p` and needs about `2 + log2(64)` random words.
#[inline]
fn bernoulli_word(p: f64, rng: &mut RngStream) -> u64 {
    // 53 binary digits of p, most significant first
    let digits = (p * (1u64 << 53) as f64) as u64;
    let mut undecided = !0u64;
    let mut ones = 0u64;
    for j in (0..53).rev() {
        let r = rng.next_u64();
        if digits >> j & 1 == 1 {
            ones |= undecided & !r;
            undecided &= r;
        } else {
            undecided &= !r;
        }
        if undecided == 0 {
            break;
        }
    }
    ones
}

/// Flips for a rate `p` shared by all `len` positions.
fn uniform_flips(p: f64, len: usize, rng: &mut RngStream, out: &mut Flips) {
    out.clear();
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        out.dense_mut(len).iter_mut().for_each(|w| *w = !0);
    } else if p == 0.5 {
        out.dense_mut(len).iter_mut().for_each(|w| *w = rng.next_u64());
    } else if p > DENSE_RATE {
        out.dense_mut(len)
            .iter_mut()
            .for_each(|w| *w = bernoulli_word(p, rng));
    } else {
        let ln_q = (-p).ln_1p();
        sparse_uniform_from(0, ln_q, len, rng, &mut out.sparse);
    }
    if out.is_dense && !len.is_multiple_of(64) {
        let last = out.dense.len() - 1;
        out.dense[last] &= (1u64 << (len % 64)) - 1;
    }
}

fn sparse_uniform_from(start: usize, ln_q: f64, len: usize, rng: &mut RngStream, out: &mut Vec<usize>) {
    let mut pos = start as u64 + rng.geometric_failures(ln_q);
    while pos < len as u64 {
        out.push(pos as usize);
        pos += 1 + rng.geometric_failures(ln_q);
    }
}

/// Cumulative log-survival of a rate vector: `cum[i] = sum_{j<i} ln(1 - p_j)`
/// over the positions with `p_j < 1`. Positions with `p_j = 1` are kept
/// apart since they flip every time.
#[derive(Clone, Debug)]
struct VectorSurvival {
    cum: Vec<f64>,
    forced: Vec<usize>,
}

impl VectorSurvival {
    fn new(rates: &[f64]) -> Self {
        let mut cum = Vec::with_capacity(rates.len() + 1);
        let mut forced = Vec::new();
        let mut acc = 0.0;
        cum.push(acc);
        for (j, &p) in rates.iter().enumerate() {
            if p >= 1.0 {
                forced.push(j);
            } else {
                acc += (-p).ln_1p();
            }
            cum.push(acc);
        }
        Self { cum, forced }
    }

    fn len(&self) -> usize {
        self.cum.len() - 1
    }

    /// Smallest position `m >= from` with `cum[m + 1] < target`.
    #[inline]
    fn first_below(&self, from: usize, target: f64) -> Option<usize> {
        let tail = &self.cum[from + 1..];
        let k = tail.partition_point(|&c| c >= target);
        (k < tail.len()).then_some(from + k)
    }

    /// Independent flips on positions `from..len`, continuing after a flip
    /// already placed at `from - 1` (or from scratch when `from == 0`).
    fn flips_from(&self, from: usize, rng: &mut RngStream, out: &mut Vec<usize>) {
        let mut base = self.cum[from];
        let mut pos = from;
        while pos < self.len() {
            let target = base + rng.open01().ln();
            match self.first_below(pos, target) {
                Some(m) => {
                    out.push(m);
                    base = self.cum[m + 1];
                    pos = m + 1;
                }
                None => break,
            }
        }
    }

    fn flips(&self, rng: &mut RngStream, out: &mut Flips) {
        out.clear();
        self.flips_from(0, rng, &mut out.sparse);
        if !self.forced.is_empty() {
            out.sparse.extend_from_slice(&self.forced);
        }
    }
}

/// Flips `x` at each position `i` independently with probability `rates[i]`.
/// `x` is left untouched.
pub fn mutate(x: &BitGenome, rates: &[f64], rng: &mut RngStream) -> Result<BitGenome> {
    if rates.len() != x.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: rates.len(),
        });
    }
    check_rates(rates)?;
    let mut flips = Flips::default();
    VectorSurvival::new(rates).flips(rng, &mut flips);
    let mut y = x.clone();
    flips.apply(&mut y);
    Ok(y)
}

/// Like [`mutate`] with one rate for every position.
pub fn mutate_uniform(x: &BitGenome, p: f64, rng: &mut RngStream) -> Result<BitGenome> {
    check_rates(&[p])?;
    let mut flips = Flips::default();
    uniform_flips(p, x.len(), rng, &mut flips);
    let mut y = x.clone();
    flips.apply(&mut y);
    Ok(y)
}

// ---------------------------------------------------------------------------
// Runs

enum Mutator<'a> {
    Uniform(f64),
    Vector(VectorSurvival),
    Random(&'a RateDistribution),
}

impl<'a> Mutator<'a> {
    fn new(scheme: &'a MutationScheme) -> Self {
        match scheme {
            MutationScheme::UniformFixed(p) => Mutator::Uniform(*p),
            MutationScheme::FixedVector(r) => Mutator::Vector(VectorSurvival::new(r)),
            MutationScheme::RandomRate(q) => Mutator::Random(q),
        }
    }

    #[inline]
    fn sample(&self, len: usize, rng: &mut RngStream, out: &mut Flips) {
        match self {
            Mutator::Uniform(p) => uniform_flips(*p, len, rng, out),
            Mutator::Vector(v) => v.flips(rng, out),
            Mutator::Random(q) => {
                let i = q.sample_index(rng);
                uniform_flips(1.0 / i as f64, len, rng, out);
            }
        }
    }
}

/// Runs the algorithm on `spec` until the optimum is evaluated or `budget`
/// evaluations are spent. Deterministic in all arguments.
pub fn run_ea(
    spec: &FitnessSpec,
    scheme: &MutationScheme,
    budget: u64,
    seed: u64,
) -> Result<RunRecord> {
    run_ea_with(spec, scheme, budget, seed, Engine::Auto)
}

pub fn run_ea_with(
    spec: &FitnessSpec,
    scheme: &MutationScheme,
    budget: u64,
    seed: u64,
    engine: Engine,
) -> Result<RunRecord> {
    let mut rng = RngStream::new(seed);
    let mut record = run_on_stream(spec, scheme, budget, None, &mut rng, engine)?;
    record.seed = seed;
    Ok(record)
}

/// A run from a given initial string instead of a random one.
pub fn run_ea_from(
    spec: &FitnessSpec,
    scheme: &MutationScheme,
    budget: u64,
    start: BitGenome,
    seed: u64,
    engine: Engine,
) -> Result<RunRecord> {
    let mut rng = RngStream::new(seed);
    let mut record = run_on_stream(spec, scheme, budget, Some(start), &mut rng, engine)?;
    record.seed = seed;
    Ok(record)
}

/// Draws the solution length from `dist`, asks `build` for the problem and
/// the mutation scheme at that length, and runs on the same random stream.
pub fn run_ea_random_length<F>(
    dist: &LengthDistribution,
    build: F,
    budget: u64,
    seed: u64,
) -> Result<RunRecord>
where
    F: FnOnce(usize, &mut RngStream) -> Result<(FitnessSpec, MutationScheme)>,
{
    dist.validate()?;
    let mut rng = RngStream::new(seed);
    let n = dist.sample(&mut rng);
    let (spec, scheme) = build(n, &mut rng)?;
    let mut record = run_on_stream(&spec, &scheme, budget, None, &mut rng, Engine::Auto)?;
    record.seed = seed;
    record.realized_length = n;
    Ok(record)
}

/// Core loop shared by all entry points; `seed` in the result is left 0.
pub fn run_on_stream(
    spec: &FitnessSpec,
    scheme: &MutationScheme,
    budget: u64,
    start: Option<BitGenome>,
    rng: &mut RngStream,
    engine: Engine,
) -> Result<RunRecord> {
    let len = spec.genome_len();
    scheme.validate(len)?;
    if budget == 0 {
        return Err(crate::error::invalid("budget", "must be at least 1"));
    }
    let mut x = match start {
        Some(s) => {
            if s.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    actual: s.len(),
                });
            }
            s
        }
        None => BitGenome::random(len, rng)?,
    };
    let fx = spec.eval_unchecked(&x);
    let record = |evaluations: u64, hit_budget: bool| RunRecord {
        evaluations,
        hit_budget,
        seed: 0,
        realized_length: spec.solution_len(),
    };
    if fx == spec.max_fitness() {
        return Ok(record(1, false));
    }

    let skipping = engine == Engine::Auto
        && spec.is_plain_prefix()
        && match scheme {
            MutationScheme::UniformFixed(p) => *p > 0.0 && *p < 1.0,
            MutationScheme::FixedVector(r) => r.iter().all(|&p| p > 0.0 && p < 1.0),
            MutationScheme::RandomRate(_) => false,
        };
    let (evaluations, hit) = if skipping {
        leading_ones_skipping(spec, scheme, budget, &mut x, fx, rng)
    } else {
        stepwise(spec, &Mutator::new(scheme), budget, &mut x, fx, rng)
    };
    Ok(record(evaluations, hit))
}

fn stepwise(
    spec: &FitnessSpec,
    mutator: &Mutator<'_>,
    budget: u64,
    x: &mut BitGenome,
    mut fx: u64,
    rng: &mut RngStream,
) -> (u64, bool) {
    let len = spec.genome_len();
    let optimum = spec.max_fitness();
    let mut flips = Flips::default();
    let mut evaluations = 1u64;
    while evaluations < budget {
        mutator.sample(len, rng, &mut flips);
        evaluations += 1;
        if flips.is_empty() {
            // offspring equals parent
            continue;
        }
        flips.apply(x);
        let fy = spec.eval_unchecked(x);
        if fy >= fx {
            fx = fy;
            if fx == optimum {
                return (evaluations, false);
            }
        } else {
            flips.apply(x);
        }
    }
    (budget, true)
}

/// Log-survival view over a uniform rate or a rate vector.
enum Survival {
    Uniform { ln_q: f64 },
    Vector(VectorSurvival),
}

impl Survival {
    /// `sum_{j<i} ln(1 - p_j)`.
    #[inline]
    fn cum(&self, i: usize) -> f64 {
        match self {
            Survival::Uniform { ln_q } => i as f64 * ln_q,
            Survival::Vector(v) => v.cum[i],
        }
    }

    /// First flipped position in `from..len`, conditioned on at least one
    /// flip there.
    fn first_flip_given_any(&self, from: usize, len: usize, rng: &mut RngStream) -> usize {
        let span = self.cum(len) - self.cum(from);
        let any = -span.exp_m1();
        let target = (-rng.open01() * any).ln_1p();
        let m = match self {
            Survival::Uniform { ln_q } => from + (target / ln_q).floor() as usize,
            Survival::Vector(v) => {
                // smallest m with cum[m+1] - cum[from] <= target
                let base = v.cum[from];
                let tail = &v.cum[from + 1..];
                from + tail.partition_point(|&c| c - base > target)
            }
        };
        m.min(len - 1)
    }

    fn flips_after(&self, first: usize, len: usize, rng: &mut RngStream, out: &mut Vec<usize>) {
        match self {
            Survival::Uniform { ln_q } => sparse_uniform_from(first + 1, *ln_q, len, rng, out),
            Survival::Vector(v) => v.flips_from(first + 1, rng, out),
        }
    }
}

/// Event-skipping run for LeadingOnes in natural order with rates in (0, 1).
///
/// With `k` leading good bits, an iteration changes the parent exactly when
/// no bit in `0..k` flips and some bit in `k..len` flips; the offspring is
/// then always accepted. All other iterations leave the parent as it is.
fn leading_ones_skipping(
    spec: &FitnessSpec,
    scheme: &MutationScheme,
    budget: u64,
    x: &mut BitGenome,
    mut fx: u64,
    rng: &mut RngStream,
) -> (u64, bool) {
    let len = spec.genome_len();
    let optimum = spec.max_fitness();
    let survival = match scheme {
        MutationScheme::UniformFixed(p) => Survival::Uniform { ln_q: (-p).ln_1p() },
        MutationScheme::FixedVector(r) => Survival::Vector(VectorSurvival::new(r)),
        MutationScheme::RandomRate(_) => unreachable!("checked by caller"),
    };
    let mut flips = Flips::default();
    let mut evaluations = 1u64;
    loop {
        let k = fx as usize;
        // ln P(change) = cum(k) + ln(1 - exp(cum(len) - cum(k)))
        let ln_change = survival.cum(k) + (-(survival.cum(len) - survival.cum(k)).exp_m1()).ln();
        let ln_stay = (-ln_change.exp()).ln_1p();
        let idle = if ln_stay == 0.0 {
            u64::MAX
        } else {
            rng.geometric_failures(ln_stay)
        };
        // idle unchanged iterations, then the changing one
        match evaluations.checked_add(idle).and_then(|e| e.checked_add(1)) {
            Some(e) if e <= budget => evaluations = e,
            _ => return (budget, true),
        }
        flips.clear();
        let first = survival.first_flip_given_any(k, len, rng);
        flips.sparse.push(first);
        survival.flips_after(first, len, rng, &mut flips.sparse);
        flips.apply(x);
        if first == k {
            let fy = spec.eval_unchecked(x);
            debug_assert!(fy > fx);
            fx = fy;
            if fx == optimum {
                return (evaluations, false);
            }
        }
        debug_assert_eq!(spec.eval_unchecked(x), fx);
    }
}
