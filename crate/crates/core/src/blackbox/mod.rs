//! Utilitarian-welfare black-boxes: given non-negative weights `c`, return a
//! state approximately maximizing `sum_i c_i * u_i(s)`.

pub mod allocation;
pub mod knapsack;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{StateRecord, UtilityVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlackBoxError {
    #[error("weight {index} is {value}; weights must be finite and non-negative")]
    InvalidWeight { index: usize, value: f64 },
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("success probability must lie in (0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("number of protected calls must be at least 1, got {0}")]
    CallCount(u64),
    #[error("repetition count must be at least 1")]
    ZeroRepetitions,
    #[error("knapsack weight {index} is {value}; weights must be non-negative integers")]
    NonIntegralWeight { index: usize, value: f64 },
    #[error("FPTAS accuracy must lie in (0, 1), got {0}")]
    FptasEpsilon(f64),
    #[error("values and weights have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// The coefficients `c_1, ..., c_n` handed to a black-box.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self, BlackBoxError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(BlackBoxError::InvalidWeight { index, value });
            }
        }
        Ok(Self(values))
    }

    /// Clamps negative or non-finite entries to zero.
    pub fn clamped(values: Vec<f64>) -> Self {
        Self(
            values
                .into_iter()
                .map(|v| if v.is_finite() && v > 0.0 { v } else { 0.0 })
                .collect(),
        )
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn unit(n: usize, agent: usize) -> Self {
        let mut v = vec![0.0; n];
        v[agent] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn welfare(&self, utilities: &UtilityVector) -> f64 {
        utilities.weighted_sum(&self.0)
    }
}

/// Declared guarantee of a black-box.
#[derive(Clone, Debug, PartialEq)]
pub struct BlackBoxSpec {
    pub alpha: f64,
    pub success_probability: f64,
    pub kind: String,
}

impl BlackBoxSpec {
    pub fn new(alpha: f64, success_probability: f64, kind: impl Into<String>) -> Result<Self, BlackBoxError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(BlackBoxError::AlphaOutOfRange(alpha));
        }
        if !(success_probability > 0.0 && success_probability <= 1.0) {
            return Err(BlackBoxError::ProbabilityOutOfRange(success_probability));
        }
        Ok(Self {
            alpha,
            success_probability,
            kind: kind.into(),
        })
    }

    pub fn exact(kind: impl Into<String>) -> Self {
        Self {
            alpha: 1.0,
            success_probability: 1.0,
            kind: kind.into(),
        }
    }

    pub fn is_randomized(&self) -> bool {
        self.success_probability < 1.0
    }
}

/// An approximate maximizer of weighted utilitarian welfare.
///
/// Implementations must be deterministic functions of `(weights, seed)` and
/// safe to call from several threads at once.
pub trait UtilitarianSolver: Send + Sync {
    fn agents(&self) -> usize;
    fn spec(&self) -> BlackBoxSpec;
    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord;
}

impl<S: UtilitarianSolver + ?Sized> UtilitarianSolver for &S {
    fn agents(&self) -> usize {
        (**self).agents()
    }
    fn spec(&self) -> BlackBoxSpec {
        (**self).spec()
    }
    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        (**self).solve(weights, seed)
    }
}

impl<S: UtilitarianSolver + ?Sized> UtilitarianSolver for Arc<S> {
    fn agents(&self) -> usize {
        (**self).agents()
    }
    fn spec(&self) -> BlackBoxSpec {
        (**self).spec()
    }
    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        (**self).solve(weights, seed)
    }
}

impl<S: UtilitarianSolver + ?Sized> UtilitarianSolver for Box<S> {
    fn agents(&self) -> usize {
        (**self).agents()
    }
    fn spec(&self) -> BlackBoxSpec {
        (**self).spec()
    }
    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        (**self).solve(weights, seed)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}

/// Hands out a fresh, reproducible seed per black-box call.
#[derive(Debug)]
pub struct SeedStream {
    base: u64,
    counter: AtomicU64,
}

impl SeedStream {
    pub fn new(base: u64) -> Self {
        Self {
            base,
            counter: AtomicU64::new(0),
        }
    }

    pub fn next_seed(&self) -> u64 {
        derive_seed(self.base, self.counter.fetch_add(1, Ordering::Relaxed))
    }
}

/// Number of repetitions `q` that make `k` boosted calls all succeed with
/// probability at least `p`: `q = ceil(ln(1/k) / ln(1 - p) + 1)`.
pub fn compute_repetitions(p: f64, k: u64) -> Result<u64, BlackBoxError> {
    if k == 0 {
        return Err(BlackBoxError::CallCount(k));
    }
    if p == 1.0 {
        return Ok(1);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(BlackBoxError::ProbabilityOutOfRange(p));
    }
    let q = ((1.0 / k as f64).ln() / (1.0 - p).ln() + 1.0).ceil();
    Ok(q.max(1.0) as u64)
}

/// Returns the state with the higher weighted welfare, keeping `best` on ties.
fn better(best: Option<StateRecord>, candidate: StateRecord, weights: &WeightVector) -> StateRecord {
    match best {
        Some(b) if weights.welfare(&b.utilities) >= weights.welfare(&candidate.utilities) => b,
        _ => candidate,
    }
}

/// Best of `q` independent calls to `base`.
pub fn boosted_solve<S: UtilitarianSolver + ?Sized>(
    base: &S,
    weights: &WeightVector,
    q: u64,
    seed: u64,
) -> Result<StateRecord, BlackBoxError> {
    if q == 0 {
        return Err(BlackBoxError::ZeroRepetitions);
    }
    let mut best = None;
    for r in 0..q {
        let s = base.solve(weights, derive_seed(seed, r));
        best = Some(better(best, s, weights));
    }
    Ok(best.expect("q >= 1"))
}

/// Wraps a randomized black-box so each call repeats it `q` times.
#[derive(Debug)]
pub struct Boosted<S> {
    base: S,
    repetitions: u64,
}

impl<S: UtilitarianSolver> Boosted<S> {
    pub fn new(base: S, repetitions: u64) -> Result<Self, BlackBoxError> {
        if repetitions == 0 {
            return Err(BlackBoxError::ZeroRepetitions);
        }
        Ok(Self { base, repetitions })
    }

    pub fn repetitions(&self) -> u64 {
        self.repetitions
    }
}

impl<S: UtilitarianSolver> UtilitarianSolver for Boosted<S> {
    fn agents(&self) -> usize {
        self.base.agents()
    }

    fn spec(&self) -> BlackBoxSpec {
        let inner = self.base.spec();
        let fail = (1.0 - inner.success_probability).powi(self.repetitions as i32);
        BlackBoxSpec {
            alpha: inner.alpha,
            success_probability: 1.0 - fail,
            kind: format!("boosted[{}x {}]", self.repetitions, inner.kind),
        }
    }

    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        boosted_solve(&self.base, weights, self.repetitions, seed).expect("repetitions >= 1")
    }
}

/// A randomized black-box stand-in: with probability `p` it forwards to the
/// wrapped solver, otherwise it returns the degenerate state.
#[derive(Debug)]
pub struct SimulatedRandomized<S> {
    base: S,
    alpha: f64,
    success_probability: f64,
}

impl<S: UtilitarianSolver> SimulatedRandomized<S> {
    /// `alpha` is the factor the wrapper advertises; it must not exceed the
    /// wrapped solver's own factor.
    pub fn new(base: S, alpha: Option<f64>, success_probability: f64) -> Result<Self, BlackBoxError> {
        let base_alpha = base.spec().alpha;
        let alpha = alpha.unwrap_or(base_alpha);
        if !(alpha > 0.0 && alpha <= base_alpha) {
            return Err(BlackBoxError::AlphaOutOfRange(alpha));
        }
        if !(success_probability > 0.0 && success_probability <= 1.0) {
            return Err(BlackBoxError::ProbabilityOutOfRange(success_probability));
        }
        Ok(Self {
            base,
            alpha,
            success_probability,
        })
    }
}

impl<S: UtilitarianSolver> UtilitarianSolver for SimulatedRandomized<S> {
    fn agents(&self) -> usize {
        self.base.agents()
    }

    fn spec(&self) -> BlackBoxSpec {
        BlackBoxSpec {
            alpha: self.alpha,
            success_probability: self.success_probability,
            kind: format!("simulated[p={} {}]", self.success_probability, self.base.spec().kind),
        }
    }

    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if rng.gen::<f64>() < self.success_probability {
            self.base.solve(weights, derive_seed(seed, 1))
        } else {
            StateRecord::degenerate(self.agents())
        }
    }
}

/// Counts calls to the wrapped solver.
#[derive(Debug)]
pub struct Counting<S> {
    base: S,
    calls: AtomicU64,
}

impl<S: UtilitarianSolver> Counting<S> {
    pub fn new(base: S) -> Self {
        Self {
            base,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<S: UtilitarianSolver> UtilitarianSolver for Counting<S> {
    fn agents(&self) -> usize {
        self.base.agents()
    }

    fn spec(&self) -> BlackBoxSpec {
        self.base.spec()
    }

    fn solve(&self, weights: &WeightVector, seed: u64) -> StateRecord {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.base.solve(weights, seed)
    }
}

/// Exact solver scanning an explicit list of states. Ties go to the lowest
/// handle, and the degenerate state wins whenever the best welfare is zero.
#[derive(Clone, Debug)]
pub struct Exhaustive {
    n: usize,
    states: Vec<StateRecord>,
}

impl Exhaustive {
    pub fn new(n: usize, mut states: Vec<StateRecord>) -> Self {
        states.sort_by(|a, b| a.handle.cmp(&b.handle));
        states.dedup_by(|a, b| a.handle == b.handle);
        Self { n, states }
    }

    pub fn states(&self) -> &[StateRecord] {
        &self.states
    }
}

impl UtilitarianSolver for Exhaustive {
    fn agents(&self) -> usize {
        self.n
    }

    fn spec(&self) -> BlackBoxSpec {
        BlackBoxSpec::exact("exhaustive")
    }

    fn solve(&self, weights: &WeightVector, _seed: u64) -> StateRecord {
        let mut best: Option<(&StateRecord, f64)> = None;
        for s in &self.states {
            let w = weights.welfare(&s.utilities);
            if best.is_none_or(|(_, b)| w > b) {
                best = Some((s, w));
            }
        }
        match best {
            Some((s, w)) if w > 0.0 => s.clone(),
            _ => StateRecord::degenerate(self.n),
        }
    }
}
