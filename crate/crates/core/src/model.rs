//! Domain types shared by every stage of the pipeline: per-state utility
//! columns, opaque state handles, sparse lotteries over states and the
//! expected-utility vectors they induce.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default equality band for comparing real-valued expectations.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance for "probabilities sum to one" checks.
pub const TAU_DIST: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("utility for agent {agent} is {value}; utilities must be finite and non-negative")]
    InvalidUtility { agent: usize, value: f64 },
    #[error("expected {expected} agents, got {got}")]
    AgentCount { expected: usize, got: usize },
    #[error("probability {value} for state {handle} is negative or not finite")]
    InvalidProbability { handle: StateHandle, value: f64 },
    #[error("probabilities sum to {total}, not 1")]
    NotNormalized { total: f64 },
    #[error("distribution is empty")]
    Empty,
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("non-degenerate mass {mass} exceeds alpha {alpha}")]
    MassExceedsAlpha { mass: f64, alpha: f64 },
}

/// Utilities `u_1(s), ..., u_n(s)` of a single state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        for (agent, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidUtility { agent, value });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.0[agent]
    }

    /// Weighted welfare `sum_i c_i * u_i`.
    pub fn weighted_sum(&self, weights: &[f64]) -> f64 {
        self.0.iter().zip(weights).map(|(u, c)| u * c).sum()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&u| u == 0.0)
    }
}

impl TryFrom<Vec<f64>> for UtilityVector {
    type Error = ModelError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<UtilityVector> for Vec<f64> {
    fn from(v: UtilityVector) -> Self {
        v.0
    }
}

/// Canonical, byte-comparable identifier of a state.
///
/// The empty byte string is reserved for the degenerate state, so it sorts
/// before every other handle.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateHandle(Arc<[u8]>);

impl StateHandle {
    pub fn degenerate() -> Self {
        Self(Arc::from(Vec::new()))
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(Arc::from(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        if self.0.is_empty() {
            return "degenerate".to_string();
        }
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for StateHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateHandle({})", self.to_hex())
    }
}

impl fmt::Display for StateHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Application-level meaning of a state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    /// The degenerate state: nobody gets anything.
    Empty,
    /// `owner[g]` is the agent receiving good `g`.
    Allocation { owner: Vec<usize> },
    /// Sorted ids of the admitted groups.
    Admitted { groups: Vec<usize> },
    /// Sorted ids of the funded projects.
    Funded { projects: Vec<usize> },
    /// Index into an explicitly listed state table.
    Listed { index: usize },
}

/// One state: its handle, utility column and decoded payload.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRecord {
    pub handle: StateHandle,
    pub utilities: UtilityVector,
    pub payload: Outcome,
}

impl StateRecord {
    pub fn degenerate(n: usize) -> Self {
        Self {
            handle: StateHandle::degenerate(),
            utilities: UtilityVector::zeros(n),
            payload: Outcome::Empty,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.handle.is_degenerate()
    }

    pub fn welfare(&self, weights: &[f64]) -> f64 {
        self.utilities.weighted_sum(weights)
    }
}

/// Vector of expected utilities `E_1(x), ..., E_n(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedVector(pub Vec<f64>);

impl ExpectedVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self(self.0.iter().map(|v| v + delta).collect())
    }
}

impl From<Vec<f64>> for ExpectedVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Non-negative weights over a handful of states, with no normalization
/// requirement. This is the currency of the minimization programs, whose
/// solutions are sub-probability vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseWeights {
    entries: BTreeMap<StateHandle, (StateRecord, f64)>,
}

impl SparseWeights {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight` to `record`'s entry. Non-positive weights are ignored.
    pub fn add(&mut self, record: StateRecord, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        self.entries
            .entry(record.handle.clone())
            .and_modify(|e| e.1 += weight)
            .or_insert((record, weight));
    }

    pub fn total(&self) -> f64 {
        self.entries.values().map(|(_, w)| w).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateRecord, f64)> {
        self.entries.values().map(|(r, w)| (r, *w))
    }

    pub fn scale(&mut self, factor: f64) {
        for e in self.entries.values_mut() {
            e.1 *= factor;
        }
    }

    pub fn expected(&self, n: usize) -> ExpectedVector {
        let mut out = vec![0.0; n];
        for (record, w) in self.iter() {
            for (e, u) in out.iter_mut().zip(record.utilities.as_slice()) {
                *e += w * u;
            }
        }
        ExpectedVector(out)
    }
}

/// A lottery over states: probabilities summing to one (within
/// [`TAU_DIST`]), listed only for the states in its support.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDistribution {
    n: usize,
    weights: BTreeMap<StateHandle, f64>,
    registry: BTreeMap<StateHandle, StateRecord>,
}

impl SparseDistribution {
    /// Builds a distribution from `(state, probability)` pairs. Repeated
    /// states are merged and zero entries dropped.
    pub fn new(
        n: usize,
        entries: impl IntoIterator<Item = (StateRecord, f64)>,
    ) -> Result<Self, ModelError> {
        let mut weights = BTreeMap::new();
        let mut registry = BTreeMap::new();
        for (record, p) in entries {
            if record.utilities.len() != n {
                return Err(ModelError::AgentCount {
                    expected: n,
                    got: record.utilities.len(),
                });
            }
            if !p.is_finite() || p < 0.0 {
                return Err(ModelError::InvalidProbability {
                    handle: record.handle.clone(),
                    value: p,
                });
            }
            if p == 0.0 {
                continue;
            }
            *weights.entry(record.handle.clone()).or_insert(0.0) += p;
            registry.entry(record.handle.clone()).or_insert(record);
        }
        if weights.is_empty() {
            return Err(ModelError::Empty);
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > TAU_DIST {
            return Err(ModelError::NotNormalized { total });
        }
        Ok(Self {
            n,
            weights,
            registry,
        })
    }

    pub fn point_mass(record: StateRecord) -> Self {
        let n = record.utilities.len();
        let handle = record.handle.clone();
        Self {
            n,
            weights: BTreeMap::from([(handle.clone(), 1.0)]),
            registry: BTreeMap::from([(handle, record)]),
        }
    }

    /// All mass on the degenerate state.
    pub fn degenerate(n: usize) -> Self {
        Self::point_mass(StateRecord::degenerate(n))
    }

    /// Completes a sub-probability vector with degenerate mass. Totals
    /// slightly above one (within `slack`) are renormalized.
    pub fn pad_with_degenerate(
        n: usize,
        partial: &SparseWeights,
        slack: f64,
    ) -> Result<Self, ModelError> {
        let total = partial.total();
        if total > 1.0 + slack {
            return Err(ModelError::NotNormalized { total });
        }
        let mut entries: Vec<(StateRecord, f64)> = partial
            .iter()
            .filter(|(r, _)| !r.is_degenerate())
            .map(|(r, w)| (r.clone(), w))
            .collect();
        let mass: f64 = entries.iter().map(|(_, w)| w).sum();
        if mass > 1.0 {
            for e in entries.iter_mut() {
                e.1 /= mass;
            }
        } else if mass < 1.0 {
            entries.push((StateRecord::degenerate(n), 1.0 - mass));
        }
        if entries.is_empty() {
            return Ok(Self::degenerate(n));
        }
        Self::new(n, entries)
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn probability(&self, handle: &StateHandle) -> f64 {
        self.weights.get(handle).copied().unwrap_or(0.0)
    }

    pub fn degenerate_mass(&self) -> f64 {
        self.probability(&StateHandle::degenerate())
    }

    /// Probability placed on states other than the degenerate one.
    pub fn non_degenerate_mass(&self) -> f64 {
        self.weights
            .iter()
            .filter(|(h, _)| !h.is_degenerate())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// `(state, probability)` pairs in handle order.
    pub fn iter(&self) -> impl Iterator<Item = (&StateRecord, f64)> {
        self.weights.iter().map(|(h, p)| (&self.registry[h], *p))
    }

    pub fn record(&self, handle: &StateHandle) -> Option<&StateRecord> {
        self.registry.get(handle)
    }

    /// Expected utilities; the degenerate state contributes nothing.
    pub fn expected_utilities(&self) -> ExpectedVector {
        let mut out = vec![0.0; self.n];
        for (record, p) in self.iter() {
            if record.is_degenerate() {
                continue;
            }
            for (e, u) in out.iter_mut().zip(record.utilities.as_slice()) {
                *e += p * u;
            }
        }
        ExpectedVector(out)
    }

    /// Drops a degenerate entry lighter than `threshold` and renormalizes.
    pub fn without_negligible_degenerate(mut self, threshold: f64) -> Self {
        let d = StateHandle::degenerate();
        if self.weights.len() > 1 {
            if let Some(&p) = self.weights.get(&d) {
                if p < threshold {
                    self.weights.remove(&d);
                    self.registry.remove(&d);
                    let total: f64 = self.weights.values().sum();
                    for w in self.weights.values_mut() {
                        *w /= total;
                    }
                }
            }
        }
        self
    }

    pub(crate) fn from_parts_unchecked(
        n: usize,
        weights: BTreeMap<StateHandle, f64>,
        registry: BTreeMap<StateHandle, StateRecord>,
    ) -> Self {
        Self {
            n,
            weights,
            registry,
        }
    }

    pub(crate) fn parts(&self) -> (&BTreeMap<StateHandle, f64>, &BTreeMap<StateHandle, StateRecord>) {
        (&self.weights, &self.registry)
    }
}

/// Shorthand for [`SparseDistribution::expected_utilities`].
pub fn expected_utilities(x: &SparseDistribution) -> ExpectedVector {
    x.expected_utilities()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(tag: u8, utilities: &[f64]) -> StateRecord {
        StateRecord {
            handle: StateHandle::from_bytes(vec![tag]),
            utilities: UtilityVector::new(utilities.to_vec()).unwrap(),
            payload: Outcome::Listed { index: tag as usize },
        }
    }

    #[test]
    fn degenerate_mass_gives_zero_expectations() {
        let x = SparseDistribution::degenerate(3);
        assert_eq!(x.expected_utilities().0, vec![0.0; 3]);
    }

    #[test]
    fn point_mass_expectation_is_the_column() {
        let x = SparseDistribution::point_mass(state(1, &[10.0, 10.0]));
        assert_eq!(x.expected_utilities().0, vec![10.0, 10.0]);
    }

    #[test]
    fn mixture_with_degenerate_scales_expectations() {
        let x = SparseDistribution::new(
            2,
            [(state(1, &[10.0, 10.0]), 0.9), (StateRecord::degenerate(2), 0.1)],
        )
        .unwrap();
        let e = x.expected_utilities();
        assert!((e.0[0] - 9.0).abs() < 1e-12);
        assert!((x.non_degenerate_mass() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_utilities_and_bad_totals() {
        assert!(UtilityVector::new(vec![1.0, -0.5]).is_err());
        let err = SparseDistribution::new(1, [(state(1, &[1.0]), 0.5)]).unwrap_err();
        assert!(matches!(err, ModelError::NotNormalized { .. }));
    }

    #[test]
    fn padding_fills_degenerate_mass() {
        let mut w = SparseWeights::new();
        w.add(state(1, &[2.0]), 0.25);
        let x = SparseDistribution::pad_with_degenerate(1, &w, TAU_DIST).unwrap();
        assert!((x.degenerate_mass() - 0.75).abs() < 1e-12);
        let mut over = SparseWeights::new();
        over.add(state(1, &[2.0]), 1.0 + 5e-8);
        let y = SparseDistribution::pad_with_degenerate(1, &over, TAU_DIST).unwrap();
        assert_eq!(y.support_size(), 1);
        assert!((y.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_handle_sorts_first() {
        assert!(StateHandle::degenerate() < StateHandle::from_bytes(vec![0]));
    }
}
