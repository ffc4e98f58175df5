//! The leximin order on expected-utility vectors and the three notions of
//! approximate leximin optimality used for verification.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{ExpectedVector, ModelError, SparseDistribution, StateHandle, StateRecord, TAU_DIST};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeximinError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
}

/// Outcome of comparing `v` against `u` in the leximin order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeximinOrdering {
    StrictlyPreferred,
    Equivalent,
    StrictlyDispreferred,
}

impl LeximinOrdering {
    /// Weakly preferred: strictly preferred or equivalent.
    pub fn is_weakly_preferred(self) -> bool {
        self != LeximinOrdering::StrictlyDispreferred
    }

    pub fn reverse(self) -> Self {
        match self {
            Self::StrictlyPreferred => Self::StrictlyDispreferred,
            Self::Equivalent => Self::Equivalent,
            Self::StrictlyDispreferred => Self::StrictlyPreferred,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), LeximinError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(LeximinError::AlphaOutOfRange(alpha))
    }
}

/// Sorts in non-decreasing order, stable on ties.
pub fn sorted_ascending(v: &ExpectedVector) -> ExpectedVector {
    let mut out = v.0.clone();
    out.sort_by(|a, b| a.total_cmp(b));
    ExpectedVector(out)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Compares `v` with `u` in the leximin order. The first sorted coordinate
/// whose values differ by more than `tol` decides.
pub fn leximin_compare(
    v: &ExpectedVector,
    u: &ExpectedVector,
    tol: f64,
) -> Result<LeximinOrdering, LeximinError> {
    if v.len() != u.len() {
        return Err(LeximinError::LengthMismatch(v.len(), u.len()));
    }
    let (vs, us) = (sorted(&v.0), sorted(&u.0));
    for (a, b) in vs.iter().zip(&us) {
        if (a - b).abs() > tol {
            return Ok(if a > b {
                LeximinOrdering::StrictlyPreferred
            } else {
                LeximinOrdering::StrictlyDispreferred
            });
        }
    }
    Ok(LeximinOrdering::Equivalent)
}

/// Leximin comparison as a total [`Ordering`] (greater = better).
pub fn leximin_cmp(v: &[f64], u: &[f64], tol: f64) -> Ordering {
    match leximin_compare(&ExpectedVector(v.to_vec()), &ExpectedVector(u.to_vec()), tol) {
        Ok(LeximinOrdering::StrictlyPreferred) => Ordering::Greater,
        Ok(LeximinOrdering::StrictlyDispreferred) => Ordering::Less,
        _ => Ordering::Equal,
    }
}

/// `candidate ⪰ alpha * optimal`, which (given that `optimal` is the
/// leximin-optimal expected vector) is equivalent to `candidate ⪰ alpha * E(x)`
/// for every lottery `x`.
pub fn verify_alpha_leximin_approx(
    candidate: &ExpectedVector,
    optimal: &ExpectedVector,
    alpha: f64,
    tol: f64,
) -> Result<bool, LeximinError> {
    check_alpha(alpha)?;
    Ok(leximin_compare(candidate, &optimal.scaled(alpha), tol)?.is_weakly_preferred())
}

/// `x` is alpha-preferred over `y`: some `k` has `x↑_i >= y↑_i` for `i < k` and
/// `x↑_k > y↑_k / alpha`.
pub fn alpha_preferred(x: &ExpectedVector, y: &ExpectedVector, alpha: f64, tol: f64) -> bool {
    let (xs, ys) = (sorted(&x.0), sorted(&y.0));
    for (a, b) in xs.iter().zip(&ys) {
        if *a > b / alpha + tol {
            return true;
        }
        if *a < b - tol {
            return false;
        }
    }
    false
}

/// Approximation in the sense that no member of `all_vectors` is
/// alpha-preferred over `candidate`.
pub fn hartman_approx(
    candidate: &ExpectedVector,
    all_vectors: &[ExpectedVector],
    alpha: f64,
    tol: f64,
) -> bool {
    !all_vectors
        .iter()
        .any(|x| alpha_preferred(x, candidate, alpha, tol))
}

/// Coordinate-wise approximation: every sorted entry of `candidate` is at
/// least `alpha` times the matching sorted entry of `optimal`.
pub fn elementwise_approx(
    candidate: &ExpectedVector,
    optimal: &ExpectedVector,
    alpha: f64,
    tol: f64,
) -> Result<bool, LeximinError> {
    if candidate.len() != optimal.len() {
        return Err(LeximinError::LengthMismatch(candidate.len(), optimal.len()));
    }
    let (cs, os) = (sorted(&candidate.0), sorted(&optimal.0));
    Ok(cs.iter().zip(&os).all(|(c, o)| *c >= alpha * o - tol))
}

fn rescale(x: &SparseDistribution, factor: f64) -> SparseDistribution {
    let (weights, registry) = x.parts();
    let degenerate = StateHandle::degenerate();
    let mut new_weights: BTreeMap<StateHandle, f64> = BTreeMap::new();
    let mut new_registry = registry.clone();
    let mut mass = 0.0;
    for (h, p) in weights {
        if h.is_degenerate() {
            continue;
        }
        let w = p * factor;
        mass += w;
        new_weights.insert(h.clone(), w);
    }
    let rest = (1.0 - mass).max(0.0);
    if rest > 0.0 {
        new_weights.insert(degenerate.clone(), rest);
        new_registry
            .entry(degenerate)
            .or_insert_with(|| StateRecord::degenerate(x.agents()));
    } else {
        new_registry.remove(&degenerate);
    }
    SparseDistribution::from_parts_unchecked(x.agents(), new_weights, new_registry)
}

/// Scales every non-degenerate probability by `alpha` and moves the rest to
/// the degenerate state. The result places at most `alpha` mass outside the
/// degenerate state and has expectations `alpha * E(x)`.
pub fn downgrade(x: &SparseDistribution, alpha: f64) -> Result<SparseDistribution, ModelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::AlphaOutOfRange(alpha));
    }
    Ok(rescale(x, alpha))
}

/// Inverse of [`downgrade`]: requires non-degenerate mass at most `alpha`.
pub fn upgrade(x: &SparseDistribution, alpha: f64) -> Result<SparseDistribution, ModelError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::AlphaOutOfRange(alpha));
    }
    let mass = x.non_degenerate_mass();
    if mass > alpha + TAU_DIST {
        return Err(ModelError::MassExceedsAlpha { mass, alpha });
    }
    Ok(rescale(x, 1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Outcome, UtilityVector};
    use proptest::prelude::*;

    fn ev(v: &[f64]) -> ExpectedVector {
        ExpectedVector(v.to_vec())
    }

    fn state(tag: u8, utilities: &[f64]) -> StateRecord {
        StateRecord {
            handle: StateHandle::from_bytes(vec![tag]),
            utilities: UtilityVector::new(utilities.to_vec()).unwrap(),
            payload: Outcome::Listed { index: tag as usize },
        }
    }

    #[test]
    fn sorting_examples() {
        let s = sorted_ascending(&ev(&[1.0, 4.0, 7.0, 1.0]));
        assert_eq!(s.0, vec![1.0, 1.0, 4.0, 7.0]);
        assert_eq!(s.0[2], 4.0);
        assert!(sorted_ascending(&ev(&[])).is_empty());
        assert_eq!(sorted_ascending(&ev(&[5.0, 5.0, 5.0])).0, vec![5.0; 3]);
    }

    #[test]
    fn compare_examples() {
        use LeximinOrdering::*;
        let c = |a: &[f64], b: &[f64]| leximin_compare(&ev(a), &ev(b), 1e-9).unwrap();
        assert_eq!(c(&[9.0, 50.0, 50.0], &[9.0, 9.0, 90.0]), StrictlyPreferred);
        assert_eq!(c(&[1.0, 4.0, 7.0, 1.0], &[7.0, 1.0, 1.0, 4.0]), Equivalent);
        assert_eq!(c(&[0.0, 0.0], &[1.0, 0.0]), StrictlyDispreferred);
        assert!(leximin_compare(&ev(&[1.0]), &ev(&[1.0, 2.0]), 1e-9).is_err());
    }

    #[test]
    fn alpha_approx_examples() {
        let opt = ev(&[10.0, 10.0, 100.0]);
        assert!(verify_alpha_leximin_approx(&ev(&[9.0, 9.0, 90.0]), &opt, 0.9, 1e-9).unwrap());
        assert!(!verify_alpha_leximin_approx(&ev(&[8.0, 1000.0, 1000.0]), &opt, 0.9, 1e-9).unwrap());
        assert!(verify_alpha_leximin_approx(&opt, &opt, 1.0, 1e-9).unwrap());
        assert!(verify_alpha_leximin_approx(&opt, &opt, 0.0, 1e-9).is_err());
        assert!(verify_alpha_leximin_approx(&opt, &opt, 1.5, 1e-9).is_err());
    }

    #[test]
    fn hartman_examples() {
        let set = [
            ev(&[10.0, 10.0, 100.0]),
            ev(&[9.0, 9.0, 90.0]),
            ev(&[9.0, 50.0, 50.0]),
            ev(&[8.0, 1000.0, 1000.0]),
        ];
        assert!(hartman_approx(&set[2], &set, 0.9, 1e-9));
        assert!(!hartman_approx(&set[1], &set, 0.9, 1e-9));
        assert!(alpha_preferred(&set[2], &set[1], 0.9, 1e-9));
        assert!(hartman_approx(&set[0], &set[..1], 0.9, 1e-9));
    }

    #[test]
    fn elementwise_examples() {
        let opt = ev(&[10.0, 10.0, 100.0]);
        assert!(elementwise_approx(&ev(&[9.0, 9.0, 90.0]), &opt, 0.9, 1e-9).unwrap());
        assert!(!elementwise_approx(&ev(&[9.0, 50.0, 50.0]), &opt, 0.9, 1e-9).unwrap());
        assert!(elementwise_approx(&opt, &opt, 1.0, 0.0).unwrap());
    }

    #[test]
    fn downgrade_and_upgrade_examples() {
        let s1 = state(1, &[10.0, 10.0]);
        let x = SparseDistribution::point_mass(s1.clone());
        let down = downgrade(&x, 0.9).unwrap();
        assert!((down.probability(&s1.handle) - 0.9).abs() < 1e-12);
        assert!((down.degenerate_mass() - 0.1).abs() < 1e-12);
        let up = upgrade(&down, 0.9).unwrap();
        assert!((up.probability(&s1.handle) - 1.0).abs() < 1e-12);
        assert_eq!(up.support_size(), 1);

        assert_eq!(downgrade(&x, 1.0).unwrap(), x);
        let d = SparseDistribution::degenerate(2);
        assert_eq!(downgrade(&d, 0.3).unwrap(), d);
        assert!(downgrade(&x, 0.0).is_err());
        assert!(matches!(upgrade(&x, 0.5), Err(ModelError::MassExceedsAlpha { .. })));
    }

    fn arb_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..100.0, n)
    }

    fn arb_distribution() -> impl Strategy<Value = SparseDistribution> {
        (1usize..4, 1usize..6).prop_flat_map(|(n, k)| {
            (
                prop::collection::vec(arb_vec(n), k),
                prop::collection::vec(0.01f64..1.0, k + 1),
            )
                .prop_map(move |(cols, raw)| {
                    let total: f64 = raw.iter().sum();
                    let mut entries: Vec<(StateRecord, f64)> = cols
                        .iter()
                        .enumerate()
                        .map(|(j, c)| (state(j as u8 + 1, c), raw[j] / total))
                        .collect();
                    entries.push((StateRecord::degenerate(n), raw[k] / total));
                    SparseDistribution::new(n, entries).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn trichotomy(v in arb_vec(4), u in arb_vec(4)) {
            let a = leximin_compare(&ev(&v), &ev(&u), 1e-9).unwrap();
            let b = leximin_compare(&ev(&u), &ev(&v), 1e-9).unwrap();
            prop_assert_eq!(a, b.reverse());
        }

        #[test]
        fn permutation_invariance(v in arb_vec(5), u in arb_vec(5), rot in 0usize..5) {
            let mut w = v.clone();
            w.rotate_left(rot);
            w.reverse();
            prop_assert_eq!(
                leximin_compare(&ev(&v), &ev(&u), 1e-9).unwrap(),
                leximin_compare(&ev(&w), &ev(&u), 1e-9).unwrap()
            );
        }

        #[test]
        fn positive_scaling_preserves_order(v in arb_vec(3), u in arb_vec(3), alpha in 0.05f64..1.0) {
            let plain = leximin_compare(&ev(&v), &ev(&u), 0.0).unwrap();
            let scaled = leximin_compare(&ev(&v).scaled(alpha), &ev(&u).scaled(alpha), 0.0).unwrap();
            prop_assert_eq!(plain, scaled);
        }

        #[test]
        fn downgrade_scales_expectations(x in arb_distribution(), alpha in 0.05f64..=1.0) {
            let down = downgrade(&x, alpha).unwrap();
            prop_assert!(down.non_degenerate_mass() <= alpha + TAU_DIST);
            prop_assert!((down.total() - 1.0).abs() < TAU_DIST);
            let e = x.expected_utilities();
            let d = down.expected_utilities();
            for (a, b) in e.0.iter().zip(&d.0) {
                prop_assert!((alpha * a - b).abs() <= TAU_DIST * (1.0 + a.abs()));
            }
        }

        #[test]
        fn upgrade_inverts_downgrade(x in arb_distribution(), alpha in 0.05f64..=1.0) {
            let round = upgrade(&downgrade(&x, alpha).unwrap(), alpha).unwrap();
            for (r, p) in x.iter() {
                prop_assert!((round.probability(&r.handle) - p).abs() < 1e-9);
            }
            let down = downgrade(&x, alpha).unwrap();
            let back = downgrade(&upgrade(&down, alpha).unwrap(), alpha).unwrap();
            for (r, p) in down.iter() {
                prop_assert!((back.probability(&r.handle) - p).abs() < 1e-9);
            }
        }
    }
}
