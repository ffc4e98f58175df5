//! 0/1 knapsack: exact dynamic program over capacity and the value-scaling
//! FPTAS.

use super::BlackBoxError;

/// Checks that every weight is a non-negative integer and converts them.
pub fn integral_weights(weights: &[f64]) -> Result<Vec<u64>, BlackBoxError> {
    weights
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.is_finite() && value >= 0.0 && value.fract() == 0.0 {
                Ok(value as u64)
            } else {
                Err(BlackBoxError::NonIntegralWeight { index, value })
            }
        })
        .collect()
}

fn check_lengths(values: &[f64], weights: &[u64]) -> Result<(), BlackBoxError> {
    if values.len() != weights.len() {
        return Err(BlackBoxError::LengthMismatch(values.len(), weights.len()));
    }
    Ok(())
}

/// Items worth considering: positive value and fitting on their own.
fn useful(values: &[f64], weights: &[u64], capacity: u64) -> Vec<usize> {
    (0..values.len())
        .filter(|&j| values[j] > 0.0 && weights[j] <= capacity)
        .collect()
}

/// Maximum-value subset with total weight at most `capacity`. Returns sorted
/// indices. Runs in `O(items * capacity)`.
pub fn knapsack_exact(values: &[f64], weights: &[u64], capacity: u64) -> Result<Vec<usize>, BlackBoxError> {
    check_lengths(values, weights)?;
    let items = useful(values, weights, capacity);
    let cap = capacity as usize;
    let mut best = vec![0.0f64; cap + 1];
    let mut take = vec![vec![false; cap + 1]; items.len()];
    for (k, &j) in items.iter().enumerate() {
        let w = weights[j] as usize;
        for c in (w..=cap).rev() {
            let with = best[c - w] + values[j];
            if with > best[c] {
                best[c] = with;
                take[k][c] = true;
            }
        }
    }
    let mut chosen = Vec::new();
    let mut c = cap;
    for k in (0..items.len()).rev() {
        if take[k][c] {
            chosen.push(items[k]);
            c -= weights[items[k]] as usize;
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Subset with value at least `(1 - eps) * OPT`, by rounding values down to
/// multiples of `eps * vmax / m` and running the min-weight DP over scaled
/// profit.
pub fn knapsack_fptas(
    values: &[f64],
    weights: &[u64],
    capacity: u64,
    eps: f64,
) -> Result<Vec<usize>, BlackBoxError> {
    check_lengths(values, weights)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BlackBoxError::FptasEpsilon(eps));
    }
    let items = useful(values, weights, capacity);
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let vmax = items.iter().map(|&j| values[j]).fold(0.0, f64::max);
    let scale = eps * vmax / items.len() as f64;
    let profits: Vec<usize> = items.iter().map(|&j| (values[j] / scale).floor() as usize).collect();
    let total: usize = profits.iter().sum();

    const NONE: u64 = u64::MAX;
    let mut min_weight = vec![NONE; total + 1];
    min_weight[0] = 0;
    let mut take = vec![vec![false; total + 1]; items.len()];
    for (k, &j) in items.iter().enumerate() {
        let p = profits[k];
        if p == 0 {
            continue;
        }
        for q in (p..=total).rev() {
            let prev = min_weight[q - p];
            if prev == NONE {
                continue;
            }
            let w = prev + weights[j];
            if w <= capacity && w < min_weight[q] {
                min_weight[q] = w;
                take[k][q] = true;
            }
        }
    }
    let mut q = (0..=total).rev().find(|&q| min_weight[q] != NONE).unwrap_or(0);
    let mut chosen = Vec::new();
    for k in (0..items.len()).rev() {
        if take[k][q] {
            chosen.push(items[k]);
            q -= profits[k];
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn subset_value(values: &[f64], chosen: &[usize]) -> f64 {
    chosen.iter().map(|&j| values[j]).sum()
}

pub fn subset_weight(weights: &[u64], chosen: &[usize]) -> u64 {
    chosen.iter().map(|&j| weights[j]).sum()
}
