//! Welfare maximizers for allocating indivisible goods.

/// Gives every good to the agent with the largest `c_i * u_i(g)`; ties go
/// to the lowest agent index. Exact for additive utilities.
///
/// `values[i][g]` is agent `i`'s value for good `g`. Returns the owner of
/// each good.
pub fn greedy_additive_allocate(values: &[Vec<f64>], weights: &[f64]) -> Vec<usize> {
    let goods = values.first().map_or(0, |v| v.len());
    (0..goods)
        .map(|g| {
            let mut owner = 0;
            let mut best = f64::NEG_INFINITY;
            for (i, row) in values.iter().enumerate() {
                let w = weights[i] * row[g];
                if w > best {
                    best = w;
                    owner = i;
                }
            }
            owner
        })
        .collect()
}

/// Item-by-item greedy on weighted marginal gains, a 1/2-approximation of
/// utilitarian welfare for monotone submodular utilities.
///
/// `value(i, bundle)` evaluates agent `i`'s utility for a set of goods.
pub fn greedy_submodular_allocate<F>(agents: usize, goods: usize, value: F, weights: &[f64]) -> Vec<usize>
where
    F: Fn(usize, &[usize]) -> f64,
{
    let mut bundles: Vec<Vec<usize>> = vec![Vec::new(); agents];
    let mut current: Vec<f64> = (0..agents).map(|i| value(i, &[])).collect();
    let mut owner = vec![0; goods];
    for g in 0..goods {
        let mut best = (f64::NEG_INFINITY, 0, 0.0);
        for i in 0..agents {
            bundles[i].push(g);
            let with = value(i, &bundles[i]);
            bundles[i].pop();
            let gain = weights[i] * (with - current[i]);
            if gain > best.0 {
                best = (gain, i, with);
            }
        }
        let (_, i, with) = best;
        bundles[i].push(g);
        current[i] = with;
        owner[g] = i;
    }
    owner
}
