//! Small numeric helpers shared by the fitting code.

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed split, so the result depends
/// only on the order of `values`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

/// Pairwise sum of `f` over `items`.
pub fn pairwise_sum_by<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    let values: Vec<f64> = items.iter().map(f).collect();
    pairwise_sum(&values)
}
