use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlations {
    pub pearson: f64,
    pub spearman: f64,
    pub kendall_tau_b: f64,
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::EmptyInput);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return Err(StatsError::DegenerateInput);
    }
    Ok(())
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties given their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = avg;
        }
        i = j;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_pair(a, b)?;
    pearson(&ranks(a), &ranks(b))
}

/// Sum of t·(t−1)/2 over runs of equal adjacent items.
fn tied_pairs<T>(items: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in items.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts by `y` with a merge sort, returning the number of swaps needed
/// (the count of discordant pairs among those not tied in `x`).
fn merge_count(items: &mut [(f64, f64)], buf: &mut Vec<(f64, f64)>) -> u64 {
    let n = items.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut items[..mid], buf) + merge_count(&mut items[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if items[j].1 < items[i].1 {
            swaps += (mid - i) as u64;
            buf.push(items[j]);
            j += 1;
        } else {
            buf.push(items[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&items[i..mid]);
    buf.extend_from_slice(&items[j..n]);
    items.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in O(n log n).
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_pair(a, b)?;
    let mut pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let n = pairs.len() as u64;
    let n0 = n * (n - 1) / 2;
    let n1 = tied_pairs(&pairs, |p, q| p.0 == q.0);
    let n3 = tied_pairs(&pairs, |p, q| p == q);
    let mut buf = Vec::with_capacity(pairs.len());
    let swaps = merge_count(&mut pairs, &mut buf);
    let n2 = tied_pairs(&pairs, |p, q| p.1 == q.1);
    let num = n0 as f64 - n1 as f64 - n2 as f64 + n3 as f64 - 2.0 * swaps as f64;
    let den = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((num / den).clamp(-1.0, 1.0))
}

pub fn correlations(a: &[f64], b: &[f64]) -> Result<Correlations, StatsError> {
    Ok(Correlations {
        pearson: pearson(a, b)?,
        spearman: spearman(a, b)?,
        kendall_tau_b: kendall_tau_b(a, b)?,
    })
}
