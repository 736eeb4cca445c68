//! (m, b)-rearrangeability with explicit certificates.
//!
//! A row `a` is `(m, b)`-rearrangeable if the multiset containing `a_j` items
//! of weight `b_j` splits into groups each summing exactly to `m`; the
//! certificate is the nonnegative matrix `C` with `1·C = a` and `C·b = m·1`.
//! The checker is complete: exhaustive backtracking over aggregated weight
//! counts with memoization of infeasible residuals, so a no-partition answer
//! is a proof at the tested target. A configurable node budget converts
//! pathological searches into an explicit "budget exhausted" outcome.
//!
//! The greedy constructive decomposition (many unit weights, all weights
//! `<= l < m`, at least `p·l` units) is used as a fast path when its
//! hypotheses hold, and row-wise for powers once every matrix entry exceeds
//! the square of the largest weight.

use crate::error::{Error, Result};

pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

/// Certificate for one row: `groups` is the `p × r` matrix `C`
/// (group `s` holds `C[s][j]` items of weight `b_j`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowCertificate {
    pub groups: Vec<Vec<u64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowFailure {
    /// `a·b` is not divisible by `m`.
    Divisibility,
    /// Complete search exhausted: no partition exists.
    NoPartition,
    /// Node budget exhausted; result unknown.
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowOutcome {
    Certified(RowCertificate),
    Failed(RowFailure),
}

impl RowOutcome {
    pub fn certificate(&self) -> Option<&RowCertificate> {
        match self {
            RowOutcome::Certified(c) => Some(c),
            RowOutcome::Failed(_) => None,
        }
    }
}

/// Checks `1·C = a` and `C·b = (m, ..., m)` exactly. Pure verification,
/// independent of how the certificate was produced.
pub fn validate_certificate(cert: &RowCertificate, a: &[u64], b: &[u64], m: u64) -> bool {
    let r = a.len();
    if b.len() != r || cert.groups.iter().any(|g| g.len() != r) {
        return false;
    }
    for j in 0..r {
        if cert.groups.iter().map(|g| g[j]).sum::<u64>() != a[j] {
            return false;
        }
    }
    cert.groups
        .iter()
        .all(|g| g.iter().zip(b).map(|(c, w)| c * w).sum::<u64>() == m)
}

/// Decide `(m, b)`-rearrangeability of the row `a` and construct a
/// certificate. Complete: `Failed(NoPartition)` proves non-rearrangeability.
pub fn rearrange_row(a: &[u64], b: &[u64], m: u64, budget: u64) -> Result<RowOutcome> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "row has {} entries, b has {}",
            a.len(),
            b.len()
        )));
    }
    if b.iter().any(|&w| w == 0) || m == 0 {
        return Err(Error::Precondition("b must be positive and m >= 1".into()));
    }
    let total = a
        .iter()
        .zip(b)
        .try_fold(0u64, |acc, (x, w)| x.checked_mul(*w)?.checked_add(acc))
        .ok_or(Error::Overflow("a·b"))?;
    if total == 0 {
        return Ok(RowOutcome::Certified(RowCertificate { groups: vec![] }));
    }
    if total % m != 0 {
        return Ok(RowOutcome::Failed(RowFailure::Divisibility));
    }
    let p = total / m;
    // no group of sum m can contain an item heavier than m
    if a.iter().zip(b).any(|(&x, &w)| x > 0 && w > m) {
        return Ok(RowOutcome::Failed(RowFailure::NoPartition));
    }

    let ell = *b.iter().max().unwrap();
    let fast_path = b[0] == 1 && a[0] >= ell * ell && m > ell && p <= ell;
    if fast_path {
        let weights = aggregate_weights(a, b);
        if let Ok(groups) = decompose_lemma_counts(&weights, m, ell) {
            let cert = groups_to_certificate(&pair_up(&groups), a, b);
            debug_assert!(validate_certificate(&cert, a, b, m));
            return Ok(RowOutcome::Certified(cert));
        }
    }

    let weights = aggregate_weights(a, b);
    match search_partition(&weights, m, budget) {
        SearchResult::Found(groups) => {
            let cert = groups_to_certificate(&groups, a, b);
            debug_assert!(validate_certificate(&cert, a, b, m));
            debug_assert!(a.iter().zip(b).filter(|(&x, _)| x > 0).all(|(_, &w)| w <= m));
            Ok(RowOutcome::Certified(cert))
        }
        SearchResult::Infeasible => Ok(RowOutcome::Failed(RowFailure::NoPartition)),
        SearchResult::OutOfBudget => Ok(RowOutcome::Failed(RowFailure::BudgetExhausted)),
    }
}

/// Flat weight groups -> (weight, count) groups, descending by weight.
fn pair_up(groups: &[Vec<u64>]) -> Vec<Vec<(u64, u64)>> {
    groups
        .iter()
        .map(|g| {
            let mut sorted = g.clone();
            sorted.sort_unstable_by_key(|&w| std::cmp::Reverse(w));
            let mut agg: Vec<(u64, u64)> = Vec::new();
            for w in sorted {
                match agg.last_mut() {
                    Some((x, c)) if *x == w => *c += 1,
                    _ => agg.push((w, 1)),
                }
            }
            agg
        })
        .collect()
}

/// Distinct weights with multiplicities, descending by weight.
fn aggregate_weights(a: &[u64], b: &[u64]) -> Vec<(u64, u64)> {
    let mut sorted: Vec<(u64, u64)> = Vec::new();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(b[j]));
    for j in order {
        if a[j] == 0 {
            continue;
        }
        match sorted.last_mut() {
            Some((w, c)) if *w == b[j] => *c += a[j],
            _ => sorted.push((b[j], a[j])),
        }
    }
    sorted
}

/// Convert weight groups back to per-class count rows, consuming classes of
/// equal weight in index order.
fn groups_to_certificate(groups: &[Vec<(u64, u64)>], a: &[u64], b: &[u64]) -> RowCertificate {
    let r = a.len();
    let mut remaining = a.to_vec();
    let rows = groups
        .iter()
        .map(|group| {
            let mut row = vec![0u64; r];
            for &(weight, mut need) in group {
                for j in 0..r {
                    if need == 0 {
                        break;
                    }
                    if b[j] == weight && remaining[j] > 0 {
                        let take = remaining[j].min(need);
                        row[j] += take;
                        remaining[j] -= take;
                        need -= take;
                    }
                }
                debug_assert_eq!(need, 0, "weight groups exceed class multiplicities");
            }
            row
        })
        .collect();
    RowCertificate { groups: rows }
}

enum SearchResult {
    Found(Vec<Vec<(u64, u64)>>),
    Infeasible,
    OutOfBudget,
}

/// Complete backtracking partition of a weight multiset into groups summing
/// to `m`. Groups are built one at a time; each new group is forced to
/// contain the heaviest remaining item (groups are unordered, so this loses
/// no solutions). Residual count vectors proven infeasible are memoized.
fn search_partition(weights: &[(u64, u64)], m: u64, budget: u64) -> SearchResult {
    let mut counts: Vec<u64> = weights.iter().map(|&(_, c)| c).collect();
    let ws: Vec<u64> = weights.iter().map(|&(w, _)| w).collect();
    let mut memo: std::collections::HashSet<Vec<u64>> = std::collections::HashSet::new();
    let mut budget = budget;
    let mut groups: Vec<Vec<(u64, u64)>> = Vec::new();
    match solve(&ws, &mut counts, m, &mut memo, &mut budget, &mut groups) {
        Some(true) => SearchResult::Found(groups),
        Some(false) => SearchResult::Infeasible,
        None => SearchResult::OutOfBudget,
    }
}

fn solve(
    ws: &[u64],
    counts: &mut Vec<u64>,
    m: u64,
    memo: &mut std::collections::HashSet<Vec<u64>>,
    budget: &mut u64,
    groups: &mut Vec<Vec<(u64, u64)>>,
) -> Option<bool> {
    let first = match counts.iter().position(|&c| c > 0) {
        None => return Some(true),
        Some(i) => i,
    };
    if memo.contains(counts.as_slice()) {
        return Some(false);
    }
    let mut group: Vec<(usize, u64)> = Vec::new();
    let found = fill_group(ws, counts, m, first, true, memo, budget, groups, &mut group)?;
    if !found {
        memo.insert(counts.clone());
    }
    Some(found)
}

/// Choose how many items of each weight type (from `idx` on) go into the
/// current group; `gap` m minus what's already taken. The first type must
/// contribute at least one item. Take-counts are tried largest first.
#[allow(clippy::too_many_arguments)]
fn fill_group(
    ws: &[u64],
    counts: &mut Vec<u64>,
    gap: u64,
    idx: usize,
    must_take: bool,
    memo: &mut std::collections::HashSet<Vec<u64>>,
    budget: &mut u64,
    groups: &mut Vec<Vec<(u64, u64)>>,
    group: &mut Vec<(usize, u64)>,
) -> Option<bool> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    if gap == 0 {
        groups.push(group.iter().map(|&(i, c)| (ws[i], c)).collect());
        let ok = solve(ws, counts, sum_of(groups.last().unwrap()), memo, budget, groups);
        // m is the group sum by construction
        match ok {
            Some(true) => return Some(true),
            Some(false) | None => {
                groups.pop();
                return ok.map(|_| false);
            }
        }
    }
    if idx == ws.len() {
        return Some(false);
    }
    let max_take = (gap / ws[idx]).min(counts[idx]);
    let min_take = if must_take { 1 } else { 0 };
    if must_take && max_take == 0 {
        return Some(false);
    }
    let mut take = max_take;
    loop {
        if take >= min_take {
            counts[idx] -= take;
            if take > 0 {
                group.push((idx, take));
            }
            let res = fill_group(
                ws,
                counts,
                gap - take * ws[idx],
                idx + 1,
                false,
                memo,
                budget,
                groups,
                group,
            );
            if take > 0 {
                group.pop();
            }
            counts[idx] += take;
            match res {
                Some(true) => return Some(true),
                None => return None,
                Some(false) => {}
            }
        }
        if take == min_take {
            break;
        }
        take -= 1;
    }
    Some(false)
}

fn sum_of(group: &[(u64, u64)]) -> u64 {
    group.iter().map(|&(w, c)| w * c).sum()
}

// ---------------------------------------------------------------------------
// Constructive decomposition (many units)
// ---------------------------------------------------------------------------

/// Partition a weight multiset (given as `(weight, count)` pairs) into groups
/// summing exactly to `m`, under the hypotheses: total = p·m, every weight
/// `<= l < m`, and at least `p·l` items of weight 1. Greedy construction:
/// reserve `p·l` units; for each group pick a maximal largest-first
/// sub-multiset of free items with sum < m, then top up with reserved units.
pub fn decompose_lemma45(weights: &[u64], m: u64, l: u64) -> std::result::Result<Vec<Vec<u64>>, String> {
    let mut agg: Vec<(u64, u64)> = Vec::new();
    let mut sorted = weights.to_vec();
    sorted.sort_by_key(|&w| std::cmp::Reverse(w));
    for w in sorted {
        match agg.last_mut() {
            Some((x, c)) if *x == w => *c += 1,
            _ => agg.push((w, 1)),
        }
    }
    decompose_lemma_counts(&agg, m, l)
}

fn decompose_lemma_counts(
    weights: &[(u64, u64)],
    m: u64,
    l: u64,
) -> std::result::Result<Vec<Vec<u64>>, String> {
    let total: u64 = weights.iter().map(|&(w, c)| w * c).sum();
    if total % m != 0 {
        return Err(format!("total weight {total} is not a multiple of m = {m}"));
    }
    let p = total / m;
    if p == 0 {
        return Ok(Vec::new());
    }
    if l >= m {
        return Err(format!("need l < m, got l = {l}, m = {m}"));
    }
    if let Some(&(w, _)) = weights.iter().find(|&&(w, _)| w > l) {
        return Err(format!("weight {w} exceeds l = {l}"));
    }
    let units: u64 = weights
        .iter()
        .filter(|&&(w, _)| w == 1)
        .map(|&(_, c)| c)
        .sum();
    if units < p * l {
        return Err(format!(
            "need at least p·l = {} unit weights, got {units}",
            p * l
        ));
    }

    let mut reserve = p * l;
    // free pool: non-units plus units beyond the reserve, descending
    let mut free: Vec<(u64, u64)> = weights
        .iter()
        .filter(|&&(w, _)| w > 1)
        .copied()
        .collect();
    free.sort_by_key(|&(w, _)| std::cmp::Reverse(w));
    let extra_units = units - reserve;
    if extra_units > 0 {
        free.push((1, extra_units));
    }

    let mut groups = Vec::with_capacity(p as usize);
    for _ in 0..p {
        let mut group: Vec<u64> = Vec::new();
        let mut sum = 0u64;
        for entry in free.iter_mut() {
            let (w, ref mut c) = *entry;
            while *c > 0 && sum + w < m {
                sum += w;
                *c -= 1;
                group.push(w);
            }
        }
        free.retain(|&(_, c)| c > 0);
        let top_up = m - sum;
        if top_up > reserve {
            return Err(format!(
                "internal: reserve exhausted (need {top_up}, have {reserve})"
            ));
        }
        reserve -= top_up;
        group.extend(std::iter::repeat(1).take(top_up as usize));
        groups.push(group);
    }
    if !free.is_empty() || reserve != 0 {
        return Err("internal: items left over after p groups".into());
    }
    Ok(groups)
}

// ---------------------------------------------------------------------------
// Matrix powers
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PowerCertificate {
    pub k: u32,
    pub target: u64,
    pub matrix_power: Vec<Vec<u64>>,
    pub rows: Vec<RowCertificate>,
}

#[derive(Clone, Debug)]
pub struct PowerAttempt {
    pub k: u32,
    pub target: u64,
    /// `(row index, failure)` for each uncertified row.
    pub row_failures: Vec<(usize, RowFailure)>,
}

#[derive(Clone, Debug)]
pub enum PowerOutcome {
    Certified(PowerCertificate),
    Failed(Vec<PowerAttempt>),
}

fn mat_mul_u64(a: &[Vec<u64>], b: &[Vec<u64>]) -> Result<Vec<Vec<u64>>> {
    let r = a.len();
    let mut out = vec![vec![0u64; r]; r];
    for i in 0..r {
        for k in 0..r {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..r {
                let term = a[i][k]
                    .checked_mul(b[k][j])
                    .ok_or(Error::Overflow("matrix power"))?;
                out[i][j] = out[i][j]
                    .checked_add(term)
                    .ok_or(Error::Overflow("matrix power"))?;
            }
        }
    }
    Ok(out)
}

/// Search `k = 1..k_max` for the least `k` such that `A^k` is
/// `(m^k, b)`-rearrangeable, with full per-row certificates.
///
/// Requires `A·b = m·b` and `b_1 = 1`. Once every entry of `A^k` exceeds
/// `(max b)²` and `m^k > max b`, rows are certified by the greedy
/// decomposition (each row's group count is `b_i <= max b`); otherwise each
/// row goes through the complete search.
pub fn rearrange_power(
    matrix: &[Vec<u64>],
    b: &[u64],
    m: u64,
    k_max: u32,
    budget: u64,
) -> Result<PowerOutcome> {
    let r = matrix.len();
    if r == 0 || matrix.iter().any(|row| row.len() != r) || b.len() != r {
        return Err(Error::Dimension("matrix/b shape mismatch".into()));
    }
    if b[0] != 1 {
        return Err(Error::Precondition("b_1 = 1 required (root class)".into()));
    }
    for i in 0..r {
        let lhs: u64 = matrix[i].iter().zip(b).map(|(a, w)| a * w).sum();
        if lhs != m * b[i] {
            return Err(Error::Precondition(format!(
                "eigen relation A·b = m·b fails at row {i}"
            )));
        }
    }
    let ell = *b.iter().max().unwrap();

    let mut attempts = Vec::new();
    let mut power = matrix.to_vec();
    let mut target = m;
    for k in 1..=k_max {
        if k > 1 {
            power = mat_mul_u64(&power, matrix)?;
            target = target.checked_mul(m).ok_or(Error::Overflow("m^k"))?;
        }
        let greedy_everywhere =
            target > ell && power.iter().flatten().all(|&e| e > ell * ell);
        let mut rows = Vec::with_capacity(r);
        let mut failures = Vec::new();
        for (i, row) in power.iter().enumerate() {
            let outcome = if greedy_everywhere {
                match decompose_lemma_counts(&aggregate_weights(row, b), target, ell) {
                    Ok(groups) => {
                        let cert = groups_to_certificate(&pair_up(&groups), row, b);
                        debug_assert!(validate_certificate(&cert, row, b, target));
                        RowOutcome::Certified(cert)
                    }
                    Err(_) => rearrange_row(row, b, target, budget)?,
                }
            } else {
                rearrange_row(row, b, target, budget)?
            };
            match outcome {
                RowOutcome::Certified(cert) => rows.push(cert),
                RowOutcome::Failed(f) => failures.push((i, f)),
            }
        }
        if failures.is_empty() {
            return Ok(PowerOutcome::Certified(PowerCertificate {
                k,
                target,
                matrix_power: power,
                rows,
            }));
        }
        attempts.push(PowerAttempt {
            k,
            target,
            row_failures: failures,
        });
    }
    Ok(PowerOutcome::Failed(attempts))
}

/// Block-stacking certificate for `A²` with target `m²` from per-row
/// certificates of `A` (requires `A·b = m·b`): stack `A[i][j]` copies of
/// `C_j`, then sum every `m` consecutive rows.
pub fn square_certificate(
    matrix: &[Vec<u64>],
    certs: &[RowCertificate],
    b: &[u64],
    m: u64,
) -> Vec<RowCertificate> {
    let r = matrix.len();
    (0..r)
        .map(|i| {
            let mut stacked: Vec<Vec<u64>> = Vec::new();
            for j in 0..r {
                for _ in 0..matrix[i][j] {
                    stacked.extend(certs[j].groups.iter().cloned());
                }
            }
            let rows = stacked
                .chunks(m as usize)
                .map(|chunk| {
                    let mut sum = vec![0u64; b.len()];
                    for row in chunk {
                        for (s, v) in sum.iter_mut().zip(row) {
                            *s += v;
                        }
                    }
                    sum
                })
                .collect();
            RowCertificate { groups: rows }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &[u64], b: &[u64], m: u64) -> RowOutcome {
        rearrange_row(a, b, m, DEFAULT_NODE_BUDGET).unwrap()
    }

    #[test]
    fn row_examples() {
        // single-group row
        let out = check(&[1, 1, 0], &[1, 2, 3], 3);
        let cert = out.certificate().unwrap();
        assert_eq!(cert.groups.len(), 1);
        assert!(validate_certificate(cert, &[1, 1, 0], &[1, 2, 3], 3));

        // two groups of weight 3
        let out = check(&[1, 1, 1], &[1, 2, 3], 3);
        let cert = out.certificate().unwrap();
        assert_eq!(cert.groups.len(), 2);
        assert!(validate_certificate(cert, &[1, 1, 1], &[1, 2, 3], 3));

        // three items of weight 2 cannot form two groups of sum 3
        assert_eq!(
            check(&[0, 3], &[1, 2], 3),
            RowOutcome::Failed(RowFailure::NoPartition)
        );

        // divisibility
        assert_eq!(
            check(&[1, 0], &[1, 2], 3),
            RowOutcome::Failed(RowFailure::Divisibility)
        );

        // zero row: empty certificate
        let out = check(&[0, 0], &[1, 2], 3);
        let cert = out.certificate().unwrap();
        assert!(cert.groups.is_empty());
        assert!(validate_certificate(cert, &[0, 0], &[1, 2], 3));
    }

    #[test]
    fn validate_rejects_corrupted_certificates() {
        let a = [1u64, 1, 1];
        let b = [1u64, 2, 3];
        let good = RowCertificate {
            groups: vec![vec![1, 1, 0], vec![0, 0, 1]],
        };
        assert!(validate_certificate(&good, &a, &b, 3));
        let mut bad = good.clone();
        bad.groups[0][0] += 1;
        assert!(!validate_certificate(&bad, &a, &b, 3));
        // wrong target
        assert!(!validate_certificate(&good, &a, &b, 4));
        // empty certificate only matches the zero row
        let empty = RowCertificate { groups: vec![] };
        assert!(validate_certificate(&empty, &[0, 0, 0], &b, 3));
        assert!(!validate_certificate(&empty, &a, &b, 3));
    }

    #[test]
    fn frozen_square_certificates() {
        // Certificates for A² with target 3 (groups of three level-2 classes):
        // column sums must be the rows of A² = [[2,2,1],[3,3,3],[4,4,5]].
        let b = [1u64, 2, 3];
        let row1 = RowCertificate {
            groups: vec![vec![1, 1, 0], vec![1, 1, 0], vec![0, 0, 1]],
        };
        assert!(validate_certificate(&row1, &[2, 2, 1], &b, 3));
        let row2 = RowCertificate {
            groups: vec![
                vec![1, 1, 0],
                vec![1, 1, 0],
                vec![0, 0, 1],
                vec![1, 1, 0],
                vec![0, 0, 1],
                vec![0, 0, 1],
            ],
        };
        assert!(validate_certificate(&row2, &[3, 3, 3], &b, 3));
        let row3 = RowCertificate {
            groups: vec![
                vec![1, 1, 0],
                vec![1, 1, 0],
                vec![0, 0, 1],
                vec![1, 1, 0],
                vec![0, 0, 1],
                vec![0, 0, 1],
                vec![1, 1, 0],
                vec![0, 0, 1],
                vec![0, 0, 1],
            ],
        };
        assert!(validate_certificate(&row3, &[4, 4, 5], &b, 3));
    }

    #[test]
    fn lemma_decomposition_examples() {
        // {1,1,1,1,2,2}, m=4, l=2: two groups of sum 4
        let groups = decompose_lemma45(&[1, 1, 1, 1, 2, 2], 4, 2).unwrap();
        assert_eq!(groups.len(), 2);
        for g in &groups {
            assert_eq!(g.iter().sum::<u64>(), 4);
        }
        // {1,1,1}, m=3, l=1: one group
        let groups = decompose_lemma45(&[1, 1, 1], 3, 1).unwrap();
        assert_eq!(groups, vec![vec![1, 1, 1]]);
        // {1×6, 2×3}, m=4, l=2: three groups
        let groups = decompose_lemma45(&[1, 1, 1, 1, 1, 1, 2, 2, 2], 4, 2).unwrap();
        assert_eq!(groups.len(), 3);
        for g in &groups {
            assert_eq!(g.iter().sum::<u64>(), 4);
        }
        // violated hypotheses are named
        assert!(decompose_lemma45(&[3, 1, 1, 1], 3, 2).unwrap_err().contains("weight 3"));
        assert!(decompose_lemma45(&[2, 2], 4, 4).unwrap_err().contains("l < m"));
        assert!(decompose_lemma45(&[2, 2], 4, 2).unwrap_err().contains("unit weights"));
    }

    #[test]
    fn lemma_never_fails_under_hypotheses() {
        // randomized hypothesis-satisfying inputs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let l = rng.gen_range(2..=6u64);
            let m = rng.gen_range(l + 1..=l + 8);
            let p = rng.gen_range(1..=5u64);
            // random non-unit items, then pad with units to total p·m
            let mut weights: Vec<u64> = Vec::new();
            let mut sum = 0u64;
            let budget = p * m - p * l; // keep room for the unit reserve
            while sum < budget {
                let w = rng.gen_range(2..=l);
                if sum + w > budget {
                    break;
                }
                weights.push(w);
                sum += w;
            }
            let units = p * m - sum;
            assert!(units >= p * l);
            weights.extend(std::iter::repeat(1).take(units as usize));
            let groups = decompose_lemma45(&weights, m, l).unwrap();
            assert_eq!(groups.len(), p as usize);
            let mut all: Vec<u64> = groups.iter().flatten().copied().collect();
            all.sort_unstable();
            let mut orig = weights.clone();
            orig.sort_unstable();
            assert_eq!(all, orig);
            for g in &groups {
                assert_eq!(g.iter().sum::<u64>(), m);
            }
        }
    }

    #[test]
    fn completeness_against_brute_force() {
        // independent oracle: item-by-item DFS placing every item into some
        // open group (no memoization, no type aggregation)
        fn brute(a: &[u64], b: &[u64], m: u64) -> bool {
            let total: u64 = a.iter().zip(b).map(|(x, w)| x * w).sum();
            if total % m != 0 {
                return false;
            }
            let mut items: Vec<u64> = Vec::new();
            for (x, w) in a.iter().zip(b) {
                items.extend(std::iter::repeat(*w).take(*x as usize));
            }
            items.sort_unstable_by_key(|&w| std::cmp::Reverse(w));
            let p = (total / m) as usize;
            let mut bins = vec![0u64; p];
            fn place(items: &[u64], bins: &mut Vec<u64>, m: u64, idx: usize) -> bool {
                if idx == items.len() {
                    return bins.iter().all(|&s| s == m);
                }
                let mut tried = std::collections::HashSet::new();
                for bi in 0..bins.len() {
                    if bins[bi] + items[idx] <= m && tried.insert(bins[bi]) {
                        bins[bi] += items[idx];
                        if place(items, bins, m, idx + 1) {
                            return true;
                        }
                        bins[bi] -= items[idx];
                    }
                }
                false
            }
            if items.is_empty() {
                return true;
            }
            place(&items, &mut bins, m, 0)
        }

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..150 {
            let r = rng.gen_range(1..=4usize);
            let b: Vec<u64> = (0..r).map(|_| rng.gen_range(1..=6u64)).collect();
            let m = rng.gen_range(1..=9u64);
            let mut a: Vec<u64> = (0..r).map(|_| rng.gen_range(0..=5u64)).collect();
            while a.iter().zip(&b).map(|(x, w)| x * w).sum::<u64>() > 60 {
                let j = rng.gen_range(0..r);
                if a[j] > 0 {
                    a[j] -= 1;
                }
            }
            let expected = brute(&a, &b, m);
            let got = matches!(check(&a, &b, m), RowOutcome::Certified(_));
            assert_eq!(got, expected, "a={a:?} b={b:?} m={m}");
        }
    }

    #[test]
    fn power_search_interval_system() {
        let a = vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]];
        let b = [1u64, 2, 3];
        let out = rearrange_power(&a, &b, 3, 6, DEFAULT_NODE_BUDGET).unwrap();
        match out {
            PowerOutcome::Certified(cert) => {
                assert_eq!(cert.k, 1);
                assert_eq!(cert.target, 3);
                for (row, rc) in a.iter().zip(&cert.rows) {
                    assert!(validate_certificate(rc, row, &b, 3));
                }
            }
            PowerOutcome::Failed(_) => panic!("expected certificates at k = 1"),
        }
    }

    #[test]
    fn power_search_reflected_system_fails_every_k() {
        // rows [0, 3^k] with b = [1,2]: all items weight 2, target 3^k odd
        let a = vec![vec![1, 1], vec![0, 3]];
        let b = [1u64, 2];
        let out = rearrange_power(&a, &b, 3, 3, DEFAULT_NODE_BUDGET).unwrap();
        match out {
            PowerOutcome::Failed(attempts) => {
                assert_eq!(attempts.len(), 3);
                for (i, att) in attempts.iter().enumerate() {
                    assert_eq!(att.k as usize, i + 1);
                    assert_eq!(att.row_failures, vec![(1, RowFailure::NoPartition)]);
                }
            }
            PowerOutcome::Certified(_) => panic!("must not certify"),
        }
    }

    #[test]
    fn square_certificate_construction() {
        let a = vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]];
        let b = [1u64, 2, 3];
        let k1 = match rearrange_power(&a, &b, 3, 1, DEFAULT_NODE_BUDGET).unwrap() {
            PowerOutcome::Certified(c) => c,
            PowerOutcome::Failed(_) => unreachable!(),
        };
        let squared = square_certificate(&a, &k1.rows, &b, 3);
        let a2 = mat_mul_u64(&a, &a).unwrap();
        assert_eq!(a2, vec![vec![2, 2, 1], vec![3, 3, 3], vec![4, 4, 5]]);
        for (row, rc) in a2.iter().zip(&squared) {
            assert!(validate_certificate(rc, row, &b, 9));
        }
    }

    #[test]
    fn power_search_certifies_higher_target_via_k2() {
        // target 9 at k = 2 for the interval system (independently of the
        // block-stacking construction)
        let a = vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]];
        let b = [1u64, 2, 3];
        let a2 = mat_mul_u64(&a, &a).unwrap();
        for row in &a2 {
            let out = rearrange_row(row, &b, 9, DEFAULT_NODE_BUDGET).unwrap();
            assert!(matches!(out, RowOutcome::Certified(_)));
        }
    }

    #[test]
    fn preconditions_are_checked() {
        let a = vec![vec![1, 1], vec![0, 3]];
        // b_1 != 1
        assert!(rearrange_power(&a, &[2, 2], 3, 2, DEFAULT_NODE_BUDGET).is_err());
        // eigen relation violated
        assert!(rearrange_power(&a, &[1, 3], 3, 2, DEFAULT_NODE_BUDGET).is_err());
    }
}
