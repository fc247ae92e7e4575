//! Minimum-cost perfect matching for small square cost matrices.

/// Result of matching rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `columns[row]` is the column matched to `row`.
    pub columns: Vec<usize>,
    pub total: f64,
    /// Another bijection reached a total within `ambiguity_tol` of the best.
    /// Only detected for exhaustive search (n ≤ 8).
    pub ambiguous: bool,
}

const EXHAUSTIVE_MAX: usize = 8;

/// Optimal assignment over all bijections. Exhaustive for n ≤ 8 with
/// lexicographic tie-breaking, Hungarian algorithm above that.
pub fn min_cost_assignment(cost: &[Vec<f64>], ambiguity_tol: f64) -> Assignment {
    let n = cost.len();
    if n == 0 {
        return Assignment { columns: vec![], total: 0.0, ambiguous: false };
    }
    if n <= EXHAUSTIVE_MAX {
        exhaustive(cost, ambiguity_tol)
    } else {
        hungarian(cost)
    }
}

fn exhaustive(cost: &[Vec<f64>], tol: f64) -> Assignment {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut second = f64::INFINITY;
    // Lexicographic enumeration, so the first optimum seen wins ties.
    loop {
        let total: f64 = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        match &best {
            Some((b, _)) if total >= *b => second = second.min(total),
            Some((b, _)) => {
                second = *b;
                best = Some((total, perm.clone()));
            }
            None => best = Some((total, perm.clone())),
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (total, columns) = best.expect("at least one permutation");
    Assignment { columns, total, ambiguous: second - total <= tol }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// O(n³) shortest-augmenting-path formulation with potentials.
fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=n {
        columns[p[j] - 1] = j - 1;
    }
    let total = columns.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    Assignment { columns, total, ambiguous: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn picks_the_cheaper_cross_matching() {
        let cost = vec![vec![1.0, 0.1], vec![0.2, 1.0]];
        let a = min_cost_assignment(&cost, 1e-9);
        assert_eq!(a.columns, vec![1, 0]);
        assert!(!a.ambiguous);
    }

    #[test]
    fn flags_ties() {
        let cost = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let a = min_cost_assignment(&cost, 1e-9);
        assert_eq!(a.columns, vec![0, 1]);
        assert!(a.ambiguous);
    }

    proptest! {
        #[test]
        fn hungarian_matches_exhaustive(values in proptest::collection::vec(0.0f64..10.0, 49)) {
            let cost: Vec<Vec<f64>> = values.chunks(7).map(|r| r.to_vec()).collect();
            let e = exhaustive(&cost, 0.0);
            let h = hungarian(&cost);
            prop_assert!((e.total - h.total).abs() < 1e-9);
        }
    }
}
