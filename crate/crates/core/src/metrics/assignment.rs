//! Minimum-cost assignment on a square matrix (Hungarian algorithm,
//! shortest-augmenting-path formulation with potentials, O(n^3)).

use alloc::vec::Vec;

/// Solve the square assignment problem, returning for each row the
/// column it is assigned to. Costs must be finite.
pub fn solve(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    // 1-indexed potentials and matching, e-maxx style
    let mut u = alloc::vec![0.0f64; n + 1];
    let mut v = alloc::vec![0.0f64; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    // p[j] = row matched to column j (0 = free)
    let mut p = alloc::vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = alloc::vec![f64::INFINITY; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
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

    let mut row_to_col = alloc::vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Total cost of an assignment.
pub fn total_cost(cost: &[Vec<f64>], row_to_col: &[usize]) -> f64 {
    row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn trivial_identity() {
        let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(solve(&cost), vec![0, 1]);
    }

    #[test]
    fn forced_off_diagonal() {
        let cost = vec![vec![10.0, 1.0], vec![1.0, 10.0]];
        assert_eq!(solve(&cost), vec![1, 0]);
    }

    #[test]
    fn classic_three_by_three() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let a = solve(&cost);
        assert_eq!(total_cost(&cost, &a), 5.0);
    }

    /// Compare against exhaustive enumeration on random matrices.
    #[test]
    fn matches_bruteforce() {
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            if n == 1 {
                return vec![vec![0]];
            }
            let mut out = Vec::new();
            for perm in permutations(n - 1) {
                for pos in 0..n {
                    let mut p = perm.clone();
                    p.insert(pos, n - 1);
                    out.push(p);
                }
            }
            out
        }
        // simple deterministic pseudo-random costs
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 * 10.0
        };
        for n in 1..=5usize {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> =
                    (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let got = total_cost(&cost, &solve(&cost));
                let best = permutations(n)
                    .into_iter()
                    .map(|p| total_cost(&cost, &p))
                    .fold(f64::INFINITY, f64::min);
                assert!((got - best).abs() < 1e-9, "n={n}: {got} vs {best}");
            }
        }
    }
}
