//! Incomplete (partial) exponential Bell polynomials.

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Pascal triangle up to row `n`, exact in any [`Scalar`].
pub(crate) fn binomials<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![T::one(); i + 1];
        for j in 1..i {
            row[j] = rows[i - 1][j - 1].clone() + rows[i - 1][j].clone();
        }
        rows.push(row);
    }
    rows
}

/// Table `t[k][m] = B_{k,m}(x_1, x_2, ...)` for `0 <= m <= k <= k_max`.
///
/// Uses `B_{k,m} = Σ_{i=1}^{k-m+1} C(k-1, i-1) x_i B_{k-i, m-1}` with
/// `B_{0,0} = 1`. Entries needing an `x_i` beyond `xs.len()` treat it as 0,
/// which leaves every entry with `k - m + 1 <= xs.len()` exact.
pub fn bell_table<T: Scalar>(k_max: usize, xs: &[T]) -> Vec<Vec<T>> {
    let binom = binomials::<T>(k_max.saturating_sub(1));
    let mut table: Vec<Vec<T>> = Vec::with_capacity(k_max + 1);
    table.push(vec![T::one()]);
    for k in 1..=k_max {
        let mut row = vec![T::zero(); k + 1];
        for m in 1..=k {
            let mut acc = T::zero();
            for i in 1..=(k - m + 1).min(xs.len()) {
                let prev = &table[k - i];
                if m - 1 < prev.len() {
                    acc =
                        acc + binom[k - 1][i - 1].clone() * xs[i - 1].clone() * prev[m - 1].clone();
                }
            }
            row[m] = acc;
        }
        table.push(row);
    }
    table
}

/// `B_{k,m}[x_1, ..., x_{k-m+1}]` for `1 <= m <= k`.
pub fn bell_incomplete<T: Scalar>(k: usize, m: usize, xs: &[T]) -> Result<T> {
    if m < 1 || m > k {
        return domain(format!(
            "incomplete Bell polynomial needs 1 <= m <= k, got k = {k}, m = {m}"
        ));
    }
    if xs.len() < k - m + 1 {
        return domain(format!(
            "B_{{{k},{m}}} needs {} arguments, got {}",
            k - m + 1,
            xs.len()
        ));
    }
    Ok(bell_table(k, &xs[..k - m + 1])[k][m].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};
    use proptest::prelude::*;

    /// Brute force: sum over set partitions of {0..k} into `m` blocks of
    /// Π x_{|block|}, enumerated via restricted growth strings.
    fn by_set_partitions(k: usize, m: usize, xs: &[i128]) -> i128 {
        fn rec(
            pos: usize,
            k: usize,
            m: usize,
            labels: &mut Vec<usize>,
            blocks: usize,
            xs: &[i128],
            acc: &mut i128,
        ) {
            if pos == k {
                if blocks == m {
                    let mut sizes = vec![0usize; m];
                    for &l in labels.iter() {
                        sizes[l] += 1;
                    }
                    *acc += sizes
                        .iter()
                        .map(|&s| if s <= xs.len() { xs[s - 1] } else { 0 })
                        .product::<i128>();
                }
                return;
            }
            for l in 0..=blocks.min(m - 1) {
                labels.push(l);
                rec(pos + 1, k, m, labels, blocks.max(l + 1), xs, acc);
                labels.pop();
            }
        }
        let mut acc = 0;
        rec(0, k, m, &mut Vec::new(), 0, xs, &mut acc);
        acc
    }

    #[test]
    fn small_cases() {
        assert_eq!(bell_incomplete(1, 1, &[7.0]).unwrap(), 7.0);
        let (e1, e2) = (ratio(5, 3), ratio(7, 2));
        let b32 = bell_incomplete(3, 2, &[e1.clone().negated(), e2.clone()]).unwrap();
        assert_eq!(b32, ratio(-3, 1) * e1 * e2);
        let (x1, x2, x3) = (2i128, 3i128, 5i128);
        let b42 =
            bell_incomplete::<Rational>(4, 2, &[ratio(2, 1), ratio(3, 1), ratio(5, 1)]).unwrap();
        assert_eq!(b42, ratio((4 * x1 * x3 + 3 * x2 * x2) as i64, 1));
    }

    #[test]
    fn domain_errors() {
        assert!(bell_incomplete(3, 4, &[1.0, 2.0]).is_err());
        assert!(bell_incomplete(3, 0, &[1.0, 2.0, 3.0]).is_err());
        assert!(bell_incomplete(3, 1, &[1.0]).is_err());
    }

    #[test]
    fn all_ones_gives_stirling_numbers() {
        // B_{k,m}(1,1,...) = S(k, m); S(10, 4) = 34105
        let table = bell_table::<i128>(10, &[1; 10]);
        assert_eq!(table[10][4], 34105);
        assert_eq!(table[10][1], 1);
        assert_eq!(table[10][10], 1);
    }

    #[test]
    fn float_agrees_with_exact_integers_up_to_twenty() {
        let xs_int: Vec<i128> = (1..=20).map(|i| (i % 3 + 1) as i128).collect();
        let xs_f: Vec<f64> = xs_int.iter().map(|&x| x as f64).collect();
        let ti = bell_table::<i128>(20, &xs_int);
        let tf = bell_table::<f64>(20, &xs_f);
        for k in 1..=20 {
            for m in 1..=k {
                let exact = ti[k][m] as f64;
                assert!(
                    (tf[k][m] - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "k={k} m={m}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn matches_set_partition_enumeration(xs in proptest::collection::vec(-4i128..5, 7), k in 1usize..8, m in 1usize..8) {
            prop_assume!(m <= k);
            let fast = bell_table::<i128>(k, &xs[..k - m + 1])[k][m];
            prop_assert_eq!(fast, by_set_partitions(k, m, &xs[..k - m + 1]));
        }
    }
}
