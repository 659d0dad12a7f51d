//! Integer row reduction over ℤ.
//!
//! Rows are lattice generators. [`hermite_form`] returns the row Hermite normal form
//! together with a unimodular transform `U` such that `U · G = H`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub(crate) type IntMatrix = Vec<Vec<BigInt>>;

pub(crate) struct HermiteForm {
    /// Reduced rows; the first `rank` rows are nonzero with strictly increasing pivots.
    pub rows: IntMatrix,
    /// Unimodular transform with `transform · input = rows`.
    pub transform: IntMatrix,
    pub rank: usize,
}

fn identity(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

/// `rows[target] -= q * rows[source]`
fn sub_multiple(rows: &mut IntMatrix, target: usize, source: usize, q: &BigInt) {
    if q.is_zero() {
        return;
    }
    let src = rows[source].clone();
    for (t, s) in rows[target].iter_mut().zip(src.iter()) {
        *t -= q * s;
    }
}

fn negate(row: &mut [BigInt]) {
    for v in row.iter_mut() {
        *v = -std::mem::take(v);
    }
}

pub(crate) fn hermite_form(input: &IntMatrix) -> HermiteForm {
    let m = input.len();
    let n = input.first().map_or(0, Vec::len);
    let mut rows = input.clone();
    let mut transform = identity(m);
    let mut pivot_row = 0;

    for col in 0..n {
        if pivot_row == m {
            break;
        }
        // Euclid on the column until a single nonzero remains at or below pivot_row.
        loop {
            let best = (pivot_row..m)
                .filter(|&i| !rows[i][col].is_zero())
                .min_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
            let Some(best) = best else { break };
            rows.swap(pivot_row, best);
            transform.swap(pivot_row, best);
            let mut done = true;
            for i in (pivot_row + 1)..m {
                if rows[i][col].is_zero() {
                    continue;
                }
                let q = rows[i][col].div_floor(&rows[pivot_row][col]);
                sub_multiple(&mut rows, i, pivot_row, &q);
                sub_multiple(&mut transform, i, pivot_row, &q);
                if !rows[i][col].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if rows[pivot_row][col].is_zero() {
            continue;
        }
        if rows[pivot_row][col].is_negative() {
            negate(&mut rows[pivot_row]);
            negate(&mut transform[pivot_row]);
        }
        for i in 0..pivot_row {
            let q = rows[i][col].div_floor(&rows[pivot_row][col]);
            sub_multiple(&mut rows, i, pivot_row, &q);
            sub_multiple(&mut transform, i, pivot_row, &q);
        }
        pivot_row += 1;
    }

    HermiteForm {
        rows,
        transform,
        rank: pivot_row,
    }
}

pub(crate) fn pivot_index(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|v| !v.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(data: &[&[i64]]) -> IntMatrix {
        data.iter()
            .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
            .collect()
    }

    fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
        let n = b.first().map_or(0, Vec::len);
        a.iter()
            .map(|row| {
                (0..n)
                    .map(|j| row.iter().zip(b.iter()).map(|(x, brow)| x * &brow[j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn gcd_of_single_column() {
        let g = mat(&[&[3], &[2]]);
        let h = hermite_form(&g);
        assert_eq!(h.rank, 1);
        assert_eq!(h.rows[0][0], BigInt::from(1));
        assert!(h.rows[1][0].is_zero());
        assert_eq!(mul(&h.transform, &g), h.rows);
    }

    #[test]
    fn transform_reproduces_rows() {
        let g = mat(&[&[4, 6, 2], &[2, -3, 7], &[6, 3, 9], &[0, 5, 5]]);
        let h = hermite_form(&g);
        assert_eq!(mul(&h.transform, &g), h.rows);
        // Kernel rows of the transform annihilate the generators.
        for row in &h.rows[h.rank..] {
            assert!(row.iter().all(Zero::is_zero));
        }
        let pivots: Vec<_> = h.rows[..h.rank].iter().map(|r| pivot_index(r)).collect();
        assert!(pivots.windows(2).all(|w| w[0] < w[1]));
    }
}
