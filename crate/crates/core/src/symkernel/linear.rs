//! Exact linear systems over the rationals.

use super::Rat;

/// One solution of `A x = b` with free variables set to zero, or `None`
/// when the system is inconsistent. `a` is row-major with `cols` columns.
pub fn solve_linear(a: &[Vec<Rat>], b: &[Rat], cols: usize) -> Option<Vec<Rat>> {
    assert_eq!(a.len(), b.len(), "one right-hand side per row");
    let mut rows: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(r, rhs)| {
            assert_eq!(r.len(), cols, "ragged matrix");
            let mut row = r.clone();
            row.push(rhs.clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut top = 0;
    for col in 0..cols {
        let Some(p) = (top..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(top, p);
        let inv = rows[top][col].recip();
        for x in rows[top].iter_mut() {
            *x = x.mul_ref(&inv);
        }
        let pivot_row = rows[top].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == top || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x = &*x - &f.mul_ref(p);
                }
            }
        }
        pivots.push(col);
        top += 1;
        if top == rows.len() {
            break;
        }
    }
    if rows[top..].iter().any(|r| !r[cols].is_zero()) {
        return None;
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = rows[r][cols].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rat {
        Rat::int(n)
    }

    #[test]
    fn solves_and_detects_inconsistency() {
        // x + y = 3, x − y = 1
        let a = vec![vec![r(1), r(1)], vec![r(1), r(-1)]];
        assert_eq!(
            solve_linear(&a, &[r(3), r(1)], 2).unwrap(),
            vec![r(2), r(1)]
        );
        // underdetermined: 2x + 4y = 2 → x = 1, y = 0
        assert_eq!(
            solve_linear(&[vec![r(2), r(4)]], &[r(2)], 2).unwrap(),
            vec![r(1), r(0)]
        );
        // x = 1, x = 2
        assert!(solve_linear(&[vec![r(1)], vec![r(1)]], &[r(1), r(2)], 1).is_none());
        // redundant rows
        let a = vec![vec![r(1), r(2)], vec![r(2), r(4)], vec![r(0), r(0)]];
        assert_eq!(
            solve_linear(&a, &[r(1), r(2), r(0)], 2).unwrap(),
            vec![r(1), r(0)]
        );
        assert_eq!(solve_linear(&[], &[], 2).unwrap(), vec![r(0), r(0)]);
    }
}
