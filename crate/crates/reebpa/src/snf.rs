//! Smith normal form for integer 2x2 matrices.
//!
//! `smith_normal_form(m)` returns unimodular u, v and nonnegative d0 | d1
//! with u * m * v = diag(d0, d1). The census uses u to put lattice cosets
//! of (A^k - I) Z^2 into a canonical box Z/d0 x Z/d1.

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnfError {
    #[error("integer overflow during normal form reduction")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Snf {
    pub u: [[i128; 2]; 2],
    pub d: [i128; 2],
    pub v: [[i128; 2]; 2],
}

type M2 = [[i128; 2]; 2];

fn checked_axpy_row(a: &mut M2, dst: usize, src: usize, q: i128) -> Result<(), SnfError> {
    for c in 0..2 {
        let t = q.checked_mul(a[src][c]).ok_or(SnfError::Overflow)?;
        a[dst][c] = a[dst][c].checked_sub(t).ok_or(SnfError::Overflow)?;
    }
    Ok(())
}

fn checked_axpy_col(a: &mut M2, dst: usize, src: usize, q: i128) -> Result<(), SnfError> {
    for r in 0..2 {
        let t = q.checked_mul(a[r][src]).ok_or(SnfError::Overflow)?;
        a[r][dst] = a[r][dst].checked_sub(t).ok_or(SnfError::Overflow)?;
    }
    Ok(())
}

fn swap_rows(a: &mut M2) {
    a.swap(0, 1);
}

fn swap_cols(a: &mut M2) {
    for r in 0..2 {
        a[r].swap(0, 1);
    }
}

fn negate_row(a: &mut M2, r: usize) {
    for c in 0..2 {
        a[r][c] = -a[r][c];
    }
}

/// Reduce m to diag(d0, d1) with d0, d1 >= 0 and d0 | d1.
pub fn smith_normal_form(m: M2) -> Result<Snf, SnfError> {
    let mut a = m;
    let mut u: M2 = [[1, 0], [0, 1]];
    let mut v: M2 = [[1, 0], [0, 1]];

    // Invariant maintained by every step below: a = u * m * v. Row
    // operations touch u, column operations touch v.
    loop {
        // Move a nonzero entry to the pivot if one exists.
        if a[0][0] == 0 {
            if a[1][0] != 0 {
                swap_rows(&mut a);
                swap_rows(&mut u);
            } else if a[0][1] != 0 {
                swap_cols(&mut a);
                swap_cols(&mut v);
            } else if a[1][1] != 0 {
                swap_rows(&mut a);
                swap_rows(&mut u);
                swap_cols(&mut a);
                swap_cols(&mut v);
            } else {
                break; // zero matrix
            }
        }

        // Euclidean elimination below the pivot.
        while a[1][0] != 0 {
            let q = a[1][0].div_euclid(a[0][0]);
            checked_axpy_row(&mut a, 1, 0, q)?;
            checked_axpy_row(&mut u, 1, 0, q)?;
            if a[1][0] != 0 {
                swap_rows(&mut a);
                swap_rows(&mut u);
            }
        }
        // Elimination right of the pivot; column swaps may repopulate the
        // subdiagonal, hence the outer loop.
        while a[0][1] != 0 {
            let q = a[0][1].div_euclid(a[0][0]);
            checked_axpy_col(&mut a, 1, 0, q)?;
            checked_axpy_col(&mut v, 1, 0, q)?;
            if a[0][1] != 0 {
                swap_cols(&mut a);
                swap_cols(&mut v);
            }
        }
        if a[1][0] == 0 && a[0][1] == 0 {
            break;
        }
    }

    // Enforce the divisibility chain d0 | d1.
    if a[0][0] != 0 && a[1][1] % a[0][0] != 0 {
        // Fold row 1 into row 0 so the corner sees both diagonal entries,
        // then re-run the elimination; the pivot becomes gcd(d0, d1).
        checked_axpy_row(&mut a, 0, 1, -1)?;
        checked_axpy_row(&mut u, 0, 1, -1)?;
        while a[0][1] != 0 {
            let q = a[0][1].div_euclid(a[0][0]);
            checked_axpy_col(&mut a, 1, 0, q)?;
            checked_axpy_col(&mut v, 1, 0, q)?;
            if a[0][1] != 0 {
                swap_cols(&mut a);
                swap_cols(&mut v);
            }
        }
        while a[1][0] != 0 {
            let q = a[1][0].div_euclid(a[0][0]);
            checked_axpy_row(&mut a, 1, 0, q)?;
            checked_axpy_row(&mut u, 1, 0, q)?;
            if a[1][0] != 0 {
                swap_rows(&mut a);
                swap_rows(&mut u);
            }
        }
    }

    if a[0][0] < 0 {
        negate_row(&mut a, 0);
        negate_row(&mut u, 0);
    }
    if a[1][1] < 0 {
        negate_row(&mut a, 1);
        negate_row(&mut u, 1);
    }

    debug_assert_eq!(a[0][1], 0);
    debug_assert_eq!(a[1][0], 0);
    Ok(Snf {
        u,
        d: [a[0][0], a[1][1]],
        v,
    })
}

pub fn mat_mul(a: M2, b: M2) -> M2 {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_det(a: M2) -> i128 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat_vec(a: M2, x: [i128; 2]) -> [i128; 2] {
    [
        a[0][0] * x[0] + a[0][1] * x[1],
        a[1][0] * x[0] + a[1][1] * x[1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(m: M2) -> Snf {
        let s = smith_normal_form(m).unwrap();
        assert_eq!(mat_det(s.u).abs(), 1, "u not unimodular for {m:?}");
        assert_eq!(mat_det(s.v).abs(), 1, "v not unimodular for {m:?}");
        let prod = mat_mul(mat_mul(s.u, m), s.v);
        assert_eq!(prod, [[s.d[0], 0], [0, s.d[1]]], "umv mismatch for {m:?}");
        assert!(s.d[0] >= 0 && s.d[1] >= 0);
        if s.d[0] == 0 {
            assert_eq!(s.d[1], 0);
        } else {
            assert_eq!(s.d[1] % s.d[0], 0, "divisibility fails for {m:?}");
        }
        s
    }

    #[test]
    fn known_forms() {
        assert_eq!(check([[2, 0], [0, 3]]).d, [1, 6]);
        assert_eq!(check([[1, 1], [1, 0]]).d, [1, 1]);
        assert_eq!(check([[4, 3], [3, 1]]).d, [1, 5]);
        assert_eq!(check([[12, 8], [8, 4]]).d, [4, 4]);
        assert_eq!(check([[0, 0], [0, 0]]).d, [0, 0]);
        assert_eq!(check([[0, 2], [0, 0]]).d, [2, 0]);
        assert_eq!(check([[6, 4], [2, 8]]).d, [2, 20]);
        assert_eq!(check([[-3, 0], [0, -3]]).d, [3, 3]);
    }

    #[test]
    fn diagonal_product_is_absolute_determinant() {
        for m in [
            [[7i128, 3], [2, 9]],
            [[-5, 4], [6, -1]],
            [[10, 0], [5, 10]],
        ] {
            let s = check(m);
            assert_eq!(s.d[0] * s.d[1], mat_det(m).abs());
        }
    }

    proptest! {
        #[test]
        fn snf_contract_random(
            a in -50i128..50, b in -50i128..50,
            c in -50i128..50, d in -50i128..50,
        ) {
            let m = [[a, b], [c, d]];
            let s = check(m);
            prop_assert_eq!(s.d[0] * s.d[1], mat_det(m).abs());
        }
    }
}
