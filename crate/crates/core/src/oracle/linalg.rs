use malachite::num::basic::traits::Zero;

use crate::rational::Rational;

/// Solves `a x = b` exactly by Gaussian elimination; `None` when `a` is singular.
pub fn solve_linear(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rational::from(1) / &a[col][col];
        for r in col + 1..n {
            if a[r][col] == 0 {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let d = &f * &a[col][c];
                a[r][c] -= d;
            }
            let d = &f * &b[col];
            b[r] -= d;
        }
    }
    let mut x = vec![Rational::ZERO; n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn two_by_two() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let x = solve_linear(a, vec![int(3), int(5)]).unwrap();
        assert_eq!(x, vec![rat(4, 5), rat(7, 5)]);
    }

    #[test]
    fn singular() {
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(solve_linear(a, vec![int(1), int(1)]).is_none());
    }

    #[test]
    fn needs_pivoting() {
        let a = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(
            solve_linear(a, vec![int(7), int(9)]).unwrap(),
            vec![int(9), int(7)]
        );
    }
}
