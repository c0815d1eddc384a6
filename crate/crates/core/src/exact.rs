//! Small exact linear-algebra kernels over the integers and the rationals.
//!
//! Everything here works on dense row-major square matrices of modest size
//! (the lattices handled by this crate have rank at most a few dozen).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn det_i64(dim: usize, entries: &[i64]) -> Result<i128> {
    debug_assert_eq!(entries.len(), dim * dim);
    if dim == 0 {
        return Ok(1);
    }
    let mut a: Vec<i128> = entries.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..dim - 1 {
        if a[k * dim + k] == 0 {
            let Some(swap) = (k + 1..dim).find(|&r| a[r * dim + k] != 0) else {
                return Ok(0);
            };
            for c in 0..dim {
                a.swap(k * dim + c, swap * dim + c);
            }
            sign = -sign;
        }
        let pivot = a[k * dim + k];
        for i in k + 1..dim {
            for j in k + 1..dim {
                let lhs = a[i * dim + j]
                    .checked_mul(pivot)
                    .ok_or(Error::Overflow("determinant"))?;
                let rhs = a[i * dim + k]
                    .checked_mul(a[k * dim + j])
                    .ok_or(Error::Overflow("determinant"))?;
                // exact by Sylvester's identity
                a[i * dim + j] = (lhs - rhs) / prev;
            }
            a[i * dim + k] = 0;
        }
        prev = pivot;
    }
    Ok(sign * a[dim * dim - 1])
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Solves `a x = b` for square nonsingular `a`. Returns `None` if `a` is singular.
pub fn solve(dim: usize, a: &[BigRational], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = (0..dim)
        .map(|i| {
            let mut row = a[i * dim..(i + 1) * dim].to_vec();
            row.push(b[i].clone());
            row
        })
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for c in col..=dim {
            m[col][c] = &m[col][c] * &inv;
        }
        for r in 0..dim {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=dim {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut row| row.pop().unwrap()).collect())
}

/// Exact inverse of a square rational matrix (row-major).
pub fn inverse(dim: usize, a: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut m: Vec<Vec<BigRational>> = (0..dim)
        .map(|i| {
            let mut row = a[i * dim..(i + 1) * dim].to_vec();
            row.extend((0..dim).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).find(|&r| !m[r][col].is_zero()).ok_or(Error::Singular)?;
        m.swap(col, pivot);
        let inv = m[col][col].recip();
        for c in 0..2 * dim {
            m[col][c] = &m[col][c] * &inv;
        }
        for r in 0..dim {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in 0..2 * dim {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    Ok(m.into_iter().flat_map(|row| row.into_iter().skip(dim)).collect())
}

pub fn det_rational(dim: usize, a: &[BigRational]) -> BigRational {
    let mut m: Vec<BigRational> = a.to_vec();
    let mut det = BigRational::one();
    for col in 0..dim {
        let Some(pivot) = (col..dim).find(|&r| !m[r * dim + col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            for c in 0..dim {
                m.swap(col * dim + c, pivot * dim + c);
            }
            det = -det;
        }
        let p = m[col * dim + col].clone();
        det *= &p;
        for r in col + 1..dim {
            if m[r * dim + col].is_zero() {
                continue;
            }
            let factor = &m[r * dim + col] / &p;
            for c in col..dim {
                let delta = &factor * &m[col * dim + c];
                m[r * dim + c] -= delta;
            }
        }
    }
    det
}

/// Exact positive-semidefiniteness test by symmetric elimination.
///
/// A zero pivot is admissible only if its whole remaining row vanishes.
pub fn is_psd(dim: usize, a: &[BigRational]) -> bool {
    let mut m = a.to_vec();
    for k in 0..dim {
        let pivot = m[k * dim + k].clone();
        if pivot.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            if (k + 1..dim).any(|j| !m[k * dim + j].is_zero()) {
                return false;
            }
            continue;
        }
        for i in k + 1..dim {
            if m[i * dim + k].is_zero() {
                continue;
            }
            let factor = &m[i * dim + k] / &pivot;
            for j in k + 1..dim {
                let delta = &factor * &m[k * dim + j];
                m[i * dim + j] -= delta;
            }
        }
    }
    true
}

/// Exact positive-definiteness test: every leading principal minor is positive.
pub fn is_positive_definite(dim: usize, a: &[BigRational]) -> bool {
    (1..=dim).all(|k| {
        let minor: Vec<BigRational> = (0..k)
            .flat_map(|i| a[i * dim..i * dim + k].iter().cloned())
            .collect();
        det_rational(k, &minor).is_positive()
    })
}
