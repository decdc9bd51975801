//! Eigenvalues of small dense matrices via the characteristic polynomial.

use nalgebra::{DMatrix, Dim, Matrix, RawStorage};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::RealPolynomial;

fn to_rows<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn det(m: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => m[rows[0]][cols[0]],
        2 => m[rows[0]][cols[0]] * m[rows[1]][cols[1]] - m[rows[0]][cols[1]] * m[rows[1]][cols[0]],
        _ => {
            let sub_rows = &rows[1..];
            let mut acc = 0.0;
            for (k, &c) in cols.iter().enumerate() {
                let a = m[rows[0]][c];
                if a == 0.0 {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * a * det(m, sub_rows, &sub_cols);
            }
            acc
        }
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

fn char_coeffs_rows(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    (1..=n)
        .map(|k| {
            let e: f64 = subsets(n, k).iter().map(|s| det(m, s, s)).sum();
            if k % 2 == 0 {
                e
            } else {
                -e
            }
        })
        .collect()
}

/// Coefficients `[a₁, …, aₙ]` of `det(μI − M) = μⁿ + a₁μⁿ⁻¹ + … + aₙ`,
/// from sums of principal minors. Intended for `n ≤ 4`.
pub fn characteristic_coefficients<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Vec<f64> {
    char_coeffs_rows(&to_rows(m))
}

/// The characteristic polynomial as a [`RealPolynomial`] in ascending order.
pub fn characteristic_polynomial<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> RealPolynomial {
    let a = characteristic_coefficients(m);
    let mut c: Vec<f64> = a.into_iter().rev().collect();
    c.push(1.0);
    RealPolynomial::new(c)
}

/// Index whose row or column is zero off the diagonal, if any.
fn decoupled_index(m: &[Vec<f64>]) -> Option<usize> {
    let n = m.len();
    (0..n).find(|&i| (0..n).all(|j| j == i || m[i][j] == 0.0) || (0..n).all(|j| j == i || m[j][i] == 0.0))
}

fn remove(m: &[Vec<f64>], i: usize) -> Vec<Vec<f64>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != i)
        .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, v)| *v).collect())
        .collect()
}

/// Newton step on `det(M − μI)`: `μ ← μ + 1/tr((M − μI)⁻¹)`, accepted only
/// when it reduces `|det(M − μI)|`.
fn polish(m: &[Vec<f64>], mu: Complex64) -> Complex64 {
    let n = m.len();
    let shifted = |mu: Complex64| {
        DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let d = if i == j { mu } else { Complex64::new(0.0, 0.0) };
            Complex64::new(m[i][j], 0.0) - d
        })
    };
    let mut best = mu;
    let mut best_det = shifted(mu).determinant().norm();
    for _ in 0..3 {
        if best_det == 0.0 {
            break;
        }
        let Some(inv) = shifted(best).try_inverse() else { break };
        let tr = inv.trace();
        if tr.norm() == 0.0 {
            break;
        }
        let mut next = best + tr.inv();
        if mu.im == 0.0 {
            next.im = 0.0;
        }
        let d = shifted(next).determinant().norm();
        if d < best_det {
            best = next;
            best_det = d;
        } else {
            break;
        }
    }
    best
}

fn eigen_rows(m: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let mut cur = m.to_vec();
    while let Some(i) = decoupled_index(&cur) {
        out.push(Complex64::new(cur[i][i], 0.0));
        cur = remove(&cur, i);
        if cur.is_empty() {
            return Ok(out);
        }
    }
    let a = char_coeffs_rows(&cur);
    let mut c: Vec<f64> = a.into_iter().rev().collect();
    c.push(1.0);
    let poly = RealPolynomial::new(c);
    let roots = poly.complex_roots()?;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let snapped: Vec<Complex64> = roots
        .into_iter()
        .map(|z| if z.im.abs() <= 1e-12 * scale { Complex64::new(z.re, 0.0) } else { z })
        .collect();
    let upper = snapped.iter().filter(|z| z.im > 0.0).count();
    let lower = snapped.iter().filter(|z| z.im < 0.0).count();
    if upper != lower || snapped.len() != cur.len() {
        // badly scaled characteristic polynomial
        let dm = DMatrix::<f64>::from_fn(cur.len(), cur.len(), |i, j| cur[i][j]);
        out.extend(dm.complex_eigenvalues().iter().copied());
        return Ok(out);
    }
    for z in snapped {
        if z.im < 0.0 {
            continue;
        }
        let p = polish(&cur, z);
        out.push(p);
        if z.im > 0.0 {
            out.push(p.conj());
        }
    }
    Ok(out)
}

/// Sorts by descending real part, then descending imaginary part.
pub fn sort_eigenvalues(e: &mut [Complex64]) {
    e.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Eigenvalues of a real square matrix with `n ≤ 4`.
///
/// Rows or columns that are zero off the diagonal are split off first, so
/// structurally exact eigenvalues (such as a zero row) are returned exactly.
/// The rest come from the characteristic polynomial, polished by a Newton
/// step on the determinant.
pub fn eigenvalues<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 || n > 4 {
        return Err(Error::Precondition(format!("square matrix of size 1..=4 required, got {}x{}", n, m.ncols())));
    }
    let rows = to_rows(m);
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "matrix",
            value: rows.concat(),
        });
    }
    let mut e = eigen_rows(&rows)?;
    sort_eigenvalues(&mut e);
    Ok(e)
}
