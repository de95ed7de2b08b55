//! Small dense linear-algebra helpers: complex determinants by partial-pivot
//! LU, depressed-cubic roots, and singular-value bounds through a real
//! symmetric Jacobi eigensolver on the doubled-real embedding.

use num_complex::Complex64;

/// Determinant of a small square complex matrix (row-major).
pub fn det(m: &[Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut a: Vec<Vec<Complex64>> = m.to_vec();
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].norm() > a[piv][col].norm() {
                piv = r;
            }
        }
        if a[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for cc in col..n {
                let sub = f * a[col][cc];
                a[r][cc] -= sub;
            }
        }
    }
    d
}

/// Matrix-vector product for row-major complex matrices.
pub fn matvec(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Roots of t^3 - e1 t^2 + e2 t - e3 (elementary-symmetric form), via the
/// depressed cubic and Cardano with complex arithmetic.
pub fn cubic_roots(e1: Complex64, e2: Complex64, e3: Complex64) -> [Complex64; 3] {
    // t = s + e1/3 reduces to s^3 + p s + q
    let shift = e1 / 3.0;
    let p = e2 - e1 * e1 / 3.0;
    let q = -e3 + e1 * e2 / 3.0 - 2.0 * e1 * e1 * e1 / 27.0;
    // s^3 + p s + q = 0 -> s = w - p/(3w), w^3 = -q/2 + sqrt(q^2/4 + p^3/27)
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let mut w3 = -q / 2.0 + disc;
    if w3.norm() < 1e-300 {
        w3 = -q / 2.0 - disc;
    }
    let w = w3.powf(1.0 / 3.0);
    let omega = Complex64::new(-0.5, 3.0f64.sqrt() / 2.0);
    let mut roots = [Complex64::new(0.0, 0.0); 3];
    let mut wk = w;
    for r in roots.iter_mut() {
        let s = if wk.norm() > 1e-300 {
            wk - p / (3.0 * wk)
        } else {
            Complex64::new(0.0, 0.0)
        };
        *r = s + shift;
        wk *= omega;
    }
    roots
}

/// Eigenvalues of a real symmetric matrix by the cyclic Jacobi method.
fn sym_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Singular values of a complex m x n matrix (m >= n) via the doubled-real
/// embedding; each complex singular value appears twice in the embedding, so
/// the distinct values are returned sorted ascending.
pub fn singular_values(m: &[Vec<Complex64>]) -> Vec<f64> {
    // work on the tall orientation so the gram matrix has no structural nulls
    if m.len() < m[0].len() {
        let t: Vec<Vec<Complex64>> = (0..m[0].len())
            .map(|j| m.iter().map(|row| row[j].conj()).collect())
            .collect();
        return singular_values(&t);
    }
    let rows = m.len();
    let cols = m[0].len();
    // real embedding: [Re -Im; Im Re], size (2 rows) x (2 cols)
    let mut re = vec![vec![0.0f64; 2 * cols]; 2 * rows];
    for i in 0..rows {
        for j in 0..cols {
            re[i][j] = m[i][j].re;
            re[i][j + cols] = -m[i][j].im;
            re[i + rows][j] = m[i][j].im;
            re[i + rows][j + cols] = m[i][j].re;
        }
    }
    // gram matrix (2 cols) x (2 cols)
    let n2 = 2 * cols;
    let mut g = vec![vec![0.0f64; n2]; n2];
    for i in 0..n2 {
        for j in 0..n2 {
            let mut s = 0.0;
            for r in re.iter() {
                s += r[i] * r[j];
            }
            g[i][j] = s;
        }
    }
    let mut ev = sym_eigenvalues(g);
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev.iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Smallest and largest singular value of a complex matrix.
pub fn sv_extremes(m: &[Vec<Complex64>]) -> (f64, f64) {
    let sv = singular_values(m);
    (sv[0], *sv.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn det_of_known_matrix() {
        let m = vec![
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ];
        assert!((det(&m) - c(-2.0, 0.0)).norm() < 1e-14);
        let m = vec![
            vec![c(0.0, 1.0), c(1.0, 0.0)],
            vec![c(-1.0, 0.0), c(0.0, 1.0)],
        ];
        assert!((det(&m) - c(0.0, 0.0)).norm() < 1e-14); // i*i - (1)(-1) = -1+1
    }

    #[test]
    fn cubic_roots_recover_symmetric_functions() {
        let r = [c(1.0, 2.0), c(-0.5, 0.3), c(2.0, -1.0)];
        let e1 = r[0] + r[1] + r[2];
        let e2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
        let e3 = r[0] * r[1] * r[2];
        let got = cubic_roots(e1, e2, e3);
        for want in r {
            assert!(
                got.iter().any(|g| (g - want).norm() < 1e-10),
                "missing root {want}"
            );
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = vec![
            vec![c(3.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 4.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ];
        let (lo, hi) = sv_extremes(&m);
        assert!((lo - 3.0).abs() < 1e-10);
        assert!((hi - 4.0).abs() < 1e-10);
    }
}
