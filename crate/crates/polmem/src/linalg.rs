//! Small dense linear-algebra helpers for complex hermitian matrices.
//!
//! Only what the engines and their validity checks need: a cyclic Jacobi
//! eigensolver (eigenvalues of hermitian matrices, used for positivity
//! floors) and a few norm/hermiticity diagnostics. Matrices involved are
//! test-scale, so an O(n^3)-per-sweep method is fine.

use ndarray::Array2;

use crate::C64;

/// Largest absolute deviation from hermiticity, max_ij |m_ij - conj(m_ji)|.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub fn frobenius_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a complex hermitian matrix by cyclic Jacobi rotations.
///
/// The input is assumed hermitian; only the upper triangle drives the
/// rotations. Returns eigenvalues in ascending order.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    let mut a = m.clone();
    let scale = frobenius_norm(&a).max(1.0);

    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let beta = apq.norm();
                if beta <= 1e-300 {
                    continue;
                }
                // a_pq = beta * phase; rotate in the (p, q) plane.
                let phase = apq / beta;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * beta);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = C64::new(s, 0.0) * phase; // s * e^{i phi}
                // Column update: col_p' = c col_p - conj(sp) col_q,
                //                col_q' = sp col_p + c col_q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * sp.conj();
                    a[(k, q)] = akp * sp + akq * c;
                }
                // Row update with the adjoint rotation.
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * sp;
                    a[(q, k)] = apk * sp.conj() + aqk * c;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Smallest eigenvalue of a hermitian matrix (positivity floor checks).
pub fn min_eigenvalue(m: &Array2<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn real_symmetric_2x2() {
        let m = array![[c(2.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(2.0, 0.0)]];
        let e = hermitian_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complex_hermitian_2x2() {
        // Pauli-y has eigenvalues -1, +1.
        let m = array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let e = hermitian_eigenvalues(&m);
        assert!((e[0] + 1.0).abs() < 1e-12);
        assert!((e[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diag_plus_offdiag_3x3() {
        let m = array![
            [c(1.0, 0.0), c(0.5, 0.5), c(0.0, 0.0)],
            [c(0.5, -0.5), c(2.0, 0.0), c(0.0, 0.3)],
            [c(0.0, 0.0), c(0.0, -0.3), c(3.0, 0.0)]
        ];
        let e = hermitian_eigenvalues(&m);
        // Trace and sum-of-squares invariants.
        let tr: f64 = e.iter().sum();
        assert!((tr - 6.0).abs() < 1e-10);
        let fr2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        let e2: f64 = e.iter().map(|x| x * x).sum();
        assert!((fr2 - e2).abs() < 1e-10);
    }
}
