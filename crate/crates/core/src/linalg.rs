//! Small dense symmetric eigenproblems.

use crate::error::{Error, Result};

/// Square matrix as rows.
pub type Matrix = Vec<Vec<f64>>;

/// Eigenvalues in ascending order, with matching eigenvectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

fn check_symmetric(a: &[Vec<f64>]) -> Result<usize> {
    let n = a.len();
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Precondition("matrix is not square".into()));
        }
        for j in 0..i {
            if row[j] != a[j][i] {
                return Err(Error::Precondition(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(n)
}

/// Cyclic Jacobi rotations. Intended for the small (n ≤ 4) matrices of this crate.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Result<SymEigen> {
    let n = check_symmetric(a)?;
    let mut a: Matrix = a.to_vec();
    let mut v: Matrix = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    Ok(SymEigen { values, vectors })
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigenvalues(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(a)?.values)
}

/// Roots of det(A − μB) = 0 for symmetric 2×2 `a` and positive definite `b`, ascending.
pub fn pencil_2x2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> Result<(f64, f64)> {
    let det_b = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    if !(det_b > 0.0 && b[0][0] > 0.0) {
        return Err(Error::Precondition(format!("pencil matrix is not positive definite (det {det_b})")));
    }
    // Reduce to C = L⁻¹AL⁻ᵀ with B = LLᵀ; the symmetric 2×2 spectrum then
    // avoids the cancellation of the quadratic-formula discriminant.
    let l00 = b[0][0].sqrt();
    let l10 = b[1][0] / l00;
    let l11 = (b[1][1] - l10 * l10).sqrt();
    let mut m = [[0.0; 2]; 2];
    for j in 0..2 {
        m[0][j] = a[0][j] / l00;
        m[1][j] = (a[1][j] - l10 * m[0][j]) / l11;
    }
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        c[i][0] = m[i][0] / l00;
        c[i][1] = (m[i][1] - l10 * c[i][0]) / l11;
    }
    let mean = 0.5 * (c[0][0] + c[1][1]);
    let r = (0.5 * (c[0][0] - c[1][1])).hypot(0.5 * (c[0][1] + c[1][0]));
    Ok((mean - r, mean + r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Number of eigenvalues of `a` below `sigma`, by the signs of the LDLᵀ pivots of A − σI.
    fn count_below(a: &[Vec<f64>], sigma: f64) -> usize {
        let n = a.len();
        let mut m: Matrix = a.to_vec();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] -= sigma;
        }
        let mut neg = 0;
        for k in 0..n {
            let d = m[k][k];
            if d < 0.0 {
                neg += 1;
            }
            for i in k + 1..n {
                let f = m[i][k] / d;
                for j in k + 1..n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        neg
    }

    #[test]
    fn identity_and_two_by_two() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(eigenvalues(&id).unwrap(), vec![1.0, 1.0]);
        let m0 = vec![vec![1.0, 0.5], vec![0.5, 1.0]];
        let e = eigenvalues(&m0).unwrap();
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = vec![vec![1.0, 2.0], vec![2.0 + 1e-15, 1.0]];
        assert!(matches!(symmetric_eigen(&a), Err(Error::Precondition(_))));
    }

    #[test]
    fn pencil_matches_definition() {
        let (lo, hi) = pencil_2x2([[1.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!((lo, hi), (0.0, 1.0));
        let a = [[0.3, -0.2], [-0.2, 0.7]];
        let b = [[2.0, 0.4], [0.4, 1.0]];
        let (lo, hi) = pencil_2x2(a, b).unwrap();
        for mu in [lo, hi] {
            let d = (a[0][0] - mu * b[0][0]) * (a[1][1] - mu * b[1][1]) - (a[0][1] - mu * b[0][1]).powi(2);
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-14);
        }
        assert!(pencil_2x2(a, [[1.0, 1.0], [1.0, 1.0]]).is_err());
    }

    fn sym4() -> impl Strategy<Value = Matrix> {
        proptest::collection::vec(-10.0f64..10.0, 10).prop_map(|u| {
            let mut m = vec![vec![0.0; 4]; 4];
            let mut k = 0;
            for i in 0..4 {
                for j in i..4 {
                    m[i][j] = u[k];
                    m[j][i] = u[k];
                    k += 1;
                }
            }
            m
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn inertia_and_reconstruction(a in sym4()) {
            let eig = symmetric_eigen(&a).unwrap();
            let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
            let delta = 1e-9 * norm;
            for (k, &l) in eig.values.iter().enumerate() {
                let below = count_below(&a, l - delta);
                let upto = count_below(&a, l + delta);
                prop_assert!(below <= k && k < upto, "eigenvalue {k} = {l}: {below} {upto}");
            }
            let q = &eig.vectors;
            for i in 0..4 {
                for j in 0..4 {
                    let r: f64 = (0..4).map(|k| q[i][k] * eig.values[k] * q[j][k]).sum();
                    prop_assert!((r - a[i][j]).abs() <= 1e-10 * norm);
                }
            }
        }
    }
}
