//! Symmetric eigen-decomposition by cyclic Jacobi rotations.

use crate::{Error, Result};

/// Square symmetric matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Allowed asymmetry `|a_ij - a_ji|` when building a [`SymMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SymMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::input(format!(
                "{} values for a {n}×{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (data[i * n + j] - data[j * n + i]).abs() > SYMMETRY_TOL {
                    return Err(Error::input(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Builds a matrix from the upper triangle, mirroring it below.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        SymMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_upper(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Eigenvalues in descending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

pub const MAX_SWEEPS: usize = 100;
/// Stop once the off-diagonal Frobenius norm is below this fraction of ‖A‖.
pub const OFF_DIAGONAL_TOL: f64 = 1e-10;

pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen> {
    jacobi(m, true)
}

fn jacobi(m: &SymMatrix, with_vectors: bool) -> Result<SymEigen> {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let target = OFF_DIAGONAL_TOL * m.frobenius_norm();
    let off_norm = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    loop {
        if off_norm(&a) <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigen-solver did not converge in {MAX_SWEEPS} sweeps ({n}×{n})"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta < 0.0 { -1.0 } else { 1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = (t * t + 1.0).sqrt().recip();
                let s = t * c;
                // Rows p and q are contiguous; columns are mirrored.
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    let (np, nq) = (c * apk - s * aqk, s * apk + c * aqk);
                    a[p * n + k] = np;
                    a[q * n + k] = nq;
                    a[k * n + p] = np;
                    a[k * n + q] = nq;
                }
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if with_vectors {
                    for k in 0..n {
                        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    Ok(SymEigen {
        values: order.iter().map(|&i| a[i * n + i]).collect(),
        vectors: if with_vectors {
            order
                .iter()
                .map(|&i| (0..n).map(|k| v[k * n + i]).collect())
                .collect()
        } else {
            Vec::new()
        },
        sweeps,
    })
}

/// Eigenvalues sorted in descending order.
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    jacobi(m, false).map(|e| e.values)
}
