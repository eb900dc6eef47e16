//! Small complex linear algebra kernels: dense LU with partial pivoting, the
//! Thomas algorithm, the orthonormal discrete sine transform and Hermitian
//! eigenvalues (delegated to nalgebra).

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) type C = Complex64;

pub(crate) fn zero() -> C {
    C::new(0.0, 0.0)
}

pub(crate) fn norm2(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// y += s x
pub(crate) fn axpy(y: &mut [C], s: C, x: &[C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Row-major dense LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<C>,
    piv: Vec<usize>,
}

impl DenseLu {
    pub(crate) fn factor(n: usize, mut a: Vec<C>) -> Result<Self> {
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, big) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if big <= 1e-14 * scale {
                return Err(Error::Singular(format!("pivot {big:e} at column {k}")));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                if l != zero() {
                    for j in k + 1..n {
                        let u = a[k * n + j];
                        a[i * n + j] -= l * u;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    pub(crate) fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.n;
        let mut x: Vec<C> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Thomas factorization of a tridiagonal matrix (no pivoting).
#[derive(Debug, Clone)]
pub(crate) struct TridiagLu {
    lower: Vec<C>,
    denom: Vec<C>,
    cprime: Vec<C>,
}

impl TridiagLu {
    pub(crate) fn factor(lower: &[C], diag: &[C], upper: &[C]) -> Result<Self> {
        let n = diag.len();
        let scale = diag
            .iter()
            .chain(lower)
            .chain(upper)
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let mut denom = Vec::with_capacity(n);
        let mut cprime = Vec::with_capacity(n);
        for i in 0..n {
            let d = if i == 0 { diag[0] } else { diag[i] - lower[i - 1] * cprime[i - 1] };
            if d.norm() <= 1e-14 * scale {
                return Err(Error::Singular(format!("tridiagonal pivot {:e} at row {i}", d.norm())));
            }
            denom.push(d);
            cprime.push(if i + 1 < n { upper[i] / d } else { zero() });
        }
        Ok(TridiagLu { lower: lower.to_vec(), denom, cprime })
    }

    pub(crate) fn solve(&self, b: &[C]) -> Vec<C> {
        let n = self.denom.len();
        let mut x = vec![zero(); n];
        for i in 0..n {
            let prev = if i == 0 { zero() } else { self.lower[i - 1] * x[i - 1] };
            x[i] = (b[i] - prev) / self.denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = x[i + 1];
            x[i] -= self.cprime[i] * next;
        }
        x
    }
}

/// Orthonormal Dirichlet sine matrix S_{jk} = sqrt(2/(m+1)) sin((j+1)(k+1)π/(m+1)).
/// It is symmetric and its own inverse.
pub(crate) fn sine_matrix(m: usize) -> Vec<f64> {
    let s = (2.0 / (m as f64 + 1.0)).sqrt();
    let h = std::f64::consts::PI / (m as f64 + 1.0);
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            out[j * m + k] = s * (((j + 1) * (k + 1)) as f64 * h).sin();
        }
    }
    out
}

/// y = S x for the 1D sine matrix.
pub(crate) fn sine_apply(s: &[f64], m: usize, x: &[C]) -> Vec<C> {
    (0..m).map(|j| s[j * m..(j + 1) * m].iter().zip(x).map(|(a, b)| b * a).sum()).collect()
}

/// Y = S X S for an m×m row-major grid.
pub(crate) fn sine_apply_2d(s: &[f64], m: usize, x: &[C]) -> Vec<C> {
    let mut tmp = vec![zero(); m * m];
    for a in 0..m {
        let row = sine_apply(s, m, &x[a * m..(a + 1) * m]);
        tmp[a * m..(a + 1) * m].copy_from_slice(&row);
    }
    let mut out = vec![zero(); m * m];
    for b in 0..m {
        let col: Vec<C> = (0..m).map(|a| tmp[a * m + b]).collect();
        let t = sine_apply(s, m, &col);
        for (a, v) in t.into_iter().enumerate() {
            out[a * m + b] = v;
        }
    }
    out
}

pub(crate) fn to_dmatrix(n: usize, a: &[C]) -> DMatrix<C> {
    DMatrix::from_row_slice(n, n, a)
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
pub(crate) fn hermitian_top(h: DMatrix<C>) -> (f64, Vec<C>) {
    let eig = h.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(idx).iter().copied().collect();
    (val, v)
}

/// All eigenvalues of a Hermitian matrix.
pub(crate) fn hermitian_eigenvalues(h: DMatrix<C>) -> Vec<f64> {
    h.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub(crate) fn general_eigenvalues(a: DMatrix<C>) -> Option<Vec<C>> {
    a.schur().eigenvalues().map(|v| v.iter().copied().collect())
}
