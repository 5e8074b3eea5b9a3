//! Small dense vectors and matrices for maps in low dimension.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A point of R^d.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(SmallVec<[f64; 4]>);

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point(SmallVec::from_vec(coords.into()))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(SmallVec::from_elem(0.0, dim))
    }

    /// The `axis`-th standard basis vector (0-based).
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.0[axis] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<&[f64]> for Point {
    fn from(s: &[f64]) -> Self {
        Point(SmallVec::from_slice(s))
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(a: [f64; N]) -> Self {
        Point(SmallVec::from_slice(&a))
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Point {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Square matrix of partial derivatives; entry (i, j) is ∂f_i/∂x_j.
#[derive(Clone, PartialEq)]
pub struct Jacobian {
    dim: usize,
    entries: SmallVec<[f64; 16]>,
}

impl Jacobian {
    pub fn zeros(dim: usize) -> Self {
        Jacobian {
            dim,
            entries: SmallVec::from_elem(0.0, dim * dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Build from row-major rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            m.entries[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Jacobian) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = (0..d).map(|k| self[(i, k)] * other[(k, j)]).sum();
            }
        }
        out
    }

    /// JᵀJ, the pulled-back metric.
    pub fn gram(&self) -> Self {
        self.transpose().mul(self)
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    /// Frobenius inner product ⟨A, B⟩ = Σ A_ij B_ij.
    pub fn inner(&self, other: &Jacobian) -> f64 {
        dot(&self.entries, &other.entries)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// Closed-form determinant for d ≤ 3, LU otherwise.
    pub fn det(&self) -> f64 {
        let m = &self.entries;
        match self.dim {
            0 => 1.0,
            1 => m[0],
            2 => m[0] * m[3] - m[1] * m[2],
            3 => {
                m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                    + m[2] * (m[3] * m[7] - m[4] * m[6])
            }
            _ => self.det_lu(),
        }
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det_lu(&self) -> f64 {
        let d = self.dim;
        let mut a: SmallVec<[f64; 16]> = self.entries.clone();
        let mut det = 1.0;
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r * d + col].abs().total_cmp(&a[s * d + col].abs()))
                .unwrap_or(col);
            let p = a[pivot * d + col];
            if p == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..d {
                    a.swap(col * d + k, pivot * d + k);
                }
                det = -det;
            }
            det *= p;
            for r in col + 1..d {
                let factor = a[r * d + col] / p;
                if factor != 0.0 {
                    for k in col..d {
                        a[r * d + k] -= factor * a[col * d + k];
                    }
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Jacobian {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Jacobian {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl fmt::Debug for Jacobian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.dim).map(|i| self.row(i)).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// Distance of J from a similarity, normalized by the similarity scale:
/// ‖JᵀJ − |det J|^{2/d} I‖_F / |det J|^{2/d}.
///
/// Zero exactly when all singular values of J coincide.
pub fn conformality_defect(j: &Jacobian) -> Result<f64> {
    let det = j.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular);
    }
    let scale = det.abs().powf(2.0 / j.dim() as f64);
    let mut g = j.gram();
    for i in 0..j.dim() {
        g[(i, i)] -= scale;
    }
    Ok(g.frobenius() / scale)
}
