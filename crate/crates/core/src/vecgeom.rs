//! Dense vectors and small square matrices in arbitrary dimension, with the
//! handful of decompositions the map constructions need: one-sided Jacobi
//! SVD, LU determinants, orthonormal frames and great-circle geometry.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of R^n.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    /// Like [`Vector::new`] but rejects non-finite coordinates.
    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in {coords:?}"
            )));
        }
        Ok(Vector(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    /// The standard basis vector e_i (0-based index).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        // hypot-style scaling keeps tiny and huge vectors accurate
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        let s: f64 = self.0.iter().map(|c| (c / scale) * (c / scale)).sum();
        scale * s.sqrt()
    }

    /// Max-norm, written M(x) for chart coordinates.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * s).collect())
    }

    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Everything but the last coordinate (the chart part x̄ of a point of B).
    pub fn head(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

/// Square matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_columns(cols: &[Vector]) -> Result<Self> {
        let n = cols.len();
        let mut m = Matrix::zeros(n);
        for (j, c) in cols.iter().enumerate() {
            if c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.dim(),
                });
            }
            for i in 0..n {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.n).map(|i| self[(i, j)]).collect())
    }

    pub fn set_column(&mut self, j: usize, v: &Vector) {
        for i in 0..self.n {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        Vector(
            (0..self.n)
                .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// Mᵀv without forming the transpose.
    pub fn tr_mul_vec(&self, v: &Vector) -> Vector {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Vector(out)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.is_finite())
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
                .unwrap_or(col);
            let p = a[pivot * n + col];
            if p == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            det *= p;
            for i in col + 1..n {
                let factor = a[i * n + col] / p;
                if factor != 0.0 {
                    for j in col..n {
                        a[i * n + j] -= factor * a[col * n + j];
                    }
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Full singular value decomposition `m = u · diag(s) · vᵀ`, values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let n = self.s.len();
        let mut us = self.u.clone();
        for j in 0..n {
            for i in 0..n {
                us[(i, j)] *= self.s[j];
            }
        }
        us.matmul(&self.v.transpose())
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided Jacobi SVD.
///
/// Column pairs are rotated until every off-diagonal Gram entry is below
/// `1e-15·sqrt(a_pp·a_qq)`, which also implies the absolute criterion
/// `|a_pq| ≤ 1e-14·trace(AᵀA)`.
pub fn jacobi_svd(m: &Matrix) -> Result<Svd> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let n = m.dim();
    // work on columns: a = m, v = I
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j).into_inner()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| Vector::basis(n, j).into_inner()).collect();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let (ap, aq) = (a[p][k], a[q][k]);
                    a[p][k] = c * ap - s * aq;
                    a[q][k] = s * ap + c * aq;
                    let (vp, vq) = (v[p][k], v[q][k]);
                    v[p][k] = c * vp - s * vq;
                    v[q][k] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(j, col)| (Vector(col.clone()).norm(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut u = Matrix::zeros(n);
    let mut vm = Matrix::zeros(n);
    let mut s = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &(sv, j)) in order.iter().enumerate() {
        s.push(sv);
        vm.set_column(k, &Vector(v[j].clone()));
        if sv > 0.0 {
            u.set_column(k, &Vector(a[j].iter().map(|x| x / sv).collect()));
        } else {
            missing.push(k);
        }
    }
    // complete U for rank-deficient input
    if !missing.is_empty() {
        let have: Vec<Vector> = (0..n)
            .filter(|k| !missing.contains(k))
            .map(|k| u.column(k))
            .collect();
        let extra = complete_orthonormal(&have, n);
        for (k, col) in missing.into_iter().zip(extra) {
            u.set_column(k, &col);
        }
    }
    Ok(Svd { u, s, v: vm })
}

/// Singular values of a small square matrix, descending.
pub fn svd_small(m: &Matrix) -> Result<Vec<f64>> {
    jacobi_svd(m).map(|svd| svd.s)
}

/// Extends an orthonormal set to `n` vectors by Gram–Schmidt over the
/// standard basis: basis vectors are tried in index order and accepted when
/// the residual after projection exceeds 1/2; if a pass accepts none, the
/// largest residual is taken.
fn complete_orthonormal(have: &[Vector], n: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = have.to_vec();
    let mut extra = Vec::new();
    while basis.len() < n {
        let residuals: Vec<Vector> = (0..n)
            .map(|i| {
                let mut r = Vector::basis(n, i);
                for b in &basis {
                    let d = r.dot(b);
                    r = &r - &b.scale(d);
                }
                r
            })
            .collect();
        let pick = residuals
            .iter()
            .position(|r| r.norm() > 0.5)
            .unwrap_or_else(|| {
                residuals
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            });
        let mut r = residuals[pick].clone();
        // second pass for numerical orthogonality
        for b in &basis {
            let d = r.dot(b);
            r = &r - &b.scale(d);
        }
        let r = r.normalized().expect("residual of a basis vector is nonzero");
        basis.push(r.clone());
        extra.push(r);
    }
    extra
}

/// Orthogonal matrix with det +1 whose first column is the distinguished
/// direction σ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame(Matrix);

impl Frame {
    pub fn identity(n: usize) -> Self {
        Frame(Matrix::identity(n))
    }

    /// Wraps a matrix after checking orthogonality and orientation.
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        let n = m.dim();
        let gram = m.transpose().matmul(&m);
        if gram.max_abs_diff(&Matrix::identity(n)) > 1e-10 || (m.det() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(
                "frame must be orthogonal with determinant +1".into(),
            ));
        }
        Ok(Frame(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vector {
        self.0.column(j)
    }

    /// The distinguished direction σ = F·e₁.
    pub fn direction(&self) -> Vector {
        self.0.column(0)
    }

    /// F·v
    pub fn apply(&self, v: &Vector) -> Vector {
        self.0.mul_vec(v)
    }

    /// Fᵀ·v
    pub fn pull_back(&self, v: &Vector) -> Vector {
        self.0.tr_mul_vec(v)
    }

    /// F·Q for an orthogonal Q with det +1 (e.g. a planar rotation).
    pub fn compose(&self, q: &Matrix) -> Frame {
        Frame(self.0.matmul(q))
    }
}

/// Builds a frame with first column `sigma` and, when given, second column
/// along the component of `hint` orthogonal to `sigma`. Remaining columns come
/// from deterministic Gram–Schmidt over the standard basis; the last column's
/// sign is chosen so that det F = +1.
pub fn frame_from_direction(sigma: &Vector, hint: Option<&Vector>) -> Result<Frame> {
    let n = sigma.dim();
    if n < 2 || !sigma.is_finite() {
        return Err(Error::InvalidInput("direction must be finite, n ≥ 2".into()));
    }
    if (sigma.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "direction must be a unit vector (|σ| = {})",
            sigma.norm()
        )));
    }
    let mut cols = vec![sigma.clone()];
    if let Some(h) = hint {
        if h.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.dim(),
            });
        }
        let perp = h - &sigma.scale(h.dot(sigma));
        let hn = h.norm();
        if hn == 0.0 || perp.norm() <= 1e-10 * hn {
            return Err(Error::DegenerateHint);
        }
        cols.push(perp.normalized().ok_or(Error::DegenerateHint)?);
    }
    let extra = complete_orthonormal(&cols, n);
    cols.extend(extra);
    let mut m = Matrix::from_columns(&cols)?;
    if m.det() < 0.0 {
        let last = -&m.column(n - 1);
        m.set_column(n - 1, &last);
    }
    Ok(Frame(m))
}

/// Minor-arc angle between two directions (normalized internally).
pub fn great_circle_angle(sigma1: &Vector, sigma2: &Vector) -> Result<f64> {
    let a = sigma1
        .normalized()
        .ok_or_else(|| Error::InvalidInput("zero direction".into()))?;
    let b = sigma2
        .normalized()
        .ok_or_else(|| Error::InvalidInput("zero direction".into()))?;
    let c = a.dot(&b);
    let s = (&b - &a.scale(c)).norm();
    let angle = s.atan2(c);
    if std::f64::consts::PI - angle <= 1e-10 {
        return Err(Error::AmbiguousArc);
    }
    Ok(angle)
}

/// Rotation by `theta` in the (i, j) coordinate plane (0-based), taking e_i
/// towards e_j.
pub fn planar_rotation(n: usize, theta: f64, i: usize, j: usize) -> Result<Matrix> {
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidAxes(i, j));
    }
    let mut m = Matrix::identity(n);
    let (s, c) = theta.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(j, i)] = s;
    m[(i, j)] = -s;
    Ok(m)
}

/// Rotates the (i, j) components of `v` in place.
pub(crate) fn rotate_pair(v: &mut Vector, theta: f64, i: usize, j: usize) {
    let (s, c) = theta.sin_cos();
    let (a, b) = (v[i], v[j]);
    v[i] = c * a - s * b;
    v[j] = s * a + c * b;
}
