//! Numerical derivatives, dilatation functionals and a grid harness for
//! checking pointwise bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::direction_sample;
use crate::vecgeom::{svd_small, Matrix, Vector};

/// Default finite-difference step (scaled by max(1, |x|)).
pub const DEFAULT_STEP: f64 = 1e-6;

/// Central-difference Jacobian with step `h·max(1, |x|)`.
pub fn finite_diff_jacobian<F>(f: F, x: &Vector, h: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive (got {h})")));
    }
    let n = x.dim();
    let step = h * x.norm().max(1.0);
    let mut jac = Matrix::zeros(n);
    let stencil_err = || Error::Stencil(x.as_slice().to_vec());
    for j in 0..n {
        let mut plus = x.clone();
        plus[j] += step;
        let mut minus = x.clone();
        minus[j] -= step;
        let fp = f(&plus).map_err(|_| stencil_err())?;
        let fm = f(&minus).map_err(|_| stencil_err())?;
        if fp.dim() != n || fm.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fp.dim() });
        }
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// ‖f′‖
    pub op_norm: f64,
    /// ℓ(f′), the smallest singular value
    pub min_sv: f64,
    /// J_f
    pub jac: f64,
    /// ‖f′‖ⁿ / J_f
    pub k_outer: f64,
    /// J_f / ℓ(f′)ⁿ
    pub k_inner: f64,
    /// ‖f′‖ · ‖(f′)⁻¹‖
    pub h_linear: f64,
}

impl DistortionReport {
    pub fn from_jacobian(m: &Matrix) -> Result<Self> {
        let n = m.dim() as i32;
        let jac = m.det();
        if !(jac > 1e-12) {
            return Err(Error::DegenerateDerivative(jac));
        }
        let sv = svd_small(m)?;
        let op_norm = sv[0];
        let min_sv = sv[sv.len() - 1];
        Ok(DistortionReport {
            op_norm,
            min_sv,
            jac,
            k_outer: op_norm.powi(n) / jac,
            k_inner: jac / min_sv.powi(n),
            h_linear: op_norm / min_sv,
        })
    }
}

/// Dilatations of `f` at `x` from a finite-difference Jacobian.
pub fn distortion_report<F>(f: F, x: &Vector, h: f64) -> Result<DistortionReport>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    DistortionReport::from_jacobian(&finite_diff_jacobian(f, x, h)?)
}

/// max/min of |f(x + rω) - f(x)| over a deterministic direction sample that
/// starts with the 2n signed axes.
pub fn linear_distortion_numeric<F>(f: F, x: &Vector, r: f64, directions: usize, seed: u64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let n = x.dim();
    let center = f(x).map_err(|e| Error::Sampling(format!("center: {e}")))?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for w in direction_sample(n, directions, seed) {
        let p = x + &w.scale(r);
        let d = f(&p)
            .map_err(|e| Error::Sampling(format!("direction {:?}: {e}", w.as_slice())))?
            .dist(&center);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(lo > 0.0) {
        return Err(Error::Sampling("image collapsed in some direction".into()));
    }
    Ok(hi / lo)
}

/// The 2×2 form governing the bilipschitz constant of the chart on the
/// region x ≥ |y| in dimension 3.
pub fn bilipschitz_form(x: f64, y: f64) -> Result<[[f64; 2]; 2]> {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(Error::ChartSingularity);
    }
    let s2 = x.sin().powi(2) / (r2 * r2);
    let off = -x * y * s2;
    Ok([[1.0 + y * y * s2, off], [off, x * x * s2]])
}

/// Eigenvalues (ascending) of a symmetric 2×2 matrix.
pub fn symmetric_eigenvalues_2x2(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let rad = half_diff.hypot(m[0][1]);
    (mean - rad, mean + rad)
}

pub fn bilipschitz_eigenvalues(x: f64, y: f64) -> Result<(f64, f64)> {
    bilipschitz_form(x, y).map(|m| symmetric_eigenvalues_2x2(&m))
}

/// Axis-aligned grid over a box: `counts[i]` points on axis i, either at
/// cell centres or including both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
    pub cell_centred: bool,
}

impl BoxGrid {
    pub fn cube(lo: f64, hi: f64, dim: usize, count: usize, cell_centred: bool) -> Self {
        BoxGrid {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
            counts: vec![count; dim],
            cell_centred,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi, c) = (self.lo[axis], self.hi[axis], self.counts[axis]);
        if self.cell_centred {
            lo + (hi - lo) * (i as f64 + 0.5) / c as f64
        } else if c == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (c - 1) as f64
        }
    }

    /// The grid point with linear index `idx` (axis 0 varies fastest).
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        (0..self.counts.len())
            .map(|axis| {
                let i = idx % self.counts[axis];
                idx /= self.counts[axis];
                self.coord(axis, i)
            })
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Outcome of evaluating a bound predicate over a point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub pass: bool,
    /// Points where the predicate was evaluated.
    pub evaluated: usize,
    /// Points excluded by the predicate (singular bands).
    pub skipped: usize,
    /// Points violating the bound or failing to evaluate.
    pub failures: usize,
    /// Smallest margin seen (negative means violated).
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    /// First evaluation error, with its location.
    pub first_error: Option<(Vec<f64>, String)>,
}

/// Per-point predicate outcome: `Skip` for excluded points, otherwise the
/// margin by which the bound holds.
pub enum Verdict {
    Skip,
    Margin(f64),
}

#[derive(Clone)]
struct Acc {
    evaluated: usize,
    skipped: usize,
    failures: usize,
    worst: Option<(f64, usize)>,
    first_error: Option<(usize, String)>,
}

impl Acc {
    fn empty() -> Self {
        Acc { evaluated: 0, skipped: 0, failures: 0, worst: None, first_error: None }
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.evaluated += other.evaluated;
        self.skipped += other.skipped;
        self.failures += other.failures;
        self.worst = match (self.worst, other.worst) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        };
        self.first_error = match (self.first_error, other.first_error) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        };
        self
    }
}

/// Evaluates `predicate` at every point and reduces to the worst margin.
/// A point fails when its margin is negative (or zero when `strict`) or when
/// the predicate errors. The reduction is order-independent, so parallel and
/// serial runs give identical reports.
pub fn grid_verify<P>(points: &[Vec<f64>], strict: bool, predicate: P) -> GridReport
where
    P: Fn(&[f64]) -> Result<Verdict> + Sync,
{
    let eval = |idx: usize| -> Acc {
        let mut acc = Acc::empty();
        match predicate(&points[idx]) {
            Ok(Verdict::Skip) => acc.skipped = 1,
            Ok(Verdict::Margin(m)) => {
                acc.evaluated = 1;
                let bad = m.is_nan() || m < 0.0 || (strict && m == 0.0);
                if bad {
                    acc.failures = 1;
                }
                acc.worst = Some((if m.is_nan() { f64::NEG_INFINITY } else { m }, idx));
            }
            Err(e) => {
                acc.evaluated = 1;
                acc.failures = 1;
                acc.first_error = Some((idx, e.to_string()));
                acc.worst = Some((f64::NEG_INFINITY, idx));
            }
        }
        acc
    };

    #[cfg(feature = "parallel")]
    let acc = {
        use rayon::prelude::*;
        (0..points.len())
            .into_par_iter()
            .map(eval)
            .reduce(Acc::empty, Acc::merge)
    };
    #[cfg(not(feature = "parallel"))]
    let acc = (0..points.len()).map(eval).fold(Acc::empty(), Acc::merge);

    let (worst_margin, worst_point) = match acc.worst {
        Some((m, i)) => (m, points[i].clone()),
        None => (f64::INFINITY, Vec::new()),
    };
    GridReport {
        pass: acc.failures == 0 && acc.evaluated > 0,
        evaluated: acc.evaluated,
        skipped: acc.skipped,
        failures: acc.failures,
        worst_margin,
        worst_point,
        first_error: acc.first_error.map(|(i, e)| (points[i].clone(), e)),
    }
}
