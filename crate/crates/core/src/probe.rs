//! Rescalings f_t(x) = f(t x)/ρ_f(t) tabulated over a grid, one slice per t.

use serde::{Deserialize, Serialize};

use crate::distortion::BoxGrid;
use crate::error::{Error, Result};
use crate::maps::{spiral_axis1, stretch_axis1};
use crate::orbit::RealizedMap;
use crate::vecgeom::{planar_rotation, Matrix, Vector};

/// Maps with a known mean radius, centred at x₀ = 0.
#[derive(Clone, Debug)]
pub enum ProbeMap {
    /// Radial stretch by K along e₁.
    Stretch { k: f64 },
    /// Rotation by θ in the (1,2)-plane.
    Rotation { matrix: Matrix },
    /// Spiral stretch along e₁ with rate α.
    Spiral { k: f64, alpha: f64 },
    Realized(Box<RealizedMap>),
}

impl ProbeMap {
    pub fn stretch(k: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("K must be ≥ 1 (got {k})")));
        }
        Ok(ProbeMap::Stretch { k })
    }

    pub fn rotation(n: usize, theta: f64) -> Result<Self> {
        Ok(ProbeMap::Rotation { matrix: planar_rotation(n, theta, 0, 1)? })
    }

    pub fn spiral(k: f64, alpha: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite() && alpha.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid spiral parameters K = {k}, α = {alpha}")));
        }
        Ok(ProbeMap::Spiral { k, alpha })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProbeMap::Stretch { .. } => "stretch",
            ProbeMap::Rotation { .. } => "rotation",
            ProbeMap::Spiral { .. } => "spiral",
            ProbeMap::Realized(_) => "realized",
        }
    }

    /// f_t(x) with t = e^{log_t}.
    pub fn rescaled(&self, log_t: f64, x: &Vector) -> Result<Vector> {
        let n = x.dim() as f64;
        match self {
            ProbeMap::Stretch { k } => Ok(stretch_axis1(x, *k)?.scale(k.powf(-1.0 / n))),
            ProbeMap::Rotation { matrix } => {
                if matrix.dim() != x.dim() {
                    return Err(Error::DimensionMismatch { expected: matrix.dim(), got: x.dim() });
                }
                Ok(matrix.mul_vec(x))
            }
            ProbeMap::Spiral { k, alpha } => {
                // rotation angle α ln(t|x|) = α ln t + α ln|x|
                let mut y = spiral_axis1(x, *k, *alpha)?;
                let (s, c) = (alpha * log_t).sin_cos();
                let (a, b) = (y[0], y[1]);
                y[0] = c * a - s * b;
                y[1] = s * a + c * b;
                Ok(y.scale(k.powf(-1.0 / n)))
            }
            ProbeMap::Realized(f) => f.rescaled_log(log_t, x),
        }
    }
}

/// Cell-centred `grid`ⁿ points of [-1, 1]ⁿ (never the origin for even
/// `grid`; an odd grid drops its centre point).
pub fn probe_grid(n: usize, grid: usize) -> Vec<Vector> {
    BoxGrid::cube(-1.0, 1.0, n, grid, true)
        .points()
        .into_iter()
        .map(Vector::new)
        .filter(|v| v.norm() > 0.0)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub map: String,
    pub log_t: Vec<f64>,
    pub points: Vec<Vector>,
    /// slices[i][j] = f_{t_i}(points[j])
    pub slices: Vec<Vec<Vector>>,
}

impl ProbeTable {
    /// max over slice pairs and grid points of |f_s(x) - f_t(x)|.
    pub fn max_pairwise_distance(&self) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..self.slices.len() {
            for b in a + 1..self.slices.len() {
                for (p, q) in self.slices[a].iter().zip(&self.slices[b]) {
                    worst = worst.max(p.dist(q));
                }
            }
        }
        worst
    }
}

pub fn probe(map: &ProbeMap, log_t: &[f64], points: &[Vector]) -> Result<ProbeTable> {
    if log_t.is_empty() || points.is_empty() {
        return Err(Error::InvalidInput("probe needs at least one scale and one point".into()));
    }
    let slices = log_t
        .iter()
        .map(|&lt| points.iter().map(|x| map.rescaled(lt, x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeTable { map: map.name().into(), log_t: log_t.to_vec(), points: points.to_vec(), slices })
}
