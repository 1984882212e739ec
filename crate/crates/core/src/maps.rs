//! Radial stretch, radial stretch interpolation and spiral stretch maps, in
//! space coordinates and as closed-form Zorich transforms.
//!
//! All stretch factors share the direction-dependent scale
//!
//! ```text
//! λ_K(c) = K / sqrt(K² + (1 - K²) c²)
//! ```
//!
//! where `c` is the cosine of the angle to the stretch axis, so a sphere of
//! radius r goes to an ellipsoid with one semi-axis Kr and the others r.
//! The raw radial stretch uses the last axis e_n; every oriented map uses e₁
//! and a [`Frame`] to place it.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecgeom::{rotate_pair, Frame, Matrix, Vector};
use crate::zorich::{canonicalize, chart_max, FundamentalPoint, Sheet};

/// λ_K as a function of cos² of the angle to the stretch axis.
pub fn stretch_factor(k: f64, cos2: f64) -> f64 {
    k / (k * k + (1.0 - k * k) * cos2).sqrt()
}

/// ln λ_K, the height shift V of the transformed stretch.
pub fn stretch_log_factor(k: f64, cos2: f64) -> f64 {
    k.ln() - 0.5 * (k * k + (1.0 - k * k) * cos2).ln()
}

fn check_factor(name: &str, k: f64) -> Result<()> {
    if !k.is_finite() || k < 1.0 {
        return Err(Error::InvalidInput(format!("{name} must be ≥ 1 (got {k})")));
    }
    Ok(())
}

fn nonzero_norm(y: &Vector) -> Result<f64> {
    let r = y.norm();
    if r == 0.0 {
        Err(Error::UndefinedAtOrigin)
    } else {
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchSpec {
    pub k: f64,
    pub frame: Frame,
}

impl StretchSpec {
    pub fn new(k: f64, frame: Frame) -> Result<Self> {
        check_factor("K", k)?;
        Ok(StretchSpec { k, frame })
    }
}

/// Interpolation between an outer K-stretch at |y| = e^t and an inner
/// L-stretch at |y| = e^s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpSpec {
    pub k: f64,
    pub l: f64,
    pub s: f64,
    pub t: f64,
    pub frame: Frame,
}

impl InterpSpec {
    pub fn new(k: f64, l: f64, s: f64, t: f64, frame: Frame) -> Result<Self> {
        check_factor("K", k)?;
        check_factor("L", l)?;
        if !(s.is_finite() && t.is_finite() && s < t) {
            return Err(Error::InvalidInput(format!("need s < t (got s={s}, t={t})")));
        }
        if (k / l).ln().abs() >= (t - s) / 2.0 {
            return Err(Error::InvalidInput(format!(
                "|ln(K/L)| = {} must be < (t - s)/2 = {}",
                (k / l).ln().abs(),
                (t - s) / 2.0
            )));
        }
        Ok(InterpSpec { k, l, s, t, frame })
    }

    /// The interpolation weight ν = (ln|y| - s)/(t - s).
    pub fn weight(&self, log_radius: f64) -> f64 {
        (log_radius - self.s) / (self.t - self.s)
    }
}

/// Spiral stretch: K-stretch along frame column 1 combined with rotation by
/// α·ln|y| in the plane of frame columns 1 and 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralSpec {
    pub k: f64,
    pub alpha: f64,
    pub frame: Frame,
}

impl SpiralSpec {
    pub fn new(k: f64, alpha: f64, frame: Frame) -> Result<Self> {
        check_factor("K", k)?;
        if !alpha.is_finite() {
            return Err(Error::InvalidInput("α must be finite".into()));
        }
        Ok(SpiralSpec { k, alpha, frame })
    }

    pub fn axis_aligned(k: f64, alpha: f64, n: usize) -> Result<Self> {
        SpiralSpec::new(k, alpha, Frame::identity(n))
    }
}

/// R: stretch by K along e_n.
pub fn radial_stretch(y: &Vector, k: f64) -> Result<Vector> {
    let r = nonzero_norm(y)?;
    let c = y.last() / r;
    Ok(y.scale(stretch_factor(k, c * c)))
}

/// Stretch by K along e₁.
pub fn stretch_axis1(w: &Vector, k: f64) -> Result<Vector> {
    let r = nonzero_norm(w)?;
    let c = w[0] / r;
    Ok(w.scale(stretch_factor(k, c * c)))
}

/// Scale factor of the e₁-axis interpolation map at log-radius `log_r` and
/// axis cosine² `cos2`, without the range check.
pub fn interp_factor(k: f64, l: f64, s: f64, t: f64, log_r: f64, cos2: f64) -> f64 {
    let nu = ((log_r - s) / (t - s)).clamp(0.0, 1.0);
    (nu * stretch_log_factor(k, cos2) + (1.0 - nu) * stretch_log_factor(l, cos2)).exp()
}

fn check_shell(log_r: f64, s: f64, t: f64) -> Result<()> {
    let tol = 1e-12 * (1.0 + s.abs().max(t.abs()));
    if log_r < s - tol || log_r > t + tol {
        return Err(Error::OutsideShell {
            radius: log_r.exp(),
            inner: s.exp(),
            outer: t.exp(),
        });
    }
    Ok(())
}

/// Interpolation map along e₁ on the shell e^s ≤ |w| ≤ e^t.
pub fn interp_axis1(w: &Vector, k: f64, l: f64, s: f64, t: f64) -> Result<Vector> {
    let r = nonzero_norm(w)?;
    let log_r = r.ln();
    check_shell(log_r, s, t)?;
    let c = w[0] / r;
    Ok(w.scale(interp_factor(k, l, s, t, log_r, c * c)))
}

/// Spiral stretch along e₁ rotating in the (1,2)-plane: λ_K(w) · rot(α ln|w|) · w.
pub fn spiral_axis1(w: &Vector, k: f64, alpha: f64) -> Result<Vector> {
    let r = nonzero_norm(w)?;
    let c = w[0] / r;
    let mut out = w.scale(stretch_factor(k, c * c));
    rotate_pair(&mut out, alpha * r.ln(), 0, 1);
    Ok(out)
}

/// F · R_{e₁}(Fᵀ y): stretch by K along σ = F e₁.
pub fn oriented_stretch(y: &Vector, spec: &StretchSpec) -> Result<Vector> {
    let w = spec.frame.pull_back(y);
    Ok(spec.frame.apply(&stretch_axis1(&w, spec.k)?))
}

/// F · R_I(Fᵀ y) with the K-stretch on |y| = e^t and the L-stretch on |y| = e^s.
pub fn interp_stretch(y: &Vector, spec: &InterpSpec) -> Result<Vector> {
    let w = spec.frame.pull_back(y);
    Ok(spec
        .frame
        .apply(&interp_axis1(&w, spec.k, spec.l, spec.s, spec.t)?))
}

/// F · R_s(Fᵀ y).
pub fn spiral_stretch(y: &Vector, spec: &SpiralSpec) -> Result<Vector> {
    let w = spec.frame.pull_back(y);
    Ok(spec.frame.apply(&spiral_axis1(&w, spec.k, spec.alpha)?))
}

/// cos² M of the folded chart coordinates, i.e. cos² of the polar angle of Z(x).
fn polar_cos2(x: &FundamentalPoint) -> f64 {
    let m = chart_max(&x.folded_chart());
    let c = m.cos();
    c * c
}

/// R̃: the Zorich transform of [`radial_stretch`], `x_n ↦ x_n + V(x̄)`.
pub fn radial_stretch_transform(x: &FundamentalPoint, k: f64) -> FundamentalPoint {
    let mut c = x.coords().clone();
    let n = c.dim();
    c[n - 1] += stretch_log_factor(k, polar_cos2(x));
    FundamentalPoint::from_trusted(c)
}

fn is_axis(v: &Vector, i: usize) -> bool {
    v.dist(&Vector::basis(v.dim(), i)) <= 1e-12
}

/// R̃_I: the Zorich transform of the interpolation map stretching along e_n,
/// `x_n ↦ x_n + V_I(x̄, x_n)` on s ≤ x_n ≤ t.
pub fn interp_stretch_transform(x: &FundamentalPoint, spec: &InterpSpec) -> Result<FundamentalPoint> {
    let n = x.dim();
    if !is_axis(&spec.frame.direction(), n - 1) {
        return Err(Error::InvalidInput(
            "closed-form transform needs the stretch along e_n; use transform_eval".into(),
        ));
    }
    let h = x.height();
    check_shell(h, spec.s, spec.t)?;
    let cos2 = polar_cos2(x);
    let nu = spec.weight(h);
    let v = stretch_log_factor(spec.k, cos2) * nu + stretch_log_factor(spec.l, cos2) * (1.0 - nu);
    let mut c = x.coords().clone();
    c[n - 1] += v;
    Ok(FundamentalPoint::from_trusted(c))
}

/// R̃_s on first-box chart coordinates (no canonicalization).
fn spiral_first_box(x: &[f64], k: f64, alpha: f64) -> Result<Vector> {
    let n = x.len();
    let chart = &x[..n - 1];
    let big_m = chart_max(chart);
    if big_m == 0.0 {
        return Err(Error::ChartSingularity);
    }
    let (s, c) = (alpha * x[n - 1]).sin_cos();
    let mut w = chart.to_vec();
    w[0] = x[0] * c - x[1] * s;
    w[1] = x[0] * s + x[1] * c;
    let wmax = chart_max(&w);
    let scale = big_m / wmax;
    let mut u: Vec<f64> = w.iter().map(|wi| wi * scale).collect();
    let sq: f64 = chart.iter().map(|v| v * v).sum();
    let q = x[0] * x[0] * big_m.sin().powi(2) / sq;
    u.push(x[n - 1] + k.ln() - 0.5 * (k * k + (1.0 - k * k) * q).ln());
    Ok(Vector::new(u))
}

/// R̃_s: the Zorich transform of the axis-aligned spiral stretch.
pub fn spiral_stretch_transform(x: &FundamentalPoint, spec: &SpiralSpec) -> Result<FundamentalPoint> {
    let n = x.dim();
    if spec.frame.matrix().max_abs_diff(&Matrix::identity(n)) > 1e-12 {
        return Err(Error::InvalidInput(
            "closed-form transform needs the identity frame; use transform_eval".into(),
        ));
    }
    let mut folded = x.folded_chart();
    folded.push(x.height());
    let mut u = spiral_first_box(&folded, spec.k, spec.alpha)?;
    if x.sheet() == Sheet::Second {
        u[0] = PI - u[0];
    }
    Ok(canonicalize(&u))
}

/// Which chart coordinate attains M (Case I: x₁, II: x₂, III: x_j, j ≥ 3).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PyramidCase {
    I,
    II,
    III(usize),
}

/// Which rotated component attains the minimum defining m.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubCase {
    /// m = 1/|x₁cos(αx_n) - x₂sin(αx_n)|
    A,
    /// m = 1/|x₁sin(αx_n) + x₂cos(αx_n)|
    B,
    /// m = 1/|x_j|, j ≥ 3
    C(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiralRegion {
    pub case: PyramidCase,
    pub sub: SubCase,
}

/// Default dispatch margin for the analytic Jacobian.
pub const REGION_MARGIN: f64 = 1e-6;

struct RegionData {
    region: SpiralRegion,
    /// index attaining M
    b: usize,
    /// index attaining max |w|
    a: usize,
    cos: f64,
    sin: f64,
    w: Vec<f64>,
}

fn top_two(v: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    let mut best = (0usize, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, x) in v.enumerate() {
        if x > best.1 {
            best = (i, x, best.1);
        } else if x > best.2 {
            best.2 = x;
        }
    }
    best
}

fn classify_first_box(x: &[f64], alpha: f64, margin: f64) -> Result<RegionData> {
    let n = x.len();
    let chart = &x[..n - 1];
    let (b, big_m, second_m) = top_two(chart.iter().map(|c| c.abs()));
    if big_m < margin || big_m - second_m < margin {
        return Err(Error::NearSingularRegion { margin });
    }
    let (sin, cos) = (alpha * x[n - 1]).sin_cos();
    let mut w = chart.to_vec();
    w[0] = x[0] * cos - x[1] * sin;
    w[1] = x[0] * sin + x[1] * cos;
    let (a, wmax, wsecond) = top_two(w.iter().map(|c| c.abs()));
    if wmax - wsecond < margin {
        return Err(Error::NearSingularRegion { margin });
    }
    let case = match b {
        0 => PyramidCase::I,
        1 => PyramidCase::II,
        j => PyramidCase::III(j + 1),
    };
    let sub = match a {
        0 => SubCase::A,
        1 => SubCase::B,
        j => SubCase::C(j + 1),
    };
    Ok(RegionData {
        region: SpiralRegion { case, sub },
        b,
        a,
        cos,
        sin,
        w,
    })
}

fn folded_coords(x: &FundamentalPoint) -> Vec<f64> {
    let mut f = x.folded_chart();
    f.push(x.height());
    f
}

/// The differentiability region of R̃_s containing `x` (first-box labels;
/// second-box points are classified after folding).
pub fn classify_spiral_region(x: &FundamentalPoint, alpha: f64, margin: f64) -> Result<SpiralRegion> {
    classify_first_box(&folded_coords(x), alpha, margin).map(|d| d.region)
}

/// Closed-form derivative of R̃_s at a first-box point, for the region
/// selected by `data`.
fn spiral_jacobian_first_box(x: &[f64], k: f64, alpha: f64, data: &RegionData) -> Matrix {
    let n = x.len();
    let d = n - 1;
    let RegionData { b, a, cos, sin, ref w, .. } = *data;
    let chart = &x[..d];
    let big_m = chart[b].abs();
    let sign_b = chart[b].signum();
    let wa = w[a].abs();
    let sign_a = w[a].signum();
    let (p, q) = (w[0], w[1]);

    // ∂w_i/∂x_k
    let dw = |i: usize, kk: usize| -> f64 {
        match (i, kk) {
            (0, 0) => cos,
            (0, 1) => -sin,
            (1, 0) => sin,
            (1, 1) => cos,
            (0, kk) if kk == d => -alpha * q,
            (1, kk) if kk == d => alpha * p,
            (i, kk) if i >= 2 && i == kk => 1.0,
            _ => 0.0,
        }
    };
    let dm = |kk: usize| if kk == b { sign_b } else { 0.0 };

    let mut jac = Matrix::zeros(n);
    for i in 0..d {
        for kk in 0..n {
            let dwa = sign_a * dw(a, kk);
            jac[(i, kk)] =
                dm(kk) * w[i] / wa + big_m * dw(i, kk) / wa - big_m * w[i] * dwa / (wa * wa);
        }
    }

    let sq: f64 = chart.iter().map(|v| v * v).sum();
    let (sm, cm) = big_m.sin_cos();
    let x1 = chart[0];
    let qv = x1 * x1 * sm * sm / sq;
    let denom = k * k + (1.0 - k * k) * qv;
    for kk in 0..d {
        let mut dq = x1 * x1 * 2.0 * sm * cm * dm(kk) / sq - x1 * x1 * sm * sm * 2.0 * chart[kk] / (sq * sq);
        if kk == 0 {
            dq += 2.0 * x1 * sm * sm / sq;
        }
        jac[(d, kk)] = -0.5 * (1.0 - k * k) * dq / denom;
    }
    jac[(d, d)] = 1.0;
    jac
}

/// Analytic Jacobian of R̃_s (axis-aligned spec) at `x`, dispatched on the
/// (case, sub-case) region. Points within `margin` of a region boundary are
/// rejected.
pub fn spiral_transform_jacobian_analytic(
    x: &FundamentalPoint,
    spec: &SpiralSpec,
    margin: f64,
) -> Result<(Matrix, SpiralRegion)> {
    let f = folded_coords(x);
    let data = classify_first_box(&f, spec.alpha, margin)?;
    let mut jac = spiral_jacobian_first_box(&f, spec.k, spec.alpha, &data);
    if x.sheet() == Sheet::Second {
        // conjugate by x₁ ↦ π - x₁
        let n = jac.dim();
        for i in 0..n {
            jac[(0, i)] = -jac[(0, i)];
            jac[(i, 0)] = -jac[(i, 0)];
        }
    }
    Ok((jac, data.region))
}

/// 2^{-(n+1)/2}: the Jacobian floor certified by [`select_alpha`].
pub fn spiral_jacobian_bound(n: usize) -> f64 {
    2f64.powf(-((n + 1) as f64) / 2.0)
}

/// Margin excluded around region boundaries on certification grids.
pub const GRID_MARGIN: f64 = 1e-3;

/// Result of the α search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaCertificate {
    /// Signed spiral rate.
    pub alpha: f64,
    pub bound: f64,
    /// Smallest Jacobian seen on the certification grid.
    pub min_jacobian: f64,
    /// Smallest Jacobian on the 2× refined grid.
    pub refined_min_jacobian: f64,
    pub grid: usize,
    pub points: usize,
}

/// Minimum of the analytic J_{R̃_s} over a cell-centred grid with `grid`
/// points per chart axis and `grid` rotation phases φ = αx_n in [0, 2π).
/// Returns (min, number of points evaluated).
pub fn spiral_min_jacobian(k: f64, alpha: f64, n: usize, grid: usize) -> (f64, usize) {
    let d = n - 1;
    let chart_step = PI / grid as f64;
    let phase_step = 2.0 * PI / grid as f64;
    let total = grid.pow(d as u32);

    let eval_chart = |idx: usize| -> (f64, usize) {
        let mut x = vec![0.0; n];
        let mut rem = idx;
        for c in x.iter_mut().take(d) {
            *c = -FRAC_PI_2 + (rem % grid) as f64 * chart_step + 0.5 * chart_step;
            rem /= grid;
        }
        let mut min = f64::INFINITY;
        let mut count = 0;
        for ph in 0..grid {
            let phi = (ph as f64 + 0.5) * phase_step;
            x[d] = if alpha == 0.0 { 0.0 } else { phi / alpha };
            let Ok(data) = classify_first_box(&x, alpha, GRID_MARGIN) else {
                continue;
            };
            let j = spiral_jacobian_first_box(&x, k, alpha, &data).det();
            min = min.min(j);
            count += 1;
            if alpha == 0.0 {
                break;
            }
        }
        (min, count)
    };
    let reduce = |a: (f64, usize), b: (f64, usize)| (a.0.min(b.0), a.1 + b.1);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..total)
            .into_par_iter()
            .map(eval_chart)
            .reduce(|| (f64::INFINITY, 0), reduce)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..total).map(eval_chart).fold((f64::INFINITY, 0), reduce)
    }
}

/// Largest |α| = 2^{-j}/... from a halving search starting at 1/2 whose
/// analytic Jacobian stays above 2^{-(n+1)/2} on the certification grid and
/// on its 2× refinement. `orientation` supplies the sign. Factors below 1
/// (compressions along e₁) are accepted.
pub fn select_alpha(k: f64, n: usize, orientation: f64, grid: usize) -> Result<AlphaCertificate> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("K must be positive (got {k})")));
    }
    if n < 3 {
        return Err(Error::InvalidInput("n must be ≥ 3".into()));
    }
    if grid < 2 {
        return Err(Error::InvalidInput("grid must have ≥ 2 points per axis".into()));
    }
    let sign = if orientation < 0.0 { -1.0 } else { 1.0 };
    let bound = spiral_jacobian_bound(n);
    let mut magnitude = 0.5;
    for _ in 0..60 {
        let alpha = sign * magnitude;
        let (min, points) = spiral_min_jacobian(k, alpha, n, grid);
        if min > bound {
            let (refined, _) = spiral_min_jacobian(k, alpha, n, 2 * grid);
            if refined > bound {
                return Ok(AlphaCertificate {
                    alpha,
                    bound,
                    min_jacobian: min,
                    refined_min_jacobian: refined,
                    grid,
                    points,
                });
            }
        }
        magnitude *= 0.5;
    }
    Err(Error::InvalidInput(format!(
        "no spiral rate certified for K = {k}, n = {n}"
    )))
}
