//! Orbit realization: plan paths through a target set, assemble a piecewise
//! shell map f whose rescalings f(t·)/ρ_f(t) trace those paths, and sample
//! the orbit curve γ(t) = f(t e₁)/ρ_f(t).
//!
//! Each shell piece j covers r_in ≤ |x| ≤ r_out and is posed in the image by
//! its entry frame P_j:
//!
//! ```text
//! f(x) = r_out · P_j · T_j(x / r_out)
//! ```
//!
//! with T_j a spiral stretch (arcs), a radial stretch interpolation (radial
//! moves) or a twist that turns the frame about σ. All T_j stretch along e₁
//! in the domain, so γ moves exactly along the planned segments and passes
//! through u·σ at every piece boundary. Radii are kept as logarithms.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{finite_diff_jacobian, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::maps::{interp_factor, select_alpha, stretch_factor, AlphaCertificate};
use crate::sphere::zonal_mean;
use crate::vecgeom::{frame_from_direction, great_circle_angle, planar_rotation, rotate_pair, Frame, Matrix, Vector};

/// Target file contents: waypoints of a path in the annulus 1/C ≤ |y| ≤ C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetFile {
    pub waypoints: Vec<Vec<f64>>,
    #[serde(default)]
    pub closed: bool,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetSet {
    waypoints: Vec<Vector>,
    closed: bool,
    c: f64,
}

impl TargetSet {
    pub fn new(waypoints: Vec<Vector>, closed: bool, c: f64) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidInput("target needs at least one waypoint".into()));
        }
        if !(c.is_finite() && c >= 1.0) {
            return Err(Error::InvalidInput(format!("annulus bound C must be ≥ 1 (got {c})")));
        }
        let n = waypoints[0].dim();
        if n < 3 {
            return Err(Error::InvalidInput("targets live in R^n with n ≥ 3".into()));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if w.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: w.dim() });
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!("waypoint {i} is not finite")));
            }
            let r = w.norm();
            let slack = 1e-12;
            if r == 0.0 || r < (1.0 / c) * (1.0 - slack) || r > c * (1.0 + slack) {
                return Err(Error::InvalidInput(format!(
                    "waypoint {i} has radius {r}, outside [1/C, C] = [{}, {c}]",
                    1.0 / c
                )));
            }
        }
        let hops = hop_pairs(waypoints.len(), closed);
        for (i, j) in hops {
            if waypoints[i].dist(&waypoints[j]) <= 1e-12 * waypoints[i].norm() {
                return Err(Error::InvalidInput(format!("waypoints {i} and {j} coincide")));
            }
        }
        Ok(TargetSet { waypoints, closed, c })
    }

    pub fn from_file(file: &TargetFile) -> Result<Self> {
        let pts = file.waypoints.iter().map(|w| Vector::try_new(w.clone())).collect::<Result<Vec<_>>>()?;
        TargetSet::new(pts, file.closed, file.c)
    }

    pub fn dim(&self) -> usize {
        self.waypoints[0].dim()
    }

    pub fn waypoints(&self) -> &[Vector] {
        &self.waypoints
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn annulus_bound(&self) -> f64 {
        self.c
    }

    /// Index pairs of consecutive waypoints (including the closing hop).
    pub fn hops(&self) -> Vec<(usize, usize)> {
        hop_pairs(self.waypoints.len(), self.closed)
    }
}

fn hop_pairs(len: usize, closed: bool) -> Vec<(usize, usize)> {
    let mut hops: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
    if closed && len > 2 {
        hops.push((len - 1, 0));
    }
    hops
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PathSegment {
    /// u₁σ → u₂σ along the ray.
    Radial { u1: f64, u2: f64, sigma: Vector },
    /// uσ₁ → uσ₂ along the minor great-circle arc.
    Arc { u: f64, sigma1: Vector, sigma2: Vector },
}

impl PathSegment {
    pub fn start(&self) -> Vector {
        match self {
            PathSegment::Radial { u1, sigma, .. } => sigma.scale(*u1),
            PathSegment::Arc { u, sigma1, .. } => sigma1.scale(*u),
        }
    }

    pub fn end(&self) -> Vector {
        match self {
            PathSegment::Radial { u2, sigma, .. } => sigma.scale(*u2),
            PathSegment::Arc { u, sigma2, .. } => sigma2.scale(*u),
        }
    }

    pub fn reversed(&self) -> PathSegment {
        match self.clone() {
            PathSegment::Radial { u1, u2, sigma } => PathSegment::Radial { u1: u2, u2: u1, sigma },
            PathSegment::Arc { u, sigma1, sigma2 } => PathSegment::Arc { u, sigma1: sigma2, sigma2: sigma1 },
        }
    }

    /// The point at fraction `s ∈ [0, 1]` along the segment.
    pub fn point_at(&self, s: f64) -> Vector {
        match self {
            PathSegment::Radial { u1, u2, sigma } => sigma.scale(u1 + s * (u2 - u1)),
            PathSegment::Arc { u, sigma1, sigma2 } => slerp(sigma1, sigma2, s).scale(*u),
        }
    }
}

fn slerp(a: &Vector, b: &Vector, s: f64) -> Vector {
    let theta = great_circle_angle(a, b).unwrap_or(0.0);
    if theta < 1e-15 {
        return a.clone();
    }
    let (wa, wb) = (((1.0 - s) * theta).sin(), (s * theta).sin());
    (&a.scale(wa) + &b.scale(wb)).scale(1.0 / theta.sin())
}

/// Decomposes every hop u₁σ₁ → u₂σ₂ into an arc at radius u₁ (split into
/// pieces of at most π/2) followed by a radial move along σ₂.
pub fn forward_plan(target: &TargetSet) -> Result<Vec<PathSegment>> {
    let mut out = Vec::new();
    for (i, j) in target.hops() {
        let (a, b) = (&target.waypoints[i], &target.waypoints[j]);
        let (u1, u2) = (a.norm(), b.norm());
        let (s1, s2) = (a.scale(1.0 / u1), b.scale(1.0 / u2));
        let theta = great_circle_angle(&s1, &s2).map_err(|e| match e {
            Error::AmbiguousArc => Error::RequiresIntermediateWaypoint(i, j),
            other => other,
        })?;
        if theta > 1e-12 {
            let parts = (theta / FRAC_PI_2 - 1e-12).ceil().max(1.0) as usize;
            let mut prev = s1.clone();
            for p in 1..=parts {
                let next = if p == parts { s2.clone() } else { slerp(&s1, &s2, p as f64 / parts as f64) };
                out.push(PathSegment::Arc { u: u1, sigma1: prev, sigma2: next.clone() });
                prev = next;
            }
        }
        if (u2 - u1).abs() > 1e-12 * u1 {
            out.push(PathSegment::Radial { u1, u2, sigma: s2 });
        }
    }
    Ok(out)
}

/// Plans Γ₁ … Γ_{k_max}. Odd k follow the waypoints forward; even k retrace
/// them backwards (closed targets always go forward), so each Γ_k ends where
/// Γ_{k+1} starts.
pub fn plan_paths(target: &TargetSet, k_max: usize) -> Result<Vec<Vec<PathSegment>>> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be ≥ 1".into()));
    }
    let forward = forward_plan(target)?;
    let backward: Vec<PathSegment> = forward.iter().rev().map(PathSegment::reversed).collect();
    Ok((1..=k_max)
        .map(|k| if target.closed || k % 2 == 1 { forward.clone() } else { backward.clone() })
        .collect())
}

/// Dense samples of the target trace (each forward segment at `per_segment`
/// + 1 points; a singleton target is its one point).
pub fn target_trace(target: &TargetSet, per_segment: usize) -> Result<Vec<Vector>> {
    let plan = forward_plan(target)?;
    if plan.is_empty() {
        return Ok(vec![target.waypoints[0].clone()]);
    }
    let m = per_segment.max(1);
    Ok(plan
        .iter()
        .flat_map(|seg| (0..=m).map(move |i| seg.point_at(i as f64 / m as f64)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "lowercase")]
pub enum PieceKind {
    /// Spiral stretch with factor K and rate α turning σ by `sign·theta`.
    Spiral { k: f64, alpha: f64, theta: f64, sign: f64 },
    /// Interpolation from the K-stretch (outer) to the L-stretch (inner) over
    /// normalized log-radii [s, 0].
    Interp { k: f64, l: f64, s: f64 },
    /// K-stretch followed by a rotation by -rate·ln|z| in the plane spanned
    /// by e₂ and `b` (entry-frame coordinates, both orthogonal to e₁).
    Twist { k: f64, rate: f64, angle: f64, b: Vector },
}

impl PieceKind {
    pub fn name(&self) -> &'static str {
        match self {
            PieceKind::Spiral { .. } => "spiral",
            PieceKind::Interp { .. } => "interp",
            PieceKind::Twist { .. } => "twist",
        }
    }

    /// The stretch factor on the outer boundary.
    pub fn outer_factor(&self) -> f64 {
        match *self {
            PieceKind::Spiral { k, .. } | PieceKind::Interp { k, .. } | PieceKind::Twist { k, .. } => k,
        }
    }

    /// The stretch factor on the inner boundary.
    pub fn inner_factor(&self) -> f64 {
        match *self {
            PieceKind::Interp { l, .. } => l,
            _ => self.outer_factor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellPiece {
    pub log_r_out: f64,
    /// ln(r_out / r_in) > 0
    pub log_depth: f64,
    /// Entry frame P (P e₁ = σ at the outer boundary).
    pub frame: Frame,
    pub kind: PieceKind,
    /// 1-based plan index k of Γ_k this piece realizes.
    pub plan: usize,
    /// Planned orbit point at the outer boundary.
    pub entry: Vector,
    /// Planned orbit point at the inner boundary.
    pub exit: Vector,
}

impl ShellPiece {
    pub fn r_out(&self) -> f64 {
        self.log_r_out.exp()
    }

    pub fn r_in(&self) -> f64 {
        self.log_r_in().exp()
    }

    pub fn log_r_in(&self) -> f64 {
        self.log_r_out - self.log_depth
    }
}

/// Pure stretch region: f(x) = P · S_K(x).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchRegion {
    pub k: f64,
    pub frame: Frame,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedMap {
    pub n: usize,
    pub log_r_start: f64,
    pub pieces: Vec<ShellPiece>,
    /// Applies for |x| ≥ r_start.
    pub outer: StretchRegion,
    /// Applies below the innermost piece.
    pub inner: StretchRegion,
    pub plans: Vec<Vec<PathSegment>>,
    pub alpha_certificates: Vec<AlphaCertificate>,
    pub quadrature_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Grid resolution for the α search.
    pub alpha_grid: usize,
    /// Angular rate of twist pieces per unit log-radius.
    pub twist_rate: f64,
    /// Zonal quadrature nodes for mean radii in interpolation shells.
    pub quadrature_nodes: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { alpha_grid: 33, twist_rate: 0.5, quadrature_nodes: 4096 }
    }
}

/// K = u^{n/(n-1)}, the stretch whose rescaled tip sits at radius u.
pub fn factor_for_radius(u: f64, n: usize) -> f64 {
    u.powf(n as f64 / (n as f64 - 1.0))
}

/// Rotation by `psi` in the plane (e₂, b), taking e₂ towards b.
fn twist_rotate(v: &mut Vector, b: &Vector, psi: f64) {
    let (s, c) = psi.sin_cos();
    let va = v[1];
    let vb = v.dot(b);
    for i in 0..v.dim() {
        let a_i = if i == 1 { 1.0 } else { 0.0 };
        v[i] += (c - 1.0) * (va * a_i + vb * b[i]) + s * (va * b[i] - vb * a_i);
    }
}

fn twist_matrix(n: usize, b: &Vector, psi: f64) -> Matrix {
    let cols: Vec<Vector> = (0..n)
        .map(|j| {
            let mut e = Vector::basis(n, j);
            twist_rotate(&mut e, b, psi);
            e
        })
        .collect();
    Matrix::from_columns(&cols).expect("square")
}

struct Builder {
    n: usize,
    opts: BuildOptions,
    log_r: f64,
    frame: Frame,
    pieces: Vec<ShellPiece>,
    alphas: HashMap<(u64, i8), AlphaCertificate>,
}

impl Builder {
    fn push(&mut self, kind: PieceKind, depth: f64, plan: usize, entry: Vector, exit: Vector, exit_frame: Frame) {
        self.pieces.push(ShellPiece {
            log_r_out: self.log_r,
            log_depth: depth,
            frame: self.frame.clone(),
            kind,
            plan,
            entry,
            exit,
        });
        self.log_r -= depth;
        self.frame = exit_frame;
    }

    fn alpha(&mut self, k: f64, orientation: f64) -> Result<f64> {
        let key = (k.to_bits(), if orientation < 0.0 { -1 } else { 1 });
        if let Some(c) = self.alphas.get(&key) {
            return Ok(c.alpha);
        }
        let cert = select_alpha(k, self.n, orientation, self.opts.alpha_grid)?;
        let a = cert.alpha;
        self.alphas.insert(key, cert);
        Ok(a)
    }

    fn arc(&mut self, u: f64, s1: &Vector, s2: &Vector, plan: usize) -> Result<()> {
        let n = self.n;
        let theta = great_circle_angle(s1, s2)?;
        let d = (s2 - &s1.scale(theta.cos())).normalized().ok_or(Error::AmbiguousArc)?;
        let k = factor_for_radius(u, n);
        let here = s1.scale(u);
        let c2 = self.frame.column(1).dot(&d);
        if (c2.abs() - 1.0).abs() > 1e-9 {
            // turn the frame about σ until its second column is ±d
            let e = self.frame.pull_back(&d);
            let t = if e[1] >= 0.0 { e.clone() } else { -&e };
            let cos_phi = t[1].clamp(-1.0, 1.0);
            let mut v = t.clone();
            v[1] -= cos_phi;
            v[0] = 0.0;
            let sin_phi = v.norm();
            let b = v.scale(1.0 / sin_phi);
            let phi = sin_phi.atan2(cos_phi);
            let rate = self.opts.twist_rate;
            let exit_frame = self.frame.compose(&twist_matrix(n, &b, phi));
            self.push(
                PieceKind::Twist { k, rate, angle: phi, b },
                phi / rate,
                plan,
                here.clone(),
                here.clone(),
                exit_frame,
            );
        }
        let c2 = self.frame.column(1).dot(&d);
        let sign = if c2 >= 0.0 { 1.0 } else { -1.0 };
        let alpha = self.alpha(k, -sign)?;
        let exit_frame = self.frame.compose(&planar_rotation(n, sign * theta, 0, 1)?);
        if exit_frame.direction().dist(s2) > 1e-9 {
            return Err(Error::InvalidInput("frame drifted off the planned direction".into()));
        }
        self.push(
            PieceKind::Spiral { k, alpha, theta, sign },
            theta / alpha.abs(),
            plan,
            here,
            s2.scale(u),
            exit_frame,
        );
        Ok(())
    }

    fn radial(&mut self, u1: f64, u2: f64, sigma: &Vector, plan: usize) {
        let k = factor_for_radius(u1, self.n);
        let l = factor_for_radius(u2, self.n);
        let s = -(2.0 * (k / l).ln().abs() + 1.0);
        let frame = self.frame.clone();
        self.push(PieceKind::Interp { k, l, s }, -s, plan, sigma.scale(u1), sigma.scale(u2), frame);
    }
}

fn first_arc_tangent(plans: &[Vec<PathSegment>]) -> Option<Vector> {
    plans.iter().flatten().find_map(|seg| match seg {
        PathSegment::Arc { sigma1, sigma2, .. } => {
            let c = sigma1.dot(sigma2);
            (sigma2 - &sigma1.scale(c)).normalized()
        }
        _ => None,
    })
}

/// Assembles the shell map realizing `plans`, starting from the point
/// `start` at radius `r_start`. Empty plans give the pure stretch whose
/// rescaled tip is `start`.
pub fn build_map(plans: &[Vec<PathSegment>], start: &Vector, r_start: f64) -> Result<RealizedMap> {
    build_map_with(plans, start, r_start, &BuildOptions::default())
}

pub fn build_map_with(plans: &[Vec<PathSegment>], start: &Vector, r_start: f64, opts: &BuildOptions) -> Result<RealizedMap> {
    if !(r_start > 0.0 && r_start.is_finite()) {
        return Err(Error::InvalidInput(format!("r_start must be positive (got {r_start})")));
    }
    let n = start.dim();
    if n < 3 {
        return Err(Error::InvalidInput("n must be ≥ 3".into()));
    }
    let u0 = start.norm();
    let sigma0 = start.normalized().ok_or(Error::UndefinedAtOrigin)?;
    let mut cursor = start.clone();
    for seg in plans.iter().flatten() {
        if seg.start().dist(&cursor) > 1e-9 * cursor.norm().max(1.0) {
            return Err(Error::InvalidInput("plans are not chained end to start".into()));
        }
        if seg.start().dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: seg.start().dim() });
        }
        cursor = seg.end();
    }

    let hint = first_arc_tangent(plans);
    let frame0 = frame_from_direction(&sigma0, hint.as_ref())?;
    let outer = StretchRegion { k: factor_for_radius(u0, n), frame: frame0.clone() };
    let mut b = Builder {
        n,
        opts: opts.clone(),
        log_r: r_start.ln(),
        frame: frame0,
        pieces: Vec::new(),
        alphas: HashMap::new(),
    };
    let mut u_last = u0;
    for (idx, plan) in plans.iter().enumerate() {
        for seg in plan {
            match seg {
                PathSegment::Arc { u, sigma1, sigma2 } => {
                    b.arc(*u, sigma1, sigma2, idx + 1)?;
                    u_last = *u;
                }
                PathSegment::Radial { u1, u2, sigma } => {
                    b.radial(*u1, *u2, sigma, idx + 1);
                    u_last = *u2;
                }
            }
        }
    }
    let inner = StretchRegion { k: factor_for_radius(u_last, n), frame: b.frame.clone() };
    let mut alpha_certificates: Vec<AlphaCertificate> = b.alphas.into_values().collect();
    alpha_certificates.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    Ok(RealizedMap {
        n,
        log_r_start: r_start.ln(),
        pieces: b.pieces,
        outer,
        inner,
        plans: plans.to_vec(),
        alpha_certificates,
        quadrature_nodes: opts.quadrature_nodes,
    })
}

/// Where a radius falls: outside all pieces, in piece j, or inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Outer,
    Piece(usize),
    Inner,
}

impl Region {
    /// Piece index for tables: -1 outside, the piece count inside.
    pub fn index(self, pieces: usize) -> i64 {
        match self {
            Region::Outer => -1,
            Region::Piece(j) => j as i64,
            Region::Inner => pieces as i64,
        }
    }
}

fn stretch_unit(k: f64, xhat: &Vector) -> Vector {
    xhat.scale(stretch_factor(k, xhat[0] * xhat[0]))
}

impl RealizedMap {
    pub fn log_r_end(&self) -> f64 {
        self.pieces.last().map_or(self.log_r_start, |p| p.log_r_in())
    }

    pub fn region(&self, log_r: f64) -> Region {
        if self.pieces.is_empty() || log_r >= self.log_r_start {
            return Region::Outer;
        }
        if log_r < self.log_r_end() {
            return Region::Inner;
        }
        // first piece whose inner log-radius is ≤ log_r
        let j = self.pieces.partition_point(|p| p.log_r_in() > log_r);
        Region::Piece(j.min(self.pieces.len() - 1))
    }

    /// f(x)/|x| for x = e^{log_r}·x̂ evaluated in `region`, in image
    /// coordinates.
    pub fn unit_map_in(&self, region: Region, xhat: &Vector, log_r: f64) -> Vector {
        match region {
            Region::Outer => self.outer.frame.apply(&stretch_unit(self.outer.k, xhat)),
            Region::Inner => self.inner.frame.apply(&stretch_unit(self.inner.k, xhat)),
            Region::Piece(j) => {
                let p = &self.pieces[j];
                let rel = log_r - p.log_r_out;
                let local = match &p.kind {
                    PieceKind::Spiral { k, alpha, .. } => {
                        let mut v = stretch_unit(*k, xhat);
                        rotate_pair(&mut v, alpha * rel, 0, 1);
                        v
                    }
                    PieceKind::Interp { k, l, s } => {
                        xhat.scale(interp_factor(*k, *l, *s, 0.0, rel.clamp(*s, 0.0), xhat[0] * xhat[0]))
                    }
                    PieceKind::Twist { k, rate, b, .. } => {
                        let mut v = stretch_unit(*k, xhat);
                        twist_rotate(&mut v, b, -rate * rel);
                        v
                    }
                };
                p.frame.apply(&local)
            }
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.dim() });
        }
        Ok(())
    }

    /// f(x).
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::UndefinedAtOrigin);
        }
        let lr = r.ln();
        Ok(self.unit_map_in(self.region(lr), &x.scale(1.0 / r), lr).scale(r))
    }

    /// f(e^{log_r}·x̂) / e^{log_r} and the region used.
    pub fn eval_log(&self, xhat: &Vector, log_r: f64) -> (Vector, Region) {
        let region = self.region(log_r);
        (self.unit_map_in(region, xhat, log_r), region)
    }

    /// The map of one region in its own normalized coordinates:
    /// z ↦ f(r_out·z)/r_out for pieces, f itself for the stretch regions.
    pub fn local_map(&self, region: Region, z: &Vector) -> Result<Vector> {
        self.check_dim(z)?;
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::UndefinedAtOrigin);
        }
        let base = match region {
            Region::Piece(j) => self.pieces[j].log_r_out,
            _ => 0.0,
        };
        Ok(self.unit_map_in(region, &z.scale(1.0 / r), base + r.ln()).scale(r))
    }

    /// ρ_f(r)/r at log-radius `log_r`.
    pub fn mean_radius_ratio(&self, log_r: f64) -> f64 {
        let n = self.n;
        let root = |k: f64| k.powf(1.0 / n as f64);
        match self.region(log_r) {
            Region::Outer => root(self.outer.k),
            Region::Inner => root(self.inner.k),
            Region::Piece(j) => self.mean_radius_ratio_piece(&self.pieces[j], log_r),
        }
    }

    /// ρ_f(r).
    pub fn mean_radius(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput("radius must be positive".into()));
        }
        Ok(r * self.mean_radius_ratio(r.ln()))
    }

    /// γ(t) = f(t e₁)/ρ_f(t) at t = e^{log_t}, with its region.
    pub fn orbit_point_log(&self, log_t: f64) -> (Vector, Region) {
        let (v, region) = self.eval_log(&Vector::basis(self.n, 0), log_t);
        (v.scale(1.0 / self.mean_radius_ratio(log_t)), region)
    }

    /// γ evaluated with a specific region's formula (for boundary checks).
    pub fn orbit_point_in(&self, region: Region, log_t: f64) -> Vector {
        let e1 = Vector::basis(self.n, 0);
        let ratio = match region {
            Region::Piece(j) => self.mean_radius_ratio_piece(&self.pieces[j], log_t),
            Region::Outer => self.outer.k.powf(1.0 / self.n as f64),
            Region::Inner => self.inner.k.powf(1.0 / self.n as f64),
        };
        self.unit_map_in(region, &e1, log_t).scale(1.0 / ratio)
    }

    fn mean_radius_ratio_piece(&self, p: &ShellPiece, log_r: f64) -> f64 {
        let n = self.n;
        match p.kind {
            PieceKind::Interp { k, l, s } => {
                let rel = log_r - p.log_r_out;
                if rel >= 0.0 {
                    k.powf(1.0 / n as f64)
                } else if rel <= s {
                    l.powf(1.0 / n as f64)
                } else {
                    interp_mean_radius_ratio(n, k, l, s, rel, self.quadrature_nodes)
                }
            }
            ref other => other.outer_factor().powf(1.0 / n as f64),
        }
    }

    /// f_t(x) = f(t x)/ρ_f(t) with t = e^{log_t}.
    pub fn rescaled_log(&self, log_t: f64, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        let r = x.norm();
        if r == 0.0 {
            return Err(Error::UndefinedAtOrigin);
        }
        let lr = log_t + r.ln();
        let (v, _) = self.eval_log(&x.scale(1.0 / r), lr);
        Ok(v.scale(r / self.mean_radius_ratio(log_t)))
    }

    /// f_t(x) = f(t x)/ρ_f(t).
    pub fn rescaled(&self, t: f64, x: &Vector) -> Result<Vector> {
        if !(t > 0.0) {
            return Err(Error::InvalidInput("scale t must be positive".into()));
        }
        self.rescaled_log(t.ln(), x)
    }

    /// γ at each t (which must be positive).
    pub fn orbit_curve(&self, t_values: &[f64]) -> Result<Vec<Vector>> {
        t_values
            .iter()
            .map(|&t| {
                if t > 0.0 {
                    Ok(self.orbit_point_log(t.ln()).0)
                } else {
                    Err(Error::InvalidInput("orbit parameters must be positive".into()))
                }
            })
            .collect()
    }
}

/// (mean over S^{n-1} of Λ(ω)ⁿ)^{1/n} for the interpolation factor Λ at
/// normalized log-radius `rel`.
pub fn interp_mean_radius_ratio(n: usize, k: f64, l: f64, s: f64, rel: f64, nodes: usize) -> f64 {
    zonal_mean(n, nodes, |w1| interp_factor(k, l, s, 0.0, rel, w1 * w1).powi(n as i32)).powf(1.0 / n as f64)
}

/// (mean over S^{n-1} of λ(ω₁)ⁿ)^{1/n} for a star-shaped image with radial
/// function λ depending on ω₁ only.
pub fn star_mean_radius_ratio(n: usize, nodes: usize, radial: impl Fn(f64) -> f64) -> f64 {
    zonal_mean(n, nodes, |w1| radial(w1).powi(n as i32)).powf(1.0 / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub log_t: f64,
    pub t: f64,
    pub point: Vector,
    pub piece_index: i64,
    pub rho: f64,
    /// Plan index k of the piece (0 outside all pieces).
    pub plan: usize,
}

/// Samples γ: `per_piece` equally spaced log-radii in every piece (outer
/// boundary included), plus one sample at r_start and one inside the
/// innermost piece.
pub fn orbit_samples(f: &RealizedMap, per_piece: usize) -> Vec<OrbitSample> {
    let m = per_piece.max(1);
    let mut out = Vec::new();
    let mut push = |log_t: f64, plan: usize| {
        let (point, region) = f.orbit_point_log(log_t);
        out.push(OrbitSample {
            log_t,
            t: log_t.exp(),
            point,
            piece_index: region.index(f.pieces.len()),
            rho: log_t.exp() * f.mean_radius_ratio(log_t),
            plan,
        });
    };
    push(f.log_r_start + 1.0, 0);
    for p in &f.pieces {
        for i in 0..m {
            // strictly inside the piece for i > 0; i = 0 is its outer boundary
            let log_t = p.log_r_out - p.log_depth * i as f64 / m as f64;
            push(if i == 0 { p.log_r_out - 1e-15 * p.log_r_out.abs().max(1.0) } else { log_t }, p.plan);
        }
    }
    let end = f.log_r_end();
    if let Some(p) = f.pieces.last() {
        push(end + 1e-15 * end.abs().max(1.0), p.plan);
    }
    push(end - 1.0, usize::MAX);
    out
}

/// Max of the two directed sup-inf distances.
pub fn hausdorff_distance(a: &[Vector], b: &[Vector]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Hausdorff distance of an empty set".into()));
    }
    let directed = |p: &[Vector], q: &[Vector]| {
        p.iter()
            .map(|x| q.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min))
            .fold(0.0_f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub piece: usize,
    /// "entry" (outer boundary) or "exit" (inner boundary).
    pub side: String,
    pub log_t: f64,
    pub planned: Vector,
    pub observed: Vector,
    pub error: f64,
}

/// γ at both boundaries of every piece, evaluated with that piece's own
/// formula, against the planned points.
pub fn checkpoints(f: &RealizedMap) -> Vec<Checkpoint> {
    let mut out = Vec::new();
    for (j, p) in f.pieces.iter().enumerate() {
        for (side, log_t, planned) in [("entry", p.log_r_out, &p.entry), ("exit", p.log_r_in(), &p.exit)] {
            let observed = f.orbit_point_in(Region::Piece(j), log_t);
            out.push(Checkpoint {
                piece: j,
                side: side.into(),
                log_t,
                planned: planned.clone(),
                error: observed.dist(planned),
                observed,
            });
        }
    }
    out
}

/// Largest |f| mismatch (relative to |x|) between the two formulas meeting
/// at each interface: outer/piece 0, piece j/piece j+1, last piece/inner.
pub fn interface_mismatches(f: &RealizedMap, samples: usize, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vector> = (0..samples)
        .filter_map(|_| Vector::new((0..f.n).map(|_| StandardNormal.sample(&mut rng)).collect()).normalized())
        .collect();
    let count = f.pieces.len();
    if count == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let (outside, inside, log_r) = if i == 0 {
            (Region::Outer, Region::Piece(0), f.log_r_start)
        } else if i == count {
            (Region::Piece(count - 1), Region::Inner, f.log_r_end())
        } else {
            (Region::Piece(i - 1), Region::Piece(i), f.pieces[i].log_r_out)
        };
        let worst = dirs
            .iter()
            .map(|d| f.unit_map_in(outside, d, log_r).dist(&f.unit_map_in(inside, d, log_r)))
            .fold(0.0_f64, f64::max);
        out.push(worst);
    }
    out
}

/// A random point strictly inside region `region`, as (x̂, log-radius).
pub fn random_point_in(f: &RealizedMap, region: Region, rng: &mut impl Rng) -> (Vector, f64) {
    use rand_distr::{Distribution, StandardNormal};
    let xhat = loop {
        if let Some(d) = Vector::new((0..f.n).map(|_| StandardNormal.sample(rng)).collect()).normalized() {
            break d;
        }
    };
    let log_r = match region {
        Region::Outer => f.log_r_start + rng.gen_range(0.01..2.0),
        Region::Inner => f.log_r_end() - rng.gen_range(0.01..2.0),
        Region::Piece(j) => {
            let p = &f.pieces[j];
            p.log_r_out - p.log_depth * rng.gen_range(0.001..0.999)
        }
    };
    (xhat, log_r)
}

/// Finite-difference Jacobian of f at e^{log_r}·x̂ in that region's
/// normalized coordinates (f′ is invariant under the rescaling).
pub fn jacobian_at(f: &RealizedMap, region: Region, xhat: &Vector, log_r: f64) -> Result<Matrix> {
    let base = match region {
        Region::Piece(j) => f.pieces[j].log_r_out,
        _ => 0.0,
    };
    let z = xhat.scale((log_r - base).exp());
    finite_diff_jacobian(|v: &Vector| f.local_map(region, v), &z, DEFAULT_STEP * z.norm().min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizeOptions {
    pub k_max: usize,
    pub r_start: f64,
    pub samples_per_piece: usize,
    pub trace_resolution: usize,
    pub build: BuildOptions,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions {
            k_max: 5,
            r_start: 1.0,
            samples_per_piece: 64,
            trace_resolution: 256,
            build: BuildOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub n: usize,
    pub k_max: usize,
    pub piece_count: usize,
    pub piece_kinds: Vec<String>,
    pub log_r_start: f64,
    pub log_r_end: f64,
    pub alphas: Vec<f64>,
    pub checkpoint_max_error: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// (k, Hausdorff distance from {γ(t): t ≤ r_k} to the target trace)
    pub hausdorff_by_k: Vec<(usize, f64)>,
    pub hausdorff_non_increasing: bool,
    /// Every orbit sample satisfies 1/C′ ≤ |γ| ≤ C′.
    pub annulus_c: f64,
    pub annulus_inner: f64,
    pub annulus_outer: f64,
    pub target_c: f64,
    pub samples: usize,
}

/// Result of planning, building and sampling one target.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub map: RealizedMap,
    pub samples: Vec<OrbitSample>,
    pub trace: Vec<Vector>,
    pub summary: OrbitSummary,
}

/// Slack allowed when checking that the Hausdorff column does not increase.
pub const MONOTONE_SLACK: f64 = 1e-12;

pub fn realize(target: &TargetSet, opts: &RealizeOptions) -> Result<Realization> {
    let plans = plan_paths(target, opts.k_max)?;
    let map = build_map_with(&plans, &target.waypoints()[0], opts.r_start, &opts.build)?;
    let samples = orbit_samples(&map, opts.samples_per_piece);
    let trace = target_trace(target, opts.trace_resolution)?;

    let mut hausdorff_by_k = Vec::new();
    for k in 1..=opts.k_max {
        let tail: Vec<Vector> = samples
            .iter()
            .filter(|s| s.plan >= k && s.plan != 0)
            .map(|s| s.point.clone())
            .collect();
        let d = if tail.is_empty() {
            // no pieces: the orbit is the constant tip
            hausdorff_distance(&[samples[0].point.clone()], &trace)?
        } else {
            hausdorff_distance(&tail, &trace)?
        };
        hausdorff_by_k.push((k, d));
    }
    let hausdorff_non_increasing = hausdorff_by_k.windows(2).all(|w| w[1].1 <= w[0].1 + MONOTONE_SLACK);

    let radii: Vec<f64> = samples.iter().map(|s| s.point.norm()).collect();
    let annulus_inner = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let annulus_outer = radii.iter().cloned().fold(0.0_f64, f64::max);
    let cps = checkpoints(&map);
    let summary = OrbitSummary {
        n: map.n,
        k_max: opts.k_max,
        piece_count: map.pieces.len(),
        piece_kinds: map.pieces.iter().map(|p| p.kind.name().to_string()).collect(),
        log_r_start: map.log_r_start,
        log_r_end: map.log_r_end(),
        alphas: map.alpha_certificates.iter().map(|c| c.alpha).collect(),
        checkpoint_max_error: cps.iter().map(|c| c.error).fold(0.0, f64::max),
        checkpoints: cps,
        hausdorff_by_k,
        hausdorff_non_increasing,
        annulus_c: annulus_outer.max(1.0 / annulus_inner),
        annulus_inner,
        annulus_outer,
        target_c: target.annulus_bound(),
        samples: samples.len(),
    };
    Ok(Realization { map, samples, trace, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    fn quarter_circle(points: usize) -> TargetSet {
        let wps = (0..points)
            .map(|i| {
                let a = FRAC_PI_2 * i as f64 / (points - 1) as f64;
                v(&[2.0 * a.cos(), 2.0 * a.sin(), 0.0])
            })
            .collect();
        TargetSet::new(wps, false, 3.0).unwrap()
    }

    #[test]
    fn target_validation() {
        assert!(TargetSet::new(vec![v(&[0.0, 0.0, 0.0])], false, 2.0).is_err());
        assert!(TargetSet::new(vec![v(&[5.0, 0.0, 0.0])], false, 2.0).is_err());
        assert!(TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0])], false, 2.0).is_err());
        assert!(TargetSet::new(vec![v(&[1.0, 0.0])], false, 2.0).is_err());
        assert!(TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0, 0.0])], false, 2.0).is_err());
        assert!(TargetSet::new(vec![v(&[1.0, 0.0, 0.0])], false, 0.5).is_err());
    }

    #[test]
    fn antipodal_hop_is_rejected() {
        let t = TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, -2.0, 0.0])], false, 3.0).unwrap();
        assert_eq!(plan_paths(&t, 2), Err(Error::RequiresIntermediateWaypoint(1, 2)));
    }

    #[test]
    fn singleton_plans_are_empty() {
        let t = TargetSet::new(vec![v(&[2.0, 0.0, 0.0])], false, 3.0).unwrap();
        let plans = plan_paths(&t, 4).unwrap();
        assert_eq!(plans.len(), 4);
        assert!(plans.iter().all(|p| p.is_empty()));
    }

    #[test]
    fn radial_plans_alternate() {
        let t = TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[3.0, 0.0, 0.0])], false, 3.0).unwrap();
        let plans = plan_paths(&t, 3).unwrap();
        let e1 = Vector::basis(3, 0);
        assert_eq!(plans[0], vec![PathSegment::Radial { u1: 1.0, u2: 3.0, sigma: e1.clone() }]);
        assert_eq!(plans[1], vec![PathSegment::Radial { u1: 3.0, u2: 1.0, sigma: e1.clone() }]);
        assert_eq!(plans[2], plans[0]);
        let trace = target_trace(&t, 64).unwrap();
        let seg = plans[1][0].clone();
        let plan_trace: Vec<Vector> = (0..=64).map(|i| seg.point_at(i as f64 / 64.0)).collect();
        assert!(hausdorff_distance(&plan_trace, &trace).unwrap() < 1e-15);
    }

    #[test]
    fn quarter_circle_plans_are_arcs() {
        let t = quarter_circle(2);
        let plans = plan_paths(&t, 3).unwrap();
        for p in &plans {
            assert_eq!(p.len(), 1);
            assert!(matches!(p[0], PathSegment::Arc { u, .. } if (u - 2.0).abs() < 1e-15));
        }
        // dense sampling of the plan lies on the circle of radius 2
        for i in 0..=100 {
            let q = plans[0][0].point_at(i as f64 / 100.0);
            assert!((q.norm() - 2.0).abs() < 1e-14 && q[2] == 0.0);
        }
    }

    #[test]
    fn long_arcs_are_subdivided() {
        let t = TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[-(0.01f64.cos()), 0.01f64.sin(), 0.0])], false, 2.0).unwrap();
        let plan = forward_plan(&t).unwrap();
        assert_eq!(plan.len(), 2);
        for seg in &plan {
            if let PathSegment::Arc { sigma1, sigma2, .. } = seg {
                assert!(great_circle_angle(sigma1, sigma2).unwrap() <= FRAC_PI_2 + 1e-12);
            }
        }
    }

    #[test]
    fn single_radial_piece() {
        let n = 3;
        let e1 = Vector::basis(n, 0);
        let plans = vec![vec![PathSegment::Radial { u1: 1.0, u2: 2.0, sigma: e1.clone() }]];
        let f = build_map(&plans, &e1, 1.0).unwrap();
        assert_eq!(f.pieces.len(), 1);
        let PieceKind::Interp { k, l, .. } = f.pieces[0].kind else { panic!() };
        assert_eq!(k, 1.0);
        assert!((l - 2f64.powf(1.5)).abs() < 1e-12);
        // outer boundary: identity; inner boundary: L-stretch
        let x = v(&[0.3, -0.5, 0.4]).normalized().unwrap();
        let at_out = f.eval(&x).unwrap();
        assert!(at_out.dist(&x) < 1e-12);
        let r_in = f.pieces[0].r_in();
        let at_in = f.eval(&x.scale(r_in)).unwrap();
        let expect = x.scale(r_in * stretch_factor(l, x[0] * x[0]));
        assert!(at_in.dist(&expect) < 1e-12 * r_in);
        // orbit at the two boundaries
        let g_out = f.orbit_point_in(Region::Piece(0), f.pieces[0].log_r_out);
        let g_in = f.orbit_point_in(Region::Piece(0), f.pieces[0].log_r_in());
        assert!(g_out.dist(&e1) < 1e-6 && g_in.dist(&e1.scale(2.0)) < 1e-6);
    }

    #[test]
    fn single_arc_piece() {
        let n = 3;
        let (e1, e2) = (Vector::basis(n, 0), Vector::basis(n, 1));
        let plans = vec![vec![PathSegment::Arc { u: 1.0, sigma1: e1.clone(), sigma2: e2.clone() }]];
        let f = build_map(&plans, &e1, 1.0).unwrap();
        assert_eq!(f.pieces.len(), 1);
        let p = &f.pieces[0];
        let PieceKind::Spiral { k, theta, .. } = p.kind else { panic!() };
        assert_eq!(k, 1.0);
        assert!((theta - FRAC_PI_2).abs() < 1e-15);
        let expect = p.frame.compose(&planar_rotation(n, FRAC_PI_2, 0, 1).unwrap());
        assert!(f.inner.frame.matrix().max_abs_diff(expect.matrix()) < 1e-15);
        assert!(f.inner.frame.direction().dist(&e2) < 1e-15);
    }

    #[test]
    fn identity_outer_region() {
        let e1 = Vector::basis(3, 0);
        let f = build_map(&[], &e1, 1.0).unwrap();
        let x = v(&[3.0, -1.0, 2.0]);
        assert!(f.eval(&x).unwrap().dist(&x) < 1e-15);
        let y = v(&[0.01, 0.02, -0.03]);
        assert!(f.eval(&y).unwrap().dist(&y) < 1e-15);
        assert_eq!(f.eval(&Vector::zeros(3)), Err(Error::UndefinedAtOrigin));
    }

    #[test]
    fn pure_stretch_configuration_matches_oriented_stretch() {
        use crate::maps::{oriented_stretch, StretchSpec};
        let sigma = v(&[0.0, 0.6, 0.8]);
        let start = sigma.scale(4.0);
        let f = build_map(&[], &start, 1.0).unwrap();
        let spec = StretchSpec::new(8.0, f.outer.frame.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = v(&[rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            // posed and conjugated forms agree because the domain axis is e₁
            let posed = f.eval(&x).unwrap();
            let conj = oriented_stretch(&f.outer.frame.apply(&x), &spec).unwrap();
            assert!(posed.dist(&conj) <= 1e-12 * x.norm().max(1.0) * 8.0);
        }
        assert!((f.mean_radius(0.7).unwrap() / 0.7 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaled_pure_stretch_is_scale_free() {
        let f = build_map(&[], &v(&[4.0, 0.0, 0.0]), 1.0).unwrap();
        let x = v(&[0.2, 0.9, -0.4]);
        let a = f.rescaled(1e-3, &x).unwrap();
        let b = f.rescaled(7.0, &x).unwrap();
        assert!(a.dist(&b) < 1e-12);
        // the tip: f(r e₁)/ρ(r) = K^{1-1/n} σ = 4 e₁ for K = 8, n = 3
        let tip = f.rescaled(0.37, &Vector::basis(3, 0)).unwrap();
        assert!(tip.dist(&v(&[4.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn quadrature_of_ellipsoid_volume() {
        let ratio = star_mean_radius_ratio(3, 4096, |w1| stretch_factor(8.0, w1 * w1));
        assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
        for n in 4..=5 {
            let k: f64 = 3.0;
            let ratio = star_mean_radius_ratio(n, 4096, |w1| stretch_factor(k, w1 * w1));
            assert!((ratio - k.powf(1.0 / n as f64)).abs() < 1e-6, "n={n} {ratio}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![v(&[0.0, 0.0, 0.0])];
        let b = vec![Vector::basis(3, 0)];
        assert_eq!(hausdorff_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&b, &b).unwrap(), 0.0);
        assert!(hausdorff_distance(&[], &b).is_err());
        let circle = |r: f64| -> Vec<Vector> {
            (0..720).map(|i| {
                let a = 2.0 * PI * i as f64 / 720.0;
                v(&[r * a.cos(), r * a.sin(), 0.0])
            }).collect()
        };
        let d = hausdorff_distance(&circle(1.0), &circle(2.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_circle_realization() {
        let t = quarter_circle(3);
        let r = realize(&t, &RealizeOptions { k_max: 3, ..Default::default() }).unwrap();
        assert!(r.summary.checkpoint_max_error < 1e-6, "{}", r.summary.checkpoint_max_error);
        assert!(r.summary.hausdorff_non_increasing, "{:?}", r.summary.hausdorff_by_k);
        for (k, d) in &r.summary.hausdorff_by_k {
            assert!(*d <= 2.0 / *k as f64);
        }
        assert!(interface_mismatches(&r.map, 200, 3).iter().all(|m| *m < 1e-9));
        assert!(r.map.pieces.iter().all(|p| p.kind.name() == "spiral"));
    }

    #[test]
    fn twist_piece_joins_non_coplanar_arcs() {
        let t = TargetSet::new(
            vec![v(&[1.5, 0.0, 0.0]), v(&[0.0, 1.5, 0.0]), v(&[0.0, 0.0, 1.5])],
            false,
            2.0,
        )
        .unwrap();
        let r = realize(&t, &RealizeOptions { k_max: 2, ..Default::default() }).unwrap();
        assert!(r.map.pieces.iter().any(|p| p.kind.name() == "twist"));
        assert!(r.summary.checkpoint_max_error < 1e-6);
        assert!(interface_mismatches(&r.map, 200, 5).iter().all(|m| *m < 1e-9));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for j in 0..r.map.pieces.len() {
            for _ in 0..20 {
                let (xhat, lr) = random_point_in(&r.map, Region::Piece(j), &mut rng);
                let jac = jacobian_at(&r.map, Region::Piece(j), &xhat, lr).unwrap();
                assert!(jac.det() > 0.0);
            }
        }
    }

    #[test]
    fn singleton_orbit_is_constant() {
        let t = TargetSet::new(vec![v(&[0.0, 2.0, 0.0])], false, 3.0).unwrap();
        let r = realize(&t, &RealizeOptions::default()).unwrap();
        assert_eq!(r.map.pieces.len(), 0);
        for s in &r.samples {
            assert!(s.point.dist(&v(&[0.0, 2.0, 0.0])) < 1e-12);
        }
    }

    #[test]
    fn radial_target_sweeps_along_e1() {
        let t = TargetSet::new(vec![v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0])], false, 2.0).unwrap();
        let r = realize(&t, &RealizeOptions { k_max: 4, samples_per_piece: 16, ..Default::default() }).unwrap();
        assert_eq!(r.map.pieces.len(), 4);
        let e1 = Vector::basis(3, 0);
        for s in &r.samples {
            let u = s.point.norm();
            assert!(s.point.scale(1.0 / u).dist(&e1) < 1e-6);
            assert!(u > 1.0 - 1e-3 && u < 2.0 + 1e-3, "{u}");
        }
        assert!(r.summary.checkpoint_max_error < 1e-6);
    }

    #[test]
    fn inner_radius_targets_use_compressions() {
        let t = TargetSet::new(vec![v(&[0.5, 0.0, 0.0]), v(&[0.0, 0.5, 0.0]), v(&[0.0, 1.5, 0.0])], false, 2.0).unwrap();
        let r = realize(&t, &RealizeOptions { k_max: 2, ..Default::default() }).unwrap();
        assert!(r.map.pieces[0].kind.outer_factor() < 1.0);
        assert!(r.summary.checkpoint_max_error < 1e-6);
        assert!(interface_mismatches(&r.map, 200, 1).iter().all(|m| *m < 1e-9));
        assert!(r.summary.annulus_inner >= 0.5 - 1e-9);
    }
}
