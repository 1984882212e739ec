//! Verification suites: each check evaluates a bound over a deterministic
//! point set and reports the worst margin and where it occurred.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{
    bilipschitz_eigenvalues, finite_diff_jacobian, grid_verify, linear_distortion_numeric,
    BoxGrid, GridReport, Verdict, DEFAULT_STEP,
};
use crate::error::{Error, Result};
use crate::maps::{
    interp_stretch, interp_stretch_transform, radial_stretch, radial_stretch_transform,
    select_alpha, spiral_axis1, spiral_jacobian_bound, spiral_stretch, spiral_stretch_transform,
    spiral_transform_jacobian_analytic, InterpSpec, PyramidCase, SpiralRegion, SpiralSpec, SubCase,
    GRID_MARGIN,
};
use crate::vecgeom::{frame_from_direction, planar_rotation, svd_small, Vector};
use crate::zorich::{
    quotient_distance, sample_fundamental, transform_eval, zorich_forward, zorich_inverse,
    zorich_map, FundamentalPoint,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Zorich,
    Stretch,
    Interp,
    Spiral,
    Bilipschitz,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Zorich,
        Suite::Stretch,
        Suite::Interp,
        Suite::Spiral,
        Suite::Bilipschitz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Zorich => "zorich",
            Suite::Stretch => "stretch",
            Suite::Interp => "interp",
            Suite::Spiral => "spiral",
            Suite::Bilipschitz => "bilipschitz",
        }
    }

    pub fn default_grid(self) -> usize {
        match self {
            Suite::Bilipschitz => 200,
            _ => 33,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub k: f64,
    pub l: f64,
    /// Spiral rate; `None` selects it automatically.
    pub alpha: Option<f64>,
    pub grid: usize,
    pub samples: usize,
    /// Overrides the tolerance of every numerical-agreement check.
    pub tol: Option<f64>,
    pub seed: u64,
    /// Overrides the upper bound of every analytic-bound check.
    pub bound: Option<f64>,
}

impl SuiteConfig {
    pub fn for_suite(suite: Suite) -> Self {
        SuiteConfig {
            n: 3,
            k: 2.0,
            l: 3.0,
            alpha: None,
            grid: suite.default_grid(),
            samples: 10_000,
            tol: None,
            seed: 0,
            bound: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidInput(format!("dimension must be ≥ 3 (got {})", self.n)));
        }
        if !(self.k >= 1.0 && self.l >= 1.0) {
            return Err(Error::InvalidInput("K and L must be ≥ 1".into()));
        }
        if self.grid < 8 {
            return Err(Error::InvalidInput("grid resolution must be ≥ 8".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be positive".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(Error::InvalidInput("tolerance must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Numerical agreement between two evaluations.
    Tolerance,
    /// An analytic inequality.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub relation: Relation,
    pub bound: f64,
    pub slack: f64,
    pub worst_value: f64,
    pub margin: f64,
    pub worst_point: Vec<f64>,
    pub evaluated: usize,
    pub skipped: usize,
    pub failures: usize,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
    pub details: BTreeMap<String, f64>,
}

/// A bound to check: `value relation bound` with `slack` added in favour of
/// passing.
#[derive(Clone, Debug)]
pub struct CheckSpec {
    pub name: String,
    pub kind: CheckKind,
    pub relation: Relation,
    pub bound: f64,
    pub slack: f64,
}

impl CheckSpec {
    pub fn new(name: impl Into<String>, kind: CheckKind, relation: Relation, bound: f64) -> Self {
        CheckSpec { name: name.into(), kind, relation, bound, slack: 0.0 }
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    fn overridden(mut self, ov: &Overrides) -> Self {
        match self.kind {
            CheckKind::Tolerance => {
                if let Some(t) = ov.tol {
                    self.bound = t;
                }
            }
            CheckKind::Bound => {
                if let (Some(b), Relation::AtMost | Relation::Below) = (ov.bound, self.relation) {
                    self.bound = b;
                }
            }
        }
        self
    }
}

/// Replacement thresholds: `tol` for every tolerance check, `bound` for the
/// upper bound of every analytic check.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub bound: Option<f64>,
}

impl Overrides {
    pub const NONE: Overrides = Overrides { tol: None, bound: None };

    pub fn from_config(cfg: &SuiteConfig) -> Self {
        Overrides { tol: cfg.tol, bound: cfg.bound }
    }
}

/// Runs `value` over `points` and compares against `spec`. `value` returns
/// `None` to exclude a point.
pub fn run_check<F>(spec: CheckSpec, ov: &Overrides, points: &[Vec<f64>], value: F) -> CheckResult
where
    F: Fn(&[f64]) -> Result<Option<f64>> + Sync,
{
    let CheckSpec { name, kind, relation, bound, slack } = spec.overridden(ov);
    let report: GridReport = grid_verify(points, relation == Relation::Below, |p| {
        Ok(match value(p)? {
            None => Verdict::Skip,
            Some(v) => Verdict::Margin(match relation {
                Relation::AtMost | Relation::Below => bound - v + slack,
                Relation::AtLeast => v - bound + slack,
            }),
        })
    });
    let worst_value = match relation {
        Relation::AtMost | Relation::Below => bound + slack - report.worst_margin,
        Relation::AtLeast => bound - slack + report.worst_margin,
    };
    CheckResult {
        name,
        kind,
        relation,
        bound,
        slack,
        worst_value,
        margin: report.worst_margin,
        worst_point: report.worst_point,
        evaluated: report.evaluated,
        skipped: report.skipped,
        failures: report.failures,
        pass: report.pass,
        error: report.first_error.map(|(p, e)| format!("{e} at {p:?}")),
    }
}

fn finish(suite: Suite, cfg: &SuiteConfig, checks: Vec<CheckResult>, details: BTreeMap<String, f64>) -> SuiteReport {
    SuiteReport {
        suite,
        config: cfg.clone(),
        pass: checks.iter().all(|c| c.pass),
        checks,
        details,
    }
}

/// Runs the named suite.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    match suite {
        Suite::Zorich => zorich_suite(cfg),
        Suite::Stretch => stretch_suite(cfg),
        Suite::Interp => interp_suite(cfg),
        Suite::Spiral => spiral_suite(cfg),
        Suite::Bilipschitz => bilipschitz_suite(cfg),
    }
}

fn fp(p: &[f64]) -> FundamentalPoint {
    FundamentalPoint::try_new(Vector::new(p.to_vec())).expect("sampled inside B")
}

/// `count` random points of B with heights in `heights`, as raw coordinates.
pub fn fundamental_samples(n: usize, count: usize, heights: std::ops::Range<f64>, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_fundamental(&mut rng, n, heights.clone()).into_vector().into_inner())
        .collect()
}

/// Random nonzero points of R^n with log-radius uniform in `log_radii`.
pub fn space_samples(n: usize, count: usize, log_radii: std::ops::Range<f64>, seed: u64) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = Vector::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
        if let Some(d) = g.normalized() {
            let r = rng.gen_range(log_radii.clone()).exp();
            out.push(d.scale(r).into_inner());
        }
    }
    out
}

// ---------------------------------------------------------------- zorich

/// |Z(Z⁻¹(y)) - y| / |y|.
pub fn check_roundtrip(n: usize, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> CheckResult {
    let pts = space_samples(n, samples, -5.0..5.0, seed);
    run_check(
        CheckSpec::new(format!("roundtrip_n{n}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let y = Vector::new(p.to_vec());
            let back = zorich_forward(&zorich_inverse(&y)?);
            Ok(Some(back.dist(&y) / y.norm()))
        },
    )
}

/// Quotient distance between Z⁻¹(Z(x)) and x.
pub fn check_inverse_of_forward(n: usize, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> CheckResult {
    let pts = fundamental_samples(n, samples, -3.0..3.0, seed);
    run_check(
        CheckSpec::new(format!("inverse_of_forward_n{n}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let x = fp(p);
            Ok(Some(quotient_distance(&zorich_inverse(&zorich_forward(&x))?, &x)))
        },
    )
}

/// Composition law for f = R (closed-form transform) and g a rotation:
/// quotient distance between (f∘g)~(x) and R̃(g̃(x)).
pub fn check_composition(n: usize, k: f64, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> CheckResult {
    let rot = planar_rotation(n, 0.7, 0, n - 1).expect("valid axes");
    let pts = fundamental_samples(n, samples, -2.0..2.0, seed);
    run_check(
        CheckSpec::new(format!("composition_n{n}_K{k}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let x = fp(p);
            let g = |y: &Vector| Ok(rot.mul_vec(y));
            let composed = transform_eval(|y: &Vector| radial_stretch(&rot.mul_vec(y), k), &x)?;
            let stepwise = radial_stretch_transform(&transform_eval(g, &x)?, k);
            Ok(Some(quotient_distance(&composed, &stepwise)))
        },
    )
}

/// π²(2+√6)/8, the chart's bilipschitz constant in dimension 3.
pub fn chart_lipschitz_constant() -> f64 {
    PI * PI * (2.0 + 6f64.sqrt()) / 8.0
}

/// `count` random points of B at least `margin` from the chart faces.
pub fn interior_fundamental_samples(n: usize, count: usize, margin: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim = FRAC_PI_2 - margin;
    (0..count)
        .map(|_| {
            let mut c: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-lim..lim)).collect();
            if rng.gen_bool(0.5) {
                c[0] = PI - c[0];
            }
            c.push(rng.gen_range(-2.0..2.0));
            c
        })
        .collect()
}

/// Numeric linear distortion of Z against 8L².
pub fn check_zorich_linear_distortion(samples: usize, seed: u64, ov: &Overrides) -> CheckResult {
    let bound = 8.0 * chart_lipschitz_constant().powi(2);
    let pts = interior_fundamental_samples(3, samples, 1e-3, seed);
    run_check(
        CheckSpec::new("zorich_linear_distortion_n3", CheckKind::Bound, Relation::AtMost, bound),
        ov,
        &pts,
        |p| {
            let x = Vector::new(p.to_vec());
            let f = |v: &Vector| Ok(zorich_map(v));
            linear_distortion_numeric(f, &x, 1e-5, 64, seed).map(Some)
        },
    )
}

fn zorich_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n;
    let ov = Overrides::from_config(cfg);
    let mut checks = vec![
        check_roundtrip(n, cfg.samples, cfg.seed, 1e-12, &ov),
        check_inverse_of_forward(n, cfg.samples, cfg.seed + 1, 1e-10, &ov),
        check_composition(n, cfg.k, cfg.samples, cfg.seed + 2, 1e-9, &ov),
    ];
    let mut details = BTreeMap::new();
    if n == 3 {
        checks.push(check_zorich_linear_distortion(cfg.samples.min(1000), cfg.seed + 3, &ov));
        details.insert("chart_lipschitz_L".into(), chart_lipschitz_constant());
    }
    Ok(finish(Suite::Zorich, cfg, checks, details))
}

// ---------------------------------------------------------------- stretch

/// |Z(R̃(x)) - R(Z(x))|.
pub fn check_stretch_conjugacy(n: usize, k: f64, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> CheckResult {
    let pts = fundamental_samples(n, samples, -3.0..3.0, seed);
    run_check(
        CheckSpec::new(format!("conjugacy_R_n{n}_K{k}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let x = fp(p);
            let lhs = zorich_forward(&radial_stretch_transform(&x, k));
            let rhs = radial_stretch(&zorich_forward(&x), k)?;
            Ok(Some(lhs.dist(&rhs)))
        },
    )
}

/// Grid over the pyramid A₁ = {x₁ ≥ |x_j|} with `heights` sample heights,
/// cell-centred with `grid` points per chart axis. Points closer than
/// [`GRID_MARGIN`] to a face of A₁ or of the cube are dropped.
pub fn pyramid_a1_grid(n: usize, grid: usize, heights: &[f64]) -> Vec<Vec<f64>> {
    let chart = BoxGrid::cube(-FRAC_PI_2, FRAC_PI_2, n - 1, grid, true);
    let mut out = Vec::new();
    for idx in 0..chart.len() {
        let c = chart.point(idx);
        let rest = c[1..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if c[0] < GRID_MARGIN || c[0] > FRAC_PI_2 - GRID_MARGIN || c[0] - rest < GRID_MARGIN {
            continue;
        }
        for &h in heights {
            let mut p = c.clone();
            p.push(h);
            out.push(p);
        }
    }
    out
}

fn evenly_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64)
        .collect()
}

/// H₁ = √(5/4 + (K²+L²)² + 3(K²+L²)).
pub fn norm_bound_h1(k: f64, l: f64) -> f64 {
    let q = k * k + l * l;
    (1.25 + q * q + 3.0 * q).sqrt()
}

/// H₂ = 1 + K² + L².
pub fn norm_bound_h2(k: f64, l: f64) -> f64 {
    1.0 + k * k + l * l
}

fn partial<F>(f: F, p: &[f64], axis: usize) -> Result<f64>
where
    F: Fn(&Vector) -> Result<f64>,
{
    let x = Vector::new(p.to_vec());
    let step = DEFAULT_STEP * x.norm().max(1.0);
    let mut plus = x.clone();
    plus[axis] += step;
    let mut minus = x.clone();
    minus[axis] -= step;
    Ok((f(&plus)? - f(&minus)?) / (2.0 * step))
}

fn norm_checks<T>(name: &str, h1: f64, h2: f64, pts: &[Vec<f64>], transform: T, ov: &Overrides) -> [CheckResult; 2]
where
    T: Fn(&Vector) -> Result<Vector> + Sync,
{
    let svs = |p: &[f64]| -> Result<Vec<f64>> {
        svd_small(&finite_diff_jacobian(&transform, &Vector::new(p.to_vec()), DEFAULT_STEP)?)
    };
    [
        run_check(
            CheckSpec::new(format!("{name}_norm_H1"), CheckKind::Bound, Relation::AtMost, h1),
            ov,
            pts,
            |p| Ok(Some(svs(p)?[0])),
        ),
        run_check(
            CheckSpec::new(format!("{name}_inverse_norm_H2"), CheckKind::Bound, Relation::AtMost, h2),
            ov,
            pts,
            |p| {
                let s = svs(p)?;
                Ok(Some(1.0 / s[s.len() - 1]))
            },
        ),
    ]
}

/// Finite-difference bounds on R̃ over A₁: |V_{x₁}| ≤ K² - 1, ‖R̃′‖ ≤ H₁ and
/// ‖(R̃′)⁻¹‖ ≤ H₂ with L = 1.
pub fn stretch_partial_checks(n: usize, k: f64, grid: usize, ov: &Overrides) -> Vec<CheckResult> {
    let pts = pyramid_a1_grid(n, grid, &evenly_spaced(-1.0, 1.0, 3));
    let transform = move |v: &Vector| -> Result<Vector> {
        Ok(radial_stretch_transform(&FundamentalPoint::try_new(v.clone())?, k).into_vector())
    };
    let v_fn = move |v: &Vector| -> Result<f64> { Ok(transform(v)?.last() - v.last()) };
    let tag = format!("R_n{n}_K{k}");
    let mut out = vec![run_check(
        CheckSpec::new(format!("{tag}_V_x1"), CheckKind::Bound, Relation::AtMost, k * k - 1.0),
        ov,
        &pts,
        |p| Ok(Some(partial(v_fn, p, 0)?.abs())),
    )];
    out.extend(norm_checks(&tag, norm_bound_h1(k, 1.0), norm_bound_h2(k, 1.0), &pts, transform, ov));
    out
}

fn stretch_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let ov = Overrides::from_config(cfg);
    let mut checks = vec![check_stretch_conjugacy(cfg.n, cfg.k, cfg.samples, cfg.seed, 1e-9, &ov)];
    checks.extend(stretch_partial_checks(cfg.n, cfg.k, cfg.grid, &ov));
    let mut details = BTreeMap::new();
    details.insert("H1".into(), norm_bound_h1(cfg.k, 1.0));
    details.insert("H2".into(), norm_bound_h2(cfg.k, 1.0));
    Ok(finish(Suite::Stretch, cfg, checks, details))
}

// ---------------------------------------------------------------- interp

/// The interpolation spec used by the suites: stretch along e_n, t = 0 and
/// s = -(2|ln(K/L)| + 1).
pub fn axis_interp_spec(n: usize, k: f64, l: f64) -> Result<InterpSpec> {
    let frame = frame_from_direction(&Vector::basis(n, n - 1), None)?;
    InterpSpec::new(k, l, -(2.0 * (k / l).ln().abs() + 1.0), 0.0, frame)
}

/// |Z(R̃_I(x)) - R_I(Z(x))| on the shell heights.
pub fn check_interp_conjugacy(n: usize, k: f64, l: f64, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> Result<CheckResult> {
    let spec = axis_interp_spec(n, k, l)?;
    let pts = fundamental_samples(n, samples, spec.s..spec.t, seed);
    Ok(run_check(
        CheckSpec::new(format!("conjugacy_RI_n{n}_K{k}_L{l}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let x = fp(p);
            let lhs = zorich_forward(&interp_stretch_transform(&x, &spec)?);
            let rhs = interp_stretch(&zorich_forward(&x), &spec)?;
            Ok(Some(lhs.dist(&rhs)))
        },
    ))
}

/// |(V_I)_{x₁}| ≤ K² + L² - 2, |(V_I)_{x_n}| < 1/2 and the H₁, H₂ norm
/// bounds for R̃_I over A₁ × (s, t).
pub fn interp_partial_checks(n: usize, k: f64, l: f64, grid: usize, ov: &Overrides) -> Result<Vec<CheckResult>> {
    let spec = axis_interp_spec(n, k, l)?;
    let heights = evenly_spaced(spec.s + GRID_MARGIN, spec.t - GRID_MARGIN, 5);
    let pts = pyramid_a1_grid(n, grid, &heights);
    let transform = |v: &Vector| -> Result<Vector> {
        Ok(interp_stretch_transform(&FundamentalPoint::try_new(v.clone())?, &spec)?.into_vector())
    };
    let v_fn = |v: &Vector| -> Result<f64> { Ok(transform(v)?.last() - v.last()) };
    let tag = format!("RI_n{n}_K{k}_L{l}");
    let mut out = vec![
        run_check(
            CheckSpec::new(format!("{tag}_V_x1"), CheckKind::Bound, Relation::AtMost, k * k + l * l - 2.0),
            ov,
            &pts,
            |p| Ok(Some(partial(v_fn, p, 0)?.abs())),
        ),
        run_check(
            CheckSpec::new(format!("{tag}_V_xn"), CheckKind::Bound, Relation::Below, 0.5),
            ov,
            &pts,
            |p| Ok(Some(partial(v_fn, p, n - 1)?.abs())),
        ),
    ];
    out.extend(norm_checks(&tag, norm_bound_h1(k, l), norm_bound_h2(k, l), &pts, transform, ov));
    Ok(out)
}

fn interp_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let spec = axis_interp_spec(cfg.n, cfg.k, cfg.l)?;
    let ov = Overrides::from_config(cfg);
    let mut checks = vec![check_interp_conjugacy(cfg.n, cfg.k, cfg.l, cfg.samples, cfg.seed, 1e-9, &ov)?];
    checks.extend(interp_partial_checks(cfg.n, cfg.k, cfg.l, cfg.grid, &ov)?);
    let mut details = BTreeMap::new();
    details.insert("s".into(), spec.s);
    details.insert("t".into(), spec.t);
    details.insert("H1".into(), norm_bound_h1(cfg.k, cfg.l));
    details.insert("H2".into(), norm_bound_h2(cfg.k, cfg.l));
    Ok(finish(Suite::Interp, cfg, checks, details))
}

// ---------------------------------------------------------------- spiral

/// |Z(R̃_s(x)) - R_s(Z(x))| for the axis-aligned spiral.
pub fn check_spiral_conjugacy(n: usize, k: f64, alpha: f64, samples: usize, seed: u64, tol: f64, ov: &Overrides) -> Result<CheckResult> {
    let spec = SpiralSpec::axis_aligned(k, alpha, n)?;
    let pts = fundamental_samples(n, samples, -3.0..3.0, seed);
    Ok(run_check(
        CheckSpec::new(format!("conjugacy_Rs_n{n}_K{k}"), CheckKind::Tolerance, Relation::AtMost, tol),
        ov,
        &pts,
        |p| {
            let x = fp(p);
            let lhs = zorich_forward(&spiral_stretch_transform(&x, &spec)?);
            let rhs = spiral_stretch(&zorich_forward(&x), &spec)?;
            Ok(Some(lhs.dist(&rhs)))
        },
    ))
}

/// Short label such as "I-a" or "III-c".
pub fn region_label(r: SpiralRegion) -> String {
    let case = match r.case {
        PyramidCase::I => "I",
        PyramidCase::II => "II",
        PyramidCase::III(_) => "III",
    };
    let sub = match r.sub {
        SubCase::A => "a",
        SubCase::B => "b",
        SubCase::C(_) => "c",
    };
    format!("{case}-{sub}")
}

/// Random points of B, bucketed by spiral region, up to `per_region` each.
pub fn spiral_region_samples(n: usize, alpha: f64, per_region: usize, seed: u64) -> BTreeMap<String, Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buckets: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let spec = SpiralSpec::axis_aligned(1.0, alpha, n).expect("valid spec");
    let attempts = per_region * 400;
    for _ in 0..attempts {
        let x = sample_fundamental(&mut rng, n, -3.0..3.0);
        let Ok((_, region)) = spiral_transform_jacobian_analytic(&x, &spec, GRID_MARGIN) else {
            continue;
        };
        let folded = x.folded_chart();
        if folded.iter().any(|c| c.abs() > FRAC_PI_2 - GRID_MARGIN) {
            continue;
        }
        let bucket = buckets.entry(region_label(region)).or_default();
        if bucket.len() < per_region {
            bucket.push(x.into_vector().into_inner());
        }
        if buckets.len() >= expected_regions(n) && buckets.values().all(|b| b.len() >= per_region) {
            break;
        }
    }
    buckets
}

fn expected_regions(n: usize) -> usize {
    if n == 3 {
        4
    } else {
        9
    }
}

/// Relative max-entry difference between the analytic and finite-difference
/// Jacobians of R̃_s, one check per region.
pub fn spiral_jacobian_fd_checks(n: usize, k: f64, alpha: f64, per_region: usize, seed: u64, tol: f64, ov: &Overrides) -> Result<Vec<CheckResult>> {
    let spec = SpiralSpec::axis_aligned(k, alpha, n)?;
    let buckets = spiral_region_samples(n, alpha, per_region, seed);
    let transform = |v: &Vector| -> Result<Vector> {
        Ok(spiral_stretch_transform(&FundamentalPoint::try_new(v.clone())?, &spec)?.into_vector())
    };
    Ok(buckets
        .iter()
        .map(|(label, pts)| {
            run_check(
                CheckSpec::new(format!("jacobian_fd_{label}_n{n}_K{k}"), CheckKind::Tolerance, Relation::AtMost, tol),
                ov,
                pts,
                |p| {
                    let (an, _) = spiral_transform_jacobian_analytic(&fp(p), &spec, crate::maps::REGION_MARGIN)?;
                    let fd = finite_diff_jacobian(transform, &Vector::new(p.to_vec()), DEFAULT_STEP)?;
                    Ok(Some(fd.max_abs_diff(&an) / an.max_abs().max(1.0)))
                },
            )
        })
        .collect())
}

/// Grid points (chart grid × rotation phases) used for the Jacobian floor,
/// as first-box coordinates with height φ/α.
pub fn spiral_phase_grid(n: usize, alpha: f64, grid: usize) -> Vec<Vec<f64>> {
    let chart = BoxGrid::cube(-FRAC_PI_2, FRAC_PI_2, n - 1, grid, true);
    let phases = BoxGrid::cube(0.0, 2.0 * PI, 1, grid, true);
    let mut out = Vec::with_capacity(chart.len() * grid);
    for i in 0..chart.len() {
        let c = chart.point(i);
        for j in 0..grid {
            let phi = phases.point(j)[0];
            let mut p = c.clone();
            p.push(if alpha == 0.0 { phi } else { phi / alpha });
            out.push(p);
        }
    }
    out
}

/// J_{R̃_s} ≥ 2^{-(n+1)/2} over the phase grid (points within the grid
/// margin of a region boundary are excluded).
pub fn check_spiral_jacobian_floor(n: usize, k: f64, alpha: f64, grid: usize, ov: &Overrides) -> Result<CheckResult> {
    let spec = SpiralSpec::axis_aligned(k, alpha, n)?;
    let pts = spiral_phase_grid(n, alpha, grid);
    Ok(run_check(
        CheckSpec::new(format!("jacobian_floor_n{n}_K{k}"), CheckKind::Bound, Relation::AtLeast, spiral_jacobian_bound(n)),
        ov,
        &pts,
        |p| match spiral_transform_jacobian_analytic(&fp(p), &spec, GRID_MARGIN) {
            Ok((j, _)) => Ok(Some(j.det())),
            Err(Error::NearSingularRegion { .. }) | Err(Error::ChartSingularity) => Ok(None),
            Err(e) => Err(e),
        },
    ))
}

/// √(x₁² + x₂²) · min(1/|w₁|, 1/|w₂|) lies in [1, √2].
pub fn check_m_sandwich(samples: usize, seed: u64, ov: &Overrides) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            vec![
                rng.gen_range(-FRAC_PI_2..FRAC_PI_2),
                rng.gen_range(-FRAC_PI_2..FRAC_PI_2),
                rng.gen_range(0.0..2.0 * PI),
            ]
        })
        .collect();
    run_check(
        CheckSpec::new("m_sandwich", CheckKind::Bound, Relation::AtLeast, 0.0).with_slack(1e-12),
        ov,
        &pts,
        |p| {
            let (x1, x2) = (p[0], p[1]);
            let r = x1.hypot(x2);
            if r == 0.0 {
                return Ok(None);
            }
            let (s, c) = p[2].sin_cos();
            let w1 = x1 * c - x2 * s;
            let w2 = x1 * s + x2 * c;
            let v = r / w1.abs().max(w2.abs());
            Ok(Some((v - 1.0).min(SQRT_2 - v)))
        },
    )
}

/// Sampled injectivity of the spiral shell map with rate α on
/// e^{-depth} ≤ |y| ≤ 1: image distance ≥ 1e-8 × domain distance. Half
/// the pairs are close neighbours.
pub fn check_spiral_injectivity(n: usize, k: f64, alpha: f64, depth: f64, pairs: usize, seed: u64, ov: &Overrides) -> CheckResult {
    let a = space_samples(n, pairs, -depth..0.0, seed);
    let b = space_samples(n, pairs, -depth..0.0, seed + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
    let pts: Vec<Vec<f64>> = a
        .into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (p, q))| {
            let q = if i % 2 == 0 {
                let r = Vector::new(p.clone()).norm();
                p.iter().map(|v| v + rng.gen_range(-1e-4..1e-4) * r).collect()
            } else {
                q
            };
            p.into_iter().chain(q).collect()
        })
        .collect();
    run_check(
        CheckSpec::new(format!("injectivity_n{n}_K{k}"), CheckKind::Bound, Relation::AtLeast, 1e-8),
        ov,
        &pts,
        |p| {
            let (y, z) = (Vector::new(p[..n].to_vec()), Vector::new(p[n..].to_vec()));
            let d = y.dist(&z);
            if d == 0.0 {
                return Ok(None);
            }
            Ok(Some(spiral_axis1(&y, k, alpha)?.dist(&spiral_axis1(&z, k, alpha)?) / d))
        },
    )
}

fn spiral_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let n = cfg.n;
    let mut details = BTreeMap::new();
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => {
            let cert = select_alpha(cfg.k, n, 1.0, cfg.grid)?;
            details.insert("certified_min_jacobian".into(), cert.min_jacobian);
            details.insert("refined_min_jacobian".into(), cert.refined_min_jacobian);
            cert.alpha
        }
    };
    details.insert("alpha".into(), alpha);
    details.insert("jacobian_bound".into(), spiral_jacobian_bound(n));
    let per_region = (cfg.samples / 10).max(1);
    let ov = Overrides::from_config(cfg);
    let mut checks = vec![check_spiral_conjugacy(n, cfg.k, alpha, cfg.samples, cfg.seed, 1e-9, &ov)?];
    checks.extend(spiral_jacobian_fd_checks(n, cfg.k, alpha, per_region, cfg.seed + 1, 1e-5, &ov)?);
    checks.push(check_spiral_jacobian_floor(n, cfg.k, alpha, cfg.grid, &ov)?);
    checks.push(check_m_sandwich(cfg.samples, cfg.seed + 2, &ov));
    let depth = if alpha == 0.0 { 4.0 } else { (FRAC_PI_2 / alpha.abs()).min(50.0) };
    checks.push(check_spiral_injectivity(n, cfg.k, alpha, depth, cfg.samples, cfg.seed + 3, &ov));
    let floor = checks
        .iter()
        .find(|c| c.name.starts_with("jacobian_floor"))
        .map(|c| c.margin)
        .unwrap_or(f64::NAN);
    details.insert("jacobian_margin".into(), floor);
    Ok(finish(Suite::Spiral, cfg, checks, details))
}

// ---------------------------------------------------------------- bilipschitz

/// 8/(π²(2+√6)).
pub fn bilipschitz_lower() -> f64 {
    1.0 / chart_lipschitz_constant()
}

/// 2/(π²(2+√6)): the product of the eigenvalues is at least 1/π² on A and
/// the larger one is at most 1 + √6/2.
pub fn bilipschitz_lower_corrected() -> f64 {
    2.0 / (PI * PI * (2.0 + 6f64.sqrt()))
}

/// 1 + √6/2.
pub fn bilipschitz_upper() -> f64 {
    1.0 + 6f64.sqrt() / 2.0
}

/// `grid × grid` points of {x ≥ |y|}: x ∈ (0, π/2] and y = x·v with
/// v ∈ [-1, 1] evenly spaced.
pub fn region_a_grid(grid: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let x = FRAC_PI_2 * (i + 1) as f64 / grid as f64;
        for j in 0..grid {
            let v = -1.0 + 2.0 * j as f64 / (grid - 1) as f64;
            out.push(vec![x, x * v]);
        }
    }
    out
}

/// Eigenvalue window and positivity of the bilipschitz form over region A.
pub fn bilipschitz_checks(grid: usize, ov: &Overrides) -> Vec<CheckResult> {
    let pts = region_a_grid(grid);
    vec![
        run_check(
            CheckSpec::new("eigen_min_lower", CheckKind::Bound, Relation::AtLeast, bilipschitz_lower()).with_slack(1e-9),
            ov,
            &pts,
            |p| Ok(Some(bilipschitz_eigenvalues(p[0], p[1])?.0)),
        ),
        run_check(
            CheckSpec::new("eigen_min_corrected", CheckKind::Bound, Relation::AtLeast, bilipschitz_lower_corrected()).with_slack(1e-9),
            ov,
            &pts,
            |p| Ok(Some(bilipschitz_eigenvalues(p[0], p[1])?.0)),
        ),
        run_check(
            CheckSpec::new("eigen_max_upper", CheckKind::Bound, Relation::AtMost, bilipschitz_upper()).with_slack(1e-9),
            ov,
            &pts,
            |p| Ok(Some(bilipschitz_eigenvalues(p[0], p[1])?.1)),
        ),
        run_check(
            CheckSpec::new("eigen_positive", CheckKind::Bound, Relation::AtLeast, 0.0),
            ov,
            &pts,
            |p| Ok(Some(bilipschitz_eigenvalues(p[0], p[1])?.0)),
        ),
    ]
}

fn bilipschitz_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.n != 3 {
        return Err(Error::InvalidInput("the bilipschitz form is defined for n = 3".into()));
    }
    let mut details = BTreeMap::new();
    details.insert("lower".into(), bilipschitz_lower());
    details.insert("lower_corrected".into(), bilipschitz_lower_corrected());
    details.insert("upper".into(), bilipschitz_upper());
    let checks = bilipschitz_checks(cfg.grid, &Overrides::from_config(cfg));
    if let Some(c) = checks.first() {
        details.insert("min_eigenvalue".into(), c.worst_value);
    }
    Ok(finish(Suite::Bilipschitz, cfg, checks, details))
}
