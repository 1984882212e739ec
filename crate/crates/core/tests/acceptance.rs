//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with `harness = false`, so `cargo test` always shows the table.
//! Criteria listed in `KNOWN_UNATTAINABLE` print FAIL but do not fail the
//! run, provided their measured behaviour matches the recorded analysis.
//! Set `ACCEPTANCE_STRICT=1` to make any FAIL line fail the run.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qcmap::distortion::DistortionReport;
use qcmap::maps::{select_alpha, spiral_jacobian_bound, stretch_factor};
use qcmap::orbit::{
    build_map, checkpoints, interface_mismatches, jacobian_at, random_point_in, realize, star_mean_radius_ratio,
    RealizeOptions, Region, TargetSet,
};
use qcmap::probe::{probe, probe_grid, ProbeMap};
use qcmap::vecgeom::Vector;
use qcmap::verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const ROUNDTRIP_TOL: f64 = 1e-12;
const ROUNDTRIP_SECONDS: f64 = 5.0;
const CONJUGACY_TOL: f64 = 1e-9;
const CONJUGACY_SECONDS: f64 = 30.0;
const COMPOSITION_TOL: f64 = 1e-9;
const A2_SLACK: f64 = 1e-9;
const JACOBIAN_REL_TOL: f64 = 1e-5;
const MEAN_RADIUS_TOL: f64 = 1e-3;
const TIP_TOL: f64 = 1e-6;
const CHECKPOINT_TOL: f64 = 1e-6;
const MONOTONE_SLACK: f64 = 1e-12;
const REALIZE_SECONDS: f64 = 60.0;
const INTERFACE_TOL: f64 = 1e-9;
const INJECTIVITY_RATIO: f64 = 1e-8;
const SIMPLE_SLICE_TOL: f64 = 1e-9;
const NON_SIMPLE_SPREAD: f64 = 0.1;

const SAMPLES: usize = 10_000;
const SEED: u64 = 20240611;

/// Criteria whose stated form cannot hold; see the README.
const KNOWN_UNATTAINABLE: &[u32] = &[5];

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    /// For known-unattainable criteria: the recorded analysis still matches.
    characterized: bool,
    elapsed: Duration,
}

fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn worst(checks: &[CheckResult]) -> String {
    checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{}={:.3e} (bound {:.3e})", c.name, c.worst_value, c.bound))
        .collect::<Vec<_>>()
        .join(", ")
}

fn max_worst(checks: &[CheckResult]) -> f64 {
    checks.iter().map(|c| c.worst_value).fold(0.0, f64::max)
}

fn quarter_circle_target() -> TargetSet {
    let wps = (0..5)
        .map(|i| {
            let a = FRAC_PI_2 * i as f64 / 4.0;
            Vector::new(vec![2.0 * a.cos(), 2.0 * a.sin(), 0.0])
        })
        .collect();
    TargetSet::new(wps, false, 2.0).expect("valid target")
}

/// The quarter circle of radius 2, densely sampled without the library.
fn quarter_circle_oracle(m: usize) -> Vec<Vector> {
    (0..=m)
        .map(|i| {
            let a = FRAC_PI_2 * i as f64 / m as f64;
            Vector::new(vec![2.0 * a.cos(), 2.0 * a.sin(), 0.0])
        })
        .collect()
}

fn hausdorff(a: &[Vector], b: &[Vector]) -> f64 {
    let directed = |p: &[Vector], q: &[Vector]| {
        p.iter()
            .map(|x| q.iter().map(|y| x.dist(y)).fold(f64::INFINITY, f64::min))
            .fold(0.0_f64, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

fn c1_roundtrip() -> (bool, String) {
    let start = Instant::now();
    let checks: Vec<_> = [3, 4, 5]
        .iter()
        .map(|&n| check_roundtrip(n, SAMPLES, SEED + n as u64, ROUNDTRIP_TOL, &Overrides::NONE))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = all_pass(&checks) && secs < ROUNDTRIP_SECONDS;
    (pass, format!("max rel err {:.2e} ≤ {ROUNDTRIP_TOL:e}, {secs:.2}s < {ROUNDTRIP_SECONDS}s {}", max_worst(&checks), worst(&checks)))
}

fn c2_conjugacy() -> (bool, String) {
    let start = Instant::now();
    let mut checks = Vec::new();
    for n in [3, 4] {
        for k in [1.0, 2.0, 5.0] {
            let ov = &Overrides::NONE;
            checks.push(check_stretch_conjugacy(n, k, SAMPLES, SEED, CONJUGACY_TOL, ov));
            checks.push(check_interp_conjugacy(n, k, 2.0, SAMPLES, SEED + 1, CONJUGACY_TOL, ov).expect("valid spec"));
            checks.push(check_spiral_conjugacy(n, k, 0.25, SAMPLES, SEED + 2, CONJUGACY_TOL, ov).expect("valid spec"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = all_pass(&checks) && secs < CONJUGACY_SECONDS;
    (pass, format!("{} runs, max err {:.2e} ≤ {CONJUGACY_TOL:e}, {secs:.2}s < {CONJUGACY_SECONDS}s {}", checks.len(), max_worst(&checks), worst(&checks)))
}

fn c3_composition() -> (bool, String) {
    let checks: Vec<_> = [(3, 2.0), (3, 5.0), (4, 2.0)]
        .iter()
        .map(|&(n, k)| check_composition(n, k, SAMPLES, SEED + 3, COMPOSITION_TOL, &Overrides::NONE))
        .collect();
    (all_pass(&checks), format!("max quotient residual {:.2e} ≤ {COMPOSITION_TOL:e} {}", max_worst(&checks), worst(&checks)))
}

fn c4_a1() -> (bool, String) {
    let c = check_zorich_linear_distortion(1000, SEED + 4, &Overrides::NONE);
    let bound = 8.0 * (PI * PI * (2.0 + 6f64.sqrt()) / 8.0).powi(2);
    let pass = c.pass && c.evaluated == 1000 && (c.bound - bound).abs() < 1e-12;
    (pass, format!("max H = {:.4} ≤ 8L² = {bound:.2} over {} points", c.worst_value, c.evaluated))
}

/// Eigenvalues of the 2×2 form from its trace and determinant.
fn a2_oracle(x: f64, y: f64) -> (f64, f64) {
    let r2 = x * x + y * y;
    let s2 = x.sin().powi(2) / (r2 * r2);
    let (a, b, d) = (1.0 + y * y * s2, -x * y * s2, x * x * s2);
    let tr = a + d;
    let det = a * d - b * b;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    ((tr - disc) / 2.0, (tr + disc) / 2.0)
}

fn c5_a2() -> (bool, bool, String) {
    let lower = 8.0 / (PI * PI * (2.0 + 6f64.sqrt()));
    let upper = 1.0 + 6f64.sqrt() / 2.0;
    let checks = bilipschitz_checks(200, &Overrides::NONE);
    let get = |name: &str| checks.iter().find(|c| c.name == name).expect("check present");
    let stated = get("eigen_min_lower");
    let pts = region_a_grid(200);
    let (mut lo, mut hi, mut below) = (f64::INFINITY, 0.0_f64, 0usize);
    for p in &pts {
        let (a, b) = a2_oracle(p[0], p[1]);
        lo = lo.min(a);
        hi = hi.max(b);
        if a < lower - A2_SLACK {
            below += 1;
        }
    }
    let pass = lo >= lower - A2_SLACK && hi <= upper + A2_SLACK;
    // the recorded analysis: the upper bound and 2/(π²(2+√6)) hold, the
    // stated lower bound fails at the corner (π/2, ±π/2)
    let characterized = pts.len() == 40_000
        && !stated.pass
        && stated.failures == below
        && (stated.worst_value - lo).abs() < 1e-12
        && (lo - 0.0911584818944695).abs() < 1e-9
        && hi <= upper + A2_SLACK
        && lo >= lower / 4.0 - A2_SLACK
        && get("eigen_min_corrected").pass
        && get("eigen_max_upper").pass
        && get("eigen_positive").pass;
    (
        pass,
        characterized,
        format!("eigenvalues in [{lo:.5}, {hi:.5}], window [{lower:.5}, {upper:.5}]; {below}/40000 below the lower end"),
    )
}

fn c6_partials() -> (bool, String) {
    let mut checks = Vec::new();
    for k in [1.0, 2.0, 5.0] {
        checks.extend(stretch_partial_checks(3, k, 24, &Overrides::NONE));
        for l in [1.0, 3.0] {
            checks.extend(interp_partial_checks(3, k, l, 16, &Overrides::NONE).expect("valid spec"));
        }
    }
    let evaluated: usize = checks.iter().map(|c| c.evaluated).sum();
    let v_xn = checks
        .iter()
        .filter(|c| c.name.ends_with("_V_xn"))
        .map(|c| c.worst_value)
        .fold(0.0, f64::max);
    (all_pass(&checks), format!("{} bounds, {evaluated} evaluations, max |(V_I)_xn| = {v_xn:.4} < 0.5 {}", checks.len(), worst(&checks)))
}

fn c7_a3() -> (bool, String) {
    let mut checks = Vec::new();
    let mut labels = Vec::new();
    for n in [3, 4] {
        let cert = select_alpha(2.0, n, 1.0, if n == 3 { 33 } else { 17 }).expect("alpha found");
        let fd = spiral_jacobian_fd_checks(n, 2.0, cert.alpha, 1000, SEED + 7, JACOBIAN_REL_TOL, &Overrides::NONE)
            .expect("valid spec");
        for c in &fd {
            labels.push(format!("{}:{}", c.name, c.evaluated));
        }
        checks.extend(fd);
    }
    let mut floors = Vec::new();
    for k in [2.0, 8.0] {
        let cert = select_alpha(k, 3, 1.0, 33).expect("alpha found");
        let c = check_spiral_jacobian_floor(3, k, cert.alpha, 33, &Overrides::NONE).expect("valid spec");
        floors.push(format!("K={k}: α={} min J={:.4}", cert.alpha, c.worst_value));
        checks.push(c);
    }
    let regions: Vec<&str> = checks
        .iter()
        .filter_map(|c| c.name.strip_prefix("jacobian_fd_"))
        .filter(|s| s.ends_with("_n4_K2"))
        .map(|s| s.trim_end_matches("_n4_K2"))
        .collect();
    let full = ["I-a", "I-b", "I-c", "II-a", "II-b", "II-c", "III-a", "III-b", "III-c"]
        .iter()
        .all(|r| regions.contains(r));
    let enough = checks
        .iter()
        .filter(|c| c.name.starts_with("jacobian_fd_"))
        .all(|c| c.evaluated == 1000);
    let fd_worst = checks
        .iter()
        .filter(|c| c.name.starts_with("jacobian_fd_"))
        .map(|c| c.worst_value)
        .fold(0.0, f64::max);
    (
        all_pass(&checks) && full && enough,
        format!(
            "FD rel err {fd_worst:.2e} ≤ {JACOBIAN_REL_TOL:e} in {} regions; J ≥ {}: {} {}",
            regions.len(),
            spiral_jacobian_bound(3),
            floors.join("; "),
            worst(&checks)
        ),
    )
}

/// Monte Carlo estimate of mean(λ(ω)ⁿ) over uniform directions.
fn mc_mean_radius_ratio(n: usize, k: f64, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = g[0] / r;
        let lam = k / (k * k + (1.0 - k * k) * c * c).sqrt();
        acc += lam.powi(n as i32);
    }
    (acc / samples as f64).powf(1.0 / n as f64)
}

fn c8_mean_radius() -> (bool, String) {
    let ratio = star_mean_radius_ratio(3, 4096, |w1| stretch_factor(8.0, w1 * w1));
    let mc = mc_mean_radius_ratio(3, 8.0, 400_000, SEED + 8);
    let mut tip_err = 0.0_f64;
    let mut quad_err = (ratio - 2.0).abs();
    for sigma in [Vector::new(vec![1.0, 0.0, 0.0]), Vector::new(vec![0.0, 0.6, -0.8])] {
        let f = build_map(&[], &sigma.scale(4.0), 1.0).expect("pure stretch");
        for log_t in [-30.0, -2.0, 0.0, 3.0] {
            let rho = f.mean_radius_ratio(log_t);
            quad_err = quad_err.max((rho - 2.0).abs());
            let tip = f.rescaled_log(log_t, &Vector::basis(3, 0)).expect("nonzero");
            tip_err = tip_err.max(tip.dist(&sigma.scale(4.0)));
        }
    }
    let pass = quad_err <= MEAN_RADIUS_TOL && (mc - 2.0).abs() <= 5e-3 && tip_err <= TIP_TOL;
    (pass, format!("ρ(r)/r = {ratio:.6} (Monte Carlo {mc:.4}), |err| {quad_err:.1e} ≤ {MEAN_RADIUS_TOL:e}; tip err {tip_err:.1e} ≤ {TIP_TOL:e}"))
}

fn c9_realize() -> (bool, String) {
    let start = Instant::now();
    let target = quarter_circle_target();
    let r = realize(&target, &RealizeOptions { k_max: 5, ..Default::default() }).expect("realization");
    let secs = start.elapsed().as_secs_f64();
    let cps = checkpoints(&r.map);
    let cp_max = cps.iter().map(|c| c.error).fold(0.0, f64::max);
    let oracle = quarter_circle_oracle(4096);
    let mut table = Vec::new();
    for k in 1..=5usize {
        let tail: Vec<Vector> = r.samples.iter().filter(|s| s.plan >= k).map(|s| s.point.clone()).collect();
        table.push(hausdorff(&tail, &oracle));
    }
    let bounded = table.iter().enumerate().all(|(i, d)| *d <= 2.0 / (i + 1) as f64);
    let monotone = table.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    let c = r.summary.annulus_c;
    let in_ring = r.samples.iter().all(|s| {
        let m = s.point.norm();
        m >= 1.0 / c * (1.0 - 1e-12) && m <= c * (1.0 + 1e-12)
    });
    let pass = cp_max <= CHECKPOINT_TOL && bounded && monotone && in_ring && secs < REALIZE_SECONDS && cps.len() == 2 * r.map.pieces.len();
    (
        pass,
        format!(
            "{} pieces, checkpoint max {cp_max:.1e} ≤ {CHECKPOINT_TOL:e}; Hausdorff by k {:?}; annulus C′ = {c:.4}; {secs:.2}s < {REALIZE_SECONDS}s",
            r.map.pieces.len(),
            table.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn c10_continuity_injectivity() -> (bool, String) {
    let r = realize(&quarter_circle_target(), &RealizeOptions { k_max: 5, ..Default::default() }).expect("realization");
    let f = &r.map;
    let mism = interface_mismatches(f, 1000, SEED + 10);
    let mism_max = mism.iter().cloned().fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 11);
    let (lo, hi) = (f.log_r_end() - 1.0, f.log_r_start + 1.0);
    let dir = |rng: &mut ChaCha8Rng| loop {
        let g = Vector::new((0..3).map(|_| StandardNormal.sample(rng)).collect());
        if let Some(d) = g.normalized() {
            break d;
        }
    };
    let mut min_ratio = f64::INFINITY;
    let pairs = 100_000;
    for i in 0..pairs {
        let x = dir(&mut rng).scale(rng.gen_range(lo..hi).exp());
        let y = if i % 2 == 0 {
            let e = dir(&mut rng).scale(x.norm() * rng.gen_range(1e-6..1e-2));
            &x + &e
        } else {
            dir(&mut rng).scale(rng.gen_range(lo..hi).exp())
        };
        let d = x.dist(&y);
        if d == 0.0 {
            continue;
        }
        let ratio = f.eval(&x).expect("x ≠ 0").dist(&f.eval(&y).expect("y ≠ 0")) / d;
        min_ratio = min_ratio.min(ratio);
    }

    let mut jac_min = f64::INFINITY;
    let spiral: Vec<usize> = (0..f.pieces.len()).filter(|&j| f.pieces[j].kind.name() == "spiral").collect();
    for i in 0..1000 {
        let j = spiral[i % spiral.len()];
        let (xhat, lr) = random_point_in(f, Region::Piece(j), &mut rng);
        let jac = jacobian_at(f, Region::Piece(j), &xhat, lr).expect("stencil");
        let rep = DistortionReport::from_jacobian(&jac).map(|d| d.jac).unwrap_or(jac.det());
        jac_min = jac_min.min(rep);
    }
    let bound = spiral_jacobian_bound(3);
    let certified = f.alpha_certificates.iter().all(|c| c.min_jacobian >= bound && c.refined_min_jacobian >= bound);
    let pass = mism_max <= INTERFACE_TOL && min_ratio >= INJECTIVITY_RATIO && jac_min > 0.0 && certified;
    (
        pass,
        format!(
            "interface mismatch {mism_max:.1e} ≤ {INTERFACE_TOL:e} over {} interfaces; min |Δf|/|Δx| = {min_ratio:.3e} ≥ {INJECTIVITY_RATIO:e} ({pairs} pairs); min J in spiral pieces {jac_min:.3e} > 0; certified α floor {certified}",
            mism.len()
        ),
    )
}

fn c11_probe() -> (bool, String) {
    let pts = probe_grid(3, 8);
    let ts: Vec<f64> = (0..8).map(|i| -1.7 * i as f64).collect();
    let stretch = probe(&ProbeMap::stretch(8.0).expect("K ≥ 1"), &ts, &pts).expect("probe");
    let simple = stretch.max_pairwise_distance();
    let r = realize(&quarter_circle_target(), &RealizeOptions { k_max: 5, ..Default::default() }).expect("realization");
    let span = r.map.log_r_start - r.map.log_r_end();
    let deep: Vec<f64> = (1..8).map(|i| r.map.log_r_start - span * i as f64 / 8.0).collect();
    let realized = probe(&ProbeMap::Realized(Box::new(r.map)), &deep, &pts).expect("probe");
    let spread = realized.max_pairwise_distance();
    (
        simple <= SIMPLE_SLICE_TOL && spread > NON_SIMPLE_SPREAD,
        format!("stretch slice spread {simple:.1e} ≤ {SIMPLE_SLICE_TOL:e}; realized slice spread {spread:.4} > {NON_SIMPLE_SPREAD}"),
    )
}

fn run(id: u32, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome { id, title, pass, detail, characterized: false, elapsed: start.elapsed() }
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut out = vec![
        run(1, "Zorich roundtrip", c1_roundtrip),
        run(2, "Conjugacy R, R_I, R_s", c2_conjugacy),
        run(3, "Composition law", c3_composition),
        run(4, "A1 linear distortion bound", c4_a1),
    ];
    let start = Instant::now();
    let (pass, characterized, detail) = c5_a2();
    out.push(Outcome { id: 5, title: "A2 eigenvalue window", pass, detail, characterized, elapsed: start.elapsed() });
    out.extend([
        run(6, "Stretch partial bounds", c6_partials),
        run(7, "A3 spiral Jacobian", c7_a3),
        run(8, "Mean radius and rescaled tip", c8_mean_radius),
        run(9, "End-to-end realization", c9_realize),
        run(10, "Continuity and injectivity", c10_continuity_injectivity),
        run(11, "Probe simple vs non-simple", c11_probe),
    ]);

    let mut ok = true;
    for o in &out {
        let known = KNOWN_UNATTAINABLE.contains(&o.id);
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && known {
            if o.characterized {
                " [known unattainable; analysis reproduced]"
            } else {
                " [known unattainable; analysis NOT reproduced]"
            }
        } else {
            ""
        };
        println!("criterion {:>2} {tag} {:<30} {:>7.2}s  {}{note}", o.id, o.title, o.elapsed.as_secs_f64(), o.detail);
        if !o.pass && (strict || !known || !o.characterized) {
            ok = false;
        }
    }
    let passed = out.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", out.len());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
