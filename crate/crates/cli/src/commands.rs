use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use qcmap::maps::select_alpha;
use qcmap::orbit::{interface_mismatches, realize, OrbitSample, OrbitSummary, RealizeOptions, TargetFile, TargetSet};
use qcmap::probe::{probe, probe_grid, ProbeMap, ProbeTable};
use qcmap::verify::{run_suite, Suite, SuiteConfig, SuiteReport};
use serde::Serialize;

use crate::args::{Alpha, ProbeArgs, ProbeMapArg, RealizeArgs, VerifyArgs};
use crate::error::{CliError, CliResult};

pub enum Status {
    Pass,
    Fail,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|source| CliError::Write { path: path.to_path_buf(), source })?;
    w.flush().map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn load_target(path: &Path) -> CliResult<TargetSet> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    let file: TargetFile =
        serde_json::from_str(&text).map_err(|source| CliError::Target { path: path.to_path_buf(), source })?;
    Ok(TargetSet::from_file(&file)?)
}

pub fn verify(args: &VerifyArgs) -> CliResult<Status> {
    let suite: Suite = args.suite.into();
    let cfg = SuiteConfig {
        n: args.dim,
        k: args.k,
        l: args.l,
        alpha: match args.alpha {
            Alpha::Auto => None,
            Alpha::Value(a) => Some(a),
        },
        grid: args.grid.unwrap_or(suite.default_grid()),
        samples: args.samples,
        tol: args.tol,
        seed: args.seed,
        bound: args.bound,
    };
    let report = run_suite(suite, &cfg)?;
    // a closed stdout (e.g. piped into head) must not abort the run
    let _ = io::stdout().lock().write_all(format_report(&report).as_bytes());
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(if report.pass { Status::Pass } else { Status::Fail })
}

fn format_report(r: &SuiteReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "suite {} (n = {}): {}", r.suite.name(), r.config.n, if r.pass { "PASS" } else { "FAIL" });
    for c in &r.checks {
        let rel = serde_json::to_value(c.relation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let _ = writeln!(
            out,
            "  {:<4} {:<36} worst {:>12.5e} {rel} {:<12.5e} margin {:>11.3e}  ({} evaluated, {} skipped, {} failed)",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.worst_value,
            c.bound,
            c.margin,
            c.evaluated,
            c.skipped,
            c.failures
        );
        if let Some(e) = &c.error {
            let _ = writeln!(out, "       error: {e}");
        }
    }
    for (k, v) in &r.details {
        let _ = writeln!(out, "  {k} = {v}");
    }
    out
}

#[derive(Serialize)]
struct RealizeReport<'a> {
    target: String,
    pass: bool,
    checkpoint_tolerance: f64,
    interface_mismatch_max: f64,
    #[serde(flatten)]
    summary: &'a OrbitSummary,
}

fn write_orbit_csv<W: Write>(w: W, n: usize, samples: &[OrbitSample]) -> CliResult<()> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("y_{i}")));
    header.push("piece_index".into());
    header.push("rho".into());
    csv.write_record(&header)?;
    for s in samples {
        let mut row = vec![num(s.t)];
        row.extend(s.point.iter().map(|v| num(*v)));
        row.push(s.piece_index.to_string());
        row.push(num(s.rho));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

pub fn realize_cmd(args: &RealizeArgs) -> CliResult<Status> {
    if args.k_max == 0 || args.samples == 0 {
        return Err(CliError::Usage("--k-max and --samples must be positive".into()));
    }
    if args.grid < 8 {
        return Err(CliError::Usage("--grid must be ≥ 8".into()));
    }
    if !(args.tol > 0.0) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let target = load_target(&args.target)?;
    if let Some(n) = args.dim {
        if n != target.dim() {
            return Err(CliError::Usage(format!("--dim {n} does not match the target dimension {}", target.dim())));
        }
    }
    let mut opts = RealizeOptions { k_max: args.k_max, samples_per_piece: args.samples, ..Default::default() };
    opts.build.alpha_grid = args.grid;
    let r = realize(&target, &opts)?;
    let mismatch = interface_mismatches(&r.map, 1000, args.seed).into_iter().fold(0.0, f64::max);
    let s = &r.summary;
    let pass = s.checkpoint_max_error <= args.tol && s.hausdorff_non_increasing && mismatch <= 1e-9;

    let report = RealizeReport {
        target: args.target.display().to_string(),
        pass,
        checkpoint_tolerance: args.tol,
        interface_mismatch_max: mismatch,
        summary: s,
    };
    let summary_target = args.summary.clone().or_else(|| args.out.as_deref().map(summary_path));
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_orbit_csv(&mut w, r.map.n, &r.samples)?;
            w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        }
        None => write_orbit_csv(io::stdout().lock(), r.map.n, &r.samples)?,
    }
    if let Some(path) = &summary_target {
        write_json(path, &report)?;
    }

    let mut log = io::stderr().lock();
    let _ = writeln!(log, "realize {}: {}", report.target, if pass { "PASS" } else { "FAIL" });
    let _ = writeln!(log, "  pieces {} ({} samples), log r from {} to {:.6}", s.piece_count, s.samples, s.log_r_start, s.log_r_end);
    let _ = writeln!(log, "  checkpoint max error {:.3e} (tol {:e})", s.checkpoint_max_error, args.tol);
    let _ = writeln!(log, "  interface mismatch max {mismatch:.3e}");
    for (k, d) in &s.hausdorff_by_k {
        let _ = writeln!(log, "  k = {k}: Hausdorff {d:.6}");
    }
    let _ = writeln!(log, "  non-increasing: {}", s.hausdorff_non_increasing);
    let _ = writeln!(log, "  annulus C' = {:.6} (|γ| in [{:.6}, {:.6}], target C = {})", s.annulus_c, s.annulus_inner, s.annulus_outer, s.target_c);
    Ok(if pass { Status::Pass } else { Status::Fail })
}

fn probe_map(args: &ProbeArgs) -> CliResult<ProbeMap> {
    Ok(match args.map {
        ProbeMapArg::Stretch => ProbeMap::stretch(args.k)?,
        ProbeMapArg::Rotation => ProbeMap::rotation(args.dim, args.theta)?,
        ProbeMapArg::Spiral => {
            let alpha = match args.alpha {
                Alpha::Value(a) => a,
                Alpha::Auto => select_alpha(args.k, args.dim, 1.0, 33)?.alpha,
            };
            ProbeMap::spiral(args.k, alpha)?
        }
        ProbeMapArg::Realized => {
            let path = args
                .target
                .as_ref()
                .ok_or_else(|| CliError::Usage("probe realized needs --target".into()))?;
            let target = load_target(path)?;
            if target.dim() != args.dim {
                return Err(CliError::Usage(format!("--dim {} does not match the target dimension {}", args.dim, target.dim())));
            }
            let r = realize(&target, &RealizeOptions { k_max: args.k_max, ..Default::default() })?;
            ProbeMap::Realized(Box::new(r.map))
        }
    })
}

fn write_probe_csv<W: Write>(w: W, table: &ProbeTable) -> CliResult<()> {
    let n = table.points[0].dim();
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=n).map(|i| format!("y_{i}")));
    csv.write_record(&header)?;
    for (lt, slice) in table.log_t.iter().zip(&table.slices) {
        for (x, y) in table.points.iter().zip(slice) {
            let mut row = vec![num(lt.exp())];
            row.extend(x.iter().map(|v| num(*v)));
            row.extend(y.iter().map(|v| num(*v)));
            csv.write_record(&row)?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn probe_cmd(args: &ProbeArgs) -> CliResult<Status> {
    if args.dim < 3 {
        return Err(CliError::Usage("--dim must be ≥ 3".into()));
    }
    if args.grid < 2 {
        return Err(CliError::Usage("--grid must be ≥ 2".into()));
    }
    if args.t.is_empty() || args.t.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(CliError::Usage("every --t value must be positive".into()));
    }
    let map = probe_map(args)?;
    let log_t: Vec<f64> = args.t.iter().map(|t| t.ln()).collect();
    let table = probe(&map, &log_t, &probe_grid(args.dim, args.grid))?;
    let spread = table.max_pairwise_distance();
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            write_probe_csv(&mut w, &table)?;
            w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        }
        None => write_probe_csv(io::stdout().lock(), &table)?,
    }
    let simple = spread <= args.tol;
    eprintln!(
        "probe {}: {} slices x {} points, max pairwise slice distance {spread:.6e} ({})",
        table.map,
        table.slices.len(),
        table.points.len(),
        if simple { "t-independent" } else { "t-dependent" }
    );
    Ok(Status::Pass)
}
