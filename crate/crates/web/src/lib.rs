//! Browser bindings for the demo page in `www/`.
//!
//! Every export has a plain Rust twin (`*_data`) that the native tests call.

use qcmap::distortion::bilipschitz_eigenvalues;
use qcmap::maps::{select_alpha, spiral_axis1};
use qcmap::orbit::{realize, RealizeOptions, TargetFile, TargetSet};
use qcmap::vecgeom::Vector;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Realizes a target given as JSON and returns the orbit as JSON:
/// `{"points": [[...]], "piece_index": [...], "summary": {...}}`.
pub fn orbit_json(target_json: &str, k_max: usize, samples_per_piece: usize) -> Result<String, String> {
    let file: TargetFile = serde_json::from_str(target_json).map_err(|e| format!("target: {e}"))?;
    let target = TargetSet::from_file(&file).map_err(|e| e.to_string())?;
    let opts = RealizeOptions {
        k_max: k_max.clamp(1, 12),
        samples_per_piece: samples_per_piece.clamp(1, 256),
        trace_resolution: 64,
        ..Default::default()
    };
    let r = realize(&target, &opts).map_err(|e| e.to_string())?;
    let points: Vec<&[f64]> = r.samples.iter().map(|s| s.point.as_slice()).collect();
    let pieces: Vec<i64> = r.samples.iter().map(|s| s.piece_index).collect();
    let trace: Vec<&[f64]> = r.trace.iter().map(|p| p.as_slice()).collect();
    Ok(json!({
        "points": points,
        "piece_index": pieces,
        "trace": trace,
        "summary": r.summary,
    })
    .to_string())
}

/// Image of a polar grid in the (1,2)-plane under the spiral stretch with
/// factor `k` and rate `alpha` (`alpha` = NaN selects it automatically).
/// Returns x, y pairs; polylines are separated by a NaN pair.
pub fn spiral_grid_data(k: f64, alpha: f64, circles: usize, rays: usize, steps: usize) -> Result<Vec<f64>, String> {
    let alpha = if alpha.is_nan() {
        select_alpha(k, 3, 1.0, 17).map_err(|e| e.to_string())?.alpha
    } else {
        alpha
    };
    let steps = steps.clamp(8, 2048);
    // polylines in the domain; None marks a break
    let mut domain: Vec<Option<(f64, f64)>> = Vec::new();
    let (r_min, r_max) = (0.02_f64, 1.0_f64);
    for c in 1..=circles.max(1) {
        let r = r_min * (r_max / r_min).powf(c as f64 / circles.max(1) as f64);
        for i in 0..=steps {
            let a = std::f64::consts::TAU * i as f64 / steps as f64;
            domain.push(Some((r * a.cos(), r * a.sin())));
        }
        domain.push(None);
    }
    for j in 0..rays.max(1) {
        let a = std::f64::consts::TAU * j as f64 / rays.max(1) as f64;
        for i in 0..=steps {
            let r = r_min * (r_max / r_min).powf(i as f64 / steps as f64);
            domain.push(Some((r * a.cos(), r * a.sin())));
        }
        domain.push(None);
    }
    let mut out = Vec::with_capacity(2 * domain.len());
    for p in domain {
        match p {
            Some((x, y)) => {
                let img = spiral_axis1(&Vector::new(vec![x, y, 0.0]), k, alpha).map_err(|e| e.to_string())?;
                out.push(img[0]);
                out.push(img[1]);
            }
            None => out.extend([f64::NAN, f64::NAN]),
        }
    }
    Ok(out)
}

/// Eigenvalues of the chart's bilipschitz form on a `grid × grid` raster of
/// [0, π/2] × [-π/2, π/2]: (λ_min, λ_max) per cell, row-major from the top;
/// NaN outside the region x ≥ |y|.
pub fn bilipschitz_field_data(grid: usize) -> Vec<f64> {
    let grid = grid.clamp(2, 1024);
    let h = std::f64::consts::FRAC_PI_2;
    let mut out = Vec::with_capacity(2 * grid * grid);
    for row in 0..grid {
        let y = h - 2.0 * h * (row as f64 + 0.5) / grid as f64;
        for col in 0..grid {
            let x = h * (col as f64 + 0.5) / grid as f64;
            match (x >= y.abs()).then(|| bilipschitz_eigenvalues(x, y)) {
                Some(Ok((lo, hi))) => {
                    out.push(lo);
                    out.push(hi);
                }
                _ => {
                    out.push(f64::NAN);
                    out.push(f64::NAN);
                }
            }
        }
    }
    out
}

#[wasm_bindgen]
pub fn realize_orbit(target_json: &str, k_max: usize, samples_per_piece: usize) -> Result<String, JsError> {
    orbit_json(target_json, k_max, samples_per_piece).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spiral_grid(k: f64, alpha: f64, circles: usize, rays: usize, steps: usize) -> Result<Vec<f64>, JsError> {
    spiral_grid_data(k, alpha, circles, rays, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bilipschitz_field(grid: usize) -> Vec<f64> {
    bilipschitz_field_data(grid)
}
