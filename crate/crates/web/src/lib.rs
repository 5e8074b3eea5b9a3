//! Browser bindings for the static demo page in `www/`.
//!
//! Each exported function is a thin wrapper over a plain Rust function so
//! the computations can be tested natively.

use conformal_det::convergence::{sweep, FamilyTemplate};
use conformal_det::functionals::{concentration_profile, FunctionalName};
use conformal_det::maps::{normalize, reflect, MapFamily};
use conformal_det::{Error, Point};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Planar member of a named family: `raw`, `normalized` or `reflected`.
pub fn planar_family(variant: &str, n: u32) -> Result<MapFamily, Error> {
    match variant {
        "raw" => MapFamily::raw(2, n),
        "normalized" => normalize(2, n),
        "reflected" => reflect(&MapFamily::raw(2, n)?, 2),
        other => Err(Error::InvalidParameter {
            name: "variant",
            reason: format!("expected raw, normalized or reflected, got `{other}`"),
        }),
    }
}

/// Images of a polar grid on the unit disk as `[x0, y0, x1, y1, ...]`
/// polylines separated by a NaN pair: `circles` concentric circles, then
/// `rays` radii, each sampled at `samples` points.
pub fn grid_polylines(
    variant: &str,
    n: u32,
    circles: u32,
    rays: u32,
    samples: u32,
) -> Result<Vec<f64>, Error> {
    if samples < 2 || circles + rays == 0 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "need at least one line and two samples per line".into(),
        });
    }
    let f = planar_family(variant, n)?;
    let mut out = Vec::with_capacity(((circles + rays) * (samples + 1) * 2) as usize);
    let mut y = [0.0; 2];
    let mut push_line = |out: &mut Vec<f64>, point: &dyn Fn(f64) -> [f64; 2]| {
        for k in 0..samples {
            let x = point(k as f64 / (samples - 1) as f64);
            f.eval_into(&x, &mut y);
            out.extend_from_slice(&y);
        }
        out.extend_from_slice(&[f64::NAN, f64::NAN]);
    };
    for i in 1..=circles {
        let r = i as f64 / circles as f64;
        push_line(&mut out, &|t| {
            let a = std::f64::consts::TAU * t;
            [r * a.cos(), r * a.sin()]
        });
    }
    for j in 0..rays {
        let a = std::f64::consts::TAU * j as f64 / rays as f64;
        push_line(&mut out, &|t| [t * a.cos(), t * a.sin()]);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct SweepView {
    pub n: Vec<u32>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: Vec<bool>,
    pub limit: Option<f64>,
    pub model: Option<String>,
}

/// Sweep one functional of the raw, normalized, reflected or scaled family.
pub fn sweep_view(
    variant: &str,
    dim: usize,
    n_list: &[u32],
    functional: &str,
    tol: f64,
) -> Result<SweepView, Error> {
    let template = match variant {
        "raw" => FamilyTemplate::Raw { dim },
        "normalized" => FamilyTemplate::Normalized { dim },
        "reflected" => FamilyTemplate::Reflected { dim, axis: 2 },
        "scaled" => FamilyTemplate::Scaled { dim, c: 1.0 },
        other => {
            return Err(Error::InvalidParameter {
                name: "variant",
                reason: format!("unknown variant `{other}`"),
            })
        }
    };
    let name = match functional {
        "lp" => FunctionalName::Lp(dim as f64),
        "grad_lp" => FunctionalName::GradLp(dim as f64),
        other => other.parse()?,
    };
    let seq = sweep(&template, n_list, &[name], tol)?;
    let results: Vec<_> = seq.rows.iter().filter_map(|r| r.get(name)).collect();
    let fit = seq.limit(name);
    Ok(SweepView {
        n: results.iter().map(|r| r.n).collect(),
        values: results.iter().map(|r| r.value).collect(),
        errors: results.iter().map(|r| r.error).collect(),
        converged: results.iter().map(|r| r.converged).collect(),
        limit: fit.map(|f| f.limit),
        model: fit.map(|f| f.model.describe()),
    })
}

/// Share of `∫|∇f_n|²` inside `B(e_1, ρ) ∩ B(0,1)` for each radius.
pub fn concentration_fractions(n: u32, radii: &[f64], tol: f64) -> Result<Vec<f64>, Error> {
    let f = MapFamily::raw(2, n)?;
    Ok(concentration_profile(&f, &Point::unit(2, 0), radii, tol)?.fractions)
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Image of a polar grid under the n-th planar map; NaN pairs split lines.
#[wasm_bindgen(js_name = mapGrid)]
pub fn map_grid(
    variant: &str,
    n: u32,
    circles: u32,
    rays: u32,
    samples: u32,
) -> Result<Vec<f64>, JsError> {
    grid_polylines(variant, n, circles, rays, samples).map_err(js_err)
}

/// JSON sweep `{n, values, errors, converged, limit, model}`.
#[wasm_bindgen(js_name = sweepFunctional)]
pub fn sweep_functional(
    variant: &str,
    dim: usize,
    n_list: Vec<u32>,
    functional: &str,
    tol: f64,
) -> Result<String, JsError> {
    let view = sweep_view(variant, dim, &n_list, functional, tol).map_err(js_err)?;
    serde_json::to_string(&view).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = concentration)]
pub fn concentration(n: u32, radii: Vec<f64>, tol: f64) -> Result<Vec<f64>, JsError> {
    concentration_fractions(n, &radii, tol).map_err(js_err)
}
