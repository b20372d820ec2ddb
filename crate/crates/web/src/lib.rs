//! Browser bindings: origin eigenvalues, the flux table and separatrix
//! probes. Results are returned as JSON strings.

use serde_json::json;
use wasm_bindgen::prelude::*;

use linfinity::eigenstructure::{case_c_condition, saddle_at_origin};
use linfinity::fields::original_jacobian;
use linfinity::infinity::{separatrix_probe, R_STAR};
use linfinity::numerics::eig::eig3;
use linfinity::output::flux_table;
use linfinity::Params;

fn err(e: linfinity::Error) -> JsError {
    JsError::new(&format!("{}: {e}", e.category()))
}

pub fn eigen_json(alpha: f64, beta: f64, gamma: f64) -> Result<String, linfinity::Error> {
    let p = Params::with_gamma(alpha, beta, gamma);
    let e = eig3(&original_jacobian(&[0.0; 3], &p))?;
    let margin = saddle_at_origin(&p).ok().map(|s| case_c_condition(&s));
    Ok(json!({ "values": e.values, "vectors": e.vectors, "case_c_margin": margin }).to_string())
}

pub fn flux_json(start: f64, stop: f64, step: f64, w_b: f64) -> Result<String, linfinity::Error> {
    let rows = flux_table(start, step, stop, w_b, &Params::new(5.3, 2.0))?;
    Ok(json!({ "r_star": R_STAR, "rows": rows }).to_string())
}

pub fn probe_json(alpha: f64, beta: f64, gamma: f64, x0: f64, delta: f64) -> Result<String, linfinity::Error> {
    let o = separatrix_probe(&Params::with_gamma(alpha, beta, gamma), x0, delta)?;
    Ok(json!({ "x0": x0, "delta": delta, "outcome": o }).to_string())
}

/// Eigenvalues, unit eigenvectors and case-C margin of the origin.
#[wasm_bindgen]
pub fn eigenvalues(alpha: f64, beta: f64, gamma: f64) -> Result<String, JsError> {
    eigen_json(alpha, beta, gamma).map_err(err)
}

/// Rows `[r, closed_form, numeric]` of the averaged flux.
#[wasm_bindgen]
pub fn flux(start: f64, stop: f64, step: f64, w_b: f64) -> Result<String, JsError> {
    flux_json(start, stop, step, w_b).map_err(err)
}

/// Backward probe from `(x0, -alpha, delta)` in the blown-up chart.
#[wasm_bindgen]
pub fn probe(alpha: f64, beta: f64, gamma: f64, x0: f64, delta: f64) -> Result<String, JsError> {
    probe_json(alpha, beta, gamma, x0, delta).map_err(err)
}
