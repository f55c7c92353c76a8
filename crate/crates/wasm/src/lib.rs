//! Browser bindings: curve chart, single bound, and ring-game certification.
//!
//! Each binding returns a JSON string. The plain functions behind them are
//! usable natively.

use serde_json::json;
use spoa_core::bounds::{design_bound, spoa_bound, spoa_curve, WelfareCurve};
use spoa_core::report::curve_svg;
use spoa_core::worstcase::certify_tightness;
use wasm_bindgen::prelude::*;

/// Largest player count accepted by the page, keeping solves interactive.
pub const MAX_PLAYERS: usize = 12;

fn curve_spec(n: usize, welfare: &str) -> Result<WelfareCurve, String> {
    if n == 0 || n > MAX_PLAYERS {
        return Err(format!("n must lie in [1, {MAX_PLAYERS}]"));
    }
    WelfareCurve::parse(welfare, n).map_err(|e| e.to_string())
}

/// Curve for k = 1..n as `{"table": ..., "svg": "..."}`.
pub fn curve_json(n: usize, welfare: &str, design: bool) -> Result<String, String> {
    let w = curve_spec(n, welfare)?;
    let ks: Vec<usize> = (1..=n).collect();
    let table = spoa_curve(n, &w, &ks, design).map_err(|e| e.to_string())?;
    Ok(json!({ "table": table.to_json(), "svg": curve_svg(&table) }).to_string())
}

/// Bound report for one k; the design bound when `design` is set.
pub fn bound_json(n: usize, welfare: &str, k: usize, design: bool) -> Result<String, String> {
    let w = curve_spec(n, welfare)?;
    let report = if design {
        design_bound(n, &w, k)
    } else {
        spoa_bound(n, &w, k)
    };
    Ok(report.map_err(|e| e.to_string())?.to_json().to_string())
}

/// Tightness certificate of the ring construction.
pub fn certify_json(n: usize, welfare: &str, k: usize) -> Result<String, String> {
    let w = curve_spec(n, welfare)?;
    let (certificate, _) = certify_tightness(n, &w, k).map_err(|e| e.to_string())?;
    Ok(certificate.to_json().to_string())
}

#[wasm_bindgen]
pub fn curve(n: usize, welfare: &str, design: bool) -> Result<String, JsError> {
    curve_json(n, welfare, design).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bound(n: usize, welfare: &str, k: usize, design: bool) -> Result<String, JsError> {
    bound_json(n, welfare, k, design).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn certify(n: usize, welfare: &str, k: usize) -> Result<String, JsError> {
    certify_json(n, welfare, k).map_err(|e| JsError::new(&e))
}
