//! Three operations for the static page in `www/`. Each has a plain Rust
//! version (tested natively) and a thin `wasm_bindgen` wrapper.

use rittlab::spectral::SpectralGrid;
use rittlab::sqfun::{q_function, QSpec};
use rittlab::zmeasure::{nu_alpha, ritt_constant};
use rittlab::{Signal, Symbol};
use wasm_bindgen::prelude::*;

/// `n ‖ν^n * (δ₀ - ν)‖₁` for the `k`-atom truncation of `ν_α`.
pub fn ritt_trace(alpha: f64, k: usize, n_max: usize) -> Result<Vec<f64>, String> {
    let nu = nu_alpha(alpha, k, true)
        .and_then(|t| t.into_probability())
        .map_err(|e| e.to_string())?;
    Ok(ritt_constant(&nu, n_max).map_err(|e| e.to_string())?.values)
}

/// Flattened `(t, |ν̂_α(t)|, |1 - ν̂_α(t)|)` triples on the dyadic grid.
pub fn symbol_profile(alpha: f64, levels: usize) -> Result<Vec<f64>, String> {
    let symbol = Symbol::nu_alpha(alpha).map_err(|e| e.to_string())?;
    let grid = SpectralGrid::dyadic(&symbol, levels).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * grid.len());
    for i in 0..grid.len() {
        out.extend([grid.ts[i], grid.m0[i].norm(), grid.one_minus[i].norm()]);
    }
    Ok(out)
}

/// `Q_{α,s,1} f` on `Z_n` for a spike at 0 and `μ = ν_{1/2}`.
pub fn q_profile(alpha: f64, s: f64, n: usize, n_max: usize) -> Result<Vec<f64>, String> {
    let mu = Symbol::nu_alpha(0.5).map_err(|e| e.to_string())?;
    let f = Signal::cyclic_spike(n, 0).map_err(|e| e.to_string())?;
    let q = q_function(&mu, &QSpec::new(alpha, s, 1.0, n_max), &f).map_err(|e| e.to_string())?;
    Ok(q.q.values)
}

#[wasm_bindgen(js_name = rittTrace)]
pub fn ritt_trace_js(alpha: f64, k: usize, n_max: usize) -> Result<Vec<f64>, JsError> {
    ritt_trace(alpha, k, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = symbolProfile)]
pub fn symbol_profile_js(alpha: f64, levels: usize) -> Result<Vec<f64>, JsError> {
    symbol_profile(alpha, levels).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = qProfile)]
pub fn q_profile_js(alpha: f64, s: f64, n: usize, n_max: usize) -> Result<Vec<f64>, JsError> {
    q_profile(alpha, s, n, n_max).map_err(|e| JsError::new(&e))
}
