//! Browser bindings: spectrum, Poincaré constants and decay curves for a
//! one-dimensional potential given as JSON.

use coerce_core::dirichlet::{assemble_operator, default_n_eigs, spectral_decomposition, spectral_gap};
use coerce_core::discretize::{make_test_bank, GridMeasure};
use coerce_core::evolve::{decay_curve, fit_decay_rate};
use coerce_core::potential::PotentialSpec;
use coerce_core::verify::estimate_poincare;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest node count accepted from the page, to keep the full spectrum cheap.
const MAX_NODES: usize = 1025;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn grid(potential: &str, radius: f64, nodes: usize) -> Result<GridMeasure, JsError> {
    let u: PotentialSpec = serde_json::from_str(potential).map_err(js)?;
    if u.dim != 1 {
        return Err(JsError::new("the demo handles one-dimensional potentials"));
    }
    if nodes > MAX_NODES {
        return Err(JsError::new(&format!("at most {MAX_NODES} nodes")));
    }
    GridMeasure::build(&u, radius, nodes).map_err(js)
}

/// Lowest `count` eigenvalues of the Dirichlet operator and the spectral gap, as JSON.
#[wasm_bindgen]
pub fn spectrum(potential: &str, radius: f64, nodes: usize, count: usize) -> Result<String, JsError> {
    let gm = grid(potential, radius, nodes)?;
    let sd = spectral_decomposition(&assemble_operator(&gm), count.clamp(2, nodes)).map_err(js)?;
    let gap = spectral_gap(&sd).map_err(js)?;
    Ok(json!({ "eigenvalues": sd.eigenvalues(), "gap": gap }).to_string())
}

/// Order-`k` Poincaré constant over the seeded test bank with its ratio table, as JSON.
#[wasm_bindgen]
pub fn poincare(potential: &str, radius: f64, nodes: usize, k: u32, q: f64, seed: u32) -> Result<String, JsError> {
    let gm = grid(potential, radius, nodes)?;
    let bank = make_test_bank(&gm, u64::from(seed), 4);
    let report = estimate_poincare(&gm, &bank, k, q).map_err(js)?;
    serde_json::to_string(&report).map_err(js)
}

/// `μ|∇^k f_t|²` along the semigroup from `f₀ = x`, with the fitted rate and `2m₀`, as JSON.
#[wasm_bindgen]
pub fn decay(potential: &str, radius: f64, nodes: usize, k: u32, t_max: f64) -> Result<String, JsError> {
    let gm = grid(potential, radius, nodes)?;
    let sd = spectral_decomposition(&assemble_operator(&gm), default_n_eigs(&gm)).map_err(js)?;
    let times: Vec<f64> = (0..41).map(|i| t_max * f64::from(i) / 40.0).collect();
    let f0 = gm.function(|p| p[0]);
    let mut curve = decay_curve(&gm, &sd, &f0, k, &times).map_err(js)?;
    let window = curve.default_window();
    let rate = fit_decay_rate(&mut curve, window).ok();
    let gap = spectral_gap(&sd).map_err(js)?;
    Ok(json!({ "times": curve.times, "values": curve.values, "rate": rate, "twice_gap": 2.0 * gap }).to_string())
}
