//! Browser bindings. Every function returns a JSON string so the page can
//! stay plain JavaScript.

use ctpower_core::ctpower::{ghz_closed_form, w_ntype_closed_form, w_ntype_plus_form, wclass_closed_form};
use ctpower_core::qlinalg::re;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `[{a2, P, meaningful}]` for `|a|^2` on `points` equally spaced values in [0, 1].
pub fn ghz_curve_json(n: usize, points: usize) -> Result<String, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let rows = (0..points)
        .map(|i| {
            let a2 = i as f64 / (points - 1) as f64;
            let r = ghz_closed_form(n, re(a2.sqrt()), re((1.0 - a2).sqrt())).map_err(|e| e.to_string())?;
            Ok(json!({"a2": a2, "P": r.minimal_power, "meaningful": r.meaningful}))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!(rows).to_string())
}

/// Full report for the W-class state with coefficients `(l0, l1, l2, l3)`,
/// rescaled to unit norm first.
pub fn wclass_report_json(l0: f64, l1: f64, l2: f64, l3: f64) -> Result<String, String> {
    let norm = (l0 * l0 + l1 * l1 + l2 * l2 + l3 * l3).sqrt();
    if norm.is_nan() || norm == 0.0 || [l0, l1, l2, l3].iter().any(|&x| x < 0.0) {
        return Err("coefficients must be non-negative and not all zero".into());
    }
    let l = [l0 / norm, l1 / norm, l2 / norm, l3 / norm];
    let mut v = wclass_closed_form(l).map_err(|e| e.to_string())?.to_json();
    v.as_object_mut().expect("object").insert("lambdas".into(), json!(l));
    Ok(v.to_string())
}

/// `[{n, P, plus_form, meaningful}]` for uniform W-type states, n = 3..=n_max.
pub fn w_ntype_table_json(n_max: usize) -> Result<String, String> {
    if !(3..=20).contains(&n_max) {
        return Err("n_max must lie in 3..=20".into());
    }
    let rows = (3..=n_max)
        .map(|n| {
            let alphas = vec![re(1.0 / (n as f64).sqrt()); n];
            let r = w_ntype_closed_form(&alphas).map_err(|e| e.to_string())?;
            Ok(json!({"n": n, "P": r.minimal_power, "plus_form": w_ntype_plus_form(&alphas), "meaningful": r.meaningful}))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!(rows).to_string())
}

#[wasm_bindgen]
pub fn ghz_curve(n: usize, points: usize) -> Result<String, JsValue> {
    ghz_curve_json(n, points).map_err(err)
}

#[wasm_bindgen]
pub fn wclass_report(l0: f64, l1: f64, l2: f64, l3: f64) -> Result<String, JsValue> {
    wclass_report_json(l0, l1, l2, l3).map_err(err)
}

#[wasm_bindgen]
pub fn w_ntype_table(n_max: usize) -> Result<String, JsValue> {
    w_ntype_table_json(n_max).map_err(err)
}
