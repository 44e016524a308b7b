//! Browser bindings: a Φ profile, a rescaled snapshot and a porosity summary,
//! each returned as a JSON string.

use std::sync::Arc;

use porosity::estimate::{Protocol, Side};
use porosity::porosity0::profile;
use porosity::report::render_compact;
use porosity::pretangent::{snapshot, SnapshotOptions};
use porosity::setkit::SetHandle;
use porosity::spec::SetSpec;
use porosity::{Exact, Magnitude};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_DEPTH: u32 = 48;

fn load(spec: &str) -> Result<Arc<SetHandle<Exact>>, String> {
    let spec = SetSpec::from_json(spec).map_err(|e| e.to_string())?;
    SetHandle::from_spec(&spec).map(Arc::new).map_err(|e| e.to_string())
}

fn protocol(depth: u32) -> Result<Protocol, String> {
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(format!("depth must be in 1..={MAX_DEPTH}"));
    }
    Ok(Protocol::new(depth).windows(depth.min(8)))
}

/// `[{j, sup, inf}]` for the trailing dyadic windows.
pub fn profile_json(spec: &str, depth: u32) -> Result<String, String> {
    let e = load(spec)?;
    let p = profile(&e, &protocol(depth)?).map_err(|e| e.to_string())?;
    let rows: Vec<_> = p
        .windows
        .iter()
        .map(|(j, w)| json!({"j": j, "sup": w.sup.to_f64(), "inf": w.inf.to_f64()}))
        .collect();
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Points of `E/r` in `[0, cap]`, where `r` is the `k`-th point of `E`.
pub fn snapshot_json(spec: &str, k: u32, cap: u32) -> Result<String, String> {
    let e = load(spec)?;
    let r = e
        .point(k as usize)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("set has fewer than {} points", k + 1))?;
    let s = snapshot(&e, &r, &SnapshotOptions::new(Exact::ratio(u64::from(cap.max(1)), 1)))
        .map_err(|e| e.to_string())?;
    let pts: Vec<f64> = s.points.iter().map(Magnitude::to_f64).collect();
    Ok(json!({"r": r.to_f64(), "points": pts, "truncated": s.truncated}).to_string())
}

pub fn summary_json(spec: &str, depth: u32) -> Result<String, String> {
    let e = load(spec)?;
    let p = profile(&e, &protocol(depth)?).map_err(|e| e.to_string())?;
    let (lo, hi) = (p.bracket(Side::Lower), p.bracket(Side::Upper));
    Ok(json!({
        "lower": lo.value(),
        "upper": hi.value(),
        "lower_exact": render_compact(&lo.estimate),
        "upper_exact": render_compact(&hi.estimate),
        "converged": lo.converged && hi.converged,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn phi_profile(spec: &str, depth: u32) -> Result<String, JsValue> {
    profile_json(spec, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = snapshot)]
pub fn snapshot_points(spec: &str, k: u32, cap: u32) -> Result<String, JsValue> {
    snapshot_json(spec, k, cap).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn porosity_summary(spec: &str, depth: u32) -> Result<String, JsValue> {
    summary_json(spec, depth).map_err(|e| JsValue::from_str(&e))
}
