//! JSON check reports and CSV profile export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::porosity0::Profile;
use crate::pretangent::Snapshot;
use crate::scalar::Magnitude;
use crate::structure::SspReport;

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub inputs: Value,
    pub lhs: String,
    pub rhs: String,
    pub gap: f64,
    pub tol: f64,
    pub pass: bool,
    pub depth: u32,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `[lo, hi]` rendered with the scalar's own notation.
pub fn render_interval<M: Magnitude>(lo: &M, hi: &M) -> String {
    format!("[{}, {}]", lo.render(), hi.render())
}

/// Window profile as CSV: `j,h_lo,h_hi,window_sup,window_inf`.
pub fn profile_csv<M: Magnitude>(p: &Profile<M>) -> String {
    let mut out = String::from("j,h_lo,h_hi,window_sup,window_inf\n");
    for (j, w) in &p.windows {
        let _ = writeln!(
            out,
            "{j},{},{},{},{}",
            w.lo.render(),
            w.hi.render(),
            w.sup.render(),
            w.inf.render()
        );
    }
    out
}

/// Snapshots as CSV: `n,r,point`, one row per point.
pub fn snapshot_csv<M: Magnitude>(snaps: &[Snapshot<M>]) -> String {
    let mut out = String::from("n,r,point\n");
    for (n, s) in snaps.iter().enumerate() {
        let r = s.r.render();
        for p in &s.points {
            let _ = writeln!(out, "{n},{r},{}", p.render());
        }
    }
    out
}

/// `{verdict, profiles: [{profile, j, value}], chain_depth, cross_checks}`.
pub fn ssp_json(r: &SspReport) -> Value {
    let mut profiles = Vec::new();
    for (name, p) in [
        ("left_end", &r.left_ends),
        ("relative_length", &r.relative_length),
        ("adjacency", &r.adjacency),
    ] {
        profiles.extend(p.iter().map(|(j, v)| json!({"profile": name, "j": j, "value": v})));
    }
    let cross = match r.cross_check {
        Some((v, verdict)) => json!({"lower_porosity_at_infinity": v, "verdict": verdict}),
        None => json!({}),
    };
    json!({
        "verdict": r.verdict,
        "profiles": profiles,
        "chain_depth": r.chain_len,
        "cross_checks": cross,
    })
}

/// The scalar's own notation, or its decimal value when that would be long.
pub fn render_compact<M: Magnitude>(x: &M) -> String {
    let s = x.render();
    if s.len() <= 64 {
        s
    } else {
        format!("{:e}", x.to_f64())
    }
}
