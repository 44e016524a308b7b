//! Finite-scale stand-ins for limsup and liminf.

use serde::{Deserialize, Serialize};

use crate::scalar::Magnitude;

/// How many dyadic windows to inspect and how closely they must agree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    /// Windows are indexed `j < depth`.
    pub depth: u32,
    /// Number of trailing windows that enter the estimate.
    pub windows: u32,
    pub tol: f64,
}

pub const DEFAULT_WINDOWS: u32 = 8;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Trailing windows that must agree for a bracket to count as converged.
pub const AGREEMENT: usize = 3;

impl Protocol {
    pub fn new(depth: u32) -> Self {
        Protocol { depth, windows: DEFAULT_WINDOWS, tol: DEFAULT_TOL }
    }

    pub fn windows(mut self, w: u32) -> Self {
        self.windows = w;
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Indices of the trailing windows, ascending.
    pub fn window_range(&self) -> std::ops::Range<u32> {
        self.depth.saturating_sub(self.windows)..self.depth
    }
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::new(32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowStat<M> {
    pub j: u32,
    pub sup: M,
    pub inf: M,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateBracket<M> {
    pub side: Side,
    pub estimate: M,
    pub windows: Vec<WindowStat<M>>,
    pub converged: bool,
    pub depth: u32,
    pub tol: f64,
    /// Some windows were dropped because enumeration ran out of budget.
    pub budget_hit: bool,
}

impl<M: Magnitude> EstimateBracket<M> {
    /// Builds the bracket from window statistics in ascending `j`.
    /// Returns `None` when no window survived.
    pub fn from_windows(
        side: Side,
        windows: Vec<WindowStat<M>>,
        depth: u32,
        tol: f64,
        budget_hit: bool,
    ) -> Option<Self> {
        let pick = |w: &WindowStat<M>| match side {
            Side::Upper => w.sup.clone(),
            Side::Lower => w.inf.clone(),
        };
        let estimate = match side {
            Side::Upper => windows.iter().map(pick).max()?,
            Side::Lower => windows.iter().map(pick).min()?,
        };
        let tail: Vec<f64> =
            windows.iter().rev().take(AGREEMENT).map(|w| pick(w).to_f64()).collect();
        let converged = tail.len() == AGREEMENT && {
            let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo <= tol
        };
        Some(EstimateBracket { side, estimate, windows, converged, depth, tol, budget_hit })
    }

    pub fn value(&self) -> f64 {
        self.estimate.to_f64()
    }

    /// Smallest window inf and largest window sup.
    pub fn envelope(&self) -> (M, M) {
        let lo = self.windows.iter().map(|w| w.inf.clone()).min().unwrap_or_else(M::zero);
        let hi = self.windows.iter().map(|w| w.sup.clone()).max().unwrap_or_else(M::zero);
        (lo, hi)
    }
}
