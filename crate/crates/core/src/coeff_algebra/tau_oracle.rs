//! Ellipticity of the pushed-forward coefficient `τ = [[1, b], [0, c]]`.
//!
//! With `D = det σ`, `T = Tr σ`, `H = (σ₁₂ − σ₂₁)²` the lower constant of τ is
//! `F(D, H) = (D + 1 − √((D−1)² + H)) / 2`, to be minimized over coefficients
//! with `σ ∈ M(1/K, K)`, `D ≤ 1`. The smallest eigenvalue of the symmetric part
//! of σ is `(T − √(T² + H − 4D))/2`, and `T² + H − 4D ≥ 0` always holds, so for
//! fixed `(D, H)` the admissible traces form `T ≥ √(max(0, 4D − H))`.

use serde::Serialize;

use crate::error::{Error, Result};

const GRID: usize = 200;
const REFINE_GRID: usize = 21;
const T_MAX: f64 = 10.0;
const H_MAX: f64 = 4.0;
const REFINE_TOL: f64 = 1e-8;
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TauMode {
    ClosedForm,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauMinimizer {
    pub d: f64,
    pub h: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauBound {
    pub value: f64,
    pub minimizer: Option<TauMinimizer>,
}

/// Side-by-side comparison of the oracle against the printed expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauComparison {
    pub k: f64,
    pub oracle: TauBound,
    /// `1 − √(1 − 1/K²)`.
    pub closed_form: f64,
    /// `1 + √(1 − 1/K²)`, the minimum as printed alongside the minimization.
    pub printed_minimum: f64,
    /// The printed minimizer `T = 2/K, D = 1, H = 1 − 1/K²`.
    pub printed_minpoint: TauMinimizer,
    /// `F` evaluated at the printed minimizer, `1 − ½√(1 − 1/K²)`.
    pub value_at_printed_minpoint: f64,
    /// `|oracle − closed_form|`.
    pub closed_form_gap: f64,
    /// `|oracle − printed_minimum|`.
    pub printed_minimum_gap: f64,
    /// `|oracle − F(printed minpoint)|`.
    pub printed_minpoint_gap: f64,
}

/// `F(D, H)`.
pub fn tau_lower_constant(d: f64, h: f64) -> f64 {
    0.5 * (d + 1.0 - ((d - 1.0) * (d - 1.0) + h).sqrt())
}

fn feasible(d: f64, h: f64, t: f64, inv_k: f64) -> bool {
    let disc = (t * t + h - 4.0 * d).max(0.0);
    let lam = 0.5 * (t - disc.sqrt());
    // lower eigenvalue of sym σ and of sym σ⁻¹ (the latter is lam / D)
    lam >= inv_k - SLACK && d > 0.0 && lam / d >= inv_k - SLACK
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
    }
}

/// Searches `t ∈ [t_lo, t_hi]` on `n` points (both ends included) for a feasible trace.
fn feasible_trace(d: f64, h: f64, n: usize, inv_k: f64) -> Option<f64> {
    let t_lo = (4.0 * d - h).max(0.0).sqrt();
    if t_lo > T_MAX {
        return None;
    }
    (0..n).map(|k| linspace(t_lo, T_MAX, n, k)).find(|&t| feasible(d, h, t, inv_k))
}

fn oracle(k: f64) -> TauBound {
    let inv_k = 1.0 / k;
    let mut best: Option<(f64, TauMinimizer)> = None;
    let consider = |d: f64, h: f64, n_t: usize, best: &mut Option<(f64, TauMinimizer)>| {
        let f = tau_lower_constant(d, h);
        if best.as_ref().is_some_and(|(v, _)| f >= *v) {
            return;
        }
        if let Some(t) = feasible_trace(d, h, n_t, inv_k) {
            *best = Some((f, TauMinimizer { d, h, t }));
        }
    };

    for i in 0..GRID {
        let d = linspace(0.0, 1.0, GRID, i);
        for j in 0..GRID {
            let h = linspace(0.0, H_MAX, GRID, j);
            consider(d, h, GRID, &mut best);
        }
    }

    let Some((_, mut center)) = best else {
        return TauBound { value: f64::NAN, minimizer: None };
    };
    let mut span_d = 2.0 / (GRID - 1) as f64;
    let mut span_h = 2.0 * H_MAX / (GRID - 1) as f64;
    while span_d > REFINE_TOL || span_h > REFINE_TOL {
        let (d_lo, d_hi) = ((center.d - span_d).max(0.0), (center.d + span_d).min(1.0));
        let (h_lo, h_hi) = ((center.h - span_h).max(0.0), (center.h + span_h).min(H_MAX));
        for i in 0..REFINE_GRID {
            let d = linspace(d_lo, d_hi, REFINE_GRID, i);
            for j in 0..REFINE_GRID {
                let h = linspace(h_lo, h_hi, REFINE_GRID, j);
                consider(d, h, GRID, &mut best);
            }
        }
        center = best.expect("seeded by the coarse grid").1;
        span_d *= 0.2;
        span_h *= 0.2;
    }
    let (value, minimizer) = best.expect("seeded by the coarse grid");
    TauBound { value, minimizer: Some(minimizer) }
}

/// Lower ellipticity constant `α_τ = 1/β_τ` of the pushed-forward coefficient.
///
/// `ClosedForm` returns `1 − √(1 − 1/K²)`; `Oracle` minimizes `F` by a dense
/// grid over `(D, H, T)` followed by zoomed grids down to `1e-8`.
pub fn tau_ellipticity_bound(k: f64, mode: TauMode) -> Result<TauBound> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain(format!("K = {k} must be >= 1")));
    }
    Ok(match mode {
        TauMode::ClosedForm => TauBound { value: 1.0 - (1.0 - 1.0 / (k * k)).sqrt(), minimizer: None },
        TauMode::Oracle => oracle(k),
    })
}

pub fn compare_tau_bounds(k: f64) -> Result<TauComparison> {
    let oracle = tau_ellipticity_bound(k, TauMode::Oracle)?;
    let closed_form = tau_ellipticity_bound(k, TauMode::ClosedForm)?.value;
    let root = (1.0 - 1.0 / (k * k)).sqrt();
    let printed_minpoint = TauMinimizer { d: 1.0, h: 1.0 - 1.0 / (k * k), t: 2.0 / k };
    let value_at_printed_minpoint = tau_lower_constant(printed_minpoint.d, printed_minpoint.h);
    Ok(TauComparison {
        k,
        oracle,
        closed_form,
        printed_minimum: 1.0 + root,
        printed_minpoint,
        value_at_printed_minpoint,
        closed_form_gap: (oracle.value - closed_form).abs(),
        printed_minimum_gap: (oracle.value - (1.0 + root)).abs(),
        printed_minpoint_gap: (oracle.value - value_at_printed_minpoint).abs(),
    })
}
