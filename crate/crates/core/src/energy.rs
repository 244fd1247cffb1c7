//! Energies of the curvature-prescription problem and a damped Newton solver.
//!
//! The Calabi energy `½ Σ (K_i − K̄_i)²` measures the distance to the target.
//! The potential `ℰ(w) = −∫₀^w Σ (K_i − K̄_i) dw_i` is well defined because
//! `Δ` is symmetric, and convex because `−Δ` is positive definite.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::SurfaceComplex;
use crate::conformal::{
    boundary_margin, check_admissible, curvature_at, laplacian, BackgroundMetric, ConformalFactor, CurvatureVector,
};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes per segment.
pub const QUADRATURE_NODES: usize = 16;
/// Longest segment (in ‖·‖∞) integrated by one quadrature panel.
pub const MAX_PANEL_WIDTH: f64 = 0.25;
/// Absolute tolerance per panel before it is bisected.
pub const PANEL_TOLERANCE: f64 = 1e-13;
/// Deepest bisection of a single panel.
pub const MAX_PANEL_DEPTH: u32 = 30;
/// Smallest step fraction tried by the Newton line search.
pub const MIN_STEP_FRACTION: f64 = 1e-12;

pub fn calabi_energy(k: &CurvatureVector, k_bar: &CurvatureVector) -> Result<f64> {
    if k.len() != k_bar.len() {
        return Err(Error::DimensionMismatch {
            what: "curvature vs target",
            expected: k_bar.len(),
            found: k.len(),
        });
    }
    Ok(0.5 * k.0.iter().zip(&k_bar.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
}

/// Nodes and weights on `[0, 1]`.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUADRATURE_NODES;
        let mut rule = vec![(0.0, 0.0); n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp;
            loop {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
                }
                dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let prev = z;
                z = prev - p1 / dp;
                if (z - prev).abs() < 1e-15 {
                    break;
                }
            }
            let weight = 2.0 / ((1.0 - z * z) * dp * dp);
            rule[i] = ((1.0 - z) / 2.0, weight / 2.0);
            rule[n - 1 - i] = ((1.0 + z) / 2.0, weight / 2.0);
        }
        rule
    })
}

fn panel_rule(f: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &(node, weight) in gauss_legendre() {
        sum += weight * f(lo + node * (hi - lo))?;
    }
    Ok(sum * (hi - lo))
}

/// Bisects until both halves agree with the whole. The curvature has a
/// logarithmic singularity on the admissibility boundary, so panels next to
/// a low-margin endpoint need grading.
fn adaptive_panel(f: &impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, whole: f64, depth: u32) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let (left, right) = (panel_rule(f, lo, mid)?, panel_rule(f, mid, hi)?);
    if depth == 0 || (left + right - whole).abs() <= PANEL_TOLERANCE {
        return Ok(left + right);
    }
    Ok(adaptive_panel(f, lo, mid, left, depth - 1)? + adaptive_panel(f, mid, hi, right, depth - 1)?)
}

/// `−∫ Σ (K_i − K̄_i) dw_i` along the straight segment `from → to`.
///
/// Both endpoints must be admissible; the admissible set is convex, so the
/// whole segment is.
pub fn line_integral(
    from: &ConformalFactor,
    to: &ConformalFactor,
    k_bar: &CurvatureVector,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<f64> {
    for w in [from, to] {
        check_admissible(w, bg, cx)?;
    }
    if k_bar.len() != cx.num_components() {
        return Err(Error::DimensionMismatch {
            what: "target curvature",
            expected: cx.num_components(),
            found: k_bar.len(),
        });
    }
    let dir: Vec<f64> = to.0.iter().zip(&from.0).map(|(b, a)| b - a).collect();
    let span = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let panels = ((span / MAX_PANEL_WIDTH).ceil() as usize).max(1);
    let width = 1.0 / panels as f64;

    let integrand = |tau: f64| -> Result<f64> {
        let w = ConformalFactor(from.0.iter().zip(&dir).map(|(a, d)| a + tau * d).collect());
        let k = curvature_at(&w, bg, cx)?;
        Ok(k.0.iter().zip(&k_bar.0).zip(&dir).map(|((ki, kb), d)| (ki - kb) * d).sum())
    };
    let mut total = 0.0;
    for p in 0..panels {
        let (lo, hi) = (p as f64 * width, (p + 1) as f64 * width);
        let whole = panel_rule(&integrand, lo, hi)?;
        total += adaptive_panel(&integrand, lo, hi, whole, MAX_PANEL_DEPTH)?;
    }
    Ok(0.0 - total)
}

/// `ℰ(w)`, based at `w = 0`.
pub fn potential_energy(
    w: &ConformalFactor,
    k_bar: &CurvatureVector,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<f64> {
    line_integral(&ConformalFactor::zeros(w.len()), w, k_bar, bg, cx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub iterations: usize,
    pub w_star: ConformalFactor,
    /// `‖K − K̄‖∞` at the start and after every iteration.
    pub residual_history: Vec<f64>,
}

/// Solves `K(w) = K̄` by Newton's method on `Δ d = K̄ − K`, damped by
/// backtracking on the Calabi energy.
pub fn newton_solve(
    k_bar: &CurvatureVector,
    w0: &ConformalFactor,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let k_bar = CurvatureVector::new(k_bar.0.clone())?;
    if k_bar.len() != cx.num_components() {
        return Err(Error::DimensionMismatch {
            what: "target curvature",
            expected: cx.num_components(),
            found: k_bar.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidSpec(format!("tol must be positive, got {tol}")));
    }
    check_admissible(w0, bg, cx)?;

    let mut w = w0.clone();
    let mut k = curvature_at(&w, bg, cx)?;
    let mut energy = calabi_energy(&k, &k_bar)?;
    let mut residual = k.max_abs_diff(&k_bar);
    let mut history = vec![residual];
    let mut iterations = 0;

    let report = |status, iterations, w: ConformalFactor, history| SolveReport {
        status,
        iterations,
        w_star: w,
        residual_history: history,
    };

    loop {
        if residual < tol {
            return Ok(report(SolveStatus::Converged, iterations, w, history));
        }
        if iterations >= max_iter {
            return Ok(report(SolveStatus::MaxIterations, iterations, w, history));
        }

        let neg_delta: DMatrix<f64> = -laplacian(&w, bg, cx)?;
        let rhs = DVector::from_iterator(k.len(), k.0.iter().zip(&k_bar.0).map(|(a, b)| a - b));
        let step = match neg_delta.cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => {
                return Err(Error::NotNegativeDefinite {
                    eigenvalue: f64::NAN,
                })
            }
        };

        let mut alpha = 1.0;
        let accepted = loop {
            if alpha < MIN_STEP_FRACTION {
                break None;
            }
            let trial = ConformalFactor(w.0.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect());
            if boundary_margin(&trial, bg, cx)? > 0.0 {
                let k_trial = curvature_at(&trial, bg, cx)?;
                let e_trial = calabi_energy(&k_trial, &k_bar)?;
                if e_trial < energy {
                    break Some((trial, k_trial, e_trial));
                }
            }
            alpha *= 0.5;
        };

        let Some((trial, k_trial, e_trial)) = accepted else {
            return Ok(report(SolveStatus::LineSearchFailed, iterations, w, history));
        };
        w = trial;
        k = k_trial;
        energy = e_trial;
        residual = k.max_abs_diff(&k_bar);
        history.push(residual);
        iterations += 1;
    }
}
