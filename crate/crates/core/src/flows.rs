//! Fractional combinatorial Calabi flows `dw/dt = Δˢ (K̄ − K)`.
//!
//! `Δˢ = −(−Δ)ˢ` is defined through the symmetric eigendecomposition of the
//! positive definite `−Δ`. The exponent interpolates between the Yamabe-type
//! flow `dw/dt = K − K̄` (`s = 0`) and the Calabi flow (`s = 1`), which is
//! the negative gradient flow of the Calabi energy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::SurfaceComplex;
use crate::conformal::{
    boundary_margin, check_admissible, curvature_at, is_admissible, laplacian, BackgroundMetric,
    ConformalFactor, CurvatureVector, LaplacianMatrix,
};
use crate::energy::{calabi_energy, potential_energy};
use crate::error::{Error, Result};

/// Smallest step before a run gives up.
pub const MIN_STEP: f64 = 1e-14;
/// A trial state may not lose more than this fraction of the current margin.
pub const MARGIN_RETENTION: f64 = 0.1;
/// Accepted steps in a row before the step grows.
pub const GROWTH_STREAK: usize = 5;
pub const GROWTH_FACTOR: f64 = 1.5;
/// `dt_max = DT_MAX_FACTOR · dt0`.
pub const DT_MAX_FACTOR: f64 = 100.0;
/// Steps are capped at `STABILITY_FACTOR / max_k λ_k^(1+s)`, with `λ_k` the
/// eigenvalues of `−Δ`. RK4 damps every linearized mode without overshoot
/// below 2.78.
pub const STABILITY_FACTOR: f64 = 2.0;
/// Relative slack allowed for roundoff when checking the Calabi energy.
pub const ENERGY_SLACK: f64 = 1e-12;

/// `Δˢ = −(−Δ)ˢ` for a symmetric negative definite `Δ`.
pub fn fractional_power(delta: &LaplacianMatrix, s: f64) -> Result<LaplacianMatrix> {
    let n = delta.nrows();
    if delta.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "Laplacian columns",
            expected: n,
            found: delta.ncols(),
        });
    }
    let a = -(delta + delta.transpose()) * 0.5;
    let eig = a.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    if let Some(&first) = order.first() {
        let smallest = eig.eigenvalues[first];
        if !(smallest > 0.0) {
            return Err(Error::NotNegativeDefinite { eigenvalue: smallest });
        }
    }
    if s == 1.0 {
        return Ok(delta.clone());
    }
    if s == 0.0 {
        return Ok(-DMatrix::identity(n, n));
    }

    let mut out = DMatrix::zeros(n, n);
    for &k in &order {
        let v = eig.eigenvectors.column(k);
        out -= (v * v.transpose()) * eig.eigenvalues[k].powf(s);
    }
    Ok(out)
}

/// Eigenvalues of `−Δ`, ascending.
pub fn spectrum(delta: &LaplacianMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = (-(delta + delta.transpose()) * 0.5)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest explicit step that keeps the linearized flow monotone at `w`.
pub fn stable_step(delta: &LaplacianMatrix, s: f64) -> f64 {
    let stiffest = spectrum(delta)
        .into_iter()
        .map(|l| l.powf(1.0 + s))
        .fold(0.0, f64::max);
    STABILITY_FACTOR / stiffest
}

/// Parameters of one flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub s: f64,
    pub k_bar: CurvatureVector,
    pub w0: ConformalFactor,
    /// Converged once `‖K − K̄‖∞ < tol`.
    pub tol: f64,
    pub dt0: f64,
    pub t_max: f64,
    /// Record every `sample_every`-th accepted step (plus the endpoints).
    pub sample_every: usize,
}

impl FlowSpec {
    pub fn new(s: f64, k_bar: CurvatureVector, w0: ConformalFactor) -> Self {
        FlowSpec {
            s,
            k_bar,
            w0,
            tol: 1e-10,
            dt0: 1e-2,
            t_max: 1e4,
            sample_every: 1,
        }
    }

    pub fn validate(&self, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if !self.s.is_finite() {
            return invalid(format!("exponent s must be finite, got {}", self.s));
        }
        CurvatureVector::new(self.k_bar.0.clone())?;
        if self.k_bar.len() != cx.num_components() {
            return Err(Error::DimensionMismatch {
                what: "target curvature",
                expected: cx.num_components(),
                found: self.k_bar.len(),
            });
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return invalid(format!("dt0 must be positive, got {}", self.dt0));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return invalid(format!("t_max must be non-negative, got {}", self.t_max));
        }
        if self.sample_every == 0 {
            return invalid("sample_every must be at least 1".into());
        }
        ConformalFactor::new(self.w0.0.clone())?;
        check_admissible(&self.w0, bg, cx)?;
        Ok(())
    }
}

/// `Δˢ(w) · (K̄ − K(w))`.
pub fn vector_field(
    w: &ConformalFactor,
    spec: &FlowSpec,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<Vec<f64>> {
    let k = curvature_at(w, bg, cx)?;
    velocity(w, &k, spec, bg, cx)
}

fn velocity(
    w: &ConformalFactor,
    k: &CurvatureVector,
    spec: &FlowSpec,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<Vec<f64>> {
    let n = k.len();
    let residual = DVector::from_iterator(n, spec.k_bar.0.iter().zip(&k.0).map(|(kb, ki)| kb - ki));
    if spec.s == 0.0 {
        // Δ⁰ = −I; only the definiteness check needs Δ
        fractional_power(&laplacian(w, bg, cx)?, 0.0)?;
        return Ok((-residual).iter().copied().collect());
    }
    let power = fractional_power(&laplacian(w, bg, cx)?, spec.s)?;
    Ok((power * residual).iter().copied().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    HorizonReached,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub w: ConformalFactor,
    pub k: CurvatureVector,
    pub calabi_energy: f64,
    pub potential_energy: f64,
    pub boundary_margin: f64,
    /// Step that produced this sample (`dt0` for the initial state).
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub samples: Vec<FlowSample>,
    pub status: FlowStatus,
    /// Accepted and rejected step counts.
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Final state of a run, as written to a report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct FlowSummary {
    pub status: FlowStatus,
    pub t_final: f64,
    pub w_final: ConformalFactor,
    #[serde(rename = "K_final")]
    pub k_final: CurvatureVector,
    pub curvature_error: f64,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowSample {
        self.samples.last().expect("a trajectory always holds its initial sample")
    }

    pub fn summary(&self, k_bar: &CurvatureVector) -> FlowSummary {
        let last = self.last();
        FlowSummary {
            status: self.status,
            t_final: last.t,
            w_final: last.w.clone(),
            k_final: last.k.clone(),
            curvature_error: last.k.max_abs_diff(k_bar),
        }
    }
}

struct State {
    t: f64,
    w: ConformalFactor,
    k: CurvatureVector,
    margin: f64,
    energy: f64,
    step_limit: f64,
}

impl State {
    fn new(t: f64, w: ConformalFactor, spec: &FlowSpec, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<Self> {
        let k = curvature_at(&w, bg, cx)?;
        Ok(State {
            t,
            margin: boundary_margin(&w, bg, cx)?,
            energy: calabi_energy(&k, &spec.k_bar)?,
            step_limit: stable_step(&laplacian(&w, bg, cx)?, spec.s),
            w,
            k,
        })
    }
}

fn axpy(w: &ConformalFactor, h: f64, v: &[f64]) -> ConformalFactor {
    ConformalFactor(w.0.iter().zip(v).map(|(x, d)| x + h * d).collect())
}

/// One classical RK4 step, or `None` if a stage leaves the admissible space.
fn rk4_trial(
    state: &State,
    h: f64,
    spec: &FlowSpec,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<Option<ConformalFactor>> {
    let w = &state.w;
    let k1 = velocity(w, &state.k, spec, bg, cx)?;
    let mut stages = vec![k1];
    for c in [0.5, 0.5, 1.0] {
        let p = axpy(w, c * h, stages.last().unwrap());
        if !is_admissible(&p, bg, cx) {
            return Ok(None);
        }
        stages.push(vector_field(&p, spec, bg, cx)?);
    }
    let combined: Vec<f64> = (0..w.len())
        .map(|i| (stages[0][i] + 2.0 * stages[1][i] + 2.0 * stages[2][i] + stages[3][i]) / 6.0)
        .collect();
    Ok(Some(axpy(w, h, &combined)))
}

fn sample(
    state: &State,
    dt: f64,
    spec: &FlowSpec,
    bg: &BackgroundMetric,
    cx: &SurfaceComplex,
) -> Result<FlowSample> {
    Ok(FlowSample {
        t: state.t,
        w: state.w.clone(),
        k: state.k.clone(),
        calabi_energy: state.energy,
        potential_energy: potential_energy(&state.w, &spec.k_bar, bg, cx)?,
        boundary_margin: state.margin,
        dt,
    })
}

/// Integrates the flow from `spec.w0` with adaptive RK4 and a margin guard.
///
/// A trial step is rejected (and `dt` halved) when it leaves the admissible
/// space, keeps less than [`MARGIN_RETENTION`] of the current margin, or
/// raises the Calabi energy. After [`GROWTH_STREAK`] accepted steps in a row
/// `dt` grows by [`GROWTH_FACTOR`], capped at `100 · dt0`. Each step is also
/// capped by [`stable_step`] at the current state.
pub fn run_flow(spec: &FlowSpec, bg: &BackgroundMetric, cx: &SurfaceComplex) -> Result<FlowTrajectory> {
    spec.validate(bg, cx)?;
    let dt_max = DT_MAX_FACTOR * spec.dt0;

    let mut state = State::new(0.0, spec.w0.clone(), spec, bg, cx)?;
    let mut samples = vec![sample(&state, spec.dt0, spec, bg, cx)?];
    let mut last_step = spec.dt0;
    let mut last_recorded = true;

    let mut dt = spec.dt0;
    let mut streak = 0;
    let mut accepted = 0;
    let mut rejected = 0;

    let status = loop {
        if state.k.max_abs_diff(&spec.k_bar) < spec.tol {
            break FlowStatus::Converged;
        }
        if state.t >= spec.t_max {
            break FlowStatus::HorizonReached;
        }
        if dt < MIN_STEP {
            break FlowStatus::StepUnderflow;
        }

        let remaining = spec.t_max - state.t;
        let h = dt.min(state.step_limit).min(remaining);
        let next = match rk4_trial(&state, h, spec, bg, cx)? {
            Some(w) if boundary_margin(&w, bg, cx)? >= MARGIN_RETENTION * state.margin => {
                let t = if h == remaining { spec.t_max } else { state.t + h };
                let next = State::new(t, w, spec, bg, cx)?;
                (next.energy <= state.energy * (1.0 + ENERGY_SLACK)).then_some(next)
            }
            _ => None,
        };
        let Some(next) = next else {
            rejected += 1;
            dt = h * 0.5;
            streak = 0;
            continue;
        };

        state = next;
        accepted += 1;
        last_step = h;
        streak += 1;
        if streak >= GROWTH_STREAK {
            dt = (dt * GROWTH_FACTOR).min(dt_max);
            streak = 0;
        }
        last_recorded = accepted % spec.sample_every == 0;
        if last_recorded {
            samples.push(sample(&state, h, spec, bg, cx)?);
        }
    };

    if !last_recorded {
        samples.push(sample(&state, last_step, spec, bg, cx)?);
    }
    Ok(FlowTrajectory {
        samples,
        status,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pants() -> (SurfaceComplex, BackgroundMetric) {
        (
            SurfaceComplex::pair_of_pants(),
            BackgroundMetric::uniform(3, 2f64.acosh()).unwrap(),
        )
    }

    #[test]
    fn trivial_powers() {
        let (cx, bg) = pants();
        let delta = laplacian(&ConformalFactor(vec![0.1, 0.0, -0.1]), &bg, &cx).unwrap();
        let p0 = fractional_power(&delta, 0.0).unwrap();
        assert!((p0 + DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
        let p1 = fractional_power(&delta, 1.0).unwrap();
        assert!((p1 - &delta).amax() < 1e-15);
        // general path reproduces s = 1 too
        let p1 = fractional_power(&delta, 1.0 + 1e-300).unwrap();
        assert!((p1 - &delta).amax() < 1e-12);

        let m = DMatrix::<f64>::identity(2, 2) * -2.0;
        let half = fractional_power(&m, 0.5).unwrap();
        assert!((half + DMatrix::<f64>::identity(2, 2) * 2f64.sqrt()).amax() < 1e-14);
    }

    #[test]
    fn general_powers_match_repeated_products() {
        let (cx, bg) = pants();
        let delta = laplacian(&ConformalFactor::zeros(3), &bg, &cx).unwrap();
        let p2 = fractional_power(&delta, 2.0).unwrap();
        assert!((p2 + &delta * &delta).amax() < 1e-12);
        let pm1 = fractional_power(&delta, -1.0).unwrap();
        let inv = delta.clone().try_inverse().unwrap();
        assert!((pm1 - inv).amax() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            fractional_power(&m, 0.5),
            Err(Error::NotNegativeDefinite { .. })
        ));
        assert!(fractional_power(&DMatrix::zeros(2, 2), 1.0).is_err());
    }

    #[test]
    fn yamabe_field_is_curvature_excess() {
        let (cx, bg) = pants();
        let w = ConformalFactor(vec![0.05, 0.1, -0.02]);
        let kb = CurvatureVector(vec![2.0, 3.0, 4.0]);
        let spec = FlowSpec::new(0.0, kb.clone(), ConformalFactor::zeros(3));
        let v = vector_field(&w, &spec, &bg, &cx).unwrap();
        let k = curvature_at(&w, &bg, &cx).unwrap();
        for i in 0..3 {
            assert_eq!(v[i], k.0[i] - kb.0[i]);
        }
    }

    #[test]
    fn fixed_point_has_zero_velocity() {
        let (cx, bg) = pants();
        let w = ConformalFactor(vec![0.3, -0.2, 0.1]);
        let kb = curvature_at(&w, &bg, &cx).unwrap();
        for s in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let spec = FlowSpec::new(s, kb.clone(), ConformalFactor::zeros(3));
            let v = vector_field(&w, &spec, &bg, &cx).unwrap();
            assert!(v.iter().all(|x| *x == 0.0), "s = {s}: {v:?}");
        }
    }

    #[test]
    fn calabi_field_is_negative_energy_gradient() {
        let (cx, bg) = pants();
        let w = ConformalFactor::zeros(3);
        let k0 = curvature_at(&w, &bg, &cx).unwrap();
        let kb = CurvatureVector(vec![k0.0[0] + 0.1, k0.0[1], k0.0[2] - 0.1]);
        let spec = FlowSpec::new(1.0, kb.clone(), w.clone());
        let v = vector_field(&w, &spec, &bg, &cx).unwrap();
        let energy = |x: &ConformalFactor| calabi_energy(&curvature_at(x, &bg, &cx).unwrap(), &kb).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = w.clone();
            let mut dn = w.clone();
            up.0[i] += h;
            dn.0[i] -= h;
            let grad = (energy(&up) - energy(&dn)) / (2.0 * h);
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((v[i] + grad).abs() / scale < 1e-5, "{} vs {}", v[i], -grad);
        }
    }

    #[test]
    fn starting_at_solution_converges_immediately() {
        let (cx, bg) = pants();
        let w_bar = ConformalFactor(vec![0.3, -0.2, 0.1]);
        let kb = curvature_at(&w_bar, &bg, &cx).unwrap();
        let traj = run_flow(&FlowSpec::new(1.0, kb, w_bar.clone()), &bg, &cx).unwrap();
        assert_eq!(traj.status, FlowStatus::Converged);
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.last().t, 0.0);
    }

    #[test]
    fn zero_horizon() {
        let (cx, bg) = pants();
        let kb = CurvatureVector(vec![2.0, 3.0, 4.0]);
        let mut spec = FlowSpec::new(1.0, kb, ConformalFactor::zeros(3));
        spec.t_max = 0.0;
        let traj = run_flow(&spec, &bg, &cx).unwrap();
        assert_eq!(traj.status, FlowStatus::HorizonReached);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn invalid_specs() {
        let (cx, bg) = pants();
        let kb = CurvatureVector(vec![2.0, 3.0, 4.0]);
        let base = FlowSpec::new(1.0, kb, ConformalFactor::zeros(3));
        let mut bad = base.clone();
        bad.k_bar = CurvatureVector(vec![2.0, 0.0, 4.0]);
        assert!(run_flow(&bad, &bg, &cx).is_err());
        let mut bad = base.clone();
        bad.tol = 0.0;
        assert!(run_flow(&bad, &bg, &cx).is_err());
        let mut bad = base.clone();
        bad.dt0 = -1.0;
        assert!(run_flow(&bad, &bg, &cx).is_err());
        let mut bad = base.clone();
        bad.w0 = ConformalFactor(vec![-1.0; 3]);
        assert!(matches!(run_flow(&bad, &bg, &cx), Err(Error::Inadmissible { .. })));
        let mut bad = base;
        bad.sample_every = 0;
        assert!(run_flow(&bad, &bg, &cx).is_err());
    }

    #[test]
    fn calabi_flow_reaches_prescribed_factor() {
        let (cx, bg) = pants();
        let w_bar = ConformalFactor(vec![0.3, -0.2, 0.1]);
        let kb = curvature_at(&w_bar, &bg, &cx).unwrap();
        let traj = run_flow(&FlowSpec::new(1.0, kb.clone(), ConformalFactor::zeros(3)), &bg, &cx).unwrap();
        assert_eq!(traj.status, FlowStatus::Converged);
        let last = traj.last();
        assert!(last.k.max_abs_diff(&kb) < 1e-10);
        for (a, b) in last.w.0.iter().zip(&w_bar.0) {
            assert!((a - b).abs() < 1e-8);
        }
        for pair in traj.samples.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }
}
