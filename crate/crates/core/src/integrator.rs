//! Fixed-step fourth-order Runge-Kutta propagation of density matrices
//! with per-snapshot diagnostics.
//!
//! The step size is fixed on purpose: the generators here are smooth and
//! bounded, fixed stepping makes sweeps bit-reproducible, and convergence
//! is measured by plain step-halving ([`convergence_check`]). The
//! integrator never renormalizes or projects the state; any repair is
//! opt-in downstream.

use crate::density::{diagnostics_of, DensityMatrix, Diagnostics};
use crate::error::{Error, Result};
use crate::matrix::{all_finite, CMat};

/// Hard cap on the number of steps a grid may describe.
pub const MAX_STEPS: f64 = 1e8;

/// Uniform time grid, all quantities in units of the inverse coupling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::InvalidParameter(format!(
                "time grid needs finite t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        crate::error::check_positive("time step", dt)?;
        let steps = (t_end - t_start) / dt;
        if steps > MAX_STEPS {
            return Err(Error::InvalidParameter(format!(
                "grid describes {steps:.3e} steps, cap is {MAX_STEPS:.0e}"
            )));
        }
        Ok(Self { t_start, t_end, dt })
    }

    /// From zero to `t_end`.
    pub fn to(t_end: f64, dt: f64) -> Result<Self> {
        Self::new(0.0, t_end, dt)
    }

    /// Number of RK4 steps covering the span (last step may land a hair
    /// past `t_end` when the span is not an exact multiple of `dt`).
    pub fn step_count(&self) -> usize {
        (((self.t_end - self.t_start) / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Refined grid with half the step.
    pub fn halved(&self) -> Self {
        Self {
            t_start: self.t_start,
            t_end: self.t_end,
            dt: self.dt / 2.0,
        }
    }
}

/// Time series of states with per-sample diagnostics.
///
/// `times` is strictly increasing and holds one entry per stored state.
/// States are the raw integrator output; diagnostics use the Hermitian
/// symmetrization internally for eigenvalues but nothing is ever fed back.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest |Tr ρ − 1| over the stored samples.
    pub fn max_trace_drift(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| (d.trace - num_complex::Complex64::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// Largest Hermiticity defect over the stored samples.
    pub fn max_hermiticity_defect(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.hermiticity_defect)
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue seen over the stored samples.
    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Classic RK4 with four right-hand-side evaluations per step (at t,
/// t + dt/2 twice, t + dt). Snapshots are stored every `sample_every`
/// steps plus the final point. Aborts with the offending time if a
/// non-finite entry appears.
pub fn integrate<F>(
    rhs: F,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    sample_every: usize,
) -> Result<Trajectory>
where
    F: Fn(&CMat, f64) -> CMat,
{
    if sample_every == 0 {
        return Err(Error::InvalidParameter(
            "sample_every must be at least 1".into(),
        ));
    }
    let n_steps = grid.step_count();
    let dt = grid.dt;
    let half = dt / 2.0;
    let sixth = dt / 6.0;

    let mut state = rho0.matrix().clone();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut diagnostics = Vec::new();

    let record = |t: f64, state: &CMat, times: &mut Vec<f64>, states: &mut Vec<DensityMatrix>, diagnostics: &mut Vec<Diagnostics>| {
        times.push(t);
        diagnostics.push(diagnostics_of(state));
        states.push(
            DensityMatrix::evolved(state.clone()).expect("finiteness checked by caller"),
        );
    };

    record(grid.t_start, &state, &mut times, &mut states, &mut diagnostics);

    for step in 0..n_steps {
        let t = grid.t_start + step as f64 * dt;

        let k1 = rhs(&state, t);
        let s2 = &state + &k1.mapv(|z| z * half);
        let k2 = rhs(&s2, t + half);
        let s3 = &state + &k2.mapv(|z| z * half);
        let k3 = rhs(&s3, t + half);
        let s4 = &state + &k3.mapv(|z| z * dt);
        let k4 = rhs(&s4, t + dt);

        state = &state
            + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * sixth);

        let t_next = grid.t_start + (step + 1) as f64 * dt;
        if !all_finite(&state) {
            return Err(Error::NonFinite { t: t_next });
        }
        if (step + 1) % sample_every == 0 || step + 1 == n_steps {
            record(t_next, &state, &mut times, &mut states, &mut diagnostics);
        }
    }

    Ok(Trajectory {
        times,
        states,
        diagnostics,
    })
}

/// Result of a step-halving self-convergence run.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Sample times shared by both runs.
    pub times: Vec<f64>,
    /// Observable along the coarse (`dt`) run.
    pub coarse: Vec<f64>,
    /// Observable along the refined (`dt/2`) run.
    pub fine: Vec<f64>,
    /// Max absolute difference over shared sample times.
    pub max_difference: f64,
}

/// Integrate at `dt` and `dt/2` and compare an observable on the shared
/// sample times.
pub fn convergence_check<F, O>(
    rhs: F,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    sample_every: usize,
    observable: O,
) -> Result<ConvergenceReport>
where
    F: Fn(&CMat, f64) -> CMat,
    O: Fn(&DensityMatrix) -> f64,
{
    let coarse_run = integrate(&rhs, rho0, grid, sample_every)?;
    let fine_run = integrate(&rhs, rho0, &grid.halved(), sample_every * 2)?;
    debug_assert_eq!(coarse_run.len(), fine_run.len());

    let coarse: Vec<f64> = coarse_run.states.iter().map(&observable).collect();
    let fine: Vec<f64> = fine_run.states.iter().map(&observable).collect();
    let max_difference = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    Ok(ConvergenceReport {
        times: coarse_run.times,
        coarse,
        fine,
        max_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use num_complex::Complex64 as C64;

    fn scalar_state(value: f64) -> DensityMatrix {
        let mut m: CMat = Array2::zeros((1, 1));
        m[[0, 0]] = C64::new(value, 0.0);
        DensityMatrix::evolved(m).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 1e-3).is_ok());
        assert!(TimeGrid::new(1.0, 1.0, 1e-3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TimeGrid::new(0.0, 1e6, 1e-3).is_err()); // 1e9 steps
        assert_eq!(TimeGrid::to(1.0, 1e-3).unwrap().step_count(), 1000);
    }

    #[test]
    fn zero_rhs_is_constant() {
        let rho0 = scalar_state(0.7);
        let grid = TimeGrid::to(2.0, 0.01).unwrap();
        let traj = integrate(|m, _| Array2::zeros(m.dim()), &rho0, &grid, 10).unwrap();
        assert_eq!(traj.len(), 21);
        assert!(traj
            .states
            .iter()
            .all(|s| s.matrix()[[0, 0]] == C64::new(0.7, 0.0)));
        assert!(traj
            .diagnostics
            .windows(2)
            .all(|w| w[0].trace == w[1].trace));
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }

    /// Final-time relative error of the scalar decay problem dρ/dt = −2γρ.
    fn decay_error(gamma: f64, t_end: f64, dt: f64) -> f64 {
        let rho0 = scalar_state(1.0);
        let grid = TimeGrid::to(t_end, dt).unwrap();
        let rate = C64::new(-2.0 * gamma, 0.0);
        let traj = integrate(|m, _| m.mapv(|z| rate * z), &rho0, &grid, usize::MAX).unwrap();
        let numeric = traj.states.last().unwrap().matrix()[[0, 0]].re;
        let exact = (-2.0 * gamma * t_end).exp();
        ((numeric - exact) / exact).abs()
    }

    #[test]
    fn scalar_decay_is_fourth_order() {
        let gamma = 0.5;
        let t_end = 2.0;
        let mut errors = Vec::new();
        let mut dt = 0.1;
        for _ in 0..4 {
            errors.push(decay_error(gamma, t_end, dt));
            dt /= 2.0;
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(
                (3.9..=4.2).contains(&order),
                "empirical order {order} outside [3.9, 4.2], errors {errors:?}"
            );
        }
    }

    #[test]
    fn two_atom_decay_matches_exponential() {
        use crate::basis::EE;
        use crate::model::{initial_density, InitialState, ModelParams, ReducedGenerator, StateFamily};

        let gamma = 0.1;
        let params = ModelParams::new(10.0, 10.0, 0.0, gamma).unwrap();
        let gen = ReducedGenerator::new(params);
        // |ee⟩ start: Psi family with α = 0.
        let rho0 = initial_density(&InitialState::new(StateFamily::Psi, 0.0, 0.0).unwrap());
        // γ·dt = 1e-3, γ·t up to 5.
        let grid = TimeGrid::to(50.0, 0.01).unwrap();
        let traj = integrate(|m, t| gen.rhs(m, t), &rho0, &grid, 100).unwrap();
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let expected = (-2.0 * gamma * t).exp();
            let got = state.matrix()[[EE, EE]].re;
            assert!(
                (got - expected).abs() <= 1e-8,
                "population {got} vs {expected} at t = {t}"
            );
        }
        assert!(traj.max_trace_drift() < 1e-10);
        assert!(traj.max_hermiticity_defect() < 1e-10);
    }

    #[test]
    fn convergence_check_zero_rhs() {
        let rho0 = scalar_state(1.0);
        let grid = TimeGrid::to(1.0, 0.01).unwrap();
        let report = convergence_check(
            |m, _| Array2::zeros(m.dim()),
            &rho0,
            &grid,
            10,
            |s| s.matrix()[[0, 0]].re,
        )
        .unwrap();
        assert_eq!(report.max_difference, 0.0);
    }

    #[test]
    fn convergence_delta_shrinks_sixteenfold() {
        let gamma = 0.5;
        let rho0 = scalar_state(1.0);
        let rate = C64::new(-2.0 * gamma, 0.0);
        let rhs = |m: &CMat, _: f64| m.mapv(|z| rate * z);
        let obs = |s: &DensityMatrix| s.matrix()[[0, 0]].re;

        let coarse = convergence_check(rhs, &rho0, &TimeGrid::to(2.0, 0.05).unwrap(), 10, obs)
            .unwrap()
            .max_difference;
        let fine = convergence_check(rhs, &rho0, &TimeGrid::to(2.0, 0.025).unwrap(), 20, obs)
            .unwrap()
            .max_difference;
        let ratio = coarse / fine;
        assert!(
            (10.0..25.0).contains(&ratio),
            "expected ≈16x shrink, got {ratio}"
        );
    }

    #[test]
    fn aborts_on_blowup_with_time() {
        // dρ/dt = ρ² from 1 diverges at t = 1; RK4 overflows shortly before.
        let rho0 = scalar_state(1.0);
        let grid = TimeGrid::to(2.0, 1e-3).unwrap();
        let err = integrate(|m, _| m.dot(m), &rho0, &grid, 10).unwrap_err();
        match err {
            Error::NonFinite { t } => assert!(t > 0.9 && t < 1.1, "abort at t = {t}"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }
}
