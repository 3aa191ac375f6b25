//! Run configuration, (α², t) sweep execution, and machine-readable output.
//!
//! Grid points are independent tasks executed on the rayon pool; rows are
//! assembled by index, so the output is byte-identical regardless of worker
//! count or completion order.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concurrence::{concurrence_general, concurrence_x, ConcurrenceValue};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::events::EventReport;
use crate::integrator::{integrate, TimeGrid, Trajectory};
use crate::model::{initial_density, InitialState, ModelParams, ReducedGenerator, StateFamily};
use crate::oracle::{oracle_converged, oracle_evolve, CutoffCheck, OracleConfig};

/// Default decay constant in units of λ. The figure-style regimes do not
/// pin γ, so it is mandatory, loud, and echoed in every summary.
pub const GAMMA_OVER_LAMBDA_DEFAULT: f64 = 0.1;
/// Default integrator step in λt.
pub const DT_LAMBDA_DEFAULT: f64 = 1e-3;
/// Default snapshot stride (samples every 0.01 λt at the default step).
pub const SAMPLE_EVERY_DEFAULT: usize = 10;
/// Default α² grid size for sweeps.
pub const ALPHA_GRID_DEFAULT: usize = 41;
/// Default photon cutoff for the oracle engine.
pub const N_MAX_DEFAULT: usize = 8;
/// Concurrence-shift tolerance for the oracle's mandatory cutoff check.
pub const CUTOFF_TOL_DEFAULT: f64 = 1e-4;

/// Which dynamics produces the reduced state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Time-local reduced master equation on the 4×4 state.
    Reduced,
    /// Joint-space truncated-Fock reference, field traced out.
    Oracle,
}

/// A single α² or a uniform grid over [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSqSpec {
    Single(f64),
    Grid { count: usize },
}

fn default_sample_every() -> usize {
    SAMPLE_EVERY_DEFAULT
}

fn default_n_max() -> usize {
    N_MAX_DEFAULT
}

fn default_time_axis_scale() -> f64 {
    1.0
}

/// Complete description of a run; echoed verbatim into the JSON summary.
///
/// All frequencies and times are in units of λ (the coupling is the unit
/// of measure, so λ ≡ 1 internally). Resonance ω₀ = ω is the default;
/// `omega0_over_lambda` overrides it explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub engine: Engine,
    pub family: StateFamily,
    pub omega_over_lambda: f64,
    #[serde(default)]
    pub omega0_over_lambda: Option<f64>,
    pub gamma_over_lambda: f64,
    pub alpha_sq: AlphaSqSpec,
    #[serde(default)]
    pub beta_phase: f64,
    pub t_max_lambda: f64,
    pub dt_lambda: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub renormalize_trace: bool,
    /// Output-only multiplier on the time column (plot-axis conventions);
    /// internal time is always λt.
    #[serde(default = "default_time_axis_scale")]
    pub time_axis_scale: f64,
    #[serde(default)]
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        crate::error::check_positive("omega_over_lambda", self.omega_over_lambda)?;
        if let Some(w0) = self.omega0_over_lambda {
            crate::error::check_positive("omega0_over_lambda", w0)?;
        }
        crate::error::check_non_negative("gamma_over_lambda", self.gamma_over_lambda)?;
        match self.alpha_sq {
            AlphaSqSpec::Single(a) => {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha_sq must lie in [0, 1], got {a}"
                    )));
                }
            }
            AlphaSqSpec::Grid { count } => {
                if count < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha_sq grid needs at least 2 points, got {count}"
                    )));
                }
            }
        }
        crate::error::check_non_negative("t_max_lambda", self.t_max_lambda)?;
        crate::error::check_positive("dt_lambda", self.dt_lambda)?;
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter(
                "sample_every must be at least 1".into(),
            ));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter(
                "n_max must be at least 1".into(),
            ));
        }
        crate::error::check_positive("time_axis_scale", self.time_axis_scale)?;
        Ok(())
    }

    /// Physical parameters with λ as the unit (resonant unless overridden).
    pub fn params(&self) -> Result<ModelParams> {
        let omega0 = self.omega0_over_lambda.unwrap_or(self.omega_over_lambda);
        ModelParams::new(omega0, self.omega_over_lambda, 1.0, self.gamma_over_lambda)
    }

    /// The α² values of this run. Grid values are mirrored around 1/2 so
    /// that complementary pairs (α², 1−α²) are exact in floating point.
    pub fn alpha_grid(&self) -> Vec<f64> {
        match self.alpha_sq {
            AlphaSqSpec::Single(a) => vec![a],
            AlphaSqSpec::Grid { count } => {
                let mut grid = vec![0.0; count];
                for (i, slot) in grid.iter_mut().enumerate().take(count / 2 + 1) {
                    *slot = i as f64 / (count - 1) as f64;
                }
                for i in (count / 2 + 1)..count {
                    grid[i] = 1.0 - grid[count - 1 - i];
                }
                grid
            }
        }
    }
}

/// Extrema of the per-sample diagnostics over a whole surface.
///
/// `max_trace_drift` and `max_hermiticity_defect` are taken on the object
/// the engine integrates (the joint state for the oracle); the trace-drift
/// report is present in every summary regardless of engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    /// Largest concurrence before clamping to [0, 1]; values above 1 are
    /// possible when the trace has drifted upward.
    pub max_raw_concurrence: f64,
    /// How often the X-structure fast path fell back to the general route.
    pub x_fallback_count: usize,
}

/// C(α², t) on a rectangular grid with per-sample diagnostics.
#[derive(Debug, Clone)]
pub struct ConcurrenceSurface {
    pub alpha_sq_values: Vec<f64>,
    /// Sample times in λt (unscaled).
    pub time_values: Vec<f64>,
    /// Concurrence clamped to [0, 1], indexed [α² row, time column].
    pub concurrence: Array2<f64>,
    pub trace_re: Array2<f64>,
    pub trace_drift: Array2<f64>,
    pub min_eigenvalue: Array2<f64>,
    pub diagnostics: SurfaceDiagnostics,
    /// Mandatory cutoff check for oracle runs (at the middle grid α²).
    pub cutoff_check: Option<CutoffCheck>,
}

impl ConcurrenceSurface {
    /// Concurrence row for one α² value.
    pub fn row(&self, alpha_index: usize) -> Vec<f64> {
        self.concurrence.row(alpha_index).to_vec()
    }
}

struct CurveRow {
    times: Vec<f64>,
    concurrence_raw: Vec<f64>,
    trace_re: Vec<f64>,
    trace_drift: Vec<f64>,
    min_eigenvalue: Vec<f64>,
    max_integrated_trace_drift: f64,
    max_integrated_hermiticity_defect: f64,
    x_fallbacks: usize,
}

fn concurrence_with_fallback(
    state: &DensityMatrix,
    fallbacks: &mut usize,
) -> Result<ConcurrenceValue> {
    match concurrence_x(state) {
        Ok(v) => Ok(v),
        Err(Error::NotXStructured { max_offender, .. }) => {
            log::warn!(
                "X-structure broke down (off-X entry {max_offender:.3e}); using general route"
            );
            *fallbacks += 1;
            concurrence_general(state)
        }
        Err(other) => Err(other),
    }
}

fn renormalized(state: &DensityMatrix) -> DensityMatrix {
    let tr = state.diagnostics().trace.re;
    if tr.abs() > f64::MIN_POSITIVE {
        DensityMatrix::evolved(state.matrix().mapv(|z| z / tr))
            .expect("renormalization keeps entries finite")
    } else {
        state.clone()
    }
}

fn curve_from_trajectory(
    reduced: &Trajectory,
    integrated_trace_drift: f64,
    integrated_herm_defect: f64,
    renormalize: bool,
) -> Result<CurveRow> {
    let mut concurrence_raw = Vec::with_capacity(reduced.len());
    let mut trace_re = Vec::with_capacity(reduced.len());
    let mut trace_drift = Vec::with_capacity(reduced.len());
    let mut min_eigenvalue = Vec::with_capacity(reduced.len());
    let mut x_fallbacks = 0usize;

    for (state, diag) in reduced.states.iter().zip(&reduced.diagnostics) {
        let value = if renormalize {
            concurrence_with_fallback(&renormalized(state), &mut x_fallbacks)?
        } else {
            concurrence_with_fallback(state, &mut x_fallbacks)?
        };
        concurrence_raw.push(value.value);
        trace_re.push(diag.trace.re);
        trace_drift.push((diag.trace - num_complex::Complex64::new(1.0, 0.0)).norm());
        min_eigenvalue.push(diag.min_eigenvalue);
    }

    Ok(CurveRow {
        times: reduced.times.clone(),
        concurrence_raw,
        trace_re,
        trace_drift,
        min_eigenvalue,
        max_integrated_trace_drift: integrated_trace_drift,
        max_integrated_hermiticity_defect: integrated_herm_defect,
        x_fallbacks,
    })
}

/// Trajectory of the initial state alone (t_max = 0 runs).
fn frozen_trajectory(state: &InitialState) -> Trajectory {
    let rho = initial_density(state);
    let diag = rho.diagnostics();
    Trajectory {
        times: vec![0.0],
        states: vec![rho],
        diagnostics: vec![diag],
    }
}

fn run_single(config: &RunConfig, params: &ModelParams, alpha_sq: f64) -> Result<CurveRow> {
    let state = InitialState::from_alpha_sq(config.family, alpha_sq, config.beta_phase)?;

    if config.t_max_lambda == 0.0 {
        let traj = frozen_trajectory(&state);
        return curve_from_trajectory(&traj, 0.0, 0.0, config.renormalize_trace);
    }

    match config.engine {
        Engine::Reduced => {
            let grid = TimeGrid::to(config.t_max_lambda, config.dt_lambda)?;
            let generator = ReducedGenerator::new(*params);
            let rho0 = initial_density(&state);
            let traj = integrate(
                |rho, t| generator.rhs(rho, t),
                &rho0,
                &grid,
                config.sample_every,
            )?;
            let drift = traj.max_trace_drift();
            let defect = traj.max_hermiticity_defect();
            curve_from_trajectory(&traj, drift, defect, config.renormalize_trace)
        }
        Engine::Oracle => {
            let grid = TimeGrid::to(config.t_max_lambda, config.dt_lambda)?;
            let cfg = OracleConfig::new(*params, config.n_max, grid)?
                .with_sample_every(config.sample_every);
            let run = oracle_evolve(&state, &cfg)?;
            let drift = run.max_joint_trace_drift();
            let defect = run.max_joint_hermiticity_defect();
            curve_from_trajectory(&run.reduced, drift, defect, config.renormalize_trace)
        }
    }
}

/// Execute a run or sweep: one integration per α² grid point, concurrence
/// at every sample (X-form fast path with a logged general-route fallback),
/// assembled into a surface.
pub fn run(config: &RunConfig) -> Result<ConcurrenceSurface> {
    config.validate()?;
    let params = config.params()?;
    let alphas = config.alpha_grid();

    let rows: Vec<Result<CurveRow>> = alphas
        .par_iter()
        .map(|&alpha_sq| {
            run_single(config, &params, alpha_sq).map_err(|e| Error::RunAborted {
                alpha_sq,
                source: Box::new(e),
            })
        })
        .collect();

    let mut curves = Vec::with_capacity(rows.len());
    for row in rows {
        curves.push(row?);
    }

    let n_alpha = curves.len();
    let n_time = curves[0].times.len();
    for curve in &curves {
        if curve.times.len() != n_time {
            return Err(Error::InvalidState(
                "grid rows produced differing sample counts".into(),
            ));
        }
    }

    let mut concurrence = Array2::zeros((n_alpha, n_time));
    let mut trace_re = Array2::zeros((n_alpha, n_time));
    let mut trace_drift = Array2::zeros((n_alpha, n_time));
    let mut min_eigenvalue = Array2::zeros((n_alpha, n_time));
    let mut diag = SurfaceDiagnostics {
        max_trace_drift: 0.0,
        max_hermiticity_defect: 0.0,
        min_eigenvalue: f64::INFINITY,
        max_raw_concurrence: 0.0,
        x_fallback_count: 0,
    };

    for (i, curve) in curves.iter().enumerate() {
        for j in 0..n_time {
            let raw = curve.concurrence_raw[j];
            concurrence[[i, j]] = raw.clamp(0.0, 1.0);
            trace_re[[i, j]] = curve.trace_re[j];
            trace_drift[[i, j]] = curve.trace_drift[j];
            min_eigenvalue[[i, j]] = curve.min_eigenvalue[j];
            diag.max_raw_concurrence = diag.max_raw_concurrence.max(raw);
            diag.min_eigenvalue = diag.min_eigenvalue.min(curve.min_eigenvalue[j]);
        }
        diag.max_trace_drift = diag.max_trace_drift.max(curve.max_integrated_trace_drift);
        diag.max_hermiticity_defect = diag
            .max_hermiticity_defect
            .max(curve.max_integrated_hermiticity_defect);
        diag.x_fallback_count += curve.x_fallbacks;
    }

    // Mandatory cutoff self-check for published oracle runs, at the middle
    // grid point.
    let cutoff_check = if config.engine == Engine::Oracle && config.t_max_lambda > 0.0 {
        let mid_alpha = alphas[alphas.len() / 2];
        let state = InitialState::from_alpha_sq(config.family, mid_alpha, config.beta_phase)?;
        let grid = TimeGrid::to(config.t_max_lambda, config.dt_lambda)?;
        let cfg =
            OracleConfig::new(params, config.n_max, grid)?.with_sample_every(config.sample_every);
        Some(oracle_converged(&state, &cfg, CUTOFF_TOL_DEFAULT)?)
    } else {
        None
    };

    Ok(ConcurrenceSurface {
        alpha_sq_values: alphas,
        time_values: curves[0].times.clone(),
        concurrence,
        trace_re,
        trace_drift,
        min_eigenvalue,
        diagnostics: diag,
        cutoff_check,
    })
}

/// Detect events on every α² row of a surface.
pub fn detect_surface_events(
    surface: &ConcurrenceSurface,
    threshold: f64,
    hold_window: f64,
) -> Vec<EventReport> {
    (0..surface.alpha_sq_values.len())
        .map(|i| {
            crate::events::detect_events(
                &surface.time_values,
                &surface.row(i),
                threshold,
                hold_window,
            )
        })
        .collect()
}

/// JSON summary document: config echo, version, per-α² events, diagnostics
/// extrema, and the cutoff check when the oracle ran.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: RunConfig,
    pub alpha_sq_values: Vec<f64>,
    pub events: Vec<EventReport>,
    pub diagnostics: SurfaceDiagnostics,
    pub cutoff_check: Option<CutoffCheck>,
}

/// Format a float with 17 significant digits, locale-independent.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `<stem>.csv` and `<stem>.json`.
///
/// The CSV has a header row and one data row per (α², t) sample with
/// columns alpha_sq, lambda_t, concurrence, trace_re, trace_drift,
/// min_eigenvalue; floats carry 17 significant digits. The JSON summary
/// echoes the full config (γ included) plus events and diagnostics.
/// Reruns with identical config produce byte-identical files.
pub fn emit(
    surface: &ConcurrenceSurface,
    reports: &[EventReport],
    config: &RunConfig,
    stem: &Path,
) -> Result<(PathBuf, PathBuf)> {
    if let Some(parent) = stem.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");

    let mut csv = BufWriter::new(File::create(&csv_path)?);
    writeln!(
        csv,
        "alpha_sq,lambda_t,concurrence,trace_re,trace_drift,min_eigenvalue"
    )?;
    for (i, &alpha_sq) in surface.alpha_sq_values.iter().enumerate() {
        for (j, &t) in surface.time_values.iter().enumerate() {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                format_float(alpha_sq),
                format_float(t * config.time_axis_scale),
                format_float(surface.concurrence[[i, j]]),
                format_float(surface.trace_re[[i, j]]),
                format_float(surface.trace_drift[[i, j]]),
                format_float(surface.min_eigenvalue[[i, j]]),
            )?;
        }
    }
    csv.flush()?;

    let summary = Summary {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        alpha_sq_values: surface.alpha_sq_values.clone(),
        events: reports.to_vec(),
        diagnostics: surface.diagnostics,
        cutoff_check: surface.cutoff_check,
    };
    let mut json = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut json, &summary)?;
    writeln!(json)?;
    json.flush()?;

    Ok((csv_path, json_path))
}
