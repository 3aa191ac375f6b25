//! Density matrices and their validity diagnostics.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::matrix::{self, CMat};

/// Hermiticity defect allowed at strict construction.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Deviation of the trace from 1 allowed at strict construction.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue allowed at strict construction.
pub const MIN_EIGENVALUE_TOL: f64 = -1e-8;

/// Trace, Hermiticity defect, and minimum eigenvalue of a state.
///
/// Eigenvalues are taken from the Hermitian part `(ρ + ρ†)/2` so that
/// integrator round-off does not poison the eigensolver; the defect itself
/// is reported separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub trace: C64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

/// Square complex matrix carrying a quantum state.
///
/// [`DensityMatrix::new`] enforces the construction invariants (Hermitian,
/// unit trace, positive within tolerance); [`DensityMatrix::evolved`] only
/// requires finite entries, because time evolution under a non-trace-
/// preserving generator may drift — drift is monitored via
/// [`DensityMatrix::diagnostics`], not rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
    label: Option<String>,
}

impl DensityMatrix {
    /// Validated constructor for fresh states.
    pub fn new(mat: CMat) -> Result<Self> {
        let dm = Self::evolved(mat)?;
        let diag = dm.diagnostics();
        if diag.hermiticity_defect > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "hermiticity defect {:.3e} exceeds {HERMITICITY_TOL:.0e}",
                diag.hermiticity_defect
            )));
        }
        if (diag.trace - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {} deviates from 1 by more than {TRACE_TOL:.0e}",
                diag.trace
            )));
        }
        if diag.min_eigenvalue < MIN_EIGENVALUE_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {:.3e} below {MIN_EIGENVALUE_TOL:.0e}",
                diag.min_eigenvalue
            )));
        }
        Ok(dm)
    }

    /// Constructor for evolved snapshots: only finiteness is enforced.
    pub fn evolved(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {:?}",
                mat.dim()
            )));
        }
        if !matrix::all_finite(&mat) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        Ok(Self { mat, label: None })
    }

    /// Pure state `|ψ⟩⟨ψ|` from amplitudes (not renormalized: callers pass
    /// normalized amplitudes and the trace check catches mistakes).
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let n = amplitudes.len();
        let mut mat: CMat = ndarray::Array2::zeros((n, n));
        for (i, a) in amplitudes.iter().enumerate() {
            for (j, b) in amplitudes.iter().enumerate() {
                mat[[i, j]] = a * b.conj();
            }
        }
        Self::new(mat)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Trace, Hermiticity defect, and minimum eigenvalue.
    pub fn diagnostics(&self) -> Diagnostics {
        diagnostics_of(&self.mat)
    }
}

/// Diagnostics of a raw matrix (see [`Diagnostics`]).
pub fn diagnostics_of(mat: &CMat) -> Diagnostics {
    let trace = matrix::trace(mat);
    let hermiticity_defect = matrix::hermiticity_defect(mat);
    let eigenvalues = matrix::eigvalsh(&matrix::hermitize(mat));
    Diagnostics {
        trace,
        hermiticity_defect,
        min_eigenvalue: eigenvalues[0],
    }
}
