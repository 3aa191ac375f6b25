//! Brute-force reference dynamics: the full atoms ⊗ field system evolved
//! under the truncated-Fock coupling Hamiltonian with local spontaneous
//! emission, traced down to the two-qubit state.
//!
//! Unlike the reduced generator, the joint evolution is a proper Lindblad
//! flow: trace and Hermiticity conservation here validate the integrator,
//! and the reduced output is ground truth for the time-local equation.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::basis::TWO_QUBIT_DIM;
use crate::concurrence::concurrence_x;
use crate::density::{diagnostics_of, DensityMatrix};
use crate::error::{Error, Result};
use crate::integrator::{integrate, TimeGrid, Trajectory};
use crate::matrix::{dagger, identity, partial_trace, tensor, CMat};
use crate::model::{
    annihilation, atomic_operators, hamiltonian_with_coupling, initial_density, InitialState,
    ModelParams,
};

/// Which coupling products enter the joint Hamiltonian.
///
/// `RotatingWave` exists for validation only (it powers the
/// excitation-conservation checks); production runs use `BeyondRwa`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    BeyondRwa,
    RotatingWave,
}

/// Configuration of a joint-space reference run.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub params: ModelParams,
    /// Photon-number cutoff (at least 1).
    pub n_max: usize,
    pub grid: TimeGrid,
    /// Snapshot stride in integrator steps.
    pub sample_every: usize,
    pub coupling: Coupling,
}

impl OracleConfig {
    pub fn new(params: ModelParams, n_max: usize, grid: TimeGrid) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidParameter(
                "photon cutoff must be at least 1".into(),
            ));
        }
        Ok(Self {
            params,
            n_max,
            grid,
            sample_every: 10,
            coupling: Coupling::BeyondRwa,
        })
    }

    pub fn with_sample_every(mut self, sample_every: usize) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// Reduced trajectory plus the joint-space run it came from.
#[derive(Debug, Clone)]
pub struct OracleRun {
    /// 4×4 reduced states with diagnostics recomputed on the reduced state.
    pub reduced: Trajectory,
    /// The joint atoms ⊗ field trajectory (conservation evidence and
    /// joint-space observables).
    pub joint: Trajectory,
}

impl OracleRun {
    /// Largest |Tr ρ_joint − 1| over the run.
    pub fn max_joint_trace_drift(&self) -> f64 {
        self.joint.max_trace_drift()
    }

    /// Largest joint Hermiticity defect over the run.
    pub fn max_joint_hermiticity_defect(&self) -> f64 {
        self.joint.max_hermiticity_defect()
    }
}

/// Total excitation operator (σz₁ + σz₂)/2 + 1 + a†a on the joint space.
pub fn excitation_number(n_max: usize) -> CMat {
    let ops = atomic_operators();
    let atoms = (&ops.sigma_z1 + &ops.sigma_z2).mapv(|z| z * 0.5) + identity(TWO_QUBIT_DIM);
    let a = annihilation(n_max);
    let number = dagger(&a).dot(&a);
    tensor(&atoms, &identity(n_max + 1)) + tensor(&identity(TWO_QUBIT_DIM), &number)
}

/// Precomputed joint-space Lindblad generator.
///
/// The Hamiltonian is stored as its (real) diagonal plus the sparse list of
/// off-diagonal couplings, the jump operators as atom-block maps, and the
/// excitation-number operator as a diagonal — the joint dimension is a few
/// tens but dense matmuls per RK4 stage would dominate the runtime.
struct JointGenerator {
    dim: usize,
    field_dim: usize,
    h_diag: Vec<f64>,
    /// (row, col, value) of every off-diagonal Hamiltonian entry.
    h_offdiag: Vec<(usize, usize, f64)>,
    /// σ⁻ᵢ as (target atom block, source atom block) pairs.
    jump_block_maps: [Vec<(usize, usize)>; 2],
    /// Number of excited atoms per joint basis index.
    excitations: Vec<f64>,
    gamma: f64,
}

impl JointGenerator {
    fn new(cfg: &OracleConfig) -> Self {
        use crate::basis::{EE, EG, GE, GG};
        let dim = crate::basis::joint_dim(cfg.n_max);
        let field_dim = cfg.n_max + 1;
        let h = hamiltonian_with_coupling(
            &cfg.params,
            cfg.n_max,
            cfg.coupling == Coupling::BeyondRwa,
        );

        let mut h_diag = vec![0.0; dim];
        let mut h_offdiag = Vec::new();
        for r in 0..dim {
            h_diag[r] = h[[r, r]].re;
            for c in 0..dim {
                if r != c && h[[r, c]] != C64::new(0.0, 0.0) {
                    debug_assert_eq!(h[[r, c]].im, 0.0);
                    h_offdiag.push((r, c, h[[r, c]].re));
                }
            }
        }

        let excitations = (0..dim)
            .map(|i| match i / field_dim {
                b if b == EE => 2.0,
                b if b == EG || b == GE => 1.0,
                _ => 0.0,
            })
            .collect();

        Self {
            dim,
            field_dim,
            h_diag,
            h_offdiag,
            jump_block_maps: [vec![(GE, EE), (GG, EG)], vec![(EG, EE), (GG, GE)]],
            excitations,
            gamma: cfg.params.gamma,
        }
    }

    fn rhs(&self, rho: &CMat, _t: f64) -> CMat {
        let n = self.dim;
        let f = self.field_dim;
        let mut out: CMat = Array2::zeros((n, n));

        // −i[H, ρ], diagonal part: −i(d_r − d_c)·ρ[r, c].
        for r in 0..n {
            for c in 0..n {
                out[[r, c]] = C64::new(0.0, self.h_diag[c] - self.h_diag[r]) * rho[[r, c]];
            }
        }
        // Off-diagonal couplings: −i·v·(|r⟩⟨c|ρ − ρ|r⟩⟨c|).
        for &(r, c, v) in &self.h_offdiag {
            let miv = C64::new(0.0, -v);
            let piv = C64::new(0.0, v);
            for j in 0..n {
                out[[r, j]] += miv * rho[[c, j]];
            }
            for i in 0..n {
                out[[i, c]] += piv * rho[[i, r]];
            }
        }

        if self.gamma > 0.0 {
            let gain = C64::new(self.gamma, 0.0);
            for map in &self.jump_block_maps {
                for &(t1, s1) in map {
                    for &(t2, s2) in map {
                        for tau in 0..f {
                            for sig in 0..f {
                                out[[t1 * f + tau, t2 * f + sig]] +=
                                    gain * rho[[s1 * f + tau, s2 * f + sig]];
                            }
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let w = 0.5 * self.gamma * (self.excitations[i] + self.excitations[j]);
                    out[[i, j]] -= C64::new(w, 0.0) * rho[[i, j]];
                }
            }
        }
        out
    }
}

/// Evolve `state` ⊗ |0⟩⟨0| under the joint Lindblad flow and trace out the
/// field at every snapshot.
pub fn oracle_evolve(state: &InitialState, cfg: &OracleConfig) -> Result<OracleRun> {
    if cfg.n_max < 1 {
        return Err(Error::InvalidParameter(
            "photon cutoff must be at least 1".into(),
        ));
    }
    let atoms = initial_density(state);
    let field_dim = cfg.n_max + 1;
    let mut vacuum: CMat = Array2::zeros((field_dim, field_dim));
    vacuum[[0, 0]] = C64::new(1.0, 0.0);
    let joint0 = DensityMatrix::new(tensor(atoms.matrix(), &vacuum))?;

    let generator = JointGenerator::new(cfg);
    let joint = integrate(
        |rho, t| generator.rhs(rho, t),
        &joint0,
        &cfg.grid,
        cfg.sample_every,
    )?;

    let mut reduced_states = Vec::with_capacity(joint.len());
    let mut reduced_diagnostics = Vec::with_capacity(joint.len());
    for snapshot in &joint.states {
        let reduced = partial_trace(snapshot.matrix(), &[TWO_QUBIT_DIM, field_dim], &[0])?;
        reduced_diagnostics.push(diagnostics_of(&reduced));
        reduced_states.push(DensityMatrix::evolved(reduced)?);
    }

    Ok(OracleRun {
        reduced: Trajectory {
            times: joint.times.clone(),
            states: reduced_states,
            diagnostics: reduced_diagnostics,
        },
        joint,
    })
}

/// Outcome of a photon-cutoff self-convergence check.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct CutoffCheck {
    pub n_max: usize,
    pub refined_n_max: usize,
    /// Max |C(n_max) − C(n_max + 2)| over the shared time grid.
    pub max_concurrence_shift: f64,
    pub tolerance: f64,
    pub converged: bool,
}

/// Rerun at `n_max` and `n_max + 2` and compare the concurrence curves.
/// Non-convergence is reported, not an error.
pub fn oracle_converged(
    state: &InitialState,
    cfg: &OracleConfig,
    tol: f64,
) -> Result<CutoffCheck> {
    crate::error::check_positive("cutoff tolerance", tol)?;
    let refined_n_max = cfg.n_max + 2;
    let base = oracle_evolve(state, cfg)?;
    let refined = oracle_evolve(state, &cfg.with_n_max(refined_n_max))?;

    let mut max_shift = 0.0_f64;
    for (a, b) in base.reduced.states.iter().zip(&refined.reduced.states) {
        let ca = concurrence_x(a)?.value;
        let cb = concurrence_x(b)?.value;
        max_shift = max_shift.max((ca - cb).abs());
    }

    Ok(CutoffCheck {
        n_max: cfg.n_max,
        refined_n_max,
        max_concurrence_shift: max_shift,
        tolerance: tol,
        converged: max_shift <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EE;
    use crate::model::StateFamily;
    use approx::assert_abs_diff_eq;

    fn phi_bell() -> InitialState {
        InitialState::new(StateFamily::Phi, std::f64::consts::FRAC_1_SQRT_2, 0.0).unwrap()
    }

    #[test]
    fn sparse_rhs_matches_dense_reference() {
        use ndarray::Array2;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        // Independent dense assembly of the same Lindblad generator.
        let dense_rhs = |cfg: &OracleConfig, rho: &CMat| -> CMat {
            let ops = atomic_operators();
            let id_field = identity(cfg.n_max + 1);
            let h = hamiltonian_with_coupling(
                &cfg.params,
                cfg.n_max,
                cfg.coupling == Coupling::BeyondRwa,
            );
            let minus_i = C64::new(0.0, -1.0);
            let out = (h.dot(rho) - rho.dot(&h)).mapv(|z| minus_i * z);
            let jumps = [
                tensor(&ops.sigma_m1, &id_field),
                tensor(&ops.sigma_m2, &id_field),
            ];
            let number = tensor(
                &(ops.sigma_p1.dot(&ops.sigma_m1) + ops.sigma_p2.dot(&ops.sigma_m2)),
                &id_field,
            );
            let half_gamma = C64::new(0.5 * cfg.params.gamma, 0.0);
            let mut dissipator: CMat = Array2::zeros(rho.dim());
            for jump in &jumps {
                dissipator = dissipator + jump.dot(rho).dot(&dagger(jump)).mapv(|z| 2.0 * z);
            }
            dissipator = dissipator - number.dot(rho) - rho.dot(&number);
            out + dissipator.mapv(|z| half_gamma * z)
        };

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = ModelParams::new(9.0, 7.0, 0.8, 0.23).unwrap();
        for coupling in [Coupling::BeyondRwa, Coupling::RotatingWave] {
            for n_max in [1usize, 3] {
                let grid = TimeGrid::to(1.0, 1e-2).unwrap();
                let cfg = OracleConfig::new(params, n_max, grid)
                    .unwrap()
                    .with_coupling(coupling);
                let gen = JointGenerator::new(&cfg);
                let dim = crate::basis::joint_dim(n_max);
                for _ in 0..5 {
                    let g: CMat = Array2::from_shape_fn((dim, dim), |_| {
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    });
                    let rho = crate::matrix::hermitize(&g);
                    let sparse = gen.rhs(&rho, 0.0);
                    let dense = dense_rhs(&cfg, &rho);
                    let diff = (&sparse - &dense)
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max);
                    assert!(diff < 1e-12, "sparse vs dense rhs differ by {diff}");
                }
            }
        }
    }

    #[test]
    fn decoupled_lossless_state_is_frozen() {
        let params = ModelParams::new(5.0, 5.0, 0.0, 0.0).unwrap();
        let grid = TimeGrid::to(2.0, 1e-3).unwrap();
        let cfg = OracleConfig::new(params, 1, grid).unwrap();
        let state = InitialState::new(StateFamily::Phi, 0.6, 0.0).unwrap();
        let run = oracle_evolve(&state, &cfg).unwrap();
        for snapshot in &run.reduced.states {
            let c = concurrence_x(snapshot).unwrap().value;
            assert_abs_diff_eq!(c, 0.96, epsilon = 1e-10);
        }
    }

    #[test]
    fn decoupled_decay_matches_exponential() {
        let gamma = 0.1;
        let params = ModelParams::new(5.0, 5.0, 0.0, gamma).unwrap();
        let grid = TimeGrid::to(5.0, 1e-3).unwrap();
        let cfg = OracleConfig::new(params, 1, grid).unwrap();
        // |ee⟩ start.
        let state = InitialState::new(StateFamily::Psi, 0.0, 0.0).unwrap();
        let run = oracle_evolve(&state, &cfg).unwrap();
        for (t, snapshot) in run.reduced.times.iter().zip(&run.reduced.states) {
            let expected = (-2.0 * gamma * t).exp();
            let got = snapshot.matrix()[[EE, EE]].re;
            assert!(
                (got - expected).abs() <= 1e-8,
                "population {got} vs {expected} at t = {t}"
            );
        }
    }

    #[test]
    fn lossless_joint_run_conserves_trace() {
        let params = ModelParams::resonant(10.0, 0.0).unwrap();
        let grid = TimeGrid::to(2.0, 1e-3).unwrap();
        let cfg = OracleConfig::new(params, 4, grid).unwrap();
        let run = oracle_evolve(&phi_bell(), &cfg).unwrap();
        assert!(run.max_joint_trace_drift() < 1e-8);
        assert!(run.max_joint_hermiticity_defect() < 1e-10);
        // Reduced states stay positive.
        assert!(run.reduced.min_eigenvalue() > -1e-6);
    }

    #[test]
    fn cutoff_check_trivial_in_decoupled_limit() {
        let params = ModelParams::new(5.0, 5.0, 0.0, 0.1).unwrap();
        let grid = TimeGrid::to(1.0, 1e-2).unwrap();
        let cfg = OracleConfig::new(params, 1, grid).unwrap();
        let check = oracle_converged(&phi_bell(), &cfg, 1e-12).unwrap();
        assert_eq!(check.n_max, 1);
        assert_eq!(check.refined_n_max, 3);
        assert_eq!(check.max_concurrence_shift, 0.0);
        assert!(check.converged);
    }

    #[test]
    fn cutoff_check_rejects_bad_tolerance() {
        let params = ModelParams::resonant(10.0, 0.1).unwrap();
        let grid = TimeGrid::to(1.0, 1e-2).unwrap();
        let cfg = OracleConfig::new(params, 2, grid).unwrap();
        assert!(oracle_converged(&phi_bell(), &cfg, 0.0).is_err());
    }

    #[test]
    fn config_rejects_zero_cutoff() {
        let params = ModelParams::resonant(10.0, 0.1).unwrap();
        let grid = TimeGrid::to(1.0, 1e-2).unwrap();
        assert!(OracleConfig::new(params, 0, grid).is_err());
    }
}
