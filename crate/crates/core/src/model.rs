//! Physical generators: atomic operators, the time-local reduced master
//! equation with memory-kernel coefficients, the full qubit-field coupling
//! Hamiltonian on a truncated Fock space, and the initial entangled states.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::basis::{EE, EG, GE, GG, TWO_QUBIT_DIM};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::matrix::{dagger, identity, tensor, CMat};

/// Switch-over below which the rotating-channel coefficient uses its series
/// expansion; keeps relative error at the 1e-16 level on both branches.
const ROTATING_SERIES_THRESHOLD: f64 = 1e-8;

/// Physical constants of the model, all in units of the coupling constant
/// (so `lambda` is usually 1).
///
/// `lambda = 0` is accepted so decoupled-limit checks can run; the other
/// frequencies must be positive and `gamma` non-negative.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    /// Atomic transition frequency ω₀.
    pub omega0: f64,
    /// Cavity mode frequency ω.
    pub omega: f64,
    /// Atom-field coupling constant λ.
    pub lambda: f64,
    /// Atomic decay constant γ.
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, omega: f64, lambda: f64, gamma: f64) -> Result<Self> {
        crate::error::check_positive("omega0", omega0)?;
        crate::error::check_positive("omega", omega)?;
        crate::error::check_non_negative("lambda", lambda)?;
        crate::error::check_non_negative("gamma", gamma)?;
        Ok(Self {
            omega0,
            omega,
            lambda,
            gamma,
        })
    }

    /// Resonant parameter set ω = ω₀, in units of λ = 1.
    pub fn resonant(omega_over_lambda: f64, gamma_over_lambda: f64) -> Result<Self> {
        Self::new(omega_over_lambda, omega_over_lambda, 1.0, gamma_over_lambda)
    }

    /// Sum frequency Δ = ω + ω₀.
    pub fn sum_frequency(&self) -> f64 {
        self.omega + self.omega0
    }

    /// Detuning δ = ω₀ − ω.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }
}

/// Family of the initial two-qubit entangled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFamily {
    /// Single-excitation family α|eg⟩ + β|ge⟩.
    Phi,
    /// Even-parity family α|gg⟩ + β|ee⟩.
    Psi,
}

/// Initial pure state of the two qubits. `alpha` is real in [0, 1] and
/// `β = √(1 − α²)·e^{i·beta_phase}`, so normalization holds by construction.
///
/// In the fixed basis the Phi family occupies ρ22, ρ33, ρ23 and the Psi
/// family ρ11, ρ44, ρ14: α multiplies |eg⟩ (Phi) resp. |gg⟩ (Psi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    family: StateFamily,
    alpha: f64,
    beta_phase: f64,
}

impl InitialState {
    pub fn new(family: StateFamily, alpha: f64, beta_phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        if !beta_phase.is_finite() {
            return Err(Error::InvalidParameter("beta_phase must be finite".into()));
        }
        let tau = std::f64::consts::TAU;
        Ok(Self {
            family,
            alpha,
            beta_phase: beta_phase.rem_euclid(tau),
        })
    }

    /// Construct from α² (the sweep coordinate).
    pub fn from_alpha_sq(family: StateFamily, alpha_sq: f64, beta_phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha_sq) {
            return Err(Error::InvalidParameter(format!(
                "alpha_sq must lie in [0, 1], got {alpha_sq}"
            )));
        }
        Self::new(family, alpha_sq.sqrt(), beta_phase)
    }

    pub fn family(&self) -> StateFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta_phase(&self) -> f64 {
        self.beta_phase
    }

    /// β = √(1 − α²)·e^{iθ}.
    pub fn beta(&self) -> C64 {
        let modulus = (1.0 - self.alpha * self.alpha).max(0.0).sqrt();
        C64::from_polar(modulus, self.beta_phase)
    }
}

/// Memory-kernel coefficient oscillating at the sum frequency Δ = ω + ω₀:
/// `(1 − e^{−iΔt}) / (iΔ)`, evaluated in the cancellation-free product form
/// `e^{−iΔt/2} · 2·sin(Δt/2)/Δ` (identical algebraically, accurate to
/// rounding even where the numerator nearly vanishes).
pub fn counter_rotating_coeff(t: f64, sum_frequency: f64) -> C64 {
    let half = 0.5 * sum_frequency * t;
    C64::from_polar(2.0 * half.sin() / sum_frequency, -half)
}

/// Memory-kernel coefficient oscillating at the detuning δ = ω₀ − ω:
/// `(e^{iδt} − 1) / (iδ) = e^{iδt/2} · 2·sin(δt/2)/δ`, continued through
/// δ → 0 by its series `t + iδt²/2` when |δt| is below the switch-over
/// threshold.
pub fn rotating_coeff(t: f64, detuning: f64) -> C64 {
    if (detuning * t).abs() < ROTATING_SERIES_THRESHOLD {
        return C64::new(t, 0.5 * detuning * t * t);
    }
    let half = 0.5 * detuning * t;
    C64::from_polar(2.0 * half.sin() / detuning, half)
}

/// The pair of memory-kernel coefficients at a given time. Both vanish
/// exactly at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCoefficients {
    /// Counter-rotating channel weight (oscillates at Δ).
    pub counter_rotating: C64,
    /// Rotating channel weight (oscillates at δ; secular at resonance).
    pub rotating: C64,
}

impl KernelCoefficients {
    pub fn at(t: f64, params: &ModelParams) -> Self {
        Self {
            counter_rotating: counter_rotating_coeff(t, params.sum_frequency()),
            rotating: rotating_coeff(t, params.detuning()),
        }
    }
}

/// The fixed two-qubit operator set in the standard basis.
#[derive(Debug, Clone)]
pub struct AtomicOperators {
    pub sigma_z1: CMat,
    pub sigma_z2: CMat,
    pub sigma_p1: CMat,
    pub sigma_m1: CMat,
    pub sigma_p2: CMat,
    pub sigma_m2: CMat,
    /// Collective operator σ⁺₁ + σ⁻₁ + σ⁺₂ + σ⁻₂.
    pub collective: CMat,
}

/// Single-qubit σz in the {|e⟩, |g⟩} ordering.
fn pauli_z() -> CMat {
    ndarray::array![
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]
    ]
}

/// Single-qubit raising operator |e⟩⟨g|.
fn raising() -> CMat {
    ndarray::array![
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
    ]
}

/// Build all two-qubit atomic operators once.
pub fn atomic_operators() -> AtomicOperators {
    let id = identity(2);
    let sz = pauli_z();
    let sp = raising();
    let sm = dagger(&sp);

    let sigma_z1 = tensor(&sz, &id);
    let sigma_z2 = tensor(&id, &sz);
    let sigma_p1 = tensor(&sp, &id);
    let sigma_m1 = tensor(&sm, &id);
    let sigma_p2 = tensor(&id, &sp);
    let sigma_m2 = tensor(&id, &sm);
    let collective = &(&sigma_p1 + &sigma_m1) + &(&sigma_p2 + &sigma_m2);

    AtomicOperators {
        sigma_z1,
        sigma_z2,
        sigma_p1,
        sigma_m1,
        sigma_p2,
        sigma_m2,
        collective,
    }
}

/// Precomputed operators for the reduced master-equation right-hand side.
///
/// The generator is assembled term by term in the printed operator order:
/// the free commutator, four λ²-weighted kernel terms with the collective
/// operator on the left of the first two and on the right of the last two,
/// and the spontaneous-emission dissipator at rate γ/2 per qubit. The
/// λ²-part is not trace-preserving away from t = 0; the trace is monitored
/// downstream, never silently repaired here.
#[derive(Debug, Clone)]
pub struct ReducedGenerator {
    params: ModelParams,
    free: CMat,
    raise_sum: CMat,
    lower_sum: CMat,
    collective: CMat,
    jumps: [CMat; 2],
    number_sum: CMat,
}

impl ReducedGenerator {
    pub fn new(params: ModelParams) -> Self {
        let ops = atomic_operators();
        let free = &ops.sigma_z1 + &ops.sigma_z2;
        let raise_sum = &ops.sigma_p1 + &ops.sigma_p2;
        let lower_sum = &ops.sigma_m1 + &ops.sigma_m2;
        let number_sum = ops.sigma_p1.dot(&ops.sigma_m1) + ops.sigma_p2.dot(&ops.sigma_m2);
        Self {
            params,
            free,
            raise_sum,
            lower_sum,
            collective: ops.collective.clone(),
            jumps: [ops.sigma_m1.clone(), ops.sigma_m2.clone()],
            number_sum,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// dρ/dt at time `t`. `rho` must be 4×4.
    pub fn rhs(&self, rho: &CMat, t: f64) -> CMat {
        let minus_i = C64::new(0.0, -1.0);
        let half_omega0 = C64::new(0.5 * self.params.omega0, 0.0);

        let free_comm = self.free.dot(rho) - rho.dot(&self.free);
        let mut out = free_comm.mapv(|z| minus_i * half_omega0 * z);

        let lambda_sq = self.params.lambda * self.params.lambda;
        if lambda_sq > 0.0 {
            let k = KernelCoefficients::at(t, &self.params);
            let comm_raise = self.raise_sum.dot(rho) - rho.dot(&self.raise_sum);
            let comm_lower = self.lower_sum.dot(rho) - rho.dot(&self.lower_sum);

            let left_raise = self.collective.dot(&comm_raise);
            let left_lower = self.collective.dot(&comm_lower);
            let right_lower = comm_lower.dot(&self.collective);
            let right_raise = comm_raise.dot(&self.collective);

            let w_cr = C64::new(lambda_sq, 0.0) * k.counter_rotating;
            let w_rot = C64::new(lambda_sq, 0.0) * k.rotating;
            out = out - left_raise.mapv(|z| w_cr * z) - left_lower.mapv(|z| w_rot * z)
                + right_lower.mapv(|z| w_cr.conj() * z)
                + right_raise.mapv(|z| w_rot.conj() * z);
        }

        if self.params.gamma > 0.0 {
            let half_gamma = C64::new(0.5 * self.params.gamma, 0.0);
            let mut dissipator: CMat = Array2::zeros((TWO_QUBIT_DIM, TWO_QUBIT_DIM));
            for jump in &self.jumps {
                let sandwich = jump.dot(rho).dot(&dagger(jump));
                dissipator = dissipator + sandwich.mapv(|z| 2.0 * z);
            }
            dissipator = dissipator - self.number_sum.dot(rho) - rho.dot(&self.number_sum);
            out = out + dissipator.mapv(|z| half_gamma * z);
        }

        out
    }
}

/// One-shot evaluation of the reduced master-equation right-hand side.
/// Errors unless `rho` is 4×4. For repeated evaluation build a
/// [`ReducedGenerator`] once.
pub fn reduced_rhs(rho: &CMat, t: f64, params: &ModelParams) -> Result<CMat> {
    if rho.dim() != (TWO_QUBIT_DIM, TWO_QUBIT_DIM) {
        return Err(Error::DimensionMismatch(format!(
            "reduced master equation needs a 4x4 state, got {:?}",
            rho.dim()
        )));
    }
    Ok(ReducedGenerator::new(*params).rhs(rho, t))
}

/// Truncated annihilation operator on the (n_max+1)-dimensional Fock space.
pub fn annihilation(n_max: usize) -> CMat {
    let dim = n_max + 1;
    let mut a: CMat = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub(crate) fn hamiltonian_with_coupling(
    params: &ModelParams,
    n_max: usize,
    counter_rotating: bool,
) -> CMat {
    let ops = atomic_operators();
    let field_dim = n_max + 1;
    let id_field = identity(field_dim);
    let id_atoms = identity(TWO_QUBIT_DIM);

    let a = annihilation(n_max);
    let a_dag = dagger(&a);
    let number = a_dag.dot(&a);

    let atoms = (&ops.sigma_z1 + &ops.sigma_z2).mapv(|z| z * 0.5 * params.omega0);
    let mut h = tensor(&atoms, &id_field);
    h = h + tensor(&id_atoms, &number.mapv(|z| z * params.omega));

    let coupling = if counter_rotating {
        tensor(&ops.collective, &(&a + &a_dag))
    } else {
        let raise_sum = &ops.sigma_p1 + &ops.sigma_p2;
        let lower_sum = &ops.sigma_m1 + &ops.sigma_m2;
        tensor(&raise_sum, &a) + tensor(&lower_sum, &a_dag)
    };
    h + coupling.mapv(|z| z * params.lambda)
}

/// Full Hamiltonian on qubit₁ ⊗ qubit₂ ⊗ field with the photon number
/// truncated at `n_max`, including both rotating and counter-rotating
/// coupling products. Panics if `n_max == 0` (the cutoff must admit at
/// least one photon).
pub fn full_hamiltonian(params: &ModelParams, n_max: usize) -> CMat {
    assert!(n_max >= 1, "photon cutoff must be at least 1");
    hamiltonian_with_coupling(params, n_max, true)
}

/// Pure-state density matrix of an [`InitialState`] in the fixed basis.
pub fn initial_density(state: &InitialState) -> DensityMatrix {
    let alpha = C64::new(state.alpha(), 0.0);
    let beta = state.beta();
    let zero = C64::new(0.0, 0.0);
    let amplitudes = match state.family() {
        StateFamily::Phi => {
            let mut amps = [zero; TWO_QUBIT_DIM];
            amps[EG] = alpha;
            amps[GE] = beta;
            amps
        }
        StateFamily::Psi => {
            let mut amps = [zero; TWO_QUBIT_DIM];
            amps[GG] = alpha;
            amps[EE] = beta;
            amps
        }
    };
    DensityMatrix::from_pure(&amplitudes)
        .expect("normalized pure state satisfies construction invariants")
}
