//! Time-independent Lindblad generators and the channels they generate.

use crate::channel::{validate_cptp, ChannelSpec, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, c, r, CMatrix};

/// Tolerance on Hermiticity of `H` and positivity of `h`.
pub const GENERATOR_TOLERANCE: f64 = 1e-10;

/// CPTP tolerance applied to exponentiated generators.
pub const EXP_CPTP_TOLERANCE: f64 = 1e-8;

/// Convergence target for [`steady_channel`].
pub const STEADY_TOLERANCE: f64 = 1e-8;

/// Upper bound on the number of doublings in [`steady_channel`].
pub const MAX_DOUBLINGS: usize = 128;

/// Change between doublings beyond which the iteration is abandoned.
pub const DIVERGENCE: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct LindbladSpec {
    dim: usize,
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    coeffs: CMatrix,
}

impl LindbladSpec {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>, coeffs: CMatrix) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim {
            return Err(Error::InvalidGenerator("Hamiltonian is not square".into()));
        }
        if jumps.iter().any(|l| l.shape() != (dim, dim)) {
            return Err(Error::InvalidGenerator("jump operator shape differs from Hamiltonian".into()));
        }
        if coeffs.shape() != (jumps.len(), jumps.len()) {
            return Err(Error::InvalidGenerator(format!(
                "coefficient matrix is {}x{}, expected {}x{}",
                coeffs.nrows(),
                coeffs.ncols(),
                jumps.len(),
                jumps.len()
            )));
        }
        let h_skew = linalg::frobenius(&(&hamiltonian - hamiltonian.adjoint()));
        if h_skew > GENERATOR_TOLERANCE {
            return Err(Error::InvalidGenerator(format!("Hamiltonian not Hermitian (residual {h_skew:e})")));
        }
        let c_skew = linalg::frobenius(&(&coeffs - coeffs.adjoint()));
        if c_skew > GENERATOR_TOLERANCE {
            return Err(Error::InvalidGenerator(format!("coefficients not Hermitian (residual {c_skew:e})")));
        }
        if !jumps.is_empty() {
            let min = linalg::min_eigenvalue(&coeffs);
            if min < -GENERATOR_TOLERANCE {
                return Err(Error::InvalidGenerator(format!("coefficient matrix has eigenvalue {min:e}")));
            }
        }
        Ok(Self { dim, hamiltonian, jumps, coeffs })
    }

    /// Independent jumps with unit rates.
    pub fn diagonal(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let n = jumps.len();
        Self::new(hamiltonian, jumps, linalg::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Row-stacked generator matrix:
/// `−i(H⊗𝕀 − 𝕀⊗Hᵀ) + Σ h_nm [L_n⊗L_m* − ½(L_m†L_n)⊗𝕀 − ½𝕀⊗(L_m†L_n)ᵀ]`.
pub fn lindblad_superop(s: &LindbladSpec) -> SuperOperator {
    let id = linalg::identity(s.dim);
    let mut g = (linalg::kron(&s.hamiltonian, &id) - linalg::kron(&id, &s.hamiltonian.transpose())) * c(0.0, -1.0);
    for (n, ln) in s.jumps.iter().enumerate() {
        for (m, lm) in s.jumps.iter().enumerate() {
            let h = s.coeffs[(n, m)];
            if h == c(0.0, 0.0) {
                continue;
            }
            let prod = lm.adjoint() * ln;
            let term = linalg::kron(ln, &lm.conjugate())
                - linalg::kron(&prod, &id) * r(0.5)
                - linalg::kron(&id, &prod.transpose()) * r(0.5);
            g += term * h;
        }
    }
    SuperOperator::new(g).expect("generator is d²×d² by construction")
}

/// `exp(g·t)` as a validated channel in superoperator form.
pub fn exp_channel(g: &SuperOperator, t: f64) -> Result<ChannelSpec> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("evolution time must be finite and non-negative, got {t}")));
    }
    let s = SuperOperator::new(linalg::expm(&(g.matrix() * r(t))))?;
    checked(ChannelSpec::from_superop(format!("exp(L*{t})"), s))
}

fn checked(ch: ChannelSpec) -> Result<ChannelSpec> {
    let report = validate_cptp(&ch, EXP_CPTP_TOLERANCE);
    if report.passed {
        Ok(ch)
    } else {
        Err(Error::NotCptp(report.failures().join("; ")))
    }
}

/// The `t → ∞` channel together with how it was reached.
#[derive(Clone, Debug)]
pub struct SteadyChannel {
    pub channel: ChannelSpec,
    /// Time of the returned channel (`2t*`).
    pub time: f64,
    pub doublings: usize,
    /// `‖exp(2t*g) − exp(t*g)‖_F` per doubling.
    pub deltas: Vec<f64>,
}

/// Doubles `t` from `1/‖g‖` until `‖exp(2tg) − exp(tg)‖_F < 10⁻⁸`; each
/// doubled exponential is the square of the previous one.
pub fn steady_channel(g: &SuperOperator) -> Result<SteadyChannel> {
    let scale = linalg::frobenius(g.matrix());
    let mut t = if scale > 0.0 { 1.0 / scale } else { 1.0 };
    let mut current = linalg::expm(&(g.matrix() * r(t)));
    let mut deltas = Vec::new();
    for doublings in 1..=MAX_DOUBLINGS {
        let next = &current * &current;
        let delta = linalg::frobenius(&(&next - &current));
        deltas.push(delta);
        t *= 2.0;
        current = next;
        if delta < STEADY_TOLERANCE {
            let channel = checked(ChannelSpec::from_superop("steady", SuperOperator::new(current)?))?;
            return Ok(SteadyChannel { channel, time: t, doublings, deltas });
        }
        // Rounding in a trace-preserving generator shows up as slow growth of
        // the conserved modes; once it dominates, further doubling only diverges.
        if !(delta < DIVERGENCE) {
            break;
        }
    }
    let best_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    Err(Error::NotRelaxing { iterations: deltas.len(), last_delta: *deltas.last().expect("at least one doubling"), best_delta })
}
