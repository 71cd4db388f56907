//! Channels that prepare a fixed state from any input.

use crate::channel::KrausSet;
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix};
use crate::sim::DensityMatrix;

/// Eigenvalues of the target at or below this are dropped.
pub const STATE_RANK_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationTarget {
    sigma: DensityMatrix,
}

impl StabilizationTarget {
    pub fn new(sigma: DensityMatrix) -> Result<Self> {
        let trace = sigma.trace();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("target trace is {trace}, expected 1")));
        }
        let min = linalg::min_eigenvalue(sigma.matrix());
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!("target has negative eigenvalue {min:e}")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }
}

/// `K_i^μ = √λ_μ |ψ_μ⟩⟨i|` for every basis index `i` and every eigenpair
/// `(λ_μ, |ψ_μ⟩)` of the target.
pub fn init_channel(target: &StabilizationTarget) -> KrausSet {
    let d = target.sigma.dim();
    let eig = linalg::hermitian_eigen(target.sigma.matrix());
    let mut ops = Vec::new();
    for (mu, &lambda) in eig.values.iter().enumerate() {
        if lambda <= STATE_RANK_THRESHOLD {
            continue;
        }
        let psi = eig.vectors.column(mu) * r(lambda.sqrt());
        for i in 0..d {
            let mut k = CMatrix::zeros(d, d);
            k.set_column(i, &psi);
            ops.push(k);
        }
    }
    KrausSet::new(ops).expect("unit-trace target has a positive eigenvalue")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius;

    #[test]
    fn ground_state_reset() {
        let target = StabilizationTarget::new(DensityMatrix::basis(2, 0)).unwrap();
        let k = init_channel(&target);
        assert_eq!(k.len(), 2);
        let mut e00 = linalg::zeros(2);
        e00[(0, 0)] = r(1.0);
        let mut e01 = linalg::zeros(2);
        e01[(0, 1)] = r(1.0);
        assert!(frobenius(&(&k.ops()[0] - e00)) < 1e-15);
        assert!(frobenius(&(&k.ops()[1] - e01)) < 1e-15);
    }

    #[test]
    fn maximally_mixed_target() {
        let sigma = DensityMatrix::maximally_mixed(3);
        let k = init_channel(&StabilizationTarget::new(sigma.clone()).unwrap());
        assert_eq!(k.len(), 9);
        let out = k.apply(DensityMatrix::basis(3, 1).matrix());
        assert!(frobenius(&(out - sigma.matrix())) < 1e-15);
    }

    #[test]
    fn rejects_invalid_targets() {
        let bad = DensityMatrix::new(linalg::diag_real(&[1.0, 1.0])).unwrap();
        assert!(StabilizationTarget::new(bad).is_err());
        let neg = DensityMatrix::new(linalg::diag_real(&[1.5, -0.5])).unwrap();
        assert!(StabilizationTarget::new(neg).is_err());
    }
}
