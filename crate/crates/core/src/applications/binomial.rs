//! Recovery circuit for the binomial code protecting against up to two
//! photon losses and number dephasing.
//!
//! Round 1 measures photon number mod 3, round 2 either projects onto the
//! code space or separates `n ≡ 1` from `n ≡ 2`, and round 3 applies the
//! correction picked by the two syndrome bits.

use crate::applications::cat::{annihilation, number};
use crate::channel::KrausSet;
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector};
use crate::tree::{AdaptiveCircuit, BinaryLabel, TreeNode};

/// Smallest cutoff that holds both codewords.
pub const MIN_TRUNCATION: usize = 9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinomialCodeSpec {
    n_c: usize,
}

/// Correctable errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinomialError {
    Identity,
    Loss,
    DoubleLoss,
    Dephasing,
}

impl BinomialError {
    pub const ALL: [BinomialError; 4] =
        [BinomialError::Identity, BinomialError::Dephasing, BinomialError::Loss, BinomialError::DoubleLoss];

    pub fn name(self) -> &'static str {
        match self {
            BinomialError::Identity => "I",
            BinomialError::Loss => "a",
            BinomialError::DoubleLoss => "a^2",
            BinomialError::Dephasing => "n",
        }
    }

    /// Syndrome bits `(b₁, b₂)` that route to this error's correction.
    pub fn syndrome(self) -> BinaryLabel {
        let bits: &[u8] = match self {
            BinomialError::Identity => &[0, 0],
            BinomialError::Dephasing => &[0, 1],
            BinomialError::DoubleLoss => &[1, 0],
            BinomialError::Loss => &[1, 1],
        };
        BinaryLabel::from_bits(bits)
    }

    pub fn from_syndrome(label: &BinaryLabel) -> Option<Self> {
        Self::ALL.into_iter().find(|e| &e.syndrome() == label)
    }
}

impl BinomialCodeSpec {
    pub fn new(n_c: usize) -> Result<Self> {
        if n_c < MIN_TRUNCATION {
            return Err(Error::TruncationTooSmall { n_c, required: MIN_TRUNCATION });
        }
        Ok(Self { n_c })
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn dim(&self) -> usize {
        self.n_c + 1
    }

    fn fock(&self, amps: &[(usize, f64)]) -> CVector {
        let mut v = CVector::zeros(self.dim());
        for &(n, a) in amps {
            v[n] = r(a);
        }
        v
    }

    /// `(|0⟩ + √3|6⟩)/2`.
    pub fn up(&self) -> CVector {
        self.fock(&[(0, 0.5), (6, 3f64.sqrt() / 2.0)])
    }

    /// `(√3|3⟩ + |9⟩)/2`.
    pub fn down(&self) -> CVector {
        self.fock(&[(3, 3f64.sqrt() / 2.0), (9, 0.5)])
    }

    pub fn logical(&self, c_up: linalg::C64, c_down: linalg::C64) -> CVector {
        let v = self.up() * c_up + self.down() * c_down;
        let norm = v.norm();
        v / r(norm)
    }

    /// Projector onto `n ≡ residue (mod 3)`.
    pub fn projector_mod3(&self, residue: usize) -> CMatrix {
        linalg::diag_real(&(0..self.dim()).map(|n| if n % 3 == residue { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    }

    /// Projector onto the code space.
    pub fn code_projector(&self) -> CMatrix {
        linalg::projector(&self.up()) + linalg::projector(&self.down())
    }

    pub fn error_operator(&self, e: BinomialError) -> CMatrix {
        let d = self.dim();
        let a = annihilation(d);
        match e {
            BinomialError::Identity => linalg::identity(d),
            BinomialError::Loss => a,
            BinomialError::DoubleLoss => &a * &a,
            BinomialError::Dephasing => number(d),
        }
    }

    /// Product of the round-1 and round-2 blocks along the error's syndrome.
    pub fn syndrome_filter(&self, e: BinomialError) -> CMatrix {
        let id = linalg::identity(self.dim());
        let p3 = self.projector_mod3(0);
        let pw = self.code_projector();
        let p1 = self.projector_mod3(1);
        match e {
            BinomialError::Identity => &pw * &p3,
            BinomialError::Dephasing => (&id - &pw) * &p3,
            BinomialError::DoubleLoss => &p1 * (&id - &p3),
            BinomialError::Loss => (&id - &p1) * (&id - &p3),
        }
    }

    /// Correction unitary `U_Ô`: maps each normalized syndrome state
    /// `Π·Ô|W_σ⟩` back to `|W_σ⟩`, and the complement of the syndrome
    /// space onto the complement of the code space.
    ///
    /// `Π` is the syndrome filter; for `n̂` it removes the code-space
    /// component of `n̂|W_σ⟩`, which the identity branch already handles.
    pub fn correction_unitary(&self, e: BinomialError) -> Result<CMatrix> {
        let d = self.dim();
        if e == BinomialError::Identity {
            return Ok(linalg::identity(d));
        }
        let op = self.syndrome_filter(e) * self.error_operator(e);
        let s_up = &op * self.up();
        let s_down = &op * self.down();
        let (n_up, n_down) = (s_up.norm(), s_down.norm());
        let overlap = s_up.dotc(&s_down).norm() / (n_up * n_down);
        let imbalance = (n_up - n_down).abs() / n_up.max(n_down);
        if overlap > 1e-12 || imbalance > 1e-12 {
            return Err(Error::Internal { what: "Knill-Laflamme conditions", residual: overlap.max(imbalance) });
        }
        let mut syn = CMatrix::zeros(d, 2);
        syn.set_column(0, &(s_up / r(n_up)));
        syn.set_column(1, &(s_down / r(n_down)));
        let mut code = CMatrix::zeros(d, 2);
        code.set_column(0, &self.up());
        code.set_column(1, &self.down());
        let u = linalg::complete_columns(&code, d) * linalg::complete_columns(&syn, d).adjoint();
        Ok(u)
    }
}

/// The depth-3 recovery circuit, assembled directly from projectors and
/// correction unitaries.
pub fn binomial_recovery_circuit(spec: &BinomialCodeSpec) -> Result<AdaptiveCircuit> {
    let d = spec.dim();
    let id = linalg::identity(d);
    let zero = linalg::zeros(d);
    let p3 = spec.projector_mod3(0);
    let pw = spec.code_projector();
    let p1 = spec.projector_mod3(1);
    let mut nodes = vec![
        TreeNode::new(BinaryLabel::root(), p3.clone(), &id - &p3),
        TreeNode::new(BinaryLabel::from_bits(&[0]), pw.clone(), &id - &pw),
        TreeNode::new(BinaryLabel::from_bits(&[1]), p1.clone(), &id - &p1),
    ];
    for e in BinomialError::ALL {
        nodes.push(TreeNode::new(e.syndrome(), spec.correction_unitary(e)?, zero.clone()));
    }
    AdaptiveCircuit::from_nodes(d, 3, nodes)
}

/// Leaf operators of the recovery circuit in index order.
pub fn binomial_recovery_kraus(spec: &BinomialCodeSpec) -> Result<KrausSet> {
    Ok(binomial_recovery_circuit(spec)?.kraus_set())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, frobenius, unitarity_residual};
    use crate::sim::{apply_channel_exact, run_instrument, DensityMatrix};

    #[test]
    fn codewords() {
        let spec = BinomialCodeSpec::new(12).unwrap();
        assert!((spec.up().norm() - 1.0).abs() < 1e-15);
        assert!((spec.down().norm() - 1.0).abs() < 1e-15);
        assert_eq!(spec.up().dotc(&spec.down()), r(0.0));
        assert!(matches!(BinomialCodeSpec::new(8), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn corrections_are_unitary() {
        let spec = BinomialCodeSpec::new(12).unwrap();
        for e in BinomialError::ALL {
            assert!(unitarity_residual(&spec.correction_unitary(e).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn circuit_is_isometric_and_complete() {
        let spec = BinomialCodeSpec::new(9).unwrap();
        let circuit = binomial_recovery_circuit(&spec).unwrap();
        assert!(circuit.nodes().values().all(|n| n.isometry_residual() < 1e-13));
        let k = circuit.kraus_set();
        assert!(frobenius(&(k.completeness() - linalg::identity(10))) < 1e-13);
    }

    #[test]
    fn loss_is_corrected() {
        let spec = BinomialCodeSpec::new(12).unwrap();
        let circuit = binomial_recovery_circuit(&spec).unwrap();
        let psi = spec.logical(c(0.6, 0.1), c(-0.2, 0.7));
        for e in [BinomialError::Identity, BinomialError::Loss, BinomialError::DoubleLoss] {
            let damaged = DensityMatrix::pure(&(spec.error_operator(e) * &psi));
            let out = apply_channel_exact(&circuit, &damaged).unwrap();
            assert!(out.fidelity_to_pure(&psi) > 1.0 - 1e-12, "{e:?}");
            let inst = run_instrument(&circuit, &damaged, 2).unwrap();
            assert!((inst.outcomes[&e.syndrome()].probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_is_corrected() {
        let spec = BinomialCodeSpec::new(12).unwrap();
        let circuit = binomial_recovery_circuit(&spec).unwrap();
        let psi = spec.logical(c(0.3, 0.0), c(0.0, 0.9));
        let damaged = DensityMatrix::pure(&(spec.error_operator(BinomialError::Dephasing) * &psi));
        let out = apply_channel_exact(&circuit, &damaged).unwrap();
        assert!(out.fidelity_to_pure(&psi) > 1.0 - 1e-12);
        let off_code = DensityMatrix::pure(&(spec.syndrome_filter(BinomialError::Dephasing) * number(13) * &psi));
        let inst = run_instrument(&circuit, &off_code, 2).unwrap();
        assert!((inst.outcomes[&BinomialError::Dephasing.syndrome()].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn syndrome_lookup() {
        for e in BinomialError::ALL {
            assert_eq!(BinomialError::from_syndrome(&e.syndrome()), Some(e));
        }
    }
}
