//! Factoring tree rounds into the dispersive cQED gate set: a system
//! rotation `V†`, a photon-number-selective ancilla rotation by `θₙ` in each
//! Fock subspace, and a measurement-conditioned system rotation `W₀` or `W₁`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix};
use crate::tree::{AdaptiveCircuit, BinaryLabel, TreeNode};

/// Columns with singular value at or below this carry no constraint on the
/// corresponding post-rotation column.
pub const SINGULAR_CUTOFF: f64 = 1e-12;

/// Allowed violation of `s0² + s1² = 1` and of diagonal `V†B₁†B₁V`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Relative gap below which two `S₀` entries count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglerAngles {
    /// `θₙ` for Fock level `n`, each in `[0, π]`.
    pub theta: Vec<f64>,
}

impl EntanglerAngles {
    pub fn cos_half(&self) -> Vec<f64> {
        self.theta.iter().map(|t| (t / 2.0).cos()).collect()
    }

    pub fn sin_half(&self) -> Vec<f64> {
        self.theta.iter().map(|t| (t / 2.0).sin()).collect()
    }
}

/// One round in native form. `degenerate` records that `S₀` had repeated
/// entries, so `V` was fixed by convention rather than uniquely.
#[derive(Clone, Debug, PartialEq)]
pub struct CqedRound {
    pub v: CMatrix,
    pub angles: EntanglerAngles,
    pub w0: CMatrix,
    pub w1: CMatrix,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CqedCircuit {
    pub dim: usize,
    pub depth: usize,
    pub rounds: BTreeMap<BinaryLabel, CqedRound>,
}

impl CqedCircuit {
    /// Rebuilds the adaptive circuit from the native rounds.
    pub fn to_adaptive(&self) -> Result<AdaptiveCircuit> {
        let nodes = self
            .rounds
            .iter()
            .map(|(label, round)| {
                let (b0, b1) = reconstruct_blocks(round);
                TreeNode::new(label.clone(), b0, b1)
            })
            .collect();
        AdaptiveCircuit::from_nodes(self.dim, self.depth, nodes)
    }

    pub fn degenerate_rounds(&self) -> Vec<BinaryLabel> {
        self.rounds.iter().filter(|(_, r)| r.degenerate).map(|(l, _)| l.clone()).collect()
    }
}

/// `θₙ = 2·atan2(s1ₙ, s0ₙ)`.
pub fn angles_from_singulars(s0: &[f64], s1: &[f64]) -> Result<EntanglerAngles> {
    if s0.len() != s1.len() {
        return Err(Error::DimensionMismatch { expected: s0.len(), found: s1.len(), context: "singular values" });
    }
    let mut residual: f64 = 0.0;
    for (&a, &b) in s0.iter().zip(s1) {
        if a < -NORMALIZATION_TOLERANCE || b < -NORMALIZATION_TOLERANCE {
            residual = residual.max(a.min(b).abs());
        }
        residual = residual.max((a * a + b * b - 1.0).abs());
    }
    if residual > NORMALIZATION_TOLERANCE {
        return Err(Error::NotIsometry { residual });
    }
    let theta = s0.iter().zip(s1).map(|(&a, &b)| 2.0 * b.max(0.0).atan2(a.max(0.0))).collect();
    Ok(EntanglerAngles { theta })
}

/// `(W₀·diag(cos θ/2)·V†, W₁·diag(sin θ/2)·V†)`.
pub fn reconstruct_blocks(round: &CqedRound) -> (CMatrix, CMatrix) {
    let vh = round.v.adjoint();
    let b0 = &round.w0 * linalg::diag_real(&round.angles.cos_half()) * &vh;
    let b1 = &round.w1 * linalg::diag_real(&round.angles.sin_half()) * &vh;
    (b0, b1)
}

/// `[[C, −S], [S, C]]` in ancilla ⊗ system ordering, `C = diag(cos θₙ/2)`,
/// `S = diag(sin θₙ/2)`.
pub fn entangler_unitary(angles: &EntanglerAngles) -> CMatrix {
    let d = angles.theta.len();
    let cs = linalg::diag_real(&angles.cos_half());
    let sn = linalg::diag_real(&angles.sin_half());
    let mut u = CMatrix::zeros(2 * d, 2 * d);
    u.view_mut((0, 0), (d, d)).copy_from(&cs);
    u.view_mut((0, d), (d, d)).copy_from(&(-&sn));
    u.view_mut((d, 0), (d, d)).copy_from(&sn);
    u.view_mut((d, d), (d, d)).copy_from(&cs);
    u
}

/// Full system-ancilla unitary of a round:
/// `(|0⟩⟨0|⊗W₀ + |1⟩⟨1|⊗W₁)·U_ent·(𝕀⊗V†)`.
pub fn round_unitary(round: &CqedRound) -> CMatrix {
    let d = round.v.nrows();
    let mut post = CMatrix::zeros(2 * d, 2 * d);
    post.view_mut((0, 0), (d, d)).copy_from(&round.w0);
    post.view_mut((d, d), (d, d)).copy_from(&round.w1);
    let pre = linalg::kron(&linalg::identity(2), &round.v.adjoint());
    post * entangler_unitary(&round.angles) * pre
}

/// Normalizes the columns of `bv` whose norms exceed the cutoff and fills
/// the remaining slots with a deterministic orthonormal completion.
fn post_rotation(bv: &CMatrix, norms: &[f64]) -> CMatrix {
    let d = bv.nrows();
    let kept: Vec<usize> = (0..d).filter(|&j| norms[j] > SINGULAR_CUTOFF).collect();
    let mut cols = CMatrix::zeros(d, kept.len());
    for (k, &j) in kept.iter().enumerate() {
        cols.set_column(k, &(bv.column(j) / r(norms[j])));
    }
    let full = linalg::complete_columns(&cols, d);
    let mut w = CMatrix::zeros(d, d);
    let mut extra = kept.len();
    for j in 0..d {
        if let Some(k) = kept.iter().position(|&x| x == j) {
            w.set_column(j, &full.column(k));
        } else {
            w.set_column(j, &full.column(extra));
            extra += 1;
        }
    }
    w
}

/// Decomposes one isometric node `(block0, block1)`.
///
/// `V` diagonalizes `block0†block0` with eigenvalues descending, which
/// simultaneously diagonalizes `block1†block1 = 𝕀 − block0†block0`; the
/// column norms of `block·V` are then `S₀` (descending) and `S₁` (ascending).
pub fn decompose_round(node: &TreeNode) -> Result<CqedRound> {
    let (b0, b1) = (&node.block0, &node.block1);
    let d = b0.ncols();
    if b0.shape() != (d, d) || b1.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: b1.nrows(), context: "round blocks" });
    }
    let eig = linalg::hermitian_eigen(&(b0.adjoint() * b0));
    let v = eig.vectors;
    let b0v = b0 * &v;
    let b1v = b1 * &v;
    let s0: Vec<f64> = (0..d).map(|j| b0v.column(j).norm()).collect();
    let s1: Vec<f64> = (0..d).map(|j| b1v.column(j).norm()).collect();

    let gram1 = b1v.adjoint() * &b1v;
    let off_diag = linalg::frobenius(&(&gram1 - linalg::diag_real(&s1.iter().map(|x| x * x).collect::<Vec<_>>())));
    let norm = s0.iter().zip(&s1).map(|(a, b)| (a * a + b * b - 1.0).abs()).fold(0.0, f64::max);
    let residual = off_diag.max(norm);
    if residual > NORMALIZATION_TOLERANCE {
        return Err(Error::DecompositionFailure { residual });
    }
    let angles = angles_from_singulars(&s0, &s1).map_err(|e| match e {
        Error::NotIsometry { residual } => Error::DecompositionFailure { residual },
        other => other,
    })?;
    let degenerate = s0.windows(2).any(|w| (w[0] - w[1]).abs() <= DEGENERACY_GAP);
    Ok(CqedRound { w0: post_rotation(&b0v, &s0), w1: post_rotation(&b1v, &s1), v, angles, degenerate })
}

/// Decomposes every node of a circuit.
pub fn decompose_circuit(c: &AdaptiveCircuit) -> Result<CqedCircuit> {
    let rounds = c
        .nodes()
        .iter()
        .map(|(label, node)| decompose_round(node).map(|round| (label.clone(), round)))
        .collect::<Result<_>>()?;
    Ok(CqedCircuit { dim: c.dim(), depth: c.depth(), rounds })
}
