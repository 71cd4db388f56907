//! Channel representations and conversions between them.
//!
//! Vectorization is row-stacking throughout: `vec(ρ)[i·d + j] = ρ[i][j]`.
//! Under this convention the superoperator of a Kraus set is
//! `T = Σ K ⊗ K*`, and the Choi matrix is the index reshuffle
//! `M[(i,m),(j,n)] = T[(i,j),(m,n)]`. Column-stacking inputs must be
//! transposed into this convention before use.

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, C64};

/// Eigenvalue / magnitude cutoff used for rank decisions.
pub const DEFAULT_THRESHOLD: f64 = 1e-10;

/// How negative a Choi eigenvalue may be before the map is rejected as
/// not completely positive.
pub const CP_TOLERANCE: f64 = 1e-8;

/// Row-stacked vectorization of a square matrix.
pub fn vec_row(m: &CMatrix) -> CMatrix {
    let (rows, cols) = m.shape();
    CMatrix::from_fn(rows * cols, 1, |k, _| m[(k / cols, k % cols)])
}

/// Inverse of [`vec_row`] for a `d×d` matrix.
pub fn unvec_row(v: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[(i * d + j, 0)])
}

/// A Kraus representation `ρ ↦ Σ KᵢρKᵢ†` on a `d`-dimensional system.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    dim: usize,
    ops: Vec<CMatrix>,
}

impl KrausSet {
    /// Builds a Kraus set, checking that every operator is `d×d` for a
    /// common `d`. Completeness is not enforced here; see [`validate_cptp`].
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or(Error::EmptyKrausSet)?;
        let dim = first.nrows();
        for op in &ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: if op.nrows() != dim { op.nrows() } else { op.ncols() },
                    context: "Kraus operator shape",
                });
            }
            if !linalg::is_finite(op) {
                return Err(Error::InvalidArgument("non-finite Kraus entry".into()));
            }
        }
        Ok(Self { dim, ops })
    }

    /// Pads `out×in` operators with zeros to a square `d = max(out, in)`.
    ///
    /// When the input space is the smaller one, a projector onto the padded
    /// input directions is appended so the padded map stays trace preserving.
    /// Returns the set and the pad size `d − min(out, in)`.
    pub fn from_rectangular(ops: Vec<CMatrix>) -> Result<(Self, usize)> {
        let first = ops.first().ok_or(Error::EmptyKrausSet)?;
        let (out, inp) = first.shape();
        if let Some(bad) = ops.iter().find(|k| k.shape() != (out, inp)) {
            return Err(Error::DimensionMismatch {
                expected: out,
                found: bad.nrows(),
                context: "rectangular Kraus operator shape",
            });
        }
        let d = out.max(inp);
        let mut padded: Vec<CMatrix> = ops
            .iter()
            .map(|k| CMatrix::from_fn(d, d, |i, j| if i < out && j < inp { k[(i, j)] } else { C64::default() }))
            .collect();
        if inp < d {
            padded.push(CMatrix::from_fn(d, d, |i, j| if i == j && i >= inp { r(1.0) } else { C64::default() }));
        }
        Ok((Self::new(padded)?, d - out.min(inp)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn into_ops(self) -> Vec<CMatrix> {
        self.ops
    }

    /// `Σ Kᵢ†Kᵢ`.
    pub fn completeness(&self) -> CMatrix {
        self.ops.iter().fold(linalg::zeros(self.dim), |acc, k| acc + k.adjoint() * k)
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.ops.iter().fold(linalg::zeros(self.dim), |acc, k| acc + k * rho * k.adjoint())
    }

    /// `Kᵢ·(Σ K†K)^{-1/2}`: removes the small completeness defect left by
    /// spectrum truncation or rounding. Fails if `Σ K†K` is singular.
    pub fn renormalized(&self) -> Result<Self> {
        let e = linalg::hermitian_eigen(&self.completeness());
        let smallest = e.values.last().copied().unwrap_or(0.0);
        if !(smallest > 0.0) {
            return Err(Error::NotCptp(format!("completeness matrix is singular (eigenvalue {smallest:e})")));
        }
        let inv_sqrt = &e.vectors
            * linalg::diag_real(&e.values.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>())
            * e.vectors.adjoint();
        Self::new(self.ops.iter().map(|k| k * &inv_sqrt).collect())
    }
}

/// Superoperator matrix `T` acting on row-stacked density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: CMatrix,
}

fn square_root_dim(n: usize, rows: usize, cols: usize) -> Result<usize> {
    if rows != cols {
        return Err(Error::DimensionMismatch { expected: rows, found: cols, context: "d²×d² matrix" });
    }
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(Error::InvalidArgument(format!("{n} is not a positive perfect square")));
    }
    Ok(d)
}

impl SuperOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = square_root_dim(matrix.nrows(), matrix.nrows(), matrix.ncols())?;
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec_row(&(&self.matrix * vec_row(rho)), self.dim)
    }

    /// Channel composition `self ∘ first` (apply `first`, then `self`).
    pub fn compose(&self, first: &SuperOperator) -> Result<SuperOperator> {
        if self.dim != first.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: first.dim, context: "compose" });
        }
        Ok(SuperOperator { dim: self.dim, matrix: &self.matrix * &first.matrix })
    }
}

/// Choi matrix `M = d·(𝒯⊗𝕀)(|Ω⟩⟨Ω|)`, stored symmetrized.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMatrix,
    threshold: f64,
}

impl ChoiMatrix {
    /// Wraps a `d²×d²` matrix; the stored copy is `(M + M†)/2`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = square_root_dim(matrix.nrows(), matrix.nrows(), matrix.ncols())?;
        Ok(Self { dim, matrix: linalg::hermitian_part(&matrix), threshold: DEFAULT_THRESHOLD })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::hermitian_eigen(&self.matrix).values
    }

    /// `Σᵢ M[(i,m),(i,n)]`, which equals `(Σ K†K)ᵀ` for a Kraus-representable map.
    pub fn output_partial_trace(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d, d, |m, n| (0..d).map(|i| self.matrix[(i * d + m, i * d + n)]).sum())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Kraus(KrausSet),
    SuperOp(SuperOperator),
    Choi(ChoiMatrix),
}

impl Representation {
    pub fn name(&self) -> &'static str {
        match self {
            Representation::Kraus(_) => "kraus",
            Representation::SuperOp(_) => "superop",
            Representation::Choi(_) => "choi",
        }
    }
}

/// A channel in any of the three representations, plus metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub label: String,
    /// Number of zero-padded dimensions added to make the channel square.
    pub pad: usize,
    pub repr: Representation,
}

impl ChannelSpec {
    pub fn new(label: impl Into<String>, repr: Representation) -> Self {
        Self { label: label.into(), pad: 0, repr }
    }

    pub fn from_kraus(label: impl Into<String>, k: KrausSet) -> Self {
        Self::new(label, Representation::Kraus(k))
    }

    pub fn from_superop(label: impl Into<String>, s: SuperOperator) -> Self {
        Self::new(label, Representation::SuperOp(s))
    }

    pub fn from_choi(label: impl Into<String>, c: ChoiMatrix) -> Self {
        Self::new(label, Representation::Choi(c))
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Representation::Kraus(k) => k.dim(),
            Representation::SuperOp(s) => s.dim(),
            Representation::Choi(c) => c.dim(),
        }
    }

    pub fn to_superop(&self) -> SuperOperator {
        match &self.repr {
            Representation::Kraus(k) => kraus_to_superop(k),
            Representation::SuperOp(s) => s.clone(),
            Representation::Choi(c) => choi_to_superop(c),
        }
    }

    pub fn to_choi(&self) -> ChoiMatrix {
        match &self.repr {
            Representation::Choi(c) => c.clone(),
            _ => superop_to_choi(&self.to_superop()),
        }
    }

    /// Minimal Kraus representation at `threshold`.
    pub fn to_kraus(&self, threshold: f64) -> Result<KrausSet> {
        match &self.repr {
            Representation::Kraus(k) => Ok(minimal_kraus(k, threshold)),
            _ => choi_to_kraus(&self.to_choi(), threshold),
        }
    }

    /// Same channel, re-expressed in the representation named `to`.
    pub fn convert(&self, to: &str, threshold: f64) -> Result<ChannelSpec> {
        let repr = match to {
            "kraus" => Representation::Kraus(self.to_kraus(threshold)?),
            "superop" => Representation::SuperOp(self.to_superop()),
            "choi" => Representation::Choi(self.to_choi().with_threshold(threshold)),
            other => return Err(Error::InvalidArgument(format!("unknown representation '{other}'"))),
        };
        Ok(ChannelSpec { label: self.label.clone(), pad: self.pad, repr })
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        match &self.repr {
            Representation::Kraus(k) => k.apply(rho),
            _ => self.to_superop().apply(rho),
        }
    }
}

/// `T = Σ Kᵢ ⊗ Kᵢ*`.
pub fn kraus_to_superop(k: &KrausSet) -> SuperOperator {
    let d = k.dim();
    let matrix = k
        .ops()
        .iter()
        .fold(CMatrix::zeros(d * d, d * d), |acc, op| acc + linalg::kron(op, &op.conjugate()));
    SuperOperator { dim: d, matrix }
}

/// Reshuffle `M[(i,m),(j,n)] = T[(i,j),(m,n)]`; symmetrized on the way out.
pub fn superop_to_choi(s: &SuperOperator) -> ChoiMatrix {
    let d = s.dim();
    let t = s.matrix();
    let m = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, m) = (row / d, row % d);
        let (j, n) = (col / d, col % d);
        t[(i * d + j, m * d + n)]
    });
    ChoiMatrix::new(m).expect("reshuffle preserves the d²×d² shape")
}

/// Inverse reshuffle of [`superop_to_choi`].
pub fn choi_to_superop(c: &ChoiMatrix) -> SuperOperator {
    let d = c.dim();
    let m = c.matrix();
    let t = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (mm, n) = (col / d, col % d);
        m[(i * d + mm, j * d + n)]
    });
    SuperOperator { dim: d, matrix: t }
}

/// Minimal Kraus set from the Choi spectrum: one operator per eigenvalue
/// above `threshold`, reshaped row-major from `√λ·v`, ordered by
/// descending eigenvalue.
pub fn choi_to_kraus(c: &ChoiMatrix, threshold: f64) -> Result<KrausSet> {
    let d = c.dim();
    let eig = linalg::hermitian_eigen(c.matrix());
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -CP_TOLERANCE {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
    }
    let ops: Vec<CMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > threshold)
        .map(|(k, &lambda)| {
            let v = eig.vectors.column(k);
            let s = r(lambda.sqrt());
            CMatrix::from_fn(d, d, |i, m| v[i * d + m] * s)
        })
        .collect();
    if ops.is_empty() {
        return Err(Error::NotCptp("Choi matrix has no eigenvalue above threshold".into()));
    }
    KrausSet::new(ops)
}

/// Overlap-matrix reduction: diagonalize `Cᵢⱼ = Tr(KᵢKⱼ†) = V†DV`, mix the
/// operators with `V`, and drop those whose weight falls below `threshold`.
pub fn minimal_kraus(k: &KrausSet, threshold: f64) -> KrausSet {
    let n = k.len();
    let ops = k.ops();
    let overlap = CMatrix::from_fn(n, n, |i, j| (&ops[i] * ops[j].adjoint()).trace());
    let eig = linalg::hermitian_eigen(&overlap);
    // C = U Λ U†, so V = U† and K̃ᵢ = Σⱼ conj(U[j][i]) Kⱼ.
    let mut reduced: Vec<CMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > threshold)
        .map(|(i, _)| {
            (0..n).fold(linalg::zeros(k.dim()), |acc, j| acc + &ops[j] * eig.vectors[(j, i)].conj())
        })
        .collect();
    if reduced.is_empty() {
        reduced.push(linalg::zeros(k.dim()));
    }
    KrausSet::new(reduced).expect("mixing preserves operator shapes")
}

/// `λᵢ = Tr(Kᵢ†Kᵢ)` per operator.
pub fn kraus_magnitudes(k: &KrausSet) -> Vec<f64> {
    k.ops().iter().map(|op| op.iter().map(|z| z.norm_sqr()).sum()).collect()
}

pub fn channel_determinant(s: &SuperOperator) -> C64 {
    s.matrix().clone().determinant()
}

/// Number of Choi eigenvalues above `threshold`.
pub fn kraus_rank(c: &ChannelSpec, threshold: f64) -> Result<usize> {
    let spectrum = c.to_choi().spectrum();
    let min = spectrum.last().copied().unwrap_or(0.0);
    if min < -CP_TOLERANCE {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
    }
    Ok(spectrum.iter().filter(|&&l| l > threshold).count())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// ‖Σ K†K − 𝕀‖_F (from the Choi partial trace when no Kraus set is given).
    pub completeness_residual: f64,
    pub choi_min_eigenvalue: f64,
    /// |Tr M − d|.
    pub choi_trace_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.completeness_residual > self.tolerance {
            out.push(format!("completeness residual {:e}", self.completeness_residual));
        }
        if self.choi_min_eigenvalue < -self.tolerance {
            out.push(format!("Choi min eigenvalue {:e}", self.choi_min_eigenvalue));
        }
        if self.choi_trace_deviation > self.tolerance {
            out.push(format!("Choi trace deviation {:e}", self.choi_trace_deviation));
        }
        out
    }
}

pub fn validate_cptp(c: &ChannelSpec, tol: f64) -> ValidationReport {
    let d = c.dim();
    let choi = c.to_choi();
    let completeness_residual = match &c.repr {
        Representation::Kraus(k) => linalg::frobenius(&(k.completeness() - linalg::identity(d))),
        _ => linalg::frobenius(&(choi.output_partial_trace() - linalg::identity(d))),
    };
    let choi_min_eigenvalue = choi.spectrum().last().copied().unwrap_or(0.0);
    let choi_trace_deviation = (choi.matrix().trace() - r(d as f64)).norm();
    let passed = completeness_residual <= tol && choi_min_eigenvalue >= -tol && choi_trace_deviation <= tol;
    ValidationReport { completeness_residual, choi_min_eigenvalue, choi_trace_deviation, tolerance: tol, passed }
}
