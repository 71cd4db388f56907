//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here is deterministic: eigen- and singular-vector bases come
//! back in a fixed order with a fixed global phase, so that downstream
//! circuits and golden files are bit-stable across runs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative spacing below which two sorted eigenvalues count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(n: usize) -> CMatrix {
    CMatrix::zeros(n, n)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { C64::default() })
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(m + m†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * r(0.5)
}

/// ‖U†U − 𝕀‖_F.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    frobenius(&(u.adjoint() * u - identity(u.ncols())))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Rotates `v` so its largest-magnitude entry is real and positive.
/// Earliest index wins among entries of equal magnitude.
pub fn fix_phase(v: &mut CVector) -> C64 {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mag * (1.0 + 1e-12) + 1e-300 {
            best = i;
            best_mag = m;
        }
    }
    if best_mag <= 0.0 {
        return r(1.0);
    }
    let phase = v[best] / best_mag;
    let rot = phase.conj();
    v.iter_mut().for_each(|z| *z *= rot);
    v[best] = r(v[best].re);
    rot
}

fn lexicographic_magnitudes(a: &CVector, b: &CVector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = y.norm().total_cmp(&x.norm());
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Sorts `(value, vector, payload)` triples by descending value; runs of
/// values that agree within the tie tolerance are reordered by descending
/// entry magnitudes of the vector, compared lexicographically.
fn canonical_order<T>(mut pairs: Vec<(f64, CVector, T)>) -> Vec<(f64, CVector, T)> {
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let scale = pairs.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[end - 1].0 - pairs[end].0).abs() <= TIE_TOLERANCE * scale {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by(|a, b| lexicographic_magnitudes(&a.1, &b.1));
        }
        start = end;
    }
    pairs
}

/// Eigendecomposition of a Hermitian matrix: `m = Σ λᵢ vᵢvᵢ†`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, matching `values`.
    pub vectors: CMatrix,
}

fn to_faer(m: &CMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im))
}

/// Symmetrizes `m`, diagonalizes it, and returns the eigenpairs in
/// canonical order with canonical phases.
pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return HermitianEigen { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    let eig = to_faer(&hermitian_part(m))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("hermitian eigensolver did not converge");
    let (fu, fs) = (eig.U(), eig.S());
    let pairs = (0..n)
        .map(|k| {
            let mut v = CVector::from_fn(n, |i, _| c(fu[(i, k)].re, fu[(i, k)].im));
            fix_phase(&mut v);
            (fs[k].re, v, ())
        })
        .collect();
    let pairs = canonical_order(pairs);
    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, (val, vec, ())) in pairs.into_iter().enumerate() {
        vectors.set_column(k, &vec);
        values.push(val);
    }
    HermitianEigen { values, vectors }
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).values.last().copied().unwrap_or(0.0)
}

/// Thin SVD `m = U·diag(s)·V†` with `s` descending.
///
/// For an `r×c` input with `r ≥ c`, `U` is `r×c` with orthonormal columns
/// and `V` is a full `c×c` unitary. Both come from the backend unchanged up
/// to column order and a common phase per singular triple, so the
/// factorization keeps the backend's backward stability.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Svd {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "svd expects a square or tall matrix");
    if cols == 0 {
        return Svd { u: CMatrix::zeros(rows, 0), s: vec![], v: CMatrix::zeros(0, 0) };
    }
    if m.iter().all(|z| *z == C64::default()) {
        let u = CMatrix::identity(rows, cols);
        return Svd { u, s: vec![0.0; cols], v: identity(cols) };
    }
    let dec = to_faer(m).thin_svd().expect("svd did not converge");
    let (fu, fs, fv) = (dec.U(), dec.S(), dec.V());
    let triples = (0..cols)
        .map(|k| {
            let mut v = CVector::from_fn(cols, |i, _| c(fv[(i, k)].re, fv[(i, k)].im));
            let rot = fix_phase(&mut v);
            let u = CVector::from_fn(rows, |i, _| c(fu[(i, k)].re, fu[(i, k)].im) * rot);
            (fs[k].re.max(0.0), v, u)
        })
        .collect();
    let triples = canonical_order(triples);
    let mut u = CMatrix::zeros(rows, cols);
    let mut v = CMatrix::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, (val, vv, uu)) in triples.into_iter().enumerate() {
        v.set_column(k, &vv);
        u.set_column(k, &uu);
        s.push(val);
    }
    Svd { u, s, v }
}

/// Extends the orthonormal columns of `cols` (n×k) to an n×n unitary.
///
/// The given columns are re-orthonormalized in order (modified Gram-Schmidt,
/// applied twice). Missing columns are drawn from the standard basis: at each
/// step the candidate with the largest residual after projection is taken,
/// lowest index first on ties, and its phase is canonicalized.
pub fn complete_columns(cols: &CMatrix, n: usize) -> CMatrix {
    extend_columns(cols, n, n)
}

/// Like [`complete_columns`], but stops once `k` orthonormal columns exist.
pub fn extend_columns(cols: &CMatrix, n: usize, k: usize) -> CMatrix {
    assert_eq!(cols.nrows(), n);
    assert!(k <= n);
    let mut basis: Vec<CVector> = Vec::with_capacity(k);
    for k in 0..cols.ncols().min(n) {
        let mut v: CVector = cols.column(k).into_owned();
        orthogonalize(&mut v, &basis);
        let norm = v.norm();
        if norm > 1e-300 {
            basis.push(v / r(norm));
        }
    }
    basis.truncate(k);
    while basis.len() < k {
        let mut best: Option<(f64, CVector)> = None;
        for e in 0..n {
            let mut v = CVector::zeros(n);
            v[e] = r(1.0);
            orthogonalize(&mut v, &basis);
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b * (1.0 + 1e-12)) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        let mut v = v / r(norm);
        fix_phase(&mut v);
        basis.push(v);
    }
    let mut out = CMatrix::zeros(n, k);
    for (j, v) in basis.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

fn orthogonalize(v: &mut CVector, basis: &[CVector]) {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(v);
            *v -= b * proj;
        }
    }
}

/// Matrix exponential.
pub fn expm(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// ½‖a − b‖₁ for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigen(&(a - b)).values.iter().map(|x| x.abs()).sum::<f64>()
}

/// ⟨ψ|ρ|ψ⟩ for normalized ψ.
pub fn fidelity_to_pure(rho: &CMatrix, psi: &CVector) -> f64 {
    psi.dotc(&(rho * psi)).re
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}
