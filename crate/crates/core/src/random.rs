//! Random channels, states and unitaries for testing and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausSet;
use crate::linalg::{c, r, CMatrix, CVector};
use crate::sim::DensityMatrix;

/// `rows×cols` matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Orthonormalized Gaussian columns: a Haar-distributed `rows×cols` isometry.
pub fn random_isometry<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let qr = ginibre(rows, cols, rng).qr();
    let (q, rr) = (qr.q(), qr.r());
    // Fix the phase freedom of QR so the distribution is Haar.
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = rr[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / r(d.norm());
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    random_isometry(d, d, rng)
}

/// Channel with `n` Kraus operators cut from a random `nd×d` isometry.
/// Generic for `n ≤ d²`: the Kraus rank is exactly `n`.
pub fn random_channel<R: Rng>(d: usize, n: usize, rng: &mut R) -> KrausSet {
    assert!(d >= 1 && n >= 1);
    let v = random_isometry(n * d, d, rng);
    let ops = (0..n).map(|i| v.view((i * d, 0), (d, d)).into_owned()).collect();
    KrausSet::new(ops).expect("blocks of an isometry share shape")
}

pub fn random_pure_state<R: Rng>(d: usize, rng: &mut R) -> CVector {
    let v: CVector = ginibre(d, 1, rng).column(0).into_owned();
    let norm = v.norm();
    v / r(norm)
}

/// `G G† / Tr(G G†)` with `G` of shape `d×rank`.
pub fn random_density_matrix<R: Rng>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, rank, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    DensityMatrix::new(rho / tr).expect("square and finite")
}
