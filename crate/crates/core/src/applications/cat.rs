//! Cat-state pumping in a truncated oscillator.

use rayon::prelude::*;

use crate::applications::lindblad::{exp_channel, lindblad_superop, LindbladSpec};
use crate::channel::{SuperOperator, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector, C64};

/// Truncated lowering operator `a|n⟩ = √n|n−1⟩` on `0..d−1`.
pub fn annihilation(d: usize) -> CMatrix {
    let mut a = linalg::zeros(d);
    for n in 1..d {
        a[(n - 1, n)] = r((n as f64).sqrt());
    }
    a
}

pub fn number(d: usize) -> CMatrix {
    linalg::diag_real(&(0..d).map(|n| n as f64).collect::<Vec<_>>())
}

/// Coherent state `|α⟩` cut off at `d` levels and renormalized.
pub fn coherent_state(alpha: C64, d: usize) -> CVector {
    let mut v = CVector::zeros(d);
    let mut amp = r(1.0);
    for n in 0..d {
        if n > 0 {
            amp *= alpha / r((n as f64).sqrt());
        }
        v[n] = amp;
    }
    let norm = v.norm();
    v / r(norm)
}

/// Normalized `Σᵢ |αᵢ⟩` in the truncated space.
pub fn cat_state(alphas: &[C64], d: usize) -> CVector {
    let v = alphas.iter().fold(CVector::zeros(d), |acc, &a| acc + coherent_state(a, d));
    let norm = v.norm();
    v / r(norm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatCodeSpec {
    pub alphas: Vec<C64>,
    pub kappa: f64,
    pub n_c: usize,
}

impl CatCodeSpec {
    pub fn new(alphas: Vec<C64>, kappa: f64, n_c: usize) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("cat code needs at least one coherent component".into()));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
        }
        if n_c == 0 {
            return Err(Error::TruncationTooSmall { n_c, required: 1 });
        }
        Ok(Self { alphas, kappa, n_c })
    }

    /// `{α, −α}`.
    pub fn two_component(alpha: f64, kappa: f64, n_c: usize) -> Result<Self> {
        Self::new(vec![r(alpha), r(-alpha)], kappa, n_c)
    }

    /// `{α, iα, −α, −iα}`.
    pub fn four_component(alpha: f64, kappa: f64, n_c: usize) -> Result<Self> {
        let a = r(alpha);
        let i = C64::new(0.0, 1.0);
        Self::new(vec![a, i * a, -a, -i * a], kappa, n_c)
    }

    pub fn dim(&self) -> usize {
        self.n_c + 1
    }

    /// Smallest cutoff satisfying `|α|² + 4|α| ≤ n_c` for every component.
    pub fn required_truncation(&self) -> usize {
        self.alphas.iter().map(|a| a.norm_sqr() + 4.0 * a.norm()).fold(0.0, f64::max).ceil() as usize
    }

    pub fn tail_contained(&self) -> bool {
        self.n_c >= self.required_truncation()
    }

    pub fn cat_state(&self) -> CVector {
        cat_state(&self.alphas, self.dim())
    }
}

/// `J = √κ Πᵢ (a − αᵢ)`.
pub fn cat_jump_operator(spec: &CatCodeSpec) -> CMatrix {
    let d = spec.dim();
    let a = annihilation(d);
    let id = linalg::identity(d);
    let prod = spec.alphas.iter().fold(id.clone(), |acc, &alpha| acc * (&a - &id * alpha));
    prod * r(spec.kappa.sqrt())
}

/// Generator with the single jump `J` and no Hamiltonian.
pub fn cat_generator(spec: &CatCodeSpec) -> SuperOperator {
    let d = spec.dim();
    let lindblad = LindbladSpec::diagonal(linalg::zeros(d), vec![cat_jump_operator(spec)])
        .expect("single jump with unit rate is a valid generator");
    lindblad_superop(&lindblad)
}

/// One row of a rank-versus-time table.
#[derive(Clone, Debug, PartialEq)]
pub struct RankRow {
    pub t: f64,
    pub rank: usize,
    /// Choi eigenvalues above threshold, descending.
    pub magnitudes: Vec<f64>,
}

/// Kraus rank and magnitudes of `exp(t·L)` for each time.
pub fn rank_vs_time(spec: &CatCodeSpec, times: &[f64]) -> Result<Vec<RankRow>> {
    let g = cat_generator(spec);
    times
        .par_iter()
        .map(|&t| {
            let ch = exp_channel(&g, t)?;
            let magnitudes: Vec<f64> =
                ch.to_choi().spectrum().into_iter().filter(|&l| l > DEFAULT_THRESHOLD).collect();
            Ok(RankRow { t, rank: magnitudes.len(), magnitudes })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::lindblad::steady_channel;
    use crate::linalg::frobenius;

    #[test]
    fn operators() {
        let a = annihilation(4);
        let n = number(4);
        assert!(frobenius(&(a.adjoint() * &a - n)) < 1e-14);
        let spec = CatCodeSpec::new(vec![r(0.0)], 2.0, 3).unwrap();
        assert!(frobenius(&(cat_jump_operator(&spec) - a * r(2f64.sqrt()))) < 1e-14);
    }

    #[test]
    fn jump_annihilates_components() {
        let spec = CatCodeSpec::two_component(1.1, 1.0, 20).unwrap();
        let j = cat_jump_operator(&spec);
        for alpha in [1.1, -1.1] {
            assert!((&j * coherent_state(r(alpha), spec.dim())).norm() < 1e-6);
        }
        let spec = CatCodeSpec::four_component(2.5, 1.0, 40).unwrap();
        let j = cat_jump_operator(&spec);
        for &alpha in &spec.alphas {
            assert!((&j * coherent_state(alpha, spec.dim())).norm() < 1e-6);
        }
    }

    #[test]
    fn truncation_heuristic() {
        assert!(CatCodeSpec::two_component(1.1, 1.0, 10).unwrap().tail_contained());
        let four = CatCodeSpec::four_component(2.5, 1.0, 16).unwrap();
        assert_eq!(four.required_truncation(), 17);
        assert!(!four.tail_contained());
        assert!(CatCodeSpec::two_component(1.1, 0.0, 10).is_err());
    }

    #[test]
    fn rank_starts_at_one() {
        let spec = CatCodeSpec::two_component(1.1, 1.0, 6).unwrap();
        let rows = rank_vs_time(&spec, &[0.0, 0.5]).unwrap();
        assert_eq!(rows[0].rank, 1);
        assert!(rows[1].rank > 1);
    }

    #[test]
    fn generator_has_two_dimensional_null_space() {
        let spec = CatCodeSpec::two_component(1.1, 1.0, 10).unwrap();
        let g = cat_generator(&spec);
        let s = linalg::svd(g.matrix()).s;
        let scale = s[0];
        let small = s.iter().filter(|&&v| v < 1e-12 * scale).count();
        assert_eq!(small, 2, "{:?}", &s[s.len() - 4..]);
    }

    #[test]
    fn even_input_relaxes_to_even_cat() {
        let spec = CatCodeSpec::two_component(1.1, 1.0, 20).unwrap();
        let steady = steady_channel(&cat_generator(&spec)).unwrap();
        let cat = spec.cat_state();
        for input in [0usize, 2] {
            let mut rho = linalg::zeros(spec.dim());
            rho[(input, input)] = r(1.0);
            let out = steady.channel.apply(&rho);
            assert!(linalg::fidelity_to_pure(&out, &cat) > 0.999);
        }
    }

    #[test]
    fn tight_truncation_does_not_relax() {
        // The cutoff leaves an even/odd coherence decaying at ~6e-6, slower
        // than rounding drift lets the doubling resolve.
        let spec = CatCodeSpec::two_component(1.1, 1.0, 10).unwrap();
        let err = steady_channel(&cat_generator(&spec)).unwrap_err();
        assert!(matches!(err, Error::NotRelaxing { best_delta, .. } if best_delta > 1e-8));
    }
}
