//! Execution of adaptive circuits on density matrices.
//!
//! Each round couples the system to a fresh ancilla in `|0⟩`, measures it,
//! and moves to the child node named by the outcome. Only the blocks
//! `⟨b|U|0⟩` are ever consulted.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix, CVector};
use crate::tree::{AdaptiveCircuit, BinaryLabel};

/// Branches less likely than this are treated as impossible.
pub const BRANCH_CUTOFF: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Wraps a square matrix, replacing it by its Hermitian part.
    pub fn new(rho: CMatrix) -> Result<Self> {
        if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), found: rho.ncols(), context: "density matrix" });
        }
        if !linalg::is_finite(&rho) {
            return Err(Error::InvalidArgument("density matrix has non-finite entries".into()));
        }
        Ok(Self { rho: linalg::hermitian_part(&rho) })
    }

    pub fn pure(psi: &CVector) -> Self {
        let norm = psi.norm();
        Self { rho: linalg::projector(&(psi / r(norm))) }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut psi = CVector::zeros(dim);
        psi[k] = r(1.0);
        Self::pure(&psi)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { rho: linalg::identity(dim) / r(dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn normalized(&self) -> Self {
        Self { rho: &self.rho / r(self.trace()) }
    }

    pub fn fidelity_to_pure(&self, psi: &CVector) -> f64 {
        linalg::fidelity_to_pure(&self.rho, &(psi / r(psi.norm())))
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_distance(&self.rho, &other.rho)
    }
}

/// Base seed for trajectory sampling. Trajectory `i` draws from its own
/// stream derived from `(seed, i)`, so ensembles do not depend on scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(splitmix64(self.0 ^ splitmix64(index)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub outcome_bits: BinaryLabel,
    /// Product of the Born probabilities of the sampled outcomes.
    pub probability: f64,
    pub final_state: DensityMatrix,
}

/// One outcome path of exact enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBranch {
    pub bits: BinaryLabel,
    pub probability: f64,
    /// Subnormalized state `K ρ K†`.
    pub unnormalized: CMatrix,
}

fn check_dims(c: &AdaptiveCircuit, rho: &DensityMatrix) -> Result<()> {
    if c.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: c.dim(), found: rho.dim(), context: "circuit vs state" });
    }
    Ok(())
}

/// All outcome paths with probability above [`BRANCH_CUTOFF`], in label order.
pub fn enumerate_paths(c: &AdaptiveCircuit, rho: &DensityMatrix) -> Result<Vec<PathBranch>> {
    check_dims(c, rho)?;
    let mut out = Vec::new();
    let mut stack = vec![(BinaryLabel::root(), rho.matrix().clone())];
    while let Some((label, state)) = stack.pop() {
        if label.len() == c.depth() {
            let probability = state.trace().re;
            out.push(PathBranch { bits: label, probability, unnormalized: state });
            continue;
        }
        let node = &c.nodes()[&label];
        for bit in [1u8, 0] {
            let b = node.block(bit);
            let next = b * &state * b.adjoint();
            if next.trace().re >= BRANCH_CUTOFF {
                stack.push((label.child(bit), next));
            }
        }
    }
    Ok(out)
}

/// `Σ_paths K_path ρ K_path†`.
pub fn apply_channel_exact(c: &AdaptiveCircuit, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let paths = enumerate_paths(c, rho)?;
    let sum = paths.into_iter().fold(linalg::zeros(c.dim()), |acc, p| acc + p.unnormalized);
    DensityMatrix::new(sum)
}

fn sample_path<R: Rng>(c: &AdaptiveCircuit, rho: &DensityMatrix, rng: &mut R) -> Result<TrajectoryRecord> {
    check_dims(c, rho)?;
    let mut state = rho.normalized().into_matrix();
    let mut label = BinaryLabel::root();
    let mut probability = 1.0;
    while label.len() < c.depth() {
        let node = &c.nodes()[&label];
        let branches: Vec<(CMatrix, f64)> = [&node.block0, &node.block1]
            .into_iter()
            .map(|b| {
                let next = b * &state * b.adjoint();
                let p = next.trace().re;
                (next, p)
            })
            .collect();
        let (p0, p1) = (branches[0].1, branches[1].1);
        let bit = match (p0 >= BRANCH_CUTOFF, p1 >= BRANCH_CUTOFF) {
            (false, false) => return Err(Error::NumericalDeadEnd { label: label.to_string() }),
            (true, false) => 0,
            (false, true) => 1,
            (true, true) => u8::from(rng.random::<f64>() * (p0 + p1) >= p0),
        };
        let (next, p) = &branches[bit as usize];
        probability *= p;
        state = next / r(*p);
        label = label.child(bit);
    }
    Ok(TrajectoryRecord { outcome_bits: label, probability, final_state: DensityMatrix::new(state)? })
}

/// Samples one trajectory from stream 0 of `seed`.
pub fn run_trajectory(c: &AdaptiveCircuit, rho: &DensityMatrix, seed: RngSeed) -> Result<TrajectoryRecord> {
    sample_path(c, rho, &mut seed.stream(0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    /// Uniform average of trajectory final states.
    pub state: DensityMatrix,
    pub histogram: BTreeMap<BinaryLabel, usize>,
    /// Trajectories in index order.
    pub records: Vec<TrajectoryRecord>,
}

/// Runs `n` trajectories; trajectory `i` uses stream `i` of `seed`.
pub fn monte_carlo(c: &AdaptiveCircuit, rho: &DensityMatrix, n: usize, seed: RngSeed) -> Result<MonteCarloResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("trajectory count must be at least 1".into()));
    }
    let records = (0..n as u64)
        .into_par_iter()
        .map(|i| sample_path(c, rho, &mut seed.stream(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut sum = linalg::zeros(c.dim());
    let mut histogram = BTreeMap::new();
    for rec in &records {
        sum += rec.final_state.matrix();
        *histogram.entry(rec.outcome_bits.clone()).or_insert(0) += 1;
    }
    Ok(MonteCarloResult { state: DensityMatrix::new(sum / r(n as f64))?, histogram, records })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentOutcome {
    pub probability: f64,
    /// Normalized post-measurement state; `None` when the outcome is impossible.
    pub state: Option<DensityMatrix>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentOutput {
    /// Every `keep_bits`-bit outcome, in label order.
    pub outcomes: BTreeMap<BinaryLabel, InstrumentOutcome>,
}

impl InstrumentOutput {
    /// `Σ_μ p_μ ρ_μ`.
    pub fn average(&self, dim: usize) -> CMatrix {
        self.outcomes.values().fold(linalg::zeros(dim), |acc, o| match &o.state {
            Some(s) => acc + s.matrix() * r(o.probability),
            None => acc,
        })
    }
}

fn check_keep_bits(c: &AdaptiveCircuit, keep_bits: usize) -> Result<()> {
    if keep_bits > c.depth() {
        return Err(Error::InvalidArgument(format!("keep_bits {keep_bits} exceeds depth {}", c.depth())));
    }
    Ok(())
}

/// Treats the first `keep_bits` outcomes as the classical record and traces
/// out the rest.
pub fn run_instrument(c: &AdaptiveCircuit, rho: &DensityMatrix, keep_bits: usize) -> Result<InstrumentOutput> {
    check_keep_bits(c, keep_bits)?;
    let mut groups: BTreeMap<BinaryLabel, CMatrix> =
        BinaryLabel::all_of_length(keep_bits).map(|l| (l, linalg::zeros(c.dim()))).collect();
    for path in enumerate_paths(c, rho)? {
        *groups.get_mut(&path.bits.prefix(keep_bits)).expect("prefix of a leaf") += path.unnormalized;
    }
    let outcomes = groups
        .into_iter()
        .map(|(label, sum)| {
            let p = sum.trace().re;
            let state = if p >= BRANCH_CUTOFF { Some(DensityMatrix::new(sum / r(p))?) } else { None };
            Ok((label, InstrumentOutcome { probability: p.max(0.0), state }))
        })
        .collect::<Result<_>>()?;
    Ok(InstrumentOutput { outcomes })
}

/// `Π_μ = Σ_j K_{μ,j}†K_{μ,j}` over leaves whose first `keep_bits` bits are `μ`.
pub fn povm_elements(c: &AdaptiveCircuit, keep_bits: usize) -> Result<BTreeMap<BinaryLabel, CMatrix>> {
    check_keep_bits(c, keep_bits)?;
    let mut out: BTreeMap<BinaryLabel, CMatrix> =
        BinaryLabel::all_of_length(keep_bits).map(|l| (l, linalg::zeros(c.dim()))).collect();
    for (leaf, k) in c.leaf_kraus() {
        *out.get_mut(&leaf.prefix(keep_bits)).expect("prefix of a leaf") += k.adjoint() * k;
    }
    Ok(out)
}

/// Outcome probabilities `Tr[Π_μ ρ]`.
pub fn run_povm(c: &AdaptiveCircuit, rho: &DensityMatrix, keep_bits: usize) -> Result<BTreeMap<BinaryLabel, f64>> {
    check_dims(c, rho)?;
    Ok(povm_elements(c, keep_bits)?
        .into_iter()
        .map(|(l, pi)| (l, (pi * rho.matrix()).trace().re))
        .collect())
}

/// Frobenius distance between Choi matrices.
pub fn channel_distance(a: &ChannelSpec, b: &ChannelSpec) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim(), context: "channel_distance" });
    }
    Ok(linalg::frobenius(&(a.to_choi().matrix() - b.to_choi().matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::KrausSet;
    use crate::linalg::identity;
    use crate::tree::synthesize;

    fn damping_circuit(g: f64) -> AdaptiveCircuit {
        let k0 = CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r((1.0 - g).sqrt())]);
        let k1 = CMatrix::from_row_slice(2, 2, &[r(0.0), r(g.sqrt()), r(0.0), r(0.0)]);
        synthesize(&KrausSet::new(vec![k0, k1]).unwrap()).unwrap()
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_element(2, 2, r(0.5))).unwrap()
    }

    #[test]
    fn identity_circuit_echoes() {
        let c = synthesize(&KrausSet::new(vec![identity(2)]).unwrap()).unwrap();
        let out = apply_channel_exact(&c, &plus()).unwrap();
        assert!(out.trace_distance(&plus()) < 1e-15);
        let rec = run_trajectory(&c, &plus(), RngSeed(3)).unwrap();
        assert_eq!(rec.outcome_bits.to_string(), "0");
        assert!(rec.final_state.trace_distance(&plus()) < 1e-15);
    }

    #[test]
    fn full_decay() {
        let c = damping_circuit(1.0);
        let out = apply_channel_exact(&c, &DensityMatrix::basis(2, 1)).unwrap();
        assert!(out.trace_distance(&DensityMatrix::basis(2, 0)) < 1e-14);
    }

    #[test]
    fn dead_end_is_reported() {
        let mut c = damping_circuit(0.5);
        let zero = linalg::zeros(2);
        c = c.with_node_blocks(&BinaryLabel::root(), zero.clone(), zero).unwrap();
        let err = run_trajectory(&c, &plus(), RngSeed(0)).unwrap_err();
        assert!(matches!(err, Error::NumericalDeadEnd { .. }));
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let c = damping_circuit(0.4);
        let a = monte_carlo(&c, &plus(), 4000, RngSeed(11)).unwrap();
        let b = monte_carlo(&c, &plus(), 4000, RngSeed(11)).unwrap();
        assert_eq!(a, b);
        let exact = apply_channel_exact(&c, &plus()).unwrap();
        assert!(a.state.trace_distance(&exact) < 0.05);
        let single = monte_carlo(&c, &plus(), 1, RngSeed(5)).unwrap();
        assert_eq!(single.state, run_trajectory(&c, &plus(), RngSeed(5)).unwrap().final_state);
    }

    #[test]
    fn substreams_differ() {
        let s = RngSeed(1);
        let x: u64 = s.stream(0).random();
        let y: u64 = s.stream(1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn instrument_marginals() {
        let c = damping_circuit(0.3);
        let rho = plus();
        let exact = apply_channel_exact(&c, &rho).unwrap();
        for keep in 0..=1 {
            let inst = run_instrument(&c, &rho, keep).unwrap();
            let total: f64 = inst.outcomes.values().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(linalg::frobenius(&(inst.average(2) - exact.matrix())) < 1e-12);
        }
        assert!(run_instrument(&c, &rho, 2).is_err());
    }

    #[test]
    fn povm_probabilities() {
        let c = damping_circuit(0.3);
        let pis = povm_elements(&c, 1).unwrap();
        let sum = pis.values().fold(linalg::zeros(2), |a, p| a + p);
        assert!(linalg::frobenius(&(sum - identity(2))) < 1e-12);
        let p = run_povm(&c, &DensityMatrix::maximally_mixed(2), 1).unwrap();
        for (label, pi) in &pis {
            assert!((p[label] - pi.trace().re / 2.0).abs() < 1e-14);
        }
        let p0 = run_povm(&c, &DensityMatrix::basis(2, 0), 1).unwrap();
        assert!((p0[&"0".parse().unwrap()] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_identity_vs_depolarizing() {
        let id = ChannelSpec::from_kraus("id", KrausSet::new(vec![identity(2)]).unwrap());
        assert_eq!(channel_distance(&id, &id).unwrap(), 0.0);
        // Full depolarization has Choi 𝕀₄/2; the identity has Choi |Ω⟩⟨Ω| with Ω unnormalized.
        let pauli = [
            identity(2),
            CMatrix::from_row_slice(2, 2, &[r(0.0), r(1.0), r(1.0), r(0.0)]),
            CMatrix::from_row_slice(2, 2, &[r(0.0), linalg::c(0.0, -1.0), linalg::c(0.0, 1.0), r(0.0)]),
            CMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(-1.0)]),
        ];
        let dep = ChannelSpec::from_kraus("dep", KrausSet::new(pauli.iter().map(|p| p * r(0.5)).collect()).unwrap());
        let mut omega = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            omega[(i, j)] = r(1.0);
        }
        let oracle = linalg::frobenius(&(omega - identity(4) * r(0.5)));
        assert!((channel_distance(&id, &dep).unwrap() - oracle).abs() < 1e-14);
        assert!((oracle - 3f64.sqrt()).abs() < 1e-14);
    }
}
