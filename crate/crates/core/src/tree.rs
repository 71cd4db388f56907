//! Compilation of a Kraus set into a binary tree of ancilla-conditioned
//! rounds.
//!
//! A channel with `N` Kraus operators is realized by `L = ⌈log₂N⌉` rounds.
//! Round `l` applies a system-ancilla unitary chosen by the first `l`
//! measurement outcomes `b₁…b_l` (a node of the tree); only its left column
//! blocks `⟨0|U|0⟩` and `⟨1|U|0⟩` affect the system, since the ancilla is
//! always prepared in `|0⟩`. The product of blocks along a root-to-leaf path
//! reproduces the Kraus operator stored at that leaf.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{ChannelSpec, KrausSet};
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix};

/// Singular values at or below this are outside the support (pseudo-inverse
/// treats them as zero).
pub const PINV_CUTOFF: f64 = 1e-12;

/// Accepted isometry residual for blocks handed to [`complete_unitary`].
pub const ISOMETRY_TOLERANCE: f64 = 1e-8;

/// Outcome record `b₁…b_l`; the empty label is the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BinaryLabel(Vec<u8>);

impl BinaryLabel {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        Self(bits.to_vec())
    }

    /// The `len`-bit big-endian encoding of `index`.
    pub fn from_index(index: usize, len: usize) -> Self {
        Self((0..len).map(|k| ((index >> (len - 1 - k)) & 1) as u8).collect())
    }

    /// Big-endian value of the bits.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, bit: u8) -> Self {
        let mut bits = self.0.clone();
        bits.push(bit);
        Self(bits)
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len].to_vec())
    }

    pub fn starts_with(&self, prefix: &BinaryLabel) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// Every label of length `len`, in index order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BinaryLabel> {
        (0..1usize << len).map(move |i| BinaryLabel::from_index(i, len))
    }
}

impl Ord for BinaryLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for BinaryLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("bad label character '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BinaryLabel)
    }
}

/// One round: the two system blocks `⟨0|U|0⟩`, `⟨1|U|0⟩` and, once requested,
/// the completed `2d×2d` unitary (ancilla ⊗ system ordering).
#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub label: BinaryLabel,
    pub block0: CMatrix,
    pub block1: CMatrix,
    pub full_unitary: Option<CMatrix>,
}

impl TreeNode {
    pub fn new(label: BinaryLabel, block0: CMatrix, block1: CMatrix) -> Self {
        Self { label, block0, block1, full_unitary: None }
    }

    pub fn block(&self, bit: u8) -> &CMatrix {
        if bit == 0 {
            &self.block0
        } else {
            &self.block1
        }
    }

    /// ‖block0†block0 + block1†block1 − 𝕀‖_F.
    pub fn isometry_residual(&self) -> f64 {
        let sum = self.block0.adjoint() * &self.block0 + self.block1.adjoint() * &self.block1;
        linalg::frobenius(&(sum - linalg::identity(self.block0.ncols())))
    }
}

/// Depth-`L` tree of rounds together with the leaf operators it realizes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveCircuit {
    dim: usize,
    depth: usize,
    nodes: BTreeMap<BinaryLabel, TreeNode>,
    leaf_kraus: BTreeMap<BinaryLabel, CMatrix>,
}

impl AdaptiveCircuit {
    /// Assembles a circuit from its nodes. All `2^L − 1` labels of length
    /// `< L` must be present with `d×d` blocks; leaf operators are computed
    /// as the ordered block products along each path.
    pub fn from_nodes(dim: usize, depth: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("circuit depth must be at least 1".into()));
        }
        let expected = (1usize << depth) - 1;
        let map: BTreeMap<BinaryLabel, TreeNode> = nodes.into_iter().map(|n| (n.label.clone(), n)).collect();
        if map.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: map.len(), context: "node count" });
        }
        for (label, node) in &map {
            if label.len() >= depth {
                return Err(Error::InvalidArgument(format!("node label '{label}' too long for depth {depth}")));
            }
            for block in [&node.block0, &node.block1] {
                if block.shape() != (dim, dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: block.nrows(),
                        context: "node block shape",
                    });
                }
            }
        }
        let mut circuit = Self { dim, depth, nodes: map, leaf_kraus: BTreeMap::new() };
        circuit.leaf_kraus =
            BinaryLabel::all_of_length(depth).map(|leaf| (leaf.clone(), circuit.path_operator(&leaf))).collect();
        Ok(circuit)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &BTreeMap<BinaryLabel, TreeNode> {
        &self.nodes
    }

    pub fn node(&self, label: &BinaryLabel) -> Option<&TreeNode> {
        self.nodes.get(label)
    }

    pub fn leaf_kraus(&self) -> &BTreeMap<BinaryLabel, CMatrix> {
        &self.leaf_kraus
    }

    /// `⟨b_L|U_{b^(L−1)}|0⟩ ⋯ ⟨b₁|U_∅|0⟩` for a leaf (or any partial path).
    pub fn path_operator(&self, path: &BinaryLabel) -> CMatrix {
        let mut acc = linalg::identity(self.dim);
        for l in 0..path.len() {
            let node = &self.nodes[&path.prefix(l)];
            acc = node.block(path.bits()[l]) * acc;
        }
        acc
    }

    /// Leaf operators in index order, as a Kraus set.
    pub fn kraus_set(&self) -> KrausSet {
        KrausSet::new(self.leaf_kraus.values().cloned().collect()).expect("leaves share the system dimension")
    }

    pub fn to_channel(&self, label: impl Into<String>) -> ChannelSpec {
        ChannelSpec::from_kraus(label, self.kraus_set())
    }

    /// Fills in `full_unitary` on every node that lacks one.
    pub fn complete_unitaries(&mut self) -> Result<()> {
        for node in self.nodes.values_mut() {
            if node.full_unitary.is_none() {
                node.full_unitary = Some(complete_unitary(&node.block0, &node.block1)?);
            }
        }
        Ok(())
    }

    /// Replaces one node's blocks; leaf operators are recomputed.
    pub fn with_node_blocks(&self, label: &BinaryLabel, block0: CMatrix, block1: CMatrix) -> Result<Self> {
        let mut nodes: Vec<TreeNode> = self.nodes.values().cloned().collect();
        let node = nodes
            .iter_mut()
            .find(|n| &n.label == label)
            .ok_or_else(|| Error::InvalidArgument(format!("no node '{label}'")))?;
        *node = TreeNode::new(label.clone(), block0, block1);
        Self::from_nodes(self.dim, self.depth, nodes)
    }
}

/// Number of rounds for `n` Kraus operators: `⌈log₂n⌉`, but at least one.
pub fn tree_depth(n: usize) -> usize {
    let mut depth = 1;
    while (1usize << depth) < n {
        depth += 1;
    }
    depth
}

/// Pads with zero operators up to `2^L` entries, `L = max(1, ⌈log₂N⌉)`.
/// Operator `i` (0-based) sits at the leaf whose bits encode `i`.
pub fn pad_kraus(k: &KrausSet) -> Result<KrausSet> {
    if k.is_empty() {
        return Err(Error::EmptyKrausSet);
    }
    let total = 1usize << tree_depth(k.len());
    let mut ops = k.ops().to_vec();
    ops.resize(total, linalg::zeros(k.dim()));
    KrausSet::new(ops)
}

/// Per-node quantities derived from the branch sum
/// `Σ K†K = V·D²·V†` over all leaves below the node.
///
/// The branch operators stacked into a tall matrix `A = U·D·V†` give both
/// `M = V·D·V†` and the polar isometry `X = U·V†` with `A = X·M`.
#[derive(Clone, Debug)]
pub struct NodeScaffold {
    pub label: BinaryLabel,
    pub v: CMatrix,
    /// Diagonal of `D`, descending.
    pub d: Vec<f64>,
    /// Pseudo-inverted diagonal: `1/Dⱼⱼ` on the support, else 0.
    pub d_inv: Vec<f64>,
    /// Diagonal of the support projection `P`.
    pub support: Vec<bool>,
    /// `V·P⊥·V†`.
    pub q: CMatrix,
    /// `V·D·V†`.
    pub m: CMatrix,
    /// `V·D⁻¹·V†`.
    pub m_plus: CMatrix,
    /// Left singular vectors of the stacked branch operators.
    pub u: CMatrix,
    /// `U·V†`.
    pub x: CMatrix,
}

impl NodeScaffold {
    /// The root is fixed to `V = D = P = 𝕀`, so `U` is the stacked Kraus set.
    fn root(stacked: CMatrix) -> Self {
        let dim = stacked.ncols();
        let id = linalg::identity(dim);
        Self {
            label: BinaryLabel::root(),
            v: id.clone(),
            d: vec![1.0; dim],
            d_inv: vec![1.0; dim],
            support: vec![true; dim],
            q: linalg::zeros(dim),
            m: id.clone(),
            m_plus: id,
            x: stacked.clone(),
            u: stacked,
        }
    }

    pub fn p(&self) -> CMatrix {
        linalg::diag_real(&self.support.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect::<Vec<_>>())
    }

    pub fn p_perp(&self) -> CMatrix {
        linalg::diag_real(&self.support.iter().map(|&s| if s { 0.0 } else { 1.0 }).collect::<Vec<_>>())
    }

    /// `R_b·U_P·V_P†`: rows of child `bit` in `U`, restricted to the
    /// support. Equals `A_child·M⁺` without dividing by `D`.
    fn child_rows(&self, bit: u8) -> CMatrix {
        let rows = self.u.nrows() / 2;
        let dim = self.v.nrows();
        let mut out = CMatrix::zeros(rows, dim);
        for (j, _) in self.support.iter().enumerate().filter(|(_, &on)| on) {
            out += self.u.view((bit as usize * rows, j), (rows, 1)) * self.v.column(j).adjoint();
        }
        out
    }
}

fn stack_branch(label: &BinaryLabel, padded: &KrausSet) -> CMatrix {
    let dim = padded.dim();
    let depth = tree_depth(padded.len());
    let ops: Vec<&CMatrix> = padded
        .ops()
        .iter()
        .enumerate()
        .filter(|(i, _)| BinaryLabel::from_index(*i, depth).starts_with(label))
        .map(|(_, op)| op)
        .collect();
    let mut stacked = CMatrix::zeros(ops.len() * dim, dim);
    for (k, op) in ops.iter().enumerate() {
        stacked.view_mut((k * dim, 0), (dim, dim)).copy_from(*op);
    }
    stacked
}

/// Builds the scaffold of one node from the padded Kraus set.
///
/// `V` and `D` come from the SVD of the stacked branch operators, which keeps
/// small entries of `D` accurate to machine precision rather than to its
/// square root.
pub fn node_scaffold(label: &BinaryLabel, padded: &KrausSet) -> Result<NodeScaffold> {
    let depth = tree_depth(padded.len());
    if padded.len() != 1 << depth {
        return Err(Error::InvalidArgument("Kraus set must be padded to a power of two".into()));
    }
    if label.len() >= depth {
        return Err(Error::InvalidArgument(format!("label '{label}' is not an internal node of depth {depth}")));
    }
    let stacked = stack_branch(label, padded);
    if label.is_empty() {
        return Ok(NodeScaffold::root(stacked));
    }
    let dec = linalg::svd(&stacked);
    let support: Vec<bool> = dec.s.iter().map(|&s| s > PINV_CUTOFF).collect();
    let d_inv: Vec<f64> = dec.s.iter().zip(&support).map(|(&s, &on)| if on { 1.0 / s } else { 0.0 }).collect();
    let v = dec.v;
    let vh = v.adjoint();
    let p_perp: Vec<f64> = support.iter().map(|&on| if on { 0.0 } else { 1.0 }).collect();
    let q = &v * linalg::diag_real(&p_perp) * &vh;
    let m = &v * linalg::diag_real(&dec.s) * &vh;
    let m_plus = &v * linalg::diag_real(&d_inv) * &vh;
    let x = &dec.u * &vh;

    let branch_sum = stacked.adjoint() * &stacked;
    let residual = linalg::frobenius(&(&m * &m - &branch_sum));
    if residual > 1e-9 * (1.0 + linalg::frobenius(&branch_sum)) {
        return Err(Error::Internal { what: "branch-sum factorization", residual });
    }
    Ok(NodeScaffold { label: label.clone(), v, d: dec.s, d_inv, support, q, m, m_plus, u: dec.u, x })
}

fn last_bit(label: &BinaryLabel) -> u8 {
    *label.bits().last().expect("child labels are non-empty")
}

/// `M_child·M⁺_parent + Q_parent/√2`.
///
/// The first term is evaluated as `X_child†·R_b·U_parent·V_parent†`, which
/// is equal in exact arithmetic but never divides by small entries of `D`.
pub fn internal_block(parent: &NodeScaffold, child: &NodeScaffold) -> CMatrix {
    child.x.adjoint() * parent.child_rows(last_bit(&child.label)) + &parent.q * r(std::f64::consts::FRAC_1_SQRT_2)
}

/// `K_leaf·M⁺_parent + W_leaf·V_leaf†·Q_parent/√2`, with `K_leaf = W·D·V†`.
/// The first term is evaluated from the parent's `U` as in [`internal_block`].
/// A zero leaf operator uses `W = V = 𝕀`.
pub fn leaf_block(parent: &NodeScaffold, leaf_label: &BinaryLabel, padded: &KrausSet) -> CMatrix {
    let k = &padded.ops()[leaf_label.index()];
    let dec = linalg::svd(k);
    parent.child_rows(last_bit(leaf_label)) + &dec.u * dec.v.adjoint() * &parent.q * r(std::f64::consts::FRAC_1_SQRT_2)
}

/// Replaces `[block0; block1]` by its polar factor, the nearest isometry.
///
/// The two blocks form an isometry in exact arithmetic. Numerically the
/// kernel term can overlap the support term along directions whose branch
/// weight sits just above the pseudo-inverse cutoff; path products weight
/// those directions by the same small factors, so the correction leaves the
/// leaf operators unchanged to that order.
pub fn nearest_isometry(block0: &CMatrix, block1: &CMatrix) -> (CMatrix, CMatrix) {
    let d = block0.ncols();
    let mut stacked = CMatrix::zeros(2 * d, d);
    stacked.view_mut((0, 0), (d, d)).copy_from(block0);
    stacked.view_mut((d, 0), (d, d)).copy_from(block1);
    let dec = linalg::svd(&stacked);
    let polar = &dec.u * dec.v.adjoint();
    (polar.rows(0, d).into_owned(), polar.rows(d, d).into_owned())
}

/// Completes the isometry `[block0; block1]` to a `2d×2d` unitary.
pub fn complete_unitary(block0: &CMatrix, block1: &CMatrix) -> Result<CMatrix> {
    let d = block0.ncols();
    if block0.shape() != (d, d) || block1.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: block1.nrows(), context: "complete_unitary" });
    }
    let mut stacked = CMatrix::zeros(2 * d, d);
    stacked.view_mut((0, 0), (d, d)).copy_from(block0);
    stacked.view_mut((d, 0), (d, d)).copy_from(block1);
    let residual = linalg::frobenius(&(stacked.adjoint() * &stacked - linalg::identity(d)));
    if residual > ISOMETRY_TOLERANCE {
        return Err(Error::NotIsometry { residual });
    }
    Ok(linalg::complete_columns(&stacked, 2 * d))
}

/// Compiles a trace-preserving Kraus set into an adaptive circuit whose
/// leaves reproduce the (zero-padded) operators exactly.
pub fn synthesize(k: &KrausSet) -> Result<AdaptiveCircuit> {
    let dim = k.dim();
    let residual = linalg::frobenius(&(k.completeness() - linalg::identity(dim)));
    if residual > ISOMETRY_TOLERANCE {
        return Err(Error::NotCptp(format!("completeness residual {residual:e}")));
    }
    let padded = pad_kraus(k)?;
    let depth = tree_depth(padded.len());

    let internal: Vec<BinaryLabel> = (0..depth).flat_map(BinaryLabel::all_of_length).collect();
    let scaffolds: BTreeMap<BinaryLabel, NodeScaffold> = internal
        .par_iter()
        .map(|label| node_scaffold(label, &padded).map(|s| (label.clone(), s)))
        .collect::<Result<_>>()?;

    let nodes: Vec<TreeNode> = internal
        .par_iter()
        .map(|label| {
            let parent = &scaffolds[label];
            let block = |bit: u8| {
                let child = label.child(bit);
                if child.len() < depth {
                    internal_block(parent, &scaffolds[&child])
                } else {
                    leaf_block(parent, &child, &padded)
                }
            };
            let (b0, b1) = nearest_isometry(&block(0), &block(1));
            TreeNode::new(label.clone(), b0, b1)
        })
        .collect();
    AdaptiveCircuit::from_nodes(dim, depth, nodes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    /// Isometry residual per node.
    pub node_isometry: BTreeMap<BinaryLabel, f64>,
    /// ‖path product − K_leaf‖_F per leaf.
    pub leaf_residual: BTreeMap<BinaryLabel, f64>,
    /// ‖U†U − 𝕀‖_F for nodes carrying a completed unitary.
    pub unitary_residual: BTreeMap<BinaryLabel, f64>,
    /// Norm of target operators that have no leaf to land on.
    pub unmatched_target: f64,
    /// Frobenius distance between circuit and target Choi matrices.
    pub choi_distance: f64,
}

impl VerificationReport {
    pub fn max_node_isometry(&self) -> f64 {
        self.node_isometry.values().copied().fold(0.0, f64::max)
    }

    pub fn max_leaf_residual(&self) -> f64 {
        self.leaf_residual.values().copied().fold(self.unmatched_target, f64::max)
    }

    pub fn max_unitary_residual(&self) -> f64 {
        self.unitary_residual.values().copied().fold(0.0, f64::max)
    }

    pub fn flagged_nodes(&self, tol: f64) -> Vec<BinaryLabel> {
        let mut out: Vec<BinaryLabel> = self
            .node_isometry
            .iter()
            .chain(self.unitary_residual.iter())
            .filter(|(_, &v)| !(v < tol))
            .map(|(l, _)| l.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn flagged_leaves(&self, tol: f64) -> Vec<BinaryLabel> {
        self.leaf_residual.iter().filter(|(_, &v)| !(v < tol)).map(|(l, _)| l.clone()).collect()
    }

    pub fn passes(&self, node_tol: f64, leaf_tol: f64, choi_tol: f64) -> bool {
        self.max_node_isometry() < node_tol
            && self.max_unitary_residual() < node_tol
            && self.max_leaf_residual() < leaf_tol
            && self.choi_distance < choi_tol
    }
}

/// Checks a circuit against the Kraus set it is meant to realize.
pub fn verify_circuit(c: &AdaptiveCircuit, target: &KrausSet) -> VerificationReport {
    let node_isometry = c.nodes().iter().map(|(l, n)| (l.clone(), n.isometry_residual())).collect();
    let unitary_residual = c
        .nodes()
        .iter()
        .filter_map(|(l, n)| {
            n.full_unitary.as_ref().map(|u| {
                let d = c.dim();
                let left_match = linalg::frobenius(&(u.view((0, 0), (d, d)) - &n.block0))
                    + linalg::frobenius(&(u.view((d, 0), (d, d)) - &n.block1));
                (l.clone(), linalg::unitarity_residual(u) + left_match)
            })
        })
        .collect();
    let zero = linalg::zeros(c.dim());
    let leaf_residual = c
        .leaf_kraus()
        .iter()
        .map(|(l, k)| {
            let expected = target.ops().get(l.index()).filter(|t| t.shape() == k.shape()).unwrap_or(&zero);
            (l.clone(), linalg::frobenius(&(k - expected)))
        })
        .collect();
    let leaves = c.leaf_kraus().len();
    let unmatched_target =
        target.ops().iter().skip(leaves).map(|t| linalg::frobenius(t)).fold(0.0, f64::max);
    let choi_distance = if target.dim() == c.dim() {
        let a = c.to_channel("circuit").to_choi();
        let b = ChannelSpec::from_kraus("target", target.clone()).to_choi();
        linalg::frobenius(&(a.matrix() - b.matrix()))
    } else {
        f64::INFINITY
    };
    VerificationReport { node_isometry, leaf_residual, unitary_residual, unmatched_target, choi_distance }
}
