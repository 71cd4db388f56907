//! The partial corner transpose, a channel that no Markovian evolution
//! reaches: `𝒯(ρ) = (ρ^{T_c} + 𝕀·Tr ρ)/(1+d)`, where `T_c` swaps only
//! `ρ_{1,d}` and `ρ_{d,1}`.

use crate::channel::{vec_row, ChannelSpec, SuperOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, r, CMatrix};
use crate::tree::{AdaptiveCircuit, BinaryLabel, TreeNode};

/// Applies the corner transpose formula directly.
pub fn corner_transpose_apply(rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let mut out = rho.clone();
    out[(0, d - 1)] = rho[(d - 1, 0)];
    out[(d - 1, 0)] = rho[(0, d - 1)];
    (out + linalg::identity(d) * rho.trace()) / r((d + 1) as f64)
}

pub fn corner_transpose_channel(d: usize) -> Result<ChannelSpec> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("corner transpose needs d >= 2, got {d}")));
    }
    let mut t = CMatrix::zeros(d * d, d * d);
    for m in 0..d {
        for n in 0..d {
            let mut unit = linalg::zeros(d);
            unit[(m, n)] = r(1.0);
            t.set_column(m * d + n, &vec_row(&corner_transpose_apply(&unit)).column(0));
        }
    }
    Ok(ChannelSpec::from_superop(format!("corner_transpose_{d}"), SuperOperator::new(t)?))
}

fn diag(values: [f64; 3]) -> CMatrix {
    linalg::diag_real(&values)
}

fn dense(rows: [[f64; 3]; 3]) -> CMatrix {
    CMatrix::from_fn(3, 3, |i, j| r(rows[i][j]))
}

/// Hand-derived depth-3 circuit realizing the `d = 3` corner transpose.
pub fn corner_reference_circuit() -> AdaptiveCircuit {
    let s2 = 2f64.sqrt();
    let a = (10.0 + s2).sqrt() / 4.0;
    let b = (2.0 + 1.0 / s2).sqrt() / 2.0;
    let root = (diag([a, b, a]), diag([(6.0 - s2).sqrt() / 4.0, (2.0 - 1.0 / s2).sqrt() / 2.0, (6.0 - s2).sqrt() / 4.0]));

    let c0 = (29.0 + 2.0 * s2).sqrt() / 7.0;
    let c1 = ((3.0 + s2) / 7.0).sqrt();
    let e0 = 2.0 / (10.0 + s2).sqrt();
    let e1 = 1.0 / (2.0 + 1.0 / s2).sqrt();
    let n0 = (diag([c0, c1, c0]), diag([e0, e1, e0]));

    let f = (2.0 * (6.0 + s2) / 17.0).sqrt();
    let g = ((5.0 - 2.0 * s2) / 17.0).sqrt();
    let n1 = (diag([f, 0.0, f]), diag([g, 1.0, g]));

    let h = ((5.0 + 2.0 * s2) / 17.0).sqrt();
    let k = 2.0 / (6.0 + s2).sqrt();
    let n00 = (diag([h, 1.0, h]), diag([-k, 0.0, k]));

    let n01 = (
        dense([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        dense([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
    );
    let n10 = (
        dense([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]),
        dense([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    );
    let n11 = (
        dense([[0.0, ((4.0 + s2) / 7.0).sqrt(), 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        diag([1.0, -((3.0 - s2) / 7.0).sqrt(), 1.0]),
    );

    let nodes = [("", root), ("0", n0), ("1", n1), ("00", n00), ("01", n01), ("10", n10), ("11", n11)]
        .into_iter()
        .map(|(label, (b0, b1))| TreeNode::new(label.parse::<BinaryLabel>().expect("static label"), b0, b1))
        .collect();
    AdaptiveCircuit::from_nodes(3, 3, nodes).expect("seven 3x3 nodes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_determinant, validate_cptp};
    use crate::linalg::frobenius;

    #[test]
    fn diagonal_inputs() {
        let rho = linalg::diag_real(&[0.5, 0.3, 0.2]);
        let out = corner_transpose_apply(&rho);
        let expected = (rho.clone() + linalg::identity(3)) / r(4.0);
        assert!(frobenius(&(out - expected)) < 1e-16);
    }

    #[test]
    fn channel_is_cptp_with_negative_determinant() {
        for d in 2..=4 {
            let ch = corner_transpose_channel(d).unwrap();
            assert!(validate_cptp(&ch, 1e-10).passed);
            assert!(channel_determinant(&ch.to_superop()).re < 0.0);
        }
        assert!(corner_transpose_channel(1).is_err());
    }

    #[test]
    fn hardcoded_circuit_matches() {
        let c = corner_reference_circuit();
        let root = c.node(&BinaryLabel::root()).unwrap();
        assert!((root.block0[(0, 0)].re - (10.0 + 2f64.sqrt()).sqrt() / 4.0).abs() < 1e-16);
        for node in c.nodes().values() {
            assert!(node.isometry_residual() < 1e-10, "{}", node.label);
        }
        let target = corner_transpose_channel(3).unwrap().to_superop();
        let built = c.to_channel("c").to_superop();
        assert!(frobenius(&(built.matrix() - target.matrix())) < 1e-12);
    }
}
