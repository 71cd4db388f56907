//! Builders for concrete channels: state preparation, Lindbladian
//! evolution and cat pumping, binomial-code recovery, and the corner
//! transpose.

pub mod binomial;
pub mod cat;
pub mod corner;
pub mod lindblad;
pub mod stabilize;

pub use binomial::{binomial_recovery_circuit, binomial_recovery_kraus, BinomialCodeSpec, BinomialError};
pub use cat::{cat_generator, cat_jump_operator, cat_state, coherent_state, rank_vs_time, CatCodeSpec, RankRow};
pub use corner::{corner_reference_circuit, corner_transpose_channel};
pub use lindblad::{exp_channel, lindblad_superop, steady_channel, LindbladSpec, SteadyChannel};
pub use stabilize::{init_channel, StabilizationTarget};
