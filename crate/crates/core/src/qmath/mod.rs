//! Quantum states, entropies and local steering on small Hilbert spaces.
//!
//! All logarithms are base 2. Bipartite states carry an explicit `A|B` cut;
//! operators named "on A" act on the first factor.

pub mod density;
pub mod entropy;
pub mod pure;
pub mod steering;

pub use density::{
    apply_on_registers, partial_trace_regs, permute_vector, reduce_matrix, reduce_vector,
    DensityMatrix,
};
pub use entropy::{
    mutual_information, mutual_information_regs, relative_entropy, shannon_bits, trace_distance,
    von_neumann_entropy,
};
pub use pure::{
    entanglement_amount, partial_trace, partial_trace_mixed, purify, schmidt_truncate,
    BipartitePureState, Schmidt, Side,
};
pub use steering::{
    max_substate_weight, steering_kraus, support_substate_weight, uhlmann_align, KrausOp,
};
