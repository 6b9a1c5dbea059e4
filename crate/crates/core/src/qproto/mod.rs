//! Quantum protocols: one-way and multi-round models, correctors, message
//! compression with shared entanglement, and quantum privacy loss.

pub mod corrector;
pub mod demos;
pub mod ensemble;
pub mod multiround;
pub mod one_way;
pub mod two_way;

use crate::error::{Error, Result};

pub use corrector::{build_corrector, Corrector, CorrectorAudit, CorrectorKind};
pub use ensemble::{average_state, Ensemble};
pub use multiround::{compress_multiround_quantum, CompressedMultiround, MultiroundClaims};
pub use one_way::{
    check_povm, compress_one_way, povm_law, CompressedQuantumOneWay, QuantumOneWayProtocol,
};
pub use two_way::{quantum_privacy_loss, quantum_privacy_loss_bob, QuantumTwoWayProtocol};

/// Default cap on the simulated Hilbert-space dimension.
pub const DEFAULT_DIM_BUDGET: usize = 1 << 14;

/// Environment variable overriding [`DEFAULT_DIM_BUDGET`].
pub const DIM_BUDGET_ENV: &str = "COMMLAB_DIM_BUDGET";

pub fn dim_budget() -> usize {
    std::env::var(DIM_BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DIM_BUDGET)
}

/// Rejects instances whose total dimension exceeds the budget.
pub fn check_dim(total: usize) -> Result<()> {
    let cap = dim_budget();
    if total > cap {
        return Err(Error::TooLarge(format!(
            "Hilbert space of dimension {total} exceeds the budget {cap}"
        )));
    }
    Ok(())
}
