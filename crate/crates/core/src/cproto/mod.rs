//! Classical private-coin protocols: trees, privacy loss, one-way
//! compression and an exhaustive one-way optimum.

pub mod brute_force;
pub mod builders;
pub mod compress;
pub mod evaluate;
pub mod privacy;
pub mod tree;

pub use brute_force::{brute_force_one_way, OneWayOptimum};
pub use compress::{
    compress_multiround_classical, CompressedOneWay, CompressionParams, Engine, ThresholdRule,
};
pub use evaluate::{
    evaluate_tree, exact_error, exact_error_product, tree_bits, Evaluation, TrialRecord,
};
pub use privacy::privacy_loss_classical;
pub use tree::{
    average_transcripts, product_identity_check, transcript_distribution, AveragedTranscripts,
    ClassicalProtocolTree, Kernel, Party, Relation, Round,
};
