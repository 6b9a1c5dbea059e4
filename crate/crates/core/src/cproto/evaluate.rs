use rand::Rng;

use crate::cinfo::{sample_index, Distribution, JointDistribution};
use crate::error::{Error, Result};
use crate::par::{self, Mode};
use crate::rng::rng_for;

use super::tree::{transcript_probs, ClassicalProtocolTree, Relation, MAX_TRANSCRIPTS};

/// One simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub x: usize,
    pub y: usize,
    /// `log₂` of the bits sent; huge communication is only representable
    /// in this form.
    pub log2_bits: f64,
    pub correct: bool,
    pub aborted: bool,
}

impl TrialRecord {
    /// Bits sent; `+∞` once beyond `f64` range.
    pub fn bits(&self) -> f64 {
        self.log2_bits.exp2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub trials: u64,
    pub errors: u64,
    pub aborts: u64,
    pub error_rate: f64,
    /// Standard error of `error_rate`.
    pub sigma: f64,
    /// `log₂` of the mean number of bits.
    pub log2_mean_bits: f64,
    pub records: Vec<TrialRecord>,
}

impl Evaluation {
    pub fn from_records(records: Vec<TrialRecord>) -> Self {
        let trials = records.len() as u64;
        let errors = records.iter().filter(|r| !r.correct).count() as u64;
        let aborts = records.iter().filter(|r| r.aborted).count() as u64;
        let error_rate = errors as f64 / trials.max(1) as f64;
        let sigma = (error_rate * (1.0 - error_rate) / trials.max(1) as f64).sqrt();
        let log2_mean_bits = log2_mean(records.iter().map(|r| r.log2_bits));
        Self {
            trials,
            errors,
            aborts,
            error_rate,
            sigma,
            log2_mean_bits,
            records,
        }
    }

    pub fn mean_bits(&self) -> f64 {
        self.log2_mean_bits.exp2()
    }

    /// Binomial standard error for an error rate `p` over `n` trials, floored
    /// at the `p = 1/n` value so that a zero observed rate still gets a band.
    pub fn sigma_floor(&self) -> f64 {
        let n = self.trials.max(1) as f64;
        let p = self.error_rate.max(1.0 / n);
        (p * (1.0 - p) / n).sqrt()
    }
}

/// `log₂(mean(2^v))`, stable for very large or very small values.
pub fn log2_mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = v.iter().map(|x| (x - m).exp2()).sum();
    m + (s / v.len() as f64).log2()
}

/// Exact distributional error of the tree under a (possibly correlated)
/// prior.
pub fn exact_error(
    tree: &ClassicalProtocolTree,
    rel: &Relation,
    mu: &JointDistribution,
) -> Result<f64> {
    tree.check_relation(rel)?;
    if mu.table().len() != tree.nx() || mu.table()[0].len() != tree.ny() {
        return Err(Error::AlphabetMismatch(
            "prior does not match protocol inputs".into(),
        ));
    }
    if tree.num_transcripts() > MAX_TRANSCRIPTS {
        return Err(Error::TooLarge(
            "too many transcript paths for exact evaluation".into(),
        ));
    }
    let mut err = 0.0;
    for x in 0..tree.nx() {
        for y in 0..tree.ny() {
            let w = mu.table()[x][y];
            if w == 0.0 {
                continue;
            }
            let d = transcript_probs(tree, x, y)?;
            let bad: f64 = d
                .iter()
                .enumerate()
                .filter(|&(s, _)| !rel.allows(x, y, tree.output(y, s)))
                .map(|(_, p)| p)
                .sum();
            err += w * bad;
        }
    }
    Ok(err)
}

pub fn exact_error_product(
    tree: &ClassicalProtocolTree,
    rel: &Relation,
    mu_x: &Distribution,
    mu_y: &Distribution,
) -> Result<f64> {
    exact_error(tree, rel, &JointDistribution::product(mu_x, mu_y))
}

/// Bits sent by the tree on every run: `Σ ⌈log₂ |alphabet|⌉`.
pub fn tree_bits(tree: &ClassicalProtocolTree) -> u64 {
    tree.rounds()
        .iter()
        .map(|r| (r.alphabet as u64).next_power_of_two().trailing_zeros() as u64)
        .sum()
}

/// Draws `(x, y)` from a joint prior.
pub fn sample_inputs<R: Rng + ?Sized>(mu: &JointDistribution, rng: &mut R) -> (usize, usize) {
    let flat: Vec<f64> = mu.table().concat();
    let ny = mu.table()[0].len();
    let i = sample_index(&flat, rng.random());
    (i / ny, i % ny)
}

/// Seeded Monte Carlo run of the tree itself.
pub fn evaluate_tree(
    tree: &ClassicalProtocolTree,
    rel: &Relation,
    mu: &JointDistribution,
    trials: u64,
    seed: u64,
    mode: Mode,
) -> Result<Evaluation> {
    tree.check_relation(rel)?;
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let bits = tree_bits(tree) as f64;
    let records = par::map_indexed_with(mode, trials, |t| {
        let mut rng = rng_for(seed, &[t]);
        let (x, y) = sample_inputs(mu, &mut rng);
        let (_, z) = tree.run(x, y, &mut rng);
        TrialRecord {
            trial: t,
            x,
            y,
            log2_bits: bits.log2(),
            correct: rel.allows(x, y, z),
            aborted: false,
        }
    });
    Ok(Evaluation::from_records(records))
}
