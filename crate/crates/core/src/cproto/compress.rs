//! One-way simulation of a multi-round private-coin protocol by rejection
//! sampling against a shared array of transcripts drawn from the average
//! transcript law `P`.
//!
//! Two engines produce the same output law:
//!
//! * `Explicit` walks the shared array cell by cell, exactly as the
//!   protocol is described. Feasible only when the acceptance thresholds and
//!   the row count are small.
//! * `Jump` samples the same random variables in closed form: Alice's index
//!   per row is geometric with parameter `Pr_{P_x}(Good^x)/T_a`, and Bob's
//!   first accepted row is geometric with parameter
//!   `Σ_{s∈Good^x∩Good^y} (p^x(s)/Pr_{P_x}(Good^x))·p^y(s)/(T_b p(s))`.
//!   All thresholds are carried as `log₂` values, so `T = 2^400` is routine.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cinfo::{
    code_len, code_len_from_floor_log2, good_set_log2, kl_bits, sample_index, Distribution,
};
use crate::error::{Error, Result};
use crate::par::{self, Mode};
use crate::rng::{derive_seed, rng_for, SharedRandomness};

use super::evaluate::{exact_error_product, log2_mean, Evaluation, TrialRecord};
use super::privacy::privacy_loss_classical;
use super::tree::{average_transcripts, AveragedTranscripts, ClassicalProtocolTree, Relation};

/// Draws per row before the explicit engine gives up.
pub const ROW_SAMPLE_CAP: u64 = 1 << 24;
/// Rows up to which Alice's index lengths are summed one by one.
pub const EXPLICIT_SUM_ROWS: u64 = 4096;
/// `log₂(K · T_a)` up to which `Engine::Auto` picks the explicit engine.
pub const AUTO_EXPLICIT_LOG2_WORK: f64 = 16.0;
pub const DEFAULT_PREPASS_RUNS: u64 = 10_000;
/// Bits of the abort message (a single flag bit; every other message
/// starts with the opposite flag).
pub const ABORT_BITS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// `T = 2^{(k+1)/δ²}`.
    #[default]
    Standard,
    /// `T` = largest likelihood ratio inside the Good sets. Same output law,
    /// far fewer rejections.
    Tight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Auto,
    Explicit,
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionParams {
    pub delta_tilde: f64,
    pub rule: ThresholdRule,
    pub engine: Engine,
    pub prepass_runs: u64,
    pub seed: u64,
}

impl CompressionParams {
    pub fn new(delta_tilde: f64, seed: u64) -> Self {
        Self {
            delta_tilde,
            rule: ThresholdRule::Standard,
            engine: Engine::Auto,
            prepass_runs: DEFAULT_PREPASS_RUNS,
            seed,
        }
    }
}

/// Distribution of `⌊log₂ J⌋` for `J` geometric with success probability
/// `2^log2_q`, as `(m, probability)` pairs carrying all but `2^{-60}` of the
/// mass.
fn floor_log2_geometric_pmf(log2_q: f64) -> Vec<(u64, f64)> {
    if log2_q >= 0.0 {
        return vec![(0, 1.0)];
    }
    // a = −ln(1 − q); Pr(J ≥ n) = e^{−a(n−1)}
    let (log2_a, a) = if log2_q > -30.0 {
        let a = -(-log2_q.exp2()).ln_1p();
        (a.log2(), a)
    } else {
        (log2_q, 0.0)
    };
    let lo = ((-log2_a).floor() - 64.0).max(0.0) as u64;
    let hi = ((-log2_a).ceil() + 12.0).max(1.0) as u64;
    (lo..=hi)
        .map(|m| {
            let step = (log2_a + m as f64).exp2();
            let t1 = (step - a).max(0.0);
            (m, (-t1).exp() * -(-step).exp_m1())
        })
        .collect()
}

fn len_moments(log2_q: f64) -> (f64, f64) {
    let pmf = floor_log2_geometric_pmf(log2_q);
    let mean: f64 = pmf
        .iter()
        .map(|&(m, p)| p * code_len_from_floor_log2(m) as f64)
        .sum();
    let var: f64 = pmf
        .iter()
        .map(|&(m, p)| p * (code_len_from_floor_log2(m) as f64 - mean).powi(2))
        .sum();
    (mean, var)
}

/// `⌊log₂ J⌋` for one geometric draw with success probability `2^log2_q`.
fn sample_floor_log2_geometric<R: Rng + ?Sized>(log2_q: f64, rng: &mut R) -> u64 {
    if log2_q >= 0.0 {
        return 0;
    }
    let e = -(1.0 - rng.random::<f64>()).ln();
    if log2_q > -30.0 {
        let a = -(-log2_q.exp2()).ln_1p();
        let x = (e / a).ceil().max(1.0);
        if x < 2f64.powi(62) {
            return 63 - (x as u64).leading_zeros() as u64;
        }
        return x.log2().floor() as u64;
    }
    (e.log2() - log2_q).floor().max(0.0) as u64
}

/// Compressed one-way protocol built from a tree, a relation and a product
/// prior.
#[derive(Debug, Clone)]
pub struct CompressedOneWay {
    tree: ClassicalProtocolTree,
    rel: Relation,
    mu_x: Distribution,
    mu_y: Distribution,
    avg: AveragedTranscripts,
    pub delta_tilde: f64,
    pub delta: f64,
    pub k_a: f64,
    pub k_b: f64,
    /// Exact error of the original tree.
    pub epsilon: f64,
    pub rule: ThresholdRule,
    pub engine: Engine,
    /// `log₂` of Alice's and Bob's acceptance thresholds.
    pub log2_ta: f64,
    pub log2_tb: f64,
    /// `log₂` of the Good-set cut-offs `(k+1)/δ²` (equal to the thresholds
    /// under the standard rule).
    pub log2_cut_a: f64,
    pub log2_cut_b: f64,
    pub log2_rows: f64,
    /// `K` when it fits in a `u64`.
    pub rows: Option<u64>,
    pub good_x: Vec<bool>,
    pub good_y: Vec<bool>,
    good_sx: Vec<Vec<bool>>,
    good_sy: Vec<Vec<bool>>,
    mass_gx: Vec<f64>,
    log2_qa: Vec<f64>,
    len_mom: Vec<(f64, f64)>,
    /// `log₂` of the row-acceptance probability for Bob, per `(x, y)`.
    log2_qrow: Vec<Vec<f64>>,
    /// Law of Bob's accepted transcript, per `(x, y)`.
    bob_law: Vec<Vec<Vec<f64>>>,
    /// `log₂ c`, the pre-pass estimate of the expected communication of the
    /// untruncated protocol.
    pub log2_c: f64,
    pub prepass_runs: u64,
}

impl CompressedOneWay {
    pub fn build(
        tree: &ClassicalProtocolTree,
        rel: &Relation,
        mu_x: &Distribution,
        mu_y: &Distribution,
        params: CompressionParams,
    ) -> Result<Self> {
        tree.check_relation(rel)?;
        let dt = params.delta_tilde;
        if !(dt > 0.0 && dt < 1.0) {
            return Err(Error::OutOfRange(format!(
                "delta_tilde = {dt} not in (0,1)"
            )));
        }
        let epsilon = exact_error_product(tree, rel, mu_x, mu_y)?;
        if epsilon + dt >= 0.5 {
            return Err(Error::OutOfRange(format!(
                "epsilon + delta_tilde = {} must be below 1/2",
                epsilon + dt
            )));
        }
        let t = tree.num_transcripts();
        if tree.nx() * tree.ny() * t > 1 << 24 {
            return Err(Error::TooLarge(
                "compression needs |X|*|Y|*|transcripts| <= 2^24".into(),
            ));
        }
        let delta = dt / 5.0;
        let (k_a, k_b) = privacy_loss_classical(tree, mu_x, mu_y)?;
        let avg = average_transcripts(tree, mu_x, mu_y)?;
        let p = &avg.p;

        let good_x: Vec<bool> = avg
            .px
            .iter()
            .map(|px| kl_bits(px, p) <= k_a / delta + 1e-12)
            .collect();
        let good_y: Vec<bool> = avg
            .py
            .iter()
            .map(|py| kl_bits(py, p) <= k_b / delta + 1e-12)
            .collect();
        let log2_cut_a = (k_a + 1.0) / (delta * delta);
        let log2_cut_b = (k_b + 1.0) / (delta * delta);
        let mask = |row: &[f64], cut: f64| -> Vec<bool> {
            let set = good_set_log2(row, p, cut);
            let mut m = vec![false; t];
            for s in set {
                // transcripts outside the support of P are never drawn
                m[s] = p[s] > 0.0;
            }
            m
        };
        let good_sx: Vec<Vec<bool>> = avg.px.iter().map(|r| mask(r, log2_cut_a)).collect();
        let good_sy: Vec<Vec<bool>> = avg.py.iter().map(|r| mask(r, log2_cut_b)).collect();
        for s in 0..t {
            if p[s] > 0.0 && p[s] < 1e-300 {
                return Err(Error::Malformed(format!(
                    "transcript {s} has probability {} below 1e-300",
                    p[s]
                )));
            }
        }

        let max_log_ratio = |rows: &[Vec<f64>], masks: &[Vec<bool>], good: &[bool]| -> f64 {
            let mut best = f64::NEG_INFINITY;
            for (i, row) in rows.iter().enumerate() {
                if !good[i] {
                    continue;
                }
                for s in 0..t {
                    if masks[i][s] && row[s] > 0.0 {
                        best = best.max((row[s] / p[s]).log2());
                    }
                }
            }
            best
        };
        let (log2_ta, log2_tb) = match params.rule {
            ThresholdRule::Standard => (log2_cut_a, log2_cut_b),
            ThresholdRule::Tight => (
                max_log_ratio(&avg.px, &good_sx, &good_x).min(log2_cut_a),
                max_log_ratio(&avg.py, &good_sy, &good_y).min(log2_cut_b),
            ),
        };
        let log2_tb = if log2_tb.is_finite() { log2_tb } else { 0.0 };
        let log2_ta = if log2_ta.is_finite() { log2_ta } else { 0.0 };

        let log2_k_raw = ((1.0 / delta).ln() / (1.0 - delta)).log2() + log2_tb;
        let (rows, log2_rows) = if log2_k_raw < 52.0 {
            let k = log2_k_raw.exp2().ceil().max(1.0) as u64;
            (Some(k), (k as f64).log2())
        } else {
            (None, log2_k_raw)
        };

        let mass_gx: Vec<f64> = (0..tree.nx())
            .map(|x| {
                (0..t)
                    .filter(|&s| good_sx[x][s])
                    .map(|s| avg.px[x][s])
                    .sum()
            })
            .collect();
        let log2_qa: Vec<f64> = mass_gx.iter().map(|m| m.log2() - log2_ta).collect();
        let len_mom = log2_qa
            .iter()
            .map(|&q| {
                if q.is_finite() {
                    len_moments(q)
                } else {
                    (0.0, 0.0)
                }
            })
            .collect();

        let mut log2_qrow = vec![vec![f64::NEG_INFINITY; tree.ny()]; tree.nx()];
        let mut bob_law = vec![vec![Vec::new(); tree.ny()]; tree.nx()];
        for x in 0..tree.nx() {
            if mass_gx[x] <= 0.0 {
                continue;
            }
            for y in 0..tree.ny() {
                let w: Vec<f64> = (0..t)
                    .map(|s| {
                        if good_sx[x][s] && good_sy[y][s] {
                            avg.px[x][s] / mass_gx[x] * avg.py[y][s] / p[s]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let tot: f64 = w.iter().sum();
                if tot > 0.0 {
                    log2_qrow[x][y] = tot.log2() - log2_tb;
                    bob_law[x][y] = w.into_iter().map(|v| v / tot).collect();
                }
            }
        }

        let engine = match params.engine {
            Engine::Auto => {
                let work = log2_rows + log2_ta
                    - mass_gx
                        .iter()
                        .copied()
                        .fold(1.0, f64::min)
                        .max(1e-300)
                        .log2();
                if work <= AUTO_EXPLICIT_LOG2_WORK {
                    Engine::Explicit
                } else {
                    Engine::Jump
                }
            }
            e => e,
        };
        if engine == Engine::Explicit && rows.is_none_or(|k| k > 1 << 20) {
            return Err(Error::TooLarge(
                "explicit engine needs at most 2^20 rows".into(),
            ));
        }

        let mut out = Self {
            tree: tree.clone(),
            rel: rel.clone(),
            mu_x: mu_x.clone(),
            mu_y: mu_y.clone(),
            avg,
            delta_tilde: dt,
            delta,
            k_a,
            k_b,
            epsilon,
            rule: params.rule,
            engine,
            log2_ta,
            log2_tb,
            log2_cut_a,
            log2_cut_b,
            log2_rows,
            rows,
            good_x,
            good_y,
            good_sx,
            good_sy,
            mass_gx,
            log2_qa,
            len_mom,
            log2_qrow,
            bob_law,
            log2_c: f64::INFINITY,
            prepass_runs: params.prepass_runs,
        };
        if params.prepass_runs > 0 {
            let seed = derive_seed(params.seed, &[0x0070_7265_7061_7373]);
            let bits: Vec<f64> = par::map_indexed(params.prepass_runs, |t| {
                let mut rng = rng_for(seed, &[t]);
                let x = out.mu_x.sample_with(rng.random());
                out.alice_bits_log2(x, seed, t, &mut rng)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            out.log2_c = log2_mean(bits.into_iter());
        }
        Ok(out)
    }

    pub fn tree(&self) -> &ClassicalProtocolTree {
        &self.tree
    }

    pub fn relation(&self) -> &Relation {
        &self.rel
    }

    pub fn averaged(&self) -> &AveragedTranscripts {
        &self.avg
    }

    pub fn good_transcripts_alice(&self, x: usize) -> &[bool] {
        &self.good_sx[x]
    }

    pub fn good_transcripts_bob(&self, y: usize) -> &[bool] {
        &self.good_sy[y]
    }

    /// `μ_X(Good_X)` and `μ_Y(Good_Y)`.
    pub fn good_input_mass(&self) -> (f64, f64) {
        let m =
            |d: &Distribution, g: &[bool]| (0..d.len()).filter(|&i| g[i]).map(|i| d.prob(i)).sum();
        (m(&self.mu_x, &self.good_x), m(&self.mu_y, &self.good_y))
    }

    /// `Pr_{P_x}(Good^x)`.
    pub fn alice_good_mass(&self, x: usize) -> f64 {
        self.mass_gx[x]
    }

    /// Per-column acceptance probability for Alice, `Pr_{P_x}(Good^x)/T_a`,
    /// as `log₂`.
    pub fn log2_alice_acceptance(&self, x: usize) -> f64 {
        self.log2_qa[x]
    }

    /// `log₂` of Bob's per-row acceptance probability on `(x, y)`.
    pub fn log2_bob_row_acceptance(&self, x: usize, y: usize) -> f64 {
        self.log2_qrow[x][y]
    }

    /// Probability that Bob rejects all `K` rows on a good pair.
    pub fn bob_abort_probability(&self, x: usize, y: usize) -> f64 {
        let lq = self.log2_qrow[x][y];
        if lq == f64::NEG_INFINITY {
            return 1.0;
        }
        // (1 − q)^K = exp(K ln(1 − q))
        let log2_ka = if lq > -30.0 {
            self.log2_rows + (-(-lq.exp2()).ln_1p()).log2()
        } else {
            self.log2_rows + lq
        };
        (-log2_ka.exp2()).exp()
    }

    /// Law of Bob's accepted transcript given no abort on a good pair.
    pub fn bob_output_law(&self, x: usize, y: usize) -> &[f64] {
        &self.bob_law[x][y]
    }

    /// `p^{x,y}(s) / Pr_{P_{x,y}}(Good^x ∩ Good^y)` on the intersection,
    /// zero elsewhere.
    pub fn conditional_target(&self, x: usize, y: usize) -> Result<Vec<f64>> {
        let d = super::tree::transcript_probs(&self.tree, x, y)?;
        let inside: Vec<f64> = d
            .iter()
            .enumerate()
            .map(|(s, &v)| {
                if self.good_sx[x][s] && self.good_sy[y][s] {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        let z: f64 = inside.iter().sum();
        Ok(inside
            .into_iter()
            .map(|v| if z > 0.0 { v / z } else { 0.0 })
            .collect())
    }

    /// Cut-off: Alice aborts when her message would exceed `c/δ` bits.
    pub fn log2_cutoff(&self) -> f64 {
        self.log2_c - self.delta.log2()
    }

    fn ratio_accept(&self, num: f64, s: usize, log2_t: f64) -> f64 {
        ((num / self.avg.p[s]).log2() - log2_t).exp2()
    }

    /// Walks the shared array row by row: Alice's indices `J_i` and accepted
    /// transcripts.
    fn explicit_rows(&self, x: usize, seed: u64, trial: u64) -> Result<Vec<(u64, usize)>> {
        let k = self.rows.expect("explicit engine has a finite row count");
        let shared = SharedRandomness::new(derive_seed(seed, &[trial, 0]));
        let mut alice = rng_for(seed, &[trial, 1]);
        let mut out = Vec::with_capacity(k as usize);
        for i in 0..k {
            let mut j = 0u64;
            loop {
                if j >= ROW_SAMPLE_CAP {
                    return Err(Error::SampleCap(ROW_SAMPLE_CAP));
                }
                let s = sample_index(&self.avg.p, shared.uniform(i, j, 0));
                j += 1;
                if self.good_sx[x][s]
                    && alice.random::<f64>() < self.ratio_accept(self.avg.px[x][s], s, self.log2_ta)
                {
                    out.push((j, s));
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Indices `J_1..J_K` Alice would send on `x` (explicit engine only).
    pub fn alice_indices(&self, x: usize, seed: u64, trial: u64) -> Result<Vec<u64>> {
        if self.engine != Engine::Explicit {
            return Err(Error::Precondition(
                "indices are only materialized by the explicit engine".into(),
            ));
        }
        Ok(self
            .explicit_rows(x, seed, trial)?
            .into_iter()
            .map(|(j, _)| j)
            .collect())
    }

    /// `log₂` of the bits of the untruncated protocol on `x`.
    fn alice_bits_log2<R: Rng + ?Sized>(
        &self,
        x: usize,
        seed: u64,
        trial: u64,
        rng: &mut R,
    ) -> Result<f64> {
        if !self.good_x[x] {
            return Ok(ABORT_BITS.log2());
        }
        match self.engine {
            Engine::Explicit => {
                let rows = self.explicit_rows(x, seed, trial)?;
                let bits: u64 = rows
                    .iter()
                    .map(|&(j, _)| code_len(j).expect("j >= 1"))
                    .sum();
                Ok((bits as f64 + 1.0).log2())
            }
            _ => Ok(self.jump_bits_log2(x, rng)),
        }
    }

    fn jump_bits_log2<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> f64 {
        match self.rows {
            Some(k) if k <= EXPLICIT_SUM_ROWS => {
                let bits: u64 = (0..k)
                    .map(|_| {
                        code_len_from_floor_log2(sample_floor_log2_geometric(self.log2_qa[x], rng))
                    })
                    .sum();
                (bits as f64 + 1.0).log2()
            }
            _ => {
                // sum of K i.i.d. lengths: K·mean + √K·sd·Z
                let (mean, var) = self.len_mom[x];
                let z: f64 = rng.sample(StandardNormal);
                let rel = var.sqrt() * z / (mean * (self.log2_rows / 2.0).exp2());
                let log2_sum =
                    self.log2_rows + mean.log2() + rel.max(-0.5).ln_1p() / std::f64::consts::LN_2;
                log2_sum + (-log2_sum).exp2().ln_1p() / std::f64::consts::LN_2
            }
        }
    }

    /// One run of the final protocol on `(x, y)`.
    pub fn run_trial(&self, x: usize, y: usize, seed: u64, trial: u64) -> Result<TrialRecord> {
        let mut rng = rng_for(seed, &[trial, 4]);
        let rec = |log2_bits: f64, correct: bool, aborted: bool| TrialRecord {
            trial,
            x,
            y,
            log2_bits,
            correct,
            aborted,
        };
        if !self.good_x[x] {
            return Ok(rec(ABORT_BITS.log2(), false, true));
        }
        let (log2_bits, accepted) = match self.engine {
            Engine::Explicit => {
                let rows = self.explicit_rows(x, seed, trial)?;
                let bits: u64 = rows
                    .iter()
                    .map(|&(j, _)| code_len(j).expect("j >= 1"))
                    .sum();
                let log2_bits = (bits as f64 + 1.0).log2();
                let mut bob = rng_for(seed, &[trial, 2]);
                let accepted = if self.good_y[y] {
                    rows.iter().map(|&(_, s)| s).find(|&s| {
                        self.good_sy[y][s]
                            && bob.random::<f64>()
                                < self.ratio_accept(self.avg.py[y][s], s, self.log2_tb)
                    })
                } else {
                    None
                };
                (log2_bits, accepted)
            }
            _ => {
                let log2_bits = self.jump_bits_log2(x, &mut rng);
                let accepted =
                    if self.good_y[y] && rng.random::<f64>() >= self.bob_abort_probability(x, y) {
                        Some(sample_index(&self.bob_law[x][y], rng.random()))
                    } else {
                        None
                    };
                (log2_bits, accepted)
            }
        };
        if log2_bits > self.log2_cutoff() {
            return Ok(rec(ABORT_BITS.log2(), false, true));
        }
        Ok(match accepted {
            Some(s) => rec(
                log2_bits,
                self.rel.allows(x, y, self.tree.output(y, s)),
                false,
            ),
            None => rec(log2_bits, false, true),
        })
    }

    /// Runs the final protocol on the transcript Bob accepts, returning it
    /// (for law checks). `None` on any abort.
    pub fn accepted_transcript(
        &self,
        x: usize,
        y: usize,
        seed: u64,
        trial: u64,
    ) -> Result<Option<usize>> {
        if !self.good_x[x] || !self.good_y[y] {
            return Ok(None);
        }
        match self.engine {
            Engine::Explicit => {
                let rows = self.explicit_rows(x, seed, trial)?;
                let mut bob = rng_for(seed, &[trial, 2]);
                Ok(rows.iter().map(|&(_, s)| s).find(|&s| {
                    self.good_sy[y][s]
                        && bob.random::<f64>()
                            < self.ratio_accept(self.avg.py[y][s], s, self.log2_tb)
                }))
            }
            _ => {
                let mut rng = rng_for(seed, &[trial, 4]);
                if rng.random::<f64>() < self.bob_abort_probability(x, y) {
                    return Ok(None);
                }
                Ok(Some(sample_index(&self.bob_law[x][y], rng.random())))
            }
        }
    }

    /// Monte Carlo evaluation with inputs drawn from the prior.
    pub fn evaluate(&self, trials: u64, seed: u64, mode: Mode) -> Result<Evaluation> {
        if trials == 0 {
            return Err(Error::OutOfRange("trials must be at least 1".into()));
        }
        let records = par::map_indexed_with(mode, trials, |t| {
            let mut rng = rng_for(seed, &[t, 3]);
            let x = self.mu_x.sample_with(rng.random());
            let y = self.mu_y.sample_with(rng.random());
            self.run_trial(x, y, seed, t)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Evaluation::from_records(records))
    }
}

/// Builds the compressed protocol (see [`CompressedOneWay::build`]).
pub fn compress_multiround_classical(
    tree: &ClassicalProtocolTree,
    rel: &Relation,
    mu_x: &Distribution,
    mu_y: &Distribution,
    params: CompressionParams,
) -> Result<CompressedOneWay> {
    CompressedOneWay::build(tree, rel, mu_x, mu_y, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cproto::builders;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometric_length_law() {
        // q = 1/2: Pr(J = j) = 2^-j
        let pmf = floor_log2_geometric_pmf(-1.0);
        let oracle = |m: u64| -> f64 {
            ((1u64 << m)..(2u64 << m))
                .map(|j| 0.5f64.powi(j as i32))
                .sum()
        };
        for &(m, p) in pmf.iter().take(6) {
            assert!((p - oracle(m)).abs() < 1e-12);
        }
        for lq in [-3.0, -40.0, -400.0] {
            let total: f64 = floor_log2_geometric_pmf(lq).iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-9, "{lq}: {total}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for lq in [-2.5, -45.0] {
            let (mean, var) = len_moments(lq);
            let n = 40_000;
            let s: f64 = (0..n)
                .map(|_| code_len_from_floor_log2(sample_floor_log2_geometric(lq, &mut rng)) as f64)
                .sum();
            assert!((s / n as f64 - mean).abs() < 4.0 * (var / n as f64).sqrt() + 1e-9);
        }
    }

    fn uniform_pair(n: usize, m: usize) -> (Distribution, Distribution) {
        (Distribution::uniform(n), Distribution::uniform(m))
    }

    #[test]
    fn zero_information_tree_sends_ones() {
        let t = builders::constant_tree(4, 4, 2).unwrap();
        let rel = Relation::function(4, 4, 2, |_, _| 0).unwrap();
        let (mx, my) = uniform_pair(4, 4);
        let mut params = CompressionParams::new(0.25, 3);
        params.rule = ThresholdRule::Tight;
        let c = compress_multiround_classical(&t, &rel, &mx, &my, params).unwrap();
        assert_eq!(c.engine, Engine::Explicit);
        assert_eq!(c.rows, Some(4));
        for x in 0..4 {
            assert_eq!(c.alice_indices(x, 9, x as u64).unwrap(), vec![1, 1, 1, 1]);
        }
        let ev = c.evaluate(2000, 5, Mode::Parallel).unwrap();
        assert_eq!(ev.errors, 0);
        // flag bit plus four one-bit codewords
        assert!((ev.mean_bits() - 5.0).abs() < 1e-9);

        let standard =
            compress_multiround_classical(&t, &rel, &mx, &my, CompressionParams::new(0.25, 3))
                .unwrap();
        assert_eq!(standard.engine, Engine::Jump);
        // only Bob's row exhaustion remains, with probability δ^{1/(1-δ)}
        let pa = standard.bob_abort_probability(0, 0);
        assert!((pa - 0.05f64.powf(1.0 / 0.95)).abs() < 1e-9);
        let ev = standard.evaluate(20_000, 5, Mode::Parallel).unwrap();
        assert_eq!(ev.errors, ev.aborts);
        assert!((ev.error_rate - pa).abs() < 4.0 * (pa * (1.0 - pa) / 20_000.0).sqrt());
    }

    #[test]
    fn engines_agree_on_small_thresholds() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let t = builders::random_tree(&mut rng, 2, 2, 1, 2, 2).unwrap();
        let rel = Relation::function(2, 2, 1, |_, _| 0).unwrap();
        let (mx, my) = uniform_pair(2, 2);
        let mut params = CompressionParams::new(0.1, 4);
        params.rule = ThresholdRule::Tight;
        params.prepass_runs = 2000;
        params.engine = Engine::Explicit;
        let ex = compress_multiround_classical(&t, &rel, &mx, &my, params).unwrap();
        params.engine = Engine::Jump;
        let jp = compress_multiround_classical(&t, &rel, &mx, &my, params).unwrap();
        let n = 20_000u64;
        for x in 0..2 {
            for y in 0..2 {
                if !(ex.good_x[x] && ex.good_y[y]) {
                    continue;
                }
                let ts = t.num_transcripts();
                let mut ce = vec![0u64; ts];
                let mut cj = vec![0u64; ts];
                let (mut ae, mut aj) = (0u64, 0u64);
                for i in 0..n {
                    match ex.accepted_transcript(x, y, 11, i).unwrap() {
                        Some(s) => ce[s] += 1,
                        None => ae += 1,
                    }
                    match jp.accepted_transcript(x, y, 11, i).unwrap() {
                        Some(s) => cj[s] += 1,
                        None => aj += 1,
                    }
                }
                let pa = ex.bob_abort_probability(x, y);
                let sd = (pa * (1.0 - pa) / n as f64).sqrt().max(1.0 / n as f64);
                assert!((ae as f64 / n as f64 - pa).abs() < 4.0 * sd);
                assert!((aj as f64 / n as f64 - pa).abs() < 4.0 * sd);
                let target = ex.conditional_target(x, y).unwrap();
                for s in 0..ts {
                    for (counts, kept) in [(&ce, n - ae), (&cj, n - aj)] {
                        let f = counts[s] as f64 / kept as f64;
                        let sd = (target[s] * (1.0 - target[s]) / kept as f64).sqrt();
                        assert!(
                            (f - target[s]).abs() <= 4.0 * sd + 1e-9,
                            "s={s} f={f} t={}",
                            target[s]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn explicit_alice_acceptance_rate() {
        let (t, rel) = builders::and_first_bits(0.1).unwrap();
        let (mx, my) = uniform_pair(4, 4);
        let mut params = CompressionParams::new(0.25, 8);
        params.rule = ThresholdRule::Tight;
        params.engine = Engine::Explicit;
        params.prepass_runs = 100;
        let c = compress_multiround_classical(&t, &rel, &mx, &my, params).unwrap();
        for x in 0..4 {
            let mut cols = 0u64;
            let mut acc = 0u64;
            for trial in 0..300 {
                for j in c.alice_indices(x, 21, trial).unwrap() {
                    cols += j;
                    acc += 1;
                }
            }
            let q = c.log2_alice_acceptance(x).exp2();
            let rate = acc as f64 / cols as f64;
            let sd = (q * (1.0 - q) / cols as f64).sqrt();
            assert!((rate - q).abs() < 4.0 * sd, "x={x} rate={rate} q={q}");
        }
    }

    #[test]
    fn rejects_bad_delta() {
        let t = builders::constant_tree(2, 2, 2).unwrap();
        let rel = Relation::function(2, 2, 2, |_, _| 0).unwrap();
        let (mx, my) = uniform_pair(2, 2);
        assert!(
            compress_multiround_classical(&t, &rel, &mx, &my, CompressionParams::new(0.0, 1))
                .is_err()
        );
        assert!(
            compress_multiround_classical(&t, &rel, &mx, &my, CompressionParams::new(0.6, 1))
                .is_err()
        );
    }
}
