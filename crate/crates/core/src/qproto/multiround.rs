use rand::Rng;
use rand_distr::{Binomial, Distribution as _};

use crate::cinfo::{sample_index, JointDistribution};
use crate::cproto::evaluate::sample_inputs;
use crate::cproto::{Evaluation, Relation, TrialRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, CVec};
use crate::par::{self, Mode};
use crate::qmath::apply_on_registers;
use crate::rng::rng_for;

use super::check_dim;
use super::corrector::{build_corrector, Corrector};
use super::two_way::QuantumTwoWayProtocol;

/// Largest subset size for which binomial tables are built.
pub const MAX_SUBSET: u64 = 1 << 26;

/// Exact quantities of the zero-communication stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiroundClaims {
    /// `r / (αβ)`.
    pub ratio: f64,
    /// `δ_b / 2`.
    pub ratio_bound: f64,
    /// `‖ρ − ρ'‖₁`.
    pub trace_distance: f64,
    /// `2 δ_b`.
    pub trace_distance_bound: f64,
    /// `Pr_μ[|r_xy/r − 1| ≥ 2√δ_b]`.
    pub tail_mass: f64,
    /// `√δ_b`.
    pub tail_bound: f64,
}

impl MultiroundClaims {
    pub fn ratio_holds(&self, tol: f64) -> bool {
        (self.ratio - 1.0).abs() <= self.ratio_bound + tol
    }

    pub fn trace_distance_holds(&self, tol: f64) -> bool {
        self.trace_distance <= self.trace_distance_bound + tol
    }

    pub fn tail_holds(&self, tol: f64) -> bool {
        self.tail_mass <= self.tail_bound + tol
    }
}

/// Two-message replacement for the first `t'` rounds: Alice sends a set of
/// successful copy indices, Bob answers with a jointly successful one, and
/// both resume the original protocol on that copy.
#[derive(Debug, Clone)]
pub struct CompressedMultiround {
    protocol: QuantumTwoWayProtocol,
    rel: Relation,
    mu: JointDistribution,
    pub t_prime: usize,
    pub delta: f64,
    /// `(δ/10)²`.
    pub delta_b: f64,
    /// `δ_b β / 2`.
    pub delta_a: f64,
    pub alice: Corrector,
    pub bob: Corrector,
    pub alpha: f64,
    pub beta: f64,
    /// `I(X : Bob)` and `I(Y : Alice)` after round `t'`.
    pub k_a: f64,
    pub k_b: f64,
    /// `r_xy = Tr ℳ_y ℳ_x(σ)`.
    pub r_xy: Vec<Vec<f64>>,
    /// `r = E_μ r_xy`.
    pub r: f64,
    /// `⌈(10/r) log₂(1/δ)⌉` shared copies.
    pub copies: u64,
    /// `⌊2αK⌋`, the largest set Alice sends.
    pub max_set: u64,
    /// Exact error of the original protocol.
    pub epsilon: f64,
    pub claims: MultiroundClaims,
    laws: Vec<Vec<Vec<f64>>>,
    log2_binom: Vec<f64>,
}

/// Builds both correctors on the state after round `t'` (odd) and the
/// Two-message protocol with `K = ⌈(10/r) log₂(1/δ)⌉` copies.
pub fn compress_multiround_quantum(
    p: &QuantumTwoWayProtocol,
    rel: &Relation,
    mu: &JointDistribution,
    t_prime: usize,
    delta: f64,
) -> Result<CompressedMultiround> {
    p.check_task(rel, mu)?;
    if !mu.is_product(1e-12) {
        return Err(Error::Precondition(
            "multi-round compression needs a product distribution".into(),
        ));
    }
    if t_prime.is_multiple_of(2) || t_prime > p.t() {
        return Err(Error::OutOfRange(format!(
            "t' = {t_prime} must be odd and at most {}",
            p.t()
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} not in (0,1)")));
    }
    let (nx, ny) = (p.nx(), p.ny());
    let w = p.work_dim();
    check_dim(nx * w * ny)?;
    let (mu_x, mu_y) = (mu.marginal_x(), mu.marginal_y());
    let epsilon = p.exact_error(rel, mu)?;

    let delta_b = (delta / 10.0).powi(2);
    let bob = build_corrector(&p.bob_ensemble(&mu_x, &mu_y, t_prime)?, delta_b)?;
    let beta = bob.alpha;
    let delta_a = delta_b * beta / 2.0;
    let alice_ens = p.alice_ensemble(&mu_x, &mu_y, t_prime)?;
    let alice = build_corrector(&alice_ens, delta_a)?;
    let alpha = alice.alpha;
    let [da, dc, db] = p.dims();
    let dims = [nx, da, dc, db, ny];

    let alice_post: Vec<Vec<CVec>> = (0..nx).map(|x| alice.post_state(x)).collect();
    // per pair: (r_xy, work-register vectors of ℳ_y ℳ_x(σ))
    let pairs = par::map_indexed((nx * ny) as u64, |i| {
        let (x, y) = (i as usize / ny, i as usize % ny);
        let mut out = Vec::new();
        for v in &alice_post[x] {
            for k in bob.kraus_ops(y) {
                let u = apply_on_registers(v, &dims, &[4, 2, 3], &k).expect("dimensions fixed");
                out.push(CVec::from_fn(w, |j, _| u[(x * w + j) * ny + y]));
            }
        }
        let r: f64 = out.iter().map(|v| v.norm_squared()).sum();
        (r, out)
    });
    let r_xy: Vec<Vec<f64>> = (0..nx)
        .map(|x| (0..ny).map(|y| pairs[x * ny + y].0).collect())
        .collect();
    let r: f64 = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| mu.table()[x][y] * r_xy[x][y])
        .sum();
    if !(r > 0.0) {
        return Err(Error::AlphaUnderflow(r));
    }

    let per_pair = par::map_indexed((nx * ny) as u64, |i| {
        let (x, y) = (i as usize / ny, i as usize % ny);
        let (rxy, vs) = (&pairs[i as usize].0, &pairs[i as usize].1);
        let m = mu.table()[x][y];
        let honest = p.state(x, y, t_prime);
        let dist = if m > 0.0 {
            let mut vecs = vec![honest];
            let mut ws = vec![m];
            for v in vs {
                vecs.push(v.clone());
                ws.push(-m / r);
            }
            linalg::trace_norm_low_rank(&vecs, &ws)
        } else {
            0.0
        };
        let law = if *rxy > 1e-300 {
            let resumed: Vec<CVec> = vs
                .iter()
                .map(|v| p.run_rounds(v, t_prime, p.t(), x, y))
                .collect();
            p.output_law_mixed(&resumed, y)
        } else {
            vec![0.0; p.nz()]
        };
        (dist, law)
    });
    let trace_distance = per_pair.iter().map(|t| t.0).sum();
    let cut = 2.0 * delta_b.sqrt();
    let tail_mass = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .filter(|&(x, y)| (r_xy[x][y] / r - 1.0).abs() >= cut)
        .map(|(x, y)| mu.table()[x][y])
        .sum();
    let claims = MultiroundClaims {
        ratio: r / (alpha * beta),
        ratio_bound: delta_b / 2.0,
        trace_distance,
        trace_distance_bound: 2.0 * delta_b,
        tail_mass,
        tail_bound: delta_b.sqrt(),
    };
    let mut laws = vec![Vec::with_capacity(ny); nx];
    for (i, (_, law)) in per_pair.into_iter().enumerate() {
        laws[i / ny].push(law);
    }

    let copies = (10.0 / r * (1.0 / delta).log2()).ceil();
    if copies > 1e15 {
        return Err(Error::TooLarge(format!("{copies} shared copies")));
    }
    let copies = copies as u64;
    let max_set = (2.0 * alpha * copies as f64).floor() as u64;
    if max_set > MAX_SUBSET {
        return Err(Error::TooLarge(format!("subsets of size {max_set}")));
    }
    let mut log2_binom = Vec::with_capacity(max_set as usize + 1);
    let mut acc = 0.0f64;
    for s in 0..=max_set.min(copies) {
        log2_binom.push(acc);
        acc += ((copies - s) as f64 / (s + 1) as f64).log2();
    }

    Ok(CompressedMultiround {
        protocol: p.clone(),
        rel: rel.clone(),
        mu: mu.clone(),
        t_prime,
        delta,
        delta_b,
        delta_a,
        k_a: alice.information,
        k_b: bob.information,
        alice,
        bob,
        alpha,
        beta,
        r_xy,
        r,
        copies,
        max_set,
        epsilon,
        claims,
        laws,
        log2_binom,
    })
}

impl CompressedMultiround {
    pub fn protocol(&self) -> &QuantumTwoWayProtocol {
        &self.protocol
    }

    /// Outcome law after resuming on the jointly successful copy.
    pub fn resumed_law(&self, x: usize, y: usize) -> &[f64] {
        &self.laws[x][y]
    }

    /// Bits for the size of Alice's set, with one extra value for abort.
    pub fn size_bits(&self) -> u32 {
        bits_for(self.copies + 2)
    }

    /// Bits for Bob's index into the set, with one extra value for abort.
    pub fn bob_bits(&self) -> u32 {
        bits_for(self.max_set + 1)
    }

    /// `⌈log₂ C(K, s)⌉` for `s ≤ max_set`.
    pub fn subset_bits(&self, s: u64) -> u32 {
        let v = self.log2_binom[s as usize];
        (v - 1e-9).ceil().max(0.0) as u32
    }

    /// Largest first message: set size plus subset index.
    pub fn max_alice_bits(&self) -> u32 {
        self.size_bits()
            + (0..=self.max_set.min(self.copies))
                .map(|s| self.subset_bits(s))
                .max()
                .unwrap_or(0)
    }

    /// Probability that the protocol reaches the resumed stage on `(x, y)`.
    pub fn continue_probability(&self, x: usize, y: usize) -> f64 {
        let q = (self.r_xy[x][y] / self.alpha).clamp(0.0, 1.0);
        let hit = |s: u64| {
            if q >= 1.0 {
                if s > 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                -((-q).ln_1p() * s as f64).exp_m1()
            }
        };
        if self.alpha >= 1.0 {
            return hit(self.copies);
        }
        let (k, a) = (self.copies as f64, self.alpha);
        let ln_q = (-a).ln_1p();
        let ln_ratio = (a / (1.0 - a)).ln();
        let mut ln_pmf = k * ln_q;
        let mut total = 0.0;
        for s in 0..=self.max_set.min(self.copies) {
            // Bob succeeds on at least one of the s copies
            total += ln_pmf.exp() * hit(s);
            ln_pmf += ((k - s as f64) / (s as f64 + 1.0)).ln() + ln_ratio;
        }
        total.min(1.0)
    }

    /// Exact error: aborts count as errors.
    pub fn exact_error(&self) -> f64 {
        let (nx, ny) = (self.protocol.nx(), self.protocol.ny());
        par::map_indexed((nx * ny) as u64, |i| {
            let (x, y) = (i as usize / ny, i as usize % ny);
            let w = self.mu.table()[x][y];
            if w == 0.0 {
                return 0.0;
            }
            let go = self.continue_probability(x, y);
            let bad: f64 = (0..self.protocol.nz())
                .filter(|&z| !self.rel.allows(x, y, z))
                .map(|z| self.laws[x][y][z])
                .sum();
            w * (1.0 - go + go * bad)
        })
        .into_iter()
        .sum()
    }

    pub fn run_trial(&self, x: usize, y: usize, seed: u64, trial: u64) -> TrialRecord {
        let mut rng = rng_for(seed, &[trial, 1]);
        let s = if self.alpha >= 1.0 {
            self.copies
        } else {
            Binomial::new(self.copies, self.alpha)
                .expect("alpha in (0,1)")
                .sample(&mut rng)
        };
        let record = |bits: u32, correct: bool, aborted: bool| TrialRecord {
            trial,
            x,
            y,
            log2_bits: (bits as f64).log2(),
            correct,
            aborted,
        };
        if s > self.max_set {
            return record(self.size_bits(), false, true);
        }
        let bits = self.size_bits() + self.subset_bits(s) + self.bob_bits();
        let q = (self.r_xy[x][y] / self.alpha).clamp(0.0, 1.0);
        let miss = if q >= 1.0 {
            if s > 0 {
                0.0
            } else {
                1.0
            }
        } else {
            ((-q).ln_1p() * s as f64).exp()
        };
        if rng.random::<f64>() < miss {
            return record(bits, false, true);
        }
        let z = sample_index(&self.laws[x][y], rng.random());
        record(bits, self.rel.allows(x, y, z), false)
    }

    pub fn evaluate(&self, trials: u64, seed: u64, mode: Mode) -> Result<Evaluation> {
        if trials == 0 {
            return Err(Error::OutOfRange("trials must be at least 1".into()));
        }
        let records = par::map_indexed_with(mode, trials, |t| {
            let mut rng = rng_for(seed, &[t, 0]);
            let (x, y) = sample_inputs(&self.mu, &mut rng);
            self.run_trial(x, y, seed, t)
        });
        Ok(Evaluation::from_records(records))
    }

    /// Monte Carlo estimate of the tail mass of `r_xy / r` and its standard
    /// error.
    pub fn tail_monte_carlo(&self, trials: u64, seed: u64, mode: Mode) -> (f64, f64) {
        let cut = 2.0 * self.delta_b.sqrt();
        let hits = par::map_indexed_with(mode, trials, |t| {
            let mut rng = rng_for(seed, &[t, 2]);
            let (x, y) = sample_inputs(&self.mu, &mut rng);
            (self.r_xy[x][y] / self.r - 1.0).abs() >= cut
        });
        let f = hits.iter().filter(|&&h| h).count() as f64 / trials.max(1) as f64;
        (f, (f * (1.0 - f) / trials.max(1) as f64).sqrt())
    }

    /// Fidelity between two ways of producing the two-copy state after
    /// Alice acts with Kraus operators `(i1, i2)` on copies 1 and 2 and Bob
    /// acts with `j` on copy 1 only: in either order, against
    /// `ℳ_y ℳ_x(σ) ⊗ ℳ_x(σ)` built copy by copy. Returns the smaller one.
    pub fn commutation_fidelity(
        &self,
        x: usize,
        y: usize,
        i1: usize,
        i2: usize,
        j: usize,
    ) -> Result<f64> {
        let p = &self.protocol;
        let [da, dc, db] = p.dims();
        let one = [p.nx(), da, dc, db, p.ny()];
        let d = one.iter().product::<usize>();
        check_dim(d * d)?;
        let a_ops = self.alice.kraus_ops(x);
        let b_ops = self.bob.kraus_ops(y);
        let (a1, a2, b) = (
            a_ops
                .get(i1)
                .ok_or_else(|| Error::OutOfRange(format!("Kraus index {i1}")))?,
            a_ops
                .get(i2)
                .ok_or_else(|| Error::OutOfRange(format!("Kraus index {i2}")))?,
            b_ops
                .get(j)
                .ok_or_else(|| Error::OutOfRange(format!("Kraus index {j}")))?,
        );
        let sigma = self.alice.reference().amplitudes().clone();
        let two: Vec<usize> = one.iter().chain(one.iter()).copied().collect();
        let pair = linalg::kron_vec(&sigma, &sigma);
        let alice_both = |v: &CVec| -> Result<CVec> {
            let v = apply_on_registers(v, &two, &[0, 1], a1)?;
            apply_on_registers(&v, &two, &[5, 6], a2)
        };
        let bob_first = |v: &CVec| apply_on_registers(v, &two, &[4, 2, 3], b);
        let ab = bob_first(&alice_both(&pair)?)?;
        let ba = alice_both(&bob_first(&pair)?)?;
        let c1 = apply_on_registers(
            &apply_on_registers(&sigma, &one, &[0, 1], a1)?,
            &one,
            &[4, 2, 3],
            b,
        )?;
        let c2 = apply_on_registers(&sigma, &one, &[0, 1], a2)?;
        let target = linalg::kron_vec(&c1, &c2);
        let fid = |u: &CVec, v: &CVec| {
            let (nu, nv) = (u.norm_squared(), v.norm_squared());
            if nu < 1e-300 && nv < 1e-300 {
                1.0
            } else {
                linalg::inner(u, v).norm_sqr() / (nu * nv)
            }
        };
        Ok(fid(&ab, &target).min(fid(&ba, &target)))
    }
}

fn bits_for(values: u64) -> u32 {
    if values <= 1 {
        0
    } else {
        64 - (values - 1).leading_zeros()
    }
}
