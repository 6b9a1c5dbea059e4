//! Exact remote state preparation: Alice, knowing `x`, leaves Bob holding
//! the pure state `ρ_x` exactly, using identical shared copies of a
//! purification of a fixed full-rank `σ` and a prefix-coded copy index.

use rand::Rng;

use crate::cinfo::code_len;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::par::{self, Mode};
use crate::qmath::density::FULL_RANK_TOL;
use crate::qmath::{
    max_substate_weight, purify, uhlmann_align, BipartitePureState, DensityMatrix, Side,
};
use crate::rng::rng_for;

/// Additive slack on the expected-bits bound from the prefix code.
pub const C_CODE: f64 = 4.0;

/// Pure targets `ρ_x = |φ_x⟩⟨φ_x|` and a full-rank reference `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErspInstance {
    states: Vec<CVec>,
    sigma: DensityMatrix,
}

impl ErspInstance {
    pub fn new(states: Vec<CVec>, sigma: DensityMatrix) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Malformed("no target states".into()));
        }
        let min = sigma.min_eigenvalue();
        if min <= FULL_RANK_TOL {
            return Err(Error::Singular(min));
        }
        super::qproto::check_dim(4 * sigma.dim() * sigma.dim())?;
        for (x, v) in states.iter().enumerate() {
            if v.len() != sigma.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "state {x} has length {}",
                    v.len()
                )));
            }
            let n = v.norm_squared();
            if (n - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(n));
            }
        }
        Ok(Self { states, sigma })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn state(&self, x: usize) -> &CVec {
        &self.states[x]
    }

    /// `T_x = Tr σ⁻¹ρ_x = ⟨φ_x|σ⁻¹|φ_x⟩`.
    pub fn trace_inverse(&self, x: usize) -> f64 {
        let inv = linalg::herm_apply(self.sigma.matrix(), |v| 1.0 / v);
        let v = &self.states[x];
        linalg::inner(v, &(&inv * v)).re
    }

    /// Substate weight `k_x = 1/T_x` of `ρ_x` in `σ`.
    pub fn weight(&self, x: usize) -> f64 {
        1.0 / self.trace_inverse(x)
    }

    /// `Σ_i |i⟩_A|√σ i⟩_B`, with Alice's register padded by a flag qubit in
    /// `|0⟩` so that it matches the `flag ⊗ K` layout.
    pub fn shared_copy(&self) -> BipartitePureState {
        let d = self.dim();
        let p = purify(&self.sigma);
        let mut amps = CVec::zeros(2 * d * d);
        amps.rows_mut(0, d * d).copy_from(p.amplitudes());
        BipartitePureState::new(2 * d, d, amps).expect("padding keeps the norm")
    }
}

/// `√k|1⟩|0̄⟩|φ⟩ + √(1−k)|0⟩|θ⟩` on `(flag ⊗ K) ⊗ H`, where `|θ⟩` purifies
/// `(σ − kρ)/(1 − k)` and `|0̄⟩` is the first basis vector of `K`.
pub fn build_psi_rho(inst: &ErspInstance, x: usize) -> Result<BipartitePureState> {
    let d = inst.dim();
    let phi = inst.state(x);
    let rho = DensityMatrix::pure(phi)?;
    let k = max_substate_weight(&rho, inst.sigma())?;
    let mut amps = CVec::zeros(2 * d * d);
    // flag = 1 block: |0̄⟩_K ⊗ |φ⟩_H
    for h in 0..d {
        amps[d * d + h] = phi[h] * c(k.sqrt());
    }
    if 1.0 - k > 1e-15 {
        let rest = inst.sigma().matrix() - linalg::outer(phi) * c(k);
        let min = linalg::eigvalsh(&rest).last().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::NotPsd(min));
        }
        let tau = DensityMatrix::from_unnormalized(linalg::herm_apply(&rest, |v| v.max(0.0)))?;
        let theta = purify(&tau);
        amps.rows_mut(0, d * d)
            .copy_from(&(theta.amplitudes() * c((1.0 - k).sqrt())));
    }
    BipartitePureState::normalized(2 * d, d, amps)
}

/// Alice's fixed per-input preparation on one shared copy.
#[derive(Debug, Clone)]
pub struct ErspStep {
    /// Unitary on `flag ⊗ K` taking the shared copy to `|ψ⟩_{ρ_x}`.
    pub unitary: CMat,
    /// Probability of reading flag `1`.
    pub success: f64,
    /// Fidelity of Bob's state with `ρ_x` after flag `1`.
    pub fidelity: f64,
}

/// Aligns the shared copy with `|ψ⟩_{ρ_x}` and reads off the flag statistics
/// from the resulting state.
pub fn prepare_step(inst: &ErspInstance, x: usize) -> Result<ErspStep> {
    let d = inst.dim();
    let shared = inst.shared_copy();
    let target = build_psi_rho(inst, x)?;
    let unitary = uhlmann_align(&shared, &target)?;
    let v = shared.apply_a(&unitary)?;
    let flagged = CVec::from_fn(
        2 * d * d,
        |i, _| if i >= d * d { v[i] } else { linalg::ZERO },
    );
    let success = flagged.norm_squared();
    let fidelity = if success > 0.0 {
        let post = BipartitePureState::normalized(2 * d, d, flagged)?;
        post.reduced(Side::B).expectation(inst.state(x))
    } else {
        0.0
    };
    Ok(ErspStep {
        unitary,
        success,
        fidelity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErspRun {
    pub trial: u64,
    pub x: usize,
    /// First successful copy, `None` when the budget runs out.
    pub j: Option<u64>,
    /// Prefix-code length of `J`; a budget abort is charged as the code
    /// length of `budget + 1`.
    pub bits: u64,
    /// Fidelity of Bob's final state with `ρ_x` (0 on abort).
    pub fidelity: f64,
}

/// Draws `J`, the index of Alice's first flag `1` among `budget` copies.
pub fn sample_first_success<R: Rng + ?Sized>(p: f64, budget: u64, rng: &mut R) -> Option<u64> {
    if p >= 1.0 {
        return Some(1);
    }
    if p <= 0.0 {
        return None;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let j = (u.ln() / (-p).ln_1p()).floor() + 1.0;
    (j <= budget as f64).then_some(j as u64)
}

/// One run of the protocol for input `x`.
pub fn run_ersp(
    inst: &ErspInstance,
    x: usize,
    budget: u64,
    seed: u64,
    trial: u64,
) -> Result<ErspRun> {
    let step = prepare_step(inst, x)?;
    run_with_step(&step, x, budget, seed, trial)
}

fn run_with_step(step: &ErspStep, x: usize, budget: u64, seed: u64, trial: u64) -> Result<ErspRun> {
    if budget == 0 {
        return Err(Error::OutOfRange("copy budget must be at least 1".into()));
    }
    let mut rng = rng_for(seed, &[trial, x as u64]);
    let j = sample_first_success(step.success, budget, &mut rng);
    let bits = code_len(j.unwrap_or(budget.saturating_add(1)))?;
    let fidelity = if j.is_some() { step.fidelity } else { 0.0 };
    Ok(ErspRun {
        trial,
        x,
        j,
        bits,
        fidelity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErspEvaluation {
    pub x: usize,
    pub trials: u64,
    pub aborts: u64,
    /// `k_x` from the aligned copy.
    pub success: f64,
    pub mean_j: f64,
    /// Standard error of `mean_j`.
    pub sigma_j: f64,
    pub mean_bits: f64,
    /// `log₂ T + 2·max(log₂ log₂ T, 0) + C_CODE`.
    pub bits_bound: f64,
    pub min_fidelity: f64,
    pub runs: Vec<ErspRun>,
}

/// `log₂ T + 2·max(log₂ log₂ T, 0) + C_CODE`, with `log log` clamped to 0
/// for `T ≤ 2`.
pub fn bits_bound(t: f64) -> f64 {
    let l = t.log2();
    let ll = if l > 1.0 { l.log2() } else { 0.0 };
    l + 2.0 * ll + C_CODE
}

/// `trials` seeded runs for input `x`, all on the same prepared step.
pub fn evaluate_ersp(
    inst: &ErspInstance,
    x: usize,
    budget: u64,
    trials: u64,
    seed: u64,
    mode: Mode,
) -> Result<ErspEvaluation> {
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be at least 1".into()));
    }
    let step = prepare_step(inst, x)?;
    let runs = par::map_indexed_with(mode, trials, |t| run_with_step(&step, x, budget, seed, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ok: Vec<&ErspRun> = runs.iter().filter(|r| r.j.is_some()).collect();
    let n = ok.len().max(1) as f64;
    let mean_j = ok.iter().map(|r| r.j.unwrap() as f64).sum::<f64>() / n;
    let var = ok
        .iter()
        .map(|r| (r.j.unwrap() as f64 - mean_j).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    Ok(ErspEvaluation {
        x,
        trials,
        aborts: (runs.len() - ok.len()) as u64,
        success: step.success,
        mean_j,
        sigma_j: (var / n).sqrt(),
        mean_bits: runs.iter().map(|r| r.bits as f64).sum::<f64>() / trials as f64,
        bits_bound: bits_bound(inst.trace_inverse(x)),
        min_fidelity: ok.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min),
        runs,
    })
}
