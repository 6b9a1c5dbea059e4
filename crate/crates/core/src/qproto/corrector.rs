use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::par;
use crate::qmath::{
    relative_entropy, steering_kraus, support_substate_weight, uhlmann_align, BipartitePureState,
};

use super::ensemble::{average_state, Ensemble};

/// Smallest success probability accepted.
pub const ALPHA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrectorKind {
    /// Steer to the input's marginal, rotate onto `|φ_x⟩`, then reject down
    /// to the common success probability.
    Steer,
    /// Swap `|x⟩` into the input register from a fresh ancilla and succeed
    /// with probability `α` regardless of the state.
    SwapIn,
}

/// Success-tested local operations `{ℳ_x}` on the owner's side with common
/// success probability `α`.
#[derive(Debug, Clone)]
pub struct Corrector {
    ensemble: Ensemble,
    reference: BipartitePureState,
    pub delta: f64,
    pub alpha: f64,
    /// `k = I(X : O)`.
    pub information: f64,
    /// Good inputs satisfy `S(ρ_x‖ρ) ≤ threshold = 4k/δ`.
    pub threshold: f64,
    pub divergence: Vec<f64>,
    pub good: Vec<bool>,
    /// Exact substate weight of `ρ_x` in `ρ` (0 for bad inputs).
    pub weights: Vec<f64>,
    steer: Vec<Option<CMat>>,
}

/// Measured conditions of a corrector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorAudit {
    pub alpha: f64,
    /// `max_x |Tr ℳ_x(σ) − α|`.
    pub success_deviation: f64,
    /// `max_x` weight of `ℳ_x(σ)` outside `|x⟩` on the input register.
    pub register_leak: f64,
    /// `E_μ ‖σ_x − ℳ_x(σ)/α‖₁`.
    pub residual: f64,
    pub delta: f64,
    pub good_mass: f64,
}

impl CorrectorAudit {
    pub fn passes(&self, success_tol: f64) -> bool {
        self.success_deviation <= success_tol
            && self.register_leak == 0.0
            && self.residual <= self.delta
    }
}

impl Corrector {
    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    /// The input-independent state `σ` the corrector acts on.
    pub fn reference(&self) -> &BipartitePureState {
        &self.reference
    }

    pub fn kind(&self, x: usize) -> CorrectorKind {
        if self.steer[x].is_some() {
            CorrectorKind::Steer
        } else {
            CorrectorKind::SwapIn
        }
    }

    /// Kraus operators of `ℳ_x` on `X ⊗ R`; `Σ K†K ≤ I`.
    pub fn kraus_ops(&self, x: usize) -> Vec<CMat> {
        if let Some(k) = &self.steer[x] {
            return vec![k.clone()];
        }
        let (dx, dr) = (self.ensemble.dim_x(), self.ensemble.dim_r());
        let a = c(self.alpha.sqrt());
        (0..dx)
            .map(|from| {
                let mut k = CMat::zeros(dx * dr, dx * dr);
                for r in 0..dr {
                    k[(x * dr + r, from * dr + r)] = a;
                }
                k
            })
            .collect()
    }

    /// `ℳ_x(σ)` as a list of unnormalized vectors `v_i` with
    /// `ℳ_x(σ) = Σ |v_i⟩⟨v_i|`.
    pub fn post_state(&self, x: usize) -> Vec<CVec> {
        self.kraus_ops(x)
            .iter()
            .map(|k| {
                self.reference
                    .apply_a(k)
                    .expect("dimensions fixed at construction")
            })
            .collect()
    }

    pub fn success_probability(&self, x: usize) -> f64 {
        self.post_state(x).iter().map(|v| v.norm_squared()).sum()
    }

    /// `‖σ_x − ℳ_x(σ)/α‖₁`.
    pub fn residual(&self, x: usize) -> f64 {
        let post = self.post_state(x);
        let mut vs = vec![self.ensemble.state_vector(x)];
        let mut ws = vec![1.0];
        for v in post {
            vs.push(v);
            ws.push(-1.0 / self.alpha);
        }
        linalg::trace_norm_low_rank(&vs, &ws)
    }

    pub fn audit(&self) -> CorrectorAudit {
        let e = &self.ensemble;
        let block = e.dim_r() * e.dim_o();
        let per_x: Vec<(f64, f64, f64)> = par::map_indexed(e.dim_x() as u64, |x| {
            let x = x as usize;
            let post = self.post_state(x);
            let p: f64 = post.iter().map(|v| v.norm_squared()).sum();
            let leak: f64 = post
                .iter()
                .map(|v| {
                    v.iter()
                        .enumerate()
                        .filter(|(i, _)| i / block != x)
                        .map(|(_, z)| z.norm_sqr())
                        .sum::<f64>()
                })
                .sum();
            let res = if e.mu().prob(x) > 0.0 {
                self.residual(x)
            } else {
                0.0
            };
            ((p - self.alpha).abs(), leak, res)
        });
        CorrectorAudit {
            alpha: self.alpha,
            success_deviation: per_x.iter().map(|t| t.0).fold(0.0, f64::max),
            register_leak: per_x.iter().map(|t| t.1).fold(0.0, f64::max),
            residual: per_x
                .iter()
                .enumerate()
                .map(|(x, t)| e.mu().prob(x) * t.2)
                .sum(),
            delta: self.delta,
            good_mass: (0..e.dim_x())
                .filter(|&x| self.good[x])
                .map(|x| e.mu().prob(x))
                .sum(),
        }
    }
}

/// Builds a corrector for `{|φ_x⟩}` against `|φ⟩ = Σ √μ(x)|φ_x⟩` by exact
/// steering.
///
/// For good `x` the operator is `√(α/q_x) · (|x⟩⟨x| ⊗ I) · U_x · M_x`, where
/// `M_x` steers the `O` marginal from `ρ` to `ρ_x` with the full substate
/// weight, `U_x` is the Uhlmann rotation of the steered state onto `|φ_x⟩`
/// and `q_x` is the success probability before the final rejection.
pub fn build_corrector(ensemble: &Ensemble, delta: f64) -> Result<Corrector> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} not in (0,1)")));
    }
    let e = ensemble;
    let dx = e.dim_x();
    let block = e.dim_r() * e.dim_o();
    let reference = average_state(e);
    let rho = e.average_marginal();
    let information = e.information();
    let threshold = 4.0 * information / delta;
    let divergence: Vec<f64> = (0..dx)
        .map(|x| {
            if e.mu().prob(x) > 0.0 {
                relative_entropy(&e.marginal(x), &rho)
            } else {
                Ok(f64::INFINITY)
            }
        })
        .collect::<Result<_>>()?;
    let good: Vec<bool> = divergence.iter().map(|&d| d <= threshold + 1e-9).collect();

    let steered: Vec<Option<(CMat, f64, f64)>> = par::map_indexed(dx as u64, |x| {
        let x = x as usize;
        if !good[x] {
            return Ok(None);
        }
        let target = e.marginal(x);
        let w = support_substate_weight(target.matrix(), rho.matrix());
        let m = steering_kraus(&reference, &target, w)?;
        let (_, post) = m.apply(&reference)?;
        let post = post.ok_or(Error::AlphaUnderflow(w))?;
        let u = uhlmann_align(&post, &e.state(x))?;
        let mut k = &u * m.matrix();
        // keep only the |x⟩ rows of the input register
        let dr = e.dim_r();
        for row in 0..k.nrows() {
            if row / dr != x {
                k.row_mut(row).fill(linalg::ZERO);
            }
        }
        let v = reference.apply_a(&k)?;
        let q = v.rows(x * block, block).norm_squared();
        Ok(Some((k, w, q)))
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let alpha = steered
        .iter()
        .flatten()
        .map(|t| t.2)
        .fold(f64::INFINITY, f64::min);
    if !(alpha >= ALPHA_FLOOR) {
        return Err(Error::AlphaUnderflow(if alpha.is_finite() {
            alpha
        } else {
            0.0
        }));
    }
    let mut weights = vec![0.0; dx];
    let mut steer = vec![None; dx];
    for (x, s) in steered.into_iter().enumerate() {
        if let Some((k, w, q)) = s {
            weights[x] = w;
            steer[x] = Some(k * c((alpha / q).sqrt()));
        }
    }
    Ok(Corrector {
        ensemble: e.clone(),
        reference,
        delta,
        alpha,
        information,
        threshold,
        divergence,
        good,
        weights,
        steer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cinfo::Distribution;
    use crate::linalg::{basis, kron_vec, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_information_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let common = random_state(4, &mut rng);
        let psi = (0..3)
            .map(|_| {
                // different owner-side states, same message marginal
                let r = random_state(2, &mut rng);
                kron_vec(&r, &common)
            })
            .collect();
        let e = Ensemble::new(2, 4, psi, Distribution::uniform(3)).unwrap();
        let corr = build_corrector(&e, 0.2).unwrap();
        assert!((corr.alpha - 1.0).abs() < 1e-9);
        let a = corr.audit();
        assert!(a.residual < 1e-7, "{a:?}");
        assert!(a.passes(1e-9));
    }

    #[test]
    fn orthogonal_messages_force_one_over_d() {
        for d in [2usize, 4] {
            let psi = (0..d).map(|x| basis(d, x)).collect();
            let e = Ensemble::new(1, d, psi, Distribution::uniform(d)).unwrap();
            let corr = build_corrector(&e, 0.2).unwrap();
            assert!((corr.alpha - 1.0 / d as f64).abs() < 1e-10);
            assert!(corr.good.iter().all(|&g| g));
            let a = corr.audit();
            assert!(a.passes(1e-9) && a.residual < 1e-7, "{a:?}");
        }
    }

    #[test]
    fn random_ensembles_meet_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let psi = (0..4).map(|_| random_state(8, &mut rng)).collect();
            let e = Ensemble::new(2, 4, psi, Distribution::uniform(4)).unwrap();
            let corr = build_corrector(&e, 0.2).unwrap();
            let a = corr.audit();
            assert!(a.passes(1e-9), "{a:?}");
            assert!(a.good_mass >= 1.0 - 0.2 / 4.0 - 1e-12);
        }
    }

    #[test]
    fn swap_in_for_bad_inputs() {
        // a rare input far from the average exceeds the Markov cut
        let psi = vec![basis(2, 0), basis(2, 1)];
        let mu = Distribution::from_probs(vec![1.0 - 1e-4, 1e-4]).unwrap();
        let e = Ensemble::new(1, 2, psi, mu).unwrap();
        let corr = build_corrector(&e, 0.5).unwrap();
        assert_eq!(corr.kind(1), CorrectorKind::SwapIn);
        assert_eq!(corr.kind(0), CorrectorKind::Steer);
        assert!((corr.alpha - (1.0 - 1e-4)).abs() < 1e-10);
        let a = corr.audit();
        assert!(a.success_deviation < 1e-12);
        assert_eq!(a.register_leak, 0.0);
        // swap-in moves the average message, not the input's one
        assert!(corr.residual(1) > 1.0);
        assert!(a.residual <= 2.0 * 1e-4 + 1e-9);
    }
}
