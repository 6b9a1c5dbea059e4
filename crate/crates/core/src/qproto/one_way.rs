use rand::Rng;

use crate::cinfo::{sample_index, Distribution, JointDistribution};
use crate::cproto::evaluate::sample_inputs;
use crate::cproto::{Evaluation, Relation, TrialRecord};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::par::{self, Mode};
use crate::qmath::{reduce_vector, DensityMatrix};
use crate::rng::rng_for;

use super::check_dim;
use super::corrector::{build_corrector, Corrector};
use super::ensemble::Ensemble;

pub const POVM_TOL: f64 = 1e-10;

/// Checks that `elements` is a POVM on a `dim`-dimensional space.
pub fn check_povm(elements: &[CMat], dim: usize) -> Result<()> {
    let mut sum = CMat::zeros(dim, dim);
    for (z, e) in elements.iter().enumerate() {
        if e.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "POVM element {z} is not {dim}x{dim}"
            )));
        }
        let herm = linalg::max_abs(&(e - e.adjoint()));
        if herm > POVM_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let min = linalg::eigvalsh(e).last().copied().unwrap_or(0.0);
        if min < -POVM_TOL {
            return Err(Error::NotPsd(min));
        }
        sum += e;
    }
    let dev = linalg::max_abs(&(sum - linalg::identity(dim)));
    if dev > POVM_TOL {
        return Err(Error::Malformed(format!(
            "POVM elements sum to identity only within {dev:.3e}"
        )));
    }
    Ok(())
}

/// Outcome law `Tr(E_z ρ)` for a POVM, clipped at zero and renormalized.
pub fn povm_law(elements: &[CMat], rho: &CMat) -> Vec<f64> {
    let p: Vec<f64> = elements
        .iter()
        .map(|e| linalg::trace(&(e * rho)).re.max(0.0))
        .collect();
    let s: f64 = p.iter().sum();
    p.into_iter().map(|v| v / s).collect()
}

/// One message from Alice: `|φ_x⟩ = |x⟩|ψ_x⟩` with `ψ_x` on
/// `Keep ⊗ Message`, and a decoding POVM on `Message` for each `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumOneWayProtocol {
    dim_keep: usize,
    dim_msg: usize,
    nz: usize,
    psi: Vec<CVec>,
    povms: Vec<Vec<CMat>>,
}

impl QuantumOneWayProtocol {
    pub fn new(
        dim_keep: usize,
        dim_msg: usize,
        nz: usize,
        psi: Vec<CVec>,
        povms: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        if psi.is_empty() || povms.is_empty() {
            return Err(Error::Malformed(
                "need at least one input on each side".into(),
            ));
        }
        check_dim(psi.len() * dim_keep * dim_msg)?;
        for (x, v) in psi.iter().enumerate() {
            if v.len() != dim_keep * dim_msg {
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
        for (y, p) in povms.iter().enumerate() {
            if p.len() != nz {
                return Err(Error::Malformed(format!(
                    "POVM {y} has {} outcomes, expected {nz}",
                    p.len()
                )));
            }
            check_povm(p, dim_msg).map_err(|e| Error::Malformed(format!("POVM {y}: {e}")))?;
        }
        Ok(Self {
            dim_keep,
            dim_msg,
            nz,
            psi,
            povms,
        })
    }

    pub fn nx(&self) -> usize {
        self.psi.len()
    }

    pub fn ny(&self) -> usize {
        self.povms.len()
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dim_keep(&self) -> usize {
        self.dim_keep
    }

    pub fn dim_msg(&self) -> usize {
        self.dim_msg
    }

    pub fn psi(&self, x: usize) -> &CVec {
        &self.psi[x]
    }

    pub fn povm(&self, y: usize) -> &[CMat] {
        &self.povms[y]
    }

    pub fn message_state(&self, x: usize) -> DensityMatrix {
        DensityMatrix::new(
            reduce_vector(&self.psi[x], &[self.dim_keep, self.dim_msg], &[1]).expect("validated"),
        )
        .expect("reduced unit vector")
    }

    /// The ensemble `{|x⟩|ψ_x⟩}` with Alice holding `X ⊗ Keep`.
    pub fn ensemble(&self, mu_x: &Distribution) -> Result<Ensemble> {
        Ensemble::new(self.dim_keep, self.dim_msg, self.psi.clone(), mu_x.clone())
    }

    /// `I(X : Message)`.
    pub fn privacy_loss(&self, mu_x: &Distribution) -> Result<f64> {
        Ok(self.ensemble(mu_x)?.information())
    }

    pub fn output_law(&self, x: usize, y: usize) -> Vec<f64> {
        povm_law(&self.povms[y], self.message_state(x).matrix())
    }

    fn check(&self, rel: &Relation, mu: &JointDistribution) -> Result<()> {
        if rel.nx() != self.nx() || rel.ny() != self.ny() || rel.nz() != self.nz {
            return Err(Error::AlphabetMismatch(
                "relation does not match protocol alphabets".into(),
            ));
        }
        if mu.table().len() != self.nx() || mu.table()[0].len() != self.ny() {
            return Err(Error::AlphabetMismatch(
                "prior does not match protocol inputs".into(),
            ));
        }
        Ok(())
    }

    /// Exact distributional error under `mu`.
    pub fn exact_error(&self, rel: &Relation, mu: &JointDistribution) -> Result<f64> {
        self.check(rel, mu)?;
        let mut err = 0.0;
        for x in 0..self.nx() {
            let rho = self.message_state(x);
            for y in 0..self.ny() {
                let w = mu.table()[x][y];
                if w == 0.0 {
                    continue;
                }
                let law = povm_law(&self.povms[y], rho.matrix());
                err += w
                    * (0..self.nz)
                        .filter(|&z| !rel.allows(x, y, z))
                        .map(|z| law[z])
                        .sum::<f64>();
            }
        }
        Ok(err)
    }
}

/// First message replaced by a classical copy index over shared copies of
/// the average state.
#[derive(Debug, Clone)]
pub struct CompressedQuantumOneWay {
    protocol: QuantumOneWayProtocol,
    rel: Relation,
    mu: JointDistribution,
    pub corrector: Corrector,
    pub delta: f64,
    pub alpha: f64,
    /// `⌈α⁻¹ log₂(2/δ)⌉` shared copies.
    pub copies: u64,
    /// `⌈log₂ copies⌉` bits for the copy index.
    pub beta: u32,
    /// Exact error of the original protocol.
    pub epsilon: f64,
    /// `1 − (1−α)^copies`, the same for every input.
    pub block_success: f64,
    laws: Vec<Vec<Vec<f64>>>,
}

/// Compresses Alice's message using a `δ/2` corrector on the message
/// ensemble and `⌈α⁻¹ log₂(2/δ)⌉` shared copies.
pub fn compress_one_way(
    p: &QuantumOneWayProtocol,
    rel: &Relation,
    mu: &JointDistribution,
    delta: f64,
) -> Result<CompressedQuantumOneWay> {
    p.check(rel, mu)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} not in (0,1)")));
    }
    let epsilon = p.exact_error(rel, mu)?;
    let ens = p.ensemble(&mu.marginal_x())?;
    let corrector = build_corrector(&ens, delta / 2.0)?;
    let alpha = corrector.alpha;
    let copies = ((2.0 / delta).log2() / alpha).ceil().max(1.0);
    if copies > 1e15 {
        return Err(Error::TooLarge(format!("{copies} copies")));
    }
    let copies = copies as u64;
    let beta = (copies as f64).log2().ceil() as u32;
    let block_success = -((-alpha).ln_1p() * copies as f64).exp_m1();
    let laws = par::map_indexed(p.nx() as u64, |x| {
        let x = x as usize;
        let post = corrector.post_state(x);
        let mut rho = CMat::zeros(p.dim_msg, p.dim_msg);
        for v in &post {
            rho += reduce_vector(v, &[p.nx() * p.dim_keep, p.dim_msg], &[1]).expect("dims fixed");
        }
        rho /= linalg::c(alpha);
        (0..p.ny())
            .map(|y| povm_law(&p.povms[y], &rho))
            .collect::<Vec<_>>()
    });
    Ok(CompressedQuantumOneWay {
        protocol: p.clone(),
        rel: rel.clone(),
        mu: mu.clone(),
        corrector,
        delta,
        alpha,
        copies,
        beta,
        epsilon,
        block_success,
        laws,
    })
}

impl CompressedQuantumOneWay {
    pub fn protocol(&self) -> &QuantumOneWayProtocol {
        &self.protocol
    }

    /// Bob's outcome law on the selected copy.
    pub fn corrected_law(&self, x: usize, y: usize) -> &[f64] {
        &self.laws[x][y]
    }

    /// Exact error of the compressed protocol: abort on all copies counts as
    /// an error.
    pub fn exact_error(&self) -> f64 {
        let mut err = 0.0;
        for x in 0..self.protocol.nx() {
            for y in 0..self.protocol.ny() {
                let w = self.mu.table()[x][y];
                let bad: f64 = (0..self.protocol.nz())
                    .filter(|&z| !self.rel.allows(x, y, z))
                    .map(|z| self.laws[x][y][z])
                    .sum();
                err += w * (1.0 - self.block_success + self.block_success * bad);
            }
        }
        err
    }

    /// Index of Alice's first successful copy, `None` if all fail.
    pub fn first_success<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<u64> {
        (1..=self.copies).find(|_| rng.random::<f64>() < self.alpha)
    }

    pub fn run_trial(&self, x: usize, y: usize, seed: u64, trial: u64) -> TrialRecord {
        let mut rng = rng_for(seed, &[trial, 1]);
        let log2_bits = (self.beta as f64).log2();
        match self.first_success(&mut rng) {
            None => TrialRecord {
                trial,
                x,
                y,
                log2_bits,
                correct: false,
                aborted: true,
            },
            Some(_) => {
                let z = sample_index(&self.laws[x][y], rng.random());
                TrialRecord {
                    trial,
                    x,
                    y,
                    log2_bits,
                    correct: self.rel.allows(x, y, z),
                    aborted: false,
                }
            }
        }
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qproto::demos;

    #[test]
    fn index_example_counts() {
        let (p, rel) = demos::index_one_way(4).unwrap();
        let mu = JointDistribution::product(&Distribution::uniform(16), &Distribution::uniform(4));
        let eps = p.exact_error(&rel, &mu).unwrap();
        assert!((eps - 0.25).abs() < 1e-12);
        let c = compress_one_way(&p, &rel, &mu, 0.2).unwrap();
        assert!((c.alpha - 0.25).abs() < 1e-10);
        assert_eq!(c.copies, 14);
        assert_eq!(c.beta, 4);
        assert!(c.block_success >= 1.0 - 0.1);
        assert_eq!(c.protocol().povm(2), p.povm(2));
        // every input is steered exactly: the decoding law is unchanged
        for x in 0..16 {
            for y in 0..4 {
                let a = c.corrected_law(x, y);
                let b = p.output_law(x, y);
                assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-9));
            }
        }
        let exact = c.exact_error();
        assert!((exact - (eps + 0.75f64.powi(14) * (1.0 - eps))).abs() < 1e-9);
        let ev = c.evaluate(20_000, 3, Mode::Parallel).unwrap();
        assert!((ev.error_rate - exact).abs() < 4.0 * ev.sigma_floor());
        assert_eq!(ev, c.evaluate(20_000, 3, Mode::Sequential).unwrap());
    }

    #[test]
    fn zero_information_uses_one_copy() {
        let psi = vec![linalg::basis(2, 0); 3];
        let povm = vec![vec![
            linalg::outer(&linalg::basis(2, 0)),
            linalg::outer(&linalg::basis(2, 1)),
        ]];
        let p = QuantumOneWayProtocol::new(1, 2, 2, psi, povm).unwrap();
        let rel = Relation::function(3, 1, 2, |_, _| 0).unwrap();
        let mu = JointDistribution::product(&Distribution::uniform(3), &Distribution::uniform(1));
        let c = compress_one_way(&p, &rel, &mu, 0.2).unwrap();
        assert!((c.alpha - 1.0).abs() < 1e-9);
        assert!(c.copies <= 4 && c.beta <= 2);
        assert!(c.exact_error() < 1e-9);
    }

    #[test]
    fn rejects_bad_povm() {
        let psi = vec![linalg::basis(2, 0)];
        let povm = vec![vec![
            linalg::outer(&linalg::basis(2, 0)) * linalg::c(0.98),
            linalg::outer(&linalg::basis(2, 1)),
        ]];
        assert!(matches!(
            QuantumOneWayProtocol::new(1, 2, 2, psi, povm),
            Err(Error::Malformed(_))
        ));
    }
}
