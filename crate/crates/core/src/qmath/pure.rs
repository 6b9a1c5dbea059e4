use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

use super::density::{reduce_vector, DensityMatrix, EIGEN_CUTOFF};

pub const NORM_TOL: f64 = 1e-12;

/// Which half of a bipartite cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Unit vector on `A ⊗ B`, amplitudes indexed `a * dim_b + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    dim_a: usize,
    dim_b: usize,
    amps: CVec,
}

/// Schmidt decomposition `|φ⟩ = Σ √λ_i |a_i⟩|b_i⟩`, coefficients `λ_i`
/// descending (zero terms dropped).
#[derive(Debug, Clone)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    pub left: CMat,
    pub right: CMat,
}

impl BipartitePureState {
    pub fn new(dim_a: usize, dim_b: usize, amps: CVec) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 || amps.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {dim_a}x{dim_b} cut",
                amps.len()
            )));
        }
        let n = amps.norm_squared();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self { dim_a, dim_b, amps })
    }

    /// Normalizes first; fails only on a zero vector or bad dimensions.
    pub fn normalized(dim_a: usize, dim_b: usize, amps: CVec) -> Result<Self> {
        let n = amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Self::new(dim_a, dim_b, amps / c(n))
    }

    pub fn from_matrix(psi: &CMat) -> Result<Self> {
        let (da, db) = psi.shape();
        Self::new(da, db, CVec::from_fn(da * db, |i, _| psi[(i / db, i % db)]))
    }

    pub fn product(a: &CVec, b: &CVec) -> Result<Self> {
        Self::new(a.len(), b.len(), linalg::kron_vec(a, b))
    }

    /// `Σ_i |ii⟩/√d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut amps = CVec::zeros(d * d);
        let w = c(1.0 / (d as f64).sqrt());
        for i in 0..d {
            amps[i * d + i] = w;
        }
        Self {
            dim_a: d,
            dim_b: d,
            amps,
        }
    }

    /// `m` EPR pairs, all `A` halves on one side.
    pub fn epr_pairs(m: u32) -> Self {
        Self::maximally_entangled(1usize << m)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// `Ψ[a, b]`.
    pub fn amplitude_matrix(&self) -> CMat {
        CMat::from_fn(self.dim_a, self.dim_b, |a, b| self.amps[a * self.dim_b + b])
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_raw(linalg::outer(&self.amps))
    }

    pub fn reduced(&self, keep: Side) -> DensityMatrix {
        let keep = match keep {
            Side::A => 0,
            Side::B => 1,
        };
        DensityMatrix::from_raw(
            reduce_vector(&self.amps, &[self.dim_a, self.dim_b], &[keep])
                .expect("dims fixed at construction"),
        )
    }

    /// `(op ⊗ I)|φ⟩`, unnormalized.
    pub fn apply_a(&self, op: &CMat) -> Result<CVec> {
        if op.shape() != (self.dim_a, self.dim_a) {
            return Err(Error::DimensionMismatch(
                "operator does not act on A".into(),
            ));
        }
        let psi = op * self.amplitude_matrix();
        Ok(CVec::from_fn(self.amps.len(), |i, _| {
            psi[(i / self.dim_b, i % self.dim_b)]
        }))
    }

    /// `(I ⊗ op)|φ⟩`, unnormalized.
    pub fn apply_b(&self, op: &CMat) -> Result<CVec> {
        if op.shape() != (self.dim_b, self.dim_b) {
            return Err(Error::DimensionMismatch(
                "operator does not act on B".into(),
            ));
        }
        let psi = self.amplitude_matrix() * op.transpose();
        Ok(CVec::from_fn(self.amps.len(), |i, _| {
            psi[(i / self.dim_b, i % self.dim_b)]
        }))
    }

    /// `|⟨φ|ψ⟩|²`.
    pub fn fidelity(&self, other: &BipartitePureState) -> f64 {
        self.amps.dotc(&other.amps).norm_sqr()
    }

    pub fn schmidt(&self) -> Schmidt {
        let (u, sv, v) = linalg::svd(&self.amplitude_matrix());
        let r = sv.iter().take_while(|&&s| s * s > EIGEN_CUTOFF).count();
        let coefficients = sv[..r].iter().map(|s| s * s).collect();
        let left = u.columns(0, r).into_owned();
        // Ψ = U S V†, so the B-side Schmidt vectors are the conjugated columns of V
        let right = v.columns(0, r).map(|z| z.conj());
        Schmidt {
            coefficients,
            left,
            right,
        }
    }

    pub fn schmidt_rank(&self) -> usize {
        self.schmidt().coefficients.len()
    }
}

impl Schmidt {
    pub fn reconstruct(&self, dim_a: usize, dim_b: usize) -> CVec {
        let mut v = CVec::zeros(dim_a * dim_b);
        for (k, &lam) in self.coefficients.iter().enumerate() {
            let s = c(lam.sqrt());
            for a in 0..dim_a {
                for b in 0..dim_b {
                    v[a * dim_b + b] += s * self.left[(a, k)] * self.right[(b, k)];
                }
            }
        }
        v
    }
}

/// `E(φ) = −Σ λ_i log₂ λ_i` over the Schmidt coefficients.
pub fn entanglement_amount(phi: &BipartitePureState) -> f64 {
    super::entropy::shannon_bits(&phi.schmidt().coefficients)
}

/// Keeps the `rank_bound` largest Schmidt terms and renormalizes.
pub fn schmidt_truncate(phi: &BipartitePureState, rank_bound: usize) -> Result<BipartitePureState> {
    if rank_bound == 0 {
        return Err(Error::OutOfRange("rank bound must be at least 1".into()));
    }
    let s = phi.schmidt();
    if s.coefficients.len() <= rank_bound {
        return Ok(phi.clone());
    }
    let kept = Schmidt {
        coefficients: s.coefficients[..rank_bound].to_vec(),
        left: s.left.columns(0, rank_bound).into_owned(),
        right: s.right.columns(0, rank_bound).into_owned(),
    };
    BipartitePureState::normalized(phi.dim_a, phi.dim_b, kept.reconstruct(phi.dim_a, phi.dim_b))
}

/// Canonical purification `Σ_i |i⟩_A ⊗ √ρ|i⟩_B`: fresh register on `A`,
/// `ρ` on `B`.
pub fn purify(rho: &DensityMatrix) -> BipartitePureState {
    let d = rho.dim();
    let root = linalg::psd_sqrt(rho.matrix());
    let amps = CVec::from_fn(d * d, |i, _| root[(i % d, i / d)]);
    let n = amps.norm();
    BipartitePureState {
        dim_a: d,
        dim_b: d,
        amps: amps / c(n),
    }
}

/// Reduced state on one side.
pub fn partial_trace(phi: &BipartitePureState, keep: Side) -> DensityMatrix {
    phi.reduced(keep)
}

/// Reduced state of a mixed state with a declared `dim_a × dim_b` cut.
pub fn partial_trace_mixed(
    rho: &DensityMatrix,
    dim_a: usize,
    dim_b: usize,
    keep: Side,
) -> Result<DensityMatrix> {
    let k = match keep {
        Side::A => 0,
        Side::B => 1,
    };
    super::density::partial_trace_regs(rho, &[dim_a, dim_b], &[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, random_density, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sqrt_09_state() -> BipartitePureState {
        let mut v = CVec::zeros(4);
        v[0] = c(0.9f64.sqrt());
        v[3] = c(0.1f64.sqrt());
        BipartitePureState::new(2, 2, v).unwrap()
    }

    #[test]
    fn schmidt_examples() {
        let prod = BipartitePureState::product(&basis(2, 0), &basis(3, 1)).unwrap();
        assert_eq!(prod.schmidt().coefficients.len(), 1);
        assert!((prod.schmidt().coefficients[0] - 1.0).abs() < 1e-12);

        let epr = BipartitePureState::epr_pairs(1);
        let s = epr.schmidt();
        assert_eq!(s.coefficients.len(), 2);
        assert!(s.coefficients.iter().all(|l| (l - 0.5).abs() < 1e-12));

        let s = sqrt_09_state().schmidt();
        assert!((s.coefficients[0] - 0.9).abs() < 1e-12);
        assert!((s.coefficients[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (da, db) in [(2, 3), (4, 4), (5, 2)] {
            let phi = BipartitePureState::new(da, db, random_state(da * db, &mut rng)).unwrap();
            let s = phi.schmidt();
            assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
            assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let back = s.reconstruct(da, db);
            assert!((back - phi.amplitudes()).norm() < 1e-9);
        }
    }

    #[test]
    fn entanglement_examples() {
        let prod = BipartitePureState::product(&basis(2, 1), &basis(2, 0)).unwrap();
        assert!(entanglement_amount(&prod).abs() < 1e-12);
        for m in 1..=3 {
            assert!(
                (entanglement_amount(&BipartitePureState::epr_pairs(m)) - m as f64).abs() < 1e-10
            );
        }
        // binary entropy h(0.1) evaluated directly
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert!((entanglement_amount(&sqrt_09_state()) - h).abs() < 1e-10);
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let prod = BipartitePureState::product(&basis(2, 0), &basis(2, 0)).unwrap();
        assert!(schmidt_truncate(&prod, 1).unwrap().fidelity(&prod) > 1.0 - 1e-12);
        let epr = BipartitePureState::epr_pairs(1);
        assert!(schmidt_truncate(&epr, 2).unwrap().fidelity(&epr) > 1.0 - 1e-12);
        assert!(schmidt_truncate(&epr, 0).is_err());

        // uniform spectrum over 8 terms, keep 4: overlap² = kept mass = 1/2,
        // pure-state trace distance = sqrt(1 - F) = sqrt(1/2)
        let phi = BipartitePureState::epr_pairs(3);
        let t = schmidt_truncate(&phi, 4).unwrap();
        assert_eq!(t.schmidt_rank(), 4);
        let direct = (1.0 - t.fidelity(&phi)).sqrt();
        let td = super::super::trace_distance(&t.density(), &phi.density()).unwrap();
        assert!((direct - 0.5f64.sqrt()).abs() < 1e-10);
        assert!((td - direct).abs() < 1e-9, "{td} {direct}");
    }

    #[test]
    fn purify_examples() {
        let zero = DensityMatrix::basis_state(2, 0);
        let p = purify(&zero);
        assert!(crate::linalg::max_abs(&(p.reduced(Side::B).matrix() - zero.matrix())) < 1e-12);
        assert_eq!(p.schmidt_rank(), 1);

        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((entanglement_amount(&purify(&mixed)) - 1.0).abs() < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rho = DensityMatrix::new(random_density(4, 3, &mut rng)).unwrap();
        // rank via eigendecomposition
        assert_eq!(rho.rank(1e-10), 3);
        let p = purify(&rho);
        assert_eq!(p.schmidt_rank(), 3);
        assert!(crate::linalg::max_abs(&(p.reduced(Side::B).matrix() - rho.matrix())) < 1e-9);
    }

    #[test]
    fn apply_local_ops() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let phi = BipartitePureState::new(2, 3, random_state(6, &mut rng)).unwrap();
        let ua = crate::linalg::haar_unitary(2, &mut rng);
        let ub = crate::linalg::haar_unitary(3, &mut rng);
        let full = crate::linalg::kron(&ua, &ub) * phi.amplitudes();
        let step = BipartitePureState::new(2, 3, phi.apply_a(&ua).unwrap()).unwrap();
        let both = step.apply_b(&ub).unwrap();
        assert!((full - both).norm() < 1e-12);
    }
}
