use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

use super::density::{DensityMatrix, FULL_RANK_TOL};
use super::pure::{BipartitePureState, Side};

pub const KRAUS_TOL: f64 = 1e-10;
/// Allowed excess of a requested steering weight over the maximum.
pub const WEIGHT_SLACK: f64 = 1e-12;

/// Single Kraus operator of a success-tested local operation; the success
/// outcome applies `M`, the failure outcome is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausOp {
    m: CMat,
}

impl KrausOp {
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(
                "Kraus operator must be square".into(),
            ));
        }
        let top = linalg::eigvalsh(&(m.adjoint() * &m))
            .first()
            .copied()
            .unwrap_or(0.0);
        if top > 1.0 + KRAUS_TOL {
            return Err(Error::WeightTooLarge {
                weight: top,
                max: 1.0,
            });
        }
        Ok(Self { m })
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        if !linalg::is_unitary(&u, 1e-10) {
            return Err(Error::Precondition("operator is not unitary".into()));
        }
        Self::new(u)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// Largest eigenvalue of `M†M`.
    pub fn norm_sq(&self) -> f64 {
        linalg::eigvalsh(&(self.m.adjoint() * &self.m))[0]
    }

    /// Applies `M ⊗ I` to `phi` (acting on side `A`). Returns the success
    /// probability and, when it is positive, the normalized post-state.
    pub fn apply(&self, phi: &BipartitePureState) -> Result<(f64, Option<BipartitePureState>)> {
        let v = phi.apply_a(&self.m)?;
        let p = v.norm_squared();
        if p <= 1e-300 {
            return Ok((0.0, None));
        }
        let post = BipartitePureState::normalized(phi.dim_a(), phi.dim_b(), v)?;
        Ok((p, Some(post)))
    }
}

fn inv_sqrt(m: &CMat) -> CMat {
    linalg::herm_apply(m, |v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
}

/// Largest `k` with `σ − kρ ⪰ 0`, i.e. `1/λ_max(σ^{-1/2} ρ σ^{-1/2})`.
/// `σ` must be full rank.
pub fn max_substate_weight(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "substate weight of different dimensions".into(),
        ));
    }
    let min = sigma.min_eigenvalue();
    if min <= FULL_RANK_TOL {
        return Err(Error::Singular(min));
    }
    let s = inv_sqrt(sigma.matrix());
    let top = linalg::eigvalsh(&(&s * rho.matrix() * &s))[0];
    Ok(1.0 / top)
}

/// Substate weight on the support of `σ` (which may be rank deficient).
/// Returns 0 when `ρ` leaves the support.
pub fn support_substate_weight(rho: &CMat, sigma: &CMat) -> f64 {
    let q = linalg::support_basis(sigma, FULL_RANK_TOL);
    let leak = (rho - &q * (q.adjoint() * rho * &q) * q.adjoint()).norm();
    if leak > 1e-9 {
        return 0.0;
    }
    let s = inv_sqrt(&(q.adjoint() * sigma * &q));
    let top = linalg::eigvalsh(&(&s * (q.adjoint() * rho * &q) * &s))[0];
    1.0 / top
}

/// Alice-side Kraus operator that, applied to `phi` (whose `B` marginal is
/// `σ`), succeeds with probability `k` and leaves `target` on `B`.
///
/// With `W = σ^{-1/2} Ψᵀ` (a co-isometry from `A` onto the support of `σ`)
/// and `N = √k · (σ^{-1/2} τ σ^{-1/2})^{1/2}`, the operator is
/// `M = (W† N W)ᵀ`. For the canonical purification this is `conj(N)`.
pub fn steering_kraus(phi: &BipartitePureState, target: &DensityMatrix, k: f64) -> Result<KrausOp> {
    if target.dim() != phi.dim_b() {
        return Err(Error::DimensionMismatch(
            "target does not live on side B".into(),
        ));
    }
    let sigma = phi.reduced(Side::B);
    let kmax = support_substate_weight(target.matrix(), sigma.matrix());
    if !(k >= 0.0) || k > kmax + WEIGHT_SLACK {
        return Err(Error::WeightTooLarge {
            weight: k,
            max: kmax,
        });
    }
    let q = linalg::support_basis(sigma.matrix(), FULL_RANK_TOL);
    // Ψ expressed in the support basis of B: Ψ' = Ψ · conj(Q)
    let psi = phi.amplitude_matrix() * q.map(|z| z.conj());
    let sig = q.adjoint() * sigma.matrix() * &q;
    let tau = q.adjoint() * target.matrix() * &q;
    let s = inv_sqrt(&sig);
    let w = &s * psi.transpose();
    let n = linalg::psd_sqrt(&(&s * tau * &s)) * c(k.sqrt());
    let m = (w.adjoint() * n * &w).transpose();
    KrausOp::new(m)
}

/// Unitary `U` on `A` with `(U ⊗ I)|φ₁⟩ = |φ₂⟩` up to a global phase.
pub fn uhlmann_align(phi1: &BipartitePureState, phi2: &BipartitePureState) -> Result<CMat> {
    if phi1.dim_a() != phi2.dim_a() || phi1.dim_b() != phi2.dim_b() {
        return Err(Error::DimensionMismatch(
            "states have different cuts".into(),
        ));
    }
    let gap = super::trace_distance(&phi1.reduced(Side::B), &phi2.reduced(Side::B))?;
    if gap > 1e-9 {
        return Err(Error::MarginalMismatch(gap));
    }
    let a = phi1.amplitude_matrix() * phi2.amplitude_matrix().adjoint();
    Ok(linalg::closest_unitary(&a))
}

/// Fidelity after alignment; convenience for checks.
pub fn aligned_fidelity(phi1: &BipartitePureState, phi2: &BipartitePureState, u: &CMat) -> f64 {
    let v: CVec = phi1.apply_a(u).expect("dims checked by caller");
    v.dotc(phi2.amplitudes()).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis, haar_unitary, random_density, random_state};
    use crate::qmath::{purify, trace_distance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Largest k with σ − kρ PSD, by bisection on the minimum eigenvalue.
    fn bisection_oracle(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let psd = |k: f64| {
            linalg::eigvalsh(&(sigma.matrix() - rho.matrix() * c(k)))
                .last()
                .copied()
                .unwrap()
                >= 0.0
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if psd(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    #[test]
    fn substate_weight_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let s = DensityMatrix::new(random_density(3, 3, &mut rng)).unwrap();
        assert!((max_substate_weight(&s, &s).unwrap() - 1.0).abs() < 1e-10);
        for d in [2, 4, 8] {
            let rho = DensityMatrix::pure(&random_state(d, &mut rng)).unwrap();
            let w = max_substate_weight(&rho, &DensityMatrix::maximally_mixed(d)).unwrap();
            assert!((w - 1.0 / d as f64).abs() < 1e-12);
        }
        let rho = DensityMatrix::new(random_density(8, 8, &mut rng)).unwrap();
        let sigma = DensityMatrix::new(random_density(8, 8, &mut rng)).unwrap();
        let k = max_substate_weight(&rho, &sigma).unwrap();
        assert!((k - bisection_oracle(&rho, &sigma)).abs() < 1e-9);
        let slack = |k: f64| {
            linalg::eigvalsh(&(sigma.matrix() - rho.matrix() * c(k)))
                .last()
                .copied()
                .unwrap()
        };
        assert!(slack(k) >= -1e-10);
        assert!(slack(k * (1.0 + 1e-6)) < 0.0);
        assert!(matches!(
            max_substate_weight(&rho, &DensityMatrix::basis_state(8, 0)),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn pure_weight_matches_inverse_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = random_state(4, &mut rng);
        let sigma = DensityMatrix::new(random_density(4, 4, &mut rng)).unwrap();
        let inv = sigma.matrix().clone().try_inverse().unwrap();
        let expect = 1.0 / v.dotc(&(inv * &v)).re;
        let k = max_substate_weight(&DensityMatrix::pure(&v).unwrap(), &sigma).unwrap();
        assert!((k - expect).abs() < 1e-10);
    }

    #[test]
    fn steering_identity_target_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let sigma = DensityMatrix::new(random_density(3, 3, &mut rng)).unwrap();
        let phi = purify(&sigma);
        let op = steering_kraus(&phi, &sigma, 1.0).unwrap();
        assert!(linalg::is_unitary(op.matrix(), 1e-9));
        let (p, post) = op.apply(&phi).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        assert!(post.unwrap().fidelity(&phi) > 1.0 - 1e-9);
    }

    #[test]
    fn steering_mixed_qubit_to_zero() {
        let phi = purify(&DensityMatrix::maximally_mixed(2));
        let zero = DensityMatrix::basis_state(2, 0);
        let op = steering_kraus(&phi, &zero, 0.5).unwrap();
        let (p, post) = op.apply(&phi).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let td = trace_distance(&post.unwrap().reduced(Side::B), &zero).unwrap();
        assert!(td < 1e-9);
        assert!(matches!(
            steering_kraus(&phi, &zero, 0.6),
            Err(Error::WeightTooLarge { .. })
        ));
    }

    #[test]
    fn steering_random_pure_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let sigma = DensityMatrix::new(random_density(4, 4, &mut rng)).unwrap();
            let target = DensityMatrix::pure(&random_state(4, &mut rng)).unwrap();
            let k = max_substate_weight(&target, &sigma).unwrap();
            // an arbitrary purification, not the canonical one
            let canon = purify(&sigma);
            let u = haar_unitary(4, &mut rng);
            let phi = BipartitePureState::new(4, 4, canon.apply_a(&u).unwrap()).unwrap();
            let op = steering_kraus(&phi, &target, k).unwrap();
            assert!((op.norm_sq() - 1.0).abs() < 1e-9);
            let (p, post) = op.apply(&phi).unwrap();
            assert!((p - k).abs() < 1e-10);
            assert!(trace_distance(&post.unwrap().reduced(Side::B), &target).unwrap() < 1e-9);
        }
    }

    #[test]
    fn steering_on_rank_deficient_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let sigma = DensityMatrix::new(random_density(4, 2, &mut rng)).unwrap();
        let phi = purify(&sigma);
        // a target inside the support of sigma
        let q = linalg::support_basis(sigma.matrix(), 1e-12);
        let v = &q * random_state(2, &mut rng);
        let target = DensityMatrix::pure(&v).unwrap();
        let k = support_substate_weight(target.matrix(), sigma.matrix());
        assert!(k > 0.0);
        let (p, post) = steering_kraus(&phi, &target, k)
            .unwrap()
            .apply(&phi)
            .unwrap();
        assert!((p - k).abs() < 1e-10);
        assert!(trace_distance(&post.unwrap().reduced(Side::B), &target).unwrap() < 1e-9);
        let outside = DensityMatrix::pure(
            &(linalg::identity(4) - &q * q.adjoint())
                .column(0)
                .normalize(),
        )
        .unwrap();
        assert!(steering_kraus(&phi, &outside, 1e-3).is_err());
    }

    #[test]
    fn uhlmann_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let phi = BipartitePureState::new(3, 3, random_state(9, &mut rng)).unwrap();
        let u = uhlmann_align(&phi, &phi).unwrap();
        assert!(aligned_fidelity(&phi, &phi, &u) > 1.0 - 1e-12);

        let p00 = BipartitePureState::product(&basis(2, 0), &basis(2, 0)).unwrap();
        let p10 = BipartitePureState::product(&basis(2, 1), &basis(2, 0)).unwrap();
        let u = uhlmann_align(&p00, &p10).unwrap();
        assert!(aligned_fidelity(&p00, &p10, &u) > 1.0 - 1e-12);
        assert!(u[(1, 0)].norm() > 1.0 - 1e-12);

        let rho = DensityMatrix::new(random_density(4, 4, &mut rng)).unwrap();
        let base = purify(&rho);
        let a = BipartitePureState::new(4, 4, base.apply_a(&haar_unitary(4, &mut rng)).unwrap())
            .unwrap();
        let b = BipartitePureState::new(4, 4, base.apply_a(&haar_unitary(4, &mut rng)).unwrap())
            .unwrap();
        let u = uhlmann_align(&a, &b).unwrap();
        assert!(linalg::is_unitary(&u, 1e-10));
        assert!(aligned_fidelity(&a, &b, &u) > 1.0 - 1e-9);

        let p01 = BipartitePureState::product(&basis(2, 0), &basis(2, 1)).unwrap();
        assert!(matches!(
            uhlmann_align(&p00, &p01),
            Err(Error::MarginalMismatch(_))
        ));
    }
}
