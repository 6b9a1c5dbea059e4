use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Hermiticity corrections larger than this are rejected rather than absorbed.
pub const HERMITIAN_REPAIR_TOL: f64 = 1e-8;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are treated as zero inside entropies.
pub const EIGEN_CUTOFF: f64 = 1e-14;
/// Minimum eigenvalue for a reference state to count as full rank.
pub const FULL_RANK_TOL: f64 = 1e-12;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMat,
}

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let sym = linalg::hermitian_part(&m);
        let dev = linalg::max_abs(&(&sym - &m));
        if dev > HERMITIAN_REPAIR_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&sym).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace(tr));
        }
        let min = linalg::eigvalsh(&sym).last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { m: sym })
    }

    /// Rescales a PSD matrix to unit trace before validating.
    pub fn from_unnormalized(m: CMat) -> Result<Self> {
        let tr = linalg::trace(&m).re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(Error::BadTrace(tr));
        }
        Self::new(m / c(tr))
    }

    /// Skips validation; callers guarantee the invariants up to rounding.
    pub(crate) fn from_raw(m: CMat) -> Self {
        Self {
            m: linalg::hermitian_part(&m),
        }
    }

    pub fn pure(v: &CVec) -> Result<Self> {
        let n = v.norm_squared();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self::from_raw(linalg::outer(v)))
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self::from_raw(linalg::outer(&linalg::basis(dim, i)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            m: linalg::identity(dim) / c(dim as f64),
        }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = CMat::zeros(d, d);
        for (i, &p) in probs.iter().enumerate() {
            m[(i, i)] = c(p);
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&v| v > tol).count()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::from_raw(linalg::kron(&self.m, &other.m))
    }

    /// `⟨v|ρ|v⟩` for a unit vector `v`.
    pub fn expectation(&self, v: &CVec) -> f64 {
        v.dotc(&(&self.m * v)).re
    }
}

impl TryFrom<CMat> for DensityMatrix {
    type Error = Error;
    fn try_from(m: CMat) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for CMat {
    fn from(d: DensityMatrix) -> CMat {
        d.m
    }
}

/// Row-major strides for a list of register dimensions.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Index map from (kept multi-index, traced multi-index) to the flat index.
fn split_indices(dims: &[usize], keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let st = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let enumerate = |regs: &[usize]| -> Vec<usize> {
        let mut offsets = vec![0usize];
        for &r in regs {
            let mut next = Vec::with_capacity(offsets.len() * dims[r]);
            for &o in &offsets {
                for v in 0..dims[r] {
                    next.push(o + v * st[r]);
                }
            }
            offsets = next;
        }
        offsets
    };
    (enumerate(keep), enumerate(&traced))
}

fn check_registers(total: usize, dims: &[usize], keep: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::DimensionMismatch(format!(
            "register dims {dims:?} multiply to {prod}, state has dimension {total}"
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "kept register index out of range in {keep:?}"
        )));
    }
    for (i, k) in keep.iter().enumerate() {
        if keep[..i].contains(k) {
            return Err(Error::DimensionMismatch(format!(
                "register {k} listed twice"
            )));
        }
    }
    Ok(())
}

/// Partial trace of a matrix over every register not in `keep`. Kept
/// registers appear in the order given by `keep`.
pub fn reduce_matrix(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_registers(m.nrows(), dims, keep)?;
    let (kept, traced) = split_indices(dims, keep);
    let dk = kept.len();
    let mut out = CMat::zeros(dk, dk);
    for (i, &ri) in kept.iter().enumerate() {
        for (j, &cj) in kept.iter().enumerate() {
            let mut acc = linalg::ZERO;
            for &t in &traced {
                acc += m[(ri + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Reduced density matrix of a (possibly unnormalized) vector.
pub fn reduce_vector(v: &CVec, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_registers(v.len(), dims, keep)?;
    let (kept, traced) = split_indices(dims, keep);
    let a = CMat::from_fn(kept.len(), traced.len(), |i, j| v[kept[i] + traced[j]]);
    Ok(&a * a.adjoint())
}

/// Reorders the registers of a vector: register `order[k]` of the input
/// becomes register `k` of the output.
pub fn permute_vector(v: &CVec, dims: &[usize], order: &[usize]) -> Result<CVec> {
    if order.len() != dims.len() {
        return Err(Error::DimensionMismatch("permutation length".into()));
    }
    check_registers(v.len(), dims, order)?;
    let (kept, _) = split_indices(dims, order);
    Ok(CVec::from_iterator(kept.len(), kept.iter().map(|&i| v[i])))
}

/// Applies `op` to the registers `targets` (taken in that order, first most
/// significant) of a vector on registers `dims`.
pub fn apply_on_registers(v: &CVec, dims: &[usize], targets: &[usize], op: &CMat) -> Result<CVec> {
    check_registers(v.len(), dims, targets)?;
    let dt: usize = targets.iter().map(|&t| dims[t]).product();
    if op.shape() != (dt, dt) {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, target registers have dimension {dt}",
            op.nrows(),
            op.ncols()
        )));
    }
    let (kept, rest) = split_indices(dims, targets);
    let m = CMat::from_fn(kept.len(), rest.len(), |i, j| v[kept[i] + rest[j]]);
    let r = op * m;
    let mut out = CVec::zeros(v.len());
    for (i, &ki) in kept.iter().enumerate() {
        for (j, &rj) in rest.iter().enumerate() {
            out[ki + rj] = r[(i, j)];
        }
    }
    Ok(out)
}

pub fn partial_trace_regs(
    rho: &DensityMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_raw(reduce_matrix(
        rho.matrix(),
        dims,
        keep,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.4);
        assert!(matches!(
            DensityMatrix::new(m.clone()),
            Err(Error::BadTrace(_))
        ));
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = c(0.1);
        assert!(matches!(
            DensityMatrix::new(m.clone()),
            Err(Error::NotHermitian(_))
        ));
        let mut neg = CMat::zeros(2, 2);
        neg[(0, 0)] = c(1.5);
        neg[(1, 1)] = c(-0.5);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::NotPsd(_))));
    }

    #[test]
    fn tiny_asymmetry_is_repaired() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = c(1e-10);
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(rho.matrix()[(0, 1)], rho.matrix()[(1, 0)]);
    }

    #[test]
    fn reduce_vector_matches_reduce_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_state(24, &mut rng);
        let dims = [2, 3, 4];
        for keep in [vec![0], vec![1], vec![2], vec![2, 0], vec![1, 2]] {
            let a = reduce_vector(&v, &dims, &keep).unwrap();
            let b = reduce_matrix(&linalg::outer(&v), &dims, &keep).unwrap();
            assert!(linalg::max_abs(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = DensityMatrix::new(random_density(2, 2, &mut rng)).unwrap();
        let b = DensityMatrix::new(random_density(3, 2, &mut rng)).unwrap();
        let ab = a.tensor(&b);
        let rb = partial_trace_regs(&ab, &[2, 3], &[1]).unwrap();
        assert!(linalg::max_abs(&(rb.matrix() - b.matrix())) < 1e-12);
    }

    #[test]
    fn permute_then_reduce() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = random_state(12, &mut rng);
        let p = permute_vector(&v, &[3, 4], &[1, 0]).unwrap();
        let a = reduce_vector(&v, &[3, 4], &[1]).unwrap();
        let b = reduce_vector(&p, &[4, 3], &[0]).unwrap();
        assert!(linalg::max_abs(&(a - b)) < 1e-12);
    }
}
