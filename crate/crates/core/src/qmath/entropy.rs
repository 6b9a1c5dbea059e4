use crate::error::{Error, Result};
use crate::linalg;

use super::density::{partial_trace_regs, DensityMatrix, EIGEN_CUTOFF};

/// `−Σ p log₂ p` over entries above the eigenvalue cutoff.
pub fn shannon_bits(p: &[f64]) -> f64 {
    let h: f64 = p
        .iter()
        .filter(|&&v| v > EIGEN_CUTOFF)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_bits(&rho.eigenvalues())
}

/// `I(A:B) = S(A) + S(B) − S(AB)` for the cut `A = dims_a`, `B = dims_b`
/// (registers listed in order, `A` first).
pub fn mutual_information(rho: &DensityMatrix, dims_a: &[usize], dims_b: &[usize]) -> Result<f64> {
    let da: usize = dims_a.iter().product();
    let db: usize = dims_b.iter().product();
    if da * db != rho.dim() || dims_a.is_empty() || dims_b.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "cut {dims_a:?}|{dims_b:?} does not match dimension {}",
            rho.dim()
        )));
    }
    let dims = [da, db];
    let ra = partial_trace_regs(rho, &dims, &[0])?;
    let rb = partial_trace_regs(rho, &dims, &[1])?;
    Ok(von_neumann_entropy(&ra) + von_neumann_entropy(&rb) - von_neumann_entropy(rho))
}

/// Mutual information between the register groups `a` and `b` of a state on
/// registers `dims`; registers in neither group are traced out.
pub fn mutual_information_regs(
    rho: &DensityMatrix,
    dims: &[usize],
    a: &[usize],
    b: &[usize],
) -> Result<f64> {
    let mut ab: Vec<usize> = a.to_vec();
    ab.extend_from_slice(b);
    let s = |keep: &[usize]| -> Result<f64> {
        Ok(von_neumann_entropy(&partial_trace_regs(rho, dims, keep)?))
    };
    Ok(s(a)? + s(b)? - s(&ab)?)
}

/// Quantum relative entropy `S(ρ‖σ)` in bits; `+∞` when `ρ` has weight
/// outside the support of `σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(
            "relative entropy of different dimensions".into(),
        ));
    }
    let (sv, svec) = linalg::eigh(sigma.matrix());
    let rho_in = svec.adjoint() * rho.matrix() * &svec;
    let mut cross = 0.0;
    for (i, &l) in sv.iter().enumerate() {
        let w = rho_in[(i, i)].re;
        if l > EIGEN_CUTOFF {
            cross += w * l.log2();
        } else if w > 1e-12 {
            return Ok(f64::INFINITY);
        }
    }
    Ok((-von_neumann_entropy(rho) - cross).max(0.0))
}

/// `½‖a − b‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(
            "trace distance of different dimensions".into(),
        ));
    }
    Ok(0.5 * linalg::trace_norm_hermitian(&(a.matrix() - b.matrix())))
}
