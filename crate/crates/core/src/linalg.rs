//! Dense complex linear algebra shared by the quantum modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn to_faer(m: &CMat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(z.re, z.im)
    })
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Column `i` of the returned matrix is the eigenvector for `values[i]`.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = to_faer(&hermitian_part(m));
    let eig = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigendecomposition did not converge");
    // faer returns ascending order
    let s = eig.S();
    let u = from_faer(eig.U());
    let values = (0..n).rev().map(|i| s[i].re).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, src) in (0..n).rev().enumerate() {
        vectors.set_column(dst, &u.column(src));
    }
    (values, vectors)
}

/// Thin SVD `a = U diag(s) V†`, singular values descending.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return (
            CMat::zeros(a.nrows(), 0),
            Vec::new(),
            CMat::zeros(a.ncols(), 0),
        );
    }
    let d = to_faer(a).thin_svd().expect("SVD did not converge");
    let s = d.S();
    let values = (0..k).map(|i| s[i].re).collect();
    (from_faer(d.U()), values, from_faer(d.V()))
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn herm_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    &scaled * vecs.adjoint()
}

/// Square root of a PSD matrix; tiny negative eigenvalues are clamped.
pub fn psd_sqrt(m: &CMat) -> CMat {
    herm_apply(m, |v| v.max(0.0).sqrt())
}

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

/// `‖Σ_i w_i |u_i⟩⟨u_i|‖₁`, computed inside the span of the `u_i`.
pub fn trace_norm_low_rank(vectors: &[CVec], weights: &[f64]) -> f64 {
    assert_eq!(vectors.len(), weights.len());
    if vectors.is_empty() {
        return 0.0;
    }
    let n = vectors[0].len();
    let v = CMat::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let (_, s, right) = svd(&v);
    // V = U S R†, so V W V† = U (S R† W R S) U†
    let r = CMat::from_diagonal(&DVector::from_iterator(s.len(), s.iter().map(|&x| c(x))))
        * right.adjoint();
    let w = CMat::from_diagonal(&DVector::from_iterator(
        weights.len(),
        weights.iter().map(|&x| c(x)),
    ));
    trace_norm_hermitian(&hermitian_part(&(&r * w * r.adjoint())))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn basis(dim: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[i] = ONE;
    v
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// `⟨a|b⟩`.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    u.is_square() && max_abs(&(u.adjoint() * u - identity(u.nrows()))) <= tol
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly random unit vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    let g = gaussian_matrix(dim, 1, rng);
    let v = CVec::from_column_slice(g.as_slice());
    let n = v.norm();
    v / c(n)
}

/// Random density matrix of the given rank (`G G† / Tr`).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMat {
    let g = gaussian_matrix(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    m / c(t)
}

/// Orthonormal basis of the eigenspaces of a Hermitian matrix with eigenvalue
/// above `tol`, as columns.
pub fn support_basis(m: &CMat, tol: f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let r = vals.iter().take_while(|&&v| v > tol).count();
    vecs.columns(0, r).into_owned()
}

/// Polar-type alignment: unitary `U` maximizing `Re Tr(U a)`, i.e. `U = V W†`
/// for the SVD `a = W S V†`. Used for Uhlmann transformations.
pub fn closest_unitary(a: &CMat) -> CMat {
    let (w, _, v) = svd(a);
    v * w.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [1, 2, 5, 16] {
            assert!(is_unitary(&haar_unitary(dim, &mut rng), 1e-12));
        }
    }

    #[test]
    fn eigh_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(6, 4, &mut rng);
        let (vals, vecs) = eigh(&rho);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let mut diag = CMat::zeros(6, 6);
        for (i, v) in vals.iter().enumerate() {
            diag[(i, i)] = c(*v);
        }
        let back = &vecs * diag * vecs.adjoint();
        assert!(max_abs(&(back - &rho)) < 1e-12);
        // rank 4 => two (numerically) zero eigenvalues
        assert!(vals[4].abs() < 1e-12 && vals[5].abs() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(5, 5, &mut rng);
        let s = psd_sqrt(&rho);
        assert!(max_abs(&(&s * &s - &rho)) < 1e-12);
    }

    #[test]
    fn closest_unitary_recovers_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = haar_unitary(4, &mut rng);
        // maximizing Re Tr(V u) gives V = u†
        let v = closest_unitary(&u);
        assert!(max_abs(&(v - u.adjoint())) < 1e-10);
    }
}
