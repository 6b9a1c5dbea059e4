use crate::cinfo::Distribution;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::qmath::{reduce_vector, von_neumann_entropy, BipartitePureState, DensityMatrix};

use super::check_dim;

/// Family `|φ_x⟩ = |x⟩|ψ_x⟩` on `(X ⊗ R) ⊗ O`. The owner holds the input
/// register `X` and `R`; the other party holds `O`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim_r: usize,
    dim_o: usize,
    psi: Vec<CVec>,
    mu: Distribution,
}

impl Ensemble {
    /// `psi[x]` lives on `R ⊗ O` and must be a unit vector.
    pub fn new(dim_r: usize, dim_o: usize, psi: Vec<CVec>, mu: Distribution) -> Result<Self> {
        if psi.is_empty() || psi.len() != mu.len() {
            return Err(Error::AlphabetMismatch(format!(
                "{} states for {} inputs",
                psi.len(),
                mu.len()
            )));
        }
        check_dim(psi.len() * dim_r * dim_o)?;
        for (x, v) in psi.iter().enumerate() {
            if v.len() != dim_r * dim_o {
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
        Ok(Self {
            dim_r,
            dim_o,
            psi,
            mu,
        })
    }

    /// From full states on `X ⊗ R ⊗ O`; each must carry `|x⟩` in `X`.
    pub fn from_states(
        dim_x: usize,
        dim_r: usize,
        dim_o: usize,
        phi: &[CVec],
        mu: Distribution,
    ) -> Result<Self> {
        let block = dim_r * dim_o;
        let mut psi = Vec::with_capacity(phi.len());
        for (x, v) in phi.iter().enumerate() {
            if v.len() != dim_x * block {
                return Err(Error::DimensionMismatch(format!(
                    "state {x} has length {}",
                    v.len()
                )));
            }
            let inside = v.rows(x * block, block).into_owned();
            let leak = v.norm_squared() - inside.norm_squared();
            if leak > 1e-10 {
                return Err(Error::Precondition(format!(
                    "state {x} is not |{x}> on the input register"
                )));
            }
            psi.push(inside);
        }
        if psi.len() != dim_x {
            return Err(Error::AlphabetMismatch(format!(
                "{} states for {dim_x} inputs",
                psi.len()
            )));
        }
        Self::new(dim_r, dim_o, psi, mu)
    }

    pub fn dim_x(&self) -> usize {
        self.psi.len()
    }

    pub fn dim_r(&self) -> usize {
        self.dim_r
    }

    pub fn dim_o(&self) -> usize {
        self.dim_o
    }

    /// Owner dimension `|X|·dim R`.
    pub fn dim_owner(&self) -> usize {
        self.psi.len() * self.dim_r
    }

    pub fn mu(&self) -> &Distribution {
        &self.mu
    }

    pub fn psi(&self, x: usize) -> &CVec {
        &self.psi[x]
    }

    /// `|x⟩|ψ_x⟩` as a vector on `X ⊗ R ⊗ O`.
    pub fn state_vector(&self, x: usize) -> CVec {
        let block = self.dim_r * self.dim_o;
        let mut v = CVec::zeros(self.dim_x() * block);
        v.rows_mut(x * block, block).copy_from(&self.psi[x]);
        v
    }

    pub fn state(&self, x: usize) -> BipartitePureState {
        BipartitePureState::new(self.dim_owner(), self.dim_o, self.state_vector(x))
            .expect("validated")
    }

    /// `ρ_x = Tr_{XR} |φ_x⟩⟨φ_x|`.
    pub fn marginal(&self, x: usize) -> DensityMatrix {
        let m = reduce_vector(&self.psi[x], &[self.dim_r, self.dim_o], &[1]).expect("validated");
        DensityMatrix::new(m).expect("reduced state of a unit vector")
    }

    /// `ρ = E_μ ρ_x`.
    pub fn average_marginal(&self) -> DensityMatrix {
        let mut m = CMat::zeros(self.dim_o, self.dim_o);
        for x in 0..self.dim_x() {
            let w = self.mu.prob(x);
            if w > 0.0 {
                m += self.marginal(x).matrix() * c(w);
            }
        }
        DensityMatrix::new(m).expect("mixture of states")
    }

    /// `I(X : O)` for `E_μ |φ_x⟩⟨φ_x|`.
    pub fn information(&self) -> f64 {
        let avg = von_neumann_entropy(&self.average_marginal());
        let cond: f64 = (0..self.dim_x())
            .filter(|&x| self.mu.prob(x) > 0.0)
            .map(|x| self.mu.prob(x) * von_neumann_entropy(&self.marginal(x)))
            .sum();
        (avg - cond).max(0.0)
    }
}

/// `|φ⟩ = Σ_x √μ(x) |φ_x⟩`, cut between the owner and `O`.
pub fn average_state(e: &Ensemble) -> BipartitePureState {
    let mut v = CVec::zeros(e.dim_owner() * e.dim_o());
    for x in 0..e.dim_x() {
        v += e.state_vector(x) * c(e.mu().prob(x).sqrt());
    }
    BipartitePureState::new(e.dim_owner(), e.dim_o(), v)
        .expect("orthogonal blocks with unit weights")
}
