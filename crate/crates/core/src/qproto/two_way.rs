use crate::cinfo::{Distribution, JointDistribution};
use crate::cproto::Relation;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::qmath::{apply_on_registers, permute_vector, reduce_vector};

use super::check_dim;
use super::ensemble::Ensemble;
use super::one_way::{check_povm, povm_law};

pub const UNITARY_TOL: f64 = 1e-10;

/// Multi-round protocol without prior entanglement on registers
/// `[X, A, C, B, Y]`.
///
/// `X` and `Y` hold the inputs and are only ever used as controls. `A` and
/// `B` are the work registers, `C` is the message register. Alice holds `C`
/// at the start; it changes hands after every round. Round `i` (from 1) is
/// Alice's when `i` is odd, applying `U_x` to `A ⊗ C`; on even rounds Bob
/// applies `V_y` to `C ⊗ B`. The round count is odd and Bob finishes with a
/// POVM on `C ⊗ B`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumTwoWayProtocol {
    nx: usize,
    ny: usize,
    nz: usize,
    da: usize,
    dc: usize,
    db: usize,
    rounds: Vec<Vec<CMat>>,
    povms: Vec<Vec<CMat>>,
}

impl QuantumTwoWayProtocol {
    /// `rounds[i][input]` is the unitary of round `i + 1`; `povms[y]` has
    /// `nz` elements on `C ⊗ B`.
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        dims: [usize; 3],
        rounds: Vec<Vec<CMat>>,
        povms: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        let [da, dc, db] = dims;
        if nx == 0 || ny == 0 || nz == 0 || da == 0 || dc == 0 || db == 0 {
            return Err(Error::Malformed("empty alphabet or register".into()));
        }
        check_dim(nx.max(ny) * da * dc * db)?;
        if rounds.len().is_multiple_of(2) {
            return Err(Error::Malformed(format!(
                "{} rounds; the last message must go to Bob",
                rounds.len()
            )));
        }
        for (i, r) in rounds.iter().enumerate() {
            let alice = i % 2 == 0;
            let (n, d) = if alice { (nx, da * dc) } else { (ny, dc * db) };
            if r.len() != n {
                return Err(Error::Malformed(format!(
                    "round {} has {} unitaries, expected {n}",
                    i + 1,
                    r.len()
                )));
            }
            for (k, u) in r.iter().enumerate() {
                if u.shape() != (d, d) {
                    return Err(Error::DimensionMismatch(format!(
                        "round {} unitary {k} is not {d}x{d}",
                        i + 1
                    )));
                }
                if !linalg::is_unitary(u, UNITARY_TOL) {
                    return Err(Error::Malformed(format!(
                        "round {} unitary {k} is not unitary",
                        i + 1
                    )));
                }
            }
        }
        if povms.len() != ny {
            return Err(Error::Malformed(format!(
                "{} POVMs for {ny} inputs",
                povms.len()
            )));
        }
        for (y, p) in povms.iter().enumerate() {
            if p.len() != nz {
                return Err(Error::Malformed(format!(
                    "POVM {y} has {} outcomes, expected {nz}",
                    p.len()
                )));
            }
            check_povm(p, dc * db).map_err(|e| Error::Malformed(format!("POVM {y}: {e}")))?;
        }
        Ok(Self {
            nx,
            ny,
            nz,
            da,
            dc,
            db,
            rounds,
            povms,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn t(&self) -> usize {
        self.rounds.len()
    }

    /// `[da, dc, db]`.
    pub fn dims(&self) -> [usize; 3] {
        [self.da, self.dc, self.db]
    }

    /// Dimension of `A ⊗ C ⊗ B`.
    pub fn work_dim(&self) -> usize {
        self.da * self.dc * self.db
    }

    /// Message size of round `i` in qubits.
    pub fn message_qubits(&self) -> f64 {
        (self.dc as f64).log2()
    }

    pub fn povm(&self, y: usize) -> &[CMat] {
        &self.povms[y]
    }

    pub fn unitary(&self, round: usize, input: usize) -> &CMat {
        &self.rounds[round - 1][input]
    }

    pub fn initial_state(&self) -> CVec {
        linalg::basis(self.work_dim(), 0)
    }

    /// Applies round `round` (from 1) with inputs `(x, y)` to a vector on
    /// `A ⊗ C ⊗ B`.
    pub fn apply_round(&self, v: &CVec, round: usize, x: usize, y: usize) -> CVec {
        let dims = [self.da, self.dc, self.db];
        if round % 2 == 1 {
            apply_on_registers(v, &dims, &[0, 1], &self.rounds[round - 1][x])
                .expect("dimensions validated")
        } else {
            apply_on_registers(v, &dims, &[1, 2], &self.rounds[round - 1][y])
                .expect("dimensions validated")
        }
    }

    /// Applies rounds `from + 1 ..= to`.
    pub fn run_rounds(&self, v: &CVec, from: usize, to: usize, x: usize, y: usize) -> CVec {
        (from + 1..=to).fold(v.clone(), |acc, i| self.apply_round(&acc, i, x, y))
    }

    /// Honest state on `A ⊗ C ⊗ B` after `round` rounds.
    pub fn state(&self, x: usize, y: usize, round: usize) -> CVec {
        self.run_rounds(&self.initial_state(), 0, round, x, y)
    }

    /// Bob's outcome law for a mixture `Σ |v_i⟩⟨v_i|` on `A ⊗ C ⊗ B`,
    /// normalized.
    pub fn output_law_mixed(&self, vectors: &[CVec], y: usize) -> Vec<f64> {
        let d = self.dc * self.db;
        let mut rho = CMat::zeros(d, d);
        for v in vectors {
            rho += reduce_vector(v, &[self.da, self.dc * self.db], &[1]).expect("dimensions fixed");
        }
        povm_law(&self.povms[y], &rho)
    }

    pub fn output_law(&self, x: usize, y: usize) -> Vec<f64> {
        self.output_law_mixed(&[self.state(x, y, self.t())], y)
    }

    pub fn check_task(&self, rel: &Relation, mu: &JointDistribution) -> Result<()> {
        if rel.nx() != self.nx || rel.ny() != self.ny || rel.nz() != self.nz {
            return Err(Error::AlphabetMismatch(
                "relation does not match protocol alphabets".into(),
            ));
        }
        if mu.table().len() != self.nx || mu.table()[0].len() != self.ny {
            return Err(Error::AlphabetMismatch(
                "prior does not match protocol inputs".into(),
            ));
        }
        Ok(())
    }

    pub fn exact_error(&self, rel: &Relation, mu: &JointDistribution) -> Result<f64> {
        self.check_task(rel, mu)?;
        let mut err = 0.0;
        for x in 0..self.nx {
            for y in 0..self.ny {
                let w = mu.table()[x][y];
                if w == 0.0 {
                    continue;
                }
                let law = self.output_law(x, y);
                err += w
                    * (0..self.nz)
                        .filter(|&z| !rel.allows(x, y, z))
                        .map(|z| law[z])
                        .sum::<f64>();
            }
        }
        Ok(err)
    }

    /// `Σ_y √μ_Y(y) |state_xy⟩|y⟩` on `A ⊗ C ⊗ B ⊗ Y`.
    pub fn alice_branch(&self, x: usize, mu_y: &Distribution, round: usize) -> CVec {
        let w = self.work_dim();
        let mut v = CVec::zeros(w * self.ny);
        for y in 0..self.ny {
            let p = mu_y.prob(y);
            if p == 0.0 {
                continue;
            }
            let s = self.state(x, y, round) * c(p.sqrt());
            for i in 0..w {
                v[i * self.ny + y] = s[i];
            }
        }
        v
    }

    /// `Σ_x √μ_X(x) |x⟩|state_xy⟩` on `X ⊗ A ⊗ C ⊗ B`.
    pub fn bob_branch(&self, y: usize, mu_x: &Distribution, round: usize) -> CVec {
        let w = self.work_dim();
        let mut v = CVec::zeros(self.nx * w);
        for x in 0..self.nx {
            let p = mu_x.prob(x);
            if p == 0.0 {
                continue;
            }
            v.rows_mut(x * w, w)
                .copy_from(&(self.state(x, y, round) * c(p.sqrt())));
        }
        v
    }

    /// Alice-side ensemble after an odd round: owner `X ⊗ A`, other party
    /// `C ⊗ B ⊗ Y`, Bob's input in superposition.
    pub fn alice_ensemble(
        &self,
        mu_x: &Distribution,
        mu_y: &Distribution,
        round: usize,
    ) -> Result<Ensemble> {
        if round.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "Bob does not hold the message after round {round}"
            )));
        }
        let psi = (0..self.nx)
            .map(|x| self.alice_branch(x, mu_y, round))
            .collect();
        Ensemble::new(self.da, self.dc * self.db * self.ny, psi, mu_x.clone())
    }

    /// Bob-side ensemble after an odd round: owner `Y ⊗ C ⊗ B`, other party
    /// `X ⊗ A`, Alice's input in superposition.
    pub fn bob_ensemble(
        &self,
        mu_x: &Distribution,
        mu_y: &Distribution,
        round: usize,
    ) -> Result<Ensemble> {
        if round.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "Bob does not hold the message after round {round}"
            )));
        }
        let dims = [self.nx, self.da, self.dc, self.db];
        let psi = (0..self.ny)
            .map(|y| permute_vector(&self.bob_branch(y, mu_x, round), &dims, &[2, 3, 0, 1]))
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.dc * self.db, self.nx * self.da, psi, mu_y.clone())
    }
}

fn require_product(mu: &JointDistribution) -> Result<()> {
    if !mu.is_product(1e-12) {
        return Err(Error::Precondition(
            "privacy loss is defined for product distributions".into(),
        ));
    }
    Ok(())
}

/// `I(X : Bob)` after `round` rounds, with `X` classically mixed and Bob's
/// input register in `Σ_y √μ_Y(y)|y⟩`. Bob holds `C ⊗ B ⊗ Y` after odd rounds
/// and `B ⊗ Y` otherwise.
pub fn quantum_privacy_loss(
    p: &QuantumTwoWayProtocol,
    mu: &JointDistribution,
    round: usize,
) -> Result<f64> {
    require_product(mu)?;
    check_round(p, round)?;
    let (mu_x, mu_y) = (mu.marginal_x(), mu.marginal_y());
    let psi = (0..p.nx).map(|x| p.alice_branch(x, &mu_y, round)).collect();
    let dim_r = if round % 2 == 1 { p.da } else { p.da * p.dc };
    let e = Ensemble::new(dim_r, p.work_dim() * p.ny / dim_r, psi, mu_x)?;
    Ok(e.information())
}

/// `I(Y : Alice)` after `round` rounds, with `Y` classically mixed and
/// Alice's input register in `Σ_x √μ_X(x)|x⟩`. Alice holds `X ⊗ A ⊗ C` after
/// even rounds and `X ⊗ A` otherwise.
pub fn quantum_privacy_loss_bob(
    p: &QuantumTwoWayProtocol,
    mu: &JointDistribution,
    round: usize,
) -> Result<f64> {
    require_product(mu)?;
    check_round(p, round)?;
    let (mu_x, mu_y) = (mu.marginal_x(), mu.marginal_y());
    let dims = [p.nx, p.da, p.dc, p.db];
    // Bob's registers first
    let (order, dim_r): (&[usize], usize) = if round % 2 == 1 {
        (&[2, 3, 0, 1], p.dc * p.db)
    } else {
        (&[3, 0, 1, 2], p.db)
    };
    let psi = (0..p.ny)
        .map(|y| permute_vector(&p.bob_branch(y, &mu_x, round), &dims, order))
        .collect::<Result<Vec<_>>>()?;
    let e = Ensemble::new(dim_r, p.nx * p.work_dim() / dim_r, psi, mu_y)?;
    Ok(e.information())
}

fn check_round(p: &QuantumTwoWayProtocol, round: usize) -> Result<()> {
    if round > p.t() {
        return Err(Error::OutOfRange(format!(
            "round {round} of a {}-round protocol",
            p.t()
        )));
    }
    Ok(())
}
