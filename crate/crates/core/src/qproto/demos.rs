use rand::Rng;

use crate::cinfo::{Distribution, JointDistribution};
use crate::cproto::{self, exact_error, privacy_loss_classical, Relation};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};

use super::ensemble::Ensemble;
use super::one_way::QuantumOneWayProtocol;
use super::two_way::QuantumTwoWayProtocol;

fn permutation(d: usize, f: impl Fn(usize) -> usize) -> CMat {
    let mut u = CMat::zeros(d, d);
    for i in 0..d {
        u[(f(i), i)] = c(1.0);
    }
    u
}

fn projector(d: usize, i: usize) -> CMat {
    linalg::outer(&linalg::basis(d, i))
}

/// Alice writes `x ∈ [n]` into the message register; Bob reads it.
pub fn send_input_protocol(n: usize) -> Result<(QuantumTwoWayProtocol, Relation)> {
    if n == 0 {
        return Err(Error::OutOfRange("empty input alphabet".into()));
    }
    let round = (0..n).map(|x| permutation(n, |cc| (cc + x) % n)).collect();
    let povm = vec![(0..n).map(|z| projector(n, z)).collect()];
    let p = QuantumTwoWayProtocol::new(n, 1, n, [1, n, 1], vec![round], povm)?;
    Ok((p, Relation::function(n, 1, n, |x, _| x)?))
}

/// Clean three-round protocol for the inner product mod 2 of two `n`-bit
/// strings: Alice sends `x`, Bob adds `x·y` into his work qubit and returns
/// `x`, Alice erases it.
pub fn inner_product_protocol(n: u32) -> Result<(QuantumTwoWayProtocol, Relation)> {
    if n == 0 || n > 6 {
        return Err(Error::OutOfRange(format!("n = {n} not in 1..=6")));
    }
    let d = 1usize << n;
    let alice: Vec<CMat> = (0..d).map(|x| permutation(d, |cc| cc ^ x)).collect();
    let bob: Vec<CMat> = (0..d)
        .map(|y| permutation(2 * d, |i| i ^ (((i >> 1) & y).count_ones() as usize & 1)))
        .collect();
    let povms = (0..d)
        .map(|_| {
            (0..2)
                .map(|z| linalg::kron(&linalg::identity(d), &projector(2, z)))
                .collect()
        })
        .collect();
    let p = QuantumTwoWayProtocol::new(d, d, 2, [1, d, 2], vec![alice.clone(), bob, alice], povms)?;
    let rel = Relation::function(d, d, 2, |x, y| (x & y).count_ones() as usize & 1)?;
    Ok((p, rel))
}

/// One-way Index protocol on an `n`-bit database: Alice sends bits 0 and 1
/// of `x` as two qubits; Bob answers `x_i` by measuring qubit `i` when
/// `i < 2` and with a fair coin otherwise.
pub fn index_one_way(n: usize) -> Result<(QuantumOneWayProtocol, Relation)> {
    if !(2..=12).contains(&n) {
        return Err(Error::OutOfRange(format!(
            "database size {n} not in 2..=12"
        )));
    }
    let psi = (0..1usize << n).map(|x| linalg::basis(4, x & 3)).collect();
    let povms = (0..n)
        .map(|i| {
            if i < 2 {
                (0..2)
                    .map(|z| {
                        (0..4)
                            .filter(|m| (m >> i) & 1 == z)
                            .map(|m| projector(4, m))
                            .sum::<CMat>()
                    })
                    .collect()
            } else {
                vec![linalg::identity(4) * c(0.5); 2]
            }
        })
        .collect();
    let p = QuantumOneWayProtocol::new(1, 4, 2, psi, povms)?;
    Ok((p, Relation::function(1 << n, n, 2, |x, i| (x >> i) & 1)?))
}

/// Exact figures of the two-round Index protocol where Bob first sends the
/// top `b` bits of his index and Alice answers with the matching block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexTradeoff {
    pub k_a: f64,
    pub k_b: f64,
    pub correctness: f64,
    pub alice_bits: u32,
    pub bob_bits: u32,
}

/// `n` is the database size (a power of two) and `0 ≤ b ≤ log₂ n`.
pub fn index_tradeoff_demo(n: usize, b: u32) -> Result<IndexTradeoff> {
    let (tree, rel) = cproto::builders::index_tradeoff(n, b)?;
    let (mu_x, mu_y) = (
        Distribution::uniform(tree.nx()),
        Distribution::uniform(tree.ny()),
    );
    let (k_a, k_b) = privacy_loss_classical(&tree, &mu_x, &mu_y)?;
    let err = exact_error(&tree, &rel, &JointDistribution::product(&mu_x, &mu_y))?;
    Ok(IndexTradeoff {
        k_a,
        k_b,
        correctness: 1.0 - err,
        alice_bits: (n >> b) as u32,
        bob_bits: b,
    })
}

/// Random prior with every weight at least `floor / n`.
pub fn random_distribution<R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    Distribution::from_weights(w).expect("positive weights")
}

/// `|X| = nx` Haar-random states on `R ⊗ O` with a random full-support
/// prior.
pub fn random_ensemble<R: Rng + ?Sized>(
    nx: usize,
    dim_r: usize,
    dim_o: usize,
    rng: &mut R,
) -> Result<Ensemble> {
    let psi = (0..nx)
        .map(|_| linalg::random_state(dim_r * dim_o, rng))
        .collect();
    Ensemble::new(dim_r, dim_o, psi, random_distribution(nx, 0.1, rng))
}

/// Haar-random unitaries in every round and, for each `y`, a Haar-random
/// basis of `C ⊗ B` whose elements are assigned to outcomes `i mod nz`.
pub fn random_two_way<R: Rng + ?Sized>(
    nx: usize,
    ny: usize,
    nz: usize,
    dims: [usize; 3],
    t: usize,
    rng: &mut R,
) -> Result<QuantumTwoWayProtocol> {
    let [da, dc, db] = dims;
    let rounds = (1..=t)
        .map(|i| {
            let (n, d) = if i % 2 == 1 {
                (nx, da * dc)
            } else {
                (ny, dc * db)
            };
            (0..n).map(|_| linalg::haar_unitary(d, rng)).collect()
        })
        .collect();
    let d = dc * db;
    let povms = (0..ny)
        .map(|_| {
            let u = linalg::haar_unitary(d, rng);
            (0..nz)
                .map(|z| {
                    (z..d)
                        .step_by(nz)
                        .map(|i| linalg::outer(&u.column(i).into_owned()))
                        .fold(CMat::zeros(d, d), |a, b| a + b)
                })
                .collect()
        })
        .collect();
    QuantumTwoWayProtocol::new(nx, ny, nz, dims, rounds, povms)
}

/// Relation accepting exactly the most likely outcomes of `p` on each input
/// pair.
pub fn argmax_relation(p: &QuantumTwoWayProtocol) -> Result<Relation> {
    let laws: Vec<Vec<Vec<f64>>> = (0..p.nx())
        .map(|x| (0..p.ny()).map(|y| p.output_law(x, y)).collect())
        .collect();
    Relation::from_fn(p.nx(), p.ny(), p.nz(), |x, y, z| {
        let m = laws[x][y].iter().copied().fold(0.0, f64::max);
        laws[x][y][z] >= m - 1e-12
    })
}
