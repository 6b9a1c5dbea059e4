use crate::cinfo::JointDistribution;
use crate::error::{Error, Result};

use super::tree::Relation;

pub const MAX_ALICE_INPUTS: usize = 16;
const LEVELS: usize = 5;

/// Exact optimum over deterministic one-way protocols.
#[derive(Debug, Clone, PartialEq)]
pub struct OneWayOptimum {
    /// Smallest message length (bits) reaching the target error.
    pub bits: u32,
    /// Optimal distributional error with `2^b` messages, `b = 0..=4`.
    pub min_error_by_bits: Vec<f64>,
}

impl OneWayOptimum {
    pub fn error(&self) -> f64 {
        self.min_error_by_bits[self.bits as usize]
    }
}

/// Distributional error of Bob's best answer when Alice's message reveals
/// only that `x ∈ block`, for every block `⊆ X` (bitmask indexed).
fn block_costs(rel: &Relation, mu: &JointDistribution) -> Vec<f64> {
    let (nx, ny, nz) = (rel.nx(), rel.ny(), rel.nz());
    let t = mu.table();
    let full = 1usize << nx;
    let mut cost = vec![0.0; full];
    // per y: mass[S][z] of allowed answers and mass[S][nz] in total, built
    // from S minus its lowest element
    let mut mass = vec![0.0; full * (nz + 1)];
    for y in 0..ny {
        mass[..nz + 1].fill(0.0);
        for s in 1..full {
            let low = s.trailing_zeros() as usize;
            let prev = (s & (s - 1)) * (nz + 1);
            let w = t[low][y];
            let base = s * (nz + 1);
            for z in 0..nz {
                mass[base + z] = mass[prev + z] + if rel.allows(low, y, z) { w } else { 0.0 };
            }
            mass[base + nz] = mass[prev + nz] + w;
            let best = mass[base..base + nz].iter().copied().fold(0.0, f64::max);
            cost[s] += (mass[base + nz] - best).max(0.0);
        }
    }
    cost
}

/// Minimal one-way message length for error at most `epsilon` under `mu`,
/// by exact search over all partitions of Alice's inputs into at most 16
/// message classes. Bob answers optimally for each class.
pub fn brute_force_one_way(
    rel: &Relation,
    mu: &JointDistribution,
    epsilon: f64,
) -> Result<OneWayOptimum> {
    let (nx, ny) = (rel.nx(), rel.ny());
    if mu.table().len() != nx || mu.table()[0].len() != ny {
        return Err(Error::AlphabetMismatch(
            "prior does not match relation".into(),
        ));
    }
    if nx > MAX_ALICE_INPUTS {
        return Err(Error::TooLarge(format!(
            "exhaustive search supports |X| <= {MAX_ALICE_INPUTS}"
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::OutOfRange(format!(
            "epsilon = {epsilon} not in [0,1)"
        )));
    }
    let full = (1usize << nx) - 1;
    // f[S] = best error partitioning S into at most 2^level blocks
    let mut f = block_costs(rel, mu);
    let mut best = vec![f[full]];
    for _ in 1..LEVELS {
        let mut g = f.clone();
        for s in 1..=full {
            let low = s & s.wrapping_neg();
            let rest = s ^ low;
            // submasks of S that contain its lowest element
            let mut sub = rest;
            loop {
                let t = sub | low;
                let v = f[t] + f[s ^ t];
                if v < g[s] {
                    g[s] = v;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        f = g;
        best.push(f[full]);
    }
    let tol = 1e-12;
    let bits = best
        .iter()
        .position(|&e| e <= epsilon + tol)
        .ok_or_else(|| {
            Error::Precondition(format!(
                "error {epsilon} unreachable; best is {}",
                best[LEVELS - 1]
            ))
        })?;
    Ok(OneWayOptimum {
        bits: bits as u32,
        min_error_by_bits: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cinfo::Distribution;
    use crate::cproto::builders;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Enumerates every map X -> [c] and lets Bob answer optimally.
    fn naive_min_error(rel: &Relation, mu: &JointDistribution, c: usize) -> f64 {
        let nx = rel.nx();
        let mut best = f64::INFINITY;
        let mut assign = vec![0usize; nx];
        loop {
            let mut err = 0.0;
            for m in 0..c {
                for y in 0..rel.ny() {
                    let mut tot = 0.0;
                    let mut top: f64 = 0.0;
                    for z in 0..rel.nz() {
                        let mut ok = 0.0;
                        for x in 0..nx {
                            if assign[x] == m && rel.allows(x, y, z) {
                                ok += mu.table()[x][y];
                            }
                        }
                        top = top.max(ok);
                    }
                    for x in 0..nx {
                        if assign[x] == m {
                            tot += mu.table()[x][y];
                        }
                    }
                    err += tot - top;
                }
            }
            best = best.min(err);
            let mut i = 0;
            while i < nx {
                assign[i] += 1;
                if assign[i] < c {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
            if i == nx {
                return best;
            }
        }
    }

    fn uniform(nx: usize, ny: usize) -> JointDistribution {
        JointDistribution::product(&Distribution::uniform(nx), &Distribution::uniform(ny))
    }

    #[test]
    fn ignoring_x_needs_no_bits() {
        let rel = Relation::function(3, 4, 4, |_, y| y).unwrap();
        assert_eq!(
            brute_force_one_way(&rel, &uniform(3, 4), 0.0).unwrap().bits,
            0
        );
    }

    #[test]
    fn equality_two_bits() {
        let rel = builders::equality_relation(2).unwrap();
        let mu = uniform(4, 4);
        assert_eq!(brute_force_one_way(&rel, &mu, 0.0).unwrap().bits, 2);
        let opt = brute_force_one_way(&rel, &mu, 3.0 / 16.0).unwrap();
        for c in [1usize, 2, 4] {
            let e = naive_min_error(&rel, &mu, c);
            assert!((e - opt.min_error_by_bits[c.trailing_zeros() as usize]).abs() < 1e-12);
        }
        // one bit: split 1+3 errs on 3/16, 2+2 on 4/16
        assert!((opt.min_error_by_bits[1] - 3.0 / 16.0).abs() < 1e-12);
        assert_eq!(opt.bits, 1);
        assert_eq!(brute_force_one_way(&rel, &mu, 1.0 / 8.0).unwrap().bits, 2);
    }

    #[test]
    fn matches_naive_enumeration_on_random_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(81);
        for _ in 0..5 {
            let rel = builders::random_relation(&mut rng, 5, 3, 3, 0.2).unwrap();
            let t: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..3).map(|_| rand::Rng::random::<f64>(&mut rng)).collect())
                .collect();
            let s: f64 = t.iter().flatten().sum();
            let mu = JointDistribution::from_table(
                t.into_iter()
                    .map(|r| r.into_iter().map(|v| v / s).collect())
                    .collect(),
            )
            .unwrap();
            let opt = brute_force_one_way(&rel, &mu, 0.99).unwrap();
            for (b, &e) in opt.min_error_by_bits.iter().enumerate().take(3) {
                assert!((e - naive_min_error(&rel, &mu, 1 << b)).abs() < 1e-12);
            }
        }
    }
}
