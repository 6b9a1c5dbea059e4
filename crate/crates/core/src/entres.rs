//! Entanglement experiments: Haar-random block partitions of `C^M`, the
//! honest 4-bit Equality protocol on maximally entangled prior states,
//! and Schmidt-truncated replacements of the prior state.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::par;
use crate::qmath::{entanglement_amount, schmidt_truncate, BipartitePureState};
use crate::rng::rng_for;

/// Blocks per basis, i.e. messages of 4 bits.
pub const BLOCKS: usize = 16;
/// Bound on the overlap of blocks from different inputs.
pub const CROSS_BOUND: f64 = 0.25;
/// Equal-input acceptance below which a replacement prior state fails.
pub const ACCEPT_THRESHOLD: f64 = 13.0 / 20.0;
/// Acceptance level for the low-dimension statistic.
pub const LOW_DIM_LEVEL: f64 = 9.0 / 16.0;
/// Allowed trace norm change of the prior state.
pub const TRUNCATION_BOUND: f64 = 1.0 / 20.0;

/// For each input `i`, a Haar-random orthonormal basis of `C^M` cut into 16
/// consecutive blocks; `Π_ij` projects onto block `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspacePartition {
    m: usize,
    n: usize,
    seed: u64,
    projectors: Vec<Vec<CMat>>,
}

/// Builds the partition from `(M, N, seed)` alone.
pub fn build_partition(m: usize, n: usize, seed: u64) -> Result<SubspacePartition> {
    if m == 0 || !m.is_multiple_of(BLOCKS) {
        return Err(Error::OutOfRange(format!(
            "M = {m} is not a positive multiple of 16"
        )));
    }
    if n == 0 {
        return Err(Error::OutOfRange("N must be at least 1".into()));
    }
    crate::qproto::check_dim(m * m)?;
    let w = m / BLOCKS;
    let projectors = par::map_indexed(n as u64, |i| {
        let mut rng = rng_for(seed, &[i]);
        let u = linalg::haar_unitary(m, &mut rng);
        (0..BLOCKS)
            .map(|j| {
                let b = u.columns(j * w, w);
                b * b.adjoint()
            })
            .collect()
    });
    Ok(SubspacePartition {
        m,
        n,
        seed,
        projectors,
    })
}

/// Exact self-overlap, same-input and completeness checks, plus the measured
/// cross-input overlaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionReport {
    /// `max |Tr(Π_ij ρ_ij) − 1|`.
    pub self_overlap_dev: f64,
    /// `max_{j≠j'} Tr(Π_ij ρ_ij')`.
    pub same_input_overlap: f64,
    /// `max_i ‖Σ_j Π_ij − I‖_max`.
    pub completeness_dev: f64,
    /// `max_{i≠i'} Tr(Π_ij ρ_i'j')`, 0 when `N = 1`.
    pub cross_overlap: f64,
    /// Number of `(i, j, i', j')`, `i ≠ i'`, with overlap `≥ 1/4`.
    pub cross_violations: u64,
    /// `Σ_j rank Π_ij` for every `i` (all equal to `M`).
    pub total_rank: usize,
}

impl PartitionReport {
    pub fn exact_props_hold(&self, tol: f64) -> bool {
        self.self_overlap_dev <= tol
            && self.same_input_overlap <= tol
            && self.completeness_dev <= tol
    }
}

impl SubspacePartition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn projector(&self, i: usize, j: usize) -> &CMat {
        &self.projectors[i][j]
    }

    /// `ρ_ij = (16/M) Π_ij`.
    pub fn state(&self, i: usize, j: usize) -> CMat {
        &self.projectors[i][j] * c(BLOCKS as f64 / self.m as f64)
    }

    /// `Tr(Π_ij ρ_i'j')`.
    pub fn overlap(&self, i: usize, j: usize, i2: usize, j2: usize) -> f64 {
        linalg::trace(&(self.projector(i, j) * self.state(i2, j2))).re
    }

    pub fn report(&self) -> PartitionReport {
        let per_i = par::map_indexed(self.n as u64, |i| {
            let i = i as usize;
            let mut self_dev: f64 = 0.0;
            let mut same: f64 = 0.0;
            let mut sum = CMat::zeros(self.m, self.m);
            let mut rank = 0;
            for j in 0..BLOCKS {
                self_dev = self_dev.max((self.overlap(i, j, i, j) - 1.0).abs());
                for j2 in (0..BLOCKS).filter(|&j2| j2 != j) {
                    same = same.max(self.overlap(i, j, i, j2).abs());
                }
                sum += self.projector(i, j);
                rank += linalg::trace(self.projector(i, j)).re.round() as usize;
            }
            let comp = linalg::max_abs(&(sum - linalg::identity(self.m)));
            let mut cross: f64 = 0.0;
            let mut viol = 0u64;
            for i2 in (0..self.n).filter(|&i2| i2 != i) {
                for j in 0..BLOCKS {
                    for j2 in 0..BLOCKS {
                        let o = self.overlap(i, j, i2, j2);
                        cross = cross.max(o);
                        if o >= CROSS_BOUND {
                            viol += 1;
                        }
                    }
                }
            }
            (self_dev, same, comp, cross, viol, rank)
        });
        PartitionReport {
            self_overlap_dev: per_i.iter().map(|t| t.0).fold(0.0, f64::max),
            same_input_overlap: per_i.iter().map(|t| t.1).fold(0.0, f64::max),
            completeness_dev: per_i.iter().map(|t| t.2).fold(0.0, f64::max),
            cross_overlap: per_i.iter().map(|t| t.3).fold(0.0, f64::max),
            cross_violations: per_i.iter().map(|t| t.4).sum(),
            total_rank: per_i.iter().map(|t| t.5).min().unwrap_or(0),
        }
    }

    /// Low-dimension statistic on random subspaces `W` of dimension `w`: for each
    /// sample, the number of inputs `i` for which some `σ` supported in `W`
    /// has `Tr(Π_ij σ) > 9/16` for some `j`. The optimum over `σ` is the top
    /// eigenvalue of `Π_W Π_ij Π_W`, so only `W` is sampled.
    pub fn low_dim_counts<R: Rng + ?Sized>(
        &self,
        w: usize,
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if w == 0 || w > self.m {
            return Err(Error::OutOfRange(format!(
                "subspace dimension {w} not in 1..={}",
                self.m
            )));
        }
        Ok((0..samples)
            .map(|_| {
                let basis = linalg::haar_unitary(self.m, rng).columns(0, w).into_owned();
                (0..self.n)
                    .filter(|&i| {
                        (0..BLOCKS).any(|j| {
                            let r = basis.adjoint() * self.projector(i, j) * &basis;
                            linalg::eigvalsh(&r)[0] > LOW_DIM_LEVEL
                        })
                    })
                    .count()
            })
            .collect())
    }
}

/// `M`-dimensional maximally entangled prior state (`m` EPR pairs when
/// `M = 2^m`).
pub fn epr_prior(m: usize) -> BipartitePureState {
    BipartitePureState::maximally_entangled(m)
}

/// Acceptance probability of the honest protocol on inputs `(x, x')` from
/// the prior state `phi`.
///
/// Alice measures `{conj(Π_xj)}_j` on her half, which leaves Bob's half of a
/// maximally entangled state in `ρ_xj`; she sends `j` in 4 bits. Bob accepts
/// with `{Π_x'j, I − Π_x'j}`.
pub fn accept_probability(
    part: &SubspacePartition,
    phi: &BipartitePureState,
    x: usize,
    x2: usize,
) -> Result<f64> {
    if phi.dim_a() != part.m || phi.dim_b() != part.m {
        return Err(Error::DimensionMismatch(format!(
            "prior state is not on C^{0} x C^{0}",
            part.m
        )));
    }
    if x >= part.n || x2 >= part.n {
        return Err(Error::OutOfRange(format!(
            "inputs ({x}, {x2}) not below N = {}",
            part.n
        )));
    }
    let psi = phi.amplitude_matrix();
    let mut acc = 0.0;
    for j in 0..BLOCKS {
        let e = part.projector(x, j).map(|z| z.conj());
        let post = e * &psi;
        // Bob's unnormalized state: Ψ^T Ψ̄
        let bob = post.transpose() * post.map(|z| z.conj());
        acc += linalg::trace(&(part.projector(x2, j) * bob)).re;
    }
    Ok(acc)
}

/// Bits sent by Alice.
pub fn message_bits() -> u32 {
    BLOCKS.trailing_zeros()
}

/// All-pairs acceptance of the honest protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityProfile {
    /// `accept[x][x']`.
    pub accept: Vec<Vec<f64>>,
    /// `min_x accept[x][x]`.
    pub equal_min: f64,
    /// `max_{x≠x'} accept[x][x']`.
    pub unequal_max: f64,
    /// Fraction of ordered pairs `x ≠ x'` accepted with probability `> 1/4`.
    pub unequal_over_quarter: f64,
}

pub fn equality_profile(
    part: &SubspacePartition,
    phi: &BipartitePureState,
) -> Result<EqualityProfile> {
    let n = part.n;
    let flat = par::map_indexed((n * n) as u64, |i| {
        accept_probability(part, phi, i as usize / n, i as usize % n)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let accept: Vec<Vec<f64>> = flat.chunks(n).map(|r| r.to_vec()).collect();
    let equal_min = (0..n).map(|x| accept[x][x]).fold(f64::INFINITY, f64::min);
    let off: Vec<f64> = (0..n)
        .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
        .map(|(x, y)| accept[x][y])
        .collect();
    let unequal_max = off.iter().copied().fold(0.0, f64::max);
    let unequal_over_quarter = if off.is_empty() {
        0.0
    } else {
        off.iter().filter(|&&a| a > CROSS_BOUND).count() as f64 / off.len() as f64
    };
    Ok(EqualityProfile {
        accept,
        equal_min,
        unequal_max,
        unequal_over_quarter,
    })
}

/// The honest protocol on `M` EPR halves.
pub fn equality_protocol(part: &SubspacePartition, x: usize, x2: usize) -> Result<f64> {
    accept_probability(part, &epr_prior(part.m), x, x2)
}

/// Honest protocol run from a Schmidt-truncated prior state.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationProfile {
    pub rank_bound: usize,
    pub honest: EqualityProfile,
    pub truncated: EqualityProfile,
    /// `max |accept' − accept|` over all input pairs.
    pub max_shift: f64,
    /// Whether the equal-input acceptance falls below 13/20 for some input.
    pub below_threshold: bool,
}

pub fn truncation_attack(part: &SubspacePartition, rank_bound: usize) -> Result<TruncationProfile> {
    if rank_bound == 0 {
        return Err(Error::OutOfRange("rank bound must be at least 1".into()));
    }
    let epr = epr_prior(part.m);
    let honest = equality_profile(part, &epr)?;
    let cut = schmidt_truncate(&epr, rank_bound.min(part.m))?;
    let truncated = equality_profile(part, &cut)?;
    let max_shift = honest
        .accept
        .iter()
        .flatten()
        .zip(truncated.accept.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let below_threshold = truncated.equal_min < ACCEPT_THRESHOLD;
    Ok(TruncationProfile {
        rank_bound,
        honest,
        truncated,
        max_shift,
        below_threshold,
    })
}

/// Keeping the Schmidt terms with `λ_i ≥ 2^{−100 e}`, `e = E(φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtCut {
    pub entanglement: f64,
    pub kept_rank: usize,
    /// `2^{100 e}`, capped at `f64::MAX`.
    pub rank_cap: f64,
    pub kept_mass: f64,
    /// `‖|φ⟩⟨φ| − |φ'⟩⟨φ'|‖₁ = 2√(1 − kept mass)`.
    pub trace_norm: f64,
}

impl SchmidtCut {
    pub fn within_bound(&self) -> bool {
        self.trace_norm <= TRUNCATION_BOUND + 1e-12
    }
}

pub fn schmidt_cut(phi: &BipartitePureState) -> Result<SchmidtCut> {
    let e = entanglement_amount(phi);
    let s = phi.schmidt();
    let floor = (-100.0 * e).exp2();
    let lambdas = &s.coefficients;
    let kept = lambdas
        .iter()
        .take_while(|&&l| l >= floor && l > 0.0)
        .count()
        .max(1);
    let mass: f64 = lambdas[..kept].iter().sum();
    let dropped: f64 = lambdas[kept..].iter().sum();
    Ok(SchmidtCut {
        entanglement: e,
        kept_rank: kept,
        rank_cap: (100.0 * e).exp2(),
        kept_mass: mass,
        trace_norm: truncation_trace_norm(dropped),
    })
}

/// Trace norm left by keeping the fewest top Schmidt terms whose mass is at
/// least `mass`.
pub fn min_mass_cut(phi: &BipartitePureState, mass: f64) -> Result<(usize, f64)> {
    let s = phi.schmidt();
    let mut acc = 0.0;
    let mut kept = 0;
    for &l in &s.coefficients {
        if acc >= mass {
            break;
        }
        acc += l;
        kept += 1;
    }
    let kept = kept.max(1);
    Ok((
        kept,
        truncation_trace_norm(s.coefficients[kept..].iter().sum()),
    ))
}

/// `2√(1 − |⟨φ|φ'⟩|²)` for a renormalized truncation that drops Schmidt
/// mass `dropped`; the overlap is `1 − dropped`.
pub fn truncation_trace_norm(dropped: f64) -> f64 {
    2.0 * dropped.max(0.0).sqrt()
}
