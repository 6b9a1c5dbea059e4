//! Small protocol and relation families used by tests, benches and the CLI.

use rand::Rng;

use super::tree::{ClassicalProtocolTree, Kernel, Party, Relation, Round};
use crate::error::{Error, Result};

fn det(speaker: Party, alphabet: usize, table: Vec<Vec<usize>>) -> Round {
    Round {
        speaker,
        alphabet,
        kernel: Kernel::Deterministic(table),
    }
}

/// Alice sends `x ∈ [n]` verbatim; Bob (no input) outputs it.
pub fn send_input(n: usize) -> Result<ClassicalProtocolTree> {
    let r = det(Party::Alice, n, (0..n).map(|x| vec![x]).collect());
    ClassicalProtocolTree::new(n, 1, n, vec![r], vec![(0..n).collect()])
}

/// Alice sends a uniform bit, Bob echoes it and outputs it.
pub fn echo_bit() -> Result<ClassicalProtocolTree> {
    let a = Round {
        speaker: Party::Alice,
        alphabet: 2,
        kernel: Kernel::Stochastic(vec![vec![vec![0.5, 0.5]]]),
    };
    let b = det(Party::Bob, 2, vec![vec![0, 1]]);
    ClassicalProtocolTree::new(1, 1, 2, vec![a, b], vec![vec![0, 0, 0, 1]])
}

/// One-symbol message regardless of input; Bob outputs `z = 0`.
pub fn constant_tree(nx: usize, ny: usize, nz: usize) -> Result<ClassicalProtocolTree> {
    let r = det(Party::Alice, 1, vec![vec![0]; nx]);
    ClassicalProtocolTree::new(nx, ny, nz, vec![r], vec![vec![0]; ny])
}

/// Random alternating tree starting with Alice. Kernel weights are squared
/// uniforms, so rows are strictly positive but uneven.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    nx: usize,
    ny: usize,
    nz: usize,
    rounds: usize,
    alphabet_max: usize,
) -> Result<ClassicalProtocolTree> {
    if alphabet_max < 2 || rounds == 0 {
        return Err(Error::OutOfRange(
            "need alphabet_max >= 2 and rounds >= 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(rounds);
    let mut prefixes = 1;
    let mut speaker = Party::Alice;
    for _ in 0..rounds {
        let a = rng.random_range(2..=alphabet_max);
        let own = if speaker == Party::Alice { nx } else { ny };
        let rows = (0..own)
            .map(|_| {
                (0..prefixes)
                    .map(|_| {
                        let w: Vec<f64> =
                            (0..a).map(|_| rng.random::<f64>().powi(2) + 1e-3).collect();
                        let s: f64 = w.iter().sum();
                        w.into_iter().map(|v| v / s).collect()
                    })
                    .collect()
            })
            .collect();
        out.push(Round {
            speaker,
            alphabet: a,
            kernel: Kernel::Stochastic(rows),
        });
        prefixes *= a;
        speaker = speaker.other();
    }
    let output = (0..ny)
        .map(|_| (0..prefixes).map(|_| rng.random_range(0..nz)).collect())
        .collect();
    ClassicalProtocolTree::new(nx, ny, nz, out, output)
}

/// Random total relation: each triple allowed with probability `density`,
/// plus one forced answer per `(x, y)`.
pub fn random_relation<R: Rng + ?Sized>(
    rng: &mut R,
    nx: usize,
    ny: usize,
    nz: usize,
    density: f64,
) -> Result<Relation> {
    let forced: Vec<usize> = (0..nx * ny).map(|_| rng.random_range(0..nz)).collect();
    let extra: Vec<bool> = (0..nx * ny * nz)
        .map(|_| rng.random::<f64>() < density)
        .collect();
    Relation::from_fn(nx, ny, nz, |x, y, z| {
        forced[x * ny + y] == z || extra[(x * ny + y) * nz + z]
    })
}

/// Equality on `bits`-bit strings: `z = [x = y]`.
pub fn equality_relation(bits: u32) -> Result<Relation> {
    let n = 1usize << bits;
    Relation::function(n, n, 2, |x, y| (x == y) as usize)
}

/// Inputs are 2-bit strings; the answer is the AND of the two high bits.
/// Alice sends her high bit through a channel flipping it with probability
/// `noise`; Bob answers with the AND of what he received and his own bit.
pub fn and_first_bits(noise: f64) -> Result<(ClassicalProtocolTree, Relation)> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::OutOfRange(format!("noise {noise} not in [0,1]")));
    }
    let hi = |v: usize| v >> 1;
    let alice = Round {
        speaker: Party::Alice,
        alphabet: 2,
        kernel: Kernel::Stochastic(
            (0..4)
                .map(|x| {
                    let b = hi(x);
                    let mut row = vec![noise; 2];
                    row[b] = 1.0 - noise;
                    vec![row]
                })
                .collect(),
        ),
    };
    let bob = det(Party::Bob, 2, (0..4).map(|y| vec![0, hi(y)]).collect());
    let output = (0..4).map(|_| (0..4).map(|s| s & 1).collect()).collect();
    let tree = ClassicalProtocolTree::new(4, 4, 2, vec![alice, bob], output)?;
    let rel = Relation::function(4, 4, 2, |x, y| hi(x) & hi(y))?;
    Ok((tree, rel))
}

/// Index function on an `n`-bit database (`n` a power of two) with the
/// trade-off protocol: Bob sends the top `b` bits of his index, Alice
/// replies with the `n / 2^b` database bits of that block, Bob reads off
/// the answer. Database bit `j` of `x` is `(x >> j) & 1`.
pub fn index_tradeoff(n: usize, b: u32) -> Result<(ClassicalProtocolTree, Relation)> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::OutOfRange(format!(
            "database size {n} must be a power of two >= 2"
        )));
    }
    let logn = n.trailing_zeros();
    if b > logn {
        return Err(Error::OutOfRange(format!(
            "b = {b} exceeds log2 n = {logn}"
        )));
    }
    if n > 20 {
        return Err(Error::TooLarge(format!("database of {n} bits")));
    }
    let nx = 1usize << n;
    let blocks = 1usize << b;
    let w = n >> b;
    let bob = det(
        Party::Bob,
        blocks,
        (0..n).map(|i| vec![i >> (logn - b)]).collect(),
    );
    let alice = det(
        Party::Alice,
        1 << w,
        (0..nx)
            .map(|x| {
                (0..blocks)
                    .map(|blk| (x >> (blk * w)) & ((1 << w) - 1))
                    .collect()
            })
            .collect(),
    );
    let output = (0..n)
        .map(|i| {
            (0..blocks << w)
                .map(|s| ((s & ((1 << w) - 1)) >> (i % w)) & 1)
                .collect()
        })
        .collect();
    let tree = ClassicalProtocolTree::new(nx, n, 2, vec![bob, alice], output)?;
    let rel = Relation::function(nx, n, 2, |x, i| (x >> i) & 1)?;
    Ok((tree, rel))
}
