use rand::Rng;

use crate::cinfo::{sample_index, Distribution};
use crate::error::{Error, Result};

/// Row-sum tolerance for message kernels.
pub const KERNEL_TOL: f64 = 1e-12;
/// Largest transcript space handled by exhaustive routines.
pub const MAX_TRANSCRIPTS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

/// Finite relation `f ⊆ X × Y × Z`, stored as a dense membership table.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    nx: usize,
    ny: usize,
    nz: usize,
    ok: Vec<bool>,
}

impl Relation {
    /// `allowed(x, y, z)` is queried for every triple. Every `(x, y)` must
    /// admit some `z`.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        nz: usize,
        allowed: impl Fn(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Malformed(
                "relation alphabets must be non-empty".into(),
            ));
        }
        let mut ok = Vec::with_capacity(nx * ny * nz);
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    ok.push(allowed(x, y, z));
                }
            }
        }
        let r = Self { nx, ny, nz, ok };
        for x in 0..nx {
            for y in 0..ny {
                if !(0..nz).any(|z| r.allows(x, y, z)) {
                    return Err(Error::Malformed(format!(
                        "relation is not total at (x={x}, y={y})"
                    )));
                }
            }
        }
        Ok(r)
    }

    /// Relation of a function `g(x, y)`.
    pub fn function(
        nx: usize,
        ny: usize,
        nz: usize,
        g: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        Self::from_fn(nx, ny, nz, |x, y, z| g(x, y) == z)
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

    #[inline]
    pub fn allows(&self, x: usize, y: usize, z: usize) -> bool {
        self.ok[(x * self.ny + y) * self.nz + z]
    }

    /// `m` independent copies; inputs and outputs are mixed-radix tuples with
    /// the first coordinate most significant.
    pub fn direct_sum(&self, m: u32) -> Result<Self> {
        let (nx, ny, nz) = (self.nx.pow(m), self.ny.pow(m), self.nz.pow(m));
        if nx * ny * nz > 1 << 26 {
            return Err(Error::TooLarge(format!(
                "direct sum table of {} entries",
                nx * ny * nz
            )));
        }
        let digits = |mut v: usize, base: usize| -> Vec<usize> {
            let mut d = vec![0; m as usize];
            for slot in d.iter_mut().rev() {
                *slot = v % base;
                v /= base;
            }
            d
        };
        Self::from_fn(nx, ny, nz, |x, y, z| {
            let (xs, ys, zs) = (digits(x, self.nx), digits(y, self.ny), digits(z, self.nz));
            (0..m as usize).all(|i| self.allows(xs[i], ys[i], zs[i]))
        })
    }
}

/// Per-round message law.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `rows[own input][prefix][symbol]`.
    Stochastic(Vec<Vec<Vec<f64>>>),
    /// `symbol[own input][prefix]`.
    Deterministic(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub speaker: Party,
    pub alphabet: usize,
    pub kernel: Kernel,
}

impl Round {
    #[inline]
    pub fn prob(&self, own: usize, prefix: usize, sym: usize) -> f64 {
        match &self.kernel {
            Kernel::Stochastic(r) => r[own][prefix][sym],
            Kernel::Deterministic(d) => (d[own][prefix] == sym) as u8 as f64,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, own: usize, prefix: usize, rng: &mut R) -> usize {
        match &self.kernel {
            Kernel::Stochastic(r) => sample_index(&r[own][prefix], rng.random()),
            Kernel::Deterministic(d) => d[own][prefix],
        }
    }
}

/// Private-coin protocol with alternating speakers; Bob outputs
/// `output[y][transcript]`. Transcripts are mixed-radix integers over the
/// round alphabets, first round most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalProtocolTree {
    nx: usize,
    ny: usize,
    nz: usize,
    rounds: Vec<Round>,
    output: Vec<Vec<usize>>,
}

impl ClassicalProtocolTree {
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        rounds: Vec<Round>,
        output: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::Malformed("empty input or output alphabet".into()));
        }
        if rounds.is_empty() {
            return Err(Error::Malformed("protocol needs at least one round".into()));
        }
        let mut prefixes = 1usize;
        for (i, r) in rounds.iter().enumerate() {
            if i > 0 && r.speaker == rounds[i - 1].speaker {
                return Err(Error::Malformed(format!(
                    "rounds {i} and {} have the same speaker",
                    i + 1
                )));
            }
            if r.alphabet == 0 {
                return Err(Error::Malformed(format!("round {}: empty alphabet", i + 1)));
            }
            let own = match r.speaker {
                Party::Alice => nx,
                Party::Bob => ny,
            };
            match &r.kernel {
                Kernel::Stochastic(rows) => {
                    if rows.len() != own || rows.iter().any(|p| p.len() != prefixes) {
                        return Err(Error::Malformed(format!(
                            "round {}: kernel must be indexed [{own} inputs][{prefixes} prefixes]",
                            i + 1
                        )));
                    }
                    for (a, per) in rows.iter().enumerate() {
                        for (p, row) in per.iter().enumerate() {
                            if row.len() != r.alphabet {
                                return Err(Error::Malformed(format!(
                                    "round {}: row (input {a}, prefix {p}) has {} entries, alphabet is {}",
                                    i + 1,
                                    row.len(),
                                    r.alphabet
                                )));
                            }
                            let s: f64 = row.iter().sum();
                            if row.iter().any(|v| !(*v >= 0.0)) || (s - 1.0).abs() > KERNEL_TOL {
                                return Err(Error::BadDistribution(format!(
                                    "round {}: row (input {a}, prefix {p}) sums to {s}",
                                    i + 1
                                )));
                            }
                        }
                    }
                }
                Kernel::Deterministic(d) => {
                    if d.len() != own || d.iter().any(|p| p.len() != prefixes) {
                        return Err(Error::Malformed(format!(
                            "round {}: table must be indexed [{own} inputs][{prefixes} prefixes]",
                            i + 1
                        )));
                    }
                    if d.iter().flatten().any(|&s| s >= r.alphabet) {
                        return Err(Error::Malformed(format!(
                            "round {}: symbol outside alphabet",
                            i + 1
                        )));
                    }
                }
            }
            prefixes = prefixes
                .checked_mul(r.alphabet)
                .filter(|&p| p <= MAX_TRANSCRIPTS)
                .ok_or_else(|| {
                    Error::TooLarge(format!("more than {MAX_TRANSCRIPTS} transcripts"))
                })?;
        }
        if output.len() != ny || output.iter().any(|o| o.len() != prefixes) {
            return Err(Error::Malformed(format!(
                "output map must be indexed [{ny} inputs][{prefixes} transcripts]"
            )));
        }
        if output.iter().flatten().any(|&z| z >= nz) {
            return Err(Error::Malformed("output symbol outside Z".into()));
        }
        Ok(Self {
            nx,
            ny,
            nz,
            rounds,
            output,
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

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn num_transcripts(&self) -> usize {
        self.rounds.iter().map(|r| r.alphabet).product()
    }

    pub fn output(&self, y: usize, s: usize) -> usize {
        self.output[y][s]
    }

    /// Symbols of transcript `s`, one per round.
    pub fn symbols(&self, mut s: usize) -> Vec<usize> {
        let mut out = vec![0; self.rounds.len()];
        for (i, r) in self.rounds.iter().enumerate().rev() {
            out[i] = s % r.alphabet;
            s /= r.alphabet;
        }
        out
    }

    pub fn check_inputs(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.nx || y >= self.ny {
            return Err(Error::OutOfRange(format!(
                "input ({x}, {y}) outside {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    pub fn check_relation(&self, rel: &Relation) -> Result<()> {
        if (rel.nx, rel.ny, rel.nz) != (self.nx, self.ny, self.nz) {
            return Err(Error::AlphabetMismatch(format!(
                "relation is {}x{}x{}, protocol is {}x{}x{}",
                rel.nx, rel.ny, rel.nz, self.nx, self.ny, self.nz
            )));
        }
        Ok(())
    }

    /// Product of the kernels of one party's rounds along every transcript,
    /// computed by forward expansion.
    pub(crate) fn party_weights(&self, party: Party, own: usize) -> Vec<f64> {
        let mut w = vec![1.0];
        for r in &self.rounds {
            let mut next = Vec::with_capacity(w.len() * r.alphabet);
            for (p, &v) in w.iter().enumerate() {
                for sym in 0..r.alphabet {
                    next.push(if r.speaker == party {
                        v * r.prob(own, p, sym)
                    } else {
                        v
                    });
                }
            }
            w = next;
        }
        w
    }

    /// Simulates one run with private coins drawn from `rng`.
    pub fn run<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> (usize, usize) {
        let mut s = 0;
        for r in &self.rounds {
            let own = match r.speaker {
                Party::Alice => x,
                Party::Bob => y,
            };
            s = s * r.alphabet + r.sample(own, s, rng);
        }
        (s, self.output[y][s])
    }
}

/// Law of the full transcript on input `(x, y)`.
pub fn transcript_distribution(
    tree: &ClassicalProtocolTree,
    x: usize,
    y: usize,
) -> Result<Distribution> {
    Distribution::from_probs(transcript_probs(tree, x, y)?)
}

pub(crate) fn transcript_probs(
    tree: &ClassicalProtocolTree,
    x: usize,
    y: usize,
) -> Result<Vec<f64>> {
    tree.check_inputs(x, y)?;
    let mut w = vec![1.0];
    for r in &tree.rounds {
        let own = match r.speaker {
            Party::Alice => x,
            Party::Bob => y,
        };
        let mut next = Vec::with_capacity(w.len() * r.alphabet);
        for (p, &v) in w.iter().enumerate() {
            for sym in 0..r.alphabet {
                next.push(v * r.prob(own, p, sym));
            }
        }
        w = next;
    }
    Ok(w)
}

/// Averaged transcript laws under a product prior: `P_x = E_y P_{x,y}`,
/// `P_y = E_x P_{x,y}`, `P = E_{x,y} P_{x,y}`.
#[derive(Debug, Clone)]
pub struct AveragedTranscripts {
    pub px: Vec<Vec<f64>>,
    pub py: Vec<Vec<f64>>,
    pub p: Vec<f64>,
}

pub fn average_transcripts(
    tree: &ClassicalProtocolTree,
    mu_x: &Distribution,
    mu_y: &Distribution,
) -> Result<AveragedTranscripts> {
    if mu_x.len() != tree.nx || mu_y.len() != tree.ny {
        return Err(Error::AlphabetMismatch(
            "prior does not match protocol inputs".into(),
        ));
    }
    let t = tree.num_transcripts();
    if tree.nx.saturating_mul(tree.ny).saturating_mul(t) > 1 << 28 {
        return Err(Error::TooLarge(
            "averaging needs |X|*|Y|*|transcripts| <= 2^28".into(),
        ));
    }
    let mut px = vec![vec![0.0; t]; tree.nx];
    let mut py = vec![vec![0.0; t]; tree.ny];
    let mut p = vec![0.0; t];
    for x in 0..tree.nx {
        for y in 0..tree.ny {
            let d = transcript_probs(tree, x, y)?;
            let (wx, wy) = (mu_x.prob(x), mu_y.prob(y));
            for s in 0..t {
                px[x][s] += wy * d[s];
                py[y][s] += wx * d[s];
                p[s] += wx * wy * d[s];
            }
        }
    }
    Ok(AveragedTranscripts { px, py, p })
}

/// `max_s |p^x(s) p^y(s) − p(s) p^{x,y}(s)|`.
pub fn product_identity_check(
    tree: &ClassicalProtocolTree,
    avg: &AveragedTranscripts,
    x: usize,
    y: usize,
) -> Result<f64> {
    let d = transcript_probs(tree, x, y)?;
    Ok((0..d.len())
        .map(|s| (avg.px[x][s] * avg.py[y][s] - avg.p[s] * d[s]).abs())
        .fold(0.0, f64::max))
}
