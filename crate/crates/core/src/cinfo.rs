//! Finite classical distributions, divergences, likelihood-ratio Good sets
//! and a prefix-free integer code.

use crate::error::{Error, Result};

pub const NORM_TOL: f64 = 1e-12;

/// Probability vector over a labeled alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    labels: Vec<String>,
    probs: Vec<f64>,
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::BadDistribution("empty alphabet".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::BadDistribution(format!(
            "negative or non-finite probability {p}"
        )));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > NORM_TOL {
        return Err(Error::BadDistribution(format!("probabilities sum to {s}")));
    }
    Ok(())
}

impl Distribution {
    pub fn new(labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::BadDistribution(format!(
                "{} labels for {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        check_probs(&probs)?;
        Ok(Self { labels, probs })
    }

    /// Labels `0..n`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let labels = (0..probs.len()).map(|i| i.to_string()).collect();
        Self::new(labels, probs)
    }

    /// Renormalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::BadDistribution(format!("weights sum to {s}")));
        }
        Self::from_probs(weights.into_iter().map(|w| w / s).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_probs(vec![1.0 / n as f64; n]).expect("uniform is valid")
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Self::from_probs(p).expect("point mass is valid")
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] > 0.0).collect()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    /// Inverse-CDF sample from a uniform `u ∈ [0,1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        sample_index(&self.probs, u)
    }
}

/// Inverse-CDF lookup; never returns an index of zero probability.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Relative entropy on raw vectors, `+∞` on a support violation.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a <= 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        s += a * (a / b).log2();
    }
    s.max(0.0)
}

fn same_alphabet(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.labels != q.labels {
        return Err(Error::AlphabetMismatch(format!(
            "{} vs {} symbols or differing labels",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `S(P‖Q)` in bits; `+∞` when `Q(x) = 0 < P(x)` for some `x`.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_alphabet(p, q)?;
    Ok(kl_bits(&p.probs, &q.probs))
}

/// Joint law of two labeled variables; `table[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    labels_x: Vec<String>,
    labels_y: Vec<String>,
    table: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(labels_x: Vec<String>, labels_y: Vec<String>, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.len() != labels_x.len() || table.iter().any(|r| r.len() != labels_y.len()) {
            return Err(Error::BadDistribution(
                "joint table shape does not match alphabets".into(),
            ));
        }
        check_probs(&table.concat())?;
        Ok(Self {
            labels_x,
            labels_y,
            table,
        })
    }

    pub fn from_table(table: Vec<Vec<f64>>) -> Result<Self> {
        let nx = table.len();
        let ny = table.first().map_or(0, |r| r.len());
        Self::new(
            (0..nx).map(|i| i.to_string()).collect(),
            (0..ny).map(|i| i.to_string()).collect(),
            table,
        )
    }

    pub fn product(a: &Distribution, b: &Distribution) -> Self {
        let table = a
            .probs
            .iter()
            .map(|&pa| b.probs.iter().map(|&pb| pa * pb).collect())
            .collect();
        Self {
            labels_x: a.labels.clone(),
            labels_y: b.labels.clone(),
            table,
        }
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn marginal_x(&self) -> Distribution {
        let p = self.table.iter().map(|r| r.iter().sum()).collect();
        Distribution {
            labels: self.labels_x.clone(),
            probs: p,
        }
    }

    pub fn marginal_y(&self) -> Distribution {
        let p = (0..self.labels_y.len())
            .map(|y| self.table.iter().map(|r| r[y]).sum())
            .collect();
        Distribution {
            labels: self.labels_y.clone(),
            probs: p,
        }
    }

    pub fn transpose(&self) -> Self {
        let table = (0..self.labels_y.len())
            .map(|y| self.table.iter().map(|r| r[y]).collect())
            .collect();
        Self {
            labels_x: self.labels_y.clone(),
            labels_y: self.labels_x.clone(),
            table,
        }
    }

    /// Whether the table equals the product of its marginals within `tol`.
    pub fn is_product(&self, tol: f64) -> bool {
        let (px, py) = (self.marginal_x(), self.marginal_y());
        self.table.iter().enumerate().all(|(x, r)| {
            r.iter()
                .enumerate()
                .all(|(y, &v)| (v - px.probs[x] * py.probs[y]).abs() <= tol)
        })
    }
}

/// `I(X:Y) = E_x S(P_{Y|X=x} ‖ P_Y)`.
pub fn mutual_information_classical(j: &JointDistribution) -> f64 {
    mutual_information_table(&j.table)
}

pub fn mutual_information_table(table: &[Vec<f64>]) -> f64 {
    let ny = table.first().map_or(0, |r| r.len());
    let py: Vec<f64> = (0..ny).map(|y| table.iter().map(|r| r[y]).sum()).collect();
    let mut s = 0.0;
    for row in table {
        let px: f64 = row.iter().sum();
        if px <= 0.0 {
            continue;
        }
        let cond: Vec<f64> = row.iter().map(|v| v / px).collect();
        s += px * kl_bits(&cond, &py);
    }
    s.max(0.0)
}

/// `{x : P(x)/Q(x) ≤ 2^{(c+1)/δ}}`, given `S(P‖Q) ≤ c`. The returned set
/// carries `P`-mass at least `1 − δ`; this is checked.
pub fn good_set(p: &Distribution, q: &Distribution, c: f64, delta: f64) -> Result<Vec<usize>> {
    same_alphabet(p, q)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("delta = {delta} not in (0,1)")));
    }
    let s = kl_bits(&p.probs, &q.probs);
    if !(s <= c + 1e-12) {
        return Err(Error::Precondition(format!(
            "S(P||Q) = {s} exceeds c = {c}"
        )));
    }
    let log_t = (c + 1.0) / delta;
    let set = good_set_log2(&p.probs, &q.probs, log_t);
    let mass: f64 = set.iter().map(|&i| p.probs[i]).sum();
    if mass < 1.0 - delta - 1e-12 {
        return Err(Error::Precondition(format!(
            "good set mass {mass} below 1 - delta"
        )));
    }
    Ok(set)
}

/// Indices with `log₂(p/q) ≤ log_t`; zero-`p` entries pass, `q = 0 < p` fails.
pub fn good_set_log2(p: &[f64], q: &[f64], log_t: f64) -> Vec<usize> {
    (0..p.len())
        .filter(|&i| {
            if p[i] <= 0.0 {
                true
            } else if q[i] <= 0.0 {
                false
            } else {
                (p[i] / q[i]).log2() <= log_t
            }
        })
        .collect()
}

/// Codeword length for `n` given `m = ⌊log₂ n⌋`.
pub fn code_len_from_floor_log2(m: u64) -> u64 {
    m + 2 * (64 - (m + 1).leading_zeros() as u64 - 1) + 1
}

/// Length of the codeword for `n ≥ 1`: `⌊log n⌋ + 2⌊log(⌊log n⌋+1)⌋ + 1`.
pub fn code_len(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::OutOfRange(
            "prefix code is defined for n >= 1".into(),
        ));
    }
    Ok(code_len_from_floor_log2(63 - n.leading_zeros() as u64))
}

/// Elias-delta codeword: `⌊log N⌋` zeros, `N = bit-length(n)` in binary,
/// then `n` without its leading one.
pub fn prefix_encode(n: u64) -> Result<Vec<bool>> {
    if n == 0 {
        return Err(Error::OutOfRange(
            "prefix code is defined for n >= 1".into(),
        ));
    }
    let nbits = 64 - n.leading_zeros() as u64;
    let lbits = 64 - nbits.leading_zeros() as u64;
    let mut out = Vec::with_capacity((lbits - 1 + lbits + nbits - 1) as usize);
    out.extend(std::iter::repeat_n(false, (lbits - 1) as usize));
    for i in (0..lbits).rev() {
        out.push((nbits >> i) & 1 == 1);
    }
    for i in (0..nbits - 1).rev() {
        out.push((n >> i) & 1 == 1);
    }
    Ok(out)
}

/// Decodes one codeword from the front of `bits`; returns the value and the
/// number of bits consumed.
pub fn prefix_decode(bits: &[bool]) -> Result<(u64, usize)> {
    let zeros = bits.iter().take_while(|b| !**b).count();
    if zeros > 6 {
        return Err(Error::Malformed("codeword length prefix too long".into()));
    }
    let lbits = zeros + 1;
    let mut pos = zeros;
    if bits.len() < pos + lbits {
        return Err(Error::Malformed("truncated codeword".into()));
    }
    let mut nbits = 0u64;
    for &b in &bits[pos..pos + lbits] {
        nbits = (nbits << 1) | b as u64;
    }
    pos += lbits;
    if nbits == 0 || nbits > 64 {
        return Err(Error::Malformed(format!("invalid bit length {nbits}")));
    }
    let rest = (nbits - 1) as usize;
    if bits.len() < pos + rest {
        return Err(Error::Malformed("truncated codeword".into()));
    }
    let mut n = 1u64;
    for &b in &bits[pos..pos + rest] {
        n = (n << 1) | b as u64;
    }
    Ok((n, pos + rest))
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}
