//! JSON input files. Every file is an object with a `"kind"` discriminator;
//! complex numbers are `[re, im]` pairs (a bare number is read as real) and
//! distributions are `{label: prob}` objects whose key order fixes the
//! alphabet order.

use commlab::cinfo::{Distribution, JointDistribution};
use commlab::cproto::{ClassicalProtocolTree, Kernel, Party, Relation, Round, ThresholdRule};
use commlab::linalg::{CMat, CVec, C64};
use commlab::qmath::DensityMatrix;
use commlab::qproto::{QuantumOneWayProtocol, QuantumTwoWayProtocol};
use indexmap::IndexMap;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Cx {
    Re(f64),
    ReIm([f64; 2]),
}

impl Cx {
    fn value(self) -> C64 {
        match self {
            Cx::Re(r) => C64::new(r, 0.0),
            Cx::ReIm([r, i]) => C64::new(r, i),
        }
    }
}

pub type JsonVec = Vec<Cx>;
pub type JsonMat = Vec<Vec<Cx>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputFile {
    ClassicalProtocol(ClassicalSpec),
    QuantumOneWay(OneWaySpec),
    QuantumTwoWay(TwoWaySpec),
    ErspInstance(ErspSpec),
    EqEntangled(EqSpec),
    DirectSum(DirectSumSpec),
    Ensemble(EnsembleSpec),
}

impl InputFile {
    pub fn kind(&self) -> &'static str {
        match self {
            InputFile::ClassicalProtocol(_) => "classical-protocol",
            InputFile::QuantumOneWay(_) => "quantum-one-way",
            InputFile::QuantumTwoWay(_) => "quantum-two-way",
            InputFile::ErspInstance(_) => "ersp-instance",
            InputFile::EqEntangled(_) => "eq-entangled",
            InputFile::DirectSum(_) => "direct-sum",
            InputFile::Ensemble(_) => "ensemble",
        }
    }
}

/// Inputs, prior and relation shared by the protocol kinds.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub mu_x: IndexMap<String, f64>,
    pub mu_y: IndexMap<String, f64>,
    pub outputs: Vec<String>,
    /// `relation[x][y]` lists the accepted output labels.
    pub relation: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundSpec {
    pub speaker: String,
    pub alphabet: usize,
    /// `kernel[own input][prefix][symbol]`.
    pub kernel: Option<Vec<Vec<Vec<f64>>>>,
    /// `table[own input][prefix]`, for deterministic rounds.
    pub table: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSpec {
    pub task: TaskSpec,
    pub rounds: Vec<RoundSpec>,
    /// `output[y][transcript]`, an index into `task.outputs`.
    pub output: Vec<Vec<usize>>,
    /// Acceptance threshold rule for compression: `"standard"` (default) or
    /// `"tight"`.
    #[serde(default)]
    pub rule: ThresholdRuleSpec,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRuleSpec {
    #[default]
    Standard,
    Tight,
}

impl From<ThresholdRuleSpec> for ThresholdRule {
    fn from(r: ThresholdRuleSpec) -> Self {
        match r {
            ThresholdRuleSpec::Standard => ThresholdRule::Standard,
            ThresholdRuleSpec::Tight => ThresholdRule::Tight,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneWaySpec {
    pub task: TaskSpec,
    pub dim_keep: usize,
    pub dim_msg: usize,
    /// One state on `keep ⊗ msg` per `x`.
    pub states: Vec<JsonVec>,
    /// `povms[y][z]`, acting on the message register.
    pub povms: Vec<Vec<JsonMat>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoWaySpec {
    pub task: TaskSpec,
    /// `[A, C, B]` register dimensions.
    pub dims: [usize; 3],
    /// `rounds[i][own input]`: on `A ⊗ C` for odd rounds, `C ⊗ B` for even.
    pub rounds: Vec<Vec<JsonMat>>,
    /// `povms[y][z]` on `C ⊗ B`.
    pub povms: Vec<Vec<JsonMat>>,
    /// Round after which the compression cuts in (odd).
    #[serde(default = "one")]
    pub t_prime: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErspSpec {
    pub sigma: JsonMat,
    pub states: IndexMap<String, JsonVec>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqSpec {
    pub m: usize,
    pub n: usize,
    /// Seed of the random partition; the run seed when absent.
    pub partition_seed: Option<u64>,
    /// Schmidt-rank caps for the truncated-prior attack.
    #[serde(default)]
    pub rank_bounds: Vec<usize>,
    /// Dimension of the random subspaces sampled for the low-dimension
    /// property, reported as statistical evidence only.
    #[serde(default = "two")]
    pub low_dim: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSumSpec {
    pub task: TaskSpec,
    pub epsilon: f64,
    pub copies: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub dim_r: usize,
    pub dim_o: usize,
    pub prior: IndexMap<String, f64>,
    /// One state on `R ⊗ O` per label of `prior`, same order.
    pub states: IndexMap<String, JsonVec>,
}

pub fn parse(text: &str) -> Result<InputFile, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Input(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Budget errors keep exit code 4; everything else is an input problem at
/// `path`.
fn at<T>(path: &str, r: commlab::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        commlab::Error::TooLarge(_) => CliError::Library(e),
        e => CliError::Input(format!("{path}: {e}")),
    })
}

pub fn vector(v: &[Cx]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|z| z.value()))
}

pub fn matrix(path: &str, m: &JsonMat) -> Result<CMat, CliError> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(CliError::Input(format!(
            "{path}: matrix must be square and non-empty"
        )));
    }
    Ok(CMat::from_fn(rows, rows, |i, j| m[i][j].value()))
}

pub fn distribution(path: &str, d: &IndexMap<String, f64>) -> Result<Distribution, CliError> {
    at(
        path,
        Distribution::new(d.keys().cloned().collect(), d.values().copied().collect()),
    )
}

/// Validated task: priors, output labels and relation.
#[derive(Debug, Clone)]
pub struct Task {
    pub mu_x: Distribution,
    pub mu_y: Distribution,
    pub outputs: Vec<String>,
    pub relation: Relation,
}

impl Task {
    pub fn joint(&self) -> JointDistribution {
        JointDistribution::product(&self.mu_x, &self.mu_y)
    }
}

pub fn task(t: &TaskSpec) -> Result<Task, CliError> {
    let mu_x = distribution("task.mu_x", &t.mu_x)?;
    let mu_y = distribution("task.mu_y", &t.mu_y)?;
    let (nx, ny, nz) = (mu_x.len(), mu_y.len(), t.outputs.len());
    if nz == 0 {
        return Err(CliError::Input(
            "task.outputs: empty output alphabet".into(),
        ));
    }
    if t.relation.len() != nx {
        return Err(CliError::Input(format!(
            "task.relation: {} rows, expected {nx}",
            t.relation.len()
        )));
    }
    let mut allowed = vec![false; nx * ny * nz];
    for (x, row) in t.relation.iter().enumerate() {
        if row.len() != ny {
            return Err(CliError::Input(format!(
                "task.relation[{x}]: {} entries, expected {ny}",
                row.len()
            )));
        }
        for (y, zs) in row.iter().enumerate() {
            for z in zs {
                let k = t.outputs.iter().position(|o| o == z).ok_or_else(|| {
                    CliError::Input(format!(
                        "task.relation[{x}][{y}]: unknown output label {z:?}"
                    ))
                })?;
                allowed[(x * ny + y) * nz + k] = true;
            }
        }
    }
    let relation = at(
        "task.relation",
        Relation::from_fn(nx, ny, nz, |x, y, z| allowed[(x * ny + y) * nz + z]),
    )?;
    Ok(Task {
        mu_x,
        mu_y,
        outputs: t.outputs.clone(),
        relation,
    })
}

pub fn classical(s: &ClassicalSpec) -> Result<(Task, ClassicalProtocolTree), CliError> {
    let task = task(&s.task)?;
    let mut rounds = Vec::with_capacity(s.rounds.len());
    for (i, r) in s.rounds.iter().enumerate() {
        let path = format!("rounds[{i}]");
        let speaker = match r.speaker.as_str() {
            "alice" => Party::Alice,
            "bob" => Party::Bob,
            other => {
                return Err(CliError::Input(format!(
                    "{path}.speaker: {other:?} is neither \"alice\" nor \"bob\""
                )))
            }
        };
        let kernel = match (&r.kernel, &r.table) {
            (Some(k), None) => Kernel::Stochastic(k.clone()),
            (None, Some(t)) => Kernel::Deterministic(t.clone()),
            _ => {
                return Err(CliError::Input(format!(
                    "{path}: give exactly one of \"kernel\" and \"table\""
                )))
            }
        };
        rounds.push(Round {
            speaker,
            alphabet: r.alphabet,
            kernel,
        });
    }
    if rounds.first().is_some_and(|r| r.speaker != Party::Alice) {
        return Err(CliError::Input(
            "rounds[0].speaker: the first message is Alice's".into(),
        ));
    }
    let tree = at(
        "rounds",
        ClassicalProtocolTree::new(
            task.mu_x.len(),
            task.mu_y.len(),
            task.outputs.len(),
            rounds,
            s.output.clone(),
        ),
    )?;
    at("task", tree.check_relation(&task.relation))?;
    Ok((task, tree))
}

fn povm_family(path: &str, p: &[Vec<JsonMat>]) -> Result<Vec<Vec<CMat>>, CliError> {
    p.iter()
        .enumerate()
        .map(|(y, els)| {
            els.iter()
                .enumerate()
                .map(|(z, m)| matrix(&format!("{path}[{y}][{z}]"), m))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

fn check_povms(path: &str, povms: &[Vec<CMat>], dim: usize) -> Result<(), CliError> {
    for (y, els) in povms.iter().enumerate() {
        at(
            &format!("{path}[{y}]"),
            commlab::qproto::check_povm(els, dim),
        )?;
    }
    Ok(())
}

pub fn one_way(s: &OneWaySpec) -> Result<(Task, QuantumOneWayProtocol), CliError> {
    let task = task(&s.task)?;
    if s.states.len() != task.mu_x.len() {
        return Err(CliError::Input(format!(
            "states: {} states for {} inputs",
            s.states.len(),
            task.mu_x.len()
        )));
    }
    if s.povms.len() != task.mu_y.len() {
        return Err(CliError::Input(format!(
            "povms: {} measurements for {} inputs",
            s.povms.len(),
            task.mu_y.len()
        )));
    }
    let psi = s.states.iter().map(|v| vector(v)).collect();
    let povms = povm_family("povms", &s.povms)?;
    check_povms("povms", &povms, s.dim_msg)?;
    let p = at(
        "states",
        QuantumOneWayProtocol::new(s.dim_keep, s.dim_msg, task.outputs.len(), psi, povms),
    )?;
    Ok((task, p))
}

pub fn two_way(s: &TwoWaySpec) -> Result<(Task, QuantumTwoWayProtocol), CliError> {
    let task = task(&s.task)?;
    if s.povms.len() != task.mu_y.len() {
        return Err(CliError::Input(format!(
            "povms: {} measurements for {} inputs",
            s.povms.len(),
            task.mu_y.len()
        )));
    }
    let rounds = s
        .rounds
        .iter()
        .enumerate()
        .map(|(i, us)| {
            us.iter()
                .enumerate()
                .map(|(k, m)| matrix(&format!("rounds[{i}][{k}]"), m))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let povms = povm_family("povms", &s.povms)?;
    check_povms("povms", &povms, s.dims[1] * s.dims[2])?;
    let p = at(
        "rounds",
        QuantumTwoWayProtocol::new(
            task.mu_x.len(),
            task.mu_y.len(),
            task.outputs.len(),
            s.dims,
            rounds,
            povms,
        ),
    )?;
    at("task", p.check_task(&task.relation, &task.joint()))?;
    if s.t_prime.is_multiple_of(2) || s.t_prime > p.t() {
        return Err(CliError::Input(format!(
            "t_prime: {} must be odd and at most {}",
            s.t_prime,
            p.t()
        )));
    }
    Ok((task, p))
}

pub fn ersp(s: &ErspSpec) -> Result<(Vec<String>, commlab::ersp::ErspInstance), CliError> {
    let sigma = at("sigma", DensityMatrix::new(matrix("sigma", &s.sigma)?))?;
    let states = s.states.values().map(|v| vector(v)).collect();
    let inst = at("states", commlab::ersp::ErspInstance::new(states, sigma))?;
    Ok((s.states.keys().cloned().collect(), inst))
}

pub fn ensemble(s: &EnsembleSpec) -> Result<commlab::qproto::Ensemble, CliError> {
    let prior = distribution("prior", &s.prior)?;
    if !s.states.keys().eq(s.prior.keys()) {
        return Err(CliError::Input(
            "states: labels must match prior labels, in the same order".into(),
        ));
    }
    let psi = s.states.values().map(|v| vector(v)).collect();
    at(
        "states",
        commlab::qproto::Ensemble::new(s.dim_r, s.dim_o, psi, prior),
    )
}

/// Builds every object the file describes and reports the first problem.
pub fn validate(file: &InputFile) -> Result<(), CliError> {
    match file {
        InputFile::ClassicalProtocol(s) => classical(s).map(|_| ()),
        InputFile::QuantumOneWay(s) => one_way(s).map(|_| ()),
        InputFile::QuantumTwoWay(s) => two_way(s).map(|_| ()),
        InputFile::ErspInstance(s) => ersp(s).map(|_| ()),
        InputFile::EqEntangled(s) => {
            if s.m == 0 || s.n == 0 || s.m % commlab::entres::BLOCKS != 0 {
                return Err(CliError::Input(format!(
                    "m, n: need n >= 1 and m a positive multiple of {}",
                    commlab::entres::BLOCKS
                )));
            }
            if s.low_dim == 0 || s.low_dim > s.m {
                return Err(CliError::Input(format!(
                    "low_dim: {} not in 1..={}",
                    s.low_dim, s.m
                )));
            }
            if s.rank_bounds.contains(&0) {
                return Err(CliError::Input(
                    "rank_bounds: entries must be at least 1".into(),
                ));
            }
            Ok(())
        }
        InputFile::DirectSum(s) => {
            task(&s.task)?;
            if !(0.0..1.0).contains(&s.epsilon) {
                return Err(CliError::Input(format!(
                    "epsilon: {} not in [0,1)",
                    s.epsilon
                )));
            }
            if s.copies.is_empty() || s.copies.contains(&0) {
                return Err(CliError::Input(
                    "copies: give at least one count, each at least 1".into(),
                ));
            }
            Ok(())
        }
        InputFile::Ensemble(s) => ensemble(s).map(|_| ()),
    }
}
