//! The eight experiments. Each takes a parsed input file and returns a CSV
//! table plus a JSON summary.

use std::path::PathBuf;

use commlab::cinfo::{entropy_bits, sample_index, JointDistribution};
use commlab::cproto::{
    brute_force_one_way, compress_multiround_classical, privacy_loss_classical, CompressionParams,
    Evaluation, Relation,
};
use commlab::entres::{
    self, build_partition, epr_prior, equality_profile, schmidt_cut, truncation_attack,
};
use commlab::ersp::evaluate_ersp;
use commlab::par::{self, Mode};
use commlab::qproto::{
    build_corrector, compress_multiround_quantum, compress_one_way, quantum_privacy_loss,
    quantum_privacy_loss_bob,
};
use commlab::rng::rng_for;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::output::{fmt_f64, interval, num, Report, Table};
use crate::schema::{self, InputFile};

pub const EXPERIMENTS: [&str; 8] = [
    "compress-classical",
    "compress-quantum",
    "compress-multiround",
    "privacy",
    "ersp",
    "eq-entangled",
    "direct-sum",
    "corrector-audit",
];

/// Copy budget for ERSP runs when the instance does not set one.
pub const DEFAULT_ERSP_BUDGET: u64 = 1 << 20;
/// Random subspaces drawn for the low-dimension statistic.
const LOW_DIM_SAMPLES: u64 = 64;

#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: String,
    pub input: PathBuf,
    pub seed: u64,
    pub trials: u64,
    pub delta: Option<f64>,
}

impl Config {
    /// `δ̃` for classical compression, `δ` everywhere else.
    pub fn delta(&self) -> f64 {
        self.delta
            .unwrap_or(if self.experiment == "compress-classical" {
                0.25
            } else {
                0.2
            })
    }

    fn echo(&self, kind: &str) -> Value {
        json!({
            "experiment": self.experiment,
            "input": self.input.display().to_string(),
            "kind": kind,
            "seed": self.seed,
            "trials": self.trials,
            "delta": num(self.delta()),
        })
    }
}

fn wrong_kind(cfg: &Config, want: &str, got: &InputFile) -> CliError {
    CliError::Input(format!(
        "experiment {} needs a {want} file, got kind {:?}",
        cfg.experiment,
        got.kind()
    ))
}

pub fn run(cfg: &Config, file: &InputFile) -> Result<Report, CliError> {
    let (table, results) = match (cfg.experiment.as_str(), file) {
        ("compress-classical", InputFile::ClassicalProtocol(s)) => compress_classical(cfg, s)?,
        ("compress-classical", f) => return Err(wrong_kind(cfg, "classical-protocol", f)),
        ("compress-quantum", InputFile::QuantumOneWay(s)) => compress_quantum(cfg, s)?,
        ("compress-quantum", f) => return Err(wrong_kind(cfg, "quantum-one-way", f)),
        ("compress-multiround", InputFile::QuantumTwoWay(s)) => compress_multiround(cfg, s)?,
        ("compress-multiround", f) => return Err(wrong_kind(cfg, "quantum-two-way", f)),
        ("privacy", f) => privacy(cfg, f)?,
        ("ersp", InputFile::ErspInstance(s)) => ersp(cfg, s)?,
        ("ersp", f) => return Err(wrong_kind(cfg, "ersp-instance", f)),
        ("eq-entangled", InputFile::EqEntangled(s)) => eq_entangled(cfg, s)?,
        ("eq-entangled", f) => return Err(wrong_kind(cfg, "eq-entangled", f)),
        ("direct-sum", InputFile::DirectSum(s)) => direct_sum(s)?,
        ("direct-sum", f) => return Err(wrong_kind(cfg, "direct-sum", f)),
        ("corrector-audit", InputFile::Ensemble(s)) => corrector_audit(cfg, s)?,
        ("corrector-audit", f) => return Err(wrong_kind(cfg, "ensemble", f)),
        (other, _) => {
            return Err(CliError::Usage(format!(
                "unknown experiment {other:?}; expected one of {}",
                EXPERIMENTS.join(", ")
            )))
        }
    };
    let summary = json!({ "parameters": cfg.echo(file.kind()), "results": results });
    Ok(Report {
        experiment: cfg.experiment.clone(),
        table,
        summary,
    })
}

fn bool_cell(b: bool) -> String {
    if b { "1" } else { "0" }.into()
}

fn trial_table(ev: &Evaluation) -> Table {
    let mut t = Table::new(&["trial", "x", "y", "bits", "correct", "aborted"]);
    for r in &ev.records {
        t.push(vec![
            r.trial.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            fmt_f64(r.bits()),
            bool_cell(r.correct),
            bool_cell(r.aborted),
        ]);
    }
    t
}

fn evaluation_summary(ev: &Evaluation) -> Value {
    json!({
        "trials": ev.trials,
        "errors": ev.errors,
        "aborts": ev.aborts,
        "error_rate": interval(ev.error_rate, ev.sigma),
        "mean_bits": num(ev.mean_bits()),
        "log2_mean_bits": num(ev.log2_mean_bits),
    })
}

fn labels_where(labels: &[String], keep: &[bool]) -> Vec<String> {
    labels
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(l, _)| l.clone())
        .collect()
}

fn compress_classical(cfg: &Config, s: &schema::ClassicalSpec) -> Result<(Table, Value), CliError> {
    let (task, tree) = schema::classical(s)?;
    let mut params = CompressionParams::new(cfg.delta(), cfg.seed);
    params.rule = s.rule.into();
    let comp =
        compress_multiround_classical(&tree, &task.relation, &task.mu_x, &task.mu_y, params)?;
    let ev = comp.evaluate(cfg.trials, cfg.seed, Mode::Parallel)?;
    let results = json!({
        "epsilon": num(comp.epsilon),
        "delta_tilde": num(comp.delta_tilde),
        "delta": num(comp.delta),
        "k_a": num(comp.k_a),
        "k_b": num(comp.k_b),
        "rule": format!("{:?}", comp.rule).to_lowercase(),
        "engine": format!("{:?}", comp.engine).to_lowercase(),
        "log2_threshold_alice": num(comp.log2_ta),
        "log2_threshold_bob": num(comp.log2_tb),
        "log2_rows": num(comp.log2_rows),
        "rows": comp.rows,
        "log2_cutoff": num(comp.log2_c),
        "good_x": labels_where(task.mu_x.labels(), &comp.good_x),
        "good_y": labels_where(task.mu_y.labels(), &comp.good_y),
        "error_target": num(comp.epsilon + comp.delta_tilde),
        "evaluation": evaluation_summary(&ev),
    });
    Ok((trial_table(&ev), results))
}

fn compress_quantum(cfg: &Config, s: &schema::OneWaySpec) -> Result<(Table, Value), CliError> {
    let (task, p) = schema::one_way(s)?;
    let mu = task.joint();
    let leak = p.privacy_loss(&task.mu_x)?;
    let comp = compress_one_way(&p, &task.relation, &mu, cfg.delta())?;
    let ev = comp.evaluate(cfg.trials, cfg.seed, Mode::Parallel)?;
    let results = json!({
        "epsilon": num(comp.epsilon),
        "privacy_loss": num(leak),
        "alpha": num(comp.alpha),
        "copies": comp.copies,
        "index_bits": comp.beta,
        "block_success": num(comp.block_success),
        "exact_error": num(comp.exact_error()),
        "error_target": num(comp.epsilon + comp.delta),
        "evaluation": evaluation_summary(&ev),
    });
    Ok((trial_table(&ev), results))
}

fn compress_multiround(cfg: &Config, s: &schema::TwoWaySpec) -> Result<(Table, Value), CliError> {
    let (task, p) = schema::two_way(s)?;
    let mu = task.joint();
    let comp = compress_multiround_quantum(&p, &task.relation, &mu, s.t_prime, cfg.delta())?;
    let ev = comp.evaluate(cfg.trials, cfg.seed, Mode::Parallel)?;
    let (tail, tail_sigma) =
        comp.tail_monte_carlo(cfg.trials, cfg.seed ^ 0x7461_696c, Mode::Parallel);
    let c = comp.claims;
    let results = json!({
        "t_prime": comp.t_prime,
        "epsilon": num(comp.epsilon),
        "delta_a": num(comp.delta_a),
        "delta_b": num(comp.delta_b),
        "k_a": num(comp.k_a),
        "k_b": num(comp.k_b),
        "alpha": num(comp.alpha),
        "beta": num(comp.beta),
        "r": num(comp.r),
        "copies": comp.copies,
        "max_set": comp.max_set,
        "claims": {
            "ratio": num(c.ratio),
            "ratio_bound": num(c.ratio_bound),
            "trace_distance": num(c.trace_distance),
            "trace_distance_bound": num(c.trace_distance_bound),
            "tail_mass": num(c.tail_mass),
            "tail_bound": num(c.tail_bound),
            "tail_monte_carlo": interval(tail, tail_sigma),
        },
        "exact_error": num(comp.exact_error()),
        "error_target": num(comp.epsilon + comp.delta),
        "evaluation": evaluation_summary(&ev),
    });
    Ok((trial_table(&ev), results))
}

fn privacy(cfg: &Config, file: &InputFile) -> Result<(Table, Value), CliError> {
    let mut t = Table::new(&["round", "leak_about_x", "leak_about_y"]);
    let (mu_x, mu_y) = match file {
        InputFile::ClassicalProtocol(s) => {
            let (task, tree) = schema::classical(s)?;
            let (k_a, k_b) = privacy_loss_classical(&tree, &task.mu_x, &task.mu_y)?;
            t.push(vec![tree.rounds().len().to_string(), fmt_f64(k_a), fmt_f64(k_b)]);
            (task.mu_x, task.mu_y)
        }
        InputFile::QuantumOneWay(s) => {
            let (task, p) = schema::one_way(s)?;
            t.push(vec!["1".into(), fmt_f64(p.privacy_loss(&task.mu_x)?), fmt_f64(0.0)]);
            (task.mu_x, task.mu_y)
        }
        InputFile::QuantumTwoWay(s) => {
            let (task, p) = schema::two_way(s)?;
            let mu = task.joint();
            for r in 1..=p.t() {
                let a = quantum_privacy_loss(&p, &mu, r)?;
                let b = quantum_privacy_loss_bob(&p, &mu, r)?;
                t.push(vec![r.to_string(), fmt_f64(a), fmt_f64(b)]);
            }
            (task.mu_x, task.mu_y)
        }
        f => {
            return Err(CliError::Input(format!(
                "experiment {} needs a classical-protocol, quantum-one-way or quantum-two-way file, got kind {:?}",
                cfg.experiment,
                f.kind()
            )))
        }
    };
    let max = |col: usize| {
        t.rows
            .iter()
            .map(|r| r[col].parse::<f64>().unwrap_or(0.0))
            .fold(0.0, f64::max)
    };
    let results = json!({
        "entropy_x": num(entropy_bits(mu_x.probs())),
        "entropy_y": num(entropy_bits(mu_y.probs())),
        "max_leak_about_x": num(max(1)),
        "max_leak_about_y": num(max(2)),
    });
    Ok((t, results))
}

fn ersp(cfg: &Config, s: &schema::ErspSpec) -> Result<(Table, Value), CliError> {
    let (labels, inst) = schema::ersp(s)?;
    let budget = s.budget.unwrap_or(DEFAULT_ERSP_BUDGET);
    let mut t = Table::new(&["trial", "x", "j", "bits", "fidelity"]);
    let mut per_state = Vec::with_capacity(labels.len());
    for (x, label) in labels.iter().enumerate() {
        let ev = evaluate_ersp(&inst, x, budget, cfg.trials, cfg.seed, Mode::Parallel)?;
        for r in &ev.runs {
            t.push(vec![
                r.trial.to_string(),
                x.to_string(),
                r.j.map(|j| j.to_string()).unwrap_or_default(),
                r.bits.to_string(),
                fmt_f64(r.fidelity),
            ]);
        }
        per_state.push(json!({
            "x": x,
            "label": label,
            "success_probability": num(ev.success),
            "expected_j": num(1.0 / ev.success),
            "j": interval(ev.mean_j, ev.sigma_j),
            "aborts": ev.aborts,
            "mean_bits": num(ev.mean_bits),
            "bits_bound": num(ev.bits_bound),
            "min_fidelity": num(ev.min_fidelity),
        }));
    }
    Ok((
        t,
        json!({ "budget": budget, "dim": inst.dim(), "states": per_state }),
    ))
}

fn profile_rows(t: &mut Table, prior: &str, accept: &[Vec<f64>]) {
    for (x, row) in accept.iter().enumerate() {
        for (x2, a) in row.iter().enumerate() {
            t.push(vec![
                prior.into(),
                x.to_string(),
                x2.to_string(),
                fmt_f64(*a),
            ]);
        }
    }
}

fn eq_entangled(cfg: &Config, s: &schema::EqSpec) -> Result<(Table, Value), CliError> {
    schema::validate(&InputFile::EqEntangled(s.clone()))?;
    let part_seed = s.partition_seed.unwrap_or(cfg.seed);
    let part = build_partition(s.m, s.n, part_seed)?;
    let rep = part.report();
    let epr = epr_prior(s.m);
    let honest = equality_profile(&part, &epr)?;
    let mut t = Table::new(&["prior", "x", "x_prime", "accept"]);
    profile_rows(&mut t, "epr", &honest.accept);
    let mut attacks = Vec::new();
    for &r in &s.rank_bounds {
        let a = truncation_attack(&part, r)?;
        profile_rows(&mut t, &format!("rank-{r}"), &a.truncated.accept);
        attacks.push(json!({
            "rank_bound": r,
            "equal_min": num(a.truncated.equal_min),
            "unequal_max": num(a.truncated.unequal_max),
            "max_shift": num(a.max_shift),
            "below_threshold": a.below_threshold,
        }));
    }
    let cut = schmidt_cut(&epr)?;
    let mut rng = rng_for(cfg.seed, &[0x6c6f_7764_696d]);
    let counts = part.low_dim_counts(s.low_dim, LOW_DIM_SAMPLES as usize, &mut rng)?;
    let results = json!({
        "partition_seed": part_seed,
        "message_bits": entres::message_bits(),
        "partition": {
            "self_overlap_dev": num(rep.self_overlap_dev),
            "same_input_overlap": num(rep.same_input_overlap),
            "completeness_dev": num(rep.completeness_dev),
            "cross_overlap": num(rep.cross_overlap),
            "cross_violations": rep.cross_violations,
            "total_rank": rep.total_rank,
            "exact_properties_hold": rep.exact_props_hold(1e-10),
        },
        "honest": {
            "equal_min": num(honest.equal_min),
            "unequal_max": num(honest.unequal_max),
            "unequal_over_quarter": num(honest.unequal_over_quarter),
        },
        "truncation": attacks,
        "epr_schmidt_cut": {
            "entanglement": num(cut.entanglement),
            "kept_rank": cut.kept_rank,
            "kept_mass": num(cut.kept_mass),
            "trace_norm": num(cut.trace_norm),
            "within_bound": cut.within_bound(),
        },
        "low_dim": {
            "evidence": "statistical",
            "subspace_dim": s.low_dim,
            "samples": LOW_DIM_SAMPLES,
            "max_inputs": counts.iter().copied().max().unwrap_or(0),
            "mean_inputs": num(counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64),
        },
    });
    Ok((t, results))
}

/// `μ^{⊗k}` with the first coordinate most significant, matching
/// [`Relation::direct_sum`].
fn power_prior(table: &[Vec<f64>], k: u32) -> Result<JointDistribution, CliError> {
    let (nx, ny) = (table.len(), table[0].len());
    let (px, py) = (nx.pow(k), ny.pow(k));
    let mut out = vec![vec![0.0; py]; px];
    for (x, row) in out.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            let (mut a, mut b, mut p) = (x, y, 1.0);
            for _ in 0..k {
                p *= table[a % nx][b % ny];
                a /= nx;
                b /= ny;
            }
            *cell = p;
        }
    }
    Ok(JointDistribution::from_table(out)?)
}

fn direct_sum(s: &schema::DirectSumSpec) -> Result<(Table, Value), CliError> {
    schema::validate(&InputFile::DirectSum(s.clone()))?;
    let task = schema::task(&s.task)?;
    let base = task.joint();
    let mut t = Table::new(&["copies", "message_bits", "min_error"]);
    let mut per_k = Vec::new();
    let mut first_bits = None;
    for &k in &s.copies {
        let rel: Relation = task.relation.direct_sum(k)?;
        let mu = power_prior(base.table(), k)?;
        let opt = brute_force_one_way(&rel, &mu, s.epsilon)?;
        for (b, e) in opt.min_error_by_bits.iter().enumerate() {
            t.push(vec![k.to_string(), b.to_string(), fmt_f64(*e)]);
        }
        let first = *first_bits.get_or_insert(opt.bits);
        let ratio = if first == 0 {
            Value::Null
        } else {
            num(opt.bits as f64 / first as f64)
        };
        per_k.push(json!({
            "copies": k,
            "bits": opt.bits,
            "error": num(opt.error()),
            "ratio_to_first": ratio,
            "bits_per_copy": num(opt.bits as f64 / k as f64),
        }));
    }
    Ok((t, json!({ "epsilon": num(s.epsilon), "optima": per_k })))
}

fn corrector_audit(cfg: &Config, s: &schema::EnsembleSpec) -> Result<(Table, Value), CliError> {
    let ens = schema::ensemble(s)?;
    let c = build_corrector(&ens, cfg.delta())?;
    let audit = c.audit();
    let mu = ens.mu();
    let mut t = Table::new(&[
        "x",
        "label",
        "prior",
        "good",
        "divergence",
        "weight",
        "success",
        "residual",
    ]);
    for (x, label) in mu.labels().iter().enumerate() {
        t.push(vec![
            x.to_string(),
            label.clone(),
            fmt_f64(mu.prob(x)),
            bool_cell(c.good[x]),
            fmt_f64(c.divergence[x]),
            fmt_f64(c.weights[x]),
            fmt_f64(c.success_probability(x)),
            fmt_f64(c.residual(x)),
        ]);
    }
    // sampled success rate: x from the prior, then the corrector's outcome
    let hits = par::map_indexed_with(Mode::Parallel, cfg.trials, |i| {
        let mut rng = rng_for(cfg.seed, &[i]);
        let x = sample_index(mu.probs(), rng.random());
        rng.random::<f64>() < c.success_probability(x)
    });
    let n = cfg.trials.max(1) as f64;
    let rate = hits.iter().filter(|&&h| h).count() as f64 / n;
    let mut results = Map::new();
    results.insert("alpha".into(), num(c.alpha));
    results.insert("information".into(), num(c.information));
    results.insert("threshold".into(), num(c.threshold));
    results.insert("success_deviation".into(), num(audit.success_deviation));
    results.insert("register_leak".into(), num(audit.register_leak));
    results.insert("residual".into(), num(audit.residual));
    results.insert("residual_bound".into(), num(audit.delta));
    results.insert("good_mass".into(), num(audit.good_mass));
    results.insert(
        "sampled_success".into(),
        interval(rate, (rate * (1.0 - rate) / n).sqrt()),
    );
    results.insert("pass".into(), Value::Bool(audit.passes(1e-9)));
    Ok((t, Value::Object(results)))
}
