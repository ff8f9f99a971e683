//! Experiment driver: seeded corpora, the estimator accuracy study, the
//! search cost study and the oscillation scan.
//!
//! Every random choice is drawn from a substream of a seed written in the
//! study spec. Work is spread over instances with rayon and collected in
//! instance order, so outputs do not depend on the thread count.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csp::{AllowMatrix, CspInstance};
use crate::error::{Error, Result};
use crate::estimate::{estimate, EstimateOptions, Method};
use crate::generator::{derive_seed, generate, random_loopy_edges, substream, GenSpec};
use crate::oracle::{enumerate, frequencies};
use crate::pac::{propagate, PropagationConfig, RoundRecord, Status};
use crate::search::{peleg_solve, solve, BeliefSource, HeuristicSpec, Limits, Outcome, ValueRule, VarRule};

/// A fixed tightness or a range sampled uniformly per instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tightness {
    Fixed(f64),
    Range([f64; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub n: usize,
    pub m: usize,
    pub p1: f64,
    pub p2: Tightness,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    /// Enumerate every candidate with this solution cap; truncated
    /// candidates are dropped.
    #[serde(default)]
    pub oracle_cap: Option<u64>,
    #[serde(default)]
    pub min_solutions: u64,
    #[serde(default)]
    pub max_solutions: Option<u64>,
    /// Drop acyclic constraint graphs.
    #[serde(default)]
    pub require_loopy: bool,
    /// Drop unsatisfiable candidates (decided by search when no oracle cap
    /// is set).
    #[serde(default)]
    pub require_satisfiable: bool,
    /// Candidates generated per family before giving up on filling it.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    pub families: Vec<Family>,
}

fn default_max_attempts() -> usize {
    100_000
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.families.iter().enumerate() {
            if f.replicates == 0 {
                return Err(Error::InvalidConfig(format!("family {i}: replicates must be at least 1")));
            }
            let (lo, hi) = match f.p2 {
                Tightness::Fixed(p) => (p, p),
                Tightness::Range([a, b]) => (a, b),
            };
            if lo > hi {
                return Err(Error::InvalidConfig(format!("family {i}: empty p2 range")));
            }
            for p2 in [lo, hi] {
                GenSpec { n: f.n, m: f.m, p1: f.p1, p2, seed: 0 }.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub gen: GenSpec,
    pub instance: CspInstance,
    /// Exact per-value solution probabilities, when the oracle ran.
    pub exact: Option<Vec<Vec<f64>>>,
    pub solutions: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
    /// `(reason, count)` for every dropped candidate.
    pub dropped: Vec<(String, usize)>,
    /// Families that ran out of attempts before reaching their replicates.
    pub short_families: Vec<usize>,
}

enum Verdict {
    Keep(CorpusEntry),
    Drop(&'static str),
}

fn judge(spec: &CorpusSpec, family: usize, attempt: usize) -> Result<Verdict> {
    let f = &spec.families[family];
    let p2 = match f.p2 {
        Tightness::Fixed(p) => p,
        Tightness::Range([lo, hi]) => {
            let u: f64 = substream(spec.seed, &[family as u64, attempt as u64, 1]).gen();
            lo + (hi - lo) * u
        }
    };
    let gen = GenSpec {
        n: f.n,
        m: f.m,
        p1: f.p1,
        p2,
        seed: derive_seed(spec.seed, &[family as u64, attempt as u64]),
    };
    let instance = generate(&gen)?;
    if spec.require_loopy && instance.is_acyclic() {
        return Ok(Verdict::Drop("acyclic"));
    }
    let (mut exact, mut solutions) = (None, None);
    if let Some(cap) = spec.oracle_cap {
        let census = enumerate(&instance, Some(cap));
        if census.truncated {
            return Ok(Verdict::Drop("oracle cap exceeded"));
        }
        let total = census.total_u64().expect("bounded by the cap");
        if total < spec.min_solutions.max(spec.require_satisfiable as u64) {
            return Ok(Verdict::Drop("too few solutions"));
        }
        if spec.max_solutions.is_some_and(|m| total > m) {
            return Ok(Verdict::Drop("too many solutions"));
        }
        exact = Some(frequencies(&census)?);
        solutions = Some(total);
    } else if spec.require_satisfiable {
        let probe = HeuristicSpec { var_rule: VarRule::FirstFail, ..HeuristicSpec::lex() };
        if !solve(&instance, &probe, Limits::default())?.outcome.is_solution() {
            return Ok(Verdict::Drop("unsatisfiable"));
        }
    }
    Ok(Verdict::Keep(CorpusEntry {
        id: String::new(),
        gen,
        instance,
        exact,
        solutions,
    }))
}

/// Generates candidates in attempt order until each family has its
/// replicates. Candidates are judged in parallel batches; acceptance follows
/// attempt order, so the corpus is the same for any thread count.
pub fn build_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    const BATCH: usize = 64;
    let mut corpus = Corpus::default();
    let mut dropped: Vec<(String, usize)> = Vec::new();
    for (fi, f) in spec.families.iter().enumerate() {
        let mut accepted = 0;
        let mut attempt = 0;
        while accepted < f.replicates && attempt < spec.max_attempts {
            let end = (attempt + BATCH).min(spec.max_attempts);
            let verdicts: Vec<Result<Verdict>> = (attempt..end).into_par_iter().map(|a| judge(spec, fi, a)).collect();
            for v in verdicts {
                attempt += 1;
                match v? {
                    Verdict::Keep(mut entry) => {
                        entry.id = format!("f{fi}-{accepted:04}");
                        corpus.entries.push(entry);
                        accepted += 1;
                        if accepted == f.replicates {
                            break;
                        }
                    }
                    Verdict::Drop(reason) => match dropped.iter_mut().find(|(r, _)| r == reason) {
                        Some((_, c)) => *c += 1,
                        None => dropped.push((reason.to_string(), 1)),
                    },
                }
            }
        }
        if accepted < f.replicates {
            corpus.short_families.push(fi);
        }
    }
    corpus.dropped = dropped;
    Ok(corpus)
}

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracySettings {
    #[serde(default = "default_accuracy_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_accuracy_methods() -> Vec<String> {
    ["pac", "sst", "up", "mst"].map(String::from).to_vec()
}

fn default_epsilon() -> f64 {
    PropagationConfig::default().epsilon
}

fn default_max_iter() -> usize {
    PropagationConfig::default().max_iter
}

impl Default for AccuracySettings {
    fn default() -> Self {
        AccuracySettings {
            methods: default_accuracy_methods(),
            epsilon: default_epsilon(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    #[serde(default = "default_heuristics")]
    pub heuristics: Vec<String>,
    #[serde(default)]
    pub max_backtracks: Option<u64>,
    /// Propagation budget for static beliefs and Peleg relaxation.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Propagation budget for dynamic recomputation.
    #[serde(default = "default_dynamic_epsilon")]
    pub dynamic_epsilon: f64,
    #[serde(default = "default_dynamic_max_iter")]
    pub dynamic_max_iter: usize,
}

fn default_heuristics() -> Vec<String> {
    ["random", "pac-static", "pac-dynamic", "peleg"].map(String::from).to_vec()
}

fn default_dynamic_epsilon() -> f64 {
    PropagationConfig::relaxed().epsilon
}

fn default_dynamic_max_iter() -> usize {
    PropagationConfig::relaxed().max_iter
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            heuristics: default_heuristics(),
            max_backtracks: None,
            epsilon: default_epsilon(),
            max_iter: default_max_iter(),
            dynamic_epsilon: default_dynamic_epsilon(),
            dynamic_max_iter: default_dynamic_max_iter(),
        }
    }
}

/// Contents of a study spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub corpus: CorpusSpec,
    #[serde(default)]
    pub accuracy: AccuracySettings,
    #[serde(default)]
    pub search: SearchSettings,
}

impl StudySpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: StudySpec = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        spec.corpus.validate()?;
        for m in &spec.accuracy.methods {
            m.parse::<Method>()?;
        }
        for h in &spec.search.heuristics {
            HeuristicId::parse(h)?;
        }
        Ok(spec)
    }

    /// The spec as normalized TOML, for echoing into outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub instance: String,
    pub method: Method,
    /// `None` when either probability vector is constant.
    pub r: Option<f64>,
    pub status: String,
    pub converged: bool,
    pub iterations: usize,
    pub min_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySummary {
    pub method: Method,
    pub problems: usize,
    pub undefined: usize,
    pub nonconverged: usize,
    /// Mean per-problem r over defined, converged runs.
    pub mean_r: Option<f64>,
    /// Mean per-problem r over all defined runs.
    pub mean_r_all: Option<f64>,
    /// r over every (variable, value) pair of the corpus at once.
    pub pooled_r: Option<f64>,
}

impl AccuracySummary {
    pub fn nonconvergence_rate(&self) -> f64 {
        if self.problems == 0 {
            0.0
        } else {
            self.nonconverged as f64 / self.problems as f64
        }
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run_accuracy_study(corpus: &Corpus, settings: &AccuracySettings) -> Result<(Vec<AccuracyRow>, Vec<AccuracySummary>)> {
    let methods: Vec<Method> = settings.methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    let opts = EstimateOptions {
        propagation: PropagationConfig {
            epsilon: settings.epsilon,
            max_iter: settings.max_iter,
            ..Default::default()
        },
        ..Default::default()
    };
    opts.propagation.validate()?;

    type Cell = (AccuracyRow, Vec<f64>, Vec<f64>);
    let per_instance: Vec<Vec<Cell>> = corpus
        .entries
        .par_iter()
        .map(|entry| {
            let exact = entry.exact.as_ref().ok_or_else(|| {
                Error::InvalidConfig("accuracy studies need an oracle cap in the corpus spec".into())
            })?;
            let xs = flatten(exact);
            methods
                .iter()
                .map(|&method| {
                    let report = estimate(&entry.instance, method, &opts)?;
                    let ys = flatten(&report.beliefs);
                    let r = match pearson(&xs, &ys) {
                        Ok(r) => Some(r),
                        Err(Error::DegenerateVariance) => None,
                        Err(e) => return Err(e),
                    };
                    let row = AccuracyRow {
                        instance: entry.id.clone(),
                        method,
                        r,
                        status: report.status_text(),
                        converged: report.status.is_none_or(|s| s.is_converged()),
                        iterations: report.iterations,
                        min_mass: report.status.map(|_| {
                            report
                                .metadata
                                .iter()
                                .find(|(k, _)| k == "min_mass")
                                .and_then(|(_, v)| v.parse().ok())
                                .unwrap_or(f64::NAN)
                        }),
                    };
                    Ok((row, xs.clone(), ys))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (mi, &method) in methods.iter().enumerate() {
        let cells: Vec<&Cell> = per_instance.iter().map(|c| &c[mi]).collect();
        let defined_all: Vec<f64> = cells.iter().filter_map(|c| c.0.r).collect();
        let defined_converged: Vec<f64> = cells.iter().filter(|c| c.0.converged).filter_map(|c| c.0.r).collect();
        let pooled_x: Vec<f64> = cells.iter().flat_map(|c| c.1.iter().copied()).collect();
        let pooled_y: Vec<f64> = cells.iter().flat_map(|c| c.2.iter().copied()).collect();
        summaries.push(AccuracySummary {
            method,
            problems: cells.len(),
            undefined: cells.iter().filter(|c| c.0.r.is_none()).count(),
            nonconverged: cells.iter().filter(|c| !c.0.converged).count(),
            mean_r: mean(&defined_converged),
            mean_r_all: mean(&defined_all),
            pooled_r: pearson(&pooled_x, &pooled_y).ok(),
        });
    }
    for cells in per_instance {
        rows.extend(cells.into_iter().map(|c| c.0));
    }
    Ok((rows, summaries))
}

/// Named heuristic configurations used by the search study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicId {
    Lex,
    /// Lex variables, random values.
    Random,
    FirstFail,
    Brelaz,
    /// Lex variables, values by beliefs computed once.
    Static(Method),
    /// Variables and values by beliefs recomputed at every selection.
    Dynamic(Method),
    /// Peleg relaxation with direct decoding.
    Peleg,
}

impl HeuristicId {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown heuristic `{s}`"));
        Ok(match s {
            "lex" => HeuristicId::Lex,
            "random" => HeuristicId::Random,
            "first-fail" => HeuristicId::FirstFail,
            "brelaz" => HeuristicId::Brelaz,
            "peleg" => HeuristicId::Peleg,
            _ => {
                let (method, kind) = s.rsplit_once('-').ok_or_else(bad)?;
                let method: Method = method.parse().map_err(|_| bad())?;
                match kind {
                    "static" => HeuristicId::Static(method),
                    "dynamic" => HeuristicId::Dynamic(method),
                    _ => return Err(bad()),
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            HeuristicId::Lex => "lex".into(),
            HeuristicId::Random => "random".into(),
            HeuristicId::FirstFail => "first-fail".into(),
            HeuristicId::Brelaz => "brelaz".into(),
            HeuristicId::Static(m) => format!("{m}-static"),
            HeuristicId::Dynamic(m) => format!("{m}-dynamic"),
            HeuristicId::Peleg => "peleg".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchRow {
    pub instance: String,
    pub heuristic: String,
    pub outcome: &'static str,
    pub backtracks: u64,
    pub nodes: u64,
    pub propagation_rounds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSummary {
    pub heuristic: String,
    pub problems: usize,
    pub solved: usize,
    /// Median backtracks over all problems; runs stopped by the limit count
    /// with the backtracks spent.
    pub median_backtracks: f64,
    pub mean_backtracks: f64,
    /// Fraction of problems solved within each budget of [`budget_grid`].
    pub curve: Vec<f64>,
}

/// 0, 1, 2, 5, 10, 20, 50, ... up to the first value covering `max`.
pub fn budget_grid(max: u64) -> Vec<u64> {
    let mut grid = vec![0];
    let mut decade = 1u64;
    'outer: loop {
        for step in [1, 2, 5] {
            let b = step * decade;
            grid.push(b);
            if b >= max {
                break 'outer;
            }
        }
        decade = decade.saturating_mul(10);
    }
    grid
}

pub fn median(values: &[u64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] as f64 + v[mid] as f64) / 2.0
    }
}

/// Runs one heuristic on one instance. `seed` feeds random orderings and
/// forest construction.
pub fn run_heuristic(inst: &CspInstance, id: HeuristicId, settings: &SearchSettings, seed: u64) -> Result<crate::search::SearchResult> {
    let limits = Limits {
        max_backtracks: settings.max_backtracks,
        max_nodes: None,
    };
    let static_cfg = PropagationConfig {
        epsilon: settings.epsilon,
        max_iter: settings.max_iter,
        ..Default::default()
    };
    let opts = |cfg| EstimateOptions {
        propagation: cfg,
        seed,
        ..Default::default()
    };
    let spec = match id {
        HeuristicId::Lex => HeuristicSpec::lex(),
        HeuristicId::Random => HeuristicSpec {
            value_rule: ValueRule::Random(seed),
            ..HeuristicSpec::lex()
        },
        HeuristicId::FirstFail => HeuristicSpec { var_rule: VarRule::FirstFail, ..HeuristicSpec::lex() },
        HeuristicId::Brelaz => HeuristicSpec { var_rule: VarRule::Brelaz, ..HeuristicSpec::lex() },
        HeuristicId::Static(method) => {
            let report = estimate(inst, method, &opts(static_cfg))?;
            let rounds = report.status.map_or(0, |_| report.iterations as u64 + 1);
            let spec = HeuristicSpec {
                var_rule: VarRule::Lex,
                value_rule: ValueRule::MaxBelief,
                beliefs: BeliefSource::Static(report),
            };
            let mut out = solve(inst, &spec, limits)?;
            out.propagation_rounds += rounds;
            return Ok(out);
        }
        HeuristicId::Dynamic(method) => HeuristicSpec {
            var_rule: VarRule::MaxBelief,
            value_rule: ValueRule::MaxBelief,
            beliefs: BeliefSource::Dynamic {
                method,
                options: opts(PropagationConfig {
                    epsilon: settings.dynamic_epsilon,
                    max_iter: settings.dynamic_max_iter,
                    ..Default::default()
                }),
            },
        },
        HeuristicId::Peleg => return peleg_solve(inst, &static_cfg, limits),
    };
    solve(inst, &spec, limits)
}

pub fn run_search_study(corpus: &Corpus, settings: &SearchSettings, seed: u64) -> Result<(Vec<SearchRow>, Vec<SearchSummary>, Vec<u64>)> {
    let ids: Vec<HeuristicId> = settings.heuristics.iter().map(|h| HeuristicId::parse(h)).collect::<Result<_>>()?;
    let per_instance: Vec<Vec<SearchRow>> = corpus
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let run_seed = derive_seed(seed, &[i as u64]);
            ids.iter()
                .map(|&id| {
                    let r = run_heuristic(&entry.instance, id, settings, run_seed)?;
                    Ok(SearchRow {
                        instance: entry.id.clone(),
                        heuristic: id.name(),
                        outcome: r.outcome.name(),
                        backtracks: r.backtracks,
                        nodes: r.nodes,
                        propagation_rounds: r.propagation_rounds,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let max_seen = per_instance.iter().flatten().map(|r| r.backtracks).max().unwrap_or(0);
    let grid = budget_grid(settings.max_backtracks.unwrap_or(max_seen).max(max_seen));
    let summaries = ids
        .iter()
        .enumerate()
        .map(|(hi, id)| {
            let runs: Vec<&SearchRow> = per_instance.iter().map(|rows| &rows[hi]).collect();
            let solved: Vec<u64> = runs
                .iter()
                .filter(|r| r.outcome == Outcome::Solution(Vec::new()).name())
                .map(|r| r.backtracks)
                .collect();
            let all: Vec<u64> = runs.iter().map(|r| r.backtracks).collect();
            let problems = runs.len();
            SearchSummary {
                heuristic: id.name(),
                problems,
                solved: solved.len(),
                median_backtracks: median(&all),
                mean_backtracks: if all.is_empty() {
                    f64::NAN
                } else {
                    all.iter().sum::<u64>() as f64 / all.len() as f64
                },
                curve: grid
                    .iter()
                    .map(|&b| {
                        if problems == 0 {
                            0.0
                        } else {
                            solved.iter().filter(|&&s| s <= b).count() as f64 / problems as f64
                        }
                    })
                    .collect(),
            }
        })
        .collect();
    Ok((per_instance.into_iter().flatten().collect(), summaries, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorScan {
    pub n: usize,
    /// Independent cycles added to a random spanning tree.
    pub loops: usize,
    pub domain_sizes: Vec<usize>,
    /// Tightness is drawn uniformly from this range per instance.
    pub p2: [f64; 2],
    pub seed: u64,
    pub attempts: u64,
    pub epsilon: f64,
    pub window: usize,
    /// Minimum one-step residual over the window.
    pub min_swing: f64,
    pub max_iter: usize,
}

impl Default for OscillatorScan {
    fn default() -> Self {
        OscillatorScan {
            n: 5,
            loops: 2,
            domain_sizes: vec![2, 3],
            p2: [0.2, 0.6],
            seed: 0,
            attempts: 10_000,
            epsilon: 1e-10,
            window: 10,
            min_swing: 1e-3,
            max_iter: 2_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Oscillator {
    pub attempt: u64,
    pub instance: CspInstance,
    pub config: PropagationConfig,
    pub history: Vec<RoundRecord>,
    pub status: Status,
}

impl OscillatorScan {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.domain_sizes.is_empty() || self.domain_sizes.contains(&0) {
            return Err(Error::InvalidConfig("oscillator scans need n >= 3 and nonempty domains".into()));
        }
        if self.loops > self.n * (self.n - 1) / 2 - (self.n - 1) {
            return Err(Error::InvalidConfig(format!("{} vertices cannot carry {} loops", self.n, self.loops)));
        }
        if !(0.0..=1.0).contains(&self.p2[0]) || !(self.p2[0]..=1.0).contains(&self.p2[1]) {
            return Err(Error::InvalidConfig("p2 range must lie in [0, 1]".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn config(&self) -> PropagationConfig {
        PropagationConfig {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            oscillation_window: self.window,
            record_history: true,
            ..Default::default()
        }
    }

    /// The candidate examined at `attempt`.
    pub fn candidate(&self, attempt: u64) -> Result<CspInstance> {
        let mut rng = substream(self.seed, &[attempt]);
        let m = self.domain_sizes[rng.gen_range(0..self.domain_sizes.len())];
        let p2 = self.p2[0] + (self.p2[1] - self.p2[0]) * rng.gen::<f64>();
        let edges = random_loopy_edges(self.n, self.loops, &mut rng);
        let cons = edges
            .into_iter()
            .map(|(x, y)| (x, y, AllowMatrix::from_fn(m, m, |_, _| rng.gen::<f64>() >= p2)))
            .collect();
        CspInstance::new(vec![m; self.n], cons)
    }
}

/// Period-2 check on the last `window` rounds of a trace.
pub fn verify_period_two(history: &[RoundRecord], window: usize, epsilon: f64, min_swing: f64) -> bool {
    history.len() >= window
        && history[history.len() - window..].iter().all(|r| {
            r.residual_two_step.is_some_and(|d| d <= epsilon) && r.residual.is_some_and(|d| d > min_swing)
        })
}

/// First candidate, in attempt order, whose propagation settles into a
/// verified period-2 cycle.
pub fn find_oscillator(scan: &OscillatorScan) -> Result<Option<Oscillator>> {
    scan.validate()?;
    let cfg = scan.config();
    const BATCH: u64 = 256;
    let mut start = 0;
    while start < scan.attempts {
        let end = (start + BATCH).min(scan.attempts);
        let found = (start..end)
            .into_par_iter()
            .map(|attempt| -> Result<Option<Oscillator>> {
                let instance = scan.candidate(attempt)?;
                let res = propagate(&instance, &cfg)?;
                let history = res.history.unwrap_or_default();
                if res.status == Status::Oscillating(2) && verify_period_two(&history, scan.window, scan.epsilon, scan.min_swing) {
                    return Ok(Some(Oscillator {
                        attempt,
                        instance,
                        config: cfg,
                        history,
                        status: res.status,
                    }));
                }
                Ok(None)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .next();
        if found.is_some() {
            return Ok(found);
        }
        start = end;
    }
    Ok(None)
}

/// Renders one CSV table (RFC 4180 quoting, `\n` line ends).
pub fn csv_table<R, F>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = Vec<F>>,
    F: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

fn fmt_or_empty<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn accuracy_rows_csv(rows: &[AccuracyRow]) -> String {
    csv_table(
        &["instance", "method", "r", "status", "iterations", "min_mass"],
        rows.iter().map(|r| {
            vec![
                r.instance.clone(),
                r.method.to_string(),
                fmt_opt(r.r),
                r.status.clone(),
                r.iterations.to_string(),
                fmt_or_empty(r.min_mass),
            ]
        }),
    )
}

pub fn accuracy_summary_csv(summaries: &[AccuracySummary]) -> String {
    csv_table(
        &["method", "problems", "undefined", "nonconverged", "nonconvergence_rate", "mean_r", "mean_r_all", "pooled_r"],
        summaries.iter().map(|s| {
            vec![
                s.method.to_string(),
                s.problems.to_string(),
                s.undefined.to_string(),
                s.nonconverged.to_string(),
                s.nonconvergence_rate().to_string(),
                fmt_opt(s.mean_r),
                fmt_opt(s.mean_r_all),
                fmt_opt(s.pooled_r),
            ]
        }),
    )
}

pub fn search_rows_csv(rows: &[SearchRow]) -> String {
    csv_table(
        &["instance", "heuristic", "outcome", "backtracks", "nodes", "propagation_rounds"],
        rows.iter().map(|r| {
            vec![
                r.instance.clone(),
                r.heuristic.clone(),
                r.outcome.to_string(),
                r.backtracks.to_string(),
                r.nodes.to_string(),
                r.propagation_rounds.to_string(),
            ]
        }),
    )
}

pub fn search_summary_csv(summaries: &[SearchSummary]) -> String {
    csv_table(
        &["heuristic", "problems", "solved", "median_backtracks", "mean_backtracks"],
        summaries.iter().map(|s| {
            vec![
                s.heuristic.clone(),
                s.problems.to_string(),
                s.solved.to_string(),
                s.median_backtracks.to_string(),
                s.mean_backtracks.to_string(),
            ]
        }),
    )
}

/// Cumulative fraction solved: one row per budget, one column per heuristic.
pub fn curve_csv(summaries: &[SearchSummary], grid: &[u64]) -> String {
    let header: Vec<&str> = std::iter::once("budget").chain(summaries.iter().map(|s| s.heuristic.as_str())).collect();
    csv_table(
        &header,
        grid.iter().enumerate().map(|(i, b)| {
            std::iter::once(b.to_string())
                .chain(summaries.iter().map(|s| s.curve[i].to_string()))
                .collect::<Vec<_>>()
        }),
    )
}

pub fn corpus_csv(corpus: &Corpus) -> String {
    csv_table(
        &["instance", "n", "m", "p1", "p2", "seed", "edges", "solutions"],
        corpus.entries.iter().map(|e| {
            vec![
                e.id.clone(),
                e.gen.n.to_string(),
                e.gen.m.to_string(),
                e.gen.p1.to_string(),
                e.gen.p2.to_string(),
                e.gen.seed.to_string(),
                e.instance.num_edges().to_string(),
                fmt_or_empty(e.solutions),
            ]
        }),
    )
}

/// Per-round residual trace.
pub fn history_csv(history: &[RoundRecord]) -> String {
    csv_table(
        &["k", "residual", "residual_two_step", "min_mass"],
        history.iter().map(|r| {
            vec![
                r.k.to_string(),
                fmt_or_empty(r.residual),
                fmt_or_empty(r.residual_two_step),
                r.min_mass.to_string(),
            ]
        }),
    )
}

/// `# `-prefixed metadata block: tool version, the study spec echo and corpus
/// filtering notes.
pub fn metadata_block(kind: &str, spec_echo: &str, corpus: Option<&Corpus>) -> String {
    let mut out = format!("# tool: pac {}\n# study: {kind}\n", env!("CARGO_PKG_VERSION"));
    out.push_str("# spec:\n");
    for line in spec_echo.lines() {
        let _ = writeln!(out, "#   {line}");
    }
    if let Some(c) = corpus {
        let _ = writeln!(out, "# corpus: {} instances", c.entries.len());
        for (reason, count) in &c.dropped {
            let _ = writeln!(out, "# dropped: {count} ({reason})");
        }
        for f in &c.short_families {
            let _ = writeln!(out, "# warning: family {f} ran out of attempts");
        }
    }
    out
}
