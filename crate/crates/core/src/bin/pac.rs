use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pac_core::ac3::{ac3_with, Ac3Status, DomainSet, QueueDiscipline};
use pac_core::baselines::{sink_ordering, ForestStrategy};
use pac_core::estimate::{estimate, EstimateOptions, EstimateReport, Method};
use pac_core::format::{parse_instance, write_instance};
use pac_core::generator::{generate, generate_tree, GenSpec, PRNG_NAME};
use pac_core::harness::{
    accuracy_rows_csv, accuracy_summary_csv, build_corpus, corpus_csv, csv_table, curve_csv, find_oscillator, history_csv,
    metadata_block, run_accuracy_study, run_search_study, search_rows_csv, search_summary_csv, OscillatorScan,
    StudySpec,
};
use pac_core::oracle::{enumerate, frequencies};
use pac_core::pac::{propagate, Mode, PropagationConfig};
use pac_core::search::{peleg_solve, solve, BeliefSource, HeuristicSpec, Limits, ValueRule, VarRule};
use pac_core::{CspInstance, Var};

#[derive(Parser)]
#[command(name = "pac", version, about = "Solution probabilities for binary CSPs by probabilistic arc consistency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run AC-3 and print surviving values.
    Ac3(Ac3Args),
    /// Run probabilistic arc consistency.
    Pac(PacArgs),
    /// Count solutions exhaustively.
    Count(CountArgs),
    /// Estimate solution probabilities with any method.
    Estimate(EstimateArgs),
    /// Search for a solution.
    Solve(SolveArgs),
    /// Correlation of estimates with exact probabilities over a corpus.
    StudyAccuracy(StudyArgs),
    /// Backtracks per heuristic over a corpus.
    StudySearch(StudyArgs),
    /// Scan small loopy instances for period-2 oscillation.
    FindOscillator(OscillatorArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    p1: f64,
    #[arg(long)]
    p2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random tree topology instead of density p1.
    #[arg(long)]
    tree: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Ac3Args {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Queue::Fifo)]
    queue: Queue,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Queue {
    Fifo,
    Lifo,
    Random,
}

#[derive(Args, Clone)]
struct PropagationArgs {
    #[arg(long, default_value_t = PropagationConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = PropagationConfig::default().max_iter)]
    max_iter: usize,
}

impl PropagationArgs {
    fn config(&self, mode: Mode) -> PropagationConfig {
        PropagationConfig {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            mode,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct PacArgs {
    instance: PathBuf,
    #[command(flatten)]
    propagation: PropagationArgs,
    #[arg(long, default_value = "standard")]
    mode: Mode,
    /// Write the per-round residual trace to this file.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    instance: PathBuf,
    #[arg(long)]
    cap: Option<u64>,
    /// Also print per-value solution frequencies.
    #[arg(long)]
    frequencies: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    instance: PathBuf,
    #[arg(long, default_value = "pac")]
    method: Method,
    /// Root of the SST tree.
    #[arg(long)]
    root: Option<Var>,
    /// UP sink; the ordering is by decreasing distance to it.
    #[arg(long, conflicts_with = "ordering")]
    sink: Option<Var>,
    /// Explicit comma-separated UP ordering, sink last.
    #[arg(long, value_delimiter = ',')]
    ordering: Option<Vec<Var>>,
    #[arg(long)]
    forest_strategy: Option<ForestStrategy>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    propagation: PropagationArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VarRuleArg {
    Lex,
    FirstFail,
    Brelaz,
    MaxBelief,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ValRuleArg {
    Lex,
    MaxBelief,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BeliefArg {
    None,
    Pac,
    Peleg,
    Sst,
    Up,
    Mst,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = VarRuleArg::Lex)]
    var_rule: VarRuleArg,
    #[arg(long, value_enum, default_value_t = ValRuleArg::Lex)]
    val_rule: ValRuleArg,
    #[arg(long, value_enum, default_value_t = BeliefArg::None)]
    belief: BeliefArg,
    /// Compute beliefs once before search (default).
    #[arg(long = "static", conflicts_with = "dynamic")]
    static_: bool,
    /// Recompute beliefs before every variable selection.
    #[arg(long)]
    dynamic: bool,
    /// Defaults to 1e-5, or 0.1 with --dynamic.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Defaults to 1000, or 50 with --dynamic.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_backtracks: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study spec.
    #[arg(long)]
    spec: PathBuf,
    /// Per-run rows.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-method summary.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Cumulative solved-within-budget table (search study).
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Corpus listing.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct OscillatorArgs {
    /// TOML scan spec; flags below are used when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    attempts: u64,
    /// Where to write the instance found.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write its residual trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn read_instance(path: &Path) -> Result<CspInstance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn version_line() -> String {
    format!("# tool: pac {}\n", env!("CARGO_PKG_VERSION"))
}

fn beliefs_csv(beliefs: &[Vec<f64>]) -> String {
    csv_table(
        &["var", "value", "prob"],
        beliefs
            .iter()
            .enumerate()
            .flat_map(|(x, b)| b.iter().enumerate().map(move |(i, p)| vec![x.to_string(), i.to_string(), p.to_string()])),
    )
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let (inst, mut header) = if a.tree {
        let inst = generate_tree(a.n, a.m, a.p2, a.seed)?;
        let header = vec![
            format!("generator: random-tree n={} m={} p2={} seed={}", a.n, a.m, a.p2, a.seed),
            format!("prng: {PRNG_NAME}"),
        ];
        (inst, header)
    } else {
        let spec = GenSpec { n: a.n, m: a.m, p1: a.p1, p2: a.p2, seed: a.seed };
        (generate(&spec)?, spec.header())
    };
    header.insert(0, format!("tool: pac {}", env!("CARGO_PKG_VERSION")));
    emit(a.out.as_deref(), &write_instance(&inst, &header))
}

fn cmd_ac3(a: Ac3Args) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let discipline = match a.queue {
        Queue::Fifo => QueueDiscipline::Fifo,
        Queue::Lifo => QueueDiscipline::Lifo,
        Queue::Random => QueueDiscipline::Random(a.seed),
    };
    let out = ac3_with(&inst, DomainSet::full(&inst), discipline)?;
    let status = match out.status {
        Ac3Status::Consistent => "consistent".to_string(),
        Ac3Status::Wipeout(x) => format!("wipeout {x}"),
    };
    let mut text = version_line();
    let _ = writeln!(text, "# status: {status}\n# removals: {}\n# revisions: {}", out.removals, out.revisions);
    text.push_str(&csv_table(
        &["var", "values"],
        (0..inst.num_vars()).map(|x| {
            let values: Vec<String> = out.domains.values(x).map(|v| v.to_string()).collect();
            vec![x.to_string(), values.join(" ")]
        }),
    ));
    emit(None, &text)
}

fn cmd_pac(a: PacArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let mut cfg = a.propagation.config(a.mode);
    cfg.record_history = a.history.is_some();
    let res = propagate(&inst, &cfg)?;
    let mut text = version_line();
    let _ = writeln!(
        text,
        "# mode: {}\n# epsilon: {}\n# max_iter: {}\n# status: {}\n# iterations: {}\n# min_mass: {}",
        cfg.mode.name(),
        cfg.epsilon,
        cfg.max_iter,
        res.status,
        res.iterations,
        res.min_mass
    );
    text.push_str(&beliefs_csv(&res.beliefs));
    if let (Some(path), Some(history)) = (a.history.as_deref(), res.history.as_ref()) {
        emit(Some(path), &history_csv(history))?;
    }
    emit(a.out.as_deref(), &text)
}

fn cmd_count(a: CountArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let census = enumerate(&inst, a.cap);
    let mut text = version_line();
    let _ = writeln!(text, "# total: {}\n# truncated: {}", census.total, census.truncated);
    if a.frequencies {
        text.push_str(&beliefs_csv(&frequencies(&census)?));
    } else {
        let _ = writeln!(text, "total\n{}", census.total);
    }
    emit(a.out.as_deref(), &text)
}

fn report_csv(report: &EstimateReport) -> String {
    let mut text = version_line();
    let _ = writeln!(text, "# method: {}", report.method);
    for (k, v) in &report.metadata {
        let _ = writeln!(text, "# {k}: {v}");
    }
    let _ = writeln!(text, "# status: {}\n# iterations: {}", report.status_text(), report.iterations);
    text.push_str(&beliefs_csv(&report.beliefs));
    text
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let ordering = match (a.sink, a.ordering) {
        (Some(s), _) => Some(sink_ordering(&inst, s)?),
        (None, o) => o,
    };
    let opts = EstimateOptions {
        propagation: a.propagation.config(Mode::Standard),
        forest_strategy: a.forest_strategy,
        seed: a.seed,
        root: a.root,
        ordering,
    };
    let report = estimate(&inst, a.method, &opts)?;
    emit(a.out.as_deref(), &report_csv(&report))
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let base = if a.dynamic { PropagationConfig::relaxed() } else { PropagationConfig::default() };
    let cfg = PropagationConfig {
        epsilon: a.epsilon.unwrap_or(base.epsilon),
        max_iter: a.max_iter.unwrap_or(base.max_iter),
        ..Default::default()
    };
    let limits = Limits { max_backtracks: a.max_backtracks, max_nodes: None };
    let method = match a.belief {
        BeliefArg::None => None,
        BeliefArg::Pac => Some(Method::Pac),
        BeliefArg::Peleg => Some(Method::Peleg),
        BeliefArg::Sst => Some(Method::Sst),
        BeliefArg::Up => Some(Method::Up),
        BeliefArg::Mst => Some(Method::Mst),
    };
    let opts = EstimateOptions { propagation: cfg, seed: a.seed, ..Default::default() };
    let beliefs = match method {
        None => BeliefSource::None,
        Some(method) if a.dynamic => BeliefSource::Dynamic { method, options: opts },
        Some(method) => BeliefSource::Static(estimate(&inst, method, &opts)?),
    };
    let spec = HeuristicSpec {
        var_rule: match a.var_rule {
            VarRuleArg::Lex => VarRule::Lex,
            VarRuleArg::FirstFail => VarRule::FirstFail,
            VarRuleArg::Brelaz => VarRule::Brelaz,
            VarRuleArg::MaxBelief => VarRule::MaxBelief,
            VarRuleArg::Random => VarRule::Random(a.seed),
        },
        value_rule: match a.val_rule {
            ValRuleArg::Lex => ValueRule::Lex,
            ValRuleArg::MaxBelief => ValueRule::MaxBelief,
            ValRuleArg::Random => ValueRule::Random(a.seed),
        },
        beliefs,
    };
    let peleg_decode = a.belief == BeliefArg::Peleg && !a.dynamic && a.val_rule == ValRuleArg::MaxBelief && a.var_rule == VarRuleArg::Lex;
    let static_rounds = match &spec.beliefs {
        BeliefSource::Static(r) => r.status.map_or(0, |_| r.iterations as u64 + 1),
        _ => 0,
    };
    let result = if peleg_decode {
        peleg_solve(&inst, &cfg, limits)?
    } else {
        let mut r = solve(&inst, &spec, limits)?;
        r.propagation_rounds += static_rounds;
        r
    };
    let heuristic = format!(
        "var={};val={};belief={};{}",
        a.var_rule.to_possible_value().expect("named").get_name(),
        a.val_rule.to_possible_value().expect("named").get_name(),
        a.belief.to_possible_value().expect("named").get_name(),
        if a.dynamic { "dynamic" } else { "static" }
    );
    let mut text = version_line();
    if let pac_core::search::Outcome::Solution(s) = &result.outcome {
        let values: Vec<String> = s.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(text, "# solution: {}", values.join(" "));
    }
    if !result.notes.is_empty() {
        let _ = writeln!(text, "# notes: {}", result.notes);
    }
    text.push_str(&csv_table(
        &["instance", "heuristic", "outcome", "backtracks", "nodes", "propagation_rounds"],
        [vec![
            a.instance.display().to_string(),
            heuristic,
            result.outcome.name().to_string(),
            result.backtracks.to_string(),
            result.nodes.to_string(),
            result.propagation_rounds.to_string(),
        ]],
    ));
    emit(None, &text)
}

fn load_study(path: &Path) -> Result<StudySpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(StudySpec::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn cmd_study_accuracy(a: StudyArgs) -> Result<()> {
    let spec = load_study(&a.spec)?;
    let corpus = build_corpus(&spec.corpus)?;
    let (rows, summaries) = run_accuracy_study(&corpus, &spec.accuracy)?;
    let meta = metadata_block("accuracy", &spec.to_toml(), Some(&corpus));
    if let Some(p) = &a.corpus {
        emit(Some(p), &format!("{meta}{}", corpus_csv(&corpus)))?;
    }
    if let Some(p) = &a.out {
        emit(Some(p), &format!("{meta}{}", accuracy_rows_csv(&rows)))?;
    }
    emit(a.summary.as_deref(), &format!("{meta}{}", accuracy_summary_csv(&summaries)))
}

fn cmd_study_search(a: StudyArgs) -> Result<()> {
    let spec = load_study(&a.spec)?;
    let corpus = build_corpus(&spec.corpus)?;
    let (rows, summaries, grid) = run_search_study(&corpus, &spec.search, spec.corpus.seed)?;
    let meta = metadata_block("search", &spec.to_toml(), Some(&corpus));
    if let Some(p) = &a.corpus {
        emit(Some(p), &format!("{meta}{}", corpus_csv(&corpus)))?;
    }
    if let Some(p) = &a.out {
        emit(Some(p), &format!("{meta}{}", search_rows_csv(&rows)))?;
    }
    if let Some(p) = &a.curve {
        emit(Some(p), &format!("{meta}{}", curve_csv(&summaries, &grid)))?;
    }
    emit(a.summary.as_deref(), &format!("{meta}{}", search_summary_csv(&summaries)))
}

fn cmd_find_oscillator(a: OscillatorArgs) -> Result<()> {
    let scan = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<OscillatorScan>(&text)
                .map_err(|e| pac_core::Error::InvalidConfig(e.to_string()))
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => OscillatorScan { seed: a.seed, attempts: a.attempts, ..Default::default() },
    };
    let echo = toml::to_string(&scan).expect("scan serializes");
    let meta = metadata_block("find-oscillator", &echo, None);
    let Some(found) = find_oscillator(&scan)? else {
        emit(None, &format!("{meta}# result: not found\n"))?;
        return Ok(());
    };
    let mut header: Vec<String> = meta.lines().map(|l| l.trim_start_matches("# ").to_string()).collect();
    header.push(format!("attempt: {}", found.attempt));
    header.push(format!("status: {}", found.status));
    emit(a.out.as_deref(), &write_instance(&found.instance, &header))?;
    let trace = format!("{meta}# attempt: {}\n# status: {}\n{}", found.attempt, found.status, history_csv(&found.history));
    match &a.trace {
        Some(p) => emit(Some(p), &trace),
        None if a.out.is_some() => emit(None, &format!("{meta}# attempt: {}\n# status: {}\n", found.attempt, found.status)),
        None => Ok(()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<pac_core::Error>() {
        Some(e) if e.is_numeric() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Ac3(a) => cmd_ac3(a),
        Command::Pac(a) => cmd_pac(a),
        Command::Count(a) => cmd_count(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::StudyAccuracy(a) => cmd_study_accuracy(a),
        Command::StudySearch(a) => cmd_study_search(a),
        Command::FindOscillator(a) => cmd_find_oscillator(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
